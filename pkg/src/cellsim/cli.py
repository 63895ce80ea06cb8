"""Command-line interface: run, oracle and compare subcommands.

Exit codes: 0 success (compare: all signals within tolerance), 1 compare
tolerance exceeded, 2 input/netlist errors, 3 numerical failure, 4 I/O
failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import replace

import numpy as np

from . import engine, mna, netlist, oracle, svgplot, waveforms

EXIT_OK = 0
EXIT_TOL = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except netlist.NetlistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (engine.EngineError, mna.SingularSystemError, oracle.OracleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellsim", description=__doc__)
    sub = parser.add_subparsers(required=True)

    def common(p):
        p.add_argument("netlist", help="netlist file path")
        p.add_argument("--duration", help="override .TRAN duration (SI suffixes allowed)")
        p.add_argument("--fs", help="override .FS switching frequency")
        p.add_argument(
            "--duty",
            action="append",
            default=[],
            metavar="CELL=D",
            help="override a cell duty ratio (repeatable)",
        )

    p_run = sub.add_parser("run", help="run the averaged simulation")
    common(p_run)
    p_run.add_argument("--avg-out", help="write per-period CSV here")
    p_run.add_argument("--wave-out", help="write instantaneous waveform CSV here")
    p_run.add_argument("--svg", help="write SVG plots of inductor current and capacitor voltage")
    p_run.add_argument("--stats-window", type=float, default=0.1, help="stats window as trailing fraction")
    p_run.add_argument("--dump-system", type=int, metavar="PERIOD", help="dump one period's A, x, z as CSV")
    p_run.add_argument("--dump-out", help="path for --dump-system output")
    p_run.set_defaults(func=cmd_run)

    p_or = sub.add_parser("oracle", help="run the switched-state reference simulation")
    common(p_or)
    p_or.add_argument("--substeps", type=int, help="substeps per switching period (min 100)")
    p_or.add_argument("--avg-out", help="write per-period CSV here")
    p_or.add_argument("--wave-out", help="write sampled waveform CSV here")
    p_or.add_argument("--svg", help="write SVG plots")
    p_or.add_argument("--stats-window", type=float, default=0.1)
    p_or.set_defaults(func=cmd_oracle)

    p_cmp = sub.add_parser("compare", help="run both engines and report per-signal errors")
    common(p_cmp)
    p_cmp.add_argument("--substeps", type=int)
    p_cmp.add_argument("--tol", type=float, default=0.02)
    p_cmp.add_argument("--skip", type=float, default=0.2, help="startup fraction excluded from the metric")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def _load_circuit(args) -> netlist.Circuit:
    with open(args.netlist, "r", encoding="utf-8") as fh:
        text = fh.read()
    circuit = netlist.parse(text)
    directives = circuit.directives
    if args.fs is not None:
        directives = replace(directives, switching_frequency=netlist.parse_value(args.fs))
    if args.duration is not None:
        directives = replace(directives, duration=netlist.parse_value(args.duration))
    cells = list(circuit.cells)
    for override in args.duty:
        name, _, value = override.partition("=")
        if not value:
            raise netlist.NetlistError(f"--duty expects CELL=D, got {override!r}")
        found = False
        for i, cell in enumerate(cells):
            if cell.name.lower() == name.lower():
                cells[i] = replace(cell, duty=netlist.parse_value(value))
                found = True
        if not found:
            raise netlist.NetlistError(f"--duty names unknown cell {name!r}")
    circuit = replace(circuit, directives=directives, cells=tuple(cells))
    netlist.validate(circuit)
    return circuit


def _write_period_csv(path: str, circuit, layout, rows, source: str) -> None:
    cells = circuit.cells
    header = ["period", "t_start"]
    for cell in cells:
        suffix = "" if len(cells) == 1 else f"_{cell.name}"
        header += [f"mode{suffix}", f"d{suffix}", f"d_p{suffix}"]
    header += list(layout.column_names) + ["source"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row + [source])


def _fmtf(x: float) -> str:
    return repr(float(x))


def write_engine_period_csv(path: str, trace: engine.Trace) -> None:
    rows = []
    ts = trace.config.period
    for n in range(trace.n_periods):
        row = [str(n), _fmtf(n * ts)]
        for idx, sol in enumerate(trace.cell_solutions[n]):
            row += [sol.mode.tag, _fmtf(trace.circuit.cells[idx].duty), _fmtf(sol.mode.off_duty)]
        row += [_fmtf(v) for v in trace.solutions[n]]
        rows.append(row)
    _write_period_csv(path, trace.circuit, trace.layout, rows, "averaged")


def write_oracle_period_csv(path: str, sw: oracle.SwitchedTrace) -> None:
    layout = mna.UnknownLayout.from_circuit(sw.circuit)
    rows = []
    ts = sw.config.period
    for n in range(sw.n_periods):
        row = [str(n), _fmtf(n * ts)]
        for ci, cell in enumerate(sw.circuit.cells):
            row += [
                "DCM" if sw.dcm_flags[n, ci] else "CCM",
                _fmtf(cell.duty),
                _fmtf(sw.off_duty[n, ci]),
            ]
        row += [_fmtf(sw.period_averages[name][n]) for name in layout.column_names]
        rows.append(row)
    _write_period_csv(path, sw.circuit, layout, rows, "oracle")


def write_wave_csv(path: str, series: list[tuple[str, np.ndarray, np.ndarray]], source: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["signal", "t", "value", "source"])
        for name, times, values in series:
            for t, v in zip(times, values):
                writer.writerow([name, _fmtf(t), _fmtf(v), source])


def write_system_dump(path: str, system: mna.LinearSystem, x: np.ndarray) -> None:
    layout = system.layout
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eq"] + list(layout.column_names) + ["z"])
        for i, name in enumerate(layout.row_names):
            writer.writerow([name] + [_fmtf(v) for v in system.matrix[i]] + [_fmtf(system.rhs[i])])
        writer.writerow(["solution"] + [_fmtf(v) for v in x] + [""])


def _print_stats(label: str, name: str, st: waveforms.WaveformStats) -> None:
    print(
        f"{label} {name}: avg={st.average:.6g} min={st.minimum:.6g}"
        f" max={st.maximum:.6g} rms={st.rms:.6g}"
    )


def _stats_window(t0: float, t1: float, fraction: float) -> tuple[float, float]:
    fraction = min(max(fraction, 1e-6), 1.0)
    return (t1 - (t1 - t0) * fraction, t1)


def cmd_run(args) -> int:
    circuit = _load_circuit(args)
    started = time.perf_counter()
    trace = engine.run(circuit, capture_period=args.dump_system)
    elapsed = time.perf_counter() - started
    print(f"simulated {trace.n_periods} periods in {elapsed * 1e3:.2f} ms (numerical loop)")

    if args.dump_system is not None:
        if trace.captured is None:
            raise netlist.NetlistError(
                f"--dump-system period {args.dump_system} outside run of {trace.n_periods} periods"
            )
        dump_path = args.dump_out or f"system_period{args.dump_system}.csv"
        write_system_dump(dump_path, *trace.captured)
        print(f"wrote {dump_path}")

    if args.avg_out:
        write_engine_period_csv(args.avg_out, trace)
        print(f"wrote {args.avg_out}")

    waves = []
    for cell in circuit.cells:
        w = waveforms.reconstruct_inductor_current(trace, cell.name)
        waves.append((f"iL({cell.name})", w))
    for cap in circuit.capacitors:
        w = waveforms.reconstruct_capacitor_voltage(trace, cap.name)
        waves.append((f"vC({cap.name})", w))

    if args.wave_out:
        write_wave_csv(args.wave_out, [(n, w.times, w.values) for n, w in waves], "averaged")
        print(f"wrote {args.wave_out}")

    if args.svg:
        panels = [
            svgplot.Panel(name, name, w.times, w.values) for name, w in waves
        ]
        svgplot.write(args.svg, panels)
        print(f"wrote {args.svg}")

    for name, w in waves:
        window = _stats_window(*w.span, args.stats_window)
        _print_stats("stats", name, waveforms.stats(w, window))
    return EXIT_OK


def cmd_oracle(args) -> int:
    circuit = _load_circuit(args)
    substeps = args.substeps if args.substeps is not None else circuit.directives.oracle_substeps
    if substeps < oracle.MIN_SUBSTEPS:
        print(
            f"error: --substeps must be at least {oracle.MIN_SUBSTEPS}, got {substeps}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    started = time.perf_counter()
    sw = oracle.simulate_switched(circuit, substeps=substeps)
    elapsed = time.perf_counter() - started
    print(f"simulated {sw.n_periods} periods x {substeps} substeps in {elapsed * 1e3:.2f} ms")

    if args.avg_out:
        write_oracle_period_csv(args.avg_out, sw)
        print(f"wrote {args.avg_out}")

    series = []
    for cell in circuit.cells:
        series.append((f"iL({cell.name})", sw.times, sw.sample_series(f"iL({cell.name})")))
    for cap in circuit.capacitors:
        series.append((f"vC({cap.name})", sw.times, sw.sample_series(f"vC({cap.name})")))

    if args.wave_out:
        write_wave_csv(args.wave_out, series, "oracle")
        print(f"wrote {args.wave_out}")
    if args.svg:
        panels = [svgplot.Panel(name, name, t, v) for name, t, v in series]
        svgplot.write(args.svg, panels)
        print(f"wrote {args.svg}")

    for name, t, v in series:
        keep = np.concatenate(([True], np.diff(t) > 0))
        w = waveforms.PiecewiseWaveform(t[keep], v[keep])
        window = _stats_window(*w.span, args.stats_window)
        _print_stats("stats", name, waveforms.stats(w, window))
    return EXIT_OK


def cmd_compare(args) -> int:
    circuit = _load_circuit(args)
    substeps = args.substeps if args.substeps is not None else circuit.directives.oracle_substeps
    if substeps < oracle.MIN_SUBSTEPS:
        print(
            f"error: --substeps must be at least {oracle.MIN_SUBSTEPS}, got {substeps}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    trace = engine.run(circuit)
    sw = oracle.simulate_switched(circuit, substeps=substeps)
    report = oracle.compare(trace, sw, skip_fraction=args.skip)
    print(f"signal            max_error  startup_error  scale   (skipped {report.skipped_periods} periods)")
    for row in report.rows:
        print(
            f"{row.name:<16} {row.max_error:>9.3e} {row.startup_error:>13.3e} {row.scale:>7.3g}"
        )
    if report.passed(args.tol):
        print(f"PASS: max error {report.max_error:.3e} <= tol {args.tol:g}")
        return EXIT_OK
    print(f"FAIL: max error {report.max_error:.3e} > tol {args.tol:g}")
    return EXIT_TOL


if __name__ == "__main__":
    sys.exit(main())
