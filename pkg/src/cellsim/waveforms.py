"""Instantaneous waveform reconstruction and waveform post-processing.

Inductor currents are rebuilt from the three (four in discontinuous
conduction) known per-period points joined by straight segments.
Capacitor voltages superimpose the ripple obtained by integrating the
instantaneous capacitor-current deviation onto the per-period average;
resistor and source currents are held at their period averages, so the
deviation at a capacitor node comes entirely from the cell terminals.

Statistics and Fourier coefficients are computed by exact closed-form
integration over the piecewise-linear segments, never by sampling.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .engine import Trace
from .netlist import GROUND, Capacitor, CellKind, SwitchingCell


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseWaveform:
    """Breakpoint sequence with linear interpolation between points."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise WaveformError("waveform needs matching 1-d times and values with >= 2 points")
        if not np.all(np.diff(t) > 0):
            raise WaveformError("breakpoint times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def value_at(self, t: float | np.ndarray) -> float | np.ndarray:
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class WaveformStats:
    average: float
    minimum: float
    maximum: float
    rms: float


@dataclass(frozen=True)
class Harmonic:
    order: int
    magnitude: float
    phase: float


def _clip(w: PiecewiseWaveform, window: tuple[float, float] | None) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = w.span
    if window is None:
        return w.times, w.values
    t0, t1 = window
    if not (lo - 1e-15 <= t0 < t1 <= hi + 1e-15):
        raise WaveformError(f"window ({t0!r}, {t1!r}) not inside waveform span ({lo!r}, {hi!r})")
    t0, t1 = max(t0, lo), min(t1, hi)
    i0 = np.searchsorted(w.times, t0, side="right")
    i1 = np.searchsorted(w.times, t1, side="left")
    times = np.concatenate(([t0], w.times[i0:i1], [t1]))
    values = np.concatenate(([w.value_at(t0)], w.values[i0:i1], [w.value_at(t1)]))
    keep = np.concatenate(([True], np.diff(times) > 0))
    return times[keep], values[keep]


def stats(w: PiecewiseWaveform, window: tuple[float, float] | None = None) -> WaveformStats:
    """Exact average, extrema and rms over the window (default: full span).

    Linear segments attain their extrema at breakpoints; the average and
    rms use the closed-form segment integrals of ``w`` and ``w**2``.
    """
    times, values = _clip(w, window)
    h = np.diff(times)
    a, b = values[:-1], values[1:]
    total = times[-1] - times[0]
    if total <= 0:
        raise WaveformError("empty stats window")
    integral = np.sum(h * (a + b) / 2.0)
    square_integral = np.sum(h * (a * a + a * b + b * b) / 3.0)
    return WaveformStats(
        average=float(integral / total),
        minimum=float(values.min()),
        maximum=float(values.max()),
        rms=float(math.sqrt(max(square_integral / total, 0.0))),
    )


def spectrum(
    w: PiecewiseWaveform,
    fundamental: float,
    n_harmonics: int,
    window: tuple[float, float] | None = None,
) -> list[Harmonic]:
    """Fourier coefficients at multiples of ``fundamental`` over the window.

    The window must span an integer number of fundamental periods.  Each
    coefficient is the exact integral of the piecewise-linear signal
    against the complex exponential; harmonic 0 is the plain average.
    Phases are referenced to the window start.
    """
    if fundamental <= 0:
        raise WaveformError("fundamental frequency must be positive")
    if n_harmonics < 0:
        raise WaveformError("harmonic count must be non-negative")
    times, values = _clip(w, window)
    total = times[-1] - times[0]
    cycles = total * fundamental
    if abs(cycles - round(cycles)) > 1e-9 * max(1.0, cycles) or round(cycles) < 1:
        raise WaveformError(
            f"window of {total!r} s spans {cycles!r} fundamental periods; an integer count is required"
        )
    tau = times - times[0]
    h = np.diff(tau)
    wa, wb = values[:-1], values[1:]
    slope = (wb - wa) / h
    out = [Harmonic(0, float(abs(np.sum(h * (wa + wb) / 2.0) / total)), _zero_phase(np.sum(h * (wa + wb) / 2.0)))]
    for k in range(1, n_harmonics + 1):
        omega = 2.0 * math.pi * k * fundamental
        e = np.exp(-1j * omega * tau)
        ea, eb = e[:-1], e[1:]
        iw = 1j * omega
        const_part = wa * (ea - eb) / iw
        ramp_part = slope * (-h * eb / iw - (ea - eb) / omega**2)
        coeff = 2.0 / total * np.sum(const_part + ramp_part)
        out.append(Harmonic(k, float(abs(coeff)), float(cmath.phase(coeff))))
    return out


def _zero_phase(integral: float) -> float:
    return 0.0 if integral >= 0 else math.pi


class _Builder:
    """Accumulates breakpoints, merging coincident period-boundary points."""

    def __init__(self, jump_dt: float):
        self.times: list[float] = []
        self.values: list[float] = []
        self.jump_dt = jump_dt

    def add(self, t: float, v: float) -> None:
        if self.times and t <= self.times[-1]:
            prev = self.values[-1]
            if v != prev:
                # genuine discontinuity at a period boundary: keep both
                # values, offsetting the second by a negligible time nudge
                self.times.append(self.times[-1] + self.jump_dt)
                self.values.append(v)
            return
        self.times.append(t)
        self.values.append(v)

    def waveform(self) -> PiecewiseWaveform:
        return PiecewiseWaveform(np.array(self.times), np.array(self.values))


def reconstruct_inductor_current(trace: Trace, cell_name: str) -> PiecewiseWaveform:
    """Piecewise-linear inductor (magnetizing) current of one cell.

    Per period the breakpoints are the period start, the switching instant
    and the period end; discontinuous periods add the zero-crossing point
    and a zero tail.  Boundary points shared by adjacent periods collapse
    to a single breakpoint.
    """
    cell_idx = trace.layout.cells.index(trace.circuit.cell(cell_name).name)
    ts = trace.config.period
    out = _Builder(jump_dt=ts * 1e-9)
    for n, sols in enumerate(trace.cell_solutions):
        sol = sols[cell_idx]
        d = trace.circuit.cells[cell_idx].duty
        out.add(n * ts, sol.i_start)
        out.add(_period_time(n, d, ts), sol.i_switch)
        if sol.mode.dcm:
            out.add(_period_time(n, d + sol.mode.off_duty, ts), 0.0)
            out.add((n + 1) * ts, 0.0)
        else:
            out.add((n + 1) * ts, sol.i_end)
    return out.waveform()


def _period_time(n: int, fraction: float, ts: float) -> float:
    # period boundaries must come out bit-identical between adjacent
    # periods so shared breakpoints collapse
    if fraction >= 1.0:
        return (n + 1) * ts
    return n * ts + fraction * ts


def _terminal_injections(
    cell: SwitchingCell, sol, duty: float
) -> dict[str, list[tuple[float, float, float, float]]]:
    """Instantaneous current injected into each terminal's node.

    Segments are (start fraction, end fraction, start value, end value)
    over one period; values may jump between segments at the switching
    instants.
    """
    d = duty
    dp = sol.mode.off_duty
    i0, i1, i2 = sol.i_start, sol.i_switch, sol.i_end
    tail = [(d + dp, 1.0, 0.0, 0.0)] if sol.mode.dcm else []
    if cell.kind is CellKind.BASIC:
        conduct = [(0.0, d, i0, i1), (d, d + dp, i1, i2)] + tail
        return {
            "c": conduct,
            "a": [(0.0, d, -i0, -i1), (d, 1.0, 0.0, 0.0)],
            "p": [(0.0, d, 0.0, 0.0), (d, d + dp, -i1, -i2)] + tail,
        }
    n = cell.turns_ratio
    return {
        "a": [(0.0, d, -i0, -i1), (d, 1.0, 0.0, 0.0)],
        "p": [(0.0, d, 0.0, 0.0), (d, d + dp, i1 / n, i2 / n)] + tail,
        "c": [(0.0, d, i0, i1), (d, d + dp, -i1 / n, -i2 / n)] + tail,
    }


def _segment_value(segments: list[tuple[float, float, float, float]], f: float, midpoint: float) -> float:
    for fa, fb, va, vb in segments:
        if fa <= midpoint <= fb and fb > fa:
            return va + (vb - va) * (f - fa) / (fb - fa)
    return 0.0


def reconstruct_capacitor_voltage(trace: Trace, cap_name: str) -> PiecewiseWaveform:
    """Capacitor voltage with the intra-period ripple superimposed.

    Within each period the capacitor-current deviation from its average is
    the sum of the cell terminal-current deviations at the capacitor's
    nodes (other elements are held at their period averages).  The ripple
    is the running integral of that deviation divided by C, shifted to
    zero mean over the period and added to the period's average voltage.
    Interior extrema of the integral are emitted as explicit breakpoints.
    """
    cap = trace.circuit.capacitor(cap_name)
    circuit = trace.circuit
    for other in circuit.capacitors:
        if other.name == cap.name:
            continue
        shared = {cap.node_pos, cap.node_neg} & {other.node_pos, other.node_neg} - {GROUND}
        if shared:
            raise WaveformError(
                f"capacitors {cap.name!r} and {other.name!r} share node {shared.pop()!r};"
                " the instantaneous current split is under-determined"
            )

    contributions: list[tuple[float, int, str]] = []  # (sign, cell index, terminal)
    for idx, cell in enumerate(circuit.cells):
        for terminal, node in (("a", cell.node_active), ("p", cell.node_passive), ("c", cell.node_common)):
            sign = 0.0
            if node != GROUND:
                if node == cap.node_pos:
                    sign = 1.0
                elif node == cap.node_neg:
                    sign = -1.0
            if sign:
                contributions.append((sign, idx, terminal))

    ts = trace.config.period
    v_avg = trace.solutions[:, trace.layout.capacitor_voltage_col(cap.name)]
    out = _Builder(jump_dt=ts * 1e-9)

    for n in range(trace.n_periods):
        sols = trace.cell_solutions[n]
        segments_per_contribution = []
        cuts = {0.0, 1.0}
        for sign, idx, terminal in contributions:
            cell = circuit.cells[idx]
            sol = sols[idx]
            segs = _terminal_injections(cell, sol, cell.duty)[terminal]
            avg = sum((vb + va) / 2.0 * (fb - fa) for fa, fb, va, vb in segs)
            segments_per_contribution.append((sign, segs, avg))
            for fa, fb, _, _ in segs:
                cuts.add(fa)
                cuts.add(1.0 if fb > 1.0 - 1e-12 else fb)
        fractions = sorted(f for f in cuts if 0.0 <= f <= 1.0)

        # deviation of the capacitor current on each sub-interval
        samples: list[tuple[float, float]] = [(0.0, 0.0)]
        ripple = 0.0
        for fa, fb in zip(fractions[:-1], fractions[1:]):
            if fb <= fa:
                continue
            mid = (fa + fb) / 2.0
            va = sum(
                sign * (_segment_value(segs, fa, mid) - avg)
                for sign, segs, avg in segments_per_contribution
            )
            vb = sum(
                sign * (_segment_value(segs, fb, mid) - avg)
                for sign, segs, avg in segments_per_contribution
            )
            if va * vb < 0.0:
                fstar = fa + va / (va - vb) * (fb - fa)
                rstar = ripple + 0.5 * va * (fstar - fa) * ts / cap.farads
                samples.append((fstar, rstar))
            ripple += 0.5 * (va + vb) * (fb - fa) * ts / cap.farads
            samples.append((fb, ripple))

        fr = np.array([s[0] for s in samples])
        rv = np.array([s[1] for s in samples])
        mean = float(np.sum(np.diff(fr) * (rv[:-1] + rv[1:]) / 2.0))  # over unit fraction span
        base = float(v_avg[n])
        for f, r in samples:
            out.add(_period_time(n, f, ts), base + r - mean)
    return out.waveform()
