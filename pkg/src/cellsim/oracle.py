"""Switched-state reference simulator for validating the averaged engine.

Integrates the piecewise-LTI switched circuit with the trapezoidal rule at
a fine fixed substep.  Within each switching period the active switch
conducts first, then the passive side; a diode stops conducting the moment
its inductor current crosses zero (the crossing time is located by linear
interpolation) and the branch then carries exactly zero current for the
rest of the period.  At every topology change the algebraic quantities are
re-solved so the integration restarts from consistent values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import SimConfig, Trace
from .netlist import GROUND, CellKind, Circuit, SwitchType

MIN_SUBSTEPS = 100

ON, OFF, OPEN = "on", "off", "open"


class OracleError(RuntimeError):
    pass


@dataclass
class SignalError:
    name: str
    max_error: float
    startup_error: float
    scale: float


@dataclass
class ComparisonReport:
    skip_fraction: float
    skipped_periods: int
    rows: list[SignalError]

    @property
    def max_error(self) -> float:
        return max((r.max_error for r in self.rows), default=0.0)

    def passed(self, tol: float) -> bool:
        return self.max_error <= tol


class SwitchedTrace:
    """Uniform samples plus per-period averages of the switched simulation."""

    def __init__(self, circuit: Circuit, config: SimConfig, substeps: int):
        self.circuit = circuit
        self.config = config
        self.substeps = substeps
        self.node_names = circuit.non_ground_nodes
        self.cell_names = tuple(x.name for x in circuit.cells)
        self.cap_names = tuple(c.name for c in circuit.capacitors)
        self.vsrc_names = tuple(v.name for v in circuit.vsources)
        self.times: np.ndarray = np.empty(0)
        self.samples: np.ndarray = np.empty((0, 0))
        self.period_averages: dict[str, np.ndarray] = {}
        self.dcm_flags: np.ndarray = np.empty((0, 0), dtype=bool)
        self.off_duty: np.ndarray = np.empty((0, 0))

    @property
    def n_periods(self) -> int:
        return self.config.n_periods

    def _sample_col(self, name: str) -> int:
        nn, ncells, ncaps = len(self.node_names), len(self.cell_names), len(self.cap_names)
        for i, n in enumerate(self.node_names):
            if name == f"v({n})":
                return i
        for i, n in enumerate(self.cell_names):
            if name == f"iL({n})":
                return nn + i
        for i, n in enumerate(self.cap_names):
            if name == f"vC({n})":
                return nn + ncells + i
        for i, n in enumerate(self.vsrc_names):
            if name == f"i({n})":
                return nn + ncells + ncaps + i
        raise KeyError(f"unknown sampled signal {name!r}")

    def sample_series(self, name: str) -> np.ndarray:
        return self.samples[:, self._sample_col(name)]


def simulate_switched(
    circuit: Circuit, config: SimConfig | None = None, substeps: int | None = None
) -> SwitchedTrace:
    """Run the switched-state simulation; ``substeps`` per switching period."""
    if config is None:
        config = SimConfig.from_circuit(circuit)
    if substeps is None:
        substeps = circuit.directives.oracle_substeps
    if substeps < MIN_SUBSTEPS:
        raise ValueError(f"oracle needs at least {MIN_SUBSTEPS} substeps per period, got {substeps}")
    sim = _SwitchedSim(circuit, config, substeps)
    return sim.run()


class _SwitchedSim:
    def __init__(self, circuit: Circuit, config: SimConfig, substeps: int):
        self.circuit = circuit
        self.config = config
        self.substeps = substeps
        self.nodes = circuit.non_ground_nodes
        self.node_idx = {n: i for i, n in enumerate(self.nodes)}
        self.nn = len(self.nodes)
        self.nv = len(circuit.vsources)
        self.nc = len(circuit.capacitors)
        self.nx_cells = len(circuit.cells)
        self.cap_g = None  # filled per step size
        self._step_cache: dict = {}
        self._reinit_cache: dict = {}

    def _col(self, node: str) -> int | None:
        return None if node == GROUND else self.node_idx[node]

    # --- branch geometry per cell phase -------------------------------
    def _branch(self, cell, phase):
        """KCL injections and inductor-voltage expression for one phase.

        Returns (kcl terms [(node, +1 leaving per unit branch current)],
        voltage terms [(node, coeff)]) with v_L = sum(coeff * v(node)).
        """
        if phase == ON:
            kcl = [(cell.node_active, 1.0), (cell.node_common, -1.0)]
            volt = [(cell.node_active, 1.0), (cell.node_common, -1.0)]
        elif cell.kind is CellKind.BASIC:
            kcl = [(cell.node_passive, 1.0), (cell.node_common, -1.0)]
            volt = [(cell.node_passive, 1.0), (cell.node_common, -1.0)]
        else:
            inv_n = 1.0 / cell.turns_ratio
            kcl = [(cell.node_passive, -inv_n), (cell.node_common, inv_n)]
            volt = [(cell.node_passive, -inv_n), (cell.node_common, inv_n)]
        return kcl, volt

    # --- step system ----------------------------------------------------
    def _step_system(self, phases: tuple[str, ...], h: float):
        key = (phases, h)
        hit = self._step_cache.get(key)
        if hit is not None:
            return hit
        conducting = [i for i, p in enumerate(phases) if p != OPEN]
        nx = self.nn + self.nv + len(conducting)
        a = np.zeros((nx, nx))
        z0 = np.zeros(nx)

        for r in self.circuit.resistors:
            g = 1.0 / r.ohms
            for n1, n2 in ((r.node1, r.node2), (r.node2, r.node1)):
                row = self._col(n1)
                if row is None:
                    continue
                a[row, row] += g
                c2 = self._col(n2)
                if c2 is not None:
                    a[row, c2] -= g
        for j, v in enumerate(self.circuit.vsources):
            col = self.nn + j
            for node, sign in ((v.node_pos, 1.0), (v.node_neg, -1.0)):
                r_ = self._col(node)
                if r_ is not None:
                    a[r_, col] += sign
                    a[col, r_] += sign
            z0[col] = v.volts
        for i in self.circuit.isources:
            r_ = self._col(i.node_pos)
            if r_ is not None:
                z0[r_] -= i.amps
            r_ = self._col(i.node_neg)
            if r_ is not None:
                z0[r_] += i.amps

        geq = np.array([2.0 * c.farads / h for c in self.circuit.capacitors])
        cap_rows = []
        for j, c in enumerate(self.circuit.capacitors):
            p, n_ = self._col(c.node_pos), self._col(c.node_neg)
            if p is not None:
                a[p, p] += geq[j]
            if n_ is not None:
                a[n_, n_] += geq[j]
            if p is not None and n_ is not None:
                a[p, n_] -= geq[j]
                a[n_, p] -= geq[j]
            cap_rows.append((p, n_))

        branch_col = {}
        for k, ci in enumerate(conducting):
            cell = self.circuit.cells[ci]
            col = self.nn + self.nv + k
            branch_col[ci] = col
            row = col
            kcl, volt = self._branch(cell, phases[ci])
            for node, sign in kcl:
                r_ = self._col(node)
                if r_ is not None:
                    a[r_, col] += sign
            a[row, col] = 1.0
            hl = h / (2.0 * cell.inductance)
            for node, coeff in volt:
                c_ = self._col(node)
                if c_ is not None:
                    a[row, c_] -= hl * coeff
        try:
            ainv = np.linalg.inv(a)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"singular switched system in phases {phases}: {exc}") from None

        volt_rows = self._volt_matrix(phases, nx, branch_col)
        hit = (ainv, z0, geq, cap_rows, branch_col, volt_rows, nx)
        self._step_cache[key] = hit
        return hit

    def _volt_matrix(self, phases, nx, branch_col):
        """Rows mapping x -> (v_C per cap, v_L per cell)."""
        mv = np.zeros((self.nc, nx))
        for j, c in enumerate(self.circuit.capacitors):
            p, n_ = self._col(c.node_pos), self._col(c.node_neg)
            if p is not None:
                mv[j, p] += 1.0
            if n_ is not None:
                mv[j, n_] -= 1.0
        ml = np.zeros((self.nx_cells, nx))
        for ci, cell in enumerate(self.circuit.cells):
            if phases[ci] == OPEN:
                continue
            _, volt = self._branch(cell, phases[ci])
            for node, coeff in volt:
                c_ = self._col(node)
                if c_ is not None:
                    ml[ci, c_] += coeff
        return mv, ml

    def _step_with(self, system, h, state):
        (ainv, z0, geq, cap_rows, branch_col, (mv, ml), nx) = system
        v_c, i_c, i_l, v_l = state
        z = z0.copy()
        for j, (p, n_) in enumerate(cap_rows):
            ieq = geq[j] * v_c[j] + i_c[j]
            if p is not None:
                z[p] += ieq
            if n_ is not None:
                z[n_] -= ieq
        for ci, col in branch_col.items():
            cell = self.circuit.cells[ci]
            z[col] = i_l[ci] + h / (2.0 * cell.inductance) * v_l[ci]
        x = ainv @ z
        v_c_new = mv @ x
        i_c_new = geq * (v_c_new - v_c) - i_c
        i_l_new = np.zeros(self.nx_cells)
        for ci, col in branch_col.items():
            i_l_new[ci] = x[col]
        v_l_new = ml @ x
        return x, (v_c_new, i_c_new, i_l_new, v_l_new)

    def _step(self, phases, h, state):
        return self._step_with(self._step_system(phases, h), h, state)

    # --- combined affine step map ---------------------------------------
    # One substep is affine in the flat state s = [v_C, i_C, i_L, v_L]:
    # the solve x and the next state both come from a single matrix apply,
    # which keeps the per-substep cost at one small matmul.
    def _fast_system(self, phases: tuple[str, ...], h: float):
        key = (phases, h, "fast")
        hit = self._step_cache.get(key)
        if hit is not None:
            return hit
        ainv, z0, geq, cap_rows, branch_col, (mv, ml), nx = self._step_system(phases, h)
        nc, ncells = self.nc, self.nx_cells
        ns = 2 * nc + 2 * ncells
        o_ic, o_il, o_vl = nc, 2 * nc, 2 * nc + ncells
        zmap = np.zeros((nx, ns))
        for j, (p, n_) in enumerate(cap_rows):
            if p is not None:
                zmap[p, j] += geq[j]
                zmap[p, o_ic + j] += 1.0
            if n_ is not None:
                zmap[n_, j] -= geq[j]
                zmap[n_, o_ic + j] -= 1.0
        for ci, col in branch_col.items():
            cell = self.circuit.cells[ci]
            zmap[col, o_il + ci] = 1.0
            zmap[col, o_vl + ci] = h / (2.0 * cell.inductance)
        xmap = ainv @ zmap
        xconst = ainv @ z0
        n_of_x = np.zeros((ns, nx))
        k_of_s = np.zeros((ns, ns))
        n_of_x[:nc] = mv
        n_of_x[o_ic : o_ic + nc] = geq[:, None] * mv
        for j in range(nc):
            k_of_s[o_ic + j, j] = -geq[j]
            k_of_s[o_ic + j, o_ic + j] = -1.0
        for ci, col in branch_col.items():
            n_of_x[o_il + ci, col] = 1.0
        n_of_x[o_vl:] = ml
        fmap = n_of_x @ xmap + k_of_s
        gvec = n_of_x @ xconst
        m_combined = np.vstack((fmap, xmap))
        c_combined = np.concatenate((gvec, xconst))
        hit = (m_combined, c_combined)
        self._step_cache[key] = hit
        return hit

    def _flatten(self, state) -> np.ndarray:
        return np.concatenate(state)

    def _unflatten(self, s: np.ndarray):
        nc, ncells = self.nc, self.nx_cells
        return (
            s[:nc].copy(),
            s[nc : 2 * nc].copy(),
            s[2 * nc : 2 * nc + ncells].copy(),
            s[2 * nc + ncells :].copy(),
        )

    def _reinit_flat(self, phases: tuple[str, ...], s: np.ndarray):
        x, state = self._reinit(phases, self._unflatten(s))
        return x, self._flatten(state)

    # --- re-init system (algebraic restart at topology changes) ---------
    def _reinit_system(self, phases: tuple[str, ...]):
        hit = self._reinit_cache.get(phases)
        if hit is not None:
            return hit
        nx = self.nn + self.nv + self.nc
        a = np.zeros((nx, nx))
        z0 = np.zeros(nx)
        for r in self.circuit.resistors:
            g = 1.0 / r.ohms
            for n1, n2 in ((r.node1, r.node2), (r.node2, r.node1)):
                row = self._col(n1)
                if row is None:
                    continue
                a[row, row] += g
                c2 = self._col(n2)
                if c2 is not None:
                    a[row, c2] -= g
        for j, v in enumerate(self.circuit.vsources):
            col = self.nn + j
            for node, sign in ((v.node_pos, 1.0), (v.node_neg, -1.0)):
                r_ = self._col(node)
                if r_ is not None:
                    a[r_, col] += sign
                    a[col, r_] += sign
            z0[col] = v.volts
        for i in self.circuit.isources:
            r_ = self._col(i.node_pos)
            if r_ is not None:
                z0[r_] -= i.amps
            r_ = self._col(i.node_neg)
            if r_ is not None:
                z0[r_] += i.amps
        cap_cols = []
        for j, c in enumerate(self.circuit.capacitors):
            col = self.nn + self.nv + j
            row = col
            p, n_ = self._col(c.node_pos), self._col(c.node_neg)
            if p is not None:
                a[p, col] += 1.0
                a[row, p] += 1.0
            if n_ is not None:
                a[n_, col] -= 1.0
                a[row, n_] -= 1.0
            cap_cols.append(col)
        try:
            ainv = np.linalg.inv(a)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"singular re-init system in phases {phases}: {exc}") from None
        volt_rows = self._volt_matrix(phases, nx, {})
        hit = (ainv, z0, cap_cols, volt_rows, nx)
        self._reinit_cache[phases] = hit
        return hit

    def _reinit(self, phases, state):
        (ainv, z0, cap_cols, (mv, ml), nx) = self._reinit_system(phases)
        v_c, i_c, i_l, v_l = state
        z = z0.copy()
        for j in range(self.nc):
            z[self.nn + self.nv + j] += v_c[j]
        for ci, cell in enumerate(self.circuit.cells):
            if phases[ci] == OPEN:
                continue
            kcl, _ = self._branch(cell, phases[ci])
            for node, sign in kcl:
                r_ = self._col(node)
                if r_ is not None:
                    z[r_] -= sign * i_l[ci]
        x = ainv @ z
        i_c_new = np.array([x[c] for c in cap_cols]) if self.nc else np.zeros(0)
        v_l_new = ml @ x
        return x, (v_c.copy(), i_c_new, i_l.copy(), v_l_new)

    # --- main loop -------------------------------------------------------
    def run(self) -> SwitchedTrace:
        circuit, config = self.circuit, self.config
        trace = SwitchedTrace(circuit, config, self.substeps)
        ts = config.period
        n_periods = config.n_periods
        dt = ts / self.substeps
        cells = circuit.cells
        ncells = self.nx_cells

        s = np.concatenate(
            (
                np.array([c.initial_volts for c in circuit.capacitors], dtype=float),
                np.zeros(self.nc),
                np.array([x.initial_current for x in cells], dtype=float),
                np.zeros(ncells),
            )
        )

        width = self.nn + ncells + self.nc + self.nv
        cap_samples = n_periods * (self.substeps + 8 + 4 * max(1, ncells)) + 2
        times = np.empty(cap_samples)
        samples = np.empty((cap_samples, width))
        cursor = 0

        avg_names = (
            [f"v({n})" for n in self.nodes]
            + [f"i({v})" for v in trace.vsrc_names]
            + [f"i({c})" for c in trace.cap_names]
            + [f"vc({c})" for c in trace.cap_names]
        )
        per_cell_names = ["iS", "iD", "iL", "vL", "iL1", "iL2", "VL1", "VL2"]
        for cell in cells:
            avg_names += [f"{v}({cell.name})" for v in per_cell_names]
        averages = {name: np.zeros(n_periods) for name in avg_names}
        dcm_flags = np.zeros((n_periods, ncells), dtype=bool)
        off_duty = np.zeros((n_periods, ncells))

        # tracked integrand vector: nodes, then the flat state [v_C, i_C,
        # i_L, v_L], then voltage-source currents
        nn, nc, nv = self.nn, self.nc, self.nv
        ns = 2 * nc + 2 * ncells
        s_o_il = 2 * nc
        s_o_vl = 2 * nc + ncells
        o_iv = nn + ns
        y_width = o_iv + nv

        def record(t, x, s):
            nonlocal cursor
            times[cursor] = t
            row = samples[cursor]
            row[:nn] = x[:nn]
            row[nn : nn + ncells] = s[s_o_il:s_o_vl]
            row[nn + ncells : nn + ncells + nc] = s[:nc]
            row[nn + ncells + nc :] = x[nn : nn + nv]
            cursor += 1

        def integrand(x, s, buf):
            buf[:nn] = x[:nn]
            buf[nn:o_iv] = s
            buf[o_iv:] = x[nn : nn + nv]
            return buf

        y_a, y_b = np.empty(y_width), np.empty(y_width)

        for n in range(n_periods):
            t0 = n * ts
            phases = [ON] * ncells
            # per-period accumulators
            acc = np.zeros(self.nn + 2 * self.nc + 2 * ncells + self.nv)
            i_s_int = np.zeros(ncells)
            i_d_int = np.zeros(ncells)
            vl_on_int = np.zeros(ncells)
            vl_off_int = np.zeros(ncells)
            t_cond = np.zeros(ncells)
            i_l1 = np.zeros(ncells)
            opened = [False] * ncells

            boundaries = sorted({0.0} | {cell.duty for cell in cells} | {1.0})
            for w0, w1 in zip(boundaries[:-1], boundaries[1:]):
                if w1 <= w0:
                    continue
                for ci, cell in enumerate(cells):
                    if abs(w0 - cell.duty) < 1e-15 and phases[ci] == ON:
                        i_l1[ci] = s[s_o_il + ci]
                        phases[ci] = OFF
                t_start, t_end = t0 + w0 * ts, t0 + w1 * ts
                t = t_start
                key = tuple(phases)
                m_full, c_full = self._fast_system(key, dt)
                watch = [
                    ci
                    for ci, cell in enumerate(cells)
                    if phases[ci] == OFF and cell.switch_type is SwitchType.DIODE
                ]
                x, s = self._reinit_flat(key, s)
                record(t, x, s)
                prev_y = integrand(x, s, y_a)
                y_spare = y_b
                win_acc = np.zeros_like(acc)
                win_t0 = t
                while t < t_end - 1e-18:
                    h = min(dt, t_end - t)
                    if h == dt:
                        u = m_full @ s + c_full
                    else:
                        mm, mc = self._fast_system(key, h)
                        u = mm @ s + mc
                    s_new = u[:ns]
                    x = u[ns:]
                    event_ci, event_h = -1, h
                    for ci in watch:
                        if s_new[s_o_il + ci] < 0.0:
                            i_old = s[s_o_il + ci]
                            h_star = h * (i_old / (i_old - s_new[s_o_il + ci]))
                            if h_star < event_h:
                                event_ci, event_h = ci, h_star
                    if event_ci >= 0 and event_h > 1e-15 * ts:
                        mm, mc = self._fast_system(key, event_h)
                        u = mm @ s + mc
                        s_new = u[:ns]
                        x = u[ns:]
                        h = event_h
                    if event_ci >= 0:
                        s_new[s_o_il + event_ci] = 0.0
                    y = integrand(x, s_new, y_spare)
                    win_acc += (prev_y + y) * (0.5 * h)
                    s = s_new
                    t += h
                    record(t, x, s)
                    prev_y, y_spare = y, prev_y
                    if event_ci >= 0:
                        # close the conduction sub-window, open the diode
                        self._bank_window(
                            phases, win_acc, t - win_t0, acc, i_s_int, i_d_int, vl_on_int, vl_off_int, t_cond
                        )
                        win_acc = np.zeros_like(acc)
                        win_t0 = t
                        phases[event_ci] = OPEN
                        opened[event_ci] = True
                        key = tuple(phases)
                        m_full, c_full = self._fast_system(key, dt)
                        watch = [
                            ci
                            for ci, cell in enumerate(cells)
                            if phases[ci] == OFF and cell.switch_type is SwitchType.DIODE
                        ]
                        x, s = self._reinit_flat(key, s)
                        record(t, x, s)
                        prev_y = integrand(x, s, y_spare)
                        y_spare = y_a if prev_y is y_b else y_b
                self._bank_window(
                    phases, win_acc, t - win_t0, acc, i_s_int, i_d_int, vl_on_int, vl_off_int, t_cond
                )

            # finalize period n
            off = 0
            for i_node in range(self.nn):
                averages[f"v({self.nodes[i_node]})"][n] = acc[i_node] / ts
            off = self.nn
            vc_int = acc[off : off + self.nc]
            ic_int = acc[off + self.nc : off + 2 * self.nc]
            off += 2 * self.nc
            il_int = acc[off : off + ncells]
            vl_int = acc[off + ncells : off + 2 * ncells]
            off += 2 * ncells
            iv_int = acc[off : off + self.nv]
            for j, name in enumerate(trace.vsrc_names):
                averages[f"i({name})"][n] = iv_int[j] / ts
            for j, name in enumerate(trace.cap_names):
                averages[f"i({name})"][n] = ic_int[j] / ts
                averages[f"vc({name})"][n] = vc_int[j] / ts
            for ci, cell in enumerate(cells):
                nm = cell.name
                averages[f"iS({nm})"][n] = i_s_int[ci] / ts
                averages[f"iD({nm})"][n] = i_d_int[ci] / ts
                averages[f"iL({nm})"][n] = il_int[ci] / ts
                averages[f"vL({nm})"][n] = vl_int[ci] / ts
                averages[f"iL1({nm})"][n] = i_l1[ci]
                averages[f"iL2({nm})"][n] = s[s_o_il + ci]
                d = cell.duty
                averages[f"VL1({nm})"][n] = vl_on_int[ci] / (d * ts)
                averages[f"VL2({nm})"][n] = vl_off_int[ci] / t_cond[ci] if t_cond[ci] > 0 else 0.0
                off_duty[n, ci] = t_cond[ci] / ts
                dcm_flags[n, ci] = opened[ci]

        trace.times = times[:cursor].copy()
        trace.samples = samples[:cursor].copy()
        trace.period_averages = averages
        trace.dcm_flags = dcm_flags
        trace.off_duty = off_duty
        return trace

    def _bank_window(self, phases, win_acc, duration, acc, i_s_int, i_d_int, vl_on_int, vl_off_int, t_cond):
        """Fold one constant-topology window into the period accumulators."""
        if duration <= 0:
            return
        acc += win_acc
        off = self.nn + 2 * self.nc
        il_part = win_acc[off : off + self.nx_cells]
        vl_part = win_acc[off + self.nx_cells : off + 2 * self.nx_cells]
        for ci in range(self.nx_cells):
            if phases[ci] == ON:
                i_s_int[ci] += il_part[ci]
                vl_on_int[ci] += vl_part[ci]
            elif phases[ci] == OFF:
                i_d_int[ci] += il_part[ci]
                vl_off_int[ci] += vl_part[ci]
                t_cond[ci] += duration


def compare(avg_trace: Trace, sw_trace: SwitchedTrace, skip_fraction: float = 0.2) -> ComparisonReport:
    """Per-signal worst-case mismatch of per-period averages.

    Errors are normalized by ``max(|steady value|, 0.1)`` per signal, where
    the steady value is the oracle's mean over its last tenth of periods.
    Periods before ``skip_fraction`` of the run contribute to the separate
    ``startup_error`` figure only.
    """
    if not 0.0 <= skip_fraction < 0.5:
        raise ValueError("skip_fraction must be in [0, 0.5)")
    n = avg_trace.n_periods
    if n != sw_trace.n_periods:
        raise ValueError(
            f"mismatched durations: {n} averaged periods vs {sw_trace.n_periods} oracle periods"
        )
    unit_floor = 0.1
    skip = math.ceil(skip_fraction * n)
    rows: list[SignalError] = []
    signals = (
        [f"v({node})" for node in avg_trace.layout.nodes]
        + [f"vc({cap})" for cap in avg_trace.layout.capacitors]
        + [f"iL({cell})" for cell in avg_trace.layout.cells]
    )
    for name in signals:
        a = avg_trace.series(name)
        o = sw_trace.period_averages[name]
        steady = float(np.mean(o[-max(1, n // 10) :]))
        scale = max(abs(steady), unit_floor)
        diff = np.abs(a - o) / scale
        retained = float(diff[skip:].max()) if skip < n else 0.0
        startup = float(diff[:skip].max()) if skip > 0 else 0.0
        rows.append(SignalError(name, retained, startup, scale))
    return ComparisonReport(skip_fraction, skip, rows)
