"""Per-period linear system of the discretized averaged circuit.

Unknown vector layout: node voltages first (non-ground, netlist order),
then branch currents (voltage sources, then capacitors), then one extra
voltage per capacitor and an eight-variable block per switching cell
(avg switch/diode/inductor currents, avg inductor voltage, the two ramp
endpoint currents and the two interval port voltages).

Capacitors are discretized with the trapezoidal companion
``v_C - R_C * i_C = v_C_prev + R_C * i_C_prev`` with ``R_C = T/(2C)``;
the cell block couples its node injections to the ramp equations with
``G_L = T/L``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .cells import ConductionMode
from .netlist import GROUND, CellKind, Circuit

CELL_VARS = ("iS", "iD", "iL", "vL", "iL1", "iL2", "VL1", "VL2")
CELL_EQS = ("avg_switch", "avg_diode", "avg_inductor", "avg_voltage", "ramp_on", "ramp_off", "port_on", "port_off")

SOLVE_RESIDUAL_TOL = 1e-9
PIVOT_RATIO_TOL = 1e-12


class SingularSystemError(RuntimeError):
    """The assembled system has no reliable solution."""


@dataclass(frozen=True)
class UnknownLayout:
    """Index bookkeeping for one circuit's unknown vector and equations."""

    nodes: tuple[str, ...]
    vsources: tuple[str, ...]
    capacitors: tuple[str, ...]
    cells: tuple[str, ...]

    @staticmethod
    def from_circuit(circuit: Circuit) -> "UnknownLayout":
        return UnknownLayout(
            nodes=circuit.non_ground_nodes,
            vsources=tuple(v.name for v in circuit.vsources),
            capacitors=tuple(c.name for c in circuit.capacitors),
            cells=tuple(x.name for x in circuit.cells),
        )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_branch_currents(self) -> int:
        return len(self.vsources) + len(self.capacitors)

    @property
    def n_extra(self) -> int:
        return len(self.capacitors) + 8 * len(self.cells)

    @property
    def size(self) -> int:
        return self.n_nodes + self.n_branch_currents + self.n_extra

    @cached_property
    def _node_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    def node_col(self, node: str) -> int | None:
        if node == GROUND:
            return None
        return self._node_index[node]

    def vsource_current_col(self, name: str) -> int:
        return self.n_nodes + self.vsources.index(name)

    def capacitor_current_col(self, name: str) -> int:
        return self.n_nodes + len(self.vsources) + self.capacitors.index(name)

    def capacitor_voltage_col(self, name: str) -> int:
        return self.n_nodes + self.n_branch_currents + self.capacitors.index(name)

    def cell_col(self, name: str, var: str) -> int:
        base = self.n_nodes + self.n_branch_currents + len(self.capacitors)
        return base + 8 * self.cells.index(name) + CELL_VARS.index(var)

    # Equation rows: node KCL, voltage-source branch, capacitor branch
    # voltage, capacitor companion, then the per-cell blocks.
    def kcl_row(self, node: str) -> int | None:
        if node == GROUND:
            return None
        return self._node_index[node]

    def vsource_row(self, name: str) -> int:
        return self.n_nodes + self.vsources.index(name)

    def capacitor_voltage_row(self, name: str) -> int:
        return self.n_nodes + len(self.vsources) + self.capacitors.index(name)

    def capacitor_companion_row(self, name: str) -> int:
        return self.n_nodes + self.n_branch_currents + self.capacitors.index(name)

    def cell_row(self, name: str, eq: str) -> int:
        base = self.n_nodes + self.n_branch_currents + len(self.capacitors)
        return base + 8 * self.cells.index(name) + CELL_EQS.index(eq)

    @cached_property
    def column_names(self) -> tuple[str, ...]:
        names = [f"v({n})" for n in self.nodes]
        names += [f"i({v})" for v in self.vsources]
        names += [f"i({c})" for c in self.capacitors]
        names += [f"vc({c})" for c in self.capacitors]
        for cell in self.cells:
            names += [f"{var}({cell})" for var in CELL_VARS]
        return tuple(names)

    @cached_property
    def row_names(self) -> tuple[str, ...]:
        names = [f"kcl({n})" for n in self.nodes]
        names += [f"branch({v})" for v in self.vsources]
        names += [f"voltage({c})" for c in self.capacitors]
        names += [f"companion({c})" for c in self.capacitors]
        for cell in self.cells:
            names += [f"{eq}({cell})" for eq in CELL_EQS]
        return tuple(names)


@dataclass
class PeriodState:
    """State carried from one switching period into the next."""

    period: int
    cap_voltage: np.ndarray
    cap_current: np.ndarray
    cell_current: np.ndarray

    def copy(self) -> "PeriodState":
        return PeriodState(
            self.period,
            self.cap_voltage.copy(),
            self.cap_current.copy(),
            self.cell_current.copy(),
        )


def initial_state(circuit: Circuit) -> PeriodState:
    """Period-0 state from the netlist initial conditions."""
    return PeriodState(
        period=0,
        cap_voltage=np.array([c.initial_volts for c in circuit.capacitors], dtype=float),
        cap_current=np.zeros(len(circuit.capacitors)),
        cell_current=np.array([x.initial_current for x in circuit.cells], dtype=float),
    )


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    layout: UnknownLayout


def assemble(
    circuit: Circuit, state: PeriodState, modes: list[ConductionMode] | tuple[ConductionMode, ...]
) -> LinearSystem:
    """Stamp the full per-period system for the given conduction modes."""
    layout = UnknownLayout.from_circuit(circuit)
    matrix = stamp_matrix(circuit, layout, modes)
    rhs = build_rhs(circuit, layout, state)
    return LinearSystem(matrix, rhs, layout)


def stamp_matrix(
    circuit: Circuit,
    layout: UnknownLayout,
    modes: list[ConductionMode] | tuple[ConductionMode, ...],
) -> np.ndarray:
    if len(modes) != len(circuit.cells):
        raise ValueError("one conduction mode is required per switching cell")
    period = circuit.directives.period
    a = np.zeros((layout.size, layout.size))

    for r in circuit.resistors:
        g = 1.0 / r.ohms
        for n1, n2 in ((r.node1, r.node2), (r.node2, r.node1)):
            row = layout.kcl_row(n1)
            if row is None:
                continue
            a[row, layout.node_col(n1)] += g
            col = layout.node_col(n2)
            if col is not None:
                a[row, col] -= g

    for v in circuit.vsources:
        col = layout.vsource_current_col(v.name)
        row = layout.vsource_row(v.name)
        for node, sign in ((v.node_pos, 1.0), (v.node_neg, -1.0)):
            kcl = layout.kcl_row(node)
            if kcl is not None:
                a[kcl, col] += sign
            ncol = layout.node_col(node)
            if ncol is not None:
                a[row, ncol] += sign

    for c in circuit.capacitors:
        icol = layout.capacitor_current_col(c.name)
        vcol = layout.capacitor_voltage_col(c.name)
        vrow = layout.capacitor_voltage_row(c.name)
        crow = layout.capacitor_companion_row(c.name)
        for node, sign in ((c.node_pos, 1.0), (c.node_neg, -1.0)):
            kcl = layout.kcl_row(node)
            if kcl is not None:
                a[kcl, icol] += sign
            ncol = layout.node_col(node)
            if ncol is not None:
                a[vrow, ncol] += sign
        a[vrow, vcol] -= 1.0
        a[crow, vcol] = 1.0
        a[crow, icol] = -period / (2.0 * c.farads)

    for cell, mode in zip(circuit.cells, modes):
        d = cell.duty
        dp = mode.off_duty
        g_l = period / cell.inductance
        col = {var: layout.cell_col(cell.name, var) for var in CELL_VARS}
        row = {eq: layout.cell_row(cell.name, eq) for eq in CELL_EQS}

        kcl_a = layout.kcl_row(cell.node_active)
        kcl_p = layout.kcl_row(cell.node_passive)
        kcl_c = layout.kcl_row(cell.node_common)
        if cell.kind is CellKind.BASIC:
            # switch draws from a, diode draws from p, inductor feeds c
            if kcl_a is not None:
                a[kcl_a, col["iS"]] += 1.0
            if kcl_p is not None:
                a[kcl_p, col["iD"]] += 1.0
            if kcl_c is not None:
                a[kcl_c, col["iL"]] -= 1.0
        else:
            # flyback: primary loop a->c while the switch conducts, secondary
            # loop delivers iD/n into p (drawn from c) while the diode conducts
            if kcl_a is not None:
                a[kcl_a, col["iS"]] += 1.0
            if kcl_p is not None:
                a[kcl_p, col["iD"]] -= 1.0 / cell.turns_ratio
            if kcl_c is not None:
                a[kcl_c, col["iS"]] -= 1.0
                a[kcl_c, col["iD"]] += 1.0 / cell.turns_ratio

        a[row["avg_switch"], col["iS"]] = 1.0
        a[row["avg_switch"], col["iL1"]] = -d / 2.0
        a[row["avg_diode"], col["iD"]] = 1.0
        a[row["avg_diode"], col["iL1"]] = -dp / 2.0
        a[row["avg_diode"], col["iL2"]] = -dp / 2.0
        a[row["avg_inductor"], col["iL"]] = 1.0
        a[row["avg_inductor"], col["iS"]] = -1.0
        a[row["avg_inductor"], col["iD"]] = -1.0
        a[row["avg_voltage"], col["vL"]] = 1.0
        a[row["avg_voltage"], col["VL1"]] = -d
        a[row["avg_voltage"], col["VL2"]] = -dp
        a[row["ramp_on"], col["iL1"]] = 1.0
        a[row["ramp_on"], col["VL1"]] = -g_l * d
        a[row["ramp_off"], col["iL2"]] = 1.0
        a[row["ramp_off"], col["iL1"]] = -1.0
        a[row["ramp_off"], col["VL2"]] = -g_l * dp

        # VL1 = v(a) - v(c) in both variants
        a[row["port_on"], col["VL1"]] = 1.0
        for node, sign in ((cell.node_active, -1.0), (cell.node_common, 1.0)):
            ncol = layout.node_col(node)
            if ncol is not None:
                a[row["port_on"], ncol] += sign
        a[row["port_off"], col["VL2"]] = 1.0
        if cell.kind is CellKind.BASIC:
            # VL2 = v(p) - v(c)
            for node, sign in ((cell.node_passive, -1.0), (cell.node_common, 1.0)):
                ncol = layout.node_col(node)
                if ncol is not None:
                    a[row["port_off"], ncol] += sign
        else:
            # VL2 = -(v(p) - v(c)) / n
            inv_n = 1.0 / cell.turns_ratio
            for node, sign in ((cell.node_passive, inv_n), (cell.node_common, -inv_n)):
                ncol = layout.node_col(node)
                if ncol is not None:
                    a[row["port_off"], ncol] += sign

    return a


def build_rhs(circuit: Circuit, layout: UnknownLayout, state: PeriodState) -> np.ndarray:
    z = np.zeros(layout.size)
    period = circuit.directives.period
    for i in circuit.isources:
        kcl = layout.kcl_row(i.node_pos)
        if kcl is not None:
            z[kcl] -= i.amps
        kcl = layout.kcl_row(i.node_neg)
        if kcl is not None:
            z[kcl] += i.amps
    for v in circuit.vsources:
        z[layout.vsource_row(v.name)] = v.volts
    for idx, c in enumerate(circuit.capacitors):
        r_c = period / (2.0 * c.farads)
        z[layout.capacitor_companion_row(c.name)] = state.cap_voltage[idx] + r_c * state.cap_current[idx]
    for idx, cell in enumerate(circuit.cells):
        i0 = state.cell_current[idx]
        z[layout.cell_row(cell.name, "avg_switch")] = cell.duty / 2.0 * i0
        z[layout.cell_row(cell.name, "ramp_on")] = i0
    return z


def factorize(matrix: np.ndarray):
    """LU-factor with partial pivoting, rejecting numerically singular pivots."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(matrix)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystemError(f"singular system: {exc}") from None
    pivots = np.abs(np.diag(lu))
    largest = pivots.max() if pivots.size else 0.0
    if largest == 0.0 or pivots.min() < PIVOT_RATIO_TOL * largest:
        raise SingularSystemError(
            f"numerically singular system (pivot ratio {pivots.min():.3e} / {largest:.3e})"
        )
    return lu, piv


def solve_factored(factors, matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    x = scipy.linalg.lu_solve(factors, rhs)
    residual = np.abs(matrix @ x - rhs).max()
    bound = SOLVE_RESIDUAL_TOL * max(1.0, np.abs(rhs).max())
    if residual > bound:
        raise SingularSystemError(
            f"solution residual {residual:.3e} exceeds {bound:.3e}; system is ill-conditioned"
        )
    return x


def solve(system: LinearSystem) -> np.ndarray:
    """Solve one period's system by dense LU with partial pivoting.

    The returned vector satisfies the residual bound
    ``max|A x - z| <= 1e-9 * max(1, max|z|)``.
    """
    return solve_factored(factorize(system.matrix), system.matrix, system.rhs)
