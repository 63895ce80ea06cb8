"""Period-by-period simulation driver.

Each step covers exactly one switching period: predict every cell's
conduction mode from the previous period's port voltages, assemble and
solve the averaged system, then iterate the discontinuous-conduction duty
to a fixed point so the solved mode is self-consistent before carrying
state into the next period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mna
from .cells import CellPeriodInput, CellStepSolution, ConductionMode, cell_averages, classify_mode
from .netlist import Circuit, SwitchType

NEGATIVE_CURRENT_SLACK = 1e-9


class EngineError(RuntimeError):
    """Numerical failure during a simulation run, tagged with the period."""

    def __init__(self, message: str, period: int):
        self.period = period
        super().__init__(f"period {period}: {message}")


@dataclass(frozen=True)
class SimConfig:
    duration: float
    period: float
    dcm_fixed_point_tol: float = 1e-9
    dcm_max_iters: int = 20

    def __post_init__(self):
        if self.duration < self.period * (1.0 - 1e-9):
            raise ValueError("duration must cover at least one switching period")
        if self.dcm_fixed_point_tol <= 0:
            raise ValueError("fixed-point tolerance must be positive")
        if self.dcm_max_iters < 1:
            raise ValueError("at least one fixed-point iteration is required")

    @staticmethod
    def from_circuit(circuit: Circuit, duration: float | None = None) -> "SimConfig":
        d = circuit.directives
        return SimConfig(duration if duration is not None else d.duration, d.period)

    @property
    def n_periods(self) -> int:
        return int(math.floor(self.duration / self.period + 1e-9))


@dataclass
class Trace:
    """Recorded run: one solution vector and cell solution set per period."""

    circuit: Circuit
    config: SimConfig
    layout: mna.UnknownLayout
    solutions: np.ndarray
    cell_solutions: list[tuple[CellStepSolution, ...]]
    states: list[mna.PeriodState]
    final_state: mna.PeriodState
    iterations: np.ndarray
    captured: tuple[mna.LinearSystem, np.ndarray] | None = None

    @property
    def n_periods(self) -> int:
        return self.solutions.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_periods) * self.config.period

    def series(self, name: str) -> np.ndarray:
        """Per-period values of one named unknown, e.g. ``v(2)`` or ``iL(X1)``."""
        return self.solutions[:, self.layout.column_names.index(name)]

    def window(self, fraction: float) -> slice:
        """Index slice covering the trailing ``fraction`` of the run."""
        start = self.n_periods - max(1, int(round(self.n_periods * fraction)))
        return slice(start, self.n_periods)


class _Runner:
    def __init__(self, circuit: Circuit, config: SimConfig):
        self.circuit = circuit
        self.config = config
        self.layout = mna.UnknownLayout.from_circuit(circuit)
        self.cells = circuit.cells
        lay = self.layout
        self.cap_v_cols = np.array(
            [lay.capacitor_voltage_col(c.name) for c in circuit.capacitors], dtype=int
        )
        self.cap_i_cols = np.array(
            [lay.capacitor_current_col(c.name) for c in circuit.capacitors], dtype=int
        )
        self.cell_cols = {
            var: np.array([lay.cell_col(x.name, var) for x in self.cells], dtype=int)
            for var in ("iS", "iD", "iL", "vL", "iL1", "iL2", "VL1", "VL2")
        }
        self._factor_cache: dict[tuple, tuple] = {}

    def initial_state(self) -> mna.PeriodState:
        return mna.initial_state(self.circuit)

    def predict_modes(
        self, state: mna.PeriodState, prev_ports: list[tuple[float, float]] | None
    ) -> list[ConductionMode]:
        """Seed each cell's mode; the first period assumes continuous conduction."""
        if prev_ports is None:
            return [ConductionMode.ccm(x.duty) for x in self.cells]
        modes = []
        for idx, cell in enumerate(self.cells):
            v_on, v_off = prev_ports[idx]
            inp = CellPeriodInput(
                i_start=float(state.cell_current[idx]),
                v_on=v_on,
                v_off=v_off,
                duty=cell.duty,
                inductance=cell.inductance,
                period=self.config.period,
            )
            modes.append(classify_mode(inp, cell.switch_type))
        return modes

    def _factors(self, modes: list[ConductionMode]):
        key = tuple((m.dcm, m.off_duty) for m in modes)
        hit = self._factor_cache.get(key)
        if hit is None:
            matrix = mna.stamp_matrix(self.circuit, self.layout, modes)
            hit = (mna.factorize(matrix), matrix)
            self._factor_cache[key] = hit
        return hit

    def solve_period(
        self,
        state: mna.PeriodState,
        prev_ports: list[tuple[float, float]] | None,
    ) -> tuple[np.ndarray, list[ConductionMode], int]:
        """Solve one period, iterating modes and DCM duties to consistency."""
        modes = self.predict_modes(state, prev_ports)
        period = self.config.period
        tol = self.config.dcm_fixed_point_tol
        last_delta = math.inf
        for iteration in range(1, self.config.dcm_max_iters + 1):
            try:
                factors, matrix = self._factors(modes)
                rhs = mna.build_rhs(self.circuit, self.layout, state)
                x = mna.solve_factored(factors, matrix, rhs)
            except mna.SingularSystemError as exc:
                raise EngineError(str(exc), state.period) from None
            consistent = True
            last_delta = 0.0
            new_modes: list[ConductionMode] = []
            for idx, cell in enumerate(self.cells):
                mode = modes[idx]
                if cell.switch_type is SwitchType.SYNCHRONOUS:
                    new_modes.append(mode)
                    continue
                inp = CellPeriodInput(
                    i_start=float(state.cell_current[idx]),
                    v_on=float(x[self.cell_cols["VL1"][idx]]),
                    v_off=float(x[self.cell_cols["VL2"][idx]]),
                    duty=cell.duty,
                    inductance=cell.inductance,
                    period=period,
                )
                i_end = float(x[self.cell_cols["iL2"][idx]])
                if not mode.dcm:
                    if i_end < -NEGATIVE_CURRENT_SLACK:
                        if inp.v_off >= 0:
                            raise EngineError(
                                f"diode cell {cell.name!r} current went negative with no zero"
                                f" crossing available (end current {i_end:.3e} A)",
                                state.period,
                            )
                        new_modes.append(classify_mode(inp, cell.switch_type))
                        consistent = False
                    else:
                        new_modes.append(mode)
                else:
                    refreshed = classify_mode(inp, cell.switch_type)
                    if not refreshed.dcm:
                        new_modes.append(refreshed)
                        consistent = False
                    else:
                        delta = abs(refreshed.off_duty - mode.off_duty)
                        last_delta = max(last_delta, delta)
                        new_modes.append(refreshed)
                        if delta > tol:
                            consistent = False
            if consistent:
                return x, new_modes, iteration
            modes = new_modes
        raise EngineError(
            f"conduction mode fixed point not reached in {self.config.dcm_max_iters}"
            f" iterations (last duty change {last_delta:.3e})",
            state.period,
        )

    def advance(
        self, state: mna.PeriodState, x: np.ndarray, modes: list[ConductionMode]
    ) -> mna.PeriodState:
        cell_next = x[self.cell_cols["iL2"]].copy()
        for idx, cell in enumerate(self.cells):
            if modes[idx].dcm:
                cell_next[idx] = 0.0
            elif cell.switch_type is SwitchType.DIODE and cell_next[idx] < 0.0:
                cell_next[idx] = 0.0  # within NEGATIVE_CURRENT_SLACK, checked above
        return mna.PeriodState(
            period=state.period + 1,
            cap_voltage=x[self.cap_v_cols].copy(),
            cap_current=x[self.cap_i_cols].copy(),
            cell_current=cell_next,
        )

    def cell_solution(
        self, state: mna.PeriodState, x: np.ndarray, idx: int, mode: ConductionMode
    ) -> CellStepSolution:
        i_end = 0.0 if mode.dcm else float(x[self.cell_cols["iL2"][idx]])
        return CellStepSolution(
            i_start=float(state.cell_current[idx]),
            i_switch=float(x[self.cell_cols["iL1"][idx]]),
            i_end=i_end,
            avg_switch_current=float(x[self.cell_cols["iS"][idx]]),
            avg_diode_current=float(x[self.cell_cols["iD"][idx]]),
            avg_inductor_current=float(x[self.cell_cols["iL"][idx]]),
            avg_inductor_voltage=float(x[self.cell_cols["vL"][idx]]),
            v_on=float(x[self.cell_cols["VL1"][idx]]),
            v_off=float(x[self.cell_cols["VL2"][idx]]),
            mode=mode,
        )


def run(circuit: Circuit, config: SimConfig | None = None, capture_period: int | None = None) -> Trace:
    """Simulate ``floor(duration / period)`` switching periods.

    ``capture_period`` optionally snapshots one period's assembled system
    and solution (for the CLI system dump).
    """
    if config is None:
        config = SimConfig.from_circuit(circuit)
    runner = _Runner(circuit, config)
    n = config.n_periods
    solutions = np.empty((n, runner.layout.size))
    iterations = np.empty(n, dtype=int)
    cell_solutions: list[tuple[CellStepSolution, ...]] = []
    states: list[mna.PeriodState] = []
    captured = None

    state = runner.initial_state()
    prev_ports: list[tuple[float, float]] | None = None
    for period in range(n):
        states.append(state.copy())
        x, modes, iters = runner.solve_period(state, prev_ports)
        solutions[period] = x
        iterations[period] = iters
        sols = tuple(
            runner.cell_solution(state, x, idx, modes[idx]) for idx in range(len(runner.cells))
        )
        cell_solutions.append(sols)
        if capture_period == period:
            matrix = mna.stamp_matrix(circuit, runner.layout, modes)
            rhs = mna.build_rhs(circuit, runner.layout, state)
            captured = (mna.LinearSystem(matrix, rhs, runner.layout), x.copy())
        prev_ports = [(s.v_on, s.v_off) for s in sols]
        state = runner.advance(state, x, modes)

    return Trace(
        circuit=circuit,
        config=config,
        layout=runner.layout,
        solutions=solutions,
        cell_solutions=cell_solutions,
        states=states,
        final_state=state,
        iterations=iterations,
        captured=captured,
    )


def step(
    circuit: Circuit,
    state: mna.PeriodState,
    prev_ports: list[tuple[float, float]] | None = None,
    config: SimConfig | None = None,
) -> tuple[np.ndarray, mna.PeriodState]:
    """Advance a single switching period from an explicit state."""
    if config is None:
        config = SimConfig.from_circuit(circuit)
    runner = _Runner(circuit, config)
    x, modes, _ = runner.solve_period(state, prev_ports)
    return x, runner.advance(state, x, modes)
