"""Per-period averaged behavior of a switching cell.

Within one switching period of length ``period`` the inductor current is
piecewise linear: it ramps under ``v_on`` while the active switch conducts
(``duty`` fraction of the period), then under ``v_off`` while the passive
side conducts.  A synchronous cell conducts the whole period (continuous
conduction); a diode cell stops conducting when the current reaches zero
(discontinuous conduction), which happens when the off-interval would end
below zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .netlist import SwitchType

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConductionMode:
    """Conduction classification plus the passive-interval duty.

    ``off_duty`` is ``1 - duty`` in continuous conduction, or the diode
    conduction fraction in discontinuous conduction.
    """

    dcm: bool
    off_duty: float

    @property
    def tag(self) -> str:
        return "DCM" if self.dcm else "CCM"

    @staticmethod
    def ccm(duty: float) -> "ConductionMode":
        return ConductionMode(False, 1.0 - duty)

    @staticmethod
    def dcm_at(off_duty: float) -> "ConductionMode":
        return ConductionMode(True, off_duty)


@dataclass(frozen=True)
class CellPeriodInput:
    """Everything needed to evaluate one cell over one switching period."""

    i_start: float
    v_on: float
    v_off: float
    duty: float
    inductance: float
    period: float


@dataclass(frozen=True)
class CellStepSolution:
    """Solved per-period cell quantities.

    ``i_start``, ``i_switch`` and ``i_end`` are the inductor current at the
    period start, at the switching instant and at the period end;
    the ``avg_*`` fields are period averages.
    """

    i_start: float
    i_switch: float
    i_end: float
    avg_switch_current: float
    avg_diode_current: float
    avg_inductor_current: float
    avg_inductor_voltage: float
    v_on: float
    v_off: float
    mode: ConductionMode


def dcm_off_duty(
    i_start: float,
    v_on: float,
    v_off: float,
    duty: float,
    inductance: float,
    period: float,
) -> float:
    """Fraction of the period the diode conducts before the current hits zero.

    Solves ``i_switch + (v_off / L) * off_duty * period = 0`` for the ramp
    starting at ``i_start``; requires a discharging off-interval voltage
    (``v_off < 0``), otherwise no zero crossing exists.
    """
    if v_off >= 0:
        raise ValueError(
            f"no zero crossing: off-interval voltage {v_off!r} does not discharge the inductor"
        )
    i_switch = i_start + v_on / inductance * duty * period
    return -i_switch * inductance / (v_off * period)


def classify_mode(inp: CellPeriodInput, switch_type: SwitchType) -> ConductionMode:
    """Decide continuous vs discontinuous conduction for one period.

    Synchronous cells always conduct continuously.  A diode cell is
    discontinuous when the zero crossing lands inside the period, i.e. when
    ``duty + off_duty < 1``.  A non-discharging off-interval voltage on a
    diode cell has no zero crossing and is treated as continuous.
    """
    if switch_type is SwitchType.SYNCHRONOUS:
        return ConductionMode.ccm(inp.duty)
    if inp.v_off >= 0:
        log.warning(
            "diode cell with non-discharging off-interval voltage %.6g V; keeping continuous conduction",
            inp.v_off,
        )
        return ConductionMode.ccm(inp.duty)
    d2 = dcm_off_duty(inp.i_start, inp.v_on, inp.v_off, inp.duty, inp.inductance, inp.period)
    if d2 < 0.0:
        log.warning("inductor current would reach zero during the on-interval; clamping")
        d2 = 0.0
    if inp.duty + d2 >= 1.0:
        return ConductionMode.ccm(inp.duty)
    return ConductionMode.dcm_at(d2)


def cell_averages(inp: CellPeriodInput, mode: ConductionMode) -> CellStepSolution:
    """Evaluate the piecewise-linear current ramps and their period averages.

    In discontinuous conduction the end current is zero by construction of
    the off duty; the average inductor current always equals the sum of the
    switch and diode averages.
    """
    d = inp.duty
    dp = mode.off_duty
    i_switch = inp.i_start + inp.v_on / inp.inductance * d * inp.period
    if mode.dcm:
        i_end = 0.0
    else:
        i_end = i_switch + inp.v_off / inp.inductance * dp * inp.period
    avg_switch = 0.5 * d * (inp.i_start + i_switch)
    avg_diode = 0.5 * dp * (i_switch + i_end)
    avg_voltage = d * inp.v_on + dp * inp.v_off
    return CellStepSolution(
        i_start=inp.i_start,
        i_switch=i_switch,
        i_end=i_end,
        avg_switch_current=avg_switch,
        avg_diode_current=avg_diode,
        avg_inductor_current=avg_switch + avg_diode,
        avg_inductor_voltage=avg_voltage,
        v_on=inp.v_on,
        v_off=inp.v_off,
        mode=mode,
    )


def flyback_port_voltages(
    v_active: float, v_passive: float, v_common: float, turns_ratio: float
) -> tuple[float, float]:
    """Map flyback terminal voltages to the magnetizing inductor intervals.

    While the switch conducts the magnetizing inductance sees the primary
    port; while the diode conducts it sees the secondary port reflected
    through the turns ratio with reversed winding orientation.  With a unit
    ratio and grounded common terminal this degenerates to the basic
    buck-boost mapping ``(v_active, -v_passive)``.
    """
    if turns_ratio <= 0:
        raise ValueError(f"turns ratio must be positive, got {turns_ratio!r}")
    v_on = v_active - v_common
    v_off = -(v_passive - v_common) / turns_ratio
    return v_on, v_off
