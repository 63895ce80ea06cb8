"""Period-averaged simulation of PWM DC-DC converters.

The averaged engine advances one switching period per step by solving the
modified-nodal-analysis system of the averaged circuit; instantaneous
waveforms are reconstructed afterwards from the per-period solutions.  A
switched-state reference simulator (`oracle`) validates the averaged
results.
"""

from .cells import CellPeriodInput, CellStepSolution, ConductionMode
from .engine import EngineError, SimConfig, Trace, run, step
from .netlist import Circuit, NetlistError, parse, parse_value, serialize
from .oracle import ComparisonReport, SwitchedTrace, compare, simulate_switched
from .waveforms import (
    PiecewiseWaveform,
    WaveformStats,
    reconstruct_capacitor_voltage,
    reconstruct_inductor_current,
    spectrum,
    stats,
)

__version__ = "0.1.0"

__all__ = [
    "CellPeriodInput",
    "CellStepSolution",
    "Circuit",
    "ComparisonReport",
    "ConductionMode",
    "EngineError",
    "NetlistError",
    "PiecewiseWaveform",
    "SimConfig",
    "SwitchedTrace",
    "Trace",
    "WaveformStats",
    "compare",
    "parse",
    "parse_value",
    "reconstruct_capacitor_voltage",
    "reconstruct_inductor_current",
    "run",
    "serialize",
    "simulate_switched",
    "spectrum",
    "stats",
    "step",
]
