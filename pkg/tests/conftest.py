import logging
from pathlib import Path

import pytest

from cellsim import netlist

NETLIST_DIR = Path(__file__).resolve().parent.parent / "netlists"

BUCK_SYN = (NETLIST_DIR / "buck_syn.cir").read_text()
BUCK_DIODE = (NETLIST_DIR / "buck_diode.cir").read_text()
FLYBACK_SYN = (NETLIST_DIR / "flyback_syn.cir").read_text()
FLYBACK_DIODE = (NETLIST_DIR / "flyback_diode.cir").read_text()
BOOST_SYN = (NETLIST_DIR / "boost_syn.cir").read_text()
BUCKBOOST_DIODE = (NETLIST_DIR / "buckboost_diode.cir").read_text()

# steady-state buck: initial conditions at the averaged fixed point
BUCK_STEADY = """\
VIN 1 0 10
X1  1 0 2 CELL KIND=basic SW=syn L=10u D=0.5 IC=3.75
C1  2 0 100u IC=5
R1  2 0 5
IOUT 2 0 4
.FS 100k
.TRAN 0.2m
"""


@pytest.fixture(autouse=True)
def _quiet_cell_warnings(caplog):
    # the diode-cell polarity warning is expected during startup transients
    caplog.set_level(logging.ERROR, logger="cellsim.cells")


@pytest.fixture(scope="session")
def buck_syn_circuit():
    return netlist.parse(BUCK_SYN)


@pytest.fixture(scope="session")
def buck_diode_circuit():
    return netlist.parse(BUCK_DIODE)


@pytest.fixture(scope="session")
def buck_syn_trace(buck_syn_circuit):
    from cellsim import engine

    return engine.run(buck_syn_circuit)


@pytest.fixture(scope="session")
def buck_diode_trace(buck_diode_circuit):
    from cellsim import engine

    return engine.run(buck_diode_circuit)
