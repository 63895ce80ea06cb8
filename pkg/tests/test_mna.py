"""Tests for system assembly and the dense solve."""

import numpy as np
import pytest

from cellsim import engine, mna, netlist
from cellsim.cells import ConductionMode
from cellsim.netlist import CellKind

from conftest import BOOST_SYN, BUCK_SYN, FLYBACK_DIODE


def buck_system(i_l0=0.0, v_c_prev=0.0, i_c_prev=0.0):
    circuit = netlist.parse(BUCK_SYN)
    state = mna.PeriodState(
        period=0,
        cap_voltage=np.array([v_c_prev]),
        cap_current=np.array([i_c_prev]),
        cell_current=np.array([i_l0]),
    )
    modes = [ConductionMode.ccm(0.5)]
    return circuit, mna.assemble(circuit, state, modes)


def hand_built_buck(i_l0, v_c_prev, i_c_prev, d=0.5, dp=0.5):
    """The thirteen averaged-buck equations written out longhand.

    Unknown order: v1, v2, iV, iC, vC, iS, iD, iL, vL, iL1, iL2, VL1, VL2.
    """
    r, cap, lind, ts = 5.0, 1e-4, 1e-5, 1e-5
    r_c = ts / (2 * cap)
    g_l = ts / lind
    a = np.zeros((13, 13))
    z = np.zeros(13)
    v1, v2, i_v, i_c, v_c, i_s, i_d, i_l, v_l, il1, il2, vl1, vl2 = range(13)
    # node 1: source branch current plus switch draw leave the node
    a[0, i_v] = 1.0
    a[0, i_s] = 1.0
    # node 2: capacitor, load resistor and output sink take the cell current
    a[1, i_c] = 1.0
    a[1, v2] = 1.0 / r
    a[1, i_l] = -1.0
    z[1] = -4.0
    # source branch fixes v1
    a[2, v1] = 1.0
    z[2] = 10.0
    # capacitor branch voltage and trapezoidal companion
    a[3, v2] = 1.0
    a[3, v_c] = -1.0
    a[4, v_c] = 1.0
    a[4, i_c] = -r_c
    z[4] = v_c_prev + r_c * i_c_prev
    # averaged cell equations
    a[5, i_s] = 1.0
    a[5, il1] = -d / 2
    z[5] = d / 2 * i_l0
    a[6, i_d] = 1.0
    a[6, il1] = -dp / 2
    a[6, il2] = -dp / 2
    a[7, i_l] = 1.0
    a[7, i_s] = -1.0
    a[7, i_d] = -1.0
    a[8, v_l] = 1.0
    a[8, vl1] = -d
    a[8, vl2] = -dp
    a[9, il1] = 1.0
    a[9, vl1] = -g_l * d
    z[9] = i_l0
    a[10, il2] = 1.0
    a[10, il1] = -1.0
    a[10, vl2] = -g_l * dp
    a[11, vl1] = 1.0
    a[11, v1] = -1.0
    a[11, v2] = 1.0
    a[12, vl2] = 1.0
    a[12, v2] = 1.0
    return a, z


class TestLayout:
    def test_buck_has_thirteen_unknowns(self):
        circuit = netlist.parse(BUCK_SYN)
        layout = mna.UnknownLayout.from_circuit(circuit)
        assert layout.size == 13
        assert layout.n_nodes == 2
        assert layout.n_branch_currents == 2
        assert layout.n_extra == 9  # capacitor voltage plus eight cell variables
        assert layout.column_names == (
            "v(1)", "v(2)", "i(VIN)", "i(C1)", "vc(C1)",
            "iS(X1)", "iD(X1)", "iL(X1)", "vL(X1)",
            "iL1(X1)", "iL2(X1)", "VL1(X1)", "VL2(X1)",
        )

    def test_parallel_cells_grow_by_eight(self):
        text = BUCK_SYN.replace(
            "X1  1 0 2 CELL KIND=basic SW=syn L=10u D=0.5",
            "X1  1 0 2 CELL KIND=basic SW=syn L=10u D=0.5\n"
            "X2  1 0 2 CELL KIND=basic SW=syn L=10u D=0.5",
        )
        layout = mna.UnknownLayout.from_circuit(netlist.parse(text))
        assert layout.size == 21


class TestStamps:
    def test_reference_coefficients(self):
        # at the benchmark parameters the companion resistance is 0.05 ohm
        # and the inductor conductance factor is exactly 1 siemens
        circuit, system = buck_system()
        lay = system.layout
        a = system.matrix
        d = dp = 0.5
        assert a[lay.capacitor_companion_row("C1"), lay.capacitor_current_col("C1")] == pytest.approx(-0.05)
        assert a[lay.cell_row("X1", "ramp_on"), lay.cell_col("X1", "VL1")] == pytest.approx(-d * 1.0)
        assert a[lay.cell_row("X1", "ramp_off"), lay.cell_col("X1", "VL2")] == pytest.approx(-dp * 1.0)
        assert a[lay.cell_row("X1", "avg_switch"), lay.cell_col("X1", "iL1")] == pytest.approx(-d / 2)
        assert a[lay.cell_row("X1", "avg_diode"), lay.cell_col("X1", "iL1")] == pytest.approx(-dp / 2)
        assert a[lay.cell_row("X1", "avg_diode"), lay.cell_col("X1", "iL2")] == pytest.approx(-dp / 2)
        assert a[lay.kcl_row("2"), lay.node_col("2")] == pytest.approx(1.0 / 5.0)
        assert a[lay.kcl_row("2"), lay.cell_col("X1", "iL")] == pytest.approx(-1.0)
        assert a[lay.kcl_row("1"), lay.cell_col("X1", "iS")] == pytest.approx(1.0)

    def test_rhs_state_entries(self):
        circuit, system = buck_system(i_l0=2.0, v_c_prev=3.0, i_c_prev=4.0)
        lay = system.layout
        assert system.rhs[lay.cell_row("X1", "avg_switch")] == pytest.approx(0.25 * 2.0)
        assert system.rhs[lay.cell_row("X1", "ramp_on")] == pytest.approx(2.0)
        assert system.rhs[lay.capacitor_companion_row("C1")] == pytest.approx(3.0 + 0.05 * 4.0)
        assert system.rhs[lay.vsource_row("VIN")] == pytest.approx(10.0)
        assert system.rhs[lay.kcl_row("2")] == pytest.approx(-4.0)

    def test_matches_hand_built_system(self):
        for state in ((0.0, 0.0, 0.0), (1.7, 2.3, -0.9)):
            circuit, system = buck_system(*state)
            x = mna.solve(system)
            a_ref, z_ref = hand_built_buck(*state)
            x_ref = np.linalg.solve(a_ref, z_ref)
            ref_names = [
                "v(1)", "v(2)", "i(VIN)", "i(C1)", "vc(C1)", "iS(X1)", "iD(X1)",
                "iL(X1)", "vL(X1)", "iL1(X1)", "iL2(X1)", "VL1(X1)", "VL2(X1)",
            ]
            for name, ref in zip(ref_names, x_ref):
                got = x[system.layout.column_names.index(name)]
                assert got == pytest.approx(ref, rel=1e-12, abs=1e-12), name

    def test_period_zero_closed_form(self):
        # eliminating the cell equations by hand gives 20.7 * v2 = -0.25
        circuit, system = buck_system()
        x = mna.solve(system)
        lay = system.layout
        assert x[lay.node_col("1")] == pytest.approx(10.0)
        assert x[lay.node_col("2")] == pytest.approx(-0.25 / 20.7, rel=1e-12)

    def test_substituted_solution_satisfies_every_equation(self):
        circuit, system = buck_system(1.7, 2.3, -0.9)
        x = mna.solve(system)
        a_ref, z_ref = hand_built_buck(1.7, 2.3, -0.9)
        residual = np.abs(a_ref @ x - z_ref).max()
        assert residual <= 1e-9 * max(1.0, np.abs(z_ref).max())

    def test_continuous_mode_matrix_is_constant(self):
        circuit = netlist.parse(BUCK_SYN)
        layout = mna.UnknownLayout.from_circuit(circuit)
        modes = [ConductionMode.ccm(0.5)]
        a1 = mna.stamp_matrix(circuit, layout, modes)
        a2 = mna.stamp_matrix(circuit, layout, modes)
        assert np.array_equal(a1, a2)
        # across periods of a synchronous run only the right side changes
        trace = engine.run(circuit, engine.SimConfig(2e-4, 1e-5))
        for state in trace.states:
            assert np.array_equal(mna.stamp_matrix(circuit, layout, modes), a1)

    def test_assembly_is_deterministic(self):
        c1, s1 = buck_system(1.0, 2.0, 3.0)
        c2, s2 = buck_system(1.0, 2.0, 3.0)
        assert np.array_equal(s1.matrix, s2.matrix)
        assert np.array_equal(s1.rhs, s2.rhs)


class TestKcl:
    @pytest.mark.parametrize("text", [BUCK_SYN, BOOST_SYN, FLYBACK_DIODE], ids=["buck", "boost", "flyback"])
    def test_node_current_balance(self, text):
        """Element currents recomputed from the solved vector sum to zero."""
        circuit = netlist.parse(text)
        trace = engine.run(circuit, engine.SimConfig(5e-4, 1e-5))
        lay = trace.layout
        x = trace.solutions[-1]

        def v_of(node):
            col = lay.node_col(node)
            return 0.0 if col is None else x[col]

        for node in circuit.non_ground_nodes:
            total = 0.0
            for r in circuit.resistors:
                if r.node1 == node:
                    total += (v_of(r.node1) - v_of(r.node2)) / r.ohms
                if r.node2 == node:
                    total += (v_of(r.node2) - v_of(r.node1)) / r.ohms
            for v in circuit.vsources:
                if v.node_pos == node:
                    total += x[lay.vsource_current_col(v.name)]
                if v.node_neg == node:
                    total -= x[lay.vsource_current_col(v.name)]
            for c in circuit.capacitors:
                if c.node_pos == node:
                    total += x[lay.capacitor_current_col(c.name)]
                if c.node_neg == node:
                    total -= x[lay.capacitor_current_col(c.name)]
            for i in circuit.isources:
                if i.node_pos == node:
                    total += i.amps
                if i.node_neg == node:
                    total -= i.amps
            for cell in circuit.cells:
                i_s = x[lay.cell_col(cell.name, "iS")]
                i_d = x[lay.cell_col(cell.name, "iD")]
                i_l = x[lay.cell_col(cell.name, "iL")]
                if cell.kind is CellKind.BASIC:
                    draws = {cell.node_active: i_s, cell.node_passive: i_d, cell.node_common: -i_l}
                else:
                    n = cell.turns_ratio
                    draws = {
                        cell.node_active: i_s,
                        cell.node_passive: -i_d / n,
                        cell.node_common: -i_s + i_d / n,
                    }
                total += draws.get(node, 0.0)
            assert total == pytest.approx(0.0, abs=1e-9)


class TestSolve:
    def test_identity(self):
        layout = mna.UnknownLayout(nodes=("a",), vsources=(), capacitors=(), cells=())
        rng = np.random.default_rng(7)
        z = rng.normal(size=1)
        system = mna.LinearSystem(np.eye(1), z, layout)
        assert mna.solve(system) == pytest.approx(z)

    def test_random_systems_meet_residual_bound(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            n = rng.integers(2, 20)
            a = rng.normal(size=(n, n))
            z = rng.normal(size=n)
            layout = mna.UnknownLayout(nodes=tuple(map(str, range(n))), vsources=(), capacitors=(), cells=())
            x = mna.solve(mna.LinearSystem(a, z, layout))
            assert np.abs(a @ x - z).max() <= 1e-9 * max(1.0, np.abs(z).max())

    def test_singular_matrix_raises(self):
        layout = mna.UnknownLayout(nodes=("a", "b"), vsources=(), capacitors=(), cells=())
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(mna.SingularSystemError):
            mna.solve(mna.LinearSystem(a, np.array([1.0, 2.0]), layout))
