import math

import pytest
from hypothesis import given, settings, strategies as st

from icecomp.circuit import (CircuitError, ComponentRole, Gate, GateKind,
                             PhysicalCircuit, layered_schedule, read_circuit,
                             space_time_area, two_qubit_depth, write_circuit)
from icecomp.gadgets import init_old


def simple(num_qubits=4, num_clbits=2):
    c = PhysicalCircuit(num_qubits, num_clbits)
    c.begin_component(0, ComponentRole.PHASE_LAYER)
    return c


class TestGateValidation:
    def test_arity_mismatch(self):
        with pytest.raises(CircuitError):
            Gate(GateKind.RZZ, (0,), angle=0.5)
        with pytest.raises(CircuitError):
            Gate(GateKind.H, (0, 1))

    def test_duplicate_qubit(self):
        with pytest.raises(CircuitError):
            Gate(GateKind.RZZ, (0, 0), angle=0.5)

    def test_angle_rules(self):
        with pytest.raises(CircuitError):
            Gate(GateKind.RZZ, (0, 1))
        with pytest.raises(CircuitError):
            Gate(GateKind.RZZ, (0, 1), angle=float("nan"))
        with pytest.raises(CircuitError):
            Gate(GateKind.CNOT, (0, 1), angle=0.3)

    def test_measure_needs_clbit(self):
        with pytest.raises(CircuitError):
            Gate(GateKind.MEASURE_Z, (0,))


class TestLayering:
    def test_single_gate(self):
        c = simple()
        c.rzz(0, 1, 0.5)
        assert two_qubit_depth(c) == 1

    def test_disjoint_share_layer(self):
        c = simple()
        c.rzz(0, 1, 0.5)
        c.rzz(2, 3, 0.5)
        assert two_qubit_depth(c) == 1

    def test_shared_qubit_serializes(self):
        c = simple()
        c.rzz(0, 1, 0.5)
        c.rzz(1, 2, 0.5)
        assert two_qubit_depth(c) == 2

    def test_empty(self):
        assert two_qubit_depth(simple()) == 0

    def test_single_qubit_gates_do_not_count(self):
        c = simple()
        c.h(0)
        c.h(1)
        assert two_qubit_depth(c) == 0
        c.rzz(2, 3, 0.1)
        assert two_qubit_depth(c) == 1

    def test_barrier_fences_listed_qubits(self):
        c = simple()
        c.rzz(0, 1, 0.5)
        c.barrier((0, 1))
        c.rzz(0, 1, 0.5)     # fenced behind the first gate
        c.rzz(2, 3, 0.4)     # untouched by the fence: joins the first layer
        sched = layered_schedule(c)
        assert sched.gate_layer[3] == sched.gate_layer[0] == 0
        assert sched.gate_layer[2] == 1
        assert two_qubit_depth(c) == 2

    def test_full_barrier(self):
        c = simple()
        c.rzz(0, 1, 0.5)
        c.barrier()
        c.rzz(2, 3, 0.5)
        assert two_qubit_depth(c) == 2

    def test_component_order_violation_rejected(self):
        c = PhysicalCircuit(3, 0)
        c.begin_component(0, ComponentRole.PHASE_LAYER)
        c.begin_component(1, ComponentRole.MIXER_LAYER)
        c.rzz(0, 1, 0.5, component=1)
        c.rzz(0, 2, 0.5, component=0)  # earlier component after later, shared qubit
        with pytest.raises(CircuitError):
            layered_schedule(c)

    def test_concat_subadditive(self):
        a = simple()
        a.rzz(0, 1, 0.1)
        a.rzz(1, 2, 0.1)
        b = PhysicalCircuit(4, 2)
        b.begin_component(1, ComponentRole.MIXER_LAYER)
        b.rxx(0, 3, 0.2, component=1)
        b.rxx(0, 2, 0.2, component=1)
        da, db = two_qubit_depth(a), two_qubit_depth(b)
        a.extend(b)
        assert two_qubit_depth(a) <= da + db


class TestStarExample:
    """Old initialization plus one hub-heavy phase layer: reordering the
    implicit order turns depth 12 into 9."""

    def build(self, order, phase_order):
        g = init_old(6, order)
        c = PhysicalCircuit(10, 1)
        c.begin_component(0, ComponentRole.INIT)
        for gate in g.fragment.gates:
            c.add(gate)
        c.begin_component(1, ComponentRole.PHASE_LAYER)
        for i in phase_order:
            c.rzz(i, 6, 0.5, component=1)
        return c

    def test_default_order_depth_12(self):
        assert two_qubit_depth(self.build(None, (1, 2, 3, 4, 5))) == 12

    def test_reordered_depth_9(self):
        c = self.build((0, 6, 5, 4, 3, 2, 1, 7), (5, 4, 3, 2, 1))
        assert two_qubit_depth(c) == 9


class TestSpaceTimeArea:
    def test_reported_points(self):
        c = simple(num_qubits=24)
        prev = None
        for _ in range(397):
            c.rzz(0, 1, 0.1)
        assert space_time_area(c, 22) == 24 * 397 == 9528

    def test_second_point(self):
        c = PhysicalCircuit(20, 0)
        c.begin_component(0, ComponentRole.PHASE_LAYER)
        for _ in range(375):
            c.rzz(0, 1, 0.1)
        assert space_time_area(c, 18) == 7500

    def test_zero_depth(self):
        assert space_time_area(simple(), 2) == 0

    def test_odd_k_rejected(self):
        with pytest.raises(CircuitError):
            space_time_area(simple(), 3)


class TestTextFormat:
    def test_gate_line_examples(self):
        c = read_circuit("rzz 0 1 0.5\ncx 3 0\n")
        assert c.gates[0].kind is GateKind.RZZ
        assert c.gates[0].qubits == (0, 1)
        assert c.gates[0].angle == 0.5
        assert c.gates[1].kind is GateKind.CNOT
        assert c.gates[1].qubits == (3, 0)

    def test_duplicate_qubit_is_parse_error(self):
        with pytest.raises(CircuitError, match="line 1"):
            read_circuit("rzz 0 0 0.5\n")

    def test_unknown_kind(self):
        with pytest.raises(CircuitError, match="unknown gate"):
            read_circuit("swap 0 1\n")

    def test_arity_error_with_line_number(self):
        with pytest.raises(CircuitError, match="line 2"):
            read_circuit("h 0\ncx 1\n")

    def test_comments_and_header(self):
        text = "# header comment\nqubits 5 clbits 2\nmz 4 1  # measure\n"
        c = read_circuit(text)
        assert c.num_qubits == 5 and c.num_clbits == 2
        assert c.gates[0].clbit == 1


def circuits(draw):
    n = draw(st.integers(2, 6))
    m = draw(st.integers(1, 3))
    c = PhysicalCircuit(n, m)
    c.begin_component(0, ComponentRole.PHASE_LAYER)
    num = draw(st.integers(0, 12))
    for _ in range(num):
        kind = draw(st.sampled_from(
            [GateKind.RZZ, GateKind.RXX, GateKind.CNOT, GateKind.H,
             GateKind.X, GateKind.Z, GateKind.MEASURE_Z, GateKind.RESET]
        ))
        q = draw(st.integers(0, n - 1))
        if kind in (GateKind.RZZ, GateKind.RXX, GateKind.CNOT):
            q2 = draw(st.integers(0, n - 2))
            if q2 >= q:
                q2 += 1
            if kind is GateKind.CNOT:
                c.cx(q, q2)
            else:
                angle = draw(st.floats(-3.0, 3.0, allow_nan=False))
                c.add(Gate(kind, (q, q2), angle=angle))
        elif kind is GateKind.MEASURE_Z:
            c.mz(q, draw(st.integers(0, m - 1)))
        elif kind is GateKind.H:
            c.h(q)
        elif kind is GateKind.X:
            c.x(q)
        elif kind is GateKind.Z:
            c.z(q)
        else:
            c.reset(q)
    return c


@settings(max_examples=150, deadline=None)
@given(st.builds(lambda d: d, st.data()))
def test_roundtrip_identity(data):
    c = circuits(data.draw)
    c2 = read_circuit(write_circuit(c))
    assert c2.num_qubits == c.num_qubits
    assert c2.num_clbits == c.num_clbits
    assert c2.gates == c.gates
