import random
from dataclasses import replace

import numpy as np
import pytest

from icecomp.circuit import ComponentRole, GateKind, PhysicalCircuit, \
    two_qubit_depth
from icecomp.gadgets import (Gadget, GadgetError, GadgetKind, IcebergLayout,
                             StabilizerPair, build_gadget, encode_rotation,
                             final_new, final_old, gadget_cost_table,
                             init_new, init_old, permute_gadget, syndrome_new,
                             syndrome_old)
from icecomp.simulator import StateVector, exact_bit_distribution, decode_bits

ALL_KINDS = list(GadgetKind)


def valid(kind, k):
    return not (kind is GadgetKind.SYNDROME_NEW and (k + 2) % 4 != 0)


class TestLayout:
    def test_indices(self):
        lay = IcebergLayout(6)
        assert (lay.t, lay.b, lay.n) == (0, 7, 8)
        assert lay.ancilla0 == 8 and lay.ancilla1 == 9
        assert lay.logical == (1, 2, 3, 4, 5, 6)

    def test_k_validation(self):
        with pytest.raises(GadgetError):
            IcebergLayout(3)
        with pytest.raises(GadgetError):
            IcebergLayout(0)

    def test_stabilizer_supports(self):
        pair = StabilizerPair(IcebergLayout(4))
        assert pair.x_support == pair.z_support == frozenset(range(6))


class TestCostTable:
    @pytest.mark.parametrize("k", [2, 4, 6, 10, 22])
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_depth_and_gates_exact(self, k, kind):
        if not valid(kind, k):
            with pytest.raises(GadgetError):
                build_gadget(kind, k)
            return
        g = build_gadget(kind, k)
        depth, gates = gadget_cost_table(k)[kind]
        assert two_qubit_depth(g.fragment) == depth
        assert g.two_qubit_gate_count() == gates

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_permutation_preserves_costs(self, kind):
        k = 6
        g = build_gadget(kind, k)
        rng = random.Random(3)
        for _ in range(4):
            perm = rng.sample(range(k + 2), k + 2)
            pg = permute_gadget(g, perm)
            assert two_qubit_depth(pg.fragment) == two_qubit_depth(g.fragment)
            assert pg.two_qubit_gate_count() == g.two_qubit_gate_count()

    def test_identity_permutation(self):
        g = init_new(6)
        assert permute_gadget(g, range(8)).fragment.gates == g.fragment.gates

    def test_odd_k_rejected(self):
        with pytest.raises(GadgetError):
            init_new(3)

    def test_syndrome_new_divisibility(self):
        with pytest.raises(GadgetError):
            syndrome_new(4)   # n = 6 not a multiple of 4
        syndrome_old(4)       # no constraint on the older gadget

    def test_reordered_init_frees_hub_early(self):
        from icecomp.circuit import layered_schedule
        g = init_new(6, (0, 6, 5, 4, 3, 2, 1, 7))
        sched = layered_schedule(g.fragment)
        last = {}
        for gi, gate in enumerate(g.fragment.gates):
            if gate.is_two_qubit:
                for q in gate.qubits:
                    last[q] = sched.gate_layer[gi]
        assert last[6] == min(last[q] for q in range(1, 7))


def ghz_plus_state(gadget: Gadget) -> StateVector:
    """Run an init fragment and return the post-selected state."""
    sv = StateVector(gadget.fragment.num_qubits)
    rng = np.random.default_rng(0)
    bits = {}
    for g in gadget.fragment.gates:
        if g.kind is GateKind.CNOT:
            sv.apply_cx(*g.qubits)
        elif g.kind is GateKind.H:
            sv.apply_h(g.qubits[0])
        elif g.kind is GateKind.RESET:
            sv.reset(g.qubits[0], rng)
        elif g.kind is GateKind.MEASURE_Z:
            v = sv.measure(g.qubits[0], rng)
            bits[g.clbit] = v
        else:
            raise AssertionError(g)
    assert all(v == 0 for v in bits.values())
    return sv


def pauli_expectation(sv: StateVector, xmask: int, zmask: int) -> float:
    work = sv.copy()
    for q in range(work.n):
        if (xmask >> q) & 1:
            work.apply_x(q)
        if (zmask >> q) & 1:
            work.apply_z(q)
    return float(np.real(np.vdot(sv.amp, work.amp)))


class TestPreparedState:
    @pytest.mark.parametrize("kind", [GadgetKind.INIT_OLD, GadgetKind.INIT_NEW])
    @pytest.mark.parametrize("order", [None, (3, 0, 5, 1, 4, 2)])
    def test_prepares_plus_logical_state(self, kind, order):
        k = 4
        g = build_gadget(kind, k, order)
        sv = ghz_plus_state(g)
        n = k + 2
        full = (1 << n) - 1
        assert pauli_expectation(sv, full, 0) == pytest.approx(1.0)   # S_x
        assert pauli_expectation(sv, 0, full) == pytest.approx(1.0)   # S_z
        for i in range(1, k + 1):
            xbar = 1 | (1 << i)
            assert pauli_expectation(sv, xbar, 0) == pytest.approx(1.0)

    def test_permutation_equivariance_of_state(self):
        a = ghz_plus_state(init_new(4))
        b = ghz_plus_state(init_new(4, (5, 2, 0, 4, 1, 3)))
        # GHZ symmetry: the physical state itself is identical
        assert np.allclose(a.amp, b.amp)


class TestZ2Rewrite:
    def test_bottom_anchor_equivalent_on_symmetric_state(self):
        k = 4
        sv = ghz_plus_state(init_new(k))
        theta = 0.83
        top = sv.copy()
        top.apply_rxx(0, 2, theta)
        bot = sv.copy()
        bot.apply_rxx(k + 1, 2, theta)
        fidelity = abs(np.vdot(top.amp, bot.amp))
        assert fidelity == pytest.approx(1.0, abs=1e-12)


class TestFinalDecode:
    @pytest.mark.parametrize("kind", [GadgetKind.FINAL_OLD, GadgetKind.FINAL_NEW])
    @pytest.mark.parametrize("order", [None, (1, 5, 3, 0, 2, 4)])
    def test_all_zero_logical_input(self, kind, order):
        # prepare logical |0...0> (the computational-basis GHZ state), then
        # measure: all checks pass and every logical bit decodes to zero
        k = 4
        lay = IcebergLayout(k)
        circ = PhysicalCircuit(lay.num_qubits, 0)
        circ.begin_component(0, ComponentRole.INIT)
        circ.h(0)
        for i in range(1, lay.n):
            circ.cx(i - 1, i)
        final = build_gadget(kind, k, order)
        circ.num_clbits = final.num_clbits
        circ.begin_component(1, ComponentRole.FINAL_MEAS)
        for g in final.fragment.gates:
            circ.add(replace(g, component=1))
        dist = exact_bit_distribution(circ)
        assert sum(dist.values()) == pytest.approx(1.0)
        for bits, prob in dist.items():
            values, accepted, logical = decode_bits(bits, final.checks,
                                                    final.decode)
            assert accepted
            assert logical == 0

    def test_decode_maps_pair_each_logical_with_bottom(self):
        g = final_new(6)
        lay = g.layout
        for i, bits in g.decode.items():
            assert bits == frozenset({i, lay.b})


class TestEncodeRotation:
    def setup_method(self):
        self.layout = IcebergLayout(6)

    def test_top_anchor(self):
        g = encode_rotation("X3", 0.7, self.layout)
        assert g.kind is GateKind.RXX
        assert g.qubits == (0, 3) and g.angle == 0.7

    def test_bottom_anchor_needs_flag(self):
        with pytest.raises(GadgetError):
            encode_rotation("X3", 0.7, self.layout, use_bottom=True)
        g = encode_rotation("X3", 0.7, self.layout, use_bottom=True,
                            z2_allowed=True)
        assert g.qubits == (7, 3)

    def test_phase_rotation_unchanged(self):
        g = encode_rotation("Z1Z2", 0.4, self.layout)
        assert g.kind is GateKind.RZZ
        assert g.qubits == (1, 2)

    def test_bad_specs(self):
        with pytest.raises(GadgetError):
            encode_rotation("X9", 0.1, self.layout)
        with pytest.raises(GadgetError):
            encode_rotation("Z1Z1", 0.1, self.layout)
        with pytest.raises(GadgetError):
            encode_rotation("Y2", 0.1, self.layout)
