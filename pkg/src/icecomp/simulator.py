"""Dense statevector simulation with mid-circuit measurement and Pauli noise.

Supports two inputs: PhysicalCircuit (encoded circuits, ancillas included)
and LogicalCircuit (the unencoded reference, whose mixer rotations are
plain single-qubit X rotations that the physical gate set does not carry).

Noise is a stochastic Pauli trajectory model: a uniformly random
non-identity Pauli on a gate's support with probability p1/p2 after each
gate, single-qubit depolarizing with probability p_idle on every idle qubit
after each two-qubit layer (this is what makes depth costly), and readout
flips with probability p_meas.  All rates scale with a global multiplier.

Qubit i is bit i of the state index (little-endian).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Gate, GateKind, LayerSchedule, PhysicalCircuit, layered_schedule
from .gadgets import ParityCheck
from .faults import PauliString
from .maxcut import LogicalCircuit, ProblemGraph, energy as bit_energy

DEFAULT_QUBIT_CAP = 16


class SimulatorError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Statevector core
# ---------------------------------------------------------------------------

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class StateVector:
    """Dense little-endian statevector with in-place strided gate kernels."""

    def __init__(self, num_qubits: int, cap: int = DEFAULT_QUBIT_CAP):
        if num_qubits > cap:
            raise SimulatorError(
                f"{num_qubits} qubits exceeds the dense-simulation cap {cap}"
            )
        self.n = num_qubits
        self.amp = np.zeros(1 << num_qubits, dtype=np.complex128)
        self.amp[0] = 1.0

    def copy(self) -> "StateVector":
        out = StateVector.__new__(StateVector)
        out.n = self.n
        out.amp = self.amp.copy()
        return out

    def _axis1(self, q: int) -> np.ndarray:
        return self.amp.reshape(1 << (self.n - 1 - q), 2, 1 << q)

    def _axis2(self, qa: int, qb: int) -> np.ndarray:
        # axes: (high, bit_hi, mid, bit_lo, low)
        lo, hi = (qa, qb) if qa < qb else (qb, qa)
        return self.amp.reshape(
            1 << (self.n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo
        )

    # -- gates --------------------------------------------------------------

    def apply_x(self, q: int) -> None:
        v = self._axis1(q)
        tmp = v[:, 0, :].copy()
        v[:, 0, :] = v[:, 1, :]
        v[:, 1, :] = tmp

    def apply_z(self, q: int) -> None:
        v = self._axis1(q)
        v[:, 1, :] *= -1.0

    def apply_y(self, q: int) -> None:
        # up to a global phase: Z then X
        self.apply_z(q)
        self.apply_x(q)

    def apply_h(self, q: int) -> None:
        v = self._axis1(q)
        a = v[:, 0, :]
        b = v[:, 1, :]
        tmp = a.copy()
        a += b
        a *= _INV_SQRT2
        b *= -1.0
        b += tmp
        b *= _INV_SQRT2

    def apply_cx(self, c: int, t: int) -> None:
        v = self._axis2(c, t)
        lo, hi = (c, t) if c < t else (t, c)
        if c == hi:
            a, b = v[:, 1, :, 0, :], v[:, 1, :, 1, :]
        else:
            a, b = v[:, 0, :, 1, :], v[:, 1, :, 1, :]
        tmp = a.copy()
        a[...] = b
        b[...] = tmp

    def apply_rzz(self, a: int, b: int, theta: float) -> None:
        v = self._axis2(a, b)
        even = complex(math.cos(theta), -math.sin(theta))
        odd = even.conjugate()
        v[:, 0, :, 0, :] *= even
        v[:, 1, :, 1, :] *= even
        v[:, 0, :, 1, :] *= odd
        v[:, 1, :, 0, :] *= odd

    def apply_rxx(self, a: int, b: int, theta: float) -> None:
        v = self._axis2(a, b)
        c = math.cos(theta)
        s = -1j * math.sin(theta)
        for pa, pb in (((0, 0), (1, 1)), ((0, 1), (1, 0))):
            blk_a = v[:, pa[0], :, pa[1], :]
            blk_b = v[:, pb[0], :, pb[1], :]
            tmp = blk_a.copy()
            blk_a *= c
            blk_a += s * blk_b
            blk_b *= c
            blk_b += s * tmp

    def apply_rx(self, q: int, theta: float) -> None:
        v = self._axis1(q)
        c = math.cos(theta)
        s = -1j * math.sin(theta)
        a = v[:, 0, :]
        b = v[:, 1, :]
        tmp = a.copy()
        a *= c
        a += s * b
        b *= c
        b += s * tmp

    def apply_pauli(self, pauli: PauliString) -> None:
        for q in range(self.n):
            x = (pauli.xmask >> q) & 1
            z = (pauli.zmask >> q) & 1
            if x and z:
                self.apply_y(q)
            elif x:
                self.apply_x(q)
            elif z:
                self.apply_z(q)

    # -- measurement and reset ------------------------------------------------

    def prob_one(self, q: int) -> float:
        a = self._axis1(q)[:, 1, :]
        return float(np.sum(a.real * a.real + a.imag * a.imag))

    def collapse(self, q: int, value: int) -> float:
        """Project qubit q onto |value>, renormalize; returns branch prob."""
        p1 = self.prob_one(q)
        p = p1 if value == 1 else 1.0 - p1
        if p <= 0.0:
            raise SimulatorError("collapse onto zero-probability branch")
        v = self._axis1(q)
        v[:, 1 - value, :] = 0.0
        self.amp *= 1.0 / math.sqrt(p)
        return p

    def measure(self, q: int, rng: np.random.Generator) -> int:
        p1 = self.prob_one(q)
        value = 1 if rng.random() < p1 else 0
        self.collapse(q, value)
        return value

    def reset(self, q: int, rng: np.random.Generator) -> None:
        value = 1 if rng.random() < self.prob_one(q) else 0
        self.collapse(q, value)
        if value == 1:
            self.apply_x(q)

    def norm(self) -> float:
        return float(np.sum(self.amp.real ** 2 + self.amp.imag ** 2))

    def probabilities(self) -> np.ndarray:
        return self.amp.real ** 2 + self.amp.imag ** 2


# ---------------------------------------------------------------------------
# Noise model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    p2: float = 1.3e-3
    p1: float = 3e-5
    p_idle: float = 5e-4
    p_meas: float = 1e-3
    scale: float = 1.0

    def __post_init__(self):
        for name in ("p2", "p1", "p_idle", "p_meas"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.scale < 0.0:
            raise ValueError("scale must be nonnegative")

    def effective(self) -> "NoiseModel":
        s = self.scale
        return NoiseModel(
            p2=min(1.0, self.p2 * s),
            p1=min(1.0, self.p1 * s),
            p_idle=min(1.0, self.p_idle * s),
            p_meas=min(1.0, self.p_meas * s),
            scale=1.0,
        )

    @property
    def silent(self) -> bool:
        e = self.effective()
        return e.p2 == e.p1 == e.p_idle == e.p_meas == 0.0


def write_noise(model: NoiseModel) -> str:
    return (f"p2 {model.p2!r}\np1 {model.p1!r}\np_idle {model.p_idle!r}\n"
            f"p_meas {model.p_meas!r}\nscale {model.scale!r}\n")


def read_noise(text: str) -> NoiseModel:
    vals = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, value = line.split()
        vals[name] = float(value)
    return NoiseModel(**vals)


_PAULI1 = ("X", "Y", "Z")


def _apply_random_pauli(state: StateVector, qubits: Sequence[int],
                        rng: np.random.Generator) -> None:
    # uniform over the 4^m - 1 non-identity Paulis on the support
    m = len(qubits)
    code = int(rng.integers(1, 4 ** m))
    for q in qubits:
        p = code % 4
        code //= 4
        if p == 1:
            state.apply_x(q)
        elif p == 2:
            state.apply_y(q)
        elif p == 3:
            state.apply_z(q)


# ---------------------------------------------------------------------------
# Shots and records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShotRecord:
    bits: tuple[int, ...]
    check_values: tuple[int, ...]
    accepted: bool
    logical: int | None


def decode_bits(bits: Sequence[int], checks: Sequence[ParityCheck],
                decode: Mapping[int, frozenset[int]] | None
                ) -> tuple[tuple[int, ...], bool, int | None]:
    values = tuple(
        sum(bits[b] for b in c.bits) % 2 for c in checks
    )
    accepted = all(v == c.expected for v, c in zip(values, checks))
    logical = None
    if accepted and decode is not None:
        logical = 0
        for i, bit_set in decode.items():
            if sum(bits[b] for b in bit_set) % 2:
                logical |= 1 << (i - 1)
    return values, accepted, logical


def make_record(bits: Sequence[int], checks: Sequence[ParityCheck],
                decode: Mapping[int, frozenset[int]] | None) -> ShotRecord:
    values, accepted, logical = decode_bits(bits, checks, decode)
    return ShotRecord(tuple(bits), values, accepted, logical)


def _per_shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, shot)))


def sample_shots(circuit: PhysicalCircuit, noise: NoiseModel, shots: int,
                 seed: int,
                 checks: Sequence[ParityCheck] = (),
                 decode: Mapping[int, frozenset[int]] | None = None,
                 inject: Sequence[tuple[int, PauliString]] = (),
                 cap: int = DEFAULT_QUBIT_CAP) -> list[ShotRecord]:
    """Trajectory sampling of a physical circuit under the noise model.

    `inject` lists deterministic Pauli errors applied after given gate
    indices in every shot (used for fault cross-checks)."""
    eff = noise.effective()
    sched = layered_schedule(circuit)
    inject_map: dict[int, list[PauliString]] = {}
    for gi, pauli in inject:
        inject_map.setdefault(gi, []).append(pauli)

    # fixed traversal script: per layer its gates, then its idle slots
    layer_plan = []
    n_2q = n_1q = n_meas = n_idle = 0
    for layer_gates in sched.layers:
        touched = {q for gi in layer_gates for q in circuit.gates[gi].qubits}
        has_2q = any(circuit.gates[gi].is_two_qubit for gi in layer_gates)
        idle = [q for q in range(circuit.num_qubits) if q not in touched] \
            if has_2q else []
        sites = []
        for gi in layer_gates:
            g = circuit.gates[gi]
            if g.is_two_qubit:
                sites.append(("2q", n_2q))
                n_2q += 1
            elif g.kind in (GateKind.H, GateKind.X, GateKind.Z):
                sites.append(("1q", n_1q))
                n_1q += 1
            elif g.kind in (GateKind.MEASURE_Z, GateKind.MEASURE_X):
                sites.append(("meas", n_meas))
                n_meas += 1
            else:
                sites.append((None, 0))
        layer_plan.append((layer_gates, sites, idle, n_idle))
        n_idle += len(idle)

    # outcome distribution of the noise-free circuit, for the (common) shots
    # on which no Pauli event fires
    ideal = sorted(exact_bit_distribution(circuit, cap=cap).items())
    ideal_bits = [b for b, _ in ideal]
    ideal_cum = np.cumsum([p for _, p in ideal])

    records = []
    for shot in range(shots):
        rng = _per_shot_rng(seed, shot)
        e2 = rng.random(n_2q) < eff.p2 if n_2q else ()
        e1 = rng.random(n_1q) < eff.p1 if n_1q else ()
        em = rng.random(n_meas) < eff.p_meas if n_meas else ()
        ei = rng.random(n_idle) < eff.p_idle if n_idle else ()
        pauli_free = not (np.any(e2) or np.any(e1) or np.any(ei)) and not inject_map
        if pauli_free:
            pick = int(np.searchsorted(ideal_cum, rng.random()))
            bits = list(ideal_bits[min(pick, len(ideal_bits) - 1)])
            mi = 0
            for layer_gates, sites, idle, _ in layer_plan:
                for gi, (cat, _) in zip(layer_gates, sites):
                    if cat == "meas":
                        if em[mi]:
                            bits[circuit.gates[gi].clbit] ^= 1
                        mi += 1
            records.append(make_record(bits, checks, decode))
            continue
        state = StateVector(circuit.num_qubits, cap=cap)
        bits = [0] * circuit.num_clbits
        for layer_gates, sites, idle, idle_base in layer_plan:
            for gi, (cat, si) in zip(layer_gates, sites):
                g = circuit.gates[gi]
                if cat == "meas":
                    if g.kind is GateKind.MEASURE_X:
                        state.apply_h(g.qubits[0])
                    v = state.measure(g.qubits[0], rng)
                    if em[si]:
                        v ^= 1
                    bits[g.clbit] = v
                else:
                    _apply_gate(state, g, bits, rng, _SILENT)
                    if cat == "2q" and e2[si]:
                        _apply_random_pauli(state, g.qubits, rng)
                    elif cat == "1q" and e1[si]:
                        _apply_random_pauli(state, g.qubits, rng)
                for pauli in inject_map.get(gi, ()):
                    state.apply_pauli(pauli)
            for off, q in enumerate(idle):
                if ei[idle_base + off]:
                    _apply_random_pauli(state, (q,), rng)
        records.append(make_record(bits, checks, decode))
    return records


def _apply_gate(state: StateVector, g: Gate, bits: list[int],
                rng: np.random.Generator, eff: NoiseModel) -> None:
    kind = g.kind
    if kind is GateKind.CNOT:
        state.apply_cx(*g.qubits)
    elif kind is GateKind.RZZ:
        state.apply_rzz(g.qubits[0], g.qubits[1], g.angle)
    elif kind is GateKind.RXX:
        state.apply_rxx(g.qubits[0], g.qubits[1], g.angle)
    elif kind is GateKind.H:
        state.apply_h(g.qubits[0])
    elif kind is GateKind.X:
        state.apply_x(g.qubits[0])
    elif kind is GateKind.Z:
        state.apply_z(g.qubits[0])
    elif kind is GateKind.MEASURE_Z:
        v = state.measure(g.qubits[0], rng)
        if eff.p_meas > 0 and rng.random() < eff.p_meas:
            v ^= 1
        bits[g.clbit] = v
    elif kind is GateKind.MEASURE_X:
        state.apply_h(g.qubits[0])
        v = state.measure(g.qubits[0], rng)
        if eff.p_meas > 0 and rng.random() < eff.p_meas:
            v ^= 1
        bits[g.clbit] = v
    elif kind is GateKind.RESET:
        state.reset(g.qubits[0], rng)
    elif kind is GateKind.BARRIER:
        pass
    else:  # pragma: no cover
        raise NotImplementedError(kind)


# ---------------------------------------------------------------------------
# Exact (noiseless) outcome distributions
# ---------------------------------------------------------------------------

def exact_bit_distribution(circuit: PhysicalCircuit,
                           inject: Sequence[tuple[int, PauliString]] = (),
                           branch_tol: float = 1e-10,
                           max_branches: int = 64,
                           cap: int = DEFAULT_QUBIT_CAP
                           ) -> dict[tuple[int, ...], float]:
    """Exact joint distribution over the classical bits.

    Mid-circuit measurements branch only when both outcomes have probability
    above branch_tol (noiseless encoded circuits keep a single branch); the
    trailing block of measurements is evaluated jointly from amplitudes.
    """
    inject_map: dict[int, list[PauliString]] = {}
    for gi, pauli in inject:
        inject_map.setdefault(gi, []).append(pauli)

    gates = circuit.gates
    tail_start = len(gates)
    while tail_start > 0 and gates[tail_start - 1].kind in (
        GateKind.MEASURE_Z, GateKind.MEASURE_X, GateKind.BARRIER
    ):
        tail_start -= 1

    branches: list[tuple[float, StateVector, list[int]]] = [
        (1.0, StateVector(circuit.num_qubits, cap=cap), [0] * circuit.num_clbits)
    ]
    for gi in range(tail_start):
        g = gates[gi]
        if g.kind in (GateKind.MEASURE_Z, GateKind.MEASURE_X, GateKind.RESET):
            new_branches = []
            for weight, state, bits in branches:
                if g.kind is GateKind.MEASURE_X:
                    state.apply_h(g.qubits[0])
                p1 = state.prob_one(g.qubits[0])
                outcomes = []
                if p1 < 1.0 - branch_tol:
                    outcomes.append(0)
                if p1 > branch_tol:
                    outcomes.append(1)
                for v in outcomes:
                    st = state.copy() if len(outcomes) > 1 else state
                    p = st.collapse(g.qubits[0], v)
                    nb = bits if g.kind is GateKind.RESET else list(bits)
                    if g.kind is GateKind.RESET:
                        if v == 1:
                            st.apply_x(g.qubits[0])
                    else:
                        nb[g.clbit] = v
                    new_branches.append((weight * p, st, nb))
            branches = new_branches
        else:
            for _, state, bits in branches:
                _apply_gate(state, g, bits, rng=None, eff=_SILENT)
        for pauli in inject_map.get(gi, ()):
            for _, state, _ in branches:
                state.apply_pauli(pauli)
        if len(branches) > max_branches:
            raise SimulatorError("mid-circuit branch budget exceeded")

    # trailing measurements, jointly
    tail = [g for g in gates[tail_start:] if g.kind is not GateKind.BARRIER]
    dist: dict[tuple[int, ...], float] = {}
    for weight, state, bits in branches:
        for g in tail:
            if g.kind is GateKind.MEASURE_X:
                state.apply_h(g.qubits[0])
        probs = state.probabilities()
        idx = np.arange(len(probs))
        sig = np.zeros(len(probs), dtype=np.int64)
        positions: dict[int, int] = {}
        for g in tail:
            pos = positions.setdefault(g.clbit, len(positions))
            sig |= (((idx >> g.qubits[0]) & 1) << pos).astype(np.int64)
        order = sorted(positions, key=positions.get)
        mass = np.bincount(sig, weights=probs, minlength=1)
        for s, pm in enumerate(mass):
            if pm <= 1e-15:
                continue
            nb = list(bits)
            for bitpos, clbit in enumerate(order):
                nb[clbit] = (s >> bitpos) & 1
            key = tuple(nb)
            dist[key] = dist.get(key, 0.0) + weight * pm
    return dist


_SILENT = NoiseModel(p2=0, p1=0, p_idle=0, p_meas=0, scale=0)


def _unitary_gate_guard():  # pragma: no cover
    pass


def exact_logical_distribution(circuit: PhysicalCircuit,
                               checks: Sequence[ParityCheck],
                               decode: Mapping[int, frozenset[int]],
                               inject: Sequence[tuple[int, PauliString]] = (),
                               cap: int = DEFAULT_QUBIT_CAP
                               ) -> tuple[float, dict[int, float]]:
    """(acceptance probability, post-selected decoded logical distribution)."""
    raw = exact_bit_distribution(circuit, inject=inject, cap=cap)
    acc = 0.0
    out: dict[int, float] = {}
    for bits, p in raw.items():
        _, accepted, logical = decode_bits(bits, checks, decode)
        if accepted:
            acc += p
            out[logical] = out.get(logical, 0.0) + p
    if acc > 0:
        out = {x: p / acc for x, p in out.items()}
    return acc, out


# ---------------------------------------------------------------------------
# Unencoded (logical) reference simulation
# ---------------------------------------------------------------------------

def logical_statevector(lc: LogicalCircuit, cap: int = DEFAULT_QUBIT_CAP
                        ) -> StateVector:
    state = StateVector(lc.k, cap=cap)
    for q in range(lc.k):
        state.apply_h(q)
    for phase, mixer in zip(lc.phase_layers, lc.mixer_layers):
        for g in phase:
            state.apply_rzz(g.u, g.v, g.angle)
        for m in mixer:
            state.apply_rx(m.qubit, m.angle)
    return state


def logical_exact_distribution(lc: LogicalCircuit,
                               cap: int = DEFAULT_QUBIT_CAP) -> dict[int, float]:
    probs = logical_statevector(lc, cap=cap).probabilities()
    return {x: float(p) for x, p in enumerate(probs) if p > 1e-15}


def _phase_layer_layers(gates, k) -> list[list]:
    frontier = [0] * k
    layers: list[list] = []
    for g in gates:
        layer = max(frontier[g.u], frontier[g.v])
        while len(layers) <= layer:
            layers.append([])
        layers[layer].append(g)
        frontier[g.u] = frontier[g.v] = layer + 1
    return layers


def sample_logical_shots(lc: LogicalCircuit, noise: NoiseModel, shots: int,
                         seed: int, cap: int = DEFAULT_QUBIT_CAP
                         ) -> list[ShotRecord]:
    """Unencoded reference under the same noise model.

    Phase rotations are two-qubit gates (ASAP-layered per phase layer, with
    idle noise charged per layer); mixer rotations are single-qubit."""
    eff = noise.effective()
    records = []
    phase_layers = [
        _phase_layer_layers(gates, lc.k) for gates in lc.phase_layers
    ]
    for shot in range(shots):
        rng = _per_shot_rng(seed, shot)
        state = StateVector(lc.k, cap=cap)
        for q in range(lc.k):
            state.apply_h(q)
        for layers, mixer in zip(phase_layers, lc.mixer_layers):
            for layer in layers:
                touched = set()
                for g in layer:
                    state.apply_rzz(g.u, g.v, g.angle)
                    touched.update((g.u, g.v))
                    if eff.p2 > 0 and rng.random() < eff.p2:
                        _apply_random_pauli(state, (g.u, g.v), rng)
                if eff.p_idle > 0:
                    for q in range(lc.k):
                        if q not in touched and rng.random() < eff.p_idle:
                            _apply_random_pauli(state, (q,), rng)
            for m in mixer:
                state.apply_rx(m.qubit, m.angle)
                if eff.p1 > 0 and rng.random() < eff.p1:
                    _apply_random_pauli(state, (m.qubit,), rng)
        bits = []
        for q in range(lc.k):
            v = state.measure(q, rng)
            if eff.p_meas > 0 and rng.random() < eff.p_meas:
                v ^= 1
            bits.append(v)
        logical = sum(b << i for i, b in enumerate(bits))
        records.append(ShotRecord(tuple(bits), (), True, logical))
    return records


# ---------------------------------------------------------------------------
# Post-selection, energies, distances
# ---------------------------------------------------------------------------

def post_selection_rate(records: Sequence[ShotRecord]) -> float:
    if not records:
        raise ValueError("no records")
    return sum(1 for r in records if r.accepted) / len(records)


def accepted_distribution(records: Sequence[ShotRecord]) -> dict[int, float]:
    kept = [r.logical for r in records if r.accepted]
    if not kept:
        return {}
    out: dict[int, float] = {}
    for x in kept:
        out[x] = out.get(x, 0.0) + 1.0
    return {x: c / len(kept) for x, c in out.items()}


def energy_distribution(dist_or_records, graph: ProblemGraph) -> dict[float, float]:
    """Aggregate a bitstring distribution (or shot records) into energies."""
    if isinstance(dist_or_records, Mapping):
        dist = dist_or_records
    else:
        dist = accepted_distribution(dist_or_records)
    out: dict[float, float] = {}
    for x, p in dist.items():
        e = bit_energy(graph, x)
        out[e] = out.get(e, 0.0) + p
    return out


@dataclass(frozen=True)
class TruncateResult:
    dist: dict[float, float]
    applied: bool


def postprocess_truncate(dist: Mapping[float, float], cutoff: float
                         ) -> TruncateResult:
    """Drop mass at energies above the cutoff and renormalize.

    If nothing survives, the input comes back unchanged, flagged."""
    kept = {e: p for e, p in dist.items() if e <= cutoff}
    total = sum(kept.values())
    if total <= 0.0:
        return TruncateResult(dict(dist), applied=False)
    return TruncateResult({e: p / total for e, p in kept.items()}, applied=True)


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in keys)
