"""Exhaustive single-fault Pauli propagation and fault-tolerance checks.

Faults are Pauli errors placed after one gate (or a classical flip of one
measurement).  Propagation through CNOT/H/X/Z is the exact Clifford action
on Pauli masks; a rotation whose generator anticommutes with the incoming
Pauli splits the propagation into two branches, both of which are tracked
and must individually be safe (a conservative over-approximation of the
coherent evolution).  Measurements record a classical flip whenever the
accumulated error anticommutes with the measured operator.

A gadget passes certification when no enumerated fault is classified as a
logical error under its context:

  * init gadgets compare terminals against the stabilizer group of the
    prepared |+...+> state (phase flips of that state are what matter);
  * syndrome gadgets compare against the bare code stabilizers, with ideal
    trailing checks catching anything anticommuting with S_x or S_z;
  * final gadgets are judged purely on outcomes: a fault is harmless only
    if no check bit and no decoded logical bit flips.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .circuit import Gate, GateKind, PhysicalCircuit
from .gadgets import Gadget, GadgetKind, IcebergLayout, ParityCheck


@dataclass(frozen=True)
class PauliString:
    xmask: int = 0
    zmask: int = 0

    @staticmethod
    def from_ops(ops: Iterable[tuple[int, str]]) -> "PauliString":
        x = z = 0
        for q, p in ops:
            if p in ("X", "Y"):
                x |= 1 << q
            if p in ("Z", "Y"):
                z |= 1 << q
            if p not in ("X", "Y", "Z"):
                raise ValueError(f"not a Pauli: {p}")
        return PauliString(x, z)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return PauliString(self.xmask ^ other.xmask, self.zmask ^ other.zmask)

    def commutes(self, other: "PauliString") -> bool:
        overlap = (self.xmask & other.zmask).bit_count() \
            + (self.zmask & other.xmask).bit_count()
        return overlap % 2 == 0

    def restricted(self, mask: int) -> "PauliString":
        return PauliString(self.xmask & mask, self.zmask & mask)

    @property
    def identity(self) -> bool:
        return self.xmask == 0 and self.zmask == 0

    def weight(self) -> int:
        return (self.xmask | self.zmask).bit_count()

    def label(self, num_qubits: int) -> str:
        out = []
        for q in range(num_qubits):
            x = (self.xmask >> q) & 1
            z = (self.zmask >> q) & 1
            out.append("IXZY"[x + 2 * z])
        return "".join(out)


class FaultClass(Enum):
    DETECTED_BY_CHECK = "detected"
    STABILIZER_EQUIVALENT = "stabilizer"
    LOGICAL_ERROR = "logical"
    NONPAULI_BRANCHED = "branched"


@dataclass(frozen=True)
class FaultLocation:
    gate_index: int
    pauli: PauliString | None = None   # None for a classical measurement flip
    flip_bit: int | None = None

    def describe(self, circuit: PhysicalCircuit) -> str:
        g = circuit.gates[self.gate_index]
        what = (f"flip c{self.flip_bit}" if self.flip_bit is not None
                else self.pauli.label(circuit.num_qubits))
        return f"after gate {self.gate_index} ({g.kind.value} {g.qubits}): {what}"


@dataclass(frozen=True)
class Branch:
    terminal: PauliString
    flipped_bits: frozenset[int]
    classification: FaultClass


@dataclass(frozen=True)
class FaultReport:
    location: FaultLocation
    branches: tuple[Branch, ...]

    @property
    def classification(self) -> FaultClass:
        kinds = {b.classification for b in self.branches}
        if FaultClass.LOGICAL_ERROR in kinds:
            return FaultClass.LOGICAL_ERROR
        if len(kinds) == 1:
            return next(iter(kinds))
        return FaultClass.NONPAULI_BRANCHED

    @property
    def is_logical(self) -> bool:
        return self.classification is FaultClass.LOGICAL_ERROR

    @property
    def always_detected(self) -> bool:
        return all(b.classification is FaultClass.DETECTED_BY_CHECK
                   for b in self.branches)


def propagate_pauli(circuit: PhysicalCircuit, start: int, pauli: PauliString,
                    max_branches: int = 4096) -> list[tuple[PauliString, frozenset[int]]]:
    """Push a Pauli inserted after gate index `start` to the circuit end.

    Returns the branch list [(terminal, flipped classical bits)].
    """
    branches: dict[tuple[int, int], set[int]] = {(pauli.xmask, pauli.zmask): set()}
    for g in circuit.gates[start + 1:]:
        new: dict[tuple[int, int], set[int]] = {}
        for (x, z), flips in branches.items():
            for nx, nz, extra in _step(g, x, z):
                key = (nx, nz)
                fl = flips if extra is None else flips ^ {extra}
                if key in new and new[key] != fl:
                    # same Pauli with different flip history: keep both by
                    # folding flips (conservative: should not occur in the
                    # contexts exercised here)
                    new[key] = new[key] | fl
                else:
                    new[key] = set(fl)
        branches = new
        if len(branches) > max_branches:
            raise RuntimeError("fault propagation branch budget exceeded")
    return [(PauliString(x, z), frozenset(f)) for (x, z), f in branches.items()]


def _step(g: Gate, x: int, z: int):
    """Yield (xmask, zmask, flipped_bit_or_None) continuations through one gate."""
    kind = g.kind
    if kind is GateKind.CNOT:
        c, t = g.qubits
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
        yield x, z, None
    elif kind is GateKind.H:
        q = g.qubits[0]
        xb, zb = (x >> q) & 1, (z >> q) & 1
        x = (x & ~(1 << q)) | (zb << q)
        z = (z & ~(1 << q)) | (xb << q)
        yield x, z, None
    elif kind in (GateKind.X, GateKind.Z, GateKind.BARRIER):
        yield x, z, None
    elif kind is GateKind.RZZ or kind is GateKind.RXX:
        a, b = g.qubits
        gen = 1 << a | 1 << b
        if kind is GateKind.RZZ:
            anti = ((x & gen).bit_count()) % 2 == 1
            gx, gz = 0, gen
        else:
            anti = ((z & gen).bit_count()) % 2 == 1
            gx, gz = gen, 0
        yield x, z, None
        if anti:
            yield x ^ gx, z ^ gz, None
    elif kind is GateKind.MEASURE_Z:
        q = g.qubits[0]
        flip = g.clbit if (x >> q) & 1 else None
        yield x, z & ~(1 << q), flip
    elif kind is GateKind.MEASURE_X:
        q = g.qubits[0]
        flip = g.clbit if (z >> q) & 1 else None
        yield x & ~(1 << q), z, flip
    elif kind is GateKind.RESET:
        q = g.qubits[0]
        yield x & ~(1 << q), z & ~(1 << q), None
    else:  # pragma: no cover
        raise NotImplementedError(kind)


# ---------------------------------------------------------------------------
# Terminal classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyContext:
    """What counts as detected/harmless at the end of a fragment."""

    layout: IcebergLayout
    checks: tuple[ParityCheck, ...]
    decode: dict[int, frozenset[int]] | None
    harmless: str            # "code", "plus_state", or "outcomes"
    trailing_checks: bool    # ideal S_x/S_z measurement afterwards?

    def data_mask(self) -> int:
        return (1 << self.layout.n) - 1


def context_for_gadget(gadget: Gadget) -> VerifyContext:
    kind = gadget.kind
    if kind in (GadgetKind.INIT_OLD, GadgetKind.INIT_NEW):
        harmless = "plus_state"
        trailing = True
    elif kind in (GadgetKind.SYNDROME_OLD, GadgetKind.SYNDROME_NEW):
        harmless = "code"
        trailing = True
    else:
        harmless = "outcomes"
        trailing = False
    return VerifyContext(gadget.layout, gadget.checks, gadget.decode,
                         harmless, trailing)


def classify_terminal(terminal: PauliString, flips: frozenset[int],
                      ctx: VerifyContext) -> FaultClass:
    if any(sum(1 for b in c.bits if b in flips) % 2 == 1 for c in ctx.checks):
        return FaultClass.DETECTED_BY_CHECK
    if ctx.harmless == "outcomes":
        if ctx.decode and any(
            sum(1 for b in bits if b in flips) % 2 == 1
            for bits in ctx.decode.values()
        ):
            return FaultClass.LOGICAL_ERROR
        return FaultClass.STABILIZER_EQUIVALENT
    full = ctx.data_mask()
    data = terminal.restricted(full)
    # ideal trailing stabilizer checks catch odd-weight components
    if ctx.trailing_checks:
        if data.xmask.bit_count() % 2 == 1 or data.zmask.bit_count() % 2 == 1:
            return FaultClass.DETECTED_BY_CHECK
    if ctx.harmless == "plus_state":
        # stabilizer group of |+...+>: even X-strings, optionally times S_z
        if data.zmask in (0, full) and data.xmask.bit_count() % 2 == 0:
            return FaultClass.STABILIZER_EQUIVALENT
        return FaultClass.LOGICAL_ERROR
    # bare code: {I, S_x, S_z, S_x S_z}
    if data.xmask in (0, full) and data.zmask in (0, full):
        return FaultClass.STABILIZER_EQUIVALENT
    return FaultClass.LOGICAL_ERROR


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

_SINGLE = ("X", "Y", "Z")


def enumerate_fault_locations(circuit: PhysicalCircuit,
                              gate_indices: Sequence[int] | None = None
                              ) -> list[FaultLocation]:
    locs: list[FaultLocation] = []
    indices = range(len(circuit.gates)) if gate_indices is None else gate_indices
    for i in indices:
        g = circuit.gates[i]
        if g.kind is GateKind.BARRIER:
            continue
        if g.kind in (GateKind.MEASURE_Z, GateKind.MEASURE_X):
            locs.append(FaultLocation(i, flip_bit=g.clbit))
            continue
        qs = g.qubits
        if len(qs) == 1:
            for p in _SINGLE:
                locs.append(FaultLocation(i, PauliString.from_ops([(qs[0], p)])))
        else:
            for pa in ("I",) + _SINGLE:
                for pb in ("I",) + _SINGLE:
                    if pa == pb == "I":
                        continue
                    ops = [(q, p) for q, p in zip(qs, (pa, pb)) if p != "I"]
                    locs.append(FaultLocation(i, PauliString.from_ops(ops)))
    return locs


def run_fault(circuit: PhysicalCircuit, loc: FaultLocation,
              ctx: VerifyContext) -> FaultReport:
    if loc.flip_bit is not None:
        flips = frozenset({loc.flip_bit})
        cls = classify_terminal(PauliString(), flips, ctx)
        return FaultReport(loc, (Branch(PauliString(), flips, cls),))
    outs = propagate_pauli(circuit, loc.gate_index, loc.pauli)
    branches = tuple(
        Branch(term, flips, classify_terminal(term, flips, ctx))
        for term, flips in outs
    )
    return FaultReport(loc, branches)


@dataclass
class FtSummary:
    gadget_kind: GadgetKind | None
    total: int = 0
    counts: dict[FaultClass, int] = field(default_factory=dict)
    escapes: list[FaultReport] = field(default_factory=list)

    @property
    def num_logical(self) -> int:
        return self.counts.get(FaultClass.LOGICAL_ERROR, 0)

    @property
    def passed(self) -> bool:
        return self.num_logical == 0


def check_gadget_ft(gadget: Gadget) -> FtSummary:
    """Exhaustive single-fault enumeration over one gadget fragment."""
    ctx = context_for_gadget(gadget)
    summary = FtSummary(gadget.kind)
    for loc in enumerate_fault_locations(gadget.fragment):
        rep = run_fault(gadget.fragment, loc, ctx)
        summary.total += 1
        cls = rep.classification
        summary.counts[cls] = summary.counts.get(cls, 0) + 1
        if rep.is_logical:
            summary.escapes.append(rep)
    return summary


def classify_rotation_faults(layout: IcebergLayout, logical_index: int,
                             use_bottom: bool = False) -> dict[str, bool]:
    """For the 15 two-qubit Paulis after an encoded rotation on (anchor, i),
    map label -> True when the fault escapes detection (commutes with both
    stabilizers).  Exactly XX, YY, ZZ escape."""
    if not 1 <= logical_index <= layout.k:
        raise ValueError("logical index out of range")
    anchor = layout.b if use_bottom else layout.t
    full = (1 << layout.n) - 1
    s_x = PauliString(xmask=full)
    s_z = PauliString(zmask=full)
    out: dict[str, bool] = {}
    for pa in ("I", "X", "Y", "Z"):
        for pb in ("I", "X", "Y", "Z"):
            if pa == pb == "I":
                continue
            ops = [(q, p) for q, p in ((anchor, pa), (logical_index, pb))
                   if p != "I"]
            pauli = PauliString.from_ops(ops)
            escapes = pauli.commutes(s_x) and pauli.commutes(s_z)
            out[pa + pb] = escapes
    return out
