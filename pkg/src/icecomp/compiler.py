"""Baseline insertion compiler and the tree-search co-compiler.

Graph vertex v lives on logical qubit v+1 (physical qubit v+1); the top
qubit is 0 and the bottom qubit is k+1.  Phase rotations map to RZZ on the
two data qubits, mixer rotations to RXX anchored on the top qubit (or the
bottom qubit as well, when the circuit is flagged globally flip-symmetric).

The co-compiler searches over circuit states: each node is a prefix of
scheduled layers plus per-component progress cursors.  Nodes are ranked by
F = G + H where G is the layer count so far and H the max weighted degree
of the uncompiled-interaction graph.  Expansion picks up to `width`
children by maximum-weight matching over the executable-gate graph, with
at most one syndrome block per layer; syndrome internals follow the
fault-tolerant pipeline templates, with the pair-to-slot binding chosen
during the search when resynthesis is enabled.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import networkx as nx

from .circuit import (ComponentRole, Gate, GateKind, PhysicalCircuit,
                      layered_schedule, two_qubit_depth)
from .gadgets import (Gadget, GadgetKind, IcebergLayout, ParityCheck,
                      build_gadget, gadget_role, syndrome_lag_schedule)
from .maxcut import (LogicalCircuit, MixerGate, PhaseGate, ProblemGraph,
                     QaoaParams, build_qaoa)


class CompileError(ValueError):
    pass


class GadgetSet(Enum):
    OLD = "old"
    NEW = "new"


@dataclass(frozen=True)
class CompileConfig:
    num_syndromes: int = 3
    gadget_set: GadgetSet = GadgetSet.NEW
    use_z2: bool = False
    resynthesize: bool = False
    expansion_width: int = 3
    # best-first node budget before falling back to a greedy rollout from
    # the best frontier node; compile quality saturates by a few hundred
    # nodes on every family tested, so sweeps keep this small
    queue_cap: int = 2000
    seed: int = 0

    def validate(self, layout: IcebergLayout, graph: ProblemGraph) -> None:
        if self.num_syndromes < 0:
            raise CompileError("num_syndromes must be >= 0")
        if self.expansion_width < 1:
            raise CompileError("expansion_width must be >= 1")
        if (self.gadget_set is GadgetSet.NEW and self.num_syndromes > 0
                and layout.n % 4 != 0):
            raise CompileError(
                "new syndrome gadget needs k+2 divisible by 4"
            )
        if self.use_z2 and not graph.unweighted:
            raise CompileError("Z2 mixer anchoring needs an unweighted instance")


@dataclass
class EncodedCircuit:
    circuit: PhysicalCircuit
    layout: IcebergLayout
    checks: tuple[ParityCheck, ...]
    decode: dict[int, frozenset[int]]
    graph: ProblemGraph
    params: QaoaParams
    config: CompileConfig
    mode: str
    meta: dict = field(default_factory=dict)

    @property
    def depth_2q(self) -> int:
        return two_qubit_depth(self.circuit)

    def gate_multiset(self) -> dict:
        out: dict = {}
        for g in self.circuit.gates:
            if g.is_two_qubit:
                key = (g.kind, g.angle)
                out[key] = out.get(key, 0) + 1
        return out


def _gadget_kinds(gs: GadgetSet) -> tuple[GadgetKind, GadgetKind, GadgetKind]:
    if gs is GadgetSet.OLD:
        return (GadgetKind.INIT_OLD, GadgetKind.SYNDROME_OLD, GadgetKind.FINAL_OLD)
    return (GadgetKind.INIT_NEW, GadgetKind.SYNDROME_NEW, GadgetKind.FINAL_NEW)


def _rebase(gadget: Gadget, clbit_offset: int, component: int):
    gates = []
    for g in gadget.fragment.gates:
        clbit = None if g.clbit is None else g.clbit + clbit_offset
        gates.append(Gate(g.kind, g.qubits, angle=g.angle, clbit=clbit,
                          component=component))
    checks = tuple(
        ParityCheck(frozenset(b + clbit_offset for b in c.bits), c.expected)
        for c in gadget.checks
    )
    decode = None
    if gadget.decode is not None:
        decode = {i: frozenset(b + clbit_offset for b in bits)
                  for i, bits in gadget.decode.items()}
    return gates, checks, decode


def _schedule_chunk(chunk: list[tuple[int, ComponentRole, list]], t_qubit: int
                    ) -> list[tuple[int, object]]:
    """List-schedule one algorithmic chunk (phase/mixer components between
    two gadget fences) and return (component_id, gate_spec) in layer order.

    The mixer chain on the top qubit is the critical path, so every layer
    schedules a ready mixer when one exists, then fills the remaining
    qubits with ready phase gates, heaviest remaining degree first."""
    remaining: list[set[int]] = [set(range(len(gates))) for _, _, gates in chunk]
    # per component and qubit: how many of its gates still touch the qubit
    touch: list[dict[int, int]] = []
    for _, role, gates in chunk:
        tc: dict[int, int] = {}
        for g in gates:
            qs = (g.u + 1, g.v + 1) if role is ComponentRole.PHASE_LAYER \
                else (t_qubit, g.qubit + 1)
            for q in qs:
                tc[q] = tc.get(q, 0) + 1
        touch.append(tc)

    def ready(ci: int, qs: tuple[int, ...]) -> bool:
        return all(
            all(touch[cj].get(q, 0) == 0 for q in qs)
            for cj in range(ci)
        )

    out: list[tuple[int, object]] = []
    total = sum(len(r) for r in remaining)
    while total:
        busy: set[int] = set()
        placed_any = False
        # one mixer per layer keeps the top-qubit chain moving
        for ci, (cid, role, gates) in enumerate(chunk):
            if role is not ComponentRole.MIXER_LAYER or t_qubit in busy:
                continue
            best = None
            for gi in sorted(remaining[ci]):
                mg = gates[gi]
                q = mg.qubit + 1
                if q in busy or not ready(ci, (t_qubit, q)):
                    continue
                load = sum(touch[cj].get(q, 0)
                           for cj in range(ci + 1, len(chunk)))
                cand = (-load, q, gi)
                if best is None or cand < best:
                    best = cand
            if best is not None:
                _, q, gi = best
                mg = gates[gi]
                remaining[ci].discard(gi)
                touch[ci][t_qubit] -= 1
                touch[ci][q] -= 1
                out.append((cid, mg))
                busy |= {t_qubit, q}
                total -= 1
                placed_any = True
                break
        # fill with phase gates
        for ci, (cid, role, gates) in enumerate(chunk):
            if role is not ComponentRole.PHASE_LAYER:
                continue
            cands = []
            for gi in sorted(remaining[ci]):
                pg = gates[gi]
                a, b = pg.u + 1, pg.v + 1
                if a in busy or b in busy or not ready(ci, (a, b)):
                    continue
                w = touch[ci].get(a, 0) + touch[ci].get(b, 0)
                cands.append((-w, a, b, gi))
            for _, a, b, gi in sorted(cands):
                if a in busy or b in busy:
                    continue
                pg = gates[gi]
                remaining[ci].discard(gi)
                touch[ci][a] -= 1
                touch[ci][b] -= 1
                out.append((cid, pg))
                busy |= {a, b}
                total -= 1
                placed_any = True
        if not placed_any:
            raise CompileError("chunk scheduler stalled")
    return out


def syndrome_insertion_points(sizes: Sequence[int], s: int) -> list[int]:
    """After how many algorithmic components each syndrome goes, splitting
    the gate count into s+1 near-equal chunks without cutting a component."""
    total = sum(sizes)
    points: list[int] = []
    cum = 0
    j = 1
    for i, sz in enumerate(sizes):
        cum += sz
        while j <= s and cum >= j * total / (s + 1) - 1e-9:
            points.append(i + 1)
            j += 1
    while j <= s:
        points.append(len(sizes))
        j += 1
    return points


def predetermine_init_order(graph: ProblemGraph, gadget_set: GadgetSet
                            ) -> tuple[int, ...]:
    """Implicit init order putting high-degree vertices where the gadget
    frees them earliest; top and bottom qubits sit at the branch roots."""
    layout = IcebergLayout(graph.num_vertices)
    deg = graph.degrees()
    ranked = sorted(range(graph.num_vertices),
                    key=lambda v: (-deg[v], v))
    qubits = [v + 1 for v in ranked]
    if gadget_set is GadgetSet.OLD:
        return (layout.t, *qubits, layout.b)
    # two branches: earliest-freeing slots are those nearest each root
    order = [0] * layout.n
    order[0] = layout.t
    order[-1] = layout.b
    lo, hi = 1, layout.n - 2
    for i, q in enumerate(qubits):
        if i % 2 == 0:
            order[lo] = q
            lo += 1
        else:
            order[hi] = q
            hi -= 1
    return tuple(order)


# ---------------------------------------------------------------------------
# Baseline: barrier-fenced gadget insertion
# ---------------------------------------------------------------------------

def compile_baseline(graph: ProblemGraph, params: QaoaParams,
                     cfg: CompileConfig) -> EncodedCircuit:
    """Insert default-order gadgets around the algorithmic circuit.

    Gadgets are fenced with full-width barriers (protecting their structure
    from any later rescheduling); algorithmic components in between are left
    to ASAP layering.  Mixers anchor on the top qubit only."""
    layout = IcebergLayout(graph.num_vertices)
    cfg.validate(layout, graph)
    init_kind, syn_kind, final_kind = _gadget_kinds(cfg.gadget_set)
    lc = build_qaoa(graph, params)
    s = cfg.num_syndromes
    n = layout.n

    init_g = build_gadget(init_kind, layout.k)
    syn_gs = [build_gadget(syn_kind, layout.k) for _ in range(s)]
    final_g = build_gadget(final_kind, layout.k)
    final_off = 1 + 2 * s
    num_clbits = final_off + final_g.num_clbits

    circ = PhysicalCircuit(layout.num_qubits, num_clbits)
    checks: list[ParityCheck] = []
    cid = itertools.count()

    def splice(gadget: Gadget, off: int):
        # full-width fences: the naive flow never co-schedules algorithmic
        # gates into gadget spans
        c = next(cid)
        circ.begin_component(c, gadget_role(gadget.kind))
        gates, gchecks, gdecode = _rebase(gadget, off, c)
        circ.barrier(component=c)
        for g in gates:
            circ.add(g)
        circ.barrier(component=c)
        checks.extend(gchecks)
        return gdecode

    splice(init_g, 0)

    alg: list[tuple[ComponentRole, list]] = []
    for t in range(params.p):
        alg.append((ComponentRole.PHASE_LAYER, lc.phase_layers[t]))
        alg.append((ComponentRole.MIXER_LAYER, lc.mixer_layers[t]))
    points = syndrome_insertion_points([len(g) for _, g in alg], s)

    # walk chunk by chunk: schedule each algorithmic chunk, fence syndromes
    next_syn = 0
    chunk: list[tuple[int, ComponentRole, list]] = []

    def flush_chunk():
        nonlocal chunk
        if not chunk:
            return
        for c, role, _ in chunk:
            circ.begin_component(c, role)
        for c, spec in _schedule_chunk(chunk, layout.t):
            if isinstance(spec, PhaseGate):
                circ.rzz(spec.u + 1, spec.v + 1, spec.angle, component=c)
            else:
                circ.rxx(layout.t, spec.qubit + 1, spec.angle, component=c)
        chunk = []

    for pos in range(len(alg) + 1):
        while next_syn < s and points[next_syn] == pos:
            flush_chunk()
            splice(syn_gs[next_syn], 1 + 2 * next_syn)
            next_syn += 1
        if pos == len(alg):
            flush_chunk()
            break
        role, gates = alg[pos]
        chunk.append((next(cid), role, list(gates)))

    decode = splice(final_g, final_off)
    circ.validate()
    enc = EncodedCircuit(circ, layout, tuple(checks), decode, graph, params,
                         cfg, mode="baseline")
    enc.meta["depth_2q"] = two_qubit_depth(circ)
    enc.meta["twoq_gates"] = circ.two_qubit_gate_count()
    return enc


# ---------------------------------------------------------------------------
# Co-compilation task model
# ---------------------------------------------------------------------------

@dataclass
class _FragComp:
    """A fixed-structure gadget scheduled gate by gate (init; syndromes when
    resynthesis is off; any old-style syndrome)."""
    pos: int
    gadget: Gadget
    clbit_offset: int
    twoq: list[tuple[int, tuple[int, ...]]]      # (fragment index, qubits)
    preds: list[frozenset[int]]                   # into twoq, by qubit overlap
    all_qubits: frozenset[int]

    @staticmethod
    def build(pos: int, gadget: Gadget, off: int) -> "_FragComp":
        twoq = [(i, g.qubits) for i, g in enumerate(gadget.fragment.gates)
                if g.is_two_qubit]
        preds: list[frozenset[int]] = []
        for idx, (fi, qs) in enumerate(twoq):
            dep = set()
            for jdx in range(idx - 1, -1, -1):
                if set(twoq[jdx][1]) & set(qs):
                    dep.add(jdx)
                    # direct predecessor per qubit is enough
                    if all(any(q in twoq[m][1] for m in dep) for q in qs):
                        break
            preds.append(frozenset(dep))
        qubits = frozenset(q for _, qs in twoq for q in qs)
        return _FragComp(pos, gadget, off, twoq, preds, qubits)


@dataclass
class _AlgComp:
    pos: int
    role: ComponentRole
    component_id: int
    gates: list            # PhaseGate or MixerGate
    qubits: list[frozenset[int]]   # per gate, possible qubit sets handled ad hoc


@dataclass
class _SynComp:
    pos: int
    syn_index: int
    clbit_offset: int
    binding_stages: frozenset[int]
    n: int

    def slots_of_pair(self, pair_idx: int) -> tuple[int, int]:
        m = self.n // 2 - 2
        if pair_idx == 0:
            return (0, 1)
        if pair_idx == self.n // 2 - 1:
            return (self.n - 2, self.n - 1)
        i = pair_idx - 1
        return (2 + i, 2 + m + i)


@dataclass
class CompileTask:
    layout: IcebergLayout
    graph: ProblemGraph
    params: QaoaParams
    cfg: CompileConfig
    components: list
    init_gadget: Gadget
    final_kind: GadgetKind
    final_clbit_offset: int
    num_clbits: int


def _build_task(graph: ProblemGraph, params: QaoaParams,
                cfg: CompileConfig) -> CompileTask:
    layout = IcebergLayout(graph.num_vertices)
    cfg.validate(layout, graph)
    init_kind, syn_kind, final_kind = _gadget_kinds(cfg.gadget_set)
    lc = build_qaoa(graph, params)
    s = cfg.num_syndromes

    if cfg.resynthesize:
        init_order = predetermine_init_order(graph, cfg.gadget_set)
    else:
        init_order = None
    init_g = build_gadget(init_kind, layout.k, init_order)

    alg: list[tuple[ComponentRole, list]] = []
    for t in range(params.p):
        alg.append((ComponentRole.PHASE_LAYER, lc.phase_layers[t]))
        alg.append((ComponentRole.MIXER_LAYER, lc.mixer_layers[t]))
    points = syndrome_insertion_points([len(g) for _, g in alg], s)

    components: list = []
    components.append(_FragComp.build(0, init_g, 0))
    next_syn = 0
    cpos = 1
    for pos in range(len(alg) + 1):
        while next_syn < s and points[next_syn] == pos:
            off = 1 + 2 * next_syn
            if cfg.resynthesize and syn_kind is GadgetKind.SYNDROME_NEW:
                m = layout.n // 2 - 2
                binding = frozenset({0} | set(range(2, 2 + m)) | {layout.n - 2})
                components.append(_SynComp(cpos, next_syn, off, binding, layout.n))
            else:
                g = build_gadget(syn_kind, layout.k)
                components.append(_FragComp.build(cpos, g, off))
            cpos += 1
            next_syn += 1
        if pos == len(alg):
            break
        role, gates = alg[pos]
        components.append(_AlgComp(cpos, role, cpos, list(gates), []))
        cpos += 1

    final_off = 1 + 2 * s
    final_len = (layout.n + 2) if final_kind is GadgetKind.FINAL_OLD else (layout.n + 1)
    return CompileTask(layout, graph, params, cfg, components, init_g,
                       final_kind, final_off, final_off + final_len)


# ---------------------------------------------------------------------------
# Search nodes
# ---------------------------------------------------------------------------

@dataclass
class SearchNode:
    task: CompileTask
    progress: tuple        # per component
    g: int
    h: int
    parent: "SearchNode | None"
    layer_items: tuple     # items scheduled in this node's layer

    @property
    def f(self) -> int:
        return self.g + self.h

    def key(self):
        return self.progress


def _initial_progress(task: CompileTask) -> tuple:
    prog = []
    for comp in task.components:
        if isinstance(comp, _FragComp):
            prog.append(frozenset(range(len(comp.twoq))))
        elif isinstance(comp, _SynComp):
            prog.append((0, ()))           # (stage, bindings)
        else:
            prog.append(frozenset(range(len(comp.gates))))
    return tuple(prog)


def _is_done(comp, prog) -> bool:
    if isinstance(comp, _SynComp):
        return prog[0] >= comp.n
    return not prog


def source_node(task: CompileTask) -> SearchNode:
    progress = _initial_progress(task)
    node = SearchNode(task, progress, 0, 0, None, ())
    node.h = heuristic_cost(node)
    return node


# -- uncompiled graph / heuristic -------------------------------------------

def build_uncompiled_graph(node: SearchNode) -> dict[int, float]:
    """Weighted degrees of the uncompiled-interaction graph.

    Vertices are the data qubits plus one merged-ancilla vertex (key -1)
    whose weight is halved: it stands for two physical collectors working
    in parallel.  The final measurement is excluded."""
    task = node.task
    layout = task.layout
    t, b = layout.t, layout.b
    deg: dict[int, float] = {q: 0.0 for q in layout.data}
    anc = 0.0
    for comp, prog in zip(task.components, node.progress):
        if isinstance(comp, _AlgComp):
            if comp.role is ComponentRole.PHASE_LAYER:
                for i in prog:
                    pg = comp.gates[i]
                    deg[pg.u + 1] += 1
                    deg[pg.v + 1] += 1
            else:
                m = len(prog)
                if m == 0:
                    continue
                if task.cfg.use_z2:
                    deg[t] += (m + 1) // 2
                    deg[b] += m // 2
                else:
                    deg[t] += m
                for i in prog:
                    deg[comp.gates[i].qubit + 1] += 1
        elif isinstance(comp, _FragComp):
            for i in prog:
                _, qs = comp.twoq[i]
                for q in qs:
                    if q in deg:
                        deg[q] += 1
                    else:
                        anc += 1
        else:
            stage, bindings = prog
            if stage >= comp.n:
                continue
            remaining = _syn_remaining_couplings(comp, stage, bindings)
            for q, cnt in remaining.items():
                deg[q] += cnt
                anc += cnt
            bound = {q for pair in bindings for q in pair}
            for q in layout.data:
                if q not in bound:
                    deg[q] += 2
                    anc += 2
    deg[-1] = anc / 2.0
    return deg


def _syn_remaining_couplings(comp: _SynComp, stage: int,
                             bindings: tuple) -> dict[int, int]:
    """Remaining ancilla couplings per already-bound data qubit.

    Qubits not yet bound to a slot owe two couplings each; the heuristic
    accounts for those separately."""
    if stage >= comp.n:
        return {}
    sched = syndrome_lag_schedule(comp.n)
    slot_q: dict[int, int] = {}
    for j, (u, v) in enumerate(bindings):
        su, sv = comp.slots_of_pair(j)
        slot_q[su] = u
        slot_q[sv] = v
    out: dict[int, int] = {}
    for L in range(stage, comp.n):
        for slot in sched[L]:
            if slot in slot_q:
                q = slot_q[slot]
                out[q] = out.get(q, 0) + 1
    return out


def heuristic_cost(node: SearchNode) -> int:
    """Max weighted degree of the uncompiled graph (the depth estimate)."""
    deg = build_uncompiled_graph(node)
    return math.ceil(max(deg.values()) - 1e-9)


# -- executable graph ---------------------------------------------------------

@dataclass
class ExecutableGraph:
    edges: dict[frozenset[int], tuple]    # pair -> payload
    weights: dict[frozenset[int], float]
    forced: list[tuple]                   # payloads scheduled regardless
    forced_qubits: frozenset[int]


def build_executable_graph(node: SearchNode) -> ExecutableGraph:
    task = node.task
    layout = task.layout
    cfg = task.cfg
    deg = build_uncompiled_graph(node)

    free: set[int] = set(range(layout.num_qubits))
    edges: dict[frozenset[int], tuple] = {}
    forced: list[tuple] = []
    forced_qubits: set[int] = set()

    def weight(a: int, b: int) -> float:
        wa = deg.get(a, deg[-1] if a >= layout.n else 0.0)
        wb = deg.get(b, deg[-1] if b >= layout.n else 0.0)
        return wa + wb

    for comp, prog in zip(task.components, node.progress):
        if not free:
            break
        if _is_done(comp, prog):
            continue
        if isinstance(comp, _FragComp):
            done = frozenset(range(len(comp.twoq))) - prog
            for i in sorted(prog):
                if comp.preds[i] <= done:
                    qs = comp.twoq[i][1]
                    if all(q in free for q in qs):
                        pair = frozenset(qs)
                        if pair not in edges:
                            edges[pair] = ("frag", comp.pos, i)
            # reserve every qubit the unfinished fragment still touches
            for i in prog:
                for q in comp.twoq[i][1]:
                    free.discard(q)
        elif isinstance(comp, _AlgComp):
            if comp.role is ComponentRole.PHASE_LAYER:
                for i in sorted(prog):
                    pg = comp.gates[i]
                    a, b = pg.u + 1, pg.v + 1
                    if a in free and b in free:
                        pair = frozenset((a, b))
                        if pair not in edges:
                            edges[pair] = ("phase", comp.pos, i)
                for i in prog:
                    pg = comp.gates[i]
                    free.discard(pg.u + 1)
                    free.discard(pg.v + 1)
            else:
                anchors = (layout.t, layout.b) if cfg.use_z2 else (layout.t,)
                for i in sorted(prog):
                    mg = comp.gates[i]
                    q = mg.qubit + 1
                    if q not in free:
                        continue
                    for anchor in anchors:
                        if anchor in free:
                            pair = frozenset((anchor, q))
                            if pair not in edges:
                                edges[pair] = ("mixer", comp.pos, i, anchor)
                for i in prog:
                    free.discard(comp.gates[i].qubit + 1)
                for anchor in anchors:
                    free.discard(anchor)
        else:
            stage, bindings = prog
            sched = syndrome_lag_schedule(comp.n)
            slot_q: dict[int, int] = {}
            for j, (u, v) in enumerate(bindings):
                su, sv = comp.slots_of_pair(j)
                slot_q[su], slot_q[sv] = u, v
            xs, zs = sched[stage]
            ax, az = layout.ancilla0, layout.ancilla1
            if ax not in free or az not in free:
                pass  # ancillas blocked by an earlier unfinished component
            elif stage in comp.binding_stages:
                bound = {q for pair in bindings for q in pair}
                eligible = sorted(
                    (q for q in layout.data if q in free and q not in bound),
                    key=lambda q: (-deg.get(q, 0.0), q),
                )
                if len(eligible) >= 2:
                    u, v = eligible[0], eligible[1]
                    pair = frozenset((u, v))
                    if pair not in edges:
                        edges[pair] = ("bind", comp.pos, (u, v))
            else:
                qx, qz = slot_q[xs], slot_q[zs]
                forced.append(("synstep", comp.pos, (qx, qz)))
                forced_qubits |= {qx, qz, ax, az}
                free -= {qx, qz}
            # reserve: ancillas and every data qubit still owing couplings
            bound = {q for pair in bindings for q in pair}
            done_slots = set()
            for L in range(stage):
                a, c = sched[L]
                done_slots.add((L, "x"))
            # a data qubit is finished with this syndrome when both its
            # couplings have fired, i.e. both its slots are before `stage`
            finished: set[int] = set()
            for j, (u, v) in enumerate(bindings):
                su, sv = comp.slots_of_pair(j)
                for q, s_own, s_other in ((u, su, sv), (v, sv, su)):
                    last = max(_slot_layers(sched, s_own))
                    if last < stage:
                        finished.add(q)
            for q in layout.data:
                if q not in finished:
                    free.discard(q)
            free.discard(ax)
            free.discard(az)
    weights = {pair: weight(*sorted(pair)) for pair in edges}
    return ExecutableGraph(edges, weights, forced, frozenset(forced_qubits))


def _slot_layers(sched, slot: int) -> list[int]:
    return [L for L, (xs, zs) in enumerate(sched) if xs == slot or zs == slot]


# -- expansion ----------------------------------------------------------------

def _matchings(exe: ExecutableGraph, width: int,
               forced_qubits: frozenset[int]) -> list[list[frozenset[int]]]:
    pairs = [p for p in exe.edges if not (p & forced_qubits)]
    if not pairs:
        return [[]]
    out: list[list[frozenset[int]]] = []
    removed: set[frozenset[int]] = set()
    for _ in range(width):
        avail = [p for p in pairs if p not in removed]
        if not avail:
            break
        g = nx.Graph()
        for p in sorted(avail, key=lambda p: tuple(sorted(p))):
            a, b = sorted(p)
            g.add_edge(a, b, weight=exe.weights[p])
        match = nx.max_weight_matching(g, maxcardinality=False)
        chosen = {frozenset(e) for e in match}
        # extend to a maximal matching, heaviest first
        used = {q for p in chosen for q in p}
        for p in sorted(avail, key=lambda p: (-exe.weights[p], tuple(sorted(p)))):
            if not (p & used):
                chosen.add(p)
                used |= p
        layer = sorted(chosen, key=lambda p: (-exe.weights[p], tuple(sorted(p))))
        if layer in out:
            break
        out.append(layer)
        if not layer:
            break
        removed.add(layer[0])
    return out or [[]]


def expand(node: SearchNode, width: int | None = None) -> list[SearchNode]:
    task = node.task
    if is_goal(node):
        return []
    if width is None:
        width = task.cfg.expansion_width
    exe = build_executable_graph(node)
    children: list[SearchNode] = []
    for layer in _matchings(exe, width, exe.forced_qubits):
        items = list(exe.forced)
        for pair in layer:
            items.append(exe.edges[pair])
        if not items:
            continue
        children.append(_apply_layer(node, tuple(items)))
    if not children and exe.forced:
        children.append(_apply_layer(node, tuple(exe.forced)))
    if not children:
        raise CompileError("search stalled: no executable gates and not at goal")
    return children


def _apply_layer(node: SearchNode, items: tuple) -> SearchNode:
    task = node.task
    progress = list(node.progress)
    for item in items:
        kind = item[0]
        pos = item[1]
        if kind in ("phase", "mixer", "frag"):
            progress[pos] = progress[pos] - {item[2]}
        elif kind == "bind":
            stage, bindings = progress[pos]
            progress[pos] = (stage + 1, bindings + (item[2],))
        elif kind == "synstep":
            stage, bindings = progress[pos]
            progress[pos] = (stage + 1, bindings)
    child = SearchNode(task, tuple(progress), node.g + 1, 0, node, items)
    child.h = heuristic_cost(child)
    return child


def is_goal(node: SearchNode) -> bool:
    return all(_is_done(c, p) for c, p in zip(node.task.components, node.progress))


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _collect_layers(node: SearchNode) -> list[tuple]:
    chain = []
    cur = node
    while cur.parent is not None:
        chain.append(cur.layer_items)
        cur = cur.parent
    chain.reverse()
    return chain


def append_final_measurement(task: CompileTask, qubit_free_layer: dict[int, int]
                             ) -> Gadget:
    """Pick the final gadget's implicit order greedily: qubits that idle
    earliest are read out (coupled) first."""
    layout = task.layout
    if task.cfg.resynthesize:
        order = tuple(sorted(layout.data,
                             key=lambda q: (qubit_free_layer.get(q, 0), q)))
    else:
        order = None
    return build_gadget(task.final_kind, layout.k, order)


def _emit(node: SearchNode) -> EncodedCircuit:
    task = node.task
    layout = task.layout
    layers = _collect_layers(node)

    # resolve syndrome bindings into gadget fragments
    frag_of: dict[int, Gadget] = {}
    off_of: dict[int, int] = {}
    for comp, prog in zip(task.components, node.progress):
        if isinstance(comp, _FragComp):
            frag_of[comp.pos] = comp.gadget
            off_of[comp.pos] = comp.clbit_offset
        elif isinstance(comp, _SynComp):
            stage, bindings = prog
            order = [0] * comp.n
            for j, (u, v) in enumerate(bindings):
                su, sv = comp.slots_of_pair(j)
                order[su], order[sv] = u, v
            frag_of[comp.pos] = build_gadget(GadgetKind.SYNDROME_NEW,
                                             layout.k, tuple(order))
            off_of[comp.pos] = comp.clbit_offset

    # per-component 2Q schedule position -> layer index
    frag_gate_layer: dict[tuple[int, int], int] = {}
    alg_gates_at_layer: list[list[Gate]] = [[] for _ in layers]
    syn_step_counter: dict[int, int] = {}
    qubit_free_layer: dict[int, int] = {}
    for L, items in enumerate(layers):
        for item in items:
            kind, pos = item[0], item[1]
            comp = task.components[pos]
            if kind == "frag":
                frag_gate_layer[(pos, item[2])] = L
                for q in comp.twoq[item[2]][1]:
                    qubit_free_layer[q] = L + 1
            elif kind == "phase":
                pg = comp.gates[item[2]]
                alg_gates_at_layer[L].append(
                    Gate(GateKind.RZZ, (pg.u + 1, pg.v + 1), angle=pg.angle,
                         component=comp.component_id)
                )
                qubit_free_layer[pg.u + 1] = L + 1
                qubit_free_layer[pg.v + 1] = L + 1
            elif kind == "mixer":
                mg = comp.gates[item[2]]
                anchor = item[3]
                alg_gates_at_layer[L].append(
                    Gate(GateKind.RXX, (anchor, mg.qubit + 1), angle=mg.angle,
                         component=comp.component_id)
                )
                qubit_free_layer[anchor] = L + 1
                qubit_free_layer[mg.qubit + 1] = L + 1
            elif kind in ("bind", "synstep"):
                step = syn_step_counter.get(pos, 0)
                frag_gate_layer[(pos, 2 * step)] = L
                frag_gate_layer[(pos, 2 * step + 1)] = L
                syn_step_counter[pos] = step + 1
                if kind == "bind":
                    u, v = item[2]
                    qubit_free_layer[u] = L + 1
                    qubit_free_layer[v] = L + 1
                else:
                    qx, qz = item[2]
                    qubit_free_layer[qx] = L + 1
                    qubit_free_layer[qz] = L + 1

    # assemble: [(sort_key, Gate)], fragment 1Q gates woven around their
    # neighboring 2Q gates
    entries: list[tuple[tuple, Gate]] = []
    seq = itertools.count()
    checks: list[ParityCheck] = []
    decode: dict[int, frozenset[int]] | None = None
    num_clbits = task.num_clbits

    for L, gates in enumerate(alg_gates_at_layer):
        for g in gates:
            entries.append(((L, 1, next(seq)), g))

    component_roles: dict[int, ComponentRole] = {}
    for comp in task.components:
        if isinstance(comp, _AlgComp):
            component_roles[comp.component_id] = comp.role

    for comp in task.components:
        if isinstance(comp, (_FragComp, _SynComp)):
            pos = comp.pos
            gadget = frag_of[pos]
            gates, gchecks, gdecode = _rebase(gadget, off_of[pos], pos)
            checks.extend(gchecks)
            if gdecode:
                decode = gdecode
            component_roles[pos] = gadget_role(gadget.kind)
            # map fragment 2Q index order -> scheduled layers
            twoq_positions = [i for i, g in enumerate(gadget.fragment.gates)
                              if g.is_two_qubit]
            layer_by_frag_idx: dict[int, int] = {}
            if isinstance(comp, _FragComp):
                for sched_idx, (fi, _) in enumerate(comp.twoq):
                    layer_by_frag_idx[fi] = frag_gate_layer[(pos, sched_idx)]
            else:
                for order_idx, fi in enumerate(twoq_positions):
                    layer_by_frag_idx[fi] = frag_gate_layer[(pos, order_idx)]
            # weave: a non-2Q gate rides with the next 2Q gate on its qubit,
            # else trails after the previous one
            last_line: dict[int, int] = {}
            for fi, g in enumerate(gates):
                orig = gadget.fragment.gates[fi]
                if orig.is_two_qubit:
                    L = layer_by_frag_idx[fi]
                    entries.append(((L, 1, next(seq)), g))
                    for q in orig.qubits:
                        last_line[q] = L
            for fi, g in enumerate(gates):
                orig = gadget.fragment.gates[fi]
                if orig.is_two_qubit or orig.kind is GateKind.BARRIER:
                    continue
                nxt = None
                prv = None
                for fj in range(fi + 1, len(gates)):
                    o2 = gadget.fragment.gates[fj]
                    if o2.is_two_qubit and set(o2.qubits) & set(orig.qubits):
                        nxt = layer_by_frag_idx[fj]
                        break
                for fj in range(fi - 1, -1, -1):
                    o2 = gadget.fragment.gates[fj]
                    if o2.is_two_qubit and set(o2.qubits) & set(orig.qubits):
                        prv = layer_by_frag_idx[fj]
                        break
                if nxt is not None:
                    entries.append(((nxt, 0, fi), g))
                elif prv is not None:
                    entries.append(((prv, 2, fi), g))
                else:
                    entries.append(((0, 0, fi), g))

    # final measurement, appended after everything
    final_g = append_final_measurement(task, qubit_free_layer)
    fgates, fchecks, fdecode = _rebase(final_g, task.final_clbit_offset,
                                       len(task.components))
    checks.extend(fchecks)
    decode = fdecode
    component_roles[len(task.components)] = gadget_role(final_g.kind)
    L_end = len(layers)
    for i, g in enumerate(fgates):
        entries.append(((L_end, 1, next(seq)), g))

    entries.sort(key=lambda e: e[0])
    circ = PhysicalCircuit(layout.num_qubits, num_clbits)
    for cidx in sorted(component_roles):
        circ.begin_component(cidx, component_roles[cidx])
    for _, g in entries:
        circ.add(g)
    circ.validate()
    enc = EncodedCircuit(circ, layout, tuple(checks), decode, task.graph,
                         task.params, task.cfg, mode="coopt")
    enc.meta["depth_2q"] = two_qubit_depth(circ)
    enc.meta["twoq_gates"] = circ.two_qubit_gate_count()
    enc.meta["search_layers"] = len(layers)
    return enc


# ---------------------------------------------------------------------------
# Best-first search driver
# ---------------------------------------------------------------------------

def compile_cooptimized(graph: ProblemGraph, params: QaoaParams,
                        cfg: CompileConfig) -> EncodedCircuit:
    task = _build_task(graph, params, cfg)
    start = source_node(task)
    counter = itertools.count()
    heap: list[tuple] = []
    heapq.heappush(heap, (start.f, start.h, -start.g, next(counter), start))
    seen: set = set()
    best_frontier = start
    budget = cfg.queue_cap
    expanded = 0
    exhausted = False
    goal: SearchNode | None = None
    t0 = time.perf_counter()
    while heap:
        _, _, _, _, node = heapq.heappop(heap)
        key = node.key()
        if key in seen:
            continue
        seen.add(key)
        if is_goal(node):
            goal = node
            break
        expanded += 1
        if expanded > budget:
            exhausted = True
            best_frontier = node
            break
        for child in expand(node):
            if child.key() in seen:
                continue
            heapq.heappush(heap, (child.f, child.h, -child.g,
                                  next(counter), child))
    if goal is None:
        # budget exhausted (or empty heap): greedy rollout from best node
        node = best_frontier
        while not is_goal(node):
            node = expand(node, width=1)[0]
        goal = node
        exhausted = True
    enc = _emit(goal)
    enc.meta["expanded_nodes"] = expanded
    enc.meta["budget_exhausted"] = exhausted
    enc.meta["compile_seconds"] = time.perf_counter() - t0
    enc.meta["h_source"] = start.h
    return enc


def heuristic_source_bound(graph: ProblemGraph, params: QaoaParams,
                           cfg: CompileConfig) -> int:
    """H at the source node for a compile task (the depth estimate)."""
    task = _build_task(graph, params, cfg)
    return source_node(task).h


# ---------------------------------------------------------------------------
# Serialization of compiled circuits with their classical maps
# ---------------------------------------------------------------------------

def write_encoded(enc: EncodedCircuit) -> str:
    from .circuit import write_circuit

    parts = [write_circuit(enc.circuit)]
    for c in enc.checks:
        bits = " ".join(f"c{b}" for b in sorted(c.bits))
        parts.append(f"check {bits} = {c.expected}\n")
    for i in sorted(enc.decode):
        bits = " ^ ".join(f"c{b}" for b in sorted(enc.decode[i]))
        parts.append(f"logical {i} = {bits}\n")
    return "".join(parts)


def read_encoded(text: str):
    """Parse circuit text with trailing check/logical lines.

    Returns (circuit, checks, decode)."""
    from .circuit import read_circuit

    circuit_lines = []
    checks: list[ParityCheck] = []
    decode: dict[int, frozenset[int]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        tok = line.split()
        if tok and tok[0] == "check":
            eq = tok.index("=")
            bits = frozenset(int(t[1:]) for t in tok[1:eq])
            checks.append(ParityCheck(bits, int(tok[eq + 1])))
        elif tok and tok[0] == "logical":
            i = int(tok[1])
            bits = frozenset(int(t[1:]) for t in tok[3:] if t != "^")
            decode[i] = bits
        else:
            circuit_lines.append(raw)
    circuit = read_circuit("\n".join(circuit_lines))
    return circuit, tuple(checks), decode
