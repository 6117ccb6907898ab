"""MaxCut instances, logical QAOA circuits, energies, and quality metrics.

Bitstrings are integers; bit i is the assignment of vertex i.  Energy is the
negative cut value, so lower energy means a better cut.  Outcome
distributions are mappings bitstring -> probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import networkx as nx
import numpy as np


class GraphKind(Enum):
    REGULAR_3 = "regular3"
    ERDOS_RENYI = "erdos_renyi"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ProblemGraph:
    num_vertices: int
    edges: tuple[tuple[int, int, float], ...]   # (u, v, weight), u < v
    kind: GraphKind = GraphKind.CUSTOM
    seed: int | None = None

    def __post_init__(self):
        seen = set()
        for u, v, w in self.edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u},{v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def unweighted(self) -> bool:
        return all(w == 1.0 for _, _, w in self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.num_vertices
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def make_graph(num_vertices: int, edges: Iterable[tuple[int, int]],
               weights: Iterable[float] | None = None,
               kind: GraphKind = GraphKind.CUSTOM,
               seed: int | None = None) -> ProblemGraph:
    edges = list(edges)
    if weights is None:
        ws = [1.0] * len(edges)
    else:
        ws = [float(w) for w in weights]
    norm = tuple(
        (min(u, v), max(u, v), w) for (u, v), w in zip(edges, ws)
    )
    return ProblemGraph(num_vertices, norm, kind=kind, seed=seed)


def generate_instance(kind: GraphKind, k: int, density: float | None = None,
                      seed: int = 0) -> ProblemGraph:
    """Deterministic instance generation (networkx with an explicit seed)."""
    if kind is GraphKind.REGULAR_3:
        if (3 * k) % 2 != 0:
            raise ValueError("3-regular graph needs 3k even")
        g = nx.random_regular_graph(3, k, seed=seed)
        return make_graph(k, g.edges(), kind=kind, seed=seed)
    if kind is GraphKind.ERDOS_RENYI:
        if density is None or not (0.0 <= density <= 1.0):
            raise ValueError("density must be in [0, 1]")
        g = nx.gnp_random_graph(k, density, seed=seed)
        return make_graph(k, g.edges(), kind=kind, seed=seed)
    raise ValueError("generate_instance handles REGULAR_3 and ERDOS_RENYI")


# ---------------------------------------------------------------------------
# Cut values and optima
# ---------------------------------------------------------------------------

def _as_int(bits, width: int) -> int:
    if isinstance(bits, (int, np.integer)):
        return int(bits)
    value = 0
    for i, b in enumerate(bits):
        if int(b):
            value |= 1 << i
    return value


def cut_value(graph: ProblemGraph, bits) -> float:
    x = _as_int(bits, graph.num_vertices)
    total = 0.0
    for u, v, w in graph.edges:
        if ((x >> u) ^ (x >> v)) & 1:
            total += w
    return total if not graph.unweighted else int(total)


def energy(graph: ProblemGraph, bits) -> float:
    return -cut_value(graph, bits)


def hamiltonian_value(graph: ProblemGraph, bits) -> float:
    """<x|C|x> for C = sum of Z_i Z_j over edges: |E| - 2*cut."""
    total_w = sum(w for _, _, w in graph.edges)
    return total_w - 2.0 * cut_value(graph, bits)


def brute_force_optimum(graph: ProblemGraph) -> float:
    """Exhaustive maximum cut (vectorized; halves the space via bit-flip symmetry)."""
    k = graph.num_vertices
    if k > 30:
        raise ValueError("exhaustive optimum capped at 30 vertices")
    if k == 0 or not graph.edges:
        return 0
    n_half = 1 << max(k - 1, 0)
    best = 0.0
    chunk = 1 << 20
    for start in range(0, n_half, chunk):
        xs = np.arange(start, min(start + chunk, n_half), dtype=np.int64)
        cuts = np.zeros(len(xs), dtype=np.float64)
        for u, v, w in graph.edges:
            cuts += w * (((xs >> u) ^ (xs >> v)) & 1)
        m = float(cuts.max())
        if m > best:
            best = m
    return int(best) if graph.unweighted else best


def approximation_ratio(dist: Mapping[int, float], graph: ProblemGraph,
                        f_max: float | None = None) -> float:
    """Expected cut divided by the optimal cut."""
    if f_max is None:
        f_max = brute_force_optimum(graph)
    if f_max == 0:
        raise ValueError("graph has no positive cut")
    expect = sum(p * cut_value(graph, x) for x, p in dist.items())
    return expect / f_max


def success_probability(dist: Mapping[int, float], graph: ProblemGraph,
                        f_max: float | None = None) -> float:
    """Probability mass on optimal-cut bitstrings."""
    if f_max is None:
        f_max = brute_force_optimum(graph)
    return sum(p for x, p in dist.items() if cut_value(graph, x) == f_max)


# ---------------------------------------------------------------------------
# Logical QAOA circuits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have equal length")
        if any(not math.isfinite(a) for a in self.gammas + self.betas):
            raise ValueError("angles must be finite")

    @property
    def p(self) -> int:
        return len(self.gammas)


@dataclass(frozen=True)
class PhaseGate:
    u: int
    v: int
    angle: float


@dataclass(frozen=True)
class MixerGate:
    qubit: int
    angle: float


@dataclass
class LogicalCircuit:
    """Alternating phase/mixer rotation layers on k logical qubits.

    Component 0 is the |+>^k preparation marker; components 1..2p alternate
    PHASE_LAYER / MIXER_LAYER.
    """

    k: int
    phase_layers: list[list[PhaseGate]] = field(default_factory=list)
    mixer_layers: list[list[MixerGate]] = field(default_factory=list)

    @property
    def p(self) -> int:
        return len(self.phase_layers)

    def rotation_count(self) -> tuple[int, int]:
        return (sum(len(l) for l in self.phase_layers),
                sum(len(l) for l in self.mixer_layers))


def build_qaoa(graph: ProblemGraph, params: QaoaParams) -> LogicalCircuit:
    lc = LogicalCircuit(k=graph.num_vertices)
    for gamma, beta in zip(params.gammas, params.betas):
        lc.phase_layers.append(
            [PhaseGate(u, v, gamma * w) for u, v, w in graph.edges]
        )
        lc.mixer_layers.append(
            [MixerGate(j, beta) for j in range(graph.num_vertices)]
        )
    return lc


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def write_graph(graph: ProblemGraph) -> str:
    lines = [f"graph {graph.num_vertices} {graph.num_edges}"]
    for u, v, w in graph.edges:
        if w == 1.0:
            lines.append(f"edge {u} {v}")
        else:
            lines.append(f"edge {u} {v} {w!r}")
    return "\n".join(lines) + "\n"


def read_graph(text: str) -> ProblemGraph:
    k = None
    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "graph":
            k = int(tok[1])
        elif tok[0] == "edge":
            edges.append((int(tok[1]), int(tok[2])))
            weights.append(float(tok[3]) if len(tok) > 3 else 1.0)
        else:
            raise ValueError(f"line {lineno}: unknown directive {tok[0]!r}")
    if k is None:
        raise ValueError("missing 'graph k m' header")
    return make_graph(k, edges, weights)


def write_params(params: QaoaParams) -> str:
    g = ", ".join(repr(a) for a in params.gammas)
    b = ", ".join(repr(a) for a in params.betas)
    return f"p {params.p}\ngammas: [{g}]\nbetas: [{b}]\n"


def read_params(text: str) -> QaoaParams:
    p = None
    gammas: list[float] | None = None
    betas: list[float] | None = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("p "):
            p = int(line.split()[1])
        elif line.startswith("gammas"):
            gammas = _parse_list(line)
        elif line.startswith("betas"):
            betas = _parse_list(line)
    if gammas is None or betas is None:
        raise ValueError("params file needs 'gammas: [...]' and 'betas: [...]'")
    params = QaoaParams(tuple(gammas), tuple(betas))
    if p is not None and params.p != p:
        raise ValueError(f"declared p={p} but got {params.p} angles")
    return params


def _parse_list(line: str) -> list[float]:
    body = line.split(":", 1)[1].strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ValueError(f"expected a [...] list in {line!r}")
    inner = body[1:-1].strip()
    if not inner:
        return []
    return [float(x) for x in inner.split(",")]


def ramp_params(p: int, gamma_max: float = 0.7, beta_max: float = -0.7
                ) -> QaoaParams:
    """Linear-ramp schedule used as the default fixed-angle input.

    With rotation angle theta meaning exp(-i*theta*P), MaxCut wants the
    phase angles ramping up from 0 and the mixer angles ramping to 0 from
    the negative side."""
    ts = [(t + 0.5) / p for t in range(p)]
    return QaoaParams(
        gammas=tuple(gamma_max * t for t in ts),
        betas=tuple(beta_max * (1.0 - t) for t in ts),
    )
