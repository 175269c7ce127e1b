"""Finite metric multigraphs, the greedy small-subgraph search, and tree collapse."""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


class NotATreeError(GraphError):
    pass


class NotTrivalentError(GraphError):
    pass


class AcyclicGraphError(GraphError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.u == self.v

    def other(self, w: str) -> str:
        return self.v if w == self.u else self.u


class MetricGraph:
    """Connected multigraph (loops allowed) with positive edge lengths.

    Treated as immutable after construction.
    """

    def __init__(self, vertices, edges, name: str = "X", *, check: bool = True):
        self.name = name
        self.vertices = tuple(str(v) for v in vertices)
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(str(e[0]), str(e[1]), str(e[2]), float(e[3]))
            if e.id in self.edges:
                raise GraphError(f"duplicate edge id {e.id!r}")
            self.edges[e.id] = e
        self._incident: dict[str, list[tuple[str, int]]] = {v: [] for v in self.vertices}
        if len(self._incident) != len(self.vertices):
            raise GraphError("duplicate vertex id")
        for e in self.edges.values():
            for end, w in enumerate((e.u, e.v)):
                if w not in self._incident:
                    raise GraphError(f"edge {e.id!r} uses unknown vertex {w!r}")
                self._incident[w].append((e.id, end))
        if check:
            bad = [e.id for e in self.edges.values() if not (e.length > 0 and np.isfinite(e.length))]
            if bad:
                raise GraphError(f"edges with non-positive length: {bad}")
            if not self.is_connected():
                raise GraphError("graph is not connected")
            if self.rank < 1:
                raise GraphError("graph has no circuits")

    def __repr__(self):
        return f"MetricGraph({self.name!r}, |V|={len(self.vertices)}, |E|={len(self.edges)})"

    @property
    def rank(self) -> int:
        return len(self.edges) - len(self.vertices) + 1

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges.values()))

    def length(self, edge_ids) -> float:
        return float(sum(self.edges[i].length for i in edge_ids))

    def incident(self, v: str) -> list[tuple[str, int]]:
        """Half-edges at ``v`` as (edge id, end) with end 0 = tail, 1 = head."""
        return list(self._incident[v])

    def valence(self, v: str) -> int:
        return len(self._incident[v])

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            w = stack.pop()
            for eid, _ in self._incident[w]:
                x = self.edges[eid].other(w)
                if x not in seen:
                    seen.add(x)
                    stack.append(x)
        return len(seen) == len(self.vertices)

    def with_lengths(self, lengths: dict[str, float]) -> MetricGraph:
        return MetricGraph(
            self.vertices,
            [Edge(e.id, e.u, e.v, float(lengths.get(e.id, e.length))) for e in self.edges.values()],
            self.name,
        )


@dataclass(frozen=True)
class Subgraph:
    parent: MetricGraph
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        missing = self.edges - set(self.parent.edges)
        if missing:
            raise GraphError(f"edges not in parent: {sorted(missing)}")
        if not self.edges:
            raise GraphError("empty subgraph")
        if not self._connected():
            raise GraphError("subgraph is not connected")

    def _connected(self) -> bool:
        adj = defaultdict(set)
        for i in self.edges:
            e = self.parent.edges[i]
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        start = next(iter(adj))
        seen = {start}
        stack = [start]
        while stack:
            w = stack.pop()
            for x in adj[w] - seen:
                seen.add(x)
                stack.append(x)
        return len(seen) == len(adj)

    @property
    def vertices(self) -> frozenset:
        out = set()
        for i in self.edges:
            e = self.parent.edges[i]
            out.update((e.u, e.v))
        return frozenset(out)

    @property
    def length(self) -> float:
        return self.parent.length(sorted(self.edges))

    def __len__(self):
        return len(self.edges)

    def adjacent_edges(self) -> list[str]:
        """Edges outside the subgraph that touch one of its vertices."""
        verts = self.vertices
        return sorted(
            e.id for e in self.parent.edges.values()
            if e.id not in self.edges and (e.u in verts or e.v in verts)
        )

    def is_tree(self) -> bool:
        if any(self.parent.edges[i].is_loop for i in self.edges):
            return False
        return len(self.edges) == len(self.vertices) - 1


# ---------------------------------------------------------------------------
# structural checks
# ---------------------------------------------------------------------------


def validate_trivalent(g: MetricGraph) -> tuple[bool, list[str]]:
    report = []
    k = g.rank
    for v in g.vertices:
        if g.valence(v) != 3:
            report.append(f"vertex {v} has valence {g.valence(v)}")
    if len(g.edges) != 3 * k - 3:
        report.append(f"{len(g.edges)} edges, expected 3k-3 = {3 * k - 3}")
    if len(g.vertices) != 2 * k - 2:
        report.append(f"{len(g.vertices)} vertices, expected 2k-2 = {2 * k - 2}")
    return not report, report


def _shortest_path(g: MetricGraph, src: str, dst: str, banned: str):
    dist = {src: 0.0}
    back: dict[str, tuple[str, str]] = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, w = heapq.heappop(heap)
        if w in done:
            continue
        done.add(w)
        if w == dst:
            break
        for eid, _ in g.incident(w):
            if eid == banned:
                continue
            e = g.edges[eid]
            if e.is_loop:
                continue
            x = e.other(w)
            nd = d + e.length
            if nd < dist.get(x, np.inf):
                dist[x] = nd
                back[x] = (w, eid)
                heapq.heappush(heap, (nd, x))
    if dst not in done:
        return np.inf, []
    path = []
    w = dst
    while w != src:
        w, eid = back[w]
        path.append(eid)
    return dist[dst], path[::-1]


def girth(g: MetricGraph) -> tuple[float, list[str]]:
    """Length of the shortest circuit and its edge ids.

    A shortest circuit through edge (u, v) is that edge plus a shortest
    u-v path avoiding it, so minimising over edges is exact.
    """
    best = (np.inf, [])
    for e in g.edges.values():
        if e.is_loop:
            cand = (e.length, [e.id])
        else:
            d, path = _shortest_path(g, e.u, e.v, banned=e.id)
            cand = (d + e.length, [e.id] + path)
        if cand[0] < best[0]:
            best = cand
    if not best[1]:
        raise AcyclicGraphError("graph has no circuit")
    return float(best[0]), best[1]


# ---------------------------------------------------------------------------
# small subgraph
# ---------------------------------------------------------------------------


def find_small_subgraph(g: MetricGraph, e: str, m: float, l0: float) -> Subgraph:
    """Grow a connected subgraph from a short edge until its boundary edges are long.

    Starting from ``{e}``, keep absorbing the shortest adjacent edge whose
    length is at most ``m * len(S)``. On return every adjacent edge is longer
    than ``m * len(S)`` and ``len(S) < l0 (m + 1)^(|S| - 1)``.
    """
    if m <= 0:
        raise ValueError("m must be positive")
    if not g.edges[e].length < l0:
        raise ValueError(f"edge {e!r} has length {g.edges[e].length!r} >= l0 = {l0!r}")
    s = Subgraph(g, {e})
    while True:
        L = s.length
        short = [f for f in s.adjacent_edges() if g.edges[f].length <= m * L]
        if not short:
            return s
        nxt = min(short, key=lambda f: (g.edges[f].length, f))
        s = Subgraph(g, s.edges | {nxt})


def small_subgraph_conditions(s: Subgraph, m: float, l0: float) -> tuple[bool, bool]:
    L = s.length
    boundary = all(s.parent.edges[f].length > m * L for f in s.adjacent_edges())
    size = L < l0 * (m + 1) ** (len(s) - 1)
    return boundary, size


# ---------------------------------------------------------------------------
# tree collapse
# ---------------------------------------------------------------------------


@dataclass
class CollapseResult:
    y: MetricGraph
    y_raw: MetricGraph
    cone_vertex: str
    cone_edges: dict[str, float]
    split_map: dict[str, str]
    s_length: float
    fused_from: dict[str, list[str]] = field(default_factory=dict)

    def check(self, x: MetricGraph, slack: float = 1e-12) -> list[str]:
        """Violated invariants (empty when all hold)."""
        bad = []
        k = x.rank
        if not self.y.is_connected():
            bad.append("Y is disconnected")
        if self.y.rank != k:
            bad.append(f"rank changed: {k} -> {self.y.rank}")
        L = self.s_length
        if any(c > L * (1 + slack) for c in self.cone_edges.values()):
            bad.append("a cone edge is longer than len(S)")
        if self.y.total_length > x.total_length + (4 * k - 5) * L + slack * max(1.0, x.total_length):
            bad.append("len(Y) exceeds len(X) + (4k-5) len(S)")
        return bad


def _tree_distances(x: MetricGraph, tree: set, root: str) -> dict[str, float]:
    adj = defaultdict(list)
    for i in tree:
        e = x.edges[i]
        adj[e.u].append((e.v, e.length))
        adj[e.v].append((e.u, e.length))
    out = {root: 0.0}
    stack = [root]
    while stack:
        w = stack.pop()
        for nb, ln in adj[w]:
            if nb not in out:
                out[nb] = out[w] + ln
                stack.append(nb)
    return out


def _fresh(name: str, taken: set) -> str:
    out = name
    n = 1
    while out in taken:
        out = f"{name}{n}"
        n += 1
    taken.add(out)
    return out


def collapse_tree(x: MetricGraph, s: Subgraph, p: tuple[str, float] | None = None) -> CollapseResult:
    """Replace the tree ``s`` by a cone on its attachment points.

    ``p = (edge id, t)`` puts the cone point at fraction ``0 < t < 1`` along an
    edge of ``s`` (measured from its tail); by default the midpoint of the
    longest edge. Every half-edge of the rest of the graph that ends on ``s``
    gets its own attachment vertex (vertices carrying two such half-edges are
    split), joined to the cone point by an edge as long as the tree path to
    ``p``. ``y_raw`` keeps those valence-2 attachment vertices; ``y`` fuses
    each one into the edge through it.
    """
    ok, report = validate_trivalent(x)
    if not ok:
        raise NotTrivalentError("; ".join(report))
    if s.parent is not x:
        s = Subgraph(x, s.edges)
    if not s.is_tree():
        raise NotATreeError("subgraph contains a circuit")
    if p is None:
        pe = max(sorted(s.edges), key=lambda i: x.edges[i].length)
        p = (pe, 0.5)
    pe, t = p
    if pe not in s.edges or not 0.0 < t < 1.0:
        raise GraphError("cone point must be an interior point of an edge of S")

    tree = set(s.edges)
    e_p = x.edges[pe]
    from_u = _tree_distances(x, tree, e_p.u)
    from_v = _tree_distances(x, tree, e_p.v)
    to_p = {w: min(from_u[w] + t * e_p.length, from_v[w] + (1 - t) * e_p.length) for w in s.vertices}

    taken = set(x.vertices)
    cone = _fresh("cone", taken)
    s_verts = s.vertices

    # one attachment vertex per outside half-edge landing on S
    attach: dict[tuple[str, int], str] = {}
    split_map: dict[str, str] = {}
    for w in sorted(s_verts):
        outside = [(eid, end) for eid, end in x.incident(w) if eid not in tree]
        for i, he in enumerate(outside):
            name = w if len(outside) == 1 else _fresh(f"{w}.{i + 1}", taken)
            attach[he] = name
            split_map[name] = w

    taken_edges = set(x.edges)
    cone_of = {name: _fresh(f"c:{name}", taken_edges) for name in sorted(split_map)}
    cone_edges = {cone_of[name]: to_p[split_map[name]] for name in sorted(split_map)}
    raw_vertices = [v for v in x.vertices if v not in s_verts] + sorted(split_map) + [cone]
    raw_edges = []
    fused_edges = []
    fused_from = {}
    for e in x.edges.values():
        if e.id in tree:
            continue
        ends = [attach.get((e.id, 0), e.u), attach.get((e.id, 1), e.v)]
        raw_edges.append(Edge(e.id, ends[0], ends[1], e.length))
        parts = [e.id]
        fused_ends = list(ends)
        for end in (0, 1):
            if (e.id, end) in attach:
                parts.append(cone_of[ends[end]])
                fused_ends[end] = cone
        fused_edges.append(Edge(e.id, fused_ends[0], fused_ends[1], e.length + sum(cone_edges[c] for c in parts[1:])))
        fused_from[e.id] = parts
    for name in sorted(split_map):
        raw_edges.append(Edge(cone_of[name], name, cone, cone_edges[cone_of[name]]))

    y_raw = MetricGraph(raw_vertices, raw_edges, f"{x.name}_raw")
    y_vertices = [v for v in x.vertices if v not in s_verts] + [cone]
    y = MetricGraph(y_vertices, fused_edges, f"{x.name}_collapsed")
    return CollapseResult(y, y_raw, cone, cone_edges, split_map, s.length, fused_from)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def random_trivalent_graph(k: int, rng: np.random.Generator, length_scale=(0.05, 5.0)) -> MetricGraph:
    """Connected trivalent multigraph of rank ``k`` (random half-edge pairing)."""
    if k < 2:
        raise ValueError("trivalent graphs need rank >= 2")
    n = 2 * k - 2
    lo, hi = length_scale
    while True:
        stubs = np.repeat(np.arange(n), 3)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        lengths = np.exp(rng.uniform(np.log(lo), np.log(hi), size=len(pairs)))
        edges = [Edge(f"e{i}", f"v{a}", f"v{b}", float(ln)) for i, ((a, b), ln) in enumerate(zip(pairs, lengths))]
        g = MetricGraph([f"v{i}" for i in range(n)], edges, f"T{k}", check=False)
        if g.is_connected():
            return MetricGraph(g.vertices, edges, g.name)


def random_metric_graph(n_edges: int, rng: np.random.Generator, length_scale=(0.01, 10.0)) -> MetricGraph:
    """Connected multigraph with loops, ``n_edges`` edges and at least one circuit."""
    if n_edges < 1:
        raise ValueError("need at least one edge")
    n_vertices = int(rng.integers(1, n_edges + 1))
    lo, hi = length_scale
    pairs = [(i, int(rng.integers(0, i))) for i in range(1, n_vertices)]
    while len(pairs) < n_edges:
        pairs.append((int(rng.integers(0, n_vertices)), int(rng.integers(0, n_vertices))))
    lengths = np.exp(rng.uniform(np.log(lo), np.log(hi), size=len(pairs)))
    edges = [Edge(f"e{i}", f"v{a}", f"v{b}", float(ln)) for i, ((a, b), ln) in enumerate(zip(pairs, lengths))]
    return MetricGraph([f"v{i}" for i in range(n_vertices)], edges, "R")


def random_subtree(g: MetricGraph, rng: np.random.Generator, max_edges: int | None = None) -> Subgraph:
    """Random tree grown from a random non-loop edge."""
    candidates = sorted(e.id for e in g.edges.values() if not e.is_loop)
    if not candidates:
        raise GraphError("graph has only loops")
    start = candidates[int(rng.integers(len(candidates)))]
    tree = {start}
    verts = {g.edges[start].u, g.edges[start].v}
    limit = max_edges if max_edges is not None else len(g.vertices) - 1
    target = int(rng.integers(1, limit + 1))
    while len(tree) < target:
        grow = sorted(
            e.id for e in g.edges.values()
            if e.id not in tree and not e.is_loop and ((e.u in verts) != (e.v in verts))
        )
        if not grow:
            break
        nxt = grow[int(rng.integers(len(grow)))]
        tree.add(nxt)
        verts.update((g.edges[nxt].u, g.edges[nxt].v))
    return Subgraph(g, tree)


def theta_graph(lengths=(1.0, 1.0, 1.0)) -> MetricGraph:
    return MetricGraph(["u", "v"], [Edge(f"e{i}", "u", "v", float(l)) for i, l in enumerate(lengths)], "theta")


def dumbbell_graph(loop_u=1.0, loop_v=1.0, bridge=1.0) -> MetricGraph:
    return MetricGraph(
        ["u", "v"],
        [Edge("lu", "u", "u", float(loop_u)), Edge("lv", "v", "v", float(loop_v)), Edge("br", "u", "v", float(bridge))],
        "dumbbell",
    )
