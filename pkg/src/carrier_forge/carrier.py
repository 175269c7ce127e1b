"""Carrier graphs encoded equivariantly in H^3.

A ``DecoratedGraph`` has one hyperboloid position per vertex and a group word
on each oriented edge. Edge ``(u, v)`` with word ``w`` is the geodesic from
``pos(u)`` to ``w . pos(v)``; projecting to H^3 / Gamma gives the carrier graph.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from carrier_forge import words
from carrier_forge.graph import Edge, MetricGraph, random_trivalent_graph
from carrier_forge.groups import GroupPresentation
from carrier_forge.hyperbolic import (
    ORIGIN,
    TWO_PI_3,
    GeometryError,
    Isometry,
    dist_array,
    exp_map,
    mdot,
    normalize_point,
    unit_tangent_array,
)
from carrier_forge.shortening import sh_gain, symmetric_apex


class MoveRejected(ValueError):
    pass


class DecoratedGraph:
    def __init__(self, group: GroupPresentation, vertices, edges: dict, labels: dict, positions: dict,
                 name: str = "X"):
        self.group = group
        self.name = name
        self.vertices = tuple(vertices)
        self.edges = {eid: (u, v) for eid, (u, v) in edges.items()}
        self.labels = {eid: words.reduce(labels.get(eid, "")) for eid in self.edges}
        self.positions = {}
        for v in self.vertices:
            x = normalize_point(np.asarray(positions[v], dtype=float))
            x.setflags(write=False)
            self.positions[v] = x
        vs = set(self.vertices)
        for eid, (u, v) in self.edges.items():
            if u not in vs or v not in vs:
                raise GeometryError(f"edge {eid} has an unknown endpoint")
            for ch in self.labels[eid]:
                if words.letter_index(ch)[0] >= group.rank:
                    raise ValueError(f"label of {eid} uses a generator outside the group")
        self._arr = None

    # -- structure ---------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.edges) - len(self.vertices) + 1

    def half_edges(self, v: str) -> list[tuple[str, int]]:
        out = []
        for eid, (a, b) in self.edges.items():
            if a == v:
                out.append((eid, 0))
            if b == v:
                out.append((eid, 1))
        return out

    def valence(self, v: str) -> int:
        return len(self.half_edges(v))

    def is_trivalent(self) -> bool:
        return all(self.valence(v) == 3 for v in self.vertices)

    def transport(self, eid: str, end: int) -> str:
        """Word carrying the far endpoint's frame into the frame of this end."""
        w = self.labels[eid]
        return w if end == 0 else words.inverse(w)

    def far_point(self, eid: str, end: int) -> np.ndarray:
        u, v = self.edges[eid]
        far = v if end == 0 else u
        return self.group.word_matrix(self.transport(eid, end)) @ self.positions[far]

    def tangents(self, v: str):
        """Unit tangents at pos(v) along each half-edge, with the half-edges."""
        hes = self.half_edges(v)
        far = np.array([self.far_point(eid, end) for eid, end in hes])
        u, _ = unit_tangent_array(np.broadcast_to(self.positions[v], far.shape), far)
        return u, hes

    def spanning_tree_words(self) -> dict[str, str]:
        """Vertex -> word locating its lift relative to the first vertex.

        The tree grows along short labels first, so identity edges are always
        tree edges and circuit words stay as short as the labels allow.
        """
        root = self.vertices[0]
        out = {}
        heap = [(0, "", 0, root, "")]
        while heap:
            _, _, _, w, word = heapq.heappop(heap)
            if w in out:
                continue
            out[w] = word
            for eid, end in self.half_edges(w):
                a, b = self.edges[eid]
                nb = b if end == 0 else a
                if nb not in out:
                    step = words.multiply(word, self.transport(eid, end))
                    heapq.heappush(heap, (len(self.labels[eid]), eid, end, nb, step))
        if len(out) != len(self.vertices):
            raise GeometryError("graph is not connected")
        return out

    def circuit_words(self) -> list[str]:
        """Generators of the image of pi_1, one per edge off a spanning tree."""
        tw = self.spanning_tree_words()
        out = []
        for eid, (u, v) in self.edges.items():
            w = words.multiply(tw[u], self.labels[eid], words.inverse(tw[v]))
            if w:
                out.append(w)
        return out

    def is_surjective(self) -> bool:
        """pi_1-surjectivity, decided for free groups by Stallings folding."""
        return words.generates_free_group(self.circuit_words(), self.group.rank)

    def validate(self) -> list[str]:
        problems = []
        if not self.is_trivalent():
            problems.append("not trivalent")
        if self.rank != self.group.rank:
            problems.append(f"graph rank {self.rank} != group rank {self.group.rank}")
        if not self.is_surjective():
            problems.append("edge labels do not generate the group")
        if not np.all(np.isfinite(list(self.edge_lengths().values()))):
            problems.append("non-finite edge length")
        return problems

    # -- geometry ----------------------------------------------------------

    def arrays(self):
        """(vertex order, tail idx, head idx, W, W^-1) for vectorised evaluation."""
        if self._arr is None:
            idx = {v: i for i, v in enumerate(self.vertices)}
            eids = list(self.edges)
            iu = np.array([idx[self.edges[e][0]] for e in eids], dtype=int)
            iv = np.array([idx[self.edges[e][1]] for e in eids], dtype=int)
            W = np.array([self.group.word_matrix(self.labels[e]) for e in eids]).reshape(-1, 4, 4)
            Wi = np.array([self.group.word_matrix(words.inverse(self.labels[e])) for e in eids]).reshape(-1, 4, 4)
            self._arr = (eids, iu, iv, W, Wi)
        return self._arr

    def position_array(self) -> np.ndarray:
        return np.array([self.positions[v] for v in self.vertices])

    def edge_lengths(self, X=None) -> dict[str, float]:
        eids, iu, iv, W, _ = self.arrays()
        X = self.position_array() if X is None else X
        d = dist_array(X[iu], np.einsum("eij,ej->ei", W, X[iv]))
        return dict(zip(eids, map(float, d)))

    def total_length(self) -> float:
        return float(sum(self.edge_lengths().values()))

    def metric_graph(self) -> MetricGraph:
        lengths = self.edge_lengths()
        return MetricGraph(self.vertices, [Edge(e, u, v, lengths[e]) for e, (u, v) in self.edges.items()], self.name)

    def with_positions(self, positions) -> DecoratedGraph:
        if not isinstance(positions, dict):
            positions = dict(zip(self.vertices, positions))
        return DecoratedGraph(self.group, self.vertices, self.edges, self.labels, positions, self.name)

    def transformed(self, h: Isometry) -> DecoratedGraph:
        """Move every position by ``h`` and conjugate the group to match."""
        pos = {v: h.lorentz @ x for v, x in self.positions.items()}
        return DecoratedGraph(self.group.conjugate(h), self.vertices, self.edges, self.labels, pos, self.name)


# ---------------------------------------------------------------------------
# length and gradient
# ---------------------------------------------------------------------------


def length_and_gradient(dg: DecoratedGraph, X: np.ndarray):
    """Total length at positions ``X`` and its Riemannian gradient (rows per vertex)."""
    _, iu, iv, W, Wi = dg.arrays()
    Y = np.einsum("eij,ej->ei", W, X[iv])
    tu, d = unit_tangent_array(X[iu], Y)
    Z = np.einsum("eij,ej->ei", Wi, X[iu])
    tv, _ = unit_tangent_array(X[iv], Z)
    G = np.zeros_like(X)
    np.add.at(G, iu, -tu)
    np.add.at(G, iv, -tv)
    G = G + mdot(X, G)[:, None] * X
    return float(np.sum(d)), G


def total_length_at(dg: DecoratedGraph, X: np.ndarray) -> float:
    _, iu, iv, W, _ = dg.arrays()
    return float(np.sum(dist_array(X[iu], np.einsum("eij,ej->ei", W, X[iv]))))


def total_length(dg: DecoratedGraph) -> float:
    return dg.total_length()


def vertex_gradient(dg: DecoratedGraph, v: str) -> np.ndarray:
    """Minus the sum of unit tangents at pos(v) toward the transported neighbours."""
    u, _ = dg.tangents(v)
    return -u.sum(axis=0)


# ---------------------------------------------------------------------------
# surgery
# ---------------------------------------------------------------------------


def _fresh(prefix: str, taken) -> str:
    i = 0
    while f"{prefix}{i}" in taken:
        i += 1
    return f"{prefix}{i}"


def contract_edge(dg: DecoratedGraph, eid: str) -> DecoratedGraph:
    """Collapse a non-loop edge, merging its head into its tail."""
    u, v = dg.edges[eid]
    if u == v:
        raise MoveRejected("cannot contract a loop")
    w = dg.labels[eid]
    edges, labels = {}, {}
    for fid, (a, b) in dg.edges.items():
        if fid == eid:
            continue
        lab = dg.labels[fid]
        if a == v:
            a, lab = u, words.multiply(w, lab)
        if b == v:
            b, lab = u, words.multiply(lab, words.inverse(w))
        edges[fid] = (a, b)
        labels[fid] = lab
    verts = [x for x in dg.vertices if x != v]
    pos = {x: dg.positions[x] for x in verts}
    return DecoratedGraph(dg.group, verts, edges, labels, pos, dg.name)


@dataclass(frozen=True)
class MoveResult:
    vertex: str
    pair: tuple
    angle: float
    segment: float
    predicted_gain: float
    realized_drop: float
    new_vertex: str | None


def apply_shortening_move(dg: DecoratedGraph, v: str, pair, angle_tol: float = 1e-3):
    """Replace two edge segments leaving ``v`` by a triod.

    ``pair`` holds two half-edges ``(edge id, end)`` at ``v``. Both segments
    have length ``c``: the shorter available length, where a loop offers half
    of itself. At a vertex of valence >= 4 the pair moves to a new vertex on
    the bisector, joined to ``v`` by an identity-labelled edge, so every
    circuit word is unchanged. At a trivalent vertex the same surgery leaves
    ``v`` with valence 2, so ``v`` itself moves to the apex instead.
    """
    h1, h2 = (tuple(h) for h in pair)
    hes = dg.half_edges(v)
    if h1 == h2 or h1 not in hes or h2 not in hes:
        raise MoveRejected("pair must be two distinct half-edges at the vertex")
    x = dg.positions[v]
    f1, f2 = dg.far_point(*h1), dg.far_point(*h2)
    (t1, t2), (l1, l2) = unit_tangent_array(np.array([x, x]), np.array([f1, f2]))
    phi = float(np.arccos(np.clip(mdot(t1, t2), -1.0, 1.0)))
    if not phi < TWO_PI_3 - angle_tol:
        raise MoveRejected(f"angle {phi!r} is not below 2pi/3 - angle_tol")
    avail = [float(l) / (2.0 if dg.edges[h[0]][0] == dg.edges[h[0]][1] else 1.0) for h, l in ((h1, l1), (h2, l2))]
    c = min(avail)
    sol = sh_gain(c, phi)
    if not sol.gain > 0:
        raise MoveRejected("no positive gain")
    apex = symmetric_apex(x, t1, t2, sol.a)
    before = dg.total_length()

    if len(hes) == 3:
        out = dg.with_positions({**dg.positions, v: apex})
        new_vertex = None
    else:
        new_vertex = _fresh("s", set(dg.vertices))
        new_edge = _fresh("n", set(dg.edges))
        edges = dict(dg.edges)
        for eid, end in (h1, h2):
            a, b = edges[eid]
            edges[eid] = (new_vertex, b) if end == 0 else (a, new_vertex)
        edges[new_edge] = (v, new_vertex)
        labels = {**dg.labels, new_edge: words.IDENTITY}
        pos = {**dg.positions, new_vertex: apex}
        out = DecoratedGraph(dg.group, list(dg.vertices) + [new_vertex], edges, labels, pos, dg.name)
    drop = before - out.total_length()
    return out, MoveResult(v, (h1, h2), phi, c, sol.gain, drop, new_vertex)


# ---------------------------------------------------------------------------
# seeds
# ---------------------------------------------------------------------------


def _random_positions(vertices, rng: np.random.Generator, radius: float = 1.0):
    out = {}
    for v in vertices:
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        out[v] = exp_map(ORIGIN, np.concatenate([[0.0], radius * rng.uniform(0.0, 1.0) * d]))
    return out


def labelled_topology(group: GroupPresentation, vertices, edges) -> tuple[dict, dict]:
    """Label the edges off a spanning tree with the generators, tree edges with 1."""
    seen = {vertices[0]}
    tree = set()
    changed = True
    while changed:
        changed = False
        for eid, (a, b) in edges.items():
            if (a in seen) != (b in seen):
                tree.add(eid)
                seen.update((a, b))
                changed = True
    off = [e for e in edges if e not in tree]
    if len(off) != group.rank:
        raise ValueError(f"topology has rank {len(off)}, group has rank {group.rank}")
    labels = {e: words.IDENTITY for e in tree}
    labels.update({e: words.letter(i) for i, e in enumerate(off)})
    return edges, labels


def seed_graph(group: GroupPresentation, topology: str = "theta", seed: int = 0, radius: float = 1.0) -> DecoratedGraph:
    """Initial carrier graph: 'theta', 'dumbbell' (rank 2) or 'random' trivalent."""
    rng = np.random.default_rng(seed)
    if topology == "theta":
        vertices = ["u", "v"]
        edges = {"e0": ("u", "v"), "e1": ("u", "v"), "e2": ("u", "v")}
    elif topology == "dumbbell":
        vertices = ["u", "v"]
        edges = {"lu": ("u", "u"), "lv": ("v", "v"), "br": ("u", "v")}
    elif topology == "random":
        g = random_trivalent_graph(group.rank, rng)
        vertices = list(g.vertices)
        edges = {e.id: (e.u, e.v) for e in g.edges.values()}
    else:
        raise ValueError(f"unknown topology {topology!r}")
    if topology != "random" and group.rank != 2:
        raise ValueError(f"topology {topology!r} has rank 2, group has rank {group.rank}")
    edges, labels = labelled_topology(group, vertices, edges)
    return DecoratedGraph(group, vertices, edges, labels, _random_positions(vertices, rng, radius), f"{group.name}_{topology}")
