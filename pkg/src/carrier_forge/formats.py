"""Line-oriented text formats for graphs, groups and decorated graphs.

Graph file::

    graph <name> rank <k>
    vertex <id>
    edge <id> <u> <v> <length>

Decorated graphs add ``pos <vertex> x0 x1 x2 x3`` and ``label <edge> <word>``
lines (word tokens separated by spaces, ``1`` for the identity); their edge
lengths are informational and recomputed on load. Group file::

    group <name> rank <k>
    gen <id> re00 im00 re01 im01 re10 im10 re11 im11

Blank lines and ``#`` comments are ignored. Reals are written with 17
significant digits so every file round-trips exactly.
"""

from __future__ import annotations

import numpy as np

from carrier_forge import words
from carrier_forge.graph import Edge, GraphError, MetricGraph
from carrier_forge.groups import GroupPresentation
from carrier_forge.hyperbolic import GeometryError, Isometry


class FormatError(ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line.split()


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(lineno, f"not a number: {tok!r}") from None


def _header(text: str, keyword: str):
    for lineno, toks in _lines(text):
        if toks[0] != keyword or len(toks) != 4 or toks[2] != "rank":
            raise FormatError(lineno, f"expected '{keyword} <name> rank <k>'")
        try:
            return toks[1], int(toks[3]), lineno
        except ValueError:
            raise FormatError(lineno, f"bad rank {toks[3]!r}") from None
    raise FormatError(None, f"empty {keyword} file")


# ---------------------------------------------------------------------------
# metric graphs
# ---------------------------------------------------------------------------


def write_graph(g: MetricGraph) -> str:
    out = [f"graph {g.name} rank {g.rank}"]
    out += [f"vertex {v}" for v in g.vertices]
    out += [f"edge {e.id} {e.u} {e.v} {fmt(e.length)}" for e in g.edges.values()]
    return "\n".join(out) + "\n"


def _parse_graph_body(text: str, allow=()):
    name, k, head = _header(text, "graph")
    vertices, edges, extra = [], [], []
    for lineno, toks in _lines(text):
        if lineno == head:
            continue
        kind = toks[0]
        if kind == "vertex":
            if len(toks) != 2:
                raise FormatError(lineno, "expected 'vertex <id>'")
            vertices.append(toks[1])
        elif kind == "edge":
            if len(toks) != 5:
                raise FormatError(lineno, "expected 'edge <id> <u> <v> <length>'")
            edges.append((lineno, Edge(toks[1], toks[2], toks[3], _float(toks[4], lineno))))
        elif kind in allow:
            extra.append((lineno, toks))
        else:
            raise FormatError(lineno, f"unknown record {kind!r}")
    return name, k, vertices, edges, extra


def read_graph(text: str) -> MetricGraph:
    name, k, vertices, edges, _ = _parse_graph_body(text)
    for lineno, e in edges:
        if not e.length > 0:
            raise FormatError(lineno, f"edge {e.id} has non-positive length")
    try:
        g = MetricGraph(vertices, [e for _, e in edges], name)
    except GraphError as exc:
        raise FormatError(None, str(exc)) from None
    if g.rank != k:
        raise FormatError(1, f"header says rank {k} but the graph has rank {g.rank}")
    return g


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------


def write_group(group: GroupPresentation) -> str:
    out = [f"group {group.name} rank {group.rank}"]
    for gid, g in zip(group.ids, group.generators):
        nums = []
        for z in g.m.ravel():
            nums += [fmt(z.real), fmt(z.imag)]
        out.append(f"gen {gid} " + " ".join(nums))
    return "\n".join(out) + "\n"


def read_group(text: str) -> GroupPresentation:
    name, k, head = _header(text, "group")
    gens: dict[str, Isometry] = {}
    for lineno, toks in _lines(text):
        if lineno == head:
            continue
        if toks[0] != "gen" or len(toks) != 10:
            raise FormatError(lineno, "expected 'gen <id> re00 im00 re01 im01 re10 im10 re11 im11'")
        gid = toks[1]
        if len(gid) != 1 or not gid.islower():
            raise FormatError(lineno, f"generator id must be a lower-case letter, got {gid!r}")
        vals = [_float(t, lineno) for t in toks[2:]]
        m = np.array([complex(vals[i], vals[i + 1]) for i in range(0, 8, 2)]).reshape(2, 2)
        try:
            gens[gid] = Isometry(m)
        except GeometryError as exc:
            raise FormatError(lineno, str(exc)) from None
    expected = [words.letter(i) for i in range(k)]
    if sorted(gens) != expected:
        raise FormatError(None, f"expected generators {expected}, found {sorted(gens)}")
    return GroupPresentation(name, [gens[g] for g in expected])


# ---------------------------------------------------------------------------
# decorated graphs
# ---------------------------------------------------------------------------


def write_decorated(dg) -> str:
    lengths = dg.edge_lengths()
    k = len(dg.edges) - len(dg.vertices) + 1
    out = [f"graph {dg.name} rank {k}"]
    out += [f"vertex {v}" for v in dg.vertices]
    out += [f"edge {eid} {u} {v} {fmt(lengths[eid])}" for eid, (u, v) in dg.edges.items()]
    out += [f"pos {v} " + " ".join(fmt(c) for c in dg.positions[v]) for v in dg.vertices]
    out += [f"label {eid} {words.format_word(dg.labels[eid])}" for eid in dg.edges]
    return "\n".join(out) + "\n"


def read_decorated(text: str, group: GroupPresentation):
    from carrier_forge.carrier import DecoratedGraph

    name, k, vertices, edges, extra = _parse_graph_body(text, allow=("pos", "label"))
    positions, labels = {}, {}
    for lineno, toks in extra:
        if toks[0] == "pos":
            if len(toks) != 6:
                raise FormatError(lineno, "expected 'pos <vertex> x0 x1 x2 x3'")
            x = np.array([_float(t, lineno) for t in toks[2:]])
            if abs(-x[0] ** 2 + x[1:] @ x[1:] + 1.0) > 1e-8 * max(1.0, x[0] ** 2) or x[0] <= 0:
                raise FormatError(lineno, "position is not on the hyperboloid")
            positions[toks[1]] = x
        else:
            if len(toks) < 2:
                raise FormatError(lineno, "expected 'label <edge> <word>'")
            try:
                labels[toks[1]] = words.parse(" ".join(toks[2:]), group.rank)
            except ValueError as exc:
                raise FormatError(lineno, str(exc)) from None
    if k != group.rank:
        raise FormatError(1, f"graph rank {k} does not match group rank {group.rank}")
    topo = {e.id: (e.u, e.v) for _, e in edges}
    missing = [v for v in vertices if v not in positions]
    if missing:
        raise FormatError(None, f"vertices without positions: {missing}")
    for eid in topo:
        labels.setdefault(eid, words.IDENTITY)
    try:
        return DecoratedGraph(group, vertices, topo, labels, positions, name)
    except (GraphError, GeometryError, ValueError) as exc:
        raise FormatError(None, str(exc)) from None
