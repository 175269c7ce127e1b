"""Riemannian gradient descent toward locally minimal carrier graphs.

All vertices move together along the exponential map, with Barzilai-Borwein
trial steps and Armijo backtracking. When an edge shrinks to nothing (and
topology moves are allowed) it is contracted and the resulting 4-valent
vertex is split along its narrowest pair of edges with the triod move.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from carrier_forge.bound import BoundCertificate, verify_theorem_instance
from carrier_forge.carrier import (
    DecoratedGraph,
    MoveRejected,
    apply_shortening_move,
    contract_edge,
    length_and_gradient,
    seed_graph,
    total_length_at,
)
from carrier_forge.formats import fmt, write_decorated
from carrier_forge.graph import girth
from carrier_forge.groups import GroupPresentation
from carrier_forge.hyperbolic import (
    DEGENERATE_DIST,
    TWO_PI_3,
    DegenerateEndpointsError,
    HPoint,
    exp_map,
    mdot,
    min_angle_pair,
    tangent_norm,
)

ARMIJO = 0.5
SHRINK = 0.5
MAX_MOVES = 50


@dataclass(frozen=True)
class RelaxConfig:
    step: float = 0.1
    tol_grad: float = 1e-8
    max_iter: int = 100_000
    allow_topology_moves: bool = True
    seed: int = 0
    angle_tol: float = 1e-3
    collapse_length: float = 1e-4

    def __post_init__(self):
        for name in ("step", "tol_grad", "max_iter", "angle_tol", "collapse_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RelaxReport:
    final_length: float
    iterations: int
    converged: bool
    grad_norm: float
    angle_triples: dict
    white: dict
    girth: float
    min_edge: float
    length_trace: list = field(repr=False)
    moves: list = field(default_factory=list)
    status: str = ""
    moves_available: bool = False

    @property
    def certified(self) -> bool:
        return self.converged and all(self.white.values())

    def trace_csv(self) -> str:
        rows = ["iteration,total_length"] + [f"{i},{fmt(x)}" for i, x in enumerate(self.length_trace)]
        return "\n".join(rows) + "\n"

    def summary(self) -> str:
        lines = [
            f"status {self.status}",
            f"converged {self.converged}",
            "minimality local",
            f"iterations {self.iterations}",
            f"final_length {fmt(self.final_length)}",
            f"grad_norm {fmt(self.grad_norm)}",
            f"girth {fmt(self.girth)}",
            f"min_edge {fmt(self.min_edge)}",
            f"topology_moves {len(self.moves)}",
            f"moves_available {self.moves_available}",
        ]
        lines += [f"white_{k} {v}" for k, v in self.white.items()]
        for v, angles in self.angle_triples.items():
            lines.append(f"angles {v} " + " ".join(fmt(a) for a in angles))
        return "\n".join(lines) + "\n"


def _perturb_degenerate(dg: DecoratedGraph, rng: np.random.Generator) -> DecoratedGraph:
    lengths = dg.edge_lengths()
    if min(lengths.values()) >= DEGENERATE_DIST * 1e3:
        return dg
    pos = {}
    for v, x in dg.positions.items():
        w = np.concatenate([[0.0], rng.normal(size=3)])
        w = w + mdot(x, w) * x
        pos[v] = exp_map(x, 1e-3 * w / tangent_norm(w))
    return dg.with_positions(pos)


def _topology_move(dg: DecoratedGraph, angle_tol: float):
    """Contract the shortest edge and split the 4-valent vertex it leaves."""
    lengths = dg.edge_lengths()
    eid = min((e for e, (a, b) in dg.edges.items() if a != b), key=lambda e: (lengths[e], e))
    merged = contract_edge(dg, eid)
    u = dg.edges[eid][0]
    tangents, hes = merged.tangents(u)
    base = HPoint(merged.positions[u])
    far = [HPoint.from_coords(merged.far_point(*h)) for h in hes]
    i, j, _ = min_angle_pair(base, far)
    out, move = apply_shortening_move(merged, u, (hes[i], hes[j]), angle_tol)
    return out, move, eid


def vertex_angles(dg: DecoratedGraph) -> dict:
    out = {}
    for v in dg.vertices:
        u, _ = dg.tangents(v)
        gram = u @ np.diag([-1.0, 1.0, 1.0, 1.0]) @ u.T
        iu = np.triu_indices(len(u), k=1)
        out[v] = tuple(float(a) for a in np.arccos(np.clip(gram[iu], -1.0, 1.0)))
    return out


def relax(dg: DecoratedGraph, cfg: RelaxConfig = RelaxConfig()):
    """Descend to a critical point of total length; returns (graph, report)."""
    rng = np.random.default_rng(cfg.seed)
    dg = _perturb_degenerate(dg, rng)
    X = dg.position_array()
    L, G = length_and_gradient(dg, X)
    trace = [L]
    moves = []
    alpha = cfg.step
    prev = None
    status = "max_iter"
    retry_below = math.inf
    it = 0
    eps_slack = 4.0 * np.finfo(float).eps
    while it < cfg.max_iter:
        gnorm = tangent_norm(G)
        if gnorm.max() < cfg.tol_grad:
            status = "converged"
            break
        g2 = float(np.sum(mdot(G, G)))
        if prev is not None:
            s, y = prev
            sy = float(np.sum(mdot(s, y)))
            if sy > 0:
                alpha = float(np.sum(mdot(s, s))) / sy
            alpha = min(max(alpha, 1e-12), 1e3)
        accepted = False
        while alpha > 1e-20:
            Xn = exp_map(X, -alpha * G)
            try:
                Ln = total_length_at(dg, Xn)
                if Ln <= L - ARMIJO * alpha * g2:
                    _, Gn = length_and_gradient(dg, Xn)
                    accepted = True
                elif Ln <= L + eps_slack * L:
                    # below function-value resolution: accept if the gradient shrinks
                    _, Gn = length_and_gradient(dg, Xn)
                    accepted = tangent_norm(Gn).max() < gnorm.max()
            except DegenerateEndpointsError:
                accepted = False
            if accepted:
                break
            alpha *= SHRINK
        it += 1
        if not accepted:
            status = "line_search_stalled"
            break
        # transport the previous step and gradient by projection onto the new tangent spaces
        s = -alpha * G
        s = s + mdot(Xn, s)[:, None] * Xn
        Gp = G + mdot(Xn, G)[:, None] * Xn
        prev = (s, Gn - Gp)
        X, L, G = Xn, Ln, Gn
        trace.append(L)

        shortest = min(dg.edge_lengths(X).values())
        if shortest < 1e3 * DEGENERATE_DIST and not cfg.allow_topology_moves:
            status = "zero_length_edge"
            break
        if cfg.allow_topology_moves and shortest < min(cfg.collapse_length, retry_below):
            if len(moves) >= MAX_MOVES:
                status = "too_many_moves"
                break
            current = dg.with_positions(X)
            try:
                new, move, eid = _topology_move(current, cfg.angle_tol)
                drop = current.total_length() - new.total_length()
            except (MoveRejected, DegenerateEndpointsError):
                drop = -math.inf
            if not drop > 1e-12:
                # keep descending; try again once the edge is much shorter
                retry_below = 0.1 * shortest
                continue
            moves.append({"iteration": it, "contracted": eid, "vertex": move.vertex, "angle": move.angle,
                          "predicted_gain": move.predicted_gain, "realized_drop": drop})
            dg = new
            X = dg.position_array()
            L, G = length_and_gradient(dg, X)
            trace.append(L)
            prev = None
            alpha = cfg.step
            retry_below = math.inf

    out = dg.with_positions(X)
    return out, _report(out, cfg, it, status, trace, moves, G)


def _report(dg: DecoratedGraph, cfg: RelaxConfig, it: int, status: str, trace, moves, G) -> RelaxReport:
    lengths = dg.edge_lengths()
    min_edge = min(lengths.values())
    converged = status == "converged"
    gnorm = float(tangent_norm(G).max())
    try:
        angles = vertex_angles(dg)
        sums = [float(tangent_norm(dg.tangents(v)[0].sum(axis=0))) for v in dg.vertices]
    except DegenerateEndpointsError:
        angles, sums = {}, [math.inf]
    angle_ok = bool(angles) and all(abs(a - TWO_PI_3) <= cfg.angle_tol for t in angles.values() for a in t)
    white = {
        "geodesic_edges": True,
        "positive_lengths": min_edge > 1e3 * DEGENERATE_DIST,
        "trivalent": dg.is_trivalent(),
        "angles_2pi_3": angle_ok and all(len(t) == 3 for t in angles.values()),
        "tangent_sum": max(sums) < 3 * cfg.angle_tol,
    }
    moves_available = any(min(t) < TWO_PI_3 - cfg.angle_tol for t in angles.values()) if angles else True
    try:
        gir = girth(dg.metric_graph())[0]
    except Exception:
        gir = math.nan
    return RelaxReport(
        final_length=float(sum(lengths.values())),
        iterations=it,
        converged=converged,
        grad_norm=gnorm,
        angle_triples=angles,
        white=white,
        girth=gir,
        min_edge=float(min_edge),
        length_trace=list(trace),
        moves=moves,
        status=status,
        moves_available=moves_available,
    )


# ---------------------------------------------------------------------------
# theorem scan
# ---------------------------------------------------------------------------


@dataclass
class ScanRow:
    seed: int
    topology: str
    final_length: float
    girth: float
    min_edge: float
    verdict: str
    converged: bool


@dataclass
class ScanReport:
    rows: list
    r: float
    l: float
    dump: str | None = None

    def counts(self) -> dict:
        out = {"vacuous": 0, "consistent": 0, "VIOLATION": 0}
        for row in self.rows:
            out[row.verdict] += 1
        return out

    def csv(self) -> str:
        lines = ["seed,topology,final_length,girth,min_edge,verdict,converged"]
        for r in self.rows:
            lines.append(
                f"{r.seed},{r.topology},{fmt(r.final_length)},{fmt(r.girth)},{fmt(r.min_edge)},{r.verdict},{r.converged}"
            )
        return "\n".join(lines) + "\n"


def _scan_one(args):
    group, seed, topology, cfg, cert = args
    dg = seed_graph(group, topology, seed)
    out, rep = relax(dg, RelaxConfig(**{**cfg.__dict__, "seed": seed}))
    verdict = verify_theorem_instance(out.metric_graph(), cert) if rep.min_edge > 0 else "VIOLATION"
    row = ScanRow(seed, topology, rep.final_length, rep.girth, rep.min_edge, verdict, rep.converged)
    dump = None
    if verdict == "VIOLATION":
        dump = rep.summary() + write_decorated(out)
    return row, dump


def scan_workers() -> int:
    env = os.environ.get("CARRIER_FORGE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def scan_theorem(group: GroupPresentation, seeds: int, cert: BoundCertificate, cfg: RelaxConfig = RelaxConfig(),
                 topologies=("theta", "dumbbell"), workers: int | None = None) -> ScanReport:
    """Relax ``seeds`` random starts and check the edge-length bound on each result."""
    if group.rank != cert.k:
        raise ValueError(f"group rank {group.rank} != certificate rank {cert.k}")
    if group.rank != 2:
        topologies = ("random",)
    jobs = [(group, s, topologies[s % len(topologies)], cfg, cert) for s in range(seeds)]
    workers = scan_workers() if workers is None else workers
    report = ScanReport([], cert.r, cert.l)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_scan_one, jobs)
            for row, dump in results:
                report.rows.append(row)
                if dump:
                    report.dump = dump
                    break
    else:
        for job in jobs:
            row, dump = _scan_one(job)
            report.rows.append(row)
            if dump:
                report.dump = dump
                break
    return report


def girth_radius(group: GroupPresentation, cfg: RelaxConfig = RelaxConfig(), topology: str = "theta") -> float:
    """Half the girth of the relaxed seed-0 graph: a circuit bound the scan can use."""
    dg = seed_graph(group, topology if group.rank == 2 else "random", 0)
    _, rep = relax(dg, cfg)
    return 0.5 * rep.girth
