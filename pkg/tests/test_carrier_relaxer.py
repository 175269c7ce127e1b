import math

import numpy as np
import pytest

from carrier_forge import words
from carrier_forge.bound import compute_l
from carrier_forge.carrier import (
    DecoratedGraph,
    MoveRejected,
    apply_shortening_move,
    contract_edge,
    length_and_gradient,
    seed_graph,
    total_length,
    total_length_at,
    vertex_gradient,
)
from carrier_forge.groups import load_shipped
from carrier_forge.hyperbolic import (
    ORIGIN,
    TETRAHEDRAL_ANGLE,
    TWO_PI_3,
    HPoint,
    exp_map,
    mdot,
    tangent_frame,
    tangent_norm,
)
from carrier_forge.relaxer import RelaxConfig, girth_radius, relax, scan_theorem, vertex_angles
from carrier_forge.shortening import realize_triod, sh_gain
from tests.test_hyperbolic import random_isometry

FUCHSIAN = load_shipped("schottky2_fuchsian")
TWISTED = load_shipped("schottky2_twisted")


def star(group, c, angles, base=ORIGIN):
    """Vertex v joined by identity edges to points at distance c in the given planar directions."""
    f = tangent_frame(base)
    pos = {"v": base}
    edges, labels = {}, {}
    for i, th in enumerate(angles):
        pos[f"p{i}"] = exp_map(base, c * (math.cos(th) * f[0] + math.sin(th) * f[1]))
        edges[f"e{i}"] = ("v", f"p{i}")
        labels[f"e{i}"] = ""
    return DecoratedGraph(group, list(pos), edges, labels, pos, "star")


def fd_check(dg, rng, n_dirs=100, h=1e-6):
    X = dg.position_array()
    _, G = length_and_gradient(dg, X)
    worst = 0.0
    for _ in range(n_dirs):
        V = rng.normal(size=X.shape)
        V = V + mdot(X, V)[:, None] * X
        lp = total_length_at(dg, exp_map(X, h * V))
        lm = total_length_at(dg, exp_map(X, -h * V))
        worst = max(worst, abs((lp - lm) / (2 * h) - float(np.sum(mdot(G, V)))))
    return worst


# ---------------------------------------------------------------------------
# length and gradient
# ---------------------------------------------------------------------------


def test_total_length_degenerate_is_zero():
    pos = {"u": ORIGIN, "v": ORIGIN}
    dg = DecoratedGraph(FUCHSIAN, ["u", "v"], {"e0": ("u", "v"), "e1": ("u", "v")}, {}, pos)
    assert total_length(dg) == 0.0


def test_single_edge_on_axis_has_translation_length():
    for g, gid in zip(TWISTED.generators, "ab"):
        x = g.axis_point().x
        dg = DecoratedGraph(TWISTED, ["u"], {"e": ("u", "u")}, {"e": gid}, {"u": x})
        assert total_length(dg) == pytest.approx(g.translation_length(), abs=1e-9)


def test_total_length_equivariant_under_conjugation():
    rng = np.random.default_rng(0)
    dg = seed_graph(TWISTED, "theta", 4)
    for _ in range(10):
        h = random_isometry(rng)
        assert dg.transformed(h).total_length() == pytest.approx(dg.total_length(), abs=1e-9)


def test_gradient_at_fermat_point_vanishes():
    pts = [HPoint.from_ball(p) for p in ([0.3, 0, 0], [-0.2, 0.35, 0], [0, -0.3, 0.2])]
    t = realize_triod(*pts)
    pos = {"v": t.steiner.x, "p0": pts[0].x, "p1": pts[1].x, "p2": pts[2].x}
    dg = DecoratedGraph(FUCHSIAN, list(pos), {f"e{i}": ("v", f"p{i}") for i in range(3)}, {}, pos)
    assert tangent_norm(vertex_gradient(dg, "v")) < 1e-10


def test_gradient_with_two_equal_tangents_is_large():
    dg = star(FUCHSIAN, 1.0, [0.0, 0.0, 2.0])
    dg.positions["p1"] = exp_map(ORIGIN, 2.0 * tangent_frame(ORIGIN)[0])
    assert tangent_norm(vertex_gradient(dg, "v")) >= 1.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for group, topo in ((FUCHSIAN, "theta"), (TWISTED, "dumbbell"), (load_shipped("schottky3"), "random")):
        for seed in range(3):
            assert fd_check(seed_graph(group, topo, seed), rng) < 1e-6


# ---------------------------------------------------------------------------
# surgery
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("c,phi", [(1.0, TETRAHEDRAL_ANGLE), (0.3, 1.0), (2.0, 0.4)])
def test_shortening_move_drop_equals_gain(c, phi):
    dg = star(FUCHSIAN, c, [0.0, phi, 3.0, 4.5])
    out, move = apply_shortening_move(dg, "v", (("e0", 0), ("e1", 0)))
    assert move.new_vertex is not None
    assert move.realized_drop == pytest.approx(sh_gain(c, phi).gain, abs=1e-8)
    assert out.total_length() < dg.total_length()
    angles = vertex_angles(out)[move.new_vertex]
    assert all(abs(a - TWO_PI_3) < 1e-8 for a in angles)


def test_shortening_move_rejects_wide_angle():
    dg = star(FUCHSIAN, 1.0, [0.0, TWO_PI_3, 3.5, 5.0])
    with pytest.raises(MoveRejected):
        apply_shortening_move(dg, "v", (("e0", 0), ("e1", 0)))


def cyclic_classes(dg):
    return sorted(min(w[i:] + w[:i] for i in range(len(w))) for w in map(words.cyclic_reduce, dg.circuit_words()))


def test_contraction_and_move_keep_circuit_words():
    out, _ = relax(seed_graph(FUCHSIAN, "theta", 0))
    assert out.is_surjective()
    rose = contract_edge(out, "e0")
    assert rose.is_surjective() and rose.rank == 2
    at = rose.vertices[0]
    hes = rose.half_edges(at)
    before = cyclic_classes(rose)
    for i in range(len(hes)):
        for j in range(i + 1, len(hes)):
            try:
                moved, _ = apply_shortening_move(rose, at, (hes[i], hes[j]))
            except MoveRejected:
                continue
            assert cyclic_classes(moved) == before
            assert moved.is_surjective()


# ---------------------------------------------------------------------------
# relaxation
# ---------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        RelaxConfig(step=0)
    with pytest.raises(ValueError):
        RelaxConfig(tol_grad=-1)


@pytest.mark.parametrize("group", [FUCHSIAN, TWISTED], ids=["fuchsian", "twisted"])
def test_relax_theta_converges_with_white_conditions(group):
    cfg = RelaxConfig(seed=0)
    out, rep = relax(seed_graph(group, "theta", 0), cfg)
    assert rep.converged and rep.certified
    assert rep.grad_norm < cfg.tol_grad
    assert len(rep.angle_triples) == 2
    for angles in rep.angle_triples.values():
        assert all(abs(a - TWO_PI_3) <= 1e-3 for a in angles)
    trace = np.array(rep.length_trace)
    assert np.all(np.diff(trace) <= 4 * np.finfo(float).eps * trace[:-1])
    assert not rep.moves_available
    assert out.validate() == []


def test_relax_dumbbell_and_compare_topologies():
    lengths = {}
    for topo in ("theta", "dumbbell"):
        out, rep = relax(seed_graph(FUCHSIAN, topo, 0))
        assert rep.certified and out.is_trivalent()
        lengths[topo] = rep.final_length
    assert min(lengths.values()) > 0


def test_relax_is_equivariant():
    rng = np.random.default_rng(2)
    dg = seed_graph(TWISTED, "theta", 5)
    _, rep = relax(dg)
    h = random_isometry(rng)
    _, rep_h = relax(dg.transformed(h))
    assert rep_h.iterations == rep.iterations
    assert rep_h.final_length == pytest.approx(rep.final_length, abs=1e-9)
    assert rep_h.min_edge == pytest.approx(rep.min_edge, abs=1e-9)


def test_relax_from_coincident_positions():
    dg = seed_graph(FUCHSIAN, "theta", 0)
    dg = dg.with_positions({v: ORIGIN for v in dg.vertices})
    out, rep = relax(dg)
    assert rep.certified


def test_relax_rank3_random_seeds():
    g = load_shipped("schottky3")
    for seed in range(3):
        _, rep = relax(seed_graph(g, "random", seed), RelaxConfig(seed=seed))
        assert rep.certified


def test_relax_reports_non_convergence():
    _, rep = relax(seed_graph(FUCHSIAN, "theta", 0), RelaxConfig(max_iter=3))
    assert not rep.converged and rep.status == "max_iter" and not rep.certified


def test_report_outputs():
    _, rep = relax(seed_graph(FUCHSIAN, "theta", 0))
    csv = rep.trace_csv().splitlines()
    assert csv[0] == "iteration,total_length" and len(csv) == len(rep.length_trace) + 1
    assert "minimality local" in rep.summary()


# ---------------------------------------------------------------------------
# theorem scan
# ---------------------------------------------------------------------------


def test_scan_small():
    r = girth_radius(FUCHSIAN)
    assert r > 0
    cert = compute_l(r, 2)
    rep = scan_theorem(FUCHSIAN, 6, cert, workers=1)
    counts = rep.counts()
    assert counts["VIOLATION"] == 0 and sum(counts.values()) == 6
    assert rep.csv().splitlines()[0] == "seed,topology,final_length,girth,min_edge,verdict,converged"


def test_scan_counts_vacuous_separately():
    cert = compute_l(100.0, 2)
    rep = scan_theorem(FUCHSIAN, 2, cert, workers=1)
    assert rep.counts()["vacuous"] == 2


def test_scan_rank_mismatch():
    with pytest.raises(ValueError):
        scan_theorem(FUCHSIAN, 1, compute_l(1.0, 3), workers=1)


def test_scan_parallel_matches_serial():
    cert = compute_l(1.0, 2)
    a = scan_theorem(TWISTED, 4, cert, workers=1).csv()
    b = scan_theorem(TWISTED, 4, cert, workers=2).csv()
    assert a == b
