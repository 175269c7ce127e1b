"""Property suites behind ``carrier-forge verify-lemmas``.

Each suite returns a ``SuiteResult`` with a count of checked instances and,
on failure, the first counterexample. ``run_all`` takes an optional
replacement for Sh so tests can inject a fault.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from carrier_forge.graph import (
    collapse_tree,
    find_small_subgraph,
    random_metric_graph,
    random_subtree,
    random_trivalent_graph,
    small_subgraph_conditions,
)
from carrier_forge.hyperbolic import (
    ORIGIN,
    TETRAHEDRAL_ANGLE,
    TWO_PI_3,
    HPoint,
    cosine_sum,
    exp_map,
    min_angle_pair,
    tangent_frame,
    tangent_norm,
)
from carrier_forge.shortening import compute_constants, da_db, sh_gain, solve_a

MARGIN = 1e-12


def _r(x) -> str:
    return repr(float(x))


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    failures: int = 0
    counterexample: str = ""

    def line(self) -> str:
        head = f"{self.name:<18} {'PASS' if self.passed else 'FAIL'} checked={self.checked} failures={self.failures}"
        return head + (f"\n  counterexample: {self.counterexample}" if self.counterexample else "")


def _default_sh(c, phi):
    return sh_gain(c, phi).gain


def sh_grid(n: int, c_max: float = 5.0):
    """n x n grid over (0, c_max] x (0, 2pi/3]; rows are c, columns phi."""
    c = np.linspace(c_max / n, c_max, n)
    phi = np.linspace(TWO_PI_3 / n, TWO_PI_3, n)
    return c, phi


def monotone_suite(n: int, sh=None) -> SuiteResult:
    """Sh increases in c and decreases in phi; a'(b) > -2 where a is not tiny."""
    f = sh or _default_sh
    c, phi = sh_grid(n)
    C, P = np.meshgrid(c, phi, indexing="ij")
    S = np.asarray(f(C, P), dtype=float)
    checked, fails, example = 0, 0, ""

    # along c; the phi = 2pi/3 column is identically zero and is excluded
    dc = np.diff(S[:, :-1], axis=0)
    checked += dc.size
    bad = np.argwhere(~(dc > MARGIN))
    if bad.size:
        i, j = bad[0]
        fails += len(bad)
        example = f"Sh not increasing in c at phi={_r(phi[j])}: Sh({_r(c[i])})={_r(S[i, j])}, Sh({_r(c[i + 1])})={_r(S[i + 1, j])}"

    dp = np.diff(S, axis=1)
    checked += dp.size
    bad = np.argwhere(~(dp < -MARGIN))
    if bad.size:
        i, j = bad[0]
        fails += len(bad)
        example = example or (
            f"Sh not decreasing in phi at c={_r(c[i])}: Sh(phi={_r(phi[j])})={_r(S[i, j])}, Sh(phi={_r(phi[j + 1])})={_r(S[i, j + 1])}"
        )

    # a'(b) along each row of fixed c, b running over [0, c]
    B = C * np.linspace(0.0, 1.0, n)[None, :]
    A = solve_a(C, B)
    keep = A > 1e-6
    slope = da_db(A[keep], B[keep])
    checked += int(keep.sum())
    bad = ~(slope > -2.0)
    if bad.any():
        fails += int(bad.sum())
        example = example or f"da/db = {_r(slope[bad][0])} <= -2"
    return SuiteResult("monotone", fails == 0, checked, fails, example)


def derivative_suite(trials: int, rng: np.random.Generator) -> SuiteResult:
    """Closed-form da/db against a central difference of solve_a."""
    c = rng.uniform(0.05, 5.0, trials)
    b = c * rng.uniform(0.05, 0.95, trials)
    h = 1e-6 * c
    fd = (solve_a(c, b + h) - solve_a(c, b - h)) / (2 * h)
    exact = da_db(solve_a(c, b), b)
    err = np.abs(fd - exact)
    bad = ~(err < 1e-6 * np.maximum(1.0, np.abs(exact)))
    example = ""
    if bad.any():
        i = int(np.argmax(bad))
        example = f"c={_r(c[i])} b={_r(b[i])}: finite difference {_r(fd[i])} vs closed form {_r(exact[i])}"
    return SuiteResult("derivative", not bad.any(), trials, int(bad.sum()), example)


def suff_shortening_suite(trials: int, rng: np.random.Generator, sh=None) -> SuiteResult:
    """s < s0 and c > z s imply Sh(c) > s at the tetrahedral angle."""
    f = sh or _default_sh
    k = compute_constants(TETRAHEDRAL_ANGLE, sh_fn=sh)
    s = k.s0 * rng.uniform(1e-6, 1.0, trials)
    c = k.z * s * np.exp(rng.uniform(1e-9, np.log(20.0), trials))
    gain = np.asarray(f(c, np.full(trials, TETRAHEDRAL_ANGLE)), dtype=float)
    bad = ~(gain > s)
    example = ""
    if bad.any():
        i = int(np.argmax(bad))
        example = f"s={_r(s[i])} c={_r(c[i])}: Sh={_r(gain[i])}"
    return SuiteResult("suff_shortening", not bad.any(), trials, int(bad.sum()), example)


def small_subgraph_suite(trials: int, rng: np.random.Generator) -> SuiteResult:
    fails, example = 0, ""
    for _ in range(trials):
        g = random_metric_graph(int(rng.integers(1, 31)), rng)
        eid = sorted(g.edges)[int(rng.integers(len(g.edges)))]
        m = float(rng.uniform(0.5, 20.0))
        l0 = g.edges[eid].length * float(rng.uniform(1.01, 3.0))
        s = find_small_subgraph(g, eid, m, l0)
        if not all(small_subgraph_conditions(s, m, l0)) or eid not in s.edges:
            fails += 1
            example = example or f"graph {g.name} with {len(g.edges)} edges, seed edge {eid}, m={_r(m)}, l0={_r(l0)}"
    return SuiteResult("small_subgraph", fails == 0, trials, fails, example)


def collapse_suite(trials: int, rng: np.random.Generator) -> SuiteResult:
    fails, example = 0, ""
    for _ in range(trials):
        k = int(rng.integers(2, 6))
        x = random_trivalent_graph(k, rng)
        s = random_subtree(x, rng)
        problems = collapse_tree(x, s).check(x)
        if problems:
            fails += 1
            example = example or f"k={k} S={sorted(s.edges)}: {problems}"
    return SuiteResult("collapse", fails == 0, trials, fails, example)


def random_directions(rng: np.random.Generator, n: int):
    """A random base point and n random points around it."""
    base = HPoint.from_coords(exp_map(ORIGIN, np.concatenate([[0.0], rng.normal(size=3)])))
    frame = tangent_frame(base.x)
    w = rng.normal(size=(n, 3)) @ frame
    w *= (rng.uniform(0.1, 3.0, n) / tangent_norm(w))[:, None]
    return base, [HPoint(x) for x in exp_map(base.x, w)]


def cs1_suite(trials: int, rng: np.random.Generator) -> SuiteResult:
    """Sum of pairwise cosines >= -n/2; for n >= 4 some pair is within arccos(-1/3)."""
    fails, example = 0, ""
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        base, pts = random_directions(rng, n)
        total = cosine_sum(base, pts)
        ok = total >= -n / 2 - 1e-12
        if n >= 4:
            ok = ok and min_angle_pair(base, pts)[2] <= TETRAHEDRAL_ANGLE + 1e-12
        if not ok:
            fails += 1
            example = example or f"n={n} cosine sum {_r(total)}"
    return SuiteResult("cs1", fails == 0, trials, fails, example)


def run_all(grid_density: int = 200, trials: int = 1000, seed: int = 0, sh=None) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    return [
        monotone_suite(grid_density, sh),
        derivative_suite(trials, rng),
        suff_shortening_suite(trials, rng, sh),
        small_subgraph_suite(trials, rng),
        collapse_suite(trials, rng),
        cs1_suite(trials, rng),
    ]
