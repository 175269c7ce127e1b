"""The triod shortening move and its gain.

Two geodesic segments of length ``c`` leave a point at angle ``phi``. They are
replaced by a triod whose legs ``b``, ``b``, ``a`` meet at pairwise angles
2*pi/3. The apex sits on the angle bisector, so each half of the picture is a
triangle with sides (a, b, c) and angle 2*pi/3 opposite ``c`` and ``phi/2``
opposite ``b``. The length saved is ``Sh(c, phi) = 2c - 2b - a``.

All solvers broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from carrier_forge.hyperbolic import (
    TETRAHEDRAL_ANGLE,
    TWO_PI_3,
    GeometryError,
    HPoint,
    dist_array,
    exp_map,
    mdot,
    normalize_point,
    tangent_frame,
    tangent_norm,
    unit_tangent_array,
)

RESIDUAL_TOL = 1e-10
_INTERNAL_TOL = 1e-12
_SQRT3 = math.sqrt(3.0)


class ShorteningDomainError(ValueError):
    pass


class NoSolutionError(ValueError):
    pass


class CertificationError(RuntimeError):
    """A grid certificate failed; this points at a bug, not bad input."""


class DegenerateTriodError(GeometryError):
    pass


@dataclass(frozen=True)
class ShorteningInput:
    c: float
    phi: float

    def __post_init__(self):
        _check_domain(self.c, self.phi)


@dataclass(frozen=True)
class TriodSolution:
    a: float
    b: float
    gain: float

    def residual(self, c):
        return law_of_cosines_residual(c, self.a, self.b)


@dataclass(frozen=True)
class ShorteningConstants:
    phi0: float
    y: float
    c0: float
    z: float
    s0: float
    grid_points: int

    def check(self) -> bool:
        return (
            abs(self.z * self.y - 1.0) <= 1e-12
            and abs(self.s0 - self.c0 / self.z) <= 1e-12 * max(1.0, self.s0)
            and self.y > 0
            and self.c0 > 0
        )


def _check_domain(c, phi):
    c = np.asarray(c, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(~(c > 0)):
        raise ShorteningDomainError("segment length must be positive")
    if np.any(~(phi > 0)) or np.any(phi > TWO_PI_3 + 1e-12):
        raise ShorteningDomainError("angle must lie in (0, 2pi/3]")
    return c, phi


def bisector_ratio(phi):
    """B(phi) = (2/sqrt 3) sin(phi/2), so that sinh b = B sinh c."""
    phi = np.asarray(phi, dtype=float)
    B = 2.0 / _SQRT3 * np.sin(phi / 2.0)
    return np.where(phi >= TWO_PI_3, 1.0, np.minimum(B, 1.0))


def law_of_cosines_residual(c, a, b):
    return np.cosh(c) - (np.cosh(a) * np.cosh(b) + 0.5 * np.sinh(a) * np.sinh(b))


def solve_b(c, phi):
    """Leg from the apex to a far endpoint, by the law of sines."""
    c, phi = _check_domain(c, phi)
    b = np.minimum(np.arcsinh(bisector_ratio(phi) * np.sinh(c)), c)
    b = np.where(phi >= TWO_PI_3, c, b)
    return float(b) if b.ndim == 0 else b


def solve_a(c, b):
    """Solve cosh c = cosh a cosh b + (1/2) sinh a sinh b for a >= 0."""
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b > c + 1e-12 * np.maximum(1.0, c)):
        raise NoSolutionError("b exceeds c: no triangle with a 2pi/3 angle opposite c")
    b = np.minimum(b, c)
    sb, sc = np.sinh(b), np.sinh(c)
    # t = tanh(a/2) solves t^2 (cosh b + cosh c) + t sinh b + (cosh b - cosh c) = 0
    disc = sb * sb + 4.0 * (sc - sb) * (sc + sb)
    num = 4.0 * np.sinh((c + b) / 2.0) * np.sinh((c - b) / 2.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = num / (sb + np.sqrt(disc))
        t = np.where(num == 0.0, 0.0, t)
        a = 2.0 * np.arctanh(np.clip(t, 0.0, 1.0 - 1e-16))
    bad = ~(np.abs(law_of_cosines_residual(c, a, b)) <= _INTERNAL_TOL * np.cosh(c))
    if np.any(bad):
        a = np.where(bad, _bisect_a(c, b), a)
    return float(a) if a.ndim == 0 else a


def _bisect_a(c, b):
    c, b = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(b, dtype=float))
    lo = np.zeros_like(c)
    hi = np.array(c, dtype=float)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        high = law_of_cosines_residual(c, mid, b) < 0.0
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    return 0.5 * (lo + hi)


def sh_gain(c, phi=None) -> TriodSolution:
    """Legs of the replacement triod and the length it saves.

    Accepts a ``ShorteningInput`` or ``(c, phi)``; array arguments broadcast.
    """
    if isinstance(c, ShorteningInput):
        c, phi = c.c, c.phi
    c, phi = _check_domain(c, phi)
    b = np.asarray(solve_b(c, phi))
    a = np.asarray(solve_a(c, b))
    gain = 2.0 * c - 2.0 * b - a
    if gain.ndim == 0:
        return TriodSolution(float(a), float(b), float(gain))
    return TriodSolution(a, b, gain)


def sh(c, phi):
    return sh_gain(c, phi).gain


def sh_derivative_at_zero(phi):
    """d/dc Sh(c, phi) at c = 0: 2 - (3/2)B - (1/2)sqrt(4 - 3B^2)."""
    phi = np.asarray(phi, dtype=float)
    _check_domain(1.0, phi)
    B = bisector_ratio(phi)
    out = 2.0 - 1.5 * B - 0.5 * np.sqrt(4.0 - 3.0 * B * B)
    out = np.where(phi >= TWO_PI_3, 0.0, out)
    return float(out) if out.ndim == 0 else out


def da_db(a, b):
    """Implicit derivative of a(b) along cosh c = cosh a cosh b + sinh a sinh b / 2."""
    num = np.cosh(a) * np.sinh(b) + 0.5 * np.sinh(a) * np.cosh(b)
    den = np.sinh(a) * np.cosh(b) + 0.5 * np.cosh(a) * np.sinh(b)
    return -num / den


@lru_cache(maxsize=32)
def compute_constants(phi0: float = TETRAHEDRAL_ANGLE, grid_points: int = 10_000, c_max: float = 10.0,
                      sh_fn=None) -> ShorteningConstants:
    """Constants (y, c0, z, s0) with Sh(c)/c >= y certified on (0, c0].

    ``y`` is half the slope of Sh at zero; ``c0`` is the end of the initial
    stretch of a dense grid on (0, c_max] where the ratio stays above ``y``,
    refined by bisection.
    """
    phi0 = float(phi0)
    if not 0.0 < phi0 < TWO_PI_3:
        raise ShorteningDomainError("phi0 must lie in (0, 2pi/3)")
    f = sh if sh_fn is None else sh_fn
    y = 0.5 * sh_derivative_at_zero(phi0)

    def ratio(c):
        return f(c, phi0) / c

    grid = np.linspace(c_max / grid_points, c_max, grid_points)
    ok = ratio(grid) >= y
    if ok.all():
        c0 = c_max
    else:
        first_bad = int(np.argmin(ok))
        if first_bad == 0:
            raise CertificationError("Sh(c)/c is below y at the first grid point")
        lo, hi = grid[first_bad - 1], grid[first_bad]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if ratio(mid) >= y:
                lo = mid
            else:
                hi = mid
        c0 = float(lo)

    check = np.linspace(c0 / grid_points, c0, grid_points)
    bad = ratio(check) < y
    if bad.any():
        where = check[bad][0]
        raise CertificationError(f"Sh(c)/c < y at c = {where!r}")
    z = 1.0 / y
    return ShorteningConstants(phi0=phi0, y=y, c0=c0, z=z, s0=c0 / z, grid_points=grid_points)


# ---------------------------------------------------------------------------
# geometric realization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriodRealization:
    steiner: HPoint
    lengths: tuple[float, float, float]
    degenerate: bool = False
    iterations: int = 0


def _triangle_angles(pts):
    out = []
    for i in range(3):
        u, _ = unit_tangent_array(pts[i], pts[(i + 1) % 3])
        w, _ = unit_tangent_array(pts[i], pts[(i + 2) % 3])
        out.append(math.acos(max(-1.0, min(1.0, float(mdot(u, w))))))
    return out


def _fermat_objective(x, pts):
    return float(np.sum(dist_array(np.broadcast_to(x, pts.shape), pts)))


def realize_triod(p1: HPoint, p2: HPoint, v: HPoint, *, tol: float = 1e-10, max_iter: int = 200,
                  strict: bool = False) -> TriodRealization:
    """Fermat point of the triangle (p1, p2, v) and the legs to it.

    Lengths are returned as ``(a, b1, b2)``: the leg to ``v`` first. When an
    angle of the triangle is at least 2*pi/3 the minimizer is that vertex; the
    result is flagged ``degenerate`` (or ``DegenerateTriodError`` is raised when
    ``strict``).
    """
    pts = np.array([p1.x, p2.x, v.x])
    angles = _triangle_angles(pts)
    k = int(np.argmax(angles))
    if angles[k] >= TWO_PI_3:
        if strict:
            raise DegenerateTriodError(f"triangle angle {angles[k]!r} >= 2pi/3")
        s = pts[k]
        d = dist_array(np.broadcast_to(s, pts.shape), pts)
        return TriodRealization(HPoint(s), (float(d[2]), float(d[0]), float(d[1])), True, 0)

    # damped Riemannian Newton on the sum of distances
    x = normalize_point(pts.sum(axis=0))
    rescued = set()
    it = 0
    for it in range(1, max_iter + 1):
        d = dist_array(np.broadcast_to(x, pts.shape), pts)
        near = int(np.argmin(d))
        if d[near] < 1e-7 * (1.0 + float(d.max())) and near not in rescued:
            # Newton creeps radially onto a vertex whose angle is just below
            # 2pi/3; restart on the ray out of that vertex along its bisector
            rescued.add(near)
            x = _bisector_restart(pts, near)
            continue
        u, d = unit_tangent_array(np.broadcast_to(x, pts.shape), pts)
        grad = -u.sum(axis=0)
        if tangent_norm(grad) < tol:
            break
        frame = tangent_frame(x)
        g = frame @ (grad * np.array([-1.0, 1.0, 1.0, 1.0]))
        uc = u @ (frame * np.array([-1.0, 1.0, 1.0, 1.0])).T
        hess = np.zeros((3, 3))
        for ui, di in zip(uc, d):
            hess += (np.eye(3) - np.outer(ui, ui)) / math.tanh(di)
        step = -np.linalg.solve(hess, g)
        # the Hessian is nearly singular for almost collinear triangles
        cap = float(d.max())
        if np.linalg.norm(step) > cap:
            step *= cap / np.linalg.norm(step)
        f0 = _fermat_objective(x, pts)
        t = 1.0
        while t > 1e-12:
            cand = exp_map(x, t * (step @ frame))
            if _fermat_objective(cand, pts) <= f0 - 1e-4 * t * float(g @ -step) or t * np.linalg.norm(step) < 1e-14:
                break
            t *= 0.5
        x = cand
    d = dist_array(np.broadcast_to(x, pts.shape), pts)
    return TriodRealization(HPoint(x), (float(d[2]), float(d[0]), float(d[1])), False, it)


def _bisector_restart(pts, k):
    v = pts[k]
    others = np.delete(pts, k, axis=0)
    u, d = unit_tangent_array(np.broadcast_to(v, others.shape), others)
    w = u.sum(axis=0)
    w = w / tangent_norm(w)
    lo, hi = 0.0, float(d.min())
    # golden-section search for the best point on the ray
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(200):
        m1, m2 = hi - g * (hi - lo), lo + g * (hi - lo)
        if _fermat_objective(exp_map(v, m1 * w), pts) <= _fermat_objective(exp_map(v, m2 * w), pts):
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-15:
            break
    return exp_map(v, max(0.5 * (lo + hi), 1e-9) * w)


def symmetric_apex(v, u1, u2, a):
    """Apex of the symmetric triod: distance ``a`` from ``v`` along the bisector of u1, u2."""
    bis = u1 + u2
    n = tangent_norm(bis)
    if n < 1e-15:
        raise DegenerateTriodError("opposite directions have no bisector")
    return exp_map(v, a * bis / n)
