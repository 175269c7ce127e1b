"""Hyperbolic 3-space in the hyperboloid model.

Points live on the upper sheet of <x, x> = -1 in Minkowski space with
signature (-+++). Isometries come in as SL(2, C) matrices and act through
their image in SO+(3, 1).

The array-level helpers (``mdot``, ``dist_array``, ``unit_tangent_array``,
``exp_map``...) take raw coordinate arrays and broadcast over leading axes;
the relaxer works with those directly. ``HPoint``/``HTangent`` are the
validated wrappers used at API boundaries.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TWO_PI_3 = 2.0 * math.pi / 3.0
TETRAHEDRAL_ANGLE = math.acos(-1.0 / 3.0)

POINT_TOL = 1e-10
CLAMP_TOL = 1e-8
DEGENERATE_DIST = 1e-12

_J = np.diag([-1.0, 1.0, 1.0, 1.0])

# Hermitian basis: x -> [[x0 + x3, x1 + i x2], [x1 - i x2, x0 - x3]]
_SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class GeometryError(ValueError):
    pass


class DegenerateEndpointsError(GeometryError):
    pass


class CoincidentPointsError(GeometryError):
    pass


class BaseMismatchError(GeometryError):
    pass


class NumericalHealthError(ArithmeticError):
    """An arccos/arccosh argument was out of range by more than roundoff."""


# ---------------------------------------------------------------------------
# array kernels
# ---------------------------------------------------------------------------


def mdot(x, y):
    """Minkowski inner product over the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.einsum("...i,...i->...", x[..., 1:], y[..., 1:])


def normalize_point(x):
    """Rescale onto the upper sheet."""
    x = np.asarray(x, dtype=float)
    q = -mdot(x, x)
    if np.any(q <= 0):
        raise GeometryError("vector is not timelike")
    out = x / np.sqrt(q)[..., None]
    return out * np.sign(out[..., :1])


def project_tangent(x, w):
    """Orthogonal projection of ``w`` onto the tangent space at ``x``."""
    return w + mdot(x, w)[..., None] * x


def tangent_norm(v):
    return np.sqrt(np.maximum(mdot(v, v), 0.0))


def _clamped_acosh_arg(ip):
    ip = np.asarray(ip, dtype=float)
    if np.any(ip < 1.0 - CLAMP_TOL):
        raise NumericalHealthError(f"-<p,q> = {np.min(ip)!r} is below 1")
    return np.maximum(ip, 1.0)


def dist_array(x, y):
    """Distance between coordinate arrays (broadcasting)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ip = _clamped_acosh_arg(-mdot(x, y))
    diff = x - y
    # 2 asinh(|x - y| / 2) is well conditioned for nearby points
    chord = np.sqrt(np.maximum(mdot(diff, diff), 0.0))
    near = 2.0 * np.arcsinh(chord / 2.0)
    return np.where(ip < 2.0, near, np.arccosh(ip))


def unit_tangent_array(x, y):
    """Unit tangent at ``x`` toward ``y`` plus the distance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = dist_array(x, y)
    if np.any(d < DEGENERATE_DIST):
        raise DegenerateEndpointsError("endpoints coincide")
    diff = y - x
    v = diff + (1.0 + mdot(x, y))[..., None] * x
    v = project_tangent(x, v)
    return v / tangent_norm(v)[..., None], d


def exp_map(x, v):
    """Exponential map at ``x`` applied to tangent vector ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = tangent_norm(v)[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        shinc = np.where(n > 1e-300, np.sinh(n) / np.where(n > 0, n, 1.0), 1.0)
    return normalize_point(np.cosh(n) * x + shinc * v)


def log_map(x, y):
    """Inverse of ``exp_map``: the tangent at ``x`` reaching ``y`` in unit time."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = dist_array(x, y)
    if np.all(d < DEGENERATE_DIST):
        return np.zeros_like(x)
    u, d = unit_tangent_array(x, y)
    return u * d[..., None]


def boost_to(x):
    """Lorentz boost taking the origin to ``x``; columns 1..3 frame T_x."""
    x = np.asarray(x, dtype=float)
    xs = x[1:]
    b = np.empty((4, 4))
    b[0, 0] = x[0]
    b[0, 1:] = xs
    b[1:, 0] = xs
    b[1:, 1:] = np.eye(3) + np.outer(xs, xs) / (1.0 + x[0])
    return b


def tangent_frame(x):
    """Orthonormal basis (rows) of the tangent space at ``x``."""
    return boost_to(x)[:, 1:].T


ORIGIN = np.array([1.0, 0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# validated value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HPoint:
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(4)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if abs(mdot(x, x) + 1.0) > POINT_TOL * max(1.0, x[0] ** 2):
            raise GeometryError(f"not on the hyperboloid: <x,x> = {mdot(x, x)!r}")
        if x[0] <= 0:
            raise GeometryError("point on the lower sheet")

    @classmethod
    def origin(cls) -> HPoint:
        return cls(ORIGIN)

    @classmethod
    def from_coords(cls, x) -> HPoint:
        """Project an approximately-valid 4-vector onto the hyperboloid."""
        return cls(normalize_point(x))

    @classmethod
    def from_ball(cls, u) -> HPoint:
        """From Poincare ball coordinates (|u| < 1)."""
        u = np.asarray(u, dtype=float)
        r2 = float(u @ u)
        if r2 >= 1.0:
            raise GeometryError("outside the unit ball")
        return cls.from_coords(np.concatenate([[1.0 + r2], 2.0 * u]) / (1.0 - r2))

    @classmethod
    def from_upper_half_space(cls, z: complex, t: float) -> HPoint:
        """Point (z, t), t > 0, of the upper half-space model."""
        if t <= 0:
            raise GeometryError("height must be positive")
        a = (abs(z) ** 2 + t * t) / t
        d = 1.0 / t
        return cls.from_coords([(a + d) / 2.0, z.real / t, z.imag / t, (a - d) / 2.0])

    def to_upper_half_space(self) -> tuple[complex, float]:
        x0, x1, x2, x3 = self.x
        d = x0 - x3
        return complex(x1, x2) / d, 1.0 / d

    def __eq__(self, other):
        return isinstance(other, HPoint) and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash(self.x.tobytes())

    def __repr__(self):
        return "HPoint(" + ", ".join(f"{c:.6g}" for c in self.x) + ")"


@dataclass(frozen=True, eq=False)
class HTangent:
    base: HPoint
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(4)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        scale = max(1.0, self.base.x[0] ** 2)
        if abs(mdot(v, v) - 1.0) > POINT_TOL * scale:
            raise GeometryError("tangent is not unit length")
        if abs(mdot(self.base.x, v)) > POINT_TOL * scale:
            raise GeometryError("vector is not tangent at its base")


class Isometry:
    """Orientation-preserving isometry given by an SL(2, C) matrix."""

    __slots__ = ("m", "lorentz")

    def __init__(self, m, *, check: bool = True):
        m = np.array(m, dtype=complex).reshape(2, 2)
        det = np.linalg.det(m)
        if check and abs(det - 1.0) > POINT_TOL:
            raise GeometryError(f"determinant {det!r} is not 1")
        self.m = m
        self.m.setflags(write=False)
        self.lorentz = _sl2_to_so31(m)
        self.lorentz.setflags(write=False)
        if check:
            err = np.max(np.abs(self.lorentz.T @ _J @ self.lorentz - _J))
            if err > 1e-8 * max(1.0, self.lorentz[0, 0] ** 2):
                raise GeometryError("derived matrix does not preserve the Minkowski form")

    @classmethod
    def identity(cls) -> Isometry:
        return cls(np.eye(2))

    @classmethod
    def from_lorentz(cls, lam) -> Isometry:
        """Recover the SL(2, C) matrix (up to sign) from its SO+(3, 1) image."""
        return cls(_so31_to_sl2(np.asarray(lam, dtype=float)))

    @classmethod
    def loxodromic(cls, repel: complex, attract: complex, length: complex) -> Isometry:
        """Loxodromic with the given fixed points on C and complex length.

        ``length.real`` is the translation length, ``length.imag`` the rotation.
        """
        c = np.array([[attract, repel], [1.0, 1.0]], dtype=complex)
        s = cmath.exp(length / 2.0)
        m = c @ np.diag([s, 1.0 / s]) @ np.linalg.inv(c)
        return cls(m / cmath.sqrt(np.linalg.det(m)))

    def __call__(self, p):
        if isinstance(p, HPoint):
            return HPoint.from_coords(self.lorentz @ p.x)
        return np.asarray(p, dtype=float) @ self.lorentz.T

    def __matmul__(self, other: Isometry) -> Isometry:
        m = self.m @ other.m
        return Isometry(m / cmath.sqrt(np.linalg.det(m)))

    def inverse(self) -> Isometry:
        a, b, c, d = self.m.ravel()
        return Isometry([[d, -b], [-c, a]])

    def conjugate_by(self, h: Isometry) -> Isometry:
        """h g h^-1."""
        return h @ self @ h.inverse()

    @property
    def trace(self) -> complex:
        return complex(self.m[0, 0] + self.m[1, 1])

    def translation_length(self) -> float:
        return translation_length(self.m)

    def axis_point(self) -> HPoint:
        """A point on the axis of a loxodromic element."""
        w, vecs = np.linalg.eig(self.lorentz)
        i_max = int(np.argmax(np.abs(w)))
        i_min = int(np.argmin(np.abs(w)))
        if abs(abs(w[i_max]) - 1.0) < 1e-9:
            raise GeometryError("isometry is not loxodromic")
        lp = np.real(vecs[:, i_max])
        lm = np.real(vecs[:, i_min])
        lp = lp * np.sign(lp[0])
        lm = lm * np.sign(lm[0])
        return HPoint.from_coords(lp / math.sqrt(-2.0 * mdot(lp, lm)) + lm / math.sqrt(-2.0 * mdot(lp, lm)))

    def __repr__(self):
        return f"Isometry({self.m.tolist()!r})"


def _sl2_to_so31(m):
    # lambda_{mu nu} = 1/2 tr(sigma_mu A sigma_nu A^dagger)
    md = m.conj().T
    images = np.einsum("ij,njk,kl->nil", m, _SIGMA, md)
    lam = 0.5 * np.einsum("mij,nji->mn", _SIGMA, images)
    return np.ascontiguousarray(np.real(lam))


def _so31_to_sl2(lam):
    # sum_mu A sigma_mu A^dagger K sigma_mu = 2 tr(A^dagger K) A for any K
    images = np.einsum("nm,nij->mij", lam, _SIGMA)
    best = None
    for k in _SIGMA:
        m = np.einsum("mij,jk,mkl->il", images, k, _SIGMA)
        if best is None or np.linalg.norm(m) > np.linalg.norm(best):
            best = m
    return best / cmath.sqrt(np.linalg.det(best))


def translation_length(m) -> float:
    """Minimal displacement of an SL(2, C) element, from its trace."""
    tr = complex(m[0, 0] + m[1, 1])
    return abs(2.0 * cmath.acosh(tr / 2.0).real)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def dist(p: HPoint, q: HPoint) -> float:
    return float(dist_array(p.x, q.x))


def geodesic_point(p: HPoint, q: HPoint, t: float) -> HPoint:
    """Point at fraction ``t`` of the way from ``p`` to ``q``."""
    u, d = unit_tangent_array(p.x, q.x)
    if t == 1.0:
        return q
    return HPoint(exp_map(p.x, t * float(d) * u))


def tangent_toward(p: HPoint, q: HPoint) -> HTangent:
    u, _ = unit_tangent_array(p.x, q.x)
    return HTangent(p, u)


def angle_between(u: HTangent, w: HTangent) -> float:
    if u.base is not w.base and not np.allclose(u.base.x, w.base.x, atol=1e-12, rtol=1e-12):
        raise BaseMismatchError("tangents live at different points")
    return _clamped_acos(float(mdot(u.v, w.v)))


def _clamped_acos(c):
    c = np.asarray(c, dtype=float)
    if np.any(np.abs(c) > 1.0 + CLAMP_TOL):
        raise NumericalHealthError(f"cosine {c!r} out of range")
    out = np.arccos(np.clip(c, -1.0, 1.0))
    return float(out) if out.ndim == 0 else out


def _direction_gram(P: HPoint, Q) -> np.ndarray:
    coords = np.array([q.x for q in Q])
    try:
        tangents, _ = unit_tangent_array(np.broadcast_to(P.x, coords.shape), coords)
    except DegenerateEndpointsError as exc:
        raise CoincidentPointsError("a point coincides with the base point") from exc
    return tangents @ _J @ tangents.T


def cosine_sum(P: HPoint, Q) -> float:
    """Sum over pairs i < j of cos of the angle Q_i P Q_j."""
    if len(Q) < 2:
        raise ValueError("need at least two points")
    gram = _direction_gram(P, Q)
    iu = np.triu_indices(len(Q), k=1)
    return float(np.sum(gram[iu]))


def min_angle_pair(P: HPoint, Q) -> tuple[int, int, float]:
    """The pair of directions at ``P`` with the smallest angle between them."""
    if len(Q) < 4:
        raise ValueError("need at least four points")
    gram = _direction_gram(P, Q)
    iu = np.triu_indices(len(Q), k=1)
    k = int(np.argmax(gram[iu]))
    return int(iu[0][k]), int(iu[1][k]), _clamped_acos(gram[iu][k])
