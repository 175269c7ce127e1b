"""Finitely generated Kleinian groups given by generator matrices."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from carrier_forge import words
from carrier_forge.hyperbolic import Isometry


@dataclass
class GroupPresentation:
    name: str
    generators: list[Isometry]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def ids(self) -> list[str]:
        return [words.letter(i) for i in range(self.rank)]

    def word_matrix(self, w: str) -> np.ndarray:
        """SO+(3,1) matrix of a word, cached."""
        w = words.reduce(w)
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        if not w:
            out = np.eye(4)
        elif len(w) == 1:
            i, e = words.letter_index(w)
            if i >= self.rank:
                raise ValueError(f"generator {w!r} out of range")
            g = self.generators[i]
            out = g.lorentz if e == 1 else g.inverse().lorentz
        else:
            out = self.word_matrix(w[:-1]) @ self.word_matrix(w[-1])
        self._cache[w] = out
        return out

    def word_isometry(self, w: str) -> Isometry:
        m = np.eye(2, dtype=complex)
        for ch in words.reduce(w):
            i, e = words.letter_index(ch)
            g = self.generators[i]
            m = m @ (g.m if e == 1 else g.inverse().m)
        return Isometry(m / cmath.sqrt(np.linalg.det(m)))

    def conjugate(self, h: Isometry) -> GroupPresentation:
        return GroupPresentation(self.name, [g.conjugate_by(h) for g in self.generators])

    def classify(self) -> list[str]:
        """Per-generator kind from the trace: loxodromic, parabolic, elliptic."""
        out = []
        for g in self.generators:
            tr = g.trace
            if abs(tr.imag) > 1e-12 or abs(tr.real) > 2.0 + 1e-12:
                out.append("loxodromic")
            elif abs(abs(tr.real) - 2.0) <= 1e-12:
                out.append("identity" if np.allclose(g.m, np.eye(2)) or np.allclose(g.m, -np.eye(2)) else "parabolic")
            else:
                out.append("elliptic")
        return out

    def validate(self) -> list[str]:
        problems = []
        for gid, kind in zip(self.ids, self.classify()):
            if kind in ("elliptic", "identity"):
                problems.append(f"generator {gid} is {kind}")
            elif kind == "parabolic":
                problems.append(f"generator {gid} is parabolic (allowed, flagged)")
        return problems

    def isometric_circles(self) -> list[tuple[complex, float]]:
        """Isometric circles of every generator and inverse (centre, radius)."""
        out = []
        for g in self.generators:
            a, b, c, d = g.m.ravel()
            if abs(c) < 1e-14:
                raise ValueError("generator fixes infinity; isometric circles undefined")
            r = 1.0 / abs(c)
            out.append((complex(-d / c), r))
            out.append((complex(a / c), r))
        return out

    def is_classical_schottky(self) -> bool:
        """Ping-pong certificate: the 2k isometric circles are pairwise disjoint.

        Each generator maps the outside of one of its circles onto the inside of
        the other, so disjoint circles make the group free and discrete.
        """
        circles = self.isometric_circles()
        for i in range(len(circles)):
            for j in range(i + 1, len(circles)):
                (z1, r1), (z2, r2) = circles[i], circles[j]
                if abs(z1 - z2) <= r1 + r2:
                    return False
        return True


def _rotated_translation(t: complex, theta: float) -> Isometry:
    """Complex length 2t along the geodesic from -exp(i theta) to exp(i theta)."""
    ch, sh = cmath.cosh(t), cmath.sinh(t)
    e = cmath.exp(1j * theta)
    return Isometry([[ch, e * sh], [sh / e, ch]])


def fuchsian_schottky(t: float = 1.2) -> GroupPresentation:
    """Two translations of length 2t along perpendicular axes through the origin."""
    return GroupPresentation("schottky2_fuchsian", [_rotated_translation(t, 0.0), _rotated_translation(t, math.pi / 2)])


def twisted_schottky(t: float = 1.3, twist: float = 0.4) -> GroupPresentation:
    """Like ``fuchsian_schottky`` but the second generator also rotates about its axis."""
    return GroupPresentation(
        "schottky2_twisted",
        [_rotated_translation(t, 0.0), _rotated_translation(complex(t, twist), math.pi / 2)],
    )


def rank3_schottky(t: float = 1.6) -> GroupPresentation:
    """Three translations whose axes are 60 degrees apart."""
    return GroupPresentation(
        "schottky3",
        [_rotated_translation(t, i * math.pi / 3) for i in range(3)],
    )


SHIPPED = ("schottky2_fuchsian", "schottky2_twisted", "schottky3")


def load_shipped(name: str) -> GroupPresentation:
    from carrier_forge.formats import read_group

    if name not in SHIPPED:
        raise KeyError(f"unknown shipped group {name!r}; choose from {SHIPPED}")
    text = resources.files("carrier_forge.data").joinpath(f"{name}.group").read_text()
    return read_group(text)
