"""The explicit lower bound on edge lengths of minimal carrier graphs.

For rank ``k >= 2`` and circuit bound ``r > 0``::

    m  : smallest grid value with (m - 2) / (2 (4k - 5)) > z
    l  = min(s0 / ((4k - 5) (m + 1)^(2k - 4)), r / (m + 1)^(3k - 4))

where ``z`` and ``s0`` come from the shortening constants at the
tetrahedral angle arccos(-1/3).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from carrier_forge.graph import MetricGraph, girth
from carrier_forge.hyperbolic import TETRAHEDRAL_ANGLE
from carrier_forge.shortening import ShorteningConstants, compute_constants

M_GRID = 1e-6
M_MARGIN = 1e-9
SLACK = 1e-12

VACUOUS = "vacuous"
CONSISTENT = "consistent"
VIOLATION = "VIOLATION"


class BoundDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundCertificate:
    k: int
    r: float
    constants: ShorteningConstants
    m: float
    l: float

    @property
    def branches(self) -> tuple[float, float]:
        k, m = self.k, self.m
        return (
            self.constants.s0 / ((4 * k - 5) * (m + 1) ** (2 * k - 4)),
            self.r / (m + 1) ** (3 * k - 4),
        )

    def checks(self) -> dict[str, bool]:
        """Re-derive every inequality of the chain from the stored numbers."""
        k, m, l, c = self.k, self.m, self.l, self.constants
        return {
            "m_large_enough": 0.5 * (m - 2.0) / (4 * k - 5) > c.z,
            "s0_branch": (4 * k - 5) * l * (m + 1) ** (2 * k - 4) <= c.s0 * (1.0 + SLACK),
            "r_branch": l * (m + 1) ** (3 * k - 4) <= self.r * (1.0 + SLACK),
            "l_is_min": math.isclose(l, min(self.branches), rel_tol=SLACK),
            "l_positive": l > 0,
            "constants": c.check(),
        }

    def verify(self) -> bool:
        return all(self.checks().values())

    def fields(self) -> dict[str, float]:
        c = self.constants
        return {"phi0": c.phi0, "y": c.y, "c0": c.c0, "z": c.z, "s0": c.s0, "m": self.m, "l": self.l}

    def to_json(self) -> str:
        body = {"k": str(self.k), "r": f"{self.r:.17g}"}
        body.update({key: f"{val:.17g}" for key, val in self.fields().items()})
        lines = [f'  "{key}": {val}' for key, val in body.items()]
        return "{\n" + ",\n".join(lines) + "\n}\n"

    @classmethod
    def from_json(cls, text: str) -> BoundCertificate:
        d = json.loads(text)
        c = ShorteningConstants(phi0=d["phi0"], y=d["y"], c0=d["c0"], z=d["z"], s0=d["s0"], grid_points=0)
        return cls(k=int(d["k"]), r=float(d["r"]), constants=c, m=float(d["m"]), l=float(d["l"]))


def choose_m(k: int, z: float) -> float:
    """Smallest m on a 1e-6 grid with (1/2)(m - 2)/(4k - 5) > z, plus a 1e-9 margin."""
    if k < 2 or z <= 0:
        raise BoundDomainError("need k >= 2 and z > 0")
    threshold = 2.0 + 2.0 * (4 * k - 5) * z
    m = math.ceil(threshold / M_GRID) * M_GRID
    while not 0.5 * (m - 2.0) / (4 * k - 5) > z:
        m += M_GRID
    return m + M_MARGIN


def compute_l(r: float, k: int, phi0: float = TETRAHEDRAL_ANGLE) -> BoundCertificate:
    if not isinstance(k, int) or k < 2:
        raise BoundDomainError("rank must be an integer k >= 2")
    if not r > 0:
        raise BoundDomainError("r must be positive")
    c = compute_constants(phi0)
    m = choose_m(k, c.z)
    # integer exponents keep (m+1)**0 == 1 exactly for k = 2
    l = min(c.s0 / ((4 * k - 5) * (m + 1) ** (2 * k - 4)), r / (m + 1) ** (3 * k - 4))
    cert = BoundCertificate(k=k, r=float(r), constants=c, m=m, l=l)
    if not cert.verify():
        raise AssertionError(f"certificate failed self-check: {cert.checks()}")
    return cert


def verify_theorem_instance(x: MetricGraph, cert: BoundCertificate) -> str:
    """Check 'all circuits longer than r implies all edges at least l' on one graph."""
    if x.rank != cert.k:
        raise BoundDomainError(f"graph rank {x.rank} != certificate rank {cert.k}")
    g, _ = girth(x)
    if g <= cert.r:
        return VACUOUS
    shortest = min(e.length for e in x.edges.values())
    return CONSISTENT if shortest >= cert.l else VIOLATION
