"""Ideal Saccheri quadrilaterals, their partial horocyclic foliations and
k-expansion maps.

Canonical placement: the symmetry axis is the imaginary axis, the ideal
vertices are C = +1 and D = -1, side CD is the unit half-circle and side AB
lies on the half-circle |z| = R with ``sinh(a/2) * sinh(log R) = 1``.  The
full geodesics through AD and BC have endpoints (-R^2, -1) and (1, R^2).

Each cusp has a strip chart.  For C it is ``w = 2/(1 - z)``: the cusp goes to
infinity, horocycles at C become horizontal lines, the extreme leaf is the
line Im w = 1, CD becomes Re w = 1 and BC becomes Re w = -2/(R^2 - 1).  The
chart for D is the same after the reflection z -> -conj(z).  In a strip chart
the k-expansion map is ``(x, y) -> (x, y**k)`` for y >= 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hyp2 import (
    INF,
    Geodesic,
    GeometryError,
    HyperbolicPoint,
    Horocycle,
    distance,
)

CRITICAL_BASE = 2.0 * math.asinh(1.0)

CUSP_C = "C"
CUSP_D = "D"
CUSP_INF = "inf"  # third cusp, only on the ideal-triangle limit

INFINITESIMAL_OFFSET = 1e-6


class DomainError(GeometryError):
    """Point outside the domain of an expansion map."""


class FoliationCase(enum.Enum):
    SHORT = "Short"
    CRITICAL = "Critical"
    LONG = "Long"


@dataclass(frozen=True)
class IdealSaccheriQuad:
    base_length: float
    radius: float  # Euclidean radius of the half-circle carrying AB; inf for the triangle limit

    @property
    def is_triangle(self) -> bool:
        return math.isinf(self.radius)

    @property
    def A(self) -> HyperbolicPoint:
        return HyperbolicPoint(-self.B.re, self.B.im)

    @property
    def B(self) -> HyperbolicPoint:
        if self.is_triangle:
            raise GeometryError("the ideal triangle has no base")
        r2 = self.radius ** 2
        return HyperbolicPoint(2 * r2 / (r2 + 1), self.radius * (r2 - 1) / (r2 + 1))

    C = 1.0
    D = -1.0

    @property
    def side_ab(self) -> Geodesic:
        return Geodesic(-self.radius, self.radius)

    @property
    def side_cd(self) -> Geodesic:
        return Geodesic(-1.0, 1.0)

    @property
    def side_ad(self) -> Geodesic:
        return Geodesic(INF if self.is_triangle else -self.radius ** 2, -1.0)

    @property
    def side_bc(self) -> Geodesic:
        return Geodesic(1.0, INF if self.is_triangle else self.radius ** 2)

    def _inside_sides(self, z, tol):
        z = np.asarray(z, dtype=complex)
        ok = (np.abs(z) >= 1 - tol) & (z.imag > 0)
        if self.is_triangle:
            return ok & (np.abs(z.real) <= 1 + tol)
        r2 = self.radius ** 2
        c, rho = (r2 + 1) / 2, (r2 - 1) / 2
        return ok & (np.abs(z + c) >= rho - tol) & (np.abs(z - c) >= rho - tol)

    def contains(self, z, tol: float = 1e-12):
        """Membership in the (non-extended) quadrilateral; vectorised."""
        ok = self._inside_sides(z, tol)
        if not self.is_triangle:
            ok = ok & (np.abs(np.asarray(z, dtype=complex)) <= self.radius + tol)
        return ok


def build_quad(a: float) -> IdealSaccheriQuad:
    if not a > 0:
        raise GeometryError(f"base length must be positive, got {a}")
    delta = math.asinh(1.0 / math.sinh(a / 2))
    return IdealSaccheriQuad(float(a), math.exp(delta))


def ideal_triangle() -> IdealSaccheriQuad:
    """The a -> 0 limit, an ideal triangle with vertices -1, 1, infinity.

    Only used to compare with the classical ideal-triangle expansion map.
    """
    return IdealSaccheriQuad(0.0, math.inf)


def classify(q: IdealSaccheriQuad, rel_tol: float = 1e-12) -> FoliationCase:
    if math.isclose(q.base_length, CRITICAL_BASE, rel_tol=rel_tol):
        return FoliationCase.CRITICAL
    return FoliationCase.SHORT if q.base_length < CRITICAL_BASE else FoliationCase.LONG


@dataclass(frozen=True)
class ExtendedDomain:
    """Convex domain bounded by CD and the full geodesics through AD and BC."""

    quad: IdealSaccheriQuad

    def contains(self, z, tol: float = 1e-12):
        return self.quad._inside_sides(z, tol)


def extend_quad(q: IdealSaccheriQuad) -> ExtendedDomain:
    return ExtendedDomain(q)


# -- strip charts --------------------------------------------------------------

def to_chart(cusp: str, z):
    z = np.asarray(z, dtype=complex)
    if cusp == CUSP_C:
        return 2.0 / (1.0 - z)
    if cusp == CUSP_D:
        return 2.0 / (1.0 + np.conj(z))
    if cusp == CUSP_INF:
        return z / 2.0
    raise ValueError(f"unknown cusp {cusp!r}")


def from_chart(cusp: str, w):
    w = np.asarray(w, dtype=complex)
    if cusp == CUSP_C:
        return 1.0 - 2.0 / w
    if cusp == CUSP_D:
        return -1.0 + 2.0 / np.conj(w)
    if cusp == CUSP_INF:
        return 2.0 * w
    raise ValueError(f"unknown cusp {cusp!r}")


@dataclass(frozen=True)
class PartialFoliation:
    quad: IdealSaccheriQuad
    anchor: HyperbolicPoint
    extreme_leaves: tuple
    strip: tuple  # (x of the far side, x of CD) in either side chart

    @property
    def cusps(self) -> tuple:
        return (CUSP_C, CUSP_D, CUSP_INF) if self.quad.is_triangle else (CUSP_C, CUSP_D)

    def chart_strip(self, cusp: str) -> tuple:
        return (-0.5, 0.5) if cusp == CUSP_INF else self.strip

    def in_cusp(self, cusp: str, z):
        """Mask of points in the foliated region of ``cusp`` (extended domain)."""
        w = to_chart(cusp, z)
        lo, hi = self.chart_strip(cusp)
        tol = 1e-12
        return (w.imag >= 1.0) & (w.real >= lo - tol) & (w.real <= hi + tol)

    def leaf_coords(self, p: HyperbolicPoint) -> Optional[tuple]:
        """(cusp, d, s) of a foliated point, or None on the unfoliated region.

        ``d`` is the distance from the unfoliated region and ``s`` the arclength
        along the leaf measured from its endpoint on CD.
        """
        for cusp in self.cusps:
            if bool(self.in_cusp(cusp, p.z)):
                w = complex(to_chart(cusp, p.z))
                _, hi = self.chart_strip(cusp)
                return cusp, math.log(w.imag), (hi - w.real) / w.imag
        return None

    def from_leaf_coords(self, cusp: str, d: float, s: float) -> HyperbolicPoint:
        if d < 0:
            raise DomainError("leaf distance must be non-negative")
        y = math.exp(d)
        _, hi = self.chart_strip(cusp)
        return HyperbolicPoint.from_complex(complex(from_chart(cusp, complex(hi - s * y, y))))

    def leaf_length(self, cusp: str, d: float) -> float:
        lo, hi = self.chart_strip(cusp)
        return (hi - lo) * math.exp(-d)


def foliate(q: IdealSaccheriQuad) -> PartialFoliation:
    # equal horocycles at +-1 through i are tangent there
    leaves = (Horocycle(q.C, 2.0), Horocycle(q.D, 2.0))
    if q.is_triangle:
        # the leaf at infinity passes through the foot -1 + 2i of the
        # perpendicular from C, so all three extreme leaves are tangent
        leaves = leaves + (Horocycle(INF, 2.0),)
        strip = (0.0, 1.0)
    else:
        strip = (-2.0 / (q.radius ** 2 - 1.0), 1.0)
    return PartialFoliation(q, HyperbolicPoint(0.0, 1.0), leaves, strip)


# -- expansion maps -------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionMap:
    k: float
    quad: IdealSaccheriQuad
    foliation: PartialFoliation = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.k >= 1:
            raise GeometryError(f"expansion factor must be >= 1, got {self.k}")
        object.__setattr__(self, "foliation", foliate(self.quad))

    @property
    def case(self) -> FoliationCase:
        return classify(self.quad)

    @property
    def extended(self) -> bool:
        return self.case is FoliationCase.LONG

    def in_domain(self, z):
        if self.extended or self.quad.is_triangle:
            return extend_quad(self.quad).contains(z)
        return self.quad.contains(z)

    def apply_array(self, z, check: bool = True):
        """Vectorised map on canonical complex coordinates."""
        z = np.asarray(z, dtype=complex)
        if check and not np.all(self.in_domain(z)):
            raise DomainError("point outside the expansion-map domain")
        out = z.copy()
        if self.k == 1:
            return out
        for cusp in self.foliation.cusps:
            mask = self.foliation.in_cusp(cusp, z)
            if np.any(mask):
                w = to_chart(cusp, z[mask])
                out[mask] = from_chart(cusp, w.real + 1j * w.imag ** self.k)
        return out

    def apply_in_chart(self, cusp: str, w):
        """Vectorised map written in the strip chart of ``cusp``."""
        w = np.asarray(w, dtype=complex)
        lo, hi = self.foliation.chart_strip(cusp)
        own = (w.imag >= 1.0) & (w.real >= lo) & (w.real <= hi)
        out = np.empty_like(w)
        out[own] = w[own].real + 1j * w[own].imag ** self.k
        if np.any(~own):
            out[~own] = to_chart(cusp, self.apply_array(from_chart(cusp, w[~own]), check=False))
        return out


def expansion_apply(m: ExpansionMap, p: HyperbolicPoint) -> HyperbolicPoint:
    return HyperbolicPoint.from_complex(complex(m.apply_array(p.z)))


def sample_domain(m: ExpansionMap, n: int, rng: np.random.Generator):
    """Points of the map's domain, about half of them in the cusp regions.

    Returns ``(z, cusp_index)`` where ``cusp_index`` is -1 for points drawn
    from the unfoliated part and otherwise indexes ``m.foliation.cusps``.
    """
    fol = m.foliation
    cusps = fol.cusps
    n_cusp = n // 2
    which = rng.integers(0, len(cusps), n_cusp)
    z_cusp = np.empty(n_cusp, dtype=complex)
    for i, cusp in enumerate(cusps):
        sel = which == i
        lo, hi = fol.chart_strip(cusp)
        x = rng.uniform(lo, hi, sel.sum())
        y = np.exp(rng.uniform(0.0, 3.0, sel.sum()))
        z_cusp[sel] = from_chart(cusp, x + 1j * y)

    q = m.quad
    span = 2.0 if q.is_triangle else (q.radius ** 2 + 1.0 if m.extended else q.radius)
    top = 8.0 if q.is_triangle else (4.0 * q.radius if m.extended else q.radius)
    rest = []
    need = n - n_cusp
    while need > 0:
        batch = max(4 * need, 64)
        z = rng.uniform(-span, span, batch) + 1j * np.exp(rng.uniform(math.log(1e-2), math.log(top), batch))
        ok = m.in_domain(z)
        for cusp in cusps:
            ok &= ~fol.in_cusp(cusp, z)
        z = z[ok][:need]
        rest.append(z)
        need -= z.size
    z_free = np.concatenate(rest) if rest else np.empty(0, dtype=complex)
    z_all = np.concatenate([z_cusp, z_free])
    idx = np.concatenate([which, -np.ones(z_free.size, dtype=int)])
    return z_all, idx


def lipschitz_ratios(m: ExpansionMap, n_pairs: int, seed: int,
                     offset: float = INFINITESIMAL_OFFSET) -> np.ndarray:
    """Distance ratios d(f p, f q) / d(p, q) over sampled pairs.

    Half the pairs are global (two independent domain points); the other half
    are infinitesimal pairs p -/+ offset/2 in a random direction, taken in the
    strip chart for cusp points and in canonical coordinates otherwise.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    n_global = (n_pairs + 1) // 2
    n_local = n_pairs - n_global

    z1, _ = sample_domain(m, n_global, rng)
    z2, _ = sample_domain(m, n_global, rng)
    z2 = z2[rng.permutation(z2.size)]
    d0 = distance(z1, z2)
    keep = d0 > 0
    ratios = [distance(m.apply_array(z1[keep]), m.apply_array(z2[keep])) / d0[keep]]

    if n_local:
        base, idx = sample_domain(m, n_local, rng)
        theta = rng.uniform(0.0, 2 * math.pi, n_local)
        step = 0.5 * offset * np.exp(1j * theta)
        for i, cusp in enumerate(m.foliation.cusps):
            sel = idx == i
            w = to_chart(cusp, base[sel])
            w1, w2 = w - step[sel], w + step[sel]
            ok = m.in_domain(from_chart(cusp, w1)) & m.in_domain(from_chart(cusp, w2))
            w1, w2 = w1[ok], w2[ok]
            ratios.append(distance(m.apply_in_chart(cusp, w1), m.apply_in_chart(cusp, w2))
                          / distance(w1, w2))
        sel = idx == -1
        p1, p2 = base[sel] - step[sel], base[sel] + step[sel]
        ok = m.in_domain(p1) & m.in_domain(p2)
        p1, p2 = p1[ok], p2[ok]
        ratios.append(distance(m.apply_array(p1), m.apply_array(p2)) / distance(p1, p2))
    return np.concatenate(ratios)


def lipschitz_estimate(m: ExpansionMap, n_pairs: int, seed: int) -> float:
    return float(np.max(lipschitz_ratios(m, n_pairs, seed)))


def composition_residual(quad: IdealSaccheriQuad, k1: float, k2: float,
                         n_points: int, seed: int) -> float:
    """max over sampled p of d(f_k2(f_k1(p)), f_{k1 k2}(p))."""
    rng = np.random.default_rng(seed)
    f1, f2, f12 = ExpansionMap(k1, quad), ExpansionMap(k2, quad), ExpansionMap(k1 * k2, quad)
    z, _ = sample_domain(f12, n_points, rng)
    return float(np.max(distance(f2.apply_array(f1.apply_array(z), check=False), f12.apply_array(z))))
