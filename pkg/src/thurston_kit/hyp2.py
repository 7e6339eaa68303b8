"""Upper half-plane hyperbolic geometry with closed-form formulas.

Points are ``HyperbolicPoint`` values (or plain complex numbers in the
vectorised helpers), isometries are sign-normalised SL(2, R) matrices, and
ideal points are real numbers or the tagged value ``INF``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

DEFAULT_TOL = 1e-10


class GeometryError(ValueError):
    """Base class for failed geometric constructions."""


class NotHyperbolicError(GeometryError):
    pass


class NoPerpendicularError(GeometryError):
    pass


class IllConditionedError(GeometryError):
    pass


class _PointAtInfinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_PointAtInfinity, ())


INF = _PointAtInfinity()

Ideal = Union[float, _PointAtInfinity]


def is_inf(x) -> bool:
    return x is INF


@dataclass(frozen=True)
class HyperbolicPoint:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise GeometryError(f"non-finite point ({self.re}, {self.im})")
        if not self.im > 0:
            raise GeometryError(f"point below the upper half-plane: im={self.im}")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, z: complex) -> "HyperbolicPoint":
        return cls(float(z.real), float(z.imag))


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving isometry, stored as a matrix of determinant one.

    Construct through :meth:`from_matrix`, which rescales to determinant one and
    picks the sign with non-negative trace.
    """

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_matrix(cls, m) -> "Isometry":
        a, b, c, d = (float(x) for x in np.asarray(m, dtype=float).ravel())
        det = a * d - b * c
        if not det > 0:
            raise IllConditionedError(f"matrix determinant {det} is not positive")
        s = math.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        tr = a + d
        if tr < 0 or (tr == 0 and next(x for x in (a, b, c, d) if x != 0) < 0):
            a, b, c, d = -a, -b, -c, -d
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def _signed(self) -> "Isometry":
        a, b, c, d = self.a, self.b, self.c, self.d
        tr = a + d
        if tr < 0 or (tr == 0 and next((x for x in (a, b, c, d) if x != 0), 1.0) < 0):
            return Isometry(-a, -b, -c, -d)
        return self

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a)._signed()

    def __matmul__(self, other: "Isometry") -> "Isometry":
        # determinants multiply, so no rescaling; recomputing det from large
        # entries would only inject cancellation error
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return Isometry(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)._signed()

    def act_ideal(self, x: Ideal) -> Ideal:
        """Image of a boundary point."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if is_inf(x):
            return INF if c == 0 else a / c
        den = c * x + d
        if den == 0:
            return INF
        return (a * x + b) / den


def translation(t: float) -> Isometry:
    """z -> z + t."""
    return Isometry(1.0, float(t), 0.0, 1.0)


def dilation(length: float) -> Isometry:
    """Hyperbolic translation by ``length`` along the imaginary axis."""
    h = math.exp(length / 2)
    return Isometry(h, 0.0, 0.0, 1 / h)


def rotation(theta: float, center: complex = 1j) -> Isometry:
    """Rotation by ``theta`` (counter-clockwise) about ``center``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    rot = Isometry.from_matrix([[c, s], [-s, c]])
    x, y = center.real, center.imag
    move = Isometry.from_matrix([[math.sqrt(y), x / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])
    return move @ rot @ move.inverse()


def distance(z1, z2):
    """Vectorised hyperbolic distance between complex points.

    Uses ``d = 2 asinh(|z1 - z2| / (2 sqrt(im z1 im z2)))``, which stays
    accurate for nearby points where the arccosh form loses all digits.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z1 - z2) / (2.0 * np.sqrt(z1.imag * z2.imag)))


def hyp_distance(p: HyperbolicPoint, q: HyperbolicPoint) -> float:
    return float(distance(p.z, q.z))


def mobius(m, z):
    """Vectorised Möbius action of a 2x2 real matrix (or Isometry) on complex points."""
    if isinstance(m, Isometry):
        a, b, c, d = m.a, m.b, m.c, m.d
    else:
        (a, b), (c, d) = np.asarray(m, dtype=float)
    z = np.asarray(z, dtype=complex)
    den = c * z + d
    w = (a * z + b) / den
    # imaginary part from det / |den|^2 keeps the sign exact
    im = (a * d - b * c) * z.imag / np.abs(den) ** 2
    return w.real + 1j * im


def apply_isometry(m: Isometry, p: HyperbolicPoint) -> HyperbolicPoint:
    with np.errstate(all="ignore"):
        w = complex(mobius(m, p.z))
    if not (math.isfinite(w.real) and math.isfinite(w.imag) and w.imag > 0):
        raise IllConditionedError(f"image {w} left the upper half-plane")
    return HyperbolicPoint(w.real, w.imag)


def translation_length(m: Isometry) -> float:
    tr = abs(m.trace)
    if tr <= 2.0:
        raise NotHyperbolicError(f"|trace| = {tr} <= 2")
    return 2.0 * math.acosh(tr / 2.0)


def fixed_points(m: Isometry) -> tuple:
    """(repelling, attracting) fixed points of a hyperbolic isometry."""
    a, b, c, d = m.a, m.b, m.c, m.d
    t = a + d
    if abs(t) <= 2.0:
        raise NotHyperbolicError(f"|trace| = {abs(t)} <= 2")
    s = 1.0 if t > 0 else -1.0
    disc = math.sqrt((abs(t) - 2.0) * (abs(t) + 2.0))
    if c == 0:
        finite = b / (d - a)
        # z -> (a z + b)/d: infinity attracts iff |a| > |d|
        return (finite, INF) if abs(a) > abs(d) else (INF, finite)
    # roots of c z^2 + (d - a) z - b = 0, the second one from the product -b/c
    q = ((a - d) + s * disc) / 2.0
    z_big = q / c
    z_small = -b / q if q != 0 else ((a - d) - s * disc) / (2.0 * c)
    # derivative of the action at z is 1/(c z + d)^2; attracting where |c z + d| > 1
    if abs(c * z_big + d) > 1.0:
        return (z_small, z_big)
    return (z_big, z_small)


@dataclass(frozen=True)
class Geodesic:
    start: Ideal
    end: Ideal

    def __post_init__(self):
        if is_inf(self.start) and is_inf(self.end):
            raise GeometryError("geodesic endpoints coincide")
        if not is_inf(self.start) and not is_inf(self.end) and self.start == self.end:
            raise GeometryError("geodesic endpoints coincide")

    def image(self, m: Isometry) -> "Geodesic":
        return Geodesic(m.act_ideal(self.start), m.act_ideal(self.end))

    def contains_ideal(self, x: Ideal) -> bool:
        return x is self.start or x is self.end or (
            not is_inf(x) and x in (self.start, self.end))


def axis(m: Isometry) -> Geodesic:
    rep, att = fixed_points(m)
    return Geodesic(rep, att)


@dataclass(frozen=True)
class Horocycle:
    """Horocycle at ``center``; ``size`` is the Euclidean diameter, or the height
    when the center is ``INF``."""

    center: Ideal
    size: float

    def __post_init__(self):
        if not self.size > 0:
            raise GeometryError("horocycle size must be positive")

    def contains(self, z, tol: float = DEFAULT_TOL) -> bool:
        """True when ``z`` lies inside or on the horoball."""
        if is_inf(self.center):
            return z.imag >= self.size - tol
        r = self.size / 2
        return abs(z - complex(self.center, r)) <= r + tol


def _diff(x: Ideal, y: Ideal):
    return None if is_inf(x) or is_inf(y) else x - y


def _product_ratio(pairs_num, pairs_den) -> float:
    """prod(x - y over pairs_num) / prod(x - y over pairs_den).

    A factor through INF is dropped and keeps only its sign: x - INF is -1
    and INF - y is +1.
    """
    num = 1.0
    den = 1.0
    for x, y in pairs_num:
        diff = _diff(x, y)
        num *= -1.0 if diff is None and is_inf(y) else (1.0 if diff is None else diff)
    for x, y in pairs_den:
        diff = _diff(x, y)
        den *= -1.0 if diff is None and is_inf(y) else (1.0 if diff is None else diff)
    if den == 0:
        return math.inf
    return num / den


def cross_ratio(a1: Ideal, a2: Ideal, b1: Ideal, b2: Ideal) -> float:
    """(a1 - b1)(a2 - b2) / ((a1 - b2)(a2 - b1)) with factors through INF dropped."""
    return _product_ratio(((a1, b1), (a2, b2)), ((a1, b2), (a2, b1)))


def perpendicular_from_cross_ratio(cr: float, gap: float) -> float:
    """2 atanh(sqrt cr) given the cross ratio and ``gap`` = 1 - cr formed
    without subtraction; cr > 1 is read through the other pairing."""
    if not cr > 0:
        raise NoPerpendicularError("geodesics cross")
    if cr > 1:
        cr, gap = 1 / cr, -gap / cr
    if not gap > 0:
        raise NoPerpendicularError("geodesics are asymptotic")
    return 2.0 * math.log1p(math.sqrt(cr)) - math.log(gap)


def common_perpendicular_length(g1: Geodesic, g2: Geodesic) -> float:
    """Distance between two disjoint, non-asymptotic geodesics.

    1 - cr is again a ratio of endpoint differences, so it is formed directly
    rather than by subtraction, which keeps long perpendiculars accurate.
    """
    ends = [g1.start, g1.end, g2.start, g2.end]
    finite = [x for x in ends if not is_inf(x)]
    if len(finite) != len(set(finite)) or sum(is_inf(x) for x in ends) > 1:
        raise NoPerpendicularError("geodesics share an ideal endpoint")
    a1, a2, b1, b2 = ends
    cr = cross_ratio(a1, a2, b1, b2)
    # 1 - cr = (a1 - a2)(b2 - b1) / ((a1 - b2)(a2 - b1))
    gap = _product_ratio(((a1, a2), (b2, b1)), ((a1, b2), (a2, b1)))
    return perpendicular_from_cross_ratio(cr, gap)


def hexagon_side(a1: float, a2: float, a3: float) -> float:
    """Side of a right-angled hexagon between alternate sides ``a1`` and ``a2``,
    opposite the third alternate side ``a3``."""
    if min(a1, a2, a3) <= 0:
        raise GeometryError("hexagon sides must be positive")
    ch = (math.cosh(a3) + math.cosh(a1) * math.cosh(a2)) / (math.sinh(a1) * math.sinh(a2))
    if ch < 1:
        raise GeometryError(f"no right-angled hexagon: cosh = {ch}")
    return math.acosh(ch)
