"""Marked one-holed tori in trace coordinates.

A structure is the triple (u, v, w) of traces of the holonomies of the
slope-(1,0), slope-(0,1) and slope-(1,1) curves.  Simple closed curves are
indexed by slopes and enumerated along two Stern-Brocot trees, one for
p/q >= 0 and a mirror copy for p/q < 0.  Traces along the trees follow the
Fricke recursion tr(XY) = tr(X) tr(Y) - tr(X Y^-1), carried in log form so
that deep slopes on thin tori never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .hyp2 import (
    GeometryError,
    IllConditionedError,
    Isometry,
    axis,
    common_perpendicular_length,
    is_inf,
    perpendicular_from_cross_ratio,
    rotation,
)

LOG2 = math.log(2.0)


class StructureError(GeometryError):
    """Trace triple that is not a one-holed torus with geodesic or cusped boundary."""


@dataclass(frozen=True, order=True)
class Slope:
    """Primitive homology class (p, q), stored with q > 0, or as (1, 0)."""

    p: int
    q: int

    def __post_init__(self):
        p, q = int(self.p), int(self.q)
        if math.gcd(p, q) != 1:
            raise ValueError(f"slope ({p}, {q}) is not primitive")
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __iter__(self):
        return iter((self.p, self.q))

    def __str__(self):
        return f"({self.p},{self.q})"


@dataclass(frozen=True)
class TraceCoords:
    u: float
    v: float
    w: float

    def __post_init__(self):
        u, v, w = float(self.u), float(self.v), float(self.w)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)
        if not (u > 2 and v > 2 and w > 2) or not all(map(math.isfinite, (u, v, w))):
            raise StructureError(f"traces must exceed 2: {(u, v, w)}")
        if self.excess < -1e-9 * (u * v * w):
            raise StructureError(f"commutator trace {self.kappa} > -2")

    @property
    def excess(self) -> float:
        """-(kappa + 2) = uvw - u^2 - v^2 - w^2, which is 4 sinh^2(b/4)."""
        u, v, w = self.u, self.v, self.w
        return u * v * w - u * u - v * v - w * w

    @property
    def kappa(self) -> float:
        return -2.0 - self.excess

    def __str__(self):
        return f"trace:{self.u!r},{self.v!r},{self.w!r}"


@dataclass(frozen=True)
class FNCoords:
    length: float  # of the slope-(0,1) curve
    twist: float
    boundary: float

    def __post_init__(self):
        if not self.length > 0:
            raise StructureError("Fenchel-Nielsen length must be positive")
        if not self.boundary >= 0:
            raise StructureError("boundary length must be non-negative")


# -- lengths from traces -----------------------------------------------------------

def length_from_log_trace(log_t):
    """2 arccosh(t/2) evaluated from log t; vectorised."""
    delta = np.asarray(log_t, dtype=float) - LOG2
    with np.errstate(invalid="ignore"):
        out = 2.0 * (delta + np.log1p(np.sqrt(-np.expm1(-2.0 * delta))))
    if np.any(~(delta > 0)):
        raise StructureError("trace <= 2: degenerate structure")
    return out


def boundary_length(h: TraceCoords) -> float:
    x = max(h.excess, 0.0) / 2.0  # -kappa/2 = 1 + x
    return 2.0 * math.log1p(x + math.sqrt(x * (x + 2.0)))


def _log_mediant(l_left, l_right, l_diff):
    return l_left + l_right + np.log1p(-np.exp(l_diff - l_left - l_right))


# -- Stern-Brocot enumeration --------------------------------------------------------

@dataclass(frozen=True)
class SlopeTable:
    """All slopes to a given depth, ordered so every depth is a prefix.

    Order: (1,0), (0,1), then level by level the positive-branch nodes
    followed by the negative-branch nodes, each in Stern-Brocot order.
    """

    depth: int
    slopes: tuple
    level_end: tuple  # level_end[d] = number of slopes with depth <= d
    parents: tuple  # per level: (left, right, diff) local index arrays
    gather: np.ndarray  # global position -> index into concat(pos, neg) local traces

    def __len__(self):
        return len(self.slopes)

    def prefix(self, depth: int) -> int:
        return self.level_end[depth]


@lru_cache(maxsize=None)
def slope_table(depth: int) -> SlopeTable:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    # local index space per branch: 0 -> (0,1), 1 -> (+-1,0), 2 -> root diff
    local = [(0, 1), (1, 0), None]
    parents = []
    frontier = [(0, 1, 2)]
    for _ in range(depth + 1):
        left, right, diff, nxt = [], [], [], []
        for (L, R, D) in frontier:
            M = len(local)
            local.append((local[L][0] + local[R][0], local[L][1] + local[R][1]))
            left.append(L), right.append(R), diff.append(D)
            nxt.append((L, M, R))
            nxt.append((M, R, L))
        parents.append((np.array(left), np.array(right), np.array(diff)))
        frontier = nxt
    n_local = len(local)

    slopes = [Slope(1, 0), Slope(0, 1)]
    gather = [1, 0]
    level_end = []
    start = 3
    for lev in range(depth + 1):
        size = 2 ** lev
        for sign, offset in ((1, 0), (-1, n_local)):
            for i in range(start, start + size):
                p, q = local[i]
                slopes.append(Slope(sign * p, q))
                gather.append(offset + i)
        start += size
        level_end.append(len(slopes))
    return SlopeTable(depth, tuple(slopes), tuple(level_end), tuple(parents), np.array(gather))


def enumerate_slopes(depth: int) -> list:
    return list(slope_table(depth).slopes)


def _branch_log_traces(l_v, l_u, l_root_diff, l_root, table: SlopeTable) -> np.ndarray:
    n = 3 + 2 ** (table.depth + 1) - 1
    out = np.empty(n)
    # the root (+-1, 1) is a coordinate; recomputing it as uv - (uv -+ w)
    # would cancel when w is small against uv
    out[:4] = (l_v, l_u, l_root_diff, l_root)
    pos = 4
    for left, right, diff in table.parents[1:]:
        out[pos:pos + left.size] = _log_mediant(out[left], out[right], out[diff])
        pos += left.size
    return out


def log_traces(h: TraceCoords, table: SlopeTable) -> np.ndarray:
    """log of the trace of every slope in ``table``, in table order."""
    l_u, l_v, l_w = math.log(h.u), math.log(h.v), math.log(h.w)
    l_w_bar = math.log(h.u * h.v - h.w)  # slope (-1, 1)
    pos = _branch_log_traces(l_v, l_u, l_w_bar, l_w, table)
    neg = _branch_log_traces(l_v, l_u, l_w, l_w_bar, table)
    return np.concatenate([pos, neg])[table.gather]


def curve_lengths(h: TraceCoords, table: SlopeTable) -> np.ndarray:
    return length_from_log_trace(log_traces(h, table))


def arc_lengths_from_log_traces(h: TraceCoords, log_t) -> np.ndarray:
    """Orthogeodesic arc dual to each slope, from the right-angled pentagon
    cut out of the pair of pants: sinh(eta/2) = cosh(l/2) / sinh(b/4)."""
    if not h.excess > 0:
        raise StructureError("arcs need a geodesic boundary (b > 0)")
    log_y = np.asarray(log_t, dtype=float) - 0.5 * math.log(h.excess)
    small = log_y < 30.0
    out = np.empty_like(log_y)
    out[small] = 2.0 * np.arcsinh(np.exp(log_y[small]))
    out[~small] = 2.0 * (log_y[~small] + LOG2)
    return out


def arc_lengths(h: TraceCoords, table: SlopeTable) -> np.ndarray:
    return arc_lengths_from_log_traces(h, log_traces(h, table))


# -- single slopes ---------------------------------------------------------------------

def _descent(s: Slope) -> Iterator[str]:
    """Left/right moves from the Stern-Brocot root to |p|/q."""
    p, q = abs(s.p), s.q
    lp, lq, rp, rq = 0, 1, 1, 0
    while True:
        mp, mq = lp + rp, lq + rq
        if (mp, mq) == (p, q):
            return
        if p * mq < mp * q:
            yield "L"
            rp, rq = mp, mq
        else:
            yield "R"
            lp, lq = mp, mq


@lru_cache(maxsize=65536)
def slope_log_trace(h: TraceCoords, s: Slope) -> float:
    if s == Slope(1, 0):
        return math.log(h.u)
    if s == Slope(0, 1):
        return math.log(h.v)
    w_bar = h.u * h.v - h.w  # slope (-1, 1)
    root, root_diff = (h.w, w_bar) if s.p > 0 else (w_bar, h.w)
    L, R, D = math.log(h.v), math.log(h.u), math.log(root_diff)
    first = True
    for move in _descent(s):
        # the root is a coordinate, not a mediant to recompute
        M = math.log(root) if first else float(_log_mediant(L, R, D))
        first = False
        if move == "L":
            L, R, D = L, M, R
        else:
            L, R, D = M, R, L
    return math.log(root) if first else float(_log_mediant(L, R, D))


def slope_trace(h: TraceCoords, s: Slope) -> float:
    """Trace of the holonomy of the curve with slope ``s`` (inf on overflow)."""
    with np.errstate(over="ignore"):
        return float(np.exp(slope_log_trace(h, s)))


def curve_length(h: TraceCoords, s: Slope) -> float:
    return float(length_from_log_trace(slope_log_trace(h, s)))


# -- holonomy ---------------------------------------------------------------------------

def _diagonal_pair(t_diag: float, t_other: float, w: float) -> tuple:
    """D = diag(lam, 1/lam) of trace t_diag and G of trace t_other with
    tr(DG) = w, |G_12| = |G_21| and det G = 1 by construction."""
    lam = (t_diag + math.sqrt((t_diag - 2) * (t_diag + 2))) / 2
    a = (w - t_other / lam) / (lam - 1 / lam)
    d = t_other - a
    bc = a * d - 1
    off = math.sqrt(abs(bc))
    return Isometry(lam, 0.0, 0.0, 1 / lam), Isometry(a, off, math.copysign(off, bc), d)


def holonomy(h: TraceCoords, swap: bool = False) -> tuple:
    """(A, B) with tr A = u, tr B = v and tr AB = w.

    The generator with the larger trace is the diagonal one; this keeps the
    entries of the other near its trace and avoids cancellation in det = 1.
    ``swap`` diagonalises the other generator instead.
    """
    u, v, w = h.u, h.v, h.w
    if (u >= v) != swap:
        A, B = _diagonal_pair(u, v, w)
    else:
        B, A = _diagonal_pair(v, u, w)  # tr(BA) = tr(AB)
    tr_ab = A.a * B.a + A.b * B.c + A.c * B.b + A.d * B.d
    if not abs(tr_ab - w) <= 1e-9 * w:
        raise StructureError("no real holonomy for these traces")
    return A, B


def _words(A: Isometry, B: Isometry, s: Slope) -> tuple:
    if s == Slope(1, 0):
        return B, A
    if s == Slope(0, 1):
        return A, B
    left, right = B, (A if s.p > 0 else A.inverse())
    for move in _descent(s):
        mid = left @ right
        if move == "L":
            right = mid
        else:
            left = mid
    return left, left @ right


def slope_basis(h: TraceCoords, s: Slope) -> tuple:
    """Holonomies (X, Y) of a free basis with Y the curve of slope ``s``.

    Words are built along the Stern-Brocot descent with W(L + R) = W(L) W(R),
    so every (W(L), W(R)) is a Nielsen transform of (A, B) or (A^-1, B).
    """
    return _words(*holonomy(h), s)


def slope_matrix(h: TraceCoords, s: Slope) -> Isometry:
    return slope_basis(h, s)[1]


_SHADOW_FRAME = rotation(1.0)


def _arc_in_frame(h: TraceCoords, s: Slope, shadow: bool, max_rel_error: float) -> float:
    # the shadow uses the other section, conjugated before the words are
    # formed, so its rounding is independent
    A, B = holonomy(h, swap=shadow)
    if shadow:
        C = _SHADOW_FRAME
        A, B = C @ A @ C.inverse(), C @ B @ C.inverse()
    X, Y = _words(A, B, s)
    D = X @ Y @ X.inverse() @ Y.inverse()
    # the fixed points carry a relative error of at least eps * |D|; past
    # that, both frames can collapse onto the same wrong configuration
    size = max(abs(D.a), abs(D.b), abs(D.c), abs(D.d))
    if size * np.finfo(float).eps > max_rel_error:
        raise IllConditionedError(f"commutator entries reach {size:.3g}; matrix route unreliable")
    g = axis(D)
    a1, a2 = g.start, g.end
    dens = None if is_inf(a1) or is_inf(a2) else (Y.c * a1 + Y.d) * (Y.c * a2 + Y.d)
    if D.c == 0 or not dens:
        return common_perpendicular_length(g, g.image(Y))
    # the two axes can be tiny and close together; their own endpoint gaps
    # come from closed forms instead of subtraction
    tr = abs(D.trace)
    da = math.copysign(math.sqrt((tr - 2) * (tr + 2)) / abs(D.c), a1 - a2)
    db = Y.det * da / dens
    b1, b2 = Y.act_ideal(a1), Y.act_ideal(a2)
    cr = (a1 - b1) * (a2 - b2) / ((a1 - b2) * (a2 - b1))
    gap = -da * db / ((a1 - b2) * (a2 - b1))
    return perpendicular_from_cross_ratio(cr, gap)


def arc_length(h: TraceCoords, s: Slope, max_rel_error: float = 1e-6) -> float:
    """Orthogeodesic arc disjoint from the curve of slope ``s``.

    With (X, Y) a basis and Y the curve, [X, Y] is a boundary holonomy whose
    axis is adjacent to the axis of Y; the arc lifts to the common
    perpendicular between that axis and its translate by Y.

    The value is recomputed from a second, conjugate holonomy, where it is the
    same number up to rounding; IllConditionedError is raised when the two
    disagree by more than ``max_rel_error / 16``.  ``arc_lengths`` is the
    closed-form route.
    """
    try:
        eta = _arc_in_frame(h, s, False, max_rel_error)
        shadow = _arc_in_frame(h, s, True, max_rel_error)
    except IllConditionedError:
        raise
    except GeometryError as exc:
        # crossing or asymptotic lifts only arise from rounding here
        raise IllConditionedError(f"matrix route unstable for slope {s}: {exc}") from exc
    # the two evaluations share part of their error, hence the margin
    if abs(eta - shadow) > max_rel_error * eta / 16:
        raise IllConditionedError(
            f"matrix route unstable for slope {s}: {eta!r} vs {shadow!r} in a conjugate frame")
    return eta


def christoffel_word(s: Slope) -> str:
    """Cutting-sequence word of slope s in letters a (=A), b (=B), and
    ``A`` for A^-1 on the negative branch."""
    p, q = abs(s.p), s.q
    n = p + q
    a_letter = "a" if s.p >= 0 else "A"
    return "".join("b" if (i * q) // n > ((i - 1) * q) // n else a_letter for i in range(1, n + 1))


# -- constructors -----------------------------------------------------------------------

def from_fenchel_nielsen(fn: FNCoords) -> TraceCoords:
    """Structure with the slope-(0,1) curve of length ``fn.length`` and the
    given boundary; twist 0 is the reflection-symmetric gluing and a full
    Dehn twist about (0,1) adds ``fn.length`` to the twist."""
    half = fn.length / 2
    scale = 2.0 * math.hypot(math.sinh(fn.boundary / 4), math.cosh(half)) / math.sinh(half)
    return TraceCoords(scale * math.cosh(fn.twist / 2),
                       2.0 * math.cosh(half),
                       scale * math.cosh((fn.twist + fn.length) / 2))


def to_fenchel_nielsen(h: TraceCoords) -> FNCoords:
    u, v, w = h.u, h.v, h.w
    length = curve_length(h, Slope(0, 1))
    twist = 2.0 * math.asinh((2 * w - u * v) / (2.0 * math.sqrt(max(h.excess, 0.0) + v * v)))
    return FNCoords(length, twist, boundary_length(h))


def from_doubled_hexagons(X: float, variant: int) -> TraceCoords:
    """Double the right-angled hexagon with alternate sides 2 arccosh(X^4),
    asinh(X^e), asinh(X^e) (e = 2 for variant 0, 3 for variant 1) and glue
    the equal cuffs with no twist."""
    if not X > 1:
        raise ValueError("X must exceed 1")
    if variant not in (0, 1):
        raise ValueError("variant must be 0 or 1")
    e = 2 if variant == 0 else 3
    return from_fenchel_nielsen(FNCoords(2.0 * math.asinh(X ** e), 0.0, 4.0 * math.acosh(X ** 4)))


def square_torus(b: float) -> TraceCoords:
    """Zero-twist structure with u = v, so slopes (p, q) and (q, p) have equal length."""
    half = math.acosh(math.sqrt(1.0 + math.cosh(b / 4)))
    return from_fenchel_nielsen(FNCoords(2.0 * half, 0.0, b))


def thin_length_approx(s: Slope, length_a: float, length_b: float) -> float:
    return abs(s.p) * length_a + abs(s.q) * length_b


# -- change of marking ------------------------------------------------------------------

def _column_moves(M) -> tuple:
    """Signed permutation P and column moves E_1..E_k with M = P E_1 ... E_k.

    A move is (target column, +-1): add +-(other column) to the target.
    """
    (a, b), (c, d) = M
    cols = [[a, c], [b, d]]
    undo = []

    def move(i, sgn):
        j = 1 - i
        cols[i][0] -= sgn * cols[j][0]
        cols[i][1] -= sgn * cols[j][1]
        undo.append((i, sgn))

    # Euclid on the first row, then clear the remaining off-diagonal entry
    while cols[0][0] != 0 and cols[1][0] != 0:
        i = 0 if abs(cols[0][0]) >= abs(cols[1][0]) else 1
        move(i, 1 if (cols[0][0] > 0) == (cols[1][0] > 0) else -1)
    i = 0 if cols[0][0] != 0 else 1  # the column still to clear, in row 1
    while cols[i][1] != 0 and cols[1 - i][1] != 0:
        move(i, 1 if (cols[i][1] > 0) == (cols[1 - i][1] > 0) else -1)
    return cols, tuple(reversed(undo))


def remark(h: TraceCoords, M, excess: float | None = None) -> TraceCoords:
    """Structure whose slope x has the length of slope M x in ``h``.

    ``M`` is an integer matrix of determinant +-1 given by its columns, the
    images of (1,0) and (0,1).  ``excess`` overrides the value the triple
    determines, for callers that know the boundary more accurately.
    """
    (a, b), (c, d) = M
    if abs(a * d - b * c) != 1:
        raise ValueError("marking change must be unimodular")
    if (a, b, c, d) == (1, 0, 0, 1):
        return h
    E = max(h.excess if excess is None else excess, 0.0)

    def other(x, y, z):
        # second root of t^2 - xy t + (x^2 + y^2 + E) = 0; a quotient of
        # positive terms, so it never cancels the way xy - z can
        return (x * x + y * y + E) / z

    # the triple is (tr alpha, tr beta, tr alpha+beta) for a basis (alpha, beta)
    # of columns; start from the signed permutation and replay the moves
    P, moves = _column_moves(M)
    x, y, z = h.u, h.v, h.w
    if P[0][0] == 0:  # columns are +-e2, +-e1
        x, y = y, x
    signs = P[0][0] + P[0][1], P[1][0] + P[1][1]
    if signs[0] != signs[1]:
        z = other(x, y, z)
    for i, sgn in moves:
        if i == 1 and sgn > 0:  # (alpha, beta + alpha)
            x, y, z = x, z, other(x, z, y)
        elif i == 1:  # (alpha, beta - alpha)
            x, y, z = x, other(x, y, z), y
        elif sgn > 0:  # (alpha + beta, beta)
            x, y, z = z, y, other(z, y, x)
        else:  # (alpha - beta, beta)
            x, y, z = other(x, y, z), y, x
    if excess is not None:
        x, y, z = _fit_excess((x, y, z), E)
    return TraceCoords(x, y, z)


def _fit_excess(t: tuple, E: float) -> tuple:
    """Re-solve the best-conditioned coordinate so the triple has excess E.

    The moves keep the product of the two roots of each quadratic exact but
    not their sum, so a start triple that only carries E to rounding passes
    that error on; the root with the largest slack |t_j t_k - 2 t_i| absorbs
    it with the smallest change.
    """
    t = list(t)
    i = max(range(3), key=lambda i: abs(t[i - 1] * t[i - 2] - 2.0 * t[i]) / t[i])
    P = t[i - 1] * t[i - 2]
    C = t[i - 1] ** 2 + t[i - 2] ** 2 + E
    disc = P * P - 4.0 * C
    if disc < 0:
        return tuple(t)
    big = 0.5 * (P + math.sqrt(disc))
    t[i] = min((big, C / big), key=lambda r: abs(r - t[i]))
    return tuple(t)


def basis_for(s: Slope) -> tuple:
    """Unimodular M with M (0,1) = s, first column a Farey neighbour of s."""
    p, q = s.p, s.q
    if (p, q) == (0, 1):
        return ((1, 0), (0, 1))
    # r_p q - r_q p = 1 via the extended Euclidean algorithm
    g, x, y = _egcd(q, -p)
    return ((x, p), (y, q)) if g == 1 else ((-x, p), (-y, q))


def inverse_marking(M) -> tuple:
    (a, b), (c, d) = M
    det = a * d - b * c
    return ((d * det, -b * det), (-c * det, a * det))


def _egcd(a, b):
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def dehn_twist(h: TraceCoords) -> TraceCoords:
    """Full positive Dehn twist about the slope-(0,1) curve."""
    return TraceCoords(h.w, h.v, h.v * h.w - h.u)


# -- text literals ------------------------------------------------------------------------

def parse_structure(text: str) -> TraceCoords:
    """Parse ``trace:u,v,w``, ``fn:l,tau,b`` or ``hex:X,variant``."""
    kind, _, body = text.strip().partition(":")
    try:
        vals = [float(x) for x in body.split(",")]
    except ValueError as exc:
        raise ValueError(f"bad structure literal {text!r}") from exc
    if kind == "trace" and len(vals) == 3:
        return TraceCoords(*vals)
    if kind == "fn" and len(vals) == 3:
        return from_fenchel_nielsen(FNCoords(*vals))
    if kind == "hex" and len(vals) == 2 and vals[1] in (0.0, 1.0):
        return from_doubled_hexagons(vals[0], int(vals[1]))
    raise ValueError(f"bad structure literal {text!r}")


def parse_slope(text: str) -> Slope:
    p, q = (int(x) for x in text.strip().strip("()").split(","))
    return Slope(p, q)
