"""Curve and arc metrics on the one-holed torus, and stretch paths found by search.

K(h0, h1) is the sup over simple closed curves of log(l1 / l0); A takes the
same sup over curves together with orthogeodesic boundary arcs.  Both are
truncated to slopes in the Stern-Brocot trees of a given depth, and every
result carries its running maximum per depth so convergence is visible.

A partial stretch path along slope s is realised without surgery: after a
change of marking taking s to (0, 1), the structures with the s-length
multiplied by e^t and the boundary fixed form a line parametrised by twist.
On that line K(h0, .) >= t, with equality on an interval whose two endpoints
are the stretch paths along the two maximal laminations extending s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .torus import (
    FNCoords,
    Slope,
    TraceCoords,
    arc_lengths_from_log_traces,
    basis_for,
    boundary_length,
    curve_length,
    from_fenchel_nielsen,
    inverse_marking,
    length_from_log_trace,
    log_traces,
    remark,
    slope_table,
    to_fenchel_nielsen,
)

BOUNDARY_TOL = 1e-9
TIE_TOL = 1e-10
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BoundaryMismatchError(ValueError):
    """The two structures lie in different slices of fixed boundary length."""


class InsufficientDepthError(RuntimeError):
    """The truncated sup is still above t on the whole twist line."""


# -- suprema -------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricResult:
    value: float
    argmax_slope: Slope
    depth: int
    history: tuple
    kind: str = "curve"  # which family attains the sup: "curve" or "arc"

    @property
    def ratio(self) -> float:
        return math.exp(self.value)

    def to_record(self) -> dict:
        return {
            "value": self.value,
            "argmax": [self.argmax_slope.p, self.argmax_slope.q],
            "depth": self.depth,
            "history": list(self.history),
        }


def _check_boundary(h0: TraceCoords, h1: TraceCoords) -> float:
    b0, b1 = boundary_length(h0), boundary_length(h1)
    if abs(b0 - b1) > BOUNDARY_TOL * max(1.0, b0):
        raise BoundaryMismatchError(f"boundary lengths differ: {b0!r} vs {b1!r}")
    return b0


def _argmax(values: np.ndarray, slopes) -> int:
    """First index of the max, ties broken toward the lexicographically least slope."""
    best = values.max()
    hits = np.flatnonzero(values == best)
    return int(min(hits, key=lambda i: (slopes[i].p, slopes[i].q)))


def _sup(ratios: np.ndarray, table, depth: int) -> MetricResult:
    running = np.maximum.accumulate(ratios)
    history = tuple(float(running[table.prefix(d) - 1]) for d in range(depth + 1))
    i = _argmax(ratios, table.slopes)
    return MetricResult(float(ratios[i]), table.slopes[i], depth, history)


class _CurveSup:
    """K(h0, .) at fixed depth with the h0 lengths computed once."""

    def __init__(self, h0: TraceCoords, depth: int):
        self.h0 = h0
        self.depth = depth
        self.table = slope_table(depth)
        self.log_l0 = np.log(length_from_log_trace(log_traces(h0, self.table)))

    def ratios(self, h1: TraceCoords) -> np.ndarray:
        return np.log(length_from_log_trace(log_traces(h1, self.table))) - self.log_l0

    def __call__(self, h1: TraceCoords) -> MetricResult:
        _check_boundary(self.h0, h1)
        return _sup(self.ratios(h1), self.table, self.depth)

    def value(self, h1: TraceCoords) -> float:
        return float(self.ratios(h1).max())


def curve_ratio(h0: TraceCoords, h1: TraceCoords, s: Slope) -> float:
    return math.log(curve_length(h1, s) / curve_length(h0, s))


def curve_metric(h0: TraceCoords, h1: TraceCoords, depth: int = 10) -> MetricResult:
    return _CurveSup(h0, depth)(h1)


def arc_metric(h0: TraceCoords, h1: TraceCoords, depth: int = 10) -> MetricResult:
    """Sup of log length ratios over curves and boundary arcs.

    Arc classes are indexed by the slope of the curve they miss.  Curves are
    part of the competitor family, so A >= K holds exactly at equal depth; in
    the regime where the two agree the arc ratios only reach K in the limit.
    """
    _check_boundary(h0, h1)
    table = slope_table(depth)
    lt0, lt1 = log_traces(h0, table), log_traces(h1, table)
    curves = np.log(length_from_log_trace(lt1)) - np.log(length_from_log_trace(lt0))
    arcs = (np.log(arc_lengths_from_log_traces(h1, lt1))
            - np.log(arc_lengths_from_log_traces(h0, lt0)))
    best_curve = _sup(curves, table, depth)
    best_arc = _sup(arcs, table, depth)
    history = tuple(max(c, a) for c, a in zip(best_curve.history, best_arc.history))
    # on an exact tie the curve wins, then the usual slope order
    win = best_arc if best_arc.value > best_curve.value else best_curve
    return MetricResult(win.value, win.argmax_slope, depth, history,
                        "arc" if win is best_arc else "curve")


@dataclass(frozen=True)
class SlopeReport:
    slope: Slope
    stable: bool
    argmax_by_depth: tuple
    margin: float  # gap between the best and the runner-up slope at full depth


def max_ratio_slope(h0: TraceCoords, h1: TraceCoords, depth: int = 10,
                    window: int = 3, tie_tol: float = TIE_TOL) -> SlopeReport:
    """Maximising slope, and whether it held still over the last ``window``
    depth increments with a clear margin over every other slope."""
    _check_boundary(h0, h1)
    table = slope_table(depth)
    ratios = _CurveSup(h0, depth).ratios(h1)
    by_depth = []
    for d in range(depth + 1):
        n = table.prefix(d)
        by_depth.append(table.slopes[_argmax(ratios[:n], table.slopes[:n])])
    best = by_depth[-1]
    i = table.slopes.index(best)
    rest = np.delete(ratios, i)
    margin = float(ratios[i] - rest.max()) if rest.size else math.inf
    recent = by_depth[-(window + 1):]
    stable = len(recent) == window + 1 and len(set(recent)) == 1 and margin > tie_tol
    return SlopeReport(best, stable, tuple(by_depth), margin)


# -- stretch families ----------------------------------------------------------------

@dataclass(frozen=True)
class StretchFamily:
    """Structures with the s-length scaled by e^t and the boundary fixed,
    parametrised by twist about s in the marking where s is (0, 1)."""

    base: TraceCoords
    slope: Slope
    t: float
    marking: tuple = field(repr=False)  # columns: images of (1,0), (0,1)
    base_fn: FNCoords = field(repr=False)  # base in the adapted marking

    @property
    def length(self) -> float:
        return math.exp(self.t) * self.base_fn.length

    @property
    def boundary(self) -> float:
        return self.base_fn.boundary

    @property
    def twist0(self) -> float:
        return self.base_fn.twist

    @property
    def adapted_base(self) -> TraceCoords:
        return remark(self.base, self.marking)

    def adapted_at(self, twist: float) -> TraceCoords:
        """Family member in the marking where the stretched slope is (0, 1)."""
        return from_fenchel_nielsen(FNCoords(self.length, twist, self.boundary))

    def at(self, twist: float) -> TraceCoords:
        if self.t == 0 and twist == self.twist0:
            return self.base
        # the fixed boundary pins the excess exactly, which the large adapted
        # traces would otherwise only carry to eps * uvw
        excess = 4.0 * math.sinh(self.boundary / 4) ** 2
        return remark(self.adapted_at(twist), inverse_marking(self.marking), excess)

    def constraint_residuals(self, twist: float) -> tuple:
        """(length of s, boundary) residuals at ``twist``, relative to the targets."""
        h = self.at(twist)
        return (curve_length(h, self.slope) / self.length - 1.0,
                boundary_length(h) - self.boundary)


def stretch_family(h0: TraceCoords, s: Slope, t: float) -> StretchFamily:
    if t < 0:
        raise ValueError("stretch time must be non-negative")
    M = basis_for(s)
    # only the twist needs the adapted marking; length and boundary are read
    # in h0's own marking, where the traces are smaller
    twist = to_fenchel_nielsen(remark(h0, M)).twist
    fn0 = FNCoords(curve_length(h0, s), twist, boundary_length(h0))
    return StretchFamily(h0, s, float(t), M, fn0)


@dataclass(frozen=True)
class EnvelopeSlice:
    t: float
    tol: float
    lo: float
    hi: float
    minimizer: float
    min_value: float
    depth: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _golden_min(g, a: float, b: float, xtol: float):
    """Golden-section search for a quasi-convex g; ties move toward smaller x."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > xtol:
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + GOLDEN * (b - a)
            gd = g(d)
    return (c, gc) if gc <= gd else (d, gd)


def _edge(g, level: float, inside: float, step: float, xtol: float) -> float:
    """Last x from ``inside`` in direction sign(step) with g(x) <= level."""
    out = inside + step
    while g(out) <= level:
        inside, step = out, 2.0 * step
        out = inside + step
    while abs(out - inside) > xtol:
        mid = 0.5 * (inside + out)
        if g(mid) <= level:
            inside = mid
        else:
            out = mid
    return inside


def stretch_envelope(h0: TraceCoords, s: Slope, t: float, depth: int = 10,
                     tol: float = 1e-6, n_scan: int = 64, workers=None) -> EnvelopeSlice:
    """Twist interval on the stretch line where K(h0, h(tau)) <= t + tol."""
    if not t > 0:
        raise ValueError("envelope needs t > 0")
    if not tol > 0:
        raise ValueError("tol must be positive")
    fam = stretch_family(h0, s, t)
    # K is invariant under re-marking both ends, and the adapted coordinates
    # avoid the cancellation in uv - w that re-marking back would introduce
    sup = _CurveSup(fam.adapted_base, depth)

    def g(tau):
        return sup.value(fam.adapted_at(tau))

    half = 2.0 * max(fam.length, 1.0)
    center = fam.twist0 * math.exp(t)
    grid = np.linspace(center - half, center + half, n_scan)
    vals = np.array(pmap(g, grid, workers))
    i = int(np.argmin(vals))
    spacing = grid[1] - grid[0]
    xtol = 1e-12 * max(1.0, half)
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_scan - 1)]
    tau_star, g_star = _golden_min(g, a, b, xtol)
    if vals[i] < g_star:
        tau_star, g_star = float(grid[i]), float(vals[i])
    if g_star > t + tol:
        raise InsufficientDepthError(
            f"min over twists of K is {g_star!r} > t + tol = {t + tol!r}; raise depth")
    level = t + tol
    lo = _edge(g, level, tau_star, -spacing, xtol)
    hi = _edge(g, level, tau_star, spacing, xtol)
    return EnvelopeSlice(float(t), float(tol), float(lo), float(hi), float(tau_star),
                         float(g_star), depth)


def partial_stretch_point(h0: TraceCoords, s: Slope, t: float, side: str = "plus",
                          depth: int = 10, tol: float = 1e-6, workers=None) -> TraceCoords:
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    if t == 0:
        return h0
    env = stretch_envelope(h0, s, t, depth, tol, workers=workers)
    return stretch_family(h0, s, t).at(env.hi if side == "plus" else env.lo)


@dataclass
class GeodesicReport:
    times: tuple
    points: tuple
    slices: tuple  # EnvelopeSlice per time, None at t = 0
    pairs: list  # (i, j, K, t_j - t_i)
    additivity: list  # (i, j, k, residual) for i < j < k
    boundary_drift: float
    tol: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def geodesic_check(h0: TraceCoords, s: Slope, side: str, times, depth: int = 10,
                   tol: float = 2e-3, envelope_tol: float = 1e-6,
                   additivity_tol: float = 5e-3, workers=None) -> GeodesicReport:
    """Check K(h_ti, h_tj) = t_j - t_i along one envelope side."""
    times = tuple(float(x) for x in times)
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise ValueError("times must be sorted and non-negative")
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")

    def endpoint(t):
        if t == 0:
            return None, h0
        env = stretch_envelope(h0, s, t, depth, envelope_tol)
        return env, stretch_family(h0, s, t).at(env.hi if side == "plus" else env.lo)

    done = pmap(endpoint, times, workers)
    slices = tuple(e for e, _ in done)
    points = tuple(p for _, p in done)
    b0 = boundary_length(h0)
    drift = max((abs(boundary_length(p) - b0) for p in points), default=0.0)
    n = len(times)
    sups = [_CurveSup(p, depth) for p in points]
    K = {}
    for i in range(n):
        for j in range(i + 1, n):
            K[i, j] = sups[i].value(points[j]) if times[j] != times[i] else 0.0
    pairs = [(i, j, K[i, j], times[j] - times[i]) for (i, j) in sorted(K)]
    violations = [("pair", i, j, k - e) for (i, j, k, e) in pairs if abs(k - e) > tol]
    additivity = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                r = K[i, j] + K[j, k] - K[i, k]
                additivity.append((i, j, k, r))
                if abs(r) > additivity_tol:
                    violations.append(("additivity", i, j, k, r))
    if drift > BOUNDARY_TOL * max(1.0, b0):
        violations.append(("boundary", drift))
    return GeodesicReport(times, points, slices, pairs, additivity, drift, tol, violations)


# -- random structures and axioms --------------------------------------------------

def random_structure(b: float, rng: np.random.Generator,
                     length_range=(0.3, 3.0)) -> TraceCoords:
    """Random point of the fixed-boundary slice: log-uniform length of (0,1),
    twist uniform over one Dehn twist period."""
    lo, hi = np.log(length_range)
    length = float(np.exp(rng.uniform(lo, hi)))
    twist = float(rng.uniform(-0.5, 0.5)) * length
    return from_fenchel_nielsen(FNCoords(length, twist, b))


def _fn_distance(x: TraceCoords, y: TraceCoords) -> float:
    fx, fy = to_fenchel_nielsen(x), to_fenchel_nielsen(y)
    return math.hypot(fx.length - fy.length, fx.twist - fy.twist)


@dataclass
class AxiomReport:
    samples: int
    b: float
    depth: int
    positivity_failures: list
    triangle_violations: list
    max_triangle_excess: float
    asymmetric_pairs: list  # (K(x,y), K(y,x)) with a gap above 1e-6
    slack: float

    @property
    def ok(self) -> bool:
        return not self.positivity_failures and not self.triangle_violations


def metric_axiom_suite(samples: int = 100, b: float = 1.0, depth: int = 10, seed: int = 0,
                       slack: float = 1e-3, workers=None) -> AxiomReport:
    rng = np.random.default_rng(seed)
    triples = [tuple(random_structure(b, rng) for _ in range(3)) for _ in range(samples)]

    def one(tr):
        x, y, z = tr
        sx, sy = _CurveSup(x, depth), _CurveSup(y, depth)
        return (sx.value(y), sy.value(z), sx.value(z), sy.value(x),
                _fn_distance(x, y), _fn_distance(y, z), _fn_distance(x, z))

    rows = pmap(one, triples, workers)
    positivity, violations, asym = [], [], []
    worst = -math.inf
    for n, (kxy, kyz, kxz, kyx, dxy, dyz, dxz) in enumerate(rows):
        for name, k, d in (("xy", kxy, dxy), ("yz", kyz, dyz), ("xz", kxz, dxz)):
            if d > 1e-3 and not k > 0:
                positivity.append((n, name, k))
        excess = kxz - kxy - kyz
        worst = max(worst, excess)
        if excess > slack:
            violations.append((n, excess))
        if abs(kxy - kyx) > 1e-6:
            asym.append((n, kxy, kyx))
    return AxiomReport(samples, b, depth, positivity, violations, worst, asym, slack)
