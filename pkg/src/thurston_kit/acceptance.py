"""Acceptance criteria as deterministic runners.

Each runner returns a CriterionResult whose ``report`` text depends only on
the seeds, never on timing or worker count; criterion 8 compares those texts
across worker counts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import metrics, saccheri, torus
from ._parallel import pmap
from .cli import equality_pairs

F = ".17g"

SEED_LIPSCHITZ = 20240611
SEED_TRACES = 7
SEED_EQUALITY = 11
SEED_STRETCH = 5
SEED_AXIOMS = 3


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    budget: float | None = None  # runtime target in seconds

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.elapsed < self.budget

    @property
    def report(self) -> str:
        return f"{self.number}|{self.title}|{'pass' if self.passed else 'FAIL'}|{self.detail}"

    def line(self) -> str:
        ok = self.passed and self.within_budget
        budget = f" (budget {self.budget:g}s)" if self.budget else ""
        return (f"criterion {self.number} {'PASS' if ok else 'FAIL'}: {self.title}: "
                f"{self.detail} [{self.elapsed:.2f}s{budget}]")


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- 1 ----------------------------------------------------------------------------------

@_timed
def criterion_1(workers=None, n_pairs: int = 100_000, n_points: int = 1000) -> CriterionResult:
    """Expansion maps: per-pair ratio <= k(1+1e-6), sup >= 0.99k, composition <= 1e-9."""
    cases = [(a, k) for a in (1.0, saccheri.CRITICAL_BASE, 3.0) for k in (1.25, math.e)]

    def one(case):
        a, k = case
        q = saccheri.build_quad(a)
        r = saccheri.lipschitz_ratios(saccheri.ExpansionMap(k, q), n_pairs, SEED_LIPSCHITZ)
        resid = saccheri.composition_residual(q, k, k, n_points, SEED_LIPSCHITZ)
        return float(r.max()) / k, resid

    out = pmap(one, cases, workers)
    ok = all(1.0 - 0.01 <= top <= 1.0 + 1e-6 and resid <= 1e-9 for top, resid in out)
    worst_top = max(top for top, _ in out)
    worst_low = min(top for top, _ in out)
    worst_res = max(res for _, res in out)
    detail = (f"sup/k in [{worst_low:{F}}, {worst_top:{F}}], "
              f"max composition residual {worst_res:{F}}")
    return CriterionResult(1, "expansion-map Lipschitz certification", ok, detail, budget=10.0)


# -- 2 ----------------------------------------------------------------------------------

def matrix_log_traces(h: torus.TraceCoords, depth: int) -> dict:
    """log |trace| of the holonomy word of every slope to ``depth``, built by
    multiplying matrices down both Stern-Brocot trees with log rescaling."""
    A, B = torus.holonomy(h)
    out = {torus.Slope(1, 0): math.log(abs(A.trace)), torus.Slope(0, 1): math.log(abs(B.trace))}
    b = B.matrix
    for sign, a in ((1, A.matrix), (-1, A.inverse().matrix)):
        # frontier rows: (left word, log scale, right word, log scale, left slope, right slope)
        L = b[None].copy()
        Ls = np.zeros(1)
        R = a[None].copy()
        Rs = np.zeros(1)
        lsl = [(0, 1)]
        rsl = [(1, 0)]
        for _ in range(depth + 1):
            M = L @ R
            big = np.abs(M).max(axis=(1, 2))
            M = M / big[:, None, None]
            Ms = Ls + Rs + np.log(big)
            log_tr = Ms + np.log(np.abs(M[:, 0, 0] + M[:, 1, 1]))
            msl = [(x[0] + y[0], x[1] + y[1]) for x, y in zip(lsl, rsl)]
            for (p, q), lt in zip(msl, log_tr):
                out[torus.Slope(sign * p, q)] = float(lt)
            # children: (L, M) and (M, R)
            L, Ls, R, Rs = (np.concatenate([L, M]), np.concatenate([Ls, Ms]),
                            np.concatenate([M, R]), np.concatenate([Ms, Rs]))
            lsl, rsl = lsl + msl, msl + rsl
    return out


def random_trace_coords(rng: np.random.Generator) -> torus.TraceCoords:
    b = float(rng.uniform(0.1, 4.0))
    return metrics.random_structure(b, rng)


@_timed
def criterion_2(workers=None, n_coords: int = 100, depth: int = 12) -> CriterionResult:
    """Recursion against matrix words: relative trace error <= 1e-9 to depth 12."""
    rng = np.random.default_rng(SEED_TRACES)
    coords = [random_trace_coords(rng) for _ in range(n_coords)]
    table = torus.slope_table(depth)

    def one(h):
        rec = torus.log_traces(h, table)
        mat = matrix_log_traces(h, depth)
        ref = np.array([mat[s] for s in table.slopes])
        return float(np.max(np.abs(np.expm1(rec - ref))))

    errs = pmap(one, coords, workers)
    worst = max(errs)
    detail = f"{n_coords} structures x {len(table)} slopes, max relative error {worst:{F}}"
    return CriterionResult(2, "trace recursion vs matrix words", worst <= 1e-9, detail,
                           budget=30.0)


# -- 3 ----------------------------------------------------------------------------------

def quoted_arc_values(X: float) -> tuple:
    return (math.asinh(1.0 / math.sqrt(X ** 4 - 1.0)),
            math.asinh(math.sqrt(X ** 6 + 1.0) / math.sqrt(X ** 8 - 1.0)))


def _arc_matches(T0, T1, targets, slopes, tol):
    """Slopes whose matrix-route arc lengths on (T0, T1) hit ``targets``."""
    hits = []
    for s in slopes:
        try:
            a0, a1 = torus.arc_length(T0, s), torus.arc_length(T1, s)
        except (torus.GeometryError, ValueError):
            continue
        err = max(abs(a0 - targets[0]), abs(a1 - targets[1]))
        if err <= tol:
            hits.append((s, err))
    return hits


@_timed
def criterion_3(workers=None, search_depth: int = 5) -> CriterionResult:
    """Doubled-hexagon closed forms, curves and boundary to 1e-9, arcs to 1e-6."""
    slopes = torus.enumerate_slopes(search_depth)

    def one(X):
        T0, T1 = torus.from_doubled_hexagons(X, 0), torus.from_doubled_hexagons(X, 1)
        s10, s01 = torus.Slope(1, 0), torus.Slope(0, 1)
        checks = [
            torus.curve_length(T0, s10) - 2 * math.asinh(X ** 2),
            torus.curve_length(T0, s01) - 2 * math.asinh(X ** 2),
            torus.curve_length(T1, s10) - 2 * math.asinh(X),
            torus.curve_length(T1, s01) - 2 * math.asinh(X ** 3),
            torus.boundary_length(T0) - 4 * math.acosh(X ** 4),
            torus.boundary_length(T1) - 4 * math.acosh(X ** 4),
        ]
        quoted = quoted_arc_values(X)
        literal = _arc_matches(T0, T1, quoted, slopes, 1e-6)
        doubled = _arc_matches(T0, T1, tuple(2 * q for q in quoted), slopes, 1e-6)
        return max(abs(c) for c in checks), literal, doubled

    out = pmap(one, (2.0, 5.0, 10.0), workers)
    curves_ok = all(err <= 1e-9 for err, _, _ in out)
    arcs_ok = all(lit for _, lit, _ in out)
    parts = [f"curves/boundary max error {max(e for e, _, _ in out):{F}}"]
    for X, (_, lit, dbl) in zip((2, 5, 10), out):
        lit_txt = ",".join(str(s) for s, _ in lit) or "none"
        dbl_txt = ",".join(f"{s} (err {e:.3g})" for s, e in dbl) or "none"
        parts.append(f"X={X}: classes at quoted arc values: {lit_txt}; "
                     f"at twice the quoted values: {dbl_txt}")
    return CriterionResult(3, "doubled-hexagon closed forms", curves_ok and arcs_ok,
                           "; ".join(parts))


# -- 4 ----------------------------------------------------------------------------------

@_timed
def criterion_4(workers=None, depth: int = 12) -> CriterionResult:
    """Counterexample: A - K >= 1.5 at X = 10, exp(K) exact and rising toward 3/2."""
    xs = (10.0, 100.0, 1000.0)

    def one(X):
        T0, T1 = torus.from_doubled_hexagons(X, 0), torus.from_doubled_hexagons(X, 1)
        return metrics.curve_metric(T0, T1, depth), metrics.arc_metric(T0, T1, depth)

    out = pmap(one, xs, workers)
    K10, A10 = out[0]
    gap = A10.value - K10.value
    closed = math.asinh(1e3) / math.asinh(1e2)
    ratios = [K.ratio for K, _ in out]
    rising = all(a < b < 1.5 for a, b in zip(ratios, ratios[1:]))
    ok = gap >= 1.5 and abs(K10.ratio - closed) <= 1e-3 and rising
    detail = (f"A-K at X=10 {gap:{F}}; exp(K) {K10.ratio:{F}} vs {closed:{F}} "
              f"(argmax {K10.argmax_slope}); exp(K) over X=10,100,1000: "
              + ", ".join(f"{r:{F}}" for r in ratios))
    return CriterionResult(4, "counterexample separation", ok, detail)


# -- 5 ----------------------------------------------------------------------------------

def _stable(history, window: int = 3, tol: float = 1e-6) -> bool:
    tail = history[-(window + 1):]
    return len(tail) == window + 1 and tail[-1] - tail[0] <= tol


@_timed
def criterion_5(workers=None, samples: int = 50, depth: int = 12) -> CriterionResult:
    """Equality regime: converged |A - K| <= 5e-3 and A >= K - 1e-6."""
    bs = (0.5, 1.0, 4 * math.asinh(1.0))
    worst, worst_below, unconverged = 0.0, 0.0, 0
    for i, b in enumerate(bs):
        pairs = equality_pairs(b, samples, SEED_EQUALITY + i)
        res = pmap(lambda pr: (metrics.curve_metric(pr[0], pr[1], depth),
                               metrics.arc_metric(pr[0], pr[1], depth)), pairs, workers)
        for K, A in res:
            worst = max(worst, abs(A.value - K.value))
            worst_below = max(worst_below, K.value - A.value)
            unconverged += not (_stable(K.history) and _stable(A.history))
    ok = worst <= 5e-3 and worst_below <= 1e-6 and unconverged == 0
    detail = (f"{samples} pairs at each b in (0.5, 1, 4 asinh 1): max |A-K| {worst:{F}}, "
              f"max K-A {worst_below:{F}}, unconverged suprema {unconverged}")
    return CriterionResult(5, "equality regime", ok, detail, budget=120.0)


# -- 6 ----------------------------------------------------------------------------------

@_timed
def criterion_6(workers=None, n_bases: int = 5, depth: int = 10) -> CriterionResult:
    """Stretch geodesics at b = 1 along (0,1), plus side."""
    rng = np.random.default_rng(SEED_STRETCH)
    bases = [metrics.random_structure(1.0, rng) for _ in range(n_bases)]
    s = torus.Slope(0, 1)
    reports = pmap(lambda h: metrics.geodesic_check(h, s, "plus", (0.0, 0.3, 0.7), depth),
                   bases, workers)
    env_err = max(abs(sl.min_value - sl.t) for r in reports for sl in r.slices if sl)
    add = max(abs(res) for r in reports for *_, res in r.additivity)
    drift = max(r.boundary_drift for r in reports)
    ok = env_err <= 2e-3 and add <= 5e-3 and drift <= 1e-9
    detail = (f"{n_bases} bases: max |envelope min - t| {env_err:{F}}, "
              f"max additivity residual {add:{F}}, max boundary drift {drift:{F}}")
    return CriterionResult(6, "stretch geodesics", ok, detail)


# -- 7 ----------------------------------------------------------------------------------

@_timed
def criterion_7(workers=None, samples: int = 100, depth: int = 10) -> CriterionResult:
    """Metric axioms at b = 1, with the X = 10 pair as the asymmetric witness."""
    rep = metrics.metric_axiom_suite(samples, 1.0, depth, SEED_AXIOMS, workers=workers)
    T0, T1 = torus.from_doubled_hexagons(10.0, 0), torus.from_doubled_hexagons(10.0, 1)
    k01 = metrics.curve_metric(T0, T1, depth).value
    k10 = metrics.curve_metric(T1, T0, depth).value
    asym = abs(k01 - k10) > 1e-6 or bool(rep.asymmetric_pairs)
    ok = rep.ok and asym
    detail = (f"{samples} triples: positivity failures {len(rep.positivity_failures)}, "
              f"triangle violations {len(rep.triangle_violations)} "
              f"(max excess {rep.max_triangle_excess:{F}}), random asymmetric pairs "
              f"{len(rep.asymmetric_pairs)}; K(T0,T1) {k01:{F}} vs K(T1,T0) {k10:{F}}")
    return CriterionResult(7, "metric axioms", ok, detail)


RUNNERS = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
           criterion_7)


def run_all(workers=None) -> list:
    return [r(workers) for r in RUNNERS]


def criterion_8(serial: list, parallel: list, n_workers: int) -> CriterionResult:
    """Reports of criteria 1-7 are byte-identical across worker counts."""
    diffs = [a.number for a, b in zip(serial, parallel) if a.report != b.report]
    detail = (f"1 vs {n_workers} workers: "
              + ("identical reports" if not diffs else f"reports differ for {diffs}"))
    return CriterionResult(8, "determinism", not diffs and len(serial) == len(parallel), detail)
