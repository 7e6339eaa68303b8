import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thurston_kit._parallel import ENV_THREADS, pmap, worker_count
from thurston_kit.metrics import (
    BoundaryMismatchError,
    InsufficientDepthError,
    MetricResult,
    arc_metric,
    curve_metric,
    curve_ratio,
    geodesic_check,
    max_ratio_slope,
    metric_axiom_suite,
    partial_stretch_point,
    random_structure,
    stretch_envelope,
    stretch_family,
)
from thurston_kit.torus import (
    FNCoords,
    Slope,
    boundary_length,
    curve_length,
    from_doubled_hexagons,
    from_fenchel_nielsen,
    square_torus,
)

X = 10.0
T0, T1 = from_doubled_hexagons(X, 0), from_doubled_hexagons(X, 1)
GLUED, DUAL = Slope(0, 1), Slope(1, 0)
CRITICAL_B = 4 * math.asinh(1.0)
EPS = np.finfo(float).eps


def pair(b, seed):
    rng = np.random.default_rng(seed)
    return random_structure(b, rng), random_structure(b, rng)


# -- ratios and suprema -------------------------------------------------------------------

@given(st.integers(0, 2 ** 31), st.sampled_from([Slope(1, 0), Slope(2, 3), Slope(-5, 2)]))
def test_curve_ratio_antisymmetric(seed, s):
    h0, h1 = pair(1.0, seed)
    assert curve_ratio(h0, h0, s) == 0.0
    assert curve_ratio(h0, h1, s) == pytest.approx(-curve_ratio(h1, h0, s), abs=1e-14)


def test_curve_ratio_counterexample():
    want = math.log(math.asinh(X ** 3) / math.asinh(X ** 2))
    assert curve_ratio(T0, T1, GLUED) == pytest.approx(want, rel=1e-12)


def test_identical_pair_is_zero():
    h = from_fenchel_nielsen(FNCoords(1.2, 0.3, 2.0))
    assert curve_metric(h, h, 6).value == 0.0
    assert arc_metric(h, h, 6).value == 0.0


@pytest.mark.parametrize("depth", (8, 10))
def test_counterexample_curve_metric(depth):
    r = curve_metric(T0, T1, depth)
    assert r.argmax_slope == GLUED
    assert r.ratio == pytest.approx(math.asinh(X ** 3) / math.asinh(X ** 2), rel=1e-12)
    back = curve_metric(T1, T0, depth)
    assert back.argmax_slope == DUAL
    assert back.ratio == pytest.approx(math.asinh(X ** 2) / math.asinh(X), rel=1e-12)
    assert back.value != pytest.approx(r.value, abs=0.1)


def test_counterexample_ratio_tends_to_three_halves():
    ratios = [curve_metric(from_doubled_hexagons(x, 0), from_doubled_hexagons(x, 1), 8).ratio
              for x in (10.0, 1e3, 1e6)]
    gaps = [abs(r - 1.5) for r in ratios]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.05


def test_counterexample_arc_metric():
    r = arc_metric(T0, T1, 8)
    lower = math.log(math.asinh(math.sqrt(X ** 6 + 1) / math.sqrt(X ** 8 - 1))
                     / math.asinh(1 / math.sqrt(X ** 4 - 1)))
    assert r.kind == "arc"
    assert r.value >= lower - 1e-12
    assert r.value == pytest.approx(math.log(X), abs=0.05)
    assert r.value - curve_metric(T0, T1, 8).value >= math.log(X) - math.log(1.5) - 0.5


@given(st.integers(0, 2 ** 31), st.sampled_from([0.5, 2.0, 5.0]))
@settings(max_examples=20, deadline=None)
def test_history_monotone_and_arc_dominates(seed, b):
    h0, h1 = pair(b, seed)
    k, a = curve_metric(h0, h1, 7), arc_metric(h0, h1, 7)
    for r in (k, a):
        assert all(x <= y for x, y in zip(r.history, r.history[1:]))
        assert r.value == r.history[-1]
        assert len(r.history) == 8
    assert a.value >= k.value


@pytest.mark.parametrize("b", (0.5, 2.0, CRITICAL_B))
def test_arc_metric_equals_curve_metric_below_threshold(b):
    for seed in range(5):
        h0, h1 = pair(b, 100 + seed)
        assert abs(arc_metric(h0, h1, 10).value - curve_metric(h0, h1, 10).value) <= 5e-3


def test_boundary_mismatch():
    h0 = from_fenchel_nielsen(FNCoords(1.0, 0.0, 1.0))
    h1 = from_fenchel_nielsen(FNCoords(1.0, 0.0, 1.1))
    for fn in (curve_metric, arc_metric, max_ratio_slope):
        with pytest.raises(BoundaryMismatchError):
            fn(h0, h1, 4)


def test_metric_result_record_round_trips_as_json():
    r = curve_metric(T0, T1, 6)
    rec = json.loads(json.dumps(r.to_record()))
    assert rec == {"value": r.value, "argmax": [0, 1], "depth": 6, "history": list(r.history)}
    assert isinstance(r, MetricResult) and r.ratio == math.exp(r.value)


# -- maximising slope ----------------------------------------------------------------------

def test_max_ratio_slope_counterexample():
    rep = max_ratio_slope(T0, T1, 10)
    assert rep.slope == GLUED and rep.stable
    assert rep.margin > 0.01
    assert len(rep.argmax_by_depth) == 11


def tied_pair(depth):
    """(h0, h1) where two slopes tie for the maximum ratio to rounding.

    Along a twist family the maximising slope switches at isolated twists;
    bisecting on the argmax itself converges to a switch point, where the two
    adjacent maximisers share the maximum.
    """
    h0 = from_fenchel_nielsen(FNCoords(1.0, 0.2, 1.0))

    def h(tau):
        return from_fenchel_nielsen(FNCoords(0.8, tau, 1.0))

    def arg(tau):
        return max_ratio_slope(h0, h(tau), depth).slope

    a, b = 0.6, 0.7
    sa = arg(a)
    assert arg(b) != sa
    while True:
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if arg(m) == sa:
            a = m
        else:
            b = m
    return h0, h(a), sa, arg(b)


def test_max_ratio_slope_reports_tie():
    h0, h1, s1, s2 = tied_pair(8)
    assert s1 != s2
    assert abs(curve_ratio(h0, h1, s1) - curve_ratio(h0, h1, s2)) <= 1e-12
    rep = max_ratio_slope(h0, h1, 8)
    assert rep.margin <= 1e-12
    assert not rep.stable


def test_stretched_slope_is_the_maximiser():
    h0 = from_fenchel_nielsen(FNCoords(1.1, 0.25, 1.5))
    for s in (Slope(0, 1), Slope(1, 1)):
        h1 = partial_stretch_point(h0, s, 0.4, "plus", depth=8)
        rep = max_ratio_slope(h0, h1, 8)
        # on the envelope edge another slope ties with s, so compare ratios
        assert curve_ratio(h0, h1, s) == pytest.approx(curve_metric(h0, h1, 8).value, abs=1e-6)
        h_mid = stretch_family(h0, s, 0.4).at(stretch_envelope(h0, s, 0.4, depth=8).minimizer)
        assert max_ratio_slope(h0, h_mid, 8).slope == s
        assert rep.slope in (s,) or rep.margin <= 1e-5


# -- stretch families ------------------------------------------------------------------------

def test_stretch_family_identity_at_zero():
    h0 = from_fenchel_nielsen(FNCoords(1.3, -0.2, 2.5))
    for s in (Slope(0, 1), Slope(2, 1), Slope(-3, 2)):
        fam = stretch_family(h0, s, 0.0)
        assert fam.at(fam.twist0) is h0


@given(st.floats(0.0, 1.0), st.floats(-2.0, 2.0),
       st.sampled_from([Slope(0, 1), Slope(1, 0), Slope(2, 1), Slope(-1, 2)]))
def test_stretch_family_constraints(t, dtau, s):
    h0 = from_fenchel_nielsen(FNCoords(1.3, -0.2, 2.5))
    fam = stretch_family(h0, s, t)
    r_len, r_b = fam.constraint_residuals(fam.twist0 * math.exp(t) + dtau)
    assert abs(r_len) <= 1e-9
    assert abs(r_b) <= 1e-9
    assert fam.length == pytest.approx(math.exp(t) * curve_length(h0, s), rel=1e-12)


@given(st.floats(0.0, 2.0), st.floats(-2.0, 2.0),
       st.sampled_from([Slope(1, 0), Slope(2, 1), Slope(-3, 5), Slope(4, 7)]))
def test_stretch_family_constraints_at_rounding_floor(t, dtau, s):
    # long stretched curves force large traces, and a triple stores the
    # boundary only to eps * uvw / sqrt(excess)
    h0 = from_fenchel_nielsen(FNCoords(1.3, -0.2, 2.5))
    fam = stretch_family(h0, s, t)
    tau = fam.twist0 * math.exp(t) + dtau
    h = fam.at(tau)
    floor = EPS * h.u * h.v * h.w / math.sqrt(h.excess)
    r_len, r_b = fam.constraint_residuals(tau)
    assert abs(r_len) <= 1e-9
    assert abs(r_b) <= max(1e-9, 2 * floor)


def test_stretch_family_rejects_negative_time():
    with pytest.raises(ValueError):
        stretch_family(T0, GLUED, -0.1)


def test_envelope_square_torus_symmetric():
    h0 = square_torus(1.0)
    env = stretch_envelope(h0, Slope(0, 1), 0.3)
    assert env.min_value == pytest.approx(0.3, abs=1e-6)
    tau0 = stretch_family(h0, Slope(0, 1), 0.3).twist0
    assert tau0 == 0.0
    assert env.lo + env.hi == pytest.approx(2 * tau0, abs=1e-6)
    assert env.width > 0


@pytest.mark.parametrize("s", (Slope(0, 1), Slope(1, 1), Slope(-2, 1)))
def test_envelope_minimum_is_t(s):
    h0 = from_fenchel_nielsen(FNCoords(0.9, 0.35, 1.2))
    for t in (0.2, 0.6):
        env = stretch_envelope(h0, s, t)
        assert env.lo <= env.minimizer <= env.hi
        assert env.min_value == pytest.approx(t, abs=2e-3)
        assert env.min_value >= t - 1e-12
        assert env.width > 0


def test_envelope_scan_oracle():
    # a dense brute-force scan never beats the golden-section minimum
    h0 = from_fenchel_nielsen(FNCoords(0.9, 0.35, 1.2))
    s, t = Slope(1, 1), 0.4
    env = stretch_envelope(h0, s, t, depth=8)
    fam = stretch_family(h0, s, t)
    taus = np.linspace(env.lo - 1.0, env.hi + 1.0, 400)
    vals = np.array([curve_metric(fam.adapted_base, fam.adapted_at(x), 8).value for x in taus])
    assert vals.min() >= env.min_value - 1e-9
    inside = (taus > env.lo + 1e-6) & (taus < env.hi - 1e-6)
    assert np.all(vals[inside] <= t + env.tol)
    outside = (taus < env.lo - 1e-3) | (taus > env.hi + 1e-3)
    assert np.all(vals[outside] > t + env.tol)


def test_envelope_errors():
    with pytest.raises(ValueError):
        stretch_envelope(T0, GLUED, 0.0)
    with pytest.raises(ValueError):
        stretch_envelope(T0, GLUED, 0.3, tol=0.0)


def test_envelope_insufficient_depth(monkeypatch):
    # if every twist leaves the truncated sup above t the search must say so
    import thurston_kit.metrics as metrics

    monkeypatch.setattr(metrics._CurveSup, "value", lambda self, h1: 10.0)
    with pytest.raises(InsufficientDepthError):
        stretch_envelope(square_torus(1.0), Slope(0, 1), 0.3, depth=4)


def test_partial_stretch_points():
    h0 = from_fenchel_nielsen(FNCoords(1.1, 0.25, 1.5))
    s, t, tol = Slope(0, 1), 0.5, 1e-6
    assert partial_stretch_point(h0, s, 0.0, "plus") is h0
    assert partial_stretch_point(h0, s, 0.0, "minus") is h0
    plus = partial_stretch_point(h0, s, t, "plus", tol=tol)
    minus = partial_stretch_point(h0, s, t, "minus", tol=tol)
    for h in (plus, minus):
        assert curve_metric(h0, h, 10).value == pytest.approx(t, abs=tol)
        assert boundary_length(h) == pytest.approx(boundary_length(h0), rel=1e-9)
    assert curve_metric(plus, minus, 10).value > 10 * tol
    assert curve_metric(minus, plus, 10).value > 10 * tol
    with pytest.raises(ValueError):
        partial_stretch_point(h0, s, t, "up")


# -- geodesics ---------------------------------------------------------------------------------

H0 = from_fenchel_nielsen(FNCoords(1.1, 0.25, 1.5))


@pytest.mark.parametrize("side", ("plus", "minus"))
def test_geodesic_single_step(side):
    rep = geodesic_check(H0, Slope(0, 1), side, (0.0, 0.3))
    assert rep.ok
    (_, _, k, expected), = rep.pairs
    assert k == pytest.approx(0.3, abs=2e-3) and expected == pytest.approx(0.3)


def test_geodesic_repeated_time():
    rep = geodesic_check(H0, Slope(0, 1), "plus", (0.3, 0.3))
    assert rep.pairs == [(0, 1, 0.0, 0.0)]
    assert rep.ok


@pytest.mark.parametrize("side", ("plus", "minus"))
def test_geodesic_additivity(side):
    rep = geodesic_check(H0, Slope(1, 1), side, (0.0, 0.3, 0.7))
    assert rep.ok, rep.violations
    (_, _, _, r), = rep.additivity
    assert abs(r) <= 5e-3
    assert rep.boundary_drift <= 1e-9 * max(1.0, boundary_length(H0))


def test_geodesic_check_validates_times():
    with pytest.raises(ValueError):
        geodesic_check(H0, Slope(0, 1), "plus", (0.3, 0.1))
    with pytest.raises(ValueError):
        geodesic_check(H0, Slope(0, 1), "plus", (-0.1, 0.1))
    with pytest.raises(ValueError):
        geodesic_check(H0, Slope(0, 1), "sideways", (0.0, 0.1))


# -- axioms ------------------------------------------------------------------------------------

def test_random_structure_in_slice(rng):
    for _ in range(20):
        h = random_structure(2.0, rng)
        assert boundary_length(h) == pytest.approx(2.0, rel=1e-10)


def test_axiom_suite_small():
    rep = metric_axiom_suite(samples=12, b=1.0, depth=8, seed=1)
    assert rep.ok
    assert rep.max_triangle_excess <= rep.slack
    assert rep.asymmetric_pairs


def test_axiom_suite_is_deterministic():
    a = metric_axiom_suite(samples=6, b=1.0, depth=6, seed=4, workers=1)
    b = metric_axiom_suite(samples=6, b=1.0, depth=6, seed=4, workers=3)
    assert a == b


# -- parallel helpers --------------------------------------------------------------------------

def test_worker_count_respects_env(monkeypatch):
    monkeypatch.delenv(ENV_THREADS, raising=False)
    assert worker_count(5) == 5
    monkeypatch.setenv(ENV_THREADS, "2")
    assert worker_count(5) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv(ENV_THREADS, "0")
    assert worker_count(4) == 1


def test_pmap_ordered():
    items = list(range(50))
    assert pmap(lambda x: x * x, items, 1) == pmap(lambda x: x * x, items, 8) == [x * x for x in items]
    assert pmap(abs, [], 4) == []


def test_envelope_independent_of_workers():
    h0 = from_fenchel_nielsen(FNCoords(0.9, 0.35, 1.2))
    a = stretch_envelope(h0, Slope(1, 1), 0.3, depth=6, workers=1)
    b = stretch_envelope(h0, Slope(1, 1), 0.3, depth=6, workers=4)
    assert a == b
