import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from ucbncs.estimation import (
    EstimatorState,
    confidence_set,
    initial_confidence_set,
)
from ucbncs.jmls import CandidateTheta


def _minimize(obj):
    """Derivative-free minimization to ~1e-10: bounded search plus one
    central-difference Newton polish (exact for quadratic objectives, where
    golden-section alone bottoms out at sqrt(eps))."""
    res = minimize_scalar(obj, bounds=(-100.0, 100.0), method="bounded",
                          options={"xatol": 1e-10})
    x, h = res.x, 0.5
    f0, fp, fm = obj(x), obj(x + h), obj(x - h)
    curv = fp - 2.0 * f0 + fm
    return x if curv <= 0.0 else x - 0.5 * h * (fp - fm) / curv


def brute_force_A(history, lam):
    """Numerical minimizer of the dropped-slot ridge objective."""

    def obj(a):
        return 0.5 * (
            lam * a * a
            + sum((z - a * x) ** 2 * (1 - l) for x, u, l, z in history)
        )

    return _minimize(obj)


def brute_force_B(history, lam, a_hat):
    """Numerical minimizer of the delivered-slot ridge objective at a_hat."""

    def obj(b):
        return 0.5 * lam * b * b + 0.5 * sum(
            (z - a_hat * x - b * u) ** 2 * l for x, u, l, z in history
        )

    return _minimize(obj)


def replay(history, lam=1.0):
    est = EstimatorState(lam)
    for x, u, l, z in history:
        est.record_step(x, u, l, z)
    return est


def test_record_drop_slot():
    est = EstimatorState(1.0).record_step(2.0, 0.0, 0, 3.0)
    assert est.V1 == 5.0
    assert est.V2 == 1.0
    assert est.S_zx0 == 6.0
    assert est.t == 1


def test_record_delivered_slot():
    est = EstimatorState(1.0).record_step(2.0, 1.0, 1, 1.0)
    assert est.V1 == 1.0
    assert est.V2 == 2.0
    assert est.S_zu1 == 1.0
    assert est.S_xu1 == 2.0
    assert est.S_uu1_check == 1.0


def test_ell_count():
    est = replay([(1.0, 0.5, l, 0.3) for l in (1, 0, 1, 1)])
    assert est.ell_count == 3
    assert est.refresh_estimates().p_hat == 0.75


def test_single_drop_sample_closed_form():
    est = replay([(2.0, 0.0, 0, 3.0)]).refresh_estimates()
    assert est.A_hat == pytest.approx(6.0 / 5.0)
    assert est.A_hat == pytest.approx(brute_force_A([(2.0, 0.0, 0, 3.0)], 1.0), abs=1e-8)


def test_no_drop_samples_regularizer_dominates():
    est = replay([(2.0, 1.0, 1, 1.5), (1.0, -0.5, 1, 0.7)]).refresh_estimates()
    assert est.A_hat == 0.0
    assert est.V1 == est.lam


def test_closed_forms_match_brute_force(rng=np.random.default_rng(21)):
    for _ in range(50):
        lam = rng.uniform(0.3, 3.0)
        n = rng.integers(1, 21)
        history = [
            (
                float(rng.normal(0, 2)),
                float(rng.normal(0, 1.5)),
                int(rng.random() < 0.6),
                float(rng.normal(0, 2)),
            )
            for _ in range(n)
        ]
        est = replay(history, lam).refresh_estimates()
        a_star = brute_force_A(history, lam)
        assert est.A_hat == pytest.approx(a_star, abs=1e-8)
        assert est.B_hat == pytest.approx(brute_force_B(history, lam, est.A_hat), abs=1e-8)


def test_refresh_requires_data():
    with pytest.raises(ValueError):
        EstimatorState(1.0).refresh_estimates()


def test_initial_estimates_are_half():
    est = EstimatorState(1.0)
    assert (est.A_hat, est.B_hat, est.p_hat) == (0.5, 0.5, 0.5)


def test_estimation_errors():
    est = replay([(1.0, 0.0, 0, 1.2)]).refresh_estimates()
    est.A_hat, est.B_hat, est.p_hat = 1.2, 0.9, 0.75
    e1, e2, e3 = est.estimation_errors(CandidateTheta(1.0, 0.9, 0.8))
    assert e1 == pytest.approx(0.2)
    assert e2 == 0.0
    assert e3 == pytest.approx(-0.05)


def test_monotone_statistics(rng=np.random.default_rng(2)):
    est = EstimatorState(0.7)
    prev = (est.V1, est.V2, est.t)
    for _ in range(200):
        est.record_step(
            float(rng.normal()), float(rng.normal()), int(rng.random() < 0.5),
            float(rng.normal()),
        )
        assert est.V1 >= prev[0]
        assert est.V2 >= prev[1]
        assert est.t == prev[2] + 1
        assert est.V1 + est.V2 >= 2 * est.lam
        prev = (est.V1, est.V2, est.t)


# --- confidence sets ------------------------------------------------------


def test_beta1_at_statistic_floor():
    # lam = 1, V1 = 1, delta -> 1: rate term vanishes, beta1 -> 1
    cs = initial_confidence_set(1.0, 1.0 - 1e-12, K_max=0.0)
    assert cs.A_radius == pytest.approx(1.0, abs=1e-5)


def test_beta3_quarter_log():
    est = replay([(1.0, 0.0, 0, 0.0)] * 4)
    est.refresh_estimates()
    cs = confidence_set(est, math.exp(-1.0), K_max=1.0)
    assert cs.p_radius == pytest.approx(0.5, abs=1e-12)


def test_beta2_couples_in_k_max():
    cs = initial_confidence_set(1.0, 1.0 - 1e-12, K_max=2.0)
    assert cs.B_radius == pytest.approx(3.0, abs=1e-5)


def test_degenerate_radius_flag():
    # lam*V/delta = lam^2/delta < 1 clamps the rate term and sets the flag
    cs = initial_confidence_set(0.5, 0.9, K_max=1.0)
    assert cs.degenerate
    assert cs.A_radius == pytest.approx(math.sqrt(0.5) / math.sqrt(0.5))


def test_radius_shrinks_when_statistic_doubles():
    lam, delta = 1.0, 0.1
    for v1 in (2.0, 8.0, 64.0, 1024.0):
        est_a = EstimatorState(lam)
        est_a.V1 = v1
        est_a.t = 10
        est_b = EstimatorState(lam)
        est_b.V1 = 2 * v1
        est_b.t = 10
        ra = confidence_set(est_a, delta, 1.0).A_radius
        rb = confidence_set(est_b, delta, 1.0).A_radius
        assert rb < ra


def test_membership_exact_interval_arithmetic():
    cs = initial_confidence_set(1.0, 0.5, K_max=1.0)
    r = cs.A_radius
    assert cs.contains(CandidateTheta(0.5 + r, 0.5, 0.5))  # boundary is inside
    assert not cs.contains(CandidateTheta(math.nextafter(0.5 + r, 10.0), 0.5, 0.5))


def test_p_interval_clipped_to_unit():
    est = replay([(1.0, 1.0, 1, 1.0)] * 3).refresh_estimates()  # p_hat = 1
    cs = confidence_set(est, 0.1, K_max=1.0)
    lo, hi = cs.p_interval()
    assert hi == 1.0
    assert cs.contains(CandidateTheta(cs.A_center, cs.B_center, 1.0))


def test_confidence_set_preconditions():
    est = EstimatorState(1.0)
    with pytest.raises(ValueError):
        confidence_set(est, 0.5, 1.0)  # no data yet
    est.record_step(1.0, 0.0, 0, 1.0)
    with pytest.raises(ValueError):
        confidence_set(est, 1.5, 1.0)
    with pytest.raises(ValueError):
        EstimatorState(0.0)
