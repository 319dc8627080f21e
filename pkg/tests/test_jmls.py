import math

import numpy as np
import pytest

from ucbncs.jmls import (
    CandidateTheta,
    CostWeights,
    average_cost,
    solve_jmls,
    solve_jmls_grid,
)


def quadratic_root_pbar(A, B, p, Q, R):
    """Independent oracle: positive root of the fixed-point quadratic.

    Eliminating P0 and P1 from the coupled recursion leaves
    B^2*(1 - (1-p)*A^2) * Pbar^2 + (R - Q*B^2 - A^2*R) * Pbar - Q*R = 0
    for the channel-averaged coefficient Pbar = p*P1 + (1-p)*P0.
    """
    a = B * B * (1.0 - (1.0 - p) * A * A)
    b = R - Q * B * B - A * A * R
    c = -Q * R
    if a == 0.0:
        return -c / b
    return (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)


def lqr_root(A, B, Q, R):
    """p=1 specialization: the scalar algebraic Riccati equation root."""
    return quadratic_root_pbar(A, B, 1.0, Q, R)


W11 = CostWeights(Q=1.0, R=1.0, sigma_w=1.0)


def test_p1_example_matches_quadratic_root():
    sol = solve_jmls(CandidateTheta(0.5, 1.0, 1.0), W11)
    P = lqr_root(0.5, 1.0, 1.0, 1.0)
    # fixed point of P^2 - 0.25P - 1 = 0
    assert abs(P * P - 0.25 * P - 1.0) < 1e-12
    assert sol.converged
    assert sol.P1 == pytest.approx(P, rel=1e-8)
    assert sol.K1 == pytest.approx(-0.5 * P / (1.0 + P), rel=1e-8)
    assert sol.K0 == 0.0


def test_p0_example_geometric_fixed_point():
    theta = CandidateTheta(0.5, 1.0, 0.0)
    sol = solve_jmls(theta, W11, tol=1e-13)
    assert sol.converged
    assert sol.P0 == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert sol.J == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert average_cost(sol, theta, W11) == pytest.approx(4.0 / 3.0, abs=1e-10)


def test_zero_input_gain_removes_control():
    sol = solve_jmls(CandidateTheta(0.5, 0.0, 0.7), W11, tol=1e-13)
    assert sol.converged
    assert sol.K1 == 0.0
    assert sol.P0 == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert sol.P1 == pytest.approx(4.0 / 3.0, abs=1e-10)


def test_p1_reduction_random(rng=np.random.default_rng(7)):
    for _ in range(100):
        A = rng.uniform(-2.0, 2.0)
        B = rng.uniform(0.1, 2.0) * rng.choice([-1.0, 1.0])
        Q = rng.uniform(0.1, 5.0)
        R = rng.uniform(0.1, 5.0)
        sol = solve_jmls(CandidateTheta(A, B, 1.0), CostWeights(Q, R, 1.0))
        assert sol.converged
        assert abs(sol.P1 - lqr_root(A, B, Q, R)) < 10 * 1e-10


def test_general_p_fixed_point_vs_quadratic(rng=np.random.default_rng(11)):
    for _ in range(50):
        p = rng.uniform(0.05, 0.95)
        A = rng.uniform(-1.5, 1.5)
        if (1.0 - p) * A * A >= 0.95:  # keep clearly stabilizable
            A = 0.9 / math.sqrt(1.0 - p) * np.sign(A) * rng.uniform(0.2, 0.9)
        B = rng.uniform(0.2, 2.0)
        Q = rng.uniform(0.1, 4.0)
        R = rng.uniform(0.1, 4.0)
        theta = CandidateTheta(float(A), float(B), float(p))
        sol = solve_jmls(theta, CostWeights(Q, R, 1.0), tol=1e-12)
        assert sol.converged
        pbar = p * sol.P1 + (1.0 - p) * sol.P0
        assert pbar == pytest.approx(quadratic_root_pbar(A, B, p, Q, R), rel=1e-8)


def test_fixed_point_residual_contract():
    for theta in (
        CandidateTheta(0.5, 1.0, 1.0),
        CandidateTheta(0.9, 0.7, 0.4),
        CandidateTheta(1.2, 1.0, 0.9),
    ):
        tol = 1e-10
        sol = solve_jmls(theta, W11, tol=tol)
        assert sol.converged
        assert sol.residual < tol
        # plugging the solution back changes each coefficient by < tol
        pbar = theta.p * sol.P1 + (1.0 - theta.p) * sol.P0
        denom = W11.R + theta.B**2 * pbar
        cross = theta.A * theta.B * pbar
        P1_next = W11.Q + theta.A**2 * pbar - cross * cross / denom
        P0_next = W11.Q + theta.A**2 * pbar
        assert abs(P1_next - sol.P1) < tol
        assert abs(P0_next - sol.P0) < tol


def test_cost_non_increasing_in_p():
    for A, B in ((0.5, 1.0), (0.9, 0.7), (-0.8, 1.5)):
        costs = []
        for p in np.linspace(0.0, 1.0, 11):
            theta = CandidateTheta(A, B, float(p))
            sol = solve_jmls(theta, W11)
            assert sol.converged
            costs.append(average_cost(sol, theta, W11))
        diffs = np.diff(costs)
        assert (diffs <= 1e-9).all()


def test_k0_identically_zero(rng=np.random.default_rng(3)):
    for _ in range(20):
        theta = CandidateTheta(
            rng.uniform(-0.9, 0.9), rng.uniform(-2, 2), rng.uniform(0, 1)
        )
        assert solve_jmls(theta, W11).K0 == 0.0


def test_joint_cost_scaling():
    theta = CandidateTheta(1.1, 0.9, 0.8)
    c = 3.7
    base = solve_jmls(theta, CostWeights(1.0, 2.0, 1.3))
    scaled = solve_jmls(theta, CostWeights(c * 1.0, c * 2.0, 1.3))
    assert scaled.P0 == pytest.approx(c * base.P0, rel=1e-9)
    assert scaled.P1 == pytest.approx(c * base.P1, rel=1e-9)
    assert scaled.J == pytest.approx(c * base.J, rel=1e-9)
    assert scaled.K1 == pytest.approx(base.K1, rel=1e-9)
    assert scaled.K0 == base.K0 == 0.0


def test_divergence_yields_infinite_cost_sentinel():
    theta = CandidateTheta(2.0, 1.0, 0.0)  # unactuated growth factor 4 > 1
    sol = solve_jmls(theta, W11)
    assert not sol.converged
    assert sol.J == math.inf
    assert average_cost(sol, theta, W11) == math.inf


def test_sigma_zero_means_zero_cost():
    theta = CandidateTheta(0.5, 1.0, 0.6)
    w = CostWeights(1.0, 1.0, 0.0)
    sol = solve_jmls(theta, w)
    assert sol.converged
    assert average_cost(sol, theta, w) == 0.0


def test_grid_matches_scalar(rng=np.random.default_rng(5)):
    A = rng.uniform(-2.2, 2.2, 60)
    B = rng.uniform(-1.5, 1.5, 60)
    p = rng.uniform(0.0, 1.0, 60)
    K1g, P0g, P1g, Jg, convg = solve_jmls_grid(A, B, p, W11)
    for i in range(60):
        sol = solve_jmls(CandidateTheta(A[i], B[i], p[i]), W11)
        assert convg[i] == sol.converged
        assert P0g[i] == sol.P0
        assert P1g[i] == sol.P1
        assert K1g[i] == sol.K1
        assert Jg[i] == sol.J


def test_input_validation():
    with pytest.raises(ValueError):
        CandidateTheta(1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        CandidateTheta(math.inf, 1.0, 0.5)
    with pytest.raises(ValueError):
        CostWeights(Q=-1.0, R=1.0)
    with pytest.raises(ValueError):
        CostWeights(Q=1.0, R=0.0)
    with pytest.raises(ValueError):
        CostWeights(Q=1.0, R=1.0, sigma_w=-0.1)
    theta = CandidateTheta(0.5, 1.0, 0.5)
    with pytest.raises(ValueError):
        solve_jmls(theta, W11, tol=0.0)
    with pytest.raises(ValueError):
        solve_jmls(theta, W11, max_iter=0)
