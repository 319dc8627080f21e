"""Analysis constants and Monte Carlo checks of the concentration events.

Everything here evaluates the quantities that appear in the regret
guarantee for a concrete scenario: the averaged log closed-loop gain and
its stability margin, suprema of gains/value coefficients over the
allowable box, the state bound g, episode-count bound f, within-episode
statistic-ratio bound h, the two regret components U1/U2, and the failure
probability budget.  check_events measures how often the corresponding
events actually fail in simulation.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from .jmls import CandidateTheta, CostWeights, solve_jmls_grid
from .ofu import ParameterBox
from .simulate import AlgoConfig, SystemTruth, run_oracle, run_ucb_ncs


def lyapunov_margin(truth: CandidateTheta, K1_of_candidate: float) -> float:
    """Averaged log gain of the switched loop a candidate's gain induces.

    The loop applies the candidate's delivered-mode gain on the true plant,
    so the channel average is p*log|A + B*K1| + (1-p)*log|A|.  A branch with
    zero gain and positive probability returns -inf (sentinel, not an error).
    """
    p = truth.p
    closed = abs(truth.A + truth.B * K1_of_candidate)
    open_ = abs(truth.A)
    if p > 0.0 and closed == 0.0:
        return -math.inf
    if p < 1.0 and open_ == 0.0:
        return -math.inf
    total = 0.0
    if p > 0.0:
        total += p * math.log(closed)
    if p < 1.0:
        total += (1.0 - p) * math.log(open_)
    return total


@dataclass(frozen=True)
class MarginReport:
    """Worst-case stability margin of a box against the true plant.

    Lambda_of_theta is the largest averaged log gain over the (converged)
    box grid; satisfied means it clears the configured margin eta plus slack
    epsilon.  L_min is the smallest minimum-episode-length consistent with
    the slack, ceil((2*alpha*p*(1-p)/epsilon^2)^2).
    """

    Lambda_of_theta: float
    eta: float
    epsilon: float
    satisfied: bool
    L_min: int


def margin_report(
    truth: SystemTruth,
    box: ParameterBox,
    eta: float,
    epsilon: float,
    alpha: float,
) -> MarginReport:
    """Check the margin condition over the box grid for a given scenario."""
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    Ag, Bg, pg = box.grid()
    K1, _, _, _, conv = solve_jmls_grid(Ag, Bg, pg, truth.weights)
    if not conv.any():
        raise ValueError("no candidate in the box has a convergent solution")
    th = truth.theta_star
    lam_worst = max(lyapunov_margin(th, float(k)) for k in K1[conv])
    sigma2_p = th.p * (1.0 - th.p)
    l_min = math.ceil((2.0 * alpha * sigma2_p / (epsilon * epsilon)) ** 2)
    return MarginReport(
        Lambda_of_theta=lam_worst,
        eta=eta,
        epsilon=epsilon,
        satisfied=lam_worst < -(eta + epsilon),
        L_min=l_min,
    )


def sup_over_box(
    box: ParameterBox, weights: CostWeights, truth: SystemTruth
) -> tuple[float, float, float]:
    """Suprema (K_max, P_max, G_cl_max) over the box grid.

    G_cl_max covers the open- and closed-loop branch gains under both the
    candidate and the true dynamics.  Candidates whose recursion diverges
    are excluded with a warning; all-diverged is an error.
    """
    Ag, Bg, pg = box.grid()
    K1, P0, P1, _, conv = solve_jmls_grid(Ag, Bg, pg, weights)
    if not conv.any():
        raise ValueError("no candidate in the box has a convergent solution")
    if not conv.all():
        _warnings.warn(
            f"{int((~conv).sum())} of {conv.size} box candidates diverged and "
            "were excluded from the suprema",
            RuntimeWarning,
            stacklevel=2,
        )
    A, B, k1 = Ag[conv], Bg[conv], K1[conv]
    k_max = float(np.max(np.abs(k1)))
    p_max = float(max(np.max(P0[conv]), np.max(P1[conv])))
    th = truth.theta_star
    g_cl = max(
        float(np.max(np.abs(A + B * k1))),
        abs(th.A),
        float(np.max(np.abs(th.A + th.B * k1))),
        float(np.max(np.abs(A))),
    )
    return k_max, p_max, g_cl


def g_state_bound(x0: float, delta: float, T: float, eta: float) -> float:
    """State magnitude bound |x0| + sqrt(log(T/delta)) / (1 - exp(-eta))."""
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta}")
    return abs(x0) + math.sqrt(math.log(T / delta)) / (1.0 - math.exp(-eta))


def f_episode_bound(T: float, g: float, K_max: float, lam: float) -> float:
    """Episode-count bound: doubling capacity of both statistics plus log T."""
    return (
        math.log(1.0 + T * g * g / lam)
        + math.log(1.0 + T * K_max * K_max * g * g / lam)
        + math.log(T)
    )


def h_ratio_bound(T: float, delta: float, L: float, eta: float, lam: float) -> float:
    """Within-episode statistic-ratio bound, never below 2."""
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta}")
    noise_term = math.sqrt(math.log(T / delta)) / (1.0 - math.exp(-eta))
    return max(1.0 + 2.0 * L * (1.0 + noise_term * noise_term / lam), 2.0)


@dataclass(frozen=True)
class BoundReport:
    """Evaluated analysis constants for one scenario.

    variant records whether the statistic-dependent terms in U2 used the
    a-priori proxy V_i(T) <= lam + T*g^2*max(1, K_max^2) or realized values
    supplied from a finished run.
    """

    eta: float
    epsilon: float
    g: float
    f: float
    h: float
    K_max: float
    P_max: float
    G_cl_max: float
    C1: float
    U1: float
    U2: float
    failure_budget: float
    assumption1_satisfied: bool
    variant: str = "apriori"
    L_min: int = 0

    def to_json_dict(self) -> dict:
        """Serialization with the fixed report schema."""
        return {
            "eta": self.eta,
            "epsilon": self.epsilon,
            "g": self.g,
            "f": self.f,
            "h": self.h,
            "K_max": self.K_max,
            "P_max": self.P_max,
            "G_cl_max": self.G_cl_max,
            "C1": self.C1,
            "U1": self.U1,
            "U2": self.U2,
            "failure_budget": self.failure_budget,
            "assumption1_satisfied": self.assumption1_satisfied,
        }


def _clamped_gamma(lam: float, V: float, delta: float) -> float:
    arg = lam * V / delta
    return math.sqrt(math.log(arg)) if arg >= 1.0 else 0.0


def bound_report(
    truth: SystemTruth,
    box: ParameterBox,
    *,
    delta: float,
    T: int,
    L: int,
    alpha: float,
    eta: float,
    epsilon: float,
    lam: float,
    v1_final: float | None = None,
    v2_final: float | None = None,
) -> BoundReport:
    """Evaluate every analysis constant for a scenario.

    With v1_final/v2_final supplied (realized end-of-run statistics) the U2
    term becomes the a-posteriori variant; otherwise the a-priori proxy
    bounds the statistics from the state bound.  assumption1_satisfied
    reports the margin check; the constants are computed either way so a
    failing scenario still gets a (flagged) report.
    """
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if (v1_final is None) != (v2_final is None):
        raise ValueError("supply both v1_final and v2_final or neither")
    margin = margin_report(truth, box, eta, epsilon, alpha)
    k_max, p_max, g_cl = sup_over_box(box, truth.weights, truth)

    g = g_state_bound(truth.x0, delta, T, eta)
    f = f_episode_bound(T, g, k_max, lam)
    h = h_ratio_bound(T, delta, L, eta, lam)
    log_T_delta = math.log(T / delta)

    U1 = math.sqrt(T * g * log_T_delta) + 2.0 * p_max * g * g + p_max * f * g

    C1 = 2.0 * math.sqrt(2.0) * p_max * (1.0 + k_max) * g_cl / lam
    if v1_final is None:
        proxy = lam + T * g * g * max(1.0, k_max * k_max)
        V1T, V2T = proxy, proxy
        variant = "apriori"
    else:
        V1T, V2T = v1_final, v2_final
        variant = "aposteriori"
    gamma1 = _clamped_gamma(lam, V1T, delta)
    gamma2 = _clamped_gamma(lam, V2T, delta)
    sigma2 = truth.weights.sigma_w * truth.weights.sigma_w
    U2 = C1 * math.sqrt(T) * math.log(V1T / lam) * (
        gamma1 + gamma2 + 2.0 * math.sqrt(lam)
    ) * math.sqrt(h) * g**1.5 + p_max * (g_cl * g_cl * g + sigma2) * math.sqrt(
        alpha * T * math.log(T)
    )

    failure_budget = 7.0 * delta + T * T / L**alpha
    return BoundReport(
        eta=eta,
        epsilon=epsilon,
        g=g,
        f=f,
        h=h,
        K_max=k_max,
        P_max=p_max,
        G_cl_max=g_cl,
        C1=C1,
        U1=U1,
        U2=U2,
        failure_budget=failure_budget,
        assumption1_satisfied=margin.satisfied,
        variant=variant,
        L_min=margin.L_min,
    )


@dataclass(frozen=True)
class EventCheckResult:
    """Empirical failure frequencies of the concentration events.

    Each frequency comes with its binomial standard error.  The noise event
    is reported against two thresholds: the literal sqrt(log(T/delta)) and
    the gaussian-calibrated sqrt(2*log(2T/delta)); the literal one
    under-covers for gaussian noise and both are shown side by side.
    """

    n_runs: int
    controller: str
    T: int
    delta: float
    alpha: float
    t1: int
    t2: int
    e_exit_freq: float
    e_exit_se: float
    h_exceed_literal_freq: float
    h_exceed_literal_se: float
    h_exceed_gauss_freq: float
    h_exceed_gauss_se: float
    j_exceed_freq: float
    j_exceed_se: float
    h_threshold_literal: float
    h_threshold_gauss: float
    j_threshold: float

    def to_json_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "controller": self.controller,
            "T": self.T,
            "delta": self.delta,
            "alpha": self.alpha,
            "t1": self.t1,
            "t2": self.t2,
            "e_exit_freq": self.e_exit_freq,
            "e_exit_se": self.e_exit_se,
            "h_exceed_literal_freq": self.h_exceed_literal_freq,
            "h_exceed_literal_se": self.h_exceed_literal_se,
            "h_exceed_gauss_freq": self.h_exceed_gauss_freq,
            "h_exceed_gauss_se": self.h_exceed_gauss_se,
            "j_exceed_freq": self.j_exceed_freq,
            "j_exceed_se": self.j_exceed_se,
            "h_threshold_literal": self.h_threshold_literal,
            "h_threshold_gauss": self.h_threshold_gauss,
            "j_threshold": self.j_threshold,
        }


def _binom_se(freq: float, n: int) -> float:
    return math.sqrt(freq * (1.0 - freq) / n)


def channel_deviation(ell: np.ndarray, t1: int, t2: int, p: float) -> float:
    """Partial-sum deviation of the channel stream over [t1, t2).

    Sum of ell(t1..t2-1) minus p*(t2-t1): t2-t1 terms, centered exactly, so
    a degenerate channel (p in {0, 1}) always deviates by zero.
    """
    if not 1 <= t1 < t2 <= len(ell) + 1:
        raise ValueError(f"need 1 <= t1 < t2 <= T+1, got t1={t1}, t2={t2}")
    return float(np.sum(ell[t1 - 1 : t2 - 1])) - p * (t2 - t1)


def j_threshold(t1: int, t2: int, p: float, alpha: float) -> float:
    """Allowed partial-sum deviation sqrt(2*alpha*p*(1-p)*d*log(d)), d=t2-t1."""
    d = t2 - t1
    sigma2 = p * (1.0 - p)
    return math.sqrt(2.0 * alpha * sigma2 * d * math.log(d)) if d > 1 else 0.0


def trace_exits_confidence(
    trace: np.ndarray, truth: CandidateTheta
) -> np.ndarray:
    """Per-step indicator that the truth fell outside the traced intervals."""
    a_hat, b_hat, p_hat = trace[:, 1], trace[:, 2], trace[:, 3]
    b1, b2, b3 = trace[:, 4], trace[:, 5], trace[:, 6]
    p_lo = np.maximum(0.0, p_hat - b3)
    p_hi = np.minimum(1.0, p_hat + b3)
    return (
        (np.abs(truth.A - a_hat) > b1)
        | (np.abs(truth.B - b_hat) > b2)
        | (truth.p < p_lo)
        | (truth.p > p_hi)
    )


def _event_flags_one(payload):
    """Worker: per-run event-failure flags (picklable for process fan-out)."""
    truth, algo_config, seed, controller, t1, t2, thr_literal, thr_gauss, thr_j = payload
    if controller == "oracle":
        rec = run_oracle(truth, algo_config.T, seed, algo_config, trace_estimates=True)
    else:
        rec = run_ucb_ncs(truth, algo_config, seed, trace_estimates=True)
    e = bool(trace_exits_confidence(rec.estimator_trace, truth.theta_star).any())
    w_max = float(np.max(np.abs(rec.w)))
    dev = channel_deviation(rec.ell, t1, t2, truth.theta_star.p)
    return seed, e, w_max > thr_literal, w_max > thr_gauss, abs(dev) > thr_j


def check_events(
    truth: SystemTruth,
    algo_config: AlgoConfig,
    n_runs: int,
    seed: int,
    controller: str = "oracle",
    t1: int = 1,
    t2: int | None = None,
    jobs: int = 1,
) -> EventCheckResult:
    """Monte Carlo frequencies of the concentration-event failures.

    Per run: whether the truth ever exits the confidence set along the
    estimator trace, whether any noise sample exceeds the bounded-noise
    thresholds, and whether the channel partial sum over the configured
    window [t1, t2) deviates past its allowance.  Runs use seeds
    seed..seed+n_runs-1 (fanned out across jobs processes when jobs > 1)
    and aggregate in seed order.
    """
    if n_runs < 100:
        raise ValueError(f"n_runs must be >= 100, got {n_runs}")
    if controller not in ("oracle", "ucb"):
        raise ValueError(f"controller must be 'oracle' or 'ucb', got {controller!r}")
    T = algo_config.T
    if t2 is None:
        t2 = min(T + 1, t1 + 400)
    if not 1 <= t1 < t2 <= T + 1:
        raise ValueError(f"need 1 <= t1 < t2 <= T+1, got t1={t1}, t2={t2}")

    delta = algo_config.delta
    p_star = truth.theta_star.p
    thr_literal = math.sqrt(math.log(T / delta))
    thr_gauss = math.sqrt(2.0 * math.log(2.0 * T / delta))
    thr_j = j_threshold(t1, t2, p_star, algo_config.alpha)

    payloads = [
        (truth, algo_config, s, controller, t1, t2, thr_literal, thr_gauss, thr_j)
        for s in range(seed, seed + n_runs)
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flags = list(pool.map(_event_flags_one, payloads))
    else:
        flags = [_event_flags_one(p) for p in payloads]
    flags.sort(key=lambda r: r[0])

    e_exits = sum(f[1] for f in flags)
    h_literal = sum(f[2] for f in flags)
    h_gauss = sum(f[3] for f in flags)
    j_fails = sum(f[4] for f in flags)

    fe = e_exits / n_runs
    fp = h_literal / n_runs
    fg = h_gauss / n_runs
    fj = j_fails / n_runs
    return EventCheckResult(
        n_runs=n_runs,
        controller=controller,
        T=T,
        delta=delta,
        alpha=algo_config.alpha,
        t1=t1,
        t2=t2,
        e_exit_freq=fe,
        e_exit_se=_binom_se(fe, n_runs),
        h_exceed_literal_freq=fp,
        h_exceed_literal_se=_binom_se(fp, n_runs),
        h_exceed_gauss_freq=fg,
        h_exceed_gauss_se=_binom_se(fg, n_runs),
        j_exceed_freq=fj,
        j_exceed_se=_binom_se(fj, n_runs),
        h_threshold_literal=thr_literal,
        h_threshold_gauss=thr_gauss,
        j_threshold=thr_j,
    )
