"""Lossy-channel plant simulation, learning and oracle runners, regret.

A run is driven by two RNG substreams spawned deterministically from one
master seed: one for the Bernoulli channel, one for the process noise.
Because the streams are pre-drawn, swapping the controller under a fixed
seed leaves the channel and noise realizations untouched, so learning and
oracle runs can be compared pairwise (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimation import EstimatorState, confidence_set, initial_confidence_set
from .jmls import CandidateTheta, CostWeights, JmlsSolution, average_cost, solve_jmls
from .ofu import (
    EmptyConfidenceIntersection,
    EpisodeState,
    ParameterBox,
    episode_trigger,
    gain_sup,
    ofu_select,
)

NOISE_KINDS = ("gaussian", "truncated_gaussian", "uniform")
TRUNC_LIMIT = 3.0  # truncation point for truncated_gaussian, in raw std units

ESTIMATOR_TRACE_COLUMNS = (
    "t",
    "A_hat",
    "B_hat",
    "p_hat",
    "beta1",
    "beta2",
    "beta3",
    "V1",
    "V2",
)


@dataclass(frozen=True)
class SystemTruth:
    """True plant/channel parameters plus cost weights and initial state."""

    theta_star: CandidateTheta
    weights: CostWeights
    x0: float = 0.0
    noise_kind: str = "gaussian"

    def __post_init__(self):
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(
                f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}"
            )


@dataclass(frozen=True)
class AlgoConfig:
    """Tunables of the learning controller."""

    lam: float
    delta: float
    L: int
    alpha: float
    T: int
    box: ParameterBox

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.L < 1:
            raise ValueError(f"minimum episode length L must be >= 1, got {self.L}")
        if self.alpha <= 2.0:
            raise ValueError(f"alpha must be > 2, got {self.alpha}")
        if self.T < 1:
            raise ValueError(f"horizon T must be >= 1, got {self.T}")


@dataclass(frozen=True)
class EpisodeRecord:
    """One row of the episode log."""

    episode_index: int
    tau: int
    A: float
    B: float
    p: float
    J_selected: float


@dataclass
class TrajectoryRecord:
    """Complete per-step log of one simulated run."""

    controller: str
    seed: int
    T: int
    J_star: float
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    ell: np.ndarray
    w: np.ndarray
    cost: np.ndarray
    cum_cost: np.ndarray
    regret: np.ndarray
    v1_final: float
    v2_final: float
    episodes: list[EpisodeRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    max_episode_v1_ratio: float = math.nan
    estimator_trace: np.ndarray | None = None

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])

    @property
    def total_cost(self) -> float:
        return float(self.cum_cost[-1])

    @property
    def max_abs_x(self) -> float:
        return float(np.max(np.abs(self.x)))


def step_plant(x: float, u: float, ell: int, w: float, truth: SystemTruth) -> float:
    """One plant transition; the input only acts when the packet arrives."""
    th = truth.theta_star
    if ell:
        return th.A * x + th.B * u + w
    return th.A * x + w


def _truncated_std_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-variance samples of a +-TRUNC_LIMIT truncated standard normal."""
    z = rng.standard_normal(size)
    bad = np.abs(z) > TRUNC_LIMIT
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > TRUNC_LIMIT
    # Variance of a standard normal truncated to [-c, c], via erf.
    c = TRUNC_LIMIT
    phi_c = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
    mass = math.erf(c / math.sqrt(2.0))
    var = 1.0 - 2.0 * c * phi_c / mass
    return z / math.sqrt(var)


def draw_streams(truth: SystemTruth, T: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Pre-draw the channel and noise streams for one run.

    Returns (ell, w): T Bernoulli channel states as int8 and T mean-zero
    noise samples with variance sigma_w^2 from the configured family.
    """
    ss = np.random.SeedSequence(seed)
    ch_ss, noise_ss = ss.spawn(2)
    ch_rng = np.random.default_rng(ch_ss)
    noise_rng = np.random.default_rng(noise_ss)

    ell = (ch_rng.random(T) < truth.theta_star.p).astype(np.int8)
    sigma = truth.weights.sigma_w
    if truth.noise_kind == "gaussian":
        w = sigma * noise_rng.standard_normal(T)
    elif truth.noise_kind == "truncated_gaussian":
        w = sigma * _truncated_std_normal(noise_rng, T)
    else:  # uniform on [-a, a] with a = sigma*sqrt(3) for variance sigma^2
        a = sigma * math.sqrt(3.0)
        w = noise_rng.uniform(-a, a, T)
    return ell, w


def regret_of(record: TrajectoryRecord, J_star: float) -> np.ndarray:
    """Prefix regret series R(t) = sum_{s<=t} c(s) - t*J_star."""
    return np.cumsum(record.cost) - J_star * np.arange(1, record.T + 1, dtype=float)


def _solve_truth(truth: SystemTruth) -> tuple[JmlsSolution, float]:
    sol = solve_jmls(truth.theta_star, truth.weights)
    if not sol.converged:
        raise ValueError(
            "true parameters admit no convergent controller; cannot simulate"
        )
    return sol, average_cost(sol, truth.theta_star, truth.weights)


def run_oracle(
    truth: SystemTruth,
    T: int,
    seed: int,
    algo_config: AlgoConfig | None = None,
    trace_estimates: bool = False,
) -> TrajectoryRecord:
    """Simulate the known-parameter controller for T steps.

    Uses the same channel/noise streams a learning run would draw for this
    seed.  Pass algo_config with trace_estimates=True to also run the
    estimator alongside (diagnostics only; it never influences control).
    """
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    if trace_estimates and algo_config is None:
        raise ValueError("trace_estimates requires an algo_config")
    sol, J_star = _solve_truth(truth)
    ell_arr, w_arr = draw_streams(truth, T, seed)

    Q, R = truth.weights.Q, truth.weights.R
    K1 = sol.K1
    xs = np.empty(T)
    us = np.empty(T)
    costs = np.empty(T)

    est = EstimatorState(algo_config.lam) if trace_estimates else None
    k_max = gain_sup(algo_config.box, truth.weights) if trace_estimates else 0.0
    trace = np.empty((max(T - 1, 0), 9)) if trace_estimates else None

    x = truth.x0
    for i in range(T):
        ell = ell_arr[i]
        u = K1 * x if ell else 0.0
        xs[i] = x
        us[i] = u
        costs[i] = Q * x * x + R * u * u
        if i + 1 < T:
            w = w_arr[i]
            x_next = step_plant(x, u, ell, w, truth)
            if est is not None:
                est.record_step(x, u, ell, x_next)
                est.refresh_estimates()
                cs = confidence_set(est, algo_config.delta, k_max)
                trace[i] = (
                    est.t,
                    est.A_hat,
                    est.B_hat,
                    est.p_hat,
                    cs.A_radius,
                    cs.B_radius,
                    cs.p_radius,
                    est.V1,
                    est.V2,
                )
            x = x_next

    cum = np.cumsum(costs)
    regret = cum - J_star * np.arange(1, T + 1, dtype=float)
    return TrajectoryRecord(
        controller="oracle",
        seed=seed,
        T=T,
        J_star=J_star,
        t=np.arange(1, T + 1),
        x=xs,
        u=us,
        ell=ell_arr,
        w=w_arr,
        cost=costs,
        cum_cost=cum,
        regret=regret,
        v1_final=est.V1 if est is not None else math.nan,
        v2_final=est.V2 if est is not None else math.nan,
        episodes=[
            EpisodeRecord(
                1,
                1,
                truth.theta_star.A,
                truth.theta_star.B,
                truth.theta_star.p,
                J_star,
            )
        ],
        estimator_trace=trace,
    )


def run_ucb_ncs(
    truth: SystemTruth,
    algo_config: AlgoConfig,
    seed: int,
    trace_estimates: bool = False,
) -> TrajectoryRecord:
    """Simulate the optimistic learning controller for algo_config.T steps.

    Per slot: check the episode trigger, re-select the optimistic parameter
    at boundaries, apply the active mode-dependent gain, then fold the
    observed transition into the running statistics.  Off-nominal fallbacks
    (empty confidence/box intersection) keep the previous parameter and are
    noted in the record's warnings.
    """
    T = algo_config.T
    box = algo_config.box
    lam, delta, L = algo_config.lam, algo_config.delta, algo_config.L
    _, J_star = _solve_truth(truth)
    ell_arr, w_arr = draw_streams(truth, T, seed)

    Q, R = truth.weights.Q, truth.weights.R
    weights = truth.weights
    k_max = gain_sup(box, weights)

    est = EstimatorState(lam)
    theta0, sol0 = ofu_select(initial_confidence_set(lam, delta, k_max), box, weights)
    episode = EpisodeState(
        tau=1,
        V1_star=lam,
        V2_star=lam,
        L=L,
        active_theta=theta0,
        active_solution=sol0,
        episode_index=1,
    )
    episodes = [EpisodeRecord(1, 1, theta0.A, theta0.B, theta0.p, sol0.J)]
    warnings: list[str] = []

    xs = np.empty(T)
    us = np.empty(T)
    costs = np.empty(T)
    trace = np.empty((max(T - 1, 0), 9)) if trace_estimates else None

    x = truth.x0
    K1 = sol0.K1
    max_ratio = 1.0
    for i in range(T):
        t = i + 1
        ell = ell_arr[i]

        if episode_trigger(est.V1, est.V2, episode, t):
            est.refresh_estimates()
            cs = confidence_set(est, delta, k_max)
            try:
                theta, sol = ofu_select(cs, box, weights)
            except EmptyConfidenceIntersection:
                theta, sol = episode.active_theta, episode.active_solution
                warnings.append(
                    f"t={t}: empty confidence/box intersection, kept previous parameter"
                )
            episode = EpisodeState(
                tau=t,
                V1_star=est.V1,
                V2_star=est.V2,
                L=L,
                active_theta=theta,
                active_solution=sol,
                episode_index=episode.episode_index + 1,
            )
            episodes.append(
                EpisodeRecord(episode.episode_index, t, theta.A, theta.B, theta.p, sol.J)
            )
            K1 = sol.K1

        # est.V1 still holds V1(t) here, so this is the within-episode ratio.
        ratio = est.V1 / episode.V1_star
        if ratio > max_ratio:
            max_ratio = ratio

        u = K1 * x if ell else 0.0
        xs[i] = x
        us[i] = u
        costs[i] = Q * x * x + R * u * u
        if t < T:
            x_next = step_plant(x, u, ell, w_arr[i], truth)
            est.record_step(x, u, ell, x_next)
            if trace is not None:
                est.refresh_estimates()
                cs = confidence_set(est, delta, k_max)
                trace[i] = (
                    est.t,
                    est.A_hat,
                    est.B_hat,
                    est.p_hat,
                    cs.A_radius,
                    cs.B_radius,
                    cs.p_radius,
                    est.V1,
                    est.V2,
                )
            x = x_next

    cum = np.cumsum(costs)
    regret = cum - J_star * np.arange(1, T + 1, dtype=float)
    return TrajectoryRecord(
        controller="ucb",
        seed=seed,
        T=T,
        J_star=J_star,
        t=np.arange(1, T + 1),
        x=xs,
        u=us,
        ell=ell_arr,
        w=w_arr,
        cost=costs,
        cum_cost=cum,
        regret=regret,
        v1_final=est.V1,
        v2_final=est.V2,
        episodes=episodes,
        warnings=warnings,
        max_episode_v1_ratio=max_ratio,
        estimator_trace=trace,
    )
