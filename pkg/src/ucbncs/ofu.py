"""Episodic optimistic decision loop: triggers, parameter selection, control.

The learner freezes its parameter choice within episodes.  An episode ends
once either design statistic has doubled since the episode started or the
elapsed time has doubled, subject to a minimum episode length.  At each
boundary the new parameter is the cheapest-looking candidate on a uniform
grid over the intersection of the confidence set with the allowable box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import ConfidenceSet
from .jmls import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    CandidateTheta,
    CostWeights,
    JmlsSolution,
    solve_jmls,
    solve_jmls_grid,
)


class EmptyConfidenceIntersection(Exception):
    """Confidence set and allowable box share no usable grid candidate."""


@dataclass(frozen=True)
class ParameterBox:
    """Axis-aligned box of allowable parameters with a grid resolution."""

    A_range: tuple[float, float]
    B_range: tuple[float, float]
    p_range: tuple[float, float]
    grid_points_per_axis: int = 21

    def __post_init__(self):
        for name, (lo, hi) in (
            ("A_range", self.A_range),
            ("B_range", self.B_range),
            ("p_range", self.p_range),
        ):
            if lo > hi:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")
        p_lo, p_hi = self.p_range
        if p_lo < 0.0 or p_hi > 1.0:
            raise ValueError(f"p_range must lie within [0, 1], got {self.p_range}")
        if self.grid_points_per_axis < 2:
            raise ValueError(
                f"grid_points_per_axis must be >= 2, got {self.grid_points_per_axis}"
            )

    def grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Full box grid as flat candidate arrays, A-major ordering."""
        axes = [
            np.unique(np.linspace(lo, hi, self.grid_points_per_axis))
            for lo, hi in (self.A_range, self.B_range, self.p_range)
        ]
        Ag, Bg, pg = np.meshgrid(*axes, indexing="ij")
        return Ag.ravel(), Bg.ravel(), pg.ravel()


@dataclass
class EpisodeState:
    """Frozen decision state for one episode.

    tau is the episode start time, V1_star/V2_star the statistic snapshots
    taken at tau, L the minimum episode length, and active_theta/solution
    the optimistic parameter and its solved controller.
    """

    tau: int
    V1_star: float
    V2_star: float
    L: int
    active_theta: CandidateTheta
    active_solution: JmlsSolution
    episode_index: int = 1


def episode_trigger(V1: float, V2: float, episode: EpisodeState, t: int) -> bool:
    """True when a new episode must begin at time t.

    Fires when a statistic has doubled since the episode anchor or the time
    index has doubled, but never before the episode has lasted L slots.
    """
    if t - episode.tau < episode.L:
        return False
    return (
        V1 >= 2.0 * episode.V1_star
        or V2 >= 2.0 * episode.V2_star
        or t >= 2 * episode.tau
    )


def _intersect(interval: tuple[float, float], bounds: tuple[float, float]):
    lo = max(interval[0], bounds[0])
    hi = min(interval[1], bounds[1])
    return None if lo > hi else (lo, hi)


def ofu_select(
    cset: ConfidenceSet,
    box: ParameterBox,
    weights: CostWeights,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[CandidateTheta, JmlsSolution]:
    """Pick the grid candidate with the smallest achievable average cost.

    Each axis is the intersection of the confidence interval with the box
    interval, discretized uniformly (endpoints included).  Non-converged
    candidates rank as +inf; exact cost ties resolve to the lexicographically
    smallest (A, B, p) via the A-major grid ordering.  Raises
    EmptyConfidenceIntersection when some axis intersection is empty or no
    candidate has finite cost.
    """
    spans = []
    for interval, bounds, name in (
        (cset.A_interval(), box.A_range, "A"),
        (cset.B_interval(), box.B_range, "B"),
        (cset.p_interval(), box.p_range, "p"),
    ):
        span = _intersect(interval, bounds)
        if span is None:
            raise EmptyConfidenceIntersection(
                f"{name}-axis: confidence interval {interval} does not meet box {bounds}"
            )
        spans.append(span)

    axes = [
        np.unique(np.linspace(lo, hi, box.grid_points_per_axis)) for lo, hi in spans
    ]
    Ag, Bg, pg = (m.ravel() for m in np.meshgrid(*axes, indexing="ij"))
    _, _, _, J, _ = solve_jmls_grid(Ag, Bg, pg, weights, tol, max_iter)
    best = int(np.argmin(J))  # first minimum = lexicographically smallest
    if not np.isfinite(J[best]):
        raise EmptyConfidenceIntersection(
            "no candidate in the confidence/box intersection has finite cost"
        )
    theta = CandidateTheta(float(Ag[best]), float(Bg[best]), float(pg[best]))
    # Re-solve the winner with the scalar recursion so downstream consumers
    # (control, logs, singleton-box comparisons) see scalar-path arithmetic.
    solution = solve_jmls(theta, weights, tol, max_iter)
    return theta, solution


def control(episode: EpisodeState, x: float, ell: int) -> float:
    """Feedback input for state x given the observed channel state."""
    return episode.active_solution.K1 * x if ell else 0.0


def gain_sup(
    box: ParameterBox,
    weights: CostWeights,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Largest feedback-gain magnitude over the box grid (K_max).

    The dropped-mode gain is identically zero, so the supremum runs over the
    delivered-mode gains of converged candidates.  Raises when no candidate
    converges.
    """
    Ag, Bg, pg = box.grid()
    K1, _, _, _, conv = solve_jmls_grid(Ag, Bg, pg, weights, tol, max_iter)
    if not conv.any():
        raise ValueError("no candidate in the box has a convergent solution")
    return float(np.max(np.abs(K1[conv])))
