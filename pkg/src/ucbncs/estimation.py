"""Regularized least-squares identification of (A, B) and the channel rate.

The plant gain A is only identifiable from dropped slots (where the input
never acts) and the input gain B only from delivered slots, so the design
statistics split accordingly: V1 accumulates x^2 over drops, V2 accumulates
u^2 over deliveries, both ridge-regularized by lam.  Point estimates are
closed forms of the two ridge objectives; confidence radii follow the
self-normalized construction (log-over-statistic rates for A and B, a
sample-mean rate for p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .jmls import CandidateTheta


class EstimatorState:
    """Running sums, counters and point estimates for one simulation run.

    ``t`` counts recorded transitions.  Before any data the point estimates
    sit at the 0.5 initializers used at algorithm start; ``refresh_estimates``
    overwrites them from the recorded sums.  ``S_uu1_check`` mirrors V2 - lam
    and exists purely as a consistency check on the delivered-slot sums.
    """

    __slots__ = (
        "t",
        "lam",
        "V1",
        "V2",
        "S_zx0",
        "S_zu1",
        "S_xu1",
        "S_uu1_check",
        "ell_count",
        "A_hat",
        "B_hat",
        "p_hat",
    )

    def __init__(self, lam: float):
        if lam <= 0.0:
            raise ValueError(f"regularizer lam must be > 0, got {lam}")
        self.t = 0
        self.lam = lam
        self.V1 = lam
        self.V2 = lam
        self.S_zx0 = 0.0
        self.S_zu1 = 0.0
        self.S_xu1 = 0.0
        self.S_uu1_check = 0.0
        self.ell_count = 0
        self.A_hat = 0.5
        self.B_hat = 0.5
        self.p_hat = 0.5

    def record_step(self, x: float, u: float, ell: int, x_next: float) -> "EstimatorState":
        """Fold one transition (x, u, ell, x_next) into the running sums.

        Point estimates are not recomputed here; the decision loop refreshes
        them lazily at episode boundaries while the statistics advance every
        slot.  Returns self (updated in place).
        """
        if ell:
            uu = u * u
            self.V2 += uu
            self.S_uu1_check += uu
            self.S_zu1 += x_next * u
            self.S_xu1 += x * u
            self.ell_count += 1
        else:
            self.V1 += x * x
            self.S_zx0 += x_next * x
        self.t += 1
        return self

    def refresh_estimates(self) -> "EstimatorState":
        """Recompute (A_hat, B_hat, p_hat) from the recorded sums.

        A_hat = S_zx0 / V1 is the ridge minimizer over dropped slots;
        B_hat is the ridge minimizer over delivered slots evaluated at the
        freshly computed A_hat, which is why the z*u and x*u sums are kept
        separately.  Requires at least one recorded step.
        """
        if self.t < 1:
            raise ValueError("refresh_estimates requires at least one recorded step")
        self.p_hat = self.ell_count / self.t
        self.A_hat = self.S_zx0 / self.V1
        self.B_hat = (self.S_zu1 - self.A_hat * self.S_xu1) / self.V2
        return self

    def estimation_errors(self, truth: CandidateTheta) -> tuple[float, float, float]:
        """Signed errors (A_hat - A, B_hat - B, p_hat - p); diagnostic only."""
        return (
            self.A_hat - truth.A,
            self.B_hat - truth.B,
            self.p_hat - truth.p,
        )


@dataclass(frozen=True)
class ConfidenceSet:
    """Product of three symmetric intervals around the point estimates.

    ``degenerate`` flags that at least one log argument fell below 1 and the
    corresponding rate term was clamped to zero.  Membership tests are exact
    interval arithmetic; the p interval is clipped to [0, 1] first.
    """

    A_center: float
    A_radius: float
    B_center: float
    B_radius: float
    p_center: float
    p_radius: float
    delta: float
    degenerate: bool = False

    def A_interval(self) -> tuple[float, float]:
        return (self.A_center - self.A_radius, self.A_center + self.A_radius)

    def B_interval(self) -> tuple[float, float]:
        return (self.B_center - self.B_radius, self.B_center + self.B_radius)

    def p_interval(self) -> tuple[float, float]:
        return (
            max(0.0, self.p_center - self.p_radius),
            min(1.0, self.p_center + self.p_radius),
        )

    def contains(self, theta: CandidateTheta) -> bool:
        p_lo, p_hi = self.p_interval()
        return (
            abs(theta.A - self.A_center) <= self.A_radius
            and abs(theta.B - self.B_center) <= self.B_radius
            and p_lo <= theta.p <= p_hi
        )


def _gamma(lam: float, V: float, delta: float) -> tuple[float, bool]:
    """sqrt(log(lam*V/delta)), clamped to 0 when the argument is below 1."""
    arg = lam * V / delta
    if arg < 1.0:
        return 0.0, True
    return math.sqrt(math.log(arg)), False


def _build_set(
    V1: float,
    V2: float,
    t: int,
    lam: float,
    delta: float,
    k_max: float,
    A_center: float,
    B_center: float,
    p_center: float,
) -> ConfidenceSet:
    gamma1, deg1 = _gamma(lam, V1, delta)
    gamma2, deg2 = _gamma(lam, V2, delta)
    sqrt_lam = math.sqrt(lam)
    a_rate = (gamma1 + sqrt_lam) / math.sqrt(V1)
    beta1 = a_rate
    beta2 = (gamma2 + sqrt_lam) / math.sqrt(V2) + k_max * a_rate
    beta3 = math.sqrt(math.log(1.0 / delta) / t)
    return ConfidenceSet(
        A_center=A_center,
        A_radius=beta1,
        B_center=B_center,
        B_radius=beta2,
        p_center=p_center,
        p_radius=beta3,
        delta=delta,
        degenerate=deg1 or deg2,
    )


def confidence_set(state: EstimatorState, delta: float, K_max: float) -> ConfidenceSet:
    """Confidence intervals around the current point estimates.

    The caller is expected to have refreshed the estimates; the centers are
    whatever the state currently holds.  K_max (largest feedback gain over
    the allowable parameter set) couples the A uncertainty into the B radius.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if state.t < 1:
        raise ValueError("confidence_set requires at least one recorded step")
    return _build_set(
        state.V1,
        state.V2,
        state.t,
        state.lam,
        delta,
        K_max,
        state.A_hat,
        state.B_hat,
        state.p_hat,
    )


def initial_confidence_set(lam: float, delta: float, K_max: float) -> ConfidenceSet:
    """Confidence set at algorithm start, before any transition is recorded.

    Centers sit at the 0.5 initializers and the radii are evaluated at the
    statistic floor V1 = V2 = lam with time index 1, which is what the first
    optimistic parameter selection operates on.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return _build_set(lam, lam, 1, lam, delta, K_max, 0.5, 0.5, 0.5)
