"""Optimal control of the scalar two-mode jump linear system.

The plant switches between an actuated mode (input delivered) and an
unactuated mode (input dropped) according to an i.i.d. Bernoulli channel
with reliability p.  For a candidate parameter triple (A, B, p) the
infinite-horizon average-cost problem has a piecewise-quadratic value
function with one coefficient per channel mode; this module computes those
coefficients, the mode-dependent feedback gains, and the optimal average
cost per step via value iteration on the coupled scalar Riccati recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
DIVERGENCE_CEILING = 1e12


@dataclass(frozen=True)
class CandidateTheta:
    """Parameter triple: plant gain A, input gain B, channel reliability p."""

    A: float
    B: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise ValueError(f"A and B must be finite, got A={self.A}, B={self.B}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"channel reliability p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class CostWeights:
    """Quadratic stage-cost weights and process-noise standard deviation."""

    Q: float
    R: float
    sigma_w: float = 1.0

    def __post_init__(self):
        if self.Q < 0.0:
            raise ValueError(f"state weight Q must be >= 0, got {self.Q}")
        if self.R <= 0.0:
            raise ValueError(f"control weight R must be > 0, got {self.R}")
        if self.sigma_w < 0.0:
            raise ValueError(f"noise level sigma_w must be >= 0, got {self.sigma_w}")


@dataclass(frozen=True)
class JmlsSolution:
    """Fixed point of the coupled Riccati recursion for one candidate.

    K0 is identically zero: the input never reaches the plant in the dropped
    mode while R > 0 still charges u^2, so any nonzero input is pure cost.
    A non-converged solution carries J = +inf so that optimistic search can
    rank unstabilizable candidates last instead of raising.
    """

    K0: float
    K1: float
    P0: float
    P1: float
    J: float
    residual: float
    converged: bool


def solve_jmls(
    theta: CandidateTheta,
    weights: CostWeights,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> JmlsSolution:
    """Value-iterate the coupled scalar Riccati recursion from P0 = P1 = Q.

    Each sweep computes the channel-averaged coefficient
    Pbar = p*P1 + (1-p)*P0 and updates

        P1 <- Q + A^2*Pbar - (A*B*Pbar)^2 / (R + B^2*Pbar)
        P0 <- Q + A^2*Pbar

    The recursion is monotone from Q, so it either converges (successive
    max-change < tol) or grows past DIVERGENCE_CEILING, which we declare a
    divergence.  Exhausting max_iter is likewise reported as non-converged.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    A, B, p = theta.A, theta.B, theta.p
    Q, R = weights.Q, weights.R

    P0 = Q
    P1 = Q
    converged = False
    change = math.inf
    for _ in range(max_iter):
        Pbar = p * P1 + (1.0 - p) * P0
        denom = R + B * B * Pbar
        cross = A * B * Pbar
        P1_next = Q + A * A * Pbar - cross * cross / denom
        P0_next = Q + A * A * Pbar
        change = max(abs(P1_next - P1), abs(P0_next - P0))
        P0, P1 = P0_next, P1_next
        if P0 > DIVERGENCE_CEILING or P1 > DIVERGENCE_CEILING:
            converged = False
            break
        if change < tol:
            converged = True
            break

    Pbar = p * P1 + (1.0 - p) * P0
    K1 = -(A * B * Pbar) / (R + B * B * Pbar)
    J = weights.sigma_w * weights.sigma_w * Pbar if converged else math.inf
    return JmlsSolution(
        K0=0.0, K1=K1, P0=P0, P1=P1, J=J, residual=change, converged=converged
    )


def solve_jmls_grid(
    A: np.ndarray,
    B: np.ndarray,
    p: np.ndarray,
    weights: CostWeights,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
):
    """Vectorized counterpart of :func:`solve_jmls` over candidate arrays.

    Runs the identical recursion (same update order and termination rules)
    on all candidates at once; candidates that converge or diverge drop out
    of the active set so a few slow ones do not cost full-width sweeps.

    Returns arrays (K1, P0, P1, J, converged) aligned with the inputs.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    n = A.shape[0]
    Q, R = weights.Q, weights.R
    sig2 = weights.sigma_w * weights.sigma_w

    P0_out = np.full(n, Q)
    P1_out = np.full(n, Q)
    converged_out = np.zeros(n, dtype=bool)

    idx = np.arange(n)
    a, b, pr = A.copy(), B.copy(), p.copy()
    P0 = np.full(n, float(Q))
    P1 = np.full(n, float(Q))

    iters = 0
    while iters < max_iter and idx.size:
        Pbar = pr * P1 + (1.0 - pr) * P0
        denom = R + b * b * Pbar
        cross = a * b * Pbar
        P1_next = Q + a * a * Pbar - cross * cross / denom
        P0_next = Q + a * a * Pbar
        change = np.maximum(np.abs(P1_next - P1), np.abs(P0_next - P0))
        P0, P1 = P0_next, P1_next
        iters += 1

        over = (P0 > DIVERGENCE_CEILING) | (P1 > DIVERGENCE_CEILING)
        conv = (change < tol) & ~over
        done = conv | over
        if done.any():
            P0_out[idx[done]] = P0[done]
            P1_out[idx[done]] = P1[done]
            converged_out[idx[conv]] = True
            keep = ~done
            idx = idx[keep]
            a, b, pr = a[keep], b[keep], pr[keep]
            P0, P1 = P0[keep], P1[keep]

    # Survivors hit max_iter: record last iterates, leave converged False.
    if idx.size:
        P0_out[idx] = P0
        P1_out[idx] = P1

    Pbar = p * P1_out + (1.0 - p) * P0_out
    K1 = -(A * B * Pbar) / (R + B * B * Pbar)
    J = np.where(converged_out, sig2 * Pbar, np.inf)
    return K1, P0_out, P1_out, J, converged_out


def average_cost(
    solution: JmlsSolution, theta: CandidateTheta, weights: CostWeights
) -> float:
    """Optimal average cost per step, sigma_w^2 * (p*P1 + (1-p)*P0).

    Returns +inf for a non-converged solution (sentinel, never raises).
    """
    if not solution.converged:
        return math.inf
    pbar = theta.p * solution.P1 + (1.0 - theta.p) * solution.P0
    return weights.sigma_w * weights.sigma_w * pbar
