"""Stationary analysis of the private-lead state machine and its revenue algebra.

For transition probabilities ``(p0, p1, p2, p3)`` the lead process is a
birth-death chain on the nonnegative integers: ``p0`` opens a lead from
state 0, ``p2`` extends an existing lead, ``p3`` shrinks it by one, and
all remaining mass is a self-loop.  When ``p2 < p3`` the chain is positive
recurrent with

    q0  = (p3 - p2) / (p3 - p2 + p0)
    q1  = (p0 / p3) * q0
    q_k = q1 * rho**(k - 1),   rho = p2 / p3,   k >= 1

satisfying the balance equations ``p0*q0 = p3*q1`` and
``p2*q_k = p3*q_{k+1}``.  If ``p2 >= p3`` the lead drifts upward - the
attacker out-mines the rest of the network - and no stationary
distribution exists (:class:`~selfishlab.errors.DivergentLead`).

Revenue is tallied per resolution event in units of one block reward:

* a same-height race at lead 1 pays the winner one reward; the withheld
  branch wins with probability ``gamma``,
* a collapse from lead 2 pays the attacker two rewards,
* each further step down from lead >= 3 pays the attacker one reward
  (the block is committed even though it is cashed in later).

In this stylized accounting honest miners are credited only for won
races, so the attacker's revenue share never falls below one half when
``gamma = 0.5``; profitability thresholds become informative for
``gamma < 0.5`` (or for the simulator's full ledger accounting, which also
credits honest blocks appended while no private branch exists).

``stationary_truncated_oracle`` is an independent numerical check: it
builds the explicit transition matrix truncated at a reflecting state K
and runs power iteration, so the closed forms above can be validated
without reusing their algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentLead, InvalidParam, NoConvergence
from .probmodel import MiningParams, TransitionProbs, derive_transition_probs

__all__ = [
    "TransitionProbs",
    "StationaryDist",
    "RevenueReport",
    "stationary",
    "q_at",
    "revenue_rates",
    "revenue_ratio",
    "is_profitable",
    "stationary_truncated_oracle",
]


@dataclass(frozen=True)
class StationaryDist:
    """Stationary distribution of the lead chain in closed form.

    q0 and q1 carry the first two states; every deeper state follows the
    geometric decay ``q_k = q1 * rho**(k-1)``.
    """

    q0: float
    q1: float
    rho: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.q0 <= 1.0 and 0.0 <= self.q1 <= 1.0):
            raise InvalidParam(f"q0 and q1 must be probabilities, got {self.q0}, {self.q1}")
        if not (0.0 <= self.rho < 1.0):
            raise InvalidParam(f"rho must be in [0, 1), got {self.rho}")
        total = self.q0 + (self.q1 / (1.0 - self.rho) if self.q1 else 0.0)
        if abs(total - 1.0) > 1e-9:
            raise InvalidParam(f"distribution does not normalize: total mass {total}")


@dataclass(frozen=True)
class RevenueReport:
    """Revenue rates per round (in block rewards) and the profitability verdict."""

    r_a: float
    r_b: float
    ratio: float
    profitable: bool


def stationary(probs: TransitionProbs) -> StationaryDist:
    """Solve the balance equations of the lead chain.

    Raises InvalidParam when p3 = 0 (the lead can never shrink) and
    DivergentLead when p2 >= p3.
    """
    if probs.p3 == 0.0:
        raise InvalidParam("p3 must be positive: the lead could never shrink")
    if probs.p2 >= probs.p3:
        raise DivergentLead(
            f"lead extension outpaces recovery (p2={probs.p2} >= p3={probs.p3}): "
            "attacker majority, no stationary lead distribution")
    gap = probs.p3 - probs.p2
    q0 = gap / (gap + probs.p0)
    return StationaryDist(q0=q0, q1=(probs.p0 / probs.p3) * q0, rho=probs.p2 / probs.p3)


def q_at(dist: StationaryDist, k: int) -> float:
    """Stationary probability of lead ``k``."""
    if k < 0:
        raise InvalidParam(f"state index must be nonnegative, got {k}")
    if k == 0:
        return dist.q0
    return dist.q1 * dist.rho ** (k - 1)


def revenue_rates(dist: StationaryDist, probs: TransitionProbs,
                  gamma: float) -> tuple[float, float]:
    """Per-round revenue rates (attacker, honest) in units of one reward.

    r_a = (gamma*q1 + 2*q2 + sum_{k>=3} q_k) * p3
    r_b = (1 - gamma) * q1 * p3

    with the tail evaluated in closed form as 1 - q0 - q1 - q2.
    """
    if not (math.isfinite(gamma) and 0.0 <= gamma <= 1.0):
        raise InvalidParam(f"gamma must be in [0, 1], got {gamma}")
    q2 = dist.q1 * dist.rho
    tail = max(0.0, 1.0 - dist.q0 - dist.q1 - q2)
    r_a = (gamma * dist.q1 + 2.0 * q2 + tail) * probs.p3
    r_b = (1.0 - gamma) * dist.q1 * probs.p3
    return r_a, r_b


def revenue_ratio(dist: StationaryDist, gamma: float) -> float:
    """Attacker's share of all counted revenue, r_a / (r_a + r_b).

    Evaluated in the closed form 1 - 2*(1-gamma)*q1 / (2 - 2*q0 + 2*q2),
    which the revenue rates reduce to after cancelling p3.  When the whole
    mass sits at lead 0 the share is 0/0; it is defined as 0 because no
    withheld block is ever published.
    """
    if not (math.isfinite(gamma) and 0.0 <= gamma <= 1.0):
        raise InvalidParam(f"gamma must be in [0, 1], got {gamma}")
    q2 = dist.q1 * dist.rho
    denominator = 2.0 - 2.0 * dist.q0 + 2.0 * q2
    if denominator <= 0.0:
        return 0.0
    return 1.0 - 2.0 * (1.0 - gamma) * dist.q1 / denominator


def is_profitable(params: MiningParams) -> RevenueReport:
    """Full analytic pipeline: params -> probabilities -> revenue verdict.

    Profitable means the attacker's revenue share exceeds its power share
    ``alpha``, i.e. withholding beats mining honestly.  Raises
    DivergentLead when alpha >= 1/2.
    """
    probs = derive_transition_probs(params)
    dist = stationary(probs)
    r_a, r_b = revenue_rates(dist, probs, params.gamma)
    ratio = revenue_ratio(dist, params.gamma)
    return RevenueReport(r_a=r_a, r_b=r_b, ratio=ratio,
                         profitable=ratio > params.alpha)


def _truncated_matrix(probs: TransitionProbs, K: int) -> np.ndarray:
    n = K + 1
    P = np.zeros((n, n))
    P[0, 1] = probs.p0
    P[0, 0] = 1.0 - probs.p0
    idx = np.arange(1, K)
    P[idx, idx + 1] = probs.p2
    P[idx, idx - 1] = probs.p3
    P[idx, idx] = 1.0 - probs.p2 - probs.p3
    # state K reflects: its upward mass joins the self-loop
    P[K, K - 1] = probs.p3
    P[K, K] = 1.0 - probs.p3
    return P


def stationary_truncated_oracle(probs: TransitionProbs, K: int, *,
                                tol: float = 1e-13,
                                max_doublings: int = 60) -> np.ndarray:
    """Stationary vector of the K-truncated lead chain by power iteration.

    Builds the explicit (K+1)-state transition matrix and iterates the
    half-lazy operator (I + P)/2, which shares the fixed point of P and is
    aperiodic for every input.  After each step the operator is squared,
    so the effective number of plain power-iteration steps doubles per
    loop; the fixed-point residual ``max_k |(vP)_k - v_k|`` is always
    measured against the original matrix and must drop below ``tol``.
    Raises NoConvergence if that does not happen within ``max_doublings``
    squarings (default 60, i.e. about 2**60 effective steps).

    The truncation error relative to the infinite chain is bounded by the
    geometric tail rho**K, so callers pick K from their target accuracy.
    """
    if K < 2:
        raise InvalidParam(f"K must be at least 2, got {K}")
    if probs.p3 == 0.0:
        raise InvalidParam("p3 must be positive: the lead could never shrink")
    if probs.p2 >= probs.p3:
        raise DivergentLead(
            f"lead extension outpaces recovery (p2={probs.p2} >= p3={probs.p3}): "
            "attacker majority, no stationary lead distribution")

    P = _truncated_matrix(probs, K)
    B = 0.5 * (P + np.eye(K + 1))
    v = np.full(K + 1, 1.0 / (K + 1))
    residual = math.inf
    for _ in range(max_doublings):
        v = v @ B
        v /= v.sum()
        residual = float(np.max(np.abs(v @ P - v)))
        if residual <= tol:
            # a small residual only bounds the error by residual / spectral
            # gap; keep applying the accumulated operator while it helps to
            # push the vector to its numerical floor
            for _ in range(8):
                candidate = v @ B
                candidate /= candidate.sum()
                polished = float(np.max(np.abs(candidate @ P - candidate)))
                if polished >= residual:
                    break
                v, residual = candidate, polished
            return v
        B = B @ B
        B /= B.sum(axis=1, keepdims=True)
    raise NoConvergence(
        f"power iteration residual {residual:.3e} above {tol:.1e} "
        f"after {max_doublings} doublings")
