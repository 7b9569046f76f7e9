"""Round-level mining probabilities for a tenure-based bilayer PoW protocol.

The protocol under study elects one leader per round through a header
proof-of-work; a round spans one leader tenure plus a fixed propagation
window, which is also the timeout after which honest miners restart the
election when a leader withholds its constructed block.  Header
discoveries across the whole network are modelled as a Poisson process
with per-round intensity ``lam``, split between an attacker pool holding a
fraction ``alpha`` of the total power and the honest remainder.  Within a
round only the first discovery per side matters (extra solutions confer no
additional height), so each side's round outcome is Bernoulli:

    p_attacker = 1 - exp(-alpha * lam)
    p_honest   = 1 - exp(-(1 - alpha) * lam)

Treating the two sides' discoveries as independent within a round yields
the four transition probabilities of the private-lead state machine:

    p0 = p_attacker * (1 - p_honest)    lead opens from state 0
    p1 = p_attacker * p_honest          both find; lead unchanged
    p2 = p_attacker * (1 - p_honest)    lead extends from state k >= 1
    p3 = (1 - p_attacker) * p_honest    honest side closes the lead by one

``p0`` and ``p2`` are the same per-round event seen from different states,
so this mapping always produces them equal; they are stored separately
because the state machine treats the two transitions as distinct.  The
leftover mass ``(1 - p_attacker) * (1 - p_honest)`` is the idle self-loop
and carries no name.

The Poisson split is the one modelling assumption added here on top of the
protocol parameters: proof-of-work inter-solution times are exponential,
so solution counts over a fixed tenure are Poisson and thin independently
by power share.  Everything downstream (stationary analysis, simulation,
sweeps) consumes only ``(alpha, lam, gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidParam

__all__ = [
    "MiningParams",
    "ProtocolParams",
    "RoundProbs",
    "TransitionProbs",
    "lambda_from_protocol",
    "round_success_probs",
    "derive_transition_probs",
    "apply_fix",
]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParam(message)


@dataclass(frozen=True)
class MiningParams:
    """Attack-model parameters.

    alpha: attacker's share of total mining power, in (0, 1).
    lam:   expected header discoveries network-wide per round, > 0.
    gamma: probability that the withheld branch wins a same-height fork
           race under the diversity tie-break, in [0, 1].  0.5 models an
           even race; 0 models a diversity rule that always prefers the
           public branch.
    """

    alpha: float
    lam: float
    gamma: float = 0.5

    def __post_init__(self) -> None:
        _require(math.isfinite(self.alpha) and 0.0 < self.alpha < 1.0,
                 f"alpha must be in (0, 1), got {self.alpha}")
        _require(math.isfinite(self.lam) and self.lam > 0.0,
                 f"lam must be positive, got {self.lam}")
        _require(math.isfinite(self.gamma) and 0.0 <= self.gamma <= 1.0,
                 f"gamma must be in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class ProtocolParams:
    """Deployable protocol knobs that determine the round intensity.

    tenure:     leader tenure length per round, seconds.
    difficulty: expected hashes per header solution.
    hashrate:   total network hashrate, hashes per second.
    """

    tenure: float
    difficulty: float
    hashrate: float

    def __post_init__(self) -> None:
        for name in ("tenure", "difficulty", "hashrate"):
            value = getattr(self, name)
            _require(math.isfinite(value) and value > 0.0,
                     f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class RoundProbs:
    """Per-round success probabilities of the two mining pools.

    Mathematically both probabilities are strictly below 1 for finite
    intensities; for very large ``alpha * lam`` the exponential saturates
    to 1.0 in floating point, which downstream code tolerates.
    """

    p_attacker: float
    p_honest: float

    def __post_init__(self) -> None:
        for name in ("p_attacker", "p_honest"):
            value = getattr(self, name)
            _require(0.0 <= value <= 1.0, f"{name} must be a probability, got {value}")


@dataclass(frozen=True)
class TransitionProbs:
    """The four named transition probabilities of the lead state machine.

    p0: from lead 0, attacker finds while honest side does not.
    p1: both sides find in the same round (lead unchanged).
    p2: from lead k >= 1, attacker finds while honest side does not.
    p3: honest side finds while attacker does not (lead shrinks).

    p1 + p2 + p3 must not exceed 1: they partition the outcomes of one
    round at lead >= 1 together with the unnamed idle event.  Stationarity
    additionally needs p2 < p3, which is checked at use sites rather than
    at construction.
    """

    p0: float
    p1: float
    p2: float
    p3: float

    def __post_init__(self) -> None:
        for name in ("p0", "p1", "p2", "p3"):
            value = getattr(self, name)
            _require(math.isfinite(value) and 0.0 <= value <= 1.0,
                     f"{name} must be a probability, got {value}")
        # 1e-12 slack absorbs float rounding of independently computed products.
        _require(self.p1 + self.p2 + self.p3 <= 1.0 + 1e-12,
                 f"p1 + p2 + p3 must not exceed 1, got {self.p1 + self.p2 + self.p3}")


def lambda_from_protocol(proto: ProtocolParams) -> float:
    """Expected header discoveries per round: tenure * hashrate / difficulty."""
    return proto.tenure * proto.hashrate / proto.difficulty


def round_success_probs(params: MiningParams) -> RoundProbs:
    """Probability that each side finds at least one header in a round."""
    return RoundProbs(
        p_attacker=-math.expm1(-params.alpha * params.lam),
        p_honest=-math.expm1(-(1.0 - params.alpha) * params.lam),
    )


def derive_transition_probs(params: MiningParams) -> TransitionProbs:
    """Map mining parameters to the lead machine's transition probabilities."""
    rp = round_success_probs(params)
    extend = rp.p_attacker * (1.0 - rp.p_honest)
    return TransitionProbs(
        p0=extend,
        p1=rp.p_attacker * rp.p_honest,
        p2=extend,
        p3=(1.0 - rp.p_attacker) * rp.p_honest,
    )


def apply_fix(params: MiningParams, header_multiplier: float) -> MiningParams:
    """Mitigation: publish several leader headers per round.

    Honest miners can then keep building on an alternative header when a
    leader withholds its block, so the withheld branch never gains free
    height and loses every same-height diversity race.  Modelled as
    multiplying the round intensity and forcing the tie-break to 0.
    """
    _require(math.isfinite(header_multiplier) and header_multiplier >= 1.0,
             f"header_multiplier must be >= 1, got {header_multiplier}")
    return replace(params, lam=params.lam * header_multiplier, gamma=0.0)
