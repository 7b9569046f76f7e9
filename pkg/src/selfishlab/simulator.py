"""Seeded Monte Carlo simulation of the lead state machine at round granularity.

Each round draws two independent Bernoulli outcomes from the round
probabilities: does the attacker pool find a header, and does the honest
remainder find one.  The withheld branch's lead then evolves exactly as in
the analytic chain and revenue is credited at resolution events.

Transition and award rules, by lead ``s`` at the start of the round:

    s = 0   attacker only   -> s=1, a private branch opens, no award.
            both            -> s=0 (the block is published normally);
                               paper: no award; full: same-height race,
                               attacker wins one reward with probability
                               gamma, otherwise the honest side gains one.
            honest only     -> s=0; paper: no award; full: honest +1.
    s >= 1  attacker only   -> s+1, no award yet.
            both            -> s unchanged; both forks grow: the pending
                               private and public counters increment.
            honest only     -> the fork shrinks or resolves:
                s = 1  -> 0    tie race decided by gamma; paper: winner +1;
                               full: winner takes its whole pending fork.
                s = 2  -> 1    variant "decrement": attacker banks exactly
                               two rewards and the fork restarts at a fresh
                               one-block lead.  Variant "reset" (full
                               accounting only): s -> 0, the attacker banks
                               its entire pending private chain, the public
                               fork is discarded.
                s >= 3 -> s-1  paper: attacker banks one reward; full: no
                               award yet, the public fork counter grows.

"paper" is the stylized per-event accounting whose expectations match the
closed-form revenue rates in :mod:`selfishlab.markov`; it requires the
"decrement" variant because only that combination matches the balance
equations.  "full" is ledger-style accounting that pays whole forks at
resolution and also credits honest blocks produced while no private branch
exists, giving a realistic (lower) attacker share.

Determinism contract
--------------------
Rounds are partitioned into fixed chunks of ``CHUNK_ROUNDS``.  Chunk ``i``
uses its own PCG64 generator seeded with ``SeedSequence((seed, i))`` and
draws, in order, the attacker outcomes, the honest outcomes, and the
tie-break uniforms for its rounds.  Chunks are independent (each starts at
lead 0 with empty fork counters), so results are bit-identical however the
chunks are scheduled, and a run is reproducible from its ``SimConfig``
alone.  Chunks double as the batches for the batch-means standard error of
the revenue share (``ceil(rounds / CHUNK_ROUNDS)`` batches; the estimate
is 0 when there are fewer than two).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .markov import q_at, revenue_ratio, stationary
from .probmodel import MiningParams, derive_transition_probs, round_success_probs

__all__ = [
    "CHUNK_ROUNDS",
    "ACCOUNTING_MODES",
    "VARIANTS",
    "SimConfig",
    "SimResult",
    "ComparisonReport",
    "simulate",
    "compare_to_analytic",
]

CHUNK_ROUNDS = 50_000

ACCOUNTING_MODES = ("paper", "full")
VARIANTS = ("decrement", "reset")


@dataclass(frozen=True)
class SimConfig:
    """Immutable description of one simulation run."""

    params: MiningParams
    rounds: int
    seed: int
    accounting: str = "paper"
    variant: str = "decrement"

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise InvalidConfig(f"rounds must be >= 1, got {self.rounds}")
        if not (0 <= self.seed < 2 ** 64):
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.accounting not in ACCOUNTING_MODES:
            raise InvalidConfig(f"accounting must be one of {ACCOUNTING_MODES}, "
                                f"got {self.accounting!r}")
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.accounting == "paper" and self.variant == "reset":
            raise InvalidConfig("paper accounting requires the decrement variant; "
                                "no closed form corresponds to paper+reset")


@dataclass(frozen=True)
class SimResult:
    """Accumulated statistics of a simulation run.

    occupancy[k] is the fraction of rounds that started at lead k, for
    k from 0 up to the largest lead observed.
    """

    rounds_run: int
    revenue_a: float
    revenue_b: float
    ratio: float
    ratio_stderr: float
    occupancy: tuple[float, ...]


@dataclass(frozen=True)
class ComparisonReport:
    """Simulation vs closed form: share estimates, z-score, occupancy gap."""

    ratio_mc: float
    ratio_analytic: float
    z_score: float
    occupancy_linf: float


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def _chunk_paper_vectorized(a: np.ndarray, b: np.ndarray, tie: np.ndarray,
                            gamma: float) -> tuple[float, float, np.ndarray]:
    """Closed-path evaluation of paper accounting with the decrement variant.

    The lead follows the reflected-walk recursion s_t = max(0, s_{t-1} + x_t)
    with x = +1 on attacker-only rounds and -1 on honest-only rounds, which
    unrolls to a cumulative sum minus its running minimum.
    """
    up = a & ~b
    down = ~a & b
    x = up.astype(np.int64) - down.astype(np.int64)
    walk = np.cumsum(x)
    reflected = walk - np.minimum.accumulate(np.minimum(walk, 0))
    s_before = np.empty(len(a), dtype=np.int64)
    s_before[0] = 0
    s_before[1:] = reflected[:-1]

    tie_events = down & (s_before == 1)
    collapses = down & (s_before == 2)
    descents = down & (s_before >= 3)
    attacker_wins = tie_events & (tie < gamma)

    revenue_a = 2.0 * int(collapses.sum()) + int(descents.sum()) + int(attacker_wins.sum())
    revenue_b = float(int(tie_events.sum()) - int(attacker_wins.sum()))
    return revenue_a, revenue_b, np.bincount(s_before)


def _chunk_loop(a: np.ndarray, b: np.ndarray, tie: np.ndarray, gamma: float,
                accounting: str, variant: str) -> tuple[float, float, np.ndarray]:
    """Reference per-round loop; handles every accounting/variant combination."""
    full = accounting == "full"
    reset = variant == "reset"
    codes = (a.astype(np.int8) * 2 + b.astype(np.int8)).tolist()  # 2 up, 3 both, 1 down
    ties = tie.tolist()

    lead = 0
    pending_private = 0  # unpublished attacker blocks on the current fork
    pending_public = 0   # contested honest blocks on the current fork
    revenue_a = 0.0
    revenue_b = 0.0
    occupancy = [0] * 8

    for t, code in enumerate(codes):
        if lead >= len(occupancy):
            occupancy.extend([0] * (lead + 1 - len(occupancy)))
        occupancy[lead] += 1

        if lead == 0:
            if code == 2:
                lead, pending_private, pending_public = 1, 1, 0
            elif code == 3:
                if full:
                    if ties[t] < gamma:
                        revenue_a += 1.0
                    else:
                        revenue_b += 1.0
            elif code == 1 and full:
                revenue_b += 1.0
        else:
            if code == 2:
                lead += 1
                pending_private += 1
            elif code == 3:
                pending_private += 1
                pending_public += 1
            elif code == 1:
                if lead == 1:
                    pending_public += 1
                    if ties[t] < gamma:
                        revenue_a += float(pending_private) if full else 1.0
                    else:
                        revenue_b += float(pending_public) if full else 1.0
                    lead, pending_private, pending_public = 0, 0, 0
                elif lead == 2:
                    if reset:
                        revenue_a += float(pending_private)
                        lead, pending_private, pending_public = 0, 0, 0
                    else:
                        revenue_a += 2.0
                        lead, pending_private, pending_public = 1, 1, 0
                else:
                    lead -= 1
                    pending_public += 1
                    if not full:
                        revenue_a += 1.0

    while len(occupancy) > 1 and occupancy[-1] == 0:
        occupancy.pop()
    return revenue_a, revenue_b, np.asarray(occupancy, dtype=np.int64)


def _simulate_chunk(p_attacker: float, p_honest: float, gamma: float,
                    accounting: str, variant: str, seed: int, index: int,
                    rounds: int, force_loop: bool = False
                    ) -> tuple[float, float, np.ndarray]:
    """One independent chunk: (revenue_a, revenue_b, occupancy counts)."""
    rng = _chunk_rng(seed, index)
    a = rng.random(rounds) < p_attacker
    b = rng.random(rounds) < p_honest
    tie = rng.random(rounds)
    if accounting == "paper" and variant == "decrement" and not force_loop:
        return _chunk_paper_vectorized(a, b, tie, gamma)
    return _chunk_loop(a, b, tie, gamma, accounting, variant)


def simulate(config: SimConfig, *, workers: int = 1) -> SimResult:
    """Run the configured number of rounds and accumulate statistics.

    ``workers`` only selects how the independent chunks are executed; the
    merged result is bit-identical for any worker count.
    """
    if config.params.alpha >= 0.5:
        raise InvalidConfig(f"alpha must be below 0.5 for a stable lead, "
                            f"got {config.params.alpha}")
    rp = round_success_probs(config.params)
    gamma = config.params.gamma

    sizes = [CHUNK_ROUNDS] * (config.rounds // CHUNK_ROUNDS)
    if config.rounds % CHUNK_ROUNDS:
        sizes.append(config.rounds % CHUNK_ROUNDS)

    def run_chunk(index: int) -> tuple[float, float, np.ndarray]:
        return _simulate_chunk(rp.p_attacker, rp.p_honest, gamma,
                               config.accounting, config.variant,
                               config.seed, index, sizes[index])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunk_stats = list(pool.map(run_chunk, range(len(sizes))))
    else:
        chunk_stats = [run_chunk(i) for i in range(len(sizes))]

    revenue_a = sum(stats[0] for stats in chunk_stats)
    revenue_b = sum(stats[1] for stats in chunk_stats)

    width = max(len(stats[2]) for stats in chunk_stats)
    counts = np.zeros(width, dtype=np.int64)
    for stats in chunk_stats:
        counts[:len(stats[2])] += stats[2]

    total = revenue_a + revenue_b
    ratio = revenue_a / total if total > 0.0 else 0.0

    batch_ratios = [ra / (ra + rb) if ra + rb > 0.0 else 0.0
                    for ra, rb, _ in chunk_stats]
    if len(batch_ratios) >= 2:
        spread = np.std(batch_ratios, ddof=1)
        stderr = float(spread / math.sqrt(len(batch_ratios)))
    else:
        stderr = 0.0

    return SimResult(
        rounds_run=config.rounds,
        revenue_a=float(revenue_a),
        revenue_b=float(revenue_b),
        ratio=float(ratio),
        ratio_stderr=stderr,
        occupancy=tuple((counts / config.rounds).tolist()),
    )


def compare_to_analytic(config: SimConfig, *, workers: int = 1) -> ComparisonReport:
    """Run a paper-accounting simulation and compare it to the closed form.

    The z-score normalizes the share discrepancy by the batch-means
    standard error; it is 0 when both estimate and target coincide with a
    zero standard error, and infinite when only the standard error is zero.
    """
    if config.accounting != "paper":
        raise InvalidConfig("analytic comparison is defined for paper accounting only")
    result = simulate(config, workers=workers)

    dist = stationary(derive_transition_probs(config.params))
    analytic = revenue_ratio(dist, config.params.gamma)

    difference = result.ratio - analytic
    if result.ratio_stderr > 0.0:
        z_score = difference / result.ratio_stderr
    elif difference == 0.0:
        z_score = 0.0
    else:
        z_score = math.copysign(math.inf, difference)

    states = max(len(result.occupancy), 11)
    occupancy_linf = max(
        abs((result.occupancy[k] if k < len(result.occupancy) else 0.0) - q_at(dist, k))
        for k in range(states))

    return ComparisonReport(ratio_mc=result.ratio, ratio_analytic=analytic,
                            z_score=z_score, occupancy_linf=occupancy_linf)
