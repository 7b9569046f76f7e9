import numpy as np
import pytest

from selfishlab.errors import DivergentLead, InvalidParam, NoConvergence
from selfishlab.markov import (
    StationaryDist,
    is_profitable,
    q_at,
    revenue_rates,
    revenue_ratio,
    stationary,
    stationary_truncated_oracle,
)
from selfishlab.probmodel import MiningParams, TransitionProbs

GOLDEN = TransitionProbs(p0=0.2, p1=0.1, p2=0.2, p3=0.4)


def test_stationary_golden_case():
    dist = stationary(GOLDEN)
    assert dist.q0 == pytest.approx(0.5, abs=1e-12)
    assert dist.q1 == pytest.approx(0.25, abs=1e-12)
    assert dist.rho == pytest.approx(0.5, abs=1e-12)
    assert q_at(dist, 2) == pytest.approx(0.125, abs=1e-12)
    assert q_at(dist, 3) == pytest.approx(0.0625, abs=1e-12)


def test_stationary_no_lead_without_openings():
    dist = stationary(TransitionProbs(p0=0.0, p1=0.1, p2=0.1, p3=0.4))
    assert dist.q0 == 1.0
    assert dist.q1 == 0.0


def test_stationary_divergent_boundary():
    with pytest.raises(DivergentLead):
        stationary(TransitionProbs(p0=0.2, p1=0.1, p2=0.4, p3=0.4))
    with pytest.raises(DivergentLead):
        stationary(TransitionProbs(p0=0.2, p1=0.1, p2=0.5, p3=0.4))


def test_stationary_requires_recovery():
    with pytest.raises(InvalidParam):
        stationary(TransitionProbs(p0=0.2, p1=0.1, p2=0.0, p3=0.0))


def test_q_at_definition_and_tail():
    dist = stationary(GOLDEN)
    assert q_at(dist, 0) == dist.q0
    assert q_at(dist, 1) == dist.q1
    assert q_at(dist, 60) <= 0.5 * 2.0 ** -59
    assert q_at(dist, 60) < 1e-15
    with pytest.raises(InvalidParam):
        q_at(dist, -1)


def test_revenue_rates_golden_case():
    dist = stationary(GOLDEN)
    r_a, r_b = revenue_rates(dist, GOLDEN, gamma=0.5)
    assert r_a == pytest.approx(0.2, abs=1e-12)
    assert r_b == pytest.approx(0.05, abs=1e-12)
    r_a0, r_b0 = revenue_rates(dist, GOLDEN, gamma=0.0)
    assert r_a0 == pytest.approx(0.15, abs=1e-12)
    assert r_b0 == pytest.approx(0.1, abs=1e-12)


def test_revenue_rates_zero_without_lead_mass():
    probs = TransitionProbs(p0=0.0, p1=0.1, p2=0.1, p3=0.4)
    dist = stationary(probs)
    assert revenue_rates(dist, probs, gamma=0.7) == (0.0, 0.0)


def test_revenue_ratio_golden_case():
    dist = stationary(GOLDEN)
    assert revenue_ratio(dist, 0.5) == pytest.approx(0.8, abs=1e-12)
    assert revenue_ratio(dist, 0.0) == pytest.approx(0.6, abs=1e-12)


def test_revenue_ratio_convention_at_degenerate_dist():
    dist = StationaryDist(q0=1.0, q1=0.0, rho=0.0)
    assert revenue_ratio(dist, 0.5) == 0.0
    assert revenue_ratio(dist, 0.0) == 0.0


def test_revenue_ratio_matches_rates(make_probs):
    rng = np.random.default_rng(5)
    for _ in range(2000):
        probs = make_probs(rng, rho_max=0.99)
        dist = stationary(probs)
        gamma = rng.uniform(0.0, 1.0)
        r_a, r_b = revenue_rates(dist, probs, gamma)
        ratio = revenue_ratio(dist, gamma)
        assert abs(ratio * (r_a + r_b) - r_a) <= 1e-12


def test_revenue_sum_identity(make_probs):
    rng = np.random.default_rng(6)
    for _ in range(2000):
        probs = make_probs(rng, rho_max=0.99)
        dist = stationary(probs)
        gamma = rng.uniform(0.0, 1.0)
        r_a, r_b = revenue_rates(dist, probs, gamma)
        q2 = dist.q1 * dist.rho
        assert abs((r_a + r_b) - (1.0 - dist.q0 + q2) * probs.p3) <= 1e-12


def test_revenue_ratio_lower_bound_even_tiebreak(make_probs):
    rng = np.random.default_rng(8)
    for _ in range(2000):
        dist = stationary(make_probs(rng, rho_max=0.99))
        assert revenue_ratio(dist, 0.5) >= 0.5


def test_revenue_ratio_monotone_in_tiebreak(make_probs):
    rng = np.random.default_rng(9)
    for _ in range(500):
        dist = stationary(make_probs(rng, rho_max=0.99))
        assert revenue_ratio(dist, 0.0) <= revenue_ratio(dist, 0.5) <= revenue_ratio(dist, 1.0)


def test_balance_and_normalization(make_probs):
    rng = np.random.default_rng(10)
    for _ in range(2000):
        probs = make_probs(rng, rho_max=0.99)
        dist = stationary(probs)
        assert abs(probs.p0 * dist.q0 - probs.p3 * dist.q1) <= 1e-12
        for k in range(1, 20):
            assert abs(probs.p2 * q_at(dist, k) - probs.p3 * q_at(dist, k + 1)) <= 1e-12
        assert abs(dist.q0 + dist.q1 / (1.0 - dist.rho) - 1.0) <= 1e-12


def test_is_profitable_reference_point():
    report = is_profitable(MiningParams(alpha=0.3, lam=1.0, gamma=0.5))
    assert report.ratio == pytest.approx(0.7329, abs=5e-5)
    assert report.ratio == pytest.approx(0.7329191907938145, rel=1e-12)
    assert report.profitable is True
    assert abs(report.ratio * (report.r_a + report.r_b) - report.r_a) <= 1e-12


def test_is_profitable_small_attacker_zero_tiebreak():
    report = is_profitable(MiningParams(alpha=0.15, lam=2.0, gamma=0.0))
    assert report.ratio == pytest.approx(0.1402, abs=5e-5)
    assert report.profitable is False


def test_is_profitable_rejects_majority():
    with pytest.raises(DivergentLead):
        is_profitable(MiningParams(alpha=0.5, lam=1.0, gamma=0.5))


def test_oracle_matches_golden_case():
    dist = stationary(GOLDEN)
    vector = stationary_truncated_oracle(GOLDEN, 64)
    linf = max(abs(vector[k] - q_at(dist, k)) for k in range(65))
    assert linf <= 1e-12


def test_oracle_degenerate_chain():
    probs = TransitionProbs(p0=0.0, p1=0.1, p2=0.1, p3=0.4)
    vector = stationary_truncated_oracle(probs, 8)
    assert vector[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(vector[1:] <= 1e-12)


def test_oracle_heavy_tail():
    probs = TransitionProbs(p0=0.3, p1=0.0, p2=0.36, p3=0.4)  # rho = 0.9
    dist = stationary(probs)
    vector = stationary_truncated_oracle(probs, 400)
    linf = max(abs(vector[k] - q_at(dist, k)) for k in range(401))
    assert linf <= 1e-10


def test_oracle_validation_and_convergence_errors():
    with pytest.raises(InvalidParam):
        stationary_truncated_oracle(GOLDEN, 1)
    with pytest.raises(InvalidParam):
        stationary_truncated_oracle(TransitionProbs(p0=0.2, p1=0.1, p2=0.0, p3=0.0), 8)
    with pytest.raises(DivergentLead):
        stationary_truncated_oracle(TransitionProbs(p0=0.2, p1=0.1, p2=0.4, p3=0.4), 8)
    with pytest.raises(NoConvergence):
        stationary_truncated_oracle(GOLDEN, 8, max_doublings=0)


def test_stationary_dist_validation():
    with pytest.raises(InvalidParam):
        StationaryDist(q0=0.5, q1=0.25, rho=1.0)
    with pytest.raises(InvalidParam):
        StationaryDist(q0=0.9, q1=0.5, rho=0.5)  # mass 1.9
    with pytest.raises(InvalidParam):
        StationaryDist(q0=-0.1, q1=0.5, rho=0.5)


def test_revenue_gamma_validation():
    dist = stationary(GOLDEN)
    with pytest.raises(InvalidParam):
        revenue_rates(dist, GOLDEN, gamma=1.5)
    with pytest.raises(InvalidParam):
        revenue_ratio(dist, gamma=-0.2)
