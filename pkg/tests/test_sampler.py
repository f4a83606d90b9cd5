import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dense import correlation_matrix, gaussian_to_dense, ghz3, pauli_matrix, DenseState
from errors import BudgetOverflow, InputError, InvalidMatching
from gaussian import product_state, vacuum
from sampler import (
    dense_source, estimate_gamma, exact_gamma, exact_source, matching_rotation, matching_signs,
    matchings, measure_pauli, noisy_source, reduced_dense, rotated, sample_z_basis, sample_z_counts,
    shot_budget, shot_records, z_means,
)
from skewlin import schatten_norm
from states import random_gaussian, stream


# ---------------------------
# Matching
# ---------------------------
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_matchings_are_a_one_factorization(n):
    plan = matchings(n)
    assert len(plan.matchings) == 2 * n - 1
    for m in plan.matchings:
        assert len(m) == n
        assert sorted(x for p in m for x in p) == list(range(2 * n))
    pairs = plan.pairs()
    assert sorted(pairs) == list(itertools.combinations(range(2 * n), 2))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_matching_rotation_reads_out_gamma(n, rng):
    s = random_gaussian(n, rng)
    gam = np.asarray(s.corr)
    for m in matchings(n).matchings:
        q = matching_rotation(m, n)
        assert_allclose(q.T @ q, np.eye(2 * n))
        assert np.linalg.det(q) > 0
        rot = q @ gam @ q.T
        signs = matching_signs(q, m)
        for idx, (j, k) in enumerate(m):
            assert_allclose(signs[idx] * rot[2 * idx, 2 * idx + 1], gam[j, k], atol=1e-12)


def test_matching_rotation_rejects_invalid():
    with pytest.raises(InvalidMatching):
        matching_rotation([(0, 1), (0, 2)], 2)
    with pytest.raises(InvalidMatching):
        matching_rotation([(1, 0), (2, 3)], 2)
    with pytest.raises(InvalidMatching):
        matching_rotation([(0, 1)], 2)


# ---------------------------
# Campionamento in base Z
# ---------------------------
def test_sample_product_states_deterministically(rng):
    counts = sample_z_counts(exact_source(vacuum(3)), 50, rng)
    assert counts[0] == 50
    counts = sample_z_counts(exact_source(product_state([1.0, -1.0])), 50, rng)
    assert counts[1] == 50
    assert_allclose(z_means(counts, 2), [1.0, -1.0])


def test_gaussian_sampling_matches_dense_distribution():
    rng = stream(31)
    s = random_gaussian(3, rng)
    shots = 200_000
    counts = sample_z_counts(exact_source(s), shots, rng)
    assert counts.sum() == shots
    p = gaussian_to_dense(s).diagonal()
    assert np.abs(counts / shots - p).max() < 0.01


def test_noisy_and_dense_sources(rng):
    inner = exact_source(vacuum(2))
    noisy = noisy_source(inner, 0.5)
    assert_allclose(np.asarray(exact_gamma(noisy)), 0.5 * np.asarray(vacuum(2).corr))
    counts = sample_z_counts(noisy, 1000, rng)
    assert counts.sum() == 1000
    assert counts[0] > 500
    d = dense_source(ghz3())
    counts = sample_z_counts(d, 1000, rng)
    assert counts[0] + counts[7] == 1000
    with pytest.raises(InputError):
        noisy_source(inner, 1.5)


def test_rotated_sources_agree(rng):
    s = random_gaussian(2, rng)
    q = np.asarray(matching_rotation(((0, 2), (1, 3)), 2))
    exact = exact_gamma(rotated(exact_source(s), q))
    via_dense = exact_gamma(rotated(dense_source(gaussian_to_dense(s)), q))
    assert_allclose(np.asarray(exact), np.asarray(via_dense), atol=1e-9)


def test_reduced_dense(rng):
    s = random_gaussian(3, rng)
    a = reduced_dense(exact_source(s), 2)
    b = gaussian_to_dense(s).partial_trace_first(2)
    assert_allclose(a.rho, b.rho, atol=1e-9)


def test_sample_z_basis(rng):
    out = sample_z_basis(exact_source(product_state([1.0, -1.0, 1.0])), 7, rng)
    assert out == ["010"] * 7
    with pytest.raises(InputError):
        sample_z_basis(exact_source(vacuum(1)), 0, rng)


# ---------------------------
# Budget e stima
# ---------------------------
def test_shot_budget_commuting():
    b = shot_budget(3, 0.2, 0.1, "commuting")
    bound = math.ceil(8 * 27 / 0.2 ** 2 * math.log(4 * 9 / 0.1))
    assert b.bound_shots == bound
    assert b.rounds == 5
    assert b.per_round == math.ceil(bound / 5)
    assert b.total == b.per_round * 5 >= bound


def test_shot_budget_pauli_pairs():
    b = shot_budget(2, 0.2, 0.1, "pauli_pairs")
    assert b.rounds == 6
    assert b.per_round == math.ceil(2.0 / (0.2 / 4) ** 2 * math.log(2 * 6 / 0.1))
    assert b.bound_shots == math.ceil(16 * 16 / 0.2 ** 2 * math.log(4 / 0.1))


def test_estimate_exact_scheme(rng):
    s = random_gaussian(3, rng)
    est = estimate_gamma(exact_source(s), 0.1, 0.1, "exact", rng)
    assert est.shots_used == 0
    assert np.array_equal(np.asarray(est.gamma_hat), np.asarray(s.corr))


@pytest.mark.parametrize("scheme", ["commuting", "pauli_pairs"])
def test_estimate_within_eps(scheme):
    rng = stream(32, len(scheme))
    s = random_gaussian(2, rng)
    est = estimate_gamma(exact_source(s), 0.2, 0.1, scheme, rng)
    assert schatten_norm(est.gamma_hat - s.corr, np.inf) <= 0.2
    assert est.shots_used == shot_budget(2, 0.2, 0.1, scheme).total


def test_estimate_dense_source():
    rng = stream(33)
    est = estimate_gamma(dense_source(ghz3()), 0.3, 0.1, "commuting", rng)
    assert schatten_norm(est.gamma_hat - correlation_matrix(ghz3()), np.inf) <= 0.3


def test_estimate_explicit_shots_and_counts(rng):
    est = estimate_gamma(exact_source(vacuum(2)), 0.2, 0.1, "commuting", rng, shots=100, keep_counts=True)
    assert est.shots_used == 102  # ⌈100/3⌉ per matching
    rows = list(shot_records(est, trial=4))
    assert len(rows) == 102
    assert {r["matching_index"] for r in rows} == {0, 1, 2}
    assert all(r["trial"] == 4 and len(r["bitstring"]) == 2 for r in rows)


def test_commuting_estimator_is_unbiased():
    s = random_gaussian(2, stream(38))
    runs, per_round = 200, 30
    total = np.zeros((4, 4))
    for t in range(runs):
        est = estimate_gamma(exact_source(s), 0.2, 0.1, "commuting", stream(39, t), shots=3 * per_round)
        assert est.shots_used == 3 * per_round
        total += np.asarray(est.gamma_hat)
    # ogni voce è media di ±1: varianza ≤ 1/per_round per run
    sigma = 1.0 / math.sqrt(per_round * runs)
    assert np.abs(total / runs - np.asarray(s.corr)).max() <= 3 * sigma


def test_estimate_budget_overflow(rng):
    with pytest.raises(BudgetOverflow) as info:
        estimate_gamma(exact_source(vacuum(2)), 0.2, 0.1, "commuting", rng, max_shots=10)
    assert info.value.cap == 10


def test_estimate_rejects_bad_parameters(rng):
    with pytest.raises(InputError):
        estimate_gamma(exact_source(vacuum(1)), 0.0, 0.1, "commuting", rng)
    with pytest.raises(InputError):
        estimate_gamma(exact_source(vacuum(1)), 0.1, 1.0, "pauli_pairs", rng)


def test_estimate_is_seed_deterministic():
    s = random_gaussian(2, stream(34))
    a = estimate_gamma(exact_source(s), 0.3, 0.1, "commuting", stream(35))
    b = estimate_gamma(exact_source(s), 0.3, 0.1, "commuting", stream(35))
    assert np.array_equal(np.asarray(a.gamma_hat), np.asarray(b.gamma_hat))


def test_measure_pauli(rng):
    zero = DenseState(1, np.diag([1.0, 0.0]))
    assert measure_pauli(zero, "Z", 30, rng) == 30
    assert measure_pauli(zero, "Z", 30, rng) == 30
    plus = DenseState(1, (np.eye(2) + pauli_matrix("X")) / 2)
    assert measure_pauli(plus, "X", 30, rng) == 30
    with pytest.raises(InputError):
        measure_pauli(zero, "ZZ", 10, rng)


@pytest.mark.slow
def test_estimation_failure_rate():
    n, eps, delta, runs = 3, 0.2, 0.1, 200
    s = random_gaussian(n, stream(36))
    fails = 0
    for t in range(runs):
        est = estimate_gamma(exact_source(s), eps, delta, "commuting", stream(37, t))
        fails += schatten_norm(est.gamma_hat - s.corr, np.inf) > eps
    sigma = math.sqrt(delta * (1 - delta) / runs)
    assert fails / runs <= delta + 3 * sigma
