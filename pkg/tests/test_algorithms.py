import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from algorithms import (
    apply_noise, local_full_tomography, local_tomography_budget, project_density, pure_test_thresholds,
    rank_test_thresholds, reduce_identity_testing, robustness_experiment, test_bounded_rank, test_pure,
    tomograph_mixed, tomograph_pure,
)
from dense import certified_distance, gaussian_to_dense, ghz3, trace_distance
from errors import InfeasibleThresholds, InputError, PromiseNotCertified, TooManyLocalModes
from gaussian import GaussianState, from_correlation, maximally_mixed, product_state, rotate, vacuum
from models import TestConfig
from sampler import dense_source, exact_source
from skewlin import canonical
from states import odd_probe, random_gaussian, random_orthogonal, stream


# ---------------------------
# Soglie
# ---------------------------
def test_pure_thresholds_mixed_set():
    th = pure_test_thresholds(4, 0.0, 0.5, "mixed_set")
    assert_allclose(th.eps_stat, 0.0140625)
    assert_allclose(th.eps_t, 0.015625)


def test_pure_thresholds_pure_set():
    th = pure_test_thresholds(3, 0.0, 0.9, "pure_set")
    assert_allclose(th.eps_stat, 0.25 * 0.135)
    assert_allclose(th.eps_t, 0.5 * 0.135)


def test_pure_thresholds_infeasible():
    with pytest.raises(InfeasibleThresholds):
        pure_test_thresholds(4, 0.1, 0.5, "mixed_set")
    with pytest.raises(InputError):
        pure_test_thresholds(4, 0.0, 0.5, "rank_set")


def test_rank_thresholds():
    th = rank_test_thresholds(3, 1, 0.0, 0.9, "rank_set")
    assert_allclose(th.eps_t, 0.81 / 128)
    assert_allclose(th.eps_t2, 0.8 * 0.45)
    assert_allclose(th.eps_tom, 0.9 * 0.45 / 5)
    mixed = rank_test_thresholds(3, 1, 0.0, 0.9, "mixed_set")
    assert mixed.eps_t > mixed.eps_stat
    with pytest.raises(InfeasibleThresholds):
        rank_test_thresholds(3, 3, 0.0, 0.9, "rank_set")
    with pytest.raises(InfeasibleThresholds):
        rank_test_thresholds(3, 1, 0.1, 0.5, "rank_set")
    with pytest.raises(InputError):
        rank_test_thresholds(3, 1, 0.0, 0.9, "pure_set")


# ---------------------------
# Tester
# ---------------------------
def test_pure_exact_vacuum_is_gaussian(rng):
    cfg = TestConfig(eps_b=0.9, delta=0.1, gaussian_set="pure_set", scheme="exact")
    out = test_pure(exact_source(vacuum(3)), cfg, rng)
    assert out.verdict == "CaseA"
    assert out.shots_used == 0
    assert out.evidence.stage == "eigenvalue_stage"
    assert_allclose(out.evidence.threshold, 0.0675)


def test_pure_exact_mixed_product_is_far(rng):
    cfg = TestConfig(eps_b=0.9, delta=0.1, gaussian_set="pure_set", scheme="exact")
    out = test_pure(exact_source(product_state([1.0, 1.0, 0.2])), cfg, rng)
    assert out.verdict == "CaseB"
    assert_allclose(out.evidence.lambda_hat_relevant, 0.2)


def test_pure_rejects_ghz(rng):
    cfg = TestConfig(eps_b=0.45, delta=0.1, gaussian_set="mixed_set", scheme="exact")
    out = test_pure(dense_source(ghz3()), cfg, rng)
    assert out.verdict == "CaseB"
    assert out.evidence.lambda_hat_relevant < 1e-9


def test_pure_commuting_accepts_pure_state():
    rng = stream(41)
    s = random_gaussian(2, rng, pure=True)
    cfg = TestConfig(eps_b=1.0, delta=0.1, gaussian_set="mixed_set", scheme="commuting")
    out = test_pure(exact_source(s), cfg, rng)
    assert out.verdict == "CaseA"
    assert out.shots_used > 0


def test_bounded_rank_accepts_low_rank_gaussian(rng):
    cfg = TestConfig(eps_b=0.9, delta=0.1, r=1, gaussian_set="rank_set", scheme="exact")
    out = test_bounded_rank(exact_source(product_state([1.0, 1.0, 0.5])), cfg, rng)
    assert out.verdict == "CaseA"
    assert out.evidence.stage == "tomography_stage"
    assert out.evidence.local_distance < out.evidence.threshold_2


def test_bounded_rank_rejects_high_rank(rng):
    cfg = TestConfig(eps_b=0.9, delta=0.1, r=1, gaussian_set="rank_set", scheme="exact")
    out = test_bounded_rank(exact_source(product_state([1.0, 0.5, 0.5])), cfg, rng)
    assert out.verdict == "CaseB"
    assert out.evidence.stage == "eigenvalue_stage"
    assert out.shots_used == 0


def test_bounded_rank_local_stage_sees_odd_part(rng):
    cfg = TestConfig(eps_b=0.5, delta=0.1, r=1, gaussian_set="rank_set", scheme="exact")
    out = test_bounded_rank(dense_source(odd_probe(4, 0.9)), cfg, rng)
    assert out.verdict == "CaseB"
    assert out.evidence.stage == "tomography_stage"
    assert out.evidence.local_distance > 0.5


def test_bounded_rank_zero_skips_local_stage(rng):
    cfg = TestConfig(eps_b=0.9, delta=0.1, r=0, gaussian_set="rank_set", scheme="exact")
    out = test_bounded_rank(exact_source(vacuum(2)), cfg, rng)
    assert out.verdict == "CaseA"
    assert out.evidence.local_distance == 0.0


def test_reduce_identity(rng):
    res = reduce_identity_testing(exact_source(maximally_mixed(2)), 0.5, 0.1, rng, scheme="exact")
    assert res.verdict == "MaximallyMixed"
    assert res.stage == "tomography_stage"
    res = reduce_identity_testing(exact_source(vacuum(2)), 0.5, 0.1, rng, scheme="exact")
    assert res.verdict == "FarFromMaximallyMixed"
    assert res.stage == "eigenvalue_stage"
    assert_allclose(res.gamma_norm, 1.0)


# ---------------------------
# Tomografia locale
# ---------------------------
def test_local_tomography_budget():
    per, k = local_tomography_budget(1, 0.1, 0.1)
    assert k == 3
    assert per == math.ceil(2.0 / 0.025 ** 2 * math.log(60.0))


def test_project_density():
    out = project_density(np.diag([1.2, -0.2]).astype(complex))
    assert_allclose(out, np.diag([1.0, 0.0]))
    assert_allclose(project_density(-np.eye(2)), np.eye(2) / 2)


def test_local_full_tomography(rng):
    s = random_gaussian(2, rng)
    rho_hat, shots = local_full_tomography(exact_source(s), 1, 0.1, 0.1, rng)
    truth = gaussian_to_dense(s).partial_trace_first(1)
    assert trace_distance(rho_hat, truth) <= 0.1
    assert shots == 3 * local_tomography_budget(1, 0.1, 0.1)[0]
    with pytest.raises(TooManyLocalModes):
        local_full_tomography(exact_source(vacuum(7)), 7, 0.1, 0.1, rng)
    with pytest.raises(InputError):
        local_full_tomography(exact_source(vacuum(2)), 3, 0.1, 0.1, rng)


# ---------------------------
# Tomografia
# ---------------------------
def test_tomograph_pure():
    rng = stream(42)
    s = random_gaussian(3, rng, pure=True)
    rep = tomograph_pure(exact_source(s), 0.3, 0.1, rng)
    assert rep.learned.is_pure()
    assert trace_distance(gaussian_to_dense(rep.learned), gaussian_to_dense(s)) <= 0.3
    assert rep.shots_alt_constant > rep.shots_used


def test_tomograph_mixed():
    rng = stream(43)
    s = random_gaussian(2, rng)
    rep = tomograph_mixed(exact_source(s), 0.3, 0.1, rng)
    assert_allclose(rep.eps_stat, 0.3 / 2)
    assert np.all(rep.learned.lambdas <= 1.0)
    assert trace_distance(gaussian_to_dense(rep.learned), gaussian_to_dense(s)) <= 0.3


def test_tomography_rejects_bad_eps(rng):
    with pytest.raises(InputError):
        tomograph_pure(exact_source(vacuum(1)), 1.0, 0.1, rng)
    with pytest.raises(InputError):
        tomograph_mixed(exact_source(vacuum(1)), 0.1, 0.0, rng)


# ---------------------------
# Robustezza
# ---------------------------
def test_apply_noise_none_is_identity(rng):
    rho = gaussian_to_dense(vacuum(2))
    assert apply_noise(rho, "none", 0.3, rng) is rho
    with pytest.raises(InputError):
        apply_noise(rho, "bitflip", 0.3, rng)


def test_robustness_small_depolarizing():
    rep = robustness_experiment(vacuum(3), "depolarizing", 0.01, 0.3, 0.1, stream(44))
    assert rep.promise_value <= 0.3 / 9
    assert_allclose(rep.tomography_eps, 0.1)
    assert rep.dense_error <= 0.3


def test_robustness_relative_entropy_on_gaussian_input():
    rep = robustness_experiment(vacuum(2), "none", 0.0, 0.3, 0.1, stream(45), promise="relative_entropy")
    assert rep.promise_value < 1e-9
    assert rep.tomography_eps == 0.3


def test_robustness_on_gaussian_input_keeps_full_accuracy():
    rep = robustness_experiment(vacuum(2), "none", 0.0, 0.3, 0.1, stream(47))
    assert rep.promise_value <= 1e-9
    # nessun rumore: la riduzione è tomografia mista a eps pieno
    assert rep.tomography_eps == 0.3
    direct = tomograph_mixed(exact_source(vacuum(2)), 0.3, 0.1, stream(48))
    assert rep.shots_used == direct.shots_used
    assert rep.dense_error <= 0.3


def test_robustness_uncertified_promise():
    with pytest.raises(PromiseNotCertified):
        robustness_experiment(vacuum(3), "trace_perturbation", 0.5, 0.05, 0.1, stream(46))


# ---------------------------
# Accettazione statistica
# ---------------------------
def _floor(runs: int, p: float = 0.9) -> float:
    return p - 3 * math.sqrt(p * (1 - p) / runs)


def _gaussian_with(lam, rng) -> GaussianState:
    lam = np.asarray(lam, dtype=float)
    return rotate(from_correlation(canonical(lam)), random_orthogonal(2 * lam.size, rng))


@pytest.mark.slow
def test_mixed_tomography_success_rate():
    n, eps, delta, runs = 4, 0.2, 0.1, 50
    ok = 0
    for t in range(runs):
        rng = stream(60, t)
        s = random_gaussian(n, rng)
        rep = tomograph_mixed(exact_source(s), eps, delta, rng)
        ok += trace_distance(gaussian_to_dense(rep.learned), gaussian_to_dense(s)) <= eps
    assert ok / runs >= _floor(runs)


@pytest.mark.slow
def test_pure_tomography_success_rate():
    n, eps, delta, runs = 4, 0.2, 0.1, 50
    ok = 0
    for t in range(runs):
        rng = stream(61, t)
        s = random_gaussian(n, rng, pure=True)
        rep = tomograph_pure(exact_source(s), eps, delta, rng)
        ok += trace_distance(gaussian_to_dense(rep.learned), gaussian_to_dense(s)) <= eps
    assert ok / runs >= _floor(runs)


@pytest.mark.slow
def test_pure_tester_acceptance():
    n, runs = 4, 100
    cfg = TestConfig(eps_b=0.9, delta=0.05, gaussian_set="pure_set", scheme="commuting")
    ok = 0
    for t in range(runs):
        rng = stream(62, t)
        near = random_gaussian(n, rng, pure=True)
        ok += test_pure(exact_source(near), cfg, rng).verdict == "CaseA"

        lam = rng.uniform(0.0, 1.0, n)
        lam[0] = rng.uniform(0.0, 0.05)
        far = gaussian_to_dense(_gaussian_with(lam, rng))
        assert certified_distance(far, "pure_set") > cfg.eps_b
        ok += test_pure(dense_source(far), cfg, rng).verdict == "CaseB"
    assert ok / (2 * runs) >= 1 - cfg.delta


@pytest.mark.slow
def test_rank_tester_acceptance():
    n, runs = 4, 100
    cfg = TestConfig(eps_b=0.9, delta=0.05, r=1, gaussian_set="rank_set", scheme="commuting")
    ok = 0
    for t in range(runs):
        rng = stream(63, t)
        # un solo modo misto: rango 2
        near = _gaussian_with([rng.uniform(0.0, 0.8), 1.0, 1.0, 1.0], rng)
        ok += test_bounded_rank(exact_source(near), cfg, rng).verdict == "CaseA"

        lam = np.concatenate([rng.uniform(0.0, 0.05, 2), rng.uniform(0.0, 1.0, n - 2)])
        far = gaussian_to_dense(_gaussian_with(lam, rng))
        assert certified_distance(far, "rank_set", 1) > cfg.eps_b
        ok += test_bounded_rank(dense_source(far), cfg, rng).verdict == "CaseB"
    assert ok / (2 * runs) >= 1 - cfg.delta


@pytest.mark.slow
def test_identity_reduction_acceptance():
    n, eps, delta, runs = 3, 0.5, 0.05, 50
    mixed = maximally_mixed(n)
    ok = 0
    for t in range(runs):
        rng = stream(64, t)
        res = reduce_identity_testing(exact_source(mixed), eps, delta, rng)
        ok += res.verdict == "MaximallyMixed"

        far = _gaussian_with(rng.uniform(0.6, 1.0, n), rng)
        assert trace_distance(gaussian_to_dense(far), gaussian_to_dense(mixed)) > eps
        res = reduce_identity_testing(exact_source(far), eps, delta, rng)
        ok += res.verdict == "FarFromMaximallyMixed"
    assert ok / (2 * runs) >= 1 - delta


@pytest.mark.slow
def test_robustness_success_rate():
    eps, delta, runs = 0.3, 0.1, 50
    ok = 0
    for t in range(runs):
        rep = robustness_experiment(vacuum(3), "depolarizing", 0.01, eps, delta, stream(65, t))
        ok += rep.dense_error <= eps
    assert ok / runs >= _floor(runs)
