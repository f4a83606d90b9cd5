import numpy as np
import pytest
from numpy.testing import assert_allclose

from dense import gaussian_to_dense
from errors import (
    LambdaOutOfRange, NotAValidCorrelationMatrix, NotHermitian, NotOrthogonal, NotPure,
    OccupationOutOfRange, OddSubset, RankExponentOutOfRange, UnsupportedP,
)
from gaussian import (
    GaussianState, PnpCorrelation, distance_bounds, fidelity_lower_bound_pure, from_correlation,
    maximally_mixed, nongaussianity_bounds, overlap_pure, parity, pnp_norm_transfer, pnp_to_gamma,
    product_state, purify, rank_exponent, rotate, vacuum, wick_expectation,
)
from skewlin import canonical, schatten_norm
from states import random_gaussian, random_orthogonal, stream


def test_vacuum_and_maximally_mixed():
    v = vacuum(3)
    assert v.is_pure()
    assert_allclose(v.lambdas, np.ones(3))
    m = maximally_mixed(2)
    assert not m.is_pure()
    assert_allclose(np.asarray(m.corr), 0.0)


def test_from_correlation_rejects_lambda_above_one():
    with pytest.raises(NotAValidCorrelationMatrix):
        from_correlation(canonical([1.1, 0.3]))


def test_from_correlation_clamps_tiny_overshoot():
    s = from_correlation(canonical([1.0 + 5e-7, 0.3]))
    assert s.lambdas.max() == 1.0
    assert_allclose(s.nf.reconstruct(), np.asarray(s.corr), atol=1e-9)


def test_product_state_range():
    with pytest.raises(LambdaOutOfRange):
        product_state([0.5, 1.2])
    s = product_state([-0.5, 0.25])
    assert_allclose(np.asarray(s.corr), np.asarray(canonical([-0.5, 0.25])))
    assert_allclose(s.lambdas, [0.25, 0.5])


def test_rotate_transports_normal_form(rng):
    s = random_gaussian(3, rng)
    q = random_orthogonal(6, rng)
    t = rotate(s, q)
    assert_allclose(np.asarray(t.corr), q @ np.asarray(s.corr) @ q.T, atol=1e-12)
    assert_allclose(t.nf.reconstruct(), np.asarray(t.corr), atol=1e-9)
    assert_allclose(t.lambdas, s.lambdas)
    assert t.nf.det_sign == int(np.sign(np.linalg.det(t.nf.q)))


def test_rotate_rejects_non_orthogonal():
    with pytest.raises(NotOrthogonal):
        rotate(vacuum(1), np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_wick_on_vacuum():
    v = vacuum(2)
    assert_allclose(wick_expectation(v, [0, 1]), 1j)
    assert_allclose(wick_expectation(v, [0, 1, 2, 3]), -1.0)
    assert wick_expectation(v, []) == 1.0
    with pytest.raises(OddSubset):
        wick_expectation(v, [0, 1, 2])


def test_parity_of_product_state():
    assert_allclose(parity(product_state([0.5, -0.4, 1.0])), -0.2)
    assert parity(vacuum(4)) == 1.0


def test_overlap_pure():
    assert_allclose(overlap_pure(vacuum(2), vacuum(2)), 1.0)
    assert overlap_pure(vacuum(2), product_state([1.0, -1.0])) == 0.0
    with pytest.raises(NotPure):
        overlap_pure(vacuum(1), product_state([0.5]))


def test_distance_bounds_single_mode_saturation():
    b = distance_bounds(product_state([0.3]), product_state([0.8]), "mixed_mixed")
    assert_allclose(b.lb_infty, 0.5)
    assert_allclose(b.ub_mixed, 0.5)
    assert b.ub_pure is None
    assert b.ub_pure_vs_any is None


def test_distance_bounds_orthogonal_pure_pair():
    b = distance_bounds(vacuum(2), product_state([-1.0, -1.0]), "pure_pure")
    assert_allclose(b.lb_infty, 2.0)
    assert b.ub_pure == 2.0
    assert b.ub_mixed == 2.0  # ½‖ΔΓ‖₁ = 4, tagliato
    assert b.fid_lb_linear == 0.0


def test_distance_bounds_identical_states(rng):
    s = random_gaussian(3, rng, pure=True)
    b = distance_bounds(s, s, "pure_pure")
    assert b.lb_infty == 0.0 and b.ub_pure == 0.0 and b.ub_mixed == 0.0
    assert b.fid_lb_sq == 1.0 and b.fid_lb_frobenius == 1.0
    assert fidelity_lower_bound_pure(s, s) == 1.0


def test_distance_bounds_mode_preconditions():
    with pytest.raises(NotPure):
        distance_bounds(vacuum(1), product_state([0.2]), "pure_pure")
    with pytest.raises(NotPure):
        distance_bounds(product_state([0.2]), vacuum(1), "pure_vs_any")


def test_nongaussianity_bounds_on_product_state():
    rep = nongaussianity_bounds(product_state([1.0, 0.5, 0.2]), 0)
    assert_allclose(rep.lb_rank_set, 0.8)
    assert_allclose(rep.lb_all_gaussian, 0.4)
    assert_allclose(rep.lb_pure_set, 0.8)
    assert_allclose(rep.ub_pure_set, np.sqrt(2.6))
    rep1 = nongaussianity_bounds(product_state([1.0, 0.5, 0.2]), 1)
    assert_allclose(rep1.lb_rank_set, 0.5)
    assert_allclose(rep1.lb_all_gaussian, 0.25 / 2.0)
    with pytest.raises(RankExponentOutOfRange):
        nongaussianity_bounds(vacuum(2), 2)


def test_rank_exponent_and_restriction():
    s = product_state([1.0, 0.5, 0.2])
    assert rank_exponent(s) == 2
    assert rank_exponent(vacuum(3)) == 0
    r = product_state([0.1, 0.2, 0.3]).restrict_modes(2)
    assert_allclose(r.lambdas, [0.1, 0.2])


def test_purify_keeps_top_left_block(rng):
    s = random_gaussian(3, rng)
    p = purify(s)
    assert p.n == 6
    assert p.is_pure()
    assert_allclose(np.asarray(p.corr)[:6, :6], np.asarray(s.corr), atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_purify_marginal_is_original_state(n):
    s = random_gaussian(n, stream(41, n))
    p = purify(s)
    reduced = gaussian_to_dense(p).partial_trace_first(n)
    assert_allclose(reduced.rho, gaussian_to_dense(s).rho, atol=1e-9)


def test_record_roundtrip(rng):
    s = random_gaussian(2, rng)
    back = GaussianState.from_record(s.to_record())
    assert np.array_equal(np.asarray(back.corr), np.asarray(s.corr))


def test_pnp_correlation_validation():
    with pytest.raises(NotHermitian):
        PnpCorrelation(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(OccupationOutOfRange):
        PnpCorrelation(np.diag([0.5, 1.5]))
    c = PnpCorrelation(np.diag([0.25, 1.0]))
    assert c.n == 2
    assert_allclose(c.occupations(), [0.25, 1.0])


def test_pnp_to_gamma_of_occupation_basis():
    gam = pnp_to_gamma(np.diag([0.0, 1.0]))
    assert_allclose(np.asarray(gam), np.asarray(canonical([1.0, -1.0])))


def test_pnp_norm_transfer():
    cd = np.diag([0.1, -0.2])
    assert_allclose(pnp_norm_transfer(cd, np.inf), 4 * 0.2)
    assert_allclose(pnp_norm_transfer(cd, 1), 4 * 2 * 0.3)
    assert_allclose(pnp_norm_transfer(cd, 2), 4 * np.sqrt(2) * np.sqrt(0.05))
    with pytest.raises(UnsupportedP):
        pnp_norm_transfer(cd, 3)


def test_pnp_transfer_bounds_gamma_difference():
    c1, c2 = np.diag([0.2, 0.9]), np.diag([0.4, 0.7])
    d = pnp_to_gamma(c1) - pnp_to_gamma(c2)
    for p in (1, 2, np.inf):
        assert schatten_norm(d, p) <= pnp_norm_transfer(c1 - c2, p) + 1e-12
