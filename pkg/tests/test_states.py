import numpy as np
import pytest
from numpy.testing import assert_allclose

from dense import DenseState, correlation_matrix, ghz3
from errors import ConfigError
from gaussian import GaussianState
from models import StateSpec
from skewlin import canonical
from states import (
    build_state, odd_probe, random_gaussian, random_orthogonal, random_pnp_gaussian, stream,
    stream_label, to_dense,
)


def test_stream_is_reproducible_and_keyed():
    a = stream(5, 1, 2).standard_normal(4)
    b = stream(5, 1, 2).standard_normal(4)
    c = stream(5, 2, 1).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert stream_label(5, 1, 2) == "5:1:2"


@pytest.mark.parametrize("proper", [False, True])
def test_random_orthogonal(proper, rng):
    q = random_orthogonal(6, rng, proper=proper)
    assert_allclose(q.T @ q, np.eye(6), atol=1e-12)
    if proper:
        assert np.linalg.det(q) > 0


def test_random_gaussian_purity(rng):
    assert random_gaussian(3, rng, pure=True).is_pure()
    s = random_gaussian(3, rng)
    assert np.all(s.lambdas <= 1.0)


def test_random_pnp_gaussian_is_number_preserving(rng):
    s = random_pnp_gaussian(2, rng)
    gam = np.asarray(s.corr)
    # Γ commuta con I ⊗ J2 esattamente quando lo stato conserva il numero
    j = np.asarray(canonical(np.ones(2)))
    assert_allclose(gam @ j, j @ gam, atol=1e-12)


def test_odd_probe_correlation():
    rho = odd_probe(3, 0.9)
    assert_allclose(np.asarray(correlation_matrix(rho)), np.asarray(canonical([0.0, 1.0, 1.0])), atol=1e-12)


def test_build_state_kinds(rng):
    assert isinstance(build_state(StateSpec(kind="vacuum"), 2, rng), GaussianState)
    prod = build_state(StateSpec(kind="product", lambdas=[0.5, 1.0]), 2, rng)
    assert_allclose(prod.lambdas, [0.5, 1.0])
    mixed = build_state(StateSpec(kind="random_gaussian", lambdas=[0.2, 0.4]), 2, rng)
    assert_allclose(mixed.lambdas, [0.2, 0.4], atol=1e-9)
    pure = build_state(StateSpec(kind="random_gaussian", purity="pure"), 3, rng)
    assert pure.is_pure()
    assert isinstance(build_state(StateSpec(kind="ghz3"), 3, rng), DenseState)
    assert_allclose(build_state(StateSpec(kind="maximally_mixed"), 2, rng).lambdas, [0.0, 0.0])


def test_build_state_dense_fixture(tmp_path, rng):
    path = tmp_path / "ghz.txt"
    ghz3().dump(str(path))
    spec = StateSpec(kind="dense_fixture", path=str(path))
    assert_allclose(build_state(spec, 3, rng).rho, ghz3().rho)
    with pytest.raises(ConfigError):
        build_state(spec, 4, rng)


def test_to_dense(rng):
    s = random_gaussian(2, rng)
    assert to_dense(s).n == 2
    g = ghz3()
    assert to_dense(g) is g
