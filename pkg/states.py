# states.py
"""Stati di input per gli esperimenti e stream RNG riproducibili."""
from __future__ import annotations
from typing import Optional, Union

import numpy as np

from config import DENSE_MAX_MODES
from dense import DenseState, gaussian_to_dense, ghz3, pauli_matrix
from errors import ConfigError, InputError
from gaussian import GaussianState, from_correlation, maximally_mixed, product_state, rotate, vacuum
from models import StateSpec
from skewlin import canonical

AnyState = Union[GaussianState, DenseState]


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Generatore Philox indicizzato da (seed, *keys): nessuno stato globale."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def stream_label(seed: int, *keys: int) -> str:
    return ":".join(str(int(x)) for x in (seed, *keys))


def random_orthogonal(dim: int, rng: np.random.Generator, proper: bool = False) -> np.ndarray:
    """Matrice ortogonale di Haar (QR di una gaussiana con correzione dei segni)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if proper and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_skew(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) * scale
    return a - a.T


def random_gaussian(n: int, rng: np.random.Generator, pure: bool = False) -> GaussianState:
    lam = np.ones(n) if pure else rng.uniform(0.0, 1.0, size=n)
    base = from_correlation(canonical(lam))
    return rotate(base, random_orthogonal(2 * n, rng))


def random_pnp_gaussian(n: int, rng: np.random.Generator) -> GaussianState:
    """Stato gaussiano con conservazione del numero: rotazione passiva di uno stato prodotto."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    u, _ = np.linalg.qr(z)
    # U ∈ U(n) agisce sulle coppie (Re, Im) dei modi come rotazione di SO(2n)
    o = np.zeros((2 * n, 2 * n))
    o[0::2, 0::2] = u.real
    o[0::2, 1::2] = -u.imag
    o[1::2, 0::2] = u.imag
    o[1::2, 1::2] = u.real
    lam = rng.uniform(-1.0, 1.0, size=n)
    return rotate(product_state(lam), o)


def odd_probe(n: int, amplitude: float = 0.9) -> DenseState:
    """(I + a·X)/2 sul modo 0 ⊗ |0…0⟩: rango 2, parità non definita, Γ = diag(0, 1, …, 1)."""
    if not 0.0 <= amplitude <= 1.0:
        raise InputError(f"amplitude must be in [0,1], got {amplitude}")
    local = (np.eye(2) + amplitude * pauli_matrix("X")) / 2
    rest = np.zeros((2 ** (n - 1), 2 ** (n - 1)))
    rest[0, 0] = 1.0
    return DenseState(n, np.kron(local, rest))


def build_state(spec: StateSpec, n: int, rng: np.random.Generator) -> AnyState:
    kind = spec.kind
    if kind == "vacuum":
        return vacuum(n)
    if kind == "product":
        return product_state(spec.lambdas)
    if kind == "random_gaussian":
        if spec.purity == "mixed" and spec.lambdas:
            return rotate(product_state(spec.lambdas), random_orthogonal(2 * n, rng))
        return random_gaussian(n, rng, pure=spec.purity == "pure")
    if kind == "maximally_mixed":
        return maximally_mixed(n)
    if kind == "ghz3":
        return ghz3()
    if kind == "odd_probe":
        return odd_probe(n, spec.amplitude)
    if kind == "dense_fixture":
        rho = DenseState.load(spec.path)
        if rho.n != n:
            raise ConfigError(f"fixture {spec.path} has {rho.n} modes, config says {n}")
        return rho
    raise ConfigError(f"unknown state kind {kind!r}")


def to_dense(state: AnyState) -> Optional[DenseState]:
    """Versione densa per i controlli esatti (None oltre il limite di modi)."""
    if isinstance(state, DenseState):
        return state
    if state.n > DENSE_MAX_MODES:
        return None
    return gaussian_to_dense(state)
