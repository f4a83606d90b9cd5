# dense.py
"""Oracolo denso Jordan–Wigner: matrici densità esatte 2^n×2^n per n piccolo.

Convenzione: il modo 0 è il fattore tensoriale più a sinistra (bit più significativo
dell'indice di base), γ_{2k} = Z^{⊗k}⊗X⊗I…, γ_{2k+1} = Z^{⊗k}⊗Y⊗I… (indici 0-based).
"""
from __future__ import annotations
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from config import (
    DENSE_MAX_MODES, DENSE_PSD_TOL, DENSE_TOL, IMAG_TOL, MAJORANA_MAX_MODES, SUPPORT_TOL,
    UNITARY_CHECK_TOL,
)
from errors import (
    ConvergenceFailure, DimensionMismatch, InputError, NonNegligibleImaginaryPart, TooManyModes,
)
from gaussian import GaussianState, PnpCorrelation, check_orthogonal, from_correlation, nongaussianity_bounds
from models import GaussianSet, StateMetrics
from skewlin import SkewMatrix

_I2 = sp.identity(2, dtype=complex, format="csr")
_X = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_Y = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))
_Z = sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex))
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_modes(n: int, cap: int = DENSE_MAX_MODES):
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    if n > cap:
        raise TooManyModes(f"n={n} exceeds the cap {cap}")


# ---------------------------
# Stati densi
# ---------------------------
@dataclass(frozen=True)
class DenseState:
    n: int
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        d = 2 ** self.n
        if rho.shape != (d, d):
            raise DimensionMismatch(f"rho has shape {rho.shape}, expected {(d, d)}")
        if np.abs(rho - rho.conj().T).max() > DENSE_TOL:
            raise InputError("rho is not Hermitian")
        if abs(np.trace(rho) - 1.0) > DENSE_TOL:
            raise InputError(f"trace(rho) = {np.trace(rho).real:.12f}")
        rho = (rho + rho.conj().T) / 2
        if np.linalg.eigvalsh(rho).min() < -DENSE_PSD_TOL:
            raise InputError("rho is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_vector(cls, psi) -> "DenseState":
        psi = np.asarray(psi, dtype=complex).ravel()
        n = int(round(np.log2(psi.size)))
        if 2 ** n != psi.size:
            raise DimensionMismatch(f"vector length {psi.size} is not a power of 2")
        psi = psi / np.linalg.norm(psi)
        return cls(n, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DenseState":
        d = 2 ** n
        return cls(n, np.eye(d, dtype=complex) / d)

    def is_pure(self, tol: float = 1e-9) -> bool:
        return bool(abs(np.real(np.trace(self.rho @ self.rho)) - 1.0) <= tol)

    def partial_trace_first(self, k: int) -> "DenseState":
        """Stato ridotto sui primi k qubit (traccia sugli ultimi n−k)."""
        if not 1 <= k <= self.n:
            raise InputError(f"k must be in [1, {self.n}], got {k}")
        a, b = 2 ** k, 2 ** (self.n - k)
        red = np.einsum("ajbj->ab", self.rho.reshape(a, b, a, b))
        return DenseState(k, red)

    def depolarize(self, p: float) -> "DenseState":
        if not 0.0 <= p <= 1.0:
            raise InputError(f"depolarizing strength must be in [0,1], got {p}")
        d = 2 ** self.n
        return DenseState(self.n, (1.0 - p) * self.rho + p * np.eye(d) / d)

    def mix(self, other: "DenseState", s: float) -> "DenseState":
        if other.n != self.n:
            raise DimensionMismatch(f"n {self.n} vs {other.n}")
        if not 0.0 <= s <= 1.0:
            raise InputError(f"mixing weight must be in [0,1], got {s}")
        return DenseState(self.n, (1.0 - s) * self.rho + s * other.rho)

    def diagonal(self) -> np.ndarray:
        p = np.clip(np.real(np.diag(self.rho)), 0.0, None)
        return p / p.sum()

    def conjugate(self, u: np.ndarray) -> "DenseState":
        return DenseState(self.n, u @ self.rho @ u.conj().T)

    # formato di debug: n, poi righe "re im re im ..." (row-major)
    def dump(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{self.n}\n")
            for row in self.rho:
                f.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) + "\n")

    @classmethod
    def load(cls, path: str) -> "DenseState":
        with open(path, "r", encoding="utf-8") as f:
            lines = [ln for ln in f.read().splitlines() if ln.strip() and not ln.startswith("#")]
        n = int(lines[0])
        d = 2 ** n
        vals = np.array([[float(x) for x in ln.split()] for ln in lines[1:d + 1]])
        if vals.shape != (d, 2 * d):
            raise DimensionMismatch(f"{path}: expected {d} rows of {2 * d} numbers")
        return cls(n, vals[:, 0::2] + 1j * vals[:, 1::2])

    def __repr__(self):
        return f"DenseState(n={self.n})"


def ghz3() -> DenseState:
    psi = np.zeros(8, dtype=complex)
    psi[0] = psi[7] = 1.0
    return DenseState.from_vector(psi)


def pauli_matrix(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        if ch not in _PAULI:
            raise InputError(f"unknown Pauli letter {ch!r} in {label!r}")
        out = np.kron(out, _PAULI[ch])
    return out


# ---------------------------
# Operatori di Majorana
# ---------------------------
@dataclass(frozen=True)
class MajoranaSet:
    n: int
    gammas: Tuple[sp.csr_matrix, ...]

    def __len__(self):
        return len(self.gammas)

    def __getitem__(self, mu: int) -> sp.csr_matrix:
        return self.gammas[mu]


def _kron_all(ops) -> sp.csr_matrix:
    out = sp.identity(1, dtype=complex, format="csr")
    for op in ops:
        out = sp.kron(out, op, format="csr")
    return out


@lru_cache(maxsize=None)
def majoranas(n: int) -> MajoranaSet:
    _check_modes(n, MAJORANA_MAX_MODES)
    gs = []
    for k in range(n):
        for p in (_X, _Y):
            gs.append(_kron_all([_Z] * k + [p] + [_I2] * (n - k - 1)))
    return MajoranaSet(n, tuple(gs))


def majorana_product(ms: MajoranaSet, subset: Sequence[int]) -> sp.csr_matrix:
    """γ_S = γ_{s1}·γ_{s2}·… nell'ordine dato."""
    out = sp.identity(2 ** ms.n, dtype=complex, format="csr")
    for mu in subset:
        if not 0 <= mu < 2 * ms.n:
            raise InputError(f"Majorana index {mu} out of range for n={ms.n}")
        out = out @ ms[mu]
    return out


def _combination(coeffs, ms: MajoranaSet) -> sp.csr_matrix:
    """Σ_ν c_ν γ_ν."""
    out = sp.csr_matrix((2 ** ms.n, 2 ** ms.n), dtype=complex)
    for nu, c in enumerate(coeffs):
        if c != 0.0:
            out = out + c * ms[nu]
    return out


def _times_sparse(m: np.ndarray, s: sp.spmatrix) -> np.ndarray:
    """m · s con m densa e s sparsa."""
    return np.asarray((s.T @ m.T).T)


def expectation(rho: DenseState, op) -> complex:
    """Tr(op·ρ) = Σ op_ab ρ_ba."""
    if sp.issparse(op):
        return complex(op.multiply(rho.rho.T).sum())
    return complex(np.sum(np.asarray(op) * rho.rho.T))


def correlation_matrix(rho: DenseState) -> SkewMatrix:
    ms = majoranas(rho.n)
    dim = 2 * rho.n
    gam = np.zeros((dim, dim))
    worst = 0.0
    for j in range(dim):
        for k in range(j + 1, dim):
            val = -1j * expectation(rho, ms[j] @ ms[k])
            worst = max(worst, abs(val.imag))
            gam[j, k] = val.real
    if worst > IMAG_TOL:
        raise NonNegligibleImaginaryPart(f"imaginary residue {worst:.3e} in the correlation matrix")
    return SkewMatrix(dim, gam[np.triu_indices(dim, 1)])


def pnp_correlation(rho: DenseState) -> PnpCorrelation:
    """C_jk = Tr(a_j† a_k ρ) con a_j = (γ_{2j} + iγ_{2j+1})/2."""
    ms = majoranas(rho.n)
    ann = [(ms[2 * j] + 1j * ms[2 * j + 1]) * 0.5 for j in range(rho.n)]
    c = np.array([[expectation(rho, aj.conj().T @ ak) for ak in ann] for aj in ann])
    return PnpCorrelation((c + c.conj().T) / 2)


# ---------------------------
# Unitarie gaussiane
# ---------------------------
def _real_log_so(q: np.ndarray) -> np.ndarray:
    """Logaritmo reale antisimmetrico di q ∈ SO(2n) via forma di Schur reale."""
    t, z = scipy.linalg.schur(q, output="real")
    dim = q.shape[0]
    log_t = np.zeros((dim, dim))
    minus_one = []
    i = 0
    while i < dim:
        if i + 1 < dim and abs(t[i + 1, i]) > 1e-14:
            a = (t[i, i] + t[i + 1, i + 1]) / 2
            s = (t[i + 1, i] - t[i, i + 1]) / 2
            theta = np.arctan2(s, a)
            log_t[i, i + 1], log_t[i + 1, i] = -theta, theta
            i += 2
            continue
        if t[i, i] < 0:
            minus_one.append(i)
        i += 1
    # autovalori −1 accoppiati: rotazione di π nel piano (i, j)
    if len(minus_one) % 2:
        raise ConvergenceFailure("odd number of -1 eigenvalues in a proper rotation")
    for i, j in zip(minus_one[0::2], minus_one[1::2]):
        log_t[i, j], log_t[j, i] = -np.pi, np.pi
    h = z @ log_t @ z.T
    return (h - h.T) / 2


def gaussian_unitary(q: np.ndarray) -> np.ndarray:
    """U con U†γ_μU = Σ_ν q_μν γ_ν.

    det(q) = +1: U = exp(¼ Σ h_ab γ_aγ_b), q = exp(h).
    det(q) = −1: q' = −q·D (D = diag(1,…,1,−1)) ha det +1 e U = U_{q'}·γ_{2n−1}.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] % 2:
        raise DimensionMismatch(f"q must be 2n×2n, got shape {q.shape}")
    n = q.shape[0] // 2
    _check_modes(n)
    q = check_orthogonal(q, 2 * n)
    ms = majoranas(n)

    reflect = np.linalg.det(q) < 0
    qp = q.copy()
    if reflect:
        qp[:, -1] = -qp[:, -1]
        qp = -qp
    h = _real_log_so(qp)
    gen = sp.csr_matrix((2 ** n, 2 ** n), dtype=complex)
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            if h[a, b] != 0.0:
                gen = gen + (0.5 * h[a, b]) * (ms[a] @ ms[b])
    u = scipy.linalg.expm(gen.toarray())
    if reflect:
        u = _times_sparse(u, ms[2 * n - 1])

    # verifica della relazione che definisce U_Q
    ud = u.conj().T
    for mu in range(2 * n):
        target = _combination(q[mu], ms)
        lhs = ud @ (ms[mu] @ u)
        err = np.abs(lhs - target.toarray()).max()
        if err > UNITARY_CHECK_TOL:
            raise ConvergenceFailure(f"Gaussian unitary check failed at mode {mu}: {err:.3e}")
    return u


def product_density(lambdas: Sequence[float]) -> np.ndarray:
    """⊗(I + λ_j Z_j)/2 come matrice diagonale."""
    diag = np.ones(1)
    for lam in lambdas:
        diag = np.kron(diag, np.array([(1.0 + lam) / 2, (1.0 - lam) / 2]))
    return np.diag(diag).astype(complex)


def gaussian_to_dense(s: GaussianState) -> DenseState:
    _check_modes(s.n)
    rho0 = product_density(s.lambdas)
    u = gaussian_unitary(s.nf.q)
    return DenseState(s.n, u @ rho0 @ u.conj().T)


# ---------------------------
# Metriche esatte
# ---------------------------
def _psd_eig(rho: np.ndarray):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return np.clip(w, 0.0, None), v


def trace_distance(a: DenseState, b: DenseState) -> float:
    """tr|a − b|, senza il fattore ½."""
    if a.n != b.n:
        raise DimensionMismatch(f"n {a.n} vs {b.n}")
    diff = a.rho - b.rho
    return float(min(2.0, np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum()))


def fidelity(a: DenseState, b: DenseState) -> float:
    wb, vb = _psd_eig(b.rho)
    sb = (vb * np.sqrt(wb)) @ vb.conj().T
    inner = np.linalg.eigvalsh(sb @ a.rho @ sb)
    return float(min(1.0, np.sqrt(np.clip(inner, 0.0, None)).sum() ** 2))


def relative_entropy(a: DenseState, b: DenseState) -> float:
    """S(a‖b) in bit; inf se il supporto di a non è contenuto in quello di b."""
    if a.n != b.n:
        raise DimensionMismatch(f"n {a.n} vs {b.n}")
    wa, _ = _psd_eig(a.rho)
    wb, vb = _psd_eig(b.rho)
    # peso di a sugli autovettori di b: ⟨v_j|a|v_j⟩
    weight = np.real(np.einsum("ij,ik,kj->j", vb.conj(), a.rho, vb))
    null = wb <= SUPPORT_TOL
    if np.any(weight[null] > DENSE_TOL):
        return float("inf")
    keep_a = wa > SUPPORT_TOL
    s_aa = float(np.sum(wa[keep_a] * np.log2(wa[keep_a])))
    s_ab = float(np.sum(weight[~null] * np.log2(wb[~null])))
    return max(0.0, s_aa - s_ab)


def state_metrics(a: DenseState, b: DenseState) -> StateMetrics:
    if a.n != b.n:
        raise DimensionMismatch(f"n {a.n} vs {b.n}")
    return StateMetrics(
        trace_dist=trace_distance(a, b),
        fidelity=fidelity(a, b),
        relative_entropy=relative_entropy(a, b),
    )


@dataclass(frozen=True)
class Gaussianification:
    g: GaussianState
    d_nongauss: float
    dense: DenseState


def gaussianification(rho: DenseState) -> Gaussianification:
    """G(ρ): stato gaussiano con la stessa Γ; d_nongauss = S(ρ‖G(ρ))."""
    g = from_correlation(correlation_matrix(rho))
    gd = gaussian_to_dense(g)
    return Gaussianification(g=g, d_nongauss=relative_entropy(rho, gd), dense=gd)


def odd_part_norm(rho: DenseState) -> float:
    """‖(ρ − PρP)/2‖₁ con P = Z^⊗n: lower bound sulla distanza da ogni stato pari."""
    idx = np.arange(2 ** rho.n)
    par = np.array([(-1) ** bin(x).count("1") for x in idx], dtype=float)
    odd = (rho.rho - par[:, None] * rho.rho * par[None, :]) / 2
    return float(np.abs(np.linalg.eigvalsh(odd)).sum())


def numerical_rank_exponent(rho: DenseState, tol: float = DENSE_PSD_TOL) -> int:
    """Il più piccolo r con rango(ρ) ≤ 2^r."""
    k = int(np.sum(np.linalg.eigvalsh(rho.rho) > tol))
    return int(np.ceil(np.log2(max(k, 1))))


def certified_distance(rho: DenseState, gaussian_set: GaussianSet, r: int = 0) -> float:
    """Lower bound certificato sulla distanza di ρ dall'insieme gaussiano indicato.

    mixed_set usa il rango effettivo di ρ; 0.0 se nessun certificato si applica.
    """
    best = odd_part_norm(rho)
    g = correlation_matrix(rho)
    n = rho.n
    if gaussian_set == "pure_set":
        best = max(best, nongaussianity_bounds(g, 0).lb_pure_set)
    elif gaussian_set == "rank_set":
        if r <= n - 1:
            best = max(best, nongaussianity_bounds(g, r).lb_rank_set)
    else:
        rr = numerical_rank_exponent(rho)
        if rr <= n - 1:
            best = max(best, nongaussianity_bounds(g, rr).lb_all_gaussian)
    return float(best)


def gaussian_derivative(gamma, x) -> np.ndarray:
    """∂_α ρ(Γ + αX)|₀ = −(i/8) Σ_ab X_ab [γ_a, {γ_b, ρ}]."""
    g = gamma if isinstance(gamma, GaussianState) else from_correlation(gamma)
    xs = x if isinstance(x, SkewMatrix) else SkewMatrix.from_array(x)
    if xs.dim != g.corr.dim:
        raise DimensionMismatch(f"dim {g.corr.dim} vs {xs.dim}")
    rho = gaussian_to_dense(g).rho
    ms = majoranas(g.n)
    xa = np.asarray(xs)
    out = np.zeros_like(rho)
    for a in range(xs.dim):
        if not np.any(xa[a]):
            continue
        ya = _combination(xa[a], ms)
        anti = ya @ rho + _times_sparse(rho, ya)       # {Y_a, ρ}
        out += ms[a] @ anti - _times_sparse(anti, ms[a])
    return -1j / 8 * out


def random_pure_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    return psi / np.linalg.norm(psi)


def random_dense(n: int, rng: np.random.Generator, rank: int = None) -> DenseState:
    """Stato denso casuale (Ginibre) di rango dato."""
    _check_modes(n)
    d = 2 ** n
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return DenseState(n, rho / np.trace(rho))


def basis_state(bits: List[int]) -> DenseState:
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int("".join(str(b) for b in bits), 2)] = 1.0
    return DenseState.from_vector(psi)
