# skewlin.py
"""Algebra lineare reale antisimmetrica: Pfaffiano, forma normale, norme di Schatten/Ky Fan."""
from __future__ import annotations
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from config import FILE_ANTISYM_TOL, LAMBDA_ZERO_TOL
from errors import (
    ConvergenceFailure, DimensionMismatch, IndexOutOfRange, InputError,
    NotAntisymmetric, OddRestriction, RankTooLarge, UnsupportedP,
)

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class SkewMatrix:
    """Matrice reale antisimmetrica 2n×2n.

    Solo il triangolo superiore stretto è autorevole: il triangolo inferiore è derivato,
    quindi l'antisimmetria è esatta per costruzione.
    """
    __slots__ = ("dim", "_upper", "_full")

    def __init__(self, dim: int, upper: Sequence[float]):
        if dim <= 0 or dim % 2:
            raise InputError(f"dim must be even and positive, got {dim}")
        upper = np.asarray(upper, dtype=float).ravel()
        if upper.size != dim * (dim - 1) // 2:
            raise DimensionMismatch(f"expected {dim * (dim - 1) // 2} upper entries, got {upper.size}")
        self.dim = dim
        self._upper = upper.copy()
        self._upper.setflags(write=False)
        full = np.zeros((dim, dim))
        full[np.triu_indices(dim, 1)] = self._upper
        full -= full.T
        full.setflags(write=False)
        self._full = full

    @classmethod
    def from_array(cls, a, tol: Optional[float] = None) -> "SkewMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"square matrix required, got shape {a.shape}")
        if tol is not None and a.size and np.abs(a + a.T).max() > tol:
            raise NotAntisymmetric(f"antisymmetry violated by {np.abs(a + a.T).max():.3e}")
        return cls(a.shape[0], a[np.triu_indices(a.shape[0], 1)])

    @classmethod
    def zeros(cls, dim: int) -> "SkewMatrix":
        return cls(dim, np.zeros(dim * (dim - 1) // 2))

    @property
    def n(self) -> int:
        return self.dim // 2

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    def to_array(self) -> np.ndarray:
        return self._full.copy()

    def __array__(self, dtype=None):
        return self._full if dtype is None else self._full.astype(dtype)

    def __getitem__(self, idx):
        return self._full[idx]

    def _check(self, other: "SkewMatrix"):
        if other.dim != self.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")

    def __add__(self, other: "SkewMatrix") -> "SkewMatrix":
        self._check(other)
        return SkewMatrix(self.dim, self._upper + other._upper)

    def __sub__(self, other: "SkewMatrix") -> "SkewMatrix":
        self._check(other)
        return SkewMatrix(self.dim, self._upper - other._upper)

    def __neg__(self) -> "SkewMatrix":
        return SkewMatrix(self.dim, -self._upper)

    def __mul__(self, scalar: float) -> "SkewMatrix":
        return SkewMatrix(self.dim, float(scalar) * self._upper)

    __rmul__ = __mul__

    def conjugate(self, q) -> "SkewMatrix":
        """q · A · qᵀ."""
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"q has shape {q.shape}, expected {(self.dim, self.dim)}")
        return SkewMatrix.from_array(q @ self._full @ q.T)

    def restrict(self, s: Sequence[int]) -> np.ndarray:
        idx = list(s)
        return self._full[np.ix_(idx, idx)]

    def __repr__(self):
        return f"SkewMatrix(dim={self.dim})"


MatrixLike = Union[SkewMatrix, np.ndarray]


def _as_array(a: MatrixLike) -> np.ndarray:
    if isinstance(a, SkewMatrix):
        return a.to_array()
    return np.asarray(a)


def canonical(lambdas: Iterable[float]) -> SkewMatrix:
    """blockdiag(λ_j·[[0,1],[−1,0]])."""
    lam = np.asarray(list(lambdas), dtype=float)
    if lam.size == 0:
        raise InputError("at least one mode is required")
    return SkewMatrix.from_array(np.kron(np.diag(lam), J2))


@dataclass(frozen=True)
class NormalForm:
    q: np.ndarray
    lambdas: np.ndarray
    det_sign: int

    def canonical(self) -> SkewMatrix:
        return canonical(self.lambdas)

    def reconstruct(self) -> np.ndarray:
        return self.q @ np.asarray(self.canonical()) @ self.q.T


# ---------------------------
# Pfaffiano
# ---------------------------
def _pfaffian_parlett_reid(a: np.ndarray) -> float:
    # tridiagonalizzazione antisimmetrica con pivoting parziale, O(dim³)
    a = np.array(a, dtype=float)
    dim = a.shape[0]
    if dim == 0:
        return 1.0
    if dim % 2:
        return 0.0
    pf = 1.0
    for k in range(0, dim - 1, 2):
        kp = k + 1 + int(np.abs(a[k + 1:, k]).argmax())
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        if a[k + 1, k] == 0.0:
            return 0.0
        pf *= a[k, k + 1]
        if k + 2 < dim:
            tau = a[k, k + 2:] / a[k, k + 1]
            col = a[k + 2:, k + 1].copy()
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return float(pf)


def pfaffian(a: MatrixLike) -> float:
    return _pfaffian_parlett_reid(_as_array(a))


def restricted_pfaffian(a: MatrixLike, s: Sequence[int]) -> float:
    """Pfaffiano della sottomatrice su righe/colonne s (indici 0-based, strettamente crescenti)."""
    arr = _as_array(a)
    idx = list(s)
    if len(idx) % 2:
        raise OddRestriction(f"restriction of odd size {len(idx)}")
    if not idx:
        return 1.0
    if any(j < 0 or j >= arr.shape[0] for j in idx) or any(x >= y for x, y in zip(idx, idx[1:])):
        raise IndexOutOfRange(f"indices {idx} not strictly increasing within [0, {arr.shape[0]})")
    return _pfaffian_parlett_reid(arr[np.ix_(idx, idx)])


# ---------------------------
# Forma normale
# ---------------------------
def polar_orthogonal(m: np.ndarray) -> np.ndarray:
    """Matrice ortogonale più vicina (fattore polare)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    return u @ vt


def normal_form(a: MatrixLike) -> NormalForm:
    arr = np.asarray(_as_array(a), dtype=float)
    dim = arr.shape[0]
    n = dim // 2
    try:
        w, v = scipy.linalg.eigh(1j * arr)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"eigensolver failed: {e}") from e

    scale = max(1.0, float(np.abs(w).max())) if dim else 1.0
    tol = LAMBDA_ZERO_TOL * scale
    pos = [k for k in range(n, dim) if w[k] > tol]
    m0 = n - len(pos)

    cols = []
    if m0:
        # nucleo: base reale dello span (coniugio-invariante) degli autovettori ~0
        kern = v[:, n - m0:n + m0]
        u, _, _ = np.linalg.svd(np.hstack([kern.real, kern.imag]), full_matrices=False)
        cols.extend(u[:, j] for j in range(2 * m0))
    for k in pos:
        # A x = w y, A y = -w x  ->  colonne (√2·y, √2·x) danno il blocco +w
        x, y = v[:, k].real, v[:, k].imag
        cols.extend((np.sqrt(2.0) * y, np.sqrt(2.0) * x))

    q = polar_orthogonal(np.column_stack(cols))
    b = q.T @ arr @ q
    lam = np.array([b[2 * j, 2 * j + 1] for j in range(n)])
    for j in range(n):
        if abs(lam[j]) <= tol:
            lam[j] = 0.0
        elif lam[j] < 0:
            q[:, [2 * j, 2 * j + 1]] = q[:, [2 * j + 1, 2 * j]]
            lam[j] = -lam[j]

    order = np.argsort(lam, kind="stable")
    perm = np.ravel([[2 * j, 2 * j + 1] for j in order])
    q = q[:, perm]
    lam = lam[order]
    det_sign = 1 if np.linalg.det(q) > 0 else -1
    return NormalForm(q=q, lambdas=lam, det_sign=det_sign)


# ---------------------------
# Norme
# ---------------------------
def _singular_values(a: MatrixLike) -> np.ndarray:
    arr = _as_array(a)
    if arr.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(arr)


def schatten_norm(a: MatrixLike, p) -> float:
    s = _singular_values(a)
    if p == 1:
        return float(s.sum())
    if p == 2:
        return float(np.sqrt((s ** 2).sum()))
    if p in (np.inf, "inf"):
        return float(s.max()) if s.size else 0.0
    raise UnsupportedP(f"p must be one of 1, 2, inf; got {p!r}")


def ky_fan_norm(a: MatrixLike, r: int) -> float:
    s = _singular_values(a)
    if r < 1:
        raise InputError(f"r must be positive, got {r}")
    if r > s.size:
        raise RankTooLarge(f"r={r} exceeds dim={s.size}")
    return float(np.sort(s)[::-1][:r].sum())


def normal_eigenvalue_gap(a: MatrixLike, b: MatrixLike) -> float:
    aa, bb = _as_array(a), _as_array(b)
    if aa.shape != bb.shape:
        raise DimensionMismatch(f"shapes {aa.shape} and {bb.shape}")
    return float(np.abs(normal_form(aa).lambdas - normal_form(bb).lambdas).max())


def cov_ineq_gap(c: MatrixLike) -> float:
    """‖C‖₁² + 2·tr(ΛCΛC) − 2‖C‖₂² − tr(CΛ)², non negativo per ogni C antisimmetrica."""
    arr = _as_array(c)
    lam = np.asarray(canonical(np.ones(arr.shape[0] // 2)))
    lhs = schatten_norm(arr, 1) ** 2 + 2.0 * np.trace(lam @ arr @ lam @ arr)
    rhs = 2.0 * schatten_norm(arr, 2) ** 2 + np.trace(arr @ lam) ** 2
    return float(lhs - rhs)


# ---------------------------
# File di fixture
# ---------------------------
def read_matrix(path: str) -> SkewMatrix:
    with open(path, "r", encoding="utf-8") as f:
        # righe '#' = header di metadati (export delle stime)
        lines = [ln for ln in f.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    dim = int(lines[0])
    rows = [[float(x) for x in ln.split()] for ln in lines[1:dim + 1]]
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise DimensionMismatch(f"{path}: expected {dim}x{dim} entries")
    return SkewMatrix.from_array(np.array(rows), tol=FILE_ANTISYM_TOL)


def format_matrix(a: MatrixLike) -> str:
    arr = _as_array(a)
    out = [str(arr.shape[0])]
    out += [" ".join(f"{x:.17g}" for x in row) for row in arr]
    return "\n".join(out) + "\n"


def write_matrix(path: str, a: MatrixLike, header: Optional[str] = None):
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.writelines(f"# {ln}\n" for ln in header.splitlines())
        f.write(format_matrix(a))
