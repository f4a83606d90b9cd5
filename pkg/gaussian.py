# gaussian.py
"""Stati free-fermionici (gaussiani) rappresentati dalla sola matrice di correlazione Γ."""
from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Sequence, Union

import numpy as np

from config import (
    HERMITIAN_TOL, LAMBDA_INPUT_SLACK, LAMBDA_INTERNAL_SLACK, OCCUPATION_TOL, ORTHO_TOL, PURE_TOL,
)
from errors import (
    DimensionMismatch, InputError, LambdaOutOfRange, NotAValidCorrelationMatrix, NotHermitian,
    NotOrthogonal, NotPure, OccupationOutOfRange, OddSubset, RankExponentOutOfRange, UnsupportedP,
)
from models import BoundsMode, BoundsReport, NonGaussReport
from provenance import log_event
from skewlin import (
    J2, NormalForm, SkewMatrix, canonical, normal_form, pfaffian, restricted_pfaffian, schatten_norm,
)

CorrLike = Union[SkewMatrix, np.ndarray]


def _as_skew(g) -> SkewMatrix:
    if isinstance(g, GaussianState):
        return g.corr
    if isinstance(g, SkewMatrix):
        return g
    return SkewMatrix.from_array(g)


class GaussianState:
    """Stato gaussiano: Γ più forma normale in cache (calcolata alla costruzione)."""
    __slots__ = ("corr", "nf")

    def __init__(self, corr: SkewMatrix, nf: NormalForm):
        self.corr = corr
        self.nf = nf

    @property
    def n(self) -> int:
        return self.corr.n

    @property
    def lambdas(self) -> np.ndarray:
        return self.nf.lambdas

    def is_pure(self, tol: float = PURE_TOL) -> bool:
        return bool(np.all(self.nf.lambdas >= 1.0 - tol))

    def restrict_modes(self, k: int) -> "GaussianState":
        """Stato ridotto sui primi k modi (blocco 2k×2k in alto a sinistra)."""
        if not 1 <= k <= self.n:
            raise InputError(f"k must be in [1, {self.n}], got {k}")
        return from_correlation(np.asarray(self.corr)[:2 * k, :2 * k])

    def to_record(self) -> Dict:
        return {"n": self.n, "upper": [float(x) for x in self.corr.upper]}

    @classmethod
    def from_record(cls, rec: Dict) -> "GaussianState":
        return from_correlation(SkewMatrix(2 * int(rec["n"]), rec["upper"]))

    def __repr__(self):
        return f"GaussianState(n={self.n}, lambdas={np.round(self.lambdas, 6).tolist()})"


@dataclass(frozen=True)
class PnpCorrelation:
    """C(ρ)_{jk} = Tr(a_j† a_k ρ) di uno stato che conserva il numero di particelle."""
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionMismatch(f"square matrix required, got shape {c.shape}")
        if np.abs(c - c.conj().T).max() > HERMITIAN_TOL:
            raise NotHermitian("C is not Hermitian")
        d = np.linalg.eigvalsh((c + c.conj().T) / 2)
        if d.min() < -OCCUPATION_TOL or d.max() > 1 + OCCUPATION_TOL:
            raise OccupationOutOfRange(f"occupations outside [0,1]: [{d.min():.3e}, {d.max():.3e}]")
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def occupations(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.c)


# ---------------------------
# Costruzione
# ---------------------------
def from_correlation(g: CorrLike) -> GaussianState:
    corr = _as_skew(g)
    nf = normal_form(corr)
    top = float(nf.lambdas.max())
    if top > 1.0 + LAMBDA_INPUT_SLACK:
        raise NotAValidCorrelationMatrix(f"normal eigenvalue {top:.9f} > 1")
    if top > 1.0:
        lam = np.minimum(nf.lambdas, 1.0)
        nf = NormalForm(q=nf.q, lambdas=lam, det_sign=nf.det_sign)
        if top > 1.0 + LAMBDA_INTERNAL_SLACK:
            # overshoot non trascurabile: Γ ricostruita dalla forma clampata
            corr = corr_from_normal_form(nf)
    return GaussianState(corr, nf)


def corr_from_normal_form(nf: NormalForm) -> SkewMatrix:
    return SkewMatrix.from_array(nf.reconstruct())


def product_state(lambdas: Sequence[float]) -> GaussianState:
    lam = np.asarray(list(lambdas), dtype=float)
    if lam.size == 0 or np.any(np.abs(lam) > 1.0):
        raise LambdaOutOfRange(f"lambdas must lie in [-1, 1]: {lam.tolist()}")
    return from_correlation(canonical(lam))


def vacuum(n: int) -> GaussianState:
    return product_state(np.ones(n))


def maximally_mixed(n: int) -> GaussianState:
    return product_state(np.zeros(n))


def check_orthogonal(q: np.ndarray, dim: int) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (dim, dim):
        raise DimensionMismatch(f"q has shape {q.shape}, expected {(dim, dim)}")
    if np.linalg.norm(q.T @ q - np.eye(dim), 2) > ORTHO_TOL:
        raise NotOrthogonal("q is not orthogonal")
    return q


def rotate(s: GaussianState, q: np.ndarray) -> GaussianState:
    """Γ(U_Q ρ U_Q†) = Q Γ Qᵀ; la forma normale si trasporta senza ricalcolo."""
    q = check_orthogonal(q, s.corr.dim)
    sign = 1 if np.linalg.det(q) > 0 else -1
    nf = NormalForm(q=q @ s.nf.q, lambdas=s.nf.lambdas, det_sign=s.nf.det_sign * sign)
    return GaussianState(s.corr.conjugate(q), nf)


# ---------------------------
# Valori di aspettazione
# ---------------------------
def wick_expectation(s: GaussianState, subset: Sequence[int]) -> complex:
    """Tr(γ_S ρ) = i^{|S|/2} · Pf(Γ|_S), indici 0-based crescenti."""
    idx = list(subset)
    if len(idx) % 2:
        raise OddSubset(f"odd Majorana product {idx}")
    return complex(1j ** (len(idx) // 2) * restricted_pfaffian(s.corr, idx))


def parity(s: GaussianState) -> float:
    return pfaffian(s.corr)


def _require_pure(g: SkewMatrix, what: str):
    lam = normal_form(g).lambdas
    if np.any(lam < 1.0 - PURE_TOL):
        raise NotPure(f"{what} is not pure (min lambda {lam.min():.6f})")


def overlap_pure(s1: GaussianState, s2: GaussianState) -> float:
    if s1.corr.dim != s2.corr.dim:
        raise DimensionMismatch(f"dim {s1.corr.dim} vs {s2.corr.dim}")
    for name, s in (("s1", s1), ("s2", s2)):
        if not s.is_pure():
            raise NotPure(f"{name} is not pure")
    val = abs(pfaffian((s1.corr + s2.corr) * 0.5))
    return float(min(1.0, max(0.0, val)))


# ---------------------------
# Bound su distanza e fedeltà
# ---------------------------
def _clamp(name: str, value: float, lo: float, hi: float, clipped: Dict[str, float]) -> float:
    out = min(hi, max(lo, value))
    if out != value:
        clipped[name] = value
    return out


def distance_bounds(g1: CorrLike, g2: CorrLike, mode: BoundsMode = "mixed_mixed") -> BoundsReport:
    a, b = _as_skew(g1), _as_skew(g2)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
    if mode == "pure_pure":
        _require_pure(a, "g1")
        _require_pure(b, "g2")
    elif mode == "pure_vs_any":
        _require_pure(a, "g1")

    d = a - b
    n1, n2, ninf = schatten_norm(d, 1), schatten_norm(d, 2), schatten_norm(d, np.inf)
    raw = {"lb_infty": ninf, "ub_mixed": 0.5 * n1}
    if mode == "pure_pure":
        raw["ub_pure"] = 2.0 if ninf >= 2.0 - 1e-9 else 0.5 * n2
    if mode == "pure_vs_any":
        raw["ub_pure_vs_any"] = float(np.sqrt(n1))
    fid = {
        "fid_lb_sq": max(0.0, 1.0 - 0.25 * n1) ** 2,
        "fid_lb_linear": 1.0 - 0.5 * n1,
        "fid_lb_frobenius": 1.0 - 0.25 * n1 - 0.125 * n2 ** 2,
    }
    clipped: Dict[str, float] = {}
    vals = {k: _clamp(k, v, 0.0, 2.0, clipped) for k, v in raw.items()}
    vals.update({k: _clamp(k, v, 0.0, 1.0, clipped) for k, v in fid.items()})
    if clipped:
        log_event("clip_applied", {"op": "distance_bounds", "raw": clipped})
    return BoundsReport(mode=mode, **vals)


def fidelity_lower_bound_pure(g1: CorrLike, g2: CorrLike) -> float:
    """1 − ‖ΔΓ‖₂²/16, valido per coppie pure con ‖ΔΓ‖_∞ < 2."""
    d = _as_skew(g1) - _as_skew(g2)
    return 1.0 - schatten_norm(d, 2) ** 2 / 16.0


def nongaussianity_bounds(g: CorrLike, r: int) -> NonGaussReport:
    corr = _as_skew(g)
    n = corr.n
    if not 0 <= r <= n - 1:
        raise RankExponentOutOfRange(f"r must be in [0, {n - 1}], got {r}")
    lam = np.clip(normal_form(corr).lambdas, 0.0, 1.0)
    gap = 1.0 - lam[r]
    lb_all = gap ** (r + 1) / (1.0 + (r + 1) * gap ** r)
    return NonGaussReport(
        r=r,
        lb_rank_set=gap,
        lb_all_gaussian=lb_all,
        lb_pure_set=1.0 - lam[0],
        ub_pure_set=float(np.sqrt(2.0 * np.sum(1.0 - lam))),
    )


# ---------------------------
# Purificazione, rango
# ---------------------------
def purify(s: GaussianState) -> GaussianState:
    """Stato puro su 2n modi con Γ' = [[Γ, √(I+Γ²)], [−√(I+Γ²), −Γ]]."""
    gam = np.asarray(s.corr)
    w, v = np.linalg.eigh(np.eye(gam.shape[0]) + gam @ gam)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    root = (root + root.T) / 2
    big = np.block([[gam, root], [-root, -gam]])
    return from_correlation(big)


def rank_exponent(s: GaussianState, tol: float = PURE_TOL) -> int:
    if tol <= 0:
        raise InputError("tol must be positive")
    return int(np.sum(s.lambdas < 1.0 - tol))


# ---------------------------
# Stati che conservano il numero di particelle
# ---------------------------
def pnp_to_gamma(c: Union[PnpCorrelation, np.ndarray]) -> SkewMatrix:
    """Γ = (I − 2ℜC) ⊗ iY + (2ℑC) ⊗ I."""
    pc = c if isinstance(c, PnpCorrelation) else PnpCorrelation(np.asarray(c))
    cc = pc.c
    eye = np.eye(pc.n)
    gam = np.kron(eye - 2.0 * cc.real, J2) + np.kron(2.0 * cc.imag, np.eye(2))
    return SkewMatrix.from_array(gam)


def pnp_norm_transfer(c_delta: np.ndarray, p) -> float:
    """4·2^{1/p}·‖C_Δ‖_p: bound su ‖Γ(ρ) − Γ(σ)‖_p."""
    if p not in (1, 2, np.inf, "inf"):
        raise UnsupportedP(f"p must be one of 1, 2, inf; got {p!r}")
    factor = 1.0 if p in (np.inf, "inf") else 2.0 ** (1.0 / p)
    return 4.0 * factor * schatten_norm(np.asarray(c_delta), p)
