# sampler.py
"""Simulazione delle misure e stima della matrice di correlazione Γ."""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np

from config import MAX_SHOTS
from dense import (
    DenseState, correlation_matrix, expectation, gaussian_to_dense, gaussian_unitary, pauli_matrix,
)
from errors import BudgetOverflow, InputError, InvalidMatching
from gaussian import GaussianState, rotate
from models import Scheme
from provenance import log_event
from skewlin import SkewMatrix

Pair = Tuple[int, int]
Matching = Tuple[Pair, ...]


# ---------------------------
# Sorgenti di stati
# ---------------------------
@dataclass(frozen=True)
class StateSource:
    """Copie di uno stato: gaussiano esatto, denso, o depolarizzato (canale su una sorgente interna)."""
    kind: Literal["exact_gaussian", "dense", "noisy"]
    n: int
    gaussian: Optional[GaussianState] = None
    dense: Optional[DenseState] = None
    inner: Optional["StateSource"] = None
    p: float = 0.0


def exact_source(s: GaussianState) -> StateSource:
    return StateSource(kind="exact_gaussian", n=s.n, gaussian=s)


def dense_source(rho: DenseState) -> StateSource:
    return StateSource(kind="dense", n=rho.n, dense=rho)


def noisy_source(inner: StateSource, p: float) -> StateSource:
    if not 0.0 <= p <= 1.0:
        raise InputError(f"depolarizing strength must be in [0,1], got {p}")
    return StateSource(kind="noisy", n=inner.n, inner=inner, p=float(p))


def source_for(state) -> StateSource:
    if isinstance(state, GaussianState):
        return exact_source(state)
    if isinstance(state, DenseState):
        return dense_source(state)
    raise InputError(f"cannot build a source from {type(state).__name__}")


def rotated(src: StateSource, q: np.ndarray) -> StateSource:
    """Sorgente di U_Q ρ U_Q†."""
    if src.kind == "exact_gaussian":
        return exact_source(rotate(src.gaussian, q))
    if src.kind == "dense":
        return dense_source(src.dense.conjugate(gaussian_unitary(q)))
    # il depolarizzante commuta con ogni unitaria
    return noisy_source(rotated(src.inner, q), src.p)


def exact_gamma(src: StateSource) -> SkewMatrix:
    if src.kind == "exact_gaussian":
        return src.gaussian.corr
    if src.kind == "dense":
        return correlation_matrix(src.dense)
    return exact_gamma(src.inner) * (1.0 - src.p)


def reduced_dense(src: StateSource, k: int) -> DenseState:
    """Stato ridotto esatto sui primi k modi."""
    if src.kind == "exact_gaussian":
        return gaussian_to_dense(src.gaussian.restrict_modes(k))
    if src.kind == "dense":
        return src.dense.partial_trace_first(k)
    return reduced_dense(src.inner, k).depolarize(src.p)


# ---------------------------
# Matching (1-fattorizzazione di K_2n)
# ---------------------------
@dataclass(frozen=True)
class MatchingPlan:
    n: int
    matchings: Tuple[Matching, ...]

    def pairs(self) -> List[Pair]:
        return [p for m in self.matchings for p in m]


def matchings(n: int) -> MatchingPlan:
    """Metodo del cerchio: vertice 2n−1 fisso, gli altri ruotano."""
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    v = 2 * n - 1
    rounds = []
    for r in range(v):
        pairs = [(r, v)]
        for i in range(1, n):
            a, b = (r + i) % v, (r - i) % v
            pairs.append((min(a, b), max(a, b)))
        rounds.append(tuple(sorted((min(p), max(p)) for p in pairs)))
    return MatchingPlan(n=n, matchings=tuple(rounds))


def _check_matching(m: Sequence[Pair], n: int):
    flat = [x for p in m for x in p]
    if len(m) != n or sorted(flat) != list(range(2 * n)) or any(j >= k for j, k in m):
        raise InvalidMatching(f"{list(m)} is not a perfect matching of [0, {2 * n}) with j < k")


def _perm_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def matching_rotation(m: Sequence[Pair], n: int) -> np.ndarray:
    """Permutazione con segno, det +1: la coppia s-esima (j,k) va nel blocco s.

    Dopo la rotazione ⟨Z_s⟩ = sign_s · Γ_jk, con sign_s letto da matching_signs.
    """
    _check_matching(m, n)
    perm = [x for p in m for x in p]
    q = np.zeros((2 * n, 2 * n))
    for row, col in enumerate(perm):
        q[row, col] = 1.0
    if _perm_sign(perm) < 0:
        q[1] = -q[1]
    return q


def matching_signs(q: np.ndarray, m: Sequence[Pair]) -> np.ndarray:
    return np.array([q[2 * s, j] * q[2 * s + 1, k] for s, (j, k) in enumerate(m)])


# ---------------------------
# Campionamento in base Z
# ---------------------------
def _condition(m: np.ndarray, j: int, bit: int, prob: float) -> np.ndarray:
    # aggiornamento di Γ dopo aver misurato Z_j con esito bit (modi successivi esatti)
    a, b = 2 * j, 2 * j + 1
    upd = np.outer(m[b], m[a])
    upd -= upd.T
    return m + upd * ((-1) ** bit / (2.0 * prob))


def _gaussian_counts(gam: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Istogramma esatto di `shots` campioni: albero di split binomiali modo per modo."""
    n = gam.shape[0] // 2
    counts = np.zeros(2 ** n, dtype=np.int64)
    stack = [(0, 0, int(shots), np.array(gam, dtype=float))]
    while stack:
        j, prefix, c, m = stack.pop()
        if j == n:
            counts[prefix] += c
            continue
        p1 = min(1.0, max(0.0, 0.5 * (1.0 - m[2 * j, 2 * j + 1])))
        c1 = int(rng.binomial(c, p1))
        for bit, cb, pb in ((0, c - c1, 1.0 - p1), (1, c1, p1)):
            if cb == 0:
                continue
            nxt = _condition(m, j, bit, pb) if j + 1 < n else m
            stack.append((j + 1, 2 * prefix + bit, cb, nxt))
    return counts


def sample_z_counts(src: StateSource, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Conteggi per esito x ∈ [0, 2^n), modo 0 = bit più significativo."""
    if shots < 0:
        raise InputError(f"shots must be non-negative, got {shots}")
    if src.kind == "exact_gaussian":
        return _gaussian_counts(np.asarray(src.gaussian.corr), shots, rng)
    if src.kind == "dense":
        return rng.multinomial(shots, src.dense.diagonal()).astype(np.int64)
    k = int(rng.binomial(shots, src.p))
    d = 2 ** src.n
    return sample_z_counts(src.inner, shots - k, rng) + rng.multinomial(k, np.full(d, 1.0 / d))


def sample_z_basis(src: StateSource, shots: int, rng: np.random.Generator) -> List[str]:
    if shots < 1:
        raise InputError(f"shots must be >= 1, got {shots}")
    counts = sample_z_counts(src, shots, rng)
    outcomes = rng.permutation(np.repeat(np.arange(counts.size), counts))
    return [format(int(x), f"0{src.n}b") for x in outcomes]


def z_means(counts: np.ndarray, n: int) -> np.ndarray:
    """⟨Z_m⟩ empirico per ogni modo."""
    x = np.arange(counts.size)
    bits = (x[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    total = counts.sum()
    return (counts[:, None] * (1 - 2 * bits)).sum(axis=0) / total


# ---------------------------
# Budget e stima di Γ
# ---------------------------
@dataclass(frozen=True)
class ShotBudget:
    per_round: int
    rounds: int
    total: int
    bound_shots: int


def shot_budget(n: int, eps_stat: float, delta: float, scheme: Scheme) -> ShotBudget:
    if scheme == "exact":
        return ShotBudget(0, 0, 0, 0)
    if scheme == "commuting":
        rounds = 2 * n - 1
        bound = math.ceil(8 * n ** 3 / eps_stat ** 2 * math.log(4 * n ** 2 / delta))
        per = math.ceil(bound / rounds)
        return ShotBudget(per, rounds, per * rounds, bound)
    if scheme == "pauli_pairs":
        m = n * (2 * n - 1)
        eps_entry = eps_stat / (2 * n)
        per = math.ceil(2.0 / eps_entry ** 2 * math.log(2 * m / delta))
        bound = math.ceil(16 * n ** 4 / eps_stat ** 2 * math.log(n ** 2 / delta))
        return ShotBudget(per, m, per * m, bound)
    raise InputError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: SkewMatrix
    shots_used: int
    scheme: Scheme
    eps_stat: float
    delta: float
    bound_shots: int = 0
    counts: Optional[Tuple[np.ndarray, ...]] = field(default=None, repr=False)


def check_budget(total: int, cap: int, what: str):
    if total > cap:
        log_event("budget_overflow", {"op": what, "requested": total, "cap": cap})
        raise BudgetOverflow(total, cap)


def estimate_gamma(
    src: StateSource,
    eps_stat: float,
    delta: float,
    scheme: Scheme,
    rng: np.random.Generator,
    shots: Optional[int] = None,
    max_shots: int = MAX_SHOTS,
    keep_counts: bool = False,
) -> GammaEstimate:
    """Γ̂ con garanzia ‖Γ̂ − Γ‖_∞, ‖Γ̂ − Γ‖₂ ≤ eps_stat con probabilità ≥ 1 − δ.

    `shots` (totale, diviso fra i round) sostituisce il budget teorico.
    """
    n = src.n
    if scheme == "exact":
        est = GammaEstimate(exact_gamma(src), 0, "exact", 0.0, delta)
        log_event("estimate_done", {"scheme": "exact", "n": n, "shots": 0})
        return est
    if not 0.0 < eps_stat <= 2.0:
        raise InputError(f"eps_stat must be in (0, 2], got {eps_stat}")
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta must be in (0, 1), got {delta}")

    budget = shot_budget(n, eps_stat, delta, scheme)
    per_round = budget.per_round if shots is None else max(1, math.ceil(shots / budget.rounds))
    total = per_round * budget.rounds
    check_budget(total, max_shots, f"estimate_gamma/{scheme}")

    dim = 2 * n
    gam = np.zeros((dim, dim))
    kept = []
    if scheme == "commuting":
        plan = matchings(n)
        children = rng.spawn(len(plan.matchings))
        for m, child in zip(plan.matchings, children):
            q = matching_rotation(m, n)
            counts = sample_z_counts(rotated(src, q), per_round, child)
            means = z_means(counts, n) * matching_signs(q, m)
            for s, (j, k) in enumerate(m):
                gam[j, k] = means[s]
            if keep_counts:
                kept.append(counts)
    else:
        # una misura di Pauli per coppia: esiti ±1 con P(+1) = (1 + Γ_jk)/2
        exact = np.asarray(exact_gamma(src))
        iu = np.triu_indices(dim, 1)
        p_plus = np.clip((1.0 + exact[iu]) / 2.0, 0.0, 1.0)
        plus = rng.binomial(per_round, p_plus)
        gam[iu] = 2.0 * plus / per_round - 1.0

    gam = np.clip(gam, -1.0, 1.0)
    est = GammaEstimate(
        gamma_hat=SkewMatrix(dim, gam[np.triu_indices(dim, 1)]),
        shots_used=total,
        scheme=scheme,
        eps_stat=eps_stat,
        delta=delta,
        bound_shots=budget.bound_shots,
        counts=tuple(kept) if keep_counts else None,
    )
    log_event("estimate_done", {
        "scheme": scheme, "n": n, "shots": total, "eps_stat": eps_stat, "delta": delta,
        "bound_shots": budget.bound_shots,
    })
    return est


def shot_records(est: GammaEstimate, trial: int) -> Iterator[dict]:
    """Righe {trial, matching_index, bitstring} dai conteggi conservati."""
    if est.counts is None:
        return
    n = est.gamma_hat.n
    for idx, counts in enumerate(est.counts):
        for x in np.flatnonzero(counts):
            bits = format(int(x), f"0{n}b")
            for _ in range(int(counts[x])):
                yield {"trial": trial, "matching_index": idx, "bitstring": bits}


# ---------------------------
# Pauli locali
# ---------------------------
def measure_pauli(local: DenseState, label: str, shots: int, rng: np.random.Generator) -> int:
    """Numero di esiti +1 su `shots` misure della stringa di Pauli `label`."""
    if len(label) != local.n:
        raise InputError(f"label {label!r} does not act on {local.n} qubits")
    e = float(np.real(expectation(local, pauli_matrix(label))))
    return int(rng.binomial(shots, min(1.0, max(0.0, (1.0 + e) / 2.0))))
