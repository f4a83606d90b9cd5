# algorithms.py
"""Testing e tomografia di stati free-fermionici a partire da copie di una sorgente."""
from __future__ import annotations
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import DENSE_PSD_TOL, LOCAL_TOMO_MAX_MODES, MAX_SHOTS, MIX2_TFACTOR, STRICT_SLACK
from dense import (
    DenseState, gaussian_to_dense, gaussianification, pauli_matrix, random_dense, trace_distance,
)
from errors import InfeasibleThresholds, InputError, PromiseNotCertified, TooManyLocalModes
from gaussian import GaussianState, corr_from_normal_form
from models import (
    Evidence, GaussianSet, IdentityTestResult, NoiseKind, Promise, RobustnessReport, Scheme,
    TestConfig, TestVerdict, TomographyReport,
)
from provenance import log_event
from sampler import (
    StateSource, check_budget, dense_source, estimate_gamma, measure_pauli, reduced_dense, rotated,
)
from skewlin import NormalForm, normal_form, schatten_norm


# ---------------------------
# Soglie
# ---------------------------
@dataclass(frozen=True)
class PureThresholds:
    eps_stat: float
    eps_t: float


@dataclass(frozen=True)
class RankThresholds:
    eps_stat: float
    eps_t: float
    eps_tom: float
    eps_t2: float


def pure_test_thresholds(n: int, eps_a: float, eps_b: float, gaussian_set: GaussianSet) -> PureThresholds:
    x = eps_b ** 2 / (2 * n)
    if gaussian_set == "mixed_set":
        # promessa di purezza sull'input
        if not eps_b > 2.0 * math.sqrt(n * eps_a):
            raise InfeasibleThresholds(f"eps_b={eps_b} must exceed 2*sqrt(n*eps_a)={2 * math.sqrt(n * eps_a):.6g}")
        return PureThresholds(eps_stat=STRICT_SLACK * 0.5 * (x - 2.0 * eps_a), eps_t=0.5 * (x + 2.0 * eps_a))
    if gaussian_set == "pure_set":
        if not eps_b > math.sqrt(2 * n * eps_a):
            raise InfeasibleThresholds(f"eps_b={eps_b} must exceed sqrt(2n*eps_a)={math.sqrt(2 * n * eps_a):.6g}")
        return PureThresholds(eps_stat=0.25 * (x - eps_a), eps_t=0.5 * (x + eps_a))
    raise InputError(f"the pure-state tester does not support gaussian_set={gaussian_set!r}")


def rank_test_thresholds(
    n: int, r: int, eps_a: float, eps_b: float, gaussian_set: GaussianSet,
) -> RankThresholds:
    if r >= n:
        raise InfeasibleThresholds(f"r={r} leaves no pure modes (n={n})")
    if r < 0:
        raise InputError(f"r must be non-negative, got {r}")
    d = 2 ** 5 * (n - r)
    if gaussian_set == "rank_set":
        floor = math.sqrt(d * eps_a)
        eps_stat = STRICT_SLACK * 0.5 * (eps_b ** 2 / d - eps_a)
        eps_t = eps_b ** 2 / (2 ** 6 * (n - r)) + eps_a / 2
    elif gaussian_set == "mixed_set":
        # promessa di rango basso, insieme gaussiano misto
        a = (2.0 * eps_a) ** (1.0 / (r + 1))
        floor = math.sqrt(d * a)
        eps_stat = STRICT_SLACK * 0.5 * (eps_b ** 2 / d - a)
        eps_t = MIX2_TFACTOR * (eps_stat + a)
    else:
        raise InputError(f"the bounded-rank tester does not support gaussian_set={gaussian_set!r}")
    if not eps_b > max(floor, 2 * (n + 1) * eps_a):
        raise InfeasibleThresholds(
            f"eps_b={eps_b} must exceed max({floor:.6g}, {2 * (n + 1) * eps_a:.6g})"
        )
    eps_tom = STRICT_SLACK * (eps_b / 2 - (n + 1) * eps_a) / (n + 2)
    eps_t2 = (n + 1) / (n + 2) * (eps_b / 2 + eps_a)
    return RankThresholds(eps_stat=eps_stat, eps_t=eps_t, eps_tom=eps_tom, eps_t2=eps_t2)


# ---------------------------
# Test di stati puri
# ---------------------------
def test_pure(
    src: StateSource, cfg: TestConfig, rng: np.random.Generator, max_shots: int = MAX_SHOTS,
) -> TestVerdict:
    th = pure_test_thresholds(src.n, cfg.eps_a, cfg.eps_b, cfg.gaussian_set)
    est = estimate_gamma(src, th.eps_stat, cfg.delta, cfg.scheme, rng, max_shots=max_shots)
    lam_min = float(normal_form(est.gamma_hat).lambdas[0])
    verdict = "CaseA" if lam_min >= 1.0 - th.eps_t else "CaseB"
    out = TestVerdict(
        verdict=verdict,
        evidence=Evidence(
            lambda_hat_relevant=lam_min, threshold=th.eps_t, stage="eigenvalue_stage", eps_stat=th.eps_stat,
        ),
        shots_used=est.shots_used,
    )
    log_event("verdict", {"op": "test_pure", "verdict": verdict, "lambda_min": lam_min, "eps_t": th.eps_t})
    return out


test_pure.__test__ = False  # non è un test pytest


# ---------------------------
# Tomografia locale (Pauli a copia singola)
# ---------------------------
def local_tomography_budget(k: int, eps_tom: float, delta: float):
    n_paulis = 4 ** k - 1
    eps_p = eps_tom / (2 * 2 ** k)
    per = math.ceil(2.0 / eps_p ** 2 * math.log(2 * n_paulis / delta))
    return per, n_paulis


def project_density(m: np.ndarray) -> np.ndarray:
    """Proiezione su stati: autovalori tagliati a 0 e traccia rinormalizzata."""
    h = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(h.shape[0], dtype=complex) / h.shape[0]
    return (v * (w / w.sum())) @ v.conj().T


def local_full_tomography(
    src: StateSource,
    modes: int,
    eps_tom: float,
    delta: float,
    rng: np.random.Generator,
    max_shots: int = MAX_SHOTS,
):
    """Stima dello stato ridotto sui primi `modes` modi, ‖ρ̂ − ρ‖₁ ≤ eps_tom con prob. ≥ 1 − δ.

    Ritorna (DenseState, shots usati).
    """
    k = int(modes)
    if k > LOCAL_TOMO_MAX_MODES:
        raise TooManyLocalModes(f"local tomography on {k} modes exceeds the cap {LOCAL_TOMO_MAX_MODES}")
    if k < 1 or k > src.n:
        raise InputError(f"modes must be in [1, {src.n}], got {k}")
    if not 0.0 < eps_tom < 1.0 or not 0.0 < delta < 1.0:
        raise InputError(f"eps_tom and delta must lie in (0,1), got {eps_tom}, {delta}")
    per, n_paulis = local_tomography_budget(k, eps_tom, delta)
    check_budget(per * n_paulis, max_shots, "local_full_tomography")

    local = reduced_dense(src, k)
    d = 2 ** k
    acc = np.eye(d, dtype=complex)
    for letters in itertools.product("IXYZ", repeat=k):
        label = "".join(letters)
        if label == "I" * k:
            continue
        plus = measure_pauli(local, label, per, rng)
        acc += (2.0 * plus / per - 1.0) * pauli_matrix(label)
    rho_hat = DenseState(k, project_density(acc / d))
    return rho_hat, per * n_paulis


@dataclass(frozen=True)
class LocalStageResult:
    distance: float
    far: bool
    shots_used: int


def local_gaussianity_stage(
    src: StateSource,
    nf_hat: NormalForm,
    r: int,
    eps_tom: float,
    eps_t2: float,
    delta: float,
    rng: np.random.Generator,
    max_shots: int = MAX_SHOTS,
) -> LocalStageResult:
    """Ruota con Ôᵀ (modi a λ̂ minimo in testa), tomografia sui primi r modi, distanza da σ(Γ̂_r)."""
    rot = rotated(src, nf_hat.q.T)
    rho_hat, shots = local_full_tomography(rot, r, eps_tom, delta, rng, max_shots=max_shots)
    sigma = gaussianification(rho_hat).dense
    dist = trace_distance(rho_hat, sigma)
    return LocalStageResult(distance=dist, far=dist > eps_t2, shots_used=shots)


def test_bounded_rank(
    src: StateSource, cfg: TestConfig, rng: np.random.Generator, max_shots: int = MAX_SHOTS,
) -> TestVerdict:
    n, r = src.n, cfg.r
    th = rank_test_thresholds(n, r, cfg.eps_a, cfg.eps_b, cfg.gaussian_set)
    rng_est, rng_tom = rng.spawn(2)
    est = estimate_gamma(src, th.eps_stat, cfg.delta / 2, cfg.scheme, rng_est, max_shots=max_shots)
    nf_hat = normal_form(est.gamma_hat)
    lam_r = float(nf_hat.lambdas[r])
    if lam_r <= 1.0 - th.eps_t:
        out = TestVerdict(
            verdict="CaseB",
            evidence=Evidence(
                lambda_hat_relevant=lam_r, threshold=th.eps_t, stage="eigenvalue_stage",
                eps_stat=th.eps_stat, eps_tom=th.eps_tom, threshold_2=th.eps_t2,
            ),
            shots_used=est.shots_used,
        )
    else:
        if r == 0:
            # rango 1: nessun modo misto da controllare, lo stato è ε-vicino a un puro gaussiano
            stage = LocalStageResult(distance=0.0, far=False, shots_used=0)
        else:
            stage = local_gaussianity_stage(
                src, nf_hat, r, th.eps_tom, th.eps_t2, cfg.delta / 2, rng_tom, max_shots=max_shots,
            )
        out = TestVerdict(
            verdict="CaseB" if stage.far else "CaseA",
            evidence=Evidence(
                lambda_hat_relevant=lam_r, threshold=th.eps_t, stage="tomography_stage",
                local_distance=stage.distance, eps_stat=th.eps_stat, eps_tom=th.eps_tom,
                threshold_2=th.eps_t2,
            ),
            shots_used=est.shots_used + stage.shots_used,
        )
    log_event("verdict", {
        "op": "test_bounded_rank", "verdict": out.verdict, "stage": out.evidence.stage,
        "lambda_r": lam_r, "eps_t": th.eps_t, "local_distance": out.evidence.local_distance,
    })
    return out


test_bounded_rank.__test__ = False  # idem


# ---------------------------
# Riduzione al test d'identità
# ---------------------------
def reduce_identity_testing(
    src: StateSource,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    scheme: Scheme = "commuting",
    max_shots: int = MAX_SHOTS,
) -> IdentityTestResult:
    n = src.n
    eps_stat, eps_t = eps / (6 * n), eps / (3 * n)
    rng_est, rng_tom = rng.spawn(2)
    est = estimate_gamma(src, eps_stat, delta / 2, scheme, rng_est, max_shots=max_shots)
    norm = schatten_norm(est.gamma_hat, np.inf)
    if norm > eps_t:
        res = IdentityTestResult(
            verdict="FarFromMaximallyMixed", gamma_norm=norm, threshold=eps_t,
            stage="eigenvalue_stage", shots_used=est.shots_used,
        )
    else:
        # solver free-fermionico a rango pieno: ε_B = ε, ε_A = 0, r = n
        eps_tom = STRICT_SLACK * (eps / 2) / (n + 2)
        eps_t2 = (n + 1) / (n + 2) * (eps / 2)
        stage = local_gaussianity_stage(
            src, normal_form(est.gamma_hat), n, eps_tom, eps_t2, delta / 2, rng_tom, max_shots=max_shots,
        )
        res = IdentityTestResult(
            verdict="FarFromMaximallyMixed" if stage.far else "MaximallyMixed",
            gamma_norm=norm, threshold=eps_t, stage="tomography_stage",
            local_distance=stage.distance, shots_used=est.shots_used + stage.shots_used,
        )
    log_event("verdict", {"op": "reduce_identity_testing", "verdict": res.verdict, "gamma_norm": norm})
    return res


# ---------------------------
# Tomografia
# ---------------------------
def _check_eps_delta(eps: float, delta: float):
    if not 0.0 < eps < 1.0 or not 0.0 < delta < 1.0:
        raise InputError(f"eps and delta must lie in (0,1), got {eps}, {delta}")


def pure_state_from_estimate(gamma_hat) -> GaussianState:
    """Stato puro G_Ô|0ⁿ⟩ dalla forma normale di Γ̂ (tutti i λ posti a 1)."""
    nf = normal_form(gamma_hat)
    nf = NormalForm(q=nf.q, lambdas=np.ones_like(nf.lambdas), det_sign=nf.det_sign)
    return GaussianState(corr_from_normal_form(nf), nf)


def mixed_state_from_estimate(gamma_hat) -> GaussianState:
    """Stato gaussiano con forma normale (Ô, min(λ̂, 1))."""
    nf = normal_form(gamma_hat)
    nf = NormalForm(q=nf.q, lambdas=np.minimum(nf.lambdas, 1.0), det_sign=nf.det_sign)
    return GaussianState(corr_from_normal_form(nf), nf)


def tomograph_pure(
    src: StateSource,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    scheme: Scheme = "commuting",
    shots: Optional[int] = None,
    max_shots: int = MAX_SHOTS,
) -> TomographyReport:
    _check_eps_delta(eps, delta)
    n = src.n
    est = estimate_gamma(src, eps, delta, scheme, rng, shots=shots, max_shots=max_shots)
    learned = pure_state_from_estimate(est.gamma_hat)
    alt = math.ceil(32 * n ** 3 / eps ** 2 * math.log(4 * n ** 2 / delta))
    log_event("tomography_done", {"op": "tomograph_pure", "n": n, "shots": est.shots_used, "alt": alt})
    return TomographyReport(
        learned=learned, shots_used=est.shots_used, target_eps=eps, target_delta=delta,
        eps_stat=est.eps_stat, shots_alt_constant=alt,
    )


def tomograph_mixed(
    src: StateSource,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    scheme: Scheme = "commuting",
    shots: Optional[int] = None,
    max_shots: int = MAX_SHOTS,
) -> TomographyReport:
    _check_eps_delta(eps, delta)
    n = src.n
    eps_stat = eps / math.sqrt(2 * n)
    est = estimate_gamma(src, eps_stat, delta, scheme, rng, shots=shots, max_shots=max_shots)
    learned = mixed_state_from_estimate(est.gamma_hat)
    log_event("tomography_done", {"op": "tomograph_mixed", "n": n, "shots": est.shots_used})
    return TomographyReport(
        learned=learned, shots_used=est.shots_used, target_eps=eps, target_delta=delta,
        eps_stat=est.eps_stat,
    )


# ---------------------------
# Robustezza
# ---------------------------
def apply_noise(
    rho: DenseState, noise: NoiseKind, strength: float, rng: np.random.Generator,
) -> DenseState:
    if noise == "none" or strength == 0.0:
        return rho
    if noise == "depolarizing":
        return rho.depolarize(strength)
    if noise == "trace_perturbation":
        return rho.mix(random_dense(rho.n, rng), strength)
    raise InputError(f"unknown noise kind {noise!r}")


def robustness_experiment(
    base: GaussianState,
    noise: NoiseKind,
    strength: float,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    promise: Promise = "trace_distance",
    scheme: Scheme = "commuting",
    max_shots: int = MAX_SHOTS,
) -> RobustnessReport:
    """Tomografia mista su un input gaussiano perturbato, con promessa certificata dall'oracolo denso."""
    _check_eps_delta(eps, delta)
    rng_noise, rng_tomo = rng.spawn(2)
    n = base.n
    rho = apply_noise(gaussian_to_dense(base), noise, strength, rng_noise)
    g = gaussianification(rho)
    if promise == "trace_distance":
        value = trace_distance(rho, g.dense)
        if value > eps / (3 * n):
            log_event("promise_not_certified", {"promise": promise, "value": value, "bound": eps / (3 * n)})
            raise PromiseNotCertified(f"||rho - G(rho)||_1 = {value:.3e} > eps/(3n) = {eps / (3 * n):.3e}")
        tomo_eps = eps / 3
    else:
        value = g.d_nongauss
        tomo_eps = eps - math.sqrt(2 * math.log(2) * value)
        if value > eps ** 2 or tomo_eps <= 0:
            log_event("promise_not_certified", {"promise": promise, "value": value, "bound": eps ** 2})
            raise PromiseNotCertified(f"relative entropy of non-Gaussianity {value:.3e} leaves no accuracy budget")
    # ρ già gaussiano: nessuna perdita di accuratezza
    if value <= DENSE_PSD_TOL:
        tomo_eps = eps
    rep = tomograph_mixed(dense_source(rho), tomo_eps, delta, rng_tomo, scheme=scheme, max_shots=max_shots)
    err = trace_distance(gaussian_to_dense(rep.learned), rho)
    return RobustnessReport(
        learned=rep.learned, dense_error=err, promise_value=value, promise=promise,
        tomography_eps=tomo_eps, shots_used=rep.shots_used,
    )
