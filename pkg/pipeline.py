# pipeline.py
# Esecuzione degli esperimenti: un trial per indice, pool di worker, merge deterministico.
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional

import numpy as np

from config import DENSE_MAX_MODES, MAX_SHOTS
from dense import (
    DenseState, certified_distance, correlation_matrix, gaussian_to_dense, gaussianification,
    random_dense, trace_distance,
)
from errors import ConfigError, PromiseNotCertified
from gaussian import GaussianState, distance_bounds, rank_exponent
from models import Aggregate, ExperimentConfig, RunRecord, TestConfig, TrialOutcome
from provenance import log_event
from sampler import StateSource, dense_source, estimate_gamma, exact_gamma, noisy_source, shot_records, source_for
from skewlin import schatten_norm
from states import AnyState, build_state, random_gaussian, stream, stream_label, to_dense
import algorithms as alg
import export

BOUND_SLACK = 1e-9

# indici di stage per gli stream RNG: (seed, trial, stage)
_STATE, _NOISE, _ALGO = 0, 1, 2


# ---------------------------
# Sorgenti per trial
# ---------------------------
def _max_shots(cfg: ExperimentConfig) -> int:
    return cfg.max_shots or MAX_SHOTS


def _source(cfg: ExperimentConfig, state: AnyState, rng: np.random.Generator) -> StateSource:
    src = source_for(state)
    if cfg.noise == "none" or cfg.noise_strength == 0.0:
        return src
    if cfg.noise == "depolarizing":
        return noisy_source(src, cfg.noise_strength)
    # trace_perturbation: miscela con uno stato denso casuale
    rho = to_dense(state)
    if rho is None:
        raise ConfigError(f"trace_perturbation needs a dense state (modes <= {DENSE_MAX_MODES})")
    return dense_source(rho.mix(random_dense(rho.n, rng), cfg.noise_strength))


def source_dense(src: StateSource) -> Optional[DenseState]:
    """Matrice densità esatta della sorgente (None oltre il limite denso)."""
    if src.n > DENSE_MAX_MODES:
        return None
    if src.kind == "exact_gaussian":
        return gaussian_to_dense(src.gaussian)
    if src.kind == "dense":
        return src.dense
    inner = source_dense(src.inner)
    return None if inner is None else inner.depolarize(src.p)


def _prepare(cfg: ExperimentConfig, trial: int):
    state = build_state(cfg.state, cfg.modes, stream(cfg.seed, trial, _STATE))
    src = _source(cfg, state, stream(cfg.seed, trial, _NOISE))
    return state, src


def _outcome(cfg: ExperimentConfig, trial: int, outcome: str, **kw) -> TrialOutcome:
    return TrialOutcome(trial=trial, outcome=outcome, seed_stream=stream_label(cfg.seed, trial), **kw)


# ---------------------------
# Verdetti attesi (oracolo denso)
# ---------------------------
def _expected_test_verdict(cfg: ExperimentConfig, state: AnyState, src: StateSource) -> Optional[str]:
    """CaseA/CaseB certificato, None se l'istanza è fuori promessa o non certificabile."""
    r = 0 if cfg.command == "test-pure" else cfg.rank_exponent
    gset = cfg.gaussian_set
    if isinstance(state, GaussianState) and src.kind == "exact_gaussian":
        in_set = state.is_pure() if cfg.command == "test-pure" else rank_exponent(state) <= r
        if in_set:
            return "CaseA"
        if gset == "mixed_set":
            return None  # promessa (purezza / rango) violata
    rho = source_dense(src)
    if rho is None:
        return None
    if gset == "mixed_set":
        # promessa sull'input: rango ≤ 2^r (puro se r = 0)
        if np.sum(np.linalg.eigvalsh(rho.rho) > 1e-9) > 2 ** r:
            return None
    lb = certified_distance(rho, gset, r)
    return "CaseB" if lb > cfg.eps_b else None


def _expected_identity(cfg: ExperimentConfig, src: StateSource) -> Optional[str]:
    rho = source_dense(src)
    if rho is None:
        return None
    dist = trace_distance(rho, DenseState.maximally_mixed(rho.n))
    if dist <= 1e-9:
        return "MaximallyMixed"
    if dist >= cfg.eps:
        return "FarFromMaximallyMixed"
    return None


# ---------------------------
# Trial per comando
# ---------------------------
def _trial_verify_bounds(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    n = cfg.modes
    if n > DENSE_MAX_MODES:
        raise ConfigError(f"verify-bounds needs the dense oracle (modes <= {DENSE_MAX_MODES})")
    rng = stream(cfg.seed, trial, _STATE)
    m1, m2 = random_gaussian(n, rng), random_gaussian(n, rng)
    p1, p2 = random_gaussian(n, rng, pure=True), random_gaussian(n, rng, pure=True)
    rho = random_dense(n, rng)

    td_mixed = trace_distance(gaussian_to_dense(m1), gaussian_to_dense(m2))
    b_mixed = distance_bounds(m1.corr, m2.corr, "mixed_mixed")
    d1, d2 = gaussian_to_dense(p1), gaussian_to_dense(p2)
    td_pure = trace_distance(d1, d2)
    b_pure = distance_bounds(p1.corr, p2.corr, "pure_pure")
    td_any = trace_distance(d1, rho)
    b_any = distance_bounds(p1.corr, correlation_matrix(rho), "pure_vs_any")

    gaps = [
        b_mixed.lb_infty - td_mixed,
        td_mixed - b_mixed.ub_mixed,
        b_pure.lb_infty - td_pure,
        td_pure - b_pure.ub_mixed,
        td_pure - b_pure.ub_pure,
        b_any.lb_infty - td_any,
        td_any - b_any.ub_pure_vs_any,
    ]
    violations = sum(1 for g in gaps if g > BOUND_SLACK)
    return _outcome(
        cfg, trial, "ok" if violations == 0 else "violation",
        success=violations == 0, error=max(gaps),
        extra={"violations": float(violations), "td_mixed": td_mixed, "td_pure": td_pure, "td_any": td_any},
    )


def _trial_estimate(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    _, src = _prepare(cfg, trial)
    est = estimate_gamma(
        src, cfg.eps, cfg.delta, cfg.scheme, stream(cfg.seed, trial, _ALGO),
        shots=cfg.shots, max_shots=_max_shots(cfg), keep_counts=cfg.save_estimates,
    )
    err = schatten_norm(est.gamma_hat - exact_gamma(src), np.inf)
    if cfg.save_estimates:
        base = os.path.splitext(cfg.output_path())[0]
        export.save_estimate(est, f"{base}_trial{trial}.txt", cfg.seed)
        export.save_shot_records(shot_records(est, trial), f"{base}_trial{trial}_shots.jsonl")
    return _outcome(
        cfg, trial, "ok", success=None if cfg.shots else err <= cfg.eps, error=err,
        shots=est.shots_used, extra={"bound_shots": float(est.bound_shots)},
    )


def _test_config(cfg: ExperimentConfig, r: int) -> TestConfig:
    return TestConfig(
        eps_a=cfg.eps_a, eps_b=cfg.eps_b, delta=cfg.delta, r=r,
        gaussian_set=cfg.gaussian_set, scheme=cfg.scheme,
    )


def _trial_test(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    state, src = _prepare(cfg, trial)
    rng = stream(cfg.seed, trial, _ALGO)
    if cfg.command == "test-pure":
        res = alg.test_pure(src, _test_config(cfg, 0), rng, max_shots=_max_shots(cfg))
    else:
        res = alg.test_bounded_rank(src, _test_config(cfg, cfg.rank_exponent), rng, max_shots=_max_shots(cfg))
    expected = _expected_test_verdict(cfg, state, src)
    ev = res.evidence
    return _outcome(
        cfg, trial, res.verdict,
        success=None if expected is None else res.verdict == expected,
        shots=res.shots_used,
        extra={
            "lambda_hat": ev.lambda_hat_relevant, "threshold": ev.threshold,
            "local_distance": ev.local_distance,
            "expected_case_b": None if expected is None else float(expected == "CaseB"),
        },
    )


def _trial_reduce_id(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    _, src = _prepare(cfg, trial)
    res = alg.reduce_identity_testing(
        src, cfg.eps, cfg.delta, stream(cfg.seed, trial, _ALGO), scheme=cfg.scheme,
        max_shots=_max_shots(cfg),
    )
    expected = _expected_identity(cfg, src)
    return _outcome(
        cfg, trial, res.verdict,
        success=None if expected is None else res.verdict == expected,
        shots=res.shots_used,
        extra={"gamma_norm": res.gamma_norm, "local_distance": res.local_distance},
    )


def _trial_tomography(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    _, src = _prepare(cfg, trial)
    tomo = alg.tomograph_pure if cfg.command == "tomo-pure" else alg.tomograph_mixed
    rep = tomo(
        src, cfg.eps, cfg.delta, stream(cfg.seed, trial, _ALGO), scheme=cfg.scheme,
        shots=cfg.shots, max_shots=_max_shots(cfg),
    )
    extra: Dict[str, Optional[float]] = {}
    if rep.shots_alt_constant is not None:
        extra["shots_alt_constant"] = float(rep.shots_alt_constant)
    rho = source_dense(src)
    if rho is None:
        return _outcome(cfg, trial, "ok", shots=rep.shots_used, extra=extra)
    learned = gaussian_to_dense(rep.learned)
    err = trace_distance(learned, rho)
    if src.kind != "exact_gaussian":
        extra["error_vs_gaussianification"] = trace_distance(learned, gaussianification(rho).dense)
    return _outcome(
        cfg, trial, "ok", success=None if cfg.shots else err <= cfg.eps, error=err,
        shots=rep.shots_used, extra=extra,
    )


def _trial_robustness(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    state = build_state(cfg.state, cfg.modes, stream(cfg.seed, trial, _STATE))
    if not isinstance(state, GaussianState):
        raise ConfigError("robustness needs a Gaussian base state")
    try:
        rep = alg.robustness_experiment(
            state, cfg.noise, cfg.noise_strength, cfg.eps, cfg.delta, stream(cfg.seed, trial, _ALGO),
            promise=cfg.promise, scheme=cfg.scheme, max_shots=_max_shots(cfg),
        )
    except PromiseNotCertified:
        # fuori contratto: nessun verdetto
        return _outcome(cfg, trial, "PromiseNotCertified")
    return _outcome(
        cfg, trial, "ok", success=rep.dense_error <= cfg.eps, error=rep.dense_error,
        shots=rep.shots_used,
        extra={"promise_value": rep.promise_value, "tomography_eps": rep.tomography_eps},
    )


_TRIALS: Dict[str, Callable[[ExperimentConfig, int], TrialOutcome]] = {
    "verify-bounds": _trial_verify_bounds,
    "estimate": _trial_estimate,
    "test-pure": _trial_test,
    "test-rank": _trial_test,
    "reduce-id": _trial_reduce_id,
    "tomo-pure": _trial_tomography,
    "tomo-mixed": _trial_tomography,
    "robustness": _trial_robustness,
}


# ---------------------------
# Aggregazione
# ---------------------------
def aggregate(cfg: ExperimentConfig, results: List[TrialOutcome]) -> Aggregate:
    decided = [r.success for r in results if r.success is not None]
    errors = [r.error for r in results if r.error is not None and math.isfinite(r.error)]
    violations = None
    if cfg.command == "verify-bounds":
        violations = int(sum(r.extra.get("violations") or 0 for r in results))
    return Aggregate(
        success_fraction=sum(decided) / len(decided) if decided else None,
        median_error=statistics.median(errors) if errors else None,
        shot_total=sum(r.shots for r in results),
        violations=violations,
    )


# ---------------------------
# run / sweep
# ---------------------------
def run(cfg: ExperimentConfig) -> RunRecord:
    if cfg.command == "sweep":
        return sweep(cfg)
    t0 = time.time()
    log_event("run_start", {"command": cfg.command, "modes": cfg.modes, "trials": cfg.trials, "seed": cfg.seed})
    trial_fn = _TRIALS[cfg.command]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        # map conserva l'ordine degli indici: il numero di worker non cambia i risultati
        results = list(pool.map(lambda t: trial_fn(cfg, t), range(cfg.trials)))
    agg = aggregate(cfg, results)
    secs = round(time.time() - t0, 3)
    log_event("run_end", {
        "command": cfg.command, "secs": secs, "success_fraction": agg.success_fraction,
        "shot_total": agg.shot_total,
    })
    return RunRecord(config=cfg, results=results, aggregate=agg, wall_time=secs)


_AXIS_FIELD = {"shots": "shots", "eps": "eps", "modes": "modes"}


def _point_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    data = cfg.dict()
    field = _AXIS_FIELD[cfg.axis]
    data.update({
        "command": cfg.base_command, "axis": None, "points": None, "base_command": None,
        field: int(round(value)) if field in ("shots", "modes") else float(value),
    })
    return ExperimentConfig.parse_obj(data)


def log_log_slope(xs: List[float], ys: List[Optional[float]]) -> Optional[float]:
    pts = [(x, y) for x, y in zip(xs, ys) if y is not None and x > 0 and y > 0]
    if len(pts) < 2:
        return None
    lx, ly = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def sweep(cfg: ExperimentConfig) -> RunRecord:
    """Un sotto-record per punto + pendenza log-log dell'errore mediano."""
    t0 = time.time()
    log_event("run_start", {"command": "sweep", "base": cfg.base_command, "axis": cfg.axis, "points": cfg.points})
    subs = []
    for value in cfg.points:
        sub = run(_point_config(cfg, value))
        log_event("sweep_point", {
            "axis": cfg.axis, "value": value, "median_error": sub.aggregate.median_error,
            "success_fraction": sub.aggregate.success_fraction,
        })
        subs.append(sub)
    slope = log_log_slope(list(cfg.points), [s.aggregate.median_error for s in subs])
    fractions = [s.aggregate.success_fraction for s in subs if s.aggregate.success_fraction is not None]
    agg = Aggregate(
        success_fraction=min(fractions) if fractions else None,
        median_error=None,
        shot_total=sum(s.aggregate.shot_total for s in subs),
    )
    secs = round(time.time() - t0, 3)
    log_event("run_end", {"command": "sweep", "secs": secs, "slope": slope})
    return RunRecord(config=cfg, aggregate=agg, wall_time=secs, sub_records=subs, slope=slope)
