# models.py
# Free-fermion toolkit - record di input/output (Pydantic 1.x)
# Python 3.10+

from __future__ import annotations
import os
from typing import Any, Dict, List, Optional, Literal
from pydantic import BaseModel, Field, validator, root_validator, conint, confloat

from config import DEFAULT_SEED, OUT_DIR, TOOLKIT_VERSION, WORKERS

# =========================
# Enums & literals
# =========================

BoundsMode = Literal["pure_pure", "mixed_mixed", "pure_vs_any"]
GaussianSet = Literal["pure_set", "mixed_set", "rank_set"]
Scheme = Literal["pauli_pairs", "commuting", "exact"]
Verdict = Literal["CaseA", "CaseB"]
Stage = Literal["eigenvalue_stage", "tomography_stage"]
IdentityVerdict = Literal["MaximallyMixed", "FarFromMaximallyMixed"]
Promise = Literal["trace_distance", "relative_entropy"]
NoiseKind = Literal["none", "depolarizing", "trace_perturbation"]
Command = Literal[
    "verify-bounds", "estimate", "test-pure", "test-rank", "reduce-id",
    "tomo-pure", "tomo-mixed", "robustness", "sweep",
]
StateKind = Literal[
    "vacuum", "product", "random_gaussian", "maximally_mixed", "dense_fixture", "ghz3", "odd_probe",
]
SweepAxis = Literal["shots", "eps", "modes"]

Unit = confloat(ge=0.0, le=1.0)
Distance = confloat(ge=0.0, le=2.0)


class _Frozen(BaseModel):
    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True


# =========================
# Bound e metriche
# =========================

class BoundsReport(_Frozen):
    mode: BoundsMode
    lb_infty: Distance
    ub_pure: Optional[Distance] = None          # None = Undefined
    ub_mixed: Distance
    ub_pure_vs_any: Optional[confloat(ge=0.0)] = None
    fid_lb_sq: Unit
    fid_lb_linear: Unit
    fid_lb_frobenius: Unit


class NonGaussReport(_Frozen):
    r: conint(ge=0)
    lb_rank_set: Unit
    lb_all_gaussian: Distance
    lb_pure_set: Unit
    ub_pure_set: confloat(ge=0.0)


class StateMetrics(_Frozen):
    trace_dist: Distance
    fidelity: Unit
    relative_entropy: float                      # può essere inf

    @validator("relative_entropy")
    def non_negative(cls, v):
        if v < 0:
            raise ValueError("relative entropy must be >= 0")
        return v


# =========================
# Testing / tomografia
# =========================

class TestConfig(_Frozen):
    __test__ = False  # non è una classe di test pytest

    eps_a: confloat(ge=0.0) = 0.0
    eps_b: confloat(gt=0.0)
    delta: confloat(gt=0.0, lt=1.0)
    r: conint(ge=0) = 0
    gaussian_set: GaussianSet = "mixed_set"
    scheme: Scheme = "commuting"

    @validator("eps_b")
    def check_order(cls, v, values):
        if "eps_a" in values and v <= values["eps_a"]:
            raise ValueError("'eps_b' must be > 'eps_a'")
        return v


class Evidence(_Frozen):
    lambda_hat_relevant: float
    threshold: float
    stage: Stage
    local_distance: Optional[float] = None
    eps_stat: float
    eps_tom: Optional[float] = None
    threshold_2: Optional[float] = None


class TestVerdict(_Frozen):
    __test__ = False

    verdict: Verdict
    evidence: Evidence
    shots_used: conint(ge=0)


class IdentityTestResult(_Frozen):
    verdict: IdentityVerdict
    gamma_norm: float                            # ‖Γ̂‖_∞
    threshold: float
    stage: Stage
    local_distance: Optional[float] = None
    shots_used: conint(ge=0)


class EstimateMeta(BaseModel):
    """Header dei file di stima di Γ."""
    scheme: Scheme
    shots: conint(ge=0)
    eps_stat: float
    delta: float
    seed: int
    bound_shots: Optional[int] = None


class TomographyReport(_Frozen):
    learned: Any                                 # GaussianState
    shots_used: conint(ge=0)
    target_eps: float
    target_delta: float
    eps_stat: float
    shots_alt_constant: Optional[int] = None     # stesso budget con costante 32


class RobustnessReport(_Frozen):
    learned: Any                                 # GaussianState
    dense_error: float
    promise_value: float
    promise: Promise
    tomography_eps: float
    shots_used: conint(ge=0)


# =========================
# Esperimenti (CLI)
# =========================

class StateSpec(BaseModel):
    kind: StateKind = "random_gaussian"
    lambdas: Optional[List[confloat(ge=-1.0, le=1.0)]] = None
    purity: Literal["pure", "mixed"] = "mixed"
    path: Optional[str] = None
    amplitude: confloat(ge=0.0, le=1.0) = 0.9      # solo odd_probe

    @root_validator
    def kind_fields(cls, values):
        kind = values.get("kind")
        if kind == "product" and not values.get("lambdas"):
            raise ValueError("state 'product' requires lambdas")
        if kind == "dense_fixture" and not values.get("path"):
            raise ValueError("state 'dense_fixture' requires path")
        return values


class ExperimentConfig(BaseModel):
    command: Command
    modes: conint(ge=1, le=12) = 3
    rank_exponent: Optional[conint(ge=0)] = None
    eps_a: confloat(ge=0.0) = 0.0
    eps_b: confloat(gt=0.0, lt=2.0) = 0.9
    eps: confloat(gt=0.0, le=2.0) = 0.2
    delta: confloat(gt=0.0, lt=1.0) = 0.1
    trials: conint(ge=1) = 10
    seed: conint(ge=0, lt=2**64) = DEFAULT_SEED
    scheme: Scheme = "commuting"
    state: StateSpec = Field(default_factory=StateSpec)
    gaussian_set: GaussianSet = "mixed_set"
    shots: Optional[conint(ge=1)] = None
    max_shots: Optional[conint(ge=1)] = None
    noise: NoiseKind = "none"
    noise_strength: confloat(ge=0.0, le=1.0) = 0.0
    promise: Promise = "trace_distance"
    out_path: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    workers: conint(ge=1) = WORKERS
    save_estimates: bool = False                 # solo estimate: matrice Γ̂ + shot JSONL
    # solo sweep
    base_command: Optional[Command] = None
    axis: Optional[SweepAxis] = None
    points: Optional[List[float]] = None

    @root_validator
    def cross_checks(cls, values):
        cmd = values.get("command")
        n = values.get("modes")
        st = values.get("state")
        if st is not None and n is not None:
            if st.kind == "product" and st.lambdas and len(st.lambdas) != n:
                raise ValueError(f"product state has {len(st.lambdas)} lambdas for {n} modes")
            if st.kind == "ghz3" and n != 3:
                raise ValueError("state 'ghz3' requires modes = 3")
        if cmd == "test-rank" and values.get("rank_exponent") is None:
            raise ValueError("test-rank requires rank_exponent")
        if cmd == "sweep":
            if not values.get("base_command") or values.get("base_command") == "sweep":
                raise ValueError("sweep requires a base_command other than sweep")
            if not values.get("axis") or not values.get("points"):
                raise ValueError("sweep requires axis and a nonempty points list")
        if values.get("eps_b") is not None and values.get("eps_a") is not None:
            if values["eps_b"] <= values["eps_a"]:
                raise ValueError("'eps_b' must be > 'eps_a'")
        return values

    def output_path(self) -> str:
        if self.out_path:
            return self.out_path
        return os.path.join(OUT_DIR, f"{self.command}_{self.seed}.{self.format}")


class TrialOutcome(BaseModel):
    trial: int
    outcome: str                                 # verdetto, "ok" o nome dell'errore
    success: Optional[bool] = None
    error: Optional[float] = None
    shots: int = 0
    seed_stream: str
    extra: Dict[str, Optional[float]] = Field(default_factory=dict)


class Aggregate(BaseModel):
    success_fraction: Optional[float] = None
    median_error: Optional[float] = None
    shot_total: int = 0
    violations: Optional[int] = None


class RunRecord(BaseModel):
    config: ExperimentConfig
    results: List[TrialOutcome] = Field(default_factory=list)
    aggregate: Aggregate = Field(default_factory=Aggregate)
    wall_time: float = 0.0
    toolkit_version: str = TOOLKIT_VERSION
    # sweep
    sub_records: Optional[List["RunRecord"]] = None
    slope: Optional[float] = None

    def to_json(self, **kwargs) -> str:
        return self.json(exclude_none=True, **kwargs)

    def to_dict(self) -> Dict:
        return self.dict(exclude_none=True)


RunRecord.update_forward_refs()
