import argparse, json, sys, time
from pydantic import ValidationError

from config import DEFAULT_SEED
from errors import BudgetOverflow, InputError, NumericalError
from export import save_record
from models import ExperimentConfig
from pipeline import run
from provenance import log_event

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4, 5

# flag CLI -> campo di ExperimentConfig (None = non passato)
_FIELDS = (
    "command", "modes", "rank_exponent", "eps_a", "eps_b", "eps", "delta", "trials", "seed", "scheme",
    "gaussian_set", "shots", "max_shots", "noise", "noise_strength", "promise", "format", "workers",
    "axis", "base_command", "save_estimates",
)


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description="Free-fermion state learning and testing experiments")
    ap.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
    ap.add_argument("--command", default=None)
    ap.add_argument("--modes", type=int, default=None)
    ap.add_argument("--rank-exponent", type=int, default=None)
    ap.add_argument("--eps-a", type=float, default=None)
    ap.add_argument("--eps-b", type=float, default=None)
    ap.add_argument("--eps", type=float, default=None)
    ap.add_argument("--delta", type=float, default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None, help=f"default {DEFAULT_SEED}")
    ap.add_argument("--scheme", default=None)
    ap.add_argument("--gaussian-set", default=None)
    ap.add_argument("--state", default=None, help="vacuum|product|random_gaussian|maximally_mixed|dense_fixture|ghz3|odd_probe")
    ap.add_argument("--purity", default=None, help="pure|mixed (random_gaussian)")
    ap.add_argument("--lambdas", type=_floats, default=None, help="comma-separated")
    ap.add_argument("--fixture", default=None, help="dense state file (dense_fixture)")
    ap.add_argument("--amplitude", type=float, default=None)
    ap.add_argument("--shots", type=int, default=None)
    ap.add_argument("--max-shots", type=int, default=None)
    ap.add_argument("--noise", default=None)
    ap.add_argument("--noise-strength", type=float, default=None)
    ap.add_argument("--promise", default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", default=None)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--axis", default=None)
    ap.add_argument("--base-command", default=None)
    ap.add_argument("--points", type=_floats, default=None, help="comma-separated")
    ap.add_argument("--save-estimates", action="store_const", const=True, default=None)
    return ap.parse_args(argv)


def build_config(args) -> ExperimentConfig:
    """File --config (se presente) sovrascritto dai flag espliciti."""
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            data = json.load(f)
    for name in _FIELDS:
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    if args.out is not None:
        data["out_path"] = args.out
    if args.points is not None:
        data["points"] = args.points
    state = dict(data.get("state") or {})
    for flag, key in (("state", "kind"), ("purity", "purity"), ("lambdas", "lambdas"),
                      ("fixture", "path"), ("amplitude", "amplitude")):
        v = getattr(args, flag)
        if v is not None:
            state[key] = v
    if state:
        data["state"] = state
    return ExperimentConfig.parse_obj(data)


def main(argv=None) -> int:
    args = parse_args(argv)
    t0 = time.time()
    try:
        cfg = build_config(args)
        record = run(cfg)
        out = cfg.output_path()
        save_record(record, out, cfg.format)
    except (ValidationError, InputError, json.JSONDecodeError) as e:
        print(f"[ERR] config non valida: {e}")
        return EXIT_INVALID
    except BudgetOverflow as e:
        print(f"[ERR] {e}")
        return EXIT_BUDGET
    except NumericalError as e:
        print(f"[ERR] numerico: {e}")
        log_event("numerical_error", {"err": str(e), "type": type(e).__name__})
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"[ERR] I/O: {e}")
        log_event("io_error", {"err": str(e)})
        return EXIT_IO
    secs = round(time.time() - t0, 1)
    if record.aggregate.violations:
        print(f"[WARN] {record.aggregate.violations} bound violations")
    log_event("cli_done", {"out": out, "secs": secs})
    print(f"OK → {out} ({secs}s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
