"""``mlucb`` command line: gen, fit, run, compare, verify-bound.

Exit codes:
    0  success
    2  configuration error (bad flags, bad config file, ground-truth mismatch)
    3  I/O error (unreadable input, unwritable output)
    4  data error (malformed CSV, too few points to fit, out-of-domain values)
    5  invariant failure (numerical invariant broken, run aborted, bound check failed)
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import _io
from . import config as cfgmod
from .cf_env import generate_ground_truth
from .errors import ConfigError, DomainError, InsufficientDataError, InvariantError, MlUcbError
from .harness import EpisodeError, compare_policies, run_episode, verify_regret_bound
from .learning_curve import LearningCurve, fit_power_law, fit_stable_regime

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_INVARIANT = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--preset", choices=sorted(cfgmod.PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config field, e.g. env.noise_var=0.1")


def _env_flags(p):
    p.add_argument("--users", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--dim", type=int)


def _run_flags(p):
    p.add_argument("--policy")
    p.add_argument("--alpha", type=float)
    p.add_argument("--rate-s", type=float, dest="rate_s")
    p.add_argument("--horizon", type=int)
    p.add_argument("--ground-truth", dest="ground_truth", help="directory written by `gen`")
    p.add_argument("--trace-every", type=int, default=1, help="keep every k-th trace row")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mlucb", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate and save ground truth")
    _common(p)
    _env_flags(p)

    p = sub.add_parser("fit", help="fit a power law to an n,mse CSV")
    p.add_argument("curve", help="CSV with header n,mse")
    p.add_argument("--tail-fraction", type=float, default=0.2, dest="tail_fraction")
    p.add_argument("--out", default="out")

    for name, help_ in (("run", "simulate one policy"), ("compare", "simulate several policies on shared ground truth")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        _env_flags(p)
        _run_flags(p)
        if name == "compare":
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify-bound", help="empirical regret vs the threshold-based bound")
    _common(p)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--means", type=float, nargs="+")
    p.add_argument("--rate-s", type=float, dest="rate_s")
    return ap


def resolve(args) -> dict:
    """Preset, then config file, then flags."""
    d: dict = cfgmod.preset(args.preset) if getattr(args, "preset", None) else {}
    if getattr(args, "config", None):
        d = cfgmod.deep_merge(d, cfgmod.load_file(args.config))
    env = d.setdefault("env", {})
    policy = d.setdefault("policy", {})
    if args.seed is not None:
        env["seed"] = args.seed
    for flag, key in (("users", "n_users"), ("items", "n_items"), ("dim", "latent_dim")):
        if getattr(args, flag, None) is not None:
            env[key] = getattr(args, flag)
    if args.command in ("run", "compare"):
        if args.policy is not None:
            policy["name"] = args.policy
        if args.alpha is not None:
            policy["alpha"] = args.alpha
        if args.rate_s is not None:
            policy["s"] = args.rate_s
        if args.horizon is not None:
            d["horizon"] = args.horizon
        if args.ground_truth is not None:
            d["ground_truth"] = args.ground_truth
        if args.command == "compare" and (args.policy or args.alpha is not None or args.rate_s is not None):
            d.pop("policies", None)
    if args.command == "verify-bound":
        b = d.setdefault("bound", {})
        if args.horizon is not None:
            b["horizon"] = args.horizon
        if args.seeds is not None:
            b["seeds"] = args.seeds
        if args.means is not None:
            b["means"] = args.means
        if args.rate_s is not None:
            b["s"] = args.rate_s
        if args.seed is not None:
            count = b.get("seeds", cfgmod.DEFAULT_BOUND["seeds"])
            count = count if isinstance(count, int) else len(count)
            b["seeds"] = list(range(args.seed, args.seed + count))
    for assignment in args.set:
        cfgmod.set_path(d, assignment)
    return d


def cmd_gen(args) -> int:
    d = resolve(args)
    rc = cfgmod.run_config(d)
    gt = generate_ground_truth(rc.env)
    out = Path(args.out)
    digest = gt.save(out)
    _io.atomic_write_text(out / "ground_truth.sha256", digest + "\n")
    print(digest)
    return EXIT_OK


def cmd_fit(args) -> int:
    curve = LearningCurve.from_csv(args.curve)
    full = fit_power_law(curve)
    result = {
        "full": full.to_dict(),
        "stable": None,
        "config": {"curve": str(args.curve), "tail_fraction": args.tail_fraction},
    }
    try:
        result["stable"] = fit_stable_regime(curve, args.tail_fraction).to_dict()
    except InsufficientDataError as exc:
        # short curves still get the full fit; the tail is reported as missing
        result["stable_error"] = str(exc)
    _io.write_json(Path(args.out) / "fit.json", result)
    print(json.dumps({"s_full": full.s, "s_stable": result["stable"] and result["stable"]["s"]}))
    return EXIT_OK


def _write_trace_files(out: Path, trace, every: int, stem: str = "") -> dict:
    summary = trace.summary()
    files = {
        out / f"trace{stem}.csv": trace.trace_csv(every),
        out / f"curve{stem}.csv": trace.curve_csv(),
    }
    for path, text in files.items():
        _io.atomic_write_text(path, text)
    _io.write_json(out / f"summary{stem}.json", summary)
    return summary


def cmd_run(args) -> int:
    d = resolve(args)
    rc = cfgmod.run_config(d)
    trace = run_episode(rc)
    out = Path(args.out)
    summary = _write_trace_files(out, trace, args.trace_every)
    _io.write_json(out / "config.json", {"config": trace.config.to_dict()})
    print(json.dumps({k: summary[k] for k in ("policy", "final_regret", "regret_rate", "accuracy")}))
    return EXIT_OK


def cmd_compare(args) -> int:
    d = resolve(args)
    configs = cfgmod.compare_configs(d)
    report = compare_policies(configs, workers=args.workers)
    out = Path(args.out)
    for k, trace in enumerate(report.traces):
        _io.atomic_write_text(out / f"trace_{k}.csv", trace.trace_csv(args.trace_every))
        _io.atomic_write_text(out / f"curve_{k}.csv", trace.curve_csv())
    _io.write_json(out / "comparison.json", report.to_dict())
    for s in report.summaries:
        print(f"{s['policy']:32s} regret={s['final_regret']:.1f} rate={s['regret_rate']:.4f} acc={s['accuracy']:.3f}")
    return EXIT_OK


def cmd_verify_bound(args) -> int:
    d = resolve(args)
    b = cfgmod.bound_params(d)
    report = verify_regret_bound(b["means"], sigma2=b["sigma2"], s=b["s"], horizon=b["horizon"], seeds=b["seeds"])
    result = report.to_dict()
    result["config"] = b
    _io.write_json(Path(args.out) / "bound.json", result)
    print(json.dumps({k: result[k] for k in ("mean_regret", "bound", "slack", "passed")}))
    return EXIT_OK if report.passed else EXIT_INVARIANT


COMMANDS = {"gen": cmd_gen, "fit": cmd_fit, "run": cmd_run, "compare": cmd_compare, "verify-bound": cmd_verify_bound}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        code, msg = EXIT_CONFIG, f"config error: {exc}"
    except (InvariantError, EpisodeError) as exc:
        code, msg = EXIT_INVARIANT, f"invariant failure: {exc}"
    except (DomainError, MlUcbError) as exc:
        code, msg = EXIT_DATA, f"data error: {exc}"
    except OSError as exc:
        code, msg = EXIT_IO, f"I/O error: {exc}"
    print(f"mlucb {args.command}: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
