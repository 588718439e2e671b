"""``reopt`` command line: run, sweep, verify, report.

Every experiment flag mirrors a key of the TOML config file (dashes become
underscores; perturbation flags live in the ``[perturbation]`` table).  Flags
override the file.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bitstring import ContractViolation
from .harness import (
    ALGORITHMS,
    DEFAULT_KIND,
    PROBLEMS,
    ExperimentSpec,
    aggregate,
    format_summary,
    read_results,
    run_experiment,
    stderr_progress,
    write_results,
)
from .perturbations import PerturbationKind, PerturbationSpec
from .verify import run_checks


class ConfigError(ContractViolation):
    pass


TOP_KEYS = {
    "problem": str, "algorithm": str, "n_values": list, "gamma": (int, str, list), "repetitions": int,
    "seed": int, "max_evaluations": int, "budget_factor": (int, float), "milestones": list,
    "epsilon": (int, float), "weights": str, "weight_low": int, "weight_high": int,
    "bound_fraction": (int, float), "edge_factor": (int, float), "jobs": int, "out": str,
}
PERTURBATION_KEYS = {
    "kind": str, "delta": (int, list), "variant": str, "window": (int, float), "sign": int,
    "positions": list, "edges": list, "edge_ids": list, "selection": str,
}


def load_config(path) -> dict:
    """Read a TOML experiment file into a flat ``{key: value}`` dict."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    flat = {}
    for key, value in doc.items():
        if key == "perturbation":
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: 'perturbation' must be a table")
            for pkey, pvalue in value.items():
                _check_key(path, PERTURBATION_KEYS, pkey, pvalue, "perturbation.")
                flat[pkey] = pvalue
        else:
            _check_key(path, TOP_KEYS, key, value, "")
            flat[key] = value
    return flat


def _check_key(path, table: dict, key: str, value, prefix: str) -> None:
    if key not in table:
        raise ConfigError(f"{path}: unknown key '{prefix}{key}'")
    expected = table[key]
    if isinstance(value, bool) or not isinstance(value, expected):
        names = expected.__name__ if isinstance(expected, type) else "/".join(t.__name__ for t in expected)
        raise ConfigError(f"{path}: key '{prefix}{key}' expects {names}, got {value!r}")


def _add_experiment_flags(p: argparse.ArgumentParser, sweep: bool) -> None:
    many = "+" if sweep else None
    p.add_argument("--config", help="TOML experiment file; flags override its keys")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--n", "--n-values", dest="n_values", type=int, nargs="+",
                   help="genome lengths (node counts for mst)")
    p.add_argument("--gamma", nargs=many, type=_gamma_value,
                   help="distance cap; 'delta' means gamma = delta")
    p.add_argument("--delta", type=int, nargs=many, help="perturbation size")
    p.add_argument("--reps", "--repetitions", dest="repetitions", type=int)
    p.add_argument("--max-evaluations", type=int)
    p.add_argument("--budget-factor", type=float, help="budget = factor * L^2 when no max is given")
    p.add_argument("--milestones", type=int, nargs="+", help="radii i to track (default 0..delta)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--weights", choices=("uniform", "onemax", "binval"))
    p.add_argument("--weight-low", type=int)
    p.add_argument("--weight-high", type=int)
    p.add_argument("--bound-fraction", type=float)
    p.add_argument("--edge-factor", type=float)
    p.add_argument("--kind", choices=[k.value for k in PerturbationKind])
    p.add_argument("--variant", choices=("adversarial_prefix", "random_neighbor"))
    p.add_argument("--window", type=float)
    p.add_argument("--sign", type=int, choices=(1, -1))
    p.add_argument("--positions", type=int, nargs="+")
    p.add_argument("--edge-ids", type=int, nargs="+")
    p.add_argument("--selection", choices=("tree", "random"))
    p.add_argument("--jobs", type=int, help="concurrent repetitions (default: all CPUs)")


def _gamma_value(text: str):
    if text == "delta":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'delta', got {text!r}") from None


def _common(p: argparse.ArgumentParser, out_default: Optional[str]) -> None:
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--out", default=out_default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reopt", description="Re-optimization EA experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    _add_experiment_flags(run, sweep=False)
    _common(run, None)
    sweep = sub.add_parser("sweep", help="run the cartesian product over n, gamma and delta lists")
    _add_experiment_flags(sweep, sweep=True)
    _common(sweep, None)
    verify = sub.add_parser("verify", help="oracle cross-checks and algorithm invariant suites")
    _common(verify, None)
    report = sub.add_parser("report", help="recompute aggregates from a runs.csv")
    report.add_argument("csv", help="runs.csv written by run or sweep")
    report.add_argument("--epsilon", type=float, default=1.0)
    _common(report, None)
    return parser


def _merged(args) -> dict:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for key in list(TOP_KEYS) + list(PERTURBATION_KEYS):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def make_spec(values: dict, delta: Optional[int] = None, gamma=None) -> ExperimentSpec:
    """Turn a merged flag/config dict into an :class:`ExperimentSpec`."""
    if "problem" not in values:
        raise ConfigError("missing 'problem' (use --problem or the config key)")
    if "n_values" not in values:
        raise ConfigError("missing 'n_values' (use --n or the config key)")
    problem = values["problem"]
    kind = values.get("kind", DEFAULT_KIND.get(problem, PerturbationKind.TARGET_FLIP))
    pert_args = {"kind": PerturbationKind(kind)}
    for key in ("variant", "window", "sign", "selection"):
        if key in values:
            pert_args[key] = values[key]
    pert_args["delta"] = delta if delta is not None else values.get("delta", 1)
    if isinstance(pert_args["delta"], list):
        raise ConfigError("a list of deltas needs the sweep command")
    for key in ("positions", "edge_ids"):
        if key in values:
            pert_args[key] = tuple(values[key])
    if "edges" in values:
        pert_args["edges"] = tuple(tuple(e) for e in values["edges"])
    pert = PerturbationSpec(**pert_args)
    if gamma is None:
        gamma = values.get("gamma")
    if isinstance(gamma, list):
        raise ConfigError("a list of gammas needs the sweep command")
    spec_args = {}
    names = {f.name for f in fields(ExperimentSpec)}
    for key, value in values.items():
        if key in names and key not in ("perturbation", "gamma"):
            spec_args[key] = value
    spec_args["gamma"] = None if gamma in (None, "delta") else int(gamma)
    return ExperimentSpec(perturbation=pert, **spec_args)


def _execute(spec: ExperimentSpec, out: Path, jobs: Optional[int], label: str) -> str:
    result = run_experiment(spec, jobs=jobs, progress=stderr_progress(label))
    write_results(result.rows, result.aggregate, out)
    return format_summary(result.aggregate)


def _out_dir(args, values: dict) -> Path:
    return Path(args.out or values.get("out") or "results")


def cmd_run(args) -> int:
    values = _merged(args)
    spec = make_spec(values)
    print(_execute(spec, _out_dir(args, values), values.get("jobs"), f"{spec.problem} {spec.algorithm}"))
    return 0


def cmd_sweep(args) -> int:
    values = _merged(args)
    deltas = _as_list(values.get("delta", 1))
    gammas = _as_list(values.get("gamma", "delta"))
    if values.get("algorithm") == "oea":
        gammas = [None]
    root = _out_dir(args, values)
    blocks = []
    for delta, gamma in itertools.product(deltas, gammas):
        spec = make_spec(values, delta=int(delta), gamma=gamma)
        g = spec.effective_gamma
        label = f"{spec.problem}_{spec.algorithm}" + ("" if g is None else f"_g{g}") + f"_d{delta}"
        blocks.append(f"== {label}\n" + _execute(spec, root / label, values.get("jobs"), label))
    print("\n\n".join(blocks))
    return 0


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else 0
    lines = []

    def report(result):
        lines.append(result.line())
        print(result.line(), flush=True)

    results = run_checks(seed, report=report)
    failed = sum(1 for r in results if not r.passed)
    summary = f"{len(results) - failed}/{len(results)} checks passed"
    print(summary)
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "verify.txt").write_text("\n".join(lines + [summary]) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {out / 'verify.txt'}: {exc.strerror}") from None
    return 0 if failed == 0 else 1


def cmd_report(args) -> int:
    rows = read_results(args.csv)
    result = aggregate(rows, args.epsilon)
    if args.out:
        write_results(rows, result, args.out)
    print(format_summary(result))
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ContractViolation, OSError, ValueError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
