"""Command-line orchestrator.

Subcommands: ``sample``, ``benchmark``, ``couple``, ``regularity``,
``plan``, ``gen-data``, ``scaling``.  Every run writes an ``echo.json``
with the fully resolved configuration (so the run can be re-executed
byte-for-byte via ``--config echo.json``) and a ``<artifact>.meta.json``
sidecar per artifact carrying {version, command, config hash, master
seed}.  Exit codes: 1 config error, 2 runtime divergence, 3 I/O error;
a machine-readable error JSON goes to stderr.

Flags override values from ``--config``; ``QS_THREADS`` caps benchmark
parallelism.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .diagnostics import benchmark, stepsize_scaling
from .dynamics import DirectionSet
from .errors import (ConvergenceError, DivergenceError, FormulaDomainError,
                     InvalidInputError, QuarterstepError, UnsupportedOperationError)
from .models import (GaussianTarget, LogisticTarget, RegularityConstants,
                     gen_synthetic, load_dataset, save_dataset)
from .plots import (plot_benchmark, plot_coupling, plot_figure3, plot_scaling,
                    plot_trace)
from .regularity import audit_logistic, plan_parameters
from .samplers import (SamplerKind, SamplerSpec, StartSpec, run_coupled,
                       run_sampler, save_trace_summary, trace_to_csv)
from .seeding import rng_from

COMMANDS = ("sample", "benchmark", "couple", "regularity", "plan", "gen-data",
            "scaling")


class CliConfigError(QuarterstepError):
    """Raised for unparsable flags or invalid configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliConfigError(message)


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise CliConfigError(f"bad float list {text!r}: {exc}") from None


def _parse_ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise CliConfigError(f"bad int list {text!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quarterstep",
                     description="Leapfrog HMC sampler toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="quarterstep_out",
                       help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--config", default=None,
                       help="JSON config file; explicit flags override it")

    p = sub.add_parser("gen-data", help="write a synthetic logistic dataset CSV")
    common(p)
    p.add_argument("--d", type=int, default=None, help="feature dimension")
    p.add_argument("--r", type=int, default=None, help="number of data rows")

    p = sub.add_parser("sample", help="run one chain; trace CSV + summary JSON")
    common(p)
    p.add_argument("--target", choices=("gaussian", "logistic"), default=None)
    p.add_argument("--d", type=int, default=None, help="gaussian dimension")
    p.add_argument("--dataset", default=None, help="logistic dataset CSV")
    p.add_argument("--prior-scale", type=float, default=None,
                   help="prior variance scale s (prior precision = I/s)")
    p.add_argument("--kind", choices=[k.value for k in SamplerKind], default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--imax", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--start", choices=("cold", "warm", "explicit"), default=None)
    p.add_argument("--x0", default=None, help="comma-separated start point")

    p = sub.add_parser("couple", help="synchronously coupled pair; distances CSV")
    common(p)
    p.add_argument("--target", choices=("gaussian", "logistic"), default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--dataset", default=None)
    p.add_argument("--prior-scale", type=float, default=None)
    p.add_argument("--kind", choices=("uhmc", "idealized"), default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--imax", type=int, default=None)
    p.add_argument("--x0", default=None, help="comma-separated start of chain X")
    p.add_argument("--y0", default=None, help="comma-separated start of chain Y")

    p = sub.add_parser("benchmark", help="accuracy/autocorrelation sweep")
    common(p)
    p.add_argument("--target", choices=("gaussian", "logistic"), default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--dataset", default=None)
    p.add_argument("--prior-scale", type=float, default=None)
    p.add_argument("--budget", type=int, default=None,
                   help="numerical steps per cell")
    p.add_argument("--eta-grid", default=None, help="comma-separated step sizes")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--T", type=float, default=None, help="HMC trajectory time")
    p.add_argument("--ref-steps", type=int, default=None,
                   help="reference MALA chain length")
    p.add_argument("--ref-eta", type=float, default=None)

    p = sub.add_parser("regularity", help="regularity audit of a dataset")
    common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--prior-scale", type=float, default=None)
    p.add_argument("--restarts", type=int, default=None)

    p = sub.add_parser("plan", help="evaluate the tuning formulas")
    common(p)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--M", type=float, default=None)
    p.add_argument("--Linf", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--start", choices=("warm", "cold"), default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--c-plan", type=float, default=None)

    p = sub.add_parser("scaling", help="critical step size versus dimension")
    common(p)
    p.add_argument("--d-list", default=None, help="comma-separated dimensions")
    p.add_argument("--eps", type=float, default=None,
                   help="target mean endpoint error")
    p.add_argument("--T", type=float, default=None)

    return parser


_DEFAULTS = {
    "gen-data": {"seed": 0},
    "sample": {"seed": 0, "target": "gaussian", "d": 2, "prior_scale": 1.0,
               "thin": 1, "start": "cold"},
    "couple": {"seed": 0, "target": "gaussian", "d": 2, "prior_scale": 1.0},
    "benchmark": {"seed": 0, "target": "logistic", "prior_scale": 1.0,
                  "budget": 20_000, "eta_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
                  "bins": 50, "T": math.pi / 3.0, "ref_steps": 200_000,
                  "ref_eta": 0.3},
    "regularity": {"seed": 0, "prior_scale": 1.0, "restarts": 32},
    "plan": {"seed": 0, "Linf": 0.0, "eps": 0.1, "delta": 0.1, "start": "warm",
             "c_plan": 1.0},
    "scaling": {"seed": 0, "d_list": [16, 64, 256, 1024], "eps": 0.1, "T": 1.0},
}

_REQUIRED = {
    "gen-data": ("d", "r"),
    "sample": ("kind", "imax"),
    "couple": ("kind", "T", "imax"),
    "benchmark": (),
    "regularity": ("dataset",),
    "plan": ("m", "M", "d"),
    "scaling": (),
}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge builtin defaults, an optional config file, and explicit flags
    (highest precedence)."""
    command = args.command
    config = dict(_DEFAULTS.get(command, {}))
    config["out"] = "quarterstep_out"

    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise CliConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise CliConfigError(f"bad config JSON: {exc}") from None
        if "config" in loaded and isinstance(loaded["config"], dict):
            file_command = loaded.get("command")
            if file_command is not None and file_command != command:
                raise CliConfigError(
                    f"config file is for {file_command!r}, not {command!r}")
            loaded = loaded["config"]
        config.update(loaded)

    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        config[key] = value

    if isinstance(config.get("eta_grid"), str):
        config["eta_grid"] = _parse_floats(config["eta_grid"])
    if isinstance(config.get("d_list"), str):
        config["d_list"] = _parse_ints(config["d_list"])
    for key in ("x0", "y0"):
        if isinstance(config.get(key), str):
            config[key] = _parse_floats(config[key])

    missing = [k for k in _REQUIRED[command] if config.get(k) is None]
    if missing:
        raise CliConfigError(
            f"{command}: missing required option(s): " +
            ", ".join("--" + k.replace("_", "-") for k in missing))
    return config


def config_hash(command: str, config: dict) -> str:
    semantic = {k: v for k, v in config.items() if k not in ("out",)}
    payload = json.dumps({"command": command, "config": semantic},
                         sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class _Run:
    """Output-directory helper: writes the config echo and meta sidecars."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.out = config["out"]
        os.makedirs(self.out, exist_ok=True)
        self.hash = config_hash(command, config)
        self.meta = {
            "version": __version__,
            "command": command,
            "config_hash": self.hash,
            "master_seed": config.get("seed"),
        }
        with open(self.path("echo.json"), "w", encoding="utf-8") as fh:
            json.dump({**self.meta, "config": config}, fh, indent=2, default=str)
            fh.write("\n")

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def sidecar(self, artifact: str) -> None:
        with open(self.path(artifact + ".meta.json"), "w", encoding="utf-8") as fh:
            json.dump({**self.meta, "artifact": artifact}, fh, indent=2)
            fh.write("\n")


def _build_target(config: dict):
    kind = config.get("target", "gaussian")
    if kind == "gaussian":
        d = config.get("d")
        if d is None:
            raise CliConfigError("gaussian target requires --d")
        return GaussianTarget.standard(int(d)), f"gaussian-d{d}"
    dataset_path = config.get("dataset")
    if dataset_path is None:
        raise CliConfigError("logistic target requires --dataset")
    if not os.path.exists(dataset_path):
        raise CliConfigError(f"dataset not found: {dataset_path}")
    data = load_dataset(dataset_path)
    scale = float(config.get("prior_scale", 1.0))
    if scale <= 0.0:
        raise CliConfigError("--prior-scale must be positive")
    precision = np.eye(data.dim) / scale
    label = f"logistic-d{data.dim}-r{data.n}"
    return LogisticTarget(data.X, data.Y, precision), label


def _start_spec(config: dict, target) -> StartSpec:
    mode = config.get("start", "cold")
    if mode == "cold":
        return StartSpec.cold()
    point = config.get("x0")
    if point is None:
        raise CliConfigError(f"--start {mode} requires --x0")
    point = np.asarray(point, dtype=float)
    if point.shape != (target.dim,):
        raise CliConfigError(
            f"--x0 has {point.size} components, target dimension is {target.dim}")
    return StartSpec(mode=mode, point=point)


def cmd_gen_data(run: _Run) -> None:
    config = run.config
    data = gen_synthetic(int(config["d"]), int(config["r"]), int(config["seed"]))
    save_dataset(run.path("dataset.csv"), data)
    run.sidecar("dataset.csv")


def cmd_sample(run: _Run) -> None:
    config = run.config
    target, label = _build_target(config)
    spec = SamplerSpec(kind=config["kind"], i_max=int(config["imax"]),
                       seed=int(config["seed"]), eta=config.get("eta"),
                       T=config.get("T"), start=_start_spec(config, target),
                       thin=int(config.get("thin", 1)))
    trace = run_sampler(target, spec)
    trace_to_csv(trace, run.path("trace.csv"))
    run.sidecar("trace.csv")
    save_trace_summary(trace, run.path("summary.json"))
    run.sidecar("summary.json")
    plot_trace(trace, run.path("trace.png"))
    run.sidecar("trace.png")
    print(f"[quarterstep] sample: {label} kind={spec.kind.value} "
          f"grad_evals={trace.grad_evals}")


def cmd_couple(run: _Run) -> None:
    config = run.config
    target, label = _build_target(config)
    spec = SamplerSpec(kind=config["kind"], i_max=int(config["imax"]),
                       seed=int(config["seed"]), eta=config.get("eta"),
                       T=config.get("T"),
                       start=StartSpec.explicit(np.zeros(target.dim)))
    rng = rng_from(int(config["seed"]), "couple-starts")
    x0 = np.asarray(config["x0"], dtype=float) if config.get("x0") is not None \
        else rng.standard_normal(target.dim)
    y0 = np.asarray(config["y0"], dtype=float) if config.get("y0") is not None \
        else rng.standard_normal(target.dim)
    record = run_coupled(target, spec, x0, y0)
    with open(run.path("coupling.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,distance,ratio\n")
        for i, dist in enumerate(record.distances):
            ratio = "" if i == 0 or np.isnan(record.ratios[i - 1]) \
                else format(record.ratios[i - 1], ".17g")
            fh.write(f"{i},{format(dist, '.17g')},{ratio}\n")
    run.sidecar("coupling.csv")
    plot_coupling(record, run.path("coupling.png"))
    run.sidecar("coupling.png")
    print(f"[quarterstep] couple: {label} final distance "
          f"{record.distances[-1]:.3e}")


def cmd_benchmark(run: _Run) -> None:
    config = run.config
    target, label = _build_target(config)
    seed = int(config["seed"])
    T = float(config["T"])
    templates = [
        SamplerSpec(kind=SamplerKind.UHMC, i_max=1, seed=seed, eta=min(config["eta_grid"]), T=T),
        SamplerSpec(kind=SamplerKind.MHMC, i_max=1, seed=seed, eta=min(config["eta_grid"]), T=T),
        SamplerSpec(kind=SamplerKind.MALA, i_max=1, seed=seed, eta=min(config["eta_grid"])),
        SamplerSpec(kind=SamplerKind.ULA, i_max=1, seed=seed, eta=min(config["eta_grid"])),
    ]
    reference = SamplerSpec(kind=SamplerKind.MALA, i_max=int(config["ref_steps"]),
                            seed=seed, eta=float(config["ref_eta"]))
    report = benchmark(target, templates, config["eta_grid"], reference,
                       bins=int(config["bins"]), budget=int(config["budget"]),
                       master_seed=seed, target_label=label)
    report.save_json(run.path("benchmark.json"))
    run.sidecar("benchmark.json")
    report.save_csv(run.path("benchmark.csv"))
    run.sidecar("benchmark.csv")
    plot_benchmark(report, run.path("benchmark.png"))
    run.sidecar("benchmark.png")
    failed = sum(1 for c in report.cells if c.error is not None)
    print(f"[quarterstep] benchmark: {label} cells={len(report.cells)} "
          f"failed={failed}")


def cmd_regularity(run: _Run) -> None:
    config = run.config
    config.setdefault("target", "logistic")
    target, label = _build_target(config)
    if not isinstance(target, LogisticTarget):
        raise CliConfigError("regularity audit requires a logistic dataset")
    report = audit_logistic(target, restarts=int(config["restarts"]),
                            seed=int(config["seed"]))
    report.save_json(run.path("regularity.json"))
    run.sidecar("regularity.json")
    print(f"[quarterstep] regularity: {label} "
          f"L_inf_bound={report.L_inf_bound:.4g} "
          f"L_inf_estimate={report.L_inf_estimate:.4g}")


def cmd_plan(run: _Run) -> None:
    config = run.config
    constants = RegularityConstants(m=float(config["m"]), M=float(config["M"]),
                                    L_inf=float(config.get("Linf", 0.0)),
                                    b=config.get("b"))
    plan = plan_parameters(constants, d=int(config["d"]),
                           r=int(config.get("r") or config["d"]),
                           eps=float(config["eps"]), delta=float(config["delta"]),
                           start=config["start"], c_plan=float(config["c_plan"]),
                           omega=config.get("omega"))
    plan.save_json(run.path("plan.json"))
    run.sidecar("plan.json")
    print(f"[quarterstep] plan: T={plan.T:.6g} eta={plan.eta:.6g} "
          f"grad_budget={plan.grad_budget}")


def cmd_scaling(run: _Run) -> None:
    config = run.config
    result = stepsize_scaling(config["d_list"], eps=float(config["eps"]),
                              T=float(config["T"]), seed=int(config["seed"]))
    result.save_csv(run.path("scaling.csv"))
    run.sidecar("scaling.csv")
    with open(run.path("scaling.json"), "w", encoding="utf-8") as fh:
        json.dump(result.to_json_dict(), fh, indent=2)
        fh.write("\n")
    run.sidecar("scaling.json")
    plot_scaling(result, run.path("scaling.png"))
    run.sidecar("scaling.png")
    print(f"[quarterstep] scaling: slope={result.slope:.4f}")


_HANDLERS = {
    "gen-data": cmd_gen_data,
    "sample": cmd_sample,
    "couple": cmd_couple,
    "benchmark": cmd_benchmark,
    "regularity": cmd_regularity,
    "plan": cmd_plan,
    "scaling": cmd_scaling,
}


def _fail(exc: Exception, exit_code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc),
               "exit_code": exit_code}
    print(json.dumps(payload), file=sys.stderr)
    return exit_code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        run = _Run(args.command, config)
        _HANDLERS[args.command](run)
        return 0
    except DivergenceError as exc:
        return _fail(exc, 2)
    except (OSError, IOError) as exc:
        return _fail(exc, 3)
    except (CliConfigError, InvalidInputError, ConvergenceError,
            FormulaDomainError, UnsupportedOperationError) as exc:
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
