"""Batch front door: `lfunlab <command> [flags]`.

A run is described by a RunConfig, read from a JSON file (``--config`` or
the LFUNLAB_CONFIG environment variable) and overridden by flags. Config
files use the dataclass field names of `lfunlab.config` for the per-concern
blocks and a ``params`` block for the command's numeric parameters, e.g.

    {"command": "moment",
     "params": {"instance": "zeta", "kind": "second", "T1": 0, "T2": 100},
     "quadrature": {"workers": 4}}
"""
import argparse
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from lfunlab.coefficients import CSV_HEADER as COEFFICIENTS_HEADER
from lfunlab.coefficients import build_coefficients
from lfunlab.config import LabConfig
from lfunlab.contour import CheckReport
from lfunlab.contour import ZeroHypothesis
from lfunlab.contour import cancellation_check
from lfunlab.contour import j_agreement_check
from lfunlab.contour import vanishing_check
from lfunlab.contour import verify_log_identity
from lfunlab.evaluation import evaluate_L
from lfunlab.evaluation import functional_equation_residual
from lfunlab.exceptions import ConfigError
from lfunlab.exceptions import LabException
from lfunlab.instances import instance_from_config
from lfunlab.instances import resolve_instance
from lfunlab.mollifier import mollifier_sweep
from lfunlab.moments import CSV_HEADER as MOMENT_HEADER
from lfunlab.moments import MOMENT_KINDS
from lfunlab.moments import moment_I
from lfunlab.moments import moment_I_integrated
from lfunlab.moments import second_moment
from lfunlab.moments import weighted_second_moment
from lfunlab.theorems import FamilySpec
from lfunlab.theorems import family_condition
from lfunlab.theorems import family_zero_statistic
from lfunlab.theorems import rh_criterion_scan
from lfunlab.theorems import thm_global_sup
from lfunlab.theorems import thm_local_check
from lfunlab.utils import fmt
from lfunlab.utils import jsonable
from lfunlab.zeros import count_zeros_rectangle

logger = logging.getLogger(__name__)

CONFIG_ENV = "LFUNLAB_CONFIG"
COMMANDS = (
    "coeffs", "eval-grid", "mollifier", "moment", "verify", "theorem", "zeros",
    "family",
)
THEOREM_IDS = ("local", "all-T", "rh", "family")
EVAL_GRID_HEADER = ("t", "re", "im", "abs2", "err")
MOLLIFIER_HEADER = ("y", "t", "re", "im", "abs2")
Y_PROFILE_HEADER = ("y", "value", "error")

PARAMS = {
    "instance": None,
    "kind": str,
    "id": str,
    "T1": float,
    "T2": float,
    "T": float,
    "t": float,
    "y": float,
    "Y": float,
    "X": float,
    "x": float,
    "theta": float,
    "sigma": float,
    "epsilon": float,
    "tol": float,
    "step": float,
    "n_max": int,
    "gamma0": float,
    "beta0": float,
    "hyp": str,
    "dyadic": bool,
    "y_points": int,
    "spec": str,
    "rect": list,
    "T_grid": list,
    "eps_list": list,
}
REQUIRED = {
    "coeffs": ("instance", "n_max"),
    "eval-grid": ("instance", "T1", "T2"),
    "mollifier": ("instance", "t", "Y"),
    "moment": ("instance", "kind", "T1", "T2"),
    "verify": (),
    "theorem": ("id",),
    "zeros": ("instance", "rect"),
    "family": ("spec", "sigma", "theta", "T_grid"),
}
TOP_LEVEL = {"command", "params", "output", "timings", "log_level"} | {
    f.name for f in fields(LabConfig)
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output: str = "."
    timings: bool = False
    log_level: str = "WARNING"
    lab: LabConfig = field(default_factory=LabConfig)


@dataclass(frozen=True)
class Artifact:
    """One output file: csv rows with a header, a JSON document, or `x y`
    plot pairs."""

    name: str
    kind: str
    header: tuple = ()
    rows: list = field(default_factory=list)
    data: object = None


def _merge(block, values: dict, path: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{path} must be an object", key=path)
    names = {f.name: f for f in fields(block)}
    updates = {}
    for key, value in values.items():
        dotted = f"{path}.{key}"
        if key not in names:
            e = ConfigError(f"Unknown config key {dotted!r}", key=dotted)
            logger.exception(e)
            raise e
        current = getattr(block, key)
        if is_dataclass(current):
            value = _merge(current, value, dotted)
        elif isinstance(current, float) and isinstance(value, int):
            value = float(value)
        updates[key] = value
    return replace(block, **updates)


def _check_params(params: dict, path: str = "params") -> dict:
    checked = {}
    for key, value in params.items():
        if key not in PARAMS:
            dotted = f"{path}.{key}"
            e = ConfigError(f"Unknown parameter {dotted!r}", key=dotted)
            logger.exception(e)
            raise e
        kind = PARAMS[key]
        try:
            checked[key] = value if kind is None or value is None else kind(value)
        except (TypeError, ValueError) as error:
            raise ConfigError(f"Bad value for {path}.{key}: {error}", key=f"{path}.{key}")
    return checked


def load_config_file(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        e = ConfigError(
            f"{path}: line {error.lineno} column {error.colno}: {error.msg}"
        )
        logger.exception(e)
        raise e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: a config file holds one JSON object")
    unknown = sorted(set(data) - TOP_LEVEL)
    if unknown:
        e = ConfigError(f"{path}: unknown config key {unknown[0]!r}", key=unknown[0])
        logger.exception(e)
        raise e
    lab = LabConfig()
    blocks = {k: v for k, v in data.items() if k in {f.name for f in fields(LabConfig)}}
    lab = _merge(lab, blocks, "config") if blocks else lab
    return RunConfig(
        command=data.get("command"),
        params=_check_params(data.get("params", {})),
        output=data.get("output", "."),
        timings=bool(data.get("timings", False)),
        log_level=data.get("log_level", "WARNING"),
        lab=lab,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfunlab",
        description="Mollified second moments and zero statistics of L-functions",
    )
    parser.add_argument("--config", help=f"JSON config file (default ${CONFIG_ENV})")
    parser.add_argument("--output", help="Output directory")
    parser.add_argument("--grc", action="store_true", default=None,
                        help="Assume the Ramanujan conjecture (delta = 0)")
    parser.add_argument("--workers", type=int, help="Quadrature worker threads")
    parser.add_argument("--no-cache", dest="cache", action="store_false", default=None)
    parser.add_argument("--timings", action="store_true", default=None,
                        help="Write wall times (outputs stop being reproducible)")
    parser.add_argument("--log-level", dest="log_level")

    sub = parser.add_subparsers(dest="command")
    commands = {name: sub.add_parser(name) for name in COMMANDS}
    for name, cmd in commands.items():
        if name not in ("verify", "family", "theorem"):
            cmd.add_argument("--instance")
        cmd.add_argument("--tol", type=float)

    commands["coeffs"].add_argument("--n-max", dest="n_max", type=int)
    grid = commands["eval-grid"]
    grid.add_argument("--sigma", type=float)
    grid.add_argument("--T1", type=float)
    grid.add_argument("--T2", type=float)
    grid.add_argument("--step", type=float)
    moll = commands["mollifier"]
    moll.add_argument("--t", type=float)
    moll.add_argument("--Y", type=float)
    moll.add_argument("--step", type=float)
    moment = commands["moment"]
    moment.add_argument("--kind", choices=MOMENT_KINDS)
    for name in ("T1", "T2", "y", "X", "theta", "x", "gamma0", "beta0"):
        moment.add_argument(f"--{name}", type=float)
    theorem = commands["theorem"]
    theorem.add_argument("--id", choices=THEOREM_IDS)
    theorem.add_argument("--instance")
    for name in ("sigma", "theta", "epsilon", "T1", "T2"):
        theorem.add_argument(f"--{name}", type=float)
    theorem.add_argument("--T-grid", dest="T_grid", type=float, nargs="+")
    theorem.add_argument("--eps-list", dest="eps_list", type=float, nargs="+")
    theorem.add_argument("--dyadic", action="store_true", default=None)
    theorem.add_argument("--hyp", help="'scan' or a zero such as 0.8+30j")
    theorem.add_argument("--y-points", dest="y_points", type=int)
    theorem.add_argument("--spec", help="Family file for --id family")
    commands["zeros"].add_argument(
        "--rect", type=float, nargs=4, metavar=("SIGMA_LO", "SIGMA_HI", "T1", "T2")
    )
    family = commands["family"]
    family.add_argument("--spec", help="JSON file with labels and description")
    family.add_argument("--sigma", type=float)
    family.add_argument("--theta", type=float)
    family.add_argument("--T-grid", dest="T_grid", type=float, nargs="+")
    family.add_argument("--T", type=float, help="Height of the zero statistic")
    return parser


GLOBAL_FLAGS = {"config", "output", "grc", "workers", "cache", "timings", "log_level", "command"}


def parse_config(argv: Sequence[str] = None) -> RunConfig:
    """Config file, then flags on top of it."""
    args = build_parser().parse_args(argv)
    path = args.config or os.environ.get(CONFIG_ENV)
    config = load_config_file(path) if path else RunConfig(command=None)

    flags = {
        k: v for k, v in vars(args).items() if k not in GLOBAL_FLAGS and v is not None
    }
    config.params.update(_check_params(flags, "flags"))
    if args.command is not None:
        config.command = args.command
    if args.output is not None:
        config.output = args.output
    if args.timings is not None:
        config.timings = args.timings
    if args.log_level is not None:
        config.log_level = args.log_level
    lab = config.lab
    if args.grc is not None:
        lab = replace(lab, instances=replace(lab.instances, grc=True))
    if args.workers is not None:
        lab = replace(lab, quadrature=replace(lab.quadrature, workers=args.workers))
    if args.cache is not None:
        lab = replace(lab, quadrature=replace(lab.quadrature, cache=False))
    config.lab = lab
    validate_config(config)
    return config


def validate_config(config: RunConfig):
    if config.command not in COMMANDS:
        raise ConfigError(f"Unknown or missing command {config.command!r}", key="command")
    for key in REQUIRED[config.command]:
        if config.params.get(key) is None:
            e = ConfigError(f"{config.command} needs params.{key}", key=f"params.{key}")
            logger.exception(e)
            raise e
    tolerances = dict(
        tol=config.params.get("tol", 1.0),
        evaluation=config.lab.evaluation.tolerance,
        contour=config.lab.contour.tolerance,
    )
    for key, tol in tolerances.items():
        if not tol > 0:
            raise ConfigError(f"Tolerance {key}={tol} must be positive", key=key)
    if config.lab.quadrature.workers < 1:
        raise ConfigError("workers must be at least 1", key="quadrature.workers")
    if "instance" in config.params:
        _instance(config)
    output = Path(config.output)
    output.mkdir(parents=True, exist_ok=True)
    if not os.access(output, os.W_OK):
        raise ConfigError(f"Output directory {output} is not writable", key="output")


def _instance(config: RunConfig, name=None):
    name = config.params["instance"] if name is None else name
    if isinstance(name, dict):
        return instance_from_config(name, config.lab.instances)
    if isinstance(name, str) and name.endswith(".json"):
        return instance_from_config(json.loads(Path(name).read_text()), config.lab.instances)
    return resolve_instance(name, config.lab.instances)


def _seconds(result, config: RunConfig):
    return result if config.timings else replace(result, seconds=0.0)


def _run_coeffs(config: RunConfig) -> list:
    instance = _instance(config)
    table = build_coefficients(instance, config.params["n_max"])
    rows = [
        (str(n), fmt(table.lam[n].real), fmt(table.lam[n].imag),
         fmt(table.mu[n].real), fmt(table.mu[n].imag))
        for n in range(1, table.bound + 1)
    ]
    return [Artifact("coefficients.csv", "csv", COEFFICIENTS_HEADER, rows)]


def _run_eval_grid(config: RunConfig) -> list:
    p = config.params
    instance = _instance(config)
    sigma = p.get("sigma", 0.5)
    step = p.get("step", 0.1)
    count = max(1, round((p["T2"] - p["T1"]) / step))
    rows, plot = [], []
    for t in np.linspace(p["T1"], p["T2"], count + 1):
        result = evaluate_L(instance, complex(sigma, t), p.get("tol"), config=config.lab.evaluation)
        v = result.value
        rows.append((fmt(t), fmt(v.real), fmt(v.imag), fmt(abs(v) ** 2), fmt(result.error)))
        plot.append((t, abs(v)))
    return [
        Artifact("eval_grid.csv", "csv", EVAL_GRID_HEADER, rows),
        Artifact("eval_grid.dat", "plot", rows=plot),
    ]


def _run_mollifier(config: RunConfig) -> list:
    p = config.params
    instance = _instance(config)
    table = build_coefficients(instance, max(1, math.floor(p["Y"])))
    sweep = mollifier_sweep(table, p["t"], p["Y"])
    step = p.get("step", 0.05)
    ys = np.arange(1.0, p["Y"] + step / 2, step)
    ys = ys[ys <= p["Y"]]
    values = sweep.value(ys)
    rows = [
        (fmt(y), fmt(p["t"]), fmt(v.real), fmt(v.imag), fmt(abs(v) ** 2))
        for y, v in zip(ys, values)
    ]
    plot = [(y, abs(v) ** 2) for y, v in zip(ys, values)]
    return [
        Artifact("mollifier.csv", "csv", MOLLIFIER_HEADER, rows),
        Artifact("mollifier.dat", "plot", rows=plot),
    ]


def _run_moment(config: RunConfig) -> list:
    p = config.params
    lab = config.lab
    instance = _instance(config)
    T1, T2, tol = p["T1"], p["T2"], p.get("tol", 1e-6)
    kind = p["kind"]
    length = p.get("y") or p.get("X") or (T2 ** p["theta"] if "theta" in p else None)
    if kind == "second":
        result = second_moment(instance, T1, T2, tol, lab.quadrature, lab.evaluation)
    elif kind in ("mollified", "y-integrated"):
        if length is None:
            raise ConfigError(f"moment --kind {kind} needs y, X or theta", key="params.y")
        table = build_coefficients(instance, max(1, math.floor(length)))
        if kind == "mollified":
            result = moment_I(instance, table, length, T1, T2, tol, lab.quadrature, lab.evaluation)
        else:
            result = moment_I_integrated(
                instance, table, T1, T2, length, tol, lab.quadrature, lab.evaluation
            )
    else:
        for key in ("gamma0", "beta0"):
            if key not in p:
                raise ConfigError(f"weighted moment needs params.{key}", key=f"params.{key}")
        x = p.get("x") or length
        if x is None:
            raise ConfigError("weighted moment needs x or theta", key="params.x")
        result = weighted_second_moment(
            instance, p["gamma0"], instance.degree, T1, T2, x, p["beta0"], tol,
            quadrature=lab.quadrature, evaluation=lab.evaluation,
        )
    result = _seconds(result, config)
    return [Artifact("moments.csv", "csv", MOMENT_HEADER, [result.csv_row()])]


def _hypothesis(value):
    if value is None or value == "scan":
        return value
    try:
        return ZeroHypothesis(complex(value.replace(" ", "")))
    except ValueError:
        raise ConfigError(f"Bad zero hypothesis {value!r}", key="params.hyp")


def _plot(name, grid, values) -> Artifact:
    return Artifact(name, "plot", rows=list(zip(grid, values)))


def _run_theorem(config: RunConfig) -> list:
    p = config.params
    lab = config.lab
    theorem = p["id"]
    tol = p.get("tol", 1e-4)

    def need(*keys):
        for key in keys:
            if p.get(key) is None:
                raise ConfigError(f"theorem {theorem} needs params.{key}", key=f"params.{key}")

    if theorem == "family":
        need("spec", "sigma", "theta", "T_grid")
        return _run_family(config)
    need("instance")
    instance = _instance(config)
    if theorem == "local":
        need("sigma", "theta", "epsilon", "T2")
        T1, T2 = p.get("T1", 0.0), p["T2"]
        report = thm_local_check(
            instance, p["sigma"], p["theta"], p["epsilon"], T1, T2,
            _hypothesis(p.get("hyp")), lab, tol=tol,
        )
        X = T2 ** p["theta"]
        artifacts = [Artifact("theorem.json", "json", data=report)]
        points = p.get("y_points", 4)
        if points > 0 and X > 1:
            table = build_coefficients(instance, max(1, math.floor(X)))
            rows = []
            for y in np.linspace(1, X, points + 1)[1:]:
                result = moment_I(instance, table, y, T1, T2, tol, lab.quadrature, lab.evaluation)
                rows.append((fmt(y), fmt(result.value), fmt(result.error)))
            artifacts.append(Artifact("theorem_y.csv", "csv", Y_PROFILE_HEADER, rows))
        return artifacts
    if theorem == "all-T":
        need("sigma", "theta", "T_grid")
        report = thm_global_sup(
            instance, p["sigma"], p["theta"], p["T_grid"], bool(p.get("dyadic")), lab, tol
        )
        normalized = [row["normalized"] for row in report.members]
        return [
            Artifact("theorem.json", "json", data=report),
            _plot("theorem.dat", report.params["T_grid"], normalized),
        ]
    need("theta", "eps_list", "T_grid")
    report = rh_criterion_scan(instance, p["theta"], p["eps_list"], p["T_grid"], lab, tol)
    artifacts = [Artifact("theorem.json", "json", data=report)]
    for i, member in enumerate(report.members):
        artifacts.append(
            _plot(f"theorem_eps{i}.dat", report.params["T_grid"], member["normalized"])
        )
    return artifacts


def _run_zeros(config: RunConfig) -> list:
    instance = _instance(config)
    sigma_lo, sigma_hi, T1, T2 = config.params["rect"]
    result = count_zeros_rectangle(
        instance, sigma_lo, sigma_hi, T1, T2, config.lab.zeros, config.lab.evaluation
    )
    return [Artifact("zeros.json", "json", data=result)]


def load_family(path) -> FamilySpec:
    data = json.loads(Path(path).read_text())
    unknown = sorted(set(data) - {"labels", "description"})
    if unknown:
        raise ConfigError(f"{path}: unknown family key {unknown[0]!r}", key=unknown[0])
    return FamilySpec(tuple(data.get("labels", ())), data.get("description", ""))


def _run_family(config: RunConfig) -> list:
    p = config.params
    family = load_family(p["spec"])
    report = family_condition(
        family, p["sigma"], p["theta"], p["T_grid"], config.lab, p.get("tol", 1e-4)
    )
    artifacts = [
        Artifact("theorem.json", "json", data=report),
        _plot("family.dat", report.params["T_grid"], report.hypothesis),
    ]
    if p.get("T") is not None:
        statistic = family_zero_statistic(family, p["sigma"], p["T"], config.lab)
        artifacts.append(Artifact("family_zeros.json", "json", data=statistic))
    return artifacts


def verification_suite(config: LabConfig = LabConfig()) -> list:
    """Quick identity checks across the evaluator, contour and coefficient
    layers."""
    zeta = resolve_instance("zeta", config.instances)
    chi4 = resolve_instance("chi_4(1)", config.instances)
    ev = config.evaluation

    def check(name, inputs, value, reference, tol):
        return CheckReport(name, inputs, value, reference, tol, abs(value - reference) < tol)

    reports = [
        check("zeta(2)", dict(s=2), evaluate_L(zeta, 2, config=ev).value, math.pi**2 / 6, 1e-10),
        check(
            "first-zero", dict(s=complex(0.5, 14.1347251417)),
            abs(evaluate_L(zeta, complex(0.5, 14.1347251417), config=ev).value), 0.0, 1e-8,
        ),
        check("L(1,chi_-4)", dict(s=1), evaluate_L(chi4, 1, config=ev).value, math.pi / 4, 1e-10),
    ]
    for instance in (zeta, chi4):
        s = complex(0.3, 7.0)
        reports.append(check(
            "functional-equation", dict(instance=instance.label, s=s),
            functional_equation_residual(instance, s, ev), 0.0, 1e-7,
        ))
    table = build_coefficients(zeta, 1000)
    reports.append(check(
        "dirichlet-inverse", dict(instance="zeta", n_max=1000),
        float(np.max(np.abs(table.inverse_residuals()))), 0.0, 1e-10,
    ))
    for c in (1.0, 2.0):
        for y in (2.0, math.e, 10.0):
            reports.append(verify_log_identity(y, c, 1e-6, config.contour))
    hyp = ZeroHypothesis(complex(0.75, 10))
    reports.append(cancellation_check(zeta, 0.0, 2.5, ZeroHypothesis(complex(0.8, 30)), 1e-8, ev))
    for u in (1.5, 2.0):
        reports.append(vanishing_check(zeta, 5.0, u, hyp, ev, config.contour))
    reports.append(j_agreement_check(zeta, table, 10.0, 5.0, hyp, eval_config=ev))
    return reports


def _run_verify(config: RunConfig) -> list:
    reports = verification_suite(config.lab)
    passed = all(r.passed for r in reports)
    for r in reports:
        logger.info(f"{r!s}")
    return [Artifact("verify.json", "json", data=dict(passed=passed, checks=reports))]


RUNNERS = {
    "coeffs": _run_coeffs,
    "eval-grid": _run_eval_grid,
    "mollifier": _run_mollifier,
    "moment": _run_moment,
    "verify": _run_verify,
    "theorem": _run_theorem,
    "zeros": _run_zeros,
    "family": _run_family,
}


def write_outputs(artifacts: Sequence[Artifact], output) -> list:
    """Writes every artifact under `output` and returns the paths"""
    output = Path(output)
    output.mkdir(parents=True, exist_ok=True)
    paths = []
    for artifact in artifacts:
        path = output / artifact.name
        if artifact.kind == "csv":
            with open(path, "w", newline="") as fp:
                writer = csv.writer(fp, lineterminator="\n")
                writer.writerow(artifact.header)
                writer.writerows(artifact.rows)
        elif artifact.kind == "json":
            path.write_text(
                json.dumps(jsonable(artifact.data), sort_keys=True, indent=2) + "\n"
            )
        elif artifact.kind == "plot":
            path.write_text("".join(f"{fmt(x)} {fmt(y)}\n" for x, y in artifact.rows))
        else:
            raise ConfigError(f"Unknown artifact kind {artifact.kind!r}")
        logger.info(f"Wrote {path}")
        paths.append(path)
    return paths


def _failed(artifacts) -> bool:
    for artifact in artifacts:
        if artifact.name == "verify.json":
            return not artifact.data["passed"]
    return False


def run_command(config: RunConfig) -> tuple:
    """Runs the configured command; returns (exit status, written paths).

    Numeric failures, ours or from numpy, scipy and mpmath, write
    `manifest.json` with the error and whatever was written before it.
    """
    written = []
    try:
        artifacts = RUNNERS[config.command](config)
        written = write_outputs(artifacts, config.output)
    except ConfigError:
        raise
    except (LabException, ArithmeticError, ValueError) as error:
        if isinstance(error, LabException):
            logger.error(f"{config.command} failed: {error!s}")
        else:
            logger.exception(f"{config.command} failed in a numerical library: {error!s}")
        manifest = dict(
            status="failed",
            command=config.command,
            error=f"{type(error).__name__}: {error}",
            completed=[str(p) for p in written],
        )
        written += write_outputs(
            [Artifact("manifest.json", "json", data=manifest)], config.output
        )
        return 1, written
    return (1 if _failed(artifacts) else 0), written


def main(argv: Sequence[str] = None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as error:
        logging.basicConfig(level="WARNING")
        logger.error(f"Config error at {error.key}: {error!s}")
        return 2
    logging.basicConfig(level=config.log_level.upper())
    try:
        status, paths = run_command(config)
    except ConfigError as error:
        logger.error(f"Config error at {error.key}: {error!s}")
        return 2
    for path in paths:
        print(path)
    return status
