"""Command-line front end: build, solve, certify, analyze, simulate, run-experiment, gen-demands.

Exit codes: 0 success, 2 input error, 3 infeasible model, 4 certification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis
from .errors import GroomingError, InputError, ModelSizeError
from .milp import GroomingConfig, GroomingModel, assemble_model
from .net_model import (
    DEFAULT_MODULATION,
    build_catalog,
    demands_to_document,
    generate_demands,
    load_demands,
    load_modulation_table,
    load_topology,
)
from .pipeline import SOLVERS, solve
from .solver.bnb import Limits
from .solver.certify import certify
from .solver.mps import export_mps, import_solution, parse_name_map, write_solution
from .solver.solution import canonicalize

OUT_ENV = "ROBUST_GROOMING_OUT"
EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CERT = 0, 2, 3, 4
CONFIG_FIELDS = ("alpha", "beta", "granularity", "gamma", "mu", "epsilon", "big_m", "robust", "strict")

log = logging.getLogger("robust_grooming")


class CommandFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    topology: Path | None = None
    demands: Path | None = None
    modulation: Path | None = None
    grooming: GroomingConfig = field(default_factory=GroomingConfig)
    solver: str = "auto"
    out: Path = Path("out")
    seed: int = 7
    trials: int = 1000
    time_limit: float = 60.0


def _read(path: Path | None, what: str) -> str:
    if path is None:
        raise InputError(f"no {what} file given")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc.strerror}") from None


def _config_document(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(_read(Path(path), "config"))
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"config {path}: expected a JSON object")
    if doc.get("format_version", 1) != 1:
        raise InputError(f"config {path}: unsupported format_version {doc.get('format_version')!r}")
    unknown = set(doc) - set(CONFIG_FIELDS) - {
        "format_version", "topology", "demands", "modulation", "solver", "seed", "trials", "time_limit",
        "backups",
    }
    if unknown:
        raise InputError(f"config {path}: unknown keys {sorted(unknown)}")
    return doc


def resolve_config(args: argparse.Namespace) -> RunConfig:
    doc = _config_document(getattr(args, "config", None))
    base = Path(args.config).parent if getattr(args, "config", None) else Path(".")

    def path_of(key: str) -> Path | None:
        flag = getattr(args, key, None)
        if flag:
            return Path(flag)
        return base / doc[key] if key in doc else None

    fields = {k: doc[k] for k in CONFIG_FIELDS if k in doc}
    if "mu" in fields:
        fields["mu"] = tuple(float(m) for m in fields["mu"])
    if "backups" in doc:
        fields.setdefault("mu", (1.0,) * int(doc["backups"]))
    if getattr(args, "robust", None) is not None:
        fields["robust"] = args.robust
    if getattr(args, "strict", None) is not None:
        fields["strict"] = args.strict
    if getattr(args, "gamma", None) is not None:
        fields["gamma"] = args.gamma
    if getattr(args, "mu", None):
        fields["mu"] = tuple(float(m) for m in args.mu.split(","))
    if getattr(args, "backups", None) is not None:
        mu = fields.get("mu", (1.0,))
        fields["mu"] = tuple((list(mu) + [1.0] * args.backups)[: args.backups])
    cfg = RunConfig(
        topology=path_of("topology"),
        demands=path_of("demands"),
        modulation=path_of("modulation"),
        grooming=GroomingConfig(**fields),
        solver=getattr(args, "solver", None) or doc.get("solver", "auto"),
        out=Path(getattr(args, "out", None) or os.environ.get(OUT_ENV) or "out"),
        seed=args.seed if getattr(args, "seed", None) is not None else int(doc.get("seed", 7)),
        trials=args.trials if getattr(args, "trials", None) is not None else int(doc.get("trials", 1000)),
        time_limit=getattr(args, "time_limit", None) or float(doc.get("time_limit", 60.0)),
    )
    if cfg.trials < 1:
        raise InputError("trials must be at least 1")
    if cfg.solver not in SOLVERS:
        raise InputError(f"unknown solver {cfg.solver!r}")
    return cfg


def load_model(cfg: RunConfig) -> GroomingModel:
    topology = load_topology(_read(cfg.topology, "topology"))
    table = load_modulation_table(_read(cfg.modulation, "modulation")) if cfg.modulation else DEFAULT_MODULATION
    demands = load_demands(_read(cfg.demands, "demands"), topology)
    return assemble_model(build_catalog(topology, table), demands, cfg.grooming)


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _certify_or_fail(model, sol, out: Path) -> None:
    report = certify(model, sol)
    _write(out, "certificate.txt", report.summary() + "\n")
    print(report.summary())
    if not report.passed:
        raise CommandFailed(EXIT_CERT, "certificate failed")


def _load_solution(cfg: RunConfig, model: GroomingModel, path: str | None):
    sol_path = Path(path) if path else cfg.out / "solution.txt"
    document = _read(sol_path, "solution")
    map_path = cfg.out / "model.colmap"
    name_map = parse_name_map(map_path.read_text()) if map_path.exists() else {}
    return import_solution(document, name_map, model.index, model.objective)


def cmd_build(args) -> int:
    cfg = resolve_config(args)
    model = load_model(cfg)
    exported = export_mps(model)
    _write(cfg.out, "model.txt", model.dump())
    _write(cfg.out, "model.mps", exported.text)
    _write(cfg.out, "model.colmap", exported.column_map_text())
    _write(cfg.out, "model.rowmap", exported.row_map_text())
    print(f"columns {model.n_cols} rows {model.n_rows}")
    for w in model.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = resolve_config(args)
    model = load_model(cfg)
    if args.import_file:
        sol = _load_solution(cfg, model, args.import_file)
        sol = canonicalize(model, sol) if sol.values is not None else sol
    else:
        try:
            sol = solve(model, cfg.solver, Limits(time_s=cfg.time_limit))
        except ModelSizeError as exc:
            raise InputError(f"{exc}; use 'build' and solve model.mps externally, then 'solve --import'") from None
    if sol.values is None:
        print(f"status {sol.status}")
        _write(cfg.out, "solution.txt", write_solution(sol, model.index))
        code = EXIT_INFEASIBLE if sol.status in ("infeasible", "unbounded") else EXIT_INPUT
        raise CommandFailed(code, f"no solution: {sol.status}")
    _write(cfg.out, "solution.txt", write_solution(sol, model.index))
    print(f"status {sol.status} objective {sol.objective:.12g}")
    _certify_or_fail(model, sol, cfg.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = resolve_config(args)
    model = load_model(cfg)
    sol = _load_solution(cfg, model, args.solution)
    _certify_or_fail(model, sol, cfg.out)
    return EXIT_OK


def _faults(args, nodes) -> list[str]:
    if not getattr(args, "faults", None):
        return list(nodes)
    chosen = [f.strip() for f in args.faults.split(",") if f.strip()]
    missing = [f for f in chosen if f not in nodes]
    if missing:
        raise InputError(f"unknown fault nodes {missing}")
    return chosen


def _analysis_inputs(args):
    cfg = resolve_config(args)
    model = load_model(cfg)
    sol = _load_solution(cfg, model, args.solution)
    report = certify(model, sol)
    if not report.passed:
        print(report.summary())
        raise CommandFailed(EXIT_CERT, "solution does not certify")
    paths = analysis.extract_paths(sol, model.index, model.demands)
    return cfg, model, sol, paths


def run_analysis(model, sol, paths, faults, out: Path, count_mode: str = "demands") -> dict:
    ranking = analysis.critical_node_analysis(paths, count_mode)
    fault_classes = analysis.fault_report(paths, faults)
    loading = {analysis.NO_FAULT: analysis.post_fault_loading(paths, model.demands, None, sol, model)}
    for v in faults:
        loading[analysis.scenario_name(v)] = analysis.post_fault_loading(paths, model.demands, v, sol, model)
    _write(out, "criticality.csv", analysis.criticality_csv(ranking))
    _write(out, "faults.csv", analysis.fault_csv(fault_classes))
    _write(out, "loading.csv", analysis.loading_csv(loading))
    _write(out, "summary.json", analysis.summary_document(paths, ranking, fault_classes, loading))
    return loading


def cmd_analyze(args) -> int:
    cfg, model, sol, paths = _analysis_inputs(args)
    faults = _faults(args, paths.nodes)
    run_analysis(model, sol, paths, faults, cfg.out, args.count_mode)
    print(f"analyzed {len(faults)} fault scenarios into {cfg.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, model, sol, paths = _analysis_inputs(args)
    faults = [None] + _faults(args, paths.nodes)
    report = analysis.deviation_monte_carlo(
        paths, model.demands, faults, cfg.trials, cfg.seed, sol, model, workers=args.workers
    )
    _write(cfg.out, "deviation.csv", analysis.deviation_csv(report))
    total = report.violations_by_scenario()
    print(f"{cfg.trials} trials, seed {cfg.seed}, violations {total.get(analysis.NO_FAULT, 0)} without faults")
    return EXIT_OK


def cmd_run_experiment(args) -> int:
    cfg = resolve_config(args)
    rows = ["mode,objective,status,max_utilization,deviation_violations,fault_violations"]
    for robust in (True, False):
        mode = "robust" if robust else "deterministic"
        sub = cfg.out / mode
        mcfg = RunConfig(**{**cfg.__dict__, "grooming": cfg.grooming.with_(robust=robust), "out": sub})
        model = load_model(mcfg)
        sol = solve(model, mcfg.solver, Limits(time_s=mcfg.time_limit))
        if sol.values is None:
            rows.append(f"{mode},,{sol.status},,,")
            continue
        _write(sub, "solution.txt", write_solution(sol, model.index))
        report = certify(model, sol)
        _write(sub, "certificate.txt", report.summary() + "\n")
        if not report.passed:
            raise CommandFailed(EXIT_CERT, f"{mode} solution does not certify")
        paths = analysis.extract_paths(sol, model.index, model.demands)
        faults = list(paths.nodes)
        loading = run_analysis(model, sol, paths, faults, sub)
        dev = analysis.deviation_monte_carlo(paths, model.demands, [None] + faults, mcfg.trials, mcfg.seed, sol, model)
        _write(sub, "deviation.csv", analysis.deviation_csv(dev))
        base = loading[analysis.NO_FAULT]
        max_util = max((e.utilization for e in base if e.capacity > 0), default=0.0)
        by = dev.violations_by_scenario()
        fault_viol = sum(v for k, v in by.items() if k != analysis.NO_FAULT)
        rows.append(
            f"{mode},{sol.objective:.12g},{sol.status},{max_util:.6f},{by.get(analysis.NO_FAULT, 0)},{fault_viol}"
        )
    text = "\n".join(rows) + "\n"
    _write(cfg.out, "comparison.csv", text)
    print(text, end="")
    return EXIT_OK


def cmd_gen_demands(args) -> int:
    topology = load_topology(_read(Path(args.topology) if args.topology else None, "topology"))
    demands = generate_demands(
        topology, args.count, args.min_gbps, args.max_gbps, args.deviation_fraction, args.seed or 0, args.round
    )
    text = json.dumps(demands_to_document(demands), indent=2) + "\n"
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", help="topology JSON document")
    p.add_argument("--demands", help="demand JSON document")
    p.add_argument("--modulation", help="modulation table JSON document (default: built-in table)")
    p.add_argument("--config", help="JSON run configuration")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--robust", dest="robust", action="store_true", default=None)
    mode.add_argument("--deterministic", dest="robust", action="store_false")
    excl = p.add_mutually_exclusive_group()
    excl.add_argument("--strict", dest="strict", action="store_true", default=None)
    excl.add_argument("--literal-exclusivity", dest="strict", action="store_false")
    p.add_argument("--gamma", type=float, help="uncertainty budget (default 0.2 x demand count)")
    p.add_argument("--mu", help="comma-separated backup coefficients, e.g. 1 or 1,0.5")
    p.add_argument("--backups", type=int, help="number of backup paths")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-grooming", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="assemble the model; write dump, MPS and name maps")
    _model_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="solve (or import a solution) and certify it")
    _model_flags(p)
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--import", dest="import_file", help="solution file produced by an external solver")
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="check a solution file against every model row")
    _model_flags(p)
    p.add_argument("--solution", help="solution file (default <out>/solution.txt)")
    p.set_defaults(func=cmd_certify)

    for name, func, text in (
        ("analyze", cmd_analyze, "criticality, fault classification and post-fault loading"),
        ("simulate", cmd_simulate, "Monte Carlo demand deviation"),
    ):
        p = sub.add_parser(name, help=text)
        _model_flags(p)
        p.add_argument("--solution", help="solution file (default <out>/solution.txt)")
        p.add_argument("--faults", help="comma-separated fault nodes (default: every node)")
        if name == "analyze":
            p.add_argument("--count-mode", choices=("demands", "paths"), default="demands")
        else:
            p.add_argument("--trials", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("run-experiment", help="robust vs deterministic, end to end, with a comparison table")
    _model_flags(p)
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.set_defaults(func=cmd_run_experiment)

    p = sub.add_parser("gen-demands", help="random demand matrix for a topology")
    p.add_argument("--topology", required=True)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--min-gbps", type=float, default=10.0)
    p.add_argument("--max-gbps", type=float, default=50.0)
    p.add_argument("--deviation-fraction", type=float, default=0.1)
    p.add_argument("--round", action="store_true", help="round bandwidths to whole Gb/s")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen_demands)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CommandFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GroomingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
