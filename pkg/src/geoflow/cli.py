"""Command-line front end: ``geoflow list | geodesic | verify | convergence``.

Every report embeds the resolved run configuration and the library version.
Wall-clock timings go to a separate ``*.timings.json`` so that reports from
identical configurations are byte-identical.

Exit codes: 0 when every verdict matches the model's declarations, 1 on a
verdict mismatch, 2 on runtime or usage failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import INTEGRATORS, FlowConfig, Tolerances
from .errors import GeoflowError
from .exponential import DEFAULT_T_GRID
from .geometry import flat
from .hamiltonian import PhaseState, integrate
from .models import load_model, list_models
from .serialize import atomic_write_text, dumps, write_json
from .studies import convergence_study
from .suites import LADDER_SUITES, SUITES, SuiteInputs, applicable_suites, run_suite, select_states

EXIT_OK, EXIT_MISMATCH, EXIT_FAILURE = 0, 1, 2
DEFAULT_OUT = "geoflow_out"
DEFAULT_STEPS = (4e-3, 2e-3, 1e-3)


def _tol_flag(name: str) -> str:
    return "--tol-" + name.removesuffix("_tol").replace("_", "-")


TOL_FLAGS = {f.name: _tol_flag(f.name) for f in fields(Tolerances)}


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    suite: str | None = None
    hamiltonian: str = "h"
    x: list | None = None
    p: list | None = None
    v: list | None = None
    chart: int = 0
    t: float = 1.0
    t_grid: list = field(default_factory=lambda: list(DEFAULT_T_GRID))
    step: float = 1e-3
    steps: list = field(default_factory=lambda: list(DEFAULT_STEPS))
    integrator: str = "rk4"
    seed: int = 0
    states: int = 3
    tolerances: dict = field(default_factory=dict)
    out: str = DEFAULT_OUT

    def flow_config(self) -> FlowConfig:
        return FlowConfig(integrator=self.integrator, step=self.step, tolerances=Tolerances().override(**self.tolerances))

    def to_dict(self) -> dict:
        # the output directory is left out so reports written to different places compare equal
        d = asdict(self)
        del d["out"]
        d["resolved_tolerances"] = self.flow_config().tolerances.to_dict()
        return d


# -- parsing ----------------------------------------------------------------------------
def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _common(p: argparse.ArgumentParser, *, flow: bool = True) -> None:
    # Every default is None so that config-file values can be told apart from explicit flags.
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("--model", choices=list_models())
    p.add_argument("--out", help=f"output directory (default $GEOFLOW_OUT or ./{DEFAULT_OUT})")
    p.add_argument("--json", action="store_true", default=None, help="print the report as JSON")
    if not flow:
        return
    p.add_argument("--hamiltonian", choices=("h", "v", "g"))
    p.add_argument("--x", type=_floats, help="initial point, chart coordinates")
    p.add_argument("--p", type=_floats, help="initial covector")
    p.add_argument("--v", type=_floats, help="initial vector (converted with the metric)")
    p.add_argument("--chart", type=int)
    p.add_argument("--t", type=float, help="time horizon")
    p.add_argument("--t-grid", type=_floats, dest="t_grid")
    p.add_argument("--step", type=float)
    p.add_argument("--steps", type=_floats, help="step ladder for convergence studies")
    p.add_argument("--integrator", choices=INTEGRATORS)
    p.add_argument("--seed", type=int)
    p.add_argument("--states", type=int, help="number of seeded random states per suite")
    for name, flag in TOL_FLAGS.items():
        p.add_argument(flag, type=float, dest=f"tol__{name}", metavar="TOL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoflow", description="Sub-Riemannian and Riemannian geodesic flows on model spaces.")
    parser.add_argument("--version", action="version", version=f"geoflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{list,geodesic,verify,convergence}")

    p = sub.add_parser("list", help="list registered models")
    p.add_argument("--json", action="store_true", help="machine-readable descriptors")

    p = sub.add_parser("geodesic", help="integrate one Hamiltonian flow and write a CSV trajectory")
    _common(p)

    p = sub.add_parser("verify", help="run verification suites against declared properties")
    p.add_argument("suite_pos", nargs="?", metavar="suite", choices=(*SUITES, "all"))
    p.add_argument("--suite", choices=(*SUITES, "all"))
    _common(p)

    p = sub.add_parser("convergence", help="residual-versus-step study with a fitted order")
    p.add_argument("suite_pos", nargs="?", metavar="suite", choices=LADDER_SUITES)
    p.add_argument("--suite", choices=LADDER_SUITES)
    _common(p)
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge built-in defaults, the optional config file, and explicit flags (in that order)."""
    file_values = {}
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(file_values, dict):
            raise ValueError("config file must hold a JSON object")
    cfg = RunConfig(command=args.command)
    known = {f.name for f in fields(RunConfig)} - {"command"}
    unknown = set(file_values) - known
    if unknown:
        raise ValueError(f"unknown config key(s): {sorted(unknown)}")
    for key, val in file_values.items():
        setattr(cfg, key, val)
    cfg.tolerances = dict(cfg.tolerances)
    for key, val in vars(args).items():
        if val is None or key in ("command", "config", "json", "suite_pos"):
            continue
        if key.startswith("tol__"):
            cfg.tolerances[key[5:]] = val
        elif key in known:
            setattr(cfg, key, val)
    if getattr(args, "suite_pos", None):
        if args.suite and args.suite != args.suite_pos:
            raise ValueError(f"conflicting suites {args.suite_pos!r} and {args.suite!r}")
        cfg.suite = args.suite_pos
    if cfg.out == DEFAULT_OUT and "out" not in file_values and args.out is None:
        cfg.out = os.environ.get("GEOFLOW_OUT", DEFAULT_OUT)
    if cfg.model is None:
        raise ValueError("--model is required")
    return cfg


# -- commands ---------------------------------------------------------------------------
def _envelope(cfg: RunConfig, body: dict) -> dict:
    return {"library_version": __version__, "config": cfg.to_dict(), **body}


def _emit(cfg: RunConfig, stem: str, report: dict, elapsed: float, as_json: bool, text: str) -> Path:
    out = Path(cfg.out)
    path = write_json(out / f"{stem}.json", report)
    write_json(out / f"{stem}.timings.json", {"elapsed_seconds": round(elapsed, 3)})
    print(dumps(report) if as_json else text, end="")
    return path


def cmd_list(args) -> int:
    descs = [load_model(name).descriptor() for name in list_models()]
    if args.json:
        print(dumps({"library_version": __version__, "models": descs}), end="")
        return EXIT_OK
    for d in descs:
        flags = ", ".join(k for k, v in d["declared"].items() if v) or "none"
        print(f"{d['name']:<16} dim {d['dim']:<3} H rank {d['horizontal_rank']:<3} declared: {flags}")
    return EXIT_OK


def _initial_state(model, cfg: RunConfig):
    if cfg.x is not None:
        x, chart = np.asarray(cfg.x, dtype=float), cfg.chart
    elif cfg.p is None and cfg.v is None and model.canonical_states:
        x, p, chart = model.canonical_states[0]
        return np.asarray(x, dtype=float), np.asarray(p, dtype=float), chart
    elif model.interesting_points:
        x, chart = model.interesting_points[0]
    else:
        x, chart = np.zeros(model.dim), cfg.chart
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise ValueError(f"--x needs {model.dim} components for model {model.name}")
    if not model.atlas.guard(x, chart):
        raise GeoflowError(f"initial point outside {model.atlas.guard_description(chart)}")
    if cfg.p is not None and cfg.v is not None:
        raise ValueError("give --p or --v, not both")
    if cfg.v is not None:
        p = flat(model, x, np.asarray(cfg.v, dtype=float), chart)
    elif cfg.p is not None:
        p = np.asarray(cfg.p, dtype=float)
    else:
        raise ValueError(f"model {model.name} has no canonical state; give --p or --v")
    if p.shape != (model.dim,):
        raise ValueError(f"covector needs {model.dim} components for model {model.name}")
    return x, p, chart


def cmd_geodesic(cfg: RunConfig, as_json: bool) -> int:
    model = load_model(cfg.model)
    x, p, chart = _initial_state(model, cfg)
    start = time.perf_counter()
    grid = sorted({0.0, float(cfg.t), *(float(s) for s in cfg.t_grid if 0 < s < cfg.t)})
    traj = integrate(model, cfg.hamiltonian, PhaseState(x, p, chart), grid, cfg.flow_config())
    stem = f"geodesic_{model.name}_{cfg.hamiltonian}"
    csv_path = traj.to_csv(Path(cfg.out) / f"{stem}.csv")
    summary = traj.summary()
    summary["csv"] = csv_path.name
    report = _envelope(cfg, {"command": "geodesic", "summary": summary})
    text = (
        f"{model.name} H^{cfg.hamiltonian}: t = {summary['t_final']:g}, {summary['n_records']} records, "
        f"energy drift {summary['energy_drift']:.3e}, {len(summary['chart_switches'])} chart switch(es)\n"
        f"wrote {csv_path}\n"
    )
    _emit(cfg, stem, report, time.perf_counter() - start, as_json, text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, as_json: bool) -> int:
    model = load_model(cfg.model)
    suite = cfg.suite or "all"
    names = applicable_suites(model) if suite == "all" else [suite]
    start = time.perf_counter()
    states = select_states(model, cfg.states, cfg.seed, cfg.x, cfg.p, cfg.chart)
    inp = SuiteInputs(states, cfg.flow_config(), tuple(cfg.t_grid), cfg.seed)
    results = {name: run_suite(name, model, inp) for name in names}
    all_match = all(r["match"] for r in results.values())
    report = _envelope(
        cfg,
        {
            "command": "verify",
            "model": model.descriptor(),
            "n_states": len(states),
            "suites": results,
            "all_match": all_match,
        },
    )
    lines = [f"{'PASS' if r['match'] else 'FAIL'}  {name:<14} {r['message']}" for name, r in results.items()]
    lines.append(f"{model.name}: {'all verdicts match' if all_match else 'verdict mismatch'}")
    _emit(cfg, f"verify_{suite}_{model.name}", report, time.perf_counter() - start, as_json, "\n".join(lines) + "\n")
    return EXIT_OK if all_match else EXIT_MISMATCH


def cmd_convergence(cfg: RunConfig, as_json: bool) -> int:
    from .suites import ladder_residual

    if cfg.suite is None:
        raise ValueError(f"convergence needs a suite: one of {', '.join(LADDER_SUITES)}")
    if len(cfg.steps) < 3:
        raise ValueError("a convergence study needs at least 3 steps")
    model = load_model(cfg.model)
    if cfg.p is not None or cfg.v is not None or model.canonical_states:
        state = _initial_state(model, cfg)
    else:
        state = model.random_states(1, cfg.seed)[0]
    base = cfg.flow_config()
    start = time.perf_counter()
    label = f"{cfg.suite} on {model.name}, t = {cfg.t:g}"
    study = convergence_study(lambda h: ladder_residual(cfg.suite, model, state, cfg.t, base.with_step(h)), cfg.steps, label)
    stem = f"convergence_{cfg.suite}_{model.name}"
    report = _envelope(cfg, {"command": "convergence", "study": study.to_dict()})
    atomic_write_text(Path(cfg.out) / f"{stem}.txt", study.table())
    _emit(cfg, stem, report, time.perf_counter() - start, as_json, study.table())
    return EXIT_OK


COMMANDS = {"geodesic": cmd_geodesic, "verify": cmd_verify, "convergence": cmd_convergence}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        return cmd_list(args)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, bool(args.json))
    except (GeoflowError, ValueError, KeyError, OSError) as exc:
        kind = type(exc).__name__
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"geoflow: error: {kind}: {msg}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
