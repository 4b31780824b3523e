"""Command-line experiment driver.

``dpsbp-wave run --config <path> [--out <dir>] [--threads <n>]`` runs one
experiment described by a JSON file and writes CSV files.
``dpsbp-wave certify --order <p>`` checks the operator assumptions.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import convergence_rate, energy_trace, exact_solution, l2_error
from .errors import DPSBPError, ParseError
from .forward import (
    BoundaryParams,
    ForwardModel,
    PenaltyConfig,
    WaveProblem,
    axis_points,
    block_points,
    build_problem_operators,
)
from .inverse import (
    InitialDisplacementInversion,
    MisfitForm,
    Observations,
    optimize,
    synthetic_observations,
)
from .operators import Flavor, build_space_triplet, build_time_ops, verify_space, verify_time

EXPERIMENTS = ("convergence1d", "convergence2d", "forward1d", "forward2d",
               "inverse1d", "inverse2d", "certify_ops")
ORDERS = (2, 4, 6, 8)
ALL_FLAVORS = (("minus", "minus"), ("minus", "center"), ("center", "minus"),
               ("center", "center"))
CERTIFY_SIZES = (21, 41, 81)
DEFAULT_CONFIG = Path(__file__).with_name("configs") / "convergence1d.json"


@dataclass
class ExperimentConfig:
    """One experiment; see ``configs/*.json`` for examples."""

    experiment: str
    order: int
    flavors: list = field(default_factory=lambda: [list(f) for f in ALL_FLAVORS])
    sigma: float = 0.0
    c: float = 1.0
    grids: list = field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    blocks: list = field(default_factory=list)
    final_time: float = 2.0
    penalty: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    initial: str = "default"
    snapshots: list = field(default_factory=list)
    max_iter: int = 10
    initial_guess: float = 1.0
    misfit_form: str = "symmetric"
    output_dir: str = "out"

    @property
    def dim(self) -> int:
        return 2 if self.experiment.endswith("2d") else 1

    @property
    def block_counts(self) -> list:
        return list(self.blocks) if self.blocks else [1] * len(self.grids)

    def penalty_config(self) -> PenaltyConfig:
        p = dict(self.penalty)
        mu1, mu3 = p.pop("mu1", -1.0), p.pop("mu3", -1.0)
        return PenaltyConfig.from_mu(mu1, mu3, **p)

    def boundary_params(self) -> BoundaryParams:
        return BoundaryParams(**self.boundary)

    def to_dict(self) -> dict:
        return asdict(self)


def _validate(cfg: ExperimentConfig) -> list:
    out = []
    if cfg.experiment not in EXPERIMENTS:
        out.append(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    if cfg.order not in ORDERS:
        out.append(f"order must be one of {ORDERS}, got {cfg.order}")
    for pair in cfg.flavors:
        try:
            if len(pair) != 2:
                raise ValueError
            for name in pair:
                Flavor.parse(name)
        except (TypeError, ValueError):
            out.append(f"flavor pair {pair!r} must name two of 'minus', 'center'")
    if not cfg.sigma >= 0:
        out.append("sigma must be >= 0")
    if not cfg.c > 0:
        out.append("c must be > 0")
    if not cfg.final_time > 0:
        out.append("final_time must be > 0")
    if not cfg.grids or any(not (isinstance(h, (int, float)) and h > 0) for h in cfg.grids):
        out.append("grids must be a non-empty list of positive spacings")
    if cfg.blocks and len(cfg.blocks) != len(cfg.grids):
        out.append("blocks needs one entry per grid")
    if cfg.initial not in ("default", "cosine", "gaussian", "zero"):
        out.append("initial must be one of default, cosine, gaussian, zero")
    if cfg.max_iter < 0:
        out.append("max_iter must be >= 0")
    try:
        MisfitForm.parse(cfg.misfit_form)
    except ValueError:
        out.append("misfit_form must be 'symmetric' or 'printed'")
    try:
        bp = cfg.boundary_params()
        out.extend(bp.diagnostics("x"))
    except TypeError as exc:
        out.append(f"boundary: {exc}")
    try:
        out.extend(cfg.penalty_config().diagnostics())
    except TypeError as exc:
        out.append(f"penalty: {exc}")
    if not out and cfg.experiment != "certify_ops":
        for h, nb in zip(cfg.grids, cfg.block_counts):
            try:
                axis_points((-1.0, 1.0), h)
                block_points(axis_points((0.0, cfg.final_time), h), nb)
            except (DPSBPError, ValueError) as exc:
                out.append(f"grid {h} with {nb} blocks: {exc}")
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ParseError("configuration must be a JSON object")
    missing = [k for k in ("experiment", "order") if k not in data]
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    problems = [f"missing field '{k}'" for k in missing]
    problems += [f"unknown field '{k}'" for k in unknown]
    if problems:
        raise ParseError("; ".join(problems), problems)
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ParseError(str(exc), [str(exc)]) from exc
    problems = _validate(cfg)
    if problems:
        raise ParseError("invalid configuration: " + "; ".join(problems), problems)
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", line=exc.lineno) from exc
    return config_from_dict(data)


# --- experiments -----------------------------------------------------------------


def _num(v) -> str:
    return f"{float(v):.17g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for row in rows:
            out.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _initial_field(cfg: ExperimentConfig, kind: str):
    if kind == "default":
        kind = "cosine" if cfg.experiment.startswith("convergence") else "gaussian"
    if kind == "zero":
        return None
    if kind == "cosine":
        return lambda *x: np.prod([np.cos(np.pi * xx) for xx in x], axis=0)
    width = 100.0 if cfg.dim == 1 else 8.0
    return lambda *x: np.exp(-width * sum(xx**2 for xx in x))


def _problem(cfg: ExperimentConfig, initial=True) -> WaveProblem:
    return WaveProblem(dim=cfg.dim, final_time=cfg.final_time, wave_speed=cfg.c,
                       damping=cfg.sigma, boundary=(cfg.boundary_params(),),
                       initial_displacement=_initial_field(cfg, cfg.initial) if initial else None)


def _label(pair) -> str:
    return "".join("Dm" if Flavor.parse(f) is Flavor.MINUS else "D" for f in pair)


def _error_at(cfg, pair, h, nb):
    prob = _problem(cfg)
    axes, tm = build_problem_operators(prob, cfg.order, h, n_blocks=nb,
                                       flavor_i=pair[0], flavor_j=pair[1])
    sol = ForwardModel(prob, axes, tm, cfg.penalty_config(), nb).solve()
    return l2_error(sol, exact_solution(cfg.dim, cfg.c, cfg.sigma))


def run_convergence(cfg: ExperimentConfig, out: Path, threads: int = 1) -> dict:
    jobs = [(tuple(pair), h, nb) for pair in cfg.flavors
            for h, nb in zip(cfg.grids, cfg.block_counts)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        errs = list(pool.map(lambda j: _error_at(cfg, *j), jobs))
    table = {}
    for (pair, h, _), e in zip(jobs, errs):
        table.setdefault(pair, []).append((h, e))
    labels = [_label(p) for p in table]
    _write_csv(out / "errors.csv", ["delta"] + labels,
               [[float(h)] + [table[p][i][1] for p in table]
                for i, h in enumerate(cfg.grids)])
    rates = {_label(p): convergence_rate(v) for p, v in table.items()}
    _write_csv(out / "rates.csv", ["flavor", "rate"], [[k, float(v)] for k, v in rates.items()])
    return rates


def _write_snapshot(path: Path, grid, u):
    names = ["x", "y"][: grid.dim]
    _write_csv(path, names + ["u"],
               [[*(float(c[i]) for c in grid.coords), float(u[i])] for i in range(grid.size)])


def run_forward(cfg: ExperimentConfig, out: Path) -> dict:
    prob = _problem(cfg)
    h, nb = cfg.grids[0], cfg.block_counts[0]
    pair = cfg.flavors[0]
    axes, tm = build_problem_operators(prob, cfg.order, h, n_blocks=nb,
                                       flavor_i=pair[0], flavor_j=pair[1])
    pen = cfg.penalty_config()
    sol = ForwardModel(prob, axes, tm, pen, nb).solve()
    trace = energy_trace(sol, prob, sol.grid, tm, pen)
    bt = np.concatenate([[0.0], trace.boundary / np.tile(tm.weights, nb)])
    damp = np.concatenate([[0.0], trace.damping / np.tile(tm.weights, nb)])
    _write_csv(out / "energy.csv", ["k", "E_k", "BT_hk", "damping_k"],
               [[k, float(e), float(b), float(d)]
                for k, (e, b, d) in enumerate(zip(trace.energy, bt, damp))])
    stacked = sol.stacked()
    times = np.arange(stacked.shape[0]) * tm.step
    wanted = cfg.snapshots or [0.0, cfg.final_time]
    for t in wanted:
        k = int(np.argmin(np.abs(times - t)))
        _write_snapshot(out / f"snapshot_t{k}.csv", sol.grid, stacked[k])
    return {"final_energy": trace.final, "initial_energy": trace.initial}


def run_inverse(cfg: ExperimentConfig, out: Path) -> dict:
    prob = _problem(cfg, initial=False)
    h, nb = cfg.grids[0], cfg.block_counts[0]
    pair = cfg.flavors[0]
    axes, tm = build_problem_operators(prob, cfg.order, h, n_blocks=nb,
                                       flavor_i=pair[0], flavor_j=pair[1])
    model = ForwardModel(prob, axes, tm, cfg.penalty_config(), nb)
    grid = model.grid
    truth = _initial_field(cfg, "gaussian" if cfg.initial == "default" else cfg.initial)
    f_true = np.zeros(grid.size) if truth is None else truth(*grid.coords)
    obs = synthetic_observations(model, f_true)
    obs.to_csv(out / "observations.csv")
    obs = Observations.from_csv(out / "observations.csv", grid,
                                np.stack([model.offsets[b] + tm.step * np.arange(tm.m)
                                          for b in range(nb)]))
    inv = InitialDisplacementInversion(model, obs, cfg.misfit_form, f_true)
    names = ["x", "y"][: grid.dim]

    def snapshot(state):
        _write_csv(out / f"f_iter_{state.iterations}.csv", names + ["f_value"],
                   [[*(float(c[i]) for c in grid.coords), float(state.f_iter[i])]
                    for i in range(grid.size)])

    state = optimize(inv, np.full(grid.size, cfg.initial_guess), cfg.max_iter,
                     callback=snapshot)
    _write_csv(out / "misfit.csv", ["iteration", "misfit", "error"],
               [[i, float(j), float(e)] for i, (j, e)
                in enumerate(zip(state.misfit_history, state.error_history))])
    return {"final_misfit": state.misfit_history[-1], "final_error": state.error_history[-1]}


def certify(order: int, sizes=CERTIFY_SIZES) -> list:
    """Rows ``(order, n, check, residual, passed)`` for space and time operators."""
    rows = []
    for n in sizes:
        reports = [verify_space(build_space_triplet(order, n, 2.0 / (n - 1)))]
        for fl in ("minus", "center"):
            reports.append(verify_time(build_time_ops(order, n, 2.0 / (n - 1), fl, fl)))
        for rep in reports:
            for name, ok in rep.passed.items():
                rows.append((order, n, name, float(rep.residuals.get(name, 0.0)), bool(ok)))
    return rows


def run_certify(cfg: ExperimentConfig, out: Path) -> dict:
    rows = certify(cfg.order)
    _write_csv(out / "certify.csv", ["order", "n", "check", "residual", "passed"], rows)
    failed = [r for r in rows if not r[4]]
    if failed:
        raise DPSBPError(f"{len(failed)} operator checks failed")
    return {"checks": len(rows)}


def run(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> dict:
    """Run one experiment and write its CSV files; returns a short summary."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.experiment.startswith("convergence"):
        return run_convergence(cfg, out, threads)
    if cfg.experiment.startswith("forward"):
        return run_forward(cfg, out)
    if cfg.experiment.startswith("inverse"):
        return run_inverse(cfg, out)
    return run_certify(cfg, out)


# --- entry point -------------------------------------------------------------------


def _threads(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("DPSBP_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _error_record(exc: Exception) -> str:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        rec["diagnostics"] = exc.diagnostics
        if exc.line is not None:
            rec["line"] = exc.line
    return json.dumps(rec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dpsbp-wave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_cert = sub.add_parser("certify", help="check operator assumptions")
    p_cert.add_argument("--order", type=int, required=True)
    args = parser.parse_args(argv)

    try:
        if args.command == "certify":
            if args.order not in ORDERS:
                raise ParseError(f"order must be one of {ORDERS}")
            rows = certify(args.order)
            for order, n, name, res, ok in rows:
                print(f"{'PASS' if ok else 'FAIL'} order={order} n={n} {name} residual={res:.3e}")
            return 0 if all(r[4] for r in rows) else 1
        cfg = parse_config(args.config)
        summary = run(cfg, args.out, _threads(args.threads))
        print(json.dumps({k: (float(v) if isinstance(v, (float, np.floating)) else v)
                          for k, v in summary.items()}))
        return 0
    except DPSBPError as exc:
        print(_error_record(exc), file=sys.stderr)
        return 2 if isinstance(exc, ParseError) else 1


if __name__ == "__main__":
    sys.exit(main())
