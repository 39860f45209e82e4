"""Command-line front end: solve, sweep, oracle, gradcheck and shadowbench."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from .ansatz import standard_layout
from .config import RunConfig, load_config, parse_override
from .core import infidelity, pauli_matrix
from .distillation import distilled_estimate, distilled_value_exact
from .errors import BadParams, ConfigError, DegenerateSteadySpace, NoSteadyState
from .lindblad import cost_exact, exact_steady_state, steady_state_residual
from .models import ModelParams, build_model
from .optimizer import CostEvaluator, OptConfig, ShadowConfig, multi_restart
from .shadows import estimate_cost, estimate_observable, sample_shadow_set, shadow_norm_proxy, variance_bound

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
SCHEMA_VERSION = 1

SWEEP_COLUMNS = ["g", "cost", "infidelity", "iterations", "wall_time"]
BENCH_COLUMNS = ["section", "n_unitaries", "m", "repeats", "mean", "reference", "bias", "stderr",
                 "variance", "bound", "ratio", "passed"]

# purpose tags for seeds derived from the master seed
_RESTARTS, _SHADOW_COST, _SHADOW_OBS, _GRADCHECK, _BENCH_STATE, _BENCH_COST, _BENCH_DISTILL = range(7)


def derived_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1)[0])


# --- problem construction -----------------------------------------------------


def build_spec(cfg: RunConfig, g: float | None = None):
    m = cfg["model"]
    params = ModelParams(
        n_sites=m["n_sites"],
        g=float(m["g"] if g is None else g),
        gammas=tuple(float(x) for x in m["gammas"]),
        boundary=m["boundary"],
    )
    return build_model(m["name"], params, cfg["convention"])


def build_layout(cfg: RunConfig):
    return standard_layout(cfg["model.n_sites"], cfg["ansatz.d1"], cfg["ansatz.d2"])


def build_evaluator(cfg: RunConfig, spec, layout, point: int = 0) -> CostEvaluator:
    c = cfg["cost"]
    shadow = None
    if c["mode"] == "shadow":
        shadow = ShadowConfig(c["n_unitaries"], c["shots"], c["ensemble"],
                              derived_seed(cfg["seed"], _SHADOW_COST, point), bool(c["faithful"]))
    return CostEvaluator(spec, layout, c["mode"], shadow)


def opt_config(cfg: RunConfig) -> OptConfig:
    o = cfg["optimizer"]
    return OptConfig(
        method=o["method"],
        learning_rate=float(o["learning_rate"]),
        epsilon=float(o["epsilon"]),
        max_iters=int(o["max_iters"]),
        grad_mode=o["grad_mode"],
        fd_step=float(o["fd_step"]),
    )


def observables(cfg: RunConfig, rho, evaluator: CostEvaluator, theta, point: int = 0) -> dict[str, dict]:
    out: dict[str, dict] = {}
    names = [o.upper() for o in cfg["observables"]]
    if not names:
        return out
    ss = None
    if evaluator.mode == "shadow":
        sc = evaluator.shadow
        est = CostEvaluator(evaluator.spec, evaluator.layout, "shadow",
                            ShadowConfig(sc.n_unitaries, sc.shots, sc.ensemble,
                                         derived_seed(cfg["seed"], _SHADOW_OBS, point), sc.faithful))
        ss = est.shadow_set(theta)
    for name in names:
        op = pauli_matrix(name)
        entry = {"exact": float(np.real(np.trace(op @ rho)))}
        if ss is not None:
            entry["shadow"] = estimate_observable(ss, op)
        out[name] = entry
    return out


def solve_point(cfg: RunConfig, g: float | None = None, point: int = 0, theta0=None) -> dict:
    """One optimization plus oracle comparison; the common core of solve and sweep."""
    t0 = time.perf_counter()
    spec = build_spec(cfg, g)
    layout = build_layout(cfg)
    oracle = exact_steady_state(spec)
    evaluator = build_evaluator(cfg, spec, layout, point)
    res = multi_restart(
        evaluator,
        opt_config(cfg),
        n_restarts=cfg["optimizer.restarts"],
        seed=derived_seed(cfg["seed"], _RESTARTS, point),
        init_scale=float(cfg["optimizer.init_scale"]),
        theta0=theta0,
    )
    best = res.best
    rho = evaluator.state(best.theta_star)
    return {
        "g": float(cfg["model.g"] if g is None else g),
        "run": best,
        "restarts_used": len(res.runs),
        "cost": float(cost_exact(spec, rho)),
        "infidelity": float(np.clip(infidelity(rho, oracle.mat), 0.0, 1.0)),
        "observables": observables(cfg, rho, evaluator, best.theta_star, point),
        "oracle_observables": {o.upper(): oracle.expectation(pauli_matrix(o.upper())) for o in cfg["observables"]},
        "wall_time": time.perf_counter() - t0,
    }


# --- output -------------------------------------------------------------------


def provenance(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "schema_version": SCHEMA_VERSION, "seed": cfg["seed"], "config": cfg.resolved()}


def write_json(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


class CsvSink:
    """CSV writer with a leading ``# {provenance}`` line; flushes after every row."""

    def __init__(self, path: Path | None, header: list[str], meta: dict):
        if path is None:
            self._fh, self._own = sys.stdout, False
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._fh, self._own = open(path, "w", encoding="utf-8", newline=""), True
        self._fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        self._writer = csv.writer(self._fh, lineterminator="\r\n")
        self._writer.writerow(header)
        self._fh.flush()

    def row(self, values) -> None:
        self._writer.writerow(["" if v is None else v for v in values])
        self._fh.flush()

    def close(self) -> None:
        if self._own:
            self._fh.close()


def _out_path(cfg: RunConfig) -> Path | None:
    p = cfg["output.path"]
    return Path(p) if p else None


def _fmt(x: float) -> str:
    return repr(float(x))


# --- commands -----------------------------------------------------------------


def cmd_solve(cfg: RunConfig) -> int:
    """One optimization with oracle comparison, written as JSON."""
    timing = bool(cfg["output.timing"])
    pt = solve_point(cfg)
    payload = provenance(cfg, "solve")
    payload.update({
        "g": pt["g"],
        "optimization": pt["run"].to_dict(timing),
        "restarts_used": pt["restarts_used"],
        "cost": pt["cost"],
        "infidelity": pt["infidelity"],
        "observables": pt["observables"],
        "oracle_observables": pt["oracle_observables"],
        "wall_time": pt["wall_time"] if timing else None,
    })
    write_json(_out_path(cfg), payload)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    """Solve on every value of the sweep grid, one CSV row per point."""
    grid = cfg["sweep.values"]
    if not grid:
        raise ConfigError(cfg.where("sweep.values") + "sweep.values: sweep grid must be a nonempty list")
    names = [o.upper() for o in cfg["observables"]]
    header = list(SWEEP_COLUMNS) + names
    if cfg["cost.mode"] == "shadow":
        header += [f"{n}_shadow" for n in names]
    timing = bool(cfg["output.timing"])
    sink = CsvSink(_out_path(cfg), header, provenance(cfg, "sweep"))
    theta = None
    try:
        for k, g in enumerate(grid):
            pt = solve_point(cfg, float(g), point=k, theta0=theta if cfg["sweep.warm_start"] else None)
            theta = pt["run"].theta_star
            row = [_fmt(g), _fmt(pt["cost"]), _fmt(pt["infidelity"]), pt["run"].n_iters,
                   _fmt(pt["wall_time"]) if timing else None]
            row += [_fmt(pt["observables"][n]["exact"]) for n in names]
            if cfg["cost.mode"] == "shadow":
                row += [_fmt(pt["observables"][n]["shadow"]) for n in names]
            sink.row(row)
    finally:
        sink.close()
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    """Exact steady state, its spectrum and its residual."""
    spec = build_spec(cfg)
    rho = exact_steady_state(spec)
    evals = np.linalg.eigvalsh(rho.mat)
    payload = provenance(cfg, "oracle")
    payload.update({
        "g": float(cfg["model.g"]),
        "rho_real": rho.mat.real.tolist(),
        "rho_imag": rho.mat.imag.tolist(),
        "eigenvalues": evals.tolist(),
        "residual": steady_state_residual(spec, rho.mat),
        "observables": {o.upper(): rho.expectation(pauli_matrix(o.upper())) for o in cfg["observables"]},
    })
    write_json(_out_path(cfg), payload)
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig) -> int:
    """Compare two gradient rules at random angles; exit 3 above tolerance."""
    from .optimizer import grad_full

    if cfg["cost.mode"] != "exact":
        raise ConfigError(cfg.where("cost.mode") + "cost.mode: gradcheck requires exact mode")
    gc = cfg["gradcheck"]
    spec = build_spec(cfg)
    layout = build_layout(cfg)
    cost = CostEvaluator(spec, layout, "exact")
    rng = np.random.default_rng(derived_seed(cfg["seed"], _GRADCHECK))
    worst, per_sample = 0.0, []
    for _ in range(gc["samples"]):
        theta = rng.uniform(-np.pi, np.pi, size=layout.n_params)
        a = grad_full(cost, theta, gc["method"], float(gc["fd_step"]))
        b = grad_full(cost, theta, gc["reference"], float(gc["fd_step"]))
        dev = float(np.max(np.abs(a - b)))
        per_sample.append(dev)
        worst = max(worst, dev)
    passed = worst <= float(gc["tolerance"])
    payload = provenance(cfg, "gradcheck")
    payload.update({"max_abs_deviation": worst, "deviations": per_sample, "passed": passed})
    write_json(_out_path(cfg), payload)
    return EXIT_OK if passed else EXIT_CHECK


def _bench_state(cfg: RunConfig, layout):
    from .ansatz import mixed_state_batch

    rng = np.random.default_rng(derived_seed(cfg["seed"], _BENCH_STATE))
    scale = float(cfg["shadowbench.theta_scale"])
    theta = rng.uniform(-scale, scale, size=layout.n_params)
    return mixed_state_batch(layout, theta)


def cmd_shadowbench(cfg: RunConfig) -> int:
    """Bias, variance and distillation benchmarks of the shadow estimators."""
    sb = cfg["shadowbench"]
    spec = build_spec(cfg)
    layout = build_layout(cfg)
    n = spec.n_qubits
    rho = _bench_state(cfg, layout)
    exact = float(cost_exact(spec, rho))
    locality = sb["locality"] if sb["locality"] is not None else 2 * n
    x = shadow_norm_proxy(spec, int(locality), sb["ensemble"])
    sink = CsvSink(_out_path(cfg), BENCH_COLUMNS, provenance(cfg, "shadowbench") | {"exact_cost": exact, "x": x})
    ok = True
    try:
        variances: dict[int, float] = {}
        for n_unitaries in sb["n_grid"]:
            seed = derived_seed(cfg["seed"], _BENCH_COST, int(n_unitaries))
            vals = np.array([
                estimate_cost(sample_shadow_set(rho, int(n_unitaries), sb["shots"], sb["ensemble"], seed, (r,)), spec)
                for r in range(sb["repeats"])
            ])
            mean, var = float(vals.mean()), float(vals.var(ddof=1))
            se = float(np.sqrt(var / len(vals)))
            bound = variance_bound(x, int(n_unitaries))
            passed = abs(mean - exact) <= 3 * se and var <= bound
            ratio = None
            prev = variances.get(int(n_unitaries) // 4)
            if int(n_unitaries) % 4 == 0 and prev is not None:
                ratio = var / prev
                passed = passed and 0.15 <= ratio <= 0.4
            variances[int(n_unitaries)] = var
            ok &= passed
            sink.row(["cost", n_unitaries, None, sb["repeats"], _fmt(mean), _fmt(exact), _fmt(mean - exact),
                      _fmt(se), _fmt(var), _fmt(bound), None if ratio is None else _fmt(ratio), passed])
        ok &= _distillation_bench(cfg, n, sink)
    finally:
        sink.close()
    return EXIT_OK if ok else EXIT_CHECK


def noisy_bench_state(n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """(1 - eps)|0..0><0..0| + eps|1..1><1..1| and the ideal |0..0><0..0|."""
    d = 2**n
    ideal = np.zeros((d, d), dtype=complex)
    ideal[0, 0] = 1.0
    err = np.zeros((d, d), dtype=complex)
    err[-1, -1] = 1.0
    return (1 - eps) * ideal + eps * err, ideal


def _distillation_bench(cfg: RunConfig, n: int, sink: CsvSink) -> bool:
    sb = cfg["shadowbench"]
    rho, ideal = noisy_bench_state(n, float(sb["distill_eps"]))
    op = pauli_matrix((sb["distill_observable"] or "Z" * n).upper())
    target = distilled_value_exact(ideal, op, op, 1)
    runs = sb["distill_runs"]
    estimates = {1: [], 2: []}
    for r in range(runs):
        seed = derived_seed(cfg["seed"], _BENCH_DISTILL, r)
        ss = sample_shadow_set(rho, sb["distill_unitaries"], sb["shots"], sb["ensemble"], seed)
        for m in (1, 2):
            estimates[m].append(distilled_estimate(ss, op, op, m, sb["distill_tuples"], seed=seed))
    ok = True
    biases = {}
    for m in (1, 2):
        vals = np.array(estimates[m])
        mean, se = float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(runs))
        dense = distilled_value_exact(rho, op, op, m)
        biases[m] = mean - target
        passed = abs(mean - dense) <= 3 * se + 1e-12
        ok &= passed
        sink.row(["distill", sb["distill_unitaries"], m, runs, _fmt(mean), _fmt(target), _fmt(mean - target),
                  _fmt(se), _fmt(float(vals.var(ddof=1))), None, None, passed])
    ratio = abs(biases[2]) / abs(biases[1]) if biases[1] != 0 else float("inf")
    passed = ratio < 0.3
    sink.row(["distill_ratio", sb["distill_unitaries"], None, runs, None, None, None, None, None, None,
              _fmt(ratio), passed])
    return ok and passed


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "gradcheck": cmd_gradcheck,
    "shadowbench": cmd_shadowbench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nessvqa", description="Variational search for nonequilibrium steady states.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", type=Path, help="output file (stdout if omitted)")
        p.add_argument("--mode", choices=("exact", "shadow"), help="cost evaluation mode")
        p.add_argument("--convention", choices=("standard", "paper"), help="anticommutator convention")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides",
                       help="override a config field, e.g. --set model.g=0.5")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, Any] = dict(parse_override(item) for item in args.overrides)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output.path"] = str(args.out)
    if args.mode is not None:
        overrides["cost.mode"] = args.mode
    if args.convention is not None:
        overrides["convention"] = args.convention
    return load_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (BadParams, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSteadySpace as exc:
        print(f"numerical failure: degenerate steady space of dimension {exc.dim}", file=sys.stderr)
        return EXIT_NUMERIC
    except NoSteadyState as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
