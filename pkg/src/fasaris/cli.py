"""Command line front end: parameter sweeps to CSV and rate optimisation to JSON.

    fasaris run --config sweep.json --out table.csv [--seed S] [--trials T] [--threads K]
    fasaris optimize --config system.json --out result.json

Exit status: 0 on success, 2 for a malformed config, 3 when an engine fails.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from .channel import config_from_dict, config_to_dict, derive_params
from .corrmodel import CorrelationSpec, bdma_partition
from .ctrl import nb_transform
from .mcsim import SimMode, mc_best_snr, outage_from_snr
from .outage import IaeSurrogate, QuadratureSpec, outage_bdma, outage_iae
from .ratemax import OptimizerSettings, optimize_rate

__all__ = ["main", "run_sweep", "optimize", "ConfigError", "EngineError", "HEADER"]

HEADER = ["sweep_var", "sweep_value", "mode", "engine", "outage", "throughput",
          "std_err", "trials", "seed"]
SWEEP_VARS = ("P", "N", "R", "M", "W", "Nb")
ENGINES = ("mc", "bdma", "iae", "ratemax")


class ConfigError(ValueError):
    pass


class EngineError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class RunPlan:
    doc: dict
    rate: float
    n_bs: int
    variable: str | None
    values: tuple
    engines: tuple
    modes: tuple
    trials: int
    seed: int
    quad: QuadratureSpec
    settings: OptimizerSettings


def _load_doc(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _plan(doc: dict, need_sweep: bool, seed=None, trials=None) -> RunPlan:
    try:
        config_from_dict(doc)
        quad = QuadratureSpec(**doc.get("quadrature", {}))
        settings = OptimizerSettings(**doc.get("optimizer", {}))
        rate = float(doc.get("rate", 2.0))
        n_bs = int(doc.get("n_bs_antennas", 1))
        trials = int(trials if trials is not None else doc.get("trials", 10_000))
        seed = int(seed if seed is not None else doc.get("seed", 0))
        modes = tuple(SimMode(m) for m in doc.get("modes", [m.value for m in SimMode]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if trials < 1 or n_bs < 1 or rate <= 0 or not 0 <= seed < 2**64:
        raise ConfigError("trials and n_bs_antennas must be >= 1, rate > 0, seed a u64")
    variable, values, engines = None, (), ()
    if need_sweep:
        sweep = doc.get("sweep")
        if not isinstance(sweep, dict) or sweep.get("variable") not in SWEEP_VARS:
            raise ConfigError(f"sweep.variable must be one of {SWEEP_VARS}")
        values = sweep.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values must be a non-empty list")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            raise ConfigError("sweep.values must be numbers")
        variable, values = sweep["variable"], tuple(values)
        engines = tuple(doc.get("engines", ENGINES))
        if not engines or any(e not in ENGINES for e in engines):
            raise ConfigError(f"engines must be a non-empty subset of {ENGINES}")
    return RunPlan(doc, rate, n_bs, variable, values, engines, modes, trials, seed, quad, settings)


def _point_doc(plan: RunPlan, value):
    """Config document and (rate, n_bs) for one sweep point."""
    doc = dict(plan.doc)
    rate, n_bs = plan.rate, plan.n_bs
    var = plan.variable
    if var == "P":
        tied = doc.get("aris_budget") is None or doc.get("aris_budget") == doc.get("tx_power")
        doc["tx_power"] = value
        if tied:
            doc["aris_budget"] = value
    elif var == "N":
        doc["n_ports"] = value
    elif var == "M":
        doc["m_elements"] = value
    elif var == "W":
        doc["aperture"] = value
    elif var == "R":
        rate = float(value)
    elif var == "Nb":
        n_bs = int(value)
    return doc, rate, n_bs


def _fmt(v):
    return "" if v is None else repr(float(v))


def _sweep_point(plan: RunPlan, value, workers: int):
    doc, rate, n_bs = _point_doc(plan, value)
    try:
        cfg = config_from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sweep value {value!r}: {exc}") from exc
    if rate <= 0 or n_bs < 1:
        raise ConfigError(f"sweep value {value!r} is out of range")
    stage = "channel.derive_params"
    rows = []
    try:
        params = nb_transform(derive_params(cfg), cfg, n_bs)
        stage = "corrmodel.bdma_partition"
        part = bdma_partition(CorrelationSpec(cfg.n_ports, cfg.aperture, cfg.mu_sq))
        base = [plan.variable, repr(value)]
        for engine in plan.engines:
            if engine == "mc":
                stage = "mcsim.mc_outage"
                best = mc_best_snr(cfg, params, part, plan.modes, plan.trials, plan.seed, workers)
                for mode, snr in zip(plan.modes, best):
                    est = outage_from_snr(snr, rate)
                    rows.append(base + [mode.value, "mc", _fmt(est.value),
                                        _fmt(rate * (1.0 - est.value)), _fmt(est.std_err),
                                        str(est.trials), str(plan.seed)])
            elif engine in ("bdma", "iae"):
                stage = f"outage.outage_{engine}"
                fn = outage_bdma if engine == "bdma" else outage_iae
                p = fn(cfg, params, part, rate, plan.quad)
                rows.append(base + ["FAS_ARIS", engine, _fmt(p), _fmt(rate * (1.0 - p)), "", "", ""])
            else:
                stage = "ratemax.optimize_rate"
                res = optimize_rate(cfg, params, part, plan.settings, plan.quad)
                if res.r_final > 0:
                    sur = IaeSurrogate(cfg, params, part.n_blocks, plan.quad,
                                       nodes=2 * plan.quad.nodes_per_dim)
                    p = sur.outage(2.0**res.r_final - 1.0)
                else:
                    p = 1.0
                rows.append(base + ["FAS_ARIS", "ratemax", _fmt(p), _fmt(res.r_final * (1.0 - p)),
                                    "", "", ""])
    except ConfigError:
        raise
    except Exception as exc:
        raise EngineError(f"engine failure in {stage} at {plan.variable}={value!r}: {exc}") from exc
    return rows


def run_sweep(config_path, out_path, seed=None, trials=None, threads: int = 1) -> int:
    plan = _plan(_load_doc(config_path), need_sweep=True, seed=seed, trials=trials)
    threads = max(1, int(threads))
    # sweep points run on the pool; Monte Carlo inside a point stays serial
    # then, so rows are identical for any thread count
    with ThreadPoolExecutor(max_workers=threads) as pool:
        chunks = list(pool.map(lambda v: _sweep_point(plan, v, 1), plan.values))
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for rows in chunks:
            writer.writerows(rows)
    return 0


def optimize(config_path, out_path) -> int:
    plan = _plan(_load_doc(config_path), need_sweep=False)
    cfg = config_from_dict(plan.doc)
    try:
        params = nb_transform(derive_params(cfg), cfg, plan.n_bs)
        part = bdma_partition(CorrelationSpec(cfg.n_ports, cfg.aperture, cfg.mu_sq))
        res = optimize_rate(cfg, params, part, plan.settings, plan.quad)
    except Exception as exc:
        raise EngineError(f"engine failure in ratemax.optimize_rate: {exc}") from exc
    out = {
        "config": config_to_dict(cfg),
        "n_bs_antennas": plan.n_bs,
        "block_sizes": list(part.block_sizes),
        "optimizer": dataclasses.asdict(plan.settings),
        "result": res.to_dict(),
    }
    with open(out_path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _parser():
    ap = argparse.ArgumentParser(prog="fasaris", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "optimize"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return run_sweep(args.config, args.out, args.seed, args.trials, args.threads)
        return optimize(args.config, args.out)
    except ConfigError as exc:
        print(f"fasaris: malformed config: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"fasaris: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
