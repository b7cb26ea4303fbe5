"""Command line entry point: ``fstpricer --config job.yaml``.

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 no oracle.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import oracles
from .config import (JobConfig, build_constraint, build_model, build_payoff,
                     load_config)
from .engine import default_steps
from .estimator import FSTPricer
from .exceptions import (ConfigError, FSTError, NoOracle, NumericalBlowup,
                         TrustedRegionWarning)
from .grid import default_half_width
from .levy import GBM, VG, Kou, MarketTerms, Merton, risk_neutral_drift
from .payoffs import American, Barrier, Call, NoConstraint, Put
from .regime import RegimeModel

logger = logging.getLogger("fstpricer")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NO_ORACLE = 0, 2, 3, 4


def _terms(cfg: JobConfig) -> MarketTerms:
    m = cfg.market
    return MarketTerms(m.S0, m.r, m.q, m.T)


def resolve(cfg: JobConfig) -> JobConfig:
    """Copy of ``cfg`` with default L and M filled in."""
    model = build_model(cfg.model)
    constraint = build_constraint(cfg.instrument.constraint)
    terms = _terms(cfg)
    numerics = cfg.numerics.model_copy()
    if numerics.L is None:
        if isinstance(model, RegimeModel):
            corrected = list(model.corrected(terms.q, terms.T).models)
        else:
            corrected = risk_neutral_drift(model, terms)
        numerics.L = default_half_width(corrected, terms.T)
    if numerics.M is None:
        numerics.M = default_steps(constraint, terms.T)
    return cfg.model_copy(update={"numerics": numerics})


def _pricer(cfg: JobConfig, N=None, M=None) -> FSTPricer:
    terms = _terms(cfg)
    constraint = build_constraint(cfg.instrument.constraint)
    return FSTPricer(
        model=build_model(cfg.model), payoff=build_payoff(cfg.instrument.payoff),
        constraint=None if isinstance(constraint, NoConstraint) else constraint,
        spot=terms.S0, r=terms.r, q=terms.q, maturity=terms.T,
        n_points=N or cfg.numerics.N, half_width=cfg.numerics.L,
        n_steps=M or cfg.numerics.M,
        continuity_correction=cfg.numerics.continuity_correction,
    )


def _as_float(price):
    return [float(p) for p in price] if hasattr(price, "__len__") else float(price)


def run_price(cfg: JobConfig) -> dict:
    cfg = resolve(cfg)
    pricer = _pricer(cfg).fit()
    grid = pricer.grid_
    lo, hi = grid.trusted_region()
    report = {
        "mode": "price",
        "price": _as_float(pricer.price_),
        "trusted_region": [lo, hi],
        "grid": {"N": grid.N, "L": grid.L, "dx": grid.dx},
        "steps": {"M": pricer.n_steps_, "dt": cfg.market.T / pricer.n_steps_},
        "config": cfg.model_dump(mode="json"),
    }
    if isinstance(pricer.constraint, Barrier):
        report["effective_barrier"] = pricer.effective_barrier_
        report["continuity_correction"] = cfg.numerics.continuity_correction
    if cfg.output.surface_csv and cfg.output.dir:
        _write_surface(pricer, Path(cfg.output.dir) / "surface.csv")
    return report


def _write_surface(pricer, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    surface = pricer.surface_
    if hasattr(surface, "to_csv"):
        surface.to_csv(path)
        return
    from .grid import ValueSurface
    for k, values in enumerate(surface.values):
        ValueSurface(pricer.grid_, values).to_csv(path.with_name(f"surface_regime{k}.csv"))


def _threads() -> int | None:
    n = int(os.environ.get("FST_THREADS", "0") or 0)
    return None if n <= 0 else n


def _oracle_price(cfg: JobConfig):
    """Deterministic reference price for convergence studies, or None."""
    model = build_model(cfg.model)
    payoff = build_payoff(cfg.instrument.payoff)
    constraint = build_constraint(cfg.instrument.constraint)
    terms = _terms(cfg)
    kind = "call" if isinstance(payoff, Call) else "put" if isinstance(payoff, Put) else None
    if kind is None or isinstance(model, RegimeModel):
        return None
    if isinstance(constraint, NoConstraint):
        if isinstance(model, GBM):
            return oracles.bs_closed_form(kind, terms, model.sigma, payoff.K)
        if isinstance(model, Merton):
            return oracles.merton_series(kind, terms, model.sigma, model.lam, model.muJ,
                                         model.sigmaJ, payoff.K)
    return None


def run_convergence(cfg: JobConfig, levels=None) -> list[dict]:
    """Price at each (N, M) level and estimate the observed order per doubling."""
    cfg = resolve(cfg)
    levels = [tuple(lv) for lv in (levels or cfg.numerics.levels or [])]
    if len(levels) < 3:
        raise ConfigError("field numerics.levels: convergence needs at least 3 levels")

    def price(level):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TrustedRegionWarning)
            return _as_float(_pricer(cfg, *level).fit().price_)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        prices = list(pool.map(price, levels))

    ref_spec = cfg.numerics.reference
    if ref_spec == "oracle":
        reference = _oracle_price(cfg)
        if reference is None:
            ref_spec = "finest"
    if ref_spec == "finest":
        reference = prices[-1]
    elif isinstance(ref_spec, tuple):
        reference = price(ref_spec)

    rows = []
    prev = None
    for (N, M), p in zip(levels, prices):
        err = _abs_err(p, reference)
        row = {"N": N, "M": M, "price": p, "error": err, "observed_order": None, "degenerate": False}
        if prev is not None:
            if err > 0 and prev["error"] > 0 and (N, M) != (prev["N"], prev["M"]) and err != prev["error"]:
                row["observed_order"] = math.log2(prev["error"] / err)
            else:
                row["observed_order"] = 0.0
                row["degenerate"] = True
        rows.append(row)
        prev = row
    return rows


def _abs_err(p, ref):
    if isinstance(p, list):
        return max(abs(a - b) for a, b in zip(p, ref))
    return abs(p - ref)


def run_verify(cfg: JobConfig) -> list[dict]:
    """Engine price next to every applicable oracle, or raise NoOracle."""
    cfg = resolve(cfg)
    model = build_model(cfg.model)
    payoff = build_payoff(cfg.instrument.payoff)
    constraint = build_constraint(cfg.instrument.constraint)
    terms = _terms(cfg)
    tol = cfg.verify.tolerance
    n_paths, seed = cfg.verify.n_paths, cfg.seed
    kind = "call" if isinstance(payoff, Call) else "put" if isinstance(payoff, Put) else None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrustedRegionWarning)
        pricer = _pricer(cfg).fit()
    engine = _as_float(pricer.price_)
    refs = []  # (oracle name, oracle price, standard error, engine price)

    if isinstance(model, RegimeModel):
        if not isinstance(constraint, NoConstraint) or not all(isinstance(m, (GBM, Merton, Kou, VG)) for m in model.models):
            raise NoOracle("regime verification covers European claims on GBM/Merton/Kou/VG regimes")
        for k in range(model.K):
            p, se = oracles.mc_regime(model.models, model.rates, model.generator, payoff,
                                      terms, k, n_paths, seed)
            refs.append((f"mc_regime[start={k}]", p, se, engine[k]))
    elif isinstance(constraint, NoConstraint):
        if isinstance(model, GBM) and kind:
            refs.append(("bs_closed_form", oracles.bs_closed_form(kind, terms, model.sigma, payoff.K), 0.0, engine))
        if isinstance(model, Merton) and kind:
            refs.append(("merton_series", oracles.merton_series(kind, terms, model.sigma, model.lam,
                                                                model.muJ, model.sigmaJ, payoff.K), 0.0, engine))
        if isinstance(model, (GBM, Merton, Kou, VG)):
            p, se = oracles.mc_levy(risk_neutral_drift(model, terms), payoff, terms, n_paths, seed)
            refs.append(("mc_levy", p, se, engine))
    elif isinstance(constraint, American):
        if not (isinstance(model, GBM) and kind):
            raise NoOracle("American verification needs a GBM call or put")
        refs.append(("binomial_american", oracles.binomial_american(
            kind, terms, model.sigma, payoff.K, cfg.verify.tree_steps), 0.0, engine))
    elif isinstance(constraint, Barrier):
        if not isinstance(model, (GBM, Merton, Kou, VG)):
            raise NoOracle(f"no barrier oracle for {type(model).__name__}")
        if (cfg.numerics.continuity_correction and isinstance(model, GBM) and isinstance(payoff, Call)
                and constraint.kind == "down-and-out" and constraint.H < terms.S0 and constraint.rebate == 0):
            refs.append(("barrier_closed_form", oracles.barrier_closed_form(
                terms, model.sigma, payoff.K, constraint.H), 0.0, engine))
        elif not cfg.numerics.continuity_correction:
            M = pricer.n_steps_
            dates = [terms.T * i / M for i in range(1, M + 1)]
            level = pricer.effective_barrier_ if pricer.effective_barrier_ is not None else constraint.H
            p, se = oracles.mc_levy(risk_neutral_drift(model, terms), payoff, terms, n_paths, seed,
                                    dates, Barrier(constraint.kind, level, constraint.rebate))
            refs.append(("mc_levy[discrete]", p, se, engine))
    if not refs:
        raise NoOracle(f"no oracle for {type(model).__name__} with {type(constraint).__name__}")

    rows = []
    for name, ref, se, eng in refs:
        diff = eng - ref
        rows.append({"oracle": name, "engine": eng, "oracle_price": ref, "std_error": se,
                     "abs_diff": abs(diff), "rel_diff": abs(diff) / abs(ref) if ref else math.inf,
                     "tolerance": tol + 3 * se, "pass": bool(abs(diff) <= tol + 3 * se)})
    return rows


def _table_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def run(cfg: JobConfig) -> dict:
    """Dispatch on ``cfg.mode`` and return the report body."""
    if cfg.mode == "price":
        return run_price(cfg)
    resolved = resolve(cfg)
    if cfg.mode == "convergence":
        rows = run_convergence(cfg)
    else:
        rows = run_verify(cfg)
    return {"mode": cfg.mode, "rows": rows, "config": resolved.model_dump(mode="json")}


def render(body: dict, wall_time: float) -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    header = f"# fstpricer {body['mode']} report generated={stamp} wall_time_s={wall_time:.3f}"
    return header + "\n" + json.dumps(body, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fstpricer", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="YAML job configuration")
    parser.add_argument("--mode", choices=["price", "convergence", "verify"],
                        help="override the config's mode")
    parser.add_argument("--output", help="directory for report and CSV files")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed (u64)")
    parser.add_argument("--quiet", action="store_true", help="suppress the stdout report")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        updates = {}
        if args.mode:
            updates["mode"] = args.mode
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            updates["seed"] = args.seed
        if args.output:
            updates["output"] = cfg.output.model_copy(update={"dir": args.output})
        cfg = cfg.model_copy(update=updates)
        if cfg.numerics.trusted_region == "error":
            warnings.simplefilter("error", TrustedRegionWarning)
        elif cfg.numerics.trusted_region == "ignore":
            warnings.simplefilter("ignore", TrustedRegionWarning)
        if cfg.mode == "convergence" and not cfg.numerics.levels:
            raise ConfigError("field numerics.levels: convergence mode needs levels")
        start = time.perf_counter()
        body = run(cfg)
        wall = time.perf_counter() - start
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowup as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NoOracle as exc:
        print(f"no oracle: {exc}", file=sys.stderr)
        return EXIT_NO_ORACLE
    except (FSTError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    text = render(body, wall)
    if not args.quiet:
        sys.stdout.write(text)
    if cfg.output.dir:
        out = Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(body, indent=2) + "\n")
        if "rows" in body:
            (out / f"{body['mode']}.csv").write_text(_table_csv(body["rows"]))
    if body["mode"] == "convergence" and not args.quiet:
        sys.stdout.write(_table_csv(body["rows"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
