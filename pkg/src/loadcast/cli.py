"""Command-line front end.

Subcommands: simulate, fit, transfer, predict, replicate, report. Exit
codes: 0 success, 2 validation/usage, 3 numerical failure (rank, SPD,
propriety), 4 I/O. Every command writes a manifest naming its outputs;
all artifacts except the manifest (which carries timestamps) are
byte-reproducible from the same seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .designs import ModelSpec, build_design, load_series, smooth_temperature, write_series
from .errors import NumericalError, ValidationError
from .forecast import predict, write_forecast
from .mcmc import MCMC_PRESETS, McmcConfig, fit, load_chain, save_chain
from .simulate import (
    default_scenario,
    load_table,
    run_replications,
    save_table,
    scenario_from_json,
    simulate_study,
)
from .transfer import load_summary, save_summary, summarize


def write_manifest(path, command, argv, seed, outputs) -> None:
    """Atomically write the run manifest next to the outputs."""
    payload = {
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "created_utc": dt.datetime.now(dt.timezone.utc).isoformat(),
        "version": __version__,
    }
    for out in outputs:
        if not Path(out).exists():
            raise ValidationError(f"manifest lists a missing output: {out}")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _mcmc_config(args) -> McmcConfig:
    cfg = MCMC_PRESETS[args.mcmc]
    overrides = {"seed": args.seed}
    if getattr(args, "iterations", None) is not None:
        overrides["iterations"] = args.iterations
    if getattr(args, "burn_in", None) is not None:
        overrides["burn_in"] = args.burn_in
        overrides["adapt_window"] = min(cfg.adapt_window, args.burn_in)
    return dataclasses.replace(cfg, **overrides)


def cmd_simulate(args, argv) -> int:
    if args.scenario is not None:
        scenario = scenario_from_json(args.scenario)
    else:
        scenario = default_scenario()
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    study = simulate_study(scenario, replicate=0)
    paths = {name: out / f"{name}.csv" for name in ("A", "B", "prediction")}
    write_series(paths["A"], study.records_a)
    write_series(paths["B"], study.records_b)
    write_series(paths["prediction"], study.records_pred)
    truth_path = out / "truth.json"
    truth = {
        "eta_A": {
            "alpha": [float(v) for v in study.truth_a.alpha],
            "beta": [float(v) for v in study.truth_a.beta],
            "gamma": study.truth_a.gamma,
            "u": study.truth_a.u,
        },
        "eta_B": {
            "alpha": [float(v) for v in study.truth_b.alpha],
            "beta": [float(v) for v in study.truth_b.beta],
            "gamma": study.truth_b.gamma,
            "u": study.truth_b.u,
        },
        "sigma": scenario.sigma,
        "seed": scenario.seed,
        "origin_a": study.design_a.origin.isoformat(),
        "origin_b": study.design_b.origin.isoformat(),
        "f_true_prediction": [float(v) for v in study.f_true_pred],
        "spec": {
            "d11": scenario.spec.d11,
            "d12": scenario.spec.d12,
            "d2": scenario.spec.d2,
            "u_bounds": list(scenario.spec.u_bounds),
            "cooling": scenario.spec.cooling,
        },
    }
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [*paths.values(), truth_path]
    write_manifest(out / "manifest.json", "simulate", argv, scenario.seed, outputs)
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return 0


def _spec_from_args(args, records) -> ModelSpec:
    d2 = max(r.day.daytype for r in records)
    d12 = max(r.day.offset_period for r in records)
    return ModelSpec(
        d11=args.d11,
        d12=d12,
        d2=d2,
        u_bounds=(args.u_lo, args.u_hi),
        cooling=args.cooling,
    )


def cmd_fit(args, argv) -> int:
    records = load_series(args.data)
    spec = _spec_from_args(args, records)
    summary = None
    if args.prior == "info":
        if args.summary is None:
            raise ValidationError("--prior info requires --summary")
        summary = load_summary(args.summary)
    elif args.summary is not None:
        raise ValidationError("--summary only applies to --prior info")
    cfg = _mcmc_config(args)
    design = build_design(records, spec)
    if args.smooth_temp is not None:
        smoothed = smooth_temperature(design.T, args.smooth_temp)
        design = dataclasses.replace(design, T=smoothed)
    chain = fit(
        design,
        cfg,
        "informative" if args.prior == "info" else "noninformative",
        summary=summary,
        mu_ridge=args.mu_ridge,
    )
    out = Path(args.out)
    save_chain(chain, out)
    sidecar = out.with_suffix(".json")
    if args.smooth_temp is not None:
        with open(sidecar, encoding="utf-8") as fh:
            meta = json.load(fh)
        meta["smooth_lambda"] = args.smooth_temp
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    write_manifest(out.parent / f"{out.stem}.manifest.json", "fit", argv, cfg.seed, [out, sidecar])
    print(f"kept {chain.n_kept} draws, u acceptance rate {chain.acceptance_rate_u:.3f}")
    return 0


def cmd_transfer(args, argv) -> int:
    chain = load_chain(args.chain)
    summary = summarize(chain, min_draws=args.min_draws)
    out = Path(args.out)
    save_summary(summary, out)
    write_manifest(out.parent / f"{out.stem}.manifest.json", "transfer", argv, chain.config.seed, [out])
    print(f"wrote {out} (d={summary.d}, draws={summary.meta['draws']})")
    return 0


def cmd_predict(args, argv) -> int:
    chain = load_chain(args.chain)
    records = load_series(args.future, allow_missing_load=True)
    design = build_design(records, chain.spec, origin=chain.origin)
    sidecar = Path(args.chain).with_suffix(".json")
    with open(sidecar, encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("smooth_lambda") is not None:
        design = dataclasses.replace(design, T=smooth_temperature(design.T, meta["smooth_lambda"]))
    rng = np.random.default_rng(args.seed) if args.draws else None
    result = predict(chain, design, predictive_draws=args.draws, rng=rng)
    out = Path(args.out)
    write_forecast(result, out)
    write_manifest(out.parent / f"{out.stem}.manifest.json", "predict", argv, args.seed, [out])
    print(f"wrote {out} ({design.n} days)")
    return 0


def cmd_replicate(args, argv) -> int:
    scenario = scenario_from_json(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    table = run_replications(scenario, jobs=args.jobs)
    out = Path(args.out)
    save_table(table, out)
    write_manifest(out.parent / f"{out.stem}.manifest.json", "replicate", argv, scenario.seed, [out])
    failed = sum(1 for r in table.rows if not r.ok)
    print(f"wrote {out} ({len(table.rows)} replicates, {failed} failed)")
    return 0


def cmd_report(args, argv) -> int:
    table = load_table(args.table)
    agg = table.aggregate()
    lines = [
        f"scenario: {agg['scenario']}",
        f"replicates: {agg['replicates']} ({agg['failed']} failed)",
        f"mean ratio (informative / non-informative): {agg['mean_ratio']:.4f}",
        f"ratio quantiles 5%/80%/90%/95%: {agg['ratio_q05']:.4f} / {agg['ratio_q80']:.4f} / "
        f"{agg['ratio_q90']:.4f} / {agg['ratio_q95']:.4f}",
        f"median posterior mean of r: {agg['median_r_post']:.4f}",
        f"median posterior mean of q: {agg['median_q_post']:.4f}",
        f"mean 90% credible coverage of eta_B: {agg['mean_cover90']:.4f}",
    ]
    print("\n".join(lines))
    if args.out is not None:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(agg, fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_manifest(out.parent / f"{out.stem}.manifest.json", "report", argv, None, [out])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loadcast", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate A/B/prediction datasets from a scenario")
    p.add_argument("scenario", nargs="?", help="scenario JSON (default: the ideal scenario)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run one MCMC fit on a dataset CSV")
    p.add_argument("data", help="input CSV")
    p.add_argument("--prior", choices=("noninfo", "info"), default="noninfo")
    p.add_argument("--summary", default=None, help="summary JSON (required for --prior info)")
    p.add_argument("--mcmc", choices=sorted(MCMC_PRESETS), default="desk")
    p.add_argument("--iterations", type=int, default=None, help="override the preset length")
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="chain CSV path")
    p.add_argument("--d11", type=int, default=4, help="Fourier order")
    p.add_argument("--u-lo", dest="u_lo", type=float, default=8.0)
    p.add_argument("--u-hi", dest="u_hi", type=float, default=19.0)
    p.add_argument("--cooling", type=float, default=None, help="fixed cooling threshold (degC)")
    p.add_argument("--smooth-temp", dest="smooth_temp", type=float, default=None,
                   help="exponentially smooth temperatures with this coefficient")
    p.add_argument("--mu-ridge", dest="mu_ridge", type=float, default=None,
                   help="replace near-zero transferred means by sign * ridge")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transfer", help="summarize a chain into a prior summary JSON")
    p.add_argument("chain", help="chain CSV (sidecar JSON expected next to it)")
    p.add_argument("--out", required=True)
    p.add_argument("--min-draws", dest="min_draws", type=int, default=1000)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("predict", help="point forecast over a future dataset CSV")
    p.add_argument("chain", help="chain CSV")
    p.add_argument("future", help="future CSV (loads may be empty)")
    p.add_argument("--out", required=True)
    p.add_argument("--draws", action="store_true", help="also compute predictive bands")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("replicate", help="run the replication study of a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="replication table CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("report", help="aggregate a replication table")
    p.add_argument("table")
    p.add_argument("--out", default=None, help="optional aggregate JSON")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
