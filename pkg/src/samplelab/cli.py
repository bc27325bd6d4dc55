"""Command line interface.

    sample run          --config study.cfg [--out DIR] [--workers N] [--seed S]
    sample convergence  --config study.cfg ...
    sample gamma-sweep  --config sweep.cfg ...
    sample reference    --config study.cfg ...
    sample theory-check --config study.cfg ...

Exit codes: 0 success, 2 config error, 3 all cells diverged, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (ConfigError, ExperimentSpec, build_reference,
                      convergence_study, default_workers, emit_csv,
                      emit_gamma_sweep_csv, gamma_sweep, parse_config,
                      run_study)
from .models import make_model
from .theory import predicted_bin_log_deviation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_DIVERGED = 3
EXIT_IO = 4


def _load_spec(args) -> ExperimentSpec:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise IOError(f"cannot read config {args.config}: {exc}") from exc
    spec = parse_config(text)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _cell_tag(r) -> str:
    return f"{r.method}_dt{r.dt:g}_g{r.gamma:g}".replace("/", "-")


def _cmd_run(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args)
    results = run_study(spec, workers=args.workers, cache_dir=out / "cache")
    emit_csv(results, out / "results.csv")
    for r in results:
        if r.histogram is not None:
            meta = {"model": r.model, "method": r.method, "dt": r.dt,
                    "gamma": r.gamma, "kBT": r.kBT, "t_total": r.t_total,
                    "replicas": r.replicas, "seed": r.seed,
                    "burn_in_fraction": spec.burn_in_fraction,
                    "stride": spec.stride, "diverged": r.diverged}
            path = out / f"hist_{_cell_tag(r)}.txt"
            path.write_text(r.histogram.to_text(meta))
    print(f"wrote {out / 'results.csv'} ({len(results)} cells)")
    return EXIT_ALL_DIVERGED if all(r.diverged for r in results) else EXIT_OK


def _cmd_convergence(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args)
    results, slopes = convergence_study(spec, workers=args.workers,
                                        cache_dir=out / "cache")
    emit_csv(results, out / "results.csv")
    lines = ["model,method,gamma,slope"]
    for (method, gamma), slope in sorted(slopes.items()):
        lines.append(f"{spec.model},{method},{gamma!r},{slope!r}")
    (out / "slopes.csv").write_text("\n".join(lines) + "\n")
    for (method, gamma), slope in sorted(slopes.items()):
        print(f"{method} (gamma={gamma:g}): slope {slope:.3f}")
    return EXIT_ALL_DIVERGED if all(r.diverged for r in results) else EXIT_OK


def _cmd_gamma_sweep(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args)
    rows = gamma_sweep(spec, workers=args.workers, cache_dir=out / "cache")
    emit_gamma_sweep_csv(rows, spec, out / "gamma_sweep.csv")
    print(f"wrote {out / 'gamma_sweep.csv'} ({len(rows)} checkpoints)")
    computed = [r for r in rows if r[4] is not None]
    return EXIT_OK if computed else EXIT_ALL_DIVERGED


def _cmd_reference(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args)
    ref = build_reference(spec, cache_dir=out / "cache")
    path = out / f"reference_{spec.model}.txt"
    path.write_text(ref.to_text())
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_theory_check(args) -> int:
    spec = _load_spec(args)
    if spec.model != "oscillator":
        raise ConfigError("theory-check supports the 1D oscillator only")
    out = _out_dir(args)
    model = make_model(spec.model)
    beta = 1.0 / spec.kBT
    reference = build_reference(spec)
    results = run_study(spec, reference=reference, workers=args.workers)
    edges = spec.bin_spec().histogram().edges
    centers = (edges[:-1] + edges[1:]) / 2.0
    lines = ["method,dt,gamma,bin_center,predicted,empirical"]
    for r in results:
        if r.diverged or r.method not in ("baoab", "aboba"):
            continue
        predicted = predicted_bin_log_deviation(r.method, model, beta, r.dt,
                                                edges)
        freqs = r.histogram.frequencies()
        with np.errstate(divide="ignore"):
            empirical = np.log(freqs / reference.probabilities)
        for x, pred, emp in zip(centers, predicted, empirical):
            lines.append(f"{r.method},{r.dt!r},{r.gamma!r},{x!r},{pred!r},{emp!r}")
    (out / "theory_check.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'theory_check.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sample",
        description="Stochastic-dynamics sampling studies")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "run": _cmd_run,
        "convergence": _cmd_convergence,
        "gamma-sweep": _cmd_gamma_sweep,
        "reference": _cmd_reference,
        "theory-check": _cmd_theory_check,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--workers", type=int, default=default_workers())
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        code = commands[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
