"""Command-line harness: parse a config, run experiments, persist reports.

Every run writes into a directory named by a prefix of the config hash, so
identical configs land in identical places and the artifacts are
reproducible byte-for-byte (modulo the manifest timestamp) regardless of
the worker count.

Exit status: 0 when every verdict is bound-respected, 2 for configuration
or usage errors (the violated constraint is printed), 3 when a bound is
violated or a run is inconclusive.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, config as cfgmod, experiments as ex, ldp
from .noise import AdditiveNoise
from .reports import Comparison, ExperimentReport, write_summary_csv
from .solver import integrate, save_coeffs_binary, trajectory_to_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIOLATED = 3

SUBCOMMANDS = ("simulate", "energy", "uniqueness", "inviscid", "exit-tail",
               "moments", "stability", "invariant", "ldp-rate", "ldp-scaling",
               "all")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhlab",
        description="stochastic Burgers-Huxley simulation and estimate lab")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("print-defaults", help="dump the default config as TOML")
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", default=None, help="TOML config file")
        s.add_argument("--out", default="runs", help="output root directory")
        s.add_argument("--seed", type=int, default=None,
                       help="override run.base_seed")
        s.add_argument("--workers", type=int, default=None,
                       help="override worker count")
        s.add_argument("--format", choices=("json", "csv"), default="json",
                       help="per-report serialization (summary CSV is always written)")
    return parser


def _resolve_workers(args, cfg) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    if cfg["run"]["workers"]:
        return max(1, int(cfg["run"]["workers"]))
    env = os.environ.get("BHLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise cfgmod.ConfigError(f"BHLAB_WORKERS is not an integer: {env!r}")
    return 1


def _manifest(cfg: dict, command: str, seed: int, workers: int) -> dict:
    return {
        "command": command,
        "config_hash": cfgmod.config_hash(cfg),
        "base_seed": seed,
        "workers": workers,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "burgershuxley": __version__,
        },
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _run_experiments(command: str, cfg: dict, seed: int, workers: int) -> list[ExperimentReport]:
    p = cfgmod.make_params(cfg)
    cov = cfgmod.make_covariance(cfg)
    coef = cfgmod.make_noise(cfg)
    sol = cfg["solver"]
    reports: list[ExperimentReport] = []

    def u0(n_modes=None, amplitude=None):
        return cfgmod.make_initial(cfg, n_modes=n_modes, amplitude=amplitude)

    if command in ("energy", "all"):
        b = cfg["energy"]
        reports.append(ex.verify_energy_bounds(
            p, coef, cov, u0(), t_end=b["t_end"], n_paths=b["n_paths"],
            moment_order=b["moment_order"], dt=sol["dt"],
            n_modes=sol["n_modes"], base_seed=seed, workers=workers))
    if command in ("uniqueness", "all"):
        b = cfg["uniqueness"]
        reports.append(ex.verify_uniqueness_contraction(
            p, coef, cov, u0(), u0(amplitude=b["v0_amplitude"]),
            t_end=b["t_end"], n_paths=b["n_paths"], dt=sol["dt"],
            n_modes=sol["n_modes"], base_seed=seed,
            n_checkpoints=b["n_checkpoints"], workers=workers))
    if command in ("inviscid", "all"):
        b = cfg["inviscid"]
        for which in b["sweeps"]:
            reports.append(ex.inviscid_limit_sweep(
                which, b["values"], p, coef, cov, u0(), t_end=b["t_end"],
                n_paths=b["n_paths"], dt=sol["dt"], n_modes=sol["n_modes"],
                base_seed=seed, workers=workers))
    if command in ("exit-tail", "all"):
        b = cfg["exit_tail"]
        reports.append(ex.exit_time_tail(
            b["r_values"], p, _additive(coef, "exit-tail"), cov,
            u0(n_modes=b["n_modes"], amplitude=b["initial_amplitude"]),
            t_end=b["t_end"], n_paths=b["n_paths"], dt=sol["dt"],
            n_modes=b["n_modes"], base_seed=seed, workers=workers))
    if command in ("moments", "all"):
        b = cfg["moments"]
        eff = ex._effective_cov(_additive(coef, "moments"), cov)
        eps = b["epsilon"] or ex.moment_epsilon_cap(p, eff)
        reports.append(ex.exponential_moment_check(
            eps, p, _additive(coef, "moments"), cov, u0(), t_end=b["t_end"],
            n_paths=b["n_paths"], dt=sol["dt"], n_modes=sol["n_modes"],
            base_seed=seed, n_checkpoints=b["n_checkpoints"], workers=workers))
    if command in ("stability", "all"):
        b = cfg["stability"]
        reports.append(ex.stability_decay(
            p, _additive(coef, "stability"), cov, u0(),
            u0(amplitude=b["v0_amplitude"]), t_end=b["t_end"],
            n_paths=b["n_paths"], dt=sol["dt"], n_modes=sol["n_modes"],
            base_seed=seed, n_checkpoints=b["n_checkpoints"], workers=workers))
    if command in ("invariant", "all"):
        b = cfg["invariant"]
        if p.alpha == 0.0 and p.beta == 0.0:
            reports.append(ex.ou_variance_check(
                p.nu, _additive(coef, "invariant"), cov,
                n_modes=sol["n_modes"], base_seed=seed, workers=workers))
        else:
            reports.append(ex.invariant_measure_suite(
                p, _additive(coef, "invariant"), cov,
                burn_in=b["burn_in"] or None, sample_stride=b["sample_stride"],
                n_samples=b["n_samples"], n_paths=b["n_paths"], dt=sol["dt"],
                n_modes=sol["n_modes"], base_seed=seed,
                distant_norm=b["distant_norm"], workers=workers))

    j_hat = None
    if command in ("ldp-rate", "all"):
        b = cfg["ldp_rate"]
        out = ldp.minimize_rate_to_exit(
            b["r_exit"], b["t_end"], u0(n_modes=b["n_modes"]), p, cov,
            budget=b["budget"], n_intervals=b["n_intervals"],
            n_support_modes=b["n_support_modes"], dt=b["dt"],
            n_modes=b["n_modes"])
        j_hat = out["J_hat"]
        comps = [Comparison("exit-certificate-verified",
                            0.0 if out["certificate"] else 1.0, 0.0)]
        fitted = {"J_hat": j_hat, "evaluations": out["evaluations"]}
        if p.alpha == 0.0 and p.beta == 0.0 and cov.mus[0] > 0:
            j_star = ldp.min_energy_to_reach(b["r_exit"], p.nu, cov.mus[0],
                                             b["t_end"])
            comps.append(Comparison("within-5pct-of-gramian", float(j_hat),
                                    1.05 * j_star))
            fitted["gramian_minimum"] = j_star
        rep = ExperimentReport(
            name="exit-rate-minimizer", theorem_ref="rate-function-upper-bound",
            parameter_snapshot={"r_exit": b["r_exit"], "t_end": b["t_end"],
                                "budget": b["budget"], "nu": p.nu,
                                "alpha": p.alpha, "beta": p.beta},
            sample_count=out["evaluations"], comparisons=comps, fitted=fitted,
            notes=["J_hat is an upper bound on the exit cost: the search is "
                   "restricted to piecewise-constant controls"],
        )
        if not out["feasible"]:
            rep.inconclusive_reason = "no feasible control found within budget"
        else:
            rep.extra_empirical["control_json"] = out["best"].control.to_json()
        reports.append(rep)
    if command in ("ldp-scaling", "all"):
        b = cfg["ldp_scaling"]
        jh = b["j_hat"] or j_hat
        reports.append(ldp.small_noise_scaling(
            b["eps_values"], b["r_exit"], u0(n_modes=b["n_modes"]), p, cov,
            t_end=b["t_end"], n_paths=b["n_paths"], dt=b["dt"],
            n_modes=b["n_modes"], base_seed=seed, j_hat=jh, workers=workers))
    return reports


def _additive(coef, command: str) -> AdditiveNoise:
    if not isinstance(coef, AdditiveNoise):
        raise cfgmod.ConfigError(
            f"'{command}' requires noise.kind = 'additive'")
    return coef


def _simulate(cfg: dict, outdir: Path, seed: int) -> None:
    p = cfgmod.make_params(cfg)
    cov = cfgmod.make_covariance(cfg)
    coef = cfgmod.make_noise(cfg)
    traj = integrate(cfgmod.make_initial(cfg), cfgmod.make_solver_config(cfg),
                     p, coef, cov, (seed, 0))
    trajectory_to_csv(traj, outdir / "trajectory.csv",
                      include_coeffs=cfg["simulate"]["include_coeffs"])
    if cfg["simulate"]["binary"]:
        save_coeffs_binary(traj, outdir / "trajectory.bin")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "print-defaults":
        print(cfgmod.default_toml())
        return EXIT_OK
    try:
        cfg = cfgmod.load_config(args.config)
        seed = args.seed if args.seed is not None else cfg["run"]["base_seed"]
        workers = _resolve_workers(args, cfg)
        outdir = Path(args.out) / cfgmod.config_hash(cfg)[:12]
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "manifest.json", "w") as fh:
            json.dump(_manifest(cfg, args.command, seed, workers), fh, indent=2)
        if args.command == "simulate":
            _simulate(cfg, outdir, seed)
            print(f"wrote {outdir}/trajectory.csv")
            return EXIT_OK
        reports = _run_experiments(args.command, cfg, seed, workers)
    except (cfgmod.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.format == "json":
        for rep in reports:
            with open(outdir / f"{rep.name}.json", "w") as fh:
                fh.write(rep.to_json())
    write_summary_csv(reports, outdir / "summary.csv")
    for rep in reports:
        print(f"{rep.name}: {rep.verdict}")
    if all(r.verdict == "bound-respected" for r in reports):
        return EXIT_OK
    return EXIT_VIOLATED


if __name__ == "__main__":
    sys.exit(main())