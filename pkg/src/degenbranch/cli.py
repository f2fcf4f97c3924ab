"""Command-line surface.

Subcommands:

* ``constants``  evaluate the limit constant matching the index regime
* ``simulate``   run an experiment config and persist raw samples + summary
* ``verify``     simulate, then apply the acceptance gates (exit 1 on failure)
* ``selftest``   fast oracle/invariant suite (no files written)

Exit codes: 0 success, 1 gate/selftest failure, 2 invalid configuration.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import config_digest, config_to_dict, load_config
from .exceptions import ConfigError, DegenBranchError
from .harness import evaluate_gates, run_experiment
from .limit_constants import c1, c2, large_dim_covariance
from .reporting import (SAMPLES_NAME, SUMMARY_NAME, VARIANCES_CSV_NAME,
                        canonical_json, file_digest, finalize_manifest,
                        results_digest, start_manifest, write_samples_jsonl,
                        write_summary, write_variances_csv)
from .stable_motion import Regime, StableIndexVector
from .test_functions import GaussianTestFunction


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's master seed (u64)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: DEGENBRANCH_WORKERS "
                             "or hardware parallelism; never affects results)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--format", choices=("jsonl", "csv"), default="jsonl",
                        help="csv additionally writes the per-scale variance table")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="degenbranch",
        description="Degenerate branching particle systems: simulation and "
                    "limit-theorem verification.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_const = sub.add_parser("constants", help="evaluate limit constants")
    p_const.add_argument("--alphas", required=True,
                         help="comma-separated stability indices, e.g. '0.5' or '1,1'")
    p_const.add_argument("--gamma", type=float, default=1.0)
    p_const.add_argument("--theta", type=float, default=1.0)
    p_const.add_argument("--kappa", type=float, default=0.5)
    p_const.add_argument("--phi-centers", default=None,
                         help="test-function centers for the large-dimension "
                              "covariance (default zeros)")
    p_const.add_argument("--phi-widths", default=None,
                         help="test-function widths (default ones)")

    p_sim = sub.add_parser("simulate", help="run an experiment config")
    p_sim.add_argument("--config", required=True)
    _add_common(p_sim)

    p_ver = sub.add_parser("verify", help="run an experiment and apply gates")
    p_ver.add_argument("--config", required=True)
    _add_common(p_ver)

    sub.add_parser("selftest", help="fast oracle and invariant suite")
    return parser


def _parse_floats(text):
    return tuple(float(x) for x in text.split(","))


def cmd_constants(args) -> int:
    indices = StableIndexVector(_parse_floats(args.alphas))
    regime = indices.regime
    record = {
        "alphas": list(indices.alphas),
        "bar_alpha": indices.bar_alpha,
        "regime": regime.value,
        "gamma": args.gamma,
        "theta": args.theta,
        "kappa": args.kappa,
    }
    if regime is Regime.CRITICAL:
        res = c1(indices, args.gamma, args.theta, args.kappa)
        record.update(constant="c1", value=res.value, method=res.method,
                      est_abs_error=res.est_abs_error, details=res.details)
    elif regime is Regime.INTERMEDIATE:
        res = c2(indices, args.gamma, args.theta)
        record.update(constant="c2", value=res.value, method=res.method,
                      est_abs_error=res.est_abs_error, details=res.details)
    elif regime is Regime.LARGE:
        centers = _parse_floats(args.phi_centers) if args.phi_centers else (0.0,) * indices.d
        widths = _parse_floats(args.phi_widths) if args.phi_widths else (1.0,) * indices.d
        phi = GaussianTestFunction(centers, widths)
        value = large_dim_covariance(phi, phi, indices, args.gamma, args.theta)
        record.update(constant="large_dim_cov", value=value, method="quadrature",
                      phi={"centers": list(centers), "widths": list(widths)})
    else:
        print(f"error: anisotropy index {indices.bar_alpha:.6g} <= 1 has no "
              "associated limit constant", file=sys.stderr)
        return 2
    print(canonical_json(record))
    return 0


def _run_and_persist(args, apply_gates: bool) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        config = replace(config, master_seed=args.seed)
    digest = config_digest(config)
    os.makedirs(args.out, exist_ok=True)
    echo = config_to_dict(config)
    manifest = start_manifest(echo, config.master_seed, args.out)
    report, samples = run_experiment(config, workers=args.workers,
                                     config_digest=digest)
    exit_code = 0
    if apply_gates:
        gates = evaluate_gates(report, config)
        report.gate_results = [
            {"name": g.name, "passed": g.passed, "detail": g.detail} for g in gates]
        for g in gates:
            print(f"GATE {g.name}: {'PASS' if g.passed else 'FAIL'} - {g.detail}")
        if not all(g.passed for g in gates):
            exit_code = 1

    samples_path = os.path.join(args.out, SAMPLES_NAME)
    summary_path = os.path.join(args.out, SUMMARY_NAME)
    write_samples_jsonl(samples, samples_path)
    write_summary(report, echo, summary_path)
    digests = {
        "samples": file_digest(samples_path),
        "summary_results": results_digest(report),
    }
    if args.format == "csv":
        csv_path = os.path.join(args.out, VARIANCES_CSV_NAME)
        write_variances_csv(report, csv_path)
        digests["variances_csv"] = file_digest(csv_path)
    finalize_manifest(manifest, args.out, digests)
    print(f"wrote {samples_path} ({len(samples)} samples); "
          f"summary results digest {digests['summary_results'][:16]}...")
    return exit_code


def cmd_selftest(_args) -> int:
    """Quick oracle suite: sampler CF, Fourier identities, expectation
    identity, and the closed-form constants."""
    import math

    from .branching import SimulationDomain, expected_population
    from .fluctuation import box_semigroup_mass
    from .forest import sweep_forest
    from .limit_constants import anisotropic_cubic_integral
    from .seeding import derive_stream
    from .stable_motion import (empirical_cf_deviation, sample_stable_increment,
                                semigroup_apply)
    from .test_functions import standard_gaussian

    checks = []

    def check(name, ok, detail=""):
        checks.append(ok)
        print(f"SELFTEST {name}: {'PASS' if ok else 'FAIL'} {detail}")

    rng = derive_stream(2024, 0, "selftest")
    n_draws = 20000
    bound = 5.0 / math.sqrt(n_draws)
    for alpha in (0.5, 1.0, 1.5, 2.0):
        draws = sample_stable_increment(alpha, 1.0, rng, size=n_draws)
        dev = empirical_cf_deviation(draws, alpha, 1.0, np.linspace(-3, 3, 31))
        check(f"sampler-cf alpha={alpha}", dev <= bound, f"dev={dev:.4f} bound={bound:.4f}")

    phi = standard_gaussian(1)
    iv = StableIndexVector((1.0,))
    from scipy.integrate import quad
    direct, _ = quad(lambda x: phi.value(np.array([x])) ** 2, -12, 12, epsabs=1e-12)
    freq, _ = quad(lambda z: abs(phi.fourier(np.array([z]))) ** 2, -40, 40,
                   epsabs=1e-12, limit=300)
    plancherel = abs(direct - freq / (2 * math.pi)) / direct
    check("plancherel", plancherel < 1e-8, f"rel={plancherel:.2e}")

    got = semigroup_apply(phi, 1.0, (0.0,), iv)
    oracle, _ = quad(lambda y: math.exp(-y * y / 2) / (math.pi * (1 + y * y)),
                     -60, 60, epsabs=1e-12, limit=300)
    check("semigroup-cauchy", abs(got - oracle) < 1e-8, f"diff={abs(got - oracle):.2e}")

    n_trees = 30000
    res = sweep_forest(np.zeros((n_trees, 1)), np.array([1.0]), 1.0, 0.5, iv,
                       derive_stream(2024, 1, "selftest-motion"),
                       derive_stream(2024, 1, "selftest-branching"),
                       root_stats_index=0)
    mean = res.alive_per_root.mean()
    se = res.alive_per_root.std(ddof=1) / math.sqrt(n_trees)
    target = expected_population(1.0, 1.0, 0.5)
    check("mean-population", abs(mean - target) <= 4 * se,
          f"mc={mean:.4f} target={target:.4f} z={(mean - target) / se:.2f}")

    res = sweep_forest(np.zeros((n_trees, 1)), np.array([1.0]), 1.0, 0.2, iv,
                       derive_stream(2024, 2, "selftest-motion"),
                       derive_stream(2024, 2, "selftest-branching"),
                       phi=phi, root_stats_index=0)
    mean = res.phi_per_root.mean()
    se = res.phi_per_root.std(ddof=1) / math.sqrt(n_trees)
    target = expected_population(1.0, 1.0, 0.2) * semigroup_apply(phi, 1.0, (0.0,), iv)
    check("expectation-identity", abs(mean - target) <= 4 * se,
          f"mc={mean:.4f} target={target:.4f} z={(mean - target) / se:.2f}")

    cubic = anisotropic_cubic_integral(StableIndexVector((0.5,)))
    check("cubic-integral", abs(cubic - 2.0) < 1e-9, f"value={cubic!r}")
    c1_res = c1(StableIndexVector((0.5,)), 1.0, 1.0, 0.5)
    check("c1-closed-form", abs(c1_res.value - 1 / math.sqrt(math.pi)) < 1e-9)
    from scipy.special import gamma as gamma_fn
    c2_res = c2(StableIndexVector((2.0 / 3.0,)), 1.0, 1.0)
    closed = math.sqrt((1 / math.pi) * gamma_fn(1.5) * 1.5 * gamma_fn(0.5))
    check("c2-vs-closed-form", abs(c2_res.value - closed) < 1e-6,
          f"quad={c2_res.value!r} closed={closed!r}")

    box = box_semigroup_mass(phi, 0.0, iv, SimulationDomain((8.0,)))
    check("box-mass-t0", abs(box - phi.integral()) < 1e-9)

    return 0 if all(checks) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "constants":
            return cmd_constants(args)
        if args.command == "simulate":
            return _run_and_persist(args, apply_gates=False)
        if args.command == "verify":
            return _run_and_persist(args, apply_gates=True)
        if args.command == "selftest":
            return cmd_selftest(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenBranchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
