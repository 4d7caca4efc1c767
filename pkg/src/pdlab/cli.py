"""Command-line surface: every experiment writes CSV/JSON artifacts plus a
manifest echoing the full spec, so a run can be replayed byte-for-byte.

Exit codes: 0 success, 1 usage or numeric error, 2 computation succeeded but
the scientific verdict failed (so CI can tell crashes from refuted checks).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import asymptotics, exact_laws, rates, sampling, tilting

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT_FAILED = 2


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(out_dir: Path, command: str, params: dict, wall_time: float) -> None:
    _write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "parameters": params,
            "seed": params.get("seed"),
            "version": __version__,
            "wall_time_s": wall_time,
            "threads_cap": os.environ.get("PD_LAB_THREADS"),
        },
    )


def _parse_thetas(raw: str) -> tuple[float, ...]:
    values = tuple(float(t) for t in raw.split(",") if t.strip())
    if not values:
        raise ValueError("thetas list is empty")
    return values


def _report_artifacts(out: Path, report: asymptotics.ConvergenceReport) -> None:
    _write_csv(
        out / "report.csv",
        ["theta", "statistic", "target", "gap", "err", "method"],
        report.to_csv_rows(),
    )
    _write_json(out / "verdict.json", report.verdict())


# ---------------------------------------------------------------- commands


def cmd_sample(args, out: Path) -> int:
    rows = []
    for i in range(args.n_samples):
        cfg = sampling.SamplerConfig(theta=args.theta, seed=args.seed, stream_id=i)
        ranked = sampling.gem_to_ranked(sampling.draw_sequence(cfg))
        for rank, p in enumerate(ranked.p[: args.k], start=1):
            rows.append((i, rank, p, ranked.residual))
    _write_csv(out / "samples.csv", ["sample_id", "rank", "p", "residual"], rows)
    return EXIT_OK


def cmd_density(args, out: Path) -> int:
    grid = exact_laws.g1_density(args.theta, args.resolution)
    _write_csv(out / "density.csv", ["band_k", "p", "g1", "tail"], grid.rows())
    _write_json(
        out / "diagnostics.json",
        {"theta": args.theta, "bands": len(grid.bands), "leftover_mass": grid.leftover},
    )
    return EXIT_OK


def cmd_moments(args, out: Path) -> int:
    rows = []
    for k in range(1, args.k + 1):
        rows.append(("pk_mean", k, exact_laws.moment_pk(exact_laws.MomentQuery(k, 1, args.theta))))
    for m in range(2, args.m + 1):
        rows.append(("hm_mean", m, exact_laws.homozygosity_moment(m, args.theta)))
    _write_csv(out / "moments.csv", ["kind", "order", "value"], rows)
    return EXIT_OK


def cmd_rate(args, out: Path) -> int:
    xs = [args.x] if args.x is not None else list(np.linspace(0.0, 0.99, 100))
    rows = [
        (
            x,
            rates.rate_I(x),
            rates.rate_Ik(2, x),
            rates.rate_Ik(3, x),
            rates.rate_Sn([x / 2.0, x / 2.0]),
        )
        for x in xs
    ]
    _write_csv(out / "rates.csv", ["x", "I", "I2", "I3", "S2_diag"], rows)
    return EXIT_OK


def cmd_c0(args, out: Path) -> int:
    root = rates.solve_c0()
    _write_json(out / "c0.json", {"c0": root, "residual": rates.critical_equation(root)})
    return EXIT_OK


def cmd_verify_ldp(args, out: Path) -> int:
    sweep = asymptotics.ThetaSweep(thetas=_parse_thetas(args.thetas), seed=args.seed)
    if args.k == 1:
        report = asymptotics.verify_ldp_p1(sweep, args.x, resolution=args.resolution)
    else:
        report = asymptotics.verify_ldp_pk(sweep, args.k, args.x, resolution=args.resolution)
    _report_artifacts(out, report)
    return EXIT_OK if report.passed else EXIT_VERDICT_FAILED


def cmd_verify_gumbel(args, out: Path) -> int:
    sweep = asymptotics.ThetaSweep(
        thetas=_parse_thetas(args.thetas), samples_per_theta=args.n_samples, seed=args.seed
    )
    report = asymptotics.verify_gumbel(sweep, ranks=(args.k,), ks_threshold=args.ks_threshold)
    _report_artifacts(out, report)
    return EXIT_OK if report.passed else EXIT_VERDICT_FAILED


def cmd_verify_gaussian(args, out: Path) -> int:
    sweep = asymptotics.ThetaSweep(
        thetas=_parse_thetas(args.thetas), samples_per_theta=args.n_samples, seed=args.seed
    )
    report = asymptotics.verify_gaussian_hm(
        sweep, args.m, var_rel_tol=args.var_tol, ks_threshold=args.ks_threshold
    )
    _report_artifacts(out, report)
    return EXIT_OK if report.passed else EXIT_VERDICT_FAILED


def cmd_verify_gillespie(args, out: Path) -> int:
    report = tilting.verify_gillespie(
        args.c,
        theta=args.theta,
        n_samples=args.n_samples,
        seed=args.seed,
        var_sweep=_parse_thetas(args.thetas),
    )
    payload = {
        "c": report.c,
        "n_samples": report.n_samples,
        "passed": report.passed,
        "checks": [
            {"gamma": ch.gamma, "theta": ch.theta, "passed": ch.passed, "detail": ch.detail}
            for ch in report.checks
        ],
    }
    _write_json(out / "verdict.json", payload)
    return EXIT_OK if report.passed else EXIT_VERDICT_FAILED


def cmd_tilt(args, out: Path) -> int:
    h = rates.minus_phi(args.m) if args.h == "minus_phi" else rates.plus_phi(args.m)
    cfg = tilting.TiltConfig(
        theta=args.theta, h_spec=h, c=args.c, gamma=args.gamma, n_samples=args.n_samples, seed=args.seed
    )
    batch = tilting.neutral_batch(cfg.theta, cfg.n_samples, seed=cfg.seed)
    ensemble = tilting.tilt_weights(batch, cfg.h_spec, cfg.alpha)
    rows = (
        (i, float(np.sum(s.p**2)), lw, w)
        for i, (s, lw, w) in enumerate(
            zip(ensemble.samples, ensemble.log_weights, ensemble.weights)
        )
    )
    _write_csv(out / "ensemble.csv", ["sample_id", "phi2", "log_weight", "weight"], rows)
    _write_json(
        out / "diagnostics.json",
        {"ess": ensemble.ess, "degenerate": ensemble.degenerate, "alpha": cfg.alpha},
    )
    return EXIT_OK


def cmd_phase(args, out: Path) -> int:
    h = rates.minus_phi(args.m) if args.h == "minus_phi" else rates.plus_phi(args.m)
    growth = tilting.classify_growth(args.c, args.gamma)
    regime = rates.SelectionRegime(
        growth_class=growth, h_spec=h, c=args.c if growth == "linear" else None
    )
    label = tilting.phase_classify(regime)
    _write_json(
        out / "phase.json",
        {
            "growth_class": growth,
            "label": label.label,
            "branch": label.branch,
            "constant": label.constant,
        },
    )
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def _cap_threads() -> None:
    """PD_LAB_THREADS caps the numeric backends' worker pools; the algorithms
    are deterministic per stream so the cap never changes results."""
    cap = os.environ.get("PD_LAB_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _validate(args) -> list[str]:
    """Range checks for every flag present on the parsed command, reported
    all at once; no computation happens here."""
    errors = []
    for name in ("theta", "c"):
        value = getattr(args, name, None)
        if value is not None and value <= 0:
            errors.append(f"{name} must be positive")
    for name in ("n_samples", "resolution", "k", "m"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            errors.append(f"{name} must be a positive integer")
    x = getattr(args, "x", None)
    if x is not None and not (0.0 <= x < 1.0):
        errors.append("x must lie in [0, 1)")
    raw_thetas = getattr(args, "thetas", None)
    if raw_thetas is not None:
        try:
            thetas = _parse_thetas(raw_thetas)
        except ValueError as exc:
            errors.append(str(exc))
        else:
            if any(t <= 0 for t in thetas):
                errors.append("thetas must be positive")
            if list(thetas) != sorted(set(thetas)):
                errors.append("thetas must be strictly ascending")
    return errors


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=True):
        p.add_argument("--out", required=True, help="output directory for artifacts")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sample", help="ranked frequency samples as CSV")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--n-samples", type=int, default=100)
    p.add_argument("--k", type=int, default=10, help="ranks to keep per sample")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("density", help="band-resolved density grid of the top frequency")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--resolution", type=int, default=160)
    common(p, seed=False)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("moments", help="ranked-frequency and homozygosity moments")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--k", type=int, default=5, help="compute E[P_k] for k=1..K")
    p.add_argument("--m", type=int, default=3, help="compute E[H_m] for m=2..M")
    common(p, seed=False)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("rate", help="rate-function table")
    p.add_argument("--x", type=float, default=None)
    common(p, seed=False)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("c0", help="critical selection constant")
    common(p, seed=False)
    p.set_defaults(func=cmd_c0)

    p = sub.add_parser("verify-ldp", help="decay-rate convergence by exact quadrature")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--k", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--thetas", required=True, help="comma-separated ascending list")
    p.add_argument("--resolution", type=int, default=160)
    common(p)
    p.set_defaults(func=cmd_verify_ldp)

    p = sub.add_parser("verify-gumbel", help="extreme-value scaling limit check")
    p.add_argument("--thetas", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--ks-threshold", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_verify_gumbel)

    p = sub.add_parser("verify-gaussian", help="Gaussian homozygosity fluctuations")
    p.add_argument("--thetas", required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--ks-threshold", type=float, default=0.05)
    p.add_argument("--var-tol", type=float, default=0.15)
    common(p)
    p.set_defaults(func=cmd_verify_gaussian)

    p = sub.add_parser("verify-gillespie", help="three-regime selection density-ratio check")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--theta", type=float, default=200.0)
    p.add_argument("--thetas", default="50,200,800", help="sweep for the gamma<0 variance check")
    p.add_argument("--n-samples", type=int, default=10_000)
    common(p)
    p.set_defaults(func=cmd_verify_gillespie)

    p = sub.add_parser("tilt", help="tilted ensemble export")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--h", choices=("minus_phi", "plus_phi"), default="minus_phi")
    p.add_argument("--n-samples", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_tilt)

    p = sub.add_parser("phase", help="phase classification of a selection regime")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True, help="alpha = c * theta^gamma")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--h", choices=("minus_phi", "plus_phi"), default="plus_phi")
    common(p, seed=False)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest", help="path to manifest.json")
    p.add_argument("--out", required=True)
    p.set_defaults(func=None)

    return parser


def _replay_argv(manifest_path: str, out: str) -> list[str]:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    argv = [manifest["command"]]
    for key, value in manifest["parameters"].items():
        if key in ("out", "func", "command") or value is None:
            continue
        argv.extend([f"--{key.replace('_', '-')}", str(value)])
    argv.extend(["--out", out])
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK

    if args.command == "replay":
        return main(_replay_argv(args.manifest, args.out))

    _cap_threads()
    errors = _validate(args)
    if errors:
        for message in errors:
            print(f"error: {message}", file=sys.stderr)
        return EXIT_ERROR

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {
        k: v for k, v in vars(args).items() if k not in ("func", "command", "out")
    }
    start = time.monotonic()
    try:
        status = args.func(args, out)
    except (ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ArithmeticError as exc:
        print(f"numeric error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _manifest(out, args.command, params, time.monotonic() - start)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
