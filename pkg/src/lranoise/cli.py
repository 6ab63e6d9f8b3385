"""Command-line interface.

Subcommands: kernel-check, predict, simulate, validate, sweep.  Exit code
0 means every requested check passed, 1 means a numerical threshold
failed, 2 means the configuration or inputs were invalid.  All outputs
are deterministic functions of the configuration and seed; nothing is
timestamped.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, default_config
from .ensemble import compare, epsilon_sweep, run_ensemble
from .kernels import (
    TableBuildError,
    build_autocorrelation,
    build_filtered_kernel,
    filtered_autocorrelation,
    keys_kernel,
)
from .noise import draw_noise
from .theory import predicted_cov_matrix

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

_SWEEP_EPSILONS = (1e-3, 2e-3, 5e-3, 0.01, 0.02, 0.1)


def _load_config(args) -> ExperimentConfig:
    if args.config is not None:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
    else:
        cfg = default_config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return cfg


def _echo_config(cfg: ExperimentConfig) -> None:
    print("effective configuration:")
    print(cfg.to_json())


def _write_json(path, doc) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_kernel_check(args) -> int:
    kernel = keys_kernel()
    checks = []

    mass = kernel.mass()
    checks.append(("kernel mass equals 1", abs(mass - 1.0), 1e-12))

    try:
        fk = build_filtered_kernel(kernel)
    except TableBuildError as exc:
        print(f"FAIL filtered kernel table: {exc}")
        return EXIT_FAIL
    parseval = fk.integral_of_square()
    direct = kernel.derivative_square_integral()
    checks.append(
        (
            "energy of filtered kernel equals energy of kernel derivative",
            abs(parseval - direct) / direct,
            1e-4,
        )
    )

    ac = build_autocorrelation(kernel)
    for t in (0.0, 0.5, 1.5):
        lhs = filtered_autocorrelation(fk, t)
        rhs = ac(t)
        checks.append(
            (
                f"filtered-kernel autocorrelation at t={t}",
                abs(lhs - rhs),
                2e-5,
            )
        )

    failed = False
    for name, err, tol in checks:
        ok = err <= tol
        failed = failed or not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: error {err:.3e} (tol {tol:.0e})")
    return EXIT_FAIL if failed else EXIT_PASS


def _predicted(cfg: ExperimentConfig):
    kernel = keys_kernel()
    fk = build_filtered_kernel(kernel)
    ac = build_autocorrelation(kernel)
    pred = predicted_cov_matrix(
        cfg.patch(), cfg.variance_field(), ac, cfg.kappa
    )
    return kernel, fk, pred


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    _echo_config(cfg)
    _, _, pred = _predicted(cfg)
    _write_json(args.output, pred.to_dict())
    return EXIT_PASS


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    _echo_config(cfg)
    grid = cfg.grid()
    draw = draw_noise(
        grid, cfg.variance_field(), cfg.distribution, cfg.master_seed
    )
    out = args.output or "sinogram.bin"
    data = np.ascontiguousarray(draw.values, dtype="<f8")
    with open(out, "wb") as fh:
        fh.write(data.tobytes())
    sidecar = {
        "dtype": "float64",
        "byte_order": "little-endian",
        "layout": "row-major (angle, detector)",
        "shape": [grid.n_angles, grid.n_detectors],
        "seed": cfg.master_seed,
        "sample_index": 0,
        "distribution": cfg.distribution,
        "config": cfg.to_dict(),
    }
    _write_json(out + ".json", sidecar)
    print(f"wrote {out} ({data.shape[0]} x {data.shape[1]} float64) and {out}.json")
    return EXIT_PASS


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    _echo_config(cfg)
    _, fk, pred = _predicted(cfg)
    stats = run_ensemble(
        cfg.n_samples,
        cfg.grid(),
        cfg.patch(),
        cfg.variance_field(),
        cfg.distribution,
        fk,
        cfg.master_seed,
        window=cfg.window,
        threads=args.threads,
        bins=cfg.bins,
        hist_half_width=4.0 * math.sqrt(pred.c0),
    )
    report = compare(stats, pred)
    doc = {
        "predicted": pred.to_dict(),
        "empirical_cov": stats.cov.tolist(),
        "empirical_mean": stats.mean.tolist(),
        "n_samples": stats.n_samples,
        "fingerprint": stats.fingerprint,
        "cov_error_frobenius": report.cov_error_frobenius,
        "pdf_error_l2": report.pdf_error_l2,
        "mean_norm": report.mean_norm,
        "thresholds": report.thresholds,
        "passed": report.passed,
    }
    _write_json(args.output, doc)
    print(
        f"{'PASS' if report.passed else 'FAIL'} covariance error "
        f"{report.cov_error_frobenius:.4f}, density error "
        f"{report.pdf_error_l2:.4f}"
    )
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    _echo_config(cfg)
    _, fk, pred = _predicted(cfg)
    csv_path = args.output or "sweep.csv"
    result = epsilon_sweep(
        _SWEEP_EPSILONS,
        args.sweep_samples,
        cfg.kappa,
        cfg.x0,
        cfg.offsets,
        cfg.variance_field(),
        cfg.distribution,
        fk,
        pred,
        cfg.master_seed,
        threads=args.threads,
        csv_path=csv_path,
    )
    for row in result["rows"]:
        print(
            f"epsilon {row['epsilon']:.4g}: covariance error "
            f"{row['cov_error_frobenius']:.4f}"
        )
    rho = result["spearman_rho"]
    print(f"wrote {csv_path}; Spearman rho(epsilon, error) = {rho:.3f}")
    if args.plots:
        _render_sweep_plot(csv_path)
    ok = rho is not None and rho > 0.8
    return EXIT_PASS if ok else EXIT_FAIL


def _render_sweep_plot(csv_path: str) -> None:
    """Render the error-vs-epsilon curve from the emitted CSV."""
    import csv as _csv

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(csv_path) as fh:
        rows = list(_csv.DictReader(fh))
    eps = [float(r["epsilon"]) for r in rows]
    err = [float(r["cov_error_frobenius"]) for r in rows]
    fig, ax = plt.subplots()
    ax.loglog(eps, err, "o-")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("relative covariance error")
    out = csv_path.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print(f"wrote {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lra-noise",
        description=(
            "Simulate and predict local noise statistics of filtered "
            "back-projection on discrete sinogram grids."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a JSON configuration file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--output", help="output file path")
        p.add_argument("--plots", action="store_true", help="render figures")

    p = sub.add_parser("kernel-check", help="verify kernel identities")
    common(p)
    p.set_defaults(func=cmd_kernel_check)

    p = sub.add_parser("predict", help="predicted limiting covariance")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="export one noise sinogram")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="Monte Carlo vs predicted covariance")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="error vs discretization level")
    common(p)
    p.add_argument(
        "--sweep-samples", type=int, default=2000,
        help="samples per discretization level",
    )
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, TableBuildError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
