"""Command-line front end.

Subcommands
-----------
simulate     integrate the configured model, write trajectory CSV files
estimate     recover parameters from trajectory files or from the config
convergence  estimates after growing data prefixes, clean and noisy tables
verify       per-sample identity check along the clean trajectories
lindblad     Bloch generator (Lambda, c) of an explicit Lindblad spec

Exit codes: 0 success, 1 verify tolerance violated, 2 configuration error,
3 dynamics guard tripped (state left the Bloch ball), 4 rank-deficient
estimate without ``--allow-deficient``.

The default output directory is taken from ``--out``, then the
``BKMTOMO_OUT`` environment variable, then the config.  Outputs carry no
timestamps; fixed config and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import io
from .config import (
    ConfigError,
    ExperimentConfig,
    default_out_dir,
    read_lindblad_spec,
    write_config,
)
from .dynamics import add_noise, integrate, lindblad_to_bloch_generator
from .estimator import aggregate_trajectories, convergence_series, trajectory_velocities
from .identity import verify_trajectory
from .validation import BoundaryError


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("this command requires --config")
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _prepare_out(args, config: ExperimentConfig | None) -> Path:
    out = default_out_dir(args.out, config, os.environ)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _simulated_trajectories(config: ExperimentConfig):
    """(clean, noisy-or-None) pairs, one per configured initial state."""
    pairs = []
    for index, a0 in enumerate(config.initial_states):
        clean = integrate(config.model, a0, config.dt, config.n_steps)
        noisy = None
        if config.noise.sigma > 0.0:
            noisy = add_noise(clean, config.noise, stream=index)
        pairs.append((clean, noisy))
    return pairs


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args, config)
    for index, (clean, noisy) in enumerate(_simulated_trajectories(config)):
        stem = out / f"traj_{index:03d}"
        io.write_trajectory_csv(f"{stem}.csv", clean)
        io.write_key_value(
            f"{stem}.meta", io.trajectory_meta(clean, config.model, dt=config.dt)
        )
        if noisy is not None:
            io.write_trajectory_csv(f"{stem}_noisy.csv", noisy)
            io.write_key_value(
                f"{stem}_noisy.meta", io.trajectory_meta(noisy, config.model, dt=config.dt)
            )
    write_config(out / "resolved_config.cfg", config)
    print(f"wrote {len(config.initial_states)} trajectory set(s) to {out}")
    return 0


def _estimation_inputs(args, config: ExperimentConfig | None):
    if args.trajectories:
        return [io.read_trajectory_csv(path) for path in args.trajectories]
    if config is None:
        raise ConfigError("estimate needs trajectory files or --config")
    trajs = []
    for clean, noisy in _simulated_trajectories(config):
        trajs.append(noisy if noisy is not None else clean)
    return trajs


def cmd_estimate(args) -> int:
    config = ExperimentConfig.from_file(args.config) if args.config else None
    if config is not None and args.seed is not None:
        config = config.with_seed(args.seed)
    out = _prepare_out(args, config)
    trajs = _estimation_inputs(args, config)
    policy = config.mitigation if config else None
    mode = config.mode if config else "standard"
    source = config.velocity_source if config else "auto"
    acc = aggregate_trajectories(
        trajs, policy=policy, mode=mode, velocity_source=source, workers=args.workers
    )
    report = acc.solve()
    io.write_estimate_report(
        out / "estimate_report.txt",
        report,
        extra={"n_trajectories": len(trajs), "velocity_source": source},
    )
    if config is not None:
        write_config(out / "resolved_config.cfg", config)
    print(f"wrote estimate report to {out / 'estimate_report.txt'}")
    if report.rank_deficient and not args.allow_deficient:
        print("estimate is rank-deficient (pass --allow-deficient to accept)", file=sys.stderr)
        return 4
    return 0


def cmd_convergence(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args, config)
    pairs = _simulated_trajectories(config)
    clean_series = convergence_series(
        [clean for clean, _ in pairs],
        policy=config.mitigation,
        mode=config.mode,
        velocity_source=config.velocity_source,
    )
    io.write_convergence_csv(out / "convergence_clean.csv", clean_series)
    final_reports = [clean_series[-1][1]]
    if config.noise.sigma > 0.0:
        noisy_series = convergence_series(
            [noisy for _, noisy in pairs],
            policy=config.mitigation,
            mode=config.mode,
            velocity_source=config.velocity_source,
        )
        io.write_convergence_csv(out / "convergence_noisy.csv", noisy_series)
        final_reports.append(noisy_series[-1][1])
    write_config(out / "resolved_config.cfg", config)
    print(f"wrote convergence tables to {out}")
    if any(r.rank_deficient for r in final_reports) and not args.allow_deficient:
        print("final estimate is rank-deficient (pass --allow-deficient to accept)", file=sys.stderr)
        return 4
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args, config)
    worst_fd = 0.0
    worst_alg = 0.0
    summary: dict = {"dt_fd": config.dt_fd}
    for index, a0 in enumerate(config.initial_states):
        clean = integrate(config.model, a0, config.dt, config.n_steps)
        report = verify_trajectory(
            config.model, clean, config.dt_fd, eps_excl=config.mitigation.eps_excl
        )
        io.write_identity_csv(out / f"identity_{index:03d}.csv", report)
        summary[f"trajectory_{index:03d}.max_err_gen_fd"] = report.max_err_gen_fd
        summary[f"trajectory_{index:03d}.max_err_gksl_gen"] = report.max_err_gksl_gen
        summary[f"trajectory_{index:03d}.n_excluded"] = report.n_excluded
        worst_fd = max(worst_fd, report.max_err_gen_fd)
        worst_alg = max(worst_alg, report.max_err_gksl_gen)
    passed = worst_fd <= config.verify_max_rel_err and worst_alg <= config.verify_max_alg_err
    summary["max_err_gen_fd"] = worst_fd
    summary["max_err_gksl_gen"] = worst_alg
    summary["tolerance_gen_fd"] = config.verify_max_rel_err
    summary["tolerance_gksl_gen"] = config.verify_max_alg_err
    summary["passed"] = passed
    io.write_key_value(out / "identity_summary.txt", summary)
    write_config(out / "resolved_config.cfg", config)
    print(
        f"identity check: max divergence-side error {worst_fd:.3e}, "
        f"max algebraic error {worst_alg:.3e}"
    )
    if not passed:
        print("identity tolerances violated", file=sys.stderr)
        return 1
    return 0


def cmd_lindblad(args) -> int:
    spec = read_lindblad_spec(args.spec)
    lam, c = lindblad_to_bloch_generator(spec)
    unital = bool(abs(c).max() <= 1e-12)
    lines = ["Lambda ="]
    for row in lam:
        lines.append("  " + "  ".join("%+.16e" % x for x in row))
    lines.append("c = " + "  ".join("%+.16e" % x for x in c))
    lines.append(f"unital = {'yes' if unital else 'no'}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "lindblad_report.txt").write_text(text + "\n", newline="\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bkmtomo",
        description="Single-qubit GKSL simulation, identity checks, and "
        "BKM-weighted parameter estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="experiment config file")
        p.add_argument("--out", help="output directory (default: $BKMTOMO_OUT or config)")
        p.add_argument("--seed", type=int, help="override the configured noise seed")

    p_sim = sub.add_parser("simulate", help="integrate the model and write trajectories")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="recover model parameters")
    p_est.add_argument("trajectories", nargs="*", help="trajectory CSV files")
    common(p_est, needs_config=False)
    p_est.add_argument("--allow-deficient", action="store_true",
                       help="exit 0 even if the estimate is rank-deficient")
    p_est.add_argument("--workers", type=int, default=1,
                       help="parallel per-trajectory accumulation")
    p_est.set_defaults(func=cmd_estimate)

    p_conv = sub.add_parser("convergence", help="estimates vs accumulated data")
    common(p_conv)
    p_conv.add_argument("--allow-deficient", action="store_true",
                        help="exit 0 even if the final estimate is rank-deficient")
    p_conv.set_defaults(func=cmd_convergence)

    p_ver = sub.add_parser("verify", help="check the information-geometric identity")
    common(p_ver)
    p_ver.set_defaults(func=cmd_verify)

    p_lin = sub.add_parser("lindblad", help="Bloch generator of a Lindblad spec")
    p_lin.add_argument("spec", help="Lindblad spec file")
    p_lin.add_argument("--out", help="also write the report to this directory")
    p_lin.set_defaults(func=cmd_lindblad)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BoundaryError as exc:
        print(f"dynamics guard: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
