"""File formats: trajectory CSV, flat key-value metadata, report tables.

Every float is written as ``%.16e`` (17 significant digits, lossless for
binary64) and files use ``\\n`` newlines unconditionally, so repeated runs
with the same inputs produce byte-identical outputs on any platform.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .estimator import EstimateReport
from .identity import IdentityReport

_FLOAT = "%.16e"


def format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _FLOAT % float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def write_key_value(path, mapping: dict) -> None:
    lines = [f"{key} = {format_value(value)}" for key, value in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_key_value(path) -> dict:
    """Parse ``key = value`` lines; blank lines and ``#`` comments ignored."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in mapping:
            raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[key] = value.strip()
    return mapping


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """CSV with header ``t,a1,a2,a3[,v1,v2,v3]``, one row per sample."""
    with_v = traj.v_exact is not None
    header = "t,a1,a2,a3,v1,v2,v3" if with_v else "t,a1,a2,a3"
    lines = [header]
    for k in range(len(traj)):
        cells = [_FLOAT % traj.t[k]] + [_FLOAT % x for x in traj.a[k]]
        if with_v:
            cells += [_FLOAT % x for x in traj.v_exact[k]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_trajectory_csv(path, meta: dict | None = None) -> Trajectory:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty trajectory file")
    header = text[0].strip()
    if header == "t,a1,a2,a3,v1,v2,v3":
        with_v = True
    elif header == "t,a1,a2,a3":
        with_v = False
    else:
        raise ValueError(f"{path}: unrecognized trajectory header {header!r}")
    data = np.array([[float(cell) for cell in row.split(",")] for row in text[1:]])
    if data.ndim != 2 or data.shape[1] != (7 if with_v else 4):
        raise ValueError(f"{path}: malformed trajectory rows")
    return Trajectory(
        t=data[:, 0],
        a=data[:, 1:4],
        v_exact=data[:, 4:7] if with_v else None,
        meta=dict(meta or {}),
    )


def trajectory_meta(traj: Trajectory, model=None, dt: float | None = None) -> dict:
    """Flat sidecar content for a trajectory file."""
    meta: dict = {}
    if model is not None:
        meta["model.e"] = model.e
        meta["model.d"] = model.d
        meta["model.c"] = model.c
    meta["dt"] = traj.dt if dt is None else dt
    meta["n_samples"] = len(traj)
    for key in ("rng", "seed", "stream", "sigma", "boundary_policy", "n_projected"):
        if key in traj.meta:
            meta[key] = traj.meta[key]
    return meta


def estimate_report_mapping(report: EstimateReport, extra: dict | None = None) -> dict:
    mapping: dict = {
        "mode": report.mode,
        "n_samples": report.n_samples,
        "n_excluded": report.n_excluded,
        "rank_deficient": report.rank_deficient,
        "condition_number": report.condition_number,
        "loss": report.loss,
    }
    names = ["e1", "e2", "e3", "d1", "d2", "d3", "c1", "c2", "c3"]
    for name, value in zip(names, report.p_star):
        mapping[name] = float(value)
    if extra:
        mapping.update(extra)
    return mapping


def write_estimate_report(path, report: EstimateReport, extra: dict | None = None) -> None:
    write_key_value(path, estimate_report_mapping(report, extra))


def write_convergence_csv(path, series) -> None:
    """Table ``n_points,e1..d3[,c1..c3],loss,cond,rank_deficient``."""
    if not series:
        raise ValueError("empty convergence series")
    mode = series[0][1].mode
    names = ["e1", "e2", "e3", "d1", "d2", "d3"]
    if mode == "extended":
        names += ["c1", "c2", "c3"]
    lines = ["n_points," + ",".join(names) + ",loss,cond,rank_deficient"]
    for n_points, report in series:
        cells = [str(n_points)]
        cells += [_FLOAT % x for x in report.p_star]
        cells.append(_FLOAT % report.loss)
        cells.append(_FLOAT % report.condition_number)
        cells.append("1" if report.rank_deficient else "0")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_identity_csv(path, report: IdentityReport) -> None:
    """Table ``t,lhs_general,lhs_gksl,rhs_fd,err_gen_fd,err_gksl_gen``."""
    lines = ["t,lhs_general,lhs_gksl,rhs_fd,err_gen_fd,err_gksl_gen"]
    for k in range(report.t.size):
        lines.append(
            ",".join(
                _FLOAT % x
                for x in (
                    report.t[k],
                    report.lhs_general[k],
                    report.lhs_gksl[k],
                    report.rhs_fd[k],
                    report.err_gen_fd[k],
                    report.err_gksl_gen[k],
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
