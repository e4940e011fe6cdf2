"""Experiment configuration: flat key-value files with dotted section keys.

All times are dimensionless (expressed in units of a reference time T0); the
same convention is recorded in every output directory via the resolved
config copy, which is sufficient to re-run a command identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import GkslModel, LindbladSpec, NoiseSpec
from .estimator import MitigationPolicy
from .io import format_value, read_key_value


class ConfigError(ValueError):
    """Malformed, incomplete, or unknown configuration content."""


_REQUIRED_KEYS = ("model.e", "model.d", "initial.states", "grid.dt", "grid.n_steps")

_OPTIONAL_DEFAULTS = {
    "model.c": "0 0 0",
    "noise.sigma": "0",
    "noise.seed": "0",
    "noise.boundary_policy": "project",
    "mitigation.eps_excl": "1e-3",
    "mitigation.weight_cap": "none",
    "estimator.mode": "standard",
    "estimator.velocity_source": "auto",
    "convergence.checkpoints": "pow2",
    "verify.dt_fd": "1e-4",
    "verify.max_rel_err": "1e-3",
    "verify.max_alg_err": "1e-8",
    "output.dir": "out",
}


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {value!r}") from None


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {value!r}") from None


def _parse_vector3(key: str, value: str) -> np.ndarray:
    parts = value.split()
    if len(parts) != 3:
        raise ConfigError(f"key {key!r}: expected 3 numbers, got {value!r}")
    return np.array([_parse_float(key, p) for p in parts])


def _parse_states(key: str, value: str) -> np.ndarray:
    triples = [chunk.strip() for chunk in value.split(";") if chunk.strip()]
    if not triples:
        raise ConfigError(f"key {key!r}: expected at least one state")
    return np.stack([_parse_vector3(key, chunk) for chunk in triples])


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment description shared by all CLI commands."""

    model: GkslModel
    initial_states: np.ndarray
    dt: float
    n_steps: int
    noise: NoiseSpec
    mitigation: MitigationPolicy
    mode: str = "standard"
    velocity_source: str = "auto"
    checkpoints: tuple | None = None
    dt_fd: float = 1e-4
    verify_max_rel_err: float = 1e-3
    verify_max_alg_err: float = 1e-8
    out_dir: str = "out"
    source: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            raw = read_key_value(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        known = set(_REQUIRED_KEYS) | set(_OPTIONAL_DEFAULTS)
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
        for key in _REQUIRED_KEYS:
            if key not in raw:
                raise ConfigError(f"missing required configuration key {key!r}")
        values = dict(_OPTIONAL_DEFAULTS)
        values.update(raw)

        model = GkslModel(
            e=_parse_vector3("model.e", values["model.e"]),
            d=_parse_vector3("model.d", values["model.d"]),
            c=_parse_vector3("model.c", values["model.c"]),
        )
        states = _parse_states("initial.states", values["initial.states"])
        dt = _parse_float("grid.dt", values["grid.dt"])
        if dt <= 0.0:
            raise ConfigError("key 'grid.dt': must be positive")
        n_steps = _parse_int("grid.n_steps", values["grid.n_steps"])
        if n_steps < 0:
            raise ConfigError("key 'grid.n_steps': must be nonnegative")

        policy_text = values["noise.boundary_policy"]
        if policy_text not in ("project", "reject"):
            raise ConfigError(
                f"key 'noise.boundary_policy': expected 'project' or 'reject', got {policy_text!r}"
            )
        try:
            noise = NoiseSpec(
                sigma=_parse_float("noise.sigma", values["noise.sigma"]),
                seed=_parse_int("noise.seed", values["noise.seed"]),
                boundary_policy=policy_text,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        cap_text = values["mitigation.weight_cap"]
        cap = None if cap_text.lower() in ("none", "off", "") else _parse_float(
            "mitigation.weight_cap", cap_text
        )
        try:
            mitigation = MitigationPolicy(
                eps_excl=_parse_float("mitigation.eps_excl", values["mitigation.eps_excl"]),
                weight_cap=cap,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        mode = values["estimator.mode"]
        if mode not in ("standard", "extended"):
            raise ConfigError(
                f"key 'estimator.mode': expected 'standard' or 'extended', got {mode!r}"
            )
        source = values["estimator.velocity_source"]
        if source not in ("auto", "exact", "finite-difference"):
            raise ConfigError(
                "key 'estimator.velocity_source': expected 'auto', 'exact' or "
                f"'finite-difference', got {source!r}"
            )
        dt_fd = _parse_float("verify.dt_fd", values["verify.dt_fd"])
        if dt_fd <= 0.0:
            raise ConfigError("key 'verify.dt_fd': must be positive")

        checkpoints_text = values["convergence.checkpoints"]
        if checkpoints_text == "pow2":
            checkpoints = None
        else:
            try:
                checkpoints = tuple(int(part) for part in checkpoints_text.split())
            except ValueError:
                raise ConfigError(
                    "key 'convergence.checkpoints': expected 'pow2' or counts, "
                    f"got {checkpoints_text!r}"
                ) from None
            if not checkpoints or any(c < 1 for c in checkpoints) or list(
                checkpoints
            ) != sorted(set(checkpoints)):
                raise ConfigError(
                    "key 'convergence.checkpoints': counts must be positive, "
                    "strictly increasing"
                )

        return cls(
            model=model,
            initial_states=states,
            dt=dt,
            n_steps=n_steps,
            noise=noise,
            mitigation=mitigation,
            mode=mode,
            velocity_source=source,
            checkpoints=checkpoints,
            dt_fd=dt_fd,
            verify_max_rel_err=_parse_float(
                "verify.max_rel_err", values["verify.max_rel_err"]
            ),
            verify_max_alg_err=_parse_float(
                "verify.max_alg_err", values["verify.max_alg_err"]
            ),
            out_dir=values["output.dir"],
            source=dict(raw),
        )

    def with_seed(self, seed: int) -> "ExperimentConfig":
        noise = NoiseSpec(
            sigma=self.noise.sigma, seed=seed, boundary_policy=self.noise.boundary_policy
        )
        return ExperimentConfig(
            model=self.model,
            initial_states=self.initial_states,
            dt=self.dt,
            n_steps=self.n_steps,
            noise=noise,
            mitigation=self.mitigation,
            mode=self.mode,
            velocity_source=self.velocity_source,
            checkpoints=self.checkpoints,
            dt_fd=self.dt_fd,
            verify_max_rel_err=self.verify_max_rel_err,
            verify_max_alg_err=self.verify_max_alg_err,
            out_dir=self.out_dir,
            source=self.source,
        )

    def resolved_mapping(self) -> dict:
        """Fully materialized key set; re-parsing reproduces this config."""
        states = " ; ".join(
            " ".join(format_value(x) for x in row) for row in self.initial_states
        )
        cap = self.mitigation.weight_cap
        return {
            "model.e": self.model.e,
            "model.d": self.model.d,
            "model.c": self.model.c,
            "initial.states": states,
            "grid.dt": self.dt,
            "grid.n_steps": self.n_steps,
            "noise.sigma": self.noise.sigma,
            "noise.seed": self.noise.seed,
            "noise.boundary_policy": self.noise.boundary_policy,
            "mitigation.eps_excl": self.mitigation.eps_excl,
            "mitigation.weight_cap": "none" if cap is None else cap,
            "estimator.mode": self.mode,
            "estimator.velocity_source": self.velocity_source,
            "convergence.checkpoints": "pow2"
            if self.checkpoints is None
            else " ".join(str(c) for c in self.checkpoints),
            "verify.dt_fd": self.dt_fd,
            "verify.max_rel_err": self.verify_max_rel_err,
            "verify.max_alg_err": self.verify_max_alg_err,
            "output.dir": self.out_dir,
        }


def read_lindblad_spec(path) -> LindbladSpec:
    """Parse a Lindblad spec file.

    Keys: ``hamiltonian`` (three Pauli coefficients, H = e . sigma) and, per
    jump operator NAME, ``jump.NAME.rate``, ``jump.NAME.real`` and
    ``jump.NAME.imag`` (row-major 2x2 entries).  Jumps are ordered by name.
    """
    try:
        raw = read_key_value(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if "hamiltonian" not in raw:
        raise ConfigError("missing required configuration key 'hamiltonian'")
    e = _parse_vector3("hamiltonian", raw.pop("hamiltonian"))
    hamiltonian = np.zeros((2, 2), dtype=complex)
    sigma = (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )
    for coeff, op in zip(e, sigma):
        hamiltonian = hamiltonian + coeff * op

    jumps_raw: dict[str, dict[str, str]] = {}
    for key, value in raw.items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != "jump" or parts[2] not in ("rate", "real", "imag"):
            raise ConfigError(f"unknown configuration key {key!r}")
        jumps_raw.setdefault(parts[1], {})[parts[2]] = value

    jumps = []
    for name in sorted(jumps_raw):
        entry = jumps_raw[name]
        for part in ("rate", "real", "imag"):
            if part not in entry:
                raise ConfigError(f"missing required configuration key 'jump.{name}.{part}'")
        rate = _parse_float(f"jump.{name}.rate", entry["rate"])
        re_parts = entry["real"].split()
        im_parts = entry["imag"].split()
        if len(re_parts) != 4 or len(im_parts) != 4:
            raise ConfigError(f"jump {name!r}: 'real' and 'imag' need 4 entries each")
        re = np.array([_parse_float(f"jump.{name}.real", p) for p in re_parts])
        im = np.array([_parse_float(f"jump.{name}.imag", p) for p in im_parts])
        op = (re + 1j * im).reshape(2, 2)
        jumps.append((op, rate))
    try:
        return LindbladSpec(hamiltonian=hamiltonian, jumps=tuple(jumps))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def write_config(path, config: ExperimentConfig) -> None:
    from .io import write_key_value

    write_key_value(path, config.resolved_mapping())


def default_out_dir(cli_value: str | None, config: ExperimentConfig | None, env: dict) -> Path:
    """Output directory precedence: --out flag, BKMTOMO_OUT, config, 'out'."""
    if cli_value:
        return Path(cli_value)
    if "BKMTOMO_OUT" in env and env["BKMTOMO_OUT"]:
        return Path(env["BKMTOMO_OUT"])
    if config is not None:
        return Path(config.out_dir)
    return Path("out")
