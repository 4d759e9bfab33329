"""Run configuration: a JSON object validated into RunConfig."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..kernel import KernelParams, from_inverse_power

SUITES = ("kernel", "lp", "norms", "collision", "operators", "evolve", "macroscopic", "all")
SCALES = ("quick", "desk")


class ConfigError(ValueError):
    """Invalid or inadmissible configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    suite: list = field(default_factory=lambda: ["all"])
    checks: list = None              # explicit check names; overrides suite
    n: int = 2
    gamma: float = 0.0
    s: float = 0.25
    p: float = None                  # inverse-power exponent (n = 3), overrides gamma, s
    ell: float = 0.0
    grid_N: int = 32
    grid_L: float = 8.0
    sigma_nodes: int = 64
    K_max: int = 12
    basis_N: int = 12
    M: int = 4
    J_max: int = 6
    seed: int = 0
    scale: str = "desk"
    output: str = "out"
    solver: dict = None              # optional evolve run, see evolve.SolverConfig
    sweep: dict = None               # optional spectral sweep settings

    @property
    def params(self) -> KernelParams:
        if self.p is not None:
            return from_inverse_power(self.p, self.n)
        return KernelParams(self.n, self.gamma, self.s)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        """Hash of every setting that affects numbers (the output path does not)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def from_dict(d) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown keys: {sorted(extra)}")
    d = dict(d)
    if isinstance(d.get("suite"), str):
        d["suite"] = [d["suite"]]
    try:
        cfg = RunConfig(**d)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    bad = [x for x in cfg.suite if x not in SUITES]
    if bad:
        raise ConfigError(f"unknown suite(s) {bad}; choose from {SUITES}")
    if cfg.scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}")
    for key in ("grid_N", "sigma_nodes", "K_max", "basis_N", "M", "J_max"):
        if int(getattr(cfg, key)) != getattr(cfg, key) or getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be a positive integer")
    if cfg.basis_N > 16:
        raise ConfigError("basis_N above the desk-scale limit (16)")
    try:
        cfg.params
    except ValueError as e:
        raise ConfigError(f"inadmissible kernel: {e}") from None
    if cfg.solver is not None:
        solver_config(cfg)
    if cfg.sweep is not None:
        sweep_settings(cfg)
    return cfg


def _kernel_from(d, fallback):
    d = dict(d)
    keys = {k: d.pop(k) for k in ("n", "gamma", "s", "p") if k in d}
    if not keys:
        return fallback, d
    try:
        if "p" in keys:
            return from_inverse_power(keys["p"], keys.get("n", 3)), d
        return KernelParams(keys.get("n", 2), keys.get("gamma", 0.0), keys.get("s", 0.25)), d
    except ValueError as e:
        raise ConfigError(f"inadmissible kernel: {e}") from None


def solver_config(cfg):
    """SolverConfig from the 'solver' section; kernel keys default to the top level."""
    from ..evolve import SolverConfig
    if not isinstance(cfg.solver, dict):
        raise ConfigError("'solver' must be an object")
    params, rest = _kernel_from(cfg.solver, cfg.params)
    rest.setdefault("seed", cfg.seed)
    try:
        return SolverConfig(params, **rest)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"solver: {e}") from None


SWEEP_DEFAULTS = {"configs": [[2, 0.0, 0.25], [3, -0.5, 0.25], [3, -1.0, 0.25]],
                  "N": [8, 12, 16], "theta_nodes": 24,
                  "probe": {"N": 12, "samples": 50}, "save_matrices": True}


def sweep_settings(cfg):
    """Validated sweep section: kernel list, basis degrees and probe settings."""
    raw = cfg.sweep or {}
    if not isinstance(raw, dict):
        raise ConfigError("'sweep' must be an object")
    extra = set(raw) - set(SWEEP_DEFAULTS)
    if extra:
        raise ConfigError(f"sweep: unknown keys {sorted(extra)}")
    out = {**SWEEP_DEFAULTS, **raw}
    params = []
    for c in out["configs"]:
        try:
            n, g, s = c
            params.append(KernelParams(int(n), float(g), float(s)))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"sweep config {c!r}: {e}") from None
    Ns = out["N"]
    if not Ns or any(int(N) != N or N < 1 or N > 16 for N in Ns):
        raise ConfigError("sweep N values must be integers in [1, 16]")
    probe = out["probe"]
    if probe is not None and (not isinstance(probe, dict) or set(probe) - {"N", "samples"}):
        raise ConfigError("sweep probe must be an object with keys N, samples")
    out["params"] = params
    return out


def load(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return from_dict(data)
