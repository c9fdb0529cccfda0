"""Flat ``key = value`` configuration files for simulation scenarios.

Blank lines and ``#`` comments are ignored. Recognised keys::

    n, fraction, n_sims, b, seed, level,
    beta0, beta1, beta2, beta3, target_rate,
    gamma0, gamma1, gamma2, x1_rate,
    p_z1, q2, q3,
    dup_with_replacement, max_iter, tol

``beta0`` and ``gamma0`` are normally left out; they are then calibrated so
that the marginal event rate equals ``target_rate`` and ``Pr(x1 = 1)``
equals ``x1_rate``. Unknown keys are errors.
"""

from __future__ import annotations

from pathlib import Path

from .errors import CalibrationError, ConfigError, ContractViolation, ModelValidityError
from .simgen import (
    DEFAULT_GAMMA,
    DEFAULT_SLOPES,
    DEFAULT_TARGET_RATE,
    DEFAULT_X1_RATE,
    SimParams,
    calibrate_intercept,
    calibrate_x1_intercept,
)
from .study import ScenarioConfig

__all__ = ["KEYS", "parse_text", "load_values", "params_from_values", "config_from_values", "load_config"]

_INT_KEYS = {"n", "n_sims", "b", "seed", "max_iter"}
_BOOL_KEYS = {"dup_with_replacement"}
_FLOAT_KEYS = {
    "fraction", "level", "tol",
    "beta0", "beta1", "beta2", "beta3", "target_rate",
    "gamma0", "gamma1", "gamma2", "x1_rate",
    "p_z1", "q2", "q3",
}
KEYS = _INT_KEYS | _BOOL_KEYS | _FLOAT_KEYS

DEFAULTS = {
    "n": 2000,
    "fraction": 0.2,
    "n_sims": 10_000,
    "b": 2000,
    "seed": 0,
    "level": 0.95,
    "beta1": DEFAULT_SLOPES[0],
    "beta2": DEFAULT_SLOPES[1],
    "beta3": DEFAULT_SLOPES[2],
    "gamma1": DEFAULT_GAMMA[1],
    "gamma2": DEFAULT_GAMMA[2],
    "p_z1": 0.10,
    "q2": 0.16,
    "q3": 0.48,
    "dup_with_replacement": False,
    "max_iter": 50,
    "tol": 1e-8,
}


def _convert(key, raw):
    if key in _INT_KEYS:
        return int(raw.replace("_", ""))
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true or false, got {raw!r}")
    return float(raw)


def parse_text(text: str) -> dict:
    """Parse configuration text, collecting every problem before raising."""
    values, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            values[key] = _convert(key, raw)
        except ValueError:
            problems.append(f"line {lineno}: invalid value {raw!r} for {key!r}")
    if problems:
        raise ConfigError(problems)
    return values


def load_values(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text)


def params_from_values(values: dict) -> SimParams:
    """Simulation parameters with missing intercepts calibrated."""
    v = {**DEFAULTS, **values}
    problems = []
    if "beta0" in values and "target_rate" in values:
        problems.append("give either beta0 or target_rate, not both")
    if "gamma0" in values and "x1_rate" in values:
        problems.append("give either gamma0 or x1_rate, not both")
    target = v.get("target_rate", DEFAULT_TARGET_RATE)
    x1_rate = v.get("x1_rate", DEFAULT_X1_RATE)
    if "beta0" not in values and not 0.0 < target < 1.0:
        problems.append(f"target_rate must lie in (0, 1), got {target}")
    if "gamma0" not in values and not 0.0 < x1_rate < 1.0:
        problems.append(f"x1_rate must lie in (0, 1), got {x1_rate}")
    if problems:
        raise ConfigError(problems)
    try:
        params = SimParams(
            beta=(v.get("beta0", -10.0), v["beta1"], v["beta2"], v["beta3"]),
            gamma=(v.get("gamma0", 0.0), v["gamma1"], v["gamma2"]),
            p_z1=v["p_z1"],
            q2=v["q2"],
            q3=v["q3"],
        )
        if "gamma0" not in values:
            params = params.with_gamma0(calibrate_x1_intercept(params, x1_rate))
        if "beta0" not in values:
            params = params.with_beta0(calibrate_intercept(params, target))
    except (ModelValidityError, CalibrationError, ContractViolation) as exc:
        raise ConfigError(str(exc)) from None
    return params


def config_from_values(values: dict) -> ScenarioConfig:
    v = {**DEFAULTS, **values}
    config = ScenarioConfig(
        n=v["n"],
        subcohort_fraction=v["fraction"],
        n_sims=v["n_sims"],
        B=v["b"],
        sim_params=params_from_values(values),
        master_seed=v["seed"],
        level=v["level"],
        duplicates_with_replacement=v["dup_with_replacement"],
        max_iter=v["max_iter"],
        tol=v["tol"],
    )
    return config.validate()


def load_config(path) -> ScenarioConfig:
    return config_from_values(load_values(path))
