"""Flat key=value run configuration: parsing, validation, serialization.

The whole experiment setup travels in a plain-text file, one ``key = value``
pair per line with ``#`` comments.  Waveforms are selected by name rather
than tabulated: ``phi`` is ``sin`` (with ``phi_amplitude``/``phi_omega``),
``zero``, or a bare number for a constant offset; ``f_tilde`` is ``zero``
or a constant.  ``g = inf`` removes the stops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .fem import BeamModel, Mesh, SupportMotion
from .steppers import PenaltyParams, SchemeParams

KNOWN_KEYS = (
    "L",
    "J",
    "k2",
    "g",
    "phi",
    "phi_amplitude",
    "phi_omega",
    "f_tilde",
    "scheme",
    "beta",
    "dt",
    "T",
    "inv_eps",
    "alpha",
    "output",
    "record_stride",
    "seed",
)

SCHEMES = ("signorini", "penalty", "linear")


class ConfigError(ValueError):
    """Malformed or invalid configuration text."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run description, ready to build model/mesh/params from."""

    L: float
    J: int
    k2: float
    g: float
    phi: str | float
    dt: float
    T: float
    scheme: str = "signorini"
    beta: float = 0.5
    phi_amplitude: float | None = None
    phi_omega: float | None = None
    f_tilde: float = 0.0
    inv_eps: float | None = None
    alpha: float = 0.01
    output: str = "trajectory.csv"
    record_stride: int | str = "auto"
    seed: int = 0

    def __post_init__(self):
        _validate(self)


def _fail(key: str, why: str):
    raise ConfigError(f"config key {key!r}: {why}")


def _validate(cfg: RunConfig):
    if cfg.L <= 0.0:
        _fail("L", "beam length must be positive")
    if cfg.J < 1:
        _fail("J", "need at least one element")
    if cfg.k2 <= 0.0:
        _fail("k2", "stiffness coefficient must be positive")
    if not cfg.g > 0.0:
        _fail("g", "gap must be positive (inf disables the stops)")
    if cfg.scheme not in SCHEMES:
        _fail("scheme", f"must be one of {', '.join(SCHEMES)}")
    if not 0.0 <= cfg.beta <= 0.5:
        _fail("beta", "must lie in [0, 1/2]")
    if cfg.dt <= 0.0:
        _fail("dt", "time step must be positive")
    if cfg.T < 0.0:
        _fail("T", "horizon must be nonnegative")
    if not 0.0 < cfg.alpha < 1.0:
        _fail("alpha", "must lie in (0, 1)")
    if cfg.scheme == "penalty":
        if cfg.inv_eps is None:
            _fail("inv_eps", "required when scheme = penalty")
        if cfg.inv_eps < 0.0:
            _fail("inv_eps", "penalty stiffness must be nonnegative")
    elif cfg.inv_eps is not None:
        _fail("inv_eps", "only meaningful when scheme = penalty")
    if isinstance(cfg.phi, str):
        if cfg.phi == "sin":
            if cfg.phi_amplitude is None or cfg.phi_omega is None:
                _fail("phi", "phi = sin needs phi_amplitude and phi_omega")
        elif cfg.phi == "zero":
            pass
        else:
            _fail("phi", "must be sin, zero, or a number")
    if cfg.phi != "sin" and (cfg.phi_amplitude is not None or cfg.phi_omega is not None):
        _fail("phi_amplitude", "only meaningful when phi = sin")
    if cfg.record_stride != "auto":
        if not isinstance(cfg.record_stride, int) or cfg.record_stride < 1:
            _fail("record_stride", "must be 'auto' or a positive integer")


def _parse_float(key: str, raw: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        _fail(key, f"not a number: {raw!r}")
    if math.isnan(val):
        _fail(key, "nan is not a valid value")
    return val


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        _fail(key, f"not an integer: {raw!r}")


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text into a validated :class:`RunConfig`.

    Unknown or repeated keys are rejected with the offending line number;
    missing optional keys take their documented defaults.
    """
    seen: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        seen[key] = value

    for key in ("L", "J", "k2", "g", "dt", "T"):
        if key not in seen:
            raise ConfigError(f"missing required key {key!r}")

    kwargs = {
        "L": _parse_float("L", seen["L"]),
        "J": _parse_int("J", seen["J"]),
        "k2": _parse_float("k2", seen["k2"]),
        "g": _parse_float("g", seen["g"]),
        "dt": _parse_float("dt", seen["dt"]),
        "T": _parse_float("T", seen["T"]),
    }
    if "scheme" in seen:
        kwargs["scheme"] = seen["scheme"]
    if "beta" in seen:
        kwargs["beta"] = _parse_float("beta", seen["beta"])
    if "phi" in seen:
        raw = seen["phi"]
        kwargs["phi"] = raw if raw in ("sin", "zero") else _parse_float("phi", raw)
    else:
        kwargs["phi"] = "zero"
    if "phi_amplitude" in seen:
        kwargs["phi_amplitude"] = _parse_float("phi_amplitude", seen["phi_amplitude"])
    if "phi_omega" in seen:
        kwargs["phi_omega"] = _parse_float("phi_omega", seen["phi_omega"])
    if "f_tilde" in seen:
        raw = seen["f_tilde"]
        kwargs["f_tilde"] = 0.0 if raw == "zero" else _parse_float("f_tilde", raw)
    if "inv_eps" in seen:
        kwargs["inv_eps"] = _parse_float("inv_eps", seen["inv_eps"])
    if "alpha" in seen:
        kwargs["alpha"] = _parse_float("alpha", seen["alpha"])
    if "output" in seen:
        kwargs["output"] = seen["output"]
    if "record_stride" in seen:
        raw = seen["record_stride"]
        kwargs["record_stride"] = "auto" if raw == "auto" else _parse_int("record_stride", raw)
    if "seed" in seen:
        kwargs["seed"] = _parse_int("seed", seen["seed"])
    return RunConfig(**kwargs)


def serialize_config(cfg: RunConfig) -> str:
    """Emit text that parses back to ``cfg``, defaults included."""
    lines = []

    def emit(key, value):
        lines.append(f"{key} = {value}")

    emit("L", repr(cfg.L))
    emit("J", cfg.J)
    emit("k2", repr(cfg.k2))
    emit("g", "inf" if math.isinf(cfg.g) else repr(cfg.g))
    emit("phi", cfg.phi if isinstance(cfg.phi, str) else repr(cfg.phi))
    if cfg.phi_amplitude is not None:
        emit("phi_amplitude", repr(cfg.phi_amplitude))
    if cfg.phi_omega is not None:
        emit("phi_omega", repr(cfg.phi_omega))
    emit("f_tilde", "zero" if cfg.f_tilde == 0.0 else repr(cfg.f_tilde))
    emit("scheme", cfg.scheme)
    emit("beta", repr(cfg.beta))
    emit("dt", repr(cfg.dt))
    emit("T", repr(cfg.T))
    if cfg.inv_eps is not None:
        emit("inv_eps", repr(cfg.inv_eps))
    emit("alpha", repr(cfg.alpha))
    emit("output", cfg.output)
    emit("record_stride", cfg.record_stride)
    emit("seed", cfg.seed)
    return "\n".join(lines) + "\n"


def override(cfg: RunConfig, key: str, value) -> RunConfig:
    """Return a copy of ``cfg`` with a single (validated) field replaced."""
    if key not in KNOWN_KEYS:
        raise ConfigError(f"unknown key {key!r}")
    if key == "J":
        value = int(value)
    elif key == "seed":
        value = int(value)
    elif key not in ("scheme", "phi", "output", "record_stride"):
        value = float(value)
    return replace(cfg, **{key: value})


def build_support_motion(cfg: RunConfig) -> SupportMotion:
    if cfg.phi == "sin":
        return SupportMotion.sine(cfg.phi_amplitude, cfg.phi_omega)
    if cfg.phi == "zero":
        return SupportMotion.zero()
    return SupportMotion.constant(cfg.phi)


def build_model(cfg: RunConfig) -> tuple[BeamModel, Mesh]:
    """Materialize the beam model and mesh described by ``cfg``."""
    motion = build_support_motion(cfg)
    if cfg.f_tilde == 0.0:
        load = None
    else:
        const = cfg.f_tilde
        load = lambda x, t: const + 0.0 * x  # noqa: E731 - tiny closure
    if math.isinf(cfg.g):
        model = BeamModel(k2=cfg.k2, L=cfg.L, phi=motion, f_tilde=load)
    else:
        model = BeamModel.symmetric_stops(cfg.k2, cfg.L, cfg.g, phi=motion, f_tilde=load)
    return model, Mesh(cfg.L, cfg.J)


def build_params(cfg: RunConfig):
    """Scheme parameters for the configured time discretization."""
    if cfg.scheme == "penalty":
        return PenaltyParams(inv_eps=cfg.inv_eps, dt=cfg.dt, T=cfg.T, beta=cfg.beta)
    return SchemeParams(beta=cfg.beta, dt=cfg.dt, T=cfg.T)


def run_kwargs(cfg: RunConfig) -> dict:
    """Keyword arguments for :func:`beamstops.steppers.run` from ``cfg``."""
    stride = None if cfg.record_stride == "auto" else cfg.record_stride
    return {
        "kind": cfg.scheme,
        "record_stride": stride,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
    }
