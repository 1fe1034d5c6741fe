"""Experiment configuration: flat key-value text with dotted sections.

Grammar (one assignment per line)::

    # comment
    experiment = cat-decay
    physical.q = 1e7
    physical.nbar_m = 4e4
    sweep.mu = 0.5, 1.0, 2.0
    sweep.mu_log_range = -1.2:1.2:49
    output.path = out/cat

Values are parsed by the field they land in: floats, ints, strings, or
comma-separated float lists.  ``a:b:n`` ranges expand to n log10-spaced mu
values.  Unknown or malformed keys raise :class:`ConfigError` carrying the
dotted key path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Sequence

EXPERIMENTS = ("fidelity-sweep", "fock-squeeze", "impulse", "cat-decay",
               "multimode", "photon-budget")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path that failed."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def mu_log_grid(spec: str) -> tuple[float, ...]:
    """Expand 'a:b:n' into n points with log10(mu) uniform on [a, b]."""
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError(f"expected 'a:b:n', got {spec!r}") from None
    if n < 1:
        raise ValueError("grid needs at least one point")
    if n == 1:
        return (10.0 ** lo,)
    return tuple(10.0 ** (lo + (hi - lo) * k / (n - 1)) for k in range(n))


@dataclass
class PhysicalConfig:
    """Loss model plus the ancilla squeezing used by the squeezer."""

    q: float = 1e7
    omega_m: float = 1.0
    nbar_m: float = 4e4
    epsilon: float = 0.0
    nbar_l: float = 0.0
    ancilla_vsq: float = 0.5
    phi: float = 2.0 * math.pi / 100.0


@dataclass
class SweepConfig:
    mu: tuple[float, ...] = ()
    mu_log_range: str = ""
    q: tuple[float, ...] = ()
    epsilon: tuple[float, ...] = ()
    alpha: tuple[float, ...] = (1.0, 2.0)
    g2_ratio: tuple[float, ...] = (0.0, 0.1, 0.2, 0.5, 1.0)

    def mu_values(self, default: Sequence[float]) -> tuple[float, ...]:
        if self.mu:
            return self.mu
        if self.mu_log_range:
            return mu_log_grid(self.mu_log_range)
        return tuple(default)


@dataclass
class ReadoutConfig:
    chi_ro: float = 3.0


@dataclass
class ImpulseConfig:
    nbar_in: tuple[float, ...] = (1.0, 3.0)
    d: tuple[float, ...] = ()


@dataclass
class GridConfig:
    resolution: int = 512
    half_extent: float = 8.0


@dataclass
class CatConfig:
    samples_per_period: int = 64
    max_periods: float = 40.0
    series_periods: float = 2.0
    series_resolution: int = 512
    tau_resolution: int = 256
    momentum_mu: float = 0.5


@dataclass
class OutputConfig:
    path: str = ""
    format: str = "csv"


@dataclass
class ExperimentConfig:
    experiment: str = ""
    physical: PhysicalConfig = field(default_factory=PhysicalConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    impulse: ImpulseConfig = field(default_factory=ImpulseConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    cat: CatConfig = field(default_factory=CatConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment",
                              f"{self.experiment!r} not one of {EXPERIMENTS}")
        if self.output.format not in ("csv", "json"):
            raise ConfigError("output.format", f"{self.output.format!r} not csv/json")

    # -- flat key-value view -------------------------------------------------

    def set_key(self, key: str, raw: str) -> None:
        section, _, name = key.partition(".")
        if not name:
            if key != "experiment":
                raise ConfigError(key, "unknown top-level key")
            self.experiment = raw.strip()
            return
        target = getattr(self, section, None)
        if target is None or not hasattr(target, "__dataclass_fields__"):
            raise ConfigError(key, "unknown section")
        if name not in {f.name for f in fields(target)}:
            raise ConfigError(key, "unknown key")
        current = getattr(target, name)
        try:
            if isinstance(current, tuple):
                value = _float_list(raw)
            elif isinstance(current, bool):
                value = raw.strip().lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(float(raw))
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = raw.strip()
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None
        setattr(target, name, value)

    def flatten(self) -> dict[str, str]:
        out = {"experiment": self.experiment}
        for f in fields(self):
            section = getattr(self, f.name)
            if not hasattr(section, "__dataclass_fields__"):
                continue
            for sub in fields(section):
                value = getattr(section, sub.name)
                if isinstance(value, tuple):
                    rendered = ", ".join(repr(float(v)) for v in value)
                else:
                    rendered = repr(value) if isinstance(value, float) else str(value)
                out[f"{f.name}.{sub.name}"] = rendered
        return out

    @classmethod
    def from_items(cls, items: dict[str, str]) -> "ExperimentConfig":
        cfg = cls()
        for key, raw in items.items():
            cfg.set_key(key, raw)
        return cfg


def parse_config_text(text: str) -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        items[key.strip()] = raw.strip()
    return items


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_items(parse_config_text(fh.read()))
