"""Run configuration: defaults, flat ``key = value`` files and flag overrides."""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .blocking import ConfigError
from .matching import MatcherConfig
from .parallel import available_workers

# ranges of the sensitivity analysis
SWEEP_RANGES: dict[str, tuple] = {
    "k": (1, 2, 3, 4, 5),
    "K": (5, 10, 15, 20, 25),
    "N": (1, 2, 3, 4, 5),
    "theta": (0.3, 0.4, 0.5, 0.6, 0.7, 0.8),
}


class ConfigFileError(ValueError):
    """A configuration file that cannot be parsed."""


# file key -> (RunConfig / MatcherConfig field, converter)
_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _to_bool(s: str) -> bool:
    try:
        return _BOOL[s.lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {s!r}") from None


_KEYS = {
    "kb1": ("kb1", str), "kb2": ("kb2", str), "truth": ("truth", str), "out": ("out", str),
    "workers": ("workers", int), "partial_truth": ("partial_truth", _to_bool),
    "k": ("k", int), "K": ("K", int), "big_k": ("K", int), "big-k": ("K", int),
    "N": ("N", int), "n": ("N", int), "theta": ("theta", float),
    "purge_fraction": ("purge_fraction", float), "purge-fraction": ("purge_fraction", float),
    "name_discriminability": ("name_discriminability", _to_bool),
}
_MATCHER_FIELDS = {"k", "K", "N", "theta", "purge_fraction", "name_discriminability"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else (":" if ":" in line else None)
        if sep is None:
            raise ConfigFileError(f"{source}:{n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split(sep, 1))
        if key not in _KEYS:
            raise ConfigFileError(f"{source}:{n}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            out[name] = conv(value)
        except ValueError as exc:
            raise ConfigFileError(f"{source}:{n}: bad value for {key!r}: {exc}") from None
    return out


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


@dataclass
class RunConfig:
    kb1: str | None = None
    kb2: str | None = None
    truth: str | None = None
    out: str = "out"
    workers: int = 1
    partial_truth: bool = False
    matcher: MatcherConfig = field(default_factory=MatcherConfig)

    def __post_init__(self):
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")

    @classmethod
    def from_values(cls, values: dict) -> "RunConfig":
        """Build from merged file and flag values; unknown keys are an error."""
        matcher_kw = {k: v for k, v in values.items() if k in _MATCHER_FIELDS}
        rest = {k: v for k, v in values.items() if k not in _MATCHER_FIELDS}
        if "workers" in rest and rest["workers"] == 0:
            rest["workers"] = available_workers()
        return cls(matcher=MatcherConfig(**matcher_kw), **rest)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("matcher"))
        return d

    def required_inputs(self, need_truth: bool) -> list[tuple[str, str | None]]:
        items = [("kb1", self.kb1), ("kb2", self.kb2)]
        if need_truth:
            items.append(("truth", self.truth))
        return items


def sweep_configs(base: MatcherConfig, params: list[str], full_grid: bool = False) -> list[MatcherConfig]:
    """One-at-a-time variation around ``base``, or the full cartesian grid."""
    for p in params:
        if p not in SWEEP_RANGES:
            raise ConfigError(f"unknown sweep parameter {p!r}; choose from {sorted(SWEEP_RANGES)}")
    if full_grid:
        names = list(SWEEP_RANGES)
        return [replace(base, **dict(zip(names, vals)))
                for vals in itertools.product(*(SWEEP_RANGES[n] for n in names))]
    return [replace(base, **{p: v}) for p in params for v in SWEEP_RANGES[p]]
