"""Flat ``section.key = value`` experiment configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

KINDS = (
    "validate-algebra",
    "covering",
    "mixed-norm",
    "heat-trace",
    "asymptotic",
    "cwikel-ratio",
    "zeta",
    "bs-check",
    "semiclassical",
    "connes",
)

# every accepted key with its default; the default's type drives parsing
DEFAULTS: dict[str, object] = {
    "group": "h1",
    "seed": 0,
    "grid.n": [0],
    "grid.box": [0.0],
    "grid.nt": 32,
    "grid.box_t": 4.0,
    "grid.scheme": "forward",
    "grid.order": 4,
    "grid.refine": False,
    "function.kind": "gaussian",
    "function.params": "",
    "function.count": 20,
    "operator.k": 1.0,
    "operator.p": 1.0,
    "operator.q": 4.0,
    "operator.z": 3.0,
    "operator.case": "i",
    "fit.lo": 20,
    "fit.hi": 100,
    "fit.count": 0,
    "heat.s": [0.05, 0.4],
    "heat.points": 8,
    "heat.refine": [],
    "bs.trials": 100,
    "bs.max_dim": 50,
    "bs.lambda_lo": 0.1,
    "bs.lambda_hi": 2.0,
    "sweep.h": [0.5, 0.35, 0.25, 0.18],
    "sweep.method": "auto",
    "sweep.exploratory": False,
    "covering.lo": [-2.0],
    "covering.hi": [2.0],
    "covering.separation": 1.0,
    "covering.spacing": 0.0,
    "covering.radius": 1.0,
    "covering.compare_separation": 0.5,
    "check.tolerance": 0.0,
    "check.trend_slack": 0.0,
    "samples.count": 100000,
}

LIST_ITEM_TYPES = {"heat.refine": int}


def _parse_value(key: str, raw: str):
    default = DEFAULTS[key]
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            if not raw:
                return []
            items = [v for v in raw.replace(",", " ").split()]
            kind = LIST_ITEM_TYPES.get(key, type(default[0]) if default else float)
            return [kind(v) for v in items]
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


@dataclass
class ExperimentConfig:
    kind: str
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; known: {', '.join(KINDS)}")

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return DEFAULTS[key]

    def set(self, key: str, raw) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        self.values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw

    def update_text(self, text: str) -> None:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key == "kind":
                if raw != self.kind:
                    raise ConfigError(f"config is for kind {raw!r}, not {self.kind!r}")
                continue
            self.set(key, raw)

    def echo(self) -> dict:
        """Explicitly set keys, sorted (deterministic)."""
        return {k: self.values[k] for k in sorted(self.values)}

    def format(self) -> str:
        lines = [f"kind = {self.kind}"]
        for k, v in self.echo().items():
            if isinstance(v, list):
                v = ", ".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def load_config(kind: str, path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig(kind)
    if path is not None:
        cfg.update_text(Path(path).read_text())
    for key, value in (overrides or {}).items():
        cfg.set(key, value)
    return cfg


def parse_params(text: str) -> dict:
    """'width=1, amplitude=2' -> {'width': 1.0, 'amplitude': 2.0}."""
    out = {}
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"bad function parameter {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def worker_count() -> int:
    """Worker cap from SUBSPECTRA_THREADS (default 1)."""
    raw = os.environ.get("SUBSPECTRA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SUBSPECTRA_THREADS must be an integer, got {raw!r}") from None
