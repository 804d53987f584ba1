"""Flat ``key = value`` configuration shared by every CLI subcommand.

Precedence: command-line ``--set key=value`` > config file > built-in defaults.
Lines starting with ``#`` (and anything after an inline ``#``) are comments.
"""
from __future__ import annotations

import os

from .authenticator import DetectorConfig
from .neural import TrainConfig
from .preprocess import PreprocConfig
from .recognizer import PipelineConfig

ENV_VAR = "VERIFYFACE_CONFIG"


class ConfigError(ValueError):
    pass


def _size(text):
    parts = text.lower().replace("*", "x").split("x")
    if len(parts) != 2:
        raise ValueError(f"expected WxH, got {text!r}")
    return int(parts[0]), int(parts[1])


def _orders(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _lag(text):
    v = int(text)
    return None if v == 0 else v


# key -> (parser, default)
SCHEMA = {
    "seed": (int, 0),
    "detector.threshold": (float, DetectorConfig().threshold),
    "detector.orders": (_orders, DetectorConfig().orders),
    "detector.f_lo": (float, DetectorConfig().f_lo),
    "detector.max_lag": (_lag, None),
    "detector.center_sigma": (float, DetectorConfig().center_sigma),
    "preproc.filter_size": (int, PreprocConfig().filter_size),
    "preproc.stretch_low_pct": (float, PreprocConfig().stretch_low_pct),
    "preproc.stretch_high_pct": (float, PreprocConfig().stretch_high_pct),
    "preproc.target_size": (_size, PreprocConfig().target_size),
    "features.dct_keep": (int, PipelineConfig().dct_keep),
    "features.pca_max": (int, PipelineConfig().pca_max),
    "net.hidden": (int, PipelineConfig().hidden),
    "net.learning_rate": (float, TrainConfig().learning_rate),
    "net.momentum": (float, TrainConfig().momentum),
    "net.error_goal": (float, TrainConfig().error_goal),
    "net.max_epochs": (int, TrainConfig().max_epochs),
    "recognizer.gate": (_bool, True),
}


def parse_lines(lines, source="<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, text = (part.strip() for part in line.split("=", 1))
        values[key] = _parse_value(key, text, f"{source}:{lineno}")
    return values


def _parse_value(key, text, where):
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return SCHEMA[key][0](text)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from None


class Settings:
    """Resolved configuration with accessors for each module's config object."""

    def __init__(self, values: dict | None = None):
        self.values = {k: default for k, (_, default) in SCHEMA.items()}
        self.values.update(values or {})
        # validate eagerly so errors surface before any work starts
        try:
            self.detector()
            self.pipeline()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path=None, overrides=()) -> "Settings":
        values = {}
        path = path or os.environ.get(ENV_VAR)
        if path:
            try:
                with open(path) as fh:
                    values.update(parse_lines(fh, str(path)))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, text = (part.strip() for part in item.split("=", 1))
            values[key] = _parse_value(key, text, "--set")
        return cls(values)

    def __getitem__(self, key):
        return self.values[key]

    def detector(self) -> DetectorConfig:
        v = self.values
        return DetectorConfig(v["detector.threshold"], v["detector.orders"], v["detector.f_lo"],
                              v["detector.max_lag"], center_sigma=v["detector.center_sigma"])

    def preproc(self) -> PreprocConfig:
        v = self.values
        return PreprocConfig(v["preproc.filter_size"], v["preproc.stretch_low_pct"],
                             v["preproc.stretch_high_pct"], v["preproc.target_size"])

    def train(self) -> TrainConfig:
        v = self.values
        return TrainConfig(v["net.error_goal"], v["net.learning_rate"], v["net.momentum"],
                           v["net.max_epochs"], v["seed"])

    def pipeline(self) -> PipelineConfig:
        v = self.values
        cfg = PipelineConfig(self.preproc(), v["features.dct_keep"], v["features.pca_max"],
                             v["net.hidden"], self.train(), self.detector())
        if cfg.dct_keep < 1 or cfg.pca_max < 1 or cfg.hidden < 1:
            raise ValueError("dct_keep, pca_max and hidden must be positive")
        return cfg

    def dump(self) -> str:
        lines = []
        for key in SCHEMA:
            val = self.values[key]
            if isinstance(val, tuple):
                text = "x".join(map(str, val)) if key.endswith("target_size") else ",".join(map(str, val))
            elif val is None:
                text = "0"
            else:
                text = repr(val) if isinstance(val, float) else str(val).lower() if isinstance(val, bool) else str(val)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"
