"""Run configuration: a dataclass with a key=value file loader.

Recognized keys: difficulty, crop.anchor, rotate.expand, replicas,
classifier.* thresholds, and testset (comma-separated image stems).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

DEFAULT_TESTSET = ("house", "lake", "mandrill", "peppers", "woman_blonde")


@dataclass(frozen=True)
class ClassifierThresholds:
    flip_low: float = 0.05       # "both axes" score that marks a flip triple
    blur_max: float = 0.15       # ceiling for a flat blur curve
    flat_range: float = 0.08     # range below this is flat, at or above is a curve
    monotone_tol: float = 0.02   # allowed backslide while still "non-decreasing"
    error_rate: float = 0.5      # wrong-retrieval rate that suggests rotation


@dataclass(frozen=True)
class RunConfig:
    difficulty: int = 4
    crop_anchor: str = "center"          # or "topleft"
    rotate_expand: bool = False
    replicas: str = "shared"             # or "deep"
    classifier: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    testset: tuple[str, ...] = DEFAULT_TESTSET


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"config key {key}: expected a boolean, got {raw!r}")


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    thresholds = dict(
        flip_low=cfg.classifier.flip_low,
        blur_max=cfg.classifier.blur_max,
        flat_range=cfg.classifier.flat_range,
        monotone_tol=cfg.classifier.monotone_tol,
        error_rate=cfg.classifier.error_rate,
    )
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key=value, got {stripped!r}")
        key, value = key.strip(), value.strip()
        if key == "difficulty":
            cfg = replace(cfg, difficulty=int(value))
        elif key == "crop.anchor":
            if value not in ("center", "topleft"):
                raise ValueError(f"config line {lineno}: bad crop.anchor {value!r}")
            cfg = replace(cfg, crop_anchor=value)
        elif key == "rotate.expand":
            cfg = replace(cfg, rotate_expand=_parse_bool(value, key))
        elif key == "replicas":
            if value not in ("shared", "deep"):
                raise ValueError(f"config line {lineno}: bad replicas {value!r}")
            cfg = replace(cfg, replicas=value)
        elif key == "testset":
            stems = tuple(s.strip() for s in value.split(",") if s.strip())
            cfg = replace(cfg, testset=stems)
        elif key.startswith("classifier."):
            name = key[len("classifier.") :]
            if name not in thresholds:
                raise ValueError(f"config line {lineno}: unknown threshold {key!r}")
            thresholds[name] = float(value)
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    return replace(cfg, classifier=ClassifierThresholds(**thresholds))


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
