"""Deterministic synthetic stand-in for the classic 12-image test set.

Each image is a procedurally generated 256x256 RGB scene named after one of
the standard grayscale test pictures. The scenes are built from tilted
gradients, off-center blobs, and band-limited texture so that they are
mutually very distinct, survive heavy blurring (large-scale structure
dominates), keep their salient content near the center (crops stay
recognizable), and are asymmetric under horizontal and vertical mirroring.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .imagecore import Image, _round_half_up

DATASET_STEMS = (
    "cameraman",
    "house",
    "lake",
    "lena",
    "livingroom",
    "mandrill",
    "peppers",
    "pirate",
    "plane",
    "walk_bridge",
    "woman_blonde",
    "woman_darkhair",
)


def _seed_for(stem: str) -> int:
    return int.from_bytes(hashlib.sha256(stem.encode()).digest()[:4], "big")


def _smooth_noise(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    """Band-limited noise: coarse random grid blown up bilinearly."""
    coarse = rng.standard_normal((cells, cells))
    xs = np.linspace(0, cells - 1, size)
    i0 = np.floor(xs).astype(int)
    i1 = np.minimum(i0 + 1, cells - 1)
    f = xs - i0
    rows = coarse[i0][:, i0] * np.outer(1 - f, 1 - f)
    rows += coarse[i0][:, i1] * np.outer(1 - f, f)
    rows += coarse[i1][:, i0] * np.outer(f, 1 - f)
    rows += coarse[i1][:, i1] * np.outer(f, f)
    return rows


def generate_image(stem: str, size: int = 256) -> Image:
    """One synthetic scene, fully determined by its name and size."""
    rng = np.random.default_rng(_seed_for(stem))
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    xn = xs / (size - 1)
    yn = ys / (size - 1)

    # tilted base gradient at a deliberately off-axis angle
    angle = np.deg2rad(rng.uniform(15.0, 75.0) * rng.choice([-1.0, 1.0]))
    base = np.cos(angle) * xn + np.sin(angle) * yn
    field = 40.0 * (base - base.mean())

    # a couple of slow sinusoidal waves in random directions
    for _ in range(2):
        freq = rng.uniform(0.7, 2.2)
        theta = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2 * np.pi)
        direction = np.cos(theta) * xn + np.sin(theta) * yn
        field += rng.uniform(15.0, 30.0) * np.sin(2 * np.pi * freq * direction + phase)

    # large blobs biased toward the center so crops keep them
    for _ in range(rng.integers(3, 5)):
        cx = rng.uniform(0.25, 0.75) * size
        cy = rng.uniform(0.25, 0.75) * size
        sigma = rng.uniform(25.0, 60.0)
        amp = rng.uniform(35.0, 70.0) * rng.choice([-1.0, 1.0])
        field += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma * sigma))

    # one tilted bright bar for a strong, orientation-bearing edge
    bar_angle = np.deg2rad(rng.uniform(20.0, 70.0) * rng.choice([-1.0, 1.0]))
    bar_offset = rng.uniform(-0.15, 0.15)
    bar_pos = np.cos(bar_angle) * (xn - 0.5) + np.sin(bar_angle) * (yn - 0.5) - bar_offset
    field += rng.uniform(25.0, 45.0) * np.exp(-(bar_pos**2) / (2 * 0.06**2))

    # mild mid-frequency texture for hash richness
    field += 10.0 * _smooth_noise(rng, size, 24)

    # normalize to a consistent brightness envelope
    field -= field.mean()
    std = field.std()
    if std > 0:
        field *= 46.0 / std
    field += 128.0

    # distinct hue: fixed per-channel gains and offsets around the field
    gains = rng.uniform(0.75, 1.1, size=3)
    offsets = rng.uniform(-28.0, 28.0, size=3)
    channels = [field * g + o for g, o in zip(gains, offsets)]
    return Image(_round_half_up(np.stack(channels, axis=-1)))


def write_default_dataset(out_dir: str | Path, size: int = 256) -> list[Path]:
    """Write the 12 scenes as PNGs; returns the paths in lexicographic order."""
    from .imagecore import encode_image

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem in DATASET_STEMS:
        path = root / f"{stem}.png"
        path.write_bytes(encode_image(generate_image(stem, size), "png"))
        paths.append(path)
    return sorted(paths)
