"""Owned image model plus the pixel-level primitives everything else needs.

Images are 8-bit, 1- or 3-channel, row-major, and immutable once built.
Every transform here is a pure function: same input, same output, byte for
byte. That determinism is what makes whole experiment runs reproducible and
chain builds diffable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from io import BytesIO

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError
from scipy import ndimage


class DecodeError(ValueError):
    """An image container could not be decoded."""


def _round_half_up(a: np.ndarray) -> np.ndarray:
    # All pixel arithmetic rounds half-up and clamps to [0, 255].
    return np.clip(np.floor(np.asarray(a, dtype=np.float64) + 0.5), 0.0, 255.0).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit image: array of shape (h, w) for grayscale or (h, w, 3) for RGB."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValueError(f"image samples must be uint8, got {px.dtype}")
        if px.ndim == 3 and px.shape[2] == 1:
            px = px[:, :, 0]
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"image must be (h, w) or (h, w, 3), got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    def data(self) -> bytes:
        """Row-major samples, width * height * channels bytes."""
        return self.pixels.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and self.data() == other.data()

    def __hash__(self) -> int:
        return hash((self.pixels.shape, self.data()))

    def __repr__(self) -> str:
        return f"Image({self.width}x{self.height}, channels={self.channels})"


class FlipAxis(Enum):
    HORIZONTAL = "h"
    VERTICAL = "v"
    BOTH = "both"


class AttackKind(Enum):
    """One deliberate image transformation used to probe retrieval."""

    BLUR = "blur"
    ROTATE = "rotate"
    CROP = "crop"
    FLIP_H = "flip_h"
    FLIP_V = "flip_v"
    FLIP_BOTH = "flip_both"

    @property
    def family(self) -> str:
        """Suite family name: blur, rotate, crop, or flip."""
        return "flip" if self.name.startswith("FLIP") else self.value


@dataclass(frozen=True)
class AttackSpec:
    """One attack step: the kind, its strength parameter, and its ordinal in a suite.

    The parameter is a blur strength percent, a rotation in degrees, or a
    crop percent; it is unused for flips.
    """

    kind: AttackKind
    parameter: float
    step_index: int


# ---------------------------------------------------------------------------
# grayscale / resize


def to_grayscale(img: Image) -> Image:
    """BT.601 luma; grayscale input is returned unchanged."""
    if img.channels == 1:
        return img
    rgb = img.pixels.astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return Image(_round_half_up(luma))


@lru_cache(maxsize=64)
def _resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Weights mapping n_in samples to n_out along one axis.

    Area averaging when shrinking, linear interpolation when enlarging,
    identity when equal. Rows sum to 1.
    """
    w = np.zeros((n_out, n_in), dtype=np.float64)
    if n_out == n_in:
        np.fill_diagonal(w, 1.0)
    elif n_out < n_in:
        scale = n_in / n_out
        for j in range(n_out):
            lo, hi = j * scale, (j + 1) * scale
            for i in range(int(math.floor(lo)), int(math.ceil(hi))):
                w[j, i] = (min(hi, i + 1) - max(lo, i)) / scale
    else:
        scale = n_in / n_out
        for j in range(n_out):
            pos = min(max((j + 0.5) * scale - 0.5, 0.0), n_in - 1.0)
            i0 = int(math.floor(pos))
            i1 = min(i0 + 1, n_in - 1)
            f = pos - i0
            w[j, i0] += 1.0 - f
            w[j, i1] += f
    w.setflags(write=False)
    return w


def resize(img: Image, width: int, height: int) -> Image:
    """Resample to width x height; deterministic, channels independent."""
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be positive, got {width}x{height}")
    if width == img.width and height == img.height:
        return img
    wr = _resample_matrix(img.height, height)
    wc = _resample_matrix(img.width, width)
    px = img.pixels.astype(np.float64)
    if img.channels == 1:
        out = wr @ px @ wc.T
    else:
        out = np.stack([wr @ px[:, :, c] @ wc.T for c in range(3)], axis=-1)
    return Image(_round_half_up(out))


# ---------------------------------------------------------------------------
# DCT


@lru_cache(maxsize=16)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis matrix of size n x n (rows are basis vectors)."""
    k = np.arange(n, dtype=np.float64)[:, None]
    x = np.arange(n, dtype=np.float64)[None, :]
    m = np.cos(np.pi * (2.0 * x + 1.0) * k / (2.0 * n))
    m[0, :] *= math.sqrt(1.0 / n)
    m[1:, :] *= math.sqrt(2.0 / n)
    m.setflags(write=False)
    return m


def dct2(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a square matrix.

    The mean is transformed separately so a constant input yields an exactly
    zero AC block, not float noise around zero.
    """
    a = np.asarray(block, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dct2 requires a square matrix, got shape {a.shape}")
    n = a.shape[0]
    mean = a.mean()
    c = dct_matrix(n)
    out = c @ (a - mean) @ c.T
    out[0, 0] += n * mean
    return out


def idct2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct2`."""
    a = np.asarray(coeffs, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"idct2 requires a square matrix, got shape {a.shape}")
    c = dct_matrix(a.shape[0])
    return c.T @ a @ c


# ---------------------------------------------------------------------------
# attack transforms


def blur_kernel_size(strength_pct: float, width: int, height: int) -> int:
    """Kernel width for a blur strength: largest odd integer not above
    strength/100 of the shorter side, but never below 3."""
    k = int(math.floor(strength_pct / 100.0 * min(width, height)))
    if k % 2 == 0:
        k -= 1
    return max(k, 3)


def gaussian_blur(img: Image, strength_pct: float) -> Image:
    """Separable Gaussian blur with replicated borders; size is unchanged."""
    if not 0.0 < strength_pct < 100.0:
        raise ValueError(f"blur strength must be in (0, 100), got {strength_pct}")
    k = blur_kernel_size(strength_pct, img.width, img.height)
    sigma = 0.3 * ((k - 1) / 2.0 - 1.0) + 0.8
    xs = np.arange(k, dtype=np.float64) - (k - 1) / 2.0
    kernel = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = img.pixels.astype(np.float64)
    out = ndimage.correlate1d(out, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return Image(_round_half_up(out))


def rotate(img: Image, degrees: float, expand: bool = False) -> Image:
    """Rotate about the image center with bilinear sampling.

    The canvas keeps the input dimensions unless ``expand`` is set; samples
    falling outside the source are black.
    """
    rad = math.radians(degrees)
    cos_t, sin_t = math.cos(rad), math.sin(rad)
    h, w = img.height, img.width
    if expand:
        out_w = max(1, int(math.ceil(abs(w * cos_t) + abs(h * sin_t))))
        out_h = max(1, int(math.ceil(abs(w * sin_t) + abs(h * cos_t))))
    else:
        out_w, out_h = w, h
    cx_in, cy_in = (w - 1) / 2.0, (h - 1) / 2.0
    cx_out, cy_out = (out_w - 1) / 2.0, (out_h - 1) / 2.0

    yy, xx = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    rel_x = xx - cx_out
    rel_y = yy - cy_out
    # inverse mapping: rotate output coordinates back into the source frame
    sx = cos_t * rel_x + sin_t * rel_y + cx_in
    sy = -sin_t * rel_x + cos_t * rel_y + cy_in

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    px = img.pixels.astype(np.float64)
    if img.channels == 3:
        acc = np.zeros((out_h, out_w, 3), dtype=np.float64)
    else:
        acc = np.zeros((out_h, out_w), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            ix = x0 + dx
            iy = y0 + dy
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
            ixc = np.clip(ix, 0, w - 1)
            iyc = np.clip(iy, 0, h - 1)
            sample = px[iyc, ixc]
            w_eff = weight * valid
            if img.channels == 3:
                acc += sample * w_eff[:, :, None]
            else:
                acc += sample * w_eff
    return Image(_round_half_up(acc))


def crop(img: Image, pct: float, anchor: str = "center") -> Image:
    """Drop ``pct`` percent of each dimension, keeping the anchored region.

    The result is not resized back to the input resolution.
    """
    if not 0.0 < pct < 100.0:
        raise ValueError(f"crop percent must be in (0, 100), got {pct}")
    if anchor not in ("center", "topleft"):
        raise ValueError(f"crop anchor must be 'center' or 'topleft', got {anchor!r}")
    keep = 1.0 - pct / 100.0
    new_w = int(math.floor(img.width * keep + 0.5))
    new_h = int(math.floor(img.height * keep + 0.5))
    if new_w < 1 or new_h < 1:
        raise ValueError(f"crop of {pct}% reduces {img.width}x{img.height} below 1 pixel")
    if anchor == "center":
        left = (img.width - new_w) // 2
        top = (img.height - new_h) // 2
    else:
        left = top = 0
    return Image(img.pixels[top : top + new_h, left : left + new_w].copy())


def flip(img: Image, axis: FlipAxis) -> Image:
    """Mirror columns (horizontal), rows (vertical), or both."""
    px = img.pixels
    if axis in (FlipAxis.HORIZONTAL, FlipAxis.BOTH):
        px = np.flip(px, axis=1)
    if axis in (FlipAxis.VERTICAL, FlipAxis.BOTH):
        px = np.flip(px, axis=0)
    return Image(np.ascontiguousarray(px))


_FLIP_AXIS_FOR_KIND = {
    AttackKind.FLIP_H: FlipAxis.HORIZONTAL,
    AttackKind.FLIP_V: FlipAxis.VERTICAL,
    AttackKind.FLIP_BOTH: FlipAxis.BOTH,
}


def apply_attack(
    img: Image,
    spec: AttackSpec,
    *,
    crop_anchor: str = "center",
    rotate_expand: bool = False,
) -> Image:
    """Apply one attack step to an image."""
    if spec.kind is AttackKind.BLUR:
        return gaussian_blur(img, spec.parameter)
    if spec.kind is AttackKind.ROTATE:
        return rotate(img, spec.parameter, expand=rotate_expand)
    if spec.kind is AttackKind.CROP:
        return crop(img, spec.parameter, anchor=crop_anchor)
    return flip(img, _FLIP_AXIS_FOR_KIND[spec.kind])


# ---------------------------------------------------------------------------
# containers: PNG via Pillow, NetPBM (P5/P6) parsed here


def decode_image(data: bytes) -> Image:
    """Decode PNG or binary NetPBM bytes into an 8-bit 1- or 3-channel image."""
    if data[:2] in (b"P5", b"P6"):
        return _decode_netpbm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(data)
    raise DecodeError(f"unsupported container (leading bytes {data[:8]!r})")


def encode_image(img: Image, fmt: str = "png") -> bytes:
    """Encode losslessly as png, pgm (grayscale), or ppm (RGB)."""
    fmt = fmt.lower()
    if fmt == "png":
        pil = _PILImage.fromarray(img.pixels, mode="L" if img.channels == 1 else "RGB")
        buf = BytesIO()
        pil.save(buf, format="PNG")
        return buf.getvalue()
    if fmt == "pgm":
        if img.channels != 1:
            raise ValueError("pgm holds grayscale only; convert or use ppm")
        return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.data()
    if fmt == "ppm":
        if img.channels != 3:
            raise ValueError("ppm holds RGB only; use pgm for grayscale")
        return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.data()
    raise ValueError(f"unsupported format {fmt!r} (expected png, pgm, or ppm)")


def _decode_png(data: bytes) -> Image:
    try:
        pil = _PILImage.open(BytesIO(data))
        pil.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"corrupt PNG: {exc}") from exc
    if pil.mode not in ("L", "RGB"):
        pil = pil.convert("RGB" if pil.mode not in ("1", "I", "I;16") else "L")
    arr = np.asarray(pil)
    if arr.dtype != np.uint8:
        arr = np.clip(arr, 0, 255).astype(np.uint8)
    return Image(arr)


def _decode_netpbm(data: bytes) -> Image:
    magic = data[:2]
    channels = 1 if magic == b"P5" else 3
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise DecodeError(f"unterminated comment at offset {pos}")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise DecodeError(f"expected integer in header at offset {start}, got {token!r}")
        fields.append(int(token))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DecodeError(f"invalid dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise DecodeError(f"unsupported maxval {maxval} (8-bit only)")
    pos += 1  # exactly one whitespace byte separates header from raster
    expected = width * height * channels
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise DecodeError(
            f"raster truncated at offset {pos + len(raster)}: "
            f"expected {expected} bytes, got {len(raster)}"
        )
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(
        (height, width) if channels == 1 else (height, width, 3)
    )
    return Image(arr.copy())
