"""Five perceptual hash algorithms and their comparison metrics.

Four algorithms emit fixed-length bit vectors compared by Hamming distance;
the radial-variance algorithm emits a 40-byte digest compared by peak
cross-correlation. All scores are normalized to [0, 1], lower meaning more
similar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .imagecore import Image, dct2, dct_matrix, resize, to_grayscale

NormalizedScore = float


class AlgorithmId(Enum):
    """The five algorithms, in their fixed precedence order."""

    AVERAGE = "AverageHash"
    PHASH = "PHash"
    BLOCK_MEAN = "BlockMeanHash"
    MARR_HILDRETH = "MarrHildrethHash"
    RADIAL_VARIANCE = "RadialVarianceHash"


ALGORITHMS: tuple[AlgorithmId, ...] = tuple(AlgorithmId)

PRECEDENCE: dict[AlgorithmId, int] = {a: i for i, a in enumerate(ALGORITHMS)}

BIT_LENGTHS: dict[AlgorithmId, int] = {
    AlgorithmId.AVERAGE: 64,
    AlgorithmId.PHASH: 64,
    AlgorithmId.BLOCK_MEAN: 256,
    AlgorithmId.MARR_HILDRETH: 576,
}

RADIAL_FEATURES = 40
_RADIAL_ANGLES = 180
_LOG_KERNEL_SIZE = 15
_LOG_SIGMA = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class BitHash:
    """Fixed-length bit vector, packed big-endian (first bit = MSB of byte 0)."""

    algo: AlgorithmId
    bits: bytes

    def __post_init__(self):
        if self.algo not in BIT_LENGTHS:
            raise ValueError(f"{self.algo.value} does not produce a bit hash")
        expected = BIT_LENGTHS[self.algo] // 8
        if len(self.bits) != expected:
            raise ValueError(
                f"{self.algo.value} needs {expected} bytes, got {len(self.bits)}"
            )

    @property
    def bit_length(self) -> int:
        return BIT_LENGTHS[self.algo]


@dataclass(frozen=True)
class RadialDigest:
    """40 radial-variance features quantized to one byte each."""

    features: bytes

    algo = AlgorithmId.RADIAL_VARIANCE

    def __post_init__(self):
        if len(self.features) != RADIAL_FEATURES:
            raise ValueError(f"radial digest needs {RADIAL_FEATURES} bytes, got {len(self.features)}")


def _pack_bits(bits: np.ndarray, algo: AlgorithmId) -> BitHash:
    return BitHash(algo, np.packbits(bits.astype(np.uint8)).tobytes())


# ---------------------------------------------------------------------------
# the algorithms


def average_hash(img: Image) -> BitHash:
    """8x8 mean threshold: bit set where the pixel exceeds the mean."""
    small = resize(to_grayscale(img), 8, 8).pixels.astype(np.float64)
    return _pack_bits((small > small.mean()).flatten(), AlgorithmId.AVERAGE)


def p_hash(img: Image) -> BitHash:
    """Sign pattern of the 8x8 low-frequency DCT block of a 32x32 thumbnail.

    The threshold is the mean of those 64 coefficients with the DC term
    left out, so overall brightness does not dominate the hash.
    """
    small = resize(to_grayscale(img), 32, 32).pixels
    coeffs = dct2(small)[:8, :8].flatten()
    mean = coeffs[1:].mean()
    return _pack_bits(coeffs > mean, AlgorithmId.PHASH)


def block_mean_hash(img: Image) -> BitHash:
    """256 block means of a 256x256 thumbnail thresholded at their median."""
    small = resize(to_grayscale(img), 256, 256).pixels.astype(np.float64)
    means = small.reshape(16, 16, 16, 16).mean(axis=(1, 3))
    return _pack_bits((means > np.median(means)).flatten(), AlgorithmId.BLOCK_MEAN)


def _log_kernel() -> np.ndarray:
    half = (_LOG_KERNEL_SIZE - 1) / 2.0
    xs = np.arange(_LOG_KERNEL_SIZE, dtype=np.float64) - half
    xx, yy = np.meshgrid(xs, xs)
    r2 = xx * xx + yy * yy
    s2 = _LOG_SIGMA * _LOG_SIGMA
    k = (r2 / (2.0 * s2) - 1.0) * np.exp(-r2 / (2.0 * s2))
    return k - k.mean()  # zero net response to flat regions


_LOG = _log_kernel()
_LOG.setflags(write=False)


def marr_hildreth_hash(img: Image) -> BitHash:
    """Laplacian-of-Gaussian response of a 512x512 thumbnail, summed over a
    24x24 block grid and thresholded at the grid mean.

    The response is padded by edge replication to 528x528 so all 576 blocks
    cover the same area; subtracting the thumbnail mean first keeps a flat
    image at an exactly-zero response.
    """
    small = resize(to_grayscale(img), 512, 512).pixels.astype(np.float64)
    small -= small.mean()
    response = ndimage.correlate(small, _LOG, mode="nearest")
    padded = np.pad(response, 8, mode="edge")
    sums = padded.reshape(24, 22, 24, 22).sum(axis=(1, 3))
    return _pack_bits((sums > sums.mean()).flatten(), AlgorithmId.MARR_HILDRETH)


def radial_variance_hash(img: Image) -> RadialDigest:
    """Variance of nearest-pixel line projections at 180 angles through the
    center, compacted to 40 DCT coefficients and min-max quantized.

    Samples are mirrored through the center index-wise, so an image and its
    180-degree rotation produce the same sample multiset per line and hence
    bit-identical digests. Sums are integer so ordering cannot perturb them.
    """
    gray = to_grayscale(img).pixels
    h, w = gray.shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    steps = np.arange(int(math.ceil(math.hypot(w, h) / 2.0)) + 1, dtype=np.float64)
    variances = np.empty(_RADIAL_ANGLES, dtype=np.float64)
    for angle in range(_RADIAL_ANGLES):
        theta = math.radians(angle)
        dx, dy = math.cos(theta), math.sin(theta)
        ix = np.floor(cx + steps * dx + 0.5).astype(np.int64)
        iy = np.floor(cy + steps * dy + 0.5).astype(np.int64)
        keep = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        ix, iy = ix[keep], iy[keep]
        v = gray[iy, ix].astype(np.int64)
        vm = gray[h - 1 - iy, w - 1 - ix].astype(np.int64)
        n = 2 * v.size
        s1 = int(v.sum()) + int(vm.sum())
        s2 = int((v * v).sum()) + int((vm * vm).sum())
        variances[angle] = (s2 - (s1 * s1) / n) / n
    coeffs = dct_matrix(_RADIAL_ANGLES)[:RADIAL_FEATURES] @ variances
    lo, hi = coeffs.min(), coeffs.max()
    if hi == lo:
        quantized = np.zeros(RADIAL_FEATURES, dtype=np.uint8)
    else:
        quantized = np.floor((coeffs - lo) / (hi - lo) * 255.0 + 0.5).astype(np.uint8)
    return RadialDigest(quantized.tobytes())


_HASHERS = {
    AlgorithmId.AVERAGE: average_hash,
    AlgorithmId.PHASH: p_hash,
    AlgorithmId.BLOCK_MEAN: block_mean_hash,
    AlgorithmId.MARR_HILDRETH: marr_hildreth_hash,
    AlgorithmId.RADIAL_VARIANCE: radial_variance_hash,
}


def hash_image(algo: AlgorithmId, img: Image) -> BitHash | RadialDigest:
    """Hash an image with one named algorithm."""
    return _HASHERS[algo](img)


# ---------------------------------------------------------------------------
# comparison


def bit_hamming(a: bytes, b: bytes) -> int:
    """Population count of the XOR of two equal-length bit strings."""
    if len(a) != len(b):
        raise ValueError(f"bit strings differ in length: {len(a)} vs {len(b)} bytes")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).bit_count()


def hamming_distance(a: BitHash, b: BitHash) -> int:
    """Number of differing bits between two hashes of the same algorithm."""
    if a.algo is not b.algo:
        raise ValueError(f"cannot compare {a.algo.value} with {b.algo.value}")
    return bit_hamming(a.bits, b.bits)


def normalize(value: float, max_value: float) -> NormalizedScore:
    """Scale a raw distance into [0, 1] by its maximum possible value."""
    if max_value <= 0:
        raise ValueError(f"max must be positive, got {max_value}")
    if not 0 <= value <= max_value:
        raise ValueError(f"value {value} outside [0, {max_value}]")
    return value / max_value


def radial_distance(a: RadialDigest, b: RadialDigest) -> NormalizedScore:
    """1 minus the peak Pearson correlation over all 40 circular shifts,
    clamped to [0, 1]."""
    if a.features == b.features:
        return 0.0
    x = np.frombuffer(a.features, dtype=np.uint8).astype(np.float64)
    y = np.frombuffer(b.features, dtype=np.uint8).astype(np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
    if denom == 0.0:
        return 1.0  # at least one flat digest and the bytes differ
    peak = max(float(xc @ np.roll(yc, k)) for k in range(RADIAL_FEATURES)) / denom
    return min(max(1.0 - peak, 0.0), 1.0)


def compare(algo: AlgorithmId, a, b) -> NormalizedScore:
    """Normalized dissimilarity of two hashes produced by ``algo``."""
    if a.algo is not algo or b.algo is not algo:
        raise ValueError(f"hashes were not produced by {algo.value}")
    if algo is AlgorithmId.RADIAL_VARIANCE:
        return radial_distance(a, b)
    return normalize(hamming_distance(a, b), a.bit_length)


# ---------------------------------------------------------------------------
# serialization: "<AlgorithmName>:<lowercase hex>" used in logs and preimages


def serialize_hash(h: BitHash | RadialDigest) -> str:
    payload = h.bits if isinstance(h, BitHash) else h.features
    return f"{h.algo.value}:{payload.hex()}"


def parse_hash(text: str) -> BitHash | RadialDigest:
    name, sep, payload = text.partition(":")
    if not sep:
        raise ValueError(f"hash serialization missing ':' separator: {text!r}")
    try:
        algo = AlgorithmId(name)
    except ValueError:
        raise ValueError(f"unknown algorithm name {name!r}") from None
    try:
        raw = bytes.fromhex(payload)
    except ValueError:
        raise ValueError(f"invalid hex payload in {text!r}") from None
    if algo is AlgorithmId.RADIAL_VARIANCE:
        return RadialDigest(raw)
    return BitHash(algo, raw)
