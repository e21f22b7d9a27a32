"""Simulated device network: one perceptual-hash algorithm per device, one
chain replica per device, minimum-score aggregation across devices.

A query hashes the submitted image on every device, scans each replica for
the most similar enrolled image, and reports the device with the lowest
normalized score; ties fall to algorithm precedence so results never depend
on scheduling.
"""

from __future__ import annotations

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import chain as chainmod
from .chain import Chain, chain_to_text, new_chain, verify_chain
from .imagecore import DecodeError, Image, decode_image
from .phash import ALGORITHMS, PRECEDENCE, AlgorithmId, compare, hash_image, parse_hash


class IntegrityError(RuntimeError):
    """A replica failed verification or replicas diverged."""


@dataclass
class Device:
    id: int
    algo: AlgorithmId
    replica: Chain


@dataclass(frozen=True)
class DeviceResult:
    algo: AlgorithmId
    found_block: int
    score: float
    image_ref: str


@dataclass
class QueryReport:
    per_device: list[DeviceResult]
    winner: DeviceResult
    correct: bool | None = None


@dataclass(frozen=True)
class ReplicaVerdict:
    ok: bool
    device_id: int | None = None
    block_index: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def build_network(
    dataset_dir: str | Path,
    difficulty: int = chainmod.DEFAULT_DIFFICULTY,
    algo_assignment: tuple[AlgorithmId, ...] | None = None,
    replicas: str = "shared",
) -> list[Device]:
    """Build one chain from a directory of images and replicate it to devices.

    Files are ingested in lexicographic filename order so block indices are
    stable. With ``replicas="shared"`` all devices hold the same immutable
    snapshot; ``"deep"`` gives each device its own copy, which divergence
    tests need.
    """
    if algo_assignment is None:
        algo_assignment = ALGORITHMS
    if set(algo_assignment) != set(ALGORITHMS) or len(algo_assignment) != len(ALGORITHMS):
        raise ValueError("algorithm assignment must cover all five algorithms exactly once")
    if replicas not in ("shared", "deep"):
        raise ValueError(f"replicas must be 'shared' or 'deep', got {replicas!r}")

    root = Path(dataset_dir)
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise ValueError(f"dataset directory {root} contains no files")

    ledger = new_chain(difficulty)
    for path in files:
        raw = path.read_bytes()
        try:
            img = decode_image(raw)
        except DecodeError as exc:
            raise DecodeError(f"{path}: {exc}") from exc
        hashes = {algo: hash_image(algo, img) for algo in ledger.algorithms}
        chainmod.append_image(ledger, str(path), raw, hashes)

    return [
        Device(id=i, algo=algo, replica=ledger if replicas == "shared" else copy.deepcopy(ledger))
        for i, algo in enumerate(algo_assignment)
    ]


def devices_from_chain(ledger: Chain) -> list[Device]:
    """Wrap an existing chain (e.g. loaded from disk) in the standard devices."""
    return [Device(id=i, algo=algo, replica=ledger) for i, algo in enumerate(ALGORITHMS)]


def device_scan(device: Device, img: Image) -> DeviceResult:
    """Find the enrolled block most similar to an image under one algorithm.

    The replica is verified first; equal scores keep the earliest block.
    """
    verdict = verify_chain(device.replica)
    if not verdict:
        raise IntegrityError(
            f"device {device.id} replica invalid: block {verdict.block_index} {verdict.reason}"
        )
    if len(device.replica.blocks) < 2:
        raise ValueError("replica holds no image blocks to scan")
    query_hash = hash_image(device.algo, img)
    best: DeviceResult | None = None
    for block in device.replica.blocks[1:]:
        stored = parse_hash(block.perceptual_hashes[device.algo])
        score = compare(device.algo, query_hash, stored)
        if best is None or score < best.score:
            best = DeviceResult(device.algo, block.index, score, block.image_ref)
    assert best is not None
    return best


def _check_divergence(devices: list[Device]) -> None:
    if len({id(d.replica) for d in devices}) == 1:
        return  # one shared snapshot cannot diverge
    reference = chain_to_text(devices[0].replica)
    for device in devices[1:]:
        if chain_to_text(device.replica) != reference:
            raise IntegrityError(f"device {device.id} replica diverges from device {devices[0].id}")


def query(devices: list[Device], img: Image, max_workers: int | None = None) -> QueryReport:
    """Scan every device and aggregate by minimum score.

    Results are reported in algorithm precedence order and the winner is the
    precedence-first device among the score minimizers, so the report is
    identical for any execution order. ``max_workers`` fans the scans out to
    a thread pool; scans share no mutable state.
    """
    if not devices:
        raise ValueError("query needs at least one device")
    if len(devices) > 1:
        _check_divergence(devices)
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda d: device_scan(d, img), devices))
    else:
        results = [device_scan(d, img) for d in devices]
    results.sort(key=lambda r: PRECEDENCE[r.algo])
    winner = results[0]
    for r in results[1:]:
        if r.score < winner.score:
            winner = r
    return QueryReport(per_device=results, winner=winner)


def verify_replicas(devices: list[Device]) -> ReplicaVerdict:
    """Valid iff all replicas serialize identically and each verifies."""
    if len(devices) < 2:
        raise ValueError("replica consistency needs at least two devices")
    reference_lines = chain_to_text(devices[0].replica).splitlines()
    for device in devices[1:]:
        lines = chain_to_text(device.replica).splitlines()
        if lines != reference_lines:
            first_diff = next(
                (i for i, (a, b) in enumerate(zip(reference_lines, lines)) if a != b),
                min(len(reference_lines), len(lines)),
            )
            return ReplicaVerdict(
                ok=False,
                device_id=device.id,
                block_index=max(first_diff - 1, 0),  # line 0 is the header
                reason="replica-divergence",
            )
    for device in devices:
        verdict = verify_chain(device.replica)
        if not verdict:
            return ReplicaVerdict(
                ok=False,
                device_id=device.id,
                block_index=verdict.block_index,
                reason=verdict.reason,
            )
    return ReplicaVerdict(ok=True)
