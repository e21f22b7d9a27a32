"""Proof-of-work ledger of images and their perceptual hashes.

Each block links to the previous block's SHA-256 hash, carries a content
digest of the image file plus one serialized perceptual hash per algorithm,
and is mined until its own hash meets the difficulty prefix. Builds are
deterministic: mining takes the minimal qualifying nonce and blocks carry
no timestamps, so the same inputs always produce the same chain bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .phash import ALGORITHMS, AlgorithmId, BitHash, RadialDigest, serialize_hash

ZERO32 = bytes(32)
DEFAULT_DIFFICULTY = 4
_MAX_NONCE = 2**64 - 1

CHAIN_MAGIC = "imgchain v1"


class MiningError(RuntimeError):
    """The nonce space was exhausted (practically unreachable)."""


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    image_ref: str
    content_digest: bytes
    perceptual_hashes: Mapping[AlgorithmId, str]
    nonce: int = 0
    hash: bytes = b""


@dataclass(frozen=True)
class ChainVerdict:
    ok: bool
    block_index: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class Chain:
    blocks: list[Block] = field(default_factory=list)
    difficulty: int = DEFAULT_DIFFICULTY
    algorithms: tuple[AlgorithmId, ...] = ALGORITHMS

    @property
    def tip(self) -> Block:
        return self.blocks[-1]


def byte_to_hex(data: bytes) -> str:
    """Lowercase hex, two characters per byte."""
    return data.hex()


def hex_to_byte(text: str) -> bytes:
    """Inverse of :func:`byte_to_hex`; rejects odd length and uppercase."""
    if len(text) % 2 != 0:
        raise ValueError(f"hex string has odd length {len(text)}")
    if text != text.lower():
        raise ValueError("hex string must be lowercase")
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise ValueError(f"invalid hex string {text!r}") from None


def _joined_hashes(block: Block) -> str:
    return ",".join(
        block.perceptual_hashes[a] for a in ALGORITHMS if a in block.perceptual_hashes
    )


def block_preimage(block: Block) -> str:
    """The exact string hashed for a block, nonce included.

    Layout: hex(prevHash) ':' hex(contentDigest) ':' comma-joined hash
    serializations in precedence order ':' decimal nonce.
    """
    return (
        f"{byte_to_hex(block.prev_hash)}:{byte_to_hex(block.content_digest)}"
        f":{_joined_hashes(block)}:{block.nonce}"
    )


def calculate_hash(block: Block) -> bytes:
    """SHA-256 of the block preimage; the stored hash field is ignored."""
    return hashlib.sha256(block_preimage(block).encode("utf-8")).digest()


def meets_difficulty(digest: bytes, difficulty: int) -> bool:
    """True when the hex form of the digest starts with that many zeros."""
    full, nibble = divmod(difficulty, 2)
    if digest[:full] != bytes(full):
        return False
    return nibble == 0 or digest[full] < 16


def mine_block(block: Block, difficulty: int) -> Block:
    """Return the block at the smallest nonce meeting the difficulty."""
    if difficulty < 0:
        raise ValueError(f"difficulty must be non-negative, got {difficulty}")
    base = (
        f"{byte_to_hex(block.prev_hash)}:{byte_to_hex(block.content_digest)}"
        f":{_joined_hashes(block)}:"
    ).encode("utf-8")
    nonce = 0
    while nonce <= _MAX_NONCE:
        digest = hashlib.sha256(base + str(nonce).encode("ascii")).digest()
        if meets_difficulty(digest, difficulty):
            return replace(block, nonce=nonce, hash=digest)
        nonce += 1
    raise MiningError("exhausted 64-bit nonce space")


def make_genesis(difficulty: int = DEFAULT_DIFFICULTY) -> Block:
    """The fixed first block: zero prev-hash, no image, no perceptual hashes."""
    genesis = Block(
        index=0,
        prev_hash=ZERO32,
        image_ref="",
        content_digest=ZERO32,
        perceptual_hashes={},
    )
    return mine_block(genesis, difficulty)


def new_chain(
    difficulty: int = DEFAULT_DIFFICULTY,
    algorithms: tuple[AlgorithmId, ...] = ALGORITHMS,
) -> Chain:
    return Chain(blocks=[make_genesis(difficulty)], difficulty=difficulty, algorithms=algorithms)


def append_image(
    chain: Chain,
    image_ref: str,
    image_bytes: bytes,
    hashes: Mapping[AlgorithmId, BitHash | RadialDigest | str],
) -> Chain:
    """Mine and append a block for one image; the chain must verify first."""
    missing = set(chain.algorithms) - set(hashes)
    if missing:
        names = ", ".join(sorted(a.value for a in missing))
        raise ValueError(f"missing perceptual hashes for: {names}")
    extra = set(hashes) - set(chain.algorithms)
    if extra:
        names = ", ".join(sorted(a.value for a in extra))
        raise ValueError(f"hashes for algorithms outside the chain's set: {names}")
    verdict = verify_chain(chain)
    if not verdict:
        raise ValueError(
            f"refusing to append to invalid chain: block {verdict.block_index} {verdict.reason}"
        )
    serialized = {
        a: h if isinstance(h, str) else serialize_hash(h) for a, h in hashes.items()
    }
    block = Block(
        index=len(chain.blocks),
        prev_hash=chain.tip.hash,
        image_ref=image_ref,
        content_digest=hashlib.sha256(image_bytes).digest(),
        perceptual_hashes=serialized,
    )
    chain.blocks.append(mine_block(block, chain.difficulty))
    return chain


def verify_chain(chain: Chain) -> ChainVerdict:
    """Check every block in order; the verdict carries the first failure."""
    for i, block in enumerate(chain.blocks):
        if block.index != i:
            return ChainVerdict(False, i, "index-mismatch")
        if calculate_hash(block) != block.hash:
            return ChainVerdict(False, i, "hash-mismatch")
        expected_prev = ZERO32 if i == 0 else chain.blocks[i - 1].hash
        if block.prev_hash != expected_prev:
            return ChainVerdict(False, i, "link-mismatch")
        if not meets_difficulty(block.hash, chain.difficulty):
            return ChainVerdict(False, i, "difficulty-violation")
        if i > 0 and set(block.perceptual_hashes) != set(chain.algorithms):
            return ChainVerdict(False, i, "algorithm-set-mismatch")
    return ChainVerdict(True)


# ---------------------------------------------------------------------------
# persistence: line-oriented text, bit-exact so two builds diff cleanly


def chain_to_text(chain: Chain) -> str:
    algos = ",".join(a.value for a in chain.algorithms)
    lines = [f"{CHAIN_MAGIC} difficulty={chain.difficulty} algos={algos}"]
    for b in chain.blocks:
        if "|" in b.image_ref or "\n" in b.image_ref:
            raise ValueError(f"image ref {b.image_ref!r} cannot contain '|' or newline")
        lines.append(
            f"{b.index}|{byte_to_hex(b.prev_hash)}|{b.image_ref}"
            f"|{byte_to_hex(b.content_digest)}|{_joined_hashes(b)}"
            f"|{b.nonce}|{byte_to_hex(b.hash)}"
        )
    return "\n".join(lines) + "\n"


def chain_from_text(text: str) -> Chain:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty chain file")
    header = lines[0]
    if not header.startswith(CHAIN_MAGIC + " "):
        raise ValueError(f"bad chain header: {header!r}")
    fields = dict(part.split("=", 1) for part in header[len(CHAIN_MAGIC) + 1 :].split(" "))
    try:
        difficulty = int(fields["difficulty"])
        algorithms = tuple(AlgorithmId(name) for name in fields["algos"].split(","))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad chain header: {header!r}") from exc
    blocks = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("|")
        if len(parts) != 7:
            raise ValueError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        idx, prev_hex, ref, digest_hex, hashes_field, nonce_str, hash_hex = parts
        try:
            hashes: dict[AlgorithmId, str] = {}
            for item in hashes_field.split(",") if hashes_field else []:
                name = item.partition(":")[0]
                hashes[AlgorithmId(name)] = item
            blocks.append(
                Block(
                    index=int(idx),
                    prev_hash=hex_to_byte(prev_hex),
                    image_ref=ref,
                    content_digest=hex_to_byte(digest_hex),
                    perceptual_hashes=hashes,
                    nonce=int(nonce_str),
                    hash=hex_to_byte(hash_hex),
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if not blocks:
        raise ValueError("chain file has no blocks")
    return Chain(blocks=blocks, difficulty=difficulty, algorithms=algorithms)


def save_chain(chain: Chain, path: str | Path) -> None:
    Path(path).write_bytes(chain_to_text(chain).encode("utf-8"))


def load_chain(path: str | Path) -> Chain:
    return chain_from_text(Path(path).read_text(encoding="utf-8"))
