"""Benchmark harness: attack-suite generation, bulk queries, result logs,
CSV emission, and the attack-signature classifier.

A suite is the set of attacked variants of one image under one attack
family: nine strengths for blur, rotation, and crop, three axes for flip.
Logs follow a fixed grammar with a shipped parser that inverts the writer
exactly; both outputs are byte-deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from .config import ClassifierThresholds
from .imagecore import AttackKind, AttackSpec, Image, apply_attack, decode_image, encode_image
from .network import Device, QueryReport, query
from .phash import ALGORITHMS, AlgorithmId

BLUR_STRENGTHS = (5.0, 15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0, 85.0)
ROTATE_DEGREES = tuple(float(d) for d in range(10, 91, 10))
CROP_PERCENTS = tuple(float(p) for p in range(10, 91, 10))
FLIP_KINDS = (AttackKind.FLIP_H, AttackKind.FLIP_V, AttackKind.FLIP_BOTH)

ATTACK_FAMILIES = ("blur", "rotate", "crop", "flip")


@dataclass(frozen=True)
class TestRecord:
    test_name: str
    report: QueryReport
    ground_truth_block: int
    attack: AttackSpec


@dataclass(frozen=True)
class SuiteResult:
    stem: str
    attack_family: str
    records: tuple[TestRecord, ...]


@dataclass(frozen=True)
class AttackSignature:
    label: str  # Blur, Crop, Rotation, Flip, or Unknown
    score_range: float
    slope: float
    error_rate: float


def canonical_specs(family: str) -> list[AttackSpec]:
    """The fixed attack suite for one family, steps numbered from 1."""
    if family == "blur":
        return [AttackSpec(AttackKind.BLUR, p, i + 1) for i, p in enumerate(BLUR_STRENGTHS)]
    if family == "rotate":
        return [AttackSpec(AttackKind.ROTATE, d, i + 1) for i, d in enumerate(ROTATE_DEGREES)]
    if family == "crop":
        return [AttackSpec(AttackKind.CROP, p, i + 1) for i, p in enumerate(CROP_PERCENTS)]
    if family == "flip":
        return [AttackSpec(kind, 0.0, i + 1) for i, kind in enumerate(FLIP_KINDS)]
    raise ValueError(f"unknown attack family {family!r}")


def generate_attacks(
    img: Image,
    family: str,
    *,
    crop_anchor: str = "center",
    rotate_expand: bool = False,
) -> list[tuple[AttackSpec, Image]]:
    """Attacked variants of one image under one family, in step order."""
    return [
        (spec, apply_attack(img, spec, crop_anchor=crop_anchor, rotate_expand=rotate_expand))
        for spec in canonical_specs(family)
    ]


def write_attack_suite(
    img: Image,
    stem: str,
    family: str,
    out_dir: str | Path,
    *,
    crop_anchor: str = "center",
    rotate_expand: bool = False,
) -> list[Path]:
    """Write a suite as ``<stem>_<family>_<step>.png`` files."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for spec, attacked in generate_attacks(
        img, family, crop_anchor=crop_anchor, rotate_expand=rotate_expand
    ):
        path = root / f"{stem}_{family}_{spec.step_index}.png"
        path.write_bytes(encode_image(attacked, "png"))
        paths.append(path)
    return paths


_SUITE_NAME = re.compile(r"^(?P<stem>.+)_(?P<family>blur|rotate|crop|flip)_(?P<step>\d+)\.png$")


def parse_suite_filename(name: str) -> tuple[str, str, int]:
    """Split ``<stem>_<family>_<step>.png``; stems may contain underscores."""
    m = _SUITE_NAME.match(name)
    if not m:
        raise ValueError(f"cannot resolve suite file name {name!r}")
    return m.group("stem"), m.group("family"), int(m.group("step"))


# ---------------------------------------------------------------------------
# ground-truth map: lines "stem=blockIndex"


def truth_map_text(truth: Mapping[str, int]) -> str:
    return "".join(f"{stem}={idx}\n" for stem, idx in sorted(truth.items()))


def load_truth_map(path: str | Path) -> dict[str, int]:
    truth = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        stem, sep, idx = line.partition("=")
        if not sep or not idx.strip().isdigit():
            raise ValueError(f"truth map line {lineno}: expected stem=blockIndex, got {line!r}")
        truth[stem.strip()] = int(idx)
    return truth


def truth_from_chain(ledger) -> dict[str, int]:
    """Map each enrolled image's filename stem to its block index."""
    return {Path(b.image_ref).stem: b.index for b in ledger.blocks[1:]}


# ---------------------------------------------------------------------------
# suite execution


def run_suite(
    devices: list[Device],
    suite_dir: str | Path,
    truth: Mapping[str, int],
    out_dir: str | Path | None = None,
) -> SuiteResult:
    """Query every image of one suite directory in filename order.

    All files must belong to a single (stem, family) suite and the stem must
    resolve through the ground-truth map. When ``out_dir`` is given, the log
    and CSV are written there as ``<stem>_<family>.log`` / ``.csv``.
    """
    root = Path(suite_dir)
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise ValueError(f"suite directory {root} is empty")
    parsed = [(path, *parse_suite_filename(path.name)) for path in files]
    suites = {(stem, family) for _, stem, family, _ in parsed}
    if len(suites) != 1:
        raise ValueError(f"directory {root} mixes multiple suites: {sorted(suites)}")
    (stem, family), = suites
    if stem not in truth:
        raise ValueError(f"stem {stem!r} not present in the ground-truth map")

    records = []
    for path, _, _, step in parsed:
        img = decode_image(path.read_bytes())
        report = query(devices, img)
        report.correct = report.winner.found_block == truth[stem]
        spec = canonical_specs(family)[step - 1]
        records.append(TestRecord(path.name, report, truth[stem], spec))
    steps = [r.attack.step_index for r in records]
    if steps != list(range(1, len(steps) + 1)):
        raise ValueError(f"suite steps not contiguous from 1: {steps}")
    result = SuiteResult(stem, family, tuple(records))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_log(result, out / f"{stem}_{family}.log")
        emit_csv(result, out / f"{stem}_{family}.csv")
    return result


# ---------------------------------------------------------------------------
# result log, fixed grammar with an exact round-trip parser


@dataclass(frozen=True)
class LogEntry:
    test_name: str
    best_score: float
    best_algo: AlgorithmId
    image_ref: str
    block_index: int
    per_algo: tuple[tuple[AlgorithmId, int, float], ...]


def _suite_entries(suite: SuiteResult) -> list[LogEntry]:
    entries = []
    for rec in suite.records:
        winner = rec.report.winner
        entries.append(
            LogEntry(
                test_name=rec.test_name,
                best_score=winner.score,
                best_algo=winner.algo,
                image_ref=winner.image_ref,
                block_index=winner.found_block,
                per_algo=tuple(
                    (r.algo, r.found_block, r.score) for r in rec.report.per_device
                ),
            )
        )
    return entries


def render_log(entries: Iterable[LogEntry]) -> str:
    lines = []
    for e in entries:
        lines.append("-----")
        lines.append(f"{e.test_name}:")
        lines.append(f"Best Score: {e.best_score!r} using {e.best_algo.value}")
        lines.append(f"Image Found: {e.image_ref} ({e.block_index})")
        lines.append("")
        for algo, idx, score in e.per_algo:
            lines.append(f"{algo.value}: ({idx}) {score!r}")
    lines.append("-----")
    return "\n".join(lines) + "\n"


def write_log(suite: SuiteResult, sink: str | Path | IO[str] | None = None) -> str:
    """Render the suite log; optionally write it to a path or stream."""
    text = render_log(_suite_entries(suite))
    _write_text(text, sink)
    return text


_BEST_LINE = re.compile(r"^Best Score: (?P<score>\S+) using (?P<algo>\S+)$")
_FOUND_LINE = re.compile(r"^Image Found: (?P<ref>.*) \((?P<idx>\d+)\)$")
_ALGO_LINE = re.compile(r"^(?P<algo>[A-Za-z]+): \((?P<idx>\d+)\) (?P<score>\S+)$")


def parse_log(text: str) -> list[LogEntry]:
    """Inverse of :func:`render_log`; raises on any grammar deviation."""
    lines = text.splitlines()
    if not lines or lines[-1] != "-----" or not text.endswith("\n"):
        raise ValueError("log must close with a '-----' line")
    entries = []
    pos = 0
    while pos < len(lines) - 1:
        if lines[pos] != "-----":
            raise ValueError(f"line {pos + 1}: expected '-----', got {lines[pos]!r}")
        name_line = lines[pos + 1]
        if not name_line.endswith(":"):
            raise ValueError(f"line {pos + 2}: expected '<name>:', got {name_line!r}")
        best = _BEST_LINE.match(lines[pos + 2])
        if not best:
            raise ValueError(f"line {pos + 3}: bad best-score line {lines[pos + 2]!r}")
        found = _FOUND_LINE.match(lines[pos + 3])
        if not found:
            raise ValueError(f"line {pos + 4}: bad image-found line {lines[pos + 3]!r}")
        if lines[pos + 4] != "":
            raise ValueError(f"line {pos + 5}: expected blank line")
        per_algo = []
        pos += 5
        while pos < len(lines) and lines[pos] != "-----":
            m = _ALGO_LINE.match(lines[pos])
            if not m:
                raise ValueError(f"line {pos + 1}: bad algorithm line {lines[pos]!r}")
            per_algo.append((AlgorithmId(m.group("algo")), int(m.group("idx")), float(m.group("score"))))
            pos += 1
        entries.append(
            LogEntry(
                test_name=name_line[:-1],
                best_score=float(best.group("score")),
                best_algo=AlgorithmId(best.group("algo")),
                image_ref=found.group("ref"),
                block_index=int(found.group("idx")),
                per_algo=tuple(per_algo),
            )
        )
    return entries


# ---------------------------------------------------------------------------
# CSV


CSV_HEADER = (
    "stem,attack,step,param,winner_algo,winner_block,winner_score,correct,"
    "avg_score,ph_score,bm_score,mh_score,rv_score,"
    "avg_block,ph_block,bm_block,mh_block,rv_block"
)


def emit_csv(suite: SuiteResult, sink: str | Path | IO[str] | None = None) -> str:
    """One row per test: winner fields plus per-algorithm scores and blocks."""
    lines = [CSV_HEADER]
    for rec in suite.records:
        by_algo = {r.algo: r for r in rec.report.per_device}
        ordered = [by_algo[a] for a in ALGORITHMS]
        winner = rec.report.winner
        row = [
            suite.stem,
            suite.attack_family,
            str(rec.attack.step_index),
            repr(rec.attack.parameter),
            winner.algo.value,
            str(winner.found_block),
            repr(winner.score),
            "1" if rec.report.correct else "0",
            *[repr(r.score) for r in ordered],
            *[str(r.found_block) for r in ordered],
        ]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    _write_text(text, sink)
    return text


def _write_text(text: str, sink: str | Path | IO[str] | None) -> None:
    if sink is None:
        return
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(text.encode("utf-8"))
    else:
        sink.write(text)


def read_csv(path: str | Path) -> list[dict[str, str]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a suite CSV (bad header)")
    columns = CSV_HEADER.split(",")
    rows = []
    for line in lines[1:]:
        values = line.split(",")
        if len(values) != len(columns):
            raise ValueError(f"{path}: row has {len(values)} fields, expected {len(columns)}")
        rows.append(dict(zip(columns, values)))
    return rows


# ---------------------------------------------------------------------------
# attack-signature classifier


def classify_scores(
    scores: list[float],
    correct: list[bool],
    thresholds: ClassifierThresholds = ClassifierThresholds(),
) -> AttackSignature:
    """Label a winner-score series by its shape.

    Decision ladder: a three-test suite with one near-zero score and a
    clearly higher one is a flip; a low flat curve is a blur; a rising curve
    is a crop; mostly-wrong retrievals without a trend point to rotation.
    """
    if len(scores) < 3:
        raise ValueError(f"need at least 3 records to classify, got {len(scores)}")
    s = np.asarray(scores, dtype=np.float64)
    score_range = float(s.max() - s.min())
    slope = float(np.polyfit(np.arange(1, len(s) + 1), s, 1)[0])
    error_rate = 1.0 - sum(correct) / len(correct)
    monotone = bool(np.all(np.diff(s) >= -thresholds.monotone_tol))

    if len(s) == 3 and s.min() < thresholds.flip_low and s.max() > 4 * thresholds.flip_low:
        label = "Flip"
    elif s.max() < thresholds.blur_max and score_range < thresholds.flat_range:
        label = "Blur"
    elif monotone and score_range >= thresholds.flat_range:
        label = "Crop"
    elif error_rate >= thresholds.error_rate and not monotone:
        label = "Rotation"
    else:
        label = "Unknown"
    return AttackSignature(label, score_range, slope, error_rate)


def classify_attack(
    suite: SuiteResult,
    thresholds: ClassifierThresholds = ClassifierThresholds(),
) -> AttackSignature:
    """Classify a completed suite by its winner scores."""
    return classify_scores(
        [r.report.winner.score for r in suite.records],
        [bool(r.report.correct) for r in suite.records],
        thresholds,
    )


def classify_csv(
    path: str | Path,
    thresholds: ClassifierThresholds = ClassifierThresholds(),
) -> AttackSignature:
    """Classify directly from an emitted suite CSV."""
    rows = read_csv(path)
    return classify_scores(
        [float(r["winner_score"]) for r in rows],
        [r["correct"] == "1" for r in rows],
        thresholds,
    )
