"""Command-line front end.

Subcommands: build, verify, attack, query, bench, classify. Exit codes:
0 success, 1 usage error, 2 data error, 3 integrity failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .chain import load_chain, save_chain, verify_chain
from .config import RunConfig, load_config
from .imagecore import DecodeError, decode_image
from .network import IntegrityError, build_network, devices_from_chain, query
from .harness import (
    classify_csv,
    load_truth_map,
    parse_suite_filename,
    render_log,
    run_suite,
    truth_from_chain,
    truth_map_text,
    write_attack_suite,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTEGRITY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage is 1 here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="imgchain", description=__doc__)
    parser.add_argument("--config", metavar="FILE", help="key=value run configuration")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="enroll a directory of images into a new chain")
    p.add_argument("dataset_dir")
    p.add_argument("-o", "--output", required=True, help="chain file to write")
    p.add_argument("--difficulty", type=int, default=None)

    p = sub.add_parser("verify", help="verify a chain file")
    p.add_argument("chain_file")

    p = sub.add_parser("attack", help="write attacked variants of an image")
    p.add_argument("image")
    p.add_argument("--kind", required=True, choices=harness.ATTACK_FAMILIES)
    p.add_argument("-o", "--output", required=True, help="directory for the suite")

    p = sub.add_parser("query", help="find the most similar enrolled image")
    p.add_argument("chain_file")
    p.add_argument("image")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("bench", help="run every suite found in a directory")
    p.add_argument("chain_file")
    p.add_argument("suite_dir")
    p.add_argument("--truth", required=True, help="ground-truth map file")
    p.add_argument("-o", "--output", required=True, help="directory for logs and CSVs")

    p = sub.add_parser("classify", help="label an emitted suite CSV by attack type")
    p.add_argument("csv_file")
    return parser


def _cmd_build(args, cfg: RunConfig) -> int:
    difficulty = args.difficulty if args.difficulty is not None else cfg.difficulty
    devices = build_network(args.dataset_dir, difficulty=difficulty, replicas=cfg.replicas)
    ledger = devices[0].replica
    save_chain(ledger, args.output)
    truth_path = Path(args.output).with_suffix(Path(args.output).suffix + ".truth")
    truth_path.write_bytes(truth_map_text(truth_from_chain(ledger)).encode("utf-8"))
    print(f"built {len(ledger.blocks)} blocks at difficulty {difficulty} -> {args.output}")
    print(f"ground-truth map -> {truth_path}")
    return EXIT_OK


def _cmd_verify(args, cfg: RunConfig) -> int:
    verdict = verify_chain(load_chain(args.chain_file))
    if verdict:
        print("chain valid")
        return EXIT_OK
    print(f"chain INVALID: block {verdict.block_index} {verdict.reason}")
    return EXIT_INTEGRITY


def _cmd_attack(args, cfg: RunConfig) -> int:
    path = Path(args.image)
    img = decode_image(path.read_bytes())
    written = write_attack_suite(
        img,
        path.stem,
        args.kind,
        args.output,
        crop_anchor=cfg.crop_anchor,
        rotate_expand=cfg.rotate_expand,
    )
    print(f"wrote {len(written)} {args.kind} images to {args.output}")
    return EXIT_OK


def _cmd_query(args, cfg: RunConfig) -> int:
    devices = devices_from_chain(load_chain(args.chain_file))
    img = decode_image(Path(args.image).read_bytes())
    report = query(devices, img)
    if args.as_json:
        payload = {
            "best": {
                "algorithm": report.winner.algo.value,
                "block": report.winner.found_block,
                "score": report.winner.score,
                "image_ref": report.winner.image_ref,
            },
            "devices": [
                {"algorithm": r.algo.value, "block": r.found_block, "score": r.score}
                for r in report.per_device
            ],
        }
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"Best Score: {report.winner.score!r} using {report.winner.algo.value}")
        print(f"Image Found: {report.winner.image_ref} ({report.winner.found_block})")
        print()
        for r in report.per_device:
            print(f"{r.algo.value}: ({r.found_block}) {r.score!r}")
    return EXIT_OK


def _cmd_bench(args, cfg: RunConfig) -> int:
    devices = devices_from_chain(load_chain(args.chain_file))
    truth = load_truth_map(args.truth)
    suite_root = Path(args.suite_dir)
    files = sorted(p for p in suite_root.iterdir() if p.is_file())
    if not files:
        raise ValueError(f"suite directory {suite_root} is empty")
    groups: dict[tuple[str, str], list[Path]] = {}
    for path in files:
        stem, family, _ = parse_suite_filename(path.name)
        groups.setdefault((stem, family), []).append(path)

    out_root = Path(args.output)
    out_root.mkdir(parents=True, exist_ok=True)
    for (stem, family), members in sorted(groups.items()):
        if len(groups) == 1:
            suite = run_suite(devices, suite_root, truth, out_dir=out_root)
        else:
            # mixed directory: stage each suite's files into their own run
            import tempfile

            with tempfile.TemporaryDirectory() as staged:
                for member in members:
                    (Path(staged) / member.name).write_bytes(member.read_bytes())
                suite = run_suite(devices, staged, truth, out_dir=out_root)
        n_correct = sum(1 for r in suite.records if r.report.correct)
        print(f"{stem}_{family}: {n_correct}/{len(suite.records)} correct")
    return EXIT_OK


def _cmd_classify(args, cfg: RunConfig) -> int:
    signature = classify_csv(args.csv_file, cfg.classifier)
    print(
        f"{signature.label} (range={signature.score_range:.4f} "
        f"slope={signature.slope:.4f} error_rate={signature.error_rate:.2f})"
    )
    return EXIT_OK


_COMMANDS = {
    "build": _cmd_build,
    "verify": _cmd_verify,
    "attack": _cmd_attack,
    "query": _cmd_query,
    "bench": _cmd_bench,
    "classify": _cmd_classify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        return _COMMANDS[args.command](args, cfg)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (DecodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
