"""Command-line front end for checkpoint exports.

Exit codes match the voting toolkit's convention: 0 success, 1 validation
or export error, 2 I/O or parse error. Diagnostics go to stderr; the only
output is the written TSV.
"""

from __future__ import annotations

import argparse
import sys

from softvote import ParseError, SoftvoteError

from .errors import ExportError
from .exporter import ExportJob, export_probabilities


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probexport",
        description="Export positive-class probabilities from a fine-tuned "
        "two-class transformer checkpoint to a probability TSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_export = sub.add_parser("export", help="score a corpus with one checkpoint")
    p_export.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p_export.add_argument("--corpus", required=True, help="corpus TSV (labeled or not)")
    p_export.add_argument("--out", required=True, help="output probability TSV")
    p_export.add_argument(
        "--max-len", type=int, default=128, help="token truncation length (default 128)"
    )
    p_export.add_argument("--device", default="cpu", help="torch device (default cpu)")
    p_export.add_argument(
        "--batch-size", type=int, default=32, help="inference batch size (default 32)"
    )
    p_export.add_argument(
        "--member-id", help="member id stored in the table (default: checkpoint dir name)"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = None
    try:
        job = ExportJob(
            checkpoint_dir=args.checkpoint,
            corpus_path=args.corpus,
            output_path=args.out,
            max_length=args.max_len,
            device=args.device,
            batch_size=args.batch_size,
            member_id=args.member_id,
        )
        table = export_probabilities(job)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ExportError, SoftvoteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {len(table)} probabilities for member {table.member_id!r} to {args.out}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
