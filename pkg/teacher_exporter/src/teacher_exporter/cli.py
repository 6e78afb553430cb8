"""The teacher-exporter command.

Exit codes: 0 success, 2 user/validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .exporter import ExporterConfig, ExporterError, finetune_and_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teacher-exporter",
        description="Fine-tune a transformer on labeled claims and export "
        "per-claim truth probabilities as teacher-target JSONL.",
    )
    parser.add_argument("--claims", required=True, help="labeled claims JSONL")
    parser.add_argument("--out", required=True, help="teacher-target JSONL to write")
    parser.add_argument(
        "--base-model", required=True, help="model identifier or local path"
    )
    parser.add_argument("--learning-rate", type=float, default=3e-6)
    parser.add_argument("--batch-size", type=int, default=12)
    parser.add_argument(
        "--epochs", type=int, default=3, help="fine-tuning epochs; 0 exports as loaded"
    )
    parser.add_argument("--max-length", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        config = ExporterConfig(
            base_model=args.base_model,
            claims_path=args.claims,
            out_path=args.out,
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            epochs=args.epochs,
            max_length=args.max_length,
            seed=args.seed,
        )
        result = finetune_and_export(config)
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    for epoch, loss in enumerate(result.epoch_losses, start=1):
        print(f"epoch {epoch}: mean loss {loss:.6f}")
    print(f"exported {result.n_claims} teacher targets -> {result.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
