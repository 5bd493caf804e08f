"""Command-line surface: export embeddings, detection logs, checkpoints."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backends import BackendError, MODEL_DIMS
from .detector import GridDetector, save_checkpoint, train_detector
from .embeddings import ExtractorSpec, export_embeddings, list_images
from .detlog import export_detection_log
from .formats import load_split


def _parse_class_map(raw: str | None) -> dict[int, int] | None:
    """Accept a JSON object or `pred:gt,pred:gt` shorthand."""
    if raw is None:
        return None
    try:
        if raw.strip().startswith("{"):
            doc = json.loads(raw)
            return {int(k): int(v) for k, v in doc.items()}
        pairs = [p for p in raw.split(",") if p.strip()]
        return {int(a): int(b) for a, b in (p.split(":") for p in pairs)}
    except (ValueError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: invalid --class-map {raw!r}: {exc}")


def cmd_embeddings(args) -> int:
    spec = ExtractorSpec(
        model=args.model,
        images=list_images(args.images),
        out=Path(args.out),
        prompt=args.prompt,
        backend=args.backend,
        weights=args.weights,
    )
    rows, skipped = export_embeddings(spec)
    print(f"wrote {rows} x {MODEL_DIMS[args.model]} embeddings to {args.out}"
          + (f" ({skipped} files skipped)" if skipped else ""))
    return 0


def cmd_detlog(args) -> int:
    count = export_detection_log(
        weights=args.weights,
        data_dir=args.data,
        mode=args.mode,
        out=args.out,
        class_map=_parse_class_map(args.class_map),
        epochs=args.epochs,
        seed=args.seed,
    )
    print(f"wrote {count} records to {args.out}")
    return 0


def cmd_pretrain(args) -> int:
    split = load_split(Path(args.data) / "train")
    class_count = max(2, len(split.categories))
    model = GridDetector(class_count=class_count, image_size=args.image_size)
    train_detector(model, split, epochs=args.epochs, seed=args.seed)
    save_checkpoint(model, args.out)
    print(f"trained {class_count}-class detector for {args.epochs} epochs; "
          f"saved {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sdqm-extract",
        description="Produce embedding files and detection logs from images.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embeddings", help="export per-image feature vectors")
    p.add_argument("--model", required=True, choices=sorted(MODEL_DIMS))
    p.add_argument("--images", required=True, help="directory of PNG/JPEG files")
    p.add_argument("--out", required=True, help="output embedding file")
    p.add_argument("--prompt", default=None,
                   help="text prompt (grounding model only)")
    p.add_argument("--backend", choices=("auto", "hub", "stub"), default="auto")
    p.add_argument("--weights", default=None,
                   help="local checkpoint path (hub backend)")

    p = sub.add_parser("detlog", help="export a detection log")
    p.add_argument("--weights", required=True,
                   help="detector checkpoint, or fresh:<classes>")
    p.add_argument("--data", required=True,
                   help="dataset dir with train/ and val/ splits")
    p.add_argument("--mode", required=True, choices=("conditional", "predictive"))
    p.add_argument("--epochs", type=int, default=10,
                   help="fine-tuning epochs (conditional mode)")
    p.add_argument("--class-map", default=None,
                   help='JSON {"pred": gt} or pred:gt,... ; default identity')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pretrain",
                       help="train a detector checkpoint on a train/ split")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--image-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "embeddings":
            return cmd_embeddings(args)
        if args.command == "detlog":
            return cmd_detlog(args)
        if args.command == "pretrain":
            return cmd_pretrain(args)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
