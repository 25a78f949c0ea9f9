import argparse
import logging
import sys

from .exporter import ExportConfig, export


def main() -> None:
    parser = argparse.ArgumentParser(
        prog="embexp",
        description="Export frozen per-word contextual embeddings to a CEMB file.")
    parser.add_argument("--corpus", required=True, help="JSONL corpus")
    parser.add_argument("--encoder", required=True,
                        help="encoder identifier: model name or local path")
    parser.add_argument("--output", required=True, help="CEMB output path")
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden-state layer index (default: final)")
    parser.add_argument("--batch-size", type=int, default=8)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        export(ExportConfig(corpus=args.corpus, encoder=args.encoder,
                            output=args.output, layer=args.layer,
                            batch_size=args.batch_size))
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
