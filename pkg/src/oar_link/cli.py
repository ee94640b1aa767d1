"""Command-line entry point: ``oar-link <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .codec import Codebook, CodebookError
from .ged import ged
from .graph import GraphParseError, parse_graph, validate_graph
from .scheduler import SchedulerConfigError
from .vocab import VocabularyError, builtin_vocabulary

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _err(msg: str) -> None:
    print(f"oar-link: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    cfg = harness.ExperimentConfig.load(args.config)
    res = harness.run_sweep(cfg, args.out, jsonl=args.jsonl, threads=args.threads)
    print(f"wrote {res.summary_path} ({len(res.rows)} rows, {len(res.records)} trials)")
    if res.trials_path:
        print(f"wrote {res.trials_path}")
    return EXIT_OK


def cmd_gen_vocab(args) -> int:
    builtin_vocabulary().save(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_gen_codebook(args) -> int:
    vocab = harness.load_vocab(args.vocab)
    cb = Codebook.from_vocab(vocab, seed=args.seed)
    cb.save(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_ged(args) -> int:
    g1 = parse_graph(Path(args.graph1).read_bytes())
    g2 = parse_graph(Path(args.graph2).read_bytes())
    res = ged(g1, g2, method=args.method)
    print(json.dumps({"raw": res.raw, "normalized": res.normalized, "approximate": res.approximate}))
    return EXIT_OK


def cmd_validate(args) -> int:
    vocab = harness.load_vocab(args.vocab)
    graphs = harness.load_corpus(args.corpus, vocab)
    print(f"{args.corpus}: {len(graphs)} valid graphs")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oar-link", description="Semantic scene-graph link simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (default: the config's output field)")
    r.add_argument("--jsonl", action="store_true", help="also write per-trial records")
    r.add_argument("--threads", type=int, default=None)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("gen-vocab", help="write the builtin vocabulary as JSON")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_gen_vocab)

    c = sub.add_parser("gen-codebook", help="generate and save a codebook")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--vocab", default="builtin")
    c.set_defaults(func=cmd_gen_codebook)

    g = sub.add_parser("ged", help="graph edit distance between two graph files")
    g.add_argument("graph1")
    g.add_argument("graph2")
    g.add_argument("--method", choices=("auto", "exact", "approx"), default="auto")
    g.set_defaults(func=cmd_ged)

    val = sub.add_parser("validate", help="check a JSONL corpus")
    val.add_argument("corpus")
    val.add_argument("--vocab", default="builtin")
    val.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (harness.ConfigError, harness.CorpusError, GraphParseError, VocabularyError,
            CodebookError, SchedulerConfigError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
