"""Command line interface: ``index``, ``search``, ``eval`` and ``synth``.

Index directories hold ``index.bin`` (the container written by the chosen
method) and ``manifest.json`` recording where the corpus came from, so that
``search --word`` can resolve query words back to their vectors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .embeddings import FORMATS, EmbeddingCorpus, load_embeddings, write_embeddings
from .errors import ConfigError, LexannError
from .evaluation import DEFAULT_DEPTHS, DEFAULT_K, sample_queries, sweep
from .methods import ENCODERS, MethodConfig, build_searcher, load_searcher
from .reduction import PIPELINES
from .synthetic import glove_like_corpus

log = logging.getLogger("lexann")

DEFAULT_SEED = 42
INDEX_FILE = "index.bin"
MANIFEST_FILE = "manifest.json"

# flag name -> MethodConfig field
_METHOD_FLAGS = {
    "encoder": "encoder", "q": "q", "n": "n", "h": "h", "b": "b", "decimals": "decimals",
    "df_cutoff": "df_cutoff", "pipeline": "pipeline", "p": "p", "ppa_d": "ppa_d",
    "normalize": "normalize", "rerank": "rerank",
}


def _add_corpus_flags(parser, required):
    parser.add_argument("--input", required=required, help="embedding text file")
    parser.add_argument("--format", choices=FORMATS, default=None, help="embedding file format (default glove-text)")
    parser.add_argument("--limit", type=int, default=None, help="keep only the first N entries")
    parser.add_argument("--synthetic", type=int, default=None, metavar="N",
                        help="use N generated GloVe-like vectors instead of --input")


def _add_method_flags(parser):
    parser.add_argument("--config", help="JSON file with method settings (encoder, q, n, h, b, decimals, ...)")
    parser.add_argument("--encoder", choices=ENCODERS)
    parser.add_argument("--q", type=int, help="fake-words quantization factor")
    parser.add_argument("--n", type=int, help="lexical LSH n-gram length")
    parser.add_argument("--h", type=int, help="lexical LSH hash functions")
    parser.add_argument("--b", type=int, help="lexical LSH buckets")
    parser.add_argument("--decimals", type=int, help="lexical LSH rounding places")
    parser.add_argument("--df-cutoff", type=float, help="drop query terms found in more than this fraction of docs")
    parser.add_argument("--pipeline", choices=PIPELINES, help="k-d tree reduction pipeline")
    parser.add_argument("--p", type=int, help="k-d tree reduced dimensionality (<= 8)")
    parser.add_argument("--ppa-d", type=int, help="principal components removed per PPA pass")
    parser.add_argument("--no-normalize", dest="normalize", action="store_const", const=False, default=None,
                        help="lexical LSH: quantize raw instead of unit-length vectors")
    parser.add_argument("--rerank", action="store_const", const=True, default=None,
                        help="rerank the top-d candidates by exact cosine similarity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexann",
                                     description="Nearest-neighbour search on dense vectors with inverted indexes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="encode a corpus and persist an index")
    _add_corpus_flags(p, required=False)
    _add_method_flags(p)
    p.add_argument("--out", required=True, help="output index directory")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("search", help="query a persisted index")
    p.add_argument("--index", required=True, help="index directory written by 'index'")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--word", help="query by a corpus word")
    group.add_argument("--vector", help="query by a comma-separated float list")
    p.add_argument("--d", type=int, default=10, help="retrieval depth")
    p.add_argument("--df-cutoff", type=float, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("eval", help="recall/latency/size sweep over a parameter grid")
    p.add_argument("--grid", required=True, help="JSON grid file")
    _add_corpus_flags(p, required=False)
    p.add_argument("--queries", help="file with one query word per line (default: sampled words)")
    p.add_argument("--num-queries", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--depths", default=None, help="comma-separated depths, e.g. 10,20,50,100")
    p.add_argument("--exclude-self", action="store_const", const=True, default=None,
                   help="do not count a query word's own vector as a true neighbour")
    p.add_argument("--parallel", action="store_true", help="run queries concurrently (recall only)")
    p.add_argument("--out", default=None, help="directory for report.txt, report.json and figures")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("synth", help="write a generated GloVe-like embedding file")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--format", choices=FORMATS, default="glove-text")
    p.add_argument("--seed", type=int, default=0)
    return parser


# -- helpers ------------------------------------------------------------

def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def corpus_source(args, defaults: dict | None = None, seed: int = DEFAULT_SEED) -> dict:
    """Where the corpus comes from: flags > ``defaults`` (config/grid file)."""
    source = json.loads(json.dumps(defaults or {}))
    if args.synthetic is not None:
        source = {"synthetic": {"n": args.synthetic}}
    if args.input is not None:
        source.pop("synthetic", None)
        source["input"] = str(Path(args.input).resolve())
    if args.format is not None:
        source["format"] = args.format
    if args.limit is not None:
        source["limit"] = args.limit
    if "input" not in source and "synthetic" not in source:
        raise ConfigError("no corpus given; pass --input FILE or --synthetic N")
    if "synthetic" in source:
        source["synthetic"].setdefault("seed", seed)
    return source


def open_corpus(source: dict, seed: int = 0) -> EmbeddingCorpus:
    if "synthetic" in source:
        spec = dict(source["synthetic"])
        corpus = glove_like_corpus(int(spec.get("n", 10_000)), int(spec.get("dim", 300)),
                                   int(spec.get("seed", seed)))
        limit = source.get("limit")
        return corpus.subset(limit) if limit else corpus
    return load_embeddings(source["input"], source.get("format", "glove-text"), source.get("limit"))


def method_config(args) -> MethodConfig:
    settings = _read_json(args.config) if args.config else {}
    settings.pop("corpus", None)
    for flag, key in _METHOD_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = value
    return MethodConfig.from_dict(settings)


def expand_grid(grid: dict) -> list[MethodConfig]:
    """One MethodConfig per point of each run's cartesian product."""
    runs = grid.get("runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigError("grid needs a non-empty 'runs' list")
    configs = []
    for run in runs:
        keys = list(run)
        values = [v if isinstance(v, list) else [v] for v in run.values()]
        for combo in itertools.product(*values):
            configs.append(MethodConfig.from_dict(dict(zip(keys, combo))))
    return configs


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()], dtype=np.float64)
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}; expected comma-separated floats") from None


# -- commands -----------------------------------------------------------

def cmd_index(args) -> int:
    config = method_config(args)
    settings = _read_json(args.config) if args.config else {}
    source = corpus_source(args, settings.get("corpus"), args.seed)
    corpus = open_corpus(source, args.seed)
    started = time.perf_counter()
    searcher = build_searcher(config, corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    blob = searcher.to_bytes()
    (out / INDEX_FILE).write_bytes(blob)
    manifest = {"corpus": source, "method": config.to_dict(), "N": len(corpus), "dimension": corpus.dim,
                "index_file": INDEX_FILE, "index_size_bytes": len(blob), "seed": args.seed}
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"indexed {len(corpus)} vectors with {config.label} in {time.perf_counter() - started:.1f}s; "
          f"{len(blob)} bytes -> {out / INDEX_FILE}")
    return 0


def cmd_search(args) -> int:
    root = Path(args.index)
    manifest = _read_json(root / MANIFEST_FILE)
    for key in ("corpus", "dimension"):
        if key not in manifest:
            raise ConfigError(f"{root / MANIFEST_FILE}: missing {key!r}")
    searcher = load_searcher(root / manifest.get("index_file", INDEX_FILE))
    if args.df_cutoff is not None:
        searcher.config = MethodConfig.from_dict({**searcher.config.to_dict(), "df_cutoff": args.df_cutoff})
    words = None
    if args.word is not None:
        corpus = open_corpus(manifest["corpus"], manifest.get("seed", DEFAULT_SEED))
        if args.word not in corpus:
            raise ConfigError(f"word {args.word!r} is not in the indexed corpus")
        query = corpus.vector(args.word)
        words = corpus.words
    else:
        query = _parse_vector(args.vector)
        if len(query) != manifest["dimension"]:
            raise ConfigError(f"query has {len(query)} components, index expects {manifest['dimension']}")
    for rank, (doc_id, score) in enumerate(searcher.search(query, args.d), 1):
        label = words[doc_id] if words is not None else ""
        print(f"{rank}\t{doc_id}\t{label}\t{score:.6f}")
    return 0


def cmd_eval(args) -> int:
    grid = _read_json(args.grid)
    configs = expand_grid(grid)
    seed = args.seed if args.seed is not None else int(grid.get("seed", DEFAULT_SEED))
    k = args.k if args.k is not None else int(grid.get("k", DEFAULT_K))
    depths = ([int(d) for d in args.depths.split(",")] if args.depths
              else [int(d) for d in grid.get("depths", DEFAULT_DEPTHS)])
    exclude_self = args.exclude_self if args.exclude_self is not None else bool(grid.get("exclude_self", False))
    source = corpus_source(args, grid.get("corpus"), seed)
    corpus = open_corpus(source, seed)
    if args.queries:
        queries = [w.strip() for w in Path(args.queries).read_text(encoding="utf-8").splitlines() if w.strip()]
    else:
        count = args.num_queries if args.num_queries is not None else int(grid.get("num_queries", 100))
        queries = sample_queries(corpus, count, seed)

    report = sweep(corpus, queries, configs, k, depths, exclude_self=exclude_self, parallel=args.parallel,
                   progress=lambda c: log.info("evaluating %s", c.label))
    report.info = {"corpus": source, "corpus_size": len(corpus), "dimension": corpus.dim, "seed": seed,
                   "num_queries": len(queries), "exclude_self": exclude_self, "parallel": args.parallel}
    text = report.to_text()
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text + "\n", encoding="utf-8")
        (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        if not args.no_figures:
            from .plotting import render_report_figures

            for path in render_report_figures(report, out):
                log.info("wrote %s", path)
    return 0


def cmd_synth(args) -> int:
    corpus = glove_like_corpus(args.n, args.dim, args.seed)
    write_embeddings(corpus, args.out, args.format)
    print(f"wrote {len(corpus)} x {corpus.dim} vectors to {args.out}")
    return 0


COMMANDS = {"index": cmd_index, "search": cmd_search, "eval": cmd_eval, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (LexannError, OSError) as exc:
        print(f"lexann {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
