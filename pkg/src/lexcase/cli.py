"""Command-line entry point.

Subcommands mirror the pipeline: ``index``, ``train-embed``,
``retrieve``, ``fuse``, ``evaluate``, ``entail train|predict`` and
``gen-fixture``. A TOML config file (``--config``) supplies per-
subcommand defaults; explicit flags always win. Exit codes: 0 success,
1 usage or configuration error, 2 malformed data. Diagnostics go to
stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import bm25, embedding, entail, fixtures, pipeline, report, tfidf
from .corpus import (
    load_articles,
    load_case_queries,
    load_gold,
    load_pairs,
    load_pool_queries,
)
from .errors import ConfigurationError, DataError, LexcaseError
from .fusion import SelectionMode, SelectionRule, fuse_multiply, select
from .metrics import RunResult, map_at_k, micro_prf
from .textprep import PrepConfig, Stage, preprocess_all


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2
    for data errors, so usage failures exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _effective_config(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _write_meta(out_path: Path, args: argparse.Namespace) -> None:
    meta = {"command": args.func.__name__.removeprefix("_cmd_"), "config": _effective_config(args)}
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _prep_config(stage: int) -> PrepConfig:
    return PrepConfig(stage=Stage.STAGE1 if stage == 1 else Stage.STAGE2)


def _load_queries(args) -> list:
    if getattr(args, "articles", None):
        pool = load_articles(args.articles)
        return load_pool_queries(args.queries, pool)
    return load_case_queries(args.queries)


def _embed_config(args) -> embedding.EmbedConfig:
    return embedding.EmbedConfig(
        dim=args.dim,
        window=args.window,
        epochs=args.epochs,
        negatives=args.negatives,
        lr_start=args.lr_start,
        lr_end=args.lr_end,
        seed=args.seed,
        min_count=args.min_count,
    )


# --- subcommand bodies -----------------------------------------------------


def _cmd_index(args) -> int:
    docs = load_articles(args.articles)
    docs = preprocess_all(docs, _prep_config(args.stage))
    index = bm25.build_index(docs)
    bm25.save_index(index, args.out)
    _log(f"indexed {index.n_docs} documents ({len(index.postings)} terms) -> {args.out}")
    return 0


def _cmd_train_embed(args) -> int:
    queries = _load_queries(args)
    docs, pooled = pipeline.embedding_corpus(queries, _prep_config(1))
    model = embedding.train(docs, _embed_config(args))
    embedding.save_model(model, args.out)
    _log(
        f"trained embedding on {len(docs)} documents "
        f"({'shared pool' if pooled else 'per-query candidates'}), "
        f"vocab {len(model.vocab)}, final epoch loss {model.epoch_losses[-1]:.4f} "
        f"-> {args.out}"
    )
    return 0


def _cmd_retrieve(args) -> int:
    queries = _load_queries(args)
    model = None
    cfg = None
    if args.variant in ("d2v", "docbm"):
        if args.embed_model:
            model = embedding.load_model(args.embed_model)
        else:
            cfg = _embed_config(args)
    result = pipeline.run_variant(
        args.variant,
        args.task,
        queries,
        bm25_params=bm25.Bm25Params(k1=args.k1, b=args.b),
        embed_cfg=cfg,
        embed_model=model,
        infer_steps=args.infer_steps,
        rel_frac=args.rel_frac,
        top_n=args.top_n,
        max_k=args.max_k,
    )
    pipeline.write_run(result.selections, args.out)
    _write_meta(Path(args.out), args)
    if args.scores:
        pipeline.write_scores(result.rankings, args.scores)
    total = sum(len(v) for v in result.selections.values())
    _log(f"{args.variant}/{args.task}: {len(queries)} queries, {total} retrieved -> {args.out}")
    return 0


def _selection_rule(args) -> SelectionRule:
    mode = {
        "top-k-relative": SelectionMode.TOP_K_RELATIVE,
        "argmax": SelectionMode.ARGMAX,
        "top-n": SelectionMode.TOP_N,
    }[args.select]
    return SelectionRule(
        mode=mode,
        max_k=args.max_k,
        rel_frac=args.rel_frac if args.rel_frac is not None else 0.9,
        top_n=args.top_n if args.top_n is not None else 100,
    )


def _cmd_fuse(args) -> int:
    a = pipeline.read_scores(args.a)
    b = pipeline.read_scores(args.b)
    if set(a) != set(b):
        raise ConfigurationError(
            "score files cover different query sets; fuse needs matching runs"
        )
    rule = _selection_rule(args)
    fused = {qid: fuse_multiply(a[qid], b[qid]) for qid in a}
    selections = {qid: select(ranked, rule) for qid, ranked in fused.items()}
    pipeline.write_run(selections, args.out)
    _write_meta(Path(args.out), args)
    if args.scores:
        pipeline.write_scores(fused, args.scores)
    _log(f"fused {len(fused)} queries -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    retrieved = pipeline.read_run(args.run)
    gold = load_gold(args.gold)
    run = RunResult(
        retrieved={q: tuple(ids) for q, ids in retrieved.items()}, gold=gold
    )
    metrics = micro_prf(run, beta=args.beta)
    if args.map_k:
        metrics = replace(metrics, map_at_k=map_at_k(run, args.map_k), k=args.map_k)
    rows = report.per_query_rows(run, k=args.map_k)
    print(report.format_table(metrics))
    if args.out_dir:
        files = report.write_bundle(args.out_dir, metrics, rows, _effective_config(args))
        _log("report bundle: " + ", ".join(str(f) for f in files))
    return 0


def _labeled_vectors(pairs, vectors_by_id, names):
    X, y, used = [], [], []
    for pair in pairs:
        if pair.label is None:
            continue
        X.append(vectors_by_id[pair.id])
        y.append(pair.label)
        used.append(pair.id)
    if not X:
        raise DataError("no labeled pairs to train on")
    return X, y, used


def _entail_vectors(args, pairs):
    """(vectors_by_id, feature_names, index, tfidf_model); contexts are
    None when external feature files drive the run."""
    if args.features:
        vectors = entail.load_feature_file(args.features)
        missing = [p.id for p in pairs if p.id not in vectors]
        if missing:
            raise DataError(
                f"feature file lacks vectors for {len(missing)} pairs "
                f"(first missing: {missing[0]!r})"
            )
        width = len(next(iter(vectors.values())))
        names = tuple(f"x{i}" for i in range(width))
        return vectors, names, None, None
    if not args.articles:
        raise ConfigurationError(
            "entail needs --articles for built-in features or an external --features file"
        )
    articles = preprocess_all(load_articles(args.articles), _prep_config(2))
    index = bm25.build_index(articles)
    tfm = tfidf.fit(articles)
    feats = {p.id: entail.featurize(p, index, tfm).as_vector() for p in pairs}
    return feats, entail.FEATURE_NAMES, index, tfm


def _cmd_entail_train(args) -> int:
    pairs = load_pairs(args.pairs)
    vectors, names, index, tfm = _entail_vectors(args, pairs)
    labeled = [p for p in pairs if p.label is not None]
    train_pairs, held_pairs = entail.train_eval_split(
        labeled, args.seed, args.held_out
    )
    if not train_pairs:
        raise DataError("training split is empty; lower --held-out")
    X, y, _ = _labeled_vectors(train_pairs, vectors, names)
    model = entail.train_classifier(
        X, y, epochs=args.epochs, lr=args.lr, seed=args.seed, feature_names=names
    )
    entail.save_entail_model(args.out, model, index, tfm)

    def _accuracy(subset) -> float | None:
        if not subset:
            return None
        good = sum(
            entail.predict(model, vectors[p.id])[0] == p.label for p in subset
        )
        return good / len(subset)

    train_acc = _accuracy(train_pairs)
    held_acc = _accuracy(held_pairs)
    summary = {
        "pairs": len(pairs),
        "labeled": len(labeled),
        "train_accuracy": train_acc,
        "held_out_accuracy": held_acc,
        "dropped_features": list(model.dropped),
    }
    print(json.dumps(summary, sort_keys=True))
    _log(f"model -> {args.out}")
    return 0


def _cmd_entail_predict(args) -> int:
    pairs = load_pairs(args.pairs)
    classifier, index, tfm = entail.load_entail_model(args.model)
    if args.features:
        vectors = entail.load_feature_file(args.features)
        missing = [p.id for p in pairs if p.id not in vectors]
        if missing:
            raise DataError(
                f"feature file lacks vectors for {len(missing)} pairs "
                f"(first missing: {missing[0]!r})"
            )
    else:
        if index is None or tfm is None:
            raise ConfigurationError(
                "model file carries no collection statistics; pass --features"
            )
        vectors = {p.id: entail.featurize(p, index, tfm).as_vector() for p in pairs}
    predictions = {}
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for pair in pairs:
            label, _ = entail.predict(classifier, vectors[pair.id])
            predictions[pair.id] = label
            fh.write(
                json.dumps({"id": pair.id, "label": "Y" if label else "N"}, sort_keys=True)
                + "\n"
            )
    labeled = {p.id: p.label for p in pairs if p.label is not None}
    if labeled:
        matched = sum(predictions[pid] == lab for pid, lab in labeled.items())
        _log(f"accuracy on {len(labeled)} labeled pairs: {matched / len(labeled):.4f}")
    _log(f"{len(predictions)} predictions -> {args.out}")
    return 0


def _cmd_gen_fixture(args) -> int:
    root = fixtures.gen_fixture(args.queries, args.candidates, args.seed, args.out)
    _log(f"synthetic corpus: {args.queries} queries x {args.candidates} candidates -> {root}")
    return 0


# --- parser assembly -------------------------------------------------------


def _add_embed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=100, help="vector size")
    p.add_argument("--window", type=int, default=5, help="context window radius")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--lr-start", type=float, default=0.025)
    p.add_argument("--lr-end", type=float, default=0.0001)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)


def _add_selection_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rel-frac", type=float, default=None,
                   help="top-two relative threshold fraction")
    p.add_argument("--top-n", type=int, default=None, help="emit the top n ids")
    p.add_argument("--max-k", type=int, default=10, help="selection cap")


def build_parser() -> _Parser:
    parser = _Parser(prog="lexcase", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML file with per-subcommand defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="build a BM25 index over an article file")
    p.add_argument("--articles", type=Path, required=True)
    p.add_argument("--stage", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("train-embed", help="train paragraph vectors on a query corpus")
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--articles", type=Path, default=None,
                   help="shared article pool replacing per-query candidates")
    _add_embed_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_train_embed)

    p = sub.add_parser("retrieve", help="score and select candidates per query")
    p.add_argument("--task", choices=("t1", "t2", "t3"), required=True)
    p.add_argument("--variant", choices=("d2v", "bm25", "docbm", "tfidf"), required=True)
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--articles", type=Path, default=None,
                   help="shared article pool replacing per-query candidates")
    p.add_argument("--embed-model", type=Path, default=None,
                   help="pretrained embedding; otherwise one is trained in-run")
    _add_embed_flags(p)
    p.add_argument("--infer-steps", type=int, default=embedding.DEFAULT_INFER_STEPS)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    _add_selection_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scores", type=Path, default=None,
                   help="also write per-candidate scores")
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("fuse", help="multiply two score files and select")
    p.add_argument("--a", type=Path, required=True)
    p.add_argument("--b", type=Path, required=True)
    p.add_argument("--select", choices=("top-k-relative", "argmax", "top-n"),
                   default="top-k-relative")
    _add_selection_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scores", type=Path, default=None)
    p.set_defaults(func=_cmd_fuse)
    p.set_defaults(rel_frac=0.8)

    p = sub.add_parser("evaluate", help="score a run file against gold")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--gold", type=Path, required=True,
                   help="query root holding gold.json files")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--map-k", type=int, default=None)
    p.add_argument("--out-dir", type=Path, default=None,
                   help="write TSV/JSON/figure bundle here")
    p.set_defaults(func=_cmd_evaluate)

    p_entail = sub.add_parser("entail", help="yes/no entailment over pair files")
    esub = p_entail.add_subparsers(dest="entail_command", required=True,
                                   parser_class=_Parser)

    p = esub.add_parser("train", help="fit the pair classifier")
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--articles", type=Path, default=None)
    p.add_argument("--features", type=Path, default=None,
                   help="external per-pair vectors (JSON lines)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--held-out", type=float, default=0.2)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_entail_train)

    p = esub.add_parser("predict", help="label pairs with a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--features", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_entail_predict)

    p = sub.add_parser("gen-fixture", help="write a synthetic evaluation corpus")
    p.add_argument("--queries", type=int, required=True)
    p.add_argument("--candidates", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_gen_fixture)

    # accept --config on either side of the subcommand
    for child in _walk_subparsers(parser):
        child.add_argument("--config", type=Path, default=None,
                           help=argparse.SUPPRESS)

    return parser


def _walk_subparsers(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                yield child
                yield from _walk_subparsers(child)


def _subcommand_path(argv: list[str]) -> list[str]:
    path = []
    skip_next = False
    for token in argv:
        if skip_next:
            skip_next = False
            continue
        if token.startswith("-"):
            skip_next = "=" not in token and token in ("--config",)
            continue
        path.append(token)
        if len(path) == 2 or path[0] != "entail":
            break
    return path


def _config_defaults(argv: list[str]) -> dict:
    """Per-subcommand defaults from the TOML file named by --config."""
    config_path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif token.startswith("--config="):
            config_path = token.split("=", 1)[1]
    if config_path is None:
        return {}
    try:
        with open(config_path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file {config_path} does not exist")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{config_path}: {exc}")
    table = data
    for part in _subcommand_path(argv):
        value = table.get(part)
        if not isinstance(value, dict):
            return {}
        table = value
    flat = {k: v for k, v in table.items() if not isinstance(v, dict)}
    return {k.replace("-", "_"): v for k, v in flat.items()}


def _target_subparser(parser: _Parser, argv: list[str]) -> _Parser | None:
    current = parser
    for part in _subcommand_path(argv):
        actions = [
            a for a in current._actions if isinstance(a, argparse._SubParsersAction)
        ]
        if not actions or part not in actions[0].choices:
            return None
        current = actions[0].choices[part]
    return current if current is not parser else None


def _apply_defaults(parser: _Parser, argv: list[str]) -> None:
    """Config values become the chosen subparser's defaults, so explicit
    flags keep the last word."""
    defaults = _config_defaults(argv)
    if not defaults:
        return
    target = _target_subparser(parser, argv)
    if target is None:
        return
    known = {a.dest for a in target._actions}
    unknown = sorted(set(defaults) - known)
    if unknown:
        raise ConfigurationError(f"config file sets unknown options: {unknown}")
    target.set_defaults(**defaults)
    for action in target._actions:
        # a config value satisfies a required flag
        if action.dest in defaults:
            action.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_defaults(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        # argparse exits on usage errors; surface the code instead
        return int(exc.code or 0)
    except DataError as exc:
        _log(f"lexcase: data error: {exc}")
        return 2
    except FileNotFoundError as exc:
        _log(f"lexcase: error: missing input: {exc.filename or exc}")
        return 1
    except (ConfigurationError, ValueError) as exc:
        _log(f"lexcase: error: {exc}")
        return 1
    except LexcaseError as exc:
        _log(f"lexcase: error: {exc}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
