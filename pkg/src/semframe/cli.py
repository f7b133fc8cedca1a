"""Command-line entry point: ``semframe <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or configuration error, 2 invalid input
data, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import corpus as corpus_mod
from . import logreg, pipeline
from .corpus import SLOT, VERB
from .errors import ConfigError, SemframeError
from .metrics import evaluate

logger = logging.getLogger("semframe")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

# supervised upper bound: sentence, slot filler and verb vectors plus all slot features
LOGREG_RECIPE = ("context-tfidf", "word", "verb", "ID", "B", "123")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; this tool reserves 2 for data errors
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        # mkstemp creates 0600; give the result the mode a plain open() would
        try:
            mode = path.stat().st_mode & 0o777
        except FileNotFoundError:
            umask = os.umask(0)
            os.umask(umask)
            mode = 0o666 & ~umask
        os.chmod(tmp, mode)
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _read(path) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def read_corpus(path) -> list:
    text = _read(path)
    if str(path).endswith((".conllu", ".conll")):
        raise SemframeError(f"{path}: CoNLL-U has no highlights; run 'convert' with --annotations first")
    return corpus_mod.parse_task_jsonl(text)


def read_labeling(path) -> dict:
    return pipeline.parse_labeling(_read(path))


# -- subcommands --------------------------------------------------------------


def cmd_convert(args):
    text = _read(args.corpus)
    if args.format == "conllu" or (args.format == "auto" and str(args.corpus).endswith((".conllu", ".conll"))):
        sentences = corpus_mod.parse_conllu(text)
        if not args.annotations:
            raise UsageError("CoNLL-U input needs --annotations to attach predicates and slots")
        corpus = corpus_mod.attach_annotations(sentences, _read(args.annotations))
    else:
        corpus = corpus_mod.parse_task_jsonl(text)
    if args.kind == "jsonl":
        write_atomic(args.out, corpus_mod.dump_task_jsonl(corpus))
        return f"convert: wrote {len(corpus)} sentences to {args.out}"
    subtask = {"gold-a": "A", "gold-b1": "B1", "gold-b2": "B2"}[args.kind]
    gold = pipeline.gold_labeling(corpus, subtask)
    write_atomic(args.out, pipeline.format_labeling(gold))
    return f"convert: wrote {len(gold)} gold labels ({subtask}) to {args.out}"


def _config(args, subtask, defaults=None):
    overrides = dict(
        k=args.k, metric=args.metric, linkage=args.linkage, weighting=args.weighting,
        recipe=pipeline._recipe(args.recipe) if args.recipe else None,
        normalize=args.normalize, vectors=args.vectors, contextual_vectors=args.contextual_vectors,
        lowercase=True if args.lowercase else None,
    )
    for key in ("learning_rate", "max_epochs", "l2"):
        overrides[key] = getattr(args, key, None)
    if args.config:
        cfg = pipeline.load_config(args.config, defaults, **overrides)
    else:
        values = {"subtask": subtask, **(defaults or {})}
        values.update({k: v for k, v in overrides.items() if v is not None})
        cfg = pipeline.config_from_dict(values)
    if cfg.subtask != subtask:
        raise ConfigError(f"config is for subtask {cfg.subtask}, this command runs {subtask}")
    return cfg


def _induce(args, subtask, kind, prefix, name):
    cfg = _config(args, subtask)
    corpus = read_corpus(args.corpus)
    labeling, tree = pipeline.induce(corpus, kind, cfg, prefix=prefix)
    if args.dendrogram:
        write_atomic(args.dendrogram, tree.to_tsv())
    write_atomic(args.out, pipeline.format_labeling(labeling))
    k = len(set(labeling.values()))
    return (f"{name}: {len(labeling)} instances -> {k} clusters "
            f"({'+'.join(cfg.recipe)}, {cfg.metric}, {cfg.linkage}) written to {args.out}")


def cmd_induce_frames(args):
    return _induce(args, "A", VERB, "f", "induce-frames")


def cmd_induce_roles(args):
    return _induce(args, "B2", SLOT, "r", "induce-roles")


def cmd_merge(args):
    corpus = read_corpus(args.corpus)
    merged = pipeline.merge_b1(read_labeling(args.frames), read_labeling(args.roles), corpus)
    write_atomic(args.out, pipeline.format_labeling(merged))
    unknown = sum(label.endswith("." + pipeline.UNKNOWN_ROLE) for label in merged.values())
    return f"merge: {len(merged)} slot labels ({unknown} {pipeline.UNKNOWN_ROLE}) written to {args.out}"


def cmd_baseline(args):
    corpus = read_corpus(args.corpus)
    labeling = pipeline.BASELINES[args.kind](corpus)
    write_atomic(args.out, pipeline.format_labeling(labeling))
    return f"baseline {args.kind}: {len(set(labeling.values()))} clusters over {len(labeling)} instances"


def cmd_train_logreg(args):
    cfg = _config(args, "B2", {"recipe": LOGREG_RECIPE})
    corpus = read_corpus(args.corpus)
    extra = [read_corpus(p) for p in args.extra_corpus or ()]
    res = pipeline.load_resources(cfg, corpus, extra)
    features = pipeline.build_features(corpus, SLOT, cfg, res)
    gold = read_labeling(args.gold) if args.gold else pipeline.gold_labeling(corpus, "B2")
    tc = logreg.TrainConfig(cfg.learning_rate, cfg.max_epochs, cfg.l2, cfg.tolerance, cfg.seed)
    model = logreg.train(features, gold, tc)
    model.metadata = {
        "recipe": list(cfg.recipe), "normalize": cfg.normalize, "weighting": cfg.weighting,
        "lowercase": cfg.lowercase, "block_scale": dict(cfg.block_scale),
        "layout": [list(b) for b in features.blocks],
    }
    if res.dep_index is not None:
        model.metadata["dep_labels"] = list(res.dep_index.labels)
    if res.idf is not None:
        model.metadata["idf"] = {"doc_count": res.idf.doc_count, "df": dict(sorted(res.idf.df.items()))}
    write_atomic(args.out, model.to_json())
    return (f"train-logreg: {len(features)} instances, {len(model.classes)} classes, "
            f"{len(model.loss_history)} epochs, final loss {model.loss_history[-1]:.6f}")


def cmd_predict_logreg(args):
    model = logreg.LogRegModel.from_json(_read(args.model))
    meta = model.metadata
    if "recipe" not in meta:
        raise SemframeError(f"{args.model}: model has no feature metadata; train it with train-logreg")
    cfg = pipeline.config_from_dict({
        "subtask": "B2", "recipe": meta["recipe"], "normalize": meta["normalize"],
        "weighting": meta["weighting"], "lowercase": args.lowercase or meta.get("lowercase", False),
        "block_scale": meta.get("block_scale", {}),
        "vectors": args.vectors, "contextual_vectors": args.contextual_vectors,
    })
    corpus = read_corpus(args.corpus)
    res = pipeline.load_resources(cfg, corpus)
    if "dep_labels" in meta:
        res.dep_index = pipeline.DepLabelIndex(meta["dep_labels"])
    if "idf" in meta:
        res.idf = pipeline.IdfTable(meta["idf"]["doc_count"], meta["idf"]["df"])
    features = pipeline.build_features(corpus, SLOT, cfg, res)
    labels = logreg.predict(model, features)
    write_atomic(args.out, pipeline.format_labeling(labels))
    return f"predict-logreg: {len(labels)} slot labels written to {args.out}"


def cmd_evaluate(args):
    report = evaluate(read_labeling(args.pred), read_labeling(args.gold))
    sys.stdout.write(report.table() if args.table else report.to_json())
    if args.out:
        write_atomic(args.out, report.to_json())
    return f"evaluate: {report.n} instances, Pu F1 {report.purity_f1:.4f}, B3 F1 {report.bcubed_f1:.4f}"


# -- argument parsing ---------------------------------------------------------


def _embedding_flags(p):
    p.add_argument("--vectors", help="word vectors in word2vec text format")
    p.add_argument("--contextual-vectors", help="JSONL file of precomputed sentence vectors")
    p.add_argument("--lowercase", action="store_true", help="lowercase vector tokens and lookups")


def _cluster_flags(p):
    p.add_argument("--config", help="TOML config file; flags override its keys")
    p.add_argument("--recipe", help="feature blocks joined by commas, e.g. context-tfidf,word")
    p.add_argument("--k", type=int, help="number of clusters")
    p.add_argument("--metric", choices=("euclidean", "manhattan", "cosine"), help="pointwise distance")
    p.add_argument("--linkage", choices=("single", "complete", "average", "ward"), help="linkage rule")
    p.add_argument("--weighting", choices=("tfidf", "uniform"), help="context averaging weights")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None,
                   help="L2-normalize each feature row")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semframe", description="Unsupervised semantic frame and role induction.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("convert", help="validate a corpus and write task JSONL or gold labels")
    p.add_argument("--corpus", required=True, help="task JSONL or CoNLL-U file")
    p.add_argument("--annotations", help="JSONL highlights keyed by sentence id (for CoNLL-U input)")
    p.add_argument("--format", choices=("auto", "jsonl", "conllu"), default="auto",
                   help="input format (default: by file extension)")
    p.add_argument("--kind", choices=("jsonl", "gold-a", "gold-b1", "gold-b2"), default="jsonl",
                   help="output: task JSONL or a gold labeling TSV")
    p.add_argument("--out", required=True, help="output path")
    p.set_defaults(func=cmd_convert)

    for name, func, what in (("induce-frames", cmd_induce_frames, "cluster verb instances into frames"),
                             ("induce-roles", cmd_induce_roles, "cluster slot instances into generic roles")):
        p = sub.add_parser(name, help=what)
        p.add_argument("--corpus", required=True, help="task JSONL corpus")
        _embedding_flags(p)
        _cluster_flags(p)
        p.add_argument("--dendrogram", help="also write the merge history as TSV")
        p.add_argument("--out", required=True, help="output labeling TSV")
        p.set_defaults(func=func)

    p = sub.add_parser("merge", help="combine frame and role labelings into frame-specific slots")
    p.add_argument("--frames", required=True, help="verb-instance labeling TSV")
    p.add_argument("--roles", required=True, help="slot-instance labeling TSV (may be partial)")
    p.add_argument("--corpus", required=True, help="task JSONL corpus")
    p.add_argument("--out", required=True, help="output labeling TSV")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("baseline", help="write a trivial baseline labeling")
    p.add_argument("--kind", required=True, choices=sorted(pipeline.BASELINES), help="baseline to run")
    p.add_argument("--corpus", required=True, help="task JSONL corpus")
    p.add_argument("--out", required=True, help="output labeling TSV")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("train-logreg", help="train the supervised role classifier")
    p.add_argument("--corpus", required=True, help="training corpus (task JSONL)")
    p.add_argument("--gold", help="gold role TSV (default: gold roles in the corpus)")
    p.add_argument("--extra-corpus", action="append",
                   help="corpus whose tokens join the label and idf vocabularies (repeatable)")
    _embedding_flags(p)
    _cluster_flags(p)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, help="gradient step size")
    p.add_argument("--max-epochs", dest="max_epochs", type=int, help="epoch limit")
    p.add_argument("--l2", type=float, help="L2 penalty on non-bias weights")
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train_logreg)

    p = sub.add_parser("predict-logreg", help="label slots with a trained classifier")
    p.add_argument("--model", required=True, help="model JSON from train-logreg")
    p.add_argument("--corpus", required=True, help="task JSONL corpus")
    _embedding_flags(p)
    p.add_argument("--out", required=True, help="output labeling TSV")
    p.set_defaults(func=cmd_predict_logreg)

    p = sub.add_parser("evaluate", help="score a labeling against gold (Purity F1, B-Cubed F1)")
    p.add_argument("--pred", required=True, help="predicted labeling TSV")
    p.add_argument("--gold", required=True, help="gold labeling TSV")
    p.add_argument("--table", action="store_true", help="print an aligned table instead of JSON")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "semframe: error: a subcommand is required")
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        summary = args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"semframe {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SemframeError, ValueError, OSError) as e:
        print(f"semframe {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        print(f"semframe {args.command}: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL
    print(f"{summary} [{time.perf_counter() - start:.2f}s]", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
