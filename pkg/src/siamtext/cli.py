"""Command-line interface: ``siamtext {synth,featurize,train,eval,predict}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

from siamtext.classify import build_reference_set, classify, evaluate
from siamtext.corpus import CorpusError, build_pairs, generate_synthetic_corpus, load_labeled_corpus, load_synth_spec, split_corpus
from siamtext.featurizer import SegmenterError, TrigramVocabulary, build_vocabulary, encode, encode_corpus
from siamtext.net import NetConfig, init_params
from siamtext.train import CheckpointError, NumericalAbort, TrainConfig, load_checkpoint, save_checkpoint, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

log = logging.getLogger("siamtext")


class DataError(Exception):
    pass


def _cmd_synth(args) -> None:
    spec = load_synth_spec(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, lang in enumerate(sorted(spec)):
        corpus = generate_synthetic_corpus(spec[lang], seed=args.seed + k)
        path = out / f"{lang}.tsv"
        corpus.save(path)
        print(f"{path}\t{len(corpus)} sentences\t{len(corpus.label_set)} labels")
        if args.split:
            train_part, test_part = split_corpus(corpus, args.split, args.seed + k)
            train_part.save(out / f"{lang}.train.tsv")
            test_part.save(out / f"{lang}.test.tsv")


def _cmd_featurize(args) -> None:
    corpora = [load_labeled_corpus(p) for p in args.train]
    vocab = build_vocabulary(corpora, min_count=args.min_count)
    vocab.save(args.out)
    print(f"{args.out}\t{vocab.size} entries (including unk)")


def _cmd_train(args) -> None:
    vocab = TrigramVocabulary.load(args.vocab)
    left = encode_corpus(load_labeled_corpus(args.left), vocab)
    if Path(args.right).resolve() == Path(args.left).resolve():
        right = left  # monolingual: build_pairs then excludes self-pairs
    else:
        right = encode_corpus(load_labeled_corpus(args.right), vocab)
    dataset = build_pairs(left, right, args.negatives, args.seed, positives_per_left=args.positives)
    net_cfg = NetConfig(
        vocab.size, args.embed_dim, args.hidden_dim, args.output_dim, args.init_scale, args.seed
    )
    train_cfg = TrainConfig(
        batch_size=args.batch,
        epochs=args.epochs,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        clip_norm=args.clip if args.clip > 0 else None,
        seed=args.seed,
        margin=args.margin,
        threads=args.threads,
    )
    log.info("%d pairs (%d positive, %d negative)", len(dataset), dataset.positive_count, dataset.negative_count)
    params, report = train(init_params(net_cfg), dataset, train_cfg)
    save_checkpoint(params, vocab, {"net": net_cfg, "train": train_cfg}, args.out)
    loss_log = args.loss_log or f"{args.out}.loss.tsv"
    Path(loss_log).write_text(report.loss_log(), encoding="utf-8")
    print(f"{args.out}\tfinal mean loss {report.epoch_mean_loss[-1]:.6g}\tchecksum {report.checksum}")


def _load_model_and_refs(args):
    params, vocab, configs = load_checkpoint(args.model)
    refs_corpus = encode_corpus(load_labeled_corpus(args.refs), vocab)
    refs = build_reference_set(params, refs_corpus, args.per_class, args.seed)
    tau = args.tau if args.tau is not None else configs.get("train", {}).get("margin", 0.5)
    return params, vocab, refs, tau


def _cmd_eval(args) -> None:
    params, vocab, refs, tau = _load_model_and_refs(args)
    test = encode_corpus(load_labeled_corpus(args.test), vocab)
    metrics = evaluate(params, refs, test, tau=tau, mode=args.mode)
    sys.stdout.write(metrics.table())
    sys.stdout.write("\n" + metrics.confusion_grid())
    if args.metrics:
        Path(args.metrics).write_text(metrics.to_tsv(), encoding="utf-8")
    if args.confusion:
        Path(args.confusion).write_text(metrics.confusion_grid(), encoding="utf-8")


def _cmd_predict(args) -> None:
    if not args.text.strip():
        raise DataError("--text is empty")
    params, vocab, refs, tau = _load_model_and_refs(args)
    label, diag = classify(params, refs, encode(args.text, vocab), tau=tau, mode=args.mode)
    print(label)
    for lab in refs.labels:
        print(f"{lab}\tmatches={diag['match_counts'][lab]}\tmean_cos={diag['mean_similarity'][lab]:.6f}")


def _read_config_defaults(path: str | None, section: str) -> dict:
    if not path:
        return {}
    parser = configparser.ConfigParser(interpolation=None)
    if not parser.read(path, encoding="utf-8"):
        raise DataError(f"config file not found: {path}")
    if not parser.has_section(section):
        return {}
    return {k.replace("-", "_"): v for k, v in parser[section].items()}


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="siamtext", description="Siamese trigram Bi-LSTM text classifier.", allow_abbrev=False
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic labeled corpora", formatter_class=fmt, allow_abbrev=False)
    p.add_argument("--spec", required=True, help="INI file with one [language/label] section per class")
    p.add_argument("--out", required=True, help="output directory; one <language>.tsv per language")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--split", type=float, default=None, help="also write stratified <language>.train/.test.tsv with this test fraction")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("featurize", help="build the joint trigram vocabulary", formatter_class=fmt, allow_abbrev=False)
    p.add_argument("--train", nargs="+", required=True, help="one or more text<TAB>label training files")
    p.add_argument("--out", required=True, help="vocabulary file to write")
    p.add_argument("--min-count", type=int, default=1, help="drop trigrams seen fewer times")
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="train the shared encoder on sentence pairs", formatter_class=fmt, allow_abbrev=False)
    p.add_argument("--config", help="INI file whose [train] section supplies defaults for these flags")
    p.add_argument("--left", required=True, help="left corpus (text<TAB>label)")
    p.add_argument("--right", required=True, help="right corpus; the same path as --left trains monolingually")
    p.add_argument("--vocab", required=True, help="vocabulary file from 'featurize'")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--loss-log", help="loss log path (default: <out>.loss.tsv)")
    p.add_argument("--margin", type=float, default=0.5, help="contrastive margin m in [0, 1]")
    p.add_argument("--lr", type=float, default=1e-3, help="learning rate")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam", help="optimizer")
    p.add_argument("--epochs", type=int, default=10, help="training epochs")
    p.add_argument("--batch", type=int, default=32, help="pairs per batch")
    p.add_argument("--clip", type=float, default=5.0, help="global gradient-norm clip; 0 disables")
    p.add_argument("--negatives", type=int, default=1, help="negative pairs per positive pair")
    p.add_argument("--positives", type=int, default=1, help="positive pairs per left sentence")
    p.add_argument("--embed-dim", type=int, default=64, help="trigram embedding size")
    p.add_argument("--hidden-dim", type=int, default=64, help="LSTM hidden size per direction")
    p.add_argument("--output-dim", type=int, default=128, help="projection size d")
    p.add_argument("--init-scale", type=float, default=1.0, help="uniform init bound before 1/sqrt(fan_in)")
    p.add_argument("--seed", type=int, default=0, help="random seed for pairing, init and shuffling")
    p.add_argument("--threads", type=int, default=1, help="worker threads per batch; 1 is bitwise deterministic")
    p.set_defaults(func=_cmd_train)

    for name, func, helptext in (
        ("eval", _cmd_eval, "evaluate on a labeled test corpus"),
        ("predict", _cmd_predict, "classify one sentence"),
    ):
        p = sub.add_parser(name, help=helptext, formatter_class=fmt, allow_abbrev=False)
        p.add_argument("--model", required=True, help="checkpoint from 'train'")
        p.add_argument("--refs", required=True, help="reference corpus (the resource-rich side)")
        p.add_argument("--per-class", type=int, default=100, help="references sampled per class")
        p.add_argument("--tau", type=float, default=None, help="match threshold (default: the training margin)")
        p.add_argument("--mode", choices=("votes", "mean"), default="votes", help="match-count voting or mean cosine")
        p.add_argument("--seed", type=int, default=0, help="reference sampling seed")
        if name == "eval":
            p.add_argument("--test", required=True, help="labeled test corpus")
            p.add_argument("--metrics", help="write name<TAB>value metrics here")
            p.add_argument("--confusion", help="write the labeled confusion matrix here")
        else:
            p.add_argument("--text", required=True, help="sentence to classify")
        p.set_defaults(func=func)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "train" and args.config:
            defaults = _read_config_defaults(args.config, "train")
            sub = parser._subparsers._group_actions[0].choices["train"]
            known = {a.dest for a in sub._actions}
            unknown = sorted(set(defaults) - known)
            if unknown:
                raise DataError(f"unknown keys in {args.config}: {', '.join(unknown)}")
            sub.set_defaults(**defaults)
            args = parser.parse_args(argv)
            for a in sub._actions:
                if a.type is not None and isinstance(getattr(args, a.dest), str) and a.type is not str:
                    setattr(args, a.dest, a.type(getattr(args, a.dest)))
    except SystemExit as exc:
        return int(exc.code or 0)
    except DataError as exc:
        print(f"siamtext: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except NumericalAbort as exc:
        print(f"siamtext: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, CorpusError, CheckpointError, SegmenterError, FileNotFoundError, ValueError) as exc:
        print(f"siamtext: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
