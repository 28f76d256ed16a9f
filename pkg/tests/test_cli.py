import numpy as np
import pytest

from siamtext.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, build_parser, run
from siamtext.train import load_checkpoint

SPEC = """
[toy/x]
alphabet = abcd
count = 60
min_length = 5
max_length = 9

[toy/y]
alphabet = wxyz
count = 60
min_length = 5
max_length = 9
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "spec.ini").write_text(SPEC, encoding="utf-8")
    assert run(["synth", "--spec", str(tmp_path / "spec.ini"), "--out", str(tmp_path), "--seed", "1", "--split", "0.25"]) == 0
    return tmp_path


def train_argv(d, out="m.ckpt", extra=()):
    return [
        "train", "--left", str(d / "toy.train.tsv"), "--right", str(d / "toy.train.tsv"),
        "--vocab", str(d / "vocab.txt"), "--out", str(d / out),
        "--epochs", "8", "--positives", "3", "--embed-dim", "16", "--hidden-dim", "16", "--output-dim", "32", *extra,
    ]


def test_synth_writes_corpora(workdir):
    lines = (workdir / "toy.tsv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 120
    assert len((workdir / "toy.test.tsv").read_text().splitlines()) == 30


def test_full_pipeline(workdir, capsys):
    d = workdir
    assert run(["featurize", "--train", str(d / "toy.train.tsv"), "--out", str(d / "vocab.txt")]) == EXIT_OK
    assert run(train_argv(d)) == EXIT_OK
    assert len((d / "m.ckpt.loss.tsv").read_text().splitlines()) == 8
    capsys.readouterr()
    rc = run(["eval", "--model", str(d / "m.ckpt"), "--refs", str(d / "toy.train.tsv"), "--test", str(d / "toy.test.tsv"),
              "--metrics", str(d / "metrics.tsv"), "--confusion", str(d / "conf.txt")])
    assert rc == EXIT_OK
    printed = capsys.readouterr().out
    assert printed.startswith("accuracy")
    assert float(printed.split()[1]) >= 0.90  # disjoint alphabets: separable by construction
    names = [l.split("\t")[0] for l in (d / "metrics.tsv").read_text().splitlines()]
    assert names[:4] == ["accuracy", "macro_precision", "macro_recall", "macro_f1"]
    assert run(["predict", "--model", str(d / "m.ckpt"), "--refs", str(d / "toy.train.tsv"), "--text", "abcabd"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] in ("x", "y") and out[1].startswith("x\tmatches=")


def test_config_file_sets_defaults(workdir):
    d = workdir
    run(["featurize", "--train", str(d / "toy.train.tsv"), "--out", str(d / "vocab.txt")])
    (d / "train.ini").write_text("[train]\nmargin = 0.3\nepochs = 2\n", encoding="utf-8")
    argv = train_argv(d)
    argv = argv[: argv.index("--epochs")] + argv[argv.index("--epochs") + 2 :]
    assert run(argv + ["--config", str(d / "train.ini")]) == EXIT_OK
    _, _, configs = load_checkpoint(d / "m.ckpt")
    assert configs["train"]["margin"] == 0.3 and configs["train"]["epochs"] == 2
    (d / "bad.ini").write_text("[train]\nlearning_speed = 3\n", encoding="utf-8")
    assert run(argv + ["--config", str(d / "bad.ini")]) == EXIT_DATA


def test_predict_empty_text_is_data_error(workdir):
    d = workdir
    run(["featurize", "--train", str(d / "toy.train.tsv"), "--out", str(d / "vocab.txt")])
    run(train_argv(d))
    assert run(["predict", "--model", str(d / "m.ckpt"), "--refs", str(d / "toy.train.tsv"), "--text", "  "]) == EXIT_DATA


def test_usage_errors():
    assert run([]) == EXIT_USAGE
    assert run(["train", "--bogus"]) == EXIT_USAGE
    assert run(["frobnicate"]) == EXIT_USAGE


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("ok\tx\nno tab here\n", encoding="utf-8")
    assert run(["featurize", "--train", str(bad), "--out", str(tmp_path / "v.txt")]) == EXIT_DATA
    assert ":2:" in capsys.readouterr().err
    assert run(["featurize", "--train", str(tmp_path / "missing.tsv"), "--out", str(tmp_path / "v.txt")]) == EXIT_DATA
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"garbage")
    assert run(["predict", "--model", str(junk), "--refs", str(bad), "--text", "hi"]) == EXIT_DATA


def test_help_documents_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name in ("train", "eval", "predict", "synth", "featurize"):
        text = sub[name].format_help()
        for action in sub[name]._actions:
            if action.option_strings and action.default not in (None, "==SUPPRESS==") and action.dest != "help":
                assert "default:" in text
        assert "--seed" in text or name == "featurize"
