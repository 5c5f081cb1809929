import json

import numpy as np
import pytest

from embaug.cli import build_parser, main
from embaug.embedding import load_embedding
from embaug.synthetic import write_benchmark


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    return write_benchmark(tmp_path_factory.mktemp("bench"), n_tweets=80, n_concepts=12, seed=3)


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    out = capsys.readouterr().out
    for cmd in ("train-embedding", "map", "map-centroid", "aaeme", "build-ate", "ablate-partial", "featurize",
                "evaluate", "ablation-suite", "profile-dataset", "pca-export"):
        assert cmd in out


def test_map_then_build_ate(bench, tmp_path):
    ck = tmp_path / "mapper.ckpt"
    assert main(["map", "--source", bench["te"], "--target", bench["de"], "--hidden", "16", "--epochs", "3",
                 "--out", str(ck)]) == 0
    assert json.loads((tmp_path / "mapper.ckpt.config.json").read_text())["hidden"] == 16
    out = tmp_path / "ate.vec"
    assert main(["build-ate", "--source", bench["te"], "--mapper", str(ck), "--out", str(out)]) == 0
    assert load_embedding(out).words == load_embedding(bench["te"]).words
    part = tmp_path / "part.vec"
    assert main(["ablate-partial", "--source", bench["te"], "--target", bench["de"], "--mapper", str(ck),
                 "--out", str(part)]) == 0
    cen = tmp_path / "cen.ckpt"
    assert main(["map-centroid", "--source", bench["te"], "--target", bench["de"], "--hidden", "8",
                 "--epochs", "2", "--variant", "2", "--k-near", "3", "--k-far", "3", "--out", str(cen)]) == 0


def test_aaeme_and_pca(bench, tmp_path):
    out = tmp_path / "meta.bin"
    assert main(["aaeme", "--source1", bench["te"], "--source2", bench["de"], "--epochs", "2",
                 "--meta-dim", "6", "--out", str(out), "--checkpoint", str(tmp_path / "a.ckpt")]) == 0
    assert load_embedding(out).dim == 6
    (tmp_path / "pos.txt").write_text("c000f0\nc002f0\nc004f0\n")
    (tmp_path / "neg.txt").write_text("c001f0\nc003f0\nmissing\n")
    assert main(["pca-export", "--embedding", bench["de"], "--list", f"POS={tmp_path / 'pos.txt'}",
                 "--list", f"NEG={tmp_path / 'neg.txt'}", "--out", str(tmp_path / "p.tsv")]) == 0
    assert "# missing[NEG]=missing" in (tmp_path / "p.tsv").read_text()


def test_train_embedding(tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("\n".join(["i feel sad and alone. nobody cares!", "the sun is warm today."] * 50))
    out = tmp_path / "de.vec"
    assert main(["train-embedding", "--corpus", str(corpus), "--out", str(out), "--dim", "8", "--mincount", "2",
                 "--epochs", "1"]) == 0
    assert "sad" in load_embedding(out)


def test_featurize_and_profile(bench, tmp_path, capsys):
    out = tmp_path / "f.npz"
    assert main(["featurize", "--dataset", bench["dataset"], "--features", "bow", "--bow-size", "10",
                 "--out", str(out)]) == 0
    with np.load(out) as z:
        assert z["X"].shape == (80, 10) and z["y"].shape == (80,)
    assert main(["featurize", "--dataset", bench["dataset"], "--features", "pad", "--embedding", bench["te"],
                 "--max-len", "3", "--out", str(out)]) == 0
    with np.load(out) as z:
        assert z["X"].shape[1] == 3 * 20
    dic = tmp_path / "l.dic"
    dic.write_text("%\n1\tforum\n2\tfill\n%\nc0*\t1\nfill*\t2\n")
    assert main(["profile-dataset", "--dataset", bench["dataset"], "--lexicon", str(dic)]) == 0
    assert "forum" in capsys.readouterr().out


def test_evaluate_config_override_and_reproduce(bench, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": bench["dataset"], "features": "bow", "model": "lsvm", "runs": 5,
                               "folds": 3, "c_exponents": "-1,1"}))
    assert main(["evaluate", "--config", str(cfg), "--runs", "2", "--seed", "7",
                 "--out-dir", str(tmp_path / "a"), "--log-level", "WARNING"]) == 0
    resolved = json.loads((tmp_path / "a" / "resolved_config.json").read_text())
    assert resolved["runs"] == 2 and resolved["model"] == "lsvm" and resolved["seed"] == 7
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["n_runs"] == 2
    assert main(["evaluate", "--config", str(tmp_path / "a" / "resolved_config.json"),
                 "--out-dir", str(tmp_path / "b")]) == 0
    for f in ("report.json", "report.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_evaluate_format_json_only(bench, tmp_path):
    assert main(["evaluate", "--dataset", bench["dataset"], "--model", "nb", "--runs", "1",
                 "--format", "json", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "report.json").exists() and not (tmp_path / "report.txt").exists()


def test_ablation_suite_cli(bench, tmp_path):
    assert main(["ablation-suite", "--dataset", bench["dataset"], "--te", bench["te"], "--de", bench["de"],
                 "--model", "lr", "--runs", "1", "--folds", "3", "--c-exponents", "0", "--map-epochs", "3",
                 "--hidden", "16", "--spaces", "TE,ATE", "--out-dir", str(tmp_path)]) == 0
    assert set(json.loads((tmp_path / "ablation.json").read_text())) == {"TE", "ATE"}


@pytest.mark.parametrize("argv", [
    ["evaluate", "--dataset", "nope.tsv", "--model", "nb", "--features", "te", "--no-scale", "--out-dir", "x"],
    ["evaluate", "--dataset", "missing.tsv", "--out-dir", "x"],
    ["evaluate", "--out-dir", "x"],
    ["map", "--source", "a.vec"],
    ["ablation-suite", "--dataset", "d", "--te", "a", "--de", "b", "--spaces", "BOGUS", "--out-dir", "x"],
])
def test_usage_errors(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) != 0
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"bogus": 1}')
    assert main(["evaluate", "--config", str(cfg)]) == 2


def test_malformed_embedding_reports_error(bench, tmp_path, capsys):
    bad = tmp_path / "bad.vec"
    bad.write_text("1 2\nw 1\n")
    assert main(["build-ate", "--source", str(bad), "--mapper", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "expected 2 values" in capsys.readouterr().err
