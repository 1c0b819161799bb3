import json

import pytest

import anssel


def test_loss_and_metrics():
    assert anssel.pairwise_loss(0.9, 0.1) >= 0.0
    assert anssel.pairwise_loss(0.9, 0.1) == pytest.approx(0.10536, abs=1e-4)
    rr, ap = anssel.rank_metrics([0.9, 0.8, 0.1], [False, True, True])
    assert rr == pytest.approx(0.5)
    assert ap == pytest.approx((1 / 2 + 2 / 3) / 2)
    assert anssel.rank_metrics([0.3, 0.2], [False, False]) == (0.0, 0.0)


def test_tokenize():
    assert anssel.tokenize("Who wrote Hamlet?") == ["who", "wrote", "hamlet", "?"]


def test_convert_and_stats(tmp_path):
    tsv = tmp_path / "c.tsv"
    tsv.write_text("q1\tWho?\tShe did.\t1\nq1\tWho?\tNobody.\t0\nq2\tWhy?\tBecause.\t0\n")
    out = tmp_path / "c.jsonl"
    anssel.convert_tsv(tsv, out, note="labels already binary")
    stats = anssel.dataset_stats(out)
    assert stats["num_questions"] == 2
    assert stats["num_train_pairs"] == 1


def test_errors(tmp_path):
    with pytest.raises(anssel.DataError):
        anssel.dataset_stats(tmp_path / "missing.jsonl")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"batch_size": 0}))
    with pytest.raises(anssel.ConfigError):
        anssel.train(tmp_path / "a", tmp_path / "b", tmp_path / "out", config_path=bad)
    assert issubclass(anssel.NumericalError, anssel.AnsselError)


def test_train_eval_rank(tmp_path):
    train_file = tmp_path / "train.jsonl"
    dev_file = tmp_path / "dev.jsonl"
    anssel.make_separable_corpus(train_file, num_questions=12, seed=3)
    anssel.make_separable_corpus(dev_file, num_questions=4, seed=4, id_prefix="d")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"batch_size": 8, "model": {"num_layers": 1}}))
    out = tmp_path / "run"
    history = anssel.train(train_file, dev_file, out, config_path=cfg, epochs=1, seed=2)
    assert len(history["epoch_mean_loss"]) == 1
    for name in ("model.ckpt", "vocab.txt", "history.json", "config.json"):
        assert (out / name).exists()

    model = anssel.Model(out / "model.ckpt", out / "vocab.txt")
    assert model.config["model"]["num_layers"] == 1
    report = model.evaluate(dev_file, filter="keep_all", run_file=tmp_path / "run.trec")
    assert report["num_questions_scored"] == 4
    assert 0.0 <= report["mrr"] <= 1.0
    assert (tmp_path / "run.trec").read_text().count("\n") > 0

    s = model.score("mk1 what", "mk1 river")
    assert 0.0 < s < 1.0
    ranked = model.rank("mk1 what", ["mk1 river", "mk2 river", "mk3 river"])
    assert sorted(i for i, _ in ranked) == [0, 1, 2]
    assert ranked[0][1] >= ranked[-1][1]
