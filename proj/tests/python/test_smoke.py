import math

import numpy as np
import pytest

import chdzdt


def test_tokenizer_round_trip():
    vocab = chdzdt.CharVocab.default()
    for word in ["tamazight", "برافو", "ⵜⴰⵎⴰⵣⵉⵖⵜ", "ça"]:
        ids = vocab.encode(word)
        assert len(ids) == 21
        assert ids[0] == 1  # CLS
        assert vocab.decode(ids) == word


def test_tokenizer_truncates_and_rejects_empty():
    vocab = chdzdt.CharVocab.default()
    assert vocab.decode(vocab.encode("abcdefgh", max_chars=4)) == "abcd"
    with pytest.raises(chdzdt.InputError):
        vocab.encode("   ")


def test_normalizer_examples():
    norm = chdzdt.Normalizer()
    assert norm.normalize("برافووووووو") == "برافوو"
    assert norm.normalize("✅✅yes. No!✅") == "✅ ✅ yes . No ! ✅"
    assert norm.process_line("دابا نمشي للدار", social=True) == []


def test_model_embed_shape_and_determinism(tmp_path):
    cfg = {"n_blocks": 1, "n_heads": 2, "hidden": 8, "dropout": 0.0, "seed": 3}
    model = chdzdt.Model.create(cfg)
    assert model.dim == 8
    assert model.num_params() == chdzdt.count_params(cfg)
    vecs = model.embed(["chkoun", "mlih"])
    assert vecs.shape == (2, 8)
    assert np.all(np.isfinite(vecs))
    path = tmp_path / "m.chdz"
    model.save(path)
    again = chdzdt.Model.load(path)
    assert again.config["hidden"] == 8
    np.testing.assert_array_equal(again.embed(["chkoun", "mlih"]), vecs)


def test_bad_config_raises():
    with pytest.raises(chdzdt.ConfigError):
        chdzdt.Model.create({"hidden": 8, "n_heads": 3})
    with pytest.raises(chdzdt.ConfigError):
        chdzdt.Model.create({"hiden": 8})


def test_train_reduces_loss():
    lexicon = chdzdt.toy_lexicon(seed=1, n_words=40)
    assert all(labels for _, labels in lexicon)
    model, log = chdzdt.train(
        lexicon,
        {"n_blocks": 1, "n_heads": 1, "hidden": 8, "dropout": 0.0, "init_scheme": "fan_in"},
        {"epochs": 5, "batch_size": 8, "lr": 5e-3},
    )
    epochs = [r["total"] for r in log if r["type"] == "epoch"]
    assert len(epochs) == 5
    assert all(math.isfinite(t) for t in epochs)
    assert epochs[-1] < epochs[0]
    clusters = chdzdt.toy_root_clusters(seed=1)
    assert len(clusters) == 20
    assert -1.0 <= model.acs(clusters[:3]) <= 1.0


def test_metrics():
    assert chdzdt.kendall([1, 2, 3], [2, 1, 3]) == pytest.approx(1 / 3)
    assert chdzdt.ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    pts = np.array([[0, 0], [0, 0.1], [10, 10], [10, 10.1]])
    assert chdzdt.silhouette(pts, [0, 0, 1, 1]) > 0.9
    labels = chdzdt.kmeans(pts, 2, seed=0)
    assert chdzdt.ari(labels, [0, 0, 1, 1]) == 1.0
    assert chdzdt.spearman([1, 2, 3, 4], [10, 20, 30, 41]) == pytest.approx(1.0)
