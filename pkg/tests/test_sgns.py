import numpy as np
import pytest

from embaug.sgns import SgnsConfig, build_vocab, negative_sample, train_sgns
from embaug.synthetic import make_two_topic_corpus


def test_build_vocab_examples():
    v = build_vocab([["a", "a", "b"]], mincount=2)
    assert v.words == ["a"] and v.counts.tolist() == [2] and v.total == 3
    v1 = build_vocab([["b", "a", "c", "a"]], mincount=1)
    assert v1.words == ["a", "b", "c"]
    with pytest.raises(ValueError):
        build_vocab([], 1)
    with pytest.raises(ValueError):
        build_vocab([[]], 1)


def test_noise_distribution_is_unigram_pow():
    v = build_vocab([["a"] * 16 + ["b"]], mincount=1)
    w = np.array([16.0, 1.0]) ** 0.75
    np.testing.assert_allclose(v.probs, w / w.sum(), rtol=1e-12)


def test_negative_sample_single_word_and_frequencies():
    rng = np.random.default_rng(0)
    single = build_vocab([["x", "x"]], 1)
    assert {negative_sample(single, rng) for _ in range(50)} == {0}
    v = build_vocab([["a"] * 16 + ["b"]], 1)
    draws = np.array([negative_sample(v, rng) for _ in range(20000)])
    assert abs(np.mean(draws == 0) - v.probs[0]) < 0.015


def test_epochs_zero_returns_init():
    sents = [["a", "b", "c"]] * 3
    cfg = SgnsConfig(dim=4, mincount=1, epochs=0, seed=5)
    emb = train_sgns(sents, cfg)
    expected = ((np.random.default_rng(5).random((3, 4)) - 0.5) / 4).astype(np.float32)
    np.testing.assert_array_equal(emb.matrix, expected)
    assert np.abs(emb.matrix).max() <= 0.5 / 4


def test_too_small_vocab():
    with pytest.raises(ValueError):
        train_sgns([["a", "a"]], SgnsConfig(dim=2, mincount=1))
    with pytest.raises(ValueError):
        train_sgns([["a", "b"]], SgnsConfig(dim=2, mincount=5))


def test_pair_is_learned():
    res = train_sgns([["x", "y"]] * 1000, SgnsConfig(dim=10, mincount=1, window=1, epochs=5, seed=2),
                     return_details=True)
    v = res.embedding["x"].astype(np.float64)
    u = res.output_vectors[res.vocab.index["y"]]
    assert 1 / (1 + np.exp(-u @ v)) > 0.95


def test_determinism_vocab_and_loss_trend():
    sents, a, b = make_two_topic_corpus(n_tokens=20_000, seed=3)
    cfg = SgnsConfig(dim=20, mincount=1, epochs=4, seed=9)
    r1 = train_sgns(sents, cfg, return_details=True)
    r2 = train_sgns(sents, cfg, return_details=True)
    assert r1.embedding.matrix.tobytes() == r2.embedding.matrix.tobytes()
    assert set(r1.embedding.words) == set(a) | set(b)
    L = r1.epoch_losses
    assert all(later <= earlier * 1.05 for earlier, later in zip(L, L[1:]))


def test_parallel_workers_train():
    sents, a, b = make_two_topic_corpus(n_tokens=20_000, seed=4)
    emb = train_sgns(sents, SgnsConfig(dim=20, mincount=1, epochs=3, workers=2, seed=1))
    U = emb.rows(a + b)
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    S = U @ U.T
    assert S[:50, :50].mean() > S[:50, 50:].mean() + 0.2


def test_subsample_runs():
    sents, _, _ = make_two_topic_corpus(n_tokens=5000, seed=5)
    emb = train_sgns(sents, SgnsConfig(dim=8, mincount=1, epochs=1, subsample=1e-3))
    assert np.isfinite(emb.matrix).all()
