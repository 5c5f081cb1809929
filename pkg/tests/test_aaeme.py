import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embaug import aaeme as A
from embaug.embedding import Embedding


def _model(E, D, k=None, act="linear"):
    E = np.asarray(E, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    k = E.shape[0]
    return A.AaemeModel(E, np.zeros(k), E.copy(), np.zeros(k), D, np.zeros(D.shape[0]), D.copy(),
                        np.zeros(D.shape[0]), activation=act)


def test_meta_embed_examples():
    I = np.eye(2)
    m = _model(I, I)
    np.testing.assert_array_equal(A.meta_embed(m, [3, 4], [3, 4]), [3, 4])
    np.testing.assert_array_equal(A.meta_embed(m, [2, 0], [0, 2]), [1, 1])
    z = _model(np.zeros((2, 2)), np.zeros((2, 2)))
    np.testing.assert_array_equal(A.meta_embed(z, [2, 0], [0, 2]), [0, 0])
    with pytest.raises(ValueError):
        A.meta_embed(m, [1, 2, 3], [1, 2])


def test_reconstruction_examples():
    I = np.eye(2)
    X = np.array([[1.0, 0.0], [0.6, 0.8]])
    assert A.reconstruction_loss(_model(I, I), X, X) == 0.0
    assert A.reconstruction_loss(_model(np.zeros((2, 2)), np.zeros((2, 2))), X, X) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        A.reconstruction_loss(_model(I, I), np.zeros((0, 2)), np.zeros((0, 2)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_linear_homogeneity(seed, a):
    m = A.init_aaeme(3, 4, 2, seed=seed)
    rng = np.random.default_rng(seed)
    x1, x2 = rng.normal(size=3), rng.normal(size=4)
    # biases are zero at init, so the encoder is linear
    np.testing.assert_allclose(A.meta_embed(m, a * x1, a * x2), a * A.meta_embed(m, x1, x2), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["linear", "tanh"]))
def test_gradients(seed, act):
    rng = np.random.default_rng(seed)
    m = A.init_aaeme(3, 2, 2, seed=seed, activation=act)
    for P in m.params().values():
        P += rng.normal(0, 0.2, P.shape)
    X1, X2 = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    _, g = A.loss_and_grad(m, X1, X2)
    eps = 1e-6
    for k, P in m.params().items():
        num = np.zeros_like(P)
        for i in np.ndindex(P.shape):
            old = P[i]
            P[i] = old + eps
            up = A.loss_and_grad(m, X1, X2)[0]
            P[i] = old - eps
            dn = A.loss_and_grad(m, X1, X2)[0]
            P[i] = old
            num[i] = (up - dn) / (2 * eps)
        err = np.linalg.norm(g[k] - num) / (np.linalg.norm(g[k]) + np.linalg.norm(num) + 1e-300)
        assert err < 1e-5, (k, err)


def _sources(seed=0, n=200, d1=6, d2=4):
    rng = np.random.default_rng(seed)
    w = [f"w{i}" for i in range(n)]
    s1 = Embedding(w, rng.normal(size=(n, d1)))
    s2 = Embedding(w[: n // 2] + [f"x{i}" for i in range(n // 2)], rng.normal(size=(n, d2)))
    return s1, s2


def test_train_epochs_zero_and_empty_vocab():
    s1, s2 = _sources()
    m = A.train_aaeme(s1, s2, A.AaemeConfig(epochs=0, seed=4))
    init = A.init_aaeme(6, 4, 6, seed=4)
    for k, v in m.params().items():
        np.testing.assert_array_equal(v, init.params()[k])
    with pytest.raises(ValueError):
        A.train_aaeme(s1, Embedding(["zz"], np.zeros((1, 4))))


def test_training_reduces_loss_and_meta_embedding_shape():
    s1, s2 = _sources()
    m, hist = A.train_aaeme(s1, s2, A.AaemeConfig(meta_dim=5, epochs=30, seed=1), return_history=True)
    assert min(hist.train_loss) < hist.train_loss[0]
    meta = A.build_meta_embedding(m, s1, s2)
    assert len(meta) == 100 and meta.dim == 5


def test_identity_model_meta_is_mean():
    rng = np.random.default_rng(3)
    w = ["a", "b", "c"]
    s1 = Embedding(w, rng.normal(size=(3, 2)))
    s2 = Embedding(w, rng.normal(size=(3, 2)))
    m = _model(np.eye(2), np.eye(2))
    m.normalize = False
    meta = A.build_meta_embedding(m, s1, s2)
    np.testing.assert_allclose(meta.matrix, ((s1.matrix + s2.matrix) / 2).astype(np.float32))


def test_checkpoint_roundtrip(tmp_path):
    m = A.init_aaeme(3, 2, 2, seed=1, activation="tanh", normalize=False)
    A.save_aaeme(m, tmp_path / "a.ckpt")
    back = A.load_aaeme(tmp_path / "a.ckpt")
    assert back.activation == "tanh" and back.normalize is False
    for k, v in m.params().items():
        np.testing.assert_array_equal(v, back.params()[k])
