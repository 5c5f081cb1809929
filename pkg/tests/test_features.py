import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from embaug import features as F
from embaug.embedding import Embedding

toks = st.lists(st.sampled_from(["sad", "cry", "happy", "i", "zzz", "hopeless"]), max_size=12)


def test_fit_bow_examples():
    assert len(F.fit_bow([["a", "b"], ["c"]], size=400)) == 3
    assert F.fit_bow([["a", "a", "a", "b", "b", "c"]], size=2).terms == ("a", "b")
    assert F.fit_bow([["b", "a", "b", "a"]], size=1).terms == ("a",)
    with pytest.raises(ValueError):
        F.fit_bow([])


def test_bow_vector_examples():
    v = F.BowVocab(("i", "me"), (2, 1))
    np.testing.assert_array_equal(F.bow_vector(["i", "me", "i"], v), [2, 1])
    np.testing.assert_array_equal(F.bow_vector(["zz"], v), [0, 0])
    np.testing.assert_array_equal(F.bow_vector([], v), [0, 0])


@given(toks)
def test_bow_counts_are_bounded_integers(t):
    v = F.fit_bow([["sad", "cry", "i"]], 400)
    x = F.bow_vector(t, v)
    assert (x >= 0).all() and (x == np.round(x)).all() and x.sum() <= len(t)


@pytest.fixture
def lex():
    return F.CategoryLexicon.from_patterns({1: "SADNESS", 2: "POSEMO"}, {"sad*": [1], "cry": [1], "happy": [2]})


def test_category_examples(lex):
    v = F.category_percentages(["i", "am", "sad", "today"], lex)
    assert v.tolist() == [25.0, 0.0]
    np.testing.assert_array_equal(F.category_percentages([], lex), [0, 0])
    assert lex.match("sadness") == {1} and lex.match("cryer") == set()
    assert F.dataset_category_profile([["i", "am", "sad", "x"]], lex)["SADNESS"] == 25.0
    assert F.dataset_category_profile([["a", "b"], ["sad", "b"]], lex)["SADNESS"] == 25.0
    with pytest.raises(ValueError):
        F.dataset_category_profile([], lex)


@given(toks)
def test_category_bounds_and_full_match(t):
    lex = F.CategoryLexicon.from_patterns({1: "ALL"}, {"*": [1]})
    v = F.category_percentages(t, lex)
    assert v.tolist() == ([100.0] if t else [0.0])
    w = F.category_percentages(t, F.CategoryLexicon.from_patterns({1: "S"}, {"sad": [1], "cr*": [1]}))
    assert 0 <= w[0] <= 100


def test_load_category_lexicon(tmp_path):
    p = tmp_path / "l.dic"
    p.write_text("%\n1\tsad\n2\tposemo\n%\nsad*\t1\nhappy\t2,1\ncry\t1\t2\n")
    lex = F.load_category_lexicon(p)
    assert lex.names == ["sad", "posemo"]
    assert lex.match("happy") == {1, 2} and lex.match("saddest") == {1} and lex.match("cry") == {1, 2}
    p.write_text("sad\t1\n")
    with pytest.raises(ValueError):
        F.load_category_lexicon(p)


def test_emotion_examples(tmp_path):
    lex = F.EmotionLexicon({"sad": np.eye(8)[F.EMOTIONS.index("sadness")] * 2.0})
    s = F.emotion_scores(["sad", "sad"], lex)
    assert s[F.EMOTIONS.index("sadness")] == 4.0 and s.sum() == 4.0
    assert not F.emotion_scores(["zz"], lex).any() and not F.emotion_scores([], lex).any()
    p = tmp_path / "e.tsv"
    p.write_text("sad\tsadness\t1\nfear\tafraid\t0.5\n")
    e = F.load_emotion_lexicon(p)
    assert e.scores["afraid"][F.EMOTIONS.index("fear")] == 0.5


@given(toks, toks)
def test_emotion_additive(a, b):
    lex = F.EmotionLexicon({"sad": np.arange(8.0), "cry": np.ones(8)})
    np.testing.assert_allclose(F.emotion_scores(a + b, lex), F.emotion_scores(a, lex) + F.emotion_scores(b, lex))


@pytest.fixture
def emb():
    return Embedding(["a", "b", "c"], np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]))


def test_avg_and_pad_examples(emb):
    np.testing.assert_array_equal(F.avg_embedding(["a", "b"], emb), [0.5, 0.5])
    np.testing.assert_array_equal(F.avg_embedding(["a", "zzz"], emb), [1, 0])
    np.testing.assert_array_equal(F.avg_embedding(["zzz"], emb), [0, 0])
    X, oov = F.average_embeddings([["a"], ["zzz"], []], emb)
    assert oov.tolist() == [False, True, True]
    e1 = Embedding(["x"], np.array([[1.0, 1.0]]))
    np.testing.assert_array_equal(F.pad_concat(["x"], e1, 2), [1, 1, 0, 0])
    np.testing.assert_array_equal(F.pad_concat([], e1, 2), [0, 0, 0, 0])
    np.testing.assert_array_equal(F.pad_concat(["a", "b", "c"], emb, 2), [1, 0, 0, 1])


@given(st.permutations(["a", "b", "c", "a", "zzz"]))
def test_order_sensitivity(perm):
    e = Embedding(["a", "b", "c"], np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]))
    np.testing.assert_allclose(F.avg_embedding(perm, e), F.avg_embedding(["a", "b", "c", "a", "zzz"], e))


def test_pad_concat_is_order_sensitive(emb):
    assert not np.array_equal(F.pad_concat(["a", "b"], emb, 2), F.pad_concat(["b", "a"], emb, 2))


def test_minmax_examples():
    s = F.fit_minmax(np.array([[2.0], [4.0], [6.0]]))
    np.testing.assert_array_equal(F.apply_minmax(s, [[2.0], [4.0], [6.0]]).ravel(), [0, 0.5, 1])
    assert F.apply_minmax(s, [[8.0]])[0, 0] == 1.5
    c = F.fit_minmax(np.array([[5.0], [5.0]]))
    np.testing.assert_array_equal(c.transform([[5.0], [5.0]]).ravel(), [0, 0])
    with pytest.raises(ValueError):
        F.fit_minmax(np.zeros((0, 2)))


@given(hnp.arrays(np.float64, (6, 3), elements=st.floats(-1e3, 1e3)))
def test_minmax_unit_range(X):
    Z = F.fit_minmax(X).transform(X)
    nonconst = X.max(0) > X.min(0)
    np.testing.assert_allclose(Z.min(0)[nonconst], 0, atol=1e-12)
    np.testing.assert_allclose(Z.max(0)[nonconst], 1, atol=1e-12)


def test_dataset_io(tmp_path):
    ds = F.LabeledDataset(("hi there", "so sad"), np.array([0, 1]))
    F.save_dataset(ds, tmp_path / "d.tsv")
    back = F.load_dataset(tmp_path / "d.tsv")
    assert back.texts == ds.texts and back.labels.tolist() == [0, 1]
    (tmp_path / "bad.tsv").write_text("2\tx\n")
    with pytest.raises(ValueError):
        F.load_dataset(tmp_path / "bad.tsv")
