import pytest
from hypothesis import given, strategies as st

from embaug.text import (
    ProcessedText,
    StopwordPolicy,
    bow_tokens,
    default_policy,
    filter_stopwords,
    porter_stem,
    split_sentences,
    tokenize_tweet,
)

words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12)


@pytest.mark.parametrize("text, expected", [
    ("I'm sad :-( #Depression @Friend", ["i'm", "sad", ":-(", "#depression", "@friend"]),
    ("", []),
    ("see http://t.co/x now", ["see", "http://t.co/x", "now"]),
    ("don't stop :) ok", ["don't", "stop", ":)", "ok"]),
])
def test_tokenize_examples(text, expected):
    assert tokenize_tweet(text) == expected


def test_emoticon_not_split_from_digits():
    # "8)" is an emoticon, but not inside "18)"
    assert tokenize_tweet("age 18)") == ["age", "18", ")"]


def test_custom_emoticon_list():
    assert tokenize_tweet("hi <3", emoticons=["<3"]) == ["hi", "<3"]
    assert tokenize_tweet("hi <3", emoticons=[]) == ["hi", "<", "3"]


@given(st.text(max_size=80))
def test_tokens_nonempty_without_whitespace(text):
    pt = ProcessedText.from_raw(text)
    assert all(t and not any(c.isspace() for c in t) for t in pt.tokens)
    assert list(pt.tokens) == tokenize_tweet(text.lower())


@given(st.lists(words, max_size=15))
def test_tokenize_idempotent_on_plain_words(ws):
    toks = tokenize_tweet(" ".join(ws))
    assert tokenize_tweet(" ".join(toks)) == toks


def test_filter_examples():
    pol = StopwordPolicy(frozenset({"am", "i"}), frozenset({"i", "me", "my"}))
    assert filter_stopwords(["i", "am", "sad"], pol) == ["i", "sad"]
    assert filter_stopwords([], pol) == []
    assert filter_stopwords(["the", "the"], StopwordPolicy(frozenset({"the"}))) == []


def test_default_policy_keeps_first_person():
    pol = default_policy()
    for p in ("i", "me", "my", "mine", "myself"):
        assert p in pol.stopword_set and p not in pol.removal_set
    assert "the" in pol.removal_set


@given(st.lists(st.sampled_from(["i", "me", "the", "a", "sad", "my", "cry", "and"]), max_size=20))
def test_filter_preserves_pronouns_and_order(toks):
    out = filter_stopwords(toks)
    assert [t for t in toks if t in ("i", "me", "my")] == [t for t in out if t in ("i", "me", "my")]
    it = iter(toks)
    assert all(t in it for t in out)  # subsequence


@pytest.mark.parametrize("word, stem", [
    ("caresses", "caress"),
    ("ponies", "poni"),
    # full Porter continues past ATIONAL->ATE; "relate" loses its final e in step 5
    ("relational", "relat"),
    ("#depression", "#depression"),
    (":-(", ":-("),
])
def test_porter_examples(word, stem):
    assert porter_stem(word) == stem


@given(words)
def test_stem_never_longer(w):
    assert len(porter_stem(w)) <= len(w)


@pytest.mark.parametrize("text, expected", [
    ("I am sad. Help!", ["I am sad", "Help"]),
    ("no punct", ["no punct"]),
    ("a.. b", ["a", "b"]),
    ("wait… what?!", ["wait", "what"]),
])
def test_split_sentences_examples(text, expected):
    assert split_sentences(text) == expected


@given(st.text(max_size=60))
def test_split_sentences_have_no_terminators(text):
    for s in split_sentences(text):
        assert s and not any(c in s for c in ".?!…")


def test_bow_tokens_pipeline():
    assert bow_tokens("I am crying at the relational stuff :(") == ["i", "cri", "relat", "stuff", ":("]
