"""Tweet-aware tokenization, stopword filtering, stemming and sentence splitting."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable

from nltk.stem.porter import PorterStemmer

__all__ = [
    "ProcessedText",
    "StopwordPolicy",
    "default_policy",
    "load_wordlist",
    "tokenize_tweet",
    "filter_stopwords",
    "porter_stem",
    "split_sentences",
    "bow_tokens",
    "read_corpus",
]

RETAINED_PRONOUNS = frozenset({"i", "me", "my", "mine", "myself"})


def load_wordlist(path=None, name: str | None = None) -> list[str]:
    """Read a one-entry-per-line UTF-8 list, skipping blanks and ``#`` comments.

    Either ``path`` (a file on disk) or ``name`` (a file bundled in
    ``embaug/data``) must be given.
    """
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = resources.files("embaug.data").joinpath(name).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


@dataclass(frozen=True)
class StopwordPolicy:
    stopword_set: frozenset[str]
    retained_pronouns: frozenset[str] = RETAINED_PRONOUNS

    @property
    def removal_set(self) -> frozenset[str]:
        return self.stopword_set - self.retained_pronouns


@lru_cache(maxsize=1)
def default_policy() -> StopwordPolicy:
    return StopwordPolicy(frozenset(w.lower() for w in load_wordlist(name="stopwords.txt")))


@dataclass(frozen=True)
class ProcessedText:
    raw: str
    tokens: tuple[str, ...] = field(default=())

    @classmethod
    def from_raw(cls, raw: str) -> "ProcessedText":
        return cls(raw, tuple(tokenize_tweet(raw)))


_URL = r"(?:https?://|www\.)\S+"
_MENTION = r"@\w+"
_HASHTAG = r"#\w+"
# apostrophes inside a word keep contractions together (i'm, don't)
_WORD = r"\w+(?:['’]\w+)*"
_OTHER = r"[^\w\s]"


@lru_cache(maxsize=4)
def _token_regex(emoticons: tuple[str, ...]) -> re.Pattern:
    # longest emoticon first so ":-((" beats ":-("
    emo = "|".join(re.escape(e) for e in sorted(emoticons, key=len, reverse=True))
    parts = [_URL]
    if emo:
        # an emoticon may not start in the middle of a word (e.g. "8)" inside "18)")
        parts.append(rf"(?<!\w)(?:{emo})")
    parts += [_MENTION, _HASHTAG, _WORD, _OTHER]
    return re.compile("|".join(parts), re.UNICODE)


@lru_cache(maxsize=1)
def _default_emoticons() -> tuple[str, ...]:
    return tuple(sorted({e.lower() for e in load_wordlist(name="emoticons.txt")}))


def tokenize_tweet(text: str, emoticons: Iterable[str] | None = None) -> list[str]:
    """Lowercase ``text`` and split it into tokens.

    URLs, emoticons, ``#hashtags`` and ``@mentions`` come out as single
    tokens. Other punctuation characters are emitted one per token.

    >>> tokenize_tweet("I'm sad :-( #Depression @Friend")
    ["i'm", 'sad', ':-(', '#depression', '@friend']
    """
    emo = _default_emoticons() if emoticons is None else tuple(sorted({e.lower() for e in emoticons}))
    return _token_regex(emo).findall(text.lower())


def filter_stopwords(tokens: Iterable[str], policy: StopwordPolicy | None = None) -> list[str]:
    removal = (policy or default_policy()).removal_set
    return [t for t in tokens if t not in removal]


_ALPHA = re.compile(r"^[^\W\d_]+$")


@lru_cache(maxsize=4)
def _stemmer(mode: str) -> PorterStemmer:
    return PorterStemmer(mode=mode)


def porter_stem(word: str, mode: str = PorterStemmer.NLTK_EXTENSIONS) -> str:
    """Porter stem of an alphabetic word; anything else is returned unchanged."""
    if not _ALPHA.match(word):
        return word
    return _stemmer(mode).stem(word, to_lowercase=False)


_TERMINATORS = re.compile(r"[.?!…]+")


def split_sentences(post_text: str) -> list[str]:
    """Split on ``.``, ``?``, ``!`` and ellipses; empty pieces are dropped."""
    return [s.strip() for s in _TERMINATORS.split(post_text) if s.strip()]


def bow_tokens(text: str, policy: StopwordPolicy | None = None) -> list[str]:
    """Full bag-of-words preprocessing: lowercase, tokenize, drop stopwords, stem."""
    return [porter_stem(t) for t in filter_stopwords(tokenize_tweet(text), policy)]


def read_corpus(path) -> list[list[str]]:
    """Read a one-post-per-line corpus into tokenized sentences."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            for sent in split_sentences(line):
                toks = tokenize_tweet(sent)
                if toks:
                    sentences.append(toks)
    return sentences
