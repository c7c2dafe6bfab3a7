"""Text utilities shared by the textual feature, cold-start embeddings and RCM.

Tokenization is deliberately simple (lowercase alphanumerics), followed by
stopword removal and Porter-style suffix stripping so that repeated runs are
bit-for-bit reproducible with no external models.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Compact English stopword list; kept embedded so results never depend on an
# external resource.
STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be because
    been before being below between both but by cannot could did do does doing
    down during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more most
    my myself no nor not now of off on once only or other our ours ourselves
    out over own same she should so some such than that the their theirs them
    themselves then there these they this those through to too under until up
    very was we were what when where which while who whom why will with you
    your yours yourself yourselves""".split()
)


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in "aeiou":
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count VC sequences ([C](VC)^m[V] form of the stem)."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    # consonant-vowel-consonant where the final consonant is not w, x or y
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def porter_stem(word: str) -> str:
    """Porter suffix stripping; classic five-step variant."""
    w = word
    if len(w) <= 2:
        return w

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # step 1b
    flag_1b = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _contains_vowel(w[:-2]):
        w = w[:-2]
        flag_1b = True
    elif w.endswith("ing") and _contains_vowel(w[:-3]):
        w = w[:-3]
        flag_1b = True
    if flag_1b:
        if w.endswith(("at", "bl", "iz")):
            w = w + "e"
        elif _ends_double_consonant(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w = w + "e"

    # step 1c
    if w.endswith("y") and _contains_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    step2 = (
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"),
        ("anci", "ance"), ("izer", "ize"), ("abli", "able"), ("alli", "al"),
        ("entli", "ent"), ("eli", "e"), ("ousli", "ous"), ("ization", "ize"),
        ("ation", "ate"), ("ator", "ate"), ("alism", "al"),
        ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous"),
        ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
    )
    for suffix, repl in step2:
        if w.endswith(suffix):
            if _measure(w[: -len(suffix)]) > 0:
                w = w[: -len(suffix)] + repl
            break

    # step 3
    step3 = (
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    )
    for suffix, repl in step3:
        if w.endswith(suffix):
            if _measure(w[: -len(suffix)]) > 0:
                w = w[: -len(suffix)] + repl
            break

    # step 4
    step4 = (
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
        "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    )
    for suffix in step4:
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if _measure(stem) > 1:
                if suffix == "ion" and not stem.endswith(("s", "t")):
                    pass
                else:
                    w = stem
            break

    # step 5a
    if w.endswith("e"):
        m = _measure(w[:-1])
        if m > 1 or (m == 1 and not _ends_cvc(w[:-1])):
            w = w[:-1]
    # step 5b
    if _measure(w) > 1 and _ends_double_consonant(w) and w.endswith("l"):
        w = w[:-1]
    return w


def tokenize(text: str, stem: bool = True) -> list[str]:
    """Lowercase alphanumeric tokens, stopwords removed, optionally stemmed."""
    if not text:
        return []
    tokens = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) < 2 or tok in STOPWORDS:
            continue
        if stem and tok.isalpha():
            tok = porter_stem(tok)
        tokens.append(tok)
    return tokens


@dataclass
class SparseVector:
    """TF-IDF weights keyed by token, with a cached L2 norm."""

    weights: dict[str, float]
    norm: float

    def cosine(self, other: "SparseVector") -> float:
        if self.norm == 0.0 or other.norm == 0.0:
            return 0.0
        small, big = self.weights, other.weights
        if len(small) > len(big):
            small, big = big, small
        dot = sum(w * big[t] for t, w in small.items() if t in big)
        return dot / (self.norm * other.norm)


class TfidfIndex:
    """Bag-of-words TF-IDF over a fixed document collection.

    idf uses the smoothed form log((1 + N) / (1 + df)) + 1, so tokens unseen
    in the collection still get a finite weight when vectorizing queries.
    """

    def __init__(self, documents: list[list[str]]):
        self.n_docs = len(documents)
        df: Counter[str] = Counter()
        for doc in documents:
            df.update(set(doc))
        self.idf = {
            t: math.log((1 + self.n_docs) / (1 + c)) + 1.0 for t, c in df.items()
        }
        self._default_idf = math.log(1 + self.n_docs) + 1.0
        self.vectors = [self.vectorize(doc) for doc in documents]

    def vectorize(self, tokens: list[str]) -> SparseVector:
        counts = Counter(tokens)
        weights = {
            t: c * self.idf.get(t, self._default_idf) for t, c in counts.items()
        }
        norm = math.sqrt(sum(w * w for w in weights.values()))
        return SparseVector(weights, norm)

    def max_similarity(self, tokens: list[str]) -> float:
        """Best cosine match of `tokens` against any indexed document."""
        if not self.vectors:
            return 0.0
        query = self.vectorize(tokens)
        return max(query.cosine(v) for v in self.vectors)


def split_passages(text: str) -> list[str]:
    """Blank-line separated paragraphs, whitespace-normalized."""
    passages = re.split(r"\n\s*\n", text)
    return [p.strip() for p in passages if p.strip()]


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 0.0
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / (len(a) + len(b) - inter)
