import math

import pytest

from cqadiff.textproc import (
    TfidfIndex,
    jaccard,
    porter_stem,
    split_passages,
    tokenize,
)


@pytest.mark.parametrize("word,stem", [
    ("caresses", "caress"),
    ("ponies", "poni"),
    ("cats", "cat"),
    ("feed", "feed"),
    ("agreed", "agre"),
    ("plastered", "plaster"),
    ("motoring", "motor"),
    ("sing", "sing"),
    ("conflated", "conflat"),
    ("hopping", "hop"),
    ("filing", "file"),
    ("happy", "happi"),
    ("relational", "relat"),
    ("conditional", "condit"),
    ("rational", "ration"),
    ("digitizer", "digit"),
    ("operator", "oper"),
    ("feudalism", "feudal"),
    ("decisiveness", "decis"),
    ("hopefulness", "hope"),
    ("formaliti", "formal"),
    ("triplicate", "triplic"),
    ("formative", "form"),
    ("formalize", "formal"),
    ("electrical", "electr"),
    ("hopeful", "hope"),
    ("goodness", "good"),
    ("revival", "reviv"),
    ("allowance", "allow"),
    ("inference", "infer"),
    ("adjustable", "adjust"),
    ("defensible", "defens"),
    ("replacement", "replac"),
    ("adoption", "adopt"),
    ("communism", "commun"),
    ("activate", "activ"),
    ("effective", "effect"),
    ("controlling", "control"),
    ("rolling", "roll"),
])
def test_porter_reference_pairs(word, stem):
    assert porter_stem(word) == stem


def test_tokenize_strips_stopwords_and_stems():
    tokens = tokenize("The parser is parsing the streams of tokens!")
    assert "the" not in tokens
    assert "is" not in tokens
    assert tokens == ["parser", "pars", "stream", "token"]


def test_tokenize_keeps_code_like_tokens():
    assert tokenize("use utf8 and sha256 hashes", stem=False) == ["use", "utf8", "sha256", "hashes"]


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("a I of") == []


def test_split_passages():
    text = "first paragraph\nstill first\n\nsecond one\n\n\nthird"
    assert split_passages(text) == ["first paragraph\nstill first", "second one", "third"]


def test_tfidf_identical_documents_cosine_one():
    docs = [tokenize("binary tree traversal order"), tokenize("mutex lock contention")]
    index = TfidfIndex(docs)
    assert index.max_similarity(tokenize("binary tree traversal order")) == pytest.approx(1.0)


def test_tfidf_disjoint_documents_cosine_zero():
    index = TfidfIndex([tokenize("alpha beta gamma")])
    vec = index.vectorize(tokenize("delta epsilon"))
    assert vec.cosine(index.vectors[0]) == 0.0


def test_tfidf_concentrated_beats_split():
    # same answer tokens: all in one passage vs split across two
    concentrated = [tokenize("socket buffer flush timeout"), tokenize("unrelated words entirely")]
    split = [tokenize("socket buffer"), tokenize("flush timeout")]
    answer = tokenize("socket buffer flush timeout")
    assert TfidfIndex(concentrated).max_similarity(answer) > TfidfIndex(split).max_similarity(answer)


def test_tfidf_norm_matches_weights():
    index = TfidfIndex([tokenize("alpha beta alpha")])
    vec = index.vectors[0]
    assert vec.norm == pytest.approx(math.sqrt(sum(w * w for w in vec.weights.values())))


def test_jaccard():
    assert jaccard({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)
    assert jaccard(set(), set()) == 0.0
    assert jaccard({"a"}, {"a"}) == 1.0
