import json
from collections import Counter

import numpy as np
import pytest

from lstmsent.classify import LABELS, SentimentLabel
from lstmsent.data import (
    SYNTH_FILLER,
    SYNTH_POOLS,
    ReviewRecord,
    label_from_rating,
    largest_remainder,
    load_pretrained_vectors,
    load_reviews,
    save_reviews_csv,
    synth_corpus,
    to_arrays,
)
from lstmsent.errors import ConfigError, DataError, DomainError, EmptyDatasetError, MissingColumnsError
from lstmsent.textproc import build_vocab, clean_text, tokenize


@pytest.mark.parametrize("rating, label", [(1, "negative"), (2, "negative"), (3, "neutral"),
                                           (4, "positive"), (5, "positive")])
def test_label_from_rating(rating, label):
    assert label_from_rating(rating).value == label


@pytest.mark.parametrize("bad", [0, 6, 2.5, True])
def test_label_from_rating_domain(bad):
    with pytest.raises(DomainError):
        label_from_rating(bad)


def test_rating_mapping_surjective():
    assert {label_from_rating(r) for r in range(1, 6)} == set(LABELS)


def test_record_needs_rating_or_label():
    with pytest.raises(DomainError):
        ReviewRecord("text only")
    assert ReviewRecord("ok", rating=4).label is SentimentLabel.POSITIVE


def test_load_csv_with_labels(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text('text,label\n"Great, really great",positive\nbroken on arrival,negative\n')
    ds = load_reviews(path)
    assert len(ds) == 2
    assert ds.records[0].text == "Great, really great"
    assert ds.class_counts == {SentimentLabel.NEGATIVE: 1, SentimentLabel.NEUTRAL: 0, SentimentLabel.POSITIVE: 1}


def test_load_jsonl_rating(tmp_path):
    path = tmp_path / "r.jsonl"
    path.write_text(json.dumps({"text": "ok product", "rating": 5}) + "\n")
    ds = load_reviews(path)
    assert ds.records[0].label is SentimentLabel.POSITIVE
    assert ds.records[0].rating == 5


def test_malformed_row_reported(tmp_path):
    rows = [f"review number {i},{(i % 5) + 1}" for i in range(10)]
    rows[6] = "no rating here,eleven"
    path = tmp_path / "r.csv"
    path.write_text("text,rating\n" + "\n".join(rows) + "\n")
    ds = load_reviews(path)
    assert len(ds) == 9
    assert [line for line, _ in ds.errors] == [8]


def test_jsonl_bad_lines_reported(tmp_path):
    path = tmp_path / "r.jsonl"
    path.write_text('{"text": "fine", "label": "neutral"}\n{oops\n{"text": "no label"}\n[1, 2]\n')
    ds = load_reviews(path)
    assert len(ds) == 1
    assert [line for line, _ in ds.errors] == [2, 3, 4]


def test_load_errors_are_distinct(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_reviews(tmp_path / "absent.csv")
    (tmp_path / "cols.csv").write_text("body,stars\nx,1\n")
    with pytest.raises(MissingColumnsError):
        load_reviews(tmp_path / "cols.csv")
    (tmp_path / "empty.csv").write_text("text,label\n")
    with pytest.raises(EmptyDatasetError):
        load_reviews(tmp_path / "empty.csv")


def test_synth_counts_by_largest_remainder():
    ds = synth_corpus(1, 300)
    assert set(ds.class_counts.values()) == {100}
    assert largest_remainder(10, (1 / 3, 1 / 3, 1 / 3)) == [4, 3, 3]
    assert largest_remainder(2000, (0.5, 0.0, 0.5)) == [1000, 0, 1000]


def test_synth_deterministic():
    a, b = synth_corpus(9, 50), synth_corpus(9, 50)
    assert a.records == b.records
    assert synth_corpus(10, 50).records != a.records


def test_synth_lengths_and_vocabulary():
    allowed = set(SYNTH_FILLER).union(*SYNTH_POOLS.values())
    for r in synth_corpus(2, 200).records:
        toks = tokenize(clean_text(r.text))
        assert 5 <= len(toks) <= 20
        assert set(toks) <= allowed


def test_synth_pools_disjoint():
    pools = list(SYNTH_POOLS.values())
    for i in range(3):
        assert not set(pools[i]) & set(SYNTH_FILLER)
        for j in range(i + 1, 3):
            assert not set(pools[i]) & set(pools[j])


def test_synth_separable_by_unigram_counts():
    ds = synth_corpus(3, 600)
    correct = 0
    for r in ds.records:
        counts = Counter(tokenize(clean_text(r.text)))
        score = {lab: sum(counts[w] for w in pool) for lab, pool in SYNTH_POOLS.items()}
        correct += max(LABELS, key=lambda lab: score[lab]) is r.label
    assert correct / len(ds) >= 0.95


@pytest.mark.parametrize("shares", [(0.5, 0.5), (0.6, 0.6, -0.2), (0.3, 0.3, 0.3)])
def test_synth_rejects_bad_shares(shares):
    with pytest.raises(ConfigError):
        synth_corpus(0, 30, shares)


def test_csv_round_trip(tmp_path):
    ds = synth_corpus(4, 30)
    save_reviews_csv(ds, tmp_path / "s.csv")
    assert load_reviews(tmp_path / "s.csv").records == ds.records


def test_to_arrays_binary_marks_neutral(tmp_path):
    ds = synth_corpus(5, 30)
    vocab = build_vocab([tokenize(clean_text(t)) for t in ds.texts], 100)
    X, y = to_arrays(ds, vocab, 12)
    assert X.shape == (30, 12)
    expected = {SentimentLabel.NEGATIVE: 0, SentimentLabel.NEUTRAL: -1, SentimentLabel.POSITIVE: 1}
    assert list(y) == [expected[lab] for lab in ds.labels]


def test_pretrained_vectors(tmp_path):
    vocab = build_vocab([["great", "phone", "phone"]], 10)
    table = np.full((len(vocab), 3), 7.0)
    path = tmp_path / "vec.txt"
    path.write_text("2 3\ngreat 0.1 0.2 0.3\nunknownword 1 1 1\n")
    assert load_pretrained_vectors(path, vocab, table) == 1
    np.testing.assert_array_equal(table[vocab.token_to_id["great"]], [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(table[vocab.token_to_id["phone"]], [7.0, 7.0, 7.0])
    path.write_text("great 0.1 0.2\n")
    with pytest.raises(DataError):
        load_pretrained_vectors(path, vocab, table)
