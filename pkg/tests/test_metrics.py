"""Evaluation metrics checked against frozen cases and a per-label oracle."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import metrics_oracle
from seq2label.errors import DataError
from seq2label.metrics import bucket_by_lls, hamming_loss, micro_prf, score


class TestFrozenValues:
    def test_hamming_single_pair(self):
        # slots 1 and 2 disagree out of 4
        assert hamming_loss([({0, 2}, {0, 1})], num_labels=4) == 0.5

    def test_hamming_pools_over_instances(self):
        pairs = [({0}, {0}), ({1, 2}, {1})]
        assert hamming_loss(pairs, num_labels=3) == pytest.approx(1 / 6)

    def test_micro_two_thirds(self):
        # pooled: tp=2, fp=1, fn=1
        pairs = [({0, 1}, {0, 2}), ({3}, {3})]
        p, r, f1 = micro_prf(pairs)
        assert p == pytest.approx(2 / 3)
        assert r == pytest.approx(2 / 3)
        assert f1 == pytest.approx(2 / 3)

    def test_perfect_predictions(self):
        pairs = [({0, 1}, {0, 1}), ({2}, {2})]
        report = score(pairs, num_labels=3)
        assert report.hamming_loss == 0.0
        assert report.micro_f1 == 1.0
        assert report.instances == 2

    def test_zero_denominators_score_zero(self):
        p, r, f1 = micro_prf([({0}, set())])
        assert (p, r, f1) == (0.0, 0.0, 0.0)
        p, r, f1 = micro_prf([(set(), set())])
        assert (p, r, f1) == (0.0, 0.0, 0.0)

    def test_empty_sets_have_zero_hamming(self):
        assert hamming_loss([(set(), set())], num_labels=5) == 0.0


class TestValidation:
    def test_empty_dataset_rejected(self):
        for fn in (lambda: hamming_loss([], 3),
                   lambda: micro_prf([]),
                   lambda: bucket_by_lls([], 3)):
            with pytest.raises(DataError, match="empty"):
                fn()

    def test_bad_num_labels(self):
        with pytest.raises(DataError, match="num_labels"):
            hamming_loss([({0}, {0})], 0)

    def test_out_of_range_label(self):
        with pytest.raises(DataError, match="out of range"):
            hamming_loss([({0}, {4})], num_labels=4)


class TestBuckets:
    def test_grouped_by_true_set_size(self):
        pairs = [({0}, {0}), ({1}, {2}), ({0, 1}, {0, 1})]
        buckets = bucket_by_lls(pairs, num_labels=3)
        assert sorted(buckets) == [1, 2]
        assert buckets[1].instances == 2
        assert buckets[2].instances == 1
        assert buckets[1].micro_f1 == pytest.approx(0.5)
        assert buckets[2].micro_f1 == 1.0

    def test_bucket_sizes_cover_dataset(self):
        pairs = [({0}, set()), ({1, 2}, {1}), (set(), {0})]
        buckets = bucket_by_lls(pairs, num_labels=3)
        assert sum(r.instances for r in buckets.values()) == len(pairs)
        assert 0 in buckets

    def test_report_dict_keys(self):
        report = score([({0}, {0})], num_labels=2)
        report.buckets = bucket_by_lls([({0}, {0})], num_labels=2)
        d = report.as_dict()
        assert set(d) == {"hamming_loss", "micro_precision", "micro_recall",
                          "micro_f1", "instances", "by_label_set_size"}
        assert set(d["by_label_set_size"]) == {"1"}


label_set = st.sets(st.integers(min_value=0, max_value=7), max_size=8)


class TestAgainstOracle:
    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(label_set, label_set), min_size=1, max_size=10))
    def test_matches_per_label_enumeration(self, pairs):
        want_hl, want_p, want_r, want_f1 = metrics_oracle(pairs, 8)
        report = score(pairs, num_labels=8)
        assert report.hamming_loss == want_hl
        assert math.isclose(report.micro_precision, want_p, rel_tol=0, abs_tol=1e-12)
        assert math.isclose(report.micro_recall, want_r, rel_tol=0, abs_tol=1e-12)
        assert math.isclose(report.micro_f1, want_f1, rel_tol=0, abs_tol=1e-12)
