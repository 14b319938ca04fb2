# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

import math
from unittest import TestCase

import numpy as np

from molguide.chem import canonical_form, morgan_fingerprint, parse_smiles, surrogate_property, tanimoto
from molguide.evaluation import (
    GenerationRecord,
    GenerationSet,
    MetricValue,
    MetricsReport,
    ReferenceLibrary,
    TargetRegion,
    _with_nts,
    cosine_space,
    ecfp_space,
    edit_metrics,
    internal_diversity,
    knn_accuracy,
    knn_from_similarities,
    knn_vote,
    latent_edit_metrics,
    max_sim_to_binders,
    moa_retrieval_rate,
    novel_hit_metrics,
    novelty,
    objective_report,
    retrieval_from_similarities,
    top1_cluster_accuracy,
    top1_from_similarities,
    top_count,
    uniqueness,
    validity,
)
from molguide.toolkit import DataError, EmptyBinderSet, InvalidK, MissingSeed, UnknownClassLabel

""" Metric identities on hand-built fixtures. """


def canon(text):
    return canonical_form(parse_smiles(text))


class TestGenerationQuality(TestCase):
    global METRIC_TOL
    METRIC_TOL = 1e-12

    def setUp(self):
        texts = ["CCO", "OCC", "c1ccccc1", "C1CC", "CCN", "CC("]
        self.gen = GenerationSet([GenerationRecord(None, t) for t in texts])

    def test_validity_uniqueness_novelty(self):
        self.assertTrue(abs(validity(self.gen).value - 4.0 / 6.0) <= METRIC_TOL)
        self.assertEqual(validity(self.gen).count, 6)
        self.assertTrue(abs(uniqueness(self.gen).value - 3.0 / 4.0) <= METRIC_TOL)
        self.assertTrue(abs(novelty(self.gen, [canon("CCO")]).value - 2.0 / 4.0) <= METRIC_TOL)

    def test_repeated_novel_molecule_counts_once(self):
        gen = GenerationSet([GenerationRecord("C", t) for t in ("CCO", "OCC", "CCN")])
        self.assertTrue(abs(uniqueness(gen).value - 2.0 / 3.0) <= METRIC_TOL)
        self.assertTrue(abs(novelty(gen, [canon("CCN")]).value - 1.0 / 3.0) <= METRIC_TOL)
        self.assertEqual(novelty(gen, [canon("CCO"), canon("CCN")]).value, 0.0)

    def test_diversity(self):
        fps = [morgan_fingerprint(parse_smiles(t)) for t in ("CCO", "OCC", "c1ccccc1", "CCN")]
        sims = [tanimoto(fps[i], fps[j]) for i in range(4) for j in range(i + 1, 4)]
        self.assertTrue(abs(internal_diversity(self.gen).value - (1.0 - np.mean(sims))) <= METRIC_TOL)

    def test_empty_set_is_undefined(self):
        empty = GenerationSet([GenerationRecord(None, "C1CC")])
        self.assertFalse(uniqueness(empty).defined)
        self.assertFalse(internal_diversity(empty).defined)
        self.assertEqual(validity(empty).value, 0.0)


class TestEditMetrics(TestCase):
    def setUp(self):
        self.gen = GenerationSet(
            [
                GenerationRecord("OCCO", "CCCO"),
                GenerationRecord("OCCO", "OCCCO"),
                GenerationRecord("OCCO", "C1CC"),
                GenerationRecord("CCCC", "CCCCC"),
            ]
        )
        self.regions = [TargetRegion.above(0.0)] * 3 + [TargetRegion.below(0.0)]

    def test_hand_fixture(self):
        out = edit_metrics(self.gen, surrogate_property, self.regions, [canon("CCCO")])
        self.assertEqual(list(out), ["Nov", "Tgt", "Sim", "Dir", "NTS"])
        self.assertTrue(abs(out["Tgt"].value - 0.5) <= METRIC_TOL)
        self.assertEqual(out["Tgt"].count, 4)
        self.assertTrue(abs(out["Dir"].value - 2.0 / 3.0) <= METRIC_TOL)
        self.assertTrue(abs(out["Nov"].value - 2.0 / 3.0) <= METRIC_TOL)
        pairs = [("OCCO", "CCCO"), ("OCCO", "OCCCO"), ("CCCC", "CCCCC")]
        sims = [tanimoto(morgan_fingerprint(parse_smiles(a)), morgan_fingerprint(parse_smiles(b))) for a, b in pairs]
        self.assertTrue(abs(out["Sim"].value - np.mean(sims)) <= METRIC_TOL)
        product = out["Nov"].value * out["Tgt"].value * out["Sim"].value
        self.assertTrue(abs(out["NTS"].value - product) <= METRIC_TOL)

    def test_missing_seed(self):
        gen = GenerationSet([GenerationRecord(None, "CCO")])
        with self.assertRaises(MissingSeed):
            edit_metrics(gen, surrogate_property, TargetRegion.above(0.0), [])

    def test_reported_nts_product(self):
        out = _with_nts(MetricValue(0.99, 100), MetricValue(0.78, 100), MetricValue(0.39, 100), MetricValue(0.9, 100))
        self.assertTrue(abs(out["NTS"].value - 0.99 * 0.78 * 0.39) <= METRIC_TOL)
        self.assertEqual(round(out["NTS"].value, 2), 0.30)

    def test_target_region(self):
        region = TargetRegion(lower=1.0, upper=2.0)
        self.assertTrue(region.contains(1.0))
        self.assertFalse(region.contains(2.0))
        self.assertTrue(region.moved_toward(0.0, 0.5))
        self.assertTrue(TargetRegion.below(0.0).moved_toward(3.0, 2.0))

    def test_latent_metrics(self):
        seeds = np.array([[1.0, 1.0], [1.0, -1.0]])
        outputs = np.array([[2.0, 1.0], [np.nan, 0.0]])
        out = latent_edit_metrics(seeds, outputs, lambda Z: Z[..., 0], TargetRegion.above(1.5), train_latents=seeds)
        self.assertEqual(out["Val"].value, 0.5)
        self.assertEqual(out["Tgt"].value, 0.5)
        self.assertEqual(out["Nov"].value, 1.0)
        self.assertTrue(abs(out["Sim"].value - 3.0 / math.sqrt(10.0)) <= METRIC_TOL)
        self.assertEqual(out["Dir"].value, 1.0)


class TestObjectiveAndHits(TestCase):
    def test_objective(self):
        gen = GenerationSet(
            [GenerationRecord("CC", "CCO", True, np.array([0.0])), GenerationRecord("CC", "C1CC", True, np.array([0.0]))]
        )
        values = objective_report(gen, lambda m: [surrogate_property(m)], d="l2")
        self.assertTrue(abs(values[0] - 0.3) <= METRIC_TOL)
        self.assertTrue(np.isnan(values[1]))
        with_sim = objective_report(gen, lambda m: [surrogate_property(m)], lam=1.0, similarity=lambda a, b: 0.25)
        self.assertTrue(abs(with_sim[0] - 1.05) <= METRIC_TOL)

    def test_novel_hits(self):
        texts = ["CCO", "CCCO", "CCCCO", "C1CC"]
        gen = GenerationSet([GenerationRecord(None, t) for t in texts])
        top, ratio = novel_hit_metrics(gen, surrogate_property, [], 0.5, [], top_fraction=0.5)
        self.assertEqual(top.count, 2)
        expected = [surrogate_property(parse_smiles(t)) for t in ("CCCCO", "CCCO")]
        self.assertTrue(abs(top.value - np.mean(expected)) <= METRIC_TOL)
        self.assertTrue(abs(ratio.value - 2.0 / 4.0) <= METRIC_TOL)
        train = [morgan_fingerprint(parse_smiles(t)) for t in texts[:3]]
        top, ratio = novel_hit_metrics(gen, surrogate_property, [], 0.5, train)
        self.assertEqual(top.flag, "no survivors")
        self.assertEqual(top_count(10), 1)
        self.assertEqual(top_count(41), 3)

    def test_binders(self):
        gen = GenerationSet([GenerationRecord(None, "CCO")])
        self.assertEqual(max_sim_to_binders(gen, [morgan_fingerprint(parse_smiles("OCC"))]).value, 1.0)
        with self.assertRaises(EmptyBinderSet):
            max_sim_to_binders(gen, [])
        self.assertFalse(max_sim_to_binders(GenerationSet([GenerationRecord(None, "C1CC")]), [morgan_fingerprint(parse_smiles("C"))]).defined)


class TestRetrieval(TestCase):
    global CHANCE_RANGE
    CHANCE_RANGE = (0.133, 0.153)

    def test_chance_level(self):
        rng = np.random.default_rng(0)
        labels = [str(k) for k in range(7) for _ in range(5)]
        S = rng.random((10000, len(labels)))
        targets = [str(k) for k in rng.integers(0, 7, size=10000)]
        acc = top1_from_similarities(S, labels, targets).value
        self.assertTrue(CHANCE_RANGE[0] <= acc <= CHANCE_RANGE[1])

    def test_retrieval_identities(self):
        rng = np.random.default_rng(1)
        labels = [c for c in "abcd" for _ in range(3)]
        S = rng.random((200, 12))
        targets = list(rng.choice(list("abcd"), size=200))
        rates = [retrieval_from_similarities(S, labels, targets, k, n=2).value for k in range(1, 5)]
        self.assertTrue(all(a <= b for a, b in zip(rates, rates[1:])))
        self.assertEqual(rates[-1], 1.0)
        self.assertEqual(
            top1_from_similarities(S, labels, targets).value,
            retrieval_from_similarities(S, labels, targets, 1, n=3).value,
        )
        with self.assertRaises(InvalidK):
            retrieval_from_similarities(S, labels, targets, 5)
        with self.assertRaises(InvalidK):
            retrieval_from_similarities(S, labels, targets, 1, n=4)

    def test_ties_are_pessimistic(self):
        S = np.array([[0.5, 0.5]])
        self.assertEqual(top1_from_similarities(S, ["a", "b"], ["a"]).value, 0.0)
        self.assertEqual(retrieval_from_similarities(S, ["a", "b"], ["a"], 2, n=1).value, 1.0)

    def test_knn(self):
        row = np.array([0.9, 0.8, 0.8, 0.1])
        labels = ["a", "b", "b", "a"]
        self.assertEqual(knn_vote(row, labels, 3), "b")
        self.assertEqual(knn_vote(row, labels, 2), "a")
        self.assertEqual(knn_vote(np.array([0.5, 0.5]), ["b", "a"], 2), "a")
        self.assertEqual(knn_from_similarities(np.array([row, row]), labels, ["b", "a"], 3).value, 0.5)
        with self.assertRaises(InvalidK):
            knn_from_similarities(np.array([row]), labels, ["a"], 5)

    def test_knn_matches_oracle(self):
        rng = np.random.default_rng(2)
        labels = list(rng.choice(list("xyz"), size=15))
        for _ in range(50):
            row = np.round(rng.random(15), 1)
            k = int(rng.integers(1, 16))
            nearest = sorted(range(15), key=lambda j: (-row[j], j))[:k]
            counts = dict((l, [row[j] for j in nearest if labels[j] == l]) for l in set(labels[j] for j in nearest))
            best = sorted(counts, key=lambda l: (-len(counts[l]), -np.mean(counts[l]), l))[0]
            self.assertEqual(knn_vote(row, labels, k), best)

    def test_library_end_to_end(self):
        refs = ReferenceLibrary({"alcohol": ["CCO", "CCCO"], "amine": ["CCN", "CCCN"]})
        gen = GenerationSet(
            [
                GenerationRecord(None, "OCC", True, None, "alcohol"),
                GenerationRecord(None, "NCCC", True, None, "alcohol"),
                GenerationRecord(None, "C1CC", True, None, "amine"),
            ]
        )
        space = ecfp_space()
        self.assertTrue(abs(top1_cluster_accuracy(gen, refs, space).value - 1.0 / 3.0) <= METRIC_TOL)
        self.assertEqual(moa_retrieval_rate(gen, refs, space, 2, n=2).value, 2.0 / 3.0)
        self.assertTrue(abs(knn_accuracy(gen, refs, space, 1).value - 1.0 / 3.0) <= METRIC_TOL)
        bad = GenerationSet([GenerationRecord(None, "CCO", True, None, "ketone")])
        with self.assertRaises(UnknownClassLabel):
            top1_cluster_accuracy(bad, refs, space)

    def test_cosine_space(self):
        vectors = {canon("CCO"): np.array([1.0, 0.0]), canon("CCN"): np.array([0.0, 1.0])}
        space = cosine_space("toy", vectors)
        self.assertEqual(space.sim(np.array([1.0, 0.0]), np.array([-1.0, 0.0])), 0.0)
        self.assertIsNone(space.represent(canon("CCCC")))
        refs = ReferenceLibrary({"a": ["CCO"], "b": ["CCN"]})
        gen = GenerationSet([GenerationRecord(None, "OCC", True, None, "a")])
        self.assertEqual(top1_cluster_accuracy(gen, refs, space).value, 1.0)

    def test_library_checks(self):
        with self.assertRaises(DataError):
            ReferenceLibrary({"a": ["CCO"], "b": ["OCC"]})
        refs = ReferenceLibrary({"a": ["CCO"], "b": ["CCN", "CCCN"]})
        self.assertEqual(refs.labels, ["a", "b"])
        self.assertEqual(refs.smallest_class(), 1)


class TestReport(TestCase):
    def test_json_round_trip(self):
        report = MetricsReport()
        report.add("Tgt", MetricValue(0.5, 4))
        report.add("Sim", MetricValue.undefined("empty"))
        report.note("Tgt", "all records")
        back = MetricsReport.from_json(report.to_json())
        self.assertEqual(back["Tgt"], report["Tgt"])
        self.assertTrue(math.isnan(back["Sim"].value))
        self.assertEqual(back["Sim"].flag, "empty")
        self.assertIn("# Tgt: all records", report.to_text())
        self.assertIn("NaN", report.to_text())
