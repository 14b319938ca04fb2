# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

from fractions import Fraction
from unittest import TestCase

import numpy as np

from molguide.chem import canonical_form, morgan_fingerprint, parse_smiles
from molguide.pairing import (
    CONDITION_CUTOFFS,
    STAGE_SCHEDULES,
    balance_partitions,
    build_condition_curriculum,
    build_curriculum,
    corpus_keys,
    mine_condition_pairs,
    mine_latent_pairs,
    mine_pairs,
    percentile_threshold,
    remove_overlap,
    split_by_threshold,
    stage_schedule,
)
from molguide.synthetic import toy_smiles_corpus
from molguide.toolkit import EmptyInput, EmptyPartition, InvalidParameters, ZeroConditionVector

""" Pair mining checked against exhaustive oracles, plus thresholds and curricula. """


def exact_sim(a, b):
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = int(np.count_nonzero(a.bits | b.bits))
    return Fraction(1) if union == 0 else Fraction(inter, union)


def oracle_best(i, candidates, fps, keys):
    return min(candidates, key=lambda j: (-exact_sim(fps[i], fps[j]), keys[j], j))


def oracle_condition_pairs(G, fps, keys, cutoff, max_pairs):
    out = []
    n = len(fps)
    for i in range(n):
        cands = []
        for j in range(n):
            if j == i:
                continue
            cos = np.dot(G[i], G[j]) / (np.linalg.norm(G[i]) * np.linalg.norm(G[j]))
            if cos < cutoff:
                cands.append(j)
        cands.sort(key=lambda j: (-exact_sim(fps[i], fps[j]), keys[j], j))
        out.extend((i, j) for j in cands[:max_pairs])
    return out


def random_corpus(rng, n):
    entries = toy_smiles_corpus(n, seed=int(rng.integers(1 << 30)))
    mols = [parse_smiles(t) for t, _, _ in entries]
    keys = [canonical_form(m) for m in mols]
    fps = [morgan_fingerprint(m, radius=1, width=64) for m in mols]
    return [t for t, _, _ in entries], keys, fps


class TestMinePairs(TestCase):
    global CORPORA
    CORPORA = 20

    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(CORPORA):
            n = int(rng.integers(4, 51))
            corpus, keys, fps = random_corpus(rng, n)
            values = rng.standard_normal(n)
            theta = percentile_threshold(values, 0.5)
            low, high = split_by_threshold(corpus, values, theta)
            pairs = mine_pairs(low, high, fps, keys=keys, conditions=values[:, None])
            expected = [(i, oracle_best(i, high, fps, keys)) for i in low]
            expected += [(j, oracle_best(j, low, fps, keys)) for j in high]
            self.assertEqual([(p.seed_id, p.target_id) for p in pairs], expected)
            self.assertEqual(len(pairs), n)
            for p in pairs:
                self.assertTrue(abs(p.structural_sim - float(exact_sim(fps[p.seed_id], fps[p.target_id]))) <= 1e-12)
                self.assertEqual(p.condition[0], values[p.target_id])

    def test_empty_partition(self):
        with self.assertRaises(EmptyPartition):
            mine_pairs([], [0, 1], [None, None])


class TestConditionPairs(TestCase):
    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(CORPORA):
            n = int(rng.integers(3, 51))
            corpus, keys, fps = random_corpus(rng, n)
            G = rng.standard_normal((n, 3))
            cutoff = float(rng.choice([0.5, 0.0, -0.3]))
            max_pairs = int(rng.integers(1, 4))
            pairs = mine_condition_pairs(corpus, G, fps, cos_cutoff=cutoff, max_pairs=max_pairs, keys=keys)
            expected = oracle_condition_pairs(G, fps, keys, cutoff, max_pairs)
            self.assertEqual([(p.seed_id, p.target_id) for p in pairs], expected)
            for p in pairs:
                self.assertNotEqual(p.seed_id, p.target_id)
                self.assertTrue(np.array_equal(p.condition, G[p.target_id]))

    def test_zero_vector(self):
        rng = np.random.default_rng(2)
        corpus, keys, fps = random_corpus(rng, 5)
        G = np.ones((5, 2))
        G[3] = 0.0
        with self.assertRaises(ZeroConditionVector):
            mine_condition_pairs(corpus, G, fps)


class TestThresholds(TestCase):
    def test_percentile(self):
        values = [5.0, 1.0, 4.0, 2.0, 3.0]
        self.assertEqual(percentile_threshold(values, 0.5), 3.0)
        self.assertEqual(percentile_threshold(values, 1.0), 5.0)
        self.assertEqual(percentile_threshold(values, 0.2), 1.0)
        self.assertEqual(percentile_threshold(values, 0.01), 1.0)
        self.assertEqual(percentile_threshold(list(range(1000)), 0.998), 997.0)
        with self.assertRaises(EmptyInput):
            percentile_threshold([], 0.5)
        with self.assertRaises(InvalidParameters):
            percentile_threshold(values, 0.0)

    def test_split(self):
        low, high = split_by_threshold("abcd", [1.0, 3.0, 2.0, 3.0], 3.0)
        self.assertEqual(low, [0, 2])
        self.assertEqual(high, [1, 3])
        with self.assertRaises(EmptyPartition):
            split_by_threshold("ab", [1.0, 2.0], 5.0)
        with self.assertRaises(InvalidParameters):
            split_by_threshold("ab", [1.0, np.nan], 1.0)

    def test_balance_and_overlap(self):
        rng = np.random.default_rng(3)
        low, high = balance_partitions([0, 1, 2, 3, 4, 5], [6, 7], rng)
        self.assertEqual(len(low), 2)
        self.assertEqual(low, sorted(low))
        self.assertEqual(high, [6, 7])
        self.assertEqual(remove_overlap([0, 1, 2], ["a", "b", "c"], ["b"]), [0, 2])


class TestCurriculum(TestCase):
    def setUp(self):
        rng = np.random.default_rng(4)
        self.corpus, self.keys, self.fps = random_corpus(rng, 40)
        self.values = np.arange(40, dtype=np.float64)

    def test_percentile_stages(self):
        stages = [(0.5, {}), (0.9, {"learning_rate": 1e-4})]
        built = build_curriculum(stages, self.corpus, self.values, self.fps, keys=self.keys)
        self.assertEqual([s.resolved_threshold for s, _ in built], [19.0, 35.0])
        self.assertEqual(built[1][0].train_config_overrides, {"learning_rate": 1e-4})
        self.assertTrue(all(len(pairs) == 40 for _, pairs in built))

    def test_empty_stage_reports_index(self):
        stages = [(0.5, {}), (None, {"threshold": 100.0})]
        with self.assertRaises(EmptyPartition) as ctx:
            build_curriculum(stages, self.corpus, self.values, self.fps)
        self.assertEqual(ctx.exception.stage, 1)

    def test_order_checks(self):
        with self.assertRaises(InvalidParameters):
            build_curriculum([(0.9, {}), (0.5, {})], self.corpus, self.values, self.fps)
        with self.assertRaises(InvalidParameters):
            build_curriculum([(None, {})], self.corpus, self.values, self.fps)

    def test_stage_schedule(self):
        stages = stage_schedule("PARP1")
        self.assertEqual(len(stages), 3)
        self.assertEqual(stages[0][1]["threshold"], STAGE_SCHEDULES["PARP1"][0][0])
        with self.assertRaises(InvalidParameters):
            stage_schedule("nope")

    def test_condition_curriculum(self):
        rng = np.random.default_rng(5)
        G = rng.standard_normal((40, 3))
        built = build_condition_curriculum(CONDITION_CUTOFFS, self.corpus, G, self.fps, keys=self.keys)
        self.assertEqual([c for c, _ in built], list(CONDITION_CUTOFFS))
        self.assertTrue(len(built[1][1]) <= len(built[0][1]))
        with self.assertRaises(InvalidParameters):
            build_condition_curriculum((-0.6, -0.3), self.corpus, G, self.fps)


class TestLatentPairs(TestCase):
    def test_nearest_counterpart(self):
        Z = np.array([[0.0, 0.0], [0.1, 0.0], [1.0, 0.0], [5.0, 0.0]])
        pairs = mine_latent_pairs([0, 1], [2, 3], Z)
        self.assertEqual([(p.seed_id, p.target_id) for p in pairs], [(0, 2), (1, 2), (2, 1), (3, 1)])
        self.assertTrue(abs(pairs[0].structural_sim - 0.5) <= 1e-12)


def content_triples(pairs, keys):
    return sorted((keys[p.seed_id], keys[p.target_id], p.structural_sim) for p in pairs)


class TestCorpusOrder(TestCase):
    global SHUFFLES
    SHUFFLES = 10

    def planted_corpus(self, rng):
        corpus = [t for t, _, _ in toy_smiles_corpus(30, seed=int(rng.integers(1 << 30)))]
        # the same molecule under two spellings, and a homologous run that ties at radius 1
        return corpus + ["CCO", "OCC", "CCCCCC", "CCCCCCC", "CCCCCCCC"]

    def test_mine_pairs_ignores_order(self):
        rng = np.random.default_rng(6)
        corpus = self.planted_corpus(rng)
        values = {canonical_form(parse_smiles(t)): float(v) for t, v in zip(corpus, rng.standard_normal(len(corpus)))}

        def mined(items):
            keys = corpus_keys(items)
            fps = [morgan_fingerprint(parse_smiles(t), radius=1, width=64) for t in items]
            v = [values[k] for k in keys]
            low, high = split_by_threshold(items, v, percentile_threshold(v, 0.5))
            return content_triples(mine_pairs(low, high, fps, keys=keys), keys)

        expected = mined(corpus)
        for _ in range(SHUFFLES):
            self.assertEqual(mined([corpus[k] for k in rng.permutation(len(corpus))]), expected)

    def test_mine_pairs_without_keys(self):
        rng = np.random.default_rng(7)
        corpus, _, fps = random_corpus(rng, 30)
        distinct = {}
        for t, fp in zip(corpus, fps):
            distinct.setdefault(fp.bits.tobytes(), t)
        corpus = sorted(distinct.values())
        values = dict((t, float(v)) for t, v in zip(corpus, rng.standard_normal(len(corpus))))

        def mined(items):
            fps = [morgan_fingerprint(parse_smiles(t), radius=1, width=64) for t in items]
            v = [values[t] for t in items]
            low, high = split_by_threshold(items, v, percentile_threshold(v, 0.5))
            return content_triples(mine_pairs(low, high, fps), corpus_keys(items))

        expected = mined(corpus)
        for _ in range(SHUFFLES):
            self.assertEqual(mined([corpus[k] for k in rng.permutation(len(corpus))]), expected)

    def test_condition_pairs_ignore_order(self):
        rng = np.random.default_rng(8)
        corpus = self.planted_corpus(rng)
        vectors = {}
        for key in corpus_keys(corpus):
            vectors.setdefault(key, rng.standard_normal(3))

        def mined(items):
            keys = corpus_keys(items)
            fps = [morgan_fingerprint(parse_smiles(t), radius=1, width=64) for t in items]
            G = np.array([vectors[k] for k in keys])
            return content_triples(mine_condition_pairs(items, G, fps, cos_cutoff=0.0, max_pairs=2), keys)

        expected = mined(corpus)
        for _ in range(SHUFFLES):
            self.assertEqual(mined([corpus[k] for k in rng.permutation(len(corpus))]), expected)
