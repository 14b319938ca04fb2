# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

from unittest import TestCase

import numpy as np

from molguide.baselines import nearest_target_class, random_target_class, reconstruction
from molguide.chem import canonical_form, morgan_fingerprint, parse_smiles
from molguide.latent import fit_pca_codec
from molguide.synthetic import toy_smiles_corpus
from molguide.toolkit import EmptyInput, InvalidParameters


class TestRetrievalBaselines(TestCase):
    def test_nearest_target(self):
        gen = nearest_target_class(["CCO", "c1ccccc1O"], ["CCCCCC", "CCCO", "c1ccccc1"])
        self.assertEqual([r.generated for r in gen], ["CCCO", "c1ccccc1"])
        self.assertEqual(gen[0].seed, "CCO")
        per_seed = nearest_target_class(["CCO", "CCO"], [["CCN"], ["CCCCO", "CCCCCC"]])
        self.assertEqual([r.generated for r in per_seed], ["CCN", "CCCCO"])

    def test_nearest_ties_use_canonical_order(self):
        gen = nearest_target_class(["CCO"], ["OCC", "CCO"])
        self.assertEqual(gen[0].generated, "OCC")

    def test_random_target(self):
        pool = ["CCN", "CCCN", "CCCCN"]
        a = random_target_class(["CCO"] * 10, pool, np.random.default_rng(3))
        b = random_target_class(["CCO"] * 10, pool, np.random.default_rng(3))
        self.assertEqual([r.generated for r in a], [r.generated for r in b])
        self.assertTrue(all(r.generated in pool for r in a))
        with self.assertRaises(EmptyInput):
            random_target_class(["CCO"], [[]], np.random.default_rng(0))
        with self.assertRaises(InvalidParameters):
            random_target_class(["CCO", "CCN"], [["C"]], np.random.default_rng(0))

    def test_reconstruction(self):
        entries = toy_smiles_corpus(40, seed=6)
        mols = [parse_smiles(s) for s, _, _ in entries]
        canon = [canonical_form(m) for m in mols]
        codec = fit_pca_codec([morgan_fingerprint(m) for m in mols], 8, labels=canon)
        seeds = [s for s, _, _ in entries[:5]]
        gen = reconstruction(seeds, codec, conditions=[np.array([1.0])] * 5)
        self.assertEqual(len(gen), 5)
        for rec in gen:
            self.assertIn(rec.generated, canon)
            self.assertEqual(rec.condition[0], 1.0)
