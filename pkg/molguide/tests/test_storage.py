# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

import io
import os
import shutil
import tempfile
from unittest import TestCase

import numpy as np

from molguide import storage
from molguide.chem import morgan_fingerprint, parse_smiles
from molguide.denoiser import AdamState, DenoiserModel, TrainConfig, TrainingSet, train
from molguide.diffusion import cosine_schedule
from molguide.evaluation import GenerationRecord, GenerationSet, MetricValue, MetricsReport
from molguide.latent import GaussianMixtureCodec, fit_pca_codec
from molguide.pairing import TrainingPair
from molguide.synthetic import toy_smiles_corpus
from molguide.toolkit import ChecksumMismatch, CorpusFormatError, DataError, derive_seed

""" File formats: corpora, CSV tables, binary codec and checkpoint files, manifests. """


class StorageTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write(self, name, text):
        with io.open(self.path(name), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return self.path(name)


class TestCorpus(StorageTestCase):
    def test_read(self):
        path = self.write("c.smi", "# comment\nCCO\t1.5\t2\n\nOCC\t-1\t0\n")
        corpus = storage.read_corpus(path)
        self.assertEqual(corpus.smiles, ["CCO", "OCC"])
        self.assertEqual(corpus.canonical[0], corpus.canonical[1])
        self.assertTrue(np.array_equal(corpus.columns, [[1.5, 2.0], [-1.0, 0.0]]))

    def test_smiles_only(self):
        corpus = storage.read_corpus(self.write("c.smi", "CCO\nCCN\n"))
        self.assertEqual(corpus.columns.shape, (2, 0))

    def test_errors_carry_line_numbers(self):
        cases = [
            ("CCO\t1\nCCN\n", 2),
            ("CCO\t1\nC(C\t2\n", 2),
            ("# x\nCCO\tabc\n", 2),
            ("CCO\tnan\n", 1),
        ]
        for text, line in cases:
            with self.assertRaises(CorpusFormatError) as ctx:
                storage.read_corpus(self.write("bad.smi", text))
            self.assertEqual(ctx.exception.line, line)
        with self.assertRaises(CorpusFormatError):
            storage.read_corpus(self.write("empty.smi", "# nothing\n"))

    def test_write_read(self):
        entries = [(s, p, c) for s, p, c in toy_smiles_corpus(10, seed=3, condition_dim=2)]
        path = self.path("toy.smi")
        storage.write_corpus(path, entries)
        corpus = storage.read_corpus(path)
        self.assertEqual(corpus.smiles, [e[0] for e in entries])
        self.assertTrue(np.array_equal(corpus.columns[:, 0], [e[1] for e in entries]))
        self.assertTrue(np.array_equal(corpus.columns[:, 1:], [e[2] for e in entries]))


class TestTables(StorageTestCase):
    def test_pairs(self):
        pairs = [TrainingPair(0, 1, 0.25, np.array([1.0, -2.0])), TrainingPair(1, 0, 0.25, np.array([0.5, 0.0]))]
        path = self.path("pairs.csv")
        storage.write_pairs(path, pairs, ["CCO", "CCN"])
        back, seeds, targets = storage.read_pairs(path)
        self.assertEqual([(p.seed_id, p.target_id) for p in back], [(0, 1), (1, 0)])
        self.assertTrue(np.array_equal(back[0].condition, [1.0, -2.0]))
        self.assertEqual(seeds, ["CCO", "CCN"])
        self.assertEqual(targets, ["CCN", "CCO"])

    def test_generations(self):
        gen = GenerationSet(
            [
                GenerationRecord("CCO", "CCCO", True, np.array([0.1, 0.2]), "a"),
                GenerationRecord(None, "C1CC", False, None, None),
            ]
        )
        path = self.path("gen.csv")
        storage.write_generations(path, gen, [5, 6])
        back, seeds = storage.read_generations(path)
        self.assertEqual(seeds, [5, 6])
        self.assertEqual(back[0].seed, "CCO")
        self.assertEqual(back[0].target, "a")
        self.assertTrue(np.array_equal(back[0].condition, [0.1, 0.2]))
        self.assertIsNone(back[1].seed)
        self.assertIsNone(back[1].condition)
        self.assertFalse(back[1].decoded_valid)
        again = self.path("gen2.csv")
        storage.write_generations(again, back, seeds)
        with open(path, "rb") as a, open(again, "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_curriculum(self):
        path = self.path("curriculum.cfg")
        storage.write_curriculum(path, [{"percentile": 0.5, "threshold": 1.25, "epochs": 10}, {"cutoff": None, "mode": "x"}])
        stages = storage.read_curriculum(path)
        self.assertEqual(stages[0]["percentile"], 0.5)
        self.assertEqual(stages[0]["epochs"], 10)
        self.assertIsNone(stages[1]["cutoff"])
        self.assertEqual(stages[1]["mode"], "x")

    def test_references_and_embeddings(self):
        path = self.write("refs.csv", "label,smiles,toy_0,toy_1\na,CCO,1.0,0.0\nb,CCN,0.0,1.0\n")
        refs = storage.read_reference_library(path)
        self.assertEqual(refs.labels, ["a", "b"])
        self.assertTrue(np.array_equal(refs.classes["a"][0].embeddings["toy"], [1.0, 0.0]))
        self.assertEqual(storage.reference_space_names(path), set(["toy"]))
        bad = self.write("bad.csv", "label,smiles,toy\na,CCO,1.0\n")
        with self.assertRaises(DataError):
            storage.read_reference_library(bad)
        emb_path = self.path("emb.tsv")
        storage.write_embeddings(emb_path, "toy", {"CCO": [0.5, 1.5], "CCN": [2.0, 0.0]})
        name, vectors = storage.read_embeddings(emb_path)
        self.assertEqual(name, "toy")
        self.assertTrue(np.array_equal(vectors["CCO"], [0.5, 1.5]))

    def test_latent_text(self):
        z = np.array([0.1, -2.0, 1e-17])
        self.assertTrue(np.array_equal(storage.parse_latent(storage.format_latent(z)), z))
        with self.assertRaises(DataError):
            storage.parse_latent("CCO")


class TestBinaries(StorageTestCase):
    def test_pca_codec(self):
        entries = toy_smiles_corpus(30, seed=2)
        mols = [parse_smiles(s) for s, _, _ in entries]
        fps = [morgan_fingerprint(m, width=128) for m in mols]
        codec = fit_pca_codec(fps, 4, labels=[s for s, _, _ in entries])
        path = self.path("codec.bin")
        storage.save_codec(path, codec, corpus_hash="abc", seed=1)
        back = storage.load_codec(path)
        self.assertEqual(back.checksum(), codec.checksum())
        self.assertEqual(back.labels, codec.labels)
        self.assertEqual(storage.read_json(path + ".json")["corpus_hash"], "abc")

    def test_mixture_codec(self):
        codec = GaussianMixtureCodec([[3.0, 3.0], [-3.0, 3.0]], 0.6)
        path = self.path("codec.bin")
        storage.save_codec(path, codec)
        back = storage.load_codec(path)
        self.assertTrue(np.array_equal(back.centers, codec.centers))
        self.assertEqual(back.spread, 0.6)

    def test_checkpoint(self):
        model = DenoiserModel(3, 2, 4, hidden=(8, 8), time_dim=4, cond_proj_dim=3, align_hidden=5, seed=4)
        opt = AdamState(model.num_params)
        opt.step = 17
        opt.m += 0.5
        ema = model.params * 0.5
        path = self.path("checkpoint.bin")
        storage.save_checkpoint(path, model, opt, ema, {"epochs": 3, "condition_mean": [1.0, 2.0], "condition_std": [1.0, 4.0]})
        ck = storage.load_checkpoint(path)
        self.assertEqual(ck.model.checksum(), model.checksum())
        self.assertEqual(ck.optimizer.step, 17)
        self.assertTrue(np.array_equal(ck.optimizer.m, opt.m))
        self.assertTrue(np.array_equal(ck.ema, ema))
        scaler = storage.scaler_from_metadata(ck.metadata, 2)
        self.assertTrue(np.allclose(scaler.transform(np.array([3.0, 6.0])), [2.0, 1.0]))
        self.assertEqual(storage.read_json(path + ".json")["epochs"], 3)
        self.assertTrue(ck.raw_params is None)

    def test_resume_with_ema(self):
        rng = np.random.default_rng(9)
        data = TrainingSet(rng.standard_normal((32, 2)), rng.standard_normal((32, 1)), rng.standard_normal((32, 2)))
        sched = cosine_schedule(20)
        model = DenoiserModel(2, 1, 2, hidden=(8,), time_dim=4, cond_proj_dim=3, align_hidden=5, seed=1)
        result = train(model, data, sched, TrainConfig(epochs=3, batch_size=8, ema_decay=0.9, rng_seed=0))
        path = self.path("checkpoint_stage0.bin")
        storage.save_checkpoint(
            path, result.model, result.optimizer, result.model.params.copy(), {"stage": 0}, raw_params=result.raw_params
        )
        ck = storage.load_checkpoint(path)
        self.assertTrue(np.array_equal(ck.model.params, result.model.params))
        resumed, optimizer = storage.resume_state(ck)
        self.assertTrue(np.array_equal(resumed.params, result.raw_params))
        self.assertFalse(np.array_equal(resumed.params, ck.model.params))

        next_stage = TrainConfig(epochs=2, batch_size=8, ema_decay=0.9, rng_seed=1)
        model.params = result.raw_params.copy()
        in_process = train(model, data, sched, next_stage, optimizer=result.optimizer)
        from_disk = train(resumed, data, sched, next_stage, optimizer=optimizer)
        self.assertEqual(in_process.loss_curve, from_disk.loss_curve)
        self.assertTrue(np.array_equal(in_process.raw_params, from_disk.raw_params))
        self.assertTrue(np.array_equal(in_process.model.params, from_disk.model.params))

    def test_tampered_file(self):
        model = DenoiserModel(2, 1, 1, hidden=(4,), seed=0)
        path = self.path("checkpoint.bin")
        storage.save_checkpoint(path, model)
        with open(path, "ab") as f:
            f.write(b"\0")
        with self.assertRaises(ChecksumMismatch):
            storage.load_checkpoint(path)
        with self.assertRaises(DataError):
            storage.load_codec(path)

    def test_manifest(self):
        artifact = self.write("a.txt", "hello\n")
        report = MetricsReport()
        report.add("Val", MetricValue(1.0, 2))
        written = storage.write_report(self.path("report"), report)
        manifest = self.path("manifest.json")
        storage.write_manifest(manifest, {"run": {"seed": "1"}}, artifacts=[artifact] + written, wall_clock=0.5)
        data = storage.verify_manifest(manifest)
        self.assertEqual(sorted(data["artifacts"]), ["a.txt", "report.json", "report.txt"])
        self.write("a.txt", "changed\n")
        with self.assertRaises(ChecksumMismatch):
            storage.verify_manifest(manifest)


class TestSeeds(TestCase):
    def test_derived_seeds(self):
        self.assertEqual(derive_seed(1, "train"), derive_seed(1, "train"))
        self.assertNotEqual(derive_seed(1, "train"), derive_seed(1, "edit"))
        self.assertNotEqual(derive_seed(1, "edit", 0), derive_seed(1, "edit", 1))
        self.assertTrue(0 <= derive_seed(5, "x") < 2**63)
