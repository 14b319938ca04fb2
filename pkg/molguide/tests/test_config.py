# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

import os
import shutil
import tempfile
from unittest import TestCase

from molguide.config import RunConfig
from molguide.toolkit import ConfigError, InvalidConfigValue, UnknownConfigKey

""" Parsing, validation and write-back of run configuration files. """

TEXT = """
[run]
seed = 7

[corpus]
condition_columns = 2-4, 6

[guidance]
mode = standard
w = 2.5

[edit]
target = 0.5, -1

[train]
ema_decay = 0.999
"""


class TestRunConfig(TestCase):
    def test_typed_values_and_defaults(self):
        cfg = RunConfig.from_string(TEXT)
        self.assertEqual(cfg["run"]["seed"], 7)
        self.assertEqual(cfg.get("corpus", "condition_columns"), [2, 3, 4, 6])
        self.assertEqual(cfg["guidance"]["mode"], "standard")
        self.assertEqual(cfg["guidance"]["w"], 2.5)
        self.assertEqual(cfg["edit"]["target"], [0.5, -1.0])
        self.assertEqual(cfg["train"]["ema_decay"], 0.999)
        self.assertIsNone(cfg["train"]["patience"])
        self.assertEqual(cfg["schedule"]["T"], 1000)
        self.assertEqual(cfg["pairs"]["threshold"], "median")
        self.assertEqual(cfg["edit"]["target"], [0.5, -1.0])
        self.assertEqual(RunConfig()["edit"]["target"], "flip")

    def test_unknown_keys(self):
        with self.assertRaises(UnknownConfigKey):
            RunConfig.from_string("[run]\nsed = 1\n")
        with self.assertRaises(UnknownConfigKey):
            RunConfig.from_string("[runs]\nseed = 1\n")

    def test_invalid_values(self):
        for text in ("[run]\nseed = seven\n", "[guidance]\nmode = fancy\n", "[corpus]\ncondition_columns = 0\n"):
            with self.assertRaises(InvalidConfigValue):
                RunConfig.from_string(text)
        with self.assertRaises(InvalidConfigValue):
            RunConfig.from_string("not a config")
        self.assertEqual(InvalidConfigValue("x").exit_code, 2)
        self.assertTrue(issubclass(UnknownConfigKey, ConfigError))

    def test_set_reparses(self):
        cfg = RunConfig.from_string(TEXT)
        cfg.set("run", "seed", 11)
        self.assertEqual(cfg["run"]["seed"], 11)
        cfg.set("run", "progress", True)
        self.assertTrue(cfg["run"]["progress"])
        with self.assertRaises(InvalidConfigValue):
            cfg.set("schedule", "T", "many")

    def test_resolved_text_round_trip(self):
        cfg = RunConfig.from_string(TEXT)
        again = RunConfig.from_string(cfg.to_text())
        self.assertEqual(again.to_dict(), cfg.to_dict())
        self.assertEqual(again.values, cfg.values)
        tmp = tempfile.mkdtemp()
        try:
            path = os.path.join(tmp, "resolved.cfg")
            cfg.write(path)
            self.assertEqual(RunConfig.from_file(path).values, cfg.values)
        finally:
            shutil.rmtree(tmp)
