# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

from unittest import TestCase

import numpy as np

from molguide.chem import (
    UnclosedBranch,
    UnclosedBracket,
    UnexpectedToken,
    UnknownAtomSymbol,
    UnmatchedRingBond,
    InvalidCharge,
    canonical_form,
    is_valid,
    morgan_fingerprint,
    parse_smiles,
    surrogate_property,
    tanimoto,
    to_smiles,
)
from molguide.chem.fingerprint import Fingerprint
from molguide.chem.molecule import SINGLE, Atom, Bond, Molecule
from molguide.synthetic import toy_smiles_corpus
from molguide.toolkit import InvalidParameters

""" Parser, canonical form, fingerprints and the surrogate property. """


def random_cubic_graph(n, rng):
    """Connected 3-regular all-carbon graph on `n` atoms from the pairing model."""
    while True:
        stubs = list(rng.permutation(np.repeat(np.arange(n), 3)))
        edges = set()
        ok = True
        for a, b in zip(stubs[0::2], stubs[1::2]):
            key = (min(a, b), max(a, b))
            if a == b or key in edges:
                ok = False
                break
            edges.add(key)
        if not ok:
            continue
        mol = Molecule([Atom("C")] * n, [Bond(int(a), int(b), SINGLE) for a, b in sorted(edges)])
        if mol.is_connected():
            return mol


class TestParser(TestCase):
    def test_counts(self):
        mol = parse_smiles("c1ccccc1O")
        self.assertTrue(mol.num_atoms == 7)
        self.assertTrue(len(mol.bonds) == 7)
        self.assertTrue(mol.is_connected())

    def test_error_offsets(self):
        cases = [
            ("CC(C", UnclosedBranch, 2),
            ("C1CC", UnmatchedRingBond, 1),
            ("CXC", UnknownAtomSymbol, 1),
            ("C[N+-]C", InvalidCharge, 3),
            ("C[NH", UnclosedBracket, 1),
            ("C==C", UnexpectedToken, 2),
        ]
        for text, cls, offset in cases:
            with self.assertRaises(cls) as ctx:
                parse_smiles(text)
            self.assertEqual(ctx.exception.offset, offset, text)

    def test_empty_string(self):
        with self.assertRaises(UnexpectedToken):
            parse_smiles("")

    def test_stereo_dropped(self):
        mol = parse_smiles("F/C=C/F")
        self.assertTrue(mol.stereo_ignored)
        self.assertEqual(canonical_form(mol), canonical_form(parse_smiles("FC=CF")))

    def test_validity(self):
        self.assertTrue(is_valid("CCO"))
        self.assertFalse(is_valid("CC.O"))
        self.assertFalse(is_valid("C(C)(C)(C)(C)C"))
        self.assertFalse(is_valid("C1CC"))
        self.assertFalse(is_valid(""))


class TestCanonical(TestCase):
    global REWRITES, CORPUS_SIZE, CUBIC_GRAPHS, CUBIC_REWRITES
    REWRITES = 100
    CORPUS_SIZE = 200
    CUBIC_GRAPHS = 20
    CUBIC_REWRITES = 30

    def test_equivalent_spellings(self):
        self.assertEqual(canonical_form(parse_smiles("OCC")), canonical_form(parse_smiles("CCO")))
        self.assertEqual(
            canonical_form(parse_smiles("c1ccccc1C")), canonical_form(parse_smiles("Cc1ccccc1"))
        )
        self.assertEqual(
            canonical_form(parse_smiles("C1CCCCC1")), canonical_form(parse_smiles("C%10CCCCC%10"))
        )
        self.assertNotEqual(canonical_form(parse_smiles("CCO")), canonical_form(parse_smiles("COC")))

    def test_canonical_round_trip(self):
        for text in ("CC(=O)O", "c1ccncc1Cl", "C1CCOCC1", "[NH4+]"):
            canon = canonical_form(parse_smiles(text))
            self.assertEqual(canonical_form(parse_smiles(canon)), canon)

    def test_invariant_under_atom_order(self):
        rng = np.random.default_rng(11)
        corpus = [text for text, _, _ in toy_smiles_corpus(CORPUS_SIZE, seed=3)]
        for text in corpus:
            mol = parse_smiles(text)
            canon = canonical_form(mol)
            fp = morgan_fingerprint(mol)
            for _ in range(REWRITES):
                order = list(rng.permutation(mol.num_atoms))
                other = mol.renumbered(order)
                self.assertEqual(canonical_form(other), canon)
                self.assertTrue(morgan_fingerprint(other) == fp)

    def test_rewritten_string_parses_back(self):
        rng = np.random.default_rng(5)
        mol = parse_smiles("CC(C)c1ccc(cc1)C(=O)N")
        canon = canonical_form(mol)
        for _ in range(20):
            rewritten = to_smiles(mol.renumbered(list(rng.permutation(mol.num_atoms))))
            self.assertEqual(canonical_form(parse_smiles(rewritten)), canon)

    def test_cubic_graphs_invariant_under_atom_order(self):
        # refinement alone leaves non-equivalent atoms tied in these
        rng = np.random.default_rng(17)
        for n in (8, 10, 12):
            for _ in range(CUBIC_GRAPHS):
                mol = random_cubic_graph(n, rng)
                canon = canonical_form(mol)
                self.assertEqual(canonical_form(parse_smiles(canon)), canon)
                for _ in range(CUBIC_REWRITES):
                    other = mol.renumbered(list(rng.permutation(n)))
                    self.assertEqual(canonical_form(other), canon)

    def test_cages(self):
        rng = np.random.default_rng(23)
        for text in (
            "C12C3C4C1C5C2C3C45",
            "C12C3C1C1C2C31",
            "C1C2CC3CC1CC(C2)C3",
            "C12C3C1C1C4C2C3C4C2C3C1C23",
        ):
            mol = parse_smiles(text)
            canon = canonical_form(mol)
            for _ in range(CUBIC_REWRITES):
                rewritten = to_smiles(mol.renumbered(list(rng.permutation(mol.num_atoms))))
                self.assertEqual(canonical_form(parse_smiles(rewritten)), canon)
        self.assertEqual(
            canonical_form(parse_smiles("C12C3C1C1C4C2C3C4C2C3C1C23")),
            canonical_form(parse_smiles("C12C3C1C1C4C(C23)C2C3C1C4C23")),
        )

    def test_fragments_in_sorted_order(self):
        self.assertEqual(canonical_form(parse_smiles("CCO.OCC.C")), canonical_form(parse_smiles("C.CCO.CCO")))
        self.assertEqual(canonical_form(parse_smiles("C(F)(F)F.CC(C)(C)C")), canonical_form(parse_smiles("CC(C)(C)C.FC(F)F")))


class TestFingerprint(TestCase):
    global SIM_TOL
    SIM_TOL = 1e-12

    def test_identity_and_symmetry(self):
        a = morgan_fingerprint(parse_smiles("c1ccccc1CCO"))
        b = morgan_fingerprint(parse_smiles("c1ccccc1CCN"))
        self.assertTrue(abs(tanimoto(a, a) - 1.0) <= SIM_TOL)
        self.assertTrue(abs(tanimoto(a, b) - tanimoto(b, a)) <= SIM_TOL)
        self.assertTrue(0.0 < tanimoto(a, b) < 1.0)

    def test_width_and_radius(self):
        mol = parse_smiles("CCOc1ccccc1")
        fp = morgan_fingerprint(mol, radius=1, width=64)
        self.assertEqual(fp.width, 64)
        self.assertTrue(fp.popcount() > 0)
        self.assertTrue(morgan_fingerprint(mol, radius=0, width=64).popcount() <= fp.popcount())

    def test_bad_width(self):
        with self.assertRaises(InvalidParameters):
            Fingerprint(np.zeros(100, dtype=bool))


class TestSurrogate(TestCase):
    global PROP_TOL
    PROP_TOL = 1e-12

    def test_additive_table(self):
        self.assertTrue(abs(surrogate_property(parse_smiles("CCO")) - (0.5 + 0.5 - 0.7)) <= PROP_TOL)
        self.assertTrue(abs(surrogate_property(parse_smiles("c1ccccc1")) - 1.8) <= PROP_TOL)
        self.assertTrue(abs(surrogate_property(parse_smiles("CCl")) - 0.9) <= PROP_TOL)

    def test_order_independent(self):
        self.assertEqual(
            surrogate_property(parse_smiles("NCCO")), surrogate_property(parse_smiles("OCCN"))
        )
