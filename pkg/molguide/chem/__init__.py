# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function, unicode_literals

from .molecule import Atom, Bond, Molecule, SINGLE, DOUBLE, TRIPLE, AROMATIC, valence_ok
from .smiles import (
    parse_smiles,
    to_smiles,
    SmilesError,
    UnclosedBranch,
    UnclosedBracket,
    UnmatchedRingBond,
    UnknownAtomSymbol,
    InvalidCharge,
    UnexpectedToken,
)
from .canon import canonical_form, canonical_ranks
from .fingerprint import (
    Fingerprint,
    morgan_fingerprint,
    circular_identifiers,
    tanimoto,
    tanimoto_matrix,
    DEFAULT_RADIUS,
    DEFAULT_WIDTH,
)
from .properties import surrogate_property


def is_valid(text):
    """True iff `text` parses, the graph is connected and every valence is allowed.

    Never raises.
    """
    if not isinstance(text, str) or not text:
        return False
    try:
        mol = parse_smiles(text)
    except SmilesError:
        return False
    return mol.is_connected() and valence_ok(mol)


def try_parse(text):
    """Returns the Molecule for a valid string, `None` otherwise."""
    if not is_valid(text):
        return None
    return parse_smiles(text)
