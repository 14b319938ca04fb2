# -*- coding: utf-8 -*-
"""
Additive surrogate for a lipophilicity-like scalar property.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

from molguide.chem.molecule import HALOGENS

# Frozen coefficient table, summed in this order.
SURROGATE_COEFFICIENTS = (
    ("aliphatic_carbon", 0.5),
    ("aromatic_carbon", 0.3),
    ("halogen", 0.4),
    ("oxygen", -0.7),
    ("nitrogen", -0.6),
    ("other_heteroatom", -0.2),
)


def atom_category(atom):
    if atom.element == "C":
        return "aromatic_carbon" if atom.aromatic else "aliphatic_carbon"
    if atom.element in HALOGENS:
        return "halogen"
    if atom.element == "O":
        return "oxygen"
    if atom.element == "N":
        return "nitrogen"
    return "other_heteroatom"


def surrogate_property(mol):
    """Deterministic additive score standing in for Crippen logP.

    Args:
       * **mol** (Molecule): valid molecule

    Returns:
       float
    """
    counts = dict((name, 0) for name, _ in SURROGATE_COEFFICIENTS)
    for atom in mol.atoms:
        counts[atom_category(atom)] += 1
    total = 0.0
    for name, coef in SURROGATE_COEFFICIENTS:
        total += coef * counts[name]
    return total
