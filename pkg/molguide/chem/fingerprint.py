# -*- coding: utf-8 -*-
"""
Morgan-style circular fingerprints and Tanimoto similarity.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import numpy as np

from molguide.toolkit import InvalidParameters, WidthMismatch, hash_ints
from molguide.chem.molecule import ATOMIC_NUMBERS

DEFAULT_RADIUS = 2
DEFAULT_WIDTH = 2048


def _is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


class Fingerprint:
    """Fixed-width bit vector.

    Args:
       * **bits** (array): boolean array whose length is a positive power of two

    Keyword Args:
       * **radius** (int): radius the bits were generated with.  Defaults to 2.

    """

    def __init__(self, bits, radius=DEFAULT_RADIUS):
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 1 or not _is_power_of_two(len(bits)):
            raise InvalidParameters(
                "Warning! Fingerprint width must be a positive power of two, got "
                + str(bits.shape)
            )
        self.bits = bits
        self.radius = radius

    @property
    def width(self):
        return len(self.bits)

    def popcount(self):
        return int(np.count_nonzero(self.bits))

    def on_bits(self):
        return np.flatnonzero(self.bits)

    def __eq__(self, other):
        return isinstance(other, Fingerprint) and np.array_equal(self.bits, other.bits)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "Fingerprint(width=" + str(self.width) + ", on=" + str(self.popcount()) + ")"


def circular_identifiers(mol, radius=DEFAULT_RADIUS):
    """Unfolded environment identifiers of every atom at every radius up to `radius`.

    Radius 0 hashes (atomic number, charge, degree, aromatic).  Radius r
    hashes the atom's own identifier at r-1 with the sorted
    (bond order, neighbour identifier) pairs at r-1.

    Returns:
       list of 64-bit integers, atoms in index order, radius 0 first
    """
    if radius < 0:
        raise InvalidParameters("Warning! Fingerprint radius must be nonnegative.")
    n = len(mol.atoms)
    current = []
    for i in range(n):
        atom = mol.atoms[i]
        current.append(
            hash_ints(
                (
                    0,
                    ATOMIC_NUMBERS[atom.element],
                    atom.formal_charge,
                    mol.degree(i),
                    int(atom.aromatic),
                )
            )
        )
    identifiers = list(current)
    for r in range(1, radius + 1):
        nxt = []
        for i in range(n):
            env = sorted((order, current[j]) for j, order in mol.neighbors(i))
            flat = [r, current[i]]
            for order, ident in env:
                flat.append(order)
                flat.append(ident)
            nxt.append(hash_ints(flat))
        current = nxt
        identifiers.extend(current)
    return identifiers


def morgan_fingerprint(mol, radius=DEFAULT_RADIUS, width=DEFAULT_WIDTH):
    """Folds the circular identifiers of `mol` into a `width`-bit Fingerprint.

    Args:
       * **mol** (Molecule): molecule

    Keyword Args:
       * **radius** (int): largest environment radius.  Defaults to 2.
       * **width** (int): number of bits, a power of two.  Defaults to 2048.

    Returns:
       Fingerprint
    """
    if not _is_power_of_two(width):
        raise InvalidParameters("Warning! Fingerprint width must be a power of two.")
    bits = np.zeros(width, dtype=bool)
    for ident in circular_identifiers(mol, radius):
        bits[ident % width] = True
    return Fingerprint(bits, radius=radius)


def tanimoto(a, b):
    """popcount(a AND b) / popcount(a OR b), and 1.0 when both are empty.

    Args:
       * **a** (Fingerprint): first fingerprint
       * **b** (Fingerprint): second fingerprint, same width

    Returns:
       float in [0, 1]
    """
    if a.width != b.width:
        raise WidthMismatch(
            "Warning! Fingerprint widths differ: "
            + str(a.width)
            + " vs "
            + str(b.width)
        )
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    return inter / union


def fingerprint_matrix(fps):
    """Stacks fingerprints into an (n, width) boolean array."""
    if len(fps) == 0:
        return np.zeros((0, DEFAULT_WIDTH), dtype=bool)
    widths = set(fp.width for fp in fps)
    if len(widths) > 1:
        raise WidthMismatch("Warning! Fingerprints of different widths: " + str(sorted(widths)))
    return np.vstack([fp.bits for fp in fps])


def tanimoto_matrix(a_fps, b_fps):
    """All-pairs Tanimoto between two fingerprint lists.

    Entry (i, j) equals `tanimoto(a_fps[i], b_fps[j])` exactly.

    Returns:
       (len(a_fps), len(b_fps)) float64 array
    """
    A = fingerprint_matrix(a_fps)
    B = fingerprint_matrix(b_fps)
    if A.shape[1] != B.shape[1] and len(a_fps) and len(b_fps):
        raise WidthMismatch("Warning! Fingerprint widths differ.")
    Ai = A.astype(np.int64)
    Bi = B.astype(np.int64)
    inter = Ai @ Bi.T
    union = Ai.sum(axis=1)[:, None] + Bi.sum(axis=1)[None, :] - inter
    out = np.ones(inter.shape, dtype=np.float64)
    nz = union > 0
    out[nz] = inter[nz] / union[nz]
    return out
