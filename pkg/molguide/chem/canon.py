# -*- coding: utf-8 -*-
"""
Canonical SMILES by Morgan-style rank refinement with a search over tie breaks.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

from molguide.chem.molecule import ATOMIC_NUMBERS, Bond, Molecule
from molguide.chem.smiles import to_smiles


def atom_invariant(mol, i):
    """Initial invariant of atom `i`: element order first, then degree and charge."""
    atom = mol.atoms[i]
    return (
        ATOMIC_NUMBERS[atom.element],
        mol.degree(i),
        atom.formal_charge,
        int(atom.aromatic),
        int(atom.bracket),
        -1 if atom.explicit_h is None else atom.explicit_h,
    )


def _dense_ranks(keys):
    ordered = sorted(set(keys))
    lookup = dict((k, r) for r, k in enumerate(ordered))
    return [lookup[k] for k in keys]


def refine_ranks(mol, ranks):
    """Refines `ranks` by neighbourhoods until the number of classes stops growing."""
    n = len(mol.atoms)
    ranks = list(ranks)
    classes = len(set(ranks))
    while True:
        keys = []
        for i in range(n):
            env = sorted((ranks[j], order) for j, order in mol.neighbors(i))
            keys.append((ranks[i], tuple(env)))
        new = _dense_ranks(keys)
        new_classes = len(set(new))
        ranks = new
        if new_classes == classes:
            return ranks
        classes = new_classes


def _fragment(mol, atoms):
    """Sub-molecule on `atoms` (sorted indices) with bonds renumbered."""
    local = dict((a, k) for k, a in enumerate(atoms))
    bonds = [
        Bond(local[b.begin], local[b.end], b.order)
        for b in mol.bonds
        if b.begin in local and b.end in local
    ]
    return Molecule([mol.atoms[a] for a in atoms], bonds)


def _individualize(ranks, chosen):
    tied = ranks[chosen]
    doubled = [2 * r + (1 if r == tied else 0) for r in ranks]
    doubled[chosen] = 2 * tied
    return _dense_ranks(doubled)


def _candidates(mol, ranks, tied):
    # atoms with identical neighbour lists are swapped by an automorphism; try one of each
    seen = set()
    chosen = []
    for i in range(len(mol.atoms)):
        if ranks[i] != tied:
            continue
        key = tuple(sorted(mol.neighbors(i)))
        if key in seen:
            continue
        seen.add(key)
        chosen.append(i)
    return chosen


def _best_ranks(mol):
    """Search over tie breaks of a connected molecule for the smallest SMILES.

    Each branch individualizes one atom of the lowest tied class and refines
    again.  Every discrete ranking is written out and the lexicographically
    smallest string wins, so the result does not depend on atom order.
    """
    n = len(mol.atoms)
    start = refine_ranks(mol, _dense_ranks([atom_invariant(mol, i) for i in range(n)]))
    best_text, best_ranks = None, None
    stack = [start]
    while stack:
        ranks = stack.pop()
        if len(set(ranks)) == n:
            text = to_smiles(mol, ranks)
            if best_text is None or text < best_text:
                best_text, best_ranks = text, ranks
            continue
        counts = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        for i in reversed(_candidates(mol, ranks, tied)):
            stack.append(refine_ranks(mol, _individualize(ranks, i)))
    return best_text, best_ranks


def canonical_ranks(mol):
    """Returns a list of distinct canonical ranks, one per atom.

    Each connected fragment is ranked on its own; fragments are then ordered by
    their canonical strings, so `to_smiles(mol, canonical_ranks(mol))` writes
    them in sorted order.
    """
    ranks = [0] * len(mol.atoms)
    parts = []
    for atoms in mol.fragments():
        text, local = _best_ranks(_fragment(mol, atoms))
        parts.append((text, atoms, local))
    parts.sort(key=lambda p: p[0])
    offset = 0
    for _, atoms, local in parts:
        for k, a in enumerate(atoms):
            ranks[a] = offset + local[k]
        offset += len(atoms)
    return ranks


def canonical_form(mol):
    """Canonical SMILES of `mol`.

    Two isomorphic graphs map to the same string, whatever their atom order
    or ring labels.

    Args:
       * **mol** (Molecule): parsed molecule

    Returns:
       string

    Example::

        from molguide.chem import parse_smiles, canonical_form
        print(canonical_form(parse_smiles("OCC")) == canonical_form(parse_smiles("CCO")))

    The above prints True
    """
    if len(mol.atoms) == 0:
        return ""
    return to_smiles(mol, canonical_ranks(mol))
