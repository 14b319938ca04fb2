# -*- coding: utf-8 -*-

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import namedtuple

from molguide.toolkit import DataError

SINGLE, DOUBLE, TRIPLE, AROMATIC = 1, 2, 3, 4

ATOMIC_NUMBERS = {
    "B": 5,
    "C": 6,
    "N": 7,
    "O": 8,
    "F": 9,
    "P": 15,
    "S": 16,
    "Cl": 17,
    "Br": 35,
    "I": 53,
}
HALOGENS = ("F", "Cl", "Br", "I")
AROMATIC_ELEMENTS = ("B", "C", "N", "O", "P", "S")

# Allowed neutral valences.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

Atom = namedtuple("Atom", ["element", "aromatic", "formal_charge", "explicit_h", "bracket"])
Atom.__new__.__defaults__ = (False, 0, None, False)

Bond = namedtuple("Bond", ["begin", "end", "order"])


class Molecule:
    """Attributed graph of atoms and bonds.

    Args:
       * **atoms** (list): list of `Atom`
       * **bonds** (list): list of `Bond`, at most one per unordered atom pair

    Keyword Args:
       * **stereo_ignored** (boolean): `True` when the source string carried stereo marks (`/`, `\\`, `@`) that were dropped.  Defaults to `False`.

    """

    def __init__(self, atoms, bonds, stereo_ignored=False):
        self.atoms = tuple(atoms)
        self.bonds = tuple(bonds)
        self.stereo_ignored = stereo_ignored

        n = len(self.atoms)
        self._adj = [[] for _ in range(n)]
        self._orders = {}
        for bond in self.bonds:
            i, j = bond.begin, bond.end
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise DataError(
                    "Warning! Bond endpoints " + str((i, j)) + " are not two distinct atoms."
                )
            key = (min(i, j), max(i, j))
            if key in self._orders:
                raise DataError("Warning! Duplicate bond between atoms " + str(key))
            if bond.order not in (SINGLE, DOUBLE, TRIPLE, AROMATIC):
                raise DataError("Warning! Unknown bond order " + str(bond.order))
            self._orders[key] = bond.order
            self._adj[i].append((j, bond.order))
            self._adj[j].append((i, bond.order))

    def __len__(self):
        return len(self.atoms)

    @property
    def num_atoms(self):
        return len(self.atoms)

    def neighbors(self, i):
        """Returns a list of (neighbor index, bond order) pairs for atom `i`."""
        return list(self._adj[i])

    def degree(self, i):
        return len(self._adj[i])

    def bond_order(self, i, j):
        return self._orders.get((min(i, j), max(i, j)))

    def fragments(self):
        """Returns the connected components as sorted lists of atom indices."""
        seen = [False] * len(self.atoms)
        frags = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            frag = []
            while stack:
                i = stack.pop()
                frag.append(i)
                for j, _ in self._adj[i]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            frags.append(sorted(frag))
        return frags

    def is_connected(self):
        return len(self.atoms) > 0 and len(self.fragments()) == 1

    def renumbered(self, order):
        """Returns a copy whose atom `k` is atom `order[k]` of this molecule.

        Args:
           * **order** (list): permutation of `range(num_atoms)`

        Returns:
           Molecule
        """
        if sorted(order) != list(range(len(self.atoms))):
            raise DataError("Warning! renumbered() expects a permutation of atom indices.")
        new_index = [0] * len(order)
        for new, old in enumerate(order):
            new_index[old] = new
        atoms = [self.atoms[old] for old in order]
        bonds = [Bond(new_index[b.begin], new_index[b.end], b.order) for b in self.bonds]
        return Molecule(atoms, bonds, stereo_ignored=self.stereo_ignored)

    def __repr__(self):
        return "Molecule(" + str(len(self.atoms)) + " atoms, " + str(len(self.bonds)) + " bonds)"


def max_valence(atom):
    """Largest allowed bond-order sum (including hydrogens) for `atom`, or -1 if none."""
    q = atom.formal_charge
    allowed = []
    for v in VALENCES[atom.element]:
        if atom.element == "B":
            allowed.append(v - q)
        elif atom.element == "C":
            allowed.append(v - abs(q))
        else:
            allowed.append(v + q)
    allowed = [v for v in allowed if v >= 0]
    return max(allowed) if allowed else -1


def valence_used(mol, i):
    """Kekulé-free bond-order sum of atom `i`.

    Aromatic bonds count 1.  An aromatic atom then takes one shared pi
    allowance unless it already spends its spare electron elsewhere: an
    exocyclic double bond or a charge on carbon, an explicit H or a third
    connection on nitrogen and phosphorus.  O, S and B get none.
    """
    atom = mol.atoms[i]
    total = 0
    has_double = False
    for _, order in mol.neighbors(i):
        if order == AROMATIC:
            total += 1
        else:
            total += order
            if order == DOUBLE:
                has_double = True
    if atom.explicit_h:
        total += atom.explicit_h
    if atom.aromatic:
        if atom.element == "C":
            if not has_double and atom.formal_charge == 0:
                total += 1
        elif atom.element in ("N", "P"):
            if not atom.explicit_h and mol.degree(i) < 3 and not has_double:
                total += 1
    return total


def atom_valence_ok(mol, i):
    return valence_used(mol, i) <= max_valence(mol.atoms[i])


def valence_ok(mol):
    return all(atom_valence_ok(mol, i) for i in range(len(mol.atoms)))
