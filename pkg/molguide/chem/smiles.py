# -*- coding: utf-8 -*-
"""
Reader and writer for the supported SMILES subset: organic-subset and
bracket atoms, bond symbols `- = # :`, lowercase aromatic atoms, branches
and ring closures (`1`-`9`, `%nn`).  Stereo marks are accepted and dropped.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import logging

from molguide.toolkit import DataError
from molguide.chem.molecule import (
    Atom,
    Bond,
    Molecule,
    ATOMIC_NUMBERS,
    AROMATIC_ELEMENTS,
    SINGLE,
    DOUBLE,
    TRIPLE,
    AROMATIC,
)

logger = logging.getLogger(__name__)

BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}
ORGANIC_TWO = ("Cl", "Br")
ORGANIC_ONE = ("B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ONE = ("b", "c", "n", "o", "p", "s")
MAX_CHARGE = 7


class SmilesError(DataError):
    """Base class of parse errors.  `offset` is the byte offset of the fault."""

    def __init__(self, message, offset):
        DataError.__init__(self, message + " at offset " + str(offset))
        self.offset = offset


class UnclosedBranch(SmilesError):
    pass


class UnclosedBracket(SmilesError):
    pass


class UnmatchedRingBond(SmilesError):
    pass


class UnknownAtomSymbol(SmilesError):
    pass


class InvalidCharge(SmilesError):
    pass


class UnexpectedToken(SmilesError):
    pass


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.atoms = []
        self.bonds = {}
        self.bond_list = []
        self.stereo = False

    def fail(self, cls, message, offset=None):
        raise cls(message, self.pos if offset is None else offset)

    def peek(self, k=0):
        i = self.pos + k
        return self.text[i] if i < len(self.text) else ""

    def add_bond(self, i, j, order, offset, ring=False):
        if i == j:
            self.fail(UnmatchedRingBond, "Ring bond closes on its own atom", offset)
        key = (min(i, j), max(i, j))
        if key in self.bonds:
            cls = UnmatchedRingBond if ring else UnexpectedToken
            self.fail(cls, "Duplicate bond between atoms " + str(key), offset)
        if order is None:
            if self.atoms[i].aromatic and self.atoms[j].aromatic:
                order = AROMATIC
            else:
                order = SINGLE
        self.bonds[key] = order
        self.bond_list.append(Bond(i, j, order))

    def read_organic(self):
        c = self.peek()
        two = self.text[self.pos : self.pos + 2]
        if two in ORGANIC_TWO:
            self.pos += 2
            return Atom(two, False, 0, None, False)
        if c in ORGANIC_ONE:
            self.pos += 1
            return Atom(c, False, 0, None, False)
        if c in AROMATIC_ONE:
            self.pos += 1
            return Atom(c.upper(), True, 0, None, False)
        self.fail(UnknownAtomSymbol, "Unknown atom symbol '" + c + "'")

    def read_bracket(self):
        start = self.pos
        self.pos += 1  # '['
        if self.peek().isdigit():
            self.fail(UnexpectedToken, "Isotopes are not supported")
        two = self.text[self.pos : self.pos + 2]
        c = self.peek()
        if two in ATOMIC_NUMBERS and len(two) == 2:
            element, aromatic = two, False
            self.pos += 2
        elif c in ATOMIC_NUMBERS:
            element, aromatic = c, False
            self.pos += 1
        elif c.upper() in AROMATIC_ELEMENTS and c.islower():
            element, aromatic = c.upper(), True
            self.pos += 1
        elif c == "":
            self.fail(UnclosedBracket, "Unclosed bracket atom", start)
        else:
            self.fail(UnknownAtomSymbol, "Unknown atom symbol in bracket")

        while self.peek() == "@":
            self.stereo = True
            self.pos += 1

        h = 0
        if self.peek() == "H":
            self.pos += 1
            h = 1
            if self.peek().isdigit():
                h = int(self.peek())
                self.pos += 1

        charge = 0
        sign_start = self.pos
        if self.peek() in ("+", "-"):
            sign = self.peek()
            count = 0
            while self.peek() in ("+", "-"):
                if self.peek() != sign:
                    self.fail(InvalidCharge, "Mixed charge signs", sign_start)
                count += 1
                self.pos += 1
            if self.peek().isdigit():
                if count > 1:
                    self.fail(InvalidCharge, "Repeated sign followed by a digit", sign_start)
                digits = ""
                while self.peek().isdigit():
                    digits += self.peek()
                    self.pos += 1
                count = int(digits)
            charge = count if sign == "+" else -count
            if abs(charge) > MAX_CHARGE:
                self.fail(InvalidCharge, "Charge out of range", sign_start)

        if self.peek() == "":
            self.fail(UnclosedBracket, "Unclosed bracket atom", start)
        if self.peek() != "]":
            self.fail(UnexpectedToken, "Unexpected character '" + self.peek() + "' in bracket")
        self.pos += 1
        return Atom(element, aromatic, charge, h, True)

    def read_ring_label(self):
        if self.peek() == "%":
            digits = self.text[self.pos + 1 : self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.fail(UnexpectedToken, "Ring label '%' must be followed by two digits")
            self.pos += 3
            return int(digits)
        label = int(self.peek())
        self.pos += 1
        return label

    def parse(self):
        text = self.text
        if not text:
            raise UnexpectedToken("Empty SMILES string", 0)
        for k, ch in enumerate(text):
            if ord(ch) > 127:
                raise UnexpectedToken("Non-ASCII character", k)

        prev = None
        pending_bond = None
        pending_offset = None
        branches = []
        rings = {}

        while self.pos < len(text):
            c = self.peek()
            offset = self.pos
            if c == "(":
                if prev is None:
                    self.fail(UnexpectedToken, "Branch without a preceding atom")
                if pending_bond is not None:
                    self.fail(UnexpectedToken, "Bond symbol before a branch", pending_offset)
                branches.append((prev, offset))
                self.pos += 1
                if self.peek() == ")":
                    self.fail(UnexpectedToken, "Empty branch")
            elif c == ")":
                if not branches:
                    self.fail(UnexpectedToken, "Unmatched ')'")
                if pending_bond is not None:
                    self.fail(UnexpectedToken, "Dangling bond symbol", pending_offset)
                prev = branches.pop()[0]
                self.pos += 1
            elif c in BOND_SYMBOLS or c in ("/", "\\"):
                if prev is None or pending_bond is not None:
                    self.fail(UnexpectedToken, "Unexpected bond symbol '" + c + "'")
                if c in ("/", "\\"):
                    self.stereo = True
                    pending_bond = SINGLE
                else:
                    pending_bond = BOND_SYMBOLS[c]
                pending_offset = offset
                self.pos += 1
            elif c == ".":
                if prev is None or pending_bond is not None:
                    self.fail(UnexpectedToken, "Unexpected '.'")
                prev = None
                self.pos += 1
            elif c.isdigit() or c == "%":
                if prev is None:
                    self.fail(UnexpectedToken, "Ring label without a preceding atom")
                label = self.read_ring_label()
                if label in rings:
                    atom, order, open_offset = rings.pop(label)
                    if order is not None and pending_bond is not None and order != pending_bond:
                        self.fail(UnmatchedRingBond, "Conflicting ring bond orders", offset)
                    self.add_bond(
                        atom,
                        prev,
                        pending_bond if pending_bond is not None else order,
                        offset,
                        ring=True,
                    )
                else:
                    rings[label] = (prev, pending_bond, offset)
                pending_bond = None
            else:
                if c == "[":
                    atom = self.read_bracket()
                else:
                    atom = self.read_organic()
                self.atoms.append(atom)
                idx = len(self.atoms) - 1
                if prev is not None:
                    self.add_bond(prev, idx, pending_bond, offset)
                elif pending_bond is not None:
                    self.fail(UnexpectedToken, "Bond symbol without a preceding atom", pending_offset)
                pending_bond = None
                prev = idx

        if pending_bond is not None:
            raise UnexpectedToken("Dangling bond symbol", pending_offset)
        if branches:
            raise UnclosedBranch("Unclosed branch", branches[-1][1])
        if rings:
            first = min(v[2] for v in rings.values())
            raise UnmatchedRingBond("Ring bond is never closed", first)
        if prev is None:
            raise UnexpectedToken("String ends without an atom", len(text))

        if self.stereo:
            logger.debug("Stereo marks ignored in '%s'", text)
        return Molecule(self.atoms, self.bond_list, stereo_ignored=self.stereo)


def parse_smiles(text):
    """Parses a SMILES string into a Molecule.

    Args:
       * **text** (string): non-empty ASCII SMILES

    Returns:
       Molecule

    Raises `UnclosedBranch`, `UnmatchedRingBond`, `UnknownAtomSymbol`,
    `InvalidCharge`, `UnclosedBracket` or `UnexpectedToken`, each carrying
    the byte offset of the fault.

    Example::

        from molguide.chem import parse_smiles
        print(parse_smiles("C1CC1"))

    The above prints Molecule(3 atoms, 3 bonds)
    """
    return _Parser(text).parse()


def atom_symbol(atom):
    """SMILES text of a single atom."""
    sym = atom.element.lower() if atom.aromatic else atom.element
    if not atom.bracket:
        return sym
    out = "[" + sym
    if atom.explicit_h:
        out += "H" + (str(atom.explicit_h) if atom.explicit_h > 1 else "")
    q = atom.formal_charge
    if q:
        out += ("+" if q > 0 else "-") + (str(abs(q)) if abs(q) > 1 else "")
    return out + "]"


def bond_symbol(mol, i, j, order):
    both_aromatic = mol.atoms[i].aromatic and mol.atoms[j].aromatic
    if order == DOUBLE:
        return "="
    if order == TRIPLE:
        return "#"
    if order == AROMATIC:
        return "" if both_aromatic else ":"
    return "-" if both_aromatic else ""


def _ring_label(n):
    return str(n) if n < 10 else "%" + str(n)


def _write_fragment(mol, ranks, root):
    # depth-first spanning tree, neighbours visited in rank order
    children = {}
    ring_partners = {}
    visited = set()
    order = []
    seen_edges = set()

    iters = {}
    visited.add(root)
    order.append(root)
    children[root] = []
    iters[root] = iter(sorted((j for j, _ in mol.neighbors(root)), key=lambda j: ranks[j]))
    path = [(root, None)]
    while path:
        atom, parent = path[-1]
        advanced = False
        for nbr in iters[atom]:
            if nbr == parent:
                continue
            edge = (min(atom, nbr), max(atom, nbr))
            if nbr in visited:
                if edge not in seen_edges:
                    seen_edges.add(edge)
                    ring_partners.setdefault(nbr, []).append(atom)
                    ring_partners.setdefault(atom, []).append(nbr)
                continue
            seen_edges.add(edge)
            visited.add(nbr)
            order.append(nbr)
            children[atom].append(nbr)
            children[nbr] = []
            iters[nbr] = iter(sorted((j for j, _ in mol.neighbors(nbr)), key=lambda j: ranks[j]))
            path.append((nbr, atom))
            advanced = True
            break
        if not advanced:
            path.pop()
    position = dict((a, k) for k, a in enumerate(order))
    open_labels = {}
    in_use = set()
    pieces = []

    def emit(atom, parent):
        if parent is not None:
            pieces.append(bond_symbol(mol, parent, atom, mol.bond_order(parent, atom)))
        pieces.append(atom_symbol(mol.atoms[atom]))
        partners = ring_partners.get(atom, [])
        closing = sorted(
            [p for p in partners if position[p] < position[atom]],
            key=lambda p: position[p],
        )
        opening = sorted(
            [p for p in partners if position[p] > position[atom]],
            key=lambda p: ranks[p],
        )
        freed = set()
        for p in closing:
            label = open_labels.pop((p, atom))
            pieces.append(_ring_label(label))
            in_use.discard(label)
            freed.add(label)
        for p in opening:
            label = 1
            while label in in_use or label in freed:
                label += 1
            in_use.add(label)
            open_labels[(atom, p)] = label
            pieces.append(bond_symbol(mol, atom, p, mol.bond_order(atom, p)) + _ring_label(label))

    # iterative emission: branches for all children but the last
    work = [("atom", root, None)]
    while work:
        kind, atom, parent = work.pop()
        if kind == "open":
            pieces.append("(")
            continue
        if kind == "close":
            pieces.append(")")
            continue
        emit(atom, parent)
        kids = children[atom]
        tail = []
        for k, child in enumerate(kids):
            if k < len(kids) - 1:
                tail.append(("open", None, None))
                tail.append(("atom", child, atom))
                tail.append(("close", None, None))
            else:
                tail.append(("atom", child, atom))
        work.extend(reversed(tail))
    return "".join(pieces)


def to_smiles(mol, ranks=None):
    """Writes a SMILES string for `mol`.

    Args:
       * **mol** (Molecule): molecule to write

    Keyword Args:
       * **ranks** (list): one sortable key per atom.  Each fragment starts at its lowest-ranked atom and neighbours are visited in rank order.  Defaults to the atom indices.

    Returns:
       string
    """
    if ranks is None:
        ranks = list(range(len(mol.atoms)))
    frags = mol.fragments()
    parts = []
    for frag in frags:
        root = min(frag, key=lambda a: ranks[a])
        parts.append((ranks[root], _write_fragment(mol, ranks, root)))
    parts.sort(key=lambda p: p[0])
    return ".".join(p[1] for p in parts)
