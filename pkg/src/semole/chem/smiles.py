"""SMILES parsing into sanitized molecular graphs."""
from __future__ import annotations

import re

from .elements import ELEMENTS
from .errors import (AromaticityError, MultiFragmentInput, SmilesError, UnbalancedBranch,
                     UnknownAtomSymbol, UnmatchedRingClosure, ValenceViolation)
from .graph import Atom, Bond, BondOrder, MolGraph
from .rings import ring_bonds
from .sanitize import AROMATIC_ORGANIC, sanitize

_BRACKET = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>se|as|te|[A-Z][a-z]?|[bcnops])"
    r"(?P<chiral>@(?:@|TH[12]|AL[12]|SP[123]|TB\d{1,2}|OH\d{1,2})?)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\+?\+?|-{1,3}|[+-]\d+)?"
    r"(?::\d+)?$"
)
_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE,
                 ":": BondOrder.AROMATIC, "/": BondOrder.SINGLE, "\\": BondOrder.SINGLE}


def _parse_charge(text):
    if not text:
        return 0
    if text[1:].isdigit():
        value = int(text[1:])
    else:
        value = len(text)
    return value if text[0] == "+" else -value


def _bracket_atom(body: str, offset: int):
    m = _BRACKET.match(body)
    if m is None:
        raise UnknownAtomSymbol(f"cannot parse bracket atom [{body}]", offset)
    if m.group("isotope"):
        raise SmilesError("isotopes are not supported", offset)
    symbol = m.group("symbol")
    aromatic = symbol[0].islower()
    symbol = symbol.capitalize()
    if symbol not in ELEMENTS or (aromatic and symbol not in AROMATIC_ORGANIC | {"Se"}):
        raise UnknownAtomSymbol(f"unknown atom symbol {m.group('symbol')!r}", offset)
    hcount = m.group("hcount")
    h = 0 if not hcount else (1 if hcount == "H" else int(hcount[1:]))
    return Atom(ELEMENTS[symbol], _parse_charge(m.group("charge")), aromatic, h, h)


def parse_smiles(text: str) -> MolGraph:
    """Parse a single-fragment SMILES string into a sanitized :class:`MolGraph`.

    Stereo markers are accepted and dropped. Errors carry the character
    offset that caused them.
    """
    if not text:
        raise SmilesError("empty SMILES string", 0)
    atoms: list[Atom] = []
    offsets: list[int] = []
    bonds: list[tuple[int, int, BondOrder | None]] = []
    pairs: set[tuple[int, int]] = set()
    branch_stack: list[tuple[int, int]] = []  # (atom, offset of '(')
    rings: dict[int, tuple[int, BondOrder | None, int]] = {}
    prev = -1
    pending: tuple[BondOrder | None, int] | None = None
    i = 0
    n = len(text)

    def add_bond(a, b, order, offset):
        key = (min(a, b), max(a, b))
        if a == b or key in pairs:
            raise SmilesError("ring closure duplicates a bond or closes on itself", offset)
        pairs.add(key)
        bonds.append((a, b, order))

    def add_atom(atom, offset):
        nonlocal prev, pending
        atoms.append(atom)
        offsets.append(offset)
        idx = len(atoms) - 1
        if prev >= 0:
            add_bond(prev, idx, pending[0] if pending else None, offset)
        elif pending is not None:
            raise SmilesError("bond symbol without a preceding atom", pending[1])
        pending = None
        prev = idx

    while i < n:
        ch = text[i]
        if ch == "[":
            close = text.find("]", i)
            if close < 0:
                raise UnknownAtomSymbol("unterminated bracket atom", i)
            add_atom(_bracket_atom(text[i + 1:close], i), i)
            i = close + 1
            continue
        if ch in "BCNOPSFI" or ch in "bcnops":
            two = text[i:i + 2]
            if two in ("Cl", "Br"):
                add_atom(Atom(ELEMENTS[two]), i)
                i += 2
                continue
            if ch.isupper():
                add_atom(Atom(ELEMENTS[ch]), i)
            else:
                add_atom(Atom(ELEMENTS[ch.upper()], aromatic=True), i)
            i += 1
            continue
        if ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesError("two consecutive bond symbols", i)
            if prev < 0:
                raise SmilesError("bond symbol without a preceding atom", i)
            explicit = _BOND_SYMBOLS[ch]
            pending = (explicit, i)
            i += 1
            continue
        if ch == "(":
            if prev < 0:
                raise UnbalancedBranch("branch opened before any atom", i)
            if pending is not None:
                raise SmilesError("bond symbol before branch", i)
            if i + 1 < n and text[i + 1] == ")":
                raise UnbalancedBranch("empty branch", i)
            branch_stack.append((prev, i))
            i += 1
            continue
        if ch == ")":
            if not branch_stack:
                raise UnbalancedBranch("closing parenthesis without an open branch", i)
            if pending is not None:
                raise SmilesError("dangling bond symbol at end of branch", pending[1])
            prev = branch_stack.pop()[0]
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if prev < 0:
                raise UnmatchedRingClosure("ring-closure digit before any atom", i)
            if ch == "%":
                digits = text[i + 1:i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise UnmatchedRingClosure("'%' must be followed by two digits", i)
                label, width = int(digits), 3
            else:
                label, width = int(ch), 1
            order = pending[0] if pending else None
            if label in rings:
                other, other_order, off = rings.pop(label)
                if order is not None and other_order is not None and order != other_order:
                    raise SmilesError("conflicting bond symbols on ring closure", i)
                add_bond(other, prev, order if order is not None else other_order, i)
            else:
                rings[label] = (prev, order, i)
            pending = None
            i += width
            continue
        if ch == ".":
            raise MultiFragmentInput("multi-fragment SMILES ('.') is not supported", i)
        if ch in "@":
            raise SmilesError("stereo marker outside a bracket atom", i)
        if ch.isalpha() or ch == "*":
            raise UnknownAtomSymbol(f"unknown atom symbol {ch!r}", i)
        raise SmilesError(f"unexpected character {ch!r}", i)

    if pending is not None:
        raise SmilesError("dangling bond symbol at end of input", pending[1])
    if branch_stack:
        raise UnbalancedBranch("unclosed branch", branch_stack[-1][1])
    if rings:
        label, (_, _, off) = min(rings.items(), key=lambda kv: kv[1][2])
        raise UnmatchedRingClosure(f"ring-closure label {label} is never closed", off)
    if not atoms:
        raise SmilesError("no atoms in SMILES string", 0)

    typed = []
    implicit_aromatic = []
    for k, (a, b, order) in enumerate(bonds):
        if order is None:
            if atoms[a].aromatic and atoms[b].aromatic:
                order = BondOrder.AROMATIC
                implicit_aromatic.append(k)
            else:
                order = BondOrder.SINGLE
        typed.append(Bond(a, b, order))
    if implicit_aromatic:
        rb = ring_bonds(MolGraph(atoms, typed))
        for k in implicit_aromatic:
            if k not in rb:
                typed[k] = Bond(typed[k].a, typed[k].b, BondOrder.SINGLE)
    mol = MolGraph(atoms, typed)
    try:
        return sanitize(mol)
    except (ValenceViolation, AromaticityError) as exc:
        atom = exc.atom
        offset = offsets[atom] if atom is not None else None
        raise type(exc)(str(exc), atom=atom, offset=offset) from None
