"""A small SMARTS-like pattern language and a backtracking subgraph matcher.

Supported atom primitives: element symbols (upper case aliphatic, lower case
aromatic), ``#n``, ``*``, ``a``, ``A``, ``Hn`` (total hydrogens), ``Dn``
(heavy degree), ``Xn`` (total connections), ``vn`` (total valence),
``+n``/``-n``, ``R``/``Rn`` (ring membership count), ``rn`` (member of an SSSR
ring of size n) and recursive ``$(...)`` environments. Logical operators are
``!``, ``&``, ``,`` and ``;`` with the usual precedence; adjacent primitives
are implicitly and-ed. Bond primitives are ``- = # : ~ @`` with the same
operators; an omitted bond means single or aromatic.
"""
from __future__ import annotations

from functools import lru_cache

from .elements import ELEMENTS
from .graph import BondOrder, MolGraph
from .rings import ring_bonds, sssr


class PatternError(ValueError):
    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (at offset {offset})")
        self.offset = offset


_ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
_AROMATIC = ("se", "b", "c", "n", "o", "p", "s")
_TWO_LETTER = {s for s in ELEMENTS if len(s) == 2} | {"Na", "Li", "Mg", "Ca", "Zn", "Al", "As", "Te"}
_NUMBERS = {s: e.atomic_number for s, e in ELEMENTS.items()}
_NUMBERS.update({"Li": 3, "Na": 11, "Mg": 12, "Al": 13, "K": 19, "Ca": 20, "Zn": 30, "As": 33, "Te": 52})


class Pattern:
    """Compiled pattern: atom predicates plus bonds ``(i, j, predicate)``."""

    def __init__(self, text: str):
        self.text = text
        self.atoms: list = []
        self.bonds: list[tuple[int, int, object]] = []
        _Parser(text, self).parse()
        self.adjacency = [[] for _ in self.atoms]
        for k, (i, j, _) in enumerate(self.bonds):
            self.adjacency[i].append((j, k))
            self.adjacency[j].append((i, k))

    def __repr__(self):
        return f"Pattern({self.text!r})"

    def __len__(self):
        return len(self.atoms)


class _Parser:
    def __init__(self, text, out):
        self.s = text
        self.i = 0
        self.out = out

    def error(self, msg):
        raise PatternError(msg, self.i)

    def peek(self, k=0):
        j = self.i + k
        return self.s[j] if j < len(self.s) else ""

    def parse(self):
        prev = None
        stack = []
        rings: dict[int, tuple[int, object]] = {}
        bond = None
        if not self.s:
            self.error("empty pattern")
        while self.i < len(self.s):
            c = self.peek()
            if c == "(":
                if prev is None:
                    self.error("branch before any atom")
                stack.append(prev)
                self.i += 1
            elif c == ")":
                if not stack:
                    self.error("unbalanced ')'")
                prev = stack.pop()
                self.i += 1
            elif c in "-=#:~@!" or (c in "&,;" and bond is not None):
                if bond is not None:
                    self.error("two bonds in a row")
                bond = self.bond_expr()
            elif c.isdigit() or c == "%":
                if prev is None:
                    self.error("ring closure before any atom")
                if c == "%":
                    num = int(self.s[self.i + 1:self.i + 3])
                    self.i += 3
                else:
                    num = int(c)
                    self.i += 1
                if num in rings:
                    other, obond = rings.pop(num)
                    self.out.bonds.append((other, prev, bond or obond or _DEFAULT_BOND))
                else:
                    rings[num] = (prev, bond)
                bond = None
            else:
                idx = self.atom()
                if prev is not None:
                    self.out.bonds.append((prev, idx, bond or _DEFAULT_BOND))
                elif idx:
                    self.error("pattern must be connected")
                bond = None
                prev = idx
        if stack:
            self.error("unbalanced '('")
        if rings:
            self.error("unclosed ring bond")
        if bond is not None:
            self.error("dangling bond")

    # atoms
    def atom(self):
        c = self.peek()
        if c == "[":
            self.i += 1
            expr = self.low_and(self.atom_primitive)
            if self.peek() != "]":
                self.error("expected ']'")
            self.i += 1
        else:
            expr = None
            for sym in _ORGANIC:
                if self.s.startswith(sym, self.i):
                    expr = ("and", [("Z", _NUMBERS[sym]), ("arom", False)])
                    self.i += len(sym)
                    break
            else:
                for sym in _AROMATIC:
                    if self.s.startswith(sym, self.i):
                        expr = ("and", [("Z", _NUMBERS[sym.capitalize()]), ("arom", True)])
                        self.i += len(sym)
                        break
                else:
                    if c in "*aA":
                        expr = ("true",) if c == "*" else ("arom", c == "a")
                        self.i += 1
                    else:
                        self.error(f"unexpected character {c!r}")
        self.out.atoms.append(expr)
        return len(self.out.atoms) - 1

    def number(self, default=None):
        j = self.i
        while self.peek().isdigit():
            self.i += 1
        if j == self.i:
            return default
        return int(self.s[j:self.i])

    def atom_primitive(self):
        c = self.peek()
        if c == "$":
            if self.peek(1) != "(":
                self.error("expected '(' after '$'")
            depth, j = 0, self.i + 1
            while j < len(self.s):
                if self.s[j] == "(":
                    depth += 1
                elif self.s[j] == ")":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            else:
                self.error("unbalanced recursive pattern")
            inner = self.s[self.i + 2:j]
            self.i = j + 1
            return ("rec", compile_pattern(inner))
        if c == "#":
            self.i += 1
            n = self.number()
            if n is None:
                self.error("expected atomic number")
            return ("Z", n)
        if c == "*":
            self.i += 1
            return ("true",)
        if c in "+-":
            sign = 1 if c == "+" else -1
            self.i += 1
            n = self.number()
            if n is None:
                n = 1
                while self.peek() == c:
                    n += 1
                    self.i += 1
            return ("charge", sign * n)
        if c == "H":
            self.i += 1
            return ("H", self.number(1))
        if c in "DXvr" or (c == "R"):
            self.i += 1
            n = self.number()
            if c == "R":
                return ("R", n)
            if n is None:
                if c == "r":
                    return ("R", None)
                self.error(f"{c} needs a count")
            return (c, n)
        if c == "a" or c == "A":
            self.i += 1
            return ("arom", c == "a")
        if c.isupper():
            two = self.s[self.i:self.i + 2]
            if two in _TWO_LETTER:
                self.i += 2
                return ("and", [("Z", _NUMBERS[two]), ("arom", False)])
            if c in _NUMBERS:
                self.i += 1
                return ("and", [("Z", _NUMBERS[c]), ("arom", False)])
        for sym in _AROMATIC:
            if self.s.startswith(sym, self.i):
                self.i += len(sym)
                return ("and", [("Z", _NUMBERS[sym.capitalize()]), ("arom", True)])
        self.error(f"unknown atom primitive {c!r}")

    # bonds
    def bond_primitive(self):
        c = self.peek()
        table = {"-": ("order", BondOrder.SINGLE), "=": ("order", BondOrder.DOUBLE),
                 "#": ("order", BondOrder.TRIPLE), ":": ("order", BondOrder.AROMATIC),
                 "~": ("true",), "@": ("ring",)}
        if c not in table:
            self.error(f"unknown bond primitive {c!r}")
        self.i += 1
        return table[c]

    def bond_expr(self):
        return self.low_and(self.bond_primitive, bond=True)

    # shared expression grammar
    def _stops(self, bond):
        c = self.peek()
        if c in ("", "]"):
            return True
        if bond:
            return c not in "-=#:~@!&,;"
        return False

    def unary(self, prim, bond):
        if self.peek() == "!":
            self.i += 1
            return ("not", self.unary(prim, bond))
        return prim()

    def high_and(self, prim, bond):
        terms = [self.unary(prim, bond)]
        while not self._stops(bond):
            c = self.peek()
            if c == "&":
                self.i += 1
            elif c in ",;":
                break
            terms.append(self.unary(prim, bond))
        return terms[0] if len(terms) == 1 else ("and", terms)

    def or_expr(self, prim, bond):
        terms = [self.high_and(prim, bond)]
        while self.peek() == ",":
            self.i += 1
            terms.append(self.high_and(prim, bond))
        return terms[0] if len(terms) == 1 else ("or", terms)

    def low_and(self, prim, bond=False):
        terms = [self.or_expr(prim, bond)]
        while self.peek() == ";":
            self.i += 1
            terms.append(self.or_expr(prim, bond))
        return terms[0] if len(terms) == 1 else ("and", terms)


_DEFAULT_BOND = ("or", [("order", BondOrder.SINGLE), ("order", BondOrder.AROMATIC)])


@lru_cache(maxsize=None)
def compile_pattern(text: str) -> Pattern:
    return Pattern(text)


class _Target:
    """Per-molecule atom and bond features used by predicates."""

    def __init__(self, mol: MolGraph):
        self.mol = mol
        kek = mol._cache.get("kekule") or {}
        n = mol.num_atoms
        self.Z = [a.element.atomic_number for a in mol.atoms]
        self.arom = [a.aromatic for a in mol.atoms]
        self.H = [a.implicit_h for a in mol.atoms]
        self.D = [mol.degree(i) for i in range(n)]
        self.X = [self.D[i] + self.H[i] for i in range(n)]
        self.charge = [a.charge for a in mol.atoms]
        val = list(self.H)
        for k, b in enumerate(mol.bonds):
            order = kek.get(k, b.order)
            v = 1 if order is BondOrder.AROMATIC else int(order)
            val[b.a] += v
            val[b.b] += v
        self.v = val
        rings = sssr(mol)
        self.nrings = [0] * n
        self.sizes = [set() for _ in range(n)]
        for r in rings:
            for a in r:
                self.nrings[a] += 1
                self.sizes[a].add(len(r))
        self.ring_bonds = ring_bonds(mol)
        self.rec_cache: dict = {}


def _target(mol) -> _Target:
    t = mol._cache.get("pattern_target")
    if t is None:
        t = _Target(mol)
        mol._cache["pattern_target"] = t
    return t


def _atom_ok(expr, t: _Target, i: int) -> bool:
    kind = expr[0]
    if kind == "and":
        return all(_atom_ok(e, t, i) for e in expr[1])
    if kind == "or":
        return any(_atom_ok(e, t, i) for e in expr[1])
    if kind == "not":
        return not _atom_ok(expr[1], t, i)
    if kind == "true":
        return True
    if kind == "Z":
        return t.Z[i] == expr[1]
    if kind == "arom":
        return t.arom[i] == expr[1]
    if kind == "H":
        return t.H[i] == expr[1]
    if kind == "D":
        return t.D[i] == expr[1]
    if kind == "X":
        return t.X[i] == expr[1]
    if kind == "v":
        return t.v[i] == expr[1]
    if kind == "charge":
        return t.charge[i] == expr[1]
    if kind == "R":
        return t.nrings[i] > 0 if expr[1] is None else t.nrings[i] == expr[1]
    if kind == "r":
        return expr[1] in t.sizes[i]
    if kind == "rec":
        key = (id(expr[1]), i)
        hit = t.rec_cache.get(key)
        if hit is None:
            hit = next(_search(expr[1], t, i), None) is not None
            t.rec_cache[key] = hit
        return hit
    raise PatternError(f"unknown predicate {kind}")


def _bond_ok(expr, t: _Target, k: int) -> bool:
    kind = expr[0]
    if kind == "and":
        return all(_bond_ok(e, t, k) for e in expr[1])
    if kind == "or":
        return any(_bond_ok(e, t, k) for e in expr[1])
    if kind == "not":
        return not _bond_ok(expr[1], t, k)
    if kind == "true":
        return True
    if kind == "order":
        return t.mol.bonds[k].order is expr[1]
    if kind == "ring":
        return k in t.ring_bonds
    raise PatternError(f"unknown bond predicate {kind}")


def _search(pat: Pattern, t: _Target, root=None):
    """Yield injective mappings (tuple of target atoms) of ``pat`` into the target."""
    mol = t.mol
    n = len(pat.atoms)
    mapping = [-1] * n
    used = set()
    # for each query atom after the first: its earliest bonded predecessor
    anchor = []
    for q in range(n):
        prev = [(j, k) for j, k in pat.adjacency[q] if j < q]
        anchor.append(min(prev) if prev else None)

    def candidates(q):
        if q == 0:
            return [root] if root is not None else range(mol.num_atoms)
        j, _ = anchor[q]
        return mol.neighbors(mapping[j])

    def feasible(q, a):
        if a in used or not _atom_ok(pat.atoms[q], t, a):
            return False
        for j, k in pat.adjacency[q]:
            if j < q:
                bk = mol.bond_index(mapping[j], a)
                if bk is None or not _bond_ok(pat.bonds[k][2], t, bk):
                    return False
        return True

    def extend(q):
        if q == n:
            yield tuple(mapping)
            return
        for a in candidates(q):
            if feasible(q, a):
                mapping[q] = a
                used.add(a)
                yield from extend(q + 1)
                used.discard(a)
                mapping[q] = -1

    yield from extend(0)


def match_atom(pattern, mol: MolGraph, atom: int) -> bool:
    """True if the pattern matches with its first atom on ``atom``."""
    pat = compile_pattern(pattern) if isinstance(pattern, str) else pattern
    return next(_search(pat, _target(mol), atom), None) is not None


def has_match(pattern, mol: MolGraph) -> bool:
    pat = compile_pattern(pattern) if isinstance(pattern, str) else pattern
    return next(_search(pat, _target(mol)), None) is not None


def find_matches(pattern, mol: MolGraph, unique=True) -> list[tuple[int, ...]]:
    """All matches; with ``unique`` matches covering the same atom set count once."""
    pat = compile_pattern(pattern) if isinstance(pattern, str) else pattern
    out, seen = [], set()
    for m in _search(pat, _target(mol)):
        key = frozenset(m)
        if unique and key in seen:
            continue
        seen.add(key)
        out.append(m)
    return out
