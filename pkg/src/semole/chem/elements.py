"""Periodic-table data loaded from the shipped ``elements.txt`` file."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .errors import UnknownAtomSymbol


@dataclass(frozen=True)
class Element:
    symbol: str
    atomic_number: int
    atomic_weight: float
    allowed_valences: tuple[int, ...]

    def __repr__(self):
        return f"Element({self.symbol})"


def parse_element_table(text: str) -> dict[str, Element]:
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"elements table line {lineno}: expected 4 fields, got {len(fields)}")
        symbol, z, weight, valences = fields
        vals = tuple(int(v) for v in valences.split(","))
        if not vals or list(vals) != sorted(vals):
            raise ValueError(f"elements table line {lineno}: valences must be nonempty and ascending")
        if symbol in table:
            raise ValueError(f"elements table line {lineno}: duplicate symbol {symbol}")
        table[symbol] = Element(symbol, int(z), float(weight), vals)
    return table


def _load() -> dict[str, Element]:
    text = resources.files("semole").joinpath("data/elements.txt").read_text()
    return parse_element_table(text)


ELEMENTS: dict[str, Element] = _load()
BY_NUMBER: dict[int, Element] = {e.atomic_number: e for e in ELEMENTS.values()}
HYDROGEN = ELEMENTS["H"]


def element(symbol: str) -> Element:
    try:
        return ELEMENTS[symbol]
    except KeyError:
        raise UnknownAtomSymbol(f"unknown element {symbol!r}") from None


def charged_valences(elem: Element, charge: int) -> tuple[int, ...]:
    """Allowed valences of ``elem`` carrying ``charge``.

    A charged atom takes the valence list of its isoelectronic neutral
    element (N+ behaves as C, O- as F). When that element is not tabulated
    the neutral list is shifted down by ``|charge|``.
    """
    if charge == 0:
        return elem.allowed_valences
    iso = BY_NUMBER.get(elem.atomic_number - charge)
    if iso is not None and iso.symbol != "H":
        return iso.allowed_valences
    shifted = tuple(v - abs(charge) for v in elem.allowed_valences if v - abs(charge) >= 0)
    return shifted or (0,)
