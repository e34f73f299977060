"""
## Chains, monoblocks and gluing

Two chains are grown at two distant sites; position `j` of each holds a monoblock type
(`a` or `b`) and the shift sign it was attached with.  Overlaying the chains turns each
position into a quad `c1 c2 s1 s2` which either glues well (criticality `+1`) or badly (`-1`).

The gluing rules are the 16-row table built from `GOOD_GLUINGS`. Geometry (surfaces, central
balls, half-block shifts) is not modeled beyond that table.

Chains store their blocks as two read-only `numpy` int8 arrays so million-step runs stay cheap;
`Chain.blocks` gives the `(MonoblockType, Shift)` view.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from logging import getLogger
from typing import Iterable, Iterator, Tuple

import numpy as np

from .errors import ChainFormatError, EmptyChains, InvalidCriticality, LengthMismatch

log = getLogger(__name__)


class MonoblockType(enum.IntEnum):
    A = 0
    B = 1

    @property
    def letter(self) -> str:
        return self.name.lower()

    @classmethod
    def from_letter(cls, letter: str) -> "MonoblockType":
        try:
            return cls[letter.upper()]
        except KeyError:
            raise ChainFormatError(f"Unknown monoblock type ({letter!r}), expected 'a' or 'b'.")


class Shift(enum.IntEnum):
    FORWARD = 1
    BACK = -1

    @property
    def symbol(self) -> str:
        return '+' if self is Shift.FORWARD else '-'

    @classmethod
    def from_symbol(cls, symbol: str) -> "Shift":
        if symbol == '+':
            return cls.FORWARD
        # Accept the unicode minus too, people copy it out of formulas.
        if symbol in ('-', '−'):
            return cls.BACK
        raise ChainFormatError(f"Unknown shift sign ({symbol!r}), expected '+' or '-'.")


SHIFT_MAGNITUDE = 0.25
""" Shift length, as a fraction of a monoblock length. Documentary only. """

GOOD_GLUINGS = frozenset({
    "aa++", "aa--",
    "ab++", "ab--",
    "bb++", "bb--",
    "ba+-", "ba-+",
})
""" Quads `c1 c2 s1 s2` that glue well; every other quad glues badly. """


def _quad(c1: MonoblockType, c2: MonoblockType, s1: Shift, s2: Shift) -> str:
    return f"{c1.letter}{c2.letter}{s1.symbol}{s2.symbol}"


def _sign_index(sign: Shift) -> int:
    return 0 if sign is Shift.FORWARD else 1


def _build_criticality_table() -> np.ndarray:
    table = np.empty((2, 2, 2, 2), dtype=np.int8)
    for c1, c2, s1, s2 in itertools.product(MonoblockType, MonoblockType, Shift, Shift):
        good = _quad(c1, c2, s1, s2) in GOOD_GLUINGS
        table[c1, c2, _sign_index(s1), _sign_index(s2)] = 1 if good else -1
    table.setflags(write=False)
    return table


CRITICALITY_TABLE = _build_criticality_table()
""" Criticality indexed by `[c1, c2, sign_index(s1), sign_index(s2)]`, `+` at index 0. """


@dataclass(frozen=True)
class SegmentPair:
    """ Position `j` of two overlaid chains: quad `c1 c2 s1 s2`. """
    c1: MonoblockType
    c2: MonoblockType
    s1: Shift
    s2: Shift

    def __post_init__(self):
        object.__setattr__(self, 'c1', MonoblockType(self.c1))
        object.__setattr__(self, 'c2', MonoblockType(self.c2))
        object.__setattr__(self, 's1', Shift(self.s1))
        object.__setattr__(self, 's2', Shift(self.s2))

    def __str__(self):
        return _quad(self.c1, self.c2, self.s1, self.s2)


def all_segment_pairs() -> Iterator[SegmentPair]:
    """ All 16 quads, types varying slowest. """
    for c1, c2, s1, s2 in itertools.product(MonoblockType, MonoblockType, Shift, Shift):
        yield SegmentPair(c1, c2, s1, s2)


def criticality(seg: SegmentPair) -> int:
    """ +1 if the quad glues well, -1 otherwise. """
    return int(CRITICALITY_TABLE[seg.c1, seg.c2, _sign_index(seg.s1), _sign_index(seg.s2)])


def noncr_indicator(cr: int) -> float:
    """ `(1 + cr)/2`, ie: 1 for a non-critical imposition and 0 for a critical one. """
    if cr not in (1, -1):
        raise InvalidCriticality(f"Criticality must be +1 or -1, got ({cr}).")
    return (1 + cr) / 2


def _as_block_array(values) -> np.ndarray:
    array = np.array(values, dtype=np.int8).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Chain:
    """
    One synthesized polymer chain.

    Attributes:
        types: int8 array of `MonoblockType` values, one per attached block.
        signs: int8 array of `Shift` values (±1), one per attached block.
    """
    types: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        types = _as_block_array(self.types)
        signs = _as_block_array(self.signs)
        if types.shape != signs.shape:
            raise LengthMismatch(
                f"Chain has ({types.size}) types but ({signs.size}) shift signs."
            )
        if not np.isin(types, (0, 1)).all():
            raise ChainFormatError("Chain types must all be 0 (a) or 1 (b).")
        if not np.isin(signs, (1, -1)).all():
            raise ChainFormatError("Chain shift signs must all be +1 or -1.")
        object.__setattr__(self, 'types', types)
        object.__setattr__(self, 'signs', signs)

    @classmethod
    def empty(cls) -> "Chain":
        return cls(np.empty(0, dtype=np.int8), np.empty(0, dtype=np.int8))

    @classmethod
    def from_blocks(cls, blocks: Iterable[Tuple[MonoblockType, Shift]]) -> "Chain":
        blocks = [(MonoblockType(c), Shift(s)) for c, s in blocks]
        if not blocks:
            return cls.empty()
        types, signs = zip(*blocks)
        return cls(np.array(types, dtype=np.int8), np.array(signs, dtype=np.int8))

    @property
    def length(self) -> int:
        return int(self.types.size)

    def __len__(self):
        return self.length

    @property
    def blocks(self) -> Tuple[Tuple[MonoblockType, Shift], ...]:
        return tuple(
            (MonoblockType(int(c)), Shift(int(s))) for c, s in zip(self.types, self.signs)
        )

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (
            np.array_equal(self.types, other.types)
            and np.array_equal(self.signs, other.signs)
        )

    def __hash__(self):
        return hash((self.types.tobytes(), self.signs.tobytes()))

    def dumps(self) -> str:
        """ One `<type><sign>` line per block, ie: `a+` or `b-`. """
        return "".join(f"{c.letter}{s.symbol}\n" for c, s in self.blocks)

    @classmethod
    def loads(cls, text: str) -> "Chain":
        blocks = []
        for line_number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            if len(line) != 2:
                raise ChainFormatError(
                    f"Line ({line_number}) should look like 'a+' or 'b-', got ({line!r})."
                )
            blocks.append((MonoblockType.from_letter(line[0]), Shift.from_symbol(line[1])))
        return cls.from_blocks(blocks)


def segments(chain1: Chain, chain2: Chain) -> Iterator[SegmentPair]:
    _check_lengths(chain1, chain2)
    for (c1, s1), (c2, s2) in zip(chain1.blocks, chain2.blocks):
        yield SegmentPair(c1, c2, s1, s2)


def criticalities(chain1: Chain, chain2: Chain) -> np.ndarray:
    """ Per-position criticality of the overlay, as an int8 array of ±1. """
    _check_lengths(chain1, chain2)
    return CRITICALITY_TABLE[
        chain1.types,
        chain2.types,
        (chain1.signs < 0).astype(np.intp),
        (chain2.signs < 0).astype(np.intp),
    ]


def _check_lengths(chain1: Chain, chain2: Chain):
    if chain1.length != chain2.length:
        raise LengthMismatch(
            f"Can only overlay chains of equal length, got ({chain1.length}) "
            f"and ({chain2.length})."
        )


@dataclass(frozen=True)
class OverlayReport:
    length: int
    noncritical_count: int
    cr_sum: int
    noncr_fraction: float

    @classmethod
    def from_cr_sum(cls, length: int, cr_sum: int) -> "OverlayReport":
        noncritical_count = (length + cr_sum) // 2
        return cls(
            length=length,
            noncritical_count=noncritical_count,
            cr_sum=cr_sum,
            noncr_fraction=noncritical_count / length,
        )


def overlay(chain1: Chain, chain2: Chain) -> OverlayReport:
    """ Superimpose `chain1` on `chain2` and count the positions that glue well. """
    _check_lengths(chain1, chain2)
    if chain1.length == 0:
        raise EmptyChains("Overlay quality is undefined for empty chains.")

    cr_sum = int(criticalities(chain1, chain2).sum(dtype=np.int64))
    report = OverlayReport.from_cr_sum(chain1.length, cr_sum)
    log.debug(f"Overlay of ({report.length}) positions: ({report.noncritical_count}) glue well.")
    return report
