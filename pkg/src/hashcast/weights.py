"""Symbol weighting, validator ordering, and the range partition of the alphabet.

Validators are ranked by a repeat-attenuated character-weight sum over the
digest of their public key, then the 62-symbol alphabet is split into
contiguous validation ranges following that ranking.  The ranking order also
defines the ring used for successor/predecessor navigation.

All arithmetic is exact (rationals), so the ordering never depends on float
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .core import ALPHABET, ALPHABET_INDEX, PublicKey

# Character weights: a-z -> 0..25, A-Z -> 26..51, 0-9 -> 52..61.
WEIGHT_DICTIONARY: dict[str, int] = {}
for _i, _ch in enumerate("abcdefghijklmnopqrstuvwxyz"):
    WEIGHT_DICTIONARY[_ch] = _i
for _i, _ch in enumerate("ABCDEFGHIJKLMNOPQRSTUVWXYZ"):
    WEIGHT_DICTIONARY[_ch] = 26 + _i
for _i, _ch in enumerate("0123456789"):
    WEIGHT_DICTIONARY[_ch] = 52 + _i

# Repeated occurrences of a symbol are attenuated by this factor per repeat.
REPEAT_ATTENUATION = Fraction(1, 5)


def char_weight(wd: dict[str, int], symbol: str) -> int:
    if symbol not in wd:
        raise ValueError(f"symbol {symbol!r} is not in the alphabet")
    return wd[symbol]


def final_weight(wd: dict[str, int], symbol: str, repeats: int) -> Fraction:
    """Weight of one occurrence given how many occurrences came before it."""
    if repeats < 0:
        raise ValueError("repeat count must be non-negative")
    w = Fraction(char_weight(wd, symbol))
    if repeats == 0:
        return w
    return w * REPEAT_ATTENUATION**repeats


def kwm(wd: dict[str, int], d: str) -> Fraction:
    """Key weight metric: attenuated weight sum over a digest.

    The attenuation exponent for each position is the number of occurrences
    of that symbol strictly before the position, so the first occurrence
    always carries full weight and the metric can be accumulated in one pass.
    """
    if wd is WEIGHT_DICTIONARY:
        return _default_kwm(d)
    return _kwm(wd, d)


@lru_cache(maxsize=65536)
def _default_kwm(d: str) -> Fraction:
    return _kwm(WEIGHT_DICTIONARY, d)


def _kwm(wd: dict[str, int], d: str) -> Fraction:
    seen: dict[str, int] = {}
    total = Fraction(0)
    for symbol in d:
        repeats = seen.get(symbol, 0)
        total += final_weight(wd, symbol, repeats)
        seen[symbol] = repeats + 1
    return total


def _digest_sort_key(display: str) -> tuple[int, ...]:
    return tuple(ALPHABET_INDEX[ch] for ch in display)


def order_validators(
    pks: Sequence[PublicKey], wd: dict[str, int] | None = None
) -> list[PublicKey]:
    """Descending key-weight ordering of validators.

    Ties are broken by comparing the key digests in alphabet order, so the
    result is a pure function of the key set.
    """
    wd = WEIGHT_DICTIONARY if wd is None else wd
    if len({pk.raw for pk in pks}) != len(pks):
        raise ValueError("duplicate public keys in validator list")
    return sorted(pks, key=lambda pk: (-kwm(wd, pk.display), _digest_sort_key(pk.display)))


@dataclass(frozen=True)
class ValidationRange:
    """Contiguous span of alphabet positions, inclusive on both ends."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end <= 61):
            raise ValueError("validation range outside the alphabet")

    def covers(self, symbol: str) -> bool:
        return self.start <= ALPHABET_INDEX[symbol] <= self.end

    @property
    def size(self) -> int:
        return self.end - self.start + 1

    def symbols(self) -> str:
        return ALPHABET[self.start : self.end + 1]


@dataclass(frozen=True)
class Dht:
    """Ring of validators in allocation order with wrap-around navigation."""

    ring: tuple[PublicKey, ...]

    def __len__(self) -> int:
        return len(self.ring)

    def index_of(self, pk: PublicKey) -> int:
        for i, member in enumerate(self.ring):
            if member.raw == pk.raw:
                return i
        raise ValueError("public key is not on the ring")

    def at(self, index: int) -> PublicKey:
        return self.ring[index % len(self.ring)]

    def neighbors(self, pk: PublicKey, count: int, direction: str) -> list[PublicKey]:
        """The `count` nodes immediately after (or before) `pk`, wrapping."""
        if count >= len(self.ring):
            raise ValueError("neighbor count must be smaller than the ring")
        if direction not in ("successor", "predecessor"):
            raise ValueError("direction must be 'successor' or 'predecessor'")
        start = self.index_of(pk)
        step = 1 if direction == "successor" else -1
        return [self.at(start + step * (k + 1)) for k in range(count)]

    def successors(self, pk: PublicKey, count: int) -> list[PublicKey]:
        return self.neighbors(pk, count, "successor")

    def predecessors(self, pk: PublicKey, count: int) -> list[PublicKey]:
        return self.neighbors(pk, count, "predecessor")


@dataclass(frozen=True)
class RangeAllocation:
    """Finalized mapping of validators to validation ranges.

    `validators` is the descending key-weight list; ranges are assigned
    contiguously over the alphabet in that order, so position 0 owns the
    earliest symbols.
    """

    validators: tuple[PublicKey, ...]
    kwms: tuple[Fraction, ...]
    ranges: tuple[ValidationRange, ...]

    @property
    def dht(self) -> Dht:
        return Dht(ring=self.validators)

    def owner_index(self, symbol: str) -> int:
        idx = ALPHABET_INDEX[symbol]
        for pos, rng in enumerate(self.ranges):
            if rng.start <= idx <= rng.end:
                return pos
        raise AssertionError("ranges do not cover the alphabet")

    def range_of(self, symbol: str) -> PublicKey:
        return self.validators[self.owner_index(symbol)]

    def position_of(self, pk: PublicKey) -> int:
        for i, member in enumerate(self.validators):
            if member.raw == pk.raw:
                return i
        raise ValueError("public key is not in the allocation")

    def range_for(self, pk: PublicKey) -> ValidationRange:
        return self.ranges[self.position_of(pk)]

    def table(self) -> str:
        """Human-readable allocation table for run logs."""
        lines = ["position  key            kwm          range"]
        for i, (pk, value, rng) in enumerate(
            zip(self.validators, self.kwms, self.ranges)
        ):
            lines.append(
                f"{i:<9} {pk.display[:12]}.. {float(value):<12.4f} "
                f"{ALPHABET[rng.start]}..{ALPHABET[rng.end]}"
            )
        return "\n".join(lines)


def allocate_ranges(
    ordered: Sequence[PublicKey], wd: dict[str, int] | None = None
) -> RangeAllocation:
    """Partition the alphabet over validators already in descending order.

    The base range size is 62 // count; the top-ranked validator absorbs the
    remainder so the ranges exactly cover all 62 symbols.
    """
    wd = WEIGHT_DICTIONARY if wd is None else wd
    count = len(ordered)
    if count == 0:
        raise ValueError("cannot allocate ranges to zero validators")
    if count > 62:
        raise ValueError("more than 62 validators is unsupported")
    base = 62 // count
    remainder = 62 % count
    ranges = []
    cursor = 0
    for i in range(count):
        size = base + (remainder if i == 0 else 0)
        ranges.append(ValidationRange(start=cursor, end=cursor + size - 1))
        cursor += size
    return RangeAllocation(
        validators=tuple(ordered),
        kwms=tuple(kwm(wd, pk.display) for pk in ordered),
        ranges=tuple(ranges),
    )


def build_allocation(
    pks: Iterable[PublicKey], wd: dict[str, int] | None = None
) -> RangeAllocation:
    """Order validators by key weight and allocate their ranges."""
    return allocate_ranges(order_validators(list(pks), wd), wd)
