"""Reduced words over an arbitrary alphabet: the free-group value type.

A word is an immutable sequence of (letter, sign) pairs with no adjacent
letter/inverse pair.  The same representation serves words over the tagged
input alphabet and words over a subgroup basis (where letters are plain
integer indices); all arithmetic below is alphabet-agnostic except sigma,
which reads block tags.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple

SignedLetter = Tuple[object, int]  # (letter, +1 | -1)


def block_id(elements: Iterable[str]) -> str:
    """Canonical identifier of a block: its symbols, sorted, comma-joined."""
    return ",".join(sorted(elements))


@dataclass(frozen=True)
class TaggedLetter:
    """A generator of the ambient free group: a symbol plus the block it is
    tagged with.

    Tagging makes generators of overlapping blocks distinct: ``(a, "a")`` and
    ``(a, "a,b")`` are different letters even though both carry the symbol
    ``a``.  ``block`` is a canonical block id as produced by :func:`block_id`.
    """

    element: str
    block: str

    def __post_init__(self):
        if self.element not in self.block.split(","):
            raise ValueError(f"element {self.element!r} not in block {self.block!r}")

    def __str__(self) -> str:
        return f"{self.element}@{self.block}"


@functools.lru_cache(maxsize=None)
def letter_key(letter: TaggedLetter):
    """Total order on tagged letters: blocks by (size, element sequence),
    then elements within the block."""
    parts = tuple(letter.block.split(","))
    return (len(parts), parts, letter.element)


def _reduce(raw: Iterable[SignedLetter]) -> Tuple[SignedLetter, ...]:
    stack: list[SignedLetter] = []
    for letter, sign in raw:
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        if stack and stack[-1][0] == letter and stack[-1][1] == -sign:
            stack.pop()
        else:
            stack.append((letter, sign))
    return tuple(stack)


class Word:
    """An immutable reduced word; the empty word is the group identity.

    Construction reduces its input, so every Word in existence is reduced.
    ``u * v`` is concatenation-then-reduction, ``~u`` the group inverse.
    """

    __slots__ = ("letters",)

    def __init__(self, raw: Iterable[SignedLetter] = ()):
        object.__setattr__(self, "letters", _reduce(raw))

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[SignedLetter]:
        return iter(self.letters)

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self) -> int:
        return hash(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __invert__(self) -> "Word":
        return Word((letter, -sign) for letter, sign in reversed(self.letters))

    def __bool__(self) -> bool:
        return bool(self.letters)

    def is_identity(self) -> bool:
        return not self.letters

    def __repr__(self) -> str:
        return f"Word({format_word(self)!r})"


IDENTITY = Word()


def reduce_word(raw: Iterable[SignedLetter]) -> Word:
    """The unique reduced word obtained by performing all cancellations."""
    return Word(raw)


def concat(u: Word, v: Word) -> Word:
    return u * v


def inverse(u: Word) -> Word:
    return ~u


def single(letter, sign: int = 1) -> Word:
    return Word([(letter, sign)])


def sigma(block: str, word: Word) -> int:
    """Signed count of letters tagged with the given block.

    Only the tag matters: a letter whose symbol happens to belong to the
    block as a set but carries a different tag does not count.
    """
    return sum(sign for letter, sign in word.letters if letter.block == block)


def cancellation_count(u: Word, v: Word) -> int:
    """Number of letter pairs that cancel when forming u * v.

    Equals the largest t such that the last t letters of u invert the first
    t letters of v in reverse order, i.e. (|u| + |v| - |u*v|) / 2.
    """
    t = 0
    limit = min(len(u), len(v))
    while t < limit:
        lu, su = u.letters[-1 - t]
        lv, sv = v.letters[t]
        if lu == lv and su == -sv:
            t += 1
        else:
            break
    return t


def format_letter(signed: SignedLetter) -> str:
    letter, sign = signed
    text = str(letter) if isinstance(letter, TaggedLetter) else f"b{letter}"
    return text if sign > 0 else text + "^-1"


def format_word(w: Word) -> str:
    if not w.letters:
        return "1"
    return " ".join(format_letter(s) for s in w.letters)
