"""Discrete factor algebra: non-negative tables over integer-identified variables.

A factor's scope is a strictly ascending tuple of variable ids. Values live in
an ndarray with one axis per scope variable (in scope order), so the flat
C-order view has the *last* scope variable varying fastest. That layout is the
canonical serialization used everywhere in this package.

Because all scopes are kept sorted, two factors can be broadcast against each
other with plain reshapes (no transposes), which keeps multiply/divide exact
and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

Instantiation = dict[int, int]
"""Assignment of state indices to variable ids."""


class FactorError(ValueError):
    """Raised on structural misuse of factors (scope or cardinality)."""


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with a dense non-negative id."""

    id: int
    name: str
    cardinality: int
    state_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.id < 0:
            raise FactorError(f"variable id must be >= 0, got {self.id}")
        if self.cardinality < 1:
            raise FactorError(f"variable {self.name!r} needs cardinality >= 1")
        if len(self.state_names) != self.cardinality:
            raise FactorError(
                f"variable {self.name!r}: {len(self.state_names)} state names "
                f"for cardinality {self.cardinality}"
            )
        if len(set(self.state_names)) != self.cardinality:
            raise FactorError(f"variable {self.name!r}: duplicate state names")

    def state_index(self, state: str) -> int:
        try:
            return self.state_names.index(state)
        except ValueError:
            raise FactorError(
                f"variable {self.name!r} has no state {state!r}"
            ) from None


@dataclass(frozen=True)
class MaximizerTable:
    """Argmax bookkeeping produced by :meth:`Factor.max_out`.

    For every cell of the reduced factor, records one maximizing joint state
    of the eliminated variables: the lexicographically smallest one, reading
    eliminated variables in ascending id order (smallest state index first,
    then the next variable id, and so on).
    """

    kept_vids: tuple[int, ...]
    kept_cards: tuple[int, ...]
    elim_vids: tuple[int, ...]
    elim_cards: tuple[int, ...]
    flat_argmax: np.ndarray  # shape kept_cards; flat index over the elim grid

    @property
    def empty(self) -> bool:
        return not self.elim_vids

    def lookup(self, fixed: Mapping[int, int]) -> Instantiation:
        """Return the recorded argmax of the eliminated variables for the
        reduced-scope cell selected by ``fixed`` (must cover ``kept_vids``)."""
        if not self.elim_vids:
            return {}
        try:
            idx = tuple(fixed[v] for v in self.kept_vids)
        except KeyError as missing:
            raise FactorError(f"maximizer lookup missing variable {missing}") from None
        flat = int(self.flat_argmax[idx])
        states = np.unravel_index(flat, self.elim_cards) if self.elim_cards else ()
        return {v: int(s) for v, s in zip(self.elim_vids, states)}


class Factor:
    """Immutable non-negative table over a sorted scope of variable ids."""

    __slots__ = ("vids", "cards", "values")

    def __init__(self, vids: Iterable[int], cards: Iterable[int], values) -> None:
        vids = tuple(int(v) for v in vids)
        cards = tuple(int(c) for c in cards)
        if list(vids) != sorted(set(vids)):
            raise FactorError(f"scope must be strictly ascending ids, got {vids}")
        if len(cards) != len(vids) or any(c < 1 for c in cards):
            raise FactorError("one cardinality >= 1 required per scope variable")
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != math.prod(cards):
            raise FactorError(
                f"table has {arr.size} entries, scope {vids} needs {math.prod(cards)}"
            )
        arr = arr.reshape(cards).copy()
        if not np.all(np.isfinite(arr)):
            raise FactorError("factor values must be finite")
        if np.any(arr < 0):
            raise FactorError("factor values must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "vids", vids)
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):  # pragma: no cover - defensive
        raise AttributeError("Factor is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def scalar(cls, value: float) -> "Factor":
        return cls((), (), np.asarray(value, dtype=np.float64))

    @classmethod
    def ones(cls, vids: Iterable[int], cards: Iterable[int]) -> "Factor":
        cards = tuple(cards)
        return cls(vids, cards, np.ones(cards))

    @classmethod
    def indicator(cls, vid: int, card: int, state: int) -> "Factor":
        """The 0/1 evidence factor that is 1 exactly at ``state``."""
        if not 0 <= state < card:
            raise FactorError(f"state {state} out of range for cardinality {card}")
        table = np.zeros(card)
        table[state] = 1.0
        return cls((vid,), (card,), table)

    # -- basic access ---------------------------------------------------------

    @property
    def flat(self) -> np.ndarray:
        """Canonical flat view: last scope variable varies fastest."""
        return self.values.reshape(-1)

    def card_of(self, vid: int) -> int:
        try:
            return self.cards[self.vids.index(vid)]
        except ValueError:
            raise FactorError(f"variable {vid} not in scope {self.vids}") from None

    def __getitem__(self, inst: Mapping[int, int]) -> float:
        try:
            idx = tuple(inst[v] for v in self.vids)
        except KeyError as missing:
            raise FactorError(f"instantiation missing variable {missing}") from None
        return float(self.values[idx])

    def total(self) -> float:
        return float(self.values.sum())

    def max_value(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def __repr__(self) -> str:
        return f"Factor(scope={self.vids}, cards={self.cards})"

    # -- comparisons ----------------------------------------------------------

    def same_scope(self, other: "Factor") -> bool:
        return self.vids == other.vids and self.cards == other.cards

    def equal_table(self, other: "Factor") -> bool:
        return self.same_scope(other) and bool(np.array_equal(self.values, other.values))

    def allclose(self, other: "Factor", rtol: float = 1e-9, atol: float = 0.0) -> bool:
        return self.same_scope(other) and bool(
            np.allclose(self.values, other.values, rtol=rtol, atol=atol)
        )

    # -- operations -----------------------------------------------------------

    def _expand(self, union_vids: tuple[int, ...], union_cards: tuple[int, ...]) -> np.ndarray:
        # Both scopes are ascending, so a reshape (size-1 axes for missing
        # variables) aligns the tables without any transpose.
        shape = []
        mine = dict(zip(self.vids, self.cards))
        for vid, card in zip(union_vids, union_cards):
            shape.append(mine.get(vid, 1) if vid in mine else 1)
        return self.values.reshape(shape)

    def multiply(self, other: "Factor") -> "Factor":
        cards = dict(zip(self.vids, self.cards))
        for vid, card in zip(other.vids, other.cards):
            if cards.setdefault(vid, card) != card:
                raise FactorError(
                    f"variable {vid} has cardinality {cards[vid]} vs {card}"
                )
        union_vids = tuple(sorted(cards))
        union_cards = tuple(cards[v] for v in union_vids)
        out = self._expand(union_vids, union_cards) * other._expand(union_vids, union_cards)
        return Factor(union_vids, union_cards, np.broadcast_to(out, union_cards))

    def __mul__(self, other: "Factor") -> "Factor":
        return self.multiply(other)

    def sum_out(self, vids: Iterable[int]) -> "Factor":
        vids = set(vids)
        if not vids:
            return self
        missing = vids - set(self.vids)
        if missing:
            raise FactorError(f"cannot sum out {sorted(missing)}: not in scope {self.vids}")
        axes = tuple(i for i, v in enumerate(self.vids) if v in vids)
        kept = [(v, c) for v, c in zip(self.vids, self.cards) if v not in vids]
        out = self.values.sum(axis=axes)
        return Factor(
            tuple(v for v, _ in kept), tuple(c for _, c in kept), out
        )

    def max_out(self, vids: Iterable[int]) -> tuple["Factor", MaximizerTable]:
        vids = set(vids)
        if not vids:
            table = MaximizerTable(
                self.vids, self.cards, (), (), np.zeros(self.cards, dtype=np.int64)
            )
            return self, table
        missing = vids - set(self.vids)
        if missing:
            raise FactorError(f"cannot max out {sorted(missing)}: not in scope {self.vids}")
        elim_axes = tuple(i for i, v in enumerate(self.vids) if v in vids)
        kept_axes = tuple(i for i, v in enumerate(self.vids) if v not in vids)
        elim_vids = tuple(self.vids[i] for i in elim_axes)
        elim_cards = tuple(self.cards[i] for i in elim_axes)
        kept_vids = tuple(self.vids[i] for i in kept_axes)
        kept_cards = tuple(self.cards[i] for i in kept_axes)
        # Move the eliminated axes (ascending id) to the front and flatten
        # them: the first argmax in C order is then the lexicographically
        # smallest maximizing joint state.
        moved = self.values.transpose(elim_axes + kept_axes)
        flat = moved.reshape((math.prod(elim_cards),) + kept_cards)
        arg = flat.argmax(axis=0)
        best = np.take_along_axis(flat, arg[np.newaxis, ...], axis=0)[0]
        table = MaximizerTable(kept_vids, kept_cards, elim_vids, elim_cards, arg)
        return Factor(kept_vids, kept_cards, best), table

    def divide(self, other: "Factor") -> "Factor":
        """Pointwise quotient over equal scopes with the 0/0 = 0 convention."""
        if not self.same_scope(other):
            raise FactorError(
                f"division needs equal scopes, got {self.vids} vs {other.vids}"
            )
        num, den = self.values, other.values
        bad = (den == 0) & (num > 0)
        if np.any(bad):
            raise FactorError(
                "division undefined: positive numerator over zero denominator"
            )
        out = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return Factor(self.vids, self.cards, out)

    def reduce(self, evidence: Mapping[int, int]) -> "Factor":
        """Zero every entry inconsistent with ``evidence``; scope unchanged."""
        relevant = [(v, evidence[v]) for v in self.vids if v in evidence]
        if not relevant:
            return self
        out = self.values
        for vid, state in relevant:
            axis = self.vids.index(vid)
            card = self.cards[axis]
            if not 0 <= state < card:
                raise FactorError(f"state {state} out of range for variable {vid}")
            mask = np.zeros(card)
            mask[state] = 1.0
            shape = [1] * len(self.cards)
            shape[axis] = card
            out = out * mask.reshape(shape)
        return Factor(self.vids, self.cards, out)

    def scale(self, c: float) -> "Factor":
        return Factor(self.vids, self.cards, self.values * c)


# Module-level aliases matching the operation vocabulary used elsewhere.

def multiply(f: Factor, g: Factor) -> Factor:
    return f.multiply(g)


def multiply_all(factors: Iterable[Factor]) -> Factor:
    result = Factor.scalar(1.0)
    for f in factors:
        result = result.multiply(f)
    return result


def sum_out(f: Factor, vids: Iterable[int]) -> Factor:
    return f.sum_out(vids)


def max_out(f: Factor, vids: Iterable[int]) -> tuple[Factor, MaximizerTable]:
    return f.max_out(vids)


def divide(f: Factor, g: Factor) -> Factor:
    return f.divide(g)


def reduce_factor(f: Factor, evidence: Mapping[int, int]) -> Factor:
    return f.reduce(evidence)
