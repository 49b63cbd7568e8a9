"""Directed, weighted interbank exposure networks.

Edges point from borrower to lender: an edge ``(i, j)`` with weight ``w_ij``
means bank ``i`` owes bank ``j`` the amount ``w_ij`` on that day. A bank's
in-degree therefore counts its borrowers (credit exposures) and its
out-degree counts its creditors.
"""
from __future__ import annotations

import datetime as dt
import decimal
from dataclasses import dataclass
from decimal import Decimal
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Union

BankId = str
Money = Decimal
DateLabel = Union[dt.date, str, None]

# Exposure sums must never round; blow up instead.
_EXACT = decimal.Context(prec=80, traps=[decimal.Inexact, decimal.InvalidOperation])


def to_money(value) -> Decimal:
    """Coerce ``value`` to an exact :class:`~decimal.Decimal` amount.

    Floats go through their shortest ``repr`` so ``0.1`` becomes
    ``Decimal('0.1')`` rather than its binary expansion.
    """
    if isinstance(value, Decimal):
        out = value
    elif isinstance(value, bool):
        raise TypeError("boolean is not a monetary amount")
    elif isinstance(value, int):
        out = Decimal(value)
    elif isinstance(value, float):
        out = Decimal(repr(value))
    elif isinstance(value, str):
        out = Decimal(value)
    else:
        raise TypeError(f"cannot interpret {value!r} as money")
    if not out.is_finite():
        raise ValueError(f"amount must be finite, got {value!r}")
    return out


def money_sum(values: Iterable[Decimal]) -> Decimal:
    total = Decimal(0)
    for v in values:
        total = _EXACT.add(total, v)
    return total


@dataclass(frozen=True)
class Transaction:
    """One uncollateralized overnight loan: ``borrower`` owes ``lender``."""

    date: dt.date
    borrower: BankId
    lender: BankId
    amount: Decimal

    def __post_init__(self):
        object.__setattr__(self, "amount", to_money(self.amount))
        if self.amount <= 0:
            raise ValueError(f"amount must be positive, got {self.amount}")
        if self.borrower == self.lender:
            raise ValueError(f"borrower and lender are the same bank ({self.borrower!r})")


@dataclass(frozen=True)
class DegreeRecord:
    bank: BankId
    k_in: int
    k_out: int
    s_in: Decimal
    s_out: Decimal


class InterbankNetwork:
    """Immutable directed weighted graph over an explicit bank universe.

    The universe may contain banks without any edges (inactive on the day);
    they still count towards ``n`` in every metric.
    """

    def __init__(
        self,
        universe: Iterable[BankId],
        edges: Mapping[tuple[BankId, BankId], object] | None = None,
        date: DateLabel = None,
    ):
        uni = tuple(sorted(set(universe)))
        members = set(uni)
        clean: dict[tuple[BankId, BankId], Decimal] = {}
        for (i, j), w in (edges or {}).items():
            if i not in members or j not in members:
                missing = i if i not in members else j
                raise ValueError(f"edge {i!r}->{j!r}: bank {missing!r} is not in the universe")
            if i == j:
                raise ValueError(f"self-loop on bank {i!r}")
            w = to_money(w)
            if w <= 0:
                raise ValueError(f"edge {i!r}->{j!r} has non-positive weight {w}")
            clean[(i, j)] = w
        self._universe = uni
        self._edges = dict(sorted(clean.items()))
        self._date = date

    @property
    def universe(self) -> tuple[BankId, ...]:
        return self._universe

    @property
    def edges(self) -> Mapping[tuple[BankId, BankId], Decimal]:
        return MappingProxyType(self._edges)

    @property
    def date(self) -> DateLabel:
        return self._date

    @property
    def n(self) -> int:
        return len(self._universe)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def __eq__(self, other):
        if not isinstance(other, InterbankNetwork):
            return NotImplemented
        return (
            self._universe == other._universe
            and self._edges == other._edges
            and self._date == other._date
        )

    def __hash__(self):
        return hash((self._universe, tuple(self._edges.items()), self._date))

    def __repr__(self):
        return f"InterbankNetwork(date={self._date!r}, n={self.n}, edges={self.n_edges})"

    # integer-indexed views, built lazily and shared by metrics/contagion

    @cached_property
    def index(self) -> dict[BankId, int]:
        return {b: i for i, b in enumerate(self._universe)}

    @cached_property
    def out_adj(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self._universe]
        idx = self.index
        for i, j in self._edges:
            adj[idx[i]].append(idx[j])
        return tuple(tuple(a) for a in adj)

    @cached_property
    def in_adj(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self._universe]
        idx = self.index
        for i, j in self._edges:
            adj[idx[j]].append(idx[i])
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def k_in(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.in_adj)

    @cached_property
    def k_out(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.out_adj)

    @cached_property
    def s_in(self) -> tuple[Decimal, ...]:
        acc = [Decimal(0)] * self.n
        idx = self.index
        for (_, j), w in self._edges.items():
            acc[idx[j]] = _EXACT.add(acc[idx[j]], w)
        return tuple(acc)

    @cached_property
    def s_out(self) -> tuple[Decimal, ...]:
        acc = [Decimal(0)] * self.n
        idx = self.index
        for (i, _), w in self._edges.items():
            acc[idx[i]] = _EXACT.add(acc[idx[i]], w)
        return tuple(acc)

    def total_exposure(self) -> Decimal:
        return money_sum(self._edges.values())

    def _require(self, bank: BankId) -> int:
        try:
            return self.index[bank]
        except KeyError:
            raise KeyError(f"unknown bank {bank!r}") from None

    def out_neighbors(self, bank: BankId) -> frozenset[BankId]:
        """Creditors of ``bank``: every ``j`` with ``w[bank, j] > 0``."""
        u = self._universe
        return frozenset(u[j] for j in self.out_adj[self._require(bank)])

    def in_neighbors(self, bank: BankId) -> frozenset[BankId]:
        """Borrowers of ``bank``: every ``i`` with ``w[i, bank] > 0``."""
        u = self._universe
        return frozenset(u[i] for i in self.in_adj[self._require(bank)])

    def degrees(self) -> list[DegreeRecord]:
        return [
            DegreeRecord(b, self.k_in[i], self.k_out[i], self.s_in[i], self.s_out[i])
            for i, b in enumerate(self._universe)
        ]

    def with_weights(self, weights: Mapping[tuple[BankId, BankId], object]) -> "InterbankNetwork":
        """Same topology and universe, new edge weights (keys must match exactly)."""
        if set(weights) != set(self._edges):
            raise ValueError("replacement weights must cover exactly the existing edges")
        return InterbankNetwork(self._universe, weights, self._date)


def build_daily_network(
    transactions: Iterable[Transaction],
    date: dt.date,
    universe: Iterable[BankId],
) -> InterbankNetwork:
    """Aggregate one day's transactions into an exposure network.

    Parallel loans between the same ordered pair are summed exactly.
    Banks in ``universe`` without transactions are kept as isolated nodes.
    """
    members = set(universe)
    acc: dict[tuple[BankId, BankId], Decimal] = {}
    for n, t in enumerate(transactions):
        if t.date != date:
            raise ValueError(f"transaction #{n} is dated {t.date}, expected {date}")
        for role, bank in (("borrower", t.borrower), ("lender", t.lender)):
            if bank not in members:
                raise ValueError(f"transaction #{n} on {t.date}: {role} {bank!r} is not in the universe")
        if to_money(t.amount) <= 0:
            raise ValueError(f"transaction #{n} on {t.date}: non-positive amount {t.amount}")
        key = (t.borrower, t.lender)
        acc[key] = _EXACT.add(acc.get(key, Decimal(0)), to_money(t.amount))
    return InterbankNetwork(members, acc, date)


def degrees(network: InterbankNetwork) -> list[DegreeRecord]:
    return network.degrees()


def out_neighbors(network: InterbankNetwork, bank: BankId) -> frozenset[BankId]:
    return network.out_neighbors(bank)


def in_neighbors(network: InterbankNetwork, bank: BankId) -> frozenset[BankId]:
    return network.in_neighbors(bank)
