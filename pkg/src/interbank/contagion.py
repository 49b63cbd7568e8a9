"""Stylized balance sheets and default cascades on exposure networks.

Each bank holds interbank assets ``A_IB`` (its lending, ``s_in``), illiquid
assets ``A_M``, interbank liabilities ``L_IB`` (its borrowing, ``s_out``),
deposits ``D`` and capital ``K``. Claims are spread evenly over
counterparties, so when ``d`` of a bank's ``j`` borrowers have defaulted it
loses the fraction ``phi = d / j`` of ``A_IB`` and stays solvent only while

    (1 - phi) * A_IB + q * A_M - L_IB - D > 0.

All balance-sheet arithmetic is exact (``Fraction``): thresholds such as
``kappa / alpha = 1/5`` hit ``phi = 1/5`` exactly and must count as default.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Literal, Sequence

from .graph import BankId, InterbankNetwork

Anchor = Literal["assets", "max"]


def exact(x) -> Fraction:
    """Exact rational for ``x``; floats are read through their shortest repr."""
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite number: {x!r}")
        return Fraction(repr(x))
    if isinstance(x, (Rational, str)):
        return Fraction(x)
    return Fraction(str(x))


@dataclass(frozen=True)
class ContagionParams:
    """Model parameters.

    ``anchor`` picks the balance-sheet size ``B``: ``"assets"`` makes
    interbank lending exactly ``alpha * B`` (pure borrowers use their
    borrowing instead), which makes cascades depend on degrees only;
    ``"max"`` uses ``max(s_in, s_out) / alpha`` so deposits are never negative.
    """

    alpha: Fraction = Fraction(1, 5)
    kappa: Fraction = Fraction(1, 25)
    q: Fraction = Fraction(1)
    anchor: Anchor = "assets"

    def __post_init__(self):
        for name in ("alpha", "kappa", "q"):
            object.__setattr__(self, name, exact(getattr(self, name)))
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.kappa < 1:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.alpha + self.kappa > 1:
            raise ValueError(
                f"alpha + kappa = {float(self.alpha + self.kappa):g} exceeds 1; deposits would be negative"
            )
        if not 0 < self.q <= 1:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.anchor not in ("assets", "max"):
            raise ValueError(f"anchor must be 'assets' or 'max', got {self.anchor!r}")

    def with_kappa(self, kappa) -> "ContagionParams":
        return ContagionParams(self.alpha, kappa, self.q, self.anchor)

    def describe(self) -> dict:
        return {
            "alpha": str(float(self.alpha)),
            "kappa": str(float(self.kappa)),
            "q": str(float(self.q)),
            "anchor": self.anchor,
        }


@dataclass(frozen=True)
class BalanceSheet:
    bank: BankId
    a_ib: Fraction
    a_m: Fraction
    l_ib: Fraction
    deposits: Fraction
    capital: Fraction
    total: Fraction

    def surplus(self, phi, q) -> Fraction:
        return (1 - exact(phi)) * self.a_ib + exact(q) * self.a_m - self.l_ib - self.deposits


def _sheet(bank: BankId, s_in: Fraction, s_out: Fraction, params: ContagionParams) -> BalanceSheet:
    if params.anchor == "assets":
        base = s_in if s_in > 0 else s_out
    else:
        base = max(s_in, s_out)
    total = base / params.alpha
    capital = params.kappa * total
    return BalanceSheet(
        bank=bank,
        a_ib=s_in,
        a_m=total - s_in,
        l_ib=s_out,
        deposits=total - capital - s_out,
        capital=capital,
        total=total,
    )


def build_balance_sheets(network: InterbankNetwork, params: ContagionParams) -> list[BalanceSheet]:
    """One sheet per bank in universe order; isolated banks get an all-zero sheet."""
    return [
        _sheet(b, Fraction(si), Fraction(so), params)
        for b, si, so in zip(network.universe, network.s_in, network.s_out)
    ]


def is_insolvent(sheet: BalanceSheet, phi, q=1) -> bool:
    """True when the surplus after losing ``phi`` of interbank assets is not positive."""
    phi = exact(phi)
    if not 0 <= phi <= 1:
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    return sheet.surplus(phi, q) <= 0


@dataclass(frozen=True)
class CascadeResult:
    seed: BankId
    defaulted: frozenset[BankId]
    rounds: int

    @property
    def size(self) -> int:
        return len(self.defaulted)

    @property
    def size_inclusive(self) -> int:
        return len(self.defaulted) + 1


def default_thresholds(network: InterbankNetwork, sheets: Sequence[BalanceSheet], q) -> list[int | None]:
    """Smallest number of defaulted borrowers that makes each bank insolvent.

    ``None`` marks banks that survive losing every borrower (including all
    banks without borrowers). The surplus is linear in ``phi``, so the
    threshold is a ceiling rather than a search.
    """
    q = exact(q)
    out: list[int | None] = []
    for sheet, j in zip(sheets, network.k_in):
        if j == 0:
            out.append(None)
            continue
        base = sheet.surplus(0, q)
        d = max(0, math.ceil(j * base / sheet.a_ib))
        out.append(d if d <= j else None)
    return out


def _propagate(out_adj, thresholds, zero_hit: Sequence[int], seed: int) -> tuple[list[int], int]:
    n_hit: dict[int, int] = {}
    down = {seed}
    frontier = [seed]
    extra = zero_hit
    rounds = 0
    while True:
        touched = set(extra)
        extra = ()
        for v in frontier:
            for u in out_adj[v]:
                if u not in down:
                    n_hit[u] = n_hit.get(u, 0) + 1
                    touched.add(u)
        new = sorted(
            u for u in touched
            if u not in down and thresholds[u] is not None and n_hit.get(u, 0) >= thresholds[u]
        )
        if not new:
            break
        down.update(new)
        frontier = new
        rounds += 1
    down.discard(seed)
    return sorted(down), rounds


class _Runner:
    """Precomputed thresholds for repeated cascades on one (network, sheets) pair."""

    def __init__(self, network: InterbankNetwork, sheets: Sequence[BalanceSheet], q):
        if len(sheets) != network.n:
            raise ValueError(f"{len(sheets)} sheets for {network.n} banks")
        self.network = network
        self.thresholds = default_thresholds(network, sheets, q)
        self.zero_hit = tuple(i for i, t in enumerate(self.thresholds) if t == 0)

    def run(self, seed_idx: int) -> tuple[list[int], int]:
        return _propagate(self.network.out_adj, self.thresholds, self.zero_hit, seed_idx)

    def result(self, seed_idx: int) -> CascadeResult:
        idx, rounds = self.run(seed_idx)
        uni = self.network.universe
        return CascadeResult(uni[seed_idx], frozenset(uni[i] for i in idx), rounds)


def cascade(network: InterbankNetwork, sheets: Sequence[BalanceSheet], seed: BankId, q=1) -> CascadeResult:
    """Default ``seed`` and propagate losses in synchronous rounds.

    Each round every surviving bank with borrowers compares its loss fraction
    ``phi = d / j`` against its sheet; all banks that fail default together.
    The returned set excludes the seed.
    """
    if seed not in network.index:
        raise KeyError(f"unknown seed bank {seed!r}")
    return _Runner(network, sheets, q).result(network.index[seed])


def all_seed_clusters(network: InterbankNetwork, params: ContagionParams) -> list[CascadeResult]:
    runner = _Runner(network, build_balance_sheets(network, params), params.q)
    return [runner.result(i) for i in range(network.n)]


def cluster_sizes(network: InterbankNetwork, params: ContagionParams) -> list[int]:
    """Cluster size for every seed in universe order (cheaper than full results)."""
    runner = _Runner(network, build_balance_sheets(network, params), params.q)
    return [len(runner.run(i)[0]) for i in range(network.n)]


@dataclass(frozen=True)
class SweepPoint:
    kappa: Fraction
    histogram: dict[int, int]  # exclusive cluster size -> number of (seed, day) trials
    trials: int
    mean: float = field(init=False)

    def __post_init__(self):
        total = sum(size * c for size, c in self.histogram.items())
        object.__setattr__(self, "mean", float(Fraction(total, self.trials)) if self.trials else 0.0)

    @property
    def mean_inclusive(self) -> float:
        return self.mean + 1.0

    def probability(self) -> dict[int, float]:
        return {k: c / self.trials for k, c in sorted(self.histogram.items())}

    def tail_probability(self, size: int) -> float:
        """P(cluster > size)."""
        return sum(c for k, c in self.histogram.items() if k > size) / self.trials


@dataclass(frozen=True)
class SweepResult:
    points: dict[Fraction, SweepPoint]
    per_seed: dict[Fraction, list[list[int]]] | None = None  # kappa -> day -> sizes in universe order

    def curve(self) -> list[tuple[Fraction, float]]:
        return [(k, p.mean) for k, p in self.points.items()]


def _sizes_task(args) -> list[int]:
    network, params = args
    return cluster_sizes(network, params)


def buffer_sweep(
    networks: Iterable[InterbankNetwork],
    params: ContagionParams,
    kappa_grid: Iterable,
    workers: int = 1,
    keep_per_seed: bool = False,
) -> SweepResult:
    """Mean and distribution of cluster sizes over every (day, seed) for each buffer.

    Sheets are rebuilt per day and per ``kappa``. Work is split into
    independent (day, kappa) tasks and reduced in a fixed order, so the
    result does not depend on ``workers``.
    """
    nets = list(networks)
    if not nets:
        raise ValueError("no networks to sweep")
    grid = [exact(k) for k in kappa_grid]
    if not grid:
        raise ValueError("empty kappa grid")
    variants = [params.with_kappa(k) for k in grid]  # validates every kappa up front
    tasks = [(net, p) for p in variants for net in nets]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            sizes = list(pool.map(_sizes_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        sizes = [_sizes_task(t) for t in tasks]

    points: dict[Fraction, SweepPoint] = {}
    per_seed: dict[Fraction, list[list[int]]] = {}
    for g, kappa in enumerate(grid):
        days = sizes[g * len(nets):(g + 1) * len(nets)]
        hist = Counter(s for day in days for s in day)
        points[kappa] = SweepPoint(kappa, dict(sorted(hist.items())), sum(len(d) for d in days))
        per_seed[kappa] = days
    return SweepResult(points, per_seed if keep_per_seed else None)
