"""Structural statistics of interbank networks.

Ratios are accumulated as exact fractions and converted to ``float`` once at
the end, so results do not depend on summation order.
"""
from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, NamedTuple, Sequence, Union

import numpy as np

from .graph import InterbankNetwork

Direction = Literal["in", "out"]
Networks = Union[InterbankNetwork, Sequence[InterbankNetwork]]

Z2_DEFINITION = (
    "z2_dir = (1/N) * sum_v sum_{u in dir-neighbours(v)} k_dir(u), "
    "the mean number of length-2 directed walks per vertex"
)


def _as_list(networks: Networks) -> list[InterbankNetwork]:
    if isinstance(networks, InterbankNetwork):
        return [networks]
    return list(networks)


def _check_direction(direction: str) -> None:
    if direction not in ("in", "out"):
        raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")


def link_probability(network: InterbankNetwork) -> float:
    """``2K / (N(N-1))`` with ``K`` directed edges over ``N`` banks."""
    n = network.n
    if n < 2:
        raise ValueError(f"link probability needs at least 2 banks, got {n}")
    return float(Fraction(2 * network.n_edges, n * (n - 1)))


class Clustering(NamedTuple):
    c_in: float
    c_out: float
    n_in: int  # vertices with >= 2 in-neighbours (0 means c_in is undefined, reported as 0)
    n_out: int


def _local_clustering(nbrs: Sequence[int], linked) -> Fraction:
    z = len(nbrs)
    links = 0
    for a in range(z):
        u = nbrs[a]
        for b in range(a + 1, z):
            if linked(u, nbrs[b]):
                links += 1
    return Fraction(2 * links, z * (z - 1))


def clustering_coefficients(network: InterbankNetwork) -> Clustering:
    """Mean clustering over in-neighbour sets and over out-neighbour sets.

    Links among neighbours are counted on the undirected version of the
    graph. Vertices with fewer than two neighbours in the given direction
    are left out of the average.
    """
    und = [set(o) | set(i) for o, i in zip(network.out_adj, network.in_adj)]

    def linked(u, v):
        return v in und[u]

    result = []
    for adj in (network.in_adj, network.out_adj):
        total = Fraction(0)
        count = 0
        for nbrs in adj:
            if len(nbrs) >= 2:
                total += _local_clustering(nbrs, linked)
                count += 1
        result.append((float(total / count) if count else 0.0, count))
    (c_in, n_in), (c_out, n_out) = result
    return Clustering(c_in, c_out, n_in, n_out)


def degree_histogram(networks: Networks, direction: Direction) -> dict[int, int]:
    """Frequency of each degree value, pooled over ``networks`` (zeros included)."""
    _check_direction(direction)
    hist: Counter[int] = Counter()
    for net in _as_list(networks):
        hist.update(net.k_in if direction == "in" else net.k_out)
    return dict(sorted(hist.items()))


@dataclass(frozen=True)
class TailFit:
    gamma: float
    k_min: int
    n_tail: int
    sigma: float
    gamma_lsq: float | None  # minus the log-log slope of the empirical pmf; diagnostic only


def fit_tail_exponent(histogram: dict[int, int], k_min: int = 2, min_samples: int = 10) -> TailFit:
    """Discrete power-law exponent of the tail ``k >= k_min``.

    Uses the standard approximate discrete MLE

        gamma = 1 + n / sum_i ln(k_i / (k_min - 1/2))

    and additionally reports a least-squares slope of ``log P(k)`` against
    ``log k`` over the same tail.
    """
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    tail = {int(k): int(c) for k, c in histogram.items() if k >= k_min and c > 0}
    n = sum(tail.values())
    if n < min_samples:
        raise ValueError(f"only {n} samples with k >= {k_min}; need at least {min_samples}")
    if len(tail) < 2:
        raise ValueError(f"all {n} tail samples equal {next(iter(tail))}; likelihood is degenerate")
    shift = k_min - 0.5
    log_sum = math.fsum(c * math.log(k / shift) for k, c in tail.items())
    gamma = 1.0 + n / log_sum
    sigma = (gamma - 1.0) / math.sqrt(n)

    ks = np.array(sorted(tail), dtype=float)
    ps = np.array([tail[int(k)] for k in ks], dtype=float) / n
    slope = np.polyfit(np.log(ks), np.log(ps), 1)[0]
    return TailFit(gamma, k_min, n, sigma, float(-slope))


def mean_degree(network: InterbankNetwork) -> float:
    """``z1 = K / N``; identical for in- and out-degree."""
    if network.n < 1:
        raise ValueError("empty universe")
    return float(Fraction(network.n_edges, network.n))


def second_neighbor_count(network: InterbankNetwork, direction: Direction) -> float:
    """Mean number of length-2 walks per vertex following ``direction`` links.

    Summed over all vertices both directions count the same set of directed
    two-step walks, so the totals agree; the direction only changes which
    vertex each walk is credited to.
    """
    _check_direction(direction)
    adj = network.in_adj if direction == "in" else network.out_adj
    k = network.k_in if direction == "in" else network.k_out
    walks = sum(k[u] for nbrs in adj for u in nbrs)
    return float(Fraction(walks, network.n))


def giant_component_criterion(z1: float, z2: float) -> bool:
    if z1 == 0:
        raise ValueError("z1 must be positive")
    return z2 / z1 > 2


@dataclass(frozen=True)
class CorrelationCurve:
    target: Direction
    points: dict[int, tuple[float, int]]  # k1_out -> (mean neighbour degree, samples)


def degree_correlation_curve(networks: Networks, target: Direction) -> CorrelationCurve:
    """Mean ``target`` degree of creditors as a function of the debtor's out-degree.

    For every vertex with out-degree ``k1`` each out-neighbour contributes
    one sample of its in- or out-degree; samples are pooled over networks.
    """
    _check_direction(target)
    sums: Counter[int] = Counter()
    counts: Counter[int] = Counter()
    for net in _as_list(networks):
        k2 = net.k_in if target == "in" else net.k_out
        for nbrs in net.out_adj:
            if nbrs:
                k1 = len(nbrs)
                sums[k1] += sum(k2[u] for u in nbrs)
                counts[k1] += len(nbrs)
    points = {k: (float(Fraction(sums[k], counts[k])), counts[k]) for k in sorted(counts)}
    return CorrelationCurve(target, points)


DECOMPOSITION_ROWS = ("In", "Out", "OnlyIn", "OnlyOut")


def condition_label(threshold: int) -> str:
    return f"k>{threshold}"


@dataclass(frozen=True)
class DecompositionTable:
    """Per-day counts of banks by activity pattern, with mean and population sd."""

    conditions: tuple[str, ...]
    daily: dict[tuple[str, str], tuple[int, ...]]
    mean: dict[tuple[str, str], float] = field(init=False)
    std: dict[tuple[str, str], float] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", {k: statistics.fmean(v) for k, v in self.daily.items()})
        object.__setattr__(self, "std", {k: statistics.pstdev(v) for k, v in self.daily.items()})

    def rows(self):
        for row in DECOMPOSITION_ROWS:
            yield row, [(self.mean[row, c], self.std[row, c]) for c in self.conditions]


def _decomposition_counts(net: InterbankNetwork, thresholds: Sequence[int]) -> dict[tuple[str, str], int]:
    k_in, k_out = net.k_in, net.k_out
    cells = {}
    conds = [("k=0", lambda k: k == 0)] + [(condition_label(t), (lambda t: lambda k: k > t)(t)) for t in thresholds]
    for label, ok in conds:
        cells["In", label] = sum(1 for a in k_in if ok(a))
        cells["Out", label] = sum(1 for b in k_out if ok(b))
        cells["OnlyIn", label] = sum(1 for a, b in zip(k_in, k_out) if ok(a) and b == 0)
        cells["OnlyOut", label] = sum(1 for a, b in zip(k_in, k_out) if ok(b) and a == 0)
    return cells


def activity_decomposition(networks: Networks, thresholds: Sequence[int] = (0, 2, 10)) -> DecompositionTable:
    """Counts of In / Out / OnlyIn / OnlyOut banks under ``k=0`` and ``k>t`` conditions."""
    nets = _as_list(networks)
    if not nets:
        raise ValueError("activity decomposition needs at least one network")
    per_day = [_decomposition_counts(net, thresholds) for net in nets]
    conditions = ("k=0",) + tuple(condition_label(t) for t in thresholds)
    daily = {key: tuple(day[key] for day in per_day) for key in per_day[0]}
    return DecompositionTable(conditions, daily)


def weight_concentration(network: InterbankNetwork, direction: Direction, degree_threshold: int) -> float:
    """Share of total exposure held by banks whose ``direction`` degree exceeds the threshold.

    ``out`` measures debt held by heavy borrowers, ``in`` loans held by
    heavily diversified lenders.
    """
    _check_direction(direction)
    k = network.k_in if direction == "in" else network.k_out
    s = network.s_in if direction == "in" else network.s_out
    total = sum(s)
    if total == 0:
        raise ValueError("network has zero total exposure")
    part = sum(w for deg, w in zip(k, s) if deg > degree_threshold)
    return float(Fraction(part) / Fraction(total))


@dataclass(frozen=True)
class NetworkStats:
    n_total: int
    n_active: int
    n_pure_lenders: int
    n_pure_borrowers: int
    n_intermediaries: int
    p: float
    c_in: float
    c_out: float
    z1: float
    z2_in: float
    z2_out: float


def network_stats(network: InterbankNetwork) -> NetworkStats:
    k_in, k_out = network.k_in, network.k_out
    lenders = sum(1 for a, b in zip(k_in, k_out) if a > 0 and b == 0)
    borrowers = sum(1 for a, b in zip(k_in, k_out) if b > 0 and a == 0)
    both = sum(1 for a, b in zip(k_in, k_out) if a > 0 and b > 0)
    cl = clustering_coefficients(network)
    return NetworkStats(
        n_total=network.n,
        n_active=lenders + borrowers + both,
        n_pure_lenders=lenders,
        n_pure_borrowers=borrowers,
        n_intermediaries=both,
        p=link_probability(network),
        c_in=cl.c_in,
        c_out=cl.c_out,
        z1=mean_degree(network),
        z2_in=second_neighbor_count(network, "in"),
        z2_out=second_neighbor_count(network, "out"),
    )


def mean_stats(stats: Iterable[NetworkStats]) -> dict[str, float]:
    """Field-wise average over days."""
    stats = list(stats)
    if not stats:
        return {}
    names = NetworkStats.__dataclass_fields__
    return {name: statistics.fmean(getattr(s, name) for s in stats) for name in names}
