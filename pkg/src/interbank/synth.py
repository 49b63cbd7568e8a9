"""Synthetic directed scale-free exposure networks.

Degrees are drawn from a zero-inflated discrete power law (a point mass at
zero for inactive banks plus ``P(k) ~ k^-gamma`` on ``1..k_max``), the in- and
out-stub totals are equalised, and stubs are wired with a directed
configuration model.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import logging
import math
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .graph import InterbankNetwork

logger = logging.getLogger(__name__)

# Calibration targets: 767 banks, mean degree 1.41, tail exponents 1.92 (in) / 2.64 (out).
CALIBRATED_N = 767
CALIBRATED_GAMMA_IN = 1.92
CALIBRATED_GAMMA_OUT = 2.64
CALIBRATED_MEAN_DEGREE = 1.41


class InfeasibleConfigError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = CALIBRATED_N
    gamma_in: float = CALIBRATED_GAMMA_IN
    gamma_out: float = CALIBRATED_GAMMA_OUT
    mean_degree: float = CALIBRATED_MEAN_DEGREE
    k_max: int | None = None  # None means n - 1
    weight_scale: float = 1_000_000.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise InfeasibleConfigError(f"n must be >= 2, got {self.n}")
        for name in ("gamma_in", "gamma_out"):
            if not getattr(self, name) > 1:
                raise InfeasibleConfigError(f"{name} must be > 1, got {getattr(self, name)}")
        if not self.mean_degree > 0:
            raise InfeasibleConfigError(f"mean_degree must be > 0, got {self.mean_degree}")
        if not 1 <= self.cap <= self.n - 1:
            raise InfeasibleConfigError(f"k_max must lie in [1, {self.n - 1}], got {self.k_max}")
        if not self.weight_scale > 0:
            raise InfeasibleConfigError(f"weight_scale must be > 0, got {self.weight_scale}")
        if not 0 <= self.seed < 2**64:
            raise InfeasibleConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def cap(self) -> int:
        return self.n - 1 if self.k_max is None else self.k_max

    def for_day(self, day: int) -> "GeneratorConfig":
        return dataclasses.replace(self, seed=derive_seed(self.seed, day))


def derive_seed(seed: int, index: int) -> int:
    """Fixed splitting scheme: the ``index``-th 64-bit child of ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def positive_mean(gamma: float, k_max: int) -> float:
    """Mean of the power law ``k^-gamma`` restricted to ``1..k_max``."""
    k = np.arange(1, k_max + 1, dtype=float)
    w = k**-gamma
    return float((k * w).sum() / w.sum())


def zero_inflated_pmf(gamma: float, mean_degree: float, k_max: int) -> np.ndarray:
    """Probabilities for degrees ``0..k_max``.

    The mass at zero is whatever makes the overall mean equal ``mean_degree``;
    the mean is linear in that mass, so it is solved in closed form.
    """
    m_pos = positive_mean(gamma, k_max)
    if not 0 < mean_degree <= m_pos:
        raise InfeasibleConfigError(
            f"mean_degree {mean_degree} unreachable with gamma={gamma}, k_max={k_max}: "
            f"feasible range is (0, {m_pos:.6g}]"
        )
    p_zero = 1.0 - mean_degree / m_pos
    k = np.arange(1, k_max + 1, dtype=float)
    w = k**-gamma
    pmf = np.empty(k_max + 1)
    pmf[0] = p_zero
    pmf[1:] = (1.0 - p_zero) * w / w.sum()
    return pmf


def _draw(pmf: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def sample_discrete_power_law(
    rng: np.random.Generator, gamma: float, k_min: int, k_max: int, size: int
) -> np.ndarray:
    """Exact draws from ``P(k) ~ k^-gamma`` on ``k_min..k_max``."""
    k = np.arange(k_min, k_max + 1, dtype=float)
    pmf = k**-gamma
    return _draw(pmf / pmf.sum(), size, rng) + k_min


def _adjust_total(seq: np.ndarray, total: int, cap: int, rng: np.random.Generator) -> np.ndarray:
    """Move ``seq.sum()`` to ``total`` by removing or cloning uniformly chosen stubs.

    Picking stubs rather than banks scales every degree by roughly the same
    factor, so the shape of the tail survives the correction. An all-zero
    sequence grows by single stubs on uniformly chosen banks instead.
    """
    seq = seq.copy()
    diff = int(seq.sum()) - total
    if diff > 0:
        owners = np.repeat(np.arange(len(seq)), seq)
        drop = rng.choice(len(owners), size=diff, replace=False)
        np.subtract.at(seq, owners[drop], 1)
        return seq
    while diff < 0:
        room = seq < cap
        if not room.any():
            raise InfeasibleConfigError("degree cap too small for the requested number of links")
        owners = np.repeat(np.arange(len(seq)), np.where(room, seq, 0))
        v = owners[rng.integers(len(owners))] if len(owners) else rng.choice(np.flatnonzero(room))
        seq[v] += 1
        diff += 1
    return seq


def target_links(config: GeneratorConfig) -> int:
    return int(round(config.n * config.mean_degree))


def sample_degree_sequences(config: GeneratorConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """In- and out-degree sequences with equal totals of ``round(n * mean_degree)``."""
    cap = config.cap
    pmf_in = zero_inflated_pmf(config.gamma_in, config.mean_degree, cap)
    pmf_out = zero_inflated_pmf(config.gamma_out, config.mean_degree, cap)
    total = target_links(config)
    if total > config.n * cap:
        raise InfeasibleConfigError(f"{total} links do not fit {config.n} banks with k_max={cap}")
    k_in = _adjust_total(_draw(pmf_in, config.n, rng), total, cap, rng)
    k_out = _adjust_total(_draw(pmf_out, config.n, rng), total, cap, rng)
    return k_in, k_out


@dataclass(frozen=True)
class MatchReport:
    stubs: int
    rewired: int
    deleted: int


def match_stubs(
    out_seq,
    in_seq,
    rng: np.random.Generator,
    max_tries: int = 200,
    max_deleted_fraction: float = 0.5,
) -> tuple[list[tuple[int, int]], MatchReport]:
    """Directed configuration model without self-loops or repeated pairs.

    Offending pairs are repaired by swapping lenders with a random other
    pair; after ``max_tries`` failed swaps the pair's two stubs are dropped.
    """
    out_seq = np.asarray(out_seq, dtype=np.int64)
    in_seq = np.asarray(in_seq, dtype=np.int64)
    if out_seq.sum() != in_seq.sum():
        raise ValueError(f"stub totals differ: out={out_seq.sum()} in={in_seq.sum()}")
    src = np.repeat(np.arange(len(out_seq)), out_seq)
    dst = rng.permutation(np.repeat(np.arange(len(in_seq)), in_seq))
    src, dst = src.tolist(), dst.tolist()
    m = len(src)

    seen: Counter[tuple[int, int]] = Counter()
    bad = []
    for e in range(m):
        pair = (src[e], dst[e])
        if pair[0] == pair[1] or seen[pair]:
            bad.append(e)
        seen[pair] += 1

    rewired = 0
    dead = set()
    for e in bad:
        if src[e] != dst[e] and seen[src[e], dst[e]] == 1:
            continue  # already repaired as some earlier swap partner
        for _ in range(max_tries):
            c = int(rng.integers(m))
            if c == e or c in dead:
                continue
            a, b = (src[e], dst[c]), (src[c], dst[e])
            if a[0] == a[1] or b[0] == b[1] or seen[a] or seen[b] or a == b:
                continue
            seen[src[e], dst[e]] -= 1
            seen[src[c], dst[c]] -= 1
            dst[e], dst[c] = dst[c], dst[e]
            seen[a] += 1
            seen[b] += 1
            rewired += 1
            break
        else:
            pair = (src[e], dst[e])
            seen[pair] -= 1
            dead.add(e)

    if m and len(dead) > max_deleted_fraction * m:
        raise GenerationError(
            f"could not place {len(dead)} of {m} stub pairs without self-loops or duplicates "
            f"after {max_tries} swaps each ({len(bad)} initial collisions)"
        )
    if dead:
        logger.info("dropped %d of %d stub pairs that could not be rewired", len(dead), m)
    edges = [(src[e], dst[e]) for e in range(m) if e not in dead]
    return edges, MatchReport(m, rewired, len(dead))


def bank_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"B{i:0{width}d}" for i in range(n)]


def _weights(rng: np.random.Generator, scale: float, size: int) -> list[Decimal]:
    raw = rng.lognormal(mean=math.log(scale), sigma=1.0, size=size)
    return [Decimal(max(1, int(round(x)))) for x in raw]


def generate_with_report(config: GeneratorConfig, date=None) -> tuple[InterbankNetwork, dict]:
    rng = np.random.default_rng(config.seed)
    k_in, k_out = sample_degree_sequences(config, rng)
    pairs, report = match_stubs(k_out, k_in, rng)
    ids = bank_ids(config.n)
    weights = _weights(rng, config.weight_scale, len(pairs))
    edges = {(ids[i], ids[j]): w for (i, j), w in zip(pairs, weights)}
    net = InterbankNetwork(ids, edges, date)
    info = {
        "seed": config.seed,
        "k_max": config.cap,
        "p_zero_in": float(zero_inflated_pmf(config.gamma_in, config.mean_degree, config.cap)[0]),
        "p_zero_out": float(zero_inflated_pmf(config.gamma_out, config.mean_degree, config.cap)[0]),
        "stubs": report.stubs,
        "rewired": report.rewired,
        "deleted": report.deleted,
    }
    return net, info


def generate_network(config: GeneratorConfig, date=None) -> InterbankNetwork:
    """Random exposure network for ``config``; bit-identical for a fixed seed."""
    return generate_with_report(config, date)[0]


def generate_days(
    config: GeneratorConfig, days: int, start: dt.date = dt.date(2011, 8, 1)
) -> list[InterbankNetwork]:
    """``days`` independent networks on consecutive dates, seeded by :func:`derive_seed`."""
    return [
        generate_network(config.for_day(d), start + dt.timedelta(days=d)) for d in range(days)
    ]
