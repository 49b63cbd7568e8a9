import numpy as np
import pytest

from interbank import metrics as M
from interbank.synth import (
    GenerationError,
    GeneratorConfig,
    InfeasibleConfigError,
    derive_seed,
    generate_days,
    generate_network,
    generate_with_report,
    match_stubs,
    positive_mean,
    sample_degree_sequences,
    sample_discrete_power_law,
    zero_inflated_pmf,
)


@pytest.mark.parametrize("gamma, mean", [(1.92, 1.41), (2.64, 1.41), (3.5, 0.2)])
def test_pmf_hits_mean_and_tail_shape(gamma, mean):
    pmf = zero_inflated_pmf(gamma, mean, 766)
    k = np.arange(767)
    assert pmf.sum() == pytest.approx(1.0)
    assert (k * pmf).sum() == pytest.approx(mean, rel=1e-9)
    assert pmf[10] / pmf[1] == pytest.approx(10.0**-gamma)


def test_pmf_zero_mass_values():
    # most banks are idle on the heavy-tailed lending side, few on the borrowing side
    assert zero_inflated_pmf(1.92, 1.41, 766)[0] == pytest.approx(0.7396, abs=1e-3)
    assert zero_inflated_pmf(2.64, 1.41, 766)[0] == pytest.approx(0.1571, abs=1e-3)


def test_infeasible_mean_reports_range():
    cap_mean = positive_mean(3.0, 10)
    with pytest.raises(InfeasibleConfigError, match="feasible range is \\(0, 1\\.294"):
        zero_inflated_pmf(3.0, cap_mean + 0.1, 10)


@pytest.mark.parametrize(
    "kwargs",
    [dict(n=1), dict(gamma_in=1.0), dict(gamma_out=0.5), dict(mean_degree=0), dict(n=10, k_max=10), dict(seed=-1)],
)
def test_config_validation(kwargs):
    with pytest.raises(InfeasibleConfigError):
        GeneratorConfig(**kwargs)


def test_exact_power_law_sampler_frequencies():
    rng = np.random.default_rng(0)
    x = sample_discrete_power_law(rng, 2.0, 3, 1000, 200_000)
    assert x.min() >= 3 and x.max() <= 1000
    k = np.arange(3, 1001, dtype=float)
    p = k**-2.0 / (k**-2.0).sum()
    for v in (3, 4, 5, 10):
        assert np.mean(x == v) == pytest.approx(p[v - 3], rel=0.03)


def test_sequences_balance_to_target():
    cfg = GeneratorConfig(seed=7)
    k_in, k_out = sample_degree_sequences(cfg, np.random.default_rng(cfg.seed))
    assert len(k_in) == len(k_out) == 767
    assert k_in.sum() == k_out.sum() == round(767 * 1.41)
    assert k_in.min() >= 0 and k_in.max() <= 766


def test_sequences_are_deterministic():
    cfg = GeneratorConfig(seed=123)
    a = sample_degree_sequences(cfg, np.random.default_rng(cfg.seed))
    b = sample_degree_sequences(cfg, np.random.default_rng(cfg.seed))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_tiny_mean_is_degenerate_but_valid():
    cfg = GeneratorConfig(n=2, mean_degree=0.001, k_max=1)
    k_in, k_out = sample_degree_sequences(cfg, np.random.default_rng(0))
    assert k_in.sum() == k_out.sum() <= 1
    assert generate_network(cfg).n_edges == 0


def test_two_bank_match_has_no_self_loop():
    edges, rep = match_stubs([1, 0], [0, 1], np.random.default_rng(0))
    assert edges == [(0, 1)] and rep.deleted == 0


def test_two_bank_self_loop_forced_is_an_error():
    with pytest.raises(GenerationError, match="could not place 1 of 1"):
        match_stubs([1, 0], [1, 0], np.random.default_rng(0))


def test_match_stubs_rejects_unbalanced():
    with pytest.raises(ValueError, match="differ"):
        match_stubs([2, 0], [0, 1], np.random.default_rng(0))


@pytest.mark.parametrize("seed", range(5))
def test_matching_is_simple_and_degree_preserving(seed):
    rng = np.random.default_rng(seed)
    out_seq = rng.integers(0, 6, size=40)
    in_seq = rng.permutation(out_seq)
    edges, rep = match_stubs(out_seq, in_seq, rng)
    assert all(i != j for i, j in edges)
    assert len(set(edges)) == len(edges)
    if rep.deleted == 0:
        assert np.array_equal(np.bincount([i for i, _ in edges], minlength=40), out_seq)
        assert np.array_equal(np.bincount([j for _, j in edges], minlength=40), in_seq)
    assert rep.stubs == out_seq.sum() == len(edges) + rep.deleted


def test_generated_network_invariants():
    net, info = generate_with_report(GeneratorConfig(seed=7))
    assert net.n == 767
    assert all(i != j and w > 0 for (i, j), w in net.edges.items())
    assert sum(net.k_in) == sum(net.k_out) == net.n_edges == info["stubs"] - info["deleted"]
    assert all(w == w.to_integral_value() for w in net.edges.values())


def test_generation_is_bit_identical():
    cfg = GeneratorConfig(seed=99)
    a, b = generate_network(cfg), generate_network(cfg)
    assert a == b
    assert list(a.edges.items()) == list(b.edges.items())
    assert generate_network(GeneratorConfig(seed=100)) != a


def test_derived_seeds():
    assert derive_seed(7, 0) == derive_seed(7, 0)
    assert len({derive_seed(7, d) for d in range(50)}) == 50
    assert derive_seed(7, 0) != derive_seed(8, 0)


def test_days_have_consecutive_dates_and_distinct_topologies():
    nets = generate_days(GeneratorConfig(n=100, mean_degree=1.0, seed=1), 3)
    assert [n.date.day for n in nets] == [1, 2, 3]
    assert len({tuple(n.edges) for n in nets}) == 3


def test_weights_are_lognormal_around_scale():
    net = generate_network(GeneratorConfig(seed=3, weight_scale=1e6))
    logs = np.log([float(w) for w in net.edges.values()])
    assert np.median(logs) == pytest.approx(np.log(1e6), abs=0.15)
    assert np.std(logs) == pytest.approx(1.0, abs=0.1)


def test_density_near_target_over_seeds():
    nets = generate_days(GeneratorConfig(seed=7), 20)
    target = 2 * 1.41 / 766
    assert np.mean([M.link_probability(n) for n in nets]) == pytest.approx(target, rel=0.10)
