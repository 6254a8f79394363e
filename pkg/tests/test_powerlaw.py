import io

import numpy as np
import pytest
from conftest import tx
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import sample_discrete_power_law

from emailnet.errors import FitImpossibleError, UsageError
from emailnet.network import build_network
from emailnet.powerlaw import (
    DegreeHistogram,
    degree_histogram,
    fit_power_law,
    fitted_cdf,
    log_bin,
    powerlaw_deviation,
    read_histogram_csv,
    write_histogram_csv,
)


@pytest.fixture(scope="module")
def pl_sample():
    return DegreeHistogram.from_degrees(sample_discrete_power_law(2.4, 100_000, seed=11))


class TestHistogram:
    def test_triangle(self):
        net = build_network([tx("a", "b"), tx("b", "c"), tx("c", "a")])
        h = degree_histogram(net, "undirected")
        assert h.rows() == [(2, 3, 1.0)]

    def test_directed_star(self):
        net = build_network([tx("hub", f"leaf{i}") for i in range(5)])
        assert degree_histogram(net, "out").rows() == [(0, 5, 5 / 6), (5, 1, 1 / 6)]
        assert degree_histogram(net, "in").rows() == [(0, 1, 1 / 6), (1, 5, 5 / 6)]

    def test_flavor_checks(self):
        net = build_network([tx("a", "b")])
        with pytest.raises(UsageError):
            degree_histogram(net.undirected(), "out")
        with pytest.raises(UsageError):
            degree_histogram(net, "total")

    @settings(max_examples=40)
    @given(st.lists(st.integers(0, 50), min_size=1, max_size=200))
    def test_counts_and_fractions(self, degrees):
        h = DegreeHistogram.from_degrees(degrees)
        assert h.total_vertices == len(degrees)
        assert h.fraction.sum() == pytest.approx(1.0)
        assert (np.diff(h.k) > 0).all()

    def test_csv_round_trip(self):
        h = DegreeHistogram.from_degrees([1, 1, 2, 3, 3, 3, 17, 0])
        buf = io.StringIO()
        write_histogram_csv(h, buf)
        buf.seek(0)
        back = read_histogram_csv(buf)
        assert back.rows() == h.rows()
        buf.seek(0)
        assert buf.readline().strip() == "k,count,fraction"


class TestFit:
    def test_recovers_exponent(self, pl_sample):
        fit = fit_power_law(pl_sample)
        assert 2.3 <= fit.gamma <= 2.5
        assert fit.ks_statistic < 0.02
        assert 0 < fit.tail_fraction <= 1

    def test_fixed_k_min_recovers_exponent(self, pl_sample):
        fit = fit_power_law(pl_sample, k_min=1)
        assert fit.gamma == pytest.approx(2.4, abs=0.02)
        assert fit.n_tail == pl_sample.total_vertices

    def test_constant_degree(self):
        with pytest.raises(FitImpossibleError):
            fit_power_law(DegreeHistogram.from_degrees([4] * 100))

    def test_zero_degrees_ignored(self):
        with pytest.raises(FitImpossibleError):
            fit_power_law(DegreeHistogram.from_degrees([0] * 50 + [3] * 10))

    def test_two_point_histogram(self):
        fit = fit_power_law(DegreeHistogram.from_counts({1: 90, 2: 10}))
        assert fit.k_min == 1 and fit.gamma > 1
        assert np.isfinite(fit.ks_statistic)

    def test_geometric_control_is_worse(self, pl_sample):
        rng = np.random.default_rng(5)
        geo = DegreeHistogram.from_degrees(rng.geometric(0.2, 100_000))
        assert powerlaw_deviation(geo) > 5 * powerlaw_deviation(pl_sample)

    def test_binomial_is_worse(self, pl_sample):
        rng = np.random.default_rng(6)
        binom = DegreeHistogram.from_degrees(rng.binomial(200, 0.05, 100_000))
        assert powerlaw_deviation(binom) > 0.1

    @pytest.mark.parametrize("factor", [2, 7, 1000])
    def test_scale_invariance(self, pl_sample, factor):
        a = fit_power_law(pl_sample)
        b = fit_power_law(pl_sample.scaled(factor))
        assert (b.k_min, b.n_tail) == (a.k_min, a.n_tail * factor)
        assert b.gamma == pytest.approx(a.gamma, abs=1e-6)
        assert b.ks_statistic == pytest.approx(a.ks_statistic, abs=1e-9)

    def test_consistency_with_sample_size(self):
        small = [fit_power_law(DegreeHistogram.from_degrees(sample_discrete_power_law(2.4, 1000, s)), k_min=1).gamma
                 for s in range(20)]
        big = fit_power_law(DegreeHistogram.from_degrees(sample_discrete_power_law(2.4, 100_000, 99)), k_min=1).gamma
        assert abs(big - 2.4) < abs(np.mean(np.abs(np.array(small) - 2.4)))

    def test_ks_zero_on_exact_distribution(self):
        k = np.arange(1, 200_001)
        p = np.diff(np.concatenate([[0.0], fitted_cdf(2.5, 1, k)]))
        counts = np.round(p * 1e12).astype(np.int64)
        h = DegreeHistogram("undirected", k[counts > 0], counts[counts > 0])
        fit = fit_power_law(h, k_min=1)
        assert fit.gamma == pytest.approx(2.5, abs=1e-3)
        assert fit.ks_statistic < 1e-3

    def test_logbin_cross_check(self, pl_sample):
        ls = fit_power_law(pl_sample, method="logbin_ls", k_min=1)
        mle = fit_power_law(pl_sample, k_min=1)
        assert ls.method == "logbin_ls"
        assert abs(ls.gamma - mle.gamma) < 0.3

    def test_unknown_method(self, pl_sample):
        with pytest.raises(UsageError):
            fit_power_law(pl_sample, method="eyeball")

    def test_fitted_cdf_bounds(self):
        assert fitted_cdf(2.0, 3, [2])[0] == pytest.approx(0.0, abs=1e-12)
        assert fitted_cdf(2.0, 3, [10**9])[0] == pytest.approx(1.0, abs=1e-6)


class TestLogBin:
    def test_single_degree_per_bin(self):
        h = DegreeHistogram.from_counts({1: 6, 2: 3, 4: 1})
        bins = log_bin(h, bins_per_decade=10)
        assert bins[0] == (1.0, 0.6)
        assert bins[1] == (2.0, 0.3)
        # ten bins per decade put 4 and 5 in the same bin
        assert bins[-1] == (pytest.approx(np.sqrt(20)), 0.05)

    def test_wide_bin_averages(self):
        h = DegreeHistogram.from_counts({1: 5, 3: 5})
        bins = log_bin(h, bins_per_decade=1)
        # bin [1, 9] holds both degrees: mean fraction per integer is 1/9
        assert bins == [(3.0, pytest.approx(1 / 9))]

    def test_bins_positive_and_ordered(self, pl_sample):
        bins = log_bin(pl_sample, 5)
        assert all(f > 0 for _, f in bins)
        centers = [c for c, _ in bins]
        assert centers == sorted(centers)

    def test_bad_resolution(self, pl_sample):
        with pytest.raises(UsageError):
            log_bin(pl_sample, 0)
