"""Barrier shapes, the exponential series bound, and finiteness verdicts."""

import math

import pytest
from hypothesis import given, strategies as st

from reflectedwalk import barrier
from reflectedwalk.errors import SpecParseError

from conftest import LN3

NEG_INF = float("-inf")


class TestEvaluate:
    def test_zero_barrier(self):
        b = barrier.ZeroBarrier()
        assert [barrier.evaluate(b, n) for n in range(4)] == [0.0, 0.0, 0.0, 0.0]

    def test_free_barrier(self):
        b = barrier.FreeBarrier()
        assert barrier.evaluate(b, 0) == 0.0
        assert barrier.evaluate(b, 1) == NEG_INF
        assert barrier.evaluate(b, 100) == NEG_INF

    def test_linear_barrier(self):
        b = barrier.LinearBarrier(1.5)
        assert barrier.evaluate(b, 0) == 0.0
        assert barrier.evaluate(b, 4) == pytest.approx(-6.0)

    def test_log_barrier(self):
        b = barrier.LogBarrier(2.0)
        assert barrier.evaluate(b, 0) == 0.0
        assert barrier.evaluate(b, 3) == pytest.approx(-2.0 * math.log(3.0))

    def test_table_barrier_with_slope_extension(self):
        b = barrier.TableBarrier((0.0, -1.0, -3.0), "slope")
        assert barrier.evaluate(b, 2) == -3.0
        assert barrier.evaluate(b, 5) == pytest.approx(-3.0 - 3 * 2.0)

    def test_table_barrier_neginf_extension(self):
        b = barrier.TableBarrier((0.0, -1.0), "neginf")
        assert barrier.evaluate(b, 1) == -1.0
        assert barrier.evaluate(b, 2) == NEG_INF

    @given(st.integers(0, 500))
    def test_all_barriers_nonpositive_and_anchored(self, n):
        for b in (barrier.ZeroBarrier(), barrier.FreeBarrier(),
                  barrier.LinearBarrier(0.7), barrier.LogBarrier(1.3),
                  barrier.TableBarrier((0.0, -2.0, -2.5), "slope")):
            assert barrier.evaluate(b, 0) == 0.0
            assert barrier.evaluate(b, n) <= 0.0


class TestValidation:
    def test_table_must_anchor_at_zero(self):
        with pytest.raises(ValueError):
            barrier.TableBarrier((-1.0, -2.0), "slope")

    def test_table_must_be_nonpositive(self):
        with pytest.raises(ValueError):
            barrier.TableBarrier((0.0, 1.0), "slope")

    def test_table_positive_extension_slope_rejected(self):
        with pytest.raises(ValueError):
            barrier.TableBarrier((0.0, -2.0, -1.0), "slope")

    def test_linear_alpha_positive(self):
        with pytest.raises(ValueError):
            barrier.LinearBarrier(0.0)


class TestFutureSup:
    def test_zero(self):
        assert barrier.future_sup(barrier.ZeroBarrier(), 3) == 0.0

    def test_free(self):
        assert barrier.future_sup(barrier.FreeBarrier(), 0) == NEG_INF

    def test_linear_is_next_value(self):
        b = barrier.LinearBarrier(2.0)
        assert barrier.future_sup(b, 3) == barrier.evaluate(b, 4)

    def test_log_is_next_value(self):
        b = barrier.LogBarrier(1.0)
        assert barrier.future_sup(b, 5) == barrier.evaluate(b, 6)

    def test_table_neginf_tail(self):
        b = barrier.TableBarrier((0.0, -1.0, -2.0), "neginf")
        assert barrier.future_sup(b, 1) == -2.0
        assert barrier.future_sup(b, 2) == NEG_INF


class TestSeriesBound:
    def test_free_is_one(self):
        assert barrier.series_bound(barrier.FreeBarrier(), LN3) == 1.0

    def test_zero_diverges(self):
        assert barrier.series_bound(barrier.ZeroBarrier(), LN3) == math.inf

    def test_linear_geometric_sum(self):
        # sum_n exp(-theta alpha n) = 1/(1 - exp(-theta alpha)); alpha=1,
        # theta=ln 3 gives 1/(1 - 1/3) = 1.5
        got = barrier.series_bound(barrier.LinearBarrier(1.0), LN3)
        assert got == pytest.approx(1.5, abs=1e-10)

    def test_log_matches_zeta(self):
        # sum_n exp(theta * (-rho ln n)) = 1 + sum_{n>=1} n^{-rho theta}
        # independent oracle: direct partial sum with tail integral bound
        rho, theta = 3.0, 1.0
        direct = 1.0 + sum(n ** (-rho * theta) for n in range(1, 200_000))
        got = barrier.series_bound(barrier.LogBarrier(rho), theta)
        assert got == pytest.approx(direct, abs=1e-5)

    def test_log_diverges_at_or_below_one(self):
        assert barrier.series_bound(barrier.LogBarrier(1.0), 1.0) == math.inf
        assert barrier.series_bound(barrier.LogBarrier(0.5), 1.0) == math.inf

    def test_table_slope_finite(self):
        b = barrier.TableBarrier((0.0, -1.0, -3.0), "slope")
        # head: e^0 + e^{-th} + e^{-3 th}; tail: geometric with ratio e^{-2 th}
        th = LN3
        head = 1.0 + math.exp(-th) + math.exp(-3 * th)
        tail = math.exp(-3 * th) * (math.exp(-2 * th) / (1 - math.exp(-2 * th)))
        got = barrier.series_bound(b, th)
        assert got == pytest.approx(head + tail, abs=1e-12)

    def test_monotone_in_theta(self):
        b = barrier.LinearBarrier(1.0)
        prev = math.inf
        for theta in (0.5, 1.0, 2.0, 4.0):
            cur = barrier.series_bound(b, theta)
            assert cur < prev
            prev = cur


class TestFiniteness:
    def test_zero_infinite(self):
        v = barrier.classify_finiteness(barrier.ZeroBarrier(), LN3)
        assert v.verdict == "infinite"

    def test_free_finite_with_unit_bound(self):
        v = barrier.classify_finiteness(barrier.FreeBarrier(), LN3)
        assert v.verdict == "finite"
        assert v.series_bound == 1.0

    def test_linear_finite(self):
        v = barrier.classify_finiteness(barrier.LinearBarrier(1.0), LN3)
        assert v.verdict == "finite"

    def test_log_split_on_rho_theta(self):
        assert barrier.classify_finiteness(barrier.LogBarrier(0.5), 1.0).verdict == "infinite"
        assert barrier.classify_finiteness(barrier.LogBarrier(2.0), 1.0).verdict == "finite"

    def test_log_boundary_is_unknown(self):
        assert barrier.classify_finiteness(barrier.LogBarrier(1.0), 1.0).verdict == "unknown"

    def test_table_flat_extension_infinite(self):
        b = barrier.TableBarrier((0.0, -1.0, -1.0), "slope")
        assert barrier.classify_finiteness(b, LN3).verdict == "infinite"

    def test_table_neginf_finite(self):
        b = barrier.TableBarrier((0.0, -1.0), "neginf")
        assert barrier.classify_finiteness(b, LN3).verdict == "finite"


class TestLatticeAlignment:
    def test_integer_barrier_on_unit_lattice(self):
        assert barrier.on_lattice(barrier.LinearBarrier(1.0), 1.0)
        assert barrier.on_lattice(barrier.TableBarrier((0.0, -2.0), "slope"), 1.0)

    def test_fractional_barrier_off_unit_lattice(self):
        assert not barrier.on_lattice(barrier.LinearBarrier(0.5), 1.0)

    def test_free_always_on_lattice(self):
        assert barrier.on_lattice(barrier.FreeBarrier(), 1.0)


class TestParsing:
    @pytest.mark.parametrize("spec,cls", [
        ("zero", barrier.ZeroBarrier),
        ("free", barrier.FreeBarrier),
        ("linear:alpha=2.5", barrier.LinearBarrier),
        ("log:rho=1.5", barrier.LogBarrier),
    ])
    def test_simple_specs(self, spec, cls):
        assert isinstance(barrier.parse_barrier(spec), cls)

    def test_roundtrip(self):
        for b in (barrier.ZeroBarrier(), barrier.LinearBarrier(0.25),
                  barrier.LogBarrier(2.0)):
            assert barrier.parse_barrier(barrier.format_barrier(b)) == b

    @pytest.mark.parametrize("bad", ["", "linear", "linear:alpha=-1",
                                     "log:rho=0", "mystery"])
    def test_bad_specs_rejected(self, bad):
        with pytest.raises(SpecParseError):
            barrier.parse_barrier(bad)

    def test_table_csv_roundtrip(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("# extension=slope\nn,g\n0,0\n1,-1\n2,-3\n")
        b = barrier.load_barrier_table(str(p))
        assert b.values == (0.0, -1.0, -3.0)
        assert b.extension == "slope"
        assert barrier.evaluate(b, 4) == pytest.approx(-7.0)

    def test_table_csv_neginf(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("# extension=neginf\nn,g\n0,0\n1,-2\n")
        b = barrier.load_barrier_table(str(p))
        assert barrier.evaluate(b, 2) == NEG_INF
