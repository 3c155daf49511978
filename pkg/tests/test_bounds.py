import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlinsrm import ansatz as ans
from qlinsrm.bounds import (
    CONSTANTS,
    ModelStats,
    fat_bound,
    srm_objective,
    thm1_bound,
    thm2_bound,
    vc_bound,
)
from qlinsrm.errors import InvalidInputError


def ref_fat(eta, gamma, N):
    # rational evaluation of the shattering count, floored exactly
    ratio = Fraction(9) * Fraction(eta) ** 2 / Fraction(gamma) ** 2
    return math.floor(min(ratio, Fraction(N + 1))) + 1


def ref_thm1(err, k, m, delta):
    confidence = math.sqrt(9.0 * math.log(2.0 / delta) / (2.0 * m))
    complexity = math.sqrt(62.0**2 * k / m)
    return complexity, confidence, confidence + complexity + err


def ref_thm2(err, k, m, delta):
    a = k * (math.log(34.0) + 1.0 + math.log(m) - math.log(k)) * (math.log(578.0) + math.log(m)) / math.log(2.0)
    b = math.log(4.0) - math.log(delta)
    return err + math.sqrt(2.0 * (a + b) / m)


class TestVC:
    def test_examples(self):
        assert vc_bound(2) == 5
        assert vc_bound(0) == 1

    def test_ansatz_composition(self):
        r = ans.r_bound(ans.PauliProduct(("X",)), 1)  # l=1, d=1 local unitary
        assert vc_bound(4) == 17
        assert r <= 4

    def test_negative(self):
        with pytest.raises(InvalidInputError):
            vc_bound(-1)


class TestFat:
    def test_examples(self):
        assert fat_bound(1, 1, 10**6) == 10
        assert fat_bound(3, 1, 8) == 10
        assert fat_bound(1, 3, 10**6) == 2

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_bad_gamma(self, bad):
        with pytest.raises(InvalidInputError):
            fat_bound(1.0, bad, 4)

    @given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 10**6))
    def test_matches_rational_oracle(self, p, q, N):
        # eta = p/8, gamma = q/8 are exact binary floats; the ratio is exact in Fraction
        eta, gamma = p / 8, q / 8
        ratio = Fraction(9 * p * p, q * q)
        if ratio.denominator != 1 and abs(float(ratio) - round(float(ratio))) < 1e-12:
            return
        assert fat_bound(eta, gamma, N) == ref_fat(eta, gamma, N)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.integers(1, 1000))
    def test_monotone(self, eta, g1, g2, N):
        lo, hi = sorted((g1, g2))
        assert fat_bound(eta, hi, N) <= fat_bound(eta, lo, N)
        assert fat_bound(min(g1, g2), lo, N) <= fat_bound(max(g1, g2), lo, N)


class TestThm1:
    def test_k_equals_m(self):
        for m in (1, 7, 1000):
            assert thm1_bound(0.0, m, m, 0.3).components["complexity"] == 62.0

    def test_example(self):
        rep = thm1_bound(0.1, 100, 10000, 0.01)
        # 62 * sqrt(100 / 10000) = 6.2
        assert rep.components["complexity"] == pytest.approx(6.2, abs=1e-12)
        assert rep.value == pytest.approx(0.1 + 6.2 + 3 * math.sqrt(math.log(200) / 20000), abs=1e-12)

    @given(st.floats(0, 1), st.integers(1, 10**4), st.integers(1, 10**6), st.floats(1e-6, 0.999))
    def test_oracle_and_sum(self, err, k, m, delta):
        rep = thm1_bound(err, k, m, delta)
        cx, cf, tot = ref_thm1(err, k, m, delta)
        assert rep.components["complexity"] == pytest.approx(cx, rel=1e-12)
        assert rep.components["confidence"] == pytest.approx(cf, rel=1e-12)
        assert rep.value == pytest.approx(tot, rel=1e-12)
        assert abs(sum(rep.components.values()) - rep.value) <= 1e-12 * max(1, rep.value)

    @given(st.integers(1, 1000), st.integers(1, 1000), st.integers(1, 1000))
    def test_monotone(self, k, m, dk):
        assert thm1_bound(0, k + dk, m, 0.1).value > thm1_bound(0, k, m, 0.1).value
        assert thm1_bound(0, k, m + dk, 0.1).value < thm1_bound(0, k, m, 0.1).value

    @pytest.mark.parametrize("args", [(-0.1, 1, 1, 0.1), (1.1, 1, 1, 0.1), (0, 0, 1, 0.1), (0, 1, 0, 0.1), (0, 1, 1, 0.0), (0, 1, 1, 1.0)])
    def test_domain(self, args):
        with pytest.raises(InvalidInputError):
            thm1_bound(*args)


class TestThm2:
    def test_example(self):
        assert thm2_bound(0.0, 10, 10**4, 0.05).value == pytest.approx(ref_thm2(0.0, 10, 10**4, 0.05), rel=1e-12)

    @given(st.floats(0, 1), st.integers(1, 500), st.integers(1, 10**6), st.floats(1e-6, 0.999))
    def test_oracle_and_sum(self, err, k, m, delta):
        if k >= 34 * math.e * m:
            return
        rep = thm2_bound(err, k, m, delta)
        assert rep.value == pytest.approx(ref_thm2(err, k, m, delta), rel=1e-12)
        assert abs(sum(rep.components.values()) - rep.value) <= 1e-12 * max(1, rep.value)

    @pytest.mark.parametrize("k", [1, 10, 100, 1000])
    def test_decreasing_in_m_on_grid(self, k):
        grid = [int(x) for x in np.unique(np.logspace(math.log10(k), 8, 40).astype(int))]
        vals = [thm2_bound(0.0, k, m, 0.05).value for m in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_rejects_large_k(self):
        with pytest.raises(InvalidInputError):
            thm2_bound(0.0, 100, 1, 0.1)


class TestSRM:
    def test_thm1_dispatch(self):
        rep = srm_objective(ModelStats(m=100, train_err=0.0, r=0), "thm1", 0.1)
        assert rep.value == thm1_bound(0.0, 1, 100, 0.1).value
        assert rep.inputs["r"] == 0

    def test_thm2_margin_witness(self):
        eta, m = 2.0, 4
        rep = srm_objective(ModelStats(m=m, margin_err=0.0, eta=eta, gamma=eta / math.sqrt(m), n_qubits=2), "thm2", 0.05)
        k = fat_bound(eta, eta / math.sqrt(m) / 16, 16)
        assert k == 18  # dimension cap 4^2 + 1 = 17, plus one
        assert math.isfinite(rep.value)
        assert rep.inputs["k"] == k

    @given(st.integers(0, 20), st.integers(0, 20))
    def test_monotone_in_r(self, r1, r2):
        lo, hi = sorted((r1, r2))
        a = srm_objective(ModelStats(m=500, train_err=0.1, r=lo), "thm1", 0.1).value
        b = srm_objective(ModelStats(m=500, train_err=0.1, r=hi), "thm1", 0.1).value
        assert a <= b

    def test_missing_stats(self):
        with pytest.raises(InvalidInputError):
            srm_objective(ModelStats(m=10, train_err=0.0), "thm1", 0.1)
        with pytest.raises(InvalidInputError):
            srm_objective(ModelStats(m=10, margin_err=0.0, eta=1.0), "thm2", 0.1)
        with pytest.raises(InvalidInputError):
            srm_objective(ModelStats(m=10, train_err=0.0, r=1), "rademacher", 0.1)

    def test_constants_table(self):
        assert CONSTANTS["VC_COMPLEXITY"][0] == 62.0
        assert CONSTANTS["FAT_LOG2_FACTOR"][0] == 578.0
        assert CONSTANTS["FAT_LOG_FACTOR"][0] == pytest.approx(34 * math.e)
