import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlinsrm import ansatz as ans
from qlinsrm.constructions import margin_dataset
from qlinsrm.errors import DimensionError, InfeasibleError, InvalidInputError, NotSeparatingError
from qlinsrm.featuremap import FeatureMapSpec, density, kernel
from qlinsrm.model import (
    ExplicitClassifier,
    ImplicitClassifier,
    LabeledDataset,
    OptimizerConfig,
    ShotNoiseConfig,
    achieved_margin,
    classifier_from_json,
    decision_value,
    decision_values,
    frobenius_norm_explicit,
    induced_observable,
    induced_observable_implicit,
    margin_error,
    observable,
    predict,
    train_explicit,
    train_implicit,
    training_error,
)
from qlinsrm.oracle import max_margin_norm_cap
from qlinsrm.qcore import expectation, hermitian_basis_coords, numerical_rank, pauli_matrix

seeds = st.integers(0, 2**32 - 1)
FM1 = FeatureMapSpec("product-angle", 1, 1)
FM2 = FeatureMapSpec("product-angle", 2, 2)
IDENT = ans.BlockControlled(1, 0)  # zero-parameter identity on one qubit


def _random_explicit(seed, n=2):
    rng = np.random.default_rng(seed)
    spec = ans.HardwareEfficient(n, 2)
    fm = FeatureMapSpec("product-angle", n, n)
    return ExplicitClassifier(fm, spec, rng.uniform(0, 2 * np.pi, spec.parameter_count), rng.normal(size=2**n), rng.normal())


def _random_implicit(seed, k=4):
    rng = np.random.default_rng(seed)
    sup = [rng.uniform(-np.pi, np.pi, 2) for _ in range(k)]
    return ImplicitClassifier(FM2, tuple(sup), rng.normal(size=k), rng.normal())


def _random_dataset(seed, m=8, n=2):
    rng = np.random.default_rng(seed)
    return LabeledDataset(tuple(rng.uniform(-np.pi, np.pi, n) for _ in range(m)), tuple(rng.choice([-1, 1], m)))


class TestObservables:
    def test_identity_ansatz_gives_z(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0])
        assert np.allclose(induced_observable(c).matrix, pauli_matrix("Z"))

    def test_zero_lambda(self):
        c = _random_explicit(1)
        c0 = ExplicitClassifier(c.featuremap, c.ansatz, c.theta, np.zeros(4), 0.0)
        assert np.allclose(induced_observable(c0).matrix, 0)

    @given(seeds)
    def test_spectrum_is_lambda(self, seed):
        c = _random_explicit(seed)
        assert np.allclose(induced_observable(c).eigenvalues, np.sort(c.lam), atol=1e-10)

    @given(seeds, seeds)
    def test_spectrum_theta_independent(self, s1, s2):
        a, b = _random_explicit(s1), _random_explicit(s2)
        b = ExplicitClassifier(b.featuremap, b.ansatz, b.theta, a.lam, a.d)
        assert np.allclose(induced_observable(a).eigenvalues, induced_observable(b).eigenvalues, atol=1e-10)

    def test_implicit_single_support(self):
        x = np.array([0.3, 1.1])
        c = ImplicitClassifier(FM2, (x,), [1.0])
        assert np.allclose(induced_observable_implicit(c).matrix, density(FM2, x).matrix)
        c0 = ImplicitClassifier(FM2, (x,), [0.0])
        assert np.allclose(induced_observable_implicit(c0).matrix, 0)

    @given(seeds, st.integers(1, 6))
    def test_implicit_norm_and_rank(self, seed, k):
        c = _random_implicit(seed, k)
        o = induced_observable_implicit(c)
        assert o.frobenius_norm <= np.abs(c.alpha).sum() + 1e-12
        assert numerical_rank(o) <= k

    @given(seeds)
    def test_frobenius_norm_explicit(self, seed):
        c = _random_explicit(seed)
        assert frobenius_norm_explicit(c) == pytest.approx(induced_observable(c).frobenius_norm, rel=1e-10)

    def test_frobenius_norm_examples(self):
        assert frobenius_norm_explicit(ExplicitClassifier(FM2, ans.BlockControlled(2, 0), [], np.ones(4))) == pytest.approx(2.0)
        assert frobenius_norm_explicit(ExplicitClassifier(FM1, IDENT, [], [1, -1])) == pytest.approx(np.sqrt(2))


class TestDecision:
    def test_explicit_example(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0])
        assert decision_value(c, [0.0]) == pytest.approx(1.0)
        assert predict(c, [0.0]) == 1

    def test_implicit_self_overlap(self):
        x = np.array([0.7, -0.2])
        c = ImplicitClassifier(FM2, (x,), [1.0])
        assert decision_value(c, x) == pytest.approx(1.0)

    def test_shot_mode(self):
        x = np.array([0.7, -0.2])
        c = ImplicitClassifier(FM2, (x,), [1.0])
        v = decision_value(c, x, ShotNoiseConfig(10**6, seed=3))
        assert v == pytest.approx(1.0, abs=5e-3)
        assert v == decision_value(c, x, ShotNoiseConfig(10**6, seed=3))

    def test_shot_statistics(self):
        c = _random_explicit(5)
        x = np.array([0.4, 2.0])
        exact = decision_value(c, x)
        shots = 2000
        est = np.array([decision_value(c, x, ShotNoiseConfig(shots, seed=s)) for s in range(200)])
        spread = c.lam.max() - c.lam.min()
        # mean within 4 standard errors of the mean, spread within the stated bound
        assert abs(est.mean() - exact) <= 4 * spread / np.sqrt(shots * 200)
        assert est.std() <= spread / np.sqrt(shots)

    def test_sign_zero_is_plus(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0], d=1.0)
        assert decision_value(c, [0.0]) == 0.0
        assert predict(c, [0.0]) == 1

    def test_dimension_mismatch(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0])
        with pytest.raises(DimensionError):
            decision_value(c, density(FM2, [0.1, 0.2]))

    @given(seeds, seeds)
    def test_implicit_duality(self, s1, s2):
        c = _random_implicit(s1)
        x = np.random.default_rng(s2).uniform(-np.pi, np.pi, 2)
        via_kernel = sum(a * kernel(FM2, xp, x) for a, xp in zip(c.alpha, c.support_inputs)) - c.d
        via_obs = expectation(induced_observable_implicit(c), density(FM2, x)) - c.d
        assert via_kernel == pytest.approx(via_obs, abs=1e-10)
        assert decision_value(c, x) == pytest.approx(via_obs, abs=1e-10)

    @given(seeds, st.floats(0.01, 100))
    def test_scale_invariance(self, seed, s):
        c = _random_explicit(seed)
        cs = ExplicitClassifier(c.featuremap, c.ansatz, c.theta, s * c.lam, s * c.d)
        xs = [np.random.default_rng(seed + k).uniform(-np.pi, np.pi, 2) for k in range(10)]
        f = decision_values(c, xs)
        keep = np.abs(f) > 1e-9
        assert np.array_equal(np.sign(f[keep]), np.sign(decision_values(cs, xs)[keep]))

    @given(seeds)
    def test_batch_matches_pointwise(self, seed):
        c = _random_explicit(seed)
        D = _random_dataset(seed)
        assert np.allclose(decision_values(c, D.items), [decision_value(c, x) for x in D.items], atol=1e-12)


class TestErrors:
    def test_training_error_examples(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0])
        D = LabeledDataset(([0.0], [np.pi]), (1, -1))
        assert training_error(c, D) == 0.0
        assert training_error(c, LabeledDataset(D.items, (-1, 1))) == 1.0

    @given(seeds)
    def test_margin_error_at_zero(self, seed):
        c, D = _random_explicit(seed), _random_dataset(seed)
        assert margin_error(c, D, 0.0) == training_error(c, D)

    @given(seeds, st.floats(0, 2), st.floats(0, 2))
    def test_margin_error_monotone(self, seed, g1, g2):
        c, D = _random_explicit(seed), _random_dataset(seed)
        lo, hi = sorted((g1, g2))
        assert margin_error(c, D, lo) <= margin_error(c, D, hi)

    def test_margin_error_large_gamma(self):
        c, D = _random_explicit(0), _random_dataset(0)
        assert margin_error(c, D, 1 + np.abs(decision_values(c, D.items)).max()) == 1.0

    def test_empty_dataset(self):
        with pytest.raises(InvalidInputError):
            training_error(_random_explicit(0), LabeledDataset((), ()))


class TestAchievedMargin:
    def test_margin_witness(self):
        D, o, _ = margin_dataset(4, 2, 2.0)
        fm = FeatureMapSpec("raw-amplitude", 2, 4)
        c = ExplicitClassifier(fm, ans.BlockControlled(2, 0), [], np.real(np.diag(o.matrix)))
        assert achieved_margin(c, D) == pytest.approx(1.0, abs=1e-12)
        c2 = ExplicitClassifier(fm, c.ansatz, [], 3 * c.lam)
        assert achieved_margin(c2, D) == pytest.approx(3.0, abs=1e-12)

    def test_single_point(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0], d=0.7)
        assert achieved_margin(c, LabeledDataset(([0.0],), (1,))) == pytest.approx(0.3)

    def test_not_separating(self):
        c = ExplicitClassifier(FM1, IDENT, [], [1.0, -1.0])
        with pytest.raises(NotSeparatingError):
            achieved_margin(c, LabeledDataset(([0.0],), (-1,)))


class TestTrainImplicit:
    def test_orthogonal_points(self):
        D = LabeledDataset(([0.0], [np.pi]), (1, -1))
        c, rep = train_implicit(FM1, D)
        assert training_error(c, D) == 0.0
        assert rep.hard_margin

    @pytest.mark.parametrize("m,n,eta", [(4, 2, 2.0), (2, 2, 1.0), (8, 3, 3.0), (6, 3, 0.5)])
    def test_margin_dataset_margin(self, m, n, eta):
        fm = FeatureMapSpec("raw-amplitude", n, 2**n)
        D, _, _ = margin_dataset(m, n, eta)
        X = LabeledDataset(tuple(np.eye(2**n)[i] for i in range(m)), D.labels)
        c, rep = train_implicit(fm, X, frobenius_cap=eta)
        assert rep.margin == pytest.approx(eta / np.sqrt(m), abs=1e-6)
        assert achieved_margin(c, X) == pytest.approx(eta / np.sqrt(m), abs=1e-6)
        assert observable(c).frobenius_norm == pytest.approx(eta, rel=1e-9)

    @given(seeds)
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        xs = [rng.uniform(-np.pi, np.pi, 2) for _ in range(6)]
        # labels from a random classifier so the set is separable
        ref = _random_implicit(seed + 1)
        ys = [1 if decision_value(ref, x) >= 0 else -1 for x in xs]
        if len(set(ys)) < 2:
            ys[0] = -ys[0]
        D = LabeledDataset(tuple(xs), tuple(ys))
        pts = np.array([hermitian_basis_coords(density(FM2, x)) for x in xs])
        best = max_margin_norm_cap(pts, ys, 1.0)
        if best.margin <= 1e-6:
            with pytest.raises(InfeasibleError):
                train_implicit(FM2, D, frobenius_cap=1.0)
            return
        _, rep = train_implicit(FM2, D, frobenius_cap=1.0)
        assert rep.margin == pytest.approx(best.margin, abs=1e-6)

    def test_duplicate_conflict(self):
        D = LabeledDataset(([0.3], [0.3]), (1, -1))
        with pytest.raises(InfeasibleError):
            train_implicit(FM1, D)
        c, rep = train_implicit(FM1, D, penalty=1.0)
        assert not rep.hard_margin

    def test_rejects_prepared(self):
        D, _, _ = margin_dataset(2, 1, 1.0)
        with pytest.raises(InvalidInputError):
            train_implicit(FM1, D)


class TestTrainExplicit:
    def test_separable_pair(self):
        D = LabeledDataset(([0.1, 0.2], [2.9, 3.0]), (1, -1))
        spec = ans.HardwareEfficient(2, 1)
        c, hist = train_explicit(FM2, spec, D, optimizer=OptimizerConfig(iterations=500), seed=1)
        assert training_error(c, D) == 0.0
        assert hist.rows[-1]["iteration"] == 500

    def test_objective_never_increases(self):
        D = _random_dataset(3)
        c, hist = train_explicit(FM2, ans.HardwareEfficient(2, 1), D, optimizer=OptimizerConfig(iterations=40), seed=2)
        best = min(r["objective"] for r in hist.rows)
        assert best <= hist.rows[0]["objective"]

    @given(st.integers(1, 4))
    def test_rank_restriction(self, ell):
        D = _random_dataset(4)
        c, _ = train_explicit(FM2, ans.HardwareEfficient(2, 1), D, rank=ell, optimizer=OptimizerConfig(iterations=3))
        assert numerical_rank(induced_observable(c)) <= ell
        assert not np.any(c.lam[ell:])

    def test_deterministic(self):
        D = _random_dataset(5)
        kw = dict(optimizer=OptimizerConfig(iterations=10), seed=9)
        a, ha = train_explicit(FM2, ans.HardwareEfficient(2, 1), D, **kw)
        b, hb = train_explicit(FM2, ans.HardwareEfficient(2, 1), D, **kw)
        assert np.array_equal(a.theta, b.theta) and np.array_equal(a.lam, b.lam)
        fa, fb = io.StringIO(), io.StringIO()
        ha.write_csv(fa)
        hb.write_csv(fb)
        assert fa.getvalue() == fb.getvalue()
        assert fa.getvalue().splitlines()[0] == "iteration,objective,training_error,margin,frobenius_norm"

    @pytest.mark.parametrize("wgt", [0.0, 0.1, 1.0, 10.0])
    def test_fixed_basis_matches_convex_oracle(self, wgt):
        # with no ansatz parameters the objective is convex in (lam, d)
        import cvxpy as cp

        D = _random_dataset(6, m=10)
        spec = ans.BlockControlled(2, 0)
        c, hist = train_explicit(FM2, spec, D, frobenius_weight=wgt, optimizer=OptimizerConfig(iterations=1500), seed=0)
        probs = np.array([np.abs(density(FM2, x).matrix.diagonal()) for x in D.items])
        y = np.array(D.labels, dtype=float)
        lam, d = cp.Variable(4), cp.Variable()
        obj = cp.sum(cp.pos(0.1 - cp.multiply(y, probs @ lam - d))) / len(y) + wgt * cp.sum_squares(lam)
        best = cp.Problem(cp.Minimize(obj)).solve()
        got = min(r["objective"] for r in hist.rows)
        assert got >= best - 1e-6
        assert got <= best + 5e-3

    def test_frobenius_weight_shrinks_norm(self):
        D = _random_dataset(6, m=10)
        spec = ans.BlockControlled(2, 0)
        norms = {}
        for wgt in (0.0, 10.0, 100.0):
            c, _ = train_explicit(FM2, spec, D, frobenius_weight=wgt, optimizer=OptimizerConfig(iterations=400), seed=0)
            norms[wgt] = frobenius_norm_explicit(c)
        assert norms[10.0] < norms[0.0] and norms[100.0] < norms[0.0]
        assert norms[100.0] < 0.05

    def test_json_roundtrip(self):
        c = _random_explicit(11)
        assert np.array_equal(classifier_from_json(c.to_json()).lam, c.lam)
        i = _random_implicit(12)
        j = classifier_from_json(i.to_json())
        assert np.array_equal(j.alpha, i.alpha) and j.d == i.d
