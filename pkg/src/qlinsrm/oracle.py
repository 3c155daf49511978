"""Brute-force shattering and margin oracles on small real point sets.

Points are feature vectors in ``R^D`` (for quantum classifiers, the Pauli
coordinates of the encoded density matrices). A labeling is realized when
some affine function ``<w, x> - d`` has the labeled sign on every point with
slack above ``STRICT_TOL``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from .errors import BudgetError, InconclusiveError, InvalidInputError, SchemaError
from .qcore import hermitian_basis_coords

STRICT_TOL = 1e-9
FEAS_TOL = 1e-8
MAX_SHATTER_POINTS = 20
MAX_GAMMA_POINTS = 12

_CLARABEL_OPTS = {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "tol_feas": 1e-10, "max_iter": 500}
# an "optimal_inaccurate" solve may only decide when it is this far from the threshold
INACCURATE_MARGIN = 1e-6


def _solve(prob: cp.Problem, what: str) -> bool:
    """Solve with Clarabel; return whether the status was only ``optimal_inaccurate``."""
    with warnings.catch_warnings():
        # the inaccurate status is handled by the callers
        warnings.filterwarnings("ignore", message="Solution may be inaccurate")
        prob.solve(solver=cp.CLARABEL, **_CLARABEL_OPTS)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"{what} solve ended with status {prob.status}")
    return prob.status == "optimal_inaccurate"


@dataclass(frozen=True)
class FeaturePointSet:
    points: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        if p.ndim != 2:
            raise InvalidInputError("points must form an (m, D) array")
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("points have non-finite entries")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]


@dataclass
class ShatterResult:
    shattered: bool
    witnesses: list = field(default_factory=list)  # (labels, w, d) per realized labeling
    failing_labeling: tuple | None = None

    def __bool__(self):
        return self.shattered


def _as_points(ps) -> np.ndarray:
    return ps.points if isinstance(ps, FeaturePointSet) else FeaturePointSet(ps).points


def separation_lp(x: np.ndarray, y: np.ndarray):
    """Maximize ``t`` s.t. ``y_i(<w, x_i> - d) >= t``, ``|w_k| <= 1``, ``t <= 1``.

    Returns ``(t, w, d)``. The labeling is strictly realizable iff ``t > STRICT_TOL``.
    """
    m, D = x.shape
    c = np.zeros(D + 2)
    c[-1] = -1.0
    a_ub = np.hstack([-y[:, None] * x, y[:, None], np.ones((m, 1))])
    bounds = [(-1.0, 1.0)] * D + [(None, None), (None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(m), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"separation LP failed: {res.message}")
    z = res.x
    return float(z[-1]), z[:D], float(z[D])


def _radon_labeling(x: np.ndarray, tol: float = 1e-10):
    """A labeling from an affine dependence of the points, or ``None``."""
    aug = np.hstack([x, np.ones((x.shape[0], 1))])
    u, s, vt = np.linalg.svd(aug.T, full_matrices=True)
    top = s[0] if s.size else 1.0
    rank = int(np.count_nonzero(s > tol * top))
    if rank == x.shape[0]:
        return None
    lam = vt[-1]
    # canonical sign: first clearly nonzero coefficient is positive
    lead = lam[np.abs(lam) > tol * np.abs(lam).max()][0]
    if lead < 0:
        lam = -lam
    return tuple(1 if v >= 0 else -1 for v in lam)


def _interpolating_witness(x: np.ndarray, y: np.ndarray):
    """Least-norm affine function with ``f(x_i) = y_i`` if it exists."""
    aug = np.hstack([x, -np.ones((x.shape[0], 1))])
    sol, *_ = np.linalg.lstsq(aug, y, rcond=None)
    w, d = sol[:-1], float(sol[-1])
    scale = max(np.max(np.abs(w), initial=0.0), 1e-300)
    slack = np.min(y * (x @ w - d)) / scale
    return (w, d) if slack > STRICT_TOL else None


def is_shattered(ps, witnesses: bool = True) -> ShatterResult:
    """Decide whether affine threshold functions realize every labeling.

    An affine dependence among the points gives a Radon labeling, which is
    checked with the separation LP first. Otherwise each labeling with
    ``y_0 = +1`` gets an interpolating witness (verified) or, failing that,
    an LP solve; ``-y`` is realized by ``(-w, -d)``.
    """
    x = _as_points(ps)
    m = x.shape[0]
    if m > MAX_SHATTER_POINTS:
        raise BudgetError(f"{m} points exceed the enumeration budget of {MAX_SHATTER_POINTS}")
    if m == 0:
        return ShatterResult(True)
    radon = _radon_labeling(x)
    if radon is not None:
        t, _, _ = separation_lp(x, np.asarray(radon, dtype=float))
        if t <= STRICT_TOL:
            return ShatterResult(False, failing_labeling=radon)
    found = []
    for tail in itertools.product((1, -1), repeat=m - 1):
        y = np.array((1,) + tail, dtype=float)
        wit = _interpolating_witness(x, y)
        if wit is None:
            t, w, d = separation_lp(x, y)
            if t <= STRICT_TOL:
                return ShatterResult(False, found if witnesses else [], tuple(int(v) for v in y))
            wit = (w, d)
        if witnesses:
            w, d = wit
            found.append((tuple(int(v) for v in y), w, d))
            found.append((tuple(int(-v) for v in y), -w, -d))
    return ShatterResult(True, found)


def is_shattered_lp(ps) -> ShatterResult:
    """Plain enumeration with one LP per labeling; slow reference path."""
    x = _as_points(ps)
    m = x.shape[0]
    if m > MAX_SHATTER_POINTS:
        raise BudgetError(f"{m} points exceed the enumeration budget of {MAX_SHATTER_POINTS}")
    found = []
    for y in itertools.product((1, -1), repeat=m):
        t, w, d = separation_lp(x, np.asarray(y, dtype=float))
        if t <= STRICT_TOL:
            return ShatterResult(False, found, tuple(y))
        found.append((tuple(y), w, d))
    return ShatterResult(True, found)


@dataclass
class SearchResult:
    size: int
    witness: np.ndarray | None
    trials_used: int


def vc_lower_bound_search(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    max_m: int,
    trials: int,
    seed=0,
) -> SearchResult:
    """Largest ``m <= max_m`` for which a sampled set of ``m`` points is shattered.

    ``sampler(rng, m)`` returns an ``(m, D)`` array. ``trials`` is the total
    number of sampled sets across all sizes. Sizes are tried in increasing
    order and the search stops at the first size with no shattered sample,
    since subsets of shattered sets are shattered.
    """
    rng = np.random.default_rng(seed)
    best, witness, used = 0, None, 0
    for m in range(1, max_m + 1):
        hit = False
        while used < trials:
            used += 1
            pts = np.asarray(sampler(rng, m), dtype=float)
            if is_shattered(pts, witnesses=False).shattered:
                best, witness, hit = m, pts, True
                break
        if not hit:
            break
    return SearchResult(best, witness, used)


@dataclass
class GammaShatterResult:
    shattered: bool
    best_gamma: float
    offsets: np.ndarray | None = None
    witnesses: list = field(default_factory=list)  # (labels, w, d)

    def __bool__(self):
        return self.shattered


def max_gamma_shatter_width(ps, eta: float):
    """Largest ``gamma`` for which one offset vector serves every labeling.

    Solves ``max t`` over ``s`` and ``(w_y, d_y)`` for all ``2^m`` labelings with
    ``y_i(<w_y, x_i> - d_y - s_i) >= t``, ``||w_y|| <= eta`` and ``|d_y| <= eta``.
    Returns ``(t, s, labelings, W, d, inaccurate)``.
    """
    x = _as_points(ps)
    m, D = x.shape
    if m > MAX_GAMMA_POINTS:
        raise BudgetError(f"{m} points exceed the joint-problem budget of {MAX_GAMMA_POINTS}")
    Y = np.array(list(itertools.product((1.0, -1.0), repeat=m)))
    L = Y.shape[0]
    W = cp.Variable((L, D))
    d = cp.Variable(L)
    s = cp.Variable(m)
    t = cp.Variable()
    F = W @ x.T - cp.reshape(d, (L, 1), order="C") @ np.ones((1, m)) - np.ones((L, 1)) @ cp.reshape(s, (1, m), order="C")
    cons = [cp.multiply(Y, F) >= t, cp.norm(W, 2, axis=1) <= eta, cp.abs(d) <= eta]
    prob = cp.Problem(cp.Maximize(t), cons)
    inaccurate = _solve(prob, "gamma-shattering")
    return float(t.value), np.asarray(s.value), Y, np.asarray(W.value), np.asarray(d.value), inaccurate


def is_gamma_shattered(ps, gamma: float, eta: float) -> GammaShatterResult:
    """Decide gamma-shattering by norm-capped affine functions with a shared offset."""
    if gamma <= 0 or eta <= 0:
        raise InvalidInputError("gamma and eta must be positive")
    best, s, Y, W, d, inaccurate = max_gamma_shatter_width(ps, eta)
    if inaccurate and abs(best - gamma) <= INACCURATE_MARGIN:
        raise InconclusiveError(f"inaccurate solve: width {best:.3g} too close to gamma={gamma:.3g}", "gamma")
    ok = best >= gamma - FEAS_TOL
    wits = [(tuple(int(v) for v in Y[k]), W[k], float(d[k])) for k in range(Y.shape[0])] if ok else []
    return GammaShatterResult(ok, best, s, wits)


@dataclass
class MarginResult:
    margin: float
    w: np.ndarray
    d: float

    @property
    def separable(self) -> bool:
        return self.margin > STRICT_TOL


def max_margin_norm_cap(points, labels, eta: float) -> MarginResult:
    """``max gamma`` s.t. ``y_i(<w, x_i> - d) >= gamma`` and ``||w|| <= eta``.

    The optimum is ``<= 0`` exactly when the labeled set is not strictly
    separable. A single-class set has unbounded margin (``d`` is free) and
    returns ``inf``.
    """
    x = _as_points(points)
    y = np.asarray(labels, dtype=float).reshape(-1)
    if x.shape[0] == 0 or y.shape[0] != x.shape[0]:
        raise InvalidInputError("need one label per point and at least one point")
    if np.all(y == y[0]):
        return MarginResult(np.inf, np.zeros(x.shape[1]), -np.inf * y[0])
    w = cp.Variable(x.shape[1])
    d = cp.Variable()
    g = cp.Variable()
    prob = cp.Problem(cp.Maximize(g), [cp.multiply(y, x @ w - d) >= g, cp.norm(w, 2) <= eta])
    if _solve(prob, "max-margin"):
        raise InconclusiveError("max-margin solve did not reach the requested accuracy", "margin")
    wv = np.asarray(w.value)
    dv = float(d.value)
    # report the margin actually attained by the returned (w, d)
    return MarginResult(float(np.min(y * (x @ wv - dv))), wv, dv)


# --------------------------------------------------------------------------
# point samplers for the VC search


def _random_hermitian_coords(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    dim = 2**n
    a = rng.normal(size=(m, dim, dim)) + 1j * rng.normal(size=(m, dim, dim))
    h = (a + np.conj(np.swapaxes(a, 1, 2))) / 2
    return np.array([hermitian_basis_coords(x) for x in h])


def _random_density(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    dim = 2**n
    g = rng.normal(size=(m, dim, dim)) + 1j * rng.normal(size=(m, dim, dim))
    rho = g @ np.conj(np.swapaxes(g, 1, 2))
    return rho / np.trace(rho, axis1=1, axis2=2).real[:, None, None]


def make_sampler(cfg: dict) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Point sampler from a config block ``{"kind": ..., ...}``.

    * ``hermitian``: Pauli coordinates of random Hermitian matrices on
      ``n_qubits`` (unrestricted observables act on all of ``R^{4^n}``).
    * ``density``: Pauli coordinates of random density matrices.
    * ``fixed-image``: the single feature ``<0|rho|0>`` seen by observables whose
      image is the fixed line spanned by ``|0>``.
    * ``gaussian``: standard normal points in ``R^dim``.
    """
    kind = cfg.get("kind")
    if kind == "gaussian":
        dim = int(cfg["dim"])
        return lambda rng, m: rng.normal(size=(m, dim))
    n = int(cfg.get("n_qubits", 1))
    if kind == "hermitian":
        return lambda rng, m: _random_hermitian_coords(rng, m, n)
    if kind == "density":
        return lambda rng, m: np.array([hermitian_basis_coords(r) for r in _random_density(rng, m, n)])
    if kind == "fixed-image":
        return lambda rng, m: _random_density(rng, m, n)[:, 0, 0].real[:, None]
    raise SchemaError(f"field 'sampler.kind': unknown sampler {kind!r}")
