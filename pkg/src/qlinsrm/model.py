"""Explicit and implicit quantum linear classifiers.

Both realizations reduce to a pair ``(O, d)`` and classify with
``sign(Tr[O rho] - d)``, where ``sign(0) = +1``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import linprog

from . import ansatz as ans
from .errors import (
    DimensionError,
    DivergenceError,
    InfeasibleError,
    InvalidInputError,
    NotSeparatingError,
)
from .featuremap import FeatureMapSpec, encode, encode_batch, kernel_matrix
from .qcore import DensityMatrix, HermitianOperator, PureState
from .serialize import fmt_float

log = logging.getLogger(__name__)


def sign(v: float) -> int:
    return 1 if v >= 0 else -1


@dataclass(frozen=True)
class ShotNoiseConfig:
    """``shots="exact"`` disables sampling."""

    shots: Union[int, str] = "exact"
    seed: int = 0

    def __post_init__(self):
        if self.shots != "exact" and (not isinstance(self.shots, (int, np.integer)) or self.shots < 1):
            raise InvalidInputError("shots must be a positive integer or 'exact'")

    @property
    def exact(self) -> bool:
        return self.shots == "exact"


EXACT = ShotNoiseConfig()


@dataclass(frozen=True)
class LabeledDataset:
    """Examples ``(x, y)`` with ``y`` in ``{-1, +1}``.

    ``items`` are either all raw input vectors or all prepared states
    (``DensityMatrix`` or ``PureState``).
    """

    items: tuple
    labels: tuple

    def __post_init__(self):
        items = tuple(self.items)
        labels = tuple(int(y) for y in self.labels)
        if len(items) != len(labels):
            raise InvalidInputError("items and labels differ in length")
        if any(y not in (-1, 1) for y in labels):
            raise InvalidInputError("labels must be +1 or -1")
        kinds = {isinstance(it, (DensityMatrix, PureState)) for it in items}
        if len(kinds) > 1:
            raise InvalidInputError("dataset mixes raw inputs and prepared states")
        if not kinds or not kinds.pop():
            items = tuple(np.asarray(it, dtype=float).reshape(-1) for it in items)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.items)

    @property
    def prepared(self) -> bool:
        return bool(self.items) and isinstance(self.items[0], (DensityMatrix, PureState))

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=float)


@dataclass(frozen=True)
class ExplicitClassifier:
    featuremap: FeatureMapSpec
    ansatz: ans.AnsatzSpec
    theta: np.ndarray
    lam: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        if theta.shape[0] != self.ansatz.parameter_count:
            raise InvalidInputError("theta length does not match the ansatz")
        if lam.shape[0] != 2**self.ansatz.n_qubits:
            raise InvalidInputError("lam needs one value per basis outcome")
        if self.featuremap.n_qubits != self.ansatz.n_qubits:
            raise DimensionError("feature map and ansatz act on different registers")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(theta)) and np.isfinite(self.d)):
            raise InvalidInputError("non-finite classifier parameters")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "d", float(self.d))

    @property
    def dim(self) -> int:
        return self.lam.shape[0]

    def unitary(self) -> np.ndarray:
        return ans.unitary(self.ansatz, self.theta)

    def to_json(self) -> dict:
        return {
            "model": "explicit",
            "featuremap": self.featuremap.to_json(),
            "ansatz": ans.to_json(self.ansatz),
            "theta": self.theta.tolist(),
            "lam": self.lam.tolist(),
            "d": self.d,
        }


@dataclass(frozen=True)
class ImplicitClassifier:
    """``O_alpha = sum_i alpha_i rho(x'_i)`` with threshold ``d``.

    ``alpha`` carries the label signs, so negative weights are expected.
    """

    featuremap: FeatureMapSpec
    support_inputs: tuple
    alpha: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        sup = tuple(np.asarray(x, dtype=float).reshape(-1) for x in self.support_inputs)
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if alpha.shape[0] != len(sup):
            raise InvalidInputError("alpha needs one weight per support input")
        object.__setattr__(self, "support_inputs", sup)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "d", float(self.d))

    @property
    def dim(self) -> int:
        return self.featuremap.dim

    def to_json(self) -> dict:
        return {
            "model": "implicit",
            "featuremap": self.featuremap.to_json(),
            "support_inputs": [x.tolist() for x in self.support_inputs],
            "alpha": self.alpha.tolist(),
            "d": self.d,
        }


Classifier = Union[ExplicitClassifier, ImplicitClassifier]


def classifier_from_json(obj: dict) -> Classifier:
    fm = FeatureMapSpec.from_json(obj["featuremap"])
    if obj.get("model") == "explicit":
        return ExplicitClassifier(fm, ans.from_json(obj["ansatz"]), obj["theta"], obj["lam"], obj.get("d", 0.0))
    if obj.get("model") == "implicit":
        return ImplicitClassifier(fm, tuple(obj["support_inputs"]), obj["alpha"], obj.get("d", 0.0))
    raise InvalidInputError(f"unknown model kind {obj.get('model')!r}")


def induced_observable(c: ExplicitClassifier) -> HermitianOperator:
    """``W(theta)^dag diag(lam) W(theta)``."""
    w = c.unitary()
    return HermitianOperator(w.conj().T @ (c.lam[:, None] * w))


def induced_observable_implicit(c: ImplicitClassifier) -> HermitianOperator:
    if not c.support_inputs:
        return HermitianOperator(np.zeros((c.dim, c.dim), dtype=complex))
    states = encode_batch(c.featuremap, c.support_inputs)
    return HermitianOperator((states.T * c.alpha) @ states.conj())


def observable(c: Classifier) -> HermitianOperator:
    if isinstance(c, ExplicitClassifier):
        return induced_observable(c)
    return induced_observable_implicit(c)


def _as_state(c: Classifier, x_or_rho):
    """Return a pure amplitude vector or a density matrix for the input."""
    if isinstance(x_or_rho, PureState):
        if x_or_rho.dim != c.dim:
            raise DimensionError("state dimension does not match the classifier")
        return x_or_rho.amplitudes, None
    if isinstance(x_or_rho, DensityMatrix):
        if x_or_rho.dim != c.dim:
            raise DimensionError("state dimension does not match the classifier")
        return None, x_or_rho.matrix
    return encode(c.featuremap, x_or_rho).amplitudes, None


def _exact_value(c: Classifier, psi, rho) -> float:
    if isinstance(c, ImplicitClassifier):
        if not c.support_inputs:
            return -c.d
        sup = encode_batch(c.featuremap, c.support_inputs)
        if psi is not None:
            k = np.abs(sup.conj() @ psi) ** 2
        else:
            k = np.einsum("ki,ij,kj->k", sup.conj(), rho, sup).real
        return float(c.alpha @ k) - c.d
    w = c.unitary()
    if psi is not None:
        probs = np.abs(w @ psi) ** 2
    else:
        probs = np.einsum("ki,ij,kj->k", w, rho, w.conj()).real
    return float(c.lam @ probs) - c.d


def _shot_value(c: Classifier, psi, rho, noise: ShotNoiseConfig) -> float:
    if isinstance(c, ExplicitClassifier):
        basis = c.unitary().conj().T  # columns are eigenvectors
        values = c.lam
    else:
        values, basis = induced_observable_implicit(c).eig
    if psi is not None:
        probs = np.abs(basis.conj().T @ psi) ** 2
    else:
        probs = np.einsum("ik,ij,jk->k", basis.conj(), rho, basis).real
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.Generator(np.random.Philox(noise.seed))
    counts = rng.multinomial(int(noise.shots), probs)
    return float(counts @ values) / int(noise.shots) - c.d


def decision_value(c: Classifier, x_or_rho, noise: ShotNoiseConfig = EXACT) -> float:
    """``Tr[O rho] - d``, exactly or as a shot-sampled estimate.

    Shot mode samples eigen-outcomes from the Born rule in the observable's
    eigenbasis and averages the corresponding eigenvalues.
    """
    psi, rho = _as_state(c, x_or_rho)
    if noise.exact:
        return _exact_value(c, psi, rho)
    return _shot_value(c, psi, rho, noise)


def decision_values(c: Classifier, items: Sequence) -> np.ndarray:
    """Exact decision values for many inputs at once."""
    if not items:
        return np.zeros(0)
    if isinstance(items[0], (PureState, DensityMatrix)):
        return np.array([decision_value(c, it) for it in items])
    states = encode_batch(c.featuremap, items)
    if isinstance(c, ExplicitClassifier):
        probs = np.abs(states @ c.unitary().T) ** 2
        return probs @ c.lam - c.d
    if not c.support_inputs:
        return np.full(len(items), -c.d)
    sup = encode_batch(c.featuremap, c.support_inputs)
    return (np.abs(states.conj() @ sup.T) ** 2) @ c.alpha - c.d


def predict(c: Classifier, x_or_rho, noise: ShotNoiseConfig = EXACT) -> int:
    return sign(decision_value(c, x_or_rho, noise))


def _nonempty(D: LabeledDataset) -> None:
    if len(D) == 0:
        raise InvalidInputError("empty dataset")


def training_error(c: Classifier, D: LabeledDataset) -> float:
    _nonempty(D)
    f = decision_values(c, D.items)
    pred = np.where(f >= 0, 1.0, -1.0)
    return float(np.mean(pred != D.y))


def margin_error(c: Classifier, D: LabeledDataset, gamma: float) -> float:
    """Fraction of examples with ``y * (f(x) - d) < gamma``.

    At ``gamma = 0`` this is the training error because a zero decision value
    is labeled +1.
    """
    _nonempty(D)
    if gamma < 0:
        raise InvalidInputError("gamma must be non-negative")
    f = decision_values(c, D.items)
    y = D.y
    if gamma == 0:
        return float(np.mean(np.where(f >= 0, 1.0, -1.0) != y))
    return float(np.mean(y * f < gamma))


def achieved_margin(c: Classifier, D: LabeledDataset) -> float:
    _nonempty(D)
    f = decision_values(c, D.items)
    y = D.y
    pred = np.where(f >= 0, 1.0, -1.0)
    if np.any(pred != y):
        raise NotSeparatingError(f"{int(np.sum(pred != y))} examples are misclassified")
    return float(np.min(y * f))


def frobenius_norm_explicit(c: ExplicitClassifier) -> float:
    return float(np.sqrt(np.sum(c.lam**2)))


# --------------------------------------------------------------------------
# implicit training: max-margin in the kernel feature space


@dataclass
class ImplicitTrainingReport:
    margin: float
    kkt_residual: float
    iterations: int
    hard_margin: bool


def _kernel_features(K: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((K + K.T) / 2)
    w = np.clip(w, 0.0, None)
    keep = w > 1e-12 * max(w.max(initial=0.0), 1e-300)
    return v[:, keep] * np.sqrt(w[keep])


def strictly_separable(K: np.ndarray, y: np.ndarray, tol: float = 1e-9) -> bool:
    """LP test for a strictly separating affine function in the kernel space."""
    feats = _kernel_features(K)
    m, p = feats.shape
    # variables (w, d, t); maximize t s.t. y_i(<w, f_i> - d) >= t, |w_k| <= 1, t <= 1
    c = np.zeros(p + 2)
    c[-1] = -1.0
    a_ub = np.hstack([-y[:, None] * feats, y[:, None], np.ones((m, 1))])
    bounds = [(-1, 1)] * p + [(None, None), (None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(m), bounds=bounds, method="highs")
    return bool(res.status == 0 and -res.fun > tol)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Pairwise SMO on the dual ``max sum a - 1/2 a^T Q a``, ``y^T a = 0``, ``0 <= a <= C``.

    Uses maximal-violating-pair selection with second-order step sizes.
    """
    m = len(y)
    Q = (y[:, None] * y[None, :]) * K
    a = np.zeros(m)
    grad = -np.ones(m)  # gradient of 1/2 a^T Q a - sum a
    it = 0
    gap = np.inf
    for it in range(1, max_iter + 1):
        yg = -y * grad
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = np.where(up)[0][np.argmax(yg[up])]
        j = np.where(low)[0][np.argmin(yg[low])]
        gap = yg[i] - yg[j]
        if gap <= tol:
            break
        quad = Q[i, i] + Q[j, j] - 2 * y[i] * y[j] * Q[i, j]
        quad = max(quad, 1e-12)
        step = gap / quad
        # move along direction keeping y^T a fixed: a_i += y_i s, a_j -= y_j s
        if y[i] > 0:
            step = min(step, C - a[i])
        else:
            step = min(step, a[i])
        if y[j] > 0:
            step = min(step, a[j])
        else:
            step = min(step, C - a[j])
        di, dj = y[i] * step, -y[j] * step
        a[i] += di
        a[j] += dj
        grad += Q[:, i] * di + Q[:, j] * dj
    return a, gap, it


def train_implicit(
    featuremap: FeatureMapSpec,
    D: LabeledDataset,
    frobenius_cap: float | None = None,
    tolerance: float = 1e-10,
    penalty: float | None = None,
    max_iter: int = 200_000,
) -> tuple[ImplicitClassifier, ImplicitTrainingReport]:
    """Max-margin implicit classifier.

    Without ``penalty`` this is the hard-margin problem; non-separable data
    raises :class:`InfeasibleError` and the caller may retry with a finite
    ``penalty`` (the soft-margin box constraint ``C``). The canonical solution
    has functional margin 1; with ``frobenius_cap`` it is rescaled to
    ``||O_alpha||_F = frobenius_cap``, which is the norm-capped maximum margin.
    """
    _nonempty(D)
    if D.prepared:
        raise InvalidInputError("train_implicit needs raw inputs")
    y = D.y
    K = kernel_matrix(featuremap, D.items)
    hard = penalty is None
    if hard and not strictly_separable(K, y):
        raise InfeasibleError("data are not strictly separable in the kernel space; use a soft-margin penalty")
    C = np.inf if hard else float(penalty)
    a, gap, iters = _smo(K, y, C, tolerance, max_iter)
    if gap > tolerance:
        log.warning("SMO stopped with KKT gap %.3e after %d iterations", gap, iters)
    coef = a * y
    w_norm = float(np.sqrt(max(coef @ K @ coef, 0.0)))
    f0 = K @ coef
    free = (a > 1e-12) & (a < C - 1e-12 if np.isfinite(C) else True)
    idx = np.where(free)[0] if np.any(free) else np.where(a > 1e-12)[0]
    d = float(np.mean(f0[idx] - y[idx])) if idx.size else 0.0
    scale = 1.0
    if frobenius_cap is not None:
        if w_norm == 0:
            raise InfeasibleError("max-margin solution is the zero observable")
        scale = frobenius_cap / w_norm
    clf = ImplicitClassifier(featuremap, D.items, scale * coef, scale * d)
    f = scale * (f0 - d)
    margin = float(np.min(y * f))
    return clf, ImplicitTrainingReport(margin, float(gap), iters, hard)


# --------------------------------------------------------------------------
# explicit training: hinge loss, finite-difference gradients, Adam updates


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    iterations: int = 300
    fd_step: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainingHistory:
    rows: list = field(default_factory=list)

    COLUMNS = ("iteration", "objective", "training_error", "margin", "frobenius_norm")

    def append(self, **row):
        self.rows.append(row)

    def write_csv(self, path_or_file) -> None:
        close = False
        fh = path_or_file
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            fh = open(path_or_file, "w", newline="")
            close = True
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([r["iteration"]] + [fmt_float(r[k]) for k in self.COLUMNS[1:]])
        finally:
            if close:
                fh.close()


class _ExplicitProblem:
    """Packs ``(theta, lam on the support, d)`` into one parameter vector."""

    def __init__(self, featuremap, spec, D, support, gamma0, frob_weight):
        self.featuremap = featuremap
        self.spec = spec
        self.support = np.asarray(support, dtype=int)
        self.dim = 2**spec.n_qubits
        self.gamma0 = gamma0
        self.frob_weight = frob_weight
        self.y = D.y
        if D.prepared:
            self.rhos = [it.matrix if isinstance(it, DensityMatrix) else None for it in D.items]
            self.psis = np.stack([it.amplitudes for it in D.items]) if isinstance(D.items[0], PureState) else None
            if self.psis is not None:
                self.rhos = None
        else:
            self.psis = encode_batch(featuremap, D.items)
            self.rhos = None
        self.p = spec.parameter_count

    def split(self, v):
        theta = v[: self.p]
        lam = np.zeros(self.dim)
        lam[self.support] = v[self.p : self.p + len(self.support)]
        return theta, lam, v[-1]

    def decision(self, v) -> np.ndarray:
        theta, lam, d = self.split(v)
        w = ans.unitary(self.spec, theta)
        if self.psis is not None:
            probs = np.abs(self.psis @ w.T) ** 2
        else:
            probs = np.stack([np.einsum("ki,ij,kj->k", w, r, w.conj()).real for r in self.rhos])
        return probs @ lam - d

    def objective(self, v) -> float:
        f = self.decision(v)
        hinge = np.maximum(0.0, self.gamma0 - self.y * f).mean()
        lam_s = v[self.p : self.p + len(self.support)]
        return float(hinge + self.frob_weight * np.sum(lam_s**2))

    def grad(self, v, h) -> np.ndarray:
        g = np.empty_like(v)
        for k in range(v.size):
            e = np.zeros_like(v)
            e[k] = h
            g[k] = (self.objective(v + e) - self.objective(v - e)) / (2 * h)
        return g

    def classifier(self, v) -> ExplicitClassifier:
        theta, lam, d = self.split(v)
        return ExplicitClassifier(self.featuremap, self.spec, theta, lam, d)


def train_explicit(
    featuremap: FeatureMapSpec,
    spec: ans.AnsatzSpec,
    D: LabeledDataset,
    gamma0: float = 0.1,
    frobenius_weight: float = 0.0,
    rank: int | None = None,
    optimizer: OptimizerConfig = OptimizerConfig(),
    seed: int = 0,
    init: ExplicitClassifier | None = None,
) -> tuple[ExplicitClassifier, TrainingHistory]:
    """Minimize mean hinge loss ``max(0, gamma0 - y f)`` plus ``frobenius_weight * ||lam||^2``.

    With ``rank=l`` the post-processing ``lam`` is supported on the first
    ``l`` outcomes only. The threshold ``d`` is trained jointly. The returned
    classifier is the iterate with the lowest objective seen, so the final
    objective never exceeds the initial one.
    """
    _nonempty(D)
    dim = 2**spec.n_qubits
    ell = dim if rank is None else int(rank)
    if not 1 <= ell <= dim:
        raise InvalidInputError(f"rank must lie in [1, {dim}]")
    prob = _ExplicitProblem(featuremap, spec, D, range(ell), gamma0, frobenius_weight)
    rng = np.random.default_rng(seed)
    if init is not None:
        v = np.concatenate([init.theta, init.lam[:ell], [init.d]])
    else:
        v = np.concatenate([rng.uniform(0, 2 * np.pi, spec.parameter_count), rng.normal(0, 0.1, ell), [0.0]])
    opt = optimizer
    m1 = np.zeros_like(v)
    m2 = np.zeros_like(v)
    hist = TrainingHistory()
    best_v, best_obj = v.copy(), prob.objective(v)
    if not np.isfinite(best_obj):
        raise DivergenceError("initial objective is not finite", None)

    def record(it, vv, obj):
        c = prob.classifier(vv)
        f = prob.decision(vv)
        err = float(np.mean(np.where(f >= 0, 1.0, -1.0) != prob.y))
        hist.append(
            iteration=it,
            objective=obj,
            training_error=err,
            margin=float(np.min(prob.y * f)),
            frobenius_norm=frobenius_norm_explicit(c),
        )

    record(0, v, best_obj)
    for it in range(1, opt.iterations + 1):
        g = prob.grad(v, opt.fd_step)
        m1 = opt.beta1 * m1 + (1 - opt.beta1) * g
        m2 = opt.beta2 * m2 + (1 - opt.beta2) * g**2
        mh = m1 / (1 - opt.beta1**it)
        vh = m2 / (1 - opt.beta2**it)
        v = v - opt.learning_rate * mh / (np.sqrt(vh) + opt.eps)
        obj = prob.objective(v)
        if not np.isfinite(obj):
            raise DivergenceError(f"objective became {obj} at iteration {it}", prob.classifier(best_v))
        record(it, v, obj)
        if obj < best_obj:
            best_obj, best_v = obj, v.copy()
    return prob.classifier(best_v), hist
