"""Executable constructions: rank augmentation, the label-only rank probe,
the linear-to-quantum embedding chain and the Frobenius-margin dataset.

Probe arithmetic
----------------
A classifier ``sign(Tr[O rho] - b)`` only reveals ``O_eff = O - b I`` up to a
positive factor. The probe fixes that factor by ``(O_eff)_00 = a`` where ``a``
is the target's own ``(T_eff)_00 < 0``, and bounds every entry from labels
alone:

* Averaging the labels' inequalities over a full phase mesh cancels the
  phase-dependent term, which brackets ``(O_eff)_jj`` between the values
  implied by the two mesh points adjacent to the target's crossing.
* At the first ``+1`` mesh point, the worst phase on the mesh pins the
  modulus of the off-diagonal term, using ``cos x >= 1 - LAMBDA x``.

Eigenvalue multiplicities are then limited by Gershgorin: a connected
component of ``k`` discs holds exactly ``k`` eigenvalues, so any eigenvalue
(in particular ``-b`` after rescaling) has multiplicity at most the largest
component, and ``rank(O) >= 2^n - max component size``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import BudgetError, InconclusiveError, InvalidInputError, PreconditionError
from .featuremap import FeatureMapSpec, density
from .model import LabeledDataset
from .qcore import (
    DEFAULT_TAU,
    HermitianOperator,
    PureState,
    expectation,
    hermitian_basis_coords,
    numerical_rank,
    random_unitary,
)

QUERY_BUDGET = 10_000_000
TIE_TOL = 1e-9


def _solve_lambda() -> float:
    # root of L (pi - asin L) - 1 - sqrt(1 - L^2) on (0, 1); the function is increasing there
    lo, hi = 0.5, 0.9
    f = lambda L: L * (math.pi - math.asin(L)) - 1 - math.sqrt(1 - L * L)
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# slope of the tangent line 1 - LAMBDA x that stays below cos x for x >= 0
LAMBDA = 0.724611353776
assert abs(LAMBDA - _solve_lambda()) < 1e-11


# --------------------------------------------------------------------------
# rank augmentation


def rank_augment(o: HermitianOperator, d: float, D: LabeledDataset, r: int, eps_frac: float, tau: float = DEFAULT_TAU) -> HermitianOperator:
    """Raise the rank of a correctly classifying ``(o, d)`` to ``r`` without changing labels.

    Adds ``eps * P`` where ``P`` is ``1/(r - k)`` times the projector onto
    ``r - k`` null eigenvectors of ``o`` and ``eps = eps_frac * delta`` with
    ``delta`` the smallest distance of a negative example to the threshold.
    Without negative examples ``delta`` is the spectral radius of ``o`` (or 1).
    """
    if not 0 < eps_frac < 1:
        raise InvalidInputError("eps_frac must lie strictly between 0 and 1")
    if not D.prepared:
        raise InvalidInputError("rank_augment works on prepared states")
    vals = np.array([expectation(o, it) - d for it in D.items])
    y = D.y
    if np.any(np.where(vals >= 0, 1.0, -1.0) != y):
        raise PreconditionError("the classifier does not classify the dataset correctly")
    k = numerical_rank(o, tau)
    if not k < r <= o.dim:
        raise InvalidInputError(f"target rank {r} must satisfy rank(o)={k} < r <= {o.dim}")
    neg = vals[y < 0]
    if neg.size:
        delta = float(np.min(np.abs(neg)))
    else:
        delta = float(np.max(np.abs(o.eigenvalues))) or 1.0
    eps = eps_frac * delta
    w, v = o.eig
    top = np.abs(w).max(initial=0.0)
    null = np.where(np.abs(w) <= tau * top)[0] if top > 0 else np.arange(o.dim)
    fresh = v[:, null[: r - k]]
    P = fresh @ fresh.conj().T / (r - k)
    return HermitianOperator(o.matrix + eps * P)


# --------------------------------------------------------------------------
# target classifier and probe schedule


def target_classifier(r: int, n: int) -> tuple[HermitianOperator, float]:
    """``T = -r|0><0| + sum_{i=1}^{r-1} i |i><i|`` with threshold ``-1``.

    For ``r = 1`` that threshold makes ``T_eff = T + I`` positive semidefinite
    and every state is labeled +1, so the threshold is moved to ``-1/2``.
    """
    if not 1 <= r <= 2**n:
        raise InvalidInputError(f"r must lie in [1, {2**n}]")
    diag = np.zeros(2**n)
    diag[0] = -r
    diag[1:r] = np.arange(1, r)
    return HermitianOperator(np.diag(diag).astype(complex)), (-0.5 if r == 1 else -1.0)


@dataclass(frozen=True)
class ProbeMesh:
    """Mesh steps. ``None`` deltas mean ``1 / 2^(n+1)``."""

    xi: float = 1.0 / 512
    zeta: float = 2 * math.pi / 128
    delta: float | None = None
    delta_prime: float | None = None
    delta_dprime: float | None = None

    def __post_init__(self):
        if not 0 < self.xi <= 0.1:
            raise InvalidInputError("xi must lie in (0, 0.1]")
        if not 0 < self.zeta <= 0.5:
            raise InvalidInputError("zeta must lie in (0, 0.5]")
        for v in (self.delta, self.delta_prime, self.delta_dprime):
            if v is not None and v <= 0:
                raise InvalidInputError("deltas must be positive")

    @property
    def alphas(self) -> np.ndarray:
        steps = int(round(1.0 / self.xi))
        return np.arange(steps + 1) / steps

    @property
    def thetas(self) -> np.ndarray:
        k = int(round(2 * math.pi / self.zeta))
        return 2 * math.pi * np.arange(k) / k

    @property
    def effective_zeta(self) -> float:
        return 2 * math.pi / self.thetas.size

    def tolerances(self, n: int) -> tuple[float, float, float]:
        base = 1.0 / 2 ** (n + 1)
        return tuple(base if v is None else v for v in (self.delta, self.delta_prime, self.delta_dprime))

    def refined(self, zeta: bool = True) -> "ProbeMesh":
        return ProbeMesh(self.xi / 2, self.zeta / 2 if zeta else self.zeta, self.delta, self.delta_prime, self.delta_dprime)


@dataclass
class QueryBlock:
    """One family of queries sharing indices, in schedule order (theta outer, alpha inner).

    ``kind`` is ``"basis"``, ``"gamma"`` (``sqrt(1-a)|0> + e^{it} sqrt(a)|j>``) or
    ``"mu"`` (``sqrt((1-a)w)|0> + sqrt((1-a)(1-w))|i> + e^{it} sqrt(a)|j>``).
    Queries whose target decision value is a numerical tie are omitted.
    """

    kind: str
    dim: int
    i: int
    j: int
    weight: float
    thetas: np.ndarray
    alphas: np.ndarray
    expected: np.ndarray
    keep: np.ndarray  # boolean mask over the full alpha mesh

    @property
    def size(self) -> int:
        if self.kind == "basis":
            return self.dim
        return self.thetas.size * int(self.keep.sum())

    def states(self) -> np.ndarray:
        if self.kind == "basis":
            return np.eye(self.dim, dtype=complex)
        al = self.alphas[self.keep]
        th = self.thetas
        out = np.zeros((th.size, al.size, self.dim), dtype=complex)
        phase = np.exp(1j * th)[:, None]
        if self.kind == "gamma":
            out[:, :, 0] = np.sqrt(1 - al)[None, :]
        else:
            out[:, :, 0] = np.sqrt((1 - al) * self.weight)[None, :]
            out[:, :, self.i] = np.sqrt((1 - al) * (1 - self.weight))[None, :]
        out[:, :, self.j] = phase * np.sqrt(al)[None, :]
        return out.reshape(-1, self.dim)

    def expected_labels(self) -> np.ndarray:
        if self.kind == "basis":
            return self.expected
        return np.tile(self.expected[self.keep], self.thetas.size)

    def describe(self, k: int) -> dict:
        if self.kind == "basis":
            return {"family": "basis", "index": int(k)}
        al = self.alphas[self.keep]
        t, a = divmod(int(k), al.size)
        out = {"family": self.kind, "j": self.j, "theta": float(self.thetas[t]), "alpha": float(al[a])}
        if self.kind == "mu":
            out.update(i=self.i, weight=self.weight)
        return out

    def crossing(self) -> tuple[float, float]:
        """Adjacent kept mesh points around the target crossing: (last -1, first +1)."""
        al = self.alphas[self.keep]
        ex = self.expected[self.keep]
        pos = np.where(ex > 0)[0]
        first = int(pos[0])
        if first == 0:
            return 0.0, float(al[0])
        return float(al[first - 1]), float(al[first])


def _target_diag(r: int, n: int) -> np.ndarray:
    t, b = target_classifier(r, n)
    return np.real(np.diag(t.matrix)) - b


def _labels(values: np.ndarray, scale: float):
    keep = np.abs(values) > TIE_TOL * scale
    return np.where(values >= 0, 1, -1), keep


def _mu_weight(a: float, ti: float, tj: float, alphas: np.ndarray, c_zeta: float, b0j: float) -> float:
    """Weight on ``|0>`` for the three-term family, chosen to minimize the predicted
    bound on ``|O_ij|`` when the classifier equals the target.

    The target needs ``w a + (1 - w) t_i < 0`` for the label to cross.
    """
    w_min = ti / (ti - a)
    best_w, best_val = None, math.inf
    for w in np.linspace(w_min, 1.0, 402)[1:-1]:
        s = w * a + (1 - w) * ti
        vals = (1 - alphas) * s + alphas * tj
        lab, keep = _labels(vals, max(abs(a), tj, abs(s)))
        al, ex = alphas[keep], lab[keep]
        pos = np.where(ex > 0)[0]
        if pos.size == 0 or pos[0] == 0 or al[pos[0]] >= 1.0:
            continue
        lo, hi = al[pos[0] - 1], al[pos[0]]
        bz = tj * (hi - lo) / ((1 - lo) * 2 * math.sqrt(hi * (1 - hi)) * c_zeta)
        val = (bz + math.sqrt(w) * b0j) / math.sqrt(1 - w)
        if val < best_val:
            best_w, best_val = float(w), val
    if best_w is None:
        return 0.5 if 0.5 > w_min else (w_min + 1) / 2
    return best_w


@functools.lru_cache(maxsize=64)
def _schedule(r: int, n: int, mesh: ProbeMesh) -> tuple:
    return tuple(_build_schedule(r, n, mesh))


def probe_schedule(r: int, n: int, mesh: ProbeMesh = ProbeMesh()) -> list[QueryBlock]:
    """All query blocks of the rank probe in schedule order.

    Basis states first, then one ``gamma`` block per ``j >= 1``, then one
    ``mu`` block per ordered pair ``i != j`` with ``i, j >= 1``.
    """
    return list(_schedule(r, n, mesh))


def _build_schedule(r: int, n: int, mesh: ProbeMesh) -> list[QueryBlock]:
    dim = 2**n
    tdiag = _target_diag(r, n)
    a = tdiag[0]
    alphas, thetas = mesh.alphas, mesh.thetas
    c_zeta = 1 - LAMBDA * mesh.effective_zeta / 2
    blocks = [QueryBlock("basis", dim, 0, 0, 1.0, thetas, alphas, np.where(tdiag >= 0, 1, -1), np.ones(dim, bool))]
    b0 = np.ones(dim)
    for j in range(1, dim):
        vals = (1 - alphas) * a + alphas * tdiag[j]
        lab, keep = _labels(vals, max(abs(a), tdiag[j]))
        blk = QueryBlock("gamma", dim, 0, j, 1.0, thetas, alphas, lab, keep)
        blocks.append(blk)
        am, ap = blk.crossing()
        if 0 < am and ap < 1:
            b0[j] = abs(a) * (ap - am) / (am * 2 * math.sqrt(ap * (1 - ap)) * c_zeta)
    for i in range(1, dim):
        for j in range(1, dim):
            if i == j:
                continue
            w = _mu_weight(a, tdiag[i], tdiag[j], alphas, c_zeta, b0[j])
            s = w * a + (1 - w) * tdiag[i]
            vals = (1 - alphas) * s + alphas * tdiag[j]
            lab, keep = _labels(vals, max(abs(a), tdiag[j], abs(s)))
            blocks.append(QueryBlock("mu", dim, i, j, w, thetas, alphas, lab, keep))
    return blocks


@dataclass
class ProbeQueries:
    blocks: list
    query_count: int

    def __iter__(self) -> Iterator[tuple[PureState, int]]:
        for b in self.blocks:
            for psi, lab in zip(b.states(), b.expected_labels()):
                yield PureState(psi / np.linalg.norm(psi)), int(lab)


def probe_queries(r: int, n: int, mesh: ProbeMesh = ProbeMesh()) -> ProbeQueries:
    """The probe's ordered queries with expected labels (iterate for ``(state, label)``)."""
    blocks = probe_schedule(r, n, mesh)
    return ProbeQueries(blocks, sum(b.size for b in blocks))


# --------------------------------------------------------------------------
# blackboxes


def batched(fn: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Mark ``fn`` as mapping an ``(k, 2^n)`` amplitude array to ``k`` labels."""
    fn.batched = True
    return fn


def classifier_blackbox(o: HermitianOperator, d: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ``sign(Tr[O |psi><psi|] - d)`` over rows of amplitudes."""
    m = o.matrix

    @batched
    def predict(states: np.ndarray) -> np.ndarray:
        vals = np.einsum("ki,ij,kj->k", states.conj(), m, states).real - d
        return np.where(vals >= 0, 1, -1)

    return predict


def pointwise_blackbox(fn: Callable[[PureState], int]) -> Callable[[np.ndarray], np.ndarray]:
    """Adapt a single-state predictor to the batched interface."""

    @batched
    def predict(states: np.ndarray) -> np.ndarray:
        return np.array([fn(PureState(s / np.linalg.norm(s))) for s in states])

    return predict


# --------------------------------------------------------------------------
# tomography probe


@dataclass
class Certificate:
    agrees: bool
    rank_lower_bound: int
    first_disagreement: dict | None = None
    gershgorin_discs: list = field(default_factory=list)  # (center, radius) per row of O_eff
    entry_bounds: dict = field(default_factory=dict)
    query_count: int = 0
    mesh: dict = field(default_factory=dict)
    note: str | None = None

    def to_json(self) -> dict:
        return {
            "agrees": self.agrees,
            "rank_lower_bound": self.rank_lower_bound,
            "first_disagreement": self.first_disagreement,
            "gershgorin_discs": [[c, r] for c, r in self.gershgorin_discs],
            "entry_bounds": self.entry_bounds,
            "query_count": self.query_count,
            "mesh": self.mesh,
            "note": self.note,
        }


def _first_disagreement(blackbox, blocks) -> dict | None:
    for b in blocks:
        states = b.states()
        observed = np.asarray(blackbox(states)).reshape(-1)
        expected = b.expected_labels()
        bad = np.nonzero(observed != expected)[0]
        if bad.size:
            k = int(bad[0])
            psi = states[k]
            return {
                "query": b.describe(k),
                "state": {"dim": b.dim, "re": psi.real.tolist(), "im": psi.imag.tolist()},
                "expected": int(expected[k]),
                "observed": int(observed[k]),
            }
    return None


@dataclass
class _Bounds:
    lo: np.ndarray  # diagonal lower bounds
    hi: np.ndarray  # diagonal upper bounds
    off: np.ndarray  # symmetric matrix of bounds on |O_ij|


def _entry_bounds(blocks: list, r: int, n: int, zeta: float) -> _Bounds:
    """Bounds on normalized ``O_eff`` implied by agreement on every query."""
    dim = 2**n
    tdiag = _target_diag(r, n)
    a = tdiag[0]
    c_zeta = 1 - LAMBDA * zeta / 2
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    lo[0] = hi[0] = a
    off = np.full((dim, dim), np.inf)
    np.fill_diagonal(off, 0.0)
    for b in blocks:
        if b.kind != "gamma":
            continue
        am, ap = b.crossing()
        j = b.j
        if am <= 0 or ap >= 1:
            continue
        hi[j] = (1 - am) * abs(a) / am
        lo[j] = (1 - ap) * abs(a) / ap
        gap = ap - am
        off[0, j] = off[j, 0] = abs(a) * gap / (am * 2 * math.sqrt(ap * (1 - ap)) * c_zeta)
    zb = {}
    for b in blocks:
        if b.kind != "mu":
            continue
        am, ap = b.crossing()
        if am <= 0 or ap >= 1 or not np.isfinite(hi[b.j]):
            continue
        gap = ap - am
        zb[(b.i, b.j)] = (max(hi[b.j], 0.0) * gap / ((1 - am) * 2 * math.sqrt(ap * (1 - ap)) * c_zeta), b.weight)
    for (i, j), (z, w) in zb.items():
        bound = (z + math.sqrt(w) * off[0, j]) / math.sqrt(1 - w)
        # both orientations (i, j) and (j, i) bound the same modulus
        off[i, j] = off[j, i] = min(off[i, j], bound)
    return _Bounds(lo, hi, off)


def _components(intervals: list[tuple[float, float]]) -> list[list[int]]:
    order = sorted(range(len(intervals)), key=lambda k: intervals[k][0])
    comps, cur, right = [], [], -np.inf
    for k in order:
        lo, hi = intervals[k]
        if cur and lo > right:
            comps.append(cur)
            cur, right = [], -np.inf
        cur.append(k)
        right = max(right, hi)
    if cur:
        comps.append(cur)
    return comps


def certify_from_bounds(bounds: _Bounds, r: int, n: int, mesh: ProbeMesh) -> tuple[int, list, dict]:
    """Check the entry tolerances, build discs and return the certified rank bound."""
    dim = 2**n
    tdiag = _target_diag(r, n)
    delta, delta_p, delta_pp = mesh.tolerances(n)
    b0 = bounds.off[0, 1:]
    diag_dev = np.maximum(bounds.hi[1:] - tdiag[1:], tdiag[1:] - bounds.lo[1:])
    inner = bounds.off[1:, 1:][~np.eye(dim - 1, dtype=bool)] if dim > 2 else np.zeros(0)
    summary = {
        "max_first_row": float(b0.max(initial=0.0)),
        "max_diagonal_deviation": float(diag_dev.max(initial=0.0)),
        "max_inner_offdiagonal": float(inner.max(initial=0.0)),
        "delta": delta,
        "delta_prime": delta_p,
        "delta_dprime": delta_pp,
    }
    if not np.all(b0 < delta):
        raise InconclusiveError(f"|O_0j| bound {summary['max_first_row']:.4g} not below delta={delta:.4g}", "delta")
    if not np.all(diag_dev < delta_p):
        raise InconclusiveError(
            f"|O_jj - T_jj| bound {summary['max_diagonal_deviation']:.4g} not below delta'={delta_p:.4g}", "delta_prime"
        )
    if inner.size and not np.all(inner < delta_pp):
        raise InconclusiveError(
            f"|O_ij| bound {summary['max_inner_offdiagonal']:.4g} not below delta''={delta_pp:.4g}", "delta_dprime"
        )
    discs, intervals = [], []
    for k in range(dim):
        radius = float(np.sum(bounds.off[k]) - bounds.off[k, k])
        c_lo, c_hi = bounds.lo[k], bounds.hi[k]
        discs.append(((c_lo + c_hi) / 2, (c_hi - c_lo) / 2 + radius))
        intervals.append((c_lo - radius, c_hi + radius))
    comps = _components(intervals)
    largest = max(len(c) for c in comps)
    summary["disc_components"] = [sorted(c) for c in comps]
    return dim - largest, discs, summary


def tomography_probe(blackbox, r: int, n: int, mesh: ProbeMesh = ProbeMesh(), refine: bool = True) -> Certificate:
    """Query ``blackbox`` on the probe schedule and certify ``rank >= r`` on agreement.

    ``blackbox`` is a predictor ``PureState -> +-1``, or a callable marked with
    :func:`batched` that labels an ``(k, 2^n)`` array of amplitudes at once.
    The first disagreement in schedule order is returned as the witness. On
    full agreement the entry bounds are derived from the labels; if the mesh
    is too coarse one refinement (halving both steps) is attempted before
    raising :class:`InconclusiveError`. The refinement halves only ``xi`` when
    halving both would exceed the query budget.

    With ``r = 2^n`` labels determine ``O`` only up to adding a multiple of the
    identity, and shifting by one of its eigenvalues removes one rank; the
    certified bound is then ``2^n - 1`` and ``note`` says so.
    """
    if not getattr(blackbox, "batched", False):
        blackbox = pointwise_blackbox(blackbox)
    first = probe_schedule(r, n, mesh)
    count = sum(b.size for b in first)
    if count > QUERY_BUDGET:
        raise BudgetError(f"probe schedule needs {count} queries, budget is {QUERY_BUDGET}")
    attempts = [(mesh, first, count)]
    last_error = None
    k = total = 0
    while k < len(attempts):
        msh, blocks, count = attempts[k]
        total += count
        mesh_info = {"xi": msh.xi, "zeta": msh.effective_zeta, "refinements": k, "total_queries": total}
        bad = _first_disagreement(blackbox, blocks)
        if bad is not None:
            return Certificate(False, 0, bad, query_count=count, mesh=mesh_info)
        bounds = _entry_bounds(blocks, r, n, msh.effective_zeta)
        try:
            rank_lb, discs, summary = certify_from_bounds(bounds, r, n, msh)
        except InconclusiveError as exc:
            last_error = exc
            if refine and k == 0:
                attempts.append(_refinement(msh, r, n))
            k += 1
            continue
        note = None
        if rank_lb < r:
            note = (
                f"labels fix O only up to O + cI; with r = 2^n the certified bound is {rank_lb}"
                if r == 2**n
                else f"disc overlap limits the certified bound to {rank_lb}"
            )
        return Certificate(True, min(rank_lb, r), None, discs, summary, count, mesh_info, note)
    raise last_error


def _refinement(mesh: ProbeMesh, r: int, n: int):
    """Halve both steps, or only ``xi`` when that is what fits the budget."""
    for cand in (mesh.refined(), mesh.refined(zeta=False)):
        blocks = probe_schedule(r, n, cand)
        count = sum(b.size for b in blocks)
        if count <= QUERY_BUDGET:
            return cand, blocks, count
    raise BudgetError(f"refined probe schedule needs {count} queries, budget is {QUERY_BUDGET}")


def random_low_rank_classifier(k: int, n: int, rng: np.random.Generator, near: int | None = None) -> tuple[HermitianOperator, float]:
    """A random observable of rank ``k`` with a random threshold.

    With ``near=r`` the classifier is an adversarial perturbation of the rank-``r``
    target: one of the target's isolated eigenvalues is moved onto the
    degenerate level, the eigenbasis is slightly rotated and the whole
    observable is shifted so that level becomes the kernel (rank ``r - 1``).
    """
    dim = 2**n
    if near is None:
        vals = np.zeros(dim)
        vals[:k] = rng.normal(size=k) * rng.uniform(0.5, 5.0)
        u = random_unitary(dim, rng)
        return HermitianOperator(u @ np.diag(vals) @ u.conj().T), float(rng.normal())
    r = near
    t_eff = _target_diag(r, n)
    level = t_eff[-1] if r < dim else t_eff[rng.integers(0, dim)]
    vals = t_eff.copy()
    movable = [i for i in range(dim) if vals[i] != level]
    vals[rng.choice(movable)] = level
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (h + h.conj().T) / 2
    eps = 10 ** rng.uniform(-4, -1)
    u = _expm_herm(h, eps)
    o = u @ np.diag(vals - level) @ u.conj().T
    scale = rng.uniform(0.5, 3.0)
    return HermitianOperator(scale * o), float(-scale * level)


def _expm_herm(h, t):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def hard_dataset_for_rank(r: int, n: int, size: int, seed=0, mesh: ProbeMesh = ProbeMesh(xi=1 / 16, zeta=2 * math.pi / 16)) -> LabeledDataset:
    """Probe queries labeled by the rank-``r`` target, subsampled to ``size`` examples.

    Basis states are always kept; the rest are drawn uniformly without
    replacement from the remaining schedule.
    """
    sched = probe_queries(r, n, mesh)
    pairs = list(sched)
    basis, rest = pairs[: 2**n], pairs[2**n :]
    rng = np.random.default_rng(seed)
    take = max(0, min(size - len(basis), len(rest)))
    pick = sorted(rng.choice(len(rest), size=take, replace=False)) if take else []
    chosen = basis + [rest[k] for k in pick]
    return LabeledDataset(tuple(s for s, _ in chosen), tuple(l for _, l in chosen))


# --------------------------------------------------------------------------
# linear classifiers as quantum classifiers


def normalize_feature_map(phi: Callable, M: float) -> Callable:
    """``x -> (phi(x)/M, sqrt(1 - ||phi(x)||^2 / M^2))``, a unit-norm feature map."""
    if not (M > 0 and math.isfinite(M)):
        raise InvalidInputError("M must be positive and finite")

    def mapped(x):
        f = np.asarray(phi(x), dtype=float).reshape(-1)
        nrm = float(np.linalg.norm(f))
        if nrm > M * (1 + 1e-12):
            raise PreconditionError(f"feature norm {nrm} exceeds the declared bound M={M}")
        tail = math.sqrt(max(0.0, 1 - (nrm / M) ** 2))
        return np.append(f / M, tail)

    return mapped


def transport_linear(w, b: float, M: float) -> tuple[np.ndarray, float]:
    """Weights and bias for the normalized map: ``w' = (w, 0)``, ``b' = b / M``."""
    return np.append(np.asarray(w, dtype=float), 0.0), b / M


@dataclass(frozen=True)
class QuantumEmbedding:
    """Rank-one quantum classifier reproducing ``sign(<w, f>)`` on unit ``f``."""

    n_qubits: int
    observable: HermitianOperator
    threshold: float
    feature_dim: int

    @property
    def anchor(self) -> int:
        """Basis index of the reference vector outside the feature support."""
        return self.feature_dim

    def _unnormalized(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float).reshape(-1)
        if f.shape[0] != self.feature_dim:
            raise InvalidInputError("feature vector has the wrong length")
        if abs(np.linalg.norm(f) - 1) > 1e-10:
            raise PreconditionError("feature vectors must have unit norm")
        v = np.zeros(2**self.n_qubits, dtype=complex)
        v[: self.feature_dim] = f
        v[self.anchor] = 1.0
        return v

    def state(self, f) -> PureState:
        return PureState(self._unnormalized(f) / math.sqrt(2))

    def decision_value(self, f) -> float:
        # O is rank one, so Tr[O rho] = |<w'|v>|^2 / 2 with v = |f> + |anchor>;
        # evaluating on v avoids rounding 1/sqrt(2)^2 and keeps ties exact
        v = self._unnormalized(f)
        return float(np.vdot(v, self.observable.matrix @ v).real) / 2 - self.threshold

    def predict(self, f) -> int:
        return 1 if self.decision_value(f) >= 0 else -1


def embed_linear_as_quantum(w) -> QuantumEmbedding:
    """Embed the homogeneous classifier ``sign(<w, f>)`` on unit vectors ``f``.

    Uses ``n = ceil(log2 N) + 1`` qubits, the state ``(|f> + |anchor>)/sqrt(2)``,
    ``O = |w'><w'|`` with ``|w'> = |w> + ||w|| |anchor>`` and threshold ``||w||^2 / 2``.
    """
    w = np.asarray(w, dtype=float).reshape(-1)
    N = w.shape[0]
    n = max(1, math.ceil(math.log2(N)) + 1) if N > 1 else 1
    if 2**n < N + 1:
        n += 1
    wn = float(np.linalg.norm(w))
    wp = np.zeros(2**n, dtype=complex)
    wp[:N] = w
    wp[N] = wn
    return QuantumEmbedding(n, HermitianOperator(np.outer(wp, wp.conj())), wn**2 / 2, N)


@dataclass(frozen=True)
class LinearChain:
    """A bounded-feature linear classifier realized as a rank-one quantum classifier."""

    phi: Callable
    M: float
    embedding: QuantumEmbedding
    feature: Callable

    def predict(self, x) -> int:
        return self.embedding.predict(self.feature(x))

    def decision_value(self, x) -> float:
        return self.embedding.decision_value(self.feature(x))


def linear_to_quantum(phi: Callable, M: float, w, b: float) -> LinearChain:
    """Compose normalization, bias removal and the rank-one embedding.

    ``sign(<w, phi(x)> - b)`` equals ``sign(<w', u(x)>)`` where ``u(x)`` is the
    normalized feature ``f(x)`` with the bias folded in as ``(f(x), 1)/sqrt(2)``
    and ``w' = (w, 0, -b/M)``.
    """
    unit = normalize_feature_map(phi, M)
    w1, b1 = transport_linear(w, b, M)

    def feature(x):
        return np.append(unit(x), 1.0) / math.sqrt(2)

    return LinearChain(phi, M, embed_linear_as_quantum(np.append(w1, -b1)), feature)


# --------------------------------------------------------------------------
# margin witness dataset and classical view of quantum features


def margin_dataset(m: int, n: int, eta: float) -> tuple[LabeledDataset, HermitianOperator, float]:
    """Basis projectors ``|0>..|m/2-1>`` labeled +1 and ``|m/2>..|m-1>`` labeled -1.

    The witness ``eta/sqrt(m) * (sum_+ |i><i| - sum_- |i><i|)`` has Frobenius norm
    ``eta`` and margin ``eta/sqrt(m)`` on every example at threshold 0.
    """
    if m % 2 or not 2 <= m <= 2**n:
        raise InvalidInputError(f"m must be even with 2 <= m <= {2**n}")
    if eta <= 0:
        raise InvalidInputError("eta must be positive")
    dim = 2**n
    items, labels = [], []
    diag = np.zeros(dim)
    for i in range(m):
        y = 1 if i < m // 2 else -1
        items.append(PureState.basis(i, dim).projector())
        labels.append(y)
        diag[i] = y * eta / math.sqrt(m)
    return LabeledDataset(tuple(items), tuple(labels)), HermitianOperator(np.diag(diag).astype(complex)), 0.0


def quantum_as_classical_features(spec: FeatureMapSpec) -> Callable:
    """``x -> coordinates of rho(x)`` in the orthonormal Pauli basis of ``R^{4^n}``."""

    def features(x):
        return hermitian_basis_coords(density(spec, x))

    return features
