"""Dense complex linear algebra for small qubit registers.

Everything here is exact dense numerics on at most ``MAX_QUBITS`` qubits:
Hermitian operators with a cached spectrum, pure and mixed states, the
Frobenius geometry of ``Herm(C^{2^n})`` and its real coordinates in the
normalized Pauli basis.

Basis convention: qubit 0 is the leftmost tensor factor, so computational
basis index ``i`` has qubit 0 as its most significant bit.
"""

from __future__ import annotations

import json
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError

MAX_QUBITS = 6
DEFAULT_TAU = 1e-10
HERMITIAN_TOL = 1e-12

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = "IXYZ"


def _check_dim(dim: int) -> int:
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two")
    n = dim.bit_length() - 1
    if n > MAX_QUBITS:
        raise DimensionError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


class HermitianOperator:
    """Immutable dense Hermitian matrix with a lazily cached eigendecomposition.

    Matrices that are Hermitian up to ``HERMITIAN_TOL`` (scaled by the
    largest entry when that exceeds one) are symmetrized; anything further
    off is rejected.
    """

    __slots__ = ("matrix", "__dict__")

    def __init__(self, matrix):
        a = np.asarray(matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        _check_dim(a.shape[0])
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("matrix has non-finite entries")
        asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        scale = max(1.0, float(np.max(np.abs(a))))
        if asym > HERMITIAN_TOL * scale:
            raise InvalidInputError(f"matrix is not Hermitian (max |A - A^dag| = {asym:.3e})")
        self.matrix = _frozen((a + a.conj().T) / 2)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending real eigenvalues and orthonormal eigenvector columns."""
        w, v = np.linalg.eigh(self.matrix)
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig[0]

    @cached_property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def rank(self, tau: float = DEFAULT_TAU) -> int:
        return numerical_rank(self, tau)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_dim(self.dim, other.dim)
        return HermitianOperator(self.matrix + other.matrix)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_dim(self.dim, other.dim)
        return HermitianOperator(self.matrix - other.matrix)

    def __mul__(self, s: float) -> "HermitianOperator":
        return HermitianOperator(float(s) * self.matrix)

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, obj: dict) -> "HermitianOperator":
        return cls(matrix_from_json(obj))


class PureState:
    """Unit vector in ``C^{2^n}``."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes):
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        _check_dim(a.shape[0])
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("state has non-finite amplitudes")
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidInputError(f"state norm {norm!r} differs from 1")
        self.amplitudes = _frozen(a)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise InvalidInputError("cannot normalize the zero vector")
        return cls(a / norm)

    @classmethod
    def basis(cls, index: int, dim: int) -> "PureState":
        a = np.zeros(dim, dtype=complex)
        a[index] = 1.0
        return cls(a)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        _same_dim(self.dim, other.dim)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PureState":
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
        if re.shape != (obj["dim"],) or im.shape != re.shape:
            raise InvalidInputError("state JSON has inconsistent lengths")
        return cls(re + 1j * im)


class DensityMatrix:
    """Unit-trace positive semidefinite operator."""

    __slots__ = ("operator",)

    def __init__(self, matrix):
        op = matrix if isinstance(matrix, HermitianOperator) else HermitianOperator(matrix)
        tr = np.trace(op.matrix).real
        if abs(tr - 1.0) > 1e-10:
            raise InvalidInputError(f"density matrix trace {tr!r} differs from 1")
        if op.eigenvalues[0] < -1e-10:
            raise InvalidInputError(f"density matrix has eigenvalue {op.eigenvalues[0]!r} < 0")
        self.operator = op

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def dim(self) -> int:
        return self.operator.dim

    def to_json(self) -> dict:
        return self.operator.to_json()

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        return cls(matrix_from_json(obj))


def _same_dim(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, (HermitianOperator, DensityMatrix)):
        return x.matrix
    return np.asarray(x, dtype=complex)


def frobenius_inner(a, b) -> float:
    """Tr[a^dag b] for Hermitian arguments, returned as a real number."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    _same_dim(ma.shape[0], mb.shape[0])
    # Tr[A^dag B] = sum_ij conj(A_ij) B_ij
    return float(np.vdot(ma, mb).real)


def expectation(o, rho) -> float:
    """Tr[o rho]. ``rho`` may be a DensityMatrix or a PureState."""
    mo = _as_matrix(o)
    if isinstance(rho, PureState):
        _same_dim(mo.shape[0], rho.dim)
        psi = rho.amplitudes
        return float(np.vdot(psi, mo @ psi).real)
    mr = _as_matrix(rho)
    _same_dim(mo.shape[0], mr.shape[0])
    return float(np.einsum("ij,ji->", mo, mr).real)


def numerical_rank(o: HermitianOperator, tau: float = DEFAULT_TAU) -> int:
    """Count eigenvalues with ``|lambda| > tau * max|lambda|``."""
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    w = np.abs(o.eigenvalues)
    top = w.max(initial=0.0)
    if top == 0:
        return 0
    return int(np.count_nonzero(w > tau * top))


def image_basis(o: HermitianOperator, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Orthonormal columns spanning the numerical image of ``o``."""
    w, v = o.eig
    top = np.abs(w).max(initial=0.0)
    if top == 0:
        return np.zeros((o.dim, 0), dtype=complex)
    return v[:, np.abs(w) > tau * top]


def span_rank(vectors: np.ndarray, tau: float = DEFAULT_TAU) -> int:
    """Rank of the column span of ``vectors`` with a relative singular-value threshold."""
    if vectors.size == 0 or vectors.shape[1] == 0:
        return 0
    s = np.linalg.svd(vectors, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tau * s[0]))


def image_sum_dim(ops: Sequence[HermitianOperator], tau: float = DEFAULT_TAU) -> int:
    """Dimension of the sum of the images of ``ops``."""
    if not ops:
        return 0
    dim = ops[0].dim
    for o in ops:
        _same_dim(dim, o.dim)
    stacked = np.hstack([image_basis(o, tau) for o in ops])
    return span_rank(stacked, tau)


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as ``"XIZ"`` (qubit 0 first)."""
    if not label or any(ch not in _PAULI_1Q for ch in label):
        raise InvalidInputError(f"invalid Pauli string {label!r}")
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, _PAULI_1Q[ch])
    return out


def pauli_labels(n: int) -> list[str]:
    """All ``4^n`` Pauli strings in coordinate order."""
    labels = [""]
    for _ in range(n):
        labels = [s + p for s in labels for p in PAULI_LABELS]
    return labels


@lru_cache(maxsize=None)
def _local_transform() -> np.ndarray:
    # C[p, 2i + j] = P_p[j, i], so C @ vec(M) gives Tr[P_p M] for a 2x2 block M.
    c = np.zeros((4, 4), dtype=complex)
    for p, lab in enumerate(PAULI_LABELS):
        c[p] = _PAULI_1Q[lab].T.reshape(-1)
    return c


def _pauli_transform(m: np.ndarray) -> np.ndarray:
    dim = m.shape[0]
    n = dim.bit_length() - 1
    c = _local_transform()
    t = m.reshape([2] * (2 * n))
    for q in range(n):
        # remaining layout: (row qubits q..n-1, col qubits q..n-1, pauli axes 0..q-1)
        k = n - q
        t = np.moveaxis(t, k, 1)  # bring col_q next to row_q
        shape = t.shape
        t = (c @ t.reshape(4, -1)).reshape((4,) + shape[2:])
        t = np.moveaxis(t, 0, -1)
    return t.reshape(-1)


def hermitian_basis_coords(o) -> np.ndarray:
    """Real coordinates of ``o`` in the orthonormal basis ``{P / sqrt(2^n)}``.

    The map is a linear isometry from ``Herm(C^{2^n})`` with the Frobenius
    inner product onto ``R^{4^n}``.
    """
    m = _as_matrix(o)
    coeffs = _pauli_transform(m) / np.sqrt(m.shape[0])
    if coeffs.size and np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs))):
        raise InvalidInputError("operator is not Hermitian")
    return coeffs.real.copy()


def from_hermitian_basis_coords(coords: Sequence[float]) -> HermitianOperator:
    """Inverse of :func:`hermitian_basis_coords`."""
    coords = np.asarray(coords, dtype=float)
    n4 = coords.shape[0]
    n = 0
    while 4**n < n4:
        n += 1
    if 4**n != n4:
        raise DimensionError(f"{n4} is not a power of four")
    dim = 2**n
    # The transform is unitary up to the factor dim on the Pauli basis, so the
    # inverse is the adjoint scaled by 1/dim; apply it via the Pauli matrices.
    m = np.zeros((dim, dim), dtype=complex)
    for c, lab in zip(coords, pauli_labels(n)):
        if c != 0.0:
            m += c * pauli_matrix(lab)
    return HermitianOperator(m / np.sqrt(dim))


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.reshape(-1).tolist(), "im": m.imag.reshape(-1).tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed matrix JSON: {exc}") from None
    if re.shape != (dim * dim,) or im.shape != re.shape:
        raise InvalidInputError("matrix JSON has inconsistent lengths")
    return (re + 1j * im).reshape(dim, dim)


def load_operator(path) -> HermitianOperator:
    with open(path) as fh:
        return HermitianOperator.from_json(json.load(fh))


def diag(values: Iterable[float]) -> HermitianOperator:
    return HermitianOperator(np.diag(np.asarray(list(values), dtype=complex)))


def identity(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim, dtype=complex))


def random_hermitian(dim: int, rng: np.random.Generator) -> HermitianOperator:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator((a + a.conj().T) / 2)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng: np.random.Generator) -> PureState:
    return PureState.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))
