"""Parameterized circuits ``W(theta)`` with controllable measured-column span.

Three families restrict how far the first ``l`` columns of ``W(theta)`` can
wander as ``theta`` varies (block-controlled, Pauli-rotation product and
permutation-symmetry preserving); a hardware-efficient ansatz is included as
the contrast case with no such restriction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError, SchemaError
from .qcore import DEFAULT_TAU, MAX_QUBITS, pauli_matrix, span_rank

TWO_PI = 2 * np.pi


def _rz(a: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * a), 0], [0, np.exp(0.5j * a)]])


def _ry(b: float) -> np.ndarray:
    c, s = np.cos(b / 2), np.sin(b / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _euler(a: float, b: float, c: float) -> np.ndarray:
    return _rz(a) @ _ry(b) @ _rz(c)


def pauli_exp(theta: float, p: np.ndarray) -> np.ndarray:
    """``exp(i theta P)`` for a Pauli string matrix ``P`` (uses ``P^2 = I``)."""
    return np.cos(theta) * np.eye(p.shape[0]) + 1j * np.sin(theta) * p


def _check_pauli(label: str, n: int) -> str:
    if len(label) != n or any(ch not in "IXYZ" for ch in label):
        raise SchemaError(f"Pauli string {label!r} is not a length-{n} word over IXYZ")
    return label


@dataclass(frozen=True)
class BlockControlled:
    """Control register of ``c`` qubits selecting a ``t``-qubit unitary per block.

    Each active block carries a product of Euler rotations ``RZ RY RZ`` on
    every target qubit. ``blocks`` lists the active control values; the
    others apply the identity. ``None`` activates all ``2^c`` blocks.
    """

    c: int
    t: int
    blocks: tuple | None = None
    variant: str = field(default="block-controlled", init=False)

    def __post_init__(self):
        if self.c < 0 or self.t < 0 or not 1 <= self.c + self.t <= MAX_QUBITS:
            raise SchemaError("block-controlled needs c, t >= 0 and 1 <= c + t <= 6")
        if self.blocks is not None:
            object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
            if any(not 0 <= b < 2**self.c for b in self.blocks):
                raise SchemaError("block index out of range")

    @property
    def n_qubits(self) -> int:
        return self.c + self.t

    @property
    def active(self) -> tuple:
        return tuple(range(2**self.c)) if self.blocks is None else self.blocks

    @property
    def parameter_count(self) -> int:
        return 3 * self.t * len(self.active)


@dataclass(frozen=True)
class PauliProduct:
    """``W(theta) = exp(i theta_d P_d) ... exp(i theta_1 P_1)``."""

    paulis: tuple
    variant: str = field(default="pauli-product", init=False)

    def __post_init__(self):
        object.__setattr__(self, "paulis", tuple(self.paulis))
        if not self.paulis:
            raise SchemaError("pauli-product needs at least one Pauli string")
        n = len(self.paulis[0])
        if not 1 <= n <= MAX_QUBITS:
            raise SchemaError("Pauli strings must act on 1..6 qubits")
        for p in self.paulis:
            _check_pauli(p, n)

    @property
    def n_qubits(self) -> int:
        return len(self.paulis[0])

    @property
    def parameter_count(self) -> int:
        return len(self.paulis)


@dataclass(frozen=True)
class PermSymmetric:
    """Layers of partition-wise symmetric rotations.

    ``layers[k][j] = (kind, pauli)`` with ``kind`` in ``{"sum", "prod"}``
    picks ``exp(i theta sum_{q in I_j} P_q)`` or ``exp(i theta prod_{q in I_j} P_q)``
    on partition ``I_j``; one shared angle per partition per layer.
    Partitions are consecutive qubit blocks of the given sizes.
    """

    partitions: tuple
    layers: tuple
    variant: str = field(default="perm-symmetric", init=False)

    def __post_init__(self):
        object.__setattr__(self, "partitions", tuple(int(m) for m in self.partitions))
        layers = tuple(tuple((str(k), str(p)) for k, p in layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if not self.partitions or any(m < 1 for m in self.partitions):
            raise SchemaError("partitions must be positive sizes")
        if not 1 <= sum(self.partitions) <= MAX_QUBITS:
            raise SchemaError("partition sizes must sum to 1..6 qubits")
        if not layers:
            raise SchemaError("perm-symmetric needs depth >= 1")
        for layer in layers:
            if len(layer) != len(self.partitions):
                raise SchemaError("each layer needs one generator per partition")
            for kind, p in layer:
                if kind not in ("sum", "prod") or p not in ("X", "Y", "Z", "I"):
                    raise SchemaError(f"bad generator ({kind!r}, {p!r})")

    @classmethod
    def alternating(cls, partitions: Sequence[int], depth: int) -> "PermSymmetric":
        """Layers cycling through ``(sum X), (prod Z), (sum Y), (prod X)``."""
        cycle = [("sum", "X"), ("prod", "Z"), ("sum", "Y"), ("prod", "X")]
        layers = [[cycle[k % 4]] * len(partitions) for k in range(depth)]
        return cls(tuple(partitions), tuple(tuple(l) for l in layers))

    @property
    def n_qubits(self) -> int:
        return sum(self.partitions)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def parameter_count(self) -> int:
        return self.depth * len(self.partitions)


@dataclass(frozen=True)
class HardwareEfficient:
    """``depth`` layers of per-qubit ``RY`` then ``RZ`` followed by a CNOT chain."""

    n: int
    depth: int
    variant: str = field(default="hardware-efficient", init=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS or self.depth < 1:
            raise SchemaError("hardware-efficient needs 1 <= n <= 6 and depth >= 1")

    @property
    def n_qubits(self) -> int:
        return self.n

    @property
    def parameter_count(self) -> int:
        return 2 * self.n * self.depth


AnsatzSpec = Union[BlockControlled, PauliProduct, PermSymmetric, HardwareEfficient]


def _kron_all(mats) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def _cnot_chain(n: int) -> np.ndarray:
    dim = 2**n
    perm = np.arange(dim)
    for q in range(n - 1):
        ctrl = 1 << (n - 1 - q)
        tgt = 1 << (n - 2 - q)
        perm = np.where(perm & ctrl, perm ^ tgt, perm)
    m = np.zeros((dim, dim), dtype=complex)
    m[perm, np.arange(dim)] = 1.0
    return m


def _partition_generator(spec: PermSymmetric, j: int, kind: str, p: str) -> tuple[str, ...]:
    start = sum(spec.partitions[:j])
    n = spec.n_qubits
    qubits = range(start, start + spec.partitions[j])
    if kind == "prod":
        word = ["I"] * n
        for q in qubits:
            word[q] = p
        return ("".join(word),)
    words = []
    for q in qubits:
        word = ["I"] * n
        word[q] = p
        words.append("".join(word))
    return tuple(words)


def unitary(spec: AnsatzSpec, theta) -> np.ndarray:
    """Dense matrix of ``W(theta)``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != spec.parameter_count:
        raise InvalidInputError(f"expected {spec.parameter_count} parameters, got {theta.shape[0]}")
    n = spec.n_qubits
    dim = 2**n
    if isinstance(spec, BlockControlled):
        bd = 2**spec.t
        w = np.eye(dim, dtype=complex)
        k = 0
        for b in spec.active:
            rots = []
            for _ in range(spec.t):
                rots.append(_euler(*theta[k : k + 3]))
                k += 3
            w[b * bd : (b + 1) * bd, b * bd : (b + 1) * bd] = _kron_all(rots)
        return w
    if isinstance(spec, PauliProduct):
        w = np.eye(dim, dtype=complex)
        for th, p in zip(theta, spec.paulis):
            w = pauli_exp(th, pauli_matrix(p)) @ w
        return w
    if isinstance(spec, PermSymmetric):
        w = np.eye(dim, dtype=complex)
        k = 0
        for layer in spec.layers:
            for j, (kind, p) in enumerate(layer):
                # terms of a "sum" generator act on distinct qubits and commute
                for word in _partition_generator(spec, j, kind, p):
                    w = pauli_exp(theta[k], pauli_matrix(word)) @ w
                k += 1
        return w
    if isinstance(spec, HardwareEfficient):
        w = np.eye(dim, dtype=complex)
        ent = _cnot_chain(n)
        k = 0
        for _ in range(spec.depth):
            layer = _kron_all(_rz(theta[k + 2 * q + 1]) @ _ry(theta[k + 2 * q]) for q in range(n))
            k += 2 * n
            w = ent @ layer @ w
        return w
    raise SchemaError(f"unknown ansatz {spec!r}")


def r_bound(spec: AnsatzSpec, l: int) -> int:
    """Analytic bound on ``dim span{W(theta)|i> : i < l, all theta}``."""
    n = spec.n_qubits
    dim = 2**n
    if not 1 <= l <= dim:
        raise InvalidInputError(f"l must lie in [1, {dim}]")
    if isinstance(spec, BlockControlled):
        if l % (2**spec.t):
            raise InvalidInputError(f"block-controlled measurement needs l to be a multiple of 2^t = {2**spec.t}")
        return min(l, dim)
    if isinstance(spec, PauliProduct):
        return min(l * 4 ** len(spec.paulis), dim)
    if isinstance(spec, PermSymmetric):
        return min(l * prod(m + 1 for m in spec.partitions), dim)
    return dim


def column_span_dim_estimate(spec: AnsatzSpec, l: int, samples: int, tau: float = DEFAULT_TAU, seed=0) -> int:
    """Numerical rank of the first ``l`` columns over ``samples`` random parameter draws.

    Draw ``k`` uses its own child of ``SeedSequence(seed)``, so the first
    ``k`` draws do not depend on ``samples``.
    """
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    dim = 2**spec.n_qubits
    if not 1 <= l <= dim:
        raise InvalidInputError(f"l must lie in [1, {dim}]")
    children = np.random.SeedSequence(seed).spawn(samples)
    cols = []
    for child in children:
        theta = np.random.default_rng(child).uniform(0.0, TWO_PI, spec.parameter_count)
        cols.append(unitary(spec, theta)[:, :l])
    return span_rank(np.hstack(cols), tau)


def to_json(spec: AnsatzSpec) -> dict:
    if isinstance(spec, BlockControlled):
        return {"variant": spec.variant, "c": spec.c, "t": spec.t, "blocks": None if spec.blocks is None else list(spec.blocks)}
    if isinstance(spec, PauliProduct):
        return {"variant": spec.variant, "paulis": list(spec.paulis)}
    if isinstance(spec, PermSymmetric):
        return {"variant": spec.variant, "partitions": list(spec.partitions), "layers": [[list(g) for g in layer] for layer in spec.layers]}
    return {"variant": spec.variant, "n": spec.n, "depth": spec.depth}


def from_json(obj: dict) -> AnsatzSpec:
    v = obj.get("variant")
    try:
        if v == "block-controlled":
            return BlockControlled(int(obj["c"]), int(obj["t"]), obj.get("blocks"))
        if v == "pauli-product":
            return PauliProduct(tuple(obj["paulis"]))
        if v == "perm-symmetric":
            if "layers" in obj:
                return PermSymmetric(tuple(obj["partitions"]), tuple(tuple(tuple(g) for g in l) for l in obj["layers"]))
            return PermSymmetric.alternating(obj["partitions"], int(obj["depth"]))
        if v == "hardware-efficient":
            return HardwareEfficient(int(obj["n"]), int(obj["depth"]))
    except KeyError as exc:
        raise SchemaError(f"ansatz {v!r} is missing field {exc}") from None
    raise SchemaError(f"unknown ansatz variant {v!r}")
