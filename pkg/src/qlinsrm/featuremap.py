"""Data encodings ``x -> |Phi(x)>`` and the fidelity kernel they induce."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError, SchemaError
from .qcore import MAX_QUBITS, DensityMatrix, PureState

KINDS = ("product-angle", "iqp-phase", "raw-amplitude")


@dataclass(frozen=True)
class FeatureMapSpec:
    """Which encoding circuit to use and on how many qubits.

    ``params`` is kind-specific. ``iqp-phase`` reads ``reps`` (number of
    Hadamard/phase blocks, default 1) and ``scale`` (multiplies every phase,
    default 1.0). The other kinds take no parameters.
    """

    kind: str
    n_qubits: int
    input_dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown feature map kind {self.kind!r}; expected one of {KINDS}")
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SchemaError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.input_dim < 1:
            raise SchemaError("input_dim must be positive")
        if self.kind in ("product-angle", "iqp-phase") and self.input_dim > self.n_qubits:
            raise SchemaError(f"{self.kind} needs input_dim <= n_qubits")
        if self.kind == "raw-amplitude" and self.input_dim > 2**self.n_qubits:
            raise SchemaError("raw-amplitude needs input_dim <= 2**n_qubits")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def to_json(self) -> dict:
        return {"kind": self.kind, "n_qubits": self.n_qubits, "input_dim": self.input_dim, "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureMapSpec":
        try:
            return cls(obj["kind"], int(obj["n_qubits"]), int(obj["input_dim"]), dict(obj.get("params", {})))
        except KeyError as exc:
            raise SchemaError(f"feature map is missing field {exc}") from None


def _check_input(spec: FeatureMapSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != spec.input_dim:
        raise DimensionError(f"input has length {x.shape[0]}, feature map expects {spec.input_dim}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("input has non-finite entries")
    return x


def _z_signs(n: int) -> np.ndarray:
    # signs[i, q] = eigenvalue of Z_q on basis state i (qubit 0 most significant)
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1 - 2 * bits


def _hadamard_all(psi: np.ndarray, n: int) -> np.ndarray:
    t = psi.reshape([2] * n)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    for q in range(n):
        t = np.moveaxis(np.tensordot(h, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def encode_amplitudes(spec: FeatureMapSpec, x) -> np.ndarray:
    """Amplitude vector of ``|Phi(x)>`` (unit norm up to rounding)."""
    x = _check_input(spec, x)
    n = spec.n_qubits
    if spec.kind == "product-angle":
        angles = np.zeros(n)
        angles[: x.shape[0]] = x
        psi = np.array([1.0 + 0j])
        for a in angles:
            psi = np.kron(psi, [np.cos(a / 2), np.sin(a / 2)])
        return psi
    if spec.kind == "iqp-phase":
        reps = int(spec.params.get("reps", 1))
        scale = float(spec.params.get("scale", 1.0))
        xs = np.zeros(n)
        xs[: x.shape[0]] = scale * x
        z = _z_signs(n)
        phase = z @ xs
        for i in range(n):
            for j in range(i + 1, n):
                phase = phase + xs[i] * xs[j] * z[:, i] * z[:, j]
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
        for _ in range(reps):
            psi = np.exp(1j * phase) * _hadamard_all(psi, n)
        return psi
    # raw-amplitude
    norm = np.linalg.norm(x)
    if norm == 0:
        raise InvalidInputError("raw-amplitude encoding of the zero vector")
    psi = np.zeros(2**n, dtype=complex)
    psi[: x.shape[0]] = x / norm
    return psi


def encode(spec: FeatureMapSpec, x) -> PureState:
    return PureState.normalized(encode_amplitudes(spec, x))


def density(spec: FeatureMapSpec, x) -> DensityMatrix:
    return encode(spec, x).projector()


def kernel(spec: FeatureMapSpec, x, x_prime) -> float:
    """Fidelity kernel ``|<Phi(x)|Phi(x')>|^2``."""
    a = encode(spec, x).amplitudes
    b = encode(spec, x_prime).amplitudes
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def encode_batch(spec: FeatureMapSpec, xs: Sequence) -> np.ndarray:
    """Rows are the encoded states of ``xs`` in order."""
    if len(xs) == 0:
        raise InvalidInputError("empty input list")
    return np.stack([encode(spec, x).amplitudes for x in xs])


def kernel_matrix(spec: FeatureMapSpec, xs: Sequence, ys: Sequence | None = None) -> np.ndarray:
    """Gram matrix of the fidelity kernel.

    With ``ys`` omitted the result is symmetric with an exact unit diagonal.
    """
    a = encode_batch(spec, xs)
    b = a if ys is None else encode_batch(spec, ys)
    k = np.abs(a.conj() @ b.T) ** 2
    if ys is None:
        k = (k + k.T) / 2
        np.fill_diagonal(k, 1.0)
    return np.minimum(k, 1.0)


def load_jsonl_dataset(path) -> tuple[list[np.ndarray], list[int]]:
    """Read ``{"x": [...], "y": +-1}`` records, one per line."""
    xs, ys = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                x = np.asarray(rec["x"], dtype=float)
                y = int(rec["y"])
            except (ValueError, KeyError, TypeError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad record ({exc})") from None
            if y not in (-1, 1):
                raise SchemaError(f"{path}:{lineno}: label must be +1 or -1")
            xs.append(x)
            ys.append(y)
    return xs, ys


def dump_jsonl_dataset(path, xs, ys) -> None:
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write(json.dumps({"x": [float(v) for v in np.asarray(x).reshape(-1)], "y": int(y)}) + "\n")
