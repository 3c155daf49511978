"""Complexity-measure bounds and the generalization bounds built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidInputError

# Every numeric constant used below, with the expression it comes from.
CONSTANTS = {
    "VC_COMPLEXITY": (62.0, "er_D(c) + 62*sqrt(k/m) + 3*sqrt(log(2/delta)/2m)"),
    "VC_CONFIDENCE": (3.0, "er_D(c) + 62*sqrt(k/m) + 3*sqrt(log(2/delta)/2m)"),
    "FAT_LOG_FACTOR": (34.0 * math.e, "k log(34em/k) log2(578m) + log(4/delta)"),
    "FAT_LOG2_FACTOR": (578.0, "k log(34em/k) log2(578m) + log(4/delta)"),
    "FAT_SCALE_DIVISOR": (16.0, "k = fat_F(gamma/16)"),
    "FAT_SHATTER_FACTOR": (9.0, "min{9 eta^2/gamma^2, N+1} + 1"),
}

VC_COMPLEXITY = CONSTANTS["VC_COMPLEXITY"][0]
VC_CONFIDENCE = CONSTANTS["VC_CONFIDENCE"][0]
FAT_LOG_FACTOR = CONSTANTS["FAT_LOG_FACTOR"][0]
FAT_LOG2_FACTOR = CONSTANTS["FAT_LOG2_FACTOR"][0]
FAT_SCALE_DIVISOR = CONSTANTS["FAT_SCALE_DIVISOR"][0]
FAT_SHATTER_FACTOR = CONSTANTS["FAT_SHATTER_FACTOR"][0]


@dataclass
class BoundReport:
    kind: str
    inputs: dict
    value: float
    components: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "inputs": dict(self.inputs), "value": self.value, "components": dict(self.components)}


def vc_bound(r: int) -> int:
    """``r^2 + 1`` for a family whose observables' images span dimension ``r``."""
    if r < 0:
        raise InvalidInputError("r must be non-negative")
    return int(r) ** 2 + 1


def fat_bound(eta: float, gamma: float, N: int) -> int:
    """``floor(min(9 eta^2 / gamma^2, N + 1)) + 1``."""
    if gamma <= 0:
        raise InvalidInputError("gamma must be positive")
    if eta <= 0:
        raise InvalidInputError("eta must be positive")
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    return int(math.floor(min(FAT_SHATTER_FACTOR * eta**2 / gamma**2, N + 1))) + 1


def _check_common(err: float, k: int, m: int, delta: float, name: str) -> None:
    if not 0.0 <= err <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1]")
    if k < 1 or m < 1:
        raise InvalidInputError("k and m must be >= 1")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError("delta must lie in (0, 1)")


def thm1_bound(train_err: float, k: int, m: int, delta: float) -> BoundReport:
    """VC-dimension bound ``err + 62 sqrt(k/m) + 3 sqrt(ln(2/delta) / 2m)``."""
    _check_common(train_err, k, m, delta, "train_err")
    complexity = VC_COMPLEXITY * math.sqrt(k / m)
    confidence = VC_CONFIDENCE * math.sqrt(math.log(2.0 / delta) / (2.0 * m))
    return BoundReport(
        "thm1",
        {"train_err": train_err, "k": k, "m": m, "delta": delta},
        train_err + complexity + confidence,
        {"training": train_err, "complexity": complexity, "confidence": confidence},
    )


def thm2_bound(margin_err: float, k: int, m: int, delta: float) -> BoundReport:
    """Fat-shattering bound; ``k`` must already be ``fat(gamma / 16)``.

    The square root couples the complexity and confidence parts, so the
    breakdown reports ``complexity = sqrt(2/m * (A + B)) * A / (A + B)`` and
    ``confidence`` as the remainder of the square root, where
    ``A = k ln(34 e m / k) log2(578 m)`` and ``B = ln(4 / delta)``.
    """
    _check_common(margin_err, k, m, delta, "margin_err")
    if k >= FAT_LOG_FACTOR * m:
        raise InvalidInputError("k must be below 34*e*m so that log(34em/k) > 0")
    a = k * math.log(FAT_LOG_FACTOR * m / k) * math.log2(FAT_LOG2_FACTOR * m)
    b = math.log(4.0 / delta)
    root = math.sqrt(2.0 / m * (a + b))
    complexity = root * a / (a + b)
    confidence = root - complexity
    return BoundReport(
        "thm2",
        {"margin_err": margin_err, "k": k, "m": m, "delta": delta},
        margin_err + root,
        {"training": margin_err, "complexity": complexity, "confidence": confidence},
    )


@dataclass(frozen=True)
class ModelStats:
    """What the SRM objective needs to know about a trained model.

    VC route: ``train_err`` and ``r``. Fat route: ``margin_err`` (at ``gamma``),
    ``eta``, ``gamma`` and ``n_qubits``.
    """

    m: int
    train_err: float | None = None
    r: int | None = None
    margin_err: float | None = None
    eta: float | None = None
    gamma: float | None = None
    n_qubits: int | None = None


def srm_objective(stats: ModelStats, kind: str, delta: float) -> BoundReport:
    if kind == "thm1":
        if stats.train_err is None or stats.r is None:
            raise InvalidInputError("thm1 needs train_err and r")
        rep = thm1_bound(stats.train_err, vc_bound(stats.r), stats.m, delta)
        rep.inputs["r"] = stats.r
        return rep
    if kind == "thm2":
        if None in (stats.margin_err, stats.eta, stats.gamma, stats.n_qubits):
            raise InvalidInputError("thm2 needs margin_err, eta, gamma and n_qubits")
        k = fat_bound(stats.eta, stats.gamma / FAT_SCALE_DIVISOR, 4**stats.n_qubits)
        rep = thm2_bound(stats.margin_err, k, stats.m, delta)
        rep.inputs.update(eta=stats.eta, gamma=stats.gamma, n_qubits=stats.n_qubits)
        return rep
    raise InvalidInputError(f"unknown bound kind {kind!r}")
