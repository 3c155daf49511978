"""Quantum linear classifiers with rank- and norm-based capacity control."""

__version__ = "0.1.0"

from . import ansatz, bounds, constructions, featuremap, model, oracle, qcore
from .errors import (
    BudgetError,
    DimensionError,
    DivergenceError,
    InconclusiveError,
    InfeasibleError,
    InvalidInputError,
    NotSeparatingError,
    PreconditionError,
    QlinError,
    SchemaError,
)

__all__ = [
    "__version__",
    "ansatz",
    "bounds",
    "constructions",
    "featuremap",
    "model",
    "oracle",
    "qcore",
    "BudgetError",
    "DimensionError",
    "DivergenceError",
    "InconclusiveError",
    "InfeasibleError",
    "InvalidInputError",
    "NotSeparatingError",
    "PreconditionError",
    "QlinError",
    "SchemaError",
]
