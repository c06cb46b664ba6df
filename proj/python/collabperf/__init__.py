"""Collaborative performance prediction for LLM benchmark scores."""

from ._core import (
    CollabperfError,
    Dataset,
    InputError,
    benchmark,
    fit_curve,
    predict_curve,
    run_cli,
    version,
)

__all__ = [
    "CollabperfError",
    "Dataset",
    "InputError",
    "benchmark",
    "fit_curve",
    "predict_curve",
    "run_cli",
    "version",
]
__version__ = version()
