"""Sparse canonical correlation analysis with one-step de-biased inference."""

import json
import os
from pathlib import Path

import numpy as np

_schemas = Path(__file__).resolve().parent / "schemas"
if _schemas.is_dir():
    os.environ.setdefault("SCCA_SCHEMA_DIR", str(_schemas))

from ._scca import (  # noqa: E402
    DegenerateRunError,
    NumericalError,
    ValidationError,
    ci_squared,
    fdr_adjust,
    fit_colar,
    invert_nodewise,
    oracle_check,
    oracle_matrices,
    schema_dir,
    simulate_dataset,
    standardize_columns,
    test_zero,
)
from . import _scca

__all__ = [
    "DegenerateRunError",
    "NumericalError",
    "ValidationError",
    "ci_squared",
    "fdr_adjust",
    "fit",
    "fit_colar",
    "invert_nodewise",
    "oracle_check",
    "oracle_matrices",
    "schema_dir",
    "simulate",
    "simulate_dataset",
    "standardize_columns",
    "test_zero",
]


def _matrix(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    return a


def fit(x, y, config=None, x_names=None, y_names=None):
    """Runs the full pipeline on observation-by-variable blocks.

    Returns the fit document (same layout as the CLI's fit.json) as a dict.
    `config` takes the keys of the fit config file other than the CSV paths.
    """
    text = _scca.fit_json(_matrix(x), _matrix(y), json.dumps(config or {}),
                          list(x_names or []), list(y_names or []))
    return json.loads(text)


def simulate(experiment, threads=None):
    """Runs a Monte Carlo experiment; returns the report document as a dict."""
    return json.loads(_scca.simulate_json(json.dumps(experiment), threads))
