"""Input checks shared by the estimators and the command line."""
from __future__ import annotations

import numbers

import numpy as np
from scipy import sparse

from .graph import Graph

MODES = ("auto", "exact", "sdp")


def check_graph(X) -> Graph:
    """Accept a ``Graph`` or a symmetric 0/1 adjacency matrix (dense or sparse)."""
    if isinstance(X, Graph):
        return X
    if sparse.issparse(X):
        X = X.toarray()
    A = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square adjacency matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ValueError("graph must have at least one vertex")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if (A != A.T).any():
        raise ValueError("adjacency matrix must be symmetric")
    if np.diag(A).any():
        raise ValueError("self-loops are not allowed")
    u, v = np.nonzero(np.triu(A, 1))
    return Graph(A.shape[0], tuple(zip(u.tolist(), v.tolist())))


def check_scalar_in(name, value, low, high, low_closed=False, high_closed=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise TypeError(f"{name} must be a finite real number, got {value!r}")
    ok_low = value >= low if low_closed else value > low
    ok_high = value <= high if high_closed else value < high
    if not (ok_low and ok_high):
        lb = "[" if low_closed else "("
        rb = "]" if high_closed else ")"
        raise ValueError(f"{name}={value} outside {lb}{low}, {high}{rb}")
    return float(value)


def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def check_positive_int(name, value, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
