"""Hot array kernels with a numba fast path and a pure-numpy fallback.

The solver spends most of its time gathering cell rows for face loops and
scattering face contributions back onto cells.  Both patterns are provided
here twice: an ``@njit`` loop and a numpy equivalent (``np.add.at`` for the
scatter, fancy indexing for the gather).  The two backends are bitwise
identical because they accumulate in the same order.

Backend selection: environment variable ``FVGRAD_NUMBA`` ("1" default, "0"
forces the numpy fallback).  ``use_numba()`` reports the active backend and
``benchmarks/kernel_benchmark.py`` compares both.
"""

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def use_numba():
    """True when the njit backend is active (numba importable and not disabled)."""
    return _HAVE_NUMBA and os.environ.get("FVGRAD_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# scatter-add of rows: out[idx[k], :] += vals[k, :]
# ---------------------------------------------------------------------------

@njit(cache=True)
def _scatter_add_rows_nb(out, idx, vals):
    for k in range(idx.shape[0]):
        i = idx[k]
        for c in range(vals.shape[1]):
            out[i, c] += vals[k, c]
    return out


def _scatter_add_rows_np(out, idx, vals):
    np.add.at(out, idx, vals)
    return out


def scatter_add_rows(idx, vals, n_rows):
    """Accumulate vals (K, C) into a fresh (n_rows, C) array at row indices idx."""
    out = np.zeros((n_rows, vals.shape[1]), dtype=vals.dtype)
    if use_numba():
        return _scatter_add_rows_nb(out, idx, vals)
    return _scatter_add_rows_np(out, idx, vals)


# ---------------------------------------------------------------------------
# row gather: out[k, :] = src[idx[k], :]
# ---------------------------------------------------------------------------

@njit(cache=True)
def _gather_rows_nb(src, idx):
    out = np.empty((idx.shape[0], src.shape[1]), dtype=src.dtype)
    for k in range(idx.shape[0]):
        i = idx[k]
        for c in range(src.shape[1]):
            out[k, c] = src[i, c]
    return out


def gather_rows(src, idx):
    """Row gather src[idx] for 2-D src; falls back to fancy indexing."""
    if use_numba() and src.ndim == 2:
        return _gather_rows_nb(src, idx)
    return src[idx]


def warmup():
    """Trigger njit compilation so timed runs do not pay the JIT cost."""
    if not use_numba():
        return
    idx = np.array([0, 1, 0], dtype=np.int64)
    vals = np.ones((3, 4))
    _scatter_add_rows_nb(np.zeros((2, 4)), idx, vals)
    _gather_rows_nb(vals, idx)
