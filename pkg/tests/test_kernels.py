import numpy as np
import pytest

from fvgrad import kernels


@pytest.fixture
def scatter_case(rng):
    idx = rng.integers(0, 40, size=300)
    vals = rng.normal(size=(300, 4))
    return idx, vals


def test_backends_bitwise_equal_scatter(scatter_case, monkeypatch):
    idx, vals = scatter_case
    monkeypatch.setenv("FVGRAD_NUMBA", "1")
    a = kernels.scatter_add_rows(idx, vals, 40)
    monkeypatch.setenv("FVGRAD_NUMBA", "0")
    b = kernels.scatter_add_rows(idx, vals, 40)
    assert (a == b).all()


def test_backends_bitwise_equal_gather(scatter_case, monkeypatch):
    idx, vals = scatter_case
    monkeypatch.setenv("FVGRAD_NUMBA", "1")
    a = kernels.gather_rows(vals, idx)
    monkeypatch.setenv("FVGRAD_NUMBA", "0")
    b = kernels.gather_rows(vals, idx)
    assert (a == b).all()


def test_scatter_matches_loop_oracle(scatter_case):
    idx, vals = scatter_case
    out = kernels.scatter_add_rows(idx, vals, 40)
    expect = np.zeros((40, 4))
    for k, i in enumerate(idx):
        expect[i] += vals[k]
    np.testing.assert_allclose(out, expect, rtol=0, atol=1e-15)


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("FVGRAD_NUMBA", "0")
    assert not kernels.use_numba()
    monkeypatch.delenv("FVGRAD_NUMBA")
    assert kernels.use_numba()


def test_warmup_runs():
    kernels.warmup()
