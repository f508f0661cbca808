import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgrafs import _backend, _kernels_py
from fgrafs.quaternion import segment_quaternions

compiled = pytest.importorskip("fgrafs._kernels")


def test_backend_selected():
    assert _backend.BACKEND in ("python", "cython")


@given(N=st.integers(1, 80), seed=st.integers(0, 2**32 - 1), scale=st.floats(0.0, 3.0))
def test_cumulative_agree(N, seed, scale):
    rng = np.random.default_rng(seed)
    seg = segment_quaternions(scale * rng.standard_normal(N), scale * rng.standard_normal(N))
    a = _kernels_py.cumulative_quaternions(seg)
    b = compiled.cumulative_quaternions(seg)
    assert np.abs(a - b).max() <= 1e-13


@given(N=st.integers(1, 60), R=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_noisy_final_agree(N, R, seed):
    rng = np.random.default_rng(seed)
    ax, ay = rng.standard_normal(N), rng.standard_normal(N)
    beta = 0.3 * rng.standard_normal((R, 3, N))
    beta[0, :, 0] = 0.0
    a = _kernels_py.noisy_final_quaternions(ax, ay, beta)
    b = compiled.noisy_final_quaternions(ax, ay, beta)
    assert np.abs(a - b).max() <= 1e-13


@given(L=st.integers(1, 50), seed=st.integers(0, 2**32 - 1), decay=st.floats(0.0, 0.999))
def test_ou_agree(L, seed, decay):
    rng = np.random.default_rng(seed)
    beta0 = rng.standard_normal((2, 3))
    w = rng.standard_normal((2, 3, L))
    a = _kernels_py.ou_recursion(beta0, w, decay, 0.7)
    b = compiled.ou_recursion(beta0, w, decay, 0.7)
    assert np.abs(a - b).max() <= 1e-13


def test_read_only_inputs():
    seg = segment_quaternions(np.ones(5), np.zeros(5))
    seg.setflags(write=False)
    np.testing.assert_allclose(compiled.cumulative_quaternions(seg), _kernels_py.cumulative_quaternions(seg))
