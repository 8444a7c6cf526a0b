import numpy as np
import pytest

from ciln.data.synthetic import SyntheticSpec, synth_lightfield
from ciln.models.ciln import CilnConfig

TINY_MODEL = {'d': 8, 'n_res_blocks': 1, 'mlp_hidden': 16, 'mlp_layers': 2}

def numerical_gradient(func, array, h=1e-4, indices=None):
    """Central differences of the scalar func() with respect to entries of array (modified in place)"""
    grad = np.zeros_like(array, dtype=np.float64)
    if indices is None:
        indices = list(np.ndindex(array.shape))
    for idx in indices:
        original = array[idx]
        array[idx] = original + h
        plus = func()
        array[idx] = original - h
        minus = func()
        array[idx] = original
        grad[idx] = (plus - minus) / (2 * h)
    return grad

def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return np.linalg.norm(analytic - numeric) / scale

@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture
def small_lf():
    """3x3 views of 16x16, smooth texture with disparity 0.5"""
    return synth_lightfield(SyntheticSpec(M=3, N=3, H=16, W=16, disparity=0.5, texture_seed=7))

@pytest.fixture
def flat_lf():
    """7x7 views of 16x16 with zero disparity"""
    return synth_lightfield(SyntheticSpec(M=7, N=7, H=16, W=16, disparity=0.0, texture_seed=3))

@pytest.fixture
def tiny_config():
    return CilnConfig(v=4, c=3, grid=(3, 3), **TINY_MODEL)
