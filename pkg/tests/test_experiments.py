import os
import json
import numpy as np
import pytest

from ciln.data.lightfield import ViewPattern
from ciln.examples.experiments import EXPERIMENTS, SCALES, irregular_patterns

EXPECTED_KEYS = {
    'overfit': ['novel_psnr_db', 'first_loss', 'last_loss'],
    'generalization': ['ciln_psnr_db', 'baseline_psnr_db', 'dense_query_finite', 'dense_query_input_psnr_db'],
    'ablation': ['full_4d', 'angular_only', 'l1_only'],
    'pixel_drop': ['drop_0', 'drop_0.5', 'drop_0.9', 'clean_psnr_db'],
    'spatial': ['x1', 'x2'],
    'irregular': ['views_2', 'views_3', 'views_4'],
    'epi_slope': ['disparity_0.5', 'disparity_1', 'disparity_1.5'],
}

def numbers(value):
    if isinstance(value, dict):
        for v in value.values():
            yield from numbers(v)
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        yield value

def test_every_experiment_has_expected_keys():
    assert sorted(EXPERIMENTS) == sorted(EXPECTED_KEYS)

@pytest.mark.parametrize('name', sorted(EXPERIMENTS))
def test_tiny_experiment_writes_results(tmp_path, name):
    EXPERIMENTS[name](SCALES['tiny'], str(tmp_path))
    with open(os.path.join(str(tmp_path), name, 'results.json')) as f:
        results = json.load(f)
    for key in EXPECTED_KEYS[name]:
        assert key in results, key
    criteria = results['criteria']
    assert criteria
    assert all(isinstance(ok, bool) for ok in criteria.values())
    values = list(numbers({k: v for k, v in results.items() if k != 'criteria'}))
    assert values
    assert np.all(np.isfinite(values))

@pytest.mark.parametrize('grid', [3, 7])
def test_irregular_patterns_fit_the_grid(grid):
    for views, spec in irregular_patterns(grid).items():
        pattern = ViewPattern.from_spec(spec, (grid, grid))
        pattern.check_bounds((grid, grid))
        assert pattern.v == views
