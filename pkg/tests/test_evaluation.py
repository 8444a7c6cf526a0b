import json
import numpy as np
import pandas as pd
import pytest

from ciln.data.synthetic import SyntheticSpec, synth_lightfield
from ciln.data.lightfield import ViewPattern, select_views, angular_grid_coords
from ciln.evaluate.metrics import luma, psnr, psnr_y, ssim, cap_psnr
from ciln.evaluate.evaluation import (EvalTask, EvalReport, novel_positions, evaluate_views, OracleModel,
                                      NearestViewBaseline, measure_runtime)
from ciln.models.ciln import init_model
from ciln.util.utils import ShapeError, UsageError, DataError

def test_psnr_examples(rng):
    a = np.zeros((4, 4, 3))
    assert psnr(a, a) == float('inf')
    assert psnr(a, np.full((4, 4, 3), 0.1)) == pytest.approx(20.0)
    assert psnr(a, np.full((4, 4, 3), 1.0)) == pytest.approx(0.0)
    with pytest.raises(ShapeError):
        psnr(a, np.zeros((4, 4, 1)))
    assert cap_psnr(float('inf')) == 99.0
    assert cap_psnr(31.5) == 31.5

def test_luma_and_psnr_y():
    image = np.zeros((2, 2, 3))
    image[..., 1] = 1.0
    np.testing.assert_allclose(luma(image), 0.587)
    gray = np.full((2, 2, 3), 0.5)
    # equal luma, different colour
    shifted = gray.copy()
    shifted[..., 0] += 0.114 * 0.1
    shifted[..., 2] -= 0.299 * 0.1
    assert psnr_y(gray, shifted) > 100.0
    assert psnr(gray, shifted) < 60.0
    with pytest.raises(ShapeError):
        luma(np.zeros((2, 2, 2)))

def test_ssim_properties(rng):
    a = rng.uniform(0, 1, (24, 24, 3))
    assert ssim(a, a) == pytest.approx(1.0)
    noisy = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
    very_noisy = np.clip(a + rng.normal(0, 0.3, a.shape), 0, 1)
    assert ssim(a, noisy) < 1.0
    assert ssim(a, very_noisy) < ssim(a, noisy)
    assert ssim(a, noisy) == pytest.approx(ssim(noisy, a))
    with pytest.raises(ShapeError):
        ssim(np.zeros((10, 10)), np.zeros((10, 10)))

def test_eval_task():
    task = EvalTask('corners', (3, 3), spatial_factor=0.5, drop_rate=0.2, seed=4)
    assert novel_positions(task) == [1, 3, 4, 5, 7]
    assert task.describe() == 'corners->3x3 factor=0.5 drop=0.2'
    assert task.get_config()['target_grid'] == [3, 3]
    listed = EvalTask([[0, 0], [2, 2]], (3, 3))
    assert listed.describe() == '[[0, 0], [2, 2]]->3x3 factor=1 drop=0'
    with pytest.raises(UsageError):
        EvalTask(spatial_factor=0.0)
    with pytest.raises(UsageError):
        EvalTask(drop_rate=1.5)

def test_build_input_degrades():
    lf = synth_lightfield(SyntheticSpec(M=3, N=3, H=32, W=32, disparity=0.5, texture_seed=1))
    stack = EvalTask('corners', (3, 3), spatial_factor=0.5, drop_rate=0.3, seed=2).build_input(lf, 1)
    assert stack.data.shape == (12, 16, 16)
    assert stack.mask is not None
    again = EvalTask('corners', (3, 3), spatial_factor=0.5, drop_rate=0.3, seed=2).build_input(lf, 1)
    np.testing.assert_array_equal(stack.mask, again.mask)
    with pytest.raises(DataError):
        EvalTask('corners', (7, 7)).build_input(lf)

def test_oracle_scores_perfectly(small_lf, flat_lf):
    small_task = EvalTask('corners', (3, 3))
    report = evaluate_views(OracleModel(), [small_lf], small_task, names=['toy'])
    assert report.aggregate['psnr_db'] == float('inf')
    assert report.aggregate['ssim'] == pytest.approx(1.0)
    assert len(report.per_view) == 5
    assert report.per_view[0]['scene'] == 'toy'
    frame = report.to_frame()
    assert list(frame.columns) == ['scene', 'task', 'psnr_db', 'ssim', 'psnr_y_db']
    assert frame['psnr_db'].iloc[-1] == 99.0
    assert frame['scene'].iloc[-1] == 'aggregate'

def test_oracle_refuses_off_grid_queries(small_lf):
    oracle = OracleModel()
    stack = select_views(small_lf, ViewPattern.from_name('corners', small_lf.grid))
    with pytest.raises(UsageError):
        oracle.reconstruct(stack, 16, 16, [(0.0, 0.0)])
    oracle.bind(small_lf)
    with pytest.raises(UsageError):
        oracle.reconstruct(stack, 16, 16, [(0.5, 0.0)])
    with pytest.raises(ShapeError):
        oracle.reconstruct(stack, 8, 8, [(0.0, 0.0)])

def test_zero_disparity_baseline_is_exact(flat_lf):
    report = evaluate_views(NearestViewBaseline(), [flat_lf], EvalTask('corners', (7, 7)))
    assert report.aggregate['psnr_db'] == float('inf')

def test_baseline_is_imperfect_with_parallax():
    lf = synth_lightfield(SyntheticSpec(M=3, N=3, H=32, W=32, disparity=1.5, texture_seed=6))
    report = evaluate_views(NearestViewBaseline(), [lf], EvalTask('corners', (3, 3)))
    assert 5.0 < report.aggregate['psnr_db'] < 60.0

def test_baseline_upsamples_small_inputs():
    lf = synth_lightfield(SyntheticSpec(M=3, N=3, H=32, W=32, disparity=0.0, texture_seed=6))
    stack = EvalTask('corners', (3, 3), spatial_factor=0.5).build_input(lf)
    views = NearestViewBaseline().reconstruct(stack, 32, 32, angular_grid_coords(3, 3))
    assert views.shape == (9, 32, 32, 3)

def test_report_files(tmp_path, small_lf):
    report = evaluate_views(OracleModel(), [small_lf, small_lf], EvalTask('corners', (3, 3)))
    report.write_csv(str(tmp_path / 'report.csv'))
    report.write_json(str(tmp_path / 'report.json'), timing=False)
    frame = pd.read_csv(str(tmp_path / 'report.csv'))
    assert list(frame['scene']) == ['scene_000', 'scene_001', 'aggregate']
    with open(str(tmp_path / 'report.json')) as f:
        data = json.load(f)
    assert 'timing' not in data
    assert data['aggregate']['scenes'] == 2
    assert data['aggregate']['psnr_db'] == 99.0
    assert 'timing' in report.to_dict()

def test_empty_report_aggregates_to_nan():
    report = EvalReport(EvalTask('corners', (3, 3)), [], [], {})
    assert np.isnan(report.aggregate['psnr_db'])
    assert report.aggregate['scenes'] == 0

def test_untrained_model_evaluates(tiny_config, small_lf):
    model = init_model(tiny_config, seed=0)
    report = evaluate_views(model, [small_lf], EvalTask('corners', (3, 3)))
    assert np.isfinite(report.aggregate['psnr_db'])
    assert len(report.timing['scene_ms']) == 1

def test_measure_runtime(tiny_config, small_lf):
    model = init_model(tiny_config, seed=0)
    stack = select_views(small_lf, ViewPattern.from_name('corners', small_lf.grid))
    stats = measure_runtime(model, stack, 16, 16, angular_grid_coords(3, 3), repeats=3)
    assert stats.mean_ms > 0
    assert stats.std_ms >= 0
    assert stats.output.shape == (9, 16, 16, 3)
    with pytest.raises(ValueError):
        measure_runtime(model, stack, 16, 16, [(0.0, 0.0)], repeats=1)

def test_psnr_is_symmetric_and_falls_with_noise(rng):
    a = rng.uniform(0, 1, (12, 12, 3))
    noise = rng.standard_normal(a.shape)
    assert psnr(a, a + 0.05 * noise) == psnr(a + 0.05 * noise, a)
    values = [ psnr(a, a + amplitude * noise) for amplitude in (0.01, 0.05, 0.1) ]
    assert values[0] > values[1] > values[2]

def test_psnr_of_known_mse():
    a = np.full((8, 8, 3), 0.4)
    # MSE 0.0025
    assert psnr(a, a + 0.05) == pytest.approx(26.0206, abs=1e-4)

def test_ssim_of_inverted_binary_image_is_negative():
    y, x = np.mgrid[0:24, 0:24]
    binary = (((y // 4) + (x // 4)) % 2).astype(np.float64)
    assert ssim(binary, 1.0 - binary) < 0.0

def test_ssim_of_constant_images_matches_closed_form():
    c1 = 0.01 ** 2
    expected = (2 * 0.5 * 0.6 + c1) / (0.5 ** 2 + 0.6 ** 2 + c1)
    assert expected == pytest.approx(0.98361, abs=1e-5)
    assert ssim(np.full((16, 16, 3), 0.5), np.full((16, 16, 3), 0.6)) == pytest.approx(expected, abs=1e-9)
