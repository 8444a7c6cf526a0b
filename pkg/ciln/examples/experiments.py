### Reference experiments on synthetic light fields.
#
#   python -m ciln.examples.experiments <name> [--tiny] [--out DIR]
#
# names: overfit, generalization, ablation, pixel_drop, spatial, irregular, epi_slope, all
# Each results.json carries a criteria block of pass/fail booleans.
# --tiny shrinks scenes, models and step counts to a smoke run.

import os
import sys
import json
import logging
import argparse
import numpy as np

from ciln.data.synthetic import SyntheticSpec, synth_lightfield, random_specs, max_disparity
from ciln.data.lightfield import extract_epi, angular_grid_coords
from ciln.evaluate.evaluation import EvalTask, evaluate_views, NearestViewBaseline
from ciln.evaluate.metrics import psnr, cap_psnr
from ciln.train.algo import TrainConfig
from ciln.train.loss import epi_gradient_loss
from ciln.train.process import train, write_log
from ciln.models.checkpoint import save_model
from ciln.util.logger import initialize_logger
from ciln.util.utils import ensure_directory

SCALES = {
    'desk': {'grid': 7, 'size': 64, 'patch': 32, 'train_scenes': 50, 'test_scenes': 10, 'steps': 3000,
             'overfit_steps': 5000, 'scale_range': [0.25, 1.0], 'spatial_factors': (1.0, 2.0, 3.3),
             'model_args': {}},
    'tiny': {'grid': 3, 'size': 16, 'patch': 16, 'train_scenes': 3, 'test_scenes': 2, 'steps': 5,
             'overfit_steps': 5, 'scale_range': [0.5, 1.0], 'spatial_factors': (1.0, 2.0),
             'model_args': {'d': 8, 'n_res_blocks': 1, 'mlp_hidden': 16}},
}

def make_suite(scale, seed):
    grid, size = scale['grid'], scale['size']
    specs = random_specs(scale['train_scenes'] + scale['test_scenes'], seed, M=grid, N=grid, H=size, W=size)
    scenes = [ synth_lightfield(s) for s in specs ]
    return scenes[:scale['train_scenes']], scenes[scale['train_scenes']:]

def train_config(scale, **overrides):
    options = {'target_grid': [scale['grid']] * 2, 'patch_size': [scale['patch']] * 2, 'steps': scale['steps'],
               'batch_size': 1, 'learning_rate': 5e-4, 'checkpoint_interval': max(1, scale['steps']),
               'log_interval': max(1, scale['steps'] // 20), 'scale_range': list(scale['scale_range']), 'model_args': dict(scale['model_args'])}
    options.update(overrides)
    return TrainConfig(**options)

def _save(out, name, model, history, results):
    directory = ensure_directory(os.path.join(out, name))
    if model is not None:
        save_model(model, os.path.join(directory, 'model.ciln'))
    if history is not None:
        write_log(history, os.path.join(directory, 'train_log.csv'))
    with open(os.path.join(directory, 'results.json'), 'w') as results_file:
        json.dump(results, results_file, indent=2, sort_keys=True, default=float)
    logging.info("{}: {}".format(name, results))
    failed = [ k for k, ok in results.get('criteria', {}).items() if not ok ]
    if failed:
        logging.warning("{}: criteria not met: {}".format(name, ', '.join(sorted(failed))))
    return results

def _non_increasing(values, tolerance):
    return all(b <= a + tolerance for a, b in zip(values, values[1:]))

def irregular_patterns(grid):
    """2-, 3- and 4-view sparse input patterns on a grid x grid light field"""
    last = grid - 1
    return {2: [[0, 0], [last, last]], 3: [[0, 0], [0, last], [last, grid // 2]], 4: 'corners'}

def overfit(scale, out, seed=0):
    """One scene, corner inputs: novel views should be reproduced almost exactly"""
    grid, size = scale['grid'], scale['size']
    spec = SyntheticSpec(M=grid, N=grid, H=size, W=size, disparity=min(0.8, max_disparity(grid, grid, size, size)), texture_seed=seed)
    scene = synth_lightfield(spec)
    cfg = train_config(scale, steps=scale['overfit_steps'], seed=seed,
                       checkpoint_interval=max(1, scale['overfit_steps']))
    model, history = train([scene], cfg)
    report = evaluate_views(model, [scene], EvalTask('corners', (grid, grid)))
    novel = cap_psnr(report.aggregate['psnr_db'])
    return _save(out, 'overfit', model, history, {'novel_psnr_db': novel,
                                                  'first_loss': history[0][1] if history else None,
                                                  'last_loss': history[-1][1] if history else None,
                                                  'criteria': {'novel_psnr_35db': novel >= 35.0}})

def generalization(scale, out, seed=0):
    """Suite training against the nearest-input-view baseline, plus an 8x8-style denser query"""
    train_set, test_set = make_suite(scale, seed)
    model, history = train(train_set, train_config(scale, seed=seed))
    grid = scale['grid']
    task = EvalTask('corners', (grid, grid))
    ours = evaluate_views(model, test_set, task)
    baseline = evaluate_views(NearestViewBaseline(), test_set, task)
    dense = grid + 1
    coords = angular_grid_coords(dense, dense)
    corners = [0, dense - 1, (dense - 1) * dense, dense * dense - 1]
    finite, input_psnr = True, []
    for lf in test_set:
        stack = task.build_input(lf)
        views = model.reconstruct(stack, lf.height, lf.width, coords)
        finite = finite and views.shape == (dense * dense, lf.height, lf.width, 3) and bool(np.all(np.isfinite(views)))
        inputs = stack.views()
        input_psnr += [ psnr(np.clip(views[k], 0, 1), inputs[i]) for i, k in enumerate(corners) ]
    ours, baseline = cap_psnr(ours.aggregate['psnr_db']), cap_psnr(baseline.aggregate['psnr_db'])
    reproduced = cap_psnr(float(np.mean(input_psnr)))
    return _save(out, 'generalization', model, history, {
        'ciln_psnr_db': ours, 'baseline_psnr_db': baseline,
        'dense_query_finite': finite, 'dense_query_input_psnr_db': reproduced,
        'criteria': {'beats_baseline_3db': ours >= baseline + 3.0, 'dense_query_finite': finite,
                     'inputs_reproduced_30db': reproduced >= 30.0}})

def ablation(scale, out, seed=0):
    """full_4d against angular_only coordinates, and combined against L1-only loss"""
    train_set, test_set = make_suite(scale, seed)
    grid = scale['grid']
    task = EvalTask('corners', (grid, grid))
    results = {}
    runs = {'full_4d': {}, 'angular_only': {'model': 'ciln_angular'}, 'l1_only': {'lambda_epi': 0.0}}
    for name, overrides in runs.items():
        model, history = train(train_set, train_config(scale, seed=seed, **overrides))
        report = evaluate_views(model, test_set, task)
        epi = []
        for lf in test_set:
            views = model.reconstruct(task.build_input(lf), lf.height, lf.width, angular_grid_coords(grid, grid))
            epi.append(epi_gradient_loss(views.reshape(lf.views.shape), lf.views).item())
        results[name] = {'psnr_db': cap_psnr(report.aggregate['psnr_db']), 'epi_loss': float(np.mean(epi))}
    results['criteria'] = {
        'full_4d_not_below_angular_only': results['full_4d']['psnr_db'] >= results['angular_only']['psnr_db'],
        'epi_loss_not_above_l1_only': results['full_4d']['epi_loss'] <= results['l1_only']['epi_loss']}
    return _save(out, 'ablation', None, None, results)

def pixel_drop(scale, out, seed=0, rates=(0.0, 0.5, 0.9)):
    """One pixel_drop-trained model scored at increasing drop rates, against a model trained on clean inputs"""
    train_set, test_set = make_suite(scale, seed)
    grid = scale['grid']
    model, history = train(train_set, train_config(scale, seed=seed, regime='pixel_drop'))
    results = {}
    for rate in rates:
        report = evaluate_views(model, test_set, EvalTask('corners', (grid, grid), drop_rate=rate, seed=seed))
        results['drop_{:g}'.format(rate)] = cap_psnr(report.aggregate['psnr_db'])
    clean, _ = train(train_set, train_config(scale, seed=seed))
    results['clean_psnr_db'] = cap_psnr(evaluate_views(clean, test_set, EvalTask('corners', (grid, grid))).aggregate['psnr_db'])
    sweep = [ results['drop_{:g}'.format(rate)] for rate in rates ]
    results['criteria'] = {'non_increasing_with_drop': _non_increasing(sweep, 0.2),
                           'no_drop_within_2db_of_clean': sweep[0] >= results['clean_psnr_db'] - 2.0}
    return _save(out, 'pixel_drop', model, history, results)

def spatial(scale, out, seed=0, factors=None):
    """One flexible_spatial-trained model reconstructing full resolution from shrunken inputs"""
    train_set, test_set = make_suite(scale, seed)
    grid = scale['grid']
    model, history = train(train_set, train_config(scale, seed=seed, regime='flexible_spatial'))
    results = {}
    factors = factors or scale['spatial_factors']
    for factor in factors:
        report = evaluate_views(model, test_set, EvalTask('corners', (grid, grid), spatial_factor=1.0 / factor))
        results['x{:g}'.format(factor)] = cap_psnr(report.aggregate['psnr_db'])
    sweep = [ results['x{:g}'.format(factor)] for factor in factors ]
    results['criteria'] = {'non_increasing_with_factor': _non_increasing(sweep, 0.2)}
    return _save(out, 'spatial', model, history, results)

def irregular(scale, out, seed=0):
    """One model per sparse input pattern; more input views should not reconstruct worse"""
    train_set, test_set = make_suite(scale, seed)
    grid = scale['grid']
    results = {}
    for views, pattern in sorted(irregular_patterns(grid).items()):
        model, _ = train(train_set, train_config(scale, seed=seed, input_pattern=pattern))
        report = evaluate_views(model, test_set, EvalTask(pattern, (grid, grid)))
        results['views_{}'.format(views)] = cap_psnr(report.aggregate['psnr_db'])
    sweep = [ results[k] for k in ('views_2', 'views_3', 'views_4') ]
    results['criteria'] = {'non_decreasing_with_views': _non_increasing(sweep[::-1], 0.2)}
    return _save(out, 'irregular', None, None, results)

def estimate_epi_slope(lf, rows=None):
    """Pixels of horizontal shift per angular step along the horizontal EPIs of the
        central angular row: circular cross-correlation summed over `rows` (all by
        default), peak refined by a parabola, lags fitted by least squares
    """
    s = lf.angular_rows // 2
    rows = range(lf.height) if rows is None else rows
    epis = np.stack([ extract_epi(lf, 'horizontal', s, y).mean(axis=2) for y in rows ])
    epis = epis - epis.mean(axis=2, keepdims=True)
    spectra = np.fft.fft(epis, axis=2)
    shifts = [0.0]
    for t in range(1, epis.shape[1]):
        corr = np.real(np.fft.ifft(spectra[:, t] * np.conj(spectra[:, 0]), axis=1)).sum(axis=0)
        k = int(np.argmax(corr))
        left, right = corr[k - 1], corr[(k + 1) % len(corr)]
        denom = left - 2 * corr[k] + right
        offset = 0.5 * (left - right) / denom if denom != 0 else 0.0
        lag = k + offset
        if lag > len(corr) / 2:
            lag -= len(corr)
        shifts.append(lag)
    return float(np.polyfit(np.arange(len(shifts)), shifts, 1)[0])

def epi_slope(scale, out, seed=0, disparities=(0.5, 1.0, 1.5)):
    results = {}
    for d in disparities:
        lf = synth_lightfield(SyntheticSpec(M=7, N=7, H=64, W=128, disparity=d, texture_seed=seed))
        results['disparity_{:g}'.format(d)] = estimate_epi_slope(lf)
    results['criteria'] = { 'disparity_{:g}_within_5pct'.format(d): abs(results['disparity_{:g}'.format(d)] - d) <= 0.05 * d
                            for d in disparities }
    return _save(out, 'epi_slope', None, None, results)

EXPERIMENTS = {'overfit': overfit, 'generalization': generalization, 'ablation': ablation,
               'pixel_drop': pixel_drop, 'spatial': spatial, 'irregular': irregular, 'epi_slope': epi_slope}

def main(argv=None):
    parser = argparse.ArgumentParser(description='reference experiments on synthetic light fields')
    parser.add_argument('name', choices=sorted(EXPERIMENTS) + ['all'])
    parser.add_argument('--tiny', action='store_true', help='smoke-run scale')
    parser.add_argument('--out', default='experiments', help='output folder')
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    initialize_logger(command='experiments')
    scale = SCALES['tiny' if args.tiny else 'desk']
    names = sorted(EXPERIMENTS) if args.name == 'all' else [args.name]
    return { name: EXPERIMENTS[name](scale, args.out, args.seed) for name in names }

if __name__ == '__main__':
    main()
