### Novel-view evaluation, reference reconstructors and run-time measurement

import json
import time
import logging
from collections import namedtuple
import numpy as np
import pandas as pd

from .metrics import psnr, psnr_y, ssim, cap_psnr
from ..data.lightfield import ViewPattern, select_views, angular_grid_coords, normalize_coord
from ..data.degrade import downsample_views, drop_pixels
from ..train.tensor import interpolation_matrix
from ..util.monitor import Monitor
from ..util.rng import split_seed
from ..util.utils import DataError, ShapeError, UsageError

COORD_TOLERANCE = 1e-6

class EvalTask(object):
    """What an evaluation reconstructs from what.
        Attributes:
          input_pattern: view pattern preset name or list of [row, col] pairs
          target_grid: (M, N) angular grid of the ground truth
          spatial_factor: downsampling factor applied to the inputs, in (0,1]
          drop_rate: fraction of input pixels dropped
          seed: seed of the pixel drop masks
    """

    def __init__(self, input_pattern='corners', target_grid=(7, 7), spatial_factor=1.0, drop_rate=0.0, seed=0):
        self.input_pattern = input_pattern
        self.target_grid = tuple(int(g) for g in target_grid)
        self.spatial_factor = float(spatial_factor)
        self.drop_rate = float(drop_rate)
        self.seed = int(seed)
        if not (0.0 < self.spatial_factor <= 1.0):
            raise UsageError("spatial_factor must lie in (0,1], got {}".format(spatial_factor))
        if not (0.0 <= self.drop_rate <= 1.0):
            raise UsageError("drop_rate must lie in [0,1], got {}".format(drop_rate))

    def pattern(self):
        return ViewPattern.from_spec(self.input_pattern, self.target_grid)

    def describe(self):
        pattern = self.input_pattern if isinstance(self.input_pattern, str) else json.dumps(self.pattern().to_list())
        return "{}->{}x{} factor={:g} drop={:g}".format(pattern, self.target_grid[0], self.target_grid[1],
                                                         self.spatial_factor, self.drop_rate)

    def get_config(self):
        return {'input_pattern': self.input_pattern if isinstance(self.input_pattern, str) else self.pattern().to_list(),
                'target_grid': list(self.target_grid), 'spatial_factor': self.spatial_factor,
                'drop_rate': self.drop_rate, 'seed': self.seed}

    def build_input(self, lf, scene_index=0):
        """The degraded input stack of a ground-truth light field"""
        if tuple(lf.grid) != self.target_grid:
            raise DataError("scene grid {} does not match the task grid {}".format(lf.grid, self.target_grid))
        stack = select_views(lf, self.pattern())
        if self.spatial_factor < 1.0:
            stack = downsample_views(stack, self.spatial_factor)
        if self.drop_rate > 0.0:
            stack = drop_pixels(stack, self.drop_rate, split_seed(self.seed, scene_index))
        return stack

def novel_positions(task):
    """Row-major indices of the target grid positions that are not input views"""
    inputs = set(task.pattern().indices)
    M, N = task.target_grid
    return [ s * N + t for s in range(M) for t in range(N) if (s, t) not in inputs ]

class EvalReport(object):
    """Outcome of an evaluation.
        Attributes:
          task: the EvalTask
          per_scene: list of dicts with scene, psnr_db, psnr_y_db, ssim, views
          per_view: list of dicts with scene, s_idx, t_idx, psnr_db, psnr_y_db, ssim
          aggregate: dict of means over scenes
          timing: dict with total_s and per-scene reconstruction ms
    """

    def __init__(self, task, per_scene, per_view, timing):
        self.task = task
        self.per_scene = per_scene
        self.per_view = per_view
        self.timing = timing
        frame = pd.DataFrame(per_scene)
        self.aggregate = {'psnr_db': float(frame['psnr_db'].mean()) if len(frame) else float('nan'),
                          'psnr_y_db': float(frame['psnr_y_db'].mean()) if len(frame) else float('nan'),
                          'ssim': float(frame['ssim'].mean()) if len(frame) else float('nan'),
                          'scenes': len(frame)}

    def to_frame(self):
        """CSV table: scene,task,psnr_db,ssim,psnr_y_db with a final aggregate row"""
        rows = [ {'scene': r['scene'], 'psnr_db': r['psnr_db'], 'ssim': r['ssim'], 'psnr_y_db': r['psnr_y_db']}
                 for r in self.per_scene ]
        rows.append({'scene': 'aggregate', 'psnr_db': self.aggregate['psnr_db'],
                     'ssim': self.aggregate['ssim'], 'psnr_y_db': self.aggregate['psnr_y_db']})
        frame = pd.DataFrame(rows, columns=['scene', 'psnr_db', 'ssim', 'psnr_y_db'])
        frame.insert(1, 'task', self.task.describe())
        for column in ('psnr_db', 'psnr_y_db'):
            frame[column] = frame[column].map(cap_psnr)
        return frame

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False)

    def to_dict(self, timing=True):
        def capped(record):
            return { k: (cap_psnr(v) if k in ('psnr_db', 'psnr_y_db') else v) for k, v in record.items() }
        report = {'task': self.task.get_config(),
                  'per_scene': [ capped(r) for r in self.per_scene ],
                  'per_view': [ capped(r) for r in self.per_view ],
                  'aggregate': capped(self.aggregate)}
        if timing:
            report['timing'] = self.timing
        return report

    def write_json(self, path, timing=True):
        with open(path, 'w') as report_file:
            json.dump(self.to_dict(timing), report_file, indent=2, sort_keys=True)

def evaluate_views(model, dataset, task, names=None):
    """Reconstructs every scene of the dataset from the task's inputs and scores the novel views.
        model: anything with reconstruct(stack, H, W, angular_coords); bind(lf) is called first if present
    """
    names = names if names is not None else [ "scene_{:03d}".format(i) for i in range(len(dataset)) ]
    coords = angular_grid_coords(*task.target_grid)
    novel = novel_positions(task)
    if not novel:
        raise UsageError("task {} leaves no novel views to evaluate".format(task.describe()))
    M, N = task.target_grid
    per_scene, per_view, scene_ms = [], [], []
    start = time.time()
    for index, (name, lf) in enumerate(zip(names, dataset)):
        stack = task.build_input(lf, index)
        if hasattr(model, 'bind'):
            model.bind(lf)
        tic = time.time()
        recon = model.reconstruct(stack, lf.height, lf.width, coords)
        scene_ms.append((time.time() - tic) * 1000.0)
        if not np.all(np.isfinite(recon)):
            logging.warning("reconstruction of {} holds non-finite values".format(name))
        recon = np.clip(recon, 0.0, 1.0)
        views = []
        for position in novel:
            s, t = divmod(position, N)
            truth = lf.views[s, t]
            views.append({'scene': name, 's_idx': s, 't_idx': t, 'psnr_db': psnr(recon[position], truth),
                          'psnr_y_db': psnr_y(recon[position], truth), 'ssim': ssim(recon[position], truth)})
        per_view += views
        frame = pd.DataFrame(views)
        per_scene.append({'scene': name, 'psnr_db': float(frame['psnr_db'].mean()),
                          'psnr_y_db': float(frame['psnr_y_db'].mean()),
                          'ssim': float(frame['ssim'].mean()), 'views': len(views)})
        logging.info("{}: PSNR {:.2f} dB, SSIM {:.4f} over {} novel views".format(
            name, per_scene[-1]['psnr_db'], per_scene[-1]['ssim'], len(views)))
    timing = {'total_s': time.time() - start, 'scene_ms': scene_ms}
    return EvalReport(task, per_scene, per_view, timing)

def _match_grid(value, extent):
    for i in range(extent):
        if abs(normalize_coord(i, extent) - value) < COORD_TOLERANCE:
            return i
    return None

class OracleModel(object):
    """Returns the ground truth of the bound light field at grid positions"""

    def __init__(self):
        self.lf = None

    def bind(self, lf):
        self.lf = lf

    def reconstruct(self, stack, height, width, angular_coords):
        if self.lf is None:
            raise UsageError("OracleModel.reconstruct called before bind")
        if (height, width) != (self.lf.height, self.lf.width):
            raise ShapeError("the oracle only answers at the native {}x{} resolution".format(self.lf.height, self.lf.width))
        M, N = self.lf.grid
        out = []
        for s, t in angular_coords:
            i, j = _match_grid(s, M), _match_grid(t, N)
            if i is None or j is None:
                raise UsageError("the oracle only answers on its {}x{} grid, not at ({}, {})".format(M, N, s, t))
            out.append(self.lf.views[i, j])
        return np.stack(out).astype(np.float32)

class NearestViewBaseline(object):
    """Copies the input view nearest in (s,t), bilinearly resized to the requested extent"""

    def reconstruct(self, stack, height, width, angular_coords):
        inputs = np.array(stack.angular_coords())
        views = stack.views()
        if (height, width) != (stack.height, stack.width):
            ry = interpolation_matrix(stack.height, height)
            rx = interpolation_matrix(stack.width, width)
            views = np.einsum('ij,vjkc,lk->vilc', ry, views.astype(np.float64), rx)
        out = []
        for s, t in angular_coords:
            nearest = int(np.argmin(((inputs - np.array([s, t])) ** 2).sum(axis=1)))
            out.append(views[nearest])
        return np.stack(out).astype(np.float32)

RuntimeStats = namedtuple('RuntimeStats', ['mean_ms', 'std_ms', 'peak_mb', 'output'])

def measure_runtime(model, stack, height, width, angular_coords, repeats=10):
    """Wall-clock statistics of full reconstructions; one warm-up run is excluded"""
    if repeats < 2:
        raise ValueError("measure_runtime needs at least 2 repeats, got {}".format(repeats))
    model.reconstruct(stack, height, width, angular_coords)
    monitor = Monitor(sampling_rate=0.01)
    monitor.start_monitor()
    times = []
    try:
        for _ in range(repeats):
            tic = time.perf_counter()
            output = model.reconstruct(stack, height, width, angular_coords)
            times.append((time.perf_counter() - tic) * 1000.0)
    finally:
        monitor.stop_monitor()
    times = np.array(times)
    peak = monitor.get_peak_memory() or None
    logging.info("reconstruction: {:.1f} ms +- {:.2f} ms over {} runs".format(times.mean(), times.std(ddof=1), repeats))
    return RuntimeStats(float(times.mean()), float(times.std(ddof=1)), peak, output)
