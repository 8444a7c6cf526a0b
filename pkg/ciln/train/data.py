### Training samples and the batch stream feeding the training loop

import os
import queue
import logging
import numpy as np
from threading import Thread
from concurrent.futures import ThreadPoolExecutor

from ..data.lightfield import sample_patch, select_views, angular_grid_coords, spatial_grid_coords
from ..data.degrade import downsample_views, drop_pixels
from ..util.rng import make_rng, split_seed
from ..util.utils import DataError

class TrainSample(object):
    """One training example.
        Attributes:
          input: ViewStack fed to the network (possibly downsampled and/or pixel-dropped)
          target: ground-truth patch [M*N, h, w, c], angular positions in row-major order
          target_coords: normalized (x, y, s, t) of every target pixel, [M*N, h, w, 4]
          grid: (M, N)
          seed: seed the sample was drawn with
          factor: downsampling factor applied to the input (1.0 if none)
          rate: pixel drop rate applied to the input (0.0 if none)
    """

    def __init__(self, input, target, target_coords, grid, seed, factor=1.0, rate=0.0):
        self.input = input
        self.target = target
        self.target_coords = target_coords
        self.grid = tuple(grid)
        self.seed = seed
        self.factor = factor
        self.rate = rate

    @property
    def height(self):
        return self.target.shape[1]

    @property
    def width(self):
        return self.target.shape[2]

    def angular_coords(self):
        return angular_grid_coords(*self.grid)

    def target_views(self):
        """Target as [M, N, h, w, c]"""
        return self.target.reshape(self.grid + self.target.shape[1:])

def target_coordinates(grid, height, width):
    xy = spatial_grid_coords(height, width, np.float32).reshape(height, width, 2)
    coords = np.zeros((grid[0] * grid[1], height, width, 4), dtype=np.float32)
    for i, (s, t) in enumerate(angular_grid_coords(*grid)):
        coords[i, :, :, :2] = xy
        coords[i, :, :, 2] = s
        coords[i, :, :, 3] = t
    return coords

def make_sample(lf, cfg, seed):
    if list(lf.grid) != list(cfg.target_grid):
        raise DataError("light field grid {} does not match the training grid {}".format(lf.grid, cfg.target_grid))
    rng = make_rng(seed)
    patch_h, patch_w = cfg.patch_size
    patch = sample_patch(lf, patch_h, patch_w, int(rng.integers(0, 2**31 - 1)))
    stack = select_views(patch, cfg.pattern())
    factor, rate = 1.0, 0.0
    if cfg.regime == 'flexible_spatial':
        factor = float(rng.uniform(*cfg.scale_range))
        stack = downsample_views(stack, factor)
    elif cfg.regime == 'pixel_drop':
        rate = float(rng.uniform(*cfg.drop_range))
        stack = drop_pixels(stack, rate, int(rng.integers(0, 2**31 - 1)))
    grid = patch.grid
    target = patch.views.reshape((grid[0] * grid[1],) + patch.views.shape[2:])
    return TrainSample(stack, target, target_coordinates(grid, patch_h, patch_w), grid, seed, factor, rate)

def default_threads():
    try:
        return max(1, int(os.environ.get('CILN_THREADS', '1')))
    except ValueError:
        logging.warning("ignoring non-integer CILN_THREADS={!r}".format(os.environ['CILN_THREADS']))
        return 1

class BatchLoader(object):
    """Deterministic stream of training batches.
        Scenes are visited in a seeded permutation per epoch; the k-th sample of the run
        is drawn with a seed derived from (cfg.seed, k), so a batch depends only on its step.
        Attributes:
          dataset: list of LightFields
          cfg: TrainConfig
          threads: sample-generation worker threads
          prefetch: batches buffered ahead of the consumer
    """

    def __init__(self, dataset, cfg, threads=None, prefetch=2):
        if not dataset:
            raise DataError("cannot train on an empty dataset")
        self.dataset = dataset
        self.cfg = cfg
        self.threads = default_threads() if threads is None else max(1, int(threads))
        self.prefetch = prefetch
        self._orders = {}

    def scene_index(self, k):
        n = len(self.dataset)
        epoch, position = divmod(k, n)
        if epoch not in self._orders:
            self._orders[epoch] = make_rng(self.cfg.seed, 1, epoch).permutation(n)
        return int(self._orders[epoch][position])

    def sample_seeds(self, step):
        first = step * self.cfg.batch_size
        return [ (self.scene_index(k), split_seed(self.cfg.seed, 2, k)) for k in range(first, first + self.cfg.batch_size) ]

    def make_batch(self, step, executor=None):
        jobs = self.sample_seeds(step)
        if executor is None:
            return [ make_sample(self.dataset[i], self.cfg, seed) for i, seed in jobs ]
        return list(executor.map(lambda job: make_sample(self.dataset[job[0]], self.cfg, job[1]), jobs))

    def generate_data(self, start, stop):
        """Yields (step, batch) for start <= step < stop, in order"""
        if self.threads == 1:
            for step in range(start, stop):
                yield step, self.make_batch(step)
            return
        preloader = BatchPreloader(self, start, stop)
        preloader.start()
        try:
            while True:
                item = preloader.batches.get()
                if item is None:
                    break
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            preloader.stop()

class BatchPreloader(Thread):
    """Builds batches ahead of the training loop on a thread pool"""

    def __init__(self, loader, start, stop):
        Thread.__init__(self)
        self.daemon = True
        self.loader = loader
        self.start_step = start
        self.stop_step = stop
        self.batches = queue.Queue(maxsize=max(1, loader.prefetch))
        self.should_stop = False

    def _put(self, item):
        while not self.should_stop:
            try:
                self.batches.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def run(self):
        with ThreadPoolExecutor(max_workers=self.loader.threads) as executor:
            try:
                for step in range(self.start_step, self.stop_step):
                    if self.should_stop:
                        return
                    logging.debug("preloading batch {}".format(step))
                    if not self._put((step, self.loader.make_batch(step, executor))):
                        return
            except Exception as e:
                self._put(e)
                return
        self._put(None)

    def stop(self):
        logging.debug("Stopping BatchPreloader")
        self.should_stop = True
