### Light field data model, file formats, coordinates and EPI slices

import os
import json
import logging
from collections import namedtuple
import numpy as np
import imageio.v2 as imageio
import h5py

from ..util.utils import DataError, ShapeError, ensure_directory
from ..util.rng import make_rng

META_FILE = 'meta.json'
VIEW_FILE = 'view_r{row}_c{col}.png'

Coord4 = namedtuple('Coord4', ['x', 'y', 's', 't'])

class LightField(object):
    """Discrete 4D light field L[s,t,y,x,c].
        Attributes:
          views: float32 array [M,N,H,W,c] with values in [0,1]
    """

    def __init__(self, views):
        views = np.asarray(views, dtype=np.float32)
        if views.ndim != 5:
            raise ShapeError("light field views must be [M,N,H,W,c], got shape {}".format(views.shape))
        if min(views.shape) < 1:
            raise ShapeError("light field extents must be positive, got {}".format(views.shape))
        if not np.all(np.isfinite(views)) or views.min() < 0.0 or views.max() > 1.0:
            raise DataError("light field values must be finite and lie in [0,1]")
        self.views = views

    @property
    def angular_rows(self):
        return self.views.shape[0]

    @property
    def angular_cols(self):
        return self.views.shape[1]

    @property
    def grid(self):
        return self.views.shape[:2]

    @property
    def height(self):
        return self.views.shape[2]

    @property
    def width(self):
        return self.views.shape[3]

    @property
    def channels(self):
        return self.views.shape[4]

    def view(self, s_idx, t_idx):
        return self.views[s_idx, t_idx]

    def meta(self):
        return {"angular_rows": self.angular_rows, "angular_cols": self.angular_cols,
                "height": self.height, "width": self.width, "channels": self.channels}

    def __repr__(self):
        return "LightField({}x{} views of {}x{}x{})".format(self.angular_rows, self.angular_cols,
                                                            self.height, self.width, self.channels)

class ViewPattern(object):
    """Ordered selection of input views.
        Attributes:
          indices: list of (s_idx, t_idx) pairs, in channel-concatenation order
    """

    def __init__(self, indices):
        self.indices = [ (int(s), int(t)) for s, t in indices ]
        if not self.indices:
            raise ValueError("a view pattern needs at least one view")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("view pattern {} contains duplicates".format(self.indices))

    @property
    def v(self):
        return len(self.indices)

    def check_bounds(self, grid):
        rows, cols = grid
        for s, t in self.indices:
            if not (0 <= s < rows and 0 <= t < cols):
                raise DataError("view ({},{}) lies outside the {}x{} angular grid".format(s, t, rows, cols))

    def to_list(self):
        return [ [s, t] for s, t in self.indices ]

    @classmethod
    def from_name(cls, name, grid):
        """Named patterns: corners, center, cross"""
        rows, cols = grid
        last_r, last_c = rows - 1, cols - 1
        presets = {
            'corners': [(0, 0), (0, last_c), (last_r, 0), (last_r, last_c)],
            'center': [(last_r // 2, last_c // 2)],
            'cross': [(0, last_c // 2), (last_r // 2, 0), (last_r // 2, last_c), (last_r, last_c // 2)],
        }
        if name not in presets:
            raise ValueError("unknown view pattern {!r}, expected one of {}".format(name, sorted(presets)))
        return cls(presets[name])

    @classmethod
    def from_spec(cls, spec, grid):
        """Builds a pattern from a preset name, a JSON string or a list of pairs"""
        if isinstance(spec, ViewPattern):
            return spec
        if isinstance(spec, str):
            text = spec.strip()
            if text.startswith('['):
                return cls(json.loads(text))
            return cls.from_name(text, grid)
        return cls(spec)

    def __eq__(self, other):
        return isinstance(other, ViewPattern) and self.indices == other.indices

    def __repr__(self):
        return "ViewPattern({})".format(self.indices)

class ViewStack(object):
    """Selected views concatenated along channels, the network input.
        Attributes:
          data: float32 array [v*c, H, W]
          pattern: ViewPattern giving the channel block order
          source_grid: (M, N) of the light field the views came from
          mask: optional uint8 array [v, H, W], 1 where a pixel is valid
          channels: c
    """

    def __init__(self, data, pattern, source_grid, mask=None, channels=3):
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 3 or data.shape[0] != pattern.v * channels:
            raise ShapeError("stack data {} does not hold {} views of {} channels".format(data.shape, pattern.v, channels))
        if mask is not None:
            mask = np.asarray(mask, dtype=np.uint8)
            if mask.shape != (pattern.v,) + data.shape[1:]:
                raise ShapeError("mask shape {} does not match stack {}".format(mask.shape, data.shape))
        self.data = data
        self.pattern = pattern
        self.source_grid = tuple(source_grid)
        self.mask = mask
        self.channels = channels

    @property
    def v(self):
        return self.pattern.v

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    def views(self):
        """The stacked views as [v, H, W, c]"""
        return self.data.reshape(self.v, self.channels, self.height, self.width).transpose(0, 2, 3, 1)

    def valid_mask(self):
        if self.mask is None:
            return np.ones((self.v, self.height, self.width), dtype=np.uint8)
        return self.mask

    def network_input(self, mask_channels=False):
        """[v*c, H, W], or [v*(c+1), H, W] with the validity masks appended"""
        if not mask_channels:
            return self.data
        return np.concatenate([self.data, self.valid_mask().astype(np.float32)], axis=0)

    def angular_coords(self):
        """Normalized (s, t) positions of the input views on their source grid"""
        rows, cols = self.source_grid
        return [ (normalize_coord(s, rows), normalize_coord(t, cols)) for s, t in self.pattern.indices ]

def normalize_coord(index, grid_size):
    """Maps a (possibly fractional) grid index to [-1, 1]; corners map to -1 and +1"""
    if grid_size < 1:
        raise ValueError("grid size must be at least 1, got {}".format(grid_size))
    if grid_size == 1:
        return 0.0
    return -1.0 + 2.0 * index / (grid_size - 1)

def angular_grid_coords(rows, cols):
    """Row-major list of normalized (s, t) pairs of a rows x cols grid"""
    return [ (normalize_coord(s, rows), normalize_coord(t, cols)) for s in range(rows) for t in range(cols) ]

def spatial_grid_coords(height, width, dtype=np.float32):
    """[H*W, 2] array of normalized (x, y) per pixel, row-major"""
    xs = np.array([ normalize_coord(j, width) for j in range(width) ], dtype=np.float64)
    ys = np.array([ normalize_coord(i, height) for i in range(height) ], dtype=np.float64)
    grid_x, grid_y = np.meshgrid(xs, ys)
    return np.stack([grid_x.ravel(), grid_y.ravel()], axis=1).astype(dtype)

def select_views(lf, pattern):
    pattern.check_bounds(lf.grid)
    blocks = [ lf.views[s, t].transpose(2, 0, 1) for s, t in pattern.indices ]
    return ViewStack(np.concatenate(blocks, axis=0), pattern, lf.grid, mask=None, channels=lf.channels)

def extract_epi(lf, orientation, fixed_angular, fixed_spatial):
    """Horizontal EPIs fix (s_idx, y) and vary (t_idx, x): shape [N, W, c].
        Vertical EPIs fix (t_idx, x) and vary (s_idx, y): shape [M, H, c].
    """
    if orientation == 'horizontal':
        if not (0 <= fixed_angular < lf.angular_rows and 0 <= fixed_spatial < lf.height):
            raise DataError("horizontal EPI at s={} y={} lies outside {}".format(fixed_angular, fixed_spatial, lf))
        return lf.views[fixed_angular, :, fixed_spatial, :, :].copy()
    elif orientation == 'vertical':
        if not (0 <= fixed_angular < lf.angular_cols and 0 <= fixed_spatial < lf.width):
            raise DataError("vertical EPI at t={} x={} lies outside {}".format(fixed_angular, fixed_spatial, lf))
        return lf.views[:, fixed_angular, :, fixed_spatial, :].copy()
    raise ValueError("orientation must be 'horizontal' or 'vertical', got {!r}".format(orientation))

def sample_patch(lf, patch_h, patch_w, seed):
    """Crops the same seeded-uniform spatial window out of every view"""
    if not (1 <= patch_h <= lf.height and 1 <= patch_w <= lf.width):
        raise DataError("patch {}x{} does not fit in {}".format(patch_h, patch_w, lf))
    rng = make_rng(seed)
    y0 = int(rng.integers(0, lf.height - patch_h + 1))
    x0 = int(rng.integers(0, lf.width - patch_w + 1))
    return LightField(lf.views[:, :, y0:y0 + patch_h, x0:x0 + patch_w, :].copy())

def to_uint8(image):
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)

def save_image(path, image):
    """Writes a [H,W,c] float image in [0,1] (clamped) as an 8-bit PNG"""
    data = to_uint8(image)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    imageio.imwrite(path, data, format='PNG')

def save_lightfield(lf, directory):
    ensure_directory(directory)
    with open(os.path.join(directory, META_FILE), 'w') as meta_file:
        json.dump(lf.meta(), meta_file, indent=2, sort_keys=True)
    for s in range(lf.angular_rows):
        for t in range(lf.angular_cols):
            save_image(os.path.join(directory, VIEW_FILE.format(row=s, col=t)), lf.views[s, t])
    logging.debug("wrote {} to {}".format(lf, directory))

def _read_meta(directory):
    path = os.path.join(directory, META_FILE)
    try:
        with open(path) as meta_file:
            meta = json.load(meta_file)
        shape = [ int(meta[k]) for k in ('angular_rows', 'angular_cols', 'height', 'width', 'channels') ]
    except FileNotFoundError:
        raise DataError("missing light field descriptor {}".format(path))
    except (ValueError, KeyError, TypeError) as e:
        raise DataError("bad light field descriptor {}: {}".format(path, e))
    if min(shape) < 1:
        raise DataError("bad light field descriptor {}: extents must be positive".format(path))
    return shape

def load_lightfield(directory):
    rows, cols, height, width, channels = _read_meta(directory)
    views = np.zeros((rows, cols, height, width, channels), dtype=np.float32)
    for s in range(rows):
        for t in range(cols):
            path = os.path.join(directory, VIEW_FILE.format(row=s, col=t))
            if not os.path.isfile(path):
                raise DataError("missing view file {}".format(path))
            try:
                image = np.asarray(imageio.imread(path))
            except Exception as e:
                raise DataError("cannot read view file {}: {}".format(path, e))
            if image.ndim == 2:
                image = image[:, :, None]
            if image.shape != (height, width, channels):
                raise DataError("view file {} has shape {}, descriptor says {}".format(path, image.shape, (height, width, channels)))
            views[s, t] = image.astype(np.float32) / 255.0
    return LightField(views)

def save_lightfield_h5(lf, path):
    with h5py.File(path, 'w') as h5_file:
        h5_file.create_dataset('views', data=lf.views)
        for key, value in lf.meta().items():
            h5_file.attrs[key] = value

def load_lightfield_h5(path):
    try:
        with h5py.File(path, 'r') as h5_file:
            views = h5_file['views'][:]
    except (OSError, KeyError) as e:
        raise DataError("cannot read light field bundle {}: {}".format(path, e))
    return LightField(views)

def _is_lightfield(path):
    return os.path.isdir(path) and os.path.isfile(os.path.join(path, META_FILE))

def list_dataset(source):
    """Resolves a dataset source to a sorted list of light field paths.
        source may be a light field directory, an .h5 bundle, a directory
        holding either, or a text file with one path per line.
    """
    if _is_lightfield(source) or source.endswith('.h5'):
        if not os.path.exists(source):
            raise DataError("missing light field {}".format(source))
        return [source]
    if os.path.isdir(source):
        entries = [ os.path.join(source, name) for name in sorted(os.listdir(source)) ]
        paths = [ p for p in entries if _is_lightfield(p) or p.endswith('.h5') ]
        if not paths:
            raise DataError("no light fields found in {}".format(source))
        return paths
    if os.path.isfile(source):
        base = os.path.dirname(os.path.abspath(source))
        with open(source) as list_file:
            lines = [ s.strip() for s in list_file.readlines() ]
        return [ l if os.path.isabs(l) else os.path.join(base, l) for l in lines if l and not l.startswith('#') ]
    raise DataError("dataset source {} does not exist".format(source))

def load_any(path):
    return load_lightfield_h5(path) if path.endswith('.h5') else load_lightfield(path)

def load_dataset(source):
    """Loads every light field of a dataset source, see list_dataset"""
    paths = list_dataset(source)
    logging.info("loading {} light field(s) from {}".format(len(paths), source))
    return [ load_any(p) for p in paths ], paths
