### Synthetic small-baseline light fields: a textured fronto-parallel plane
### translated by a constant disparity between neighbouring views

import json
import logging
import numpy as np
from scipy import ndimage

from .lightfield import LightField
from ..util.rng import make_rng, split_seed
from ..util.utils import DataError

TEXTURE_KINDS = ('smooth-noise', 'checker', 'gradient')

class SyntheticSpec(object):
    """Description of one synthetic scene.
        Attributes:
          M, N: angular grid
          H, W: spatial extent
          disparity: pixel shift per unit angular step (vertical along s, horizontal along t)
          texture_seed: seed of the base texture
          texture_kind: one of TEXTURE_KINDS
          smoothness: Gaussian sigma in pixels of the smooth-noise texture
          channels: colour channels
    """
    fields = ('M', 'N', 'H', 'W', 'disparity', 'texture_seed', 'texture_kind', 'smoothness', 'channels')

    def __init__(self, M=7, N=7, H=64, W=64, disparity=0.0, texture_seed=0, texture_kind='smooth-noise',
                 smoothness=2.0, channels=3):
        self.M = int(M)
        self.N = int(N)
        self.H = int(H)
        self.W = int(W)
        self.disparity = float(disparity)
        self.texture_seed = int(texture_seed)
        self.texture_kind = texture_kind
        self.smoothness = float(smoothness)
        self.channels = int(channels)
        self.validate()

    def validate(self):
        if min(self.M, self.N, self.H, self.W, self.channels) < 1:
            raise ValueError("synthetic extents must be positive: {}".format(self.to_dict()))
        if self.texture_kind not in TEXTURE_KINDS:
            raise ValueError("unknown texture kind {!r}, expected one of {}".format(self.texture_kind, TEXTURE_KINDS))
        if not np.isfinite(self.disparity) or abs(self.disparity) * max(self.M, self.N) >= min(self.H, self.W) / 4.0:
            raise ValueError("disparity {} is too large for a {}x{} grid of {}x{} views".format(
                self.disparity, self.M, self.N, self.H, self.W))
        if self.smoothness <= 0:
            raise ValueError("smoothness must be positive, got {}".format(self.smoothness))

    def to_dict(self):
        return { f: getattr(self, f) for f in self.fields }

    @classmethod
    def from_dict(cls, record):
        unknown = set(record) - set(cls.fields)
        if unknown:
            raise DataError("unknown synthetic spec fields {}".format(sorted(unknown)))
        return cls(**record)

    def __eq__(self, other):
        return isinstance(other, SyntheticSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "SyntheticSpec({})".format(", ".join("{}={!r}".format(k, v) for k, v in self.to_dict().items()))

def make_texture(spec):
    """Base texture [H, W, c] in [0,1], periodic so wrap-around shifts stay seamless"""
    rng = make_rng(spec.texture_seed)
    shape = (spec.H, spec.W, spec.channels)
    if spec.texture_kind == 'smooth-noise':
        noise = rng.random(shape)
        texture = ndimage.gaussian_filter(noise, sigma=(spec.smoothness, spec.smoothness, 0), mode='wrap')
        low = texture.min(axis=(0, 1), keepdims=True)
        high = texture.max(axis=(0, 1), keepdims=True)
        texture = (texture - low) / np.maximum(high - low, 1e-12)
    elif spec.texture_kind == 'checker':
        cell = int(rng.integers(2, 9))
        y, x = np.mgrid[0:spec.H, 0:spec.W]
        board = ((y // cell + x // cell) % 2).astype(np.float64)
        dark = rng.uniform(0.0, 0.4, spec.channels)
        bright = rng.uniform(0.6, 1.0, spec.channels)
        texture = dark + board[:, :, None] * (bright - dark)
    else:
        # one period of a cosine ramp along a random direction, so the texture wraps
        fy, fx = rng.integers(0, 3, size=2)
        if fy == 0 and fx == 0:
            fx = 1
        y, x = np.mgrid[0:spec.H, 0:spec.W]
        phase = 2 * np.pi * (fy * y / spec.H + fx * x / spec.W)
        offsets = rng.uniform(0.0, 2 * np.pi, spec.channels)
        texture = 0.5 + 0.5 * np.cos(phase[:, :, None] + offsets)
    return np.clip(texture, 0.0, 1.0)

def synth_lightfield(spec):
    spec.validate()
    texture = make_texture(spec)
    views = np.zeros((spec.M, spec.N, spec.H, spec.W, spec.channels), dtype=np.float32)
    for s in range(spec.M):
        for t in range(spec.N):
            dy = spec.disparity * (s - (spec.M - 1) / 2.0)
            dx = spec.disparity * (t - (spec.N - 1) / 2.0)
            if dy == 0 and dx == 0:
                view = texture
            else:
                view = ndimage.shift(texture, (dy, dx, 0), order=1, mode='grid-wrap')
            views[s, t] = np.clip(view, 0.0, 1.0)
    logging.debug("synthesized {}".format(spec))
    return LightField(views)

def max_disparity(M, N, H, W):
    """Largest disparity accepted by SyntheticSpec.validate for these extents"""
    return 0.99 * min(H, W) / (4.0 * max(M, N))

def random_specs(count, seed, M=7, N=7, H=64, W=64, disparity_range=(0.0, 1.5), kinds=TEXTURE_KINDS):
    """A seeded suite of scenes with random disparities, textures and texture seeds.
        The upper end of disparity_range is lowered to what the extents allow.
    """
    low, high = disparity_range
    disparity_range = (low, min(high, max_disparity(M, N, H, W)))
    if disparity_range[0] > disparity_range[1]:
        raise ValueError("disparity range {} does not fit a {}x{} grid of {}x{} views".format((low, high), M, N, H, W))
    rng = make_rng(seed)
    specs = []
    for i in range(count):
        specs.append(SyntheticSpec(M=M, N=N, H=H, W=W,
                                   disparity=float(rng.uniform(*disparity_range)),
                                   texture_seed=split_seed(seed, i),
                                   texture_kind=kinds[int(rng.integers(len(kinds)))]))
    return specs

def load_manifest(path):
    try:
        with open(path) as manifest_file:
            records = json.load(manifest_file)
    except FileNotFoundError:
        raise DataError("missing synthetic manifest {}".format(path))
    except ValueError as e:
        raise DataError("bad synthetic manifest {}: {}".format(path, e))
    if not isinstance(records, list):
        raise DataError("synthetic manifest {} must hold a JSON array".format(path))
    try:
        return [ SyntheticSpec.from_dict(r) for r in records ]
    except (TypeError, ValueError) as e:
        raise DataError("bad record in synthetic manifest {}: {}".format(path, e))

def save_manifest(specs, path):
    with open(path, 'w') as manifest_file:
        json.dump([ s.to_dict() for s in specs ], manifest_file, indent=2)
