### Conditional implicit light field network
#
# A convolutional extractor fuses the channel-stacked input views into a
# per-pixel feature grid. The grid is resized to the requested output
# resolution and a coordinate-conditioned MLP decodes one RGB value per
# (pixel feature, x, y, s, t) query.

import logging
import numpy as np

from ..train.tensor import (Tensor, no_grad, conv2d, relu, linear, add, reshape, transpose,
                            take, bilinear_resize, DEFAULT_DTYPE)
from ..train.tensor import stack as stack_tensors
from ..data.lightfield import Coord4, normalize_coord, spatial_grid_coords
from ..util.rng import make_rng
from ..util.utils import ShapeError, UsageError, NumericError
from ..util.timeline import timeline

COORD_MODES = ('full_4d', 'angular_only')
DECODER_KINDS = ('mlp', 'fixed_grid_conv')
GRID_TOLERANCE = 1e-6

class CilnConfig(object):
    """Architecture hyperparameters. Parameter shapes follow from these alone.
        Attributes:
          v: number of input views
          c: channels per view
          d: per-pixel feature dimension
          n_res_blocks: residual blocks in the extractor
          mlp_hidden, mlp_layers: width and number of hidden decoder layers
          coord_mode: 'full_4d' feeds (x,y,s,t) to the decoder, 'angular_only' feeds (s,t)
          decoder_kind: 'mlp', or 'fixed_grid_conv' predicting every view of `grid` at once
          mask_channels: append one validity-mask channel per input view
          grid: angular grid (M, N) of the fixed-grid decoder
    """
    supported_opts = {'v': 4, 'c': 3, 'd': 64, 'n_res_blocks': 4, 'mlp_hidden': 320, 'mlp_layers': 2,
                      'coord_mode': 'full_4d', 'decoder_kind': 'mlp', 'mask_channels': False, 'grid': (7, 7)}

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.supported_opts)
        if unknown:
            raise UsageError("unknown model options {}, accepted ones are {}".format(sorted(unknown), sorted(self.supported_opts)))
        for opt, default in self.supported_opts.items():
            setattr(self, opt, kwargs.get(opt, default))
        self.grid = tuple(int(g) for g in self.grid)
        self.mask_channels = bool(self.mask_channels)
        self.validate()

    def validate(self):
        for opt in ('v', 'c', 'd', 'mlp_hidden', 'mlp_layers'):
            if int(getattr(self, opt)) < 1:
                raise UsageError("model option {} must be at least 1, got {}".format(opt, getattr(self, opt)))
        if int(self.n_res_blocks) < 0:
            raise UsageError("n_res_blocks must be non-negative, got {}".format(self.n_res_blocks))
        if self.coord_mode not in COORD_MODES:
            raise UsageError("coord_mode must be one of {}, got {!r}".format(COORD_MODES, self.coord_mode))
        if self.decoder_kind not in DECODER_KINDS:
            raise UsageError("decoder_kind must be one of {}, got {!r}".format(DECODER_KINDS, self.decoder_kind))
        if len(self.grid) != 2 or min(self.grid) < 1:
            raise UsageError("grid must be a pair of positive extents, got {}".format(self.grid))

    @property
    def input_channels(self):
        return self.v * (self.c + 1) if self.mask_channels else self.v * self.c

    @property
    def coord_dim(self):
        return 4 if self.coord_mode == 'full_4d' else 2

    @property
    def receptive_radius(self):
        return 1 + 2 * self.n_res_blocks

    def get_config(self):
        config = { opt: getattr(self, opt) for opt in self.supported_opts }
        config['grid'] = list(self.grid)
        return config

    @classmethod
    def from_dict(cls, config):
        return cls(**config)

    def __eq__(self, other):
        return isinstance(other, CilnConfig) and self.get_config() == other.get_config()

    def __str__(self):
        return "CilnConfig({})".format(", ".join("{}={}".format(k, v) for k, v in self.get_config().items()))

class FeatureMap(object):
    """Per-pixel features.
        Attributes:
          data: Tensor [d, H, W]
          native_extent: (H, W) of the input the features were extracted from
    """

    def __init__(self, data, native_extent):
        self.data = data
        self.native_extent = tuple(native_extent)

    @property
    def d(self):
        return self.data.shape[0]

    @property
    def extent(self):
        return self.data.shape[1:]

def parameter_shapes(config):
    """Ordered (name, shape) pairs; extractor parameters first, then decoder"""
    d, h = config.d, config.mlp_hidden
    shapes = [('extractor.head.weight', (d, config.input_channels, 3, 3)), ('extractor.head.bias', (d,))]
    for b in range(config.n_res_blocks):
        for conv in ('conv1', 'conv2'):
            shapes.append(('extractor.block{}.{}.weight'.format(b, conv), (d, d, 3, 3)))
            shapes.append(('extractor.block{}.{}.bias'.format(b, conv), (d,)))
    shapes += [('extractor.tail.weight', (d, d, 1, 1)), ('extractor.tail.bias', (d,))]
    if config.decoder_kind == 'mlp':
        shapes += [('decoder.layer0.weight_feature', (h, d)),
                   ('decoder.layer0.weight_coord', (h, config.coord_dim)),
                   ('decoder.layer0.bias', (h,))]
        for l in range(1, config.mlp_layers):
            shapes += [('decoder.layer{}.weight'.format(l), (h, h)), ('decoder.layer{}.bias'.format(l), (h,))]
        shapes += [('decoder.output.weight', (3, h)), ('decoder.output.bias', (3,))]
    else:
        M, N = config.grid
        shapes += [('decoder.conv1.weight', (h, d, 1, 1)), ('decoder.conv1.bias', (h,)),
                   ('decoder.conv2.weight', (M * N * 3, h, 1, 1)), ('decoder.conv2.bias', (M * N * 3,))]
    return shapes

def _fan_in(name, shape, config):
    if name == 'decoder.layer0.weight_feature' or name == 'decoder.layer0.weight_coord':
        return config.d + config.coord_dim
    return int(np.prod(shape[1:]))

class CilnModel(object):
    """Feature extractor (theta1) plus implicit decoder (theta2).
        Attributes:
          config: CilnConfig
          params: dict of name -> parameter Tensor, in manifest order
    """

    def __init__(self, config, params):
        self.config = config
        expected = parameter_shapes(config)
        if [ (n, tuple(p.shape)) for n, p in params.items() ] != [ (n, tuple(s)) for n, s in expected ]:
            raise ShapeError("parameters {} do not match the shapes required by {}".format(
                [ (n, p.shape) for n, p in params.items() ], config))
        self.params = params

    @property
    def theta1(self):
        return { n: p for n, p in self.params.items() if n.startswith('extractor.') }

    @property
    def theta2(self):
        return { n: p for n, p in self.params.items() if n.startswith('decoder.') }

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def parameters(self):
        return list(self.params.values())

    def count_parameters(self):
        return sum(p.size for p in self.params.values())

    def extract_features(self, stack):
        cfg = self.config
        if stack.v != cfg.v or stack.channels != cfg.c:
            raise ShapeError("stack of {} views x {} channels does not match model inputs of {} views x {} channels".format(
                stack.v, stack.channels, cfg.v, cfg.c))
        p = self.params
        x = Tensor(stack.network_input(cfg.mask_channels).astype(self.dtype, copy=False))
        h = conv2d(x, p['extractor.head.weight'], p['extractor.head.bias'], 1)
        for b in range(cfg.n_res_blocks):
            prefix = 'extractor.block{}.'.format(b)
            r = relu(conv2d(h, p[prefix + 'conv1.weight'], p[prefix + 'conv1.bias'], 1))
            r = conv2d(r, p[prefix + 'conv2.weight'], p[prefix + 'conv2.bias'], 1)
            h = relu(add(h, r))
        out = conv2d(h, p['extractor.tail.weight'], p['extractor.tail.bias'], 0)
        return FeatureMap(out, (stack.height, stack.width))

    def _mlp_rows(self, feature_rows, coord_rows):
        """Decodes [P,d] features with each [P,k] coordinate block; returns [P,3] Tensors"""
        p = self.params
        shared = linear(feature_rows, p['decoder.layer0.weight_feature'], p['decoder.layer0.bias'])
        outputs = []
        for coords in coord_rows:
            h = relu(add(shared, linear(coords, p['decoder.layer0.weight_coord'])))
            for l in range(1, self.config.mlp_layers):
                h = relu(linear(h, p['decoder.layer{}.weight'.format(l)], p['decoder.layer{}.bias'.format(l)]))
            outputs.append(linear(h, p['decoder.output.weight'], p['decoder.output.bias']))
        return outputs

    def _grid_rows(self, feature_rows):
        """Fixed-grid decoder on [P,d] features; returns [P, M*N*3]"""
        p = self.params
        cfg = self.config
        M, N = cfg.grid
        w1 = reshape(p['decoder.conv1.weight'], (cfg.mlp_hidden, cfg.d))
        w2 = reshape(p['decoder.conv2.weight'], (M * N * 3, cfg.mlp_hidden))
        h = relu(linear(feature_rows, w1, p['decoder.conv1.bias']))
        return linear(h, w2, p['decoder.conv2.bias'])

    def grid_index(self, s, t):
        """Position of a normalized (s,t) on the fixed decoder grid"""
        M, N = self.config.grid
        rows = [ i for i in range(M) if abs(normalize_coord(i, M) - s) < GRID_TOLERANCE ]
        cols = [ j for j in range(N) if abs(normalize_coord(j, N) - t) < GRID_TOLERANCE ]
        if not rows or not cols:
            raise UsageError("angular coordinate ({}, {}) is not on the {}x{} grid of the fixed-grid decoder".format(s, t, M, N))
        return rows[0] * N + cols[0]

    def decode_point(self, feature, coord):
        """RGB prediction for one feature vector [d] and one Coord4 (or a coordinate Tensor)"""
        cfg = self.config
        feature = feature if isinstance(feature, Tensor) else Tensor(np.asarray(feature, dtype=self.dtype))
        if feature.shape != (cfg.d,):
            raise ShapeError("feature of shape {} does not match d={}".format(feature.shape, cfg.d))
        if cfg.decoder_kind == 'fixed_grid_conv':
            coord = Coord4(*coord)
            out = reshape(self._grid_rows(reshape(feature, (1, cfg.d))), (-1, 3))
            return reshape(take(out, [self.grid_index(coord.s, coord.t)]), (3,))
        if isinstance(coord, Tensor):
            if coord.shape != (cfg.coord_dim,):
                raise ShapeError("coordinate of shape {} does not match coord_mode {}".format(coord.shape, cfg.coord_mode))
        else:
            coord = Coord4(*coord)
            values = [coord.x, coord.y, coord.s, coord.t] if cfg.coord_mode == 'full_4d' else [coord.s, coord.t]
            coord = Tensor(np.array(values, dtype=self.dtype))
        if not (np.all(np.isfinite(feature.data)) and np.all(np.isfinite(coord.data))):
            raise NumericError("decode_point needs finite inputs")
        out = self._mlp_rows(reshape(feature, (1, cfg.d)), [reshape(coord, (1, cfg.coord_dim))])[0]
        return reshape(out, (3,))

    def render(self, stack, height, width, angular_coords):
        """Differentiable reconstruction, Tensor [len(angular_coords), height, width, 3]"""
        cfg = self.config
        angular_coords = [ (float(s), float(t)) for s, t in angular_coords ]
        if not angular_coords:
            raise ShapeError("render needs at least one angular coordinate")
        if not np.all(np.isfinite(angular_coords)):
            raise NumericError("angular coordinates must be finite")
        features = resize_features(self.extract_features(stack), height, width)
        pixels = height * width
        rows = reshape(transpose(features.data, (1, 2, 0)), (pixels, cfg.d))
        if cfg.decoder_kind == 'fixed_grid_conv':
            M, N = cfg.grid
            out = transpose(reshape(self._grid_rows(rows), (height, width, M * N, 3)), (2, 0, 1, 3))
            return take(out, [ self.grid_index(s, t) for s, t in angular_coords ])
        xy = spatial_grid_coords(height, width, self.dtype)
        coords = []
        for s, t in angular_coords:
            st = np.empty((pixels, 2), dtype=self.dtype)
            st[:, 0] = s
            st[:, 1] = t
            coords.append(np.concatenate([xy, st], axis=1) if cfg.coord_mode == 'full_4d' else st)
        outputs = self._mlp_rows(rows, coords)
        return reshape(stack_tensors(outputs), (len(angular_coords), height, width, 3))

    @timeline(category='model')
    def reconstruct(self, stack, height, width, angular_coords):
        """Reconstructed views as a float array [len(angular_coords), height, width, 3], unclamped"""
        with no_grad():
            out = self.render(stack, height, width, angular_coords).data
        logging.debug("reconstructed {} views at {}x{}".format(len(angular_coords), height, width))
        return out

def init_model(config, seed, dtype=DEFAULT_DTYPE):
    """Fan-in scaled uniform (Kaiming) weights drawn from a seeded stream; zero biases"""
    rng = make_rng(seed)
    params = {}
    for name, shape in parameter_shapes(config):
        if name.endswith('bias'):
            data = np.zeros(shape, dtype=dtype)
        else:
            bound = np.sqrt(6.0 / _fan_in(name, shape, config))
            data = rng.uniform(-bound, bound, size=shape).astype(dtype)
        params[name] = Tensor(data, requires_grad=True, name=name)
    model = CilnModel(config, params)
    logging.debug("initialized model with {} parameters from seed {}".format(model.count_parameters(), seed))
    return model

def extract_features(model, stack):
    return model.extract_features(stack)

def resize_features(fm, height, width):
    """Align-corners bilinear resize of a FeatureMap; native_extent is kept"""
    if height < 1 or width < 1:
        raise ShapeError("cannot resize features to {}x{}".format(height, width))
    return FeatureMap(bilinear_resize(fm.data, height, width), fm.native_extent)

def decode_point(model, feature, coord):
    return model.decode_point(feature, coord)

def reconstruct(model, stack, height, width, angular_coords):
    return model.reconstruct(stack, height, width, angular_coords)
