### TrainConfig class
import json
import logging
from ast import literal_eval

from ..data.lightfield import ViewPattern
from ..models.Models import make_config
from ..util.utils import UsageError, DataError

REGIMES = ('fixed_interp', 'flexible_spatial', 'pixel_drop')

class TrainConfig(object):
    """The TrainConfig class holds every setting of a training run.
        Attributes:
          regime: 'fixed_interp', 'flexible_spatial' (downsampled inputs) or 'pixel_drop'
          input_pattern: view pattern preset name or list of [row, col] pairs
          target_grid: angular grid [M, N] the model is trained to reconstruct
          patch_size: spatial [h, w] of the training patches
          scale_range: [lo, hi] downsampling factors for flexible_spatial
          drop_range: [lo, hi] pixel drop rates for pixel_drop
          lambda_epi: weight of the EPI gradient loss
          steps, batch_size, seed: length, width and seed of the run
          learning_rate, beta_1, beta_2, epsilon: Adam hyperparameters
          lr_halving: halve the learning rate after every quarter of the steps
          checkpoint_interval, log_interval: in steps
          model: architecture preset (see ciln.models.Models)
          model_args: overrides of the preset's CilnConfig options
        See supported_opts for the default values
    """

    # available options and their default values
    supported_opts = {'regime': 'fixed_interp',
                      'input_pattern': 'corners',
                      'target_grid': [7, 7],
                      'patch_size': [64, 64],
                      'scale_range': [0.25, 1.0],
                      'drop_range': [0.0, 0.9],
                      'lambda_epi': 1.0,
                      'steps': 20000,
                      'batch_size': 4,
                      'seed': 0,
                      'learning_rate': 1e-4,
                      'beta_1': 0.9,
                      'beta_2': 0.999,
                      'epsilon': 1e-8,
                      'lr_halving': True,
                      'checkpoint_interval': 1000,
                      'log_interval': 100,
                      'model': 'ciln',
                      'model_args': {},
                      }

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.supported_opts)
        if unknown:
            raise UsageError("unknown training options {}".format(sorted(unknown)))
        for opt in self.supported_opts:
            value = kwargs[opt] if opt in kwargs else self.supported_opts[opt]
            setattr(self, opt, dict(value) if isinstance(value, dict) else value)
        self.target_grid = [ int(g) for g in self.target_grid ]
        self.patch_size = [ int(p) for p in self.patch_size ]
        self.scale_range = [ float(r) for r in self.scale_range ]
        self.drop_range = [ float(r) for r in self.drop_range ]
        if isinstance(self.input_pattern, ViewPattern):
            self.input_pattern = self.input_pattern.to_list()
        self.validate()

    def validate(self):
        if self.regime not in REGIMES:
            raise UsageError("regime must be one of {}, got {!r}".format(REGIMES, self.regime))
        if len(self.target_grid) != 2 or min(self.target_grid) < 2:
            raise UsageError("target_grid must have at least 2 views along each axis, got {}".format(self.target_grid))
        if len(self.patch_size) != 2 or min(self.patch_size) < 1:
            raise UsageError("patch_size must be two positive extents, got {}".format(self.patch_size))
        lo, hi = self.scale_range
        if not (0.0 < lo <= hi <= 1.0):
            raise UsageError("scale_range must satisfy 0 < lo <= hi <= 1, got {}".format(self.scale_range))
        lo, hi = self.drop_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise UsageError("drop_range must satisfy 0 <= lo <= hi <= 1, got {}".format(self.drop_range))
        if self.lambda_epi < 0:
            raise UsageError("lambda_epi must be non-negative, got {}".format(self.lambda_epi))
        if int(self.steps) < 0 or int(self.batch_size) < 1 or int(self.seed) < 0:
            raise UsageError("steps >= 0, batch_size >= 1 and seed >= 0 are required")
        if int(self.checkpoint_interval) < 1 or int(self.log_interval) < 1:
            raise UsageError("checkpoint_interval and log_interval must be positive")
        try:
            self.pattern().check_bounds(self.target_grid)
        except (ValueError, DataError) as e:
            raise UsageError("bad input_pattern {!r}: {}".format(self.input_pattern, e))
        self.model_config()

    def pattern(self):
        return ViewPattern.from_spec(self.input_pattern, self.target_grid)

    def model_config(self):
        """CilnConfig of the network trained under this config"""
        args = dict(self.model_args)
        args.setdefault('v', self.pattern().v)
        args.setdefault('grid', tuple(self.target_grid))
        return make_config(self.model, **args)

    def learning_rate_at(self, step):
        """Learning rate of the 0-based step, halved after each quarter of training"""
        if not self.lr_halving or self.steps < 4:
            return self.learning_rate
        return self.learning_rate * 0.5 ** min(3, (4 * step) // self.steps)

    def get_config(self):
        config = {}
        for opt in self.supported_opts:
            config[opt] = getattr(self, opt)
        return config

    def to_json(self, path):
        with open(path, 'w') as config_file:
            json.dump(self.get_config(), config_file, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path, overrides=None):
        try:
            with open(path) as config_file:
                config = json.load(config_file)
        except FileNotFoundError:
            raise UsageError("missing config file {}".format(path))
        except ValueError as e:
            raise UsageError("bad config file {}: {}".format(path, e))
        if not isinstance(config, dict):
            raise UsageError("config file {} must hold a JSON object".format(path))
        config = apply_overrides(config, overrides or [])
        logging.debug("read training config from {}".format(path))
        return cls(**config)

    def with_overrides(self, overrides):
        return TrainConfig(**apply_overrides(self.get_config(), overrides))

    def __str__(self):
        params = [ "{}={!s}".format(opt, getattr(self, opt)) for opt in self.supported_opts ]
        return "TrainConfig({})".format(",".join(params))

def parse_value(text):
    try:
        return literal_eval(text)
    except (ValueError, SyntaxError):
        return text

def apply_overrides(config, overrides):
    """Applies 'key=value' strings to a config dict; 'model_args.d=32' sets a nested entry"""
    config = json.loads(json.dumps(config))
    for item in overrides:
        if '=' not in item:
            raise UsageError("override {!r} is not of the form key=value".format(item))
        key, text = item.split('=', 1)
        path = key.strip().split('.')
        target = config
        for part in path[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise UsageError("override {!r} descends into a non-dict option".format(item))
        target[path[-1]] = parse_value(text.strip())
    return config
