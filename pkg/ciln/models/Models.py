### Predefined CILN architectures

import logging

from .ciln import CilnConfig, init_model
from ..util.utils import UsageError

def model_function(model_name):
    """Returns the config overrides of the named architecture"""
    model_maker_dict = {
            'ciln': {},
            'ciln_angular': {'coord_mode': 'angular_only'},
            'ciln_gridconv': {'decoder_kind': 'fixed_grid_conv'},
            'ciln_mask': {'mask_channels': True},
            'ciln_tiny': {'d': 8, 'n_res_blocks': 1, 'mlp_hidden': 16},
            }
    if model_name not in model_maker_dict:
        raise UsageError("unknown model {!r}, expected one of {}".format(model_name, sorted(model_maker_dict)))
    return model_maker_dict[model_name]

def make_config(model_name, **args):
    provided = set(args.keys())
    accepted = set(CilnConfig.supported_opts)
    if not provided.issubset(accepted):
        logging.error("provided arguments {} do not match the accepted ones {}".format(sorted(provided), sorted(accepted)))
        raise UsageError("unknown arguments {} for model {}".format(sorted(provided - accepted), model_name))
    options = dict(model_function(model_name))
    options.update(args)
    return CilnConfig(**options)

def make_model(model_name, seed=0, **args):
    return init_model(make_config(model_name, **args), seed)
