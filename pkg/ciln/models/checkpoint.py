### Model checkpoint files
#
# Layout: b"CILN", u16 format version, u32 header length (little endian),
# a UTF-8 JSON header {"config": ..., "params": [[name, shape], ...]},
# then one little-endian float32 blob per parameter in header order.

import json
import struct
import logging
import numpy as np

from .ciln import CilnConfig, CilnModel, parameter_shapes
from ..train.tensor import Tensor
from ..util.utils import DataError, UsageError, parameter_manifest

MAGIC = b'CILN'
FORMAT_VERSION = 1
BLOB_DTYPE = np.dtype('<f4')
_PREFIX = struct.Struct('<4sHI')

def save_model(model, path):
    header = json.dumps({'config': model.config.get_config(),
                         'params': parameter_manifest(model.params)}, sort_keys=True).encode('utf-8')
    with open(path, 'wb') as out:
        out.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)))
        out.write(header)
        for p in model.params.values():
            out.write(np.ascontiguousarray(p.data, dtype=BLOB_DTYPE).tobytes())
    logging.info("Saved model to {}".format(path))

def load_model(path):
    try:
        with open(path, 'rb') as f:
            raw = f.read()
    except FileNotFoundError:
        raise DataError("missing checkpoint {}".format(path))
    if len(raw) < _PREFIX.size:
        raise DataError("checkpoint {} is truncated ({} bytes)".format(path, len(raw)))
    magic, version, header_length = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise DataError("{} is not a checkpoint: magic {!r}".format(path, magic))
    if version != FORMAT_VERSION:
        raise DataError("checkpoint {} has format version {}, expected {}".format(path, version, FORMAT_VERSION))
    start = _PREFIX.size + header_length
    if start > len(raw):
        raise DataError("checkpoint {} is truncated inside its header".format(path))
    try:
        header = json.loads(raw[_PREFIX.size:start].decode('utf-8'))
        config = CilnConfig.from_dict(header['config'])
        manifest = [ (name, tuple(shape)) for name, shape in header['params'] ]
    except (ValueError, KeyError, TypeError, UsageError) as e:
        raise DataError("bad checkpoint header in {}: {}".format(path, e))
    if manifest != [ (n, tuple(s)) for n, s in parameter_shapes(config) ]:
        raise DataError("checkpoint {} declares parameters that do not match its config".format(path))
    expected = sum(int(np.prod(shape)) for _, shape in manifest) * BLOB_DTYPE.itemsize
    if len(raw) - start != expected:
        raise DataError("checkpoint {} holds {} parameter bytes, its manifest needs {}".format(path, len(raw) - start, expected))
    params = {}
    offset = start
    for name, shape in manifest:
        count = int(np.prod(shape))
        data = np.frombuffer(raw, dtype=BLOB_DTYPE, count=count, offset=offset).reshape(shape)
        params[name] = Tensor(data.astype(np.float32), requires_grad=True, name=name)
        offset += count * BLOB_DTYPE.itemsize
    logging.info("Loaded model from {}".format(path))
    return CilnModel(config, params)
