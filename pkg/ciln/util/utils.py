### Utilities for the ciln package
import os
import hashlib
import logging

class Error(Exception):
    pass

class UsageError(Error):
    """Bad command line arguments or configuration values"""
    pass

class DataError(Error):
    """Missing, corrupt or inconsistent input data"""
    pass

class ShapeError(Error, ValueError):
    """Operand shapes or dimensions do not agree"""
    pass

class NumericError(Error):
    """Non-finite values where finite ones are required"""
    pass

def parameter_manifest(params):
    """Returns a list of (name, shape) pairs describing the named parameters"""
    return [ (name, list(p.shape)) for name, p in params.items() ]

def parse_grid(text):
    """Parses 'MxN' into a pair of positive integers"""
    try:
        rows, cols = [ int(v) for v in str(text).lower().split('x') ]
    except ValueError:
        raise UsageError("expected a grid like 7x7, got {!r}".format(text))
    if rows < 1 or cols < 1:
        raise UsageError("grid extents must be positive, got {!r}".format(text))
    return rows, cols

def file_digest(path, block_size=1 << 20):
    """sha256 of a file, or of every file below a directory in sorted order"""
    digest = hashlib.sha256()
    if os.path.isdir(path):
        for root, dirs, files in sorted(os.walk(path)):
            dirs.sort()
            for name in sorted(files):
                full = os.path.join(root, name)
                digest.update(os.path.relpath(full, path).encode('utf-8'))
                with open(full, 'rb') as f:
                    for block in iter(lambda: f.read(block_size), b''):
                        digest.update(block)
    else:
        with open(path, 'rb') as f:
            for block in iter(lambda: f.read(block_size), b''):
                digest.update(block)
    return digest.hexdigest()

def ensure_directory(path):
    if not os.path.isdir(path):
        logging.debug("creating directory {}".format(path))
        os.makedirs(path, exist_ok=True)
    return path
