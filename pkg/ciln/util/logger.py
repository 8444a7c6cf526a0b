### Logging setup for the ciln commands
#
# Messages go to the root logger, formatted as
#   0000:00:03.141 train [INFO] message
# with the time elapsed since import and the running command. The extra
# 'trace' level logs entry and exit of every training and model function.

import re
import time
import inspect
import logging
import importlib
from functools import wraps

import numpy as np

TRACE = logging.DEBUG - 5

LEVELS = {'trace': TRACE, 'debug': logging.DEBUG, 'info': logging.INFO,
          'warn': logging.WARNING, 'warning': logging.WARNING, 'error': logging.ERROR}

# modules whose functions and methods are wrapped at trace level
TRACED_MODULES = ['ciln.train.algo', 'ciln.train.data', 'ciln.train.optimizer', 'ciln.train.process',
                  'ciln.models.ciln']

# qualified names never wrapped: threads, hot per-element helpers
SKIP_TRACE = [r'^BatchPreloader\.run$', r'^TrainConfig\.from_json$', r'^_']

start_time = time.time()
_handlers = []
_traced = False

def register_trace_level():
    """Makes 'TRACE' a named level with logging.trace() and Logger.trace(); safe to call repeatedly"""
    if logging.getLevelName(TRACE) == 'TRACE' and hasattr(logging, 'trace'):
        return
    logging.addLevelName(TRACE, 'TRACE')
    logging.TRACE = TRACE

    def logger_trace(self, message, *args, **kwargs):
        if self.isEnabledFor(TRACE):
            self._log(TRACE, message, args, **kwargs)

    def root_trace(message, *args, **kwargs):
        logging.log(TRACE, message, *args, **kwargs)

    logging.getLoggerClass().trace = logger_trace
    logging.trace = root_trace

class ElapsedTimeFormatter(logging.Formatter):
    """Formats record times as HHHH:MM:SS.mmm since the package was imported"""

    def formatTime(self, record, datefmt=None):
        elapsed = int(round((record.created - start_time) * 1000))
        hours, rest = divmod(elapsed, 3600 * 1000)
        minutes, rest = divmod(rest, 60 * 1000)
        seconds, millis = divmod(rest, 1000)
        return "{:04d}:{:02d}:{:02d}.{:03d}".format(hours, minutes, seconds, millis)

def get_log_level(name='info'):
    try:
        return LEVELS[str(name).lower()]
    except KeyError:
        raise ValueError("unknown log level {!r}, expected one of {}".format(name, sorted(LEVELS)))

def make_formatter(command):
    return ElapsedTimeFormatter('%(asctime)s ' + command + ' [%(levelname)s] %(message)s')

def initialize_logger(filename=None, file_level='info', stream=True, stream_level='info', command='ciln'):
    """Replaces the root logger's handlers: an optional file handler and a stream handler,
    each with its own level. Raises ValueError for unknown level names before touching anything.
    """
    levels = [get_log_level(stream_level)] if stream else []
    if filename is not None:
        levels.append(get_log_level(file_level))
    register_trace_level()
    root = logging.getLogger()
    for handler in _handlers:
        root.removeHandler(handler)
        handler.close()
    del _handlers[:]
    formatter = make_formatter(command)
    if filename is not None:
        handler = logging.FileHandler(filename, mode='a', encoding='utf-8')
        handler.setLevel(get_log_level(file_level))
        _handlers.append(handler)
    if stream:
        handler = logging.StreamHandler()
        handler.setLevel(get_log_level(stream_level))
        _handlers.append(handler)
    for handler in _handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    root.setLevel(min(levels) if levels else logging.WARNING)
    if TRACE in levels:
        add_trace_decorators()

def describe(obj):
    """Short description of an argument for trace messages"""
    if isinstance(obj, np.ndarray):
        return 'ndarray{}'.format(list(obj.shape))
    kind = type(obj).__name__
    if kind == 'Tensor':
        return 'Tensor{}'.format(list(obj.shape))
    if kind in ('LightField', 'ViewStack', 'CilnConfig', 'ViewPattern'):
        return repr(obj) if kind != 'CilnConfig' else 'CilnConfig'
    if isinstance(obj, (list, tuple)) and len(obj) > 4:
        return '{}[{}]'.format(kind, len(obj))
    if isinstance(obj, dict):
        return 'dict[{}]'.format(len(obj))
    return repr(obj)

def traced(function):
    """Wraps function with >>> and <<< trace messages"""
    qualname = '{}.{}'.format(function.__module__, function.__qualname__)
    method = next(iter(inspect.signature(function).parameters), None) in ('self', 'cls')

    @wraps(function)
    def wrapper(*args, **kwargs):
        shown = args[1:] if method else args
        params = [ describe(a) for a in shown ] + [ '{}={}'.format(k, describe(v)) for k, v in kwargs.items() ]
        logging.log(TRACE, '>>> {}({})'.format(qualname, ', '.join(params)))
        result = function(*args, **kwargs)
        logging.log(TRACE, '<<< {}'.format(qualname))
        return result

    wrapper.__traced__ = True
    return wrapper

def _skipped(qualname):
    return any(re.search(pattern, qualname) for pattern in SKIP_TRACE)

def trace_module(mod):
    """Wraps the plain functions and methods defined in mod; returns how many were wrapped"""
    count = 0
    for name, func in inspect.getmembers(mod, inspect.isfunction):
        if func.__module__ == mod.__name__ and not _skipped(func.__qualname__) and not getattr(func, '__traced__', False):
            setattr(mod, name, traced(func))
            count += 1
    for _, clazz in inspect.getmembers(mod, inspect.isclass):
        if clazz.__module__ != mod.__name__:
            continue
        for name, member in list(vars(clazz).items()):
            if not inspect.isfunction(member) or name.startswith('__'):
                continue
            if _skipped(member.__qualname__) or getattr(member, '__traced__', False):
                continue
            setattr(clazz, name, traced(member))
            count += 1
    return count

def add_trace_decorators(modules=None):
    global _traced
    if _traced:
        return
    _traced = True
    for mod_name in modules or TRACED_MODULES:
        count = trace_module(importlib.import_module(mod_name))
        logging.log(TRACE, "tracing {} functions of {}".format(count, mod_name))
