### Run timeline in chrome://tracing format
#
# One process records begin/end pairs into memory; collect() writes them as
# a JSON array. Recording is a no-op until enable() is called.

import os
import time
import json
from contextlib import contextmanager
from functools import wraps

def timeline(original_function=None, category='ciln'):
    """Records every call of the decorated function as one event named after it.
    Usable bare (@timeline) or with a category (@timeline(category='model')).
    """
    def _decorate(function):
        @wraps(function)
        def wrapped_function(*args, **kwargs):
            with Timeline.span(function.__qualname__, category):
                return function(*args, **kwargs)
        return wrapped_function

    if original_function:
        return _decorate(original_function)
    return _decorate

class Timeline(object):
    """Collects duration events of the running command.
        Attributes:
          events: recorded events, oldest first
          process_name: label shown for the process row in the viewer
    """
    _enabled = False
    events = []
    process_name = str(os.getpid())

    @classmethod
    def _record(cls, name, phase, category, args):
        if not cls._enabled:
            return
        cls.events.append({'name': name, 'cat': category, 'ph': phase, 'pid': cls.process_name, 'tid': 'main',
                           'ts': int(round(time.time() * 1e6)), 'args': args})

    @classmethod
    def begin(cls, name, category='ciln', **args):
        cls._record(name, 'B', category, args)

    @classmethod
    def end(cls, name, category='ciln', **args):
        cls._record(name, 'E', category, args)

    @classmethod
    @contextmanager
    def span(cls, name, category='ciln', **args):
        """Begin/end pair around a block; the end is recorded even if the block raises"""
        cls.begin(name, category, **args)
        try:
            yield
        finally:
            cls.end(name, category, **args)

    @classmethod
    def is_enabled(cls):
        return cls._enabled

    @classmethod
    def enable(cls, process_name=None):
        cls._enabled = True
        cls.events = []
        if process_name is not None:
            cls.process_name = process_name

    @classmethod
    def disable(cls):
        cls._enabled = False
        cls.events = []

    @classmethod
    def collect(cls, file_name):
        """Writes the recorded events to file_name; returns how many were written"""
        if not cls._enabled:
            return 0
        with open(file_name, 'w') as timeline_file:
            json.dump(cls.events, timeline_file, indent=0)
        return len(cls.events)
