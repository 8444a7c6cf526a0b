import json
import logging
import numpy as np
import pytest

from ciln.util import logger
from ciln.util.logger import TRACE, ElapsedTimeFormatter, get_log_level, describe, traced, initialize_logger
from ciln.util.timeline import Timeline, timeline
from ciln.util.monitor import Monitor
from ciln.util.rng import make_rng, split_seed
from ciln.util.utils import UsageError, parse_grid, file_digest, parameter_manifest
from ciln.train.tensor import Tensor

def test_log_levels():
    assert get_log_level('TRACE') == TRACE < logging.DEBUG
    assert get_log_level('warn') == logging.WARNING
    with pytest.raises(ValueError):
        get_log_level('loud')
    with pytest.raises(ValueError):
        initialize_logger(stream_level='loud')

def test_elapsed_time_format():
    record = logging.LogRecord('ciln', logging.INFO, __file__, 1, 'message', None, None)
    record.created = logger.start_time + 3723.5
    assert ElapsedTimeFormatter('%(asctime)s').formatTime(record) == '0001:02:03.500'

def test_describe_summarizes_arrays():
    assert describe(np.zeros((2, 3))) == 'ndarray[2, 3]'
    assert describe(Tensor(np.zeros((4, 1)))) == 'Tensor[4, 1]'
    assert describe(list(range(10))) == 'list[10]'
    assert describe({'a': 1}) == 'dict[1]'
    assert describe(3) == '3'

def test_traced_function_logs_entry_and_exit(caplog):
    def double(x, factor=2):
        return x * factor
    wrapped = traced(double)
    with caplog.at_level(TRACE):
        assert wrapped(np.ones(3), factor=3)[0] == 3.0
    messages = [ r.getMessage() for r in caplog.records ]
    assert messages[0].startswith('>>> ') and 'double(ndarray[3], factor=3)' in messages[0]
    assert messages[1].startswith('<<< ') and messages[1].endswith('double')

def test_timeline_records_spans(tmp_path):
    @timeline(category='test')
    def work():
        return 7

    Timeline.enable('unit')
    try:
        with Timeline.span('outer', step=1):
            assert work() == 7
        path = str(tmp_path / 'timeline.json')
        assert Timeline.collect(path) == 4
    finally:
        Timeline.disable()
    with open(path) as f:
        events = json.load(f)
    assert [ (e['name'].split('.')[-1], e['ph']) for e in events ] == [('outer', 'B'), ('work', 'B'), ('work', 'E'), ('outer', 'E')]
    assert events[1]['cat'] == 'test'
    assert events[0]['args'] == {'step': 1}
    assert all(e['pid'] == 'unit' for e in events)

def test_timeline_disabled_records_nothing(tmp_path):
    Timeline.disable()
    Timeline.begin('ignored')
    assert Timeline.events == []
    assert Timeline.collect(str(tmp_path / 'never.json')) == 0
    assert not (tmp_path / 'never.json').exists()

def test_rng_streams():
    a = make_rng(5, 1).random(4)
    np.testing.assert_array_equal(a, make_rng(5, 1).random(4))
    assert not np.array_equal(a, make_rng(5, 2).random(4))
    assert split_seed(5, 1) == split_seed(5, 1)
    assert 0 <= split_seed(5, 1) < 2**31 - 1
    with pytest.raises(ValueError):
        make_rng(-1)

def test_parse_grid():
    assert parse_grid('7x7') == (7, 7)
    assert parse_grid('2X3') == (2, 3)
    for bad in ('7', '0x3', 'axb', '1x2x3'):
        with pytest.raises(UsageError):
            parse_grid(bad)

def test_file_digest_of_directories(tmp_path):
    (tmp_path / 'a').mkdir()
    (tmp_path / 'a' / 'x.txt').write_text('one')
    (tmp_path / 'b').mkdir()
    (tmp_path / 'b' / 'x.txt').write_text('one')
    assert file_digest(str(tmp_path / 'a')) == file_digest(str(tmp_path / 'b'))
    (tmp_path / 'b' / 'y.txt').write_text('')
    assert file_digest(str(tmp_path / 'a')) != file_digest(str(tmp_path / 'b'))

def test_parameter_manifest():
    params = {'w': Tensor(np.zeros((2, 3))), 'b': Tensor(np.zeros(2))}
    assert parameter_manifest(params) == [('w', [2, 3]), ('b', [2])]

def test_monitor_collects_samples():
    monitor = Monitor(sampling_rate=0.01)
    monitor.start_monitor()
    np.ones((256, 256)).sum()
    monitor.stop_monitor()
    stats = monitor.get_stats()
    assert len(stats) == 1 and len(stats[0]) == 2
    assert monitor.get_peak_memory() > 0
