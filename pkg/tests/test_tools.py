import os
import json
import pytest

from ciln.data.getdata import write_suite, write_manifest, main as getdata_main
from ciln.data.lightfield import list_dataset, load_dataset
from ciln.data.synthetic import save_manifest, SyntheticSpec
from ciln.evaluate.evaluation import EvalTask, evaluate_views, OracleModel
from ciln.train.process import write_log
from ciln.util.summarize import summarize, summarize_log, main as summarize_main

def test_write_suite(tmp_path):
    out = str(tmp_path / 'suite')
    train_list, test_list = write_suite(out, num_train=2, num_test=1, seed=3, M=3, N=3, H=16, W=16)
    assert os.path.basename(train_list) == 'train_ciln.list'
    assert len(list_dataset(train_list)) == 2
    lfs, paths = load_dataset(test_list)
    assert lfs[0].views.shape == (3, 3, 16, 16, 3)
    assert paths[0].endswith('ciln_test_0.h5')
    with open(os.path.join(out, 'train_specs.json')) as f:
        assert len(json.load(f)) == 2

def test_write_manifest_and_main(tmp_path):
    manifest = str(tmp_path / 'specs.json')
    save_manifest([SyntheticSpec(M=2, N=2, H=8, W=8, texture_seed=1)], manifest)
    paths = write_manifest(manifest, str(tmp_path / 'scenes'))
    assert [ os.path.basename(p) for p in paths ] == ['scene_000']
    getdata_main(['manifest', manifest, str(tmp_path / 'again')])
    assert os.path.isdir(str(tmp_path / 'again' / 'scene_000'))
    with pytest.raises(RuntimeError):
        getdata_main(['render'])

def test_summarize_logs_and_reports(tmp_path, small_lf):
    log = str(tmp_path / 'train_log.csv')
    write_log([ (i, 1.0 / i) for i in range(1, 21) ], log)
    row = summarize_log(log)
    assert row['steps'] == 20
    assert row['first_loss'] == 1.0
    assert row['head_mean'] == pytest.approx((1.0 + 0.5) / 2)
    report = str(tmp_path / 'report.json')
    evaluate_views(OracleModel(), [small_lf], EvalTask('corners', (3, 3))).write_json(report, timing=False)
    logs, reports = summarize([log, report, str(tmp_path / 'notes.txt')])
    assert len(logs) == 1
    assert reports['psnr_db'].iloc[0] == 99.0
    assert reports['grid'].iloc[0] == '3x3'
    summarize_main([log, report])
    with pytest.raises(SystemExit):
        summarize_main([str(tmp_path / 'missing.csv')])
