#!/usr/bin/env python
### Tabulates training logs (step,loss CSV) and evaluation reports (JSON)

import os
import json
import logging
import sys
import pandas as pd

def summarize_log(filename, tail=0.1):
    """One row for a training log: steps, first and last loss, mean of the first and last 10%"""
    frame = pd.read_csv(filename)
    n = len(frame)
    k = max(1, int(n * tail)) if n else 0
    return {
        'file': filename,
        'steps': n,
        'first_loss': float(frame['loss'].iloc[0]) if n else float('nan'),
        'last_loss': float(frame['loss'].iloc[-1]) if n else float('nan'),
        'head_mean': float(frame['loss'].iloc[:k].mean()) if n else float('nan'),
        'tail_mean': float(frame['loss'].iloc[-k:].mean()) if n else float('nan'),
    }

def summarize_report(filename):
    """One row for an evaluation report"""
    with open(filename) as f:
        data = json.load(f)
    task = data['task']
    return {
        'file': filename,
        'pattern': json.dumps(task['input_pattern']) if not isinstance(task['input_pattern'], str) else task['input_pattern'],
        'grid': 'x'.join(str(g) for g in task['target_grid']),
        'factor': task['spatial_factor'],
        'drop': task['drop_rate'],
        'scenes': data['aggregate']['scenes'],
        'psnr_db': data['aggregate']['psnr_db'],
        'ssim': data['aggregate']['ssim'],
    }

def summarize(filenames):
    """Returns (logs, reports) DataFrames for the given .csv logs and .json reports"""
    logs, reports = [], []
    for filename in filenames:
        if filename.endswith('.csv'):
            logs.append(summarize_log(filename))
        elif filename.endswith('.json'):
            reports.append(summarize_report(filename))
        else:
            logging.warning("skipping {}, neither a .csv log nor a .json report".format(filename))
    logs = pd.DataFrame(logs)
    reports = pd.DataFrame(reports)
    if len(reports):
        reports = reports.sort_values('psnr_db', ascending=False)
    return logs, reports

def main(argv=None):
    logging.basicConfig(level=logging.INFO)
    filenames = sys.argv[1:] if argv is None else argv
    if not filenames:
        logging.fatal('Usage: CilnSummary [train_log.csv ...] [report.json ...]')
        sys.exit(1)
    missing = [ f for f in filenames if not os.path.isfile(f) ]
    if missing:
        logging.fatal('missing files: {}'.format(missing))
        sys.exit(2)
    logs, reports = summarize(filenames)
    if len(logs):
        logging.info(f'\n{logs}')
    if len(reports):
        logging.info(f'\n{reports}')

if __name__ == '__main__':
    main()
