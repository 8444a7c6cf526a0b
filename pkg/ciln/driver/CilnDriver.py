#!/usr/bin/env python3

### Command line entry point: synth, train, infer, eval, epi and bench subcommands.

import os
import sys
import json
import logging
import argparse
import numpy as np

import ciln
from ciln.data.lightfield import (LightField, ViewPattern, load_any, load_dataset, save_lightfield, save_lightfield_h5, save_image,
                                  select_views, extract_epi, angular_grid_coords)
from ciln.data.degrade import downsample_views, drop_pixels, downsampled_extent
from ciln.data.synthetic import synth_lightfield, load_manifest, random_specs, save_manifest
from ciln.models.checkpoint import load_model, save_model
from ciln.models.Models import make_model
from ciln.train.algo import TrainConfig, apply_overrides
from ciln.train.process import train, write_log
from ciln.evaluate.evaluation import (EvalTask, evaluate_views, OracleModel, NearestViewBaseline, measure_runtime)
from ciln.evaluate.metrics import psnr, ssim
from ciln.util.logger import initialize_logger
from ciln.util.timeline import Timeline
from ciln.util.monitor import Monitor
from ciln.util.rng import make_rng, split_seed
from ciln.util.utils import (Error, UsageError, DataError, ShapeError, NumericError, parse_grid, file_digest,
                             ensure_directory)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

class ArgumentParser(argparse.ArgumentParser):
    """argparse parser reporting bad arguments as UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)

def add_log_option(parser):
    # logging configuration
    parser.add_argument('--log-file', default=None, dest='log_file', help='log file to write, in addition to output stream')
    parser.add_argument('--log-level', default='info', dest='log_level', help='log level (trace, debug, info, warning, error)')
    parser.add_argument('--timeline', action='store_true', help='record a chrome://tracing timeline in the output folder')

def add_common_options(parser):
    parser.add_argument('--config', default=None, help='JSON configuration file')
    parser.add_argument('--seed', type=int, default=None, help='random seed, overrides the configuration')
    parser.add_argument('--out', default='.', help='output folder')
    parser.add_argument('--set', action='append', default=[], dest='overrides', metavar='KEY=VALUE',
                        help='override a configuration entry, may be repeated')
    add_log_option(parser)

def add_input_options(parser):
    parser.add_argument('--pattern', default=None, help='input view pattern: corners, center, cross or a JSON list of [row, col]')
    parser.add_argument('--input-factor', type=float, default=1.0, dest='input_factor',
                        help='downsample the input views by this factor first')
    parser.add_argument('--drop-rate', type=float, default=0.0, dest='drop_rate', help='fraction of input pixels to drop')

def add_query_options(parser):
    angular = parser.add_mutually_exclusive_group()
    angular.add_argument('--angular-grid', default=None, dest='angular_grid', help='uniform MxN output grid')
    angular.add_argument('--angular-list', default=None, dest='angular_list', help='JSON file with a list of [s, t] coordinates')
    spatial = parser.add_mutually_exclusive_group()
    spatial.add_argument('--spatial-scale', type=float, default=None, dest='spatial_scale',
                         help='output size relative to the input views')
    spatial.add_argument('--spatial-size', default=None, dest='spatial_size', help='absolute HxW output size')

def make_parser():
    parser = ArgumentParser(prog='ciln', description='Conditional implicit light field network')
    parser.add_argument('--version', action='version', version=ciln.__version__)
    commands = parser.add_subparsers(dest='command', parser_class=ArgumentParser)
    commands.required = True

    synth = commands.add_parser('synth', help='write synthetic light fields')
    add_common_options(synth)
    source = synth.add_mutually_exclusive_group(required=True)
    source.add_argument('--manifest', help='JSON array of synthetic scene records')
    source.add_argument('--suite', type=int, help='number of random scenes to generate')
    synth.add_argument('--format', choices=['dir', 'h5'], default='dir', help='light field directories or h5 bundles')
    synth.add_argument('--grid', default='7x7', help='angular grid of --suite scenes')
    synth.add_argument('--size', default='64x64', help='spatial size of --suite scenes')

    train_cmd = commands.add_parser('train', help='train a model')
    add_common_options(train_cmd)
    train_cmd.add_argument('--data', required=True, help='light field, folder of light fields or list file')
    train_cmd.add_argument('--checkpoint', default=None, help='checkpoint base name, relative to --out')
    train_cmd.add_argument('--restore', default=None, help='checkpoint base name or file to resume from')
    train_cmd.add_argument('--threads', type=int, default=None, help='sample generation threads (default $CILN_THREADS or 1)')
    train_cmd.add_argument('--monitor', action='store_true', help='monitor CPU and memory usage')

    infer = commands.add_parser('infer', help='reconstruct views from a checkpoint')
    add_common_options(infer)
    infer.add_argument('--checkpoint', required=True, help='model file')
    infer.add_argument('--input', required=True, help='light field holding the input views')
    add_input_options(infer)
    add_query_options(infer)
    infer.add_argument('--ground-truth', default=None, dest='ground_truth', help='light field to write error maps against')

    evaluate = commands.add_parser('eval', help='score novel views of a dataset')
    add_common_options(evaluate)
    evaluate.add_argument('--data', required=True, help='light field, folder of light fields or list file')
    reconstructor = evaluate.add_mutually_exclusive_group(required=True)
    reconstructor.add_argument('--checkpoint', default=None, help='model file')
    reconstructor.add_argument('--oracle', action='store_true', help='score the ground truth itself')
    reconstructor.add_argument('--baseline', choices=['nearest'], default=None, help='score a reference reconstructor')
    add_input_options(evaluate)

    epi = commands.add_parser('epi', help='write epipolar plane images')
    add_common_options(epi)
    epi.add_argument('--input', required=True, help='light field')
    epi.add_argument('--orientation', choices=['horizontal', 'vertical'], default='horizontal')
    epi.add_argument('--angular', type=int, default=None, help='fixed angular index (default: centre)')
    epi.add_argument('--spatial', type=int, default=None, help='fixed spatial index (default: centre)')
    epi.add_argument('--zoom', type=int, default=1, help='repeat every angular row this many times')
    epi.add_argument('--checkpoint', default=None, help='also write the EPI of a reconstruction by this model')
    add_input_options(epi)

    bench = commands.add_parser('bench', help='measure reconstruction time')
    add_common_options(bench)
    bench.add_argument('--checkpoint', default=None, help='model file (default: a freshly initialized model)')
    bench.add_argument('--model', default='ciln', help='architecture preset when no checkpoint is given')
    bench.add_argument('--input-grid', default='7x7', dest='input_grid', help='grid the input pattern is taken from')
    bench.add_argument('--size', default='200x200', help='spatial size of the input views')
    bench.add_argument('--pattern', default=None, help='input view pattern')
    bench.add_argument('--angular-grid', default='7x7', dest='angular_grid', help='output grid')
    bench.add_argument('--repeats', type=int, default=10)
    return parser

def load_config(args, defaults=None):
    """Config dict from --config and --set; --seed wins over both"""
    config = dict(defaults or {})
    if args.config:
        try:
            with open(args.config) as config_file:
                config.update(json.load(config_file))
        except FileNotFoundError:
            raise UsageError("missing config file {}".format(args.config))
        except ValueError as e:
            raise UsageError("bad config file {}: {}".format(args.config, e))
    config = apply_overrides(config, args.overrides)
    if args.seed is not None:
        config['seed'] = args.seed
    return config

def write_manifest(args, argv, config, inputs, outputs):
    """Records what is needed to re-run the command"""
    manifest = {'command': args.command,
                'argv': list(argv),
                'config': config,
                'seed': config.get('seed', args.seed) if isinstance(config, dict) else args.seed,
                'version': ciln.__version__,
                'inputs': { p: file_digest(p) for p in inputs if os.path.exists(p) },
                'outputs': sorted(outputs)}
    with open(os.path.join(args.out, 'manifest.json'), 'w') as manifest_file:
        json.dump(manifest, manifest_file, indent=2, sort_keys=True)

def build_stack(lf, pattern, factor, drop_rate, seed):
    stack = select_views(lf, pattern)
    if factor < 1.0:
        stack = downsample_views(stack, factor)
    if drop_rate > 0.0:
        stack = drop_pixels(stack, drop_rate, seed)
    return stack

def query_coords(args, default_grid):
    """Angular coordinates of the query, and the grid they form if any"""
    if args.angular_list:
        try:
            with open(args.angular_list) as coord_file:
                coords = [ (float(s), float(t)) for s, t in json.load(coord_file) ]
        except FileNotFoundError:
            raise DataError("missing angular coordinate list {}".format(args.angular_list))
        except (ValueError, TypeError) as e:
            raise DataError("bad angular coordinate list {}: {}".format(args.angular_list, e))
        if not coords:
            raise DataError("angular coordinate list {} is empty".format(args.angular_list))
        for s, t in coords:
            if abs(s) > 1 or abs(t) > 1:
                logging.warning("angular coordinate ({}, {}) extrapolates beyond the trained grid".format(s, t))
        return coords, None
    grid = parse_grid(args.angular_grid) if args.angular_grid else tuple(default_grid)
    return angular_grid_coords(*grid), grid

def query_size(args, stack):
    if args.spatial_size:
        return parse_grid(args.spatial_size)
    scale = args.spatial_scale if args.spatial_scale is not None else 1.0
    if scale <= 0:
        raise UsageError("--spatial-scale must be positive, got {}".format(scale))
    height, width = downsampled_extent(stack.height, scale), downsampled_extent(stack.width, scale)
    if height < 1 or width < 1:
        raise UsageError("--spatial-scale {} gives an empty output".format(scale))
    return height, width

def run_synth(args, argv):
    config = load_config(args, {'seed': 0})
    outputs = []
    inputs = []
    if args.manifest:
        specs = load_manifest(args.manifest)
        inputs.append(args.manifest)
    else:
        M, N = parse_grid(args.grid)
        H, W = parse_grid(args.size)
        specs = random_specs(args.suite, int(config['seed']), M=M, N=N, H=H, W=W)
        save_manifest(specs, os.path.join(args.out, 'specs.json'))
        outputs.append('specs.json')
    for i, spec in enumerate(specs):
        lf = synth_lightfield(spec)
        if args.format == 'h5':
            name = "scene_{:03d}.h5".format(i)
            save_lightfield_h5(lf, os.path.join(args.out, name))
        else:
            name = "scene_{:03d}".format(i)
            save_lightfield(lf, os.path.join(args.out, name))
        outputs.append(name)
    logging.info("wrote {} synthetic light fields to {}".format(len(specs), args.out))
    write_manifest(args, argv, config, inputs, outputs)

def run_train(args, argv):
    config = load_config(args)
    cfg = TrainConfig(**config)
    logging.info(str(cfg))
    dataset, paths = load_dataset(args.data)
    cfg.to_json(os.path.join(args.out, 'train_config.json'))
    checkpoint = os.path.join(args.out, args.checkpoint or 'ciln')
    monitor = Monitor() if args.monitor else None
    model, history = train(dataset, cfg, checkpoint=checkpoint, restore=args.restore, monitor=monitor, threads=args.threads)
    save_model(model, os.path.join(args.out, 'model.ciln'))
    write_log(history, os.path.join(args.out, 'train_log.csv'))
    write_manifest(args, argv, cfg.get_config(), paths, ['train_config.json', 'model.ciln', 'train_log.csv'])

def run_infer(args, argv):
    config = load_config(args, {'seed': 0})
    model = load_model(args.checkpoint)
    lf = load_any(args.input)
    pattern = ViewPattern.from_spec(args.pattern or 'corners', lf.grid)
    stack = build_stack(lf, pattern, args.input_factor, args.drop_rate, int(config['seed']))
    coords, grid = query_coords(args, model.config.grid)
    height, width = query_size(args, stack)
    views = model.reconstruct(stack, height, width, coords)
    if not np.all(np.isfinite(views)):
        raise NumericError("reconstruction produced non-finite values")
    views = np.clip(views, 0.0, 1.0)
    outputs = []
    target = os.path.join(args.out, 'views')
    if grid is not None:
        save_lightfield(LightField(views.reshape(grid + views.shape[1:])), target)
        outputs.append('views')
    else:
        ensure_directory(target)
        for k, view in enumerate(views):
            save_image(os.path.join(target, 'view_{:03d}.png'.format(k)), view)
        with open(os.path.join(target, 'coords.json'), 'w') as coord_file:
            json.dump([ list(c) for c in coords ], coord_file)
        outputs.append('views')
    logging.info("wrote {} views of {}x{} to {}".format(len(views), height, width, target))
    inputs = [args.checkpoint, args.input]
    if args.ground_truth:
        truth = load_any(args.ground_truth)
        if grid is None or tuple(truth.grid) != tuple(grid) or (truth.height, truth.width) != (height, width):
            raise UsageError("error maps need a grid query matching the ground truth {}".format(truth))
        errors = np.abs(views.reshape(truth.views.shape) - truth.views)
        error_dir = ensure_directory(os.path.join(args.out, 'errors'))
        for s in range(grid[0]):
            for t in range(grid[1]):
                k = s * grid[1] + t
                save_image(os.path.join(error_dir, 'error_r{}_c{}.png'.format(s, t)), errors[s, t])
                logging.info("view ({},{}): PSNR {:.2f} dB, SSIM {:.4f}".format(
                    s, t, psnr(views[k], truth.views[s, t]), ssim(views[k], truth.views[s, t])))
        inputs.append(args.ground_truth)
        outputs.append('errors')
    write_manifest(args, argv, config, inputs, outputs)

def run_eval(args, argv):
    config = load_config(args, {'seed': 0})
    dataset, paths = load_dataset(args.data)
    grid = dataset[0].grid
    task = EvalTask(args.pattern or 'corners', grid, args.input_factor, args.drop_rate, int(config['seed']))
    if args.oracle:
        model = OracleModel()
    elif args.baseline == 'nearest':
        model = NearestViewBaseline()
    else:
        model = load_model(args.checkpoint)
        paths = [args.checkpoint] + paths
    names = [ os.path.splitext(os.path.basename(os.path.normpath(p)))[0] for p in paths[-len(dataset):] ]
    report = evaluate_views(model, dataset, task, names)
    report.write_csv(os.path.join(args.out, 'report.csv'))
    report.write_json(os.path.join(args.out, 'report.json'), timing=False)
    with open(os.path.join(args.out, 'timing.json'), 'w') as timing_file:
        json.dump(report.timing, timing_file, indent=2)
    logging.info("mean PSNR {:.2f} dB, SSIM {:.4f} over {} scenes".format(
        report.aggregate['psnr_db'], report.aggregate['ssim'], report.aggregate['scenes']))
    write_manifest(args, argv, dict(config, task=task.get_config()), paths, ['report.csv', 'report.json', 'timing.json'])

def run_epi(args, argv):
    config = load_config(args, {'seed': 0})
    lf = load_any(args.input)
    horizontal = args.orientation == 'horizontal'
    angular = args.angular if args.angular is not None else (lf.angular_rows if horizontal else lf.angular_cols) // 2
    spatial = args.spatial if args.spatial is not None else (lf.height if horizontal else lf.width) // 2
    zoom = max(1, args.zoom)
    name = 'epi_{}_a{}_p{}'.format(args.orientation, angular, spatial)
    outputs = [name + '.png']
    save_image(os.path.join(args.out, name + '.png'), np.repeat(extract_epi(lf, args.orientation, angular, spatial), zoom, axis=0))
    inputs = [args.input]
    if args.checkpoint:
        model = load_model(args.checkpoint)
        pattern = ViewPattern.from_spec(args.pattern or 'corners', lf.grid)
        stack = build_stack(lf, pattern, args.input_factor, args.drop_rate, int(config['seed']))
        views = model.reconstruct(stack, lf.height, lf.width, angular_grid_coords(*lf.grid))
        recon = LightField(np.clip(views, 0.0, 1.0).reshape(lf.views.shape))
        save_image(os.path.join(args.out, name + '_recon.png'), np.repeat(extract_epi(recon, args.orientation, angular, spatial), zoom, axis=0))
        outputs.append(name + '_recon.png')
        inputs.append(args.checkpoint)
    logging.info("wrote {} to {}".format(', '.join(outputs), args.out))
    write_manifest(args, argv, config, inputs, outputs)

def run_bench(args, argv):
    config = load_config(args, {'seed': 0})
    seed = int(config['seed'])
    if args.checkpoint:
        model = load_model(args.checkpoint)
    else:
        model = make_model(args.model, seed=split_seed(seed, 0), **config.get('model_args', {}))
    input_grid = parse_grid(args.input_grid)
    height, width = parse_grid(args.size)
    pattern = ViewPattern.from_spec(args.pattern or 'corners', input_grid)
    rng = make_rng(seed, 3)
    views = rng.random(input_grid + (height, width, model.config.c)).astype(np.float32)
    stack = select_views(LightField(views), pattern)
    out_grid = parse_grid(args.angular_grid)
    stats = measure_runtime(model, stack, height, width, angular_grid_coords(*out_grid), args.repeats)
    row = "{},{}x{}x{},{}x{},{:.1f},{:.2f},{}".format(
        args.checkpoint or args.model, pattern.v, height, width, out_grid[0], out_grid[1],
        stats.mean_ms, stats.std_ms, stats.peak_mb if stats.peak_mb is not None else '')
    print("model,input,output,mean_ms,std_ms,peak_mb")
    print(row)
    with open(os.path.join(args.out, 'bench.csv'), 'w') as bench_file:
        bench_file.write("model,input,output,mean_ms,std_ms,peak_mb\n" + row + "\n")
    write_manifest(args, argv, config, [args.checkpoint] if args.checkpoint else [], ['bench.csv'])

COMMANDS = {'synth': run_synth, 'train': run_train, 'infer': run_infer, 'eval': run_eval,
            'epi': run_epi, 'bench': run_bench}

def run(argv):
    """Runs one command; returns the process exit code"""
    argv = list(argv)
    try:
        args = make_parser().parse_args(argv)
    except UsageError as e:
        logging.error("usage error: {}".format(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_OK
    try:
        initialize_logger(filename=args.log_file, file_level=args.log_level, stream_level=args.log_level,
                          command=args.command)
    except (ValueError, OSError) as e:
        logging.error("usage error: {}".format(e))
        return EXIT_USAGE
    try:
        ensure_directory(args.out)
        if args.timeline:
            Timeline.enable('ciln ' + args.command)
        COMMANDS[args.command](args, argv)
    except (UsageError, argparse.ArgumentTypeError) as e:
        logging.error("usage error: {}".format(e))
        return EXIT_USAGE
    except NumericError as e:
        logging.error("numeric error: {}".format(e))
        return EXIT_NUMERIC
    except (DataError, ShapeError, OSError) as e:
        logging.error("data error: {}".format(e))
        return EXIT_DATA
    except (Error, ValueError) as e:
        logging.error("usage error: {}".format(e))
        return EXIT_USAGE
    finally:
        if args.timeline:
            Timeline.collect(os.path.join(args.out, 'timeline.json'))
            Timeline.disable()
    return EXIT_OK

def main():
    sys.exit(run(sys.argv[1:]))

if __name__ == '__main__':
    main()
