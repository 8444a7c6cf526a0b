#!/usr/bin/env python
### Generates synthetic light field datasets.
#
#   CilnData suite [out_dir] [num_train] [num_test] [seed]
#       random train/test scenes saved as h5 bundles, plus train_ciln.list
#       and test_ciln.list naming them
#   CilnData manifest specs.json [out_dir]
#       one light field directory per record of a synthetic manifest

import os
import sys
import logging

from .synthetic import random_specs, load_manifest, save_manifest, synth_lightfield
from .lightfield import save_lightfield, save_lightfield_h5
from ..util.utils import ensure_directory

def write_suite(out_dir, num_train=50, num_test=10, seed=0, **extents):
    """Writes num_train + num_test random scenes; returns the two list file paths"""
    ensure_directory(out_dir)
    specs = random_specs(num_train + num_test, seed, **extents)
    lists = []
    for label, chunk in (('train', specs[:num_train]), ('test', specs[num_train:])):
        names = []
        for i, spec in enumerate(chunk):
            name = os.path.join(out_dir, "ciln_{}_{}.h5".format(label, i))
            save_lightfield_h5(synth_lightfield(spec), name)
            names.append(name)
        save_manifest(chunk, os.path.join(out_dir, "{}_specs.json".format(label)))
        list_name = os.path.join(out_dir, "{}_ciln.list".format(label))
        with open(list_name, 'w') as list_file:
            for n in names:
                list_file.write(n + "\n")
        lists.append(list_name)
        logging.info("wrote {} {} scenes to {}".format(len(names), label, out_dir))
    return lists

def write_manifest(manifest, out_dir):
    """Writes one light field directory per manifest record; returns their paths"""
    ensure_directory(out_dir)
    paths = []
    for i, spec in enumerate(load_manifest(manifest)):
        path = os.path.join(out_dir, "scene_{:03d}".format(i))
        save_lightfield(synth_lightfield(spec), path)
        paths.append(path)
    logging.info("wrote {} scenes from {} to {}".format(len(paths), manifest, out_dir))
    return paths

def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        raise RuntimeError('Usage: CilnData suite|manifest ...')
    command = argv[0]
    args = argv[1:]
    if command.lower() == 'suite':
        out_dir = args[0] if len(args) > 0 else os.getcwd()
        num_train = int(args[1]) if len(args) > 1 else 50
        num_test = int(args[2]) if len(args) > 2 else 10
        seed = int(args[3]) if len(args) > 3 else 0
        write_suite(out_dir, num_train, num_test, seed)
    elif command.lower() == 'manifest':
        out_dir = args[1] if len(args) > 1 else os.getcwd()
        write_manifest(args[0], out_dir)
    else:
        raise RuntimeError('Unknown command: {}'.format(command))

if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    main()
