### Training loop: one optimizer step per batch, checkpointing and loss logging

import os
import re
import time
import logging
import numpy as np
import pandas as pd

from .tensor import reshape, scale, backward
from .loss import combined_loss
from .optimizer import Adam, adam_step
from .data import BatchLoader
from ..models.ciln import init_model
from ..models.checkpoint import save_model, load_model
from ..util.timeline import Timeline, timeline
from ..util.rng import split_seed
from ..util.utils import NumericError, DataError

LOG_COLUMNS = ['step', 'loss']

def train_step(model, batch, opt, lambda_epi=1.0, step=None):
    """Forward, backward and one Adam update on a batch of TrainSamples.
        Returns the batch-mean loss measured before the update.
    """
    if not batch:
        raise ValueError("train_step needs a non-empty batch")
    params = model.parameters()
    for p in params:
        p.zero_grad()
    total = 0.0
    for sample in batch:
        M, N = sample.grid
        pred = model.render(sample.input, sample.height, sample.width, sample.angular_coords())
        pred = reshape(pred, (M, N, sample.height, sample.width, pred.shape[-1]))
        loss = combined_loss(pred, sample.target_views(), lambda_epi)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericError("non-finite loss {} at step {}; sample seeds {}".format(
                value, step, [ s.seed for s in batch ]))
        # gradients of the batch mean accumulate sample by sample
        backward(scale(loss, 1.0 / len(batch)))
        total += value
    for name, p in model.params.items():
        if not np.all(np.isfinite(p.grad)):
            raise NumericError("non-finite gradient of {} at step {}; sample seeds {}".format(
                name, step, [ s.seed for s in batch ]))
    adam_step(params, opt)
    return total / len(batch)

def write_log(history, path):
    pd.DataFrame(history, columns=LOG_COLUMNS).to_csv(path, index=False)

def read_log(path):
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as e:
        raise DataError("cannot read training log {}: {}".format(path, e))
    if list(frame.columns) != LOG_COLUMNS:
        raise DataError("training log {} has columns {}, expected {}".format(path, list(frame.columns), LOG_COLUMNS))
    return [ (int(s), float(l)) for s, l in zip(frame['step'], frame['loss']) ]

class Trainer(object):
    """Runs training of one model.
        Attributes:
          model: the CilnModel being trained
          cfg: TrainConfig
          loader: BatchLoader producing the batches
          optimizer: Adam bound to the model parameters
          step: number of steps completed
          history: list of (step, loss) pairs, step counted from 1
          checkpoint: base name of checkpoint files, or None
          checkpoint_interval: steps between checkpoints
          monitor: optional Monitor sampling CPU and memory
    """

    def __init__(self, model, cfg, dataset, checkpoint=None, monitor=None, threads=None):
        self.model = model
        self.cfg = cfg
        self.loader = BatchLoader(dataset, cfg, threads=threads)
        self.optimizer = Adam(model.parameters(), cfg.learning_rate, cfg.beta_1, cfg.beta_2, cfg.epsilon)
        self.step = 0
        self.history = []
        self.checkpoint = checkpoint
        self.checkpoint_interval = int(cfg.checkpoint_interval)
        self.monitor = monitor

    def checkpoint_name(self, step):
        return '{}-{}'.format(self.checkpoint, step)

    def save_checkpoint(self, force=False):
        if self.checkpoint is None or not (force or self.step % self.checkpoint_interval == 0):
            return
        file_name = self.checkpoint_name(self.step)
        logging.info("Checkpointing to {}".format(file_name))
        save_model(self.model, file_name + '.ciln')
        self.optimizer.save(file_name + '.algo')
        write_log(self.history, file_name + '.csv')
        with open(self.checkpoint + '.latest', 'w') as latest:
            latest.write(file_name)

    def restore(self, restore):
        """Resumes from a checkpoint name or base name (its .latest pointer is followed)"""
        restore = re.sub(r'\.(algo|ciln|csv)$', '', restore)
        if os.path.isfile(restore + '.latest'):
            with open(restore + '.latest', 'r') as latest:
                restore = latest.read().splitlines()[-1]
        match = re.search(r'-(\d+)$', restore)
        if not match or not os.path.isfile(restore + '.ciln'):
            raise DataError("no checkpoint to restore at {}".format(restore))
        restored = load_model(restore + '.ciln')
        if restored.config != self.model.config:
            raise DataError("checkpoint {} holds a {}, the run expects a {}".format(restore, restored.config, self.model.config))
        for name, p in restored.params.items():
            self.model.params[name].data[...] = p.data
        if not self.optimizer.load(restore + '.algo'):
            raise DataError("cannot restore optimizer state from {}.algo".format(restore))
        self.step = int(match.group(1))
        self.history = read_log(restore + '.csv')[:self.step]
        logging.info("Restored training at step {} from {}".format(self.step, restore))

    def train(self):
        steps = int(self.cfg.steps)
        Timeline.begin('train', 'train', first_step=self.step)
        start_time = time.time()
        if self.monitor:
            self.monitor.start_monitor()
        logging.info("training {} parameters for {} steps from step {}".format(
            self.model.count_parameters(), steps, self.step))
        try:
            for step, batch in self.loader.generate_data(self.step, steps):
                self.optimizer.set_learning_rate(self.cfg.learning_rate_at(step))
                with Timeline.span('train_step', 'train', step=step + 1):
                    loss = train_step(self.model, batch, self.optimizer.state, self.cfg.lambda_epi, step + 1)
                self.step = step + 1
                self.history.append((self.step, loss))
                if self.step % int(self.cfg.log_interval) == 0 or self.step == steps:
                    logging.info("step {:d}/{:d} loss {:.6f}".format(self.step, steps, loss))
                else:
                    logging.debug("step {:d} loss {:.6f}".format(self.step, loss))
                self.save_checkpoint()
        finally:
            if self.monitor:
                self.monitor.stop_monitor()
            Timeline.end('train', 'train', last_step=self.step)
        if steps > 0 and self.step % self.checkpoint_interval != 0:
            self.save_checkpoint(force=True)
        logging.info("Signing off after {:.1f} s".format(time.time() - start_time))
        if self.monitor:
            logging.info("monitor [cpu %, memory MB]: {}".format(self.monitor.get_stats()))
        return self.model, self.history

@timeline
def train(dataset, cfg, model=None, checkpoint=None, restore=None, monitor=None, threads=None):
    """Trains a model on a list of LightFields; returns (model, [(step, loss), ...])"""
    if not dataset:
        raise DataError("cannot train on an empty dataset")
    if model is None:
        model = init_model(cfg.model_config(), split_seed(cfg.seed, 0))
    trainer = Trainer(model, cfg, dataset, checkpoint=checkpoint, monitor=monitor, threads=threads)
    if restore:
        trainer.restore(restore)
    return trainer.train()
