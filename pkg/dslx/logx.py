"""
Run logging for dslx commands.

`logx` is a shared LogX object. After `initialize(logdir)` every message goes
to stdout and logging.log, metric rows go to metrics.csv (read back by sumx),
and scalars optionally go to a tensorboard event file.
"""
from collections import defaultdict
from contextlib import contextmanager

import csv
import os
import time

from tensorboardX import SummaryWriter

from .utils import save_hparams, trn_names, val_names, ConditionalProxy


class LogX(object):
    def __init__(self):
        self.initialized = False
        self.tb_writer = None
        self.eager_flush = True
        self.epoch = defaultdict(lambda: 0)
        self.tensorboard = ConditionalProxy(None, False)

    def initialize(self, logdir, hparams=None, tensorboard=False,
                   no_timestamp=False, eager_flush=True):
        '''
        Initialize logx

        inputs
        - logdir - where to write logfiles
        - hparams - resolved config dict, dumped to hparams.json
        - tensorboard - whether to write to tensorboard file
        - no_timestamp - leave timestamps out of metrics.csv
        - eager_flush - call `flush` after every tensorboard write
        '''
        self.close()
        self.logdir = logdir
        os.makedirs(self.logdir, exist_ok=True)

        if hparams is not None:
            save_hparams(hparams, self.logdir)

        if tensorboard:
            self.tb_writer = SummaryWriter(log_dir=self.logdir, flush_secs=1)
        else:
            self.tb_writer = None
        self.eager_flush = eager_flush
        self.tensorboard = ConditionalProxy(
            self.tb_writer, tensorboard, post_hook=self._flush_tensorboard)

        self.metrics_fp = open(os.path.join(self.logdir, 'metrics.csv'),
                               mode='a+')
        self.metrics_writer = csv.writer(self.metrics_fp, delimiter=',')
        self.log_file = open(os.path.join(self.logdir, 'logging.log'),
                             mode='a+')
        self.epoch = defaultdict(lambda: 0)
        self.no_timestamp = no_timestamp
        self.initialized = True

        # Initial timestamp, so that epoch time calculation is correct
        csv_line = ['start', 'start/step', 0]
        if not self.no_timestamp:
            csv_line += ['timestamp', time.time()]
        self.metrics_writer.writerow(csv_line)
        self.metrics_fp.flush()

    def close(self):
        if not self.initialized:
            return
        self.metrics_fp.close()
        self.log_file.close()
        if self.tb_writer is not None:
            self.tb_writer.close()
        self.initialized = False
        self.tensorboard = ConditionalProxy(None, False)

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    def msg(self, msg):
        '''
        Print out message to std and to a logfile
        '''
        print(msg)
        if self.initialized:
            self.log_file.write(msg + '\n')
            self.log_file.flush()

    def add_scalar(self, name, val, idx):
        self.tensorboard.add_scalar(name, val, idx)

    def _flush_tensorboard(self):
        if self.eager_flush and self.tb_writer is not None:
            self.tb_writer.flush()

    @contextmanager
    def suspend_flush(self, flush_at_end=True):
        prev_flush = self.eager_flush
        self.eager_flush = False
        yield
        self.eager_flush = prev_flush
        if flush_at_end:
            self._flush_tensorboard()

    def metric(self, phase, metrics, epoch=None):
        """Record train/val metrics to metrics.csv and tensorboard.

        Arguments:
            phase: 'train' or 'val'. sumx only summarizes val metrics.
            metrics: dictionary of metrics to record
            epoch: (optional) epoch or evaluation index
        """
        if phase in trn_names:
            canonical_phase = 'train'
        elif phase in val_names:
            canonical_phase = 'val'
        else:
            raise ValueError('expected phase to be one of {} {}'.format(
                trn_names, val_names))

        if not self.initialized:
            return

        if epoch is not None:
            self.epoch[canonical_phase] = epoch

        csv_line = [canonical_phase]
        for k, v in metrics.items():
            csv_line.append(k)
            csv_line.append(v)
        csv_line.append('epoch')
        csv_line.append(self.epoch[canonical_phase])
        if not self.no_timestamp:
            csv_line.append('timestamp')
            csv_line.append(time.time())
        self.metrics_writer.writerow(csv_line)
        self.metrics_fp.flush()

        with self.suspend_flush():
            for k, v in metrics.items():
                if isinstance(v, (int, float)):
                    self.add_scalar('{}/{}'.format(canonical_phase, k), v,
                                    self.epoch[canonical_phase])

        if epoch is None:
            self.epoch[canonical_phase] += 1


# Importing logx gives you access to this shared object
logx = LogX()
