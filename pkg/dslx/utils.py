"""
Shared helpers: error classes, config file reading, run directories,
hyperparameter dumps, seeded random streams and ConditionalProxy.
"""
import json
import os
from datetime import datetime

import numpy as np
import yaml
from coolname import generate_slug


class DslxError(Exception):
    """Base class for every error the command line maps to an exit code."""
    exit_code = 1


class ConfigError(DslxError):
    exit_code = 2


class ShapeError(ConfigError):
    pass


class DataIOError(DslxError):
    exit_code = 3


class NumericalError(DslxError):
    exit_code = 4


class DomainError(DslxError):
    exit_code = 5


class FeasibilityError(DomainError):
    """A trajectory leg needs more than the defender's angular speed."""

    def __init__(self, defender_id, leg, required_speed, max_speed):
        self.defender_id = defender_id
        self.leg = leg
        self.required_speed = required_speed
        self.max_speed = max_speed
        super(FeasibilityError, self).__init__(
            'defender {} leg {} -> {} needs {:.4f} rad/s > {:.4f} rad/s'.format(
                defender_id, leg[0], leg[1], required_speed, max_speed))


class InfeasibleAssignmentError(NumericalError):
    def __init__(self, columns):
        self.columns = list(columns)
        super(InfeasibleAssignmentError, self).__init__(
            'no feasible row for task columns {}'.format(self.columns))


class DegenerateInputError(NumericalError):
    pass


class DegenerateUpdateError(NumericalError):
    pass


class InitError(NumericalError):
    def __init__(self, zones):
        self.zones = list(zones)
        super(InitError, self).__init__(
            'no initializing sample for zones {}'.format(
                ', '.join('z_{}'.format(z) for z in self.zones)))


class CalibrationError(NumericalError):
    def __init__(self, msg, trace):
        self.trace = list(trace)
        super(CalibrationError, self).__init__(msg)


trn_names = ('trn', 'train', 'training')
val_names = ('val', 'validate', 'validation', 'test', 'eval')


def read_config_file(config_fn):
    """
    Load a yaml config file, turning parse failures into ConfigError with the
    line that failed.
    """
    if not os.path.isfile(config_fn):
        raise DataIOError('can\'t find config file {}'.format(config_fn))
    with open(config_fn) as fp:
        try:
            config = yaml.safe_load(fp)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            where = ' line {}'.format(mark.line + 1) if mark else ''
            raise ConfigError('{}{}: {}'.format(config_fn, where, e))
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError('{}: expected a mapping at top level'.format(
            config_fn))
    return config


def make_run_dir(logroot, exp_name, tag=None, no_cooldir=False):
    """
    Build <logroot>/<exp_name>/<run> where run is a coolname slug plus a
    datestring, optionally prefixed with tag.
    """
    tagname = tag + '_' if tag else ''
    datestr = datetime.now().strftime("_%Y.%m.%d_%H.%M")
    if no_cooldir:
        run_name = tag or 'default'
    else:
        run_name = tagname + generate_slug(2) + datestr
    logdir = os.path.join(logroot, exp_name, run_name)
    os.makedirs(logdir, exist_ok=True)
    return logdir


def save_hparams(hparams, logdir):
    """
    Save hyperparameters into a json file
    """
    json_fn = os.path.join(logdir, 'hparams.json')

    if os.path.isfile(json_fn):
        return

    with open(json_fn, 'w') as outfile:
        json.dump(hparams, outfile, indent=4, sort_keys=True)


def run_rng(seed, run_id):
    """Independent generator for one scenario/run, stable across job counts."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(run_id)]))


def stream_rng(seed, stream):
    """Generator for a named side stream (splits, oversampling) of `seed`."""
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


class _CallableProxy:
    def __init__(self, real_callable, post_hook=None):
        self.real_callable = real_callable
        self.post_hook = post_hook

    def __call__(self, *args, **kwargs):
        ret_val = self.real_callable(*args, **kwargs)

        if self.post_hook is not None:
            self.post_hook()

        return ret_val


class ConditionalProxy:
    """
    Forward attribute calls to `real_object` only when `condition` is true;
    otherwise every call is swallowed. `post_hook`, if given, runs after each
    forwarded call.

    LogX wraps its tensorboard writer in one of these so the rest of the
    package can log scalars without checking whether tensorboard is on.
    """

    def __init__(self, real_object, condition, post_hook=None):
        self.real_object = real_object
        self.condition = condition
        self.post_hook = post_hook

    @staticmethod
    def _throw_away(*args, **kwargs):
        pass

    def __getattr__(self, name):
        if not self.condition:
            return ConditionalProxy._throw_away

        real_fn = getattr(self.real_object, name)
        return _CallableProxy(real_fn, self.post_hook)
