"""
Default configuration for dslx.

Every tunable lives in the global `cfg` tree. Commands start from these
defaults, merge a yaml file (`merge_cfg_from_file`) and command-line overrides
(`merge_cfg_from_list`), then call `assert_and_infer_cfg` which validates and
freezes the tree. The frozen tree is what gets dumped to hparams.json.
"""
import copy
import os

import yaml

from .collections import AttrDict
from .utils import ConfigError, read_config_file


__C = AttrDict()
cfg = __C

# Random note: avoid using '.ON' as a config key since yaml converts it to True;

__C.SEED = 0
__C.JOBS = 1
__C.LOGROOT = './logs'
__C.EXP_NAME = 'dsl'

# Territory and kinematics. Only speed ratios matter. DEFENDER_SPEED is the
# `dslx calibrate` result for an expert success of 85% at 5 defenders and
# Poisson 4 (0.25 gives about 74%).
__C.WORLD = AttrDict()
__C.WORLD.NUM_SEGMENTS = 36
__C.WORLD.INTRUDER_SPEED = 0.5
# rad/s
__C.WORLD.DEFENDER_SPEED = 0.4388
# True also credits defenders passing through a segment when scoring the
# learned and naive policies. The expert is always scored on its plan.
__C.WORLD.TRANSIT_CAPTURES = False

__C.DATASET = AttrDict()
__C.DATASET.TEAM_SIZE = 5
__C.DATASET.POISSON_RATE = 4.0
__C.DATASET.HORIZON = 8.0
__C.DATASET.RUNS = 10000
__C.DATASET.TRAIN_FRACTION = 0.2
__C.DATASET.OBSERVATION = 15
__C.DATASET.OVERSAMPLE = True
__C.DATASET.SMOTE_K = 5
# cost of a first/successor task that cannot be reached in time, in
# multiples of the segment count
__C.DATASET.KAPPA_FACTOR = 10

__C.TRAIN = AttrDict()
__C.TRAIN.T = 8.0
__C.TRAIN.T_D = 4.0
__C.TRAIN.T_M = 0.8
# must exceed T_D so a freshly initialized neuron is still rising at T_D
__C.TRAIN.TAU = 4.8
__C.TRAIN.SIGMA = 0.8
__C.TRAIN.A_PLUS = 1.0
__C.TRAIN.A_MINUS = 1.0
__C.TRAIN.TAU_PLUS = 8.0
__C.TRAIN.TAU_MINUS = 8.0
__C.TRAIN.LR = 0.1
__C.TRAIN.EPOCHS = 100
__C.TRAIN.GRID_POINTS = 1000
# learning normalizer never drops below this share of the causal STDP mass
__C.TRAIN.CAUSAL_FLOOR = 0.5
# |e| is clipped to MAX_ERROR * theta
__C.TRAIN.MAX_ERROR = 1.0

__C.CONSENSUS = AttrDict()
__C.CONSENSUS.ALPHA = 0.5

__C.EVAL = AttrDict()
__C.EVAL.RUNS = 1000
# evaluation scenarios come from their own seed, disjoint from the dataset
__C.EVAL.SEED = 1
__C.EVAL.TEAM_SIZES = [2, 3, 4, 5, 6, 7, 8]
__C.EVAL.CALIBRATION_TARGET = 85.04
__C.EVAL.CALIBRATION_RUNS = 500
__C.EVAL.CALIBRATION_TOL = 1.0
__C.EVAL.SPEED_BRACKET = [0.01, 5.0]
__C.EVAL.MAX_BISECTIONS = 30


_DEFAULTS = copy.deepcopy(__C)


def reset_cfg():
    """Restore the defaults in place (used by tests and by each CLI run)."""
    __C.immutable(False)
    for k in list(__C.keys()):
        dict.__delitem__(__C, k)
    for k, v in copy.deepcopy(_DEFAULTS).items():
        __C[k] = v


def _check_and_coerce(key, value, original):
    if original is None or value is None:
        return value
    if isinstance(original, bool):
        if not isinstance(value, bool):
            raise ConfigError('{}: expected a boolean, got {!r}'.format(
                key, value))
        return value
    if isinstance(original, float) and isinstance(value, int) and \
       not isinstance(value, bool):
        return float(value)
    if isinstance(original, (list, tuple)) and isinstance(value, (list, tuple)):
        return list(value)
    if type(value) is not type(original):
        raise ConfigError('{}: expected {}, got {!r}'.format(
            key, type(original).__name__, value))
    return value


def _merge_a_into_b(a, b, stack=''):
    for k, v in a.items():
        full_key = stack + k
        if k not in b:
            raise ConfigError('unknown config key {}'.format(full_key))
        if isinstance(b[k], AttrDict):
            if not isinstance(v, dict):
                raise ConfigError('{}: expected a section'.format(full_key))
            _merge_a_into_b(v, b[k], full_key + '.')
        else:
            b[k] = _check_and_coerce(full_key, v, b[k])


def merge_cfg_from_file(cfg_filename):
    """Merge a yaml config file into the global config."""
    _merge_a_into_b(read_config_file(cfg_filename), __C)


def merge_cfg_from_dict(adict):
    _merge_a_into_b(adict, __C)


def merge_cfg_from_list(cfg_list):
    """
    Merge ['TRAIN.EPOCHS', '5', 'SEED', '3'] style overrides. Values are
    parsed as yaml scalars.
    """
    if len(cfg_list) % 2 != 0:
        raise ConfigError('overrides must come in key value pairs')
    for full_key, raw in zip(cfg_list[0::2], cfg_list[1::2]):
        node = __C
        subkeys = full_key.split('.')
        for subkey in subkeys[:-1]:
            if subkey not in node:
                raise ConfigError('unknown config key {}'.format(full_key))
            node = node[subkey]
        if subkeys[-1] not in node:
            raise ConfigError('unknown config key {}'.format(full_key))
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError('{}: {}'.format(full_key, e))
        node[subkeys[-1]] = _check_and_coerce(full_key, value,
                                              node[subkeys[-1]])


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def assert_and_infer_cfg(make_immutable=True):
    """
    Validate cross-field invariants and optionally freeze the config.
    The env var DSLX_LOGROOT overrides LOGROOT.
    """
    if os.environ.get('DSLX_LOGROOT'):
        __C.LOGROOT = os.environ['DSLX_LOGROOT']

    w, d, t = __C.WORLD, __C.DATASET, __C.TRAIN
    _require(w.NUM_SEGMENTS >= 1, 'WORLD.NUM_SEGMENTS must be >= 1')
    _require(w.INTRUDER_SPEED > 0, 'WORLD.INTRUDER_SPEED must be > 0')
    _require(w.DEFENDER_SPEED >= 0, 'WORLD.DEFENDER_SPEED must be >= 0')
    _require(1 <= d.OBSERVATION <= w.NUM_SEGMENTS,
             'DATASET.OBSERVATION must lie in [1, WORLD.NUM_SEGMENTS]')
    _require(d.TEAM_SIZE >= 1, 'DATASET.TEAM_SIZE must be >= 1')
    _require(d.POISSON_RATE >= 0, 'DATASET.POISSON_RATE must be >= 0')
    _require(d.HORIZON > 0, 'DATASET.HORIZON must be > 0')
    _require(d.RUNS >= 1, 'DATASET.RUNS must be >= 1')
    _require(0 < d.TRAIN_FRACTION < 1, 'DATASET.TRAIN_FRACTION must be in (0, 1)')
    _require(d.SMOTE_K >= 1, 'DATASET.SMOTE_K must be >= 1')
    _require(0 < t.T_D < t.T, 'TRAIN.T_D must lie in (0, TRAIN.T)')
    _require(t.T_M >= 0, 'TRAIN.T_M must be >= 0')
    for key in ('TAU', 'SIGMA', 'LR', 'TAU_PLUS', 'TAU_MINUS'):
        _require(t[key] > 0, 'TRAIN.{} must be > 0'.format(key))
    _require(t.EPOCHS >= 0, 'TRAIN.EPOCHS must be >= 0')
    _require(t.GRID_POINTS >= 2, 'TRAIN.GRID_POINTS must be >= 2')
    _require(0 < t.CAUSAL_FLOOR <= 1, 'TRAIN.CAUSAL_FLOOR must be in (0, 1]')
    _require(t.MAX_ERROR > 0, 'TRAIN.MAX_ERROR must be > 0')
    _require(0 <= __C.CONSENSUS.ALPHA <= 1, 'CONSENSUS.ALPHA must be in [0, 1]')
    _require(__C.JOBS >= 1, 'JOBS must be >= 1')
    _require(len(__C.EVAL.SPEED_BRACKET) == 2 and
             0 <= __C.EVAL.SPEED_BRACKET[0] < __C.EVAL.SPEED_BRACKET[1],
             'EVAL.SPEED_BRACKET must be [low, high] with 0 <= low < high')

    if make_immutable:
        __C.immutable(True)
    return __C
