"""
Summarize finished runs.

Every dslx command writes hparams.json and metrics.csv into its run
directory. Given experiment directories, this module finds the runs below
them, reads the final `val` metrics of each and tabulates them next to the
hyperparameters that differ between the runs.
"""
import csv
import json
import os

from tabulate import tabulate

from .utils import DataIOError

# never worth a column
DEFAULT_IGNORE = ('LOGROOT', 'JOBS', 'EXP_NAME')
SKIP_METRICS = ('timestamp', 'epoch')


def load_json(fname):
    with open(fname) as json_data:
        return json.load(json_data)


def get_runs(parent_dir):
    """
    Full paths of the runs underneath parent, at any depth. A run is a
    directory holding hparams.json.
    """
    runs = []
    for root, _, files in os.walk(parent_dir):
        if 'hparams.json' in files:
            runs.append(root)
    return sorted(runs)


def flatten(adict, prefix=''):
    """{'TRAIN': {'LR': 0.1}} -> {'TRAIN.LR': 0.1}"""
    out = {}
    for k, v in adict.items():
        key = prefix + k
        if isinstance(v, dict):
            out.update(flatten(v, key + '.'))
        else:
            out[key] = v
    return out


def get_hparams(runs):
    return {run: flatten(load_json(os.path.join(run, 'hparams.json')))
            for run in runs}


def load_csv(csv_fn):
    with open(csv_fn) as fp:
        return list(csv.reader((x.replace('\0', '') for x in fp),
                               delimiter=','))


def final_metrics(metrics_fn):
    """Merged key/values of the last `val` rows, later rows winning."""
    metrics = {}
    for line in load_csv(metrics_fn):
        if not line or line[0] != 'val':
            continue
        keys, vals = line[1::2], line[2::2]
        for k, v in zip(keys, vals):
            if k not in SKIP_METRICS:
                metrics[k] = v
    return metrics or None


def get_metrics(runs):
    metrics = {}
    for run in runs:
        metrics_fn = os.path.join(run, 'metrics.csv')
        if not os.path.isfile(metrics_fn):
            continue
        found = final_metrics(metrics_fn)
        if found is not None:
            metrics[run] = found
    return metrics


def any_different(alist):
    return len(alist) > 1 and any(x != alist[0] for x in alist[1:])


def get_uncommon_hparam_names(all_runs, ignore=DEFAULT_IGNORE):
    if len(all_runs) <= 1:
        return []
    names = sorted({k for hparams in all_runs.values() for k in hparams})
    return [k for k in names
            if k not in ignore and
            any_different([h.get(k) for h in all_runs.values()])]


def summarize_experiment(parent_dir, sortwith=None, ignore=DEFAULT_IGNORE):
    """(header, rows) for every run under parent_dir with val metrics."""
    if not os.path.exists(parent_dir):
        raise DataIOError('couldn\'t find directory {}'.format(parent_dir))
    runs = get_runs(parent_dir)
    hparams = get_hparams(runs)
    metrics = get_metrics(runs)
    if not metrics:
        return None, []

    uncommon = get_uncommon_hparam_names(hparams, ignore)
    metric_keys = sorted({k for m in metrics.values() for k in m})
    header = ['run'] + uncommon + metric_keys
    rows = []
    for run, values in metrics.items():
        entry = [os.path.relpath(run, parent_dir)]
        entry += [hparams[run].get(k) for k in uncommon]
        entry += [values.get(k) for k in metric_keys]
        rows.append(entry)

    if sortwith is not None:
        if sortwith not in header:
            raise DataIOError('no metric {} to sort with'.format(sortwith))
        idx = header.index(sortwith)
        rows.sort(key=lambda r: float(r[idx]) if r[idx] is not None
                  else float('-inf'), reverse=True)
    return header, rows


def summarize(dirs, sortwith=None, csv_fn=None):
    """Printable tables, one per experiment directory."""
    tables = []
    for parent in dirs:
        header, rows = summarize_experiment(parent, sortwith)
        if header is None:
            tables.append('No valid experiments found for {}'.format(parent))
            continue
        if csv_fn is not None:
            with open(csv_fn, 'a+') as fp:
                writer = csv.writer(fp)
                writer.writerow(header)
                writer.writerows(rows)
        # long hparam names wrap at '.' to keep the table narrow
        wrapped = [h.replace('.', '\n') for h in header]
        tables.append(tabulate(rows, headers=wrapped, floatfmt='.4f'))
    return '\n\n'.join(tables)
