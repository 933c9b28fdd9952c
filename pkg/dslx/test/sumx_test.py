import json
import os
import shutil
import tempfile
import unittest

from dslx import sumx
from dslx.utils import DataIOError


def write_run(parent, name, hparams, rows):
    run = os.path.join(parent, name)
    os.makedirs(run)
    with open(os.path.join(run, 'hparams.json'), 'w') as fp:
        json.dump(hparams, fp)
    with open(os.path.join(run, 'metrics.csv'), 'w') as fp:
        for row in rows:
            fp.write(','.join(str(x) for x in row) + '\n')
    return run


class SumxTest(unittest.TestCase):
    def setUp(self):
        self.exp = tempfile.mkdtemp()
        write_run(self.exp, 'run_a',
                  {'SEED': 1, 'JOBS': 4, 'TRAIN': {'LR': 0.1, 'EPOCHS': 5}},
                  [['train', 'hamming_error', 0.3, 'epoch', 0],
                   ['val', 'expert', 84.0, 'epoch', 0],
                   ['val', 'dsl', 80.5, 'epoch', 1]])
        write_run(self.exp, os.path.join('nested', 'run_b'),
                  {'SEED': 1, 'JOBS': 1, 'TRAIN': {'LR': 0.2, 'EPOCHS': 5}},
                  [['val', 'expert', 86.0, 'epoch', 0],
                   ['val', 'expert', 87.0, 'epoch', 1]])
        # not a run: no hparams.json
        os.makedirs(os.path.join(self.exp, 'scratch'))

    def tearDown(self):
        shutil.rmtree(self.exp, ignore_errors=True)

    def test_flatten(self):
        self.assertEqual(sumx.flatten({'A': {'B': 1, 'C': {'D': 2}}, 'E': 3}),
                         {'A.B': 1, 'A.C.D': 2, 'E': 3})

    def test_get_runs(self):
        runs = [os.path.relpath(r, self.exp) for r in sumx.get_runs(self.exp)]
        self.assertEqual(runs, [os.path.join('nested', 'run_b'), 'run_a'])

    def test_final_metrics(self):
        run = os.path.join(self.exp, 'run_a', 'metrics.csv')
        self.assertEqual(sumx.final_metrics(run),
                         {'expert': '84.0', 'dsl': '80.5'})

    def test_uncommon_hparams(self):
        hparams = sumx.get_hparams(sumx.get_runs(self.exp))
        self.assertEqual(sumx.get_uncommon_hparam_names(hparams), ['TRAIN.LR'])

    def test_summarize_experiment(self):
        header, rows = sumx.summarize_experiment(self.exp, sortwith='expert')
        self.assertEqual(header, ['run', 'TRAIN.LR', 'dsl', 'expert'])
        self.assertEqual(rows[0], [os.path.join('nested', 'run_b'), 0.2, None,
                                   '87.0'])
        self.assertEqual(rows[1], ['run_a', 0.1, '80.5', '84.0'])

    def test_bad_sort_key(self):
        with self.assertRaises(DataIOError):
            sumx.summarize_experiment(self.exp, sortwith='nope')

    def test_missing_dir(self):
        with self.assertRaises(DataIOError):
            sumx.summarize_experiment(os.path.join(self.exp, 'missing'))

    def test_summarize(self):
        csv_fn = os.path.join(self.exp, 'summary.csv')
        text = sumx.summarize([self.exp], csv_fn=csv_fn)
        self.assertIn('run_a', text)
        with open(csv_fn) as fp:
            self.assertEqual(fp.readline().strip(), 'run,TRAIN.LR,dsl,expert')

    def test_no_runs(self):
        empty = os.path.join(self.exp, 'scratch')
        self.assertIn('No valid experiments',
                      sumx.summarize([empty]))


if __name__ == '__main__':
    unittest.main()
