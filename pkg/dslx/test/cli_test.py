import contextlib
import io
import os
import shutil
import tempfile
import unittest
from unittest import mock

import yaml
from parameterized import parameterized

from dslx import cli
from dslx.dataset import read_dataset
from dslx.sefron import SefronNetwork
from dslx.utils import ConfigError

SMALL_DATA = ['DATASET.OBSERVATION', '3', 'DATASET.RUNS', '60',
              'DATASET.TRAIN_FRACTION', '0.5']
SMALL_TRAIN = ['TRAIN.EPOCHS', '2', 'TRAIN.GRID_POINTS', '200']


class ParseTest(unittest.TestCase):
    @parameterized.expand([
        ('2..5', [2, 3, 4, 5]),
        ('3', [3]),
        ('2,4,8', [2, 4, 8]),
    ])
    def test_team_sizes(self, text, expected):
        self.assertEqual(cli.parse_team_sizes(text), expected)

    def test_bad_team_sizes(self):
        with self.assertRaises(ConfigError):
            cli.parse_team_sizes('two..8')


class PipelineTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.root = tempfile.mkdtemp()
        cls.data_rc = cls.invoke('gen-data', 'data', *SMALL_DATA)
        cls.data_dir = os.path.join(cls.root, 'dsl', 'data')
        cls.train_rc = cls.invoke(
            'train', 'model', '--dataset',
            os.path.join(cls.data_dir, 'train.jsonl'), *SMALL_TRAIN)
        cls.model = os.path.join(cls.root, 'dsl', 'model', 'model.jsonl')

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.root, ignore_errors=True)

    @classmethod
    def invoke(cls, command, tag, *extra):
        argv = [command, '--logdir', cls.root, '--tag', tag, '--no_cooldir']
        return cli.main(argv + list(extra))

    def out(self, tag, name):
        return os.path.join(self.root, 'dsl', tag, name)

    def test_gen_data(self):
        self.assertEqual(self.data_rc, 0)
        header, samples = read_dataset(os.path.join(self.data_dir,
                                                    'test.jsonl'))
        self.assertEqual(header['m'], 3)
        self.assertEqual(header['split'], 'test')
        self.assertTrue(samples)
        for name in ('train.jsonl', 'label_stats.tsv', 'hparams.json',
                     'logging.log', 'metrics.csv'):
            self.assertTrue(os.path.isfile(self.out('data', name)), name)

    def test_train(self):
        self.assertEqual(self.train_rc, 0)
        net = SefronNetwork.load(self.model)
        self.assertEqual(net.m, 3)
        self.assertEqual(net.tcfg.EPOCHS, 2)

    def test_eval(self):
        rc = self.invoke('eval', 'eval', '--model', self.model, '--dataset',
                      os.path.join(self.data_dir, 'test.jsonl'),
                      'EVAL.RUNS', '4')
        self.assertEqual(rc, 0)
        for name in ('zone_metrics.tsv', 'success.tsv', 'comparison.tsv'):
            self.assertTrue(os.path.isfile(self.out('eval', name)), name)
        with open(self.out('eval', 'zone_metrics.tsv')) as fp:
            self.assertEqual(len(fp.read().strip().splitlines()), 4)

    def test_eval_without_model(self):
        rc = self.invoke('eval', 'eval-expert', '--modes', 'expert,naive',
                      'EVAL.RUNS', '3')
        self.assertEqual(rc, 0)
        with open(self.out('eval-expert', 'comparison.tsv')) as fp:
            self.assertEqual(len(fp.read().strip().splitlines()), 3)

    def test_simulate(self):
        rc = self.invoke('simulate', 'sim', '--run-id', '1', '--model',
                      self.model)
        self.assertEqual(rc, 0)
        for stem in ('expert', 'naive', 'dsl', 'dsl_neighbors'):
            self.assertTrue(os.path.isfile(
                self.out('sim', '{}_chains.txt'.format(stem))))
            with open(self.out('sim', '{}_report.txt'.format(stem))) as fp:
                self.assertIn('success:', fp.read())
        self.assertTrue(os.path.isfile(self.out('sim', 'scenario.jsonl')))

    def test_simulate_from_file(self):
        scenario = self.out('sim-file-src', 'scenario.jsonl')
        rc = self.invoke('simulate', 'sim-file-src', '--run-id', '3')
        self.assertEqual(rc, 0)
        self.assertEqual(self.invoke('simulate', 'sim-file', '--scenario',
                                  scenario), 0)
        with open(scenario) as a, \
                open(self.out('sim-file', 'scenario.jsonl')) as b:
            self.assertEqual(a.read(), b.read())

    def test_sweep(self):
        rc = self.invoke('sweep', 'sweep', '--model', self.model,
                      '--team-sizes', '2,3', 'EVAL.RUNS', '2')
        self.assertEqual(rc, 0)
        with open(self.out('sweep', 'sweep.tsv')) as fp:
            self.assertEqual(len(fp.read().strip().splitlines()), 3)

    def test_summarize(self):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            rc = cli.main(['summarize', os.path.join(self.root, 'dsl')])
        self.assertEqual(rc, 0)
        self.assertIn('train_hamming_loss', buf.getvalue())


class ExitCodeTest(unittest.TestCase):
    def setUp(self):
        self.root = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.root, ignore_errors=True)

    def run_cli(self, *argv):
        return cli.main(list(argv[:1]) + ['--logdir', self.root] +
                        list(argv[1:]))

    def test_unknown_key(self):
        self.assertEqual(self.run_cli('calibrate', 'NOPE.KEY', '1'), 2)

    def test_missing_dataset(self):
        self.assertEqual(self.run_cli(
            'train', '--dataset', os.path.join(self.root, 'missing.jsonl')), 3)

    def test_single_run_dataset(self):
        rc = self.run_cli('gen-data', '--tag', 'one', '--no_cooldir',
                          'DATASET.RUNS', '1', 'DATASET.OVERSAMPLE', 'false')
        self.assertEqual(rc, 0)
        run_dir = os.path.join(self.root, 'dsl', 'one')
        _, train = read_dataset(os.path.join(run_dir, 'train.jsonl'))
        _, test = read_dataset(os.path.join(run_dir, 'test.jsonl'))
        self.assertEqual(len(train), 5)
        self.assertEqual(test, [])
        with open(os.path.join(run_dir, 'label_stats.tsv')) as fp:
            self.assertEqual(len(fp.read().strip().splitlines()), 16)

    def test_single_run_dataset_oversampled(self):
        self.assertEqual(self.run_cli('gen-data', 'DATASET.RUNS', '1'), 0)

    def test_dataset_without_model(self):
        self.assertEqual(self.run_cli('eval', '--dataset', 'x.jsonl'), 2)

    def test_unreachable_calibration_target(self):
        self.assertEqual(self.run_cli(
            'calibrate', '--target', '150', 'EVAL.CALIBRATION_RUNS', '3'), 4)

    def test_calibration_writes_speed(self):
        rc = self.run_cli('calibrate', '--tag', 'cal', '--no_cooldir',
                          '--target', '100', 'EVAL.CALIBRATION_RUNS', '3',
                          'EVAL.CALIBRATION_TOL', '100')
        self.assertEqual(rc, 0)
        with open(os.path.join(self.root, 'dsl', 'cal', 'calibrated.yml')) as fp:
            found = yaml.safe_load(fp)
        self.assertEqual(found['WORLD']['DEFENDER_SPEED'], 0.01)

    def test_logdir_beats_env(self):
        other = os.path.join(self.root, 'env')
        with mock.patch.dict(os.environ, {'DSLX_LOGROOT': other}):
            rc = self.run_cli('simulate', '--tag', 'here', '--no_cooldir')
        self.assertEqual(rc, 0)
        self.assertTrue(os.path.isdir(os.path.join(self.root, 'dsl', 'here')))
        self.assertFalse(os.path.exists(other))


if __name__ == '__main__':
    unittest.main()
