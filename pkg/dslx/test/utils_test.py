import json
import os
import shutil
import tempfile
import unittest

import numpy as np
from parameterized import parameterized

from dslx import utils


class UtilsTest(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def test_conditional_proxy(self):
        counter = [0]

        class Increment:
            def call(self, value):
                counter[0] += value

        proxy = utils.ConditionalProxy(Increment(), True)

        proxy.call(10)

        self.assertEqual(counter[0], 10)

        proxy = utils.ConditionalProxy(Increment(), False)

        # This should *not* be forwarded to the increment object
        proxy.call(42)

        self.assertEqual(counter[0], 10)

        with self.assertRaises(AttributeError):
            proxy = utils.ConditionalProxy(Increment(), True)

            proxy.blah(1, 2, 3)

        post_hook_called = [False]

        def post_hook():
            post_hook_called[0] = True

        proxy = utils.ConditionalProxy(Increment(), True, post_hook=post_hook)

        proxy.call(-10)

        self.assertEqual(counter[0], 0)
        self.assertTrue(post_hook_called[0])

    @parameterized.expand([
        (utils.ConfigError, 2),
        (utils.ShapeError, 2),
        (utils.DataIOError, 3),
        (utils.DegenerateUpdateError, 4),
        (utils.DomainError, 5),
    ])
    def test_exit_codes(self, exc, code):
        self.assertEqual(exc.exit_code, code)

    def test_init_error_names_zones(self):
        err = utils.InitError([3, 15])
        self.assertEqual(err.zones, [3, 15])
        self.assertIn('z_3', str(err))
        self.assertIn('z_15', str(err))

    def test_read_config_file_reports_line(self):
        fn = os.path.join(self.test_dir, 'bad.yml')
        with open(fn, 'w') as fp:
            fp.write('SEED: 1\nTRAIN:\n  LR: [0.1\n')
        with self.assertRaises(utils.ConfigError) as ctx:
            utils.read_config_file(fn)
        self.assertIn('line', str(ctx.exception))

    def test_read_config_file_missing(self):
        with self.assertRaises(utils.DataIOError):
            utils.read_config_file(os.path.join(self.test_dir, 'nope.yml'))

    def test_make_run_dir(self):
        logdir = utils.make_run_dir(self.test_dir, 'exp', tag='t',
                                    no_cooldir=True)
        self.assertEqual(logdir, os.path.join(self.test_dir, 'exp', 't'))
        self.assertTrue(os.path.isdir(logdir))

        cool = utils.make_run_dir(self.test_dir, 'exp', tag='t')
        self.assertTrue(os.path.basename(cool).startswith('t_'))

    def test_save_hparams(self):
        utils.save_hparams({'b': 1, 'a': {'c': 2}}, self.test_dir)
        with open(os.path.join(self.test_dir, 'hparams.json')) as fp:
            self.assertEqual(json.load(fp), {'a': {'c': 2}, 'b': 1})

    def test_run_rng_is_stable(self):
        a = utils.run_rng(7, 3).uniform(size=4)
        b = utils.run_rng(7, 3).uniform(size=4)
        c = utils.run_rng(7, 4).uniform(size=4)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))


if __name__ == '__main__':
    unittest.main()
