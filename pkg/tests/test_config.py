import copy
import os
import tempfile
import unittest
from unittest import TestCase

from dgm.config import ABLATION_FLAGS, PRESETS, Config, TrainConfig
from dgm.corpus import Decision, GeneratorConfig


def _write(tmp, text, name='config.yaml'):

    path = os.path.join(tmp, name)
    with open(path, 'w') as f:
        f.write(text)

    return path


class TestConfig(TestCase):

    def test_read(self):

        with tempfile.TemporaryDirectory() as tmp:
            config = Config(_write(tmp, 'd: 16\nlam: 0.5\n'))

            self.assertEqual(config['d'], 16)
            self.assertEqual(config.get('heads', 4), 4)
            self.assertIn('lam', config)
            self.assertEqual(sorted(config.keys()), ['d', 'lam'])

            with self.assertRaises(KeyError):
                config['heads']

    def test_missing_file(self):

        with self.assertRaises(FileNotFoundError):
            Config('/nonexistent/config.yaml')

    def test_not_a_mapping(self):

        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValueError):
                Config(_write(tmp, '- 1\n- 2\n'))


class TestTrainConfig(TestCase):

    def test_seed_required(self):

        with self.assertRaises(ValueError):
            TrainConfig()

    def test_defaults_follow_toy_preset(self):

        config = TrainConfig(seed=0)

        for k, v in PRESETS['toy'].items():
            self.assertEqual(getattr(config, k), v)
        for k in ABLATION_FLAGS:
            self.assertFalse(getattr(config, k))

    def test_large_preset(self):

        config = TrainConfig.preset('large', seed=1)

        self.assertEqual(TrainConfig.preset('paper', seed=1), config)

        self.assertEqual(config.d, 1024)
        self.assertEqual(config.learning_rate, 5e-5)
        self.assertEqual(config.batch_size, 16)
        self.assertEqual(config.clip_norm, 2.0)

        with self.assertRaises(ValueError):
            TrainConfig.preset('huge', seed=1)

    def test_invalid_values(self):

        for kwargs in ({'d': 0}, {'layers': -1}, {'heads': 1.5},
                       {'clip_norm': 0.0}, {'learning_rate': -1e-3},
                       {'d': 10, 'heads': 4}, {'beta1': 1.0},
                       {'dropout': 0.1}, {'epochs': True}):
            with self.assertRaises(ValueError, msg=str(kwargs)):
                TrainConfig(seed=0, **kwargs)

    def test_flags_must_be_booleans(self):

        for value in ('false', 0, 1, None):
            with self.assertRaises(ValueError, msg=repr(value)):
                TrainConfig(seed=0, disable_rule_marker=value)

        with self.assertRaises(ValueError):
            TrainConfig.from_mapping({'seed': 0, 'span_argmin': 'no'})

    def test_zero_lambda_allowed(self):

        self.assertEqual(TrainConfig(seed=0, lam=0).lam, 0.0)

    def test_from_yaml(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = _write(tmp, 'preset: toy\nseed: 7\nd: 16\n'
                               'disable_rule_marker: true\n')
            config = TrainConfig.from_yaml(path)

        self.assertEqual(config.seed, 7)
        self.assertEqual(config.d, 16)
        self.assertEqual(config.epochs, PRESETS['toy']['epochs'])
        self.assertTrue(config.disable_rule_marker)

    def test_yaml_round_trip(self):

        config = TrainConfig(seed=3, d=32, lam=0.25)

        with tempfile.TemporaryDirectory() as tmp:
            loaded = TrainConfig.from_yaml(_write(tmp, config.to_yaml()))

        self.assertEqual(loaded, config)
        self.assertEqual(loaded.fingerprint(), config.fingerprint())

    def test_fingerprint(self):

        config = TrainConfig(seed=0)

        self.assertEqual(len(config.fingerprint()), 64)
        self.assertEqual(config.fingerprint(),
                         TrainConfig(seed=0).fingerprint())
        self.assertNotEqual(config.fingerprint(),
                            config.replace(seed=1).fingerprint())

    def test_replace_and_copy(self):

        config = TrainConfig(seed=0)
        other = config.replace(disable_implicit_graph=True)

        self.assertFalse(config.disable_implicit_graph)
        self.assertTrue(other.ablation_flags()['disable_implicit_graph'])
        self.assertEqual(copy.deepcopy(config), config)
        self.assertIsNot(copy.copy(config), config)


class TestGeneratorConfig(TestCase):

    def test_from_yaml(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = _write(tmp, 'n_examples: 5\nedu_range: [2, 3]\n'
                               'decision_priors: {"yes": 1.0}\n')
            config = GeneratorConfig.from_yaml(path)

        self.assertEqual(config.n_examples, 5)
        self.assertEqual(config.edu_range, (2, 3))
        self.assertEqual(list(config.priors().values()), [1.0])

    def test_bare_yes_no_keys(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = _write(tmp, 'decision_priors: {yes: 1.0, no: 3.0}\n')
            config = GeneratorConfig.from_yaml(path)

        self.assertEqual(config.priors(), {Decision.YES: 0.25,
                                           Decision.NO: 0.75})

    def test_coverage_mode(self):

        self.assertIsNone(GeneratorConfig(decision_priors=None).priors())


if __name__ == '__main__':
    unittest.main()
