import os
import tempfile
import time
import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as npt
import pandas as pd

from dgm.config import TrainConfig
from dgm.corpus import (Decision, Example, GeneratorConfig, Vocabulary,
                        generate_synthetic)
from dgm.evaluate import evaluate
from dgm.graph import DiscourseLink
from dgm.model import (DGMModel, ModelParams, check_gradients,
                       parameter_shapes)


def _two_edu_example():

    return Example('two', 'tree-two',
                   [['you', 'must', 'be', 'a', 'farmer'],
                    ['you', 'must', 'live', 'in', 'the', 'uk']],
                   [DiscourseLink(0, 1, 'continuation')],
                   ['can', 'i', 'apply', '?'],
                   ['i', 'am', 'a', 'farmer'],
                   [],
                   gold_entailment=['entailment', 'unmentioned'],
                   gold_decision='inquire',
                   gold_span=(1, 0, 5))


def _three_edu_example():

    return Example('three', 'tree-three',
                   [['you', 'must', 'be', 'a', 'farmer'],
                    ['or', 'a', 'fisher'],
                    ['and', 'live', 'in', 'the', 'uk']],
                   [DiscourseLink(0, 1, 'alternation'),
                    DiscourseLink(1, 2, 'continuation')],
                   ['can', 'i', 'apply', '?'],
                   ['i', 'live', 'in', 'the', 'uk'],
                   [(['are', 'you', 'a', 'farmer', '?'], 'no'),
                    (['are', 'you', 'a', 'fisher', '?'], 'no')],
                   gold_entailment=['contradiction', 'contradiction',
                                    'entailment'],
                   gold_decision='no')


def _model(examples, seed=0, **overrides):

    config = TrainConfig(seed=seed, d=8, heads=2, layers=2, **overrides)

    return DGMModel.initialize(Vocabulary.build(examples), config)


class TestGradients(TestCase):

    tol = 1e-4

    def _check(self, example, **overrides):

        model = _model([example], **overrides)
        errors = check_gradients(model, example, samples=5, seed=3)

        self.assertEqual(list(errors.index), model.params.keys())
        self.assertLess(errors.max(), self.tol, errors.idxmax())

    def test_two_edus(self):

        self._check(_two_edu_example())

    def test_three_edus(self):

        self._check(_three_edu_example())

    def test_without_rule_marker(self):

        self._check(_two_edu_example(), disable_rule_marker=True)

    def test_without_graphs(self):

        self._check(_three_edu_example(), disable_explicit_graph=True,
                    disable_implicit_graph=True)

    def test_gradients_are_cleared(self):

        example = _two_edu_example()
        model = _model([example])

        check_gradients(model, example, samples=1)

        for t in model.params.values():
            self.assertIsNone(t.grad)


class TestModelParams(TestCase):

    def test_shapes(self):

        config = TrainConfig(seed=0, d=8, heads=2, layers=2)
        params = ModelParams.initialize(30, config)
        shapes = parameter_shapes(30, 8, 2)

        self.assertEqual(params.keys(), list(shapes))
        self.assertEqual(params.num_parameters(),
                         sum(int(np.prod(s)) for s in shapes.values()))
        npt.assert_array_equal(params['decision.bias'].data, np.zeros((1, 4)))

    def test_seeded(self):

        config = TrainConfig(seed=4, d=8, heads=2, layers=1)

        self.assertEqual(ModelParams.initialize(10, config),
                         ModelParams.initialize(10, config))
        self.assertNotEqual(ModelParams.initialize(10, config),
                            ModelParams.initialize(10, config.replace(seed=5)))

    def test_state_round_trip(self):

        config = TrainConfig(seed=0, d=4, heads=2, layers=1)
        params = ModelParams.initialize(10, config)
        other = ModelParams.initialize(10, config.replace(seed=1))

        other.load_state(params.state())

        self.assertEqual(other, params)

        state = params.state()
        state['embedding'] = np.zeros((3, 4))
        with self.assertRaises(ValueError):
            other.load_state(state)

    def test_mismatched_vocabulary(self):

        config = TrainConfig(seed=0, d=4, heads=2, layers=1)
        params = ModelParams.initialize(10, config)

        with self.assertRaises(ValueError):
            DGMModel(params, Vocabulary(['a']), config)


class TestLoss(TestCase):

    def test_span_term(self):

        example = _two_edu_example()
        model = _model([example])

        loss = model.loss(example)
        self.assertIsNotNone(loss.span)
        self.assertAlmostEqual(
            loss.total.item(),
            loss.decision.item() + loss.entailment.item() + loss.span.item(),
            places=12)

        loss = model.loss(example, training=False)
        self.assertIsNone(loss.span)

    def test_no_span_outside_inquire(self):

        example = _three_edu_example()
        loss = _model([example]).loss(example)

        self.assertIsNone(loss.span)

    def test_unlabeled(self):

        example = Example('u', 't', [['a']], [], ['q'], [], [])

        with self.assertRaises(ValueError):
            _model([example]).loss(example)


class TestPredict(TestCase):

    def test_prediction(self):

        example = _three_edu_example()
        prediction = _model([example]).predict(example)

        self.assertIsInstance(prediction.decision, Decision)
        self.assertEqual(len(prediction.entailment), 3)
        self.assertEqual(prediction.z.shape, (4,))
        self.assertAlmostEqual(prediction.alpha.sum(), 1.0)
        self.assertEqual(prediction.decision,
                         list(Decision)[int(np.argmax(prediction.z))])

    def test_inquire_span(self):

        example = _two_edu_example()
        model = _model([example])
        model.params['decision.bias'].data[0, Decision.INQUIRE.index] = 1e3

        prediction = model.predict(example)

        self.assertEqual(prediction.decision, Decision.INQUIRE)
        k, i, j = prediction.span.key()
        self.assertLessEqual(i, j)
        self.assertLess(j, len(example.rule_edus[k]))

    def test_argmin_span(self):

        example = _two_edu_example()
        model = _model([example])
        model.params['decision.bias'].data[0, Decision.INQUIRE.index] = 1e3
        flipped = DGMModel(model.params, model.vocab,
                           model.config.replace(span_argmin=True))

        best = model.predict(example).span
        worst = flipped.predict(example).span

        self.assertGreaterEqual(best.score, worst.score)

    def test_no_span_otherwise(self):

        example = _two_edu_example()
        model = _model([example])
        model.params['decision.bias'].data[0, Decision.YES.index] = 1e3

        self.assertIsNone(model.predict(example).span)


class TestCheckpoint(TestCase):

    def test_round_trip(self):

        dataset = generate_synthetic(GeneratorConfig(n_examples=20), 6)
        config = TrainConfig(seed=2, d=8, heads=2, layers=1)
        model = DGMModel.initialize(Vocabulary.build(dataset), config)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'model.h5')
            model.save(path)
            loaded = DGMModel.load(path)

        self.assertEqual(loaded.params, model.params)
        self.assertEqual(loaded.vocab, model.vocab)
        self.assertEqual(loaded.config, model.config)
        self.assertEqual(evaluate(loaded, dataset), evaluate(model, dataset))

    def test_identical_bytes(self):

        model = _model([_three_edu_example()])

        with tempfile.TemporaryDirectory() as tmp:
            first = os.path.join(tmp, 'first.h5')
            second = os.path.join(tmp, 'second.h5')
            model.save(first)
            time.sleep(1.5)
            model.save(second)

            with open(first, 'rb') as a, open(second, 'rb') as b:
                self.assertEqual(a.read(), b.read())

    def test_missing_file(self):

        with self.assertRaises(FileNotFoundError):
            DGMModel.load('/nonexistent/model.h5')

    def test_not_a_checkpoint(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'other.h5')
            with pd.HDFStore(path, mode='w') as store:
                store.put('data', pd.Series([1.0, 2.0]))

            with self.assertRaises(ValueError):
                DGMModel.load(path)

    def test_fingerprint_mismatch(self):

        example = _three_edu_example()
        model = _model([example])

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'model.h5')
            model.save(path)

            with pd.HDFStore(path, mode='a') as store:
                meta = store['meta']
                meta['fingerprint'] = '0' * 64
                store.put('meta', meta)

            with self.assertRaises(ValueError):
                DGMModel.load(path)


if __name__ == '__main__':
    unittest.main()
