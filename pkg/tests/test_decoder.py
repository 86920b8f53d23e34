import math
import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as npt

from dgm.config import TrainConfig
from dgm.corpus import (Decision, EntailmentState, Example, Vocabulary,
                        layout_sequence)
from dgm.decoder import (DecoderOutput, compute_loss, decision_scores, decode,
                         entailment_scores, interaction_layer)
from dgm.encoder import encode
from dgm.graph import DiscourseLink
from dgm.model import ModelParams
from dgm.numerics import Tensor

E = EntailmentState.ENTAILMENT
U = EntailmentState.UNMENTIONED


def _interaction_params(rng, d):

    return {'interaction.' + name: Tensor(rng.normal(size=(d, d)))
            for name in ('query', 'key', 'value')}


def _head_params(rng, d):

    return {'entail.weight': Tensor(rng.normal(size=(d, 3))),
            'entail.bias': Tensor(rng.normal(size=(1, 3))),
            'attn.weight': Tensor(rng.normal(size=(d + 3, 1))),
            'attn.bias': Tensor(rng.normal(size=(1, 1))),
            'decision.weight': Tensor(rng.normal(size=(d + 3, 4))),
            'decision.bias': Tensor(rng.normal(size=(1, 4)))}


def _uniform_outputs(n):

    return DecoderOutput(f=Tensor(np.zeros((n, 3))),
                         z=Tensor(np.zeros((1, 4))), alpha=None, tilde=None)


class TestLossAnchors(TestCase):

    def test_uniform_decision(self):

        loss = compute_loss(_uniform_outputs(2), [E, U], Decision.NO, 1.0)

        self.assertAlmostEqual(loss.decision.item(), math.log(4), places=12)

    def test_uniform_entailment(self):

        loss = compute_loss(_uniform_outputs(3), [E, U, U], Decision.INQUIRE,
                            1.0)

        self.assertAlmostEqual(loss.entailment.item(), math.log(3),
                               places=12)
        self.assertAlmostEqual(loss.total.item(),
                               math.log(4) + math.log(3), places=12)

    def test_zero_lambda(self):

        rng = np.random.default_rng(0)
        outputs = DecoderOutput(f=Tensor(rng.normal(size=(2, 3))),
                                z=Tensor(rng.normal(size=(1, 4))),
                                alpha=None, tilde=None)

        loss = compute_loss(outputs, [E, E], Decision.YES, 0.0)

        self.assertEqual(loss.total.item(), loss.decision.item())

    def test_weighted_sum(self):

        rng = np.random.default_rng(1)
        outputs = DecoderOutput(f=Tensor(rng.normal(size=(2, 3))),
                                z=Tensor(rng.normal(size=(1, 4))),
                                alpha=None, tilde=None)

        loss = compute_loss(outputs, ['entailment', 'contradiction'], 'no',
                            0.5)

        self.assertAlmostEqual(
            loss.total.item(),
            loss.decision.item() + 0.5 * loss.entailment.item(), places=12)

    def test_label_count(self):

        with self.assertRaises(ValueError):
            compute_loss(_uniform_outputs(2), [E], Decision.YES, 1.0)

        with self.assertRaises(ValueError):
            compute_loss(_uniform_outputs(1), [E], None, 1.0)


class TestInteractionLayer(TestCase):

    def test_singleton(self):

        rng = np.random.default_rng(2)
        params = _interaction_params(rng, 4)
        x = Tensor(rng.normal(size=(1, 4)))

        out = interaction_layer([x], params)

        value = params['interaction.value'].data
        npt.assert_allclose(out.data, x.data @ value)

    def test_permutation_equivariant(self):

        rng = np.random.default_rng(3)
        params = _interaction_params(rng, 5)
        x = rng.normal(size=(6, 5))
        perm = rng.permutation(6)

        out = interaction_layer([Tensor(x)], params)
        permuted = interaction_layer([Tensor(x[perm])], params)

        npt.assert_allclose(permuted.data, out.data[perm], atol=1e-12)

    def test_row_count(self):

        rng = np.random.default_rng(4)
        params = _interaction_params(rng, 3)
        inputs = [Tensor(rng.normal(size=(k, 3))) for k in (2, 1, 1, 1)]

        self.assertEqual(interaction_layer(inputs, params).shape, (5, 3))

    def test_empty(self):

        with self.assertRaises(ValueError):
            interaction_layer([], {})


class TestHeads(TestCase):

    def test_shapes_and_simplex(self):

        rng = np.random.default_rng(5)
        params = _head_params(rng, 4)

        for n in (1, 2, 7):
            r = Tensor(rng.normal(size=(n, 4)))
            f = entailment_scores(r, params)
            z, alpha = decision_scores(f, r, params)

            self.assertEqual(f.shape, (n, 3))
            self.assertEqual(z.shape, (1, 4))
            self.assertEqual(alpha.shape, (1, n))
            self.assertTrue(np.all(alpha.data >= 0))
            self.assertAlmostEqual(alpha.data.sum(), 1.0)

    def test_single_edu_attention(self):

        rng = np.random.default_rng(6)
        params = _head_params(rng, 4)
        r = Tensor(rng.normal(size=(1, 4)))
        f = entailment_scores(r, params)

        z, alpha = decision_scores(f, r, params)

        npt.assert_array_equal(alpha.data, [[1.0]])
        x = np.concatenate([f.data, r.data], axis=1)
        npt.assert_allclose(z.data, x @ params['decision.weight'].data +
                            params['decision.bias'].data)

    def test_empty(self):

        params = _head_params(np.random.default_rng(7), 2)

        with self.assertRaises(ValueError):
            decision_scores(Tensor(np.zeros((0, 3))),
                            Tensor(np.zeros((0, 2))), params)


class TestDecode(TestCase):

    def test_shapes(self):

        example = Example('ex', 'tree', [['a', 'b'], ['c'], ['d', 'e']],
                          [DiscourseLink(0, 2, 'explanation')], ['q'], [],
                          [(['x'], 'yes'), (['y'], 'no')])
        vocab = Vocabulary.build([example])
        config = TrainConfig(seed=1, d=8, heads=2, layers=1)
        params = ModelParams.initialize(len(vocab), config)

        encoded = encode(layout_sequence(example, vocab),
                         example.relation_links, params, config)
        out = decode(encoded, params)

        self.assertEqual(out.f.shape, (3, 3))
        self.assertEqual(out.z.shape, (1, 4))
        self.assertEqual(out.alpha.shape, (1, 3))
        self.assertEqual(out.tilde.shape, (3, 8))


if __name__ == '__main__':
    unittest.main()
