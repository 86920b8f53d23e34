"""Model parameters, forward pass and checkpoints"""

from collections import OrderedDict, namedtuple
import os

import numpy as np
import pandas as pd
import yaml

import dgm
from dgm.config import TrainConfig
from dgm.corpus import (MARKERS, Decision, EntailmentState, Vocabulary,
                        layout_sequence)
from dgm.decoder import compute_loss, decode
from dgm.encoder import encode, gcn_gate_name, gcn_weight_name
from dgm.graph import EdgeType, RelationType
from dgm.numerics import (ComputeGraph, Tensor, backward,
                          finite_difference_gradient, relative_error)
from dgm.span import extract_span, span_loss


logger = dgm.logger.getChild(__name__)

CHECKPOINT_FORMAT = 'dgm-checkpoint-1'

ExampleLoss = namedtuple('ExampleLoss',
                         ['total', 'decision', 'entailment', 'span'])

Prediction = namedtuple('Prediction',
                        ['decision', 'entailment', 'span', 'z', 'alpha'])


def parameter_shapes(vocab_size, d, layers):
    """Names and shapes of every learnable parameter

    Parameters
    ----------
    vocab_size : int
    d : int
    layers : int

    Returns
    -------
    collections.OrderedDict
        Parameter name to shape, in initialization order

    """

    shapes = OrderedDict()

    shapes['embedding'] = (vocab_size, d)
    shapes['relation_embedding'] = (len(RelationType), d)

    for layer in range(layers):
        for edge_type in EdgeType:
            shapes[gcn_weight_name(layer, edge_type)] = (d, d)
            shapes[gcn_gate_name(layer, edge_type)] = (d, 1)

    for prefix in ('mhsa.local', 'mhsa.context'):
        for name in ('query', 'key', 'value', 'output'):
            shapes['{}.{}'.format(prefix, name)] = (d, d)

    for name in ('fuse.local', 'fuse.context'):
        shapes[name + '.weight'] = (4 * d, d)
        shapes[name + '.bias'] = (1, d)
    shapes['fuse.gate.weight'] = (2 * d, d)
    shapes['fuse.gate.bias'] = (1, d)

    for name in ('query', 'key', 'value'):
        shapes['interaction.' + name] = (d, d)

    n_entail = len(EntailmentState)
    n_decision = len(Decision)

    shapes['entail.weight'] = (d, n_entail)
    shapes['entail.bias'] = (1, n_entail)
    shapes['attn.weight'] = (d + n_entail, 1)
    shapes['attn.bias'] = (1, 1)
    shapes['decision.weight'] = (d + n_entail, n_decision)
    shapes['decision.bias'] = (1, n_decision)

    shapes['span.start'] = (d, 1)
    shapes['span.end'] = (d, 1)

    return shapes


class ModelParams:
    """Named learnable tensors of the model

    Parameters
    ----------
    tensors : mapping
        Parameter name to :class:`dgm.numerics.Tensor` or array

    """

    def __init__(self, tensors):

        self._tensors = OrderedDict(
            (name, t if isinstance(t, Tensor) else
             Tensor(t, requires_grad=True))
            for name, t in tensors.items())

        for t in self._tensors.values():
            t.requires_grad = True

    @classmethod
    def initialize(cls, vocab_size, config, rng=None):
        """Randomly initialized parameters

        Weights are drawn from N(0, 1/fan_in), embeddings from N(0, 1/d) and
        biases are zero.

        Parameters
        ----------
        vocab_size : int
        config : TrainConfig
        rng : numpy.random.Generator, optional
            Defaults to a PCG64 generator seeded with ``config.seed``

        Returns
        -------
        ModelParams

        """

        if rng is None:
            rng = np.random.Generator(np.random.PCG64(config.seed))

        tensors = OrderedDict()

        for name, shape in parameter_shapes(vocab_size, config.d,
                                            config.layers).items():
            if name.endswith('.bias'):
                data = np.zeros(shape)
            elif name.endswith('embedding'):
                data = rng.normal(0.0, np.sqrt(1.0 / config.d), shape)
            else:
                data = rng.normal(0.0, np.sqrt(1.0 / shape[0]), shape)
            tensors[name] = data

        return cls(tensors)

    def __getitem__(self, name):

        return self._tensors[name]

    def __contains__(self, name):

        return name in self._tensors

    def __iter__(self):

        return iter(self._tensors)

    def __len__(self):

        return len(self._tensors)

    def keys(self):

        return list(self._tensors.keys())

    def values(self):

        return list(self._tensors.values())

    def items(self):

        return list(self._tensors.items())

    def num_parameters(self):

        return int(sum(t.size for t in self._tensors.values()))

    def zero_grad(self):

        for t in self._tensors.values():
            t.zero_grad()

    def state(self):
        """Copies of the parameter arrays

        Returns
        -------
        collections.OrderedDict

        """

        return OrderedDict((name, t.numpy())
                           for name, t in self._tensors.items())

    def load_state(self, state):
        """Overwrites the parameter arrays in place"""

        for name, t in self._tensors.items():
            data = np.asarray(state[name], dtype=np.float64)
            if data.shape != t.shape:
                raise ValueError(
                    "shape mismatch for {}: {} vs {}".format(
                        name, data.shape, t.shape))
            t.data[...] = data

    def copy(self):

        return ModelParams(self.state())

    def __eq__(self, other):

        if not isinstance(other, ModelParams):
            return NotImplemented

        return self.keys() == other.keys() and all(
            np.array_equal(a.data, b.data)
            for a, b in zip(self.values(), other.values()))


class DGMModel:
    """Dialogue graph model for conversational machine reading

    Parameters
    ----------
    params : ModelParams
    vocab : Vocabulary
    config : TrainConfig

    """

    def __init__(self, params, vocab, config):

        expected = parameter_shapes(len(vocab), config.d, config.layers)

        if list(expected.keys()) != params.keys() or any(
                params[n].shape != s for n, s in expected.items()):
            raise ValueError(
                "Parameters do not match the configuration and vocabulary")

        self.params = params
        self.vocab = vocab
        self.config = config

        self.logger = logger.getChild(self.__class__.__name__)

    @classmethod
    def initialize(cls, vocab, config, rng=None):

        return cls(ModelParams.initialize(len(vocab), config, rng),
                   vocab, config)

    def layout(self, example):

        return layout_sequence(example, self.vocab, self.config.max_length)

    def forward(self, example):
        """Encodes and decodes one example

        Returns
        -------
        tuple
            ``(EncoderOutput, DecoderOutput)``

        """

        tokenized = self.layout(example)
        encoded = encode(tokenized, example.relation_links, self.params,
                         self.config)

        return encoded, decode(encoded, self.params)

    def loss(self, example, training=True):
        """Loss of one example

        During training the span loss of an Inquire example is added with
        weight ``config.span_weight``.

        Parameters
        ----------
        example : Example
        training : bool, optional

        Returns
        -------
        ExampleLoss

        """

        if not example.has_labels():
            raise ValueError(
                "Example {} has no gold labels".format(example.example_id))

        encoded, decoded = self.forward(example)

        components = compute_loss(decoded, example.gold_entailment,
                                  example.gold_decision, self.config.lam)

        total = components.total
        s_loss = None

        if training and self.config.span_weight > 0 and \
                example.gold_decision == Decision.INQUIRE:
            s_loss = span_loss(encoded.token_reps, self.params['span.start'],
                               self.params['span.end'], example.gold_span)
            if s_loss is not None:
                total = total + s_loss * self.config.span_weight

        return ExampleLoss(total, components.decision,
                           components.entailment, s_loss)

    def predict(self, example):
        """Predicted decision, entailment states and span

        Ties are broken by the lowest class index. A span is extracted only
        when the predicted decision is Inquire.

        Returns
        -------
        Prediction

        """

        encoded, decoded = self.forward(example)

        z = decoded.z.data[0]
        decision = list(Decision)[int(np.argmax(z))]

        states = list(EntailmentState)
        entailment = [states[i] for i in np.argmax(decoded.f.data, axis=1)]

        span = None
        if decision == Decision.INQUIRE and \
                any(t.shape[0] for t in encoded.token_reps):
            span = extract_span(encoded.token_reps, self.params['span.start'],
                                self.params['span.end'],
                                argmin=self.config.span_argmin)

        return Prediction(decision, entailment, span, z.copy(),
                          decoded.alpha.data[0].copy())

    def copy(self):

        return DGMModel(self.params.copy(), self.vocab, self.config)

    def save(self, path):
        """Writes a checkpoint to an HDF5 file

        The checkpoint holds every parameter, the vocabulary, the
        configuration and its fingerprint.

        Parameters
        ----------
        path : str

        """

        meta = pd.Series({'format': CHECKPOINT_FORMAT,
                          'release': dgm.__release__,
                          'fingerprint': self.config.fingerprint(),
                          'config': self.config.to_yaml()})

        items = [('meta', meta),
                 ('vocab', pd.Series(self.vocab.tokens())),
                 ('names', pd.Series(self.params.keys()))]
        items += [('param_{}'.format(i), pd.DataFrame(t.data))
                  for i, t in enumerate(self.params.values())]

        # no object timestamps, so equal models give equal bytes
        with pd.HDFStore(path, mode='w') as store:
            for key, value in items:
                store.put(key, value, format='table', track_times=False)

        self.logger.info("Wrote checkpoint with {} parameters to {}".format(
            self.params.num_parameters(), path))

    @classmethod
    def load(cls, path):
        """Reads a checkpoint written by :meth:`save`

        Parameters
        ----------
        path : str

        Returns
        -------
        DGMModel

        Raises
        ------
        FileNotFoundError
        ValueError
            If the file is not a checkpoint or its configuration does not
            match the stored fingerprint

        """

        if not os.path.exists(path):
            raise FileNotFoundError(path)

        with pd.HDFStore(path, mode='r') as store:

            if '/meta' not in store.keys():
                raise ValueError("{} is not a checkpoint".format(path))

            meta = store['meta']

            if meta['format'] != CHECKPOINT_FORMAT:
                raise ValueError(
                    "Unsupported checkpoint format: {}".format(
                        meta['format']))

            vocab = Vocabulary(
                [t for t in store['vocab'] if t not in MARKERS])
            names = list(store['names'])
            state = OrderedDict(
                (name, store['param_{}'.format(i)].values)
                for i, name in enumerate(names))

        config = TrainConfig.from_mapping(yaml.safe_load(meta['config']))

        if config.fingerprint() != meta['fingerprint']:
            raise ValueError(
                "Configuration of {} does not match its fingerprint".format(
                    path))

        logger.info("Read checkpoint from {}".format(path))

        return cls(ModelParams(state), vocab, config)


def check_gradients(model, example, samples=5, eps=1e-6, seed=0,
                    training=True, floor=1e-5):
    """Compares analytic and finite-difference gradients of the loss

    For each parameter, up to `samples` coordinates are drawn among those
    with a nonzero analytic gradient (or among all coordinates if there
    are none).

    Parameters
    ----------
    model : DGMModel
    example : Example
    samples : int, optional
    eps : float, optional
    seed : int, optional
    training : bool, optional
        Include the span loss
    floor : float, optional
        See :func:`dgm.numerics.relative_error`

    Returns
    -------
    pandas.Series
        Relative error indexed by parameter name

    """

    params = model.params
    params.zero_grad()

    with ComputeGraph() as graph:
        loss = model.loss(example, training).total
    backward(graph, loss)

    analytic = [np.zeros(t.shape) if t.grad is None else t.grad.copy()
                for t in params.values()]

    rng = np.random.Generator(np.random.PCG64(seed))
    coordinates = []

    for g in analytic:
        candidates = np.flatnonzero(g)
        if candidates.size == 0:
            candidates = np.arange(g.size)
        coordinates.append(rng.choice(candidates,
                                      size=min(samples, candidates.size),
                                      replace=False))

    def f():
        return model.loss(example, training).total.item()

    numeric = finite_difference_gradient(f, params.values(), eps,
                                         coordinates)

    params.zero_grad()

    errors = pd.Series(
        [relative_error(a, n, floor) for a, n in zip(analytic, numeric)],
        index=params.keys(), name='relative_error')

    logger.debug("Largest relative gradient error {:.3e} ({})".format(
        errors.max(), errors.idxmax()))

    return errors
