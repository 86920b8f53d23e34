"""Training loop with Adam and global gradient-norm clipping"""

from collections import namedtuple

import numpy as np
import pandas as pd

import dgm
from dgm.corpus import Vocabulary
from dgm.evaluate import evaluate
from dgm.model import DGMModel
from dgm.numerics import ComputeGraph, backward


logger = dgm.logger.getChild(__name__)

TrainResult = namedtuple('TrainResult', ['model', 'log', 'best_epoch'])

LOG_COLUMNS = ['epoch', 'loss', 'decision_loss', 'entailment_loss',
               'span_loss', 'grad_norm', 'train_micro', 'dev_micro',
               'dev_macro']


class Adam:
    """Adaptive moment estimation

    Parameters
    ----------
    params : ModelParams
    learning_rate : float
    beta1, beta2 : float, optional
        Decay rates of the first and second moment estimates
    eps : float, optional

    """

    def __init__(self, params, learning_rate, beta1=0.9, beta2=0.999,
                 eps=1e-8):

        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

        self._m = {name: np.zeros(t.shape) for name, t in params.items()}
        self._v = {name: np.zeros(t.shape) for name, t in params.items()}
        self._t = 0

    @property
    def steps(self):

        return self._t

    def step(self):
        """Updates every parameter from its current gradient

        Parameters without a gradient are treated as having a zero
        gradient.

        """

        self._t += 1

        correction1 = 1.0 - self.beta1 ** self._t
        correction2 = 1.0 - self.beta2 ** self._t

        for name, t in self.params.items():

            g = np.zeros(t.shape) if t.grad is None else t.grad

            m = self._m[name] = self.beta1 * self._m[name] + \
                (1.0 - self.beta1) * g
            v = self._v[name] = self.beta2 * self._v[name] + \
                (1.0 - self.beta2) * g * g

            m_hat = m / correction1
            v_hat = v / correction2

            t.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def global_norm(params):

    return float(np.sqrt(sum(float(np.sum(t.grad * t.grad))
                             for t in params.values()
                             if t.grad is not None)))


def clip_gradients(params, max_norm):
    """Scales all gradients so that their global norm is at most `max_norm`

    Parameters
    ----------
    params : ModelParams
    max_norm : float

    Returns
    -------
    float
        Global norm before clipping

    """

    norm = global_norm(params)

    if norm > max_norm:
        scale = max_norm / norm
        for t in params.values():
            if t.grad is not None:
                t.grad = t.grad * scale

    return norm


def _batch_loss(model, batch):

    losses = [model.loss(example, training=True) for example in batch]

    total = losses[0].total
    for loss in losses[1:]:
        total = total + loss.total

    return total * (1.0 / len(batch)), losses


def train(config, train_set, dev_set=None, vocab=None, eval_train=True):
    """Trains a model

    The training set is shuffled every epoch with a PCG64 generator seeded
    from ``config.seed``. After each epoch the model is evaluated and the
    parameters with the best dev micro accuracy are kept, the earliest epoch
    winning ties. Without a dev set the train micro accuracy is used.

    Parameters
    ----------
    config : TrainConfig
    train_set : sequence of Example
    dev_set : sequence of Example, optional
    vocab : Vocabulary, optional
        Built from the train and dev sets by default
    eval_train : bool, optional
        Evaluate the training set after every epoch

    Returns
    -------
    TrainResult
        Model with the best parameters, the per-epoch metrics log and the
        best epoch

    Raises
    ------
    ValueError
        If the training set is empty
    RuntimeError
        If a batch loss is not finite

    """

    if len(train_set) == 0:
        raise ValueError("Training set must not be empty")

    dev_set = list(dev_set) if dev_set is not None else []

    if vocab is None:
        vocab = Vocabulary.build(list(train_set) + dev_set)

    model = DGMModel.initialize(vocab, config)
    params = model.params

    optimizer = Adam(params, config.learning_rate, config.beta1,
                     config.beta2, config.adam_eps)

    shuffle_rng = np.random.Generator(np.random.PCG64([config.seed, 1]))

    logger.info(
        "Training {} parameters on {} examples for {} epochs".format(
            params.num_parameters(), len(train_set), config.epochs))

    rows = []
    best_score = None
    best_epoch = None
    best_state = None

    for epoch in range(1, config.epochs + 1):

        order = shuffle_rng.permutation(len(train_set))

        sums = {'loss': 0.0, 'decision_loss': 0.0, 'entailment_loss': 0.0,
                'span_loss': 0.0, 'grad_norm': 0.0}
        span_count = 0
        n_batches = 0

        for batch_no, start in enumerate(
                range(0, len(train_set), config.batch_size)):

            batch = [train_set[i]
                     for i in order[start:start + config.batch_size]]

            params.zero_grad()

            with ComputeGraph() as graph:
                loss, losses = _batch_loss(model, batch)

            value = loss.item()

            if not np.isfinite(value):
                logger.error(
                    "Non-finite loss at epoch {}, batch {}".format(
                        epoch, batch_no))
                raise RuntimeError(
                    "Non-finite loss at epoch {}, batch {}".format(
                        epoch, batch_no))

            backward(graph, loss)

            norm = clip_gradients(params, config.clip_norm)
            assert global_norm(params) <= config.clip_norm * (1 + 1e-9)

            optimizer.step()

            logger.debug("Epoch {} batch {}: loss {:.6f}, norm {:.4f}".format(
                epoch, batch_no, value, norm))

            sums['loss'] += value * len(batch)
            sums['grad_norm'] += norm
            sums['decision_loss'] += sum(l.decision.item() for l in losses)
            sums['entailment_loss'] += sum(l.entailment.item()
                                           for l in losses)
            for l in losses:
                if l.span is not None:
                    sums['span_loss'] += l.span.item()
                    span_count += 1
            n_batches += 1

        params.zero_grad()

        row = {'epoch': epoch,
               'loss': sums['loss'] / len(train_set),
               'decision_loss': sums['decision_loss'] / len(train_set),
               'entailment_loss': sums['entailment_loss'] / len(train_set),
               'span_loss': sums['span_loss'] / span_count if span_count
               else float('nan'),
               'grad_norm': sums['grad_norm'] / n_batches,
               'train_micro': float('nan'),
               'dev_micro': float('nan'),
               'dev_macro': float('nan')}

        if eval_train or not dev_set:
            row['train_micro'] = evaluate(model, train_set).micro

        if dev_set:
            report = evaluate(model, dev_set)
            row['dev_micro'] = report.micro
            row['dev_macro'] = report.macro
            score = report.micro
        else:
            score = row['train_micro']

        rows.append(row)

        logger.info(
            "Epoch {}: loss {:.4f}, train micro {:.4f}, dev micro "
            "{:.4f}".format(epoch, row['loss'], row['train_micro'],
                            row['dev_micro']))

        if best_score is None or score > best_score:
            best_score = score
            best_epoch = epoch
            best_state = params.state()

    params.load_state(best_state)

    logger.info("Kept parameters of epoch {} (micro {:.4f})".format(
        best_epoch, best_score))

    log = pd.DataFrame(rows, columns=LOG_COLUMNS)

    return TrainResult(model, log, best_epoch)
