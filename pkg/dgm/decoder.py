"""Interaction layer, entailment and decision heads, and the joint loss"""

from collections import namedtuple

import numpy as np

import dgm
from dgm.corpus import Decision, EntailmentState
from dgm.numerics import concat, cross_entropy, softmax


logger = dgm.logger.getChild(__name__)


DecoderOutput = namedtuple('DecoderOutput', ['f', 'z', 'alpha', 'tilde'])
DecoderOutput.__doc__ = """Output of :func:`decode`

f : Tensor
    Entailment logits of each EDU, (n, 3)
z : Tensor
    Decision logits, (1, 4)
alpha : Tensor
    Decision attention over the EDUs, (1, n)
tilde : Tensor
    Interaction layer output of the EDUs, (n, d)
"""

LossComponents = namedtuple('LossComponents',
                            ['total', 'decision', 'entailment'])


def interaction_layer(inputs, params):
    """Unmasked single-head self-attention over all element vectors

    Parameters
    ----------
    inputs : sequence of Tensor
        Element vectors ``[r_1..r_n; u_q; u_s; s_1..s_p; h_1..h_m]``, each of
        shape (k, d)
    params : mapping
        Holds ``interaction.query``, ``.key`` and ``.value``

    Returns
    -------
    Tensor
        Array with one row per input row

    Raises
    ------
    ValueError
        If `inputs` is empty

    """

    if len(inputs) == 0:
        raise ValueError("interaction_layer requires at least one input")

    x = concat(list(inputs), axis=0)

    q = x @ params['interaction.query']
    k = x @ params['interaction.key']
    v = x @ params['interaction.value']

    weights = softmax((q @ k.T) * (1.0 / np.sqrt(x.shape[1])))

    return weights @ v


def entailment_scores(r_tilde, params):
    """Entailment logits ``f_i = W_f r_i + b_f`` of each row"""

    return r_tilde @ params['entail.weight'] + params['entail.bias']


def decision_scores(f, r_tilde, params):
    """Decision logits and attention over the EDUs

    Parameters
    ----------
    f : Tensor
        Entailment logits of shape (n, 3)
    r_tilde : Tensor
        EDU representations of shape (n, d)
    params : mapping

    Returns
    -------
    tuple of Tensor
        Decision logits of shape (1, 4) and attention of shape (1, n)

    """

    if f.shape[0] == 0 or f.shape[0] != r_tilde.shape[0]:
        raise ValueError(
            "decision_scores requires matching non-empty inputs, got "
            "{} and {}".format(f.shape, r_tilde.shape))

    x = concat([f, r_tilde], axis=1)

    alpha = x @ params['attn.weight'] + params['attn.bias']
    alpha = softmax(alpha.T)

    z = (alpha @ x) @ params['decision.weight'] + params['decision.bias']

    return z, alpha


def decode(encoded, params):
    """Runs the interaction layer and both heads

    The interaction layer sees the EDUs, the question, the scenario summary,
    one row per scenario sentence and one row per history turn, so a rule
    can attend to the single fact that mentions its condition.

    Parameters
    ----------
    encoded : EncoderOutput
    params : mapping

    Returns
    -------
    DecoderOutput

    """

    n = encoded.r.shape[0]

    inputs = [encoded.r, encoded.question_vector, encoded.scenario_vector] \
        + list(encoded.sentence_vectors) + list(encoded.history_vectors)

    tilde = interaction_layer(inputs, params)[:n]

    f = entailment_scores(tilde, params)
    z, alpha = decision_scores(f, tilde, params)

    return DecoderOutput(f, z, alpha, tilde)


def compute_loss(outputs, gold_entailment, gold_decision, lam):
    """Joint decision and entailment loss

    ``L = L_decision + lam * L_entail`` where ``L_entail`` averages the
    entailment cross-entropy over the EDUs of the example.

    Parameters
    ----------
    outputs : DecoderOutput
    gold_entailment : sequence of EntailmentState
    gold_decision : Decision
    lam : float

    Returns
    -------
    LossComponents

    Raises
    ------
    ValueError
        If a gold label is missing or the entailment count differs from the
        EDU count

    """

    n = outputs.f.shape[0]

    if gold_decision is None or gold_entailment is None or \
            len(gold_entailment) != n:
        raise ValueError(
            "compute_loss requires a gold decision and {} entailment "
            "labels".format(n))

    entail_targets = [EntailmentState.from_name(s).index
                      for s in gold_entailment]
    decision_target = Decision.from_name(gold_decision).index

    l_entail = cross_entropy(outputs.f, entail_targets)
    l_decision = cross_entropy(outputs.z, [decision_target])

    if lam == 0:
        total = l_decision
    else:
        total = l_decision + l_entail * lam

    return LossComponents(total, l_decision, l_entail)
