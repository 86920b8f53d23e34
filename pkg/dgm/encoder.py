"""Explicit and implicit discourse graph encoders

The explicit encoder runs a gated relational GCN over the Levi graph of the
rule document. The implicit encoder runs masked multi-head self-attention
over the rule tokens, once with a local (intra-EDU) mask and once with a
contextualized (inter-EDU) mask, and fuses both in a gated manner.

Parameters are read by name from a mapping of :class:`dgm.numerics.Tensor`
objects, see :class:`dgm.model.ModelParams` for the names and shapes.

"""

from collections import namedtuple

import numpy as np

import dgm
from dgm import NEG_INF
from dgm.graph import EdgeType, build_levi_graph
from dgm.numerics import Tensor, concat, masked_softmax, relu, sigmoid


logger = dgm.logger.getChild(__name__)


EncoderOutput = namedtuple(
    'EncoderOutput',
    ['G', 'C', 'r', 'E', 'question_vector', 'scenario_vector',
     'sentence_vectors', 'history_vectors', 'token_reps', 'graph'])
EncoderOutput.__doc__ = """Output of :func:`encode`

G : Tensor
    Explicit vectors of the EDU vertices, (n, d)
C : Tensor
    Fused token matrix of the rule region, (s, d)
r : Tensor
    Combined per-EDU representations, (n, d)
E : Tensor
    Rule region embeddings, (s, d)
question_vector, scenario_vector : Tensor
    Segment summaries, (1, d)
sentence_vectors : list of Tensor
    One (1, d) summary per scenario sentence
history_vectors : list of Tensor
    One (1, d) summary per history turn
token_reps : list of Tensor
    Rows of C of the content tokens of each EDU
graph : LeviGraph
"""


def gcn_weight_name(layer, edge_type):

    return 'gcn.{}.{}.weight'.format(layer, edge_type.value)


def gcn_gate_name(layer, edge_type):

    return 'gcn.{}.{}.gate'.format(layer, edge_type.value)


def init_vertex_states(graph, rule_vectors, scenario_vector, params):
    """Initial states of the Levi graph vertices

    EDU vertices take the rule vectors, relation vertices look up their
    relation type in the relation embedding table and the global vertex
    takes the scenario vector.

    Parameters
    ----------
    graph : LeviGraph
    rule_vectors : Tensor
        Array of shape (n_EDU, d)
    scenario_vector : Tensor
        Array of shape (1, d)
    params : mapping

    Returns
    -------
    Tensor
        Array of shape (|V|, d)

    Raises
    ------
    ValueError
        If the number of rule vectors differs from the EDU count

    """

    if rule_vectors.shape[0] != graph.edu_count:
        raise ValueError(
            "{} rule vectors for {} EDUs".format(
                rule_vectors.shape[0], graph.edu_count))

    parts = [rule_vectors]

    relations = [graph.payload(v).index for v in graph.relation_vertices()]

    if relations:
        parts.append(params['relation_embedding'][relations])

    parts.append(scenario_vector)

    return concat(parts, axis=0)


def gcn_layer(graph, h, params, layer):
    """One layer of the gated relational GCN

    ``h'_p = ReLU(sum_r sum_{q in N_r(p)} g_q / c_{p,r} * h_q w_r)`` with the
    sender gate ``g_q = sigmoid(h_q W_{r,g})``.

    Parameters
    ----------
    graph : LeviGraph
    h : Tensor
        Vertex states of shape (|V|, d)
    params : mapping
    layer : int

    Returns
    -------
    Tensor
        Vertex states of shape (|V|, d)

    """

    if h.shape[0] != graph.num_vertices:
        raise ValueError(
            "shape mismatch: {} states for {} vertices".format(
                h.shape[0], graph.num_vertices))

    out = None

    for edge_type in EdgeType:

        a = graph.adjacency(edge_type)

        if not a.any():
            continue

        gate = sigmoid(h @ params[gcn_gate_name(layer, edge_type)])
        message = (gate * h) @ params[gcn_weight_name(layer, edge_type)]
        term = Tensor(a) @ message

        out = term if out is None else out + term

    return relu(out)


def build_masks(edu_index):
    """Local and contextualized attention masks

    Parameters
    ----------
    edu_index : array_like of int
        EDU index of every token of the rule region

    Returns
    -------
    tuple of numpy.ndarray
        ``(M_l, M_c)``: ``M_l[i, j]`` is 0 where tokens `i` and `j` belong
        to the same EDU and ``M_c[i, j]`` is 0 where they do not; every
        other entry is :data:`dgm.NEG_INF`

    """

    edu_index = np.asarray(edu_index, dtype=int)
    same = edu_index[:, None] == edu_index[None, :]

    return np.where(same, 0.0, NEG_INF), np.where(same, NEG_INF, 0.0)


def implicit_encode(E, M, params, heads, prefix='mhsa.local'):
    """Masked multi-head self-attention

    Parameters
    ----------
    E : Tensor
        Token embeddings of shape (s, d)
    M : numpy.ndarray
        Mask of shape (s, s)
    params : mapping
        Holds ``<prefix>.query``, ``.key``, ``.value`` and ``.output``
    heads : int
    prefix : str, optional

    Returns
    -------
    Tensor
        Array of shape (s, d)

    Raises
    ------
    ValueError
        If d is not divisible by `heads`

    """

    s, d = E.shape

    if d % heads != 0:
        raise ValueError(
            "d ({}) must be divisible by heads ({})".format(d, heads))

    M = np.asarray(M)
    if M.shape != (s, s):
        raise ValueError("shape mismatch: mask {} for {} tokens".format(
            M.shape, s))

    d_head = d // heads
    scale = 1.0 / np.sqrt(d_head)

    q = E @ params[prefix + '.query']
    k = E @ params[prefix + '.key']
    v = E @ params[prefix + '.value']

    outputs = []

    for n in range(heads):
        cols = (slice(None), slice(n * d_head, (n + 1) * d_head))
        scores = (q[cols] @ k[cols].T) * scale
        weights = masked_softmax(scores, M)
        outputs.append(weights @ v[cols])

    return concat(outputs, axis=1) @ params[prefix + '.output']


def _fc(x, params, name):

    return x @ params[name + '.weight'] + params[name + '.bias']


def gated_fuse(E, G_l, G_c, params):
    """Gated fusion of the local and contextualized encodings

    Parameters
    ----------
    E, G_l, G_c : Tensor
        Arrays of shape (s, d)
    params : mapping

    Returns
    -------
    Tensor
        ``g * G_l + (1 - g) * G_c`` of shape (s, d)

    """

    if not E.shape == G_l.shape == G_c.shape:
        raise ValueError(
            "shape mismatch in gated_fuse: {}, {}, {}".format(
                E.shape, G_l.shape, G_c.shape))

    e1 = relu(_fc(concat([E, G_l, E - G_l, E * G_l]), params, 'fuse.local'))
    e2 = relu(_fc(concat([E, G_c, E - G_c, E * G_c]), params,
                  'fuse.context'))

    g = sigmoid(_fc(concat([e1, e2]), params, 'fuse.gate'))

    return g * G_l + (1.0 - g) * G_c


def _summary(emb, marker, span):
    """Embedding of a marker plus the mean embedding of a segment"""

    out = emb[marker:marker + 1]
    start, end = span

    if end > start:
        out = out + emb[start:end].mean(axis=0, keepdims=True)

    return out


def _pooling(tokenized, mean):
    """Reads one row per EDU from the rule region

    Returns an (n, s) matrix selecting the marker rows, or averaging the
    content rows of each EDU when `mean` is set.

    """

    start = tokenized.rule_start
    s = len(tokenized) - start
    pool = np.zeros((tokenized.edu_count, s))

    for k, marker in enumerate(tokenized.rule_marker_positions):
        content = [p - start for p in tokenized.edu_token_positions(k)]
        if mean and content:
            pool[k, content] = 1.0 / len(content)
        else:
            pool[k, marker - start] = 1.0

    return pool


def _marker_summaries(tokenized):
    """(s, s) matrix adding the mean content row of each EDU to its marker"""

    start = tokenized.rule_start
    s = len(tokenized) - start
    pool = np.zeros((s, s))

    for k, marker in enumerate(tokenized.rule_marker_positions):
        content = [p - start for p in tokenized.edu_token_positions(k)]
        if content:
            pool[marker - start, content] = 1.0 / len(content)

    return pool


def encode(tokenized, links, params, config):
    """Encodes a laid out example

    Runs the embedding lookup, the gated GCN over the Levi graph and the
    two masked attention passes with gated fusion. The combined EDU
    representation is ``r_i = C[RULE_i] + G_i``.

    Parameters
    ----------
    tokenized : TokenizedInput
    links : sequence of DiscourseLink
    params : mapping
    config : TrainConfig
        Supplies `layers`, `heads` and the ablation flags

    Returns
    -------
    EncoderOutput

    """

    n = tokenized.edu_count
    start = tokenized.rule_start

    emb = params['embedding'][tokenized.token_ids]
    E = emb[start:]

    if not config.disable_rule_marker:
        E = E + Tensor(_marker_summaries(tokenized)) @ E

    scenario_vector = _summary(emb, 0, tokenized.scenario)
    question_vector = _summary(emb, tokenized.question[1],
                               tokenized.question)
    sentence_vectors = [_summary(emb, tokenized.scenario[1], span)
                        for span in tokenized.scenario_sentences]
    history_vectors = [_summary(emb, end, (begin, end))
                       for begin, end in tokenized.history]

    read = Tensor(_pooling(tokenized, config.disable_rule_marker))

    graph = build_levi_graph(n, links)

    if config.disable_explicit_graph:
        G = Tensor(np.zeros((n, E.shape[1])))
    else:
        h = init_vertex_states(graph, read @ E, scenario_vector, params)
        for layer in range(config.layers):
            h = gcn_layer(graph, h, params, layer)
        G = h[:n]

    if config.disable_implicit_graph:
        C = E
    else:
        M_l, M_c = build_masks(tokenized.rule_edu_index())
        G_l = implicit_encode(E, M_l, params, config.heads, 'mhsa.local')
        G_c = implicit_encode(E, M_c, params, config.heads, 'mhsa.context')
        C = gated_fuse(E, G_l, G_c, params)

    r = read @ C + G

    token_reps = [C[np.array(tokenized.edu_token_positions(k), dtype=int) -
                    start] for k in range(n)]

    logger.debug("Encoded {} tokens, {} EDUs, {} graph vertices".format(
        len(tokenized), n, graph.num_vertices))

    return EncoderOutput(G, C, r, E, question_vector, scenario_vector,
                         sentence_vectors, history_vectors, token_reps,
                         graph)
