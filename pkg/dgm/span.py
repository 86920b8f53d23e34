"""Under-specified span labeling and extraction

Gold spans are the shortest rule spans with the minimum token-level edit
distance to the follow-up question. Predicted spans are scored with a start
vector and an end vector over the encoded rule tokens.

"""

from collections import namedtuple

import numpy as np

import dgm
from dgm.numerics import concat, cross_entropy


logger = dgm.logger.getChild(__name__)


class SpanCandidate(namedtuple('SpanCandidate',
                               ['edu_index', 'start', 'end', 'score'])):
    """Contiguous token span within one rule EDU

    `start` and `end` are token offsets within EDU `edu_index`, end
    inclusive. `score` is the edit distance for gold labels and the
    start plus end score for predictions.

    """

    __slots__ = ()

    def positions(self):
        """Token positions ``(edu_index, offset)`` covered by the span"""

        return {(self.edu_index, t) for t in range(self.start, self.end + 1)}

    def key(self):

        return (self.edu_index, self.start, self.end)


SpanMetrics = namedtuple('SpanMetrics', ['exact_match', 'f1', 'count'])


def edit_distance(source, target):
    """Token-level Levenshtein distance

    Parameters
    ----------
    source, target : sequence of str

    Returns
    -------
    int

    """

    previous = list(range(len(target) + 1))

    for i, s in enumerate(source, start=1):
        current = [i] + [0] * len(target)
        for j, t in enumerate(target, start=1):
            current[j] = min(previous[j] + 1,
                             current[j - 1] + 1,
                             previous[j - 1] + (s != t))
        previous = current

    return previous[-1]


def _distances_from(edu, start, question):
    """Edit distances of ``edu[start:end + 1]`` to `question` for every end

    Each span extends the previous one by a token, so the dynamic program
    adds one row per end position.

    """

    row = list(range(len(question) + 1))

    for i, s in enumerate(edu[start:], start=1):
        current = [i] + [0] * len(question)
        for j, t in enumerate(question, start=1):
            current[j] = min(row[j] + 1,
                             current[j - 1] + 1,
                             row[j - 1] + (s != t))
        row = current
        yield row[-1]


def gold_span_label(rule_edus, followup_question):
    """Labels the under-specified span of a follow-up question

    Every contiguous span within a single EDU is compared with the question
    by token-level edit distance. The span with the minimum distance is
    returned; ties go to the shortest span, then the earliest EDU and start
    offset.

    Parameters
    ----------
    rule_edus : sequence of sequence of str
    followup_question : sequence of str

    Returns
    -------
    SpanCandidate
        With the edit distance as score

    Raises
    ------
    ValueError
        If the question is empty or every EDU is empty

    """

    question = list(followup_question)

    if len(question) == 0:
        raise ValueError("Follow-up question must not be empty")

    if not any(len(edu) for edu in rule_edus):
        raise ValueError("At least one rule EDU must be non-empty")

    best = None
    best_key = None

    for k, edu in enumerate(rule_edus):
        edu = list(edu)
        for i in range(len(edu)):
            for offset, distance in enumerate(
                    _distances_from(edu, i, question)):
                key = (distance, offset, k, i)
                if best_key is None or key < best_key:
                    best_key = key
                    best = SpanCandidate(k, i, i + offset, distance)

    return best


def extract_span(token_reps, w_start, w_end, argmin=False):
    """Selects the best scoring span within one rule EDU

    The score of span ``(k, i, j)`` is ``w_start . t[k, i] + w_end . t[k,
    j]`` with ``i <= j``. Ties are broken by the lexicographic order of
    ``(k, i, j)``.

    Parameters
    ----------
    token_reps : sequence of array_like
        One array of shape (n_k, d) per EDU; EDUs with no tokens are skipped
    w_start, w_end : array_like
        Start and end vectors of length d
    argmin : bool, optional
        Select the minimum score instead of the maximum

    Returns
    -------
    SpanCandidate

    Raises
    ------
    ValueError
        If no EDU has tokens

    """

    w_start = np.asarray(getattr(w_start, 'data', w_start),
                         dtype=np.float64).reshape(-1)
    w_end = np.asarray(getattr(w_end, 'data', w_end),
                       dtype=np.float64).reshape(-1)
    sign = -1.0 if argmin else 1.0

    best = None

    for k, reps in enumerate(token_reps):

        reps = np.asarray(getattr(reps, 'data', reps), dtype=np.float64)

        if reps.shape[0] == 0:
            continue

        s = reps @ w_start
        e = reps @ w_end

        scores = s[:, None] + e[None, :]
        valid = np.triu(np.ones(scores.shape, dtype=bool))
        ranked = np.where(valid, sign * scores, -np.inf)

        i, j = np.argwhere(ranked == ranked.max())[0]

        if best is None or sign * scores[i, j] > sign * best.score:
            best = SpanCandidate(k, int(i), int(j), float(scores[i, j]))

    if best is None:
        raise ValueError("extract_span requires at least one rule token")

    return best


def span_metrics(predictions, golds):
    """Exact match and token-overlap F1 of predicted spans

    Parameters
    ----------
    predictions, golds : sequence of SpanCandidate or tuple
        Aligned ``(edu_index, start, end)`` spans

    Returns
    -------
    SpanMetrics
        Means over the pairs; NaN rates when there are no pairs

    Raises
    ------
    ValueError
        If the lists differ in length

    """

    if len(predictions) != len(golds):
        raise ValueError(
            "span_metrics got {} predictions for {} golds".format(
                len(predictions), len(golds)))

    if len(golds) == 0:
        return SpanMetrics(float('nan'), float('nan'), 0)

    exact = []
    f1 = []

    for p, g in zip(predictions, golds):
        p = SpanCandidate(*tuple(p)[:3], None)
        g = SpanCandidate(*tuple(g)[:3], None)

        exact.append(float(p.key() == g.key()))

        overlap = len(p.positions() & g.positions())
        size = len(p.positions()) + len(g.positions())
        f1.append(2.0 * overlap / size)

    return SpanMetrics(float(np.mean(exact)), float(np.mean(f1)), len(golds))


def span_logits(token_reps, w_start, w_end):
    """Start and end logits over the concatenated rule tokens

    Parameters
    ----------
    token_reps : sequence of Tensor
        One (n_k, d) tensor per EDU
    w_start, w_end : Tensor
        Parameters of shape (d, 1)

    Returns
    -------
    tuple of Tensor
        Start and end logits of shape (1, total tokens)

    """

    reps = concat([t for t in token_reps if t.shape[0] > 0], axis=0)

    return (reps @ w_start).T, (reps @ w_end).T


def span_loss(token_reps, w_start, w_end, gold_span):
    """Start and end cross-entropy of the gold span

    Parameters
    ----------
    token_reps : sequence of Tensor
        One (n_k, d) tensor per EDU
    w_start, w_end : Tensor
    gold_span : tuple of int
        ``(edu_index, start, end)``

    Returns
    -------
    Tensor or None
        Scalar loss, or None if the gold span lies outside the tokens

    """

    k, i, j = tuple(gold_span)[:3]
    lengths = [t.shape[0] for t in token_reps]

    if j >= lengths[k]:
        logger.debug("Gold span {} lies outside truncated EDU {}".format(
            gold_span, k))
        return None

    offset = sum(lengths[:k])

    start, end = span_logits(token_reps, w_start, w_end)

    return (cross_entropy(start, [offset + i]) +
            cross_entropy(end, [offset + j])) * 0.5
