"""Conversational machine reading examples

Data model for flattened dialog turns, a seeded generator of synthetic rule
documents, JSON Lines reading and writing, and the layout of an example as a
single token sequence with ``[CLS]``, ``[SEP]`` and ``[RULE]`` markers.

"""

import json
import os
from enum import Enum

import networkx as nx
import numpy as np

import dgm
from dgm.config import Config
from dgm.graph import DiscourseLink, RelationType
from dgm.span import gold_span_label


logger = dgm.logger.getChild(__name__)

PAD = '[PAD]'
UNK = '[UNK]'
CLS = '[CLS]'
SEP = '[SEP]'
RULE = '[RULE]'

MARKERS = (PAD, UNK, CLS, SEP, RULE)

ANSWERS = ('yes', 'no')

SENTENCE_MARKS = ('.', '!', '?')


class Decision(Enum):
    """Final decision of a dialog turn, in tie-break order"""

    YES = 'yes'
    NO = 'no'
    INQUIRE = 'inquire'
    IRRELEVANT = 'irrelevant'

    @classmethod
    def from_name(cls, name):

        if isinstance(name, cls):
            return name

        # YAML 1.1 reads bare yes and no as booleans
        if isinstance(name, bool):
            return cls.YES if name else cls.NO

        key = str(name).strip().lower()

        # ShARC marks follow-up turns as 'more'
        if key == 'more':
            key = 'inquire'

        try:
            return cls(key)
        except ValueError:
            raise ValueError("Unknown decision: {}".format(name))

    @property
    def index(self):

        return list(Decision).index(self)


class EntailmentState(Enum):
    """Fulfillment state of one rule EDU"""

    ENTAILMENT = 'entailment'
    CONTRADICTION = 'contradiction'
    UNMENTIONED = 'unmentioned'

    @classmethod
    def from_name(cls, name):

        if isinstance(name, cls):
            return name

        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError("Unknown entailment state: {}".format(name))

    @property
    def index(self):

        return list(EntailmentState).index(self)


def tokenize(text):
    """Whitespace tokenizer

    Parameters
    ----------
    text : str

    Returns
    -------
    list of str

    """

    return text.lower().split()


class Example:
    """One flattened dialog turn

    Parameters
    ----------
    example_id : str
    tree_id : str
    rule_edus : list of list of str
        Tokens of each rule EDU
    relation_links : list of DiscourseLink
    question : list of str
    scenario : list of str
    history : list of tuple
        ``(follow-up question tokens, answer)`` with answer ``'yes'`` or
        ``'no'``
    gold_entailment : list of EntailmentState, optional
        One state per EDU, or empty when labels are unavailable
    gold_decision : Decision, optional
    gold_span : tuple of int, optional
        ``(edu index, start, end)``, end inclusive

    """

    def __init__(self, example_id, tree_id, rule_edus, relation_links,
                 question, scenario, history, gold_entailment=None,
                 gold_decision=None, gold_span=None):

        self.example_id = str(example_id)
        self.tree_id = str(tree_id)
        self.rule_edus = [list(edu) for edu in rule_edus]
        self.relation_links = [DiscourseLink(*link)
                               for link in relation_links]
        self.question = list(question)
        self.scenario = list(scenario)
        self.history = [(list(q), a) for q, a in history]

        if gold_entailment is None:
            gold_entailment = []
        self.gold_entailment = [EntailmentState.from_name(s)
                                for s in gold_entailment]

        if gold_decision is not None:
            gold_decision = Decision.from_name(gold_decision)
        self.gold_decision = gold_decision

        if gold_span is not None:
            gold_span = tuple(int(i) for i in gold_span)
        self.gold_span = gold_span

        self.validate()

    def validate(self):
        """Checks the invariants of this example

        Raises
        ------
        ValueError
            If an invariant is violated

        """

        n = len(self.rule_edus)

        if n == 0:
            raise ValueError(
                "Example {} has no rule EDUs".format(self.example_id))

        for link in self.relation_links:
            link.validate(n)

        for _, answer in self.history:
            if answer not in ANSWERS:
                raise ValueError(
                    "History answer must be yes or no, got {}".format(
                        answer))

        if self.gold_entailment and len(self.gold_entailment) != n:
            raise ValueError(
                "Example {} has {} entailment labels for {} EDUs".format(
                    self.example_id, len(self.gold_entailment), n))

        inquire = self.gold_decision == Decision.INQUIRE

        if inquire and self.gold_span is None:
            raise ValueError(
                "Example {} is Inquire but has no gold span".format(
                    self.example_id))

        if not inquire and self.gold_span is not None:
            raise ValueError(
                "Example {} has a gold span but is not Inquire".format(
                    self.example_id))

        if self.gold_span is not None:
            k, i, j = self.gold_span
            if not 0 <= k < n:
                raise ValueError(
                    "Gold span EDU {} out of range".format(k))
            if not 0 <= i <= j < len(self.rule_edus[k]):
                raise ValueError(
                    "Gold span ({}, {}) out of range for EDU {}".format(
                        i, j, k))

    @property
    def edu_count(self):

        return len(self.rule_edus)

    def has_labels(self):

        return self.gold_decision is not None and \
            len(self.gold_entailment) == self.edu_count

    def to_record(self):
        """Returns the JSON Lines record of this example

        Returns
        -------
        dict

        """

        record = {
            'example_id': self.example_id,
            'tree_id': self.tree_id,
            'rule_edus': [' '.join(edu) for edu in self.rule_edus],
            'relation_links': [link.to_dict()
                               for link in self.relation_links],
            'question': ' '.join(self.question),
            'scenario': ' '.join(self.scenario),
            'history': [{'q': ' '.join(q), 'a': a}
                        for q, a in self.history],
        }

        if self.gold_entailment:
            record['gold_entailment'] = [s.value
                                         for s in self.gold_entailment]

        record['gold_decision'] = None if self.gold_decision is None \
            else self.gold_decision.value

        if self.gold_span is not None:
            k, i, j = self.gold_span
            record['gold_span'] = {'edu': k, 'start': i, 'end': j}

        return record

    @classmethod
    def from_record(cls, record):
        """Creates an example from a JSON Lines record

        Raises
        ------
        KeyError
            If a required field is missing
        ValueError
            If an invariant is violated

        """

        span = record.get('gold_span')

        if span is not None:
            span = (span['edu'], span['start'], span['end'])

        links = [DiscourseLink(link['head'], link['dep'], link['relation'])
                 for link in record['relation_links']]

        return cls(example_id=record['example_id'],
                   tree_id=record['tree_id'],
                   rule_edus=[tokenize(edu) for edu in record['rule_edus']],
                   relation_links=links,
                   question=tokenize(record['question']),
                   scenario=tokenize(record['scenario']),
                   history=[(tokenize(turn['q']), turn['a'].strip().lower())
                            for turn in record['history']],
                   gold_entailment=record.get('gold_entailment'),
                   gold_decision=record['gold_decision'],
                   gold_span=span)

    def __eq__(self, other):

        if not isinstance(other, Example):
            return NotImplemented

        return self.to_record() == other.to_record()

    def __repr__(self):

        return 'Example({}, edus={}, decision={})'.format(
            self.example_id, self.edu_count,
            None if self.gold_decision is None else self.gold_decision.value)


def alternation_groups(edu_count, links):
    """Groups EDUs joined by alternation links

    Parameters
    ----------
    edu_count : int
    links : sequence of DiscourseLink

    Returns
    -------
    list of list of int
        Groups sorted by their first EDU

    """

    g = nx.Graph()
    g.add_nodes_from(range(edu_count))

    for link in links:
        if RelationType.from_name(link.relation) == RelationType.ALTERNATION:
            g.add_edge(link.head, link.dep)

    return sorted(sorted(c) for c in nx.connected_components(g))


def _group_status(states):

    if EntailmentState.ENTAILMENT in states:
        return EntailmentState.ENTAILMENT

    if all(s == EntailmentState.CONTRADICTION for s in states):
        return EntailmentState.CONTRADICTION

    return EntailmentState.UNMENTIONED


def decide(entailment, links, relevant=True):
    """Decision implied by per-EDU entailment states

    EDUs joined by alternation form disjunctive groups, every other EDU is
    a group of its own and groups are conjunctive. A group is satisfied if
    any member is entailed and failed if every member is contradicted. The
    decision is No if any group failed, Yes if every group is satisfied and
    Inquire otherwise.

    Parameters
    ----------
    entailment : sequence of EntailmentState
    links : sequence of DiscourseLink
    relevant : bool, optional
        If False the decision is Irrelevant

    Returns
    -------
    Decision

    """

    if not relevant:
        return Decision.IRRELEVANT

    groups = alternation_groups(len(entailment), links)
    status = [_group_status([entailment[i] for i in group])
              for group in groups]

    if EntailmentState.CONTRADICTION in status:
        return Decision.NO

    if all(s == EntailmentState.ENTAILMENT for s in status):
        return Decision.YES

    return Decision.INQUIRE


def first_unresolved_edu(entailment, links):
    """Index of the first unmentioned EDU of a group that is neither
    satisfied nor failed, or None"""

    for group in alternation_groups(len(entailment), links):
        states = [entailment[i] for i in group]
        if _group_status(states) == EntailmentState.UNMENTIONED:
            return next(i for i in group
                        if entailment[i] == EntailmentState.UNMENTIONED)

    return None


class GeneratorConfig:
    """Configuration of the synthetic rule-document generator

    Parameters
    ----------
    n_examples : int, optional
    edu_range : tuple of int, optional
        Inclusive range of the number of EDUs per rule document
    n_topics : int, optional
        Size of the pool of rule-document topics
    n_concepts : int, optional
        Size of the pool of condition concepts
    relation_weights : dict, optional
        Relation name to sampling weight for links between adjacent EDUs;
        alternation links make disjunctive groups
    extra_link_prob : float, optional
        Probability of an additional non-adjacent, non-alternation link
    coverage : dict, optional
        Sampling weights of ``'entailment'``, ``'contradiction'`` and
        ``'unmentioned'`` for each condition
    history_prob : float, optional
        Probability that a mentioned condition is resolved in the dialog
        history rather than in the scenario
    distractor_prob : float, optional
        Probability of adding a scenario fact unrelated to the rules
    decision_priors : dict or None, optional
        Decision name to prior probability. If None the decision follows
        from the sampled coverage and `irrelevant_rate`.
    irrelevant_rate : float, optional
        Rate of irrelevant questions when `decision_priors` is None

    """

    _defaults = {'n_examples': 1000,
                 'edu_range': (1, 4),
                 'n_topics': 20,
                 'n_concepts': 60,
                 'relation_weights': {'continuation': 4.0,
                                      'alternation': 2.0,
                                      'elaboration': 1.0,
                                      'explanation': 1.0,
                                      'contrast': 1.0,
                                      'comment': 1.0},
                 'extra_link_prob': 0.2,
                 'coverage': {'entailment': 0.4,
                              'contradiction': 0.2,
                              'unmentioned': 0.4},
                 'history_prob': 0.3,
                 'distractor_prob': 0.3,
                 'decision_priors': {'yes': 0.3,
                                     'no': 0.25,
                                     'inquire': 0.3,
                                     'irrelevant': 0.15},
                 'irrelevant_rate': 0.0}

    def __init__(self, **kwargs):

        unknown = set(kwargs) - set(self._defaults)
        if unknown:
            raise ValueError(
                "Unknown generator configuration keys: {}".format(
                    sorted(unknown)))

        values = dict(self._defaults)
        values.update(kwargs)

        for k, v in values.items():
            setattr(self, k, v)

        self._validate()

    @staticmethod
    def _weights(name, mapping, parse):

        if not mapping:
            raise ValueError("{} must not be empty".format(name))

        keys = [parse(k) for k in mapping]
        weights = np.array([float(v) for v in mapping.values()])

        if np.any(weights < 0) or not weights.sum() > 0:
            raise ValueError(
                "{} must be nonnegative with a positive sum".format(name))

        return keys, weights / weights.sum()

    def _validate(self):

        if int(self.n_examples) < 1:
            raise ValueError("n_examples must be at least one")
        self.n_examples = int(self.n_examples)

        low, high = (int(v) for v in self.edu_range)
        if low < 1 or high < low:
            raise ValueError("edu_range must be a nonempty range from 1")
        self.edu_range = (low, high)

        if int(self.n_topics) < 1 or int(self.n_concepts) < high:
            raise ValueError(
                "n_topics must be positive and n_concepts at least the "
                "maximum EDU count")

        self._relations, self._relation_p = self._weights(
            'relation_weights', self.relation_weights,
            RelationType.from_name)

        self._states, self._state_p = self._weights(
            'coverage', self.coverage, EntailmentState.from_name)

        for name in ('extra_link_prob', 'history_prob', 'distractor_prob',
                     'irrelevant_rate'):
            v = float(getattr(self, name))
            if not 0 <= v <= 1:
                raise ValueError("{} must be a probability".format(name))
            setattr(self, name, v)

        if self.decision_priors is not None:
            self._decisions, self._decision_p = self._weights(
                'decision_priors', self.decision_priors, Decision.from_name)
        else:
            self._decisions, self._decision_p = None, None

        needs_irrelevant = self.irrelevant_rate > 0 or (
            self._decisions is not None and
            Decision.IRRELEVANT in self._decisions)

        if needs_irrelevant and int(self.n_topics) < 2:
            raise ValueError("Irrelevant questions need at least two topics")

    @classmethod
    def from_yaml(cls, path):

        config = Config(path)

        return cls(**{k: config[k] for k in config.keys()})

    def to_dict(self):

        return {k: getattr(self, k) for k in self._defaults}

    def replace(self, **kwargs):

        values = self.to_dict()
        values.update(kwargs)

        return self.__class__(**values)

    def priors(self):
        """Decision priors as a dict, or None in coverage mode"""

        if self._decisions is None:
            return None

        return {d: float(p) for d, p in zip(self._decisions,
                                            self._decision_p)}


_VERBS = ('must', 'need', 'should')

# question templates of irrelevant examples
_UNRELATED_QUESTIONS = (('where', 'do', 'i', 'report', 'TOPIC', '?'),
                        ('who', 'runs', 'TOPIC', '?'),
                        ('how', 'long', 'does', 'TOPIC', 'take', '?'))


class _DocumentSampler:

    def __init__(self, config, rng):

        self._config = config
        self._rng = rng

    def _state(self):

        c = self._config

        return c._states[self._rng.choice(len(c._states), p=c._state_p)]

    def _relation(self, allow_alternation=True):

        c = self._config
        p = c._relation_p.copy()

        if not allow_alternation:
            p = np.array([0.0 if r == RelationType.ALTERNATION else w
                          for r, w in zip(c._relations, p)])
            if p.sum() == 0:
                return None
            p = p / p.sum()

        return c._relations[self._rng.choice(len(c._relations), p=p)]

    def links(self, n):

        links = [DiscourseLink(i, i + 1, self._relation())
                 for i in range(n - 1)]

        if n > 2 and self._rng.random() < self._config.extra_link_prob:
            head = int(self._rng.integers(0, n - 2))
            dep = int(self._rng.integers(head + 2, n))
            relation = self._relation(allow_alternation=False)
            if relation is not None:
                links.append(DiscourseLink(head, dep, relation))

        return links

    def states(self, n, links, target):

        rng = self._rng
        states = [self._state() for _ in range(n)]
        groups = alternation_groups(n, links)

        E = EntailmentState.ENTAILMENT
        C = EntailmentState.CONTRADICTION
        U = EntailmentState.UNMENTIONED

        if target == Decision.YES:
            for group in groups:
                if all(states[i] != E for i in group):
                    states[group[rng.integers(len(group))]] = E

        elif target == Decision.NO:
            for i in groups[rng.integers(len(groups))]:
                states[i] = C

        elif target == Decision.INQUIRE:
            for group in groups:
                if all(states[i] == C for i in group):
                    states[group[rng.integers(len(group))]] = U
            satisfied = [g for g in groups if any(states[i] == E for i in g)]
            if len(satisfied) == len(groups):
                for i in satisfied[rng.integers(len(satisfied))]:
                    if states[i] == E:
                        states[i] = U

        return states


def _followup(edu):

    return ['do', 'you'] + edu[2:] + ['?']


def _fact(concept, state):

    if state == EntailmentState.ENTAILMENT:
        return ['i', 'am', concept, '.']

    return ['i', 'am', 'not', concept, '.']


def generate_synthetic(config, seed):
    """Generates synthetic conversational machine reading examples

    Each rule document is a chain of conditions ``for <topic> you <verb>
    <concept>`` linked by discourse relations. Entailment states come from
    scenario facts (``i am <concept> .`` or ``i am not <concept> .``) and
    answered follow-up questions, and the gold decision follows from them by
    :func:`decide`. Irrelevant questions ask about another topic with an
    unrelated question template. The gold span of an Inquire example
    is labeled by edit distance against the follow-up question for its
    first unresolved EDU.

    Parameters
    ----------
    config : GeneratorConfig
    seed : int

    Returns
    -------
    list of Example

    """

    rng = np.random.default_rng(seed)
    sampler = _DocumentSampler(config, rng)

    examples = []

    for n_ex in range(config.n_examples):

        low, high = config.edu_range
        n = int(rng.integers(low, high + 1))

        topic = int(rng.integers(config.n_topics))
        concepts = rng.choice(config.n_concepts, size=n, replace=False)
        concepts = ['c{}'.format(k) for k in concepts]

        edus = [['for', 'topic{}'.format(topic), 'you',
                 _VERBS[rng.integers(len(_VERBS))], c] for c in concepts]

        links = sampler.links(n)

        if config.priors() is not None:
            target = config._decisions[
                rng.choice(len(config._decisions), p=config._decision_p)]
        else:
            target = None

        states = sampler.states(n, links, target)

        if target is None:
            relevant = rng.random() >= config.irrelevant_rate
        else:
            relevant = target != Decision.IRRELEVANT

        decision = decide(states, links, relevant)

        if target is not None and decision != target:
            raise RuntimeError(
                "Generated decision {} does not match target {}".format(
                    decision, target))

        if relevant:
            question = ['can', 'i', 'get', 'topic{}'.format(topic), '?']
        else:
            question_topic = int(rng.integers(config.n_topics - 1))
            if question_topic >= topic:
                question_topic += 1
            template = _UNRELATED_QUESTIONS[
                rng.integers(len(_UNRELATED_QUESTIONS))]
            question = ['topic{}'.format(question_topic) if t == 'TOPIC'
                        else t for t in template]

        facts = []
        history = []

        for edu, concept, state in zip(edus, concepts, states):
            if state == EntailmentState.UNMENTIONED:
                continue
            if relevant and rng.random() < config.history_prob:
                answer = 'yes' if state == EntailmentState.ENTAILMENT \
                    else 'no'
                history.append((_followup(edu), answer))
            else:
                facts.append(_fact(concept, state))

        if rng.random() < config.distractor_prob:
            unused = [k for k in range(config.n_concepts)
                      if 'c{}'.format(k) not in concepts]
            if unused:
                concept = 'c{}'.format(unused[rng.integers(len(unused))])
                polarity = EntailmentState.ENTAILMENT \
                    if rng.random() < 0.5 else EntailmentState.CONTRADICTION
                facts.append(_fact(concept, polarity))

        order = rng.permutation(len(facts))
        scenario = [token for i in order for token in facts[i]]

        order = rng.permutation(len(history))
        history = [history[i] for i in order]

        span = None
        if decision == Decision.INQUIRE:
            k = first_unresolved_edu(states, links)
            span = gold_span_label(edus, _followup(edus[k]))
            if span.edu_index != k:
                raise RuntimeError(
                    "Gold span labeled EDU {} instead of {}".format(
                        span.edu_index, k))
            span = (span.edu_index, span.start, span.end)

        examples.append(Example(
            example_id='syn-{}-{}'.format(seed, n_ex),
            tree_id='tree-{}-{}'.format(seed, n_ex),
            rule_edus=edus,
            relation_links=links,
            question=question,
            scenario=scenario,
            history=history,
            gold_entailment=states,
            gold_decision=decision,
            gold_span=span))

    logger.info("Generated {} synthetic examples with seed {}".format(
        len(examples), seed))

    return examples


def save_dataset(examples, path):
    """Writes examples to a JSON Lines file

    Parameters
    ----------
    examples : iterable of Example
    path : str

    """

    with open(path, 'w', encoding='utf-8') as f:
        for example in examples:
            f.write(json.dumps(example.to_record(), sort_keys=True))
            f.write('\n')

    logger.info("Wrote dataset to {}".format(path))


def load_dataset(path):
    """Reads examples from a JSON Lines file

    Records without ``gold_entailment`` are accepted with empty labels.

    Parameters
    ----------
    path : str

    Returns
    -------
    list of Example

    Raises
    ------
    FileNotFoundError
    ValueError
        If a record is malformed or violates an invariant; the message names
        the line number

    """

    if not os.path.exists(path):
        raise FileNotFoundError(path)

    examples = []

    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):

            if not line.strip():
                continue

            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError("{}:{}: malformed record: {}".format(
                    path, line_no, e))

            if not isinstance(record, dict):
                raise ValueError("{}:{}: record must be an object".format(
                    path, line_no))

            try:
                example = Example.from_record(record)
            except (KeyError, TypeError, AttributeError) as e:
                raise ValueError("{}:{}: malformed record: {!r}".format(
                    path, line_no, e))
            except ValueError as e:
                raise ValueError("{}:{}: invalid example: {}".format(
                    path, line_no, e))

            examples.append(example)

    logger.info("Read {} examples from {}".format(len(examples), path))

    return examples


def scenario_subset(dataset):
    """Examples with a non-empty scenario and no dialog history"""

    return [ex for ex in dataset if ex.scenario and not ex.history]


class Vocabulary:
    """Closed token vocabulary with reserved marker ids

    Parameters
    ----------
    tokens : iterable of str
        Non-reserved tokens, in id order

    """

    def __init__(self, tokens=()):

        self._id_to_token = list(MARKERS)
        self._token_to_id = {t: i for i, t in enumerate(MARKERS)}

        for token in tokens:
            if token in self._token_to_id:
                continue
            self._token_to_id[token] = len(self._id_to_token)
            self._id_to_token.append(token)

        self.logger = logger.getChild(self.__class__.__name__)

    @classmethod
    def build(cls, examples):
        """Builds a vocabulary of every token of `examples`, sorted"""

        tokens = set()

        for ex in examples:
            for edu in ex.rule_edus:
                tokens.update(edu)
            tokens.update(ex.question)
            tokens.update(ex.scenario)
            for q, a in ex.history:
                tokens.update(q)
                tokens.add(a)

        tokens.update(ANSWERS)

        return cls(sorted(tokens - set(MARKERS)))

    def __len__(self):

        return len(self._id_to_token)

    def __contains__(self, token):

        return token in self._token_to_id

    def __eq__(self, other):

        if not isinstance(other, Vocabulary):
            return NotImplemented

        return self._id_to_token == other._id_to_token

    def id(self, token):

        return self._token_to_id.get(token, self._token_to_id[UNK])

    def token(self, index):

        return self._id_to_token[index]

    def tokens(self):

        return list(self._id_to_token)

    def encode(self, tokens):

        ids = [self.id(t) for t in tokens]

        unknown = sum(1 for t in tokens if t not in self._token_to_id)
        if unknown:
            self.logger.warning(
                "{} tokens mapped to {}".format(unknown, UNK))

        return ids


class TokenizedInput:
    """An example laid out as one token sequence

    Parameters
    ----------
    token_ids : numpy.ndarray
    edu_index_of_token : numpy.ndarray
        EDU index of every token, -1 outside the rule document
    rule_marker_positions : list of int
    question : tuple of int
        ``(start, end)`` of the question tokens, end exclusive
    scenario : tuple of int
    history : list of tuple of int
        Span of each history turn
    edu_lengths : list of int
        Number of content tokens of each EDU after truncation
    scenario_sentences : list of tuple of int, optional
        Span of each scenario sentence. Defaults to the whole scenario, or
        no sentence when the scenario is empty.

    """

    def __init__(self, token_ids, edu_index_of_token, rule_marker_positions,
                 question, scenario, history, edu_lengths,
                 scenario_sentences=None):

        self.token_ids = np.asarray(token_ids, dtype=int)
        self.edu_index_of_token = np.asarray(edu_index_of_token, dtype=int)
        self.rule_marker_positions = list(rule_marker_positions)
        self.question = question
        self.scenario = scenario
        self.history = list(history)
        self.edu_lengths = list(edu_lengths)

        if scenario_sentences is None:
            scenario_sentences = [scenario] if scenario[1] > scenario[0] \
                else []
        self.scenario_sentences = list(scenario_sentences)

        if len(self.rule_marker_positions) != len(self.edu_lengths):
            raise ValueError("One [RULE] marker is required per EDU")

    def __len__(self):

        return len(self.token_ids)

    @property
    def rule_start(self):

        return self.rule_marker_positions[0]

    @property
    def edu_count(self):

        return len(self.rule_marker_positions)

    def rule_ids(self):

        return self.token_ids[self.rule_start:]

    def rule_edu_index(self):
        """EDU index of every token of the rule region"""

        return self.edu_index_of_token[self.rule_start:]

    def edu_token_positions(self, k):
        """Positions of the content tokens of EDU `k`"""

        start = self.rule_marker_positions[k] + 1

        return list(range(start, start + self.edu_lengths[k]))


def layout_sequence(example, vocab, max_length=256):
    """Lays out an example as one token sequence

    The layout is ``[CLS] question [SEP] scenario [SEP] (turn [SEP])*
    [RULE] edu_1 [RULE] edu_2 ...`` where each history turn is its follow-up
    question followed by the answer. Sequences longer than `max_length` are
    truncated: oldest history turns first, then scenario, question and the
    longest EDUs. ``[RULE]`` markers are never dropped. The scenario is split
    into sentences after tokens ending with ``.``, ``!`` or ``?``.

    Parameters
    ----------
    example : Example
    vocab : Vocabulary
    max_length : int, optional

    Returns
    -------
    TokenizedInput

    Raises
    ------
    ValueError
        If the markers alone exceed `max_length`

    """

    question = list(example.question)
    scenario = list(example.scenario)
    history = [q + [a] for q, a in example.history]
    edus = [list(edu) for edu in example.rule_edus]

    def length():
        return 3 + len(question) + len(scenario) + \
            sum(len(h) + 1 for h in history) + \
            sum(len(e) + 1 for e in edus)

    minimum = 3 + len(edus)
    if minimum > max_length:
        raise ValueError(
            "max_length {} cannot hold {} rule markers".format(
                max_length, len(edus)))

    if length() > max_length:
        logger.warning("Truncating example {} from {} to {} tokens".format(
            example.example_id, length(), max_length))

    while length() > max_length and history:
        history.pop(0)

    for segment in (scenario, question):
        excess = length() - max_length
        if excess > 0:
            del segment[max(len(segment) - excess, 0):]

    while length() > max_length:
        longest = max(range(len(edus)), key=lambda k: len(edus[k]))
        edus[longest].pop()

    tokens = [CLS]
    index = []

    q_start = len(tokens)
    tokens += question
    q_span = (q_start, len(tokens))
    tokens.append(SEP)

    s_start = len(tokens)
    tokens += scenario
    s_span = (s_start, len(tokens))
    tokens.append(SEP)

    sentences = []
    begin = s_start
    for i in range(s_start, s_span[1]):
        if tokens[i].endswith(SENTENCE_MARKS) or i == s_span[1] - 1:
            sentences.append((begin, i + 1))
            begin = i + 1

    h_spans = []
    for turn in history:
        start = len(tokens)
        tokens += turn
        h_spans.append((start, len(tokens)))
        tokens.append(SEP)

    index = [-1] * len(tokens)

    markers = []
    for k, edu in enumerate(edus):
        markers.append(len(tokens))
        tokens.append(RULE)
        tokens += edu
        index += [k] * (len(edu) + 1)

    ids = [vocab.id(RULE) if t == RULE else
           vocab.id(SEP) if t == SEP else
           vocab.id(CLS) if t == CLS else None
           for t in tokens]
    content = [i for i, v in enumerate(ids) if v is None]
    for i, v in zip(content, vocab.encode([tokens[i] for i in content])):
        ids[i] = v

    return TokenizedInput(ids, index, markers, q_span, s_span, h_spans,
                          [len(e) for e in edus], sentences)
