"""Explicit discourse graph

Discourse links between rule EDUs are turned into a Levi graph: each
labeled link becomes a relation vertex, and a global vertex standing for the
user scenario is connected with every other vertex.

"""

from collections import namedtuple
from enum import Enum

import networkx as nx
import numpy as np
import pandas as pd
import yaml

import dgm


logger = dgm.logger.getChild(__name__)


class RelationType(Enum):
    """The 16 STAC discourse relations"""

    COMMENT = 'comment'
    CLARIFICATION_QUESTION = 'clarification-question'
    ELABORATION = 'elaboration'
    ACKNOWLEDGEMENT = 'acknowledgement'
    CONTINUATION = 'continuation'
    EXPLANATION = 'explanation'
    CONDITIONAL = 'conditional'
    QUESTION_ANSWER = 'question-answer'
    ALTERNATION = 'alternation'
    QUESTION_ELABORATION = 'question-elaboration'
    RESULT = 'result'
    BACKGROUND = 'background'
    NARRATION = 'narration'
    CORRECTION = 'correction'
    PARALLEL = 'parallel'
    CONTRAST = 'contrast'

    @classmethod
    def from_name(cls, name):
        """Parses a relation name

        Case, underscores and a trailing ``_pair`` (as in
        ``Question-answer_pair``) are tolerated.

        Parameters
        ----------
        name : str or RelationType

        Returns
        -------
        RelationType

        """

        if isinstance(name, cls):
            return name

        key = str(name).strip().lower().replace('_', '-')

        if key.endswith('-pair'):
            key = key[:-len('-pair')]

        try:
            return cls(key)
        except ValueError:
            raise ValueError("Unknown relation type: {}".format(name))

    @property
    def index(self):

        return _RELATION_INDEX[self]


_RELATION_INDEX = {r: i for i, r in enumerate(RelationType)}


class EdgeType(Enum):
    """Edge types of the Levi graph"""

    DEFAULT_IN = 'default-in'
    DEFAULT_OUT = 'default-out'
    REVERSE_IN = 'reverse-in'
    REVERSE_OUT = 'reverse-out'
    SELF = 'self'
    GLOBAL = 'global'

    @property
    def index(self):

        return _EDGE_INDEX[self]


_EDGE_INDEX = {e: i for i, e in enumerate(EdgeType)}


class VertexKind(Enum):

    EDU = 'edu'
    RELATION = 'relation'
    GLOBAL = 'global'


class DiscourseLink(namedtuple('DiscourseLink', ['head', 'dep', 'relation'])):
    """Typed dependency between two rule EDUs

    Parameters
    ----------
    head : int
        Index of the head EDU
    dep : int
        Index of the dependent EDU
    relation : RelationType or str

    """

    __slots__ = ()

    def __new__(cls, head, dep, relation):

        return super().__new__(cls, int(head), int(dep),
                               RelationType.from_name(relation))

    def validate(self, edu_count):
        """Checks the link against the number of EDUs

        Raises
        ------
        ValueError
            If the link is a self loop or an index is out of range

        """

        if self.head == self.dep:
            raise ValueError(
                "Link head and dep must differ: {}".format(self))

        for index in (self.head, self.dep):
            if index < 0 or index >= edu_count:
                raise ValueError(
                    "EDU index {} out of range for {} EDUs".format(
                        index, edu_count))

    def to_dict(self):

        return {'head': self.head, 'dep': self.dep,
                'relation': self.relation.value}


class LeviGraph:
    """Typed directed Levi graph over EDU, relation and global vertices

    Vertices are numbered canonically: EDUs by index, relation instances by
    link order, the global vertex last. Use :func:`build_levi_graph` or
    :func:`deserialize_graph` to create instances.

    Parameters
    ----------
    graph : networkx.MultiDiGraph
        Vertices carry ``kind`` and ``payload`` attributes, edges carry a
        ``type`` attribute

    """

    def __init__(self, graph):

        self._graph = graph

        self.logger = logger.getChild(self.__class__.__name__)

        self._validate()

    def _validate(self):

        n = self._graph.number_of_nodes()

        if sorted(self._graph.nodes) != list(range(n)):
            raise ValueError("Vertex ids must be 0..{}".format(n - 1))

        kinds = [self.kind(v) for v in range(n)]

        if kinds.count(VertexKind.GLOBAL) != 1:
            raise ValueError("A Levi graph has exactly one global vertex")

        if kinds[-1] != VertexKind.GLOBAL:
            raise ValueError("The global vertex must be the last vertex")

        n_edu = kinds.count(VertexKind.EDU)

        if kinds[:n_edu] != [VertexKind.EDU] * n_edu:
            raise ValueError("EDU vertices must precede relation vertices")

        if n_edu < 1:
            raise ValueError("A Levi graph has at least one EDU vertex")

        link_types = (EdgeType.DEFAULT_IN, EdgeType.DEFAULT_OUT,
                      EdgeType.REVERSE_IN, EdgeType.REVERSE_OUT)

        for v in self.relation_vertices():
            in_degree = sum(1 for _, _, t in self._graph.in_edges(v, 'type')
                            if t in link_types)
            out_degree = sum(1 for _, _, t in
                             self._graph.out_edges(v, 'type')
                             if t in link_types)
            if in_degree < 1 or out_degree < 1:
                raise ValueError(
                    "Relation vertex {} is not linked to EDUs".format(v))

    def __eq__(self, other):

        if not isinstance(other, LeviGraph):
            return NotImplemented

        return self.vertices() == other.vertices() and \
            self.edges() == other.edges()

    def __repr__(self):

        return 'LeviGraph(vertices={}, edges={})'.format(
            self.num_vertices, self.num_edges)

    @property
    def num_vertices(self):

        return self._graph.number_of_nodes()

    @property
    def num_edges(self):

        return self._graph.number_of_edges()

    @property
    def edu_count(self):

        return sum(1 for v in range(self.num_vertices)
                   if self.kind(v) == VertexKind.EDU)

    @property
    def global_vertex(self):

        return self.num_vertices - 1

    def kind(self, v):

        return self._graph.nodes[v]['kind']

    def payload(self, v):

        return self._graph.nodes[v]['payload']

    def edu_vertices(self):

        return list(range(self.edu_count))

    def relation_vertices(self):

        return [v for v in range(self.num_vertices)
                if self.kind(v) == VertexKind.RELATION]

    def vertices(self):
        """Returns the vertices in canonical order

        Returns
        -------
        list of tuple
            ``(id, kind, payload)``

        """

        return [(v, self.kind(v), self.payload(v))
                for v in range(self.num_vertices)]

    def edges(self):
        """Returns the edges sorted by source, destination and type

        Returns
        -------
        list of tuple
            ``(src, dst, EdgeType)``

        """

        edges = [(u, v, t) for u, v, t in self._graph.edges(data='type')]

        return sorted(edges, key=lambda e: (e[0], e[1], e[2].index))

    def links(self):
        """Recovers the discourse links in relation-vertex order"""

        links = []

        for v in self.relation_vertices():
            head = [u for u, _, t in self._graph.in_edges(v, 'type')
                    if t == EdgeType.DEFAULT_IN]
            dep = [w for _, w, t in self._graph.out_edges(v, 'type')
                   if t == EdgeType.DEFAULT_OUT]
            links.append(DiscourseLink(head[0], dep[0], self.payload(v)))

        return links

    def in_neighbors(self, v, edge_type):

        return sorted(u for u, _, t in self._graph.in_edges(v, 'type')
                      if t == edge_type)

    def edge_type_counts(self):
        """Number of edges of each type

        Returns
        -------
        dict
            EdgeType to count

        """

        counts = {t: 0 for t in EdgeType}

        for _, _, t in self._graph.edges(data='type'):
            counts[t] += 1

        return counts

    def adjacency(self, edge_type):
        """Row-normalized in-neighbor matrix of one edge type

        Entry ``[p, q]`` is ``1/c`` when `q` is one of the ``c``
        in-neighbors of `p` under `edge_type`, so a vertex with no such
        neighbors has an all-zero row.

        Parameters
        ----------
        edge_type : EdgeType

        Returns
        -------
        numpy.ndarray
            Array of shape (|V|, |V|)

        """

        n = self.num_vertices
        a = np.zeros((n, n))

        for u, v, t in self._graph.edges(data='type'):
            if t == edge_type:
                a[v, u] += 1

        counts = a.sum(axis=1, keepdims=True)

        return np.divide(a, counts, out=np.zeros_like(a), where=counts > 0)

    def to_networkx(self):

        return self._graph.copy()


def build_levi_graph(edu_count, links):
    """Builds the Levi graph of a rule document

    For each link ``(U1, R, U2)`` a relation vertex ``v_R`` is added with
    edges ``U1 -> v_R`` (default-in), ``v_R -> U2`` (default-out),
    ``U2 -> v_R`` (reverse-in) and ``v_R -> U1`` (reverse-out). Every vertex
    has a self edge and the global vertex is joined to every other vertex by
    a pair of global edges.

    Parameters
    ----------
    edu_count : int
        Number of rule EDUs
    links : sequence of DiscourseLink

    Returns
    -------
    LeviGraph

    Raises
    ------
    ValueError
        If `edu_count` is less than one or a link is invalid

    """

    if edu_count < 1:
        raise ValueError("edu_count must be at least one")

    links = [DiscourseLink(*link) for link in links]

    for link in links:
        link.validate(edu_count)

    g = nx.MultiDiGraph()

    for i in range(edu_count):
        g.add_node(i, kind=VertexKind.EDU, payload=i)

    for k, link in enumerate(links):
        v = edu_count + k
        g.add_node(v, kind=VertexKind.RELATION, payload=link.relation)
        g.add_edge(link.head, v, type=EdgeType.DEFAULT_IN)
        g.add_edge(v, link.dep, type=EdgeType.DEFAULT_OUT)
        g.add_edge(link.dep, v, type=EdgeType.REVERSE_IN)
        g.add_edge(v, link.head, type=EdgeType.REVERSE_OUT)

    global_vertex = edu_count + len(links)
    g.add_node(global_vertex, kind=VertexKind.GLOBAL, payload=None)

    for v in range(global_vertex + 1):
        g.add_edge(v, v, type=EdgeType.SELF)

    for v in range(global_vertex):
        g.add_edge(global_vertex, v, type=EdgeType.GLOBAL)
        g.add_edge(v, global_vertex, type=EdgeType.GLOBAL)

    logger.debug("Built Levi graph with {} vertices and {} edges".format(
        g.number_of_nodes(), g.number_of_edges()))

    return LeviGraph(g)


def _payload_to_text(kind, payload):

    if kind == VertexKind.RELATION:
        return payload.value

    return payload


def serialize_graph(graph):
    """Dumps a Levi graph to YAML text

    Vertices are written in canonical order and edges sorted by source,
    destination and edge type, so graphs built from identical inputs
    serialize to identical text.

    Parameters
    ----------
    graph : LeviGraph

    Returns
    -------
    str

    """

    document = {
        'vertices': [{'id': v, 'kind': kind.value,
                      'payload': _payload_to_text(kind, payload)}
                     for v, kind, payload in graph.vertices()],
        'edges': [{'src': u, 'dst': v, 'type': t.value}
                  for u, v, t in graph.edges()]}

    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None)


def deserialize_graph(text):
    """Reads a Levi graph written by :func:`serialize_graph`

    Parameters
    ----------
    text : str

    Returns
    -------
    LeviGraph

    Raises
    ------
    ValueError
        If the document is malformed

    """

    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ValueError("Malformed graph document: {}".format(e))

    if not isinstance(document, dict) or \
            not isinstance(document.get('vertices'), list) or \
            not isinstance(document.get('edges'), list):
        raise ValueError(
            "Graph document must contain 'vertices' and 'edges' lists")

    g = nx.MultiDiGraph()

    try:
        for vertex in document['vertices']:
            kind = VertexKind(vertex['kind'])
            payload = vertex['payload']
            if kind == VertexKind.RELATION:
                payload = RelationType.from_name(payload)
            elif kind == VertexKind.EDU:
                payload = int(payload)
            g.add_node(int(vertex['id']), kind=kind, payload=payload)

        for edge in document['edges']:
            src, dst = int(edge['src']), int(edge['dst'])
            if src not in g or dst not in g:
                raise ValueError(
                    "Edge {} -> {} refers to an unknown vertex".format(
                        src, dst))
            g.add_edge(src, dst, type=EdgeType(edge['type']))
    except (KeyError, TypeError) as e:
        raise ValueError("Malformed graph document: {}".format(e))

    return LeviGraph(g)


def relation_histogram(dataset):
    """Counts discourse links by relation type

    Parameters
    ----------
    dataset : iterable of Example

    Returns
    -------
    pandas.Series
        Counts indexed by relation name, including zero counts

    """

    counts = pd.Series(0, index=[r.value for r in RelationType],
                       dtype=np.int64, name='count')
    counts.index.name = 'relation'

    for example in dataset:
        for link in example.relation_links:
            counts[RelationType.from_name(link.relation).value] += 1

    return counts


def relation_table(splits):
    """Relation-type statistics of several dataset splits

    Parameters
    ----------
    splits : dict
        Split name to dataset

    Returns
    -------
    pandas.DataFrame
        One row per relation type and one column per split

    """

    columns = {name: relation_histogram(dataset)
               for name, dataset in splits.items()}

    table = pd.DataFrame(columns,
                         index=[r.value for r in RelationType])
    table.index.name = 'relation'

    return table
