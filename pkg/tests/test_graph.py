import unittest
from unittest import TestCase

import numpy as np
import numpy.testing as npt

from dgm.corpus import Example
from dgm.graph import (DiscourseLink, EdgeType, RelationType, VertexKind,
                       build_levi_graph, deserialize_graph,
                       relation_histogram, relation_table, serialize_graph)


def _random_links(rng, edu_count, n_links):

    links = []

    while len(links) < n_links and edu_count > 1:
        head, dep = rng.choice(edu_count, size=2, replace=False)
        relation = list(RelationType)[rng.integers(len(RelationType))]
        links.append(DiscourseLink(head, dep, relation))

    return links


def _example(links, edu_count=3):

    return Example('ex', 'tree', [['a']] * edu_count, links, ['q'], [], [])


class TestRelationType(TestCase):

    def test_closed_set(self):

        self.assertEqual(len(RelationType), 16)
        self.assertEqual(len(EdgeType), 6)

    def test_from_name(self):

        self.assertEqual(RelationType.from_name('Question-answer_pair'),
                         RelationType.QUESTION_ANSWER)
        self.assertEqual(RelationType.from_name('Clarification_question'),
                         RelationType.CLARIFICATION_QUESTION)

        with self.assertRaises(ValueError):
            RelationType.from_name('because')


class TestDiscourseLink(TestCase):

    def test_self_link(self):

        with self.assertRaises(ValueError):
            DiscourseLink(1, 1, 'continuation').validate(3)

    def test_out_of_range(self):

        with self.assertRaises(ValueError):
            build_levi_graph(2, [DiscourseLink(0, 2, 'contrast')])


class TestBuildLeviGraph(TestCase):

    def test_two_edus_one_link(self):

        graph = build_levi_graph(
            2, [DiscourseLink(0, 1, RelationType.CONTINUATION)])

        self.assertEqual(graph.num_vertices, 4)
        self.assertEqual(graph.num_edges, 14)

        edges = set(graph.edges())
        self.assertIn((0, 2, EdgeType.DEFAULT_IN), edges)
        self.assertIn((2, 1, EdgeType.DEFAULT_OUT), edges)
        self.assertIn((1, 2, EdgeType.REVERSE_IN), edges)
        self.assertIn((2, 0, EdgeType.REVERSE_OUT), edges)

        self.assertEqual(graph.kind(2), VertexKind.RELATION)
        self.assertEqual(graph.payload(2), RelationType.CONTINUATION)
        self.assertEqual(graph.global_vertex, 3)

    def test_single_edu(self):

        graph = build_levi_graph(1, [])

        self.assertEqual(graph.num_vertices, 2)
        self.assertEqual(graph.num_edges, 4)
        self.assertEqual(graph.edge_type_counts()[EdgeType.SELF], 2)
        self.assertEqual(graph.edge_type_counts()[EdgeType.GLOBAL], 2)

    def test_sample_dialog_topology(self):

        # three rule EDUs: an elaboration and an alternation on the second
        links = [DiscourseLink(0, 1, 'elaboration'),
                 DiscourseLink(1, 2, 'alternation')]
        graph = build_levi_graph(3, links)

        self.assertEqual(graph.relation_vertices(), [3, 4])
        self.assertEqual(graph.in_neighbors(3, EdgeType.DEFAULT_IN), [0])
        self.assertEqual(graph.in_neighbors(1, EdgeType.DEFAULT_OUT), [3])
        self.assertEqual(graph.in_neighbors(4, EdgeType.DEFAULT_IN), [1])
        self.assertEqual(graph.in_neighbors(2, EdgeType.DEFAULT_OUT), [4])

        # EDUs are only connected through relation or global vertices
        for u, v, t in graph.edges():
            if t not in (EdgeType.SELF, EdgeType.GLOBAL):
                kinds = {graph.kind(u), graph.kind(v)}
                self.assertEqual(kinds, {VertexKind.EDU, VertexKind.RELATION})

        self.assertEqual(graph.links(), links)

    def test_counting_formula(self):

        rng = np.random.default_rng(0)

        for _ in range(1000):
            n = int(rng.integers(1, 9))
            n_links = int(rng.integers(0, 11)) if n > 1 else 0
            links = _random_links(rng, n, n_links)

            graph = build_levi_graph(n, links)
            v = n + len(links) + 1

            self.assertEqual(graph.num_vertices, v)
            self.assertEqual(graph.num_edges,
                             4 * len(links) + v + 2 * (v - 1))

            counts = graph.edge_type_counts()
            for edge_type in (EdgeType.DEFAULT_IN, EdgeType.DEFAULT_OUT,
                              EdgeType.REVERSE_IN, EdgeType.REVERSE_OUT):
                self.assertEqual(counts[edge_type], len(links))
            self.assertEqual(counts[EdgeType.SELF], v)
            self.assertEqual(counts[EdgeType.GLOBAL], 2 * (v - 1))

    def test_pure_construction(self):

        links = [DiscourseLink(0, 1, 'contrast'),
                 DiscourseLink(2, 0, 'result')]

        self.assertEqual(build_levi_graph(3, links),
                         build_levi_graph(3, links))

    def test_adjacency_rows(self):

        graph = build_levi_graph(
            3, [DiscourseLink(0, 1, 'contrast'),
                DiscourseLink(2, 1, 'comment')])

        a = graph.adjacency(EdgeType.DEFAULT_OUT)
        npt.assert_allclose(a[1], [0, 0, 0, 1, 0, 0])
        npt.assert_allclose(a[0], np.zeros(6))

        a = graph.adjacency(EdgeType.GLOBAL)
        npt.assert_allclose(a[5], [0.2] * 5 + [0])
        npt.assert_allclose(a.sum(axis=1), np.ones(6))


class TestSerializeGraph(TestCase):

    def test_round_trip(self):

        rng = np.random.default_rng(1)

        for _ in range(1000):
            n = int(rng.integers(1, 6))
            links = _random_links(rng, n, int(rng.integers(0, 5)))
            graph = build_levi_graph(n, links)

            self.assertEqual(deserialize_graph(serialize_graph(graph)), graph)

    def test_canonical_text(self):

        links = [DiscourseLink(1, 0, 'conditional')]

        self.assertEqual(serialize_graph(build_levi_graph(2, links)),
                         serialize_graph(build_levi_graph(2, links)))

    def test_malformed(self):

        for text in ('edges: []', '- 1\n- 2', 'vertices: [\n',
                     'vertices: [{id: 0}]\nedges: []'):
            with self.assertRaises(ValueError):
                deserialize_graph(text)

    def test_unknown_vertex(self):

        text = serialize_graph(build_levi_graph(1, []))
        text = text.replace('dst: 1', 'dst: 7', 1)

        with self.assertRaises(ValueError):
            deserialize_graph(text)


class TestRelationHistogram(TestCase):

    def test_empty(self):

        counts = relation_histogram([])

        self.assertEqual(len(counts), 16)
        self.assertEqual(counts.sum(), 0)

    def test_counts(self):

        example = _example([DiscourseLink(0, 1, 'continuation'),
                            DiscourseLink(1, 2, 'contrast'),
                            DiscourseLink(0, 2, 'contrast')])
        counts = relation_histogram([example])

        self.assertEqual(counts['continuation'], 1)
        self.assertEqual(counts['contrast'], 2)
        self.assertEqual(counts['correction'], 0)

    def test_table(self):

        train = [_example([DiscourseLink(0, 1, 'correction')])]
        dev = [_example([])]

        table = relation_table({'train': train, 'dev': dev})

        self.assertEqual(list(table.columns), ['train', 'dev'])
        self.assertEqual(table.loc['correction', 'train'], 1)
        self.assertEqual(table.loc['result', 'dev'], 0)


if __name__ == '__main__':
    unittest.main()
