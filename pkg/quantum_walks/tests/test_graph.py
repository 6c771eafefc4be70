from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from quantum_walks.exceptions import (
    DanglingEndpoint,
    DocumentError,
    DuplicateId,
    NotEulerian,
    TailCountMismatch,
)
from quantum_walks.graph_service import (
    Edge,
    EulerianGraphWithTails,
    MorphismKind,
    MorphismWitness,
    Tail,
    build_graph,
    check_morphism,
    disjoint_union,
    find_pairing,
    graph_to_document,
    is_simple_graph,
    reverse_graph,
)

from .factories import random_walk, seeds


def line_graph():
    return build_graph({
        'vertices': ['v1', 'v2'],
        'edges': [{'id': 'e', 'from': 'v1', 'to': 'v2'}],
        'tails_in': [{'id': 'X', 'vertex': 'v1'}],
        'tails_out': [{'id': 'Y', 'vertex': 'v2'}],
    })


def closed_graph(edges, vertices):
    return EulerianGraphWithTails(vertices, [Edge(*e) for e in edges])


class BuildGraphTests(SimpleTestCase):

    def test_line_graph_is_valid(self):
        g = line_graph()
        self.assertEqual(g.m, 1)
        self.assertEqual(g.K, 1)
        self.assertEqual(g.in_slots('v1'), ['X'])
        self.assertEqual(g.out_slots('v1'), ['e'])

    def test_loops_and_parallel_edges_are_allowed(self):
        g = closed_graph([('l', 'v', 'v'), ('a', 'v', 'w'), ('b', 'v', 'w'), ('c', 'w', 'v'), ('d', 'w', 'v')], ['v', 'w'])
        self.assertEqual(g.m, 5)
        self.assertTrue(g.edge('l').is_loop)

    def test_unbalanced_vertex_reports_imbalance(self):
        with self.assertRaises(NotEulerian) as ctx:
            build_graph({
                'vertices': ['v1', 'v2'],
                'edges': [{'id': 'e', 'from': 'v1', 'to': 'v2'}],
            })
        self.assertEqual(ctx.exception.imbalance, {'v1': (0, 1), 'v2': (1, 0)})

    def test_duplicate_edge_and_tail_ids(self):
        with self.assertRaises(DuplicateId):
            build_graph({
                'vertices': ['v'],
                'edges': [{'id': 'X', 'from': 'v', 'to': 'v'}],
                'tails_in': [{'id': 'X', 'vertex': 'v'}],
                'tails_out': [{'id': 'Y', 'vertex': 'v'}],
            })

    def test_dangling_endpoint(self):
        with self.assertRaises(DanglingEndpoint):
            build_graph({'vertices': ['v'], 'edges': [{'id': 'e', 'from': 'v', 'to': 'w'}]})

    def test_tail_count_mismatch(self):
        with self.assertRaises(TailCountMismatch):
            build_graph({
                'vertices': ['v'],
                'tails_in': [{'id': 'X1', 'vertex': 'v'}, {'id': 'X2', 'vertex': 'v'}],
                'tails_out': [{'id': 'Y', 'vertex': 'v'}],
            })

    def test_malformed_document(self):
        with self.assertRaises(DocumentError):
            build_graph({'vertices': ['v'], 'edges': [{'from': 'v', 'to': 'v'}]})

    def test_document_roundtrip(self):
        g = line_graph()
        self.assertEqual(build_graph(graph_to_document(g)), g)

    @settings(max_examples=25, deadline=None)
    @given(seeds, st.data())
    def test_tail_permutation_keeps_acceptance(self, seed, data):
        g = random_walk(seed).graph
        sigma = data.draw(st.permutations(range(g.K)))
        document = graph_to_document(g)
        document['tails_in'] = [document['tails_in'][i] for i in sigma]
        document['tails_out'] = [document['tails_out'][i] for i in sigma]
        permuted = build_graph(document)
        self.assertEqual(permuted.K, g.K)
        self.assertEqual([t.id for t in permuted.incoming_tails], [g.incoming_tails[i].id for i in sigma])
        self.assertEqual([t.id for t in permuted.outgoing_tails], [g.outgoing_tails[i].id for i in sigma])


class ReverseGraphTests(SimpleTestCase):

    def test_line_graph_reverses_orientation(self):
        r = reverse_graph(line_graph())
        self.assertEqual(r.edge('e'), Edge('e', 'v2', 'v1'))
        self.assertEqual(r.incoming_tails, (Tail('Y', 'v2'),))
        self.assertEqual(r.outgoing_tails, (Tail('X', 'v1'),))

    def test_loop_stays_loop(self):
        g = closed_graph([('l', 'v', 'v')], ['v'])
        self.assertEqual(reverse_graph(g).edge('l'), Edge('l', 'v', 'v'))

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_reverse_is_involution(self, seed):
        g = random_walk(seed).graph
        self.assertEqual(reverse_graph(reverse_graph(g)), g)


class PairingTests(SimpleTestCase):

    def assertIsPairing(self, g, pairing):
        self.assertEqual(set(pairing), set(g.edge_ids))
        for e, a in pairing.items():
            self.assertNotEqual(e, a)
            self.assertEqual(pairing[a], e)
            self.assertEqual(g.edge(a).target, g.edge(e).source)
            self.assertEqual(g.edge(a).source, g.edge(e).target)

    def test_divided_highway(self):
        g = closed_graph([('f', 'v1', 'v2'), ('b', 'v2', 'v1')], ['v1', 'v2'])
        pairing = find_pairing(g)
        self.assertEqual(pairing, {'f': 'b', 'b': 'f'})
        self.assertTrue(is_simple_graph(g))

    def test_single_edge_has_no_pairing(self):
        self.assertIsNone(find_pairing(line_graph()))

    def test_double_highway(self):
        g = closed_graph(
            [('a1', 'v1', 'v2'), ('a2', 'v1', 'v2'), ('b1', 'v2', 'v1'), ('b2', 'v2', 'v1')],
            ['v1', 'v2'],
        )
        self.assertIsPairing(g, find_pairing(g))
        self.assertFalse(is_simple_graph(g))

    def test_loops_pair_among_themselves(self):
        g = closed_graph([('l1', 'v', 'v'), ('l2', 'v', 'v')], ['v'])
        self.assertIsPairing(g, find_pairing(g))
        self.assertIsNone(find_pairing(closed_graph([('l1', 'v', 'v')], ['v'])))


class MorphismTests(SimpleTestCase):

    def test_identity_is_isomorphism(self):
        g = line_graph()
        self.assertIs(check_morphism(g, g, MorphismWitness.identity(g)), MorphismKind.ISOMORPHISM)

    def test_collapse_to_loop_is_morphism(self):
        g = closed_graph([('f', 'v1', 'v2'), ('b', 'v2', 'v1')], ['v1', 'v2'])
        g2 = closed_graph([('l', 'w', 'w')], ['w'])
        w = MorphismWitness({'v1': 'w', 'v2': 'w'}, {'f': 'l', 'b': 'l'})
        self.assertIs(check_morphism(g, g2, w), MorphismKind.MORPHISM)

    def test_endpoint_violation(self):
        g = closed_graph([('f', 'v1', 'v2'), ('b', 'v2', 'v1')], ['v1', 'v2'])
        w = MorphismWitness({'v1': 'v1', 'v2': 'v1'}, {'f': 'f', 'b': 'b'})
        self.assertIs(check_morphism(g, g, w), MorphismKind.NOT_A_MORPHISM)


class DisjointUnionTests(SimpleTestCase):

    def test_prefixes_and_tail_order(self):
        g = disjoint_union(line_graph(), line_graph())
        self.assertEqual(g.vertices, ('1.v1', '1.v2', '2.v1', '2.v2'))
        self.assertEqual([t.id for t in g.incoming_tails], ['1.X', '2.X'])
        self.assertEqual([t.id for t in g.outgoing_tails], ['1.Y', '2.Y'])
