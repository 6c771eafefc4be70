import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings

from quantum_walks.exceptions import (
    BadTailIndex,
    CutResonance,
    HandleResonance,
    MultiHandleResonance,
    NotAnInteriorEdge,
    NotTwoTailGraphs,
)
from quantum_walks.oracle_service import arrival_table
from quantum_walks.scattering_service import sample_on_circle, transmission_series
from quantum_walks.structure_service import relabel_walk, walks_equivalent
from quantum_walks.surgery_service import (
    AmplitudeFunction,
    HandleSpec,
    add_handle_amplitudes,
    add_handle_graph,
    add_handles_graph,
    add_handles_multi,
    build_interferometer,
    compare_graphs,
    cut_edge_amplitudes,
    cut_edge_graph,
    interferometer_amplitudes,
    max_discrepancy,
    splice,
)

from .factories import random_walk, sample_walk, seeds

RADII = (0.5, 0.9, 1.0)


def circle_defect(amplitudes, n_angles=64):
    _, values = sample_on_circle(amplitudes, n_angles)
    eye = np.eye(amplitudes.size)
    return max(float(np.max(np.abs(S.conj().T @ S - eye), initial=0.0)) for S in values)


class AddHandleTests(SimpleTestCase):

    def test_hadamard_loop_structure(self):
        walk = add_handle_graph(sample_walk('hadamard'), HandleSpec(0, 0))
        self.assertEqual(walk.K, 1)
        self.assertEqual(walk.graph.edge_ids, ('Y1-X1',))
        self.assertTrue(walk.graph.edge('Y1-X1').is_loop)
        local = walk.local('v')
        self.assertEqual(local.in_order, ('Y1-X1', 'X2'))
        self.assertEqual(local.out_order, ('Y1-X1', 'Y2'))

    def test_closing_single_tail(self):
        for name in ('line', 'passthrough'):
            walk = add_handle_graph(sample_walk(name), HandleSpec(0, 0))
            self.assertEqual(walk.K, 0)
        self.assertTrue(add_handle_graph(sample_walk('passthrough'), HandleSpec(0, 0)).graph.interior_edges[0].is_loop)

    def test_bad_index(self):
        with self.assertRaises(BadTailIndex):
            add_handle_graph(sample_walk('hadamard'), HandleSpec(2, 0))

    def test_looped_hadamard_closed_form(self):
        tau = add_handle_amplitudes(AmplitudeFunction.from_walk(sample_walk('hadamard')), HandleSpec(0, 0))
        self.assertEqual(tau.provenance, 'composed')
        for z in np.exp(2j * np.pi * np.arange(16) / 16):
            expected = -z / np.sqrt(2) + (z * z / 2) / (1 - z / np.sqrt(2))
            self.assertAlmostEqual(tau(z)[0, 0], expected, delta=1e-12)
            self.assertAlmostEqual(abs(tau(z)[0, 0]), 1.0, delta=1e-12)

    def test_composed_series_recovers_arrival_law(self):
        tau = add_handle_amplitudes(AmplitudeFunction.from_walk(sample_walk('hadamard')), HandleSpec(0, 0))
        q = tau.series(20).arrival_probabilities(0, 0)
        np.testing.assert_allclose(q[1:], 2.0 ** -np.arange(1, 21), atol=1e-9)

    def test_self_splice_resonance_is_shifted_away(self):
        tau = add_handle_amplitudes(AmplitudeFunction.from_walk(sample_walk('passthrough')), HandleSpec(0, 0))
        with self.assertRaises(HandleResonance):
            tau(1.0)
        thetas, values = sample_on_circle(tau, 8)
        self.assertAlmostEqual(thetas[0], np.pi / 8)
        self.assertEqual(values[0].shape, (0, 0))

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_composed_equals_direct(self, seed):
        walk = random_walk(seed, min_tails=2)
        spec = HandleSpec(walk.K - 1, 0)
        composed = add_handle_amplitudes(AmplitudeFunction.from_walk(walk), spec)
        direct = AmplitudeFunction.from_walk(add_handle_graph(walk, spec))
        for radius in RADII:
            self.assertLess(max_discrepancy(composed, direct, 64, radius), 1e-9)
        self.assertLess(circle_defect(composed), 1e-8)


class MultiHandleTests(SimpleTestCase):

    def test_single_pair_reduces_to_one_handle(self):
        S = AmplitudeFunction.from_walk(random_walk(21, min_tails=3))
        self.assertLess(max_discrepancy(add_handles_multi(S, [(1, 2)]), add_handle_amplitudes(S, HandleSpec(1, 2))), 1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_two_handles_in_either_order(self, seed):
        walk = random_walk(seed, min_tails=4, max_tails=4)
        S = AmplitudeFunction.from_walk(walk)
        simultaneous = add_handles_multi(S, [(0, 1), (2, 3)])
        first_then_second = add_handle_amplitudes(add_handle_amplitudes(S, HandleSpec(0, 1)), HandleSpec(1, 2))
        second_then_first = add_handle_amplitudes(add_handle_amplitudes(S, HandleSpec(2, 3)), HandleSpec(0, 1))
        direct = AmplitudeFunction.from_walk(add_handles_graph(walk, [(0, 1), (2, 3)]))
        self.assertLess(max_discrepancy(simultaneous, first_then_second), 1e-9)
        self.assertLess(max_discrepancy(simultaneous, second_then_first), 1e-9)
        self.assertLess(max_discrepancy(simultaneous, direct), 1e-9)

    def test_repeated_tail(self):
        S = AmplitudeFunction.from_walk(sample_walk('hadamard'))
        with self.assertRaises(BadTailIndex):
            add_handles_multi(S, [(0, 0), (0, 1)])

    def test_closed_loop_resonance(self):
        # ручка на passthrough замыкает петлю длины 1: det(I - S) = 1 - z обращается в ноль при z = 1
        looped = add_handles_multi(AmplitudeFunction.from_walk(sample_walk('passthrough')), [(0, 0)])
        self.assertEqual(looped(0.5).shape, (0, 0))
        with self.assertRaises(MultiHandleResonance) as ctx:
            looped(1.0)
        self.assertEqual(ctx.exception.z, 1.0)


class CutEdgeTests(SimpleTestCase):

    def test_cut_line_edge(self):
        walk = cut_edge_graph(sample_walk('line'), 'e')
        self.assertEqual(walk.K, 2)
        self.assertEqual([t.id for t in walk.graph.incoming_tails], ['e.in', 'X'])
        self.assertEqual([t.id for t in walk.graph.outgoing_tails], ['e.out', 'Y'])

        T = cut_edge_amplitudes(sample_walk('line'), 'e')
        z = 0.4 - 0.3j
        np.testing.assert_allclose(T(z), [[0, z], [z, 0]], atol=1e-15)

    def test_cut_loop_restores_hadamard(self):
        looped = add_handle_graph(sample_walk('hadamard'), HandleSpec(0, 0))
        restored = cut_edge_graph(looped, 'Y1-X1', in_tail_id='X1', out_tail_id='Y1')
        self.assertTrue(walks_equivalent(restored, sample_walk('hadamard')))

    def test_not_interior(self):
        with self.assertRaises(NotAnInteriorEdge):
            cut_edge_graph(sample_walk('line'), 'X')
        with self.assertRaises(NotAnInteriorEdge):
            cut_edge_amplitudes(sample_walk('line'), 'nope')

    def test_cut_resonance(self):
        T = cut_edge_amplitudes(sample_walk('bound_cycle'), 'c1')
        with self.assertRaises(CutResonance):
            T(1.0)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_cut_then_add_roundtrip(self, seed):
        walk = random_walk(seed, max_interior=12)
        if walk.graph.m == 0:
            return
        edge_id = walk.graph.edge_ids[0]
        cut = cut_edge_graph(walk, edge_id)
        self.assertTrue(walks_equivalent(add_handle_graph(cut, HandleSpec(0, 0, edge_id)), walk))

        T = cut_edge_amplitudes(walk, edge_id)
        direct_cut = AmplitudeFunction.from_walk(cut)
        original = AmplitudeFunction.from_walk(walk)
        for radius in RADII:
            self.assertLess(max_discrepancy(T, direct_cut, 64, radius), 1e-9)
            self.assertLess(max_discrepancy(add_handle_amplitudes(T, HandleSpec(0, 0)), original, 64, radius), 1e-9)
        self.assertLess(circle_defect(T), 1e-8)

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_add_then_cut_roundtrip(self, seed):
        walk = random_walk(seed)
        handled = add_handle_graph(walk, HandleSpec(0, 0))
        x, y = walk.graph.incoming_tails[0].id, walk.graph.outgoing_tails[0].id
        restored = cut_edge_graph(handled, f'{y}-{x}', in_tail_id=x, out_tail_id=y)
        self.assertTrue(walks_equivalent(restored, walk))


class SpliceTests(SimpleTestCase):

    def test_passthrough_chain(self):
        result = splice(sample_walk('passthrough'), sample_walk('passthrough'), 0, 0)
        self.assertEqual(result.walk.graph.edge_ids, ('1.Y-2.X',))
        c = transmission_series(result.walk, 6).coefficients[:, 0, 0]
        np.testing.assert_allclose(c, [0, 0, 1, 0, 0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(arrival_table(result.walk, 6)[:, 0, 0], c, atol=1e-12)
        z = 0.8j
        self.assertAlmostEqual(result.amplitudes(z)[0, 0], z * z, delta=1e-15)

    def test_line_into_hadamard(self):
        result = splice(sample_walk('line'), sample_walk('hadamard'), 0, 1)
        z = 0.5
        tau = result.amplitudes(z)
        self.assertEqual(tau.shape, (2, 2))
        # столбец 0: вход линии, через ребро склейки попадает во второй вход Адамара
        np.testing.assert_allclose(tau[:, 0], z ** 3 * np.array([1, -1]) / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(tau[:, 1], z * np.array([1, 1]) / np.sqrt(2), atol=1e-15)

    def test_bad_index(self):
        with self.assertRaises(BadTailIndex):
            splice(sample_walk('line'), sample_walk('line'), 1, 0)

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_composed_equals_direct(self, seed):
        walk1 = random_walk(seed, max_interior=8)
        walk2 = random_walk(seed + 1, max_interior=8)
        result = splice(walk1, walk2, walk1.K - 1, 0)
        direct = AmplitudeFunction.from_walk(result.walk)
        for radius in RADII:
            self.assertLess(max_discrepancy(result.amplitudes, direct, 64, radius), 1e-9)
        self.assertLess(circle_defect(result.amplitudes), 1e-8)


class InterferometerTests(SimpleTestCase):

    def test_identical_passthroughs(self):
        walk = build_interferometer(sample_walk('passthrough'), sample_walk('passthrough'))
        self.assertEqual([t.id for t in walk.graph.incoming_tails], ['X1A', 'X2A'])
        self.assertEqual([t.id for t in walk.graph.outgoing_tails], ['Y1B', 'Y2B'])
        c = transmission_series(walk, 6).coefficients
        np.testing.assert_allclose(c[:, 0, 0], [0, 0, 0, 1, 0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(c[:, 1, 0], 0, atol=1e-14)
        np.testing.assert_allclose(arrival_table(walk, 6)[:, 1, 0], 0, atol=1e-14)

    def test_phase_flip_deflects(self):
        walk = build_interferometer(sample_walk('passthrough'), sample_walk('phase_flip'))
        c = transmission_series(walk, 6).coefficients
        np.testing.assert_allclose(c[:, 1, 0], [0, 0, 0, 1, 0, 0, 0], atol=1e-12)

    def test_requires_single_tail_pairs(self):
        with self.assertRaises(NotTwoTailGraphs):
            build_interferometer(sample_walk('hadamard'), sample_walk('line'))

    def test_verdicts(self):
        same = compare_graphs(sample_walk('line'), sample_walk('line'), 256)
        self.assertTrue(same.indistinguishable)
        self.assertLess(same.max_dark, 1e-12)
        self.assertEqual(same.label, 'indistinguishable')

        flipped = compare_graphs(sample_walk('passthrough'), sample_walk('phase_flip'), 256)
        self.assertFalse(flipped.indistinguishable)
        self.assertAlmostEqual(flipped.max_dark, 1.0, delta=1e-9)
        self.assertEqual(flipped.label, 'distinguished')

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_relabeled_copy_is_indistinguishable(self, seed):
        walk = random_walk(seed, min_tails=1, max_tails=1, max_interior=8)
        verdict = compare_graphs(walk, relabel_walk(walk, 'copy.'), 256)
        self.assertTrue(verdict.indistinguishable)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_threaded_verdict_matches_serial(self, seed):
        walk1 = random_walk(seed, min_tails=1, max_tails=1, max_interior=8)
        walk2 = random_walk(seed + 1, min_tails=1, max_tails=1, max_interior=8)
        self.assertEqual(compare_graphs(walk1, walk2, 64, max_workers=4), compare_graphs(walk1, walk2, 64))
        S1, S2 = AmplitudeFunction.from_walk(walk1), AmplitudeFunction.from_walk(walk2)
        self.assertEqual(max_discrepancy(S1, S2, max_workers=4), max_discrepancy(S1, S2))

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_energy_split_and_formula(self, seed):
        walk1 = random_walk(seed, min_tails=1, max_tails=1, max_interior=8)
        walk2 = random_walk(seed + 1, min_tails=1, max_tails=1, max_interior=8)
        composed = interferometer_amplitudes(walk1, walk2)
        direct = AmplitudeFunction.from_walk(build_interferometer(walk1, walk2))
        self.assertLess(max_discrepancy(composed, direct), 1e-9)
        _, values = sample_on_circle(direct, 64)
        for S in values:
            self.assertAlmostEqual(abs(S[0, 0]) ** 2 + abs(S[1, 0]) ** 2, 1.0, delta=1e-9)


class AmplitudeFunctionTests(SimpleTestCase):

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_series_roundtrip_inside_disc(self, seed):
        walk = random_walk(seed)
        direct = AmplitudeFunction.from_walk(walk)
        partial_sum = AmplitudeFunction.from_series(transmission_series(walk, 200))
        self.assertLess(max_discrepancy(direct, partial_sum, 16, radius=0.5), 1e-10)

        recovered = direct.series(15).coefficients
        np.testing.assert_allclose(recovered, transmission_series(walk, 15).coefficients, atol=1e-9)
