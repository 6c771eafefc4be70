import shutil
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings

from quantum_walks.documents import dump_walk, load_walk, parse_matrix, walk_from_document, walk_to_document
from quantum_walks.exceptions import DocumentError
from quantum_walks.oracle_service import WalkSimulator, BasisEdge
from quantum_walks.reports import read_scatter_csv, scatter_table, simulation_table, write_csv
from quantum_walks.scattering_service import ScatteringService
from quantum_walks.structure_service import walks_equivalent

from .factories import random_walk, sample_walk, seeds


class ParseMatrixTests(SimpleTestCase):

    def test_pairs_and_plain_numbers(self):
        np.testing.assert_array_equal(parse_matrix([[[0, 1], 2], [-1, [0.5, -0.5]]]), [[1j, 2], [-1, 0.5 - 0.5j]])

    def test_empty(self):
        self.assertEqual(parse_matrix([]).shape, (0, 0))

    def test_malformed(self):
        for rows in ([[1, 2], [3]], [[[1, 2, 3]]], [['x']], 'matrix', [[True]]):
            with self.assertRaises(DocumentError):
                parse_matrix(rows)

    def test_missing_locals(self):
        document = walk_to_document(sample_walk('line'))
        del document['locals']
        with self.assertRaises(DocumentError):
            walk_from_document(document)
        document['locals'] = [{'vertex': 'a'}]
        with self.assertRaises(DocumentError):
            walk_from_document(document)


class DumpLoadTests(SimpleTestCase):

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp(prefix='qwalk-'))
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_dump_then_load(self, seed):
        walk = random_walk(seed)
        restored = load_walk(dump_walk(walk, self.tmp / 'nested' / 'walk.json'))
        self.assertTrue(walks_equivalent(restored, walk, atol=0.0))

    def test_scatter_csv_roundtrip_is_exact(self):
        walk = sample_walk('hadamard')
        evaluate = lambda z: z * walk.locals[0].matrix
        path = write_csv(scatter_table(evaluate, ['X1', 'X2'], ['Y1', 'Y2'], 4), self.tmp / 's.csv')
        table = read_scatter_csv(path)
        self.assertEqual(table['in_tail'].tolist()[:2], ['X1', 'X1'])
        self.assertEqual(table['out_tail'].tolist()[:2], ['Y1', 'Y2'])
        np.testing.assert_array_equal(table['theta'].unique(), 2 * np.pi * np.arange(4) / 4)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_scatter_csv_reads_back_engine_values(self, seed):
        walk = random_walk(seed)
        service = ScatteringService.for_walk(walk)
        ins = [t.id for t in walk.graph.incoming_tails]
        outs = [t.id for t in walk.graph.outgoing_tails]
        table = scatter_table(lambda z: service.scattering_matrix(z).matrix, ins, outs, 64)
        restored = read_scatter_csv(write_csv(table, self.tmp / f'{seed}.csv'))
        for column in ('theta', 're', 'im', 'abs2'):
            np.testing.assert_array_equal(restored[column].to_numpy(), table[column].to_numpy())

    def test_simulation_table_keeps_only_nonzero(self):
        simulator = WalkSimulator(sample_walk('hadamard'), 2)
        table = simulation_table(simulator, simulator.run(BasisEdge('X1'), 2))
        self.assertEqual(table['edge'].tolist(), ['X1[0]', 'Y1[0]', 'Y2[0]', 'Y1[1]', 'Y2[1]'])
        self.assertEqual(table['step'].tolist(), [0, 1, 1, 2, 2])
