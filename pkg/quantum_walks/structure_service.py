"""
Structure Service - квантовая структура на эйлеровом графе с хвостами

Каждой вершине v сопоставляется унитарный локальный оператор рассеяния
U_v: Ω_v -> T_v, заданный явной матрицей и явным порядком слотов
(строка = выходной слот, столбец = входной слот). Прямая сумма U_v даёт
глобальный шаг U; на хвостах U - чистый сдвиг (свободная структура), поэтому
хранится только конечный граничный блок

    W = [[A, B],
         [C, D]] : (внутренние ∪ привязки входов) -> (внутренние ∪ привязки выходов).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .conf import Tolerances, get_tolerances
from .exceptions import NotAnAutomorphism, NotUnitary, SlotMismatch
from .graph_service import (
    EulerianGraphWithTails,
    MorphismKind,
    MorphismWitness,
    check_morphism,
    disjoint_union,
    relabel_graph,
    reverse_graph,
)

logger = logging.getLogger(__name__)


# ============================================================================
# ТИПЫ
# ============================================================================

@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """Локальный оператор U_v с явным порядком входных и выходных слотов"""
    vertex: str
    in_order: Tuple[str, ...]
    out_order: Tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'in_order', tuple(self.in_order))
        object.__setattr__(self, 'out_order', tuple(self.out_order))
        matrix = np.array(self.matrix, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def dimension(self) -> int:
        return len(self.in_order)

    def unitarity_defect(self) -> float:
        d = self.matrix.shape[1]
        if d == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(d))))

    def entries(self) -> Dict[Tuple[str, str], complex]:
        """(выходной слот, входной слот) -> элемент матрицы"""
        return {
            (out_slot, in_slot): self.matrix[r, c]
            for r, out_slot in enumerate(self.out_order)
            for c, in_slot in enumerate(self.in_order)
        }

    def relabeled(self, mapping: Dict[str, str], vertex: Optional[str] = None) -> 'LocalUnitary':
        """Заменить слоты по словарю (остальные остаются как есть)"""
        return LocalUnitary(
            vertex=vertex if vertex is not None else self.vertex,
            in_order=[mapping.get(s, s) for s in self.in_order],
            out_order=[mapping.get(s, s) for s in self.out_order],
            matrix=self.matrix,
        )


@dataclass(frozen=True, eq=False)
class QuantumWalk:
    """Граф плюс по одному локальному оператору на вершину"""
    graph: EulerianGraphWithTails
    locals: Tuple[LocalUnitary, ...]

    def local(self, vertex: str) -> LocalUnitary:
        for item in self.locals:
            if item.vertex == vertex:
                return item
        raise KeyError(vertex)

    @property
    def K(self) -> int:
        return self.graph.K


@dataclass(frozen=True, eq=False)
class BoundaryBlock:
    """
    Граничный блок [[A, B], [C, D]].

    Столбец k матрицы [B; D] - образ ребра привязки |1,0>_k,
    строка j матрицы [C D] - амплитуда на ребре привязки |0,1>_j.
    Столбцы B - это векторы w_k = P_G U |1,0>_k, а A реализует U_G = P_G U.
    """
    interior: Tuple[str, ...]
    in_tails: Tuple[str, ...]
    out_tails: Tuple[str, ...]
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def m(self) -> int:
        return len(self.interior)

    @property
    def K(self) -> int:
        return len(self.in_tails)

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def unitarity_defect(self) -> float:
        W = self.full
        n = W.shape[0]
        if n == 0:
            return 0.0
        return float(np.max(np.abs(W.conj().T @ W - np.eye(n))))

    def without_edge(self, edge_id: str, in_tail: str, out_tail: str) -> 'BoundaryBlock':
        """
        Блок графа, в котором внутреннее ребро разрезано на пару хвостов
        (новые хвосты стоят первыми). Строится только из элементов исходного
        блока: столбец ребра становится новым входом, строка - новым выходом.
        """
        e = self.interior.index(edge_id)
        keep = [i for i in range(self.m) if i != e]
        A = self.A[np.ix_(keep, keep)]
        B = np.hstack([self.A[keep, e][:, None], self.B[keep, :]])
        C = np.vstack([self.A[e, keep][None, :], self.C[:, keep]])
        D = np.block([
            [np.array([[self.A[e, e]]]), self.B[e, :][None, :]],
            [self.C[:, e][:, None], self.D],
        ])
        return BoundaryBlock(
            interior=tuple(self.interior[i] for i in keep),
            in_tails=(in_tail, *self.in_tails),
            out_tails=(out_tail, *self.out_tails),
            A=A, B=B, C=C, D=D,
        )


# ============================================================================
# ОПЕРАЦИИ
# ============================================================================

def attach_structure(
    g: EulerianGraphWithTails,
    locals: Iterable[LocalUnitary],
    tolerances: Optional[Tolerances] = None,
) -> QuantumWalk:
    """
    Прикрепить локальные операторы к графу.

    Проверяет, что у каждой вершины ровно один оператор, его слоты
    покрывают инцидентные рёбра/хвосты ровно по одному разу, а матрица
    унитарна с точностью ε_unitary.
    """
    tol = tolerances or get_tolerances()
    by_vertex: Dict[str, LocalUnitary] = {}
    for item in locals:
        if item.vertex not in g.vertices:
            raise SlotMismatch(item.vertex, "оператор для необъявленной вершины")
        if item.vertex in by_vertex:
            raise SlotMismatch(item.vertex, "больше одного локального оператора")
        by_vertex[item.vertex] = item

    ordered = []
    for v in g.vertices:
        item = by_vertex.get(v)
        if item is None:
            raise SlotMismatch(v, "нет локального оператора")
        _check_slots(v, item.in_order, g.in_slots(v), "входные")
        _check_slots(v, item.out_order, g.out_slots(v), "выходные")
        d = len(item.in_order)
        if item.matrix.shape != (d, d):
            raise SlotMismatch(v, f"матрица {item.matrix.shape} при {d} слотах")
        defect = item.unitarity_defect()
        if not defect < tol.unitary:
            raise NotUnitary(v, defect)
        ordered.append(item)

    logger.debug("Структура прикреплена: %d вершин", len(ordered))
    return QuantumWalk(graph=g, locals=tuple(ordered))


def _check_slots(vertex: str, given: Sequence[str], expected: Sequence[str], kind: str) -> None:
    if len(set(given)) != len(given):
        raise SlotMismatch(vertex, f"{kind} слоты повторяются: {list(given)}")
    if set(given) != set(expected):
        missing = sorted(set(expected) - set(given))
        extra = sorted(set(given) - set(expected))
        raise SlotMismatch(vertex, f"{kind} слоты не совпадают (нет {missing}, лишние {extra})")


def assemble_boundary_block(walk: QuantumWalk) -> BoundaryBlock:
    """
    Собрать граничный блок: каждый элемент локальной матрицы попадает в A/B/C/D
    в зависимости от того, внутренние ли у него слоты или рёбра привязки хвостов.
    """
    g = walk.graph
    m, K = g.m, g.K
    rows = {eid: i for i, eid in enumerate(g.edge_ids)}
    cols = dict(rows)
    rows.update({t.id: m + j for j, t in enumerate(g.outgoing_tails)})
    cols.update({t.id: m + k for k, t in enumerate(g.incoming_tails)})

    W = np.zeros((m + K, m + K), dtype=complex)
    for item in walk.locals:
        r = [rows[s] for s in item.out_order]
        c = [cols[s] for s in item.in_order]
        W[np.ix_(r, c)] = item.matrix

    return BoundaryBlock(
        interior=g.edge_ids,
        in_tails=tuple(t.id for t in g.incoming_tails),
        out_tails=tuple(t.id for t in g.outgoing_tails),
        A=W[:m, :m], B=W[:m, m:], C=W[m:, :m], D=W[m:, m:],
    )


def reverse_structure(walk: QuantumWalk) -> QuantumWalk:
    """
    Обращённая структура (U_R)_v = R⁻¹U⁻¹R на обращённом графе.

    R сопряжённо-линейно, поэтому в базисе рёбер это просто транспонирование
    локальной матрицы с обменом входных и выходных слотов. Структура на
    обращённых хвостах снова свободна.
    """
    reversed_locals = [
        LocalUnitary(item.vertex, item.out_order, item.in_order, item.matrix.T)
        for item in walk.locals
    ]
    return QuantumWalk(graph=reverse_graph(walk.graph), locals=tuple(reversed_locals))


def tail_permutations(walk: QuantumWalk, witness: MorphismWitness) -> Tuple[List[int], List[int]]:
    """Индуцированные перестановки хвостов (π_ω на входах, π_τ на выходах)"""
    g = walk.graph
    pi_omega = [g.in_tail_index(witness.edge_map[t.id]) for t in g.incoming_tails]
    pi_tau = [g.out_tail_index(witness.edge_map[t.id]) for t in g.outgoing_tails]
    return pi_omega, pi_tau


def check_quantum_automorphism(
    walk: QuantumWalk,
    witness: MorphismWitness,
    tolerances: Optional[Tolerances] = None,
) -> bool:
    """Проверить F∘U = U∘F на полном базисе рёбер (включая привязки хвостов)"""
    tol = tolerances or get_tolerances()
    if check_morphism(walk.graph, walk.graph, witness) is not MorphismKind.ISOMORPHISM:
        raise NotAnAutomorphism("свидетель не является автоморфизмом графа")

    block = assemble_boundary_block(walk)
    F = witness.edge_map
    row_slots = [*block.interior, *block.out_tails]
    col_slots = [*block.interior, *block.in_tails]
    row_index = {s: i for i, s in enumerate(row_slots)}
    col_index = {s: i for i, s in enumerate(col_slots)}
    row_perm = [row_index[F[s]] for s in row_slots]
    col_perm = [col_index[F[s]] for s in col_slots]

    W = block.full
    return bool(np.allclose(W[np.ix_(row_perm, col_perm)], W, rtol=0.0, atol=tol.unitary))


def relabel_walk(walk: QuantumWalk, prefix: str) -> QuantumWalk:
    graph = relabel_graph(walk.graph, prefix)
    locals_ = [
        LocalUnitary(
            prefix + item.vertex,
            [prefix + s for s in item.in_order],
            [prefix + s for s in item.out_order],
            item.matrix,
        )
        for item in walk.locals
    ]
    return QuantumWalk(graph=graph, locals=tuple(locals_))


def union_walks(
    walk1: QuantumWalk,
    walk2: QuantumWalk,
    prefixes: Sequence[str] = ('1.', '2.'),
) -> QuantumWalk:
    """Дизъюнктное объединение блужданий; пустой префикс оставляет id как есть"""
    a = relabel_walk(walk1, prefixes[0]) if prefixes[0] else walk1
    b = relabel_walk(walk2, prefixes[1]) if prefixes[1] else walk2
    graph = disjoint_union(a.graph, b.graph, prefixes=('', ''))
    return QuantumWalk(graph=graph, locals=a.locals + b.locals)


def walks_equivalent(first: QuantumWalk, second: QuantumWalk, atol: float = 1e-12) -> bool:
    """
    Совпадение блужданий с точностью до порядка внутренних рёбер и порядка
    слотов в локальных операторах. Порядок хвостов должен совпадать.
    """
    g1, g2 = first.graph, second.graph
    if set(g1.vertices) != set(g2.vertices):
        return False
    if set(g1.interior_edges) != set(g2.interior_edges):
        return False
    if g1.incoming_tails != g2.incoming_tails or g1.outgoing_tails != g2.outgoing_tails:
        return False
    for v in g1.vertices:
        e1, e2 = first.local(v).entries(), second.local(v).entries()
        if set(e1) != set(e2):
            return False
        if any(abs(e1[key] - e2[key]) > atol for key in e1):
            return False
    return True
