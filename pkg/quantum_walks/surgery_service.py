"""
Surgery Service - хирургия графов и композиция амплитуд

Каждая операция существует в двух видах:
- на уровне графа (новый QuantumWalk, по которому движок считает S напрямую);
- на уровне амплитуд (AmplitudeFunction, собранная из амплитуд исходных
  графов без повторной сборки блока).
Совпадение двух путей - основная самопроверка пакета.

Ручка (Y_p -> X_q):  τ = S[j][k] + S[j][q] S[p][k] / (1 - S[p][q])
Несколько ручек:     τ = S[R_out, R_in] + S[R_out, Q] (I - M)⁻¹ S[P, R_in],  M = S[P, Q]
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .conf import Tolerances, get_series_radius, get_tolerances
from .exceptions import (
    BadTailIndex,
    CutResonance,
    HandleResonance,
    MultiHandleResonance,
    NotAnInteriorEdge,
    NotTwoTailGraphs,
)
from .graph_service import Edge, EulerianGraphWithTails, Tail
from .scattering_service import (
    ScatteringService,
    TransmissionSeries,
    sample_on_circle,
)
from .structure_service import (
    LocalUnitary,
    QuantumWalk,
    assemble_boundary_block,
    attach_structure,
    reverse_structure,
    union_walks,
)

logger = logging.getLogger(__name__)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


# ============================================================================
# АМПЛИТУДНЫЕ ФУНКЦИИ
# ============================================================================

@dataclass(frozen=True, eq=False)
class AmplitudeFunction:
    """
    z -> матрица K×K амплитуд.

    provenance: 'direct' (движок на конкретном графе) или 'composed'
    (собрана хирургическими формулами из других функций).
    """
    size: int
    provenance: str
    evaluate: Callable[[complex], np.ndarray]

    def __call__(self, z: complex) -> np.ndarray:
        return self.evaluate(complex(z))

    @classmethod
    def from_walk(cls, walk: QuantumWalk, tolerances: Optional[Tolerances] = None) -> 'AmplitudeFunction':
        service = ScatteringService.for_walk(walk, tolerances)
        return cls(size=walk.K, provenance='direct', evaluate=lambda z: service.scattering_matrix(z).matrix)

    @classmethod
    def from_series(cls, series: TransmissionSeries) -> 'AmplitudeFunction':
        return cls(size=series.coefficients.shape[1], provenance='direct', evaluate=series.evaluate)

    def series(self, n_max: int, radius: Optional[float] = None, n_samples: Optional[int] = None) -> TransmissionSeries:
        """
        Коэффициенты Тейлора через ДПФ по окружности радиуса r < 1
        (по умолчанию QWALK_SERIES_RADIUS). Внутри единичного круга функция
        аналитична, поэтому ошибка наложения убывает как r^N.
        """
        r = radius if radius is not None else get_series_radius()
        N = n_samples or max(128, 4 * (n_max + 1))
        if N <= n_max:
            raise ValueError("число отсчётов должно превышать n_max")
        thetas, values = sample_on_circle(self, N, radius=r)
        values = np.asarray(values).reshape(N, self.size, self.size)
        spectrum = np.fft.fft(values, axis=0) / N
        n = np.arange(n_max + 1)
        # поправка на возможный сдвиг сетки и радиус
        phase = np.exp(-1j * n * thetas[0]) / r ** n
        coefficients = spectrum[: n_max + 1] * phase[:, None, None]
        return TransmissionSeries(n_max=n_max, coefficients=coefficients)


# ============================================================================
# РУЧКИ
# ============================================================================

@dataclass(frozen=True)
class HandleSpec:
    """Ручка от выхода out_tail к входу in_tail (индексы с нуля)"""
    out_tail: int
    in_tail: int
    edge_id: Optional[str] = None

    @classmethod
    def from_ids(cls, g: EulerianGraphWithTails, out_id: str, in_id: str, edge_id: Optional[str] = None) -> 'HandleSpec':
        try:
            return cls(g.out_tail_index(out_id), g.in_tail_index(in_id), edge_id)
        except KeyError as exc:
            raise BadTailIndex(f"нет хвоста {exc.args[0]!r}") from exc

    def check(self, K: int) -> None:
        if not (0 <= self.out_tail < K and 0 <= self.in_tail < K):
            raise BadTailIndex(f"ручка ({self.out_tail}, {self.in_tail}) вне диапазона 0..{K - 1}")


def add_handle_graph(walk: QuantumWalk, spec: HandleSpec, tolerances: Optional[Tolerances] = None) -> QuantumWalk:
    """
    Склеить выход Y_p с входом X_q в новое внутреннее ребро u -> v.
    В локальных операторах слоты хвостов заменяются новым ребром, матрицы
    не меняются. При u = v обе замены происходят в одной вершине.
    """
    g = walk.graph
    spec.check(g.K)
    y = g.outgoing_tails[spec.out_tail]
    x = g.incoming_tails[spec.in_tail]
    edge_id = spec.edge_id or f"{y.id}-{x.id}"

    graph = EulerianGraphWithTails(
        vertices=g.vertices,
        interior_edges=g.interior_edges + (Edge(edge_id, y.vertex, x.vertex),),
        incoming_tails=[t for t in g.incoming_tails if t.id != x.id],
        outgoing_tails=[t for t in g.outgoing_tails if t.id != y.id],
    )
    locals_ = [item.relabeled({x.id: edge_id, y.id: edge_id}) for item in walk.locals]
    logger.debug("Ручка %s: %s -> %s", edge_id, y.vertex, x.vertex)
    return attach_structure(graph, locals_, tolerances)


def add_handles_graph(walk: QuantumWalk, pairs: Sequence[Tuple[int, int]], tolerances: Optional[Tolerances] = None) -> QuantumWalk:
    """Несколько ручек по исходным индексам; хвосты пересчитываются после каждой"""
    _check_pairs(walk.K, pairs)
    g = walk.graph
    ids = [(g.outgoing_tails[p].id, g.incoming_tails[q].id) for p, q in pairs]
    for out_id, in_id in ids:
        walk = add_handle_graph(walk, HandleSpec.from_ids(walk.graph, out_id, in_id), tolerances)
    return walk


def add_handle_amplitudes(S: AmplitudeFunction, spec: HandleSpec, tolerances: Optional[Tolerances] = None) -> AmplitudeFunction:
    spec.check(S.size)
    tol = tolerances or get_tolerances()
    p, q = spec.out_tail, spec.in_tail
    keep_out = [j for j in range(S.size) if j != p]
    keep_in = [k for k in range(S.size) if k != q]

    def evaluate(z: complex) -> np.ndarray:
        s = S(z)
        denominator = 1.0 - s[p, q]
        if abs(denominator) < tol.sing:
            raise HandleResonance(z)
        return s[np.ix_(keep_out, keep_in)] + np.outer(s[keep_out, q], s[p, keep_in]) / denominator

    return AmplitudeFunction(size=S.size - 1, provenance='composed', evaluate=evaluate)


def add_handles_multi(
    S: AmplitudeFunction,
    pairs: Sequence[Tuple[int, int]],
    tolerances: Optional[Tolerances] = None,
) -> AmplitudeFunction:
    """Одновременно L ручек (p_l, q_l): один плотный решатель L×L"""
    _check_pairs(S.size, pairs)
    tol = tolerances or get_tolerances()
    P = [p for p, _ in pairs]
    Q = [q for _, q in pairs]
    keep_out = [j for j in range(S.size) if j not in P]
    keep_in = [k for k in range(S.size) if k not in Q]
    L = len(pairs)

    def evaluate(z: complex) -> np.ndarray:
        s = S(z)
        system = np.eye(L) - s[np.ix_(P, Q)]
        cond = np.linalg.cond(system) if L else 1.0
        if not np.isfinite(cond) or cond > 1.0 / tol.sing:
            raise MultiHandleResonance(z)
        loop = np.linalg.solve(system, s[np.ix_(P, keep_in)]) if L else np.zeros((0, len(keep_in)))
        return s[np.ix_(keep_out, keep_in)] + s[np.ix_(keep_out, Q)] @ loop

    return AmplitudeFunction(size=S.size - L, provenance='composed', evaluate=evaluate)


def _check_pairs(K: int, pairs: Sequence[Tuple[int, int]]) -> None:
    outs = [p for p, _ in pairs]
    ins = [q for _, q in pairs]
    if len(set(outs)) != len(outs) or len(set(ins)) != len(ins):
        raise BadTailIndex("хвосты в ручках повторяются")
    for p, q in pairs:
        HandleSpec(p, q).check(K)


# ============================================================================
# РАЗРЕЗ РЕБРА
# ============================================================================

def _cut_ids(edge_id: str, in_tail_id: Optional[str], out_tail_id: Optional[str]) -> Tuple[str, str]:
    return in_tail_id or f"{edge_id}.in", out_tail_id or f"{edge_id}.out"


def cut_edge_graph(
    walk: QuantumWalk,
    edge_id: str,
    in_tail_id: Optional[str] = None,
    out_tail_id: Optional[str] = None,
    tolerances: Optional[Tolerances] = None,
) -> QuantumWalk:
    """
    Разрезать внутреннее ребро u -> v: новый вход в v и новый выход из u,
    оба становятся первыми (индекс 0) в своих списках хвостов.
    """
    g = walk.graph
    if not g.has_edge(edge_id):
        raise NotAnInteriorEdge(edge_id)
    edge = g.edge(edge_id)
    x_id, y_id = _cut_ids(edge_id, in_tail_id, out_tail_id)

    graph = EulerianGraphWithTails(
        vertices=g.vertices,
        interior_edges=[e for e in g.interior_edges if e.id != edge_id],
        incoming_tails=(Tail(x_id, edge.target), *g.incoming_tails),
        outgoing_tails=(Tail(y_id, edge.source), *g.outgoing_tails),
    )
    locals_ = []
    for item in walk.locals:
        locals_.append(LocalUnitary(
            item.vertex,
            [x_id if s == edge_id else s for s in item.in_order],
            [y_id if s == edge_id else s for s in item.out_order],
            item.matrix,
        ))
    return attach_structure(graph, locals_, tolerances)


def cut_edge_amplitudes(
    walk: QuantumWalk,
    edge_id: str,
    tolerances: Optional[Tolerances] = None,
) -> AmplitudeFunction:
    """
    Амплитуды графа с разрезанным ребром, полученные из исходного блока.

    1) Столбец нового входа - ограниченное решение на G' = G без ребра:
       T_j^{(1)} из блока, где столбец ребра стал новым входом.
    2) Строка нового выхода T_1^{(k)} - та же процедура на обращённой структуре.
    3) Остальное: T_j^{(k)} = t_j^{(k)} - T_1^{(k)} T_j^{(1)} / (1 - T_1^{(1)}).
    """
    tol = tolerances or get_tolerances()
    if not walk.graph.has_edge(edge_id):
        raise NotAnInteriorEdge(edge_id)
    x_id, y_id = _cut_ids(edge_id, None, None)

    original = ScatteringService.for_walk(walk, tol)
    forward = ScatteringService(original.block.without_edge(edge_id, x_id, y_id), tol)
    backward_block = assemble_boundary_block(reverse_structure(walk))
    backward = ScatteringService(backward_block.without_edge(edge_id, y_id, x_id), tol)
    K = walk.K

    def evaluate(z: complex) -> np.ndarray:
        column = forward.scattering_matrix(z).matrix[:, 0]
        row = backward.scattering_matrix(z).matrix[:, 0]
        t11 = column[0]
        denominator = 1.0 - t11
        if abs(denominator) < tol.sing:
            raise CutResonance(z)
        s = original.scattering_matrix(z).matrix
        T = np.empty((K + 1, K + 1), dtype=complex)
        T[0, 0] = t11
        T[1:, 0] = column[1:]
        T[0, 1:] = row[1:]
        T[1:, 1:] = s - np.outer(column[1:], row[1:]) / denominator
        return T

    return AmplitudeFunction(size=K + 1, provenance='composed', evaluate=evaluate)


# ============================================================================
# СКЛЕЙКА И ИНТЕРФЕРОМЕТР
# ============================================================================

@dataclass(frozen=True, eq=False)
class SpliceResult:
    walk: QuantumWalk
    amplitudes: AmplitudeFunction


def splice(
    walk1: QuantumWalk,
    walk2: QuantumWalk,
    out_of_1: int,
    in_of_2: int,
    edge_id: Optional[str] = None,
    tolerances: Optional[Tolerances] = None,
) -> SpliceResult:
    """
    Выход out_of_1 первого графа соединяется со входом in_of_2 второго.
    Хвосты результата: сначала оставшиеся хвосты первого графа, затем второго.
    Перекрёстный блок τ = S₂[j][q] S₁[p][k]; блок 2 -> 1 нулевой.
    """
    K1, K2 = walk1.K, walk2.K
    if not 0 <= out_of_1 < K1:
        raise BadTailIndex(f"выход {out_of_1} вне диапазона первого графа")
    if not 0 <= in_of_2 < K2:
        raise BadTailIndex(f"вход {in_of_2} вне диапазона второго графа")

    union = union_walks(walk1, walk2)
    walk = add_handle_graph(union, HandleSpec(out_of_1, K1 + in_of_2, edge_id), tolerances)

    S1 = AmplitudeFunction.from_walk(walk1, tolerances)
    S2 = AmplitudeFunction.from_walk(walk2, tolerances)
    p, q = out_of_1, in_of_2
    outs1 = [j for j in range(K1) if j != p]
    ins2 = [k for k in range(K2) if k != q]

    def evaluate(z: complex) -> np.ndarray:
        s1, s2 = S1(z), S2(z)
        tau = np.zeros((K1 + K2 - 1, K1 + K2 - 1), dtype=complex)
        tau[: K1 - 1, :K1] = s1[outs1, :]
        tau[K1 - 1:, K1:] = s2[:, ins2]
        tau[K1 - 1:, :K1] = np.outer(s2[:, q], s1[p, :])
        return tau

    amplitudes = AmplitudeFunction(size=K1 + K2 - 1, provenance='composed', evaluate=evaluate)
    return SpliceResult(walk=walk, amplitudes=amplitudes)


def _splitter_walk(vertex: str, ins: List[str], outs: List[str], matrix: np.ndarray) -> QuantumWalk:
    graph = EulerianGraphWithTails(
        vertices=[vertex],
        interior_edges=[],
        incoming_tails=[Tail(t, vertex) for t in ins],
        outgoing_tails=[Tail(t, vertex) for t in outs],
    )
    return QuantumWalk(graph=graph, locals=(LocalUnitary(vertex, ins, outs, matrix),))


def build_interferometer(
    walk1: QuantumWalk,
    walk2: QuantumWalk,
    tolerances: Optional[Tolerances] = None,
    splitter: Optional[np.ndarray] = None,
) -> QuantumWalk:
    """
    Интерферометр: светоделитель A (входы X1A, X2A) раздаёт амплитуду на
    входы двух графов, их выходы сходятся в B (выходы Y1B, Y2B).
    Локальные матрицы в A и B по умолчанию (1/√2)[[1, 1], [1, -1]].
    Графы получают префиксы "1." и "2.".
    """
    for name, walk in (('первый', walk1), ('второй', walk2)):
        if walk.K != 1:
            raise NotTwoTailGraphs(f"{name} граф должен иметь ровно один вход и один выход, K={walk.K}")

    matrix = HADAMARD if splitter is None else splitter
    source = _splitter_walk('A', ['X1A', 'X2A'], ['A.1', 'A.2'], matrix)
    combiner = _splitter_walk('B', ['B.1', 'B.2'], ['Y1B', 'Y2B'], matrix)
    branches = union_walks(walk1, walk2)
    walk = union_walks(union_walks(source, branches, ('', '')), combiner, ('', ''))

    x1 = '1.' + walk1.graph.incoming_tails[0].id
    x2 = '2.' + walk2.graph.incoming_tails[0].id
    y1 = '1.' + walk1.graph.outgoing_tails[0].id
    y2 = '2.' + walk2.graph.outgoing_tails[0].id
    for out_id, in_id, edge_id in (
        ('A.1', x1, 'A>1'),
        ('A.2', x2, 'A>2'),
        (y1, 'B.1', '1>B'),
        (y2, 'B.2', '2>B'),
    ):
        walk = add_handle_graph(walk, HandleSpec.from_ids(walk.graph, out_id, in_id, edge_id), tolerances)
    return walk


def interferometer_amplitudes(
    walk1: QuantumWalk,
    walk2: QuantumWalk,
    tolerances: Optional[Tolerances] = None,
) -> AmplitudeFunction:
    """τ = (z²/2) [[t₁+t₂, t₁-t₂], [t₁-t₂, t₁+t₂]]"""
    for walk in (walk1, walk2):
        if walk.K != 1:
            raise NotTwoTailGraphs(f"K={walk.K}, ожидался один вход и один выход")
    S1 = AmplitudeFunction.from_walk(walk1, tolerances)
    S2 = AmplitudeFunction.from_walk(walk2, tolerances)

    def evaluate(z: complex) -> np.ndarray:
        t1, t2 = S1(z)[0, 0], S2(z)[0, 0]
        return (z * z / 2) * np.array([[t1 + t2, t1 - t2], [t1 - t2, t1 + t2]])

    return AmplitudeFunction(size=2, provenance='composed', evaluate=evaluate)


@dataclass(frozen=True)
class ComparisonVerdict:
    indistinguishable: bool
    max_dark: float
    theta: float

    @property
    def label(self) -> str:
        return 'indistinguishable' if self.indistinguishable else 'distinguished'


def compare_graphs(
    walk1: QuantumWalk,
    walk2: QuantumWalk,
    n_angles: int = 64,
    tolerances: Optional[Tolerances] = None,
    max_workers: Optional[int] = None,
) -> ComparisonVerdict:
    """
    Максимум |τ₂(e^{iθ})| (тёмный выход Y2B при входе X1A) по сетке углов.
    τ₂ считается движком на собранном интерферометре.
    """
    tol = tolerances or get_tolerances()
    service = ScatteringService.for_walk(build_interferometer(walk1, walk2, tol), tol)
    thetas, values = sample_on_circle(
        lambda z: service.scattering_matrix(z).matrix[1, 0], n_angles, max_workers=max_workers,
    )
    dark = np.abs(np.asarray(values))
    worst = int(np.argmax(dark))
    verdict = ComparisonVerdict(
        indistinguishable=bool(dark[worst] <= tol.compare),
        max_dark=float(dark[worst]),
        theta=float(thetas[worst]),
    )
    logger.info("Сравнение графов: %s (max |τ₂| = %.3e)", verdict.label, verdict.max_dark)
    return verdict


def max_discrepancy(
    first: AmplitudeFunction,
    second: AmplitudeFunction,
    n_angles: int = 64,
    radius: float = 1.0,
    max_workers: Optional[int] = None,
) -> float:
    """max |first - second| на окружности; резонансы обходятся сдвигом сетки"""
    if first.size != second.size:
        raise ValueError(f"размеры не совпадают: {first.size} и {second.size}")
    _, values = sample_on_circle(lambda z: first(z) - second(z), n_angles, radius=radius, max_workers=max_workers)
    if first.size == 0:
        return 0.0
    return max(float(np.max(np.abs(v))) for v in values)
