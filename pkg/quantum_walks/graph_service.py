"""
Graph Service - эйлеровы ориентированные графы с хвостами

Граф задаётся конечным мультиграфом (петли и кратные рёбра разрешены) и двумя
упорядоченными списками хвостов: входящие X_k и исходящие Y_k, каждый привязан
к своей вершине. Рёбра привязки хвостов НЕ хранятся как внутренние рёбра -
их задают сами записи хвостов, так что внутренний базис совпадает с H_G.

Условие Эйлера с хвостами: для каждой вершины
    (входящие внутренние) + (входящие хвосты) = (исходящие внутренние) + (исходящие хвосты).

Все объекты неизменяемы; операции - чистые функции.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .exceptions import (
    DanglingEndpoint,
    DocumentError,
    DuplicateId,
    NotEulerian,
    TailCountMismatch,
)

logger = logging.getLogger(__name__)


# ============================================================================
# ТИПЫ
# ============================================================================

@dataclass(frozen=True)
class Edge:
    """Внутреннее ориентированное ребро source -> target"""
    id: str
    source: str
    target: str

    @property
    def is_loop(self) -> bool:
        return self.source == self.target


@dataclass(frozen=True)
class Tail:
    """Полубесконечный хвост, привязанный к вершине"""
    id: str
    vertex: str


@dataclass(frozen=True)
class EulerianGraphWithTails:
    """
    Эйлеров граф с хвостами Γ = (G, (v_1..v_K), (u_1..u_K)).

    Порядок хвостов семантически значим: он фиксирует индексы k, j
    в матрице рассеяния. Инварианты проверяются при создании.
    """
    vertices: Tuple[str, ...]
    interior_edges: Tuple[Edge, ...]
    incoming_tails: Tuple[Tail, ...] = ()
    outgoing_tails: Tuple[Tail, ...] = ()
    _edge_index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'vertices', tuple(self.vertices))
        object.__setattr__(self, 'interior_edges', tuple(self.interior_edges))
        object.__setattr__(self, 'incoming_tails', tuple(self.incoming_tails))
        object.__setattr__(self, 'outgoing_tails', tuple(self.outgoing_tails))
        _validate(self)
        object.__setattr__(
            self, '_edge_index', {e.id: i for i, e in enumerate(self.interior_edges)}
        )

    # ------------------------------------------------------------------
    # СВОЙСТВА
    # ------------------------------------------------------------------

    @property
    def K(self) -> int:
        """Число пар хвостов"""
        return len(self.incoming_tails)

    @property
    def m(self) -> int:
        """Размерность внутреннего пространства H_G"""
        return len(self.interior_edges)

    @property
    def edge_ids(self) -> Tuple[str, ...]:
        return tuple(e.id for e in self.interior_edges)

    def edge(self, edge_id: str) -> Edge:
        return self.interior_edges[self._edge_index[edge_id]]

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edge_index

    def in_tail_index(self, tail_id: str) -> int:
        for k, tail in enumerate(self.incoming_tails):
            if tail.id == tail_id:
                return k
        raise KeyError(tail_id)

    def out_tail_index(self, tail_id: str) -> int:
        for j, tail in enumerate(self.outgoing_tails):
            if tail.id == tail_id:
                return j
        raise KeyError(tail_id)

    def in_slots(self, vertex: str) -> List[str]:
        """ω_v: внутренние рёбра, входящие в v, и входящие хвосты при v"""
        slots = [e.id for e in self.interior_edges if e.target == vertex]
        slots += [t.id for t in self.incoming_tails if t.vertex == vertex]
        return slots

    def out_slots(self, vertex: str) -> List[str]:
        """τ_v: внутренние рёбра, выходящие из v, и исходящие хвосты при v"""
        slots = [e.id for e in self.interior_edges if e.source == vertex]
        slots += [t.id for t in self.outgoing_tails if t.vertex == vertex]
        return slots

    def to_networkx(self) -> nx.MultiDiGraph:
        """
        Мультиграф networkx: внутренние рёбра плюс по одному ребру на хвост,
        ведущему в служебную вершину ('tail', id) или из неё.
        """
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(self.vertices)
        for e in self.interior_edges:
            graph.add_edge(e.source, e.target, key=e.id)
        for t in self.incoming_tails:
            graph.add_edge(('tail', t.id), t.vertex, key=t.id)
        for t in self.outgoing_tails:
            graph.add_edge(t.vertex, ('tail', t.id), key=t.id)
        return graph


# ============================================================================
# ВАЛИДАЦИЯ
# ============================================================================

def _validate(g: EulerianGraphWithTails) -> None:
    seen_vertices = set()
    for v in g.vertices:
        if v in seen_vertices:
            raise DuplicateId(v)
        seen_vertices.add(v)

    # рёбра и хвосты делят одно пространство идентификаторов (слоты)
    seen_slots = set()
    for item in (*g.interior_edges, *g.incoming_tails, *g.outgoing_tails):
        if item.id in seen_slots:
            raise DuplicateId(item.id)
        seen_slots.add(item.id)

    for e in g.interior_edges:
        for endpoint in (e.source, e.target):
            if endpoint not in seen_vertices:
                raise DanglingEndpoint(e.id, endpoint)
    for t in (*g.incoming_tails, *g.outgoing_tails):
        if t.vertex not in seen_vertices:
            raise DanglingEndpoint(t.id, t.vertex)

    if len(g.incoming_tails) != len(g.outgoing_tails):
        raise TailCountMismatch(len(g.incoming_tails), len(g.outgoing_tails))

    nxg = g.to_networkx()
    imbalance = {
        v: (nxg.in_degree(v), nxg.out_degree(v))
        for v in g.vertices
        if nxg.in_degree(v) != nxg.out_degree(v)
    }
    if imbalance:
        raise NotEulerian(imbalance)


# ============================================================================
# ОПЕРАЦИИ
# ============================================================================

def build_graph(spec: Mapping) -> EulerianGraphWithTails:
    """
    Построить граф из документа вида
        {"vertices": [...], "edges": [{"id", "from", "to"}],
         "tails_in": [{"id", "vertex"}], "tails_out": [{"id", "vertex"}]}

    Порядок tails_in / tails_out задаёт индексы хвостов.
    """
    try:
        vertices = [str(v) for v in spec.get('vertices', [])]
        edges = [
            Edge(str(item['id']), str(item['from']), str(item['to']))
            for item in spec.get('edges', [])
        ]
        tails_in = [Tail(str(item['id']), str(item['vertex'])) for item in spec.get('tails_in', [])]
        tails_out = [Tail(str(item['id']), str(item['vertex'])) for item in spec.get('tails_out', [])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise DocumentError(f"некорректная структура графа: {exc}") from exc

    graph = EulerianGraphWithTails(vertices, edges, tails_in, tails_out)
    logger.debug("Граф построен: |V|=%d, m=%d, K=%d", len(graph.vertices), graph.m, graph.K)
    return graph


def graph_to_document(g: EulerianGraphWithTails) -> Dict:
    """Обратное к build_graph представление"""
    return {
        'vertices': list(g.vertices),
        'edges': [{'id': e.id, 'from': e.source, 'to': e.target} for e in g.interior_edges],
        'tails_in': [{'id': t.id, 'vertex': t.vertex} for t in g.incoming_tails],
        'tails_out': [{'id': t.id, 'vertex': t.vertex} for t in g.outgoing_tails],
    }


def reverse_graph(g: EulerianGraphWithTails) -> EulerianGraphWithTails:
    """
    Обращённый граф: каждое ребро (a, b) становится (b, a) с тем же id,
    входящий хвост k становится исходящим хвостом k при той же вершине
    и наоборот (X_k -> Y_k^R, Y_j -> X_j^R).
    """
    return EulerianGraphWithTails(
        vertices=g.vertices,
        interior_edges=[Edge(e.id, e.target, e.source) for e in g.interior_edges],
        incoming_tails=g.outgoing_tails,
        outgoing_tails=g.incoming_tails,
    )


def find_pairing(g: EulerianGraphWithTails) -> Optional[Dict[str, str]]:
    """
    Найти спаривание: инволюцию A без неподвижных точек на внутренних рёбрах
    с t(Ae) = i(e), i(Ae) = t(e).

    Граф совместимости распадается на полные двудольные компоненты
    {рёбра a->b} x {рёбра b->a} (для петель при v - полный граф на петлях при v),
    поэтому совершенное паросочетание существует ровно тогда, когда в каждой
    компоненте доли равны; рёбра сопоставляются по возрастанию id.
    """
    groups: Dict[Tuple[str, str], List[str]] = defaultdict(list)
    for e in g.interior_edges:
        groups[(e.source, e.target)].append(e.id)

    pairing: Dict[str, str] = {}
    for (a, b), forward in groups.items():
        if a == b:
            loops = sorted(forward)
            if len(loops) % 2:
                return None
            for first, second in zip(loops[0::2], loops[1::2]):
                pairing[first] = second
                pairing[second] = first
            continue
        if (a, b) > (b, a):
            continue
        backward = groups.get((b, a), [])
        if len(forward) != len(backward):
            return None
        for e, f in zip(sorted(forward), sorted(backward)):
            pairing[e] = f
            pairing[f] = e

    if len(pairing) != g.m:
        # есть рёбра a->b без обратных b->a
        return None
    return pairing


def is_simple_graph(g: EulerianGraphWithTails) -> bool:
    """"Разделённое шоссе": без петель, между связанными вершинами ровно по ребру в каждую сторону"""
    counts: Dict[Tuple[str, str], int] = defaultdict(int)
    for e in g.interior_edges:
        if e.is_loop:
            return False
        counts[(e.source, e.target)] += 1
    return all(n == 1 and counts.get((b, a)) == 1 for (a, b), n in counts.items())


def relabel_graph(g: EulerianGraphWithTails, prefix: str) -> EulerianGraphWithTails:
    """Добавить префикс ко всем идентификаторам вершин, рёбер и хвостов"""
    return EulerianGraphWithTails(
        vertices=[prefix + v for v in g.vertices],
        interior_edges=[Edge(prefix + e.id, prefix + e.source, prefix + e.target) for e in g.interior_edges],
        incoming_tails=[Tail(prefix + t.id, prefix + t.vertex) for t in g.incoming_tails],
        outgoing_tails=[Tail(prefix + t.id, prefix + t.vertex) for t in g.outgoing_tails],
    )


def disjoint_union(
    g1: EulerianGraphWithTails,
    g2: EulerianGraphWithTails,
    prefixes: Sequence[str] = ('1.', '2.'),
) -> EulerianGraphWithTails:
    """Дизъюнктное объединение: хвосты g1 идут первыми, затем хвосты g2"""
    a = relabel_graph(g1, prefixes[0]) if prefixes[0] else g1
    b = relabel_graph(g2, prefixes[1]) if prefixes[1] else g2
    return EulerianGraphWithTails(
        vertices=a.vertices + b.vertices,
        interior_edges=a.interior_edges + b.interior_edges,
        incoming_tails=a.incoming_tails + b.incoming_tails,
        outgoing_tails=a.outgoing_tails + b.outgoing_tails,
    )


# ============================================================================
# МОРФИЗМЫ
# ============================================================================

class MorphismKind(str, Enum):
    MORPHISM = 'morphism'
    ISOMORPHISM = 'isomorphism'
    NOT_A_MORPHISM = 'not-a-morphism'


@dataclass(frozen=True)
class MorphismWitness:
    """
    Пара отображений φ = (f, F): f на вершинах, F на рёбрах.
    F покрывает и рёбра привязки хвостов (по id хвоста).
    """
    vertex_map: Mapping[str, str]
    edge_map: Mapping[str, str]

    @classmethod
    def identity(cls, g: EulerianGraphWithTails) -> 'MorphismWitness':
        return cls({v: v for v in g.vertices}, {s: s for s in iter_slot_ids(g)})


def check_morphism(
    g: EulerianGraphWithTails,
    g2: EulerianGraphWithTails,
    w: MorphismWitness,
) -> MorphismKind:
    """
    Проверить законы i'∘F = f∘i и t'∘F = f∘t на каждом ребре.
    Хвост отображается в хвост того же направления; его внешний конец
    лежит вне G, так что проверяется только вершина привязки.
    """
    f, F = w.vertex_map, w.edge_map

    if any(v not in f or f[v] not in g2.vertices for v in g.vertices):
        return MorphismKind.NOT_A_MORPHISM

    for e in g.interior_edges:
        image = F.get(e.id)
        if image is None or not g2.has_edge(image):
            return MorphismKind.NOT_A_MORPHISM
        e2 = g2.edge(image)
        if e2.source != f[e.source] or e2.target != f[e.target]:
            return MorphismKind.NOT_A_MORPHISM

    in2 = {t.id: t.vertex for t in g2.incoming_tails}
    out2 = {t.id: t.vertex for t in g2.outgoing_tails}
    for tails, targets in ((g.incoming_tails, in2), (g.outgoing_tails, out2)):
        for t in tails:
            image = F.get(t.id)
            if image not in targets or targets[image] != f[t.vertex]:
                return MorphismKind.NOT_A_MORPHISM

    slots = list(iter_slot_ids(g))
    slots2 = set(iter_slot_ids(g2))
    vertex_images = {f[v] for v in g.vertices}
    edge_images = {F[s] for s in slots}
    bijective = (
        len(vertex_images) == len(g.vertices) == len(g2.vertices)
        and len(edge_images) == len(slots) == len(slots2)
    )
    return MorphismKind.ISOMORPHISM if bijective else MorphismKind.MORPHISM


def iter_slot_ids(g: EulerianGraphWithTails) -> Iterable[str]:
    yield from g.edge_ids
    yield from (t.id for t in g.incoming_tails)
    yield from (t.id for t in g.outgoing_tails)
