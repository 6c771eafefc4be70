"""
Oracle Service - прямая симуляция блуждания с конечными хвостами

Независимый от матриц A/B/C/D эталон: на каждом шаге входные хвосты
сдвигаются к вершине, выходные - от вершины, а каждая вершина применяет
свою локальную матрицу к амплитудам на входных слотах. Хвосты обрезаны
на глубине N; при n ≤ N ничего не теряется.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .exceptions import BadTailIndex, TruncationTooShallow
from .structure_service import QuantumWalk

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BasisEdge:
    """Стартовое ребро: внутреннее ребро или позиция на хвосте"""
    slot: str
    depth: int = 0


@dataclass(frozen=True, eq=False)
class TruncatedState:
    """
    Состояние на шаге step.

    incoming[k, l] - амплитуда на входном хвосте k на глубине l
    (l = 0 - ребро привязки), outgoing[j, l] аналогично для выходов.
    """
    step: int
    interior: np.ndarray
    incoming: np.ndarray
    outgoing: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(
            np.sum(np.abs(self.interior) ** 2)
            + np.sum(np.abs(self.incoming) ** 2)
            + np.sum(np.abs(self.outgoing) ** 2)
        ))


@dataclass(frozen=True)
class _VertexPlan:
    matrix: np.ndarray
    in_interior_pos: np.ndarray
    in_interior_idx: np.ndarray
    in_tail_pos: np.ndarray
    in_tail_idx: np.ndarray
    out_interior_pos: np.ndarray
    out_interior_idx: np.ndarray
    out_tail_pos: np.ndarray
    out_tail_idx: np.ndarray


def _split(order, interior: Dict[str, int], tails: Dict[str, int]):
    interior_pos, interior_idx, tail_pos, tail_idx = [], [], [], []
    for pos, slot in enumerate(order):
        if slot in interior:
            interior_pos.append(pos)
            interior_idx.append(interior[slot])
        else:
            tail_pos.append(pos)
            tail_idx.append(tails[slot])
    as_int = lambda xs: np.array(xs, dtype=int)
    return as_int(interior_pos), as_int(interior_idx), as_int(tail_pos), as_int(tail_idx)


class WalkSimulator:
    """Пошаговый симулятор для одной структуры и одной глубины хвостов"""

    def __init__(self, walk: QuantumWalk, tail_depth: int):
        if tail_depth < 1:
            raise ValueError("глубина хвостов должна быть ≥ 1")
        self.walk = walk
        self.depth = tail_depth
        g = walk.graph
        self.edge_index = {eid: i for i, eid in enumerate(g.edge_ids)}
        self.in_index = {t.id: k for k, t in enumerate(g.incoming_tails)}
        self.out_index = {t.id: j for j, t in enumerate(g.outgoing_tails)}
        self.plans: List[_VertexPlan] = []
        for item in walk.locals:
            in_split = _split(item.in_order, self.edge_index, self.in_index)
            out_split = _split(item.out_order, self.edge_index, self.out_index)
            self.plans.append(_VertexPlan(item.matrix, *in_split, *out_split))

    def initial_state(self, start: BasisEdge) -> TruncatedState:
        g = self.walk.graph
        state = self._zeros(0)
        if start.slot in self.edge_index:
            if start.depth != 0:
                raise BadTailIndex(f"у внутреннего ребра {start.slot!r} нет глубины")
            state.interior[self.edge_index[start.slot]] = 1.0
        elif start.slot in self.in_index or start.slot in self.out_index:
            if not 0 <= start.depth < self.depth:
                raise BadTailIndex(f"глубина {start.depth} вне 0..{self.depth - 1}")
            if start.slot in self.in_index:
                state.incoming[self.in_index[start.slot], start.depth] = 1.0
            else:
                state.outgoing[self.out_index[start.slot], start.depth] = 1.0
        else:
            raise BadTailIndex(f"в графе нет ребра или хвоста {start.slot!r} (K={g.K})")
        return state

    def step(self, state: TruncatedState) -> TruncatedState:
        new = self._zeros(state.step + 1)
        new.incoming[:, :-1] = state.incoming[:, 1:]
        new.outgoing[:, 1:] = state.outgoing[:, :-1]
        for plan in self.plans:
            vec = np.zeros(plan.matrix.shape[1], dtype=complex)
            vec[plan.in_interior_pos] = state.interior[plan.in_interior_idx]
            vec[plan.in_tail_pos] = state.incoming[plan.in_tail_idx, 0]
            out = plan.matrix @ vec
            new.interior[plan.out_interior_idx] = out[plan.out_interior_pos]
            new.outgoing[plan.out_tail_idx, 0] = out[plan.out_tail_pos]
        return new

    def run(self, start: BasisEdge, n_steps: int) -> List[TruncatedState]:
        if n_steps > self.depth:
            raise TruncationTooShallow(n_steps, self.depth)
        history = [self.initial_state(start)]
        for _ in range(n_steps):
            history.append(self.step(history[-1]))
        return history

    def labelled_amplitudes(self, state: TruncatedState) -> Iterator[Tuple[str, complex]]:
        """Ненулевые амплитуды с подписями: ребро, либо хвост[глубина]"""
        g = self.walk.graph
        for eid, i in self.edge_index.items():
            if state.interior[i] != 0:
                yield eid, complex(state.interior[i])
        for tails, array in ((g.incoming_tails, state.incoming), (g.outgoing_tails, state.outgoing)):
            for index, tail in enumerate(tails):
                for depth in np.flatnonzero(array[index]):
                    yield f"{tail.id}[{depth}]", complex(array[index, depth])

    def _zeros(self, step: int) -> TruncatedState:
        g = self.walk.graph
        return TruncatedState(
            step=step,
            interior=np.zeros(g.m, dtype=complex),
            incoming=np.zeros((g.K, self.depth), dtype=complex),
            outgoing=np.zeros((g.K, self.depth), dtype=complex),
        )


def simulate(
    walk: QuantumWalk,
    start: BasisEdge,
    n_steps: int,
    tail_depth: Optional[int] = None,
) -> List[TruncatedState]:
    """История состояний 0..n_steps; глубина по умолчанию равна n_steps"""
    depth = tail_depth if tail_depth is not None else max(n_steps, 1)
    return WalkSimulator(walk, depth).run(start, n_steps)


def arrival_amplitudes(walk: QuantumWalk, k: int, n_max: int) -> np.ndarray:
    """
    Амплитуды прихода ĉ_n[j][k] - амплитуда на ребре привязки выхода j
    на шаге n при старте с ребра привязки входа k. Форма (n_max+1, K).
    """
    g = walk.graph
    if not 0 <= k < g.K:
        raise BadTailIndex(f"вход {k} вне диапазона 0..{g.K - 1}")
    history = simulate(walk, BasisEdge(g.incoming_tails[k].id, 0), n_max)
    result = np.array([state.outgoing[:, 0] for state in history])
    logger.debug("Симуляция входа %d: %d шагов, норма %.3e", k, n_max, history[-1].norm())
    return result


def arrival_table(walk: QuantumWalk, n_max: int) -> np.ndarray:
    """ĉ_n для всех входов, форма (n_max+1, K, K) как у TransmissionSeries"""
    K = walk.graph.K
    table = np.zeros((n_max + 1, K, K), dtype=complex)
    for k in range(K):
        table[:, :, k] = arrival_amplitudes(walk, k, n_max)
    return table
