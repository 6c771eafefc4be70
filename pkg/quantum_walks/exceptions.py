"""
Иерархия ошибок библиотеки.

Две ветки:
- ValidationFailure - вход некорректен (документ, граф, структура, индексы);
  CLI завершается с кодом 1.
- NumericFailure - вход корректен, но вычисление в данной точке невозможно
  (резонанс, почти вырожденная резольвента); CLI завершается с кодом 2.
"""

from typing import Dict, Optional, Tuple


class QuantumWalkError(Exception):
    """Базовая ошибка библиотеки"""


# ============================================================================
# ОШИБКИ ВАЛИДАЦИИ
# ============================================================================

class ValidationFailure(QuantumWalkError):
    """Вход не удовлетворяет предусловиям операции"""


class DocumentError(ValidationFailure):
    """Документ графа/блуждания не разбирается"""


class DuplicateId(ValidationFailure):
    def __init__(self, identifier: str):
        self.identifier = identifier
        super().__init__(f"повторяющийся идентификатор: {identifier!r}")


class DanglingEndpoint(ValidationFailure):
    def __init__(self, owner: str, vertex: str):
        self.owner = owner
        self.vertex = vertex
        super().__init__(f"{owner!r} ссылается на необъявленную вершину {vertex!r}")


class NotEulerian(ValidationFailure):
    def __init__(self, imbalance: Dict[str, Tuple[int, int]]):
        # вершина -> (входящих, исходящих)
        self.imbalance = dict(imbalance)
        details = ', '.join(
            f"{v}: in={i} out={o}" for v, (i, o) in sorted(self.imbalance.items())
        )
        super().__init__(f"граф не эйлеров ({details})")


class TailCountMismatch(ValidationFailure):
    def __init__(self, n_in: int, n_out: int):
        self.n_in = n_in
        self.n_out = n_out
        super().__init__(f"входящих хвостов {n_in}, исходящих {n_out}")


class SlotMismatch(ValidationFailure):
    def __init__(self, vertex: str, message: str):
        self.vertex = vertex
        super().__init__(f"вершина {vertex!r}: {message}")


class NotUnitary(ValidationFailure):
    def __init__(self, vertex: str, defect: float):
        self.vertex = vertex
        self.defect = defect
        super().__init__(f"локальная матрица в {vertex!r} не унитарна (дефект {defect:.3e})")


class BadTailIndex(ValidationFailure):
    """Индекс или id хвоста вне допустимого диапазона"""


class NotAnInteriorEdge(ValidationFailure):
    def __init__(self, edge: str):
        self.edge = edge
        super().__init__(f"{edge!r} не является внутренним ребром")


class NotTwoTailGraphs(ValidationFailure):
    """Интерферометр требует графы ровно с одним входом и одним выходом"""


class NotAnAutomorphism(ValidationFailure):
    """Свидетель не является автоморфизмом графа"""


class TruncationTooShallow(ValidationFailure):
    def __init__(self, n_steps: int, depth: int):
        self.n_steps = n_steps
        self.depth = depth
        super().__init__(f"глубина хвостов {depth} меньше числа шагов {n_steps}")


# ============================================================================
# ЧИСЛЕННЫЕ ОШИБКИ
# ============================================================================

class NumericFailure(QuantumWalkError):
    """Вычисление невозможно или ненадёжно в данной точке"""

    def __init__(self, message: str, z: Optional[complex] = None):
        self.z = z
        super().__init__(message if z is None else f"{message} (z={z:.6g})")


class EigSolverFailure(NumericFailure):
    pass


class LeakyBoundState(NumericFailure):
    def __init__(self, leak: float):
        self.leak = leak
        super().__init__(f"связанное состояние протекает на хвосты: ‖Cv‖={leak:.3e}")


class NearSingularResolvent(NumericFailure):
    def __init__(self, z: complex):
        super().__init__("резольвента (I - zA) почти вырождена", z)


class HandleResonance(NumericFailure):
    def __init__(self, z: complex):
        super().__init__("резонанс ручки: 1 - t(z) ≈ 0", z)


class MultiHandleResonance(NumericFailure):
    def __init__(self, z: complex):
        super().__init__("система для нескольких ручек почти вырождена", z)


class CutResonance(NumericFailure):
    def __init__(self, z: complex):
        super().__init__("резонанс разреза: 1 - T(z) ≈ 0", z)
