"""
Чтение и запись JSON-документов блужданий.

Документ - граф (см. build_graph) плюс необязательный список локальных
операторов:

    "locals": [{"vertex": "v", "in_order": [...], "out_order": [...],
                "matrix": [[[re, im], ...], ...]}]

Элемент матрицы - пара [re, im] или просто число.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import numpy as np

from .conf import Tolerances
from .exceptions import DocumentError
from .graph_service import EulerianGraphWithTails, build_graph, graph_to_document
from .structure_service import LocalUnitary, QuantumWalk, attach_structure

logger = logging.getLogger(__name__)


def read_document(path: Union[str, Path]) -> Dict:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except FileNotFoundError as exc:
        raise DocumentError(f"файл {path} не найден") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: некорректный JSON ({exc})") from exc
    if not isinstance(document, dict):
        raise DocumentError(f"{path}: ожидался JSON-объект")
    return document


def _parse_entry(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise DocumentError(f"элемент матрицы должен быть парой [re, im], получено {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise DocumentError(f"элемент матрицы не число: {value!r}")


def parse_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or any(not isinstance(row, list) for row in rows):
        raise DocumentError("матрица должна быть списком строк")
    width = {len(row) for row in rows}
    if len(width) > 1:
        raise DocumentError("строки матрицы разной длины")
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    return np.array([[_parse_entry(x) for x in row] for row in rows], dtype=complex)


def parse_locals(items) -> List[LocalUnitary]:
    try:
        return [
            LocalUnitary(
                vertex=str(item['vertex']),
                in_order=[str(s) for s in item['in_order']],
                out_order=[str(s) for s in item['out_order']],
                matrix=parse_matrix(item['matrix']),
            )
            for item in items
        ]
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"некорректное описание локального оператора: {exc}") from exc


def walk_from_document(document: Mapping, tolerances: Optional[Tolerances] = None) -> QuantumWalk:
    graph = build_graph(document)
    if 'locals' not in document:
        raise DocumentError("в документе нет локальных операторов (locals)")
    return attach_structure(graph, parse_locals(document['locals']), tolerances)


def load_graph(path: Union[str, Path]) -> EulerianGraphWithTails:
    return build_graph(read_document(path))


def load_walk(path: Union[str, Path], tolerances: Optional[Tolerances] = None) -> QuantumWalk:
    walk = walk_from_document(read_document(path), tolerances)
    logger.info("Загружено блуждание %s: m=%d, K=%d", path, walk.graph.m, walk.K)
    return walk


def _encode_matrix(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(x.real), float(x.imag)] for x in row] for row in matrix]


def walk_to_document(walk: QuantumWalk) -> Dict:
    document = graph_to_document(walk.graph)
    document['locals'] = [
        {
            'vertex': item.vertex,
            'in_order': list(item.in_order),
            'out_order': list(item.out_order),
            'matrix': _encode_matrix(item.matrix),
        }
        for item in walk.locals
    ]
    return document


def dump_walk(walk: QuantumWalk, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(walk_to_document(walk), f, ensure_ascii=False, indent=2)
    return path
