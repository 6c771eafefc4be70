"""
Численные допуски и конфигурация запуска CLI.

Значения по умолчанию задаются в settings.QWALK_TOLERANCES (их можно
переопределить переменными окружения QWALK_EPS_*, см. qwalkproject/settings.py).
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional

from django.conf import settings


DEFAULT_TOLERANCES = {
    'unitary': 1e-9,
    'num': 1e-9,
    'eig': 1e-8,
    'compare': 1e-9,
    'sing': 1e-10,
}

DEFAULT_SERIES_RADIUS = 0.5


@dataclass(frozen=True)
class Tolerances:
    """Набор допусков ε_unitary, ε_num, ε_eig, ε_compare, ε_sing"""
    unitary: float = DEFAULT_TOLERANCES['unitary']
    num: float = DEFAULT_TOLERANCES['num']
    eig: float = DEFAULT_TOLERANCES['eig']
    compare: float = DEFAULT_TOLERANCES['compare']
    sing: float = DEFAULT_TOLERANCES['sing']

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"допуск {f.name} должен быть положительным, получено {value}")

    def override(self, **values: float) -> 'Tolerances':
        unknown = set(values) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f"неизвестные допуски: {', '.join(sorted(unknown))}")
        return replace(self, **values)


def get_tolerances() -> Tolerances:
    """Допуски из настроек Django (или значения по умолчанию вне Django)"""
    if settings.configured:
        configured = getattr(settings, 'QWALK_TOLERANCES', None) or {}
        return Tolerances(**{**DEFAULT_TOLERANCES, **configured})
    return Tolerances()


def get_series_radius() -> float:
    if settings.configured:
        return float(getattr(settings, 'QWALK_SERIES_RADIUS', DEFAULT_SERIES_RADIUS))
    return DEFAULT_SERIES_RADIUS


def get_output_dir() -> Path:
    if settings.configured and getattr(settings, 'QWALK_OUTPUT_DIR', None):
        return Path(settings.QWALK_OUTPUT_DIR)
    return Path.cwd()


# ============================================================================
# КОНФИГУРАЦИЯ ЗАПУСКА CLI
# ============================================================================

@dataclass
class RunConfig:
    """Параметры одного запуска `manage.py qwalk <команда>`"""
    command: str
    inputs: List[Path]
    tolerances: Tolerances = field(default_factory=get_tolerances)
    output: Optional[Path] = None
    angles: int = 64
    samples: int = 256
    n_max: int = 50
    workers: int = 1

    def __post_init__(self):
        for name in ('angles', 'samples', 'n_max', 'workers'):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} должно быть ≥ 1")

    @staticmethod
    def parse_overrides(pairs: Optional[List[str]]) -> Dict[str, float]:
        """Разобрать повторяемый флаг --tolerance KEY=VALUE"""
        result = {}
        for pair in pairs or []:
            key, sep, value = pair.partition('=')
            if not sep:
                raise ValueError(f"ожидалось KEY=VALUE, получено {pair!r}")
            key = key.strip().lower().removeprefix('eps_').removeprefix('ε_')
            result[key] = float(value)
        return result

    def resolve_output(self, default_name: str) -> Path:
        """Путь для артефакта: явный --output или QWALK_OUTPUT_DIR/<имя>"""
        if self.output is not None:
            return self.output
        return get_output_dir() / default_name
