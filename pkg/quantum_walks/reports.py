"""
Табличные отчёты (pandas) и запись CSV.

Числа пишутся в научной нотации с 17 значащими цифрами, поэтому
одинаковые входы дают побайтно одинаковые файлы.
"""

from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .oracle_service import TruncatedState, WalkSimulator
from .scattering_service import TransmissionSeries, sample_on_circle

FLOAT_FORMAT = '%.16e'


def scatter_table(
    evaluate: Callable[[complex], np.ndarray],
    in_ids: Sequence[str],
    out_ids: Sequence[str],
    n_angles: int,
    max_workers: Optional[int] = None,
) -> pd.DataFrame:
    """(θ, вход, выход, Re t, Im t, |t|²) для каждого угла и каждой пары (k, j)"""
    thetas, values = sample_on_circle(evaluate, n_angles, max_workers=max_workers)
    rows = []
    for theta, S in zip(thetas, values):
        for k, in_id in enumerate(in_ids):
            for j, out_id in enumerate(out_ids):
                t = complex(S[j, k])
                rows.append({
                    'theta': float(theta),
                    'in_tail': in_id,
                    'out_tail': out_id,
                    're': t.real,
                    'im': t.imag,
                    'abs2': abs(t) ** 2,
                })
    return pd.DataFrame(rows, columns=['theta', 'in_tail', 'out_tail', 're', 'im', 'abs2'])


def coefficient_table(series: TransmissionSeries, in_ids: Sequence[str], out_ids: Sequence[str]) -> pd.DataFrame:
    """Коэффициенты Тейлора c_n[j][k], n = 1..n_max"""
    rows = []
    for n in range(1, series.n_max + 1):
        for k, in_id in enumerate(in_ids):
            for j, out_id in enumerate(out_ids):
                c = complex(series.coefficients[n, j, k])
                rows.append({'n': n, 'in_tail': in_id, 'out_tail': out_id, 're': c.real, 'im': c.imag})
    return pd.DataFrame(rows, columns=['n', 'in_tail', 'out_tail', 're', 'im'])


def arrival_table(series: TransmissionSeries, in_ids: Sequence[str], out_ids: Sequence[str]) -> pd.DataFrame:
    """Вероятности первого прихода q(n) = |c_n|²"""
    table = coefficient_table(series, in_ids, out_ids)
    table['q'] = table['re'] ** 2 + table['im'] ** 2
    return table[['n', 'in_tail', 'out_tail', 'q']]


def simulation_table(simulator: WalkSimulator, history: List[TruncatedState]) -> pd.DataFrame:
    """(шаг, ребро, Re, Im) для всех ненулевых амплитуд"""
    rows = [
        {'step': state.step, 'edge': label, 're': amplitude.real, 'im': amplitude.imag}
        for state in history
        for label, amplitude in simulator.labelled_amplitudes(state)
    ]
    return pd.DataFrame(rows, columns=['step', 'edge', 're', 'im'])


def read_scatter_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, dtype={'in_tail': str, 'out_tail': str}, float_precision='round_trip')


def write_csv(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
