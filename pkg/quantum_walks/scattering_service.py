"""
Scattering Service - рассеяние на квантовом графе

S(z) = z (D + z C (I - zA)⁻¹ B),   S[j][k] = t_j^{(k)}(z)

Коэффициенты Тейлора: c_1 = D, c_n = C A^{n-2} B (n ≥ 2), c_0 = 0.
|c_n[j][k]|² - вероятность первого прихода на выход j ровно через n шагов
при старте с входа k.

Собственные значения A на единичной окружности соответствуют связанным
состояниям (подпространство H₀). H₀ инвариантно относительно A и A†, а
столбцы B ему ортогональны, поэтому все вычисления ведутся в дополнении H₁.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from .conf import Tolerances, get_tolerances
from .exceptions import (
    BadTailIndex,
    EigSolverFailure,
    LeakyBoundState,
    NearSingularResolvent,
    NotAnInteriorEdge,
    NumericFailure,
)
from .structure_service import BoundaryBlock, QuantumWalk, assemble_boundary_block

logger = logging.getLogger(__name__)

# σ ближе к 1 - геометрическая оценка остатка ряда бесполезна
SLOW_CONVERGENCE_MARGIN = 1e-12


# ============================================================================
# РЕЗУЛЬТАТЫ
# ============================================================================

@dataclass(frozen=True, eq=False)
class BoundStateBasis:
    """Ортонормированный базис H₀ (столбцы vectors) и собственные значения"""
    vectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class TransmissionSeries:
    """Коэффициенты c_0..c_{n_max}, массив формы (n_max+1, K, K)"""
    n_max: int
    coefficients: np.ndarray

    def coefficient(self, n: int) -> np.ndarray:
        return self.coefficients[n]

    def arrival_probabilities(self, k: int, j: int) -> np.ndarray:
        """q(n) = |c_n[j][k]|² для n = 0..n_max"""
        return np.abs(self.coefficients[:, j, k]) ** 2

    def evaluate(self, z: complex) -> np.ndarray:
        """Частичная сумма Σ c_n zⁿ"""
        powers = z ** np.arange(self.n_max + 1)
        return np.tensordot(powers, self.coefficients, axes=1)


@dataclass(frozen=True, eq=False)
class ScatterSample:
    """Матрица рассеяния в одной точке z"""
    z: complex
    matrix: np.ndarray

    def t(self, j: int, k: int) -> complex:
        return complex(self.matrix[j, k])

    def isometry_defect(self) -> float:
        K = self.matrix.shape[0]
        if K == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(K))))


@dataclass(frozen=True)
class ExitProbability:
    """Вероятность когда-либо выйти через j при старте с k"""
    value: float
    error: float
    method: str
    residual: Optional[float] = None


# Места на собственном состоянии
@dataclass(frozen=True)
class InTailSite:
    tail: int
    depth: int


@dataclass(frozen=True)
class InteriorSite:
    edge: str


@dataclass(frozen=True)
class OutTailSite:
    tail: int
    depth: int


Location = Union[InTailSite, InteriorSite, OutTailSite]


# ============================================================================
# СЕРВИС
# ============================================================================

class ScatteringService:
    """
    Рассеяние для одного граничного блока.

    Базис связанных состояний и дефлированные блоки вычисляются один раз
    в конструкторе, после этого экземпляр только читается и может
    использоваться из нескольких потоков.
    """

    def __init__(self, block: BoundaryBlock, tolerances: Optional[Tolerances] = None):
        self.block = block
        self.tolerances = tolerances or get_tolerances()
        self.bound = compute_bound_states(block, self.tolerances)
        self.Q = _complement_basis(block.m, self.bound.vectors)
        self.A1 = self.Q.conj().T @ block.A @ self.Q
        self.B1 = self.Q.conj().T @ block.B
        self.C1 = block.C @ self.Q
        logger.debug(
            "Блок m=%d K=%d: dim H₀=%d, dim H₁=%d",
            block.m, block.K, self.bound.dimension, self.Q.shape[1],
        )

    @classmethod
    def for_walk(cls, walk: QuantumWalk, tolerances: Optional[Tolerances] = None) -> 'ScatteringService':
        return cls(assemble_boundary_block(walk), tolerances)

    @property
    def K(self) -> int:
        return self.block.K

    # ---------------------------------------------------------------------
    # резольвента
    # ---------------------------------------------------------------------

    def resolvent_solve(self, z: complex, rhs: np.ndarray) -> np.ndarray:
        """(I - zA₁)⁻¹ rhs в H₁ с проверкой обусловленности"""
        n = self.A1.shape[0]
        if n == 0:
            return np.zeros_like(rhs, dtype=complex)
        M = np.eye(n) - z * self.A1
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > 1.0 / self.tolerances.sing:
            raise NearSingularResolvent(z)
        return np.linalg.solve(M, rhs)

    def scattering_matrix(self, z: complex) -> ScatterSample:
        z = complex(z)
        S = z * self.block.D
        if self.A1.shape[0]:
            S = S + z * z * (self.C1 @ self.resolvent_solve(z, self.B1))
        return ScatterSample(z=z, matrix=S)

    def interior_state(self, z: complex) -> np.ndarray:
        """Внутренние амплитуды собственных состояний: z Q (I - zA₁)⁻¹ B₁, форма (m, K)"""
        return z * (self.Q @ self.resolvent_solve(z, self.B1))

    # ---------------------------------------------------------------------
    # ряды
    # ---------------------------------------------------------------------

    def transmission_series(self, n_max: int) -> TransmissionSeries:
        if n_max < 0:
            raise ValueError("n_max должно быть ≥ 0")
        K = self.K
        coefficients = np.zeros((n_max + 1, K, K), dtype=complex)
        if n_max >= 1:
            coefficients[1] = self.block.D
        work = self.block.B
        for n in range(2, n_max + 1):
            coefficients[n] = self.block.C @ work
            work = self.block.A @ work
        return TransmissionSeries(n_max=n_max, coefficients=coefficients)

    def contraction_norm(self) -> float:
        """σ = ‖A₁‖₂ - наибольшее сингулярное число дефлированного блока"""
        if self.A1.shape[0] == 0:
            return 0.0
        return float(np.linalg.norm(self.A1, 2))

    def exit_probability_parseval(self, k: int, j: int, n_max: int) -> ExitProbability:
        _check_pair(self.K, k, j)
        series = self.transmission_series(n_max)
        value = float(np.sum(series.arrival_probabilities(k, j)))

        sigma = self.contraction_norm()
        if sigma >= 1.0 - SLOW_CONVERGENCE_MARGIN:
            logger.warning("σ = %.15f: ряд сходится медленно, оценка остатка тривиальна", sigma)
        b_norm2 = float(np.linalg.norm(self.B1[:, k]) ** 2)
        bound = sigma ** (2 * max(n_max - 1, 0)) * b_norm2 if n_max >= 1 else 1.0

        # точный остаток: норма внутренней части после n_max шагов
        work = self.block.B[:, k]
        for _ in range(max(n_max - 1, 0)):
            work = self.block.A @ work
        residual = float(np.linalg.norm(work) ** 2) if n_max >= 1 else 1.0
        return ExitProbability(value=value, error=bound, method='parseval', residual=residual)

    def exit_probability_quadrature(
        self, k: int, j: int, n_samples: int, max_workers: Optional[int] = None,
    ) -> ExitProbability:
        _check_pair(self.K, k, j)
        _, values = sample_on_circle(
            lambda z: self.scattering_matrix(z).matrix[j, k], n_samples, max_workers=max_workers,
        )
        weights = np.abs(np.asarray(values)) ** 2
        value = float(np.mean(weights))
        error = float(abs(value - np.mean(weights[::2]))) if n_samples >= 2 else float('inf')
        return ExitProbability(value=value, error=error, method='quadrature')

    def eigenstate_component(self, k: int, z: complex, location: Location) -> complex:
        if not 0 <= k < self.K:
            raise BadTailIndex(f"вход {k} вне диапазона 0..{self.K - 1}")
        if z == 0:
            raise ValueError("z должно быть ненулевым")
        if isinstance(location, InTailSite):
            _check_tail(self.K, location.tail, "вход")
            return complex(z ** (-location.depth)) if location.tail == k else 0j
        if isinstance(location, OutTailSite):
            _check_tail(self.K, location.tail, "выход")
            return self.scattering_matrix(z).t(location.tail, k) * z ** location.depth
        if location.edge not in self.block.interior:
            raise NotAnInteriorEdge(location.edge)
        index = self.block.interior.index(location.edge)
        return complex(self.interior_state(z)[index, k])

    def unitarity_defect(self, n_angles: int, max_workers: Optional[int] = None) -> float:
        _, samples = sample_on_circle(self.scattering_matrix, n_angles, max_workers=max_workers)
        return max(sample.isometry_defect() for sample in samples)


# ============================================================================
# СВЯЗАННЫЕ СОСТОЯНИЯ
# ============================================================================

def compute_bound_states(block: BoundaryBlock, tolerances: Optional[Tolerances] = None) -> BoundStateBasis:
    """
    Упорядоченное разложение Шура A: собственные значения с |λ| ≥ 1 - ε_eig
    идут первыми, первые sdim столбцов Z дают ортонормированный базис H₀.
    """
    tol = tolerances or get_tolerances()
    m = block.m
    if m == 0:
        return BoundStateBasis(vectors=np.zeros((0, 0), dtype=complex), eigenvalues=np.zeros(0, dtype=complex))

    threshold = 1.0 - tol.eig
    try:
        T, Z, sdim = scipy.linalg.schur(
            block.A.astype(complex), output='complex', sort=lambda lam: abs(lam) >= threshold
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigSolverFailure(f"разложение Шура не сошлось: {exc}") from exc

    vectors = Z[:, :sdim]
    eigenvalues = np.diag(T)[:sdim].copy()
    if sdim:
        leak = float(np.max(np.linalg.norm(block.C @ vectors, axis=0)))
        if leak >= tol.eig:
            raise LeakyBoundState(leak)
        logger.info("Найдено связанных состояний: %d", sdim)
    return BoundStateBasis(vectors=vectors, eigenvalues=eigenvalues)


def _complement_basis(m: int, vectors: np.ndarray) -> np.ndarray:
    if m == 0:
        return np.zeros((0, 0), dtype=complex)
    if vectors.shape[1] == 0:
        return np.eye(m, dtype=complex)
    return scipy.linalg.null_space(vectors.conj().T)


def _check_tail(K: int, index: int, kind: str) -> None:
    if not 0 <= index < K:
        raise BadTailIndex(f"{kind} {index} вне диапазона 0..{K - 1}")


def _check_pair(K: int, k: int, j: int) -> None:
    _check_tail(K, k, "вход")
    _check_tail(K, j, "выход")


# ============================================================================
# ОБХОД ОКРУЖНОСТИ
# ============================================================================

def sample_on_circle(
    evaluate: Callable[[complex], np.ndarray],
    n_angles: int,
    radius: float = 1.0,
    max_workers: Optional[int] = None,
) -> Tuple[np.ndarray, List]:
    """
    Значения функции в точках r·e^{iθ}, θ_i = 2π i / N.

    Если какая-то точка сетки попала в резонанс (NumericFailure), сетка
    один раз сдвигается на полшага; повторная неудача пробрасывается.
    """
    if n_angles < 1:
        raise ValueError("число углов должно быть ≥ 1")
    try:
        return _sample_grid(evaluate, n_angles, radius, 0.0, max_workers)
    except NumericFailure as exc:
        logger.warning("Точка сетки в резонансе (%s), сдвигаем сетку на полшага", exc)
        return _sample_grid(evaluate, n_angles, radius, 0.5, max_workers)


def _sample_grid(evaluate, n_angles, radius, shift, max_workers):
    thetas = 2.0 * np.pi * (np.arange(n_angles) + shift) / n_angles
    points = radius * np.exp(1j * thetas)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(evaluate, points))
    else:
        values = [evaluate(z) for z in points]
    return thetas, values


# ============================================================================
# ФУНКЦИИ УРОВНЯ МОДУЛЯ
# ============================================================================

def bound_states(walk: QuantumWalk, tolerances: Optional[Tolerances] = None) -> BoundStateBasis:
    return compute_bound_states(assemble_boundary_block(walk), tolerances)


def scattering_matrix(walk: QuantumWalk, z: complex, tolerances: Optional[Tolerances] = None) -> ScatterSample:
    return ScatteringService.for_walk(walk, tolerances).scattering_matrix(z)


def transmission_series(walk: QuantumWalk, n_max: int) -> TransmissionSeries:
    return ScatteringService.for_walk(walk).transmission_series(n_max)


def first_arrival(
    walk: QuantumWalk,
    k: int,
    j: int,
    n: int,
    method: str = 'series',
    n_samples: Optional[int] = None,
    tolerances: Optional[Tolerances] = None,
) -> float:
    """
    Вероятность первого прихода на выход j ровно на шаге n.

    method='series' - прямо из коэффициентов c_n;
    method='fourier' - n-й коэффициент Фурье S(e^{iθ}) по равномерной сетке
    (n_samples > n, по умолчанию max(256, 4n)).
    """
    service = ScatteringService.for_walk(walk, tolerances)
    _check_pair(service.K, k, j)
    if n < 0:
        raise ValueError("n должно быть ≥ 0")
    if method == 'series':
        return float(service.transmission_series(n).arrival_probabilities(k, j)[n])
    if method == 'fourier':
        N = n_samples or max(256, 4 * n)
        if N <= n:
            raise ValueError("число отсчётов должно превышать n")
        thetas, values = sample_on_circle(lambda z: service.scattering_matrix(z).matrix[j, k], N)
        coefficient = np.mean(np.asarray(values) * np.exp(-1j * n * thetas))
        return float(abs(coefficient) ** 2)
    raise ValueError(f"неизвестный метод: {method!r}")


def exit_probability(
    walk: QuantumWalk,
    k: int,
    j: int,
    method: str = 'parseval',
    n_max: int = 200,
    n_samples: int = 256,
    tolerances: Optional[Tolerances] = None,
    max_workers: Optional[int] = None,
) -> ExitProbability:
    service = ScatteringService.for_walk(walk, tolerances)
    if method == 'parseval':
        return service.exit_probability_parseval(k, j, n_max)
    if method == 'quadrature':
        return service.exit_probability_quadrature(k, j, n_samples, max_workers)
    raise ValueError(f"неизвестный метод: {method!r}")


def eigenstate_component(
    walk: QuantumWalk,
    k: int,
    z: complex,
    location: Location,
    tolerances: Optional[Tolerances] = None,
) -> complex:
    return ScatteringService.for_walk(walk, tolerances).eigenstate_component(k, z, location)


def unitarity_defect(
    walk: QuantumWalk,
    n_angles: int = 64,
    tolerances: Optional[Tolerances] = None,
    max_workers: Optional[int] = None,
) -> float:
    return ScatteringService.for_walk(walk, tolerances).unitarity_defect(n_angles, max_workers)
