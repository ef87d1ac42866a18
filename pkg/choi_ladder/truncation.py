"""
Truncation projections, compressions and Schatten norms.

P_n is always the coordinate projection onto the first n basis vectors; compressed
matrices keep their ambient dimension (zero padded).
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel

from .config import settings
from .errors import (
    DimensionMismatchError,
    InvalidExponentError,
    NonSquareError,
    TailFormulaViolationError,
    TruncationTooLargeError,
)
from .linalg import ComplexMatrix, as_complex_matrix, svd

if TYPE_CHECKING:
    from .maps import MapOracle

logger = structlog.get_logger(__name__)

TAIL_AGREEMENT_REL = 1e-9

_INFINITY_NAMES = {"inf", "infinity", "∞", "+inf"}


@dataclass(frozen=True)
class SchattenExponent:
    """Exponent p of a Schatten norm: a real p >= 1 or infinity."""

    p: float

    def __post_init__(self) -> None:
        if math.isnan(self.p) or self.p < 1:
            raise InvalidExponentError(self.p)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.p)

    def __str__(self) -> str:
        if self.is_infinite:
            return "inf"
        return f"{self.p:g}"


INFINITY = SchattenExponent(math.inf)


def parse_exponent(value: "SchattenExponent | float | int | str") -> SchattenExponent:
    """Accept an exponent object, a number, or text such as "2" or "inf"."""
    if isinstance(value, SchattenExponent):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in _INFINITY_NAMES:
            return INFINITY
        try:
            return SchattenExponent(float(text))
        except ValueError as e:
            raise InvalidExponentError(value) from e
    return SchattenExponent(float(value))


def compress(g: npt.ArrayLike, n: int) -> ComplexMatrix:
    """P_n g P_n at the ambient dimension: entries (i, j) with i, j < n kept."""
    a = as_complex_matrix(g, "g")
    if a.shape[0] != a.shape[1]:
        raise NonSquareError(a.shape)
    if not 1 <= n <= a.shape[0]:
        raise TruncationTooLargeError(n, a.shape[0])
    out = np.zeros_like(a)
    out[:n, :n] = a[:n, :n]
    return out


def _p_norm(values: npt.NDArray[np.float64], p: SchattenExponent) -> float:
    if values.size == 0:
        return 0.0
    top = float(values.max())
    if top == 0.0:
        return 0.0
    if p.is_infinite:
        return top
    # Scaled to keep large exponents finite
    return top * float(np.sum((values / top) ** p.p)) ** (1.0 / p.p)


def schatten_norm(g: npt.ArrayLike, p: "SchattenExponent | float | str") -> float:
    """(sum_i sigma_i^p)^(1/p), or sigma_1 for p = infinity."""
    exponent = parse_exponent(p)
    return _p_norm(svd(g).singular_values, exponent)


def operator_norm(g: npt.ArrayLike) -> float:
    return schatten_norm(g, INFINITY)


def truncation_residual(
    g: npt.ArrayLike, p: "SchattenExponent | float | str", n: int
) -> float:
    """||P_n g P_n - g||_p."""
    a = as_complex_matrix(g, "g")
    return schatten_norm(compress(a, n) - a, p)


def svd_tail_norm(g: npt.ArrayLike, p: "SchattenExponent | float | str", m: int) -> float:
    """||g - g_m||_p for the rank-m SVD partial sum g_m, checked against the tail formula.

    The residual is measured directly and compared with (sum_{j>m} sigma_j^p)^(1/p);
    disagreement means the SVD kernel is defective.

    Raises:
        TruncationTooLargeError: m outside 0..min(rows, cols)
        TailFormulaViolationError: the two computations disagree
    """
    exponent = parse_exponent(p)
    a = as_complex_matrix(g, "g")
    rank_cap = min(a.shape)
    if not 0 <= m <= rank_cap:
        raise TruncationTooLargeError(m, rank_cap)

    decomposition = svd(a)
    direct = schatten_norm(a - decomposition.reconstruct(m), exponent)
    formula = _p_norm(decomposition.singular_values[m:], exponent)
    if abs(direct - formula) > TAIL_AGREEMENT_REL * max(1.0, formula):
        logger.error(
            "SVD tail formula violated",
            p=str(exponent),
            m=m,
            direct=direct,
            formula=formula,
        )
        raise TailFormulaViolationError(direct, formula)
    return direct


def geometric_decay_operator(dim: int, ratio: float = 0.5) -> ComplexMatrix:
    """diag(ratio^1, ..., ratio^dim), the built-in slowly truncating test operator."""
    return np.diag(ratio ** np.arange(1, dim + 1)).astype(np.complex128)


class ConvergenceRow(BaseModel):
    level: int
    residual: float
    warn: bool


class ConvergenceTable(BaseModel):
    """Residuals per truncation level with informational warnings."""

    quantity: str
    p: str
    eps: float
    rows: list[ConvergenceRow]
    warn: bool


def _tabulate(
    quantity: str,
    exponent: SchattenExponent,
    levels: Sequence[int],
    residuals: Sequence[float],
    eps: float,
) -> ConvergenceTable:
    rows = []
    previous = None
    for level, residual in zip(levels, residuals, strict=True):
        # Flag tails that stop decreasing before reaching eps
        stalled = previous is not None and residual > eps and residual >= previous - eps
        rows.append(ConvergenceRow(level=level, residual=residual, warn=stalled))
        previous = residual
    table = ConvergenceTable(
        quantity=quantity,
        p=str(exponent),
        eps=eps,
        rows=rows,
        warn=any(row.warn for row in rows),
    )
    if table.warn:
        logger.warning(
            "Truncation residuals not decreasing",
            quantity=quantity,
            levels=[row.level for row in rows if row.warn],
        )
    return table


def _check_levels(levels: Sequence[int], dim: int) -> list[int]:
    levels = list(levels)
    if not levels:
        raise ValueError("Schedule must not be empty")
    if any(b <= a for a, b in zip(levels, levels[1:], strict=False)):
        raise ValueError(f"Schedule must be strictly ascending, got {levels}")
    for level in levels:
        if not 1 <= level <= dim:
            raise TruncationTooLargeError(level, dim)
    return levels


def residual_schedule(
    g: npt.ArrayLike,
    p: "SchattenExponent | float | str",
    levels: Sequence[int],
    eps: float | None = None,
) -> ConvergenceTable:
    """truncation_residual over an ascending schedule of levels."""
    exponent = parse_exponent(p)
    a = as_complex_matrix(g, "g")
    eps = settings.convergence_eps if eps is None else eps
    levels = _check_levels(levels, a.shape[0])
    residuals = [truncation_residual(a, exponent, n) for n in levels]
    return _tabulate("operator", exponent, levels, residuals, eps)


def map_truncation_residuals(
    oracle: "MapOracle",
    g: npt.ArrayLike,
    p: "SchattenExponent | float | str",
    levels: Sequence[int],
    eps: float | None = None,
) -> ConvergenceTable:
    """||mu(P_n g P_n) - mu(g)||_p over a schedule, mu evaluated at full output level."""
    exponent = parse_exponent(p)
    a = as_complex_matrix(g, "g")
    eps = settings.convergence_eps if eps is None else eps
    if a.shape != (oracle.dim_in, oracle.dim_in):
        raise DimensionMismatchError(
            f"Probe of shape {a.shape} does not match input dimension {oracle.dim_in}"
        )
    levels = _check_levels(levels, oracle.dim_in)
    image = oracle.apply(a, oracle.dim_out)
    residuals = [
        schatten_norm(oracle.apply(compress(a, n), oracle.dim_out) - image, exponent)
        for n in levels
    ]
    return _tabulate("map", exponent, levels, residuals, eps)
