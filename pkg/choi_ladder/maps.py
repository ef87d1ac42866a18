"""
Map representations and conversions among them.

A map mu is held either as a Kraus list {A_l} (completely positive by construction),
as a Choi block matrix L_{n,m}(mu) whose block (i, j) is P_m mu(k_i k_j^*) P_m, or as an
oracle that evaluates mu on matrix units at any supported output level.

Block convention: block (i, j) occupies rows i*m .. (i+1)*m - 1 and columns
j*m .. (j+1)*m - 1, i.e. the input factor comes first in the tensor index. An eigenvector
f of length n*m unflattens to the m x n operator A with A[p, i] = f[i*m + p].
"""

from abc import ABC, abstractmethod
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import structlog

from .config import settings
from .errors import DimensionMismatchError, NotPSDError, OracleLevelUnsupportedError
from .linalg import (
    ComplexMatrix,
    EigenMethod,
    adjoint,
    as_complex_matrix,
    max_abs,
    partial_trace,
    psd_spectrum,
    tensor_index,
)

logger = structlog.get_logger(__name__)


def _frozen(a: ComplexMatrix) -> ComplexMatrix:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class KrausMap:
    """a -> sum_l A_l a A_l^*, each A_l of shape (dim_out, dim_in)."""

    dim_in: int
    dim_out: int
    operators: tuple[ComplexMatrix, ...]

    def __post_init__(self) -> None:
        if self.dim_in < 1 or self.dim_out < 1:
            raise DimensionMismatchError(
                f"Dimensions must be positive, got ({self.dim_in}, {self.dim_out})"
            )
        if len(self.operators) == 0:
            raise DimensionMismatchError("A Kraus map needs at least one operator")
        operators = tuple(
            _frozen(as_complex_matrix(op, f"operator {i}"))
            for i, op in enumerate(self.operators)
        )
        for i, op in enumerate(operators):
            if op.shape != (self.dim_out, self.dim_in):
                raise DimensionMismatchError(
                    f"Operator {i} has shape {op.shape}, "
                    f"expected ({self.dim_out}, {self.dim_in})"
                )
        object.__setattr__(self, "operators", operators)

    @classmethod
    def from_operators(cls, operators: Iterable[npt.ArrayLike]) -> "KrausMap":
        """Build a Kraus map, reading the dimensions off the first operator."""
        ops = [as_complex_matrix(op, "operator") for op in operators]
        if not ops:
            raise DimensionMismatchError("A Kraus map needs at least one operator")
        dim_out, dim_in = ops[0].shape
        return cls(dim_in=dim_in, dim_out=dim_out, operators=tuple(ops))

    def __len__(self) -> int:
        return len(self.operators)

    def stacked(self) -> npt.NDArray[np.complex128]:
        """Operators as one array of shape (count, dim_out, dim_in)."""
        return np.stack(self.operators)


@dataclass(frozen=True)
class ChoiBlockMatrix:
    """L_{n,m}(mu): an n x n array of m x m blocks, block (i, j) = P_m mu(k_i k_j^*) P_m."""

    n: int
    m: int
    matrix: ComplexMatrix

    def __post_init__(self) -> None:
        matrix = as_complex_matrix(self.matrix, "Choi matrix")
        size = self.n * self.m
        if self.n < 1 or self.m < 1 or matrix.shape != (size, size):
            raise DimensionMismatchError(
                f"Choi matrix of shape {matrix.shape} does not match n={self.n}, m={self.m}"
            )
        object.__setattr__(self, "matrix", _frozen(matrix))

    def block(self, i: int, j: int) -> ComplexMatrix:
        """Block (i, j), 0-based."""
        row = tensor_index(i, 0, self.m)
        col = tensor_index(j, 0, self.m)
        return self.matrix[row : row + self.m, col : col + self.m]

    def trace_matrix(self) -> ComplexMatrix:
        """[tr block(i, j)]_{i,j}: the output factor traced out."""
        return partial_trace(self.matrix, self.n, self.m, "second")

    def hermitian_deviation(self) -> float:
        return max_abs(self.matrix - adjoint(self.matrix))


def choi_from_kraus(K: KrausMap) -> ChoiBlockMatrix:
    """Choi block matrix of a Kraus map at its full dimensions.

    Block (i, j) is sum_l A_l e_i e_j^* A_l^*, so the matrix is sum_l f_l f_l^* with
    f_l the flattening of A_l.
    """
    flat = np.stack([op.T.reshape(-1) for op in K.operators])
    matrix = flat.T @ flat.conj()
    return ChoiBlockMatrix(n=K.dim_in, m=K.dim_out, matrix=matrix)


def unflatten(f: npt.ArrayLike, n: int, m: int) -> ComplexMatrix:
    """The m x n operator A with A[p, i] = f[i*m + p]."""
    return np.asarray(f, dtype=np.complex128).reshape(n, m).T


def kraus_from_choi(
    C: ChoiBlockMatrix, rank_tol: float | None = None, method: EigenMethod | None = None
) -> KrausMap:
    """Extract Kraus operators from a positive semidefinite Choi matrix.

    Eigenpairs (lambda_l, f_l) with lambda_l > rank_tol * lambda_max each give
    A_l = sqrt(lambda_l) * unflatten(f_l), ordered by descending lambda_l.

    Args:
        C: Choi block matrix
        rank_tol: Relative cutoff and PSD tolerance (defaults to settings.rank_tol)
        method: Eigensolver

    Returns:
        KrausMap of dims (C.n, C.m) whose Choi matrix reproduces C

    Raises:
        NotPSDError: C fails the PSD test; carries the minimum eigenvalue
    """
    rank_tol = settings.rank_tol if rank_tol is None else rank_tol
    verdict, spectrum = psd_spectrum(C.matrix, rank_tol, method)
    if not verdict.verdict:
        logger.warning(
            "Choi matrix is not positive semidefinite",
            n=C.n,
            m=C.m,
            min_eigenvalue=verdict.min_eigenvalue,
        )
        raise NotPSDError(verdict.min_eigenvalue)

    lam_max = spectrum.max_eigenvalue
    keep = spectrum.eigenvalues > rank_tol * lam_max
    if lam_max <= 0 or not keep.any():
        logger.info("Choi matrix is zero, returning the zero map", n=C.n, m=C.m)
        return KrausMap(
            dim_in=C.n, dim_out=C.m, operators=(np.zeros((C.m, C.n), dtype=np.complex128),)
        )

    operators = tuple(
        np.sqrt(lam) * unflatten(f, C.n, C.m)
        for lam, f in zip(
            spectrum.eigenvalues[keep], spectrum.eigenvectors[:, keep].T, strict=True
        )
    )
    logger.debug("Extracted Kraus operators", n=C.n, m=C.m, count=len(operators))
    return KrausMap(dim_in=C.n, dim_out=C.m, operators=operators)


def choi_reconstruction_error(K: KrausMap, C: ChoiBlockMatrix) -> float:
    """||Choi(K) - C||_max."""
    rebuilt = choi_from_kraus(K)
    if rebuilt.matrix.shape != C.matrix.shape:
        raise DimensionMismatchError("Kraus map and Choi matrix have different dimensions")
    return max_abs(rebuilt.matrix - C.matrix)


def apply(K: KrausMap, X: npt.ArrayLike) -> ComplexMatrix:
    """sum_l A_l X A_l^*."""
    x = as_complex_matrix(X, "X")
    if x.shape != (K.dim_in, K.dim_in):
        raise DimensionMismatchError(
            f"Input of shape {x.shape} does not match dim_in={K.dim_in}"
        )
    ops = K.stacked()
    return np.einsum("kij,jl,kml->im", ops, x, ops.conj())


def dual(K: KrausMap) -> KrausMap:
    """mu^*(c) = sum_l A_l^* c A_l, the adjoint under the trace pairing."""
    return KrausMap(
        dim_in=K.dim_out,
        dim_out=K.dim_in,
        operators=tuple(adjoint(op) for op in K.operators),
    )


def kraus_sum(K: KrausMap) -> ComplexMatrix:
    """sum_l A_l^* A_l; the identity exactly when mu is trace preserving."""
    ops = K.stacked()
    return np.einsum("kji,kjl->il", ops.conj(), ops)


def compose(second: KrausMap, first: KrausMap) -> KrausMap:
    """Kraus form of second o first, operators B_j A_i."""
    if second.dim_in != first.dim_out:
        raise DimensionMismatchError(
            f"Cannot compose: first maps into {first.dim_out}, second expects {second.dim_in}"
        )
    return KrausMap(
        dim_in=first.dim_in,
        dim_out=second.dim_out,
        operators=tuple(b @ a for b in second.operators for a in first.operators),
    )


def normalized_apply(
    K: KrausMap, X: npt.ArrayLike, cutoff: float = 1e-15
) -> tuple[ComplexMatrix, float]:
    """X -> mu(X) / tr mu(X), reached with probability tr mu(X).

    For a subchannel and a density matrix X the probability lies in [0, 1]; a vanishing
    probability returns the zero state.
    """
    image = apply(K, X)
    probability = float(np.trace(image).real)
    if probability <= cutoff:
        return np.zeros_like(image), 0.0
    return image / probability, probability


class MapOracle(ABC):
    """A map evaluable on matrix units k_i k_j^* at any output level m <= dim_out.

    Evaluation must be deterministic, and the level-m' image must equal the top-left
    m' x m' corner of the level-m image for m' <= m.
    """

    name: str = "oracle"

    def __init__(self, dim_in: int, dim_out: int):
        if dim_in < 1 or dim_out < 1:
            raise DimensionMismatchError(
                f"Oracle dimensions must be positive, got ({dim_in}, {dim_out})"
            )
        self.dim_in = dim_in
        self.dim_out = dim_out
        self._logger = logger.bind(oracle=self.name)

    @abstractmethod
    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        """P_m mu(k_i k_j^*) P_m as an m x m matrix (0-based i, j)."""

    def evaluate(self, i: int, j: int, m: int) -> ComplexMatrix:
        if not (0 <= i < self.dim_in and 0 <= j < self.dim_in):
            self._logger.warning("Matrix unit outside input dimension", i=i, j=j)
            raise OracleLevelUnsupportedError(max(i, j) + 1, self.dim_in)
        if not 1 <= m <= self.dim_out:
            self._logger.warning("Output level unsupported", level=m)
            raise OracleLevelUnsupportedError(m, self.dim_out)
        return self._unit_image(i, j, m)

    def exact_trace(self, i: int, j: int) -> complex | None:
        """Analytic tr mu(k_i k_j^*) when the family knows it."""
        return None

    def trace_functional(self, i: int, j: int) -> complex:
        """tr mu(k_i k_j^*), exact when available, else at full output level."""
        exact = self.exact_trace(i, j)
        if exact is not None:
            return exact
        return complex(np.trace(self.evaluate(i, j, self.dim_out)))

    @property
    def max_level(self) -> int:
        return max(self.dim_in, self.dim_out)

    def level_dims(self, level: int) -> tuple[int, int]:
        """(n, m) realizing ladder level ``level``; exhausted sides stay at full size."""
        if not 1 <= level <= self.max_level:
            raise OracleLevelUnsupportedError(level, self.max_level)
        return min(level, self.dim_in), min(level, self.dim_out)

    def apply(self, X: npt.ArrayLike, m: int | None = None) -> ComplexMatrix:
        """P_m mu(X) P_m by linearity over the matrix units."""
        x = as_complex_matrix(X, "X")
        if x.shape != (self.dim_in, self.dim_in):
            raise DimensionMismatchError(
                f"Input of shape {x.shape} does not match dim_in={self.dim_in}"
            )
        m = self.dim_out if m is None else m
        out = np.zeros((m, m), dtype=np.complex128)
        for i, j in zip(*np.nonzero(x), strict=True):
            out += x[i, j] * self.evaluate(int(i), int(j), m)
        return out

    def kraus_truncation(self, n: int) -> KrausMap:
        """Kraus form of mu restricted to input level n, via Choi extraction.

        Operators are dim_out x n, so the map agrees with ``evaluate`` on the first n
        input units at full output level. shift-isometry is the one exception: it maps
        into level n + 1 so that its operator stays an isometry.
        """
        return kraus_from_oracle(self, n, self.dim_out)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim_in={self.dim_in}, dim_out={self.dim_out})"


class KrausOracle(MapOracle):
    """Oracle backed by an explicit Kraus map."""

    name = "kraus"

    def __init__(self, kraus: KrausMap, name: str | None = None):
        if name:
            self.name = name
        super().__init__(kraus.dim_in, kraus.dim_out)
        self.kraus = kraus
        self._ops = kraus.stacked()

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        col_i = self._ops[:, :m, i]
        col_j = self._ops[:, :m, j]
        return np.einsum("kp,kq->pq", col_i, col_j.conj())

    def kraus_truncation(self, n: int) -> KrausMap:
        if n == self.dim_in:
            return self.kraus
        if not 1 <= n <= self.dim_in:
            raise OracleLevelUnsupportedError(n, self.dim_in)
        return KrausMap(
            dim_in=n,
            dim_out=self.dim_out,
            operators=tuple(op[:, :n] for op in self.kraus.operators),
        )


class ChoiOracle(MapOracle):
    """Oracle backed by a Choi block matrix; need not be completely positive."""

    name = "choi"

    def __init__(self, choi: ChoiBlockMatrix):
        super().__init__(choi.n, choi.m)
        self.choi = choi

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        return self.choi.block(i, j)[:m, :m].copy()


def choi_from_oracle(oracle: MapOracle, n: int, m: int) -> ChoiBlockMatrix:
    """Assemble L_{n,m}(mu) from n^2 oracle evaluations at output level m."""
    if not 1 <= n <= oracle.dim_in:
        raise OracleLevelUnsupportedError(n, oracle.dim_in)
    if not 1 <= m <= oracle.dim_out:
        raise OracleLevelUnsupportedError(m, oracle.dim_out)
    matrix = np.zeros((n * m, n * m), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            row = tensor_index(i, 0, m)
            col = tensor_index(j, 0, m)
            matrix[row : row + m, col : col + m] = oracle.evaluate(i, j, m)
    return ChoiBlockMatrix(n=n, m=m, matrix=matrix)


def kraus_from_oracle(
    oracle: MapOracle,
    n: int,
    m: int,
    rank_tol: float | None = None,
    method: EigenMethod | None = None,
) -> KrausMap:
    """Hellwig-Kraus form of mu at truncation (n, m)."""
    return kraus_from_choi(choi_from_oracle(oracle, n, m), rank_tol, method)
