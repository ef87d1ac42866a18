"""
Dense complex linear algebra kernels.

Hermitian eigendecomposition by cyclic Jacobi rotations, an SVD built on top of it,
positive-semidefinite testing, Kronecker products and partial traces.

Tensor index convention (shared by partial_trace, Choi matrices and dilations):
the first factor is the slow index, so basis vector e_a (x) e_b of C^d1 (x) C^d2 sits
at position ``a * d2 + b``.
"""

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
import numpy.typing as npt
import structlog

from .config import settings
from .errors import (
    DimensionMismatchError,
    DimensionOverflowError,
    NonFiniteError,
    NonSquareError,
    NoConvergenceError,
    NotHermitianError,
)

logger = structlog.get_logger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]
EigenMethod = Literal["jacobi", "lapack"]

# Eigenvector phase pivots must exceed this modulus
PHASE_CUTOFF = 1e-12
# Singular values at or below this fraction of sigma_1 are reported as exactly 0
NULL_SINGULAR_REL = 1e-14


def as_complex_matrix(a: npt.ArrayLike, name: str = "matrix") -> ComplexMatrix:
    """Coerce ``a`` to a non-empty, finite, two-dimensional complex array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or 0 in arr.shape:
        raise DimensionMismatchError(
            f"{name} must be a non-empty 2-D array, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    return arr


def tensor_index(first: int, second: int, dim_second: int) -> int:
    """Position of e_first (x) e_second in the flattened tensor product."""
    return first * dim_second + second


def adjoint(a: ComplexMatrix) -> ComplexMatrix:
    return a.conj().T


def hermitian_part(a: ComplexMatrix) -> ComplexMatrix:
    return (a + a.conj().T) / 2


def max_abs(a: npt.ArrayLike) -> float:
    """Entrywise max norm ``||a||_max``."""
    arr = np.asarray(a)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def _require_square(a: ComplexMatrix) -> None:
    if a.shape[0] != a.shape[1]:
        raise NonSquareError(a.shape)


@dataclass(frozen=True)
class HermitianEig:
    """Spectral decomposition A = V diag(eigenvalues) V^*, eigenvalues descending."""

    eigenvalues: RealVector
    eigenvectors: ComplexMatrix

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class SingularDecomposition:
    """g = sum_i sigma_i k_i h_i^*, with k_i the columns of ``left`` and h_i of ``right``."""

    singular_values: RealVector
    left: ComplexMatrix
    right: ComplexMatrix

    def reconstruct(self, rank: int | None = None) -> ComplexMatrix:
        """Partial sum of the first ``rank`` terms (all terms when None)."""
        r = len(self.singular_values) if rank is None else rank
        k = self.left[:, :r]
        h = self.right[:, :r]
        return (k * self.singular_values[:r]) @ h.conj().T


class PSDVerdict(NamedTuple):
    verdict: bool
    min_eigenvalue: float


def _off_diagonal_norm(a: ComplexMatrix) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi(
    h: ComplexMatrix, max_sweeps: int, rel_offdiag: float
) -> tuple[RealVector, ComplexMatrix, int]:
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Each rotation first removes the phase of a_pq, then applies the real
    symmetric rotation that annihilates it.
    """
    a = h.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    threshold = rel_offdiag * float(np.linalg.norm(a))
    skip_below = 1e-2 * threshold / n

    sweeps = 0
    off = _off_diagonal_norm(a)
    while off > threshold:
        if sweeps >= max_sweeps:
            raise NoConvergenceError(sweeps, off)
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                abs_b = abs(b)
                if abs_b <= skip_below:
                    continue
                tau = (a[q, q].real - a[p, p].real) / (2.0 * abs_b)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                e = b / abs_b
                e_bar = e.conjugate()

                # A <- A G with G = [[c, s], [-s e_bar, c e_bar]]
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * e_bar * col_q
                a[:, q] = s * col_p + c * e_bar * col_q
                # A <- G^* A
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * e * row_q
                a[q, :] = s * row_p + c * e * row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * e_bar * vec_q
                v[:, q] = s * vec_p + c * e_bar * vec_q
        sweeps += 1
        off = _off_diagonal_norm(a)

    return np.diag(a).real.copy(), v, sweeps


def _fix_phases(v: ComplexMatrix) -> ComplexMatrix:
    """Make the first entry of modulus > PHASE_CUTOFF in every column real non-negative."""
    v = v.copy()
    cols = np.arange(v.shape[1])
    mask = np.abs(v) > PHASE_CUTOFF
    has_pivot = mask.any(axis=0)
    first = mask.argmax(axis=0)
    pivots = v[first, cols]
    phases = np.ones(v.shape[1], dtype=np.complex128)
    phases[has_pivot] = pivots[has_pivot].conj() / np.abs(pivots[has_pivot])
    v *= phases
    v[first[has_pivot], cols[has_pivot]] = v[first[has_pivot], cols[has_pivot]].real
    return v


def _spectrum(
    h: ComplexMatrix, method: EigenMethod | None
) -> tuple[RealVector, ComplexMatrix]:
    """Sorted, phase-normalized spectrum of an already Hermitian matrix."""
    method = method or settings.eigensolver
    if method == "jacobi":
        w, v, sweeps = _jacobi(h, settings.jacobi_max_sweeps, settings.jacobi_rel_offdiag)
        logger.debug("Jacobi converged", dimension=h.shape[0], sweeps=sweeps)
    elif method == "lapack":
        w, v = np.linalg.eigh(h)
    else:
        raise ValueError(f"Unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    return np.asarray(w[order], dtype=np.float64), _fix_phases(v[:, order])


def hermitian_eig(
    A: npt.ArrayLike, tol: float | None = None, method: EigenMethod | None = None
) -> HermitianEig:
    """Full spectral decomposition of a caller-declared Hermitian matrix.

    Args:
        A: Square matrix with ``||A - A^*||_max <= tol``
        tol: Hermiticity tolerance (defaults to settings.psd_tol)
        method: "jacobi" (cyclic rotations) or "lapack" (numpy.linalg.eigh);
            defaults to settings.eigensolver

    Returns:
        HermitianEig with eigenvalues sorted descending

    Raises:
        NonSquareError, NotHermitianError, NoConvergenceError
    """
    a = as_complex_matrix(A)
    _require_square(a)
    tol = settings.psd_tol if tol is None else tol
    deviation = max_abs(a - adjoint(a))
    if deviation > tol:
        raise NotHermitianError(deviation, tol)
    w, v = _spectrum(hermitian_part(a), method)
    return HermitianEig(eigenvalues=w, eigenvectors=v)


def svd(A: npt.ArrayLike, method: EigenMethod | None = None) -> SingularDecomposition:
    """Thin singular value decomposition through the spectra of A^*A and AA^*.

    Right vectors come from A^*A; each left vector is paired as k_i = A h_i / sigma_i so
    phases agree. Singular values at or below NULL_SINGULAR_REL * sigma_1 are reported
    as exactly 0, so the reconstruction error is at most that floor per dropped term.
    Their left vectors are completed from the spectrum of AA^*.
    """
    a = as_complex_matrix(A)
    rows, cols = a.shape
    if rows < cols:
        flipped = svd(adjoint(a), method=method)
        return SingularDecomposition(
            singular_values=flipped.singular_values,
            left=flipped.right,
            right=flipped.left,
        )

    _, right = _spectrum(hermitian_part(adjoint(a) @ a), method)
    images = a @ right
    sigma = np.linalg.norm(images, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    right = right[:, order]
    images = images[:, order]

    cutoff = NULL_SINGULAR_REL * sigma[0]
    live = sigma > cutoff
    left = np.zeros((rows, cols), dtype=np.complex128)
    left[:, live] = images[:, live] / sigma[live]
    sigma = np.where(live, sigma, 0.0)

    missing = int((~live).sum())
    if missing:
        _, candidates = _spectrum(hermitian_part(a @ adjoint(a)), method)
        basis = [left[:, i] for i in np.flatnonzero(live)]
        completion = []
        # Trailing eigenvectors of AA^* span the null space of A^*
        for idx in range(rows - 1, -1, -1):
            if len(completion) == missing:
                break
            vec = candidates[:, idx].copy()
            for u in basis + completion:
                vec -= (u.conj() @ vec) * u
            norm = np.linalg.norm(vec)
            if norm > 0.5:
                completion.append(vec / norm)
        left[:, ~live] = _fix_phases(np.column_stack(completion))

    return SingularDecomposition(singular_values=sigma, left=left, right=right)


def psd_spectrum(
    A: npt.ArrayLike, tol: float | None = None, method: EigenMethod | None = None
) -> tuple[PSDVerdict, HermitianEig]:
    """PSD verdict together with the spectrum of the Hermitian part it was read from."""
    a = as_complex_matrix(A)
    _require_square(a)
    tol = settings.psd_tol if tol is None else tol
    hermitian = max_abs(a - adjoint(a)) <= tol
    w, v = _spectrum(hermitian_part(a), method)
    lam_max, lam_min = float(w[0]), float(w[-1])
    verdict = hermitian and lam_min >= -tol * max(1.0, lam_max)
    return (
        PSDVerdict(verdict=bool(verdict), min_eigenvalue=lam_min),
        HermitianEig(eigenvalues=w, eigenvectors=v),
    )


def is_psd(
    A: npt.ArrayLike, tol: float | None = None, method: EigenMethod | None = None
) -> PSDVerdict:
    """Positive-semidefinite test with a relative eigenvalue tolerance.

    The verdict is true iff A is Hermitian within ``tol`` and
    ``lambda_min >= -tol * max(1, lambda_max)``. The minimum eigenvalue of the
    Hermitian part is always returned as witness.
    """
    verdict, _ = psd_spectrum(A, tol, method)
    return verdict


def kron(A: npt.ArrayLike, B: npt.ArrayLike, cap: int | None = None) -> ComplexMatrix:
    """Kronecker product A (x) B, refusing outputs larger than ``cap`` per side."""
    a = as_complex_matrix(A, "A")
    b = as_complex_matrix(B, "B")
    cap = settings.max_dimension if cap is None else cap
    dimension = max(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    if dimension > cap:
        raise DimensionOverflowError(dimension, cap)
    return np.kron(a, b)


def partial_trace(
    C: npt.ArrayLike,
    dim_first: int,
    dim_second: int,
    traced: Literal["first", "second"],
) -> ComplexMatrix:
    """Trace out one factor of an operator on C^dim_first (x) C^dim_second."""
    c = as_complex_matrix(C)
    expected = dim_first * dim_second
    if c.shape != (expected, expected):
        raise DimensionMismatchError(
            f"Operator of shape {c.shape} does not act on a "
            f"{dim_first}x{dim_second} tensor product"
        )
    t = c.reshape(dim_first, dim_second, dim_first, dim_second)
    if traced == "first":
        return np.einsum("abad->bd", t)
    if traced == "second":
        return np.einsum("abcb->ac", t)
    raise ValueError(f"traced must be 'first' or 'second', got {traced!r}")
