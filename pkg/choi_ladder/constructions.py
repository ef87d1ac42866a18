"""
Map builders: the named builtin families and the trace-out construction.

The trace-out channel of a dilation (U, b, Q) on K (x) H is

    mu(a) = tr_K[(Q (x) I) U (a (x) b) U^* (Q (x) I)]

with K the first tensor factor. Its Kraus operators are indexed by an orthonormal basis
{k_p} of the range of Q and the eigenpairs (lambda_r, phi_r) of b:

    A_{p,r} x = sqrt(lambda_r) (k_p^* (x) I_H) U (x (x) phi_r)
"""

from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .config import settings
from .errors import BadParamsError, InvalidDilationError, UnknownBuiltinError
from .linalg import (
    ComplexMatrix,
    adjoint,
    as_complex_matrix,
    hermitian_eig,
    is_psd,
    kron,
    max_abs,
    partial_trace,
)
from .maps import KrausMap, KrausOracle, MapOracle

logger = structlog.get_logger(__name__)

UNITARY_TOL = 1e-10
TRACE_TOL = 1e-12
PROJECTION_TOL = 1e-10

SeedLike = int | np.random.Generator | None


def _unit(i: int, j: int, m: int, scale: float = 1.0) -> ComplexMatrix:
    """scale * e_i e_j^* at level m; zero when either index falls outside."""
    out = np.zeros((m, m), dtype=np.complex128)
    if 0 <= i < m and 0 <= j < m:
        out[i, j] = scale
    return out


# Builtin families (0-based indices throughout)


class IdentityOracle(MapOracle):
    name = "identity"

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        return _unit(i, j, m)

    def exact_trace(self, i: int, j: int) -> complex:
        return complex(i == j)

    def kraus_truncation(self, n: int) -> KrausMap:
        return KrausMap.from_operators([np.eye(self.dim_out, n)])


class TransposeOracle(MapOracle):
    """Positive but not completely positive; has no Kraus form."""

    name = "transpose"

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        return _unit(j, i, m)

    def exact_trace(self, i: int, j: int) -> complex:
        return complex(i == j)


class DepolarizeOracle(MapOracle):
    """a -> tr(a) I / dim_out."""

    name = "depolarize"

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        if i != j:
            return np.zeros((m, m), dtype=np.complex128)
        return np.eye(m, dtype=np.complex128) / self.dim_out

    def exact_trace(self, i: int, j: int) -> complex:
        return complex(i == j)

    def kraus_truncation(self, n: int) -> KrausMap:
        scale = 1.0 / np.sqrt(self.dim_out)
        operators = []
        for p in range(self.dim_out):
            for q in range(n):
                op = np.zeros((self.dim_out, n), dtype=np.complex128)
                op[p, q] = scale
                operators.append(op)
        return KrausMap(dim_in=n, dim_out=self.dim_out, operators=tuple(operators))


class ShiftIsometryOracle(MapOracle):
    """a -> S a S^* with S e_k = e_{k+1}."""

    name = "shift-isometry"

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        return _unit(i + 1, j + 1, m)

    def exact_trace(self, i: int, j: int) -> complex:
        return complex(i == j)

    def kraus_truncation(self, n: int) -> KrausMap:
        # Level n lands in level n + 1 so the operator stays an isometry
        return KrausMap.from_operators([np.eye(n + 1, n, k=-1)])


class CoshiftSubchannelOracle(MapOracle):
    """a -> S^* a S; kills the first basis vector."""

    name = "coshift-subchannel"

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        if i == 0 or j == 0:
            return np.zeros((m, m), dtype=np.complex128)
        return _unit(i - 1, j - 1, m)

    def exact_trace(self, i: int, j: int) -> complex:
        return complex(i == j and i >= 1)

    def kraus_truncation(self, n: int) -> KrausMap:
        return KrausMap.from_operators([np.eye(self.dim_out, n, k=1)])


class DiagonalDampingOracle(MapOracle):
    """e_i e_j^* -> gamma^((i+j)/2) e_i e_j^*, Kraus operator diag(gamma^(k/2))."""

    name = "diagonal-damping"

    def __init__(self, dim_in: int, dim_out: int, gamma: float):
        super().__init__(dim_in, dim_out)
        self.gamma = gamma

    def _unit_image(self, i: int, j: int, m: int) -> ComplexMatrix:
        return _unit(i, j, m, self.gamma ** ((i + j) / 2))

    def exact_trace(self, i: int, j: int) -> complex:
        return complex(self.gamma**i) if i == j else 0j

    def kraus_truncation(self, n: int) -> KrausMap:
        weights = self.gamma ** (np.arange(n) / 2)
        return KrausMap.from_operators([np.eye(self.dim_out, n) * weights])


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DampingParams(_Params):
    gamma: float = Field(gt=0.0, le=1.0)


class RandomKrausParams(_Params):
    seed: int | None = None
    k: int = Field(2, ge=1, le=64)
    normalize: bool = True


@dataclass(frozen=True)
class _Builtin:
    params_model: type[_Params]
    build: Callable[[Any, int, int, int], MapOracle]


def _build_random_kraus(
    params: RandomKrausParams, dim_in: int, dim_out: int, seed: int
) -> MapOracle:
    if params.normalize and params.k * dim_out < dim_in:
        raise BadParamsError(
            f"random-kraus with normalize needs k * dim_out >= dim_in, "
            f"got k={params.k}, dim_out={dim_out}, dim_in={dim_in}"
        )
    rng = np.random.default_rng(params.seed if params.seed is not None else seed)
    kraus = random_kraus_map(dim_in, dim_out, params.k, rng, normalize=params.normalize)
    return KrausOracle(kraus, name="random-kraus")


BUILTINS: dict[str, _Builtin] = {
    "identity": _Builtin(_Params, lambda _p, n, m, _s: IdentityOracle(n, m)),
    "transpose": _Builtin(_Params, lambda _p, n, m, _s: TransposeOracle(n, m)),
    "depolarize": _Builtin(_Params, lambda _p, n, m, _s: DepolarizeOracle(n, m)),
    "shift-isometry": _Builtin(_Params, lambda _p, n, m, _s: ShiftIsometryOracle(n, m)),
    "coshift-subchannel": _Builtin(
        _Params, lambda _p, n, m, _s: CoshiftSubchannelOracle(n, m)
    ),
    "diagonal-damping": _Builtin(
        DampingParams, lambda p, n, m, _s: DiagonalDampingOracle(n, m, p.gamma)
    ),
    "random-kraus": _Builtin(RandomKrausParams, _build_random_kraus),
}


def builtin_oracle(
    name: str,
    params: Mapping[str, Any] | None,
    dims: tuple[int, int],
    seed: int | None = None,
) -> MapOracle:
    """Instantiate a named builtin family at (dim_in, dim_out).

    Raises:
        UnknownBuiltinError: name is not registered
        BadParamsError: parameters missing, unknown or out of range
    """
    builtin = BUILTINS.get(name)
    if builtin is None:
        raise UnknownBuiltinError(name, sorted(BUILTINS))
    try:
        parsed = builtin.params_model.model_validate(dict(params or {}))
    except ValidationError as e:
        raise BadParamsError(f"Invalid parameters for {name!r}: {e}") from e

    dim_in, dim_out = dims
    oracle = builtin.build(parsed, dim_in, dim_out, settings.seed if seed is None else seed)
    logger.debug("Built builtin oracle", name=name, dim_in=dim_in, dim_out=dim_out)
    return oracle


# Random generators


def random_unitary(d: int, rng: SeedLike = None) -> ComplexMatrix:
    """Haar-like unitary: QR of a complex Gaussian with the R diagonal phases removed."""
    rng = np.random.default_rng(rng)
    x = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(x)
    diag = np.diag(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def random_density(d: int, rng: SeedLike = None, rank: int | None = None) -> ComplexMatrix:
    """Density matrix G G^* / tr(G G^*) with G a d x rank complex Gaussian."""
    rng = np.random.default_rng(rng)
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ adjoint(g)
    return rho / np.trace(rho).real


def random_projection(d: int, rank: int, rng: SeedLike = None) -> ComplexMatrix:
    """Orthogonal projection onto a random rank-dimensional subspace of C^d."""
    if not 0 <= rank <= d:
        raise ValueError(f"Projection rank {rank} is outside 0..{d}")
    if rank == d:
        return np.eye(d, dtype=np.complex128)
    v = random_unitary(d, rng)[:, :rank]
    return v @ adjoint(v)


def random_kraus_map(
    dim_in: int,
    dim_out: int,
    count: int,
    rng: SeedLike = None,
    normalize: bool = False,
) -> KrausMap:
    """Kraus map with complex Gaussian operators.

    With ``normalize`` the operators are right-multiplied by T^{-1/2}, T = sum A^* A,
    giving a channel. T is singular when count * dim_out < dim_in, so that case is
    refused.
    """
    if normalize and count * dim_out < dim_in:
        raise ValueError(
            f"Cannot normalize {count} operators of shape ({dim_out}, {dim_in}): "
            "count * dim_out must be at least dim_in"
        )
    rng = np.random.default_rng(rng)
    shape = (count, dim_out, dim_in)
    ops = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    if normalize:
        t = np.einsum("kji,kjl->il", ops.conj(), ops)
        spectrum = hermitian_eig(t)
        if spectrum.min_eigenvalue <= settings.rank_tol * spectrum.max_eigenvalue:
            raise ValueError("Cannot normalize: sum of A^* A is numerically singular")
        v = spectrum.eigenvectors
        inv_sqrt = (v / np.sqrt(spectrum.eigenvalues)) @ adjoint(v)
        ops = ops @ inv_sqrt
    return KrausMap(dim_in=dim_in, dim_out=dim_out, operators=tuple(ops))


# Trace-out construction


@dataclass(frozen=True)
class DilationSpec:
    """Unitary U on K (x) H, environment state b on H, projection Q on K."""

    dim_k: int
    dim_h: int
    unitary: ComplexMatrix
    environment: ComplexMatrix
    projection: ComplexMatrix

    def __post_init__(self) -> None:
        if self.dim_k < 1 or self.dim_h < 1:
            raise InvalidDilationError(
                "dimensions", f"dim_K={self.dim_k}, dim_H={self.dim_h}"
            )
        total = self.dim_k * self.dim_h
        for field, expected in (
            ("unitary", total),
            ("environment", self.dim_h),
            ("projection", self.dim_k),
        ):
            value = as_complex_matrix(getattr(self, field), field)
            if value.shape != (expected, expected):
                raise InvalidDilationError(
                    "dimensions", f"{field} has shape {value.shape}, expected {expected}"
                )
            object.__setattr__(self, field, value)
        self._validate()

    def _validate(self) -> None:
        u, b, q = self.unitary, self.environment, self.projection

        deviation = max_abs(adjoint(u) @ u - np.eye(u.shape[0]))
        if deviation > UNITARY_TOL:
            raise InvalidDilationError("unitary", f"max |U^*U - I| = {deviation:.3e}")

        trace = np.trace(b)
        if abs(trace - 1) > TRACE_TOL:
            raise InvalidDilationError("trace", f"tr b = {trace.real:.12g}")
        verdict = is_psd(b)
        if not verdict.verdict:
            raise InvalidDilationError(
                "psd", f"min eigenvalue of b = {verdict.min_eigenvalue:.3e}"
            )

        hermitian_dev = max_abs(q - adjoint(q))
        idempotent_dev = max_abs(q @ q - q)
        if max(hermitian_dev, idempotent_dev) > PROJECTION_TOL:
            raise InvalidDilationError(
                "projection",
                f"max |Q - Q^*| = {hermitian_dev:.3e}, max |Q^2 - Q| = {idempotent_dev:.3e}",
            )


def traceout_channel(spec: DilationSpec, cutoff: float | None = None) -> KrausMap:
    """Kraus form of the trace-out map of a dilation, dims (dim_in=dim_K, dim_out=dim_H).

    Environment eigenvalues at or below ``cutoff`` emit no operator, so the count is
    rank(Q) * rank(b). A zero projection yields a single zero operator.
    """
    cutoff = settings.environment_cutoff if cutoff is None else cutoff
    dk, dh = spec.dim_k, spec.dim_h

    q_eig = hermitian_eig(spec.projection, PROJECTION_TOL)
    range_basis = q_eig.eigenvectors[:, q_eig.eigenvalues > 0.5]
    b_eig = hermitian_eig(spec.environment)
    kept = b_eig.eigenvalues > cutoff
    weights = np.sqrt(b_eig.eigenvalues[kept])
    states = b_eig.eigenvectors[:, kept]

    if range_basis.shape[1] == 0 or states.shape[1] == 0:
        logger.info("Trace-out map is zero", dim_k=dk, dim_h=dh)
        return KrausMap(
            dim_in=dk, dim_out=dh, operators=(np.zeros((dh, dk), dtype=np.complex128),)
        )

    # U[(a, c), (x, d)] with a, x indexing K and c, d indexing H
    u4 = spec.unitary.reshape(dk, dh, dk, dh)
    blocks = np.einsum("ap,acxd,dr->prcx", range_basis.conj(), u4, states)
    blocks = blocks * weights[None, :, None, None]
    operators = tuple(blocks.reshape(-1, dh, dk))
    logger.debug(
        "Built trace-out Kraus form",
        dim_k=dk,
        dim_h=dh,
        projection_rank=range_basis.shape[1],
        environment_rank=states.shape[1],
    )
    return KrausMap(dim_in=dk, dim_out=dh, operators=operators)


def traceout_state(
    spec: DilationSpec, a: npt.ArrayLike
) -> tuple[ComplexMatrix, ComplexMatrix]:
    """The intermediate e = (Q (x) I) U (a (x) b) U^* (Q (x) I) and tr_K e, computed directly."""
    a = as_complex_matrix(a, "a")
    q_full = kron(spec.projection, np.eye(spec.dim_h))
    evolved = spec.unitary @ kron(a, spec.environment) @ adjoint(spec.unitary)
    e = q_full @ evolved @ q_full
    return e, partial_trace(e, spec.dim_k, spec.dim_h, "first")


def random_dilation(
    dim_k: int,
    dim_h: int,
    rng: SeedLike = None,
    q_rank: int | None = None,
    b_rank: int | None = None,
) -> DilationSpec:
    """Random valid dilation; q_rank defaults to dim_k (Q = I)."""
    rng = np.random.default_rng(rng)
    q_rank = dim_k if q_rank is None else q_rank
    return DilationSpec(
        dim_k=dim_k,
        dim_h=dim_h,
        unitary=random_unitary(dim_k * dim_h, rng),
        environment=random_density(dim_h, rng, rank=b_rank),
        projection=random_projection(dim_k, q_rank, rng),
    )
