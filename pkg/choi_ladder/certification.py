"""
Certification of complete positivity, subchannel and channel properties.

Each ladder level n is checked on L_{n_in, m} with n_in = min(n, dim_in) and
m = min(n, dim_out), so a side whose dimension is exhausted stays at full size.
A finite schedule is evidence for the property on every level it covers, not a proof
for the untruncated map.
"""

from collections.abc import Sequence
from typing import Literal

import numpy as np
import structlog
from pydantic import BaseModel, Field

from .config import settings
from .constructions import random_density
from .errors import OracleLevelUnsupportedError
from .linalg import (
    ComplexMatrix,
    EigenMethod,
    hermitian_eig,
    hermitian_part,
    is_psd,
)
from .maps import (
    KrausMap,
    MapOracle,
    apply,
    choi_from_kraus,
    choi_from_oracle,
    dual,
)

logger = structlog.get_logger(__name__)

Mode = Literal["cp", "subchannel", "channel"]
MODES: tuple[Mode, ...] = ("cp", "subchannel", "channel")


class LevelResult(BaseModel):
    """Evidence gathered at one ladder level."""

    level: int
    n: int = Field(description="Input truncation actually used")
    m: int = Field(description="Output truncation actually used")
    choi_min_eigenvalue: float
    choi_psd: bool
    subchannel_max_excess: float | None = None
    trace_preservation_max_dev: float | None = None


class CPVerdict(BaseModel):
    passed: bool
    witness_level: int | None = None
    witness_min_eigenvalue: float | None = None


class Verdicts(BaseModel):
    cp: CPVerdict
    subchannel: bool | None = None
    channel: bool | None = None


class Tolerances(BaseModel):
    psd: float
    subchannel: float
    trace: float


class CertificationReport(BaseModel):
    oracle: str
    dim_in: int
    dim_out: int
    mode: Mode
    schedule: list[int]
    levels: list[LevelResult]
    verdicts: Verdicts
    tolerances: Tolerances

    @property
    def passed(self) -> bool:
        """Verdict of the requested mode."""
        if self.mode == "channel":
            return bool(self.verdicts.channel)
        if self.mode == "subchannel":
            return bool(self.verdicts.subchannel)
        return self.verdicts.cp.passed


def resolve_schedule(requested: Sequence[int] | None, oracle: MapOracle) -> list[int]:
    """Validate a requested ladder, or derive the default one for this oracle.

    The default keeps the configured levels up to max(dim_in, dim_out) and ends with
    that top level itself.
    """
    top = oracle.max_level
    if requested is None:
        levels = [n for n in settings.default_schedule if n < top]
        return [*levels, top]

    levels = list(requested)
    if not levels:
        raise ValueError("Schedule must not be empty")
    if any(b <= a for a, b in zip(levels, levels[1:], strict=False)):
        raise ValueError(f"Schedule must be strictly ascending, got {levels}")
    if levels[0] < 1:
        raise ValueError(f"Schedule levels must be positive, got {levels}")
    if levels[-1] > top:
        raise OracleLevelUnsupportedError(levels[-1], top)
    return levels


def subchannel_trace_matrix(oracle: MapOracle, level: int) -> ComplexMatrix:
    """M_n with entries tr(P_m mu(k_i k_j^*) P_m), i, j < n_in."""
    n, m = oracle.level_dims(level)
    return choi_from_oracle(oracle, n, m).trace_matrix()


def _trace_functionals(oracle: MapOracle, n: int) -> ComplexMatrix:
    """[tr mu(k_i k_j^*)]_{i,j<n}, exact or at full output level."""
    out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[i, j] = oracle.trace_functional(i, j)
    return out


def _max_eigenvalue(a: ComplexMatrix) -> float:
    return hermitian_eig(hermitian_part(a)).max_eigenvalue


def _first_given(*values: float | None) -> float:
    return next(v for v in values if v is not None)


def certify(
    oracle: MapOracle,
    mode: Mode = "cp",
    schedule: Sequence[int] | None = None,
    tol: float | None = None,
    *,
    psd_tol: float | None = None,
    subchannel_tol: float | None = None,
    trace_tol: float | None = None,
    method: EigenMethod | None = None,
) -> CertificationReport:
    """Run the truncation ladder for ``mode`` and assemble a report.

    Subchannel mode also carries the cp results; channel mode carries both, and a
    channel passes only when the subchannel verdict passes too.

    Args:
        oracle: Map to certify
        mode: "cp", "subchannel" or "channel"
        schedule: Ascending levels; None derives the default ladder
        tol: Overrides all three tolerances when given
        psd_tol: Relative PSD tolerance for each L_n
        subchannel_tol: Allowed excess of lambda_max(M_n) over 1
        trace_tol: Allowed max |tr mu(k_i k_j^*) - delta_ij|
        method: Eigensolver

    Returns:
        CertificationReport
    """
    if mode not in MODES:
        raise ValueError(f"Unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    levels = resolve_schedule(schedule, oracle)
    tolerances = Tolerances(
        psd=_first_given(tol, psd_tol, settings.psd_tol),
        subchannel=_first_given(tol, subchannel_tol, settings.subchannel_tol),
        trace=_first_given(tol, trace_tol, settings.trace_tol),
    )
    log = logger.bind(oracle=oracle.name, mode=mode)
    log.info("Starting certification", schedule=levels)

    want_subchannel = mode in ("subchannel", "channel")
    want_channel = mode == "channel"

    functionals = None
    if want_channel:
        top_n, _ = oracle.level_dims(levels[-1])
        functionals = _trace_functionals(oracle, top_n)

    results: list[LevelResult] = []
    for level in levels:
        n, m = oracle.level_dims(level)
        choi = choi_from_oracle(oracle, n, m)
        psd = is_psd(choi.matrix, tolerances.psd, method)
        result = LevelResult(
            level=level,
            n=n,
            m=m,
            choi_min_eigenvalue=psd.min_eigenvalue,
            choi_psd=psd.verdict,
        )
        if want_subchannel:
            result.subchannel_max_excess = _max_eigenvalue(choi.trace_matrix()) - 1.0
        if functionals is not None:
            deviation = functionals[:n, :n] - np.eye(n)
            result.trace_preservation_max_dev = float(np.max(np.abs(deviation)))
        log.debug(
            "Certified level",
            level=level,
            n=n,
            m=m,
            min_eigenvalue=psd.min_eigenvalue,
            psd=psd.verdict,
        )
        results.append(result)

    verdicts = _verdicts(results, tolerances, want_subchannel, want_channel)
    report = CertificationReport(
        oracle=oracle.name,
        dim_in=oracle.dim_in,
        dim_out=oracle.dim_out,
        mode=mode,
        schedule=levels,
        levels=results,
        verdicts=verdicts,
        tolerances=tolerances,
    )
    if report.passed:
        log.info("Certification passed", levels=len(levels))
    else:
        log.warning(
            "Certification failed",
            witness_level=verdicts.cp.witness_level,
            witness_min_eigenvalue=verdicts.cp.witness_min_eigenvalue,
            subchannel=verdicts.subchannel,
            channel=verdicts.channel,
        )
    return report


def _verdicts(
    results: list[LevelResult],
    tolerances: Tolerances,
    want_subchannel: bool,
    want_channel: bool,
) -> Verdicts:
    failing = next((r for r in results if not r.choi_psd), None)
    cp = CPVerdict(
        passed=failing is None,
        witness_level=failing.level if failing else None,
        witness_min_eigenvalue=failing.choi_min_eigenvalue if failing else None,
    )
    verdicts = Verdicts(cp=cp)
    if want_subchannel:
        verdicts.subchannel = cp.passed and all(
            r.subchannel_max_excess <= tolerances.subchannel for r in results
        )
    if want_channel:
        verdicts.channel = bool(verdicts.subchannel) and (
            results[-1].trace_preservation_max_dev <= tolerances.trace
        )
    return verdicts


def certify_cp(
    oracle: MapOracle, schedule: Sequence[int] | None = None, tol: float | None = None
) -> CertificationReport:
    """Complete positivity: every L_n in the schedule is positive semidefinite."""
    return certify(oracle, "cp", schedule, tol)


def certify_subchannel(
    oracle: MapOracle, schedule: Sequence[int] | None = None, tol: float | None = None
) -> CertificationReport:
    """cp together with M_n <= I_n at every level."""
    return certify(oracle, "subchannel", schedule, tol)


def certify_channel(
    oracle: MapOracle, schedule: Sequence[int] | None = None, tol: float | None = None
) -> CertificationReport:
    """Subchannel together with tr mu(k_i k_j^*) = delta_ij at the largest level."""
    return certify(oracle, "channel", schedule, tol)


def crosscheck_dual_cp(
    K: KrausMap,
    tol: float | None = None,
    samples: int | None = None,
    seed: int | None = None,
) -> bool:
    """Check that the dual map is completely positive and pairs with mu under the trace.

    The pairing tr(mu^*(b) a) = tr(b mu(a)) is tested on random complex a, b with an
    absolute tolerance. Failures are logged with their witness and return False.
    """
    tol = settings.psd_tol if tol is None else tol
    samples = settings.dual_samples if samples is None else samples
    rng = np.random.default_rng(settings.seed if seed is None else seed)

    mu_dual = dual(K)
    verdict = is_psd(choi_from_kraus(mu_dual).matrix, tol)
    if not verdict.verdict:
        logger.warning(
            "Dual map is not completely positive",
            min_eigenvalue=verdict.min_eigenvalue,
        )
        return False

    for sample in range(samples):
        a = rng.standard_normal((K.dim_in,) * 2) + 1j * rng.standard_normal((K.dim_in,) * 2)
        b = rng.standard_normal((K.dim_out,) * 2) + 1j * rng.standard_normal((K.dim_out,) * 2)
        lhs = np.trace(apply(mu_dual, b) @ a)
        rhs = np.trace(b @ apply(K, a))
        if abs(lhs - rhs) > tol:
            logger.warning(
                "Duality pairing violated",
                sample=sample,
                gap=float(abs(lhs - rhs)),
            )
            return False
    return True


def check_trace_nonincrease(
    K: KrausMap,
    samples: int | None = None,
    seed: int | None = None,
) -> float:
    """max over random density matrices rho of tr mu(rho) - tr rho.

    Non-positive (up to rounding) for every subchannel.
    """
    samples = settings.dual_samples if samples is None else samples
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    worst = -np.inf
    for _ in range(samples):
        rho = random_density(K.dim_in, rng)
        gap = float(np.trace(apply(K, rho)).real - np.trace(rho).real)
        worst = max(worst, gap)
    logger.debug("Trace non-increase checked", samples=samples, max_gain=worst)
    return worst
