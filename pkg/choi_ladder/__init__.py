"""choi-ladder - Certify complete positivity and channel properties through truncated Choi matrices."""

from .certification import (
    CertificationReport,
    certify,
    certify_channel,
    certify_cp,
    certify_subchannel,
    crosscheck_dual_cp,
)
from .constructions import DilationSpec, builtin_oracle, traceout_channel
from .linalg import hermitian_eig, is_psd, kron, partial_trace, svd
from .maps import (
    ChoiBlockMatrix,
    KrausMap,
    MapOracle,
    apply,
    choi_from_kraus,
    choi_from_oracle,
    dual,
    kraus_from_choi,
    kraus_sum,
)
from .truncation import compress, schatten_norm, svd_tail_norm, truncation_residual

__all__ = [
    "CertificationReport",
    "ChoiBlockMatrix",
    "DilationSpec",
    "KrausMap",
    "MapOracle",
    "apply",
    "builtin_oracle",
    "certify",
    "certify_channel",
    "certify_cp",
    "certify_subchannel",
    "choi_from_kraus",
    "choi_from_oracle",
    "compress",
    "crosscheck_dual_cp",
    "dual",
    "hermitian_eig",
    "is_psd",
    "kraus_from_choi",
    "kraus_sum",
    "kron",
    "partial_trace",
    "schatten_norm",
    "svd",
    "svd_tail_norm",
    "traceout_channel",
    "truncation_residual",
]
