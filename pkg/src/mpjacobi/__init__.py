"""Mixed-precision preconditioned one-sided Jacobi SVD.

High relative accuracy for every singular value through three precision
tiers: a low tier supplies approximate right singular vectors, the
preconditioner built from them is applied at extended (double-double)
precision, and one-sided Jacobi finishes at working precision.
"""

from .driver import (
    SDQ,
    SSD,
    Mp3Diagnostics,
    PrecisionConfig,
    get_config,
    mp3_svd,
    plain_jacobi_svd,
)
from .errors import (
    DimensionError,
    MpJacobiError,
    NonConvergenceError,
    RankDeficientError,
    ZeroColumnError,
)
from .gallery import GalleryMatrix, kahan, lauchli_gram, randsvd, rng_gaussian
from .jacobi import JacobiOptions, SvdResult, jacobi_rotation, one_sided_jacobi
from .linalg import (
    HouseholderSeq,
    QrFactors,
    apply_householder_seq,
    bidiagonalize,
    column_norms,
    householder_qr,
    spectral_norm,
)
from .metrics import (
    ErrorReport,
    accuracy_bound,
    forward_errors,
    kappa2,
    kappa2_scaled,
    off_quantity,
    reference_svd,
)
from .precision import (
    DDArray,
    DoubleDouble,
    U_DOUBLE,
    U_DOUBLE_DOUBLE,
    U_SINGLE,
    demote,
    matmul_extended,
    promote,
    two_prod,
    two_sum,
)
from .precond import (
    Preconditioner,
    obliquity,
    precond_bidiag_method,
    precond_orth_method,
)

__version__ = "0.1.0"

__all__ = [
    "SDQ", "SSD", "PrecisionConfig", "get_config", "mp3_svd",
    "plain_jacobi_svd", "Mp3Diagnostics",
    "MpJacobiError", "DimensionError", "ZeroColumnError",
    "RankDeficientError", "NonConvergenceError",
    "GalleryMatrix", "randsvd", "kahan", "lauchli_gram", "rng_gaussian",
    "JacobiOptions", "SvdResult", "jacobi_rotation", "one_sided_jacobi",
    "HouseholderSeq", "QrFactors", "apply_householder_seq", "bidiagonalize",
    "column_norms", "householder_qr", "spectral_norm",
    "ErrorReport", "accuracy_bound", "forward_errors", "kappa2",
    "kappa2_scaled", "off_quantity", "reference_svd",
    "DDArray", "DoubleDouble", "U_DOUBLE", "U_DOUBLE_DOUBLE", "U_SINGLE",
    "demote", "matmul_extended", "promote", "two_prod", "two_sum",
    "Preconditioner", "obliquity", "precond_bidiag_method",
    "precond_orth_method",
]
