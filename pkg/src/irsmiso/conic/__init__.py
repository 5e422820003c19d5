from .ipm import PSD_CAP, solve
from .program import Cone, ConeDimensionError, ConicProgram, SolveResult, psd_order, smat, svec
from .verify import cone_violation, verify_certificate

__all__ = [
    "Cone", "ConeDimensionError", "ConicProgram", "PSD_CAP", "SolveResult",
    "cone_violation", "psd_order", "smat", "solve", "svec", "verify_certificate",
]
