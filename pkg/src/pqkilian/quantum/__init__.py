from .alternating import alternating_outcomes, mwdist_sample, nreps
from .core import (DensityOp, RegisterLayout, StateVector, StructuredProjector, Unitary,
                   gentle_check, measure_binary, mixm)
from .jordan import JordanDecomposition, JordanSubspace, jordan_decompose

__all__ = [
    "DensityOp", "JordanDecomposition", "JordanSubspace", "RegisterLayout", "StateVector",
    "StructuredProjector", "Unitary", "alternating_outcomes", "gentle_check", "jordan_decompose",
    "measure_binary", "mixm", "mwdist_sample", "nreps",
]
