"""Renormalization of perturbed isochronous transport on the torus.

Lattice symbols with analytic-norm control, their Weyl quantization on
momentum boxes, the tree and small-divisor combinatorics behind the
perturbative hierarchy, the counterterm engine, and desk-scale spectral
and semiclassical experiments, wired to a command line harness.
"""

from .errors import (
    NotDecomposableError,
    ResonantFrequencyError,
    ShellMatchError,
    UnitarityDriftError,
)
from .symbols import (
    AffineSymbol,
    FrequencyVector,
    TorusSymbol,
    analytic_norm,
    diophantine_estimate,
    elementary_sup,
    random_symbol,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSymbol",
    "FrequencyVector",
    "NotDecomposableError",
    "ResonantFrequencyError",
    "ShellMatchError",
    "TorusSymbol",
    "UnitarityDriftError",
    "analytic_norm",
    "diophantine_estimate",
    "elementary_sup",
    "random_symbol",
    "__version__",
]
