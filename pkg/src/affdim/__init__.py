"""Dimension theory of self-affine sets and measures.

Computes singular value pressure and certified affinity-dimension
brackets, Lyapunov spectra of matrix cocycles under block Bernoulli
measures, explicit membership/separation certificates for matrix tuples,
Grassmannian orbit and transversality diagnostics, and box-counting
verification on generated attractors. The hot kernels run on a compiled
extension with a pure numpy fallback (see ``affdim._backend``).
"""

from ._backend import BACKEND
from .attractor import (
    BoxCountCurve,
    CorrelationCurve,
    PointCloud,
    box_dimension,
    correlation_dimension,
    generate_exhaustive,
    generate_random,
    save_csv,
    save_ppm,
)
from .errors import BudgetError, FitWindowError
from .furstenberg import (
    DeltaEstimate,
    OrbitSample,
    TailReport,
    derivative_identity_residual,
    furstenberg_limit_residual,
    furstenberg_typical_subspace,
    grassmann_orbit,
    projected_svf_limit_residual,
    transversality_delta,
    transversality_tail,
)
from .ifs import (
    AffineIFS,
    ConditionReport,
    conjugate,
    membership_margin,
    natural_projection,
    ssc_certificate,
    transform_translations,
)
from .linalg import (
    SingularSpectrum,
    Subspace,
    compound,
    haar_orthogonal,
    projected_singular_values,
    singular_values,
)
from .lyapunov import (
    DominationReport,
    LyapunovSpectrum,
    PinchingTwistingResult,
    domination_test,
    exponents_mc,
    lyapunov_dimension,
    pinching_twisting_search,
)
from .pressure import (
    DimensionBracket,
    PressureEstimate,
    QuasiMultReport,
    affinity_upper,
    dimension_bracket,
    pressure_estimate,
    pressure_sum,
    quasi_multiplicativity_diagnostic,
    subsystem_measure,
    svf,
)
from .words import StepMeasure, Word, entropy, enumerate_words, sample_word, word_product

__version__ = "0.1.0"

__all__ = [
    "AffineIFS",
    "BACKEND",
    "BoxCountCurve",
    "BudgetError",
    "ConditionReport",
    "CorrelationCurve",
    "DeltaEstimate",
    "DimensionBracket",
    "DominationReport",
    "FitWindowError",
    "LyapunovSpectrum",
    "OrbitSample",
    "PinchingTwistingResult",
    "PointCloud",
    "PressureEstimate",
    "QuasiMultReport",
    "SingularSpectrum",
    "StepMeasure",
    "Subspace",
    "TailReport",
    "Word",
    "affinity_upper",
    "box_dimension",
    "compound",
    "conjugate",
    "correlation_dimension",
    "derivative_identity_residual",
    "dimension_bracket",
    "domination_test",
    "entropy",
    "enumerate_words",
    "exponents_mc",
    "furstenberg_limit_residual",
    "furstenberg_typical_subspace",
    "generate_exhaustive",
    "generate_random",
    "grassmann_orbit",
    "haar_orthogonal",
    "lyapunov_dimension",
    "membership_margin",
    "natural_projection",
    "pinching_twisting_search",
    "pressure_estimate",
    "pressure_sum",
    "projected_singular_values",
    "projected_svf_limit_residual",
    "quasi_multiplicativity_diagnostic",
    "sample_word",
    "save_csv",
    "save_ppm",
    "singular_values",
    "ssc_certificate",
    "subsystem_measure",
    "svf",
    "transform_translations",
    "transversality_delta",
    "transversality_tail",
    "word_product",
]
