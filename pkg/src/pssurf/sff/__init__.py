from .core import (
    DomainStrip,
    ImmersionReport,
    NoImmersion,
    SecondFundamentalForm,
    closed_form,
    codazzi_residuals,
    gauss_residual,
    jet_order_of,
    sample_strip_points,
    strip_contains,
    universal_form,
    verify_immersion,
)
from .obstruction import Outcome, ObstructionVerdict, TraceStep, finite_jet_obstruction

__all__ = [
    "DomainStrip",
    "ImmersionReport",
    "NoImmersion",
    "ObstructionVerdict",
    "Outcome",
    "SecondFundamentalForm",
    "closed_form",
    "codazzi_residuals",
    "finite_jet_obstruction",
    "gauss_residual",
    "jet_order_of",
    "sample_strip_points",
    "TraceStep",
    "strip_contains",
    "universal_form",
    "verify_immersion",
]
