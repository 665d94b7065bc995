"""Lower bounds and approximate controllers for PDE optimal control.

The pipeline: truncate a Riesz-spectral model to finitely many modes,
relax the resulting optimal control problem over occupation measures into
a block-diagonal SDP at a chosen order, solve it with the embedded
interior-point method, extract a time-polynomial control from the solved
moments, and validate it in closed loop against the original PDE.
"""

from .polyalg import (
    LinearFunctional,
    Polynomial,
    basis,
    liouville_apply,
    monomial_count,
    poly_eval,
    rank,
    unrank,
)
from .spectral import (
    BoundsConfig,
    ControlSet,
    Horizon,
    ModalSystem,
    SpectralModel,
    heat_model,
    integrator_system,
    truncate_and_realify,
    wave_model,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsConfig",
    "ControlSet",
    "Horizon",
    "LinearFunctional",
    "ModalSystem",
    "Polynomial",
    "SpectralModel",
    "basis",
    "heat_model",
    "integrator_system",
    "liouville_apply",
    "monomial_count",
    "poly_eval",
    "rank",
    "truncate_and_realify",
    "unrank",
    "wave_model",
]
