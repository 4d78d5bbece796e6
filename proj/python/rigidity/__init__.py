"""Cylinder measures under x -> px mod 1, balanced geometry and Weyl-sum rigidity checks.

Rational quantities come back as ``fractions.Fraction`` (measure weights and
masses) or as fraction strings inside report dictionaries.
"""

from ._core import (
    ConvergenceError,
    DegenerateCylinder,
    InputError,
    Measure,
    NotInvariant,
    NotStabilized,
    VerificationError,
    bernoulli,
    cli,
    from_json,
    from_weights,
    imbalance_profile,
    markov,
    nex,
    orbit_size,
    order_profile,
    pex,
    uniform,
)

__all__ = [
    "ConvergenceError",
    "DegenerateCylinder",
    "InputError",
    "Measure",
    "NotInvariant",
    "NotStabilized",
    "VerificationError",
    "bernoulli",
    "cli",
    "from_json",
    "from_weights",
    "imbalance_profile",
    "markov",
    "nex",
    "orbit_size",
    "order_profile",
    "pex",
    "uniform",
]
