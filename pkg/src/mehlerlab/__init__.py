"""mehlerlab: build Levy-driven OU semigroups, sample their invariant laws,
and verify the entropy/Poincare/tail inequalities they satisfy."""

from .levy import (
    EvolvedTriple,
    LevyMeasure,
    LevyTriple,
    SemigroupFamily,
    TailClass,
    apply_generator,
    characteristic_exponent,
    line_measure,
    psi_inverse,
    psi_of,
    spherical_measure,
)

__version__ = "0.1.0"
