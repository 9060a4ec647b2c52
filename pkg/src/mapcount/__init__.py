"""Exact enumeration of colored planar maps.

The core engine solves the loop-equation recursion for multi-matrix
moment expansions in exact rational arithmetic.  Independent checks come
from a brute-force fat-graph gluing enumerator, a Metropolis sampler for
the matrix models themselves, an equilibrium-measure solver for the
one-matrix case, and closed-form series for the Ising model on random
quartic maps.
"""

from .engine import (
    FreeEnergyTable,
    MapCounter,
    SeriesValue,
    TruncationBound,
    catalan,
    multi_indices,
    semicircle_moment,
)
from .ising import (
    BiSeries,
    dressed_series_coefficients,
    ising_map_count,
    ising_rooted_count,
    ising_series,
    ising_series_coefficients,
    map_equation_series,
    rooted_quartic_series,
    verify_change_of_variables,
)
from .montecarlo import (
    MCConfig,
    MCResult,
    MomentEstimate,
    ResidualEstimate,
    residual_words,
    sample,
    sd_residual,
)
from .onematrix import EquilibriumMeasure, solve_equilibrium
from .oracle import (
    GluingCensus,
    count_planar,
    count_rooted_orbits,
    count_with_adjoints,
    genus_census,
)
from .potential import Potential, StarSpec, parse_potential
from .words import NCPolynomial, Word

__all__ = [
    "BiSeries",
    "EquilibriumMeasure",
    "FreeEnergyTable",
    "GluingCensus",
    "MCConfig",
    "MCResult",
    "MapCounter",
    "MomentEstimate",
    "NCPolynomial",
    "Potential",
    "ResidualEstimate",
    "SeriesValue",
    "StarSpec",
    "TruncationBound",
    "Word",
    "catalan",
    "count_planar",
    "count_rooted_orbits",
    "count_with_adjoints",
    "dressed_series_coefficients",
    "genus_census",
    "ising_map_count",
    "ising_rooted_count",
    "ising_series",
    "ising_series_coefficients",
    "map_equation_series",
    "multi_indices",
    "parse_potential",
    "residual_words",
    "rooted_quartic_series",
    "sample",
    "sd_residual",
    "semicircle_moment",
    "solve_equilibrium",
    "verify_change_of_variables",
]
