"""Diagonal ergodic averages for commuting circle rotations.

Measures time averages (1/N) sum_n f1(T1^n x) ... fd(Td^n x) along orbits,
predicts their limits in closed form from the family's equality partition,
and compares the two.
"""

from .dynsys import (TransformFamily, TransformSpec, build_family,
                     finite_rotation, identity, is_ergodic_rotation,
                     quotient_transform, rotation, rotation_power)
from .engine import (AverageTrace, Schedule, birkhoff_average,
                     correlation_average, multiple_average,
                     periodic_factor_average, run_chunked,
                     triple_intersection_average)
from .observables import (Observable, QuadratureSpec, constant, evaluate,
                          frac_part, indicator, integrate,
                          periodic_orbit_mean, piecewise_linear,
                          power_of_frac, product, trig_poly)
from .oracle import (ComparisonReport, Prediction, compare, ergodicity_report,
                     predict)
from .unitmath import (CompensatedSum, IndependenceVerdict, ScalarConstant,
                       UnitPoint, frac, orbit_point, rational_independence,
                       sum_shifted_frac)

__version__ = "0.1.0"
