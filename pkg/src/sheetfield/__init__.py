"""Simulation and law estimation for SPDEs driven by a Brownian sheet."""
from .errors import ArgumentError, ConfigurationError, NumericalError, SheetfieldError
from .special_fn import SeriesResult, bessel_f, compute_r0, gronwall_sequence, picard_radius
from .sheet import GridSpec, SheetPath, rect_increment, sample_increments, sample_sheet
from .measure import (EmpiricalMeasure, QuadratureRule, fourier_at, gauss_hermite,
                      inner_product, law_from_samples, m_distance_sq)
from .spde_solver import (Constant, FieldSolution, LawDependent, LawFlow, MeanFieldLinear,
                          SpaceTime, dynkin_check, euler_solve, mckean_vlasov_solve,
                          parts_check)

__version__ = "0.1.0"
