"""Magnetic and non-magnetic Schrodinger spectra on planar domains, Levi geometry of
Hartogs domains over subharmonic weights, and Property (P) diagnostics."""

__version__ = "0.1.0"

from .geometry import (DegenerateGridError, Grid, NeighborhoodError, PlanarDomainSpec,  # noqa: E402
                       ScalarField, build_grid, disk, domain_from_dict, rectangle,
                       shrink_neighborhoods)
from .weights import (HarmonicLinearWeight, PolynomialWeight, RadialFlatWeight,  # noqa: E402
                      TermTableWeight, WeightSpec, eval_weight, weight_from_dict, zero_set)
from .kernels import BACKEND  # noqa: E402
from .spectral import (DynamicRangeError, EigenResult, GeneralizedPencil, SolverParams,  # noqa: E402
                       SpectralSweep, assemble_magnetic_form, assemble_nonmagnetic,
                       laplacian, magnetic_eigenvalue, nonmagnetic_eigenvalue,
                       smallest_eigenvalue, sweep_spectra)
from .hartogs import (HartogsBoundaryPoint, HartogsDomainSpec, LeviReport,  # noqa: E402
                      classify_point, defining_hessian, levi_form, sample_boundary_points)
from .diagnostics import (comparison_inequality_check, dichotomy_report,  # noqa: E402
                          dirichlet_growth_test, fine_interior_scan, hardy_littlewood_check,
                          negative_norm)
