"""zigzaglab: spectra of zigzag-boundary Dirac operators on waveguides.

The Dirac spectrum of these systems is an exact function of the Dirichlet
Laplacian spectrum of the same region, so the package is organized as a
Laplacian laboratory (geometry construction, sparse finite-volume/difference
assembly, symmetric eigensolves, inertia counting, Richardson extrapolation)
plus the exact relativistic mapping, weak-coupling series and scaling-law
studies on top.
"""

from .geometry import (BentStrip, Cross, CrossSection2D, CoupledStrips,
                       CurvatureProfile, DeformedStrip, GeometryError,
                       InjectivityError, InjectivityResult, LoopStrip, LShape,
                       TwistedFiber, build_domain, check_injectivity,
                       constant_curvature, domain_from_dict, gaussian_bump,
                       reconstruct_curve, ricker_bump, tabulated_curvature,
                       zero_curvature)
from .assemble import (GridOperator, assemble_cartesian, assemble_curvilinear,
                       assemble_domain, assemble_interval, assemble_radial,
                       assemble_twist_fiber, export_matrix_market,
                       transverse_band_edge)
from .eigensolve import (DEFAULT_SEED, ConvergenceError, EigResult,
                         SingularShiftError, count_below, count_below_robust,
                         extrapolate, smallest_eigs)
from .dirac import (DiracSpectrum, UnitSystem, UnsupportedGeometryError,
                    essential_bands, fichera_essential, map_spectrum,
                    ppw_bound)
from .asymptotics import (AsymptoticPrediction, bent_strip_series,
                          bent_tube_series, critical_smoothness_bound,
                          deformed_strip_prediction, layer_weak_coupling,
                          power_law_fit, transverse_overlap, window_count)
from . import oracle

__version__ = "0.1.0"
