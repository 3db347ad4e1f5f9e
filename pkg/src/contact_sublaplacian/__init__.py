"""Sub-Laplacians on hypersurfaces of the model contact manifolds.

The package covers the Heisenberg group, the sphere and anti-de Sitter space
with their standard contact forms, the hypersurface S = {u = 0} through the
Reeb direction, the intrinsic sub-Laplacian on S computed in several
independent ways, its Riemannian approximations, and Monte Carlo simulation
of the associated diffusion together with its radial part.
"""

from .errors import DomainError, NumericalError, SingularityError, UnsupportedError
from .hypersurface import (ModelHypersurface, heisenberg2_frame, horizontal_frame,
                           induced_volume_density, is_characteristic, mu_direct,
                           quasi_contact_check, riemannian_normal_eps, sr_normal)
from .model_spaces import (Family, ModelSpace, ambient_volume, contact_form, reeb_field,
                           reeb_residuals, verify_normalization)
from .sublaplacian import (DEFAULT_EPS, ConvergenceReport, Method, convergence_study,
                           divergence_mu, laplace_beltrami_eps_apply, sublaplacian_apply)
from .diffusion import (PathStats, RadialProcess, SimConfig, compare_distributions,
                        simulate_full, simulate_radial_reference)

__all__ = [
    "DomainError", "NumericalError", "SingularityError", "UnsupportedError",
    "ModelHypersurface", "heisenberg2_frame", "horizontal_frame", "induced_volume_density",
    "is_characteristic", "mu_direct", "quasi_contact_check", "riemannian_normal_eps", "sr_normal",
    "Family", "ModelSpace", "ambient_volume", "contact_form", "reeb_field", "reeb_residuals",
    "verify_normalization", "DEFAULT_EPS", "ConvergenceReport", "Method", "convergence_study",
    "divergence_mu", "laplace_beltrami_eps_apply", "sublaplacian_apply", "PathStats",
    "RadialProcess", "SimConfig", "compare_distributions", "simulate_full",
    "simulate_radial_reference",
]
