"""Energy-minimizing neural networks for 2D frictionless contact problems.

Small displacement networks are trained by minimizing total potential
energy augmented with an exponential surface contact potential; see the
README for the built-in benchmark scenes and the command line interface.
"""

from .errors import (ConfigurationError, ContactPinnError, EvaluationError,
                     NumericalError, TapeError)
from .autodiff import (DualVector, GradientTape, eval_network, eval_with_tape,
                       finite_difference_gradient, loss_param_gradient,
                       spatial_jacobian)
from .network import (BcComposition, NetworkParams, compose_gradient,
                      compose_output, init_params, load_checkpoint,
                      pack_parameters, save_checkpoint, unpack_parameters)
from .materials import (LINEAR_ELASTIC, NEO_HOOKEAN, DeformationGradient,
                        MaterialSpec, cauchy_stress, deformation_gradient,
                        first_pk_stress, strain_energy_density, von_mises,
                        von_mises_from_F)
from .geometry import (Arc, BoundarySegment, ContactSurface, Line,
                       QuadratureCloud, RefineBands, boundary_samples,
                       export_cloud_csv, gauss_disc, gauss_half_disc,
                       gauss_rectangle, gauss_ring_segment,
                       gauss_segment, min_distance_to_boundary)
from .contact import (ContactSpec, DistanceMatrix, RigidLine,
                      contact_energy_pp, contact_energy_ps,
                      contact_force_density, contact_pressure,
                      export_pressure_csv, pairwise_distances)

__version__ = "0.1.0"
