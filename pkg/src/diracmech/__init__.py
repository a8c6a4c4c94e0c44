"""Dirac structures as explicit linear subspaces, their interconnection
algebra, and implicit simulation of the resulting constrained (possibly
degenerate) Lagrangian systems."""

from ._kernels import BACKEND
from .dirac import (LinearDirac, TwoFormOnDistribution, bowtie,
                    bowtie_via_pullback, canonical_structure, compose,
                    direct_sum, extract_two_form, from_form_and_distribution,
                    identity_structure, is_dirac, pairing_orthogonal,
                    pushforward, validate_dirac)
from .induced import (DistributionField, InterconnectionSpec,
                      induced_dirac_at, interconnect_at,
                      interconnection_dirac_at, lift_to_cotangent,
                      unconstrained)
from .integrator import (IntegratorConfig, SimulationAborted,
                         SingularJacobianError, StepFailure, Trajectory,
                         project_initial, simulate, step)
from .library import build_builtin, list_builtins
from .mechanics import (CallableForce, CallableLagrangian,
                        LagrangeDiracSystem, PolynomialForce,
                        PolynomialLagrangian, PontryaginState,
                        check_membership, generalized_energy,
                        power_balance_residual, recover_interface_forces,
                        residual, zero_force)
from .subspace import Subspace, add, annihilator, intersect, kernel, span

__version__ = "0.1.0"
