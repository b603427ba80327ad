"""rotbec: ground states of the planar rotating attractive condensate.

Computes the critical radial profile and its constants, minimizes the
rotational energy functional with attractive interactions under a unit
mass constraint, and verifies the collapse laws as the interaction
strength approaches the critical value: existence thresholds, energy and
width scaling, profile convergence, and vortex-freeness.
"""

__version__ = "0.1.0"

from .analysis import (BlowupObservables, IdentityAudit, MuLimitReport,
                       ScalingFit, SpectrumReport, XaDriftReport,
                       blowup_rescale, bounded_trend, compare_nonrotating,
                       energy_identity_audit, fit_scaling,
                       linearized_spectrum, loop_winding, mu_limit_check,
                       winding_numbers, x_a_drift_check)
from .energy import (DiamagneticCheck, EnergyBreakdown, chemical_potential,
                     diamagnetic_check, el_residual,
                     energy_lower_bound_check, gauge_translate, gp_energy,
                     interaction_quartic, modulus_gradient_sq)
from .errors import (AccuracyError, ConfigurationError, NumericalError,
                     RegimeError, RotbecError)
from .field import (Field2D, Grid2D, boundary_mass, gaussian_init, inner,
                    integrate, kinetic_energy, load_snapshot, lz_term,
                    phase_align, random_init, save_snapshot,
                    spectral_gradient, vortex_init)
from .minimizer import (GpProblem, MinimizeConfig, MinimizeResult, TrialScan,
                        continuation_sweep, default_townes, gp_problem,
                        minimize, multistart_minimize, predicted_eps,
                        resample_field, trial_energy_scan,
                        trial_upper_bound)
from .potential import (OMEGA_STAR_INF, EffectivePotential, PotentialSpec,
                        critical_omega, effective_potential,
                        gauge_energy_offset, h_moment, harmonic,
                        lambda_const, lambda_harmonic, leading_profile,
                        minimize_h, omega_allowed, power,
                        quartic_quadratic, shifted_harmonic, v_omega)
from .townes import (RadialProfile, TownesConstants, a_star_midpoint,
                     export_profile, ode_residual, radial_moment,
                     sample_w_2d, solve_townes, townes_constants)

__all__ = [name for name in dir() if not name.startswith("_")]
