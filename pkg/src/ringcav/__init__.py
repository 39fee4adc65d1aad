"""Ring-cavity / atom-array coupled-mode simulator and analysis toolkit."""

from .arrays import (AtomArray, StructureFactor, array_from_lambda, coupling_weight,
                     displace, lattice, sample_thermal, snap_to_grid, structure_factor,
                     with_target_s)
from .constants import DEFAULT_WAVELENGTH, TWO_PI
from .dynamics import (FullState, FullTrajectory, IntegratorConfig, ModeTrajectory,
                       StiffnessError, integrate_full, integrate_reduced,
                       weak_excitation_check)
from .metrics import (ConversionReport, EllipsePhaseFit, PhaseReport, PurityReport,
                      conversion_closed_form, conversion_direct, dark_purity,
                      dark_purity_fitted, ellipse_fit, interference_correlation,
                      phase_shift)
from .params import (CavityParams, ThermalModel, c0_from_geometry, cavity_length,
                     cooperativity, experiment_defaults, experiment_thermal, finesse,
                     g_from_cooperativity, mean_phonon, mirror_budget, thermal_sigma)
from .spectra import (DoubleLorentzianFit, FitConvergenceError, IdentifiabilityError,
                      LorentzianFit, SpectrumScan, add_shot_noise, fit_double_lorentzian,
                      fit_lorentzian, lorentzian, scan)
from .steady import (ConditioningError, DriveConfig, EigenAmplitudes, ModeAmplitudes,
                     atomic_amplitudes, broadenings, collective_coupling,
                     from_eigenmodes, intracavity_field, resonance_shifts, steady_modes,
                     to_eigenmodes)
from .sweep import (CurveSeries, Grid2D, contour_polyline, conversion_vs_n,
                    delta_on_contour, dispersive_shift_scan, fringe_period, fringe_scan,
                    purity_contour, shifts_vs_n, shifts_vs_s, thermal_s_curve,
                    waist_scan)

__version__ = "0.1.0"
