"""Antenna gain from compact-cluster three-antenna measurements.

Far-field criteria, phase budgets, the three-antenna solver, repetition
statistics, 1/d extrapolation and an aperture coupling oracle.
"""
__version__ = "0.1.0"

from .core import (SPEED_OF_LIGHT, AntennaKind, ApertureAntenna, Campaign, Cluster, DomainError,
                   FFGainError, FrequencyGrid, GainSolution, MissingPairError, NumericalError,
                   SolveMethod, SweepTrace, ValidationError, pair_key, speed_of_light, wavelength)
from .extrapolate import (ExtrapolationFit, InverseDistanceRegressor, extrapolate_campaign,
                          extrapolated_three_antenna, fit_inverse_distance, stitch_clusters)
from .ffcrit import (approximation_ratio, d_ff_fourth_order, d_ff_mil, d_ff_revised, d_ff_uno,
                     d_fraunhofer, delta_phi_max, path_difference, phase_budget, phase_error,
                     phase_total)
from .linksim import CouplingModel, aperture_coupling, synthesize_campaign
from .solver import (PairGainProduct, PathLossMode, averaged_path_loss_db, friis_s21,
                     pair_gain_product, solve_three_antenna)
from .stats import (ThreeAntennaGain, average_runs, per_point_gains, reduce_campaign, sigma_f)

__all__ = [
    "SPEED_OF_LIGHT", "AntennaKind", "ApertureAntenna", "Campaign", "Cluster", "DomainError",
    "FFGainError", "FrequencyGrid", "GainSolution", "MissingPairError", "NumericalError",
    "SolveMethod", "SweepTrace", "ValidationError", "pair_key", "speed_of_light", "wavelength",
    "ExtrapolationFit", "InverseDistanceRegressor", "extrapolate_campaign",
    "extrapolated_three_antenna", "fit_inverse_distance", "stitch_clusters", "approximation_ratio",
    "d_ff_fourth_order", "d_ff_mil", "d_ff_revised", "d_ff_uno", "d_fraunhofer", "delta_phi_max",
    "path_difference", "phase_budget", "phase_error", "phase_total", "CouplingModel",
    "aperture_coupling", "synthesize_campaign", "PairGainProduct", "PathLossMode",
    "averaged_path_loss_db", "friis_s21", "pair_gain_product", "solve_three_antenna",
    "ThreeAntennaGain", "average_runs", "per_point_gains", "reduce_campaign", "sigma_f",
]
