"""Axially symmetric Gaussian-process models on the sphere."""

from .covariance import (
    BlockModel, ExpChordalModel, HarmonicCovariance, K, assemble_blocks, canonicalize,
    conditional_variances, effective_rank, exp_chordal_cov, gamma_model,
    is_longitudinally_reversible, load_model, param_count, save_model,
)
from .fitting import (
    WlsProblem, loglik_dense, loglik_lowrank, mle_exp_nugget, mle_harmonic, mle_white_noise,
    wls_criterion, wls_fit_linear, wls_fit_psd, wls_weights,
)
from .geom import GeoPoint, Observation, ObsTable, Orbit, central_angle, chordal_distance, lon_diff
from .harmonics import (
    build_spline_table, legendre_assoc, legendre_norm, mean_design_row, real_basis,
)
from .kriging import GridSpec, krige_residuals, level25_product
from .mean import MeanModel, bin_average, fit_mean, residuals
from .simulate import sample_coefficients, synthesize_field
from .variogram import PairConfig, bin_variogram, cross_orbit_variogram, enumerate_pairs

__version__ = "0.1.0"
