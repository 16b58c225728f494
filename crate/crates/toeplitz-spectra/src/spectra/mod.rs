//! Spectral sets, windings, outliers, finite sections and hypothesis
//! screening.

pub mod chiral;
pub mod finite;
pub mod hypotheses;
pub mod outliers;
pub mod sets;
pub mod winding;

pub use chiral::{chiral_windings, winding_breakpoints, zero_mode_certificate, ZeroModeCertificate};
pub use finite::{
    finite_spectrum, finite_spectrum_refined, quasimode, section_residual, FiniteSpectrum,
    LocalizationIndex, Quasimode, RefinedSpectrum,
};
pub use hypotheses::{hypothesis_report, HypothesisReport};
pub use outliers::{gamma_find, GammaPoint, GammaSearch, Side};
pub use sets::{
    brillouin, lambda_interior_detected, lambda_scan, one_sided_distance, sigma_samples,
    BrillouinPoint, LambdaCloud, LambdaPoint, SigmaSample, SpectralSets, LAMBDA_RAW_TOL,
    LAMBDA_REFINED_TOL,
};
pub use winding::{halfline_kernel_dims, winding, winding_count, winding_integral, WindingMethod};
