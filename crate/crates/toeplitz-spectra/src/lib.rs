//! Spectral analysis of block-tridiagonal Laurent and Toeplitz operators by
//! transfer-matrix methods.
//!
//! The operator is specified by three LxL coefficients (R, V, T) with R and T
//! invertible. The library computes
//!
//! - the periodic spectrum and the asymptotic sets attracting finite-section
//!   eigenvalues, together with the degeneracy set of the transfer matrix,
//! - winding numbers, Riesz projections of the transfer matrix and the
//!   associated moment matrices,
//! - the finite-section determinant both directly and through the index-set
//!   expansion over transfer eigenvalues, with all cross-checks,
//! - half-line kernel dimensions, spectral outliers with multiplicities and
//!   boundary-side classification, skin-effect diagnostics, quasimodes, the
//!   generalized Brillouin zone and chiral zero-mode certificates.

pub mod error;
pub mod linalg;
pub mod model;
pub mod projections;
pub mod spectra;
pub mod transfer;
pub mod widom;

pub use error::{Result, SpectraError};
pub use linalg::{C64, CMat, CVec, LogComplex};
pub use model::{BlockSymbol, ChiralPair, SymbolVariant};

use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        assert!(re_min < re_max && im_min < im_max, "window must be nonempty");
        Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    /// Square window centered at the origin covering the given radius.
    pub fn centered(radius: f64) -> Self {
        Rect::new(-radius, radius, -radius, radius)
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_min, self.im_max),
            C64::new(self.re_max, self.im_max),
        ]
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    /// Grows the rectangle by `margin` on every side.
    pub fn padded(&self, margin: f64) -> Rect {
        Rect {
            re_min: self.re_min - margin,
            re_max: self.re_max + margin,
            im_min: self.im_min - margin,
            im_max: self.im_max + margin,
        }
    }
}
