//! Block symbols of block-tridiagonal Laurent operators: validation,
//! scalar-band lifting, scaling and the chiral grading.

use ndarray::prelude::*;

use crate::error::{Result, SpectraError};
use crate::linalg::{fro_norm, rcond, C64, CMat, ZERO};

/// Reciprocal condition number below which an off-diagonal coefficient is
/// treated as singular (Hypothesis A cutoff).
pub const INVERTIBILITY_RCOND: f64 = 1e-12;

/// Tolerance factor for the off-diagonal block structure of chiral symbols.
pub const CHIRAL_TOL: f64 = 1e-12;

/// Which of the three symbols attached to the operator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolVariant {
    /// H(z) = R z^{-1} + V + T z
    Plain,
    /// H(1/z)
    Tilde,
    /// T* z^{-1} + V* + R* z
    Hat,
}

/// The triple (R, V, T) of LxL coefficients defining the operator, together
/// with an optional chiral grading (an L/2 block split).
#[derive(Debug, Clone)]
pub struct BlockSymbol {
    block_size: usize,
    r: CMat,
    v: CMat,
    t: CMat,
    grading: Option<usize>,
    rcond_r: f64,
    rcond_t: f64,
}

impl BlockSymbol {
    /// Validates dimensions and Hypothesis A (R and T invertible).
    pub fn new(block_size: usize, r: CMat, v: CMat, t: CMat) -> Result<Self> {
        check_dims("R", block_size, &r)?;
        check_dims("V", block_size, &v)?;
        check_dims("T", block_size, &t)?;
        let rcond_r = rcond(&r)?;
        if rcond_r < INVERTIBILITY_RCOND {
            return Err(SpectraError::SingularCoefficient {
                name: "R",
                rcond: rcond_r,
            });
        }
        let rcond_t = rcond(&t)?;
        if rcond_t < INVERTIBILITY_RCOND {
            return Err(SpectraError::SingularCoefficient {
                name: "T",
                rcond: rcond_t,
            });
        }
        Ok(BlockSymbol {
            block_size,
            r,
            v,
            t,
            grading: None,
            rcond_r,
            rcond_t,
        })
    }

    /// Declares the chiral grading K = diag(1, -1) with blocks of size L/2 and
    /// checks that R, V, T are block off-diagonal in it.
    pub fn with_grading(self, half: usize) -> Result<Self> {
        let l = self.block_size;
        if l % 2 != 0 || half * 2 != l {
            return Err(SpectraError::OddBlockSize(l));
        }
        for (name, m) in [("R", &self.r), ("V", &self.v), ("T", &self.t)] {
            let diag_plus = m.slice(s![..half, ..half]);
            let diag_minus = m.slice(s![half.., half..]);
            let off_plus = m.slice(s![..half, half..]);
            let off_minus = m.slice(s![half.., ..half]);
            let defect = (diag_plus.iter().map(|x| x.norm_sqr()).sum::<f64>()
                + diag_minus.iter().map(|x| x.norm_sqr()).sum::<f64>())
            .sqrt();
            let off_norm = (off_plus.iter().map(|x| x.norm_sqr()).sum::<f64>()
                + off_minus.iter().map(|x| x.norm_sqr()).sum::<f64>())
            .sqrt();
            let tolerance = CHIRAL_TOL * (off_norm + 1.0);
            if defect > tolerance {
                return Err(SpectraError::NotChiral {
                    name,
                    defect,
                    tolerance,
                });
            }
        }
        Ok(BlockSymbol {
            grading: Some(half),
            ..self
        })
    }

    /// Lifts a balanced scalar band t_{-L}, ..., t_{L} to an LxL block symbol.
    ///
    /// R picks up the upper triangle of the band, T the lower one and V the
    /// central Toeplitz part; the block sections coincide entry by entry with
    /// the scalar banded sections.
    pub fn from_scalar_band(coeffs: &[C64]) -> Result<Self> {
        assert!(
            coeffs.len() >= 3 && coeffs.len() % 2 == 1,
            "band must have odd length >= 3"
        );
        let l = coeffs.len() / 2;
        let tc = |d: i64| -> C64 {
            // coefficient t_d, d in [-L, L]
            coeffs[(d + l as i64) as usize]
        };
        if tc(-(l as i64)).norm() == 0.0 || tc(l as i64).norm() == 0.0 {
            return Err(SpectraError::ZeroExtremeDiagonal);
        }
        let mut r = Array2::from_elem((l, l), ZERO);
        let mut v = Array2::from_elem((l, l), ZERO);
        let mut t = Array2::from_elem((l, l), ZERO);
        for i in 0..l {
            for j in 0..l {
                let d = i as i64 - j as i64;
                v[[i, j]] = tc(d);
                if j >= i {
                    // upper-triangular Toeplitz, top row t_L ... t_1
                    r[[i, j]] = tc(d + l as i64);
                }
                if i >= j {
                    // lower-triangular Toeplitz, first column t_{-L} ... t_{-1}
                    t[[i, j]] = tc(d - l as i64);
                }
            }
        }
        BlockSymbol::new(l, r, v, t)
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn r(&self) -> &CMat {
        &self.r
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn t(&self) -> &CMat {
        &self.t
    }

    pub fn grading(&self) -> Option<usize> {
        self.grading
    }

    /// Reciprocal condition numbers of (R, T) recorded at construction.
    pub fn coefficient_rconds(&self) -> (f64, f64) {
        (self.rcond_r, self.rcond_t)
    }

    /// The scaled symbol H^s with coefficients (R/s, V, sT).
    pub fn scale(&self, s: f64) -> Result<BlockSymbol> {
        if !(s > 0.0) {
            return Err(SpectraError::NonPositiveScale(s));
        }
        let scaled = BlockSymbol::new(
            self.block_size,
            self.r.mapv(|x| x / s),
            self.v.clone(),
            self.t.mapv(|x| x * s),
        )?;
        match self.grading {
            Some(h) => scaled.with_grading(h),
            None => Ok(scaled),
        }
    }

    /// Evaluates the chosen symbol at z.
    pub fn at(&self, z: C64, variant: SymbolVariant) -> Result<CMat> {
        if z.norm() == 0.0 {
            return Err(SpectraError::ZeroArgument);
        }
        let m = match variant {
            SymbolVariant::Plain => {
                self.r.mapv(|x| x / z) + &self.v + self.t.mapv(|x| x * z)
            }
            SymbolVariant::Tilde => return self.at(1.0 / z, SymbolVariant::Plain),
            SymbolVariant::Hat => {
                adjoint(&self.t).mapv(|x| x / z)
                    + adjoint(&self.v)
                    + adjoint(&self.r).mapv(|x| x * z)
            }
        };
        Ok(m)
    }

    /// The operator with R and T exchanged (symbol z -> H(1/z)).
    pub fn tilde(&self) -> BlockSymbol {
        BlockSymbol {
            block_size: self.block_size,
            r: self.t.clone(),
            v: self.v.clone(),
            t: self.r.clone(),
            grading: self.grading,
            rcond_r: self.rcond_t,
            rcond_t: self.rcond_r,
        }
    }

    /// The adjoint operator's associated symbol (T*, V*, R*).
    pub fn hat(&self) -> BlockSymbol {
        BlockSymbol {
            block_size: self.block_size,
            r: adjoint(&self.t),
            v: adjoint(&self.v),
            t: adjoint(&self.r),
            grading: self.grading,
            rcond_r: self.rcond_t,
            rcond_t: self.rcond_r,
        }
    }

    /// Splits a graded symbol into the pair (H_+, H_-) of L/2 symbols sitting
    /// in the off-diagonal blocks.
    pub fn chiral_split(&self) -> Result<ChiralPair> {
        let half = self.grading.ok_or(SpectraError::NoGrading)?;
        // structure was validated by with_grading; read off the blocks
        let take = |m: &CMat, upper: bool| -> CMat {
            if upper {
                m.slice(s![..half, half..]).to_owned()
            } else {
                m.slice(s![half.., ..half]).to_owned()
            }
        };
        let plus = BlockSymbol::new(
            half,
            take(&self.r, true),
            take(&self.v, true),
            take(&self.t, true),
        )?;
        let minus = BlockSymbol::new(
            half,
            take(&self.r, false),
            take(&self.v, false),
            take(&self.t, false),
        )?;
        Ok(ChiralPair { plus, minus })
    }

    /// True when V = V* and R = T*, i.e. the operator is selfadjoint.
    pub fn is_hermitian(&self) -> bool {
        let tol = 1e-12 * (fro_norm(&self.v) + fro_norm(&self.r) + 1.0);
        fro_norm(&(&self.v - &adjoint(&self.v))) <= tol
            && fro_norm(&(&self.r - &adjoint(&self.t))) <= tol
    }

    /// Cheap upper bound on the operator norm, used for default windows.
    pub fn norm_bound(&self) -> f64 {
        op_norm_bound(&self.r) + op_norm_bound(&self.v) + op_norm_bound(&self.t)
    }

    /// The dense NL x NL section with N diagonal blocks V, sub-diagonal R and
    /// super-diagonal T, for the scaled symbol.
    pub fn section(&self, n: usize) -> CMat {
        let l = self.block_size;
        let mut h = Array2::from_elem((n * l, n * l), ZERO);
        for b in 0..n {
            h.slice_mut(s![b * l..(b + 1) * l, b * l..(b + 1) * l])
                .assign(&self.v);
            if b + 1 < n {
                h.slice_mut(s![b * l..(b + 1) * l, (b + 1) * l..(b + 2) * l])
                    .assign(&self.t);
                h.slice_mut(s![(b + 1) * l..(b + 2) * l, b * l..(b + 1) * l])
                    .assign(&self.r);
            }
        }
        h
    }
}

/// The two half-size symbols carried by the off-diagonal blocks of a chiral
/// operator.
#[derive(Debug, Clone)]
pub struct ChiralPair {
    pub plus: BlockSymbol,
    pub minus: BlockSymbol,
}

impl ChiralPair {
    /// Rebuilds the parent symbol; exact inverse of `chiral_split`.
    pub fn reassemble(&self) -> Result<BlockSymbol> {
        let half = self.plus.block_size();
        let l = 2 * half;
        let put = |up: &CMat, lo: &CMat| -> CMat {
            let mut m = Array2::from_elem((l, l), ZERO);
            m.slice_mut(s![..half, half..]).assign(up);
            m.slice_mut(s![half.., ..half]).assign(lo);
            m
        };
        BlockSymbol::new(
            l,
            put(self.plus.r(), self.minus.r()),
            put(self.plus.v(), self.minus.v()),
            put(self.plus.t(), self.minus.t()),
        )?
        .with_grading(half)
    }
}

fn check_dims(name: &'static str, l: usize, m: &CMat) -> Result<()> {
    if m.nrows() != l || m.ncols() != l {
        return Err(SpectraError::DimensionMismatch {
            name,
            expected: l,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|x| x.conj())
}

fn op_norm_bound(m: &CMat) -> f64 {
    // max row sum of absolute values (infinity norm), a valid operator bound
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Convenience constructor for scalar (L = 1) models.
pub fn scalar_symbol(r: C64, v: C64, t: C64) -> Result<BlockSymbol> {
    BlockSymbol::new(1, array![[r]], array![[v]], array![[t]])
}
