//! Base matrices: the `L_R × L_C` grid of block variances.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Nonnegative `L_R × L_C` variance scales, stored row-major.
///
/// Entry `(r, c)` is the variance multiplier `W_rc` of block `(r, c)` of the
/// design matrix, whose entries have variance `W_rc / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    coupling: Option<(usize, usize)>,
}

impl BaseMatrix {
    /// An arbitrary base matrix. Entries must be finite and nonnegative.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidBaseMatrix("empty matrix"));
        }
        if entries.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "base matrix entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if entries.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBaseMatrix("entries must be finite and nonnegative"));
        }
        Ok(Self { rows, cols, entries, coupling: None })
    }

    /// The (ω, Λ) band matrix: `Λ+ω−1` rows, `Λ` columns, column `c` holding
    /// `P(Λ+ω−1)/ω` in rows `c..c+ω−1` and zero elsewhere.
    pub fn omega_lambda(omega: usize, lambda: usize, power: f64) -> Result<Self> {
        if omega == 0 || lambda == 0 {
            return Err(Error::InvalidArgument("omega and lambda must be at least 1"));
        }
        if lambda + 1 < 2 * omega {
            return Err(Error::CouplingTooShort { omega, lambda });
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidArgument("power must be positive"));
        }
        let rows = lambda + omega - 1;
        let value = power * rows as f64 / omega as f64;
        let mut entries = alloc::vec![0.0; rows * lambda];
        for c in 0..lambda {
            for r in c..c + omega {
                entries[r * lambda + c] = value;
            }
        }
        Ok(Self { rows, cols: lambda, entries, coupling: Some((omega, lambda)) })
    }

    /// The 1×1 matrix `[P]`: a standard SPARC with flat power allocation.
    pub fn flat(power: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidArgument("power must be positive"));
        }
        Ok(Self { rows: 1, cols: 1, entries: alloc::vec![power], coupling: None })
    }

    /// `L_R`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `L_C`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// `(ω, Λ)` when built by [`BaseMatrix::omega_lambda`].
    pub fn coupling(&self) -> Option<(usize, usize)> {
        self.coupling
    }

    /// Mean entry, which equals the average codeword power.
    pub fn mean_power(&self) -> f64 {
        self.entries.iter().sum::<f64>() / self.entries.len() as f64
    }

    /// Whether the mean entry is within relative tolerance `tol` of `power`.
    pub fn validate_power(&self, power: f64, tol: f64) -> bool {
        (self.mean_power() - power).abs() <= tol * power.abs()
    }

    /// Rescale so that the mean entry is `power`.
    pub fn normalized(&self, power: f64) -> Result<Self> {
        let mean = self.mean_power();
        if !(mean > 0.0) {
            return Err(Error::InvalidBaseMatrix("all entries are zero"));
        }
        let scale = power / mean;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|w| w * scale).collect(),
            coupling: self.coupling,
        })
    }

    /// Error if some column has no positive entry; such a block column carries
    /// no signal and the decoder's variance estimates are undefined for it.
    pub fn check_columns(&self) -> Result<()> {
        for c in 0..self.cols {
            if (0..self.rows).all(|r| self.get(r, c) <= 0.0) {
                return Err(Error::EmptyColumn(c));
            }
        }
        Ok(())
    }
}

/// Inner rate of each nonzero block, `R (Λ+ω−1)/Λ`, for overall rate `R`.
pub fn rate_relation(rate: f64, omega: usize, lambda: usize) -> Result<f64> {
    if omega == 0 || lambda == 0 {
        return Err(Error::InvalidArgument("omega and lambda must be at least 1"));
    }
    if lambda + 1 < 2 * omega {
        return Err(Error::CouplingTooShort { omega, lambda });
    }
    Ok(rate * (lambda + omega - 1) as f64 / lambda as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn three_by_seven() {
        let w = BaseMatrix::omega_lambda(3, 7, 2.0).unwrap();
        assert_eq!((w.rows(), w.cols()), (9, 7));
        for c in 0..7 {
            for r in 0..9 {
                let expect = if (c..c + 3).contains(&r) { 6.0 } else { 0.0 };
                assert_eq!(w.get(r, c), expect, "({r},{c})");
            }
        }
        assert!(w.validate_power(2.0, 1e-12));
        assert_eq!(w.coupling(), Some((3, 7)));
    }

    #[test]
    fn uncoupled_is_flat() {
        let w = BaseMatrix::omega_lambda(1, 1, 3.5).unwrap();
        assert_eq!(w.entries(), &[3.5]);
        assert_eq!(BaseMatrix::flat(3.5).unwrap().entries(), w.entries());
    }

    #[test]
    fn wave_preset_matrix() {
        let w = BaseMatrix::omega_lambda(6, 32, 15.0).unwrap();
        assert_eq!((w.rows(), w.cols()), (37, 32));
        let nz: Vec<f64> = w.entries().iter().copied().filter(|&x| x > 0.0).collect();
        assert_eq!(nz.len(), 6 * 32);
        for v in nz {
            assert_relative_eq!(v, 15.0 * 37.0 / 6.0);
        }
    }

    #[test]
    fn coupling_too_short() {
        assert_eq!(
            BaseMatrix::omega_lambda(4, 6, 1.0),
            Err(Error::CouplingTooShort { omega: 4, lambda: 6 })
        );
        assert!(BaseMatrix::omega_lambda(4, 7, 1.0).is_ok());
    }

    #[test]
    fn power_check() {
        let w = BaseMatrix::omega_lambda(3, 7, 1.0).unwrap();
        let mut e = w.entries().to_vec();
        assert!(BaseMatrix::new(2, 3, alloc::vec![4.0; 6]).unwrap().validate_power(4.0, 1e-9));
        e[0] = 0.0;
        let broken = BaseMatrix::new(9, 7, e).unwrap();
        assert!(!broken.validate_power(1.0, 1e-9));
        // one entry of 3P removed from 63 entries
        assert_relative_eq!(broken.mean_power(), 1.0 - 3.0 / 63.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(BaseMatrix::new(1, 2, alloc::vec![1.0, -1.0]).is_err());
        assert!(BaseMatrix::new(1, 2, alloc::vec![1.0]).is_err());
    }

    #[test]
    fn empty_column_detected() {
        let w = BaseMatrix::new(2, 2, alloc::vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(w.check_columns(), Err(Error::EmptyColumn(1)));
    }

    #[test]
    fn inner_rate() {
        let bits = |x: f64| x;
        assert_relative_eq!(rate_relation(bits(1.6), 6, 32).unwrap(), 1.85);
        assert_relative_eq!(rate_relation(bits(1.6), 8, 32).unwrap(), 1.95);
        assert_relative_eq!(rate_relation(bits(1.6), 2, 32).unwrap(), 1.65);
        assert_relative_eq!(rate_relation(bits(1.6), 4, 32).unwrap(), 1.75);
        assert_eq!(rate_relation(0.7, 1, 5).unwrap(), 0.7);
    }

    proptest! {
        #[test]
        fn band_structure(omega in 1usize..9, extra in 0usize..20, power in 0.1f64..40.0) {
            let lambda = 2 * omega - 1 + extra;
            let w = BaseMatrix::omega_lambda(omega, lambda, power).unwrap();
            let rows = lambda + omega - 1;
            prop_assert!(w.validate_power(power, 1e-12));
            for c in 0..lambda {
                let col_sum: f64 = (0..rows).map(|r| w.get(r, c)).sum();
                prop_assert!((col_sum - power * rows as f64).abs() < 1e-9 * col_sum);
            }
            for r in 0..rows {
                let nnz = w.row(r).iter().filter(|&&x| x > 0.0).count();
                // 1-based row r+1 has min(r+1, ω, Λ+ω−(r+1)) nonzeros
                prop_assert_eq!(nnz, (r + 1).min(omega).min(lambda + omega - r - 1));
            }
            let kappa = rows as f64 / lambda as f64;
            prop_assert!((rate_relation(1.0, omega, lambda).unwrap() - kappa).abs() < 1e-12);
        }
    }
}
