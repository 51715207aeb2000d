//! Small dense symmetric positive-definite helpers.
//!
//! Matrices here are covariance matrices of a handful of assets, so a plain
//! unblocked Cholesky is all that is needed.

use nalgebra::{DMatrix, DVector};

/// Pivots must exceed this fraction of the largest diagonal entry.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Symmetry tolerance relative to the largest absolute entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Largest |a_ij - a_ji| divided by the largest |a_ij| (0 for the zero matrix).
pub fn symmetry_defect(a: &DMatrix<f64>) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Lower-triangular factor `L` with `A = L L'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: DMatrix<f64>,
    min_relative_pivot: f64,
}

/// Failed factorization: the index and relative size of the offending pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub index: usize,
    pub relative_pivot: f64,
}

impl Cholesky {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, NotPositiveDefinite> {
        assert!(a.is_square(), "Cholesky of a non-square matrix");
        let n = a.nrows();
        let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(a[(i, i)]));
        let mut lower = DMatrix::<f64>::zeros(n, n);
        let mut min_relative_pivot = f64::INFINITY;

        for j in 0..n {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= lower[(j, k)] * lower[(j, k)];
            }
            let relative = if max_diag > 0.0 { pivot / max_diag } else { pivot };
            if !(relative > PIVOT_TOLERANCE) {
                return Err(NotPositiveDefinite {
                    index: j,
                    relative_pivot: relative,
                });
            }
            min_relative_pivot = min_relative_pivot.min(relative);
            let d = pivot.sqrt();
            lower[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)];
                }
                lower[(i, j)] = s / d;
            }
        }

        Ok(Cholesky {
            lower,
            min_relative_pivot,
        })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Smallest pivot seen, relative to the largest diagonal entry.
    pub fn min_relative_pivot(&self) -> f64 {
        self.min_relative_pivot
    }

    /// Solves `A x = rhs` by forward then backward substitution.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "right-hand side has the wrong length");
        let l = &self.lower;

        let mut y = rhs.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }
}
