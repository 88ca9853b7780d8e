//! Dense complex linear algebra helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Result of a nullspace extraction.
#[derive(Debug, Clone)]
pub struct Nullspace {
    /// Orthonormal basis vectors (in the original, unscaled unknowns).
    pub basis: Vec<CVector>,
    /// Singular values in decreasing order, after column scaling.
    pub singular_values: Vec<f64>,
}

impl Nullspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// σ_min / σ_max.
    pub fn smallest_ratio(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        }
    }
}

fn column_scales(a: &CMatrix) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect()
}

/// Right nullspace of `a`: singular vectors whose singular value relative to
/// the largest falls below `threshold`. Columns are equilibrated first.
pub fn nullspace(a: &CMatrix, threshold: f64) -> Result<Nullspace> {
    nullspace_with_scales(a, &column_scales(a), threshold)
}

/// [`nullspace`] with caller-supplied column scale factors. Useful when a
/// column is small only through cancellation and must not be blown up.
pub fn nullspace_with_scales(a: &CMatrix, scales: &[f64], threshold: f64) -> Result<Nullspace> {
    let n = a.ncols();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    // Pad short systems so that V is square.
    if scaled.nrows() < n {
        scaled = scaled.resize_vertically(n, Complex64::new(0.0, 0.0));
    }
    let svd = scaled.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NoConvergence("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut basis = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if smax == 0.0 || sv[rank] / smax < threshold {
            let mut v = CVector::from_iterator(n, v_t.row(i).iter().map(|c| c.conj()));
            for (j, s) in scales.iter().enumerate() {
                v[j] *= *s;
            }
            let norm = v.norm();
            basis.push(v / Complex64::new(norm, 0.0));
        }
    }
    Ok(Nullspace { basis, singular_values: sv })
}

/// Least-squares solution of `a x ≈ b`; returns `x` and the relative residual
/// `‖a x − b‖ / ‖b‖`.
pub fn lstsq(a: &CMatrix, b: &CVector) -> Result<(CVector, f64)> {
    let scales = column_scales(a);
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let y = svd
        .solve(b, smax * 1e-14)
        .map_err(|e| Error::NoConvergence(format!("least squares: {e}")))?;
    let mut x = y.clone();
    for (j, s) in scales.iter().enumerate() {
        x[j] *= *s;
    }
    let r = (a * &x - b).norm() / b.norm().max(f64::MIN_POSITIVE);
    Ok((x, r))
}

/// Rescales `v` so its largest-magnitude entry equals exactly one.
pub fn normalize_max(v: &CVector) -> CVector {
    let (k, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .unwrap();
    let pivot = v[k];
    let mut out = v.map(|c| c / pivot);
    out[k] = Complex64::new(1.0, 0.0);
    out
}
