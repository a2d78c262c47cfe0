//! Dense symmetric eigendecomposition helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: DMatrix<f64>,
}

impl Eigh {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.values);
        scaled * self.vectors.transpose()
    }
}

/// Symmetrizes `(X + Xᵀ)/2` and decomposes.
pub fn eigh(x: &DMatrix<f64>) -> Result<Eigh, SpectralError> {
    if !x.is_square() {
        return Err(SpectralError::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let sym = (x + x.transpose()) * 0.5;
    let dec = SymmetricEigen::new(sym);
    let k = dec.eigenvalues.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = DVector::from_iterator(k, order.iter().map(|&i| dec.eigenvalues[i]));
    let vectors = DMatrix::from_fn(k, k, |r, c| dec.eigenvectors[(r, order[c])]);
    Ok(Eigh { values, vectors })
}

/// Eigenvalues of magnitude at most this times `max(1, ‖X‖_F)` count as zero
/// in [`project_psd`].
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-12;

/// Projection onto the PSD cone in Frobenius norm, `Σ_{λ>0} λ v vᵀ`.
pub fn project_psd(x: &DMatrix<f64>) -> Result<DMatrix<f64>, SpectralError> {
    let dec = eigh(x)?;
    Ok(psd_part(&dec, x.norm()))
}

/// PSD part of an existing decomposition. `scale` is the Frobenius norm of
/// the decomposed matrix.
pub(crate) fn psd_part(dec: &Eigh, scale: f64) -> DMatrix<f64> {
    let k = dec.values.len();
    let cutoff = ZERO_EIGENVALUE_RTOL * scale.max(1.0);
    let keep: Vec<usize> = (0..k).filter(|&i| dec.values[i] > cutoff).collect();
    if keep.is_empty() {
        return DMatrix::zeros(k, k);
    }
    let v = DMatrix::from_fn(k, keep.len(), |r, c| dec.vectors[(r, keep[c])]);
    let vs = DMatrix::from_fn(k, keep.len(), |r, c| v[(r, c)] * dec.values[keep[c]]);
    let p = vs * v.transpose();
    (&p + p.transpose()) * 0.5
}

/// Sum of the negative eigenvalues (0 for PSD input) and the smallest
/// eigenvalue.
pub fn negative_eigenvalue_sum(x: &DMatrix<f64>) -> Result<(f64, f64), SpectralError> {
    let dec = eigh(x)?;
    let sum = dec.values.iter().filter(|&&v| v < 0.0).sum();
    let min = dec.values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((sum, min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn eigh_small_examples() {
        let d = eigh(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        assert_eq!(d.values.as_slice(), &[1.0, 3.0]);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let d = eigh(&x).unwrap();
        assert_abs_diff_eq!(d.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x = random_symmetric(20, &mut rng);
            let d = eigh(&x).unwrap();
            assert!((d.reconstruct() - &x).norm() <= 1e-8 * (1.0 + x.norm()));
            let gram = d.vectors.transpose() * &d.vectors;
            assert!((gram - DMatrix::identity(20, 20)).amax() < 1e-10);
            assert!(d.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigh_rejects_bad_input() {
        let mut x = DMatrix::zeros(3, 3);
        x[(1, 2)] = f64::NAN;
        assert_eq!(eigh(&x).unwrap_err(), SpectralError::NonFinite);
        assert!(matches!(eigh(&DMatrix::zeros(2, 3)), Err(SpectralError::NotSquare { .. })));
    }

    #[test]
    fn projection_examples() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
        let p = project_psd(&x).unwrap();
        assert_abs_diff_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0])), epsilon = 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = DMatrix::from_fn(6, 4, |_, _| rng.gen_range(-1.0..1.0));
        let psd = &b * b.transpose();
        assert!((project_psd(&psd).unwrap() - &psd).amax() <= 1e-10);
    }

    #[test]
    fn moreau_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let x = random_symmetric(12, &mut rng);
            let p = project_psd(&x).unwrap();
            let rest = &x - &p;
            let (_, min_p) = negative_eigenvalue_sum(&p).unwrap();
            assert!(min_p >= -1e-10);
            let max_rest = eigh(&rest).unwrap().values.max();
            assert!(max_rest <= 1e-10);
            assert!(p.dot(&rest).abs() <= 1e-10);
            // Idempotence, trace and norm bounds.
            assert!((project_psd(&p).unwrap() - &p).amax() <= 1e-9);
            assert!(p.trace() >= 0.0);
            assert!(p.norm() <= x.norm() + 1e-12);
        }
    }

    #[test]
    fn negative_sum_examples() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.25, -0.5]));
        assert_eq!(negative_eigenvalue_sum(&x).unwrap(), (-0.75, -0.5));
        let psd = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        assert_eq!(negative_eigenvalue_sum(&psd).unwrap(), (0.0, 0.5));

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_symmetric(15, &mut rng);
        let vals = eigh(&x).unwrap().values;
        let expected: f64 = vals.iter().filter(|v| **v < 0.0).sum();
        let (sum, min) = negative_eigenvalue_sum(&x).unwrap();
        assert_abs_diff_eq!(sum, expected, epsilon = 1e-12);
        assert_eq!(min, vals[0]);
    }
}
