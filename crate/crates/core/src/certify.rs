//! Safe lower bounds from approximate dual solutions.
//!
//! For any `Ỹ = W R Wᵀ` feasible for the relaxation,
//! `⟨C, Ỹ⟩ >= bᵀν + ⟨W Z̃ Wᵀ, Ỹ⟩ >= bᵀν + λ_max(Ỹ) Σ λ_i⁻(W Z̃ Wᵀ)` with
//! `Z̃ = Wᵀ(C - 𝓐ᵀν + 𝓑ᵀμ - S)W`, as long as `μ, S >= 0`. Replacing
//! `λ_max(Ỹ)` by an upper bound `r̄` keeps the inequality.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::cuts::Cut;
use crate::relaxation::{DualState, Relaxation};
use crate::spectral::{negative_eigenvalue_sum, SpectralError};

/// Negative multipliers down to this are treated as rounding noise.
pub const CLIP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("multiplier mu[{index}] = {value} is negative")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("slack S[{row}, {col}] = {value} is negative")]
    NegativeSlack { row: usize, col: usize, value: f64 },
    #[error("{expected} multipliers expected, got {got}")]
    MultiplierCount { expected: usize, got: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// `bᵀν`.
    pub dual_objective: f64,
    /// `r̄ · Σ λ_i⁻(W Z̃ Wᵀ)`, never positive.
    pub correction: f64,
    pub certified_lb: f64,
    pub r_bar: f64,
    pub lambda_min: f64,
}

/// Lower bound from `bᵀν` and the spectrum of `Z̃`.
pub fn bound_from_spectrum(dual_objective: f64, wzw: &DMatrix<f64>, r_bar: f64) -> Result<Certificate, SpectralError> {
    let (neg, lambda_min) = negative_eigenvalue_sum(wzw)?;
    let correction = if neg < 0.0 { r_bar * neg } else { 0.0 };
    Ok(Certificate {
        dual_objective,
        correction,
        certified_lb: dual_objective + correction,
        r_bar,
        lambda_min,
    })
}

/// Certifies `dual` against `rel` with the inequality rows of `cuts`.
pub fn certify(rel: &Relaxation, cuts: &[Cut], dual: &DualState, r_bar: f64) -> Result<Certificate, CertifyError> {
    let ineq = rel.inequality_ops(cuts);
    if dual.mu.len() != ineq.len() {
        return Err(CertifyError::MultiplierCount { expected: ineq.len(), got: dual.mu.len() });
    }
    let mut mu = dual.mu.clone();
    for (index, v) in mu.iter_mut().enumerate() {
        if *v < -CLIP_TOLERANCE {
            return Err(CertifyError::NegativeMultiplier { index, value: *v });
        }
        *v = v.max(0.0);
    }
    let mut s = dual.s.clone();
    for row in 0..s.nrows() {
        for col in 0..s.ncols() {
            let v = s[(row, col)];
            if v < -CLIP_TOLERANCE {
                return Err(CertifyError::NegativeSlack { row, col, value: v });
            }
            s[(row, col)] = v.max(0.0);
        }
    }
    let slack = rel.dual_slack(&ineq, dual.nu.as_slice(), mu.as_slice(), &s);
    // `W` has orthonormal columns, so `W Z̃ Wᵀ` has the spectrum of `Z̃` plus
    // structural zeros; decomposing `Z̃` keeps those zeros exact.
    let ztilde = -rel.reduce(&slack);
    Ok(bound_from_spectrum(dual.dual_objective(&rel.b), &ztilde, r_bar)?)
}
