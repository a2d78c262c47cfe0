//! Scaled triangle inequalities of the boolean quadric polytope on the
//! `Y¹¹` block: `Y_ij + Y_ik - Y_jk - y_i <= 0`.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SymOp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("cut ({i}, {j}, {k}) is not a valid triple for n = {n}")]
    InvalidTriple { i: usize, j: usize, k: usize, n: usize },
}

/// Where the `x̄` block and the `ρ` column sit in the matrix the cuts act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutLayout {
    pub n: usize,
    pub rho: usize,
}

/// Triangle inequality with apex `i` and base `{j, k}`, 0-indexed, `j < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cut {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Cut {
    /// Canonicalizes the base so that `j < k`.
    pub fn new(i: usize, j: usize, k: usize, n: usize) -> Result<Self, CutError> {
        let (j, k) = (j.min(k), j.max(k));
        if i >= n || k >= n || i == j || i == k || j == k {
            return Err(CutError::InvalidTriple { i, j, k, n });
        }
        Ok(Self { i, j, k })
    }

    /// Positive when violated.
    pub fn violation(&self, y: &DMatrix<f64>, layout: CutLayout) -> f64 {
        y[(self.i, self.j)] + y[(self.i, self.k)] - y[(self.j, self.k)] - y[(self.i, layout.rho)]
    }

    /// The inequality as an operator `B` with `⟨B, Ỹ⟩ <= 0`.
    pub fn operator(&self, layout: CutLayout) -> SymOp {
        let mut op = SymOp::new();
        op.push_term(self.i, self.j, 1.0)
            .push_term(self.i, self.k, 1.0)
            .push_term(self.j, self.k, -1.0)
            .push_term(self.i, layout.rho, -1.0);
        op
    }
}

/// Violation of `cut` in `y`, with index validation.
pub fn violation(cut: &Cut, y: &DMatrix<f64>, layout: CutLayout) -> Result<f64, CutError> {
    let Cut { i, j, k } = *cut;
    if i >= layout.n || j >= layout.n || k >= layout.n || layout.rho >= y.nrows() {
        return Err(CutError::InvalidTriple { i, j, k, n: layout.n });
    }
    Ok(cut.violation(y, layout))
}

/// Active cuts and their multipliers `μ >= 0`, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    multipliers: Vec<f64>,
    members: HashSet<Cut>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn contains(&self, cut: &Cut) -> bool {
        self.members.contains(cut)
    }

    /// Appends `cut` with multiplier `mu`; duplicates are ignored.
    pub fn insert(&mut self, cut: Cut, mu: f64) -> bool {
        if !self.members.insert(cut) {
            return false;
        }
        self.cuts.push(cut);
        self.multipliers.push(mu.max(0.0));
        true
    }

    /// Overwrites the multipliers, clipping to `μ >= 0`.
    pub fn set_multipliers(&mut self, mu: &[f64]) {
        assert_eq!(mu.len(), self.cuts.len(), "multiplier count must match the pool");
        for (dst, &src) in self.multipliers.iter_mut().zip(mu) {
            *dst = src.max(0.0);
        }
    }

    /// Drops cuts whose multiplier is below `dual_tol`; returns the number
    /// removed.
    pub fn purge(&mut self, dual_tol: f64) -> usize {
        let before = self.cuts.len();
        let mut keep_cuts = Vec::with_capacity(before);
        let mut keep_mu = Vec::with_capacity(before);
        for (cut, mu) in self.cuts.drain(..).zip(self.multipliers.drain(..)) {
            if mu >= dual_tol {
                keep_cuts.push(cut);
                keep_mu.push(mu);
            } else {
                self.members.remove(&cut);
            }
        }
        self.cuts = keep_cuts;
        self.multipliers = keep_mu;
        before - self.cuts.len()
    }
}

/// Returns up to `batch` cuts with violation at least `tol` that are not in
/// `pool`, most violated first, ties broken by `(i, j, k)`.
pub fn separate(y: &DMatrix<f64>, layout: CutLayout, pool: &CutPool, batch: usize, tol: f64) -> Vec<Cut> {
    if batch == 0 {
        return Vec::new();
    }
    let n = layout.n;
    let mut found: Vec<(f64, Cut)> = Vec::new();
    for i in 0..n {
        let yi = y[(i, layout.rho)];
        for j in 0..n {
            if j == i {
                continue;
            }
            let yij = y[(i, j)];
            for k in j + 1..n {
                if k == i {
                    continue;
                }
                let v = yij + y[(i, k)] - y[(j, k)] - yi;
                if v >= tol {
                    let cut = Cut { i, j, k };
                    if !pool.contains(&cut) {
                        found.push((v, cut));
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    found.truncate(batch);
    found.into_iter().map(|(_, c)| c).collect()
}
