//! Constant data of the lifted edge-expansion model.
//!
//! The lifted vector is `x = (x̄, z̄, s, t)` with `x̄ + z̄ = e`,
//! `eᵀx̄ + s = ⌊n/2⌋` and `eᵀx̄ - t = 1`, i.e. `Cx = d`. The matrix variable
//! is `Ỹ = [[Y, y], [yᵀ, ρ]]` of order `2n + 3`, and every PSD `Ỹ` with
//! `MỸ = 0` (where `M = (C | -d)`) is `W R Wᵀ` for an orthonormal kernel
//! basis `W` of `M`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension { expected: usize, rows: usize, cols: usize },
    #[error("n = {0} is below the minimum of 3")]
    TooSmall(usize),
}

/// A sparse symmetric matrix `A` stored by its upper triangle.
///
/// An entry `(i, j, v)` with `i < j` stands for `v` at both `(i, j)` and
/// `(j, i)`, so `⟨A, Y⟩ = Σ_diag v·Y_ii + Σ_off 2v·Y_ij` for symmetric `Y`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SymOp {
    entries: Vec<(usize, usize, f64)>,
}

impl SymOp {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` at `(i, j)` and `(j, i)` (once if `i == j`).
    pub fn push(&mut self, i: usize, j: usize, v: f64) -> &mut Self {
        self.entries.push((i.min(j), i.max(j), v));
        self
    }

    /// Adds a term `coef · Y_ij` to the represented scalar functional,
    /// splitting off-diagonal weight evenly between `(i, j)` and `(j, i)`.
    pub fn push_term(&mut self, i: usize, j: usize, coef: f64) -> &mut Self {
        let v = if i == j { coef } else { 0.5 * coef };
        self.push(i, j, v)
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// `⟨A, Y⟩` for symmetric `Y`.
    pub fn inner(&self, y: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * y[(i, i)] } else { v * (y[(i, j)] + y[(j, i)]) })
            .sum()
    }

    /// `X += scale · A`.
    pub fn add_to(&self, x: &mut DMatrix<f64>, scale: f64) {
        for &(i, j, v) in &self.entries {
            x[(i, j)] += scale * v;
            if i != j {
                x[(j, i)] += scale * v;
            }
        }
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(dim, dim);
        self.add_to(&mut x, 1.0);
        x
    }
}

/// Which diagonal constraints are appended to the equality operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DiagMode {
    /// Only `eᵀy¹ = 1` and `diag(Y¹²) = 0`.
    #[default]
    None,
    /// Adds `diag(Y¹¹) = y¹`.
    #[value(name = "y1")]
    #[serde(rename = "y1")]
    Y1Only,
    /// Adds `diag(Y¹¹) = y¹` and `diag(Y²²) = y²`.
    Both,
}

impl DiagMode {
    /// Number of equality rows for problem size `n`.
    pub fn rows(self, n: usize) -> usize {
        match self {
            DiagMode::None => n + 1,
            DiagMode::Y1Only => 2 * n + 1,
            DiagMode::Both => 3 * n + 1,
        }
    }
}

/// Flat (0-based) positions of the blocks of the lifted space `R^{2n+3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    n: usize,
}

impl BlockIndex {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn dim(self) -> usize {
        2 * self.n + 3
    }

    /// Position of `x̄_i`.
    pub fn x(self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    /// Position of `z̄_i`.
    pub fn z(self, i: usize) -> usize {
        debug_assert!(i < self.n);
        self.n + i
    }

    pub fn s(self) -> usize {
        2 * self.n
    }

    pub fn t(self) -> usize {
        2 * self.n + 1
    }

    pub fn rho(self) -> usize {
        2 * self.n + 2
    }
}

/// `⌊n/2⌋`.
pub fn half(n: usize) -> usize {
    n / 2
}

/// The `n + 1` integer kernel vectors of `M`: for `i < n`,
/// `w_i = (u_i, -u_i, -1, 1, 0)`, and last `(0, e, ⌊n/2⌋, -1, 1)`.
pub fn kernel_basis_raw(n: usize) -> Vec<DVector<f64>> {
    let idx = BlockIndex::new(n);
    let mut basis = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut w = DVector::zeros(idx.dim());
        w[idx.x(i)] = 1.0;
        w[idx.z(i)] = -1.0;
        w[idx.s()] = -1.0;
        w[idx.t()] = 1.0;
        basis.push(w);
    }
    let mut w = DVector::zeros(idx.dim());
    for i in 0..n {
        w[idx.z(i)] = 1.0;
    }
    w[idx.s()] = half(n) as f64;
    w[idx.t()] = -1.0;
    w[idx.rho()] = 1.0;
    basis.push(w);
    basis
}

/// All constants of the facially reduced lifted relaxation.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    pub n: usize,
    pub mode: DiagMode,
    pub index: BlockIndex,
    /// `(n+2) × (2n+2)`.
    pub c: DMatrix<f64>,
    /// Length `n + 2`.
    pub d: DVector<f64>,
    /// `(C | -d)`, `(n+2) × (2n+3)`.
    pub m: DMatrix<f64>,
    /// Orthonormal basis of `ker M`, `(2n+3) × (n+1)`.
    pub w: DMatrix<f64>,
    /// `Diag(L, 0_{n+3})`.
    pub ltilde: DMatrix<f64>,
    pub eq_ops: Vec<SymOp>,
    pub b: DVector<f64>,
}

/// Builds `C`, `d`, `M`, `W`, `L̃` and the equality operator for `g`.
pub fn build_model(g: &Graph, mode: DiagMode) -> Result<ModelMatrices, ModelError> {
    let n = g.n();
    if n < 3 {
        return Err(ModelError::TooSmall(n));
    }
    let idx = BlockIndex::new(n);
    let dim = idx.dim();
    let k = half(n) as f64;

    let mut c = DMatrix::zeros(n + 2, 2 * n + 2);
    for i in 0..n {
        c[(0, idx.x(i))] = 1.0;
        c[(1, idx.x(i))] = 1.0;
        c[(2 + i, idx.x(i))] = 1.0;
        c[(2 + i, idx.z(i))] = 1.0;
    }
    c[(0, idx.s())] = 1.0;
    c[(1, idx.t())] = -1.0;
    let mut d = DVector::from_element(n + 2, 1.0);
    d[0] = k;

    let mut m = DMatrix::zeros(n + 2, dim);
    m.columns_mut(0, 2 * n + 2).copy_from(&c);
    m.set_column(dim - 1, &(-&d));

    let raw = kernel_basis_raw(n);
    let basis = DMatrix::from_columns(&raw);
    let w = basis.qr().q();

    let mut ltilde = DMatrix::zeros(dim, dim);
    ltilde.view_mut((0, 0), (n, n)).copy_from(&g.laplacian());

    let rho = idx.rho();
    let mut eq_ops = Vec::with_capacity(mode.rows(n));
    let mut b = Vec::with_capacity(mode.rows(n));

    let mut sum_y1 = SymOp::new();
    for i in 0..n {
        sum_y1.push_term(idx.x(i), rho, 1.0);
    }
    eq_ops.push(sum_y1);
    b.push(1.0);

    for i in 0..n {
        let mut op = SymOp::new();
        op.push_term(idx.x(i), idx.z(i), 1.0);
        eq_ops.push(op);
        b.push(0.0);
    }
    if matches!(mode, DiagMode::Y1Only | DiagMode::Both) {
        for i in 0..n {
            let mut op = SymOp::new();
            op.push_term(idx.x(i), idx.x(i), 1.0).push_term(idx.x(i), rho, -1.0);
            eq_ops.push(op);
            b.push(0.0);
        }
    }
    if mode == DiagMode::Both {
        for i in 0..n {
            let mut op = SymOp::new();
            op.push_term(idx.z(i), idx.z(i), 1.0).push_term(idx.z(i), rho, -1.0);
            eq_ops.push(op);
            b.push(0.0);
        }
    }

    Ok(ModelMatrices {
        n,
        mode,
        index: idx,
        c,
        d,
        m,
        w,
        ltilde,
        eq_ops,
        b: DVector::from_vec(b),
    })
}

impl ModelMatrices {
    /// `p`, the number of equality constraints.
    pub fn p(&self) -> usize {
        self.eq_ops.len()
    }

    /// `Ỹ = W R Wᵀ`.
    pub fn lift(&self, r: &DMatrix<f64>) -> Result<Lifted, ModelError> {
        let k = self.n + 1;
        if r.shape() != (k, k) {
            return Err(ModelError::Dimension { expected: k, rows: r.nrows(), cols: r.ncols() });
        }
        Ok(Lifted { y: &self.w * r * self.w.transpose(), index: self.index })
    }

    /// `WᵀL̃W`, the cost in the reduced space.
    pub fn reduced_cost(&self) -> DMatrix<f64> {
        self.w.transpose() * &self.ltilde * &self.w
    }
}

/// A lifted matrix `Ỹ` of order `2n + 3` with block accessors.
///
/// Block names follow `Y = [[Y¹¹ Y¹² Y¹³ Y¹⁴], …]` for the leading
/// `(2n+2) × (2n+2)` part, `y = (y¹, y², y³, y⁴)` for the last column and `ρ`
/// for the corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifted {
    pub y: DMatrix<f64>,
    pub index: BlockIndex,
}

impl Lifted {
    pub fn from_matrix(y: DMatrix<f64>, n: usize) -> Result<Self, ModelError> {
        let dim = 2 * n + 3;
        if y.shape() != (dim, dim) {
            return Err(ModelError::Dimension { expected: dim, rows: y.nrows(), cols: y.ncols() });
        }
        Ok(Self { y, index: BlockIndex::new(n) })
    }

    fn n(&self) -> usize {
        self.index.n()
    }

    pub fn y11(&self) -> DMatrix<f64> {
        let n = self.n();
        self.y.view((0, 0), (n, n)).into_owned()
    }

    pub fn y12(&self) -> DMatrix<f64> {
        let n = self.n();
        self.y.view((0, n), (n, n)).into_owned()
    }

    pub fn y22(&self) -> DMatrix<f64> {
        let n = self.n();
        self.y.view((n, n), (n, n)).into_owned()
    }

    /// Column `2n+1` restricted to the `x̄` rows.
    pub fn y13(&self) -> DVector<f64> {
        self.column_block(self.index.s(), 0)
    }

    pub fn y14(&self) -> DVector<f64> {
        self.column_block(self.index.t(), 0)
    }

    pub fn y23(&self) -> DVector<f64> {
        self.column_block(self.index.s(), self.n())
    }

    pub fn y24(&self) -> DVector<f64> {
        self.column_block(self.index.t(), self.n())
    }

    fn column_block(&self, col: usize, start: usize) -> DVector<f64> {
        self.y.view((start, col), (self.n(), 1)).column(0).into_owned()
    }

    pub fn y1(&self) -> DVector<f64> {
        self.column_block(self.index.rho(), 0)
    }

    pub fn y2(&self) -> DVector<f64> {
        self.column_block(self.index.rho(), self.n())
    }

    pub fn y3(&self) -> f64 {
        self.y[(self.index.s(), self.index.rho())]
    }

    pub fn y4(&self) -> f64 {
        self.y[(self.index.t(), self.index.rho())]
    }

    pub fn y33(&self) -> f64 {
        self.y[(self.index.s(), self.index.s())]
    }

    pub fn y44(&self) -> f64 {
        self.y[(self.index.t(), self.index.t())]
    }

    pub fn y34(&self) -> f64 {
        self.y[(self.index.s(), self.index.t())]
    }

    pub fn rho(&self) -> f64 {
        self.y[(self.index.rho(), self.index.rho())]
    }

    /// The leading `(2n+2)` block `Y`.
    pub fn big_y(&self) -> DMatrix<f64> {
        let k = 2 * self.n() + 2;
        self.y.view((0, 0), (k, k)).into_owned()
    }

    /// The vector `y` of length `2n+2`.
    pub fn small_y(&self) -> DVector<f64> {
        let k = 2 * self.n() + 2;
        self.y.view((0, k), (k, 1)).column(0).into_owned()
    }

    /// The `(n+1)`-order matrix `[[Y¹¹, y¹], [y¹ᵀ, ρ]]` that a basic
    /// relaxation point is read from.
    pub fn basic_projection(&self) -> DMatrix<f64> {
        let n = self.n();
        let rho = self.index.rho();
        DMatrix::from_fn(n + 1, n + 1, |i, j| {
            let a = if i == n { rho } else { i };
            let b = if j == n { rho } else { j };
            self.y[(a, b)]
        })
    }
}
