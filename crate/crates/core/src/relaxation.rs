//! Conic relaxations in the common form used by the solver:
//!
//! `min ⟨C, Ỹ⟩  s.t.  𝓐(Ỹ) = b,  𝓑(Ỹ) <= 0,  Ỹ >= 0,  Ỹ = W R Wᵀ,  R ⪰ 0`.
//!
//! Both the facially reduced lifted model and the basic `(n+1)`-dimensional
//! relaxation (with `W = I`) are instances.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cuts::{Cut, CutLayout};
use crate::graph::Graph;
use crate::model::{half, ModelError, ModelMatrices, SymOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationKind {
    Basic,
    Lifted,
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub kind: RelaxationKind,
    pub n: usize,
    /// Order of `Ỹ`.
    pub dim: usize,
    /// `dim × r` with orthonormal columns.
    pub w: DMatrix<f64>,
    pub cost: DMatrix<f64>,
    pub eq_ops: Vec<SymOp>,
    pub b: DVector<f64>,
    /// Inequality rows that are always present, ahead of any cuts.
    pub fixed_ineq: Vec<SymOp>,
    /// Where triangle cuts act; `None` disables separation.
    pub cut_layout: Option<CutLayout>,
    /// Upper bound on `λ_max(Ỹ)` over the feasible set.
    pub r_bar: f64,
}

/// `⌊n/2⌋² + n`, a bound on `tr(Ỹ)` for the lifted model.
pub fn trace_bound(n: usize) -> f64 {
    let k = half(n) as f64;
    k * k + n as f64
}

impl Relaxation {
    pub fn lifted(model: &ModelMatrices) -> Self {
        let idx = model.index;
        Self {
            kind: RelaxationKind::Lifted,
            n: model.n,
            dim: idx.dim(),
            w: model.w.clone(),
            cost: model.ltilde.clone(),
            eq_ops: model.eq_ops.clone(),
            b: model.b.clone(),
            fixed_ineq: Vec::new(),
            cut_layout: Some(CutLayout { n: model.n, rho: idx.rho() }),
            r_bar: trace_bound(model.n),
        }
    }

    /// `min ⟨L, Ȳ⟩` over `[[Ȳ, ȳ], [ȳᵀ, ρ]]` DNN with `eᵀȳ = 1`,
    /// `diag(Ȳ) = ȳ`, `1/⌊n/2⌋ <= ρ <= 1` and `1 <= ⟨E, Ȳ⟩ <= ⌊n/2⌋`.
    ///
    /// The four bounds are written as homogeneous rows by multiplying
    /// constants with `eᵀȳ`, which equals 1 on the feasible set.
    pub fn basic(g: &Graph) -> Result<Self, ModelError> {
        let n = g.n();
        if n < 3 {
            return Err(ModelError::TooSmall(n));
        }
        let dim = n + 1;
        let rho = n;
        let k = half(n) as f64;
        let mut cost = DMatrix::zeros(dim, dim);
        cost.view_mut((0, 0), (n, n)).copy_from(&g.laplacian());

        let mut eq_ops = Vec::with_capacity(n + 1);
        let mut sum_y = SymOp::new();
        for i in 0..n {
            sum_y.push_term(i, rho, 1.0);
        }
        eq_ops.push(sum_y);
        for i in 0..n {
            let mut op = SymOp::new();
            op.push_term(i, i, 1.0).push_term(i, rho, -1.0);
            eq_ops.push(op);
        }
        let mut b = DVector::zeros(n + 1);
        b[0] = 1.0;

        let sum_y_times = |c: f64, op: &mut SymOp| {
            for i in 0..n {
                op.push_term(i, rho, c);
            }
        };
        let sum_big_y = |c: f64, op: &mut SymOp| {
            for i in 0..n {
                for j in i..n {
                    op.push_term(i, j, if i == j { c } else { 2.0 * c });
                }
            }
        };
        let mut rho_lower = SymOp::new();
        sum_y_times(1.0 / k, &mut rho_lower);
        rho_lower.push_term(rho, rho, -1.0);
        let mut rho_upper = SymOp::new();
        rho_upper.push_term(rho, rho, 1.0);
        sum_y_times(-1.0, &mut rho_upper);
        let mut sum_lower = SymOp::new();
        sum_y_times(1.0, &mut sum_lower);
        sum_big_y(-1.0, &mut sum_lower);
        let mut sum_upper = SymOp::new();
        sum_big_y(1.0, &mut sum_upper);
        sum_y_times(-k, &mut sum_upper);

        Ok(Self {
            kind: RelaxationKind::Basic,
            n,
            dim,
            w: DMatrix::identity(dim, dim),
            cost,
            eq_ops,
            b,
            fixed_ineq: vec![rho_lower, rho_upper, sum_lower, sum_upper],
            cut_layout: None,
            r_bar: dim as f64,
        })
    }

    /// Number of columns of `W`.
    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn p(&self) -> usize {
        self.eq_ops.len()
    }

    /// Fixed rows followed by the cut operators.
    pub fn inequality_ops(&self, cuts: &[Cut]) -> Vec<SymOp> {
        let mut ops = self.fixed_ineq.clone();
        if let Some(layout) = self.cut_layout {
            ops.extend(cuts.iter().map(|c| c.operator(layout)));
        }
        ops
    }

    /// `Ỹ = W R Wᵀ`.
    pub fn lift(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let y = &self.w * r * self.w.transpose();
        (&y + y.transpose()) * 0.5
    }

    /// `Wᵀ X W`.
    pub fn reduce(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.w.tr_mul(x) * &self.w;
        (&k + k.transpose()) * 0.5
    }

    /// `𝓐ᵀν - 𝓑ᵀμ + S - C`, the matrix whose reduction must vanish at
    /// dual feasibility together with `Z`.
    pub fn dual_slack(&self, ineq: &[SymOp], nu: &[f64], mu: &[f64], s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut t = s - &self.cost;
        for (op, &v) in self.eq_ops.iter().zip(nu) {
            op.add_to(&mut t, v);
        }
        for (op, &v) in ineq.iter().zip(mu) {
            op.add_to(&mut t, -v);
        }
        t
    }

    /// Constraint violations of `y` (order `dim`).
    pub fn feasibility(&self, y: &DMatrix<f64>, cuts: &[Cut]) -> Feasibility {
        let eq = self
            .eq_ops
            .iter()
            .zip(self.b.iter())
            .map(|(op, &bi)| (op.inner(y) - bi).abs())
            .fold(0.0, f64::max);
        let ineq = self.inequality_ops(cuts).iter().map(|op| op.inner(y)).fold(0.0, f64::max);
        let negative = y.iter().map(|&v| -v).fold(0.0, f64::max);
        let sym = (y + y.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        Feasibility { equality: eq, inequality: ineq, negativity: negative, psd: (-min_eig).max(0.0) }
    }

    /// `⟨C, Ỹ⟩`.
    pub fn objective(&self, y: &DMatrix<f64>) -> f64 {
        self.cost.dot(y)
    }
}

/// Largest violation of each constraint family; all zero when feasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub equality: f64,
    pub inequality: f64,
    pub negativity: f64,
    pub psd: f64,
}

impl Feasibility {
    pub fn max(&self) -> f64 {
        self.equality.max(self.inequality).max(self.negativity).max(self.psd)
    }
}

/// Dual variables `(ν, μ, S)` and the penalty `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub nu: DVector<f64>,
    /// Fixed inequality rows first, then cuts in pool order.
    pub mu: DVector<f64>,
    /// Symmetric, entrywise nonnegative.
    pub s: DMatrix<f64>,
    pub alpha: f64,
}

/// Length of the packed upper triangle of an order-`dim` matrix.
pub fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

impl DualState {
    pub fn zeros(p: usize, q: usize, dim: usize, alpha: f64) -> Self {
        Self { nu: DVector::zeros(p), mu: DVector::zeros(q), s: DMatrix::zeros(dim, dim), alpha }
    }

    pub fn packed_len(&self) -> usize {
        self.nu.len() + self.mu.len() + packed_len(self.s.nrows())
    }

    /// `(ν, μ, upper triangle of S row by row)`.
    pub fn pack(&self) -> Vec<f64> {
        let dim = self.s.nrows();
        let mut x = Vec::with_capacity(self.packed_len());
        x.extend(self.nu.iter());
        x.extend(self.mu.iter());
        for i in 0..dim {
            for j in i..dim {
                x.push(self.s[(i, j)]);
            }
        }
        x
    }

    pub fn unpack(x: &[f64], p: usize, q: usize, dim: usize, alpha: f64) -> Self {
        assert_eq!(x.len(), p + q + packed_len(dim), "packed dual has the wrong length");
        let nu = DVector::from_column_slice(&x[..p]);
        let mu = DVector::from_column_slice(&x[p..p + q]);
        let mut s = DMatrix::zeros(dim, dim);
        let mut at = p + q;
        for i in 0..dim {
            for j in i..dim {
                s[(i, j)] = x[at];
                s[(j, i)] = x[at];
                at += 1;
            }
        }
        Self { nu, mu, s, alpha }
    }

    /// Box of the packed vector: `ν` free, `μ >= 0`, `S >= 0`.
    pub fn bounds(p: usize, q: usize, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let total = p + q + packed_len(dim);
        let mut lower = vec![0.0; total];
        lower[..p].fill(f64::NEG_INFINITY);
        (lower, vec![f64::INFINITY; total])
    }

    /// `bᵀν`.
    pub fn dual_objective(&self, b: &DVector<f64>) -> f64 {
        b.dot(&self.nu)
    }
}
