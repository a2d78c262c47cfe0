//! Augmented Lagrangian method on the dual, with triangle-cut rounds.
//!
//! For fixed primal `R` and penalty `α`, the inner function is
//! `F_α(ν, μ, S) = bᵀν - ‖P⪰0(K + αR)‖² / (2α) + α‖R‖² / 2` where
//! `K = Wᵀ(𝓐ᵀν - 𝓑ᵀμ + S - C)W`; it is concave and maximized over
//! `μ, S >= 0` by L-BFGS-B. Afterwards `R ← R + (K + Z)/α = P⪰0(K + αR)/α`
//! with `Z = P⪰0(-(K + αR))`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::certify::{certify, Certificate, CertifyError};
use crate::cuts::{separate, CutPool};
use crate::graph::Graph;
use crate::lbfgsb::{BoxProblem, LbfgsbError, LbfgsbOptions, Status};
use crate::model::{build_model, DiagMode, ModelError, SymOp};
use crate::relaxation::{packed_len, DualState, Relaxation};
use crate::spectral::{eigh, project_psd, psd_part, SpectralError};

#[derive(Debug, Error)]
pub enum AlmError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("inner solver failed in ALM iteration {iteration}: {source}")]
    Inner { iteration: usize, source: LbfgsbError },
    #[error("primal matrix diverged in ALM iteration {iteration} (‖R‖ = {norm:e})")]
    Diverged { iteration: usize, norm: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("certification failed: {0}")]
    Certify(#[from] CertifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub alpha_init: f64,
    pub alpha_min: f64,
    pub alpha_factor: f64,
    pub cut_batch: usize,
    pub cut_tol: f64,
    pub min_new_cuts: usize,
    pub purge_tol: f64,
    pub warmup_iters: usize,
    pub post_iters: usize,
    pub post_correction_tol: f64,
    #[serde(skip)]
    pub inner: LbfgsbOptions,
    pub feasibility_tol: f64,
    pub diag: DiagMode,
    /// Abort once `‖R‖_F` exceeds this.
    pub max_r_norm: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha_init: 1.0,
            alpha_min: 1e-5,
            alpha_factor: 0.6,
            cut_batch: 500,
            cut_tol: 1e-3,
            min_new_cuts: 50,
            purge_tol: 1e-5,
            warmup_iters: 5,
            post_iters: 500,
            post_correction_tol: 0.01,
            inner: LbfgsbOptions::default(),
            feasibility_tol: 1e-3,
            diag: DiagMode::None,
            max_r_norm: 1e8,
        }
    }
}

/// `F_α` at one dual point, gradient in packed order.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `P⪰0(K + αR)`.
    pub projection: DMatrix<f64>,
}

/// The inner function for fixed `R`, `α` and cut set.
pub struct Objective<'a> {
    rel: &'a Relaxation,
    ineq: Vec<SymOp>,
    r: &'a DMatrix<f64>,
    alpha: f64,
}

impl<'a> Objective<'a> {
    pub fn new(rel: &'a Relaxation, ineq: Vec<SymOp>, r: &'a DMatrix<f64>, alpha: f64) -> Self {
        Self { rel, ineq, r, alpha }
    }

    /// Length of the packed dual vector.
    pub fn dimension(&self) -> usize {
        self.rel.p() + self.ineq.len() + packed_len(self.rel.dim)
    }

    pub fn q(&self) -> usize {
        self.ineq.len()
    }

    fn unpack(&self, x: &[f64]) -> DualState {
        DualState::unpack(x, self.rel.p(), self.ineq.len(), self.rel.dim, self.alpha)
    }

    /// `K = Wᵀ(𝓐ᵀν - 𝓑ᵀμ + S - C)W`.
    pub fn reduced_slack(&self, dual: &DualState) -> DMatrix<f64> {
        let t = self.rel.dual_slack(&self.ineq, dual.nu.as_slice(), dual.mu.as_slice(), &dual.s);
        self.rel.reduce(&t)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation, SpectralError> {
        let dual = self.unpack(x);
        let alpha = self.alpha;
        let m_alpha = self.reduced_slack(&dual) + self.r * alpha;
        let dec = eigh(&m_alpha)?;
        let p = psd_part(&dec, m_alpha.norm());
        let value = self.rel.b.dot(&dual.nu) - p.norm_squared() / (2.0 * alpha)
            + alpha * self.r.norm_squared() / 2.0;

        let g = self.rel.lift(&p) / alpha;
        let mut gradient = Vec::with_capacity(x.len());
        for (op, &bi) in self.rel.eq_ops.iter().zip(self.rel.b.iter()) {
            gradient.push(bi - op.inner(&g));
        }
        for op in &self.ineq {
            gradient.push(op.inner(&g));
        }
        let dim = self.rel.dim;
        for i in 0..dim {
            gradient.push(-g[(i, i)]);
            for j in i + 1..dim {
                gradient.push(-2.0 * g[(i, j)]);
            }
        }
        Ok(Evaluation { value, gradient, projection: p })
    }

    /// `F_α(x)`, writing `∇F_α(x)` into `grad`.
    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, SpectralError> {
        let e = self.evaluate(x)?;
        grad.copy_from_slice(&e.gradient);
        Ok(e.value)
    }

    /// `Z = P⪰0(-(K + αR))`.
    pub fn recover_z(&self, dual: &DualState) -> Result<DMatrix<f64>, SpectralError> {
        let m_alpha = self.reduced_slack(dual) + self.r * self.alpha;
        project_psd(&(-m_alpha))
    }

    /// `R + (K + Z)/α`.
    pub fn update_r(&self, dual: &DualState) -> Result<DMatrix<f64>, SpectralError> {
        let k = self.reduced_slack(dual);
        let z = self.recover_z(dual)?;
        let r = self.r + (k + z) / self.alpha;
        Ok((&r + r.transpose()) * 0.5)
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub alpha: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub inner_iters: usize,
    pub inner_status: Status,
    pub cuts_added: usize,
    pub cuts_removed: usize,
    pub correction: f64,
    /// Largest equality, inequality or sign violation of `W R Wᵀ`.
    pub primal_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub dual: DualState,
    pub r: DMatrix<f64>,
    /// `W R Wᵀ`.
    pub y: DMatrix<f64>,
    pub pool: CutPool,
    pub log: Vec<IterationRecord>,
    pub certificate: Certificate,
    pub iterations: usize,
    pub seconds: f64,
}

impl Solution {
    pub fn bound(&self) -> f64 {
        self.certificate.certified_lb
    }
}

struct State<'a> {
    rel: &'a Relaxation,
    config: &'a SolverConfig,
    dual: DualState,
    r: DMatrix<f64>,
    pool: CutPool,
    log: Vec<IterationRecord>,
}

impl State<'_> {
    fn fixed_rows(&self) -> usize {
        self.rel.fixed_ineq.len()
    }

    /// Inner maximization warm-started from the current dual, followed by
    /// the primal update. Returns `(F, inner iterations, status)`.
    fn alm_step(&mut self, alpha: f64, iteration: usize, options: LbfgsbOptions) -> Result<(f64, usize, Status), AlmError> {
        let rel = self.rel;
        let ineq = rel.inequality_ops(self.pool.cuts());
        let q = ineq.len();
        let r = self.r.clone();
        let objective = Objective::new(rel, ineq, &r, alpha);
        let (lower, upper) = DualState::bounds(rel.p(), q, rel.dim);
        let mut problem = BoxProblem::new(lower, upper, |x: &[f64], g: &mut [f64]| {
            match objective.value_and_gradient(x, g) {
                Ok(f) => {
                    g.iter_mut().for_each(|v| *v = -*v);
                    -f
                }
                Err(_) => f64::NAN,
            }
        })
        .with_options(options);
        let mut start = self.dual.clone();
        start.alpha = alpha;
        let result = problem.minimize(&start.pack()).map_err(|source| AlmError::Inner { iteration, source })?;
        self.dual = DualState::unpack(&result.x, rel.p(), q, rel.dim, alpha);
        let next = objective.update_r(&self.dual)?;
        let norm = next.norm();
        if !norm.is_finite() || norm > self.config.max_r_norm {
            return Err(AlmError::Diverged { iteration, norm });
        }
        self.r = next;
        Ok((-result.f, result.iterations, result.status))
    }

    fn cut_multipliers(&self) -> Vec<f64> {
        self.dual.mu.as_slice()[self.fixed_rows()..].to_vec()
    }

    /// Purges low-multiplier cuts and appends new ones with `μ = 0`.
    fn update_pool(&mut self, separate_now: bool) -> (usize, usize) {
        let fixed = self.fixed_rows();
        self.pool.set_multipliers(&self.cut_multipliers());
        let removed = self.pool.purge(self.config.purge_tol);
        let mut added = 0;
        if separate_now && self.config.cut_batch > 0 {
            if let Some(layout) = self.rel.cut_layout {
                let y = self.rel.lift(&self.r);
                for cut in separate(&y, layout, &self.pool, self.config.cut_batch, self.config.cut_tol) {
                    if self.pool.insert(cut, 0.0) {
                        added += 1;
                    }
                }
            }
        }
        let mut mu = self.dual.mu.as_slice()[..fixed].to_vec();
        mu.extend_from_slice(self.pool.multipliers());
        self.dual.mu = DVector::from_vec(mu);
        (added, removed)
    }

    fn primal_residual(&self) -> f64 {
        let y = self.rel.lift(&self.r);
        let f = self.rel.feasibility(&y, self.pool.cuts());
        f.equality.max(f.inequality).max(f.negativity)
    }

    fn certificate(&self) -> Result<Certificate, AlmError> {
        Ok(certify(self.rel, self.pool.cuts(), &self.dual, self.rel.r_bar)?)
    }
}

/// Post iterations without a 10% drop in the primal residual before the
/// feasibility part of the stopping test gives up.
const POST_STALL_ROUNDS: usize = 5;

/// Runs the cut-round ALM on `rel` from the zero point.
pub fn solve(rel: &Relaxation, config: &SolverConfig) -> Result<Solution, AlmError> {
    let started = Instant::now();
    let k = rel.rank();
    let mut st = State {
        rel,
        config,
        dual: DualState::zeros(rel.p(), rel.fixed_ineq.len(), rel.dim, config.alpha_init),
        r: DMatrix::zeros(k, k),
        pool: CutPool::new(),
        log: Vec::new(),
    };
    let mut alpha = config.alpha_init;
    let mut last_alpha = alpha;
    let mut iteration = 0;
    let mut correction = 0.0;

    while alpha >= config.alpha_min {
        iteration += 1;
        let (f, inner_iters, inner_status) = st.alm_step(alpha, iteration, config.inner)?;
        let primal_residual = st.primal_residual();
        let (cuts_added, cuts_removed) = st.update_pool(iteration >= config.warmup_iters);
        correction = st.certificate()?.correction;
        st.log.push(IterationRecord {
            iter: iteration,
            alpha,
            f,
            inner_iters,
            inner_status,
            cuts_added,
            cuts_removed,
            correction,
            primal_residual,
        });
        last_alpha = alpha;
        if cuts_added < config.min_new_cuts {
            alpha *= config.alpha_factor;
        }
    }

    // The relative-decrease test stops inner solves after a step or two once
    // α is small, leaving the primal residual large, so the post phase runs
    // on the projected-gradient test alone. Derived sums add up to n rows,
    // hence the residual target is scaled by 1/n.
    let post_inner = LbfgsbOptions { factr: 0.0, ..config.inner };
    let residual_target = config.feasibility_tol / rel.n.max(1) as f64;
    let mut residual = st.primal_residual();
    let mut best = residual;
    let mut stalled = 0;
    for _ in 0..config.post_iters {
        let corrected = correction.abs() < config.post_correction_tol;
        if corrected && (residual <= residual_target || stalled >= POST_STALL_ROUNDS) {
            break;
        }
        iteration += 1;
        let (f, inner_iters, inner_status) = st.alm_step(last_alpha, iteration, post_inner)?;
        correction = st.certificate()?.correction;
        residual = st.primal_residual();
        if residual < 0.9 * best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
        st.log.push(IterationRecord {
            iter: iteration,
            alpha: last_alpha,
            f,
            inner_iters,
            inner_status,
            cuts_added: 0,
            cuts_removed: 0,
            correction,
            primal_residual: residual,
        });
    }

    let certificate = st.certificate()?;
    let y = rel.lift(&st.r);
    Ok(Solution {
        dual: st.dual,
        r: st.r,
        y,
        pool: st.pool,
        log: st.log,
        certificate,
        iterations: iteration,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// The facially reduced lifted relaxation with `config.diag` and cuts as
/// configured.
pub fn solve_lifted(g: &Graph, config: &SolverConfig) -> Result<Solution, AlmError> {
    let model = build_model(g, config.diag)?;
    solve(&Relaxation::lifted(&model), config)
}

/// The basic `(n+1)`-dimensional relaxation.
pub fn solve_basic(g: &Graph, config: &SolverConfig) -> Result<Solution, AlmError> {
    solve(&Relaxation::basic(g)?, config)
}
