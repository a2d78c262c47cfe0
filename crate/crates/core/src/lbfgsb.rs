//! Limited-memory BFGS for box-constrained minimization.
//!
//! Each iteration finds the generalized Cauchy point along the projected
//! steepest-descent path of the compact quasi-Newton model
//! `B = θI - W M Wᵀ`, minimizes the model over the variables that are still
//! free there (direct primal method), and runs a Moré–Thuente line search
//! along the resulting feasible direction.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LbfgsbError {
    #[error("objective or gradient is not finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("bounds have length {lower}/{upper}, problem dimension is {dim}")]
    BoundsShape { lower: usize, upper: usize, dim: usize },
    #[error("lower bound exceeds upper bound at coordinate {0}")]
    EmptyBox(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the relative reduction of `f` drops below `factr · ε`.
    pub factr: f64,
    /// Stop when the projected gradient max-norm drops below this.
    pub pgtol: f64,
    /// Function evaluations allowed per line search.
    pub max_linesearch: usize,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self { memory: 10, max_iter: 2000, factr: 1e8, pgtol: 1e-5, max_linesearch: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    ConvergedFactr,
    ConvergedPgtol,
    MaxIter,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub status: Status,
    pub iterations: usize,
    pub evaluations: usize,
    pub projected_gradient: f64,
}

/// `min f(x)` subject to `lower <= x <= upper`; bounds may be infinite.
pub struct BoxProblem<F> {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Writes the gradient into its second argument and returns `f(x)`.
    pub objective: F,
    pub options: LbfgsbOptions,
}

impl<F> BoxProblem<F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, objective: F) -> Self {
        Self { lower, upper, objective, options: LbfgsbOptions::default() }
    }

    pub fn with_options(mut self, options: LbfgsbOptions) -> Self {
        self.options = options;
        self
    }

    /// Minimizes from `x0`, clipped into the box first.
    pub fn minimize(&mut self, x0: &[f64]) -> Result<Minimum, LbfgsbError> {
        let dim = x0.len();
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(LbfgsbError::BoundsShape { lower: self.lower.len(), upper: self.upper.len(), dim });
        }
        if let Some(i) = (0..dim).find(|&i| self.lower[i] > self.upper[i]) {
            return Err(LbfgsbError::EmptyBox(i));
        }
        Solver::new(self, x0).run()
    }
}

/// Max-norm of the projected gradient.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut norm = 0.0f64;
    for i in 0..x.len() {
        let gi = g[i];
        let pg = if gi < 0.0 {
            (x[i] - upper[i]).max(gi)
        } else {
            (x[i] - lower[i]).min(gi)
        };
        norm = norm.max(pg.abs());
    }
    norm
}

/// Compact limited-memory representation `B = θI - W M Wᵀ`.
struct Memory {
    capacity: usize,
    s: Vec<DVector<f64>>,
    y: Vec<DVector<f64>>,
    theta: f64,
    /// `[Y, θS]`, `N × 2k`.
    w: DMatrix<f64>,
    /// `2k × 2k`.
    m: DMatrix<f64>,
}

impl Memory {
    fn new(capacity: usize, dim: usize) -> Self {
        Self {
            capacity,
            s: Vec::new(),
            y: Vec::new(),
            theta: 1.0,
            w: DMatrix::zeros(dim, 0),
            m: DMatrix::zeros(0, 0),
        }
    }

    fn len(&self) -> usize {
        self.s.len()
    }

    fn reset(&mut self) {
        self.s.clear();
        self.y.clear();
        self.theta = 1.0;
        self.w = DMatrix::zeros(self.w.nrows(), 0);
        self.m = DMatrix::zeros(0, 0);
    }

    /// Stores a pair if the curvature condition holds; returns whether it
    /// was stored.
    fn push(&mut self, s: DVector<f64>, y: DVector<f64>) -> bool {
        let sy = s.dot(&y);
        let yy = y.dot(&y);
        if !(sy > f64::EPSILON * yy) {
            return false;
        }
        if self.s.len() == self.capacity {
            self.s.remove(0);
            self.y.remove(0);
        }
        self.theta = yy / sy;
        self.s.push(s);
        self.y.push(y);
        if !self.rebuild() {
            self.reset();
            return false;
        }
        true
    }

    fn rebuild(&mut self) -> bool {
        let k = self.len();
        let dim = self.w.nrows();
        let mut w = DMatrix::zeros(dim, 2 * k);
        for j in 0..k {
            w.set_column(j, &self.y[j]);
            w.set_column(k + j, &(&self.s[j] * self.theta));
        }
        let mut inv = DMatrix::zeros(2 * k, 2 * k);
        for a in 0..k {
            inv[(a, a)] = -self.s[a].dot(&self.y[a]);
            for b in 0..k {
                if a > b {
                    let l = self.s[a].dot(&self.y[b]);
                    inv[(k + a, b)] = l;
                    inv[(b, k + a)] = l;
                }
                inv[(k + a, k + b)] = self.theta * self.s[a].dot(&self.s[b]);
            }
        }
        match inv.try_inverse() {
            Some(m) if m.iter().all(|v| v.is_finite()) => {
                self.w = w;
                self.m = m;
                true
            }
            _ => false,
        }
    }
}

struct Solver<'a, F> {
    problem: &'a mut BoxProblem<F>,
    x: DVector<f64>,
    g: DVector<f64>,
    f: f64,
    memory: Memory,
    iterations: usize,
    evaluations: usize,
}

impl<'a, F> Solver<'a, F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn new(problem: &'a mut BoxProblem<F>, x0: &[f64]) -> Self {
        let dim = x0.len();
        let x = DVector::from_iterator(
            dim,
            x0.iter().enumerate().map(|(i, &v)| v.clamp(problem.lower[i], problem.upper[i])),
        );
        let memory = Memory::new(problem.options.memory.max(1), dim);
        Self { problem, x, g: DVector::zeros(dim), f: f64::NAN, memory, iterations: 0, evaluations: 0 }
    }

    fn evaluate(&mut self, x: &DVector<f64>, g: &mut DVector<f64>) -> Result<f64, LbfgsbError> {
        self.evaluations += 1;
        let f = (self.problem.objective)(x.as_slice(), g.as_mut_slice());
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(LbfgsbError::NonFinite { iteration: self.iterations });
        }
        Ok(f)
    }

    fn pg_norm(&self) -> f64 {
        projected_gradient_norm(self.x.as_slice(), self.g.as_slice(), &self.problem.lower, &self.problem.upper)
    }

    fn finish(self, status: Status) -> Minimum {
        let projected_gradient = self.pg_norm();
        Minimum {
            x: self.x.as_slice().to_vec(),
            f: self.f,
            status,
            iterations: self.iterations,
            evaluations: self.evaluations,
            projected_gradient,
        }
    }

    fn run(mut self) -> Result<Minimum, LbfgsbError> {
        let opts = self.problem.options;
        let x0 = self.x.clone();
        let mut g0 = DVector::zeros(x0.len());
        self.f = self.evaluate(&x0, &mut g0)?;
        self.g = g0;
        if self.pg_norm() <= opts.pgtol {
            return Ok(self.finish(Status::ConvergedPgtol));
        }
        loop {
            if self.iterations >= opts.max_iter {
                return Ok(self.finish(Status::MaxIter));
            }
            let d = self.search_direction();
            let gd = self.g.dot(&d);
            if !(gd < 0.0) {
                if self.memory.len() == 0 {
                    return Ok(self.finish(Status::LineSearchFailure));
                }
                self.memory.reset();
                continue;
            }
            let f_old = self.f;
            match self.line_search(&d, gd)? {
                Some((x_new, f_new, g_new)) => {
                    let s = &x_new - &self.x;
                    let y = &g_new - &self.g;
                    self.x = x_new;
                    self.f = f_new;
                    self.g = g_new;
                    self.iterations += 1;
                    if self.pg_norm() <= opts.pgtol {
                        return Ok(self.finish(Status::ConvergedPgtol));
                    }
                    let scale = f_old.abs().max(f_new.abs()).max(1.0);
                    if f_old - f_new <= opts.factr * f64::EPSILON * scale {
                        return Ok(self.finish(Status::ConvergedFactr));
                    }
                    self.memory.push(s, y);
                }
                None => {
                    if self.memory.len() == 0 {
                        return Ok(self.finish(Status::LineSearchFailure));
                    }
                    self.memory.reset();
                }
            }
        }
    }

    /// `x̄ - x` where `x̄` is the subspace minimizer from the Cauchy point.
    fn search_direction(&self) -> DVector<f64> {
        let (xcp, c) = self.cauchy_point();
        let lower = &self.problem.lower;
        let upper = &self.problem.upper;
        let free: Vec<usize> = (0..xcp.len()).filter(|&i| xcp[i] > lower[i] && xcp[i] < upper[i]).collect();
        let xbar = if self.memory.len() == 0 || free.is_empty() {
            xcp
        } else {
            self.subspace_minimum(xcp, &c, &free)
        };
        xbar - &self.x
    }

    /// Generalized Cauchy point and `c = Wᵀ(x_cp - x)`.
    fn cauchy_point(&self) -> (DVector<f64>, DVector<f64>) {
        let n = self.x.len();
        let lower = &self.problem.lower;
        let upper = &self.problem.upper;
        let mem = &self.memory;
        let theta = mem.theta;
        let mut breaks = vec![f64::INFINITY; n];
        let mut d = DVector::zeros(n);
        for i in 0..n {
            let gi = self.g[i];
            let t = if gi < 0.0 {
                (self.x[i] - upper[i]) / gi
            } else if gi > 0.0 {
                (self.x[i] - lower[i]) / gi
            } else {
                f64::INFINITY
            };
            breaks[i] = t;
            if t > 0.0 {
                d[i] = -gi;
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| breaks[i] > 0.0 && breaks[i].is_finite()).collect();
        order.sort_by(|&a, &b| breaks[a].total_cmp(&breaks[b]).then(a.cmp(&b)));

        let two_k = mem.w.ncols();
        let mut xcp = self.x.clone();
        let mut p = mem.w.tr_mul(&d);
        let mut c = DVector::zeros(two_k);
        let mut fp = -d.dot(&d);
        let mut fpp = -theta * fp - if two_k > 0 { p.dot(&(&mem.m * &p)) } else { 0.0 };
        let fpp0 = -theta * fp;
        let mut dt_min = if fpp > 0.0 { -fp / fpp } else { f64::INFINITY };
        let mut t_old = 0.0;
        let mut next = 0;
        let mut fixed = vec![false; n];

        while next < order.len() {
            let b = order[next];
            let t_b = breaks[b];
            let dt = t_b - t_old;
            if dt_min < dt {
                break;
            }
            xcp[b] = if d[b] > 0.0 { upper[b] } else { lower[b] };
            fixed[b] = true;
            let zb = xcp[b] - self.x[b];
            c += &p * dt;
            let gb = self.g[b];
            if two_k > 0 {
                let wb = mem.w.row(b).transpose();
                let mwb = &mem.m * &wb;
                fp += dt * fpp + gb * gb + theta * gb * zb - gb * mwb.dot(&c);
                fpp -= theta * gb * gb + 2.0 * gb * mwb.dot(&p) + gb * gb * wb.dot(&mwb);
                p += &wb * gb;
            } else {
                fp += dt * fpp + gb * gb + theta * gb * zb;
                fpp -= theta * gb * gb;
            }
            // Guard against cancellation in the running curvature.
            fpp = fpp.max(f64::EPSILON * fpp0);
            d[b] = 0.0;
            dt_min = -fp / fpp;
            t_old = t_b;
            next += 1;
        }
        let dt_min = dt_min.max(0.0);
        let t_final = t_old + dt_min;
        for i in 0..n {
            if !fixed[i] && d[i] != 0.0 {
                xcp[i] = (self.x[i] + t_final * d[i]).clamp(lower[i], upper[i]);
            }
        }
        c += &p * dt_min;
        (xcp, c)
    }

    /// Direct primal subspace minimization over the free variables, then
    /// backtracking into the box.
    fn subspace_minimum(&self, xcp: DVector<f64>, c: &DVector<f64>, free: &[usize]) -> DVector<f64> {
        let mem = &self.memory;
        let theta = mem.theta;
        let two_k = mem.w.ncols();
        let lower = &self.problem.lower;
        let upper = &self.problem.upper;

        let mc = &mem.m * c;
        let wmc = &mem.w * mc;
        let rc = DVector::from_iterator(
            free.len(),
            free.iter().map(|&i| self.g[i] + theta * (xcp[i] - self.x[i]) - wmc[i]),
        );
        // ZᵀW restricted to the free rows.
        let wz = DMatrix::from_fn(free.len(), two_k, |r, col| mem.w[(free[r], col)]);
        let v = &mem.m * wz.tr_mul(&rc);
        let nmat = DMatrix::identity(two_k, two_k) - (&mem.m * wz.tr_mul(&wz)) / theta;
        let v = match nmat.lu().solve(&v) {
            Some(v) => v,
            None => return xcp,
        };
        let du = -(&rc / theta) - (&wz * v) / (theta * theta);

        let mut alpha = 1.0f64;
        for (r, &i) in free.iter().enumerate() {
            let step = du[r];
            if step > 0.0 {
                alpha = alpha.min((upper[i] - xcp[i]) / step);
            } else if step < 0.0 {
                alpha = alpha.min((lower[i] - xcp[i]) / step);
            }
        }
        let alpha = alpha.max(0.0);
        let mut xbar = xcp;
        for (r, &i) in free.iter().enumerate() {
            xbar[i] = (xbar[i] + alpha * du[r]).clamp(lower[i], upper[i]);
        }
        xbar
    }

    /// Largest step keeping `x + t d` feasible.
    fn max_step(&self, d: &DVector<f64>) -> f64 {
        let mut t = 1e10f64;
        for i in 0..d.len() {
            if d[i] < 0.0 && self.problem.lower[i].is_finite() {
                t = t.min((self.problem.lower[i] - self.x[i]) / d[i]);
            } else if d[i] > 0.0 && self.problem.upper[i].is_finite() {
                t = t.min((self.problem.upper[i] - self.x[i]) / d[i]);
            }
        }
        t.max(0.0)
    }

    #[allow(clippy::type_complexity)]
    fn line_search(
        &mut self,
        d: &DVector<f64>,
        gd: f64,
    ) -> Result<Option<(DVector<f64>, f64, DVector<f64>)>, LbfgsbError> {
        let stpmax = self.max_step(d);
        if stpmax <= 0.0 {
            return Ok(None);
        }
        let mut stp = if self.memory.len() == 0 { (1.0 / d.norm()).min(stpmax) } else { 1.0f64.min(stpmax) };
        let mut search = MoreThuente::new(self.f, gd, 1e-3, 0.9, 0.1, 0.0, stpmax);
        let lower = self.problem.lower.clone();
        let upper = self.problem.upper.clone();
        let mut x_new = self.x.clone();
        let mut g_new = DVector::zeros(d.len());
        for _ in 0..self.problem.options.max_linesearch {
            for i in 0..d.len() {
                x_new[i] = (self.x[i] + stp * d[i]).clamp(lower[i], upper[i]);
            }
            let f_new = self.evaluate(&x_new, &mut g_new)?;
            let dg = g_new.dot(d);
            match search.step(&mut stp, f_new, dg) {
                LineSearchTask::Evaluate => continue,
                LineSearchTask::Converged => return Ok(Some((x_new, f_new, g_new))),
                LineSearchTask::Warning => {
                    return Ok((f_new < self.f).then_some((x_new, f_new, g_new)));
                }
            }
        }
        // Out of evaluations: keep the last point only if it decreased f.
        let f_last = self.evaluate(&x_new, &mut g_new)?;
        Ok((f_last < self.f).then_some((x_new, f_last, g_new)))
    }
}

enum LineSearchTask {
    Evaluate,
    Converged,
    Warning,
}

/// Moré–Thuente line search for the strong Wolfe conditions.
struct MoreThuente {
    ftol: f64,
    gtol: f64,
    xtol: f64,
    stpmin: f64,
    stpmax: f64,
    finit: f64,
    ginit: f64,
    gtest: f64,
    brackt: bool,
    stage_one: bool,
    width: f64,
    width1: f64,
    stx: f64,
    fx: f64,
    gx: f64,
    sty: f64,
    fy: f64,
    gy: f64,
    stmin: f64,
    stmax: f64,
    first: bool,
}

const XTRAPL: f64 = 1.1;
const XTRAPU: f64 = 4.0;

impl MoreThuente {
    fn new(finit: f64, ginit: f64, ftol: f64, gtol: f64, xtol: f64, stpmin: f64, stpmax: f64) -> Self {
        Self {
            ftol,
            gtol,
            xtol,
            stpmin,
            stpmax,
            finit,
            ginit,
            gtest: ftol * ginit,
            brackt: false,
            stage_one: true,
            width: stpmax - stpmin,
            width1: 2.0 * (stpmax - stpmin),
            stx: 0.0,
            fx: finit,
            gx: ginit,
            sty: 0.0,
            fy: finit,
            gy: ginit,
            stmin: 0.0,
            stmax: 0.0,
            first: true,
        }
    }

    /// Consumes `f(stp)` and `f'(stp)`; updates `stp` when another
    /// evaluation is requested.
    fn step(&mut self, stp: &mut f64, f: f64, g: f64) -> LineSearchTask {
        if self.first {
            self.first = false;
            self.stmin = 0.0;
            self.stmax = *stp + XTRAPU * *stp;
        }
        let ftest = self.finit + *stp * self.gtest;
        if self.stage_one && f <= ftest && g >= 0.0 {
            self.stage_one = false;
        }
        if self.brackt && (*stp <= self.stmin || *stp >= self.stmax) {
            return LineSearchTask::Warning;
        }
        if self.brackt && self.stmax - self.stmin <= self.xtol * self.stmax {
            return LineSearchTask::Warning;
        }
        if *stp == self.stpmax && f <= ftest && g <= self.gtest {
            return LineSearchTask::Warning;
        }
        if *stp == self.stpmin && (f > ftest || g >= self.gtest) {
            return LineSearchTask::Warning;
        }
        if f <= ftest && g.abs() <= self.gtol * (-self.ginit) {
            let _ = self.ftol;
            return LineSearchTask::Converged;
        }

        if self.stage_one && f <= self.fx && f > ftest {
            let gt = self.gtest;
            let mut fxm = self.fx - self.stx * gt;
            let mut fym = self.fy - self.sty * gt;
            let mut gxm = self.gx - gt;
            let mut gym = self.gy - gt;
            let fm = f - *stp * gt;
            let gm = g - gt;
            dcstep(
                &mut self.stx, &mut fxm, &mut gxm, &mut self.sty, &mut fym, &mut gym, stp, fm, gm,
                &mut self.brackt, self.stmin, self.stmax,
            );
            self.fx = fxm + self.stx * gt;
            self.fy = fym + self.sty * gt;
            self.gx = gxm + gt;
            self.gy = gym + gt;
        } else {
            dcstep(
                &mut self.stx, &mut self.fx, &mut self.gx, &mut self.sty, &mut self.fy, &mut self.gy, stp,
                f, g, &mut self.brackt, self.stmin, self.stmax,
            );
        }

        if self.brackt {
            if (self.sty - self.stx).abs() >= 0.66 * self.width1 {
                *stp = self.stx + 0.5 * (self.sty - self.stx);
            }
            self.width1 = self.width;
            self.width = (self.sty - self.stx).abs();
            self.stmin = self.stx.min(self.sty);
            self.stmax = self.stx.max(self.sty);
        } else {
            self.stmin = *stp + XTRAPL * (*stp - self.stx);
            self.stmax = *stp + XTRAPU * (*stp - self.stx);
        }
        *stp = stp.clamp(self.stpmin, self.stpmax);
        if self.brackt && (*stp <= self.stmin || *stp >= self.stmax || self.stmax - self.stmin <= self.xtol * self.stmax)
        {
            *stp = self.stx;
        }
        LineSearchTask::Evaluate
    }
}

/// Safeguarded cubic/quadratic step of the Moré–Thuente method.
#[allow(clippy::too_many_arguments)]
fn dcstep(
    stx: &mut f64,
    fx: &mut f64,
    dx: &mut f64,
    sty: &mut f64,
    fy: &mut f64,
    dy: &mut f64,
    stp: &mut f64,
    fp: f64,
    dp: f64,
    brackt: &mut bool,
    stpmin: f64,
    stpmax: f64,
) {
    let sgnd = dp * (*dx / dx.abs());
    let stpf;
    if fp > *fx {
        let theta = 3.0 * (*fx - fp) / (*stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if *stp < *stx {
            gamma = -gamma;
        }
        let p = (gamma - *dx) + theta;
        let q = ((gamma - *dx) + gamma) + dp;
        let r = p / q;
        let stpc = *stx + r * (*stp - *stx);
        let stpq = *stx + ((*dx / ((*fx - fp) / (*stp - *stx) + *dx)) / 2.0) * (*stp - *stx);
        stpf = if (stpc - *stx).abs() < (stpq - *stx).abs() { stpc } else { stpc + (stpq - stpc) / 2.0 };
        *brackt = true;
    } else if sgnd < 0.0 {
        let theta = 3.0 * (*fx - fp) / (*stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if *stp > *stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + *dx;
        let r = p / q;
        let stpc = *stp + r * (*stx - *stp);
        let stpq = *stp + (dp / (dp - *dx)) * (*stx - *stp);
        stpf = if (stpc - *stp).abs() > (stpq - *stp).abs() { stpc } else { stpq };
        *brackt = true;
    } else if dp.abs() < dx.abs() {
        let theta = 3.0 * (*fx - fp) / (*stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if *stp > *stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = (gamma + (*dx - dp)) + gamma;
        let r = p / q;
        let stpc = if r < 0.0 && gamma != 0.0 {
            *stp + r * (*stx - *stp)
        } else if *stp > *stx {
            stpmax
        } else {
            stpmin
        };
        let stpq = *stp + (dp / (dp - *dx)) * (*stx - *stp);
        if *brackt {
            let mut f = if (stpc - *stp).abs() < (stpq - *stp).abs() { stpc } else { stpq };
            f = if *stp > *stx {
                f.min(*stp + 0.66 * (*sty - *stp))
            } else {
                f.max(*stp + 0.66 * (*sty - *stp))
            };
            stpf = f;
        } else {
            let f = if (stpc - *stp).abs() > (stpq - *stp).abs() { stpc } else { stpq };
            stpf = f.clamp(stpmin, stpmax);
        }
    } else if *brackt {
        let theta = 3.0 * (fp - *fy) / (*sty - *stp) + *dy + dp;
        let s = theta.abs().max(dy.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dy / s) * (dp / s)).max(0.0).sqrt();
        if *stp > *sty {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + *dy;
        let r = p / q;
        stpf = *stp + r * (*sty - *stp);
    } else if *stp > *stx {
        stpf = stpmax;
    } else {
        stpf = stpmin;
    }

    if fp > *fx {
        *sty = *stp;
        *fy = fp;
        *dy = dp;
    } else {
        if sgnd < 0.0 {
            *sty = *stx;
            *fy = *fx;
            *dy = *dx;
        }
        *stx = *stp;
        *fx = fp;
        *dx = dp;
    }
    *stp = stpf;
}
