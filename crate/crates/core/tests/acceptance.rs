//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use expansion_bounds::alm::Objective;
use expansion_bounds::certify::{bound_from_spectrum, certify};
use expansion_bounds::cuts::Cut;
use expansion_bounds::graph::{generate_family, Family, Graph};
use expansion_bounds::model::{build_model, half, DiagMode, Lifted};
use expansion_bounds::oracle::exact_edge_expansion;
use expansion_bounds::relaxation::{DualState, Relaxation};
use expansion_bounds::{solve, Solution, SolverConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_psd(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let rank = rng.gen_range(1..=k);
    let a = DMatrix::from_fn(k, rank, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose()
}

fn kernel_correctness() -> Outcome {
    let started = Instant::now();
    let mut worst_mw = 0.0f64;
    let mut worst_orth = 0.0f64;
    for n in 3..=60 {
        let model = build_model(&generate_family(Family::Cycle(n)).unwrap(), DiagMode::None).unwrap();
        worst_mw = worst_mw.max((&model.m * &model.w).amax());
        let gram = model.w.transpose() * &model.w;
        worst_orth = worst_orth.max((gram - DMatrix::identity(n + 1, n + 1)).amax());
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        worst_mw <= 1e-10 && worst_orth <= 1e-10 && secs < 5.0,
        format!("max|MW| = {worst_mw:.2e}, max|WᵀW - I| = {worst_orth:.2e}, {secs:.2} s"),
    )
}

fn face_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = 3 + trial % 10;
        let model = build_model(&generate_family(Family::Path(n)).unwrap(), DiagMode::None).unwrap();
        let r = random_psd(n + 1, &mut rng);
        let lifted = model.lift(&r).unwrap();
        let yt = &lifted.y;
        let (big, small, rho) = (lifted.big_y(), lifted.small_y(), lifted.rho());
        let scale = 1.0 + yt.amax();
        let cy = (&model.c * &small - &model.d * rho).amax();
        let cyc = &model.c * &big * model.c.transpose();
        let diag = (0..model.d.len()).map(|i| (cyc[(i, i)] - rho * model.d[i] * model.d[i]).abs()).fold(0.0, f64::max);
        let mym = (&model.m * yt * model.m.transpose()).amax();
        let my = (&model.m * yt).amax();
        worst = worst.max(cy.max(diag).max(mym).max(my) / scale);
    }
    outcome(worst <= 1e-8, format!("100 samples, worst scaled residual {worst:.2e}"))
}

fn random_dual(obj: &Objective, p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..obj.dimension()).map(|i| if i < p { rng.gen_range(-2.0..2.0) } else { rng.gen_range(0.0..0.5) }).collect()
}

fn random_cuts(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Cut> {
    let mut cuts: Vec<Cut> = Vec::new();
    while cuts.len() < count {
        let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        if let Ok(c) = Cut::new(i, j, k, n) {
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
    }
    cuts
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for n in [4, 8, 12] {
        let g = generate_family(Family::Gnp { n, p: 0.6, seed: 11 }).unwrap_or_else(|_| generate_family(Family::Cycle(n)).unwrap());
        let rel = Relaxation::lifted(&build_model(&g, DiagMode::Y1Only).unwrap());
        for _ in 0..20 {
            let cuts = random_cuts(n, 5, &mut rng);
            let r = random_psd(rel.rank(), &mut rng);
            let alpha = rng.gen_range(0.1..1.0);
            let obj = Objective::new(&rel, rel.inequality_ops(&cuts), &r, alpha);
            let x = random_dual(&obj, rel.p(), &mut rng);
            let grad = obj.evaluate(&x).unwrap().gradient;
            let h = 1e-6;
            let mut diff = 0.0f64;
            let mut x_step = x.clone();
            for i in 0..x.len() {
                x_step[i] = x[i] + h;
                let fp = obj.evaluate(&x_step).unwrap().value;
                x_step[i] = x[i] - h;
                let fm = obj.evaluate(&x_step).unwrap().value;
                x_step[i] = x[i];
                diff = diff.max(((fp - fm) / (2.0 * h) - grad[i]).abs());
            }
            let norm = grad.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            worst = worst.max(diff / norm);
        }
    }
    outcome(worst <= 1e-5, format!("60 points, worst relative error {worst:.2e}"))
}

fn concavity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..50 {
        let n = 4 + trial % 6;
        let g = generate_family(Family::Complete(n)).unwrap();
        let rel = Relaxation::lifted(&build_model(&g, DiagMode::None).unwrap());
        let cuts = random_cuts(n, 3, &mut rng);
        let r = random_psd(rel.rank(), &mut rng);
        let obj = Objective::new(&rel, rel.inequality_ops(&cuts), &r, rng.gen_range(0.05..1.0));
        let a = random_dual(&obj, rel.p(), &mut rng);
        let b = random_dual(&obj, rel.p(), &mut rng);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| 0.5 * (u + v)).collect();
        let f = |x: &[f64]| obj.evaluate(x).unwrap().value;
        // Positive when the midpoint inequality is violated.
        worst = worst.max(0.5 * (f(&a) + f(&b)) - f(&mid));
    }
    outcome(worst <= 1e-9, format!("50 pairs, worst midpoint excess {worst:.2e}"))
}

fn corpus() -> Vec<(String, Graph)> {
    let mut out = Vec::new();
    let mut push = |f: Family| {
        if let Ok(g) = generate_family(f) {
            out.push((f.to_string(), g));
        }
    };
    for n in 4..=11 {
        push(Family::Cycle(n));
        push(Family::Path(n));
    }
    for n in 3..=9 {
        push(Family::Complete(n));
    }
    for (a, b) in [(2, 3), (3, 3), (2, 5), (3, 4), (4, 4), (3, 6)] {
        push(Family::CompleteBipartite(a, b));
    }
    let mut gnp = 0;
    'outer: for n in [8, 9, 10, 11, 12] {
        for seed in 0..20 {
            if generate_family(Family::Gnp { n, p: 0.5, seed }).is_ok() {
                push(Family::Gnp { n, p: 0.5, seed });
                gnp += 1;
                if gnp % 2 == 0 {
                    continue 'outer;
                }
            }
        }
    }
    out
}

struct Runs {
    name: String,
    graph: Graph,
    exact: f64,
    basic: Solution,
    dnnp: Solution,
    dnnp_y1: Solution,
    dnnpfrc: Solution,
}

impl Runs {
    fn all(&self) -> [(&'static str, &Solution); 4] {
        [("basic", &self.basic), ("dnnp", &self.dnnp), ("dnnp-y1", &self.dnnp_y1), ("dnnpfrc", &self.dnnpfrc)]
    }
}

fn run_graph(name: String, graph: Graph) -> Runs {
    let config = SolverConfig::default();
    let no_cuts = SolverConfig { cut_batch: 0, ..config };
    let lifted = |mode: DiagMode| Relaxation::lifted(&build_model(&graph, mode).unwrap());
    let exact = exact_edge_expansion(&graph).unwrap().value();
    let basic = solve(&Relaxation::basic(&graph).unwrap(), &config).unwrap();
    let dnnp = solve(&lifted(DiagMode::None), &no_cuts).unwrap();
    let dnnp_y1 = solve(&lifted(DiagMode::Y1Only), &no_cuts).unwrap();
    let dnnpfrc = solve(&lifted(DiagMode::None), &config).unwrap();
    Runs { name, graph, exact, basic, dnnp, dnnp_y1, dnnpfrc }
}

fn validity(runs: &[Runs], secs: f64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut where_ = String::new();
    for r in runs {
        for (label, sol) in r.all() {
            let excess = sol.bound() - r.exact;
            if excess > worst {
                worst = excess;
                where_ = format!("{}/{label}", r.name);
            }
        }
    }
    outcome(
        runs.len() >= 30 && worst <= 1e-9 && secs < 600.0,
        format!("{} graphs, max(LB - h) = {worst:.2e} at {where_}, {secs:.1} s", runs.len()),
    )
}

fn dominance(runs: &[Runs]) -> Outcome {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_feas = 0.0f64;
    for r in runs {
        worst_gap = worst_gap.max(r.basic.bound() - r.dnnp_y1.bound());
        let basic = Relaxation::basic(&r.graph).unwrap();
        let lifted = Lifted::from_matrix(r.dnnp_y1.y.clone(), r.graph.n()).unwrap();
        worst_feas = worst_feas.max(basic.feasibility(&lifted.basic_projection(), &[]).max());
    }
    outcome(
        worst_gap <= 1e-3 && worst_feas <= 1e-3,
        format!("max(basic - DNN-P[y1]) = {worst_gap:.2e}, projected point violation {worst_feas:.2e}"),
    )
}

/// Largest violation among the structural identities and bounds of a
/// converged lifted primal, and the gap between the two objective forms.
fn structure_violation(y: &DMatrix<f64>, graph: &Graph) -> (f64, &'static str, f64) {
    let n = graph.n();
    let k = half(n) as f64;
    let l = Lifted::from_matrix(y.clone(), n).unwrap();
    let (y11, y12, y22) = (l.y11(), l.y12(), l.y22());
    let (y1, y2) = (l.y1(), l.y2());
    let rho = l.rho();
    let e = DVector::from_element(n, 1.0);
    let ones = DMatrix::from_element(n, n, 1.0);
    let mut checks: Vec<(&'static str, f64)> = vec![
        ("rho >= 1/k", 1.0 / k - rho),
        ("rho <= 1", rho - 1.0),
        ("y2 = rho e - y1", (&y2 - (&e * rho - &y1)).amax()),
        ("y3 = rho k - 1", (l.y3() - (rho * k - 1.0)).abs()),
        ("y4 = 1 - rho", (l.y4() - (1.0 - rho)).abs()),
        ("Y22 = Y11 + rho E - e y1' - y1 e'", (&y22 - (&y11 + &ones * rho - &e * y1.transpose() - &y1 * e.transpose())).amax()),
        ("<E,Y11> >= 1", 1.0 - y11.sum()),
        ("<E,Y11> <= k", y11.sum() - k),
        ("y3 <= k-1", l.y3() - (k - 1.0)),
        ("y4 <= 1-1/k", l.y4() - (1.0 - 1.0 / k)),
        ("Y33 <= k^2-k", l.y33() - (k * k - k)),
        ("Y44 <= k-1", l.y44() - (k - 1.0)),
        ("Y34 <= k-1", l.y34() - (k - 1.0)),
        ("Y13 <= k-1", l.y13().max() - (k - 1.0)),
        ("Y23 <= k-1", l.y23().max() - (k - 1.0)),
        ("Y14 <= 1-1/k", l.y14().max() - (1.0 - 1.0 / k)),
        ("Y24 <= 1-1/k", l.y24().max() - (1.0 - 1.0 / k)),
        ("Y >= 0", -y.min()),
    ];
    let mut block = 0.0f64;
    let mut block2 = 0.0f64;
    let mut cut_a = f64::NEG_INFINITY;
    let mut cut_c = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            block = block.max((y11[(i, j)] + y12[(j, i)] - y1[j]).abs());
            block2 = block2.max((y22[(i, j)] + y12[(i, j)] - y2[j]).abs());
            if i != j {
                cut_a = cut_a.max(y11[(i, j)] - y1[i]);
                cut_c = cut_c.max(y1[i] + y1[j] - y11[(i, j)] - rho);
            }
        }
    }
    checks.push(("Y11_ij + Y12_ji = y1_j", block));
    checks.push(("Y22_ij + Y12_ij = y2_j", block2));
    checks.push(("Y_ij <= y_i", cut_a));
    checks.push(("y_i + y_j - Y_ij <= rho", cut_c));

    let lap = graph.laplacian();
    let lhs = lap.dot(&y11);
    let rhs = 0.5 * (lap.dot(&y11) + lap.dot(&y22));
    let (worst, name) =
        checks.into_iter().map(|(name, v)| (v, name)).fold((f64::NEG_INFINITY, ""), |a, b| if b.0 > a.0 { b } else { a });
    (worst, name, (lhs - rhs).abs())
}

fn feasibility(runs: &[Runs]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut what = String::new();
    let mut objective = 0.0f64;
    for r in runs {
        let (v, name, obj) = structure_violation(&r.dnnpfrc.y, &r.graph);
        objective = objective.max(obj);
        if v > worst {
            worst = v;
            what = format!("{} ({name})", r.name);
        }
    }
    outcome(
        worst <= 1e-3 && objective <= 1e-6,
        format!("worst violation {worst:.2e} at {what}, objective forms differ by {objective:.2e}"),
    )
}

fn cut_effect(runs: &[Runs], extra: &[Runs]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut best = f64::NEG_INFINITY;
    let mut best_at = String::new();
    for r in runs.iter().chain(extra) {
        let d = r.dnnpfrc.bound() - r.dnnp.bound();
        worst = worst.max(-d);
        if d > best {
            best = d;
            best_at = r.name.clone();
        }
    }
    outcome(
        worst <= 1e-3 && best > 0.01,
        format!("max loss {worst:.2e}, largest gain {best:.3} at {best_at}"),
    )
}

fn post_processing(runs: &[Runs]) -> Outcome {
    let mut worst = 0.0f64;
    for r in runs {
        for (_, sol) in r.all() {
            worst = worst.max(sol.certificate.correction.abs());
        }
    }
    // A dual with Z̃ = WᵀL̃W + I, which is PD: nothing to correct.
    let g = generate_family(Family::Cycle(6)).unwrap();
    let rel = Relaxation::lifted(&build_model(&g, DiagMode::None).unwrap());
    let mut dual = DualState::zeros(rel.p(), 0, rel.dim, 1.0);
    dual.nu[0] = 0.37;
    let ztilde = rel.reduce(&rel.cost) + DMatrix::identity(rel.rank(), rel.rank());
    let direct = bound_from_spectrum(0.37, &ztilde, rel.r_bar).unwrap();
    // Through certify: adding ν₀A₀ + WWᵀ to the cost makes Z̃ = WᵀL̃W + I.
    let mut shifted = rel.clone();
    rel.eq_ops[0].add_to(&mut shifted.cost, 0.37);
    shifted.cost += &rel.w * rel.w.transpose();
    let via = certify(&shifted, &[], &dual, rel.r_bar).unwrap();
    let exact = direct.certified_lb == 0.37 && via.lambda_min > 0.0 && via.certified_lb == 0.37;
    outcome(
        worst < 0.01 && exact,
        format!("max |correction| = {worst:.2e}; PSD certificate returns b'nu exactly: {exact}"),
    )
}

fn scale_smoke() -> Outcome {
    let graph = (1..).find_map(|seed| generate_family(Family::Gnp { n: 50, p: 0.2, seed }).ok()).unwrap();
    let started = Instant::now();
    let result = solve(&Relaxation::lifted(&build_model(&graph, DiagMode::None).unwrap()), &SolverConfig::default());
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(sol) => outcome(
            sol.bound().is_finite() && secs < 300.0,
            format!("G(50, 0.2) with m = {}: bound {:.4}, {} cuts, {secs:.1} s", graph.m(), sol.bound(), sol.pool.len()),
        ),
        Err(e) => outcome(false, format!("solver error: {e}")),
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("kernel correctness", kernel_correctness()),
        ("face equivalence", face_equivalence()),
        ("gradient check", gradient_check()),
        ("concavity", concavity()),
    ];

    let started = Instant::now();
    let runs: Vec<Runs> = corpus().into_par_iter().map(|(name, g)| run_graph(name, g)).collect();
    let corpus_secs = started.elapsed().as_secs_f64();
    results.push(("validity", validity(&runs, corpus_secs)));
    results.push(("dominance", dominance(&runs)));
    results.push(("feasibility", feasibility(&runs)));

    let gains = runs.iter().any(|r| r.dnnpfrc.bound() - r.dnnp.bound() > 0.01);
    let extra: Vec<Runs> = if gains {
        Vec::new()
    } else {
        (0..40)
            .filter_map(|seed| generate_family(Family::Gnp { n: 16, p: 0.3, seed }).ok().map(|g| (seed, g)))
            .take(4)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(seed, g)| run_graph(format!("gnp16_0.3_s{seed}"), g))
            .collect()
    };
    results.push(("cut effect", cut_effect(&runs, &extra)));
    results.push(("post-processing", post_processing(&runs)));
    results.push(("scale smoke", scale_smoke()));

    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        all &= o.pass;
        println!("criterion {:>2} {:<20} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
