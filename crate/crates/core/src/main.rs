use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;

use expansion_bounds::graph::{generate_family, parse_graph, Family, Graph, GraphFormat};
use expansion_bounds::lbfgsb::LbfgsbOptions;
use expansion_bounds::model::DiagMode;
use expansion_bounds::oracle::{exact_edge_expansion, DEFAULT_VERTEX_CAP};
use expansion_bounds::report::{BoundEntry, BoundReport, RelaxationChoice, CSV_HEADER};
use expansion_bounds::SolverConfig;

/// Certified lower bounds on graph edge expansion.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Graph files.
    inputs: Vec<PathBuf>,
    /// Generated instances: cycle:N, path:N, complete:N, bipartite:A,B,
    /// gnp:N,P[,SEED].
    #[arg(long = "generate", value_name = "FAMILY")]
    generate: Vec<Family>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [RelaxationChoice::Dnnpfrc])]
    relaxation: Vec<RelaxationChoice>,
    #[arg(long, value_enum, default_value_t = DiagMode::None)]
    diag: DiagMode,
    #[arg(long, default_value_t = 1.0)]
    alpha_init: f64,
    #[arg(long, default_value_t = 1e-5)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.6)]
    alpha_factor: f64,
    #[arg(long, default_value_t = 500)]
    cut_batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    cut_tol: f64,
    #[arg(long, default_value_t = 50)]
    min_new_cuts: usize,
    #[arg(long, default_value_t = 1e-5)]
    purge_tol: f64,
    #[arg(long, default_value_t = 5)]
    warmup_iters: usize,
    #[arg(long, default_value_t = 500)]
    post_iters: usize,
    #[arg(long, default_value_t = 0.01)]
    post_correction_tol: f64,
    #[arg(long, default_value_t = 10)]
    lbfgs_m: usize,
    #[arg(long, default_value_t = 2000)]
    lbfgs_maxiter: usize,
    #[arg(long, default_value_t = 1e8)]
    lbfgs_factr: f64,
    #[arg(long, default_value_t = 1e-5)]
    lbfgs_pgtol: f64,
    /// Upper bound, either VALUE for every instance or NAME=VALUE.
    #[arg(long, value_name = "[NAME=]VALUE")]
    ub: Vec<String>,
    /// Use the exact expansion as upper bound when n is small enough.
    #[arg(long)]
    ub_from_oracle: bool,
    #[arg(long, value_enum, default_value_t = GraphFormat::EdgeList)]
    format: GraphFormat,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Iteration logs as JSON lines.
    #[arg(long)]
    out_log: Option<PathBuf>,
    /// Seed for generated G(n, p) instances that do not name one.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for running instances in parallel.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl Cli {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            alpha_init: self.alpha_init,
            alpha_min: self.alpha_min,
            alpha_factor: self.alpha_factor,
            cut_batch: self.cut_batch,
            cut_tol: self.cut_tol,
            min_new_cuts: self.min_new_cuts,
            purge_tol: self.purge_tol,
            warmup_iters: self.warmup_iters,
            post_iters: self.post_iters,
            post_correction_tol: self.post_correction_tol,
            inner: LbfgsbOptions {
                memory: self.lbfgs_m,
                max_iter: self.lbfgs_maxiter,
                factr: self.lbfgs_factr,
                pgtol: self.lbfgs_pgtol,
                ..LbfgsbOptions::default()
            },
            diag: self.diag,
            ..SolverConfig::default()
        }
    }

    fn validate(&self) -> Result<(), String> {
        let positive = [
            ("--alpha-init", self.alpha_init),
            ("--alpha-min", self.alpha_min),
            ("--cut-tol", self.cut_tol),
            ("--post-correction-tol", self.post_correction_tol),
            ("--lbfgs-factr", self.lbfgs_factr),
        ];
        for (flag, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{flag} must be positive, got {v}"));
            }
        }
        if !(self.alpha_factor > 0.0 && self.alpha_factor < 1.0) {
            return Err(format!("--alpha-factor must lie in (0, 1), got {}", self.alpha_factor));
        }
        if self.purge_tol < 0.0 || self.lbfgs_pgtol < 0.0 {
            return Err("--purge-tol and --lbfgs-pgtol must be nonnegative".into());
        }
        if self.lbfgs_m == 0 {
            return Err("--lbfgs-m must be at least 1".into());
        }
        if self.inputs.is_empty() && self.generate.is_empty() {
            return Err("no input graphs: pass files or --generate".into());
        }
        Ok(())
    }
}

struct UpperBounds {
    global: Option<f64>,
    named: HashMap<String, f64>,
}

fn parse_upper_bounds(specs: &[String]) -> Result<UpperBounds, String> {
    let mut out = UpperBounds { global: None, named: HashMap::new() };
    for spec in specs {
        let (name, value) = match spec.rsplit_once('=') {
            Some((name, value)) => (Some(name.to_string()), value),
            None => (None, spec.as_str()),
        };
        let v: f64 = value.trim().parse().map_err(|_| format!("cannot parse upper bound {spec:?}"))?;
        match name {
            Some(name) => {
                out.named.insert(name, v);
            }
            None => out.global = Some(v),
        }
    }
    Ok(out)
}

/// A named instance, or the reason it could not be loaded.
type Loaded = (String, Result<Graph, String>);

fn load_instances(cli: &Cli) -> Vec<Loaded> {
    let mut out = Vec::new();
    for path in &cli.inputs {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string());
        let graph = fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))
            .and_then(|text| parse_graph(&text, cli.format).map_err(|e| format!("{}: {e}", path.display())));
        out.push((name, graph));
    }
    for &family in &cli.generate {
        let family = match family {
            Family::Gnp { n, p, seed: 0 } => Family::Gnp { n, p, seed: cli.seed },
            other => other,
        };
        out.push((family.to_string(), generate_family(family).map_err(|e| e.to_string())));
    }
    out
}

fn run_instance(cli: &Cli, ubs: &UpperBounds, name: &str, g: &Graph) -> BoundReport {
    let mut ub = ubs.named.get(name).copied().or(ubs.global);
    if ub.is_none() && cli.ub_from_oracle && g.n() <= DEFAULT_VERTEX_CAP {
        ub = exact_edge_expansion(g).ok().map(|h| h.value());
    }
    if let Some(u) = ub {
        if !(u > 0.0) {
            eprintln!("warning: {name}: upper bound {u} is not positive, gap left blank");
        }
    }
    let config = cli.config();
    let bounds = cli
        .relaxation
        .iter()
        .map(|&choice| {
            let started = Instant::now();
            let result = choice.run(g, &config);
            let entry = BoundEntry::from_result(choice, ub, result, started.elapsed().as_secs_f64());
            if let Some(gap) = entry.gap {
                if gap < 0.0 {
                    eprintln!("warning: {name}/{}: lower bound exceeds upper bound (gap {gap:.4})", choice.name());
                }
            }
            if let Some(err) = &entry.error {
                eprintln!("error: {name}/{}: {err}", choice.name());
            }
            entry
        })
        .collect();
    BoundReport { instance: name.to_string(), n: g.n(), m: g.m(), ub, bounds }
}

fn write_outputs(cli: &Cli, reports: &[BoundReport]) -> std::io::Result<()> {
    let tag = cli.relaxation.len() > 1;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in reports {
        for row in r.csv_rows(tag) {
            csv.push_str(&row);
            csv.push('\n');
        }
    }
    match &cli.out_csv {
        Some(path) => fs::write(path, &csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    if let Some(path) = &cli.out_json {
        let json = serde_json::to_string_pretty(reports).map_err(std::io::Error::other)?;
        fs::write(path, json + "\n")?;
    }
    if let Some(path) = &cli.out_log {
        let mut out = String::new();
        for r in reports {
            for b in &r.bounds {
                for rec in &b.log {
                    let mut value = serde_json::to_value(rec).map_err(std::io::Error::other)?;
                    value["instance"] = r.instance.clone().into();
                    value["relaxation"] = b.relaxation.name().into();
                    out.push_str(&value.to_string());
                    out.push('\n');
                }
            }
        }
        fs::write(path, out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = cli.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let ubs = match parse_upper_bounds(&cli.ub) {
        Ok(u) => u,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let instances = load_instances(&cli);
    let mut failed = false;
    let mut graphs = Vec::new();
    for (name, g) in instances {
        match g {
            Ok(g) => graphs.push((name, g)),
            Err(msg) => {
                eprintln!("error: {msg}");
                failed = true;
            }
        }
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let reports: Vec<BoundReport> =
        pool.install(|| graphs.par_iter().map(|(name, g)| run_instance(&cli, &ubs, name, g)).collect());
    failed |= reports.iter().any(BoundReport::failed);

    if let Err(e) = write_outputs(&cli, &reports) {
        eprintln!("error: writing reports: {e}");
        return ExitCode::FAILURE;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
