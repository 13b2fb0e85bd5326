//! Batch runs over `(θ, variant)` rows on one LCQM instance, and report
//! emission.

use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipaal::{dynamic_solve, Caps, CapExceeded, CycleSummary, IterationRecord, SolverConfig, Termination};
use crate::lcqm::{generate_instance, lcqm_problem, random_start, LcqmInstance, RhsRule};
use crate::model::{Point, ProblemSpec, Variant};

fn default_density() -> f64 {
    0.025
}

/// Where the instance comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    Generate {
        seed: u64,
        l: usize,
        n: usize,
        #[serde(default = "default_density")]
        density: f64,
        l_max: f64,
        m: f64,
        #[serde(default)]
        rhs: RhsRule,
    },
    Load { path: PathBuf },
}

/// Initial penalty rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C1Rule {
    /// `c₁ = 10⁻⁵·L/(‖A‖² + 1)`.
    #[default]
    Formula,
    Value(f64),
}

/// `10⁻⁵·L/(‖A‖² + 1)`.
pub fn c1_formula(upper_curvature: f64, norm_a: f64) -> f64 {
    1e-5 * upper_curvature / (norm_a * norm_a + 1.0)
}

fn default_thetas() -> Vec<f64> {
    vec![1.0, 0.5, 0.1, 0.0]
}
fn default_variants() -> Vec<Variant> {
    vec![Variant::Constant]
}
fn default_tol() -> f64 {
    1e-4
}
fn default_termination() -> Termination {
    Termination::Relative
}
fn default_penalty_factor() -> f64 {
    5.0
}
fn default_true() -> bool {
    true
}
fn default_jobs() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSource,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Every θ is run with every listed variant; `(0, theoretical)` is
    /// skipped.
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_tol")]
    pub rho_hat: f64,
    #[serde(default = "default_tol")]
    pub eta_hat: f64,
    #[serde(default = "default_termination")]
    pub termination: Termination,
    #[serde(default)]
    pub c1: C1Rule,
    #[serde(default = "default_penalty_factor")]
    pub penalty_factor: f64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Seed of the starting point; the instance seed when absent.
    #[serde(default)]
    pub start_seed: Option<u64>,
    /// Keep the per-iteration records in the report.
    #[serde(default = "default_true")]
    pub keep_records: bool,
}

impl RunConfig {
    pub fn generated(seed: u64, l: usize, n: usize, l_max: f64, m: f64) -> Self {
        Self {
            instance: InstanceSource::Generate { seed, l, n, density: default_density(), l_max, m, rhs: RhsRule::default() },
            thetas: default_thetas(),
            variants: default_variants(),
            rho_hat: default_tol(),
            eta_hat: default_tol(),
            termination: default_termination(),
            c1: C1Rule::default(),
            penalty_factor: default_penalty_factor(),
            warm_start: true,
            caps: Caps::default(),
            jobs: 1,
            start_seed: None,
            keep_records: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.thetas.is_empty() {
            return bad("thetas", "must not be empty".into());
        }
        if let Some(t) = self.thetas.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad("thetas", format!("{t} is outside [0, 1]"));
        }
        if self.variants.is_empty() {
            return bad("variants", "must not be empty".into());
        }
        if !(self.rho_hat > 0.0) {
            return bad("rho_hat", format!("must be positive, got {}", self.rho_hat));
        }
        if !(self.eta_hat > 0.0) {
            return bad("eta_hat", format!("must be positive, got {}", self.eta_hat));
        }
        if !(self.penalty_factor > 1.0) {
            return bad("penalty_factor", format!("must exceed 1, got {}", self.penalty_factor));
        }
        if let C1Rule::Value(v) = self.c1 {
            if !(v > 0.0) {
                return bad("c1", format!("must be positive, got {v}"));
            }
        }
        if self.jobs == 0 {
            return bad("jobs", "must be at least 1".into());
        }
        if self.caps.max_outer == 0 || self.caps.max_cycles == 0 || self.caps.acg_factor == 0 {
            return bad("caps", "all caps must be positive".into());
        }
        if let InstanceSource::Generate { l, n, density, l_max, m, .. } = self.instance {
            if l == 0 || n == 0 {
                return bad("instance.generate", "l and n must be positive".into());
            }
            if !(density > 0.0 && density <= 1.0) {
                return bad("instance.generate.density", format!("must lie in (0, 1], got {density}"));
            }
            if !(m > 0.0 && l_max >= m) {
                return bad("instance.generate", format!("need 0 < m <= l_max, got m={m}, l_max={l_max}"));
            }
        }
        Ok(())
    }

    fn rows(&self) -> Vec<(f64, Variant)> {
        let mut rows = Vec::new();
        for &theta in &self.thetas {
            for &variant in &self.variants {
                if theta == 0.0 && variant == Variant::Theoretical {
                    warn!("skipping theta = 0 with the theoretical variant");
                    continue;
                }
                rows.push((theta, variant));
            }
        }
        rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub seed: u64,
    pub l: usize,
    pub n: usize,
    pub l_max: f64,
    pub m: f64,
    pub norm_a: f64,
    pub c1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub theta: f64,
    pub variant: Variant,
    pub acg_iters: usize,
    pub outer_iters: usize,
    pub cycles: usize,
    /// Wall-clock seconds of the solve, rounded to 1 ms.
    pub runtime_s: f64,
    pub stationarity: f64,
    pub feasibility: f64,
    pub rel_stationarity: f64,
    pub rel_feasibility: f64,
    pub final_c: f64,
    pub capped: Option<CapExceeded>,
    pub cycle_breakdown: Vec<CycleSummary>,
    pub records: Vec<IterationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: Option<InstanceSummary>,
    pub rows: Vec<RunRow>,
}

impl RunReport {
    pub fn any_capped(&self) -> bool {
        self.rows.iter().any(|r| r.capped.is_some())
    }

    /// A copy with every runtime zeroed, for comparing runs.
    pub fn without_runtime(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            row.runtime_s = 0.0;
        }
        out
    }
}

pub fn load_instance(source: &InstanceSource) -> Result<LcqmInstance> {
    match source {
        InstanceSource::Generate { seed, l, n, density, l_max, m, rhs } => {
            generate_instance(*seed, *l, *n, *density, *l_max, *m, *rhs)
        }
        InstanceSource::Load { path } => LcqmInstance::load(path),
    }
}

fn solve_row(
    problem: &ProblemSpec,
    z0: &Point,
    theta: f64,
    variant: Variant,
    c1: f64,
    config: &RunConfig,
) -> Result<RunRow> {
    let mut solver = SolverConfig::new(theta, variant, c1);
    solver.rho_hat = config.rho_hat;
    solver.eta_hat = config.eta_hat;
    solver.termination = config.termination;
    solver.penalty_factor = config.penalty_factor;
    solver.warm_start = config.warm_start;
    solver.caps = config.caps;

    let start = Instant::now();
    let (_, report) = dynamic_solve(problem, z0, &solver)?;
    let runtime_s = (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
    info!(
        "theta={theta} {variant}: acg={} outer={} cycles={} runtime={runtime_s}s",
        report.total_acg_iters,
        report.total_outer_iters,
        report.cycles.len()
    );
    Ok(RunRow {
        theta,
        variant,
        acg_iters: report.total_acg_iters,
        outer_iters: report.total_outer_iters,
        cycles: report.cycles.len(),
        runtime_s,
        stationarity: report.stationarity,
        feasibility: report.feasibility,
        rel_stationarity: report.rel_stationarity,
        rel_feasibility: report.rel_feasibility,
        final_c: report.final_c,
        capped: report.capped,
        cycle_breakdown: report.cycles,
        records: if config.keep_records { report.records } else { Vec::new() },
    })
}

/// Runs every `(θ, variant)` row; rows run in parallel when `jobs > 1`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let instance = load_instance(&config.instance)?;
    let problem = lcqm_problem(&instance)?;
    let norm_a = problem.constraint.norm_bound();
    let c1 = match config.c1 {
        C1Rule::Formula => c1_formula(instance.l_target, norm_a),
        C1Rule::Value(v) => v,
    };
    let z0 = random_start(config.start_seed.unwrap_or(instance.seed), instance.n);
    let rows = config.rows();

    let solve = |&(theta, variant): &(f64, Variant)| solve_row(&problem, &z0, theta, variant, c1, config);
    let rows: Vec<RunRow> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("jobs: {e}")))?;
        pool.install(|| rows.par_iter().map(solve).collect::<Result<_>>())?
    } else {
        rows.iter().map(solve).collect::<Result<_>>()?
    };

    Ok(RunReport {
        instance: Some(InstanceSummary {
            seed: instance.seed,
            l: instance.l,
            n: instance.n,
            l_max: instance.l_target,
            m: instance.m_target,
            norm_a,
            c1,
        }),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    theta: f64,
    variant: &'a Variant,
    acg_iters: usize,
    outer_iters: usize,
    cycles: usize,
    runtime_s: f64,
    stationarity: f64,
    feasibility: f64,
    final_c: f64,
}

const CSV_HEADER: [&str; 9] =
    ["theta", "variant", "acg_iters", "outer_iters", "cycles", "runtime_s", "stationarity", "feasibility", "final_c"];

pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &report.rows {
                w.serialize(CsvRow {
                    theta: r.theta,
                    variant: &r.variant,
                    acg_iters: r.acg_iters,
                    outer_iters: r.outer_iters,
                    cycles: r.cycles,
                    runtime_s: r.runtime_s,
                    stationarity: r.stationarity,
                    feasibility: r.feasibility,
                    final_c: r.final_c,
                })
                .map_err(csv_err)?;
            }
            w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))
        }
        ReportFormat::Table => {
            let mut s = format!(
                "{:>6} {:>12} {:>10} {:>8} {:>6} {:>10} {:>12} {:>12} {:>12}\n",
                "theta", "variant", "acg_iters", "outer", "cycles", "runtime_s", "stationarity", "feasibility", "final_c"
            );
            for r in &report.rows {
                s.push_str(&format!(
                    "{:>6} {:>12} {:>10} {:>8} {:>6} {:>10.3} {:>12.3e} {:>12.3e} {:>12.3e}{}\n",
                    r.theta,
                    r.variant.to_string(),
                    r.acg_iters,
                    r.outer_iters,
                    r.cycles,
                    r.runtime_s,
                    r.stationarity,
                    r.feasibility,
                    r.final_c,
                    if r.capped.is_some() { "  (capped)" } else { "" }
                ));
            }
            Ok(s.into_bytes())
        }
    }
}

/// Parses a JSON report.
pub fn parse_report(bytes: &[u8]) -> Result<RunReport> {
    Ok(serde_json::from_slice(bytes)?)
}
