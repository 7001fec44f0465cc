//! Subcommand bodies. Each is a thin layer over a library function that the
//! tests call directly.

use std::fs;
use std::path::{Path, PathBuf};

use aloha_corr_core::consensus::{
    expected_disagreement, laplacian_moments, minimize_eps_rho, radii, ConsensusMoments, PerformanceBounds,
    Sampler,
};
use aloha_corr_core::deployment::{derive_radio_params, shape_from_f64};
use aloha_corr_core::oracle::{compare_exact, compare_mc, CompareReport, EntryKind, FrameSampler, Metric};
use aloha_corr_core::slotmodel::{correlation_matrix, uhbm_from, Duplex, LinkStats};
use aloha_corr_core::Network;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult, ExitKind};
use crate::output::{csv_writer, fmt_f64, matrix_rows, write_json, write_matrix_csv};
use crate::{parallel, CorrArgs, Format, Mode, Model, ScenarioArgs, SimulateArgs, SweepArgs, ValidateArgs};
use crate::scenario::Scenario;

const EXACT_TOL: f64 = 1e-10;
const Z_MAX: f64 = 4.0;
const EPS_TOL: f64 = 1e-10;

impl ScenarioArgs {
    fn load(&self) -> CliResult<Scenario> {
        Scenario::load(&self.scenario)
    }

    fn slot_counts(&self, s: &Scenario) -> Vec<u32> {
        if self.m.is_empty() {
            s.slot_counts.clone()
        } else {
            self.m.clone()
        }
    }

    fn single_m(&self, s: &Scenario) -> CliResult<u32> {
        match self.slot_counts(s)[..] {
            [m] => Ok(m),
            ref v => Err(CliError::usage(format!("expected one slot count, got {v:?}; pass --m"))),
        }
    }

    fn shapes(&self) -> CliResult<Vec<Option<u32>>> {
        if self.shape.is_empty() {
            return Ok(vec![None]);
        }
        self.shape.iter().map(|&s| Ok(Some(shape_from_f64(s)?))).collect()
    }

    fn single_shape(&self) -> CliResult<Option<u32>> {
        match self.shapes()?[..] {
            [s] => Ok(s),
            _ => Err(CliError::usage("expected one shape")),
        }
    }

    fn out_dir(&self) -> CliResult<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

fn duplex(model: Model) -> Duplex {
    match model {
        Model::Fd => Duplex::Full,
        Model::Hd | Model::Uhbm => Duplex::Half,
    }
}

/// Link statistics of `model`.
pub fn model_stats(net: &Network, model: Model, max_nodes: usize) -> CliResult<LinkStats> {
    let stats = parallel::link_stats(net, duplex(model), max_nodes)?;
    Ok(if model == Model::Uhbm { uhbm_from(&stats) } else { stats })
}

fn shape_label(net: &Network) -> String {
    let first = net.shape(0);
    if (0..net.len()).all(|i| net.shape(i) == first) {
        first.to_string()
    } else {
        String::from("mixed")
    }
}

// ---- params

pub fn params_json(s: &Scenario, slot_counts: &[u32], theta: Option<f64>) -> CliResult<Value> {
    let r = &s.radio;
    let mut rows = Vec::new();
    for &m in slot_counts {
        let p = derive_radio_params(r.bandwidth_hz, r.ref_bitrate_bps, m, r.temperature_k)?;
        rows.push(json!({ "m": m, "theta": p.theta }));
    }
    let mut out = json!({
        "noise_w": r.noise(),
        "theta": rows,
        "note": "theta = 2^(m * ref_bitrate / bandwidth) - 1. With the reference inputs \
                 (10 MHz, 10.8 Mbit/s) this gives 1.114 for m = 1; a quoted value of 2.23 \
                 for that case does not follow from these inputs.",
    });
    if let Some(t) = theta.or(r.theta) {
        out["theta_override"] = json!(t);
    }
    Ok(out)
}

pub fn params(a: &ScenarioArgs) -> CliResult<()> {
    let s = a.load()?;
    let v = params_json(&s, &a.slot_counts(&s), a.theta)?;
    println!("{}", serde_json::to_string_pretty(&v)?);
    if a.out.is_some() {
        write_json(&a.out_dir()?.join("params.json"), &v)?;
    }
    Ok(())
}

// ---- corr

pub fn corr(a: &CorrArgs) -> CliResult<()> {
    let sa = &a.scenario;
    let s = sa.load()?;
    let m = sa.single_m(&s)?;
    let net = s.network(m, sa.single_shape()?, sa.theta)?;
    let stats = model_stats(&net, a.model, sa.max_nodes)?;
    let dir = sa.out_dir()?;
    write_corr(&dir, &stats, a.model, m, a.format)?;
    println!("{}: {} links written to {}", a.model.name(), stats.p().len(), dir.display());
    Ok(())
}

/// Writes `p.csv`, `cov.csv` and `corr.csv`, or a single `corr.json`.
pub fn write_corr(dir: &Path, stats: &LinkStats, model: Model, m: u32, format: Format) -> CliResult<()> {
    let corr = correlation_matrix(stats);
    let labels = stats.labels();
    match format {
        Format::Csv => {
            let mut w = csv_writer(&dir.join("p.csv"))?;
            w.write_record(["link", "p", "included"])?;
            for (a, label) in labels.iter().enumerate() {
                w.write_record([label.clone(), fmt_f64(stats.p()[a]), corr.included[a].to_string()])?;
            }
            w.flush()?;
            write_matrix_csv(&dir.join("cov.csv"), &labels, stats.cov())?;
            write_matrix_csv(&dir.join("corr.csv"), &labels, &corr.corr)?;
        }
        Format::Json => {
            let v = json!({
                "model": model.name(),
                "m": m,
                "links": labels,
                "p": stats.p(),
                "included": corr.included,
                "cov": matrix_rows(stats.cov()),
                "corr": matrix_rows(&corr.corr),
            });
            write_json(&dir.join("corr.json"), &v)?;
        }
    }
    Ok(())
}

// ---- validate

/// Which oracle to compare against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Exact { budget: u64 },
    Mc { frames: u64, seed: u64 },
}

/// Compares the analytic moments of `analytic` with the oracle run on
/// `reference`. The networks differ only when a test perturbs one of them.
pub fn compare(
    analytic: &Network,
    reference: &Network,
    duplex: Duplex,
    oracle: Oracle,
    max_nodes: usize,
) -> CliResult<CompareReport> {
    let stats = parallel::link_stats(analytic, duplex, max_nodes)?;
    Ok(match oracle {
        Oracle::Exact { budget } => {
            compare_exact(&stats, &parallel::exact_stats(reference, duplex, budget)?, EXACT_TOL)?
        }
        Oracle::Mc { frames, seed } => {
            compare_mc(&stats, &parallel::mc_stats(reference, duplex, frames, seed)?, Z_MAX)?
        }
    })
}

pub fn report_json(report: &CompareReport, oracle: Oracle, model: Model, net: &Network) -> Value {
    let mut v = Map::new();
    v.insert("verdict".into(), json!(if report.pass { "pass" } else { "fail" }));
    v.insert("model".into(), json!(model.name()));
    v.insert("n".into(), json!(net.len()));
    v.insert("m".into(), json!(net.slots().slots));
    let metric = match report.metric {
        Metric::AbsDev => "max_abs_dev",
        Metric::ZScore => "max_z",
    };
    v.insert(metric.into(), json!(report.max));
    v.insert("threshold".into(), json!(report.threshold));
    let per_case: Map<String, Value> = report.per_case.iter().map(|(k, d)| (k.clone(), json!(d))).collect();
    v.insert("per_case".into(), Value::Object(per_case));
    v.insert(
        "worst".into(),
        match report.worst {
            Some(e) => json!({
                "kind": match e.kind {
                    EntryKind::Expectation => "expectation",
                    EntryKind::Covariance => "covariance",
                },
                "a": e.a.to_string(),
                "b": e.b.to_string(),
                "value": e.value,
            }),
            None => Value::Null,
        },
    );
    match oracle {
        Oracle::Exact { budget } => {
            v.insert("mode".into(), json!("exact"));
            v.insert("budget".into(), json!(budget));
        }
        Oracle::Mc { frames, seed } => {
            v.insert("mode".into(), json!("mc"));
            v.insert("frames".into(), json!(frames));
            v.insert("seed".into(), json!(seed));
        }
    }
    Value::Object(v)
}

pub fn validate(a: &ValidateArgs) -> CliResult<()> {
    let sa = &a.scenario;
    if a.model == Model::Uhbm {
        return Err(CliError::usage("validate compares hd or fd moments; uhbm has no oracle"));
    }
    let s = sa.load()?;
    let net = s.network(sa.single_m(&s)?, sa.single_shape()?, sa.theta)?;
    let oracle = match a.mode {
        Mode::Exact => Oracle::Exact { budget: a.budget },
        Mode::Mc => Oracle::Mc { frames: a.frames, seed: a.seed },
    };
    let report = compare(&net, &net, duplex(a.model), oracle, sa.max_nodes)?;
    let path = sa.out_dir()?.join("report.json");
    write_json(&path, &report_json(&report, oracle, a.model, &net))?;
    let verdict = format!(
        "{}: max {} = {:.3e} (threshold {:e}), report in {}",
        if report.pass { "pass" } else { "fail" },
        if report.metric == Metric::AbsDev { "|dev|" } else { "z" },
        report.max,
        report.threshold,
        path.display()
    );
    if report.pass {
        println!("{verdict}");
        Ok(())
    } else {
        Err(CliError { kind: ExitKind::ValidationFailed, message: verdict })
    }
}

// ---- sweep

/// Gain grid of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsGrid {
    Absolute(Vec<f64>),
    /// Multiples of the minimiser of the essential spectral radius.
    Relative(Vec<f64>),
}

impl EpsGrid {
    fn values(&self) -> &[f64] {
        match self {
            EpsGrid::Absolute(v) | EpsGrid::Relative(v) => v,
        }
    }

    fn check(&self) -> CliResult<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(CliError::usage("empty gain grid"));
        }
        if let Some(e) = v.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(CliError::usage(format!("gain must be finite and >= 0, got {e}")));
        }
        Ok(())
    }

    /// `(eps, eps / eps_rho)` pairs.
    fn points(&self, eps_rho: f64) -> Vec<(f64, f64)> {
        match self {
            EpsGrid::Absolute(v) => v.iter().map(|&e| (e, e / eps_rho)).collect(),
            EpsGrid::Relative(v) => v.iter().map(|&r| (r * eps_rho, r)).collect(),
        }
    }
}

/// Default relative grid `0.05, 0.10, ..., 1.00`.
pub fn default_grid() -> EpsGrid {
    EpsGrid::Relative((1..=20).map(|i| f64::from(i) * 0.05).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: u32,
    pub shape: String,
    pub model: &'static str,
    pub eps: f64,
    pub eps_rel: f64,
    pub rho_ess: f64,
    pub r2: f64,
    pub w2: f64,
    pub lb: f64,
    pub ub: f64,
}

pub const SWEEP_HEADER: [&str; 10] = ["m", "shape", "model", "eps", "eps_rel", "rho_ess", "r2", "w2", "lb", "ub"];

/// One row per grid point, evaluated in parallel.
pub fn sweep_rows(
    mom: &ConsensusMoments,
    (m, shape): (u32, &str),
    model: Model,
    grid: &EpsGrid,
    eps_rho: f64,
    k: u32,
) -> CliResult<Vec<SweepRow>> {
    grid.check()?;
    if k == 0 {
        return Err(CliError::usage("k must be >= 1"));
    }
    grid.points(eps_rho)
        .par_iter()
        .map(|&(eps, eps_rel)| {
            let s = radii(mom, eps)?;
            let b = PerformanceBounds::from_radii(&s, k)?;
            Ok(SweepRow {
                m,
                shape: shape.to_string(),
                model: model.name(),
                eps,
                eps_rel,
                rho_ess: s.rho_ess,
                r2: s.r2,
                w2: s.w2,
                lb: b.lb,
                ub: b.ub,
            })
        })
        .collect()
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.shape.clone(),
            r.model.to_string(),
            fmt_f64(r.eps),
            fmt_f64(r.eps_rel),
            fmt_f64(r.rho_ess),
            fmt_f64(r.r2),
            fmt_f64(r.w2),
            fmt_f64(r.lb),
            fmt_f64(r.ub),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Minimiser of the essential spectral radius of the half-duplex mean
/// Laplacian; the relative gain axis of every model refers to it.
fn reference_eps(net: &Network, max_nodes: usize) -> CliResult<f64> {
    let mom = laplacian_moments(&parallel::link_stats(net, Duplex::Half, max_nodes)?);
    Ok(minimize_eps_rho(&mom.el, None, EPS_TOL)?.eps)
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let sa = &a.scenario;
    let s = sa.load()?;
    let grid = match (a.eps.is_empty(), a.eps_rel.is_empty()) {
        (false, _) => EpsGrid::Absolute(a.eps.clone()),
        (true, false) => EpsGrid::Relative(a.eps_rel.clone()),
        (true, true) => default_grid(),
    };
    grid.check()?;
    if a.models.is_empty() {
        return Err(CliError::usage("no models selected"));
    }
    let mut rows = Vec::new();
    for m in sa.slot_counts(&s) {
        for shape in sa.shapes()? {
            let net = s.network(m, shape, sa.theta)?;
            let eps_rho = reference_eps(&net, sa.max_nodes)?;
            let label = shape_label(&net);
            for &model in &a.models {
                let mom = laplacian_moments(&model_stats(&net, model, sa.max_nodes)?);
                rows.extend(sweep_rows(&mom, (m, &label), model, &grid, eps_rho, a.k)?);
            }
        }
    }
    let path = sa.out_dir()?.join("sweep.csv");
    write_sweep(&path, &rows)?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(())
}

// ---- simulate

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: u32,
    /// Empirical `E δ_t²`.
    pub mean: f64,
    pub se: f64,
    /// `E δ_t²` from the second-moment recursion.
    pub exact: f64,
    /// `r2^(2t) / n`: lower bound on the average over unit initial states.
    pub basis_mean_lower: f64,
    /// `2 sqrt(n-1) w2^(2t) δ_0²`
    pub upper: f64,
}

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "mean", "se", "exact", "basis_mean_lower", "upper"];

pub fn parse_x0(spec: &str, n: usize) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    if let Some(i) = spec.strip_prefix('e') {
        let i: usize = i.parse().map_err(|_| CliError::usage(format!("bad initial state {spec:?}")))?;
        if i == 0 || i > n {
            return Err(CliError::usage(format!("unit vector e{i} out of range 1..={n}")));
        }
        return Ok((0..n).map(|v| if v + 1 == i { 1.0 } else { 0.0 }).collect());
    }
    let x: Vec<f64> = spec
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::usage(format!("bad initial state value {t:?}"))))
        .collect::<CliResult<_>>()?;
    if x.len() != n {
        return Err(CliError::usage(format!("initial state has {} values, expected {n}", x.len())));
    }
    Ok(x)
}

fn disagreement(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Rows for `t = 0..=k`.
pub fn trajectory_rows(
    sampler: &Sampler,
    mom: &ConsensusMoments,
    eps: f64,
    k: u32,
    trials: u64,
    x0: &[f64],
    seed: u64,
) -> CliResult<Vec<TrajectoryRow>> {
    if k == 0 {
        return Err(CliError::usage("k must be >= 1"));
    }
    if !eps.is_finite() {
        return Err(CliError::usage(format!("gain must be finite, got {eps}")));
    }
    let sim = parallel::simulate_consensus(sampler, eps, k, trials, x0, seed)?;
    let exact = expected_disagreement(mom, eps, k, x0)?;
    let s = radii(mom, eps)?;
    let n = mom.n as f64;
    let d0 = disagreement(x0);
    let row = |t: u32, mean: f64, se: f64, exact: f64| TrajectoryRow {
        t,
        mean,
        se,
        exact,
        basis_mean_lower: s.r2.powi(2 * t as i32) / n,
        upper: 2.0 * (n - 1.0).sqrt() * s.w2.powi(2 * t as i32) * d0,
    };
    let mut rows = vec![row(0, d0, 0.0, d0)];
    for (t, ((&mean, &se), &e)) in sim.mean.iter().zip(&sim.se).zip(&exact).enumerate() {
        rows.push(row(t as u32 + 1, mean, se, e));
    }
    Ok(rows)
}

pub fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.se),
            fmt_f64(r.exact),
            fmt_f64(r.basis_mean_lower),
            fmt_f64(r.upper),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let sa = &a.scenario;
    let s = sa.load()?;
    let net = s.network(sa.single_m(&s)?, sa.single_shape()?, sa.theta)?;
    let stats = model_stats(&net, a.model, sa.max_nodes)?;
    let mom = laplacian_moments(&stats);
    let eps = match a.eps {
        Some(e) => e,
        None => a.eps_rel.unwrap_or(1.0) * reference_eps(&net, sa.max_nodes)?,
    };
    let sampler = match a.model {
        Model::Uhbm => Sampler::bernoulli(&stats),
        m => Sampler::Physical(FrameSampler::new(&net, duplex(m))?),
    };
    let x0 = parse_x0(&a.x0, net.len())?;
    let rows = trajectory_rows(&sampler, &mom, eps, a.k, a.trials, &x0, a.seed)?;
    let path = sa.out_dir()?.join("trajectory.csv");
    write_trajectory(&path, &rows)?;
    println!("eps = {eps}: {} steps written to {}", a.k, path.display());
    Ok(())
}
