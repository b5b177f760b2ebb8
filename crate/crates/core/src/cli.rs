//! Batch experiments: configuration, artifact emission and manifests.

use crate::cft_analytics::{self as cft, CftKinematics};
use crate::circuit_sim as cs;
use crate::free_fermion as ff;
use crate::ising_harness::{self as ih, IsingParams, Pauli, ThermalSpec};
use crate::spacetime_density as sd;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const THREADS_ENV: &str = "TDM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error("assertion failed: {}", .0.join("; "))]
    Assertion(Vec<String>),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn compute<E: Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Experiment {
    #[serde(rename = "ising-bounds")]
    #[value(name = "ising-bounds")]
    IsingBounds,
    #[serde(rename = "ising-mps-sv")]
    #[value(name = "ising-mps-sv")]
    IsingMpsSv,
    #[serde(rename = "ff-mutual-info")]
    #[value(name = "ff-mutual-info")]
    FfMutualInfo,
    #[serde(rename = "ff-trT2")]
    #[value(name = "ff-trT2")]
    FfTrT2,
    #[serde(rename = "ff-divergence")]
    #[value(name = "ff-divergence")]
    FfDivergence,
    #[serde(rename = "cft-consistency")]
    #[value(name = "cft-consistency")]
    CftConsistency,
    #[serde(rename = "holo-crossover")]
    #[value(name = "holo-crossover")]
    HoloCrossover,
    #[serde(rename = "protocol-table")]
    #[value(name = "protocol-table")]
    ProtocolTable,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::IsingBounds => "ising-bounds",
            Experiment::IsingMpsSv => "ising-mps-sv",
            Experiment::FfMutualInfo => "ff-mutual-info",
            Experiment::FfTrT2 => "ff-trT2",
            Experiment::FfDivergence => "ff-divergence",
            Experiment::CftConsistency => "cft-consistency",
            Experiment::HoloCrossover => "holo-crossover",
            Experiment::ProtocolTable => "protocol-table",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Ci,
    Figure,
}

/// Contents of the TOML config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub parameters: toml::Table,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig { experiment, profile: Profile::Ci, seed: 0, output_dir: default_output_dir(), parameters: toml::Table::new() }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Overlay user parameters on profile defaults; unknown keys are rejected.
fn resolve<T: Serialize + DeserializeOwned>(defaults: T, user: &toml::Table) -> Result<T> {
    let mut base = toml::Table::try_from(&defaults).map_err(|e| CliError::Config(e.to_string()))?;
    for (k, v) in user {
        if !base.contains_key(k) {
            let known: Vec<&str> = base.keys().map(|s| s.as_str()).collect();
            return Err(CliError::Config(format!("unknown parameter `{k}` (expected one of: {})", known.join(", "))));
        }
        base.insert(k.clone(), v.clone());
    }
    toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Failure makes the run exit nonzero.
    Assert,
    /// Recorded in the summary only.
    Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, kind: CheckKind, value: f64, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), kind, value, pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: &'static str,
    pub profile: Profile,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl Summary {
    pub fn failed_assertions(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| c.kind == CheckKind::Assert && !c.pass)
            .map(|c| format!("{} = {:e} ({})", c.name, c.value, c.detail))
            .collect()
    }
}

struct Sink {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Sink {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        std::fs::write(self.dir.join(name), s)?;
        self.artifacts.push(name.into());
        Ok(())
    }
}

/// Runs one experiment, writes its artifacts, `summary.json` and `manifest.json`.
/// Returns the summary; a failed assertion is reported as `CliError::Assertion`
/// after everything has been written.
pub fn run(config: &ExperimentConfig) -> Result<Summary> {
    let started = SystemTime::now();
    let clock = Instant::now();
    std::fs::create_dir_all(&config.output_dir)?;
    let mut sink = Sink { dir: config.output_dir.clone(), artifacts: Vec::new() };
    let p = &config.parameters;
    let prof = config.profile;
    let (resolved, checks) = match config.experiment {
        Experiment::IsingBounds => {
            let r = resolve(IsingBoundsParams::defaults(prof), p)?;
            (to_value(&r)?, ising_bounds(&r, &mut sink)?)
        }
        Experiment::IsingMpsSv => {
            let r = resolve(MpsSvParams::defaults(prof), p)?;
            (to_value(&r)?, ising_mps_sv(&r, &mut sink)?)
        }
        Experiment::FfMutualInfo => {
            let r = resolve(MutualInfoParams::defaults(prof), p)?;
            (to_value(&r)?, ff_mutual_info(&r, &mut sink)?)
        }
        Experiment::FfTrT2 => {
            let r = resolve(TrT2Params::defaults(prof), p)?;
            (to_value(&r)?, ff_tr_t2(&r, &mut sink)?)
        }
        Experiment::FfDivergence => {
            let r = resolve(DivergenceParams::defaults(prof), p)?;
            (to_value(&r)?, ff_divergence(&r, &mut sink)?)
        }
        Experiment::CftConsistency => {
            let r = resolve(CftParams::defaults(prof), p)?;
            (to_value(&r)?, cft_consistency(&r, &mut sink)?)
        }
        Experiment::HoloCrossover => {
            let r = resolve(HoloParams::defaults(prof), p)?;
            (to_value(&r)?, holo_crossover(&r, &mut sink)?)
        }
        Experiment::ProtocolTable => {
            let r = resolve(ProtocolParams::defaults(prof), p)?;
            (to_value(&r)?, protocol_table(&r, config.seed, &mut sink)?)
        }
    };
    let mut summary = Summary {
        experiment: config.experiment.name(),
        profile: prof,
        seed: config.seed,
        checks,
        artifacts: Vec::new(),
    };
    summary.artifacts = sink.artifacts.clone();
    sink.json("summary.json", &summary)?;
    let started_unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let manifest = serde_json::json!({
        "experiment": config.experiment.name(),
        "profile": prof,
        "seed": config.seed,
        "output_dir": config.output_dir,
        "parameters": resolved,
        "artifacts": sink.artifacts,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "started_unix": started_unix,
        "elapsed_s": clock.elapsed().as_secs_f64(),
    });
    std::fs::write(config.output_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let failed = summary.failed_assertions();
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::Assertion(failed))
    }
}

fn to_value<T: Serialize>(t: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(t)?)
}

fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(CliError::Config(format!("bad time grid {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

// ---------------------------------------------------------------- ising-bounds

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingBoundsParams {
    pub n_sites: usize,
    pub j: f64,
    pub h: f64,
    pub b_z: f64,
    pub temperature: f64,
    pub site_a: usize,
    pub site_b: usize,
    pub observable: String,
    pub t_max: f64,
    pub t_step: f64,
    pub slack_tol: f64,
    pub saturation_tol: f64,
}

impl IsingBoundsParams {
    pub fn defaults(p: Profile) -> Self {
        IsingBoundsParams {
            n_sites: if p == Profile::Figure { 11 } else { 8 },
            j: 1.0,
            h: -1.05,
            b_z: 0.5,
            temperature: 100.0,
            site_a: 0,
            site_b: 5,
            observable: "Y".into(),
            t_max: 10.0,
            t_step: 0.25,
            slack_tol: 1e-9,
            saturation_tol: 1e-8,
        }
    }
}

fn ising_bounds(r: &IsingBoundsParams, sink: &mut Sink) -> Result<Vec<Check>> {
    let params = IsingParams::new(r.n_sites, r.j, r.h, r.b_z);
    let spec = ThermalSpec { temperature: r.temperature };
    let obs = Pauli::parse(&r.observable).ok_or_else(|| CliError::Config(format!("unknown observable {}", r.observable)))?;
    let times = grid(0.0, r.t_max, r.t_step)?;
    let sweep = ih::TwoSiteSweep::new(&params, &spec, r.site_a, r.site_b).map_err(compute)?;
    let o = obs.matrix();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let tm = sweep.spacetime_matrix(t);
            let b = sd::commutator_bounds(&tm, &o, &o).map_err(compute)?;
            let gap = match sd::extract_saturating_operators(&tm) {
                Ok((oa, ob)) => sd::commutator_ratio(&tm, &oa, &ob) - b.th3_upper,
                Err(sd::SdmError::Degenerate(_)) => 0.0,
                Err(e) => return Err(compute(e)),
            };
            Ok(vec![t, b.commutator_abs, b.th3_upper, b.th1_upper, b.th2_lower, b.im_bound_lower, b.chain_slack(), gap])
        })
        .collect::<Result<_>>()?;
    sink.csv(
        "ising_bounds.csv",
        &["time [1/J]", "commutator", "mt_inf_norm", "imagitivity2", "lower_bound", "im_lower_bound", "chain_slack", "saturation_gap"],
        &rows,
    )?;
    let col_min = |k: usize| rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
    let col_max = |k: usize| rows.iter().map(|r| r[k].abs()).fold(0.0, f64::max);
    let slack = col_min(6);
    let sat = col_max(7);
    let mut checks = vec![
        Check::new("chain_slack_min", CheckKind::Assert, slack, slack >= -r.slack_tol, format!(">= -{:e}", r.slack_tol)),
        Check::new("saturation_gap_max", CheckKind::Assert, sat, sat <= r.saturation_tol, format!("<= {:e}", r.saturation_tol)),
    ];
    for (k, name) in [(1, "commutator"), (2, "mt_inf_norm"), (3, "imagitivity2"), (4, "lower_bound")] {
        let peak = col_max(k);
        let ok = (1e-4 / 3.0..=3e-4).contains(&peak);
        checks.push(Check::new(&format!("peak_{name}"), CheckKind::Report, peak, ok, "within a factor 3 of 1e-4"));
    }
    Ok(checks)
}

// ---------------------------------------------------------------- ising-mps-sv

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsSvParams {
    pub n_sites: usize,
    pub temperatures: Vec<f64>,
    pub dts: Vec<f64>,
    pub slots: usize,
    pub slot_site: usize,
    pub fit_floor: f64,
    pub r2_min: f64,
}

impl MpsSvParams {
    pub fn defaults(p: Profile) -> Self {
        MpsSvParams {
            n_sites: if p == Profile::Figure { 10 } else { 6 },
            temperatures: vec![1.0, 10.0, 100.0],
            dts: vec![1.0, 10.0, 100.0],
            slots: 4,
            slot_site: 0,
            fit_floor: 1e-14,
            r2_min: 0.9,
        }
    }
}

fn ising_mps_sv(r: &MpsSvParams, sink: &mut Sink) -> Result<Vec<Check>> {
    let params = IsingParams::chaotic(r.n_sites);
    let panels: Vec<(f64, f64)> = r.temperatures.iter().flat_map(|&t| r.dts.iter().map(move |&d| (t, d))).collect();
    let sv: Vec<Vec<f64>> = panels
        .par_iter()
        .map(|&(temp, dt)| {
            ih::multi_time_singular_values(&params, &ThermalSpec { temperature: temp }, r.slot_site, dt, r.slots).map_err(compute)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (&(temp, dt), s) in panels.iter().zip(&sv) {
        rows.extend(s.iter().enumerate().map(|(i, v)| vec![i as f64, *v, dt, temp]));
        let (slope, r2, used) = ih::decay_fit(s, r.fit_floor);
        let tag = format!("T{temp}_dt{dt}");
        checks.push(Check::new(&format!("slope_{tag}"), CheckKind::Report, slope, slope < 0.0, format!("< 0 over {used} values")));
        checks.push(Check::new(&format!("r2_{tag}"), CheckKind::Report, r2, r2 > r.r2_min, format!("> {}", r.r2_min)));
    }
    sink.csv("mps_singular_values.csv", &["index", "singular_value", "dt [1/J]", "temperature [J]"], &rows)?;
    Ok(checks)
}

// ---------------------------------------------------------------- ff-mutual-info

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutualInfoParams {
    pub length: usize,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_step: f64,
    pub compare_from: f64,
    pub compare_to: f64,
    pub window: f64,
    pub rel_tol: f64,
}

impl MutualInfoParams {
    pub fn defaults(p: Profile) -> Self {
        MutualInfoParams {
            length: 40,
            t_start: 1.0,
            t_stop: 80.0,
            t_step: if p == Profile::Figure { 0.5 } else { 1.0 },
            compare_from: 5.0,
            compare_to: 35.0,
            window: 4.0,
            rel_tol: 0.05,
        }
    }
}

/// CFT mutual information of two copies of `[0, L]` at time separation `t`.
pub fn cft_mutual_info(l: f64, t: f64) -> Result<C64> {
    let eps = CftKinematics::default_eps((0.0, l), (0.0, l), t);
    let k = CftKinematics::two_intervals((0.0, l), (0.0, l), t, eps, 1.0, 1.0).map_err(compute)?;
    cft::ff_mutual_info(&k).map_err(compute)
}

fn ff_mutual_info(r: &MutualInfoParams, sink: &mut Sink) -> Result<Vec<Check>> {
    let times = grid(r.t_start, r.t_stop, r.t_step)?;
    let l = r.length as f64;
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let lat = ff::mutual_info_scan(r.length, &[t]).map_err(compute)?[0].1;
            let c = cft_mutual_info(l, t)?;
            Ok(vec![t, lat.re, lat.im, c.re, c.im])
        })
        .collect::<Result<_>>()?;
    sink.csv("ff_mutual_info.csv", &["time [a]", "lattice_re", "lattice_im", "cft_re", "cft_im"], &rows)?;
    let worst = rows
        .iter()
        .filter(|row| row[0] >= r.compare_from && row[0] <= r.compare_to && (row[0] - l).abs() >= r.window)
        .map(|row| ((row[1] - row[3]) / row[3]).abs())
        .fold(0.0, f64::max);
    let abs = rows
        .iter()
        .filter(|row| row[0] >= r.compare_from && row[0] <= r.compare_to && (row[0] - l).abs() >= r.window)
        .map(|row| (row[1] - row[3]).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        Check::new("max_rel_error_re", CheckKind::Report, worst, worst <= r.rel_tol, format!("<= {}", r.rel_tol)),
        Check::new("max_abs_error_re", CheckKind::Report, abs, true, "diagnostic"),
    ])
}

// ---------------------------------------------------------------- ff-trT2

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrT2Params {
    pub a: [i64; 2],
    pub b: [i64; 2],
    pub t_start: f64,
    pub t_stop: f64,
    pub t_step: f64,
    pub window: f64,
    pub rel_tol: f64,
}

impl TrT2Params {
    pub fn defaults(p: Profile) -> Self {
        TrT2Params {
            a: [0, 50],
            b: [70, 120],
            t_start: 0.0,
            t_stop: 150.0,
            t_step: if p == Profile::Figure { 1.0 } else { 2.5 },
            window: 4.0,
            rel_tol: 0.1,
        }
    }
}

/// Torus-formula `Tr T^2` with the cutoff calibrated from the lattice purity of A.
pub fn cft_tr_t2(a: (f64, f64), b: (f64, f64), t: f64, eps_uv: f64) -> Result<C64> {
    let k = CftKinematics::two_intervals(a, b, t, CftKinematics::default_eps(a, b, t), 1.0, eps_uv).map_err(compute)?;
    cft::tr_T2_torus_ff(&k).map_err(compute)
}

/// `(t, lattice Tr T^2, CFT Tr T^2)` rows for two intervals.
pub fn tr_t2_comparison(a: (i64, i64), b: (i64, i64), times: &[f64]) -> Result<Vec<(f64, C64, C64)>> {
    let len_a = (a.1 - a.0) as usize;
    let purity = ff::tr_t2_from_c(&ff::interval_correlation(len_a).map_err(compute)?).map_err(compute)?.re;
    let eps_uv = cft::calibrate_eps(len_a as f64, purity);
    let af = (a.0 as f64, a.1 as f64);
    let bf = (b.0 as f64, b.1 as f64);
    times
        .par_iter()
        .map(|&t| {
            let lat = ff::tr_t2_scan(a, b, &[t]).map_err(compute)?[0].1;
            Ok((t, lat, cft_tr_t2(af, bf, t, eps_uv)?))
        })
        .collect()
}

fn ff_tr_t2(r: &TrT2Params, sink: &mut Sink) -> Result<Vec<Check>> {
    let (a, b) = ((r.a[0], r.a[1]), (r.b[0], r.b[1]));
    let times = grid(r.t_start, r.t_stop, r.t_step)?;
    let data = tr_t2_comparison(a, b, &times)?;
    let rows: Vec<Vec<f64>> = data.iter().map(|(t, l, c)| vec![*t, l.re, l.im, c.re, c.im]).collect();
    sink.csv("ff_trT2.csv", &["time [a]", "lattice_re", "lattice_im", "cft_re", "cft_im"], &rows)?;
    let cones = ff::light_cone_times(a, b);
    let worst = data
        .iter()
        .filter(|(t, _, _)| ff::away_from_light_cone(*t, &cones, r.window))
        .map(|(_, l, c)| (l - c).norm() / c.norm())
        .fold(0.0, f64::max);
    Ok(vec![Check::new("max_rel_error", CheckKind::Report, worst, worst <= r.rel_tol, format!("<= {}", r.rel_tol))])
}

// ---------------------------------------------------------------- ff-divergence

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceParams {
    pub scales: Vec<usize>,
    pub r2_min: f64,
}

impl DivergenceParams {
    pub fn defaults(p: Profile) -> Self {
        DivergenceParams { scales: if p == Profile::Figure { vec![1, 2, 4, 8, 16] } else { vec![1, 2, 4, 8] }, r2_min: 0.9 }
    }
}

fn ff_divergence(r: &DivergenceParams, sink: &mut Sink) -> Result<Vec<Check>> {
    if r.scales.len() < 3 {
        return Err(CliError::Config("need at least three scales".into()));
    }
    let pts: Vec<ff::DivergencePoint> = r
        .scales
        .par_iter()
        .map(|&s| ff::lattice_divergence_demo(&[s]).map(|v| v[0]).map_err(compute))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> =
        pts.iter().map(|p| vec![p.scale as f64, p.spacing, p.tr_t2.re, p.tr_t2.im, p.tr_ttd, p.ratio]).collect();
    sink.csv("ff_divergence.csv", &["scale", "spacing [1/scale]", "tr_t2_re", "tr_t2_im", "tr_ttd", "ratio"], &rows)?;
    let monotone = pts.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let inv: Vec<f64> = pts.iter().map(|p| 1.0 / p.spacing).collect();
    let logs: Vec<f64> = pts.iter().map(|p| p.ratio.ln()).collect();
    let (slope, _, r2) = ih::linear_fit(&inv, &logs);
    Ok(vec![
        Check::new("ratio_monotone", CheckKind::Assert, monotone as u8 as f64, monotone, "strictly increasing"),
        Check::new("log_ratio_slope", CheckKind::Assert, slope, slope > 0.0, "> 0"),
        Check::new("log_ratio_r2", CheckKind::Report, r2, r2 > r.r2_min, format!("> {}", r.r2_min)),
    ])
}

// ---------------------------------------------------------------- cft-consistency

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CftParams {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub times: Vec<f64>,
    pub eps_uv: f64,
    pub keystone_tol: f64,
    pub identity_tol: f64,
    pub roundtrip_tol: f64,
}

impl CftParams {
    pub fn defaults(_: Profile) -> Self {
        CftParams {
            a: [0.0, 50.0],
            b: [70.0, 120.0],
            times: (0..20).map(|i| 2.5 + 9.3 * i as f64).map(|t| (t * 10.0).round() / 10.0).collect(),
            eps_uv: 0.5,
            keystone_tol: 1e-9,
            identity_tol: 1e-12,
            roundtrip_tol: 1e-10,
        }
    }
}

/// Algebraic identities of the theta and eta functions at a few moduli; returns the largest residual.
pub fn theta_identity_residual() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for tau in [C64::new(0.0, 1.0), C64::new(0.3, 0.8), C64::new(-0.45, 1.3), C64::new(0.1, 2.0)] {
        // theta series take q = e^{i pi tau}, eta uses tau itself
        let q = cft::nome(0.5 * tau);
        let (t2, t3, t4) = (cft::theta2(q).map_err(compute)?, cft::theta3(q).map_err(compute)?, cft::theta4(q).map_err(compute)?);
        let eta = cft::dedekind_eta(tau).map_err(compute)?;
        let jacobi = (t3.powu(4) - t2.powu(4) - t4.powu(4)).norm() / t3.powu(4).norm();
        let triple = (t2 * t3 * t4 - 2.0 * eta.powu(3)).norm() / eta.powu(3).norm();
        worst = worst.max(jacobi).max(triple);
    }
    Ok(worst)
}

fn cft_consistency(r: &CftParams, sink: &mut Sink) -> Result<Vec<Check>> {
    let (a, b) = ((r.a[0], r.a[1]), (r.b[0], r.b[1]));
    let rows: Vec<Vec<f64>> = r
        .times
        .par_iter()
        .map(|&t| {
            let k = CftKinematics::two_intervals(a, b, t, CftKinematics::default_eps(a, b, t), 1.0, r.eps_uv).map_err(compute)?;
            let torus = cft::tr_T2_torus_ff(&k).map_err(compute)?;
            let direct = cft::ff_tsallis_two_intervals(&k, 2).map_err(compute)?;
            let m = cft::tracked_modulus(&k).map_err(compute)?;
            let (x, _) = cft::cross_ratio(&k).map_err(compute)?;
            let back = cft::x_from_tau(m.tau).map_err(compute)?;
            let rel = (torus - direct).norm() / direct.norm();
            Ok(vec![t, torus.re, torus.im, direct.re, direct.im, rel, m.tau.re, m.tau.im, m.tau_bar.re, m.tau_bar.im, (back - x).norm() / x.norm().max(1.0)])
        })
        .collect::<Result<_>>()?;
    sink.csv(
        "cft_consistency.csv",
        &["time", "torus_re", "torus_im", "two_interval_re", "two_interval_im", "rel_diff", "tau_re", "tau_im", "tau_bar_re", "tau_bar_im", "x_roundtrip_err"],
        &rows,
    )?;
    let keystone = rows.iter().map(|r| r[5]).fold(0.0, f64::max);
    let roundtrip_path = rows.iter().map(|r| r[10]).fold(0.0, f64::max);
    let ident = theta_identity_residual()?;
    let tau_half = (cft::tau_from_x(C64::new(0.5, 0.0)).map_err(compute)? - C64::new(0.0, 0.5)).norm();
    let mut rt: f64 = 0.0;
    for x in [0.05, 0.3, 0.5, 0.77, 0.95] {
        let x = C64::new(x, 0.0);
        rt = rt.max((cft::x_from_tau(cft::tau_from_x(x).map_err(compute)?).map_err(compute)? - x).norm());
    }
    Ok(vec![
        Check::new("torus_vs_two_interval", CheckKind::Assert, keystone, keystone <= r.keystone_tol, format!("<= {:e}", r.keystone_tol)),
        Check::new("theta_eta_identities", CheckKind::Assert, ident, ident <= r.identity_tol, format!("<= {:e}", r.identity_tol)),
        Check::new("tau_at_half", CheckKind::Assert, tau_half, tau_half <= r.identity_tol, format!("<= {:e}", r.identity_tol)),
        Check::new("x_tau_roundtrip", CheckKind::Assert, rt, rt <= r.roundtrip_tol, format!("<= {:e}", r.roundtrip_tol)),
        Check::new("x_tau_roundtrip_path", CheckKind::Report, roundtrip_path, roundtrip_path <= 1e-6, "<= 1e-6 along the grid"),
    ])
}

// ---------------------------------------------------------------- holo-crossover

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoloParams {
    pub length: f64,
    pub c: f64,
    pub eps_uv: f64,
    pub dt_step: f64,
    pub switch_tol: f64,
}

impl HoloParams {
    pub fn defaults(_: Profile) -> Self {
        HoloParams { length: 1.0, c: 1.0, eps_uv: 1e-3, dt_step: 0.01, switch_tol: 1e-9 }
    }
}

fn holo_crossover(r: &HoloParams, sink: &mut Sink) -> Result<Vec<Check>> {
    let l = r.length;
    let times = grid(0.0, 2.0 * l, r.dt_step * l)?;
    let rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&dt| {
            let s = cft::holographic_two_interval(l, dt, r.c, r.eps_uv).map_err(compute)?;
            let g = s.candidates[0].1;
            let gp = s.candidates[1].1;
            Ok(vec![dt, g.re, gp.re, gp.im, (s.selected == cft::Geodesic::GammaPrime) as u8 as f64])
        })
        .collect::<Result<_>>()?;
    sink.csv("holo_crossover.csv", &["dt [L]", "gamma_re", "gamma_prime_re", "gamma_prime_im", "selected_gamma_prime"], &rows)?;
    let sw = cft::holographic_switch(l, r.c, r.eps_uv, 0.1 * r.switch_tol * l).map_err(compute)?;
    let err = (sw - 2f64.sqrt() * l).abs();
    sink.json("holo_switch.json", &serde_json::json!({ "switch_dt": sw, "expected": 2f64.sqrt() * l, "abs_error": err }))?;
    Ok(vec![Check::new("switch_error", CheckKind::Assert, err, err <= r.switch_tol * l, format!("<= {:e} L", r.switch_tol))])
}

// ---------------------------------------------------------------- protocol-table

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub shots: u64,
    pub sigma: f64,
    pub exact_tol: f64,
}

impl ProtocolParams {
    pub fn defaults(_: Profile) -> Self {
        ProtocolParams { shots: 40_000, sigma: 4.0, exact_tol: 1e-10 }
    }
}

fn protocol_table(r: &ProtocolParams, seed: u64, sink: &mut Sink) -> Result<Vec<Check>> {
    let exact = cs::protocol_table(None, seed).map_err(compute)?;
    let sampled = cs::protocol_table(Some(r.shots), seed).map_err(compute)?;
    sink.json("protocol_table.json", &serde_json::json!({ "shots": r.shots, "seed": seed, "exact": exact, "sampled": sampled }))?;
    let mut checks = Vec::new();
    for (e, s) in exact.iter().zip(&sampled) {
        let de = (e.simulated - e.theory).abs();
        checks.push(Check::new(&format!("exact {}", e.quantity), CheckKind::Assert, de, de <= r.exact_tol, format!("<= {:e}", r.exact_tol)));
        let ds = (s.simulated - s.theory).abs();
        let lim = r.sigma * s.stderr;
        checks.push(Check::new(&format!("sampled {}", s.quantity), CheckKind::Assert, ds, ds <= lim.max(1e-12), format!("<= {} stderr", r.sigma)));
    }
    Ok(checks)
}

/// Sizes the global rayon pool from the thread-count variable, if set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}
