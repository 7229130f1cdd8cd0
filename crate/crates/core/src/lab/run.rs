//! Experiment dispatch, artifact emission and the run manifest.
//!
//! Every experiment produces `<kind>.csv`, usually a `<kind>.dat` plot table,
//! and `manifest.json` listing each file with its SHA-256. Nothing in the
//! output depends on wall-clock time or thread count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{ExperimentConfig, ExperimentKind};
use super::suite::oracle_suite;
use super::synth::{synth_complex, synth_measure};
use crate::calculus::{additive_energy_grid, doubling_constant, growth_statistic, ruzsa_distance, GrowthReport};
use crate::complex::complex_decay_sup;
use crate::error::LabError;
use crate::fourier::{decay_sup, schedule_exponents, sigma_decrement_experiment, sigma_table, DecayReport, MAX_POWER};
use crate::grid::scale_inv;
use crate::measure::{flattening_integral_with, projective_nonconcentration, FlatteningOptions, GridMeasure};

/// A module error tagged with the stage that raised it.
#[derive(Debug, Error)]
#[error("stage '{stage}' failed: {source}")]
pub struct RunError {
    pub stage: &'static str,
    #[source]
    pub source: LabError,
}

impl RunError {
    /// Process exit status: 2 for configuration, 3 for budget, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.source {
            LabError::Config(_) => 2,
            LabError::Budget { .. } => 3,
            _ => 1,
        }
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for crate::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError { stage, source })
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Headline numbers, also written to the manifest.
    pub summary: Map<String, Value>,
    /// False only when a checking experiment found a violation.
    pub pass: bool,
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    config_sha256: String,
    seed: Option<u64>,
    pass: bool,
    summary: &'a Map<String, Value>,
    files: Vec<FileEntry>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub pass: bool,
    pub summary: Map<String, Value>,
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical config text, ignoring the output location.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.out = None;
    sha_hex(c.to_json().as_bytes())
}

fn sci(x: f64) -> String {
    format!("{x:.10e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

struct Builder {
    kind: &'static str,
    artifacts: Vec<Artifact>,
    summary: Map<String, Value>,
}

impl Builder {
    fn text(&mut self, ext: &str, lines: Vec<String>) {
        let mut s = lines.join("\n");
        s.push('\n');
        self.artifacts.push(Artifact { name: format!("{}.{ext}", self.kind), bytes: s.into_bytes() });
    }

    fn named(&mut self, name: &str, lines: Vec<String>) {
        let mut s = lines.join("\n");
        s.push('\n');
        self.artifacts.push(Artifact { name: name.to_string(), bytes: s.into_bytes() });
    }

    fn put(&mut self, key: &str, v: Value) {
        self.summary.insert(key.to_string(), v);
    }
}

fn real_measure(cfg: &ExperimentConfig) -> Result<GridMeasure, RunError> {
    synth_measure(cfg.measure().at("config")?).at("synth")
}

fn second_or_first(cfg: &ExperimentConfig, first: &GridMeasure) -> Result<GridMeasure, RunError> {
    match &cfg.second {
        Some(s) => synth_measure(s).at("synth"),
        None => Ok(first.clone()),
    }
}

fn decay_rows(b: &mut Builder, reports: &[DecayReport]) {
    let mut csv = vec![DecayReport::csv_header().to_string()];
    csv.extend(reports.iter().map(DecayReport::csv_row));
    b.text("csv", csv);
    b.text("dat", reports.iter().map(|r| format!("{} {}", r.k, sci(r.sup))).collect());
    b.put("sup", json!(reports.iter().map(|r| r.sup).collect::<Vec<_>>()));
    b.put("eps1_hat", json!(reports.iter().map(|r| r.eps1_hat).collect::<Vec<_>>()));
}

/// Run in memory. `cfg` must already carry any command-line overrides.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate().at("config")?;
    let mut b = Builder { kind: cfg.kind.name(), artifacts: Vec::new(), summary: Map::new() };
    let mut pass = true;
    match cfg.kind {
        ExperimentKind::Nonconc => {
            let mu = real_measure(cfg)?;
            let rhos = cfg.scales.clone().unwrap_or_else(|| {
                (2..=mu.m().saturating_sub(2).max(2)).map(|j| 1.0 / scale_inv(j)).collect()
            });
            let rep = projective_nonconcentration(&mu, &rhos, cfg.directions.unwrap_or(64)).at("nonconc")?;
            let mut csv = vec!["rho,sup_mass,direction,left,width".to_string()];
            csv.extend(rep.csv_rows());
            b.text("csv", csv);
            b.text(
                "dat",
                rep.scales.iter().zip(&rep.sup_mass).map(|(r, s)| format!("{} {}", sci(r.ln()), sci(s.ln()))).collect(),
            );
            b.put("kappa_hat", json!(rep.kappa_hat));
            b.put("eps_hat", json!(rep.eps_hat));
            b.put("net_angle", json!(rep.net_angle));
            b.put("direction_count", json!(rep.direction_count));
        }
        ExperimentKind::Energy => {
            let mu = real_measure(cfg)?;
            let nu = second_or_first(cfg, &mu)?;
            let (a, bset) = (mu.support(), nu.support());
            let e = additive_energy_grid(&a, &bset).at("energy")?;
            let dc = doubling_constant(&a).at("doubling")?;
            let rd = ruzsa_distance(&a, &bset).at("ruzsa")?;
            b.text(
                "csv",
                vec![
                    "n_A,n_B,l2,pair_count,doubling_A,ruzsa_distance".into(),
                    format!(
                        "{},{},{},{},{},{}",
                        a.len(),
                        bset.len(),
                        sci(e.l2),
                        e.pair_count.map(|p| p.to_string()).unwrap_or_default(),
                        sci(dc),
                        sci(rd)
                    ),
                ],
            );
            b.put("l2", json!(e.l2));
            b.put("doubling", json!(dc));
            b.put("ruzsa_distance", json!(rd));
        }
        ExperimentKind::Growth => {
            let mu = real_measure(cfg)?;
            let x = mu.support();
            let a = second_or_first(cfg, &mu)?.support();
            let seed = cfg.seed().at("config")?;
            let rep = growth_statistic(&a, &x, cfg.samples.unwrap_or(32), seed).at("growth")?;
            b.text("csv", vec![GrowthReport::csv_header(x.n()), rep.csv_row()]);
            b.named(
                "growth_samples.csv",
                std::iter::once("a,n_dilate_sum".to_string())
                    .chain(rep.samples.iter().map(|(p, c)| {
                        let s: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
                        format!("{},{c}", s.join(" "))
                    }))
                    .collect(),
            );
            b.put("ratio", json!(rep.ratio));
            b.put("eps_hat", json!(rep.eps_hat));
        }
        ExperimentKind::Flatten => {
            let mu = real_measure(cfg)?;
            let nu = if cfg.symmetrize.unwrap_or(true) { mu.symmetric_part() } else { mu };
            let opts = FlatteningOptions {
                sample_count: cfg.samples.unwrap_or(64),
                seed: cfg.seed().at("config")?,
                ..Default::default()
            };
            let mut csv = vec![
                "delta1,lhs,lhs_stderr,rhs,ratio,eps_hat,atom_ratio,eps_hat_normalized,min_abs_det,small_det_mass,freq_side,space_over_freq"
                    .to_string(),
            ];
            let mut dat = Vec::new();
            let mut eps = Vec::new();
            for &d1 in cfg.scales.as_deref().unwrap_or_default() {
                let r = flattening_integral_with(&nu, d1, &opts).at("flatten")?;
                csv.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    sci(r.delta1),
                    sci(r.lhs),
                    sci(r.lhs_stderr),
                    sci(r.rhs),
                    sci(r.ratio),
                    sci(r.eps_hat),
                    sci(r.atom_ratio),
                    sci(r.eps_hat_normalized),
                    sci(r.min_abs_det),
                    sci(r.small_det_mass),
                    opt(r.freq_side),
                    opt(r.space_over_freq)
                ));
                dat.push(format!("{} {}", sci(-r.delta1.log2()), sci(r.eps_hat)));
                eps.push(r.eps_hat);
            }
            b.text("csv", csv);
            b.text("dat", dat);
            b.put("eps_hat", json!(eps));
        }
        ExperimentKind::Decay => {
            let mu = real_measure(cfg)?;
            let delta = 1.0 / scale_inv(cfg.delta_m().at("config")?);
            let strict = !cfg.relaxed.unwrap_or(false);
            let reports = cfg
                .ks
                .clone()
                .unwrap_or_else(|| vec![1, 2, 3, 4])
                .into_iter()
                .map(|k| decay_sup(&mu, k, delta, strict))
                .collect::<crate::Result<Vec<_>>>()
                .at("decay")?;
            decay_rows(&mut b, &reports);
        }
        ExperimentKind::ComplexDecay => {
            let mu = synth_complex(cfg.measure().at("config")?).at("synth")?;
            let delta = 1.0 / scale_inv(cfg.delta_m().at("config")?);
            let reports = cfg
                .ks
                .clone()
                .unwrap_or_else(|| vec![1, 2, 3, 4])
                .into_iter()
                .map(|k| complex_decay_sup(&mu, k, delta))
                .collect::<crate::Result<Vec<_>>>()
                .at("complex-decay")?;
            decay_rows(&mut b, &reports);
        }
        ExperimentKind::Sigma => {
            let mu = real_measure(cfg)?;
            let delta = 1.0 / scale_inv(cfg.delta_m().at("config")?);
            let ks = cfg.ks.clone().unwrap_or_else(|| vec![1, 2]);
            let rs = cfg.rs.clone().unwrap_or_else(|| vec![1, 2]);
            let table = sigma_table(&mu, &ks, &rs, delta).at("sigma")?;
            b.text("csv", table.csv().lines().map(String::from).collect());
            b.text("dat", table.rows.iter().map(|(k, r, s)| format!("{k} {r} {}", sci(*s))).collect());
            b.put("sigma", json!(table.rows.iter().map(|r| r.2).collect::<Vec<_>>()));
            if cfg.decrement.unwrap_or(false) {
                let mut csv = vec!["k,r,r_prime,sigma_before,sigma_after,decrement,sigma_kr".to_string()];
                let mut decs = Vec::new();
                for &k in ks.iter().filter(|&&k| 2 * k <= MAX_POWER) {
                    for &r in &rs {
                        let d = sigma_decrement_experiment(&mu, k, r, delta).at("sigma-decrement")?;
                        csv.push(format!(
                            "{},{},{},{},{},{},{}",
                            d.k,
                            d.r,
                            d.r_prime,
                            sci(d.sigma_before),
                            sci(d.sigma_after),
                            sci(d.decrement),
                            sci(d.sigma_kr)
                        ));
                        decs.push(d.decrement);
                    }
                }
                b.named("sigma_decrement.csv", csv);
                b.put("decrement", json!(decs));
            }
        }
        ExperimentKind::Schedule => {
            let input = cfg.schedule.as_ref().expect("validated").input().at("config")?;
            let s = schedule_exponents(&input).at("schedule")?;
            let chain: Vec<String> = s.r_chain.iter().map(u64::to_string).collect();
            let rows = vec![
                "quantity,value".to_string(),
                format!("kappa0,{}", s.kappa0),
                format!("kappa1,{}", s.kappa1),
                format!("eps,{}", s.eps),
                format!("r_chain,{}", chain.join(" ")),
                format!("eps1,{}", s.eps1),
                format!("eps1_floor,{}", s.eps1_floor),
                format!("eps3,{}", s.eps3),
            ];
            b.text("csv", rows);
            b.put("kappa1", json!(s.kappa1.to_string()));
            b.put("eps3", json!(s.eps3.to_string()));
            b.put("r_chain", json!(s.r_chain));
        }
        ExperimentKind::OracleSuite => {
            let oc = cfg.oracle.clone().unwrap_or_default();
            let tallies = oracle_suite(&oc, cfg.seed().at("config")?).at("oracle-suite")?;
            let mut csv = vec!["check,instances,failures,pass".to_string()];
            for t in &tallies {
                csv.push(format!("{},{},{},{}", t.check, t.instances, t.failures, t.pass()));
                b.put(t.check, json!(t.pass()));
            }
            pass = tallies.iter().all(|t| t.pass());
            b.text("csv", csv);
        }
    }
    Ok(RunOutput { artifacts: b.artifacts, summary: b.summary, pass })
}

/// Build the manifest bytes for a finished run.
pub fn manifest(cfg: &ExperimentConfig, out: &RunOutput) -> Vec<u8> {
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.name(),
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        pass: out.pass,
        summary: &out.summary,
        files: out
            .artifacts
            .iter()
            .map(|a| FileEntry { name: a.name.clone(), bytes: a.bytes.len(), sha256: sha_hex(&a.bytes) })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s.into_bytes()
}

/// Run and write artifacts plus `manifest.json` into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<RunOutcome, RunError> {
    let out = execute(cfg)?;
    let dir = out_dir.as_ref();
    let io = |e: std::io::Error| RunError { stage: "write", source: LabError::Io(e) };
    fs::create_dir_all(dir).map_err(io)?;
    let mut files = Vec::new();
    for a in &out.artifacts {
        let p = dir.join(&a.name);
        fs::write(&p, &a.bytes).map_err(io)?;
        files.push(p);
    }
    let p = dir.join("manifest.json");
    fs::write(&p, manifest(cfg, &out)).map_err(io)?;
    files.push(p);
    Ok(RunOutcome { files, pass: out.pass, summary: out.summary })
}
