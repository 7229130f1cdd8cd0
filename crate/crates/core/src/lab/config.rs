//! Experiment configuration documents (JSON, schema version 1).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "kind": "decay",
//!   "measure": { "n": 1, "m": 16, "family": "cantor", "ratio": 0.3333333333333333, "depth": 8 },
//!   "delta_m": 12,
//!   "ks": [1, 2, 3, 4]
//! }
//! ```

use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::synth::MeasureSpec;
use crate::error::{LabError, Result};
use crate::fourier::{ScheduleInput, MAX_POWER};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Nonconc,
    Energy,
    Growth,
    Flatten,
    Decay,
    Sigma,
    Schedule,
    ComplexDecay,
    OracleSuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Nonconc,
        Self::Energy,
        Self::Growth,
        Self::Flatten,
        Self::Decay,
        Self::Sigma,
        Self::Schedule,
        Self::ComplexDecay,
        Self::OracleSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nonconc => "nonconc",
            Self::Energy => "energy",
            Self::Growth => "growth",
            Self::Flatten => "flatten",
            Self::Decay => "decay",
            Self::Sigma => "sigma",
            Self::Schedule => "schedule",
            Self::ComplexDecay => "complex-decay",
            Self::OracleSuite => "oracle-suite",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Experiments whose output depends on a random stream.
    pub fn is_sampled(self) -> bool {
        matches!(self, Self::Growth | Self::Flatten | Self::OracleSuite)
    }

    fn needs_measure(self) -> bool {
        !matches!(self, Self::Schedule | Self::OracleSuite)
    }
}

/// Exponent inputs written as exact fractions, e.g. `"2/5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kappa0: String,
    pub n: i64,
    pub r: u64,
    pub eps_measured: String,
    pub eps2: String,
    pub k: i64,
    #[serde(default = "default_chain")]
    pub chain_len: usize,
}

fn default_chain() -> usize {
    3
}

fn ratio(field: &str, s: &str) -> Result<Ratio<i64>> {
    s.trim().parse().map_err(|_| LabError::Config(format!("{field}: '{s}' is not a fraction like 2/5")))
}

impl ScheduleConfig {
    pub fn input(&self) -> Result<ScheduleInput> {
        Ok(ScheduleInput {
            kappa0: ratio("kappa0", &self.kappa0)?,
            n: self.n,
            r: self.r,
            eps_measured: ratio("eps_measured", &self.eps_measured)?,
            eps2: ratio("eps2", &self.eps2)?,
            k: self.k,
            chain_len: self.chain_len,
        })
    }
}

/// Random lattice instances for the discrete inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub instances: usize,
    /// Largest set size drawn.
    pub max_size: usize,
    /// Coordinates are drawn from `[-spread, spread]`.
    pub spread: i64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { instances: 100, max_size: 32, spread: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    /// Second measure: `B` for energy, the dilation set `A` for growth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<MeasureSpec>,
    /// `ρ` values for nonconc, `δ₁` values for flatten.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    /// Scale `δ = 2^-delta_m` of decay and σ experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Flatten: use `½(μ + μ⁻)` (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetrize: Option<bool>,
    /// Decay: allow supports outside `[1/2, 1]ⁿ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<bool>,
    /// Sigma: also run the decrement for every `(k, r)` with `2k` in range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decrement: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            kind,
            measure: None,
            second: None,
            scales: None,
            delta_m: None,
            ks: None,
            rs: None,
            directions: None,
            samples: None,
            seed: None,
            symmetrize: None,
            relaxed: None,
            decrement: None,
            schedule: None,
            oracle: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(format!("parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn measure(&self) -> Result<&MeasureSpec> {
        self.measure.as_ref().ok_or_else(|| missing(self.kind, "measure"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| missing(self.kind, "seed"))
    }

    pub fn delta_m(&self) -> Result<u32> {
        self.delta_m.ok_or_else(|| missing(self.kind, "delta_m"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(LabError::Config(format!(
                "schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.kind.needs_measure() {
            let spec = self.measure()?;
            if spec.is_complex() != (self.kind == ExperimentKind::ComplexDecay) {
                return Err(LabError::Config(format!(
                    "{} takes {} measure",
                    self.kind.name(),
                    if self.kind == ExperimentKind::ComplexDecay { "a complex-cantor" } else { "a real" }
                )));
            }
        }
        if self.kind.is_sampled() {
            self.seed()?;
        }
        if let Some(s) = &self.scales {
            if s.is_empty() || s.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(LabError::Config("scales must be a nonempty list of positive numbers".into()));
            }
        }
        if let Some(ks) = &self.ks {
            if ks.is_empty() || ks.iter().any(|&k| k == 0 || k > MAX_POWER) {
                return Err(LabError::Config(format!("ks must lie in 1..={MAX_POWER}")));
            }
        }
        if let Some(rs) = &self.rs {
            if rs.is_empty() || rs.contains(&0) {
                return Err(LabError::Config("rs must be positive".into()));
            }
        }
        match self.kind {
            ExperimentKind::Decay | ExperimentKind::Sigma | ExperimentKind::ComplexDecay => {
                self.delta_m()?;
            }
            ExperimentKind::Flatten => {
                if self.scales.is_none() {
                    return Err(missing(self.kind, "scales"));
                }
            }
            ExperimentKind::Schedule => {
                self.schedule.as_ref().ok_or_else(|| missing(self.kind, "schedule"))?.input()?;
            }
            _ => {}
        }
        Ok(())
    }
}

fn missing(kind: ExperimentKind, field: &str) -> LabError {
    LabError::Config(format!("{} experiment requires '{field}'", kind.name()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"{
            "schema": 1,
            "kind": "decay",
            "measure": { "n": 1, "m": 16, "family": "cantor", "ratio": 0.3333333333333333, "depth": 8 },
            "delta_m": 12,
            "ks": [1, 2, 3, 4]
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Decay);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn sampled_kinds_need_a_seed() {
        let text = r#"{"schema": 1, "kind": "oracle-suite"}"#;
        let e = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(e.contains("seed"), "{e}");
        assert!(ExperimentConfig::from_json(r#"{"schema": 1, "kind": "oracle-suite", "seed": 1}"#).is_ok());
    }

    #[test]
    fn malformed_documents_are_config_errors() {
        for text in [
            "{",
            r#"{"schema": 2, "kind": "decay"}"#,
            r#"{"schema": 1, "kind": "nope"}"#,
            r#"{"schema": 1, "kind": "schedule", "extra": 1}"#,
            r#"{"schema": 1, "kind": "decay", "measure": {"n": 1, "m": 8, "family": "uniform"}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(LabError::Config(_))), "{text}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::parse(k.name()), Some(k));
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
    }
}
