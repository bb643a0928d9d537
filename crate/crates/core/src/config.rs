//! Run configuration: TOML with one section per stage.
//!
//! ```toml
//! seed = 7
//!
//! [potential]
//! family = "square_well"
//! c = 1.0
//! radius = 1.0
//!
//! [evolution]
//! multiplier = "schrod"
//! t_min = 1e3
//! t_max = 1e7
//! ```
//!
//! Every section is optional except `potential`. Unknown keys are rejected, and a run
//! writes the fully resolved configuration next to its results so that it can be
//! re-ingested unchanged.

use serde::{Deserialize, Serialize};

use crate::decayfit::{Basis, Weight};
use crate::evolution::{default_pairs, log_times, Branch, Density, Multiplier, MultiplierKind, Pair, PropagatorRequest};
use crate::potentials::{Family, PotentialSpec};
use crate::spectral::SpectralConfig;
use crate::{Error, Result};

/// Version of the CSV columns and JSON field names written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    /// Seed of every Monte-Carlo and random-sample check.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker cap; 0 means all available cores.
    #[serde(default)]
    pub jobs: usize,
    /// Output directory.
    #[serde(default = "default_out")]
    pub out: String,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub tune: TuneConfig,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub multiplier: MultiplierKind,
    /// Klein-Gordon mass; ignored by the other multipliers.
    pub mass: f64,
    pub lambda1: f64,
    pub lambda_min: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Log-spaced samples between `t_min` and `t_max`.
    pub t_count: usize,
    /// Integrate only the `k`-th Born term.
    pub born: Option<usize>,
    pub branch: Branch,
    pub profile: bool,
    pub pairs: Vec<Pair>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            multiplier: MultiplierKind::Schrod,
            mass: 1.0,
            lambda1: 0.25,
            lambda_min: None,
            t_min: 1e3,
            t_max: 1e7,
            t_count: 24,
            born: None,
            branch: Branch::Both,
            profile: false,
            pairs: default_pairs(),
        }
    }
}

impl EvolutionConfig {
    pub fn multiplier(&self) -> Result<Multiplier> {
        Multiplier::new(self.multiplier, self.mass)
    }

    pub fn request(&self) -> Result<PropagatorRequest> {
        let mut req = PropagatorRequest::new(log_times(self.t_min, self.t_max, self.t_count), self.pairs.clone(), self.multiplier()?);
        req.lambda1 = self.lambda1;
        req.lambda_min = self.lambda_min;
        req.branch = self.branch;
        req.profile = self.profile;
        req.density = match self.born {
            Some(k) => Density::Born(k),
            None => Density::Full,
        };
        Ok(req)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Basis to fit; the classification's predicted menu when absent.
    pub basis: Option<Vec<Basis>>,
    pub weight: Weight,
    pub complex: bool,
    /// Series to fit; `<out>/series.json` when absent.
    pub input: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub channels: Vec<usize>,
    /// Scan of the coupling scale for the first sign change of the defect.
    pub scan_from: f64,
    pub scan_step: f64,
    pub scan_to: f64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig { channels: vec![0], scan_from: 0.5, scan_step: 0.5, scan_to: 400.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// A single lemma id; every case when absent.
    pub lemma: Option<String>,
    pub samples: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { lemma: None, samples: 10_000_000 }
    }
}

impl RunConfig {
    /// Default run on a square well of coupling `c` and unit radius.
    pub fn square_well(c: f64) -> Self {
        RunConfig {
            schema: SCHEMA_VERSION,
            seed: default_seed(),
            jobs: 0,
            out: default_out(),
            potential: PotentialSpec::square_well(c, 1.0),
            spectral: SpectralConfig::default(),
            evolution: EvolutionConfig::default(),
            fit: FitConfig::default(),
            tune: TuneConfig::default(),
            verify: VerifySection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema));
        }
        if self.seed > i64::MAX as u64 {
            return bad("seed must be below 2^63 (TOML integers are signed)".into());
        }
        let finite_positive = |x: f64| x.is_finite() && x > 0.0;
        match &self.potential.family {
            Family::SquareWell { c, radius } if !(c.is_finite() && finite_positive(*radius)) => {
                return bad("square well needs a finite coupling and a positive radius".into())
            }
            Family::Gaussian { c, width } if !(c.is_finite() && finite_positive(*width)) => {
                return bad("gaussian needs a finite coupling and a positive width".into())
            }
            Family::TwoWell { c1, c2, r1, r2 } if !(c1.is_finite() && c2.is_finite() && finite_positive(*r1) && r2 > r1) => {
                return bad("two-well needs finite couplings and 0 < r1 < r2".into())
            }
            Family::Sampled { r, v } if r.len() != v.len() || r.len() < 2 => {
                return bad("sampled potential needs matching columns with >= 2 rows".into())
            }
            _ => {}
        }
        let s = &self.spectral;
        if s.n == 0 || s.order == 0 || !(s.tol > 0.0) || !finite_positive(s.r_box) {
            return bad("spectral: n, order, tol and r_box must be positive".into());
        }
        let e = &self.evolution;
        if !(finite_positive(e.t_min) && e.t_max > e.t_min && e.t_max.is_finite()) || e.t_count < 2 {
            return bad("evolution: need 0 < t_min < t_max and t_count >= 2".into());
        }
        if !finite_positive(e.lambda1) || e.lambda_min.is_some_and(|l| !(l > 0.0 && l < e.lambda1)) {
            return bad("evolution: need 0 < lambda_min < lambda1".into());
        }
        if e.pairs.is_empty() {
            return bad("evolution: at least one pair".into());
        }
        for p in &e.pairs {
            if !(finite_positive(p.r1) && finite_positive(p.r2) && p.distance() > 1e-12) {
                return bad(format!("evolution: invalid pair {p:?}"));
            }
        }
        e.multiplier()?;
        let t = &self.tune;
        if !(t.scan_step > 0.0 && t.scan_to > t.scan_from && t.scan_from > 0.0) {
            return bad("tune: need 0 < scan_from < scan_to and scan_step > 0".into());
        }
        if self.verify.samples == 0 {
            return bad("verify: samples must be positive".into());
        }
        Ok(())
    }

    /// Worker count after resolving 0 to the machine's parallelism.
    pub fn workers(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_toml("[potential]\nfamily = \"square_well\"\nc = 1.0\nradius = 1.0\n").unwrap();
        assert_eq!(c, RunConfig::square_well(1.0));
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::square_well(5.5);
        c.evolution.multiplier = MultiplierKind::KgSin;
        c.evolution.born = Some(1);
        c.fit.basis = Some(vec![Basis::InvLog, Basis::InvT]);
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = "[potential]\nfamily = \"square_well\"\nc = 1.0\nradius = 1.0\n";
        assert!(RunConfig::from_toml(&format!("{base}[evolution]\nt_mni = 3.0\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}[evolution]\nt_min = 10.0\nt_max = 1.0\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}[evolution]\nmultiplier = \"kg-cos\"\nmass = 0.0\n")).is_err());
        assert!(RunConfig::from_toml("seed = 1\n").is_err());
    }
}
