//! Command-line front end: classify, tune, evolve, fit, verify and report.
//!
//! Each command writes its artifacts and `config.resolved.toml` into the output
//! directory and prints a one-line JSON summary. Errors are printed to stderr as
//! `{"error": {"kind": ..., "message": ...}}` with exit status 1.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::decayfit::{self, expected_models, Basis, FitResult, Orthogonality, RateModel};
use crate::evolution::{born_term, stone_evolve, Density, Medium, MultiplierKind, TimeSeries};
use crate::oscint::{self, LemmaReport, VerifyConfig};
use crate::potentials::{default_matching_radius, shoot_defect, tune_threshold, Family};
use crate::spectral::{Classification, ClassificationReport, Problem};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "threshold-lab", version, about = "Threshold resonances and dispersive decay of -Δ+V on R^4")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; a unit square well of coupling 1 when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker cap.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Channel for `tune`.
    #[arg(long, global = true)]
    pub channel: Option<usize>,
    /// Lemma id for `verify`.
    #[arg(long, global = true)]
    pub lemma: Option<String>,
    /// schrod, kgcos, kgsin, wavecos or wavesin.
    #[arg(long, global = true)]
    pub multiplier: Option<String>,
    /// Klein-Gordon mass.
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Series to fit (JSON or CSV).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Zero-energy classification.
    Classify,
    /// Coupling at which a channel reaches threshold.
    Tune,
    /// Propagator time series by the Stone formula.
    Evolve,
    /// Fit a series against the predicted rate menu.
    Fit,
    /// Oscillatory and spatial integral checks.
    Verify,
    /// Classification, evolution and fit bound into a markdown summary.
    Report,
}

impl Cli {
    /// Resolve the configuration: file (or default) plus command-line overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_toml(&fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?)?,
            None => RunConfig::square_well(1.0),
        };
        if let Some(o) = &self.out {
            cfg.out = o.to_string_lossy().into_owned();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(c) = self.channel {
            cfg.tune.channels = vec![c];
        }
        if let Some(l) = &self.lemma {
            cfg.verify.lemma = Some(l.clone());
        }
        if let Some(m) = &self.multiplier {
            cfg.evolution.multiplier = m.parse()?;
        }
        if let Some(m) = self.mass {
            cfg.evolution.mass = m;
        }
        if let Some(i) = &self.input {
            cfg.fit.input = Some(i.to_string_lossy().into_owned());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.resolve().and_then(|cfg| run(cli.command, &cfg)) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}

/// `{"error": {"kind": <variant>, "message": <display>}}`.
pub fn error_json(e: &Error) -> String {
    let debug = format!("{e:?}");
    let kind: String = debug.chars().take_while(|c| c.is_alphanumeric()).collect();
    json!({ "error": { "kind": kind, "message": e.to_string() } }).to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Run one command; returns the JSON summary line.
pub fn run(command: Command, cfg: &RunConfig) -> Result<String> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir)?;
    write(&dir, "config.resolved.toml", &cfg.to_toml()?)?;
    let summary = match command {
        Command::Classify => {
            let r = classify(cfg)?;
            write(&dir, "classification.json", &pretty(&r)?)?;
            json!({ "command": "classify", "verdict": r.verdict })
        }
        Command::Tune => {
            let rows = tune(cfg)?;
            write(&dir, "tune.json", &pretty(&rows)?)?;
            let mut csv = String::from("ell,c_star,scale,defect,iterations\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{},{:e},{}", r.ell, r.c_star, r.scale, r.defect, r.iterations);
            }
            write(&dir, "tune.csv", &csv)?;
            json!({ "command": "tune", "c_star": rows.iter().map(|r| r.c_star).collect::<Vec<_>>() })
        }
        Command::Evolve => {
            let (_, ts) = evolve(cfg)?;
            write_series(&dir, &ts)?;
            json!({ "command": "evolve", "rows": ts.rows.len(), "flagged": ts.flagged.len(), "classification": ts.classification })
        }
        Command::Fit => {
            let input = cfg.fit.input.clone().map(PathBuf::from).unwrap_or_else(|| dir.join("series.json"));
            let ts = read_series(&input)?;
            let report = fit(cfg, &ts, None)?;
            write(&dir, "fit.json", &pretty(&report)?)?;
            json!({ "command": "fit", "pairs": report.fits.len(), "dominant": report.fits.iter().map(|f| f.dominant).collect::<Vec<_>>() })
        }
        Command::Verify => {
            let rows = verify(cfg)?;
            write(&dir, "lemmas.json", &pretty(&rows)?)?;
            write(&dir, "lemmas.csv", &oscint::to_csv(&rows))?;
            let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
            json!({ "command": "verify", "cases": rows.len(), "pass": failed.is_empty(), "failed": failed })
        }
        Command::Report => {
            let class = classify(cfg)?;
            write(&dir, "classification.json", &pretty(&class)?)?;
            let (medium, ts) = evolve(cfg)?;
            write_series(&dir, &ts)?;
            let fr = fit(cfg, &ts, Some(&medium))?;
            write(&dir, "fit.json", &pretty(&fr)?)?;
            write(&dir, "report.md", &report_markdown(cfg, &class, &ts, &fr))?;
            json!({ "command": "report", "verdict": class.verdict, "expected": fr.expected })
        }
    };
    Ok(summary.to_string())
}

pub fn classify(cfg: &RunConfig) -> Result<ClassificationReport> {
    let p = Problem::new(cfg.potential.clone(), cfg.spectral.clone())?;
    let zd = p.classify()?;
    ClassificationReport::new(&p, &zd)
}

/// One row of the threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub ell: usize,
    /// Coupling at threshold; the scale factor for multi-coupling families.
    pub c_star: f64,
    /// Factor applied to the configured potential.
    pub scale: f64,
    pub defect: f64,
    pub iterations: usize,
}

/// First threshold of each requested channel along `s -> s V`.
pub fn tune(cfg: &RunConfig) -> Result<Vec<TuneRow>> {
    let base = &cfg.potential;
    let t = &cfg.tune;
    let family = |s: f64| base.scaled(s);
    let mut rows = Vec::new();
    for &ell in &t.channels {
        let d = |s: f64| -> Result<f64> {
            let spec = family(s);
            shoot_defect(ell, &spec, default_matching_radius(&spec))
        };
        let mut a = t.scan_from;
        let mut fa = d(a)?;
        let bracket = loop {
            let b = a + t.scan_step;
            if b > t.scan_to {
                return Err(Error::Bracket { lo: t.scan_from, hi: t.scan_to });
            }
            let fb = d(b)?;
            if fb.signum() != fa.signum() {
                break (a, b);
            }
            a = b;
            fa = fb;
        };
        let r = tune_threshold(ell, family, bracket)?;
        let c_star = match &base.family {
            Family::SquareWell { c, .. } | Family::Gaussian { c, .. } => c * r.c_star,
            _ => r.c_star,
        };
        rows.push(TuneRow { ell, c_star, scale: r.c_star, defect: r.defect, iterations: r.iterations });
    }
    Ok(rows)
}

pub fn evolve(cfg: &RunConfig) -> Result<(Medium, TimeSeries)> {
    let medium = Medium::new(cfg.potential.clone(), cfg.spectral.clone())?;
    let req = cfg.evolution.request()?;
    let ts = match req.density {
        Density::Full => stone_evolve(&medium, &req)?,
        Density::Born(k) => born_term(&medium, k, &req)?,
    };
    Ok((medium, ts))
}

fn write_series(dir: &Path, ts: &TimeSeries) -> Result<()> {
    write(dir, "series.csv", &ts.to_csv())?;
    write(dir, "series.json", &pretty(ts)?)?;
    if !ts.profile.is_empty() {
        let mut s = String::from("t,re,im,err_est\n");
        for (t, v, e) in &ts.profile {
            let _ = writeln!(s, "{t:e},{:e},{:e},{e:e}", v.re, v.im);
        }
        write(dir, "profile.csv", &s)?;
    }
    Ok(())
}

fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "csv") {
        TimeSeries::from_csv(&text)
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Output of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub classification: Classification,
    pub multiplier: MultiplierKind,
    /// Leading rate the classification predicts.
    pub expected: String,
    pub model: RateModel,
    pub fits: Vec<FitResult>,
}

/// Leading rate of `m(t, H) chi(H) P_c` for a classification.
pub fn expected_rate(class: Classification, kind: MultiplierKind, flags: Orthogonality) -> &'static str {
    let wave_factor = matches!(kind, MultiplierKind::WaveSin);
    match (class, kind) {
        (Classification::FirstKind | Classification::ThirdKind, _) => {
            if wave_factor {
                "t/log t"
            } else {
                "1/log t"
            }
        }
        (Classification::SecondKind, _) if !(flags.m0_zero && flags.m1_zero) => "1/t",
        (_, MultiplierKind::Schrod) => "t^-2",
        (_, MultiplierKind::KgCos | MultiplierKind::KgSin) => "t^-3/2",
        (_, _) => "t^-2 times t",
    }
}

fn orthogonality(medium: &Medium) -> Orthogonality {
    match medium {
        Medium::Free => Orthogonality { m0_zero: true, m1_zero: true },
        Medium::Potential { problem, zero } => {
            let m = problem.orthogonality_moments(zero);
            let small = |x: f64| x.abs() <= 1e-8;
            Orthogonality { m0_zero: m.iter().all(|q| small(q.m0)), m1_zero: m.iter().all(|q| small(q.m1)) }
        }
    }
}

/// Fit every pair; the model is the configured basis or the predicted menu.
pub fn fit(cfg: &RunConfig, ts: &TimeSeries, medium: Option<&Medium>) -> Result<FitReport> {
    let owned;
    let medium = match medium {
        Some(m) => m,
        None => {
            owned = Medium::new(cfg.potential.clone(), cfg.spectral.clone())?;
            &owned
        }
    };
    let class = medium.classification();
    let flags = orthogonality(medium);
    let kind = ts.multiplier.kind;
    let mut model = match &cfg.fit.basis {
        Some(b) => RateModel::new(b.clone()),
        None => expected_models(class, kind, flags),
    };
    model.weight = cfg.fit.weight;
    model.complex = cfg.fit.complex;
    if model.basis.contains(&Basis::Profile) {
        model.profile = ts.profile.iter().map(|p| (p.0, p.1)).collect();
    }
    let pairs: Vec<usize> = {
        let mut ids: Vec<usize> = ts.rows.iter().map(|r| r.pair_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let fits = pairs.iter().map(|&p| decayfit::fit(ts, p, &model)).collect::<Result<Vec<_>>>()?;
    Ok(FitReport { classification: class, multiplier: kind, expected: expected_rate(class, kind, flags).into(), model, fits })
}

pub fn verify(cfg: &RunConfig) -> Result<Vec<LemmaReport>> {
    let vc = VerifyConfig { seed: cfg.seed, samples: cfg.verify.samples };
    match &cfg.verify.lemma {
        Some(id) => Ok(vec![oscint::verify(id, &vc)?]),
        None => oscint::verify_all(&vc, cfg.workers()),
    }
}

fn report_markdown(cfg: &RunConfig, class: &ClassificationReport, ts: &TimeSeries, fr: &FitReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# threshold-lab report\n");
    let _ = writeln!(s, "- potential: `{:?}`, decay class {}", cfg.potential.family, cfg.potential.decay_class);
    let _ = writeln!(s, "- classification: **{}** (rank S1 = {}, rank S2 = {})", class.verdict, class.rank_s1, class.rank_s2);
    if let Some(a) = class.resonance_a {
        let _ = writeln!(s, "- resonance amplitude a = {a:.6e}");
    }
    for m in &class.moments {
        let _ = writeln!(s, "- channel {} moments: m0 = {:.3e}, m1 = {:.3e}", m.ell, m.m0, m.m1);
    }
    let _ = writeln!(s, "- multiplier: {} (mass {})", ts.multiplier.kind, ts.multiplier.mass);
    let _ = writeln!(
        s,
        "- times: {} samples on [{:e}, {:e}], {} rows flagged",
        cfg.evolution.t_count, cfg.evolution.t_min, cfg.evolution.t_max, ts.flagged.len()
    );
    let _ = writeln!(s, "- expected leading rate: **{}**\n", fr.expected);
    let _ = writeln!(s, "| pair | r1 | r2 | theta | slope | R^2 | dominant | residual |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    for f in &fr.fits {
        let p = ts.pairs.get(f.pair_id);
        let (r1, r2, th) = p.map(|p| (p.r1, p.r2, p.theta)).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        let _ = writeln!(
            s,
            "| {} | {r1} | {r2} | {th:.4} | {:.4} | {:.5} | {} | {:.2e} |",
            f.pair_id, f.slope, f.slope_r2, f.dominant, f.residual
        );
    }
    let _ = writeln!(s, "\nFitted basis: {}.", fr.model.basis.iter().map(|b| format!("`{b}`")).collect::<Vec<_>>().join(", "));
    s
}
