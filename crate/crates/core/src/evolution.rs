//! Low-energy evolution kernels by the Stone formula.
//!
//! `K(t; x, y) = (1/2 pi i) int_0^inf m(t, lambda) chi(lambda) [R_V^+ - R_V^-](lambda^2)(x, y) 2 lambda d lambda`
//! (the `2 lambda` is the Jacobian of `E = lambda^2`). The integral is taken in the variable
//! in which the phase is linear (`u = lambda^2` for Schroedinger, `w = sqrt(lambda^2 + m^2)`
//! for Klein-Gordon and wave) with Filon panels refined dyadically toward the threshold.

pub mod filon;
pub mod oracle;

use crate::kernels::{channel_weight, chi, free_density, SpectralPoint, C64};
use crate::potentials::PotentialSpec;
use crate::spectral::{Classification, Problem, SpectralConfig, ZeroEnergyData};
use crate::{Error, Result};
use filon::{dyadic_edges, FilonIntegral};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

const I: C64 = C64::new(0.0, 1.0);

/// Rows whose error estimate exceeds this fraction of `|value|` are flagged and withheld.
pub const ROW_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierKind {
    Schrod,
    KgCos,
    KgSin,
    WaveCos,
    WaveSin,
}

impl MultiplierKind {
    pub fn name(self) -> &'static str {
        match self {
            MultiplierKind::Schrod => "schrod",
            MultiplierKind::KgCos => "kg-cos",
            MultiplierKind::KgSin => "kg-sin",
            MultiplierKind::WaveCos => "wave-cos",
            MultiplierKind::WaveSin => "wave-sin",
        }
    }
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MultiplierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "schrod" | "schrodinger" => MultiplierKind::Schrod,
            "kg-cos" | "kgcos" => MultiplierKind::KgCos,
            "kg-sin" | "kgsin" => MultiplierKind::KgSin,
            "wave-cos" | "wavecos" => MultiplierKind::WaveCos,
            "wave-sin" | "wavesin" => MultiplierKind::WaveSin,
            other => return Err(Error::Config(format!("unknown multiplier {other:?}"))),
        })
    }
}

/// Spectral multiplier `m(t, lambda)` applied under the Stone integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub kind: MultiplierKind,
    #[serde(default)]
    pub mass: f64,
}

impl Multiplier {
    pub fn new(kind: MultiplierKind, mass: f64) -> Result<Self> {
        let mass = match kind {
            MultiplierKind::KgCos | MultiplierKind::KgSin => {
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(Error::Config(format!("Klein-Gordon needs a positive mass, got {mass}")));
                }
                mass
            }
            _ => 0.0,
        };
        Ok(Multiplier { kind, mass })
    }

    pub fn schrod() -> Self {
        Multiplier { kind: MultiplierKind::Schrod, mass: 0.0 }
    }

    fn is_relativistic(self) -> bool {
        self.kind != MultiplierKind::Schrod
    }

    fn is_sine(self) -> bool {
        matches!(self.kind, MultiplierKind::KgSin | MultiplierKind::WaveSin)
    }

    /// Pointwise value at energy `lambda^2`.
    pub fn value(self, t: f64, lambda: f64) -> C64 {
        let w = (lambda * lambda + self.mass * self.mass).sqrt();
        match self.kind {
            MultiplierKind::Schrod => C64::from_polar(1.0, t * lambda * lambda),
            MultiplierKind::KgCos | MultiplierKind::WaveCos => C64::new((t * w).cos(), 0.0),
            MultiplierKind::KgSin | MultiplierKind::WaveSin => {
                C64::new(if w > 0.0 { (t * w).sin() / w } else { t }, 0.0)
            }
        }
    }

    /// Offset `delta` of the phase variable at `lambda`, computed without cancellation.
    fn offset(self, lambda: f64) -> f64 {
        if self.is_relativistic() {
            let m = self.mass;
            lambda * lambda / ((lambda * lambda + m * m).sqrt() + m)
        } else {
            lambda * lambda
        }
    }

    /// Inverse of [`Multiplier::offset`].
    fn lambda_of(self, delta: f64) -> f64 {
        if self.is_relativistic() {
            (delta * (delta + 2.0 * self.mass)).sqrt()
        } else {
            delta.sqrt()
        }
    }

    /// Jacobian turning `2 lambda d lambda` into `d delta` (times `1/w` for the sine).
    fn jacobian(self, delta: f64) -> f64 {
        match self.kind {
            MultiplierKind::Schrod => 1.0,
            MultiplierKind::KgCos | MultiplierKind::WaveCos => 2.0 * (delta + self.mass),
            MultiplierKind::KgSin | MultiplierKind::WaveSin => 2.0,
        }
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mass > 0.0 {
            write!(f, "{}(m={})", self.kind, self.mass)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

/// Evaluation points `x = r1 e_1`, `y = r2 (cos theta e_1 + sin theta e_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub r1: f64,
    pub r2: f64,
    #[serde(default)]
    pub theta: f64,
}

impl Pair {
    pub fn new(r1: f64, r2: f64, theta: f64) -> Self {
        Pair { r1, r2, theta }
    }

    pub fn distance(&self) -> f64 {
        (self.r1 * self.r1 + self.r2 * self.r2 - 2.0 * self.r1 * self.r2 * self.theta.cos()).max(0.0).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0 && self.r2 > 0.0) {
            return Err(Error::Config(format!("pair radii must be positive: {self:?}")));
        }
        if !(self.distance() > 1e-12) {
            return Err(Error::SingularDistance);
        }
        Ok(())
    }
}

/// Default evaluation pairs: two inside and two outside the unit support.
pub fn default_pairs() -> Vec<Pair> {
    vec![
        Pair::new(0.5, 0.7, 0.0),
        Pair::new(1.5, 2.5, 0.0),
        Pair::new(2.0, 3.0, PI / 3.0),
        Pair::new(0.8, 4.0, PI / 2.0),
    ]
}

/// The operator whose spectral density is integrated.
#[derive(Debug, Clone)]
pub enum Medium {
    Free,
    Potential { problem: Box<Problem>, zero: Box<ZeroEnergyData> },
}

impl Medium {
    /// Discretize and classify; a zero potential becomes [`Medium::Free`].
    pub fn new(spec: PotentialSpec, config: SpectralConfig) -> Result<Self> {
        if spec.is_zero() {
            return Ok(Medium::Free);
        }
        let problem = Problem::new(spec, config)?;
        let zero = problem.classify()?;
        Ok(Medium::Potential { problem: Box::new(problem), zero: Box::new(zero) })
    }

    pub fn classification(&self) -> Classification {
        match self {
            Medium::Free => Classification::Regular,
            Medium::Potential { zero, .. } => zero.classification,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Medium::Free => "free".into(),
            Medium::Potential { zero, .. } => zero.classification.to_string(),
        }
    }

    fn has_threshold(&self) -> bool {
        matches!(self, Medium::Potential { zero, .. } if !zero.s1.is_empty())
    }
}

/// Which spectral density to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    /// `R_V^+ - R_V^-`.
    Full,
    /// Jump of the `k`-th Born term `R_0 (-V R_0)^k`.
    Born(usize),
}

/// A request for `K(t; x, y)` on a set of times and pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagatorRequest {
    pub times: Vec<f64>,
    pub pairs: Vec<Pair>,
    pub multiplier: Multiplier,
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    /// Bottom of the dyadic refinement; the rest is a tail model.
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default = "default_density")]
    pub density: Density,
    /// Also integrate the scalar `-(f^+ - f^-)` of a resonance channel.
    #[serde(default)]
    pub profile: bool,
    /// Keep only the `e^{+itw}` half of a cosine or sine multiplier.
    #[serde(default)]
    pub branch: Branch,
}

/// Which exponentials of a relativistic multiplier are integrated.
///
/// `Forward` gives the kernel of `e^{itw}` (cosine type) or `e^{itw}/w` (sine type); its
/// modulus is the envelope of the cosine and sine series without the `cos(tm)` beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[default]
    Both,
    Forward,
}

fn default_lambda1() -> f64 {
    0.25
}

fn default_density() -> Density {
    Density::Full
}

impl PropagatorRequest {
    pub fn new(times: Vec<f64>, pairs: Vec<Pair>, multiplier: Multiplier) -> Self {
        PropagatorRequest {
            times,
            pairs,
            multiplier,
            lambda1: 0.25,
            lambda_min: None,
            density: Density::Full,
            profile: false,
            branch: Branch::Both,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() || self.times.is_empty() {
            return Err(Error::Config("need at least one time and one pair".into()));
        }
        for p in &self.pairs {
            p.validate()?;
        }
        if let Some(t) = self.times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::Config(format!("times must be positive, got {t}")));
        }
        if !(self.lambda1 > 0.0) {
            return Err(Error::Domain(self.lambda1));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub t: f64,
    pub pair_id: usize,
    pub value: C64,
    pub err_est: f64,
}

/// Output of [`stone_evolve`], [`born_term`] and [`oracle::eig_oracle`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeries {
    pub multiplier: Multiplier,
    pub classification: String,
    pub pairs: Vec<Pair>,
    pub rows: Vec<TimeRow>,
    /// Rows withheld because `err_est >= 1e-3 |value|`.
    pub flagged: Vec<TimeRow>,
    /// `(t, phi(t), err)` for the resonance scalar when requested.
    #[serde(default)]
    pub profile: Vec<(f64, C64, f64)>,
}

impl TimeSeries {
    /// Times and values of one pair, in time order.
    pub fn series(&self, pair_id: usize) -> (Vec<f64>, Vec<C64>) {
        let mut rows: Vec<&TimeRow> = self.rows.iter().filter(|r| r.pair_id == pair_id).collect();
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        (rows.iter().map(|r| r.t).collect(), rows.iter().map(|r| r.value).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,pair_id,re,im,abs,err_est,multiplier,classification\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:e},{},{:e},{:e},{:e},{:e},{},{}\n",
                r.t,
                r.pair_id,
                r.value.re,
                r.value.im,
                r.value.norm(),
                r.err_est,
                self.multiplier.kind,
                self.classification
            ));
        }
        s
    }

    /// Parse the CSV written by [`TimeSeries::to_csv`]; pairs are not recorded there.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
        if !header.starts_with("t,pair_id,re,im") {
            return Err(Error::Config(format!("unexpected CSV header {header:?}")));
        }
        let mut rows = Vec::new();
        let mut multiplier = Multiplier::schrod();
        let mut classification = String::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Config(format!("bad CSV row {}: {line:?}", k + 2));
            if f.len() < 6 {
                return Err(bad());
            }
            let num = |i: usize| f[i].trim().parse::<f64>().map_err(|_| bad());
            rows.push(TimeRow {
                t: num(0)?,
                pair_id: f[1].trim().parse().map_err(|_| bad())?,
                value: C64::new(num(2)?, num(3)?),
                err_est: num(5)?,
            });
            if f.len() >= 8 {
                multiplier.kind = f[6].parse()?;
                classification = f[7].trim().to_string();
            }
        }
        Ok(TimeSeries { multiplier, classification, pairs: Vec::new(), rows, flagged: Vec::new(), profile: Vec::new() })
    }
}

// ---------------------------------------------------------------------------
// densities

/// Evaluates the chosen density at all pairs for one `lambda`.
pub struct DensityEval<'a> {
    medium: &'a Medium,
    density: Density,
    radii: Vec<f64>,
    slots: Vec<(usize, usize)>,
    dist: Vec<f64>,
    cos: Vec<f64>,
    profile: bool,
}

impl<'a> DensityEval<'a> {
    pub fn new(medium: &'a Medium, pairs: &[Pair], density: Density, profile: bool) -> Result<Self> {
        if let (Medium::Free, Density::Born(k)) = (medium, density) {
            if k > 0 {
                return Err(Error::EmptyPotential);
            }
        }
        if profile {
            match medium {
                Medium::Potential { zero, .. } if zero.resonance.is_some() => {}
                _ => return Err(Error::Config("resonance profile needs a resonance".into())),
            }
        }
        let mut radii: Vec<f64> = Vec::new();
        let mut slot = |r: f64| match radii.iter().position(|&x| x == r) {
            Some(i) => i,
            None => {
                radii.push(r);
                radii.len() - 1
            }
        };
        let slots = pairs.iter().map(|p| (slot(p.r1), slot(p.r2))).collect();
        Ok(DensityEval {
            medium,
            density,
            radii,
            slots,
            dist: pairs.iter().map(Pair::distance).collect(),
            cos: pairs.iter().map(|p| p.theta.cos()).collect(),
            profile,
        })
    }

    pub fn outputs(&self) -> usize {
        self.slots.len() + usize::from(self.profile)
    }

    /// Channel `l` contributes below the noise at this `lambda`.
    fn negligible(p: &Problem, zd: &ZeroEnergyData, ell: usize, lambda: f64) -> bool {
        if ell == 0 || zd.s1.iter().any(|c| c.ell == ell) {
            return false;
        }
        let rs = p.grid.r_max.max(1.0);
        (lambda * rs).powi(2 * ell as i32) * rs * rs < 1e-14
    }

    /// Density values per pair, then the profile scalar if requested.
    pub fn at(&self, lambda: f64) -> Result<Vec<C64>> {
        let mut out: Vec<C64> = match self.density {
            Density::Full | Density::Born(0) => self.dist.iter().map(|&d| free_density(lambda, d)).collect(),
            Density::Born(_) => vec![C64::new(0.0, 0.0); self.slots.len()],
        };
        if let Medium::Potential { problem, zero } = self.medium {
            let m = self.radii.len();
            for ell in 0..=problem.channels() {
                if Self::negligible(problem, zero, ell, lambda) {
                    continue;
                }
                let corr = match self.density {
                    Density::Full => problem.density_correction(zero, lambda, ell, &self.radii)?,
                    Density::Born(0) => break,
                    Density::Born(k) => born_channel(problem, lambda, ell, k, &self.radii)?,
                };
                for (q, &(i, k)) in self.slots.iter().enumerate() {
                    let (ri, rk) = (self.radii[i], self.radii[k]);
                    out[q] += corr[i * m + k] * (ri * rk).powf(-1.5) * channel_weight(ell, self.cos[q]);
                }
            }
            if self.profile {
                let f = problem.f_scalar(zero, SpectralPoint::plus(lambda), 0)?;
                out.push(C64::new(0.0, 2.0 * f.im) * -1.0);
            }
        }
        Ok(out)
    }
}

/// Jump of `R_0 (-V R_0)^k` in channel `l` at radius pairs, `out[i * m + k]`.
pub fn born_channel(p: &Problem, lambda: f64, ell: usize, k: usize, radii: &[f64]) -> Result<Vec<C64>> {
    let n = p.n();
    let m = radii.len();
    let mut out = vec![C64::new(0.0, 0.0); m * m];
    if k == 0 {
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = crate::kernels::channel_jump(ell, lambda, radii[i], radii[j]);
            }
        }
        return Ok(out);
    }
    let u = DVector::from_iterator(n, p.u.iter().map(|&x| C64::new(x, 0.0)));
    for pt in [SpectralPoint::plus(lambda), SpectralPoint::minus(lambda)] {
        let khat = p.assemble_m(pt, ell)?.matrix - DMatrix::from_diagonal(&u);
        let rows: Vec<DVector<C64>> = radii.iter().map(|&r| DVector::from_vec(p.scaled_row(ell, pt, r))).collect();
        // U (K U)^{k-1} b_s
        let right: Vec<DVector<C64>> = rows
            .iter()
            .map(|b| {
                let mut x = b.component_mul(&u);
                for _ in 1..k {
                    x = (&khat * x).component_mul(&u);
                }
                x
            })
            .collect();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 } * pt.sign.s();
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] += rows[i].dot(&right[j]) * sign;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stone integral

/// Filon integral of the Stone amplitude in the offset variable of the multiplier.
pub struct StoneIntegral {
    pub filon: FilonIntegral,
    multiplier: Multiplier,
    branch: Branch,
}

impl StoneIntegral {
    pub fn build(eval: &DensityEval<'_>, req: &PropagatorRequest) -> Result<Self> {
        let mult = req.multiplier;
        let resonant = eval.medium.classification().has_resonance() && eval.density == Density::Full;
        let lmin = req.lambda_min.unwrap_or(if eval.medium.has_threshold() { 1e-10 } else { 1e-7 });
        if !(lmin > 0.0 && lmin < req.lambda1) {
            return Err(Error::Domain(lmin));
        }
        let l1 = req.lambda1;
        let edges = dyadic_edges(mult.offset(lmin), mult.offset(l1), mult.offset(2.0 * l1), 4);
        let scale = 1.0 / (2.0 * PI * I);
        let filon = FilonIntegral::build(
            &edges,
            |delta| {
                let lambda = mult.lambda_of(delta);
                let c = chi(lambda, l1) * mult.jacobian(delta);
                Ok(eval.at(lambda)?.into_iter().map(|z| z * c * scale).collect())
            },
            resonant,
        )?;
        Ok(StoneIntegral { filon, multiplier: mult, branch: req.branch })
    }

    /// `(value, err)` per output at time `t`.
    pub fn at(&self, t: f64) -> Vec<(C64, f64)> {
        let mult = self.multiplier;
        if !mult.is_relativistic() {
            return self.filon.eval(t);
        }
        let ph = C64::from_polar(1.0, t * mult.mass);
        let fp = self.filon.eval(t);
        if self.branch == Branch::Forward {
            return fp.into_iter().map(|(a, e)| (a * ph, e)).collect();
        }
        let fm = self.filon.eval(-t);
        fp.into_iter()
            .zip(fm)
            .map(|((a, ea), (b, eb))| {
                let (a, b) = (a * ph, b * ph.conj());
                let v = if mult.is_sine() { (a - b) / (2.0 * I) } else { (a + b) * 0.5 };
                (v, 0.5 * (ea + eb))
            })
            .collect()
    }
}

fn run(medium: &Medium, req: &PropagatorRequest) -> Result<TimeSeries> {
    req.validate()?;
    let eval = DensityEval::new(medium, &req.pairs, req.density, req.profile)?;
    let stone = StoneIntegral::build(&eval, req)?;
    let np = req.pairs.len();
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    let mut profile = Vec::new();
    for &t in &req.times {
        let vals = stone.at(t);
        for (q, &(value, err_est)) in vals.iter().take(np).enumerate() {
            let row = TimeRow { t, pair_id: q, value, err_est };
            if err_est < ROW_TOLERANCE * value.norm() {
                rows.push(row);
            } else {
                flagged.push(row);
            }
        }
        if req.profile {
            let (v, e) = vals[np];
            profile.push((t, v, e));
        }
    }
    let mut classification = match req.density {
        Density::Full => medium.label(),
        Density::Born(k) => format!("born{k}"),
    };
    if req.branch == Branch::Forward && req.multiplier.is_relativistic() {
        classification.push_str("-forward");
    }
    Ok(TimeSeries { multiplier: req.multiplier, classification, pairs: req.pairs.clone(), rows, flagged, profile })
}

/// `K(t; x, y)` for `m(t, H) chi(H) P_c` by the Stone formula.
pub fn stone_evolve(medium: &Medium, req: &PropagatorRequest) -> Result<TimeSeries> {
    let mut req = req.clone();
    req.density = Density::Full;
    run(medium, &req)
}

/// Stone integral of the `k`-th Born term alone; `k = 0` is the free kernel.
pub fn born_term(medium: &Medium, k: usize, req: &PropagatorRequest) -> Result<TimeSeries> {
    let mut req = req.clone();
    req.density = Density::Born(k);
    req.profile = false;
    run(medium, &req)
}

/// Full-space threshold function `psi(x)` of the resonance at radius `r` (channel 0).
pub fn resonance_value(medium: &Medium, r: f64) -> Option<f64> {
    match medium {
        Medium::Potential { problem, zero } => zero.resonance.as_ref().map(|c| problem.radial_profile(0, &c.vector, r)),
        Medium::Free => None,
    }
}

/// Log-spaced times.
pub fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    crate::spectral::lambda_samples(lo, hi, count)
}

#[cfg(test)]
mod tests;
