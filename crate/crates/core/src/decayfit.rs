//! Fitting kernel time series against the rate menu.

use crate::evolution::{MultiplierKind, TimeSeries};
use crate::kernels::C64;
use crate::spectral::{linear_fit, Classification};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;

/// One basis function of the rate menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "1/log t")]
    InvLog,
    #[serde(rename = "1/t")]
    InvT,
    #[serde(rename = "1/(t log t)")]
    InvTLog,
    #[serde(rename = "1/(t log^2 t)")]
    InvTLog2,
    #[serde(rename = "t^-3/2")]
    T32,
    #[serde(rename = "t^-2")]
    T2,
    /// A tabulated profile supplied with the model, such as the resonance scalar `phi(t)`.
    #[serde(rename = "profile")]
    Profile,
}

impl Basis {
    pub const MENU: [Basis; 7] = [Basis::One, Basis::InvLog, Basis::InvT, Basis::InvTLog, Basis::InvTLog2, Basis::T32, Basis::T2];

    pub fn eval(self, t: f64) -> f64 {
        let l = t.ln();
        match self {
            Basis::One => 1.0,
            Basis::InvLog => 1.0 / l,
            Basis::InvT => 1.0 / t,
            Basis::InvTLog => 1.0 / (t * l),
            Basis::InvTLog2 => 1.0 / (t * l * l),
            Basis::T32 => t.powf(-1.5),
            Basis::T2 => t.powi(-2),
            Basis::Profile => f64::NAN,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::One => "1",
            Basis::InvLog => "1/log t",
            Basis::InvT => "1/t",
            Basis::InvTLog => "1/(t log t)",
            Basis::InvTLog2 => "1/(t log^2 t)",
            Basis::T32 => "t^-3/2",
            Basis::T2 => "t^-2",
            Basis::Profile => "profile",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Spatial weight applied per pair before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    #[default]
    None,
    /// `w(x) = 1 + log^+ |x|`.
    Log,
    /// `w(x) = <x>^{1/2}`.
    Bracket,
}

impl Weight {
    pub fn at(self, r: f64) -> f64 {
        match self {
            Weight::None => 1.0,
            Weight::Log => 1.0 + r.ln().max(0.0),
            Weight::Bracket => (1.0 + r * r).powf(0.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub basis: Vec<Basis>,
    #[serde(default)]
    pub weight: Weight,
    /// Fit the complex values instead of `|K|`.
    #[serde(default)]
    pub complex: bool,
    /// `(t, value)` samples of [`Basis::Profile`], matched to series times.
    #[serde(default)]
    pub profile: Vec<(f64, C64)>,
}

impl RateModel {
    pub fn new(basis: Vec<Basis>) -> Self {
        RateModel { basis, weight: Weight::None, complex: false, profile: Vec::new() }
    }

    fn column(&self, b: Basis, t: f64) -> Result<C64> {
        if b != Basis::Profile {
            return Ok(C64::new(b.eval(t), 0.0));
        }
        self.profile
            .iter()
            .find(|(s, _)| (s / t - 1.0).abs() < 1e-9)
            .map(|p| p.1)
            .ok_or_else(|| Error::Config(format!("profile has no sample at t = {t}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub pair_id: usize,
    pub basis: Vec<Basis>,
    pub coefficients: Vec<C64>,
    /// RMS relative residual of the weighted fit.
    pub residual: f64,
    /// Condition number of the column-normalized design.
    pub condition: f64,
    /// Basis element with the largest contribution at the geometric midpoint.
    pub dominant: Basis,
    /// Least-squares slope of `log |K|` against `log t`.
    pub slope: f64,
    pub slope_r2: f64,
    pub t_range: (f64, f64),
}

impl FitResult {
    pub fn coefficient(&self, b: Basis) -> Option<C64> {
        self.basis.iter().position(|&x| x == b).map(|i| self.coefficients[i])
    }
}

/// Fit one pair's series. Rows are weighted by `1/|K|`, so every decade counts equally.
pub fn fit(series: &TimeSeries, pair_id: usize, model: &RateModel) -> Result<FitResult> {
    let (t, v) = series.series(pair_id);
    let w = match (model.weight, series.pairs.get(pair_id)) {
        (Weight::None, _) => 1.0,
        (wt, Some(p)) => wt.at(p.r1) * wt.at(p.r2),
        (_, None) => return Err(Error::Config("weighted fit needs the pair geometry".into())),
    };
    let v: Vec<C64> = v.into_iter().map(|z| z / w).collect();
    let mut out = fit_values(&t, &v, model)?;
    out.pair_id = pair_id;
    Ok(out)
}

/// Fit every pair of a series.
pub fn fit_all(series: &TimeSeries, model: &RateModel) -> Result<Vec<FitResult>> {
    let mut ids: Vec<usize> = series.rows.iter().map(|r| r.pair_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter().map(|q| fit(series, q, model)).collect()
}

/// Fit raw samples.
pub fn fit_values(t: &[f64], v: &[C64], model: &RateModel) -> Result<FitResult> {
    if model.basis.is_empty() {
        return Err(Error::Config("empty basis".into()));
    }
    if t.len() < 12 {
        return Err(Error::Config(format!("need at least 12 samples, got {}", t.len())));
    }
    let (lo, hi) = t.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    if !(lo > 2.0) {
        return Err(Error::Config(format!("times must exceed 2, got {lo}")));
    }
    if hi / lo < 999.0 {
        return Err(Error::Config(format!("samples span {:.2} decades, need 3", (hi / lo).log10())));
    }
    let m = t.len();
    let k = model.basis.len();
    let cols: Vec<Vec<C64>> = model
        .basis
        .iter()
        .map(|&b| t.iter().map(|&s| model.column(b, s)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let y: Vec<C64> = if model.complex { v.to_vec() } else { v.iter().map(|z| C64::new(z.norm(), 0.0)).collect() };
    let rw: Vec<f64> = y.iter().map(|z| if z.norm() > 0.0 { 1.0 / z.norm() } else { 1.0 }).collect();
    // real least squares; complex data and coefficients are stacked as [re; im]
    let (rows, unknowns) = if model.complex { (2 * m, 2 * k) } else { (m, k) };
    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut b = DVector::<f64>::zeros(rows);
    for i in 0..m {
        for (j, col) in cols.iter().enumerate() {
            let c = col[i] * rw[i];
            if model.complex {
                // (cr + i ci)(xr + i xi)
                a[(i, 2 * j)] = c.re;
                a[(i, 2 * j + 1)] = -c.im;
                a[(m + i, 2 * j)] = c.im;
                a[(m + i, 2 * j + 1)] = c.re;
            } else {
                a[(i, j)] = c.re;
            }
        }
        if model.complex {
            b[i] = y[i].re * rw[i];
            b[m + i] = y[i].im * rw[i];
        } else {
            b[i] = y[i].re * rw[i];
        }
    }
    let norms: Vec<f64> = (0..unknowns).map(|j| a.column(j).norm()).collect();
    if norms.iter().any(|&n| !(n > 0.0)) {
        return Err(Error::CollinearBasis(f64::INFINITY));
    }
    for (j, n) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > 1e10 {
        return Err(Error::CollinearBasis(condition));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::Config(e.to_string()))?;
    let res = (&a * &x - &b).norm() / (m as f64).sqrt();
    let x: Vec<f64> = x.iter().zip(norms.iter().cycle()).map(|(x, n)| x / n).collect();
    let coefficients: Vec<C64> =
        if model.complex { (0..k).map(|j| C64::new(x[2 * j], x[2 * j + 1])).collect() } else { x.iter().map(|&c| C64::new(c, 0.0)).collect() };
    let mid = (lo * hi).sqrt();
    // nearest sample to the midpoint keeps profile columns usable
    let imid = (0..m).min_by(|&i, &j| (t[i] / mid).ln().abs().total_cmp(&(t[j] / mid).ln().abs())).unwrap();
    let dominant = model
        .basis
        .iter()
        .enumerate()
        .max_by(|(i, _), (j, _)| (coefficients[*i] * cols[*i][imid]).norm().total_cmp(&(coefficients[*j] * cols[*j][imid]).norm()))
        .map(|(_, &b)| b)
        .unwrap();
    let (lx, ly): (Vec<f64>, Vec<f64>) = t.iter().zip(v).filter(|(_, z)| z.norm() > 0.0).map(|(s, z)| (s.ln(), z.norm().ln())).unzip();
    let (_, slope, slope_r2) = linear_fit(&lx, &ly);
    Ok(FitResult {
        pair_id: 0,
        basis: model.basis.clone(),
        coefficients,
        residual: res,
        condition,
        dominant,
        slope,
        slope_r2,
        t_range: (lo, hi),
    })
}

/// Orthogonality flags for [`expected_models`]: `m0 = 0` and `m1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Orthogonality {
    pub m0_zero: bool,
    pub m1_zero: bool,
}

/// The rate menu a classification predicts.
pub fn expected_models(class: Classification, kind: MultiplierKind, flags: Orthogonality) -> RateModel {
    let mut basis = match class {
        Classification::Regular => vec![Basis::T2],
        Classification::FirstKind | Classification::ThirdKind => {
            vec![Basis::InvLog, Basis::InvT, Basis::InvTLog, Basis::InvTLog2]
        }
        Classification::SecondKind if flags.m0_zero && flags.m1_zero => vec![Basis::T2],
        Classification::SecondKind => vec![Basis::InvT],
    };
    if kind != MultiplierKind::Schrod {
        basis.push(Basis::T32);
    }
    RateModel::new(basis)
}

/// Best rank-one factorization `C ~ u u^T` of a symmetric coefficient matrix.
///
/// Returns `(sigma_2 / sigma_1, u)` with `u` carrying `sqrt(sigma_1)`.
pub fn rank_one(c: &DMatrix<C64>) -> (f64, DVector<C64>) {
    let svd = c.clone().svd(true, false);
    let s = &svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let ratio = if s.len() > 1 { s[idx[1]] / s[idx[0]] } else { 0.0 };
    let u = svd.u.unwrap().column(idx[0]).into_owned() * C64::new(s[idx[0]].sqrt(), 0.0);
    (ratio, u)
}

/// Least-squares scale `a` with `x ~ a y` and the relative misfit `|x - a y| / |x|`.
pub fn scale_match(x: &[f64], y: &[f64]) -> (f64, f64) {
    let a = x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / y.iter().map(|q| q * q).sum::<f64>();
    let err = x.iter().zip(y).map(|(p, q)| (p - a * q).powi(2)).sum::<f64>().sqrt() / x.iter().map(|p| p * p).sum::<f64>().sqrt();
    (a, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        crate::spectral::lambda_samples(lo, hi, n)
    }

    #[test]
    fn recovers_synthetic_coefficients() {
        let t = times(1e3, 1e9, 40);
        let v: Vec<C64> = t.iter().map(|&s| C64::new(3.0 / s + 5.0 / (s * s.ln().powi(2)), 0.0)).collect();
        let f = fit_values(&t, &v, &RateModel::new(vec![Basis::InvT, Basis::InvTLog2])).unwrap();
        assert!((f.coefficients[0].re / 3.0 - 1.0).abs() < 0.02);
        assert!((f.coefficients[1].re / 5.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let t = times(1e3, 1e9, 40);
        let v: Vec<C64> = t.iter().map(|&s| C64::new(s.powi(-2) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)), 0.0)).collect();
        let f = fit_values(&t, &v, &RateModel::new(vec![Basis::InvT, Basis::T2])).unwrap();
        assert_eq!(f.dominant, Basis::T2);
        assert!((f.slope + 2.0).abs() < 0.03);
    }

    #[test]
    fn constant_series() {
        let t = times(1e3, 1e9, 20);
        let v = vec![C64::new(0.7, 0.0); 20];
        let f = fit_values(&t, &v, &RateModel::new(vec![Basis::One, Basis::T2])).unwrap();
        assert_eq!(f.dominant, Basis::One);
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn collinear_and_short_inputs() {
        let t = times(1e3, 1e9, 20);
        let v = vec![C64::new(1.0, 0.0); 20];
        let e = fit_values(&t, &v, &RateModel::new(vec![Basis::InvT, Basis::InvT])).unwrap_err();
        assert!(matches!(e, Error::CollinearBasis(_)));
        assert!(fit_values(&t[..5], &v[..5], &RateModel::new(vec![Basis::One])).is_err());
        let narrow = times(1e3, 1e4, 20);
        assert!(fit_values(&narrow, &v, &RateModel::new(vec![Basis::One])).is_err());
    }

    #[test]
    fn complex_fit() {
        let t = times(1e3, 1e9, 30);
        let c = C64::new(0.3, -1.2);
        let v: Vec<C64> = t.iter().map(|&s| c / s.ln() + C64::new(0.0, 2.0) / s).collect();
        let mut m = RateModel::new(vec![Basis::InvLog, Basis::InvT]);
        m.complex = true;
        let f = fit_values(&t, &v, &m).unwrap();
        assert!((f.coefficients[0] - c).norm() < 1e-8);
    }

    #[test]
    fn menus() {
        let m = expected_models(Classification::FirstKind, MultiplierKind::Schrod, Orthogonality::default());
        assert!(m.basis.contains(&Basis::InvLog));
        let m = expected_models(Classification::SecondKind, MultiplierKind::Schrod, Orthogonality::default());
        assert_eq!(m.basis, vec![Basis::InvT]);
        let m = expected_models(Classification::SecondKind, MultiplierKind::Schrod, Orthogonality { m0_zero: true, m1_zero: true });
        assert_eq!(m.basis, vec![Basis::T2]);
        let m = expected_models(Classification::Regular, MultiplierKind::KgCos, Orthogonality::default());
        assert_eq!(m.basis, vec![Basis::T2, Basis::T32]);
    }

    #[test]
    fn rank_one_factor() {
        let u = [1.0, -2.0, 0.5];
        let c = DMatrix::from_fn(3, 3, |i, j| C64::new(u[i] * u[j], 0.0));
        let (ratio, f) = rank_one(&c);
        assert!(ratio < 1e-12);
        // u is recovered up to a unit phase
        let ph = f[0] / f[0].norm();
        let fr: Vec<f64> = f.iter().map(|z| (z / ph).re).collect();
        let (_, err) = scale_match(&u, &fr);
        assert!(err < 1e-12, "{err}");
    }
}
