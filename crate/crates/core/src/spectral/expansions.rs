//! Residual-exponent checks of the low-energy expansions.

use super::*;
use crate::discretize::hs_norm;

const MEXP_REQUIRED: [f64; 4] = [1.5, 1.5, 3.5, 5.5];

fn slope_row(name: &str, lambdas: &[f64], res: &[f64], floor: &[f64], required: f64) -> ExpansionRow {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for ((&l, &r), &f) in lambdas.iter().zip(res).zip(floor) {
        if r > f && r > 0.0 {
            x.push(l.ln());
            y.push(r.ln());
        }
    }
    if x.len() < 3 {
        return ExpansionRow { name: name.into(), value: f64::NAN, required, r_squared: 0.0, pass: false, inconclusive: true };
    }
    let (_, b, r2) = linear_fit(&x, &y);
    ExpansionRow { name: name.into(), value: b, required, r_squared: r2, pass: b >= required, inconclusive: r2 < 0.95 }
}

fn value_row(name: &str, value: f64, required: f64, pass: bool) -> ExpansionRow {
    ExpansionRow { name: name.into(), value, required, r_squared: 1.0, pass, inconclusive: false }
}

/// Relative HS error of `lambda^2 M^{-1}` against `sign * S_2 D_2 S_2` over the channels of `S_2`.
pub fn d2_limit_error(p: &Problem, zd: &ZeroEnergyData, lambda: f64, sign: f64) -> Result<f64> {
    let n = p.n();
    let mut chans: Vec<usize> = zd.s2.iter().map(|c| c.ell).collect();
    chans.dedup();
    let (mut num, mut den) = (0.0, 0.0);
    for ell in chans {
        let inv = p.invert_m(zd, SpectralPoint::plus(lambda), ell, InvertMethod::JensenNenciu)?;
        let d2 = zd.d2_block(ell, n).map(|x| C64::new(sign * x, 0.0));
        num += hs_norm(&(inv.matrix * C64::new(lambda * lambda, 0.0) - &d2)).powi(2);
        den += hs_norm(&d2).powi(2);
    }
    Ok((num / den).sqrt())
}

/// Fit of `1/(lambda^2 f^+)` against `log lambda`: `(slope, intercept, r^2 of the real part)`.
pub fn f_fit(p: &Problem, zd: &ZeroEnergyData, lambdas: &[f64]) -> Result<(f64, C64, f64)> {
    let mut x = Vec::new();
    let (mut yr, mut yi) = (Vec::new(), Vec::new());
    for &l in lambdas {
        let f = p.f_scalar(zd, SpectralPoint::plus(l), 0)?;
        let y = 1.0 / (f * l * l);
        x.push(l.ln());
        yr.push(y.re);
        yi.push(y.im);
    }
    let (ar, br, r2) = linear_fit(&x, &yr);
    let ai = yi.iter().sum::<f64>() / yi.len() as f64;
    Ok((br, C64::new(ar, ai), r2))
}

pub(super) fn report(p: &Problem, zd: &ZeroEnergyData, kind: ExpansionKind) -> Result<ExpansionReport> {
    let n = p.n();
    let nch = p.channels() + 1;
    let lambdas = lambda_samples(1e-4, 1e-1, 24);
    let mut rows = Vec::new();
    match kind {
        ExpansionKind::Mexp => {
            let terms: Vec<_> = (0..nch).map(|ell| p.expansion_terms(ell, 3)).collect::<Result<_>>()?;
            for m in 0..4 {
                let mut res = Vec::new();
                let mut floor = Vec::new();
                for &l in &lambdas {
                    let (r, base) = p.mexp_residual(&terms, SpectralPoint::plus(l), m)?;
                    res.push(r);
                    floor.push(1e-11 * base);
                }
                rows.push(slope_row(&format!("Mexp{m}"), &lambdas, &res, &floor, MEXP_REQUIRED[m]));
            }
        }
        ExpansionKind::MplusS => {
            let mut worst = f64::INFINITY;
            for &l in &lambda_samples(1e-4, 0.5, 12) {
                for ell in 0..nch {
                    let m0 = p.assemble_m0(ell, SpectralPoint::plus(l))?;
                    let a = complex(&zd.t_exact[ell]) + m0 + complex(&zd.s1_matrix(ell, n));
                    let sv = a.singular_values();
                    worst = worst.min(sv.min());
                }
            }
            rows.push(value_row("sigma_min(M+S1)", worst, 1e-8, worst > 1e-8));
        }
        ExpansionKind::First | ExpansionKind::Third => {
            if zd.resonance.is_none() {
                return Err(Error::Config("no resonance direction".into()));
            }
            let (_, icpt, r2) = f_fit(p, zd, &lambda_samples(1e-4, 1e-2, 24))?;
            rows.push(value_row("f_loglinear_r2", r2, 0.999, r2 >= 0.999));
            rows.push(value_row("f_intercept_imag", icpt.im, 0.0, icpt.im.abs() > 1e-12));
            // (f^+ - f^-) lambda^2 log^2 lambda stays between positive constants
            let mut scaled = Vec::new();
            for &l in &lambda_samples(1e-5, 1e-2, 16) {
                let fp = p.f_scalar(zd, SpectralPoint::plus(l), 0)?;
                let fm = p.f_scalar(zd, SpectralPoint::minus(l), 0)?;
                scaled.push(((fp - fm) * l * l * l.ln().powi(2)).norm());
            }
            let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            rows.push(value_row("f_diff_spread", hi / lo, 10.0, lo > 0.0 && hi / lo < 10.0));
            if kind == ExpansionKind::Third && !zd.s2.is_empty() {
                push_d2_rows(p, zd, &lambdas, &mut rows)?;
            }
        }
        ExpansionKind::Second => {
            if zd.s2.is_empty() {
                return Err(Error::Config("no eigenvalue at zero".into()));
            }
            push_d2_rows(p, zd, &lambdas, &mut rows)?;
        }
        ExpansionKind::Long => {
            let (mut r1, mut r2, mut floor) = (Vec::new(), Vec::new(), Vec::new());
            for &l in &lambdas {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for ell in 0..nch {
                    let m0 = p.assemble_m0(ell, SpectralPoint::plus(l))?;
                    let d0 = complex(&zd.d0[ell]);
                    let a_mat = complex(&zd.t_exact[ell]) + &m0 + complex(&zd.s1_matrix(ell, n));
                    let inv = a_mat.try_inverse().ok_or(Error::NearSingular { lambda: l, cond: f64::INFINITY })?;
                    let first = &inv - &d0;
                    let second = &first + &d0 * &m0 * &d0;
                    a += hs_norm(&first).powi(2);
                    b += hs_norm(&second).powi(2);
                    c += hs_norm(&d0).powi(2);
                }
                r1.push(a.sqrt());
                r2.push(b.sqrt());
                floor.push(1e-12 * c.sqrt());
            }
            rows.push(slope_row("(M+S1)^-1 - D0", &lambdas, &r1, &floor, 1.5));
            rows.push(slope_row("(M+S1)^-1 - D0 + D0 M0 D0", &lambdas, &r2, &floor, 3.5));
        }
        ExpansionKind::Cancel => {
            if zd.s2.is_empty() {
                return Err(Error::Config("no eigenvalue at zero".into()));
            }
            let g2 = p.s2_block(&zd.s2, 2)?;
            let d2 = zd.d2.as_ref().unwrap();
            let block = d2 * g2 * d2;
            let v = block.norm();
            rows.push(value_row("|w Pe V G2 V Pe w|", v, 1e-8, v <= 1e-8));
        }
    }
    Ok(ExpansionReport { kind, rows })
}

fn push_d2_rows(p: &Problem, zd: &ZeroEnergyData, lambdas: &[f64], rows: &mut Vec<ExpansionRow>) -> Result<()> {
    let e = d2_limit_error(p, zd, 1e-4, 1.0)?;
    rows.push(value_row("lambda^2 M^-1 - D2 at 1e-4", e, 1e-2, e <= 1e-2));
    let e_lit = d2_limit_error(p, zd, 1e-4, -1.0)?;
    // with the positive G_0 this sign cannot hold; reported for comparison only
    rows.push(ExpansionRow {
        name: "lambda^2 M^-1 + D2 at 1e-4".into(),
        value: e_lit,
        required: 1e-2,
        r_squared: 1.0,
        pass: e_lit <= 1e-2,
        inconclusive: true,
    });
    let res: Vec<f64> = lambdas.iter().map(|&l| d2_limit_error(p, zd, l, 1.0)).collect::<Result<_>>()?;
    let floor = vec![1e-12; res.len()];
    rows.push(slope_row("lambda^2 M^-1 - D2 slope", lambdas, &res, &floor, 0.9));
    Ok(())
}
