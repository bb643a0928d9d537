//! Independent reference for `K(t)`: eigenfunction expansion in a Dirichlet box.
//!
//! Each channel `-u'' + (nu^2 - 1/4) u / r^2 + V u` is discretized by finite volumes on a
//! graded grid over `(0, R)`. Eigenvalues below `4 lambda_1^2` come from Sturm bisection,
//! eigenvectors from inverse iteration. Nothing here touches a resolvent.

use super::{Medium, PropagatorRequest, TimeRow, TimeSeries, ROW_TOLERANCE};
use crate::kernels::{channel_weight, chi, C64};
use crate::potentials::PotentialSpec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Box radius; `None` picks `max(60, 4 t_max)`.
    pub r_box: Option<f64>,
    pub h_inner: f64,
    pub r_inner: f64,
    pub h_outer: f64,
    pub growth: f64,
    /// Highest channel summed.
    pub channels: usize,
    /// Box states in `(-threshold_window, 0]` are kept: the discretization moves the
    /// threshold by a little and a critical model may show a barely bound state.
    pub threshold_window: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { r_box: None, h_inner: 0.005, r_inner: 5.0, h_outer: 0.04, growth: 1.02, channels: 12, threshold_window: 1e-4 }
    }
}

/// Symmetric tridiagonal channel operator in the `W^{1/2}` frame.
struct BoxChannel {
    r: Vec<f64>,
    w: Vec<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
}

fn box_nodes(cfg: &OracleConfig, r_box: f64) -> Vec<f64> {
    let mut r = Vec::new();
    let mut x = 0.0;
    let mut h = cfg.h_inner;
    loop {
        x += h;
        if x >= r_box - 0.5 * h {
            break;
        }
        r.push(x);
        if x >= cfg.r_inner {
            h = (h * cfg.growth).min(cfg.h_outer);
        }
    }
    r
}

impl BoxChannel {
    fn new(v: Option<&PotentialSpec>, ell: usize, nodes: &[f64], r_box: f64) -> Self {
        let n = nodes.len();
        let at = |i: isize| -> f64 {
            if i < 0 {
                0.0
            } else if i as usize >= n {
                r_box
            } else {
                nodes[i as usize]
            }
        };
        let nu = ell as f64 + 1.0;
        let cent = nu * nu - 0.25;
        let mut w = vec![0.0; n];
        let mut a_diag = vec![0.0; n];
        let mut a_off = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let hl = at(i as isize) - at(i as isize - 1);
            let hr = at(i as isize + 1) - at(i as isize);
            w[i] = 0.5 * (hl + hr);
            // cell average of V so that jumps are seen at the right place
            let vbar = match v {
                Some(p) => {
                    let (lo, hi) = (nodes[i] - 0.5 * hl, nodes[i] + 0.5 * hr);
                    (0..16).map(|k| p.eval(lo + (hi - lo) * (k as f64 + 0.5) / 16.0)).sum::<f64>() / 16.0
                }
                None => 0.0,
            };
            a_diag[i] = 1.0 / hl + 1.0 / hr + w[i] * (cent / (nodes[i] * nodes[i]) + vbar);
            if i + 1 < n {
                a_off[i] = -1.0 / hr;
            }
        }
        let d = (0..n).map(|i| a_diag[i] / w[i]).collect();
        let e = (0..n.saturating_sub(1)).map(|i| a_off[i] / (w[i] * w[i + 1]).sqrt()).collect();
        BoxChannel { r: nodes.to_vec(), w, d, e }
    }

    /// Number of eigenvalues below `x`.
    fn count(&self, x: f64) -> usize {
        let mut c = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            c += 1;
        }
        for i in 1..self.d.len() {
            let qq = if q == 0.0 { 1e-300 } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / qq;
            if q < 0.0 {
                c += 1;
            }
        }
        c
    }

    fn isolate(&self, lo: f64, clo: usize, hi: f64, chi: usize, out: &mut Vec<f64>) {
        if chi == clo {
            return;
        }
        // absolute accuracy is what the phases need
        if chi - clo == 1 || hi - lo < 1e-13 {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-13 {
                let m = 0.5 * (a + b);
                if self.count(m) > clo {
                    b = m;
                } else {
                    a = m;
                }
            }
            for _ in clo..chi {
                out.push(0.5 * (a + b));
            }
            return;
        }
        let m = 0.5 * (lo + hi);
        let cm = self.count(m);
        self.isolate(lo, clo, m, cm, out);
        self.isolate(m, cm, hi, chi, out);
    }

    /// Eigenvalues in `(e_min, e_max)`, ascending.
    fn eigenvalues(&self, e_min: f64, e_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let c0 = self.count(e_min);
        let c1 = self.count(e_max);
        self.isolate(e_min, c0, e_max, c1, &mut out);
        out
    }

    /// Normalized eigenvector in the `W^{1/2}` frame by inverse iteration.
    fn eigenvector(&self, e: f64) -> Vec<f64> {
        let n = self.d.len();
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        let d: Vec<f64> = self.d.iter().map(|x| x - e).collect();
        for _ in 0..3 {
            solve_tridiagonal(&self.e, &d, &self.e, &mut y);
            let s = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            y.iter_mut().for_each(|x| *x /= s);
        }
        y
    }

    /// `u(r)` from the frame vector, linear between nodes.
    fn value(&self, y: &[f64], r: f64) -> f64 {
        let u = |i: usize| y[i] / self.w[i].sqrt();
        let k = self.r.partition_point(|&x| x < r);
        if k == 0 {
            return u(0) * r / self.r[0];
        }
        if k >= self.r.len() {
            return 0.0;
        }
        let (a, b) = (self.r[k - 1], self.r[k]);
        let s = (r - a) / (b - a);
        u(k - 1) * (1.0 - s) + u(k) * s
    }
}

/// Tridiagonal solve with partial pivoting (the LAPACK `gttrf`/`gttrs` scheme).
fn solve_tridiagonal(dl: &[f64], d: &[f64], du: &[f64], b: &mut [f64]) {
    let n = d.len();
    if n == 1 {
        b[0] /= if d[0] == 0.0 { 1e-300 } else { d[0] };
        return;
    }
    let (mut dl, mut d, mut du) = (dl.to_vec(), d.to_vec(), du.to_vec());
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swap = vec![false; n - 1];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let f = if d[i] != 0.0 { dl[i] / d[i] } else { 0.0 };
            dl[i] = f;
            d[i + 1] -= f * du[i];
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            let t = du[i];
            du[i] = d[i + 1];
            d[i + 1] = t - f * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            swap[i] = true;
        }
    }
    let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    for x in d.iter_mut() {
        if x.abs() < 1e-300 * scale {
            *x = 1e-300 * scale;
        }
    }
    for i in 0..n - 1 {
        if swap[i] {
            let t = b[i];
            b[i] = b[i + 1];
            b[i + 1] = t - dl[i] * b[i];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    b[n - 1] /= d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

/// `K(t; x, y)` from the box eigenfunctions of every channel up to `cfg.channels`.
pub fn eig_oracle(medium: &Medium, req: &PropagatorRequest, cfg: &OracleConfig) -> Result<TimeSeries> {
    req.validate()?;
    let t_max = req.times.iter().copied().fold(0.0, f64::max);
    let r_box = cfg.r_box.unwrap_or((4.0 * t_max).max(60.0));
    let t_box = r_box / 4.0;
    if t_max > t_box {
        return Err(Error::StaleOracle { t: t_max, t_box });
    }
    if req.pairs.iter().any(|p| p.r1.max(p.r2) >= 0.5 * r_box) {
        return Err(Error::Config("pair radius too close to the box wall".into()));
    }
    let spec = match medium {
        Medium::Free => None,
        Medium::Potential { problem, .. } => Some(&problem.potential),
    };
    let nodes = box_nodes(cfg, r_box);
    let l1 = req.lambda1;
    let e_max = 4.0 * l1 * l1;
    let nt = req.times.len();
    let np = req.pairs.len();
    let mut acc = vec![C64::new(0.0, 0.0); nt * np];
    // magnitude bookkeeping for an error estimate
    let mut mag = vec![0.0f64; nt * np];
    for ell in 0..=cfg.channels {
        let ch = BoxChannel::new(spec, ell, &nodes, r_box);
        let evals = ch.eigenvalues(-cfg.threshold_window, e_max);
        for &e in &evals {
            let lambda = e.max(0.0).sqrt();
            let c = chi(lambda, l1);
            if c == 0.0 {
                continue;
            }
            let y = ch.eigenvector(e);
            for (q, p) in req.pairs.iter().enumerate() {
                let uu = ch.value(&y, p.r1) * ch.value(&y, p.r2);
                let ang = (p.r1 * p.r2).powf(-1.5) * channel_weight(ell, p.theta.cos());
                for (k, &t) in req.times.iter().enumerate() {
                    let term = req.multiplier.value(t, lambda) * (c * uu * ang);
                    acc[k * np + q] += term;
                    mag[k * np + q] += term.norm();
                }
            }
        }
    }
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for (k, &t) in req.times.iter().enumerate() {
        for q in 0..np {
            let value = acc[k * np + q];
            // cancellation against the rounding of the eigen sum
            let err_est = 1e-13 * mag[k * np + q];
            let row = TimeRow { t, pair_id: q, value, err_est };
            if err_est < ROW_TOLERANCE * value.norm() {
                rows.push(row);
            } else {
                flagged.push(row);
            }
        }
    }
    Ok(TimeSeries {
        multiplier: req.multiplier,
        classification: format!("{}-oracle", medium.label()),
        pairs: req.pairs.clone(),
        rows,
        flagged,
        profile: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let dl = [1.0, 4.0, -2.0];
        let d = [1e-3, 2.0, 0.5, 3.0];
        let du = [2.0, -1.0, 1.5];
        let x = [1.0, -2.0, 0.5, 4.0];
        let mut b = [0.0; 4];
        for i in 0..4 {
            b[i] = d[i] * x[i];
            if i > 0 {
                b[i] += dl[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += du[i] * x[i + 1];
            }
        }
        solve_tridiagonal(&dl, &d, &du, &mut b);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn free_box_spectrum() {
        // l = 0 free box: eigenvalues are (j_{1,k}/R)^2
        let cfg = OracleConfig { h_inner: 0.01, h_outer: 0.01, ..Default::default() };
        let r_box = 20.0;
        let nodes = box_nodes(&cfg, r_box);
        let ch = BoxChannel::new(None, 0, &nodes, r_box);
        let ev = ch.eigenvalues(0.0, 0.25);
        let j1 = [3.831_705_970_207_512, 7.015_586_669_815_619, 10.173_468_135_062_72];
        for (e, j) in ev.iter().zip(j1) {
            let want = (j / r_box).powi(2);
            assert!((e / want - 1.0).abs() < 1e-4, "{e} {want}");
        }
    }
}
