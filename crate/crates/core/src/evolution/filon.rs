//! Filon quadrature on Clenshaw-Curtis panels.
//!
//! The amplitude is sampled at the 13 Chebyshev-Lobatto points of each panel,
//! converted to Legendre coefficients, and integrated exactly against
//! `exp(i tau x)` through `int_{-1}^{1} P_k(x) e^{i w x} dx = 2 i^k j_k(w)`.
//! Cost does not depend on `tau`.

use crate::kernels::C64;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

pub const PANEL_NODES: usize = 13;

/// Spherical Bessel functions `j_0..=j_kmax` at `w >= 0`.
pub fn spherical_bessel(kmax: usize, w: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if w < 0.5 {
        // power series
        let mut df = 1.0; // (2k+1)!!
        for (k, o) in out.iter_mut().enumerate() {
            df *= (2 * k + 1) as f64;
            let mut term = w.powi(k as i32) / df;
            let mut s = term;
            for m in 1..12 {
                term *= -0.5 * w * w / (m as f64 * (2 * k + 2 * m + 1) as f64);
                s += term;
            }
            *o = s;
        }
        return out;
    }
    let (s, c) = w.sin_cos();
    let j0 = s / w;
    if w >= kmax as f64 {
        out[0] = j0;
        if kmax >= 1 {
            out[1] = s / (w * w) - c / w;
        }
        for k in 1..kmax {
            out[k + 1] = (2 * k + 1) as f64 / w * out[k] - out[k - 1];
        }
        return out;
    }
    // Miller: downward from well above kmax, normalized by j_0
    let start = kmax + 20 + w as usize;
    let (mut jp, mut j) = (0.0, 1e-30);
    let mut tmp = vec![0.0; start + 1];
    for k in (1..=start).rev() {
        let jm = (2 * k + 1) as f64 / w * j - jp;
        jp = j;
        j = jm;
        if k - 1 <= kmax {
            tmp[k - 1] = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            for t in tmp.iter_mut() {
                *t *= 1e-250;
            }
        }
    }
    let scale = j0 / tmp[0];
    for k in 0..=kmax {
        out[k] = tmp[k] * scale;
    }
    out
}

/// Legendre polynomials `P_0..P_kmax` at `x`.
fn legendre(kmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![1.0; kmax + 1];
    if kmax >= 1 {
        p[1] = x;
    }
    for k in 1..kmax {
        p[k + 1] = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

/// Chebyshev-Lobatto points on [-1, 1], ascending.
pub fn lobatto(n: usize) -> Vec<f64> {
    (0..n).map(|j| -(PI * j as f64 / (n - 1) as f64).cos()).collect()
}

/// Values-to-Legendre-coefficients maps for the full rule and the embedded half rule.
#[derive(Debug, Clone)]
pub struct LegendreMaps {
    pub full: DMatrix<f64>,
    pub half: DMatrix<f64>,
}

impl LegendreMaps {
    pub fn new() -> Self {
        let build = |x: &[f64]| {
            let n = x.len();
            let mut v = DMatrix::zeros(n, n);
            for (i, &xi) in x.iter().enumerate() {
                for (k, p) in legendre(n - 1, xi).into_iter().enumerate() {
                    v[(i, k)] = p;
                }
            }
            v.try_inverse().expect("Legendre Vandermonde is invertible")
        };
        let x = lobatto(PANEL_NODES);
        let xh: Vec<f64> = x.iter().step_by(2).copied().collect();
        LegendreMaps { full: build(&x), half: build(&xh) }
    }
}

impl Default for LegendreMaps {
    fn default() -> Self {
        Self::new()
    }
}

/// One panel `[lo, hi]` of the offset variable with Legendre coefficients per output.
#[derive(Debug, Clone)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    /// `coeffs[o]` for output `o`.
    pub full: Vec<Vec<C64>>,
    pub half: Vec<Vec<C64>>,
    /// `(|a_11| + |a_12|) / (|a_5| + |a_6|)`, capped at 1.
    pub decay: Vec<f64>,
}

/// `int_lo^hi e^{i tau y} g(y) dy` for a panel given Legendre coefficients of `g`.
pub fn panel_moment(lo: f64, hi: f64, coeffs: &[C64], tau: f64) -> C64 {
    let hw = 0.5 * (hi - lo);
    let c = 0.5 * (hi + lo);
    let w = (tau * hw).abs();
    let j = spherical_bessel(coeffs.len() - 1, w);
    let mut s = C64::new(0.0, 0.0);
    let mut ik = C64::new(1.0, 0.0);
    let i = C64::new(0.0, tau.signum());
    for (k, a) in coeffs.iter().enumerate() {
        s += a * ik * (2.0 * j[k]);
        ik *= i;
    }
    s * hw * C64::from_polar(1.0, tau * c)
}

/// Dyadic panel edges: `[d_min, 2 d_min, ..., d_break]` refined geometrically, then
/// `transition` equal panels on `[d_break, d_end]`.
pub fn dyadic_edges(d_min: f64, d_break: f64, d_end: f64, transition: usize) -> Vec<f64> {
    let mut edges = Vec::new();
    let mut d = d_break;
    while d > d_min * 1.5 {
        edges.push(d);
        d *= 0.5;
    }
    edges.push(d);
    edges.reverse();
    for k in 1..=transition {
        edges.push(d_break + (d_end - d_break) * k as f64 / transition as f64);
    }
    edges
}

/// Tail `int_0^{d0} g` from samples at `d0, 2 d0, 4 d0` (phase constant there).
///
/// With `logarithmic` the model is `d g(d) = 1/(A s^2 + B s + C)`, `s = ln d`, which is the
/// shape produced by a zero-energy resonance; otherwise a power law `g ~ d^p`.
pub fn tail_integral(d0: f64, g: [C64; 3], logarithmic: bool) -> C64 {
    let power = || {
        let mut out = C64::new(0.0, 0.0);
        // componentwise on re and im
        for part in 0..2 {
            let pick = |z: C64| if part == 0 { z.re } else { z.im };
            let (g0, g1) = (pick(g[0]), pick(g[1]));
            let v = if g0 == 0.0 {
                0.0
            } else {
                let p = if g1 / g0 > 0.0 { (g1 / g0).log2() } else { 0.0 };
                let p = p.max(-0.9);
                g0 * d0 / (p + 1.0)
            };
            if part == 0 {
                out.re = v;
            } else {
                out.im = v;
            }
        }
        out
    };
    if !logarithmic {
        return power();
    }
    let mut out = C64::new(0.0, 0.0);
    for part in 0..2 {
        let pick = |z: C64| if part == 0 { z.re } else { z.im };
        let s: Vec<f64> = (0..3).map(|k| (d0 * 2f64.powi(k)).ln()).collect();
        let q: Vec<f64> = (0..3).map(|k| 1.0 / (pick(g[k]) * d0 * 2f64.powi(k as i32))).collect();
        let v = if q.iter().any(|x| !x.is_finite()) {
            None
        } else {
            // quadratic through three points
            let h = s[1] - s[0];
            let a = (q[2] - 2.0 * q[1] + q[0]) / (2.0 * h * h);
            let b = (q[1] - q[0]) / h - a * (s[1] + s[0]);
            let c = q[0] - a * s[0] * s[0] - b * s[0];
            let disc = 4.0 * a * c - b * b;
            if disc > 0.0 && a != 0.0 {
                let sd = disc.sqrt();
                let f = |x: f64| 2.0 / sd * ((2.0 * a * x + b) / sd).atan();
                Some(f(s[0]) + a.signum() * PI / sd)
            } else {
                None
            }
        };
        let v = v.unwrap_or_else(|| {
            let p = power();
            if part == 0 {
                p.re
            } else {
                p.im
            }
        });
        if part == 0 {
            out.re = v;
        } else {
            out.im = v;
        }
    }
    out
}

/// A vector-valued Filon integral `int_0^{d_end} e^{i tau d} g_o(d) dd`, `o = 0..outputs`.
#[derive(Debug, Clone)]
pub struct FilonIntegral {
    pub panels: Vec<Panel>,
    pub tail: Vec<C64>,
    pub outputs: usize,
    /// Amplitude evaluations spent.
    pub evaluations: usize,
}

impl FilonIntegral {
    /// Sample `g` on the panels between `edges` and fit the tail below `edges[0]`.
    pub fn build<F>(edges: &[f64], mut g: F, logarithmic_tail: bool) -> crate::Result<Self>
    where
        F: FnMut(f64) -> crate::Result<Vec<C64>>,
    {
        let maps = LegendreMaps::new();
        let x = lobatto(PANEL_NODES);
        let mut panels = Vec::with_capacity(edges.len() - 1);
        let mut last: Option<Vec<C64>> = None;
        let mut outputs = 0;
        let mut evaluations = 0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut vals: Vec<Vec<C64>> = Vec::with_capacity(PANEL_NODES);
            for (j, &xj) in x.iter().enumerate() {
                let d = if j == 0 {
                    lo
                } else if j == PANEL_NODES - 1 {
                    hi
                } else {
                    0.5 * (hi + lo) + 0.5 * (hi - lo) * xj
                };
                if j == 0 {
                    if let Some(prev) = last.take() {
                        vals.push(prev);
                        continue;
                    }
                }
                let v = g(d)?;
                evaluations += 1;
                outputs = v.len();
                vals.push(v);
            }
            last = Some(vals[PANEL_NODES - 1].clone());
            let mut full = Vec::with_capacity(outputs);
            let mut half = Vec::with_capacity(outputs);
            for o in 0..outputs {
                let f = DVector::from_iterator(PANEL_NODES, vals.iter().map(|v| v[o]));
                let fh = DVector::from_iterator(PANEL_NODES.div_ceil(2), vals.iter().step_by(2).map(|v| v[o]));
                let cf = maps.full.map(|a| C64::new(a, 0.0)) * f;
                let ch = maps.half.map(|a| C64::new(a, 0.0)) * fh;
                full.push(cf.iter().copied().collect());
                half.push(ch.iter().copied().collect());
            }
            let decay = full
                .iter()
                .map(|c: &Vec<C64>| {
                    let n = c.len();
                    let hi_mass = c[n - 1].norm() + c[n - 2].norm();
                    let mid = c[n / 2 - 1].norm() + c[n / 2].norm();
                    if mid > 0.0 {
                        (hi_mass / mid).min(1.0)
                    } else if hi_mass > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            panels.push(Panel { lo, hi, full, half, decay });
        }
        // tail samples at d0, 2 d0, 4 d0, read off the interpolants
        let d0 = edges[0];
        let samples: Vec<Vec<C64>> = (0..3)
            .map(|k| {
                let d = d0 * (1 << k) as f64;
                let p = panels.iter().find(|p| d <= p.hi).unwrap_or(&panels[panels.len() - 1]);
                (0..outputs).map(|o| eval_legendre(&p.full[o], p.lo, p.hi, d)).collect()
            })
            .collect();
        let tail = (0..outputs)
            .map(|o| tail_integral(d0, [samples[0][o], samples[1][o], samples[2][o]], logarithmic_tail))
            .collect();
        Ok(FilonIntegral { panels, tail, outputs, evaluations })
    }

    /// Values and error estimates at frequency `tau`.
    ///
    /// Per panel the error is the full-minus-half difference scaled by how much the
    /// Legendre coefficients decayed between the two rules; both rules interpolate the
    /// panel ends, so the estimate decays with `tau` like the true error does.
    pub fn eval(&self, tau: f64) -> Vec<(C64, f64)> {
        (0..self.outputs)
            .map(|o| {
                let mut full = self.tail[o];
                let mut err = 0.0;
                let mut mass = self.tail[o].norm();
                for p in &self.panels {
                    let f = panel_moment(p.lo, p.hi, &p.full[o], tau);
                    let h = panel_moment(p.lo, p.hi, &p.half[o], tau);
                    full += f;
                    mass += f.norm();
                    err += p.decay[o] * (f - h).norm();
                }
                (full, err + 4e-16 * mass)
            })
            .collect()
    }
}

/// Evaluate a Legendre series of a panel at `d`.
pub fn eval_legendre(coeffs: &[C64], lo: f64, hi: f64, d: f64) -> C64 {
    let x = (2.0 * d - lo - hi) / (hi - lo);
    legendre(coeffs.len() - 1, x).iter().zip(coeffs).map(|(p, a)| a * *p).sum()
}
