//! Radial potential families and zero-energy shooting.
//!
//! Couplings are attractive: a square well of coupling `c` is `V = -c` on
//! `[0, radius]`. Zero-energy thresholds of channel `l` are found by shooting
//! the regular solution `u ~ r^{nu+1/2}` out to a matching radius and
//! comparing with the decaying exterior solution `r^{1/2-nu}`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    SquareWell { c: f64, radius: f64 },
    Gaussian { c: f64, width: f64 },
    TwoWell { c1: f64, c2: f64, r1: f64, r2: f64 },
    Sampled { r: Vec<f64>, v: Vec<f64> },
}

/// A radial potential together with its declared decay class.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub family: Family,
    /// beta with |V(x)| <~ <x>^{-beta}; infinite for compact support.
    #[serde(default = "infinite")]
    pub decay_class: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl PotentialSpec {
    pub fn square_well(c: f64, radius: f64) -> Self {
        PotentialSpec { family: Family::SquareWell { c, radius }, decay_class: f64::INFINITY }
    }

    pub fn gaussian(c: f64, width: f64) -> Self {
        PotentialSpec { family: Family::Gaussian { c, width }, decay_class: f64::INFINITY }
    }

    pub fn two_well(c1: f64, c2: f64, r1: f64, r2: f64) -> Self {
        PotentialSpec { family: Family::TwoWell { c1, c2, r1, r2 }, decay_class: f64::INFINITY }
    }

    /// Two-column table; `decay_class` is taken as declared by the caller.
    pub fn sampled(r: Vec<f64>, v: Vec<f64>, decay_class: f64) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::Config("sampled potential needs matching columns with >= 2 rows".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) || r[0] < 0.0 {
            return Err(Error::Config("sampled radii must be increasing and non-negative".into()));
        }
        Ok(PotentialSpec { family: Family::Sampled { r, v }, decay_class })
    }

    /// Parse whitespace or comma separated `r V(r)` rows; `#` starts a comment.
    pub fn parse_table(text: &str, decay_class: f64) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!("table line {}: expected two columns", n + 1)));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("table line {}: {e}", n + 1)));
            r.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::sampled(r, v, decay_class)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match &self.family {
            Family::SquareWell { c, radius } => {
                if r <= *radius {
                    -c
                } else {
                    0.0
                }
            }
            Family::Gaussian { c, width } => -c * (-(r / width).powi(2)).exp(),
            Family::TwoWell { c1, c2, r1, r2 } => {
                if r <= *r1 {
                    -c1
                } else if r <= *r2 {
                    -c2
                } else {
                    0.0
                }
            }
            Family::Sampled { r: rs, v } => {
                if r >= *rs.last().unwrap() {
                    return 0.0;
                }
                if r <= rs[0] {
                    return v[0];
                }
                let k = rs.partition_point(|&x| x <= r) - 1;
                let t = (r - rs[k]) / (rs[k + 1] - rs[k]);
                v[k] * (1.0 - t) + v[k + 1] * t
            }
        }
    }

    /// Radii where V or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::SquareWell { radius, .. } => vec![*radius],
            Family::Gaussian { .. } => vec![],
            Family::TwoWell { r1, r2, .. } => vec![*r1, *r2],
            Family::Sampled { r, .. } => r.iter().copied().filter(|&x| x > 0.0).collect(),
        }
    }

    /// Radius beyond which V vanishes (to double precision for the Gaussian).
    pub fn support_radius(&self) -> f64 {
        match &self.family {
            Family::SquareWell { radius, .. } => *radius,
            Family::Gaussian { c, width } => width * (37.0 + c.abs().max(1.0).ln()).sqrt(),
            Family::TwoWell { r2, .. } => *r2,
            Family::Sampled { r, .. } => *r.last().unwrap(),
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.family, Family::Gaussian { .. })
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            Family::SquareWell { c, radius } => *c == 0.0 || *radius == 0.0,
            Family::Gaussian { c, .. } => *c == 0.0,
            Family::TwoWell { c1, c2, r1, r2 } => (*c1 == 0.0 || *r1 == 0.0) && (*c2 == 0.0 || *r2 <= *r1),
            Family::Sampled { v, .. } => v.iter().all(|&x| x == 0.0),
        }
    }

    /// `U = sign V` with `U = +1` on the zero set.
    pub fn u_sign(&self, r: f64) -> f64 {
        if self.eval(r) < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// `v = |V|^{1/2}`.
    pub fn v_sqrt(&self, r: f64) -> f64 {
        self.eval(r).abs().sqrt()
    }

    /// `||V||_{L^1(R^4)} = 2 pi^2 int |V| r^3 dr`.
    pub fn l1_norm(&self) -> f64 {
        let (x, w) = crate::discretize::gauss_legendre(40);
        let mut cuts = vec![0.0];
        cuts.extend(self.breakpoints());
        let rs = self.support_radius();
        if *cuts.last().unwrap() < rs {
            cuts.push(rs);
        }
        let mut s = 0.0;
        for k in 0..cuts.len() - 1 {
            let (a, b) = (cuts[k], cuts[k + 1]);
            // split each segment a few times for the Gaussian
            let pieces = 8;
            for p in 0..pieces {
                let lo = a + (b - a) * p as f64 / pieces as f64;
                let hi = a + (b - a) * (p + 1) as f64 / pieces as f64;
                let (hh, mm) = (0.5 * (hi - lo), 0.5 * (hi + lo));
                for (xi, wi) in x.iter().zip(&w) {
                    let r = mm + hh * xi;
                    s += wi * hh * self.eval(r).abs() * r.powi(3);
                }
            }
        }
        2.0 * PI * PI * s
    }

    /// Copy with every coupling multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let family = match &self.family {
            Family::SquareWell { c, radius } => Family::SquareWell { c: c * s, radius: *radius },
            Family::Gaussian { c, width } => Family::Gaussian { c: c * s, width: *width },
            Family::TwoWell { c1, c2, r1, r2 } => Family::TwoWell { c1: c1 * s, c2: c2 * s, r1: *r1, r2: *r2 },
            Family::Sampled { r, v } => Family::Sampled { r: r.clone(), v: v.iter().map(|x| x * s).collect() },
        };
        PotentialSpec { family, decay_class: self.decay_class }
    }
}

// ---------------------------------------------------------------------------
// shooting

/// Dormand-Prince 5(4) for the linear system y' = A(r) y, y = (u, u').
struct Shooter<'a> {
    spec: &'a PotentialSpec,
    barrier: f64,
    rtol: f64,
}

impl Shooter<'_> {
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], (self.barrier / (r * r) + self.spec.eval(r)) * y[0]]
    }

    /// Integrate from a to b (no potential jump inside), renormalizing as needed.
    fn segment(&self, a: f64, b: f64, mut y: [f64; 2]) -> Result<[f64; 2]> {
        const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 7] = [
            [0.0; 6],
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];
        let mut r = a;
        let mut h = ((b - a) * 1e-3).max(1e-6 * a).min(b - a);
        let mut steps = 0usize;
        while r < b {
            if r + h > b {
                h = b - r;
            }
            let mut k = [[0.0; 2]; 7];
            for s in 0..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    ys[0] += h * A[s][j] * kj[0];
                    ys[1] += h * A[s][j] * kj[1];
                }
                k[s] = self.rhs(r + C[s] * h, ys);
            }
            let mut y5 = y;
            let mut y4 = y;
            for s in 0..7 {
                y5[0] += h * B5[s] * k[s][0];
                y5[1] += h * B5[s] * k[s][1];
                y4[0] += h * B4[s] * k[s][0];
                y4[1] += h * B4[s] * k[s][1];
            }
            // error relative to the solution size in the scale-free norm (u, r u')
            let scale = (y5[0].powi(2) + ((r + h) * y5[1]).powi(2)).sqrt().max(1e-300);
            let err = ((y5[0] - y4[0]).powi(2) + ((r + h) * (y5[1] - y4[1])).powi(2)).sqrt() / scale;
            if err <= self.rtol || h < 1e-14 * r.max(1.0) {
                r += h;
                y = y5;
                let n = (y[0].abs() + y[1].abs()).max(1e-300);
                if !(1e-100..=1e100).contains(&n) {
                    y = [y[0] / n, y[1] / n];
                }
                if !y[0].is_finite() || !y[1].is_finite() {
                    return Err(Error::Shooting(format!("non-finite state at r = {r}")));
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * (self.rtol / err).powf(0.2)).clamp(0.2, 5.0) };
            h *= fac;
            steps += 1;
            if steps > 5_000_000 {
                return Err(Error::Shooting("step budget exhausted".into()));
            }
        }
        Ok(y)
    }
}

/// Normalized Wronskian mismatch between the regular solution and `r^{1/2-nu}` at `matching_radius`.
pub fn shoot_defect(ell: usize, spec: &PotentialSpec, matching_radius: f64) -> Result<f64> {
    let nu = ell as f64 + 1.0;
    if matching_radius < spec.support_radius() * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "matching radius {matching_radius} inside the potential support {}",
            spec.support_radius()
        )));
    }
    let sh = Shooter { spec, barrier: nu * nu - 0.25, rtol: 1e-13 };
    let mut cuts: Vec<f64> = spec.breakpoints().into_iter().filter(|&b| b < matching_radius).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let first = cuts.first().copied().unwrap_or(matching_radius).min(matching_radius);
    let r0 = 1e-4 * first;
    let v0 = spec.eval(0.0);
    let s = nu + 0.5;
    let alpha = v0 / (4.0 * nu + 4.0);
    // u = r^s (1 + alpha r^2), scaled by r0^{-s}
    let u = 1.0 + alpha * r0 * r0;
    let up = (s * (1.0 + alpha * r0 * r0) + 2.0 * alpha * r0 * r0) / r0;
    let mut y = [u, up];
    let mut a = r0;
    cuts.push(matching_radius);
    for &b in &cuts {
        if b > a {
            y = sh.segment(a, b, y)?;
            a = b;
        }
    }
    let rr = matching_radius;
    let w = rr * y[1] - (0.5 - nu) * y[0];
    Ok(w / (y[0].powi(2) + (rr * y[1]).powi(2)).sqrt())
}

/// Default matching radius: the potential support.
pub fn default_matching_radius(spec: &PotentialSpec) -> f64 {
    spec.support_radius()
}

/// Result of a one-parameter threshold search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TuneResult {
    pub ell: usize,
    pub c_star: f64,
    pub defect: f64,
    pub iterations: usize,
}

/// Root of the channel-l defect along `family(c)` inside `bracket`.
pub fn tune_threshold<F>(ell: usize, family: F, bracket: (f64, f64)) -> Result<TuneResult>
where
    F: Fn(f64) -> PotentialSpec,
{
    let f = |c: f64| -> Result<f64> {
        let s = family(c);
        shoot_defect(ell, &s, default_matching_radius(&s))
    };
    let (mut lo, mut hi) = bracket;
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let mut it = 0;
    // bisection until the bracket is small, then secant with bracketing safeguard
    while hi - lo > 1e-3 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        it += 1;
    }
    let mut fhi = f(hi)?;
    let mut best = (lo, flo);
    for _ in 0..100 {
        it += 1;
        let mut c = hi - fhi * (hi - lo) / (fhi - flo);
        if !(c > lo && c < hi) {
            c = 0.5 * (lo + hi);
        }
        let fc = f(c)?;
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc.abs() < 1e-13 || (hi - lo) < 1e-14 * c.abs() {
            break;
        }
        if fc.signum() == flo.signum() {
            lo = c;
            flo = fc;
        } else {
            hi = c;
            fhi = fc;
        }
    }
    Ok(TuneResult { ell, c_star: best.0, defect: best.1, iterations: it })
}

/// Couplings `(c1, c2)` of the two-well family where channels 0 and 1 are at threshold at once.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DoubleThreshold {
    pub c1: f64,
    pub c2: f64,
    pub r1: f64,
    pub r2: f64,
    pub defect0: f64,
    pub defect1: f64,
}

/// For each inner coupling, put channel 1 at its first threshold by tuning the outer
/// coupling, then move the inner coupling until channel 0 is at threshold as well.
/// `c2_from` is where the upward scan for the channel-1 threshold starts.
pub fn tune_double_threshold(r1: f64, r2: f64, c1_bracket: (f64, f64), c2_from: f64) -> Result<DoubleThreshold> {
    let outer_for = |c1: f64| -> Result<f64> {
        // scan c2 upwards for the first sign change of the l = 1 defect
        let f = |c2: f64| shoot_defect(1, &PotentialSpec::two_well(c1, c2, r1, r2), r2);
        let mut a = c2_from;
        let mut fa = f(a)?;
        let step = 1.0;
        let mut b = a + step;
        loop {
            let fb = f(b)?;
            if fb.signum() != fa.signum() {
                break;
            }
            a = b;
            fa = fb;
            b += step;
            if b > c2_from + 400.0 {
                return Err(Error::Bracket { lo: c2_from, hi: b });
            }
        }
        Ok(tune_threshold(1, |c2| PotentialSpec::two_well(c1, c2, r1, r2), (a, b))?.c_star)
    };
    let g = |c1: f64| -> Result<(f64, f64)> {
        let c2 = outer_for(c1)?;
        Ok((shoot_defect(0, &PotentialSpec::two_well(c1, c2, r1, r2), r2)?, c2))
    };
    let (mut lo, mut hi) = c1_bracket;
    let (mut glo, _) = g(lo)?;
    let (ghi, _) = g(hi)?;
    if glo.signum() == ghi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (gm, _) = g(mid)?;
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * mid.abs() {
            break;
        }
    }
    let c1 = 0.5 * (lo + hi);
    let (d0, c2) = g(c1)?;
    let d1 = shoot_defect(1, &PotentialSpec::two_well(c1, c2, r1, r2), r2)?;
    Ok(DoubleThreshold { c1, c2, r1, r2, defect0: d0, defect1: d1 })
}

/// Reference two-well geometry for the doubly critical configuration: a deep core of
/// radius 0.2 inside a unit well. Channel 0 reaches its second threshold together with
/// the first threshold of channel 1 for a core coupling near 143.
pub const TWO_WELL_REFERENCE: (f64, f64, (f64, f64), f64) = (0.2, 1.0, (120.0, 170.0), 0.0);

/// First zeros of J_0, J_1, J_2 squared: square-well thresholds of channels 0, 1, 2.
pub const SQUARE_WELL_THRESHOLDS: [f64; 3] = [5.783_185_962_946_784, 14.681_970_642_123_893, 26.374_616_427_163_39];
