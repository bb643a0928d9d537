//! Free resolvent kernels in four dimensions and their partial-wave pieces.
//!
//! Conventions: `R_0^{+-}(lambda^2)(d) = +-(i/4) lambda/(2 pi d) H_1^{+-}(lambda d)`,
//! whose `lambda -> 0` limit is `+1/(4 pi^2 d^2)`. The zero-energy kernel
//! `G_0` uses that positive sign throughout.
//!
//! Channel kernels act on `L^2(dr)` after `u = r^{3/2} f`. The full kernel is
//! recovered as `sum_l (r s)^{-3/2} k_l(r, s) (l+1)/(2 pi^2) U_l(cos theta)`.

use crate::error::{Error, Result};
use crate::specfun::{self, h_scaled, h_scaled_rem, j_scaled, j_scaled_rem, j_scaled_zero};
use crate::Sign;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

pub type C64 = Complex64;
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Spectral parameter lambda > 0 and the side of the cut.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub sign: Sign,
}

impl SpectralPoint {
    pub fn new(lambda: f64, sign: Sign) -> Self {
        SpectralPoint { lambda, sign }
    }
    pub fn plus(lambda: f64) -> Self {
        Self::new(lambda, Sign::Plus)
    }
    pub fn minus(lambda: f64) -> Self {
        Self::new(lambda, Sign::Minus)
    }
    pub fn flipped(self) -> Self {
        Self::new(self.lambda, self.sign.flip())
    }
}

/// Arguments of the auxiliary functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxArgs {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxKind {
    A,
    F,
    G,
    GtildePlus,
    GtildeMinus,
}

/// Quintic smoothstep cutoff: 1 on [0, l1], 0 beyond 2 l1, C^2 in between.
pub fn chi(lambda: f64, lambda1: f64) -> f64 {
    let x = (lambda.abs() - lambda1) / lambda1;
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// Derivative of [`chi`] in lambda.
pub fn chi_prime(lambda: f64, lambda1: f64) -> f64 {
    let x = (lambda.abs() - lambda1) / lambda1;
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -30.0 * x * x * (1.0 - x) * (1.0 - x) / lambda1 * lambda.signum()
    }
}

// ---------------------------------------------------------------------------
// full-space kernels

/// `R_0^{+-}(lambda^2)` at distance `d`.
pub fn free_kernel_4d(pt: SpectralPoint, d: f64) -> Result<C64> {
    if !(d > 0.0) {
        return Err(Error::SingularDistance);
    }
    if !(pt.lambda > 0.0) {
        return Err(Error::Domain(pt.lambda));
    }
    let z = pt.lambda * d;
    Ok(pt.sign.s() * I * 0.25 * h_scaled(pt.sign, 1, z) / (2.0 * PI * d * d))
}

/// `R_0^{+-}(lambda^2) - G_0` at distance `d`, accurate for small `lambda d`.
pub fn free_kernel_4d_minus_g0(pt: SpectralPoint, d: f64) -> Result<C64> {
    if !(d > 0.0) {
        return Err(Error::SingularDistance);
    }
    let z = pt.lambda * d;
    Ok(pt.sign.s() * I * 0.25 * h_scaled_rem(pt.sign, 1, z) / (2.0 * PI * d * d))
}

/// `[R_0^+ - R_0^-](lambda^2)(d) = i lambda J_1(lambda d)/(4 pi d)`.
pub fn free_density(lambda: f64, d: f64) -> C64 {
    I * lambda * lambda * j_scaled(1, lambda * d) / (4.0 * PI)
}

/// Two-dimensional outgoing/incoming kernel `+-(i/4) H_0^{+-}(lambda d)`.
pub fn free_kernel_2d(pt: SpectralPoint, d: f64) -> Result<C64> {
    if !(d > 0.0) {
        return Err(Error::SingularDistance);
    }
    let h = specfun::hankel(pt.sign, 0, pt.lambda * d)?;
    Ok(pt.sign.s() * I * 0.25 * h)
}

/// `(1/lambda) d/dlambda G4 - c G2` with the derivative by central difference.
pub fn dimension_reduction_residual(pt: SpectralPoint, d: f64, c: f64) -> Result<f64> {
    let h = pt.lambda * 1e-5;
    let up = free_kernel_4d(SpectralPoint::new(pt.lambda + h, pt.sign), d)?;
    let dn = free_kernel_4d(SpectralPoint::new(pt.lambda - h, pt.sign), d)?;
    let deriv = (up - dn) / (2.0 * h);
    Ok((deriv / pt.lambda - c * free_kernel_2d(pt, d)?).norm())
}

/// Residual of the recurrence `(1/lambda) d_lambda G4 = G2/(2 pi)`.
pub fn dimension_reduction_check(pt: SpectralPoint, d: f64) -> Result<f64> {
    dimension_reduction_residual(pt, d, 1.0 / (2.0 * PI))
}

// ---------------------------------------------------------------------------
// channel kernels

fn order_of(ell: usize) -> u32 {
    ell as u32 + 1
}

/// Half-line kernel `+-(i pi/2) sqrt(r s) J_nu(lambda r<) H_nu(lambda r>)`.
pub fn channel_kernel(ell: usize, pt: SpectralPoint, r: f64, rp: f64) -> C64 {
    let nu = order_of(ell);
    let (a, b) = if r <= rp { (r, rp) } else { (rp, r) };
    let ratio = (a / b).powi(nu as i32);
    pt.sign.s() * I * (0.5 * PI) * (r * rp).sqrt() * ratio
        * j_scaled(nu, pt.lambda * a)
        * h_scaled(pt.sign, nu, pt.lambda * b)
}

/// Zero-energy channel kernel `sqrt(r s) (r</r>)^nu / (2 nu)`.
pub fn channel_kernel_zero(ell: usize, r: f64, rp: f64) -> f64 {
    let nu = order_of(ell);
    let (a, b) = if r <= rp { (r, rp) } else { (rp, r) };
    (r * rp).sqrt() * (a / b).powi(nu as i32) / (2.0 * nu as f64)
}

/// `k_l(lambda) - k_l(0)` without cancellation.
pub fn channel_kernel_diff(ell: usize, pt: SpectralPoint, r: f64, rp: f64) -> C64 {
    let nu = order_of(ell);
    let (a, b) = if r <= rp { (r, rp) } else { (rp, r) };
    let ratio = (a / b).powi(nu as i32);
    let za = pt.lambda * a;
    let zb = pt.lambda * b;
    let inner = j_scaled_rem(nu, za) * h_scaled(pt.sign, nu, zb)
        + j_scaled_zero(nu) * h_scaled_rem(pt.sign, nu, zb);
    pt.sign.s() * I * (0.5 * PI) * (r * rp).sqrt() * ratio * inner
}

/// `k_l^+ - k_l^- = i pi sqrt(r s) J_nu(lambda r) J_nu(lambda s)`.
pub fn channel_jump(ell: usize, lambda: f64, r: f64, rp: f64) -> C64 {
    let nu = order_of(ell);
    I * PI * channel_regular(nu, lambda, r) * channel_regular(nu, lambda, rp)
}

/// `sqrt(r) J_nu(lambda r)` via the scaled function.
pub fn channel_regular(nu: u32, lambda: f64, r: f64) -> f64 {
    r.sqrt() * (lambda * r).powi(nu as i32) * j_scaled(nu, lambda * r)
}

/// Chebyshev polynomial of the second kind, `U_l(x)`.
pub fn chebyshev_u(ell: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if ell == 0 {
        return 1.0;
    }
    for _ in 1..ell {
        let c = 2.0 * x * b - a;
        a = b;
        b = c;
    }
    b
}

/// Angular weight `(l+1)/(2 pi^2) U_l(cos theta)` of the channel resummation.
pub fn channel_weight(ell: usize, cos_theta: f64) -> f64 {
    (ell as f64 + 1.0) / (2.0 * PI * PI) * chebyshev_u(ell, cos_theta)
}

/// Normalization linking a channel kernel to the angular projection of a full kernel:
/// `k_l(r, s) = (r s)^{3/2} * channel_projection_factor(l) * int_0^pi K U_l sin^2`.
pub fn channel_projection_factor(ell: usize) -> f64 {
    4.0 * PI / (ell as f64 + 1.0)
}

// ---------------------------------------------------------------------------
// expansion constants

/// Real constants `a_j`, complex `z_j^+`, and `c_j` of the low-energy expansion of `R_0^+`.
#[derive(Debug, Clone)]
pub struct ExpansionConstants {
    /// `a_j`, j = 1..=3 at index j-1.
    pub a: [f64; 3],
    /// `z_j^+`, j = 1..=3 at index j-1.
    pub z_plus: [C64; 3],
    /// `c_j`, j = 0..=5 (c_0 = 1/(4 pi^2); even j >= 2 are 1).
    pub c: [f64; 6],
}

/// `C_k`: coefficient of `z^(2k+2)` in `z J_1(z)`.
fn zj1_coeff(k: u32) -> f64 {
    let f = |n: u32| (1..=n).fold(1.0, |a, i| a * i as f64);
    let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
    sg / (2f64.powi(2 * k as i32 + 1) * f(k) * f(k + 1))
}

fn digamma_int(k: u32) -> f64 {
    -specfun::EULER_GAMMA + (1..=k).map(|j| 1.0 / j as f64).sum::<f64>()
}

/// Constants read off from the power series of `z H_1^+(z)`. Computed once.
pub fn expansion_constants() -> &'static ExpansionConstants {
    static CELL: OnceLock<ExpansionConstants> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut a = [0.0; 3];
        let mut z = [C64::new(0.0, 0.0); 3];
        let mut c = [0.0; 6];
        c[0] = 1.0 / (4.0 * PI * PI);
        for j in 1..=3u32 {
            let ck = zj1_coeff(j - 1);
            a[j as usize - 1] = -ck / (4.0 * PI * PI);
            let re = ck
                * (2f64.ln() / (4.0 * PI * PI) + (digamma_int(j - 1) + digamma_int(j)) / (8.0 * PI * PI));
            z[j as usize - 1] = C64::new(re, ck / (8.0 * PI));
            c[2 * j as usize - 2] = if j == 1 { c[0] } else { 1.0 };
            c[2 * j as usize - 1] = -ck / (4.0 * PI * PI);
        }
        ExpansionConstants { a, z_plus: z, c }
    })
}

/// Kernel of `G_j`: `1/(4 pi^2 d^2)`, `-(1/8 pi^2) log d`, `c_j d^j`, `c_j d^(j-1) log d`.
pub fn gj_kernel(j: usize, d: f64) -> Result<f64> {
    if j > 5 {
        return Err(Error::Range { requested: j, available: 6 });
    }
    let c = &expansion_constants().c;
    match j {
        0 => {
            if !(d > 0.0) {
                return Err(Error::SingularDistance);
            }
            Ok(c[0] / (d * d))
        }
        _ if j % 2 == 0 => Ok(c[j] * d.powi(j as i32)),
        _ => {
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok(c[j] * d.powi(j as i32 - 1) * d.abs().ln())
        }
    }
}

/// `g_j^{+-}(lambda) = lambda^(2j) (a_j log lambda + z_j^{+-})`, j = 1..=3.
pub fn g_coeff(j: usize, pt: SpectralPoint) -> Result<C64> {
    if !(1..=3).contains(&j) {
        return Err(Error::Range { requested: j, available: 3 });
    }
    let k = expansion_constants();
    let zj = if pt.sign == Sign::Plus {
        k.z_plus[j - 1]
    } else {
        k.z_plus[j - 1].conj()
    };
    Ok(pt.lambda.powi(2 * j as i32) * (k.a[j - 1] * pt.lambda.ln() + zj))
}

/// Truncated expansion `G_0 + sum_{j<=m} [g_j G_{2j-2} + lambda^{2j} G_{2j-1}]`.
pub fn free_kernel_expansion(pt: SpectralPoint, d: f64, m: usize) -> Result<C64> {
    let mut s = C64::new(gj_kernel(0, d)?, 0.0);
    for j in 1..=m {
        s += g_coeff(j, pt)? * gj_kernel(2 * j - 2, d)?
            + pt.lambda.powi(2 * j as i32) * gj_kernel(2 * j - 1, d)?;
    }
    Ok(s)
}

/// Per-channel coefficients of the small-lambda expansion of `k_l^{+-}(lambda)`:
/// `k_l(lambda) = k_l(0) + sum_n lambda^(2n) (e1_n log lambda + e0_n)`.
/// Returns `(e1_n, e0_n)`.
pub fn channel_series_coeff(ell: usize, n: usize, sign: Sign, r: f64, rp: f64) -> (C64, C64) {
    let nu = order_of(ell) as usize;
    let (a, b) = if r <= rp { (r, rp) } else { (rp, r) };
    let f = |k: usize| (1..=k).fold(1.0, |acc, i| acc * i as f64);
    let s = sign.s();
    // J-hat coefficients
    let jhat = |m: usize| -> f64 {
        let sg = if m % 2 == 0 { 1.0 } else { -1.0 };
        sg / (2f64.powi((nu + 2 * m) as i32) * f(m) * f(nu + m))
    };
    // H-hat = sum_p (h_p + h'_p log z) z^(2p)
    let hcoef = |p: usize| -> (C64, C64) {
        let mut h = C64::new(0.0, 0.0);
        let mut hl = C64::new(0.0, 0.0);
        if p < nu {
            h += s * I * (-1.0 / PI) * f(nu - p - 1) / f(p) * 2f64.powi(nu as i32 - 2 * p as i32);
        } else {
            let m = p - nu;
            let jm = jhat(m);
            hl = s * I * (2.0 / PI) * jm;
            h = jm
                * (C64::new(1.0, 0.0) - s * I * (2.0 / PI) * 2f64.ln()
                    - s * I * (1.0 / PI) * (digamma_int(m as u32) + digamma_int((nu + m) as u32)));
        }
        (h, hl)
    };
    let mut e1 = C64::new(0.0, 0.0);
    let mut e0 = C64::new(0.0, 0.0);
    for m in 0..=n {
        let p = n - m;
        let (h, hl) = hcoef(p);
        let w = jhat(m) * a.powi(2 * m as i32) * b.powi(2 * p as i32);
        e1 += w * hl;
        e0 += w * (h + hl * b.ln());
    }
    let pre = s * I * (0.5 * PI) * (r * rp).sqrt() * (a / b).powi(nu as i32);
    (pre * e1, pre * e0)
}

/// Channel projection of the kernel of `G_j` (flattened measure), j = 1..=5.
/// `G_0` itself is [`channel_kernel_zero`]. Even j is the projection of `d^j`
/// without the constant `c_j`.
pub fn channel_gj(ell: usize, j: usize, r: f64, rp: f64) -> f64 {
    let k = expansion_constants();
    if j == 0 {
        return channel_kernel_zero(ell, r, rp);
    }
    let n = if j % 2 == 0 { j / 2 + 1 } else { (j + 1) / 2 };
    let (e1, e0) = channel_series_coeff(ell, n, Sign::Plus, r, rp);
    let an = k.a[n - 1];
    if j % 2 == 0 {
        (e1 / an).re
    } else {
        (e0 - k.z_plus[n - 1] * e1 / an).re
    }
}

/// The kernel multiplying `g_n` in channel `l`: projection of `G_{2n-2}`,
/// where for n = 1 this is the constant kernel 1 (not `G_0`).
pub fn channel_g_log(ell: usize, n: usize, r: f64, rp: f64) -> f64 {
    let k = expansion_constants();
    let (e1, _) = channel_series_coeff(ell, n, Sign::Plus, r, rp);
    (e1 / k.a[n - 1]).re
}

// ---------------------------------------------------------------------------
// auxiliary functions

/// `A(z) = (i/(4 pi)) J_1(z)/z`, so `[R_0^+ - R_0^-](lambda^2)(d) = lambda^2 A(lambda d)`.
pub fn aux_a(z: f64) -> C64 {
    I / (4.0 * PI) * j_scaled(1, z)
}

fn chi_tilde(z: f64) -> f64 {
    1.0 - chi(z, 0.5)
}

fn w_tilde(sign: Sign, z: f64) -> Result<C64> {
    Ok(I / (8.0 * PI) * specfun::omega(sign, 1, z)? / z)
}

/// The auxiliary functions `A`, `F`, `G`, `G~+-` at `(lambda, p, q)`; `lambda1` sets `chi`.
pub fn aux_function(kind: AuxKind, pt: SpectralPoint, args: AuxArgs, lambda1: f64) -> Result<C64> {
    if !(args.p > 0.0 && args.q > 0.0) {
        return Err(Error::Domain(args.p.min(args.q)));
    }
    let l = pt.lambda;
    let (zp, zq) = (l * args.p, l * args.q);
    match kind {
        AuxKind::A => Ok(aux_a(zp)),
        AuxKind::G => Ok(aux_a(zp) * chi(zp, lambda1) - aux_a(zq) * chi(zq, lambda1)),
        AuxKind::F => {
            let reg = |z: f64| -> Result<f64> { Ok(chi(z, lambda1) * specfun::y_regular(1, z)? / z) };
            Ok(C64::new(reg(zp)? - reg(zq)?, 0.0))
        }
        AuxKind::GtildePlus | AuxKind::GtildeMinus => {
            let s = if kind == AuxKind::GtildePlus { Sign::Plus } else { Sign::Minus };
            let part = |z: f64| -> Result<C64> {
                let c = chi_tilde(z);
                if c == 0.0 {
                    Ok(C64::new(0.0, 0.0))
                } else {
                    Ok(c * w_tilde(s, z)?)
                }
            };
            let phase = C64::from_polar(1.0, -s.s() * l * (args.p - args.q));
            Ok(part(zp)? - phase * part(zq)?)
        }
    }
}
