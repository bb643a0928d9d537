//! Zero-energy analysis of `M(lambda) = U + v R_0(lambda^2) v`, one channel at a time.
//!
//! Everything lives on a grid over the support of `V` in the symmetric
//! Nyström scaling, so channel vectors are real unit vectors in `R^n` and
//! `S_1`, `S_2` are ordinary orthogonal projections.
//!
//! The potential is radial, so `M` is block diagonal in `l` and every block
//! carries at most one near-kernel direction. Inversion near the threshold
//! uses the Jensen-Nenciu formula with `A = M + S_1` per block.

use crate::discretize::{
    build_grid, panel_derivative, quadrature_matrix, quadrature_matrix_semisep, quadrature_row,
    scale_symmetric, ChannelOperator, GridConfig, Grading, Meaning, RadialGrid, SemiSeparable,
};
use crate::error::{Error, Result};
use crate::kernels::{
    channel_g_log, channel_gj, channel_kernel, channel_kernel_zero, channel_regular, g_coeff,
    SpectralPoint, C64,
};
use crate::potentials::PotentialSpec;
use crate::specfun::{h_scaled, h_scaled_rem, j_scaled, j_scaled_rem, j_scaled_zero};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Discretization and detection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    /// Nodes on the support of V.
    pub n: usize,
    pub order: usize,
    /// Highest channel kept, `l = 0..=channels`.
    pub channels: usize,
    /// Kernel detection: `|mu| < tol * sigma_max`.
    pub tol: f64,
    /// Width of the refusal band around `tol`.
    pub ambiguity: f64,
    /// Radius of the box used for `a = lim r^2 psi`.
    pub r_box: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { n: 128, order: 16, channels: 4, tol: 1e-8, ambiguity: 10.0, r_box: 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Regular,
    FirstKind,
    SecondKind,
    ThirdKind,
}

impl Classification {
    pub fn has_resonance(self) -> bool {
        matches!(self, Classification::FirstKind | Classification::ThirdKind)
    }
    pub fn has_eigenvalue(self) -> bool {
        matches!(self, Classification::SecondKind | Classification::ThirdKind)
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Regular => "Regular",
            Classification::FirstKind => "FirstKind",
            Classification::SecondKind => "SecondKind",
            Classification::ThirdKind => "ThirdKind",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Classification {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regular" => Ok(Classification::Regular),
            "firstkind" | "first" => Ok(Classification::FirstKind),
            "secondkind" | "second" => Ok(Classification::SecondKind),
            "thirdkind" | "third" => Ok(Classification::ThirdKind),
            _ => Err(Error::Unknown(s.to_string())),
        }
    }
}

/// A unit vector of one channel block.
#[derive(Debug, Clone)]
pub struct ChannelVector {
    pub ell: usize,
    /// Eigenvalue of `T_l` it came from (0 for combinations).
    pub mu: f64,
    pub vector: DVector<f64>,
}

/// Output of [`Problem::classify`].
#[derive(Debug, Clone)]
pub struct ZeroEnergyData {
    /// `T_l` as assembled.
    pub t: Vec<ChannelOperator>,
    /// `T_l` with the detected kernel eigencomponents removed, so the model is exactly critical.
    pub t_exact: Vec<DMatrix<f64>>,
    pub sigma_max: f64,
    /// The four smallest `|mu|` per channel.
    pub spectra: Vec<Vec<f64>>,
    pub s1: Vec<ChannelVector>,
    pub s2: Vec<ChannelVector>,
    /// The part of `S_1` not in `S_2` (channel 0 only).
    pub resonance: Option<ChannelVector>,
    pub classification: Classification,
    /// `(T_l + S_1)^{-1}` per channel.
    pub d0: Vec<DMatrix<f64>>,
    /// `(S_2 v G_1 v S_2)^{-1}` in the `s2` basis.
    pub d2: Option<DMatrix<f64>>,
    /// `S_2 v G_1 v S_2` in the `s2` basis.
    pub s2_g1: Option<DMatrix<f64>>,
}

impl ZeroEnergyData {
    pub fn s1_in(&self, ell: usize) -> Vec<&ChannelVector> {
        self.s1.iter().filter(|c| c.ell == ell).collect()
    }

    /// `S_1` restricted to channel `l` as a matrix.
    pub fn s1_matrix(&self, ell: usize, n: usize) -> DMatrix<f64> {
        projector(self.s1_in(ell).into_iter(), n)
    }

    pub fn s2_matrix(&self, ell: usize, n: usize) -> DMatrix<f64> {
        projector(self.s2.iter().filter(|c| c.ell == ell), n)
    }

    /// `S_2 D_2 S_2` restricted to channel `l`.
    pub fn d2_block(&self, ell: usize, n: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        if let Some(d2) = &self.d2 {
            for (a, va) in self.s2.iter().enumerate() {
                for (b, vb) in self.s2.iter().enumerate() {
                    if va.ell == ell && vb.ell == ell {
                        out += &va.vector * vb.vector.transpose() * d2[(a, b)];
                    }
                }
            }
        }
        out
    }
}

fn projector<'a>(vs: impl Iterator<Item = &'a ChannelVector>, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for c in vs {
        p += &c.vector * c.vector.transpose();
    }
    p
}

// ---------------------------------------------------------------------------
// semi-separable channel kernels

struct ZeroKernel {
    nu: i32,
}

impl SemiSeparable for ZeroKernel {
    fn rank(&self) -> usize {
        1
    }
    fn factors(&self, r: f64, a: &mut [C64], b: &mut [C64]) {
        a[0] = C64::new(r.powf(self.nu as f64 + 0.5) / (2.0 * self.nu as f64), 0.0);
        b[0] = C64::new(r.powf(0.5 - self.nu as f64), 0.0);
    }
}

struct FullKernel {
    nu: u32,
    pt: SpectralPoint,
}

impl SemiSeparable for FullKernel {
    fn rank(&self) -> usize {
        1
    }
    fn factors(&self, r: f64, a: &mut [C64], b: &mut [C64]) {
        let c = self.pt.sign.s() * I * (0.5 * PI);
        let z = self.pt.lambda * r;
        a[0] = c * r.powf(self.nu as f64 + 0.5) * j_scaled(self.nu, z);
        b[0] = r.powf(0.5 - self.nu as f64) * h_scaled(self.pt.sign, self.nu, z);
    }
}

/// `k_l(lambda) - k_l(0)`, rank two.
struct DiffKernel {
    nu: u32,
    pt: SpectralPoint,
}

impl SemiSeparable for DiffKernel {
    fn rank(&self) -> usize {
        2
    }
    fn factors(&self, r: f64, a: &mut [C64], b: &mut [C64]) {
        let c = self.pt.sign.s() * I * (0.5 * PI);
        let z = self.pt.lambda * r;
        let ra = r.powf(self.nu as f64 + 0.5);
        let rb = r.powf(0.5 - self.nu as f64);
        a[0] = c * ra * j_scaled_rem(self.nu, z);
        b[0] = rb * h_scaled(self.pt.sign, self.nu, z);
        a[1] = c * ra * j_scaled_zero(self.nu);
        b[1] = rb * h_scaled_rem(self.pt.sign, self.nu, z);
    }
}

// ---------------------------------------------------------------------------
// problem

/// A potential discretized on its support.
#[derive(Debug, Clone)]
pub struct Problem {
    pub potential: PotentialSpec,
    pub config: SpectralConfig,
    pub grid: RadialGrid,
    /// `v = |V|^{1/2}` at the nodes.
    pub v: Vec<f64>,
    /// `U = sign V` at the nodes.
    pub u: Vec<f64>,
    /// Scaled samples of `sqrt(2 pi^2) r^{3/2} v`, the channel-0 image of `v`.
    pub vtilde: DVector<f64>,
    /// `|V|_1` computed on the grid, so that `P` is an exact projection.
    pub l1: f64,
    sqrt_w: Vec<f64>,
    q0: Vec<DMatrix<f64>>,
}

impl Problem {
    pub fn new(potential: PotentialSpec, config: SpectralConfig) -> Result<Self> {
        if potential.is_zero() {
            return Err(Error::EmptyPotential);
        }
        if config.channels > 8 {
            return Err(Error::UnsupportedOrder(config.channels as u32 + 1));
        }
        let support = potential.support_radius();
        let grid = build_grid(&GridConfig {
            n: config.n,
            r_max: support,
            grading: Grading::GradedAt0,
            order: config.order,
            breakpoints: potential.breakpoints(),
        })?;
        // sample V strictly inside each panel so jumps land on panel edges
        let v: Vec<f64> = grid.nodes.iter().map(|&r| potential.v_sqrt(r)).collect();
        let u: Vec<f64> = grid.nodes.iter().map(|&r| potential.u_sign(r)).collect();
        let sqrt_w: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
        let c = (2.0 * PI * PI).sqrt();
        let vtilde = DVector::from_iterator(
            grid.n,
            (0..grid.n).map(|j| sqrt_w[j] * c * grid.nodes[j].powf(1.5) * v[j]),
        );
        let l1 = vtilde.norm_squared();
        let q0 = (0..=config.channels)
            .map(|ell| {
                let k = ZeroKernel { nu: ell as i32 + 1 };
                quadrature_matrix_semisep(&k, &grid).map(|z| z.re)
            })
            .collect();
        Ok(Problem { potential, config, grid, v, u, vtilde, l1, sqrt_w, q0 })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn channels(&self) -> usize {
        self.config.channels
    }

    fn vkv(&self, q: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        scale_symmetric(q, &self.grid, &self.v, &self.v, true)
    }

    /// `T_l = U + v G_0 v`, real symmetric.
    pub fn assemble_t(&self, ell: usize) -> Result<DMatrix<f64>> {
        self.check_channel(ell)?;
        let q = self.q0[ell].map(|x| C64::new(x, 0.0));
        let mut t = self.vkv(&q)?.map(|z| z.re);
        for i in 0..self.n() {
            t[(i, i)] += self.u[i];
        }
        Ok(t)
    }

    /// `M_l(lambda) - T_l`, assembled without cancellation.
    pub fn assemble_m0(&self, ell: usize, pt: SpectralPoint) -> Result<DMatrix<C64>> {
        self.check_channel(ell)?;
        if !(pt.lambda > 0.0) {
            return Err(Error::Domain(pt.lambda));
        }
        let k = DiffKernel { nu: ell as u32 + 1, pt };
        self.vkv(&quadrature_matrix_semisep(&k, &self.grid))
    }

    /// `M_l(lambda) = U + v k_l(lambda) v` assembled directly from the channel kernel.
    pub fn assemble_m(&self, pt: SpectralPoint, ell: usize) -> Result<ChannelOperator> {
        self.check_channel(ell)?;
        if !(pt.lambda > 0.0) {
            return Err(Error::Domain(pt.lambda));
        }
        let k = FullKernel { nu: ell as u32 + 1, pt };
        let mut m = self.vkv(&quadrature_matrix_semisep(&k, &self.grid))?;
        for i in 0..self.n() {
            m[(i, i)] += self.u[i];
        }
        Ok(ChannelOperator { matrix: m, ell, lambda: pt.lambda, sign: Some(pt.sign), meaning: Meaning::M })
    }

    /// `v G v` for a kernel given pointwise (kink on the diagonal).
    pub fn assemble_vkv<F: Fn(f64, f64) -> f64>(&self, kernel: F) -> Result<DMatrix<f64>> {
        let q = quadrature_matrix(|r, s| C64::new(kernel(r, s), 0.0), &self.grid, true);
        Ok(self.vkv(&q)?.map(|z| z.re))
    }

    fn check_channel(&self, ell: usize) -> Result<()> {
        if ell > self.config.channels {
            return Err(Error::Range { requested: ell, available: self.config.channels + 1 });
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // classification

    pub fn classify(&self) -> Result<ZeroEnergyData> {
        let n = self.n();
        let nch = self.channels() + 1;
        let mut ts = Vec::with_capacity(nch);
        let mut eigs = Vec::with_capacity(nch);
        for ell in 0..nch {
            let t = self.assemble_t(ell)?;
            eigs.push(SymmetricEigen::new(t.clone()));
            ts.push(t);
        }
        let sigma_max = eigs.iter().map(|e| e.eigenvalues.amax()).fold(0.0, f64::max);
        let cut = self.config.tol * sigma_max;
        let mut s1 = Vec::new();
        let mut spectra = Vec::with_capacity(nch);
        let mut t_exact = Vec::with_capacity(nch);
        for (ell, e) in eigs.iter().enumerate() {
            let mut mags: Vec<(f64, usize)> = e.eigenvalues.iter().map(|m| m.abs()).zip(0..n).collect();
            mags.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            spectra.push(mags.iter().take(4).map(|m| m.0).collect());
            let mut te = ts[ell].clone();
            for &(mag, k) in &mags {
                let ratio = mag / cut;
                if ratio > 1.0 / self.config.ambiguity && ratio < self.config.ambiguity {
                    return Err(Error::AmbiguousThreshold { sigma: mag / sigma_max, tol: self.config.tol });
                }
                if ratio <= 1.0 / self.config.ambiguity {
                    let mut phi = e.eigenvectors.column(k).into_owned();
                    // deterministic sign: positive overlap with r^{nu+1/2} v
                    let probe: f64 = (0..n)
                        .map(|j| phi[j] * self.sqrt_w[j] * self.v[j] * self.grid.nodes[j].powf(ell as f64 + 1.5))
                        .sum();
                    if probe < 0.0 {
                        phi = -phi;
                    }
                    let mu = e.eigenvalues[k];
                    te -= &phi * phi.transpose() * mu;
                    s1.push(ChannelVector { ell, mu, vector: phi });
                }
            }
            // keep it symmetric after the rank-one updates
            let tt = te.transpose();
            t_exact.push((te + tt) * 0.5);
        }

        // S_2 = kernel of S_1 P S_1; only channel 0 sees P
        let mut s2 = Vec::new();
        let mut resonance = None;
        let zero: Vec<&ChannelVector> = s1.iter().filter(|c| c.ell == 0).collect();
        if !zero.is_empty() {
            let k = zero.len();
            let w = DVector::from_iterator(k, zero.iter().map(|c| c.vector.dot(&self.vtilde) / self.l1.sqrt()));
            let t1 = &w * w.transpose();
            let e = SymmetricEigen::new(t1);
            for idx in 0..k {
                let coeffs = e.eigenvectors.column(idx);
                let mut vec = DVector::zeros(n);
                for (c, cv) in coeffs.iter().zip(&zero) {
                    vec += &cv.vector * *c;
                }
                let cv = ChannelVector { ell: 0, mu: 0.0, vector: vec };
                if e.eigenvalues[idx].abs() < self.config.tol {
                    s2.push(cv);
                } else {
                    resonance = Some(cv);
                }
            }
        }
        for c in s1.iter().filter(|c| c.ell > 0) {
            s2.push(c.clone());
        }

        let classification = match (s1.is_empty(), s2.is_empty(), s2.len() == s1.len()) {
            (true, _, _) => Classification::Regular,
            (false, true, _) => Classification::FirstKind,
            (false, false, true) => Classification::SecondKind,
            _ => Classification::ThirdKind,
        };

        let mut d0 = Vec::with_capacity(nch);
        for (ell, te) in t_exact.iter().enumerate() {
            let a = te + projector(s1.iter().filter(|c| c.ell == ell), n);
            d0.push(a.try_inverse().ok_or(Error::NearSingular { lambda: 0.0, cond: f64::INFINITY })?);
        }

        let (d2, s2_g1) = if s2.is_empty() {
            (None, None)
        } else {
            let g1 = self.s2_block(&s2, 1)?;
            let d2 = g1.clone().try_inverse().ok_or(Error::NearSingular { lambda: 0.0, cond: f64::INFINITY })?;
            (Some(d2), Some(g1))
        };

        let t = ts
            .into_iter()
            .enumerate()
            .map(|(ell, t)| ChannelOperator {
                matrix: t.map(|x| C64::new(x, 0.0)),
                ell,
                lambda: 0.0,
                sign: None,
                meaning: Meaning::T,
            })
            .collect();
        Ok(ZeroEnergyData { t, t_exact, sigma_max, spectra, s1, s2, resonance, classification, d0, d2, s2_g1 })
    }

    /// `S_2 v G_j v S_2` in the basis `s2`; blocks of different channels vanish.
    pub fn s2_block(&self, s2: &[ChannelVector], j: usize) -> Result<DMatrix<f64>> {
        let k = s2.len();
        let mut out = DMatrix::zeros(k, k);
        let mut cache: Vec<Option<DMatrix<f64>>> = vec![None; self.channels() + 1];
        for a in 0..k {
            for b in 0..k {
                let ell = s2[a].ell;
                if s2[b].ell != ell {
                    continue;
                }
                if cache[ell].is_none() {
                    cache[ell] = Some(self.assemble_vkv(|r, s| channel_gj(ell, j, r, s))?);
                }
                let g = cache[ell].as_ref().unwrap();
                out[(a, b)] = s2[a].vector.dot(&(g * &s2[b].vector));
            }
        }
        Ok(out)
    }

    // -----------------------------------------------------------------------
    // inversion

    /// `M_l^{-1}(lambda)` by LU of `T~_l + M_0` or by the Jensen-Nenciu formula.
    pub fn invert_m(&self, zd: &ZeroEnergyData, pt: SpectralPoint, ell: usize, method: InvertMethod) -> Result<ChannelOperator> {
        let m0 = self.assemble_m0(ell, pt)?;
        let inv = match method {
            InvertMethod::Direct => {
                let m = complex(&zd.t_exact[ell]) + &m0;
                let inv = m.clone().try_inverse().ok_or(Error::NearSingular { lambda: pt.lambda, cond: f64::INFINITY })?;
                let cond = crate::discretize::hs_norm(&m) * crate::discretize::hs_norm(&inv) / self.n() as f64;
                if !(cond < 1e14) {
                    return Err(Error::NearSingular { lambda: pt.lambda, cond });
                }
                inv
            }
            InvertMethod::JensenNenciu => {
                let jn = JnFactors::new(self, zd, ell, &m0, pt.lambda)?;
                jn.inverse()
            }
        };
        Ok(ChannelOperator { matrix: inv, ell, lambda: pt.lambda, sign: Some(pt.sign), meaning: Meaning::Generic })
    }

    /// Solve `M_l(lambda) x = b`, using JN whenever channel `l` has a kernel direction.
    pub fn solve_m(&self, zd: &ZeroEnergyData, pt: SpectralPoint, ell: usize, b: &DVector<C64>) -> Result<DVector<C64>> {
        let m0 = self.assemble_m0(ell, pt)?;
        if zd.s1.iter().any(|c| c.ell == ell) {
            Ok(JnFactors::new(self, zd, ell, &m0, pt.lambda)?.solve(b))
        } else {
            let m = complex(&zd.t_exact[ell]) + m0;
            m.lu().solve(b).ok_or(Error::NearSingular { lambda: pt.lambda, cond: f64::INFINITY })
        }
    }

    /// The scalar `f(lambda) = <phi, B(lambda)^{-1} phi>` of a channel with one kernel direction.
    pub fn f_scalar(&self, zd: &ZeroEnergyData, pt: SpectralPoint, ell: usize) -> Result<C64> {
        let m0 = self.assemble_m0(ell, pt)?;
        let jn = JnFactors::new(self, zd, ell, &m0, pt.lambda)?;
        if jn.b.nrows() != 1 {
            return Err(Error::Range { requested: 1, available: jn.b.nrows() });
        }
        Ok(1.0 / jn.b[(0, 0)])
    }

    // -----------------------------------------------------------------------
    // threshold functions

    /// Flattened `-G_0 v phi` at radius `r` (any `r > 0`).
    pub fn threshold_solution_at(&self, ell: usize, phi: &DVector<f64>, r: f64) -> f64 {
        let g: Vec<f64> = (0..self.n()).map(|j| self.v[j] * phi[j] / self.sqrt_w[j]).collect();
        if r >= self.grid.r_max {
            return -(0..self.n())
                .map(|j| channel_kernel_zero(ell, r, self.grid.nodes[j]) * self.grid.weights[j] * g[j])
                .sum::<f64>();
        }
        let row = quadrature_row(|s| C64::new(channel_kernel_zero(ell, r, s), 0.0), &self.grid, r);
        -row.iter().zip(&g).map(|(q, x)| q.re * x).sum::<f64>()
    }

    /// Flattened `-G_0 v phi` at the grid nodes.
    pub fn threshold_solution_nodes(&self, ell: usize, phi: &DVector<f64>) -> Vec<f64> {
        let g = DVector::from_iterator(self.n(), (0..self.n()).map(|j| self.v[j] * phi[j] / self.sqrt_w[j]));
        (-(&self.q0[ell] * g)).iter().copied().collect()
    }

    /// Radial profile `f(r)` with `psi(x) = f(|x|) Y(x/|x|)`; for `l = 0`, `Y = (2 pi^2)^{-1/2}`.
    pub fn radial_profile(&self, ell: usize, phi: &DVector<f64>, r: f64) -> f64 {
        let y = if ell == 0 { 1.0 / (2.0 * PI * PI).sqrt() } else { 1.0 };
        self.threshold_solution_at(ell, phi, r) * r.powf(-1.5) * y
    }

    fn threshold_function(&self, cv: &ChannelVector, kind: ThresholdKind) -> Result<ThresholdFunction> {
        let ell = cv.ell;
        let nodes = self.threshold_solution_nodes(ell, &cv.vector);
        // <v psi, v psi> in the flattened measure
        let vpsi: f64 = (0..self.n()).map(|j| (self.v[j] * nodes[j]).powi(2) * self.grid.weights[j]).sum();
        if !(vpsi > 1e-12) {
            return Err(Error::DegenerateResonance(vpsi));
        }
        let rb = self.config.r_box;
        let f = |r: f64| r * r * self.radial_profile(ell, &cv.vector, r);
        let a = 2.0 * f(0.8 * rb) - f(0.4 * rb);
        let residual = self.ode_residual(ell, &nodes);
        Ok(ThresholdFunction {
            ell,
            kind,
            r: self.grid.nodes.clone(),
            flattened: nodes,
            a,
            vpsi_norm: vpsi,
            residual,
            vector: cv.vector.clone(),
        })
    }

    /// `||(-d^2 + (nu^2 - 1/4)/r^2 + V) g|| / ||g||` on the support by spectral differentiation.
    pub fn ode_residual(&self, ell: usize, g: &[f64]) -> f64 {
        let nu = ell as f64 + 1.0;
        let p = self.grid.order;
        let (mut num, mut den) = (0.0, 0.0);
        for (k, pan) in self.grid.panels.iter().enumerate() {
            let d = panel_derivative(&self.grid, k);
            let idx = pan.start..pan.start + p;
            let jac: Vec<f64> = self.grid.xi[idx.clone()]
                .iter()
                .map(|&x| match self.grid.grading {
                    Grading::GradedAt0 => 1.0 / (2.0 * x),
                    Grading::Uniform => 1.0,
                })
                .collect();
            let gv = DVector::from_iterator(p, g[idx.clone()].iter().copied());
            let mut g1 = &d * &gv;
            for i in 0..p {
                g1[i] *= jac[i];
            }
            let mut g2 = &d * &g1;
            for i in 0..p {
                g2[i] *= jac[i];
            }
            for i in 0..p {
                let j = pan.start + i;
                let r = self.grid.nodes[j];
                let res = -g2[i] + ((nu * nu - 0.25) / (r * r) + self.potential.eval(r)) * g[j];
                num += res * res * self.grid.weights[j];
                den += g[j] * g[j] * self.grid.weights[j];
            }
        }
        (num / den).sqrt()
    }

    /// Resonance (first S_1 direction outside S_2) and eigenfunctions (S_2 vectors).
    pub fn resonance_function(&self, zd: &ZeroEnergyData) -> Result<Vec<ThresholdFunction>> {
        let mut out = Vec::new();
        if let Some(r) = &zd.resonance {
            out.push(self.threshold_function(r, ThresholdKind::Resonance)?);
        }
        for c in &zd.s2 {
            out.push(self.threshold_function(c, ThresholdKind::Eigenfunction)?);
        }
        Ok(out)
    }

    /// `int V psi dx` and `|int x V psi dx|` for each eigenfunction, with error estimates.
    pub fn orthogonality_moments(&self, zd: &ZeroEnergyData) -> Vec<Moments> {
        zd.s2
            .iter()
            .map(|c| {
                let nodes = self.threshold_solution_nodes(c.ell, &c.vector);
                let phi: Vec<f64> = (0..self.n()).map(|j| c.vector[j] / self.sqrt_w[j]).collect();
                // two evaluations: V psi directly, and v phi via T phi = 0
                let mom = |pow: f64| -> (f64, f64) {
                    let direct: f64 = (0..self.n())
                        .map(|j| {
                            let r = self.grid.nodes[j];
                            self.potential.eval(r) * nodes[j] * r.powf(pow) * self.grid.weights[j]
                        })
                        .sum();
                    let via: f64 = (0..self.n())
                        .map(|j| self.v[j] * phi[j] * self.grid.nodes[j].powf(pow) * self.grid.weights[j])
                        .sum();
                    (direct, (direct - via).abs())
                };
                let (m0, e0) = if c.ell == 0 {
                    let (m, e) = mom(1.5);
                    let k = (2.0 * PI * PI).sqrt();
                    (m * k, e * k)
                } else {
                    (0.0, 0.0)
                };
                let (m1, e1) = if c.ell == 1 {
                    let (m, e) = mom(2.5);
                    let k = (PI * PI / 2.0).sqrt();
                    (m * k, e * k)
                } else {
                    (0.0, 0.0)
                };
                Moments { ell: c.ell, m0, m0_err: e0, m1, m1_err: e1 }
            })
            .collect()
    }

    // -----------------------------------------------------------------------
    // densities

    /// Row `b_r[j] = sqrt(w_j) v_j k_l(r, t_j)` so that `int k(r, t) V(t) g(t) dt = b_r U g~` in scaled form.
    /// Splits the panel containing `r` when `r` lies inside the support.
    pub fn scaled_row(&self, ell: usize, pt: SpectralPoint, r: f64) -> Vec<C64> {
        let row: Vec<C64> = if r >= self.grid.r_max {
            (0..self.n()).map(|j| channel_kernel(ell, pt, r, self.grid.nodes[j]) * self.grid.weights[j]).collect()
        } else {
            quadrature_row(|s| channel_kernel(ell, pt, r, s), &self.grid, r)
        };
        row.into_iter().enumerate().map(|(j, q)| q * (self.v[j] / self.sqrt_w[j])).collect()
    }

    /// Per-channel correction `[R_V^+ - R_V^-]_l - [R_0^+ - R_0^-]_l` (flattened) at radius pairs.
    ///
    /// Uses `R_V^+ - R_V^- = i pi conj(beta) beta^T` with `beta = a - R_0^+ v M^{-1} v a`,
    /// `a(r) = sqrt(r) J_nu(lambda r)`.
    pub fn density_correction(&self, zd: &ZeroEnergyData, lambda: f64, ell: usize, radii: &[f64]) -> Result<Vec<C64>> {
        let nu = ell as u32 + 1;
        let pt = SpectralPoint::plus(lambda);
        let rhs = DVector::from_iterator(
            self.n(),
            (0..self.n()).map(|j| C64::new(self.sqrt_w[j] * self.v[j] * channel_regular(nu, lambda, self.grid.nodes[j]), 0.0)),
        );
        let x = self.solve_m(zd, pt, ell, &rhs)?;
        let delta: Vec<C64> = radii
            .iter()
            .map(|&r| self.scaled_row(ell, pt, r).iter().zip(x.iter()).map(|(b, x)| b * x).sum())
            .collect();
        let a: Vec<f64> = radii.iter().map(|&r| channel_regular(nu, lambda, r)).collect();
        // out[i * m + k] = correction at (radii[i], radii[k])
        let m = radii.len();
        let mut out = vec![C64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for k in 0..m {
                out[i * m + k] = I * PI * (-(a[i] * delta[k]) - delta[i].conj() * a[k] + delta[i].conj() * delta[k]);
            }
        }
        Ok(out)
    }

    // -----------------------------------------------------------------------
    // expansions

    /// Cached `v G v` matrices for the expansion terms of `M`.
    pub fn expansion_terms(&self, ell: usize, m: usize) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
        (1..=m)
            .map(|j| {
                let glog = self.assemble_vkv(|r, s| channel_g_log(ell, j, r, s))?;
                let godd = self.assemble_vkv(|r, s| channel_gj(ell, 2 * j - 1, r, s))?;
                Ok((glog, godd))
            })
            .collect()
    }

    /// HS norm of `M(lambda) - T - sum_{j<=m} [g_j vG_{2j-2}v + lambda^{2j} vG_{2j-1}v]` over channels,
    /// and the HS norm of `M - T` for the noise floor.
    pub fn mexp_residual(&self, terms: &[Vec<(DMatrix<f64>, DMatrix<f64>)>], pt: SpectralPoint, m: usize) -> Result<(f64, f64)> {
        let (mut res, mut base) = (0.0, 0.0);
        for (ell, tl) in terms.iter().enumerate() {
            let mut r = self.assemble_m0(ell, pt)?;
            base += crate::discretize::hs_norm(&r).powi(2);
            for (j, (glog, godd)) in tl.iter().enumerate().take(m) {
                let gj = g_coeff(j + 1, pt)?;
                let l2j = pt.lambda.powi(2 * (j as i32 + 1));
                r -= glog.map(|x| gj * x) + godd.map(|x| C64::new(l2j * x, 0.0));
            }
            res += crate::discretize::hs_norm(&r).powi(2);
        }
        Ok((res.sqrt(), base.sqrt()))
    }

    pub fn expansion_report(&self, zd: &ZeroEnergyData, kind: ExpansionKind) -> Result<ExpansionReport> {
        crate::spectral::expansions::report(self, zd, kind)
    }
}

fn complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvertMethod {
    Direct,
    JensenNenciu,
}

/// Factors of the JN formula for one channel: `A = T~ + M_0 + S_1`, `B = Phi^T A^{-1} M_0 Phi`.
struct JnFactors {
    lu: nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `A^{-1} Phi`
    a_phi: DMatrix<C64>,
    phi: DMatrix<C64>,
    b: DMatrix<C64>,
    b_inv: DMatrix<C64>,
}

impl JnFactors {
    fn new(p: &Problem, zd: &ZeroEnergyData, ell: usize, m0: &DMatrix<C64>, lambda: f64) -> Result<Self> {
        let n = p.n();
        let vs: Vec<&ChannelVector> = zd.s1.iter().filter(|c| c.ell == ell).collect();
        let k = vs.len();
        let mut phi = DMatrix::<C64>::zeros(n, k);
        for (c, v) in vs.iter().enumerate() {
            for i in 0..n {
                phi[(i, c)] = C64::new(v.vector[i], 0.0);
            }
        }
        let s1 = &phi * phi.transpose();
        let a = complex(&zd.t_exact[ell]) + m0 + s1;
        let lu = a.lu();
        let m0_phi = m0 * &phi;
        let am0_phi = lu.solve(&m0_phi).ok_or(Error::NearSingular { lambda, cond: f64::INFINITY })?;
        // A^{-1} Phi = Phi - A^{-1} M_0 Phi because (T~ + S_1) Phi = Phi
        let a_phi = &phi - &am0_phi;
        let b = phi.transpose() * &am0_phi;
        let b_inv = b.clone().try_inverse().ok_or(Error::NearSingular { lambda, cond: f64::INFINITY })?;
        Ok(JnFactors { lu, a_phi, phi, b, b_inv })
    }

    fn solve(&self, rhs: &DVector<C64>) -> DVector<C64> {
        let y = self.lu.solve(rhs).expect("factorization checked");
        let c = &self.b_inv * (self.phi.transpose() * &y);
        y + &self.a_phi * c
    }

    fn inverse(&self) -> DMatrix<C64> {
        let n = self.phi.nrows();
        let ainv = self.lu.solve(&DMatrix::<C64>::identity(n, n)).expect("factorization checked");
        &ainv + &self.a_phi * &self.b_inv * self.a_phi.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    Resonance,
    Eigenfunction,
}

/// A zero-energy solution `psi = -G_0 v phi` sampled on the grid.
#[derive(Debug, Clone)]
pub struct ThresholdFunction {
    pub ell: usize,
    pub kind: ThresholdKind,
    pub r: Vec<f64>,
    /// `r^{3/2}` times the radial profile, at `r`.
    pub flattened: Vec<f64>,
    /// `lim r^2 psi(r)`, extrapolated from `0.4 R` and `0.8 R`.
    pub a: f64,
    pub vpsi_norm: f64,
    /// Relative ODE residual on the support.
    pub residual: f64,
    pub vector: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub ell: usize,
    pub m0: f64,
    pub m0_err: f64,
    pub m1: f64,
    pub m1_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionKind {
    Mexp,
    MplusS,
    First,
    Second,
    Third,
    Long,
    Cancel,
}

impl std::str::FromStr for ExpansionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "mexp" => ExpansionKind::Mexp,
            "mpluss" => ExpansionKind::MplusS,
            "first" => ExpansionKind::First,
            "second" => ExpansionKind::Second,
            "third" => ExpansionKind::Third,
            "long" => ExpansionKind::Long,
            "cancel" => ExpansionKind::Cancel,
            _ => return Err(Error::Unknown(s.into())),
        })
    }
}

/// One row of an expansion report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub name: String,
    /// Fitted exponent, or the measured quantity for non-slope rows.
    pub value: f64,
    pub required: f64,
    pub r_squared: f64,
    pub pass: bool,
    pub inconclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub kind: ExpansionKind,
    pub rows: Vec<ExpansionRow>,
}

/// Structured report of a classification, for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Classification,
    pub rank_s1: usize,
    pub rank_s2: usize,
    pub s1_channels: Vec<usize>,
    pub s2_channels: Vec<usize>,
    pub sigma_max: f64,
    pub spectra: Vec<Vec<f64>>,
    pub moments: Vec<Moments>,
    pub resonance_a: Option<f64>,
}

impl ClassificationReport {
    pub fn new(p: &Problem, zd: &ZeroEnergyData) -> Result<Self> {
        let resonance_a = match &zd.resonance {
            Some(_) => p.resonance_function(zd)?.first().map(|f| f.a),
            None => None,
        };
        Ok(ClassificationReport {
            verdict: zd.classification,
            rank_s1: zd.s1.len(),
            rank_s2: zd.s2.len(),
            s1_channels: zd.s1.iter().map(|c| c.ell).collect(),
            s2_channels: zd.s2.iter().map(|c| c.ell).collect(),
            sigma_max: zd.sigma_max,
            spectra: zd.spectra.clone(),
            moments: p.orthogonality_moments(zd),
            resonance_a,
        })
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (my - b * mx, b, r2)
}

/// 24 log-spaced samples in `[lo, hi]`.
pub fn lambda_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

pub mod expansions;

#[cfg(test)]
mod tests;
