//! Radial grids, Nyström assembly and the dense linear algebra the rest of
//! the crate leans on.
//!
//! A grid is a union of Gauss-Legendre panels. With `Grading::Graded` the
//! panels are uniform in `xi = sqrt(r)`, so `r^{1/2}`-type behaviour at the
//! origin turns into polynomials in `xi` and converges spectrally.
//!
//! Kernels with a derivative jump on the diagonal are integrated by splitting
//! the panel that contains the collocation point at that point and
//! interpolating the density there.

use crate::error::{Error, Result};
use crate::kernels::C64;
use crate::Sign;
use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    Uniform,
    GradedAt0,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridConfig {
    /// Requested node count; rounded up to whole panels.
    pub n: usize,
    pub r_max: f64,
    pub grading: Grading,
    /// Nodes per panel.
    pub order: usize,
    /// Interior points that must be panel boundaries (potential jumps).
    pub breakpoints: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 320,
            r_max: 60.0,
            grading: Grading::GradedAt0,
            order: 16,
            breakpoints: Vec::new(),
        }
    }
}

/// One Gauss-Legendre panel in the mapped variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub start: usize,
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub r_max: f64,
    pub n: usize,
    pub grading: Grading,
    pub order: usize,
    pub panels: Vec<Panel>,
    /// Mapped coordinate of each node.
    pub xi: Vec<f64>,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
}

impl RadialGrid {
    /// r as a function of the mapped coordinate.
    pub fn r_of(&self, xi: f64) -> f64 {
        match self.grading {
            Grading::Uniform => xi,
            Grading::GradedAt0 => xi * xi,
        }
    }

    pub fn xi_of(&self, r: f64) -> f64 {
        match self.grading {
            Grading::Uniform => r,
            Grading::GradedAt0 => r.sqrt(),
        }
    }

    fn dr_dxi(&self, xi: f64) -> f64 {
        match self.grading {
            Grading::Uniform => 1.0,
            Grading::GradedAt0 => 2.0 * xi,
        }
    }

    pub fn panel_of(&self, i: usize) -> usize {
        i / self.order
    }

    /// Nodes and weights of a Gauss-Legendre rule on [lo, hi] in the mapped coordinate,
    /// returned in r together with the dr-weights.
    pub fn sub_rule(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = 0.5 * (hi - lo);
        let c = 0.5 * (hi + lo);
        let mut r = Vec::with_capacity(self.order);
        let mut w = Vec::with_capacity(self.order);
        let mut xs = Vec::with_capacity(self.order);
        for (x, wx) in self.gl_x.iter().zip(&self.gl_w) {
            let xi = c + h * x;
            xs.push(xi);
            r.push(self.r_of(xi));
            w.push(wx * h * self.dr_dxi(xi));
        }
        (r, w, xs)
    }

    /// Lagrange basis of panel `p` evaluated at mapped coordinate `xi`.
    pub fn lagrange_row(&self, p: usize, xi: f64, out: &mut [f64]) {
        let pan = &self.panels[p];
        let nodes = &self.xi[pan.start..pan.start + self.order];
        for (j, o) in out.iter_mut().enumerate() {
            let mut v = 1.0;
            for (k, &xk) in nodes.iter().enumerate() {
                if k != j {
                    v *= (xi - xk) / (nodes[j] - xk);
                }
            }
            *o = v;
        }
    }

    /// Quadrature of samples.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }

    /// Interpolate nodal values at an arbitrary radius inside the grid.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let xi = self.xi_of(r.clamp(0.0, self.r_max));
        let p = self
            .panels
            .iter()
            .position(|pan| xi <= pan.hi)
            .unwrap_or(self.panels.len() - 1);
        let mut row = vec![0.0; self.order];
        self.lagrange_row(p, xi, &mut row);
        let s = self.panels[p].start;
        row.iter().zip(&values[s..s + self.order]).map(|(a, b)| a * b).sum()
    }
}

/// Build a composite Gauss-Legendre grid on (0, r_max].
pub fn build_grid(config: &GridConfig) -> Result<RadialGrid> {
    if config.n < 16 {
        return Err(Error::Config(format!("grid needs at least 16 nodes, got {}", config.n)));
    }
    if !(config.r_max > 0.0) || !config.r_max.is_finite() {
        return Err(Error::Config(format!("r_max must be positive, got {}", config.r_max)));
    }
    if config.order < 2 {
        return Err(Error::Config("panel order must be at least 2".into()));
    }
    let n_panels = config.n.div_ceil(config.order);
    let map = |r: f64| match config.grading {
        Grading::Uniform => r,
        Grading::GradedAt0 => r.sqrt(),
    };
    // segments in the mapped variable between breakpoints
    let mut cuts = vec![0.0];
    let mut bps: Vec<f64> = config
        .breakpoints
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < config.r_max)
        .collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup();
    cuts.extend(bps.iter().map(|&b| map(b)));
    cuts.push(map(config.r_max));
    let total = cuts.last().unwrap() - cuts[0];
    let nseg = cuts.len() - 1;
    if n_panels < nseg {
        return Err(Error::Config("more breakpoints than panels".into()));
    }
    // panels per segment proportional to length, at least one each
    let mut counts: Vec<usize> = (0..nseg)
        .map(|s| (((cuts[s + 1] - cuts[s]) / total) * n_panels as f64).floor().max(1.0) as usize)
        .collect();
    while counts.iter().sum::<usize>() < n_panels {
        let (k, _) = (0..nseg)
            .map(|s| (s, (cuts[s + 1] - cuts[s]) / counts[s] as f64))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        counts[k] += 1;
    }
    while counts.iter().sum::<usize>() > n_panels {
        let (k, _) = (0..nseg)
            .filter(|&s| counts[s] > 1)
            .map(|s| (s, (cuts[s + 1] - cuts[s]) / counts[s] as f64))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        counts[k] -= 1;
    }
    let (gl_x, gl_w) = gauss_legendre(config.order);
    let mut grid = RadialGrid {
        nodes: Vec::new(),
        weights: Vec::new(),
        r_max: config.r_max,
        n: 0,
        grading: config.grading,
        order: config.order,
        panels: Vec::new(),
        xi: Vec::new(),
        gl_x,
        gl_w,
    };
    for s in 0..nseg {
        let h = (cuts[s + 1] - cuts[s]) / counts[s] as f64;
        for k in 0..counts[s] {
            let lo = cuts[s] + k as f64 * h;
            let hi = if k + 1 == counts[s] { cuts[s + 1] } else { lo + h };
            let start = grid.nodes.len();
            let (r, w, xs) = grid.sub_rule(lo, hi);
            grid.nodes.extend(r);
            grid.weights.extend(w);
            grid.xi.extend(xs);
            grid.panels.push(Panel { lo, hi, start });
        }
    }
    grid.n = grid.nodes.len();
    Ok(grid)
}

/// Tag describing what an assembled matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Meaning {
    M,
    T,
    R0,
    RV,
    Projection,
    Generic,
}

/// A discretized channel operator in the symmetric scaling
/// `A_ij = sqrt(w_i) K_ij sqrt(w_j)`.
#[derive(Debug, Clone)]
pub struct ChannelOperator {
    pub matrix: DMatrix<C64>,
    pub ell: usize,
    pub lambda: f64,
    pub sign: Option<Sign>,
    pub meaning: Meaning,
}

impl ChannelOperator {
    pub fn hs_norm(&self) -> f64 {
        hs_norm(&self.matrix)
    }
}

/// Kernels of the form `sum_m a_m(min(r,s)) b_m(max(r,s))`.
pub trait SemiSeparable: Sync {
    fn rank(&self) -> usize;
    fn factors(&self, r: f64, a: &mut [C64], b: &mut [C64]);
}

struct FactorTable {
    rank: usize,
    a: Vec<C64>,
    b: Vec<C64>,
}

impl FactorTable {
    fn new<K: SemiSeparable + ?Sized>(k: &K, rs: &[f64]) -> Self {
        let rank = k.rank();
        let mut a = vec![C64::new(0.0, 0.0); rank * rs.len()];
        let mut b = vec![C64::new(0.0, 0.0); rank * rs.len()];
        for (i, &r) in rs.iter().enumerate() {
            k.factors(r, &mut a[i * rank..(i + 1) * rank], &mut b[i * rank..(i + 1) * rank]);
        }
        FactorTable { rank, a, b }
    }

    fn eval(&self, i: usize, ri: f64, j: usize, rj: f64) -> C64 {
        let (lo, hi) = if ri <= rj { (i, j) } else { (j, i) };
        let mut s = C64::new(0.0, 0.0);
        for m in 0..self.rank {
            s += self.a[lo * self.rank + m] * self.b[hi * self.rank + m];
        }
        s
    }
}

/// Quadrature matrix `Q` with `(K g)(r_i) ~ sum_j Q_ij g_j` for a semi-separable kernel.
pub fn quadrature_matrix_semisep<K: SemiSeparable + ?Sized>(k: &K, grid: &RadialGrid) -> DMatrix<C64> {
    let n = grid.n;
    let p = grid.order;
    let nodes = FactorTable::new(k, &grid.nodes);
    let mut q = DMatrix::<C64>::zeros(n, n);
    let mut lag = vec![0.0; p];
    let rank = k.rank();
    let mut fa = vec![C64::new(0.0, 0.0); rank];
    let mut fb = vec![C64::new(0.0, 0.0); rank];
    for i in 0..n {
        let ri = grid.nodes[i];
        let pi = grid.panel_of(i);
        let pan = grid.panels[pi];
        for j in 0..n {
            if grid.panel_of(j) != pi {
                q[(i, j)] = nodes.eval(i, ri, j, grid.nodes[j]) * grid.weights[j];
            }
        }
        // split panel at r_i
        let xi_i = grid.xi[i];
        for (lo, hi) in [(pan.lo, xi_i), (xi_i, pan.hi)] {
            let (rs, ws, xs) = grid.sub_rule(lo, hi);
            for m in 0..p {
                grid.lagrange_row(pi, xs[m], &mut lag);
                k.factors(rs[m], &mut fa, &mut fb);
                // kernel(r_i, s_m)
                let mut kv = C64::new(0.0, 0.0);
                for t in 0..rank {
                    kv += if rs[m] <= ri {
                        fa[t] * nodes.b[i * rank + t]
                    } else {
                        nodes.a[i * rank + t] * fb[t]
                    };
                }
                let kw = kv * ws[m];
                for jj in 0..p {
                    q[(i, pan.start + jj)] += kw * lag[jj];
                }
            }
        }
    }
    q
}

/// Quadrature matrix for a general kernel, split at the diagonal.
pub fn quadrature_matrix<F: Fn(f64, f64) -> C64>(kernel: F, grid: &RadialGrid, kink: bool) -> DMatrix<C64> {
    let n = grid.n;
    let p = grid.order;
    let mut q = DMatrix::<C64>::zeros(n, n);
    let mut lag = vec![0.0; p];
    for i in 0..n {
        let ri = grid.nodes[i];
        let pi = grid.panel_of(i);
        for j in 0..n {
            if !kink || grid.panel_of(j) != pi {
                q[(i, j)] = kernel(ri, grid.nodes[j]) * grid.weights[j];
            }
        }
        if kink {
            let pan = grid.panels[pi];
            let xi_i = grid.xi[i];
            for (lo, hi) in [(pan.lo, xi_i), (xi_i, pan.hi)] {
                let (rs, ws, xs) = grid.sub_rule(lo, hi);
                for m in 0..p {
                    grid.lagrange_row(pi, xs[m], &mut lag);
                    let kw = kernel(ri, rs[m]) * ws[m];
                    for jj in 0..p {
                        q[(i, pan.start + jj)] += kw * lag[jj];
                    }
                }
            }
        }
    }
    q
}

/// Quadrature row `q` with `int K(r, s) g(s) ds ~ sum_j q_j g(r_j)` at an arbitrary `r`;
/// the panel containing `r` is split there.
pub fn quadrature_row<F: Fn(f64) -> C64>(kernel_at: F, grid: &RadialGrid, r: f64) -> Vec<C64> {
    let mut q: Vec<C64> = grid.nodes.iter().zip(&grid.weights).map(|(&s, &w)| kernel_at(s) * w).collect();
    let xi = grid.xi_of(r);
    if r <= 0.0 || r >= grid.r_max {
        return q;
    }
    let p = grid.panels.iter().position(|pan| xi <= pan.hi).unwrap_or(grid.panels.len() - 1);
    let pan = grid.panels[p];
    let order = grid.order;
    for jj in 0..order {
        q[pan.start + jj] = C64::new(0.0, 0.0);
    }
    let mut lag = vec![0.0; order];
    for (lo, hi) in [(pan.lo, xi), (xi, pan.hi)] {
        if hi <= lo {
            continue;
        }
        let (rs, ws, xs) = grid.sub_rule(lo, hi);
        for m in 0..order {
            grid.lagrange_row(p, xs[m], &mut lag);
            let kw = kernel_at(rs[m]) * ws[m];
            for jj in 0..order {
                q[pan.start + jj] += kw * lag[jj];
            }
        }
    }
    q
}

/// Derivative matrix in the mapped coordinate for the nodes of one panel.
pub fn panel_derivative(grid: &RadialGrid, p: usize) -> DMatrix<f64> {
    let pan = grid.panels[p];
    let x = &grid.xi[pan.start..pan.start + grid.order];
    let n = x.len();
    let wts: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                d[(i, j)] = wts[j] / wts[i] / (x[i] - x[j]);
                diag -= d[(i, j)];
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Symmetric Nyström scaling of `diag(left) Q diag(right)`.
pub fn scale_symmetric(q: &DMatrix<C64>, grid: &RadialGrid, left: &[f64], right: &[f64], symmetrize: bool) -> Result<DMatrix<C64>> {
    let n = grid.n;
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let v = q[(i, j)] * (sw[i] * left[i] * right[j] / sw[j]);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Assembly { row: i, col: j });
            }
            a[(i, j)] = v;
        }
    }
    if symmetrize {
        let t = a.transpose();
        a = (a + t) * C64::new(0.5, 0.0);
    }
    Ok(a)
}

/// `A_ij ~ left(r_i) K(r_i, r_j) right(r_j) sqrt(w_i w_j)`, with diagonal splitting.
pub fn assemble<F, L, R>(kernel: F, grid: &RadialGrid, left: L, right: R) -> Result<ChannelOperator>
where
    F: Fn(f64, f64) -> C64,
    L: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    let q = quadrature_matrix(kernel, grid, true);
    let l: Vec<f64> = grid.nodes.iter().map(|&r| left(r)).collect();
    let r: Vec<f64> = grid.nodes.iter().map(|&r| right(r)).collect();
    Ok(ChannelOperator {
        matrix: scale_symmetric(&q, grid, &l, &r, false)?,
        ell: 0,
        lambda: 0.0,
        sign: None,
        meaning: Meaning::Generic,
    })
}

/// Scaled samples `sqrt(w_i) f(r_i)` so that Euclidean inner products are L^2(dr) ones.
pub fn to_scaled(grid: &RadialGrid, f: &[f64]) -> DVector<f64> {
    DVector::from_iterator(grid.n, f.iter().zip(&grid.weights).map(|(v, w)| v * w.sqrt()))
}

pub fn from_scaled(grid: &RadialGrid, x: &DVector<f64>) -> Vec<f64> {
    x.iter().zip(&grid.weights).map(|(v, w)| v / w.sqrt()).collect()
}

pub fn hs_norm(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solve `A X = B` by LU with partial pivoting.
pub fn solve(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let lu = a.clone().lu();
    lu.solve(b).ok_or(Error::NearSingular { lambda: f64::NAN, cond: f64::INFINITY })
}

pub fn inverse(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    a.clone()
        .try_inverse()
        .ok_or(Error::NearSingular { lambda: f64::NAN, cond: f64::INFINITY })
}

/// The `k` smallest singular triplets, ascending.
#[derive(Debug, Clone)]
pub struct SmallestSvd {
    pub values: Vec<f64>,
    pub sigma_max: f64,
    pub left: Vec<DVector<C64>>,
    pub right: Vec<DVector<C64>>,
}

pub fn svd_smallest(op: &ChannelOperator, k: usize) -> Result<SmallestSvd> {
    let n = op.matrix.nrows();
    if k > n {
        return Err(Error::Range { requested: k, available: n });
    }
    let svd = op.matrix.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap().then(a.cmp(&b)));
    let sigma_max = svd.singular_values.max();
    let mut out = SmallestSvd { values: vec![], sigma_max, left: vec![], right: vec![] };
    for &i in idx.iter().take(k) {
        out.values.push(svd.singular_values[i]);
        out.left.push(u.column(i).into_owned());
        out.right.push(vt.row(i).adjoint().into_owned());
    }
    Ok(out)
}

/// Real symmetric matrix from the real part of a complex one.
pub fn real_part(a: &DMatrix<C64>) -> DMatrix<f64> {
    a.map(|z| z.re)
}

pub fn complexify(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exactness() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_r() {
        for grading in [Grading::Uniform, Grading::GradedAt0] {
            let g = build_grid(&GridConfig { n: 200, r_max: 40.0, grading, order: 16, breakpoints: vec![1.0, 3.5] }).unwrap();
            let s: f64 = g.weights.iter().sum();
            assert!((s - 40.0).abs() < 1e-10);
            assert!(g.nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(g.nodes[0] > 0.0 && *g.nodes.last().unwrap() < 40.0);
            // breakpoints are panel boundaries
            assert!(g.panels.iter().any(|p| (g.r_of(p.hi) - 3.5).abs() < 1e-12));
        }
    }

    #[test]
    fn incomplete_gamma() {
        let g = build_grid(&GridConfig { n: 200, r_max: 40.0, ..Default::default() }).unwrap();
        let v = g.integrate(|r| r.powi(3) * (-r).exp());
        // 6 (1 - e^{-40}(1 + 40 + 800 + 64000/6))
        let tail = (-40f64).exp() * (1.0 + 40.0 + 800.0 + 64000.0 / 6.0);
        assert!((v - 6.0 * (1.0 - tail)).abs() < 1e-10);
    }

    #[test]
    fn refinement_stable() {
        let f = |r: f64| r.sqrt() * (-r * r / 4.0).exp() * (1.0 + r).ln();
        let a = build_grid(&GridConfig { n: 160, r_max: 12.0, ..Default::default() }).unwrap();
        let b = build_grid(&GridConfig { n: 320, r_max: 12.0, ..Default::default() }).unwrap();
        assert!((a.integrate(f) - b.integrate(f)).abs() < 1e-12);
    }

    #[test]
    fn config_errors() {
        assert!(build_grid(&GridConfig { n: 8, ..Default::default() }).is_err());
        assert!(build_grid(&GridConfig { r_max: -1.0, ..Default::default() }).is_err());
    }

    #[test]
    fn identity_kernel_gives_weights() {
        let g = build_grid(&GridConfig { n: 32, r_max: 2.0, ..Default::default() }).unwrap();
        let q = quadrature_matrix(|_, _| C64::new(1.0, 0.0), &g, false);
        for j in 0..g.n {
            assert_eq!(q[(0, j)].re, g.weights[j]);
        }
    }

    #[test]
    fn svd_range_error() {
        let op = ChannelOperator { matrix: DMatrix::identity(3, 3), ell: 0, lambda: 0.0, sign: None, meaning: Meaning::Generic };
        assert!(svd_smallest(&op, 4).is_err());
        let s = svd_smallest(&op, 2).unwrap();
        assert_eq!(s.values.len(), 2);
    }
}
