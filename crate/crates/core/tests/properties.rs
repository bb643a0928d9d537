//! Structural invariants of the threshold analysis plus randomized checks of the
//! kernels, quadrature, fitting and configuration layers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use threshold_lab::config::RunConfig;
use threshold_lab::decayfit::{fit_values, Basis, RateModel};
use threshold_lab::discretize::gauss_legendre;
use threshold_lab::evolution::log_times;
use threshold_lab::kernels::{self, SpectralPoint};
use threshold_lab::potentials::{PotentialSpec, SQUARE_WELL_THRESHOLDS};
use threshold_lab::spectral::{Classification, InvertMethod, Problem, SpectralConfig, ZeroEnergyData};

const TWO_WELL: (f64, f64) = (144.447_962_363_819_9, 14.598_578_009_561_603);

fn classified(spec: PotentialSpec) -> (Problem, ZeroEnergyData) {
    let p = Problem::new(spec, SpectralConfig::default()).unwrap();
    let zd = p.classify().unwrap();
    (p, zd)
}

fn threshold_cases() -> Vec<(&'static str, Problem, ZeroEnergyData, Classification)> {
    let mut out = Vec::new();
    let sw = |c| classified(PotentialSpec::square_well(c, 1.0));
    let (p, z) = sw(SQUARE_WELL_THRESHOLDS[0]);
    out.push(("first kind", p, z, Classification::FirstKind));
    let (p, z) = sw(SQUARE_WELL_THRESHOLDS[1]);
    out.push(("second kind l=1", p, z, Classification::SecondKind));
    let (p, z) = sw(SQUARE_WELL_THRESHOLDS[2]);
    out.push(("second kind l=2", p, z, Classification::SecondKind));
    let (p, z) = classified(PotentialSpec::two_well(TWO_WELL.0, TWO_WELL.1, 0.2, 1.0));
    out.push(("third kind", p, z, Classification::ThirdKind));
    out
}

/// `P`: orthogonal projection onto `v` in channel 0.
fn p_projector(p: &Problem) -> DMatrix<f64> {
    &p.vtilde * p.vtilde.transpose() / p.l1
}

#[test]
fn zero_energy_structure() {
    for (name, p, zd, class) in threshold_cases() {
        assert_eq!(zd.classification, class, "{name}");
        let n = p.n();
        let u = DMatrix::from_diagonal(&DVector::from_vec(p.u.clone()));
        for ell in 0..=p.channels() {
            let s1 = zd.s1_matrix(ell, n);
            // S1 D0 = D0 S1 = S1
            assert!((&s1 * &zd.d0[ell] - &s1).norm() < 1e-7, "{name} l={ell}");
            assert!((&zd.d0[ell] * &s1 - &s1).norm() < 1e-7, "{name} l={ell}");
            // S1 = -S1 v G0 w with w = U v
            let vg0v = zd.t[ell].matrix.map(|z| z.re) - &u;
            let lhs = &s1 + &s1 * &vg0v * &u;
            assert!(lhs.norm() < 1e-6, "{name} l={ell}: {}", lhs.norm());
            // S2 inside S1
            let s2 = zd.s2_matrix(ell, n);
            assert!((&s1 * &s2 - &s2).norm() < 1e-8, "{name} l={ell}");
        }
        // P S2 = 0
        let s2 = zd.s2_matrix(0, n);
        assert!((p_projector(&p) * &s2).norm() < 1e-6, "{name}");
        assert!(zd.s1.len() <= zd.s2.len() + 1, "{name}");
        assert_eq!(zd.resonance.is_some(), class.has_resonance(), "{name}");
    }
}

#[test]
fn resolvent_conjugacy_at_thresholds() {
    for (name, p, zd, _) in threshold_cases() {
        for &lambda in &[1e-3, 0.05] {
            let pt = SpectralPoint::plus(lambda);
            for ell in 0..2 {
                let a = p.invert_m(&zd, pt, ell, InvertMethod::Direct).unwrap().matrix;
                let b = p.invert_m(&zd, pt.flipped(), ell, InvertMethod::Direct).unwrap().matrix;
                let err = (&b - a.map(|z| z.conj())).norm() / a.norm();
                assert!(err < 1e-10, "{name} l={ell} lambda={lambda}: {err}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn free_kernel_conjugacy(lambda in 1e-6f64..0.5, d in 1e-3f64..50.0) {
        let p = kernels::free_kernel_4d(SpectralPoint::plus(lambda), d).unwrap();
        let m = kernels::free_kernel_4d(SpectralPoint::minus(lambda), d).unwrap();
        prop_assert!((p - m.conj()).norm() <= 1e-12 * p.norm());
        // the jump is the density
        let rho = kernels::free_density(lambda, d);
        prop_assert!((p - m - rho).norm() <= 1e-10 * p.norm().max(rho.norm()));
    }

    #[test]
    fn channel_kernel_conjugacy_and_symmetry(ell in 0usize..5, lambda in 1e-5f64..0.5, r in 0.01f64..3.0, s in 0.01f64..3.0) {
        let p = kernels::channel_kernel(ell, SpectralPoint::plus(lambda), r, s);
        let m = kernels::channel_kernel(ell, SpectralPoint::minus(lambda), r, s);
        let swapped = kernels::channel_kernel(ell, SpectralPoint::plus(lambda), s, r);
        prop_assert!((p - m.conj()).norm() <= 1e-12 * p.norm());
        prop_assert!((p - swapped).norm() <= 1e-12 * p.norm());
        let diff = kernels::channel_kernel_diff(ell, SpectralPoint::plus(lambda), r, s);
        let zero = kernels::channel_kernel_zero(ell, r, s);
        prop_assert!((p - zero - diff).norm() <= 1e-9 * p.norm());
    }

    #[test]
    fn channel_sum_rebuilds_free_kernel(lambda in 1e-3f64..0.3, r in 0.2f64..1.0, q in 0.1f64..0.5, cos in -1.0f64..1.0) {
        // k_l(r, s)/(r s)^{3/2} weighted by U_l(cos) sums to the 4D kernel
        let s = r * q;
        let pt = SpectralPoint::plus(lambda);
        let d = (r * r + s * s - 2.0 * r * s * cos).sqrt();
        let sum: C64 = (0..40)
            .map(|ell| kernels::channel_kernel(ell, pt, r, s) * kernels::channel_weight(ell, cos) / (r * s).powf(1.5))
            .sum();
        let full = kernels::free_kernel_4d(pt, d).unwrap();
        prop_assert!((sum - full).norm() <= 1e-8 * full.norm(), "{sum} {full}");
    }

    #[test]
    fn cutoff_is_a_partition(lambda in 0.0f64..1.0, lambda1 in 0.05f64..0.5) {
        let c = kernels::chi(lambda, lambda1);
        prop_assert!((0.0..=1.0).contains(&c));
        if lambda <= lambda1 {
            prop_assert_eq!(c, 1.0);
        }
        if lambda >= 2.0 * lambda1 {
            prop_assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials(n in 2usize..40, k in 0usize..10) {
        let (x, w) = gauss_legendre(n);
        prop_assert!(x.windows(2).all(|p| p[0] < p[1]));
        let deg = k.min(2 * n - 1);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
        let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
        prop_assert!((q - exact).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_planted_rates(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let t = log_times(10.0, 1e8, 30);
        let mut model = RateModel::new(vec![Basis::InvLog, Basis::InvT]);
        model.complex = true;
        let v: Vec<C64> = t.iter().map(|&t| C64::new(a, 0.5) * Basis::InvLog.eval(t) + C64::new(b, -1.0) * Basis::InvT.eval(t)).collect();
        let r = fit_values(&t, &v, &model).unwrap();
        let ca = r.coefficient(Basis::InvLog).unwrap();
        let cb = r.coefficient(Basis::InvT).unwrap();
        prop_assert!((ca - C64::new(a, 0.5)).norm() < 1e-8);
        prop_assert!((cb - C64::new(b, -1.0)).norm() < 1e-6);
    }

    #[test]
    fn config_round_trip(c in 0.1f64..200.0, seed in 0..=i64::MAX as u64, t_count in 2usize..100, jobs in 0usize..16) {
        let mut cfg = RunConfig::square_well(c);
        cfg.seed = seed;
        cfg.jobs = jobs;
        cfg.evolution.t_count = t_count;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn free_density_is_imaginary() {
    for &(l, d) in &[(0.01, 1.0), (0.2, 3.0), (0.4, 0.1)] {
        let rho = kernels::free_density(l, d);
        assert_eq!(rho.re, 0.0);
        // small-argument value i lambda^2 / (8 pi)
        if l * d < 0.02 {
            assert!((rho.im - l * l / (8.0 * PI)).abs() < 1e-4 * rho.im);
        }
    }
}
