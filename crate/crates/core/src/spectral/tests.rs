use super::*;
use crate::potentials::SQUARE_WELL_THRESHOLDS;

fn well(c: f64) -> Problem {
    Problem::new(PotentialSpec::square_well(c, 1.0), SpectralConfig::default()).unwrap()
}

#[test]
fn regular_well() {
    let p = well(1.0);
    let zd = p.classify().unwrap();
    assert_eq!(zd.classification, Classification::Regular);
    let smallest = zd.spectra.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    assert!(smallest > 0.1, "{smallest}");
    let t = &zd.t_exact[0];
    assert!((t - t.transpose()).norm() < 1e-10 * t.norm());
}

#[test]
fn m_tends_to_t() {
    let p = well(1.0);
    let zd = p.classify().unwrap();
    for ell in 0..3 {
        let m = p.assemble_m(SpectralPoint::plus(1e-5), ell).unwrap();
        let t = &zd.t[ell].matrix;
        assert!(hs(&(&m.matrix - t)) <= 1e-6 * hs(t));
        // direct kernel and the cancellation-free difference agree
        let m0 = p.assemble_m0(ell, SpectralPoint::plus(0.2)).unwrap();
        let m = p.assemble_m(SpectralPoint::plus(0.2), ell).unwrap();
        assert!(hs(&(&m.matrix - t - &m0)) < 1e-12 * hs(t));
    }
}

fn hs(a: &DMatrix<C64>) -> f64 {
    crate::discretize::hs_norm(a)
}

#[test]
fn inverse_identity_and_conjugacy() {
    let p = well(1.0);
    let zd = p.classify().unwrap();
    let pt = SpectralPoint::plus(0.1);
    let m = p.assemble_m(pt, 0).unwrap();
    let inv = p.invert_m(&zd, pt, 0, InvertMethod::Direct).unwrap();
    let id = &m.matrix * &inv.matrix - DMatrix::<C64>::identity(p.n(), p.n());
    assert!(id.norm() < 1e-10);
    let invm = p.invert_m(&zd, pt.flipped(), 0, InvertMethod::Direct).unwrap();
    assert!((invm.matrix - inv.matrix.map(|z| z.conj())).norm() < 1e-10);
}

#[test]
fn first_kind_structure() {
    let p = well(SQUARE_WELL_THRESHOLDS[0]);
    let zd = p.classify().unwrap();
    assert_eq!(zd.classification, Classification::FirstKind);
    assert_eq!(zd.s1.len(), 1);
    assert_eq!(zd.s1[0].ell, 0);
    let n = p.n();
    let s1 = zd.s1_matrix(0, n);
    assert!((&s1 * &zd.d0[0] - &s1).norm() < 1e-8);
    assert!((&zd.d0[0] * &s1 - &s1).norm() < 1e-8);
    // S_1 = -S_1 v G_0 w, i.e. phi = -U v G_0 v phi
    let phi = &zd.s1[0].vector;
    let vg0v = &zd.t[0].matrix.map(|z| z.re) - DMatrix::from_diagonal(&DVector::from_vec(p.u.clone()));
    let img = &vg0v * phi;
    let r = DVector::from_iterator(n, (0..n).map(|i| phi[i] + p.u[i] * img[i]));
    assert!(r.norm() < 1e-6);

    let pt = SpectralPoint::plus(1e-2);
    let a = p.invert_m(&zd, pt, 0, InvertMethod::Direct).unwrap().matrix;
    let b = p.invert_m(&zd, pt, 0, InvertMethod::JensenNenciu).unwrap().matrix;
    assert!((&a - &b).norm() / a.norm() < 1e-8, "{}", (&a - &b).norm() / a.norm());

    let f = p.resonance_function(&zd).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].kind, ThresholdKind::Resonance);
    assert!(f[0].a.abs() > 1e-3);
    assert!((f[0].vpsi_norm - 1.0).abs() < 1e-8);
}

#[test]
fn first_kind_f_fit() {
    let p = well(SQUARE_WELL_THRESHOLDS[0]);
    let zd = p.classify().unwrap();
    let (_, icpt, r2) = expansions::f_fit(&p, &zd, &lambda_samples(1e-4, 1e-2, 24)).unwrap();
    assert!(r2 >= 0.999, "{r2}");
    assert!(icpt.im.abs() > 1e-6);
}

#[test]
fn eigenvalue_l2() {
    let p = well(SQUARE_WELL_THRESHOLDS[2]);
    let zd = p.classify().unwrap();
    assert_eq!(zd.classification, Classification::SecondKind);
    assert_eq!(zd.s2.len(), 1);
    assert_eq!(zd.s2[0].ell, 2);
    let m = p.orthogonality_moments(&zd);
    assert_eq!((m[0].m0, m[0].m1), (0.0, 0.0));
    let f = p.resonance_function(&zd).unwrap();
    assert_eq!(f[0].kind, ThresholdKind::Eigenfunction);
    assert!(f[0].residual < 1e-4, "{}", f[0].residual);
    // S_2 v G_1 v S_2 is the Gram matrix of psi = -G_0 v phi
    let nodes = &f[0].flattened;
    let inside: f64 = (0..p.n()).map(|j| nodes[j].powi(2) * p.grid.weights[j]).sum();
    let r = p.grid.r_max;
    let c = p.threshold_solution_at(2, &zd.s2[0].vector, r) / r.powf(-2.5);
    let tail = c * c * r.powi(-4) / 4.0;
    let g1 = zd.s2_g1.as_ref().unwrap()[(0, 0)];
    assert!((g1 - inside - tail).abs() < 1e-8 * g1, "{g1} {}", inside + tail);
}

#[test]
fn eigenvalue_l1_moments() {
    let p = well(SQUARE_WELL_THRESHOLDS[1]);
    let zd = p.classify().unwrap();
    assert_eq!(zd.classification, Classification::SecondKind);
    let m = p.orthogonality_moments(&zd);
    assert_eq!(m[0].m0, 0.0);
    assert!(m[0].m1.abs() > 1e-3);
    assert!(m[0].m1_err < 1e-8 * m[0].m1.abs());
}

#[test]
fn empty_potential_rejected() {
    let e = Problem::new(PotentialSpec::square_well(0.0, 1.0), SpectralConfig::default()).unwrap_err();
    assert_eq!(e, Error::EmptyPotential);
}

#[test]
fn d2_limit_sign() {
    let p = well(SQUARE_WELL_THRESHOLDS[2]);
    let zd = p.classify().unwrap();
    let plus = expansions::d2_limit_error(&p, &zd, 1e-4, 1.0).unwrap();
    let minus = expansions::d2_limit_error(&p, &zd, 1e-4, -1.0).unwrap();
    assert!(plus < 1e-2, "{plus}");
    assert!(minus > 1.0);
}
