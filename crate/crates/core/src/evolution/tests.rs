use super::*;
use crate::potentials::SQUARE_WELL_THRESHOLDS;

fn medium(c: f64) -> Medium {
    Medium::new(PotentialSpec::square_well(c, 1.0), SpectralConfig::default()).unwrap()
}

#[test]
fn free_schrodinger_anchor() {
    let times = log_times(1e3, 1e7, 5);
    let req = PropagatorRequest::new(times, vec![Pair::new(1.0, 2.0, 0.3)], Multiplier::schrod());
    let ts = stone_evolve(&Medium::Free, &req).unwrap();
    assert_eq!(ts.rows.len(), 5, "{:?}", ts.flagged);
    for r in &ts.rows {
        let want = 1.0 / (16.0 * PI * PI * r.t * r.t);
        assert!((r.value.norm() / want - 1.0).abs() < 0.02, "{} {} {}", r.t, r.value.norm(), want);
    }
}

#[test]
fn density_matches_resolvent_jump() {
    // -b_r^T M^{-1} b_s on both sides reproduces the channel correction
    let Medium::Potential { problem: p, zero: zd } = medium(2.0) else { unreachable!() };
    let lambda = 0.05;
    let radii = [0.4, 1.7];
    for ell in 0..2 {
        let corr = p.density_correction(&zd, lambda, ell, &radii).unwrap();
        let mut want = [C64::new(0.0, 0.0); 4];
        for pt in [SpectralPoint::plus(lambda), SpectralPoint::minus(lambda)] {
            let inv = p.invert_m(&zd, pt, ell, crate::spectral::InvertMethod::Direct).unwrap().matrix;
            let rows: Vec<DVector<C64>> = radii.iter().map(|&r| DVector::from_vec(p.scaled_row(ell, pt, r))).collect();
            for i in 0..2 {
                for k in 0..2 {
                    want[i * 2 + k] -= rows[i].dot(&(&inv * &rows[k])) * pt.sign.s();
                }
            }
        }
        for q in 0..4 {
            assert!((corr[q] - want[q]).norm() < 1e-9 * want[q].norm().max(1e-12), "{ell} {q} {} {}", corr[q], want[q]);
        }
    }
}

#[test]
fn born_series_identity() {
    // R_V = R_0 - R_0 V R_0 + R_0 V R_0 V R_0 - R_0 V R_0 v M^{-1} v R_0 V R_0, on jumps
    let Medium::Potential { problem: p, zero: zd } = medium(2.0) else { unreachable!() };
    let lambda = 0.05;
    let radii = [0.6, 2.0];
    let n = p.n();
    let u = DVector::from_iterator(n, p.u.iter().map(|&x| C64::new(x, 0.0)));
    for ell in 0..2 {
        let corr = p.density_correction(&zd, lambda, ell, &radii).unwrap();
        let b1 = born_channel(&p, lambda, ell, 1, &radii).unwrap();
        let b2 = born_channel(&p, lambda, ell, 2, &radii).unwrap();
        let mut tail = [C64::new(0.0, 0.0); 4];
        for pt in [SpectralPoint::plus(lambda), SpectralPoint::minus(lambda)] {
            let m = p.assemble_m(pt, ell).unwrap().matrix;
            let khat = &m - DMatrix::from_diagonal(&u);
            let inv = m.try_inverse().unwrap();
            let rows: Vec<DVector<C64>> = radii
                .iter()
                .map(|&r| khat.transpose() * DVector::from_vec(p.scaled_row(ell, pt, r)).component_mul(&u))
                .collect();
            for i in 0..2 {
                for k in 0..2 {
                    tail[i * 2 + k] -= rows[i].dot(&(&inv * &rows[k])) * pt.sign.s();
                }
            }
        }
        for q in 0..4 {
            let sum = b1[q] + b2[q] + tail[q];
            assert!((corr[q] - sum).norm() < 1e-8 * corr[q].norm(), "{ell} {q} {} {}", corr[q], sum);
        }
    }
}

#[test]
fn density_is_imaginary_and_symmetric() {
    let m = medium(3.0);
    let pairs = [Pair::new(0.4, 1.3, 0.7), Pair::new(1.3, 0.4, 0.7)];
    let ev = DensityEval::new(&m, &pairs, Density::Full, false).unwrap();
    for &l in &[1e-3, 0.05, 0.3] {
        let d = ev.at(l).unwrap();
        for z in &d {
            assert!(z.re.abs() <= 1e-10 * z.norm(), "{l} {z}");
        }
        assert!((d[0] - d[1]).norm() <= 1e-8 * d[0].norm());
    }
}

#[test]
fn multiplier_validation() {
    assert!(Multiplier::new(MultiplierKind::KgCos, 0.0).is_err());
    assert_eq!(Multiplier::new(MultiplierKind::WaveSin, 3.0).unwrap().mass, 0.0);
    assert_eq!("kg-sin".parse::<MultiplierKind>().unwrap(), MultiplierKind::KgSin);
}

#[test]
fn csv_round_trip() {
    let ts = TimeSeries {
        multiplier: Multiplier::schrod(),
        classification: "regular".into(),
        pairs: vec![],
        rows: vec![TimeRow { t: 10.0, pair_id: 1, value: C64::new(1e-3, -2e-4), err_est: 1e-9 }],
        flagged: vec![],
        profile: vec![],
    };
    let back = TimeSeries::from_csv(&ts.to_csv()).unwrap();
    assert_eq!(back.rows, ts.rows);
    assert_eq!(back.classification, "regular");
}

#[test]
fn first_kind_marker() {
    let m = medium(SQUARE_WELL_THRESHOLDS[0]);
    assert!(m.classification().has_resonance());
    assert!(resonance_value(&m, 2.0).unwrap().abs() > 0.0);
}
