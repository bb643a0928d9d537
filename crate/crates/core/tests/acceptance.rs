//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that every line is printed. The process fails
//! when an attainable criterion fails, or when a criterion listed in `KNOWN_FAIL`
//! fails for a reason other than the one recorded for it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use threshold_lab::decayfit::{expected_models, fit, rank_one, scale_match, Basis, Orthogonality, RateModel};
use threshold_lab::evolution::oracle::{eig_oracle, OracleConfig};
use threshold_lab::evolution::{
    born_term, default_pairs, log_times, resonance_value, stone_evolve, Branch, Medium, Multiplier, MultiplierKind, Pair,
    PropagatorRequest, TimeSeries,
};
use threshold_lab::oscint::{self, Role, VerifyConfig};
use threshold_lab::potentials::{tune_double_threshold, PotentialSpec, SQUARE_WELL_THRESHOLDS, TWO_WELL_REFERENCE};
use threshold_lab::spectral::{Classification, ExpansionKind, InvertMethod, Problem, SpectralConfig};
use threshold_lab::kernels::SpectralPoint;

/// Criteria that cannot be met as stated; see the notes printed with them.
const KNOWN_FAIL: [usize; 2] = [9, 10];

struct Outcome {
    id: usize,
    pass: bool,
    /// For a known failure: whether the parts that can pass still do.
    sound: bool,
    detail: String,
    secs: f64,
}

fn outcome(id: usize, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, sound: pass, detail, secs: 0.0 }
}

fn well(c: f64) -> Medium {
    Medium::new(PotentialSpec::square_well(c, 1.0), SpectralConfig::default()).expect("medium")
}

fn slopes(ts: &TimeSeries, pairs: impl Iterator<Item = usize>) -> Vec<f64> {
    pairs.map(|q| fit(ts, q, &RateModel::new(vec![Basis::InvT])).expect("fit").slope).collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// `max/min` of `|K| log t` over every pair.
fn log_flatness(ts: &TimeSeries) -> f64 {
    let mut worst: f64 = 1.0;
    for q in 0..ts.pairs.len() {
        let (t, v) = ts.series(q);
        let comp: Vec<f64> = t.iter().zip(&v).map(|(t, v)| v.norm() * t.ln()).collect();
        let (lo, hi) = comp.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        worst = worst.max(hi / lo);
    }
    worst
}

fn criterion_1() -> Outcome {
    let req = PropagatorRequest::new(log_times(1e3, 1e7, 24), default_pairs(), Multiplier::schrod());
    let ts = stone_evolve(&Medium::Free, &req).expect("free evolution");
    let worst = ts
        .rows
        .iter()
        .map(|r| (r.value.norm() * 16.0 * PI * PI * r.t * r.t - 1.0).abs())
        .fold(0.0, f64::max);
    let complete = ts.flagged.is_empty();
    outcome(1, complete && worst <= 0.02, format!("max |K| 16 pi^2 t^2 - 1 = {worst:.2e} (tol 2e-2), {} rows", ts.rows.len()))
}

fn criterion_2() -> Outcome {
    let m = well(1.0);
    let req = PropagatorRequest::new(log_times(1e3, 1e7, 24), default_pairs(), Multiplier::schrod());
    let ts = stone_evolve(&m, &req).expect("evolution");
    let s = slopes(&ts, 0..4);
    let ok = m.classification() == Classification::Regular && s.iter().all(|s| (s + 2.0).abs() <= 0.05);
    outcome(2, ok, format!("{}; slopes {} (want -2 +- 0.05)", m.label(), fmt(&s)))
}

fn criterion_3() -> Outcome {
    let m = well(5.783185963);
    let radii = [0.5, 1.5, 2.5, 4.0];
    let pairs: Vec<Pair> = radii.iter().flat_map(|&a| radii.iter().map(move |&b| Pair::new(a, b, FRAC_PI_2))).collect();
    let mut req = PropagatorRequest::new(log_times(1e4, 1e10, 40), pairs, Multiplier::schrod());
    req.profile = true;
    let ts = stone_evolve(&m, &req).expect("evolution");
    let flat = log_flatness(&ts);

    let mut model = RateModel::new(vec![Basis::Profile, Basis::InvT, Basis::InvTLog, Basis::InvTLog2]);
    model.complex = true;
    model.profile = ts.profile.iter().map(|p| (p.0, p.1)).collect();
    let psi: Vec<f64> = radii.iter().map(|&r| resonance_value(&m, r).expect("resonance")).collect();
    let mut c = DMatrix::<C64>::zeros(4, 4);
    // remainder after the leading term phi(t) psi(x) psi(y), times t: last against first
    // decade. The fitted coefficient agrees with psi psi to ~1e-11, which t phi(t) would
    // still amplify past the remainder at t = 1e10, so its rank-one form is subtracted.
    let mut growth: f64 = 0.0;
    for q in 0..16 {
        let f = fit(&ts, q, &model).expect("fit");
        c[(q / 4, q % 4)] = f.coefficients[0];
        let pp = psi[q / 4] * psi[q % 4];
        let (t, v) = ts.series(q);
        let rem: Vec<f64> = t.iter().zip(&v).zip(&ts.profile).map(|((t, v), p)| ((v - p.1 * pp) * t).norm()).collect();
        let k = rem.len() / 6;
        let head = rem[..k].iter().cloned().fold(0.0, f64::max);
        let tail = rem[rem.len() - k..].iter().cloned().fold(0.0, f64::max);
        growth = growth.max(tail / head);
    }
    let (ratio, u) = rank_one(&c);
    let phase = u[0] / u[0].norm();
    let ur: Vec<f64> = u.iter().map(|z| (z / phase).re).collect();
    let (_, mismatch) = scale_match(&ur, &psi);
    let ok = m.classification() == Classification::FirstKind && flat <= 1.25 && growth <= 1.0 && mismatch <= 0.05;
    outcome(
        3,
        ok,
        format!(
            "{}; |K| log t max/min {flat:.3} (tol 1.25); |K - phi psi psi| t last/first decade {growth:.3}; sigma2/sigma1 {ratio:.1e}; psi(x)psi(y) mismatch {mismatch:.1e} (tol 5e-2)",
            m.label()
        ),
    )
}

fn criterion_4() -> Outcome {
    let c = 14.68197064;
    let m = well(c);
    let Medium::Potential { problem, zero } = &m else { unreachable!() };
    let mom = problem.orthogonality_moments(zero);
    let m1 = mom.iter().map(|q| q.m1.abs()).fold(0.0, f64::max);
    let req = PropagatorRequest::new(log_times(1e4, 1e10, 24), default_pairs(), Multiplier::schrod());
    let ts = stone_evolve(&m, &req).expect("evolution");
    // the l = 1 angular factor cos(theta) removes the 1/t term at theta = pi/2
    let off_axis = (0..4).filter(|&q| (ts.pairs[q].theta - FRAC_PI_2).abs() > 1e-9);
    let s = slopes(&ts, off_axis);
    let ok = m.classification() == Classification::SecondKind && m1 > 1e-3 && s.iter().all(|s| (s + 1.0).abs() <= 0.05);
    outcome(4, ok, format!("{}; |m1| = {m1:.3e}; slopes off theta = pi/2 {} (want -1 +- 0.05)", m.label(), fmt(&s)))
}

fn criterion_5() -> Outcome {
    let m = well(26.37461643);
    let Medium::Potential { problem, zero } = &m else { unreachable!() };
    let mom = problem.orthogonality_moments(zero);
    let m0 = mom.iter().map(|q| q.m0.abs()).fold(0.0, f64::max);
    let m1 = mom.iter().map(|q| q.m1.abs()).fold(0.0, f64::max);
    let req = PropagatorRequest::new(log_times(1e3, 1e7, 24), default_pairs(), Multiplier::schrod());
    let ts = stone_evolve(&m, &req).expect("evolution");
    let s = slopes(&ts, 0..4);
    let ok = m.classification() == Classification::SecondKind && m0 <= 1e-8 && m1 <= 1e-8 && s.iter().all(|s| (s + 2.0).abs() <= 0.1);
    outcome(5, ok, format!("{}; |m0| {m0:.1e}, |m1| {m1:.1e} (tol 1e-8); slopes {} (want -2 +- 0.1)", m.label(), fmt(&s)))
}

fn criterion_6() -> Outcome {
    let (r1, r2, bracket, c2_from) = TWO_WELL_REFERENCE;
    let d = tune_double_threshold(r1, r2, bracket, c2_from).expect("two-well tuning");
    let m = Medium::new(PotentialSpec::two_well(d.c1, d.c2, r1, r2), SpectralConfig::default()).expect("medium");
    let req = PropagatorRequest::new(log_times(1e4, 1e10, 24), default_pairs(), Multiplier::schrod());
    let ts = stone_evolve(&m, &req).expect("evolution");
    let model = expected_models(Classification::ThirdKind, MultiplierKind::Schrod, Orthogonality::default());
    let mut dominant = Vec::new();
    let mut ok = m.classification() == Classification::ThirdKind;
    for q in 0..4 {
        let f = fit(&ts, q, &model).expect("fit");
        let a = f.coefficient(Basis::InvLog).unwrap_or_default();
        ok &= f.dominant == Basis::InvLog && a.norm() > 0.0;
        dominant.push(format!("{} ({:.2e})", f.dominant, a.re));
    }
    outcome(6, ok, format!("{} at c1 {:.6}, c2 {:.6}; dominant term per pair: {}", m.label(), d.c1, d.c2, dominant.join(", ")))
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut cases = vec![
        (1.0, vec![ExpansionKind::Mexp]),
        (SQUARE_WELL_THRESHOLDS[0], vec![ExpansionKind::First]),
        (SQUARE_WELL_THRESHOLDS[2], vec![ExpansionKind::Second, ExpansionKind::Cancel]),
    ];
    for (c, kinds) in cases.drain(..) {
        let p = Problem::new(PotentialSpec::square_well(c, 1.0), SpectralConfig::default()).expect("problem");
        let zd = p.classify().expect("classify");
        for k in kinds {
            for row in p.expansion_report(&zd, k).expect("expansion").rows {
                // the +D2 row is the sign-flipped comparison, reported but not required
                if row.name.contains("+ D2") || row.name.contains("intercept") || row.name.contains("spread") {
                    notes.push(format!("{} {:.2e}", row.name, row.value));
                    continue;
                }
                ok &= row.pass;
                notes.push(format!("{} {:.3e}{}", row.name, row.value, if row.pass { "" } else { " (fail)" }));
            }
        }
    }
    outcome(7, ok, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let req = PropagatorRequest::new(vec![1.0, 10.0, 50.0, 200.0], default_pairs(), Multiplier::schrod());
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for c in [1.0, SQUARE_WELL_THRESHOLDS[0]] {
        let m = well(c);
        let s = stone_evolve(&m, &req).expect("evolution");
        let o = eig_oracle(&m, &req, &OracleConfig::default()).expect("oracle");
        let mut w: f64 = if s.rows.len() == o.rows.len() && !s.rows.is_empty() { 0.0 } else { f64::INFINITY };
        for (a, b) in s.rows.iter().zip(&o.rows) {
            w = w.max((a.value - b.value).norm() / b.value.norm());
        }
        worst = worst.max(w);
        detail.push(format!("{} max rel err {w:.2e}", m.label()));
    }
    outcome(8, worst <= 1e-2, format!("{} (tol 1e-2)", detail.join("; ")))
}

fn criterion_9() -> Outcome {
    let times = log_times(1e3, 1e7, 24);
    let pairs = default_pairs();
    let forward = |kind, mass| {
        let mut r = PropagatorRequest::new(times.clone(), pairs.clone(), Multiplier::new(kind, mass).expect("multiplier"));
        r.branch = Branch::Forward;
        r
    };
    let kg_free = born_term(&Medium::Free, 0, &forward(MultiplierKind::KgSin, 1.0)).expect("kg");
    // the massless sine series has no carrier, so it is compared as is with the KG envelope
    let wave_req = PropagatorRequest::new(times.clone(), pairs.clone(), Multiplier::new(MultiplierKind::WaveSin, 0.0).expect("multiplier"));
    let wave_free = born_term(&Medium::Free, 0, &wave_req).expect("wave");
    let kg_slopes = slopes(&kg_free, 0..4);
    let wave_slopes = slopes(&wave_free, 0..4);
    let diff: Vec<f64> = wave_slopes.iter().zip(&kg_slopes).map(|(w, k)| w - k).collect();

    let mut req = forward(MultiplierKind::KgCos, 1.0);
    req.times = log_times(1e4, 1e10, 24);
    let first = stone_evolve(&well(SQUARE_WELL_THRESHOLDS[0]), &req).expect("kg first kind");
    let flat = log_flatness(&first);

    let born_ok = kg_slopes.iter().all(|s| (s + 1.5).abs() <= 0.05);
    let flat_ok = flat <= 1.25;
    let diff_ok = diff.iter().all(|d| (d - 1.0).abs() <= 0.1);
    let mut o = outcome(
        9,
        born_ok && flat_ok && diff_ok,
        format!(
            "free KG slope {} (want -1.5 +- 0.05){}; KG first-kind |K| log t max/min {flat:.3} (tol 1.25); wave - KG sine slope {} (want +1 +- 0.1){}",
            fmt(&kg_slopes),
            if born_ok { "" } else { ": the low-energy KG kernel decays like t^-2 in four dimensions" },
            fmt(&diff),
            if diff_ok { "" } else { ": the cut-off wave sine kernel decays faster than the KG envelope, not slower" },
        ),
    );
    // the attainable part, and the failures staying where they were diagnosed
    o.sound = flat_ok && kg_slopes.iter().all(|s| (s + 2.0).abs() <= 0.1) && diff.iter().all(|d| *d < 0.0);
    o
}

fn criterion_10() -> Outcome {
    let reports = oscint::verify_all(&VerifyConfig::default(), 0).expect("oscint");
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    let get = |id: &str| reports.iter().find(|r| r.id == id).and_then(|r| r.rel_err.or(r.measured)).unwrap_or(f64::NAN);
    let reduction = reports.iter().find(|r| r.id == "reduction").and_then(|r| r.measured).unwrap_or(f64::NAN);
    let spatial = get("spatial");
    let controls: Vec<String> = reports
        .iter()
        .filter(|r| r.role == Role::LogControl)
        .map(|r| format!("{} {:.2}/decade", r.id, r.growth))
        .collect();
    let pass = failed.is_empty();
    let mut o = outcome(
        10,
        pass,
        format!(
            "{} of {} cases pass; failing {:?}; log-control growth {} (want >= 2: a log-weakened amplitude moves the rate by at most a log factor); reduction residual {reduction:.1e} (tol 1e-6); spatial Monte-Carlo rel err {spatial:.1e} (tol 5e-2)",
            reports.len() - failed.len(),
            reports.len(),
            failed,
            controls.join(", ")
        ),
    );
    let only_log_controls = reports.iter().all(|r| r.pass || r.role == Role::LogControl);
    o.sound = only_log_controls && reduction <= 1e-6 && spatial <= 5e-2;
    o
}

fn criterion_11() -> Outcome {
    let mut worst: [f64; 4] = [0.0; 4];
    let mut ranks = true;
    let two_well = {
        let (r1, r2, ..) = TWO_WELL_REFERENCE;
        PotentialSpec::two_well(144.447_962_363_819_9, 14.598_578_009_561_603, r1, r2)
    };
    let specs = SQUARE_WELL_THRESHOLDS.iter().map(|&c| PotentialSpec::square_well(c, 1.0)).chain([two_well]);
    for spec in specs {
        let p = Problem::new(spec, SpectralConfig::default()).expect("problem");
        let zd = p.classify().expect("classify");
        let n = p.n();
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p.u.clone()));
        for ell in 0..=p.channels() {
            let s1 = zd.s1_matrix(ell, n);
            worst[0] = worst[0].max((&s1 * &zd.d0[ell] - &s1).norm());
            let vg0v = zd.t[ell].matrix.map(|z| z.re) - &u;
            worst[2] = worst[2].max((&s1 + &s1 * &vg0v * &u).norm());
        }
        let proj = &p.vtilde * p.vtilde.transpose() / p.l1;
        worst[1] = worst[1].max((proj * zd.s2_matrix(0, n)).norm());
        ranks &= zd.s1.len() <= zd.s2.len() + 1;
        for ell in 0..2 {
            let pt = SpectralPoint::plus(1e-3);
            let a = p.invert_m(&zd, pt, ell, InvertMethod::Direct).expect("inverse").matrix;
            let b = p.invert_m(&zd, pt.flipped(), ell, InvertMethod::Direct).expect("inverse").matrix;
            worst[3] = worst[3].max((&b - a.map(|z| z.conj())).norm() / a.norm());
        }
    }
    let ok = worst[0] < 1e-7 && worst[1] < 1e-6 && worst[2] < 1e-6 && worst[3] < 1e-10 && ranks;
    outcome(
        11,
        ok,
        format!(
            "|S1 D0 - S1| {:.1e}; |P S2| {:.1e}; |S1 + S1 v G0 w| {:.1e}; rank(S1) <= rank(S2)+1: {ranks}; M^-1 conjugacy {:.1e} (randomized invariants in tests/properties.rs)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn main() {
    let start = Instant::now();
    let criteria: Vec<fn() -> Outcome> = vec![
        criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9,
        criterion_10, criterion_11,
    ];
    let mut results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .into_iter()
            .map(|f| {
                s.spawn(move || {
                    let t = Instant::now();
                    let mut o = f();
                    o.secs = t.elapsed().as_secs_f64();
                    o
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    results.sort_by_key(|o| o.id);

    let mut bad = Vec::new();
    for o in &results {
        let known = KNOWN_FAIL.contains(&o.id);
        println!("criterion {:>2}: {} [{:.0}s] {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.secs, o.detail);
        if (!known && !o.pass) || (known && !o.sound) {
            bad.push(o.id);
        }
    }
    let fails: Vec<usize> = results.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance: {} of {} pass, failing {:?} (expected {:?}), {:.0}s", results.len() - fails.len(), results.len(), fails, KNOWN_FAIL, start.elapsed().as_secs_f64());
    if !bad.is_empty() {
        eprintln!("unexpected acceptance result for criteria {bad:?}");
        std::process::exit(1);
    }
}
