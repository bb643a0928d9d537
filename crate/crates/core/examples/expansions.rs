//! Prints the expansion reports for the reference square wells.
use threshold_lab::potentials::{PotentialSpec, SQUARE_WELL_THRESHOLDS};
use threshold_lab::spectral::{ExpansionKind, Problem, SpectralConfig};

fn main() -> threshold_lab::Result<()> {
    let cases = [
        (1.0, vec![ExpansionKind::Mexp, ExpansionKind::MplusS, ExpansionKind::Long]),
        (SQUARE_WELL_THRESHOLDS[0], vec![ExpansionKind::First, ExpansionKind::MplusS, ExpansionKind::Long]),
        (SQUARE_WELL_THRESHOLDS[1], vec![ExpansionKind::Second, ExpansionKind::Cancel]),
        (SQUARE_WELL_THRESHOLDS[2], vec![ExpansionKind::Second, ExpansionKind::Cancel]),
    ];
    for (c, kinds) in cases {
        let p = Problem::new(PotentialSpec::square_well(c, 1.0), SpectralConfig::default())?;
        let zd = p.classify()?;
        println!("c = {c}: {}", zd.classification);
        for k in kinds {
            let t = std::time::Instant::now();
            let rep = p.expansion_report(&zd, k)?;
            for row in rep.rows {
                println!("  {:<32} {:>12.4e} req {:>8.2e} r2 {:.4} pass {}", row.name, row.value, row.required, row.r_squared, row.pass);
            }
            println!("  ({:?} took {:.2?})", k, t.elapsed());
        }
    }
    Ok(())
}
