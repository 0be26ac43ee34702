//! Fraction of Haar-random two-qubit pure states flagged at fixed
//! displacements, next to the partial-transpose fraction.

use phasewit::error::Result;
use phasewit::families::RandomStateSpec;
use phasewit::phase_space::{PhasePoint, WidthParam};
use phasewit::scan::detection_rate;

fn main() -> Result<()> {
    let spec = RandomStateSpec { d: 2, seed: 2024, count: 500 };
    let points: Vec<PhasePoint> = [0.0, 1.0, 2.0].iter().map(|&x| PhasePoint::from_reals([x, 0.0, x, 0.0])).collect();
    let sigmas: Vec<WidthParam> = [0.2, 0.6, 1.0].iter().map(|&s| WidthParam::new(s)).collect::<Result<_>>()?;
    let table = detection_rate(&spec, &points, &sigmas)?;
    for r in &table.rows {
        println!("{}  sigma {:.1}  rate {:.3} ({}/{})", r.point, r.sigma, r.rate, r.detected, r.total);
    }
    println!("partial transpose flags {:.3}", table.ppt_fraction);
    for w in table.monotonicity_warnings() {
        println!("warning: {w}");
    }
    Ok(())
}
