//! The minor as a function of the width at each state's Husimi optimum:
//! σ = 1 is best, and larger N needs a larger width before it detects.

use phasewit::error::Result;
use phasewit::families::{noon_state, NoonParams};
use phasewit::fock::FockCutoff;
use phasewit::phase_space::{CriterionKind, WidthParam, DETECT_TOL};
use phasewit::scan::{grid_scan, refine_minimum, sigma_sweep, Axis, ScanRegion};

fn main() -> Result<()> {
    let sigmas: Vec<WidthParam> = (1..=10).map(|k| WidthParam::new(k as f64 / 10.0)).collect::<Result<_>>()?;
    for n in [2, 3, 4] {
        let state = noon_state(&NoonParams::balanced(n), FockCutoff::square(32)?)?;
        let axis = Axis::new(-2.0, 2.0, 9)?;
        let coarse = grid_scan(&state, &ScanRegion::full([axis; 4]), WidthParam::HUSIMI, CriterionKind::Husimi)?;
        let start = coarse.minimum().expect("nonempty grid").point;
        let point = refine_minimum(&state, start, WidthParam::HUSIMI, CriterionKind::Husimi)?.point;

        let rows = sigma_sweep(&state, point, &sigmas)?.rows;
        let threshold = rows.iter().find(|r| r.value < -DETECT_TOL).map(|r| r.sigma);
        print!("N={n} at {point}:");
        for r in &rows {
            print!(" {:+.2e}", r.value);
        }
        println!("\n      first detecting width {threshold:?}");
    }
    Ok(())
}
