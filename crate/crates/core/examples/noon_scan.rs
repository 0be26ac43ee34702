//! Where on the real (α, β) plane the second-order minor of a NOON state
//! turns negative, with the grid minimum polished by a simplex search.
//!
//! `cargo run --example noon_scan -- 4` picks the photon number.

use phasewit::error::Result;
use phasewit::families::{noon_state, NoonParams};
use phasewit::fock::FockCutoff;
use phasewit::phase_space::{CriterionKind, WidthParam, DETECT_TOL};
use phasewit::scan::{grid_scan, refine_minimum, Axis, ScanRegion};

fn main() -> Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let state = noon_state(&NoonParams::balanced(n), FockCutoff::square(36)?)?;
    let axis = Axis::new(-3.0, 3.0, 121)?;
    let scan = grid_scan(&state, &ScanRegion::real_plane(axis, axis), WidthParam::HUSIMI, CriterionKind::M2)?;
    println!("N={n}: {} of {} grid points negative", scan.negative_count(DETECT_TOL), scan.rows.len());

    let best = scan.minimum().expect("nonempty grid");
    println!("grid minimum {:.6e} at {}", best.value, best.point);
    let refined = refine_minimum(&state, best.point, WidthParam::HUSIMI, CriterionKind::M2)?;
    println!("refined      {:.6e} at {} ({} iterations)", refined.value, refined.point, refined.iterations);
    Ok(())
}
