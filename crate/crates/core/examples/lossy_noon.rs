//! Photon loss on both arms weakens the violation at the lossless optimum
//! but never helps it.

use phasewit::error::Result;
use phasewit::families::lossy_noon;
use phasewit::fock::FockCutoff;
use phasewit::phase_space::{husimi_criterion, PhasePoint};
use phasewit::ppt::ppt_min_eig;

fn main() -> Result<()> {
    let point = PhasePoint::from_reals([-0.5, -0.5, -0.5, 0.5]);
    println!("  tau   husimi minor   ppt min eig");
    for k in 0..=6 {
        let tau = 1.0 - 0.05 * k as f64;
        let state = lossy_noon(2, tau, FockCutoff::square(3)?)?;
        println!(
            "{tau:5.2}   {:+.6e}   {:+.6e}",
            husimi_criterion(&state, point)?,
            ppt_min_eig(&state)?.min_eigenvalue
        );
    }
    Ok(())
}
