//! Odd entangled cats at (iγ, iγ), then dephasing toward the separable
//! mixture at p = 1.

use phasewit::error::Result;
use phasewit::families::{cat_state, coherent_levels, CatParams};
use phasewit::fock::{FockCutoff, C64};
use phasewit::phase_space::{husimi_criterion, PhasePoint};
use phasewit::ppt::sv_moment_minor;

fn main() -> Result<()> {
    for gamma in [0.5, 1.0, 2.0, 3.0] {
        let g = C64::new(gamma, 0.0);
        let cutoff = FockCutoff::square(coherent_levels(g, 1e-20).max(8))?;
        let state = cat_state(&CatParams::odd(g, 0.0)?, cutoff)?;
        let at = PhasePoint::new(C64::new(0.0, gamma), C64::new(0.0, gamma));
        println!(
            "gamma {gamma}: husimi {:+.3e}, plain moments {:+.3e} ({cutoff})",
            husimi_criterion(&state, at)?,
            sv_moment_minor(&state, at)?
        );
    }

    let at = PhasePoint::new(C64::new(0.0, 1.0), C64::new(0.0, 1.0));
    for p in [0.0, 0.25, 0.5, 0.75, 0.9, 1.0] {
        let state = cat_state(&CatParams::odd(C64::new(1.0, 0.0), p)?, FockCutoff::square(20)?)?;
        println!("p = {p:4}: husimi {:+.3e}", husimi_criterion(&state, at)?);
    }
    Ok(())
}
