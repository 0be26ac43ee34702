//! Moment-matrix tests of growing order against the partial transpose,
//! plus the all-ones-width compression identity.

use phasewit::error::Result;
use phasewit::families::{random_haar_state, RandomStateSpec};
use phasewit::fock::FockCutoff;
use phasewit::phase_space::{detect, PhasePoint, WidthAssignment, DETECT_TOL};
use phasewit::ppt::{ppt_compression_check, ppt_min_eig};

fn main() -> Result<()> {
    let spec = RandomStateSpec { d: 3, seed: 1, count: 5 };
    let point = PhasePoint::from_reals([0.4, -0.2, 0.1, 0.3]);
    for k in 0..spec.count {
        let state = random_haar_state(&spec, k, FockCutoff::square(8)?)?;
        print!("state {k}: ppt {:+.3e}", ppt_min_eig(&state)?.min_eigenvalue);
        for order in 1..=3 {
            let r = detect(&state, point, order, &WidthAssignment::husimi(), DETECT_TOL)?;
            print!(" | K={order} {:+.3e} {}", r.min_eigenvalue, r.verdict);
        }
        println!(" | compression gap {:.1e}", ppt_compression_check(&state, point, 3)?);
    }
    Ok(())
}
