//! Finite-difference checks linking phase-space derivatives, width
//! derivatives and operator moments, at two step sizes.

use phasewit::error::Result;
use phasewit::families::{noon_state, NoonParams};
use phasewit::fock::FockCutoff;
use phasewit::phase_space::{validate_derivative_identities, PhasePoint, WidthParam};

fn main() -> Result<()> {
    let state = noon_state(&NoonParams::balanced(2), FockCutoff::square(24)?)?;
    let point = PhasePoint::from_reals([0.3, 0.0, 0.2, 0.1]);
    for sigma in [0.5, 1.0] {
        for step in [1e-2, 1e-3] {
            let r = validate_derivative_identities(&state, point, WidthParam::new(sigma)?, step)?;
            println!(
                "sigma {sigma} step {step:e}: cross residual {:.2e}, width residual {:.2e}",
                r.residual_cross, r.residual_sigma
            );
        }
    }
    Ok(())
}
