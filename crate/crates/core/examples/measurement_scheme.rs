//! Reading the Husimi minor off photon-counting histograms: exact
//! distributions, finite shots, and a displacement made by mixing with a
//! strong coherent ancilla.

use phasewit::error::Result;
use phasewit::families::{noon_state, NoonParams};
use phasewit::fock::FockCutoff;
use phasewit::measurement::{estimate_second_order_minor, physical_displacement};
use phasewit::phase_space::{second_order_minor, PhasePoint, WidthAssignment};

fn main() -> Result<()> {
    let state = noon_state(&NoonParams::balanced(2), FockCutoff::square(12)?)?;
    let point = PhasePoint::from_reals([-0.5, -0.5, -0.5, 0.5]);
    let widths = WidthAssignment::husimi();

    println!("direct       {:+.6e}", second_order_minor(&state, point, &widths)?);
    println!("exact counts {:+.6e}", estimate_second_order_minor(&state, point, &widths, 0, 0)?.value);
    for shots in [10_000, 100_000, 1_000_000] {
        let e = estimate_second_order_minor(&state, point, &widths, shots, 7)?;
        println!("{shots:>9} shots  {:+.4e} ± {:.1e}", e.value, e.stderr);
    }

    for tau in [0.92, 0.96, 0.99] {
        let phys = physical_displacement(&state, point, tau)?;
        println!("ancilla tau {tau}: fidelity to the ideal displacement {:.6}", phys.fidelity);
    }
    Ok(())
}
