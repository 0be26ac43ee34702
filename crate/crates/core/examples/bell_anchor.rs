//! The Bell state at the origin: both second-order criteria give -1/4 and
//! the partial transpose has eigenvalue -1/2.

use phasewit::error::Result;
use phasewit::families::{noon_state, NoonParams};
use phasewit::fock::FockCutoff;
use phasewit::phase_space::{evaluate_criterion, husimi_criterion, wigner_criterion, CriterionKind, PhasePoint, WidthParam, DETECT_TOL};
use phasewit::ppt::ppt_min_eig;

fn main() -> Result<()> {
    let bell = noon_state(&NoonParams::balanced(1), FockCutoff::square(4)?)?;
    let origin = PhasePoint::origin();
    println!("husimi minor  {:+.6}", husimi_criterion(&bell, origin)?);
    println!("wigner minor  {:+.6}", wigner_criterion(&bell, origin)?);
    println!("ppt min eig   {:+.6}", ppt_min_eig(&bell)?.min_eigenvalue);

    let report = evaluate_criterion(&bell, origin, CriterionKind::MinEig(2), WidthParam::HUSIMI, DETECT_TOL)?;
    println!("order-2 test: {} (min eig {:+.6})", report.verdict, report.min_eigenvalue);
    Ok(())
}
