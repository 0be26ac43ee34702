//! States and histograms as JSON files, the forms the command line reads.

use phasewit::error::Result;
use phasewit::families::{cat_state, CatParams};
use phasewit::fock::{FockCutoff, StateJson, TwoModeState, C64};
use phasewit::measurement::{measurement_distribution, sample_histogram, MeasurementConfig, Mix, OutcomeHistogram};
use phasewit::phase_space::{husimi_criterion, PhasePoint};

fn main() -> Result<()> {
    let state = cat_state(&CatParams::odd(C64::new(1.0, 0.0), 0.2)?, FockCutoff::square(14)?)?;
    let text = serde_json::to_string(&state.to_json())?;
    let back = TwoModeState::from_json(&serde_json::from_str::<StateJson>(&text)?)?;
    let at = PhasePoint::new(C64::new(0.0, 1.0), C64::new(0.0, 1.0));
    println!("state file {} bytes, minor {:+.6e} -> {:+.6e}", text.len(), husimi_criterion(&state, at)?, husimi_criterion(&back, at)?);

    let dist = measurement_distribution(&state, &MeasurementConfig::exact(at, Mix::Balanced, 0.0))?;
    let counts = sample_histogram(&dist, 1000, 3)?;
    let doc = counts.to_json();
    let reread = OutcomeHistogram::from_json(&doc)?;
    println!("histogram {:?} with {} shots survives the file form: {}", reread.dims(), reread.total(), reread.values == counts.values);
    Ok(())
}
