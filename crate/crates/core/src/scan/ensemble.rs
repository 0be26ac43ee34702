use rayon::prelude::*;
use serde::Serialize;

use super::{ScanResult, ScanRow};
use crate::error::{Error, Result};
use crate::families::{random_haar_state, RandomStateSpec};
use crate::fock::{FockCutoff, TwoModeState};
use crate::phase_space::{evaluate_criterion, second_order_minor, CriterionKind, PhasePoint, WidthAssignment, WidthParam, DETECT_TOL};
use crate::ppt::ppt_min_eig;

/// Second-order minor with equal row widths `σ` at a fixed point, one row
/// per width. Widths above 1 are evaluated with the verdict withheld.
pub fn sigma_sweep(state: &TwoModeState, point: PhasePoint, sigmas: &[WidthParam]) -> Result<ScanResult> {
    let rows = sigmas
        .iter()
        .map(|&s| {
            let r = evaluate_criterion(state, point, CriterionKind::M2, s, DETECT_TOL)?;
            Ok(ScanRow {
                point,
                sigma: s.value(),
                value: r.value,
                verdict: r.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult::new(rows, state.cutoff(), CriterionKind::M2.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub point: PhasePoint,
    pub sigma: f64,
    pub detected: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTable {
    pub spec: RandomStateSpec,
    pub rows: Vec<RateRow>,
    /// States with a negative partial transpose.
    pub ppt_entangled: usize,
    pub ppt_fraction: f64,
}

impl RateTable {
    pub fn rate(&self, point: PhasePoint, sigma: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.point == point && r.sigma == sigma)
            .map(|r| r.rate)
    }

    /// Drops in rate as `σ` grows (per point) larger than `2/√count`.
    pub fn monotonicity_warnings(&self) -> Vec<String> {
        let slack = 2.0 / (self.spec.count as f64).sqrt();
        let mut out = Vec::new();
        for a in &self.rows {
            for b in &self.rows {
                if a.point == b.point && a.sigma < b.sigma && b.sigma <= 1.0 && a.rate - b.rate > slack {
                    out.push(format!(
                        "rate at {} falls from {} (σ={}) to {} (σ={})",
                        a.point, a.rate, a.sigma, b.rate, b.sigma
                    ));
                }
            }
        }
        out
    }
}

/// Fraction of `spec.count` Haar-random pure states whose second-order minor
/// (equal row widths `σ`) is below `−DETECT_TOL`, per point and width.
pub fn detection_rate(spec: &RandomStateSpec, points: &[PhasePoint], sigmas: &[WidthParam]) -> Result<RateTable> {
    detection_rate_on(spec, points, sigmas, FockCutoff::square(spec.d)?, DETECT_TOL)
}

/// [`detection_rate`] with the states embedded in `cutoff` and detection
/// threshold `tol`.
pub fn detection_rate_on(
    spec: &RandomStateSpec,
    points: &[PhasePoint],
    sigmas: &[WidthParam],
    cutoff: FockCutoff,
    tol: f64,
) -> Result<RateTable> {
    if spec.count == 0 {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let combos: Vec<(PhasePoint, WidthParam)> = points
        .iter()
        .flat_map(|&p| sigmas.iter().map(move |&s| (p, s)))
        .collect();
    let per_state = (0..spec.count)
        .into_par_iter()
        .map(|k| {
            let state = random_haar_state(spec, k, cutoff)?;
            let hits = combos
                .iter()
                .map(|&(p, s)| Ok(second_order_minor(&state, p, &WidthAssignment::uniform(s))? < -tol))
                .collect::<Result<Vec<bool>>>()?;
            Ok((hits, ppt_min_eig(&state)?.entangled))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = combos
        .iter()
        .enumerate()
        .map(|(c, &(point, s))| {
            let detected = per_state.iter().filter(|(h, _)| h[c]).count();
            RateRow {
                point,
                sigma: s.value(),
                detected,
                total: spec.count,
                rate: detected as f64 / spec.count as f64,
            }
        })
        .collect();
    let ppt_entangled = per_state.iter().filter(|(_, e)| *e).count();
    Ok(RateTable {
        spec: *spec,
        rows,
        ppt_entangled,
        ppt_fraction: ppt_entangled as f64 / spec.count as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{noon_state, NoonParams};
    use crate::fock::C64;
    use crate::phase_space::husimi_criterion;

    fn widths(v: &[f64]) -> Vec<WidthParam> {
        v.iter().map(|&s| WidthParam::new(s).unwrap()).collect()
    }

    #[test]
    fn sweep_at_one_is_husimi() {
        let s = noon_state(&NoonParams::balanced(2), FockCutoff::square(10).unwrap()).unwrap();
        let p = PhasePoint::new(C64::new(-0.5, -0.5), C64::new(-0.5, 0.5));
        let sweep = sigma_sweep(&s, p, &widths(&[0.5, 1.0, 1.5])).unwrap();
        assert!((sweep.rows[1].value - husimi_criterion(&s, p).unwrap()).abs() < 1e-12);
        assert_eq!(sweep.rows[2].verdict, crate::phase_space::Verdict::Withheld);
    }

    #[test]
    fn rates_are_deterministic() {
        let spec = RandomStateSpec { d: 2, seed: 5, count: 40 };
        let pts = [PhasePoint::origin(), PhasePoint::from_reals([2.0, 0.0, 2.0, 0.0])];
        let a = detection_rate(&spec, &pts, &widths(&[1.0])).unwrap();
        let b = detection_rate(&spec, &pts, &widths(&[1.0])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        assert!(a.ppt_fraction > 0.9);
    }
}
