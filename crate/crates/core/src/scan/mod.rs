//! Grid scans over phase space, simplex refinement of witness minima, width
//! sweeps and detection rates over random-state ensembles.

mod ensemble;
mod optimize;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::{FockCutoff, TwoModeState, C64};
use crate::phase_space::{evaluate_criterion, CriterionKind, PhasePoint, Verdict, WidthParam, DETECT_TOL};

pub use ensemble::{detection_rate, detection_rate_on, sigma_sweep, RateRow, RateTable};
pub use optimize::{nelder_mead, refine_minimum, Refined, SimplexOptions, SimplexResult};

/// Largest grid evaluated without an explicit budget.
pub const DEFAULT_BUDGET: usize = 250_000;

pub const CSV_HEADER: [&str; 7] = ["re_alpha", "im_alpha", "re_beta", "im_beta", "sigma", "value", "verdict"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("axis needs at least 2 steps, got {steps}")));
        }
        if !(min.is_finite() && max.is_finite()) || max < min {
            return Err(Error::InvalidArgument(format!("bad axis range [{min}, {max}]")));
        }
        Ok(Self { min, max, steps })
    }

    /// `min:max:steps`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::InvalidArgument(format!("range `{text}` is not min:max:steps"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].trim().parse().map_err(|_| bad())?;
        let max = parts[1].trim().parse().map_err(|_| bad())?;
        let steps = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(min, max, steps)
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.steps {
            return self.max;
        }
        self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
    }
}

/// Which slice of the four real coordinates a grid covers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "slice")]
pub enum Slice {
    /// Real `α` (outer axis) and real `β`.
    RealPlane,
    /// `α = β = t·e^{iφ}`.
    DiagonalLine { phase: f64 },
    /// `Re α, Im α, Re β, Im β`, outermost first.
    FullGrid4D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub slice: Slice,
    pub axes: Vec<Axis>,
    pub budget: usize,
}

impl ScanRegion {
    pub fn real_plane(alpha: Axis, beta: Axis) -> Self {
        Self {
            slice: Slice::RealPlane,
            axes: vec![alpha, beta],
            budget: DEFAULT_BUDGET,
        }
    }

    /// Square real plane `[min, max]²` with `steps` points per axis.
    pub fn square(min: f64, max: f64, steps: usize) -> Result<Self> {
        let a = Axis::new(min, max, steps)?;
        Ok(Self::real_plane(a, a))
    }

    pub fn diagonal(phase: f64, t: Axis) -> Self {
        Self {
            slice: Slice::DiagonalLine { phase },
            axes: vec![t],
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn full(axes: [Axis; 4]) -> Self {
        Self {
            slice: Slice::FullGrid4D,
            axes: axes.to_vec(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    fn check(&self) -> Result<()> {
        let want = match self.slice {
            Slice::RealPlane => 2,
            Slice::DiagonalLine { .. } => 1,
            Slice::FullGrid4D => 4,
        };
        if self.axes.len() != want {
            return Err(Error::InvalidArgument(format!(
                "{:?} needs {want} axes, got {}",
                self.slice,
                self.axes.len()
            )));
        }
        for a in &self.axes {
            Axis::new(a.min, a.max, a.steps)?;
        }
        let size = self.size();
        if size > self.budget {
            return Err(Error::Budget(format!(
                "grid has {size} points but the budget is {}; raise the budget to at least {size}",
                self.budget
            )));
        }
        Ok(())
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Result<Vec<PhasePoint>> {
        self.check()?;
        let n = self.size();
        let mut out = Vec::with_capacity(n);
        for flat in 0..n {
            let mut rem = flat;
            let mut coords = vec![0.0; self.axes.len()];
            for (k, axis) in self.axes.iter().enumerate().rev() {
                coords[k] = axis.value(rem % axis.steps);
                rem /= axis.steps;
            }
            out.push(match self.slice {
                Slice::RealPlane => PhasePoint::from_reals([coords[0], 0.0, coords[1], 0.0]),
                Slice::DiagonalLine { phase } => {
                    let z = C64::from_polar(coords[0], phase);
                    PhasePoint::new(z, z)
                }
                Slice::FullGrid4D => PhasePoint::from_reals([coords[0], coords[1], coords[2], coords[3]]),
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(flatten)]
    pub point: PhasePoint,
    pub sigma: f64,
    pub value: f64,
    pub verdict: Verdict,
}

/// Where a scan came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub state: String,
    pub cutoff: FockCutoff,
    pub seed: Option<u64>,
    pub criterion: String,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub provenance: Provenance,
}

impl ScanResult {
    pub(crate) fn new(rows: Vec<ScanRow>, cutoff: FockCutoff, criterion: String) -> Self {
        Self {
            rows,
            provenance: Provenance {
                state: String::from("unspecified"),
                cutoff,
                seed: None,
                criterion,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    /// Records how the scanned state was made.
    pub fn with_source(mut self, state: impl Into<String>, seed: Option<u64>) -> Self {
        self.provenance.state = state.into();
        self.provenance.seed = seed;
        self
    }

    pub fn minimum(&self) -> Option<&ScanRow> {
        self.rows.iter().fold(None, |best: Option<&ScanRow>, r| match best {
            Some(b) if b.value <= r.value => Some(b),
            _ => Some(r),
        })
    }

    pub fn negative_count(&self, tol: f64) -> usize {
        self.rows.iter().filter(|r| r.value < -tol).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            let [a, b, c, d] = r.point.reals();
            w.write_record([
                a.to_string(),
                b.to_string(),
                c.to_string(),
                d.to_string(),
                r.sigma.to_string(),
                r.value.to_string(),
                r.verdict.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    pub fn summary_json(&self) -> Value {
        let min = self.minimum();
        json!({
            "provenance": self.provenance,
            "rows": self.rows.len(),
            "negative_rows": self.negative_count(DETECT_TOL),
            "minimum": min.map(|r| json!({
                "point": r.point,
                "sigma": r.sigma,
                "value": r.value,
                "verdict": r.verdict,
            })),
        })
    }
}

impl fmt::Display for ScanResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.minimum() {
            Some(m) => write!(f, "{} rows, minimum {} at {}", self.rows.len(), m.value, m.point),
            None => write!(f, "0 rows"),
        }
    }
}

/// Evaluates `criterion` at every grid point, in parallel, rows in grid order.
pub fn grid_scan(
    state: &TwoModeState,
    region: &ScanRegion,
    sigma: WidthParam,
    criterion: CriterionKind,
) -> Result<ScanResult> {
    let points = region.points()?;
    let rows = points
        .into_par_iter()
        .map(|p| {
            let r = evaluate_criterion(state, p, criterion, sigma, DETECT_TOL)?;
            Ok(ScanRow {
                point: p,
                sigma: sigma.value(),
                value: r.value,
                verdict: r.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult::new(rows, state.cutoff(), criterion.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{coherent_product, noon_state, NoonParams};

    #[test]
    fn axis_parsing_and_ends() {
        let a = Axis::parse("-3:3:121").unwrap();
        assert_eq!(a.value(0), -3.0);
        assert_eq!(a.value(60), 0.0);
        assert_eq!(a.value(120), 3.0);
        assert!(Axis::parse("0:1:1").is_err());
        assert!(Axis::parse("0:1").is_err());
    }

    #[test]
    fn grid_order_is_row_major() {
        let r = ScanRegion::square(0.0, 1.0, 2).unwrap();
        let p: Vec<_> = r.points().unwrap().iter().map(|p| (p.alpha.re, p.beta.re)).collect();
        assert_eq!(p, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn budget_is_enforced() {
        let a = Axis::new(-1.0, 1.0, 20).unwrap();
        let r = ScanRegion::full([a; 4]).with_budget(1000);
        let err = r.points().unwrap_err();
        assert!(matches!(err, Error::Budget(ref m) if m.contains("160000")));
    }

    #[test]
    fn noon_three_has_negative_region() {
        let s = noon_state(&NoonParams::balanced(3), FockCutoff::square(18).unwrap()).unwrap();
        let region = ScanRegion::square(-3.0, 3.0, 31).unwrap();
        let res = grid_scan(&s, &region, WidthParam::HUSIMI, CriterionKind::M2).unwrap();
        assert_eq!(res.rows.len(), 31 * 31);
        assert!(res.negative_count(DETECT_TOL) > 0);
    }

    #[test]
    fn products_scan_non_negative() {
        let s = coherent_product(C64::new(0.5, 0.0), C64::new(0.0, -0.5), FockCutoff::square(12).unwrap()).unwrap();
        let region = ScanRegion::square(-1.5, 1.5, 7).unwrap();
        let res = grid_scan(&s, &region, WidthParam::HUSIMI, CriterionKind::M2).unwrap();
        assert!(res.rows.iter().all(|r| r.value >= -1e-8));
        let vac = TwoModeState::vacuum(FockCutoff::square(8).unwrap());
        let res = grid_scan(&vac, &region, WidthParam::HUSIMI, CriterionKind::Wigner).unwrap();
        assert!(res.rows.iter().all(|r| r.value >= -1e-8));
    }

    #[test]
    fn csv_layout() {
        let vac = TwoModeState::vacuum(FockCutoff::square(4).unwrap());
        let region = ScanRegion::diagonal(0.5, Axis::new(0.0, 1.0, 3).unwrap());
        let res = grid_scan(&vac, &region, WidthParam::HUSIMI, CriterionKind::Husimi).unwrap();
        let text = res.to_csv().unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 3);
        assert_eq!(res.summary_json()["rows"], 3);
    }
}
