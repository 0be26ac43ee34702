use serde::Serialize;

use crate::error::Result;
use crate::fock::TwoModeState;
use crate::phase_space::{evaluate_criterion, CriterionKind, PhasePoint, WidthParam, DETECT_TOL};

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Converged once every vertex lies within this distance of the best.
    pub diameter_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            diameter_tol: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexResult<const D: usize> {
    pub x: [f64; D],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn diameter<const D: usize>(simplex: &[([f64; D], f64)]) -> f64 {
    let best = simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Nelder–Mead with the standard coefficients (1, 2, ½, ½).
pub fn nelder_mead<const D: usize, F>(mut f: F, start: [f64; D], opts: SimplexOptions) -> Result<SimplexResult<D>>
where
    F: FnMut(&[f64; D]) -> Result<f64>,
{
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((start, f(&start)?));
    for k in 0..D {
        let mut x = start;
        x[k] += opts.initial_step;
        simplex.push((x, f(&x)?));
    }
    let order = |s: &mut Vec<([f64; D], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    let mut iterations = 0;
    while iterations < opts.max_iterations && diameter(&simplex) >= opts.diameter_tol {
        iterations += 1;
        let mut centroid = [0.0; D];
        for (x, _) in &simplex[..D] {
            for k in 0..D {
                centroid[k] += x[k] / D as f64;
            }
        }
        let worst = simplex[D];
        let along = |t: f64| {
            let mut x = [0.0; D];
            for k in 0..D {
                x[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
            }
            x
        };
        let xr = along(-1.0);
        let fr = f(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe)?;
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                (x, f(&x)?)
            } else {
                let x = along(0.5);
                (x, f(&x)?)
            };
            if fc < worst.1.min(fr) {
                simplex[D] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    for (x, b) in v.0.iter_mut().zip(best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    v.1 = f(&v.0)?;
                }
            }
        }
        order(&mut simplex);
    }
    let converged = diameter(&simplex) < opts.diameter_tol;
    Ok(SimplexResult {
        x: simplex[0].0,
        value: simplex[0].1,
        iterations,
        converged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Refined {
    pub point: PhasePoint,
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; the best point so far is kept.
    pub converged: bool,
}

/// Local minimum of the criterion over `(Re α, Im α, Re β, Im β)`.
pub fn refine_minimum(
    state: &TwoModeState,
    start: PhasePoint,
    sigma: WidthParam,
    criterion: CriterionKind,
) -> Result<Refined> {
    start.check()?;
    let f = |x: &[f64; 4]| Ok(evaluate_criterion(state, PhasePoint::from_reals(*x), criterion, sigma, DETECT_TOL)?.value);
    let r = nelder_mead(f, start.reals(), SimplexOptions::default())?;
    Ok(Refined {
        point: PhasePoint::from_reals(r.x),
        value: r.value,
        iterations: r.iterations,
        converged: r.converged,
    })
}
