use std::f64::consts::PI;

use serde::Serialize;

use super::{moment_matrix_element, phase_space_value, MultiIndex, PhasePoint, WidthParam};
use crate::error::{Error, Result};
use crate::fock::{TwoModeState, C64};

/// Finite-difference checks of the links between amplitude derivatives,
/// width derivatives and operator-path elements.
#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub step: f64,
    pub sigma: f64,
    /// `∂_α ∂_{β*} P` by central differences.
    pub cross_fd: C64,
    /// `(σ²)²/π² · E((0,0),(1,1))` from the operator path.
    pub cross_operator: C64,
    pub residual_cross: f64,
    /// `−σ² ∂_σ(P/σ)` on mode a.
    pub sigma_lhs: f64,
    /// `(σ + ∂_α ∂_{α*})(P/σ)` on mode a.
    pub sigma_rhs: f64,
    pub residual_sigma: f64,
}

struct Estimates {
    cross: C64,
    sigma_lhs: f64,
    sigma_rhs: f64,
}

fn shifted(point: PhasePoint, dx: [f64; 4]) -> PhasePoint {
    let x = point.reals();
    PhasePoint::from_reals([x[0] + dx[0], x[1] + dx[1], x[2] + dx[2], x[3] + dx[3]])
}

fn estimates(state: &TwoModeState, point: PhasePoint, sigma: f64, h: f64) -> Result<Estimates> {
    let s = WidthParam::new(sigma)?;
    let p = |dx: [f64; 4]| phase_space_value(state, shifted(point, dx), s, s);
    // Mixed partial ∂_u ∂_v with axes u, v among (Re α, Im α, Re β, Im β).
    let mixed = |u: usize, v: usize| -> Result<f64> {
        let mut acc = 0.0;
        for (su, sv, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            let mut dx = [0.0; 4];
            dx[u] += su * h;
            dx[v] += sv * h;
            acc += sign * p(dx)?;
        }
        Ok(acc / (4.0 * h * h))
    };
    // ∂_α ∂_{β*} = ¼(∂x∂u − i∂x∂v + i∂y∂u + ∂y∂v).
    let (xu, xv, yu, yv) = (mixed(0, 2)?, mixed(0, 3)?, mixed(1, 2)?, mixed(1, 3)?);
    let cross = C64::new(xu + yv, yu - xv) * 0.25;

    let g = |sa: f64, dx: [f64; 4]| -> Result<f64> {
        Ok(phase_space_value(state, shifted(point, dx), WidthParam::new(sa)?, s)? / sa)
    };
    let sigma_lhs = -sigma * sigma * (g(sigma + h, [0.0; 4])? - g(sigma - h, [0.0; 4])?) / (2.0 * h);
    let g0 = g(sigma, [0.0; 4])?;
    let lap = g(sigma, [h, 0.0, 0.0, 0.0])? + g(sigma, [-h, 0.0, 0.0, 0.0])? + g(sigma, [0.0, h, 0.0, 0.0])?
        + g(sigma, [0.0, -h, 0.0, 0.0])?
        - 4.0 * g0;
    let sigma_rhs = sigma * g0 + 0.25 * lap / (h * h);
    Ok(Estimates {
        cross,
        sigma_lhs,
        sigma_rhs,
    })
}

/// Checks both identities at width `sigma ∈ (0, 1]` with finite-difference
/// step `step ∈ [1e-4, 1e-2]`.
///
/// Errors with a diagnostic when the estimates at `h, 2h, 4h` stop
/// contracting, i.e. roundoff dominates the truncation error.
pub fn validate_derivative_identities(
    state: &TwoModeState,
    point: PhasePoint,
    sigma: WidthParam,
    step: f64,
) -> Result<DerivativeReport> {
    point.check()?;
    let s = sigma.value();
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("width {s} must lie in (0, 1]")));
    }
    if !(1e-4..=1e-2).contains(&step) {
        return Err(Error::InvalidArgument(format!("step {step} outside [1e-4, 1e-2]")));
    }
    if s - 4.0 * step <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "width {s} too small for step {step}: σ-differences would leave the domain"
        )));
    }
    let e1 = estimates(state, point, s, step)?;
    let e2 = estimates(state, point, s, 2.0 * step)?;
    let e4 = estimates(state, point, s, 4.0 * step)?;

    let scale = phase_space_value(state, point, sigma, sigma)?.abs().max(1e-3);
    let floor = 64.0 * f64::EPSILON * scale / (step * step);
    let stalls = |d1: f64, d2: f64| d1 > floor && d1 > d2;
    let d_cross = ((e1.cross - e2.cross).norm(), (e2.cross - e4.cross).norm());
    let r = |e: &Estimates| e.sigma_lhs - e.sigma_rhs;
    let d_sigma = ((r(&e1) - r(&e2)).abs(), (r(&e2) - r(&e4)).abs());
    if stalls(d_cross.0, d_cross.1) || stalls(d_sigma.0, d_sigma.1) {
        return Err(Error::Diagnostic(format!(
            "finite differences at step {step} are dominated by roundoff (Richardson sequence not contracting)"
        )));
    }

    let origin = MultiIndex::new(0, 0);
    let e12 = moment_matrix_element(state, point, origin, MultiIndex::new(1, 1), sigma, sigma)?;
    let cross_operator = e12 * (s * s).powi(2) / (PI * PI);
    Ok(DerivativeReport {
        step,
        sigma: s,
        cross_fd: e1.cross,
        cross_operator,
        residual_cross: (e1.cross - cross_operator).norm(),
        sigma_lhs: e1.sigma_lhs,
        sigma_rhs: e1.sigma_rhs,
        residual_sigma: (e1.sigma_lhs - e1.sigma_rhs).abs(),
    })
}
