//! Reference baselines: the partial-transpose test and the plain-moment
//! (all widths zero) limit of the second-order minor.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{min_eigenvalue, partial_transpose_b, partial_transpose_b_matrix, DisplacedState, FockCutoff, TwoModeState};
use crate::phase_space::{build_moment_matrix, second_order_minor, PhasePoint, WidthAssignment, WidthParam};

/// Default threshold on the partial-transpose spectrum.
pub const PPT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct PptVerdict {
    pub min_eigenvalue: f64,
    pub entangled: bool,
    pub cutoff: FockCutoff,
}

/// Smallest eigenvalue of `ρ^{T_b}` at the state's own cutoff.
pub fn ppt_min_eig(state: &TwoModeState) -> Result<PptVerdict> {
    ppt_min_eig_tol(state, PPT_TOL)
}

/// [`ppt_min_eig`] with threshold `tol`.
pub fn ppt_min_eig_tol(state: &TwoModeState, tol: f64) -> Result<PptVerdict> {
    let min = min_eigenvalue(&partial_transpose_b(state))?;
    Ok(PptVerdict {
        min_eigenvalue: min,
        entangled: min < -tol,
        cutoff: state.cutoff(),
    })
}

/// Partial-transpose verdict for a state that can be rebuilt at any cutoff.
///
/// A value within `10·tol` of zero is recomputed at the doubled cutoff and
/// the doubled result is returned.
pub fn ppt_confirmed<F>(build: F, cutoff: FockCutoff, tol: f64) -> Result<PptVerdict>
where
    F: Fn(FockCutoff) -> Result<TwoModeState>,
{
    let first = ppt_min_eig_tol(&build(cutoff)?, tol)?;
    if first.min_eigenvalue.abs() >= 10.0 * tol {
        return Ok(first);
    }
    ppt_min_eig_tol(&build(cutoff.doubled())?, tol)
}

/// Second-order minor with every width set to zero, i.e. built from plain
/// normally ordered moments of the displaced state.
pub fn sv_moment_minor(state: &TwoModeState, point: PhasePoint) -> Result<f64> {
    second_order_minor(state, point, &WidthAssignment::uniform(WidthParam::MOMENTS))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Largest entrywise gap between the all-ones-width moment matrix of order
/// `max_order` and `√(m!p!n!q!)⟨m,q|ρ(α,β)^{T_b}|n,p⟩` for row `(n,p)`,
/// column `(m,q)`.
pub fn ppt_compression_check(state: &TwoModeState, point: PhasePoint, max_order: usize) -> Result<f64> {
    if max_order == 0 || max_order > 3 {
        return Err(Error::InvalidArgument(format!("order {max_order} outside 1..=3")));
    }
    let cutoff = state.cutoff();
    let need = 2 * max_order + 2;
    if cutoff.dim_a() < need || cutoff.dim_b() < need {
        return Err(Error::InvalidCutoff(format!("{cutoff} is below {need} levels per mode")));
    }
    let m = build_moment_matrix(state, point, max_order, &WidthAssignment::husimi())?;
    let ext = max_order + 1;
    let block = DisplacedState::new(state, point, ext, ext)?.to_matrix();
    let small = FockCutoff::square(ext)?;
    let pt = partial_transpose_b_matrix(&block, small);
    let mut worst = 0.0f64;
    for (r, row) in m.index_map.iter().enumerate() {
        for (c, col) in m.index_map.iter().enumerate() {
            let (n, p, mm, q) = (row.n, row.p, col.n, col.p);
            let scale = (factorial(mm) * factorial(p) * factorial(n) * factorial(q)).sqrt();
            let expected = pt[(small.index(mm, q), small.index(n, p))] * scale;
            worst = worst.max((m.entries[(r, c)] - expected).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{cat_state, coherent_product, noon_state, random_haar_state, CatParams, NoonParams, RandomStateSpec};
    use crate::fock::C64;
    use crate::phase_space::husimi_criterion;

    fn sq(d: usize) -> FockCutoff {
        FockCutoff::square(d).unwrap()
    }

    #[test]
    fn product_states_are_ppt() {
        let s = coherent_product(C64::new(0.5, 0.2), C64::new(-0.3, 0.0), sq(10)).unwrap();
        assert!(!ppt_min_eig(&s).unwrap().entangled);
    }

    #[test]
    fn bell_spectrum() {
        let s = noon_state(&NoonParams::balanced(1), sq(2)).unwrap();
        let v = ppt_min_eig(&s).unwrap();
        assert!((v.min_eigenvalue + 0.5).abs() < 1e-12);
        assert!(v.entangled);
    }

    #[test]
    fn dephased_cat_is_separable() {
        let s = cat_state(&CatParams::odd(C64::new(1.0, 0.0), 1.0).unwrap(), sq(12)).unwrap();
        assert!(!ppt_min_eig(&s).unwrap().entangled);
    }

    #[test]
    fn confirmation_rebuilds_near_zero() {
        let v = ppt_confirmed(|c| Ok(TwoModeState::vacuum(c)), sq(3), PPT_TOL).unwrap();
        assert_eq!(v.cutoff, sq(6));
        assert!(!v.entangled);
        let v = ppt_confirmed(|c| noon_state(&NoonParams::balanced(1), c), sq(3), PPT_TOL).unwrap();
        assert_eq!(v.cutoff, sq(3));
    }

    #[test]
    fn moment_minor_baselines() {
        let s = coherent_product(C64::new(0.4, -0.2), C64::new(0.1, 0.3), sq(12)).unwrap();
        let p = PhasePoint::new(C64::new(0.4, -0.2), C64::new(0.1, 0.3));
        assert!(sv_moment_minor(&s, p).unwrap().abs() < 1e-12);
        let bell = noon_state(&NoonParams::balanced(1), sq(4)).unwrap();
        assert!((sv_moment_minor(&bell, PhasePoint::origin()).unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn moments_are_weaker_on_large_cats() {
        let g = C64::new(3.0, 0.0);
        let s = cat_state(&CatParams::odd(g, 0.0).unwrap(), sq(30)).unwrap();
        let p = PhasePoint::new(C64::new(0.0, 3.0), C64::new(0.0, 3.0));
        assert!(sv_moment_minor(&s, p).unwrap() >= husimi_criterion(&s, p).unwrap());
    }

    #[test]
    fn compression_matches_partial_transpose() {
        let vac = TwoModeState::vacuum(sq(6));
        assert!(ppt_compression_check(&vac, PhasePoint::origin(), 2).unwrap() < 1e-12);
        let bell = noon_state(&NoonParams::balanced(1), sq(6)).unwrap();
        assert!(ppt_compression_check(&bell, PhasePoint::origin(), 2).unwrap() < 1e-10);
        let spec = RandomStateSpec { d: 2, seed: 11, count: 20 };
        for i in 0..20 {
            let s = random_haar_state(&spec, i, sq(6)).unwrap();
            let p = PhasePoint::from_reals([0.1 * i as f64 - 1.0, 0.3, -0.2, 0.05 * i as f64]);
            assert!(ppt_compression_check(&s, p, 2).unwrap() < 1e-9);
        }
    }

    #[test]
    fn compression_needs_room() {
        let vac = TwoModeState::vacuum(sq(5));
        assert!(matches!(
            ppt_compression_check(&vac, PhasePoint::origin(), 2),
            Err(Error::InvalidCutoff(_))
        ));
    }
}
