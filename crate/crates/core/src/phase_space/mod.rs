//! σ-parametrized phase-space distributions and the moment matrices built
//! from them.
//!
//! Conventions: `ρ(α,β) = D†(α,β) ρ D(α,β)`; the smoothing operator for width
//! `σ` is `Σ_i (1−σ)^i |i⟩⟨i|` per mode; `P = (σ_a σ_b/π²) Tr[ρ(α,β) S]`.

mod criteria;
mod derivatives;
mod matrix;

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    check_finite, displacement_guard, padded_dimension, CMatrix, DisplacedState, FockCutoff, Mode,
    ModeOperator, TruncationFlag, TwoModeState, C64, DEFAULT_CUTOFF_GUARD,
};

pub use criteria::{
    detect, evaluate_criterion, husimi_criterion, second_order_minor, second_order_report,
    wigner_criterion, CriterionKind, MinorReport, Verdict, WitnessReport, DETECT_TOL,
};
pub use derivatives::{validate_derivative_identities, DerivativeReport};
pub use matrix::{build_moment_matrix, moment_matrix_element, MomentMatrix};

/// Evaluation point `(α, β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub alpha: C64,
    pub beta: C64,
}

impl PhasePoint {
    pub fn new(alpha: C64, beta: C64) -> Self {
        Self { alpha, beta }
    }

    pub fn origin() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    /// `[Re α, Im α, Re β, Im β]`.
    pub fn from_reals(x: [f64; 4]) -> Self {
        Self::new(C64::new(x[0], x[1]), C64::new(x[2], x[3]))
    }

    pub fn reals(&self) -> [f64; 4] {
        [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im]
    }

    pub fn check(&self) -> Result<()> {
        check_finite(self.alpha, "alpha")?;
        check_finite(self.beta, "beta")
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.reals();
        write!(f, "({a}{b:+}i, {c}{d:+}i)")
    }
}

/// Guard diagnostics for evaluating `state` at `point`.
pub fn guard_flags(cutoff: FockCutoff, point: PhasePoint) -> Vec<TruncationFlag> {
    let mut flags = Vec::new();
    flags.extend(displacement_guard(Mode::A, point.alpha, cutoff.dim_a(), DEFAULT_CUTOFF_GUARD));
    flags.extend(displacement_guard(Mode::B, point.beta, cutoff.dim_b(), DEFAULT_CUTOFF_GUARD));
    flags
}

/// Smoothing width `σ ∈ [0, 2]`: 0 moments, 1 Husimi, 2 Wigner.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WidthParam(f64);

impl WidthParam {
    pub const MOMENTS: WidthParam = WidthParam(0.0);
    pub const HUSIMI: WidthParam = WidthParam(1.0);
    pub const WIGNER: WidthParam = WidthParam(2.0);

    pub fn new(sigma: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&sigma) {
            return Err(Error::InvalidArgument(format!("width {sigma} outside [0, 2]")));
        }
        Ok(Self(sigma))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `σ_i + σ_j − σ_i σ_j`.
    pub fn combine(self, other: WidthParam) -> WidthParam {
        WidthParam(combine(self.0, other.0))
    }
}

impl TryFrom<f64> for WidthParam {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WidthParam> for f64 {
    fn from(w: WidthParam) -> f64 {
        w.0
    }
}

/// `a + b − ab`, written as `1 − (1−a)(1−b)` so that `1∘σ = 1` holds exactly.
pub(crate) fn combine(a: f64, b: f64) -> f64 {
    if a == 1.0 || b == 1.0 {
        return 1.0;
    }
    a + b - a * b
}

/// `σ = 2/(1−s)` for the s-ordering parameter `s < 1`.
pub fn sigma_from_s(s: f64) -> Result<WidthParam> {
    if !(s < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "s = {s}: only s < 1 maps to a regular distribution"
        )));
    }
    WidthParam::new(2.0 / (1.0 - s)).map_err(|_| {
        Error::OutOfDomain(format!("s = {s} maps to a width above 2"))
    })
}

/// Per-row widths `σ⁽ᵃ⁾ᵢ`, `σ⁽ᵇ⁾ᵢ`. A single entry applies to every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthAssignment {
    pub a: Vec<WidthParam>,
    pub b: Vec<WidthParam>,
}

impl WidthAssignment {
    pub fn new(a: Vec<WidthParam>, b: Vec<WidthParam>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument("width lists must be nonempty".into()));
        }
        Ok(Self { a, b })
    }

    /// Same width on every row and both modes.
    pub fn uniform(sigma: WidthParam) -> Self {
        Self {
            a: vec![sigma],
            b: vec![sigma],
        }
    }

    /// Equal per-row widths on both modes.
    pub fn symmetric(rows: Vec<WidthParam>) -> Result<Self> {
        Self::new(rows.clone(), rows)
    }

    pub fn husimi() -> Self {
        Self::uniform(WidthParam::HUSIMI)
    }

    /// Row widths 0 and 2: moments on the diagonal, Wigner off it.
    pub fn wigner() -> Self {
        let rows = vec![WidthParam::MOMENTS, WidthParam::WIGNER];
        Self {
            a: rows.clone(),
            b: rows,
        }
    }

    pub(crate) fn check_rows(&self, rows: usize) -> Result<()> {
        for (name, list) in [("a", &self.a), ("b", &self.b)] {
            if list.len() != 1 && list.len() != rows {
                return Err(Error::InvalidArgument(format!(
                    "mode-{name} widths: expected 1 or {rows} entries, got {}",
                    list.len()
                )));
            }
        }
        Ok(())
    }

    fn row(list: &[WidthParam], i: usize) -> f64 {
        list.get(i).unwrap_or(&list[0]).value()
    }

    /// Combined `(σ⁽ᵃ⁾ᵢⱼ, σ⁽ᵇ⁾ᵢⱼ)` for rows `i`, `j`.
    pub fn combined(&self, i: usize, j: usize) -> (f64, f64) {
        (
            combine(Self::row(&self.a, i), Self::row(&self.a, j)),
            combine(Self::row(&self.b, i), Self::row(&self.b, j)),
        )
    }

    /// Largest per-row width on either mode.
    pub fn max_row(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0f64, |m, s| m.max(s.value()))
    }
}

/// Exponent pair `(n, p)` for `a^n`, `b^p`. Serialized as `[n, p]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct MultiIndex {
    pub n: usize,
    pub p: usize,
}

impl MultiIndex {
    pub const fn new(n: usize, p: usize) -> Self {
        Self { n, p }
    }

    pub fn order(&self) -> usize {
        self.n + self.p
    }
}

impl From<[usize; 2]> for MultiIndex {
    fn from(v: [usize; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<MultiIndex> for [usize; 2] {
    fn from(m: MultiIndex) -> Self {
        [m.n, m.p]
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(self.p.cmp(&other.p))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.p)
    }
}

/// All indices with `n + p ≤ order`, in canonical order.
pub fn canonical_indices(order: usize) -> Vec<MultiIndex> {
    (0..=order)
        .flat_map(|t| (0..=t).map(move |p| MultiIndex::new(t - p, p)))
        .collect()
}

/// `Σ_ij (1−σ_a)^i (1−σ_b)^j |ij⟩⟨ij|`.
pub fn smoothing_operator(sigma_a: WidthParam, sigma_b: WidthParam, cutoff: FockCutoff) -> ModeOperator {
    let (wa, wb) = (1.0 - sigma_a.value(), 1.0 - sigma_b.value());
    let n = cutoff.total();
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        let (i, j) = cutoff.levels(k);
        m[(k, k)] = C64::new(wa.powi(i as i32) * wb.powi(j as i32), 0.0);
    }
    ModeOperator::new(m, format!("S({}, {})", sigma_a.value(), sigma_b.value()))
}

/// Levels of the displaced state needed for sums weighted by `(1−σ)^i`
/// with exponents up to `max_exp`.
pub(crate) fn smoothing_extent(sigmas: &[f64], dim: usize, amp: f64, max_exp: usize) -> usize {
    if sigmas.iter().all(|&s| s == 1.0) {
        return max_exp + 1;
    }
    let full = padded_dimension(dim, amp) + max_exp;
    let w = sigmas.iter().fold(0.0f64, |m, s| m.max((1.0 - s).abs()));
    if w < 1.0 {
        // Stop once w^i·(i+max_exp)^max_exp is far below double precision.
        let tail = (-40.0 / w.ln()).ceil() as usize;
        full.min(tail + 4 * max_exp + 2)
    } else {
        full
    }
}

/// `P(α, β; σ_a, σ_b)`.
pub fn phase_space_value(
    state: &TwoModeState,
    point: PhasePoint,
    sigma_a: WidthParam,
    sigma_b: WidthParam,
) -> Result<f64> {
    let (sa, sb) = (sigma_a.value(), sigma_b.value());
    let cutoff = state.cutoff();
    let ext_a = smoothing_extent(&[sa], cutoff.dim_a(), point.alpha.norm(), 0);
    let ext_b = smoothing_extent(&[sb], cutoff.dim_b(), point.beta.norm(), 0);
    let view = DisplacedState::new(state, point, ext_a, ext_b)?;
    let origin = MultiIndex::new(0, 0);
    let trace = matrix::element_on(&view, origin, origin, sa, sb);
    Ok(sa * sb / (PI * PI) * trace.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{noon_state, NoonParams};

    #[test]
    fn width_from_ordering_parameter() {
        assert_eq!(sigma_from_s(-1.0).unwrap().value(), 1.0);
        assert_eq!(sigma_from_s(0.0).unwrap().value(), 2.0);
        assert_eq!(sigma_from_s(-3.0).unwrap().value(), 0.5);
        assert!(matches!(sigma_from_s(1.0), Err(Error::OutOfDomain(_))));
        assert!(matches!(sigma_from_s(0.5), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn width_combination_rules() {
        for s in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert_eq!(WidthParam::HUSIMI.combine(WidthParam::new(s).unwrap()).value(), 1.0);
            assert_eq!(combine(0.0, s), s);
            assert!((combine(s, s) - s * (2.0 - s)).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&combine(s, s)));
        }
    }

    #[test]
    fn canonical_order_of_indices() {
        let idx = canonical_indices(2);
        let pairs: Vec<_> = idx.iter().map(|m| (m.n, m.p)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(sorted, idx);
    }

    #[test]
    fn smoothing_limits() {
        let c = FockCutoff::square(3).unwrap();
        let q = smoothing_operator(WidthParam::HUSIMI, WidthParam::HUSIMI, c).matrix;
        assert_eq!(q[(0, 0)].re, 1.0);
        assert_eq!(q.iter().filter(|z| z.norm() != 0.0).count(), 1);
        let id = smoothing_operator(WidthParam::MOMENTS, WidthParam::MOMENTS, c).matrix;
        assert_eq!(id, CMatrix::identity(9, 9));
        let parity = smoothing_operator(WidthParam::WIGNER, WidthParam::WIGNER, c).matrix;
        for k in 0..9 {
            let (i, j) = c.levels(k);
            assert_eq!(parity[(k, k)].re, if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn vacuum_values_at_origin() {
        let vac = TwoModeState::vacuum(FockCutoff::square(4).unwrap());
        let q = phase_space_value(&vac, PhasePoint::origin(), WidthParam::HUSIMI, WidthParam::HUSIMI).unwrap();
        assert!((q - 1.0 / (PI * PI)).abs() < 1e-14);
        let w = phase_space_value(&vac, PhasePoint::origin(), WidthParam::WIGNER, WidthParam::WIGNER).unwrap();
        assert!((w - 4.0 / (PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn bell_husimi_vanishes_at_origin() {
        let bell = noon_state(&NoonParams::balanced(1), FockCutoff::square(4).unwrap()).unwrap();
        let q = phase_space_value(&bell, PhasePoint::origin(), WidthParam::HUSIMI, WidthParam::HUSIMI).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn width_param_rejects_out_of_range() {
        assert!(WidthParam::new(-0.1).is_err());
        assert!(WidthParam::new(2.1).is_err());
        assert!(serde_json::from_str::<WidthParam>("2.5").is_err());
    }
}
