use std::fmt;

use serde::{Deserialize, Serialize};

use super::matrix::{build_on_indices, MomentMatrix};
use super::{build_moment_matrix, MultiIndex, PhasePoint, WidthAssignment, WidthParam};
use crate::error::Result;
use crate::fock::{min_eigenvalue, CMatrix, TruncationFlag, TwoModeState};

/// Default threshold below which a minor or eigenvalue counts as negative.
pub const DETECT_TOL: f64 = 1e-9;

/// Principal minors are enumerated exhaustively up to this matrix size when
/// the cheap families miss a negative one.
const FULL_ENUMERATION_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Entangled,
    Inconclusive,
    /// Widths above 1 void the separability bound.
    Withheld,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Entangled => "entangled",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Withheld => "withheld",
        })
    }
}

/// Which witness to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    /// Second-order minor with equal row widths `σ` on both modes.
    M2,
    /// Second-order minor with every width 1.
    Husimi,
    /// Second-order minor with row widths 0 and 2.
    Wigner,
    /// Smallest eigenvalue of the order-`K` moment matrix at width `σ`.
    MinEig(usize),
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionKind::M2 => f.write_str("m2"),
            CriterionKind::Husimi => f.write_str("husimi"),
            CriterionKind::Wigner => f.write_str("wigner"),
            CriterionKind::MinEig(k) => write!(f, "mineig{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorReport {
    pub rows: Vec<MultiIndex>,
    pub value: f64,
}

/// Outcome of a witness evaluation at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub criterion: String,
    pub value: f64,
    #[serde(rename = "min_eig")]
    pub min_eigenvalue: f64,
    pub worst_minor: MinorReport,
    #[serde(flatten)]
    pub point: PhasePoint,
    #[serde(rename = "sigma")]
    pub widths: WidthAssignment,
    pub flags: Vec<String>,
    pub verdict: Verdict,
}

fn principal_minor(m: &CMatrix, subset: &[usize]) -> f64 {
    let k = subset.len();
    let sub = CMatrix::from_fn(k, k, |i, j| m[(subset[i], subset[j])]);
    sub.determinant().re
}

/// Most negative of the 1×1, 2×2 and leading principal minors, ties broken
/// by canonical order. Falls back to full enumeration for small matrices
/// when these are all non-negative but the spectrum is not.
fn worst_minor(m: &MomentMatrix, min_eig: f64, tol: f64) -> MinorReport {
    let n = m.dim();
    let mut subsets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            subsets.push(vec![i, j]);
        }
    }
    for k in 3..=n {
        subsets.push((0..k).collect());
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let consider = |best: &mut Option<(Vec<usize>, f64)>, s: Vec<usize>| {
        let v = principal_minor(&m.entries, &s);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            *best = Some((s, v));
        }
    };
    for s in subsets {
        consider(&mut best, s);
    }
    let found_negative = best.as_ref().is_some_and(|(_, v)| *v < 0.0);
    if !found_negative && min_eig < -tol && n <= FULL_ENUMERATION_LIMIT {
        for mask in 1u32..(1u32 << n) {
            let s: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
            if s.len() >= 3 {
                consider(&mut best, s);
            }
        }
    }
    let (rows, value) = best.expect("matrix is nonempty");
    MinorReport {
        rows: rows.into_iter().map(|i| m.index_map[i]).collect(),
        value,
    }
}

fn flag_strings(flags: &[TruncationFlag]) -> Vec<String> {
    flags.iter().map(|f| f.to_string()).collect()
}

/// Full moment-matrix test: smallest eigenvalue plus the certifying minor.
pub fn detect(
    state: &TwoModeState,
    point: PhasePoint,
    max_order: usize,
    widths: &WidthAssignment,
    tol: f64,
) -> Result<WitnessReport> {
    let m = build_moment_matrix(state, point, max_order, widths)?;
    let min_eig = min_eigenvalue(&m.entries)?;
    let worst = worst_minor(&m, min_eig, tol);
    let mut flags = m.flags.clone();
    let verdict = if widths.max_row() > 1.0 {
        flags.push(TruncationFlag::VerdictWithheld);
        Verdict::Withheld
    } else if min_eig < -tol {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    Ok(WitnessReport {
        criterion: CriterionKind::MinEig(max_order).to_string(),
        value: min_eig,
        min_eigenvalue: min_eig,
        worst_minor: worst,
        point,
        widths: widths.clone(),
        flags: flag_strings(&flags),
        verdict,
    })
}

const SECOND_ORDER_ROWS: [MultiIndex; 2] = [MultiIndex::new(0, 0), MultiIndex::new(1, 1)];

fn second_order_matrix(state: &TwoModeState, point: PhasePoint, widths: &WidthAssignment) -> Result<MomentMatrix> {
    build_on_indices(state, point, SECOND_ORDER_ROWS.to_vec(), widths)
}

fn determinant_2x2(m: &CMatrix) -> f64 {
    m[(0, 0)].re * m[(1, 1)].re - m[(0, 1)].norm_sqr()
}

/// `E₁₁·E₂₂ − |E₁₂|²` over rows `(0,0)` and `(1,1)`; `widths` holds one or
/// two rows.
pub fn second_order_minor(state: &TwoModeState, point: PhasePoint, widths: &WidthAssignment) -> Result<f64> {
    Ok(determinant_2x2(&second_order_matrix(state, point, widths)?.entries))
}

/// Second-order minor with all widths 1.
pub fn husimi_criterion(state: &TwoModeState, point: PhasePoint) -> Result<f64> {
    second_order_minor(state, point, &WidthAssignment::husimi())
}

/// `⟨n_a(α) n_b(β)⟩·Tr ρ − |E₁₂(σ=2)|²`.
pub fn wigner_criterion(state: &TwoModeState, point: PhasePoint) -> Result<f64> {
    second_order_minor(state, point, &WidthAssignment::wigner())
}

/// Second-order minor packaged as a report. The Wigner variant carries its
/// own verdict; otherwise any row width above 1 withholds it.
pub fn second_order_report(
    state: &TwoModeState,
    point: PhasePoint,
    widths: &WidthAssignment,
    label: &str,
    sanctioned: bool,
    tol: f64,
) -> Result<WitnessReport> {
    let m = second_order_matrix(state, point, widths)?;
    let value = determinant_2x2(&m.entries);
    let min_eig = min_eigenvalue(&m.entries)?;
    let candidates = [
        (vec![SECOND_ORDER_ROWS[0]], m.entries[(0, 0)].re),
        (vec![SECOND_ORDER_ROWS[1]], m.entries[(1, 1)].re),
        (SECOND_ORDER_ROWS.to_vec(), value),
    ];
    let (rows, worst) = candidates
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("three candidates");
    let mut flags = m.flags.clone();
    let verdict = if !sanctioned && widths.max_row() > 1.0 {
        flags.push(TruncationFlag::VerdictWithheld);
        Verdict::Withheld
    } else if value < -tol {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    Ok(WitnessReport {
        criterion: label.to_string(),
        value,
        min_eigenvalue: min_eig,
        worst_minor: MinorReport { rows, value: worst },
        point,
        widths: widths.clone(),
        flags: flag_strings(&flags),
        verdict,
    })
}

/// Evaluates `kind` at `point`. `sigma` is the row width for `M2` and
/// `MinEig`; the named criteria fix their own widths.
pub fn evaluate_criterion(
    state: &TwoModeState,
    point: PhasePoint,
    kind: CriterionKind,
    sigma: WidthParam,
    tol: f64,
) -> Result<WitnessReport> {
    let label = kind.to_string();
    match kind {
        CriterionKind::M2 => second_order_report(state, point, &WidthAssignment::uniform(sigma), &label, false, tol),
        CriterionKind::Husimi => second_order_report(state, point, &WidthAssignment::husimi(), &label, false, tol),
        CriterionKind::Wigner => second_order_report(state, point, &WidthAssignment::wigner(), &label, true, tol),
        CriterionKind::MinEig(k) => detect(state, point, k, &WidthAssignment::uniform(sigma), tol),
    }
}
