use super::{canonical_indices, smoothing_extent, MultiIndex, PhasePoint, WidthAssignment, WidthParam};
use crate::error::{Error, Result};
use crate::fock::{hermitian_part, hermiticity_residual, CMatrix, DisplacedState, TruncationFlag, TwoModeState, C64};

/// `√((i+k)!/i!)`.
fn rising_root(i: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, t| acc * (i + t) as f64).sqrt()
}

/// `Tr[ρ(α,β) a†ⁿ b†^q S(σ_a, σ_b) aᵐ bᵖ]` for row `(n,p)`, column `(m,q)`:
/// `Σ_ij w_a^i w_b^j c ⟨i+m, j+p|ρ(α,β)|i+n, j+q⟩`.
pub(crate) fn element_on(view: &DisplacedState, row: MultiIndex, col: MultiIndex, sa: f64, sb: f64) -> C64 {
    let (wa, wb) = (1.0 - sa, 1.0 - sb);
    let (ext_a, ext_b) = view.extent();
    let (n, p, m, q) = (row.n, row.p, col.n, col.p);
    let span = |w: f64, ext: usize, k: usize| {
        if w == 0.0 {
            1
        } else {
            ext.saturating_sub(k)
        }
    };
    let la = span(wa, ext_a, n.max(m));
    let lb = span(wb, ext_b, p.max(q));
    let ca: Vec<f64> = (0..la)
        .scan(1.0, |pw, i| {
            let v = *pw * rising_root(i, m) * rising_root(i, n);
            *pw *= wa;
            Some(v)
        })
        .collect();
    let cb: Vec<f64> = (0..lb)
        .scan(1.0, |pw, j| {
            let v = *pw * rising_root(j, p) * rising_root(j, q);
            *pw *= wb;
            Some(v)
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for (w, phi) in view.components() {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &fa) in ca.iter().enumerate() {
            if fa == 0.0 {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for (j, &fb) in cb.iter().enumerate() {
                inner += phi[(i + m, j + p)] * phi[(i + n, j + q)].conj() * fb;
            }
            acc += inner * fa;
        }
        total += acc * *w;
    }
    total
}

/// Single moment-matrix element at combined widths `(σ_a, σ_b)`.
///
/// Row `(n,p)` contributes `a†ⁿ` and `bᵖ`, column `(m,q)` contributes `aᵐ`
/// and `b†^q`; this cross assignment encodes the partial transpose.
pub fn moment_matrix_element(
    state: &TwoModeState,
    point: PhasePoint,
    row: MultiIndex,
    col: MultiIndex,
    sigma_a: WidthParam,
    sigma_b: WidthParam,
) -> Result<C64> {
    let (sa, sb) = (sigma_a.value(), sigma_b.value());
    let cutoff = state.cutoff();
    let ext_a = smoothing_extent(&[sa], cutoff.dim_a(), point.alpha.norm(), row.n.max(col.n));
    let ext_b = smoothing_extent(&[sb], cutoff.dim_b(), point.beta.norm(), row.p.max(col.p));
    let view = DisplacedState::new(state, point, ext_a, ext_b)?;
    Ok(element_on(&view, row, col, sa, sb))
}

/// Moment matrix truncated to order `K`.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub entries: CMatrix,
    pub index_map: Vec<MultiIndex>,
    pub point: PhasePoint,
    pub widths: WidthAssignment,
    /// Hermiticity residual before symmetrization.
    pub hermiticity_residual: f64,
    pub flags: Vec<TruncationFlag>,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.index_map.len()
    }

    pub fn position(&self, idx: MultiIndex) -> Option<usize> {
        self.index_map.iter().position(|&m| m == idx)
    }
}

/// Builds the moment matrix over `canonical_indices(max_order)`.
pub fn build_moment_matrix(
    state: &TwoModeState,
    point: PhasePoint,
    max_order: usize,
    widths: &WidthAssignment,
) -> Result<MomentMatrix> {
    build_on_indices(state, point, canonical_indices(max_order), widths)
}

pub(crate) fn build_on_indices(
    state: &TwoModeState,
    point: PhasePoint,
    index_map: Vec<MultiIndex>,
    widths: &WidthAssignment,
) -> Result<MomentMatrix> {
    if index_map.is_empty() {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    let k = index_map.len();
    widths.check_rows(k)?;
    let mut sig_a = Vec::with_capacity(k * k);
    let mut sig_b = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let (a, b) = widths.combined(i, j);
            sig_a.push(a);
            sig_b.push(b);
        }
    }
    let max_n = index_map.iter().map(|m| m.n).max().unwrap_or(0);
    let max_p = index_map.iter().map(|m| m.p).max().unwrap_or(0);
    let cutoff = state.cutoff();
    let ext_a = smoothing_extent(&sig_a, cutoff.dim_a(), point.alpha.norm(), max_n);
    let ext_b = smoothing_extent(&sig_b, cutoff.dim_b(), point.beta.norm(), max_p);
    let view = DisplacedState::new(state, point, ext_a, ext_b)?;
    let mut raw = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            raw[(i, j)] = element_on(&view, index_map[i], index_map[j], sig_a[i * k + j], sig_b[i * k + j]);
        }
    }
    let residual = hermiticity_residual(&raw);
    Ok(MomentMatrix {
        entries: hermitian_part(&raw),
        index_map,
        point,
        widths: widths.clone(),
        hermiticity_residual: residual,
        flags: view.flags().to_vec(),
    })
}
