use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::operators::displacement_block;
use super::{
    displacement_guard, hermitian_part, hermiticity_residual, min_eigenvalue, CMatrix, FockCutoff,
    Mode, TruncationFlag, C64, DEFAULT_CUTOFF_GUARD,
};
use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;

/// Tolerance on Hermiticity and trace when reading external matrices.
pub const IMPORT_TOL: f64 = 1e-8;
/// Most negative eigenvalue accepted for a density matrix.
pub const EIG_TOL: f64 = 1e-9;
/// Relative size below which spectral components of imported matrices are dropped.
const SPECTRAL_CUT: f64 = 1e-15;

/// Density matrix on a truncated two-mode Fock space.
///
/// Alongside the matrix, every state keeps a decomposition
/// `ρ = Σ_k w_k |v_k⟩⟨v_k|`, which the displacement path exploits.
#[derive(Clone, Debug)]
pub struct TwoModeState {
    cutoff: FockCutoff,
    rho: CMatrix,
    components: Vec<(f64, DVector<C64>)>,
}

impl TwoModeState {
    /// `|00⟩⟨00|`.
    pub fn vacuum(cutoff: FockCutoff) -> Self {
        let mut psi = DVector::zeros(cutoff.total());
        psi[0] = C64::new(1.0, 0.0);
        Self::from_pure(cutoff, psi).expect("vacuum is normalizable")
    }

    /// Pure state from an amplitude vector; the vector is normalized.
    pub fn from_pure(cutoff: FockCutoff, psi: DVector<C64>) -> Result<Self> {
        if psi.len() != cutoff.total() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector has length {}, cutoff {cutoff} needs {}",
                psi.len(),
                cutoff.total()
            )));
        }
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("amplitude vector has zero norm".into()));
        }
        Self::from_ensemble(cutoff, vec![(1.0, psi.unscale(norm))])
    }

    /// Mixture `Σ w_k |v_k⟩⟨v_k|`. Vectors are used as given; weights are not
    /// renormalized, so the trace is `Σ w_k ‖v_k‖²`.
    pub fn from_ensemble(cutoff: FockCutoff, components: Vec<(f64, DVector<C64>)>) -> Result<Self> {
        let n = cutoff.total();
        let mut rho = CMatrix::zeros(n, n);
        for (w, v) in &components {
            if v.len() != n {
                return Err(Error::InvalidArgument("ensemble vector has wrong length".into()));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidArgument(format!("ensemble weight {w} is invalid")));
            }
            rho.ger(C64::new(*w, 0.0), v, &v.conjugate(), C64::new(1.0, 0.0));
        }
        Ok(Self {
            cutoff,
            rho: hermitian_part(&rho),
            components,
        })
    }

    /// Like `from_ensemble`, but accepts signed weights.
    pub(crate) fn from_components(cutoff: FockCutoff, components: Vec<(f64, DVector<C64>)>) -> Self {
        let n = cutoff.total();
        let mut rho = CMatrix::zeros(n, n);
        for (w, v) in &components {
            rho.ger(C64::new(*w, 0.0), v, &v.conjugate(), C64::new(1.0, 0.0));
        }
        Self {
            cutoff,
            rho: hermitian_part(&rho),
            components,
        }
    }

    /// Validated import: Hermitian and unit trace within `IMPORT_TOL`,
    /// spectrum bounded below by `−EIG_TOL`.
    pub fn from_matrix(cutoff: FockCutoff, rho: CMatrix) -> Result<Self> {
        let n = cutoff.total();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, cutoff {cutoff} needs {n}x{n}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let herm = hermiticity_residual(&rho);
        if herm > IMPORT_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (residual {herm:.3e})"
            )));
        }
        let state = Self::from_matrix_unchecked(cutoff, rho)?;
        let tr = state.trace();
        if (tr - 1.0).abs() > IMPORT_TOL {
            return Err(Error::InvalidArgument(format!("trace is {tr}, expected 1")));
        }
        let min = min_eigenvalue(&state.rho)?;
        if min < -EIG_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(state)
    }

    /// Symmetrizes without validating trace or positivity. The spectral
    /// decomposition is kept as the component list (weights may be negative).
    pub fn from_matrix_unchecked(cutoff: FockCutoff, rho: CMatrix) -> Result<Self> {
        if rho.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let rho = hermitian_part(&rho);
        let eig = SymmetricEigen::new(rho.clone());
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let components = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > SPECTRAL_CUT * scale)
            .map(|(k, v)| (*v, eig.eigenvectors.column(k).into_owned()))
            .collect();
        Ok(Self {
            cutoff,
            rho,
            components,
        })
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// Components `(w, v)` with `ρ = Σ w |v⟩⟨v|`.
    pub fn ensemble(&self) -> &[(f64, DVector<C64>)] {
        &self.components
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// `⟨ij|ρ|kl⟩`.
    pub fn element(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.rho[(self.cutoff.index(i, j), self.cutoff.index(k, l))]
    }

    /// `(⟨n_a⟩, ⟨n_b⟩)`.
    pub fn mean_photon_numbers(&self) -> (f64, f64) {
        let mut na = 0.0;
        let mut nb = 0.0;
        for k in 0..self.cutoff.total() {
            let (i, j) = self.cutoff.levels(k);
            let p = self.rho[(k, k)].re;
            na += i as f64 * p;
            nb += j as f64 * p;
        }
        (na, nb)
    }

    /// Joint photon-number populations `p(i, j)` as a `dim_a × dim_b` matrix.
    pub fn populations(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.cutoff.dim_a(), self.cutoff.dim_b(), |i, j| {
            let k = self.cutoff.index(i, j);
            self.rho[(k, k)].re
        })
    }

    /// Zero-pads into a larger cutoff.
    pub fn embed(&self, target: FockCutoff) -> Result<Self> {
        if target.dim_a() < self.cutoff.dim_a() || target.dim_b() < self.cutoff.dim_b() {
            return Err(Error::InvalidCutoff(format!(
                "cannot embed {} into smaller {target}",
                self.cutoff
            )));
        }
        let lift = |v: &DVector<C64>| {
            let mut out = DVector::zeros(target.total());
            for k in 0..self.cutoff.total() {
                let (i, j) = self.cutoff.levels(k);
                out[target.index(i, j)] = v[k];
            }
            out
        };
        let mut rho = CMatrix::zeros(target.total(), target.total());
        for r in 0..self.cutoff.total() {
            let (i, j) = self.cutoff.levels(r);
            for c in 0..self.cutoff.total() {
                let (k, l) = self.cutoff.levels(c);
                rho[(target.index(i, j), target.index(k, l))] = self.rho[(r, c)];
            }
        }
        Ok(Self {
            cutoff: target,
            rho,
            components: self.components.iter().map(|(w, v)| (*w, lift(v))).collect(),
        })
    }

    pub fn to_json(&self) -> StateJson {
        let n = self.cutoff.total();
        StateJson {
            dim_a: self.cutoff.dim_a(),
            dim_b: self.cutoff.dim_b(),
            re: (0..n).map(|r| (0..n).map(|c| self.rho[(r, c)].re).collect()).collect(),
            im: (0..n).map(|r| (0..n).map(|c| self.rho[(r, c)].im).collect()).collect(),
        }
    }

    pub fn from_json(doc: &StateJson) -> Result<Self> {
        let cutoff = FockCutoff::new(doc.dim_a, doc.dim_b)?;
        let n = cutoff.total();
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !rows_ok(&doc.re) || !rows_ok(&doc.im) {
            return Err(Error::InvalidArgument(format!(
                "density matrix must be a full {n}x{n} array for each of re and im"
            )));
        }
        let rho = CMatrix::from_fn(n, n, |r, c| C64::new(doc.re[r][c], doc.im[r][c]));
        Self::from_matrix(cutoff, rho)
    }
}

/// Density-matrix interchange document. Full matrices, flat index `i·dim_b + j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dim_a: usize,
    pub dim_b: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// The leading `ext_a × ext_b` levels of `ρ(α,β) = D†(α,β) ρ D(α,β)`, where
/// `D†(α,β) a b D(α,β) = (a+α)(b+β)`.
///
/// The displacement acts on the (truncated) state exactly: the extent may
/// exceed the state's cutoff, and entries carry no truncation of `D`.
pub struct DisplacedState {
    ext_a: usize,
    ext_b: usize,
    components: Vec<(f64, DMatrix<C64>)>,
    flags: Vec<TruncationFlag>,
}

impl DisplacedState {
    pub fn new(state: &TwoModeState, point: PhasePoint, ext_a: usize, ext_b: usize) -> Result<Self> {
        Self::with_guard(state, point, ext_a, ext_b, DEFAULT_CUTOFF_GUARD)
    }

    pub fn with_guard(
        state: &TwoModeState,
        point: PhasePoint,
        ext_a: usize,
        ext_b: usize,
        guard: f64,
    ) -> Result<Self> {
        point.check()?;
        let cutoff = state.cutoff();
        let ext_a = ext_a.max(1);
        let ext_b = ext_b.max(1);
        let mut flags = Vec::new();
        flags.extend(displacement_guard(Mode::A, point.alpha, cutoff.dim_a(), guard));
        flags.extend(displacement_guard(Mode::B, point.beta, cutoff.dim_b(), guard));

        let da_h = displacement_block(point.alpha, cutoff.dim_a(), ext_a).adjoint();
        let db_c = displacement_block(point.beta, cutoff.dim_b(), ext_b).conjugate();
        // |ψ⟩ ↦ D†|ψ⟩ in matrix form: Ψ ↦ Da† Ψ conj(Db).
        let components = state
            .ensemble()
            .iter()
            .map(|(w, v)| {
                let psi = DMatrix::from_fn(cutoff.dim_a(), cutoff.dim_b(), |i, j| v[cutoff.index(i, j)]);
                (*w, &da_h * psi * &db_c)
            })
            .collect();
        Ok(Self {
            ext_a,
            ext_b,
            components,
            flags,
        })
    }

    pub fn extent(&self) -> (usize, usize) {
        (self.ext_a, self.ext_b)
    }

    pub fn flags(&self) -> &[TruncationFlag] {
        &self.flags
    }

    /// `⟨i j|ρ(α,β)|k l⟩`; indices must lie inside the extent.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.components
            .iter()
            .map(|(w, phi)| phi[(i, j)] * phi[(k, l)].conj() * *w)
            .sum()
    }

    /// `⟨i j|ρ(α,β)|i j⟩`.
    pub fn population(&self, i: usize, j: usize) -> f64 {
        self.entry(i, j, i, j).re
    }

    /// Dense block on the extent, flat index `i·ext_b + j`.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.ext_a * self.ext_b;
        let mut out = CMatrix::zeros(n, n);
        for (w, phi) in &self.components {
            let v = DVector::from_fn(n, |k, _| phi[(k / self.ext_b, k % self.ext_b)]);
            out.ger(C64::new(*w, 0.0), &v, &v.conjugate(), C64::new(1.0, 0.0));
        }
        hermitian_part(&out)
    }

    /// Components `(w, Φ)` with `⟨ij|ρ(α,β)|kl⟩ = Σ w Φ_ij conj(Φ_kl)`.
    pub fn components(&self) -> &[(f64, DMatrix<C64>)] {
        &self.components
    }
}

/// Population below which displaced levels are dropped by [`displace_state`].
const TAIL_POPULATION: f64 = 1e-17;

/// `ρ(α,β) = D†(α,β) ρ D(α,β)`, with guard diagnostics.
///
/// The output cutoff is the input cutoff, grown per mode until the levels
/// left out carry less than `1e-17` population, so the trace is preserved.
pub fn displace_state(state: &TwoModeState, point: PhasePoint) -> Result<(TwoModeState, Vec<TruncationFlag>)> {
    let cutoff = state.cutoff();
    let wide_a = super::padded_dimension(cutoff.dim_a(), point.alpha.norm());
    let wide_b = super::padded_dimension(cutoff.dim_b(), point.beta.norm());
    let view = DisplacedState::new(state, point, wide_a, wide_b)?;
    let mut pop_a = vec![0.0; wide_a];
    let mut pop_b = vec![0.0; wide_b];
    for (w, phi) in view.components() {
        for i in 0..wide_a {
            for j in 0..wide_b {
                let p = w.abs() * phi[(i, j)].norm_sqr();
                pop_a[i] += p;
                pop_b[j] += p;
            }
        }
    }
    let needed = |pops: &[f64], dim: usize| {
        pops.iter().rposition(|&p| p > TAIL_POPULATION).map_or(dim, |k| (k + 1).max(dim))
    };
    let out_cutoff = FockCutoff::new(needed(&pop_a, cutoff.dim_a()), needed(&pop_b, cutoff.dim_b()))?;
    let components = view
        .components()
        .iter()
        .map(|(w, phi)| {
            let v = DVector::from_fn(out_cutoff.total(), |k, _| {
                let (i, j) = out_cutoff.levels(k);
                phi[(i, j)]
            });
            (*w, v)
        })
        .collect();
    Ok((TwoModeState::from_components(out_cutoff, components), view.flags().to_vec()))
}

/// `(|i j⟩⟨k l|) ↦ |i l⟩⟨k j|` on an arbitrary two-mode matrix.
pub fn partial_transpose_b_matrix(m: &CMatrix, cutoff: FockCutoff) -> CMatrix {
    let n = cutoff.total();
    CMatrix::from_fn(n, n, |r, c| {
        let (i, l) = cutoff.levels(r);
        let (k, j) = cutoff.levels(c);
        m[(cutoff.index(i, j), cutoff.index(k, l))]
    })
}

/// Partial transpose on mode b.
pub fn partial_transpose_b(state: &TwoModeState) -> CMatrix {
    partial_transpose_b_matrix(state.rho(), state.cutoff())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::min_eigenvalue;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bell(cutoff: FockCutoff) -> TwoModeState {
        let mut psi = DVector::zeros(cutoff.total());
        psi[cutoff.index(1, 0)] = c(FRAC_1_SQRT_2, 0.0);
        psi[cutoff.index(0, 1)] = c(FRAC_1_SQRT_2, 0.0);
        TwoModeState::from_pure(cutoff, psi).unwrap()
    }

    /// Truncated coherent amplitudes `e^{-|z|²/2} z^n / √n!`.
    fn coherent(z: C64, d: usize) -> DVector<C64> {
        let mut v = DVector::zeros(d);
        let mut term = C64::new((-z.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..d {
            v[n] = term;
            term = term * z / ((n + 1) as f64).sqrt();
        }
        v
    }

    #[test]
    fn bell_partial_transpose_has_negative_half() {
        let cutoff = FockCutoff::square(2).unwrap();
        let pt = partial_transpose_b(&bell(cutoff));
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_is_involution_and_trace_preserving() {
        let cutoff = FockCutoff::new(2, 3).unwrap();
        let m = CMatrix::from_fn(6, 6, |r, c| C64::new((r * 7 + c) as f64, (r as f64) - (c as f64)));
        let pt = partial_transpose_b_matrix(&m, cutoff);
        assert_eq!(partial_transpose_b_matrix(&pt, cutoff), m);
        assert_eq!(pt.trace(), m.trace());
    }

    #[test]
    fn product_state_is_ppt() {
        let d = 12;
        let cutoff = FockCutoff::square(d).unwrap();
        let psi = coherent(c(0.6, 0.2), d).kronecker(&coherent(c(-0.3, 0.5), d));
        let state = TwoModeState::from_pure(cutoff, psi).unwrap();
        assert!(min_eigenvalue(&partial_transpose_b(&state)).unwrap() >= -1e-10);
    }

    #[test]
    fn zero_displacement_is_identity() {
        let cutoff = FockCutoff::square(3).unwrap();
        let (out, flags) = displace_state(&TwoModeState::vacuum(cutoff), PhasePoint::origin()).unwrap();
        assert!(flags.is_empty());
        assert!((out.rho() - TwoModeState::vacuum(cutoff).rho()).camax() < 1e-15);
    }

    #[test]
    fn coherent_state_displaced_back_to_vacuum() {
        let d = 20;
        let cutoff = FockCutoff::square(d).unwrap();
        let (g, h) = (c(0.7, -0.4), c(-0.5, 0.9));
        let psi = coherent(g, d).kronecker(&coherent(h, d));
        let state = TwoModeState::from_pure(cutoff, psi).unwrap();
        // ρ(γ,δ) shifts the coherent amplitudes by −(γ,δ).
        let (out, _) = displace_state(&state, PhasePoint::new(g, h)).unwrap();
        assert!((out.element(0, 0, 0, 0).re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn displacement_preserves_trace() {
        let cutoff = FockCutoff::square(12).unwrap();
        let state = bell(cutoff);
        let (out, flags) = displace_state(&state, PhasePoint::new(c(0.8, 0.3), c(-0.5, 0.6))).unwrap();
        assert!(flags.is_empty());
        assert!((out.trace() - 1.0).abs() < 1e-9, "{}", out.trace());
    }

    #[test]
    fn pure_and_spectral_decompositions_agree() {
        let cutoff = FockCutoff::new(5, 4).unwrap();
        let state = bell(cutoff);
        let dense = TwoModeState::from_matrix_unchecked(cutoff, state.rho().clone()).unwrap();
        let point = PhasePoint::new(c(0.3, -0.2), c(0.1, 0.4));
        let v1 = DisplacedState::new(&state, point, 3, 2).unwrap();
        let v2 = DisplacedState::new(&dense, point, 3, 2).unwrap();
        assert!((v1.to_matrix() - v2.to_matrix()).camax() < 1e-13);
    }

    #[test]
    fn json_round_trip() {
        let cutoff = FockCutoff::new(2, 3).unwrap();
        let mut psi = DVector::zeros(6);
        psi[cutoff.index(0, 2)] = c(0.6, 0.0);
        psi[cutoff.index(1, 1)] = c(0.0, 0.8);
        let state = TwoModeState::from_pure(cutoff, psi).unwrap();
        let text = serde_json::to_string(&state.to_json()).unwrap();
        let back = TwoModeState::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!((back.rho() - state.rho()).camax() < 1e-15);
    }

    #[test]
    fn json_reader_rejects_bad_trace_and_non_hermitian() {
        let cutoff = FockCutoff::square(2).unwrap();
        let mut doc = TwoModeState::vacuum(cutoff).to_json();
        doc.re[0][0] = 2.0;
        assert!(TwoModeState::from_json(&doc).is_err());
        let mut doc = TwoModeState::vacuum(cutoff).to_json();
        doc.im[0][1] = 0.3;
        assert!(TwoModeState::from_json(&doc).is_err());
        let mut doc = TwoModeState::vacuum(cutoff).to_json();
        doc.re.pop();
        assert!(TwoModeState::from_json(&doc).is_err());
    }
}
