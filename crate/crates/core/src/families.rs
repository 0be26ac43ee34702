//! Benchmark states: NOON (lossless and lossy), dephased two-mode cats,
//! coherent and thermal products, and Haar-random pure states.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    apply_loss, check_finite, displacement_guard, FockCutoff, LossChannel, LossMode, Mode,
    TruncationFlag, TwoModeState, C64, DEFAULT_CUTOFF_GUARD,
};
use crate::phase_space::PhasePoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoonParams {
    pub n: usize,
    pub c1: C64,
    pub c2: C64,
    pub tau: f64,
}

impl NoonParams {
    pub fn new(n: usize, c1: C64, c2: C64, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("photon number must be at least 1".into()));
        }
        let norm = c1.norm_sqr() + c2.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("|c1|^2 + |c2|^2 = {norm}, expected 1")));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("transmittivity {tau} outside [0, 1]")));
        }
        Ok(Self { n, c1, c2, tau })
    }

    /// `c1 = c2 = 1/√2`, lossless.
    pub fn balanced(n: usize) -> Self {
        let c = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { n, c1: c, c2: c, tau: 1.0 }
    }

    /// The NOON state with loss `1 − tau` on both modes.
    pub fn state(&self, cutoff: FockCutoff) -> Result<TwoModeState> {
        let pure = noon_state(self, cutoff)?;
        apply_loss(&pure, &LossChannel::new(self.tau, LossMode::Both)?)
    }
}

fn check_room(n: usize, cutoff: FockCutoff) -> Result<()> {
    if cutoff.dim_a() <= n || cutoff.dim_b() <= n {
        return Err(Error::InvalidCutoff(format!("cutoff {cutoff} cannot hold {n} photons")));
    }
    Ok(())
}

fn fock_vector(i: usize, j: usize, cutoff: FockCutoff) -> DVector<C64> {
    let mut v = DVector::zeros(cutoff.total());
    v[cutoff.index(i, j)] = C64::new(1.0, 0.0);
    v
}

/// `c1|N,0⟩ + c2|0,N⟩` (loss parameter ignored).
pub fn noon_state(params: &NoonParams, cutoff: FockCutoff) -> Result<TwoModeState> {
    let n = params.n;
    if n == 0 {
        return Err(Error::InvalidArgument("photon number must be at least 1".into()));
    }
    check_room(n, cutoff)?;
    let mut psi = DVector::zeros(cutoff.total());
    psi[cutoff.index(n, 0)] = params.c1;
    psi[cutoff.index(0, n)] += params.c2;
    TwoModeState::from_pure(cutoff, psi)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Balanced NOON state after loss `1 − tau` on both modes, written out
/// directly as binomial populations plus the surviving coherence `τᴺ/2`.
pub fn lossy_noon(n: usize, tau: f64, cutoff: FockCutoff) -> Result<TwoModeState> {
    if n == 0 {
        return Err(Error::InvalidArgument("photon number must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("transmittivity {tau} outside [0, 1]")));
    }
    check_room(n, cutoff)?;
    let loss = 1.0 - tau;
    // The {|N,0⟩, |0,N⟩} block [[τᴺ/2, τᴺ/2], [τᴺ/2, τᴺ/2]] is τᴺ times the
    // balanced NOON projector; every other term is a Fock projector.
    let mut components = Vec::new();
    let tn = tau.powi(n as i32);
    if tn > 0.0 {
        let mut noon = DVector::zeros(cutoff.total());
        noon[cutoff.index(n, 0)] = C64::new(FRAC_1_SQRT_2, 0.0);
        noon[cutoff.index(0, n)] = C64::new(FRAC_1_SQRT_2, 0.0);
        components.push((tn, noon));
    }
    for k in 1..=n {
        let w = 0.5 * binomial(n, k) * tau.powi((n - k) as i32) * loss.powi(k as i32);
        if w > 0.0 {
            components.push((w, fock_vector(n - k, 0, cutoff)));
        }
    }
    for k in 0..n {
        let w = 0.5 * binomial(n, k) * tau.powi(k as i32) * loss.powi((n - k) as i32);
        if w > 0.0 {
            components.push((w, fock_vector(0, k, cutoff)));
        }
    }
    TwoModeState::from_ensemble(cutoff, components)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatParams {
    pub gamma: C64,
    pub delta: C64,
    pub p: f64,
    pub theta: f64,
}

impl CatParams {
    pub fn new(gamma: C64, delta: C64, p: f64, theta: f64) -> Result<Self> {
        check_finite(gamma, "gamma")?;
        check_finite(delta, "delta")?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dephasing {p} outside [0, 1]")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("theta is not finite".into()));
        }
        let params = Self { gamma, delta, p, theta };
        if !(params.normalization() > 0.0 && params.normalization().is_finite()) {
            return Err(Error::InvalidArgument("cat normalization diverges".into()));
        }
        Ok(params)
    }

    /// Odd cat with `δ = γ` and dephasing `p`.
    pub fn odd(gamma: C64, p: f64) -> Result<Self> {
        Self::new(gamma, gamma, p, PI)
    }

    /// `1/[2 + 2(1−p) cos θ e^{−2(|γ|²+|δ|²)}]`.
    pub fn normalization(&self) -> f64 {
        let overlap = (-2.0 * (self.gamma.norm_sqr() + self.delta.norm_sqr())).exp();
        1.0 / (2.0 + 2.0 * (1.0 - self.p) * self.theta.cos() * overlap)
    }
}

/// Truncated coherent amplitudes `e^{−|z|²/2} zⁿ/√n!` (not renormalized).
pub fn coherent_amplitudes(z: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut term = C64::new((-z.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        v[n] = term;
        term = term * z / ((n + 1) as f64).sqrt();
    }
    v
}

/// Levels needed to hold `|z⟩` with at most `tail` probability left out.
pub fn coherent_levels(z: C64, tail: f64) -> usize {
    let len = 64 + (4.0 * z.norm_sqr() + 20.0 * z.norm()) as usize;
    let amps = coherent_amplitudes(z, len);
    let mut beyond = 0.0;
    for n in (0..len).rev() {
        beyond += amps[n].norm_sqr();
        if beyond > tail {
            return n + 1;
        }
    }
    1
}

fn coherent_pair(gamma: C64, delta: C64, cutoff: FockCutoff) -> DVector<C64> {
    let a = coherent_amplitudes(gamma, cutoff.dim_a());
    let b = coherent_amplitudes(delta, cutoff.dim_b());
    a.kronecker(&b)
}

/// Guard diagnostics for coherent amplitudes on the given cutoff.
pub fn amplitude_flags(gamma: C64, delta: C64, cutoff: FockCutoff) -> Vec<TruncationFlag> {
    let mut flags = Vec::new();
    flags.extend(displacement_guard(Mode::A, gamma, cutoff.dim_a(), DEFAULT_CUTOFF_GUARD));
    flags.extend(displacement_guard(Mode::B, delta, cutoff.dim_b(), DEFAULT_CUTOFF_GUARD));
    flags
}

/// `𝒩[|γ,δ⟩⟨γ,δ| + |−γ,−δ⟩⟨−γ,−δ| + (1−p)(e^{iθ}|γ,δ⟩⟨−γ,−δ| + h.c.)]`.
///
/// Stored as `(1−p)𝒩 |χ⟩⟨χ|` with `χ = |γ,δ⟩ + e^{−iθ}|−γ,−δ⟩` plus the
/// dephased pair `p𝒩(|γ,δ⟩⟨γ,δ| + |−γ,−δ⟩⟨−γ,−δ|)`.
pub fn cat_state(params: &CatParams, cutoff: FockCutoff) -> Result<TwoModeState> {
    let params = CatParams::new(params.gamma, params.delta, params.p, params.theta)?;
    let norm = params.normalization();
    let plus = coherent_pair(params.gamma, params.delta, cutoff);
    let minus = coherent_pair(-params.gamma, -params.delta, cutoff);
    let mut components = Vec::new();
    if params.p < 1.0 {
        let chi = &plus + &minus * C64::from_polar(1.0, -params.theta);
        components.push(((1.0 - params.p) * norm, chi));
    }
    if params.p > 0.0 {
        components.push((params.p * norm, plus));
        components.push((params.p * norm, minus));
    }
    TwoModeState::from_ensemble(cutoff, components)
}

/// `|γ⟩⟨γ| ⊗ |δ⟩⟨δ|`.
pub fn coherent_product(gamma: C64, delta: C64, cutoff: FockCutoff) -> Result<TwoModeState> {
    check_finite(gamma, "gamma")?;
    check_finite(delta, "delta")?;
    TwoModeState::from_ensemble(cutoff, vec![(1.0, coherent_pair(gamma, delta, cutoff))])
}

/// Convex mixture `Σ w_k |γ_k⟩⟨γ_k| ⊗ |δ_k⟩⟨δ_k|`; weights are normalized.
pub fn coherent_mixture(terms: &[(f64, C64, C64)], cutoff: FockCutoff) -> Result<TwoModeState> {
    let total: f64 = terms.iter().map(|t| t.0).sum();
    if terms.is_empty() || !(total > 0.0) || terms.iter().any(|t| !(t.0 >= 0.0)) {
        return Err(Error::InvalidArgument("mixture weights must be non-negative with positive sum".into()));
    }
    let mut components = Vec::with_capacity(terms.len());
    for &(w, g, d) in terms {
        check_finite(g, "gamma")?;
        check_finite(d, "delta")?;
        components.push((w / total, coherent_pair(g, d, cutoff)));
    }
    TwoModeState::from_ensemble(cutoff, components)
}

/// Product of thermal states with mean photon numbers `nbar_a`, `nbar_b`,
/// truncated to the cutoff.
pub fn thermal_product(nbar_a: f64, nbar_b: f64, cutoff: FockCutoff) -> Result<TwoModeState> {
    if !(nbar_a >= 0.0 && nbar_b >= 0.0) {
        return Err(Error::InvalidArgument("mean photon numbers must be non-negative".into()));
    }
    let weights = |nbar: f64, dim: usize| -> Vec<f64> {
        let q = nbar / (1.0 + nbar);
        (0..dim).map(|k| q.powi(k as i32) / (1.0 + nbar)).collect()
    };
    let wa = weights(nbar_a, cutoff.dim_a());
    let wb = weights(nbar_b, cutoff.dim_b());
    let mut components = Vec::new();
    for (i, x) in wa.iter().enumerate() {
        for (j, y) in wb.iter().enumerate() {
            if x * y > 0.0 {
                components.push((x * y, fock_vector(i, j, cutoff)));
            }
        }
    }
    TwoModeState::from_ensemble(cutoff, components)
}

/// Haar-random pure states on `{0..d−1}⊗{0..d−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStateSpec {
    pub d: usize,
    pub seed: u64,
    pub count: usize,
}

/// State `index` of the ensemble; depends only on the seed and the index.
pub fn random_haar_state(spec: &RandomStateSpec, index: usize, cutoff: FockCutoff) -> Result<TwoModeState> {
    let d = spec.d;
    if d < 2 {
        return Err(Error::InvalidArgument(format!("local dimension {d} below 2")));
    }
    if cutoff.dim_a() < d || cutoff.dim_b() < d {
        return Err(Error::InvalidCutoff(format!("cutoff {cutoff} smaller than local dimension {d}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let mut psi = DVector::zeros(cutoff.total());
    for i in 0..d {
        for j in 0..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            psi[cutoff.index(i, j)] = C64::new(re, im);
        }
    }
    TwoModeState::from_pure(cutoff, psi)
}

/// `spec.count` Haar-random pure states.
pub fn random_haar_pure(spec: &RandomStateSpec, cutoff: FockCutoff) -> Result<Vec<TwoModeState>> {
    (0..spec.count).map(|k| random_haar_state(spec, k, cutoff)).collect()
}

/// Husimi distribution of the balanced NOON state,
/// `(1/π²)·|αᴺ + βᴺ|² e^{−|α|²−|β|²} / (2·N!)`.
pub fn analytic_husimi_noon(point: PhasePoint, n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let amp = point.alpha.powu(n as u32) + point.beta.powu(n as u32);
    amp.norm_sqr() * (-point.alpha.norm_sqr() - point.beta.norm_sqr()).exp() / (2.0 * fact * PI * PI)
}
