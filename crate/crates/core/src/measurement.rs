//! Simulated readout of the second-order minor: displacement, an optional
//! phase-shifted beamsplitter, and photon-number-resolving detection on both
//! output ports.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::families::{coherent_amplitudes, coherent_levels};
use crate::fock::{
    displace_state, hermitian_part, mode_transform_in_sector, CMatrix, FockCutoff, TwoModeState, C64,
    DEFAULT_CUTOFF_GUARD,
};
use crate::phase_space::{PhasePoint, WidthAssignment};

/// Beamsplitter setting ahead of the detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mix {
    None,
    Balanced,
    TransmitOnly,
    ReflectOnly,
}

impl Mix {
    fn transmittivity(self) -> Option<f64> {
        match self {
            Mix::None => None,
            Mix::Balanced => Some(0.5),
            Mix::TransmitOnly => Some(1.0),
            Mix::ReflectOnly => Some(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub point: PhasePoint,
    /// Interferometer phase in radians.
    pub theta: f64,
    pub mix: Mix,
    #[serde(default = "unit_efficiency")]
    pub efficiency: f64,
    /// 0 means exact probabilities.
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

fn unit_efficiency() -> f64 {
    1.0
}

impl MeasurementConfig {
    pub fn exact(point: PhasePoint, mix: Mix, theta: f64) -> Self {
        Self {
            point,
            theta,
            mix,
            efficiency: 1.0,
            shots: 0,
            seed: 0,
        }
    }

    pub fn check(&self) -> Result<()> {
        self.point.check()?;
        if !self.theta.is_finite() {
            return Err(Error::InvalidArgument("theta is not finite".into()));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "efficiency {} outside (0, 1]",
                self.efficiency
            )));
        }
        Ok(())
    }

    /// Short label, e.g. `balanced@0`.
    pub fn label(&self) -> String {
        match self.mix {
            Mix::None => "none".into(),
            Mix::Balanced => format!("balanced@{}", self.theta),
            Mix::TransmitOnly => "transmit_only".into(),
            Mix::ReflectOnly => "reflect_only".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramMode {
    Counts,
    Prob,
}

/// Joint photon-number outcomes. Row index counts photons at the first
/// detector.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeHistogram {
    pub mode: HistogramMode,
    pub values: DMatrix<f64>,
    pub config: MeasurementConfig,
}

impl OutcomeHistogram {
    pub fn dims(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Shots in count mode, 1 in probability mode.
    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Relative frequencies and the shot count (`None` in probability mode).
    fn frequencies(&self) -> (DMatrix<f64>, Option<f64>) {
        match self.mode {
            HistogramMode::Prob => (self.values.clone(), None),
            HistogramMode::Counts => {
                let n = self.total();
                (self.values.map(|v| v / n), Some(n))
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let (da, db) = self.dims();
        let mut data = Vec::new();
        for i in 0..da {
            for j in 0..db {
                let v = self.values[(i, j)];
                if v != 0.0 {
                    let v = match self.mode {
                        HistogramMode::Counts => json!(v as u64),
                        HistogramMode::Prob => json!(v),
                    };
                    data.push(json!([i, j, v]));
                }
            }
        }
        json!({
            "dims": [da, db],
            "mode": self.mode,
            "data": data,
            "config": self.config,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            dims: [usize; 2],
            mode: HistogramMode,
            data: Vec<(usize, usize, f64)>,
            config: MeasurementConfig,
        }
        let raw: Raw = serde_json::from_value(doc.clone())?;
        let [da, db] = raw.dims;
        if da == 0 || db == 0 {
            return Err(Error::InvalidArgument("histogram dims must be positive".into()));
        }
        raw.config.check()?;
        let mut values = DMatrix::zeros(da, db);
        for (i, j, v) in raw.data {
            if i >= da || j >= db {
                return Err(Error::InvalidArgument(format!("outcome ({i}, {j}) outside dims [{da}, {db}]")));
            }
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("negative or non-finite entry at ({i}, {j})")));
            }
            if raw.mode == HistogramMode::Counts && v.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!("non-integer count at ({i}, {j})")));
            }
            values[(i, j)] += v;
        }
        let out = Self {
            mode: raw.mode,
            values,
            config: raw.config,
        };
        if out.total() <= 0.0 {
            return Err(Error::InvalidArgument("histogram is empty".into()));
        }
        Ok(out)
    }
}

/// Per-sector beamsplitter matrices, built lazily.
struct SectorCache {
    tau: f64,
    theta: f64,
    sectors: HashMap<usize, CMatrix>,
}

impl SectorCache {
    fn new(tau: f64, theta: f64) -> Self {
        Self {
            tau,
            theta,
            sectors: HashMap::new(),
        }
    }

    fn get(&mut self, n: usize) -> &CMatrix {
        let (tau, theta) = (self.tau, self.theta);
        self.sectors
            .entry(n)
            .or_insert_with(|| mode_transform_in_sector(tau, theta, n))
    }
}

/// Two-mode amplitudes `phi[(p, q)]` after the splitter, sector by sector.
/// The output holds every level reachable from the input sectors.
fn split_amplitudes(phi: &DMatrix<C64>, cache: &mut SectorCache) -> DMatrix<C64> {
    let (da, db) = phi.shape();
    let d = da + db - 1;
    let mut out = DMatrix::zeros(d, d);
    for n in 0..=(da + db - 2) {
        let lo = n.saturating_sub(db - 1);
        let hi = n.min(da - 1);
        let m = cache.get(n);
        for p_out in 0..=n {
            let mut acc = C64::new(0.0, 0.0);
            for p_in in lo..=hi {
                acc += m[(p_out, p_in)] * phi[(p_in, n - p_in)];
            }
            out[(p_out, n - p_out)] = acc;
        }
    }
    out
}

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Independent binomial thinning of both detectors.
fn thin(p: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    if eta == 1.0 {
        return p.clone();
    }
    let keep = |n: usize| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, k| {
            if k > i {
                0.0
            } else {
                binomial_coefficient(i, k) * eta.powi(k as i32) * (1.0 - eta).powi((i - k) as i32)
            }
        })
    };
    let (da, db) = p.shape();
    // p'(k,l) = Σ_ij T_a(i,k) p(i,j) T_b(j,l)
    keep(da).transpose() * p * keep(db)
}

fn distribution_on(displaced: &TwoModeState, config: &MeasurementConfig) -> Result<OutcomeHistogram> {
    config.check()?;
    let cutoff = displaced.cutoff();
    let (da, db) = (cutoff.dim_a(), cutoff.dim_b());
    let as_matrix = |v: &DVector<C64>| DMatrix::from_fn(da, db, |i, j| v[cutoff.index(i, j)]);
    let probs = match config.mix.transmittivity() {
        None => {
            let mut p = DMatrix::zeros(da, db);
            for (w, v) in displaced.ensemble() {
                for k in 0..cutoff.total() {
                    let (i, j) = cutoff.levels(k);
                    p[(i, j)] += w * v[k].norm_sqr();
                }
            }
            p
        }
        Some(tau) => {
            let mut cache = SectorCache::new(tau, config.theta);
            let d = da + db - 1;
            let mut p = DMatrix::zeros(d, d);
            for (w, v) in displaced.ensemble() {
                let out = split_amplitudes(&as_matrix(v), &mut cache);
                p += out.map(|z| z.norm_sqr() * w);
            }
            p
        }
    };
    // Signed spectral weights can leave rounding-level negatives.
    let probs = probs.map(|v| v.max(0.0));
    Ok(OutcomeHistogram {
        mode: HistogramMode::Prob,
        values: thin(&probs, config.efficiency),
        config: config.clone(),
    })
}

/// Exact outcome probabilities for `config`. With a splitter, both output
/// ports carry `d_a + d_b − 1` levels so that no photon-number sector is cut.
pub fn measurement_distribution(state: &TwoModeState, config: &MeasurementConfig) -> Result<OutcomeHistogram> {
    config.check()?;
    let (displaced, _) = displace_state(state, config.point)?;
    distribution_on(&displaced, config)
}

/// Multinomial draw of `shots` outcomes from an exact distribution.
pub fn sample_histogram(dist: &OutcomeHistogram, shots: u64, seed: u64) -> Result<OutcomeHistogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("zero shots: use the exact distribution".into()));
    }
    if dist.mode != HistogramMode::Prob {
        return Err(Error::InvalidArgument("can only sample from a probability histogram".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (da, db) = dist.dims();
    let mut counts = DMatrix::zeros(da, db);
    let mut left = shots;
    let mut mass: f64 = dist.values.iter().sum();
    // Binomial chain over the bins in row-major order.
    'outer: for i in 0..da {
        for j in 0..db {
            if left == 0 {
                break 'outer;
            }
            let p = dist.values[(i, j)];
            let ratio = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
            let k = if ratio >= 1.0 {
                left
            } else {
                Binomial::new(left, ratio)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?
                    .sample(&mut rng)
            };
            counts[(i, j)] = k as f64;
            left -= k;
            mass -= p;
        }
    }
    if left > 0 {
        // Only reachable through rounding of the remaining mass.
        let (i, j) = (da - 1, db - 1);
        counts[(i, j)] += left as f64;
    }
    let mut config = dist.config.clone();
    config.shots = shots;
    config.seed = seed;
    Ok(OutcomeHistogram {
        mode: HistogramMode::Counts,
        values: counts,
        config,
    })
}

/// The five settings the estimator needs, with seeds `seed + index`.
pub fn estimator_configs(point: PhasePoint, efficiency: f64, shots: u64, seed: u64) -> Vec<MeasurementConfig> {
    [
        (Mix::None, 0.0),
        (Mix::Balanced, 0.0),
        (Mix::Balanced, FRAC_PI_2),
        (Mix::TransmitOnly, 0.0),
        (Mix::ReflectOnly, 0.0),
    ]
    .into_iter()
    .enumerate()
    .map(|(k, (mix, theta))| MeasurementConfig {
        point,
        theta,
        mix,
        efficiency,
        shots,
        seed: seed.wrapping_add(k as u64),
    })
    .collect()
}

/// Histograms for every config, sharing one displaced state per point.
/// Configs with `shots > 0` are sampled with their own seed.
pub fn simulate_configs(state: &TwoModeState, configs: &[MeasurementConfig]) -> Result<Vec<OutcomeHistogram>> {
    let mut displaced: Vec<(PhasePoint, TwoModeState)> = Vec::new();
    let mut out = Vec::with_capacity(configs.len());
    for config in configs {
        config.check()?;
        let pos = match displaced.iter().position(|(p, _)| *p == config.point) {
            Some(k) => k,
            None => {
                displaced.push((config.point, displace_state(state, config.point)?.0));
                displaced.len() - 1
            }
        };
        let dist = distribution_on(&displaced[pos].1, config)?;
        out.push(if config.shots > 0 {
            sample_histogram(&dist, config.shots, config.seed)?
        } else {
            dist
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct M2Estimate {
    pub value: f64,
    pub e11: f64,
    pub e22: f64,
    pub e12_re: f64,
    pub e12_im: f64,
    /// Delta-method standard error; 0 for exact distributions.
    pub stderr: f64,
    pub configs_used: Vec<String>,
}

/// Mean of `f` under a histogram and the variance of that mean.
struct Linear {
    mean: f64,
    var: f64,
}

fn linear(h: &OutcomeHistogram, f: impl Fn(usize, usize) -> f64) -> (Linear, DMatrix<f64>) {
    let (p, n) = h.frequencies();
    let fv = DMatrix::from_fn(p.nrows(), p.ncols(), f);
    let mean = p.component_mul(&fv).sum();
    let var = match n {
        Some(n) => (p.component_mul(&fv).component_mul(&fv).sum() - mean * mean).max(0.0) / n,
        None => 0.0,
    };
    (Linear { mean, var }, fv)
}

fn find(hists: &[OutcomeHistogram], mix: Mix, theta: Option<f64>) -> Result<&OutcomeHistogram> {
    hists
        .iter()
        .find(|h| h.config.mix == mix && theta.is_none_or(|t| (h.config.theta - t).abs() < 1e-12))
        .ok_or_else(|| {
            let what = match theta {
                Some(t) => format!("{mix:?} at theta={t}"),
                None => format!("{mix:?}"),
            };
            Error::IncompleteData(format!("no histogram for configuration {what}"))
        })
}

/// Row widths shared by both modes, each in `[0, 1]`.
fn simulator_widths(widths: &WidthAssignment) -> Result<[f64; 3]> {
    widths.check_rows(2)?;
    let (a11, b11) = widths.combined(0, 0);
    let (a22, b22) = widths.combined(1, 1);
    let (a12, b12) = widths.combined(0, 1);
    if a11 != b11 || a22 != b22 || a12 != b12 {
        return Err(Error::InvalidArgument(
            "the measurement estimator needs equal widths on both modes".into(),
        ));
    }
    if widths.max_row() > 1.0 {
        return Err(Error::InvalidArgument(
            "widths above 1 carry no verdict and are not estimated from data".into(),
        ));
    }
    Ok([1.0 - a11, 1.0 - a22, 1.0 - a12])
}

/// Reconstructs the second-order minor over rows `(0,0)` and `(1,1)`.
///
/// The diagonal entries come from the unmixed histogram; the cross entry
/// from the mixed ones through `S(θ) = (S_T + S_R)/2 + Re(e^{iθ} E₁₂)` with
/// `S = Σ_{i≥1} i·w^{i−1+j} p(i,j)` on the first detector.
pub fn estimate_from_histograms(hists: &[OutcomeHistogram], widths: &WidthAssignment) -> Result<M2Estimate> {
    let [w11, w22, w12] = simulator_widths(widths)?;
    let unmixed = find(hists, Mix::None, None)?;
    let at0 = find(hists, Mix::Balanced, Some(0.0))?;
    let at90 = find(hists, Mix::Balanced, Some(FRAC_PI_2))?;
    let trans = find(hists, Mix::TransmitOnly, None)?;
    let refl = find(hists, Mix::ReflectOnly, None)?;
    let point = unmixed.config.point;
    if [at0, at90, trans, refl].iter().any(|h| h.config.point != point) {
        return Err(Error::InvalidArgument("histograms come from different displacement points".into()));
    }

    let pw = |w: f64, k: usize| w.powi(k as i32);
    let (e11, f11) = linear(unmixed, |i, j| pw(w11, i + j));
    let (e22, f22) = linear(unmixed, |i, j| {
        if i >= 1 && j >= 1 {
            (i * j) as f64 * pw(w22, i + j - 2)
        } else {
            0.0
        }
    });
    let s = |h: &OutcomeHistogram| linear(h, |i, j| if i >= 1 { i as f64 * pw(w12, i - 1 + j) } else { 0.0 }).0;
    let (s0, s90, st, sr) = (s(at0), s(at90), s(trans), s(refl));
    let half = 0.5 * (st.mean + sr.mean);
    let re = s0.mean - half;
    let im = half - s90.mean;
    let value = e11.mean * e22.mean - re * re - im * im;

    let cov12 = {
        let (p, n) = unmixed.frequencies();
        match n {
            Some(n) => (p.component_mul(&f11).component_mul(&f22).sum() - e11.mean * e22.mean) / n,
            None => 0.0,
        }
    };
    let var = e22.mean.powi(2) * e11.var
        + e11.mean.powi(2) * e22.var
        + 2.0 * e11.mean * e22.mean * cov12
        + 4.0 * re * re * s0.var
        + 4.0 * im * im * s90.var
        + (re - im).powi(2) * (st.var + sr.var);
    Ok(M2Estimate {
        value,
        e11: e11.mean,
        e22: e22.mean,
        e12_re: re,
        e12_im: im,
        stderr: var.max(0.0).sqrt(),
        configs_used: [unmixed, at0, at90, trans, refl].iter().map(|h| h.config.label()).collect(),
    })
}

/// Simulates the five settings at `point` (exact when `shots == 0`, else
/// `shots` per setting) and reconstructs the minor.
pub fn estimate_second_order_minor(
    state: &TwoModeState,
    point: PhasePoint,
    widths: &WidthAssignment,
    shots: u64,
    seed: u64,
) -> Result<M2Estimate> {
    simulator_widths(widths)?;
    let hists = simulate_configs(state, &estimator_configs(point, 1.0, shots, seed))?;
    estimate_from_histograms(&hists, widths)
}

/// Uhlmann fidelity `(Tr√(√ρ σ √ρ))²`, evaluated on the support of `rho`.
pub fn fidelity(rho: &TwoModeState, sigma: &TwoModeState) -> Result<f64> {
    let cutoff = rho.cutoff();
    let (rho, sigma) = if cutoff == sigma.cutoff() {
        (rho.clone(), sigma.clone())
    } else {
        let c = sigma.cutoff();
        let big = FockCutoff::new(cutoff.dim_a().max(c.dim_a()), cutoff.dim_b().max(c.dim_b()))?;
        (rho.embed(big)?, sigma.embed(big)?)
    };
    let comps = rho.ensemble();
    let n = rho.cutoff().total();
    let v = CMatrix::from_fn(n, comps.len(), |r, c| comps[c].1[r]);
    let q = v.qr().q();
    let project = |ens: &[(f64, DVector<C64>)]| {
        let r = q.ncols();
        let mut m = CMatrix::zeros(r, r);
        for (w, u) in ens {
            let x = q.adjoint() * u;
            m.ger(C64::new(*w, 0.0), &x, &x.conjugate(), C64::new(1.0, 0.0));
        }
        hermitian_part(&m)
    };
    let a = SymmetricEigen::new(project(comps));
    let sqrt_a = &a.eigenvectors
        * CMatrix::from_diagonal(&a.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)))
        * a.eigenvectors.adjoint();
    let inner = hermitian_part(&(&sqrt_a * project(sigma.ensemble()) * &sqrt_a));
    let root: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(root * root)
}

#[derive(Clone, Debug)]
pub struct PhysicalDisplacement {
    pub state: TwoModeState,
    /// The ideal `ρ(α, β)` it approximates.
    pub ideal: TwoModeState,
    pub fidelity: f64,
    /// Coherent ancilla amplitudes on modes a and b.
    pub ancillas: (C64, C64),
}

/// Level budget of each coherent ancilla.
pub const ANCILLA_LEVELS: usize = 200;

/// Mixes the first mode of every component with a coherent ancilla on a
/// splitter of transmittivity `tau` and traces the ancilla out.
fn mix_with_ancilla(components: &[(f64, DMatrix<C64>)], ancilla: &DVector<C64>, tau: f64) -> Vec<(f64, DMatrix<C64>)> {
    let mut cache = SectorCache::new(tau, 0.0);
    let dc = ancilla.len();
    let mut out = Vec::new();
    for (w, phi) in components {
        let (da, db) = phi.shape();
        let d = da + dc - 1;
        let mut by_level: Vec<DMatrix<C64>> = vec![DMatrix::zeros(d, db); d];
        for j in 0..db {
            // Joint amplitude on (mode, ancilla) for this spectator level.
            let joint = DMatrix::from_fn(da, dc, |p, q| phi[(p, j)] * ancilla[q]);
            let mixed = split_amplitudes(&joint, &mut cache);
            for p in 0..d {
                for q in 0..d {
                    by_level[q][(p, j)] = mixed[(p, q)];
                }
            }
        }
        for m in by_level {
            if m.iter().any(|z| z.norm_sqr() * w.abs() > 1e-36) {
                out.push((*w, m));
            }
        }
    }
    // Drop output levels of the mixed mode that carry no population.
    let rows = out.first().map_or(0, |(_, m)| m.nrows());
    let mut pops = vec![0.0; rows];
    for (w, m) in &out {
        for (i, p) in pops.iter_mut().enumerate() {
            *p += w.abs() * m.row(i).norm_squared();
        }
    }
    let floor = components.first().map_or(1, |(_, m)| m.nrows());
    let keep = pops.iter().rposition(|&p| p > 1e-17).map_or(floor, |k| (k + 1).max(floor));
    out.into_iter().map(|(w, m)| (w, m.rows(0, keep).into_owned())).collect()
}

/// Displacement realised by splitters of transmittivity `ancilla_tau` fed
/// with coherent ancillas of amplitude `−α/√(1−τ)` and `−β/√(1−τ)`.
///
/// The result carries the loss `1−τ` of the ancilla splitters; its fidelity
/// to the ideal displaced state is reported.
pub fn physical_displacement(state: &TwoModeState, point: PhasePoint, ancilla_tau: f64) -> Result<PhysicalDisplacement> {
    point.check()?;
    if !(ancilla_tau > 0.9 && ancilla_tau < 1.0) {
        return Err(Error::InvalidArgument(format!("ancilla transmittivity {ancilla_tau} outside (0.9, 1)")));
    }
    let cutoff = state.cutoff();
    let scale = -1.0 / (1.0 - ancilla_tau).sqrt();
    let (ga, gb) = (point.alpha * scale, point.beta * scale);
    let limit = DEFAULT_CUTOFF_GUARD * ANCILLA_LEVELS as f64;
    for (g, mode) in [(ga, "a"), (gb, "b")] {
        if g.norm_sqr() > limit {
            return Err(Error::TruncationRefused(format!(
                "ancilla on mode {mode} needs |amp|^2 = {:.4} > {limit:.4} for {ANCILLA_LEVELS} levels",
                g.norm_sqr()
            )));
        }
    }
    let anc_a = coherent_amplitudes(ga, coherent_levels(ga, 1e-32));
    let anc_b = coherent_amplitudes(gb, coherent_levels(gb, 1e-32));
    let comps: Vec<(f64, DMatrix<C64>)> = state
        .ensemble()
        .iter()
        .map(|(w, v)| (*w, DMatrix::from_fn(cutoff.dim_a(), cutoff.dim_b(), |i, j| v[cutoff.index(i, j)])))
        .collect();
    let after_a = mix_with_ancilla(&comps, &anc_a, ancilla_tau);
    let swapped: Vec<_> = after_a.into_iter().map(|(w, m)| (w, m.transpose())).collect();
    let after_b: Vec<_> = mix_with_ancilla(&swapped, &anc_b, ancilla_tau)
        .into_iter()
        .map(|(w, m)| (w, m.transpose()))
        .collect();
    let (da, db) = after_b[0].1.shape();
    let out_cutoff = FockCutoff::new(da, db)?;
    let vectors = after_b
        .into_iter()
        .map(|(w, m)| (w, DVector::from_fn(out_cutoff.total(), |k, _| {
            let (i, j) = out_cutoff.levels(k);
            m[(i, j)]
        })))
        .collect();
    let physical = TwoModeState::from_ensemble(out_cutoff, vectors)?;
    let (ideal, _) = displace_state(state, point)?;
    let f = fidelity(&ideal, &physical)?;
    Ok(PhysicalDisplacement {
        state: physical,
        ideal,
        fidelity: f,
        ancillas: (ga, gb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{coherent_product, noon_state, NoonParams};
    use crate::fock::{apply_loss, LossChannel, LossMode};
    use crate::phase_space::{second_order_minor, WidthParam};

    fn sq(d: usize) -> FockCutoff {
        FockCutoff::square(d).unwrap()
    }

    fn bell() -> TwoModeState {
        noon_state(&NoonParams::balanced(1), sq(4)).unwrap()
    }

    fn poisson(mean: f64, n: usize) -> f64 {
        (-mean).exp() * mean.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>()
    }

    #[test]
    fn vacuum_clicks_nothing() {
        let vac = TwoModeState::vacuum(sq(3));
        let h = measurement_distribution(&vac, &MeasurementConfig::exact(PhasePoint::origin(), Mix::None, 0.0)).unwrap();
        assert!((h.values[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn displaced_vacuum_is_poissonian() {
        let (g, d) = (C64::new(0.6, -0.3), C64::new(-0.2, 0.5));
        let vac = TwoModeState::vacuum(sq(4));
        let h = measurement_distribution(&vac, &MeasurementConfig::exact(PhasePoint::new(g, d), Mix::None, 0.0)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = poisson(g.norm_sqr(), i) * poisson(d.norm_sqr(), j);
                assert!((h.values[(i, j)] - want).abs() < 1e-8, "({i},{j})");
            }
        }
    }

    #[test]
    fn bell_exits_one_port() {
        let h = measurement_distribution(&bell(), &MeasurementConfig::exact(PhasePoint::origin(), Mix::Balanced, 0.0)).unwrap();
        assert!((h.values[(1, 0)] - 1.0).abs() < 1e-12);
        assert!(h.values[(0, 1)].abs() < 1e-12);
        assert!((h.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_distributions_sum_to_one() {
        let s = noon_state(&NoonParams::balanced(2), sq(6)).unwrap();
        let p = PhasePoint::from_reals([0.3, -0.2, 0.1, 0.4]);
        for c in estimator_configs(p, 1.0, 0, 0) {
            let h = measurement_distribution(&s, &c).unwrap();
            assert!((h.total() - 1.0).abs() < 1e-12, "{}", c.label());
        }
    }

    #[test]
    fn unit_efficiency_is_bit_exact() {
        let p = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 / 36.0);
        assert_eq!(thin(&p, 1.0), p);
        let t = thin(&p, 0.7);
        assert!((t.sum() - p.sum()).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_complete() {
        let mut dist = measurement_distribution(&TwoModeState::vacuum(sq(2)), &MeasurementConfig::exact(PhasePoint::origin(), Mix::None, 0.0)).unwrap();
        let h = sample_histogram(&dist, 100, 3).unwrap();
        assert_eq!(h.values[(0, 0)], 100.0);
        dist.values = DMatrix::from_element(2, 2, 0.25);
        let a = sample_histogram(&dist, 1_000_000, 9).unwrap();
        let b = sample_histogram(&dist, 1_000_000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 1e6);
        let sd = (1e6f64 * 0.25 * 0.75).sqrt();
        assert!(a.values.iter().all(|&c| (c - 250_000.0).abs() < 5.0 * sd));
        assert!(sample_histogram(&dist, 0, 1).is_err());
    }

    #[test]
    fn histogram_json_round_trip() {
        let dist = measurement_distribution(&bell(), &MeasurementConfig::exact(PhasePoint::origin(), Mix::Balanced, 0.0)).unwrap();
        let h = sample_histogram(&dist, 500, 1).unwrap();
        let text = serde_json::to_string(&h.to_json()).unwrap();
        assert!(text.contains("\"mode\":\"counts\""));
        let back = OutcomeHistogram::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn exact_estimate_matches_minor() {
        let w = WidthAssignment::husimi();
        let e = estimate_second_order_minor(&bell(), PhasePoint::origin(), &w, 0, 0).unwrap();
        assert!((e.value + 0.25).abs() < 1e-9, "{e:?}");
        assert_eq!(e.stderr, 0.0);
        let s = noon_state(&NoonParams::balanced(2), sq(8)).unwrap();
        let p = PhasePoint::from_reals([0.4, -0.3, -0.2, 0.5]);
        for sigma in [0.5, 1.0] {
            let w = WidthAssignment::uniform(WidthParam::new(sigma).unwrap());
            let e = estimate_second_order_minor(&s, p, &w, 0, 0).unwrap();
            let direct = second_order_minor(&s, p, &w).unwrap();
            assert!((e.value - direct).abs() < 1e-9, "σ={sigma}: {} vs {direct}", e.value);
        }
    }

    #[test]
    fn product_estimate_vanishes() {
        let s = coherent_product(C64::new(0.3, 0.1), C64::new(-0.4, 0.2), sq(10)).unwrap();
        let e = estimate_second_order_minor(&s, PhasePoint::from_reals([0.1, 0.2, -0.3, 0.0]), &WidthAssignment::husimi(), 0, 0).unwrap();
        assert!(e.value.abs() < 1e-9);
    }

    #[test]
    fn finite_shots_bracket_the_exact_value() {
        let e = estimate_second_order_minor(&bell(), PhasePoint::origin(), &WidthAssignment::husimi(), 1_000_000, 42).unwrap();
        assert!(e.stderr > 0.0);
        assert!((e.value + 0.25).abs() < 5.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn husimi_weights_are_projections() {
        let s = noon_state(&NoonParams::balanced(2), sq(6)).unwrap();
        let p = PhasePoint::from_reals([0.2, 0.1, -0.3, 0.2]);
        let h = simulate_configs(&s, &estimator_configs(p, 1.0, 0, 0)).unwrap();
        let e = estimate_from_histograms(&h, &WidthAssignment::husimi()).unwrap();
        assert_eq!(e.e11, h[0].values[(0, 0)]);
        assert_eq!(e.e22, h[0].values[(1, 1)]);
    }

    #[test]
    fn missing_setting_is_reported() {
        let h = simulate_configs(&bell(), &estimator_configs(PhasePoint::origin(), 1.0, 0, 0)).unwrap();
        let err = estimate_from_histograms(&h[..4], &WidthAssignment::husimi()).unwrap_err();
        assert!(matches!(err, Error::IncompleteData(_)));
        let wide = WidthAssignment::uniform(WidthParam::new(1.5).unwrap());
        assert!(estimate_from_histograms(&h, &wide).is_err());
    }

    #[test]
    fn ancilla_displacement_is_lossy_displacement() {
        let s = noon_state(&NoonParams::balanced(1), sq(6)).unwrap();
        let p = PhasePoint::from_reals([0.1, 0.05, -0.08, 0.02]);
        let r99 = physical_displacement(&s, p, 0.99).unwrap();
        assert!(r99.fidelity > 0.99, "{}", r99.fidelity);
        let r999 = physical_displacement(&s, p, 0.999).unwrap();
        assert!(r999.fidelity >= r99.fidelity);
        let lossy = apply_loss(&s, &LossChannel::new(0.99, LossMode::Both).unwrap()).unwrap();
        let (oracle, _) = displace_state(&lossy, p).unwrap();
        assert!((fidelity(&oracle, &r99.state).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_ancilla_is_pure_loss() {
        let s = noon_state(&NoonParams::balanced(2), sq(4)).unwrap();
        let r = physical_displacement(&s, PhasePoint::origin(), 0.95).unwrap();
        let lossy = apply_loss(&s, &LossChannel::new(0.95, LossMode::Both).unwrap()).unwrap();
        assert!((fidelity(&lossy, &r.state).unwrap() - 1.0).abs() < 1e-10);
        // Two photons, each lost with probability 1 − τ.
        assert!(1.0 - r.fidelity <= 2.0 * 0.05);
    }

    #[test]
    fn ancilla_guard_refuses() {
        let s = TwoModeState::vacuum(sq(4));
        let p = PhasePoint::from_reals([1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(physical_displacement(&s, p, 0.99), Err(Error::TruncationRefused(_))));
    }
}
