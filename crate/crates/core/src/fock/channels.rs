use serde::{Deserialize, Serialize};

use super::{CMatrix, TwoModeState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossMode {
    A,
    B,
    Both,
}

/// Pure-loss channel: mixing with vacuum on a splitter of transmittivity `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    pub tau: f64,
    pub mode: LossMode,
}

impl LossChannel {
    pub fn new(tau: f64, mode: LossMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("transmittivity {tau} outside [0, 1]")));
        }
        Ok(Self { tau, mode })
    }

    /// Single-mode Kraus operators `K_k = Σ_n √C(n,k) τ^{(n−k)/2} (1−τ)^{k/2} |n−k⟩⟨n|`.
    pub fn kraus_operators(&self, dim: usize) -> Vec<CMatrix> {
        kraus(self.tau, dim)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn kraus(tau: f64, dim: usize) -> Vec<CMatrix> {
    (0..dim)
        .map(|k| {
            let mut m = CMatrix::zeros(dim, dim);
            for n in k..dim {
                let amp = binomial(n, k).sqrt()
                    * tau.powf((n - k) as f64 / 2.0)
                    * (1.0 - tau).powf(k as f64 / 2.0);
                m[(n - k, n)] = super::C64::new(amp, 0.0);
            }
            m
        })
        .filter(|m| m.iter().any(|z| z.norm() > 0.0))
        .collect()
}

/// Applies `channel` to the selected modes.
pub fn apply_loss(state: &TwoModeState, channel: &LossChannel) -> Result<TwoModeState> {
    if !(0.0..=1.0).contains(&channel.tau) {
        return Err(Error::InvalidArgument(format!(
            "transmittivity {} outside [0, 1]",
            channel.tau
        )));
    }
    let cutoff = state.cutoff();
    if channel.tau == 1.0 {
        return Ok(state.clone());
    }
    let id_a = vec![CMatrix::identity(cutoff.dim_a(), cutoff.dim_a())];
    let id_b = vec![CMatrix::identity(cutoff.dim_b(), cutoff.dim_b())];
    let ka = match channel.mode {
        LossMode::A | LossMode::Both => kraus(channel.tau, cutoff.dim_a()),
        LossMode::B => id_a,
    };
    let kb = match channel.mode {
        LossMode::B | LossMode::Both => kraus(channel.tau, cutoff.dim_b()),
        LossMode::A => id_b,
    };
    let ops: Vec<CMatrix> = ka
        .iter()
        .flat_map(|x| kb.iter().map(move |y| x.kronecker(y)))
        .collect();

    let mut out = Vec::new();
    for (w, v) in state.ensemble() {
        for k in &ops {
            let kv = k * v;
            let norm = kv.norm_squared();
            if norm > 0.0 {
                out.push((w * norm, kv.unscale(norm.sqrt())));
            }
        }
    }
    Ok(TwoModeState::from_components(cutoff, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kraus_completeness() {
        for tau in [0.0, 0.3, 0.9] {
            let d = 8;
            let ks = kraus(tau, d);
            let mut sum = CMatrix::zeros(d, d);
            for k in &ks {
                sum += k.adjoint() * k;
            }
            assert!((sum - CMatrix::identity(d, d)).camax() < 1e-12);
        }
    }

    #[test]
    fn loss_channel_validates_tau() {
        assert!(LossChannel::new(-0.1, LossMode::A).is_err());
        assert!(LossChannel::new(0.4, LossMode::Both).is_ok());
    }
}
