use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Noon,
    LossyNoon,
    Cat,
    Coherent,
    Random,
    Vacuum,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CriterionArg {
    M2,
    Husimi,
    Wigner,
    Mineig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SliceArg {
    Real,
    Diagonal,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MixArg {
    None,
    Balanced,
    Transmit,
    Reflect,
}

/// Every option any subcommand reads. Flags and config-file keys coincide;
/// flags win.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with default values for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<String>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateKind>,
    /// Two-mode state JSON (with `--state file`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_file: Option<String>,
    /// Photon number of the NOON family.
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Loss transmittivity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Coherent amplitude `re[,im]`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    /// Second-mode amplitude `re[,im]`; defaults to gamma.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    /// Cat dephasing.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Cat relative phase; defaults to π (odd cat).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Local dimension of random states.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Which random state `--state random` picks.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Levels per mode, `d` or `da,db`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<String>,

    /// `re_a,im_a,re_b,im_b`; several points separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    /// Row widths `x[,x2]`; for sweep and rate a list or `min:max:steps`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionArg>,
    /// Moment-matrix order.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice: Option<SliceArg>,
    /// `min:max:steps`, one for all axes or one per axis separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    /// Ray phase of the diagonal slice, or interferometer phase.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Polish the scan minimum with a simplex search.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// Add the partial-transpose verdict to witness output.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_ppt: Option<bool>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mix: Option<MixArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    /// Ancilla splitter transmittivity for a physical-displacement study.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ancilla_tau: Option<f64>,
    /// Histogram files to estimate from, separated by `,`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,

    /// Finite-difference step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detect_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppt_tol: Option<f64>,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatArg>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

/// Keys holding text in flag syntax; the config file may give them as
/// numbers or arrays.
const TEXT_KEYS: [&str; 8] = ["gamma", "delta", "cutoff", "point", "sigma", "range", "input", "state_file"];

fn normalize(map: &mut Map<String, Value>) {
    let text = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    for key in TEXT_KEYS {
        if let Some(v) = map.get_mut(key) {
            let joined = match &*v {
                Value::Array(items) if items.iter().any(Value::is_array) => {
                    items.iter().map(|p| match p {
                        Value::Array(xs) => xs.iter().map(text).collect::<Vec<_>>().join(","),
                        other => text(other),
                    }).collect::<Vec<_>>().join(";")
                }
                Value::Array(items) => items.iter().map(text).collect::<Vec<_>>().join(","),
                Value::Number(n) => n.to_string(),
                _ => continue,
            };
            *v = Value::String(joined);
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        let map = value
            .as_object_mut()
            .ok_or_else(|| Error::InvalidArgument("config file must hold a JSON object".into()))?;
        normalize(map);
        Ok(serde_json::from_value(value)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Options set here win over `base`.
    pub fn over(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut merged = serde_json::to_value(base)?;
        let top = serde_json::to_value(self)?;
        if let (Value::Object(m), Value::Object(t)) = (&mut merged, top) {
            m.extend(t);
        }
        let mut out: RunConfig = serde_json::from_value(merged)?;
        out.config = self.config.clone().or(base.config.clone());
        out.out = self.out.clone().or(base.out.clone());
        out.threads = self.threads.or(base.threads);
        Ok(out)
    }

    /// The file form: what `--config` reads back.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_accept_arrays() {
        let c = RunConfig::from_json_str(r#"{"state":"noon","N":3,"point":[0,0.5,0,0],"sigma":1}"#).unwrap();
        assert_eq!(c.state, Some(StateKind::Noon));
        assert_eq!(c.n, Some(3));
        assert_eq!(c.point.as_deref(), Some("0,0.5,0,0"));
        assert_eq!(c.sigma.as_deref(), Some("1"));
        let c = RunConfig::from_json_str(r#"{"point":[[0,0,0,0],[2,0,2,0]]}"#).unwrap();
        assert_eq!(c.point.as_deref(), Some("0,0,0,0;2,0,2,0"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json_str(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_json_str(r#"{"state":"noon","N":3,"seed":4}"#).unwrap();
        let flags = RunConfig {
            n: Some(5),
            ..RunConfig::default()
        };
        let m = flags.over(&file).unwrap();
        assert_eq!(m.n, Some(5));
        assert_eq!(m.seed, Some(4));
        assert_eq!(m.state, Some(StateKind::Noon));
    }

    #[test]
    fn file_form_round_trips() {
        let c = RunConfig {
            state: Some(StateKind::Cat),
            gamma: Some("1,-0.5".into()),
            p: Some(0.25),
            format: Some(FormatArg::Json),
            refine: Some(true),
            ..RunConfig::default()
        };
        let back = RunConfig::from_json_str(&c.to_json().to_string()).unwrap();
        assert_eq!(back, c);
    }
}
