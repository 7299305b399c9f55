//! Flat key-value configuration parsing (TOML syntax, fail-closed).
//!
//! Recognized keys, all optional except `T1`:
//!
//! | key           | meaning                              | default        |
//! |---------------|--------------------------------------|----------------|
//! | `T1`          | radiative lifetime (ps)              | required       |
//! | `tp`          | square-pulse width (ps)              | `0` (ideal)    |
//! | `dt`          | pulse separations `[Δt₂, …, Δt_N]`   | `[]` (N = 1)   |
//! | `rabi`        | Rabi amplitude Ω (rad/ps)            | `π/tp` (π pulse)|
//! | `gamma_star`  | pure-dephasing rate (1/ps)           | `0`            |
//! | `grid_step`   | analysis grid step (ps)              | `1`            |
//! | `jitter_fwhm` | detector jitter FWHM (ps)            | `0`            |
//! | `seed`        | RNG seed                             | `0`            |
//!
//! Unknown keys are an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AtomParams, PulseSequence};

/// Simulation options that are not physics parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub grid_step: f64,
    pub jitter_fwhm: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(default)]
    tp: f64,
    #[serde(default)]
    dt: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rabi: Option<f64>,
    #[serde(default)]
    gamma_star: f64,
    #[serde(default = "default_grid_step")]
    grid_step: f64,
    #[serde(default)]
    jitter_fwhm: f64,
    #[serde(default)]
    seed: u64,
}

fn default_grid_step() -> f64 {
    1.0
}

/// Parse a configuration document into validated domain types.
///
/// `dt` holds the reverse-chronological separations `[Δt₂, …, Δt_N]`, so the
/// pulse count is `dt.len() + 1`. When `rabi` is omitted it defaults to the
/// π-pulse condition Ω = π/t_p (or 0 for ideal pulses).
pub fn parse_config(text: &str) -> Result<(AtomParams, PulseSequence, SimOptions)> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate(&raw)
}

fn validate(raw: &RawConfig) -> Result<(AtomParams, PulseSequence, SimOptions)> {
    let atom = AtomParams::from_lifetime(raw.t1, raw.gamma_star)?;
    let rabi = match raw.rabi {
        Some(r) => r,
        None if raw.tp > 0.0 => std::f64::consts::PI / raw.tp,
        None => 0.0,
    };
    let seq = PulseSequence::new(raw.dt.clone(), raw.tp, rabi)?;
    if !(raw.grid_step > 0.0) || !raw.grid_step.is_finite() {
        return Err(Error::validation("grid_step", format!("must be > 0, got {}", raw.grid_step)));
    }
    if raw.jitter_fwhm < 0.0 || !raw.jitter_fwhm.is_finite() {
        return Err(Error::validation("jitter_fwhm", format!("must be >= 0, got {}", raw.jitter_fwhm)));
    }
    let opts = SimOptions { grid_step: raw.grid_step, jitter_fwhm: raw.jitter_fwhm, seed: raw.seed };
    Ok((atom, seq, opts))
}

/// Serialize back to the document format accepted by [`parse_config`].
pub fn serialize_config(atom: &AtomParams, seq: &PulseSequence, opts: &SimOptions) -> String {
    let raw = RawConfig {
        t1: 1.0 / atom.gamma,
        tp: seq.pulse_width,
        dt: seq.separations().to_vec(),
        rabi: Some(seq.rabi),
        gamma_star: atom.gamma_star,
        grid_step: opts.grid_step,
        jitter_fwhm: opts.jitter_fwhm,
        seed: opts.seed,
    };
    toml::to_string(&raw).expect("config serialization cannot fail")
}
