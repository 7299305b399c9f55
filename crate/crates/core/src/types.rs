//! Shared domain types: emitter parameters, pulse schedules, time grids and
//! the sparse Fock-basis photonic state.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-level emitter parameters. Rates are 1/ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Spontaneous decay rate γ = 1/T₁.
    pub gamma: f64,
    /// Pure-dephasing rate γ*.
    pub gamma_star: f64,
    /// Optical carrier frequency (rad/ps). Metadata only: every computed
    /// quantity lives in the rotating frame where ω₀ drops out.
    pub omega0: f64,
}

impl AtomParams {
    pub fn new(gamma: f64, gamma_star: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::validation("gamma", format!("must be > 0, got {gamma}")));
        }
        if gamma_star < 0.0 || !gamma_star.is_finite() {
            return Err(Error::validation("gamma_star", format!("must be >= 0, got {gamma_star}")));
        }
        Ok(AtomParams { gamma, gamma_star, omega0: 0.0 })
    }

    /// Build from the radiative lifetime T₁ (ps), with γ = 1/T₁.
    pub fn from_lifetime(t1: f64, gamma_star: f64) -> Result<Self> {
        if !(t1 > 0.0) || !t1.is_finite() {
            return Err(Error::validation("gamma", format!("T1 must be > 0 so that gamma = 1/T1 > 0, got T1 = {t1}")));
        }
        Self::new(1.0 / t1, gamma_star)
    }

    pub fn lifetime(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Half-life T₁ᐟ₂ = T₁ ln 2, the threshold splitting an exponential
    /// wavepacket into equal halves.
    pub fn half_life(&self) -> f64 {
        std::f64::consts::LN_2 / self.gamma
    }
}

/// An ordered π-pulse schedule.
///
/// Pulse separations are indexed in reverse chronological order, matching the
/// recursion that generates the state: `separations[0]` is Δt₂ (between the
/// last two pulses) and `separations[N-2]` is Δt_N (between the first two).
/// Δt₁, the wait after the final pulse, is implicit and treated as infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    n_pulses: usize,
    separations: Vec<f64>,
    /// Square-pulse duration t_p (ps). Zero selects the ideal-pulse model.
    pub pulse_width: f64,
    /// Rabi amplitude Ω (rad/ps). A π pulse has Ω·t_p = π.
    pub rabi: f64,
}

impl PulseSequence {
    /// `separations` in reverse chronological order, `[Δt₂, …, Δt_N]`.
    pub fn new(separations: Vec<f64>, pulse_width: f64, rabi: f64) -> Result<Self> {
        for (i, dt) in separations.iter().enumerate() {
            if !(*dt > 0.0) || !dt.is_finite() {
                return Err(Error::validation("dt", format!("separation Δt_{} must be > 0, got {dt}", i + 2)));
            }
        }
        if pulse_width < 0.0 || !pulse_width.is_finite() {
            return Err(Error::validation("tp", format!("pulse width must be >= 0, got {pulse_width}")));
        }
        if rabi < 0.0 || !rabi.is_finite() {
            return Err(Error::validation("rabi", format!("Rabi amplitude must be >= 0, got {rabi}")));
        }
        let n_pulses = separations.len() + 1;
        Ok(PulseSequence { n_pulses, separations, pulse_width, rabi })
    }

    /// A sequence with no pulses at all (produces vacuum).
    pub fn empty() -> Self {
        PulseSequence { n_pulses: 0, separations: Vec::new(), pulse_width: 0.0, rabi: 0.0 }
    }

    /// An ideal (zero-width) π-pulse schedule.
    pub fn ideal(separations: Vec<f64>) -> Result<Self> {
        Self::new(separations, 0.0, 0.0)
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    /// Δt_m for reverse-chronological index m ∈ 2..=N.
    pub fn separation(&self, m: usize) -> Option<f64> {
        if m < 2 || m > self.n_pulses {
            return None;
        }
        Some(self.separations[m - 2])
    }

    /// Reverse-chronological separations `[Δt₂, …, Δt_N]`.
    pub fn separations(&self) -> &[f64] {
        &self.separations
    }

    /// Gaps between consecutive pulses in chronological order.
    pub fn chronological_gaps(&self) -> Vec<f64> {
        self.separations.iter().rev().copied().collect()
    }

    /// Start time of each pulse, chronologically, with the first at t = 0.
    pub fn pulse_start_times(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_pulses);
        let mut t = 0.0;
        for (i, gap) in std::iter::once(&0.0).chain(self.separations.iter().rev()).enumerate() {
            if i >= self.n_pulses {
                break;
            }
            t += gap;
            out.push(t);
        }
        out
    }

    pub fn total_separation(&self) -> f64 {
        self.separations.iter().sum()
    }

    pub fn is_ideal(&self) -> bool {
        self.pulse_width == 0.0
    }
}

/// A uniform time grid, `t_i = start + i·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, n_points: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::validation("grid_step", format!("must be > 0, got {step}")));
        }
        if n_points < 2 {
            return Err(Error::validation("grid", format!("need at least 2 points, got {n_points}")));
        }
        Ok(TimeGrid { start, step, n_points })
    }

    /// Default analysis grid for a pulse schedule: cell-centered samples
    /// covering [0, 10·T₁ + ΣΔt_m], which truncates the exponential tail
    /// below 5e-5. Cell-centered sampling keeps midpoint sums second-order
    /// accurate and makes discrete convolution exactly mass-preserving.
    pub fn default_for(atom: &AtomParams, seq: &PulseSequence, step: f64) -> Result<Self> {
        let span = 10.0 / atom.gamma + seq.total_separation();
        Self::cell_centered(span, step)
    }

    /// Cell-centered grid over [0, span]: points at (i + 1/2)·step.
    pub fn cell_centered(span: f64, step: f64) -> Result<Self> {
        let n_points = (span / step).ceil() as usize;
        Self::new(step / 2.0, step, n_points.max(2))
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_points - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.time(i))
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end()
    }
}

/// Threshold times splitting a wavepacket into consecutive time bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBinPartition {
    thresholds: Vec<f64>,
}

impl TimeBinPartition {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        for w in thresholds.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::validation(
                    "thresholds",
                    format!("must be strictly increasing, got {} then {}", w[0], w[1]),
                ));
            }
        }
        Ok(TimeBinPartition { thresholds })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn n_bins(&self) -> usize {
        self.thresholds.len() + 1
    }
}

/// Occupation bitstrings are stored chronologically: the first-emitted bin is
/// the leftmost character. A valid ideal-model string is a concatenation of
/// the tokens `1` (a photon) and `00` (a correlated vacuum pair), so `010`
/// can never occur.
pub fn is_valid_occupation(bits: &str) -> bool {
    let b = bits.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'1' => i += 1,
            b'0' => {
                if i + 1 < b.len() && b[i + 1] == b'0' {
                    i += 2;
                } else {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

/// Sparse amplitude map over the N-time-bin Fock basis with at most one
/// photon per bin (the ideal-model state space).
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonicState {
    n_bins: usize,
    amplitudes: BTreeMap<String, C64>,
}

impl PhotonicState {
    /// Build a state, checking the occupation-pattern invariant on every key.
    pub fn new(n_bins: usize, amplitudes: BTreeMap<String, C64>) -> Result<Self> {
        for bits in amplitudes.keys() {
            if bits.len() != n_bins {
                return Err(Error::validation(
                    "amplitudes",
                    format!("bitstring '{bits}' does not have {n_bins} bins"),
                ));
            }
            if !is_valid_occupation(bits) {
                return Err(Error::validation(
                    "amplitudes",
                    format!("bitstring '{bits}' violates the (1|00)* vacuum-pair pattern"),
                ));
            }
        }
        Ok(PhotonicState { n_bins, amplitudes })
    }

    /// The vacuum on zero bins: the degenerate N = 0 output.
    pub fn vacuum() -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(String::new(), C64::new(1.0, 0.0));
        PhotonicState { n_bins: 0, amplitudes }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_terms(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, bits: &str) -> C64 {
        self.amplitudes.get(bits).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, C64)> + '_ {
        self.amplitudes.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Rescale so that Σ|amplitude|² = 1, preserving relative phases.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 {
            return Err(Error::validation("amplitudes", "cannot normalize a state with no nonzero amplitude"));
        }
        let scale = 1.0 / n2.sqrt();
        let amplitudes = self.amplitudes.iter().map(|(k, v)| (k.clone(), v * scale)).collect();
        Ok(PhotonicState { n_bins: self.n_bins, amplitudes })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Probability of each occupation pattern.
    pub fn probabilities(&self) -> BTreeMap<String, f64> {
        self.amplitudes.iter().map(|(k, v)| (k.clone(), v.norm_sqr())).collect()
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            n_bins: self.n_bins,
            terms: self
                .amplitudes
                .iter()
                .map(|(k, v)| TermJson { bits: k.clone(), re: v.re, im: v.im })
                .collect(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let mut amplitudes = BTreeMap::new();
        for t in &json.terms {
            amplitudes.insert(t.bits.clone(), C64::new(t.re, t.im));
        }
        Self::new(json.n_bins, amplitudes)
    }
}

/// JSON wire format for [`PhotonicState`]: `{n_bins, terms: [{bits, re, im}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub n_bins: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub bits: String,
    pub re: f64,
    pub im: f64,
}
