//! Ideal short-pulse state generation.
//!
//! In the t_p → 0 limit each π pulse acts instantaneously and the emitted
//! field is generated by a chain of bond-2 isometries acting on the atom:
//! from the ground state, bin m (reverse-chronological) either hosts a photon
//! with amplitude β_m or opens a correlated vacuum pair with amplitude α_m.
//! The resulting state obeys the two-term recursion
//!
//! ```text
//! ψ_N = α_N · |00⟩ ⊗ ψ_{N-2}  +  β_N · |1⟩ ⊗ ψ_{N-1}        (chronological)
//! ```
//!
//! so its term count is the Fibonacci number F_N and all bitstrings match
//! `(1|00)*`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::types::{AtomParams, PhotonicState, PulseSequence, TimeBinPartition};

/// The single-bin emission map for reverse-chronological pulse index `m`:
/// α_m = e^{-γΔt_m/2} (stay excited, vacuum bin), β_m = √(1-α_m²) (emit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Isometry {
    pub fn from_separation(m: usize, gamma: f64, dt: f64) -> Self {
        let alpha = (-gamma * dt / 2.0).exp();
        let beta = (1.0 - alpha * alpha).sqrt();
        Isometry { m, alpha, beta }
    }
}

/// Fibonacci numbers with F₀ = F₁ = 1; `count_terms(N)` is the number of
/// nonzero amplitudes of the N-pulse state.
pub fn count_terms(n: usize) -> u64 {
    let (mut a, mut b) = (1u64, 1u64); // F₀, F₁
    for _ in 0..n {
        let next = a.checked_add(b).expect("Fibonacci overflow: pulse count too large");
        a = b;
        b = next;
    }
    a
}

/// Pulse separations that equalize every product-state amplitude:
/// Δt_m = T₁ ln(F_m / F_{m-2}) for m ≥ 2, approaching the constant "golden"
/// separation 2·T₁·ln φ for long sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenSchedule {
    /// Reverse-chronological separations `[Δt₂, …, Δt_N]`.
    pub separations: Vec<f64>,
    /// Fibonacci table `[F₀, …, F_N]`.
    pub fib: Vec<u64>,
}

impl GoldenSchedule {
    pub fn to_sequence(&self) -> PulseSequence {
        PulseSequence::ideal(self.separations.clone()).expect("golden separations are positive")
    }
}

pub fn golden_schedule(n: usize, t1: f64) -> Result<GoldenSchedule> {
    if n < 2 {
        return Err(Error::validation("n_pulses", format!("golden schedule needs N >= 2, got {n}")));
    }
    if !(t1 > 0.0) {
        return Err(Error::validation("gamma", format!("T1 must be > 0, got {t1}")));
    }
    let fib: Vec<u64> = (0..=n).map(count_terms).collect();
    let separations = (2..=n).map(|m| t1 * ((fib[m] as f64) / (fib[m - 2] as f64)).ln()).collect();
    Ok(GoldenSchedule { separations, fib })
}

/// Threshold times T_[m] = T₁ ln(N/(N-m)) that split a single exponential
/// wavepacket into N equal-weight bins, turning it into a maximally entangled
/// W state.
pub fn w_state_thresholds(n: usize, t1: f64) -> Result<TimeBinPartition> {
    if n < 2 {
        return Err(Error::validation("n_bins", format!("W-state partition needs N >= 2, got {n}")));
    }
    if !(t1 > 0.0) {
        return Err(Error::validation("gamma", format!("T1 must be > 0, got {t1}")));
    }
    let thresholds = (1..n).map(|m| t1 * ((n as f64) / ((n - m) as f64)).ln()).collect();
    TimeBinPartition::new(thresholds)
}

/// Generate the ideal N-pulse photonic state.
///
/// Requires a zero-width schedule. Bitstrings are chronological (first
/// emitted bin leftmost); the state is normalized, has exactly F_N terms and
/// all amplitudes real positive. N = 0 returns the vacuum on zero bins.
pub fn build_state(atom: &AtomParams, seq: &PulseSequence) -> Result<PhotonicState> {
    if !seq.is_ideal() {
        return Err(Error::validation(
            "tp",
            format!("ideal-model state generation requires pulse_width = 0, got {}", seq.pulse_width),
        ));
    }
    let n = seq.n_pulses();
    if n == 0 {
        return Ok(PhotonicState::vacuum());
    }

    // ψ₀ = vacuum on zero bins, ψ₁ = a single photon.
    let mut prev: BTreeMap<String, f64> = BTreeMap::from([(String::new(), 1.0)]);
    let mut cur: BTreeMap<String, f64> = BTreeMap::from([("1".to_string(), 1.0)]);
    if n == 1 {
        return finish(1, cur);
    }

    for m in 2..=n {
        let dt = seq.separation(m).expect("separation exists for m <= N");
        let iso = Isometry::from_separation(m, atom.gamma, dt);
        let mut next = BTreeMap::new();
        for (bits, amp) in &cur {
            next.insert(format!("1{bits}"), iso.beta * amp);
        }
        for (bits, amp) in &prev {
            next.insert(format!("00{bits}"), iso.alpha * amp);
        }
        prev = cur;
        cur = next;
    }
    finish(n, cur)
}

fn finish(n_bins: usize, amps: BTreeMap<String, f64>) -> Result<PhotonicState> {
    let amplitudes = amps.into_iter().map(|(k, v)| (k, C64::new(v, 0.0))).collect();
    PhotonicState::new(n_bins, amplitudes)?.normalize()
}

/// True when a bitstring prefix ends in the middle of a vacuum pair, i.e.
/// parsing (1|00)* leaves a dangling '0'. A cut there crosses a coherent
/// vacuum pair, so the bond sits in the excited branch.
fn splits_vacuum_pair(prefix: &str) -> bool {
    let b = prefix.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'1' => i += 1,
            _ => {
                if i + 1 < b.len() {
                    i += 2;
                } else {
                    return true;
                }
            }
        }
    }
    false
}

/// Schmidt coefficients across a cut after chronological bin `cut`.
///
/// The generating chain has bond dimension 2, so at most two coefficients
/// are nonzero: the cut either lands between tokens or splits a vacuum pair,
/// and within each branch the amplitude matrix factorizes. A state whose
/// amplitudes do not factorize that way was not produced by the pulse
/// recursion and is rejected. Coefficients are sorted descending and their
/// squares sum to 1.
pub fn bipartition_amplitudes(state: &PhotonicState, cut: usize) -> Result<Vec<f64>> {
    let n = state.n_bins();
    if !(1..n).contains(&cut) {
        return Err(Error::validation("cut", format!("cut must satisfy 1 <= cut < {n}, got {cut}")));
    }
    let norm2 = state.norm_sqr();
    if norm2 <= 0.0 {
        return Err(Error::validation("amplitudes", "cannot bipartition a zero state"));
    }

    // Rows of the reshaped amplitude matrix, grouped by bond branch. The two
    // branches have disjoint left AND right supports, so the Schmidt vectors
    // never mix across groups.
    let mut groups: [BTreeMap<&str, BTreeMap<&str, C64>>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for (bits, amp) in state.terms() {
        let (l, r) = bits.split_at(cut);
        let g = usize::from(splits_vacuum_pair(l));
        groups[g].entry(l).or_default().insert(r, amp / norm2.sqrt());
    }

    let mut coeffs = Vec::new();
    for rows in groups.iter().filter(|g| !g.is_empty()) {
        let mass: f64 = rows.values().flat_map(|r| r.values()).map(|a| a.norm_sqr()).sum();
        // Verify the rank-1 structure against the longest row.
        let (_, pivot) = rows
            .iter()
            .max_by(|a, b| {
                let na: f64 = a.1.values().map(|v| v.norm_sqr()).sum();
                let nb: f64 = b.1.values().map(|v| v.norm_sqr()).sum();
                na.partial_cmp(&nb).unwrap()
            })
            .expect("group is nonempty");
        let pivot_norm2: f64 = pivot.values().map(|v| v.norm_sqr()).sum();
        let mut explained = 0.0;
        for row in rows.values() {
            let overlap: C64 = row
                .iter()
                .filter_map(|(r, v)| pivot.get(r).map(|p| v * p.conj()))
                .sum();
            explained += overlap.norm_sqr() / pivot_norm2;
        }
        if (explained - mass).abs() > 1e-9 * mass.max(1.0) {
            return Err(Error::validation(
                "amplitudes",
                "state amplitudes are not bond-2 factorizable across this cut",
            ));
        }
        if mass > 1e-24 {
            coeffs.push(mass.sqrt());
        }
    }
    coeffs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(coeffs)
}
