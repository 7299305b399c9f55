//! From measured moments to entanglement figures: photon-number
//! probabilities, Bell-state fidelities, partial density-matrix assembly and
//! concurrence by rejection sampling.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat4};

/// Integrated correlation moments with their uncertainties. `mu_ratio` is
/// μ/μ_π as measured against the single-pulse reference, `mu_pi` the assumed
/// source-level average photon number of that reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mu_ratio: f64,
    pub g2: f64,
    pub g3: f64,
    pub mu_pi: f64,
    #[serde(default)]
    pub sigma_mu_ratio: f64,
    #[serde(default)]
    pub sigma_g2: f64,
    #[serde(default)]
    pub sigma_g3: f64,
    #[serde(default)]
    pub sigma_mu_pi: f64,
}

/// Photon-number probabilities p₀..p₃ with first-order propagated
/// uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub values: [f64; 4],
    pub sigmas: [f64; 4],
    pub mu: f64,
    pub sigma_mu: f64,
}

/// Invert (μ/μ_π, g⁽²⁾, g⁽³⁾, μ_π) into photon-number probabilities:
/// p₃ = g³μ³/6, p₂ = (g²μ² − 6p₃)/2, p₁ = μ − 2p₂ − 3p₃, p₀ = 1 − Σ.
///
/// A probability more than 3σ below zero is an unphysical-regime error
/// naming the offending pᵢ.
pub fn probabilities_from_moments(m: &MomentSet) -> Result<Probabilities> {
    for (name, v) in [("mu_ratio", m.mu_ratio), ("g2", m.g2), ("g3", m.g3), ("mu_pi", m.mu_pi)] {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::Validation { field: "moments", reason: format!("{name} must be >= 0, got {v}") });
        }
    }
    let mu = m.mu_ratio * m.mu_pi;
    if mu <= 0.0 {
        return Err(Error::validation("moments", "mean photon number must be positive"));
    }
    let (g2, g3) = (m.g2, m.g3);

    let p3 = g3 * mu.powi(3) / 6.0;
    let p2 = (g2 * mu.powi(2) - 6.0 * p3) / 2.0;
    let p1 = mu - 2.0 * p2 - 3.0 * p3;
    let p0 = 1.0 - p1 - p2 - p3;

    // first-order propagation over the independent inputs (r, g2, g3, μ_π);
    // μ = r·μ_π enters every probability
    let dmu = [m.mu_pi * m.sigma_mu_ratio, 0.0, 0.0, m.mu_ratio * m.sigma_mu_pi];
    let dg2 = [0.0, m.sigma_g2, 0.0, 0.0];
    let dg3 = [0.0, 0.0, m.sigma_g3, 0.0];
    // ∂p/∂μ, ∂p/∂g2, ∂p/∂g3 for p3, p2, p1, p0 (in value order p0..p3)
    let grad_mu = [
        -1.0 + g2 * mu - g3 * mu * mu / 2.0,
        1.0 - 2.0 * g2 * mu + 1.5 * g3 * mu * mu,
        g2 * mu - 1.5 * g3 * mu * mu,
        g3 * mu * mu / 2.0,
    ];
    let grad_g2 = [mu * mu / 2.0, -mu * mu, mu * mu / 2.0, 0.0];
    let grad_g3 = [-mu.powi(3) / 6.0, mu.powi(3) / 2.0, -mu.powi(3) / 2.0, mu.powi(3) / 6.0];

    let mut sigmas = [0.0f64; 4];
    for i in 0..4 {
        let mut var = 0.0;
        for k in 0..4 {
            var += (grad_mu[i] * dmu[k] + grad_g2[i] * dg2[k] + grad_g3[i] * dg3[k]).powi(2);
        }
        sigmas[i] = var.sqrt();
    }
    let sigma_mu = (dmu[0].powi(2) + dmu[3].powi(2)).sqrt();

    let values = [p0, p1, p2, p3];
    // flag the worst offender in σ units
    let mut worst: Option<(usize, f64)> = None;
    for (i, (v, s)) in values.iter().zip(&sigmas).enumerate() {
        if *v < -3.0 * s {
            let score = if *s > 0.0 { -v / s } else { f64::INFINITY };
            if worst.map_or(true, |(_, w)| score > w) {
                worst = Some((i, score));
            }
        }
    }
    if let Some((i, _)) = worst {
        return Err(Error::Unphysical(format!(
            "p{i} = {:.4} is negative beyond 3σ = {:.4}; moments are inconsistent",
            values[i],
            3.0 * sigmas[i]
        )));
    }
    Ok(Probabilities { values, sigmas, mu, sigma_mu })
}

/// A fidelity estimate together with its range over the noise-scaling
/// ambiguity μ̃ and, where available, the analytic upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    /// Value at the midpoint of the μ̃ range.
    pub central: f64,
    pub lower: f64,
    pub upper: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiPlusInputs {
    pub p1: f64,
    pub mu_pi: f64,
    pub mu_bar_e: f64,
    pub mu_bar_l: f64,
    pub m_ee: f64,
    pub m_ll: f64,
    pub m_el: f64,
    /// Source-level single-photon indistinguishability for the p₁√M_s bound.
    #[serde(default)]
    pub m_s: Option<f64>,
}

/// Bell-state fidelity of a split single photon with respect to ψ⁺:
/// F = (μ̃_π/2)(μ̄_e√M_ee + μ̄_l√M_ll + 2√(μ̄_e μ̄_l M_el)), ranged over
/// μ̃_π ∈ [p₁, μ_π].
pub fn fidelity_psi_plus(inp: &PsiPlusInputs) -> Result<FidelityEstimate> {
    check_proportions(inp.mu_bar_e, inp.mu_bar_l)?;
    for (name, m) in [("M_ee", inp.m_ee), ("M_ll", inp.m_ll), ("M_el", inp.m_el)] {
        check_overlap(name, m)?;
    }
    let shape = inp.mu_bar_e * inp.m_ee.sqrt()
        + inp.mu_bar_l * inp.m_ll.sqrt()
        + 2.0 * (inp.mu_bar_e * inp.mu_bar_l * inp.m_el).sqrt();
    let f = |mu_tilde: f64| mu_tilde / 2.0 * shape;
    let (lo, hi) = (inp.p1.min(inp.mu_pi), inp.p1.max(inp.mu_pi));
    Ok(FidelityEstimate {
        central: f((lo + hi) / 2.0),
        lower: f(lo),
        upper: f(hi),
        bound: inp.m_s.map(|ms| inp.p1 * ms.sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPlusInputs {
    pub p0: f64,
    pub p2: f64,
    pub mu: f64,
    pub mu_bar_e: f64,
    pub mu_bar_l: f64,
    pub m_ee: f64,
    pub m_ll: f64,
    pub c2_el: f64,
}

/// Bell-state fidelity with respect to φ⁺:
/// F = ½(p₀ + (μ̃²/p₂)μ̄_e μ̄_l √(M_ee M_ll) + 2μ̃√(μ̄_e μ̄_l c²_el)),
/// ranged over μ̃ ∈ [2p₂, μ].
pub fn fidelity_phi_plus(inp: &PhiPlusInputs) -> Result<FidelityEstimate> {
    check_proportions(inp.mu_bar_e, inp.mu_bar_l)?;
    for (name, m) in [("M_ee", inp.m_ee), ("M_ll", inp.m_ll), ("c2_el", inp.c2_el)] {
        check_overlap(name, m)?;
    }
    if inp.p2 <= 0.0 {
        return Err(Error::validation("p2", "the φ⁺ fidelity estimate is singular at p2 = 0"));
    }
    let f = |mu_tilde: f64| {
        0.5 * (inp.p0
            + mu_tilde * mu_tilde / inp.p2 * inp.mu_bar_e * inp.mu_bar_l * (inp.m_ee * inp.m_ll).sqrt()
            + 2.0 * mu_tilde * (inp.mu_bar_e * inp.mu_bar_l * inp.c2_el).sqrt())
    };
    let (lo, hi) = ((2.0 * inp.p2).min(inp.mu), (2.0 * inp.p2).max(inp.mu));
    Ok(FidelityEstimate { central: f((lo + hi) / 2.0), lower: f(lo), upper: f(hi), bound: None })
}

fn check_proportions(mu_bar_e: f64, mu_bar_l: f64) -> Result<()> {
    if (mu_bar_e + mu_bar_l - 1.0).abs() > 1e-6 {
        return Err(Error::validation(
            "mu_bar",
            format!("bin proportions must sum to 1, got {mu_bar_e} + {mu_bar_l}"),
        ));
    }
    Ok(())
}

fn check_overlap(name: &'static str, m: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Validation { field: "overlap", reason: format!("{name} must lie in [0,1], got {m}") });
    }
    Ok(())
}

/// Knowledge about one density-matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ElementStatus {
    /// Directly estimated from measurements; sampled normally.
    Measured { value: f64, sigma: f64 },
    /// Unknown, bounded above (diagonals bounded by photon probabilities).
    Bounded { upper: f64 },
    /// Unknown off-diagonal; magnitude capped by Cauchy-Schwarz per sample.
    Free,
}

/// A 4×4 two-qubit block in the basis {|00⟩, |01⟩, |10⟩, |11⟩} (early
/// count, late count) with per-element knowledge status. Hermiticity is
/// structural: only the upper triangle is stored. Measured off-diagonals are
/// non-negative reals by the phase convention fixed in the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDensityMatrix {
    pub status: [[ElementStatus; 4]; 4],
    /// Measured coherences that exceeded their Cauchy-Schwarz cap at build
    /// time, recorded as (i, j, original, cap).
    pub clamps: Vec<(usize, usize, f64, f64)>,
}

impl PartialDensityMatrix {
    /// Central-value matrix: measured values, bounds at half weight for
    /// bounded diagonals, zeros for free elements.
    pub fn central(&self) -> CMat4 {
        let mut rho = linalg::zero4();
        for i in 0..4 {
            for j in i..4 {
                let v = match self.status[i][j] {
                    ElementStatus::Measured { value, .. } => value,
                    ElementStatus::Bounded { upper } if i == j => upper / 2.0,
                    _ => 0.0,
                };
                rho[i][j] = C64::new(v, 0.0);
                rho[j][i] = C64::new(v, 0.0);
            }
        }
        rho
    }
}

/// Measurement inputs for the single-pulse ψ⁺ case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiPlusMeasurements {
    pub mu_tilde_pi: f64,
    pub mu_bar_e: f64,
    pub mu_bar_l: f64,
    pub m_ee: f64,
    pub sigma_m_ee: f64,
    pub m_ll: f64,
    pub sigma_m_ll: f64,
    pub m_el: f64,
    pub sigma_m_el: f64,
    pub p0: f64,
    pub p2: f64,
}

/// Measurement inputs for the two-pulse φ⁺ case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPlusMeasurements {
    pub mu_tilde: f64,
    pub mu_bar_e: f64,
    pub mu_bar_l: f64,
    pub p0: f64,
    pub sigma_p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub sigma_p2: f64,
    pub m_ee: f64,
    pub sigma_m_ee: f64,
    pub m_ll: f64,
    pub sigma_m_ll: f64,
    pub c2_el: f64,
    pub sigma_c2_el: f64,
}

/// Assemble the ψ⁺ partial density matrix: the single-photon populations and
/// the |01⟩⟨10| coherence are measured; vacuum and two-photon diagonals are
/// bounded by p₀ and p₂; every other off-diagonal is free.
pub fn build_partial_dm_psi_plus(m: &PsiPlusMeasurements) -> Result<PartialDensityMatrix> {
    check_proportions(m.mu_bar_e, m.mu_bar_l)?;
    let free = ElementStatus::Free;
    let mut status = [[free; 4]; 4];

    let rho_late = m.mu_tilde_pi * m.mu_bar_l * m.m_ll.sqrt();
    let rho_early = m.mu_tilde_pi * m.mu_bar_e * m.m_ee.sqrt();
    let rho_coh = m.mu_tilde_pi * (m.mu_bar_e * m.mu_bar_l * m.m_el).sqrt();
    let s_late = m.mu_tilde_pi * m.mu_bar_l * half_sqrt_deriv(m.m_ll) * m.sigma_m_ll;
    let s_early = m.mu_tilde_pi * m.mu_bar_e * half_sqrt_deriv(m.m_ee) * m.sigma_m_ee;
    let s_coh = m.mu_tilde_pi * (m.mu_bar_e * m.mu_bar_l).sqrt() * half_sqrt_deriv(m.m_el) * m.sigma_m_el;

    status[0][0] = ElementStatus::Bounded { upper: m.p0.max(0.0) };
    status[1][1] = ElementStatus::Measured { value: rho_late, sigma: s_late };
    status[2][2] = ElementStatus::Measured { value: rho_early, sigma: s_early };
    status[3][3] = ElementStatus::Bounded { upper: m.p2.max(0.0) };
    status[1][2] = ElementStatus::Measured { value: rho_coh, sigma: s_coh };

    let mut pdm = PartialDensityMatrix { status, clamps: Vec::new() };
    record_clamp(&mut pdm, 1, 2, (rho_late * rho_early).sqrt());
    Ok(pdm)
}

/// Assemble the φ⁺ partial density matrix: vacuum, |11⟩ population and the
/// |00⟩⟨11| coherence are measured; the single-photon diagonals are bounded
/// by p₁.
pub fn build_partial_dm_phi_plus(m: &PhiPlusMeasurements) -> Result<PartialDensityMatrix> {
    check_proportions(m.mu_bar_e, m.mu_bar_l)?;
    if m.p2 <= 0.0 {
        return Err(Error::validation("p2", "φ⁺ reconstruction needs p2 > 0"));
    }
    let free = ElementStatus::Free;
    let mut status = [[free; 4]; 4];

    let rho_11 = m.mu_tilde * m.mu_tilde / m.p2 * m.mu_bar_e * m.mu_bar_l * (m.m_ee * m.m_ll).sqrt();
    let var_11 = (rho_11 * half_sqrt_deriv(m.m_ee) / m.m_ee.sqrt() * m.sigma_m_ee * m.m_ll.sqrt()).powi(2)
        + (rho_11 * half_sqrt_deriv(m.m_ll) / m.m_ll.sqrt() * m.sigma_m_ll * m.m_ee.sqrt()).powi(2)
        + (rho_11 / m.p2 * m.sigma_p2).powi(2);
    let rho_coh = m.mu_tilde * (m.mu_bar_e * m.mu_bar_l * m.c2_el).sqrt();
    let s_coh = m.mu_tilde * (m.mu_bar_e * m.mu_bar_l).sqrt() * half_sqrt_deriv(m.c2_el) * m.sigma_c2_el;

    status[0][0] = ElementStatus::Measured { value: m.p0, sigma: m.sigma_p0 };
    status[1][1] = ElementStatus::Bounded { upper: m.p1.max(0.0) };
    status[2][2] = ElementStatus::Bounded { upper: m.p1.max(0.0) };
    status[3][3] = ElementStatus::Measured { value: rho_11, sigma: var_11.sqrt() };
    status[0][3] = ElementStatus::Measured { value: rho_coh, sigma: s_coh };

    let mut pdm = PartialDensityMatrix { status, clamps: Vec::new() };
    record_clamp(&mut pdm, 0, 3, (m.p0.max(0.0) * rho_11).sqrt());
    Ok(pdm)
}

fn half_sqrt_deriv(x: f64) -> f64 {
    if x > 0.0 {
        0.5 / x.sqrt()
    } else {
        0.0
    }
}

fn record_clamp(pdm: &mut PartialDensityMatrix, i: usize, j: usize, cap: f64) {
    if let ElementStatus::Measured { value, sigma } = pdm.status[i][j] {
        if value > cap {
            log::warn!("measured |ϱ_{i}{j}| = {value:.4} exceeds its Cauchy-Schwarz cap {cap:.4}; clamped");
            pdm.clamps.push((i, j, value, cap));
            pdm.status[i][j] = ElementStatus::Measured { value: cap, sigma };
        }
    }
}

/// Wootters concurrence of a two-qubit density matrix (possibly
/// subnormalized; the formula is degree-1 homogeneous in ρ).
pub fn wootters_concurrence(rho: &CMat4) -> Result<f64> {
    if linalg::hermiticity_defect(rho) > 1e-10 {
        return Err(Error::validation("rho", "matrix is not Hermitian within 1e-10"));
    }
    let min_ev = linalg::min_eigenvalue(rho);
    if min_ev < -1e-10 {
        return Err(Error::Unphysical(format!("density matrix has negative eigenvalue {min_ev:.3e}")));
    }

    // ρ̃ = (σy⊗σy) ρ* (σy⊗σy): entrywise ρ̃_ij = y_i y_j conj(ρ_{3-i,3-j})
    let y = [-1.0, 1.0, 1.0, -1.0];
    let mut rho_tilde = linalg::zero4();
    for i in 0..4 {
        for j in 0..4 {
            rho_tilde[i][j] = rho[3 - i][3 - j].conj() * (y[i] * y[j]);
        }
    }
    let root = linalg::sqrt_psd(rho);
    let h = linalg::matmul(&linalg::matmul(&root, &rho_tilde), &root);
    let (evals, _) = linalg::hermitian_eigen(&h);
    let lambdas: Vec<f64> = evals.iter().rev().map(|e| e.max(0.0).sqrt()).collect();
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Outcome of the concurrence rejection sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceEstimate {
    pub mean: f64,
    pub std: f64,
    /// Mean of C(ρ/tr ρ), logged for comparison with the unrenormalized
    /// convention.
    pub mean_renormalized: f64,
    pub n_accepted: u64,
    pub n_rejected: u64,
    /// 64 equal bins on [0, 1].
    pub histogram: Vec<u64>,
}

/// Sample physical density matrices consistent with a partial reconstruction
/// and average their concurrence.
///
/// Measured elements draw from a normal distribution, bounded diagonals
/// uniformly in [0, bound], free off-diagonals with uniform magnitude below
/// the Cauchy-Schwarz cap of the sampled diagonals and uniform phase.
/// Candidates are kept only when positive semidefinite (eigenvalues ≥
/// −1e-10). Deterministic for a fixed seed.
pub fn sample_concurrence(pdm: &PartialDensityMatrix, n_samples: u64, seed: u64) -> Result<ConcurrenceEstimate> {
    if n_samples == 0 {
        return Err(Error::validation("n_samples", "need at least one sample"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut accepted = 0u64;
    let mut rejected = 0u64;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut sum_renorm = 0.0f64;
    let mut histogram = vec![0u64; 64];

    const MAX_ATTEMPTS: u64 = 10_000_000;
    while accepted < n_samples {
        let attempts = accepted + rejected;
        if attempts >= MAX_ATTEMPTS {
            let rate = accepted as f64 / attempts as f64;
            return Err(Error::Numerics(format!(
                "concurrence sampling acceptance rate {rate:.2e} after {attempts} attempts; \
                 the partial density matrix is close to unphysical"
            )));
        }

        // diagonals first: caps for the free off-diagonals come from them
        let mut diag = [0.0f64; 4];
        let mut bad = false;
        for i in 0..4 {
            diag[i] = match pdm.status[i][i] {
                ElementStatus::Measured { value, sigma } => value + sigma * normal.sample(&mut rng),
                ElementStatus::Bounded { upper } => rng.random::<f64>() * upper,
                ElementStatus::Free => rng.random::<f64>(),
            };
            if !(0.0..=1.0).contains(&diag[i]) {
                bad = true;
            }
        }
        if bad {
            rejected += 1;
            continue;
        }

        let mut rho = linalg::zero4();
        for i in 0..4 {
            rho[i][i] = C64::new(diag[i], 0.0);
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let v = match pdm.status[i][j] {
                    ElementStatus::Measured { value, sigma } => {
                        C64::new(value + sigma * normal.sample(&mut rng), 0.0)
                    }
                    ElementStatus::Bounded { upper } => {
                        let cap = (diag[i] * diag[j]).sqrt().min(upper);
                        let mag = rng.random::<f64>() * cap;
                        let phase = rng.random::<f64>() * std::f64::consts::TAU;
                        C64::from_polar(mag, phase)
                    }
                    ElementStatus::Free => {
                        let cap = (diag[i] * diag[j]).sqrt();
                        let mag = rng.random::<f64>() * cap;
                        let phase = rng.random::<f64>() * std::f64::consts::TAU;
                        C64::from_polar(mag, phase)
                    }
                };
                rho[i][j] = v;
                rho[j][i] = v.conj();
            }
        }

        if linalg::min_eigenvalue(&rho) < -1e-10 {
            rejected += 1;
            continue;
        }
        let c = wootters_concurrence(&rho)?;
        let tr = linalg::trace(&rho).re;
        accepted += 1;
        sum += c;
        sum_sq += c * c;
        if tr > 0.0 {
            sum_renorm += c / tr;
        }
        let bin = ((c * 64.0) as usize).min(63);
        histogram[bin] += 1;
    }

    let n = accepted as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(ConcurrenceEstimate {
        mean,
        std: var.sqrt(),
        mean_renormalized: sum_renorm / n,
        n_accepted: accepted,
        n_rejected: rejected,
        histogram,
    })
}

/// Full estimator output for one analysis case, emitted as JSON by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub case: String,
    pub moments: Option<MomentSet>,
    pub probabilities: Option<Probabilities>,
    pub fidelity: FidelityEstimate,
    pub concurrence: ConcurrenceEstimate,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn phi_plus_rho() -> CMat4 {
        let mut rho = linalg::zero4();
        let h = C64::new(0.5, 0.0);
        rho[0][0] = h;
        rho[0][3] = h;
        rho[3][0] = h;
        rho[3][3] = h;
        rho
    }

    fn werner(p: f64) -> CMat4 {
        let mut rho = phi_plus_rho();
        for i in 0..4 {
            for j in 0..4 {
                rho[i][j] *= p;
            }
            rho[i][i] += C64::new((1.0 - p) / 4.0, 0.0);
        }
        rho
    }

    #[test]
    fn paper_two_pulse_probabilities() {
        let m = MomentSet {
            mu_ratio: 1.02,
            g2: 0.99,
            g3: 0.165,
            mu_pi: 1.03,
            sigma_mu_ratio: 0.01,
            sigma_g2: 0.02,
            sigma_g3: 0.007,
            sigma_mu_pi: 0.03,
        };
        let p = probabilities_from_moments(&m).unwrap();
        // published: p0 = 0.47±0.01, p1 = 0.05±0.04, p2 = 0.45±0.03, p3 = 0.032±0.003
        assert!((p.values[0] - 0.47).abs() < 0.01, "p0 = {}", p.values[0]);
        assert!((p.values[1] - 0.05).abs() < 0.04, "p1 = {}", p.values[1]);
        assert!((p.values[2] - 0.45).abs() < 0.03, "p2 = {}", p.values[2]);
        assert!((p.values[3] - 0.032).abs() < 0.003, "p3 = {}", p.values[3]);
    }

    #[test]
    fn paper_single_pulse_probabilities() {
        let m = MomentSet {
            mu_ratio: 1.0,
            g2: 0.063,
            g3: 0.0016,
            mu_pi: 1.03,
            sigma_mu_ratio: 0.0,
            sigma_g2: 0.002,
            sigma_g3: 0.0009,
            sigma_mu_pi: 0.03,
        };
        let p = probabilities_from_moments(&m).unwrap();
        assert!((p.values[1] - 0.96).abs() < 0.03, "p1 = {}", p.values[1]);
        assert!((p.values[2] - 0.035).abs() < 0.003, "p2 = {}", p.values[2]);
    }

    #[test]
    fn perfect_single_photon_moments() {
        let m = MomentSet {
            mu_ratio: 1.0,
            g2: 0.0,
            g3: 0.0,
            mu_pi: 1.0,
            sigma_mu_ratio: 0.0,
            sigma_g2: 0.0,
            sigma_g3: 0.0,
            sigma_mu_pi: 0.0,
        };
        let p = probabilities_from_moments(&m).unwrap();
        assert_eq!(p.values, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn moment_round_trip() {
        let (p0, p1, p2, p3) = (0.4, 0.1, 0.45, 0.05);
        assert!((p0 + p1 + p2 + p3 - 1.0f64).abs() < 1e-15);
        let mu = p1 + 2.0 * p2 + 3.0 * p3;
        let m = MomentSet {
            mu_ratio: mu,
            g2: (2.0 * p2 + 6.0 * p3) / (mu * mu),
            g3: 6.0 * p3 / mu.powi(3),
            mu_pi: 1.0,
            sigma_mu_ratio: 0.0,
            sigma_g2: 0.0,
            sigma_g3: 0.0,
            sigma_mu_pi: 0.0,
        };
        let p = probabilities_from_moments(&m).unwrap();
        for (got, want) in p.values.iter().zip([p0, p1, p2, p3]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn inconsistent_moments_are_unphysical() {
        // huge g3 forces p1 far negative
        let m = MomentSet {
            mu_ratio: 1.0,
            g2: 0.1,
            g3: 3.0,
            mu_pi: 1.0,
            sigma_mu_ratio: 0.001,
            sigma_g2: 0.001,
            sigma_g3: 0.001,
            sigma_mu_pi: 0.001,
        };
        let err = probabilities_from_moments(&m).unwrap_err();
        assert!(matches!(err, Error::Unphysical(_)), "{err}");
        assert!(err.to_string().contains("p2"), "{err}");
    }

    #[test]
    fn ideal_psi_plus_fidelity_is_one() {
        let f = fidelity_psi_plus(&PsiPlusInputs {
            p1: 1.0,
            mu_pi: 1.0,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            m_ee: 1.0,
            m_ll: 1.0,
            m_el: 1.0,
            m_s: None,
        })
        .unwrap();
        assert_abs_diff_eq!(f.central, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psi_plus_bound_matches_paper() {
        let f = fidelity_psi_plus(&PsiPlusInputs {
            p1: 0.96,
            mu_pi: 1.03,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            m_ee: 0.8,
            m_ll: 0.8,
            m_el: 0.77,
            m_s: Some(0.82),
        })
        .unwrap();
        // p₁√M_s = 0.87 ± rounding; the paper quotes 0.88 ± 0.02
        assert!((f.bound.unwrap() - 0.88).abs() < 0.02, "bound = {:?}", f.bound);
    }

    #[test]
    fn degenerate_single_bin_psi_plus() {
        let f = fidelity_psi_plus(&PsiPlusInputs {
            p1: 1.0,
            mu_pi: 1.0,
            mu_bar_e: 1.0,
            mu_bar_l: 0.0,
            m_ee: 0.81,
            m_ll: 1.0,
            m_el: 0.0,
            m_s: None,
        })
        .unwrap();
        assert_abs_diff_eq!(f.central, 0.45, epsilon = 1e-12);
    }

    #[test]
    fn ideal_phi_plus_fidelity_is_one() {
        let f = fidelity_phi_plus(&PhiPlusInputs {
            p0: 0.5,
            p2: 0.5,
            mu: 1.0,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            m_ee: 1.0,
            m_ll: 1.0,
            c2_el: 1.0,
        })
        .unwrap();
        assert_abs_diff_eq!(f.central, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.upper, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn incoherent_phi_plus_limit() {
        let f = fidelity_phi_plus(&PhiPlusInputs {
            p0: 0.5,
            p2: 0.25,
            mu: 0.5,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            m_ee: 0.0,
            m_ll: 0.0,
            c2_el: 0.0,
        })
        .unwrap();
        assert_abs_diff_eq!(f.lower, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn phi_plus_rejects_zero_p2() {
        let r = fidelity_phi_plus(&PhiPlusInputs {
            p0: 1.0,
            p2: 0.0,
            mu: 0.0,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            m_ee: 1.0,
            m_ll: 1.0,
            c2_el: 1.0,
        });
        assert!(r.is_err());
    }

    #[test]
    fn fidelity_phi_plus_is_monotone() {
        let base = PhiPlusInputs {
            p0: 0.4,
            p2: 0.4,
            mu: 0.9,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            m_ee: 0.7,
            m_ll: 0.7,
            c2_el: 0.5,
        };
        let f0 = fidelity_phi_plus(&base).unwrap().central;
        for bump in [
            PhiPlusInputs { p0: base.p0 + 0.01, ..base },
            PhiPlusInputs { c2_el: base.c2_el + 0.01, ..base },
            PhiPlusInputs { m_ee: base.m_ee + 0.01, ..base },
            PhiPlusInputs { m_ll: base.m_ll + 0.01, ..base },
        ] {
            let f1 = fidelity_phi_plus(&bump).unwrap().central;
            assert!(f1 >= f0, "fidelity must be nondecreasing: {f0} -> {f1}");
        }
    }

    #[test]
    fn concurrence_of_bell_and_mixed_states() {
        assert_abs_diff_eq!(wootters_concurrence(&phi_plus_rho()).unwrap(), 1.0, epsilon = 1e-12);
        let mut mixed = linalg::zero4();
        for i in 0..4 {
            mixed[i][i] = C64::new(0.25, 0.0);
        }
        assert_abs_diff_eq!(wootters_concurrence(&mixed).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn werner_concurrence_matches_closed_form() {
        for p in [0.2, 0.5, 0.9] {
            let expect = (0.0f64).max((3.0 * p - 1.0) / 2.0);
            let got = wootters_concurrence(&werner(p)).unwrap();
            assert_abs_diff_eq!(got, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn concurrence_is_homogeneous() {
        let mut half = phi_plus_rho();
        for row in half.iter_mut() {
            for v in row.iter_mut() {
                *v *= 0.5;
            }
        }
        assert_abs_diff_eq!(wootters_concurrence(&half).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn concurrence_rejects_bad_input() {
        let mut non_herm = phi_plus_rho();
        non_herm[0][3] = C64::new(0.5, 0.3);
        assert!(wootters_concurrence(&non_herm).is_err());

        let mut neg = linalg::zero4();
        neg[0][0] = C64::new(1.1, 0.0);
        neg[1][1] = C64::new(-0.1, 0.0);
        assert!(wootters_concurrence(&neg).is_err());
    }

    /// Random local unitaries leave the concurrence invariant.
    #[test]
    fn local_unitary_invariance() {
        use rand::Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let random_u2 = |rng: &mut ChaCha12Rng| -> [[C64; 2]; 2] {
            // Haar-ish: random phase angles are enough for an invariance test
            let (a, b, c): (f64, f64, f64) =
                (rng.random::<f64>() * std::f64::consts::TAU, rng.random::<f64>() * std::f64::consts::TAU, rng.random::<f64>() * std::f64::consts::FRAC_PI_2);
            let (s, t) = (c.sin(), c.cos());
            [
                [C64::from_polar(t, a), C64::from_polar(s, b)],
                [C64::from_polar(-s, -b), C64::from_polar(t, -a)],
            ]
        };
        let rho = werner(0.7);
        let base = wootters_concurrence(&rho).unwrap();
        for _ in 0..100 {
            let ua = random_u2(&mut rng);
            let ub = random_u2(&mut rng);
            let mut u = linalg::zero4();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            u[2 * i + k][2 * j + l] = ua[i][j] * ub[k][l];
                        }
                    }
                }
            }
            let rotated = linalg::matmul(&linalg::matmul(&u, &rho), &linalg::adjoint(&u));
            let c = wootters_concurrence(&rotated).unwrap();
            assert_abs_diff_eq!(c, base, epsilon = 1e-9);
        }
    }

    fn exact_phi_plus_pdm() -> PartialDensityMatrix {
        build_partial_dm_phi_plus(&PhiPlusMeasurements {
            mu_tilde: 1.0,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            p0: 0.5,
            sigma_p0: 0.0,
            p1: 0.0,
            p2: 0.5,
            sigma_p2: 0.0,
            m_ee: 1.0,
            sigma_m_ee: 0.0,
            m_ll: 1.0,
            sigma_m_ll: 0.0,
            c2_el: 1.0,
            sigma_c2_el: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn ideal_phi_plus_reconstruction() {
        let pdm = exact_phi_plus_pdm();
        let c = pdm.central();
        assert_abs_diff_eq!(c[0][0].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c[3][3].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c[0][3].re, 0.5, epsilon = 1e-12);
        assert!(pdm.clamps.is_empty());
    }

    #[test]
    fn zero_coherence_reconstruction_is_diagonal() {
        let pdm = build_partial_dm_phi_plus(&PhiPlusMeasurements {
            mu_tilde: 1.0,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            p0: 0.5,
            sigma_p0: 0.0,
            p1: 0.0,
            p2: 0.5,
            sigma_p2: 0.0,
            m_ee: 1.0,
            sigma_m_ee: 0.0,
            m_ll: 1.0,
            sigma_m_ll: 0.0,
            c2_el: 0.0,
            sigma_c2_el: 0.0,
        })
        .unwrap();
        let c = pdm.central();
        assert_eq!(c[0][3].re, 0.0);
    }

    #[test]
    fn fully_measured_ideal_bell_state_sampling() {
        let pdm = exact_phi_plus_pdm();
        let est = sample_concurrence(&pdm, 200, 7).unwrap();
        assert_abs_diff_eq!(est.mean, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.std, 0.0, epsilon = 1e-7);
        assert_eq!(est.n_accepted, 200);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let pdm = build_partial_dm_phi_plus(&PhiPlusMeasurements {
            mu_tilde: 0.975,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            p0: 0.47,
            sigma_p0: 0.01,
            p1: 0.05,
            p2: 0.45,
            sigma_p2: 0.03,
            m_ee: 0.76,
            sigma_m_ee: 0.02,
            m_ll: 0.76,
            sigma_m_ll: 0.02,
            c2_el: 0.55,
            sigma_c2_el: 0.03,
        })
        .unwrap();
        let a = sample_concurrence(&pdm, 500, 1234).unwrap();
        let b = sample_concurrence(&pdm, 500, 1234).unwrap();
        assert_eq!(a, b);
        let c = sample_concurrence(&pdm, 500, 99).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn free_parameters_only_narrow_spread() {
        // σ = 0 on all measured elements: the residual spread comes from the
        // free parameters alone and stays small
        let pdm = build_partial_dm_phi_plus(&PhiPlusMeasurements {
            mu_tilde: 0.975,
            mu_bar_e: 0.5,
            mu_bar_l: 0.5,
            p0: 0.47,
            sigma_p0: 0.0,
            p1: 0.05,
            p2: 0.45,
            sigma_p2: 0.0,
            m_ee: 0.76,
            sigma_m_ee: 0.0,
            m_ll: 0.76,
            sigma_m_ll: 0.0,
            c2_el: 0.55,
            sigma_c2_el: 0.0,
        })
        .unwrap();
        let noiseless = sample_concurrence(&pdm, 2000, 5).unwrap();
        assert!(noiseless.std < 0.03, "free-parameter spread {} should be small", noiseless.std);
        assert!(noiseless.mean > 0.5 && noiseless.mean < 0.8, "mean = {}", noiseless.mean);
    }
}
