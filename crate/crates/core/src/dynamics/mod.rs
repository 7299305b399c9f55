//! Finite-pulse emission physics.
//!
//! Closed-form wavefunctions and photon-number probabilities for one and two
//! square π pulses in the fast-pulse regime (t_p ≪ 1/γ), plus a discretized
//! collision-model evolution ([`collision`]) that serves as the independent
//! numerical oracle for everything here.

pub mod collision;
pub mod profile;

pub use collision::{collision_evolve, CollisionOptions, CollisionResult, InitialAtom};
pub use profile::{Profile, Segment, Shape};

use std::io::Write;

use crate::error::{Error, Result};
use crate::types::{AtomParams, TimeGrid};

/// Discretized one- and two-photon amplitudes after a single square pulse,
/// with the associated number-subspace probabilities.
///
/// The two-photon amplitude is kept factored, `f⁽²⁾(t₁,t₂) ≃ f_n(t₁)·f⁽¹⁾(t₂)`:
/// the noise photon emitted during the pulse followed by the main decay
/// photon.
#[derive(Debug, Clone)]
pub struct TemporalWavefunctions {
    pub grid: TimeGrid,
    /// Normalized one-photon amplitude f⁽¹⁾(t).
    pub f1: Profile,
    /// Normalized noise-photon amplitude f⁽¹⁾_n(t), supported on [0, t_p].
    pub f1_noise: Profile,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// ⟨f⁽¹⁾_n | f⁽¹⁾⟩ — the (small) overlap between noise and main photon.
    pub noise_overlap: f64,
}

/// Single-pulse emission in the fast-pulse regime.
///
/// The unnormalized one-photon amplitude is a drive-window product under the
/// pulse and an exponential after it; its squared norm is p₁. The noise
/// photon lives only under the pulse and its squared norm is p₂. p₀ absorbs
/// the remaining normalization.
pub fn single_pulse(atom: &AtomParams, rabi: f64, tp: f64, grid: &TimeGrid) -> Result<TemporalWavefunctions> {
    let gamma = atom.gamma;
    if tp < 0.0 {
        return Err(Error::validation("tp", format!("pulse width must be >= 0, got {tp}")));
    }
    if tp > 0.0 {
        if grid.step > tp / 8.0 {
            return Err(Error::validation(
                "grid_step",
                format!("grid step {} leaves fewer than 8 samples across the {tp} ps pulse", grid.step),
            ));
        }
        warn_if_not_pi(rabi, tp);
        if tp >= 1.0 / gamma {
            log::warn!("pulse width {tp} ps is not short compared to the lifetime {} ps", 1.0 / gamma);
        }
    }

    if tp == 0.0 {
        // Ideal π pulse: a pure exponential single photon.
        let f1 = Profile::new(vec![Segment {
            t0: 0.0,
            t1: f64::INFINITY,
            amp: gamma.sqrt(),
            shape: Shape::Exp { rate: gamma / 2.0 },
        }]);
        return Ok(TemporalWavefunctions {
            grid: *grid,
            f1,
            f1_noise: Profile::empty(),
            p0: 0.0,
            p1: 1.0,
            p2: 0.0,
            noise_overlap: 0.0,
        });
    }

    let u1 = unnormalized_f1(gamma, rabi, tp, 0.0);
    let p1 = u1.norm_sqr();

    // noise photon: √(p₁γ)·sin(Ωt/2)·csc(Ωt_p/2)·sin(Ω(t_p-t)/2) on [0, t_p]
    let csc = 1.0 / (rabi * tp / 2.0).sin();
    let un = Profile::new(vec![Segment {
        t0: 0.0,
        t1: tp,
        amp: (p1 * gamma).sqrt() * csc,
        shape: Shape::SinSin { omega: rabi, window: tp },
    }]);
    // p₂ normalizes f⁽²⁾ on its ordered domain t₁ ≤ t₂: the noise density at
    // t₁ weighted by the main photon's probability of arriving later.
    let noise_bare = un.scaled(1.0 / p1.sqrt());
    let p2 = profile::adaptive_simpson(
        &|t1| noise_bare.value(t1).powi(2) * u1.inner_on(&u1, t1, f64::INFINITY),
        0.0,
        tp,
        1e-12,
    );
    let p0 = 1.0 - p1 - p2;

    let f1 = u1.normalized();
    let f1_noise = un.normalized();
    let noise_overlap = f1_noise.inner(&f1);

    Ok(TemporalWavefunctions { grid: *grid, f1, f1_noise, p0, p1, p2, noise_overlap })
}

/// Unnormalized single-pulse one-photon amplitude for a pulse starting at
/// `start`: √γ·sin(Ωτ/2)cos(Ω(t_p-τ)/2)e^{-γt_p/4} under the pulse,
/// √γ·sin(Ωt_p/2)e^{-γ(2τ-t_p)/4} after it (τ measured from `start`).
fn unnormalized_f1(gamma: f64, rabi: f64, tp: f64, start: f64) -> Profile {
    let damp = (-gamma * tp / 4.0).exp();
    Profile::new(vec![
        Segment {
            t0: start,
            t1: start + tp,
            amp: gamma.sqrt() * damp,
            shape: Shape::SinCos { omega: rabi, window: tp },
        },
        Segment {
            t0: start + tp,
            t1: f64::INFINITY,
            amp: gamma.sqrt() * (rabi * tp / 2.0).sin() * damp,
            shape: Shape::Exp { rate: gamma / 2.0 },
        },
    ])
}

fn warn_if_not_pi(rabi: f64, tp: f64) {
    let area = rabi * tp;
    if (area - std::f64::consts::PI).abs() > 0.05 * std::f64::consts::PI {
        log::warn!("pulse area Ω·t_p = {area:.4} rad is not a π pulse; closed forms assume π pulses");
    }
}

/// Photon placement probabilities over the four orthogonal intervals of the
/// two-pulse sequence: ΔT₁ = (0,t_p), ΔT₂ = (t_p,Δt), ΔT₃ = (Δt,Δt+t_p),
/// ΔT₄ = (Δt+t_p,∞). Entries are labelled by the photon count per interval.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntervalProbs {
    pub p_0000: f64,
    pub p_1000: f64,
    pub p_0100: f64,
    pub p_0010: f64,
    pub p_0001: f64,
    pub p_1100: f64,
    pub p_1010: f64,
    pub p_0110: f64,
    pub p_1001: f64,
    pub p_0101: f64,
    pub p_0011: f64,
}

/// Two-pulse emission decomposed into early/late time bins with the
/// threshold fixed at T = Δt + t_p (just after the second pulse).
#[derive(Debug, Clone)]
pub struct TwoPulseDecomposition {
    pub grid: TimeGrid,
    pub atom: AtomParams,
    pub tp: f64,
    pub dt: f64,
    /// Bin threshold T = Δt + t_p.
    pub threshold: f64,
    pub intervals: IntervalProbs,
    pub p0: f64,
    pub p01: f64,
    pub p10: f64,
    pub p20: f64,
    pub p11: f64,
    /// 1 - (p₀+p₁+p₂): the basis truncation deficit, read as the three-photon
    /// probability.
    pub p3_estimate: f64,
    /// Early single-photon shape (also the early factor of f₁₁).
    pub f_early: Profile,
    /// Late single-photon shape, ∝ e^{-γ(t-T)/2} on (T,∞).
    pub f_late: Profile,
    /// Factored early-early pair: first photon between the pulses, second
    /// during the second pulse.
    pub f_20: (Profile, Profile),
    /// Factored early-late pair f₁₁(t₁,t₂) = f_e(t₁)·f_l(t₂).
    pub f_11: (Profile, Profile),
}

/// Two sequential π pulses separated by Δt (start to start).
///
/// Bin probabilities follow the short-pulse closed forms; the interval table
/// refines them by which drive window or gap hosted each emission. The
/// dominant paths: `p₀` = no emission before the second pulse flips the atom
/// back down; `p₁₁` = one decay photon per inter-pulse gap; `p₂₀` = an early
/// decay photon plus a second emitted during the second pulse; `p₁₀` =
/// emission during a pulse with the atom recovering before anything else.
pub fn two_pulse(atom: &AtomParams, rabi: f64, tp: f64, dt: f64, grid: &TimeGrid) -> Result<TwoPulseDecomposition> {
    let gamma = atom.gamma;
    if dt <= tp {
        return Err(Error::validation("dt", format!("overlapping pulses unsupported: need Δt > t_p, got Δt = {dt}, t_p = {tp}")));
    }
    if tp > 0.0 {
        if grid.step > tp / 8.0 {
            return Err(Error::validation(
                "grid_step",
                format!("grid step {} leaves fewer than 8 samples across the {tp} ps pulse", grid.step),
            ));
        }
        warn_if_not_pi(rabi, tp);
    }

    let threshold = dt + tp;
    let gtp = gamma * tp;
    let gdt = gamma * dt;
    let e_tp = (-gtp).exp();
    let e_dt = (-gdt).exp();

    let p0 = e_dt;
    let p01 = 0.0;
    let p10 = 0.25 * gtp * e_dt;
    let p20 = 0.375 * gtp * (e_tp - e_dt);
    let p11 = (0.375 * gtp + 1.0) * e_tp + (0.375 * gtp - 1.0) * e_dt;
    let p3_estimate = 1.0 - (p0 + p01 + p10 + p20 + p11);

    let intervals = IntervalProbs {
        p_0000: p0,
        p_1000: 0.125 * gtp * e_dt,
        p_0100: 0.0,
        p_0010: 0.125 * gtp * e_dt,
        p_0001: 0.0,
        p_1100: 0.0,
        p_1010: 0.0,
        p_0110: p20,
        p_1001: 0.375 * gtp * e_tp,
        p_0101: e_tp - e_dt,
        p_0011: 0.375 * gtp * e_dt,
    };

    // Early photon: the single-pulse shape truncated at T. Emission during
    // the second drive window carries O(γt_p) weight, so the single-pulse
    // tail stands in for it there.
    let f_early = if tp > 0.0 {
        unnormalized_f1(gamma, rabi, tp, 0.0).truncated(threshold).normalized()
    } else {
        Profile::new(vec![Segment {
            t0: 0.0,
            t1: threshold,
            amp: gamma.sqrt(),
            shape: Shape::Exp { rate: gamma / 2.0 },
        }])
        .normalized()
    };
    let f_late = Profile::new(vec![Segment {
        t0: threshold,
        t1: f64::INFINITY,
        amp: gamma.sqrt(),
        shape: Shape::Exp { rate: gamma / 2.0 },
    }]);

    // Early-early pair: decay photon in the gap, then a drive-window photon
    // released while the second pulse rotates the ground state back up.
    let f_mid = Profile::new(vec![Segment {
        t0: tp,
        t1: dt,
        amp: gamma.sqrt(),
        shape: Shape::Exp { rate: gamma / 2.0 },
    }])
    .normalized();
    let f_p2 = if tp > 0.0 {
        Profile::new(vec![Segment {
            t0: dt,
            t1: threshold,
            amp: 1.0,
            shape: Shape::SinCos { omega: rabi, window: tp },
        }])
        .normalized()
    } else {
        Profile::empty()
    };

    Ok(TwoPulseDecomposition {
        grid: *grid,
        atom: *atom,
        tp,
        dt,
        threshold,
        intervals,
        p0,
        p01,
        p10,
        p20,
        p11,
        p3_estimate,
        f_early: f_early.clone(),
        f_late: f_late.clone(),
        f_20: (f_mid, f_p2),
        f_11: (f_early, f_late),
    })
}

/// Fraction of two-photon coincidences pushed into the same time bin by the
/// combined blur of pulse width and detector jitter: (3γ/8)·√(t_p² + s²).
pub fn overlap_fraction(gamma: f64, tp: f64, jitter_fwhm: f64) -> f64 {
    if tp >= 1.0 / gamma || jitter_fwhm >= 1.0 / gamma {
        log::warn!("overlap estimate assumes t_p, s < 1/γ = {} ps", 1.0 / gamma);
    }
    0.375 * gamma * (tp * tp + jitter_fwhm * jitter_fwhm).sqrt()
}

/// Write a wavefunction as CSV: `t, re(f1), im(f1), |f1|^2`. Amplitudes are
/// rotating-frame real, so the imaginary column is zero.
pub fn wavefunction_to_csv<W: Write>(f1: &Profile, grid: &TimeGrid, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,re_f1,im_f1,abs2_f1")?;
    for t in grid.times() {
        let v = f1.value(t);
        writeln!(out, "{t},{v},0.0,{}", v * v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn atom() -> AtomParams {
        AtomParams::from_lifetime(136.0, 0.0).unwrap()
    }

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 1.0, 1500).unwrap()
    }

    #[test]
    fn short_pulse_limit_is_a_single_photon() {
        let tp = 0.136; // 1e-3 · T1
        let g = TimeGrid::new(0.0, tp / 10.0, 100).unwrap();
        let w = single_pulse(&atom(), std::f64::consts::PI / tp, tp, &g).unwrap();
        assert!((w.p1 - 1.0).abs() < 1e-3, "p1 = {}", w.p1);
        assert!(w.p2 < 1e-3, "p2 = {}", w.p2);
    }

    #[test]
    fn paper_pulse_probabilities() {
        // γ = 1/136, t_p = 20, Ω = π/20: p1 = e^{-γtp/2}(1 + 3γtp/8); p2 is
        // the ordered-domain norm of the noise×main product, frozen here
        // from an independent trapezoid quadrature of the same expressions.
        let tp = 20.0;
        let w = single_pulse(&atom(), std::f64::consts::PI / tp, tp, &grid()).unwrap();
        let gtp = 20.0f64 / 136.0;
        let expect_p1 = (-gtp / 2.0).exp() * (1.0 + 3.0 * gtp / 8.0);
        let expect_p2 = 0.017889451;
        assert_abs_diff_eq!(w.p1, expect_p1, epsilon = 1e-9);
        assert_abs_diff_eq!(w.p2, expect_p2, epsilon = 1e-7);
        assert_abs_diff_eq!(w.p0, 1.0 - expect_p1 - expect_p2, epsilon = 1e-7);
        // normalized amplitudes
        assert_abs_diff_eq!(w.f1.norm_sqr(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.f1_noise.norm_sqr(), 1.0, epsilon = 1e-10);
        // the noise photon barely overlaps the main one
        assert!(w.noise_overlap.abs() < 0.2, "overlap = {}", w.noise_overlap);
    }

    #[test]
    fn decay_tail_has_slope_minus_gamma() {
        let tp = 20.0;
        let w = single_pulse(&atom(), std::f64::consts::PI / tp, tp, &grid()).unwrap();
        // log-linear fit of |f1|² on t ∈ [tp, tp + 400]
        let ts: Vec<f64> = (0..=400).map(|i| tp + i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| (w.f1.value(t).powi(2)).ln()).collect();
        let n = ts.len() as f64;
        let tbar = ts.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let slope: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tbar) * (y - ybar)).sum::<f64>()
            / ts.iter().map(|t| (t - tbar).powi(2)).sum::<f64>();
        let gamma = atom().gamma;
        assert!((slope + gamma).abs() / gamma < 1e-3, "slope = {slope}, -γ = {}", -gamma);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = TimeGrid::new(0.0, 5.0, 300).unwrap(); // 4 samples across 20 ps
        assert!(single_pulse(&atom(), std::f64::consts::PI / 20.0, 20.0, &g).is_err());
    }

    #[test]
    fn ideal_two_pulse_at_half_life() {
        let dt = 136.0 * std::f64::consts::LN_2;
        let d = two_pulse(&atom(), 0.0, 0.0, dt, &grid()).unwrap();
        assert_abs_diff_eq!(d.p0, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(d.p11, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(d.p10, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p20, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p3_estimate, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn paper_two_pulse_values() {
        // direct evaluation of the closed forms at γ=1/136, tp=20, Δt=98
        let d = two_pulse(&atom(), std::f64::consts::PI / 20.0, 20.0, 98.0, &grid()).unwrap();
        let gtp = 20.0f64 / 136.0;
        let (e_tp, e_dt) = ((-gtp).exp(), (-98.0f64 / 136.0).exp());
        assert_abs_diff_eq!(d.p0, e_dt, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p10, gtp / 4.0 * e_dt, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p20, 3.0 * gtp / 8.0 * (e_tp - e_dt), epsilon = 1e-12);
        assert_abs_diff_eq!(d.p11, (3.0 * gtp / 8.0 + 1.0) * e_tp + (3.0 * gtp / 8.0 - 1.0) * e_dt, epsilon = 1e-12);
        // interval table is consistent with the bin sums
        let iv = d.intervals;
        assert_abs_diff_eq!(iv.p_1000 + iv.p_0100 + iv.p_0010, d.p10, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.p_1100 + iv.p_1010 + iv.p_0110, d.p20, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.p_1001 + iv.p_0101 + iv.p_0011, d.p11, epsilon = 1e-12);
        assert!(d.p3_estimate > 0.0 && d.p3_estimate < 0.05, "p3 = {}", d.p3_estimate);
    }

    #[test]
    fn overlap_ratio_approaches_linear_pulse_width_law() {
        // p20/p2 → 3γtp/8 as Δt → ∞, to leading order in γt_p: the slope in
        // t_p converges to 3γ/8 as pulses shorten, and at t_p = 20 ps the
        // dressing 1/(1 + 3γtp/4) accounts for the entire residual.
        let fine = TimeGrid::new(0.05, 0.1, 64).unwrap();
        let d = two_pulse(&atom(), std::f64::consts::PI, 1.0, 3000.0, &fine).unwrap();
        let ratio = d.p20 / (d.p20 + d.p11);
        let expect = 3.0 * (1.0 / 136.0) / 8.0;
        assert!((ratio - expect).abs() / expect < 0.01, "tp = 1: ratio {ratio} vs {expect}");
        for tp in [2.0, 20.0] {
            let g = if tp < 8.0 { fine } else { grid() };
            let d = two_pulse(&atom(), std::f64::consts::PI / tp, tp, 3000.0, &g).unwrap();
            let ratio = d.p20 / (d.p20 + d.p11);
            let expect = 3.0 * (tp / 136.0) / 8.0;
            let dressed = expect / (1.0 + 3.0 * (tp / 136.0) / 4.0);
            assert!((ratio - dressed).abs() / dressed < 1e-6, "tp = {tp}: ratio {ratio} vs dressed {dressed}");
        }
    }

    #[test]
    fn overlapping_pulses_rejected() {
        assert!(two_pulse(&atom(), std::f64::consts::PI / 20.0, 20.0, 15.0, &grid()).is_err());
    }

    #[test]
    fn late_photon_is_exponential() {
        let d = two_pulse(&atom(), std::f64::consts::PI / 20.0, 20.0, 98.0, &grid()).unwrap();
        let t0 = d.threshold;
        let gamma = atom().gamma;
        let v0 = d.f_late.value(t0 + 1.0);
        let v1 = d.f_late.value(t0 + 101.0);
        assert_abs_diff_eq!((v1 / v0).ln(), -gamma / 2.0 * 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.f_late.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_fraction_paper_values() {
        let gamma = 1.0 / 136.0;
        assert!((overlap_fraction(gamma, 20.0, 50.0) - 0.15).abs() < 0.005);
        assert!((overlap_fraction(gamma, 20.0, 0.0) - 0.055).abs() < 0.001);
        assert_eq!(overlap_fraction(gamma, 0.0, 0.0), 0.0);
    }
}
