//! Independent brute-force oracles for the state-generation module: a dense
//! vector iteration of the two-term recursion and a dense-reshape SVD for
//! the Schmidt spectrum. Neither shares code with the sparse implementation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use seqphoton::mps;
use seqphoton::types::{is_valid_occupation, AtomParams, PhotonicState, PulseSequence};

fn atom() -> AtomParams {
    AtomParams::from_lifetime(136.0, 0.0).unwrap()
}

/// Dense oracle: iterate ψ_N = α_N·|00⟩⊗ψ_{N-2} + β_N·|1⟩⊗ψ_{N-1} on full
/// 2^N amplitude vectors, bitstrings chronological (first bin = highest bit).
fn dense_recursion(gamma: f64, separations: &[f64]) -> Vec<f64> {
    let n = separations.len() + 1;
    let mut psi_prev: Vec<f64> = vec![1.0]; // ψ₀ on 0 bins
    let mut psi: Vec<f64> = vec![0.0, 1.0]; // ψ₁ = |1⟩
    for m in 2..=n {
        let dt = separations[m - 2];
        let alpha = (-gamma * dt / 2.0).exp();
        let beta = (1.0 - alpha * alpha).sqrt();
        let dim = 1 << m;
        let mut next = vec![0.0; dim];
        // β·|1⟩⊗ψ_{m-1}: prefix bit 1
        for (idx, amp) in psi.iter().enumerate() {
            next[(1 << (m - 1)) | idx] += beta * amp;
        }
        // α·|00⟩⊗ψ_{m-2}: two prefix zeros
        for (idx, amp) in psi_prev.iter().enumerate() {
            next[idx] += alpha * amp;
        }
        psi_prev = std::mem::take(&mut psi);
        psi = next;
    }
    if n == 1 {
        return vec![0.0, 1.0];
    }
    psi
}

fn bits_to_index(bits: &str) -> usize {
    bits.bytes().fold(0usize, |acc, b| (acc << 1) | usize::from(b == b'1'))
}

#[test]
fn build_state_matches_dense_recursion() {
    let seps = [98.0, 54.0, 130.0, 77.0, 201.0, 44.0, 91.0, 160.0, 58.0, 120.0, 85.0];
    for n in 1..=12usize {
        let separations = seps[..n - 1].to_vec();
        let seq = PulseSequence::ideal(separations.clone()).unwrap();
        let state = mps::build_state(&atom(), &seq).unwrap();
        let dense = dense_recursion(atom().gamma, &separations);
        // every dense amplitude matches the sparse map, zero or not
        for (idx, amp) in dense.iter().enumerate() {
            let bits: String =
                (0..n).map(|b| if idx >> (n - 1 - b) & 1 == 1 { '1' } else { '0' }).collect();
            let sparse = state.amplitude(&bits).re;
            assert!(
                (sparse - amp).abs() < 1e-12,
                "N = {n}, bits {bits}: sparse {sparse} vs dense {amp}"
            );
        }
    }
}

#[test]
fn term_counts_match_enumeration_up_to_20() {
    let mut rng_sep = 63.0;
    for n in 1..=20usize {
        let separations: Vec<f64> = (0..n - 1)
            .map(|_| {
                rng_sep = (rng_sep * 1.37 + 17.0) % 180.0 + 20.0;
                rng_sep
            })
            .collect();
        let seq = PulseSequence::ideal(separations).unwrap();
        let state = mps::build_state(&atom(), &seq).unwrap();
        let enumerated = (0u64..1 << n)
            .filter(|mask| {
                let bits: String =
                    (0..n).map(|b| if mask >> (n - 1 - b) & 1 == 1 { '1' } else { '0' }).collect();
                is_valid_occupation(&bits)
            })
            .count() as u64;
        assert_eq!(state.n_terms() as u64, mps::count_terms(n), "N = {n}");
        assert_eq!(enumerated, mps::count_terms(n), "N = {n}");
    }
}

/// Dense-reshape SVD oracle for the Schmidt coefficients.
fn dense_schmidt(state: &PhotonicState, cut: usize) -> Vec<f64> {
    let n = state.n_bins();
    let (rows, cols) = (1 << cut, 1 << (n - cut));
    let mut m = DMatrix::<f64>::zeros(rows, cols);
    for (bits, amp) in state.terms() {
        let (l, r) = bits.split_at(cut);
        m[(bits_to_index(l), bits_to_index(r))] = amp.re;
    }
    let svd = m.svd(false, false);
    let mut vals: Vec<f64> = svd.singular_values.iter().copied().filter(|v| *v > 1e-9).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

#[test]
fn schmidt_matches_dense_svd() {
    // the golden three-pulse state across its single nontrivial pair of cuts
    let sched = mps::golden_schedule(3, 136.0).unwrap();
    let state = mps::build_state(&atom(), &sched.to_sequence()).unwrap();
    for cut in 1..3 {
        let fast = mps::bipartition_amplitudes(&state, cut).unwrap();
        let dense = dense_schmidt(&state, cut);
        assert_eq!(fast.len(), dense.len(), "cut {cut}");
        for (a, b) in fast.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12, "cut {cut}: {a} vs {b}");
        }
    }
    // wider states, every cut, rank never above 2
    for n in 4..=10usize {
        let separations: Vec<f64> = (0..n - 1).map(|k| 40.0 + 23.0 * k as f64).collect();
        let seq = PulseSequence::ideal(separations).unwrap();
        let state = mps::build_state(&atom(), &seq).unwrap();
        for cut in 1..n {
            let fast = mps::bipartition_amplitudes(&state, cut).unwrap();
            let dense = dense_schmidt(&state, cut);
            assert!(fast.len() <= 2, "bond dimension exceeded at N = {n}, cut {cut}");
            assert_eq!(fast.len(), dense.len());
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-10, "N = {n} cut {cut}: {a} vs {b}");
            }
            let total: f64 = fast.iter().map(|c| c * c).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_term_count_is_fibonacci(n in 1usize..=14, seed in 1u64..5000) {
        let separations: Vec<f64> = (0..n - 1)
            .map(|k| 20.0 + ((seed.wrapping_mul(2654435761).wrapping_add(k as u64 * 97)) % 2000) as f64 / 10.0)
            .collect();
        let seq = PulseSequence::ideal(separations).unwrap();
        let state = mps::build_state(&atom(), &seq).unwrap();
        prop_assert_eq!(state.n_terms() as u64, mps::count_terms(n));
        prop_assert!(state.is_normalized(1e-12));
        for (bits, amp) in state.terms() {
            prop_assert!(is_valid_occupation(bits));
            prop_assert!(amp.re > 0.0 && amp.im == 0.0);
        }
    }

    #[test]
    fn prop_normalize_is_idempotent_and_phase_preserving(
        re in proptest::collection::vec(-3.0f64..3.0, 1..4),
        im in proptest::collection::vec(-3.0f64..3.0, 1..4),
    ) {
        let patterns = ["1", "001", "100", "111"];
        let mut amps = BTreeMap::new();
        let mut total = 0.0;
        for (k, (r, i)) in re.iter().zip(&im).enumerate() {
            let bits = patterns[k % patterns.len()];
            if bits.len() == 3 {
                amps.insert(bits.to_string(), C64::new(*r, *i));
                total += r * r + i * i;
            }
        }
        prop_assume!(total > 1e-9);
        let state = PhotonicState::new(3, amps).unwrap();
        let normed = state.normalize().unwrap();
        prop_assert!(normed.is_normalized(1e-12));
        let again = normed.normalize().unwrap();
        for (bits, amp) in normed.terms() {
            prop_assert!((again.amplitude(bits) - amp).norm() < 1e-12);
            // relative phase against the unnormalized original
            let orig = state.amplitude(bits);
            prop_assert!((orig.arg() - amp.arg()).abs() < 1e-9);
        }
    }

    #[test]
    fn prop_config_round_trip(
        t1 in 10.0f64..500.0,
        tp in 0.0f64..40.0,
        n_sep in 0usize..4,
        seed in 0u64..1000,
    ) {
        let dt: Vec<f64> = (0..n_sep).map(|k| 30.0 + (seed as f64 * 7.3 + k as f64 * 13.1) % 150.0).collect();
        let doc = format!(
            "T1 = {t1}\ntp = {tp}\ndt = {dt:?}\ngamma_star = 0.001\ngrid_step = 0.5\njitter_fwhm = 25.0\nseed = {seed}\n",
        );
        let (a1, s1, o1) = seqphoton::config::parse_config(&doc).unwrap();
        let round = seqphoton::config::serialize_config(&a1, &s1, &o1);
        let (a2, s2, o2) = seqphoton::config::parse_config(&round).unwrap();
        prop_assert_eq!(a1, a2);
        prop_assert_eq!(s1, s2);
        prop_assert_eq!(o1, o2);
    }
}
