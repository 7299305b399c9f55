//! Time-resolved correlation quantities, detector imperfections, quadrant
//! reduction and the interference observables.
//!
//! The starting point is a [`SourceModel`]: the vacuum probability plus
//! one-photon amplitude components and factored two-photon components. Both
//! the single-pulse and two-pulse decompositions convert into it, and the
//! ideal Bell-state source is its t_p → 0 special case.

mod analysis;
mod maps;

pub use analysis::{
    c2_from_fit, fit_phase_quadratic, hom_g2, overlap_from_hom, quadrant_reduce, quadrant_reduce_exact,
    self_homodyne, QuadrantSummary, QuadrantValues, QuadraticFit, SelfHomodyne,
};
pub use maps::{
    apply_jitter, build_maps, map_from_binary, map_to_binary, map_to_csv, CorrelationMap, CorrelationMaps, MapKind,
};

use crate::dynamics::{single_pulse, two_pulse, Profile, TemporalWavefunctions, TwoPulseDecomposition};
use crate::error::Result;
use crate::types::{AtomParams, TimeGrid};

/// A photonic state at most two photons deep, described by its vacuum weight,
/// one-photon amplitude components and factored two-photon components.
///
/// One-photon components superpose coherently; a two-photon component
/// `(p, f_a, f_b)` is the symmetrized product state `f_a(t₁)f_b(t₂)` with
/// probability `p`.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub grid: TimeGrid,
    pub p0: f64,
    pub singles: Vec<(f64, Profile)>,
    pub pairs: Vec<(f64, Profile, Profile)>,
}

impl SourceModel {
    pub fn from_single_pulse(w: &TemporalWavefunctions) -> Self {
        let mut pairs = Vec::new();
        if w.p2 > 0.0 && !w.f1_noise.is_empty() {
            pairs.push((w.p2, w.f1_noise.clone(), w.f1.clone()));
        }
        SourceModel { grid: w.grid, p0: w.p0, singles: vec![(w.p1, w.f1.clone())], pairs }
    }

    pub fn from_two_pulse(d: &TwoPulseDecomposition) -> Self {
        let mut singles = Vec::new();
        if d.p10 > 0.0 {
            singles.push((d.p10, d.f_early.clone()));
        }
        if d.p01 > 0.0 {
            singles.push((d.p01, d.f_late.clone()));
        }
        let mut pairs = Vec::new();
        if d.p20 > 0.0 && !d.f_20.1.is_empty() {
            pairs.push((d.p20, d.f_20.0.clone(), d.f_20.1.clone()));
        }
        if d.p11 > 0.0 {
            pairs.push((d.p11, d.f_11.0.clone(), d.f_11.1.clone()));
        }
        SourceModel { grid: d.grid, p0: d.p0, singles, pairs }
    }

    /// The ideal two-pulse source: `α|00⟩ + β|11⟩` with exponential bins.
    pub fn ideal_two_pulse(atom: &AtomParams, dt: f64, grid: &TimeGrid) -> Result<Self> {
        Ok(Self::from_two_pulse(&two_pulse(atom, 0.0, 0.0, dt, grid)?))
    }

    /// The ideal single-photon source: one exponential wavepacket.
    pub fn ideal_single_photon(atom: &AtomParams, grid: &TimeGrid) -> Result<Self> {
        Ok(Self::from_single_pulse(&single_pulse(atom, 0.0, 0.0, grid)?))
    }

    /// Mean photon number μ = Σpᵢ + 2Σp_c.
    pub fn mu(&self) -> f64 {
        let ones: f64 = self.singles.iter().map(|(p, _)| p).sum();
        let twos: f64 = self.pairs.iter().map(|(p, _, _)| p).sum();
        ones + 2.0 * twos
    }
}
