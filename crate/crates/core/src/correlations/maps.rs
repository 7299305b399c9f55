//! Two-time correlation map construction, jitter convolution and exports.

use std::io::{Read, Write};

use ndarray::parallel::prelude::*;
use ndarray::{Array2, Axis};

use super::SourceModel;
use crate::error::{Error, Result};
use crate::types::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    IntensityProduct,
    G2,
    AbsG1Sq,
    AbsC2Sq,
    CMinus,
}

/// A real quantity on the (t₁, t₂) grid (same grid on both axes).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    pub grid: TimeGrid,
    pub kind: MapKind,
    pub values: Array2<f64>,
}

impl CorrelationMap {
    /// ∫∫ map dt₁ dt₂. Maps live on cell-centered grids, so the midpoint
    /// sum is second-order accurate and exactly invariant under the
    /// normalized jitter convolution.
    pub fn integral(&self) -> f64 {
        let h = self.grid.step;
        self.values.iter().sum::<f64>() * h * h
    }
}

/// The full deterministic map set for a source, plus its intensity profile.
#[derive(Debug, Clone)]
pub struct CorrelationMaps {
    pub grid: TimeGrid,
    pub nn: CorrelationMap,
    pub g2: CorrelationMap,
    pub g1sq: CorrelationMap,
    pub c2sq: CorrelationMap,
    pub c_minus: Option<CorrelationMap>,
    /// Intensity N(t) on the grid.
    pub intensity: Vec<f64>,
    pub mu: f64,
}

impl CorrelationMaps {
    /// Convolve every map with the detector response.
    pub fn with_jitter(&self, fwhm: f64) -> CorrelationMaps {
        CorrelationMaps {
            grid: apply_jitter(&self.nn, fwhm).grid,
            nn: apply_jitter(&self.nn, fwhm),
            g2: apply_jitter(&self.g2, fwhm),
            g1sq: apply_jitter(&self.g1sq, fwhm),
            c2sq: apply_jitter(&self.c2sq, fwhm),
            c_minus: self.c_minus.as_ref().map(|m| apply_jitter(m, fwhm)),
            intensity: self.intensity.clone(),
            mu: self.mu,
        }
    }
}

/// Assemble the deterministic correlation maps of a source.
///
/// Pure dephasing enters as the kernel e^{-γ*|t₁-t₂|} applied to the
/// one-photon density function and, factor-wise, to each separable
/// two-photon coherence — in both cases a pointwise multiplication of the
/// G⁽¹⁾ and C⁽²⁾ maps. Intensities (N, G⁽²⁾) are unaffected.
///
/// `with_c_minus` additionally builds the antisymmetric first-order-coherence
/// correction C⁻; it is negligible for short π pulses and off by default.
pub fn build_maps(source: &SourceModel, gamma_star: f64, with_c_minus: bool) -> CorrelationMaps {
    let grid = source.grid;
    let n = grid.n_points;
    let ts: Vec<f64> = grid.times().collect();

    // Sampled components.
    let singles: Vec<(f64, Vec<f64>)> =
        source.singles.iter().map(|(p, f)| (*p, f.sample(&grid))).collect();
    struct Pair {
        sqrt_p: f64,
        norm: f64,
        fa: Vec<f64>,
        fb: Vec<f64>,
        fa_prof: crate::dynamics::Profile,
        fb_prof: crate::dynamics::Profile,
    }
    let pairs: Vec<Pair> = source
        .pairs
        .iter()
        .map(|(p, fa, fb)| {
            let s = fa.inner(fb);
            Pair {
                sqrt_p: p.sqrt(),
                norm: 1.0 / (1.0 + s * s).sqrt(),
                fa: fa.sample(&grid),
                fb: fb.sample(&grid),
                fa_prof: fa.clone(),
                fb_prof: fb.clone(),
            }
        })
        .collect();

    // F1(t) = Σ √pᵢ fᵢ(t): the coherent one-photon amplitude.
    let mut f1_tot = vec![0.0f64; n];
    for (p, f) in &singles {
        let w = p.sqrt();
        for (o, v) in f1_tot.iter_mut().zip(f) {
            *o += w * v;
        }
    }

    // A2(t₁,t₂) = Σ_c √p_c N_c (f_a(t₁)f_b(t₂) + f_a(t₂)f_b(t₁)).
    let a2 = |i: usize, j: usize| -> f64 {
        pairs
            .iter()
            .map(|p| p.sqrt_p * p.norm * (p.fa[i] * p.fb[j] + p.fa[j] * p.fb[i]))
            .sum()
    };

    // G1 is a sum of rank-1 terms: the coherent one-photon outer product
    // plus pair contractions weighted by their partner overlaps.
    let overlap = |a: &crate::dynamics::Profile, b: &crate::dynamics::Profile| a.inner(b);
    struct G1Term<'v> {
        coef: f64,
        left: &'v [f64],
        right: &'v [f64],
    }
    let mut terms: Vec<G1Term> = Vec::new();
    terms.push(G1Term { coef: 1.0, left: &f1_tot, right: &f1_tot });
    for pc in &pairs {
        for pd in &pairs {
            let w = pc.sqrt_p * pd.sqrt_p * pc.norm * pd.norm;
            // x from pc at t₁, y from pd at t₂, weighted by ⟨partner_y|partner_x⟩
            terms.push(G1Term { coef: w * overlap(&pd.fb_prof, &pc.fb_prof), left: &pc.fa, right: &pd.fa });
            terms.push(G1Term { coef: w * overlap(&pd.fa_prof, &pc.fb_prof), left: &pc.fa, right: &pd.fb });
            terms.push(G1Term { coef: w * overlap(&pd.fb_prof, &pc.fa_prof), left: &pc.fb, right: &pd.fa });
            terms.push(G1Term { coef: w * overlap(&pd.fa_prof, &pc.fa_prof), left: &pc.fb, right: &pd.fb });
        }
    }
    let g1 = |i: usize, j: usize| -> f64 { terms.iter().map(|t| t.coef * t.left[i] * t.right[j]).sum() };

    let kernel = |i: usize, j: usize| (-gamma_star * (ts[i] - ts[j]).abs()).exp();

    let mut nn = Array2::zeros((n, n));
    let mut g2 = Array2::zeros((n, n));
    let mut g1sq = Array2::zeros((n, n));
    let mut c2sq = Array2::zeros((n, n));
    let sqrt_p0 = source.p0.max(0.0).sqrt();

    let intensity: Vec<f64> = (0..n).map(|i| g1(i, i)).collect();
    for i in 0..n {
        for j in 0..n {
            let a = a2(i, j);
            let k = kernel(i, j);
            nn[[i, j]] = intensity[i] * intensity[j];
            g2[[i, j]] = a * a;
            let g1ij = g1(i, j) * k;
            g1sq[[i, j]] = g1ij * g1ij;
            let c2 = sqrt_p0 * a * k;
            c2sq[[i, j]] = c2 * c2;
        }
    }

    let c_minus = with_c_minus.then(|| {
        // amp1(t) = ⟨a(t)⟩; rank-1 in the component amplitudes.
        let mut amp1 = vec![0.0f64; n];
        for (i, v) in amp1.iter_mut().enumerate() {
            *v = sqrt_p0 * f1_tot[i];
        }
        for pc in &pairs {
            let mut ov_b = 0.0;
            let mut ov_a = 0.0;
            for (p, f) in source.singles.iter() {
                ov_b += p.sqrt() * f.inner(&pc.fb_prof);
                ov_a += p.sqrt() * f.inner(&pc.fa_prof);
            }
            for i in 0..n {
                amp1[i] += pc.sqrt_p * pc.norm * (pc.fa[i] * ov_b + pc.fb[i] * ov_a);
            }
        }
        let mut cm = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                cm[[i, j]] = a2(i, j) * (f1_tot[i] * amp1[j] - amp1[i] * f1_tot[j]);
            }
        }
        CorrelationMap { grid, kind: MapKind::CMinus, values: cm }
    });

    let mu = riemann(&intensity, grid.step);
    CorrelationMaps {
        grid,
        nn: CorrelationMap { grid, kind: MapKind::IntensityProduct, values: nn },
        g2: CorrelationMap { grid, kind: MapKind::G2, values: g2 },
        g1sq: CorrelationMap { grid, kind: MapKind::AbsG1Sq, values: g1sq },
        c2sq: CorrelationMap { grid, kind: MapKind::AbsC2Sq, values: c2sq },
        c_minus,
        intensity,
        mu,
    }
}

pub(crate) fn riemann(values: &[f64], step: f64) -> f64 {
    values.iter().sum::<f64>() * step
}

/// Convolve a map with a separable Gaussian detector response of the given
/// FWHM along both time axes.
///
/// The output grid is padded by 4σ on each side so no mass leaves the
/// domain; the discrete kernel is normalized, making the total integral
/// exactly invariant. FWHM = 0 returns the map unchanged.
pub fn apply_jitter(map: &CorrelationMap, fwhm: f64) -> CorrelationMap {
    if fwhm <= 0.0 {
        return map.clone();
    }
    let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let step = map.grid.step;
    let radius = (4.0 * sigma / step).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * radius)
        .map(|k| {
            let x = (k as f64 - radius as f64) * step;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let ksum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= ksum);

    let n = map.grid.n_points;
    let padded = n + 2 * radius;

    // center the original in a padded array
    let mut work = Array2::zeros((padded, padded));
    work.slice_mut(ndarray::s![radius..radius + n, radius..radius + n]).assign(&map.values);

    // rows, then columns
    for _ in 0..2 {
        let mut out = Array2::zeros((padded, padded));
        out.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(r, mut row)| {
            let src = work.index_axis(Axis(0), r);
            for c in 0..padded {
                let mut acc = 0.0;
                let lo = c.saturating_sub(radius);
                let hi = (c + radius).min(padded - 1);
                for s in lo..=hi {
                    acc += src[s] * kernel[radius + s - c];
                }
                row[c] = acc;
            }
        });
        work = out.reversed_axes(); // second pass convolves the other axis
    }

    let grid = TimeGrid {
        start: map.grid.start - radius as f64 * step,
        step,
        n_points: padded,
    };
    CorrelationMap { grid, kind: map.kind, values: work }
}

/// CSV export: `t1,t2,value` rows.
pub fn map_to_csv<W: Write>(map: &CorrelationMap, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t1,t2,value")?;
    for i in 0..map.grid.n_points {
        let t1 = map.grid.time(i);
        for j in 0..map.grid.n_points {
            writeln!(out, "{t1},{},{}", map.grid.time(j), map.values[[i, j]])?;
        }
    }
    Ok(())
}

/// Compact binary grid export. Little-endian layout:
/// `n: u64, step: f64, start: f64`, then n·n row-major f64 values.
pub fn map_to_binary<W: Write>(map: &CorrelationMap, mut out: W) -> std::io::Result<()> {
    let n = map.grid.n_points as u64;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&map.grid.step.to_le_bytes())?;
    out.write_all(&map.grid.start.to_le_bytes())?;
    for v in map.values.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Inverse of [`map_to_binary`]. The kind is not stored in the layout, so
/// the caller supplies it.
pub fn map_from_binary<R: Read>(mut input: R, kind: MapKind) -> Result<CorrelationMap> {
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let step = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let start = f64::from_le_bytes(b8);
    let grid = TimeGrid::new(start, step, n).map_err(|_| Error::Parse("bad map header".into()))?;
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            input.read_exact(&mut b8)?;
            values[[i, j]] = f64::from_le_bytes(b8);
        }
    }
    Ok(CorrelationMap { grid, kind, values })
}
