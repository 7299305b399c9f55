//! Quadrant reduction and interference observables.

use super::maps::{CorrelationMap, CorrelationMaps};
use super::SourceModel;
use crate::dynamics::Profile;
use crate::error::{Error, Result};

/// One correlation quantity resolved by time-bin quadrant. `None` marks a
/// quadrant whose intensity vanishes, where the normalized value is
/// undefined (not zero).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrantValues {
    pub ee: Option<f64>,
    pub el: Option<f64>,
    pub le: Option<f64>,
    pub ll: Option<f64>,
}

impl QuadrantValues {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        match (a, b) {
            (0, 0) => self.ee,
            (0, 1) => self.el,
            (1, 0) => self.le,
            _ => self.ll,
        }
    }
}

/// Time-bin quadrant analysis of a correlation map set at threshold T.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantSummary {
    pub threshold: f64,
    pub mu_e: f64,
    pub mu_l: f64,
    pub mu: f64,
    pub g2: QuadrantValues,
    pub m: QuadrantValues,
    pub c2: QuadrantValues,
    pub c_minus_el: Option<f64>,
    pub g2_total: f64,
    pub m_total: f64,
    pub c2_total: f64,
    /// Integrated squared first-order coherence; only available when the
    /// component amplitudes are at hand (exact path).
    pub c1: Option<f64>,
}

impl QuadrantSummary {
    pub fn mu_bar_e(&self) -> f64 {
        self.mu_e / self.mu
    }

    pub fn mu_bar_l(&self) -> f64 {
        self.mu_l / self.mu
    }
}

/// Quadrant reduction of sampled maps (works for deterministic maps, with or
/// without jitter, and for maps histogrammed from time tags).
///
/// Cells straddling the threshold contribute fractionally to each side, so
/// sweeping T moves the split continuously and the four quadrants always sum
/// to the full integral.
pub fn quadrant_reduce(maps: &CorrelationMaps, threshold: f64) -> Result<QuadrantSummary> {
    let grid = maps.nn.grid;
    if threshold <= grid.start || threshold >= grid.end() {
        return Err(Error::validation("threshold", format!("T = {threshold} must lie strictly inside the grid")));
    }

    let n = grid.n_points;
    let h = grid.step;
    // midpoint weight (cell-centered grids) and early-side fraction of each cell
    let weights: Vec<f64> = vec![h; n];
    let early: Vec<f64> = (0..n)
        .map(|i| ((threshold - (grid.time(i) - h / 2.0)) / h).clamp(0.0, 1.0))
        .collect();

    let quad_sums = |map: &CorrelationMap| -> [[f64; 2]; 2] {
        let mut s = [[0.0f64; 2]; 2];
        for i in 0..n {
            let (wi, ei) = (weights[i], early[i]);
            for j in 0..n {
                let v = map.values[[i, j]] * wi * weights[j];
                let ej = early[j];
                s[0][0] += v * ei * ej;
                s[0][1] += v * ei * (1.0 - ej);
                s[1][0] += v * (1.0 - ei) * ej;
                s[1][1] += v * (1.0 - ei) * (1.0 - ej);
            }
        }
        s
    };

    let s_nn = quad_sums(&maps.nn);
    let s_g2 = quad_sums(&maps.g2);
    let s_m = quad_sums(&maps.g1sq);
    let s_c2 = quad_sums(&maps.c2sq);
    let s_cm = maps.c_minus.as_ref().map(quad_sums);

    let mu_e = s_nn[0][0].max(0.0).sqrt();
    let mu_l = s_nn[1][1].max(0.0).sqrt();
    let mu = mu_e + mu_l;
    if mu <= 0.0 {
        return Err(Error::Numerics("map has no intensity".into()));
    }

    let nn_total: f64 = s_nn.iter().flatten().sum();
    let normalize = |s: [[f64; 2]; 2]| -> (QuadrantValues, f64) {
        let pick = |a: usize, b: usize| -> Option<f64> {
            (s_nn[a][b] > 1e-12 * nn_total).then(|| s[a][b] / s_nn[a][b])
        };
        let total: f64 = s.iter().flatten().sum::<f64>() / nn_total;
        (QuadrantValues { ee: pick(0, 0), el: pick(0, 1), le: pick(1, 0), ll: pick(1, 1) }, total)
    };

    let (g2, g2_total) = normalize(s_g2);
    let (m, m_total) = normalize(s_m);
    let (c2, c2_total) = normalize(s_c2);
    let c_minus_el = s_cm.map(|s| if s_nn[0][1] > 0.0 { s[0][1] / s_nn[0][1] } else { 0.0 });

    Ok(QuadrantSummary {
        threshold,
        mu_e,
        mu_l,
        mu,
        g2,
        m,
        c2,
        c_minus_el,
        g2_total,
        m_total,
        c2_total,
        c1: None,
    })
}

/// Exact quadrant reduction straight from the component amplitudes, without
/// sampling a grid. Valid for dephasing-free sources only; the dephasing
/// kernel couples the two times and needs the map path.
pub fn quadrant_reduce_exact(source: &SourceModel, threshold: f64) -> Result<QuadrantSummary> {
    if threshold <= 0.0 {
        return Err(Error::validation("threshold", format!("T = {threshold} must be positive")));
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Side {
        Early,
        Late,
        Full,
    }
    let part = |f: &Profile, g: &Profile, side: Side| -> f64 {
        match side {
            Side::Early => f.inner_on(g, f64::NEG_INFINITY, threshold),
            Side::Late => f.inner_on(g, threshold, f64::INFINITY),
            Side::Full => f.inner(g),
        }
    };

    // pair weights and the rank-1 decomposition of G1
    struct PairC<'s> {
        w: f64,
        fa: &'s Profile,
        fb: &'s Profile,
    }
    let pairs: Vec<PairC> = source
        .pairs
        .iter()
        .map(|(p, fa, fb)| {
            let s = fa.inner(fb);
            PairC { w: p.sqrt() / (1.0 + s * s).sqrt(), fa, fb }
        })
        .collect();

    let f1_tot = combine(source.singles.iter().map(|(p, f)| (p.sqrt(), f)));

    let mut g1_terms: Vec<(f64, &Profile, &Profile)> = vec![(1.0, &f1_tot, &f1_tot)];
    for c in &pairs {
        for d in &pairs {
            let w = c.w * d.w;
            g1_terms.push((w * part(d.fb, c.fb, Side::Full), c.fa, d.fa));
            g1_terms.push((w * part(d.fa, c.fb, Side::Full), c.fa, d.fb));
            g1_terms.push((w * part(d.fb, c.fa, Side::Full), c.fb, d.fa));
            g1_terms.push((w * part(d.fa, c.fa, Side::Full), c.fb, d.fb));
        }
    }

    let mu_side = |side: Side| -> f64 { g1_terms.iter().map(|(c, g, h)| c * part(g, h, side)).sum() };
    let mu_e = mu_side(Side::Early);
    let mu_l = mu_side(Side::Late);
    let mu = mu_e + mu_l;
    if mu <= 0.0 {
        return Err(Error::Numerics("source has no intensity".into()));
    }

    let m_num = |a: Side, b: Side| -> f64 {
        let mut total = 0.0;
        for (ca, ga, ha) in &g1_terms {
            for (cb, gb, hb) in &g1_terms {
                total += ca * cb * part(ga, gb, a) * part(ha, hb, b);
            }
        }
        total
    };
    let g2_num = |a: Side, b: Side| -> f64 {
        let mut total = 0.0;
        for c in &pairs {
            for d in &pairs {
                let w = c.w * d.w;
                total += w
                    * (part(c.fa, d.fa, a) * part(c.fb, d.fb, b)
                        + part(c.fa, d.fb, a) * part(c.fb, d.fa, b)
                        + part(c.fb, d.fa, a) * part(c.fa, d.fb, b)
                        + part(c.fb, d.fb, a) * part(c.fa, d.fa, b));
            }
        }
        total
    };

    // amp1(t) = ⟨a(t)⟩ for the c1 and C⁻ pieces
    let amp1 = {
        let mut parts: Vec<(f64, &Profile)> = vec![(source.p0.max(0.0).sqrt(), &f1_tot)];
        let mut owned: Vec<(f64, Profile)> = Vec::new();
        for c in &pairs {
            owned.push((c.w * part(&f1_tot, c.fb, Side::Full), c.fa.clone()));
            owned.push((c.w * part(&f1_tot, c.fa, Side::Full), c.fb.clone()));
        }
        for (w, p) in &owned {
            parts.push((*w, p));
        }
        combine(parts.into_iter())
    };
    let c1 = part(&amp1, &amp1, Side::Full) / mu;

    // C⁻ integrated over the el quadrant
    let mut cm_el = 0.0;
    for c in &pairs {
        cm_el += c.w
            * (part(c.fa, &f1_tot, Side::Early) * part(c.fb, &amp1, Side::Late)
                + part(c.fb, &f1_tot, Side::Early) * part(c.fa, &amp1, Side::Late)
                - part(c.fa, &amp1, Side::Early) * part(c.fb, &f1_tot, Side::Late)
                - part(c.fb, &amp1, Side::Early) * part(c.fa, &f1_tot, Side::Late));
    }

    let sides = [Side::Early, Side::Late];
    let mu_q = [mu_e, mu_l];
    let mut g2 = QuadrantValues::default();
    let mut m = QuadrantValues::default();
    let mut c2 = QuadrantValues::default();
    for (ia, a) in sides.into_iter().enumerate() {
        for (ib, b) in sides.into_iter().enumerate() {
            let denom = mu_q[ia] * mu_q[ib];
            let vals = (denom > 1e-14 * mu * mu).then(|| {
                let g2v = g2_num(a, b) / denom;
                let mv = m_num(a, b) / denom;
                let c2v = source.p0.max(0.0) * g2_num(a, b) / denom;
                (g2v, mv, c2v)
            });
            let assign = |q: &mut QuadrantValues, v: Option<f64>| match (ia, ib) {
                (0, 0) => q.ee = v,
                (0, 1) => q.el = v,
                (1, 0) => q.le = v,
                _ => q.ll = v,
            };
            assign(&mut g2, vals.map(|v| v.0));
            assign(&mut m, vals.map(|v| v.1));
            assign(&mut c2, vals.map(|v| v.2));
        }
    }

    let mu2 = mu * mu;
    Ok(QuadrantSummary {
        threshold,
        mu_e,
        mu_l,
        mu,
        g2,
        m,
        c2,
        c_minus_el: Some(cm_el / (mu_e * mu_l).max(1e-300)),
        g2_total: g2_num(Side::Full, Side::Full) / mu2,
        m_total: m_num(Side::Full, Side::Full) / mu2,
        c2_total: source.p0.max(0.0) * g2_num(Side::Full, Side::Full) / mu2,
        c1: Some(c1),
    })
}

fn combine<'p>(parts: impl Iterator<Item = (f64, &'p Profile)>) -> Profile {
    let mut segments = Vec::new();
    for (w, p) in parts {
        for seg in p.segments() {
            segments.push(crate::dynamics::Segment { amp: seg.amp * w, ..*seg });
        }
    }
    Profile::new(segments)
}

/// The phase-resolved Hong-Ou-Mandel correlation,
/// g²_HOM(φ) = (1 − M + g⁽²⁾ − c⁽²⁾cos 2φ + 2c⁻cos φ)/2.
pub fn hom_g2(phi: f64, m: f64, g2: f64, c2: f64, c_minus: f64) -> f64 {
    0.5 * (1.0 - m + g2 - c2 * (2.0 * phi).cos() + 2.0 * c_minus * phi.cos())
}

/// Self-homodyne observables at interferometer phase φ for integrated
/// first-order coherence c¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfHomodyne {
    /// I_SH = c¹·cos φ, the normalized detector-rate imbalance.
    pub i_sh: f64,
    /// Detector rates relative to μ: μ± = μ(1 ± c¹cos φ).
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// The uncorrelated-counts normalization factor (1 − I_SH²); using it as
    /// μ² underestimates the true value by I_SH².
    pub normalization_factor: f64,
    /// Residual bias after phase averaging, (c¹)²/2.
    pub phase_averaged_bias: f64,
}

pub fn self_homodyne(c1: f64, phi: f64) -> Result<SelfHomodyne> {
    if !(0.0..=1.0).contains(&c1) {
        return Err(Error::validation("c1", format!("must lie in [0,1], got {c1}")));
    }
    let i_sh = c1 * phi.cos();
    Ok(SelfHomodyne {
        i_sh,
        mu_plus: 1.0 + i_sh,
        mu_minus: 1.0 - i_sh,
        normalization_factor: 1.0 - i_sh * i_sh,
        phase_averaged_bias: c1 * c1 / 2.0,
    })
}

/// Least-squares fit of the quadratic phase signature
/// g²_HOM = offset − slope·I_SH².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub offset: f64,
    pub slope: f64,
    pub offset_se: f64,
    pub slope_se: f64,
    /// Standard error of the regression (zero when the fit is exact).
    pub residual_se: f64,
}

pub fn fit_phase_quadratic(points: &[(f64, f64)]) -> Result<QuadraticFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::validation("points", format!("need at least 2 points, got {n}")));
    }
    let xs: Vec<f64> = points.iter().map(|(i, _)| i * i).collect();
    let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-14 {
        return Err(Error::validation("points", "all I_SH magnitudes are equal; the design is rank-deficient"));
    }
    let nf = n as f64;
    let xbar = xs.iter().sum::<f64>() / nf;
    let ybar = points.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, (_, y))| (x - xbar) * (y - ybar)).sum();
    let b = sxy / sxx;
    let a = ybar - b * xbar;
    // fitted model: y = a + b·x with x = I², reported as offset − slope·I²
    let rss: f64 = xs.iter().zip(points).map(|(x, (_, y))| (y - (a + b * x)).powi(2)).sum();
    let dof = (n as i64 - 2).max(0) as f64;
    let s2 = if dof > 0.0 { rss / dof } else { 0.0 };
    Ok(QuadraticFit {
        offset: a,
        slope: -b,
        offset_se: (s2 * (1.0 / nf + xbar * xbar / sxx)).sqrt(),
        slope_se: (s2 / sxx).sqrt(),
        residual_se: s2.sqrt(),
    })
}

/// Recover the second-order coherence amplitude from the quadratic fit:
/// g²_HOM(φ) = const − (c²/c1²)·I_SH², so c² = slope·c1².
pub fn c2_from_fit(fit: &QuadraticFit, c1: f64) -> f64 {
    fit.slope * c1 * c1
}

/// Mean wavepacket overlap from phase-averaged HOM data:
/// M = 1 − 2g²_HOM + g², M_s = M/(1 − g²). The source-level value is
/// undefined for g² ≥ 1.
pub fn overlap_from_hom(g2_hom_phase_averaged: f64, g2: f64) -> (f64, Option<f64>) {
    let m = 1.0 - 2.0 * g2_hom_phase_averaged + g2;
    let ms = (g2 < 1.0).then(|| m / (1.0 - g2));
    (m, ms)
}
