//! Monte Carlo detector click streams and histogram reconstruction.
//!
//! Source models emit per-pulse photon patterns sampled from their
//! number-subspace probabilities, with emission times drawn by inverse CDF
//! from the model wavepacket intensities. Clicks pass through detector loss,
//! Gaussian timing jitter and the configured topology:
//!
//! - `hbt3`: the cascaded 1:3 / 1:1 splitter tree feeding three detectors
//!   used for g⁽²⁾/g⁽³⁾. Photons route independently — interference at the
//!   splitters is negligible for temporally separated photons.
//! - `mzi`: the path-unbalanced interferometer. Per-pulse outcomes are drawn
//!   from the analytic output statistics of the deterministic correlation
//!   maps at the current (slowly drifting) phase, so the Monte Carlo adds
//!   only shot noise on top of the formula being validated.
//!
//! Histogramming mirrors the experimental pipeline: coincidences binned at
//! the tagger resolution, grouped into rep-period peaks, and the zero-delay
//! peak normalized by the mean of the side peaks.

pub mod format;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::correlations::{build_maps, quadrant_reduce_exact, CorrelationMap, CorrelationMaps, MapKind, SourceModel};
use crate::dynamics::{Profile, TwoPulseDecomposition};
use crate::error::{Error, Result};
use crate::types::{AtomParams, PhotonicState, PulseSequence, TimeGrid};

/// Detector and acquisition settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    /// Per-detector quantum efficiency.
    pub efficiency: Vec<f64>,
    /// Gaussian timing jitter FWHM (ps).
    pub jitter_fwhm: f64,
    /// Histogram bin width (ps).
    pub bin_width: f64,
    /// Laser repetition period (ps).
    pub rep_period: f64,
    pub n_pulses: u64,
    pub seed: u64,
    /// Interferometer phase drift (rad per second of wall-clock).
    pub phase_drift: f64,
    /// Acquisition window over which the phase counts as constant (s).
    pub window_s: f64,
    /// Flat background click probability per detector per pulse period.
    pub background: f64,
    /// Span of the intra-pulse correlation map (ps).
    pub map_span: f64,
}

impl DetectionConfig {
    pub fn new(n_pulses: u64, seed: u64) -> Self {
        DetectionConfig {
            efficiency: vec![1.0; 3],
            jitter_fwhm: 0.0,
            bin_width: 8.0,
            rep_period: 12_300.0,
            n_pulses,
            seed,
            phase_drift: std::f64::consts::PI / 5.0,
            window_s: 0.1,
            background: 0.0,
            map_span: 2048.0,
        }
    }

    pub fn with_efficiency(mut self, eta: f64) -> Self {
        self.efficiency = vec![eta; self.efficiency.len()];
        self
    }

    pub fn with_jitter(mut self, fwhm: f64) -> Self {
        self.jitter_fwhm = fwhm;
        self
    }

    fn validate(&self, n_detectors: usize) -> Result<()> {
        if self.efficiency.len() < n_detectors {
            return Err(Error::validation("efficiency", format!("need {n_detectors} detector efficiencies")));
        }
        for (i, eta) in self.efficiency.iter().enumerate() {
            if !(0.0..=1.0).contains(eta) {
                return Err(Error::validation("efficiency", format!("detector {i}: efficiency {eta} outside [0,1]")));
            }
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::validation("bin_width", "must be > 0"));
        }
        if !(self.rep_period > 0.0) {
            return Err(Error::validation("rep_period", "must be > 0"));
        }
        Ok(())
    }
}

/// Time-sorted detector click records (detector id, absolute tag in ps).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    pub n_detectors: u8,
    pub resolution_ps: u32,
    pub records: Vec<(u8, u64)>,
}

impl EventStream {
    pub fn span_ps(&self) -> u64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.1 - a.1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Hbt3,
    Mzi,
}

/// A per-pulse emission sampler plus the closed-form moments it implies.
pub trait EmissionModel {
    /// Append this pulse's emission times (ps, relative to the pulse clock).
    fn sample_emissions(&self, rng: &mut ChaCha12Rng, out: &mut Vec<f64>);
    /// Mean photon number per pulse.
    fn mu(&self) -> f64;
    /// ⟨n(n-1)⟩/μ² — the integrated g⁽²⁾(0) the stream should converge to.
    fn moment_g2(&self) -> f64;
    /// ⟨n(n-1)(n-2)⟩/μ³ — the integrated g⁽³⁾(0) target.
    fn moment_g3(&self) -> f64;
    /// Deterministic description for interference sampling, with the
    /// dephasing rate and integrated first-order coherence. Models that
    /// cannot drive the MZI return None.
    fn hom_inputs(&self) -> Option<(SourceModel, f64, f64)>;
}

/// Ideal short-pulse source: patterns drawn from a [`PhotonicState`], each
/// occupied bin emitting a truncated exponential wavepacket.
#[derive(Debug, Clone)]
pub struct IdealStateModel {
    cumulative: Vec<(f64, Vec<usize>)>,
    bin_starts: Vec<f64>,
    bin_spans: Vec<f64>, // infinite for the final bin
    gamma: f64,
    number_probs: Vec<f64>,
}

impl IdealStateModel {
    pub fn new(state: &PhotonicState, atom: &AtomParams, seq: &PulseSequence) -> Result<Self> {
        if state.n_bins() != seq.n_pulses() {
            return Err(Error::validation("state", "bin count must match the pulse count"));
        }
        if !seq.is_ideal() {
            return Err(Error::validation("tp", "ideal-state sampling requires zero-width pulses"));
        }
        let starts = seq.pulse_start_times();
        let mut spans: Vec<f64> = seq.chronological_gaps();
        spans.push(f64::INFINITY);

        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        let mut number_probs = vec![0.0; state.n_bins() + 1];
        for (bits, amp) in state.terms() {
            let p = amp.norm_sqr();
            acc += p;
            let occupied: Vec<usize> =
                bits.bytes().enumerate().filter(|(_, b)| *b == b'1').map(|(i, _)| i).collect();
            number_probs[occupied.len()] += p;
            cumulative.push((acc, occupied));
        }
        if (acc - 1.0).abs() > 1e-9 {
            return Err(Error::validation("state", format!("state is not normalized: Σ|amp|² = {acc}")));
        }
        Ok(IdealStateModel { cumulative, bin_starts: starts, bin_spans: spans, gamma: atom.gamma, number_probs })
    }

    fn factorial_moment(&self, k: u32) -> f64 {
        self.number_probs
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let mut f = 1.0;
                for j in 0..k {
                    f *= (n as f64 - j as f64).max(0.0);
                }
                f * p
            })
            .sum()
    }
}

impl EmissionModel for IdealStateModel {
    fn sample_emissions(&self, rng: &mut ChaCha12Rng, out: &mut Vec<f64>) {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|(acc, _)| *acc < u);
        let occupied = &self.cumulative[idx.min(self.cumulative.len() - 1)].1;
        for &bin in occupied {
            let span = self.bin_spans[bin];
            let v: f64 = rng.random();
            // inverse CDF of the (possibly truncated) exponential intensity
            let tau = if span.is_finite() {
                let w = 1.0 - (-self.gamma * span).exp();
                -(1.0 - v * w).ln() / self.gamma
            } else {
                -(1.0 - v).ln() / self.gamma
            };
            out.push(self.bin_starts[bin] + tau);
        }
    }

    fn mu(&self) -> f64 {
        self.factorial_moment(1)
    }

    fn moment_g2(&self) -> f64 {
        self.factorial_moment(2) / self.mu().powi(2)
    }

    fn moment_g3(&self) -> f64 {
        self.factorial_moment(3) / self.mu().powi(3)
    }

    fn hom_inputs(&self) -> Option<(SourceModel, f64, f64)> {
        // only the two-bin α|00⟩+β|11⟩ family feeds the interferometer
        if self.bin_starts.len() != 2 {
            return None;
        }
        let p11 = self.number_probs[2];
        let threshold = self.bin_starts[1];
        let grid = TimeGrid::default_for(
            &AtomParams { gamma: self.gamma, gamma_star: 0.0, omega0: 0.0 },
            &PulseSequence::ideal(vec![threshold]).ok()?,
            1.0,
        )
        .ok()?;
        let early = Profile::new(vec![crate::dynamics::Segment {
            t0: 0.0,
            t1: threshold,
            amp: self.gamma.sqrt(),
            shape: crate::dynamics::Shape::Exp { rate: self.gamma / 2.0 },
        }])
        .normalized();
        let late = Profile::new(vec![crate::dynamics::Segment {
            t0: threshold,
            t1: f64::INFINITY,
            amp: self.gamma.sqrt(),
            shape: crate::dynamics::Shape::Exp { rate: self.gamma / 2.0 },
        }]);
        let source = SourceModel {
            grid,
            p0: self.number_probs[0],
            singles: Vec::new(),
            pairs: vec![(p11, early, late)],
        };
        Some((source, 0.0, 0.0))
    }
}

/// Finite-pulse two-pulse source built from the closed-form decomposition.
#[derive(Debug, Clone)]
pub struct TwoPulseModel {
    patterns: Vec<(f64, PatternKind)>,
    early: CdfSampler,
    late: CdfSampler,
    mid: CdfSampler,
    p2_burst: Option<CdfSampler>,
    p: [f64; 4], // p0, p1, p2, p3
    source: SourceModel,
    gamma_star: f64,
    c1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PatternKind {
    Vacuum,
    Early,
    Late,
    PairEarly,
    PairSplit,
    Triple,
}

impl TwoPulseModel {
    pub fn new(decomp: &TwoPulseDecomposition, gamma_star: f64) -> Result<Self> {
        let span = decomp.threshold + 30.0 / decomp.atom.gamma;
        let early = CdfSampler::from_profile(&decomp.f_early, span)
            .ok_or_else(|| Error::Numerics("early profile has no mass".into()))?;
        let late = CdfSampler::from_profile(&decomp.f_late, span)
            .ok_or_else(|| Error::Numerics("late profile has no mass".into()))?;
        let mid = CdfSampler::from_profile(&decomp.f_20.0, span).unwrap_or_else(|| early.clone());
        let p2_burst = CdfSampler::from_profile(&decomp.f_20.1, span);

        let mut patterns = Vec::new();
        let mut acc = 0.0;
        for (p, kind) in [
            (decomp.p0, PatternKind::Vacuum),
            (decomp.p10, PatternKind::Early),
            (decomp.p01, PatternKind::Late),
            (decomp.p20, PatternKind::PairEarly),
            (decomp.p11, PatternKind::PairSplit),
            (decomp.p3_estimate.max(0.0), PatternKind::Triple),
        ] {
            if p > 0.0 {
                acc += p;
                patterns.push((acc, kind));
            }
        }
        // tolerate the small closed-form norm defect
        if (acc - 1.0).abs() > 0.05 {
            return Err(Error::Numerics(format!("pattern probabilities sum to {acc}")));
        }
        if let Some(last) = patterns.last_mut() {
            last.0 = last.0.max(1.0);
        }

        let source = SourceModel::from_two_pulse(decomp);
        let c1 = quadrant_reduce_exact(&source, decomp.threshold)?.c1.unwrap_or(0.0);
        let p1 = decomp.p10 + decomp.p01;
        let p2 = decomp.p20 + decomp.p11;
        Ok(TwoPulseModel {
            patterns,
            early,
            late,
            mid,
            p2_burst,
            p: [decomp.p0, p1, p2, decomp.p3_estimate.max(0.0)],
            source,
            gamma_star,
            c1,
        })
    }
}

impl EmissionModel for TwoPulseModel {
    fn sample_emissions(&self, rng: &mut ChaCha12Rng, out: &mut Vec<f64>) {
        let u: f64 = rng.random();
        let idx = self.patterns.partition_point(|(acc, _)| *acc < u);
        let kind = self.patterns[idx.min(self.patterns.len() - 1)].1;
        match kind {
            PatternKind::Vacuum => {}
            PatternKind::Early => out.push(self.early.sample(rng.random())),
            PatternKind::Late => out.push(self.late.sample(rng.random())),
            PatternKind::PairEarly => {
                out.push(self.mid.sample(rng.random()));
                if let Some(burst) = &self.p2_burst {
                    out.push(burst.sample(rng.random()));
                }
            }
            PatternKind::PairSplit => {
                out.push(self.early.sample(rng.random()));
                out.push(self.late.sample(rng.random()));
            }
            PatternKind::Triple => {
                out.push(self.mid.sample(rng.random()));
                if let Some(burst) = &self.p2_burst {
                    out.push(burst.sample(rng.random()));
                }
                out.push(self.late.sample(rng.random()));
            }
        }
    }

    fn mu(&self) -> f64 {
        self.p[1] + 2.0 * self.p[2] + 3.0 * self.p[3]
    }

    fn moment_g2(&self) -> f64 {
        (2.0 * self.p[2] + 6.0 * self.p[3]) / self.mu().powi(2)
    }

    fn moment_g3(&self) -> f64 {
        6.0 * self.p[3] / self.mu().powi(3)
    }

    fn hom_inputs(&self) -> Option<(SourceModel, f64, f64)> {
        Some((self.source.clone(), self.gamma_star, self.c1))
    }
}

/// Poissonian (coherent-state) reference source with an exponential
/// temporal profile.
#[derive(Debug, Clone)]
pub struct CoherentModel {
    pub mu: f64,
    pub gamma: f64,
}

impl EmissionModel for CoherentModel {
    fn sample_emissions(&self, rng: &mut ChaCha12Rng, out: &mut Vec<f64>) {
        let n = Poisson::new(self.mu).expect("mu > 0").sample(rng) as usize;
        for _ in 0..n {
            let v: f64 = rng.random();
            out.push(-(1.0 - v).ln() / self.gamma);
        }
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn moment_g2(&self) -> f64 {
        1.0
    }

    fn moment_g3(&self) -> f64 {
        1.0
    }

    fn hom_inputs(&self) -> Option<(SourceModel, f64, f64)> {
        None
    }
}

/// Inverse-CDF sampler over a profile's intensity.
#[derive(Debug, Clone)]
struct CdfSampler {
    ts: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfSampler {
    fn from_profile(p: &Profile, span: f64) -> Option<Self> {
        if p.is_empty() {
            return None;
        }
        let t0 = p.support_start();
        let t1 = p.support_end().min(span);
        let step = 0.05f64;
        let n = ((t1 - t0) / step).ceil() as usize + 1;
        let ts: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * step).collect();
        let mut cdf = vec![0.0f64; ts.len()];
        let mut acc = 0.0;
        for i in 1..ts.len() {
            let a = p.value(ts[i - 1]).powi(2);
            let b = p.value(ts[i]).powi(2);
            acc += 0.5 * (a + b) * step;
            cdf[i] = acc;
        }
        if acc <= 0.0 {
            return None;
        }
        cdf.iter_mut().for_each(|v| *v /= acc);
        Some(CdfSampler { ts, cdf })
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.ts[i - 1] + frac * (self.ts[i] - self.ts[i - 1])
    }
}

/// Generate a click stream for the requested topology. Deterministic for a
/// fixed (model, config) pair: identical seeds replay byte-identically.
pub fn generate_events(model: &dyn EmissionModel, topology: Topology, cfg: &DetectionConfig) -> Result<EventStream> {
    match topology {
        Topology::Hbt3 => generate_hbt3(model, cfg),
        Topology::Mzi => generate_mzi(model, cfg),
    }
}

fn jitter_sigma(cfg: &DetectionConfig) -> f64 {
    cfg.jitter_fwhm / (8.0 * std::f64::consts::LN_2).sqrt()
}

fn push_tag(records: &mut Vec<(u8, u64)>, det: u8, pulse: u64, t_rel: f64, sigma: f64, rep: f64, rng: &mut ChaCha12Rng) {
    let jit = if sigma > 0.0 { Normal::new(0.0, sigma).unwrap().sample(rng) } else { 0.0 };
    // offset by one rep period so jitter cannot push the first pulse negative
    let t = (pulse + 1) as f64 * rep + t_rel + jit;
    records.push((det, t.round().max(0.0) as u64));
}

fn add_background(records: &mut Vec<(u8, u64)>, n_det: u8, pulse: u64, cfg: &DetectionConfig, rng: &mut ChaCha12Rng) {
    if cfg.background <= 0.0 {
        return;
    }
    for det in 0..n_det {
        if rng.random::<f64>() < cfg.background {
            let t_rel = rng.random::<f64>() * cfg.rep_period;
            records.push((det, ((pulse + 1) as f64 * cfg.rep_period + t_rel) as u64));
        }
    }
}

fn generate_hbt3(model: &dyn EmissionModel, cfg: &DetectionConfig) -> Result<EventStream> {
    cfg.validate(3)?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let sigma = jitter_sigma(cfg);
    // cascaded 1:3 then 1:1 splitters
    let routing = [0.25, 0.375, 0.375];
    let mut records = Vec::new();
    let mut times = Vec::with_capacity(4);
    for pulse in 0..cfg.n_pulses {
        times.clear();
        model.sample_emissions(&mut rng, &mut times);
        for &t_rel in &times {
            let r: f64 = rng.random();
            let det = if r < routing[0] {
                0u8
            } else if r < routing[0] + routing[1] {
                1
            } else {
                2
            };
            if rng.random::<f64>() < cfg.efficiency[det as usize] {
                push_tag(&mut records, det, pulse, t_rel, sigma, cfg.rep_period, &mut rng);
            }
        }
        add_background(&mut records, 3, pulse, cfg, &mut rng);
    }
    records.sort_unstable_by_key(|&(_, t)| t);
    Ok(EventStream { n_detectors: 3, resolution_ps: 1, records })
}

fn generate_mzi(model: &dyn EmissionModel, cfg: &DetectionConfig) -> Result<EventStream> {
    cfg.validate(2)?;
    let (source, gamma_star, c1) = model
        .hom_inputs()
        .ok_or_else(|| Error::validation("topology", "this source cannot drive the interferometer"))?;
    let maps = build_maps(&source, gamma_star, false);
    let grid = maps.grid;
    let n = grid.n_points;
    let mu = maps.mu;
    let h2 = grid.step * grid.step;

    // per-phase-window coincidence density CDF over flattened (t1, t2) cells
    let pulses_per_window = ((cfg.window_s / (cfg.rep_period * 1e-12)).round() as u64).max(1);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let sigma = jitter_sigma(cfg);
    let (eta0, eta1) = (cfg.efficiency[0], cfg.efficiency[1]);

    let mut records = Vec::new();
    let mut window_cdf: Vec<f64> = Vec::new();
    let mut current_window = u64::MAX;
    let mut coinc_prob = 0.0;
    let mut single_prob = [0.0f64; 2];
    // singles times follow the intensity profile
    let intensity_cdf = {
        let mut cdf = vec![0.0f64; n];
        let mut acc = 0.0;
        for (i, v) in maps.intensity.iter().enumerate() {
            acc += v * grid.step;
            cdf[i] = acc;
        }
        let total = acc.max(1e-300);
        cdf.iter_mut().for_each(|v| *v /= total);
        cdf
    };

    for pulse in 0..cfg.n_pulses {
        let window = pulse / pulses_per_window;
        if window != current_window {
            current_window = window;
            let t_wall = (window as f64 + 0.5) * pulses_per_window as f64 * cfg.rep_period * 1e-12;
            let phi = cfg.phase_drift * t_wall;
            // 2·G2_HOM = NN − |G1|² + G2 − |C2|²·cos2φ at the source level;
            // the detector-pair rate carries four beam-splitter amplitude
            // factors, so the absolute per-pulse density is that sum / 8
            let cos2 = (2.0 * phi).cos();
            window_cdf.resize(n * n, 0.0);
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = 0.125
                        * (maps.nn.values[[i, j]] - maps.g1sq.values[[i, j]] + maps.g2.values[[i, j]]
                            - maps.c2sq.values[[i, j]] * cos2);
                    acc += v.max(0.0) * h2;
                    window_cdf[i * n + j] = acc;
                }
            }
            coinc_prob = acc;
            let i_sh = c1 * phi.cos();
            single_prob[0] = (eta0 * mu / 2.0 * (1.0 + i_sh) - eta0 * eta1 * coinc_prob).max(0.0);
            single_prob[1] = (eta1 * mu / 2.0 * (1.0 - i_sh) - eta0 * eta1 * coinc_prob).max(0.0);
            let total = acc.max(1e-300);
            window_cdf.iter_mut().for_each(|v| *v /= total);
        }

        let r: f64 = rng.random();
        let p_coinc = eta0 * eta1 * coinc_prob;
        if r < p_coinc {
            let u: f64 = rng.random();
            let cell = window_cdf.partition_point(|c| *c < u).min(n * n - 1);
            let (i, j) = (cell / n, cell % n);
            let sub: f64 = rng.random();
            let t1 = grid.time(i) + (sub - 0.5) * grid.step;
            let sub2: f64 = rng.random();
            let t2 = grid.time(j) + (sub2 - 0.5) * grid.step;
            push_tag(&mut records, 0, pulse, t1, sigma, cfg.rep_period, &mut rng);
            push_tag(&mut records, 1, pulse, t2, sigma, cfg.rep_period, &mut rng);
        } else if r < p_coinc + single_prob[0] {
            let t = sample_cdf(&intensity_cdf, &grid, rng.random());
            push_tag(&mut records, 0, pulse, t, sigma, cfg.rep_period, &mut rng);
        } else if r < p_coinc + single_prob[0] + single_prob[1] {
            let t = sample_cdf(&intensity_cdf, &grid, rng.random());
            push_tag(&mut records, 1, pulse, t, sigma, cfg.rep_period, &mut rng);
        }
        add_background(&mut records, 2, pulse, cfg, &mut rng);
    }
    records.sort_unstable_by_key(|&(_, t)| t);
    Ok(EventStream { n_detectors: 2, resolution_ps: 1, records })
}

fn sample_cdf(cdf: &[f64], grid: &TimeGrid, u: f64) -> f64 {
    let i = cdf.partition_point(|c| *c < u).min(cdf.len() - 1);
    grid.time(i)
}

/// Normalized second-order correlation histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Histogram {
    /// (peak index, coincidence counts); index 0 is the zero-delay peak.
    pub peaks: Vec<(i64, u64)>,
    pub g2_zero: f64,
    pub sigma: f64,
    /// Normalized peak sequence: counts divided by the side-peak mean.
    pub normalized: Vec<(i64, f64)>,
}

const SIDE_PEAKS: i64 = 12;

/// Histogram cross-detector coincidences into rep-period peaks and normalize
/// the zero-delay peak by the mean of the side peaks.
pub fn histogram_g2(stream: &EventStream, cfg: &DetectionConfig) -> Result<G2Histogram> {
    if (stream.span_ps() as f64) < 100.0 * cfg.rep_period {
        return Err(Error::validation("stream", "need at least 100 repetition periods of data"));
    }
    let rep = cfg.rep_period;
    let window = (SIDE_PEAKS as f64 + 0.5) * rep;
    // delays are signed by detector role (τ = t_hi − t_lo for the
    // lower-id detector firing first), so each click pair lands in exactly
    // one peak and the side peaks carry the uncorrelated single-combination
    // rate the zero peak is normalized by
    let mut counts = vec![0u64; 2 * SIDE_PEAKS as usize + 1];

    let recs = &stream.records;
    for i in 0..recs.len() {
        let (det_i, t_i) = recs[i];
        for rec in recs.iter().skip(i + 1) {
            let (det_j, t_j) = *rec;
            let dt = (t_j - t_i) as f64;
            if dt > window {
                break;
            }
            if det_i == det_j {
                continue;
            }
            let tau = if det_i < det_j { dt } else { -dt };
            let k = (tau / rep).round() as i64;
            if k.abs() <= SIDE_PEAKS && (tau - k as f64 * rep).abs() <= rep / 2.0 {
                counts[(k + SIDE_PEAKS) as usize] += 1;
            }
        }
    }

    let zero_idx = SIDE_PEAKS as usize;
    let side_sum: u64 =
        counts.iter().enumerate().filter(|(i, _)| *i != zero_idx).map(|(_, &c)| c).sum();
    if side_sum == 0 {
        return Err(Error::Numerics("no side-peak coincidences to normalize by".into()));
    }
    let side_mean = side_sum as f64 / (counts.len() - 1) as f64;
    let n0 = counts[zero_idx] as f64;
    let g2_zero = n0 / side_mean;
    let sigma = if n0 > 0.0 {
        g2_zero * (1.0 / n0 + 1.0 / side_sum as f64).sqrt()
    } else {
        1.0 / side_mean
    };
    let peaks: Vec<(i64, u64)> =
        counts.iter().enumerate().map(|(i, &c)| (i as i64 - SIDE_PEAKS, c)).collect();
    let normalized = peaks.iter().map(|&(k, c)| (k, c as f64 / side_mean)).collect();
    Ok(G2Histogram { peaks, g2_zero, sigma, normalized })
}

/// Normalized third-order correlation at zero delay from triple
/// coincidences integrated over rep-period-centered squares.
#[derive(Debug, Clone, PartialEq)]
pub struct G3Histogram {
    /// Counts per (τ₁, τ₂) peak, indexed by (k, m) ∈ [-K, K]².
    pub grid: Vec<Vec<u64>>,
    pub g3_zero: f64,
    pub sigma: f64,
}

/// Triple-coincidence map on (τ₁, τ₂) = (t₀-t₁, t₁-t₂): the center square
/// normalized by the mean of the fully uncorrelated squares (three distinct
/// pulses).
pub fn histogram_g3(stream: &EventStream, cfg: &DetectionConfig) -> Result<G3Histogram> {
    if stream.n_detectors < 3 {
        return Err(Error::validation("stream", "g3 needs a three-detector stream"));
    }
    if (stream.span_ps() as f64) < 100.0 * cfg.rep_period {
        return Err(Error::validation("stream", "need at least 100 repetition periods of data"));
    }
    let rep = cfg.rep_period;
    let half_square = 2_500.0; // 5x5 ns² integration squares
    let k_max = 6i64;
    let size = (2 * k_max + 1) as usize;
    let mut grid = vec![vec![0u64; size]; size];

    // events per detector, time-sorted
    let mut per_det: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for &(d, t) in &stream.records {
        if d < 3 {
            per_det[d as usize].push(t);
        }
    }
    let window = (k_max as f64 + 0.5) * rep;

    // anchor on detector 1: τ1 = t0 - t1, τ2 = t1 - t2
    let (d0, d1, d2) = (&per_det[0], &per_det[1], &per_det[2]);
    let mut lo0 = 0usize;
    let mut lo2 = 0usize;
    for &t1 in d1 {
        let t1f = t1 as f64;
        while lo0 < d0.len() && (d0[lo0] as f64) < t1f - window {
            lo0 += 1;
        }
        while lo2 < d2.len() && (d2[lo2] as f64) < t1f - window {
            lo2 += 1;
        }
        let mut neigh0 = Vec::new();
        for &t0 in &d0[lo0..] {
            if (t0 as f64) > t1f + window {
                break;
            }
            neigh0.push(t0 as f64 - t1f);
        }
        let mut neigh2 = Vec::new();
        for &t2 in &d2[lo2..] {
            if (t2 as f64) > t1f + window {
                break;
            }
            neigh2.push(t1f - t2 as f64);
        }
        for &tau1 in &neigh0 {
            let k = (tau1 / rep).round() as i64;
            if k.abs() > k_max || (tau1 - k as f64 * rep).abs() > half_square {
                continue;
            }
            for &tau2 in &neigh2 {
                let m = (tau2 / rep).round() as i64;
                if m.abs() > k_max || (tau2 - m as f64 * rep).abs() > half_square {
                    continue;
                }
                grid[(k + k_max) as usize][(m + k_max) as usize] += 1;
            }
        }
    }

    // normalize by fully uncorrelated squares: k ≠ 0, m ≠ 0, k + m ≠ 0
    let mut norm_sum = 0u64;
    let mut norm_n = 0u64;
    for k in -k_max..=k_max {
        for m in -k_max..=k_max {
            if k != 0 && m != 0 && k + m != 0 {
                norm_sum += grid[(k + k_max) as usize][(m + k_max) as usize];
                norm_n += 1;
            }
        }
    }
    if norm_sum == 0 {
        return Err(Error::Numerics("no uncorrelated triple coincidences to normalize by".into()));
    }
    let norm_mean = norm_sum as f64 / norm_n as f64;
    let center = grid[k_max as usize][k_max as usize] as f64;
    let g3_zero = center / norm_mean;
    let sigma = if center > 0.0 {
        g3_zero * (1.0 / center + 1.0 / norm_sum as f64).sqrt()
    } else {
        1.0 / norm_mean
    };
    Ok(G3Histogram { grid, g3_zero, sigma })
}

/// Intra-pulse two-time coincidence counts, with the uncorrelated
/// (cross-pulse) reference map used for normalization.
#[derive(Debug, Clone)]
pub struct TagMaps {
    pub grid: TimeGrid,
    pub coincidences: Array2<u64>,
    pub uncorrelated: Array2<u64>,
    pub n_offsets: u64,
    /// Per-window self-homodyne imbalance (n₀-n₁)/(n₀+n₁), MZI streams only.
    pub i_sh: Option<f64>,
}

impl TagMaps {
    /// Package as correlation maps so [`quadrant_reduce`] applies directly:
    /// the uncorrelated map plays N(t₁)N(t₂) and the same-pulse map G⁽²⁾,
    /// with identical detector-pair weights in both so routing and
    /// efficiency factors cancel.
    ///
    /// [`quadrant_reduce`]: crate::correlations::quadrant_reduce
    pub fn to_correlation_maps(&self) -> CorrelationMaps {
        let n = self.grid.n_points;
        let scale = 1.0 / self.n_offsets as f64;
        let mut nn = Array2::zeros((n, n));
        let mut g2 = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                nn[[i, j]] = self.uncorrelated[[i, j]] as f64 * scale;
                g2[[i, j]] = self.coincidences[[i, j]] as f64;
            }
        }
        let intensity = vec![0.0; n];
        CorrelationMaps {
            grid: self.grid,
            nn: CorrelationMap { grid: self.grid, kind: MapKind::IntensityProduct, values: nn },
            g2: CorrelationMap { grid: self.grid, kind: MapKind::G2, values: g2 },
            g1sq: CorrelationMap { grid: self.grid, kind: MapKind::AbsG1Sq, values: Array2::zeros((n, n)) },
            c2sq: CorrelationMap { grid: self.grid, kind: MapKind::AbsC2Sq, values: Array2::zeros((n, n)) },
            c_minus: None,
            intensity,
            mu: 0.0,
        }
    }
}

/// Build the intra-pulse (t₁, t₂) coincidence map at the tagger resolution,
/// optionally restricted to one MZI phase window.
pub fn correlation_map_from_tags(stream: &EventStream, cfg: &DetectionConfig, phase_window: Option<u64>) -> Result<TagMaps> {
    let rep = cfg.rep_period;
    let n_bins = (cfg.map_span / cfg.bin_width).ceil() as usize;
    let grid = TimeGrid::new(cfg.bin_width / 2.0, cfg.bin_width, n_bins.max(2))?;
    let pulses_per_window = ((cfg.window_s / (rep * 1e-12)).round() as u64).max(1);

    // clicks per pulse: (pulse, detector, bin)
    struct Click {
        pulse: u64,
        det: u8,
        bin: usize,
    }
    let mut clicks = Vec::with_capacity(stream.records.len());
    let mut singles = [0u64; 2];
    for &(det, t) in &stream.records {
        let pulse = (t as f64 / rep).floor() as u64;
        if let Some(w) = phase_window {
            if pulse / pulses_per_window != w {
                continue;
            }
        }
        let t_rel = t as f64 - pulse as f64 * rep;
        let bin = (t_rel / cfg.bin_width) as usize;
        if bin < n_bins {
            if (det as usize) < 2 {
                singles[det as usize] += 1;
            }
            clicks.push(Click { pulse, det, bin });
        }
    }

    let mut coincidences = Array2::zeros((n_bins, n_bins));
    let mut uncorrelated = Array2::zeros((n_bins, n_bins));
    let n_offsets = 6u64;

    // same-pulse cross-detector pairs, then cross-pulse pairs at fixed
    // detector roles for the uncorrelated reference
    let mut start = 0usize;
    while start < clicks.len() {
        let pulse = clicks[start].pulse;
        let mut end = start + 1;
        while end < clicks.len() && clicks[end].pulse == pulse {
            end += 1;
        }
        for a in start..end {
            for b in (a + 1)..end {
                if clicks[a].det != clicks[b].det {
                    coincidences[[clicks[a].bin, clicks[b].bin]] += 1u64;
                    coincidences[[clicks[b].bin, clicks[a].bin]] += 1u64;
                }
            }
        }
        start = end;
    }
    // uncorrelated reference: pair each click with clicks k pulses later
    let mut by_pulse_start = std::collections::BTreeMap::new();
    let mut idx = 0usize;
    while idx < clicks.len() {
        let pulse = clicks[idx].pulse;
        by_pulse_start.entry(pulse).or_insert(idx);
        idx += 1;
    }
    for a in 0..clicks.len() {
        for k in 1..=n_offsets {
            let target = clicks[a].pulse + k;
            let Some(&s) = by_pulse_start.get(&target) else { continue };
            let mut b = s;
            while b < clicks.len() && clicks[b].pulse == target {
                // same unordered detector-pair convention as the same-pulse
                // loop, so the g2 normalization carries no combinatorial bias
                if clicks[a].det < clicks[b].det {
                    uncorrelated[[clicks[a].bin, clicks[b].bin]] += 1u64;
                    uncorrelated[[clicks[b].bin, clicks[a].bin]] += 1u64;
                }
                b += 1;
            }
        }
    }

    let i_sh = (stream.n_detectors == 2).then(|| {
        let total = singles[0] + singles[1];
        if total > 0 {
            (singles[0] as f64 - singles[1] as f64) / total as f64
        } else {
            0.0
        }
    });

    Ok(TagMaps { grid, coincidences, uncorrelated, n_offsets, i_sh })
}
