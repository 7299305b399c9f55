//! Discretized collision-model evolution of the driven atom and its emitted
//! field, truncated at two photons.
//!
//! Each step couples the atom to a fresh vacuum slice: a damping substep
//! built from the first-order step operator (excited amplitude shrinks by
//! 1 − γδt/2, the complement emitted into the current temporal mode) followed
//! by a drive rotation. The scheme is first order in δt — halving the step
//! halves the error — while conserving the truncated norm exactly.
//!
//! Emitted modes never interact again, so every photon configuration carries
//! an independent two-component atom amplitude evolved by the same 2×2 step
//! matrices. The evolution therefore factors through running products of
//! those matrices, which keeps the cost linear in the step count while
//! remaining the exact truncated dynamics — no closed-form wavefunction from
//! [`super`] enters anywhere here.

use crate::error::{Error, Result};
use crate::types::{AtomParams, PulseSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialAtom {
    #[default]
    Ground,
    Excited,
}

#[derive(Debug, Clone, Copy)]
pub struct CollisionOptions {
    /// Time step δt (ps). Must satisfy δt·max(γ, Ω) < 0.05.
    pub delta_t: f64,
    /// Free-decay time simulated after the last pulse, in units of 1/γ.
    pub tail_lifetimes: f64,
    pub initial: InitialAtom,
}

impl CollisionOptions {
    pub fn new(delta_t: f64) -> Self {
        CollisionOptions { delta_t, tail_lifetimes: 10.0, initial: InitialAtom::Ground }
    }

    pub fn with_initial(mut self, initial: InitialAtom) -> Self {
        self.initial = initial;
        self
    }
}

/// Truncated joint-state summary produced by [`collision_evolve`].
#[derive(Debug, Clone)]
pub struct CollisionResult {
    pub delta_t: f64,
    /// Interval boundaries used for the probability blocks: every pulse edge
    /// plus the end of the simulated window.
    pub boundaries: Vec<f64>,
    /// Total excited-state population at each step start.
    pub excited_population: Vec<f64>,
    /// Final one-photon amplitude per temporal mode (atom relaxed). The
    /// squared entries sum to p1; dividing by δt gives the intensity density.
    pub f1: Vec<f64>,
    pub p0: f64,
    /// One-photon probability per interval.
    pub p1_intervals: Vec<f64>,
    /// Two-photon probability per ordered interval pair (first emission
    /// index ≤ second emission index).
    pub p2_intervals: Vec<Vec<f64>>,
    /// Norm lost to the ≥3-photon sector.
    pub deficit3: f64,
}

impl CollisionResult {
    pub fn p1(&self) -> f64 {
        self.p1_intervals.iter().sum()
    }

    pub fn p2(&self) -> f64 {
        self.p2_intervals.iter().flatten().sum()
    }

    /// p0 + p1 + p2 + deficit — exactly 1 up to roundoff.
    pub fn total_norm(&self) -> f64 {
        self.p0 + self.p1() + self.p2() + self.deficit3
    }

    pub fn time(&self, idx: usize) -> f64 {
        self.delta_t * idx as f64
    }

    fn interval_of(&self, t: f64) -> usize {
        // boundaries[0] = 0; interval i spans boundaries[i]..boundaries[i+1]
        let mut i = 0;
        while i + 2 < self.boundaries.len() && t >= self.boundaries[i + 1] {
            i += 1;
        }
        i
    }

    /// Sum the one-photon probability over intervals fully before `t`.
    pub fn p1_before(&self, t: f64) -> f64 {
        (0..self.interval_of(t)).map(|i| self.p1_intervals[i]).sum()
    }
}

#[derive(Clone, Copy, Default)]
struct Mat2 {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Mat2 {
    const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    fn rotation(theta_half: f64) -> Mat2 {
        let (s, c) = theta_half.sin_cos();
        Mat2 { a: c, b: -s, c: s, d: c }
    }

    fn damping(lambda: f64) -> Mat2 {
        Mat2 { a: 1.0, b: 0.0, c: 0.0, d: lambda }
    }

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn apply(self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }
}

/// Per-interval running sums of u⊗u for the factored slot amplitudes.
#[derive(Clone, Copy, Default)]
struct QuadSums {
    s00: f64,
    s01: f64,
    s11: f64,
}

impl QuadSums {
    fn add(&mut self, u: [f64; 2]) {
        self.s00 += u[0] * u[0];
        self.s01 += u[0] * u[1];
        self.s11 += u[1] * u[1];
    }

    fn quad(&self, row: [f64; 2]) -> f64 {
        row[0] * row[0] * self.s00 + 2.0 * row[0] * row[1] * self.s01 + row[1] * row[1] * self.s11
    }
}

/// Evolve the driven atom-field system step by step.
///
/// The pulse schedule is read chronologically; a zero-width pulse is applied
/// as an instantaneous π rotation. The run ends `tail_lifetimes`/γ after the
/// final pulse.
pub fn collision_evolve(atom: &AtomParams, seq: &PulseSequence, opts: &CollisionOptions) -> Result<CollisionResult> {
    let gamma = atom.gamma;
    let dt = opts.delta_t;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::validation("delta_t", format!("must be > 0, got {dt}")));
    }
    let limit = dt * gamma.max(if seq.pulse_width > 0.0 { seq.rabi } else { 0.0 });
    if limit >= 0.05 {
        return Err(Error::validation(
            "delta_t",
            format!("step too large: δt·max(γ, Ω) = {limit:.3} must be < 0.05"),
        ));
    }

    let starts = seq.pulse_start_times();
    let tp = seq.pulse_width;
    let last_pulse_end = starts.last().map_or(0.0, |s| s + tp);
    let t_end = last_pulse_end + opts.tail_lifetimes / gamma;
    let n_steps = (t_end / dt).ceil() as usize;

    // Interval boundaries: pulse edges, then the end of the window.
    let mut boundaries = vec![0.0];
    for &s in &starts {
        if s > 0.0 {
            boundaries.push(s);
        }
        if tp > 0.0 {
            boundaries.push(s + tp);
        }
    }
    boundaries.push(t_end);
    boundaries.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let n_intervals = boundaries.len() - 1;

    // Drive angle per step; zero-width pulses inject a π rotation at the
    // step containing the pulse time.
    let theta_half = |k: usize| -> f64 {
        let t = k as f64 * dt;
        let mut th = 0.0;
        for &s in &starts {
            if tp > 0.0 {
                if t >= s && t < s + tp {
                    th += seq.rabi * dt / 2.0;
                }
            } else if t <= s && s < t + dt {
                th += std::f64::consts::PI / 2.0;
            }
        }
        th
    };
    let interval_idx: Vec<usize> = {
        let mut idx = Vec::with_capacity(n_steps);
        let mut cur = 0usize;
        for k in 0..n_steps {
            let t = k as f64 * dt;
            while cur + 1 < n_intervals && t >= boundaries[cur + 1] {
                cur += 1;
            }
            idx.push(cur);
        }
        idx
    };

    let lambda = 1.0 - gamma * dt / 2.0;
    let em = (1.0 - lambda * lambda).sqrt();
    let damp = Mat2::damping(lambda);
    let damp_inv = Mat2::damping(1.0 / lambda);

    // Backward pass: survival weight of a two-photon configuration born at
    // step k, i.e. the squared norm of its atom amplitude after all later
    // steps (the complement leaks to three photons).
    let mut survival = vec![0.0f64; n_steps];
    {
        let mut back = Mat2::IDENTITY;
        for k in (0..n_steps).rev() {
            let rot = Mat2::rotation(theta_half(k));
            let w = back.mul(rot).apply([1.0, 0.0]);
            survival[k] = w[0] * w[0] + w[1] * w[1];
            back = back.mul(rot).mul(damp);
        }
    }

    // Forward pass.
    let mut c0 = match opts.initial {
        InitialAtom::Ground => [1.0, 0.0],
        InitialAtom::Excited => [0.0, 1.0],
    };
    let mut fwd = Mat2::IDENTITY; // Mfull(k)
    let mut fwd_inv = Mat2::IDENTITY;
    let mut u0 = vec![0.0f64; n_steps];
    let mut u1 = vec![0.0f64; n_steps];
    let mut block_sums = vec![QuadSums::default(); n_intervals];
    let mut excited_population = vec![0.0f64; n_steps];
    let mut p2_intervals = vec![vec![0.0f64; n_intervals]; n_intervals];
    let mut deficit3 = 0.0;
    // Aggregate atom density of the two-photon sector, for the population
    // trace only (probabilities use the survival weights above).
    let (mut rho2_gg, mut rho2_ge, mut rho2_ee) = (0.0f64, 0.0f64, 0.0f64);

    for k in 0..n_steps {
        let row_e = [fwd.c, fwd.d];

        // population before this step
        let one_photon_e: f64 = block_sums.iter().map(|s| s.quad(row_e)).sum();
        excited_population[k] = c0[1] * c0[1] + one_photon_e + rho2_ee;

        // two-photon seeding from every existing one-photon slot
        let here = interval_idx[k];
        let mut q_tot = 0.0;
        for (b, sums) in block_sums.iter().enumerate() {
            let q = em * em * sums.quad(row_e);
            if q > 0.0 {
                p2_intervals[b][here] += q * survival[k];
                deficit3 += q * (1.0 - survival[k]);
                q_tot += q;
            }
        }

        // new one-photon slot from the vacuum sector
        let seed0 = em * c0[1];
        let u = fwd_inv.apply([seed0, 0.0]);
        u0[k] = u[0];
        u1[k] = u[1];

        // substep A on the tracked sectors
        c0[1] *= lambda;
        rho2_ee *= lambda * lambda;
        rho2_ge *= lambda;
        rho2_gg += q_tot;

        // substep B: drive rotation
        let rot = Mat2::rotation(theta_half(k));
        c0 = rot.apply(c0);
        let (gg, ge, ee) = (rho2_gg, rho2_ge, rho2_ee);
        rho2_gg = rot.a * rot.a * gg + 2.0 * rot.a * rot.b * ge + rot.b * rot.b * ee;
        rho2_ge = rot.a * rot.c * gg + (rot.a * rot.d + rot.b * rot.c) * ge + rot.b * rot.d * ee;
        rho2_ee = rot.c * rot.c * gg + 2.0 * rot.c * rot.d * ge + rot.d * rot.d * ee;

        // slot born this step participates from the next one
        block_sums[here].add(u);

        let step = rot.mul(damp);
        fwd = step.mul(fwd);
        fwd_inv = fwd_inv.mul(damp_inv).mul(Mat2::rotation(-theta_half(k)));
    }

    // Final per-mode one-photon amplitudes and interval sums.
    let mut f1 = vec![0.0f64; n_steps];
    let mut p1_intervals = vec![0.0f64; n_intervals];
    for k in 0..n_steps {
        let v = fwd.apply([u0[k], u1[k]]);
        f1[k] = v[0];
        p1_intervals[interval_idx[k]] += v[0] * v[0] + v[1] * v[1];
    }
    let p0 = c0[0] * c0[0] + c0[1] * c0[1];

    Ok(CollisionResult {
        delta_t: dt,
        boundaries,
        excited_population,
        f1,
        p0,
        p1_intervals,
        p2_intervals,
        deficit3,
    })
}
