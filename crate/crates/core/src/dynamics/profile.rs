//! Piecewise-analytic temporal amplitude profiles.
//!
//! Wavefunction components are products of trig factors inside drive windows
//! and exponentials elsewhere, so profiles are stored as analytic segments.
//! Integrals between exponential segments are closed-form (including
//! infinite tails); anything involving a drive window falls back to adaptive
//! Simpson on the smooth piece. That keeps quadrant integrals accurate to
//! ~1e-12, well below every tolerance used downstream.

use crate::types::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `e^{-rate·(t-t0)}`
    Exp { rate: f64 },
    /// `sin(ω(t-t0)/2)·cos(ω(window-(t-t0))/2)` — emission during a drive
    /// window that leaves the atom in the ground state.
    SinCos { omega: f64, window: f64 },
    /// `sin(ω(t-t0)/2)·sin(ω(window-(t-t0))/2)` — emission during a drive
    /// window that leaves the atom excited.
    SinSin { omega: f64, window: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    /// Segment end; `f64::INFINITY` is allowed for exponential tails.
    pub t1: f64,
    pub amp: f64,
    pub shape: Shape,
}

impl Segment {
    fn value(&self, t: f64) -> f64 {
        if t < self.t0 || t >= self.t1 {
            return 0.0;
        }
        let tau = t - self.t0;
        self.amp
            * match self.shape {
                Shape::Exp { rate } => (-rate * tau).exp(),
                Shape::SinCos { omega, window } => {
                    (omega * tau / 2.0).sin() * (omega * (window - tau) / 2.0).cos()
                }
                Shape::SinSin { omega, window } => {
                    (omega * tau / 2.0).sin() * (omega * (window - tau) / 2.0).sin()
                }
            }
    }

    fn is_exp(&self) -> bool {
        matches!(self.shape, Shape::Exp { .. })
    }
}

/// A real amplitude profile: contiguous or gapped analytic segments, zero
/// elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    segments: Vec<Segment>,
}

impl Profile {
    pub fn new(mut segments: Vec<Segment>) -> Self {
        segments.retain(|s| s.t1 > s.t0 && s.amp != 0.0);
        segments.sort_by(|a, b| a.t0.partial_cmp(&b.t0).unwrap());
        Profile { segments }
    }

    pub fn empty() -> Self {
        Profile { segments: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.segments.iter().map(|s| s.value(t)).sum()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn support_start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.t0)
    }

    pub fn support_end(&self) -> f64 {
        self.segments.iter().map(|s| s.t1).fold(0.0, f64::max)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            pts.push(s.t0);
            if s.t1.is_finite() {
                pts.push(s.t1);
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// ∫ f·g over the real line (well-defined: both decay or have compact
    /// support).
    pub fn inner(&self, other: &Profile) -> f64 {
        self.inner_on(other, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// ∫ₐᵇ f·g.
    pub fn inner_on(&self, other: &Profile, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            for o in &other.segments {
                let lo = s.t0.max(o.t0).max(a);
                let hi = s.t1.min(o.t1).min(b);
                if hi <= lo {
                    continue;
                }
                total += integrate_pair(s, o, lo, hi);
            }
        }
        total
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self)
    }

    /// Rescale to unit L² norm. No-op on an empty profile.
    pub fn normalized(&self) -> Profile {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 {
            return self.clone();
        }
        self.scaled(1.0 / n2.sqrt())
    }

    pub fn scaled(&self, factor: f64) -> Profile {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment { amp: s.amp * factor, ..*s })
            .collect();
        Profile { segments }
    }

    /// Restrict support to t < cutoff (segments are clipped, not rescaled).
    pub fn truncated(&self, cutoff: f64) -> Profile {
        let segments = self
            .segments
            .iter()
            .filter(|s| s.t0 < cutoff)
            .map(|s| Segment { t1: s.t1.min(cutoff), ..*s })
            .collect();
        Profile { segments }
    }

    pub fn sample(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.times().map(|t| self.value(t)).collect()
    }
}

fn integrate_pair(s: &Segment, o: &Segment, lo: f64, hi: f64) -> f64 {
    if s.is_exp() && o.is_exp() {
        let (Shape::Exp { rate: p }, Shape::Exp { rate: q }) = (s.shape, o.shape) else {
            unreachable!()
        };
        // A·B·e^{p·s.t0 + q·o.t0} ∫ e^{-(p+q)t} dt
        let c = s.amp * o.amp * (p * s.t0 + q * o.t0).exp();
        let r = p + q;
        if r.abs() < 1e-300 {
            assert!(hi.is_finite(), "cannot integrate a constant to infinity");
            return c * (hi - lo);
        }
        let upper = if hi.is_finite() { (-r * hi).exp() } else { 0.0 };
        c * ((-r * lo).exp() - upper) / r
    } else {
        assert!(hi.is_finite(), "trig segments have finite support");
        adaptive_simpson(&|t| s.value(t) * o.value(t), lo, hi, 1e-13)
    }
}

/// Adaptive Simpson quadrature on a smooth integrand.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    // scale-aware absolute tolerance
    let scale = whole.abs().max(1e-3 * (b - a));
    recurse(f, a, fa, b, fb, m, fm, whole, tol * scale, 48)
}
