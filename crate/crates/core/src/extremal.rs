//! Geometric-piece extremal functions.
//!
//! The infinite extremal function takes the value `vₙ = (n + ½)λ - s` on
//! `[aⁿ⁺¹, aⁿ)`. Its Bellman curve `t ↦ γ(t)` passes through every vertex
//! `γ(aⁿ) = vertex(n)`, and `⟨e^{μφ}⟩` equals the Bellman value at
//! `vertex(0)`. The built step function keeps `N` pieces and closes the tail
//! `[0, a^N)` with the constant `v_N`.

use serde::{Deserialize, Serialize};

use crate::bellman::mu_critical;
use crate::error::{Error, Result};
use crate::geometry::CombDomain;
use crate::oscillation::{membership_a, weak_bmo};
use crate::stepfn::{compensated_sum, Piece, Space, StepFunction};

/// Tail mass targeted by [`ExtremalSpec::with_default_pieces`].
pub const DEFAULT_TAIL_MASS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSpec {
    lambda: f64,
    epsilon: f64,
    n_pieces: usize,
}

impl ExtremalSpec {
    pub fn new(lambda: f64, epsilon: f64, n_pieces: usize) -> Result<Self> {
        CombDomain::new(lambda, epsilon)?;
        if n_pieces == 0 {
            return Err(Error::param("pieces", "must be at least 1"));
        }
        Ok(Self {
            lambda,
            epsilon,
            n_pieces,
        })
    }

    /// Uses the smallest `N` with `a^N < 1e-12`.
    pub fn with_default_pieces(lambda: f64, epsilon: f64) -> Result<Self> {
        let probe = Self::new(lambda, epsilon, 1)?;
        Self::new(lambda, epsilon, probe.pieces_for_tail(DEFAULT_TAIL_MASS))
    }

    /// Smallest `N` with `a^N < mass`.
    pub fn pieces_for_tail(&self, mass: f64) -> usize {
        let a = self.ratio();
        let mut n = ((mass.ln() / a.ln()).floor().max(0.0)) as usize;
        while a.powi(n as i32) >= mass {
            n += 1;
        }
        while n > 1 && a.powi(n as i32 - 1) < mass {
            n -= 1;
        }
        n.max(1)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_pieces(&self) -> usize {
        self.n_pieces
    }

    pub fn domain(&self) -> CombDomain {
        CombDomain::new(self.lambda, self.epsilon).expect("validated on construction")
    }

    /// `s = sqrt(λ²/4 + ε²)`.
    pub fn half_span(&self) -> f64 {
        (0.25 * self.lambda * self.lambda + self.epsilon * self.epsilon).sqrt()
    }

    /// `a = 1 - λ / (λ/2 + s)`, computed as `ε² / (s + λ/2)²`.
    pub fn ratio(&self) -> f64 {
        let t = self.half_span() + 0.5 * self.lambda;
        (self.epsilon / t).powi(2)
    }

    /// `vₙ = (n + ½)λ - s`.
    pub fn value(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * self.lambda - self.half_span()
    }

    /// Mass `a^N` of the constant tail.
    pub fn tail_mass(&self) -> f64 {
        self.ratio().powi(self.n_pieces as i32)
    }

    /// The truncated extremal step function on `[0, 1]`.
    pub fn build(&self) -> StepFunction {
        let a = self.ratio();
        let n = self.n_pieces;
        let mut pieces = Vec::with_capacity(n + 1);
        pieces.push(Piece {
            length: a.powi(n as i32),
            value: self.value(n),
        });
        for k in (0..n).rev() {
            pieces.push(Piece {
                length: a.powi(k as i32) * (1.0 - a),
                value: self.value(k),
            });
        }
        StepFunction::new(Space::Interval, pieces).expect("extremal pieces are valid")
    }
}

/// The exponential average of the infinite extremal function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpAverage {
    /// `partial + tail`; equals the full series when it converges.
    pub value: f64,
    /// `Σ_{n<N} (aⁿ - aⁿ⁺¹) e^{μ vₙ}`.
    pub partial: f64,
    /// The remainder `Σ_{n>=N}`, summed in closed form; zero when divergent.
    pub tail_bound: f64,
    /// Ratio `a e^{μλ}` of consecutive terms.
    pub ratio: f64,
    pub divergent: bool,
}

/// `⟨e^{μφ}⟩` for the infinite extremal function, split into the first `N`
/// terms and the geometric remainder.
///
/// When `a e^{μλ} >= 1` (that is `μ >= μ*`) the series diverges; the result
/// then carries the partial sum, `divergent = true` and the growth ratio.
pub fn exp_average(spec: &ExtremalSpec, mu: f64) -> Result<ExpAverage> {
    if !mu.is_finite() {
        return Err(Error::param("mu", format!("must be finite, got {mu}")));
    }
    let a = spec.ratio();
    let lam = spec.lambda();
    let mu_crit = mu_critical(lam, spec.epsilon())?;
    let ratio = a * (mu * lam).exp();
    let first = (1.0 - a) * (mu * spec.value(0)).exp();
    let n = spec.n_pieces();
    let partial = compensated_sum((0..n).map(|k| first * ratio.powi(k as i32)));
    let divergent = mu >= mu_crit || ratio >= 1.0;
    let tail_bound = if divergent {
        0.0
    } else {
        // r^N / (1 - r) with 1 - r = -expm1(λ(μ - μ*)).
        first * ratio.powi(n as i32) / -(lam * (mu - mu_crit)).exp_m1()
    };
    Ok(ExpAverage {
        value: if divergent { partial } else { partial + tail_bound },
        partial,
        tail_bound,
        ratio,
        divergent,
    })
}

/// First term count at which the partial sums of the exponential series
/// exceed `threshold`, scanning at most `max_terms` terms.
pub fn divergence_index(spec: &ExtremalSpec, mu: f64, max_terms: usize, threshold: f64) -> Option<usize> {
    let a = spec.ratio();
    let ratio = a * (mu * spec.lambda()).exp();
    let mut term = (1.0 - a) * (mu * spec.value(0)).exp();
    let mut sum = 0.0;
    for k in 1..=max_terms {
        sum += term;
        if sum > threshold {
            return Some(k);
        }
        term *= ratio;
    }
    None
}

/// Checks of the truncated extremal function against the infinite one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub n_pieces: usize,
    /// Vertices checked (those with `aⁿ` well above the averaging floor).
    pub vertices_checked: usize,
    /// Largest `|γ(aⁿ) - vertex(n)|` over the checked vertices.
    pub max_vertex_deviation: f64,
    /// Largest deviation after removing the exactly known truncation shift.
    pub max_residual: f64,
    pub trajectory_ok: bool,
    pub mean: f64,
    pub mean_ok: bool,
    pub variance: f64,
    pub variance_ok: bool,
    pub weak_bmo: f64,
    pub weak_bmo_ok: bool,
    pub member: bool,
    pub pass: bool,
}

/// Compares the truncated function with the properties of the infinite one.
///
/// On `[0, aⁿ]` the constant tail shifts the first moment by
/// `a^{N-n}(λ/2 - s)` and the second by `a^{N-n}(v_N² - N²λ² - ε²)`; these
/// shifts are the truncation budgets used below.
pub fn verify_trajectory(spec: &ExtremalSpec) -> Result<TrajectoryReport> {
    let f = spec.build();
    let d = spec.domain();
    let psi = f.lift();
    let a = spec.ratio();
    let lam = spec.lambda();
    let eps2 = spec.epsilon().powi(2);
    let n_total = spec.n_pieces();
    let vn = spec.value(n_total);
    let shift1 = 0.5 * lam - spec.half_span();
    let shift2 = vn * vn - (n_total as f64 * lam).powi(2) - eps2;

    let mut checked = 0;
    let mut max_dev = 0.0_f64;
    let mut max_res = 0.0_f64;
    let mut ok = true;
    for n in 0..n_total {
        let t = a.powi(n as i32);
        if t < 1e-11 {
            break;
        }
        let g = psi.gamma(t)?;
        let v = d.vertex(n as i64);
        let w = a.powi((n_total - n) as i32);
        let dev = (g.x1 - v.x1).abs().max((g.x2 - v.x2).abs());
        let res = (g.x1 - v.x1 - w * shift1)
            .abs()
            .max((g.x2 - v.x2 - w * shift2).abs());
        // Cancellation in the prefix differences scales with 1/t.
        let floor = 1e-13 * (1.0 + v.x2) / t;
        ok &= res <= floor + 1e-12;
        max_dev = max_dev.max(dev);
        max_res = max_res.max(res);
        checked += 1;
    }

    let tail = spec.tail_mass();
    let mean = f.mean();
    let mean_ok = (mean - tail * shift1).abs() <= 1e-13 * (1.0 + vn.abs());
    let variance = f.variance();
    let variance_ok = (variance - eps2).abs() <= tail * (shift2.abs() + 2.0 * shift1.abs() * vn.abs()) + 1e-12;
    let weak = weak_bmo(&f, lam)?.value;
    let weak_ok = (weak - spec.epsilon()).abs() <= 1e-6;
    let loose = CombDomain::new(lam, spec.epsilon() + 1e-9)?;
    let member = membership_a(&f, &loose, false)?.member;
    Ok(TrajectoryReport {
        n_pieces: n_total,
        vertices_checked: checked,
        max_vertex_deviation: max_dev,
        max_residual: max_res,
        trajectory_ok: ok,
        mean,
        mean_ok,
        variance,
        variance_ok,
        weak_bmo: weak,
        weak_bmo_ok: weak_ok,
        member,
        pass: ok && mean_ok && variance_ok && weak_ok && member,
    })
}
