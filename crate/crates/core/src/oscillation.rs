//! Oscillation quantities of step functions.
//!
//! All suprema are exact. Over intervals whose endpoints fall in fixed pieces
//! `i < j`, an interval is described by the partial mass `p` taken from piece
//! `i`, the partial mass `q` taken from piece `j`, and the full block of
//! pieces between them. The variance is then a ratio of quadratics in `(p, q)`
//! whose maximum is found in closed form, see [`pair_max`].
//!
//! The norms follow the square-root convention: `bmo` and `weak_bmo` are
//! square roots of suprema of variances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CombDomain, RegionTag};
use crate::stepfn::{Space, StepFunction};

/// Variance `⟨φ²⟩ - ⟨φ⟩²` over `[a, b]`, clamped at zero.
pub fn variance(f: &StepFunction, a: f64, b: f64) -> Result<f64> {
    let p = f.bellman_point(a, b)?;
    Ok(p.parabola_gap().max(0.0))
}

/// A supremum together with an interval attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    /// Square root of the supremal variance.
    pub value: f64,
    /// Attaining interval, absent when the supremum is over an empty set.
    pub argmax: Option<(f64, f64)>,
}

impl Extremum {
    const EMPTY: Extremum = Extremum {
        value: 0.0,
        argmax: None,
    };
}

/// Mass, mean and variance of a weighted sample.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    mass: f64,
    mean: f64,
    var: f64,
}

impl Moments {
    fn atom(mass: f64, value: f64) -> Self {
        Self {
            mass,
            mean: value,
            var: 0.0,
        }
    }

    fn merge(&self, other: &Moments) -> Moments {
        let mass = self.mass + other.mass;
        if mass == 0.0 {
            return Moments::default();
        }
        let (wa, wb) = (self.mass / mass, other.mass / mass);
        let d = other.mean - self.mean;
        Moments {
            mass,
            mean: wa * self.mean + wb * other.mean,
            var: wa * self.var + wb * other.var + wa * wb * d * d,
        }
    }

    /// Mean square deviation from `c`, times the mass.
    fn spread_about(&self, c: f64) -> f64 {
        let d = self.mean - c;
        self.mass * (self.var + d * d)
    }
}

/// Maximizes the variance of `fixed ∪ (w at v)` over `w ∈ [0, w_max]`.
///
/// With `r = w / (W + w)` the variance is `(1 - r) s0 + r (1 - r) D`, a
/// concave quadratic in `r`. Returns `(variance, w)`.
fn add_atom_max(fixed: &Moments, v: f64, w_max: f64) -> (f64, f64) {
    let big_w = fixed.mass;
    if big_w <= 0.0 {
        return (0.0, 0.0);
    }
    let s0 = fixed.var;
    let d = (v - fixed.mean).powi(2);
    let r_max = w_max / (big_w + w_max);
    let r = if d > 0.0 {
        ((d - s0) / (2.0 * d)).clamp(0.0, r_max)
    } else {
        0.0
    };
    let value = (1.0 - r) * s0 + r * (1.0 - r) * d;
    let w = if r >= r_max {
        w_max
    } else {
        r * big_w / (1.0 - r)
    };
    (value, w)
}

/// Running maximum with a deterministic tie-break on the interval.
#[derive(Clone, Copy, Debug)]
struct Best {
    var: f64,
    interval: Option<(f64, f64)>,
}

impl Best {
    fn new() -> Self {
        Self {
            var: 0.0,
            interval: None,
        }
    }

    fn offer(&mut self, var: f64, a: f64, b: f64) {
        let better = match self.interval {
            None => true,
            Some(cur) => var > self.var || (var == self.var && (a, b) < cur),
        };
        if better && b > a {
            self.var = var.max(0.0);
            self.interval = Some((a, b));
        }
    }

    fn finish(self) -> Extremum {
        Extremum {
            value: self.var.max(0.0).sqrt(),
            argmax: self.interval,
        }
    }
}

/// Lengths, values and left breakpoints of a piece sequence.
struct Layout {
    lengths: Vec<f64>,
    values: Vec<f64>,
    starts: Vec<f64>,
}

impl Layout {
    fn of(f: &StepFunction, periods: usize) -> Self {
        let base = f.breakpoints();
        let mut lengths = Vec::new();
        let mut values = Vec::new();
        let mut starts = Vec::new();
        for k in 0..periods {
            for (i, p) in f.pieces().iter().enumerate() {
                lengths.push(p.length);
                values.push(p.value);
                starts.push(k as f64 + base[i]);
            }
        }
        Self {
            lengths,
            values,
            starts,
        }
    }

    fn end(&self, i: usize) -> f64 {
        self.starts[i] + self.lengths[i]
    }
}

/// Largest variance over intervals starting in piece `i` and ending in piece
/// `j > i`, given the moments of the pieces strictly between them.
fn pair_max(lay: &Layout, i: usize, j: usize, block: &Moments, best: &mut Best) {
    let (vi, li) = (lay.values[i], lay.lengths[i]);
    let (vj, lj) = (lay.values[j], lay.lengths[j]);
    let left_end = lay.end(i);
    let right_start = lay.starts[j];
    // The variance is concave along lines through the (p, q) box with a
    // rank-one Hessian, so the maximum lies on the boundary of the box.
    for p in [0.0, li] {
        let fixed = block.merge(&Moments::atom(p, vi));
        let (v, q) = add_atom_max(&fixed, vj, lj);
        best.offer(v, left_end - p, right_start + q);
    }
    for q in [0.0, lj] {
        let fixed = block.merge(&Moments::atom(q, vj));
        let (v, p) = add_atom_max(&fixed, vi, li);
        best.offer(v, left_end - p, right_start + q);
    }
}

/// `sqrt(sup_I var_I φ)` over subintervals `I ⊂ [0, 1]`.
pub fn bmo_norm(f: &StepFunction) -> Extremum {
    let lay = Layout::of(f, 1);
    let n = lay.values.len();
    let mut best = Best::new();
    for i in 0..n {
        let mut block = Moments::default();
        for j in i + 1..n {
            pair_max(&lay, i, j, &block, &mut best);
            block = block.merge(&Moments::atom(lay.lengths[j], lay.values[j]));
        }
    }
    if best.interval.is_none() {
        best.offer(0.0, 0.0, 1.0);
    }
    best.finish()
}

/// `sqrt(max var)` over dyadic subintervals of generation at most `depth`.
pub fn bmo_dyadic(f: &StepFunction, depth: u32) -> Result<Extremum> {
    if depth > 30 {
        return Err(Error::param("depth", format!("must be at most 30, got {depth}")));
    }
    let g_int = f.with_space(Space::Interval);
    let mut best = Best::new();
    for g in 0..=depth {
        let count = 1u64 << g;
        let h = 1.0 / count as f64;
        for k in 0..count {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            best.offer(variance(&g_int, a, b)?, a, b);
        }
    }
    Ok(best.finish())
}

/// Constraint `α p + β q + γ0 = 0` intersected with `[0, li] × [0, lj]`.
/// Returns the endpoints of the feasible segment.
fn line_in_box(alpha: f64, beta: f64, gamma0: f64, li: f64, lj: f64) -> Vec<(f64, f64)> {
    let slack = 1e-15 * li.max(lj);
    if alpha == 0.0 && beta == 0.0 {
        return Vec::new();
    }
    if beta == 0.0 {
        let p = -gamma0 / alpha;
        if p < -slack || p > li + slack {
            return Vec::new();
        }
        let p = p.clamp(0.0, li);
        return vec![(p, 0.0), (p, lj)];
    }
    if alpha == 0.0 {
        let q = -gamma0 / beta;
        if q < -slack || q > lj + slack {
            return Vec::new();
        }
        let q = q.clamp(0.0, lj);
        return vec![(0.0, q), (li, q)];
    }
    // q(p) = -(γ0 + α p) / β; restrict p so that q stays in [0, lj].
    let q_of = |p: f64| -(gamma0 + alpha * p) / beta;
    let p_at = |q: f64| -(gamma0 + beta * q) / alpha;
    let (pa, pb) = (p_at(0.0), p_at(lj));
    let lo = pa.min(pb).max(0.0);
    let hi = pa.max(pb).min(li);
    if lo > hi + slack {
        return Vec::new();
    }
    // Clamping may leave the line by up to the slack; callers check the
    // constraint residual.
    let lo = lo.min(li);
    let hi = hi.clamp(lo, li);
    [lo, hi]
        .iter()
        .map(|&p| (p, q_of(p).clamp(0.0, lj)))
        .collect()
}

fn level_range(values: &[f64], lambda: f64) -> (i64, i64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ((lo / lambda).ceil() as i64, (hi / lambda).floor() as i64)
}

/// Constrained sup over intervals starting in pieces `first` and ending in
/// any later piece of the layout.
fn weak_sup(lay: &Layout, first: std::ops::Range<usize>, lambda: f64, max_len: f64) -> Best {
    let n = lay.values.len();
    let (m_lo, m_hi) = level_range(&lay.values, lambda);
    let mut best = Best::new();
    let block_tol = 1e-12;
    for m in m_lo..=m_hi {
        let c = lambda * m as f64;
        let level_tol = 1e-9 * lambda.max(1.0);
        for i in first.clone() {
            let mut block = Moments::default();
            for j in i + 1..n {
                if lay.starts[j] - lay.end(i) > max_len {
                    break;
                }
                let (li, lj) = (lay.lengths[i], lay.lengths[j]);
                let alpha = lay.values[i] - c;
                let beta = lay.values[j] - c;
                let gamma0 = block.mass * (block.mean - c);
                let quad = block.spread_about(c);
                let left_end = lay.end(i);
                let right_start = lay.starts[j];
                let mut offer = |p: f64, q: f64| {
                    let total = p + q + block.mass;
                    if total > 0.0 && total <= max_len {
                        // On tiny intervals the rounded constraint can miss
                        // the level; measure the miss and discount it.
                        let miss = (p * alpha + q * beta + gamma0) / total;
                        if miss.abs() <= level_tol {
                            let v = (p * alpha * alpha + q * beta * beta + quad) / total - miss * miss;
                            best.offer(v, left_end - p, right_start + q);
                        }
                    }
                };
                if alpha == 0.0 && beta == 0.0 {
                    if block.mass > 0.0 && gamma0.abs() <= block_tol * block.mass {
                        offer(0.0, 0.0);
                    }
                } else {
                    let ends = line_in_box(alpha, beta, gamma0, li, lj);
                    for &(p, q) in &ends {
                        offer(p, q);
                    }
                    // On adjacent pieces the constraint passes through the
                    // empty interval, where the ratio is constant along the
                    // line; the far endpoint already carries the value.
                }
                block = block.merge(&Moments::atom(lay.lengths[j], lay.values[j]));
            }
        }
    }
    best
}

/// `sqrt(sup var_I φ)` over intervals `I ⊂ [0, 1]` with `⟨φ⟩_I ∈ λZ`.
/// The supremum over an empty family is zero.
pub fn weak_bmo(f: &StepFunction, lambda: f64) -> Result<Extremum> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let lay = Layout::of(f, 1);
    let n = lay.values.len();
    let best = weak_sup(&lay, 0..n, lambda, f64::INFINITY);
    Ok(if best.interval.is_some() {
        best.finish()
    } else {
        Extremum::EMPTY
    })
}

/// Result of the periodized constrained supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleWeakBmo {
    /// Supremum over intervals of length at most `k_max`.
    pub value: f64,
    pub argmax: Option<(f64, f64)>,
    /// Upper bound for the supremum over all lengths.
    pub upper_bound: f64,
}

/// Constrained supremum over intervals of the periodic extension with
/// length at most `k_max`.
///
/// Longer intervals contain at least `k_max` full periods, and their variance
/// exceeds the global variance by at most `6 max|φ|² / k_max`; that bound is
/// folded into `upper_bound`.
pub fn weak_bmo_circle(f: &StepFunction, lambda: f64, k_max: usize) -> Result<CircleWeakBmo> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let lay = Layout::of(f, k_max + 1);
    let per = f.pieces().len();
    let best = weak_sup(&lay, 0..per, lambda, k_max as f64);
    let sup = if best.interval.is_some() { best.var } else { 0.0 };
    let m = f.max_abs();
    let tail = f.variance() + 6.0 * m * m / k_max as f64;
    Ok(CircleWeakBmo {
        value: sup.sqrt(),
        argmax: best.interval,
        upper_bound: sup.max(tail).sqrt(),
    })
}

/// Sharp constant `e^{-ε} / (1 - ε)` of the classical integral
/// John–Nirenberg inequality, valid for `0 <= ε < 1`.
pub fn jn_classical(epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param(
            "epsilon",
            format!("classical bound needs 0 <= epsilon < 1, got {epsilon}"),
        ));
    }
    Ok((-epsilon).exp() / (1.0 - epsilon))
}

/// Sharp threshold `√2 log 2` of the dyadic inequality.
pub fn dyadic_threshold() -> f64 {
    std::f64::consts::SQRT_2 * std::f64::consts::LN_2
}

/// Sharp constant `e^{-ε/√2} / (2 - e^{ε/√2})` of the dyadic inequality,
/// valid for `0 <= ε < √2 log 2`.
pub fn jn_dyadic(epsilon: f64) -> Result<f64> {
    let limit = dyadic_threshold();
    if !(epsilon >= 0.0 && epsilon < limit) {
        return Err(Error::param(
            "epsilon",
            format!("dyadic bound needs 0 <= epsilon < sqrt(2) ln 2 = {limit}, got {epsilon}"),
        ));
    }
    let e = epsilon / std::f64::consts::SQRT_2;
    Ok((-e).exp() / (2.0 - e.exp()))
}

/// Both sharp constants; requires `ε` below the smaller (dyadic) threshold.
pub fn jn_bounds(epsilon: f64) -> Result<(f64, f64)> {
    Ok((jn_classical(epsilon)?, jn_dyadic(epsilon)?))
}

/// Outcome of a class-membership test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub weak_bmo: f64,
    /// An interval whose variance breaks the bound, when not a member.
    pub witness: Option<(f64, f64)>,
    /// For circle functions: whether the global Bellman point avoids the
    /// interior of the hull.
    pub mean_outside_hull: Option<bool>,
}

/// Default periodization depth for circle membership.
pub const DEFAULT_K_MAX: usize = 16;

/// Tests whether `f` belongs to the class of functions whose lattice-average
/// intervals have oscillation at most `ε` (strictly below with `strict`).
///
/// Non-strict comparison allows the domain's snapping tolerance.
pub fn membership_a(f: &StepFunction, d: &CombDomain, strict: bool) -> Result<Membership> {
    let (weak, argmax) = match f.space() {
        Space::Interval => {
            let e = weak_bmo(f, d.lambda())?;
            (e.value, e.argmax)
        }
        Space::Circle => {
            let e = weak_bmo_circle(f, d.lambda(), DEFAULT_K_MAX)?;
            (e.value, e.argmax)
        }
    };
    let ok = if strict {
        weak < d.epsilon()
    } else {
        weak <= d.epsilon() + d.snap_tol()
    };
    let mean_outside_hull = (f.space() == Space::Circle).then(|| {
        let mean = f.lift().mean();
        !matches!(d.classify(&mean), RegionTag::InteriorHullComponent(_))
    });
    Ok(Membership {
        member: ok && mean_outside_hull.unwrap_or(true),
        weak_bmo: weak,
        witness: if ok { None } else { argmax },
        mean_outside_hull,
    })
}

/// All oscillation quantities of one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub bmo: f64,
    pub bmo_argmax: Option<(f64, f64)>,
    pub bmo_dyadic: f64,
    pub bmo_dyadic_argmax: Option<(f64, f64)>,
    pub weak_bmo: f64,
    pub weak_bmo_argmax: Option<(f64, f64)>,
    /// Present for circle functions.
    pub weak_bmo_upper_bound: Option<f64>,
    pub global_variance: f64,
}

pub fn norm_report(f: &StepFunction, lambda: f64, dyadic_depth: u32, k_max: usize) -> Result<NormReport> {
    let bmo = bmo_norm(f);
    let dyadic = bmo_dyadic(f, dyadic_depth)?;
    let (weak, weak_arg, upper) = match f.space() {
        Space::Interval => {
            let w = weak_bmo(f, lambda)?;
            (w.value, w.argmax, None)
        }
        Space::Circle => {
            let w = weak_bmo_circle(f, lambda, k_max)?;
            (w.value, w.argmax, Some(w.upper_bound))
        }
    };
    Ok(NormReport {
        bmo: bmo.value,
        bmo_argmax: bmo.argmax,
        bmo_dyadic: dyadic.value,
        bmo_dyadic_argmax: dyadic.argmax,
        weak_bmo: weak,
        weak_bmo_argmax: weak_arg,
        weak_bmo_upper_bound: upper,
        global_variance: f.variance(),
    })
}
