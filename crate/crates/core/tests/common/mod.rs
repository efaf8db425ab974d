#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use weakbmo::bellman::mu_critical;
use weakbmo::{CombDomain, Space, StepFunction};

/// Parameter sets `(λ, ε, μ)` used by the population tests.
pub fn parameter_sets() -> Vec<(f64, f64, f64)> {
    [(1.0, 1.0), (0.5, 0.8), (0.3, 0.5)]
        .iter()
        .map(|&(l, e)| (l, e, 0.5 * mu_critical(l, e).unwrap()))
        .collect()
}

/// Plain prefix sums of a step function, kept separate from the library's.
pub struct Naive {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl Naive {
    pub fn of(f: &StepFunction) -> Self {
        let mut edges = vec![0.0];
        let mut acc = 0.0;
        for p in f.pieces() {
            acc += p.length;
            edges.push(acc);
        }
        let total = acc;
        for e in &mut edges {
            *e /= total;
        }
        Self {
            edges,
            values: f.pieces().iter().map(|p| p.value).collect(),
        }
    }

    /// `(∫_0^t φ, ∫_0^t φ²)`.
    pub fn integrals(&self, t: f64) -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let (lo, hi) = (self.edges[i], self.edges[i + 1]);
            if t <= lo {
                break;
            }
            let w = hi.min(t) - lo;
            s1 += w * v;
            s2 += w * v * v;
        }
        (s1, s2)
    }

    pub fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        let (p1, p2) = self.integrals(a);
        let (q1, q2) = self.integrals(b);
        ((q1 - p1) / (b - a), (q2 - p2) / (b - a))
    }

    /// Centred two-pass variance, free of the `⟨φ²⟩ - ⟨φ⟩²` cancellation.
    pub fn variance(&self, a: f64, b: f64) -> f64 {
        let m = self.moments(a, b).0;
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let w = self.edges[i + 1].min(b) - self.edges[i].max(a);
            if w > 0.0 {
                acc += w * (v - m) * (v - m);
            }
        }
        acc / (b - a)
    }

    fn grid(&self, steps: usize) -> Vec<f64> {
        let mut g: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        g.extend_from_slice(&self.edges);
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    /// `sqrt(sup variance)` over pairs drawn from a grid and the breakpoints.
    pub fn bmo_oracle(&self, steps: usize) -> f64 {
        let g = self.grid(steps);
        let mut best = 0.0_f64;
        for (i, &a) in g.iter().enumerate() {
            for &b in &g[i + 1..] {
                best = best.max(self.variance(a, b));
            }
        }
        best.sqrt()
    }

    /// `sqrt(sup variance)` over intervals whose average lies on `λℤ`.
    ///
    /// One endpoint runs over a grid of spacing `1 / steps` and the
    /// breakpoints; for each, the other endpoint is located by scanning the
    /// same grid for crossings of a lattice level and bisecting.
    pub fn weak_bmo_oracle(&self, lambda: f64, steps: usize) -> f64 {
        let g = self.grid(steps);
        let mut best = 0.0_f64;
        let mut consider = |a: f64, b: f64| {
            if b - a > 1e-12 {
                best = best.max(self.variance(a, b));
            }
        };
        for &fixed in &g {
            for left_fixed in [true, false] {
                let avg = |t: f64| {
                    if left_fixed {
                        self.moments(fixed, t).0
                    } else {
                        self.moments(t, fixed).0
                    }
                };
                let span: Vec<f64> = if left_fixed {
                    g.iter().copied().filter(|&t| t > fixed).collect()
                } else {
                    g.iter().copied().filter(|&t| t < fixed).rev().collect()
                };
                if span.is_empty() {
                    continue;
                }
                // Near the fixed end the average is the adjacent value.
                let near = if left_fixed {
                    self.moments(fixed, fixed + 1e-13).0
                } else {
                    self.moments(fixed - 1e-13, fixed).0
                };
                let mut prev_t = fixed;
                let mut prev_v = near;
                for &t in &span {
                    let v = avg(t);
                    let (lo_v, hi_v) = (prev_v.min(v), prev_v.max(v));
                    let m_lo = (lo_v / lambda).ceil() as i64;
                    let m_hi = (hi_v / lambda).floor() as i64;
                    for m in m_lo..=m_hi {
                        let level = m as f64 * lambda;
                        let root = bisect(|s| avg(s) - level, prev_t, t);
                        let (a, b) = if left_fixed { (fixed, root) } else { (root, fixed) };
                        consider(a, b);
                    }
                    prev_t = t;
                    prev_v = v;
                }
            }
        }
        best.sqrt()
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm <= 0.0) == (f_lo <= 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random step function on the interval with `1..=max_pieces` pieces and
/// values in `[-scale, scale]`.
pub fn random_step(rng: &mut ChaCha8Rng, max_pieces: usize, scale: f64) -> StepFunction {
    let n = rng.gen_range(1..=max_pieces);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.05..1.0), rng.gen_range(-scale..scale)))
        .collect();
    let total: f64 = pairs.iter().map(|p| p.0).sum();
    let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(l, v)| (l / total, v)).collect();
    StepFunction::from_pairs(Space::Interval, &pairs).unwrap()
}

/// Random step function with breakpoints at multiples of `2^-depth`.
pub fn random_dyadic_step(rng: &mut ChaCha8Rng, depth: u32, scale: f64) -> StepFunction {
    let cells = 1usize << depth;
    let pairs: Vec<(f64, f64)> = (0..cells)
        .map(|_| (1.0 / cells as f64, rng.gen_range(-scale..scale)))
        .collect();
    StepFunction::from_pairs(Space::Interval, &pairs).unwrap()
}

/// Candidate class members for the comb domain `d`.
///
/// Two families alternate: small random perturbations around a random
/// centre, and arrangements of the two parabola feet of a chord, whose
/// averages all lie on that chord and pass through the vertices.
pub fn candidate_member(rng: &mut ChaCha8Rng, d: &CombDomain) -> StepFunction {
    let lam = d.lambda();
    let eps = d.epsilon();
    let n = rng.gen_range(1..=8usize);
    let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = lengths.iter().sum();
    let values: Vec<f64> = if rng.gen_bool(0.5) {
        let centre = rng.gen_range(-2.0 * lam..2.0 * lam);
        let spread = eps * rng.gen_range(0.2..1.2);
        (0..n).map(|_| centre + rng.gen_range(-spread..spread)).collect()
    } else {
        let k = rng.gen_range(-2..=2) as f64;
        let mid = lam * (k + 0.5);
        let s = d.half_span();
        (0..n)
            .map(|i| if (i + rng.gen_range(0..2)) % 2 == 0 { mid - s } else { mid + s })
            .collect()
    };
    let pairs: Vec<(f64, f64)> = lengths.iter().zip(values).map(|(l, v)| (l / total, v)).collect();
    StepFunction::from_pairs(Space::Interval, &pairs).unwrap()
}
