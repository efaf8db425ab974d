//! Closed-form Bellman function of the comb domain for `f(x) = e^{μ x1}`.
//!
//! Below the hull the function is affine along a fan of segments at every
//! vertex: the segments join `vertex(n)` to the parabola points `(u, u²)` with
//! `u ∈ [λn - λ/2 - s, λn + λ/2 - s]`. The two extreme segments of a fan lie
//! on the supporting lines of the neighbouring chords, and the right one
//! continues along chord `n` up to `vertex(n + 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CombDomain, PlanePoint, RegionTag};

/// Critical exponent `μ* = (1/λ) log((s + λ/2) / (s - λ/2))`, evaluated as
/// `(2/λ) asinh(λ / 2ε)`.
pub fn mu_critical(lambda: f64, epsilon: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    Ok(2.0 / lambda * (lambda / (2.0 * epsilon)).asinh())
}

/// The segment of the foliation through an evaluated point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationSegment {
    /// First coordinate of the parabola end `(u, u²)`.
    pub u: f64,
    /// Index of the vertex at the other end.
    pub vertex_n: i64,
    /// Barycentric weight of the parabola end.
    pub foot_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub segment: FoliationSegment,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellmanEvaluator {
    domain: CombDomain,
    mu: f64,
    mu_crit: f64,
    s: f64,
    a: f64,
}

impl BellmanEvaluator {
    /// Requires `0 <= μ < μ*`.
    pub fn new(domain: CombDomain, mu: f64) -> Result<Self> {
        let mu_crit = mu_critical(domain.lambda(), domain.epsilon())?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", format!("must be non-negative, got {mu}")));
        }
        if mu >= mu_crit {
            return Err(Error::Supercritical {
                mu,
                mu_critical: mu_crit,
            });
        }
        let s = domain.half_span();
        let t = s + 0.5 * domain.lambda();
        let eps = domain.epsilon();
        Ok(Self {
            domain,
            mu,
            mu_crit,
            s,
            a: (eps / t) * (eps / t),
        })
    }

    pub fn domain(&self) -> &CombDomain {
        &self.domain
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu_critical(&self) -> f64 {
        self.mu_crit
    }

    /// `s = sqrt(λ²/4 + ε²)`.
    pub fn half_span(&self) -> f64 {
        self.s
    }

    /// Ratio `a = (s - λ/2) / (s + λ/2) = e^{-λ μ*}` of the extremal pieces.
    pub fn ratio(&self) -> f64 {
        self.a
    }

    /// Value at `vertex(n)`:
    /// `λ e^{μ(λn + λ/2 - s)} / (λ/2 + s + (λ/2 - s) e^{λμ})`.
    ///
    /// The denominator is rewritten as `(λ/2 + s)(1 - e^{λ(μ - μ*)})` to keep
    /// full relative accuracy as `μ → μ*` and as `λ → 0`.
    pub fn vertex_value(&self, n: i64) -> f64 {
        let lam = self.domain.lambda();
        let one_minus_a = lam / (0.5 * lam + self.s);
        let denom = -(lam * (self.mu - self.mu_crit)).exp_m1();
        one_minus_a * (self.mu * (lam * n as f64 + 0.5 * lam - self.s)).exp() / denom
    }

    /// Evaluates on the closed region between the parabola and the hull
    /// boundary, vertices included.
    pub fn evaluate(&self, p: &PlanePoint) -> Result<Evaluation> {
        let d = &self.domain;
        let reject = |reason: &str| Error::Domain {
            x1: p.x1,
            x2: p.x2,
            reason: reason.into(),
        };
        if !p.is_finite() {
            return Err(reject("non-finite coordinates"));
        }
        match d.classify(p) {
            RegionTag::Outside => Err(reject("below the parabola")),
            RegionTag::InteriorHullComponent(_) => Err(reject("inside the hull of the rays")),
            RegionTag::OnRay(n) => {
                if d.snapped_vertex(p) == Some(n) {
                    Ok(Evaluation {
                        value: self.vertex_value(n),
                        segment: FoliationSegment {
                            u: self.fan_feet(n).1,
                            vertex_n: n,
                            foot_weight: 0.0,
                        },
                    })
                } else {
                    Err(reject("on a forbidden ray above its tip"))
                }
            }
            RegionTag::OnFixedBoundary => {
                let mut e = self.fan_interpolate(p);
                e.value = (self.mu * p.x1).exp();
                e.segment.u = p.x1;
                e.segment.foot_weight = 1.0;
                Ok(e)
            }
            RegionTag::FreeBelowHull | RegionTag::OnChord(_) => Ok(self.fan_interpolate(p)),
        }
    }

    /// Parabola feet of the two extreme segments of fan `n`.
    pub fn fan_feet(&self, n: i64) -> (f64, f64) {
        let lam = self.domain.lambda();
        let c = lam * n as f64 - self.s;
        (c - 0.5 * lam, c + 0.5 * lam)
    }

    fn fan_interpolate(&self, p: &PlanePoint) -> Evaluation {
        let lam = self.domain.lambda();
        let eps2 = self.domain.epsilon().powi(2);
        let gap = p.parabola_gap().max(0.0);
        let c = eps2 - gap;
        let r = (lam * lam + 4.0 * c).max(0.0).sqrt();
        let z_lo = 0.5 * (r - lam);
        // Horizontal offset z from p to the vertex must lie in [z_lo, z_lo + λ].
        let mut n = ((p.x1 + z_lo) / lam).ceil() as i64;
        let mut z = lam * n as f64 - p.x1;
        if z <= 0.0 {
            n += 1;
            z += lam;
        }
        // Slope of the segment in coordinates centred at vertex(n).
        let k = c / z - z;
        let root = (k * k + 4.0 * eps2).sqrt();
        let w = if k > 0.0 {
            -2.0 * eps2 / (k + root)
        } else {
            0.5 * (k - root)
        };
        let beta = (-z / w).clamp(0.0, 1.0);
        let u = w + lam * n as f64;
        let value = beta * (self.mu * u).exp() + (1.0 - beta) * self.vertex_value(n);
        Evaluation {
            value,
            segment: FoliationSegment {
                u,
                vertex_n: n,
                foot_weight: beta,
            },
        }
    }

    /// Draws random chords inside the domain and returns the most negative
    /// midpoint slack `B(mid) - (B(p) + B(q)) / 2`.
    ///
    /// Trial `t` uses stream `t` of a ChaCha generator keyed by `seed`, so
    /// the result does not depend on the thread count.
    pub fn concavity_probe(&self, trials: usize, seed: u64) -> Result<ProbeReport> {
        if trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        let worst = (0..trials)
            .into_par_iter()
            .map(|t| self.probe_trial(seed, t as u64))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .fold(None::<ProbeChord>, |acc, c| match acc {
                Some(a) if a.slack <= c.slack => Some(a),
                _ => Some(c),
            });
        worst
            .map(|w| ProbeReport {
                worst_violation: w.slack.min(0.0),
                worst_chord: w,
                trials,
            })
            .ok_or_else(|| Error::Numerical("no admissible chord could be drawn".into()))
    }

    fn probe_trial(&self, seed: u64, trial: u64) -> Option<ProbeChord> {
        let d = &self.domain;
        let lam = d.lambda();
        let half = 2.0 * lam + d.epsilon();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let sample = |rng: &mut ChaCha8Rng, center: f64, width: f64| {
            let x = center + width * (2.0 * rng.gen::<f64>() - 1.0);
            let low = x * x;
            let high = d.hull_upper(x);
            PlanePoint::new(x, low + rng.gen::<f64>() * (high - low))
        };
        for _ in 0..1000 {
            let p = sample(&mut rng, 0.0, half);
            let local = rng.gen_bool(0.5);
            let q = if local {
                sample(&mut rng, p.x1, 0.5 * lam)
            } else {
                sample(&mut rng, 0.0, half)
            };
            if d.segment_clearance(&p, &q) > 0.0 {
                continue;
            }
            let m = p.lerp(&q, 0.5);
            let (Ok(bp), Ok(bq), Ok(bm)) = (self.evaluate(&p), self.evaluate(&q), self.evaluate(&m))
            else {
                continue;
            };
            return Some(ProbeChord {
                p,
                q,
                slack: bm.value - 0.5 * (bp.value + bq.value),
            });
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeChord {
    pub p: PlanePoint,
    pub q: PlanePoint,
    pub slack: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// Most negative slack, or zero when every chord passed.
    pub worst_violation: f64,
    pub worst_chord: ProbeChord,
    pub trials: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(lambda: f64, epsilon: f64, mu: f64) -> BellmanEvaluator {
        BellmanEvaluator::new(CombDomain::new(lambda, epsilon).unwrap(), mu).unwrap()
    }

    #[test]
    fn mu_critical_unit() {
        let oracle = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((mu_critical(1.0, 1.0).unwrap() - oracle).abs() < 1e-15);
        assert!(mu_critical(0.0, 1.0).is_err());
    }

    #[test]
    fn ratio_identity() {
        let e = ev(0.7, 0.4, 0.1);
        assert!((e.ratio() * (e.domain().lambda() * e.mu_critical()).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_value_matches_literal_formula() {
        let e = ev(1.0, 1.0, 0.5);
        let s = 1.25f64.sqrt();
        let num = (0.5 * (0.5 - s)).exp();
        let den = 0.5 + s + (0.5 - s) * 0.5f64.exp();
        assert!((e.vertex_value(0) - num / den).abs() < 1e-14);
        assert!((e.vertex_value(0) - 1.22552).abs() < 1e-5);
        assert!((e.vertex_value(1) - 0.5f64.exp() * e.vertex_value(0)).abs() < 1e-14);
    }

    #[test]
    fn zero_exponent_gives_one() {
        let e = ev(0.6, 0.9, 0.0);
        for n in -3..=3 {
            assert!((e.vertex_value(n) - 1.0).abs() < 1e-15);
        }
        let p = PlanePoint::new(0.2, 0.3);
        assert!((e.evaluate(&p).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_supercritical() {
        let d = CombDomain::new(1.0, 1.0).unwrap();
        let m = mu_critical(1.0, 1.0).unwrap();
        assert!(matches!(BellmanEvaluator::new(d, m), Err(Error::Supercritical { .. })));
        assert!(BellmanEvaluator::new(d, -0.1).is_err());
    }

    #[test]
    fn boundary_and_vertex() {
        let e = ev(1.0, 1.0, 0.5);
        let t = 0.37;
        assert_eq!(e.evaluate(&PlanePoint::new(t, t * t)).unwrap().value, (0.5 * t).exp());
        let v = e.evaluate(&e.domain().vertex(0)).unwrap();
        assert_eq!(v.value, e.vertex_value(0));
    }

    #[test]
    fn domain_errors() {
        let e = ev(1.0, 1.0, 0.5);
        assert!(e.evaluate(&PlanePoint::new(0.5, 1.8)).is_err());
        assert!(e.evaluate(&PlanePoint::new(0.5, 0.1)).is_err());
        assert!(e.evaluate(&PlanePoint::new(0.0, 5.0)).is_err());
    }

    #[test]
    fn chord_uses_its_own_segment() {
        let e = ev(1.0, 1.0, 0.5);
        let d = e.domain();
        let p = d.vertex(0).lerp(&d.vertex(1), 0.3);
        let r = e.evaluate(&p).unwrap();
        assert_eq!(r.segment.vertex_n, 1);
        assert!((r.segment.u - (0.5 - e.half_span())).abs() < 1e-12);
    }

    #[test]
    fn affine_along_one_segment() {
        let e = ev(0.8, 0.6, 0.7);
        let d = *e.domain();
        let u = 0.8 * 2.0 - e.half_span() + 0.1;
        let foot = PlanePoint::new(u, u * u);
        let top = d.vertex(2);
        let (p, q) = (foot.lerp(&top, 0.2), foot.lerp(&top, 0.9));
        let m = p.lerp(&q, 0.5);
        let slack = e.evaluate(&m).unwrap().value
            - 0.5 * (e.evaluate(&p).unwrap().value + e.evaluate(&q).unwrap().value);
        assert!(slack.abs() < 1e-12);
    }

    #[test]
    fn probe_small() {
        let e = ev(1.0, 1.0, 0.5);
        let r = e.concavity_probe(200, 7).unwrap();
        assert!(r.worst_violation >= -1e-9, "{r:?}");
        assert_eq!(r, e.concavity_probe(200, 7).unwrap());
    }
}
