//! Step functions on `[0, 1]` and on the circle `R / Z`.
//!
//! Averages are computed exactly from piecewise-linear prefix integrals, so
//! every average costs one binary search per endpoint.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PlanePoint;

/// Shortest interval over which an average is returned, relative to the
/// size of its endpoints (and absolute near 1).
pub const MIN_INTERVAL: f64 = 1e-13;

/// Shortest admissible length of an interval with endpoints `a` and `b`.
///
/// Near zero floats are dense, so deep self-similar pieces stay resolvable.
pub fn min_length(a: f64, b: f64) -> f64 {
    MIN_INTERVAL * a.abs().max(b.abs()).max(1e-150)
}

/// Slack allowed on the total length before renormalization.
pub const LENGTH_SUM_TOL: f64 = 1e-9;

/// Underlying measure space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    #[serde(alias = "Interval")]
    Interval,
    #[serde(alias = "Circle")]
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub length: f64,
    pub value: f64,
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Cumulative integrals of two coordinates of a step function.
///
/// For a real function the coordinates are `φ` and `φ²`; for a plane-valued
/// function they are its two components.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixSums {
    breakpoints: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    slopes: Vec<(f64, f64)>,
}

impl PrefixSums {
    fn new(lengths: &[f64], slopes: Vec<(f64, f64)>) -> Self {
        let n = lengths.len();
        let mut breakpoints = Vec::with_capacity(n + 1);
        let mut p1 = Vec::with_capacity(n + 1);
        let mut p2 = Vec::with_capacity(n + 1);
        let (mut t, mut s1, mut s2) = (
            CompensatedSum::default(),
            CompensatedSum::default(),
            CompensatedSum::default(),
        );
        breakpoints.push(0.0);
        p1.push(0.0);
        p2.push(0.0);
        for (len, &(c1, c2)) in lengths.iter().zip(&slopes) {
            t.add(*len);
            s1.add(len * c1);
            s2.add(len * c2);
            breakpoints.push(t.value());
            p1.push(s1.value());
            p2.push(s2.value());
        }
        breakpoints[n] = 1.0;
        Self {
            breakpoints,
            p1,
            p2,
            slopes,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Index of the piece containing `t ∈ [0, 1]`; right-continuous, with
    /// `t = 1` assigned to the last piece.
    pub fn piece_index(&self, t: f64) -> usize {
        let n = self.slopes.len();
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        idx.clamp(1, n) - 1
    }

    /// `(P1(t), P2(t))` for `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, 1.0);
        let i = self.piece_index(t);
        let dt = t - self.breakpoints[i];
        let (c1, c2) = self.slopes[i];
        (self.p1[i] + c1 * dt, self.p2[i] + c2 * dt)
    }

    /// Prefix integrals extended to the real line by periodicity:
    /// `P(t) = floor(t) P(1) + P(frac t)`.
    pub fn eval_periodic(&self, t: f64) -> (f64, f64) {
        let k = t.floor();
        let (f1, f2) = self.eval(t - k);
        let n = self.slopes.len();
        (k * self.p1[n] + f1, k * self.p2[n] + f2)
    }

    /// `(∫_a^b, ∫_a^b)` of the two coordinates for `0 <= a <= b <= 1`.
    ///
    /// Short ranges are summed piece by piece, which stays accurate for tiny
    /// intervals where differencing the prefix sums would cancel.
    pub fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        let (i, j) = (self.piece_index(a), self.piece_index(b));
        if j - i > 64 {
            let ((a1, a2), (b1, b2)) = (self.eval(a), self.eval(b));
            return (b1 - a1, b2 - a2);
        }
        let (mut s1, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
        for k in i..=j {
            let w = b.min(self.breakpoints[k + 1]) - a.max(self.breakpoints[k]);
            if w > 0.0 {
                let (c1, c2) = self.slopes[k];
                s1.add(w * c1);
                s2.add(w * c2);
            }
        }
        (s1.value(), s2.value())
    }

    /// Totals `(P1(1), P2(1))`.
    pub fn totals(&self) -> (f64, f64) {
        let n = self.slopes.len();
        (self.p1[n], self.p2[n])
    }
}

fn check_interval(space: Space, a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || b - a < min_length(a, b) {
        return Err(Error::DegenerateInterval { a, b });
    }
    if space == Space::Interval && (a < 0.0 || b > 1.0) {
        return Err(Error::Precondition(format!(
            "interval [{a}, {b}] is not contained in [0, 1]"
        )));
    }
    Ok(())
}

fn average_pair(prefix: &PrefixSums, space: Space, a: f64, b: f64) -> Result<(f64, f64)> {
    check_interval(space, a, b)?;
    let len = b - a;
    let shift = a.floor();
    let (s1, s2) = if space == Space::Interval || b - shift <= 1.0 {
        let a0 = if space == Space::Interval { a } else { a - shift };
        prefix.integral(a0, a0 + len.min(1.0 - a0))
    } else {
        let ((a1, a2), (b1, b2)) = (prefix.eval_periodic(a), prefix.eval_periodic(b));
        (b1 - a1, b2 - a2)
    };
    Ok((s1 / len, s2 / len))
}

fn validate_lengths(pieces: &[Piece]) -> Result<Vec<f64>> {
    if pieces.is_empty() {
        return Err(Error::Validation {
            path: "pieces".into(),
            reason: "at least one piece is required".into(),
        });
    }
    for (i, p) in pieces.iter().enumerate() {
        if !(p.length.is_finite() && p.length > 0.0) {
            return Err(Error::Validation {
                path: format!("pieces[{i}].length"),
                reason: format!("must be positive and finite, got {}", p.length),
            });
        }
    }
    let total = compensated_sum(pieces.iter().map(|p| p.length));
    if (total - 1.0).abs() > LENGTH_SUM_TOL + 4.0 * f64::EPSILON {
        return Err(Error::Validation {
            path: "pieces".into(),
            reason: format!("lengths sum to {total}, expected 1 within {LENGTH_SUM_TOL:e}"),
        });
    }
    Ok(pieces.iter().map(|p| p.length / total).collect())
}

/// A real-valued step function of total length one.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    space: Space,
    pieces: Vec<Piece>,
    prefix: PrefixSums,
}

impl StepFunction {
    /// Validates and renormalizes the pieces so their lengths sum to one.
    pub fn new(space: Space, pieces: Vec<Piece>) -> Result<Self> {
        let lengths = validate_lengths(&pieces)?;
        for (i, p) in pieces.iter().enumerate() {
            if !p.value.is_finite() {
                return Err(Error::Validation {
                    path: format!("pieces[{i}].value"),
                    reason: format!("must be finite, got {}", p.value),
                });
            }
        }
        let pieces: Vec<Piece> = lengths
            .iter()
            .zip(&pieces)
            .map(|(&length, p)| Piece {
                length,
                value: p.value,
            })
            .collect();
        let slopes = pieces.iter().map(|p| (p.value, p.value * p.value)).collect();
        let prefix = PrefixSums::new(&lengths, slopes);
        Ok(Self {
            space,
            pieces,
            prefix,
        })
    }

    /// Convenience constructor from `(length, value)` pairs.
    pub fn from_pairs(space: Space, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            space,
            pairs
                .iter()
                .map(|&(length, value)| Piece { length, value })
                .collect(),
        )
    }

    pub fn constant(space: Space, value: f64) -> Result<Self> {
        Self::from_pairs(space, &[(1.0, value)])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn prefix(&self) -> &PrefixSums {
        &self.prefix
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.prefix.breakpoints()
    }

    /// Same pieces viewed on the other space.
    pub fn with_space(&self, space: Space) -> Self {
        Self {
            space,
            ..self.clone()
        }
    }

    /// Value at `t`, right-continuous; periodic on the circle.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = match self.space {
            Space::Interval => t.clamp(0.0, 1.0),
            Space::Circle => t - t.floor(),
        };
        self.pieces[self.prefix.piece_index(t)].value
    }

    pub fn max_abs(&self) -> f64 {
        self.pieces.iter().map(|p| p.value.abs()).fold(0.0, f64::max)
    }

    /// `⟨φ⟩` over `[a, b]`.
    pub fn average(&self, a: f64, b: f64) -> Result<f64> {
        Ok(average_pair(&self.prefix, self.space, a, b)?.0)
    }

    /// `(⟨φ⟩, ⟨φ²⟩)` over `[a, b]`: the Bellman point of the interval.
    pub fn bellman_point(&self, a: f64, b: f64) -> Result<PlanePoint> {
        let (m1, m2) = average_pair(&self.prefix, self.space, a, b)?;
        Ok(PlanePoint::new(m1, m2))
    }

    /// Mean over the whole space.
    pub fn mean(&self) -> f64 {
        self.prefix.totals().0
    }

    /// Variance over the whole space.
    pub fn variance(&self) -> f64 {
        let (m1, m2) = self.prefix.totals();
        (m2 - m1 * m1).max(0.0)
    }

    /// `⟨e^{μφ}⟩` over the whole space.
    pub fn exp_mean(&self, mu: f64) -> f64 {
        compensated_sum(self.pieces.iter().map(|p| p.length * (mu * p.value).exp()))
    }

    /// The plane-valued function `ψ = (φ, φ²)`.
    pub fn lift(&self) -> PlaneStepFunction {
        PlaneStepFunction {
            space: self.space,
            values: self
                .pieces
                .iter()
                .map(|p| PlanePoint::new(p.value, p.value * p.value))
                .collect(),
            lengths: self.pieces.iter().map(|p| p.length).collect(),
            prefix: self.prefix.clone(),
        }
    }

    /// Bellman-diagram curve `t ↦ (⟨φ⟩_{[0,t]}, ⟨φ²⟩_{[0,t]})`.
    pub fn gamma(&self, t: f64) -> Result<PlanePoint> {
        gamma_impl(&self.prefix, t, |i| {
            let v = self.pieces[i].value;
            PlanePoint::new(v, v * v)
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawStepFunction = serde_json::from_str(text).map_err(|e| Error::Validation {
            path: json_error_path(&e),
            reason: e.to_string(),
        })?;
        Self::new(raw.space, raw.pieces)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawStepFunction {
            space: self.space,
            pieces: self.pieces.clone(),
        })
        .expect("step functions always serialize")
    }
}

fn json_error_path(e: &serde_json::Error) -> String {
    format!("line {} column {}", e.line(), e.column())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepFunction {
    space: Space,
    pieces: Vec<Piece>,
}

fn gamma_impl(
    prefix: &PrefixSums,
    t: f64,
    first_value: impl Fn(usize) -> PlanePoint,
) -> Result<PlanePoint> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Precondition(format!("gamma needs 0 < t <= 1, got {t}")));
    }
    if t <= prefix.breakpoints()[1] {
        return Ok(first_value(0));
    }
    let (m1, m2) = average_pair(prefix, Space::Interval, 0.0, t)?;
    Ok(PlanePoint::new(m1, m2))
}

/// A plane-valued step function of total length one.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneStepFunction {
    space: Space,
    values: Vec<PlanePoint>,
    lengths: Vec<f64>,
    prefix: PrefixSums,
}

impl PlaneStepFunction {
    pub fn new(space: Space, pieces: Vec<(f64, PlanePoint)>) -> Result<Self> {
        let raw: Vec<Piece> = pieces
            .iter()
            .map(|&(length, _)| Piece { length, value: 0.0 })
            .collect();
        let lengths = validate_lengths(&raw)?;
        for (i, (_, v)) in pieces.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Validation {
                    path: format!("pieces[{i}].value"),
                    reason: "must be finite".into(),
                });
            }
        }
        let values: Vec<PlanePoint> = pieces.iter().map(|&(_, v)| v).collect();
        let prefix = PrefixSums::new(&lengths, values.iter().map(|v| (v.x1, v.x2)).collect());
        Ok(Self {
            space,
            values,
            lengths,
            prefix,
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[PlanePoint] {
        &self.values
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn prefix(&self) -> &PrefixSums {
        &self.prefix
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.prefix.breakpoints()
    }

    pub fn average(&self, a: f64, b: f64) -> Result<PlanePoint> {
        let (m1, m2) = average_pair(&self.prefix, self.space, a, b)?;
        Ok(PlanePoint::new(m1, m2))
    }

    pub fn mean(&self) -> PlanePoint {
        let (m1, m2) = self.prefix.totals();
        PlanePoint::new(m1, m2)
    }

    pub fn gamma(&self, t: f64) -> Result<PlanePoint> {
        gamma_impl(&self.prefix, t, |i| self.values[i])
    }

    /// CSV samples of the curve with columns `t,x1,x2`.
    pub fn gamma_csv(&self, ts: &[f64]) -> Result<String> {
        let mut out = String::from("t,x1,x2\n");
        for &t in ts {
            let p = self.gamma(t)?;
            writeln!(out, "{:.16e},{:.16e},{:.16e}", t, p.x1, p.x2).expect("write to string");
        }
        Ok(out)
    }
}
