//! Constructive splitting and the Bellman induction.
//!
//! A split of `[a, b]` at `c` produces the Bellman points `x₊` of `[a, c]` and
//! `x₋` of `[c, b]`. It is admissible when the chord `[x₊, x₋]` does not enter
//! the interior of the hull of the forbidden rays. Along admissible chords the
//! Bellman function is concave, so the Bellman sums
//! `Σ |J| 𝔅(x_J)` over the current intervals never increase.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::BellmanEvaluator;
use crate::error::{Error, Result};
use crate::geometry::{CombDomain, PlanePoint, RegionTag};
use crate::oscillation::{membership_a, Membership};
use crate::rootfind::bisect_predicate;
use crate::stepfn::{compensated_sum, PlaneStepFunction, Space, StepFunction, min_length};

/// Largest clearance accepted for a split chord.
pub const CLEARANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCase {
    /// The parent point lies strictly below the hull.
    A,
    /// The parent point lies on a supporting line; the prefix curve starts
    /// on the side of the rays.
    BAbove,
    /// As `BAbove`, with the prefix curve starting on the far side.
    BBelow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    /// Split point relative to the interval, in `(0, 1)`.
    pub t0: f64,
    /// Absolute split point.
    pub at: f64,
    pub case: SplitCase,
    pub left_avg: PlanePoint,
    pub right_avg: PlanePoint,
    /// `segment_clearance(left_avg, right_avg)`.
    pub clearance: f64,
}

/// True when `psi` is constant on `(a, b)`.
pub fn is_constant_on(psi: &PlaneStepFunction, a: f64, b: f64) -> bool {
    let i = psi.prefix().piece_index(a);
    let j = psi.prefix().piece_index(b - 0.5 * (b - a).min(min_length(a, b)));
    let v = psi.values();
    (i..=j).all(|k| v[k] == v[i])
}

fn finish_split(
    d: &CombDomain,
    psi: &PlaneStepFunction,
    a: f64,
    b: f64,
    c: f64,
    case: SplitCase,
) -> Result<SplitResult> {
    let left_avg = psi.average(a, c)?;
    let right_avg = psi.average(c, b)?;
    Ok(SplitResult {
        t0: (c - a) / (b - a),
        at: c,
        case,
        left_avg,
        right_avg,
        clearance: d.segment_clearance(&left_avg, &right_avg),
    })
}

fn admissible(d: &CombDomain, s: &SplitResult) -> bool {
    let inside = |p: &PlanePoint| matches!(d.classify(p), RegionTag::InteriorHullComponent(_));
    s.clearance <= CLEARANCE_TOL && !inside(&s.left_avg) && !inside(&s.right_avg)
}

/// Splits `[a, b]` so that the chord between the children's Bellman points
/// avoids the interior of the hull.
pub fn split(psi: &PlaneStepFunction, a: f64, b: f64, d: &CombDomain) -> Result<SplitResult> {
    if !(b - a >= 4.0 * min_length(a, b)) {
        return Err(Error::DegenerateInterval { a, b });
    }
    let x = psi.average(a, b)?;
    let mid = a + 0.5 * (b - a);
    if is_constant_on(psi, a, b) {
        return finish_split(d, psi, a, b, mid, SplitCase::A);
    }
    match d.classify(&x) {
        RegionTag::InteriorHullComponent(_) | RegionTag::Outside => Err(Error::Precondition(format!(
            "average ({}, {}) of [{a}, {b}] is not in the closed domain below the hull",
            x.x1, x.x2
        ))),
        RegionTag::OnChord(n) => split_on_hull(psi, a, b, d, &x, n),
        RegionTag::OnRay(n) if d.snapped_vertex(&x) == Some(n) => split_at_vertex(psi, a, b, d, &x, n),
        RegionTag::OnRay(_) => Err(Error::Precondition(format!(
            "average ({}, {}) of [{a}, {b}] lies on a forbidden ray",
            x.x1, x.x2
        ))),
        RegionTag::FreeBelowHull | RegionTag::OnFixedBoundary => {
            match split_below(psi, a, b, d, &x) {
                Ok(s) => Ok(s),
                Err(e) => {
                    // A point within rounding of the hull behaves as if on it.
                    if d.hull_upper(x.x1) - x.x2 > 1e-9 * x.x2.abs().max(1.0) {
                        return Err(e);
                    }
                    split_on_hull(psi, a, b, d, &x, (x.x1 / d.lambda()).floor() as i64)
                }
            }
        }
    }
}

/// Split of an interval whose average lies on chord `n` up to rounding.
///
/// Close to an end of the chord, rounding can put the average on either
/// side of the vertex, so the vertex split is tried as well.
fn split_on_hull(
    psi: &PlaneStepFunction,
    a: f64,
    b: f64,
    d: &CombDomain,
    x: &PlanePoint,
    n: i64,
) -> Result<SplitResult> {
    split_on_line(psi, a, b, d, x, &[n]).or_else(|e| {
        let m = (x.x1 / d.lambda()).round() as i64;
        if x.distance(&d.vertex(m)) <= 1e-6 * (1.0 + x.x2.abs()) {
            split_at_vertex(psi, a, b, d, x, m)
        } else {
            Err(e)
        }
    })
}

fn split_below(
    psi: &PlaneStepFunction,
    a: f64,
    b: f64,
    d: &CombDomain,
    x: &PlanePoint,
) -> Result<SplitResult> {
    let len = b - a;
    let mid = a + 0.5 * len;
    // Rounding allowance for chords that touch the hull at a vertex.
    let slack = (1e-12 * (1.0 + x.x2.abs())).min(0.5 * CLEARANCE_TOL);
    let first = finish_split(d, psi, a, b, mid, SplitCase::A)?;
    if first.clearance <= slack && admissible(d, &first) {
        return Ok(first);
    }
    let xtol = (1e-12 * len).max(min_length(a, b));
    let left_blocked = d.segment_clearance(&first.left_avg, x) > slack;
    let c = if left_blocked {
        // Move the split toward b until [x₊(c), x] clears the hull.
        let clear = |c: f64| {
            psi.average(a, c)
                .map(|p| d.segment_clearance(&p, x) <= slack)
                .unwrap_or(false)
        };
        let hi = bracket(&clear, |k| b - 0.5 * len * 0.5f64.powi(k), b - xtol).map_err(|e| context(e, a, b, x))?;
        bisect_predicate(clear, mid, hi, xtol)
    } else {
        let clear = |c: f64| {
            psi.average(c, b)
                .map(|p| d.segment_clearance(x, &p) <= slack)
                .unwrap_or(false)
        };
        let lo = bracket(&clear, |k| a + 0.5 * len * 0.5f64.powi(k), a + xtol).map_err(|e| context(e, a, b, x))?;
        bisect_predicate(clear, mid, lo, xtol)
    };
    let s = finish_split(d, psi, a, b, c, SplitCase::A)?;
    if admissible(d, &s) {
        Ok(s)
    } else {
        Err(Error::Numerical(format!(
            "case A split of [{a}, {b}] at {c} leaves clearance {:e}",
            s.clearance
        )))
    }
}

fn context(e: Error, a: f64, b: f64, x: &PlanePoint) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("{msg} (interval [{a}, {b}], average ({}, {}))", x.x1, x.x2)),
        other => other,
    }
}

/// Steps `probe(1), probe(2), …` toward the interval end until `ok` holds.
fn bracket(ok: &impl Fn(f64) -> bool, probe: impl Fn(i32) -> f64, limit: f64) -> Result<f64> {
    for k in 1..60 {
        let c = probe(k);
        let past = if limit > probe(0) { c > limit } else { c < limit };
        if past {
            break;
        }
        if ok(c) {
            return Ok(c);
        }
    }
    if ok(limit) {
        return Ok(limit);
    }
    Err(Error::Numerical("no admissible split point found near the interval end".into()))
}

/// Scaled signed distances of the prefix averages to a supporting line:
/// `N(c) = (c - a) (x2 - k x1 - c0)` for the average over `[a, c]`.
fn line_numerator<'a>(
    psi: &'a PlaneStepFunction,
    a: f64,
    d: &CombDomain,
    n: i64,
) -> impl Fn(f64) -> f64 + 'a {
    let (k, c0) = d.chord_line(n);
    move |t: f64| {
        let (s1, s2) = psi.prefix().integral(a, t.max(a));
        s2 - k * s1 - c0 * (t - a)
    }
}

fn knots_in(psi: &PlaneStepFunction, a: f64, b: f64) -> Vec<f64> {
    let mut knots = vec![a];
    knots.extend(psi.breakpoints().iter().copied().filter(|&t| t > a && t < b));
    knots.push(b);
    knots
}

/// Split of an interval whose average sits at `vertex(n)`.
///
/// Both chords adjacent to the vertex support the hull there, and so does
/// every line through the vertex with a slope between theirs. The chord
/// through the vertex is admissible exactly when the prefix average lies in
/// that double cone, i.e. when the two line numerators do not share a strict
/// sign. Both numerators are linear between breakpoints, so the admissible
/// set is a finite union of intervals computed exactly.
fn split_at_vertex(
    psi: &PlaneStepFunction,
    a: f64,
    b: f64,
    d: &CombDomain,
    x: &PlanePoint,
    n: i64,
) -> Result<SplitResult> {
    let len = b - a;
    let lo = a + 2.0 * min_length(a, b);
    let hi = b - (1e-9 * len).max(2.0 * min_length(a, b));
    let right = line_numerator(psi, a, d, n);
    let left = line_numerator(psi, a, d, n - 1);
    let first = psi.values()[psi.prefix().piece_index(a)];
    let (k, c0) = d.chord_line(n);
    let case = if first.x2 - (k * first.x1 + c0) > 0.0 {
        SplitCase::BAbove
    } else {
        SplitCase::BBelow
    };
    let mid = a + 0.5 * len;
    let mut points = knots_in(psi, a, b);
    let knots = points.clone();
    for w in knots.windows(2) {
        for f in [&right, &left] {
            let (f0, f1) = (f(w[0]), f(w[1]));
            if f0 != f1 {
                let t = w[0] + f0 / (f0 - f1) * (w[1] - w[0]);
                if t > w[0] && t < w[1] {
                    points.push(t);
                }
            }
        }
    }
    points.push(mid);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut candidates = vec![mid];
    for w in points.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        if right(m) * left(m) <= 0.0 {
            candidates.push(m);
        }
    }
    for c in candidates.into_iter().filter(|&c| c >= lo && c <= hi) {
        let s = finish_split(d, psi, a, b, c, case)?;
        if admissible(d, &s) {
            return Ok(s);
        }
    }
    let order = if first.x1 > x.x1 { [n, n - 1] } else { [n - 1, n] };
    split_on_line(psi, a, b, d, x, &order)
}

/// Case B: finds `c` with the average over `[a, c]` on the supporting line of
/// one of the given chords.
///
/// Scaled by `c - a`, the signed vertical distance of that average to the
/// line is piecewise linear in `c`, so its zeros are found exactly piece by
/// piece.
fn split_on_line(
    psi: &PlaneStepFunction,
    a: f64,
    b: f64,
    d: &CombDomain,
    x: &PlanePoint,
    chords: &[i64],
) -> Result<SplitResult> {
    let knots = knots_in(psi, a, b);
    let len = b - a;
    let lo = a + 2.0 * min_length(a, b);
    let hi = b - (1e-9 * len).max(2.0 * min_length(a, b));
    let mut last_err = None;
    for &n in chords {
        let (k, c0) = d.chord_line(n);
        let numer = line_numerator(psi, a, d, n);
        let scale = 1e-12 * (1.0 + x.x2.abs() + k.abs() * x.x1.abs());
        let values: Vec<f64> = knots.iter().map(|&t| numer(t)).collect();
        let mut candidates = Vec::new();
        for i in 0..knots.len() - 1 {
            let (t0, t1) = (knots[i], knots[i + 1]);
            let (n0, n1) = (values[i], values[i + 1]);
            let z0 = i == 0 || n0.abs() <= scale * (t0 - a);
            let z1 = n1.abs() <= scale * (t1 - a);
            if i == 0 && z1 {
                // The first piece lies on the line: any point of it works.
                candidates.push(t1.min(a + 0.5 * len));
            }
            if !z0 && !z1 && n0.signum() != n1.signum() {
                candidates.push(t0 + n0 / (n0 - n1) * (t1 - t0));
            }
            if z1 {
                candidates.push(t1);
            }
        }
        let first = psi.values()[psi.prefix().piece_index(a)];
        let case = if first.x2 - (k * first.x1 + c0) > 0.0 {
            SplitCase::BAbove
        } else {
            SplitCase::BBelow
        };
        candidates.sort_by(f64::total_cmp);
        for c in candidates.into_iter().filter(|&c| c >= lo && c <= hi) {
            let s = finish_split(d, psi, a, b, c, case)?;
            if admissible(d, &s) {
                return Ok(s);
            }
            last_err = Some(s.clearance);
        }
    }
    Err(Error::Numerical(format!(
        "no admissible split on the supporting line through ({}, {}) for [{a}, {b}]; best clearance {:?}",
        x.x1, x.x2, last_err
    )))
}

/// One interval of a generation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub a: f64,
    pub b: f64,
    pub x: PlanePoint,
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    /// All intervals of the generation, sorted by left endpoint; they
    /// partition `[0, 1]`.
    pub intervals: Vec<IntervalRecord>,
    /// `Σ_leaves |J| f(x_J) + Σ_frontier |J| 𝔅(x_J)`.
    pub bellman_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionTrace {
    pub generations: Vec<Generation>,
    pub leaf_mass: f64,
    pub frontier_mass: f64,
    /// `Σ_leaves |J| f(x_J)`.
    pub final_sum_f: f64,
    /// Largest clearance over all splits performed.
    pub max_split_clearance: f64,
    /// Largest `|(c - a) x₊ + (b - c) x₋ - (b - a) x|` over all splits.
    pub max_recombination_error: f64,
    pub splits: usize,
}

impl InductionTrace {
    pub fn bellman_sums(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.bellman_sum).collect()
    }

    /// Smallest `B_k - B_{k+1}`; non-negative when the sums never increase.
    pub fn monotonicity_slack(&self) -> f64 {
        self.bellman_sums()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `generation,a,b,x1,x2,leaf,bellman_sum`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,a,b,x1,x2,leaf,bellman_sum\n");
        for (k, g) in self.generations.iter().enumerate() {
            for r in &g.intervals {
                writeln!(
                    out,
                    "{k},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                    r.a, r.b, r.x.x1, r.x.x2, r.leaf, g.bellman_sum
                )
                .expect("write to string");
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionOptions {
    pub max_depth: usize,
    /// Stop once the unresolved mass falls below this.
    pub mass_tol: f64,
}

impl Default for InductionOptions {
    fn default() -> Self {
        Self {
            max_depth: 60,
            mass_tol: 1e-12,
        }
    }
}

/// Runs the splitting cascade from `[0, 1]` until every interval lies in a
/// single piece, the depth cap is reached, or the unresolved mass drops
/// below the tolerance.
///
/// Each unresolved interval contains a breakpoint, so a generation never has
/// more unresolved intervals than `psi` has pieces.
pub fn induct(psi: &PlaneStepFunction, ev: &BellmanEvaluator, opts: &InductionOptions) -> Result<InductionTrace> {
    let d = ev.domain();
    let mu = ev.mu();
    let psi = if psi.space() == Space::Circle {
        PlaneStepFunction::new(
            Space::Interval,
            psi.lengths().iter().copied().zip(psi.values().iter().copied()).collect(),
        )?
    } else {
        psi.clone()
    };
    let record = |a: f64, b: f64| -> Result<IntervalRecord> {
        let x = psi.average(a, b)?;
        Ok(IntervalRecord {
            a,
            b,
            x,
            leaf: is_constant_on(&psi, a, b),
        })
    };
    let leaf_value = |r: &IntervalRecord| (r.b - r.a) * (mu * r.x.x1).exp();
    let bellman_sum = |leaves: &[IntervalRecord], frontier: &[IntervalRecord]| -> Result<f64> {
        let mut terms: Vec<f64> = leaves.iter().map(leaf_value).collect();
        for r in frontier {
            terms.push((r.b - r.a) * ev.evaluate(&r.x)?.value);
        }
        Ok(compensated_sum(terms))
    };
    let snapshot = |leaves: &[IntervalRecord], frontier: &[IntervalRecord]| -> Result<Generation> {
        let mut intervals: Vec<IntervalRecord> = leaves.iter().chain(frontier).copied().collect();
        intervals.sort_by(|p, q| p.a.total_cmp(&q.a));
        Ok(Generation {
            intervals,
            bellman_sum: bellman_sum(leaves, frontier)?,
        })
    };

    let root = record(0.0, 1.0)?;
    let (mut leaves, mut frontier) = if root.leaf {
        (vec![root], Vec::new())
    } else {
        (Vec::new(), vec![root])
    };
    let mut generations = vec![snapshot(&leaves, &frontier)?];
    let mut max_clearance = f64::NEG_INFINITY;
    let mut max_recombination = 0.0_f64;
    let mut splits = 0;
    let mass = |v: &[IntervalRecord]| compensated_sum(v.iter().map(|r| r.b - r.a));

    for _ in 0..opts.max_depth {
        if frontier.is_empty() || mass(&frontier) < opts.mass_tol {
            break;
        }
        let (splittable, stuck): (Vec<IntervalRecord>, Vec<IntervalRecord>) = frontier
            .iter()
            .partition(|r| r.b - r.a >= 4.0 * min_length(r.a, r.b));
        if splittable.is_empty() {
            break;
        }
        let results: Vec<Result<SplitResult>> = splittable
            .par_iter()
            .map(|r| split(&psi, r.a, r.b, d))
            .collect();
        let mut next = stuck;
        for (r, s) in splittable.iter().zip(results) {
            let s = s?;
            splits += 1;
            max_clearance = max_clearance.max(s.clearance);
            let (wl, wr, w) = (s.at - r.a, r.b - s.at, r.b - r.a);
            let e1 = (wl * s.left_avg.x1 + wr * s.right_avg.x1 - w * r.x.x1).abs();
            let e2 = (wl * s.left_avg.x2 + wr * s.right_avg.x2 - w * r.x.x2).abs();
            max_recombination = max_recombination.max(e1.max(e2));
            for child in [
                IntervalRecord {
                    a: r.a,
                    b: s.at,
                    x: s.left_avg,
                    leaf: is_constant_on(&psi, r.a, s.at),
                },
                IntervalRecord {
                    a: s.at,
                    b: r.b,
                    x: s.right_avg,
                    leaf: is_constant_on(&psi, s.at, r.b),
                },
            ] {
                if child.leaf {
                    leaves.push(child);
                } else {
                    next.push(child);
                }
            }
        }
        frontier = next;
        generations.push(snapshot(&leaves, &frontier)?);
    }

    Ok(InductionTrace {
        generations,
        leaf_mass: mass(&leaves),
        frontier_mass: mass(&frontier),
        final_sum_f: compensated_sum(leaves.iter().map(leaf_value)),
        max_split_clearance: if splits == 0 { 0.0 } else { max_clearance },
        max_recombination_error: max_recombination,
        splits,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainInequalityReport {
    pub verdict: Verdict,
    pub reason: String,
    pub membership: Membership,
    pub mean_point: PlanePoint,
    /// `𝔅(⟨ψ⟩)`.
    pub bellman_value: Option<f64>,
    /// `⟨e^{μφ}⟩`, summed directly over the pieces.
    pub exp_mean: f64,
    /// `𝔅(⟨ψ⟩) - ⟨e^{μφ}⟩`.
    pub margin: Option<f64>,
    pub bellman_sums: Vec<f64>,
    pub frontier_mass: f64,
    pub max_split_clearance: Option<f64>,
    pub monotonicity_slack: Option<f64>,
}

/// Margin below which the inequality is reported as violated.
pub const MARGIN_TOL: f64 = 1e-8;

/// Membership test, position check of `⟨ψ⟩`, induction and verdict.
///
/// For functions on the interval, membership does not place `⟨ψ⟩` outside
/// the hull, so such inputs are skipped. For functions on the circle the
/// position is a consequence of membership; finding `⟨ψ⟩` inside the hull is
/// reported as a failure.
pub fn verify_main_inequality(
    phi: &StepFunction,
    ev: &BellmanEvaluator,
    opts: &InductionOptions,
) -> Result<MainInequalityReport> {
    let d = ev.domain();
    let membership = membership_a(phi, d, false)?;
    let psi = phi.lift();
    let mean_point = psi.mean();
    let exp_mean = phi.exp_mean(ev.mu());
    let mut report = MainInequalityReport {
        verdict: Verdict::Skipped,
        reason: String::new(),
        membership,
        mean_point,
        bellman_value: None,
        exp_mean,
        margin: None,
        bellman_sums: Vec::new(),
        frontier_mass: 1.0,
        max_split_clearance: None,
        monotonicity_slack: None,
    };
    let inside = matches!(d.classify(&mean_point), RegionTag::InteriorHullComponent(_));
    if phi.space() == Space::Circle && inside {
        report.verdict = Verdict::Fail;
        report.reason = "circle member whose global Bellman point lies inside the hull".into();
        return Ok(report);
    }
    if !membership.weak_bmo.is_finite() || membership.weak_bmo > d.epsilon() + d.snap_tol() {
        report.reason = format!(
            "not in the class: weak oscillation {} exceeds epsilon {}",
            membership.weak_bmo,
            d.epsilon()
        );
        return Ok(report);
    }
    if inside {
        report.reason = "global Bellman point lies inside the hull".into();
        return Ok(report);
    }
    let trace = induct(&psi, ev, opts)?;
    let b0 = trace.bellman_sums()[0];
    let margin = b0 - exp_mean;
    let slack = trace.monotonicity_slack();
    report.bellman_value = Some(b0);
    report.margin = Some(margin);
    report.frontier_mass = trace.frontier_mass;
    report.max_split_clearance = Some(trace.max_split_clearance);
    report.monotonicity_slack = slack.is_finite().then_some(slack);
    report.bellman_sums = trace.bellman_sums();
    let mut problems = Vec::new();
    if margin < -MARGIN_TOL {
        problems.push(format!("margin {margin:e} below -{MARGIN_TOL:e}"));
    }
    if trace.max_split_clearance > CLEARANCE_TOL {
        problems.push(format!("split clearance {:e}", trace.max_split_clearance));
    }
    if slack < -1e-9 {
        problems.push(format!("Bellman sums increased by {:e}", -slack));
    }
    if problems.is_empty() {
        report.verdict = Verdict::Pass;
        report.reason = format!("inequality holds with margin {margin:e}");
    } else {
        report.verdict = Verdict::Fail;
        report.reason = problems.join("; ");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::ExtremalSpec;

    fn unit_ev(mu: f64) -> BellmanEvaluator {
        BellmanEvaluator::new(CombDomain::new(1.0, 1.0).unwrap(), mu).unwrap()
    }

    #[test]
    fn constant_is_single_leaf() {
        let phi = StepFunction::constant(Space::Interval, 0.3).unwrap();
        let ev = unit_ev(0.5);
        let t = induct(&phi.lift(), &ev, &InductionOptions::default()).unwrap();
        assert_eq!(t.generations.len(), 1);
        assert_eq!(t.final_sum_f, (0.5f64 * 0.3).exp());
        assert_eq!(t.frontier_mass, 0.0);
    }

    #[test]
    fn two_piece_vertex_case_b() {
        let phi = StepFunction::from_pairs(Space::Interval, &[(0.5, -1.0), (0.5, 1.0)]).unwrap();
        let d = CombDomain::new(1.0, 1.0).unwrap();
        let s = split(&phi.lift(), 0.0, 1.0, &d).unwrap();
        assert_ne!(s.case, SplitCase::A);
        assert!(s.clearance <= CLEARANCE_TOL);
        assert!(s.t0 > 0.0 && s.t0 < 1.0);
    }

    #[test]
    fn extremal_split_at_vertex() {
        let spec = ExtremalSpec::with_default_pieces(1.0, 1.0).unwrap();
        let d = spec.domain();
        let s = split(&spec.build().lift(), 0.0, 1.0, &d).unwrap();
        assert!(s.clearance <= CLEARANCE_TOL);
    }

    #[test]
    fn below_hull_split() {
        let phi = StepFunction::from_pairs(Space::Interval, &[(0.3, 0.0), (0.4, 0.5), (0.3, 0.2)]).unwrap();
        let d = CombDomain::new(1.0, 1.0).unwrap();
        let s = split(&phi.lift(), 0.0, 1.0, &d).unwrap();
        assert_eq!(s.case, SplitCase::A);
        assert_eq!(s.t0, 0.5);
    }

    #[test]
    fn interior_average_rejected() {
        let phi = StepFunction::from_pairs(Space::Interval, &[(0.5, -2.0), (0.5, 3.0)]).unwrap();
        let d = CombDomain::new(1.0, 1.0).unwrap();
        assert!(matches!(split(&phi.lift(), 0.0, 1.0, &d), Err(Error::Precondition(_))));
    }

    #[test]
    fn extremal_is_sharp() {
        let spec = ExtremalSpec::with_default_pieces(1.0, 1.0).unwrap();
        let ev = unit_ev(0.5);
        let r = verify_main_inequality(&spec.build(), &ev, &InductionOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.margin.unwrap().abs() < 1e-6);
    }

    #[test]
    fn non_member_skipped() {
        let phi = StepFunction::from_pairs(Space::Interval, &[(0.5, -1.0), (0.5, 1.0)]).unwrap();
        let ev = BellmanEvaluator::new(CombDomain::new(1.0, 0.5).unwrap(), 0.5).unwrap();
        let r = verify_main_inequality(&phi, &ev, &InductionOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Skipped);
        assert!(r.membership.witness.is_some());
    }
}
