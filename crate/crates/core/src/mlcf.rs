//! Grid solver for minimal locally concave functions.
//!
//! The unknown is sampled on the nodes of a uniform grid over a rectangular
//! window. For every lattice direction of the stencil and every line of nodes
//! in that direction, the line is cut into its pieces inside the domain. On
//! each piece the values are replaced by their upper concave envelope, where
//! the piece ends carry exact Dirichlet data when they exit through the fixed
//! boundary and no data when they run into an obstacle.
//!
//! Starting below the data, each pass can only raise the field, and every
//! raised value is forced by concavity along some chord. The iteration
//! therefore increases to the smallest grid function that is concave along
//! all stencil lines, which approximates the minimal locally concave function
//! from below.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::BellmanEvaluator;
use crate::error::{Error, Result};
use crate::geometry::{line_disk_interval, CombDomain, PlanePoint, TwoDiskDomain};

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn contains(&self, p: &PlanePoint) -> bool {
        p.x1 >= self.x_min && p.x1 <= self.x_max && p.x2 >= self.y_min && p.x2 <= self.y_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeTag {
    Free,
    Dirichlet,
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Free,
    Dirichlet(f64),
    Outside,
}

/// One end of a chord: its parameter and the boundary value there, if the
/// chord leaves through the fixed boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordEnd {
    pub t: f64,
    pub value: Option<f64>,
}

/// The interval of `p + t * dir` that contains `t = 0` and stays in the
/// closed domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chord {
    pub lo: ChordEnd,
    pub hi: ChordEnd,
}

/// A planar domain with Dirichlet data, as seen by the solver.
pub trait SolverDomain: Sync {
    fn window(&self) -> Window;
    fn node_kind(&self, p: &PlanePoint) -> NodeKind;
    /// Chord through `p` in direction `dir`; `p` must be in the domain.
    fn chord(&self, p: &PlanePoint, dir: (f64, f64)) -> Chord;
    /// Boundary value at the nearest fixed-boundary point, for nodes just
    /// outside the domain. Used only for interpolation.
    fn band_value(&self, p: &PlanePoint) -> Option<f64>;
    /// Whether `p` lies in the closed domain.
    fn contains(&self, p: &PlanePoint) -> bool;
    /// Infimum of the boundary data over the window.
    fn data_infimum(&self) -> f64;
}

/// Accumulates the tightest lower and upper parameter bounds of a chord.
struct ChordBuilder {
    lo: ChordEnd,
    hi: ChordEnd,
}

impl ChordBuilder {
    fn new() -> Self {
        Self {
            lo: ChordEnd {
                t: f64::NEG_INFINITY,
                value: None,
            },
            hi: ChordEnd {
                t: f64::INFINITY,
                value: None,
            },
        }
    }

    fn lower(&mut self, t: f64, value: Option<f64>) {
        if t > self.lo.t {
            self.lo = ChordEnd { t, value };
        }
    }

    fn upper(&mut self, t: f64, value: Option<f64>) {
        if t < self.hi.t {
            self.hi = ChordEnd { t, value };
        }
    }

    fn finish(self) -> Chord {
        let lo = ChordEnd {
            t: self.lo.t.min(0.0),
            ..self.lo
        };
        let hi = ChordEnd {
            t: self.hi.t.max(0.0),
            ..self.hi
        };
        Chord { lo, hi }
    }
}

/// Roots of `a t² + b t + c` in increasing order, computed stably.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a == 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some((r1.min(r2), r1.max(r2)))
}

/// Data on the vertical edges of the comb window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeData {
    /// The closed-form Bellman function.
    ClosedForm,
    /// A constant; `None` uses `sup f + 1` over the window.
    Constant(Option<f64>),
}

/// The comb domain cut to the window `[-kλ, kλ] × [0, k²λ² + ε²]` for `k`
/// lattice periods, with data `e^{μ x1}` on the parabola and artificial data
/// on the vertical edges.
#[derive(Clone, Copy, Debug)]
pub struct CombWindow {
    ev: BellmanEvaluator,
    edge: EdgeData,
    edge_constant: f64,
    half_width: f64,
}

impl CombWindow {
    pub fn new(ev: BellmanEvaluator, edge: EdgeData) -> Self {
        Self::with_periods(ev, edge, 1)
    }

    pub fn with_periods(ev: BellmanEvaluator, edge: EdgeData, periods: u32) -> Self {
        let half_width = ev.domain().lambda() * periods.max(1) as f64;
        let sup_f = (ev.mu() * half_width).exp();
        let edge_constant = match edge {
            EdgeData::Constant(Some(c)) => c,
            _ => sup_f + 1.0,
        };
        Self {
            ev,
            edge,
            edge_constant,
            half_width,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn evaluator(&self) -> &BellmanEvaluator {
        &self.ev
    }

    fn comb(&self) -> &CombDomain {
        self.ev.domain()
    }

    fn f(&self, x1: f64) -> f64 {
        (self.ev.mu() * x1).exp()
    }

    fn edge_value(&self, p: &PlanePoint) -> f64 {
        match self.edge {
            EdgeData::ClosedForm => {
                let x = p.x1.clamp(-self.half_width, self.half_width);
                let y = p.x2.clamp(x * x, self.comb().hull_upper(x));
                self.ev
                    .evaluate(&PlanePoint::new(x, y))
                    .map(|e| e.value)
                    .unwrap_or(self.edge_constant)
            }
            EdgeData::Constant(_) => self.edge_constant,
        }
    }

    /// First parameter in `(0, t_max]` (or `[t_min, 0)` when `forward` is
    /// false) where the line leaves the region below the hull.
    fn hull_exit(&self, p: &PlanePoint, dir: (f64, f64), t_limit: f64, forward: bool) -> Option<f64> {
        let d = self.comb();
        let lam = d.lambda();
        let phi = |t: f64| {
            let x = p.x1 + t * dir.0;
            (p.x2 + t * dir.1) - d.hull_upper(x)
        };
        let tol = 1e-12 * p.x2.abs().max(1.0);
        if dir.0 == 0.0 {
            let g = d.hull_upper(p.x1);
            let step = if forward { dir.1 } else { -dir.1 };
            if step > 0.0 {
                let t = ((g - p.x2) / step).max(0.0);
                return Some(if forward { t } else { -t });
            }
            return None;
        }
        // The distance to the hull is concave and piecewise linear in t,
        // with knots where the line crosses x1 = λk.
        let mut knots: Vec<f64> = Vec::new();
        let x_end = p.x1 + t_limit * dir.0;
        let (xa, xb) = (p.x1.min(x_end), p.x1.max(x_end));
        let k_lo = (xa / lam).ceil() as i64;
        let k_hi = (xb / lam).floor() as i64;
        for k in k_lo..=k_hi {
            let t = (lam * k as f64 - p.x1) / dir.0;
            if (forward && t > 0.0 && t < t_limit) || (!forward && t < 0.0 && t > t_limit) {
                knots.push(t);
            }
        }
        knots.push(t_limit);
        knots.sort_by(|a, b| {
            if forward {
                a.total_cmp(b)
            } else {
                b.total_cmp(a)
            }
        });
        let mut prev_t = 0.0;
        let mut prev = phi(0.0).min(0.0);
        for t in knots {
            let v = phi(t);
            if v > tol {
                let s = if prev < 0.0 { prev / (prev - v) } else { 0.0 };
                return Some(prev_t + s * (t - prev_t));
            }
            prev_t = t;
            prev = v.min(0.0);
        }
        None
    }
}

impl SolverDomain for CombWindow {
    fn window(&self) -> Window {
        let w = self.half_width;
        let eps = self.comb().epsilon();
        Window {
            x_min: -w,
            x_max: w,
            y_min: 0.0,
            y_max: w * w + eps * eps,
        }
    }

    fn node_kind(&self, p: &PlanePoint) -> NodeKind {
        let d = self.comb();
        let w = self.half_width;
        let tol = 1e-12 * p.x2.abs().max(1.0);
        let gap = p.parabola_gap();
        if gap < -tol || p.x2 > d.hull_upper(p.x1) + tol {
            NodeKind::Outside
        } else if gap.abs() <= tol {
            NodeKind::Dirichlet(self.f(p.x1))
        } else if (p.x1.abs() - w).abs() <= 1e-12 * w {
            NodeKind::Dirichlet(self.edge_value(p))
        } else {
            NodeKind::Free
        }
    }

    fn chord(&self, p: &PlanePoint, dir: (f64, f64)) -> Chord {
        let w = self.half_width;
        let mut b = ChordBuilder::new();
        // Parabola: (x + t dx)² - (y + t dy) <= 0.
        let qa = dir.0 * dir.0;
        let qb = 2.0 * p.x1 * dir.0 - dir.1;
        let qc = (-p.parabola_gap()).min(0.0);
        let exit = |t: f64| Some(self.f(p.x1 + t * dir.0));
        if let Some((r1, r2)) = quadratic_roots(qa, qb, qc) {
            b.lower(r1, exit(r1));
            b.upper(r2, exit(r2));
        } else if qa == 0.0 && qb != 0.0 {
            let r = -qc / qb;
            if qb > 0.0 {
                b.upper(r, exit(r));
            } else {
                b.lower(r, exit(r));
            }
        }
        if dir.0 != 0.0 {
            for xe in [-w, w] {
                let t = (xe - p.x1) / dir.0;
                let q = PlanePoint::new(xe, p.x2 + t * dir.1);
                let v = Some(self.edge_value(&q));
                if t >= 0.0 {
                    b.upper(t, v);
                } else {
                    b.lower(t, v);
                }
            }
        }
        let hi_limit = b.hi.t.max(0.0);
        let lo_limit = b.lo.t.min(0.0);
        if hi_limit.is_finite() || dir.0 == 0.0 {
            let lim = if hi_limit.is_finite() { hi_limit } else { f64::MAX };
            if let Some(t) = self.hull_exit(p, dir, lim, true) {
                b.upper(t, None);
            }
        }
        if lo_limit.is_finite() || dir.0 == 0.0 {
            let lim = if lo_limit.is_finite() { lo_limit } else { -f64::MAX };
            if let Some(t) = self.hull_exit(p, dir, lim, false) {
                b.lower(t, None);
            }
        }
        b.finish()
    }

    fn band_value(&self, p: &PlanePoint) -> Option<f64> {
        (p.parabola_gap() < 0.0).then(|| self.f(p.x1))
    }

    fn contains(&self, p: &PlanePoint) -> bool {
        let tol = 1e-12 * p.x2.abs().max(1.0);
        self.window().contains(p)
            && p.parabola_gap() >= -tol
            && p.x2 <= self.comb().hull_upper(p.x1) + tol
    }

    fn data_infimum(&self) -> f64 {
        let w = self.half_width;
        let edge_min = match self.edge {
            EdgeData::Constant(_) => self.edge_constant,
            EdgeData::ClosedForm => self.f(-w),
        };
        self.f(-w).min(edge_min)
    }
}

/// The unit disk with the stadium spanned by the two obstacle disks removed,
/// with data `f(x) = -|x1|` on the unit circle.
#[derive(Clone, Copy, Debug, Default)]
pub struct TwoDiskWindow {
    pub geometry: TwoDiskDomain,
}

impl TwoDiskWindow {
    fn f(&self, p: &PlanePoint) -> f64 {
        -p.x1.abs() / p.x1.hypot(p.x2).max(f64::MIN_POSITIVE)
    }
}

impl SolverDomain for TwoDiskWindow {
    fn window(&self) -> Window {
        let r = self.geometry.outer_radius;
        Window {
            x_min: -r,
            x_max: r,
            y_min: -r,
            y_max: r,
        }
    }

    fn node_kind(&self, p: &PlanePoint) -> NodeKind {
        let g = &self.geometry;
        let r = p.x1.hypot(p.x2);
        let tol = 1e-12;
        if r > g.outer_radius + tol || g.distance_to_spine(p) < g.obstacle_radius - tol {
            NodeKind::Outside
        } else if (r - g.outer_radius).abs() <= tol {
            NodeKind::Dirichlet(self.f(p))
        } else {
            NodeKind::Free
        }
    }

    fn chord(&self, p: &PlanePoint, dir: (f64, f64)) -> Chord {
        let g = &self.geometry;
        let mut b = ChordBuilder::new();
        let origin = PlanePoint::new(0.0, 0.0);
        if let Some((t1, t2)) = line_disk_interval(p, dir, &origin, g.outer_radius) {
            let at = |t: f64| PlanePoint::new(p.x1 + t * dir.0, p.x2 + t * dir.1);
            b.lower(t1.min(0.0), Some(self.f(&at(t1))));
            b.upper(t2.max(0.0), Some(self.f(&at(t2))));
        }
        if let Some((s1, s2)) = g.line_hull_interval(p, dir) {
            // The open stadium (s1, s2) blocks the line on one side of p.
            if s1 >= -1e-12 {
                b.upper(s1.max(0.0), None);
            } else if s2 <= 1e-12 {
                b.lower(s2.min(0.0), None);
            }
        }
        b.finish()
    }

    fn band_value(&self, p: &PlanePoint) -> Option<f64> {
        (p.x1.hypot(p.x2) > self.geometry.outer_radius).then(|| self.f(p))
    }

    fn contains(&self, p: &PlanePoint) -> bool {
        let g = &self.geometry;
        p.x1.hypot(p.x2) <= g.outer_radius + 1e-12 && g.distance_to_spine(p) >= g.obstacle_radius - 1e-12
    }

    fn data_infimum(&self) -> f64 {
        -1.0
    }
}

/// Values and tags on the nodes of a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub window: Window,
    /// Nodes per row and per column.
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub tags: Vec<NodeTag>,
}

impl ScalarField {
    pub fn hx(&self) -> f64 {
        (self.window.x_max - self.window.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.window.y_max - self.window.y_min) / (self.ny - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> PlanePoint {
        PlanePoint::new(
            self.window.x_min + i as f64 * self.hx(),
            self.window.y_min + j as f64 * self.hy(),
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Bilinear interpolation over the cell containing `p`, with the weights
    /// of outside corners dropped and the rest renormalized.
    pub fn query(&self, dom: &dyn SolverDomain, p: &PlanePoint) -> Result<f64> {
        if !p.is_finite() || !self.window.contains(p) || !dom.contains(p) {
            return Err(Error::Domain {
                x1: p.x1,
                x2: p.x2,
                reason: "not in the solver domain".into(),
            });
        }
        let fx = (p.x1 - self.window.x_min) / self.hx();
        let fy = (p.x2 - self.window.y_min) / self.hy();
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (u, v) = (fx - i as f64, fy - j as f64);
        let mut num = 0.0;
        let mut den = 0.0;
        for (di, dj, w) in [
            (0, 0, (1.0 - u) * (1.0 - v)),
            (1, 0, u * (1.0 - v)),
            (0, 1, (1.0 - u) * v),
            (1, 1, u * v),
        ] {
            let k = self.index(i + di, j + dj);
            if self.tags[k] != NodeTag::Outside && w > 0.0 {
                num += w * self.values[k];
                den += w;
            }
        }
        if den == 0.0 {
            return Err(Error::Domain {
                x1: p.x1,
                x2: p.x2,
                reason: "no grid support near the point".into(),
            });
        }
        Ok(num / den)
    }

    /// CSV with columns `x1,x2,tag,value`; outside nodes are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,tag,value\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                let tag = match self.tags[k] {
                    NodeTag::Free => "free",
                    NodeTag::Dirichlet => "dirichlet",
                    NodeTag::Outside => continue,
                };
                let p = self.node(i, j);
                writeln!(out, "{:.16e},{:.16e},{tag},{:.16e}", p.x1, p.x2, self.values[k])
                    .expect("write to string");
            }
        }
        out
    }

    /// Largest `|field - reference|` over free nodes where the reference is
    /// defined, with the node attaining it.
    pub fn max_deviation(&self, reference: impl Fn(&PlanePoint) -> Option<f64>) -> (f64, Option<PlanePoint>) {
        let mut worst = (0.0, None);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                if self.tags[k] != NodeTag::Free {
                    continue;
                }
                let p = self.node(i, j);
                if let Some(r) = reference(&p) {
                    let e = (self.values[k] - r).abs();
                    if e > worst.0 {
                        worst = (e, Some(p));
                    }
                }
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Cells per side; the grid has `cells + 1` nodes per side.
    pub cells: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Largest coordinate of the stencil directions; `None` scales it with
    /// the grid as `max(2, cells / 32)`.
    pub stencil_radius: Option<usize>,
}

impl SolveOptions {
    pub fn new(cells: usize) -> Self {
        Self {
            cells,
            tol: 1e-7,
            max_iters: 2000,
            stencil_radius: None,
        }
    }

    pub fn radius(&self) -> usize {
        self.stencil_radius.unwrap_or((self.cells / 32).max(2))
    }
}

/// Primitive lattice directions `(a, b)` with `max(|a|, |b|) <= radius`, one
/// from each opposite pair.
pub fn stencil(radius: usize) -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let r = radius as i64;
    let mut dirs = Vec::new();
    for a in 0..=r {
        for b in -r..=r {
            if (a == 0 && b <= 0) || gcd(a, b) != 1 {
                continue;
            }
            dirs.push((a, b));
        }
    }
    // Short directions first: they carry information fastest.
    dirs.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
    dirs
}

/// A run of consecutive in-domain nodes along one lattice line, with the
/// chord ends that bound it.
#[derive(Clone, Debug)]
struct Run {
    first: usize,
    stride: isize,
    count: usize,
    lo: ChordEnd,
    hi: ChordEnd,
}

fn build_runs(dom: &dyn SolverDomain, field: &ScalarField, dir: (i64, i64)) -> Vec<Run> {
    let (a, b) = dir;
    let (nx, ny) = (field.nx as i64, field.ny as i64);
    let step = (a as f64 * field.hx(), b as f64 * field.hy());
    let stride = (a + b * nx) as isize;
    let mut starts = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (pi, pj) = (i - a, j - b);
            if pi < 0 || pi >= nx || pj < 0 || pj >= ny {
                starts.push((i, j));
            }
        }
    }
    starts
        .par_iter()
        .flat_map_iter(|&(i0, j0)| {
            let mut runs = Vec::new();
            let mut k = 0i64;
            let inside = |k: i64| {
                let (i, j) = (i0 + k * a, j0 + k * b);
                i >= 0 && i < nx && j >= 0 && j < ny
            };
            while inside(k) {
                let idx = field.index((i0 + k * a) as usize, (j0 + k * b) as usize);
                if field.tags[idx] != NodeTag::Free {
                    k += 1;
                    continue;
                }
                let p = field.node((i0 + k * a) as usize, (j0 + k * b) as usize);
                let chord = dom.chord(&p, step);
                // Extend over the nodes covered by the chord.
                let slack = 1e-9;
                let mut first_k = k;
                while first_k as f64 - 1.0 >= k as f64 + chord.lo.t - slack && inside(first_k - 1) {
                    let q = field.index((i0 + (first_k - 1) * a) as usize, (j0 + (first_k - 1) * b) as usize);
                    if field.tags[q] == NodeTag::Outside {
                        break;
                    }
                    first_k -= 1;
                }
                let mut last_k = k;
                while last_k as f64 + 1.0 <= k as f64 + chord.hi.t + slack && inside(last_k + 1) {
                    let q = field.index((i0 + (last_k + 1) * a) as usize, (j0 + (last_k + 1) * b) as usize);
                    if field.tags[q] == NodeTag::Outside {
                        break;
                    }
                    last_k += 1;
                }
                let shift = (k - first_k) as f64;
                runs.push(Run {
                    first: field.index((i0 + first_k * a) as usize, (j0 + first_k * b) as usize),
                    stride,
                    count: (last_k - first_k + 1) as usize,
                    lo: ChordEnd {
                        t: chord.lo.t + shift,
                        value: chord.lo.value,
                    },
                    hi: ChordEnd {
                        t: chord.hi.t + shift,
                        value: chord.hi.value,
                    },
                });
                k = last_k + 1;
            }
            runs
        })
        .collect()
}

/// Upper concave envelope of the run's data, evaluated at its nodes. Returns
/// the raised free values as `(index, value)`.
fn envelope(run: &Run, values: &[f64], tags: &[NodeTag], out: &mut Vec<(usize, f64)>) {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(run.count + 2);
    let near = 1e-9;
    if let Some(v) = run.lo.value {
        if run.lo.t < -near {
            pts.push((run.lo.t, v));
        }
    }
    for k in 0..run.count {
        let idx = (run.first as isize + k as isize * run.stride) as usize;
        pts.push((k as f64, values[idx]));
    }
    if let Some(v) = run.hi.value {
        if run.hi.t > (run.count - 1) as f64 + near {
            pts.push((run.hi.t, v));
        }
    }
    if pts.len() < 3 {
        return;
    }
    // Monotone chain, upper hull.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut seg = 0;
    for k in 0..run.count {
        let idx = (run.first as isize + k as isize * run.stride) as usize;
        if tags[idx] != NodeTag::Free {
            continue;
        }
        let t = k as f64;
        while seg + 1 < hull.len() - 1 && hull[seg + 1].0 <= t {
            seg += 1;
        }
        let (p, q) = (hull[seg], hull[seg + 1]);
        let env = if q.0 == p.0 {
            p.1.max(q.1)
        } else {
            p.1 + (q.1 - p.1) * (t - p.0) / (q.0 - p.0)
        };
        if env > values[idx] {
            out.push((idx, env));
        }
    }
}

/// Result of a converged solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub field: ScalarField,
    pub iterations: usize,
    /// Largest update of the final pass.
    pub residual: f64,
    /// Largest update of every pass.
    pub history: Vec<f64>,
    pub directions: usize,
}

fn initial_field(dom: &dyn SolverDomain, cells: usize) -> ScalarField {
    let w = dom.window();
    let n = cells + 1;
    let mut field = ScalarField {
        window: w,
        nx: n,
        ny: n,
        values: vec![0.0; n * n],
        tags: vec![NodeTag::Outside; n * n],
    };
    let start = dom.data_infimum();
    for j in 0..n {
        for i in 0..n {
            let k = field.index(i, j);
            let p = field.node(i, j);
            let (tag, v) = match dom.node_kind(&p) {
                NodeKind::Free => (NodeTag::Free, start),
                NodeKind::Dirichlet(v) => (NodeTag::Dirichlet, v),
                NodeKind::Outside => (NodeTag::Outside, f64::NAN),
            };
            field.tags[k] = tag;
            field.values[k] = v;
        }
    }
    // Outside nodes next to the domain carry the nearest boundary value, so
    // that interpolation near the fixed boundary stays accurate.
    let snapshot = field.tags.clone();
    for j in 0..n {
        for i in 0..n {
            let k = field.index(i, j);
            if snapshot[k] != NodeTag::Outside {
                continue;
            }
            let touches = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                a >= 0 && b >= 0 && a < n as i64 && b < n as i64 && snapshot[field.index(a as usize, b as usize)] == NodeTag::Free
            });
            if touches {
                if let Some(v) = dom.band_value(&field.node(i, j)) {
                    field.tags[k] = NodeTag::Dirichlet;
                    field.values[k] = v;
                }
            }
        }
    }
    field
}

/// Iterates the line envelopes to a fixpoint.
///
/// Within one direction all lines are processed from the same field and the
/// updates applied together; directions are applied in a fixed order. The
/// result is therefore independent of the thread count.
pub fn solve(dom: &dyn SolverDomain, opts: &SolveOptions) -> Result<Solution> {
    if opts.cells < 2 {
        return Err(Error::param("grid", "needs at least 2 cells per side"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut field = initial_field(dom, opts.cells);
    // Band nodes are for interpolation only; hide them from the sweeps.
    let sweep_tags: Vec<NodeTag> = field
        .tags
        .iter()
        .zip(&field.values)
        .enumerate()
        .map(|(k, (&t, _))| {
            let (i, j) = (k % field.nx, k / field.nx);
            if t == NodeTag::Dirichlet && !dom.contains(&field.node(i, j)) {
                NodeTag::Outside
            } else {
                t
            }
        })
        .collect();
    let sweep_view = ScalarField {
        tags: sweep_tags.clone(),
        ..field.clone()
    };
    let dirs = stencil(opts.radius());
    let runs: Vec<Vec<Run>> = dirs.iter().map(|&d| build_runs(dom, &sweep_view, d)).collect();

    let mut history = Vec::new();
    for iter in 1..=opts.max_iters {
        let mut max_update = 0.0_f64;
        for dir_runs in &runs {
            let values = &field.values;
            let updates: Vec<(usize, f64)> = dir_runs
                .par_iter()
                .fold(Vec::new, |mut acc, run| {
                    envelope(run, values, &sweep_tags, &mut acc);
                    acc
                })
                .reduce(Vec::new, |mut a, mut b| {
                    a.append(&mut b);
                    a
                });
            for (idx, v) in updates {
                let old = field.values[idx];
                if v > old {
                    max_update = max_update.max(v - old);
                    field.values[idx] = v;
                }
            }
        }
        history.push(max_update);
        if max_update < opts.tol {
            return Ok(Solution {
                field,
                iterations: iter,
                residual: max_update,
                history,
                directions: dirs.len(),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Outcome of the post-convergence chord audit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordAudit {
    pub chords: usize,
    /// Most negative `G(mid) - (G(p) + G(q)) / 2`, or zero.
    pub worst_violation: f64,
}

/// Samples lattice chords `[p, p + 2k d]` inside the domain along stencil
/// directions and checks the midpoint inequality at the node `p + k d`.
pub fn chord_audit(dom: &dyn SolverDomain, sol: &Solution, radius: usize, samples: usize, seed: u64) -> ChordAudit {
    let f = &sol.field;
    let dirs = stencil(radius);
    let free: Vec<(usize, usize)> = (0..f.ny)
        .flat_map(|j| (0..f.nx).map(move |i| (i, j)))
        .filter(|&(i, j)| f.tags[f.index(i, j)] == NodeTag::Free)
        .collect();
    let worst = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            for _ in 0..200 {
                let (i, j) = free[rng.gen_range(0..free.len())];
                let (a, b) = dirs[rng.gen_range(0..dirs.len())];
                let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                let (a, b) = (a * sign, b * sign);
                let k = rng.gen_range(1..=8i64);
                let (qi, qj) = (i as i64 + 2 * k * a, j as i64 + 2 * k * b);
                if qi < 0 || qj < 0 || qi >= f.nx as i64 || qj >= f.ny as i64 {
                    continue;
                }
                let p = f.node(i, j);
                let chord = dom.chord(&p, (a as f64 * f.hx(), b as f64 * f.hy()));
                if chord.hi.t < 2.0 * k as f64 - 1e-9 {
                    continue;
                }
                let (mi, mj) = ((i as i64 + k * a) as usize, (j as i64 + k * b) as usize);
                let q = f.index(qi as usize, qj as usize);
                let m = f.index(mi, mj);
                if f.tags[q] == NodeTag::Outside {
                    continue;
                }
                let slack = f.values[m] - 0.5 * (f.values[f.index(i, j)] + f.values[q]);
                return Some(slack);
            }
            None
        })
        .collect::<Vec<_>>();
    let drawn: Vec<f64> = worst.into_iter().flatten().collect();
    ChordAudit {
        chords: drawn.len(),
        worst_violation: drawn.iter().copied().fold(0.0, f64::min),
    }
}

/// Errors above this count as edge effects when locating the edge band.
pub const EDGE_BAND_THRESHOLD: f64 = 2e-2;

/// Distance between a comb-window solution and the closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombComparison {
    pub cells: usize,
    pub iterations: usize,
    /// Largest `|field - closed form|` over all free nodes.
    pub max_error: f64,
    pub argmax: Option<PlanePoint>,
    /// Largest `field - closed form`; the iteration approaches from below,
    /// so this should be rounding-sized.
    pub max_excess: f64,
    /// Width of the strip along the vertical edges outside which the error
    /// stays below [`EDGE_BAND_THRESHOLD`].
    pub edge_band: f64,
    /// Largest error outside the edge band.
    pub interior_error: f64,
}

pub fn compare_comb(dom: &CombWindow, opts: &SolveOptions) -> Result<(Solution, CombComparison)> {
    let ev = dom.evaluator();
    let sol = solve(dom, opts)?;
    let f = &sol.field;
    let mut samples = Vec::new();
    for j in 0..f.ny {
        for i in 0..f.nx {
            let k = f.index(i, j);
            if f.tags[k] != NodeTag::Free {
                continue;
            }
            let p = f.node(i, j);
            if let Ok(e) = ev.evaluate(&p) {
                samples.push((p, f.values[k] - e.value));
            }
        }
    }
    let depth = |p: &PlanePoint| dom.half_width() - p.x1.abs();
    let mut cmp = CombComparison {
        cells: opts.cells,
        iterations: sol.iterations,
        max_error: 0.0,
        argmax: None,
        max_excess: f64::NEG_INFINITY,
        edge_band: 0.0,
        interior_error: 0.0,
    };
    for (p, diff) in &samples {
        cmp.max_excess = cmp.max_excess.max(*diff);
        if diff.abs() > cmp.max_error {
            cmp.max_error = diff.abs();
            cmp.argmax = Some(*p);
        }
        if diff.abs() > EDGE_BAND_THRESHOLD {
            cmp.edge_band = cmp.edge_band.max(depth(p));
        }
    }
    cmp.interior_error = samples
        .iter()
        .filter(|(p, _)| depth(p) > cmp.edge_band)
        .map(|(_, d)| d.abs())
        .fold(0.0, f64::max);
    Ok((sol, cmp))
}

/// The two-disk counterexample: a class member whose average violates the
/// Bellman inequality on a domain without a common supporting line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    /// Masses of the values `(0, -1)` and `(0, 1)`.
    pub masses: (f64, f64),
    /// Smallest distance from a subinterval average to the obstacles.
    pub obstacle_clearance: f64,
    pub member: bool,
    pub mean: PlanePoint,
    pub mean_outside_hull: bool,
    /// Vertical extent of the hull on the line `x1 = 0`.
    pub hull_extent: (f64, f64),
    pub mean_f: f64,
    pub cells: usize,
    pub iterations: usize,
    pub residual: f64,
    pub solver_value: f64,
    pub inequality_fails: bool,
    pub axiom5_fails: bool,
}

pub fn counterexample_report(opts: &SolveOptions) -> Result<CounterexampleReport> {
    let dom = TwoDiskWindow::default();
    let g = dom.geometry;
    let (lo, hi) = (PlanePoint::new(0.0, -1.0), PlanePoint::new(0.0, 1.0));
    let masses = (0.9, 0.1);
    // Every subinterval average is a mixture of the two values, so it lies
    // on the segment between them, i.e. on the line x1 = 0.
    let obstacle_clearance = g
        .centers()
        .iter()
        .map(|c| c.x1.abs() - g.obstacle_radius)
        .fold(f64::INFINITY, f64::min);
    let mean = lo.lerp(&hi, masses.1);
    let extent = g
        .line_hull_interval(&PlanePoint::new(0.0, 0.0), (0.0, 1.0))
        .unwrap_or((0.0, 0.0));
    let mean_outside_hull = !g.in_hull(&mean);
    let f = |p: &PlanePoint| -p.x1.abs();
    // Adding zero turns a negative zero into a positive one.
    let mean_f = masses.0 * f(&lo) + masses.1 * f(&hi) + 0.0;
    let sol = solve(&dom, opts)?;
    let value = sol.field.query(&dom, &mean)?;
    let axioms = crate::geometry::check_axioms(&crate::geometry::Domain::TwoDisk(g));
    Ok(CounterexampleReport {
        masses,
        obstacle_clearance,
        member: obstacle_clearance > 0.0,
        mean,
        mean_outside_hull,
        hull_extent: extent,
        mean_f,
        cells: opts.cells,
        iterations: sol.iterations,
        residual: sol.residual,
        solver_value: value,
        inequality_fails: value < mean_f,
        axiom5_fails: axioms.failures() == vec![5],
    })
}
