use weakbmo::bellman::BellmanEvaluator;
use weakbmo::mlcf::{
    chord_audit, compare_comb, counterexample_report, solve, Chord, ChordEnd, CombWindow, EdgeData, NodeKind,
    NodeTag, SolveOptions, SolverDomain, TwoDiskWindow, Window,
};
use weakbmo::{CombDomain, Error, PlanePoint};

/// Rectangle `[0, 2] x [-1, 1]` with affine data on its boundary.
struct Rectangle;

impl Rectangle {
    fn data(p: &PlanePoint) -> f64 {
        0.7 * p.x1 - 1.3 * p.x2 + 0.25
    }
}

impl SolverDomain for Rectangle {
    fn window(&self) -> Window {
        Window {
            x_min: 0.0,
            x_max: 2.0,
            y_min: -1.0,
            y_max: 1.0,
        }
    }

    fn node_kind(&self, p: &PlanePoint) -> NodeKind {
        let w = self.window();
        let edge = [p.x1 - w.x_min, w.x_max - p.x1, p.x2 - w.y_min, w.y_max - p.x2];
        if edge.iter().any(|v| v.abs() < 1e-12) {
            NodeKind::Dirichlet(Self::data(p))
        } else {
            NodeKind::Free
        }
    }

    fn chord(&self, p: &PlanePoint, dir: (f64, f64)) -> Chord {
        let w = self.window();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (o, d, min, max) in [(p.x1, dir.0, w.x_min, w.x_max), (p.x2, dir.1, w.y_min, w.y_max)] {
            if d != 0.0 {
                let (t0, t1) = ((min - o) / d, (max - o) / d);
                lo = lo.max(t0.min(t1));
                hi = hi.min(t0.max(t1));
            }
        }
        let end = |t: f64| ChordEnd {
            t,
            value: Some(Self::data(&PlanePoint::new(p.x1 + t * dir.0, p.x2 + t * dir.1))),
        };
        Chord { lo: end(lo), hi: end(hi) }
    }

    fn band_value(&self, _: &PlanePoint) -> Option<f64> {
        None
    }

    fn contains(&self, p: &PlanePoint) -> bool {
        self.window().contains(p)
    }

    fn data_infimum(&self) -> f64 {
        -2.0
    }
}

fn comb(edge: EdgeData) -> CombWindow {
    let ev = BellmanEvaluator::new(CombDomain::new(1.0, 1.0).unwrap(), 0.5).unwrap();
    CombWindow::new(ev, edge)
}

#[test]
fn affine_data_is_reproduced() {
    let sol = solve(&Rectangle, &SolveOptions::new(24)).unwrap();
    let (err, _) = sol.field.max_deviation(|p| Some(Rectangle::data(p)));
    assert!(err < 1e-6, "{err}");
    assert!(sol.residual < 1e-6);
}

#[test]
fn comb_vertex_at_128() {
    let dom = comb(EdgeData::ClosedForm);
    let (sol, cmp) = compare_comb(&dom, &SolveOptions::new(128)).unwrap();
    let v = sol.field.query(&dom, &PlanePoint::new(0.0, 1.0)).unwrap();
    let exact = dom.evaluator().vertex_value(0);
    assert!((exact - 1.2255).abs() < 1e-4);
    assert!((v - exact).abs() <= cmp.max_error + 1e-12, "{v} vs {exact}");
    assert!(cmp.max_error < 5e-3, "{cmp:?}");
    assert_eq!(cmp.edge_band, 0.0);
    // Computed from below: never above the minimal function.
    assert!(cmp.max_excess <= 1e-12, "{}", cmp.max_excess);
}

#[test]
fn convergence_is_monotone_and_concave() {
    let dom = comb(EdgeData::ClosedForm);
    let opts = SolveOptions::new(64);
    let sol = solve(&dom, &opts).unwrap();
    assert!(sol.history.windows(2).skip(1).all(|w| w[1] <= w[0]), "{:?}", sol.history);
    assert!(sol.residual < opts.tol);
    let audit = chord_audit(&dom, &sol, opts.radius(), 10_000, 3);
    assert!(audit.chords > 0);
    assert!(audit.worst_violation >= -5.0 * opts.tol, "{audit:?}");
}

#[test]
fn dirichlet_nodes_keep_their_data() {
    let dom = TwoDiskWindow::default();
    let sol = solve(&dom, &SolveOptions::new(48)).unwrap();
    let f = &sol.field;
    let mut seen = 0;
    for j in 0..f.ny {
        for i in 0..f.nx {
            let k = f.index(i, j);
            if f.tags[k] != NodeTag::Dirichlet {
                continue;
            }
            let p = f.node(i, j);
            let expect = match dom.node_kind(&p) {
                NodeKind::Dirichlet(v) => v,
                _ => dom.band_value(&p).unwrap(),
            };
            assert_eq!(f.values[k], expect);
            seen += 1;
        }
    }
    assert!(seen > 0);
    let inside = f.values.iter().zip(&f.tags).filter(|(_, t)| **t != NodeTag::Outside);
    assert!(inside.clone().count() > 0);
    assert!(inside.into_iter().all(|(v, _)| v.is_finite()));
}

#[test]
fn query_refines_at_first_order() {
    let dom = comb(EdgeData::ClosedForm);
    let p = PlanePoint::new(0.3, 0.8);
    let exact = dom.evaluator().evaluate(&p).unwrap().value;
    let errors: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&cells| {
            let sol = solve(&dom, &SolveOptions::new(cells)).unwrap();
            (sol.field.query(&dom, &p).unwrap() - exact).abs()
        })
        .collect();
    for (k, e) in errors.iter().enumerate() {
        let h = 2.0 * dom.half_width() / (32 << k) as f64;
        assert!(*e <= h, "{errors:?}");
    }
    assert!(errors[3] < errors[0], "{errors:?}");
    assert!(sol_query_outside_fails(&dom));
}

fn sol_query_outside_fails(dom: &CombWindow) -> bool {
    let sol = solve(dom, &SolveOptions::new(16)).unwrap();
    sol.field.query(dom, &PlanePoint::new(0.5, 0.0)).is_err() && sol.field.query(dom, &PlanePoint::new(50.0, 1.0)).is_err()
}

#[test]
fn thread_count_does_not_change_the_field() {
    let dom = TwoDiskWindow::default();
    let opts = SolveOptions::new(48);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| solve(&dom, &opts)).unwrap();
    let parallel = solve(&dom, &opts).unwrap();
    assert_eq!(serial.iterations, parallel.iterations);
    let same = serial
        .field
        .values
        .iter()
        .zip(&parallel.field.values)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    assert!(same);
    assert_eq!(serial.field.to_csv(), parallel.field.to_csv());
}

#[test]
fn forced_nonconvergence_is_numerical() {
    let opts = SolveOptions {
        tol: 1e-30,
        max_iters: 3,
        ..SolveOptions::new(8)
    };
    let err = solve(&TwoDiskWindow::default(), &opts).unwrap_err();
    assert!(matches!(err, Error::NonConvergence { .. }));
    assert!(err.is_numerical());
    assert!(solve(&Rectangle, &SolveOptions { tol: 0.0, ..SolveOptions::new(8) }).is_err());
    assert!(solve(&Rectangle, &SolveOptions::new(1)).is_err());
}

#[test]
fn field_csv() {
    let sol = solve(&TwoDiskWindow::default(), &SolveOptions::new(16)).unwrap();
    let csv = sol.field.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,x2,tag,value"));
    let rows = sol.field.tags.iter().filter(|t| **t != NodeTag::Outside).count();
    assert_eq!(lines.clone().count(), rows);
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert!(cols[2] == "free" || cols[2] == "dirichlet", "{line}");
        cols[3].parse::<f64>().unwrap();
    }
}

#[test]
fn constant_edges_report_their_band() {
    let dom = comb(EdgeData::Constant(None));
    let (_, cmp) = compare_comb(&dom, &SolveOptions::new(32)).unwrap();
    assert!(cmp.edge_band > 0.0, "{cmp:?}");
    assert!(cmp.max_error.is_finite());
}

#[test]
fn counterexample_at_256() {
    let r = counterexample_report(&SolveOptions::new(256)).unwrap();
    assert_eq!(r.mean, PlanePoint::new(0.0, -0.8));
    assert_eq!(r.mean_f, 0.0);
    assert!(r.member && r.mean_outside_hull);
    assert!((r.obstacle_clearance - 0.1).abs() < 1e-12);
    assert!(r.solver_value < -1e-3, "{}", r.solver_value);
    assert!(r.inequality_fails && r.axiom5_fails);
}
