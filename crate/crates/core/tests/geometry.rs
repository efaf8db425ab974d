use proptest::prelude::*;
use weakbmo::geometry::{check_axioms, Domain, DomainDescriptor, RegionTag};
use weakbmo::{CombDomain, PlanePoint, TwoDiskDomain};

fn unit() -> CombDomain {
    CombDomain::new(1.0, 1.0).unwrap()
}

/// Linear interpolation between the two vertices around `x`.
fn hull_oracle(d: &CombDomain, x: f64) -> f64 {
    let lam = d.lambda();
    let n = (x / lam).floor();
    let (x0, x1) = (n * lam, (n + 1.0) * lam);
    let y = |t: f64| t * t + d.epsilon().powi(2);
    y(x0) + (y(x1) - y(x0)) * (x - x0) / lam
}

#[test]
fn hull_examples() {
    let d = unit();
    assert_eq!(d.hull_upper(0.0), 1.0);
    assert_eq!(d.hull_upper(0.5), hull_oracle(&d, 0.5));
    assert_eq!(d.hull_upper(0.5), 1.5);
    assert_eq!(d.hull_upper(-1.0), 2.0);
}

#[test]
fn classify_examples() {
    let d = unit();
    assert_eq!(d.classify(&PlanePoint::new(0.5, 0.25)), RegionTag::OnFixedBoundary);
    assert_eq!(d.classify(&PlanePoint::new(0.0, 3.0)), RegionTag::OnRay(0));
    assert_eq!(d.classify(&PlanePoint::new(0.5, 1.5)), RegionTag::OnChord(0));
    assert_eq!(d.classify(&PlanePoint::new(0.5, 2.0)), RegionTag::InteriorHullComponent(0));
    assert_eq!(d.classify(&PlanePoint::new(0.5, 0.2)), RegionTag::Outside);
    assert_eq!(d.classify(&PlanePoint::new(0.5, 1.0)), RegionTag::FreeBelowHull);
}

#[test]
fn clearance_examples() {
    let d = unit();
    let c = d.segment_clearance(&PlanePoint::new(-1.0, 1.0), &PlanePoint::new(1.0, 1.0));
    assert!(c.abs() < 1e-15, "{c}");
    assert!(d.segment_clearance(&PlanePoint::new(0.0, 0.0), &PlanePoint::new(0.2, 0.04)) < 0.0);
    assert!(d.segment_clearance(&PlanePoint::new(0.0, 3.0), &PlanePoint::new(1.0, 3.0)) > 0.0);
}

#[test]
fn axioms() {
    for (l, e) in [(1.0, 1.0), (0.5, 0.1)] {
        let r = check_axioms(&Domain::Comb(CombDomain::new(l, e).unwrap()));
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.axioms.len(), 5);
    }
    let r = check_axioms(&Domain::TwoDisk(TwoDiskDomain::default()));
    assert_eq!(r.failures(), vec![5]);
}

#[test]
fn descriptor_json() {
    let comb: DomainDescriptor = serde_json::from_str(r#"{"kind":"comb","lambda":1.0,"epsilon":0.5}"#).unwrap();
    assert!(matches!(comb.build().unwrap(), Domain::Comb(_)));
    let two: DomainDescriptor = serde_json::from_str(r#"{"kind":"two-disk"}"#).unwrap();
    assert!(matches!(two.build().unwrap(), Domain::TwoDisk(_)));
    let bad: DomainDescriptor = serde_json::from_str(r#"{"kind":"comb","lambda":-1.0,"epsilon":0.5}"#).unwrap();
    assert!(bad.build().is_err());
}

#[test]
fn invalid_parameters() {
    assert!(CombDomain::new(0.0, 1.0).is_err());
    assert!(CombDomain::new(1.0, f64::NAN).is_err());
    assert!(CombDomain::with_snap_tol(1.0, 1.0, 0.3).is_err());
}

#[test]
fn vertical_spine_clears_obstacles() {
    let g = TwoDiskDomain::default();
    for i in 0..=200 {
        let p = PlanePoint::new(0.0, -1.0 + i as f64 / 100.0);
        for c in g.centers() {
            assert!(p.distance(&c) - g.obstacle_radius >= 0.1 - 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn hull_is_convex(l in 0.1f64..3.0, e in 0.1f64..3.0, x in -5.0f64..5.0, dy in 0.0f64..2.0, dz in 0.0f64..2.0) {
        let d = CombDomain::new(l, e).unwrap();
        let (y, z) = (x + dy, x + dy + dz);
        if dy + dz > 0.0 {
            let w = dy / (dy + dz);
            let chord = (1.0 - w) * d.hull_upper(x) + w * d.hull_upper(z);
            prop_assert!(d.hull_upper(y) <= chord + 1e-12 * (1.0 + chord.abs()));
        }
        prop_assert!(d.hull_upper(x) >= x * x + e * e - l * l / 4.0 - 1e-12);
        prop_assert!((d.hull_upper(x) - hull_oracle(&d, x)).abs() <= 1e-12 * (1.0 + x * x));
    }

    #[test]
    fn vertices_on_hull(l in 0.1f64..3.0, e in 0.1f64..3.0, n in -20i64..20) {
        let d = CombDomain::new(l, e).unwrap();
        let v = d.vertex(n);
        prop_assert!((v.x2 - (l * l * (n * n) as f64 + e * e)).abs() <= 1e-14 * v.x2);
        prop_assert!((d.hull_upper(v.x1) - v.x2).abs() <= 1e-12 * v.x2);
        prop_assert!(v.x2 > v.x1 * v.x1);
        let (k, c) = d.chord_line(n);
        prop_assert!((k - l * (2 * n + 1) as f64).abs() <= 1e-12 * k.abs().max(1.0));
        let w = d.vertex(n + 1);
        prop_assert!((k * w.x1 + c - w.x2).abs() <= 1e-10 * w.x2);
    }

    #[test]
    fn interior_tags_shift_with_the_lattice(x in -3.0f64..3.0, t in 0.01f64..3.0) {
        let d = CombDomain::new(0.7, 0.6).unwrap();
        let p = PlanePoint::new(x, d.hull_upper(x) + t);
        let q = p.parabolic_shift(0.7);
        match (d.classify(&p), d.classify(&q)) {
            (RegionTag::InteriorHullComponent(n), RegionTag::InteriorHullComponent(m)) => prop_assert_eq!(m, n + 1),
            (RegionTag::OnRay(n), RegionTag::OnRay(m)) => prop_assert_eq!(m, n + 1),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn clearance_symmetric_and_degenerate(x1 in -3.0f64..3.0, h1 in 0.0f64..4.0, x2 in -3.0f64..3.0, h2 in 0.0f64..4.0) {
        let d = unit();
        let p = PlanePoint::new(x1, x1 * x1 + h1);
        let q = PlanePoint::new(x2, x2 * x2 + h2);
        prop_assert!((d.segment_clearance(&p, &q) - d.segment_clearance(&q, &p)).abs() <= 1e-12);
        prop_assert!((d.segment_clearance(&p, &p) - (p.x2 - d.hull_upper(p.x1))).abs() <= 1e-12);
    }
}
