use std::f64::consts::PI;

use billiard_weyl::birkhoff::{
    linearized_bounce_map, linearized_bounce_map_factored, monodromy, transverse_jacobians, BounceData, ChordEnd, Mat2,
    OrbitSpec,
};
use billiard_weyl::curvilinear::{corner_coeff_identity, image_area, FlattenMap};
use billiard_weyl::folding::{fold, free_kernel, heat_kernel, signature_ledger, Region};
use billiard_weyl::geometry::{parse_geometry, Boundary, Point};
use billiard_weyl::specfun::integrate_interval;
use billiard_weyl::spectra::rectangle_spectrum;
use billiard_weyl::weyl::{corner_coeffs, smooth_counting, weyl_corner_term, weyl_expansion, BoundaryCondition};
use num_complex::Complex64;
use proptest::prelude::*;

/// Vertices of a convex polygon inscribed in a circle, counterclockwise.
fn convex_polygon() -> impl Strategy<Value = Vec<Point>> {
    (3usize..9, 0.5f64..3.0, -2.0f64..2.0, -2.0f64..2.0).prop_flat_map(|(n, r, cx, cy)| {
        prop::collection::vec(0.2f64..1.0, n).prop_map(move |gaps| {
            let total: f64 = gaps.iter().sum();
            let mut a = 0.0f64;
            gaps.iter()
                .map(|g| {
                    let p = [cx + r * a.cos(), cy + r * a.sin()];
                    a += 2.0 * PI * g / total;
                    p
                })
                .collect()
        })
    })
}

fn moved(pts: &[Point], phi: f64, dx: f64, dy: f64) -> Vec<Point> {
    let (s, c) = phi.sin_cos();
    pts.iter().map(|p| [c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy]).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_bonnet_on_convex_polygons(pts in convex_polygon()) {
        let m = Boundary::polygon(&pts).unwrap().measures();
        let turning: f64 = m.corners.iter().map(|c| PI - c.alpha).sum::<f64>() + m.curvature_integral;
        prop_assert!((turning - 2.0 * PI).abs() < 1e-9, "{turning}");
    }

    #[test]
    fn measures_survive_rigid_motion(pts in convex_polygon(), phi in 0.0f64..6.28, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let a = Boundary::polygon(&pts).unwrap().measures();
        let b = Boundary::polygon(&moved(&pts, phi, dx, dy)).unwrap().measures();
        prop_assert!(close(a.area, b.area, 1e-10));
        prop_assert!(close(a.perimeter, b.perimeter, 1e-10));
        prop_assert_eq!(a.corners.len(), b.corners.len());
        for (p, q) in a.corners.iter().zip(&b.corners) {
            prop_assert!((p.alpha - q.alpha).abs() < 1e-10);
        }
    }

    #[test]
    fn serialize_parse_round_trip(pts in convex_polygon()) {
        let b = Boundary::polygon(&pts).unwrap();
        let back = parse_geometry(&b.serialize()).unwrap();
        let (m, n) = (b.measures(), back.measures());
        prop_assert!(close(m.area, n.area, 1e-12));
        prop_assert!(close(m.perimeter, n.perimeter, 1e-12));
        prop_assert_eq!(m.corners.len(), n.corners.len());
    }

    #[test]
    fn bounce_map_is_area_preserving_and_factorizes(
        v1 in 0.05f64..1.0, v2 in 0.05f64..1.0, l in 0.01f64..5.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0,
        y1 in -2.0f64..2.0,
    ) {
        let m = linearized_bounce_map(v1, v2, l, c1, c2).unwrap();
        let f = linearized_bounce_map_factored(v1, v2, l, c1, c2).unwrap();
        prop_assert!((m.det() - 1.0).abs() < 1e-9 * m.max_abs().powi(2).max(1.0));
        prop_assert!(m.max_diff(&f) < 1e-10 * m.max_abs().max(1.0));
        let (js, jx) = transverse_jacobians(y1, c1, v1, ChordEnd::Start).unwrap();
        prop_assert!((js.det() - 1.0).abs() < 1e-9 * js.max_abs().powi(2).max(1.0));
        prop_assert!((js * jx).max_diff(&Mat2::IDENTITY) < 1e-9 * js.max_abs().max(1.0) * jx.max_abs().max(1.0));
        let (_, j1) = transverse_jacobians(y1, c1, v1, ChordEnd::Start).unwrap();
        let (j2, _) = transverse_jacobians(y1 + l, c2, v2, ChordEnd::Finish).unwrap();
        prop_assert!((j2 * j1).max_diff(&m) < 1e-9 * m.max_abs().max(1.0) * j1.max_abs().max(1.0) * j2.max_abs().max(1.0));
    }

    #[test]
    fn polygonal_orbits_are_pure_shears(
        chords in prop::collection::vec(0.1f64..3.0, 0..6), y0 in 0.0f64..2.0, y1 in 0.0f64..2.0,
        vs in prop::collection::vec(0.1f64..1.0, 7),
    ) {
        let n = chords.len() + 1;
        let orbit = OrbitSpec {
            bounces: (0..n).map(|i| BounceData { s: i as f64, v_perp: vs[i], curvature: 0.0 }).collect(),
            chords: chords.clone(),
            y_first: y0,
            y_last: y1,
            k: 1.0,
        };
        let m = monodromy(&orbit).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let want = Mat2::shear_upper(orbit.total_length()).scale(sign);
        prop_assert!(m.max_diff(&want) < 1e-10, "{m:?} vs {want:?}");
    }

    #[test]
    fn corner_identity_matches_weyl(alpha in 0.05f64..3.14) {
        let id = corner_coeff_identity(alpha).unwrap();
        let w = corner_coeffs(alpha).unwrap().weyl;
        for v in [id.lhs, id.rhs1, id.rhs2] {
            prop_assert!(close(v, w, 1e-12));
        }
    }

    #[test]
    fn weyl_corner_term_decreases_on_obtuse_range(a in 1.5708f64..3.14, b in 1.5708f64..3.14) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(weyl_corner_term(lo) > weyl_corner_term(hi));
        prop_assert!(weyl_corner_term(hi) > 0.0);
    }

    #[test]
    fn counting_difference_integrates_density(pts in convex_polygon(), e1 in 1.0f64..50.0, de in 0.5f64..200.0) {
        let ex = weyl_expansion(&Boundary::polygon(&pts).unwrap().measures(), BoundaryCondition::Dirichlet);
        let e2 = e1 + de;
        let diff = smooth_counting(&ex, e2).unwrap() - smooth_counting(&ex, e1).unwrap();
        let q = integrate_interval(|e| Complex64::new(ex.const_coef + ex.inv_sqrt_coef / e.sqrt(), 0.0), e1, e2, 1e-13).unwrap();
        prop_assert!((diff - q.value.re).abs() < 1e-10 * diff.abs().max(1.0), "{diff} vs {}", q.value.re);
    }

    #[test]
    fn flattening_preserves_area(alpha in 0.3f64..3.1, u0 in -2.0f64..2.0, du in 0.1f64..1.0, v0 in 0.1f64..1.0, dv in 0.1f64..1.0) {
        let m = FlattenMap::new(alpha).unwrap();
        let a = image_area(&m, (u0, u0 + du), (v0, v0 + dv), 2000).unwrap();
        prop_assert!((a - du * dv).abs() < 1e-5, "{a} vs {}", du * dv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rectangle_spectrum_is_symmetric(a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let p = rectangle_spectrum(a, b, 400.0).unwrap();
        let q = rectangle_spectrum(b, a, 400.0).unwrap();
        prop_assert_eq!(p.eigenvalues, q.eigenvalues);
    }

    #[test]
    fn heat_kernel_semigroup(ax in -1.0f64..1.0, ay in -1.0f64..1.0, bx in -1.0f64..1.0, by in -1.0f64..1.0,
                             t1 in 0.05f64..0.5, t2 in 0.05f64..0.5) {
        let mid = [0.5 * (ax + bx), 0.5 * (ay + by)];
        let v = fold(free_kernel(t1), free_kernel(t2), [ax, ay], [bx, by], Region::around(mid, 14.0 * (t1 + t2).sqrt()), 1e-12).unwrap();
        let want = heat_kernel((ax - bx).powi(2) + (ay - by).powi(2), t1 + t2);
        prop_assert!((v - want).abs() < 1e-7 * want, "{v} vs {want}");
    }
}

#[test]
fn neumann_flips_odd_bounce_counts() {
    let d = signature_ledger(BoundaryCondition::Dirichlet);
    let n = signature_ledger(BoundaryCondition::Neumann);
    for (a, b) in d.entries.iter().zip(&n.entries) {
        let sign = if a.bounces % 2 == 1 { -1.0 } else { 1.0 };
        assert_eq!(sign * a.delta_units.to_f64(), b.delta_units.to_f64());
        assert_eq!(sign * a.length_units.to_f64(), b.length_units.to_f64());
        assert_eq!(a.area_units.to_f64(), b.area_units.to_f64());
    }
}

#[test]
fn residual_stable_under_window_doubling() {
    use billiard_weyl::spectra::staircase_residual;
    let sp = rectangle_spectrum(1.0, 2f64.powf(1.0 / 3.0), 5000.0).unwrap();
    let m = Boundary::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 2f64.powf(1.0 / 3.0)], [0.0, 2f64.powf(1.0 / 3.0)]])
        .unwrap()
        .measures();
    let ex = weyl_expansion(&m, BoundaryCondition::Dirichlet);
    let half = staircase_residual(&sp, &ex, (500.0, 2500.0)).unwrap();
    let full = staircase_residual(&sp, &ex, (500.0, 5000.0)).unwrap();
    let spread = 3.0 * (half.stderr.powi(2) + full.stderr.powi(2)).sqrt();
    assert!((half.mean - full.mean).abs() < spread.max(0.02), "{half:?} {full:?}");
}
