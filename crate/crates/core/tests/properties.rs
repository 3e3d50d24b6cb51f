use bspline_core::basis::{basis, make_clamped_knots, BasisConvention, BasisIndex, KnotVector};
use bspline_core::contours::{contour_moments, hu_moments, log_map, Normalization};
use bspline_core::curve::ConvexHull2;
use bspline_core::fitting::{build_collocation, solve_least_squares, FitProblem};
use bspline_core::subdivision::{subdivide_once, ControlPolygon, RefinementMask};
use bspline_core::{BSplineCurve, ControlPoint};
use nalgebra::{DMatrix, Matrix3, Point3, Vector3};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = ControlPoint> + Clone {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn planar_point() -> impl Strategy<Value = ControlPoint> + Clone {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point3::new(x, y, 0.0))
}

/// Degree, clamped knots and control points of a random curve.
fn curve(points: impl Strategy<Value = ControlPoint> + Clone) -> impl Strategy<Value = BSplineCurve> {
    (1usize..=4).prop_flat_map(move |degree| {
        prop::collection::vec(points.clone(), degree + 1..degree + 10).prop_map(move |cps| {
            let knots = make_clamped_knots(cps.len(), degree + 1).unwrap();
            BSplineCurve::new(degree, knots, cps).unwrap()
        })
    })
}

/// Nondecreasing knots with random spacing, some repeated.
fn random_knots() -> impl Strategy<Value = (usize, KnotVector)> {
    (0usize..=4, 2usize..12).prop_flat_map(|(degree, extra)| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.1..2.0f64], degree + extra + 1).prop_map(move |gaps| {
            let mut acc = 0.0;
            let mut v = Vec::with_capacity(gaps.len() + 1);
            v.push(0.0);
            for g in gaps {
                acc += g;
                v.push(acc);
            }
            (degree, KnotVector::new(v).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn basis_is_nonnegative_and_local((degree, knots) in random_knots(), s in 0.0..1.0f64) {
        let t = knots.values();
        let ts = t[0] + s * (t[t.len() - 1] - t[0]);
        for k in 0..knots.len() - degree - 1 {
            let b = basis(&knots, BasisIndex::new(k, degree), ts, BasisConvention::HALF_OPEN).unwrap();
            prop_assert!(b >= -1e-15);
            if ts < t[k] || ts >= t[k + degree + 1] {
                prop_assert_eq!(b, 0.0);
            }
        }
    }

    #[test]
    fn partition_of_unity_inside_full_support((degree, knots) in random_knots(), s in 0.0..1.0f64) {
        let t = knots.values();
        let (lo, hi) = (t[degree], t[t.len() - degree - 1]);
        prop_assume!(hi > lo);
        let ts = lo + s * (hi - lo);
        let sum: f64 = (0..knots.len() - degree - 1)
            .map(|k| basis(&knots, BasisIndex::new(k, degree), ts, BasisConvention::CLOSED).unwrap())
            .sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "{}", sum);
    }

    #[test]
    fn affine_invariance(c in curve(point()), s in 0.0..1.0f64, a in prop::array::uniform9(-2.0..2.0f64), shift in point()) {
        let m = Matrix3::from_row_slice(&a);
        let map = |p: &ControlPoint| Point3::from(m * p.coords + shift.coords);
        let moved = c.with_control_points(c.control_points().iter().map(map).collect()).unwrap();
        let (lo, hi) = c.domain();
        let ts = lo + s * (hi - lo);
        let lhs = moved.evaluate(ts).unwrap();
        let rhs = map(&c.evaluate(ts).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn moving_one_control_point_changes_only_its_span(c in curve(point()), pick in any::<prop::sample::Index>(), s in 0.0..1.0f64) {
        let k = pick.index(c.control_points().len());
        let mut cps = c.control_points().to_vec();
        cps[k] += Vector3::new(1.0, 2.0, 3.0);
        let moved = c.with_control_points(cps).unwrap();
        let t = c.knots().values();
        let (lo, hi) = c.domain();
        let ts = lo + s * (hi - lo);
        if ts < t[k] || ts > t[k + c.degree() + 1] {
            prop_assert_eq!(moved.evaluate(ts).unwrap(), c.evaluate(ts).unwrap());
        }
    }

    #[test]
    fn samples_stay_in_control_hull(c in curve(planar_point())) {
        let samples = c.sample(200).unwrap();
        prop_assert!(c.convex_hull_contains(&samples).unwrap());
    }

    #[test]
    fn subdivision_stays_in_previous_hull(pts in prop::collection::vec(planar_point(), 4..12), closed in any::<bool>()) {
        let poly = ControlPolygon::new(pts.clone(), closed).unwrap();
        let next = subdivide_once(&poly, &RefinementMask::cubic()).unwrap();
        let hull = ConvexHull2::new(pts.iter().map(|p| [p.x, p.y]));
        for q in &next.points {
            prop_assert!(hull.contains([q.x, q.y], 1e-9));
        }
    }

    #[test]
    fn fit_is_translation_equivariant(c in curve(point()), shift in point()) {
        let n = c.control_points().len();
        let m = 3 * n;
        let (lo, hi) = c.domain();
        let params: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
        let data: Vec<ControlPoint> = params.iter().map(|&t| c.evaluate(t).unwrap()).collect();
        let fit = |d: Vec<ControlPoint>| {
            let p = FitProblem::new(d, params.clone(), c.degree(), c.knots().clone(), n).unwrap();
            solve_least_squares(&p).unwrap().control_points
        };
        let base = fit(data.clone());
        let moved = fit(data.iter().map(|p| p + shift.coords).collect());
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!(((a + shift.coords) - b).norm() < 1e-7);
        }
    }

    #[test]
    fn svd_solution_matches_normal_equations(c in curve(point()), noise in prop::collection::vec(-0.1..0.1f64, 120)) {
        let n = c.control_points().len();
        let m = 4 * n;
        let (lo, hi) = c.domain();
        let params: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
        let data: Vec<ControlPoint> = params
            .iter()
            .enumerate()
            .map(|(i, &t)| c.evaluate(t).unwrap() + Vector3::repeat(noise[i % noise.len()]))
            .collect();
        let problem = FitProblem::new(data.clone(), params.clone(), c.degree(), c.knots().clone(), n).unwrap();
        let sol = solve_least_squares(&problem).unwrap();
        // N = (A^T A)^{-1} A^T D
        let a = build_collocation(&problem);
        let d = DMatrix::from_fn(m, 3, |i, j| data[i][j]);
        let ata = a.transpose() * &a;
        let normal = ata.lu().solve(&(a.transpose() * d)).unwrap();
        for (i, p) in sol.control_points.iter().enumerate() {
            for j in 0..3 {
                prop_assert!((p[j] - normal[(i, j)]).abs() < 1e-6, "{} vs {}", p[j], normal[(i, j)]);
            }
        }
    }

    #[test]
    fn hu_invariants_survive_similarity(
        radii in prop::collection::vec(0.5..1.5f64, 12..40),
        angle in 0.0..std::f64::consts::TAU,
        scale in 0.2..5.0f64,
        dx in -50.0..50.0f64,
        dy in -50.0..50.0f64,
    ) {
        let n = radii.len();
        let poly: Vec<[f64; 2]> = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let (s, c) = angle.sin_cos();
        let moved: Vec<[f64; 2]> = poly
            .iter()
            .map(|[x, y]| [scale * (c * x - s * y) + dx, scale * (s * x + c * y) + dy])
            .collect();
        let a = hu_moments(&contour_moments(&poly).unwrap()).unwrap();
        let b = hu_moments(&contour_moments(&moved).unwrap()).unwrap();
        for i in 0..6 {
            prop_assert!((log_map(a[i]) - log_map(b[i])).abs() < 1e-6, "phi{} {} vs {}", i + 1, a[i], b[i]);
        }
    }

    #[test]
    fn normalization_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 4), 2..30)) {
        if let Ok(norm) = Normalization::fit(&rows) {
            for r in &rows {
                let back = norm.invert(&norm.apply(r));
                for (x, y) in back.iter().zip(r) {
                    prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
                }
            }
        }
    }
}
