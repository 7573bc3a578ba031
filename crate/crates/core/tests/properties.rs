use proptest::prelude::*;

use mountain_pass::clarke::{self, GradientHull, HullParams, PseudoGradient};
use mountain_pass::classifier::{tangency_residual, TangencyResidual};
use mountain_pass::deformation::{build_descent_field, flow, DescentParams};
use mountain_pass::field::CorpusMember;
use mountain_pass::linalg;
use mountain_pass::minimax::PLPath;
use mountain_pass::ScalarField;

fn point(dim: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, dim)
}

fn hull_strategy() -> impl Strategy<Value = GradientHull> {
    (1usize..=5).prop_flat_map(|dim| {
        prop::collection::vec(point(dim, -3.0, 3.0), 1..=12)
            .prop_map(move |g| GradientHull::from_generators(vec![0.0; dim], g, 0.0))
    })
}

/// Hull, direction pair and a positive scale of matching dimension.
fn tuple_strategy() -> impl Strategy<Value = (GradientHull, Vec<f64>, Vec<f64>, f64)> {
    hull_strategy().prop_flat_map(|h| {
        let d = h.dim();
        (Just(h), point(d, -2.0, 2.0), point(d, -2.0, 2.0), 1e-3f64..50.0)
    })
}

/// Rounding bound for `max_w <w, x>` when `x` was itself rounded once per
/// coordinate.
fn slack(h: &GradientHull, x: &[f64]) -> f64 {
    let gamma = 2.0 * (x.len() as f64 + 2.0) * f64::EPSILON;
    h.generators
        .iter()
        .map(|w| w.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * gamma
}

fn smooth_members() -> Vec<CorpusMember> {
    CorpusMember::ALL.into_iter().filter(|m| m.is_smooth()).collect()
}

proptest! {
    #[test]
    fn exact_gradient_matches_finite_differences(x in point(3, -2.0, 2.0)) {
        for m in CorpusMember::ALL {
            let f = ScalarField::from_member(m, 3).unwrap();
            // Keep the difference stencil off the kinks of the nonsmooth members.
            if !m.is_smooth() && (x[0].abs() < 1e-3 || (x[0] * x[0] - 1.0).abs() < 1e-3) {
                continue;
            }
            let g = f.gradient(&x).unwrap();
            let fd = f.fd_gradient(&x).unwrap();
            let err = linalg::dist(&g, &fd);
            prop_assert!(err <= 1e-5 * (1.0 + linalg::norm(&g)), "{:?} at {:?}: {}", m, x, err);
        }
    }

    #[test]
    fn evaluation_is_bitwise_deterministic(x in point(2, -5.0, 5.0)) {
        let f = ScalarField::from_expr("x1 + x1^2*x2 - abs(x2) + max(x1, x2)^2", 2).unwrap();
        prop_assert_eq!(f.eval(&x).unwrap().to_bits(), f.eval(&x).unwrap().to_bits());
        let g = ScalarField::corpus("broughton", 2).unwrap();
        prop_assert_eq!(g.eval(&x).unwrap().to_bits(), g.eval(&x).unwrap().to_bits());
    }

    #[test]
    fn directional_upper_is_sublinear((h, v, u, t) in tuple_strategy()) {
        let vu = linalg::add(&v, &u);
        let abs: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a.abs() + b.abs()).collect();
        let lhs = clarke::directional_upper(&h, &vu);
        let rhs = clarke::directional_upper(&h, &v) + clarke::directional_upper(&h, &u);
        prop_assert!(lhs <= rhs + 2.0 * slack(&h, &abs));

        let tv = linalg::scale(&v, t);
        let a = clarke::directional_upper(&h, &tv);
        let b = t * clarke::directional_upper(&h, &v);
        prop_assert!((a - b).abs() <= 2.0 * slack(&h, &tv));
    }

    #[test]
    fn homogeneity_is_exact_for_powers_of_two((h, v, _u, _t) in tuple_strategy(), k in -20i32..20) {
        let t = 2f64.powi(k);
        let a = clarke::directional_upper(&h, &linalg::scale(&v, t));
        let b = t * clarke::directional_upper(&h, &v);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn min_norm_point_certificate(h in hull_strategy()) {
        let m = h.min_norm().to_vec();
        let mm = linalg::norm_sq(&m);
        for w in &h.generators {
            prop_assert!(linalg::dot(w, &m) >= mm - 1e-8 * (1.0 + mm));
        }
    }

    #[test]
    fn pseudo_gradient_contract(h in hull_strategy(), frac in 0.01f64..=1.0) {
        let mn = linalg::norm(h.min_norm());
        prop_assume!(mn > 1e-6);
        let b = 0.5 * mn * frac;
        match clarke::pseudo_gradient(&h, b) {
            PseudoGradient::Direction(v) => {
                prop_assert!(linalg::norm(&v) < 1.0);
                for w in &h.generators {
                    prop_assert!(linalg::dot(w, &v) > b);
                }
            }
            PseudoGradient::Fails { min_norm } => prop_assert!(false, "failed with |m| = {}", min_norm),
        }
    }

    #[test]
    fn pseudo_gradient_refuses_short_min_norm(h in hull_strategy()) {
        let mn = linalg::norm(h.min_norm());
        prop_assume!(mn > 0.0);
        let refused = matches!(clarke::pseudo_gradient(&h, 0.51 * mn), PseudoGradient::Fails { .. });
        prop_assert!(refused);
    }

    #[test]
    fn tangency_residual_is_scale_invariant(
        x in point(3, -5.0, 5.0),
        v in point(3, -5.0, 5.0),
        t in 1e-3f64..1e3,
        s in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
        j in -30i32..30,
        k in -30i32..30,
    ) {
        prop_assume!(linalg::norm(&x) > 1e-3 && linalg::norm(&v) > 1e-3);
        let base = tangency_residual(&x, &v).unwrap().value().unwrap();
        // Power-of-two scalings are exact in floating point.
        let (p, q) = (2f64.powi(j), -(2f64.powi(k)));
        let exact = tangency_residual(&linalg::scale(&x, p), &linalg::scale(&v, q)).unwrap();
        prop_assert_eq!(exact, TangencyResidual::Value(base));
        let scaled = tangency_residual(&linalg::scale(&x, t), &linalg::scale(&v, s)).unwrap().value().unwrap();
        prop_assert!((scaled - base).abs() <= 1e-12, "{} vs {}", scaled, base);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn respacing_and_projection_keep_endpoints_and_cache(
        interior in prop::collection::vec(point(2, -6.0, 6.0), 1..6),
        n in 2usize..80,
        r in 2.3f64..8.0,
    ) {
        let f = ScalarField::corpus("broughton", 2).unwrap();
        let mut v = vec![vec![-1.0, 0.0]];
        v.extend(interior);
        v.push(vec![1.0, -2.0]);
        let p = PLPath::new(&f, v).unwrap();
        for q in [p.respaced(&f, n).unwrap(), p.projected(&f, r).unwrap()] {
            prop_assert_eq!(q.start(), p.start());
            prop_assert_eq!(q.end(), p.end());
            for (x, y) in q.vertices().iter().zip(q.values()) {
                prop_assert_eq!(f.eval(x).unwrap().to_bits(), y.to_bits());
            }
        }
        prop_assert!(p.projected(&f, r).unwrap().max_norm() <= r * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hull_diameter_shrinks_with_radius(x in point(2, -2.0, 2.0), seed in any::<u64>()) {
        for m in smooth_members() {
            let f = ScalarField::from_member(m, 2).unwrap();
            let mut last = f64::INFINITY;
            let mut first = 0.0;
            for delta in [1e-2, 1e-3, 1e-4] {
                let h = clarke::sample_hull(&f, &x, &HullParams::new(delta, 16, seed)).unwrap();
                let d = h.diameter();
                prop_assert!(d <= last + 64.0 * f64::EPSILON * (1.0 + h.max_generator_norm()), "{:?}", m);
                if delta == 1e-2 {
                    first = d;
                }
                last = d;
            }
            // O(radius): two decades of radius buy about two decades of diameter.
            prop_assert!(last <= 0.05 * first + 1e-9, "{:?}: {} vs {}", m, last, first);
        }
    }

    #[test]
    fn hulls_depend_only_on_the_seed(x in point(2, -2.0, 2.0), seed in any::<u64>()) {
        let f = ScalarField::corpus("nonsmooth_well", 2).unwrap();
        let p = HullParams::new(0.05, 16, seed);
        let a = clarke::sample_hull(&f, &x, &p).unwrap();
        let b = clarke::sample_hull(&f, &x, &p).unwrap();
        prop_assert_eq!(a.generators, b.generators);
    }

    #[test]
    fn flow_properties(x in point(2, -1.2, 1.2), frac in 0.05f64..=1.0, seed in 0u64..1000) {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        let params = DescentParams::new(HullParams::new(0.05, 16, seed), vec![-1.0, 0.0], vec![1.0, 0.0]);
        let centers = vec![vec![-0.3, 0.55], vec![0.0, 0.6], vec![0.3, 0.55]];
        let df = build_descent_field(&f, &centers, 0.25, &params).unwrap();
        let h = frac * df.h_max();
        let r = flow(&df, &f, &x, h).unwrap();
        // Monotone descent and the speed bound.
        prop_assert!(r.f_drop >= -1e-9);
        prop_assert!(linalg::dist(&r.end, &r.start) <= h);
        if r.in_core && df.distance_to_centers(&x) <= df.cutoff_inner - h {
            prop_assert!(r.f_drop >= df.b * h / 2.0 - 1e-9);
        }
        // Endpoints never move, and trajectories are reproducible.
        for e in [[-1.0, 0.0], [1.0, 0.0]] {
            prop_assert_eq!(flow(&df, &f, &e, h).unwrap().end, e.to_vec());
        }
        prop_assert_eq!(flow(&df, &f, &x, h).unwrap(), r);
    }
}
