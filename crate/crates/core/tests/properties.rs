use num_traits::{One, Zero};
use oscint::coeff::{int, rat, to_f64, Coefficient, Rational};
use oscint::decay::{classify_estimate_of, sharp_alpha_by_search, sharp_alpha_of, Estimate};
use oscint::parser::{parse_phase, print_phase};
use oscint::polygon::{polygon_of, Face, Membership, NewtonPolygon};
use oscint::resolution::{resolve, ResolveConfig};
use oscint::series::BiSeries;
use proptest::prelude::*;

fn exact(n: i64, d: i64) -> Coefficient {
    Coefficient::exact(rat(n, d))
}

prop_compose! {
    fn coefficient()(n in -6i64..=6, d in 1i64..=4) -> Coefficient {
        exact(if n == 0 { 1 } else { n }, d)
    }
}

prop_compose! {
    /// Exact polynomial with up to 5 terms of degree ≤ 4 in each variable.
    fn poly()(terms in prop::collection::vec((0u32..=4, 0u32..=4, coefficient()), 0..=5)) -> BiSeries {
        BiSeries::from_terms(terms.into_iter().map(|(a, b, c)| ((int(a as i64), b), c)))
    }
}

prop_compose! {
    fn nonzero_poly()(p in poly(), a in 0u32..=4, b in 0u32..=4, c in coefficient()) -> BiSeries {
        p.add(&BiSeries::monomial(c, int(a as i64), b)).add(&BiSeries::mono(1, a + 1, b + 1))
    }
}

prop_compose! {
    /// Products of curve factors with rational or complex-pair roots, times a monomial.
    fn curve_product()(
        factors in prop::collection::vec((any::<bool>(), 0usize..6, 1u32..=3, 1u32..=2), 1..=3),
        a in 0u32..=2,
        b in 0u32..=2,
    ) -> BiSeries {
        let cs = ["1", "-1", "2", "-2", "1/2", "3"];
        let mut text = format!("x^{a}*y^{b}");
        for (curve, c, e, k) in factors {
            if curve {
                text += &format!("*(y - {}*x^{e} - x^{})^{k}", cs[c], e + 1);
            } else {
                text += &format!("*(y^2 + {}*x^{})", ["1", "2", "1/2"][c % 3], 2 * e);
            }
        }
        parse_phase(&text).unwrap()
    }
}

prop_compose! {
    fn slope()(n in 1i64..=5, d in 1i64..=3) -> Rational { rat(n, d) }
}

prop_compose! {
    fn p_value()(n in 1i64..=40, d in 1i64..=9) -> Rational { int(1) + rat(n, d) }
}

prop_compose! {
    fn reduced_polygon()(pts in prop::collection::vec((1i64..=8, 1i64..=8), 1..=6)) -> NewtonPolygon {
        let pts: Vec<(Rational, Rational)> = pts.into_iter().map(|(a, b)| (int(a), int(b))).collect();
        NewtonPolygon::from_points(&pts, true).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn blowup_is_a_homomorphism(a in poly(), b in poly(), m in slope(), r in coefficient()) {
        let up = |s: &BiSeries| s.blowup_substitute(&m, &r).unwrap();
        prop_assert_eq!(up(&a.mul(&b)), up(&a).mul(&up(&b)));
        prop_assert_eq!(up(&a.add(&b)), up(&a).add(&up(&b)));
    }

    #[test]
    fn blowup_matches_numeric_substitution(a in poly(), m in slope(), r in coefficient(), x in 0.05f64..1.5, y in -1.5f64..1.5) {
        let up = a.blowup_substitute(&m, &r).unwrap();
        let direct = a.evaluate(x, x.powf(to_f64(&m)) * (r.value() + y)).unwrap();
        let via = up.evaluate(x, y).unwrap();
        let scale = a.terms().map(|(_, c)| c.magnitude()).sum::<f64>().max(1.0) * (1.0 + x).powi(12) * (2.0 + r.magnitude() + y.abs()).powi(4);
        prop_assert!((direct - via).abs() <= 1e-10 * scale.max(direct.abs()), "{direct} vs {via}");
    }

    #[test]
    fn mixed_derivatives_compose(s in poly(), a in 0u32..=2, b in 0u32..=2, c in 0u32..=2, d in 0u32..=2) {
        let once = s.mixed_derivative(a + c, b + d).unwrap();
        let twice = s.mixed_derivative(a, b).unwrap().mixed_derivative(c, d).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn support_is_scale_invariant(s in poly(), c in coefficient()) {
        prop_assert_eq!(s.scale(&c).support(), s.support());
    }

    #[test]
    fn parse_print_round_trip(s in poly()) {
        let text = print_phase(&s);
        prop_assert_eq!(parse_phase(&text).unwrap(), s, "{}", text);
    }

    #[test]
    fn parser_is_total(text in "[xy0-9+*^()/. -]{0,40}") {
        // either a series or a diagnostic; never a panic
        let _ = parse_phase(&text);
    }

    #[test]
    fn hull_idempotence(s in nonzero_poly()) {
        let poly = polygon_of(&s).unwrap();
        let on_vertices = BiSeries::from_terms(
            poly.vertices.iter().map(|(u, v)| ((u.clone(), to_f64(v) as u32), Coefficient::one())),
        );
        prop_assert_eq!(polygon_of(&on_vertices).unwrap(), poly);
    }

    #[test]
    fn membership_is_monotone(poly in reduced_polygon(), u in 0i64..=10, v in 0i64..=10, s in 0i64..=3, t in 0i64..=3) {
        let before = poly.contains(&int(u), &int(v));
        let after = poly.contains(&int(u + s), &int(v + t));
        if before != Membership::Exterior {
            prop_assert_ne!(after, Membership::Exterior);
        }
        if before == Membership::Interior {
            prop_assert_eq!(after, Membership::Interior);
        }
    }

    #[test]
    fn transpose_mirrors_polygon(s in nonzero_poly()) {
        let direct = polygon_of(&s.transpose().unwrap()).unwrap();
        prop_assert_eq!(direct, polygon_of(&s).unwrap().transpose());
    }

    #[test]
    fn supporting_value_is_concave_with_edge_breakpoints(poly in reduced_polygon(), a in 1i64..=40, b in 1i64..=40, d in 1i64..=8) {
        let (m1, m2) = (rat(a, d), rat(b, d));
        let mid = (&m1 + &m2) / int(2);
        let c = |m: &Rational| poly.supporting_value(m);
        prop_assert!(c(&mid) * int(2) >= c(&m1) + c(&m2));
        // linear between consecutive breakpoints, kinked at each edge parameter
        for e in &poly.edges {
            let h = rat(1, 1000);
            let lo = &e.m - &h;
            let hi = &e.m + &h;
            if lo > Rational::zero() {
                prop_assert!(c(&e.m) * int(2) > c(&lo) + c(&hi));
            }
        }
        let linear = (c(&m1) + c(&m2)) == c(&mid) * int(2);
        let kink_between = poly.edges.iter().any(|e| e.m > m1.clone().min(m2.clone()) && e.m < m1.clone().max(m2.clone()));
        prop_assert_eq!(linear, !kink_between);
    }

    #[test]
    fn face_at_matches_supporting_line(poly in reduced_polygon(), a in 1i64..=40, d in 1i64..=8) {
        let m = rat(a, d);
        let c = poly.supporting_value(&m);
        let touching: Vec<_> = poly.vertices.iter().filter(|(u, v)| u + &m * v == c).cloned().collect();
        let face = poly.face_at(&m);
        match &face {
            Face::Vertex(v) => prop_assert_eq!(touching, vec![v.clone()]),
            Face::Edge { left, right, .. } => prop_assert_eq!(touching, vec![left.clone(), right.clone()]),
            Face::Ray { .. } => prop_assert!(false, "rays are not attained for finite positive m"),
        }
        for p in face.endpoints() {
            prop_assert_eq!(poly.contains(&p.0, &p.1), Membership::Boundary);
        }
    }

    #[test]
    fn closed_form_matches_search(poly in reduced_polygon(), p in p_value()) {
        let closed = sharp_alpha_of(&poly, &p).unwrap();
        prop_assert_eq!(sharp_alpha_by_search(&poly, &p, 160).unwrap(), Some(closed));
    }

    #[test]
    fn vertex_endpoints_are_sharp(poly in reduced_polygon()) {
        for (k, l) in &poly.vertices {
            let c = classify_estimate_of(&poly, &((k + l) / k), &(k + l).recip()).unwrap();
            prop_assert_eq!(c, Estimate::Sharp);
        }
    }

    #[test]
    fn transpose_symmetry(poly in reduced_polygon(), p in p_value()) {
        let dual = &p / (&p - Rational::one());
        prop_assert_eq!(sharp_alpha_of(&poly, &p).unwrap(), sharp_alpha_of(&poly.transpose(), &dual).unwrap());
    }

    #[test]
    fn monotone_trichotomy(poly in reduced_polygon(), p in p_value(), n in 1i64..=60, d in 1i64..=30) {
        let star = sharp_alpha_of(&poly, &p).unwrap();
        let alpha = rat(n, d * 10);
        let c = classify_estimate_of(&poly, &p, &alpha).unwrap();
        let expect = match alpha.cmp(&star) {
            std::cmp::Ordering::Less => Estimate::ValidNotSharp,
            std::cmp::Ordering::Equal => Estimate::Sharp,
            std::cmp::Ordering::Greater => Estimate::Invalid,
        };
        prop_assert_eq!(c, expect);
    }

    #[test]
    fn alpha_is_concave_in_inverse_p(poly in reduced_polygon(), a in 1i64..=99, b in 1i64..=99) {
        // t = 1/p in (0, 1)
        let alpha_at = |t: &Rational| sharp_alpha_of(&poly, &t.recip()).unwrap();
        let (t1, t2) = (rat(a, 100), rat(b, 100));
        let mid = (&t1 + &t2) / int(2);
        prop_assert!(alpha_at(&mid) * int(2) >= alpha_at(&t1) + alpha_at(&t2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn resolve_is_deterministic_and_bounded(s in curve_product()) {
        let cfg = ResolveConfig::default();
        let a = resolve(&s, &cfg).unwrap();
        let b = resolve(&s, &cfg).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert!(!a.leaves.is_empty());
        prop_assert!(a.nodes.iter().all(|n| n.triple.stage <= cfg.max_stages));
    }
}
