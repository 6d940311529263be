use hconvex::ch::DEFAULT_CURVE_SAMPLES;
use hconvex::{
    ch_curve, falsify_ch, gallery, horizontal_point, horizontal_reach, koranyi, solve_tau,
    ConeFunction, ConeKind, HVec, ParamMap, Point3, SetDescriptor, SetOracle, TauSolutions,
    Tolerances,
};
use proptest::prelude::*;

fn named(name: &str) -> SetOracle {
    gallery(name, &ParamMap::new()).unwrap()
}

fn point(r: f64) -> impl Strategy<Value = Point3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, t)| Point3::new(x, y, t))
}

fn scale(p: Point3, q: Point3) -> f64 {
    1.0 + p
        .to_array()
        .iter()
        .chain(q.to_array().iter())
        .map(|c| c.abs())
        .sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tau_roots_join_the_endpoints(xi0 in point(2.0), xi1 in point(2.0)) {
        if let TauSolutions::Roots(roots) = solve_tau(xi0, xi1) {
            for r in roots {
                prop_assert!(r.tau > 0.0);
                let reached = horizontal_point(xi0, r.v, 1.0);
                let target = xi1.dilated(r.tau);
                let tol = 1e-8 * scale(xi0, xi1) * (1.0 + r.tau * r.tau);
                prop_assert!(reached.euclidean_distance(&target) <= tol, "{reached:?} vs {target:?}");
            }
        }
    }

    #[test]
    fn reach_recovers_the_step(p in point(2.0), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let v = HVec::new(a, b);
        let q = horizontal_point(p, v, 1.0);
        let w = horizontal_reach(p, q, &Tolerances::default()).expect("q is on the horizontal plane of p");
        prop_assert!((w.a - a).abs() < 1e-12 && (w.b - b).abs() < 1e-12);
        let off = Point3::new(q.x, q.y, q.t + 1e-3);
        prop_assert!(horizontal_reach(p, off, &Tolerances::default()).is_none());
    }

    #[test]
    fn curve_endpoints_match(xi0 in point(1.0), a in -1.0..1.0f64, b in -1.0..1.0f64, log_tau in -2.0..2.0f64) {
        let tau = log_tau.exp2();
        let v = HVec::new(a, b);
        let c = ch_curve(xi0, v, tau, 17).unwrap();
        prop_assert_eq!(c[0], xi0);
        let end = horizontal_point(xi0, v, 1.0).dilated(1.0 / tau);
        prop_assert!(c[16].euclidean_distance(&end) < 1e-12);
    }

    #[test]
    fn koranyi_cone_is_homogeneous(xi in point(3.0), lambda in 0.05..8.0f64) {
        let c = ConeFunction::build(named("koranyi_ball"), ConeKind::Heisenberg, Tolerances::default()).unwrap();
        let f = c.eval(xi).unwrap();
        let g = c.eval(xi.dilated(lambda)).unwrap();
        prop_assert!((g - lambda * f).abs() <= 1e-6 * (1.0 + lambda));
        prop_assert!((f - koranyi(xi)).abs() <= 1e-6);
    }

    #[test]
    fn cone_bracket_encloses_closed_form(xi in point(3.0)) {
        let d = SetDescriptor::EuclideanBall { r: 1.0 };
        let closed = d.closed_form_cone().unwrap();
        let c = ConeFunction::build(d.build().unwrap(), ConeKind::Heisenberg, Tolerances::default()).unwrap();
        let (lo, hi) = c.bracket(xi).unwrap();
        let exact = closed(xi);
        prop_assert!(lo <= exact + 1e-12 && exact <= hi + 1e-12, "{lo} {exact} {hi}");
    }

    #[test]
    fn dilated_oracle_tracks_dilated_points(p in point(2.0), e in -3i32..3) {
        let alpha = 2f64.powi(e);
        let k = named("cylinder_hat");
        let ka = k.dilated(alpha).unwrap();
        prop_assert_eq!(k.contains_exact(p), ka.contains_exact(p.dilated(alpha)));
    }

    #[test]
    fn descriptor_json_round_trips(r in 0.01..100.0f64) {
        let d = SetDescriptor::KoranyiBall { r };
        let text = serde_json::to_string(&d).unwrap();
        prop_assert_eq!(serde_json::from_str::<SetDescriptor>(&text).unwrap(), d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cylinder_witness_transports(seed in 0u64..1000, alpha in 0.25..4.0f64) {
        let tol = Tolerances::default();
        let k = named("cylinder");
        let out = falsify_ch(&k, 100_000, DEFAULT_CURVE_SAMPLES, seed, &tol).unwrap();
        let w = out.witness.expect("cylinder witness");
        prop_assert!(w.replay(&k, &tol).is_ok());
        let moved = w.transport(alpha);
        prop_assert!(moved.replay(&k.dilated(alpha).unwrap(), &tol).is_ok());
    }
}
