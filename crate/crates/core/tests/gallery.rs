use hconvex::ch::DEFAULT_CURVE_SAMPLES;
use hconvex::{
    check_hconvex_fn, cone_validate, falsify_ch, gallery, ConeFunction, ConeKind, FnOracle,
    ParamMap, Point3, SetOracle, Tolerances,
};

fn named(name: &str) -> SetOracle {
    gallery(name, &ParamMap::new()).unwrap()
}

fn euclidean_norm(p: Point3) -> f64 {
    (p.x * p.x + p.y * p.y + p.t * p.t).sqrt()
}

#[test]
fn norm_balls_and_hat_survive_full_budget() {
    let tol = Tolerances::default();
    for name in ["koranyi_ball", "cylinder_hat"] {
        let out = falsify_ch(&named(name), 100_000, DEFAULT_CURVE_SAMPLES, 3, &tol).unwrap();
        assert!(out.witness.is_none(), "{name}: {:?}", out.witness);
        assert_eq!(out.samples, 100_000);
    }
}

#[test]
fn euclidean_ball_family_escapes() {
    let tol = Tolerances::default();
    let k = named("euclidean_ball");
    let out = falsify_ch(&k, 100_000, DEFAULT_CURVE_SAMPLES, 2, &tol).unwrap();
    let w = out.witness.expect("escaping curve");
    w.replay(&k, &tol).unwrap();
    // recompute the curve point by hand from the stored step
    let (x, y, t) = (w.xi0.x, w.xi0.y, w.xi0.t);
    let th = w.theta_star;
    let s = 1.0 / (1.0 + th * (w.tau - 1.0));
    let p = Point3::new(
        (x + th * w.v.a) * s,
        (y + th * w.v.b) * s,
        (t + 2.0 * th * (w.v.a * y - x * w.v.b)) * s * s,
    );
    assert!(euclidean_norm(w.xi0) <= 1.0 + 1e-12);
    assert!(euclidean_norm(w.xi1) <= 1.0 + 1e-12);
    assert!(euclidean_norm(p) > 1.0 + 1e-6, "{p:?}");
}

#[test]
fn lee_naor_function_has_a_concave_horizontal_line() {
    // along ξ ∘ exp(θv) with these values the second difference is negative
    let f = |p: Point3| {
        let rho2 = p.x * p.x + p.y * p.y;
        ((rho2 + (rho2 * rho2 + 4.0 * p.t * p.t).sqrt()) / 2.0).sqrt()
    };
    let xi = Point3::new(-0.10971252025251843, -1.3518949497822503, 1.704003920189261);
    let (a, b) = (-0.04909966811334832, -0.04210414234104351);
    let at = |th: f64| {
        Point3::new(
            xi.x + th * a,
            xi.y + th * b,
            xi.t + 2.0 * th * (a * xi.y - xi.x * b),
        )
    };
    let mid = f(at(0.5));
    let chord = 0.5 * (f(at(0.0)) + f(at(1.0)));
    // frozen from a 40-digit evaluation
    assert!((mid - 1.719_684_834_595_351_2).abs() < 1e-12);
    assert!((chord - 1.719_654_157_571_925_4).abs() < 1e-12);

    let tol = Tolerances::default();
    let oracle = FnOracle::new("lee-naor", f).radial();
    let domain = named("euclidean_ball").dilated(2.0).unwrap();
    let out = check_hconvex_fn(&oracle, &domain, 100_000, 9, 0, &tol).unwrap();
    assert!(out.witness.unwrap().replay(&oracle, tol.eps_eq));
}

#[test]
fn cone_validation_verdicts() {
    let tol = Tolerances::default();
    let ball = ConeFunction::build(named("koranyi_ball"), ConeKind::Heisenberg, tol).unwrap();
    let v = cone_validate(&ball, 5000, 1).unwrap();
    assert!(v.not_falsified, "{}", v.verdict);
    assert!(v.homogeneity.unwrap().max_deviation <= 1e-8);

    let hat = ConeFunction::build(named("cylinder_hat"), ConeKind::Heisenberg, tol).unwrap();
    assert!(cone_validate(&hat, 5000, 1).unwrap().not_falsified);

    let cyl = ConeFunction::build(named("cylinder"), ConeKind::Heisenberg, tol).unwrap();
    let v = cone_validate(&cyl, 20_000, 1).unwrap();
    assert!(v.family.passed());
    assert!(v.convexity.unwrap().witness.is_some());
}
