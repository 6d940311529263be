//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use hconvex::ch::{
    cap_height, case_s, case_s_range, case_theta, solid_height, DEFAULT_CURVE_SAMPLES,
};
use hconvex::sets::DEFAULT_SEGMENT_GRID;
use hconvex::{
    ch_curve, ch_curve_case, ch_curve_point, check_hconvex_fn, check_hconvex_set,
    check_homogeneous, check_hquasiconvex_fn, compare_closed_form, envelope_check, falsify_ch,
    falsify_ch_unit_tau, gallery, koranyi, radial_necessary, BBox, ConeFunction, ConeKind,
    CurveCase, FnOracle, HVec, ParamMap, ParamValue, Point3, SetDescriptor, SetOracle, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: usize = 9;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn named(name: &str) -> SetOracle {
    gallery(name, &ParamMap::new()).unwrap()
}

fn cube3() -> BBox {
    BBox::symmetric(3.0, 3.0, 3.0)
}

fn lee_naor(p: Point3) -> f64 {
    let rho2 = p.x * p.x + p.y * p.y;
    ((rho2 + (rho2 * rho2 + 4.0 * p.t * p.t).sqrt()) / 2.0).sqrt()
}

fn notched_profile() -> ParamMap {
    let v = vec![
        [0.0, -1.0],
        [1.0, -1.0],
        [1.0, -0.2],
        [0.4, 0.0],
        [1.0, 0.2],
        [1.0, 1.0],
        [0.0, 1.0],
    ];
    ParamMap::from([("vertices".to_string(), ParamValue::Vertices(v))])
}

fn all_gallery_sets() -> Vec<(String, hconvex::Result<SetOracle>)> {
    hconvex::sets::GALLERY_NAMES
        .iter()
        .map(|&name| {
            let params = if name == "radial_custom" {
                notched_profile()
            } else {
                ParamMap::new()
            };
            (name.to_string(), gallery(name, &params))
        })
        .collect()
}

fn criterion_1() -> Verdict {
    let tol = Tolerances::default();
    let c = ConeFunction::build(named("koranyi_ball"), ConeKind::Heisenberg, tol).unwrap();
    let start = Instant::now();
    let cmp = compare_closed_form(&c, koranyi, &cube3(), 10_000, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        cmp.max_abs_dev <= 1e-6 && secs < 5.0,
        format!(
            "max |Δ| = {:.2e} on 10^4 points, {secs:.2} s",
            cmp.max_abs_dev
        ),
    )
}

fn criterion_2() -> Verdict {
    let tol = Tolerances::default();
    let ball = named("euclidean_ball");
    let c = ConeFunction::build(ball.clone(), ConeKind::Heisenberg, tol).unwrap();
    let closed = compare_closed_form(&c, lee_naor, &cube3(), 10_000, 2).unwrap();
    let f = FnOracle::new("lee-naor", lee_naor).radial();
    let homog = check_homogeneous(&f, 10_000, 2, &Tolerances::new(1e-7, 1e-8, 60).unwrap());
    let domain = ball.dilated(2.0).unwrap();
    let convex = check_hconvex_fn(&f, &domain, 100_000, GRID, 2, &tol).unwrap();
    let ce = ConeFunction::build(ball, ConeKind::Euclidean, tol).unwrap();
    let euclid = compare_closed_form(
        &ce,
        |p: Point3| (p.x * p.x + p.y * p.y + p.t * p.t).sqrt(),
        &cube3(),
        10_000,
        2,
    )
    .unwrap();
    let witness = convex.witness.map_or("none".to_string(), |w| {
        format!(
            "at ξ={:?} v={:?} θ={} (lhs {:.9} > rhs {:.9})",
            w.base.to_array(),
            (w.v.a, w.v.b),
            w.theta,
            w.lhs,
            w.rhs
        )
    });
    verdict(
        closed.max_abs_dev <= 1e-6
            && homog.max_deviation <= 1e-8
            && convex.witness.is_none()
            && euclid.max_abs_dev <= 1e-6,
        format!(
            "closed form max |Δ| = {:.2e}; homogeneity dev = {:.2e}; H-convexity witness: {witness}; \
             euclidean kind max |Δ| = {:.2e}",
            closed.max_abs_dev, homog.max_deviation, euclid.max_abs_dev
        ),
    )
}

fn criterion_3() -> Verdict {
    let tol = Tolerances::default();
    let cyl = named("cylinder");
    let out = falsify_ch(&cyl, 100_000, DEFAULT_CURVE_SAMPLES, 0, &tol).unwrap();
    let replayed = out.witness.is_some_and(|w| w.replay(&cyl, &tol).is_ok());
    let xi0 = Point3::new(0.5, 0.0, 1.0);
    let v = HVec::new(0.0, -0.5);
    let tau = 1.5f64.sqrt();
    let curve = ch_curve(xi0, v, tau, 1001).unwrap();
    let top = curve.iter().map(|p| p.t).fold(f64::NEG_INFINITY, f64::max);
    let end_in = cyl.contains(curve[1000]);
    verdict(
        replayed && out.samples < 10_000 && top > 1.0 + 1e-6 && end_in,
        format!(
            "witness after {} pairs (budget 10^5); hand instance max t = {top:.12}",
            out.samples
        ),
    )
}

fn criterion_4() -> Verdict {
    let tol = Tolerances::default();
    let f = FnOracle::new("hat", |p: Point3| p.radius().max(0.5 * koranyi(p))).radial();
    let homog = check_homogeneous(&f, 100_000, 4, &tol);
    let hat = named("cylinder_hat");
    let domain = hat.dilated(2.0).unwrap();
    let convex = check_hconvex_fn(&f, &domain, 100_000, GRID, 4, &tol).unwrap();
    let b = hat.bbox();
    let region = BBox::new(b.lo.map(|v| 1.5 * v), b.hi.map(|v| 1.5 * v));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut inside = 0;
    let disagreements = (0..10_000)
        .filter(|_| {
            let p = region.sample(&mut rng);
            let level = f.eval(p) <= 1.0;
            inside += level as usize;
            level != hat.contains_exact(p)
        })
        .count();
    verdict(
        homog.holds && convex.witness.is_none() && disagreements == 0,
        format!(
            "homogeneity dev = {:.2e}; H-convexity witness: {}; level set vs oracle: {disagreements} \
             disagreements on 10^4 points ({inside} inside)",
            homog.max_deviation,
            if convex.witness.is_some() { "found" } else { "none" }
        ),
    )
}

fn criterion_5() -> Verdict {
    let tol = Tolerances::default();
    // independent evaluation of the constant
    let c = ((1.0 + 2f64.powf(0.25)).powi(4) - 1.5).powf(0.25);
    let profile = |name: &str| {
        SetDescriptor::from_name(name, &ParamMap::new())
            .unwrap()
            .profile()
            .unwrap()
            .unwrap()
    };
    let imp = radial_necessary(&profile("importante"), 4096, 5, &tol).unwrap();
    let dist = imp.thm_ii.witness.map_or(f64::INFINITY, |w| {
        w.euclidean_distance(&Point3::new(c, 0.0, 0.0))
    });
    let ball = radial_necessary(&profile("koranyi_ball"), 4096, 5, &tol).unwrap();
    let hat = radial_necessary(&profile("cylinder_hat"), 4096, 5, &tol).unwrap();
    let others = [&ball, &hat]
        .iter()
        .all(|r| r.thm_i.holds && r.thm_ii.holds);
    verdict(
        !imp.thm_ii.holds && dist <= 1e-3 && others,
        format!("c = {c:.12}; witness distance {dist:.2e}; koranyi_ball and cylinder_hat pass: {others}"),
    )
}

fn criterion_6() -> Verdict {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = [0.0f64; 3];
    let mut worst_iii_t = 0.0f64;
    for (ci, case) in [CurveCase::I, CurveCase::Ii, CurveCase::Iii]
        .into_iter()
        .enumerate()
    {
        let mut done = 0;
        while done < 1000 {
            let xi0 = Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let tau: f64 = 2f64.powf(rng.gen_range(-2.0..2.0));
            let k = tau - 1.0;
            let (alpha, beta) = match case {
                CurveCase::I => (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                CurveCase::Ii => (xi0.x * k, rng.gen_range(-1.0..1.0)),
                CurveCase::Iii => (xi0.x * k, xi0.y * k),
            };
            let Ok(pts) = ch_curve_case(case, xi0, alpha, beta, tau, 33, &tol) else {
                continue;
            };
            done += 1;
            let v = HVec::new(alpha, beta);
            let (s0, s1) = case_s_range(case, xi0, alpha, beta, tau);
            for (j, p) in pts.iter().enumerate() {
                let s = s0 + (j as f64 / 32.0) * (s1 - s0);
                let theta = case_theta(case, xi0, alpha, beta, tau, s);
                let q = ch_curve_point(xi0, v, tau, theta);
                worst[ci] = worst[ci].max(p.euclidean_distance(&q));
                // and from the direct side
                let th = j as f64 / 32.0;
                let q = ch_curve_point(xi0, v, tau, th);
                let p = hconvex::ch::case_point(
                    case,
                    xi0,
                    alpha,
                    beta,
                    tau,
                    case_s(case, xi0, alpha, beta, tau, th),
                );
                worst[ci] = worst[ci].max(p.euclidean_distance(&q));
                if case == CurveCase::Iii {
                    let t = xi0.t / (1.0 + th * k).powi(2);
                    worst_iii_t = worst_iii_t.max((q.t - t).abs());
                }
            }
        }
    }
    let max = worst.iter().copied().fold(worst_iii_t, f64::max);
    verdict(
        max <= 1e-7,
        format!(
            "max distance i = {:.2e}, ii = {:.2e}, iii = {:.2e}; case iii height {:.2e}",
            worst[0], worst[1], worst[2], worst_iii_t
        ),
    )
}

fn criterion_7() -> Verdict {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut phi_err, mut psi_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let r0: f64 = rng.gen_range(0.01..2.0);
        let t0: f64 = rng.gen_range(0.01..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        phi_err = phi_err.max((solid_height(r0, r0, t0) - t0).abs());
        let r = rng.gen_range(0.0..=r0);
        let psi = cap_height(r, r0, t0);
        psi_err = psi_err.max((r.powi(4) + psi * psi - (r0.powi(4) + t0 * t0)).abs());
    }
    let ball = named("koranyi_ball");
    let mut worst_margin = f64::INFINITY;
    let mut all_hold = true;
    for _ in 0..32 {
        let r0: f64 = rng.gen_range(0.05..0.99);
        let t0 = (1.0 - r0.powi(4)).sqrt() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let rep = envelope_check(
            &ball,
            Point3::new(r0 * a.cos(), r0 * a.sin(), t0),
            400,
            &tol,
        )
        .unwrap();
        worst_margin = worst_margin.min(rep.cap_margin);
        all_hold &= rep.cap_holds;
    }
    verdict(
        phi_err <= 1e-9 && psi_err <= 1e-9 && all_hold && worst_margin >= -1e-7,
        format!("φ(r0) error {phi_err:.2e}; ψ identity error {psi_err:.2e}; worst cap margin {worst_margin:.2e}"),
    )
}

fn criterion_8() -> Verdict {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (name, k) in all_gallery_sets() {
        let k = k.unwrap();
        for seed in 0..4 {
            let a = check_hconvex_set(&k, 3000, DEFAULT_SEGMENT_GRID, seed);
            let b = falsify_ch_unit_tau(&k, 3000, DEFAULT_SEGMENT_GRID, seed);
            compared += 1;
            let same = match (a, b) {
                (Ok(a), Ok(b)) => match (a.witness, b.witness) {
                    (None, None) => true,
                    (Some(a), Some(b)) => {
                        (a.xi, a.v, a.theta, a.point, a.sample_index)
                            == (b.xi0, b.v, b.theta_star, b.escape_point, b.sample_index)
                    }
                    _ => false,
                },
                (Err(a), Err(b)) => a == b,
                _ => false,
            };
            if !same {
                mismatches.push(format!("{name}/{seed}"));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("{compared} set/seed runs compared; mismatches: {mismatches:?}"),
    )
}

fn criterion_9() -> Verdict {
    let tol = Tolerances::default();
    let (mut found, mut replayed) = (0, 0);
    let mut failures = Vec::new();
    for (name, k) in all_gallery_sets() {
        let k = k.unwrap();
        for seed in 0..6 {
            let Ok(out) = falsify_ch(&k, 20_000, DEFAULT_CURVE_SAMPLES, seed, &tol) else {
                continue;
            };
            let Some(w) = out.witness else { continue };
            found += 1;
            for alpha in [0.5, 2.0] {
                match w.transport(alpha).replay(&k.dilated(alpha).unwrap(), &tol) {
                    Ok(()) => replayed += 1,
                    Err(e) => failures.push(format!("{name}/{seed}/α={alpha}: {e}")),
                }
            }
        }
    }
    verdict(
        found > 0 && failures.is_empty(),
        format!("{found} witnesses, {replayed} transported replays; failures: {failures:?}"),
    )
}

fn criterion_10() -> Verdict {
    let tol = Tolerances::default();
    let f = FnOracle::new("log", |p: Point3| {
        (p.x * p.x + p.y * p.y + p.t * p.t).ln_1p()
    });
    let domain = SetDescriptor::EuclideanBall { r: 2.0 }.build().unwrap();
    let convex = check_hconvex_fn(&f, &domain, 100_000, GRID, 10, &tol).unwrap();
    let quasi = check_hquasiconvex_fn(&f, &domain, 100_000, GRID, 10, &tol).unwrap();
    let replays = convex
        .witness
        .as_ref()
        .is_some_and(|w| w.replay(&f, tol.eps_eq));
    verdict(
        replays && quasi.witness.is_none(),
        format!(
            "convexity witness after {} pairs; quasiconvexity witness: {}",
            convex.pairs_tested,
            if quasi.witness.is_some() {
                "found"
            } else {
                "none"
            }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Korányi cone identity", criterion_1),
        ("Euclidean-ball cone closed form", criterion_2),
        ("cylinder falsification", criterion_3),
        ("cylinder with hat", criterion_4),
        ("radial conditions on importante", criterion_5),
        ("parametrization equivalence", criterion_6),
        ("envelope identities", criterion_7),
        ("unit-τ reduction", criterion_8),
        ("dilation transport replay", criterion_9),
        ("non-convex function detection", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += !v.pass as usize;
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
