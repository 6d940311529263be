//! Condition (C_H) for dilation families: the connecting-τ quadratic, the
//! rescaled horizontal curves and their closed forms, a sampling falsifier,
//! and the necessary conditions for radial sets.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{horizontal_point, horizontal_reach, HVec, Point3, Tolerances};
use crate::sampling::{self, first_hit, rng_for, stream};
use crate::sets::{
    horizontal_pair, identity_is_interior, radial_to_oracle, star_shaped_witness, RadialProfile,
    SetOracle,
};

/// τ values tried when every τ connects the pair.
pub const DEGENERATE_TAU_GRID: [f64; 4] = [0.25, 0.5, 2.0, 4.0];
/// Default number of curve samples per `(ξ0, v, τ)`.
pub const DEFAULT_CURVE_SAMPLES: usize = 65;

const INTERIOR_TRIES: usize = 20_000;
const PRECONDITION_SAMPLES: usize = 4096;

// ---------------------------------------------------------------------------
// τ equation
// ---------------------------------------------------------------------------

/// A positive root of `t1 τ² + 2(x0 y1 − x1 y0) τ − t0 = 0` with the
/// horizontal step `v` from `ξ0` to `δ_τ ξ1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSolution {
    pub tau: f64,
    pub v: HVec,
    pub discriminant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSolutions {
    Roots(Vec<TauSolution>),
    /// `t0 = t1 = 0` and the cross term vanishes: every τ connects the pair.
    AllAdmissible,
}

impl TauSolutions {
    pub fn roots(&self) -> &[TauSolution] {
        match self {
            TauSolutions::Roots(r) => r,
            TauSolutions::AllAdmissible => &[],
        }
    }

    /// The roots, or the fixed grid when every τ is admissible.
    pub fn candidates(&self, xi0: Point3, xi1: Point3) -> Vec<TauSolution> {
        match self {
            TauSolutions::Roots(r) => r.clone(),
            TauSolutions::AllAdmissible => DEGENERATE_TAU_GRID
                .iter()
                .map(|&tau| TauSolution {
                    tau,
                    v: step(xi0, xi1, tau),
                    discriminant: 0.0,
                })
                .collect(),
        }
    }
}

fn step(xi0: Point3, xi1: Point3, tau: f64) -> HVec {
    HVec::new(tau * xi1.x - xi0.x, tau * xi1.y - xi0.y)
}

/// `t1 τ² + 2(x0 y1 − x1 y0) τ − t0`.
pub fn tau_residual(xi0: Point3, xi1: Point3, tau: f64) -> f64 {
    let b = 2.0 * (xi0.x * xi1.y - xi1.x * xi0.y);
    (xi1.t * tau + b) * tau - xi0.t
}

/// Positive τ with `ξ0⁻¹ ∘ δ_τ ξ1` horizontal.
pub fn solve_tau(xi0: Point3, xi1: Point3) -> TauSolutions {
    let (a, b, c) = (xi1.t, 2.0 * (xi0.x * xi1.y - xi1.x * xi0.y), -xi0.t);
    let mk = |tau: f64, disc: f64| TauSolution {
        tau,
        v: step(xi0, xi1, tau),
        discriminant: disc,
    };
    let mut roots = Vec::with_capacity(2);
    if a == 0.0 {
        if b == 0.0 {
            return if c == 0.0 {
                TauSolutions::AllAdmissible
            } else {
                TauSolutions::Roots(vec![])
            };
        }
        roots.push(mk(-c / b, b * b));
    } else {
        let mut disc = b * b - 4.0 * a * c;
        let scale = b * b + 4.0 * (a * c).abs();
        if disc < 0.0 {
            if disc < -Tolerances::default().eps_eq * scale {
                return TauSolutions::Roots(vec![]);
            }
            disc = 0.0;
        }
        if disc <= 16.0 * f64::EPSILON * scale {
            // rounding-level discriminant: treat as a double root
            disc = 0.0;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            // b = 0 and c = 0: double root at 0
            return TauSolutions::Roots(vec![]);
        }
        roots.push(mk(q / a, disc));
        roots.push(mk(c / q, disc));
    }
    roots.retain(|r| r.tau > 0.0 && r.tau.is_finite());
    roots.sort_by(|p, q| p.tau.total_cmp(&q.tau));
    roots.dedup_by(|p, q| p.tau == q.tau);
    TauSolutions::Roots(roots)
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// `δ_{1/τ_θ}(ξ0 ∘ exp(θv))` with `τ_θ = 1 + θ(τ − 1)`.
pub fn ch_curve_point(xi0: Point3, v: HVec, tau: f64, theta: f64) -> Point3 {
    let tau_theta = 1.0 + theta * (tau - 1.0);
    horizontal_point(xi0, v, theta).dilated(1.0 / tau_theta)
}

/// `m` samples of the curve at `θ_k = k/(m−1)`.
pub fn ch_curve(xi0: Point3, v: HVec, tau: f64, m: usize) -> Result<Vec<Point3>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidArgument(
            "a curve needs at least 2 samples".into(),
        ));
    }
    Ok((0..m)
        .map(|k| ch_curve_point(xi0, v, tau, k as f64 / (m - 1) as f64))
        .collect())
}

/// Which closed form describes the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveCase {
    /// `x0(τ−1) ≠ α`; parametrized by the x-coordinate.
    I,
    /// `x0(τ−1) = α`, `y0(τ−1) ≠ β`; parametrized by the y-coordinate.
    Ii,
    /// Both equalities; a vertical segment parametrized by θ.
    Iii,
}

impl CurveCase {
    pub fn name(self) -> &'static str {
        match self {
            CurveCase::I => "i",
            CurveCase::Ii => "ii",
            CurveCase::Iii => "iii",
        }
    }
}

fn nearly_equal(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps * (1.0 + a.abs() + b.abs())
}

pub fn classify_case(xi0: Point3, alpha: f64, beta: f64, tau: f64, eps: f64) -> CurveCase {
    if !nearly_equal(xi0.x * (tau - 1.0), alpha, eps) {
        CurveCase::I
    } else if !nearly_equal(xi0.y * (tau - 1.0), beta, eps) {
        CurveCase::Ii
    } else {
        CurveCase::Iii
    }
}

/// Closed-form curve point at parameter `s`.
pub fn case_point(case: CurveCase, xi0: Point3, alpha: f64, beta: f64, tau: f64, s: f64) -> Point3 {
    let (x0, y0, t0) = (xi0.x, xi0.y, xi0.t);
    let k = tau - 1.0;
    let a = x0 * beta - y0 * alpha;
    match case {
        CurveCase::I => {
            let d = k * x0 - alpha;
            let e = k * s - alpha;
            let y = ((y0 * k - beta) * s + a) / d;
            let t = (t0 * e * e - 2.0 * a * (x0 - s) * e) / (d * d);
            Point3::new(s, y, t)
        }
        CurveCase::Ii => {
            let d = k * y0 - beta;
            let e = k * s - beta;
            let t = (t0 * e * e - 2.0 * a * (y0 - s) * e) / (d * d);
            Point3::new(x0, s, t)
        }
        CurveCase::Iii => {
            let q = 1.0 + s * k;
            Point3::new(x0, y0, t0 / (q * q))
        }
    }
}

/// Parameter interval `[s_start, s_end]` matching `θ ∈ [0, 1]`.
pub fn case_s_range(case: CurveCase, xi0: Point3, alpha: f64, beta: f64, tau: f64) -> (f64, f64) {
    match case {
        CurveCase::I => (xi0.x, (xi0.x + alpha) / tau),
        CurveCase::Ii => (xi0.y, (xi0.y + beta) / tau),
        CurveCase::Iii => (0.0, 1.0),
    }
}

/// θ of the direct parametrization at closed-form parameter `s`.
pub fn case_theta(case: CurveCase, xi0: Point3, alpha: f64, beta: f64, tau: f64, s: f64) -> f64 {
    let k = tau - 1.0;
    match case {
        CurveCase::I => (xi0.x - s) / (k * s - alpha),
        CurveCase::Ii => (xi0.y - s) / (k * s - beta),
        CurveCase::Iii => s,
    }
}

/// Closed-form parameter of the direct curve point at `θ`.
pub fn case_s(case: CurveCase, xi0: Point3, alpha: f64, beta: f64, tau: f64, theta: f64) -> f64 {
    let tau_theta = 1.0 + theta * (tau - 1.0);
    match case {
        CurveCase::I => (xi0.x + theta * alpha) / tau_theta,
        CurveCase::Ii => (xi0.y + theta * beta) / tau_theta,
        CurveCase::Iii => theta,
    }
}

/// `m` samples of the closed form selected by the inputs, uniform in `s`.
pub fn ch_curve_cases(
    xi0: Point3,
    alpha: f64,
    beta: f64,
    tau: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<(CurveCase, Vec<Point3>)> {
    let case = classify_case(xi0, alpha, beta, tau, tol.eps_eq);
    Ok((case, ch_curve_case(case, xi0, alpha, beta, tau, m, tol)?))
}

/// As [`ch_curve_cases`] for a requested case; errors if the inputs select a
/// different one.
pub fn ch_curve_case(
    case: CurveCase,
    xi0: Point3,
    alpha: f64,
    beta: f64,
    tau: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<Vec<Point3>> {
    if !(tau > 0.0) || !tau.is_finite() || m < 2 {
        return Err(Error::InvalidArgument("need tau > 0 and m >= 2".into()));
    }
    let actual = classify_case(xi0, alpha, beta, tau, tol.eps_eq);
    if actual != case {
        return Err(Error::CaseMismatch {
            requested: case.name(),
            actual: actual.name(),
        });
    }
    let (s0, s1) = case_s_range(case, xi0, alpha, beta, tau);
    Ok((0..m)
        .map(|k| {
            let u = k as f64 / (m - 1) as f64;
            case_point(case, xi0, alpha, beta, tau, s0 + u * (s1 - s0))
        })
        .collect())
}

/// τ and `v` joining `(x0, 0, t0)` to its rotation by `angle` about the
/// t-axis, for the root used in the solid-of-revolution envelope.
pub fn rotation_pair_tau(x0: f64, t0: f64, angle: f64) -> (f64, HVec) {
    let s = angle.sin();
    let tau = ((x0.powi(4) * s * s + t0 * t0).sqrt() - x0 * x0 * s) / t0;
    (tau, HVec::new(x0 * (tau * angle.cos() - 1.0), x0 * tau * s))
}

// ---------------------------------------------------------------------------
// Falsifier
// ---------------------------------------------------------------------------

/// A certified violation of (C_H).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChWitness {
    pub xi0: Point3,
    pub xi1: Point3,
    pub tau: f64,
    pub v: HVec,
    pub theta_star: f64,
    pub escape_point: Point3,
    /// Defect of `escape_point`; exceeds `eps_geom`.
    pub margin: f64,
    pub sample_index: usize,
}

impl ChWitness {
    /// Re-derives the witness from its fields and checks it against `k`.
    pub fn replay(&self, k: &SetOracle, tol: &Tolerances) -> Result<()> {
        let k = k.clone().with_slack(tol.eps_geom);
        if !k.contains(self.xi0) || !k.contains(self.xi1) {
            return Err(Error::Replay("curve endpoints are not in the set".into()));
        }
        let target = self.xi1.dilated(self.tau);
        let reach = horizontal_reach(self.xi0, target, tol).ok_or_else(|| {
            Error::Replay("xi0 does not reach dilate(tau, xi1) horizontally".into())
        })?;
        let scale = 1.0 + self.v.norm();
        if (reach.a - self.v.a).abs() > tol.eps_geom * scale
            || (reach.b - self.v.b).abs() > tol.eps_geom * scale
        {
            return Err(Error::Replay(
                "stored v does not match the connecting step".into(),
            ));
        }
        if !(self.theta_star > 0.0 && self.theta_star < 1.0) {
            return Err(Error::Replay("theta_star outside (0, 1)".into()));
        }
        let p = ch_curve_point(self.xi0, self.v, self.tau, self.theta_star);
        let drift = p.euclidean_distance(&self.escape_point);
        if drift > tol.eps_geom * (1.0 + p.euclidean_distance(&Point3::default())) {
            return Err(Error::Replay(
                "escape point does not match the curve".into(),
            ));
        }
        let d = k.defect(p);
        if d <= tol.eps_geom {
            return Err(Error::Replay(format!(
                "curve point is not outside the set (defect {d})"
            )));
        }
        Ok(())
    }

    /// Image of the witness under `δ_α`; a witness for `δ_α K`.
    pub fn transport(&self, alpha: f64) -> ChWitness {
        let escape_point = ch_curve_point(
            self.xi0.dilated(alpha),
            self.v.scaled(alpha),
            self.tau,
            self.theta_star,
        );
        ChWitness {
            xi0: self.xi0.dilated(alpha),
            xi1: self.xi1.dilated(alpha),
            tau: self.tau,
            v: self.v.scaled(alpha),
            theta_star: self.theta_star,
            escape_point,
            margin: self.margin * alpha,
            sample_index: self.sample_index,
        }
    }

    /// The full witness curve.
    pub fn curve(&self, m: usize) -> Result<Vec<Point3>> {
        ch_curve(self.xi0, self.v, self.tau, m)
    }
}

/// Outcome of [`falsify_ch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChOutcome {
    pub witness: Option<ChWitness>,
    /// Pair indices examined (up to and including a witness).
    pub samples: usize,
    pub budget: usize,
    pub seed: u64,
}

/// Most escaping interior grid point of a curve, if any escapes.
fn curve_escape(
    k: &SetOracle,
    xi0: Point3,
    v: HVec,
    tau: f64,
    m: usize,
) -> Option<(f64, Point3, f64)> {
    let mut worst: Option<(f64, Point3, f64)> = None;
    for j in 1..m.saturating_sub(1) {
        let theta = j as f64 / (m - 1) as f64;
        let p = ch_curve_point(xi0, v, tau, theta);
        let d = k.defect(p);
        if d > k.slack() && worst.is_none_or(|w| d > w.2) {
            worst = Some((theta, p, d));
        }
    }
    worst
}

fn sample_exact<R: Rng>(k: &SetOracle, rng: &mut R) -> Option<Point3> {
    (0..INTERIOR_TRIES)
        .map(|_| k.bbox().sample(rng))
        .find(|&p| k.contains_exact(p))
}

/// Last point of `K` (without slack) on the ray `τ ↦ δ_τ d`.
fn exact_ray_boundary(k: &SetOracle, d: Point3, max_iter: usize) -> Option<Point3> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let limit = 2f64.powi(32) * (1.0 + k.bbox().scale());
    while k.contains_exact(d.dilated(hi)) {
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return None;
        }
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if k.contains_exact(d.dilated(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = d.dilated(lo);
    k.contains_exact(p).then_some(p)
}

fn random_boundary<R: Rng>(k: &SetOracle, rng: &mut R, max_iter: usize) -> Option<Point3> {
    let u = Point3::from(sampling::unit_vec3(rng));
    exact_ray_boundary(k, u, max_iter)
}

/// Boundary point on a ray that ends near the top or bottom of the set.
fn vertical_boundary<R: Rng>(k: &SetOracle, rng: &mut R, max_iter: usize) -> Option<Point3> {
    let b = k.bbox();
    let half_x = 0.5 * (b.hi[0] - b.lo[0]);
    let half_t = 0.5 * (b.hi[2] - b.lo[2]);
    let spread = half_x / half_t.max(f64::MIN_POSITIVE).sqrt();
    let h = sampling::unit_hvec(rng).scaled(spread * rng.gen::<f64>());
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    exact_ray_boundary(k, Point3::new(h.a, h.b, sign), max_iter)
}

/// Pair for sample `index`: half uniform, a quarter both on the boundary, a
/// quarter with one point near the vertical extremes.
fn ch_pair(k: &SetOracle, seed: u64, index: usize, max_iter: usize) -> Option<(Point3, Point3)> {
    let mut rng = rng_for(seed, stream::CH_PAIRS, index as u64);
    match index % 4 {
        0 | 1 => Some((sample_exact(k, &mut rng)?, sample_exact(k, &mut rng)?)),
        2 => Some((
            random_boundary(k, &mut rng, max_iter)?,
            random_boundary(k, &mut rng, max_iter)?,
        )),
        _ => {
            let a = vertical_boundary(k, &mut rng, max_iter)?;
            let b = if rng.gen::<bool>() {
                random_boundary(k, &mut rng, max_iter)?
            } else {
                sample_exact(k, &mut rng)?
            };
            Some(if rng.gen::<bool>() { (a, b) } else { (b, a) })
        }
    }
}

fn check_ab(k: &SetOracle, seed: u64) -> Result<()> {
    if !k.is_compact() || !k.bbox().is_finite() {
        return Err(Error::NonCompact(k.label().to_string()));
    }
    if !identity_is_interior(k, PRECONDITION_SAMPLES, seed) {
        return Err(Error::IdentityNotInterior(k.label().to_string()));
    }
    if let Some(w) = star_shaped_witness(k, PRECONDITION_SAMPLES, seed, Point3::dilated)? {
        return Err(Error::NotDilationStarShaped {
            label: k.label().to_string(),
            detail: format!("{:?} leaves the set at scale {}", w.point.to_array(), w.tau),
        });
    }
    Ok(())
}

/// Samples `budget` pairs of `K`, solves for every connecting τ and tests the
/// `m`-point curve of each root. Returns the witness of smallest sample index.
pub fn falsify_ch(
    k: &SetOracle,
    budget: usize,
    m: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ChOutcome> {
    tol.validate()?;
    if budget == 0 || m < 3 {
        return Err(Error::InvalidArgument(
            "budget must be >= 1 and m >= 3".into(),
        ));
    }
    let k = k.clone().with_slack(tol.eps_geom);
    check_ab(&k, seed)?;
    let hit = first_hit(budget, |i| {
        let Some((xi0, xi1)) = ch_pair(&k, seed, i, tol.max_iter) else {
            return Ok(None);
        };
        let mut best: Option<ChWitness> = None;
        for sol in solve_tau(xi0, xi1).candidates(xi0, xi1) {
            if let Some((theta, p, d)) = curve_escape(&k, xi0, sol.v, sol.tau, m) {
                if best.is_none_or(|b| d > b.margin) {
                    best = Some(ChWitness {
                        xi0,
                        xi1,
                        tau: sol.tau,
                        v: sol.v,
                        theta_star: theta,
                        escape_point: p,
                        margin: d,
                        sample_index: i,
                    });
                }
            }
        }
        Ok(best)
    })?;
    Ok(ChOutcome {
        samples: hit.as_ref().map_or(budget, |(i, _)| i + 1),
        witness: hit.map(|(_, w)| w),
        budget,
        seed,
    })
}

/// [`falsify_ch`] restricted to `τ = 1` on the horizontal pairs of the set
/// H-convexity checker. Uses the oracle's own slack.
pub fn falsify_ch_unit_tau(k: &SetOracle, budget: usize, m: usize, seed: u64) -> Result<ChOutcome> {
    let m = m.max(3);
    let hit = first_hit(budget, |i| {
        Ok(horizontal_pair(k, seed, i).and_then(|(xi0, v)| {
            curve_escape(k, xi0, v, 1.0, m).map(|(theta, p, d)| ChWitness {
                xi0,
                xi1: horizontal_point(xi0, v, 1.0),
                tau: 1.0,
                v,
                theta_star: theta,
                escape_point: p,
                margin: d,
                sample_index: i,
            })
        }))
    })?;
    Ok(ChOutcome {
        samples: hit.as_ref().map_or(budget, |(i, _)| i + 1),
        witness: hit.map(|(_, w)| w),
        budget,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

/// Height of the solid of revolution at radius `r ∈ [r0/√2, r0]`, on the side
/// of `t0`.
pub fn solid_height(r: f64, r0: f64, t0: f64) -> f64 {
    let inner = (t0 * t0 + 4.0 * r0 * r0 * r * r - 4.0 * r.powi(4)).max(0.0);
    t0.signum() * 0.5 * (t0.abs() + inner.sqrt())
}

/// Height of the Korányi cap through `(r0, t0)` at radius `r ∈ [0, r0]`, on the
/// side of `t0`.
pub fn cap_height(r: f64, r0: f64, t0: f64) -> f64 {
    t0.signum() * (r0.powi(4) + t0 * t0 - r.powi(4)).max(0.0).sqrt()
}

/// Outcome of [`envelope_check`]. Margins are `−max defect`; non-negative
/// means every sampled point is inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub xi0: Point3,
    pub r0: f64,
    pub t0: f64,
    pub solid_holds: bool,
    pub cap_holds: bool,
    pub solid_margin: f64,
    pub cap_margin: f64,
    pub solid_witness: Option<Point3>,
    pub cap_witness: Option<Point3>,
    pub samples: usize,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.solid_holds && self.cap_holds
    }
}

/// Worst defect over a point set, as `(defect, point)`.
fn worst_defect(k: &SetOracle, pts: impl ParallelIterator<Item = Point3>) -> (f64, Point3) {
    pts.map(|p| (k.defect(p), p)).reduce(
        || (f64::NEG_INFINITY, Point3::default()),
        |a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1.to_array() < a.1.to_array()) {
                b
            } else {
                a
            }
        },
    )
}

/// Samples the solid of revolution (full disks of radius `r` at height
/// `φ(r)`, `r ∈ [r0/√2, r0]`) and the Korányi cap beyond `t0` generated by
/// `ξ0`, and tests them against `K`.
pub fn envelope_check(
    k: &SetOracle,
    xi0: Point3,
    n: usize,
    tol: &Tolerances,
) -> Result<EnvelopeReport> {
    let k = k.clone().with_slack(tol.eps_geom);
    let r0 = xi0.radius();
    let t0 = xi0.t;
    if !k.contains(xi0) {
        return Err(Error::Precondition("xi0 is not in the set".into()));
    }
    if t0 == 0.0 || !(r0 > 0.0) {
        return Err(Error::Precondition(
            "envelopes need t0 != 0 and r0 > 0".into(),
        ));
    }
    let n = n.max(2);
    let g = (n as f64).sqrt().ceil() as usize + 1;
    let grid = |i: usize, steps: usize| i as f64 / (steps - 1) as f64;
    let r_lo = r0 / 2f64.sqrt();
    let solid = (0..g * g).into_par_iter().map(|idx| {
        let (i, j) = (idx / g, idx % g);
        let r = r_lo + (r0 - r_lo) * grid(i, g);
        let rho = r * grid(j, g).sqrt();
        let a = std::f64::consts::TAU * ((i * 7 + j * 13) % g) as f64 / g as f64;
        Point3::new(rho * a.cos(), rho * a.sin(), solid_height(r, r0, t0))
    });
    let cap = (0..g * g).into_par_iter().map(|idx| {
        let (i, j) = (idx / g, idx % g);
        let r = r0 * grid(i, g);
        let top = cap_height(r, r0, t0);
        let t = t0 + (top - t0) * grid(j, g);
        let a = std::f64::consts::TAU * ((i * 11 + j * 5) % g) as f64 / g as f64;
        Point3::new(r * a.cos(), r * a.sin(), t)
    });
    let (sd, sp) = worst_defect(&k, solid);
    let (cd, cp) = worst_defect(&k, cap);
    let solid_holds = sd <= k.slack();
    let cap_holds = cd <= k.slack();
    Ok(EnvelopeReport {
        xi0,
        r0,
        t0,
        solid_holds,
        cap_holds,
        solid_margin: -sd,
        cap_margin: -cd,
        solid_witness: (!solid_holds).then_some(sp),
        cap_witness: (!cap_holds).then_some(cp),
        samples: 2 * g * g,
    })
}

// ---------------------------------------------------------------------------
// Radial necessary conditions
// ---------------------------------------------------------------------------

const SECTION_SCAN: usize = 256;
const T_SCAN: usize = 4096;
const BALL_GRID: usize = 64;

/// Largest `r` with `(r, t)` in the profile (without slack), by a descending
/// scan and bisection.
pub fn section_radius(p: &RadialProfile, t: f64, max_iter: usize) -> Option<f64> {
    let inside = |r: f64| p.defect(r, t) <= 0.0;
    let r_at = |k: usize| p.r_max * (1.0 - k as f64 / SECTION_SCAN as f64);
    let first = (0..=SECTION_SCAN).find(|&k| inside(r_at(k)))?;
    if first == 0 {
        return Some(p.r_max);
    }
    let (mut lo, mut hi) = (r_at(first), r_at(first - 1));
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallCondition {
    pub holds: bool,
    /// Boundary radius of the profile at `t = 0`.
    pub r_star: f64,
    /// A point of `B_G(e, r*)` outside the set.
    pub witness: Option<Point3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCondition {
    pub holds: bool,
    /// Largest radius over all heights.
    pub r_max: f64,
    /// Height at which it is attained.
    pub t_at_max: f64,
    /// Largest radius at `t = 0`.
    pub r_max_t0: f64,
    /// `(r_max, 0, 0)`: in the projection of the set but not in the set.
    pub witness: Option<Point3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialNecessityReport {
    pub thm_i: BallCondition,
    pub thm_ii: ProjectionCondition,
    pub envelopes_hold: bool,
    pub envelope_failure: Option<EnvelopeReport>,
    pub caps_checked: usize,
    pub solids_checked: usize,
    pub samples: usize,
    pub seed: u64,
}

impl RadialNecessityReport {
    pub fn holds(&self) -> bool {
        self.thm_i.holds && self.thm_ii.holds && self.envelopes_hold
    }

    /// Re-checks every failure witness against the oracle.
    pub fn replay(&self, k: &SetOracle, tol: &Tolerances) -> Result<()> {
        let slack = tol.eps_geom;
        if let Some(w) = self.thm_i.witness {
            let inside_ball = w.radius().powi(4) + w.t * w.t <= self.thm_i.r_star.powi(4);
            if !inside_ball || k.defect(w) <= slack {
                return Err(Error::Replay("ball witness does not replay".into()));
            }
        }
        if let Some(w) = self.thm_ii.witness {
            let lifted = Point3::new(w.x, w.y, self.thm_ii.t_at_max);
            if k.defect(lifted) > slack || k.defect(w) <= slack {
                return Err(Error::Replay("projection witness does not replay".into()));
            }
        }
        if let Some(e) = self.envelope_failure {
            let again = envelope_check(k, e.xi0, e.samples / 2, tol)?;
            if again.holds() {
                return Err(Error::Replay("envelope failure does not replay".into()));
            }
        }
        Ok(())
    }
}

/// Necessary conditions for a radial set generating an H-convex family:
/// i. `B_G(e, r*) ⊂ K` for the boundary radius `r*` at `t = 0`;
/// ii. the largest radius is attained at `t = 0`;
/// plus the solid and cap envelopes at `n` boundary points.
pub fn radial_necessary(
    p: &RadialProfile,
    n: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<RadialNecessityReport> {
    tol.validate()?;
    let k = radial_to_oracle(p.clone(), "profile").with_slack(tol.eps_geom);
    check_ab(&k, seed)?;
    let slack = tol.eps_geom;
    let r_star = section_radius(p, 0.0, tol.max_iter)
        .ok_or_else(|| Error::Precondition("profile misses t = 0".into()))?;

    // i: grid over {r⁴ + t² ≤ r*⁴} plus random points of the ball
    let ball_points = (0..BALL_GRID * BALL_GRID + n).into_par_iter().map(|idx| {
        if idx < BALL_GRID * BALL_GRID {
            let (i, j) = (idx / BALL_GRID, idx % BALL_GRID);
            let r = r_star * i as f64 / (BALL_GRID - 1) as f64;
            let h = (r_star.powi(4) - r.powi(4)).max(0.0).sqrt();
            (
                idx,
                Point3::new(r, 0.0, -h + 2.0 * h * j as f64 / (BALL_GRID - 1) as f64),
            )
        } else {
            let mut rng = rng_for(seed, stream::RADIAL, idx as u64);
            let u = Point3::from(sampling::unit_vec3(&mut rng));
            let q = u.dilated(r_star * rng.gen::<f64>() / crate::heis::koranyi(u));
            (idx, Point3::new(q.radius(), 0.0, q.t))
        }
    });
    let ball_fail = ball_points
        .filter(|(_, q)| p.defect(q.x, q.t) > slack)
        .min_by_key(|(i, _)| *i)
        .map(|(_, q)| q);
    let thm_i = BallCondition {
        holds: ball_fail.is_none(),
        r_star,
        witness: ball_fail,
    };

    // ii: scan heights for the largest section, then refine around it
    let [t_lo, t_hi] = p.t_range;
    let scan = |a: f64, b: f64, steps: usize| -> Option<(f64, f64)> {
        (0..steps)
            .into_par_iter()
            .filter_map(|j| {
                let t = a + (b - a) * j as f64 / (steps - 1) as f64;
                section_radius(p, t, tol.max_iter).map(|r| (r, t, j))
            })
            .reduce_with(|x, y| {
                if y.0 > x.0 || (y.0 == x.0 && y.2 < x.2) {
                    y
                } else {
                    x
                }
            })
            .map(|(r, t, _)| (r, t))
    };
    let (mut r_best, mut t_best) = scan(t_lo, t_hi, T_SCAN).unwrap_or((r_star, 0.0));
    let mut width = (t_hi - t_lo) / (T_SCAN - 1) as f64;
    for _ in 0..4 {
        let (a, b) = ((t_best - width).max(t_lo), (t_best + width).min(t_hi));
        if let Some((r, t)) = scan(a, b, 257) {
            if r > r_best {
                r_best = r;
                t_best = t;
            }
        }
        width /= 64.0;
    }
    let proj_holds = r_best <= r_star + slack;
    let witness = (!proj_holds).then_some(Point3::new(r_best, 0.0, 0.0));
    let thm_ii = ProjectionCondition {
        holds: proj_holds || witness.is_some_and(|w| k.defect(w) <= slack),
        r_max: r_best,
        t_at_max: t_best,
        r_max_t0: r_star,
        witness: witness.filter(|w| k.defect(*w) > slack),
    };

    // envelopes at boundary points of sampled heights
    let env: Vec<Result<Option<EnvelopeReport>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, stream::RADIAL, (1u64 << 40) + i as u64);
            let t = rng.gen_range(t_lo..=t_hi);
            if t == 0.0 {
                return Ok(None);
            }
            match section_radius(p, t, tol.max_iter) {
                Some(r) if r > 0.0 => envelope_check(&k, Point3::new(r, 0.0, t), 64, tol).map(Some),
                _ => Ok(None),
            }
        })
        .collect();
    let mut checked = 0;
    let mut failure = None;
    for e in env {
        if let Some(rep) = e? {
            checked += 1;
            if failure.is_none() && !rep.holds() {
                failure = Some(rep);
            }
        }
    }
    Ok(RadialNecessityReport {
        thm_i,
        thm_ii,
        envelopes_hold: failure.is_none(),
        envelope_failure: failure,
        caps_checked: checked,
        solids_checked: checked,
        samples: n,
        seed,
    })
}
