//! Falsifiers for H-convexity, H-quasiconvexity, homogeneity and horizontal
//! subgradients of functions on the group.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{horizontal_point, HVec, Point3, Tolerances};
use crate::sampling::{self, first_hit, rng_for, stream};
use crate::sets::{BBox, SetOracle};

const INTERIOR_TRIES: usize = 20_000;
const PARTNER_TRIES: usize = 64;
/// Step of the central differences used for candidate subgradients.
const GRADIENT_STEP: f64 = 1e-6;

pub type EvalFn = Arc<dyn Fn(Point3) -> f64 + Send + Sync>;

/// A real-valued function on the group.
#[derive(Clone)]
pub struct FnOracle {
    eval: EvalFn,
    label: String,
    radial: bool,
}

impl fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOracle")
            .field("label", &self.label)
            .field("radial", &self.radial)
            .finish_non_exhaustive()
    }
}

impl FnOracle {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(Point3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            label: label.into(),
            radial: false,
        }
    }

    pub fn from_arc(label: impl Into<String>, eval: EvalFn) -> Self {
        Self {
            eval,
            label: label.into(),
            radial: false,
        }
    }

    /// Declares `f(O(x,y), t) = f(x, y, t)` for every rotation `O`.
    pub fn radial(mut self) -> Self {
        self.radial = true;
        self
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, p: Point3) -> f64 {
        (self.eval)(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityKind {
    Convex,
    Quasiconvex,
}

/// A horizontal segment on which the convexity inequality fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub kind: ConvexityKind,
    pub base: Point3,
    pub v: HVec,
    pub theta: f64,
    /// `f(ξ ∘ exp(θv))`.
    pub lhs: f64,
    /// `(1−θ) f(ξ) + θ f(ξ ∘ exp v)`, or the maximum of the endpoint values.
    pub rhs: f64,
    pub sample_index: usize,
}

impl ConvexityWitness {
    /// Recomputes both sides from the stored segment.
    pub fn replay(&self, f: &FnOracle, eps_eq: f64) -> bool {
        let (lhs, rhs) = sides(f, self.kind, self.base, self.v, self.theta);
        lhs == self.lhs && rhs == self.rhs && lhs > rhs + eps_eq
    }
}

fn sides(f: &FnOracle, kind: ConvexityKind, xi: Point3, v: HVec, theta: f64) -> (f64, f64) {
    let f0 = f.eval(xi);
    let f1 = f.eval(horizontal_point(xi, v, 1.0));
    let lhs = f.eval(horizontal_point(xi, v, theta));
    let rhs = match kind {
        ConvexityKind::Convex => (1.0 - theta) * f0 + theta * f1,
        ConvexityKind::Quasiconvex => f0.max(f1),
    };
    (lhs, rhs)
}

/// Outcome of a function convexity falsifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityOutcome {
    pub witness: Option<ConvexityWitness>,
    /// Sample indices examined (up to and including a witness).
    pub samples: usize,
    /// Segments with both endpoints in the domain among those samples.
    pub pairs_tested: usize,
}

/// θ values `k/(grid+1)`, `k = 1..=grid`, plus `1/2`.
pub fn theta_grid(grid: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=grid).map(|k| k as f64 / (grid + 1) as f64).collect();
    if !g.contains(&0.5) {
        g.push(0.5);
        g.sort_by(f64::total_cmp);
    }
    g
}

/// Sampled pair `(ξ, v)` in the domain for sample `index`. Shared by both
/// function falsifiers so they see identical segments.
fn function_pair(domain: &SetOracle, seed: u64, index: usize) -> Option<(Point3, HVec)> {
    let mut rng = rng_for(seed, stream::FN_PAIRS, index as u64);
    let xi = domain.sample_interior(&mut rng, INTERIOR_TRIES)?;
    let diam = domain.bbox().diameter().max(1e-3);
    for attempt in 0..PARTNER_TRIES {
        let v = if attempt % 2 == 0 {
            sampling::unit_hvec(&mut rng).scaled(sampling::log_uniform(&mut rng, 1e-3, diam))
        } else {
            let q = domain.bbox().sample(&mut rng);
            HVec::new(q.x - xi.x, q.y - xi.y)
        };
        if domain.contains(horizontal_point(xi, v, 1.0)) {
            return Some((xi, v));
        }
    }
    None
}

fn check_fn(
    f: &FnOracle,
    domain: &SetOracle,
    n: usize,
    grid: usize,
    seed: u64,
    tol: &Tolerances,
    kind: ConvexityKind,
) -> Result<ConvexityOutcome> {
    if n == 0 || grid == 0 {
        return Err(Error::InvalidArgument(
            "n and grid must be at least 1".into(),
        ));
    }
    tol.validate()?;
    let thetas = theta_grid(grid);
    let pairs = AtomicUsize::new(0);
    let hit = first_hit(n, |i| {
        let Some((xi, v)) = function_pair(domain, seed, i) else {
            return Ok(None);
        };
        pairs.fetch_add(1, Ordering::Relaxed);
        let mut worst: Option<ConvexityWitness> = None;
        for &theta in &thetas {
            let (lhs, rhs) = sides(f, kind, xi, v, theta);
            if lhs > rhs + tol.eps_eq && worst.is_none_or(|w| lhs - rhs > w.lhs - w.rhs) {
                worst = Some(ConvexityWitness {
                    kind,
                    base: xi,
                    v,
                    theta,
                    lhs,
                    rhs,
                    sample_index: i,
                });
            }
        }
        Ok(worst)
    })?;
    match hit {
        Some((i, w)) => {
            let pairs_tested = (0..=i)
                .into_par_iter()
                .filter(|&j| function_pair(domain, seed, j).is_some())
                .count();
            Ok(ConvexityOutcome {
                witness: Some(w),
                samples: i + 1,
                pairs_tested,
            })
        }
        None => {
            let pairs_tested = pairs.into_inner();
            if pairs_tested == 0 {
                return Err(Error::DomainTooThin(domain.label().to_string()));
            }
            Ok(ConvexityOutcome {
                witness: None,
                samples: n,
                pairs_tested,
            })
        }
    }
}

/// Falsifier for H-convexity: `f(ξ∘exp(θv)) ≤ (1−θ)f(ξ) + θf(ξ∘exp v) + eps_eq`
/// on `n` sampled horizontal segments of `domain`, at the θ-grid of
/// [`theta_grid`].
pub fn check_hconvex_fn(
    f: &FnOracle,
    domain: &SetOracle,
    n: usize,
    grid: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConvexityOutcome> {
    check_fn(f, domain, n, grid, seed, tol, ConvexityKind::Convex)
}

/// Falsifier for H-quasiconvexity: `f(ξ∘exp(θv)) ≤ max(f(ξ), f(ξ∘exp v)) + eps_eq`.
pub fn check_hquasiconvex_fn(
    f: &FnOracle,
    domain: &SetOracle,
    n: usize,
    grid: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConvexityOutcome> {
    check_fn(f, domain, n, grid, seed, tol, ConvexityKind::Quasiconvex)
}

/// Outcome of [`check_homogeneous`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub holds: bool,
    /// Largest `|f(δ_λ ξ) − λ f(ξ)|` seen.
    pub max_deviation: f64,
    /// Sample attaining the largest deviation, as `(ξ, λ)`.
    pub worst: Option<(Point3, f64)>,
    pub samples: usize,
}

/// Checks `|f(δ_λ ξ) − λ f(ξ)| ≤ eps_eq (1+|f(ξ)|) λ` for `n` random
/// `λ ∈ (0, 4]`, `ξ ∈ [−3, 3]³`.
pub fn check_homogeneous(f: &FnOracle, n: usize, seed: u64, tol: &Tolerances) -> HomogeneityReport {
    let bbox = BBox::symmetric(3.0, 3.0, 3.0);
    let (holds, max_dev, worst, _) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, stream::HOMOGENEITY, i as u64);
            let xi = bbox.sample(&mut rng);
            let lambda = 4.0 * (1.0 - rng.gen::<f64>());
            let fx = f.eval(xi);
            let dev = (f.eval(xi.dilated(lambda)) - lambda * fx).abs();
            let ok = dev <= tol.eps_eq * (1.0 + fx.abs()) * lambda;
            (ok, dev, Some((xi, lambda)), i)
        })
        .reduce(
            || (true, 0.0, None, usize::MAX),
            |a, b| {
                let ok = a.0 && b.0;
                // ties resolved by sample index so the result is deterministic
                let pick_b = b.1 > a.1 || (b.1 == a.1 && b.3 < a.3);
                if pick_b {
                    (ok, b.1, b.2, b.3)
                } else {
                    (ok, a.1, a.2, a.3)
                }
            },
        );
    HomogeneityReport {
        holds,
        max_deviation: max_dev,
        worst,
        samples: n,
    }
}

/// First `v` with `‖v‖ ≤ radius` and `f(ξ∘exp v) < f(ξ) + ⟨p, v⟩ − eps`, if
/// any. Probes the axes and the direction of `p` at a few scales before `n`
/// uniform samples of the disk.
pub fn subdiff_violation(
    f: &FnOracle,
    xi: Point3,
    p: HVec,
    n: usize,
    radius: f64,
    seed: u64,
    eps: f64,
) -> Result<Option<HVec>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let f0 = f.eval(xi);
    let violates = |v: HVec| f.eval(horizontal_point(xi, v, 1.0)) < f0 + p.dot(&v) - eps;
    let mut dirs = vec![
        HVec::new(1.0, 0.0),
        HVec::new(-1.0, 0.0),
        HVec::new(0.0, 1.0),
        HVec::new(0.0, -1.0),
    ];
    if p.norm() > 0.0 {
        let u = p.scaled(1.0 / p.norm());
        dirs.push(u);
        dirs.push(u.scaled(-1.0));
    }
    for scale in [1.0, 0.1, 1e-3] {
        for d in &dirs {
            let v = d.scaled(radius * scale);
            if violates(v) {
                return Ok(Some(v));
            }
        }
    }
    let hit = first_hit(n, |i| {
        let mut rng = rng_for(seed, stream::SUBDIFF, i as u64);
        let v = sampling::unit_hvec(&mut rng).scaled(radius * rng.gen::<f64>().sqrt());
        Ok(violates(v).then_some(v))
    })?;
    Ok(hit.map(|(_, v)| v))
}

/// Sampled test of `p ∈ ∂_H f(ξ)` on the disk of radius `radius`; `true` means
/// no violation was found.
pub fn subdiff_contains(
    f: &FnOracle,
    xi: Point3,
    p: HVec,
    n: usize,
    radius: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<bool> {
    Ok(subdiff_violation(f, xi, p, n, radius, seed, tol.eps_eq)?.is_none())
}

/// Central-difference horizontal gradient `(Xf, Yf)(ξ)`.
pub fn horizontal_gradient(f: &FnOracle, xi: Point3) -> HVec {
    let h = GRADIENT_STEP;
    let d = |v: HVec| {
        (f.eval(horizontal_point(xi, v, 1.0)) - f.eval(horizontal_point(xi, v, -1.0))) / (2.0 * h)
    };
    HVec::new(d(HVec::new(h, 0.0)), d(HVec::new(0.0, h)))
}

/// A subgradient that failed to persist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubdiffFailure {
    pub xi: Point3,
    pub p: HVec,
    /// Dilation factor, for a dilation failure.
    pub lambda: Option<f64>,
    /// Rotation angle, for a rotation failure.
    pub angle: Option<f64>,
}

/// Outcome of [`subdiff_properties`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdiffReport {
    pub verdict: String,
    pub precondition_holds: bool,
    pub homogeneity: HomogeneityReport,
    /// Sampled `(ξ, p)` with `p` passing the subgradient test at `ξ`.
    pub candidates: usize,
    pub dilation_holds: bool,
    pub rotation_checked: bool,
    pub rotation_holds: bool,
    pub failure: Option<SubdiffFailure>,
}

/// For homogeneous `f`, checks that subgradients persist along dilations and,
/// for radial `f`, that rotating both point and subgradient preserves them.
pub fn subdiff_properties(
    f: &FnOracle,
    n: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<SubdiffReport> {
    tol.validate()?;
    let homogeneity = check_homogeneous(f, n.max(1), seed, tol);
    if !homogeneity.holds {
        return Ok(SubdiffReport {
            verdict: "precondition failed: f is not homogeneous".into(),
            precondition_holds: false,
            homogeneity,
            candidates: 0,
            dilation_holds: false,
            rotation_checked: false,
            rotation_holds: false,
            failure: None,
        });
    }
    let probes = 256;
    let bbox = BBox::symmetric(2.0, 2.0, 2.0);
    let outcomes: Vec<Result<(bool, Option<SubdiffFailure>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, stream::SUBDIFF, (1u64 << 40) + i as u64);
            let xi = bbox.sample(&mut rng);
            let p = horizontal_gradient(f, xi);
            let inner_seed = seed ^ (i as u64).wrapping_mul(0x9E37_79B9);
            if subdiff_violation(f, xi, p, probes, 1.0, inner_seed, tol.eps_eq)?.is_some() {
                return Ok((false, None));
            }
            let lambda = sampling::log_uniform(&mut rng, 0.25, 4.0);
            let dilated = subdiff_violation(
                f,
                xi.dilated(lambda),
                p,
                probes,
                lambda,
                inner_seed,
                tol.eps_eq * lambda.max(1.0),
            )?;
            if dilated.is_some() {
                return Ok((
                    true,
                    Some(SubdiffFailure {
                        xi,
                        p,
                        lambda: Some(lambda),
                        angle: None,
                    }),
                ));
            }
            if f.is_radial() {
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let rotated = subdiff_violation(
                    f,
                    xi.rotated(angle),
                    p.rotated(angle),
                    probes,
                    1.0,
                    inner_seed,
                    tol.eps_eq,
                )?;
                if rotated.is_some() {
                    return Ok((
                        true,
                        Some(SubdiffFailure {
                            xi,
                            p,
                            lambda: None,
                            angle: Some(angle),
                        }),
                    ));
                }
            }
            Ok((true, None))
        })
        .collect();
    let mut candidates = 0;
    let mut failure = None;
    for o in outcomes {
        let (is_candidate, fail) = o?;
        candidates += is_candidate as usize;
        if failure.is_none() {
            failure = fail;
        }
    }
    let dilation_holds = !failure.is_some_and(|f| f.lambda.is_some());
    let rotation_holds = !failure.is_some_and(|f| f.angle.is_some());
    let verdict = if failure.is_none() {
        "subgradients persist (not falsified)".to_string()
    } else {
        "subgradient persistence falsified".to_string()
    };
    Ok(SubdiffReport {
        verdict,
        precondition_holds: true,
        homogeneity,
        candidates,
        dilation_holds,
        rotation_checked: f.is_radial(),
        rotation_holds,
        failure,
    })
}
