//! Cone functions `f(ξ) = min{τ ≥ 0 : ξ ∈ δ_τ K}` built by bracketing and
//! bisection, with the Euclidean baseline `min{τ : ξ ∈ τK}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{
    check_hconvex_fn, check_homogeneous, ConvexityOutcome, FnOracle, HomogeneityReport,
};
use crate::error::{Error, Result};
use crate::heis::{Point3, Tolerances, IDENTITY};
use crate::sampling::{first_hit, rng_for, stream};
use crate::sets::{identity_is_interior, star_shaped_witness, BBox, SetOracle};

/// Samples used by the assumption checks run at construction.
pub const BUILD_CHECK_SAMPLES: usize = 4096;
/// θ-grid size used by [`cone_validate`].
pub const VALIDATE_GRID: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    /// Anisotropic dilations `δ_τ`.
    Heisenberg,
    /// Scalar multiples `τK`.
    Euclidean,
}

impl ConeKind {
    /// `δ_τ p` or `τ p`.
    pub fn scale(self, p: Point3, tau: f64) -> Point3 {
        match self {
            ConeKind::Heisenberg => p.dilated(tau),
            ConeKind::Euclidean => Point3::new(tau * p.x, tau * p.y, tau * p.t),
        }
    }
}

/// The cone function of a set satisfying assumptions a and b.
#[derive(Debug, Clone)]
pub struct ConeFunction {
    source: SetOracle,
    kind: ConeKind,
    tol: Tolerances,
}

impl ConeFunction {
    /// Checks assumptions a and b (for the chosen scaling) and builds the cone.
    pub fn build(source: SetOracle, kind: ConeKind, tol: Tolerances) -> Result<Self> {
        Self::build_with(source, kind, tol, BUILD_CHECK_SAMPLES, 0)
    }

    pub fn build_with(
        source: SetOracle,
        kind: ConeKind,
        tol: Tolerances,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        tol.validate()?;
        if !source.is_compact() || !source.bbox().is_finite() {
            return Err(Error::NonCompact(source.label().to_string()));
        }
        if !identity_is_interior(&source, n, seed) {
            return Err(Error::IdentityNotInterior(source.label().to_string()));
        }
        if let Some(w) = star_shaped_witness(&source, n, seed, |p, t| kind.scale(p, t))? {
            return Err(Error::NotDilationStarShaped {
                label: source.label().to_string(),
                detail: format!(
                    "{:?} is in the set but its image at scale {} is not",
                    w.point.to_array(),
                    w.tau
                ),
            });
        }
        Ok(Self { source, kind, tol })
    }

    /// Builds without checking assumptions; for diagnosing sets the checked
    /// constructor refuses.
    pub fn new_unchecked(source: SetOracle, kind: ConeKind, tol: Tolerances) -> Self {
        Self { source, kind, tol }
    }

    pub fn source(&self) -> &SetOracle {
        &self.source
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    /// `ξ ∈ δ_τ K` (or `ξ ∈ τK`), without slack.
    pub fn level_contains(&self, xi: Point3, tau: f64) -> bool {
        if tau <= 0.0 {
            return xi == IDENTITY && self.source.contains_exact(IDENTITY);
        }
        self.source.contains_exact(self.kind.scale(xi, 1.0 / tau))
    }

    /// Defect of `ξ` relative to `δ_τ K`.
    fn level_defect(&self, xi: Point3, tau: f64) -> f64 {
        self.source.defect(self.kind.scale(xi, 1.0 / tau))
    }

    /// Final bisection bracket `[lo, hi]` with `ξ ∉ δ_lo K`, `ξ ∈ δ_hi K`.
    /// Values below `eps_geom` collapse to `[0, hi]`.
    pub fn bracket(&self, xi: Point3) -> Result<(f64, f64)> {
        if xi == IDENTITY {
            return Ok((0.0, 0.0));
        }
        let (mut lo, mut hi);
        if self.level_contains(xi, 1.0) {
            hi = 1.0;
            lo = 0.5;
            while self.level_contains(xi, lo) {
                hi = lo;
                if hi < self.tol.eps_geom {
                    return Ok((0.0, hi));
                }
                lo *= 0.5;
            }
        } else {
            lo = 1.0;
            hi = 2.0;
            let limit = 2f64.powi(32) * self.source.bbox().scale().max(1.0);
            while !self.level_contains(xi, hi) {
                lo = hi;
                hi *= 2.0;
                if hi > limit {
                    return Err(Error::BracketOverflow {
                        point: xi.to_array(),
                        limit,
                    });
                }
            }
        }
        for _ in 0..self.tol.max_iter {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.level_contains(xi, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo, hi))
    }

    /// Midpoint of the final bracket, snapped to 0 below `eps_geom`.
    pub fn eval(&self, xi: Point3) -> Result<f64> {
        let (lo, hi) = self.bracket(xi)?;
        let mid = 0.5 * (lo + hi);
        Ok(if mid < self.tol.eps_geom { 0.0 } else { mid })
    }

    /// The cone as a function oracle; bracketing failures evaluate to NaN.
    pub fn as_fn(&self) -> FnOracle {
        let c = self.clone();
        let f = FnOracle::new(format!("cone({})", self.source.label()), move |p| {
            c.eval(p).unwrap_or(f64::NAN)
        });
        if self.source.is_radial() {
            f.radial()
        } else {
            f
        }
    }
}

pub fn cone_eval(c: &ConeFunction, xi: Point3) -> Result<f64> {
    c.eval(xi)
}

pub fn cone_bracket(c: &ConeFunction, xi: Point3) -> Result<(f64, f64)> {
    c.bracket(xi)
}

/// Sampled violation of nesting: `ξ ∈ δ_{τ1} K` but `ξ ∉ δ_{τ2} K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestingWitness {
    pub tau1: f64,
    pub tau2: f64,
    pub xi: Point3,
}

impl NestingWitness {
    pub fn replays(&self, c: &ConeFunction) -> bool {
        self.tau1 < self.tau2
            && c.level_contains(self.xi, self.tau1)
            && c.level_defect(self.xi, self.tau2) > c.tol.eps_geom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    /// Every sampled point of a large box has a finite cone value.
    pub axiom_i: bool,
    /// Levels are nested.
    pub axiom_ii: bool,
    /// Levels are closed: each point lies in the level of its own value.
    pub axiom_iii: bool,
    pub nesting_witness: Option<NestingWitness>,
    pub closedness_witness: Option<Point3>,
    pub samples: usize,
    pub seed: u64,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.axiom_i && self.axiom_ii && self.axiom_iii
    }
}

const FLIP_GRID: usize = 48;

/// Samples the family axioms I-III of the levels `δ_τ K`.
pub fn family_axioms_check(c: &ConeFunction, n: usize, seed: u64) -> Result<FamilyReport> {
    let bbox = match c.kind {
        ConeKind::Heisenberg => c.source.bbox().dilated(4.0),
        ConeKind::Euclidean => {
            let b = c.source.bbox();
            crate::sets::BBox::new(b.lo.map(|v| 4.0 * v), b.hi.map(|v| 4.0 * v))
        }
    };
    let eps = c.tol.eps_geom;

    let axiom_i = (0..n).into_par_iter().all(|i| {
        let mut rng = rng_for(seed, stream::FAMILY, i as u64);
        let xi = bbox.sample(&mut rng);
        c.eval(xi).is_ok_and(f64::is_finite)
    });

    // random pairs τ1 < τ2 plus a geometric τ-grid scan for an in → out flip
    let nesting = first_hit(n, |i| {
        let mut rng = rng_for(seed, stream::FAMILY, (1u64 << 40) + i as u64);
        let xi = bbox.sample(&mut rng);
        let t1: f64 = 8.0 * (1.0 - rng.gen::<f64>());
        let t2: f64 = t1 + (8.0 - t1) * (1.0 - rng.gen::<f64>());
        let w = NestingWitness {
            tau1: t1,
            tau2: t2,
            xi,
        };
        if t1 < t2 && w.replays(c) {
            return Ok(Some(w));
        }
        let taus: Vec<f64> = (0..FLIP_GRID)
            .map(|k| (1.0 / 16.0) * 256f64.powf(k as f64 / (FLIP_GRID - 1) as f64))
            .collect();
        for a in 0..FLIP_GRID {
            if !c.level_contains(xi, taus[a]) {
                continue;
            }
            for &tb in &taus[a + 1..] {
                let w = NestingWitness {
                    tau1: taus[a],
                    tau2: tb,
                    xi,
                };
                if w.replays(c) {
                    return Ok(Some(w));
                }
            }
            break;
        }
        Ok(None)
    })?;

    let closed = first_hit(n, |i| {
        let mut rng = rng_for(seed, stream::FAMILY, (2u64 << 40) + i as u64);
        let xi = bbox.sample(&mut rng);
        let Ok((_, hi)) = c.bracket(xi) else {
            return Ok(None);
        };
        if hi == 0.0 {
            return Ok(None);
        }
        let ok = (0..24).all(|k| c.level_contains(xi, hi * (1.0 + 2f64.powi(-k))))
            && (c.level_contains(xi, hi) || c.level_defect(xi, hi) <= eps);
        Ok((!ok).then_some(xi))
    })?;

    Ok(FamilyReport {
        axiom_i,
        axiom_ii: nesting.is_none(),
        axiom_iii: closed.is_none(),
        nesting_witness: nesting.map(|(_, w)| w),
        closedness_witness: closed.map(|(_, p)| p),
        samples: n,
        seed,
    })
}

/// Outcome of [`cone_validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeValidation {
    pub verdict: String,
    pub not_falsified: bool,
    pub family: FamilyReport,
    pub homogeneity: Option<HomogeneityReport>,
    pub convexity: Option<ConvexityOutcome>,
}

pub const VERDICT_CANDIDATE: &str = "candidate H-cone-function (not falsified)";

/// Runs the family axioms, then homogeneity and the H-convexity falsifier on
/// the cone over the domain `δ_2 K`.
pub fn cone_validate(c: &ConeFunction, n: usize, seed: u64) -> Result<ConeValidation> {
    let family = family_axioms_check(c, n.min(4096), seed)?;
    if !family.passed() {
        return Ok(ConeValidation {
            verdict: "precondition failed: family axioms do not hold".into(),
            not_falsified: false,
            family,
            homogeneity: None,
            convexity: None,
        });
    }
    let f = c.as_fn();
    let homogeneity = check_homogeneous(&f, n, seed, &c.tol);
    let domain = c.source.dilated(2.0)?;
    let convexity = check_hconvex_fn(&f, &domain, n, VALIDATE_GRID, seed, &c.tol)?;
    let not_falsified = homogeneity.holds && convexity.witness.is_none();
    let verdict = if not_falsified {
        VERDICT_CANDIDATE.to_string()
    } else if convexity.witness.is_some() {
        "H-convexity falsified".to_string()
    } else {
        "homogeneity falsified".to_string()
    };
    Ok(ConeValidation {
        verdict,
        not_falsified,
        family,
        homogeneity: Some(homogeneity),
        convexity: Some(convexity),
    })
}

/// Largest deviation between a cone function and a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormComparison {
    pub max_abs_dev: f64,
    pub worst: Point3,
    pub samples: usize,
    pub seed: u64,
}

/// Compares `c` with `closed` on `n` uniform samples of `region`.
pub fn compare_closed_form<F>(
    c: &ConeFunction,
    closed: F,
    region: &BBox,
    n: usize,
    seed: u64,
) -> Result<ClosedFormComparison>
where
    F: Fn(Point3) -> f64 + Sync,
{
    if n == 0 || !region.is_finite() {
        return Err(Error::InvalidArgument(
            "need n >= 1 and a finite region".into(),
        ));
    }
    let devs = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = region.sample(&mut rng_for(seed, stream::CLOSED_FORM, i as u64));
            c.eval(p).map(|v| ((v - closed(p)).abs(), i, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let (max_abs_dev, _, worst) =
        devs.into_iter()
            .fold((0.0, usize::MAX, Point3::default()), |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            });
    Ok(ClosedFormComparison {
        max_abs_dev,
        worst,
        samples: n,
        seed,
    })
}
