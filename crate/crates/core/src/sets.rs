//! Compact sets as membership oracles.
//!
//! A [`SetOracle`] wraps a *defect* function `d` with `K = {d ≤ 0}`. Gallery
//! sets use a distance-like defect (a gauge minus its radius, a signed distance)
//! so that membership can be tested with a slack and escaping points carry a
//! meaningful clearance. Oracles built from bare predicates use a unit defect
//! (`-1` inside, `+1` outside).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{horizontal_point, koranyi, HVec, Point3, Tolerances, IDENTITY};
use crate::sampling::{self, first_hit, rng_for, stream};

pub type DefectFn = Arc<dyn Fn(Point3) -> f64 + Send + Sync>;
pub type ProfileDefectFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Rejection-sampling attempts per requested interior point.
const INTERIOR_TRIES: usize = 20_000;
/// Partner attempts per horizontal pair.
const PARTNER_TRIES: usize = 64;
/// Default θ-grid size for horizontal segments (odd, so θ = 1/2 is on it).
pub const DEFAULT_SEGMENT_GRID: usize = 33;

/// Axis-aligned box in `(x, y, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn symmetric(x: f64, y: f64, t: f64) -> Self {
        Self::new([-x, -y, -t], [x, y, t])
    }

    pub fn contains(&self, p: Point3) -> bool {
        let c = p.to_array();
        (0..3).all(|i| c[i] >= self.lo[i] && c[i] <= self.hi[i])
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(self.hi.iter()).all(|v| v.is_finite())
    }

    pub fn diameter(&self) -> f64 {
        (0..3)
            .map(|i| (self.hi[i] - self.lo[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute coordinate.
    pub fn scale(&self) -> f64 {
        self.lo
            .iter()
            .chain(self.hi.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn inflated(&self, pad: f64) -> Self {
        let mut b = *self;
        for i in 0..3 {
            b.lo[i] -= pad;
            b.hi[i] += pad;
        }
        b
    }

    /// Image of the box under `δ_α`.
    pub fn dilated(&self, alpha: f64) -> Self {
        Self::new(
            [
                alpha * self.lo[0],
                alpha * self.lo[1],
                alpha * alpha * self.lo[2],
            ],
            [
                alpha * self.hi[0],
                alpha * self.hi[1],
                alpha * alpha * self.hi[2],
            ],
        )
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point3 {
        let c: [f64; 3] = std::array::from_fn(|i| {
            if self.hi[i] > self.lo[i] {
                rng.gen_range(self.lo[i]..=self.hi[i])
            } else {
                self.lo[i]
            }
        });
        c.into()
    }
}

/// Profile `(r, t)` of a set invariant under rotations about the t-axis.
#[derive(Clone)]
pub struct RadialProfile {
    defect: ProfileDefectFn,
    pub r_max: f64,
    pub t_range: [f64; 2],
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("r_max", &self.r_max)
            .field("t_range", &self.t_range)
            .finish_non_exhaustive()
    }
}

impl RadialProfile {
    pub fn new(
        defect: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        r_max: f64,
        t_range: [f64; 2],
    ) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "r_max must be positive, got {r_max}"
            )));
        }
        if !(t_range[0] <= t_range[1]) || !t_range[0].is_finite() || !t_range[1].is_finite() {
            return Err(Error::InvalidArgument(format!("bad t_range {t_range:?}")));
        }
        Ok(Self {
            defect: Arc::new(defect),
            r_max,
            t_range,
        })
    }

    pub fn from_predicate(
        contains: impl Fn(f64, f64) -> bool + Send + Sync + 'static,
        r_max: f64,
        t_range: [f64; 2],
    ) -> Result<Self> {
        Self::new(
            move |r, t| if contains(r, t) { -1.0 } else { 1.0 },
            r_max,
            t_range,
        )
    }

    /// Closed polygon in the half-plane `r ≥ 0` with even-odd membership.
    /// The defect is the signed distance to the polygon boundary.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::BadParam {
                param: "vertices".into(),
                reason: "a polygon needs at least 3 vertices".into(),
            });
        }
        if vertices
            .iter()
            .any(|v| !(v[0] >= 0.0) || !v[1].is_finite() || !v[0].is_finite())
        {
            return Err(Error::BadParam {
                param: "vertices".into(),
                reason: "vertices must be finite with r >= 0".into(),
            });
        }
        let r_max = vertices.iter().fold(0.0f64, |m, v| m.max(v[0]));
        let t_lo = vertices.iter().fold(f64::INFINITY, |m, v| m.min(v[1]));
        let t_hi = vertices.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v[1]));
        Self::new(
            move |r, t| polygon_signed_distance(&vertices, r, t),
            r_max,
            [t_lo, t_hi],
        )
    }

    /// Profile defect; `+∞` outside `[0, r_max] × t_range`.
    pub fn defect(&self, r: f64, t: f64) -> f64 {
        if r < 0.0 || r > self.r_max || t < self.t_range[0] || t > self.t_range[1] {
            return f64::INFINITY;
        }
        (self.defect)(r, t)
    }

    pub fn contains2d(&self, r: f64, t: f64, slack: f64) -> bool {
        self.defect(r, t) <= slack
    }
}

fn polygon_signed_distance(vertices: &[[f64; 2]], r: f64, t: f64) -> f64 {
    let mut inside = false;
    let mut dist = f64::INFINITY;
    let n = vertices.len();
    for i in 0..n {
        let [ax, ay] = vertices[i];
        let [bx, by] = vertices[(i + 1) % n];
        if (ay > t) != (by > t) {
            let x_cross = ax + (t - ay) * (bx - ax) / (by - ay);
            if r < x_cross {
                inside = !inside;
            }
        }
        let (ex, ey) = (bx - ax, by - ay);
        let len2 = ex * ex + ey * ey;
        let s = if len2 > 0.0 {
            (((r - ax) * ex + (t - ay) * ey) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        dist = dist.min((r - ax - s * ex).hypot(t - ay - s * ey));
    }
    if inside {
        -dist
    } else {
        dist
    }
}

/// A compact candidate set `K` given by a membership oracle.
#[derive(Clone)]
pub struct SetOracle {
    defect: DefectFn,
    bbox: BBox,
    label: String,
    compact: bool,
    slack: f64,
    profile: Option<RadialProfile>,
}

impl fmt::Debug for SetOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetOracle")
            .field("label", &self.label)
            .field("bbox", &self.bbox)
            .field("compact", &self.compact)
            .field("slack", &self.slack)
            .field("is_radial", &self.profile.is_some())
            .finish_non_exhaustive()
    }
}

impl SetOracle {
    /// Oracle `{p ∈ bbox : defect(p) ≤ 0}`.
    pub fn new(
        label: impl Into<String>,
        bbox: BBox,
        defect: impl Fn(Point3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            defect: Arc::new(defect),
            bbox,
            label: label.into(),
            compact: bbox.is_finite(),
            slack: Tolerances::default().eps_geom,
            profile: None,
        }
    }

    pub fn from_predicate(
        label: impl Into<String>,
        bbox: BBox,
        contains: impl Fn(Point3) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, bbox, move |p| if contains(p) { -1.0 } else { 1.0 })
    }

    /// Marks the oracle as a truncation of an unbounded set.
    pub fn non_compact(mut self) -> Self {
        self.compact = false;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn is_radial(&self) -> bool {
        self.profile.is_some()
    }

    pub fn profile(&self) -> Option<&RadialProfile> {
        self.profile.as_ref()
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    /// Defect of `p`; `+∞` outside the bounding box grown by the slack.
    pub fn defect(&self, p: Point3) -> f64 {
        let outside = if self.slack > 0.0 {
            !self.bbox.inflated(self.slack).contains(p)
        } else {
            !self.bbox.contains(p)
        };
        if outside {
            return f64::INFINITY;
        }
        (self.defect)(p)
    }

    /// Closed membership with the oracle's slack.
    pub fn contains(&self, p: Point3) -> bool {
        self.defect(p) <= self.slack
    }

    /// Membership without slack.
    pub fn contains_exact(&self, p: Point3) -> bool {
        self.defect(p) <= 0.0
    }

    /// `δ_α K`. Defects are scaled by `α` so gauge-like defects stay
    /// homogeneous.
    pub fn dilated(&self, alpha: f64) -> Result<SetOracle> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "set dilation factor must be positive, got {alpha}"
            )));
        }
        let inner = self.defect.clone();
        let inv = 1.0 / alpha;
        let profile = self.profile.as_ref().map(|p| {
            let d = p.defect.clone();
            RadialProfile {
                defect: Arc::new(move |r, t| alpha * d(r * inv, t * inv * inv)),
                r_max: alpha * p.r_max,
                t_range: [alpha * alpha * p.t_range[0], alpha * alpha * p.t_range[1]],
            }
        });
        Ok(SetOracle {
            defect: Arc::new(move |p| alpha * inner(p.dilated(inv))),
            bbox: self.bbox.dilated(alpha),
            label: format!("dilate({alpha}, {})", self.label),
            compact: self.compact,
            slack: self.slack,
            profile,
        })
    }

    /// Left translate `c ∘ K`.
    pub fn translated(&self, c: Point3) -> SetOracle {
        let inner = self.defect.clone();
        let inner_box = self.bbox;
        let cinv = c.inverse();
        // image of the box corners bounds the image of the box: the group law is
        // affine in q for fixed c, so extreme values sit on corners
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for mask in 0..8 {
            let q = Point3::new(
                if mask & 1 == 0 {
                    inner_box.lo[0]
                } else {
                    inner_box.hi[0]
                },
                if mask & 2 == 0 {
                    inner_box.lo[1]
                } else {
                    inner_box.hi[1]
                },
                if mask & 4 == 0 {
                    inner_box.lo[2]
                } else {
                    inner_box.hi[2]
                },
            );
            let img = c.compose(q).to_array();
            for i in 0..3 {
                lo[i] = lo[i].min(img[i]);
                hi[i] = hi[i].max(img[i]);
            }
        }
        SetOracle {
            defect: Arc::new(move |p| {
                let q = cinv.compose(p);
                if inner_box.contains(q) {
                    inner(q)
                } else {
                    f64::INFINITY
                }
            }),
            bbox: BBox::new(lo, hi),
            label: format!("translate({:?}, {})", c.to_array(), self.label),
            compact: self.compact,
            slack: self.slack,
            profile: None,
        }
    }

    /// `K ∪ L`.
    pub fn union(&self, other: &SetOracle) -> SetOracle {
        let (a, b) = (self.clone(), other.clone());
        let bbox = BBox::new(
            std::array::from_fn(|i| self.bbox.lo[i].min(other.bbox.lo[i])),
            std::array::from_fn(|i| self.bbox.hi[i].max(other.bbox.hi[i])),
        );
        SetOracle {
            defect: Arc::new(move |p| a.defect(p).min(b.defect(p))),
            bbox,
            label: format!("union({}, {})", self.label, other.label),
            compact: self.compact && other.compact,
            slack: self.slack.min(other.slack),
            profile: None,
        }
    }

    /// Rejection sample from the bounding box.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R, tries: usize) -> Option<Point3> {
        (0..tries)
            .map(|_| self.bbox.sample(rng))
            .find(|&p| self.contains(p))
    }
}

/// Oracle of the radial set with profile `profile`.
pub fn radial_to_oracle(profile: RadialProfile, label: impl Into<String>) -> SetOracle {
    let r = profile.r_max;
    let [t_lo, t_hi] = profile.t_range;
    let pad = 1e-6 * (1.0 + r.max(t_lo.abs()).max(t_hi.abs()));
    let bbox = BBox::new([-r, -r, t_lo], [r, r, t_hi]).inflated(pad);
    let p = profile.clone();
    SetOracle {
        defect: Arc::new(move |q: Point3| (p.defect)(q.radius(), q.t)),
        bbox,
        label: label.into(),
        compact: true,
        slack: Tolerances::default().eps_geom,
        profile: Some(profile),
    }
}

// ---------------------------------------------------------------------------
// Gallery
// ---------------------------------------------------------------------------

/// A parameter value in a set descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Vertices(Vec<[f64; 2]>),
}

pub type ParamMap = BTreeMap<String, ParamValue>;

/// Gallery set names accepted by [`gallery`].
pub const GALLERY_NAMES: [&str; 7] = [
    "koranyi_ball",
    "euclidean_ball",
    "cylinder",
    "cylinder_hat",
    "importante",
    "slab_x",
    "radial_custom",
];

/// Typed gallery descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", content = "params", rename_all = "snake_case")]
pub enum SetDescriptor {
    /// `‖ξ‖_G ≤ r`.
    KoranyiBall { r: f64 },
    /// `‖ξ‖_E ≤ r`.
    EuclideanBall { r: f64 },
    /// `‖(x,y)‖_E ≤ radius, |t| ≤ height`.
    Cylinder { radius: f64, height: f64 },
    /// `‖(x,y)‖_E ≤ 1` capped by the Korányi ball of radius 2.
    CylinderHat,
    /// Sublevel set `{f ≤ 1}` of the radial non-example.
    Importante,
    /// `|x| ≤ half_width`, truncated to a box of half-size `truncate`.
    SlabX { half_width: f64, truncate: f64 },
    /// Polygonal `(r, t)` profile.
    RadialCustom { vertices: Vec<[f64; 2]> },
}

fn number(set: &str, params: &ParamMap, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(ParamValue::Number(v)) if v.is_finite() && *v > 0.0 => Ok(*v),
        Some(_) => Err(Error::BadParam {
            param: key.into(),
            reason: "expected a positive finite number".into(),
        }),
        None => default.ok_or_else(|| Error::MissingParam {
            set: set.into(),
            param: key.into(),
        }),
    }
}

impl SetDescriptor {
    pub fn from_name(name: &str, params: &ParamMap) -> Result<Self> {
        let allowed: &[&str] = match name {
            "koranyi_ball" | "euclidean_ball" => &["r"],
            "cylinder" => &["radius", "height"],
            "cylinder_hat" | "importante" => &[],
            "slab_x" => &["half_width", "truncate"],
            "radial_custom" => &["vertices"],
            other => return Err(Error::UnknownSet(other.to_string())),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::BadParam {
                param: k.clone(),
                reason: format!("not a parameter of `{name}`"),
            });
        }
        Ok(match name {
            "koranyi_ball" => Self::KoranyiBall {
                r: number(name, params, "r", Some(1.0))?,
            },
            "euclidean_ball" => Self::EuclideanBall {
                r: number(name, params, "r", Some(1.0))?,
            },
            "cylinder" => Self::Cylinder {
                radius: number(name, params, "radius", Some(1.0))?,
                height: number(name, params, "height", Some(1.0))?,
            },
            "cylinder_hat" => Self::CylinderHat,
            "importante" => Self::Importante,
            "slab_x" => Self::SlabX {
                half_width: number(name, params, "half_width", Some(1.0))?,
                truncate: number(name, params, "truncate", Some(10.0))?,
            },
            _ => match params.get("vertices") {
                Some(ParamValue::Vertices(v)) => Self::RadialCustom {
                    vertices: v.clone(),
                },
                Some(_) => {
                    return Err(Error::BadParam {
                        param: "vertices".into(),
                        reason: "expected a list of [r, t] pairs".into(),
                    })
                }
                None => {
                    return Err(Error::MissingParam {
                        set: name.into(),
                        param: "vertices".into(),
                    })
                }
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::KoranyiBall { .. } => "koranyi_ball",
            Self::EuclideanBall { .. } => "euclidean_ball",
            Self::Cylinder { .. } => "cylinder",
            Self::CylinderHat => "cylinder_hat",
            Self::Importante => "importante",
            Self::SlabX { .. } => "slab_x",
            Self::RadialCustom { .. } => "radial_custom",
        }
    }

    /// Radial profile, for every radial gallery set.
    pub fn profile(&self) -> Result<Option<RadialProfile>> {
        let p = match *self {
            Self::KoranyiBall { r } => {
                RadialProfile::new(move |q, t| (q * q).hypot(t).sqrt() - r, r, [-r * r, r * r])?
            }
            Self::EuclideanBall { r } => {
                RadialProfile::new(move |q, t| q.hypot(t) - r, r, [-r, r])?
            }
            Self::Cylinder { radius, height } => RadialProfile::new(
                move |q, t| (q - radius).max(t.abs() - height),
                radius,
                [-height, height],
            )?,
            Self::CylinderHat => RadialProfile::new(
                |q, t| (q - 1.0).max((q * q).hypot(t).sqrt() - 2.0),
                1.0,
                [-4.0, 4.0],
            )?,
            Self::Importante => {
                let k = importante::Constants::get();
                let n = k.xi_bar_norm;
                RadialProfile::new(|q, t| importante::f_profile(q, t) - 1.0, n, [-n * n, n * n])?
            }
            Self::SlabX { .. } => return Ok(None),
            Self::RadialCustom { ref vertices } => RadialProfile::polygon(vertices.clone())?,
        };
        Ok(Some(p))
    }

    pub fn build(&self) -> Result<SetOracle> {
        let label = self.label();
        if let Self::SlabX {
            half_width,
            truncate,
        } = *self
        {
            if truncate < half_width {
                return Err(Error::BadParam {
                    param: "truncate".into(),
                    reason: "must be at least half_width".into(),
                });
            }
            let bbox = BBox::new(
                [-half_width, -truncate, -truncate * truncate],
                [half_width, truncate, truncate * truncate],
            )
            .inflated(1e-6 * (1.0 + truncate * truncate));
            return Ok(SetOracle::new(label, bbox, move |p| p.x.abs() - half_width).non_compact());
        }
        let profile = self.profile()?.expect("non-slab gallery sets are radial");
        Ok(radial_to_oracle(profile, label))
    }

    fn label(&self) -> String {
        match self {
            Self::KoranyiBall { r } => format!("koranyi_ball(r={r})"),
            Self::EuclideanBall { r } => format!("euclidean_ball(r={r})"),
            Self::Cylinder { radius, height } => {
                format!("cylinder(radius={radius}, height={height})")
            }
            Self::SlabX {
                half_width,
                truncate,
            } => format!("slab_x(half_width={half_width}, truncate={truncate})"),
            other => other.name().to_string(),
        }
    }

    /// Closed form of the dilation cone function, when one is known.
    pub fn closed_form_cone(&self) -> Option<Arc<dyn Fn(Point3) -> f64 + Send + Sync>> {
        match *self {
            Self::KoranyiBall { r } => Some(Arc::new(move |p| koranyi(p) / r)),
            Self::EuclideanBall { r } => Some(Arc::new(move |p: Point3| {
                // root of r²τ⁴ − ρ²τ² − t² = 0
                let rho2 = p.x * p.x + p.y * p.y;
                ((rho2 + rho2.hypot(2.0 * r * p.t)) / (2.0 * r * r)).sqrt()
            })),
            Self::Cylinder { radius, height } => Some(Arc::new(move |p: Point3| {
                (p.radius() / radius).max((p.t.abs() / height).sqrt())
            })),
            Self::CylinderHat => Some(Arc::new(|p: Point3| p.radius().max(0.5 * koranyi(p)))),
            Self::SlabX { half_width, .. } => {
                Some(Arc::new(move |p: Point3| p.x.abs() / half_width))
            }
            Self::Importante | Self::RadialCustom { .. } => None,
        }
    }
}

/// Builds a gallery set from its name and parameters.
pub fn gallery(name: &str, params: &ParamMap) -> Result<SetOracle> {
    SetDescriptor::from_name(name, params)?.build()
}

/// Constants and defining function of the radial set that fails to generate an
/// H-convex family.
pub mod importante {
    use std::sync::OnceLock;

    use crate::heis::{koranyi, Point3};

    #[derive(Debug, Clone, Copy)]
    pub struct Constants {
        /// Boundary radius at `t = 0`: `((1+2^{1/4})⁴ − 2)^{1/4}`.
        pub c0: f64,
        /// Largest radius, reached at `sin t = −1`: `((1+2^{1/4})⁴ − 3/2)^{1/4}`.
        pub c: f64,
        /// `‖(c, 0, 3π/2)‖_G`.
        pub xi_bar_norm: f64,
    }

    impl Constants {
        pub fn get() -> &'static Constants {
            static K: OnceLock<Constants> = OnceLock::new();
            K.get_or_init(|| {
                let q = (1.0 + 2f64.powf(0.25)).powi(4);
                let c0 = (q - 2.0).powf(0.25);
                let c = (q - 1.5).powf(0.25);
                let xi_bar_norm = koranyi(Point3::new(c, 0.0, 1.5 * std::f64::consts::PI));
                Constants { c0, c, xi_bar_norm }
            })
        }
    }

    /// `((x²+y²)² + 2 + ½ sin t)^{1/4} − 2^{1/4}`.
    pub fn f1(r: f64, t: f64) -> f64 {
        (r.powi(4) + 2.0 + 0.5 * t.sin()).powf(0.25) - 2f64.powf(0.25)
    }

    /// `max(f1, ‖ξ‖_G / ‖ξ̄‖_G)` in profile coordinates.
    pub fn f_profile(r: f64, t: f64) -> f64 {
        let n = Constants::get().xi_bar_norm;
        f1(r, t).max((r * r).hypot(t).sqrt() / n)
    }

    pub fn f(p: Point3) -> f64 {
        f_profile(p.radius(), p.t)
    }
}

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

/// A horizontal segment with endpoints in `K` leaving `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentWitness {
    pub xi: Point3,
    pub v: HVec,
    pub theta: f64,
    /// `ξ ∘ exp(θ v)`.
    pub point: Point3,
    /// Defect of `point`; exceeds the oracle slack.
    pub margin: f64,
    pub sample_index: usize,
}

impl SegmentWitness {
    /// Re-checks the witness against `k` from its stored fields.
    pub fn replay(&self, k: &SetOracle) -> Result<()> {
        let end = horizontal_point(self.xi, self.v, 1.0);
        if !k.contains(self.xi) || !k.contains(end) {
            return Err(Error::Replay("segment endpoint outside the set".into()));
        }
        let p = horizontal_point(self.xi, self.v, self.theta);
        if p != self.point || k.contains(p) {
            return Err(Error::Replay("segment point does not escape".into()));
        }
        Ok(())
    }
}

/// A sampled violation of `δ_τ K ⊂ K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationWitness {
    pub point: Point3,
    pub tau: f64,
}

/// Outcome of [`check_axioms`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub label: String,
    /// Compact with `e` in the interior.
    pub a_holds: bool,
    /// `δ_τ K ⊂ K` on every sample.
    pub b_holds: bool,
    /// No horizontal segment escaped.
    pub c_holds: bool,
    pub compact: bool,
    pub b_witness: Option<DilationWitness>,
    pub hconvex_witness: Option<SegmentWitness>,
    /// Horizontal pairs actually tested for c.
    pub c_pairs: usize,
    pub samples_used: usize,
    pub seed: u64,
}

/// Probes `e` ∈ int K on a small quasi-sphere.
pub fn identity_is_interior(k: &SetOracle, n: usize, seed: u64) -> bool {
    if !k.contains(IDENTITY) {
        return false;
    }
    let half = (0..3)
        .map(|i| (k.bbox().hi[i] - k.bbox().lo[i]) * 0.5)
        .fold(f64::INFINITY, f64::min);
    let rho = 1e-3 * half.min(1.0);
    let on_quasi_sphere = |d: [f64; 3]| {
        let p = Point3::from(d);
        let q = p.radius().max(p.t.abs().sqrt());
        p.dilated(rho / q)
    };
    let mut probes = Vec::with_capacity(26 + n);
    for i in -1..=1 {
        for j in -1..=1 {
            for l in -1..=1 {
                if (i, j, l) != (0, 0, 0) {
                    probes.push(on_quasi_sphere([i as f64, j as f64, l as f64]));
                }
            }
        }
    }
    for idx in 0..n.min(512) {
        let mut rng = rng_for(seed, stream::AXIOM_A, idx as u64);
        let p = on_quasi_sphere(sampling::unit_vec3(&mut rng));
        let s: f64 = rng.gen();
        probes.push(p.dilated(s));
    }
    probes.into_iter().all(|p| k.contains(p))
}

/// Samples a pair `(ξ, v)` with `ξ ∈ K` and `ξ ∘ exp(v) ∈ K` for sample
/// `index`. Partners come alternately from projecting an independent sample of
/// `K` onto `H_ξ` and from a random horizontal step.
pub(crate) fn horizontal_pair(k: &SetOracle, seed: u64, index: usize) -> Option<(Point3, HVec)> {
    let mut rng = rng_for(seed, stream::HORIZONTAL_PAIRS, index as u64);
    let xi = k.sample_interior(&mut rng, INTERIOR_TRIES)?;
    let diam = k.bbox().diameter().max(1e-3);
    for attempt in 0..PARTNER_TRIES {
        let v = if attempt % 2 == 0 {
            let q = k.bbox().sample(&mut rng);
            HVec::new(q.x - xi.x, q.y - xi.y)
        } else {
            sampling::unit_hvec(&mut rng).scaled(sampling::log_uniform(&mut rng, 1e-3, diam))
        };
        if k.contains(horizontal_point(xi, v, 1.0)) {
            return Some((xi, v));
        }
    }
    None
}

/// Evaluates the θ-grid `k/(m−1)` of a horizontal segment and returns the most
/// escaping interior grid point, if any escapes.
fn segment_escape(k: &SetOracle, xi: Point3, v: HVec, m: usize) -> Option<(f64, Point3, f64)> {
    let mut worst: Option<(f64, Point3, f64)> = None;
    for j in 1..m.saturating_sub(1) {
        let theta = j as f64 / (m - 1) as f64;
        let p = horizontal_point(xi, v, theta);
        let d = k.defect(p);
        if d > k.slack() && worst.is_none_or(|w| d > w.2) {
            worst = Some((theta, p, d));
        }
    }
    worst
}

/// Outcome of the H-convex-set falsifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HconvexSetOutcome {
    pub witness: Option<SegmentWitness>,
    pub pairs_tested: usize,
    pub samples: usize,
}

/// Falsifier for H-convexity of the set `K` (assumption c): `n` sampled
/// horizontal pairs, each segment tested on an `m`-point θ-grid.
pub fn check_hconvex_set(
    k: &SetOracle,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<HconvexSetOutcome> {
    let m = m.max(3);
    let hit = first_hit(n, |i| {
        Ok(horizontal_pair(k, seed, i).and_then(|(xi, v)| {
            segment_escape(k, xi, v, m).map(|(theta, point, margin)| SegmentWitness {
                xi,
                v,
                theta,
                point,
                margin,
                sample_index: i,
            })
        }))
    })?;
    let samples = hit.as_ref().map_or(n, |(i, _)| i + 1);
    let pairs_tested = if hit.is_some() {
        samples
    } else {
        (0..n)
            .filter(|&i| horizontal_pair_exists(k, seed, i))
            .count()
    };
    Ok(HconvexSetOutcome {
        witness: hit.map(|(_, w)| w),
        pairs_tested,
        samples,
    })
}

fn horizontal_pair_exists(k: &SetOracle, seed: u64, i: usize) -> bool {
    horizontal_pair(k, seed, i).is_some()
}

/// First sampled `p ∈ K`, `τ ∈ (0,1)` with `scale(p, τ) ∉ K`. With
/// `Point3::dilated` this is assumption b.
pub fn star_shaped_witness(
    k: &SetOracle,
    n: usize,
    seed: u64,
    scale: impl Fn(Point3, f64) -> Point3 + Sync,
) -> Result<Option<DilationWitness>> {
    let hit = first_hit(n, |i| {
        let mut rng = rng_for(seed, stream::AXIOM_B, i as u64);
        let Some(p) = k.sample_interior(&mut rng, INTERIOR_TRIES) else {
            return Ok(None);
        };
        let tau: f64 = rng.gen_range(f64::EPSILON..1.0);
        Ok((!k.contains(scale(p, tau))).then_some(DilationWitness { point: p, tau }))
    })?;
    Ok(hit.map(|(_, w)| w))
}

/// Checks assumptions a (compact, `e` interior), b (`δ_τ K ⊂ K` for
/// `τ ∈ (0,1)`) and c (H-convexity) by sampling.
pub fn check_axioms(k: &SetOracle, n: usize, seed: u64, tol: &Tolerances) -> Result<AxiomReport> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    tol.validate()?;
    let k = k.clone().with_slack(tol.eps_geom);
    let compact = k.is_compact() && k.bbox().is_finite();
    let a_holds = compact && identity_is_interior(&k, n, seed);

    let b_witness = star_shaped_witness(&k, n, seed, Point3::dilated)?;

    let c = check_hconvex_set(&k, n, DEFAULT_SEGMENT_GRID, seed)?;
    Ok(AxiomReport {
        label: k.label().to_string(),
        a_holds,
        b_holds: b_witness.is_none(),
        c_holds: c.witness.is_none(),
        compact,
        b_witness,
        hconvex_witness: c.witness,
        c_pairs: c.pairs_tested,
        samples_used: 2 * n,
        seed,
    })
}

/// Boundary point on the dilation ray `τ ↦ δ_τ(direction)`: the last point
/// inside after bracketing and bisection. Exact for sets satisfying
/// assumption b.
pub fn ray_boundary(k: &SetOracle, direction: Point3, tol: &Tolerances) -> Result<Point3> {
    let tau = ray_exit(k, direction, tol)?;
    Ok(direction.dilated(tau))
}

fn ray_exit(k: &SetOracle, direction: Point3, tol: &Tolerances) -> Result<f64> {
    if !k.is_compact() {
        return Err(Error::NonCompact(k.label().to_string()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let limit = 2f64.powi(32) * (1.0 + k.bbox().scale());
    while k.contains(direction.dilated(hi)) {
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return Err(Error::NonCompact(k.label().to_string()));
        }
    }
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if k.contains(direction.dilated(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `n` boundary points found by bisection along dilation rays from `e` in
/// random directions.
pub fn boundary_sample(k: &SetOracle, n: usize, seed: u64) -> Result<Vec<Point3>> {
    if !k.is_compact() {
        return Err(Error::NonCompact(k.label().to_string()));
    }
    if !k.contains(IDENTITY) {
        return Err(Error::IdentityNotInterior(k.label().to_string()));
    }
    let tol = Tolerances::default();
    (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, stream::BOUNDARY, i as u64);
            let d = Point3::from(sampling::unit_vec3(&mut rng));
            let d = d.dilated(1.0 / koranyi(d));
            ray_boundary(k, d, &tol)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &str) -> SetOracle {
        gallery(name, &ParamMap::new()).unwrap()
    }

    #[test]
    fn koranyi_ball_is_closed() {
        let k = named("koranyi_ball");
        assert!(k.contains(Point3::new(0.0, 0.0, 1.0)));
        assert!(k.contains(Point3::new(1.0, 0.0, 0.0)));
        assert!(!k.contains(Point3::new(0.0, 0.0, 1.01)));
        assert!(k.is_radial());
    }

    #[test]
    fn cylinder_hat_membership() {
        let k = named("cylinder_hat");
        // on the Korányi cap
        assert!(k.contains(Point3::new(0.0, 0.0, 4.0)));
        assert!(!k.contains(Point3::new(0.0, 0.0, 4.01)));
        assert!(k.contains(Point3::new(0.0, 0.0, 2.0)));
        // side wall meets the cap at t² = 15
        assert!(k.contains(Point3::new(1.0, 0.0, 15f64.sqrt())));
        assert!(!k.contains(Point3::new(1.0, 0.0, 3.9)));
        assert!(!k.contains(Point3::new(1.01, 0.0, 0.0)));
    }

    #[test]
    fn importante_constants_and_membership() {
        let c = importante::Constants::get();
        assert!((c.c0 - 2.139_911_859_798_491).abs() < 1e-12);
        assert!((c.c - 2.152_555_589_429_272).abs() < 1e-12);
        let k = named("importante");
        assert!(!k.contains(Point3::new(c.c, 0.0, 0.0)));
        assert!(k.contains(Point3::new(c.c0, 0.0, 0.0)));
        assert!(!k.contains(Point3::new(c.c0 + 1e-3, 0.0, 0.0)));
        // ξ̄ = (c, 0, 3π/2) is a boundary point
        assert!(k.contains(Point3::new(c.c, 0.0, 1.5 * std::f64::consts::PI)));
        // (c0, 0, π/2) ∉ K while (c0, 0, 0), (c0, 0, π) ∈ K
        assert!(!k.contains(Point3::new(c.c0, 0.0, 0.5 * std::f64::consts::PI)));
        assert!(k.contains(Point3::new(c.c0, 0.0, std::f64::consts::PI)));
    }

    #[test]
    fn gallery_errors() {
        assert_eq!(
            gallery("dodecahedron", &ParamMap::new()).unwrap_err(),
            Error::UnknownSet("dodecahedron".into())
        );
        assert!(matches!(
            gallery("radial_custom", &ParamMap::new()),
            Err(Error::MissingParam { .. })
        ));
        let mut p = ParamMap::new();
        p.insert("r".into(), ParamValue::Number(-1.0));
        assert!(matches!(
            gallery("koranyi_ball", &p),
            Err(Error::BadParam { .. })
        ));
        let mut p = ParamMap::new();
        p.insert("radius".into(), ParamValue::Number(1.0));
        assert!(matches!(
            gallery("koranyi_ball", &p),
            Err(Error::BadParam { .. })
        ));
    }

    #[test]
    fn descriptor_json_shape() {
        let d = SetDescriptor::KoranyiBall { r: 2.0 };
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"set":"koranyi_ball","params":{"r":2.0}}"#);
        let back: SetDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn radial_profiles_match_direct_definitions() {
        let cyl = radial_to_oracle(
            RadialProfile::from_predicate(|r, t| r <= 1.0 && t.abs() <= 1.0, 1.0, [-1.0, 1.0])
                .unwrap(),
            "cyl",
        );
        let gal = named("cylinder");
        let ball = radial_to_oracle(
            RadialProfile::from_predicate(|r, t| r.powi(4) + t * t <= 1.0, 1.0, [-1.0, 1.0])
                .unwrap(),
            "ball",
        );
        let kb = named("koranyi_ball");
        let mut rng = rng_for(3, 0, 0);
        let bbox = BBox::symmetric(1.5, 1.5, 1.5);
        for _ in 0..5000 {
            let p = bbox.sample(&mut rng);
            assert_eq!(cyl.contains(p), gal.contains_exact(p));
            assert_eq!(ball.contains(p), kb.contains_exact(p));
        }
    }

    #[test]
    fn radial_membership_is_rotation_invariant() {
        let k = named("importante");
        let mut rng = rng_for(11, 0, 0);
        for _ in 0..5000 {
            let p = k.bbox().sample(&mut rng);
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            // rotations by multiples of π/2 are exact in floating point
            let quarter = Point3::new(-p.y, p.x, p.t);
            assert_eq!(k.contains(p), k.contains(quarter));
            let q = p.rotated(angle);
            let (dp, dq) = (k.defect(p), k.defect(q));
            if dp.is_finite() && dq.is_finite() {
                assert!((dp - dq).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polygon_profile() {
        let p =
            RadialProfile::polygon(vec![[0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(p.contains2d(0.5, 0.0, 0.0));
        assert!((p.defect(0.5, 0.0) + 0.5).abs() < 1e-15);
        assert!(!p.contains2d(0.5, 1.2, 0.0));
        assert_eq!(p.defect(0.5, 1.2), f64::INFINITY);
        assert!((p.defect(0.5, 0.8) + 0.2).abs() < 1e-12);
        let sq = [[0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polygon_signed_distance(&sq, 0.5, 1.2) - 0.2).abs() < 1e-12);
        assert!(!p.contains2d(1.2, 0.0, 0.0));
    }

    #[test]
    fn axioms_on_gallery() {
        let tol = Tolerances::default();
        for name in ["koranyi_ball", "cylinder"] {
            let rep = check_axioms(&named(name), 2000, 1, &tol).unwrap();
            assert!(rep.a_holds && rep.b_holds && rep.c_holds, "{name}: {rep:?}");
            assert!(rep.hconvex_witness.is_none());
            assert!(rep.c_pairs > 1000, "{name}: only {} pairs", rep.c_pairs);
        }
        let slab = named("slab_x");
        let rep = check_axioms(&slab, 200, 1, &tol).unwrap();
        assert!(!rep.a_holds && !rep.compact);
    }

    #[test]
    fn two_balls_are_not_hconvex() {
        let tol = Tolerances::default();
        let ball = named("koranyi_ball");
        let k = ball
            .translated(Point3::new(2.0, 0.0, 0.0))
            .union(&ball.translated(Point3::new(-2.0, 0.0, 0.0)));
        assert!(k.contains(Point3::new(2.0, 0.0, 0.0)));
        assert!(k.contains(Point3::new(-2.0, 0.0, 0.0)));
        // the connecting horizontal segment leaves through its midpoint
        let v = horizontal_reach_checked(Point3::new(-2.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0));
        assert!(!k.contains(horizontal_point(Point3::new(-2.0, 0.0, 0.0), v, 0.5)));

        let rep = check_axioms(&k, 4000, 5, &tol).unwrap();
        assert!(!rep.a_holds);
        let w = rep.hconvex_witness.expect("segment witness");
        assert!(w.margin > tol.eps_geom);
        w.replay(&k).unwrap();
    }

    fn horizontal_reach_checked(p: Point3, q: Point3) -> HVec {
        crate::heis::horizontal_reach(p, q, &Tolerances::default()).unwrap()
    }

    #[test]
    fn boundary_samples() {
        let k = named("koranyi_ball");
        for p in boundary_sample(&k, 200, 9).unwrap() {
            let n = koranyi(p);
            assert!((n - 1.0).abs() <= 1e-6, "{n}");
        }
        let cyl = named("cylinder");
        let p = ray_boundary(&cyl, Point3::new(1.0, 0.0, 0.0), &Tolerances::default()).unwrap();
        assert!((p.x - 1.0).abs() <= 1e-6 && p.y == 0.0 && p.t == 0.0);
        assert!(matches!(
            boundary_sample(&named("slab_x"), 3, 0),
            Err(Error::NonCompact(_))
        ));
    }

    #[test]
    fn dilated_oracle() {
        let k = named("cylinder");
        let d = k.dilated(2.0).unwrap();
        assert!(d.contains(Point3::new(1.9, 0.0, 3.9)));
        assert!(!d.contains(Point3::new(1.9, 0.0, 4.1)));
        assert!(d.is_radial());
        let prof = d.profile().unwrap();
        assert!(prof.contains2d(2.0, 4.0, 1e-9));
        assert!(k.dilated(-1.0).is_err());
    }
}
