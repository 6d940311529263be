//! Heisenberg group arithmetic.
//!
//! Points are `(x, y, t)` with the group law
//! `(x,y,t)∘(x',y',t') = (x+x', y+y', t+t'+2(x'y−xy'))`, identity `e = (0,0,0)`
//! and anisotropic dilations `δ_λ(x,y,t) = (λx, λy, λ²t)`. Horizontal vectors
//! `(a, b)` are identified with the points `(a, b, 0)` through the exponential map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// A horizontal vector `aX + bY`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HVec {
    pub a: f64,
    pub b: f64,
}

/// The identity element.
pub const IDENTITY: Point3 = Point3 {
    x: 0.0,
    y: 0.0,
    t: 0.0,
};

impl Point3 {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    /// Group product `self ∘ q`.
    #[inline]
    pub fn compose(self, q: Point3) -> Point3 {
        Point3 {
            x: self.x + q.x,
            y: self.y + q.y,
            t: self.t + q.t + 2.0 * (q.x * self.y - self.x * q.y),
        }
    }

    #[inline]
    pub fn inverse(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.t)
    }

    /// `δ_λ(self)`. The caller guarantees `lambda ≥ 0`; use [`dilate`] for a
    /// checked version.
    #[inline]
    pub fn dilated(self, lambda: f64) -> Point3 {
        debug_assert!(lambda >= 0.0, "negative dilation {lambda}");
        Point3::new(lambda * self.x, lambda * self.y, lambda * lambda * self.t)
    }

    /// Rotation of the horizontal coordinates about the t-axis. Rotations are
    /// group automorphisms commuting with the dilations.
    #[inline]
    pub fn rotated(self, angle: f64) -> Point3 {
        let (s, c) = angle.sin_cos();
        Point3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.t)
    }

    /// Horizontal radius `‖(x, y)‖_E`.
    #[inline]
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn euclidean_distance(&self, q: &Point3) -> f64 {
        let (dx, dy, dt) = (self.x - q.x, self.y - q.y, self.t - q.t);
        (dx * dx + dy * dy + dt * dt).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl HVec {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn norm(&self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn dot(&self, other: &HVec) -> f64 {
        self.a * other.a + self.b * other.b
    }

    pub fn scaled(self, s: f64) -> HVec {
        HVec::new(s * self.a, s * self.b)
    }

    pub fn rotated(self, angle: f64) -> HVec {
        let (s, c) = angle.sin_cos();
        HVec::new(c * self.a - s * self.b, s * self.a + c * self.b)
    }
}

/// Numerical tolerances shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Membership / boundary slack.
    pub eps_geom: f64,
    /// Equality of reals.
    pub eps_eq: f64,
    /// Iteration cap for bisections.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_geom: 1e-7,
            eps_eq: 1e-9,
            max_iter: 60,
        }
    }
}

impl Tolerances {
    pub fn new(eps_geom: f64, eps_eq: f64, max_iter: usize) -> Result<Self> {
        let tol = Self {
            eps_geom,
            eps_eq,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_eq > 0.0) || !self.eps_eq.is_finite() {
            return Err(Error::InvalidTolerances(format!(
                "eps_eq must be positive, got {}",
                self.eps_eq
            )));
        }
        if !(self.eps_geom >= self.eps_eq) || !self.eps_geom.is_finite() {
            return Err(Error::InvalidTolerances(format!(
                "eps_geom ({}) must be finite and >= eps_eq ({})",
                self.eps_geom, self.eps_eq
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidTolerances("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// A horizontal line `{ base ∘ exp(s·direction) : s ∈ ℝ }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizontalLine {
    direction: HVec,
    base: Point3,
}

impl HorizontalLine {
    /// Builds a line; `direction` is normalized and must be nonzero.
    pub fn new(base: Point3, direction: HVec) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(
                "horizontal line direction must be a nonzero finite vector".into(),
            ));
        }
        Ok(Self {
            direction: direction.scaled(1.0 / n),
            base,
        })
    }

    /// Line through `e` making angle `angle` with the x-axis.
    pub fn through_identity(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            direction: HVec::new(c, s),
            base: IDENTITY,
        }
    }

    pub fn x_axis() -> Self {
        Self::through_identity(0.0)
    }

    pub fn direction(&self) -> HVec {
        self.direction
    }

    pub fn base(&self) -> Point3 {
        self.base
    }

    pub fn point_at(&self, s: f64) -> Point3 {
        self.base.compose(exp_h(self.direction.scaled(s)))
    }

    /// Whether `p` lies on the line, within `eps`.
    pub fn contains(&self, p: Point3, eps: f64) -> bool {
        let q = self.base.inverse().compose(p);
        let s = q.x * self.direction.a + q.y * self.direction.b;
        let on = exp_h(self.direction.scaled(s));
        q.euclidean_distance(&on) <= eps * (1.0 + p.euclidean_distance(&IDENTITY))
    }
}

/// `p ∘ q`.
pub fn group_mul(p: Point3, q: Point3) -> Point3 {
    p.compose(q)
}

/// `p⁻¹ = (−x, −y, −t)`.
pub fn group_inv(p: Point3) -> Point3 {
    p.inverse()
}

/// `δ_λ(p)`, rejecting negative (or NaN) factors.
pub fn dilate(lambda: f64, p: Point3) -> Result<Point3> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeDilation(lambda));
    }
    Ok(p.dilated(lambda))
}

/// The exponential of a horizontal vector, `(a, b, 0)`.
#[inline]
pub fn exp_h(v: HVec) -> Point3 {
    Point3::new(v.a, v.b, 0.0)
}

/// `ξ ∘ exp(θ v)`: the point at parameter `theta` of the horizontal segment
/// leaving `xi` with velocity `v`.
#[inline]
pub fn horizontal_point(xi: Point3, v: HVec, theta: f64) -> Point3 {
    xi.compose(exp_h(v.scaled(theta)))
}

/// If `q` lies in the horizontal plane `H_p`, the horizontal vector `v` with
/// `q = p ∘ exp(v)`.
///
/// Plane membership is tested with absolute slack
/// `eps_geom · (1 + ‖p‖_E + ‖q‖_E)`.
pub fn horizontal_reach(p: Point3, q: Point3, tol: &Tolerances) -> Option<HVec> {
    let residual = q.t - (p.t + 2.0 * p.y * q.x - 2.0 * p.x * q.y);
    let scale = 1.0 + norm(p, NormKind::Euclidean) + norm(q, NormKind::Euclidean);
    if residual.abs() <= tol.eps_geom * scale {
        Some(HVec::new(q.x - p.x, q.y - p.y))
    } else {
        None
    }
}

/// Norms and gauges on the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Korányi gauge `((x²+y²)² + t²)^{1/4}`.
    Koranyi,
    /// Quasi-norm `max(‖(x,y)‖_E, |t|^{1/2})`.
    Quasi,
    /// Euclidean norm of `(x, y, t)` in ℝ³.
    Euclidean,
}

pub fn norm(p: Point3, kind: NormKind) -> f64 {
    match kind {
        NormKind::Koranyi => koranyi(p),
        NormKind::Quasi => p.radius().max(p.t.abs().sqrt()),
        NormKind::Euclidean => (p.x * p.x + p.y * p.y + p.t * p.t).sqrt(),
    }
}

#[inline]
pub fn koranyi(p: Point3) -> f64 {
    let r2 = p.x * p.x + p.y * p.y;
    // sqrt(hypot) keeps the 4th root well scaled for large coordinates
    r2.hypot(p.t).sqrt()
}

/// The pair `(π_r(p), π_r⊥(p))` for a horizontal line `r` through `e`:
/// `π_r` is the Euclidean orthogonal projection onto `r` and `π_r⊥` is defined
/// by `p = π_r⊥(p) ∘ π_r(p)`.
pub fn proj_pair(r: &HorizontalLine, p: Point3) -> Result<(Point3, Point3)> {
    if !r.contains(IDENTITY, 1e-12) {
        return Err(Error::LineNotThroughIdentity);
    }
    Ok(proj_pair_unchecked(r.direction(), p))
}

fn proj_pair_unchecked(d: HVec, p: Point3) -> (Point3, Point3) {
    // lines through e are {(s·d, 0)}, so t does not enter the projection
    let s = p.x * d.a + p.y * d.b;
    let on_line = exp_h(d.scaled(s));
    let perp = p.compose(on_line.inverse());
    (on_line, perp)
}

/// Membership in the open intrinsic cone `C(vertex, L_vertex(axis), α, h)`.
///
/// `axis` gives the direction through `e`; its base is ignored. With
/// `q = vertex⁻¹ ∘ p` the test is `‖π⊥(q)‖_q < α‖π(q)‖_q < αh`, each strict
/// inequality tightened by `eps_eq`.
pub fn cone_contains(
    vertex: Point3,
    axis: &HorizontalLine,
    alpha: f64,
    height: f64,
    p: Point3,
    tol: &Tolerances,
) -> Result<bool> {
    if !(alpha > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cone aperture and height must be positive, got alpha={alpha}, h={height}"
        )));
    }
    let q = vertex.inverse().compose(p);
    let (on_line, perp) = proj_pair_unchecked(axis.direction(), q);
    let along = alpha * norm(on_line, NormKind::Quasi);
    let across = norm(perp, NormKind::Quasi);
    Ok(across < along - tol.eps_eq && along < alpha * height - tol.eps_eq)
}
