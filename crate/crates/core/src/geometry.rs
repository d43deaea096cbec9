//! The body, its exterior, and quadrature over the wall and near-wall bands.
//!
//! Bodies are quadrics `f(x) = Σ (x_i/a_i)² − 1` (a sphere being the equal-axis
//! case), with `f > 0` in the flow domain. Every node of a band quadrature is
//! built as `s + d·n(s)` from a surface node `s`, so distance, foot point and
//! normal are known exactly at nodes without projecting.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::quadrature::{periodic, GaussRule};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// |f(s)| allowed for a point to count as "on the surface".
pub const SURFACE_TOL: f64 = 1e-8;
const MIN_GRADIENT: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    Ellipsoid { semi_axes: [f64; 3] },
}

impl Shape {
    pub fn kind(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Ellipsoid { .. } => "ellipsoid",
        }
    }

    fn axes(&self) -> [f64; 3] {
        match *self {
            Shape::Sphere { radius } => [radius; 3],
            Shape::Ellipsoid { semi_axes } => semi_axes,
        }
    }
}

/// Local frame of a near-wall point.
#[derive(Debug, Clone, Copy)]
pub struct TubeFrame {
    /// Signed distance (negative inside the body).
    pub distance: f64,
    pub foot: Vec3,
    pub normal: Vec3,
    /// κ₁ + κ₂ at the foot point (positive for a convex body).
    pub curvature_sum: f64,
    /// κ₁κ₂ at the foot point.
    pub gauss: f64,
}

impl TubeFrame {
    /// Δd = Σ κ_i / (1 + κ_i d).
    pub fn laplacian_distance(&self) -> f64 {
        let d = self.distance;
        (self.curvature_sum + 2.0 * self.gauss * d) / jacobian(self.curvature_sum, self.gauss, d)
    }

    /// Volume factor of the normal-offset map, (1 + κ₁d)(1 + κ₂d).
    pub fn jacobian(&self) -> f64 {
        jacobian(self.curvature_sum, self.gauss, self.distance)
    }
}

fn jacobian(sum: f64, gauss: f64, d: f64) -> f64 {
    1.0 + sum * d + gauss * d * d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    shape: Shape,
    tubular_radius: f64,
}

impl Body {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("sphere radius {radius} must be positive")));
        }
        Ok(Body { shape: Shape::Sphere { radius }, tubular_radius: 0.5 * radius })
    }

    pub fn ellipsoid(semi_axes: [f64; 3]) -> Result<Self> {
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidArgument(format!("semi-axes {semi_axes:?} must be positive")));
        }
        let min = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Body { shape: Shape::Ellipsoid { semi_axes }, tubular_radius: 0.4 * min })
    }

    pub fn with_tubular_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("tubular radius {radius} must be positive")));
        }
        self.tubular_radius = radius;
        Ok(self)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn tubular_radius(&self) -> f64 {
        self.tubular_radius
    }

    /// Axis-aligned box containing the body and its tube.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let a = self.shape.axes();
        let e = self.tubular_radius;
        (Vec3::new(-a[0] - e, -a[1] - e, -a[2] - e), Vec3::new(a[0] + e, a[1] + e, a[2] + e))
    }

    pub fn level(&self, x: &Vec3) -> f64 {
        let a = self.shape.axes();
        (0..3).map(|i| (x[i] / a[i]).powi(2)).sum::<f64>() - 1.0
    }

    pub fn level_gradient(&self, x: &Vec3) -> Vec3 {
        let a = self.shape.axes();
        Vec3::new(2.0 * x[0] / (a[0] * a[0]), 2.0 * x[1] / (a[1] * a[1]), 2.0 * x[2] / (a[2] * a[2]))
    }

    pub fn level_hessian(&self) -> Mat3 {
        let a = self.shape.axes();
        Mat3::from_diagonal(&Vec3::new(2.0 / (a[0] * a[0]), 2.0 / (a[1] * a[1]), 2.0 / (a[2] * a[2])))
    }

    fn check_outside(&self, x: &Vec3) -> Result<()> {
        let level = self.level(x);
        if level < -SURFACE_TOL {
            return Err(Error::InsideBody { level });
        }
        Ok(())
    }

    /// Distance to the wall for a point of the closed flow domain.
    pub fn distance(&self, x: &Vec3) -> Result<f64> {
        self.check_outside(x)?;
        Ok(self.frame(x)?.distance.max(0.0))
    }

    /// Nearest wall point; only defined inside the tube.
    pub fn project(&self, x: &Vec3) -> Result<Vec3> {
        self.check_outside(x)?;
        let f = self.frame(x)?;
        if f.distance >= self.tubular_radius {
            return Err(Error::OutsideTube { distance: f.distance, radius: self.tubular_radius });
        }
        Ok(f.foot)
    }

    /// Unit normal into the flow domain at a surface point.
    pub fn normal(&self, s: &Vec3) -> Result<Vec3> {
        let level = self.level(s);
        if level.abs() > SURFACE_TOL {
            return Err(Error::NotOnSurface { level });
        }
        let g = self.level_gradient(s);
        let norm = g.norm();
        if norm < MIN_GRADIENT {
            return Err(Error::DegenerateSurface { gradient: norm });
        }
        Ok(g / norm)
    }

    /// (κ₁ + κ₂, κ₁κ₂) at a surface point, from the implicit-surface formulas.
    pub fn curvatures(&self, s: &Vec3) -> (f64, f64) {
        match self.shape {
            Shape::Sphere { radius } => (2.0 / radius, 1.0 / (radius * radius)),
            Shape::Ellipsoid { .. } => {
                let g = self.level_gradient(s);
                let h = self.level_hessian();
                let n2 = g.norm_squared();
                let n = n2.sqrt();
                let sum = (n2 * h.trace() - g.dot(&(h * g))) / (n2 * n);
                let adj = adjugate(&h);
                let gauss = g.dot(&(adj * g)) / (n2 * n2);
                (sum, gauss)
            }
        }
    }

    /// Two-sided frame (signed distance, foot, normal, curvatures).
    ///
    /// Defined for every exterior point and for interior points closer to the
    /// wall than the smallest radius of curvature; derivative stencils rely on
    /// the latter.
    pub fn frame(&self, x: &Vec3) -> Result<TubeFrame> {
        let foot = match self.shape {
            Shape::Sphere { radius } => {
                let r = x.norm();
                if r < MIN_GRADIENT {
                    return Err(Error::DegenerateSurface { gradient: r });
                }
                x * (radius / r)
            }
            Shape::Ellipsoid { semi_axes } => project_ellipsoid(&semi_axes, x)?,
        };
        let g = self.level_gradient(&foot);
        let gn = g.norm();
        if gn < MIN_GRADIENT {
            return Err(Error::DegenerateSurface { gradient: gn });
        }
        let normal = g / gn;
        let distance = (x - foot).dot(&normal);
        let (curvature_sum, gauss) = self.curvatures(&foot);
        Ok(TubeFrame { distance, foot, normal, curvature_sum, gauss })
    }

    /// Surface point for parameters (u = cos θ, φ) and its area density
    /// with respect to du dφ.
    pub fn surface_point(&self, u: f64, phi: f64) -> (Vec3, f64) {
        let [a, b, c] = self.shape.axes();
        let sin = (1.0 - u * u).max(0.0).sqrt();
        let x = Vec3::new(a * sin * phi.cos(), b * sin * phi.sin(), c * u);
        let j = ((b * c * phi.cos()).powi(2) * (1.0 - u * u)
            + (a * c * phi.sin()).powi(2) * (1.0 - u * u)
            + (a * b * u).powi(2))
        .sqrt();
        (x, j)
    }

    /// Product rule: `order` Gauss nodes in cos θ times `2·order` trapezoid
    /// nodes in φ.
    pub fn surface_quadrature(&self, order: usize) -> Result<SurfaceQuadrature> {
        if order == 0 {
            return Err(Error::InvalidArgument("surface quadrature order must be >= 1".into()));
        }
        let gauss = GaussRule::new(order);
        let azimuth = periodic(2 * order);
        let mut nodes = Vec::with_capacity(order * 2 * order);
        for (&u, &wu) in gauss.nodes.iter().zip(&gauss.weights) {
            for &(phi, wphi) in &azimuth {
                let (x, j) = self.surface_point(u, phi);
                let g = self.level_gradient(&x);
                let normal = g / g.norm();
                let (curvature_sum, gauss_curv) = self.curvatures(&x);
                nodes.push(SurfaceNode { point: x, weight: wu * wphi * j, normal, curvature_sum, gauss: gauss_curv });
            }
        }
        Ok(SurfaceQuadrature { order, nodes })
    }

    /// Product quadrature over the band `breaks[0] < d < breaks[last]`, with a
    /// Gauss rule of `order.radial` nodes on every sub-interval.
    pub fn band_quadrature(&self, breaks: &[f64], order: BandOrder) -> Result<ShellQuadrature> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) || !(breaks[0] >= 0.0) {
            return Err(Error::InvalidArgument(format!("band breakpoints {breaks:?} must increase from >= 0")));
        }
        let inner = breaks[0];
        let outer = *breaks.last().unwrap();
        if outer >= self.tubular_radius {
            return Err(Error::BandExitsTube { inner, outer, radius: self.tubular_radius });
        }
        if order.radial == 0 {
            return Err(Error::InvalidArgument("radial order must be >= 1".into()));
        }
        let surface = self.surface_quadrature(order.surface)?;
        let radial = crate::quadrature::composite(breaks, order.radial);
        let mut nodes = Vec::with_capacity(surface.nodes.len() * radial.len());
        for (index, s) in surface.nodes.iter().enumerate() {
            for &(d, wd) in &radial {
                let j = jacobian(s.curvature_sum, s.gauss, d);
                nodes.push(ShellNode {
                    point: s.point + s.normal * d,
                    weight: s.weight * wd * j,
                    distance: d,
                    foot: s.point,
                    normal: s.normal,
                    surface_index: index,
                    curvature_sum: s.curvature_sum,
                    gauss: s.gauss,
                });
            }
        }
        Ok(ShellQuadrature { inner, outer, order, nodes })
    }

    pub fn shell_quadrature(&self, h: f64, ell: f64, order: BandOrder) -> Result<ShellQuadrature> {
        if !(h > 0.0 && ell > 0.0) {
            return Err(Error::InvalidArgument(format!("shell needs h > 0 and ell > 0 (got {h}, {ell})")));
        }
        self.band_quadrature(&[h, h + ell], order)
    }

    pub fn tube_quadrature(&self, a: f64, order: BandOrder) -> Result<ShellQuadrature> {
        if !(a > 0.0) {
            return Err(Error::InvalidArgument(format!("tube thickness {a} must be positive")));
        }
        self.band_quadrature(&[0.0, a], order)
    }
}

fn adjugate(m: &Mat3) -> Mat3 {
    let mut adj = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            adj[(i, j)] = m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
        }
    }
    adj
}

/// Nearest point on an ellipsoid via the Lagrange multiplier λ of
/// `x − y = (λ/2)∇f(y)`, i.e. the root of
/// `F(λ) = Σ (a_i x_i / (a_i² + λ))² − 1` on `λ > −min a_i²`.
///
/// F is decreasing and convex there, so Newton started where F > 0
/// converges monotonically.
fn project_ellipsoid(axes: &[f64; 3], x: &Vec3) -> Result<Vec3> {
    let a2 = [axes[0] * axes[0], axes[1] * axes[1], axes[2] * axes[2]];
    let amin2 = a2.iter().cloned().fold(f64::INFINITY, f64::min);
    let f = |lam: f64| -> (f64, f64) {
        let mut v = -1.0;
        let mut d = 0.0;
        for i in 0..3 {
            let q = axes[i] * x[i] / (a2[i] + lam);
            v += q * q;
            d -= 2.0 * q * q / (a2[i] + lam);
        }
        (v, d)
    };
    let mut lam = 0.0;
    let mut iterations = 0;
    // Interior points: back off toward the pole until F > 0.
    while f(lam).0 < 0.0 {
        lam = -amin2 + 0.5 * (lam + amin2);
        iterations += 1;
        if iterations > 200 {
            return Err(Error::ProjectionFailed { iterations });
        }
    }
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let (v, d) = f(lam);
        if v == 0.0 || d == 0.0 {
            converged = true;
            break;
        }
        let step = v / d;
        lam -= step;
        if step.abs() <= NEWTON_TOL * (1.0 + lam.abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ProjectionFailed { iterations: NEWTON_MAX_ITER });
    }
    Ok(Vec3::new(a2[0] * x[0] / (a2[0] + lam), a2[1] * x[1] / (a2[1] + lam), a2[2] * x[2] / (a2[2] + lam)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandOrder {
    pub surface: usize,
    pub radial: usize,
}

impl BandOrder {
    pub fn new(surface: usize, radial: usize) -> Self {
        BandOrder { surface, radial }
    }

    pub fn refined(&self) -> Self {
        BandOrder { surface: crate::quadrature::refined(self.surface), radial: crate::quadrature::refined(self.radial) }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceNode {
    pub point: Vec3,
    pub weight: f64,
    pub normal: Vec3,
    pub curvature_sum: f64,
    pub gauss: f64,
}

#[derive(Debug, Clone)]
pub struct SurfaceQuadrature {
    pub order: usize,
    pub nodes: Vec<SurfaceNode>,
}

impl SurfaceQuadrature {
    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShellNode {
    pub point: Vec3,
    pub weight: f64,
    pub distance: f64,
    pub foot: Vec3,
    pub normal: Vec3,
    pub surface_index: usize,
    pub curvature_sum: f64,
    pub gauss: f64,
}

impl ShellNode {
    pub fn frame(&self) -> TubeFrame {
        TubeFrame {
            distance: self.distance,
            foot: self.foot,
            normal: self.normal,
            curvature_sum: self.curvature_sum,
            gauss: self.gauss,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShellQuadrature {
    pub inner: f64,
    pub outer: f64,
    pub order: BandOrder,
    pub nodes: Vec<ShellNode>,
}

impl ShellQuadrature {
    pub fn volume(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_distance_and_projection() {
        let b = Body::sphere(1.0).unwrap().with_tubular_radius(2.0).unwrap();
        assert_eq!(b.distance(&Vec3::new(2.0, 0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(b.distance(&Vec3::new(0.0, 0.0, 1.0)).unwrap(), 0.0);
        let p = b.project(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(matches!(b.distance(&Vec3::new(0.1, 0.0, 0.0)), Err(Error::InsideBody { .. })));
    }

    #[test]
    fn outside_tube_rejected() {
        let b = Body::sphere(1.0).unwrap();
        let e = b.project(&Vec3::new(3.0, 0.0, 0.0)).unwrap_err();
        assert!(e.to_string().contains("outside tubular neighborhood"));
    }

    #[test]
    fn ellipsoid_axis_distance() {
        let b = Body::ellipsoid([2.0, 1.0, 1.0]).unwrap();
        assert!((b.distance(&Vec3::new(4.0, 0.0, 0.0)).unwrap() - 2.0).abs() < 1e-12);
        let n = b.normal(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((n - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn ellipsoid_projection_matches_brute_force() {
        let b = Body::ellipsoid([2.0, 1.0, 1.0]).unwrap().with_tubular_radius(1.0).unwrap();
        let x = Vec3::new(1.5, 0.8, 0.0);
        let p = b.project(&x).unwrap();
        // Dense search in the x-y plane (the nearest point lies there by symmetry),
        // then a local refinement.
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..200_000 {
            let t = 2.0 * PI * k as f64 / 200_000.0;
            let y = Vec3::new(2.0 * t.cos(), t.sin(), 0.0);
            let d = (x - y).norm();
            if d < best.0 {
                best = (d, t);
            }
        }
        let y = Vec3::new(2.0 * best.1.cos(), best.1.sin(), 0.0);
        assert!((p - y).norm() < 1e-4, "{p} vs {y}");
        assert!(((x - p).norm() - best.0).abs() < 1e-9);
    }

    #[test]
    fn curvature_formulas_on_sphere_and_ellipsoid() {
        let b = Body::ellipsoid([1.5, 1.5, 1.5]).unwrap();
        let (s, k) = b.curvatures(&Vec3::new(0.0, 1.5, 0.0));
        assert!((s - 2.0 / 1.5).abs() < 1e-14 && (k - 1.0 / 2.25).abs() < 1e-14);
        // ellipsoid (2,1,1) at the tip: both principal radii are b²/a = 1/2.
        let b = Body::ellipsoid([2.0, 1.0, 1.0]).unwrap();
        let (s, k) = b.curvatures(&Vec3::new(2.0, 0.0, 0.0));
        assert!((s - 4.0).abs() < 1e-13 && (k - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_surface_rules() {
        let b = Body::sphere(1.0).unwrap();
        let q = b.surface_quadrature(8).unwrap();
        assert!((q.area() - 4.0 * PI).abs() < 1e-12);
        let m: Vec3 = q.nodes.iter().map(|n| n.normal * n.weight).sum();
        assert!(m.norm() < 1e-13);
        let flux: f64 = q.nodes.iter().map(|n| n.weight * n.point.dot(&n.normal)).sum();
        assert!((flux - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn shell_and_tube_volumes() {
        let b = Body::sphere(1.0).unwrap();
        let s = b.shell_quadrature(0.1, 0.05, BandOrder::new(4, 4)).unwrap();
        let exact = 4.0 * PI / 3.0 * (1.15f64.powi(3) - 1.1f64.powi(3));
        assert!((s.volume() - exact).abs() < 1e-10);
        assert!(s.nodes.iter().all(|n| n.distance > 0.1 && n.distance < 0.15 && n.weight > 0.0));
        let b = b.with_tubular_radius(0.6).unwrap();
        let t = b.tube_quadrature(0.5, BandOrder::new(4, 4)).unwrap();
        assert!((t.volume() - 4.0 * PI / 3.0 * (1.5f64.powi(3) - 1.0)).abs() < 1e-11);
        assert!(matches!(b.shell_quadrature(0.5, 0.2, BandOrder::new(4, 4)), Err(Error::BandExitsTube { .. })));
    }

    #[test]
    fn ellipsoid_shell_volume_matches_difference_of_parallel_bodies() {
        // Steiner: V(d) = V + A d + M d² + (4π/3) d³ with M = ∫ H dA.
        let b = Body::ellipsoid([2.0, 1.0, 1.5]).unwrap();
        let q = b.surface_quadrature(48).unwrap();
        let area = q.area();
        let m: f64 = q.nodes.iter().map(|n| 0.5 * n.curvature_sum * n.weight).sum();
        let vol = |d: f64| area * d + m * d * d + 4.0 * PI / 3.0 * d.powi(3);
        let s = b.shell_quadrature(0.05, 0.2, BandOrder::new(48, 4)).unwrap();
        assert!((s.volume() - (vol(0.25) - vol(0.05))).abs() < 1e-10);
        // Gauss–Bonnet.
        let k: f64 = q.nodes.iter().map(|n| n.gauss * n.weight).sum();
        assert!((k - 4.0 * PI).abs() < 1e-9);
    }
}
