use std::sync::Arc;

use super::{FlowField, ResidualClass, WallCondition};
use crate::error::Result;
use crate::geometry::{Body, Mat3, Vec3};

/// Affine velocity and quadratic pressure,
/// `u = V + A x`, `p = p₀ + c·x + ½ xᵀP x`.
///
/// With `A = 0, c = 0, P = 0` this is a free stream (or a quiescent fluid when
/// also `V = 0`) and is declared an exact Euler solution.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub velocity: Vec3,
    pub velocity_gradient: Mat3,
    pub pressure: f64,
    pub pressure_gradient: Vec3,
    pub pressure_hessian: Mat3,
    pub viscosity: f64,
}

impl Manufactured {
    pub fn free_stream(velocity: Vec3, pressure: f64) -> Self {
        Manufactured {
            velocity,
            velocity_gradient: Mat3::zeros(),
            pressure,
            pressure_gradient: Vec3::zeros(),
            pressure_hessian: Mat3::zeros(),
            viscosity: 0.0,
        }
    }

    pub fn quiescent(pressure: f64) -> Self {
        Self::free_stream(Vec3::zeros(), pressure)
    }

    fn is_trivial(&self) -> bool {
        self.velocity_gradient == Mat3::zeros()
            && self.pressure_gradient == Vec3::zeros()
            && self.pressure_hessian == Mat3::zeros()
    }
}

impl FlowField for Manufactured {
    fn id(&self) -> String {
        if self.is_trivial() {
            if self.velocity == Vec3::zeros() {
                "quiescent".into()
            } else {
                "free_stream".into()
            }
        } else {
            "manufactured".into()
        }
    }

    fn viscosity(&self) -> f64 {
        self.viscosity
    }

    fn residual_class(&self) -> ResidualClass {
        if self.is_trivial() {
            ResidualClass::Euler
        } else {
            ResidualClass::None
        }
    }

    fn wall_condition(&self) -> WallCondition {
        WallCondition::Unconstrained
    }

    fn velocity_scale(&self) -> f64 {
        self.velocity.norm().max(1.0)
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn velocity(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.velocity + self.velocity_gradient * x)
    }

    fn pressure(&self, x: &Vec3, _t: f64) -> Result<f64> {
        Ok(self.pressure + self.pressure_gradient.dot(x) + 0.5 * x.dot(&(self.pressure_hessian * x)))
    }

    fn velocity_gradient(&self, _x: &Vec3, _t: f64) -> Result<Mat3> {
        Ok(self.velocity_gradient)
    }

    fn velocity_laplacian(&self, _x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(Vec3::zeros())
    }

    fn pressure_gradient(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        let sym = (self.pressure_hessian + self.pressure_hessian.transpose()) * 0.5;
        Ok(self.pressure_gradient + sym * x)
    }
}

/// Irrotational flow past a sphere of radius `a` centred at the origin with
/// free stream `V`, and its Bernoulli pressure.
#[derive(Debug, Clone)]
pub struct PotentialSphere {
    pub free_stream: Vec3,
    pub radius: f64,
    pub p_inf: f64,
}

impl PotentialSphere {
    pub fn new(free_stream: Vec3, radius: f64, p_inf: f64) -> Self {
        PotentialSphere { free_stream, radius, p_inf }
    }

    pub(crate) fn u(&self, x: &Vec3) -> Vec3 {
        let v = self.free_stream;
        let r2 = x.norm_squared();
        let r = r2.sqrt();
        let r3 = r2 * r;
        let c = 0.5 * self.radius.powi(3);
        v + (v / r3 - x * (3.0 * v.dot(x) / (r3 * r2))) * c
    }

    pub(crate) fn grad(&self, x: &Vec3) -> Mat3 {
        let v = self.free_stream;
        let r2 = x.norm_squared();
        let r5 = r2 * r2 * r2.sqrt();
        let r7 = r5 * r2;
        let vx = v.dot(x);
        let c = 0.5 * self.radius.powi(3);
        Mat3::from_fn(|i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            c * (-3.0 * (v[i] * x[j] + v[j] * x[i] + vx * delta) / r5 + 15.0 * vx * x[i] * x[j] / r7)
        })
    }

    pub(crate) fn p(&self, x: &Vec3) -> f64 {
        self.p_inf + 0.5 * self.free_stream.norm_squared() - 0.5 * self.u(x).norm_squared()
    }

    pub(crate) fn grad_p(&self, x: &Vec3) -> Vec3 {
        -(self.grad(x).transpose() * self.u(x))
    }
}

impl FlowField for PotentialSphere {
    fn id(&self) -> String {
        "potential_sphere".into()
    }

    fn viscosity(&self) -> f64 {
        0.0
    }

    fn residual_class(&self) -> ResidualClass {
        ResidualClass::Euler
    }

    fn wall_condition(&self) -> WallCondition {
        WallCondition::NoPenetration
    }

    fn velocity_scale(&self) -> f64 {
        self.free_stream.norm()
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }

    fn velocity(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.u(x))
    }

    fn pressure(&self, x: &Vec3, _t: f64) -> Result<f64> {
        Ok(self.p(x))
    }

    fn velocity_gradient(&self, x: &Vec3, _t: f64) -> Result<Mat3> {
        Ok(self.grad(x))
    }

    fn velocity_laplacian(&self, _x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(Vec3::zeros())
    }

    fn pressure_gradient(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.grad_p(x))
    }
}

/// Creeping flow past a sphere at rest in a stream `U` (stick walls).
#[derive(Debug, Clone)]
pub struct StokesSphere {
    pub free_stream: Vec3,
    pub radius: f64,
    pub viscosity: f64,
    pub p_inf: f64,
}

impl StokesSphere {
    pub fn new(free_stream: Vec3, radius: f64, viscosity: f64, p_inf: f64) -> Self {
        StokesSphere { free_stream, radius, viscosity, p_inf }
    }

    fn u(&self, x: &Vec3) -> Vec3 {
        let (a, u) = (self.radius, self.free_stream);
        let r2 = x.norm_squared();
        let r = r2.sqrt();
        let r3 = r2 * r;
        let ux = u.dot(x);
        u - (u / r + x * (ux / r3)) * (0.75 * a) - (u / r3 - x * (3.0 * ux / (r3 * r2))) * (0.25 * a.powi(3))
    }

    fn grad(&self, x: &Vec3) -> Mat3 {
        let (a, u) = (self.radius, self.free_stream);
        let r2 = x.norm_squared();
        let r = r2.sqrt();
        let (r3, r5) = (r2 * r, r2 * r2 * r);
        let r7 = r5 * r2;
        let ux = u.dot(x);
        Mat3::from_fn(|i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            let da = -u[i] * x[j] / r3;
            let db = (u[j] * x[i] + ux * delta) / r3 - 3.0 * ux * x[i] * x[j] / r5;
            let dc = -3.0 * u[i] * x[j] / r5;
            let dd = (u[j] * x[i] + ux * delta) / r5 - 5.0 * ux * x[i] * x[j] / r7;
            -0.75 * a * (da + db) - 0.25 * a.powi(3) * (dc - 3.0 * dd)
        })
    }

    fn p(&self, x: &Vec3) -> f64 {
        let r3 = x.norm().powi(3);
        self.p_inf - 1.5 * self.viscosity * self.radius * self.free_stream.dot(x) / r3
    }

    fn grad_p(&self, x: &Vec3) -> Vec3 {
        let r2 = x.norm_squared();
        let r3 = r2 * r2.sqrt();
        let u = self.free_stream;
        (u / r3 - x * (3.0 * u.dot(x) / (r3 * r2))) * (-1.5 * self.viscosity * self.radius)
    }
}

impl FlowField for StokesSphere {
    fn id(&self) -> String {
        "stokes_sphere".into()
    }

    fn viscosity(&self) -> f64 {
        self.viscosity
    }

    fn residual_class(&self) -> ResidualClass {
        ResidualClass::Stokes
    }

    fn wall_condition(&self) -> WallCondition {
        WallCondition::NoSlip
    }

    fn velocity_scale(&self) -> f64 {
        self.free_stream.norm()
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }

    fn velocity(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.u(x))
    }

    fn pressure(&self, x: &Vec3, _t: f64) -> Result<f64> {
        Ok(self.p(x))
    }

    fn velocity_gradient(&self, x: &Vec3, _t: f64) -> Result<Mat3> {
        Ok(self.grad(x))
    }

    // Stokes equations: νΔu = ∇p.
    fn velocity_laplacian(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.grad_p(x) / self.viscosity)
    }

    fn pressure_gradient(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.grad_p(x))
    }

    fn forcing(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.grad(x) * self.u(x))
    }
}

/// Adds `c·x` to the pressure of another field while keeping that field's
/// declared residual class; used to check that broken data is detected.
#[derive(Debug, Clone)]
pub struct MismatchedPressure {
    pub base: Arc<dyn FlowField>,
    pub offset_gradient: Vec3,
}

impl FlowField for MismatchedPressure {
    fn id(&self) -> String {
        format!("{}+pressure_offset", self.base.id())
    }
    fn viscosity(&self) -> f64 {
        self.base.viscosity()
    }
    fn residual_class(&self) -> ResidualClass {
        self.base.residual_class()
    }
    fn wall_condition(&self) -> WallCondition {
        self.base.wall_condition()
    }
    fn velocity_scale(&self) -> f64 {
        self.base.velocity_scale()
    }
    fn length_scale(&self) -> f64 {
        self.base.length_scale()
    }
    fn is_steady(&self) -> bool {
        self.base.is_steady()
    }
    fn wall_layer(&self) -> Option<f64> {
        self.base.wall_layer()
    }
    fn velocity(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        self.base.velocity(x, t)
    }
    fn pressure(&self, x: &Vec3, t: f64) -> Result<f64> {
        Ok(self.base.pressure(x, t)? + self.offset_gradient.dot(x))
    }
    fn velocity_gradient(&self, x: &Vec3, t: f64) -> Result<Mat3> {
        self.base.velocity_gradient(x, t)
    }
    fn velocity_laplacian(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        self.base.velocity_laplacian(x, t)
    }
    fn pressure_gradient(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.base.pressure_gradient(x, t)? + self.offset_gradient)
    }
    fn velocity_time_derivative(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        self.base.velocity_time_derivative(x, t)
    }
    fn wall_pressure(&self, body: &Body, s: &Vec3, t: f64) -> Result<f64> {
        Ok(self.base.wall_pressure(body, s, t)? + self.offset_gradient.dot(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::derivatives;

    fn fd_grad(f: &dyn FlowField, x: &Vec3) -> Mat3 {
        derivatives::vector_gradient(|y| f.velocity(y, 0.5), x, 1e-4).unwrap()
    }

    #[test]
    fn potential_gradient_matches_differences() {
        let f = PotentialSphere::new(Vec3::new(1.0, 0.3, -0.2), 1.0, 0.0);
        for x in [Vec3::new(1.2, 0.4, -0.3), Vec3::new(-0.2, 1.05, 0.4), Vec3::new(0.0, 0.0, 1.3)] {
            assert!((f.grad(&x) - fd_grad(&f, &x)).norm() < 1e-9);
            let gp = derivatives::scalar_gradient(|y| Ok(f.p(y)), &x, 1e-4).unwrap();
            assert!((f.grad_p(&x) - gp).norm() < 1e-9);
            assert!(f.grad(&x).trace().abs() < 1e-13);
        }
    }

    #[test]
    fn stokes_gradient_matches_differences() {
        let f = StokesSphere::new(Vec3::new(0.0, 0.0, 2.0), 1.0, 0.1, 0.0);
        for x in [Vec3::new(1.2, 0.4, -0.3), Vec3::new(-0.2, 1.05, 0.4)] {
            assert!((f.grad(&x) - fd_grad(&f, &x)).norm() < 1e-9);
            let lap = derivatives::vector_laplacian(|y| Ok(f.u(y)), &x, 1e-2).unwrap();
            assert!((lap * f.viscosity - f.grad_p(&x)).norm() < 1e-8);
        }
    }

    #[test]
    fn far_field_and_wall_values() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let f = PotentialSphere::new(v, 1.0, 0.0);
        assert!((f.u(&Vec3::new(1e4, 3e3, 0.0)) - v).norm() < 1e-11);
        let s = Vec3::new(0.6, 0.0, 0.8);
        assert!(f.u(&s).dot(&s).abs() < 1e-15);
        let st = StokesSphere::new(v, 1.0, 0.5, 0.0);
        assert!(st.u(&s).norm() < 1e-15);
    }
}
