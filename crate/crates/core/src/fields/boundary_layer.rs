//! Boundary-layer surrogate around a sphere.
//!
//! The outer potential flow has the axisymmetric stream function
//! `Ψ = sin²θ F(r)`, `F = ½U(r² − a³/r)`, about the stream direction `e`.
//! The layer multiplies it by `m(r) = 1 − χ((r − a)/δ)` with the cutoff
//! `χ(s) = exp(−s/(1 − s))` on `s < 1` and 0 beyond. Taking the velocity
//! from the damped stream function keeps it exactly solenoidal, gives
//! `u = 0` on the wall, and leaves the outer flow untouched for `r ≥ a + δ`.
//!
//! With `Q = F m` the velocity is `u = α(r)(e·x)x + β(r)e` where
//! `α = 2Q/r⁴ − Q'/r³` and `β = Q'/r`. The skin friction is
//! `|τ_w| = 3νU sinθ / δ`.

use super::catalog::PotentialSphere;
use super::{FlowField, ResidualClass, WallCondition};
use crate::error::Result;
use crate::geometry::{Mat3, Vec3};

/// Below this distance to the layer edge the cutoff and its derivatives
/// are smaller than 1e-25 and are set to zero.
const EDGE_CLAMP: f64 = 1e-2;

/// A family of layers indexed by viscosity, with `δ(ν) = c·ν^α`.
#[derive(Debug, Clone)]
pub struct BoundaryLayerFamily {
    pub free_stream: Vec3,
    pub radius: f64,
    pub exponent: f64,
    pub coefficient: f64,
    pub p_inf: f64,
}

impl BoundaryLayerFamily {
    pub fn thickness(&self, nu: f64) -> f64 {
        self.coefficient * nu.powf(self.exponent)
    }

    pub fn at(&self, nu: f64) -> BoundaryLayerField {
        BoundaryLayerField {
            outer: PotentialSphere::new(self.free_stream, self.radius, self.p_inf),
            viscosity: nu,
            delta: self.thickness(nu),
            exponent: self.exponent,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryLayerField {
    outer: PotentialSphere,
    viscosity: f64,
    delta: f64,
    exponent: f64,
}

/// χ and its first three derivatives in s.
fn cutoff(s: f64) -> [f64; 4] {
    let w = 1.0 - s;
    if w <= EDGE_CLAMP {
        return [0.0; 4];
    }
    let c = (1.0 - 1.0 / w).exp();
    let q = -1.0 / (w * w);
    let q1 = -2.0 / (w * w * w);
    let q2 = -6.0 / (w * w * w * w);
    [c, c * q, c * (q * q + q1), c * (q * q * q + 3.0 * q * q1 + q2)]
}

impl BoundaryLayerField {
    pub fn new(free_stream: Vec3, radius: f64, viscosity: f64, delta: f64) -> Self {
        BoundaryLayerField {
            outer: PotentialSphere::new(free_stream, radius, 0.0),
            viscosity,
            delta,
            exponent: f64::NAN,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn outer(&self) -> &PotentialSphere {
        &self.outer
    }

    /// Q, Q', Q'', Q''' at radius r.
    fn q(&self, r: f64) -> [f64; 4] {
        let a3 = self.outer.radius.powi(3);
        let half_u = 0.5 * self.outer.free_stream.norm();
        let f = [
            half_u * (r * r - a3 / r),
            half_u * (2.0 * r + a3 / (r * r)),
            half_u * (2.0 - 2.0 * a3 / r.powi(3)),
            half_u * 6.0 * a3 / r.powi(4),
        ];
        let s = (r - self.outer.radius) / self.delta;
        let chi = cutoff(s);
        let d = self.delta;
        let m = [1.0 - chi[0], -chi[1] / d, -chi[2] / (d * d), -chi[3] / (d * d * d)];
        [
            f[0] * m[0],
            f[1] * m[0] + f[0] * m[1],
            f[2] * m[0] + 2.0 * f[1] * m[1] + f[0] * m[2],
            f[3] * m[0] + 3.0 * f[2] * m[1] + 3.0 * f[1] * m[2] + f[0] * m[3],
        ]
    }

    /// (α, α', α'', β, β', β'').
    fn profiles(&self, r: f64) -> [f64; 6] {
        let [q0, q1, q2, q3] = self.q(r);
        let r2 = r * r;
        let r3 = r2 * r;
        let r4 = r2 * r2;
        let r5 = r4 * r;
        let r6 = r3 * r3;
        [
            2.0 * q0 / r4 - q1 / r3,
            5.0 * q1 / r4 - 8.0 * q0 / r5 - q2 / r3,
            -q3 / r3 + 8.0 * q2 / r4 - 28.0 * q1 / r5 + 40.0 * q0 / r6,
            q1 / r,
            q2 / r - q1 / r2,
            q3 / r - 2.0 * q2 / r2 + 2.0 * q1 / r3,
        ]
    }

    fn axis(&self) -> Vec3 {
        let v = self.outer.free_stream;
        let n = v.norm();
        if n == 0.0 {
            Vec3::x()
        } else {
            v / n
        }
    }

    fn u(&self, x: &Vec3) -> Vec3 {
        let e = self.axis();
        let r = x.norm();
        let p = self.profiles(r);
        x * (p[0] * e.dot(x)) + e * p[3]
    }

    fn grad(&self, x: &Vec3) -> Mat3 {
        let e = self.axis();
        let r = x.norm();
        let [al, al1, _, _, be1, _] = self.profiles(r);
        let ex = e.dot(x);
        Mat3::from_fn(|i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            al1 * x[j] / r * ex * x[i] + al * (e[j] * x[i] + ex * delta) + be1 * x[j] / r * e[i]
        })
    }

    fn laplacian(&self, x: &Vec3) -> Vec3 {
        let e = self.axis();
        let r = x.norm();
        let [al, al1, al2, _, be1, be2] = self.profiles(r);
        x * ((al2 + 6.0 * al1 / r) * e.dot(x)) + e * (2.0 * al + be2 + 2.0 * be1 / r)
    }
}

impl FlowField for BoundaryLayerField {
    fn id(&self) -> String {
        if self.exponent.is_nan() {
            format!("boundary_layer(nu={:e},delta={:e})", self.viscosity, self.delta)
        } else {
            format!("boundary_layer(nu={:e},alpha={})", self.viscosity, self.exponent)
        }
    }

    fn viscosity(&self) -> f64 {
        self.viscosity
    }

    fn residual_class(&self) -> ResidualClass {
        ResidualClass::None
    }

    fn wall_condition(&self) -> WallCondition {
        WallCondition::NoSlip
    }

    fn velocity_scale(&self) -> f64 {
        self.outer.free_stream.norm()
    }

    fn length_scale(&self) -> f64 {
        self.delta.min(self.outer.radius)
    }

    fn wall_layer(&self) -> Option<f64> {
        Some(self.delta)
    }

    fn velocity(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.u(x))
    }

    /// Bernoulli pressure of the outer flow.
    fn pressure(&self, x: &Vec3, _t: f64) -> Result<f64> {
        Ok(self.outer.p(x))
    }

    fn velocity_gradient(&self, x: &Vec3, _t: f64) -> Result<Mat3> {
        Ok(self.grad(x))
    }

    fn velocity_laplacian(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.laplacian(x))
    }

    fn pressure_gradient(&self, x: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.outer.grad_p(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::derivatives;

    fn field(delta: f64) -> BoundaryLayerField {
        BoundaryLayerField::new(Vec3::new(0.6, 0.0, 0.8), 1.0, 1e-3, delta)
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        for s in [-0.2, 0.0, 0.3, 0.7, 0.9] {
            let c = cutoff(s);
            for k in 0..3 {
                let h = 1e-5;
                let fd = (cutoff(s + h)[k] - cutoff(s - h)[k]) / (2.0 * h);
                assert!((fd - c[k + 1]).abs() < 1e-6 * (1.0 + c[k + 1].abs()), "s={s} k={k}");
            }
        }
        assert_eq!(cutoff(0.0)[0], 1.0);
        assert!((cutoff(0.0)[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_differences() {
        let f = field(0.2);
        for x in [Vec3::new(1.05, 0.1, 0.2), Vec3::new(-0.3, 0.9, 0.5), Vec3::new(0.2, -0.6, 0.9)] {
            let g = derivatives::vector_gradient(|y| Ok(f.u(y)), &x, 1e-5).unwrap();
            assert!((g - f.grad(&x)).norm() < 1e-7 * (1.0 + g.norm()), "{x}");
            assert!(f.grad(&x).trace().abs() < 1e-12);
            let lap = derivatives::vector_laplacian(|y| Ok(f.u(y)), &x, 1e-3).unwrap();
            assert!((lap - f.laplacian(&x)).norm() < 1e-5 * (1.0 + lap.norm()), "{x}");
        }
    }

    #[test]
    fn outer_flow_recovered_beyond_layer() {
        let f = field(0.1);
        let x = Vec3::new(0.8, 0.9, -0.3);
        assert!((f.u(&x) - f.outer.u(&x)).norm() < 1e-14);
        assert!(f.laplacian(&x).norm() < 1e-12);
    }

    #[test]
    fn no_slip_and_skin_friction() {
        let delta = 0.05;
        let f = field(delta);
        let s = Vec3::new(0.0, 0.6, 0.8);
        assert!(f.u(&s).norm() < 1e-15);
        let a = f.grad(&s) * s;
        let sin = (1.0 - f.axis().dot(&s).powi(2)).sqrt();
        assert!((a.norm() - 3.0 * sin / delta).abs() < 1e-12 * a.norm());
    }
}
