//! Velocity/pressure field families with derivative access.
//!
//! A [`FlowField`] supplies raw pointwise values; [`FlowState`] attaches the
//! body and time horizon and provides the checked operations (wall traces,
//! forcing residual, divergence report).

mod boundary_layer;
mod catalog;
pub mod derivatives;
mod snapshot;

use std::fmt::Debug;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use boundary_layer::{BoundaryLayerFamily, BoundaryLayerField};
pub use catalog::{Manufactured, MismatchedPressure, PotentialSphere, StokesSphere};
pub use snapshot::{write_snapshot, GridSpec, SampledField};

use crate::error::{Error, Result};
use crate::geometry::{Body, Mat3, ShellQuadrature, Vec3, SURFACE_TOL};

/// Which residual of the unforced equations a field satisfies identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualClass {
    /// Exact steady Euler/Navier–Stokes solution: the forcing is declared zero.
    Euler,
    /// Stokes residual vanishes: νΔu = ∇p, so the forcing is the inertia (∇u)u.
    Stokes,
    /// Nothing vanishes; the forcing is evaluated from derivatives.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WallCondition {
    NoSlip,
    NoPenetration,
    Unconstrained,
}

/// Raw field access. Evaluation may continue analytically a little inside the
/// body; callers that need the domain check go through [`FlowState`].
pub trait FlowField: Send + Sync + Debug {
    fn id(&self) -> String;
    fn viscosity(&self) -> f64;
    fn residual_class(&self) -> ResidualClass;
    fn wall_condition(&self) -> WallCondition;
    /// Typical speed, used to scale tolerances.
    fn velocity_scale(&self) -> f64;
    /// Smallest length over which the field varies; sets difference steps.
    fn length_scale(&self) -> f64;
    fn is_steady(&self) -> bool {
        true
    }
    /// Thickness of a thin wall layer, if any (used as a quadrature breakpoint).
    fn wall_layer(&self) -> Option<f64> {
        None
    }
    /// Grid node count for sampled fields.
    fn node_count(&self) -> Option<usize> {
        None
    }

    fn velocity(&self, x: &Vec3, t: f64) -> Result<Vec3>;
    fn pressure(&self, x: &Vec3, t: f64) -> Result<f64>;

    /// `grad[(i, j)] = ∂u_i/∂x_j`.
    fn velocity_gradient(&self, x: &Vec3, t: f64) -> Result<Mat3> {
        derivatives::vector_gradient(|y| self.velocity(y, t), x, derivatives::first_step(self.length_scale()))
    }

    fn velocity_laplacian(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        derivatives::vector_laplacian(|y| self.velocity(y, t), x, derivatives::second_step(self.length_scale()))
    }

    fn pressure_gradient(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        derivatives::scalar_gradient(|y| self.pressure(y, t), x, derivatives::first_step(self.length_scale()))
    }

    fn velocity_time_derivative(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        if self.is_steady() {
            return Ok(Vec3::zeros());
        }
        derivatives::time_derivative(|s| self.velocity(x, s), t, 1e-4)
    }

    /// Wall trace of the pressure.
    fn wall_pressure(&self, _body: &Body, s: &Vec3, t: f64) -> Result<f64> {
        self.pressure(s, t)
    }

    /// ∂_t u + ∇·(u⊗u) + ∇p, i.e. the forcing of the inviscid equations.
    fn inviscid_forcing(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let u = self.velocity(x, t)?;
        let g = self.velocity_gradient(x, t)?;
        Ok(self.velocity_time_derivative(x, t)? + g * u + u * g.trace() + self.pressure_gradient(x, t)?)
    }

    /// ∂_t u + ∇·(u⊗u + pI) − νΔu.
    fn forcing(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let nu = self.viscosity();
        let mut g = self.inviscid_forcing(x, t)?;
        if nu != 0.0 {
            g -= self.velocity_laplacian(x, t)? * nu;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityGradient {
    pub grad: [[f64; 3]; 3],
    pub strain: [[f64; 3]; 3],
    pub vorticity: [f64; 3],
}

impl VelocityGradient {
    pub fn from_matrix(g: &Mat3) -> Self {
        let s = (g + g.transpose()) * 0.5;
        let w = vorticity(g);
        VelocityGradient { grad: rows(g), strain: rows(&s), vorticity: [w.x, w.y, w.z] }
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.grad[i][j])
    }

    pub fn divergence(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1] + self.grad[2][2]
    }
}

fn rows(m: &Mat3) -> [[f64; 3]; 3] {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

/// Axial vector of the antisymmetric part, ω = ∇×u.
pub fn vorticity(g: &Mat3) -> Vec3 {
    Vec3::new(g[(2, 1)] - g[(1, 2)], g[(0, 2)] - g[(2, 0)], g[(1, 0)] - g[(0, 1)])
}

/// The three wall-stress expressions, ν∂u/∂n, 2νS·n and νω×n.
#[derive(Debug, Clone, Copy)]
pub struct WallStressForms {
    pub normal_derivative: Vec3,
    pub strain: Vec3,
    pub vorticity: Vec3,
}

impl WallStressForms {
    pub fn new(g: &Mat3, n: &Vec3, nu: f64) -> Self {
        WallStressForms {
            normal_derivative: g * n * nu,
            strain: (g + g.transpose()) * n * nu,
            vorticity: vorticity(g).cross(n) * nu,
        }
    }

    /// Largest pairwise disagreement relative to the magnitude.
    pub fn disagreement(&self) -> f64 {
        let a = self.normal_derivative;
        let scale = a.norm().max(self.strain.norm()).max(self.vorticity.norm());
        if scale == 0.0 {
            return 0.0;
        }
        (a - self.strain).norm().max((a - self.vorticity).norm()) / scale
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub max: f64,
    pub l2: f64,
    pub nodes: usize,
    pub threshold: f64,
    pub flagged: bool,
}

/// A field on the exterior of a body over (0, T).
#[derive(Debug, Clone)]
pub struct FlowState {
    field: Arc<dyn FlowField>,
    body: Body,
    horizon: f64,
}

/// Relative tolerance for the wall-stress consistency guard.
pub const WALL_STRESS_TOL: f64 = 1e-6;
/// Relative tolerance on |u| at the wall for no-slip fields.
pub const NO_SLIP_TOL: f64 = 1e-8;

impl FlowState {
    pub fn new(field: Arc<dyn FlowField>, body: Body, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("time horizon {horizon} must be positive")));
        }
        Ok(FlowState { field, body, horizon })
    }

    pub fn field(&self) -> &dyn FlowField {
        self.field.as_ref()
    }

    pub fn field_arc(&self) -> Arc<dyn FlowField> {
        self.field.clone()
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn id(&self) -> String {
        self.field.id()
    }

    pub fn viscosity(&self) -> f64 {
        self.field.viscosity()
    }

    fn check(&self, x: &Vec3, t: f64) -> Result<()> {
        let level = self.body.level(x);
        if level < -SURFACE_TOL {
            return Err(Error::InsideBody { level });
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    pub fn eval_state(&self, x: &Vec3, t: f64) -> Result<(Vec3, f64)> {
        self.check(x, t)?;
        Ok((self.field.velocity(x, t)?, self.field.pressure(x, t)?))
    }

    pub fn grad_velocity(&self, x: &Vec3, t: f64) -> Result<VelocityGradient> {
        self.check(x, t)?;
        Ok(VelocityGradient::from_matrix(&self.field.velocity_gradient(x, t)?))
    }

    /// ν ∂u/∂n at a wall point, after checking that the three classical
    /// expressions agree.
    pub fn wall_shear_stress(&self, s: &Vec3, t: f64) -> Result<Vec3> {
        let n = self.body.normal(s)?;
        self.check(s, t)?;
        let nu = self.field.viscosity();
        if nu == 0.0 {
            return Ok(Vec3::zeros());
        }
        let u = self.field.velocity(s, t)?;
        let scale = self.field.velocity_scale().max(f64::MIN_POSITIVE);
        if u.norm() > NO_SLIP_TOL * scale {
            return Err(Error::NoSlipViolated { detail: format!("|u| = {:.3e} at the wall", u.norm()) });
        }
        let forms = WallStressForms::new(&self.field.velocity_gradient(s, t)?, &n, nu);
        let gap = forms.disagreement();
        if gap > WALL_STRESS_TOL {
            return Err(Error::NoSlipViolated { detail: format!("relative disagreement {gap:.3e}") });
        }
        Ok(forms.normal_derivative)
    }

    pub fn wall_pressure(&self, s: &Vec3, t: f64) -> Result<f64> {
        let level = self.body.level(s);
        if level.abs() > SURFACE_TOL {
            return Err(Error::NotOnSurface { level });
        }
        self.check(s, t)?;
        self.field.wall_pressure(&self.body, s, t)
    }

    pub fn forcing_residual(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        self.check(x, t)?;
        self.field.forcing(x, t)
    }

    /// Forcing carried by the weak identities: declared zero for exact
    /// solutions, evaluated otherwise.
    pub(crate) fn identity_forcing(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        match self.field.residual_class() {
            ResidualClass::Euler => Ok(Vec3::zeros()),
            _ => self.field.forcing(x, t),
        }
    }

    /// Inviscid forcing carried by the coarse-grained balances.
    pub(crate) fn identity_inviscid_forcing(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        match self.field.residual_class() {
            ResidualClass::Euler => Ok(Vec3::zeros()),
            _ => self.field.inviscid_forcing(x, t),
        }
    }

    /// Maximum and RMS divergence over band nodes at time `t`.
    pub fn check_divergence_free(&self, sample: &ShellQuadrature, t: f64, threshold: f64) -> Result<DivergenceReport> {
        let values: Vec<(f64, f64)> = sample
            .nodes
            .par_iter()
            .map(|n| Ok((self.field.velocity_gradient(&n.point, t)?.trace(), n.weight)))
            .collect::<Result<_>>()?;
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        let mut vol = 0.0;
        for (d, w) in values {
            max = max.max(d.abs());
            sum += w * d * d;
            vol += w;
        }
        let l2 = if vol > 0.0 { (sum / vol).sqrt() } else { 0.0 };
        Ok(DivergenceReport { max, l2, nodes: sample.nodes.len(), threshold, flagged: max > threshold })
    }
}
