//! Coarse-graining: the ball mollifier, the wall window and its gradient.

use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::fields::FlowState;
use crate::geometry::{Body, Mat3, Vec3};
use crate::quadrature::{periodic, GaussRule};

/// Unnormalised bump exp(−1/(t(1 − t))) on (0, 1).
pub fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// d/dt of [`bump`].
pub fn bump_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let q = t * (1.0 - t);
        bump(t) * (1.0 - 2.0 * t) / (q * q)
    }
}

/// Master smoothstep Θ(s) = N ∫₀^s bump, with Θ(1) = 1.
#[derive(Debug)]
pub struct Smoothstep {
    norm: f64,
    max_slope: f64,
    rule: GaussRule,
}

const PANELS: usize = 2;

impl Smoothstep {
    fn build() -> Self {
        let rule = GaussRule::new(32);
        let half: f64 = (0..8).map(|k| rule.integrate(k as f64 / 16.0, (k + 1) as f64 / 16.0, bump)).sum();
        let norm = 1.0 / (2.0 * half);
        Smoothstep { norm, max_slope: norm * bump(0.5), rule }
    }

    /// Shared instance; the constants are computed once.
    pub fn get() -> &'static Smoothstep {
        static INSTANCE: Lazy<Smoothstep> = Lazy::new(Smoothstep::build);
        &INSTANCE
    }

    fn partial(&self, s: f64) -> f64 {
        let step = s / PANELS as f64;
        let raw: f64 = (0..PANELS).map(|k| self.rule.integrate(k as f64 * step, (k + 1) as f64 * step, bump)).sum();
        self.norm * raw
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else if s <= 0.5 {
            self.partial(s)
        } else {
            1.0 - self.partial(1.0 - s)
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.norm * bump(s)
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        self.norm * bump_derivative(s)
    }

    /// C = sup Θ'.
    pub fn max_slope(&self) -> f64 {
        self.max_slope
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }
}

/// θ_{h,ℓ}(d) = Θ((d − h)/ℓ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowProfile {
    pub h: f64,
    pub ell: f64,
}

impl WindowProfile {
    pub fn new(h: f64, ell: f64) -> Result<Self> {
        if !(h >= 0.0 && ell > 0.0 && h.is_finite() && ell.is_finite()) {
            return Err(Error::InvalidArgument(format!("window needs h >= 0, ell > 0 (got {h}, {ell})")));
        }
        Ok(WindowProfile { h, ell })
    }

    pub fn theta(&self, d: f64) -> f64 {
        Smoothstep::get().value((d - self.h) / self.ell)
    }

    pub fn theta_prime(&self, d: f64) -> f64 {
        Smoothstep::get().derivative((d - self.h) / self.ell) / self.ell
    }

    /// Bound on |θ'|: C/ℓ.
    pub fn slope_bound(&self) -> f64 {
        Smoothstep::get().max_slope() / self.ell
    }

    /// η(x) = θ(d(x)).
    pub fn window_value(&self, body: &Body, x: &Vec3) -> Result<f64> {
        Ok(self.theta(body.distance(x)?))
    }

    /// ∇η(x) = θ'(d(x)) n(π(x)).
    pub fn window_gradient(&self, body: &Body, x: &Vec3) -> Result<Vec3> {
        let d = body.distance(x)?;
        if d >= body.tubular_radius() {
            return Err(Error::OutsideTube { distance: d, radius: body.tubular_radius() });
        }
        let f = body.frame(x)?;
        Ok(f.normal * self.theta_prime(d))
    }
}

/// Radial profile exp(−1/(1 − r²)) of the mollifier.
pub fn kernel_profile(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Discrete mollifier on the unit ball: radial Gauss nodes (weight r²G(r))
/// times a centrally symmetric product rule on the sphere; weights are
/// normalised to sum to one.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    pub radial_order: usize,
    pub angular_order: usize,
    offsets: Vec<Vec3>,
    weights: Vec<f64>,
    raw_mass: f64,
}

impl MollifierKernel {
    pub fn new(radial_order: usize, angular_order: usize) -> Result<Self> {
        if radial_order == 0 || angular_order == 0 {
            return Err(Error::InvalidArgument("kernel orders must be >= 1".into()));
        }
        let radial = GaussRule::new(radial_order).on_interval(0.0, 1.0);
        let polar = GaussRule::new(angular_order);
        let azimuth = periodic(2 * angular_order);
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for &(r, wr) in &radial {
            let wr = wr * r * r * kernel_profile(r);
            for (&u, &wu) in polar.nodes.iter().zip(&polar.weights) {
                let sin = (1.0 - u * u).sqrt();
                for &(phi, wphi) in &azimuth {
                    offsets.push(Vec3::new(sin * phi.cos(), sin * phi.sin(), u) * r);
                    weights.push(wr * wu * wphi);
                }
            }
        }
        let raw_mass: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= raw_mass;
        }
        Ok(MollifierKernel { radial_order, angular_order, offsets, weights, raw_mass })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// ∫ G dV of the unnormalised profile under the stored rule.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self) -> &[Vec3] {
        &self.offsets
    }

    fn check_stencil(&self, body: &Body, ell: f64, x: &Vec3) -> Result<()> {
        if !(ell > 0.0) {
            return Err(Error::InvalidArgument(format!("mollifier scale {ell} must be positive")));
        }
        let d = body.distance(x)?;
        if d < ell {
            return Err(Error::StencilExitsDomain { distance: d, scale: ell });
        }
        Ok(())
    }

    /// f̄_ℓ(x) = Σ w_k f(x + ℓ r_k) for an N-component integrand.
    pub fn mollify<const N: usize, F>(&self, body: &Body, ell: f64, x: &Vec3, f: F) -> Result<[f64; N]>
    where
        F: Fn(&Vec3) -> Result<[f64; N]>,
    {
        self.check_stencil(body, ell, x)?;
        let mut acc = [0.0; N];
        for (o, &w) in self.offsets.iter().zip(&self.weights) {
            let v = f(&(x + o * ell))?;
            for c in 0..N {
                acc[c] += w * v[c];
            }
        }
        Ok(acc)
    }

    pub fn mollify_velocity(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64) -> Result<Vec3> {
        let f = state.field();
        let v = self.mollify(state.body(), ell, x, |y| {
            let u = f.velocity(y, t)?;
            Ok([u.x, u.y, u.z])
        })?;
        Ok(Vec3::new(v[0], v[1], v[2]))
    }

    pub fn mollify_pressure(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64) -> Result<f64> {
        let f = state.field();
        Ok(self.mollify(state.body(), ell, x, |y| Ok([f.pressure(y, t)?]))?[0])
    }

    /// T̄_ℓ = mollified u⊗u.
    pub fn advective_stress(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64) -> Result<Mat3> {
        Ok(self.mollified_state(state, ell, x, t)?.stress)
    }

    /// ū, p̄ and T̄ from one pass over the stencil.
    pub fn mollified_state(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64) -> Result<MollifiedState> {
        let f = state.field();
        let v = self.mollify(state.body(), ell, x, |y| {
            let u = f.velocity(y, t)?;
            let p = f.pressure(y, t)?;
            Ok([u.x, u.y, u.z, p, u.x * u.x, u.x * u.y, u.x * u.z, u.y * u.y, u.y * u.z, u.z * u.z])
        })?;
        Ok(MollifiedState {
            velocity: Vec3::new(v[0], v[1], v[2]),
            pressure: v[3],
            stress: Mat3::new(v[4], v[5], v[6], v[5], v[7], v[8], v[6], v[8], v[9]),
        })
    }

    /// Mollified inviscid forcing ḡ_E (zero for fields declared exact).
    pub fn mollify_inviscid_forcing(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64) -> Result<Vec3> {
        let v = self.mollify(state.body(), ell, x, |y| {
            let g = state.identity_inviscid_forcing(y, t)?;
            Ok([g.x, g.y, g.z])
        })?;
        Ok(Vec3::new(v[0], v[1], v[2]))
    }

    /// Mollified ∇·(u⊗u) = (∇u)u + (∇·u)u from pointwise derivatives.
    pub fn mollify_stress_divergence(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64) -> Result<Vec3> {
        let f = state.field();
        let v = self.mollify(state.body(), ell, x, |y| {
            let u = f.velocity(y, t)?;
            let g = f.velocity_gradient(y, t)?;
            let d = g * u + u * g.trace();
            Ok([d.x, d.y, d.z])
        })?;
        Ok(Vec3::new(v[0], v[1], v[2]))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MollifiedState {
    pub velocity: Vec3,
    pub pressure: f64,
    pub stress: Mat3,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_constants() {
        let s = Smoothstep::get();
        // ∫₀¹ exp(−1/(t(1−t))) dt
        assert!((1.0 / s.normalization() - 0.007_029_858_406_609_656_5).abs() < 1e-15);
        assert!((s.value(0.5) - 0.5).abs() < 1e-15);
        assert!((s.max_slope() - s.derivative(0.5)).abs() < 1e-15);
        assert_eq!(s.value(-0.1), 0.0);
        assert_eq!(s.value(1.2), 1.0);
    }

    #[test]
    fn smoothstep_derivative_consistency() {
        let s = Smoothstep::get();
        for x in [0.1, 0.3, 0.45, 0.55, 0.8, 0.93] {
            let h = 1e-5;
            let fd = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
            assert!((fd - s.derivative(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn kernel_mass_matches_radial_integral() {
        let k = MollifierKernel::new(24, 6).unwrap();
        let exact = 4.0 * std::f64::consts::PI * GaussRule::new(64).integrate(0.0, 1.0, |r| r * r * kernel_profile(r));
        assert!((k.raw_mass() - exact).abs() < 1e-5 * exact);
        assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let first: Vec3 = k.offsets().iter().zip(k.weights()).map(|(o, w)| o * *w).sum();
        assert!(first.norm() < 1e-15);
    }
}
