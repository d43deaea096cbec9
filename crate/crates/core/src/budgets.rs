//! Pairings and weak-form identities.
//!
//! Every space-time integral is a band (or wall) quadrature times a Gauss
//! rule over the support of the section's time bump. Integrands are written
//! as `β(t)·A(x, t) + β'(t)·B(x, t)`; for steady fields A and B are evaluated
//! once and multiplied by ∫β and ∫β'. Node contributions are computed in
//! parallel and summed in a fixed order.
//!
//! Identities carry a body force `g` so that surrogate fields are exact
//! solutions of a forced system:
//!
//! * interior: `−⟨⟨u,∂_tφ⟩⟩ − ⟨⟨u⊗u:∇φ⟩⟩ − ⟨⟨p,∇·φ⟩⟩ − ν⟨⟨u,Δφ⟩⟩ − ⟨⟨g,φ⟩⟩`
//!   equals `−⟨τ_w, ψ⟩` for tangential and `+⟨p_w n, ψ⟩` for normal sections;
//! * windowed: `⟨⟨∂_tφ, ηū⟩⟩ + ⟨⟨∇φ, η(T̄ + p̄I)⟩⟩ + ⟨⟨ηḡ_E, φ⟩⟩ = −F` with the
//!   flux `F = ⟨⟨φ, ∇η·T̄ + p̄∇η⟩⟩` and `g_E = g + νΔu`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{FlowState, ResidualClass};
use crate::filtering::{MollifierKernel, WindowProfile};
use crate::geometry::{BandOrder, Mat3, ShellNode, Vec3};
use crate::quadrature::refined;
use crate::sections::{
    combine_time, extend, lighthill_companion_section, ExtendedTestField, ExtensionKind, ScalarTest, SectionKind,
    SurfaceTestSection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Orders {
    pub surface: usize,
    pub radial: usize,
    pub time: usize,
}

impl Orders {
    pub fn new(surface: usize, radial: usize, time: usize) -> Self {
        Orders { surface, radial, time }
    }

    pub fn refined(&self) -> Self {
        Orders { surface: refined(self.surface), radial: refined(self.radial), time: refined(self.time) }
    }

    fn band(&self) -> BandOrder {
        BandOrder::new(self.surface, self.radial)
    }
}

/// Verdict rule: `residual ≤ max(multiplier·error, rel_floor·scale, abs_floor)`
/// where `error` is the larger refinement-step estimate of the two sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub error_multiplier: f64,
    pub rel_floor: f64,
    pub abs_floor: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { error_multiplier: 10.0, rel_floor: 1e-8, abs_floor: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceRoute {
    /// Central differences of the mollified stress.
    FiniteDifference,
    /// Mollified pointwise ∇·(u⊗u).
    MollifiedAnalytic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingInputs {
    pub field: String,
    pub section: String,
    pub nu: f64,
    pub h: Option<f64>,
    pub ell: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingValue {
    pub id: String,
    pub value: f64,
    pub refined_value: f64,
    pub error_estimate: f64,
    pub orders: Orders,
    pub nodes: usize,
    pub inputs: PairingInputs,
    /// Named parts of the value (e.g. advective and pressure flux).
    pub components: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub id: String,
    pub inputs: PairingInputs,
    pub left: f64,
    pub right: f64,
    pub absolute: f64,
    pub relative: f64,
    pub error_left: f64,
    pub error_right: f64,
    pub refined_absolute: f64,
    pub threshold: f64,
    pub pass: bool,
    pub orders: Orders,
    pub nodes: usize,
}

impl IdentityResidual {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        id: &str,
        inputs: PairingInputs,
        base: (f64, f64),
        fine: (f64, f64),
        orders: Orders,
        nodes: usize,
        tol: &Tolerance,
    ) -> Self {
        let (left, right) = base;
        let absolute = (left - right).abs();
        let scale = left.abs().max(right.abs());
        let error_left = (fine.0 - left).abs();
        let error_right = (fine.1 - right).abs();
        let threshold =
            (tol.error_multiplier * error_left.max(error_right)).max(tol.rel_floor * scale).max(tol.abs_floor);
        IdentityResidual {
            id: id.to_string(),
            inputs,
            left,
            right,
            absolute,
            relative: absolute / scale.max(tol.abs_floor),
            error_left,
            error_right,
            refined_absolute: (fine.0 - fine.1).abs(),
            threshold,
            pass: absolute <= threshold,
            orders,
            nodes,
        }
    }
}

/// Evaluation context: quadrature orders, mollifier and verdict rule.
#[derive(Debug, Clone)]
pub struct Budget {
    pub orders: Orders,
    pub kernel: MollifierKernel,
    pub tolerance: Tolerance,
    pub divergence_route: DivergenceRoute,
}

/// Time-integration data for one section.
struct TimeData {
    steady_time: Option<f64>,
    nodes: Vec<(f64, f64)>,
    beta_integral: f64,
    beta_prime_integral: f64,
}

impl TimeData {
    fn new(state: &FlowState, section: &SurfaceTestSection, order: usize) -> Result<Self> {
        let tp = section.time;
        if tp.start < 0.0 || tp.end > state.horizon() {
            return Err(Error::InvalidArgument(format!(
                "time support [{}, {}] of `{}` exceeds (0, {})",
                tp.start,
                tp.end,
                section.id,
                state.horizon()
            )));
        }
        let nodes = tp.rule(order);
        // Exact moments: β is a rescaled bump with peak 1 and β' integrates to 0.
        let beta_integral = tp.exact_integral();
        let beta_prime_integral = 0.0;
        let steady_time = state.field().is_steady().then_some(0.5 * (tp.start + tp.end));
        Ok(TimeData { steady_time, nodes, beta_integral, beta_prime_integral })
    }
}

/// Σ over nodes and times of `w·(β A + β' B)` for K-component integrands.
fn integrate<const K: usize, F>(
    nodes: &[ShellNode],
    time: &TimeData,
    section: &SurfaceTestSection,
    f: F,
) -> Result<[f64; K]>
where
    F: Fn(&ShellNode, f64) -> Result<([f64; K], [f64; K])> + Sync,
{
    let sweep = |t: f64| -> Result<([f64; K], [f64; K])> {
        let parts: Vec<([f64; K], [f64; K])> = nodes.par_iter().map(|n| f(n, t)).collect::<Result<_>>()?;
        let mut a = [0.0; K];
        let mut b = [0.0; K];
        for (node, (pa, pb)) in nodes.iter().zip(parts) {
            for k in 0..K {
                a[k] += node.weight * pa[k];
                b[k] += node.weight * pb[k];
            }
        }
        Ok((a, b))
    };
    let mut out = [0.0; K];
    match time.steady_time {
        Some(t) => {
            let (a, b) = sweep(t)?;
            for k in 0..K {
                out[k] = time.beta_integral * a[k] + time.beta_prime_integral * b[k];
            }
        }
        None => {
            for &(t, wt) in &time.nodes {
                let (beta, dbeta) = (section.time.value(t), section.time.derivative(t));
                if beta == 0.0 && dbeta == 0.0 {
                    continue;
                }
                let (a, b) = sweep(t)?;
                for k in 0..K {
                    out[k] += wt * (beta * a[k] + dbeta * b[k]);
                }
            }
        }
    }
    Ok(out)
}

fn wall_nodes(state: &FlowState, order: usize) -> Result<Vec<ShellNode>> {
    let q = state.body().surface_quadrature(order)?;
    Ok(q.nodes
        .iter()
        .enumerate()
        .map(|(i, s)| ShellNode {
            point: s.point,
            weight: s.weight,
            distance: 0.0,
            foot: s.point,
            normal: s.normal,
            surface_index: i,
            curvature_sum: s.curvature_sum,
            gauss: s.gauss,
        })
        .collect())
}

fn inputs(state: &FlowState, section: &SurfaceTestSection, h: Option<f64>, ell: Option<f64>) -> PairingInputs {
    PairingInputs { field: state.id(), section: section.id.clone(), nu: state.viscosity(), h, ell }
}

fn node_count(nodes: usize, time: &TimeData) -> usize {
    nodes * if time.steady_time.is_some() { 1 } else { time.nodes.len() }
}

/// Dyadic refinement levels at ends where a weight has an essential
/// singularity: the extension cutoff and both edges of the window shell.
pub(crate) const CUTOFF_GRADING: i32 = 5;
pub(crate) const SHELL_GRADING: i32 = 4;

/// Interior breakpoints of [a, b] graded geometrically towards b, or towards
/// both ends.
pub(crate) fn graded(a: f64, b: f64, levels: i32, both: bool) -> Vec<f64> {
    let len = b - a;
    let mut out = vec![a + 0.5 * len];
    for k in 2..=levels {
        let f = 0.5f64.powi(k);
        out.push(b - f * len);
        if both {
            out.push(a + f * len);
        }
    }
    out
}

/// Radial breakpoints on [start, cutoff]: graded towards the cutoff, towards
/// both edges of the shell [h, h + ℓ] when given, plus δ and 3δ for fields
/// with a wall layer.
fn support_breaks(state: &FlowState, start: f64, cutoff: f64, shell: Option<(f64, f64)>) -> Vec<f64> {
    let mut b = vec![start, cutoff];
    match shell {
        Some((h, ell)) => {
            b.push(h + ell);
            b.extend(graded(h, h + ell, SHELL_GRADING, true));
            b.extend(graded(h + ell, cutoff, CUTOFF_GRADING, false));
        }
        None => b.extend(graded(start, cutoff, CUTOFF_GRADING, false)),
    }
    if let Some(delta) = state.field().wall_layer() {
        // The layer profile is flat to all orders at its outer edge.
        if delta > start && delta < cutoff {
            b.extend(graded(start, delta, CUTOFF_GRADING, false));
        }
        b.extend([delta, 3.0 * delta]);
    }
    b.retain(|&x| x >= start && x <= cutoff);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * cutoff);
    b
}

/// Nodes of the window shell h < d < h + ℓ, graded towards both edges.
fn shell_nodes(state: &FlowState, h: f64, ell: f64, order: BandOrder) -> Result<Vec<ShellNode>> {
    let mut b = vec![h, h + ell];
    b.extend(graded(h, h + ell, SHELL_GRADING, true));
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    Ok(state.body().band_quadrature(&b, order)?.nodes)
}

fn check_shell(state: &FlowState, h: f64, ell: f64, phi: &ExtendedTestField) -> Result<()> {
    if !(ell > 0.0 && ell < h) {
        return Err(Error::InvalidArgument(format!("flux pairing needs 0 < ell < h (got h={h}, ell={ell})")));
    }
    if !(h + ell < phi.cutoff()) {
        return Err(Error::InvalidArgument(format!(
            "flux shell (h + ell = {}) must lie inside the extension cutoff {}",
            h + ell,
            phi.cutoff()
        )));
    }
    if !(h + ell < state.body().tubular_radius()) {
        return Err(Error::BandExitsTube { inner: h, outer: h + ell, radius: state.body().tubular_radius() });
    }
    Ok(())
}

fn contract(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

impl Budget {
    pub fn new(orders: Orders, kernel: MollifierKernel) -> Self {
        Budget { orders, kernel, tolerance: Tolerance::default(), divergence_route: DivergenceRoute::FiniteDifference }
    }

    fn with_orders(&self, orders: Orders) -> Budget {
        Budget { orders, ..self.clone() }
    }

    fn pairing<F>(&self, id: &str, inputs: PairingInputs, eval: F) -> Result<PairingValue>
    where
        F: Fn(&Budget) -> Result<(Vec<(String, f64)>, usize)>,
    {
        let (parts, nodes) = eval(self)?;
        let fine = self.with_orders(self.orders.refined());
        let (fine_parts, _) = eval(&fine)?;
        let value: f64 = parts.iter().map(|p| p.1).sum();
        let refined_value: f64 = fine_parts.iter().map(|p| p.1).sum();
        Ok(PairingValue {
            id: id.to_string(),
            value,
            refined_value,
            error_estimate: (refined_value - value).abs(),
            orders: self.orders,
            nodes,
            inputs,
            components: if parts.len() > 1 { parts } else { Vec::new() },
        })
    }

    fn identity<F>(&self, id: &str, inputs: PairingInputs, eval: F) -> Result<IdentityResidual>
    where
        F: Fn(&Budget) -> Result<(f64, f64, usize)>,
    {
        let (l, r, nodes) = eval(self)?;
        let (lf, rf, _) = eval(&self.with_orders(self.orders.refined()))?;
        Ok(IdentityResidual::assemble(id, inputs, (l, r), (lf, rf), self.orders, nodes, &self.tolerance))
    }

    /// ⟨τ_w, ψ⟩ = ∫∫ τ_w·ψ dS dt.
    pub fn pair_wall_shear(&self, state: &FlowState, psi: &SurfaceTestSection) -> Result<PairingValue> {
        self.pairing("wall_shear", inputs(state, psi, None, None), |b| {
            let v = b.wall_shear_raw(state, psi)?;
            Ok((vec![("total".into(), v.0)], v.1))
        })
    }

    fn wall_shear_raw(&self, state: &FlowState, psi: &SurfaceTestSection) -> Result<(f64, usize)> {
        let nodes = wall_nodes(state, self.orders.surface)?;
        let time = TimeData::new(state, psi, self.orders.time)?;
        let body = state.body();
        let [v] = integrate(&nodes, &time, psi, |n, t| {
            let tau = state.wall_shear_stress(&n.point, t)?;
            Ok(([tau.dot(&psi.spatial_at(body, &n.point, &n.normal)?)], [0.0]))
        })?;
        Ok((v, node_count(nodes.len(), &time)))
    }

    /// ⟨p_w n, ψ⟩ = ∫∫ p_w σ dS dt.
    pub fn pair_wall_pressure(&self, state: &FlowState, psi: &SurfaceTestSection) -> Result<PairingValue> {
        self.pairing("wall_pressure", inputs(state, psi, None, None), |b| {
            let v = b.wall_pressure_raw(state, psi)?;
            Ok((vec![("total".into(), v.0)], v.1))
        })
    }

    fn wall_pressure_raw(&self, state: &FlowState, psi: &SurfaceTestSection) -> Result<(f64, usize)> {
        let nodes = wall_nodes(state, self.orders.surface)?;
        let time = TimeData::new(state, psi, self.orders.time)?;
        let body = state.body();
        let [v] = integrate(&nodes, &time, psi, |n, t| {
            let pw = state.wall_pressure(&n.point, t)?;
            Ok(([pw * psi.spatial_at(body, &n.point, &n.normal)?.dot(&n.normal)], [0.0]))
        })?;
        Ok((v, node_count(nodes.len(), &time)))
    }

    /// The weak interior functional tested against an extension.
    pub fn weak_interior_functional(&self, state: &FlowState, phi: &ExtendedTestField) -> Result<PairingValue> {
        self.pairing("interior", inputs(state, phi.section(), None, None), |b| {
            let v = b.interior_raw(state, phi)?;
            Ok((vec![("total".into(), v.0)], v.1))
        })
    }

    fn interior_raw(&self, state: &FlowState, phi: &ExtendedTestField) -> Result<(f64, usize)> {
        let breaks = support_breaks(state, 0.0, phi.cutoff(), None);
        let band = state.body().band_quadrature(&breaks, self.orders.band())?;
        let section = phi.section();
        let time = TimeData::new(state, section, self.orders.time)?;
        let field = state.field();
        let nu = state.viscosity();
        let [v] = integrate(&band.nodes, &time, section, |n, t| {
            let d = phi.spatial_derivatives_with(&n.point, &n.frame())?;
            if d.value == Vec3::zeros() && d.jacobian == Mat3::zeros() {
                return Ok(([0.0], [0.0]));
            }
            let u = field.velocity(&n.point, t)?;
            let p = field.pressure(&n.point, t)?;
            let g = state.identity_forcing(&n.point, t)?;
            let a = -u.dot(&(d.jacobian * u)) - p * d.divergence - nu * u.dot(&d.laplacian) - g.dot(&d.value);
            Ok(([a], [-u.dot(&d.value)]))
        })?;
        Ok((v, node_count(band.nodes.len(), &time)))
    }

    /// ⟨⟨g, φ⟩⟩: the body force a surrogate field needs, tested against φ.
    pub fn forcing_pairing(&self, state: &FlowState, phi: &ExtendedTestField) -> Result<PairingValue> {
        self.pairing("forcing", inputs(state, phi.section(), None, None), |b| {
            let breaks = support_breaks(state, 0.0, phi.cutoff(), None);
            let band = state.body().band_quadrature(&breaks, b.orders.band())?;
            let section = phi.section();
            let time = TimeData::new(state, section, b.orders.time)?;
            let [v] = integrate(&band.nodes, &time, section, |n, t| {
                let value = phi.spatial_value(&n.point)?;
                if value == Vec3::zeros() {
                    return Ok(([0.0], [0.0]));
                }
                Ok(([state.forcing_residual(&n.point, t)?.dot(&value)], [0.0]))
            })?;
            Ok((vec![("total".into(), v)], node_count(band.nodes.len(), &time)))
        })
    }

    /// Interior functional with Ext⁰_T against −⟨τ_w, ψ⟩.
    pub fn identity_residual_tangential(
        &self,
        state: &FlowState,
        psi: &SurfaceTestSection,
        cutoff: f64,
        kind: ExtensionKind,
    ) -> Result<IdentityResidual> {
        if psi.kind() != SectionKind::Tangential {
            return Err(Error::InvalidArgument(format!("section `{}` is not tangential", psi.id)));
        }
        let phi = extend(psi, state.body(), cutoff, kind)?;
        let id = match kind {
            ExtensionKind::Natural => "tangential_identity",
            ExtensionKind::NormalDrift { .. } => "tangential_identity_drift",
        };
        self.identity(id, inputs(state, psi, None, None), |b| {
            let (l, nodes) = b.interior_raw(state, &phi)?;
            let (tau, _) = b.wall_shear_raw(state, psi)?;
            Ok((l, -tau, nodes))
        })
    }

    /// Interior functional with Ext⁰_N against +⟨p_w n, ψ⟩.
    pub fn identity_residual_normal(
        &self,
        state: &FlowState,
        psi: &SurfaceTestSection,
        cutoff: f64,
    ) -> Result<IdentityResidual> {
        let phi = extend(psi, state.body(), cutoff, ExtensionKind::Natural)?;
        if psi.kind() != SectionKind::Normal {
            return Err(Error::InvalidArgument(format!("section `{}` is not normal", psi.id)));
        }
        self.identity("normal_identity", inputs(state, psi, None, None), |b| {
            let (l, nodes) = b.interior_raw(state, &phi)?;
            let (pw, _) = b.wall_pressure_raw(state, psi)?;
            Ok((l, pw, nodes))
        })
    }

    /// F = ⟨⟨φ, ∇η·T̄ + p̄∇η⟩⟩ with advective and pressure parts reported.
    pub fn momentum_flux_pairing(
        &self,
        state: &FlowState,
        h: f64,
        ell: f64,
        phi: &ExtendedTestField,
    ) -> Result<PairingValue> {
        check_shell(state, h, ell, phi)?;
        self.pairing("momentum_flux", inputs(state, phi.section(), Some(h), Some(ell)), |b| {
            let ([adv, pres], nodes) = b.flux_raw(state, h, ell, phi)?;
            Ok((vec![("advective".into(), adv), ("pressure".into(), pres)], nodes))
        })
    }

    fn flux_raw(&self, state: &FlowState, h: f64, ell: f64, phi: &ExtendedTestField) -> Result<([f64; 2], usize)> {
        let window = WindowProfile::new(h, ell)?;
        let shell = shell_nodes(state, h, ell, self.orders.band())?;
        let section = phi.section();
        let time = TimeData::new(state, section, self.orders.time)?;
        let v = integrate(&shell, &time, section, |n, t| {
            let dtheta = window.theta_prime(n.distance);
            if dtheta == 0.0 {
                return Ok(([0.0; 2], [0.0; 2]));
            }
            let value = phi.spatial_value(&n.point)?;
            let m = self.kernel.mollified_state(state, ell, &n.point, t)?;
            let adv = dtheta * value.dot(&(m.stress * n.normal));
            let pres = dtheta * m.pressure * value.dot(&n.normal);
            Ok(([adv, pres], [0.0; 2]))
        })?;
        Ok((v, node_count(shell.len(), &time)))
    }

    /// Windowed interior terms (plus windowed forcing) against −F.
    pub fn coarse_grained_budget_residual(
        &self,
        state: &FlowState,
        h: f64,
        ell: f64,
        phi: &ExtendedTestField,
    ) -> Result<IdentityResidual> {
        check_shell(state, h, ell, phi)?;
        self.identity("coarse_grained_budget", inputs(state, phi.section(), Some(h), Some(ell)), |b| {
            b.coarse_raw(state, h, ell, phi)
        })
    }

    fn coarse_raw(&self, state: &FlowState, h: f64, ell: f64, phi: &ExtendedTestField) -> Result<(f64, f64, usize)> {
        let window = WindowProfile::new(h, ell)?;
        let breaks = support_breaks(state, h, phi.cutoff(), Some((h, ell)));
        let band = state.body().band_quadrature(&breaks, self.orders.band())?;
        let section = phi.section();
        let time = TimeData::new(state, section, self.orders.time)?;
        let forced = state.field().residual_class() != ResidualClass::Euler;
        let [left, right] = integrate(&band.nodes, &time, section, |n, t| {
            let d = phi.spatial_derivatives_with(&n.point, &n.frame())?;
            let eta = window.theta(n.distance);
            let dtheta = window.theta_prime(n.distance);
            if d.value == Vec3::zeros() && d.jacobian == Mat3::zeros() {
                return Ok(([0.0; 2], [0.0; 2]));
            }
            let m = self.kernel.mollified_state(state, ell, &n.point, t)?;
            let g = if forced { self.kernel.mollify_inviscid_forcing(state, ell, &n.point, t)? } else { Vec3::zeros() };
            let a_left = eta * (contract(&d.jacobian, &m.stress) + m.pressure * d.divergence + d.value.dot(&g));
            let b_left = eta * d.value.dot(&m.velocity);
            let a_right = -dtheta * (d.value.dot(&(m.stress * n.normal)) + m.pressure * d.value.dot(&n.normal));
            Ok(([a_left, a_right], [b_left, 0.0]))
        })?;
        Ok((left, right, node_count(band.nodes.len(), &time)))
    }

    /// ∇·T̄ at x by the configured route.
    fn stress_divergence(&self, state: &FlowState, ell: f64, x: &Vec3, t: f64, step: f64) -> Result<Vec3> {
        match self.divergence_route {
            DivergenceRoute::MollifiedAnalytic => self.kernel.mollify_stress_divergence(state, ell, x, t),
            DivergenceRoute::FiniteDifference => {
                let mut div = Vec3::zeros();
                for i in 0..3 {
                    let mut e = Vec3::zeros();
                    e[i] = 1.0;
                    let row: Vec3 = crate::fields::derivatives::directional(
                        |y| {
                            let s = self.kernel.advective_stress(state, ell, y, t)?;
                            Ok(Vec3::new(s[(i, 0)], s[(i, 1)], s[(i, 2)]))
                        },
                        x,
                        &e,
                        step,
                    )?;
                    div += row;
                }
                Ok(div)
            }
        }
    }

    /// Pressure side ⟨⟨p̄, ∇η·(∇×φ)⟩⟩ against the momentum side obtained by
    /// testing the coarse-grained balance with ∇η × φ.
    pub fn lighthill_balance(
        &self,
        state: &FlowState,
        h: f64,
        ell: f64,
        psi: &SurfaceTestSection,
        cutoff: f64,
    ) -> Result<IdentityResidual> {
        if psi.kind() != SectionKind::Tangential {
            return Err(Error::InvalidArgument(format!("section `{}` is not tangential", psi.id)));
        }
        let phi = extend(psi, state.body(), cutoff, ExtensionKind::Natural)?;
        check_shell(state, h, ell, &phi)?;
        self.identity("lighthill_balance", inputs(state, psi, Some(h), Some(ell)), |b| {
            b.lighthill_raw(state, h, ell, &phi)
        })
    }

    fn lighthill_raw(&self, state: &FlowState, h: f64, ell: f64, phi: &ExtendedTestField) -> Result<(f64, f64, usize)> {
        let window = WindowProfile::new(h, ell)?;
        let shell = shell_nodes(state, h, ell, self.orders.band())?;
        let section = phi.section();
        let time = TimeData::new(state, section, self.orders.time)?;
        let forced = state.field().residual_class() != ResidualClass::Euler;
        let step = crate::sections::FD_FIRST * phi.cutoff();
        let [left, right] = integrate(&shell, &time, section, |n, t| {
            let dtheta = window.theta_prime(n.distance);
            if dtheta == 0.0 {
                return Ok(([0.0; 2], [0.0; 2]));
            }
            let d = phi.spatial_derivatives_with(&n.point, &n.frame())?;
            let m = self.kernel.mollified_state(state, ell, &n.point, t)?;
            let div = self.stress_divergence(state, ell, &n.point, t, step)?;
            let mut src = div;
            if forced {
                src -= self.kernel.mollify_inviscid_forcing(state, ell, &n.point, t)?;
            }
            let a_left = dtheta * m.pressure * d.curl.dot(&n.normal);
            let a_right = dtheta * d.value.dot(&n.normal.cross(&src));
            let b_right = -dtheta * d.value.dot(&n.normal.cross(&m.velocity));
            Ok(([a_left, a_right], [0.0, b_right]))
        })?;
        Ok((left, right, node_count(shell.len(), &time)))
    }

    /// The wall pairing the Lighthill pressure side tends to:
    /// ⟨p_w n, ((n×∇)·ψ) n⟩.
    pub fn lighthill_surface_pairing(&self, state: &FlowState, psi: &SurfaceTestSection) -> Result<PairingValue> {
        let companion = lighthill_companion_section(psi)?;
        let mut v = self.pair_wall_pressure(state, &companion)?;
        v.id = "lighthill_surface".into();
        Ok(v)
    }

    /// Pressure side of the Lighthill balance as a pairing (for sweeps).
    pub fn lighthill_pressure_side(
        &self,
        state: &FlowState,
        h: f64,
        ell: f64,
        psi: &SurfaceTestSection,
        cutoff: f64,
    ) -> Result<PairingValue> {
        let phi = extend(psi, state.body(), cutoff, ExtensionKind::Natural)?;
        check_shell(state, h, ell, &phi)?;
        self.pairing("lighthill_pressure", inputs(state, psi, Some(h), Some(ell)), |b| {
            let window = WindowProfile::new(h, ell)?;
            let shell = shell_nodes(state, h, ell, b.orders.band())?;
            let time = TimeData::new(state, psi, b.orders.time)?;
            let [v] = integrate(&shell, &time, psi, |n, t| {
                let dtheta = window.theta_prime(n.distance);
                if dtheta == 0.0 {
                    return Ok(([0.0], [0.0]));
                }
                let d = phi.spatial_derivatives_with(&n.point, &n.frame())?;
                let p = b.kernel.mollify_pressure(state, ell, &n.point, t)?;
                Ok(([dtheta * p * d.curl.dot(&n.normal)], [0.0]))
            })?;
            Ok((vec![("total".into(), v)], node_count(shell.len(), &time)))
        })
    }

    /// `∫ [pΔφ + u⊗u:∇∇φ] dV` against `−∫ p ∂φ/∂n dA − ∫ g_E·∇φ dV` at time t
    /// (n into the flow; g_E omitted for fields declared exact).
    pub fn pressure_weak_neumann_residual(
        &self,
        state: &FlowState,
        test: &ScalarTest,
        t: f64,
    ) -> Result<IdentityResidual> {
        if !(test.cutoff > 0.0 && test.cutoff < state.body().tubular_radius()) {
            return Err(Error::InvalidArgument(format!(
                "scalar test support {} exits quadrature coverage (tube radius {})",
                test.cutoff,
                state.body().tubular_radius()
            )));
        }
        let inputs = PairingInputs {
            field: state.id(),
            section: "scalar_test".into(),
            nu: state.viscosity(),
            h: None,
            ell: None,
        };
        self.identity("weak_neumann_pressure", inputs, |b| b.neumann_raw(state, test, t))
    }

    fn neumann_raw(&self, state: &FlowState, test: &ScalarTest, t: f64) -> Result<(f64, f64, usize)> {
        let body = state.body();
        let field = state.field();
        let breaks = support_breaks(state, 0.0, test.cutoff, None);
        let band = body.band_quadrature(&breaks, self.orders.band())?;
        let forced = field.residual_class() != ResidualClass::Euler;
        let parts: Vec<(f64, f64)> = band
            .nodes
            .par_iter()
            .map(|n| {
                let d = test.derivatives(body, &n.point, &n.frame())?;
                let u = field.velocity(&n.point, t)?;
                let p = field.pressure(&n.point, t)?;
                let left = p * d.laplacian + u.dot(&(d.hessian * u));
                let mut right = 0.0;
                if forced {
                    let g = field.inviscid_forcing(&n.point, t)? - field.velocity_time_derivative(&n.point, t)?;
                    right -= g.dot(&d.gradient);
                }
                Ok((left, right))
            })
            .collect::<Result<_>>()?;
        let mut left = 0.0;
        let mut right = 0.0;
        for (n, (l, r)) in band.nodes.iter().zip(parts) {
            left += n.weight * l;
            right += n.weight * r;
        }
        let wall = wall_nodes(state, self.orders.surface)?;
        let surface: Vec<f64> = wall
            .par_iter()
            .map(|n| Ok(state.wall_pressure(&n.point, t)? * test.wall_normal_derivative(&n.point, &n.normal)))
            .collect::<Result<_>>()?;
        for (n, v) in wall.iter().zip(surface) {
            right -= n.weight * v;
        }
        Ok((left, right, band.nodes.len() + wall.len()))
    }
}

/// φ and derivatives at a node and time (exposed for diagnostics).
pub fn extension_at(
    phi: &ExtendedTestField,
    node: &ShellNode,
    t: f64,
) -> Result<crate::sections::ExtensionDerivatives> {
    let s = phi.spatial_derivatives_with(&node.point, &node.frame())?;
    let tp = phi.section().time;
    Ok(combine_time(&s, tp.value(t), tp.derivative(t)))
}
