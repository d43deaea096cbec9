//! Parameter sweeps, power-law fits and near-wall norm estimates.
//!
//! Scale sweeps shrink the window (h, ℓ) at fixed extension cutoff ε and
//! compare the momentum-flux pairing with its wall target; viscosity sweeps
//! walk a boundary-layer family towards ν = 0. Exponents fitted here describe
//! the catalog fields and the quadrature, not a general law.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::budgets::{graded, Budget, PairingValue, SHELL_GRADING};
use crate::error::{Error, Result};
use crate::fields::{BoundaryLayerFamily, FlowState};
use crate::filtering::{MollifierKernel, WindowProfile};
use crate::geometry::{BandOrder, Body, ShellNode, Vec3};
use crate::quadrature::GaussRule;
use crate::sections::{extend, ExtensionKind, SectionKind, SurfaceTestSection};

/// Points whose quadrature error exceeds this fraction of the value are
/// left out of rate fits.
pub const FIT_ERROR_FRACTION: f64 = 0.1;

/// Minimum decay exponent for a norm curve to count as tending to zero.
pub const DECAY_EXPONENT: f64 = 0.5;

/// Exponents below this count as a flat sequence.
pub const FLAT_EXPONENT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    /// Absolute viscosities, strictly decreasing.
    pub nu_grid: Vec<f64>,
    /// Window offsets h as fractions of the extension cutoff, strictly decreasing.
    pub h_grid: Vec<f64>,
    /// ℓ = ell_ratio · h.
    pub ell_ratio: f64,
    /// Extension cutoff ε.
    pub cutoff: f64,
    /// Scale-sweep exponents are fitted on this many finest points (the
    /// asymptotic window); full-grid fits are reported alongside.
    pub fit_window: usize,
}

/// `[2^-from, …, 2^-to]`.
pub fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 0.5f64.powi(k)).collect()
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Config(format!("{name} grid must be positive and finite")));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!("{name} grid must be strictly decreasing")));
    }
    Ok(())
}

impl SweepPlan {
    pub fn validate(&self, body: &Body) -> Result<()> {
        check_grid("nu", &self.nu_grid)?;
        self.validate_scales(body)
    }

    pub fn validate_scales(&self, body: &Body) -> Result<()> {
        check_grid("h", &self.h_grid)?;
        if !(self.ell_ratio > 0.0 && self.ell_ratio < 1.0) {
            return Err(Error::Config(format!("ell ratio {} must lie in (0, 1) so that ell < h", self.ell_ratio)));
        }
        if !(self.cutoff > 0.0 && self.cutoff < body.tubular_radius()) {
            return Err(Error::Config(format!(
                "extension cutoff {} must lie in (0, {})",
                self.cutoff,
                body.tubular_radius()
            )));
        }
        if self.fit_window < 3 {
            return Err(Error::Config(format!("fit window {} must cover at least 3 points", self.fit_window)));
        }
        if self.h_grid[0] * (1.0 + self.ell_ratio) >= 1.0 {
            return Err(Error::Config("largest window h + ell must stay inside the extension cutoff".into()));
        }
        Ok(())
    }

    /// Absolute (h, ℓ) pairs.
    pub fn scales(&self) -> Vec<(f64, f64)> {
        self.h_grid
            .iter()
            .map(|&f| {
                let h = f * self.cutoff;
                (h, self.ell_ratio * h)
            })
            .collect()
    }
}

/// Least-squares fit of log|v| against log x.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub parameter: String,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub used: Vec<bool>,
    pub exponent: Option<f64>,
    pub standard_error: Option<f64>,
    pub prefactor: Option<f64>,
    /// RMS of the log residuals.
    pub fit_residual: Option<f64>,
    /// All values at or below the zero floor; no exponent is defined.
    pub identically_zero: bool,
    pub band: Option<(f64, f64)>,
    pub within_band: Option<bool>,
}

impl RateFit {
    pub fn fit(parameter: &str, abscissa: &[f64], values: &[f64], errors: &[f64], zero_floor: f64) -> Self {
        let identically_zero = values.iter().all(|v| v.abs() <= zero_floor);
        let used = values
            .iter()
            .zip(errors)
            .map(|(v, e)| v.abs() > zero_floor && v.is_finite() && *e <= FIT_ERROR_FRACTION * v.abs())
            .collect();
        Self::masked(parameter, abscissa, values, errors, used, identically_zero)
    }

    /// The same fit restricted to the last `n` samples.
    pub fn tail(&self, n: usize) -> RateFit {
        let k = self.abscissa.len().saturating_sub(n);
        Self::masked(
            &self.parameter,
            &self.abscissa[k..],
            &self.values[k..],
            &self.errors[k..],
            self.used[k..].to_vec(),
            self.identically_zero,
        )
    }

    fn masked(
        parameter: &str,
        abscissa: &[f64],
        values: &[f64],
        errors: &[f64],
        used: Vec<bool>,
        identically_zero: bool,
    ) -> Self {
        let pts: Vec<(f64, f64)> = abscissa
            .iter()
            .zip(values)
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|((x, v), _)| (x.ln(), v.abs().ln()))
            .collect();
        let mut fit = RateFit {
            parameter: parameter.to_string(),
            abscissa: abscissa.to_vec(),
            values: values.to_vec(),
            errors: errors.to_vec(),
            used,
            exponent: None,
            standard_error: None,
            prefactor: None,
            fit_residual: None,
            identically_zero,
            band: None,
            within_band: None,
        };
        if pts.len() < 3 {
            return fit;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return fit;
        }
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let ssr: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
        fit.exponent = Some(slope);
        fit.standard_error = Some((ssr / (n - 2.0) / sxx).sqrt());
        fit.prefactor = Some(icpt.exp());
        fit.fit_residual = Some((ssr / n).sqrt());
        fit
    }

    pub fn with_band(mut self, lo: f64, hi: f64) -> Self {
        self.band = Some((lo, hi));
        self.within_band = self.exponent.map(|e| e >= lo && e <= hi);
        self
    }
}

/// Limit of `v = L + C x^order` from the last two samples.
pub fn richardson_limit(x: &[f64], v: &[f64], order: f64) -> Option<f64> {
    let n = x.len();
    if n < 2 || v.len() != n {
        return None;
    }
    let r = (x[n - 1] / x[n - 2]).powf(order);
    if !(r > 0.0 && r < 1.0) {
        return None;
    }
    Some(v[n - 1] - (v[n - 2] - v[n - 1]) * r / (1.0 - r))
}

/// Last three entries strictly decreasing.
pub fn monotone_tail(v: &[f64]) -> bool {
    v.len() >= 3 && v[v.len() - 3..].windows(2).all(|w| w[1] < w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub parameter: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalePoint {
    pub h: f64,
    pub ell: f64,
    pub flux: PairingValue,
    pub advective: f64,
    pub pressure: f64,
    pub gap: f64,
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSweep {
    pub section: String,
    pub extension: String,
    /// Wall value the flux pairing tends to: ⟨p_w n, ψ⟩ for normal and
    /// −⟨τ_w, ψ⟩ for tangential sections.
    pub target: f64,
    pub target_error: f64,
    pub points: Vec<ScalePoint>,
    pub failures: Vec<SweepFailure>,
    /// Fit over the finest `fit_window` points.
    pub gap_fit: RateFit,
    pub gap_fit_all: RateFit,
    pub pressure_fit: RateFit,
    pub pressure_fit_all: RateFit,
    pub monotone_tail: bool,
    pub final_relative_gap: Option<f64>,
}

fn extension_label(kind: ExtensionKind) -> String {
    match kind {
        ExtensionKind::Natural => "natural".into(),
        ExtensionKind::NormalDrift { coefficient, .. } => format!("normal_drift({coefficient})"),
    }
}

/// Flux pairing over the (h, ℓ) grid against the wall target.
pub fn run_scale_sweep(
    budget: &Budget,
    state: &FlowState,
    plan: &SweepPlan,
    section: &SurfaceTestSection,
    kind: ExtensionKind,
) -> Result<ScaleSweep> {
    plan.validate_scales(state.body())?;
    let phi = extend(section, state.body(), plan.cutoff, kind)?;
    let (target, target_error) = match section.kind() {
        SectionKind::Normal => {
            let v = budget.pair_wall_pressure(state, section)?;
            (v.value, v.error_estimate)
        }
        SectionKind::Tangential => {
            let v = budget.pair_wall_shear(state, section)?;
            (-v.value, v.error_estimate)
        }
    };
    let results: Vec<(f64, f64, Result<PairingValue>)> = plan
        .scales()
        .into_par_iter()
        .map(|(h, ell)| (h, ell, budget.momentum_flux_pairing(state, h, ell, &phi)))
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (h, ell, r) in results {
        match r {
            Ok(flux) => {
                let part = |name: &str| flux.components.iter().find(|c| c.0 == name).map_or(0.0, |c| c.1);
                let gap = (flux.value - target).abs();
                points.push(ScalePoint {
                    h,
                    ell,
                    advective: part("advective"),
                    pressure: part("pressure"),
                    relative_gap: (target.abs() > 0.0).then(|| gap / target.abs()),
                    gap,
                    flux,
                });
            }
            Err(e) => failures.push(SweepFailure { parameter: h, message: e.to_string() }),
        }
    }
    let hs: Vec<f64> = points.iter().map(|p| p.h).collect();
    let gaps: Vec<f64> = points.iter().map(|p| p.gap).collect();
    let gap_err: Vec<f64> = points.iter().map(|p| p.flux.error_estimate + target_error).collect();
    let scale = target.abs().max(points.iter().map(|p| p.flux.value.abs()).fold(0.0, f64::max));
    let floor = 1e-13 * scale.max(1.0);
    let pres: Vec<f64> = points.iter().map(|p| p.pressure).collect();
    let pres_err: Vec<f64> = points.iter().map(|p| p.flux.error_estimate).collect();
    let gap_fit_all = RateFit::fit("h", &hs, &gaps, &gap_err, floor);
    let pressure_fit_all = RateFit::fit("h", &hs, &pres, &pres_err, floor);
    Ok(ScaleSweep {
        section: section.id.clone(),
        extension: extension_label(kind),
        target,
        target_error,
        gap_fit: gap_fit_all.tail(plan.fit_window),
        pressure_fit: pressure_fit_all.tail(plan.fit_window),
        gap_fit_all,
        pressure_fit_all,
        monotone_tail: monotone_tail(&gaps),
        final_relative_gap: points.last().and_then(|p| p.relative_gap),
        points,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LighthillSweep {
    pub section: String,
    pub hs: Vec<f64>,
    pub pressure_side: Vec<f64>,
    pub errors: Vec<f64>,
    pub failures: Vec<SweepFailure>,
    /// First-order Richardson extrapolation of the last two points.
    pub limit: Option<f64>,
    pub surface: PairingValue,
    pub relative_mismatch: Option<f64>,
}

/// Pressure side of the Lighthill balance over the (h, ℓ) grid and its
/// extrapolated limit against ⟨p_w n, ((n×∇)·ψ) n⟩.
pub fn run_lighthill_sweep(
    budget: &Budget,
    state: &FlowState,
    plan: &SweepPlan,
    section: &SurfaceTestSection,
) -> Result<LighthillSweep> {
    plan.validate_scales(state.body())?;
    let surface = budget.lighthill_surface_pairing(state, section)?;
    let results: Vec<(f64, Result<PairingValue>)> = plan
        .scales()
        .into_par_iter()
        .map(|(h, ell)| (h, budget.lighthill_pressure_side(state, h, ell, section, plan.cutoff)))
        .collect();
    let mut hs = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut failures = Vec::new();
    for (h, r) in results {
        match r {
            Ok(v) => {
                hs.push(h);
                values.push(v.value);
                errors.push(v.error_estimate);
            }
            Err(e) => failures.push(SweepFailure { parameter: h, message: e.to_string() }),
        }
    }
    let limit = richardson_limit(&hs, &values, 1.0);
    let relative_mismatch = limit.map(|l| (l - surface.value).abs() / surface.value.abs().max(f64::MIN_POSITIVE));
    Ok(LighthillSweep {
        section: section.id.clone(),
        hs,
        pressure_side: values,
        errors,
        failures,
        limit,
        surface,
        relative_mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscosityPoint {
    pub nu: f64,
    pub thickness: f64,
    pub shear: PairingValue,
    pub pressure: PairingValue,
    pub forcing: PairingValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscositySweep {
    pub family: String,
    pub points: Vec<ViscosityPoint>,
    pub failures: Vec<SweepFailure>,
    /// |⟨τ^ν_k, ψ⟩ − ⟨τ^ν_{k+1}, ψ⟩|
    pub shear_cauchy: Vec<f64>,
    pub shear_fit: RateFit,
    pub shear_limit: Option<f64>,
    pub pressure_limit: Option<f64>,
    /// ⟨⟨g^ν, φ⟩⟩ against ν: the body force a surrogate family needs.
    pub forcing_fit: RateFit,
    pub forcing_limit: Option<f64>,
}

impl ViscositySweep {
    /// The forcing pairing decays with ν: fitted exponent more than two
    /// standard errors above [`FLAT_EXPONENT`], or identically zero.
    pub fn forcing_vanishes(&self) -> bool {
        significant_decay(&self.forcing_fit)
    }

    /// Same test for the skin-friction pairing.
    pub fn shear_vanishes(&self) -> bool {
        significant_decay(&self.shear_fit)
    }
}

fn significant_decay(fit: &RateFit) -> bool {
    fit.identically_zero
        || match (fit.exponent, fit.standard_error) {
            (Some(e), Some(se)) => e - 2.0 * se > FLAT_EXPONENT,
            _ => false,
        }
}

/// Limit of a sequence with a fitted power-law approach; a flat sequence
/// (exponent near zero) is its own limit.
fn sequence_limit(x: &[f64], v: &[f64], fit: &RateFit) -> Option<f64> {
    match fit.exponent {
        Some(a) if a > FLAT_EXPONENT => richardson_limit(x, v, a),
        _ if fit.identically_zero => Some(0.0),
        _ => v.last().copied(),
    }
}

/// Wall pairings of a boundary-layer family over the ν grid.
pub fn run_viscosity_sweep(
    budget: &Budget,
    family: &BoundaryLayerFamily,
    body: &Body,
    horizon: f64,
    plan: &SweepPlan,
    tangential: &SurfaceTestSection,
    normal: &SurfaceTestSection,
) -> Result<ViscositySweep> {
    check_grid("nu", &plan.nu_grid)?;
    if tangential.kind() != SectionKind::Tangential || normal.kind() != SectionKind::Normal {
        return Err(Error::InvalidArgument("viscosity sweep needs one tangential and one normal section".into()));
    }
    let phi = extend(tangential, body, plan.cutoff, ExtensionKind::Natural)?;
    let results: Vec<(f64, Result<ViscosityPoint>)> = plan
        .nu_grid
        .par_iter()
        .map(|&nu| {
            let eval = || -> Result<ViscosityPoint> {
                let state = FlowState::new(Arc::new(family.at(nu)), *body, horizon)?;
                Ok(ViscosityPoint {
                    nu,
                    thickness: family.thickness(nu),
                    shear: budget.pair_wall_shear(&state, tangential)?,
                    pressure: budget.pair_wall_pressure(&state, normal)?,
                    forcing: budget.forcing_pairing(&state, &phi)?,
                })
            };
            (nu, eval())
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (nu, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push(SweepFailure { parameter: nu, message: e.to_string() }),
        }
    }
    let nus: Vec<f64> = points.iter().map(|p| p.nu).collect();
    let series = |f: &dyn Fn(&ViscosityPoint) -> &PairingValue| -> (Vec<f64>, Vec<f64>) {
        (points.iter().map(|p| f(p).value).collect(), points.iter().map(|p| f(p).error_estimate).collect())
    };
    let (shear, shear_err) = series(&|p| &p.shear);
    let (pres, pres_err) = series(&|p| &p.pressure);
    let (forcing, forcing_err) = series(&|p| &p.forcing);
    let floor = |v: &[f64]| 1e-13 * v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let shear_fit = RateFit::fit("nu", &nus, &shear, &shear_err, floor(&shear));
    let pres_fit = RateFit::fit("nu", &nus, &pres, &pres_err, floor(&pres));
    let forcing_fit = RateFit::fit("nu", &nus, &forcing, &forcing_err, floor(&forcing));
    Ok(ViscositySweep {
        family: format!("boundary_layer(delta = {} nu^{})", family.coefficient, family.exponent),
        shear_cauchy: shear.windows(2).map(|w| (w[0] - w[1]).abs()).collect(),
        shear_limit: sequence_limit(&nus, &shear, &shear_fit),
        pressure_limit: sequence_limit(&nus, &pres, &pres_fit),
        forcing_limit: sequence_limit(&nus, &forcing, &forcing_fit),
        shear_fit,
        forcing_fit,
        points,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupEstimate {
    /// L²-in-time of the maximum over quadrature nodes.
    pub lower: f64,
    /// `lower` plus a Lipschitz inflation (gradient bound × covering radius).
    pub upper: f64,
    pub gradient_bound: f64,
    pub covering_radius: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormCurve {
    pub quantity: String,
    pub parameters: Vec<f64>,
    pub estimates: Vec<SupEstimate>,
    pub fit: RateFit,
    /// Fitted decay exponent at least [`DECAY_EXPONENT`].
    pub tends_to_zero: bool,
}

/// Largest principal curvature magnitude from the curvature sum and product.
fn max_curvature(sum: f64, gauss: f64) -> f64 {
    let disc = (sum * sum - 4.0 * gauss).max(0.0).sqrt();
    0.5 * (sum.abs() + disc)
}

/// Covering radius of a band rule: tangential node gaps (Gauss–Legendre in
/// the polar cosine leaves the widest gap, ≈ 2.4/order rad, at the poles)
/// combined with the widest radial gap.
fn covering_radius(body: &Body, breaks: &[f64], order: BandOrder) -> f64 {
    let (_, hi) = body.bounding_box();
    let reach = hi.max();
    let tangential = 2.5 * reach / order.surface as f64;
    let mut radial: Vec<f64> = breaks.to_vec();
    radial.extend(crate::quadrature::composite(breaks, order.radial).iter().map(|p| p.0));
    radial.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = radial.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    tangential.hypot(0.5 * gap)
}

/// sqrt(∫₀ᵀ s(t)² dt) for a per-time sup `s`.
fn time_l2<F>(state: &FlowState, time_order: usize, sup: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let horizon = state.horizon();
    if state.field().is_steady() {
        let (s, g) = sup(0.5 * horizon)?;
        return Ok((s * horizon.sqrt(), g));
    }
    let mut acc = 0.0;
    let mut grad: f64 = 0.0;
    for (t, w) in GaussRule::new(time_order).on_interval(0.0, horizon) {
        let (s, g) = sup(t)?;
        acc += w * s * s;
        grad = grad.max(g);
    }
    Ok((acc.sqrt(), grad))
}

fn sup_over<F>(state: &FlowState, breaks: &[f64], order: BandOrder, time_order: usize, f: F) -> Result<SupEstimate>
where
    F: Fn(&ShellNode, f64) -> Result<(f64, f64)> + Sync,
{
    let band = state.body().band_quadrature(breaks, order)?;
    let (lower, gradient_bound) = time_l2(state, time_order, |t| {
        let vals: Vec<(f64, f64)> = band.nodes.par_iter().map(|n| f(n, t)).collect::<Result<_>>()?;
        Ok(vals.iter().fold((0.0f64, 0.0f64), |m, v| (m.0.max(v.0), m.1.max(v.1))))
    })?;
    let covering = covering_radius(state.body(), breaks, order);
    Ok(SupEstimate {
        lower,
        upper: lower + gradient_bound * covering * state.horizon().sqrt(),
        gradient_bound,
        covering_radius: covering,
        nodes: band.nodes.len(),
    })
}

/// ‖n·u‖ in L²(0,T; L^∞(Ω_δ)) for each δ.
pub fn estimate_no_flow_through(
    state: &FlowState,
    deltas: &[f64],
    order: BandOrder,
    time_order: usize,
) -> Result<NormCurve> {
    let field = state.field();
    let mut estimates = Vec::new();
    for &delta in deltas {
        if !(delta > 0.0 && delta < state.body().tubular_radius()) {
            return Err(Error::BandExitsTube { inner: 0.0, outer: delta, radius: state.body().tubular_radius() });
        }
        estimates.push(sup_over(state, &[0.0, delta], order, time_order, |n, t| {
            let u = field.velocity(&n.point, t)?;
            let g = field.velocity_gradient(&n.point, t)?;
            let k = max_curvature(n.curvature_sum, n.gauss);
            let bend = k / (1.0 - k * n.distance).max(f64::MIN_POSITIVE);
            Ok((n.normal.dot(&u).abs(), (g.transpose() * n.normal).norm() + u.norm() * bend))
        })?);
    }
    let values: Vec<f64> = estimates.iter().map(|e| e.lower).collect();
    let zeros = vec![0.0; values.len()];
    let fit = RateFit::fit("delta", deltas, &values, &zeros, 1e-300);
    let tends_to_zero = fit.identically_zero || fit.exponent.is_some_and(|e| e >= DECAY_EXPONENT);
    Ok(NormCurve { quantity: "n.u".into(), parameters: deltas.to_vec(), estimates, fit, tends_to_zero })
}

/// ‖u‖ in L²(0,T; L^∞(Ω_ε)).
pub fn estimate_near_wall_sup(state: &FlowState, eps: f64, order: BandOrder, time_order: usize) -> Result<SupEstimate> {
    if !(eps > 0.0 && eps < state.body().tubular_radius()) {
        return Err(Error::BandExitsTube { inner: 0.0, outer: eps, radius: state.body().tubular_radius() });
    }
    let field = state.field();
    sup_over(state, &[0.0, eps], order, time_order, |n, t| {
        let u = field.velocity(&n.point, t)?;
        let g = field.velocity_gradient(&n.point, t)?;
        Ok((u.norm(), g.norm()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Point {
    pub h: f64,
    pub ell: f64,
    pub norm: f64,
    pub error_estimate: f64,
    /// max |f̄_ℓ − f| over nodes beyond the window and the probe points.
    pub sup_deviation: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Curve {
    pub p: u32,
    pub annulus: (f64, f64),
    pub points: Vec<Lemma2Point>,
    pub fit: RateFit,
    pub monotone_tail: bool,
    /// The sup deviation did not fall below half its first value.
    pub sup_plateau: bool,
}

#[allow(clippy::too_many_arguments)]
fn lemma2_point<F>(
    body: &Body,
    f: &F,
    annulus: (f64, f64),
    (h, ell): (f64, f64),
    p: u32,
    horizon: f64,
    kernel: &MollifierKernel,
    order: BandOrder,
    probes: &[Vec3],
) -> Result<(f64, f64, usize)>
where
    F: Fn(&Vec3) -> Result<f64> + Sync,
{
    let (inner, outer) = annulus;
    let window = WindowProfile::new(h, ell)?;
    let mut breaks = vec![inner, outer, h, h + ell];
    breaks.extend(graded(h, h + ell, SHELL_GRADING, true));
    breaks.retain(|&b| b >= inner && b <= outer);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * outer);
    let band = body.band_quadrature(&breaks, order)?;
    let mollified = |x: &Vec3| -> Result<f64> { Ok(kernel.mollify(body, ell, x, |y| Ok([f(y)?]))?[0]) };
    let vals: Vec<(f64, f64)> = band
        .nodes
        .par_iter()
        .map(|n| {
            let eta = window.theta(n.distance);
            let fx = f(&n.point)?;
            if eta == 0.0 {
                return Ok((fx.abs().powi(p as i32), 0.0));
            }
            let fbar = mollified(&n.point)?;
            let dev = if n.distance >= h + ell { (fbar - fx).abs() } else { 0.0 };
            Ok(((eta * fbar - fx).abs().powi(p as i32), dev))
        })
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    let mut sup: f64 = 0.0;
    for (n, (v, d)) in band.nodes.iter().zip(vals) {
        acc += n.weight * v;
        sup = sup.max(d);
    }
    for x in probes {
        if body.distance(x)? >= ell {
            sup = sup.max((mollified(x)? - f(x)?).abs());
        }
    }
    Ok(((acc * horizon).powf(1.0 / p as f64), sup, band.nodes.len()))
}

/// ‖η f̄_ℓ − f‖ in L^p((0,T) × K) for a steady scalar f on the wall
/// annulus K = {inner < d < outer}, over the given (h, ℓ) scales.
#[allow(clippy::too_many_arguments)]
pub fn lemma2_convergence_curve<F>(
    body: &Body,
    f: F,
    annulus: (f64, f64),
    scales: &[(f64, f64)],
    p: u32,
    horizon: f64,
    kernel: &MollifierKernel,
    order: BandOrder,
    probes: &[Vec3],
) -> Result<Lemma2Curve>
where
    F: Fn(&Vec3) -> Result<f64> + Sync,
{
    if p != 1 && p != 2 {
        return Err(Error::InvalidArgument(format!("p must be 1 or 2 (got {p})")));
    }
    if !(annulus.0 >= 0.0 && annulus.1 > annulus.0 && annulus.1 < body.tubular_radius()) {
        return Err(Error::BandExitsTube { inner: annulus.0, outer: annulus.1, radius: body.tubular_radius() });
    }
    if scales.iter().any(|&(h, ell)| !(ell > 0.0 && ell < h)) {
        return Err(Error::InvalidArgument("Lemma 2 scales need 0 < ell < h".into()));
    }
    let mut points = Vec::new();
    for &scale in scales {
        let (norm, sup, nodes) = lemma2_point(body, &f, annulus, scale, p, horizon, kernel, order, probes)?;
        let (fine, _, _) = lemma2_point(body, &f, annulus, scale, p, horizon, kernel, order.refined(), probes)?;
        points.push(Lemma2Point {
            h: scale.0,
            ell: scale.1,
            norm,
            error_estimate: (fine - norm).abs(),
            sup_deviation: sup,
            nodes,
        });
    }
    let hs: Vec<f64> = points.iter().map(|p| p.h).collect();
    let norms: Vec<f64> = points.iter().map(|p| p.norm).collect();
    let errs: Vec<f64> = points.iter().map(|p| p.error_estimate).collect();
    let sups: Vec<f64> = points.iter().map(|p| p.sup_deviation).collect();
    let sup_plateau = match (sups.first(), sups.last()) {
        (Some(&a), Some(&b)) => a > 0.0 && b >= 0.5 * a,
        _ => false,
    };
    Ok(Lemma2Curve {
        p,
        annulus,
        fit: RateFit::fit("h", &hs, &norms, &errs, 1e-300),
        monotone_tail: monotone_tail(&norms),
        sup_plateau,
        points,
    })
}
