//! Test sections on the wall and their extensions into the flow domain.
//!
//! A tangential section is the tangential projection of an ambient vector
//! field; a normal section is a scalar profile times the unit normal. Both
//! carry a time bump supported inside (0, T). Extensions have the form
//! `φ(x, t) = β(t) w(d) G(x)` with `w(d) = exp(−d/(ε − d))` and `G` the
//! section transported along normals (plus an optional normal drift).

use crate::error::{Error, Result};
use crate::fields::derivatives;
use crate::filtering::{bump, bump_derivative};
use crate::geometry::{Body, Mat3, ShellQuadrature, TubeFrame, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: Vec3,
    pub powers: [u32; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMonomial {
    pub coefficient: f64,
    pub powers: [u32; 3],
}

fn power(x: &Vec3, p: &[u32; 3]) -> f64 {
    x.x.powi(p[0] as i32) * x.y.powi(p[1] as i32) * x.z.powi(p[2] as i32)
}

/// Ambient vector fields used to build tangential sections.
#[derive(Debug, Clone, PartialEq)]
pub enum AmbientField {
    Constant(Vec3),
    /// ω × x
    Rotation(Vec3),
    Polynomial(Vec<Monomial>),
}

impl AmbientField {
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        match self {
            AmbientField::Constant(c) => *c,
            AmbientField::Rotation(w) => w.cross(x),
            AmbientField::Polynomial(terms) => terms.iter().map(|m| m.coefficient * power(x, &m.powers)).sum(),
        }
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        match self {
            AmbientField::Constant(c) => vec![Monomial { coefficient: *c, powers: [0, 0, 0] }],
            AmbientField::Rotation(w) => vec![
                Monomial { coefficient: Vec3::new(0.0, w.z, -w.y), powers: [1, 0, 0] },
                Monomial { coefficient: Vec3::new(-w.z, 0.0, w.x), powers: [0, 1, 0] },
                Monomial { coefficient: Vec3::new(w.y, -w.x, 0.0), powers: [0, 0, 1] },
            ],
            AmbientField::Polynomial(terms) => terms.clone(),
        }
    }

    /// a·f + b·g as a polynomial field.
    pub fn combine(a: f64, f: &AmbientField, b: f64, g: &AmbientField) -> AmbientField {
        let mut terms: Vec<Monomial> =
            f.monomials().into_iter().map(|m| Monomial { coefficient: m.coefficient * a, powers: m.powers }).collect();
        terms.extend(g.monomials().into_iter().map(|m| Monomial { coefficient: m.coefficient * b, powers: m.powers }));
        AmbientField::Polynomial(terms)
    }
}

/// Scalar profiles σ(s) of normal sections.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalProfile {
    Constant(f64),
    /// σ = v·n
    AmbientDot(Vec3),
    Polynomial(Vec<ScalarMonomial>),
    /// σ = (n×∇)·ψ for the tangential section built from the field.
    Companion(AmbientField),
}

/// β(t): the exponential bump rescaled to [start, end] with peak value 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeProfile {
    pub start: f64,
    pub end: f64,
}

impl TimeProfile {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(end > start) {
            return Err(Error::InvalidArgument(format!("time support [{start}, {end}] is empty")));
        }
        Ok(TimeProfile { start, end })
    }

    /// Support [0.2T, 0.8T].
    pub fn standard(horizon: f64) -> Self {
        TimeProfile { start: 0.2 * horizon, end: 0.8 * horizon }
    }

    fn scale(&self) -> f64 {
        1.0 / bump(0.5)
    }

    pub fn value(&self, t: f64) -> f64 {
        bump((t - self.start) / (self.end - self.start)) * self.scale()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let len = self.end - self.start;
        bump_derivative((t - self.start) / len) * self.scale() / len
    }

    /// Gauss nodes over the support.
    pub fn rule(&self, order: usize) -> Vec<(f64, f64)> {
        crate::quadrature::GaussRule::new(order).on_interval(self.start, self.end)
    }

    /// ∫β dt from the smoothstep normalisation.
    pub fn exact_integral(&self) -> f64 {
        (self.end - self.start) / (bump(0.5) * crate::filtering::Smoothstep::get().normalization())
    }

    /// ∫β dt with an `order`-point rule.
    pub fn integral(&self, order: usize) -> f64 {
        self.rule(order).iter().map(|&(t, w)| w * self.value(t)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Tangential,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionProfile {
    Tangential(AmbientField),
    Normal(NormalProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTestSection {
    pub id: String,
    pub profile: SectionProfile,
    pub time: TimeProfile,
}

/// Relative step for tangential differences along the wall.
const CHART_STEP: f64 = 1e-3;

impl SurfaceTestSection {
    pub fn tangential(id: impl Into<String>, field: AmbientField, time: TimeProfile) -> Self {
        SurfaceTestSection { id: id.into(), profile: SectionProfile::Tangential(field), time }
    }

    pub fn normal(id: impl Into<String>, profile: NormalProfile, time: TimeProfile) -> Self {
        SurfaceTestSection { id: id.into(), profile: SectionProfile::Normal(profile), time }
    }

    pub fn kind(&self) -> SectionKind {
        match self.profile {
            SectionProfile::Tangential(_) => SectionKind::Tangential,
            SectionProfile::Normal(_) => SectionKind::Normal,
        }
    }

    /// Spatial part ψ_s(s) as an ambient vector, given the wall normal at s.
    pub fn spatial_at(&self, body: &Body, s: &Vec3, n: &Vec3) -> Result<Vec3> {
        match &self.profile {
            SectionProfile::Tangential(a) => {
                let v = a.eval(s);
                Ok(v - n * n.dot(&v))
            }
            SectionProfile::Normal(p) => Ok(n * self.sigma_profile(p, body, s, n)?),
        }
    }

    pub fn spatial(&self, body: &Body, s: &Vec3) -> Result<Vec3> {
        let n = body.normal(s)?;
        self.spatial_at(body, s, &n)
    }

    pub fn value(&self, body: &Body, s: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.spatial(body, s)? * self.time.value(t))
    }

    /// Normal scalar σ(s) (zero for tangential sections).
    pub fn sigma(&self, body: &Body, s: &Vec3, n: &Vec3) -> Result<f64> {
        match &self.profile {
            SectionProfile::Tangential(_) => Ok(0.0),
            SectionProfile::Normal(p) => self.sigma_profile(p, body, s, n),
        }
    }

    fn sigma_profile(&self, p: &NormalProfile, body: &Body, s: &Vec3, n: &Vec3) -> Result<f64> {
        Ok(match p {
            NormalProfile::Constant(c) => *c,
            NormalProfile::AmbientDot(v) => v.dot(n),
            NormalProfile::Polynomial(terms) => terms.iter().map(|m| m.coefficient * power(s, &m.powers)).sum(),
            NormalProfile::Companion(a) => surface_curl(body, s, n, |y, m| {
                let v = a.eval(y);
                Ok(v - m * m.dot(&v))
            })?,
        })
    }

    /// max over the wall nodes of |ψ| and its first tangential derivatives,
    /// times the largest of sup β and sup |β'|.
    pub fn seminorm(&self, body: &Body, surface_order: usize) -> Result<f64> {
        let q = body.surface_quadrature(surface_order)?;
        let mut sup: f64 = 0.0;
        for node in &q.nodes {
            let (t1, t2) = tangent_frame(&node.normal);
            let mut v = self.spatial_at(body, &node.point, &node.normal)?.norm();
            for t in [t1, t2] {
                v += chart_derivative(body, &node.point, &t, |y, m| self.spatial_at(body, y, m))?.norm();
            }
            sup = sup.max(v);
        }
        let rule = self.time.rule(64);
        let tsup =
            rule.iter().map(|&(t, _)| self.time.value(t).abs().max(self.time.derivative(t).abs())).fold(0.0, f64::max);
        Ok(sup * tsup.max(1.0))
    }
}

/// Orthonormal tangents (t1, t2) with t1 × t2 = n.
pub fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = (helper - n * n.dot(&helper)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Derivative of a wall quantity along the surface curve γ(h) = π(s + h t).
fn chart_derivative<F>(body: &Body, s: &Vec3, t: &Vec3, f: F) -> Result<Vec3>
where
    F: Fn(&Vec3, &Vec3) -> Result<Vec3>,
{
    let h = CHART_STEP * body.tubular_radius();
    let g = |y: &Vec3| -> Result<Vec3> {
        let fr = body.frame(y)?;
        f(&fr.foot, &fr.normal)
    };
    derivatives::directional(g, s, t, h)
}

/// (n×∇)·ψ = t₂·∂_{t₁}ψ − t₁·∂_{t₂}ψ in a local chart.
fn surface_curl<F>(body: &Body, s: &Vec3, n: &Vec3, f: F) -> Result<f64>
where
    F: Fn(&Vec3, &Vec3) -> Result<Vec3>,
{
    let (t1, t2) = tangent_frame(n);
    let d1 = chart_derivative(body, s, &t1, &f)?;
    let d2 = chart_derivative(body, s, &t2, &f)?;
    Ok(t2.dot(&d1) - t1.dot(&d2))
}

/// The normal section σn with σ = (n×∇)·ψ.
pub fn lighthill_companion_section(psi: &SurfaceTestSection) -> Result<SurfaceTestSection> {
    match &psi.profile {
        SectionProfile::Tangential(a) => Ok(SurfaceTestSection::normal(
            format!("{}:companion", psi.id),
            NormalProfile::Companion(a.clone()),
            psi.time,
        )),
        SectionProfile::Normal(_) => Err(Error::InvalidArgument("companion section needs a tangential section".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtensionKind {
    /// Transport along normals; tangential stays tangential.
    Natural,
    /// Adds c·d·(ψ·m) n(π(x)) inside the weight.
    NormalDrift { coefficient: f64, direction: Vec3 },
}

/// Cutoff weight w(d) = exp(−d/(ε − d)) and its first two derivatives.
pub fn extension_weight(d: f64, eps: f64) -> [f64; 3] {
    let gap = eps - d;
    if gap <= 1e-2 * eps {
        return [0.0; 3];
    }
    let w = (-d / gap).exp();
    let q1 = -eps / (gap * gap);
    let q2 = -2.0 * eps / (gap * gap * gap);
    [w, w * q1, w * (q1 * q1 + q2)]
}

/// Spatial part of an extension and its derivatives at a point.
#[derive(Debug, Clone, Copy)]
pub struct SpatialDerivatives {
    pub value: Vec3,
    /// `jacobian[(i, j)] = ∂Φ_i/∂x_j`
    pub jacobian: Mat3,
    pub divergence: f64,
    pub laplacian: Vec3,
    pub curl: Vec3,
}

impl SpatialDerivatives {
    fn zero() -> Self {
        SpatialDerivatives {
            value: Vec3::zeros(),
            jacobian: Mat3::zeros(),
            divergence: 0.0,
            laplacian: Vec3::zeros(),
            curl: Vec3::zeros(),
        }
    }
}

/// φ and its derivatives at (x, t).
#[derive(Debug, Clone, Copy)]
pub struct ExtensionDerivatives {
    pub value: Vec3,
    pub time_derivative: Vec3,
    pub jacobian: Mat3,
    pub divergence: f64,
    pub laplacian: Vec3,
    pub curl: Vec3,
}

#[derive(Debug, Clone)]
pub struct ExtendedTestField {
    section: SurfaceTestSection,
    body: Body,
    cutoff: f64,
    kind: ExtensionKind,
}

/// First-derivative step relative to the cutoff.
pub const FD_FIRST: f64 = 1e-4;
/// Second-derivative step relative to the cutoff.
pub const FD_SECOND: f64 = 1e-2;

fn build(section: &SurfaceTestSection, body: &Body, cutoff: f64, kind: ExtensionKind) -> Result<ExtendedTestField> {
    if !(cutoff > 0.0 && cutoff < body.tubular_radius()) {
        return Err(Error::InvalidArgument(format!(
            "extension cutoff {cutoff} must lie in (0, {})",
            body.tubular_radius()
        )));
    }
    Ok(ExtendedTestField { section: section.clone(), body: *body, cutoff, kind })
}

pub fn extend_tangential(section: &SurfaceTestSection, body: &Body, cutoff: f64) -> Result<ExtendedTestField> {
    if section.kind() != SectionKind::Tangential {
        return Err(Error::InvalidArgument(format!("section `{}` is not tangential", section.id)));
    }
    build(section, body, cutoff, ExtensionKind::Natural)
}

pub fn extend_normal(section: &SurfaceTestSection, body: &Body, cutoff: f64) -> Result<ExtendedTestField> {
    if section.kind() != SectionKind::Normal {
        return Err(Error::InvalidArgument(format!("section `{}` is not normal", section.id)));
    }
    build(section, body, cutoff, ExtensionKind::Natural)
}

/// Tangential extension with a normal drift proportional to the distance.
pub fn extend_with_drift(
    section: &SurfaceTestSection,
    body: &Body,
    cutoff: f64,
    coefficient: f64,
    direction: Vec3,
) -> Result<ExtendedTestField> {
    if section.kind() != SectionKind::Tangential {
        return Err(Error::InvalidArgument(format!("section `{}` is not tangential", section.id)));
    }
    build(section, body, cutoff, ExtensionKind::NormalDrift { coefficient, direction })
}

/// Dispatch on the section kind with the given extension.
pub fn extend(
    section: &SurfaceTestSection,
    body: &Body,
    cutoff: f64,
    kind: ExtensionKind,
) -> Result<ExtendedTestField> {
    match (section.kind(), kind) {
        (SectionKind::Normal, ExtensionKind::Natural) => extend_normal(section, body, cutoff),
        (SectionKind::Tangential, ExtensionKind::Natural) => extend_tangential(section, body, cutoff),
        (SectionKind::Tangential, ExtensionKind::NormalDrift { coefficient, direction }) => {
            extend_with_drift(section, body, cutoff, coefficient, direction)
        }
        (SectionKind::Normal, ExtensionKind::NormalDrift { .. }) => {
            Err(Error::InvalidArgument("drift extension applies to tangential sections".into()))
        }
    }
}

impl ExtendedTestField {
    pub fn section(&self) -> &SurfaceTestSection {
        &self.section
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    /// G: the section carried along normals (before the cutoff weight).
    fn transported(&self, frame: &TubeFrame) -> Result<Vec3> {
        let psi = self.section.spatial_at(&self.body, &frame.foot, &frame.normal)?;
        Ok(match self.kind {
            ExtensionKind::Natural => psi,
            ExtensionKind::NormalDrift { coefficient, direction } => {
                psi + frame.normal * (coefficient * frame.distance * psi.dot(&direction))
            }
        })
    }

    fn transported_at(&self, x: &Vec3) -> Result<Vec3> {
        self.transported(&self.body.frame(x)?)
    }

    /// Spatial part Φ(x).
    pub fn spatial_value(&self, x: &Vec3) -> Result<Vec3> {
        let frame = self.body.frame(x)?;
        if frame.distance >= self.cutoff {
            return Ok(Vec3::zeros());
        }
        Ok(self.transported(&frame)? * extension_weight(frame.distance, self.cutoff)[0])
    }

    pub fn value(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.spatial_value(x)? * self.section.time.value(t))
    }

    pub fn spatial_derivatives(&self, x: &Vec3) -> Result<SpatialDerivatives> {
        let frame = self.body.frame(x)?;
        self.spatial_derivatives_with(x, &frame)
    }

    /// As [`Self::spatial_derivatives`] with a precomputed frame of `x`.
    pub fn spatial_derivatives_with(&self, x: &Vec3, frame: &TubeFrame) -> Result<SpatialDerivatives> {
        let d = frame.distance;
        let [w, w1, w2] = extension_weight(d, self.cutoff);
        if w == 0.0 && w1 == 0.0 && w2 == 0.0 {
            return Ok(SpatialDerivatives::zero());
        }
        let g = self.transported(frame)?;
        let n = frame.normal;
        let h1 = FD_FIRST * self.cutoff;
        let h2 = FD_SECOND * self.cutoff;
        let jg = derivatives::vector_gradient(|y| self.transported_at(y), x, h1)?;
        let lap_g = {
            let mut lap = Vec3::zeros();
            for j in 0..3 {
                let mut e = Vec3::zeros();
                e[j] = 1.0;
                lap += derivatives::second_directional(|y| self.transported_at(y), x, &e, g, h2)?;
            }
            lap
        };
        let curl_g = crate::fields::vorticity(&jg);
        Ok(SpatialDerivatives {
            value: g * w,
            jacobian: g * n.transpose() * w1 + jg * w,
            divergence: w1 * n.dot(&g) + w * jg.trace(),
            laplacian: g * (w2 + w1 * frame.laplacian_distance()) + jg * n * (2.0 * w1) + lap_g * w,
            curl: n.cross(&g) * w1 + curl_g * w,
        })
    }

    pub fn derivatives(&self, x: &Vec3, t: f64) -> Result<ExtensionDerivatives> {
        let s = self.spatial_derivatives(x)?;
        Ok(combine_time(&s, self.section.time.value(t), self.section.time.derivative(t)))
    }

    /// Largest of |Φ|, |∇Φ| and |ΔΦ| over band nodes.
    pub fn derivative_sup(&self, band: &ShellQuadrature) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for node in &band.nodes {
            let s = self.spatial_derivatives_with(&node.point, &node.frame())?;
            sup = sup.max(s.value.norm()).max(s.jacobian.norm()).max(s.laplacian.norm());
        }
        Ok(sup)
    }
}

pub fn combine_time(s: &SpatialDerivatives, beta: f64, beta_prime: f64) -> ExtensionDerivatives {
    ExtensionDerivatives {
        value: s.value * beta,
        time_derivative: s.value * beta_prime,
        jacobian: s.jacobian * beta,
        divergence: s.divergence * beta,
        laplacian: s.laplacian * beta,
        curl: s.curl * beta,
    }
}

/// Scalar test function `w_R(d)·(c₀ + c·x)` for the weak pressure identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarTest {
    pub cutoff: f64,
    pub constant: f64,
    pub gradient: Vec3,
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarDerivatives {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Mat3,
    pub laplacian: f64,
}

impl ScalarTest {
    pub fn derivatives(&self, body: &Body, x: &Vec3, frame: &TubeFrame) -> Result<ScalarDerivatives> {
        let [w, w1, w2] = extension_weight(frame.distance, self.cutoff);
        let q = self.constant + self.gradient.dot(x);
        let n = frame.normal;
        let c = self.gradient;
        // Hessian of the distance, by differences of the normal field.
        let hd = derivatives::vector_gradient(|y| Ok(body.frame(y)?.normal), x, FD_FIRST * self.cutoff)?;
        let hd = (hd + hd.transpose()) * 0.5;
        let nn = n * n.transpose();
        let nc = n * c.transpose();
        Ok(ScalarDerivatives {
            value: w * q,
            gradient: n * (w1 * q) + c * w,
            hessian: nn * (w2 * q) + hd * (w1 * q) + (nc + nc.transpose()) * w1,
            laplacian: w2 * q + w1 * q * frame.laplacian_distance() + 2.0 * w1 * n.dot(&c),
        })
    }

    /// ∂φ/∂n on the wall (n into the flow).
    pub fn wall_normal_derivative(&self, s: &Vec3, n: &Vec3) -> f64 {
        let [w, w1, _] = extension_weight(0.0, self.cutoff);
        w1 * (self.constant + self.gradient.dot(s)) + w * self.gradient.dot(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body() -> Body {
        Body::sphere(1.0).unwrap()
    }

    #[test]
    fn weight_derivatives() {
        let eps = 0.4;
        for d in [0.0, 0.05, 0.2, 0.35] {
            let h = 1e-6;
            let [_, w1, w2] = extension_weight(d, eps);
            let fd1 = (extension_weight(d + h, eps)[0] - extension_weight(d - h, eps)[0]) / (2.0 * h);
            let fd2 = (extension_weight(d + h, eps)[1] - extension_weight(d - h, eps)[1]) / (2.0 * h);
            assert!((fd1 - w1).abs() < 1e-6 && (fd2 - w2).abs() < 1e-4 * (1.0 + w2.abs()));
        }
        assert_eq!(extension_weight(0.0, eps)[0], 1.0);
        assert_eq!(extension_weight(0.5, eps), [0.0; 3]);
    }

    #[test]
    fn time_profile_vanishes_outside_support() {
        let tp = TimeProfile::standard(1.0);
        assert_eq!(tp.value(0.1), 0.0);
        assert_eq!(tp.derivative(0.9), 0.0);
        assert!((tp.value(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn divergence_matches_sphere_chain_rule() {
        let e = Vec3::x();
        let psi = SurfaceTestSection::tangential("ex", AmbientField::Constant(e), TimeProfile::standard(1.0));
        let phi = extend_tangential(&psi, &body(), 0.4).unwrap();
        for x in [Vec3::new(1.1, 0.2, 0.1), Vec3::new(0.3, -1.0, 0.5)] {
            let r = x.norm();
            let xh = x / r;
            let w = extension_weight(r - 1.0, 0.4)[0];
            let expected = -2.0 * e.dot(&xh) / r * w;
            let got = phi.spatial_derivatives(&x).unwrap().divergence;
            assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        }
    }

    #[test]
    fn companion_of_rotation_and_cross_sections() {
        let b = body();
        let tp = TimeProfile::standard(1.0);
        let w = Vec3::new(0.3, -0.5, 0.8);
        let rot = SurfaceTestSection::tangential("rot", AmbientField::Rotation(w), tp);
        let comp = lighthill_companion_section(&rot).unwrap();
        let s = Vec3::new(0.48, 0.6, 0.64);
        let n = b.normal(&s).unwrap();
        assert!((comp.sigma(&b, &s, &n).unwrap() - 2.0 * w.dot(&n)).abs() < 1e-9);
        let proj = SurfaceTestSection::tangential("ex", AmbientField::Constant(Vec3::x()), tp);
        let comp = lighthill_companion_section(&proj).unwrap();
        assert!(comp.sigma(&b, &s, &n).unwrap().abs() < 1e-9);
    }

    #[test]
    fn scalar_test_laplacian_is_hessian_trace() {
        let b = body();
        let st = ScalarTest { cutoff: 0.4, constant: 0.7, gradient: Vec3::new(0.2, -0.1, 0.5) };
        let x = Vec3::new(0.9, 0.5, 0.2);
        let f = b.frame(&x).unwrap();
        let d = st.derivatives(&b, &x, &f).unwrap();
        assert!((d.hessian.trace() - d.laplacian).abs() < 1e-8);
        let val = |y: &Vec3| -> Result<f64> {
            let fr = b.frame(y)?;
            Ok(st.derivatives(&b, y, &fr)?.value)
        };
        let g = derivatives::scalar_gradient(val, &x, 1e-4).unwrap();
        assert!((g - d.gradient).norm() < 1e-9);
    }
}
