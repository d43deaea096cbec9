//! Run configuration: one JSON document, parsed and validated before any
//! computation starts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::budgets::{Budget, DivergenceRoute, Orders, Tolerance};
use crate::error::{Error, Result};
use crate::fields::{
    BoundaryLayerFamily, FlowField, FlowState, Manufactured, MismatchedPressure, PotentialSphere, SampledField,
    StokesSphere,
};
use crate::filtering::MollifierKernel;
use crate::geometry::{Body, Vec3};
use crate::sections::{
    AmbientField, ExtensionKind, Monomial, NormalProfile, ScalarMonomial, ScalarTest, SurfaceTestSection, TimeProfile,
};
use crate::sweeps::{dyadic, SweepPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Sphere {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tubular_radius: Option<f64>,
    },
    Ellipsoid {
        semi_axes: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tubular_radius: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    FreeStream {
        velocity: [f64; 3],
        #[serde(default)]
        pressure: f64,
    },
    Quiescent {
        #[serde(default)]
        pressure: f64,
    },
    PotentialSphere {
        free_stream: [f64; 3],
        #[serde(default)]
        p_inf: f64,
    },
    StokesSphere {
        free_stream: [f64; 3],
        viscosity: f64,
        #[serde(default)]
        p_inf: f64,
    },
    /// δ(ν) = coefficient · ν^exponent; `viscosity` picks the member used by
    /// single-field commands.
    BoundaryLayer {
        free_stream: [f64; 3],
        exponent: f64,
        coefficient: f64,
        viscosity: f64,
        #[serde(default)]
        p_inf: f64,
    },
    MismatchedPressure {
        base: Box<FieldSpec>,
        offset_gradient: [f64; 3],
    },
    Snapshot {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub coefficient: [f64; 3],
    pub powers: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarMonomialSpec {
    pub coefficient: f64,
    pub powers: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AmbientSpec {
    Constant([f64; 3]),
    Rotation([f64; 3]),
    Polynomial(Vec<MonomialSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant(f64),
    AmbientDot([f64; 3]),
    Polynomial(Vec<ScalarMonomialSpec>),
    Companion(AmbientSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SectionSpec {
    Tangential {
        id: String,
        field: AmbientSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time: Option<TimeSpec>,
    },
    Normal {
        id: String,
        profile: ProfileSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time: Option<TimeSpec>,
    },
}

impl SectionSpec {
    pub fn id(&self) -> &str {
        match self {
            SectionSpec::Tangential { id, .. } | SectionSpec::Normal { id, .. } => id,
        }
    }
}

fn default_kernel_radial() -> usize {
    8
}
fn default_kernel_angular() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default = "default_kernel_radial")]
    pub kernel_radial_order: usize,
    #[serde(default = "default_kernel_angular")]
    pub kernel_angular_order: usize,
    pub h: f64,
    pub ell: f64,
    #[serde(default = "default_route")]
    pub divergence_route: DivergenceRoute,
}

fn default_route() -> DivergenceRoute {
    DivergenceRoute::FiniteDifference
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub coefficient: f64,
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    pub cutoff: f64,
    /// Optional non-natural extension exercised alongside the natural one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarTestSpec {
    pub cutoff: f64,
    pub constant: f64,
    pub gradient: [f64; 3],
    /// Evaluation time; defaults to the middle of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

fn default_surface() -> usize {
    16
}
fn default_radial() -> usize {
    10
}
fn default_time() -> usize {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_surface")]
    pub surface: usize,
    /// Points per radial panel.
    #[serde(default = "default_radial")]
    pub radial: usize,
    #[serde(default = "default_time")]
    pub time: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { surface: default_surface(), radial: default_radial(), time: default_time() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Scale,
    Lighthill,
    Viscosity,
    NoFlowThrough,
    NearWallSup,
    Lemma2,
}

/// Closed or half-open interval for an expected exponent or value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_exponent: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_relative_gap: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_exponent: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear_exponent: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lighthill_mismatch: Option<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma2Spec {
    /// Distance range of the annulus K.
    pub annulus: [f64; 2],
    #[serde(default = "default_p")]
    pub p: u32,
    /// Velocity component (0, 1, 2) or 3 for pressure.
    pub component: usize,
}

fn default_p() -> u32 {
    2
}
fn default_ell_ratio() -> f64 {
    0.5
}
fn default_fit_window() -> usize {
    3
}
fn default_nu_grid() -> Vec<f64> {
    dyadic(4, 14)
}
fn default_h_grid() -> Vec<f64> {
    dyadic(2, 8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub runs: Vec<SweepKind>,
    /// Absolute viscosities.
    #[serde(default = "default_nu_grid")]
    pub nu_grid: Vec<f64>,
    /// Window offsets as fractions of the extension cutoff.
    #[serde(default = "default_h_grid")]
    pub h_grid: Vec<f64>,
    #[serde(default = "default_ell_ratio")]
    pub ell_ratio: f64,
    #[serde(default = "default_fit_window")]
    pub fit_window: usize,
    /// Shell thicknesses for the no-flow-through curve.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma2: Option<Lemma2Spec>,
    #[serde(default)]
    pub expect: Expectations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default = "default_multiplier")]
    pub error_multiplier: f64,
    #[serde(default = "default_rel_floor")]
    pub rel_floor: f64,
    #[serde(default = "default_abs_floor")]
    pub abs_floor: f64,
}

fn default_multiplier() -> f64 {
    Tolerance::default().error_multiplier
}
fn default_rel_floor() -> f64 {
    Tolerance::default().rel_floor
}
fn default_abs_floor() -> f64 {
    Tolerance::default().abs_floor
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let t = Tolerance::default();
        ToleranceSpec { error_multiplier: t.error_multiplier, rel_floor: t.rel_floor, abs_floor: t.abs_floor }
    }
}

fn yes() -> bool {
    true
}

/// Which identity checks `verify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default = "yes")]
    pub tangential: bool,
    #[serde(default = "yes")]
    pub normal: bool,
    #[serde(default = "yes")]
    pub coarse_grained: bool,
    #[serde(default = "yes")]
    pub lighthill: bool,
    #[serde(default = "yes")]
    pub neumann: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec { tangential: true, normal: true, coarse_grained: true, lighthill: true, neumann: true }
    }
}

fn default_horizon() -> f64 {
    1.0
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub body: BodySpec,
    pub field: FieldSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub filter: FilterSpec,
    pub extension: ExtensionSpec,
    pub sections: Vec<SectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_test: Option<ScalarTestSpec>,
    /// Direction for drag pairings; defaults to the free stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag_direction: Option<[f64; 3]>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub suite: SuiteSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Seed for node-jitter tests; no computation here is random.
    #[serde(default)]
    pub seed: u64,
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive (got {v})")))
    }
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite")))
    }
}

impl AmbientSpec {
    pub fn build(&self) -> AmbientField {
        match self {
            AmbientSpec::Constant(c) => AmbientField::Constant(vec3(*c)),
            AmbientSpec::Rotation(w) => AmbientField::Rotation(vec3(*w)),
            AmbientSpec::Polynomial(terms) => AmbientField::Polynomial(
                terms.iter().map(|m| Monomial { coefficient: vec3(m.coefficient), powers: m.powers }).collect(),
            ),
        }
    }
}

impl ProfileSpec {
    pub fn build(&self) -> NormalProfile {
        match self {
            ProfileSpec::Constant(c) => NormalProfile::Constant(*c),
            ProfileSpec::AmbientDot(v) => NormalProfile::AmbientDot(vec3(*v)),
            ProfileSpec::Polynomial(terms) => NormalProfile::Polynomial(
                terms.iter().map(|m| ScalarMonomial { coefficient: m.coefficient, powers: m.powers }).collect(),
            ),
            ProfileSpec::Companion(a) => NormalProfile::Companion(a.build()),
        }
    }
}

impl FieldSpec {
    fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::FreeStream { velocity, pressure } => {
                finite("velocity", velocity)?;
                finite("pressure", &[*pressure])
            }
            FieldSpec::Quiescent { pressure } => finite("pressure", &[*pressure]),
            FieldSpec::PotentialSphere { free_stream, p_inf } => {
                finite("free_stream", free_stream)?;
                finite("p_inf", &[*p_inf])
            }
            FieldSpec::StokesSphere { free_stream, viscosity, p_inf } => {
                finite("free_stream", free_stream)?;
                finite("p_inf", &[*p_inf])?;
                positive("viscosity", *viscosity)
            }
            FieldSpec::BoundaryLayer { free_stream, exponent, coefficient, viscosity, p_inf } => {
                finite("free_stream", free_stream)?;
                finite("p_inf", &[*p_inf, *exponent])?;
                positive("coefficient", *coefficient)?;
                positive("viscosity", *viscosity)
            }
            FieldSpec::MismatchedPressure { base, offset_gradient } => {
                finite("offset_gradient", offset_gradient)?;
                base.validate()
            }
            FieldSpec::Snapshot { path } => {
                if path.as_os_str().is_empty() {
                    Err(Error::Config("snapshot path is empty".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn sphere_radius(body: &Body, kind: &str) -> Result<f64> {
        match body.shape() {
            crate::geometry::Shape::Sphere { radius } => Ok(radius),
            _ => Err(Error::Config(format!("field `{kind}` needs a spherical body"))),
        }
    }

    /// Instantiate the field; snapshot paths are resolved against `base_dir`.
    pub fn build(&self, body: &Body, base_dir: &Path) -> Result<Arc<dyn FlowField>> {
        Ok(match self {
            FieldSpec::FreeStream { velocity, pressure } => {
                Arc::new(Manufactured::free_stream(vec3(*velocity), *pressure))
            }
            FieldSpec::Quiescent { pressure } => Arc::new(Manufactured::quiescent(*pressure)),
            FieldSpec::PotentialSphere { free_stream, p_inf } => Arc::new(PotentialSphere::new(
                vec3(*free_stream),
                Self::sphere_radius(body, "potential_sphere")?,
                *p_inf,
            )),
            FieldSpec::StokesSphere { free_stream, viscosity, p_inf } => Arc::new(StokesSphere::new(
                vec3(*free_stream),
                Self::sphere_radius(body, "stokes_sphere")?,
                *viscosity,
                *p_inf,
            )),
            FieldSpec::BoundaryLayer { viscosity, .. } => Arc::new(self.family(body)?.at(*viscosity)),
            FieldSpec::MismatchedPressure { base, offset_gradient } => Arc::new(MismatchedPressure {
                base: base.build(body, base_dir)?,
                offset_gradient: vec3(*offset_gradient),
            }),
            FieldSpec::Snapshot { path } => {
                let p = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                Arc::new(SampledField::read(&p)?)
            }
        })
    }

    pub fn family(&self, body: &Body) -> Result<BoundaryLayerFamily> {
        match self {
            FieldSpec::BoundaryLayer { free_stream, exponent, coefficient, p_inf, .. } => Ok(BoundaryLayerFamily {
                free_stream: vec3(*free_stream),
                radius: Self::sphere_radius(body, "boundary_layer")?,
                exponent: *exponent,
                coefficient: *coefficient,
                p_inf: *p_inf,
            }),
            _ => Err(Error::Config("viscosity sweeps need a `boundary_layer` field".into())),
        }
    }

    /// Free-stream direction of catalog fields.
    pub fn free_stream(&self) -> Option<Vec3> {
        match self {
            FieldSpec::FreeStream { velocity: v, .. }
            | FieldSpec::PotentialSphere { free_stream: v, .. }
            | FieldSpec::StokesSphere { free_stream: v, .. }
            | FieldSpec::BoundaryLayer { free_stream: v, .. } => Some(vec3(*v)),
            FieldSpec::MismatchedPressure { base, .. } => base.free_stream(),
            _ => None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn body(&self) -> Result<Body> {
        let (body, tube) = match &self.body {
            BodySpec::Sphere { radius, tubular_radius } => {
                positive("body radius", *radius)?;
                (Body::sphere(*radius)?, *tubular_radius)
            }
            BodySpec::Ellipsoid { semi_axes, tubular_radius } => {
                for a in semi_axes {
                    positive("semi-axis", *a)?;
                }
                let body = Body::ellipsoid(*semi_axes)?;
                if let Some(t) = tubular_radius {
                    // Smallest radius of curvature of the ellipsoid.
                    let lo = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = semi_axes.iter().cloned().fold(0.0, f64::max);
                    let rmin = lo * lo / hi;
                    if *t >= rmin {
                        return Err(Error::Config(format!(
                            "tubular radius {t} must be below the smallest radius of curvature {rmin}"
                        )));
                    }
                }
                (body, *tubular_radius)
            }
        };
        match tube {
            Some(t) => {
                positive("tubular radius", t)?;
                body.with_tubular_radius(t)
            }
            None => Ok(body),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let body = self.body()?;
        self.field.validate()?;
        positive("horizon", self.horizon)?;
        let f = &self.filter;
        positive("filter.h", f.h)?;
        positive("filter.ell", f.ell)?;
        if f.ell >= f.h {
            return Err(Error::Config(format!("filter.ell = {} must be below filter.h = {}", f.ell, f.h)));
        }
        if f.kernel_radial_order == 0 || f.kernel_angular_order == 0 {
            return Err(Error::Config("kernel orders must be at least 1".into()));
        }
        let eps = self.extension.cutoff;
        positive("extension.cutoff", eps)?;
        if eps >= body.tubular_radius() {
            return Err(Error::Config(format!(
                "extension.cutoff = {eps} must be below the tubular radius {}",
                body.tubular_radius()
            )));
        }
        if f.h + f.ell >= eps {
            return Err(Error::Config(format!(
                "filter window h + ell = {} must lie inside the cutoff {eps}",
                f.h + f.ell
            )));
        }
        if let Some(d) = &self.extension.drift {
            finite("drift", &[d.coefficient])?;
            finite("drift.direction", &d.direction)?;
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.sections {
            if !ids.insert(s.id().to_string()) {
                return Err(Error::Config(format!("duplicate section id `{}`", s.id())));
            }
            self.section_time(s)?;
        }
        if let Some(st) = &self.scalar_test {
            positive("scalar_test.cutoff", st.cutoff)?;
            if st.cutoff >= body.tubular_radius() {
                return Err(Error::Config("scalar_test.cutoff must be below the tubular radius".into()));
            }
            if let Some(t) = st.time {
                if !(0.0..=self.horizon).contains(&t) {
                    return Err(Error::Config(format!("scalar_test.time {t} is outside [0, horizon]")));
                }
            }
        }
        let q = &self.quadrature;
        if q.surface < 2 || q.radial < 2 || q.time < 2 {
            return Err(Error::Config("quadrature orders must be at least 2".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.runs.is_empty() {
                return Err(Error::Config("sweep.runs is empty".into()));
            }
            let plan = self.plan()?.expect("sweep present");
            if sw.runs.contains(&SweepKind::Viscosity) {
                plan.validate(&body)?;
                self.field.family(&body)?;
            } else {
                plan.validate_scales(&body)?;
            }
            if sw.runs.contains(&SweepKind::NoFlowThrough) {
                if sw.deltas.is_empty() {
                    return Err(Error::Config("no-flow-through sweep needs a nonempty `deltas` list".into()));
                }
                if sw.deltas.iter().any(|d| !(*d > 0.0 && *d < body.tubular_radius())) {
                    return Err(Error::Config("deltas must lie in (0, tubular radius)".into()));
                }
            }
            if sw.runs.contains(&SweepKind::Lemma2) {
                let l =
                    sw.lemma2.as_ref().ok_or_else(|| Error::Config("lemma2 sweep needs a `lemma2` block".into()))?;
                if !(l.annulus[0] >= 0.0 && l.annulus[1] > l.annulus[0] && l.annulus[1] < body.tubular_radius()) {
                    return Err(Error::Config(
                        "lemma2.annulus must satisfy 0 <= inner < outer < tubular radius".into(),
                    ));
                }
                if l.p != 1 && l.p != 2 {
                    return Err(Error::Config("lemma2.p must be 1 or 2".into()));
                }
                if l.component > 3 {
                    return Err(Error::Config("lemma2.component must be 0..=3".into()));
                }
            }
        }
        Ok(())
    }

    fn section_time(&self, s: &SectionSpec) -> Result<TimeProfile> {
        let t = match s {
            SectionSpec::Tangential { time, .. } | SectionSpec::Normal { time, .. } => *time,
        };
        match t {
            None => Ok(TimeProfile::standard(self.horizon)),
            Some(t) => {
                if !(t.start > 0.0 && t.end < self.horizon && t.start < t.end) {
                    return Err(Error::Config(format!(
                        "section `{}` time support [{}, {}] must lie inside (0, {})",
                        s.id(),
                        t.start,
                        t.end,
                        self.horizon
                    )));
                }
                TimeProfile::new(t.start, t.end).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }

    pub fn sections(&self) -> Result<Vec<SurfaceTestSection>> {
        self.sections
            .iter()
            .map(|s| {
                let time = self.section_time(s)?;
                Ok(match s {
                    SectionSpec::Tangential { id, field, .. } => {
                        SurfaceTestSection::tangential(id.clone(), field.build(), time)
                    }
                    SectionSpec::Normal { id, profile, .. } => {
                        SurfaceTestSection::normal(id.clone(), profile.build(), time)
                    }
                })
            })
            .collect()
    }

    /// Field and body, with snapshot paths resolved against `base_dir`.
    pub fn state(&self, base_dir: &Path) -> Result<FlowState> {
        let body = self.body()?;
        let field = self.field.build(&body, base_dir)?;
        FlowState::new(field, body, self.horizon)
    }

    pub fn orders(&self) -> Orders {
        Orders::new(self.quadrature.surface, self.quadrature.radial, self.quadrature.time)
    }

    pub fn budget(&self) -> Result<Budget> {
        let kernel = MollifierKernel::new(self.filter.kernel_radial_order, self.filter.kernel_angular_order)?;
        let mut b = Budget::new(self.orders(), kernel);
        b.tolerance = Tolerance {
            error_multiplier: self.tolerances.error_multiplier,
            rel_floor: self.tolerances.rel_floor,
            abs_floor: self.tolerances.abs_floor,
        };
        b.divergence_route = self.filter.divergence_route;
        Ok(b)
    }

    pub fn drift(&self) -> Option<ExtensionKind> {
        self.extension
            .drift
            .as_ref()
            .map(|d| ExtensionKind::NormalDrift { coefficient: d.coefficient, direction: vec3(d.direction) })
    }

    pub fn scalar_test(&self) -> Option<(ScalarTest, f64)> {
        self.scalar_test.as_ref().map(|s| {
            (
                ScalarTest { cutoff: s.cutoff, constant: s.constant, gradient: vec3(s.gradient) },
                s.time.unwrap_or(0.5 * self.horizon),
            )
        })
    }

    pub fn drag_direction(&self) -> Option<Vec3> {
        self.drag_direction.map(vec3).or_else(|| self.field.free_stream()).and_then(|v| v.try_normalize(0.0))
    }

    pub fn plan(&self) -> Result<Option<SweepPlan>> {
        Ok(self.sweep.as_ref().map(|s| SweepPlan {
            nu_grid: s.nu_grid.clone(),
            h_grid: s.h_grid.clone(),
            ell_ratio: s.ell_ratio,
            cutoff: self.extension.cutoff,
            fit_window: s.fit_window,
        }))
    }

    /// A complete configuration exercising every block (printed by `schema`).
    pub fn example() -> Self {
        RunConfig {
            body: BodySpec::Sphere { radius: 1.0, tubular_radius: Some(0.5) },
            field: FieldSpec::StokesSphere { free_stream: [1.0, 0.0, 0.0], viscosity: 0.5, p_inf: 0.0 },
            horizon: 1.0,
            filter: FilterSpec {
                kernel_radial_order: 8,
                kernel_angular_order: 4,
                h: 0.1,
                ell: 0.05,
                divergence_route: DivergenceRoute::FiniteDifference,
            },
            extension: ExtensionSpec {
                cutoff: 0.4,
                drift: Some(DriftSpec { coefficient: 1.0, direction: [1.0, 0.0, 0.0] }),
            },
            sections: vec![
                SectionSpec::Tangential {
                    id: "drag".into(),
                    field: AmbientSpec::Constant([1.0, 0.0, 0.0]),
                    time: Some(TimeSpec { start: 0.2, end: 0.8 }),
                },
                SectionSpec::Normal {
                    id: "form".into(),
                    profile: ProfileSpec::AmbientDot([1.0, 0.0, 0.0]),
                    time: None,
                },
            ],
            scalar_test: Some(ScalarTestSpec { cutoff: 0.4, constant: 0.5, gradient: [1.0, 0.2, -0.3], time: None }),
            drag_direction: Some([1.0, 0.0, 0.0]),
            quadrature: QuadratureSpec::default(),
            suite: SuiteSpec::default(),
            sweep: Some(SweepSpec {
                runs: vec![SweepKind::Scale, SweepKind::Lighthill],
                nu_grid: default_nu_grid(),
                h_grid: dyadic(2, 6),
                ell_ratio: 0.5,
                fit_window: 3,
                deltas: vec![0.2, 0.1, 0.05],
                lemma2: Some(Lemma2Spec { annulus: [0.0, 0.3], p: 2, component: 0 }),
                expect: Expectations {
                    gap_exponent: Some(Band { min: Some(1.0), max: None }),
                    ..Expectations::default()
                },
            }),
            tolerances: ToleranceSpec::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}
