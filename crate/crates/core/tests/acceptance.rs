//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nearwall::budgets::{Budget, Orders};
use nearwall::config::RunConfig;
use nearwall::fields::{BoundaryLayerFamily, FlowField, FlowState, PotentialSphere, StokesSphere};
use nearwall::filtering::MollifierKernel;
use nearwall::geometry::{BandOrder, Body, Vec3};
use nearwall::sections::{
    AmbientField, ExtensionKind, Monomial, NormalProfile, ScalarMonomial, SurfaceTestSection, TimeProfile,
};
use nearwall::sweeps::{
    dyadic, estimate_no_flow_through, lemma2_convergence_curve, run_lighthill_sweep, run_scale_sweep,
    run_viscosity_sweep, SweepPlan,
};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

// Tolerances exactly as the criteria state them.
const C1_RELATIVE: f64 = 1e-5;
const C1_SECONDS: f64 = 120.0;
const C2_RELATIVE: f64 = 1e-6;
const C3_EXPONENT: f64 = 1.0;
const C3_FINAL_GAP: f64 = 1e-3;
const C4_ZERO: f64 = 1e-14;
const C4_BAND: (f64, f64) = (0.8, 1.2);
const C5_SQRT_BAND: (f64, f64) = (0.4, 0.6);
const C5_LINEAR_BAND: (f64, f64) = (-0.1, 0.1);
const C6_FORM: f64 = 1e-10;
const C6_TOTAL: f64 = 1e-5;
const C7_BALANCE: f64 = 1e-4;
const C7_LIMIT: f64 = 1e-3;
const C9_AREA: f64 = 1e-12;
const C9_FLUX: f64 = 1e-10;
const C9_PROJECTION: f64 = 1e-8;
/// Both residuals at roundoff: "improving" is judged above this floor.
const ROUNDOFF_RELATIVE: f64 = 1e-12;

const CUTOFF: f64 = 0.4;

fn budget() -> Budget {
    Budget::new(Orders::new(16, 10, 24), MollifierKernel::new(8, 4).unwrap())
}

fn sphere() -> Body {
    Body::sphere(1.0).unwrap()
}

fn state(f: impl FlowField + 'static) -> FlowState {
    FlowState::new(Arc::new(f), sphere(), 1.0).unwrap()
}

fn stokes() -> FlowState {
    state(StokesSphere::new(Vec3::x(), 1.0, 0.5, 0.0))
}

fn potential() -> FlowState {
    state(PotentialSphere::new(Vec3::new(1.0, 0.3, 0.0), 1.0, 0.0))
}

fn time() -> TimeProfile {
    TimeProfile::standard(1.0)
}

fn poly(terms: &[([f64; 3], [u32; 3])]) -> AmbientField {
    AmbientField::Polynomial(
        terms.iter().map(|(c, p)| Monomial { coefficient: Vec3::new(c[0], c[1], c[2]), powers: *p }).collect(),
    )
}

fn scalar_poly(terms: &[(f64, [u32; 3])]) -> NormalProfile {
    NormalProfile::Polynomial(terms.iter().map(|(c, p)| ScalarMonomial { coefficient: *c, powers: *p }).collect())
}

fn mixed_parity() -> SurfaceTestSection {
    SurfaceTestSection::tangential(
        "mixed_parity",
        poly(&[([1.0, 0.2, 0.0], [0, 0, 0]), ([1.0, 1.0, 0.3], [1, 0, 0]), ([0.0, 0.5, 1.0], [1, 1, 0])]),
        time(),
    )
}

fn tangential_sections() -> Vec<SurfaceTestSection> {
    vec![
        mixed_parity(),
        SurfaceTestSection::tangential(
            "even_quadratic",
            poly(&[([0.3, 1.0, 0.0], [0, 0, 0]), ([1.0, 0.0, 0.5], [0, 2, 0]), ([0.0, 1.0, 0.0], [1, 0, 1])]),
            time(),
        ),
        SurfaceTestSection::tangential(
            "shifted_uniform",
            poly(&[([1.0, 0.0, 0.0], [0, 0, 0]), ([0.0, 0.4, 0.0], [0, 0, 1])]),
            TimeProfile::new(0.1, 0.9).unwrap(),
        ),
    ]
}

fn normal_sections() -> Vec<SurfaceTestSection> {
    vec![
        SurfaceTestSection::normal("quadratic", scalar_poly(&[(1.0, [2, 0, 0]), (0.5, [0, 1, 1])]), time()),
        SurfaceTestSection::normal("uniform", NormalProfile::Constant(1.0), time()),
        SurfaceTestSection::normal("xy", scalar_poly(&[(1.0, [1, 1, 0])]), time()),
    ]
}

fn linear_normal() -> SurfaceTestSection {
    SurfaceTestSection::normal("linear", scalar_poly(&[(1.0, [1, 0, 0]), (0.5, [0, 1, 1])]), time())
}

fn plan(h_grid: Vec<f64>) -> SweepPlan {
    SweepPlan { nu_grid: dyadic(4, 14), h_grid, ell_ratio: 0.5, cutoff: CUTOFF, fit_window: 3 }
}

fn e(x: impl std::fmt::Display) -> String {
    x.to_string()
}

fn c1() -> Outcome {
    let s = stokes();
    let b = budget();
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for psi in tangential_sections() {
        let r = b.identity_residual_tangential(&s, &psi, CUTOFF, ExtensionKind::Natural).map_err(e)?;
        let scale = r.left.abs().max(r.right.abs());
        let refined_rel = r.refined_absolute / scale;
        let improving = refined_rel <= r.relative.max(ROUNDOFF_RELATIVE);
        ok &= r.relative <= C1_RELATIVE && improving;
        parts.push(format!("{} rel {:.1e} -> refined {:.1e}", psi.id, r.relative, refined_rel));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= C1_SECONDS;
    Ok((ok, format!("{}; {secs:.1} s", parts.join(", "))))
}

fn c2() -> Outcome {
    let s = potential();
    let b = budget();
    let mut ok = true;
    let mut parts = Vec::new();
    for psi in normal_sections() {
        let r = b.identity_residual_normal(&s, &psi, CUTOFF).map_err(e)?;
        ok &= r.relative <= C2_RELATIVE && r.right.abs() > 1e-3;
        parts.push(format!("{} rel {:.1e} (wall {:.4})", psi.id, r.relative, r.right));
    }
    Ok((ok, parts.join(", ")))
}

fn c3() -> Outcome {
    let sw = run_scale_sweep(&budget(), &stokes(), &plan(dyadic(2, 6)), &linear_normal(), ExtensionKind::Natural)
        .map_err(e)?;
    let all = sw.gap_fit_all.exponent.unwrap_or(f64::NAN);
    let tail = sw.gap_fit.exponent.unwrap_or(f64::NAN);
    let gap = sw.final_relative_gap.unwrap_or(f64::INFINITY);
    let ok = all >= C3_EXPONENT && tail >= C3_EXPONENT && gap <= C3_FINAL_GAP && sw.failures.is_empty();
    Ok((ok, format!("gap exponent {all:.3} (all 5 points), {tail:.3} (finest 3); final relative gap {gap:.2e} (need <= {C3_FINAL_GAP:e})")))
}

fn c4() -> Outcome {
    let s = potential();
    let b = budget();
    let p = plan(dyadic(2, 6));
    let natural = run_scale_sweep(&b, &s, &p, &mixed_parity(), ExtensionKind::Natural).map_err(e)?;
    let worst = natural.points.iter().map(|q| q.pressure.abs()).fold(0.0, f64::max);
    let drift = ExtensionKind::NormalDrift { coefficient: 1.0, direction: Vec3::x() };
    let drifted = run_scale_sweep(&b, &s, &p, &mixed_parity(), drift).map_err(e)?;
    let tail = drifted.pressure_fit.exponent.unwrap_or(f64::NAN);
    let all = drifted.pressure_fit_all.exponent.unwrap_or(f64::NAN);
    let ok = worst <= C4_ZERO && tail >= C4_BAND.0 && tail <= C4_BAND.1;
    Ok((ok, format!("natural max |pressure flux| {worst:.1e}; drift exponent {tail:.3} (finest 3), {all:.3} (all 5)")))
}

fn c5() -> Outcome {
    let body = sphere();
    let b = budget();
    let p = plan(dyadic(2, 6));
    let tangential = mixed_parity();
    let normal = linear_normal();
    let mut lines = Vec::new();
    let mut ok = true;
    for (alpha, band) in [(0.5, C5_SQRT_BAND), (1.0, C5_LINEAR_BAND)] {
        let family =
            BoundaryLayerFamily { free_stream: Vec3::x(), radius: 1.0, exponent: alpha, coefficient: 1.0, p_inf: 0.0 };
        let sw = run_viscosity_sweep(&b, &family, &body, 1.0, &p, &tangential, &normal).map_err(e)?;
        let finest = *p.nu_grid.last().unwrap();
        let s = FlowState::new(Arc::new(family.at(finest)), body, 1.0).map_err(e)?;
        let nft =
            estimate_no_flow_through(&s, &[0.2, 0.1, 0.05, 0.025, 0.0125], BandOrder::new(16, 10), 16).map_err(e)?;
        let exponent = sw.shear_fit.exponent.unwrap_or(f64::NAN);
        let in_band = exponent >= band.0 && exponent <= band.1;
        // Weak anomaly: all hypotheses hold and τ → 0. Vortex sheet: τ has a
        // nonzero limit, so some hypothesis must fail — here the body force
        // the family needs does not vanish.
        let scenario = if alpha == 0.5 {
            nft.tends_to_zero && sw.forcing_vanishes() && sw.shear_vanishes()
        } else {
            !sw.shear_vanishes() && !sw.forcing_vanishes() && sw.shear_limit.is_some_and(|l| l.abs() > 1.0)
        };
        ok &= in_band && scenario && sw.failures.is_empty();
        lines.push(format!(
            "delta=nu^{alpha}: shear exponent {exponent:.3}, limit {:.3e}, forcing exponent {:.3}, no-flow-through {} (exponent {:.2})",
            sw.shear_limit.unwrap_or(f64::NAN),
            sw.forcing_fit.exponent.unwrap_or(f64::NAN),
            if nft.tends_to_zero { "passes" } else { "fails" },
            nft.fit.exponent.unwrap_or(f64::NAN),
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn c6() -> Outcome {
    let b = budget();
    let nx = SurfaceTestSection::normal("nx", NormalProfile::AmbientDot(Vec3::x()), time());
    let tx = SurfaceTestSection::tangential("tx", AmbientField::Constant(Vec3::x()), time());
    let pot = state(PotentialSphere::new(Vec3::x(), 1.0, 0.0));
    let form_potential = -b.pair_wall_pressure(&pot, &nx).map_err(e)?.value;
    let (nu, u, a) = (0.5, 1.0, 1.0);
    let s = stokes();
    let skin = b.pair_wall_shear(&s, &tx).map_err(e)?.value;
    let form = -b.pair_wall_pressure(&s, &nx).map_err(e)?.value;
    let exact = 6.0 * PI * nu * u * a * time().exact_integral();
    let total_rel = ((skin + form - exact) / exact).abs();
    let ratio = skin / form;
    let ok = form_potential.abs() <= C6_FORM && total_rel <= C6_TOTAL && (ratio - 2.0).abs() <= 2.0 * C6_TOTAL;
    Ok((
        ok,
        format!(
            "potential form drag {form_potential:.1e}; Stokes total rel err {total_rel:.1e}, skin:form = {ratio:.10}"
        ),
    ))
}

fn c7() -> Outcome {
    let s = potential();
    let b = budget();
    let psi = mixed_parity();
    let r = b.lighthill_balance(&s, 0.1, 0.05, &psi, CUTOFF).map_err(e)?;
    let sw = run_lighthill_sweep(&b, &s, &plan(dyadic(2, 6)), &psi).map_err(e)?;
    let mismatch = sw.relative_mismatch.unwrap_or(f64::INFINITY);
    let ok = r.relative <= C7_BALANCE && mismatch <= C7_LIMIT;
    Ok((
        ok,
        format!(
            "balance rel {:.1e}; extrapolated pressure side {:.6} vs surface {:.6} (rel {mismatch:.1e})",
            r.relative,
            sw.limit.unwrap_or(f64::NAN),
            sw.surface.value
        ),
    ))
}

fn c8() -> Outcome {
    let field = PotentialSphere::new(Vec3::new(1.0, 0.3, 0.0), 1.0, 0.0);
    let kernel = MollifierKernel::new(8, 4).unwrap();
    let scales = plan(dyadic(2, 6)).scales();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..3 {
        let c = lemma2_convergence_curve(
            &sphere(),
            |x| Ok(field.velocity(x, 0.0)?[k]),
            (0.0, 0.3),
            &scales,
            2,
            1.0,
            &kernel,
            BandOrder::new(16, 10),
            &[],
        )
        .map_err(e)?;
        let norms: Vec<f64> = c.points.iter().map(|p| p.norm).collect();
        ok &= c.monotone_tail && norms.last() < norms.first();
        parts.push(format!(
            "u{}: {:.2e} -> {:.2e} (rate {:.2})",
            k + 1,
            norms[0],
            norms[norms.len() - 1],
            c.fit.exponent.unwrap_or(f64::NAN)
        ));
    }
    Ok((ok, parts.join(", ")))
}

fn c9() -> Outcome {
    let q = sphere().surface_quadrature(16).map_err(e)?;
    let area = (q.area() - 4.0 * PI).abs();
    let flux = (q.nodes.iter().map(|n| n.weight * n.point.dot(&n.normal)).sum::<f64>() - 4.0 * PI).abs();
    let mut proj: f64 = 0.0;
    let mut grad: f64 = 0.0;
    let h = 1e-5;
    for body in [sphere(), Body::ellipsoid([2.0, 1.0, 1.5]).unwrap()] {
        for k in 0..40 {
            let t = k as f64;
            let (s, _) = body.surface_point((1.3 * t).sin() * 0.95, 0.7 * t + 0.1);
            let x = s + body.normal(&s).map_err(e)? * (0.02 + 0.3 * (0.37 * t).sin().abs());
            let p = body.project(&x).map_err(e)?;
            proj = proj.max((body.project(&p).map_err(e)? - p).norm());
            let mut g = Vec3::zeros();
            for i in 0..3 {
                let mut dx = Vec3::zeros();
                dx[i] = h;
                g[i] = (body.distance(&(x + dx)).map_err(e)? - body.distance(&(x - dx)).map_err(e)?) / (2.0 * h);
            }
            grad = grad.max((g - body.normal(&p).map_err(e)?).norm());
        }
    }
    let ok = area <= C9_AREA && flux <= C9_FLUX && proj <= C9_PROJECTION && grad <= C9_PROJECTION;
    Ok((
        ok,
        format!("area err {area:.1e}, flux err {flux:.1e}, projection idempotence {proj:.1e}, |grad d - n| {grad:.1e}"),
    ))
}

fn c10() -> Outcome {
    let cfg_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/potential_sphere.cfg");
    let mut cfg = RunConfig::load(&cfg_path).map_err(e)?;
    cfg.suite.lighthill = false;
    let dir = tempfile::tempdir().map_err(e)?;
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, cfg.to_json()).map_err(e)?;
    let run = |name: &str| -> Result<PathBuf, String> {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_nearwall"))
            .args(["verify", "--threads", "2", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(e)?;
        if !o.status.success() {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        Ok(out)
    };
    let (a, b) = (run("a")?, run("b")?);
    let mut files = 0;
    let mut same = true;
    for entry in std::fs::read_dir(&a).map_err(e)? {
        let name = entry.map_err(e)?.file_name();
        if name.to_string_lossy().ends_with(".csv") {
            files += 1;
            same &= std::fs::read(a.join(&name)).map_err(e)? == std::fs::read(b.join(&name)).map_err(e)?;
        }
    }
    Ok((same && files >= 3, format!("{files} CSV files compared, byte-identical: {same}")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("weak tangential identity (Stokes, 3 sections)", c1),
        ("weak normal identity (potential, 3 sections)", c2),
        ("flux-to-wall gap convergence (Stokes, normal)", c3),
        ("pressure flux: natural vs drift extension", c4),
        ("boundary-layer scenarios", c5),
        ("drag pairings", c6),
        ("Lighthill balance and limit", c7),
        ("windowed mollification convergence", c8),
        ("geometry oracles", c9),
        ("determinism of verify CSV", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} C{} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
