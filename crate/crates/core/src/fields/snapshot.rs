//! Gridded snapshots.
//!
//! Text format: a header of `key = value` lines
//!
//! ```text
//! origin = 0.0 0.0 0.0
//! spacing = 0.1 0.1 0.1
//! dims = 32 32 32
//! times = 0.0 1.0
//! nu = 0.0
//! ```
//!
//! ended by a blank line, then one `u1 u2 u3 p` record per grid node with x
//! varying fastest, one block of `nx·ny·nz` records per time stamp.
//! Values are interpolated trilinearly in space and linearly in time; a node
//! holding a non-finite value counts as missing data.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{FlowField, ResidualClass, WallCondition};
use crate::error::{Error, Result};
use crate::geometry::{Body, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub origin: Vec3,
    pub spacing: Vec3,
    pub dims: [usize; 3],
    pub times: Vec<f64>,
    pub viscosity: f64,
}

impl GridSpec {
    fn nodes(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64 * self.spacing.x, j as f64 * self.spacing.y, k as f64 * self.spacing.z)
    }
}

#[derive(Debug, Clone)]
pub struct SampledField {
    id: String,
    grid: GridSpec,
    /// `[time][node] = (u1, u2, u3, p)`
    data: Vec<Vec<[f64; 4]>>,
}

fn parse_floats(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| Error::Data(format!("header `{key}`: cannot parse `{v}`"))))
        .collect()
}

impl SampledField {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open snapshot {}: {e}", path.display())))?;
        let id = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::parse(BufReader::new(file), &id)
    }

    pub fn parse<R: Read>(reader: BufReader<R>, id: &str) -> Result<Self> {
        let mut lines = reader.lines();
        let (mut origin, mut spacing, mut dims, mut times, mut nu) = (None, None, None, None, None);
        for line in lines.by_ref() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                break;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Data(format!("malformed header line `{line}`")))?;
            let key = key.trim();
            let v = parse_floats(key, value)?;
            let vec3 = |v: &[f64]| -> Result<Vec3> {
                if v.len() != 3 {
                    return Err(Error::Data(format!("header `{key}` needs three values")));
                }
                Ok(Vec3::new(v[0], v[1], v[2]))
            };
            match key {
                "origin" => origin = Some(vec3(&v)?),
                "spacing" => spacing = Some(vec3(&v)?),
                "dims" => {
                    let d = vec3(&v)?;
                    if d.iter().any(|x| *x < 2.0 || x.fract() != 0.0) {
                        return Err(Error::Data("dims must be integers >= 2".into()));
                    }
                    dims = Some([d.x as usize, d.y as usize, d.z as usize]);
                }
                "times" => times = Some(v),
                "nu" => {
                    if v.len() != 1 {
                        return Err(Error::Data("header `nu` needs one value".into()));
                    }
                    nu = Some(v[0]);
                }
                other => return Err(Error::Data(format!("unknown header key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Data(format!("missing header key `{k}`"));
        let grid = GridSpec {
            origin: origin.ok_or_else(|| missing("origin"))?,
            spacing: spacing.ok_or_else(|| missing("spacing"))?,
            dims: dims.ok_or_else(|| missing("dims"))?,
            times: times.ok_or_else(|| missing("times"))?,
            viscosity: nu.ok_or_else(|| missing("nu"))?,
        };
        if grid.spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Data("spacing must be positive".into()));
        }
        if grid.times.is_empty() || grid.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Data("times must be non-empty and increasing".into()));
        }
        let n = grid.nodes();
        let mut data = Vec::with_capacity(grid.times.len());
        let mut block = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: Vec<f64> = line.split_whitespace().map(|s| s.parse::<f64>().unwrap_or(f64::NAN)).collect();
            if v.len() != 4 {
                return Err(Error::Data(format!("record `{line}` does not have four columns")));
            }
            block.push([v[0], v[1], v[2], v[3]]);
            if block.len() == n {
                data.push(std::mem::replace(&mut block, Vec::with_capacity(n)));
            }
        }
        if !block.is_empty() || data.len() != grid.times.len() {
            return Err(Error::Data(format!(
                "expected {} blocks of {n} records, found {} full blocks",
                grid.times.len(),
                data.len()
            )));
        }
        Ok(SampledField { id: format!("snapshot:{id}"), grid, data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn coverage_error(x: &Vec3, t: f64) -> Error {
        Error::OutOfCoverage { x: x.x, y: x.y, z: x.z, t }
    }

    /// Trilinear interpolation within one time block.
    fn interpolate_block(&self, block: &[[f64; 4]], x: &Vec3, t: f64) -> Result<[f64; 4]> {
        let g = &self.grid;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = (x[a] - g.origin[a]) / g.spacing[a];
            let top = (g.dims[a] - 1) as f64;
            if !(s >= -1e-12 && s <= top + 1e-12) {
                return Err(Self::coverage_error(x, t));
            }
            let s = s.clamp(0.0, top);
            let i = (s.floor() as usize).min(g.dims[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut out = [0.0; 4];
        for corner in 0..8 {
            let (di, dj, dk) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let w = (if di == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dj == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if dk == 1 { frac[2] } else { 1.0 - frac[2] });
            let rec = block[g.index(base[0] + di, base[1] + dj, base[2] + dk)];
            if rec.iter().any(|v| !v.is_finite()) {
                return Err(Self::coverage_error(x, t));
            }
            for c in 0..4 {
                out[c] += w * rec[c];
            }
        }
        Ok(out)
    }

    fn sample(&self, x: &Vec3, t: f64) -> Result<[f64; 4]> {
        let times = &self.grid.times;
        if times.len() == 1 {
            return self.interpolate_block(&self.data[0], x, t);
        }
        let (first, last) = (times[0], times[times.len() - 1]);
        if !(t >= first && t <= last) {
            return Err(Self::coverage_error(x, t));
        }
        let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1) - 1;
        let w = (t - times[k]) / (times[k + 1] - times[k]);
        let a = self.interpolate_block(&self.data[k], x, t)?;
        let b = self.interpolate_block(&self.data[k + 1], x, t)?;
        Ok([0, 1, 2, 3].map(|c| (1.0 - w) * a[c] + w * b[c]))
    }

    fn step(&self) -> f64 {
        self.grid.spacing.max()
    }
}

impl FlowField for SampledField {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn viscosity(&self) -> f64 {
        self.grid.viscosity
    }

    fn residual_class(&self) -> ResidualClass {
        ResidualClass::None
    }

    fn wall_condition(&self) -> WallCondition {
        if self.grid.viscosity > 0.0 {
            WallCondition::NoSlip
        } else {
            WallCondition::NoPenetration
        }
    }

    fn velocity_scale(&self) -> f64 {
        self.data
            .iter()
            .flatten()
            .filter(|r| r.iter().all(|v| v.is_finite()))
            .map(|r| (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt())
            .fold(0.0, f64::max)
    }

    fn length_scale(&self) -> f64 {
        self.step()
    }

    fn is_steady(&self) -> bool {
        self.grid.times.len() == 1
    }

    fn node_count(&self) -> Option<usize> {
        Some(self.grid.nodes() * self.grid.times.len())
    }

    fn velocity(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let s = self.sample(x, t)?;
        Ok(Vec3::new(s[0], s[1], s[2]))
    }

    fn pressure(&self, x: &Vec3, t: f64) -> Result<f64> {
        Ok(self.sample(x, t)?[3])
    }

    // Second-order central differences of the interpolant at grid spacing.
    fn velocity_gradient(&self, x: &Vec3, t: f64) -> Result<Mat3> {
        let mut g = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = self.grid.spacing[j];
            let col = (self.velocity(&(x + e), t)? - self.velocity(&(x - e), t)?) / (2.0 * e[j]);
            g.set_column(j, &col);
        }
        Ok(g)
    }

    fn velocity_laplacian(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let c = self.velocity(x, t)?;
        let mut lap = Vec3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = self.grid.spacing[j];
            lap += (self.velocity(&(x + e), t)? + self.velocity(&(x - e), t)? - c * 2.0) / (e[j] * e[j]);
        }
        Ok(lap)
    }

    fn pressure_gradient(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let mut g = Vec3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = self.grid.spacing[j];
            g[j] = (self.pressure(&(x + e), t)? - self.pressure(&(x - e), t)?) / (2.0 * e[j]);
        }
        Ok(g)
    }

    fn velocity_time_derivative(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let times = &self.grid.times;
        if times.len() == 1 {
            return Ok(Vec3::zeros());
        }
        let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1) - 1;
        let (t0, t1) = (times[k], times[k + 1]);
        Ok((self.velocity(x, t1)? - self.velocity(x, t0)?) / (t1 - t0))
    }

    /// Quadratic extrapolation from three points at one, two and three grid
    /// steps into the flow: p_w = 3p₁ − 3p₂ + p₃.
    fn wall_pressure(&self, body: &Body, s: &Vec3, t: f64) -> Result<f64> {
        let n = body.normal(s)?;
        let h = self.step();
        let mut p = [0.0; 3];
        for (k, slot) in p.iter_mut().enumerate() {
            let y = s + n * (h * (k + 1) as f64);
            *slot = self
                .pressure(&y, t)
                .map_err(|e| Error::InsufficientWallSamples(format!("extrapolation point {} of 3: {e}", k + 1)))?;
        }
        Ok(3.0 * p[0] - 3.0 * p[1] + p[2])
    }
}

/// Samples a field on a grid and writes it in the snapshot format.
pub fn write_snapshot(field: &dyn FlowField, grid: &GridSpec, path: &Path) -> Result<()> {
    let mut out = String::new();
    let v = |x: &Vec3| format!("{:e} {:e} {:e}", x.x, x.y, x.z);
    let _ = writeln!(out, "origin = {}", v(&grid.origin));
    let _ = writeln!(out, "spacing = {}", v(&grid.spacing));
    let _ = writeln!(out, "dims = {} {} {}", grid.dims[0], grid.dims[1], grid.dims[2]);
    let times: Vec<String> = grid.times.iter().map(|t| format!("{t:e}")).collect();
    let _ = writeln!(out, "times = {}", times.join(" "));
    let _ = writeln!(out, "nu = {:e}", grid.viscosity);
    out.push('\n');
    for &t in &grid.times {
        for k in 0..grid.dims[2] {
            for j in 0..grid.dims[1] {
                for i in 0..grid.dims[0] {
                    let x = grid.point(i, j, k);
                    let u = field.velocity(&x, t)?;
                    let p = field.pressure(&x, t)?;
                    let _ = writeln!(out, "{:e} {:e} {:e} {:e}", u.x, u.y, u.z, p);
                }
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Manufactured;

    fn grid() -> GridSpec {
        GridSpec {
            origin: Vec3::new(-1.0, -1.0, -1.0),
            spacing: Vec3::new(0.25, 0.25, 0.25),
            dims: [9, 9, 9],
            times: vec![0.0, 1.0],
            viscosity: 0.0,
        }
    }

    #[test]
    fn affine_fields_round_trip_exactly() {
        let mut f = Manufactured::free_stream(Vec3::new(1.0, 2.0, 0.5), 3.0);
        f.pressure_gradient = Vec3::new(0.5, -1.0, 0.25);
        f.velocity_gradient = Mat3::new(0.1, 0.2, 0.0, -0.3, 0.0, 0.4, 0.0, 0.5, -0.1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("affine.snap");
        write_snapshot(&f, &grid(), &path).unwrap();
        let s = SampledField::read(&path).unwrap();
        let x = Vec3::new(0.13, -0.41, 0.57);
        assert!((s.velocity(&x, 0.3).unwrap() - f.velocity(&x, 0.0).unwrap()).norm() < 1e-12);
        assert!((s.pressure(&x, 0.3).unwrap() - f.pressure(&x, 0.0).unwrap()).abs() < 1e-12);
        assert!((s.velocity_gradient(&x, 0.3).unwrap() - f.velocity_gradient).norm() < 1e-11);
        assert_eq!(s.node_count(), Some(2 * 729));
    }

    #[test]
    fn outside_hull_is_out_of_coverage() {
        let f = Manufactured::quiescent(1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.snap");
        write_snapshot(&f, &grid(), &path).unwrap();
        let s = SampledField::read(&path).unwrap();
        let e = s.velocity(&Vec3::new(1.5, 0.0, 0.0), 0.5).unwrap_err();
        assert!(e.to_string().contains("out of data coverage"));
        assert!(s.velocity(&Vec3::zeros(), 2.0).is_err());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = "origin = 0 0 0\nspacing = 1 1 1\ndims = 2 2 2\ntimes = 0\nnu = 0\n\n0 0 0 0\n";
        let e = SampledField::parse(BufReader::new(text.as_bytes()), "t").unwrap_err();
        assert!(matches!(e, Error::Data(_)));
    }
}
