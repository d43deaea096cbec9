//! Central differences with one Richardson level.
//!
//! First derivatives: D(h) = (f(x+h) − f(x−h))/2h, returned as (4D(h/2) − D(h))/3.
//! Second derivatives: same extrapolation applied to the three-point stencil.

use crate::error::Result;
use crate::geometry::{Mat3, Vec3};

/// Default first-derivative step relative to the field's length scale.
pub const FIRST_STEP: f64 = 1e-3;
/// Default second-derivative step relative to the field's length scale.
pub const SECOND_STEP: f64 = 1e-2;

pub fn first_step(length: f64) -> f64 {
    FIRST_STEP * length
}

pub fn second_step(length: f64) -> f64 {
    SECOND_STEP * length
}

fn axis(j: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[j] = 1.0;
    e
}

/// Richardson-extrapolated central first derivative along `dir`.
pub fn directional<T, F>(f: F, x: &Vec3, dir: &Vec3, h: f64) -> Result<T>
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
    F: Fn(&Vec3) -> Result<T>,
{
    let d = |step: f64| -> Result<T> { Ok((f(&(x + dir * step))? - f(&(x - dir * step))?) * (0.5 / step)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
}

pub fn scalar_gradient<F: Fn(&Vec3) -> Result<f64>>(f: F, x: &Vec3, h: f64) -> Result<Vec3> {
    let mut g = Vec3::zeros();
    for j in 0..3 {
        g[j] = directional(&f, x, &axis(j), h)?;
    }
    Ok(g)
}

/// `grad[(i, j)] = ∂f_i/∂x_j`.
pub fn vector_gradient<F: Fn(&Vec3) -> Result<Vec3>>(f: F, x: &Vec3, h: f64) -> Result<Mat3> {
    let mut g = Mat3::zeros();
    for j in 0..3 {
        let col: Vec3 = directional(&f, x, &axis(j), h)?;
        g.set_column(j, &col);
    }
    Ok(g)
}

/// Second derivative along `dir` (Richardson on the three-point stencil).
pub fn second_directional<T, F>(f: F, x: &Vec3, dir: &Vec3, center: T, h: f64) -> Result<T>
where
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
    F: Fn(&Vec3) -> Result<T>,
{
    let s = |step: f64| -> Result<T> {
        Ok((f(&(x + dir * step))? + f(&(x - dir * step))? - center * 2.0) * (1.0 / (step * step)))
    };
    let coarse = s(h)?;
    let fine = s(0.5 * h)?;
    Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
}

pub fn vector_laplacian<F: Fn(&Vec3) -> Result<Vec3>>(f: F, x: &Vec3, h: f64) -> Result<Vec3> {
    let c = f(x)?;
    let mut lap = Vec3::zeros();
    for j in 0..3 {
        lap += second_directional(&f, x, &axis(j), c, h)?;
    }
    Ok(lap)
}

pub fn scalar_laplacian<F: Fn(&Vec3) -> Result<f64>>(f: F, x: &Vec3, h: f64) -> Result<f64> {
    let c = f(x)?;
    let mut lap = 0.0;
    for j in 0..3 {
        lap += second_directional(&f, x, &axis(j), c, h)?;
    }
    Ok(lap)
}

pub fn time_derivative<F: Fn(f64) -> Result<Vec3>>(f: F, t: f64, h: f64) -> Result<Vec3> {
    let d = |step: f64| -> Result<Vec3> { Ok((f(t + step)? - f(t - step)?) / (2.0 * step)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok(fine * (4.0 / 3.0) - coarse / 3.0)
}
