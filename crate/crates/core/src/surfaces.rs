//! Analytic test worldsheets with smooth normal-frame reference fields.

use std::f64::consts::PI;

use crate::background::BackgroundSpacetime;
use crate::chart::{Axis, GridChart};
use crate::geometry::{Embedding, GeometryError};

/// Finite-difference order used on open axes of the analytic surfaces.
pub const SURFACE_FD_ORDER: usize = 8;

const TWO_PI: f64 = 2.0 * PI;

fn unit_circle(n: usize) -> Axis {
    Axis::periodic(0.0, TWO_PI, n)
}

/// `X = (τ, σ, 0, 0)` in four-dimensional Minkowski space, τ ∈ [-1, 1], σ ∈ [0, 2π].
pub fn flat_plane(n: usize) -> Result<Embedding, GeometryError> {
    let chart = GridChart::new(vec![
        Axis::open_with_order(-1.0, 1.0, n, SURFACE_FD_ORDER),
        Axis::open_with_order(0.0, TWO_PI, n, SURFACE_FD_ORDER),
    ])?;
    Embedding::from_fn(chart, BackgroundSpacetime::minkowski(4), |x| vec![x[0], x[1], 0.0, 0.0])
}

/// `X = (τ, R cos σ, R sin σ, 0)`, τ ∈ [-1, 1]. Normals: outward radial, then `-z`.
pub fn static_cylinder(radius: f64, nt: usize, ns: usize) -> Result<Embedding, GeometryError> {
    let chart = GridChart::new(vec![Axis::open_with_order(-1.0, 1.0, nt, SURFACE_FD_ORDER), unit_circle(ns)])?;
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::minkowski(4), |x| {
        vec![x[0], radius * x[1].cos(), radius * x[1].sin(), 0.0]
    })?
    .with_reference_fn(|x, _| vec![0.0, x[1].cos(), x[1].sin(), 0.0, 0.0, 0.0, 0.0, 1.0]))
}

/// Collapsing circular loop `X = (τ, cos τ cos σ, cos τ sin σ, 0)`, τ ∈ [-τ_max, τ_max].
pub fn oscillating_string(nt: usize, ns: usize, tau_max: f64, order: usize) -> Result<Embedding, GeometryError> {
    let chart = GridChart::new(vec![Axis::open_with_order(-tau_max, tau_max, nt, order), unit_circle(ns)])?;
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::minkowski(4), |x| {
        let c = x[0].cos();
        vec![x[0], c * x[1].cos(), c * x[1].sin(), 0.0]
    })?
    .with_reference_fn(|x, _| vec![0.0, x[1].cos(), x[1].sin(), 0.0, 0.0, 0.0, 0.0, 1.0]))
}

fn polar_chart(eps: f64, nt: usize, np: usize) -> Result<GridChart, GeometryError> {
    Ok(GridChart::new(vec![Axis::open_with_order(eps, PI - eps, nt, SURFACE_FD_ORDER), unit_circle(np)])?)
}

/// Round sphere of radius `r` in `R^4` with polar caps `θ < ε`, `θ > π - ε` removed.
pub fn round_sphere(r: f64, eps: f64, nt: usize, np: usize) -> Result<Embedding, GeometryError> {
    let chart = polar_chart(eps, nt, np)?;
    let radial = |x: &[f64]| vec![x[0].sin() * x[1].cos(), x[0].sin() * x[1].sin(), x[0].cos(), 0.0];
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::euclidean(4), |x| radial(x).iter().map(|v| r * v).collect())?
        .with_reference_fn(move |x, _| {
            let mut v = radial(x);
            v.extend([0.0, 0.0, 0.0, 1.0]);
            v
        }))
}

fn whitney_map(t: f64, p: f64) -> [f64; 4] {
    let (x1, x2, y) = (t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
    let s = 1.0 + y * y;
    [x1 / s, x1 * y / s, x2 / s, x2 * y / s]
}

/// Whitney sphere `(x₁, x₁y, x₂, x₂y) / (1 + y²)` in `R^4` with polar caps removed.
///
/// The immersion is Lagrangian, so the normal frame is built from `J e_θ`
/// and `J e_φ` with `J(a, b, c, d) = (-b, a, -d, c)`.
pub fn whitney_sphere(eps: f64, nt: usize, np: usize) -> Result<Embedding, GeometryError> {
    let chart = polar_chart(eps, nt, np)?;
    let h = 1e-6;
    let j = |v: [f64; 4]| [-v[1], v[0], -v[3], v[2]];
    let diff = move |t: f64, p: f64, a: usize| {
        let (dt, dp) = if a == 0 { (h, 0.0) } else { (0.0, h) };
        let (f, b) = (whitney_map(t + dt, p + dp), whitney_map(t - dt, p - dp));
        [0, 1, 2, 3].map(|m| (f[m] - b[m]) / (2.0 * h))
    };
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::euclidean(4), |x| whitney_map(x[0], x[1]).to_vec())?
        .with_reference_fn(move |x, _| {
            let mut v = j(diff(x[0], x[1], 0)).to_vec();
            v.extend(j(diff(x[0], x[1], 1)));
            v
        }))
}

/// Clifford torus `(cos u, sin u, cos v, sin v) / √2` in `R^4`.
pub fn clifford_torus(n: usize) -> Result<Embedding, GeometryError> {
    bumpy_torus(0.0, n)
}

/// Clifford torus with radial bumps `1 + a cos u sin 2v`.
pub fn bumpy_torus(amplitude: f64, n: usize) -> Result<Embedding, GeometryError> {
    let chart = GridChart::periodic_square(2, n)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::euclidean(4), move |x| {
        let f = s * (1.0 + amplitude * x[0].cos() * (2.0 * x[1]).sin());
        vec![f * x[0].cos(), f * x[0].sin(), f * x[1].cos(), f * x[1].sin()]
    })?
    .with_reference_fn(move |x, _| {
        let (cu, su, cv, sv) = (x[0].cos(), x[0].sin(), x[1].cos(), x[1].sin());
        vec![s * cu, s * su, s * cv, s * sv, s * cu, s * su, -s * cv, -s * sv]
    }))
}

/// Torus of revolution with radii `big > small` in `R^4`.
pub fn torus_of_revolution(big: f64, small: f64, n: usize) -> Result<Embedding, GeometryError> {
    torus_of_revolution_in(BackgroundSpacetime::euclidean(4), big, small, n)
}

/// Torus of revolution in the first three axes of a flat Euclidean background.
pub fn torus_of_revolution_in(
    background: BackgroundSpacetime,
    big: f64,
    small: f64,
    n: usize,
) -> Result<Embedding, GeometryError> {
    let dim = background.dim();
    let chart = GridChart::periodic_square(2, n)?;
    let emb = Embedding::from_fn(chart, background, move |x| {
        let rho = big + small * x[1].cos();
        let mut v = vec![0.0; dim];
        v[..3].copy_from_slice(&[rho * x[0].cos(), rho * x[0].sin(), small * x[1].sin()]);
        v
    })?;
    Ok(emb.with_reference_fn(move |x, _| {
        let mut v = vec![0.0; (dim - 2) * dim];
        v[..3].copy_from_slice(&[x[1].cos() * x[0].cos(), x[1].cos() * x[0].sin(), x[1].sin()]);
        for i in 1..dim - 2 {
            v[i * dim + 2 + i] = 1.0;
        }
        v
    }))
}

/// Three-dimensional control worldsheet: a torus of revolution times a circle of radius `rho` in `R^5`.
pub fn torus_times_circle(big: f64, small: f64, rho: f64, n: usize) -> Result<Embedding, GeometryError> {
    let chart = GridChart::periodic_square(3, n)?;
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::euclidean(5), move |x| {
        let r = big + small * x[1].cos();
        vec![r * x[0].cos(), r * x[0].sin(), small * x[1].sin(), rho * x[2].cos(), rho * x[2].sin()]
    })?
    .with_reference_fn(|x, _| {
        let (cu, su, cv, sv) = (x[0].cos(), x[0].sin(), x[1].cos(), x[1].sin());
        vec![cv * cu, cv * su, sv, 0.0, 0.0, 0.0, 0.0, 0.0, x[2].cos(), x[2].sin()]
    }))
}
