//! Topological invariants of closed worldsheets: Euler characteristic and the
//! normal-bundle (twist) Chern number.

use std::f64::consts::PI;

use thiserror::Error;

use crate::chart::{ChartError, GridChart};
use crate::geometry::{Embedding, Geometry, GeometryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("invariant needs a two-dimensional worldsheet, got d = {0}")]
    NotTwoDimensional(usize),
    #[error("cap extrapolation needs three cutoffs, got {0}")]
    TooFewCutoffs(usize),
}

/// Normalisation of the twist density: `ν = σ₂ ∫ √γ Ω` with `σ₂ = 1/4π`
/// makes `ν` the normal Euler number.
pub const CHERN_NORMALIZATION: f64 = 1.0 / (4.0 * PI);

/// Default polar-cap cutoffs, each half the previous one.
pub const CAP_CUTOFFS: [f64; 3] = [0.1, 0.05, 0.025];

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub value: f64,
    pub nearest: i64,
    /// `|value - nearest|`
    pub defect: f64,
    /// Raw `(cutoff, value)` samples when extrapolated.
    pub samples: Vec<(f64, f64)>,
}

impl InvariantReport {
    pub fn exact(value: f64) -> Self {
        let nearest = value.round();
        Self { value, nearest: nearest as i64, defect: (value - nearest).abs(), samples: Vec::new() }
    }
}

fn require_surface(geom: &Geometry) -> Result<(), InvariantError> {
    match geom.d() {
        2 => Ok(()),
        d => Err(InvariantError::NotTwoDimensional(d)),
    }
}

/// `χ = (1/4π) ∫ √γ R`.
pub fn euler_characteristic_of(geom: &Geometry, chart: &GridChart) -> Result<f64, InvariantError> {
    require_surface(geom)?;
    let density: Vec<f64> = geom.intrinsic.scalar.iter().zip(&geom.forms.sqrt_det).map(|(r, s)| r * s).collect();
    Ok(chart.integrate(&density)? / (4.0 * PI))
}

/// `σ₂ ∫ √γ Ω`; needs codimension two.
pub fn chern_number_of(geom: &Geometry, chart: &GridChart, sigma2: f64) -> Result<f64, InvariantError> {
    require_surface(geom)?;
    let omega = crate::geometry::twist_scalar(&geom.connection)?;
    let density: Vec<f64> = omega.iter().zip(&geom.forms.sqrt_det).map(|(o, s)| o * s).collect();
    Ok(sigma2 * chart.integrate(&density)?)
}

pub fn euler_characteristic(emb: &Embedding) -> Result<InvariantReport, InvariantError> {
    let g = Geometry::new(emb)?;
    Ok(InvariantReport::exact(euler_characteristic_of(&g, emb.chart())?))
}

pub fn chern_number(emb: &Embedding) -> Result<InvariantReport, InvariantError> {
    let g = Geometry::new(emb)?;
    Ok(InvariantReport::exact(chern_number_of(&g, emb.chart(), CHERN_NORMALIZATION)?))
}

/// Richardson extrapolation of a cap-cutoff sequence `ε, ε/2, ε/4` in `ε²` and `ε⁴`.
pub fn cap_extrapolate<E, F>(cutoffs: &[f64], f: F) -> Result<InvariantReport, E>
where
    F: Fn(f64) -> Result<f64, E>,
    E: From<InvariantError>,
{
    if cutoffs.len() < 3 {
        return Err(InvariantError::TooFewCutoffs(cutoffs.len()).into());
    }
    let samples = cutoffs[..3].iter().map(|&e| f(e).map(|v| (e, v))).collect::<Result<Vec<_>, E>>()?;
    let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let r1 = (cutoffs[0] / cutoffs[1]).powi(2);
    let r2 = (cutoffs[1] / cutoffs[2]).powi(2);
    let a = (r1 * v[1] - v[0]) / (r1 - 1.0);
    let b = (r2 * v[2] - v[1]) / (r2 - 1.0);
    let q = r2 * r2;
    let value = (q * b - a) / (q - 1.0);
    let nearest = value.round();
    Ok(InvariantReport { value, nearest: nearest as i64, defect: (value - nearest).abs(), samples })
}

/// Twist density written as a total divergence, `√γ Ω = ∂_a V^a` with
/// `V^0 = -2 ω_1^{12}`, `V^1 = 2 ω_0^{12}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceForm {
    /// `∫ √γ Ω`
    pub bulk: f64,
    /// `∫ ∂_a V^a`
    pub divergence: f64,
    /// Net flux of `V` through the chart's open ends.
    pub boundary_flux: f64,
}

pub fn divergence_form(geom: &Geometry, chart: &GridChart) -> Result<DivergenceForm, InvariantError> {
    require_surface(geom)?;
    if geom.k() != 2 {
        return Err(GeometryError::Codimension { expected: 2, got: geom.k() }.into());
    }
    let c = &geom.connection;
    let nodes = geom.nodes();
    let mut v = vec![0.0; nodes * 2];
    for p in 0..nodes {
        v[2 * p] = -2.0 * c.omega(p, 1, 0, 1);
        v[2 * p + 1] = 2.0 * c.omega(p, 0, 0, 1);
    }
    let g = chart.gradient(&v, 2)?;
    let div: Vec<f64> = (0..nodes).map(|p| g[0][2 * p] + g[1][2 * p + 1]).collect();
    let omega = crate::geometry::twist_scalar(c)?;
    let bulk_density: Vec<f64> = omega.iter().zip(&geom.forms.sqrt_det).map(|(o, s)| o * s).collect();
    let mut flux = 0.0;
    for a in 0..2 {
        let axis = chart.axis(a);
        if !axis.is_periodic() {
            flux += chart.slice_integral(&v, a, axis.nodes - 1)? - chart.slice_integral(&v, a, 0)?;
        }
    }
    Ok(DivergenceForm { bulk: chart.integrate(&bulk_density)?, divergence: chart.integrate(&div)?, boundary_flux: flux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces;

    #[test]
    fn torus_invariants_vanish() {
        for emb in [surfaces::clifford_torus(32).unwrap(), surfaces::torus_of_revolution(2.0, 0.7, 64).unwrap()] {
            assert!(euler_characteristic(&emb).unwrap().value.abs() < 1e-7);
            assert!(chern_number(&emb).unwrap().value.abs() < 1e-8);
        }
    }

    #[test]
    fn perturbed_torus_keeps_invariants() {
        let emb = surfaces::bumpy_torus(0.1, 64).unwrap();
        assert!(euler_characteristic(&emb).unwrap().value.abs() < 1e-6);
        assert!(chern_number(&emb).unwrap().value.abs() < 1e-8);
    }

    #[test]
    fn round_sphere_has_euler_characteristic_two() {
        let rep = cap_extrapolate(&CAP_CUTOFFS, |eps| -> Result<f64, InvariantError> {
            let emb = surfaces::round_sphere(1.0, eps, 128, 64)?;
            Ok(euler_characteristic(&emb)?.value)
        })
        .unwrap();
        assert_eq!(rep.nearest, 2);
        assert!(rep.defect < 1e-5, "{rep:?}");
    }

    #[test]
    fn whitney_sphere_normal_euler_number() {
        let chi = cap_extrapolate(&CAP_CUTOFFS, |eps| -> Result<f64, InvariantError> {
            Ok(euler_characteristic(&surfaces::whitney_sphere(eps, 128, 64)?)?.value)
        })
        .unwrap();
        let nu = cap_extrapolate(&CAP_CUTOFFS, |eps| -> Result<f64, InvariantError> {
            Ok(chern_number(&surfaces::whitney_sphere(eps, 128, 64)?)?.value)
        })
        .unwrap();
        assert_eq!(chi.nearest, 2, "{chi:?}");
        assert!(nu.defect < 1e-3, "{nu:?}");
        assert_eq!(nu.nearest, -chi.nearest, "{nu:?}");
    }

    #[test]
    fn divergence_form_matches_bulk() {
        let torus = surfaces::bumpy_torus(0.1, 32).unwrap();
        let g = Geometry::new(&torus).unwrap();
        let f = divergence_form(&g, torus.chart()).unwrap();
        assert!(f.bulk.abs() < 1e-8 && f.divergence.abs() < 1e-8, "{f:?}");
        let sphere = surfaces::whitney_sphere(0.05, 128, 64).unwrap();
        let g = Geometry::new(&sphere).unwrap();
        let f = divergence_form(&g, sphere.chart()).unwrap();
        assert!((f.bulk - f.boundary_flux).abs() < 1e-3, "{f:?}");
    }
}
