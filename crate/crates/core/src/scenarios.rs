//! Ready-made worldsheets and deformation pairs shared by the tests and the CLI.

use std::sync::Arc;

use crate::dynamics::{self, GeneratorFn, SolutionFamily, StringChart};
use crate::geometry::{Embedding, Geometry};
use crate::phase_space::{
    self, DeformationField, GaugeNormalizedFamily, LinearFamily, PhaseSpaceError, Provenance,
};
use crate::surfaces;

/// Amplitude of the base wobble.
pub const WOBBLE_AMPLITUDE: f64 = 0.1;

/// τ window of the wobbled string charts; wide enough for slices, far from the cusps.
pub const WOBBLE_TAU: (f64, f64) = (-0.5, 0.5);

/// Step for the fourth-order family tangents.
pub const TANGENT_STEP: f64 = 1e-3;

pub fn string_chart(n: usize) -> StringChart {
    StringChart { nt: n, ns: n, tau: WOBBLE_TAU, order: surfaces::SURFACE_FD_ORDER }
}

/// Closed strings in `R^{1,3}` with left mover
/// `a(u) = r̂ + (A + λ₁)(cos 3u r̂ + sin 3u ẑ) + λ₂(sin 3u r̂ − cos 3u ẑ)` and right
/// mover `b(v) = (cos v, −sin v, 0)`, `r̂ = (cos u, sin u, 0)`.
pub fn wobble_family(n: usize) -> SolutionFamily {
    wobble_family_on(string_chart(n))
}

/// [`wobble_family`] on an arbitrary string chart.
pub fn wobble_family_on(chart: StringChart) -> SolutionFamily {
    let left: GeneratorFn = Arc::new(|l: &[f64], u: f64| {
        let (c, s) = ((3.0 * u).cos(), (3.0 * u).sin());
        let (a1, a2) = (WOBBLE_AMPLITUDE + l[0], l[1]);
        let radial = 1.0 + a1 * c + a2 * s;
        vec![radial * u.cos(), radial * u.sin(), a1 * s - a2 * c]
    });
    let right: GeneratorFn = Arc::new(|_: &[f64], v: f64| vec![v.cos(), -v.sin(), 0.0]);
    SolutionFamily::new(2, 3, left, right, chart)
        .with_reference(Arc::new(|x: &[f64], _: &[f64]| vec![0.0, x[1].cos(), x[1].sin(), 0.0, 0.0, 0.0, 0.0, 1.0]))
}

/// Wobbled string at the base point `λ = 0`.
pub fn wobbled_string(n: usize) -> Result<Embedding, PhaseSpaceError> {
    Ok(dynamics::closed_string_solution(&wobble_family(n), &[0.0, 0.0])?)
}

/// Base embedding, its geometry and the two family tangents split into normal
/// and tangential parts.
#[derive(Debug, Clone)]
pub struct TangentPair {
    pub base: Embedding,
    pub geometry: Geometry,
    pub tangents: [Vec<f64>; 2],
    pub phi: [DeformationField; 2],
}

impl TangentPair {
    /// Normal parts of the two tangents.
    pub fn normal_parts(&self) -> [DeformationField; 2] {
        self.phi.clone().map(|f| DeformationField { tangential: vec![0.0; f.tangential.len()], ..f })
    }
}

/// The standard wobble pair: the two family tangents at `λ = 0`.
pub fn standard_pair(n: usize) -> Result<TangentPair, PhaseSpaceError> {
    tangent_pair(&wobble_family(n), &[0.0, 0.0])
}

/// The two family tangents `∂X/∂λ₁`, `∂X/∂λ₂` of a two-parameter family at `λ₀`.
pub fn tangent_pair(family: &SolutionFamily, lambda0: &[f64]) -> Result<TangentPair, PhaseSpaceError> {
    let base = dynamics::closed_string_solution(family, lambda0)?;
    let geometry = Geometry::new(&base)?;
    let fields = [family.tangent_field(lambda0, 0, TANGENT_STEP)?, family.tangent_field(lambda0, 1, TANGENT_STEP)?];
    let project = |t: &dynamics::TangentField| {
        phase_space::project_with_derivatives(&base, &geometry, &t.values, &t.derivatives, Provenance::FamilyTangent)
    };
    let phi = [project(&fields[0])?, project(&fields[1])?];
    let tangents = fields.map(|t| t.values);
    Ok(TangentPair { base, geometry, tangents, phi })
}

/// The wobble family reparametrised so both tangents are normal at `λ = 0`.
pub fn normalized_wobble_family(n: usize) -> Result<GaugeNormalizedFamily, PhaseSpaceError> {
    GaugeNormalizedFamily::new(wobble_family(n), vec![0.0, 0.0], [0, 1], TANGENT_STEP)
}

/// Radius of the static cylinder scenario.
pub const CYLINDER_RADIUS: f64 = 1.0;

/// Static cylinder with the deformations `V₁ = f(τ) r̂` and `V₂ = g(σ) ẑ`, the
/// normals held fixed to the base frame along the linear family.
pub fn cylinder_family(n: usize) -> Result<(LinearFamily, Geometry), PhaseSpaceError> {
    let emb = surfaces::static_cylinder(CYLINDER_RADIUS, n, n)?;
    let geom = Geometry::new(&emb)?;
    let gauge = phase_space::frame_gauge(&geom);
    let chart = emb.chart().clone();
    let mut v1 = Vec::with_capacity(emb.nodes() * 4);
    let mut v2 = Vec::with_capacity(emb.nodes() * 4);
    for p in 0..chart.node_count() {
        let x = chart.coords(p);
        let f = 1.0 + 0.5 * x[0] + 0.25 * x[0] * x[0];
        let g = 1.0 + 0.5 * x[1].cos() + 0.3 * (2.0 * x[1]).sin();
        v1.extend([0.0, f * x[1].cos(), f * x[1].sin(), 0.0]);
        v2.extend([0.0, 0.0, 0.0, g]);
    }
    let base = emb.with_gauge(gauge);
    Ok((LinearFamily { base, v1, v2 }, geom))
}

/// Ring radius and half gap of the catenoid relaxation.
pub const CATENOID_RINGS: (f64, f64) = (1.0, 0.5);

/// Cylinder spanning two coaxial rings, relaxed towards the catenoid.
pub fn catenoid_relaxation(n: usize, target_residual: f64) -> Result<dynamics::RelaxationProblem, PhaseSpaceError> {
    let (r, h) = CATENOID_RINGS;
    Ok(dynamics::RelaxationProblem {
        initial: dynamics::ring_cylinder(r, h, n, n, surfaces::SURFACE_FD_ORDER)?,
        fixed_boundary: true,
        step: None,
        max_iterations: 200_000,
        target_residual,
    })
}

/// Smooth seeded normal field: low Fourier modes in every periodic direction
/// and low powers of the coordinate along open ones.
pub fn random_normal_field(emb: &Embedding, seed: u64, modes: usize) -> Result<DeformationField, PhaseSpaceError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (k, d) = (emb.codim(), emb.d());
    let chart = emb.chart();
    // per normal: coefficients of cos/sin(m x_a) or x_a^m for m < modes, per axis
    let coeffs: Vec<f64> = (0..k * d * modes * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut phi = Vec::with_capacity(chart.node_count() * k);
    for p in 0..chart.node_count() {
        let x = chart.coords(p);
        for i in 0..k {
            let mut v = 1.0;
            for a in 0..d {
                let ax = chart.axis(a);
                let mut f = 0.0;
                for m in 0..modes {
                    let c = &coeffs[(((i * d + a) * modes) + m) * 2..][..2];
                    f += if ax.is_periodic() {
                        c[0] * (m as f64 * x[a]).cos() + c[1] * ((m + 1) as f64 * x[a]).sin()
                    } else {
                        c[0] * x[a].powi(m as i32) + c[1] * (0.5 * m as f64 * x[a]).sin()
                    };
                }
                v *= 1.0 + 0.5 * f / modes as f64;
            }
            phi.push(v);
        }
    }
    DeformationField::normal(emb, phi, Provenance::Synthetic)
}
