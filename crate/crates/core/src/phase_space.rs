//! Covariant phase space of extremal worldsheets: the deformation split, the
//! symplectic current of the area action, and the symplectic potentials and
//! kernels contributed by the Gauss–Bonnet and normal-bundle twist terms.
//!
//! Two-forms on phase space are evaluated on pairs of deformations and are
//! antisymmetric by construction. Slice integrals use `dΣ_a = δ_a^τ dσ` on
//! constant-τ slices; the opposite orientation negates every `ω`.

use std::hash::{DefaultHasher, Hash, Hasher};

use rayon::prelude::*;
use thiserror::Error;

use crate::chart::{ChartError, GridChart};
use crate::dynamics::{Couplings, DynamicsError, SolutionFamily};
use crate::geometry::{self, Embedding, Geometry, GeometryError, NormalGauge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseSpaceError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("field has {got} values, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("deformations belong to different base embeddings")]
    DifferentBase,
    #[error("operation needs codimension 2, worldsheet has codimension {0}")]
    Codimension(usize),
    #[error("operation needs a two-dimensional worldsheet, got d = {0}")]
    NotTwoDimensional(usize),
    #[error("operation needs a flat background")]
    CurvedBackground,
    #[error("need at least 2 slices, got {0}")]
    TooFewSlices(usize),
    #[error("finite-difference step too small: error grows under refinement ({coarse:e} -> {fine:e})")]
    StepTooSmall { coarse: f64, fine: f64 },
}

/// Where a deformation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    FamilyTangent,
    Synthetic,
}

/// `δX = n_i φ^i + e_a φ^a` split into normal and tangential components.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub k: usize,
    pub d: usize,
    /// `φ^i` at `[node][i]`.
    pub normal: Vec<f64>,
    /// `φ^a` at `[node][a]`.
    pub tangential: Vec<f64>,
    pub provenance: Provenance,
    /// Fingerprint of the base embedding.
    pub base: u64,
    /// `∇̃_a φ^i` at `[node][a][i]` when known in closed form; otherwise it is
    /// taken by finite differences.
    pub gradient: Option<Vec<f64>>,
}

impl DeformationField {
    /// Purely normal deformation.
    pub fn normal(emb: &Embedding, phi: Vec<f64>, provenance: Provenance) -> Result<Self, PhaseSpaceError> {
        let (k, d, p) = (emb.codim(), emb.d(), emb.nodes());
        check_len(&phi, p * k)?;
        Ok(Self { k, d, normal: phi, tangential: vec![0.0; p * d], provenance, base: fingerprint(emb), gradient: None })
    }

    /// Purely tangential deformation.
    pub fn tangential(emb: &Embedding, phi: Vec<f64>, provenance: Provenance) -> Result<Self, PhaseSpaceError> {
        let (k, d, p) = (emb.codim(), emb.d(), emb.nodes());
        check_len(&phi, p * d)?;
        Ok(Self { k, d, normal: vec![0.0; p * k], tangential: phi, provenance, base: fingerprint(emb), gradient: None })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            normal: self.normal.iter().map(|x| c * x).collect(),
            tangential: self.tangential.iter().map(|x| c * x).collect(),
            gradient: self.gradient.as_ref().map(|g| g.iter().map(|x| c * x).collect()),
            ..self.clone()
        }
    }

    pub fn nodes(&self) -> usize {
        self.normal.len() / self.k
    }

    /// `∇̃_a φ^i`, from the closed form when present.
    pub fn normal_gradient(&self, chart: &GridChart, geom: &Geometry) -> Result<Vec<f64>, PhaseSpaceError> {
        match &self.gradient {
            Some(g) => Ok(g.clone()),
            None => Ok(geom.normal_derivative(chart, &self.normal)?),
        }
    }

    fn same_base(&self, other: &Self) -> Result<(), PhaseSpaceError> {
        if self.base != other.base || self.k != other.k || self.d != other.d {
            return Err(PhaseSpaceError::DifferentBase);
        }
        Ok(())
    }
}

fn check_len(v: &[f64], expected: usize) -> Result<(), PhaseSpaceError> {
    if v.len() != expected {
        return Err(PhaseSpaceError::ShapeMismatch { got: v.len(), expected });
    }
    Ok(())
}

/// Hash of the embedding's positions, used to tie deformations to their base.
pub fn fingerprint(emb: &Embedding) -> u64 {
    let mut h = DefaultHasher::new();
    for x in emb.points() {
        x.to_bits().hash(&mut h);
    }
    emb.chart().node_count().hash(&mut h);
    h.finish()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `φ^i = g(n^i, δX)`, `φ^a = γ^{ab} g(e_b, δX)`.
pub fn project_deformation(
    emb: &Embedding,
    geom: &Geometry,
    dx: &[f64],
    provenance: Provenance,
) -> Result<DeformationField, PhaseSpaceError> {
    let (n, k, d, nodes) = (emb.dim(), geom.k(), geom.d(), geom.nodes());
    check_len(dx, nodes * n)?;
    let mut normal = vec![0.0; nodes * k];
    let mut tangential = vec![0.0; nodes * d];
    for p in 0..nodes {
        let v = &dx[p * n..(p + 1) * n];
        for i in 0..k {
            normal[p * k + i] = geom.dot(p, geom.normals.at(p, i), v);
        }
        let proj: Vec<f64> = (0..d).map(|b| geom.dot(p, geom.tangents.at(p, b), v)).collect();
        for a in 0..d {
            tangential[p * d + a] = (0..d).map(|b| geom.forms.ginv(p, a, b) * proj[b]).sum();
        }
    }
    Ok(DeformationField { k, d, normal, tangential, provenance, base: fingerprint(emb), gradient: None })
}

/// Projection of a displacement `V` whose chart derivatives `∂_a V` are known:
/// `∇̃_a φ^i = g(n^i, ∂_a V) + K_ab^i φ^b` is then exact up to the frame.
pub fn project_with_derivatives(
    emb: &Embedding,
    geom: &Geometry,
    v: &[f64],
    dv: &[f64],
    provenance: Provenance,
) -> Result<DeformationField, PhaseSpaceError> {
    let (n, k, d, nodes) = (emb.dim(), geom.k(), geom.d(), geom.nodes());
    check_len(dv, nodes * d * n)?;
    if !emb.background().is_flat() {
        return Err(PhaseSpaceError::CurvedBackground);
    }
    let mut field = project_deformation(emb, geom, v, provenance)?;
    let mut grad = vec![0.0; nodes * d * k];
    for p in 0..nodes {
        for a in 0..d {
            let dva = &dv[(p * d + a) * n..(p * d + a + 1) * n];
            for i in 0..k {
                let mut s = geom.dot(p, geom.normals.at(p, i), dva);
                for b in 0..d {
                    s += geom.forms.k(p, i, a, b) * field.tangential[p * d + b];
                }
                grad[(p * d + a) * k + i] = s;
            }
        }
    }
    field.gradient = Some(grad);
    Ok(field)
}

/// `n_i φ^i + e_a φ^a`.
pub fn reconstruct(geom: &Geometry, phi: &DeformationField) -> Vec<f64> {
    let n = geom.tangents.dim;
    let (k, d) = (phi.k, phi.d);
    let mut out = vec![0.0; geom.nodes() * n];
    for p in 0..geom.nodes() {
        for m in 0..n {
            let mut s = 0.0;
            for i in 0..k {
                s += phi.normal[p * k + i] * geom.normals.at(p, i)[m];
            }
            for a in 0..d {
                s += phi.tangential[p * d + a] * geom.tangents.at(p, a)[m];
            }
            out[p * n + m] = s;
        }
    }
    out
}

/// Displacement field `n_i φ^i` only.
pub fn normal_displacement(geom: &Geometry, phi: &DeformationField) -> Vec<f64> {
    let only = DeformationField { tangential: vec![0.0; phi.tangential.len()], ..phi.clone() };
    reconstruct(geom, &only)
}

/// Finite-difference check of the normal and tangential deformation formulas.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeformationReport {
    /// `max|Δγ_ab/2h − 2K_ab^iφ_i| / max|2K_ab^iφ_i|`
    pub metric: Option<f64>,
    /// `max|Δ√γ/2h − √γK^iφ_i| / max|√γK^iφ_i|`
    pub sqrt_det: Option<f64>,
    /// `(ΔS/2h, −σ₀∫√γK^iφ_i, σ₀∫√γ|K^iφ_i|)` for `S = −σ₀ Area`.
    pub action: Option<(f64, f64, f64)>,
    /// `max|Δ√γ/2h − ∂_a(√γφ^a)| / max|∂_a(√γφ^a)|`
    pub tangential_sqrt_det: Option<f64>,
    /// `ΔArea/2h` under the tangential deformation.
    pub tangential_area: Option<f64>,
}

fn relative(fd: &[f64], pred: &[f64]) -> f64 {
    let scale = max_abs(pred);
    let err = fd.iter().zip(pred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if scale > 0.0 { err / scale } else { err }
}

fn displaced(emb: &Embedding, v: &[f64], h: f64) -> Result<Embedding, GeometryError> {
    emb.with_points(emb.points().iter().zip(v).map(|(x, d)| x + h * d).collect())
}

/// Builds `X ± h n_iφ^i` and `X ± h e_aφ^a` and compares central differences
/// of `γ_ab`, `√|γ|` and the action with the deformation formulas. Needs a flat
/// background.
pub fn verify_deformation_formulas(
    emb: &Embedding,
    phi: &DeformationField,
    h: f64,
    sigma0: f64,
) -> Result<DeformationReport, PhaseSpaceError> {
    if !emb.background().is_flat() {
        return Err(PhaseSpaceError::CurvedBackground);
    }
    let geom = Geometry::new(emb)?;
    if fingerprint(emb) != phi.base {
        return Err(PhaseSpaceError::DifferentBase);
    }
    let chart = emb.chart();
    let (d, k, nodes) = (geom.d(), geom.k(), geom.nodes());
    let f = &geom.forms;
    let mut report = DeformationReport::default();
    let fd_metric = |v: &[f64]| -> Result<(Vec<f64>, Vec<f64>), PhaseSpaceError> {
        let (gp, dp) = geometry::induced_metric_fields(&displaced(emb, v, h)?)?;
        let (gm, dm) = geometry::induced_metric_fields(&displaced(emb, v, -h)?)?;
        let dg = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let ds = dp.iter().zip(&dm).map(|(a, b)| (a.abs().sqrt() - b.abs().sqrt()) / (2.0 * h)).collect();
        Ok((dg, ds))
    };

    if phi.normal.iter().any(|&x| x != 0.0) {
        let (dg, ds) = fd_metric(&normal_displacement(&geom, phi))?;
        let mut pred_g = vec![0.0; nodes * d * d];
        let mut pred_s = vec![0.0; nodes];
        for p in 0..nodes {
            for a in 0..d {
                for b in 0..d {
                    pred_g[(p * d + a) * d + b] = 2.0 * (0..k).map(|i| f.k(p, i, a, b) * phi.normal[p * k + i]).sum::<f64>();
                }
            }
            pred_s[p] = f.sqrt_det[p] * (0..k).map(|i| f.mean(p, i) * phi.normal[p * k + i]).sum::<f64>();
        }
        report.metric = Some(relative(&dg, &pred_g));
        report.sqrt_det = Some(relative(&ds, &pred_s));
        let fd_action = -sigma0 * chart.integrate(&ds)?;
        let pred = -sigma0 * chart.integrate(&pred_s)?;
        let scale = sigma0.abs() * chart.integrate(&pred_s.iter().map(|x| x.abs()).collect::<Vec<_>>())?;
        report.action = Some((fd_action, pred, scale));
    }
    if phi.tangential.iter().any(|&x| x != 0.0) {
        let only = DeformationField { normal: vec![0.0; phi.normal.len()], gradient: None, ..phi.clone() };
        let (_, ds) = fd_metric(&reconstruct(&geom, &only))?;
        let dens: Vec<f64> = (0..nodes * d).map(|j| f.sqrt_det[j / d] * phi.tangential[j]).collect();
        let pred = density_divergence(chart, &dens, d)?;
        report.tangential_sqrt_det = Some(relative(&ds, &pred));
        report.tangential_area = Some(chart.integrate(&ds)?);
    }
    Ok(report)
}

/// `∂_a w^a` for a vector density `w` at `[node][a]`.
pub fn density_divergence(chart: &GridChart, w: &[f64], d: usize) -> Result<Vec<f64>, PhaseSpaceError> {
    let g = chart.gradient(w, d)?;
    Ok((0..chart.node_count()).map(|p| (0..d).map(|a| g[a][p * d + a]).sum()).collect())
}

/// `(1/√|γ|) ∂_a(√|γ| v^a)` for a vector `v` at `[node][a]`.
pub fn covariant_divergence(chart: &GridChart, geom: &Geometry, v: &[f64]) -> Result<Vec<f64>, PhaseSpaceError> {
    let d = geom.d();
    let w: Vec<f64> = v.iter().enumerate().map(|(j, x)| x * geom.forms.sqrt_det[j / d]).collect();
    Ok(density_divergence(chart, &w, d)?.iter().zip(&geom.forms.sqrt_det).map(|(x, s)| x / s).collect())
}

/// `j^a = γ^{ab}(φ₁_i ∇̃_b φ₂^i − φ₂_i ∇̃_b φ₁^i)` at `[node][a]`.
pub fn symplectic_current(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
) -> Result<Vec<f64>, PhaseSpaceError> {
    phi1.same_base(phi2)?;
    let (d, k, nodes) = (geom.d(), geom.k(), geom.nodes());
    let d1 = phi1.normal_gradient(chart, geom)?;
    let d2 = phi2.normal_gradient(chart, geom)?;
    let mut j = vec![0.0; nodes * d];
    for p in 0..nodes {
        for a in 0..d {
            let mut s = 0.0;
            for b in 0..d {
                let gab = geom.forms.ginv(p, a, b);
                for i in 0..k {
                    let (u, v) = (phi1.normal[p * k + i], phi2.normal[p * k + i]);
                    s += gab * (u * d2[(p * d + b) * k + i] - v * d1[(p * d + b) * k + i]);
                }
            }
            j[p * d + a] = s;
        }
    }
    Ok(j)
}

/// `δΓ^a_bc = ½γ^{ad}(∇_b h_dc + ∇_c h_bd − ∇_d h_bc)` at `[node][a][b][c]` for a
/// metric variation `h` at `[node][a][b]`.
pub fn christoffel_variation(chart: &GridChart, geom: &Geometry, h: &[f64]) -> Result<Vec<f64>, PhaseSpaceError> {
    let (d, nodes) = (geom.d(), geom.nodes());
    check_len(h, nodes * d * d)?;
    let dh = chart.gradient(h, d * d)?;
    let gam = |p: usize, a: usize, b: usize, c: usize| geom.intrinsic.gamma(p, a, b, c);
    let hh = |p: usize, a: usize, b: usize| h[(p * d + a) * d + b];
    let mut out = vec![0.0; nodes * d * d * d];
    let mut nab = vec![0.0; d * d * d];
    for p in 0..nodes {
        // ∇_b h_dc at nab[(b d + d') d + c]
        for b in 0..d {
            for e in 0..d {
                for c in 0..d {
                    let mut v = dh[b][(p * d + e) * d + c];
                    for f in 0..d {
                        v -= gam(p, f, b, e) * hh(p, f, c) + gam(p, f, b, c) * hh(p, e, f);
                    }
                    nab[(b * d + e) * d + c] = v;
                }
            }
        }
        let nb = |b: usize, e: usize, c: usize| nab[(b * d + e) * d + c];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for e in 0..d {
                        s += geom.forms.ginv(p, a, e) * (nb(b, e, c) + nb(c, b, e) - nb(e, b, c));
                    }
                    out[((p * d + a) * d + b) * d + c] = 0.5 * s;
                }
            }
        }
    }
    Ok(out)
}

fn potential_from_christoffel(geom: &Geometry, dgam: &[f64]) -> Vec<f64> {
    let (d, nodes) = (geom.d(), geom.nodes());
    let dg = |p: usize, a: usize, b: usize, c: usize| dgam[((p * d + a) * d + b) * d + c];
    let mut psi = vec![0.0; nodes * d];
    for p in 0..nodes {
        for a in 0..d {
            let mut s = 0.0;
            for b in 0..d {
                let trace: f64 = (0..d).map(|c| dg(p, c, b, c)).sum();
                s += geom.forms.ginv(p, a, b) * trace;
                for c in 0..d {
                    s -= geom.forms.ginv(p, b, c) * dg(p, a, b, c);
                }
            }
            psi[p * d + a] = s;
        }
    }
    psi
}

/// `h_ab = 2K_ab^iφ_i`.
fn normal_metric_variation(geom: &Geometry, phi: &[f64]) -> Vec<f64> {
    let (d, k, nodes) = (geom.d(), geom.k(), geom.nodes());
    let mut h = vec![0.0; nodes * d * d];
    for p in 0..nodes {
        for a in 0..d {
            for b in 0..d {
                h[(p * d + a) * d + b] = 2.0 * (0..k).map(|i| geom.forms.k(p, i, a, b) * phi[p * k + i]).sum::<f64>();
            }
        }
    }
    h
}

/// Gauss–Bonnet potential `ψ^a = γ^{ab}δΓ^c_bc − γ^{bc}δΓ^a_bc` of a normal
/// deformation, at `[node][a]`.
pub fn gb_potential(chart: &GridChart, geom: &Geometry, phi: &DeformationField) -> Result<Vec<f64>, PhaseSpaceError> {
    if geom.d() != 2 {
        return Err(PhaseSpaceError::NotTwoDimensional(geom.d()));
    }
    let h = normal_metric_variation(geom, &phi.normal);
    Ok(potential_from_christoffel(geom, &christoffel_variation(chart, geom, &h)?))
}

/// `√|γ| ψ^a` for an arbitrary displacement `V` (node-major, `N` per node),
/// using the full metric variation `g(∂_aV, e_b) + g(e_a, ∂_bV)`.
pub fn gb_potential_density_full(emb: &Embedding, geom: &Geometry, v: &[f64]) -> Result<Vec<f64>, PhaseSpaceError> {
    if !emb.background().is_flat() {
        return Err(PhaseSpaceError::CurvedBackground);
    }
    let (n, d, nodes) = (emb.dim(), geom.d(), geom.nodes());
    check_len(v, nodes * n)?;
    let dv = emb.chart().gradient(v, n)?;
    let mut h = vec![0.0; nodes * d * d];
    for p in 0..nodes {
        for a in 0..d {
            for b in 0..d {
                let x = &dv[a][p * n..(p + 1) * n];
                let y = &dv[b][p * n..(p + 1) * n];
                h[(p * d + a) * d + b] = geom.dot(p, x, geom.tangents.at(p, b)) + geom.dot(p, geom.tangents.at(p, a), y);
            }
        }
    }
    let psi = potential_from_christoffel(geom, &christoffel_variation(emb.chart(), geom, &h)?);
    Ok(psi.iter().enumerate().map(|(j, x)| x * geom.forms.sqrt_det[j / d]).collect())
}

/// Antisymmetrised Gauss–Bonnet kernel `D_δψ^a(φ₁, φ₂) = B(φ₁, φ₂) − B(φ₂, φ₁)` with
/// `B(u, v) = −2u_i{K^{abi}∇_b(K^jv_j) + s K^{bci}δΓ^a_bc(v)}` and bracket sign `s`.
///
/// The consistent second variation has `s = −1` ([`gb_kernel`]); `s = +1` is
/// kept for comparison.
pub fn gb_kernel_with_bracket_sign(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
    bracket_sign: f64,
) -> Result<Vec<f64>, PhaseSpaceError> {
    phi1.same_base(phi2)?;
    if geom.d() != 2 {
        return Err(PhaseSpaceError::NotTwoDimensional(geom.d()));
    }
    let (d, k, nodes) = (geom.d(), geom.k(), geom.nodes());
    let f = &geom.forms;
    let half = |u: &DeformationField, v: &DeformationField| -> Result<Vec<f64>, PhaseSpaceError> {
        let kv: Vec<f64> = (0..nodes).map(|p| (0..k).map(|j| f.mean(p, j) * v.normal[p * k + j]).sum()).collect();
        let dkv = chart.gradient(&kv, 1)?;
        let dgam = christoffel_variation(chart, geom, &normal_metric_variation(geom, &v.normal))?;
        let mut out = vec![0.0; nodes * d];
        for p in 0..nodes {
            for a in 0..d {
                let mut s = 0.0;
                for i in 0..k {
                    let ui = u.normal[p * k + i];
                    if ui == 0.0 {
                        continue;
                    }
                    let mut inner = 0.0;
                    for b in 0..d {
                        inner += f.k_up(p, i, a, b) * dkv[b][p];
                        for c in 0..d {
                            inner += bracket_sign * f.k_up(p, i, b, c) * dgam[((p * d + a) * d + b) * d + c];
                        }
                    }
                    s += -2.0 * ui * inner;
                }
                out[p * d + a] = s;
            }
        }
        Ok(out)
    };
    let (b12, b21) = (half(phi1, phi2)?, half(phi2, phi1)?);
    Ok(b12.iter().zip(&b21).map(|(x, y)| x - y).collect())
}

/// Gauss–Bonnet kernel `D_δψ^a` as a two-form, at `[node][a]`.
pub fn gb_kernel(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
) -> Result<Vec<f64>, PhaseSpaceError> {
    gb_kernel_with_bracket_sign(chart, geom, phi1, phi2, -1.0)
}

/// `D_δ(√|γ|ψ^a) = √|γ|[D_δψ^a + K_iφ₁^i ψ^a(φ₂) − K_iφ₂^i ψ^a(φ₁)]`.
pub fn gb_kernel_density(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
) -> Result<Vec<f64>, PhaseSpaceError> {
    gb_kernel_density_with_bracket_sign(chart, geom, phi1, phi2, -1.0)
}

/// [`gb_kernel_density`] built on [`gb_kernel_with_bracket_sign`].
pub fn gb_kernel_density_with_bracket_sign(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
    bracket_sign: f64,
) -> Result<Vec<f64>, PhaseSpaceError> {
    let kern = gb_kernel_with_bracket_sign(chart, geom, phi1, phi2, bracket_sign)?;
    let (p1, p2) = (gb_potential(chart, geom, phi1)?, gb_potential(chart, geom, phi2)?);
    let (d, k) = (geom.d(), geom.k());
    let kphi = |phi: &DeformationField, p: usize| -> f64 { (0..k).map(|i| geom.forms.mean(p, i) * phi.normal[p * k + i]).sum() };
    Ok((0..kern.len())
        .map(|j| {
            let p = j / d;
            geom.forms.sqrt_det[p] * (kern[j] + kphi(phi1, p) * p2[j] - kphi(phi2, p) * p1[j])
        })
        .collect())
}

fn require_codim2(geom: &Geometry) -> Result<(), PhaseSpaceError> {
    match (geom.d(), geom.k()) {
        (2, 2) => Ok(()),
        (2, k) => Err(PhaseSpaceError::Codimension(k)),
        (d, _) => Err(PhaseSpaceError::NotTwoDimensional(d)),
    }
}

/// Normal variation of the twist potential,
/// `δω_b^{ij} = −K_cb^i∇̃^cφ^j + K_cb^j∇̃^cφ^i + R_{jikb}φ^k`, at `[node][b][i][j]`.
pub fn twist_variation(chart: &GridChart, geom: &Geometry, phi: &DeformationField) -> Result<Vec<f64>, PhaseSpaceError> {
    let (d, k, nodes) = (geom.d(), geom.k(), geom.nodes());
    let f = &geom.forms;
    let nab = phi.normal_gradient(chart, geom)?;
    let mut out = vec![0.0; nodes * d * k * k];
    for p in 0..nodes {
        // ∇̃^c φ^j
        let up = |c: usize, j: usize| -> f64 { (0..d).map(|e| f.ginv(p, c, e) * nab[(p * d + e) * k + j]).sum() };
        for b in 0..d {
            for i in 0..k {
                for j in 0..k {
                    let mut s = 0.0;
                    for c in 0..d {
                        s += -f.k(p, i, c, b) * up(c, j) + f.k(p, j, c, b) * up(c, i);
                    }
                    if let Some(pg) = geom.background.point(p) {
                        let n = geom.tangents.dim;
                        let (ni, nj, eb) = (geom.normals.at(p, i), geom.normals.at(p, j), geom.tangents.at(p, b));
                        for (kk, phik) in (0..k).map(|kk| (kk, phi.normal[p * k + kk])) {
                            let nk = geom.normals.at(p, kk);
                            let mut r = 0.0;
                            for m in 0..n {
                                for v in 0..n {
                                    for a in 0..n {
                                        for bb in 0..n {
                                            r += pg.riemann(m, v, a, bb) * nj[m] * ni[v] * nk[a] * eb[bb];
                                        }
                                    }
                                }
                            }
                            s += r * phik;
                        }
                    }
                    out[((p * d + b) * k + i) * k + j] = s;
                }
            }
        }
    }
    Ok(out)
}

/// `Θ^a = σ₂ ε_ij ε^{ab} δω_b^{ij}` with `ε^{ab} = ε̃^{ab}/√|γ|`, at `[node][a]`.
fn theta_from_twist_variation(geom: &Geometry, dw: &[f64], sigma2: f64) -> Vec<f64> {
    let nodes = geom.nodes();
    let mut out = vec![0.0; nodes * 2];
    for p in 0..nodes {
        let w = |b: usize| dw[((p * 2 + b) * 2) * 2 + 1] - dw[((p * 2 + b) * 2 + 1) * 2];
        let s = sigma2 / geom.forms.sqrt_det[p];
        out[2 * p] = s * w(1);
        out[2 * p + 1] = -s * w(0);
    }
    out
}

/// Twist symplectic potential `Θ^a` of a normal deformation.
pub fn chern_potential(
    chart: &GridChart,
    geom: &Geometry,
    phi: &DeformationField,
    sigma2: f64,
) -> Result<Vec<f64>, PhaseSpaceError> {
    require_codim2(geom)?;
    Ok(theta_from_twist_variation(geom, &twist_variation(chart, geom, phi)?, sigma2))
}

/// `Θ^a` from a finite-difference variation of `ω_b^{ij}` along `V`: normals at
/// `X ± εV` come from the embedding's own gauge. With the base normals as
/// reference fields this is the projection-aligned frame.
pub fn chern_potential_fd(emb: &Embedding, v: &[f64], eps: f64, sigma2: f64) -> Result<Vec<f64>, PhaseSpaceError> {
    let geom = Geometry::new(emb)?;
    require_codim2(&geom)?;
    let gp = Geometry::new(&displaced(emb, v, eps)?)?;
    let gm = Geometry::new(&displaced(emb, v, -eps)?)?;
    let dw: Vec<f64> = gp
        .connection
        .twist
        .iter()
        .zip(&gm.connection.twist)
        .map(|(a, b)| (a - b) / (2.0 * eps))
        .collect();
    Ok(theta_from_twist_variation(&geom, &dw, sigma2))
}

/// Normal frame of `emb` as a reference gauge.
pub fn frame_gauge(geom: &Geometry) -> NormalGauge {
    NormalGauge::Reference(std::sync::Arc::new(geom.normals.data.clone()))
}

/// `δΘ^a(φ₁, φ₂) = −[K_iφ₁^i Θ^a(φ₂) − K_iφ₂^i Θ^a(φ₁)]`.
pub fn chern_kernel(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
    sigma2: f64,
) -> Result<Vec<f64>, PhaseSpaceError> {
    phi1.same_base(phi2)?;
    let (t1, t2) = (chern_potential(chart, geom, phi1, sigma2)?, chern_potential(chart, geom, phi2, sigma2)?);
    let k = geom.k();
    let kphi = |phi: &DeformationField, p: usize| -> f64 { (0..k).map(|i| geom.forms.mean(p, i) * phi.normal[p * k + i]).sum() };
    Ok((0..t1.len()).map(|j| -(kphi(phi1, j / 2) * t2[j] - kphi(phi2, j / 2) * t1[j])).collect())
}

/// Two-parameter family of embeddings for the exterior-derivative oracle.
pub trait EmbeddingFamily: Sync {
    fn embed(&self, lambda: [f64; 2]) -> Result<Embedding, PhaseSpaceError>;
}

/// `X(λ) = X₀ + λ₁V₁ + λ₂V₂`.
#[derive(Debug, Clone)]
pub struct LinearFamily {
    pub base: Embedding,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl EmbeddingFamily for LinearFamily {
    fn embed(&self, l: [f64; 2]) -> Result<Embedding, PhaseSpaceError> {
        let pts = self
            .base
            .points()
            .iter()
            .zip(self.v1.iter().zip(&self.v2))
            .map(|(x, (a, b))| x + l[0] * a + l[1] * b)
            .collect();
        Ok(self.base.with_points(pts)?)
    }
}

/// Family tangents `∂X/∂λ_k` at `λ₀` in parameter directions `dirs`.
pub fn family_tangents(
    family: &SolutionFamily,
    lambda0: &[f64],
    dirs: [usize; 2],
    h: f64,
) -> Result<[Vec<f64>; 2], PhaseSpaceError> {
    Ok([family.tangent_field(lambda0, dirs[0], h)?.values, family.tangent_field(lambda0, dirs[1], h)?.values])
}

/// Solution family reparametrised so that its tangents at `λ₀` are normal:
/// `X̃(λ, ξ) = X(λ₀ + λ, ξ − λ₁u₁(ξ) − λ₂u₂(ξ))`, where `u_k` are the tangential
/// components of the original tangents.
#[derive(Debug, Clone)]
pub struct GaugeNormalizedFamily {
    pub family: SolutionFamily,
    pub lambda0: Vec<f64>,
    pub dirs: [usize; 2],
    /// `u_k^a` at `[node][a]`.
    pub shifts: [Vec<f64>; 2],
    pub gauge: Option<NormalGauge>,
}

impl GaugeNormalizedFamily {
    pub fn new(family: SolutionFamily, lambda0: Vec<f64>, dirs: [usize; 2], h: f64) -> Result<Self, PhaseSpaceError> {
        let base = crate::dynamics::closed_string_solution(&family, &lambda0)?;
        let geom = Geometry::new(&base)?;
        let [v1, v2] = family_tangents(&family, &lambda0, dirs, h)?;
        let s1 = project_deformation(&base, &geom, &v1, Provenance::FamilyTangent)?.tangential;
        let s2 = project_deformation(&base, &geom, &v2, Provenance::FamilyTangent)?.tangential;
        Ok(Self { family, lambda0, dirs, shifts: [s1, s2], gauge: None })
    }

    pub fn with_gauge(mut self, gauge: NormalGauge) -> Self {
        self.gauge = Some(gauge);
        self
    }
}

impl EmbeddingFamily for GaugeNormalizedFamily {
    fn embed(&self, l: [f64; 2]) -> Result<Embedding, PhaseSpaceError> {
        let mut lambda = self.lambda0.clone();
        lambda[self.dirs[0]] += l[0];
        lambda[self.dirs[1]] += l[1];
        let member = self.family.member(&lambda)?;
        let (s1, s2) = (&self.shifts[0], &self.shifts[1]);
        let warp = |p: usize, x: &[f64]| -> [f64; 2] {
            [x[0] - l[0] * s1[2 * p] - l[1] * s2[2 * p], x[1] - l[0] * s1[2 * p + 1] - l[1] * s2[2 * p + 1]]
        };
        let warp_ref: &dyn Fn(usize, &[f64]) -> [f64; 2] = &warp;
        let emb = self.family.embed_member(&member, if l == [0.0, 0.0] { None } else { Some(warp_ref) })?;
        Ok(match &self.gauge {
            Some(g) => emb.with_gauge(g.clone()),
            None => emb,
        })
    }
}

/// One-form on the family: `(embedding, tangent V) ↦` per-node samples.
pub type OneForm<'a> = dyn Fn(&Embedding, &[f64]) -> Result<Vec<f64>, PhaseSpaceError> + Sync + 'a;

/// Finite-difference exterior derivative with its refinement history.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub step: f64,
    /// `dΨ(V₁, V₂)` at steps `h`, `h/2`, `h/4`.
    pub values: [Vec<f64>; 3],
    /// `max|d(h) − d(h/2)|`, `max|d(h/2) − d(h/4)|`.
    pub increments: [f64; 2],
}

impl OracleResult {
    pub fn value(&self) -> &[f64] {
        &self.values[0]
    }

    /// Richardson extrapolation in `h²` from the two finest steps.
    pub fn extrapolated(&self) -> Vec<f64> {
        self.values[1].iter().zip(&self.values[2]).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
    }
}

fn oracle_at(family: &dyn EmbeddingFamily, psi: &OneForm<'_>, h: f64) -> Result<Vec<f64>, PhaseSpaceError> {
    let pts: Vec<[f64; 2]> = vec![[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h], [h, h], [h, -h], [-h, h], [-h, -h]];
    let embs = pts.par_iter().map(|&l| family.embed(l)).collect::<Result<Vec<_>, _>>()?;
    let diff = |a: &Embedding, b: &Embedding| -> Vec<f64> {
        a.points().iter().zip(b.points()).map(|(x, y)| (x - y) / (2.0 * h)).collect()
    };
    let (pp, pm, mp, mm) = (&embs[4], &embs[5], &embs[6], &embs[7]);
    // V₂ at (±h, 0), V₁ at (0, ±h)
    let jobs = [(&embs[0], diff(pp, pm)), (&embs[1], diff(mp, mm)), (&embs[2], diff(pp, mp)), (&embs[3], diff(pm, mm))];
    let vals = jobs.par_iter().map(|(e, v)| psi(e, v)).collect::<Result<Vec<_>, _>>()?;
    Ok((0..vals[0].len())
        .map(|j| (vals[0][j] - vals[1][j]) / (2.0 * h) - (vals[2][j] - vals[3][j]) / (2.0 * h))
        .collect())
}

/// `dΨ(V₁, V₂) ≈ [Ψ_{(h,0)}(V₂) − Ψ_{(−h,0)}(V₂)]/2h − [Ψ_{(0,h)}(V₁) − Ψ_{(0,−h)}(V₁)]/2h`
/// with `V_k = ∂X/∂λ_k` by central differences, evaluated at `h`, `h/2`, `h/4`.
///
/// Fails when the finest increment exceeds the coarser one by more than the
/// round-off floor, i.e. the step is too small to resolve the derivative.
pub fn exterior_derivative_oracle(
    family: &dyn EmbeddingFamily,
    psi: &OneForm<'_>,
    h: f64,
) -> Result<OracleResult, PhaseSpaceError> {
    let v0 = oracle_at(family, psi, h)?;
    let v1 = oracle_at(family, psi, h / 2.0)?;
    let v2 = oracle_at(family, psi, h / 4.0)?;
    let inc = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let increments = [inc(&v0, &v1), inc(&v1, &v2)];
    let floor = 1e-6 * max_abs(&v0).max(1e-300);
    if increments[1] > 2.0 * increments[0] && increments[1] > floor {
        return Err(PhaseSpaceError::StepTooSmall { coarse: increments[0], fine: increments[1] });
    }
    Ok(OracleResult { step: h, values: [v0, v1, v2], increments })
}

/// `φ^a(V) = γ^{ab} g(e_b, V)`.
pub fn tangential_one_form(emb: &Embedding, v: &[f64]) -> Result<Vec<f64>, PhaseSpaceError> {
    let geom = Geometry::new(emb)?;
    Ok(project_deformation(emb, &geom, v, Provenance::Synthetic)?.tangential)
}

/// `√|γ| ψ^a(V)` with the full metric variation.
pub fn gb_one_form(emb: &Embedding, v: &[f64]) -> Result<Vec<f64>, PhaseSpaceError> {
    let geom = Geometry::new(emb)?;
    gb_potential_density_full(emb, &geom, v)
}

/// Slice-integrated symplectic form with its slice-independence statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticEvaluation {
    pub couplings: Couplings,
    pub slices: Vec<usize>,
    pub taus: Vec<f64>,
    pub omega: Vec<f64>,
    /// Combined vector density at `[node][a]`.
    pub density: Vec<f64>,
    /// `∂_a` of the density at every node.
    pub divergence: Vec<f64>,
    /// `max|ω − mean| / max(|mean|, scale)`, `scale` = mean of `∫|density^τ| dσ`.
    pub statistic: f64,
    pub scale: f64,
}

impl SymplecticEvaluation {
    pub fn mean(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.omega.len() as f64
    }

    pub fn max_divergence(&self) -> f64 {
        max_abs(&self.divergence)
    }
}

/// Five interior τ-slices, evenly spread.
pub fn default_slices(nt: usize) -> Vec<usize> {
    (1..=5).map(|i| (i * (nt - 1) + 3) / 6).collect()
}

/// `ω(τ) = ∫ w^τ dσ` of a vector density on each slice.
pub fn symplectic_form(
    chart: &GridChart,
    density: Vec<f64>,
    slices: &[usize],
    couplings: Couplings,
) -> Result<SymplecticEvaluation, PhaseSpaceError> {
    if slices.len() < 2 {
        return Err(PhaseSpaceError::TooFewSlices(slices.len()));
    }
    let d = chart.dims();
    let omega = slices.iter().map(|&s| chart.slice_integral(&density, 0, s)).collect::<Result<Vec<_>, _>>()?;
    let abs: Vec<f64> = density.iter().map(|x| x.abs()).collect();
    let scale = slices.iter().map(|&s| chart.slice_integral(&abs, 0, s)).sum::<Result<f64, _>>()? / slices.len() as f64;
    let mean = omega.iter().sum::<f64>() / omega.len() as f64;
    let dev = omega.iter().map(|w| (w - mean).abs()).fold(0.0, f64::max);
    let statistic = if dev == 0.0 { 0.0 } else { dev / mean.abs().max(scale) };
    let divergence = density_divergence(chart, &density, d)?;
    let taus = slices.iter().map(|&s| chart.axis(0).coord(s)).collect();
    Ok(SymplecticEvaluation { couplings, slices: slices.to_vec(), taus, omega, density, divergence, statistic, scale })
}

/// Combined kernel density `σ₀√|γ| j^a + σ₁ D_δ(√|γ|ψ^a) + δΘ^a` (`σ₂` inside `Θ`).
pub fn combined_density(
    chart: &GridChart,
    geom: &Geometry,
    phi1: &DeformationField,
    phi2: &DeformationField,
    couplings: Couplings,
) -> Result<Vec<f64>, PhaseSpaceError> {
    let d = geom.d();
    let j = symplectic_current(chart, geom, phi1, phi2)?;
    let mut out: Vec<f64> = j.iter().enumerate().map(|(n, x)| couplings.sigma0 * geom.forms.sqrt_det[n / d] * x).collect();
    if couplings.sigma1 != 0.0 {
        for (o, x) in out.iter_mut().zip(gb_kernel_density(chart, geom, phi1, phi2)?) {
            *o += couplings.sigma1 * x;
        }
    }
    if couplings.sigma2 != 0.0 && geom.k() == 2 {
        for (o, x) in out.iter_mut().zip(chern_kernel(chart, geom, phi1, phi2, couplings.sigma2)?) {
            *o += x;
        }
    }
    Ok(out)
}

/// Divergence report for a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub max_divergence: f64,
    pub statistic: f64,
    pub omega: Vec<f64>,
}

/// Whether a kernel is a plain vector or already density-weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelWeight {
    Vector,
    Density,
}

pub fn conservation_check(
    chart: &GridChart,
    geom: &Geometry,
    kernel: &[f64],
    weight: KernelWeight,
    slices: &[usize],
) -> Result<ConservationReport, PhaseSpaceError> {
    let d = geom.d();
    let (density, div) = match weight {
        KernelWeight::Vector => {
            let w: Vec<f64> = kernel.iter().enumerate().map(|(j, x)| x * geom.forms.sqrt_det[j / d]).collect();
            (w, covariant_divergence(chart, geom, kernel)?)
        }
        KernelWeight::Density => (kernel.to_vec(), density_divergence(chart, kernel, d)?),
    };
    let eval = symplectic_form(chart, density, slices, Couplings::default())?;
    Ok(ConservationReport { max_divergence: max_abs(&div), statistic: eval.statistic, omega: eval.omega })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::CHERN_NORMALIZATION;
    use crate::scenarios;

    fn max_rel(a: &[f64], b: &[f64]) -> f64 {
        relative(a, b)
    }

    fn tau_bump(emb: &Embedding) -> Vec<f64> {
        let chart = emb.chart();
        let (t0, t1) = (chart.axis(0).coord(0), chart.axis(0).coord(chart.axis(0).nodes - 1));
        let half = 0.5 * (t1 - t0);
        let mut out = Vec::with_capacity(chart.node_count() * 2);
        for p in 0..chart.node_count() {
            let x = chart.coords(p);
            let s = (x[0] - 0.5 * (t0 + t1)) / half;
            let b = (1.0 - s * s).powi(4);
            out.extend([b * (1.0 + 0.3 * x[1].sin()), 0.2 * b * (2.0 * x[1]).cos()]);
        }
        out
    }

    #[test]
    fn deformation_formulas_hold_on_the_cylinder() {
        let (fam, g) = scenarios::cylinder_family(64).unwrap();
        let base = fam.base.clone();
        let v: Vec<f64> = fam.v1.iter().zip(&fam.v2).map(|(a, b)| a + b).collect();
        let phi = project_deformation(&base, &g, &v, Provenance::Synthetic).unwrap();
        let rep = verify_deformation_formulas(&base, &phi, 1e-4, 1.0).unwrap();
        assert!(rep.metric.unwrap() < 1e-6, "{rep:?}");
        assert!(rep.sqrt_det.unwrap() < 1e-6, "{rep:?}");
        let (fd, pred, scale) = rep.action.unwrap();
        assert!((fd - pred).abs() < 1e-6 * scale, "{rep:?}");

        let t = DeformationField::tangential(&base, tau_bump(&base), Provenance::Synthetic).unwrap();
        let rep = verify_deformation_formulas(&base, &t, 1e-4, 1.0).unwrap();
        assert!(rep.tangential_sqrt_det.unwrap() < 1e-6, "{rep:?}");
        assert!(rep.tangential_area.unwrap().abs() < 1e-8, "{rep:?}");
    }

    #[test]
    fn tangential_deformation_of_the_string_keeps_area() {
        let pair = scenarios::standard_pair(64).unwrap();
        let t = DeformationField::tangential(&pair.base, tau_bump(&pair.base), Provenance::Synthetic).unwrap();
        let rep = verify_deformation_formulas(&pair.base, &t, 1e-4, 1.0).unwrap();
        assert!(rep.tangential_sqrt_det.unwrap() < 1e-6, "{rep:?}");
        assert!(rep.tangential_area.unwrap().abs() < 1e-8, "{rep:?}");
    }

    #[test]
    fn projection_round_trips() {
        let pair = scenarios::standard_pair(32).unwrap();
        let back = reconstruct(&pair.geometry, &pair.phi[0]);
        assert!(max_rel(&back, &pair.tangents[0]) < 1e-12);
    }

    #[test]
    fn current_is_conserved_and_antisymmetric() {
        let pair = scenarios::standard_pair(128).unwrap();
        let (chart, g) = (pair.base.chart(), &pair.geometry);
        let [a, b] = pair.normal_parts();
        let j = symplectic_current(chart, g, &a, &b).unwrap();
        assert!(max_abs(&covariant_divergence(chart, g, &j).unwrap()) < 1e-6);
        let swapped = symplectic_current(chart, g, &b, &a).unwrap();
        assert!(j.iter().zip(&swapped).all(|(x, y)| *x == -*y));
        let ev = symplectic_form(chart, combined_density(chart, g, &a, &b, Couplings::default()).unwrap(), &default_slices(128), Couplings::default()).unwrap();
        assert!(ev.statistic < 1e-5 && ev.mean().abs() > 1.0, "{:?}", ev.omega);
    }

    #[test]
    fn tangential_one_form_oracle_is_minus_current() {
        let pair = scenarios::standard_pair(64).unwrap();
        let [a, b] = pair.normal_parts();
        let j = symplectic_current(pair.base.chart(), &pair.geometry, &a, &b).unwrap();
        let fam = scenarios::normalized_wobble_family(64).unwrap();
        let o = exterior_derivative_oracle(&fam, &tangential_one_form, 1e-2).unwrap();
        let minus: Vec<f64> = j.iter().map(|x| -x).collect();
        assert!(max_rel(&o.extrapolated(), &minus) < 1e-4);
    }

    #[test]
    fn gb_kernel_matches_oracle_only_with_derived_bracket_sign() {
        let pair = scenarios::standard_pair(64).unwrap();
        let (chart, g) = (pair.base.chart(), &pair.geometry);
        let [a, b] = pair.normal_parts();
        let kern = gb_kernel_density(chart, g, &a, &b).unwrap();
        let fam = scenarios::normalized_wobble_family(64).unwrap();
        let o = exterior_derivative_oracle(&fam, &gb_one_form, 1e-2).unwrap().extrapolated();
        assert!(max_rel(&o, &kern) < 1e-4);

        let alt = gb_kernel_with_bracket_sign(chart, g, &a, &b, 1.0).unwrap();
        let base = gb_kernel(chart, g, &a, &b).unwrap();
        assert!(max_rel(&alt, &base) > 0.1);
    }

    #[test]
    fn chern_potential_and_kernel_on_cylinder() {
        let (fam, g) = scenarios::cylinder_family(64).unwrap();
        let chart = fam.base.chart().clone();
        let s2 = CHERN_NORMALIZATION;
        let p1 = project_deformation(&fam.base, &g, &fam.v1, Provenance::Synthetic).unwrap();
        let p2 = project_deformation(&fam.base, &g, &fam.v2, Provenance::Synthetic).unwrap();
        let theta = chern_potential(&chart, &g, &p2, s2).unwrap();
        let fd = chern_potential_fd(&fam.base, &fam.v2, 1e-4, s2).unwrap();
        assert!(max_abs(&theta) > 1e-2 && max_rel(&fd, &theta) < 1e-4);

        let kern = chern_kernel(&chart, &g, &p1, &p2, s2).unwrap();
        let one = |e: &Embedding, v: &[f64]| chern_potential_fd(e, v, 1e-4, s2);
        let o = exterior_derivative_oracle(&fam, &one, 1e-2).unwrap().extrapolated();
        assert!(max_abs(&kern) > 1e-2 && max_rel(&o, &kern) < 1e-4);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let pair = scenarios::standard_pair(32).unwrap();
        let other = scenarios::standard_pair(16).unwrap();
        let (chart, g) = (pair.base.chart(), &pair.geometry);
        assert_eq!(
            symplectic_current(chart, g, &pair.phi[0], &other.phi[0]).unwrap_err(),
            PhaseSpaceError::DifferentBase
        );
        assert!(matches!(
            DeformationField::normal(&pair.base, vec![0.0; 3], Provenance::Synthetic),
            Err(PhaseSpaceError::ShapeMismatch { .. })
        ));
        assert_eq!(
            symplectic_form(chart, vec![0.0; chart.node_count() * 2], &[3], Couplings::default()).unwrap_err(),
            PhaseSpaceError::TooFewSlices(1)
        );
        let torus = crate::surfaces::torus_of_revolution(2.0, 0.5, 16).unwrap();
        let gt = Geometry::new(&torus).unwrap();
        let phi = DeformationField::normal(&torus, vec![0.0; torus.nodes() * 2], Provenance::Synthetic).unwrap();
        assert!(chern_potential(torus.chart(), &gt, &phi, 1.0).is_ok());
        let t3 = crate::surfaces::torus_of_revolution_in(crate::background::BackgroundSpacetime::euclidean(5), 2.0, 0.5, 16).unwrap();
        let g3 = Geometry::new(&t3).unwrap();
        let phi3 = DeformationField::normal(&t3, vec![0.0; t3.nodes() * 3], Provenance::Synthetic).unwrap();
        assert_eq!(chern_potential(t3.chart(), &g3, &phi3, 1.0).unwrap_err(), PhaseSpaceError::Codimension(3));
    }
}
