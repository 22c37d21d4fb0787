//! First and second fundamental forms, intrinsic curvature and the normal
//! bundle connection of an embedded worldsheet.
//!
//! Conventions used throughout the crate:
//!
//! * `e_a = ∂_a X` and `γ_ab = g(e_a, e_b)`.
//! * Normals are orthonormal and spacelike, `g(n_i, n_j) = δ_ij`.
//! * `K_ab^i = -g(n^i, D_a e_b)`, so that a normal deformation `δX = φ^i n_i`
//!   changes the metric by `δγ_ab = 2 K_ab^i φ_i`. A cylinder of radius `R`
//!   has `K = +1/R` along its outward normal.
//! * The twist potential is `ω_a^{ij} = g(D_a n^i, n^j)`, antisymmetric in `ij`.
//!   The normal-bundle derivative of a normal field is the normal projection
//!   of its derivative, `∇̃_a φ^i = ∂_a φ^i + g(n^i, D_a n^j) φ^j`.
//! * `Ω_ab^{ij} = ∂_b ω_a^{ij} - ∂_a ω_b^{ij}` and, in codimension two,
//!   `Ω = ½ ε_ij ε^{ab} Ω_ab^{ij}` with `ε^{ab} = ε̃^{ab} / √|γ|`, `ε̃^{01} = 1`
//!   and `ε_12 = 1` in the order the normals were constructed.
//! * Intrinsic curvature follows the MTW sign: a round sphere has `R > 0`.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::background::{BackgroundError, BackgroundSpacetime, PointGeometry};
use crate::chart::{ChartError, GridChart};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error("embedding has {got} values, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("worldsheet dimension {d} must be smaller than background dimension {n}")]
    NoCodimension { d: usize, n: usize },
    #[error("degenerate induced metric at node {node} (ξ = {coords:?}, det γ = {det:e})")]
    DegenerateMetric { node: usize, coords: Vec<f64>, det: f64 },
    #[error("induced metric changes signature across the worldsheet (node {node})")]
    MixedSignature { node: usize },
    #[error("could not build {k} normals at node {node} (ξ = {coords:?})")]
    NormalFrame { node: usize, coords: Vec<f64>, k: usize },
    #[error("normal direction at node {node} is not spacelike")]
    TimelikeNormal { node: usize },
    #[error("operation needs codimension {expected}, worldsheet has codimension {got}")]
    Codimension { expected: usize, got: usize },
}

/// Default lower bound on `|det γ|`.
pub const DEGENERATE_THRESHOLD: f64 = 1e-8;

/// Projected reference vectors below this norm are skipped during Gram–Schmidt.
const NORMAL_FALLBACK: f64 = 1e-6;

/// How the normal frame gauge is fixed.
#[derive(Clone, Debug, Default)]
pub enum NormalGauge {
    /// Gram–Schmidt on the last `k` background coordinate axes, falling back
    /// to earlier axes when a projection is too short.
    #[default]
    CoordinateAxes,
    /// Gram–Schmidt on `k` reference vectors per node (node-major, `k * N`
    /// values per node), with coordinate axes as fallback.
    Reference(Arc<Vec<f64>>),
}

/// Signature of the induced metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldsheetSignature {
    Euclidean,
    Lorentzian,
}

/// Exact first and second derivatives of an embedding, when known.
#[derive(Clone, Debug)]
pub struct Jets {
    /// `∂_a X^μ` at `[node][a][μ]`.
    pub first: Vec<f64>,
    /// `∂_a ∂_b X^μ` at `[node][a][b][μ]`.
    pub second: Vec<f64>,
}

/// Map `X^μ(ξ^a)` from a chart into a background.
#[derive(Clone, Debug)]
pub struct Embedding {
    chart: GridChart,
    background: BackgroundSpacetime,
    points: Vec<f64>,
    gauge: NormalGauge,
    degenerate_threshold: f64,
    oriented: bool,
    jets: Option<Arc<Jets>>,
}

impl Embedding {
    pub fn new(
        chart: GridChart,
        background: BackgroundSpacetime,
        points: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        let n = background.dim();
        let expected = chart.node_count() * n;
        if points.len() != expected {
            return Err(GeometryError::ShapeMismatch { got: points.len(), expected });
        }
        if chart.dims() >= n {
            return Err(GeometryError::NoCodimension { d: chart.dims(), n });
        }
        Ok(Self {
            chart,
            background,
            points,
            gauge: NormalGauge::CoordinateAxes,
            degenerate_threshold: DEGENERATE_THRESHOLD,
            oriented: true,
            jets: None,
        })
    }

    /// Samples `X(ξ)` on the chart.
    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(
        chart: GridChart,
        background: BackgroundSpacetime,
        f: F,
    ) -> Result<Self, GeometryError> {
        let points = chart.sample_vector(background.dim(), f);
        Self::new(chart, background, points)
    }

    pub fn with_gauge(mut self, gauge: NormalGauge) -> Self {
        self.gauge = gauge;
        self
    }

    /// Reference vectors for the normal frame from a function of `(ξ, X(ξ))`
    /// returning `k * N` values.
    pub fn with_reference_fn<F: Fn(&[f64], &[f64]) -> Vec<f64>>(self, f: F) -> Self {
        let n = self.dim();
        let mut refs = Vec::with_capacity(self.chart.node_count() * self.codim() * n);
        for p in 0..self.chart.node_count() {
            refs.extend(f(&self.chart.coords(p), self.point(p)));
        }
        self.with_gauge(NormalGauge::Reference(Arc::new(refs)))
    }

    /// When set (the default) the last normal is flipped where needed so that
    /// `(e_1, …, e_d, n_1, …, n_k)` is positively oriented in the background
    /// coordinates.
    pub fn with_orientation(mut self, oriented: bool) -> Self {
        self.oriented = oriented;
        self
    }

    pub fn with_degenerate_threshold(mut self, eps: f64) -> Self {
        self.degenerate_threshold = eps;
        self
    }

    /// Attaches exact derivatives; tangents and `∂_a e_b` then bypass
    /// numerical differentiation.
    pub fn with_jets(mut self, jets: Jets) -> Result<Self, GeometryError> {
        let (p, d, n) = (self.nodes(), self.d(), self.dim());
        for (got, expected) in [(jets.first.len(), p * d * n), (jets.second.len(), p * d * d * n)] {
            if got != expected {
                return Err(GeometryError::ShapeMismatch { got, expected });
            }
        }
        self.jets = Some(Arc::new(jets));
        Ok(self)
    }

    pub fn jets(&self) -> Option<&Jets> {
        self.jets.as_deref()
    }

    /// Same chart, background and gauge; new positions (and no jets).
    pub fn with_points(&self, points: Vec<f64>) -> Result<Self, GeometryError> {
        let mut e = Self::new(self.chart.clone(), self.background.clone(), points)?;
        e.gauge = self.gauge.clone();
        e.degenerate_threshold = self.degenerate_threshold;
        e.oriented = self.oriented;
        Ok(e)
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn background(&self) -> &BackgroundSpacetime {
        &self.background
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, node: usize) -> &[f64] {
        let n = self.dim();
        &self.points[node * n..(node + 1) * n]
    }

    pub fn gauge(&self) -> &NormalGauge {
        &self.gauge
    }

    pub fn degenerate_threshold(&self) -> f64 {
        self.degenerate_threshold
    }

    /// Background dimension `N`.
    pub fn dim(&self) -> usize {
        self.background.dim()
    }

    /// Worldsheet dimension `d`.
    pub fn d(&self) -> usize {
        self.chart.dims()
    }

    /// Codimension `k = N - d`.
    pub fn codim(&self) -> usize {
        self.dim() - self.d()
    }

    pub fn nodes(&self) -> usize {
        self.chart.node_count()
    }

    fn point_geometry(&self) -> Result<Option<Vec<PointGeometry>>, GeometryError> {
        if self.background.is_flat() {
            return Ok(None);
        }
        (0..self.nodes())
            .map(|p| self.background.geometry_at(self.point(p)).map_err(GeometryError::from))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

/// Background data needed per node: either one flat metric or one
/// [`PointGeometry`] per node.
#[derive(Debug, Clone)]
pub struct BackgroundSamples {
    flat: Option<DMatrix<f64>>,
    points: Option<Vec<PointGeometry>>,
}

impl BackgroundSamples {
    pub fn of(emb: &Embedding) -> Result<Self, GeometryError> {
        Ok(match emb.point_geometry()? {
            None => Self { flat: Some(emb.background.metric_at(emb.point(0))), points: None },
            Some(points) => Self { flat: None, points: Some(points) },
        })
    }

    pub fn metric(&self, node: usize) -> &DMatrix<f64> {
        match (&self.flat, &self.points) {
            (Some(g), _) => g,
            (None, Some(p)) => &p[node].metric,
            _ => unreachable!(),
        }
    }

    pub fn point(&self, node: usize) -> Option<&PointGeometry> {
        self.points.as_ref().map(|p| &p[node])
    }

    pub fn is_flat(&self) -> bool {
        self.flat.is_some()
    }

    pub fn dot(&self, node: usize, u: &[f64], v: &[f64]) -> f64 {
        let g = self.metric(node);
        if self.is_flat() {
            return (0..u.len()).map(|m| g[(m, m)] * u[m] * v[m]).sum();
        }
        let mut s = 0.0;
        for m in 0..u.len() {
            for n in 0..v.len() {
                s += g[(m, n)] * u[m] * v[n];
            }
        }
        s
    }

    /// `Γ^ν_{αβ} u^α v^β` at a node (zero for flat backgrounds).
    pub fn connection_term(&self, node: usize, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = u.len();
        match self.point(node) {
            None => vec![0.0; n],
            Some(pg) => (0..n)
                .map(|nu| {
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            s += pg.gamma(nu, a, b) * u[a] * v[b];
                        }
                    }
                    s
                })
                .collect(),
        }
    }
}

/// Tangent vectors `e_a^μ`, indexed `[node][a][μ]`.
#[derive(Debug, Clone)]
pub struct TangentFrames {
    pub d: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TangentFrames {
    pub fn at(&self, node: usize, a: usize) -> &[f64] {
        let o = (node * self.d + a) * self.dim;
        &self.data[o..o + self.dim]
    }
}

/// Orthonormal normals `n_i^μ`, indexed `[node][i][μ]`.
#[derive(Debug, Clone)]
pub struct NormalFrame {
    pub k: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl NormalFrame {
    pub fn at(&self, node: usize, i: usize) -> &[f64] {
        let o = (node * self.k + i) * self.dim;
        &self.data[o..o + self.dim]
    }

    /// Frame with the order of the normals reversed.
    pub fn reversed(&self) -> Self {
        let mut data = self.data.clone();
        let nodes = self.data.len() / (self.k * self.dim);
        for p in 0..nodes {
            for i in 0..self.k {
                let src = (p * self.k + (self.k - 1 - i)) * self.dim;
                let dst = (p * self.k + i) * self.dim;
                data[dst..dst + self.dim].copy_from_slice(&self.data[src..src + self.dim]);
            }
        }
        Self { k: self.k, dim: self.dim, data }
    }

    /// Codimension-two frame rotated node-wise by `angle`:
    /// `n_1' = cos α n_1 + sin α n_2`, `n_2' = -sin α n_1 + cos α n_2`.
    pub fn rotated(&self, angle: &[f64]) -> Self {
        assert_eq!(self.k, 2, "SO(2) rotation needs two normals");
        let mut data = self.data.clone();
        for (p, &a) in angle.iter().enumerate() {
            let (s, c) = a.sin_cos();
            for m in 0..self.dim {
                let n1 = self.at(p, 0)[m];
                let n2 = self.at(p, 1)[m];
                data[(p * 2) * self.dim + m] = c * n1 + s * n2;
                data[(p * 2 + 1) * self.dim + m] = -s * n1 + c * n2;
            }
        }
        Self { k: 2, dim: self.dim, data }
    }
}

/// `γ_ab`, `γ^ab`, `√|γ|`, `K_ab^i` and `K^i`.
#[derive(Debug, Clone)]
pub struct FundamentalForms {
    pub d: usize,
    pub k: usize,
    pub signature: WorldsheetSignature,
    /// `[node][a][b]`
    pub metric: Vec<f64>,
    /// `[node][a][b]`
    pub inverse: Vec<f64>,
    pub det: Vec<f64>,
    pub sqrt_det: Vec<f64>,
    /// `K_ab^i` at `[node][i][a][b]`.
    pub second: Vec<f64>,
    /// `K^i` at `[node][i]`.
    pub mean: Vec<f64>,
}

impl FundamentalForms {
    pub fn g(&self, node: usize, a: usize, b: usize) -> f64 {
        self.metric[(node * self.d + a) * self.d + b]
    }

    pub fn ginv(&self, node: usize, a: usize, b: usize) -> f64 {
        self.inverse[(node * self.d + a) * self.d + b]
    }

    pub fn k(&self, node: usize, i: usize, a: usize, b: usize) -> f64 {
        self.second[((node * self.k + i) * self.d + a) * self.d + b]
    }

    pub fn mean(&self, node: usize, i: usize) -> f64 {
        self.mean[node * self.k + i]
    }

    /// `K^{ab}_i = γ^{ac} γ^{bd} K_cd^i`.
    pub fn k_up(&self, node: usize, i: usize, a: usize, b: usize) -> f64 {
        let mut s = 0.0;
        for c in 0..self.d {
            for e in 0..self.d {
                s += self.ginv(node, a, c) * self.ginv(node, b, e) * self.k(node, i, c, e);
            }
        }
        s
    }

    /// `K_b^a{}^i = γ^{ac} K_cb^i`.
    pub fn k_mixed(&self, node: usize, i: usize, a: usize, b: usize) -> f64 {
        (0..self.d).map(|c| self.ginv(node, a, c) * self.k(node, i, c, b)).sum()
    }
}

/// Levi-Civita tower of the induced metric.
#[derive(Debug, Clone)]
pub struct IntrinsicCurvature {
    pub d: usize,
    /// `Γ^a_bc` at `[node][a][b][c]`.
    pub christoffel: Vec<f64>,
    /// `R_abcd` at `[node][a][b][c][d]`.
    pub riemann: Vec<f64>,
    /// `[node][a][b]`
    pub ricci: Vec<f64>,
    pub scalar: Vec<f64>,
    /// `G_ab = R_ab - ½ γ_ab R` at `[node][a][b]`.
    pub einstein: Vec<f64>,
}

impl IntrinsicCurvature {
    pub fn gamma(&self, node: usize, a: usize, b: usize, c: usize) -> f64 {
        let d = self.d;
        self.christoffel[((node * d + a) * d + b) * d + c]
    }

    pub fn riemann(&self, node: usize, a: usize, b: usize, c: usize, e: usize) -> f64 {
        let d = self.d;
        self.riemann[(((node * d + a) * d + b) * d + c) * d + e]
    }
}

/// Twist potential, twist curvature and (codimension two) the twist scalar.
#[derive(Debug, Clone)]
pub struct NormalConnection {
    pub d: usize,
    pub k: usize,
    /// `ω_a^{ij}` at `[node][a][i][j]`.
    pub twist: Vec<f64>,
    /// `Ω_ab^{ij}` at `[node][a][b][i][j]`.
    pub curvature: Vec<f64>,
    /// `Ω` per node when `k = 2`.
    pub scalar: Option<Vec<f64>>,
}

impl NormalConnection {
    pub fn omega(&self, node: usize, a: usize, i: usize, j: usize) -> f64 {
        let (d, k) = (self.d, self.k);
        self.twist[((node * d + a) * k + i) * k + j]
    }

    pub fn big_omega(&self, node: usize, a: usize, b: usize, i: usize, j: usize) -> f64 {
        let (d, k) = (self.d, self.k);
        self.curvature[(((node * d + a) * d + b) * k + i) * k + j]
    }
}

/// `e_a^μ = ∂_a X^μ`.
pub fn tangent_frames(emb: &Embedding) -> Result<TangentFrames, GeometryError> {
    let (d, n, nodes) = (emb.d(), emb.dim(), emb.nodes());
    if let Some(j) = &emb.jets {
        return Ok(TangentFrames { d, dim: n, data: j.first.clone() });
    }
    let grads = emb.chart.gradient(&emb.points, n)?;
    let mut data = vec![0.0; nodes * d * n];
    for p in 0..nodes {
        for (a, g) in grads.iter().enumerate() {
            data[(p * d + a) * n..(p * d + a + 1) * n].copy_from_slice(&g[p * n..(p + 1) * n]);
        }
    }
    Ok(TangentFrames { d, dim: n, data })
}

fn invert_small(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    match m.nrows() {
        2 => {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            Some(DMatrix::from_row_slice(2, 2, &[m[(1, 1)] / det, -m[(0, 1)] / det, -m[(1, 0)] / det, m[(0, 0)] / det]))
        }
        _ => m.clone().try_inverse(),
    }
}

/// Induced metric at every node with its inverse and determinant.
fn induced_metric(
    emb: &Embedding,
    bg: &BackgroundSamples,
    e: &TangentFrames,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, WorldsheetSignature), GeometryError> {
    let (d, nodes) = (emb.d(), emb.nodes());
    let mut metric = vec![0.0; nodes * d * d];
    let mut inverse = vec![0.0; nodes * d * d];
    let mut det = vec![0.0; nodes];
    let mut signature = None;
    for p in 0..nodes {
        let mut m = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let v = bg.dot(p, e.at(p, a), e.at(p, b));
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        let dt = if d == 2 { m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] } else { m.determinant() };
        if dt.abs() < emb.degenerate_threshold {
            return Err(GeometryError::DegenerateMetric { node: p, coords: emb.chart.coords(p), det: dt });
        }
        let s = if dt > 0.0 { WorldsheetSignature::Euclidean } else { WorldsheetSignature::Lorentzian };
        match signature {
            None => signature = Some(s),
            Some(prev) if prev != s => return Err(GeometryError::MixedSignature { node: p }),
            _ => {}
        }
        let inv = invert_small(&m)
            .ok_or_else(|| GeometryError::DegenerateMetric { node: p, coords: emb.chart.coords(p), det: dt })?;
        for a in 0..d {
            for b in 0..d {
                metric[(p * d + a) * d + b] = m[(a, b)];
                inverse[(p * d + a) * d + b] = inv[(a, b)];
            }
        }
        det[p] = dt;
    }
    Ok((metric, inverse, det, signature.expect("chart has nodes")))
}

/// Induced metric `[node][a][b]` and its determinant, without building normals.
pub fn induced_metric_fields(emb: &Embedding) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let bg = BackgroundSamples::of(emb)?;
    let e = tangent_frames(emb)?;
    let (metric, _, det, _) = induced_metric(emb, &bg, &e)?;
    Ok((metric, det))
}

/// Orthonormal normals by modified Gram–Schmidt on the gauge's reference vectors.
pub fn normal_frame(emb: &Embedding, e: &TangentFrames) -> Result<NormalFrame, GeometryError> {
    let bg = BackgroundSamples::of(emb)?;
    let (metric, inverse, _, _) = induced_metric(emb, &bg, e)?;
    normal_frame_with(emb, &bg, e, &inverse, &metric)
}

fn normal_frame_with(
    emb: &Embedding,
    bg: &BackgroundSamples,
    e: &TangentFrames,
    ginv: &[f64],
    _metric: &[f64],
) -> Result<NormalFrame, GeometryError> {
    let (d, n, k, nodes) = (emb.d(), emb.dim(), emb.codim(), emb.nodes());
    let mut data = vec![0.0; nodes * k * n];
    let axis = |m: usize| {
        let mut v = vec![0.0; n];
        v[m] = 1.0;
        v
    };
    for p in 0..nodes {
        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(n + k);
        if let NormalGauge::Reference(refs) = &emb.gauge {
            for i in 0..k {
                candidates.push(refs[(p * k + i) * n..(p * k + i + 1) * n].to_vec());
            }
        }
        candidates.extend((n - k..n).map(axis));
        candidates.extend((0..n - k).rev().map(axis));
        let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(k);
        for r in candidates {
            if accepted.len() == k {
                break;
            }
            let scale = bg.dot(p, &r, &r).abs().sqrt();
            if scale == 0.0 {
                continue;
            }
            let mut v = r.clone();
            // project out the tangent space
            let mut proj = vec![0.0; d];
            for (b, pb) in proj.iter_mut().enumerate() {
                *pb = bg.dot(p, e.at(p, b), &r);
            }
            for a in 0..d {
                let coef: f64 = (0..d).map(|b| ginv[(p * d + a) * d + b] * proj[b]).sum();
                for (vm, em) in v.iter_mut().zip(e.at(p, a)) {
                    *vm -= coef * em;
                }
            }
            for q in &accepted {
                let c = bg.dot(p, q, &v);
                for (vm, qm) in v.iter_mut().zip(q) {
                    *vm -= c * qm;
                }
            }
            let norm2 = bg.dot(p, &v, &v);
            if norm2 < 0.0 && norm2.abs().sqrt() >= NORMAL_FALLBACK * scale {
                return Err(GeometryError::TimelikeNormal { node: p });
            }
            if norm2 <= 0.0 || norm2.sqrt() < NORMAL_FALLBACK * scale {
                continue;
            }
            let norm = norm2.sqrt();
            accepted.push(v.iter().map(|x| x / norm).collect());
        }
        if accepted.len() < k {
            return Err(GeometryError::NormalFrame { node: p, coords: emb.chart.coords(p), k });
        }
        if emb.oriented {
            let mut m = DMatrix::zeros(n, n);
            for a in 0..d {
                for (c, x) in e.at(p, a).iter().enumerate() {
                    m[(a, c)] = *x;
                }
            }
            for (i, v) in accepted.iter().enumerate() {
                for (c, x) in v.iter().enumerate() {
                    m[(d + i, c)] = *x;
                }
            }
            if m.determinant() < 0.0 {
                accepted[k - 1].iter_mut().for_each(|x| *x = -*x);
            }
        }
        for (i, v) in accepted.iter().enumerate() {
            data[(p * k + i) * n..(p * k + i + 1) * n].copy_from_slice(v);
        }
    }
    Ok(NormalFrame { k, dim: n, data })
}

/// Second partials `∂_a e_b^μ` at `[a][b] -> [node][μ]`.
fn second_partials(emb: &Embedding) -> Result<Vec<Vec<Vec<f64>>>, GeometryError> {
    let (d, n) = (emb.d(), emb.dim());
    if let Some(j) = &emb.jets {
        let nodes = emb.nodes();
        let mut out = vec![vec![vec![0.0; nodes * n]; d]; d];
        for p in 0..nodes {
            for a in 0..d {
                for b in 0..d {
                    let o = ((p * d + a) * d + b) * n;
                    out[a][b][p * n..(p + 1) * n].copy_from_slice(&j.second[o..o + n]);
                }
            }
        }
        return Ok(out);
    }
    let first = emb.chart.gradient(&emb.points, n)?;
    let mut out = vec![vec![Vec::new(); d]; d];
    for a in 0..d {
        for b in a..d {
            let s = emb.chart.partial(&first[b], n, a)?;
            out[b][a] = s.clone();
            out[a][b] = s;
        }
    }
    Ok(out)
}

/// `γ_ab`, its inverse and determinant, `K_ab^i` and `K^i`.
pub fn fundamental_forms(
    emb: &Embedding,
    e: &TangentFrames,
    normals: &NormalFrame,
) -> Result<FundamentalForms, GeometryError> {
    let bg = BackgroundSamples::of(emb)?;
    fundamental_forms_with(emb, &bg, e, normals)
}

fn fundamental_forms_with(
    emb: &Embedding,
    bg: &BackgroundSamples,
    e: &TangentFrames,
    normals: &NormalFrame,
) -> Result<FundamentalForms, GeometryError> {
    let (d, n, k, nodes) = (emb.d(), emb.dim(), emb.codim(), emb.nodes());
    let (metric, inverse, det, signature) = induced_metric(emb, bg, e)?;
    let dd = second_partials(emb)?;
    let mut second = vec![0.0; nodes * k * d * d];
    let mut mean = vec![0.0; nodes * k];
    for p in 0..nodes {
        for a in 0..d {
            for b in a..d {
                let mut accel: Vec<f64> = dd[a][b][p * n..(p + 1) * n].to_vec();
                if !bg.is_flat() {
                    let c = bg.connection_term(p, e.at(p, a), e.at(p, b));
                    for (x, y) in accel.iter_mut().zip(c) {
                        *x += y;
                    }
                }
                for i in 0..k {
                    let v = -bg.dot(p, normals.at(p, i), &accel);
                    second[((p * k + i) * d + a) * d + b] = v;
                    second[((p * k + i) * d + b) * d + a] = v;
                }
            }
        }
        for i in 0..k {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += inverse[(p * d + a) * d + b] * second[((p * k + i) * d + a) * d + b];
                }
            }
            mean[p * k + i] = s;
        }
    }
    let sqrt_det = det.iter().map(|x| x.abs().sqrt()).collect();
    Ok(FundamentalForms { d, k, signature, metric, inverse, det, sqrt_det, second, mean })
}

/// Christoffels, Riemann, Ricci, scalar curvature and Einstein tensor of `γ_ab`.
///
/// The all-lower Riemann tensor is assembled from second derivatives of the
/// metric, so its pair antisymmetries hold to round-off on any grid.
pub fn intrinsic_curvature(chart: &GridChart, forms: &FundamentalForms) -> Result<IntrinsicCurvature, GeometryError> {
    let d = forms.d;
    let nodes = chart.node_count();
    let dg = chart.gradient(&forms.metric, d * d)?;
    let mut ddg = vec![vec![Vec::new(); d]; d];
    for a in 0..d {
        for b in a..d {
            let s = chart.partial(&dg[b], d * d, a)?;
            ddg[b][a] = s.clone();
            ddg[a][b] = s;
        }
    }
    let m = |p: usize, a: usize, b: usize| forms.g(p, a, b);
    let dm = |c: usize, p: usize, a: usize, b: usize| dg[c][(p * d + a) * d + b];
    let ddm = |c: usize, e: usize, p: usize, a: usize, b: usize| ddg[c][e][(p * d + a) * d + b];

    let mut christoffel = vec![0.0; nodes * d * d * d];
    let mut riemann = vec![0.0; nodes * d * d * d * d];
    let mut ricci = vec![0.0; nodes * d * d];
    let mut scalar = vec![0.0; nodes];
    let mut einstein = vec![0.0; nodes * d * d];
    let mut first_kind = vec![0.0; d * d * d];
    for p in 0..nodes {
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    first_kind[(a * d + b) * d + c] = 0.5 * (dm(b, p, a, c) + dm(c, p, a, b) - dm(a, p, b, c));
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let s: f64 = (0..d).map(|e| forms.ginv(p, a, e) * first_kind[(e * d + b) * d + c]).sum();
                    christoffel[((p * d + a) * d + b) * d + c] = s;
                }
            }
        }
        let gam = |a: usize, b: usize, c: usize| christoffel[((p * d + a) * d + b) * d + c];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        // ½(γ_ae,bc + γ_bc,ae − γ_ac,be − γ_be,ac) + γ_fh(Γ^f_bc Γ^h_ae − Γ^f_be Γ^h_ac)
                        let mut v = 0.5
                            * (ddm(b, c, p, a, e) + ddm(a, e, p, b, c) - ddm(b, e, p, a, c) - ddm(a, c, p, b, e));
                        for f in 0..d {
                            for h in 0..d {
                                v += m(p, f, h) * (gam(f, b, c) * gam(h, a, e) - gam(f, b, e) * gam(h, a, c));
                            }
                        }
                        riemann[(((p * d + a) * d + b) * d + c) * d + e] = v;
                    }
                }
            }
        }
        let rie = |a: usize, b: usize, c: usize, e: usize| riemann[(((p * d + a) * d + b) * d + c) * d + e];
        for b in 0..d {
            for e in 0..d {
                let mut s = 0.0;
                for a in 0..d {
                    for c in 0..d {
                        s += forms.ginv(p, a, c) * rie(a, b, c, e);
                    }
                }
                ricci[(p * d + b) * d + e] = s;
            }
        }
        let r: f64 = (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .map(|(a, b)| forms.ginv(p, a, b) * ricci[(p * d + a) * d + b])
            .sum();
        scalar[p] = r;
        for a in 0..d {
            for b in 0..d {
                einstein[(p * d + a) * d + b] = ricci[(p * d + a) * d + b] - 0.5 * m(p, a, b) * r;
            }
        }
    }
    Ok(IntrinsicCurvature { d, christoffel, riemann, ricci, scalar, einstein })
}

/// Twist potential `ω_a^{ij} = g(D_a n^i, n^j)`, its curvature and, for `k = 2`,
/// the scalar `Ω`.
pub fn normal_connection(
    emb: &Embedding,
    e: &TangentFrames,
    normals: &NormalFrame,
    forms: &FundamentalForms,
) -> Result<NormalConnection, GeometryError> {
    let bg = BackgroundSamples::of(emb)?;
    normal_connection_with(emb, &bg, e, normals, forms)
}

fn normal_connection_with(
    emb: &Embedding,
    bg: &BackgroundSamples,
    e: &TangentFrames,
    normals: &NormalFrame,
    forms: &FundamentalForms,
) -> Result<NormalConnection, GeometryError> {
    let (d, n, k, nodes) = (emb.d(), emb.dim(), emb.codim(), emb.nodes());
    let chart = &emb.chart;
    let mut twist = vec![0.0; nodes * d * k * k];
    let dn = chart.gradient(&normals.data, k * n)?;
    for p in 0..nodes {
        for a in 0..d {
            for i in 0..k {
                let mut dni: Vec<f64> = dn[a][(p * k + i) * n..(p * k + i + 1) * n].to_vec();
                if !bg.is_flat() {
                    let c = bg.connection_term(p, e.at(p, a), normals.at(p, i));
                    for (x, y) in dni.iter_mut().zip(c) {
                        *x += y;
                    }
                }
                for j in 0..k {
                    twist[((p * d + a) * k + i) * k + j] = bg.dot(p, &dni, normals.at(p, j));
                }
            }
            // antisymmetrize: exact under frame reordering, and removes the
            // truncation error of ∂g(n_i, n_j) = 0
            for i in 0..k {
                for j in i..k {
                    let (ij, ji) = (((p * d + a) * k + i) * k + j, ((p * d + a) * k + j) * k + i);
                    let v = 0.5 * (twist[ij] - twist[ji]);
                    twist[ij] = v;
                    twist[ji] = -v;
                }
            }
        }
    }
    let curvature = twist_curvature(chart, &twist, d, k)?;
    let scalar = (k == 2).then(|| twist_scalar_from(&curvature, forms, d));
    Ok(NormalConnection { d, k, twist, curvature, scalar })
}

/// `Ω_ab^{ij} = ∂_b ω_a^{ij} - ∂_a ω_b^{ij}`.
pub fn twist_curvature(chart: &GridChart, twist: &[f64], d: usize, k: usize) -> Result<Vec<f64>, GeometryError> {
    let nodes = chart.node_count();
    let dw = chart.gradient(twist, d * k * k)?;
    let mut out = vec![0.0; nodes * d * d * k * k];
    for p in 0..nodes {
        for a in 0..d {
            for b in 0..d {
                for i in 0..k {
                    for j in 0..k {
                        let v = dw[b][((p * d + a) * k + i) * k + j] - dw[a][((p * d + b) * k + i) * k + j];
                        out[(((p * d + a) * d + b) * k + i) * k + j] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn twist_scalar_from(curvature: &[f64], forms: &FundamentalForms, d: usize) -> Vec<f64> {
    let nodes = forms.sqrt_det.len();
    (0..nodes)
        .map(|p| {
            // ½ ε_ij ε^{ab} Ω_ab^{ij} = ε^{ab} Ω_ab^{12} for k = 2
            let o = |a: usize, b: usize| curvature[(((p * d + a) * d + b) * 2) * 2 + 1];
            (o(0, 1) - o(1, 0)) / forms.sqrt_det[p]
        })
        .collect()
}

/// Twist scalar `Ω`; requires codimension two.
pub fn twist_scalar(connection: &NormalConnection) -> Result<&[f64], GeometryError> {
    connection
        .scalar
        .as_deref()
        .ok_or(GeometryError::Codimension { expected: 2, got: connection.k })
}

/// Complete geometry tower of an embedding.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub background: BackgroundSamples,
    pub tangents: TangentFrames,
    pub normals: NormalFrame,
    pub forms: FundamentalForms,
    pub intrinsic: IntrinsicCurvature,
    pub connection: NormalConnection,
}

impl Geometry {
    pub fn new(emb: &Embedding) -> Result<Self, GeometryError> {
        let background = BackgroundSamples::of(emb)?;
        let tangents = tangent_frames(emb)?;
        let (metric, inverse, _, _) = induced_metric(emb, &background, &tangents)?;
        let normals = normal_frame_with(emb, &background, &tangents, &inverse, &metric)?;
        Self::with_normals(emb, background, tangents, normals)
    }

    /// Geometry with a caller-supplied normal frame (e.g. a rotated gauge).
    pub fn with_frame(emb: &Embedding, normals: NormalFrame) -> Result<Self, GeometryError> {
        let background = BackgroundSamples::of(emb)?;
        let tangents = tangent_frames(emb)?;
        Self::with_normals(emb, background, tangents, normals)
    }

    fn with_normals(
        emb: &Embedding,
        background: BackgroundSamples,
        tangents: TangentFrames,
        normals: NormalFrame,
    ) -> Result<Self, GeometryError> {
        let forms = fundamental_forms_with(emb, &background, &tangents, &normals)?;
        let intrinsic = intrinsic_curvature(emb.chart(), &forms)?;
        let connection = normal_connection_with(emb, &background, &tangents, &normals, &forms)?;
        Ok(Self { background, tangents, normals, forms, intrinsic, connection })
    }

    pub fn d(&self) -> usize {
        self.forms.d
    }

    pub fn k(&self) -> usize {
        self.forms.k
    }

    pub fn nodes(&self) -> usize {
        self.forms.sqrt_det.len()
    }

    /// `g(u, v)` in the background at a node.
    pub fn dot(&self, node: usize, u: &[f64], v: &[f64]) -> f64 {
        self.background.dot(node, u, v)
    }

    /// Largest `|G_ab|` over the worldsheet.
    pub fn max_einstein(&self) -> f64 {
        self.intrinsic.einstein.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_ricci(&self) -> f64 {
        self.intrinsic.ricci.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest deviation of `R` from `(K^i)^2 - K_ab^i K^ab_i` (flat backgrounds).
    pub fn gauss_equation_defect(&self) -> f64 {
        let f = &self.forms;
        (0..self.nodes())
            .map(|p| {
                let mut kk = 0.0;
                for i in 0..f.k {
                    kk += f.mean(p, i).powi(2);
                    for a in 0..f.d {
                        for b in 0..f.d {
                            kk -= f.k(p, i, a, b) * f.k_up(p, i, a, b);
                        }
                    }
                }
                (self.intrinsic.scalar[p] - kk).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the frame Gram matrix from `diag(γ_ab, δ_ij)`.
    pub fn frame_defect(&self) -> f64 {
        let (d, k) = (self.d(), self.k());
        let mut worst: f64 = 0.0;
        for p in 0..self.nodes() {
            for i in 0..k {
                for a in 0..d {
                    worst = worst.max(self.dot(p, self.normals.at(p, i), self.tangents.at(p, a)).abs());
                }
                for j in 0..k {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((self.dot(p, self.normals.at(p, i), self.normals.at(p, j)) - target).abs());
                }
            }
        }
        worst
    }

    /// `∇̃_a φ^i` for a normal field `φ` given as `[node][i]`; result `[node][a][i]`.
    pub fn normal_derivative(&self, chart: &GridChart, phi: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let (d, k, nodes) = (self.d(), self.k(), self.nodes());
        let grads = chart.gradient(phi, k)?;
        let mut out = vec![0.0; nodes * d * k];
        for p in 0..nodes {
            for a in 0..d {
                for i in 0..k {
                    // g(n^i, D_a n^j) = -ω_a^{ij}
                    let mut v = grads[a][p * k + i];
                    for j in 0..k {
                        v -= self.connection.omega(p, a, i, j) * phi[p * k + j];
                    }
                    out[(p * d + a) * k + i] = v;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Axis;
    use crate::surfaces;
    use std::f64::consts::PI;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn static_cylinder_frames_and_forms() {
        let r = 1.5;
        let emb = surfaces::static_cylinder(r, 32, 48).unwrap();
        let g = Geometry::new(&emb).unwrap();
        for p in 0..emb.nodes() {
            let s = emb.chart().coords(p)[1];
            let et = g.tangents.at(p, 0);
            let es = g.tangents.at(p, 1);
            let want_s = [0.0, -r * s.sin(), r * s.cos(), 0.0];
            for m in 0..4 {
                assert!((et[m] - [1.0, 0.0, 0.0, 0.0][m]).abs() < 1e-9);
                assert!((es[m] - want_s[m]).abs() < 1e-12);
            }
            assert!((g.forms.g(p, 0, 0) + 1.0).abs() < 1e-9);
            assert!((g.forms.g(p, 1, 1) - r * r).abs() < 1e-12);
            // outward radial normal, then -z for a positively oriented frame
            let n1 = g.normals.at(p, 0);
            assert!((n1[1] - s.cos()).abs() < 1e-9 && (n1[2] - s.sin()).abs() < 1e-9);
            assert!((g.normals.at(p, 1)[3] + 1.0).abs() < 1e-12);
            assert!((g.forms.mean(p, 0) - 1.0 / r).abs() < 1e-9);
            assert!(g.forms.mean(p, 1).abs() < 1e-12);
        }
        assert!(g.frame_defect() < 1e-10);
    }

    #[test]
    fn flat_plane_is_flat() {
        let emb = surfaces::flat_plane(16).unwrap();
        let g = Geometry::new(&emb).unwrap();
        assert!(max_abs(&g.forms.second) < 1e-12);
        assert!(max_abs(&g.intrinsic.scalar) < 1e-8, "{}", max_abs(&g.intrinsic.scalar));
        assert!(max_abs(&g.intrinsic.einstein) < 1e-12);
        assert!(max_abs(&g.connection.twist) < 1e-12);
        assert!(max_abs(twist_scalar(&g.connection).unwrap()) < 1e-12);
        for p in 0..emb.nodes() {
            assert_eq!(g.normals.at(p, 0), &[0.0, 0.0, 1.0, 0.0]);
            assert_eq!(g.normals.at(p, 1), &[0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn gauge_rotated_plane_has_pure_gauge_twist() {
        let emb = surfaces::flat_plane(64).unwrap();
        let g0 = Geometry::new(&emb).unwrap();
        let alpha = emb.chart().sample(|x| 0.3 * x[1].sin() + 0.1 * (2.0 * x[1]).cos());
        let g = Geometry::with_frame(&emb, g0.normals.rotated(&alpha)).unwrap();
        for p in 0..emb.nodes() {
            let s = emb.chart().coords(p)[1];
            let dalpha = 0.3 * s.cos() - 0.2 * (2.0 * s).sin();
            // ω_σ^{12} = g(∂n_1, n_2) = ∂α for this rotation
            assert!((g.connection.omega(p, 1, 0, 1) - dalpha).abs() < 1e-6);
            assert!(g.connection.omega(p, 0, 0, 1).abs() < 1e-12);
        }
        assert!(max_abs(twist_scalar(&g.connection).unwrap()) < 1e-9);
    }

    #[test]
    fn oscillating_string_is_extremal_and_conformal() {
        let emb = surfaces::oscillating_string(64, 64, 1.0, 8).unwrap();
        let g = Geometry::new(&emb).unwrap();
        assert_eq!(g.forms.signature, WorldsheetSignature::Lorentzian);
        assert!(max_abs(&g.forms.mean) <= 1e-6, "{}", max_abs(&g.forms.mean));
        for p in 0..emb.nodes() {
            assert!(g.dot(p, g.tangents.at(p, 0), g.tangents.at(p, 1)).abs() < 1e-9);
        }
        assert!(g.frame_defect() < 1e-10);
    }

    #[test]
    fn round_sphere_scalar_curvature() {
        let r = 1.3;
        for n in [128, 256] {
            let emb = surfaces::round_sphere(r, 0.1, n, 64).unwrap();
            let g = Geometry::new(&emb).unwrap();
            let err = g.intrinsic.scalar.iter().map(|s| (s - 2.0 / (r * r)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "n = {n}: {err}");
        }
    }

    #[test]
    fn einstein_tensor_vanishes_in_two_dimensions_only() {
        let torus = surfaces::torus_of_revolution(2.0, 0.7, 48).unwrap();
        let g = Geometry::new(&torus).unwrap();
        assert!(g.max_ricci() > 0.1);
        assert!(g.max_einstein() <= 1e-8 * (1.0 + g.max_ricci()));
        let control = surfaces::torus_times_circle(2.0, 0.7, 1.0, 16).unwrap();
        let g3 = Geometry::new(&control).unwrap();
        assert!(g3.max_einstein() > 1e-2);
    }

    #[test]
    fn gauss_equation_holds_on_flat_backgrounds() {
        let torus = surfaces::torus_of_revolution(2.0, 0.7, 64).unwrap();
        let g = Geometry::new(&torus).unwrap();
        assert!(g.gauss_equation_defect() < 1e-9, "{}", g.gauss_equation_defect());
        let string = surfaces::oscillating_string(64, 64, 1.0, 8).unwrap();
        let gs = Geometry::new(&string).unwrap();
        assert!(gs.gauss_equation_defect() < 1e-5, "{}", gs.gauss_equation_defect());
    }

    #[test]
    fn gauge_rotation_leaves_twist_curvature_invariant() {
        let emb = surfaces::clifford_torus(48).unwrap();
        let g0 = Geometry::new(&emb).unwrap();
        let alpha = emb.chart().sample(|x| 0.7 * (x[0] + 2.0 * x[1]).sin() + 0.2 * x[1].cos());
        let g1 = Geometry::with_frame(&emb, g0.normals.rotated(&alpha)).unwrap();
        let diff = g0
            .connection
            .curvature
            .iter()
            .zip(&g1.connection.curvature)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
        // the potential itself shifts by the gradient of the angle
        let da = emb.chart().gradient(&alpha, 1).unwrap();
        for p in 0..emb.nodes() {
            for a in 0..2 {
                let shift = g1.connection.omega(p, a, 0, 1) - g0.connection.omega(p, a, 0, 1);
                assert!((shift - da[a][p]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_reversal_flips_twist_scalar() {
        let emb = surfaces::whitney_sphere(0.2, 32, 32).unwrap();
        let g0 = Geometry::new(&emb).unwrap();
        let g1 = Geometry::with_frame(&emb, g0.normals.reversed()).unwrap();
        let a = twist_scalar(&g0.connection).unwrap();
        let b = twist_scalar(&g1.connection).unwrap();
        assert!(a.iter().zip(b).all(|(x, y)| x == &-y));
    }

    #[test]
    fn degenerate_and_codimension_errors() {
        let chart = GridChart::new(vec![Axis::periodic(0.0, 2.0 * PI, 8), Axis::periodic(0.0, 2.0 * PI, 8)]).unwrap();
        let emb = Embedding::from_fn(chart.clone(), BackgroundSpacetime::euclidean(3), |x| vec![x[0].cos(), x[0].sin(), 0.0])
            .unwrap();
        assert!(matches!(Geometry::new(&emb), Err(GeometryError::DegenerateMetric { .. })));
        assert!(matches!(
            Embedding::from_fn(chart, BackgroundSpacetime::euclidean(2), |x| x.to_vec()),
            Err(GeometryError::NoCodimension { .. })
        ));
        let surf = surfaces::torus_of_revolution_in(BackgroundSpacetime::euclidean(3), 2.0, 1.0, 16).unwrap();
        let g = Geometry::new(&surf).unwrap();
        assert!(matches!(twist_scalar(&g.connection), Err(GeometryError::Codimension { expected: 2, got: 1 })));
    }
}
