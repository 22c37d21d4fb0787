//! Points of the covariant phase space: exact closed-string solutions built
//! from left- and right-moving generator curves, and relaxed Euclidean
//! minimal surfaces.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::background::BackgroundSpacetime;
use crate::chart::{Axis, ChartError, GridChart};
use crate::geometry::{self, Embedding, Geometry, GeometryError, WorldsheetSignature};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("curve speed vanishes at sample {node}")]
    VanishingSpeed { node: usize },
    #[error("cusp: det γ = {det:e} at τ = {tau}, σ = {sigma}")]
    Cusp { tau: f64, sigma: f64, det: f64 },
    #[error("generator curves must live in {expected} dimensions, got {got}")]
    GeneratorDimension { got: usize, expected: usize },
    #[error("relaxation did not reach residual {target:e} in {iterations} iterations (last {last:e})")]
    NonConvergence { iterations: usize, target: f64, last: f64, residuals: Vec<f64> },
    #[error("area increased at iteration {iteration} after 10 step halvings")]
    Unstable { iteration: usize, areas: Vec<f64> },
    #[error("surface degenerated at iteration {iteration}: {source}")]
    Collapse { iteration: usize, areas: Vec<f64>, source: GeometryError },
    #[error("relaxation needs a Euclidean worldsheet in a flat background")]
    NotEuclidean,
}

/// Fourier coefficients below this fraction of the largest are treated as round-off.
const COEFFICIENT_FLOOR: f64 = 3e-16;

/// Closed curve `[0, 2π) → R^m` held by its Fourier coefficients, so it can
/// be evaluated and differentiated anywhere.
#[derive(Debug, Clone)]
pub struct TrigCurve {
    m: usize,
    n: usize,
    /// Per component, normalised DFT coefficients in FFT order.
    coeffs: Vec<Vec<Complex64>>,
}

impl TrigCurve {
    /// From `n` uniform samples `c(2πj/n)`, node-major with `m` components.
    pub fn from_samples(samples: &[f64], m: usize) -> Self {
        let n = samples.len() / m;
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let mut coeffs: Vec<Vec<Complex64>> = (0..m)
            .map(|c| {
                let mut buf: Vec<Complex64> = (0..n).map(|j| Complex64::new(samples[j * m + c], 0.0)).collect();
                fft.process(&mut buf);
                buf.iter().map(|z| z / n as f64).collect()
            })
            .collect();
        // drop round-off noise, which derivatives would amplify by k^order
        let peak = coeffs.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        for z in coeffs.iter_mut().flatten() {
            if z.norm() < COEFFICIENT_FLOOR * peak {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        Self { m, n, coeffs }
    }

    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(n: usize, m: usize, f: F) -> Self {
        let mut samples = Vec::with_capacity(n * m);
        for j in 0..n {
            samples.extend(f(2.0 * PI * j as f64 / n as f64));
        }
        Self::from_samples(&samples, m)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn wavenumber(&self, j: usize) -> f64 {
        if j <= self.n / 2 { j as f64 } else { j as f64 - self.n as f64 }
    }

    /// `d^order c / du^order` at `u`; the Nyquist mode is kept (as a cosine)
    /// for values and dropped for derivatives.
    pub fn eval_derivative(&self, u: f64, order: u32) -> Vec<f64> {
        let n = self.n;
        let step = Complex64::from_polar(1.0, u);
        let mut out = vec![0.0; self.m];
        let mut phase = Complex64::new(1.0, 0.0);
        for j in 0..=n / 2 {
            let k = self.wavenumber(j);
            let nyquist = n % 2 == 0 && j == n / 2;
            if nyquist && order > 0 {
                break;
            }
            let factor = Complex64::new(0.0, k).powu(order);
            for (c, o) in out.iter_mut().enumerate() {
                if j == 0 {
                    *o += (self.coeffs[c][0] * factor).re;
                } else if nyquist {
                    *o += (self.coeffs[c][j] * phase).re;
                } else {
                    // conjugate pair j, n - j
                    *o += 2.0 * (self.coeffs[c][j] * factor * phase).re;
                }
            }
            phase *= step;
        }
        out
    }

    pub fn eval(&self, u: f64) -> Vec<f64> {
        self.eval_derivative(u, 0)
    }

    /// Samples at `n` uniform nodes.
    pub fn samples(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.n * self.m);
        for j in 0..self.n {
            s.extend(self.eval(2.0 * PI * j as f64 / self.n as f64));
        }
        s
    }

    /// `Σ c_k curve_k` for curves of equal length and dimension.
    pub fn combine(terms: &[(f64, &TrigCurve)]) -> Self {
        let (m, n) = (terms[0].1.m, terms[0].1.n);
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        for (f, c) in terms {
            for (acc, src) in coeffs.iter_mut().zip(&c.coeffs) {
                for (a, z) in acc.iter_mut().zip(src) {
                    *a += z * *f;
                }
            }
        }
        Self { m, n, coeffs }
    }

    /// Uniformly scaled copy.
    pub fn scaled(&self, f: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c.iter().map(|z| z * f).collect()).collect(),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Resamples a closed curve (uniform samples on `[0, 2π)`, `m` components)
/// so that it is traversed at constant speed `L / 2π`. The start point is kept.
pub fn unit_speed_reparametrize(samples: &[f64], m: usize) -> Result<Vec<f64>, DynamicsError> {
    let curve = TrigCurve::from_samples(samples, m);
    Ok(constant_speed(&curve)?.0.samples())
}

/// Constant-speed resampling of a curve; returns the new curve and its length.
fn constant_speed(curve: &TrigCurve) -> Result<(TrigCurve, f64), DynamicsError> {
    let n = curve.len();
    let h = 2.0 * PI / n as f64;
    let speed: Vec<f64> = (0..n).map(|j| norm(&curve.eval_derivative(j as f64 * h, 1))).collect();
    let vmax = speed.iter().cloned().fold(0.0, f64::max);
    if let Some(node) = speed.iter().position(|&v| v <= 1e-10 * vmax.max(f64::MIN_POSITIVE)) {
        return Err(DynamicsError::VanishingSpeed { node });
    }
    let s = TrigCurve::from_samples(&speed, 1);
    let mean = s.coeffs[0][0].re;
    let length = 2.0 * PI * mean;
    // S(u) = mean·u + P(u), P' = speed - mean, P(0) = 0
    let mut pc = s.clone();
    for j in 0..n {
        let k = pc.wavenumber(j);
        let nyquist = n % 2 == 0 && j == n / 2;
        pc.coeffs[0][j] = if j == 0 || nyquist { Complex64::new(0.0, 0.0) } else { s.coeffs[0][j] / Complex64::new(0.0, k) };
    }
    let p0 = pc.eval(0.0)[0];
    let arclength = |u: f64| mean * u + pc.eval(u)[0] - p0;
    let rate = |u: f64| s.eval(u)[0];
    let mut out = Vec::with_capacity(n * curve.dim());
    for j in 0..n {
        let target = length * j as f64 / n as f64;
        let mut u = target / mean;
        for _ in 0..50 {
            let du = (arclength(u) - target) / rate(u);
            u -= du;
            if du.abs() < 1e-15 {
                break;
            }
        }
        out.extend(curve.eval(u));
    }
    Ok((TrigCurve::from_samples(&out, curve.dim()), length))
}

/// Generator curve `(λ, u) ↦ R^{N-1}`.
pub type GeneratorFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Normal-frame reference fields `(ξ, X) ↦ k·N` values.
pub type ReferenceFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Chart of a closed-string worldsheet: open τ window, periodic σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringChart {
    pub nt: usize,
    pub ns: usize,
    pub tau: (f64, f64),
    pub order: usize,
}

impl StringChart {
    pub fn build(&self) -> Result<GridChart, ChartError> {
        GridChart::new(vec![
            Axis::open_with_order(self.tau.0, self.tau.1, self.nt, self.order),
            Axis::periodic(0.0, 2.0 * PI, self.ns),
        ])
    }
}

/// Family of closed-string solutions `X⁰ = τ`, `X⃗ = ½(a(τ+σ) + b(τ−σ))` in flat
/// Minkowski space, with generators re-parametrised to unit speed.
#[derive(Clone)]
pub struct SolutionFamily {
    pub parameters: usize,
    /// Spatial dimension `N - 1`.
    pub space_dim: usize,
    pub left: GeneratorFn,
    pub right: GeneratorFn,
    pub chart: StringChart,
    /// Fourier samples used for the generator curves.
    pub samples: usize,
    pub reference: Option<ReferenceFn>,
    pub degenerate_threshold: f64,
}

impl std::fmt::Debug for SolutionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionFamily")
            .field("parameters", &self.parameters)
            .field("space_dim", &self.space_dim)
            .field("chart", &self.chart)
            .field("samples", &self.samples)
            .finish()
    }
}

/// One member of a [`SolutionFamily`], evaluable anywhere on the worldsheet.
#[derive(Debug, Clone)]
pub struct SolutionMember {
    pub left: TrigCurve,
    pub right: TrigCurve,
}

impl SolutionMember {
    pub fn position(&self, tau: f64, sigma: f64) -> Vec<f64> {
        let a = self.left.eval(tau + sigma);
        let b = self.right.eval(tau - sigma);
        let mut x = Vec::with_capacity(a.len() + 1);
        x.push(tau);
        x.extend(a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)));
        x
    }

    /// `(∂_τ X, ∂_σ X)` and `(∂_ττ X, ∂_τσ X, ∂_σσ X)` at a point.
    pub fn jets(&self, tau: f64, sigma: f64) -> ([Vec<f64>; 2], [Vec<f64>; 3]) {
        let (u, v) = (tau + sigma, tau - sigma);
        let (da, db) = (self.left.eval_derivative(u, 1), self.right.eval_derivative(v, 1));
        let (dda, ddb) = (self.left.eval_derivative(u, 2), self.right.eval_derivative(v, 2));
        let comb = |t: f64, p: &[f64], q: &[f64], s: f64| {
            let mut x = vec![t];
            x.extend(p.iter().zip(q).map(|(a, b)| 0.5 * (a + s * b)));
            x
        };
        (
            [comb(1.0, &da, &db, 1.0), comb(0.0, &da, &db, -1.0)],
            [comb(0.0, &dda, &ddb, 1.0), comb(0.0, &dda, &ddb, -1.0), comb(0.0, &dda, &ddb, 1.0)],
        )
    }

    /// `det γ = -¼ (1 - a'·b')²` for unit-speed generators.
    pub fn metric_det(&self, tau: f64, sigma: f64) -> f64 {
        let da = self.left.eval_derivative(tau + sigma, 1);
        let db = self.right.eval_derivative(tau - sigma, 1);
        let dot: f64 = da.iter().zip(&db).map(|(p, q)| p * q).sum();
        -0.25 * (1.0 - dot).powi(2)
    }
}

impl SolutionFamily {
    pub fn new(parameters: usize, space_dim: usize, left: GeneratorFn, right: GeneratorFn, chart: StringChart) -> Self {
        Self {
            parameters,
            space_dim,
            left,
            right,
            chart,
            samples: 256,
            reference: None,
            degenerate_threshold: geometry::DEGENERATE_THRESHOLD,
        }
    }

    pub fn with_reference(mut self, reference: ReferenceFn) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_chart(mut self, chart: StringChart) -> Self {
        self.chart = chart;
        self
    }

    fn generator(&self, g: &GeneratorFn, lambda: &[f64]) -> Result<TrigCurve, DynamicsError> {
        let raw = TrigCurve::from_fn(self.samples, self.space_dim, |u| g(lambda, u));
        if raw.dim() != self.space_dim || g(lambda, 0.0).len() != self.space_dim {
            return Err(DynamicsError::GeneratorDimension { got: g(lambda, 0.0).len(), expected: self.space_dim });
        }
        // a second pass removes the residual speed variation of the first
        let (c, _) = constant_speed(&raw)?;
        let (c, length) = constant_speed(&c)?;
        Ok(c.scaled(2.0 * PI / length))
    }

    /// Unit-speed generators at `λ`, checked for cusps on the chart.
    pub fn member(&self, lambda: &[f64]) -> Result<SolutionMember, DynamicsError> {
        let m = SolutionMember { left: self.generator(&self.left, lambda)?, right: self.generator(&self.right, lambda)? };
        let chart = self.chart.build()?;
        for p in 0..chart.node_count() {
            let x = chart.coords(p);
            let det = m.metric_det(x[0], x[1]);
            if det.abs() < self.degenerate_threshold {
                return Err(DynamicsError::Cusp { tau: x[0], sigma: x[1], det });
            }
        }
        Ok(m)
    }

    /// Embedding of a member on the family chart, optionally with the chart
    /// coordinates warped node by node before evaluation: `X(w(p, ξ_p))`.
    pub fn embed_member(
        &self,
        member: &SolutionMember,
        warp: Option<&dyn Fn(usize, &[f64]) -> [f64; 2]>,
    ) -> Result<Embedding, DynamicsError> {
        let chart = self.chart.build()?;
        let mut points = Vec::with_capacity(chart.node_count() * (self.space_dim + 1));
        for p in 0..chart.node_count() {
            let x = chart.coords(p);
            let y = warp.map_or([x[0], x[1]], |w| w(p, &x));
            points.extend(member.position(y[0], y[1]));
        }
        let mut emb = Embedding::new(chart.clone(), BackgroundSpacetime::minkowski(self.space_dim + 1), points)?
            .with_degenerate_threshold(self.degenerate_threshold);
        if warp.is_none() {
            let (mut first, mut second) = (Vec::new(), Vec::new());
            for p in 0..chart.node_count() {
                let x = chart.coords(p);
                let ([t, s], [tt, ts, ss]) = member.jets(x[0], x[1]);
                first.extend(t.iter().chain(&s));
                second.extend(tt.iter().chain(&ts).chain(&ts).chain(&ss));
            }
            emb = emb.with_jets(geometry::Jets { first, second })?;
        }
        Ok(match &self.reference {
            Some(r) => {
                let r = r.clone();
                emb.with_reference_fn(move |x, p| r(x, p))
            }
            None => emb,
        })
    }
}

/// Family tangent `V = ∂X/∂λ_k` on the family chart with its chart derivatives,
/// from fourth-order differences of the generator curves.
#[derive(Debug, Clone)]
pub struct TangentField {
    /// `V` at `[node][μ]`.
    pub values: Vec<f64>,
    /// `∂_a V` at `[node][a][μ]`.
    pub derivatives: Vec<f64>,
}

impl SolutionFamily {
    pub fn tangent_field(&self, lambda0: &[f64], dir: usize, h: f64) -> Result<TangentField, DynamicsError> {
        let at = |s: f64| {
            let mut l = lambda0.to_vec();
            l[dir] += s;
            self.member(&l)
        };
        let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
        let w = 1.0 / (12.0 * h);
        let diff = |f: fn(&SolutionMember) -> &TrigCurve| {
            TrigCurve::combine(&[(8.0 * w, f(&p1)), (-8.0 * w, f(&m1)), (-w, f(&p2)), (w, f(&m2))])
        };
        let (da, db) = (diff(|m| &m.left), diff(|m| &m.right));
        let chart = self.chart.build()?;
        let n = self.space_dim + 1;
        let mut values = Vec::with_capacity(chart.node_count() * n);
        let mut derivatives = Vec::with_capacity(chart.node_count() * 2 * n);
        for p in 0..chart.node_count() {
            let x = chart.coords(p);
            let (u, v) = (x[0] + x[1], x[0] - x[1]);
            let (a, b) = (da.eval(u), db.eval(v));
            let (a1, b1) = (da.eval_derivative(u, 1), db.eval_derivative(v, 1));
            values.push(0.0);
            values.extend(a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)));
            derivatives.push(0.0);
            derivatives.extend(a1.iter().zip(&b1).map(|(p, q)| 0.5 * (p + q)));
            derivatives.push(0.0);
            derivatives.extend(a1.iter().zip(&b1).map(|(p, q)| 0.5 * (p - q)));
        }
        Ok(TangentField { values, derivatives })
    }
}

/// Member of a family at `λ` as an embedding.
pub fn closed_string_solution(family: &SolutionFamily, lambda: &[f64]) -> Result<Embedding, DynamicsError> {
    let m = family.member(lambda)?;
    family.embed_member(&m, None)
}

/// `max ‖K^i‖` over the nodes.
pub fn extremality_residual(emb: &Embedding) -> Result<f64, DynamicsError> {
    let e = geometry::tangent_frames(emb)?;
    let n = geometry::normal_frame(emb, &e)?;
    let f = geometry::fundamental_forms(emb, &e, &n)?;
    Ok(max_mean_norm(&f.mean, f.k, None))
}

fn max_mean_norm(mean: &[f64], k: usize, mask: Option<&[bool]>) -> f64 {
    mean.chunks(k)
        .enumerate()
        .filter(|(p, _)| mask.is_none_or(|m| m[*p]))
        .map(|(_, c)| norm(c))
        .fold(0.0, f64::max)
}

/// Action couplings `σ₀` (area), `σ₁` (Gauss–Bonnet), `σ₂` (twist).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl Default for Couplings {
    fn default() -> Self {
        Self { sigma0: 1.0, sigma1: 0.0, sigma2: 0.0 }
    }
}

/// Residual of the field equations of the full action,
/// `max ‖σ₀ K^i + 2σ₁ G_ab K^{ab i}‖ / |σ₀|`. The twist term is a total
/// derivative and contributes nothing.
pub fn field_equation_residual(geom: &Geometry, couplings: Couplings) -> f64 {
    let f = &geom.forms;
    let (d, k) = (f.d, f.k);
    let mut worst: f64 = 0.0;
    for p in 0..geom.nodes() {
        let mut s = 0.0;
        for i in 0..k {
            let mut gk = 0.0;
            for a in 0..d {
                for b in 0..d {
                    gk += geom.intrinsic.einstein[(p * d + a) * d + b] * f.k_up(p, i, a, b);
                }
            }
            s += (couplings.sigma0 * f.mean(p, i) + 2.0 * couplings.sigma1 * gk).powi(2);
        }
        worst = worst.max(s.sqrt());
    }
    worst / couplings.sigma0.abs()
}

/// `∫ √|γ|`.
pub fn area(emb: &Embedding) -> Result<f64, DynamicsError> {
    let e = geometry::tangent_frames(emb)?;
    let bg = geometry::BackgroundSamples::of(emb)?;
    let d = emb.d();
    let density: Vec<f64> = (0..emb.nodes())
        .map(|p| {
            let mut m = nalgebra::DMatrix::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    m[(a, b)] = bg.dot(p, e.at(p, a), e.at(p, b));
                }
            }
            m.determinant().abs().sqrt()
        })
        .collect();
    Ok(emb.chart().integrate(&density)?)
}

/// Mean-curvature relaxation towards a Euclidean minimal surface.
#[derive(Debug, Clone)]
pub struct RelaxationProblem {
    pub initial: Embedding,
    /// Hold the end nodes of every open axis fixed.
    pub fixed_boundary: bool,
    /// Step size; `None` uses `h²/4` with `h` the smallest physical node spacing.
    pub step: Option<f64>,
    pub max_iterations: usize,
    pub target_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxationOutcome {
    pub embedding: Embedding,
    pub iterations: usize,
    pub step: f64,
    /// Area after each accepted step (index 0 is the initial area).
    pub areas: Vec<f64>,
    pub residuals: Vec<f64>,
}

struct FlowState {
    mean: Vec<f64>,
    normals: Vec<f64>,
    area: f64,
}

fn flow_state(emb: &Embedding) -> Result<FlowState, GeometryError> {
    let e = geometry::tangent_frames(emb)?;
    let n = geometry::normal_frame(emb, &e)?;
    let f = geometry::fundamental_forms(emb, &e, &n)?;
    let area = emb.chart().integrate(&f.sqrt_det)?;
    Ok(FlowState { mean: f.mean, normals: n.data, area })
}

fn movable_mask(chart: &GridChart, fixed_boundary: bool) -> Vec<bool> {
    (0..chart.node_count())
        .map(|p| {
            !fixed_boundary
                || chart
                    .multi_index(p)
                    .iter()
                    .zip(chart.axes())
                    .all(|(&i, ax)| ax.is_periodic() || (i != 0 && i + 1 != ax.nodes))
        })
        .collect()
}

fn smallest_spacing(emb: &Embedding) -> Result<f64, GeometryError> {
    let e = geometry::tangent_frames(emb)?;
    let bg = geometry::BackgroundSamples::of(emb)?;
    let mut h = f64::INFINITY;
    for p in 0..emb.nodes() {
        for a in 0..emb.d() {
            let len = bg.dot(p, e.at(p, a), e.at(p, a)).abs().sqrt();
            h = h.min(len * emb.chart().axis(a).spacing());
        }
    }
    Ok(h)
}

/// Explicit flow `X ← X − η K^i n_i`; residual is measured on the movable nodes.
pub fn relax_minimal_surface(prob: &RelaxationProblem) -> Result<RelaxationOutcome, DynamicsError> {
    let emb0 = &prob.initial;
    if !emb0.background().is_flat() || emb0.background().signature().iter().any(|&s| s < 0.0) {
        return Err(DynamicsError::NotEuclidean);
    }
    let mask = movable_mask(emb0.chart(), prob.fixed_boundary);
    let (k, n) = (emb0.codim(), emb0.dim());
    let mut step = match prob.step {
        Some(s) => s,
        None => smallest_spacing(emb0)?.powi(2) / 4.0,
    };
    let mut emb = emb0.clone();
    let mut state = flow_state(&emb)?;
    if Geometry::new(&emb).map(|g| g.forms.signature) == Ok(WorldsheetSignature::Lorentzian) {
        return Err(DynamicsError::NotEuclidean);
    }
    let mut areas = vec![state.area];
    let mut residuals = vec![max_mean_norm(&state.mean, k, Some(&mask))];
    let mut iterations = 0;
    while residuals[residuals.len() - 1] > prob.target_residual {
        if iterations == prob.max_iterations {
            return Err(DynamicsError::NonConvergence {
                iterations,
                target: prob.target_residual,
                last: residuals[residuals.len() - 1],
                residuals,
            });
        }
        iterations += 1;
        let mut halvings = 0;
        loop {
            let mut pts = emb.points().to_vec();
            for p in (0..emb.nodes()).filter(|&p| mask[p]) {
                for i in 0..k {
                    let kn = state.mean[p * k + i];
                    for m in 0..n {
                        pts[p * n + m] -= step * kn * state.normals[(p * k + i) * n + m];
                    }
                }
            }
            let trial = emb.with_points(pts)?;
            let next = flow_state(&trial).map_err(|source| DynamicsError::Collapse {
                iteration: iterations,
                areas: areas.clone(),
                source,
            })?;
            if next.area <= state.area {
                emb = trial;
                state = next;
                break;
            }
            halvings += 1;
            if halvings > 10 {
                return Err(DynamicsError::Unstable { iteration: iterations, areas });
            }
            step /= 2.0;
        }
        areas.push(state.area);
        residuals.push(max_mean_norm(&state.mean, k, Some(&mask)));
    }
    Ok(RelaxationOutcome { embedding: emb, iterations, step, areas, residuals })
}

/// Waist radius `c` of the catenoid `r = c cosh(z/c)` spanning two coaxial
/// rings of radius `radius` at `z = ±half_gap` (the stable branch).
pub fn catenoid_waist(radius: f64, half_gap: f64) -> f64 {
    // c cosh(h/c) = R, stable branch has the larger c
    let f = |c: f64| c * (half_gap / c).cosh() - radius;
    let (mut lo, mut hi) = (half_gap / 1.2, radius);
    // f(lo) < 0 at the turning point region, f(R) > 0
    let mut best = lo;
    let mut x = lo;
    while x < radius {
        if f(x) < f(best) {
            best = x;
        }
        x += 1e-3 * radius;
    }
    lo = best;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Area of the catenoid between the rings.
pub fn catenoid_area(radius: f64, half_gap: f64) -> f64 {
    let c = catenoid_waist(radius, half_gap);
    2.0 * PI * c * (half_gap + 0.5 * c * (2.0 * half_gap / c).sinh())
}

/// Cylinder of the given radius between `z = ±half_gap` in `R^3`
/// (`nz` open nodes, `nphi` periodic).
pub fn ring_cylinder(radius: f64, half_gap: f64, nz: usize, nphi: usize, order: usize) -> Result<Embedding, DynamicsError> {
    let chart = GridChart::new(vec![
        Axis::open_with_order(-half_gap, half_gap, nz, order),
        Axis::periodic(0.0, 2.0 * PI, nphi),
    ])?;
    Ok(Embedding::from_fn(chart, BackgroundSpacetime::euclidean(3), |x| {
        vec![radius * x[1].cos(), radius * x[1].sin(), x[0]]
    })?
    .with_reference_fn(|x, _| vec![x[1].cos(), x[1].sin(), 0.0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces;

    fn circle_family(chart: StringChart) -> SolutionFamily {
        let left: GeneratorFn = Arc::new(|_, u| vec![u.cos(), u.sin(), 0.0]);
        let right: GeneratorFn = Arc::new(|_, v| vec![v.cos(), -v.sin(), 0.0]);
        SolutionFamily::new(0, 3, left, right, chart)
            .with_reference(Arc::new(|x, _| vec![0.0, x[1].cos(), x[1].sin(), 0.0, 0.0, 0.0, 0.0, 1.0]))
    }

    const CHART: StringChart = StringChart { nt: 64, ns: 64, tau: (-1.0, 1.0), order: 8 };

    #[test]
    fn trig_curve_interpolates_and_differentiates() {
        let c = TrigCurve::from_fn(32, 2, |u| vec![(2.0 * u).cos(), u.sin().exp()]);
        for u in [0.1, 1.7, 4.0] {
            let v = c.eval(u);
            assert!((v[0] - (2.0 * u).cos()).abs() < 1e-13);
            assert!((v[1] - u.sin().exp()).abs() < 1e-10);
            let d = c.eval_derivative(u, 1);
            assert!((d[0] + 2.0 * (2.0 * u).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn reparametrization() {
        let n = 256;
        let circle: Vec<f64> = (0..n).flat_map(|j| {
            let u = 2.0 * PI * j as f64 / n as f64;
            [u.cos(), u.sin(), 0.0]
        }).collect();
        let out = unit_speed_reparametrize(&circle, 3).unwrap();
        assert!(out.iter().zip(&circle).all(|(a, b)| (a - b).abs() < 1e-12));

        let ellipse: Vec<f64> = (0..n).flat_map(|j| {
            let u = 2.0 * PI * j as f64 / n as f64;
            [2.0 * u.cos(), u.sin(), 0.0]
        }).collect();
        let out = unit_speed_reparametrize(&ellipse, 3).unwrap();
        let c = TrigCurve::from_samples(&out, 3);
        let speeds: Vec<f64> = (0..n).map(|j| norm(&c.eval_derivative(2.0 * PI * j as f64 / n as f64, 1))).collect();
        let mean = speeds.iter().sum::<f64>() / n as f64;
        assert!(speeds.iter().all(|s| (s - mean).abs() < 1e-8), "{:e}", speeds.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max));
        let again = unit_speed_reparametrize(&out, 3).unwrap();
        assert!(again.iter().zip(&out).all(|(a, b)| (a - b).abs() < 1e-10));

        let mut stalled = circle.clone();
        for j in 0..n {
            let u = 2.0 * PI * j as f64 / n as f64;
            let t = u - u.sin();
            stalled[3 * j] = t.cos();
            stalled[3 * j + 1] = t.sin();
        }
        assert!(matches!(unit_speed_reparametrize(&stalled, 3), Err(DynamicsError::VanishingSpeed { .. })));
    }

    #[test]
    fn oscillating_string_solution() {
        let fam = circle_family(CHART);
        let emb = closed_string_solution(&fam, &[]).unwrap();
        let reference = surfaces::oscillating_string(64, 64, 1.0, 8).unwrap();
        let diff = emb.points().iter().zip(reference.points()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
        assert!(extremality_residual(&emb).unwrap() <= 1e-6);
        let g = Geometry::new(&emb).unwrap();
        for p in 0..emb.nodes() {
            let (et, es) = (g.tangents.at(p, 0), g.tangents.at(p, 1));
            let plus: Vec<f64> = et.iter().zip(es).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = et.iter().zip(es).map(|(a, b)| a - b).collect();
            assert!(g.dot(p, &plus, &plus).abs() < 1e-8 && g.dot(p, &minus, &minus).abs() < 1e-8);
        }
    }

    #[test]
    fn coincident_movers_form_a_cusp() {
        let left: GeneratorFn = Arc::new(|_, u| vec![u.cos(), u.sin(), 0.0]);
        let fam = SolutionFamily::new(0, 3, left.clone(), left, CHART);
        match closed_string_solution(&fam, &[]) {
            Err(DynamicsError::Cusp { sigma, .. }) => assert!(sigma.abs() < 1e-12 || (sigma - PI).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wobbled_generator_stays_extremal() {
        let left: GeneratorFn = Arc::new(|_, u| {
            let w = 0.1 * (3.0 * u).cos();
            vec![u.cos(), u.sin(), w]
        });
        let right: GeneratorFn = Arc::new(|_, v| vec![v.cos(), -v.sin(), 0.0]);
        let chart = StringChart { tau: (-0.5, 0.5), ..CHART };
        let fam = SolutionFamily::new(0, 3, left, right, chart)
            .with_reference(Arc::new(|x, _| vec![0.0, x[1].cos(), x[1].sin(), 0.0, 0.0, 0.0, 0.0, 1.0]));
        let emb = closed_string_solution(&fam, &[]).unwrap();
        let r = extremality_residual(&emb).unwrap();
        assert!(r <= 1e-5, "{r:e}");
    }

    #[test]
    fn plane_and_cylinder_residuals() {
        assert!(extremality_residual(&surfaces::flat_plane(16).unwrap()).unwrap() < 1e-10);
        let r = 1.7;
        let res = extremality_residual(&surfaces::static_cylinder(r, 32, 32).unwrap()).unwrap();
        assert!((res - 1.0 / r).abs() < 1e-6);
    }

    #[test]
    fn catenoid_constants() {
        let c = catenoid_waist(1.0, 0.5);
        assert!((c * (0.5 / c).cosh() - 1.0).abs() < 1e-12);
        assert!((c - 0.8483).abs() < 1e-4);
        let a = catenoid_area(1.0, 0.5);
        assert!((a - PI * c * (1.0 + c * (1.0 / c).sinh())).abs() < 1e-12);
    }

    #[test]
    fn flat_annulus_is_already_minimal() {
        let chart = GridChart::new(vec![Axis::open(0.5, 1.0, 16), Axis::periodic(0.0, 2.0 * PI, 32)]).unwrap();
        let emb = Embedding::from_fn(chart, BackgroundSpacetime::euclidean(3), |x| {
            vec![x[0] * x[1].cos(), x[0] * x[1].sin(), 0.0]
        })
        .unwrap();
        let out = relax_minimal_surface(&RelaxationProblem {
            initial: emb.clone(),
            fixed_boundary: true,
            step: None,
            max_iterations: 10,
            target_residual: 1e-8,
        })
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.embedding.points(), emb.points());
    }

    #[test]
    fn sphere_collapses_with_decreasing_area() {
        let emb = surfaces::round_sphere(1.0, 0.3, 16, 16).unwrap().with_degenerate_threshold(1e-3);
        let err = relax_minimal_surface(&RelaxationProblem {
            initial: emb,
            fixed_boundary: false,
            step: None,
            max_iterations: 100_000,
            target_residual: 1e-8,
        })
        .unwrap_err();
        match err {
            DynamicsError::Collapse { areas, .. } => {
                assert!(areas.len() > 10);
                assert!(areas.windows(2).all(|w| w[1] < w[0]));
            }
            other => panic!("{other:?}"),
        }
    }
}
