//! Structured parameter grids for worldsheet coordinates.
//!
//! A [`GridChart`] is a tensor product of one-dimensional axes. Periodic axes
//! are differentiated spectrally (FFT) and integrated with the trapezoid rule;
//! open axes use centered finite differences of configurable even order, with
//! one-sided stencils at the ends, and interpolatory quadrature of the same
//! order.
//!
//! Fields are stored node-major: a field with `ncomp` components on a chart
//! with `n` nodes is a flat slice of length `n * ncomp`, component `c` of node
//! `p` living at `p * ncomp + c`. Node indices are row-major in the axis
//! indices (axis 0 varies slowest).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("axis {axis} out of range for a {dims}-dimensional chart")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("open axis with {nodes} nodes cannot carry a stencil of width {width}")]
    TooFewNodes { nodes: usize, width: usize },
    #[error("finite-difference order must be even and at least 2, got {0}")]
    BadOrder(usize),
    #[error("axis domain [{lo}, {hi}) is empty")]
    EmptyDomain { lo: f64, hi: f64 },
    #[error("field has {got} values, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("slice index {index} out of range for axis with {nodes} nodes")]
    SliceOutOfRange { index: usize, nodes: usize },
    #[error("slice integrals need a two-dimensional chart whose other axis is periodic")]
    NotSliceable,
}

/// How an axis is discretized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisKind {
    /// Closed axis `[lo, hi)`, uniform nodes `lo + i h` with `h = (hi - lo) / n`.
    Periodic,
    /// Open axis `[lo, hi]`, uniform nodes including both ends.
    Open { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    pub kind: AxisKind,
}

impl Axis {
    pub fn periodic(lo: f64, hi: f64, nodes: usize) -> Self {
        Self { lo, hi, nodes, kind: AxisKind::Periodic }
    }

    /// Open axis with the default fourth-order stencils.
    pub fn open(lo: f64, hi: f64, nodes: usize) -> Self {
        Self::open_with_order(lo, hi, nodes, 4)
    }

    pub fn open_with_order(lo: f64, hi: f64, nodes: usize, order: usize) -> Self {
        Self { lo, hi, nodes, kind: AxisKind::Open { order } }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, AxisKind::Periodic)
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            AxisKind::Periodic => (self.hi - self.lo) / self.nodes as f64,
            AxisKind::Open { .. } => (self.hi - self.lo) / (self.nodes - 1) as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.coord(i)).collect()
    }
}

#[derive(Clone)]
enum AxisOperator {
    Spectral {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        /// `i k` multipliers with the Nyquist mode removed.
        multipliers: Vec<Complex64>,
    },
    Stencil {
        /// Per node: first stencil node and weights.
        rows: Vec<(usize, Vec<f64>)>,
    },
}

impl std::fmt::Debug for AxisOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisOperator::Spectral { multipliers, .. } => {
                write!(f, "Spectral({} modes)", multipliers.len())
            }
            AxisOperator::Stencil { rows } => write!(f, "Stencil({} rows)", rows.len()),
        }
    }
}

/// Tensor-product grid with derivative and quadrature machinery.
#[derive(Debug, Clone)]
pub struct GridChart {
    axes: Vec<Axis>,
    operators: Vec<AxisOperator>,
    weights: Vec<Vec<f64>>,
    strides: Vec<usize>,
    nodes: usize,
}

impl GridChart {
    pub fn new(axes: Vec<Axis>) -> Result<Self, ChartError> {
        let mut operators = Vec::with_capacity(axes.len());
        let mut weights = Vec::with_capacity(axes.len());
        let mut planner = FftPlanner::<f64>::new();
        for axis in &axes {
            if !(axis.hi > axis.lo) {
                return Err(ChartError::EmptyDomain { lo: axis.lo, hi: axis.hi });
            }
            match axis.kind {
                AxisKind::Periodic => {
                    if axis.nodes < 2 {
                        return Err(ChartError::TooFewNodes { nodes: axis.nodes, width: 2 });
                    }
                    let n = axis.nodes;
                    let scale = 2.0 * PI / (axis.hi - axis.lo);
                    let multipliers = (0..n)
                        .map(|m| {
                            let wavenumber = if 2 * m < n {
                                m as f64
                            } else if 2 * m == n {
                                0.0
                            } else {
                                m as f64 - n as f64
                            };
                            Complex64::new(0.0, wavenumber * scale)
                        })
                        .collect();
                    operators.push(AxisOperator::Spectral {
                        forward: planner.plan_fft_forward(n),
                        inverse: planner.plan_fft_inverse(n),
                        multipliers,
                    });
                    weights.push(vec![axis.spacing(); n]);
                }
                AxisKind::Open { order } => {
                    if order < 2 || order % 2 != 0 {
                        return Err(ChartError::BadOrder(order));
                    }
                    let width = order + 1;
                    if axis.nodes < width {
                        return Err(ChartError::TooFewNodes { nodes: axis.nodes, width });
                    }
                    let x = axis.coords();
                    let rows = (0..axis.nodes)
                        .map(|i| {
                            let start = i.saturating_sub(order / 2).min(axis.nodes - width);
                            let w = fornberg_weights(x[i], &x[start..start + width], 1);
                            (start, w[1].clone())
                        })
                        .collect();
                    operators.push(AxisOperator::Stencil { rows });
                    weights.push(interpolatory_weights(&x, order));
                }
            }
        }
        let mut strides = vec![1; axes.len()];
        for a in (0..axes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].nodes;
        }
        let nodes = axes.iter().map(|a| a.nodes).product();
        Ok(Self { axes, operators, weights, strides, nodes })
    }

    /// Fully periodic chart on `[0, 2π)^d`.
    pub fn periodic_square(dims: usize, n: usize) -> Result<Self, ChartError> {
        Self::new(vec![Axis::periodic(0.0, 2.0 * PI, n); dims])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn is_closed(&self) -> bool {
        self.axes.iter().all(Axis::is_periodic)
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        self.axes
            .iter()
            .zip(&self.strides)
            .map(|(axis, stride)| (node / stride) % axis.nodes)
            .collect()
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of a node.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis.coord(i))
            .collect()
    }

    /// Samples a scalar function of the coordinates.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.nodes).map(|p| f(&self.coords(p))).collect()
    }

    /// Samples an `ncomp`-vector valued function of the coordinates.
    pub fn sample_vector<F: Fn(&[f64]) -> Vec<f64>>(&self, ncomp: usize, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes * ncomp);
        for p in 0..self.nodes {
            let v = f(&self.coords(p));
            debug_assert_eq!(v.len(), ncomp);
            out.extend_from_slice(&v);
        }
        out
    }

    fn check_shape(&self, field: &[f64], ncomp: usize) -> Result<(), ChartError> {
        if field.len() != self.nodes * ncomp {
            return Err(ChartError::ShapeMismatch { got: field.len(), expected: self.nodes * ncomp });
        }
        Ok(())
    }

    /// Componentwise `∂_axis` of a node-major field.
    pub fn partial(&self, field: &[f64], ncomp: usize, axis: usize) -> Result<Vec<f64>, ChartError> {
        if axis >= self.dims() {
            return Err(ChartError::AxisOutOfRange { axis, dims: self.dims() });
        }
        self.check_shape(field, ncomp)?;
        let n = self.axes[axis].nodes;
        let stride = self.strides[axis];
        let mut out = vec![0.0; field.len()];
        let mut line = vec![0.0; n];
        let mut buffer = vec![Complex64::new(0.0, 0.0); n];
        for base in 0..self.nodes {
            if (base / stride) % n != 0 {
                continue;
            }
            for c in 0..ncomp {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = field[(base + i * stride) * ncomp + c];
                }
                match &self.operators[axis] {
                    AxisOperator::Spectral { forward, inverse, multipliers } => {
                        for (b, &v) in buffer.iter_mut().zip(&line) {
                            *b = Complex64::new(v, 0.0);
                        }
                        forward.process(&mut buffer);
                        for (b, m) in buffer.iter_mut().zip(multipliers) {
                            *b *= m;
                        }
                        inverse.process(&mut buffer);
                        for (i, b) in buffer.iter().enumerate() {
                            out[(base + i * stride) * ncomp + c] = b.re / n as f64;
                        }
                    }
                    AxisOperator::Stencil { rows } => {
                        for (i, (start, w)) in rows.iter().enumerate() {
                            let s: f64 = w.iter().zip(&line[*start..]).map(|(a, b)| a * b).sum();
                            out[(base + i * stride) * ncomp + c] = s;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// All first partials: entry `a` is `∂_a field`.
    pub fn gradient(&self, field: &[f64], ncomp: usize) -> Result<Vec<Vec<f64>>, ChartError> {
        (0..self.dims()).map(|a| self.partial(field, ncomp, a)).collect()
    }

    /// Quadrature weight of a node (product of per-axis weights).
    pub fn weight(&self, node: usize) -> f64 {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.weights[a][i])
            .product()
    }

    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.weights[axis]
    }

    /// `Σ_nodes density · Π weights`.
    pub fn integrate(&self, density: &[f64]) -> Result<f64, ChartError> {
        self.check_shape(density, 1)?;
        Ok(density.iter().enumerate().map(|(p, v)| v * self.weight(p)).sum())
    }

    /// Flux of a worldsheet vector density through the slice `{ξ^slice_axis = const}`:
    /// the quadrature of `V^slice_axis` over the remaining (periodic) axis.
    pub fn slice_integral(
        &self,
        vector_density: &[f64],
        slice_axis: usize,
        slice_index: usize,
    ) -> Result<f64, ChartError> {
        let d = self.dims();
        if d != 2 {
            return Err(ChartError::NotSliceable);
        }
        if slice_axis >= d {
            return Err(ChartError::AxisOutOfRange { axis: slice_axis, dims: d });
        }
        let other = 1 - slice_axis;
        if !self.axes[other].is_periodic() {
            return Err(ChartError::NotSliceable);
        }
        let nodes = self.axes[slice_axis].nodes;
        if slice_index >= nodes {
            return Err(ChartError::SliceOutOfRange { index: slice_index, nodes });
        }
        self.check_shape(vector_density, d)?;
        let mut multi = vec![0; 2];
        multi[slice_axis] = slice_index;
        let mut total = 0.0;
        for j in 0..self.axes[other].nodes {
            multi[other] = j;
            let p = self.node_index(&multi);
            total += vector_density[p * d + slice_axis] * self.weights[other][j];
        }
        Ok(total)
    }
}

/// Finite-difference weights for derivatives `0..=max_order` at `z` from nodes `x`
/// (Fornberg's recursion).
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite interpolatory quadrature: each cell integrates the degree-`order`
/// interpolant through the `order + 1` nodes nearest to it.
fn interpolatory_weights(x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let width = order + 1;
    let (gx, gw) = gauss_legendre(width);
    let mut w = vec![0.0; n];
    for cell in 0..n - 1 {
        let start = (cell as isize + 1 - (width as isize) / 2).clamp(0, (n - width) as isize) as usize;
        let stencil = &x[start..start + width];
        let (a, b) = (x[cell], x[cell + 1]);
        for (t, tw) in gx.iter().zip(&gw) {
            let z = 0.5 * (a + b) + 0.5 * (b - a) * t;
            let basis = fornberg_weights(z, stencil, 0);
            for (k, l) in basis[0].iter().enumerate() {
                w[start + k] += 0.5 * (b - a) * tw * l;
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> GridChart {
        GridChart::new(vec![Axis::periodic(0.0, 2.0 * PI, n)]).unwrap()
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let c = circle(64);
        let f = c.sample(|x| x[0].sin());
        let df = c.partial(&f, 1, 0).unwrap();
        assert!(max_err(&df, &c.sample(|x| x[0].cos())) <= 1e-12);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let c = GridChart::new(vec![Axis::open(-1.0, 1.0, 17), Axis::periodic(0.0, 1.0, 8)]).unwrap();
        let f = vec![3.5; c.node_count()];
        for a in 0..2 {
            assert!(c.partial(&f, 1, a).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn spectral_convergence_is_faster_than_algebraic() {
        let err = |n| {
            let c = circle(n);
            let f = c.sample(|x| x[0].sin().exp());
            let df = c.partial(&f, 1, 0).unwrap();
            max_err(&df, &c.sample(|x| x[0].cos() * x[0].sin().exp()))
        };
        let (e16, e32) = (err(16), err(32));
        // A fourth-order method would gain 16x; spectral gains orders of magnitude.
        assert!(e32 < 1e-12 && e16 / e32.max(1e-16) > 1e3, "{e16} {e32}");
    }

    #[test]
    fn open_axis_order_is_observed() {
        for order in [4, 6, 8] {
            let err = |n| {
                let c = GridChart::new(vec![Axis::open_with_order(0.0, 1.0, n, order)]).unwrap();
                let f = c.sample(|x| (2.0 * x[0]).sin());
                let df = c.partial(&f, 1, 0).unwrap();
                max_err(&df, &c.sample(|x| 2.0 * (2.0 * x[0]).cos()))
            };
            let rate = (err(33) / err(65)).log2();
            assert!(rate > order as f64 - 0.7, "order {order}: rate {rate}");
        }
    }

    #[test]
    fn quadrature_exact_for_constants_and_trig() {
        let torus = GridChart::periodic_square(2, 16).unwrap();
        let one = vec![1.0; torus.node_count()];
        assert!((torus.integrate(&one).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        let c = circle(32);
        let s2 = c.sample(|x| x[0].sin().powi(2));
        assert!((c.integrate(&s2).unwrap() - PI).abs() < 1e-13);
    }

    #[test]
    fn open_quadrature_is_high_order() {
        let c = GridChart::new(vec![Axis::open_with_order(0.0, PI, 65, 6)]).unwrap();
        let f = c.sample(|x| x[0].sin());
        assert!((c.integrate(&f).unwrap() - 2.0).abs() < 1e-9);
        let w: f64 = c.axis_weights(0).iter().sum();
        assert!((w - PI).abs() < 1e-13);
    }

    #[test]
    fn smooth_periodic_quadrature_matches_refined_grid() {
        let value = |n| {
            let c = GridChart::periodic_square(2, n).unwrap();
            let f = c.sample(|x| (x[0].cos() + 0.5 * (x[1] - 0.3).sin()).exp());
            c.integrate(&f).unwrap()
        };
        assert!((value(64) - value(640)).abs() < 1e-10);
    }

    #[test]
    fn slice_integral_of_constant_and_cosine() {
        let c = GridChart::new(vec![Axis::open(-1.0, 1.0, 9), Axis::periodic(0.0, 2.0 * PI, 32)]).unwrap();
        let ones = c.sample_vector(2, |_| vec![1.0, 0.0]);
        assert!((c.slice_integral(&ones, 0, 3).unwrap() - 2.0 * PI).abs() < 1e-13);
        let cos = c.sample_vector(2, |x| vec![x[1].cos(), 1.0]);
        assert!(c.slice_integral(&cos, 0, 0).unwrap().abs() < 1e-13);
        assert_eq!(
            c.slice_integral(&cos, 0, 9),
            Err(ChartError::SliceOutOfRange { index: 9, nodes: 9 })
        );
    }

    #[test]
    fn errors() {
        let c = circle(8);
        assert!(matches!(c.partial(&[0.0; 8], 1, 1), Err(ChartError::AxisOutOfRange { .. })));
        assert!(matches!(c.partial(&[0.0; 7], 1, 0), Err(ChartError::ShapeMismatch { .. })));
        assert!(matches!(
            GridChart::new(vec![Axis::open(0.0, 1.0, 4)]),
            Err(ChartError::TooFewNodes { nodes: 4, width: 5 })
        ));
        assert!(matches!(GridChart::new(vec![Axis::open_with_order(0.0, 1.0, 9, 3)]), Err(ChartError::BadOrder(3))));
    }

    #[test]
    fn divergence_of_periodic_field_integrates_to_zero() {
        let c = GridChart::periodic_square(2, 32).unwrap();
        let f = c.sample(|x| (x[0].sin() * x[1].cos()).exp());
        let df = c.partial(&f, 1, 1).unwrap();
        assert!(c.integrate(&df).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mixed_partials_commute() {
        let c = GridChart::new(vec![Axis::open(-1.0, 1.0, 21), Axis::periodic(0.0, 2.0 * PI, 16)]).unwrap();
        let f = c.sample(|x| (x[0] * x[1].sin()).exp());
        let a = c.partial(&c.partial(&f, 1, 0).unwrap(), 1, 1).unwrap();
        let b = c.partial(&c.partial(&f, 1, 1).unwrap(), 1, 0).unwrap();
        assert!(max_err(&a, &b) < 1e-12);
    }
}
