//! Background spacetime in which worldsheets are embedded.
//!
//! The flat backgrounds short-circuit every curvature quantity to exact zeros.
//! Curved backgrounds are given by a metric evaluator; Christoffel symbols and
//! the Riemann tensor are built from it by centered differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackgroundError {
    #[error("degenerate background metric at x = {point:?} (|det g| = {det:e})")]
    DegenerateMetric { point: Vec<f64>, det: f64 },
    #[error("point has {got} coordinates, background has dimension {dim}")]
    DimensionMismatch { got: usize, dim: usize },
}

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Below this `|det g|` a metric is treated as singular.
pub const DEGENERATE_METRIC: f64 = 1e-12;

#[derive(Clone)]
pub struct BackgroundSpacetime {
    signature: Vec<f64>,
    metric: Option<MetricFn>,
    step: f64,
}

impl fmt::Debug for BackgroundSpacetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackgroundSpacetime")
            .field("signature", &self.signature)
            .field("flat", &self.is_flat())
            .finish()
    }
}

/// Local geometry of the background at a point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// `Γ^μ_{αλ}` at `[μ * n * n + α * n + λ]`.
    pub christoffel: Vec<f64>,
    /// `R_{μναβ}` (all indices down) at `[((μ * n + ν) * n + α) * n + β]`.
    pub riemann: Vec<f64>,
}

impl PointGeometry {
    pub fn gamma(&self, mu: usize, a: usize, l: usize) -> f64 {
        let n = self.metric.nrows();
        self.christoffel[(mu * n + a) * n + l]
    }

    pub fn riemann(&self, m: usize, v: usize, a: usize, b: usize) -> f64 {
        let n = self.metric.nrows();
        self.riemann[((m * n + v) * n + a) * n + b]
    }
}

impl BackgroundSpacetime {
    /// Flat metric `diag(signature)`.
    pub fn flat(signature: Vec<f64>) -> Self {
        Self { signature, metric: None, step: 1e-5 }
    }

    /// Minkowski space `diag(-1, 1, ..., 1)` of dimension `n`.
    pub fn minkowski(n: usize) -> Self {
        let mut s = vec![1.0; n];
        s[0] = -1.0;
        Self::flat(s)
    }

    pub fn euclidean(n: usize) -> Self {
        Self::flat(vec![1.0; n])
    }

    /// Curved background from a metric evaluator. `signature` records the
    /// intended signs and sets the dimension.
    pub fn curved(signature: Vec<f64>, metric: MetricFn) -> Self {
        Self { signature, metric: Some(metric), step: 1e-5 }
    }

    /// `R_t × S³(r)` in hyperspherical coordinates `(t, χ, θ, φ)`.
    pub fn static_three_sphere(radius: f64) -> Self {
        let r2 = radius * radius;
        Self::curved(
            vec![-1.0, 1.0, 1.0, 1.0],
            Arc::new(move |x: &[f64]| {
                let (s1, s2) = (x[1].sin(), x[2].sin());
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    -1.0,
                    r2,
                    r2 * s1 * s1,
                    r2 * s1 * s1 * s2 * s2,
                ]))
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[f64] {
        &self.signature
    }

    pub fn is_flat(&self) -> bool {
        self.metric.is_none()
    }

    pub fn metric_at(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.metric {
            None => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.signature)),
            Some(g) => g(x),
        }
    }

    fn check(&self, x: &[f64]) -> Result<(), BackgroundError> {
        if x.len() != self.dim() {
            return Err(BackgroundError::DimensionMismatch { got: x.len(), dim: self.dim() });
        }
        Ok(())
    }

    fn inverse_at(&self, x: &[f64], g: &DMatrix<f64>) -> Result<DMatrix<f64>, BackgroundError> {
        let det = g.determinant();
        if det.abs() < DEGENERATE_METRIC {
            return Err(BackgroundError::DegenerateMetric { point: x.to_vec(), det });
        }
        g.clone()
            .try_inverse()
            .ok_or_else(|| BackgroundError::DegenerateMetric { point: x.to_vec(), det })
    }

    /// `Γ^μ_{αλ}` from centered differences of the metric.
    pub fn christoffel_at(&self, x: &[f64]) -> Result<Vec<f64>, BackgroundError> {
        self.check(x)?;
        let n = self.dim();
        if self.is_flat() {
            return Ok(vec![0.0; n * n * n]);
        }
        let g = self.metric_at(x);
        let ginv = self.inverse_at(x, &g)?;
        let dg = self.metric_derivatives(x);
        let mut out = vec![0.0; n * n * n];
        for mu in 0..n {
            for a in 0..n {
                for l in a..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += ginv[(mu, k)] * (dg[a][(k, l)] + dg[l][(k, a)] - dg[k][(a, l)]);
                    }
                    out[(mu * n + a) * n + l] = 0.5 * s;
                    out[(mu * n + l) * n + a] = 0.5 * s;
                }
            }
        }
        Ok(out)
    }

    fn metric_derivatives(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let h = self.step;
        (0..self.dim())
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (self.metric_at(&xp) - self.metric_at(&xm)) / (2.0 * h)
            })
            .collect()
    }

    /// Metric, inverse, Christoffels and Riemann tensor at `x`.
    pub fn geometry_at(&self, x: &[f64]) -> Result<PointGeometry, BackgroundError> {
        self.check(x)?;
        let n = self.dim();
        let metric = self.metric_at(x);
        let inverse = self.inverse_at(x, &metric)?;
        if self.is_flat() {
            return Ok(PointGeometry {
                metric,
                inverse,
                christoffel: vec![0.0; n * n * n],
                riemann: vec![0.0; n * n * n * n],
            });
        }
        let christoffel = self.christoffel_at(x)?;
        // Outer step is larger than the inner one so nested round-off stays small.
        let h = 10.0 * self.step;
        let mut dgamma = Vec::with_capacity(n);
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let gp = self.christoffel_at(&xp)?;
            let gm = self.christoffel_at(&xm)?;
            dgamma.push(gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<_>>());
        }
        let gam = |m: usize, a: usize, l: usize| christoffel[(m * n + a) * n + l];
        // R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} - ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ} Γ^λ_{νσ} - Γ^ρ_{νλ} Γ^λ_{μσ}
        let mut mixed = vec![0.0; n * n * n * n];
        for r in 0..n {
            for s in 0..n {
                for m in 0..n {
                    for v in 0..n {
                        let mut val = dgamma[m][(r * n + v) * n + s] - dgamma[v][(r * n + m) * n + s];
                        for l in 0..n {
                            val += gam(r, m, l) * gam(l, v, s) - gam(r, v, l) * gam(l, m, s);
                        }
                        mixed[((r * n + s) * n + m) * n + v] = val;
                    }
                }
            }
        }
        let mut riemann = vec![0.0; n * n * n * n];
        for r in 0..n {
            for s in 0..n {
                for m in 0..n {
                    for v in 0..n {
                        let mut val = 0.0;
                        for k in 0..n {
                            val += metric[(r, k)] * mixed[((k * n + s) * n + m) * n + v];
                        }
                        riemann[((r * n + s) * n + m) * n + v] = val;
                    }
                }
            }
        }
        Ok(PointGeometry { metric, inverse, christoffel, riemann })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_minkowski_and_euclidean() {
        let m = BackgroundSpacetime::minkowski(4);
        let p = m.geometry_at(&[0.3, 1.0, -2.0, 5.0]).unwrap();
        assert_eq!(p.metric, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0])));
        assert!(p.christoffel.iter().chain(&p.riemann).all(|&v| v == 0.0));
        let e = BackgroundSpacetime::euclidean(4);
        assert_eq!(e.metric_at(&[0.0; 4]), DMatrix::identity(4, 4));
    }

    #[test]
    fn three_sphere_has_constant_sectional_curvature() {
        let r = 1.7;
        let bg = BackgroundSpacetime::static_three_sphere(r);
        let x = [0.2, 1.1, 0.7, 2.3];
        let p = bg.geometry_at(&x).unwrap();
        let g = &p.metric;
        let k = 1.0 / (r * r);
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let expected = if a == 0 || b == 0 || c == 0 || d == 0 {
                            0.0
                        } else {
                            k * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)])
                        };
                        worst = worst.max((p.riemann(a, b, c, d) - expected).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-5, "max riemann deviation {worst}");
    }

    #[test]
    fn christoffels_are_symmetric_and_metric_compatible() {
        let bg = BackgroundSpacetime::static_three_sphere(1.3);
        let x = [0.0, 0.9, 1.2, 0.4];
        let p = bg.geometry_at(&x).unwrap();
        let n = 4;
        // ∂_k g_{ij} - Γ^l_{ki} g_{lj} - Γ^l_{kj} g_{il} = 0
        let h = 1e-5;
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let dg = (bg.metric_at(&xp) - bg.metric_at(&xm)) / (2.0 * h);
            for i in 0..n {
                for j in 0..n {
                    assert!((p.gamma(k, i, j) - p.gamma(k, j, i)).abs() < 1e-14);
                    let mut v = dg[(i, j)];
                    for l in 0..n {
                        v -= p.gamma(l, k, i) * p.metric[(l, j)] + p.gamma(l, k, j) * p.metric[(i, l)];
                    }
                    assert!(v.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries_and_first_bianchi() {
        let bg = BackgroundSpacetime::static_three_sphere(0.8);
        let p = bg.geometry_at(&[0.0, 0.6, 2.0, 1.0]).unwrap();
        let n = 4;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = p.riemann(a, b, c, d);
                        assert!((r + p.riemann(b, a, c, d)).abs() < 1e-5);
                        assert!((r + p.riemann(a, b, d, c)).abs() < 1e-12);
                        let bianchi = r + p.riemann(a, c, d, b) + p.riemann(a, d, b, c);
                        assert!(bianchi.abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let bg = BackgroundSpacetime::curved(vec![1.0, 1.0], Arc::new(|x: &[f64]| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0] * x[0]])
        }));
        assert!(matches!(bg.geometry_at(&[0.0, 1.0]), Err(BackgroundError::DegenerateMetric { .. })));
        assert!(bg.geometry_at(&[1.0, 1.0]).is_ok());
        assert!(matches!(bg.geometry_at(&[1.0]), Err(BackgroundError::DimensionMismatch { .. })));
    }
}
