//! Piecewise Chebyshev interpolation of vector-valued functions with
//! adaptive panel splitting and exact antiderivatives.

use std::f64::consts::PI;

use crate::error::{CavError, Result};

#[derive(Debug, Clone)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// One coefficient vector per component.
    pub coeffs: Vec<Vec<f64>>,
}

impl Panel {
    fn x(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }
}

/// Chebyshev coefficients from samples at the first-kind nodes
/// `cos(pi (j + 1/2) / n)`.
fn coeffs_from_samples(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    (0..n)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .enumerate()
                .map(|(j, f)| f * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                .sum();
            let w = if k == 0 { 1.0 } else { 2.0 };
            w * s / n as f64
        })
        .collect()
}

pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// Coefficients of the antiderivative vanishing at `x = -1`, on `[-1, 1]`.
fn antiderivative(c: &[f64], half_width: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n + 1];
    let get = |k: usize| if k < n { c[k] } else { 0.0 };
    for k in 1..=n {
        let cm = if k == 1 { 2.0 * get(0) } else { get(k - 1) };
        out[k] = (cm - get(k + 1)) / (2.0 * k as f64) * half_width;
    }
    // fix the constant so the value at x = -1 is zero
    let at_m1: f64 = out
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
        .sum();
    out[0] = -at_m1;
    out
}

#[derive(Debug, Clone)]
pub struct ChebPanels {
    pub panels: Vec<Panel>,
    pub dim: usize,
}

impl ChebPanels {
    /// Builds panels on `[a, b]` until the trailing coefficients of every
    /// component fall below `tol` times that component's scale.
    pub fn adaptive<F>(f: F, a: f64, b: f64, degree: usize, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Sync,
    {
        let n = degree + 1;
        let nodes: Vec<f64> = (0..n)
            .map(|j| (PI * (j as f64 + 0.5) / n as f64).cos())
            .collect();
        let build = |pa: f64, pb: f64| -> Panel {
            let vals: Vec<Vec<f64>> = nodes
                .iter()
                .map(|x| f(0.5 * (pa + pb) + 0.5 * (pb - pa) * x))
                .collect();
            let dim = vals[0].len();
            let coeffs = (0..dim)
                .map(|d| {
                    let s: Vec<f64> = vals.iter().map(|v| v[d]).collect();
                    coeffs_from_samples(&s)
                })
                .collect();
            Panel { a: pa, b: pb, coeffs }
        };
        let mut done = Vec::new();
        let mut stack = vec![(a, b, 0usize)];
        while let Some((pa, pb, depth)) = stack.pop() {
            let p = build(pa, pb);
            let ok = p.coeffs.iter().all(|c| {
                let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let tail = c[n - 3..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                !tail.is_nan() && tail <= tol * scale.max(f64::MIN_POSITIVE)
            });
            if ok {
                done.push(p);
            } else if depth >= 30 {
                return Err(CavError::Quadrature(format!(
                    "Chebyshev panel [{pa:e}, {pb:e}] did not resolve"
                )));
            } else {
                let m = 0.5 * (pa + pb);
                stack.push((m, pb, depth + 1));
                stack.push((pa, m, depth + 1));
            }
        }
        done.sort_by(|x, y| x.a.total_cmp(&y.a));
        let dim = done[0].coeffs.len();
        Ok(Self { panels: done, dim })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.panels[0].a, self.panels.last().expect("nonempty").b)
    }

    fn locate(&self, t: f64) -> &Panel {
        let i = self.panels.partition_point(|p| p.b < t);
        &self.panels[i.min(self.panels.len() - 1)]
    }

    pub fn eval(&self, t: f64, d: usize) -> f64 {
        let p = self.locate(t);
        clenshaw(&p.coeffs[d], p.x(t))
    }

    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        let p = self.locate(t);
        let x = p.x(t);
        p.coeffs.iter().map(|c| clenshaw(c, x)).collect()
    }

    /// Antiderivatives with the given values at the left end.
    pub fn integrate(&self, start: &[f64]) -> Self {
        let mut acc = start.to_vec();
        let mut panels = Vec::with_capacity(self.panels.len());
        for p in &self.panels {
            let hw = 0.5 * (p.b - p.a);
            let coeffs: Vec<Vec<f64>> = p
                .coeffs
                .iter()
                .zip(&acc)
                .map(|(c, a0)| {
                    let mut q = antiderivative(c, hw);
                    q[0] += a0;
                    q
                })
                .collect();
            for (d, q) in coeffs.iter().enumerate() {
                acc[d] = clenshaw(q, 1.0);
            }
            panels.push(Panel {
                a: p.a,
                b: p.b,
                coeffs,
            });
        }
        Self {
            panels,
            dim: self.dim,
        }
    }
}
