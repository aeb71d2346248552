//! Gauss-Legendre rules and an adaptive integrator built on them.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{CavError, Result};

/// Nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn new(n: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"));
        let mut pairs: Vec<(f64, f64)> = gl.into_node_weight_pairs().into_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (m + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (Rule::new(10), Rule::new(21)))
}

/// Shared 16-point rule.
pub fn gl16() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::new(16))
}

/// Adaptive bisection comparing 10- and 21-point rules. `tol` is absolute
/// on the whole interval.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = rules();
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let width = (b - a).abs();
    while let Some((x0, x1, depth)) = stack.pop() {
        let coarse = lo.integrate(x0, x1, &mut f);
        let fine = hi.integrate(x0, x1, &mut f);
        let err = (fine - coarse).abs();
        let budget = tol * (x1 - x0).abs() / width;
        if err <= budget.max(1e-15 * fine.abs()) {
            total += fine;
            err_total += err;
        } else if depth >= 48 {
            return Err(CavError::Quadrature(format!(
                "no convergence on [{x0:e}, {x1:e}] (error {err:e})"
            )));
        } else {
            let m = 0.5 * (x0 + x1);
            stack.push((m, x1, depth + 1));
            stack.push((x0, m, depth + 1));
        }
    }
    if !total.is_finite() || err_total > 10.0 * tol.max(1e-15 * total.abs()) {
        return Err(CavError::Quadrature(format!(
            "accumulated error {err_total:e} above tolerance {tol:e}"
        )));
    }
    Ok(total)
}
