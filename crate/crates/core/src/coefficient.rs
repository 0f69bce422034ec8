use std::fmt;
use std::sync::Arc;

use crate::expr::{EvalError, Expr};

type CoefficientFn = dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync;

/// A real coefficient `x ↦ a(x)` on the phase space of a map.
#[derive(Clone)]
pub struct Coefficient {
    dim: usize,
    label: String,
    f: Arc<CoefficientFn>,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl Coefficient {
    pub fn from_fn<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static,
    {
        Coefficient {
            dim,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::from_fn(dim, format!("{value}"), move |_| Ok(value))
    }

    pub fn from_expr(expr: Expr) -> Self {
        let label = expr.to_string();
        Self::from_fn(expr.arity(), label, move |x| expr.eval(x))
    }

    /// Piecewise-linear interpolation on the ordered simplex `0 ≤ x₁ ≤ … ≤ x_m ≤ 1`
    /// taking the value `weights[k]` at the corner `F(k)` with `k` trailing ones.
    ///
    /// The barycentric coordinate of `F(k)` is `x_{m−k+1} − x_{m−k}` with
    /// `x₀ = 0` and `x_{m+1} = 1`.
    pub fn simplex_interpolant(weights: &[f64]) -> Self {
        let weights = weights.to_vec();
        let m = weights.len().saturating_sub(1);
        Self::from_fn(m, "simplex-interpolant", move |x| {
            if x.len() != m {
                return Err(EvalError::Dimension {
                    expected: m,
                    got: x.len(),
                });
            }
            let coord = |i: usize| -> f64 {
                if i == 0 {
                    0.0
                } else if i == m + 1 {
                    1.0
                } else {
                    x[i - 1]
                }
            };
            let value = weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * (coord(m - k + 1) - coord(m - k)))
                .sum();
            Ok(value)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_hits_corner_values() {
        let a = Coefficient::simplex_interpolant(&[1.0, 3.0, 2.0]);
        assert_eq!(a.eval(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(a.eval(&[0.0, 1.0]).unwrap(), 3.0);
        assert_eq!(a.eval(&[1.0, 1.0]).unwrap(), 2.0);
        // midpoint of the edge F(0)F(2)
        assert!((a.eval(&[0.5, 0.5]).unwrap() - 1.5).abs() < 1e-15);
    }
}
