use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::expr::{self, Expr};

/// Tolerance for `γ(0) = 0` and `γ(1) = 1`.
pub const ENDPOINT_TOL: f64 = 1e-12;
/// Bisection steps for inverting a formula map.
pub const BISECTION_STEPS: usize = 60;
/// Residual accepted after bisection.
pub const INVERSE_TOL: f64 = 1e-12;
/// Step of the central difference used when no closed-form derivative exists.
pub const DERIVATIVE_STEP: f64 = 1e-6;

const VALIDATION_GRID: usize = 1000;

/// How a 1-D map `γ` is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSpec {
    /// `γ(x) = c·x / (1 + (c − 1)·x)` with `c > 1`.
    Mobius { c: f64 },
    /// A formula in `x` (or `x1`).
    Formula(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Mobius(f64),
    Formula(Expr),
}

/// A validated increasing diffeomorphism of `[0, 1]` with exactly the fixed points
/// `0` and `1` and `γ(x) > x` in between.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMap {
    kind: Kind,
}

pub fn make_interval_map(spec: &GammaSpec) -> Result<IntervalMap, DynamicsError> {
    let map = match spec {
        GammaSpec::Mobius { c } => {
            if !(c.is_finite() && *c > 1.0) {
                return Err(DynamicsError::Validation(format!(
                    "mobius parameter must be finite and > 1, got {c}"
                )));
            }
            IntervalMap {
                kind: Kind::Mobius(*c),
            }
        }
        GammaSpec::Formula(src) => IntervalMap {
            kind: Kind::Formula(expr::parse(src, 1)?),
        },
    };
    map.validate()?;
    Ok(map)
}

impl IntervalMap {
    pub fn mobius(c: f64) -> Result<Self, DynamicsError> {
        make_interval_map(&GammaSpec::Mobius { c })
    }

    pub fn formula(src: &str) -> Result<Self, DynamicsError> {
        make_interval_map(&GammaSpec::Formula(src.to_string()))
    }

    pub fn spec(&self) -> GammaSpec {
        match &self.kind {
            Kind::Mobius(c) => GammaSpec::Mobius { c: *c },
            Kind::Formula(e) => GammaSpec::Formula(e.to_string()),
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let g0 = self.apply(0.0)?;
        let g1 = self.apply(1.0)?;
        if g0.abs() > ENDPOINT_TOL || (g1 - 1.0).abs() > ENDPOINT_TOL {
            return Err(DynamicsError::Validation(format!(
                "endpoints must be fixed: γ(0) = {g0}, γ(1) = {g1}"
            )));
        }
        let mut prev = g0;
        for i in 1..VALIDATION_GRID {
            let x = i as f64 / VALIDATION_GRID as f64;
            let y = self.apply(x)?;
            if y <= x {
                return Err(DynamicsError::Validation(format!(
                    "γ(x) > x fails at x = {x} (γ(x) = {y})"
                )));
            }
            if y <= prev {
                return Err(DynamicsError::Validation(format!(
                    "γ is not strictly increasing near x = {x}"
                )));
            }
            prev = y;
        }
        if g1 <= prev {
            return Err(DynamicsError::Validation(
                "γ is not strictly increasing near x = 1".to_string(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> Result<f64, DynamicsError> {
        match &self.kind {
            Kind::Mobius(c) => Ok(c * x / (1.0 + (c - 1.0) * x)),
            Kind::Formula(e) => Ok(e.eval(&[x])?),
        }
    }

    /// `γ⁻¹(y)`, closed form for the Möbius family and bisection otherwise.
    pub fn inverse(&self, y: f64) -> Result<f64, DynamicsError> {
        match &self.kind {
            Kind::Mobius(c) => Ok(y / (c - (c - 1.0) * y)),
            Kind::Formula(_) => self.bisect_inverse(y),
        }
    }

    /// Inverse by bisection on `[0, 1]`; valid for every validated map.
    pub fn bisect_inverse(&self, y: f64) -> Result<f64, DynamicsError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(DynamicsError::OutsideDomain(vec![y]));
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.apply(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        let residual = (self.apply(x)? - y).abs();
        if residual > INVERSE_TOL {
            return Err(DynamicsError::Validation(format!(
                "bisection inverse of {y} left residual {residual:e}"
            )));
        }
        Ok(x)
    }

    /// `γ′(x)`; closed form for Möbius, central difference otherwise (one-sided at
    /// points where the formula cannot be evaluated on both sides).
    pub fn derivative(&self, x: f64) -> Result<f64, DynamicsError> {
        match &self.kind {
            Kind::Mobius(c) => {
                let d = 1.0 + (c - 1.0) * x;
                Ok(c / (d * d))
            }
            Kind::Formula(e) => {
                let h = DERIVATIVE_STEP;
                let f = |t: f64| e.eval(&[t]);
                match (f(x + h), f(x - h)) {
                    (Ok(p), Ok(m)) => Ok((p - m) / (2.0 * h)),
                    (Ok(p), Err(_)) => Ok((p - f(x)?) / h),
                    (Err(_), Ok(m)) => Ok((f(x)? - m) / h),
                    (Err(err), Err(_)) => Err(err.into()),
                }
            }
        }
    }

    /// `(γ⁻¹)′(y) = 1 / γ′(γ⁻¹(y))`.
    pub fn inverse_derivative(&self, y: f64) -> Result<f64, DynamicsError> {
        let d = self.derivative(self.inverse(y)?)?;
        if d <= 0.0 || !d.is_finite() {
            return Err(DynamicsError::Validation(format!(
                "γ′ is not positive at γ⁻¹({y}) (got {d})"
            )));
        }
        Ok(1.0 / d)
    }

    pub fn iterate(&self, mut x: f64, n: i64) -> Result<f64, DynamicsError> {
        if n >= 0 {
            for _ in 0..n {
                x = self.apply(x)?;
            }
        } else {
            for _ in 0..n.unsigned_abs() {
                x = self.inverse(x)?;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_values() {
        let g = IntervalMap::mobius(2.0).unwrap();
        assert!((g.apply(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.inverse(2.0 / 3.0).unwrap() - 0.5).abs() < 1e-12);
        // bisection agrees with the closed form y / (2 − y)
        for y in [0.0, 0.1, 2.0 / 3.0, 0.93, 1.0] {
            let closed = y / (2.0 - y);
            assert!((g.bisect_inverse(y).unwrap() - closed).abs() < 1e-12);
        }
        let x = g.iterate(0.2, -1).unwrap();
        assert!((x - 1.0 / 9.0).abs() < 1e-15);
        assert!((g.apply(1.0 / 9.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(matches!(
            IntervalMap::formula("x^2"),
            Err(DynamicsError::Validation(_))
        ));
        assert!(matches!(
            IntervalMap::formula("0.5*x+0.5"),
            Err(DynamicsError::Validation(_))
        ));
        assert!(IntervalMap::mobius(1.0).is_err());
        assert!(IntervalMap::mobius(0.5).is_err());
        // increasing with correct endpoints but dips below the diagonal
        assert!(IntervalMap::formula("x + 0.3*x*(1-x)*(x-0.5)").is_err());
    }

    #[test]
    fn formula_map_matches_mobius() {
        let f = IntervalMap::formula("2*x/(1+x)").unwrap();
        let g = IntervalMap::mobius(2.0).unwrap();
        for y in [0.05, 0.3, 0.77] {
            assert!((f.inverse(y).unwrap() - g.inverse(y).unwrap()).abs() < 1e-12);
            let fd = f.derivative(y).unwrap();
            assert!((fd - g.derivative(y).unwrap()).abs() < 1e-8);
        }
        // endpoints fall back to one-sided differences only if needed; here both sides evaluate
        assert!((f.inverse_derivative(0.0).unwrap() - 0.5).abs() < 1e-6);
    }
}
