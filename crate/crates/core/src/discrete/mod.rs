//! Weighted shifts `(aW − λ)u(k) = a(k)·u(k+1) − λ·u(k)` on `ℓ²(ℤ)`.
//!
//! Each orbit block of the dynamical operator becomes one such two-sided shift, so
//! everything here doubles as a numerical oracle for the graph-based verdicts.

mod oracle;
mod section;
mod solve;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Annulus;

pub use oracle::{
    verify_block, BlockRegime, LadderRow, OracleReport, RangeSignature, BOUNDED_RATIO,
    DEFAULT_TRUNCATIONS, NONCLOSED_MIN_EXPONENT, TINY_SINGULAR,
};
pub use section::{finite_section, FiniteSection, SingularTriple, SIGMA_MAX_ITER, SIGMA_TOL};
pub use solve::{right_inverse_apply, right_inverse_bound, shoot_solve, ShootResult};

/// Relative band around a limit circle treated as "on the circle".
pub const CIRCLE_TOL: f64 = 1e-12;
/// Kernel vectors and solutions are cut where entries fall below this level.
pub const TAIL_CUTOFF: f64 = 1e-16;
const MAX_TAIL: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscreteError {
    #[error("coefficient vanishes at k = {0}")]
    ZeroCoefficient(i64),
    #[error("coefficient limit at {0} is zero or not finite")]
    BadLimit(&'static str),
    #[error("window must have odd length 2K+1, got {0}")]
    EvenWindow(usize),
    #[error("λ = 0 is not allowed here")]
    ZeroLambda,
    #[error("|λ| = {0} lies on a limit circle")]
    OnLimitCircle(f64),
    #[error("|λ| = {modulus} is outside the {expected} regime")]
    RegimeViolation {
        modulus: f64,
        expected: &'static str,
    },
    #[error("truncation {truncation} does not cover the support radius {support}")]
    TruncationTooSmall { truncation: usize, support: usize },
    #[error("finite section needs N ≥ 4, got {0}")]
    SectionTooSmall(usize),
    #[error("iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("recursion tail exceeded {0} entries")]
    TailTooLong(usize),
}

/// Two-sided coefficient sequence: explicit values on `[−K, K]`, limits outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffSeq {
    center: Vec<f64>,
    radius: usize,
    a_minus: f64,
    a_plus: f64,
}

impl CoeffSeq {
    pub fn new(center: Vec<f64>, a_minus: f64, a_plus: f64) -> Result<Self, DiscreteError> {
        if center.len().is_multiple_of(2) {
            return Err(DiscreteError::EvenWindow(center.len()));
        }
        let radius = center.len() / 2;
        if let Some(i) = center.iter().position(|&v| v == 0.0 || !v.is_finite()) {
            return Err(DiscreteError::ZeroCoefficient(i as i64 - radius as i64));
        }
        if a_minus == 0.0 || !a_minus.is_finite() {
            return Err(DiscreteError::BadLimit("-∞"));
        }
        if a_plus == 0.0 || !a_plus.is_finite() {
            return Err(DiscreteError::BadLimit("+∞"));
        }
        Ok(CoeffSeq {
            center,
            radius,
            a_minus,
            a_plus,
        })
    }

    /// `a(k) = a_minus` for `k < 0` and `a_plus` for `k ≥ 0`.
    pub fn step(a_minus: f64, a_plus: f64) -> Result<Self, DiscreteError> {
        Self::new(vec![a_plus], a_minus, a_plus)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn a_minus(&self) -> f64 {
        self.a_minus
    }

    pub fn a_plus(&self) -> f64 {
        self.a_plus
    }

    pub fn value(&self, k: i64) -> f64 {
        let r = self.radius as i64;
        if k < -r {
            self.a_minus
        } else if k > r {
            self.a_plus
        } else {
            self.center[(k + r) as usize]
        }
    }
}

/// A finitely supported vector on `ℤ`: `values[i]` sits at index `start + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZVec {
    pub start: i64,
    pub values: Vec<Complex64>,
}

impl ZVec {
    pub fn zeros(start: i64, len: usize) -> Self {
        ZVec {
            start,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn delta(k: i64) -> Self {
        ZVec {
            start: k,
            values: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn from_real(start: i64, values: &[f64]) -> Self {
        ZVec {
            start,
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Last index covered (inclusive); `start − 1` when empty.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> Complex64 {
        if k < self.start || k > self.end() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(k - self.start) as usize]
        }
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|k|` carrying a nonzero entry.
    pub fn support_radius(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, _)| (self.start + i as i64).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `self − other` over the union of both supports.
    pub fn sub(&self, other: &ZVec) -> ZVec {
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        let values = (start..=end).map(|k| self.get(k) - other.get(k)).collect();
        ZVec { start, values }
    }

    pub fn scaled(&self, c: Complex64) -> ZVec {
        ZVec {
            start: self.start,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// `(aW − λ)u` on the index range where it can be nonzero.
pub fn apply(seq: &CoeffSeq, lambda: Complex64, u: &ZVec) -> ZVec {
    let start = u.start - 1;
    let end = u.end();
    let values = (start..=end)
        .map(|k| u.get(k + 1) * seq.value(k) - lambda * u.get(k))
        .collect();
    ZVec { start, values }
}

/// `r = min(|a(±∞)|)`, `R = max(|a(±∞)|)`.
pub fn discrete_annulus(seq: &CoeffSeq) -> Annulus {
    let (lo, hi) = (seq.a_minus.abs(), seq.a_plus.abs());
    Annulus {
        r: lo.min(hi),
        big_r: lo.max(hi),
    }
}

pub(crate) fn on_circle(modulus: f64, radius: f64) -> bool {
    (modulus - radius).abs() <= CIRCLE_TOL * modulus.max(radius)
}

fn check_off_circles(seq: &CoeffSeq, lambda: Complex64) -> Result<f64, DiscreteError> {
    let m = lambda.norm();
    if m == 0.0 {
        return Err(DiscreteError::ZeroLambda);
    }
    if on_circle(m, seq.a_minus.abs()) || on_circle(m, seq.a_plus.abs()) {
        return Err(DiscreteError::OnLimitCircle(m));
    }
    Ok(m)
}

/// Fredholm index of `aW − λ`: `+1` when `|a(−∞)| < |λ| < |a(+∞)|`, `−1` in the
/// mirrored situation, `0` otherwise.
pub fn index_of(seq: &CoeffSeq, lambda: Complex64) -> Result<i8, DiscreteError> {
    let m = check_off_circles(seq, lambda)?;
    let (lo, hi) = (seq.a_minus.abs(), seq.a_plus.abs());
    Ok(if lo < m && m < hi {
        1
    } else if hi < m && m < lo {
        -1
    } else {
        0
    })
}

/// The kernel vector `u(0) = 1`, `u(k+1) = (λ/a(k))·u(k)`, which lies in `ℓ²`
/// exactly in the right regime; `None` elsewhere.
pub fn kernel_vector(seq: &CoeffSeq, lambda: Complex64) -> Result<Option<ZVec>, DiscreteError> {
    if index_of(seq, lambda)? != 1 {
        return Ok(None);
    }
    let r = seq.radius as i64;
    let one = Complex64::new(1.0, 0.0);

    let mut forward = vec![one];
    let mut k = 0_i64;
    loop {
        let next = forward[forward.len() - 1] * lambda / seq.value(k);
        if next.norm() < TAIL_CUTOFF && k >= r {
            break;
        }
        forward.push(next);
        k += 1;
        if forward.len() > MAX_TAIL {
            return Err(DiscreteError::TailTooLong(MAX_TAIL));
        }
    }

    let mut backward = Vec::new();
    let mut current = one;
    let mut k = -1_i64;
    loop {
        current = current * seq.value(k) / lambda;
        if current.norm() < TAIL_CUTOFF && k <= -r {
            break;
        }
        backward.push(current);
        k -= 1;
        if backward.len() > MAX_TAIL {
            return Err(DiscreteError::TailTooLong(MAX_TAIL));
        }
    }
    let start = -(backward.len() as i64);
    backward.reverse();
    backward.extend(forward);
    Ok(Some(ZVec {
        start,
        values: backward,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn annulus_examples() {
        let a = discrete_annulus(&CoeffSeq::step(1.0, 2.0).unwrap());
        assert_eq!((a.r, a.big_r), (1.0, 2.0));
        let a = discrete_annulus(&CoeffSeq::step(3.0, 3.0).unwrap());
        assert_eq!((a.r, a.big_r), (3.0, 3.0));
        let a = discrete_annulus(&CoeffSeq::step(2.0, 1.0).unwrap());
        assert_eq!((a.r, a.big_r), (1.0, 2.0));
    }

    #[test]
    fn kernel_examples() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        let u = kernel_vector(&seq, c(1.5)).unwrap().unwrap();
        assert_eq!(u.get(0), c(1.0));
        assert!((u.get(1) - c(0.75)).norm() < 1e-15);
        assert!((u.get(2) - c(0.5625)).norm() < 1e-15);
        assert!((u.get(-1) - c(1.0 / 1.5)).norm() < 1e-15);
        assert!((u.get(-2) - c(1.0 / 2.25)).norm() < 1e-15);
        let residual = apply(&seq, c(1.5), &u);
        assert!(residual.norm_inf() < 1e-15);

        assert!(kernel_vector(&seq, c(0.5)).unwrap().is_none());
        assert!(kernel_vector(&seq, c(2.5)).unwrap().is_none());
        assert_eq!(
            kernel_vector(&seq, c(2.0)),
            Err(DiscreteError::OnLimitCircle(2.0))
        );
    }

    #[test]
    fn index_examples() {
        assert_eq!(
            index_of(&CoeffSeq::step(1.0, 2.0).unwrap(), c(1.5)).unwrap(),
            1
        );
        assert_eq!(
            index_of(&CoeffSeq::step(2.0, 1.0).unwrap(), c(1.5)).unwrap(),
            -1
        );
        assert_eq!(
            index_of(&CoeffSeq::step(2.0, 1.0).unwrap(), c(2.5)).unwrap(),
            0
        );
        assert_eq!(
            index_of(&CoeffSeq::step(2.0, 1.0).unwrap(), c(0.5)).unwrap(),
            0
        );
        assert_eq!(
            index_of(&CoeffSeq::step(2.0, 1.0).unwrap(), c(0.0)),
            Err(DiscreteError::ZeroLambda)
        );
    }

    #[test]
    fn sequence_validation() {
        assert_eq!(
            CoeffSeq::new(vec![1.0, 0.0, 1.0], 1.0, 1.0),
            Err(DiscreteError::ZeroCoefficient(0))
        );
        assert_eq!(
            CoeffSeq::new(vec![1.0, 1.0], 1.0, 1.0),
            Err(DiscreteError::EvenWindow(2))
        );
        assert!(CoeffSeq::new(vec![1.0], 0.0, 1.0).is_err());
        let seq = CoeffSeq::new(vec![5.0, 6.0, 7.0], 1.0, 2.0).unwrap();
        assert_eq!(
            (-3..=3).map(|k| seq.value(k)).collect::<Vec<_>>(),
            vec![1.0, 1.0, 5.0, 6.0, 7.0, 2.0, 2.0]
        );
    }
}
