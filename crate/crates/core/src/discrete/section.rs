//! Finite sections of `aW − λ` and their smallest singular values.
//!
//! The section is upper bidiagonal with diagonal `−λ` and superdiagonal
//! `a(−N), …, a(N−1)`. Multiplying rows and columns by unimodular scalars turns it
//! into the real bidiagonal `B` with diagonal `|λ|` and superdiagonal `|a(k)|`, so
//! all singular data is computed on `B`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CoeffSeq, DiscreteError};

pub const SIGMA_TOL: f64 = 1e-10;
pub const SIGMA_MAX_ITER: usize = 10_000;
const RESCALE_AT: f64 = 1e150;
const BISECTION_MAX: usize = 2_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSection {
    truncation: usize,
    diag: f64,
    sup: Vec<f64>,
}

pub fn finite_section(
    seq: &CoeffSeq,
    lambda: Complex64,
    truncation: usize,
) -> Result<FiniteSection, DiscreteError> {
    if truncation < 4 {
        return Err(DiscreteError::SectionTooSmall(truncation));
    }
    let n = truncation as i64;
    Ok(FiniteSection {
        truncation,
        diag: lambda.norm(),
        sup: (-n..n).map(|k| seq.value(k).abs()).collect(),
    })
}

/// Smallest singular value with its right and left singular vectors, indexed by
/// row/column `0..2N+1` (position `i` corresponds to `k = i − N`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularTriple {
    pub sigma: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub iterations: usize,
}

impl FiniteSection {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn size(&self) -> usize {
        2 * self.truncation + 1
    }

    /// Dense real form of `B`, mostly for cross-checks.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag;
            if i + 1 < n {
                m[i][i + 1] = self.sup[i];
            }
        }
        m
    }

    /// `B x` for real `x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let tail = if i + 1 < n {
                    self.sup[i] * x[i + 1]
                } else {
                    0.0
                };
                self.diag * x[i] + tail
            })
            .collect()
    }

    /// `sigma_min` by inverse power iteration on `BᵀB`, stopping when the estimate
    /// of `ln σ` moves by less than `SIGMA_TOL`.
    pub fn sigma_min(&self) -> Result<SingularTriple, DiscreteError> {
        self.inverse_iteration(SIGMA_MAX_ITER, true)
    }

    /// Singular vectors for the smallest singular value after at most `steps`
    /// iterations; the value itself comes from bisection. Used when the
    /// smallest singular value is isolated so that a few steps suffice.
    pub fn smallest_triple(&self, steps: usize) -> Result<SingularTriple, DiscreteError> {
        let mut t = self.inverse_iteration(steps, false)?;
        t.sigma = self.smallest_singular_values(1)[0];
        Ok(t)
    }

    fn inverse_iteration(
        &self,
        max_iter: usize,
        strict: bool,
    ) -> Result<SingularTriple, DiscreteError> {
        if self.diag == 0.0 {
            let n = self.size();
            let mut right = vec![0.0; n];
            right[0] = 1.0;
            let mut left = vec![0.0; n];
            left[n - 1] = 1.0;
            return Ok(SingularTriple {
                sigma: 0.0,
                right,
                left,
                iterations: 0,
            });
        }
        let n = self.size();
        let mut z: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i as f64).sin()).collect();
        normalize(&mut z);
        let mut prev = f64::NAN;
        for it in 1..=max_iter {
            let (y, ly) = self.solve_transposed(&z);
            let (mut x, lx) = self.solve(&y);
            let ln_norm = normalize(&mut x).ln() + ly + lx;
            z = x;
            // ‖(BᵀB)⁻¹z‖ → σ⁻², so ln σ = −ln_norm/2
            let ln_sigma = -0.5 * ln_norm;
            if (ln_sigma - prev).abs() < SIGMA_TOL || (!strict && it == max_iter) {
                let (mut left, _) = self.solve_transposed(&z);
                normalize(&mut left);
                return Ok(SingularTriple {
                    sigma: ln_sigma.exp(),
                    right: z,
                    left,
                    iterations: it,
                });
            }
            prev = ln_sigma;
        }
        Err(DiscreteError::NoConvergence(max_iter))
    }

    // Bᵀy = z by forward substitution, with a running log-scale.
    fn solve_transposed(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let n = z.len();
        let mut rhs = z.to_vec();
        let mut y = vec![0.0; n];
        let mut log_scale = 0.0;
        for i in 0..n {
            let coupling = if i > 0 {
                self.sup[i - 1] * y[i - 1]
            } else {
                0.0
            };
            y[i] = (rhs[i] - coupling) / self.diag;
            if y[i].abs() > RESCALE_AT {
                let s = 1.0 / RESCALE_AT;
                y[..=i].iter_mut().for_each(|v| *v *= s);
                rhs[i + 1..].iter_mut().for_each(|v| *v *= s);
                log_scale += RESCALE_AT.ln();
            }
        }
        (y, log_scale)
    }

    // Bx = y by back substitution, with a running log-scale.
    fn solve(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let n = y.len();
        let mut rhs = y.to_vec();
        let mut x = vec![0.0; n];
        let mut log_scale = 0.0;
        for i in (0..n).rev() {
            let coupling = if i + 1 < n {
                self.sup[i] * x[i + 1]
            } else {
                0.0
            };
            x[i] = (rhs[i] - coupling) / self.diag;
            if x[i].abs() > RESCALE_AT {
                let s = 1.0 / RESCALE_AT;
                x[i..].iter_mut().for_each(|v| *v *= s);
                rhs[..i].iter_mut().for_each(|v| *v *= s);
                log_scale += RESCALE_AT.ln();
            }
        }
        (x, log_scale)
    }

    /// Off-diagonal of the Golub–Kahan tridiagonal `[[0, Bᵀ], [B, 0]]` after the
    /// perfect shuffle: `d, e₀, d, e₁, …, d`.
    fn golub_kahan(&self) -> Vec<f64> {
        let n = self.size();
        let mut off = Vec::with_capacity(2 * n - 1);
        for i in 0..n {
            off.push(self.diag);
            if i + 1 < n {
                off.push(self.sup[i]);
            }
        }
        off
    }

    // Number of singular values strictly below x (x > 0), via a Sturm count on
    // the Golub–Kahan matrix, whose eigenvalues are ±σ.
    fn count_below(off: &[f64], n: usize, x: f64) -> usize {
        // a vanishing pivot is replaced by −pivmin and counted as negative,
        // which amounts to shifting x by a negligible amount
        let pivmin = f64::MIN_POSITIVE;
        let guard = |q: f64| if q.abs() < pivmin { -pivmin } else { q };
        let mut q = guard(-x);
        let mut negatives = usize::from(q < 0.0);
        for &b in off {
            q = guard(-x - b * b / q);
            if q < 0.0 {
                negatives += 1;
            }
        }
        negatives.saturating_sub(n)
    }

    /// The `count` smallest singular values in increasing order, by bisection to
    /// relative accuracy about `1e-14`.
    pub fn smallest_singular_values(&self, count: usize) -> Vec<f64> {
        let off = self.golub_kahan();
        let n = self.size();
        let upper = self.diag + self.sup.iter().copied().fold(0.0, f64::max) + 1.0;
        (0..count.min(n))
            .map(|j| {
                let (mut lo, mut hi) = (0.0_f64, upper);
                for _ in 0..BISECTION_MAX {
                    if hi - lo <= 1e-14 * hi || hi < 1e-300 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if Self::count_below(&off, n, mid) > j {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn step_section(lambda: f64, n: usize) -> FiniteSection {
        finite_section(&CoeffSeq::step(1.0, 2.0).unwrap(), c(lambda), n).unwrap()
    }

    #[test]
    fn outside_spectrum_bounded_below() {
        for n in [50, 100, 200] {
            let s = step_section(3.0, n).smallest_singular_values(1)[0];
            assert!(s >= 0.9, "N = {n}: {s}");
        }
    }

    #[test]
    fn right_regime_single_small_value() {
        // the kernel vector decays like 0.75^N, so N = 50 leaves σ₁ near 3e-7
        for n in [100, 200, 400] {
            let s = step_section(1.5, n).smallest_singular_values(2);
            assert!(s[0] < 1e-8, "{s:?}");
            assert!(s[1] > 0.1, "{s:?}");
        }
    }

    #[test]
    fn inverse_iteration_matches_bisection() {
        for (lambda, n) in [(1.5, 50), (2.0, 50), (0.5, 60), (3.0, 8)] {
            let fs = step_section(lambda, n);
            let t = fs.sigma_min().unwrap();
            let b = fs.smallest_singular_values(1)[0];
            assert!(
                (t.sigma / b - 1.0).abs() < 1e-6,
                "{lambda}: {} vs {b}",
                t.sigma
            );
            // B v = σ u
            let bv = fs.mul(&t.right);
            let norm = bv.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm / t.sigma - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn phase_only_changes_nothing() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        let a = finite_section(&seq, c(2.0), 50).unwrap();
        let b = finite_section(&seq, Complex64::from_polar(2.0, 1.1), 50).unwrap();
        assert_eq!(a.smallest_singular_values(3), b.smallest_singular_values(3));
    }

    #[test]
    fn too_small_truncation() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        assert_eq!(
            finite_section(&seq, c(1.0), 3),
            Err(DiscreteError::SectionTooSmall(3))
        );
    }
}
