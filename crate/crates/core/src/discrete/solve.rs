use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{index_of, CoeffSeq, DiscreteError, ZVec, MAX_TAIL, TAIL_CUTOFF};

fn require_index(seq: &CoeffSeq, lambda: Complex64, want: i8) -> Result<f64, DiscreteError> {
    let index = index_of(seq, lambda)?;
    if index != want {
        return Err(DiscreteError::RegimeViolation {
            modulus: lambda.norm(),
            expected: if want == 1 { "right" } else { "left" },
        });
    }
    Ok(lambda.norm())
}

/// Right inverse of `aW − λ` normalised by `u(0) = 0`.
///
/// Both recursions run away from the origin, where they contract, and stop once
/// the solution has left the support of `f` and the coefficient window and fallen
/// below `TAIL_CUTOFF·(1 + ‖f‖∞)`.
pub fn right_inverse_apply(
    seq: &CoeffSeq,
    lambda: Complex64,
    f: &ZVec,
) -> Result<ZVec, DiscreteError> {
    require_index(seq, lambda, 1)?;
    let cutoff = TAIL_CUTOFF * (1.0 + f.norm_inf());
    let r = seq.radius() as i64;
    let zero = Complex64::new(0.0, 0.0);

    let forward_end = f.end().max(r);
    let mut forward = vec![zero];
    let mut k = 0_i64;
    loop {
        let next = (f.get(k) + lambda * forward[forward.len() - 1]) / seq.value(k);
        if k >= forward_end && next.norm() < cutoff {
            break;
        }
        forward.push(next);
        k += 1;
        if forward.len() > MAX_TAIL {
            return Err(DiscreteError::TailTooLong(MAX_TAIL));
        }
    }

    let backward_end = f.start.min(-r);
    let mut backward = Vec::new();
    let mut current = zero;
    let mut k = -1_i64;
    loop {
        current = (current * seq.value(k) - f.get(k)) / lambda;
        if k <= backward_end && current.norm() < cutoff {
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
    Ok(ZVec {
        start,
        values: backward,
    })
}

/// Explicit bound `C` with `‖right_inverse_apply(f)‖₂ ≤ C·‖f‖₂`.
///
/// The right inverse is a sum of two triangular kernels. On the positive side the
/// entries are `Π ρ_l / |a(k−1)|` with `ρ_l = |λ/a(l)|`; past the first index `K′`
/// after which every `ρ_l < 1` they decay at least like `q₊ = sup ρ_l`, and the
/// finitely many factors before `K′` contribute at most the largest contiguous
/// sub-product `P₊`. Schur's test then gives `A₊·P₊·q₊^{−K′}/(1−q₊)`. The negative
/// side is the mirror image with `s_l = |a(l)/λ|` and prefactor `1/|λ|`.
pub fn right_inverse_bound(seq: &CoeffSeq, lambda: Complex64) -> Result<f64, DiscreteError> {
    let m = require_index(seq, lambda, 1)?;
    let r = seq.radius() as i64;

    let rho: Vec<f64> = (0..=r).map(|l| m / seq.value(l).abs()).collect();
    let rho_limit = m / seq.a_plus().abs();
    let k_plus = first_contracting(&rho);
    let q_plus = rho[k_plus..].iter().copied().fold(rho_limit, f64::max);
    let p_plus = max_subproduct(&rho[..k_plus]);
    let a_plus = (0..=r)
        .map(|l| 1.0 / seq.value(l).abs())
        .fold(1.0 / seq.a_plus().abs(), f64::max);
    let c_plus = a_plus * p_plus * q_plus.powi(-(k_plus as i32)) / (1.0 - q_plus);

    // index i of `s` is position l = −1 − i
    let s: Vec<f64> = (1..=r + 1).map(|i| seq.value(-i).abs() / m).collect();
    let s_limit = seq.a_minus().abs() / m;
    let k_minus = first_contracting(&s);
    let q_minus = s[k_minus..].iter().copied().fold(s_limit, f64::max);
    let p_minus = max_subproduct(&s[..k_minus]);
    let c_minus = p_minus * q_minus.powi(-(k_minus as i32)) / (m * (1.0 - q_minus));

    Ok(c_plus.max(c_minus))
}

// Smallest i such that every ratio from i on is below one.
fn first_contracting(ratios: &[f64]) -> usize {
    ratios.iter().rposition(|&v| v >= 1.0).map_or(0, |i| i + 1)
}

fn max_subproduct(ratios: &[f64]) -> f64 {
    let mut best = 1.0_f64;
    for i in 0..ratios.len() {
        let mut p = 1.0;
        for &v in &ratios[i..] {
            p *= v;
            best = best.max(p);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    /// Left recursion on `[−N, −1]`, right recursion on `[0, N]`.
    pub u: ZVec,
    /// `|u_left(0) − u_right(0)| / (1 + ‖f‖₂)`.
    pub mismatch: f64,
}

/// Solves `(aW − λ)u = f` in the left regime by shooting from both ends.
pub fn shoot_solve(
    seq: &CoeffSeq,
    lambda: Complex64,
    f: &ZVec,
    truncation: usize,
) -> Result<ShootResult, DiscreteError> {
    require_index(seq, lambda, -1)?;
    let support = f.support_radius();
    if truncation <= support {
        return Err(DiscreteError::TruncationTooSmall {
            truncation,
            support,
        });
    }
    let n = truncation as i64;
    let zero = Complex64::new(0.0, 0.0);

    // u_left(−N) = 0, u(k+1) = (f(k) + λu(k))/a(k) up to k = −1
    let mut left = vec![zero];
    for k in -n..0 {
        let next = (f.get(k) + lambda * left[left.len() - 1]) / seq.value(k);
        left.push(next);
    }
    // u_right(N) = 0, u(k) = (a(k)u(k+1) − f(k))/λ down to k = 0
    let mut right = vec![zero; truncation + 1];
    for k in (0..n).rev() {
        let i = k as usize;
        right[i] = (seq.value(k) * right[i + 1] - f.get(k)) / lambda;
    }
    let mismatch = (left[truncation] - right[0]).norm() / (1.0 + f.norm2());
    let mut values = left[..truncation].to_vec();
    values.extend(right);
    Ok(ShootResult {
        u: ZVec { start: -n, values },
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{apply, kernel_vector};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn right_inverse_examples() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        let u = right_inverse_apply(&seq, c(1.5), &ZVec::delta(0)).unwrap();
        for (k, e) in [
            (1, 0.5),
            (2, 0.375),
            (3, 0.28125),
            (0, 0.0),
            (-1, 0.0),
            (-5, 0.0),
        ] {
            assert!((u.get(k) - c(e)).norm() < 1e-15, "k = {k}");
        }
        let residual = apply(&seq, c(1.5), &u).sub(&ZVec::delta(0));
        assert!(residual.norm_inf() < 1e-14);

        let zero = right_inverse_apply(&seq, c(1.5), &ZVec::zeros(-3, 7)).unwrap();
        assert_eq!(zero.norm_inf(), 0.0);
    }

    #[test]
    fn right_inverse_differs_by_kernel_multiple() {
        let seq = CoeffSeq::new(vec![1.3, 0.7, 2.5, 1.9, 2.2], 1.0, 2.0).unwrap();
        let lambda = Complex64::from_polar(1.5, 0.4);
        let v = ZVec::from_real(-2, &[0.3, -1.0, 2.0, 0.5]);
        let f = apply(&seq, lambda, &v);
        let u = right_inverse_apply(&seq, lambda, &f).unwrap();
        let diff = u.sub(&v);
        let kernel = kernel_vector(&seq, lambda).unwrap().unwrap();
        // diff = t·kernel with t = diff(0)/kernel(0) = −v(0)
        let t = diff.get(0) / kernel.get(0);
        assert!((t + v.get(0)).norm() < 1e-12);
        let rest = diff.sub(&kernel.scaled(t));
        assert!(rest.norm_inf() < 1e-12, "{}", rest.norm_inf());
    }

    #[test]
    fn step_bound_value() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        let bound = right_inverse_bound(&seq, c(1.5)).unwrap();
        // q₊ = 0.75, A₊ = 1/2 → 2; q₋ = 2/3, 1/|λ| → 2
        assert!((bound - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bound_with_expanding_window() {
        // ρ > 1 at k = 0, 1 forces K′ = 2 and a window factor
        let seq = CoeffSeq::new(vec![2.0, 2.0, 1.0, 1.2, 3.0], 0.5, 4.0).unwrap();
        let lambda = c(1.5);
        let bound = right_inverse_bound(&seq, lambda).unwrap();
        for j in -4..=4 {
            let u = right_inverse_apply(&seq, lambda, &ZVec::delta(j)).unwrap();
            assert!(u.norm2() <= bound, "δ_{j}: {} > {bound}", u.norm2());
        }
    }

    #[test]
    fn regime_checks() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        assert!(matches!(
            right_inverse_apply(&seq, c(2.5), &ZVec::delta(0)),
            Err(DiscreteError::RegimeViolation { .. })
        ));
        assert!(matches!(
            shoot_solve(&seq, c(1.5), &ZVec::delta(0), 50),
            Err(DiscreteError::RegimeViolation { .. })
        ));
        let left = CoeffSeq::step(2.0, 1.0).unwrap();
        assert!(matches!(
            shoot_solve(&left, c(1.5), &ZVec::delta(5), 5),
            Err(DiscreteError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn shooting_examples() {
        let seq = CoeffSeq::step(2.0, 1.0).unwrap();
        let f = apply(&seq, c(1.5), &ZVec::delta(0));
        let res = shoot_solve(&seq, c(1.5), &f, 100).unwrap();
        assert!(res.mismatch < 1e-10);
        assert!(res.u.sub(&ZVec::delta(0)).norm2() < 1e-8);

        let res = shoot_solve(&seq, c(1.5), &ZVec::delta(0), 100).unwrap();
        assert!(res.mismatch > 1e-2, "{}", res.mismatch);

        let res = shoot_solve(&seq, c(1.5), &ZVec::zeros(0, 1), 10).unwrap();
        assert_eq!(res.mismatch, 0.0);
        assert_eq!(res.u.norm_inf(), 0.0);
    }
}
