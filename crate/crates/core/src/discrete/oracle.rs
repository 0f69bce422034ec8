//! Block-level numerical verification of a predicted regime.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::section::{finite_section, FiniteSection};
use super::solve::{right_inverse_apply, right_inverse_bound, shoot_solve};
use super::{apply, kernel_vector, on_circle, CoeffSeq, ZVec};

pub const DEFAULT_TRUNCATIONS: [usize; 4] = [50, 100, 200, 400];
/// A singular value below this at the largest truncation counts as a zero mode.
pub const TINY_SINGULAR: f64 = 1e-8;
/// `σ(N_max) ≥ BOUNDED_RATIO · σ(N_min)` reads as bounded below.
pub const BOUNDED_RATIO: f64 = 0.5;
/// Minimal fitted power-law exponent of the decay `σ(N) ~ N^{−p}` for the
/// non-closed signature. An unbounded inverse at a limit circle gives `p ≈ 1`.
pub const NONCLOSED_MIN_EXPONENT: f64 = 0.75;
/// Ratio between the last two rungs above which the ladder counts as a plateau.
pub const PLATEAU_RATIO: f64 = 0.9;
const RESIDUAL_TOL: f64 = 1e-12;
const RECOVERY_TOL: f64 = 1e-8;
const MISMATCH_TOL: f64 = 1e-10;
const EDGE_FRACTION: f64 = 0.1;
const LOCALIZATION_STEPS: usize = 50;

/// Which regime `|λ|` falls into relative to the limits `|a(±∞)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRegime {
    /// `|a(−∞)| < |λ| < |a(+∞)|`: surjective, one-dimensional kernel.
    Right,
    /// `|a(+∞)| < |λ| < |a(−∞)|`: injective with closed range of codimension one.
    Left,
    /// `|λ|` above both limits: invertible.
    Above,
    /// `|λ|` below both limits: invertible.
    Below,
    OnCircle,
}

impl BlockRegime {
    pub fn of(a_minus: f64, a_plus: f64, modulus: f64) -> Self {
        let (lo, hi) = (a_minus.abs(), a_plus.abs());
        if on_circle(modulus, lo) || on_circle(modulus, hi) {
            BlockRegime::OnCircle
        } else if lo < modulus && modulus < hi {
            BlockRegime::Right
        } else if hi < modulus && modulus < lo {
            BlockRegime::Left
        } else if modulus > hi {
            BlockRegime::Above
        } else {
            BlockRegime::Below
        }
    }

    pub fn index(self) -> Option<i8> {
        match self {
            BlockRegime::Right => Some(1),
            BlockRegime::Left => Some(-1),
            BlockRegime::Above | BlockRegime::Below => Some(0),
            BlockRegime::OnCircle => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeSignature {
    BoundedBelow,
    NonClosed,
    Gray,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: usize,
    pub sigma_min: f64,
    pub second_smallest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub modulus: f64,
    pub a_minus: f64,
    pub a_plus: f64,
    pub predicted: BlockRegime,
    pub predicted_index: Option<i8>,
    pub ladder: Vec<LadderRow>,
    /// Number of singular values treated as zero modes when reading the ladder.
    pub zero_modes: usize,
    pub decay_exponent: Option<f64>,
    pub range_signature: RangeSignature,
    pub kernel_dim_estimate: Option<usize>,
    pub right_inverse_residual: Option<f64>,
    pub right_inverse_bound: Option<f64>,
    pub shooting_mismatch: Option<f64>,
    pub recovery_error: Option<f64>,
    pub index_estimate: Option<i8>,
    pub agreement: bool,
    pub diagnostics: Vec<String>,
}

fn probe_vector() -> ZVec {
    ZVec::from_real(-3, &[0.2, -0.5, 1.0, 0.7, -0.3, 0.4, 0.1])
}

/// Runs every applicable probe on the block operator `aW − λ` and compares the
/// observations with `predicted`.
pub fn verify_block(
    seq: &CoeffSeq,
    lambda: Complex64,
    predicted: BlockRegime,
    truncations: &[usize],
) -> OracleReport {
    let modulus = lambda.norm();
    let mut diagnostics = Vec::new();
    let mut truncs = truncations.to_vec();
    truncs.sort_unstable();
    truncs.dedup();
    let observed_regime = BlockRegime::of(seq.a_minus(), seq.a_plus(), modulus);
    if observed_regime != predicted {
        diagnostics.push(format!(
            "limits give regime {observed_regime:?}, predicted {predicted:?}"
        ));
    }

    let mut sections: Vec<FiniteSection> = Vec::new();
    for &n in &truncs {
        match finite_section(seq, lambda, n) {
            Ok(s) => sections.push(s),
            Err(e) => diagnostics.push(format!("N = {n}: {e}")),
        }
    }
    let ladder: Vec<LadderRow> = sections
        .iter()
        .map(|s| {
            let v = s.smallest_singular_values(2);
            LadderRow {
                n: s.truncation(),
                sigma_min: v[0],
                second_smallest: v[1],
            }
        })
        .collect();

    let zero_modes = usize::from(ladder.last().is_some_and(|r| r.sigma_min < TINY_SINGULAR));
    let probe: Vec<f64> = ladder
        .iter()
        .map(|r| {
            if zero_modes == 1 {
                r.second_smallest
            } else {
                r.sigma_min
            }
        })
        .collect();
    let (range_signature, decay_exponent) = read_ladder(&ladder, &probe, &mut diagnostics);

    let kernel_dim_estimate = match kernel_vector(seq, lambda) {
        Ok(Some(u)) => {
            let residual = apply(seq, lambda, &u).norm_inf();
            if residual > RESIDUAL_TOL {
                diagnostics.push(format!("kernel residual {residual:e}"));
            }
            Some(1)
        }
        Ok(None) => Some(0),
        Err(_) => None,
    };

    let f = probe_vector();
    let (mut right_inverse_residual, mut bound) = (None, None);
    let (mut shooting_mismatch, mut recovery_error) = (None, None);
    match observed_regime {
        BlockRegime::Right => {
            if let Ok(u) = right_inverse_apply(seq, lambda, &f) {
                let r = apply(seq, lambda, &u).sub(&f).norm_inf() / (1.0 + f.norm_inf());
                right_inverse_residual = Some(r);
            }
            bound = right_inverse_bound(seq, lambda).ok();
        }
        BlockRegime::Left => {
            let g = apply(seq, lambda, &f);
            let n = truncs.last().copied().unwrap_or(DEFAULT_TRUNCATIONS[3]);
            match shoot_solve(seq, lambda, &g, n.max(g.support_radius() + 1)) {
                Ok(res) => {
                    shooting_mismatch = Some(res.mismatch);
                    recovery_error = Some(res.u.sub(&f).norm2() / f.norm2());
                }
                Err(e) => diagnostics.push(format!("shooting: {e}")),
            }
        }
        _ => {}
    }

    let index_estimate = match sections.last() {
        Some(s) if zero_modes == 1 => localized_index(s, &mut diagnostics),
        Some(_) => Some(0),
        None => None,
    };

    let predicted_index = predicted.index();
    let mut agreement = observed_regime == predicted;
    let mut require = |ok: bool, what: &str| {
        if !ok {
            agreement = false;
            diagnostics.push(format!("{what} does not match {predicted:?}"));
        }
    };
    match predicted {
        BlockRegime::OnCircle => {
            require(
                range_signature == RangeSignature::NonClosed,
                "range signature",
            );
        }
        _ => {
            require(
                range_signature == RangeSignature::BoundedBelow,
                "range signature",
            );
            require(index_estimate == predicted_index, "index estimate");
            let want_kernel = usize::from(predicted == BlockRegime::Right);
            require(kernel_dim_estimate == Some(want_kernel), "kernel dimension");
        }
    }
    if predicted == BlockRegime::Right {
        require(
            right_inverse_residual.is_some_and(|r| r <= RESIDUAL_TOL),
            "right-inverse residual",
        );
    }
    if predicted == BlockRegime::Left {
        require(
            recovery_error.is_some_and(|e| e < RECOVERY_TOL)
                && shooting_mismatch.is_some_and(|m| m < MISMATCH_TOL),
            "shooting recovery",
        );
    }

    OracleReport {
        modulus,
        a_minus: seq.a_minus(),
        a_plus: seq.a_plus(),
        predicted,
        predicted_index,
        ladder,
        zero_modes,
        decay_exponent,
        range_signature,
        kernel_dim_estimate,
        right_inverse_residual,
        right_inverse_bound: bound,
        shooting_mismatch,
        recovery_error,
        index_estimate,
        agreement,
        diagnostics,
    }
}

fn read_ladder(
    ladder: &[LadderRow],
    probe: &[f64],
    diagnostics: &mut Vec<String>,
) -> (RangeSignature, Option<f64>) {
    if probe.len() < 2 {
        diagnostics.push("ladder needs at least two truncations".into());
        return (RangeSignature::Gray, None);
    }
    let (first, last) = (probe[0], probe[probe.len() - 1]);
    let (n0, n1) = (ladder[0].n as f64, ladder[ladder.len() - 1].n as f64);
    let exponent = if first > 0.0 && last > 0.0 {
        Some((first / last).ln() / (n1 / n0).ln())
    } else {
        None
    };
    if last >= BOUNDED_RATIO * first {
        return (RangeSignature::BoundedBelow, exponent);
    }
    let decreasing = probe.windows(2).all(|w| w[1] < w[0]);
    let prev = probe[probe.len() - 2];
    let plateau = last > PLATEAU_RATIO * prev;
    if decreasing && !plateau && exponent.is_some_and(|p| p >= NONCLOSED_MIN_EXPONENT) {
        (RangeSignature::NonClosed, exponent)
    } else {
        diagnostics.push(format!(
            "ladder in the gray zone: exponent {exponent:?}, decreasing {decreasing}, plateau {plateau}"
        ));
        (RangeSignature::Gray, exponent)
    }
}

fn edge_mass(v: &[f64]) -> f64 {
    let n = v.len();
    let band = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
    let total: f64 = v.iter().map(|x| x * x).sum();
    let edge: f64 = v[..band].iter().chain(&v[n - band..]).map(|x| x * x).sum();
    edge / total
}

// Where the zero mode lives: a right singular vector inside the window is a
// genuine kernel vector, a left one inside is a cokernel vector, and a pair
// pinned to the truncation edges is an artefact of cutting an invertible operator.
fn localized_index(section: &FiniteSection, diagnostics: &mut Vec<String>) -> Option<i8> {
    let triple = match section.smallest_triple(LOCALIZATION_STEPS) {
        Ok(t) => t,
        Err(e) => {
            diagnostics.push(format!("singular vectors: {e}"));
            return None;
        }
    };
    let (v, u) = (edge_mass(&triple.right), edge_mass(&triple.left));
    let interior = |m: f64| m < 1e-3;
    let at_edge = |m: f64| m > 0.5;
    match () {
        _ if interior(v) && at_edge(u) => Some(1),
        _ if interior(u) && at_edge(v) => Some(-1),
        _ if at_edge(u) && at_edge(v) => Some(0),
        _ => {
            diagnostics.push(format!(
                "zero mode not localized: right edge mass {v:e}, left edge mass {u:e}"
            ));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn run(a_minus: f64, a_plus: f64, lambda: f64) -> OracleReport {
        let seq = CoeffSeq::step(a_minus, a_plus).unwrap();
        let regime = BlockRegime::of(a_minus, a_plus, lambda);
        verify_block(&seq, c(lambda), regime, &DEFAULT_TRUNCATIONS)
    }

    #[test]
    fn right_block() {
        let r = run(1.0, 2.0, 1.5);
        assert!(r.agreement, "{:?}", r.diagnostics);
        assert_eq!(r.index_estimate, Some(1));
        assert!(r.right_inverse_residual.unwrap() < 1e-12);
    }

    #[test]
    fn left_block() {
        let r = run(3.0, 2.0, 2.5);
        assert!(r.agreement, "{:?}", r.diagnostics);
        assert_eq!(r.index_estimate, Some(-1));
    }

    #[test]
    fn invertible_blocks() {
        for (a, b, l) in [
            (1.0, 2.0, 3.0),
            (1.0, 2.0, 0.5),
            (2.0, 1.0, 0.5),
            (2.0, 2.0, 1.0),
        ] {
            let r = run(a, b, l);
            assert!(r.agreement, "{a} {b} {l}: {:?}", r.diagnostics);
            assert_eq!(r.index_estimate, Some(0));
        }
    }

    #[test]
    fn circle_blocks() {
        for (a, b, l) in [(1.0, 2.0, 2.0), (1.0, 2.0, 1.0), (2.0, 1.0, 2.0)] {
            let r = run(a, b, l);
            assert_eq!(r.range_signature, RangeSignature::NonClosed, "{a} {b} {l}");
            assert!(r.agreement);
        }
    }

    #[test]
    fn wrong_prediction_disagrees() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        let r = verify_block(&seq, c(1.5), BlockRegime::Left, &DEFAULT_TRUNCATIONS);
        assert!(!r.agreement);
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn single_rung_is_gray() {
        let seq = CoeffSeq::step(1.0, 2.0).unwrap();
        let r = verify_block(&seq, c(3.0), BlockRegime::Above, &[50]);
        assert_eq!(r.range_signature, RangeSignature::Gray);
        assert!(!r.agreement);
    }
}
