use serde::{Deserialize, Serialize};

use super::model::MapModel;
use super::{distance, DynamicsError};

/// Controls for detecting the limit of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    pub tol: f64,
    /// Number of further steps that must stay within `tol`.
    pub confirm: usize,
    pub max_iter: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            tol: 1e-9,
            confirm: 5,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

/// Id of the fixed point `F` with `αⁿ(x) → F` as `n → +∞`.
pub fn forward_limit(
    model: &MapModel,
    x: &[f64],
    opts: &LimitOptions,
) -> Result<usize, DynamicsError> {
    limit(model, x, opts, Direction::Forward)
}

/// Id of the fixed point `F` with `αⁿ(x) → F` as `n → −∞`.
pub fn backward_limit(
    model: &MapModel,
    x: &[f64],
    opts: &LimitOptions,
) -> Result<usize, DynamicsError> {
    limit(model, x, opts, Direction::Backward)
}

fn nearest_within(fixed: &[Vec<f64>], x: &[f64], tol: f64) -> Option<usize> {
    fixed
        .iter()
        .enumerate()
        .map(|(i, f)| (i, distance(f, x)))
        .filter(|&(_, d)| d < tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

fn limit(
    model: &MapModel,
    x: &[f64],
    opts: &LimitOptions,
    dir: Direction,
) -> Result<usize, DynamicsError> {
    if !model.contains(x) {
        return Err(DynamicsError::OutsideDomain(x.to_vec()));
    }
    let fixed = model.fixed_coords();
    let mut p = x.to_vec();
    let mut candidate: Option<usize> = None;
    let mut streak = 0;
    for _ in 0..=opts.max_iter {
        match nearest_within(&fixed, &p, opts.tol) {
            Some(id) => {
                if candidate == Some(id) {
                    streak += 1;
                } else {
                    candidate = Some(id);
                    streak = 0;
                }
                if streak >= opts.confirm {
                    return Ok(id);
                }
            }
            None => candidate = None,
        }
        p = match dir {
            Direction::Forward => model.forward(&p)?,
            Direction::Backward => model.inverse(&p)?,
        };
    }
    Err(DynamicsError::NoConvergence {
        steps: opts.max_iter,
    })
}
