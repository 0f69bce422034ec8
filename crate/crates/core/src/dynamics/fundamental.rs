use serde::{Deserialize, Serialize};

use super::interval::IntervalMap;
use super::limits::{backward_limit, forward_limit, LimitOptions};
use super::model::MapModel;
use super::DynamicsError;
use crate::coefficient::Coefficient;
use crate::discrete::CoeffSeq;

/// Points within this distance below the left end of `Θ` are treated as members,
/// so that exact hits like `γ²(0.2) = 0.5` survive rounding.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// The set `Ω⁺_sink ∩ Ω⁻_source` together with a base point on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitBlock {
    pub source: usize,
    pub sink: usize,
    pub base: Vec<f64>,
}

impl OrbitBlock {
    /// Checks the limits of `base` before building the block.
    pub fn new(
        model: &MapModel,
        base: Vec<f64>,
        opts: &LimitOptions,
    ) -> Result<Self, DynamicsError> {
        let source = backward_limit(model, &base, opts)?;
        let sink = forward_limit(model, &base, opts)?;
        Ok(OrbitBlock { source, sink, base })
    }
}

/// A random base point on the simplex block `F(source) → F(sink)`: `m − sink`
/// zeros, `source` ones and `sink − source` interior coordinates.
pub fn orbit_block<R: rand::Rng + ?Sized>(
    model: &MapModel,
    source: usize,
    sink: usize,
    rng: &mut R,
) -> Result<OrbitBlock, DynamicsError> {
    let m = model.simplex_dim().ok_or(DynamicsError::NeedsSimplex)?;
    if !(source < sink && sink <= m) {
        return Err(DynamicsError::Validation(format!(
            "no simplex block from F({source}) to F({sink})"
        )));
    }
    let base = super::model::simplex_point(m, m - sink, source, rng);
    Ok(OrbitBlock { source, sink, base })
}

/// Fundamental set of a simplex orbit block: the points whose leading active
/// coordinate (the smallest one strictly inside `(0, 1)`) lies in `[c, γ(c))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalDomain {
    gamma: IntervalMap,
    m: usize,
    zeros: usize,
    ones: usize,
    anchor: f64,
    upper: f64,
}

pub fn fundamental_domain(
    model: &MapModel,
    block: &OrbitBlock,
    anchor: f64,
) -> Result<FundamentalDomain, DynamicsError> {
    let MapModel::Simplex(s) = model else {
        return Err(DynamicsError::NeedsSimplex);
    };
    if !(anchor > 0.0 && anchor < 1.0) {
        return Err(DynamicsError::AnchorOutsideBasin(anchor));
    }
    if !(block.source < block.sink && block.sink <= s.m) {
        return Err(DynamicsError::Validation(format!(
            "no simplex block from F({}) to F({})",
            block.source, block.sink
        )));
    }
    Ok(FundamentalDomain {
        gamma: s.gamma.clone(),
        m: s.m,
        zeros: s.m - block.sink,
        ones: block.source,
        anchor,
        upper: s.gamma.apply(anchor)?,
    })
}

impl FundamentalDomain {
    /// `[c, γ(c))` on the leading active coordinate.
    pub fn interval(&self) -> (f64, f64) {
        (self.anchor, self.upper)
    }

    fn in_interval(&self, t: f64) -> bool {
        t >= self.anchor - MEMBERSHIP_SLACK && t < self.upper - MEMBERSHIP_SLACK
    }

    fn leading(&self, x: &[f64]) -> Result<f64, DynamicsError> {
        let not_in_block = || DynamicsError::NotInBlock(x.to_vec());
        if x.len() != self.m {
            return Err(not_in_block());
        }
        let (head, rest) = x.split_at(self.zeros);
        let (interior, tail) = rest.split_at(rest.len() - self.ones);
        let pinned = head.iter().all(|&v| v == 0.0) && tail.iter().all(|&v| v == 1.0);
        if !pinned || interior.is_empty() || !interior.iter().all(|&v| v > 0.0 && v < 1.0) {
            return Err(not_in_block());
        }
        Ok(interior[0])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.leading(x).is_ok_and(|t| self.in_interval(t))
    }

    /// The image `αⁿ(x)` that lands in `Θ`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let n = entry_index(self, x)?;
        x.iter()
            .map(|&v| {
                if v > 0.0 && v < 1.0 {
                    self.gamma.iterate(v, n)
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

const ENTRY_BUDGET: usize = 100_000;

/// The unique `n` with `αⁿ(x) ∈ Θ`.
pub fn entry_index(domain: &FundamentalDomain, x: &[f64]) -> Result<i64, DynamicsError> {
    let mut t = domain.leading(x)?;
    let mut n: i64 = 0;
    for _ in 0..ENTRY_BUDGET {
        if domain.in_interval(t) {
            return Ok(n);
        }
        if t < domain.anchor {
            t = domain.gamma.apply(t)?;
            n += 1;
        } else {
            t = domain.gamma.inverse(t)?;
            n -= 1;
        }
        if t <= 0.0 || t >= 1.0 {
            break;
        }
    }
    Err(DynamicsError::NoConvergence {
        steps: ENTRY_BUDGET,
    })
}

/// Orbit points `αᵏ(x)` for `k ∈ [−radius, radius]`, in increasing `k`.
pub fn orbit_window(
    model: &MapModel,
    x: &[f64],
    radius: usize,
) -> Result<Vec<(i64, Vec<f64>)>, DynamicsError> {
    if !model.contains(x) {
        return Err(DynamicsError::OutsideDomain(x.to_vec()));
    }
    let mut backward = Vec::with_capacity(radius);
    let mut p = x.to_vec();
    for k in 1..=radius as i64 {
        p = model.inverse(&p)?;
        backward.push((-k, p.clone()));
    }
    backward.reverse();
    let mut points = backward;
    points.push((0, x.to_vec()));
    let mut p = x.to_vec();
    for k in 1..=radius as i64 {
        p = model.forward(&p)?;
        points.push((k, p.clone()));
    }
    Ok(points)
}

/// Coefficients `a(αᵏ(τ))` for `k ∈ [−radius, radius]` with limits `a(F_source)` at
/// `−∞` and `a(F_sink)` at `+∞`.
pub fn coeff_sequence(
    model: &MapModel,
    a: &Coefficient,
    tau: &[f64],
    radius: usize,
    opts: &LimitOptions,
) -> Result<CoeffSeq, DynamicsError> {
    let source = backward_limit(model, tau, opts)?;
    let sink = forward_limit(model, tau, opts)?;
    let fixed = model.fixed_coords();
    let center = orbit_window(model, tau, radius)?
        .iter()
        .map(|(_, p)| a.eval(p))
        .collect::<Result<Vec<_>, _>>()?;
    let a_minus = a.eval(&fixed[source])?;
    let a_plus = a.eval(&fixed[sink])?;
    CoeffSeq::new(center, a_minus, a_plus)
        .map_err(|e| DynamicsError::Validation(format!("coefficient sequence: {e}")))
}
