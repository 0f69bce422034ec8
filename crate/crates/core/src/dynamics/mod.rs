//! Morse-Smale maps: the ordered-simplex product family and black-box maps.

mod fundamental;
mod interval;
mod limits;
mod model;
mod residence;

use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub use fundamental::{
    coeff_sequence, entry_index, fundamental_domain, orbit_block, orbit_window, FundamentalDomain,
    OrbitBlock, MEMBERSHIP_SLACK,
};
pub use interval::{
    make_interval_map, GammaSpec, IntervalMap, BISECTION_STEPS, DERIVATIVE_STEP, ENDPOINT_TOL,
    INVERSE_TOL,
};
pub use limits::{backward_limit, forward_limit, LimitOptions};
pub use model::{
    corner, simplex_point, BlackBoxModel, Domain, FixedPoint, FixedPointKind, MapModel,
    SimplexModel, FIXED_POINT_TOL, KIND_PROBES, KIND_PROBE_RADIUS,
};
pub use residence::{dwell_witness, residence_bound, DwellWitness, Neighborhoods, ResidenceReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("map validation failed: {0}")]
    Validation(String),
    #[error("point {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("no convergence within {steps} iterations")]
    NoConvergence { steps: usize },
    #[error("declared point {id} is not fixed")]
    NotFixed { id: usize },
    #[error("anchor {0} is not inside the open basin")]
    AnchorOutsideBasin(f64),
    #[error("point {0:?} does not belong to the orbit block")]
    NotInBlock(Vec<f64>),
    #[error("neighbourhoods of fixed points {0} and {1} overlap")]
    OverlappingNeighborhoods(usize, usize),
    #[error("no dwell witness found within {budget} candidates")]
    WitnessNotFound { budget: usize },
    #[error("operation needs the simplex product family")]
    NeedsSimplex,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
