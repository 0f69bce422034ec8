use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::interval::IntervalMap;
use super::limits::{backward_limit, forward_limit, LimitOptions};
use super::{distance, DynamicsError};
use crate::expr::{EvalError, Expr};

/// Tolerance for the fixed-point equation `α(F) = F`.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Probe count and ball radius used to classify black-box fixed points.
pub const KIND_PROBES: usize = 50;
pub const KIND_PROBE_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedPointKind {
    Attracting,
    Repelling,
    Saddle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub id: usize,
    pub coords: Vec<f64>,
    pub kind: FixedPointKind,
}

/// Phase space of a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[0, 1]^d`.
    Cube,
    /// `0 ≤ x₁ ≤ … ≤ x_d ≤ 1`.
    Simplex,
    /// The face of the ordered simplex with the first `zeros` coordinates equal to 0
    /// and the last `ones` equal to 1.
    SimplexFace { zeros: usize, ones: usize },
}

const DOMAIN_TOL: f64 = 1e-12;

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        let in_unit = x
            .iter()
            .all(|&v| v.is_finite() && (-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&v));
        if !in_unit {
            return false;
        }
        match *self {
            Domain::Cube => true,
            Domain::Simplex => x.windows(2).all(|w| w[0] <= w[1] + DOMAIN_TOL),
            Domain::SimplexFace { zeros, ones } => {
                let d = x.len();
                zeros + ones <= d
                    && x.windows(2).all(|w| w[0] <= w[1] + DOMAIN_TOL)
                    && x[..zeros].iter().all(|&v| v.abs() <= DOMAIN_TOL)
                    && x[d - ones..].iter().all(|&v| (v - 1.0).abs() <= DOMAIN_TOL)
            }
        }
    }

    /// Draws a point; roughly half the draws land on a random face (some
    /// coordinates pinned to 0 or 1) so that lower-dimensional orbits are hit.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        let on_face = rng.random_bool(0.5);
        match *self {
            Domain::Cube => (0..dim)
                .map(|_| {
                    if on_face && rng.random_bool(0.5) {
                        if rng.random_bool(0.5) {
                            0.0
                        } else {
                            1.0
                        }
                    } else {
                        open_unit(rng)
                    }
                })
                .collect(),
            Domain::Simplex => {
                let (zeros, ones) = if on_face {
                    random_face(dim, rng)
                } else {
                    (0, 0)
                };
                simplex_point(dim, zeros, ones, rng)
            }
            Domain::SimplexFace { zeros, ones } => {
                let free = dim - zeros - ones;
                let (z, o) = if on_face {
                    random_face(free, rng)
                } else {
                    (0, 0)
                };
                simplex_point(dim, zeros + z, ones + o, rng)
            }
        }
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

fn random_face<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> (usize, usize) {
    // uniform over the (zeros, ones) patterns with zeros + ones <= dim
    let patterns = (dim + 1) * (dim + 2) / 2;
    let mut pick = rng.random_range(0..patterns);
    for zeros in 0..=dim {
        let count = dim - zeros + 1;
        if pick < count {
            return (zeros, pick);
        }
        pick -= count;
    }
    (0, 0)
}

/// A point of the ordered simplex with the given numbers of pinned zeros/ones and
/// the remaining coordinates sorted uniform draws in `(0, 1)`.
pub fn simplex_point<R: Rng + ?Sized>(
    dim: usize,
    zeros: usize,
    ones: usize,
    rng: &mut R,
) -> Vec<f64> {
    let free = dim - zeros - ones;
    let mut interior: Vec<f64> = (0..free).map(|_| open_unit(rng)).collect();
    interior.sort_by(f64::total_cmp);
    let mut x = vec![0.0; zeros];
    x.extend(interior);
    x.extend(std::iter::repeat_n(1.0, ones));
    x
}

/// The product map `α(x) = (γ(x₁), …, γ(x_m))` on the ordered `m`-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexModel {
    pub m: usize,
    pub gamma: IntervalMap,
}

type PointMap = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync>;

/// A map given only through forward/inverse evaluators and declared fixed points.
#[derive(Clone)]
pub struct BlackBoxModel {
    dim: usize,
    domain: Domain,
    forward: PointMap,
    inverse: PointMap,
    declared: Vec<Vec<f64>>,
    dense_edge: Option<(usize, usize)>,
}

impl fmt::Debug for BlackBoxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxModel")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("declared", &self.declared)
            .field("dense_edge", &self.dense_edge)
            .finish_non_exhaustive()
    }
}

impl BlackBoxModel {
    pub fn new<F, G>(
        dim: usize,
        domain: Domain,
        forward: F,
        inverse: G,
        declared: Vec<Vec<f64>>,
    ) -> Result<Self, DynamicsError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(DynamicsError::Validation("dimension must be ≥ 1".into()));
        }
        if let Some(bad) = declared.iter().find(|p| p.len() != dim) {
            return Err(DynamicsError::Validation(format!(
                "declared fixed point {bad:?} has wrong dimension"
            )));
        }
        Ok(BlackBoxModel {
            dim,
            domain,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            declared,
            dense_edge: None,
        })
    }

    /// One formula per coordinate for each direction, all of arity `dim`.
    pub fn from_exprs(
        domain: Domain,
        forward: Vec<Expr>,
        inverse: Vec<Expr>,
        declared: Vec<Vec<f64>>,
    ) -> Result<Self, DynamicsError> {
        let dim = forward.len();
        if inverse.len() != dim || forward.iter().chain(&inverse).any(|e| e.arity() != dim) {
            return Err(DynamicsError::Validation(
                "forward and inverse need one formula per coordinate".into(),
            ));
        }
        let eval_all = |exprs: Vec<Expr>| {
            move |x: &[f64]| {
                exprs
                    .iter()
                    .map(|e| e.eval(x))
                    .collect::<Result<Vec<_>, _>>()
            }
        };
        Self::new(dim, domain, eval_all(forward), eval_all(inverse), declared)
    }

    /// Declares that the orbit block `source → sink` is dense in the domain.
    pub fn with_dense_edge(mut self, edge: Option<(usize, usize)>) -> Self {
        self.dense_edge = edge;
        self
    }

    pub fn dense_edge(&self) -> Option<(usize, usize)> {
        self.dense_edge
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }
}

#[derive(Debug, Clone)]
pub enum MapModel {
    Simplex(SimplexModel),
    BlackBox(BlackBoxModel),
}

impl MapModel {
    pub fn simplex(m: usize, gamma: IntervalMap) -> Result<Self, DynamicsError> {
        if m == 0 {
            return Err(DynamicsError::Validation(
                "simplex dimension must be ≥ 1".into(),
            ));
        }
        Ok(MapModel::Simplex(SimplexModel { m, gamma }))
    }

    pub fn dim(&self) -> usize {
        match self {
            MapModel::Simplex(s) => s.m,
            MapModel::BlackBox(b) => b.dim,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            MapModel::Simplex(_) => Domain::Simplex,
            MapModel::BlackBox(b) => b.domain,
        }
    }

    /// Simplex dimension when this is the product-map family.
    pub fn simplex_dim(&self) -> Option<usize> {
        match self {
            MapModel::Simplex(s) => Some(s.m),
            MapModel::BlackBox(_) => None,
        }
    }

    /// The orbit block known to be dense in the domain, if any.
    pub fn dense_edge(&self) -> Option<(usize, usize)> {
        match self {
            MapModel::Simplex(s) => Some((0, s.m)),
            MapModel::BlackBox(b) => b.dense_edge,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.domain().contains(x)
    }

    fn check(&self, x: &[f64]) -> Result<(), DynamicsError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(DynamicsError::OutsideDomain(x.to_vec()))
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        match self {
            MapModel::Simplex(s) => x.iter().map(|&v| s.gamma.apply(v)).collect(),
            MapModel::BlackBox(b) => Ok((b.forward)(x)?),
        }
    }

    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        match self {
            MapModel::Simplex(s) => x.iter().map(|&v| s.gamma.inverse(v)).collect(),
            MapModel::BlackBox(b) => Ok((b.inverse)(x)?),
        }
    }

    /// `αⁿ(x)` by `n` forward steps or `|n|` inverse steps.
    pub fn iterate(&self, x: &[f64], n: i64) -> Result<Vec<f64>, DynamicsError> {
        self.check(x)?;
        let mut p = x.to_vec();
        for _ in 0..n.unsigned_abs() {
            p = if n > 0 {
                self.forward(&p)?
            } else {
                self.inverse(&p)?
            };
        }
        Ok(p)
    }

    /// Coordinates of the fixed points, without classification.
    pub fn fixed_coords(&self) -> Vec<Vec<f64>> {
        match self {
            MapModel::Simplex(s) => (0..=s.m).map(|k| corner(s.m, k)).collect(),
            MapModel::BlackBox(b) => b.declared.clone(),
        }
    }

    /// Fixed points with their kinds. The simplex corners are classified
    /// analytically; declared black-box points are checked and classified by
    /// probing a small ball.
    pub fn fixed_points(&self) -> Result<Vec<FixedPoint>, DynamicsError> {
        match self {
            MapModel::Simplex(s) => Ok((0..=s.m)
                .map(|k| FixedPoint {
                    id: k,
                    coords: corner(s.m, k),
                    kind: if k == 0 {
                        FixedPointKind::Repelling
                    } else if k == s.m {
                        FixedPointKind::Attracting
                    } else {
                        FixedPointKind::Saddle
                    },
                })
                .collect()),
            MapModel::BlackBox(b) => {
                let mut rng = ChaCha8Rng::seed_from_u64(crate::DEFAULT_SEED);
                b.declared
                    .iter()
                    .enumerate()
                    .map(|(id, p)| {
                        let image = self.forward(p)?;
                        if distance(&image, p) > FIXED_POINT_TOL {
                            return Err(DynamicsError::NotFixed { id });
                        }
                        let kind = self.probe_kind(id, p, &mut rng)?;
                        Ok(FixedPoint {
                            id,
                            coords: p.clone(),
                            kind,
                        })
                    })
                    .collect()
            }
        }
    }

    fn probe_kind(
        &self,
        id: usize,
        p: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<FixedPointKind, DynamicsError> {
        let opts = LimitOptions::default();
        let (mut all_forward, mut all_backward) = (true, true);
        let mut probes = 0;
        let mut attempts = 0;
        while probes < KIND_PROBES {
            attempts += 1;
            if attempts > 1000 * KIND_PROBES {
                return Err(DynamicsError::Validation(format!(
                    "could not place probes around fixed point {id}"
                )));
            }
            let q: Vec<f64> = p
                .iter()
                .map(|&v| v + rng.random_range(-KIND_PROBE_RADIUS..KIND_PROBE_RADIUS))
                .collect();
            if !self.contains(&q) {
                continue;
            }
            probes += 1;
            all_forward &= forward_limit(self, &q, &opts)? == id;
            all_backward &= backward_limit(self, &q, &opts)? == id;
        }
        Ok(if all_forward {
            FixedPointKind::Attracting
        } else if all_backward {
            FixedPointKind::Repelling
        } else {
            FixedPointKind::Saddle
        })
    }
}

/// `F(k) = (0, …, 0, 1, …, 1)` with `k` trailing ones.
pub fn corner(m: usize, k: usize) -> Vec<f64> {
    (0..m).map(|i| if i >= m - k { 1.0 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mobius_simplex(m: usize) -> MapModel {
        MapModel::simplex(m, IntervalMap::mobius(2.0).unwrap()).unwrap()
    }

    #[test]
    fn iterate_examples() {
        let model = mobius_simplex(2);
        let y = model.iterate(&[0.2, 0.2], 1).unwrap();
        assert!((y[0] - 1.0 / 3.0).abs() < 1e-15 && (y[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(model.iterate(&[0.2, 0.7], 0).unwrap(), vec![0.2, 0.7]);
        assert!(matches!(
            model.iterate(&[0.7, 0.2], 1),
            Err(DynamicsError::OutsideDomain(_))
        ));
        let one_d = mobius_simplex(1);
        let back = one_d.iterate(&[0.2], -1).unwrap();
        assert!((back[0] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn simplex_kinds() {
        use FixedPointKind::*;
        let kinds = |m| {
            mobius_simplex(m)
                .fixed_points()
                .unwrap()
                .into_iter()
                .map(|f| f.kind)
                .collect::<Vec<_>>()
        };
        assert_eq!(kinds(3), vec![Repelling, Saddle, Saddle, Attracting]);
        assert_eq!(kinds(1), vec![Repelling, Attracting]);
        assert_eq!(corner(3, 1), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn black_box_wrapping_simplex() {
        let g = IntervalMap::mobius(2.0).unwrap();
        let (gf, gi) = (g.clone(), g.clone());
        let bb = BlackBoxModel::new(
            2,
            Domain::Simplex,
            move |x| Ok(x.iter().map(|&v| gf.apply(v).unwrap()).collect()),
            move |x| Ok(x.iter().map(|&v| gi.inverse(v).unwrap()).collect()),
            vec![corner(2, 0), corner(2, 1), corner(2, 2)],
        )
        .unwrap();
        let model = MapModel::BlackBox(bb);
        let probed: Vec<_> = model
            .fixed_points()
            .unwrap()
            .into_iter()
            .map(|f| f.kind)
            .collect();
        let analytic: Vec<_> = mobius_simplex(2)
            .fixed_points()
            .unwrap()
            .into_iter()
            .map(|f| f.kind)
            .collect();
        assert_eq!(probed, analytic);
    }

    #[test]
    fn declared_point_must_be_fixed() {
        let bb = BlackBoxModel::new(
            1,
            Domain::Cube,
            |x| Ok(vec![x[0] * x[0]]),
            |x| Ok(vec![x[0].sqrt()]),
            vec![vec![0.5]],
        )
        .unwrap();
        assert!(matches!(
            MapModel::BlackBox(bb).fixed_points(),
            Err(DynamicsError::NotFixed { id: 0 })
        ));
    }

    #[test]
    fn face_sampling_respects_pins() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let face = Domain::SimplexFace { zeros: 1, ones: 0 };
        for _ in 0..200 {
            let x = face.sample(3, &mut rng);
            assert!(face.contains(&x), "{x:?}");
            assert_eq!(x[0], 0.0);
        }
    }
}
