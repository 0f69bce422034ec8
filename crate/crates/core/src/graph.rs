//! The directed graph of fixed points and its splittings by `|λ|`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    backward_limit, forward_limit, DynamicsError, FixedPointKind, LimitOptions, MapModel,
};

/// Default relative half-width of the band treated as a circle hit.
pub const DEFAULT_CIRCLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight {weight} at vertex {id} is not positive")]
    NonPositiveWeight { id: usize, weight: f64 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge refers to unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("vertex ids must be 0..n in order")]
    VertexOrder,
    #[error("decomposition is invalid: |λ| hits the weights of {0:?}")]
    InvalidDecomposition(Vec<usize>),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub kind: FixedPointKind,
    /// `|a(F)|`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSGraph {
    pub vertices: Vec<Vertex>,
    /// `(j, k)`: some orbit runs from `F_j` (backward limit) to `F_k` (forward limit).
    pub edges: Vec<(usize, usize)>,
    /// Some orbit block is dense in the phase space.
    pub density_flag: bool,
    /// Which block is the dense one, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_edge: Option<(usize, usize)>,
    /// Dimension `m` when the graph comes from the ordered-simplex family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex_dim: Option<usize>,
}

fn simplex_kind(m: usize, k: usize) -> FixedPointKind {
    if k == 0 {
        FixedPointKind::Repelling
    } else if k == m {
        FixedPointKind::Attracting
    } else {
        FixedPointKind::Saddle
    }
}

/// The transitive tournament `{(j, k) : j < k}` on `F(0), …, F(m)`.
pub fn simplex_graph(m: usize, weights: &[f64]) -> Result<MSGraph, GraphError> {
    if m == 0 {
        return Err(DynamicsError::Validation("simplex dimension must be ≥ 1".into()).into());
    }
    if weights.len() != m + 1 {
        return Err(GraphError::WeightCount {
            expected: m + 1,
            got: weights.len(),
        });
    }
    let vertices = weights
        .iter()
        .enumerate()
        .map(|(id, &weight)| Vertex {
            id,
            kind: simplex_kind(m, id),
            weight,
        })
        .collect();
    let edges = (0..=m)
        .flat_map(|j| (j + 1..=m).map(move |k| (j, k)))
        .collect();
    let g = MSGraph {
        vertices,
        edges,
        density_flag: true,
        dense_edge: Some((0, m)),
        simplex_dim: Some(m),
    };
    g.validate()?;
    Ok(g)
}

/// Edges found by following sampled points to their limits in both directions.
/// Vertex weights are left at zero until [`MSGraph::with_weights`].
pub fn discover_edges<R: Rng + ?Sized>(
    model: &MapModel,
    samples: usize,
    opts: &LimitOptions,
    rng: &mut R,
) -> Result<MSGraph, GraphError> {
    let fixed = model.fixed_points()?;
    if samples == 0 {
        log::warn!("edge discovery with zero samples yields an empty edge set");
    }
    let domain = model.domain();
    let mut edges = BTreeSet::new();
    for _ in 0..samples {
        let x = domain.sample(model.dim(), rng);
        let j = backward_limit(model, &x, opts)?;
        let k = forward_limit(model, &x, opts)?;
        if j != k {
            edges.insert((j, k));
        }
    }
    let dense_edge = model.dense_edge().filter(|e| edges.contains(e));
    Ok(MSGraph {
        vertices: fixed
            .into_iter()
            .map(|f| Vertex {
                id: f.id,
                kind: f.kind,
                weight: 0.0,
            })
            .collect(),
        edges: edges.into_iter().collect(),
        density_flag: dense_edge.is_some(),
        dense_edge,
        simplex_dim: model.simplex_dim(),
    })
}

/// Partition of the vertices by comparing `|a(F)|` with `|λ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub lambda_modulus: f64,
    pub g_minus: Vec<usize>,
    pub g_plus: Vec<usize>,
    pub circle_hits: Vec<usize>,
}

impl Decomposition {
    pub fn is_valid(&self) -> bool {
        self.circle_hits.is_empty()
    }

    pub fn side(&self, id: usize) -> Option<Side> {
        if self.g_minus.contains(&id) {
            Some(Side::Minus)
        } else if self.g_plus.contains(&id) {
            Some(Side::Plus)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Every cross edge runs `G⁻ → G⁺`.
    RightOriented,
    /// Every cross edge runs `G⁺ → G⁻`.
    LeftOriented,
    Mixed,
    NoCross,
}

pub(crate) fn hits_circle(weight: f64, modulus: f64, tol: f64) -> bool {
    (weight - modulus).abs() <= tol * weight.max(modulus)
}

pub fn decompose(graph: &MSGraph, lambda_modulus: f64, tol: f64) -> Decomposition {
    let mut d = Decomposition {
        lambda_modulus,
        g_minus: Vec::new(),
        g_plus: Vec::new(),
        circle_hits: Vec::new(),
    };
    for v in &graph.vertices {
        if hits_circle(v.weight, lambda_modulus, tol) {
            d.circle_hits.push(v.id);
        } else if v.weight < lambda_modulus {
            d.g_minus.push(v.id);
        } else {
            d.g_plus.push(v.id);
        }
    }
    d
}

/// Edges whose endpoints lie on different sides.
pub fn cross_edges(graph: &MSGraph, dec: &Decomposition) -> Vec<(usize, usize)> {
    graph
        .edges
        .iter()
        .copied()
        .filter(|&(j, k)| {
            matches!(
                (dec.side(j), dec.side(k)),
                (Some(a), Some(b)) if a != b
            )
        })
        .collect()
}

pub fn orientation(graph: &MSGraph, dec: &Decomposition) -> Result<Orientation, GraphError> {
    if !dec.is_valid() {
        return Err(GraphError::InvalidDecomposition(dec.circle_hits.clone()));
    }
    let cross = cross_edges(graph, dec);
    if cross.is_empty() {
        return Ok(Orientation::NoCross);
    }
    let rightward = |&(j, _): &(usize, usize)| dec.side(j) == Some(Side::Minus);
    Ok(if cross.iter().all(rightward) {
        Orientation::RightOriented
    } else if !cross.iter().any(rightward) {
        Orientation::LeftOriented
    } else {
        Orientation::Mixed
    })
}

impl MSGraph {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.vertices.iter().enumerate().any(|(i, v)| v.id != i) {
            return Err(GraphError::VertexOrder);
        }
        let n = self.vertices.len();
        for &(j, k) in &self.edges {
            if j == k {
                return Err(GraphError::SelfLoop(j));
            }
            if j >= n || k >= n {
                return Err(GraphError::UnknownVertex(j.max(k)));
            }
        }
        if let Some((j, k)) = self.dense_edge {
            if j >= n || k >= n {
                return Err(GraphError::UnknownVertex(j.max(k)));
            }
        }
        self.check_weights()
    }

    /// Positive weights are required by every spectral statement.
    pub fn check_weights(&self) -> Result<(), GraphError> {
        match self
            .vertices
            .iter()
            .find(|v| !(v.weight > 0.0 && v.weight.is_finite()))
        {
            Some(v) => Err(GraphError::NonPositiveWeight {
                id: v.id,
                weight: v.weight,
            }),
            None => Ok(()),
        }
    }

    pub fn with_weights(mut self, weights: &[f64]) -> Result<Self, GraphError> {
        if weights.len() != self.vertices.len() {
            return Err(GraphError::WeightCount {
                expected: self.vertices.len(),
                got: weights.len(),
            });
        }
        for (v, &w) in self.vertices.iter_mut().zip(weights) {
            v.weight = w;
        }
        self.check_weights()?;
        Ok(self)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.weight).collect()
    }

    /// The graph of `α⁻¹`: every edge reversed.
    pub fn reversed(&self) -> Self {
        let mut g = self.clone();
        g.edges = self.edges.iter().map(|&(j, k)| (k, j)).collect();
        g.edges.sort_unstable();
        g.dense_edge = self.dense_edge.map(|(j, k)| (k, j));
        g.simplex_dim = None;
        g
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let g: MSGraph = serde_json::from_str(text).map_err(|e| e.to_string())?;
        g.validate().map_err(|e| e.to_string())?;
        Ok(g)
    }
}

/// DOT rendering; with a decomposition the two sides are coloured and cross
/// edges drawn thick.
pub fn to_dot(graph: &MSGraph, dec: Option<&Decomposition>) -> String {
    let mut out = String::from("digraph G {\n  rankdir=LR;\n");
    for v in &graph.vertices {
        let label = format!("F{} (w={})", v.id, v.weight);
        let fill = match dec.and_then(|d| d.side(v.id)) {
            Some(Side::Minus) => ", style=filled, fillcolor=lightblue",
            Some(Side::Plus) => ", style=filled, fillcolor=salmon",
            None => "",
        };
        let _ = writeln!(out, "  F{} [label=\"{label}\"{fill}];", v.id);
    }
    let cross: Vec<(usize, usize)> = dec.map(|d| cross_edges(graph, d)).unwrap_or_default();
    for e @ &(j, k) in &graph.edges {
        let attr = if cross.contains(e) {
            " [penwidth=2]"
        } else {
            ""
        };
        let _ = writeln!(out, "  F{j} -> F{k}{attr};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntervalMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g132() -> MSGraph {
        simplex_graph(2, &[1.0, 3.0, 2.0]).unwrap()
    }

    #[test]
    fn simplex_graph_examples() {
        assert_eq!(simplex_graph(1, &[1.0, 2.0]).unwrap().edges, vec![(0, 1)]);
        let g3 = simplex_graph(3, &[1.0; 4]).unwrap();
        assert_eq!(
            g3.edges,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        );
        let g2 = g132();
        assert_eq!(g2.edges.len(), 3);
        assert_eq!(g2.edges.iter().filter(|e| e.0 == 0).count(), 2);
        assert!(matches!(
            simplex_graph(2, &[1.0, 2.0]),
            Err(GraphError::WeightCount {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn decompose_examples() {
        let g = g132();
        let d = decompose(&g, 1.5, DEFAULT_CIRCLE_TOL);
        assert_eq!((d.g_minus, d.g_plus), (vec![0], vec![1, 2]));
        let d = decompose(&g, 2.0, DEFAULT_CIRCLE_TOL);
        assert_eq!(d.circle_hits, vec![2]);
        assert!(!d.is_valid());
        let d = decompose(&g, 3.5, DEFAULT_CIRCLE_TOL);
        assert_eq!(d.g_minus, vec![0, 1, 2]);
        assert!(d.g_plus.is_empty());
    }

    #[test]
    fn orientation_examples() {
        let g = g132();
        let d = decompose(&g, 1.5, DEFAULT_CIRCLE_TOL);
        assert_eq!(cross_edges(&g, &d), vec![(0, 1), (0, 2)]);
        assert_eq!(orientation(&g, &d).unwrap(), Orientation::RightOriented);

        let g321 = simplex_graph(2, &[3.0, 2.0, 1.0]).unwrap();
        let d = decompose(&g321, 1.5, DEFAULT_CIRCLE_TOL);
        assert_eq!(cross_edges(&g321, &d), vec![(0, 2), (1, 2)]);
        assert_eq!(orientation(&g321, &d).unwrap(), Orientation::LeftOriented);

        let d = decompose(&g, 2.5, DEFAULT_CIRCLE_TOL);
        assert_eq!(orientation(&g, &d).unwrap(), Orientation::Mixed);

        let d = decompose(&g, 2.0, DEFAULT_CIRCLE_TOL);
        assert_eq!(
            orientation(&g, &d),
            Err(GraphError::InvalidDecomposition(vec![2]))
        );
        let d = decompose(&g, 0.5, DEFAULT_CIRCLE_TOL);
        assert_eq!(orientation(&g, &d).unwrap(), Orientation::NoCross);
    }

    #[test]
    fn dot_examples() {
        let g1 = simplex_graph(1, &[1.0, 2.0]).unwrap();
        let dot = to_dot(&g1, None);
        assert!(dot.contains("F0 -> F1"));
        assert!(dot.contains("F0 (w=1)"));
        assert!(!dot.contains("fillcolor"));

        let g = g132();
        let d = decompose(&g, 1.5, DEFAULT_CIRCLE_TOL);
        let dot = to_dot(&g, Some(&d));
        assert_eq!(dot.matches("penwidth=2").count(), 2);
        assert_eq!(dot.matches("lightblue").count(), 1);
        assert_eq!(dot.matches("salmon").count(), 2);
    }

    #[test]
    fn json_round_trip() {
        let g = g132();
        let text = g.to_json();
        assert!(text.contains("\"density_flag\": true"));
        assert_eq!(MSGraph::from_json(&text).unwrap(), g);
        let bad = r#"{"vertices":[{"id":0,"kind":"Repelling","weight":1.0}],"edges":[[0,0]],"density_flag":false}"#;
        assert!(MSGraph::from_json(bad).is_err());
    }

    #[test]
    fn discovery_small() {
        let model = MapModel::simplex(2, IntervalMap::mobius(2.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = discover_edges(&model, 2_000, &LimitOptions::default(), &mut rng).unwrap();
        assert_eq!(g.edges, g132().edges);
        assert!(g.density_flag);
        let empty = discover_edges(&model, 0, &LimitOptions::default(), &mut rng).unwrap();
        assert!(empty.edges.is_empty());
        assert!(!empty.density_flag);
    }

    #[test]
    fn reversal_swaps_orientation() {
        let g = g132();
        let d = decompose(&g, 1.5, DEFAULT_CIRCLE_TOL);
        assert_eq!(
            orientation(&g.reversed(), &d).unwrap(),
            Orientation::LeftOriented
        );
    }
}
