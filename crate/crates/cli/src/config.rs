//! The JSON run configuration and everything derived from it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wso_core::classifier::reduced_coefficient;
use wso_core::coefficient::Coefficient;
use wso_core::dynamics::{
    make_interval_map, BlackBoxModel, Domain, GammaSpec, LimitOptions, MapModel,
};
use wso_core::expr::parse;
use wso_core::graph::{simplex_graph, MSGraph};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub a0: Option<String>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub measure: Measure,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Simplex(SimplexSpec),
    Blackbox(BlackBoxSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSpec {
    pub m: usize,
    pub gamma: GammaSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    #[default]
    Cube,
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackBoxSpec {
    pub dim: usize,
    #[serde(default)]
    pub domain: DomainSpec,
    pub forward: Vec<String>,
    pub inverse: Vec<String>,
    pub fixed_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub dense_edge: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub counts: Counts,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            seed: default_seed(),
            counts: Counts::default(),
        }
    }
}

fn default_seed() -> u64 {
    wso_core::DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Counts {
    /// Samples for Monte-Carlo edge discovery.
    pub discover: usize,
    /// Base points per orbit block in `verify`.
    pub verify: usize,
    /// Orbits sampled for the spectral-radius estimate.
    pub radius: usize,
    /// Radius `K` of the explicit coefficient window in `verify`.
    pub window: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Counts {
            discover: 10_000,
            verify: 1,
            radius: 32,
            window: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub circle_tol: f64,
    pub limit_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            circle_tol: 1e-12,
            limit_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub phases: usize,
}

fn one() -> usize {
    1
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|seg| match seg {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => Some(format!("/{variant}")),
            Segment::Unknown => None,
        })
        .collect()
}

/// Parses a config document; errors carry the JSON pointer of the offending value.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let ptr = pointer(e.path());
        CliError::config(ptr, e.into_inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.a0, &self.weights) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "/weights",
                    "give either a0 or weights, not both",
                ))
            }
            (None, None) => return Err(CliError::config("", "one of a0 or weights is required")),
            (None, Some(w)) if w.is_empty() => {
                return Err(CliError::config("/weights", "weights must be nonempty"))
            }
            _ => {}
        }
        if let Some(w) = &self.weights {
            if let Some(i) = w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(CliError::config(
                    format!("/weights/{i}"),
                    "weights must be positive",
                ));
            }
        }
        if self.a0.is_some() && self.model.is_none() {
            return Err(CliError::config("/model", "a0 needs a model"));
        }
        match &self.model {
            Some(ModelSpec::Simplex(s)) if s.m == 0 => {
                return Err(CliError::config("/model/simplex/m", "m must be at least 1"))
            }
            Some(ModelSpec::Blackbox(b)) if b.dim == 0 => {
                return Err(CliError::config(
                    "/model/blackbox/dim",
                    "dim must be at least 1",
                ))
            }
            _ => {}
        }
        let t = &self.tolerances;
        if !(t.circle_tol >= 0.0 && t.circle_tol.is_finite()) {
            return Err(CliError::config(
                "/tolerances/circle_tol",
                "must be a nonnegative number",
            ));
        }
        if !(t.limit_tol > 0.0 && t.limit_tol.is_finite()) {
            return Err(CliError::config(
                "/tolerances/limit_tol",
                "must be positive",
            ));
        }
        if self.sampling.counts.window == 0 {
            return Err(CliError::config(
                "/sampling/counts/window",
                "must be at least 1",
            ));
        }
        if let Some(s) = &self.scan {
            if s.steps == 0 {
                return Err(CliError::config("/scan/steps", "steps must be at least 1"));
            }
            if s.phases == 0 {
                return Err(CliError::config(
                    "/scan/phases",
                    "phases must be at least 1",
                ));
            }
            if !(s.min >= 0.0 && s.min <= s.max && s.max.is_finite()) {
                return Err(CliError::config("/scan", "need 0 ≤ min ≤ max"));
            }
        }
        Ok(())
    }
}

/// Provenance stamped on every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
}

/// A validated config with its model, weights, coefficient and graph built.
pub struct Session {
    pub config: Config,
    pub meta: Meta,
    pub model: Option<MapModel>,
    pub weights: Vec<f64>,
    pub coefficient: Option<Coefficient>,
    pub graph: MSGraph,
    pub limits: LimitOptions,
}

fn build_model(spec: &ModelSpec) -> Result<MapModel, CliError> {
    match spec {
        ModelSpec::Simplex(s) => {
            let gamma = make_interval_map(&s.gamma)
                .map_err(|e| CliError::config("/model/simplex/gamma", e))?;
            MapModel::simplex(s.m, gamma).map_err(|e| CliError::config("/model/simplex", e))
        }
        ModelSpec::Blackbox(b) => {
            let exprs = |list: &[String], key: &str| {
                if list.len() != b.dim {
                    return Err(CliError::config(
                        format!("/model/blackbox/{key}"),
                        format!("need {} formulas, got {}", b.dim, list.len()),
                    ));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, src)| {
                        parse(src, b.dim)
                            .map_err(|e| CliError::config(format!("/model/blackbox/{key}/{i}"), e))
                    })
                    .collect::<Result<Vec<_>, _>>()
            };
            let domain = match b.domain {
                DomainSpec::Cube => Domain::Cube,
                DomainSpec::Simplex => Domain::Simplex,
            };
            if let Some((j, k)) = b.dense_edge {
                let n = b.fixed_points.len();
                if j >= n || k >= n || j == k {
                    return Err(CliError::config(
                        "/model/blackbox/dense_edge",
                        "not an edge between declared points",
                    ));
                }
            }
            let model = BlackBoxModel::from_exprs(
                domain,
                exprs(&b.forward, "forward")?,
                exprs(&b.inverse, "inverse")?,
                b.fixed_points.clone(),
            )
            .map_err(|e| CliError::config("/model/blackbox", e))?
            .with_dense_edge(b.dense_edge);
            Ok(MapModel::BlackBox(model))
        }
    }
}

impl Session {
    /// Black-box graphs are found by sampling `sampling.counts.discover` points.
    pub fn new(text: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let mut config = parse_config(text)?;
        if let Some(seed) = seed_override {
            config.sampling.seed = seed;
        }
        let meta = Meta {
            config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
            seed: config.sampling.seed,
            version: env!("CARGO_PKG_VERSION"),
        };
        let limits = LimitOptions {
            tol: config.tolerances.limit_tol,
            ..LimitOptions::default()
        };
        let model = config.model.as_ref().map(build_model).transpose()?;
        let fixed = model.as_ref().map(MapModel::fixed_coords);

        let (weights, coefficient) = match (&config.a0, &config.weights) {
            (Some(src), _) => {
                let model = model.as_ref().expect("validated");
                let expr = parse(src, model.dim()).map_err(|e| CliError::config("/a0", e))?;
                let a = reduced_coefficient(&Coefficient::from_expr(expr), model);
                let w = fixed
                    .as_ref()
                    .expect("model present")
                    .iter()
                    .map(|p| a.eval(p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::config("/a0", e))?;
                if let Some(i) = w.iter().position(|&v| !(v > 0.0)) {
                    return Err(CliError::config(
                        "/a0",
                        format!("reduced coefficient vanishes at F{i}"),
                    ));
                }
                (w, Some(a))
            }
            (None, Some(w)) => {
                if let Some(f) = &fixed {
                    if f.len() != w.len() {
                        return Err(CliError::config(
                            "/weights",
                            format!(
                                "model has {} fixed points, got {} weights",
                                f.len(),
                                w.len()
                            ),
                        ));
                    }
                }
                let a = match &model {
                    Some(MapModel::Simplex(_)) => Some(Coefficient::simplex_interpolant(w)),
                    _ => None,
                };
                (w.clone(), a)
            }
            (None, None) => unreachable!("validated"),
        };

        let graph = match &model {
            Some(MapModel::BlackBox(_)) => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.sampling.seed);
                wso_core::graph::discover_edges(
                    model.as_ref().expect("matched"),
                    config.sampling.counts.discover,
                    &limits,
                    &mut rng,
                )?
                .with_weights(&weights)?
            }
            _ => {
                if weights.len() < 2 {
                    return Err(CliError::config(
                        "/weights",
                        "the simplex family needs at least two weights",
                    ));
                }
                simplex_graph(weights.len() - 1, &weights)?
            }
        };

        Ok(Session {
            config,
            meta,
            model,
            weights,
            coefficient,
            graph,
            limits,
        })
    }

    pub fn require_model(&self) -> Result<&MapModel, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::config("/model", "this command needs a model"))
    }

    pub fn require_coefficient(&self) -> Result<&Coefficient, CliError> {
        self.coefficient
            .as_ref()
            .ok_or_else(|| CliError::config("/a0", "this command needs a coefficient: give a0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointers_for_type_errors() {
        let err = parse_config(
            r#"{"model":{"simplex":{"m":"two","gamma":{"mobius":{"c":2}}}},"weights":[1,2,3]}"#,
        )
        .unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/model/simplex/m"),
            other => panic!("{other}"),
        }
        let err = parse_config(r#"{"weights":[1,2],"extra":1}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { .. }));
        let err = parse_config(r#"{"weights":[1,-2]}"#).unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/weights/1"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn exactly_one_coefficient_source() {
        assert!(parse_config(r#"{}"#).is_err());
        assert!(parse_config(r#"{"weights":[]}"#).is_err());
        let both =
            r#"{"model":{"simplex":{"m":1,"gamma":{"mobius":{"c":2}}}},"a0":"1","weights":[1,2]}"#;
        assert!(parse_config(both).is_err());
    }

    #[test]
    fn measure_is_lebesgue_only() {
        assert!(parse_config(r#"{"weights":[1,2],"measure":"lebesgue"}"#).is_ok());
        assert!(parse_config(r#"{"weights":[1,2],"measure":"counting"}"#).is_err());
    }

    #[test]
    fn weights_from_a0() {
        let s = Session::new(
            r#"{"model":{"simplex":{"m":1,"gamma":{"mobius":{"c":2}}}},"a0":"1"}"#,
            None,
        )
        .unwrap();
        assert!((s.weights[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.weights[1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}
