//! The six subcommands. Each returns the rendered report and whether a
//! disagreement was found.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use wso_core::classifier::{
    annulus, circles, classify_full, spectral_radius_estimate, Annulus, Classification,
    ClassifierError, Status,
};
use wso_core::discrete::{
    verify_block, BlockRegime, OracleReport, RangeSignature, DEFAULT_TRUNCATIONS,
};
use wso_core::dynamics::{
    coeff_sequence, fundamental_domain, orbit_block, residence_bound, MapModel, Neighborhoods,
    OrbitBlock,
};
use wso_core::graph::{
    cross_edges, decompose, discover_edges, orientation, to_dot, Decomposition, Orientation,
};

use crate::config::Session;
use crate::error::CliError;
use crate::output::{json_report, num, Csv, Format};

/// Window used for the spectral-radius estimate in `spectrum`.
pub const RADIUS_WINDOW: usize = 200;
/// Radius of the fixed-point neighbourhoods used for the residence bound.
pub const NEIGHBORHOOD_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub disagreement: bool,
}

impl Outcome {
    fn agreed(text: String) -> Self {
        Outcome {
            text,
            disagreement: false,
        }
    }
}

fn unsupported(cmd: &str, format: Format) -> CliError {
    CliError::Usage(format!("{cmd} does not support --format {format:?}").to_lowercase())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Serialize)]
struct RadiusEstimate {
    window: usize,
    samples: usize,
    estimate: f64,
    relative_gap: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    weights: Vec<f64>,
    annulus: Annulus,
    circles: Vec<f64>,
    spectral_radius: Option<RadiusEstimate>,
}

pub fn spectrum(s: &Session, format: Format) -> Result<Outcome, CliError> {
    let ann = annulus(&s.weights)?;
    let spectral_radius = match (&s.model, &s.coefficient) {
        (Some(model), Some(a)) => {
            let count = s.config.sampling.counts.radius;
            let mut rng = rng_for(s.meta.seed, 0);
            let samples: Vec<Vec<f64>> = (0..count)
                .map(|_| model.domain().sample(model.dim(), &mut rng))
                .collect();
            let estimate = spectral_radius_estimate(model, a, RADIUS_WINDOW, &samples)?;
            Some(RadiusEstimate {
                window: RADIUS_WINDOW,
                samples: count,
                estimate,
                relative_gap: (estimate - ann.big_r).abs() / ann.big_r,
            })
        }
        _ => None,
    };
    let report = SpectrumReport {
        weights: s.weights.clone(),
        annulus: ann,
        circles: circles(&s.weights),
        spectral_radius,
    };
    match format {
        Format::Json => Ok(Outcome::agreed(json_report(&s.meta, &report)?)),
        Format::Csv => {
            let mut csv = Csv::new(
                &s.meta,
                "spectrum",
                &["r", "R", "circles", "radius_estimate"],
            );
            let circles: Vec<String> = report.circles.iter().map(|&c| num(c)).collect();
            csv.row([
                num(report.annulus.r),
                num(report.annulus.big_r),
                circles.join(";"),
                report
                    .spectral_radius
                    .map(|e| num(e.estimate))
                    .unwrap_or_default(),
            ]);
            Ok(Outcome::agreed(csv.finish()))
        }
        Format::Dot => Err(unsupported("spectrum", format)),
    }
}

/// Graph classification refined by the closed form; a disagreement yields both verdicts.
fn classify_point(s: &Session, lambda: Complex64) -> Result<Verdict, CliError> {
    match classify_full(&s.graph, lambda, s.config.tolerances.circle_tol) {
        Ok(c) => Ok(Verdict::Agreed(c)),
        Err(ClassifierError::Disagreement { main, simplex }) => Ok(Verdict::Split {
            main: *main,
            simplex: *simplex,
        }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
enum Verdict {
    Agreed(Classification),
    Split {
        main: Classification,
        simplex: Classification,
    },
}

impl Verdict {
    fn primary(&self) -> &Classification {
        match self {
            Verdict::Agreed(c) => c,
            Verdict::Split { main, .. } => main,
        }
    }

    fn is_split(&self) -> bool {
        matches!(self, Verdict::Split { .. })
    }
}

fn classification_row(c: &Classification) -> [String; 4] {
    [
        num(c.modulus),
        format!("{:?}", c.status),
        format!("{:?}", c.kernel),
        format!("{:?}", c.range),
    ]
}

pub fn classify(s: &Session, lambda: Complex64, format: Format) -> Result<Outcome, CliError> {
    let verdict = classify_point(s, lambda)?;
    let disagreement = verdict.is_split();
    if disagreement {
        log::error!("graph and closed-form classifiers disagree at λ = {lambda}");
    }
    let text = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct R<'a> {
                classification: &'a Verdict,
                disagreement: bool,
            }
            json_report(
                &s.meta,
                &R {
                    classification: &verdict,
                    disagreement,
                },
            )?
        }
        Format::Csv => {
            let mut csv = Csv::new(
                &s.meta,
                "classify",
                &["modulus", "status", "kernel", "range"],
            );
            csv.row(classification_row(verdict.primary()));
            if let Verdict::Split { simplex, .. } = &verdict {
                csv.row(classification_row(simplex));
            }
            csv.finish()
        }
        Format::Dot => return Err(unsupported("classify", format)),
    };
    Ok(Outcome { text, disagreement })
}

pub fn status_code(status: Status) -> u8 {
    match status {
        Status::OutsideSpectrum => 0,
        Status::RightInvertible => 1,
        Status::LeftInvertible => 2,
        Status::NotOneSided => 3,
        Status::OnCircle => 4,
    }
}

/// `steps` evenly spaced moduli from `min` to `max` inclusive.
pub fn modulus_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![min];
    }
    let h = (max - min) / (steps - 1) as f64;
    (0..steps).map(|i| min + i as f64 * h).collect()
}

pub fn scan(s: &Session, format: Format) -> Result<Outcome, CliError> {
    let spec = s
        .config
        .scan
        .as_ref()
        .ok_or_else(|| CliError::config("/scan", "scan needs a scan section"))?;
    let grid: Vec<(f64, usize)> = modulus_grid(spec.min, spec.max, spec.steps)
        .into_iter()
        .flat_map(|r| (0..spec.phases).map(move |p| (r, p)))
        .collect();
    let verdicts = grid
        .par_iter()
        .map(|&(r, p)| {
            let lambda = if p == 0 {
                Complex64::new(r, 0.0)
            } else {
                Complex64::from_polar(r, TAU * p as f64 / spec.phases as f64)
            };
            classify_point(s, lambda)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let disagreement = verdicts.iter().any(Verdict::is_split);
    if disagreement {
        log::error!("classifiers disagree on part of the scan grid");
    }
    let text = match format {
        Format::Csv if spec.phases > 1 => {
            let mut csv = Csv::new(&s.meta, "region", &["re", "im", "status_code"]);
            for v in &verdicts {
                let c = v.primary();
                csv.row([
                    num(c.lambda.re),
                    num(c.lambda.im),
                    status_code(c.status).to_string(),
                ]);
            }
            csv.finish()
        }
        Format::Csv => {
            let mut csv = Csv::new(&s.meta, "scan", &["modulus", "status", "kernel", "range"]);
            for v in &verdicts {
                csv.row(classification_row(v.primary()));
            }
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct R<'a> {
                rows: &'a [Verdict],
                disagreement: bool,
            }
            json_report(
                &s.meta,
                &R {
                    rows: &verdicts,
                    disagreement,
                },
            )?
        }
        Format::Dot => return Err(unsupported("scan", format)),
    };
    Ok(Outcome { text, disagreement })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockResult {
    pub source: usize,
    pub sink: usize,
    pub base: Vec<f64>,
    pub expected_index: Option<i8>,
    pub report: Option<OracleReport>,
    pub error: Option<String>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
struct VerifyReport {
    lambda: Complex64,
    truncations: Vec<usize>,
    window: usize,
    residence_bound: usize,
    classification: Verdict,
    derived_status: Option<Status>,
    blocks: Vec<BlockResult>,
    agreement: bool,
}

fn neighborhoods(model: &MapModel) -> Result<Neighborhoods, CliError> {
    let fixed = model.fixed_coords();
    let mut radius = NEIGHBORHOOD_RADIUS;
    for (i, p) in fixed.iter().enumerate() {
        for q in &fixed[i + 1..] {
            let d = p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            radius = radius.min(d / 3.0);
        }
    }
    Ok(Neighborhoods::uniform(model, radius)?)
}

/// Base points on the block `source → sink`: exact for the simplex family,
/// rejection sampled from the domain otherwise.
fn block_bases(
    s: &Session,
    model: &MapModel,
    source: usize,
    sink: usize,
    stream: u64,
) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rng = rng_for(s.meta.seed, stream);
    let count = s.config.sampling.counts.verify.max(1);
    let mut out = Vec::with_capacity(count);
    if model.simplex_dim().is_some() {
        for _ in 0..count {
            let block = orbit_block(model, source, sink, &mut rng)?;
            let theta = fundamental_domain(model, &block, 0.5)?;
            out.push(theta.project(&block.base)?);
        }
        return Ok(out);
    }
    let budget = s.config.sampling.counts.discover.max(1);
    for _ in 0..budget {
        let x = model.domain().sample(model.dim(), &mut rng);
        let block = OrbitBlock::new(model, x, &s.limits)?;
        if (block.source, block.sink) == (source, sink) {
            out.push(block.base);
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(CliError::Numerical(format!(
        "no point of block F{source} -> F{sink} among {budget} samples"
    )))
}

/// The index every block should show according to the graph decomposition.
fn expected_index(dec: &Decomposition, source: usize, sink: usize) -> Option<i8> {
    use wso_core::graph::Side::{Minus, Plus};
    match (dec.side(source)?, dec.side(sink)?) {
        (Minus, Plus) => Some(1),
        (Plus, Minus) => Some(-1),
        _ => Some(0),
    }
}

/// Block index as read off the oracle; a non-closed signature marks a circle.
fn observed_index(r: &OracleReport) -> Option<i8> {
    match r.range_signature {
        RangeSignature::NonClosed => None,
        _ => r.index_estimate,
    }
}

/// Status implied by the oracle's block indices.
fn derive_status(ann: &Annulus, modulus: f64, indices: &[Option<i8>]) -> Option<Status> {
    if indices.iter().any(Option::is_none) {
        return Some(Status::OnCircle);
    }
    let plus = indices.contains(&Some(1));
    let minus = indices.contains(&Some(-1));
    Some(if modulus < ann.r || modulus > ann.big_r {
        Status::OutsideSpectrum
    } else if plus && minus {
        Status::NotOneSided
    } else if minus {
        Status::LeftInvertible
    } else {
        Status::RightInvertible
    })
}

pub fn verify(
    s: &Session,
    lambda: Complex64,
    truncations: &[usize],
    format: Format,
) -> Result<Outcome, CliError> {
    let model = s.require_model()?;
    let a = s.require_coefficient()?;
    let truncations = if truncations.is_empty() {
        DEFAULT_TRUNCATIONS.to_vec()
    } else {
        truncations.to_vec()
    };
    let modulus = lambda.norm();
    let dec = decompose(&s.graph, modulus, s.config.tolerances.circle_tol);
    let classification = classify_point(s, lambda)?;

    let bases = s
        .graph
        .edges
        .par_iter()
        .enumerate()
        .map(|(e, &(j, k))| block_bases(s, model, j, k, e as u64 + 1))
        .collect::<Vec<_>>();

    let nb = neighborhoods(model)?;
    let all_points: Vec<Vec<f64>> = bases.iter().flatten().flatten().cloned().collect();
    let residence = residence_bound(model, &nb, &all_points, &s.limits)?.bound;
    let mut window = s.config.sampling.counts.window;
    if window <= residence {
        log::warn!(
            "window {window} does not exceed the residence bound {residence}; raising it to {}",
            residence + 1
        );
        window = residence + 1;
    }

    let blocks: Vec<BlockResult> = s
        .graph
        .edges
        .par_iter()
        .zip(bases.into_par_iter())
        .flat_map_iter(|(&(j, k), bases)| {
            let expected = expected_index(&dec, j, k);
            let regime = BlockRegime::of(s.weights[j], s.weights[k], modulus);
            let rows: Vec<BlockResult> = match bases {
                Err(e) => {
                    log::warn!("block F{j} -> F{k}: {e}");
                    vec![BlockResult {
                        source: j,
                        sink: k,
                        base: Vec::new(),
                        expected_index: expected,
                        report: None,
                        error: Some(e.to_string()),
                        consistent: false,
                    }]
                }
                Ok(points) => points
                    .into_iter()
                    .map(
                        |tau| match coeff_sequence(model, a, &tau, window, &s.limits) {
                            Ok(seq) => {
                                let r = verify_block(&seq, lambda, regime, &truncations);
                                let consistent = r.agreement && observed_index(&r) == expected;
                                BlockResult {
                                    source: j,
                                    sink: k,
                                    base: tau,
                                    expected_index: expected,
                                    report: Some(r),
                                    error: None,
                                    consistent,
                                }
                            }
                            Err(e) => BlockResult {
                                source: j,
                                sink: k,
                                base: tau,
                                expected_index: expected,
                                report: None,
                                error: Some(e.to_string()),
                                consistent: false,
                            },
                        },
                    )
                    .collect(),
            };
            rows
        })
        .collect();

    let ann = annulus(&s.weights)?;
    let sampled: Vec<Option<i8>> = blocks
        .iter()
        .filter_map(|b| b.report.as_ref().map(observed_index))
        .collect();
    let derived_status = derive_status(&ann, modulus, &sampled);
    let agreement = !classification.is_split()
        && blocks.iter().all(|b| b.consistent || b.error.is_some())
        && derived_status == Some(classification.primary().status);
    let failures = blocks.iter().filter(|b| b.error.is_some()).count();
    if failures > 0 {
        log::warn!("{failures} block(s) could not be sampled");
    }

    let report = VerifyReport {
        lambda,
        truncations,
        window,
        residence_bound: residence,
        classification,
        derived_status,
        blocks,
        agreement,
    };
    let text = match format {
        Format::Json => json_report(&s.meta, &report)?,
        Format::Csv => {
            let mut csv = Csv::new(
                &s.meta,
                "ladder",
                &["source", "sink", "N", "sigma_min", "second_smallest"],
            );
            for b in &report.blocks {
                for row in b.report.iter().flat_map(|r| &r.ladder) {
                    csv.row([
                        b.source.to_string(),
                        b.sink.to_string(),
                        row.n.to_string(),
                        num(row.sigma_min),
                        num(row.second_smallest),
                    ]);
                }
            }
            csv.finish()
        }
        Format::Dot => return Err(unsupported("verify", format)),
    };
    Ok(Outcome {
        text,
        disagreement: !agreement,
    })
}

pub fn graph(
    s: &Session,
    discover: bool,
    lambda: Option<f64>,
    format: Format,
) -> Result<Outcome, CliError> {
    let mut disagreement = false;
    let graph = if discover {
        let model = s.require_model()?;
        let mut rng = rng_for(s.meta.seed, 0);
        let found = discover_edges(
            model,
            s.config.sampling.counts.discover,
            &s.limits,
            &mut rng,
        )?
        .with_weights(&s.weights)?;
        if model.simplex_dim().is_some() {
            let want: BTreeSet<_> = s.graph.edges.iter().collect();
            let got: BTreeSet<_> = found.edges.iter().collect();
            if want != got {
                log::error!("discovered edges {got:?} differ from the analytic edges {want:?}");
                disagreement = true;
            }
        }
        found
    } else {
        s.graph.clone()
    };
    let dec = lambda.map(|l| decompose(&graph, l, s.config.tolerances.circle_tol));
    let text = match format {
        Format::Dot => format!(
            "// wso {} config_sha256={} seed={}\n{}",
            s.meta.version,
            s.meta.config_sha256,
            s.meta.seed,
            to_dot(&graph, dec.as_ref())
        ),
        Format::Json => {
            #[derive(Serialize)]
            struct R<'a> {
                graph: &'a wso_core::graph::MSGraph,
                decomposition: Option<&'a Decomposition>,
                cross_edges: Option<Vec<(usize, usize)>>,
                orientation: Option<Orientation>,
                disagreement: bool,
            }
            let orient = match &dec {
                Some(d) if d.is_valid() => Some(orientation(&graph, d)?),
                _ => None,
            };
            json_report(
                &s.meta,
                &R {
                    graph: &graph,
                    decomposition: dec.as_ref(),
                    cross_edges: dec.as_ref().map(|d| cross_edges(&graph, d)),
                    orientation: orient,
                    disagreement,
                },
            )?
        }
        Format::Csv => {
            let mut csv = Csv::new(&s.meta, "edges", &["source", "sink"]);
            for (j, k) in &graph.edges {
                csv.row([j.to_string(), k.to_string()]);
            }
            csv.finish()
        }
    };
    Ok(Outcome { text, disagreement })
}

pub fn orbit(
    s: &Session,
    point: &[f64],
    steps: usize,
    format: Format,
) -> Result<Outcome, CliError> {
    let model = s.require_model()?;
    let a = s.require_coefficient()?;
    if point.len() != model.dim() {
        return Err(CliError::Usage(format!(
            "--point needs {} coordinates, got {}",
            model.dim(),
            point.len()
        )));
    }
    if !model.contains(point) {
        return Err(CliError::Usage(format!(
            "point {point:?} is outside the domain"
        )));
    }
    let n = steps as i64;
    let mut p = model.iterate(point, -n)?;
    let mut rows = Vec::with_capacity(2 * steps + 1);
    for k in -n..=n {
        let value = a.eval(&p).map_err(|e| CliError::Numerical(e.to_string()))?;
        rows.push((k, p.clone(), value));
        if k < n {
            p = model.forward(&p)?;
        }
    }
    let text = match format {
        Format::Csv => {
            let mut columns = vec!["k".to_string()];
            columns.extend((1..=model.dim()).map(|i| format!("x_{i}")));
            columns.push("a_value".into());
            let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
            let mut csv = Csv::new(&s.meta, "orbit", &cols);
            for (k, x, v) in &rows {
                let mut cells = vec![k.to_string()];
                cells.extend(x.iter().map(|&c| num(c)));
                cells.push(num(*v));
                csv.row(cells);
            }
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                k: i64,
                x: &'a [f64],
                a_value: f64,
            }
            #[derive(Serialize)]
            struct R<'a> {
                orbit: Vec<Row<'a>>,
            }
            let orbit = rows
                .iter()
                .map(|(k, x, v)| Row {
                    k: *k,
                    x,
                    a_value: *v,
                })
                .collect();
            json_report(&s.meta, &R { orbit })?
        }
        Format::Dot => return Err(unsupported("orbit", format)),
    };
    Ok(Outcome::agreed(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_circles_exactly() {
        let g = modulus_grid(0.5, 3.5, 13);
        assert_eq!(g.len(), 13);
        assert!(g.contains(&1.0) && g.contains(&2.0) && g.contains(&3.0));
        assert_eq!(modulus_grid(2.0, 2.0, 1), vec![2.0]);
    }

    #[test]
    fn derived_status_rules() {
        let ann = Annulus { r: 1.0, big_r: 3.0 };
        assert_eq!(
            derive_status(&ann, 1.5, &[Some(1), Some(1), Some(0)]),
            Some(Status::RightInvertible)
        );
        assert_eq!(
            derive_status(&ann, 2.5, &[Some(1), Some(0), Some(-1)]),
            Some(Status::NotOneSided)
        );
        assert_eq!(
            derive_status(&ann, 3.5, &[Some(0); 3]),
            Some(Status::OutsideSpectrum)
        );
        assert_eq!(
            derive_status(&ann, 2.0, &[None, Some(0)]),
            Some(Status::OnCircle)
        );
    }
}
