//! Spectral verdicts for `B − λI`: the annulus, the graph-orientation criterion,
//! the closed-form rule for the simplex family, the reduced coefficient and a
//! spectral-radius estimate along orbits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficient::Coefficient;
use crate::dynamics::{DynamicsError, MapModel, DERIVATIVE_STEP};
use crate::expr::EvalError;
use crate::graph::{
    cross_edges, decompose, hits_circle, orientation, MSGraph, Orientation, Side,
    DEFAULT_CIRCLE_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("weights must be nonempty")]
    NoWeights,
    #[error("weight {0} is not positive")]
    NonPositiveWeight(f64),
    #[error("the closed-form rule needs distinct weights")]
    RepeatedWeights,
    #[error("the closed-form rule needs w(F(0)) < w(F(m)), got {first} and {last}")]
    EndpointOrder { first: f64, last: f64 },
    #[error("classifiers disagree: graph says {main:?}, closed form says {simplex:?}")]
    Disagreement {
        main: Box<Classification>,
        simplex: Box<Classification>,
    },
    #[error("density vanishes at {0:?}")]
    ZeroDensity(Vec<f64>),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl Annulus {
    pub fn contains(&self, modulus: f64) -> bool {
        self.r <= modulus && modulus <= self.big_r
    }
}

fn check_weights(weights: &[f64]) -> Result<(), ClassifierError> {
    if weights.is_empty() {
        return Err(ClassifierError::NoWeights);
    }
    match weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        Some(&w) => Err(ClassifierError::NonPositiveWeight(w)),
        None => Ok(()),
    }
}

/// `r = min |a(F)|`, `R = max |a(F)|`.
pub fn annulus(weights: &[f64]) -> Result<Annulus, ClassifierError> {
    check_weights(weights)?;
    Ok(Annulus {
        r: weights.iter().copied().fold(f64::INFINITY, f64::min),
        big_r: weights.iter().copied().fold(0.0, f64::max),
    })
}

/// Sorted distinct radii `|a(F)|`; they cut the annulus into subrings.
pub fn circles(weights: &[f64]) -> Vec<f64> {
    let mut c = weights.to_vec();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    OutsideSpectrum,
    RightInvertible,
    LeftInvertible,
    NotOneSided,
    /// The ids of the hit vertices are in `Classification::circle_hits`.
    OnCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelInfo {
    Zero,
    InfiniteDim,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeInfo {
    Closed,
    DenseNotClosed,
    ClosedNotDense,
    NotClosed,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    MainTheorem,
    SimplexTheorem,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub lambda: LambdaJson,
    pub modulus: f64,
    pub status: Status,
    pub kernel: KernelInfo,
    pub range: RangeInfo,
    pub provenance: Provenance,
    pub circle_hits: Vec<usize>,
}

impl Classification {
    fn new(
        lambda: Complex64,
        status: Status,
        kernel: KernelInfo,
        range: RangeInfo,
        provenance: Provenance,
        circle_hits: Vec<usize>,
    ) -> Self {
        Classification {
            lambda: LambdaJson {
                re: lambda.re,
                im: lambda.im,
            },
            modulus: lambda.norm(),
            status,
            kernel,
            range,
            provenance,
            circle_hits,
        }
    }

    /// Status, kernel and range, the part every classifier must agree on.
    pub fn verdict(&self) -> (Status, KernelInfo, RangeInfo) {
        (self.status, self.kernel, self.range)
    }
}

pub fn classify(graph: &MSGraph, lambda: Complex64) -> Classification {
    classify_with_tol(graph, lambda, DEFAULT_CIRCLE_TOL)
}

/// Verdict from the graph alone. Circle hits are checked first, so `|λ| = r` or
/// `|λ| = R` reads as a circle and not as outside the spectrum.
pub fn classify_with_tol(graph: &MSGraph, lambda: Complex64, tol: f64) -> Classification {
    let modulus = lambda.norm();
    let dec = decompose(graph, modulus, tol);
    let make = |status, kernel, range, hits| {
        Classification::new(lambda, status, kernel, range, Provenance::MainTheorem, hits)
    };
    if !dec.is_valid() {
        let range = if graph.density_flag {
            RangeInfo::NotClosed
        } else {
            RangeInfo::Unknown
        };
        return make(
            Status::OnCircle,
            KernelInfo::Unknown,
            range,
            dec.circle_hits,
        );
    }
    if dec.g_minus.is_empty() || dec.g_plus.is_empty() {
        return make(
            Status::OutsideSpectrum,
            KernelInfo::Zero,
            RangeInfo::Closed,
            vec![],
        );
    }
    let orient = orientation(graph, &dec).expect("decomposition is valid");
    match orient {
        Orientation::RightOriented => make(
            Status::RightInvertible,
            KernelInfo::InfiniteDim,
            RangeInfo::Closed,
            vec![],
        ),
        // both sides populated but no edge between them: both one-sided
        // criteria hold vacuously
        Orientation::NoCross => make(
            Status::RightInvertible,
            KernelInfo::Zero,
            RangeInfo::Closed,
            vec![],
        ),
        Orientation::LeftOriented => make(
            Status::LeftInvertible,
            KernelInfo::Zero,
            RangeInfo::ClosedNotDense,
            vec![],
        ),
        Orientation::Mixed => {
            let range = match (graph.density_flag, graph.simplex_dim) {
                (true, Some(_)) => RangeInfo::DenseNotClosed,
                (true, None) => RangeInfo::NotClosed,
                (false, _) => RangeInfo::Unknown,
            };
            // the dense block carries an infinite-dimensional kernel exactly when
            // it is a rightward cross edge
            let dense = graph.dense_edge.filter(|_| graph.density_flag);
            let kernel = match dense {
                Some((j, k))
                    if dec.side(j) == Some(Side::Minus)
                        && dec.side(k) == Some(Side::Plus)
                        && cross_edges(graph, &dec).contains(&(j, k)) =>
                {
                    KernelInfo::InfiniteDim
                }
                Some(_) if graph.simplex_dim.is_some() => KernelInfo::Zero,
                _ => KernelInfo::Unknown,
            };
            make(Status::NotOneSided, kernel, range, vec![])
        }
    }
}

/// Permutation sorting the weights increasingly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaOrder {
    pub sigma: Vec<usize>,
}

impl SigmaOrder {
    pub fn new(weights: &[f64]) -> Result<Self, ClassifierError> {
        check_weights(weights)?;
        let mut sigma: Vec<usize> = (0..weights.len()).collect();
        sigma.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
        if sigma.windows(2).any(|w| weights[w[0]] == weights[w[1]]) {
            return Err(ClassifierError::RepeatedWeights);
        }
        Ok(SigmaOrder { sigma })
    }

    /// `k₀ = #{i : w(F(i)) < |λ|}`.
    pub fn threshold(weights: &[f64], modulus: f64) -> usize {
        weights.iter().filter(|&&w| w < modulus).count()
    }

    /// Whether `σ` maps `{0, …, k₀−1}` onto itself.
    pub fn prefix_invariant(&self, k0: usize) -> bool {
        self.sigma[..k0].iter().all(|&i| i < k0)
    }
}

pub fn classify_simplex(
    weights: &[f64],
    lambda: Complex64,
) -> Result<Classification, ClassifierError> {
    classify_simplex_with_tol(weights, lambda, DEFAULT_CIRCLE_TOL)
}

/// Closed-form verdict for the simplex family with distinct weights and
/// `w(F(0)) < w(F(m))`.
pub fn classify_simplex_with_tol(
    weights: &[f64],
    lambda: Complex64,
    tol: f64,
) -> Result<Classification, ClassifierError> {
    let order = SigmaOrder::new(weights)?;
    let (first, last) = (weights[0], weights[weights.len() - 1]);
    if first >= last {
        return Err(ClassifierError::EndpointOrder { first, last });
    }
    let modulus = lambda.norm();
    let ring = annulus(weights)?;
    let hits: Vec<usize> = (0..weights.len())
        .filter(|&i| hits_circle(weights[i], modulus, tol))
        .collect();
    let make = |status, kernel, range, hits| {
        Classification::new(
            lambda,
            status,
            kernel,
            range,
            Provenance::SimplexTheorem,
            hits,
        )
    };
    use KernelInfo::{InfiniteDim, Zero};
    use RangeInfo::{Closed, DenseNotClosed, NotClosed};

    if hits.is_empty() && !ring.contains(modulus) {
        return Ok(make(Status::OutsideSpectrum, Zero, Closed, vec![]));
    }
    // case I: the circles through the repeller and the attractor
    if hits.contains(&0) || hits.contains(&(weights.len() - 1)) {
        return Ok(make(Status::OnCircle, KernelInfo::Unknown, NotClosed, hits));
    }
    let between = first < modulus && modulus < last;
    if !hits.is_empty() {
        let kernel = if between { InfiniteDim } else { Zero };
        return Ok(make(Status::OnCircle, kernel, DenseNotClosed, hits));
    }
    if between {
        // case II
        let k0 = SigmaOrder::threshold(weights, modulus);
        if order.prefix_invariant(k0) {
            Ok(make(Status::RightInvertible, InfiniteDim, Closed, vec![]))
        } else {
            Ok(make(
                Status::NotOneSided,
                InfiniteDim,
                DenseNotClosed,
                vec![],
            ))
        }
    } else {
        // case III
        Ok(make(Status::NotOneSided, Zero, DenseNotClosed, vec![]))
    }
}

fn kernel_compatible(a: KernelInfo, b: KernelInfo) -> Option<KernelInfo> {
    match (a, b) {
        (KernelInfo::Unknown, x) | (x, KernelInfo::Unknown) => Some(x),
        (x, y) if x == y => Some(x),
        _ => None,
    }
}

fn range_compatible(a: RangeInfo, b: RangeInfo) -> Option<RangeInfo> {
    use RangeInfo::*;
    match (a, b) {
        (Unknown, x) | (x, Unknown) => Some(x),
        (NotClosed, DenseNotClosed) | (DenseNotClosed, NotClosed) => Some(DenseNotClosed),
        (x, y) if x == y => Some(x),
        _ => None,
    }
}

/// Merges the graph verdict with the closed-form one. `Unknown` yields to the
/// other side and `NotClosed` is refined by `DenseNotClosed`; anything else must
/// match exactly.
pub fn combine(
    main: Classification,
    simplex: Classification,
) -> Result<Classification, ClassifierError> {
    let merged = (main.status == simplex.status)
        .then(|| {
            Some((
                kernel_compatible(main.kernel, simplex.kernel)?,
                range_compatible(main.range, simplex.range)?,
            ))
        })
        .flatten();
    match merged {
        Some((kernel, range)) => Ok(Classification {
            kernel,
            range,
            provenance: Provenance::Both,
            ..main
        }),
        None => Err(ClassifierError::Disagreement {
            main: Box::new(main),
            simplex: Box::new(simplex),
        }),
    }
}

/// The graph verdict, refined by the closed-form rule whenever the graph is a
/// simplex graph satisfying its assumptions.
pub fn classify_full(
    graph: &MSGraph,
    lambda: Complex64,
    tol: f64,
) -> Result<Classification, ClassifierError> {
    let main = classify_with_tol(graph, lambda, tol);
    if graph.simplex_dim.is_none() {
        return Ok(main);
    }
    match classify_simplex_with_tol(&graph.weights(), lambda, tol) {
        Ok(simplex) => combine(main, simplex),
        Err(ClassifierError::RepeatedWeights | ClassifierError::EndpointOrder { .. }) => Ok(main),
        Err(e) => Err(e),
    }
}

/// `a(x) = |a₀(x)|·ρ(x)^{−1/2}` with `ρ` the density of Lebesgue measure pulled
/// back by `α⁻¹`. On the simplex family `ρ(y) = Π (γ⁻¹)′(yᵢ)`; for black-box
/// maps it is the absolute Jacobian determinant of `α⁻¹`, by central differences.
pub fn reduced_coefficient(a0: &Coefficient, model: &MapModel) -> Coefficient {
    let a0 = a0.clone();
    let model = model.clone();
    let label = format!("reduced({})", a0.label());
    Coefficient::from_fn(model.dim(), label, move |y| {
        let rho = density(&model, y).map_err(|e| match e {
            ClassifierError::Eval(e) => e,
            ClassifierError::ZeroDensity(_) => EvalError::DivisionByZero,
            _ => EvalError::NonFinite,
        })?;
        let v = a0.eval(y)?.abs() / rho.sqrt();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    })
}

/// Radon–Nikodym density `ρ(y)` of `μ∘α⁻¹` with respect to `μ`.
pub fn density(model: &MapModel, y: &[f64]) -> Result<f64, ClassifierError> {
    let rho = match model {
        MapModel::Simplex(s) => y
            .iter()
            .map(|&v| s.gamma.inverse_derivative(v))
            .product::<Result<f64, _>>()?,
        MapModel::BlackBox(_) => jacobian_det(model, y)?.abs(),
    };
    if rho == 0.0 || !rho.is_finite() {
        return Err(ClassifierError::ZeroDensity(y.to_vec()));
    }
    Ok(rho)
}

fn jacobian_det(model: &MapModel, y: &[f64]) -> Result<f64, ClassifierError> {
    let d = y.len();
    let h = DERIVATIVE_STEP;
    let mut jac = vec![vec![0.0; d]; d];
    let shifted = |col: usize, by: f64| {
        let mut p = y.to_vec();
        p[col] += by;
        p
    };
    for col in 0..d {
        let (plus, minus) = (shifted(col, h), shifted(col, -h));
        // second-order one-sided differences at the boundary
        let (inside_plus, inside_minus) = (model.contains(&plus), model.contains(&minus));
        let column: Vec<f64> = if inside_plus == inside_minus {
            let (fp, fm) = (model.inverse(&plus)?, model.inverse(&minus)?);
            fp.iter()
                .zip(&fm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect()
        } else {
            let s = if inside_plus { 1.0 } else { -1.0 };
            let f0 = model.inverse(y)?;
            let f1 = model.inverse(&shifted(col, s * h))?;
            let f2 = model.inverse(&shifted(col, 2.0 * s * h))?;
            (0..d)
                .map(|r| s * (-3.0 * f0[r] + 4.0 * f1[r] - f2[r]) / (2.0 * h))
                .collect()
        };
        for (row, v) in jac.iter_mut().zip(column) {
            row[col] = v;
        }
    }
    Ok(determinant(jac))
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .expect("nonempty");
        if a[pivot][c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            a.swap(pivot, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

/// Largest geometric mean of `|a|` over `window` consecutive orbit points, taken
/// over the two-sided orbits of the samples. Windows on which `|a|` is constant
/// report that constant exactly.
pub fn spectral_radius_estimate(
    model: &MapModel,
    a: &Coefficient,
    window: usize,
    samples: &[Vec<f64>],
) -> Result<f64, ClassifierError> {
    let window = window.max(1);
    let reach = (window + 100) as i64;
    let mut best = 0.0_f64;
    for tau in samples {
        let values = orbit_moduli(model, a, tau, reach)?;
        for w in values.windows(window) {
            let first = w[0];
            let mean = if w.iter().all(|&v| v == first) {
                first
            } else {
                (w.iter().map(|v| v.ln()).sum::<f64>() / window as f64).exp()
            };
            best = best.max(mean);
        }
    }
    Ok(best)
}

fn orbit_moduli(
    model: &MapModel,
    a: &Coefficient,
    tau: &[f64],
    reach: i64,
) -> Result<Vec<f64>, ClassifierError> {
    let start = model.iterate(tau, -reach)?;
    let mut p = start;
    let mut out = Vec::with_capacity(2 * reach as usize + 1);
    for _ in 0..=2 * reach {
        out.push(a.eval(&p)?.abs());
        p = model.forward(&p)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntervalMap;
    use crate::graph::simplex_graph;

    fn lam(m: f64) -> Complex64 {
        Complex64::new(m, 0.0)
    }

    #[test]
    fn annulus_and_circles() {
        let a = annulus(&[1.0, 3.0, 2.0]).unwrap();
        assert_eq!((a.r, a.big_r), (1.0, 3.0));
        let a = annulus(&[5.0]).unwrap();
        assert_eq!((a.r, a.big_r), (5.0, 5.0));
        assert_eq!(circles(&[1.0, 3.0, 2.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(circles(&[2.0, 2.0, 2.0]), vec![2.0]);
        assert!(matches!(
            annulus(&[1.0, -1.0]),
            Err(ClassifierError::NonPositiveWeight(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let g = simplex_graph(2, &[1.0, 3.0, 2.0]).unwrap();
        let c = classify(&g, Complex64::from_polar(1.5, std::f64::consts::PI / 7.0));
        assert_eq!(c.status, Status::RightInvertible);
        assert_eq!(c.kernel, KernelInfo::InfiniteDim);

        let c = classify(&g, lam(2.0));
        assert_eq!(c.status, Status::OnCircle);
        assert_eq!(c.circle_hits, vec![2]);
        assert_eq!(c.range, RangeInfo::NotClosed);

        assert_eq!(classify(&g, lam(3.5)).status, Status::OutsideSpectrum);
        let c = classify(&g, lam(2.5));
        assert_eq!(
            c.verdict(),
            (
                Status::NotOneSided,
                KernelInfo::Zero,
                RangeInfo::DenseNotClosed
            )
        );
    }

    #[test]
    fn simplex_examples() {
        let c = classify_simplex(&[1.0, 3.0, 2.0], lam(1.5)).unwrap();
        assert_eq!(c.status, Status::RightInvertible);
        let c = classify_simplex(&[1.0, 3.0, 2.0], lam(2.5)).unwrap();
        assert_eq!(
            c.verdict(),
            (
                Status::NotOneSided,
                KernelInfo::Zero,
                RangeInfo::DenseNotClosed
            )
        );
        let c = classify_simplex(&[1.0, 2.0, 3.0], lam(1.0)).unwrap();
        assert_eq!(c.range, RangeInfo::NotClosed);
        assert!(matches!(
            classify_simplex(&[3.0, 2.0, 1.0], lam(1.5)),
            Err(ClassifierError::EndpointOrder { .. })
        ));
        assert!(matches!(
            classify_simplex(&[1.0, 2.0, 2.0], lam(1.5)),
            Err(ClassifierError::RepeatedWeights)
        ));
    }

    #[test]
    fn sigma_order() {
        let s = SigmaOrder::new(&[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.sigma, vec![0, 2, 1]);
        assert_eq!(SigmaOrder::threshold(&[1.0, 3.0, 2.0], 1.5), 1);
        assert!(s.prefix_invariant(1));
        assert!(!s.prefix_invariant(2));
    }

    #[test]
    fn full_classification() {
        let g = simplex_graph(2, &[1.0, 3.0, 2.0]).unwrap();
        let c = classify_full(&g, lam(1.5), DEFAULT_CIRCLE_TOL).unwrap();
        assert_eq!(c.provenance, Provenance::Both);
        let c = classify_full(&g, lam(2.0), DEFAULT_CIRCLE_TOL).unwrap();
        assert_eq!(
            c.verdict(),
            (Status::OnCircle, KernelInfo::Unknown, RangeInfo::NotClosed)
        );
        // inner circle: the closed form refines kernel and range
        let g123 = simplex_graph(2, &[1.0, 2.0, 3.0]).unwrap();
        let c = classify_full(&g123, lam(2.0), DEFAULT_CIRCLE_TOL).unwrap();
        assert_eq!(
            c.verdict(),
            (
                Status::OnCircle,
                KernelInfo::InfiniteDim,
                RangeInfo::DenseNotClosed
            )
        );
        let g = simplex_graph(2, &[3.0, 2.0, 1.0]).unwrap();
        let c = classify_full(&g, lam(1.5), DEFAULT_CIRCLE_TOL).unwrap();
        assert_eq!(c.status, Status::LeftInvertible);
        assert_eq!(c.provenance, Provenance::MainTheorem);
    }

    #[test]
    fn json_shape() {
        let g = simplex_graph(2, &[1.0, 3.0, 2.0]).unwrap();
        let v: serde_json::Value = serde_json::to_value(classify(&g, lam(2.0))).unwrap();
        assert_eq!(v["status"], "OnCircle");
        assert_eq!(v["lambda"]["re"], 2.0);
        assert_eq!(v["circle_hits"][0], 2);
    }

    #[test]
    fn reduced_coefficient_examples() {
        let model = MapModel::simplex(1, IntervalMap::mobius(2.0).unwrap()).unwrap();
        let a = reduced_coefficient(&Coefficient::constant(1.0, 1), &model);
        assert!((a.eval(&[0.0]).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((a.eval(&[1.0]).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        // measure oracle: μ(α⁻¹[0, ε]) / ε → ρ(0) = 1/2
        let g = IntervalMap::mobius(2.0).unwrap();
        let eps = 1e-7;
        let rho0 = g.inverse(eps).unwrap() / eps;
        assert!((rho0 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn radius_estimates() {
        let model = MapModel::simplex(1, IntervalMap::mobius(2.0).unwrap()).unwrap();
        let c = Coefficient::constant(2.5, 1);
        assert_eq!(
            spectral_radius_estimate(&model, &c, 17, &[vec![0.3]]).unwrap(),
            2.5
        );
        let a = Coefficient::from_fn(1, "1+x", |x| Ok(1.0 + x[0]));
        let est = spectral_radius_estimate(&model, &a, 200, &[vec![0.5]]).unwrap();
        assert!((est / 2.0 - 1.0).abs() < 0.02, "{est}");
        assert!(est <= 2.0 + 1e-12);
    }

    #[test]
    fn determinant_small() {
        assert_eq!(determinant(vec![vec![2.0, 1.0], vec![1.0, 3.0]]), 5.0);
        assert_eq!(determinant(vec![vec![0.0, 1.0], vec![1.0, 0.0]]), -1.0);
    }
}
