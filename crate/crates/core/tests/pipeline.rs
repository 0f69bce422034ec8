use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wso_core::coefficient::Coefficient;
use wso_core::discrete::{verify_block, BlockRegime, DEFAULT_TRUNCATIONS};
use wso_core::dynamics::{
    coeff_sequence, fundamental_domain, orbit_block, IntervalMap, LimitOptions, MapModel,
};
use wso_core::graph::simplex_graph;

const WINDOW: usize = 60;

fn block_reports(lambda: f64) -> Vec<((usize, usize), i8, bool)> {
    let weights = [1.0, 3.0, 2.0];
    let model = MapModel::simplex(2, IntervalMap::mobius(2.0).unwrap()).unwrap();
    let a = Coefficient::simplex_interpolant(&weights);
    let graph = simplex_graph(2, &weights).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    graph
        .edges
        .iter()
        .map(|&(j, k)| {
            let block = orbit_block(&model, j, k, &mut rng).unwrap();
            let theta = fundamental_domain(&model, &block, 0.5).unwrap();
            let tau = theta.project(&block.base).unwrap();
            let seq = coeff_sequence(&model, &a, &tau, WINDOW, &LimitOptions::default()).unwrap();
            let regime = BlockRegime::of(weights[j], weights[k], lambda);
            let r = verify_block(
                &seq,
                Complex64::new(lambda, 0.0),
                regime,
                &DEFAULT_TRUNCATIONS,
            );
            ((j, k), r.index_estimate.unwrap_or(99), r.agreement)
        })
        .collect()
}

#[test]
fn right_invertible_point() {
    let r = block_reports(1.5);
    assert!(r.iter().all(|x| x.2), "{r:?}");
    // cross edges (0,1) and (0,2) carry index +1
    assert_eq!(r.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 1, 0]);
}

#[test]
fn mixed_point() {
    let r = block_reports(2.5);
    assert!(r.iter().all(|x| x.2), "{r:?}");
    assert_eq!(r.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 0, -1]);
}

#[test]
fn outside_point() {
    let r = block_reports(3.5);
    assert!(r.iter().all(|x| x.2 && x.1 == 0), "{r:?}");
}
