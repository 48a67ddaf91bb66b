#![allow(dead_code)]

use michs::model::{ClassId, Dictionary, PriorParams};
use michs_testkit::Hyper;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn to_dmatrix(d: &Dictionary<f64>) -> DMatrix<f64> {
    let a = d.atoms();
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[[r, c]])
}

pub fn to_dvector(v: ArrayView1<f64>) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().copied())
}

pub fn hyper(p: &PriorParams<f64>) -> Hyper {
    Hyper {
        sigma2: p.sigma2,
        sigma_n2: p.sigma_n2,
        lambda: p.lambda,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random Gaussian dictionary with `n` atoms of dimension `m`, labeled
/// alternately with classes 1 and 2.
pub fn random_dictionary(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Dictionary<f64> {
    let images: Vec<(Vec<f64>, ClassId)> = (0..n)
        .map(|i| ((0..m).map(|_| normal(rng)).collect(), ClassId(1 + i % 2)))
        .collect();
    Dictionary::build(&images).unwrap()
}

/// `y = Σ_{i∈S} a_i c_i + noise` for a random support of size `k`.
pub fn planted_observation(
    rng: &mut ChaCha8Rng,
    dict: &Dictionary<f64>,
    k: usize,
    amplitude: f64,
    noise_std: f64,
) -> (Array1<f64>, Vec<bool>) {
    let n = dict.n();
    let picks = rand::seq::index::sample(rng, n, k);
    let mut support = vec![false; n];
    let mut y = Array1::<f64>::zeros(dict.m());
    for i in picks.iter() {
        support[i] = true;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let c = sign * amplitude * (0.75 + 0.5 * rng.random::<f64>());
        y.scaled_add(c, &dict.atom(i));
    }
    for v in y.iter_mut() {
        *v += noise_std * normal(rng);
    }
    (y, support)
}

/// Empirical distribution over the `2ⁿ` supports visited by a retained chain.
pub fn empirical_distribution(trace: &michs::ChainTrace, n: usize) -> Vec<f64> {
    let seq = trace.sequence.as_ref().expect("chain retained its sequence");
    let mut counts = vec![0.0; 1 << n];
    for (_, gamma) in seq {
        counts[michs_testkit::mask_from_support(gamma)] += 1.0;
    }
    let total = seq.len() as f64;
    counts.iter().map(|c| c / total).collect()
}
