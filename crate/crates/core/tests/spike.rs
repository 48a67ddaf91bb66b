mod common;

use common::*;
use michs::model::{check_spike, ClassId, InclusionMatrix, ObservationMatrix, PriorParams};
use michs::rng::Rng;
use michs::sampler::{run_chain_cached, sample_code_given_support, ChainConfig, GramCache};
use michs::solver::{ridge_on_support, solve_class, solve_task};
use ndarray::Array1;
use proptest::prelude::*;
use rand::SeedableRng;

fn short(seed: u64) -> ChainConfig {
    ChainConfig { max_iter: 60, burn_in: 10, seed, ..ChainConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sampler_draws_respect_spikes(seed in any::<u64>(), m in 2usize..8, n in 2usize..8, mask in any::<u16>()) {
        let mut r = rng(seed);
        let dict = random_dictionary(&mut r, m, n);
        let y: Array1<f64> = (0..m).map(|_| normal(&mut r)).collect();
        let gamma: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let params = PriorParams::default();
        let x = sample_code_given_support(&dict, y.view(), &gamma, &params, &mut Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(check_spike(x.view(), &gamma).is_ok());
        let ridge = ridge_on_support(&dict, y.view(), &gamma, &params).unwrap();
        prop_assert!(check_spike(ridge.view(), &gamma).is_ok());

        let cache = GramCache::new(&dict);
        let kappa = Array1::from_elem(n, 0.3);
        let mut violations = 0;
        run_chain_cached(&dict, &cache, y.view(), kappa.view(), &params, &short(seed), |_, x, g| {
            violations += usize::from(check_spike(x, g).is_err());
        }).unwrap();
        prop_assert_eq!(violations, 0);
    }

    #[test]
    fn solutions_respect_spikes(seed in any::<u64>(), m in 2usize..8, n in 2usize..8, tasks in 1usize..4) {
        let mut r = rng(seed);
        let dict = random_dictionary(&mut r, m, n);
        let params = PriorParams::default();
        let cols: Vec<Vec<f64>> = (0..tasks).map(|_| (0..m).map(|_| normal(&mut r)).collect()).collect();
        let obs = ObservationMatrix::from_columns(&cols).unwrap();
        let kappa = InclusionMatrix::for_class(&dict, ClassId(2), tasks, 0.4, 0.01).unwrap();

        let task = solve_task(&dict, obs.column(0), kappa.row(0), &params, &short(seed)).unwrap();
        prop_assert!(check_spike(task.code.view(), &task.support).is_ok());

        let sol = solve_class(&dict, &obs, &kappa, &params, &short(seed)).unwrap();
        for ((x, g), t) in sol.codes.values.iter().zip(sol.supports.flags.iter()).zip(0..) {
            prop_assert!(*g || *x == 0.0, "entry {} nonzero under a spike", t);
        }
        for t in &sol.tasks {
            prop_assert!(check_spike(t.code.view(), &t.support).is_ok());
        }
    }
}
