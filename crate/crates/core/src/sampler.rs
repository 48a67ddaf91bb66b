//! Gibbs sampling of the support indicators for one task of one class.
//!
//! Each iteration draws the active coefficients jointly from their Gaussian
//! posterior given the current support, then sweeps the atoms in order. For
//! atom `i` the indicator is drawn from its conditional with `x_i`
//! integrated out, and `x_i` is immediately refreshed from its conditional
//! given the new indicator. The pair `(γ_i, x_i)` is therefore updated as
//! one block, which keeps `f(γ | y)` as the stationary law of the support
//! chain.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;

use crate::linalg;
use crate::model::{check_probability, Dictionary, PriorParams};
use crate::rng::Rng;
use crate::{Error, Result, Scalar};

/// Chain length and support-selection settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub max_iter: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in iteration.
    pub thin: usize,
    pub inclusion_threshold: f64,
    pub seed: u64,
    /// Retain every kept support vector in the trace.
    pub retain_sequence: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            max_iter: 5000,
            burn_in: 500,
            thin: 1,
            inclusion_threshold: 0.5,
            seed: 0,
            retain_sequence: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.max_iter {
            return Err(Error::invalid(
                "burn_in",
                format!(
                    "must be below max_iter ({} >= {}); no samples would be kept",
                    self.burn_in, self.max_iter
                ),
            ));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin", "must be at least 1"));
        }
        check_probability("inclusion_threshold", self.inclusion_threshold)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ChainConfig {
            seed,
            ..self.clone()
        }
    }

    /// Number of iterations that contribute to the inclusion frequencies.
    pub fn samples_kept(&self) -> usize {
        (self.max_iter - self.burn_in).div_ceil(self.thin)
    }
}

/// Post-burn-in record of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub inclusion_freq: Vec<f64>,
    pub samples_kept: usize,
    /// `(iteration, support)` for every kept iteration when retention is on.
    pub sequence: Option<Vec<(usize, Vec<bool>)>>,
}

/// Precomputed `AᵀA`, shared by every chain that runs on one dictionary.
#[derive(Clone, Debug)]
pub struct GramCache<S> {
    gram: Array2<S>,
}

impl<S: Scalar> GramCache<S> {
    pub fn new(dict: &Dictionary<S>) -> Self {
        GramCache { gram: dict.gram() }
    }

    pub fn gram(&self) -> &Array2<S> {
        &self.gram
    }
}

fn active_indices(gamma: &[bool]) -> Vec<usize> {
    gamma
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| g.then_some(i))
        .collect()
}

fn standard_normal<S: Scalar>(rng: &mut Rng) -> S {
    S::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Joint draw of the active coefficients from `N(P⁻¹b, P⁻¹)` where
/// `P = G_SS/σ_n² + (λ/σ²) I` and `b = (Aᵀy)_S/σ_n²`. Inactive entries of the
/// returned vector are exactly zero.
fn draw_active<S: Scalar>(
    gram: &Array2<S>,
    aty: ArrayView1<S>,
    active: &[usize],
    params: &PriorParams<S>,
    rng: &mut Rng,
) -> Result<Array1<S>> {
    let n = aty.len();
    let mut x = Array1::<S>::zeros(n);
    if active.is_empty() {
        return Ok(x);
    }
    let inv_noise = S::one() / params.sigma_n2;
    let slab_precision = params.lambda / params.sigma2;
    let k = active.len();
    let mut precision = Array2::<S>::zeros((k, k));
    let mut rhs = Array1::<S>::zeros(k);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            precision[[a, b]] = gram[[i, j]] * inv_noise;
        }
        precision[[a, a]] = precision[[a, a]] + slab_precision;
        rhs[a] = aty[i] * inv_noise;
    }
    let l = linalg::cholesky(precision.view())?;
    let z = linalg::forward_sub(&l, rhs.view());
    let mean = linalg::backward_sub_t(&l, z.view());
    let noise: Array1<S> = (0..k).map(|_| standard_normal(rng)).collect();
    let offset = linalg::backward_sub_t(&l, noise.view());
    for (a, &i) in active.iter().enumerate() {
        x[i] = mean[a] + offset[a];
    }
    Ok(x)
}

/// Draws `x ~ f(x | y, γ)`: zero off the support, one joint Gaussian draw on
/// it. An empty support consumes no randomness.
pub fn sample_code_given_support<S: Scalar>(
    dict: &Dictionary<S>,
    y: ArrayView1<S>,
    gamma: &[bool],
    params: &PriorParams<S>,
    rng: &mut Rng,
) -> Result<Array1<S>> {
    check_dims(dict, y, gamma.len())?;
    params.validate()?;
    let active = active_indices(gamma);
    let a_s = dict.atoms().select(ndarray::Axis(1), &active);
    let gram_s = a_s.t().dot(&a_s);
    let aty_s = a_s.t().dot(&y);
    // Embed the active block so draw_active can index by atom.
    let n = gamma.len();
    let mut gram = Array2::<S>::zeros((n, n));
    let mut aty = Array1::<S>::zeros(n);
    for (a, &i) in active.iter().enumerate() {
        aty[i] = aty_s[a];
        for (b, &j) in active.iter().enumerate() {
            gram[[i, j]] = gram_s[[a, b]];
        }
    }
    draw_active(&gram, aty.view(), &active, params, rng)
}

fn check_dims<S: Scalar>(dict: &Dictionary<S>, y: ArrayView1<S>, n: usize) -> Result<()> {
    if y.len() != dict.m() {
        return Err(Error::Shape(format!(
            "observation length {} vs dictionary dimension {}",
            y.len(),
            dict.m()
        )));
    }
    if n != dict.n() {
        return Err(Error::Shape(format!(
            "vector of length {} vs {} atoms",
            n,
            dict.n()
        )));
    }
    Ok(())
}

/// Log-odds of `γ_i = 1` against `γ_i = 0` with `x_i` integrated out, given
/// `‖a_i‖²` and the correlation `a_iᵀr` with the residual that excludes atom
/// `i`.
pub fn collapsed_log_odds<S: Scalar>(
    norm_sq: S,
    corr: S,
    params: &PriorParams<S>,
    kappa: S,
) -> S {
    let tau2 = params.slab_variance();
    let s = params.sigma_n2;
    let shrink = S::one() + tau2 * norm_sq / s;
    let half = S::lit(0.5);
    (kappa / (S::one() - kappa)).ln() - half * shrink.ln()
        + tau2 * corr * corr / (S::lit(2.0) * s * s * shrink)
}

/// Collapsed conditional log-odds for atom `atom_index` given the residual
/// `y − Σ_{j≠i} a_j x_j`.
pub fn support_log_odds<S: Scalar>(
    dict: &Dictionary<S>,
    residual_excl_i: ArrayView1<S>,
    atom_index: usize,
    params: &PriorParams<S>,
    kappa_i: S,
) -> Result<S> {
    check_dims(dict, residual_excl_i, dict.n())?;
    if atom_index >= dict.n() {
        return Err(Error::Shape(format!(
            "atom index {atom_index} out of range for {} atoms",
            dict.n()
        )));
    }
    params.validate()?;
    check_probability("kappa_i", kappa_i)?;
    let a = dict.atom(atom_index);
    Ok(collapsed_log_odds(
        a.dot(&a),
        a.dot(&residual_excl_i),
        params,
        kappa_i,
    ))
}

fn inclusion_probability(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Runs the chain for one observation vector and one row of inclusion
/// probabilities.
pub fn run_chain<S: Scalar>(
    dict: &Dictionary<S>,
    y: ArrayView1<S>,
    kappa_row: ArrayView1<S>,
    params: &PriorParams<S>,
    cfg: &ChainConfig,
) -> Result<ChainTrace> {
    let cache = GramCache::new(dict);
    run_chain_cached(dict, &cache, y, kappa_row, params, cfg, |_, _, _| {})
}

/// [`run_chain`] with a shared Gram matrix and an observer that sees
/// `(iteration, x, γ)` after every coefficient draw, where `γ` is the
/// support the draw was conditioned on.
pub fn run_chain_cached<S: Scalar, F>(
    dict: &Dictionary<S>,
    cache: &GramCache<S>,
    y: ArrayView1<S>,
    kappa_row: ArrayView1<S>,
    params: &PriorParams<S>,
    cfg: &ChainConfig,
    mut observe: F,
) -> Result<ChainTrace>
where
    F: FnMut(usize, ArrayView1<S>, &[bool]),
{
    check_dims(dict, y, kappa_row.len())?;
    params.validate()?;
    cfg.validate()?;
    for &k in kappa_row {
        check_probability("kappa", k)?;
    }
    let n = dict.n();
    let gram = cache.gram();
    let aty = dict.atoms().t().dot(&y);
    let mut rng = Rng::seed_from_u64(cfg.seed);

    let inv_noise = S::one() / params.sigma_n2;
    let slab_precision = params.lambda / params.sigma2;
    let norms: Vec<S> = (0..n).map(|i| gram[[i, i]]).collect();
    // log-odds_i = offset_i + quad_i · (a_iᵀr)², see `collapsed_log_odds`
    let tau2 = params.slab_variance();
    let (offsets, quads): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let shrink = S::one() + tau2 * norms[i] * inv_noise;
            let k = kappa_row[i];
            let offset = (k / (S::one() - k)).ln() - S::lit(0.5) * shrink.ln();
            let quad = tau2 / (S::lit(2.0) * params.sigma_n2 * params.sigma_n2 * shrink);
            (offset.to_f64_lossy(), quad.to_f64_lossy())
        })
        .unzip();
    let cond_var: Vec<S> = norms
        .iter()
        .map(|&nn| S::one() / (nn * inv_noise + slab_precision))
        .collect();

    // γ⁽⁰⁾ = 1 and x⁽⁰⁾ the ridge estimate with the model's own regularizer.
    let mut gamma = vec![true; n];
    let mut x = ridge_all(gram, aty.view(), params)?;
    let mut corr = residual_corr(gram, aty.view(), &x, &gamma);

    let mut counts = vec![0usize; n];
    let mut kept = 0usize;
    let mut sequence = cfg.retain_sequence.then(Vec::new);

    for iter in 1..=cfg.max_iter {
        let active = active_indices(&gamma);
        x = draw_active(gram, aty.view(), &active, params, &mut rng)?;
        observe(iter, x.view(), &gamma);
        corr = residual_corr_into(corr, gram, aty.view(), &x, &active);

        for i in 0..n {
            let c_excl = corr[i] + norms[i] * x[i];
            let c = c_excl.to_f64_lossy();
            let p = inclusion_probability(offsets[i] + quads[i] * c * c);
            let on = rng.random::<f64>() < p;
            let new_x = if on {
                let var = cond_var[i];
                let mean = var * c_excl * inv_noise;
                mean + var.sqrt() * standard_normal::<S>(&mut rng)
            } else {
                S::zero()
            };
            gamma[i] = on;
            let delta = new_x - x[i];
            if delta != S::zero() {
                for (c, &g) in corr.iter_mut().zip(gram.column(i)) {
                    *c = *c - g * delta;
                }
            }
            x[i] = new_x;
        }

        if iter > cfg.burn_in && (iter - cfg.burn_in - 1) % cfg.thin == 0 {
            kept += 1;
            for (c, &g) in counts.iter_mut().zip(&gamma) {
                *c += g as usize;
            }
            if let Some(seq) = sequence.as_mut() {
                seq.push((iter, gamma.clone()));
            }
        }
    }

    debug_assert_eq!(kept, cfg.samples_kept());
    Ok(ChainTrace {
        inclusion_freq: counts.iter().map(|&c| c as f64 / kept as f64).collect(),
        samples_kept: kept,
        sequence,
    })
}

fn ridge_all<S: Scalar>(
    gram: &Array2<S>,
    aty: ArrayView1<S>,
    params: &PriorParams<S>,
) -> Result<Array1<S>> {
    let reg = params.lambda * params.sigma_n2 / params.sigma2;
    let mut system = gram.clone();
    for i in 0..system.nrows() {
        system[[i, i]] = system[[i, i]] + reg;
    }
    linalg::spd_solve(system.view(), aty)
}

/// `Aᵀ(y − A x)` restricted to the active coordinates of `x`.
fn residual_corr<S: Scalar>(
    gram: &Array2<S>,
    aty: ArrayView1<S>,
    x: &Array1<S>,
    gamma: &[bool],
) -> Array1<S> {
    residual_corr_into(aty.to_owned(), gram, aty, x, &active_indices(gamma))
}

fn residual_corr_into<S: Scalar>(
    mut out: Array1<S>,
    gram: &Array2<S>,
    aty: ArrayView1<S>,
    x: &Array1<S>,
    active: &[usize],
) -> Array1<S> {
    out.assign(&aty);
    for &j in active {
        let xj = x[j];
        if xj != S::zero() {
            for (c, &g) in out.iter_mut().zip(gram.column(j)) {
                *c = *c - g * xj;
            }
        }
    }
    out
}

/// `γ*_i = 1` iff the inclusion frequency strictly exceeds `threshold`.
pub fn select_support(trace: &ChainTrace, threshold: f64) -> Vec<bool> {
    trace
        .inclusion_freq
        .iter()
        .map(|&f| f > threshold)
        .collect()
}
