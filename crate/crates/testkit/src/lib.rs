//! Reference oracles for the michs test suites.
//!
//! Everything here is written against nalgebra with dense, direct formulas
//! (full covariance matrices, LU solves, brute-force enumeration) so it shares
//! no code path with the implementation under test.

use nalgebra::{DMatrix, DVector};

/// Hyperparameters in plain form.
#[derive(Copy, Clone, Debug)]
pub struct Hyper {
    pub sigma2: f64,
    pub sigma_n2: f64,
    pub lambda: f64,
}

impl Hyper {
    pub fn slab_variance(&self) -> f64 {
        self.sigma2 / self.lambda
    }
}

pub fn support_from_mask(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

pub fn mask_from_support(support: &[bool]) -> usize {
    support
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &g)| acc | (usize::from(g) << i))
}

fn columns(a: &DMatrix<f64>, support: &[bool]) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..a.ncols()).filter(|&i| support[i]).collect();
    a.select_columns(&idx)
}

/// `log N(v; 0, cov)` by full Cholesky.
pub fn log_gaussian_density(v: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = cov.clone().cholesky().expect("covariance is positive definite");
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad = v.dot(&chol.solve(v));
    -0.5 * (v.len() as f64 * std::f64::consts::TAU.ln() + log_det + quad)
}

/// `log p(y | γ)` with the coefficients integrated out:
/// `y ~ N(0, σ_n² I + τ² A_γ A_γᵀ)`.
pub fn log_marginal_likelihood(a: &DMatrix<f64>, y: &DVector<f64>, support: &[bool], h: Hyper) -> f64 {
    let m = a.nrows();
    let a_s = columns(a, support);
    let cov = DMatrix::identity(m, m) * h.sigma_n2 + &a_s * a_s.transpose() * h.slab_variance();
    log_gaussian_density(y, &cov)
}

fn log_prior(support: &[bool], kappa: &[f64]) -> f64 {
    support
        .iter()
        .zip(kappa)
        .map(|(&g, &k)| if g { k.ln() } else { (1.0 - k).ln() })
        .sum()
}

/// Exact `f(γ | y)` over all `2ⁿ` supports, indexed by bit mask.
pub fn exact_support_posterior(a: &DMatrix<f64>, y: &DVector<f64>, kappa: &[f64], h: Hyper) -> Vec<f64> {
    let n = a.ncols();
    assert!(n <= 16, "enumeration limited to small dictionaries");
    let logs: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            let s = support_from_mask(mask, n);
            log_marginal_likelihood(a, y, &s, h) + log_prior(&s, kappa)
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Marginal inclusion probabilities from an enumerated posterior.
pub fn inclusion_probabilities(posterior: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            posterior
                .iter()
                .enumerate()
                .filter(|(mask, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `p(γ_i=1 | r) / p(γ_i=0 | r)` for `r = a x_i + noise`: the ratio of the
/// two Gaussian densities of `r`, computed with full `m × m` covariances.
pub fn collapsed_odds_dense(a: &DVector<f64>, r: &DVector<f64>, kappa: f64, h: Hyper) -> f64 {
    let m = a.len();
    let base = DMatrix::identity(m, m) * h.sigma_n2;
    let with = &base + a * a.transpose() * h.slab_variance();
    kappa / (1.0 - kappa) * (log_gaussian_density(r, &with) - log_gaussian_density(r, &base)).exp()
}

/// Same ratio by 1-D numerical integration over `x_i` of
/// `N(r; a x, σ_n² I) N(x; 0, τ²) / N(r; 0, σ_n² I)`.
pub fn collapsed_odds_quadrature(a: &DVector<f64>, r: &DVector<f64>, kappa: f64, h: Hyper) -> f64 {
    let tau2 = h.slab_variance();
    let s = h.sigma_n2;
    // log of the integrand relative to N(r; 0, σ_n² I)
    let aa = a.dot(a);
    let ar = a.dot(r);
    let f = |x: f64| {
        let log_lik_ratio = (2.0 * x * ar - x * x * aa) / (2.0 * s);
        let log_prior = -0.5 * x * x / tau2 - 0.5 * (std::f64::consts::TAU * tau2).ln();
        log_lik_ratio + log_prior
    };
    // integrand is Gaussian in x: centre the grid on its mode
    let prec = aa / s + 1.0 / tau2;
    let mode = ar / s / prec;
    let sd = prec.recip().sqrt();
    let peak = f(mode);
    let steps = 20_000;
    let lo = mode - 14.0 * sd;
    let hi = mode + 14.0 * sd;
    let dx = (hi - lo) / steps as f64;
    // composite Simpson
    let mut acc = 0.0;
    for k in 0..=steps {
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (f(lo + k as f64 * dx) - peak).exp();
    }
    let integral_scaled = acc * dx / 3.0;
    kappa / (1.0 - kappa) * integral_scaled * peak.exp()
}

/// Dense LU solve of `((σ²/σ_n²) A_γᵀA_γ + λI) x_γ = (σ²/σ_n²) A_γᵀy`,
/// scattered back to length `n`.
pub fn dense_ridge(a: &DMatrix<f64>, y: &DVector<f64>, support: &[bool], h: Hyper) -> DVector<f64> {
    let n = a.ncols();
    let idx: Vec<usize> = (0..n).filter(|&i| support[i]).collect();
    let mut x = DVector::zeros(n);
    if idx.is_empty() {
        return x;
    }
    let a_s = a.select_columns(&idx);
    let w = h.sigma2 / h.sigma_n2;
    let k = idx.len();
    let system = a_s.transpose() * &a_s * w + DMatrix::identity(k, k) * h.lambda;
    let rhs = a_s.transpose() * y * w;
    let sol = system.lu().solve(&rhs).expect("ridge system is nonsingular");
    for (p, &i) in idx.iter().enumerate() {
        x[i] = sol[p];
    }
    x
}

/// Per-task objective written out term by term.
pub fn task_objective(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    support: &[bool],
    rho: &[f64],
    h: Hyper,
) -> f64 {
    let mut data = 0.0;
    for r in 0..a.nrows() {
        let mut fit = 0.0;
        for c in 0..a.ncols() {
            fit += a[(r, c)] * x[c];
        }
        data += (y[r] - fit).powi(2);
    }
    let ridge: f64 = x.iter().map(|v| v * v).sum();
    let penalty: f64 = support
        .iter()
        .zip(rho)
        .filter(|(g, _)| **g)
        .map(|(_, r)| r)
        .sum();
    h.sigma2 / h.sigma_n2 * data + h.lambda * ridge + penalty
}

/// Matrix form `(σ²/σ_n²)‖Y − AX‖_F² + λ‖X‖_F² + Σ_{t,i} Γ_{it} ρ_{it}`.
pub fn matrix_objective(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    support: &[Vec<bool>],
    rho: &DMatrix<f64>,
    h: Hyper,
) -> f64 {
    let resid = y - a * x;
    let mut penalty = 0.0;
    for (t, col) in support.iter().enumerate() {
        for (i, &g) in col.iter().enumerate() {
            if g {
                penalty += rho[(i, t)];
            }
        }
    }
    h.sigma2 / h.sigma_n2 * resid.norm_squared() + h.lambda * x.norm_squared() + penalty
}

/// `σ² log(2πσ²(1−κ)²/(λκ²))`.
pub fn rho(kappa: f64, h: Hyper) -> f64 {
    h.sigma2 * (std::f64::consts::TAU * h.sigma2 * (1.0 - kappa).powi(2) / (h.lambda * kappa * kappa)).ln()
}

/// Global optimum of the per-task objective over all supports, each
/// scored at its ridge solution.
pub fn exhaustive_map(a: &DMatrix<f64>, y: &DVector<f64>, rho: &[f64], h: Hyper) -> (f64, Vec<bool>) {
    let n = a.ncols();
    assert!(n <= 16, "enumeration limited to small dictionaries");
    let mut best = (f64::INFINITY, vec![false; n]);
    for mask in 0..1usize << n {
        let s = support_from_mask(mask, n);
        let x = dense_ridge(a, y, &s, h);
        let obj = task_objective(a, y, &x, &s, rho, h);
        if obj < best.0 {
            best = (obj, s);
        }
    }
    best
}
