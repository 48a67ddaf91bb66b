//! Deterministic MAP pieces: the reduced ridge solve on the selected atoms,
//! the per-task objective and the per-class assembly of `(X*, Γ*, L_r)`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::linalg;
use crate::model::{
    check_spike, rho_row, CodeMatrix, Dictionary, InclusionMatrix, ObservationMatrix,
    PriorParams, SupportMatrix,
};
use crate::sampler::{run_chain_cached, select_support, ChainConfig, GramCache};
use crate::{Error, Result, Scalar};

/// MAP estimate for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSolution<S> {
    pub code: Array1<S>,
    pub support: Vec<bool>,
    pub task_objective: S,
    /// `‖y − A x*‖²`.
    pub residual_sq: S,
}

/// MAP estimate for all tasks under one class prior.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSolution<S> {
    pub codes: CodeMatrix<S>,
    pub supports: SupportMatrix,
    pub tasks: Vec<TaskSolution<S>>,
    /// `L_r`, the task objectives summed in ascending task order.
    pub objective: S,
}

impl<S: Scalar> ClassSolution<S> {
    pub fn residual_sq(&self) -> S {
        self.tasks
            .iter()
            .fold(S::zero(), |acc, t| acc + t.residual_sq)
    }
}

fn check_lengths<S: Scalar>(dict: &Dictionary<S>, y: ArrayView1<S>, n: usize) -> Result<()> {
    if y.len() != dict.m() {
        return Err(Error::Shape(format!(
            "observation length {} vs dictionary dimension {}",
            y.len(),
            dict.m()
        )));
    }
    if n != dict.n() {
        return Err(Error::Shape(format!("length {} vs {} atoms", n, dict.n())));
    }
    Ok(())
}

/// Solves `((σ²/σ_n²) A_γᵀA_γ + λI) x_γ = (σ²/σ_n²) A_γᵀy` and scatters the
/// result back into a length-`n` vector; inactive entries are exactly zero.
pub fn ridge_on_support<S: Scalar>(
    dict: &Dictionary<S>,
    y: ArrayView1<S>,
    gamma: &[bool],
    params: &PriorParams<S>,
) -> Result<Array1<S>> {
    check_lengths(dict, y, gamma.len())?;
    params.validate()?;
    let active: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i]).collect();
    let a_s = dict.atoms().select(ndarray::Axis(1), &active);
    let gram_s = a_s.t().dot(&a_s);
    let aty_s = a_s.t().dot(&y);
    scatter_ridge(gram_s, aty_s, &active, gamma.len(), params)
}

fn ridge_cached<S: Scalar>(
    gram: &Array2<S>,
    aty: ArrayView1<S>,
    gamma: &[bool],
    params: &PriorParams<S>,
) -> Result<Array1<S>> {
    let active: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i]).collect();
    let k = active.len();
    let mut gram_s = Array2::<S>::zeros((k, k));
    let mut aty_s = Array1::<S>::zeros(k);
    for (a, &i) in active.iter().enumerate() {
        aty_s[a] = aty[i];
        for (b, &j) in active.iter().enumerate() {
            gram_s[[a, b]] = gram[[i, j]];
        }
    }
    scatter_ridge(gram_s, aty_s, &active, gamma.len(), params)
}

fn scatter_ridge<S: Scalar>(
    gram_s: Array2<S>,
    aty_s: Array1<S>,
    active: &[usize],
    n: usize,
    params: &PriorParams<S>,
) -> Result<Array1<S>> {
    let mut x = Array1::<S>::zeros(n);
    if active.is_empty() {
        return Ok(x);
    }
    let w = params.data_weight();
    let mut system = gram_s * w;
    for a in 0..active.len() {
        system[[a, a]] = system[[a, a]] + params.lambda;
    }
    let rhs = aty_s * w;
    let sol = linalg::spd_solve(system.view(), rhs.view())?;
    for (a, &i) in active.iter().enumerate() {
        x[i] = sol[a];
    }
    Ok(x)
}

/// `(σ²/σ_n²)‖y − Ax‖² + λ‖x‖² + Σ_i γ_i ρ_i`.
pub fn task_objective<S: Scalar>(
    dict: &Dictionary<S>,
    y: ArrayView1<S>,
    x: ArrayView1<S>,
    gamma: &[bool],
    rho: ArrayView1<S>,
    params: &PriorParams<S>,
) -> Result<S> {
    check_lengths(dict, y, x.len())?;
    if rho.len() != gamma.len() {
        return Err(Error::Shape(format!(
            "rho length {} vs support length {}",
            rho.len(),
            gamma.len()
        )));
    }
    check_spike(x, gamma)?;
    let residual = &y - &dict.atoms().dot(&x);
    Ok(objective_terms(residual.dot(&residual), x, gamma, rho, params))
}

fn objective_terms<S: Scalar>(
    residual_sq: S,
    x: ArrayView1<S>,
    gamma: &[bool],
    rho: ArrayView1<S>,
    params: &PriorParams<S>,
) -> S {
    let penalty = gamma
        .iter()
        .zip(rho)
        .filter(|(&g, _)| g)
        .fold(S::zero(), |acc, (_, &r)| acc + r);
    params.data_weight() * residual_sq + params.lambda * x.dot(&x) + penalty
}

/// Full pipeline for one task: chain, support selection, reduced ridge and
/// objective.
pub fn solve_task<S: Scalar>(
    dict: &Dictionary<S>,
    y: ArrayView1<S>,
    kappa_row: ArrayView1<S>,
    params: &PriorParams<S>,
    cfg: &ChainConfig,
) -> Result<TaskSolution<S>> {
    let cache = GramCache::new(dict);
    let rho = rho_row(params, kappa_row)?;
    solve_task_cached(dict, &cache, y, kappa_row, rho.view(), params, cfg)
}

pub(crate) fn solve_task_cached<S: Scalar>(
    dict: &Dictionary<S>,
    cache: &GramCache<S>,
    y: ArrayView1<S>,
    kappa_row: ArrayView1<S>,
    rho: ArrayView1<S>,
    params: &PriorParams<S>,
    cfg: &ChainConfig,
) -> Result<TaskSolution<S>> {
    let trace = run_chain_cached(dict, cache, y, kappa_row, params, cfg, |_, _, _| {})?;
    let support = select_support(&trace, cfg.inclusion_threshold);
    let aty = dict.atoms().t().dot(&y);
    let code = ridge_cached(cache.gram(), aty.view(), &support, params)?;
    let residual = &y - &dict.atoms().dot(&code);
    let residual_sq = residual.dot(&residual);
    let task_objective = objective_terms(residual_sq, code.view(), &support, rho, params);
    Ok(TaskSolution {
        code,
        support,
        task_objective,
        residual_sq,
    })
}

/// Solves every task independently, seeding task `t`'s chain with a seed
/// derived from `cfg.seed` and `t`.
pub fn solve_class<S: Scalar>(
    dict: &Dictionary<S>,
    obs: &ObservationMatrix<S>,
    kappa: &InclusionMatrix<S>,
    params: &PriorParams<S>,
    cfg: &ChainConfig,
) -> Result<ClassSolution<S>> {
    let seeds: Vec<u64> = (0..obs.tasks())
        .map(|t| crate::rng::derive_seed(cfg.seed, &[crate::rng::domain::CHAIN, t as u64]))
        .collect();
    let cache = GramCache::new(dict);
    solve_class_seeded(dict, &cache, obs, kappa, params, cfg, &seeds)
}

/// [`solve_class`] with explicit per-task chain seeds.
pub fn solve_class_seeded<S: Scalar>(
    dict: &Dictionary<S>,
    cache: &GramCache<S>,
    obs: &ObservationMatrix<S>,
    kappa: &InclusionMatrix<S>,
    params: &PriorParams<S>,
    cfg: &ChainConfig,
    task_seeds: &[u64],
) -> Result<ClassSolution<S>> {
    obs.check_against(dict)?;
    let tasks = obs.tasks();
    if kappa.tasks() != tasks || kappa.atoms() != dict.n() {
        return Err(Error::Shape(format!(
            "inclusion matrix is {}x{}, expected {}x{}",
            kappa.tasks(),
            kappa.atoms(),
            tasks,
            dict.n()
        )));
    }
    if task_seeds.len() != tasks {
        return Err(Error::Shape(format!(
            "{} seeds for {} tasks",
            task_seeds.len(),
            tasks
        )));
    }

    let n = dict.n();
    let mut solutions = Vec::with_capacity(tasks);
    for t in 0..tasks {
        let row = kappa.row(t);
        let rho = rho_row(params, row)?;
        let task_cfg = cfg.with_seed(task_seeds[t]);
        solutions.push(solve_task_cached(
            dict,
            cache,
            obs.column(t),
            row,
            rho.view(),
            params,
            &task_cfg,
        )?);
    }

    let mut codes = Array2::<S>::zeros((n, tasks));
    let mut flags = Array2::from_elem((n, tasks), false);
    let mut objective = S::zero();
    for (t, sol) in solutions.iter().enumerate() {
        codes.column_mut(t).assign(&sol.code);
        for (i, &g) in sol.support.iter().enumerate() {
            flags[[i, t]] = g;
        }
        objective = objective + sol.task_objective;
    }
    Ok(ClassSolution {
        codes: CodeMatrix { values: codes },
        supports: SupportMatrix { flags },
        tasks: solutions,
        objective,
    })
}
