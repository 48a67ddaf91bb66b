//! Class assignment: MICHS (one MAP problem per class, smallest cost wins)
//! and the l1 sparse-representation baseline with majority voting.

use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::linalg;
use crate::model::{ClassId, Dictionary, InclusionMatrix, ObservationMatrix, PriorParams};
use crate::rng::{chain_seed, derive_seed, domain};
use crate::sampler::{ChainConfig, GramCache};
use crate::solver::{solve_class_seeded, ClassSolution};
use crate::{Error, Result, Scalar};

/// Quantity compared across classes.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum AssignBy {
    /// Full MAP objective `L_r`.
    #[default]
    Cost,
    /// Reconstruction residual `Σ_t ‖y_t − A x_t*‖²`.
    Residual,
}

impl FromStr for AssignBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cost" => Ok(AssignBy::Cost),
            "residual" => Ok(AssignBy::Residual),
            other => Err(Error::invalid(
                "assign_by",
                format!("expected `cost` or `residual`, got `{other}`"),
            )),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Michs,
    SrcL1,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Michs => "michs",
            Method::SrcL1 => "src_l1",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "michs" => Ok(Method::Michs),
            "src_l1" => Ok(Method::SrcL1),
            other => Err(Error::invalid(
                "method",
                format!("expected `michs` or `src_l1`, got `{other}`"),
            )),
        }
    }
}

/// Everything MICHS needs besides the data. `chain.seed` is the master seed.
#[derive(Clone, Debug, PartialEq)]
pub struct MichsConfig<S> {
    pub params: PriorParams<S>,
    pub kappa_in: S,
    pub kappa_out: S,
    pub chain: ChainConfig,
    pub assign_by: AssignBy,
    /// Keep the per-class solutions in the result.
    pub keep_solutions: bool,
}

impl<S: Scalar> Default for MichsConfig<S> {
    fn default() -> Self {
        MichsConfig {
            params: PriorParams::default(),
            kappa_in: S::lit(0.4),
            kappa_out: S::lit(0.01),
            chain: ChainConfig::default(),
            assign_by: AssignBy::Cost,
            keep_solutions: false,
        }
    }
}

impl<S: Scalar> MichsConfig<S> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.chain.validate()?;
        crate::model::check_probability("kappa_in", self.kappa_in)?;
        crate::model::check_probability("kappa_out", self.kappa_out)?;
        if self.kappa_out > self.kappa_in {
            return Err(Error::invalid("kappa_out", "must not exceed kappa_in"));
        }
        Ok(())
    }
}

/// l1 baseline settings. The per-task problem is
/// `min ½‖y − Ax‖² + l1_penalty·‖x‖₁` on unit-norm `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub l1_penalty: f64,
    pub max_iterations: usize,
    /// Stop once no coefficient moves by more than this in one step.
    pub step_tolerance: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            l1_penalty: 0.05,
            max_iterations: 5000,
            step_tolerance: 1e-6,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l1_penalty >= 0.0) || !self.l1_penalty.is_finite() {
            return Err(Error::invalid("l1_penalty", "must be non-negative"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(Error::invalid("step_tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationResult<S> {
    pub predicted: ClassId,
    /// One cost per class; for the baseline this is the class-restricted
    /// residual norm averaged over tasks.
    pub per_class_cost: Vec<S>,
    pub per_class_solutions: Option<Vec<ClassSolution<S>>>,
    /// `false` when some baseline solve stopped at `max_iterations`.
    pub converged: bool,
}

/// Index of the smallest cost, lowest class on ties. NaN never wins.
pub fn argmin_class<S: Scalar>(costs: &[S]) -> ClassId {
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] || (costs[best].is_nan() && !c.is_nan()) {
            best = i;
        }
    }
    ClassId::from_index(best)
}

/// Runs MICHS for every class and assigns `Y` to the class with the
/// smallest cost. Test columns are scaled to unit norm first.
pub fn classify<S: Scalar>(
    dict: &Dictionary<S>,
    obs: &ObservationMatrix<S>,
    cfg: &MichsConfig<S>,
) -> Result<ClassificationResult<S>> {
    let cache = GramCache::new(dict);
    classify_cached(dict, &cache, obs, cfg)
}

pub fn classify_cached<S: Scalar>(
    dict: &Dictionary<S>,
    cache: &GramCache<S>,
    obs: &ObservationMatrix<S>,
    cfg: &MichsConfig<S>,
) -> Result<ClassificationResult<S>> {
    cfg.validate()?;
    obs.check_against(dict)?;
    let obs = obs.unit_normalized();
    let tasks = obs.tasks();
    let master = cfg.chain.seed;

    let solutions = dict
        .classes()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|class| {
            let kappa =
                InclusionMatrix::for_class(dict, class, tasks, cfg.kappa_in, cfg.kappa_out)?;
            let seeds: Vec<u64> = (0..tasks).map(|t| chain_seed(master, class.0, t)).collect();
            solve_class_seeded(dict, cache, &obs, &kappa, &cfg.params, &cfg.chain, &seeds)
        })
        .collect::<Result<Vec<_>>>()?;

    let per_class_cost: Vec<S> = solutions
        .iter()
        .map(|s| match cfg.assign_by {
            AssignBy::Cost => s.objective,
            AssignBy::Residual => s.residual_sq(),
        })
        .collect();
    Ok(ClassificationResult {
        predicted: argmin_class(&per_class_cost),
        per_class_cost,
        per_class_solutions: cfg.keep_solutions.then_some(solutions),
        converged: true,
    })
}

fn soft_threshold<S: Scalar>(v: S, t: S) -> S {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        S::zero()
    }
}

/// Output of the l1 solver.
#[derive(Clone, Debug)]
pub struct IstaResult<S> {
    pub code: Array1<S>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration, when requested.
    pub history: Vec<S>,
}

/// `½‖y − Ax‖² + penalty·‖x‖₁`.
pub fn l1_objective<S: Scalar>(atoms: ArrayView2<S>, y: ArrayView1<S>, x: ArrayView1<S>, penalty: S) -> S {
    let r = &y - &atoms.dot(&x);
    S::lit(0.5) * r.dot(&r) + penalty * x.iter().fold(S::zero(), |acc, v| acc + v.abs())
}

/// Iterative soft-thresholding with step `1/L`, `L = ‖A‖₂²`.
pub fn ista<S: Scalar>(
    atoms: ArrayView2<S>,
    y: ArrayView1<S>,
    penalty: S,
    max_iterations: usize,
    step_tolerance: S,
    record_history: bool,
) -> IstaResult<S> {
    let lipschitz = linalg::spectral_norm_sq(atoms);
    ista_with_step(atoms, y, penalty, lipschitz, max_iterations, step_tolerance, record_history)
}

fn ista_with_step<S: Scalar>(
    atoms: ArrayView2<S>,
    y: ArrayView1<S>,
    penalty: S,
    lipschitz: S,
    max_iterations: usize,
    step_tolerance: S,
    record_history: bool,
) -> IstaResult<S> {
    let n = atoms.ncols();
    let mut x = Array1::<S>::zeros(n);
    let mut history = Vec::new();
    if lipschitz == S::zero() {
        return IstaResult {
            code: x,
            iterations: 0,
            converged: true,
            history,
        };
    }
    let step = S::one() / lipschitz;
    let thresh = penalty * step;
    let aty = atoms.t().dot(&y);
    let gram = atoms.t().dot(&atoms);
    for iter in 1..=max_iterations {
        let grad = &gram.dot(&x) - &aty;
        let mut max_move = S::zero();
        for i in 0..n {
            let next = soft_threshold(x[i] - step * grad[i], thresh);
            max_move = max_move.max((next - x[i]).abs());
            x[i] = next;
        }
        if record_history {
            history.push(l1_objective(atoms, y, x.view(), penalty));
        }
        if max_move <= step_tolerance {
            return IstaResult {
                code: x,
                iterations: iter,
                converged: true,
                history,
            };
        }
    }
    IstaResult {
        code: x,
        iterations: max_iterations,
        converged: false,
        history,
    }
}

/// `‖y − A δ_r(x)‖₂` for every class `r`.
pub fn class_residuals<S: Scalar>(dict: &Dictionary<S>, y: ArrayView1<S>, x: ArrayView1<S>) -> Vec<S> {
    dict.class_ranges()
        .iter()
        .map(|range| {
            let part = dict.atoms().slice(ndarray::s![.., range.clone()]).dot(&x.slice(ndarray::s![range.clone()]));
            let r = &y - &part;
            r.dot(&r).sqrt()
        })
        .collect()
}

/// Most frequent class; ties go to the lowest class id.
pub fn majority_vote(votes: &[ClassId], num_classes: usize) -> ClassId {
    let mut counts = vec![0usize; num_classes];
    for v in votes {
        counts[v.index()] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    ClassId::from_index(best)
}

/// Baseline: per-task l1 coding, class-restricted residual assignment and
/// majority voting across tasks.
pub fn src_l1_classify<S: Scalar>(
    dict: &Dictionary<S>,
    obs: &ObservationMatrix<S>,
    cfg: &BaselineConfig,
) -> Result<ClassificationResult<S>> {
    let lipschitz = linalg::spectral_norm_sq(dict.atoms());
    src_l1_with_step(dict, lipschitz, obs, cfg)
}

fn src_l1_with_step<S: Scalar>(
    dict: &Dictionary<S>,
    lipschitz: S,
    obs: &ObservationMatrix<S>,
    cfg: &BaselineConfig,
) -> Result<ClassificationResult<S>> {
    cfg.validate()?;
    obs.check_against(dict)?;
    let obs = obs.unit_normalized();
    let c = dict.num_classes();
    let mut votes = Vec::with_capacity(obs.tasks());
    let mut summed = vec![S::zero(); c];
    let mut converged = true;
    for t in 0..obs.tasks() {
        let y = obs.column(t);
        let fit = ista_with_step(
            dict.atoms(),
            y,
            S::lit(cfg.l1_penalty),
            lipschitz,
            cfg.max_iterations,
            S::lit(cfg.step_tolerance),
            false,
        );
        if !fit.converged {
            log::warn!(
                "l1 solve for task {t} stopped after {} iterations without converging",
                fit.iterations
            );
            converged = false;
        }
        let residuals = class_residuals(dict, y, fit.code.view());
        votes.push(argmin_class(&residuals));
        for (acc, r) in summed.iter_mut().zip(residuals) {
            *acc = *acc + r;
        }
    }
    let tasks = S::lit(obs.tasks() as f64);
    Ok(ClassificationResult {
        predicted: majority_vote(&votes, c),
        per_class_cost: summed.into_iter().map(|s| s / tasks).collect(),
        per_class_solutions: None,
        converged,
    })
}

/// Method choice plus its settings.
#[derive(Clone, Debug, PartialEq)]
pub enum MethodConfig<S> {
    Michs(MichsConfig<S>),
    SrcL1(BaselineConfig),
}

impl<S: Scalar> MethodConfig<S> {
    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Michs(_) => Method::Michs,
            MethodConfig::SrcL1(_) => Method::SrcL1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodConfig::Michs(c) => c.validate(),
            MethodConfig::SrcL1(c) => c.validate(),
        }
    }
}

/// Per-dictionary precomputation reused across test samples.
pub struct Classifier<'a, S> {
    dict: &'a Dictionary<S>,
    method: MethodConfig<S>,
    gram: Option<GramCache<S>>,
    lipschitz: S,
}

impl<'a, S: Scalar> Classifier<'a, S> {
    pub fn new(dict: &'a Dictionary<S>, method: MethodConfig<S>) -> Result<Self> {
        method.validate()?;
        let (gram, lipschitz) = match &method {
            MethodConfig::Michs(_) => (Some(GramCache::new(dict)), S::zero()),
            MethodConfig::SrcL1(_) => (None, linalg::spectral_norm_sq(dict.atoms())),
        };
        Ok(Classifier {
            dict,
            method,
            gram,
            lipschitz,
        })
    }

    pub fn dictionary(&self) -> &Dictionary<S> {
        self.dict
    }

    /// Classifies one test matrix; `seed` is the master seed for MICHS.
    pub fn classify(&self, obs: &ObservationMatrix<S>, seed: u64) -> Result<ClassificationResult<S>> {
        match &self.method {
            MethodConfig::Michs(cfg) => {
                let cfg = MichsConfig {
                    chain: cfg.chain.with_seed(seed),
                    ..cfg.clone()
                };
                let cache = self.gram.as_ref().expect("gram cache built for MICHS");
                classify_cached(self.dict, cache, obs, &cfg)
            }
            MethodConfig::SrcL1(cfg) => src_l1_with_step(self.dict, self.lipschitz, obs, cfg),
        }
    }
}

/// Seed used for test sample `index` under master seed `master`.
pub fn sample_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[domain::SAMPLE, index as u64])
}

/// Accuracy summary over a labeled test set.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` for classes with no test samples.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub mean_wall_ms: f64,
    pub predictions: Vec<ClassId>,
}

impl Metrics {
    pub fn from_predictions(
        num_classes: usize,
        truth: &[ClassId],
        predicted: &[ClassId],
        wall_ms: &[f64],
    ) -> Self {
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| row[c] as f64 / total as f64)
            })
            .collect();
        let mean_wall_ms = if wall_ms.is_empty() {
            0.0
        } else {
            wall_ms.iter().sum::<f64>() / wall_ms.len() as f64
        };
        Metrics {
            accuracy: correct as f64 / truth.len().max(1) as f64,
            per_class_accuracy,
            confusion,
            mean_wall_ms,
            predictions: predicted.to_vec(),
        }
    }
}

/// Classifies every test matrix (in parallel, deterministic per-sample
/// seeds) and summarizes the predictions.
pub fn evaluate<S: Scalar>(
    dict: &Dictionary<S>,
    test_set: &[(ObservationMatrix<S>, ClassId)],
    method: &MethodConfig<S>,
    master_seed: u64,
) -> Result<Metrics> {
    if test_set.is_empty() {
        return Err(Error::invalid("test_set", "no test samples"));
    }
    let classifier = Classifier::new(dict, method.clone())?;
    let outcomes = test_set
        .par_iter()
        .enumerate()
        .map(|(i, (obs, _))| {
            let start = Instant::now();
            let res = classifier.classify(obs, sample_seed(master_seed, i))?;
            Ok((res.predicted, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<ClassId> = test_set.iter().map(|(_, c)| *c).collect();
    let (predicted, wall): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok(Metrics::from_predictions(
        dict.num_classes(),
        &truth,
        &predicted,
        &wall,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn argmin_ties_and_shifts() {
        assert_eq!(argmin_class(&[2.0, 1.0, 1.0]), ClassId(2));
        assert_eq!(argmin_class(&[1.0, 1.0, 1.0]), ClassId(1));
        assert_eq!(argmin_class(&[5.0]), ClassId(1));
        assert_eq!(argmin_class(&[f64::NAN, 3.0]), ClassId(2));
        let shifted: Vec<f64> = [3.0, -1.0, 2.0].iter().map(|c| c + 1e3).collect();
        assert_eq!(argmin_class(&shifted), ClassId(2));
    }

    #[test]
    fn vote_majority_and_ties() {
        assert_eq!(majority_vote(&[ClassId(2), ClassId(2), ClassId(1)], 3), ClassId(2));
        assert_eq!(majority_vote(&[ClassId(3), ClassId(2)], 3), ClassId(2));
    }

    #[test]
    fn ista_scalar_fixed_point() {
        let a: ndarray::Array2<f64> = array![[1.0], [0.0]];
        let fit = ista(a.view(), array![1.0, 0.0].view(), 0.3, 100, 1e-12, false);
        assert!(fit.converged);
        assert!((fit.code[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn ista_objective_descends() {
        let a: ndarray::Array2<f64> = array![[1.0, 0.5, 0.2], [0.0, 0.8, -0.3], [0.2, 0.1, 0.9]];
        let fit = ista(a.view(), array![0.3, -1.0, 0.6].view(), 0.05, 200, 1e-14, true);
        for w in fit.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn metrics_definitions() {
        let m = Metrics::from_predictions(2, &[ClassId(1), ClassId(2)], &[ClassId(1), ClassId(2)], &[1.0, 3.0]);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.confusion, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(m.mean_wall_ms, 2.0);

        let m = Metrics::from_predictions(3, &[ClassId(3)], &[ClassId(1)], &[0.5]);
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.confusion[2][0], 1);
        assert_eq!(m.per_class_accuracy, vec![None, None, Some(0.0)]);

        let truth = [ClassId(1), ClassId(1), ClassId(2), ClassId(1)];
        let pred = [ClassId(2), ClassId(1), ClassId(2), ClassId(2)];
        let m = Metrics::from_predictions(2, &truth, &pred, &[]);
        let rows: Vec<usize> = m.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, vec![3, 1]);
    }

    #[test]
    fn parse_enums() {
        assert_eq!("residual".parse::<AssignBy>().unwrap(), AssignBy::Residual);
        assert_eq!("src_l1".parse::<Method>().unwrap(), Method::SrcL1);
        assert!("lasso".parse::<Method>().is_err());
    }
}
