//! Run configuration: a `key = value` file merged with command-line
//! overrides. Every key is listed in [`KEYS`]; unknown keys are errors.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use michs::classifier::{MethodConfig, MichsConfig};
use michs::data::{ExperimentSpec, SyntheticSpec};
use michs::model::PriorParams;
use michs::{AssignBy, BaselineConfig, ChainConfig, Method};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Synth,
    BuildDict,
    Classify,
    Benchmark,
    ChainTrace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::BuildDict => "build-dict",
            Command::Classify => "classify",
            Command::Benchmark => "benchmark",
            Command::ChainTrace => "chain-trace",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,

    // prior
    pub sigma2: f64,
    pub sigma_n2: f64,
    pub lambda: f64,
    pub kappa_in: f64,
    pub kappa_out: f64,

    // chain
    pub max_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub threshold: f64,

    // baseline
    pub l1_penalty: f64,
    pub l1_max_iter: usize,
    pub l1_tolerance: f64,

    pub method: Method,
    pub assign_by: AssignBy,

    // test protocol
    /// Views per test matrix (`T`).
    pub views: usize,
    pub trials: usize,
    /// Restricts test views to these indices (sorted view tags).
    pub test_views: Option<Vec<usize>>,

    // synthetic data
    pub classes: usize,
    pub tpc: usize,
    pub dim: usize,
    pub num_views: usize,
    pub test_images_per_view: usize,
    pub train_views: Vec<usize>,
    pub subspace_dim: usize,
    pub noise: f64,
    pub coherence: f64,
    pub view_spread: f64,
    pub jitter: f64,
    pub pose_strength: f64,

    // benchmark grid
    pub bench_methods: Vec<Method>,
    pub bench_views: Vec<usize>,
    pub bench_tpcs: Vec<usize>,
    pub bench_max_iter: usize,
    pub bench_burn_in: usize,

    // io
    pub out: PathBuf,
    pub dict: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub image_width: u32,
    pub image_height: u32,
    /// Record wall-clock times (makes outputs non-reproducible).
    pub timing: bool,

    // chain-trace
    pub sample: usize,
    /// Hypothesized class; 0 means the sample's own class.
    pub class: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SyntheticSpec::default();
        let chain = ChainConfig::default();
        let base = BaselineConfig::default();
        RunConfig {
            seed: 0,
            sigma2: 1.0,
            sigma_n2: 0.01,
            lambda: 1.0,
            kappa_in: 0.4,
            kappa_out: 0.01,
            max_iter: chain.max_iter,
            burn_in: chain.burn_in,
            thin: chain.thin,
            threshold: chain.inclusion_threshold,
            l1_penalty: base.l1_penalty,
            l1_max_iter: base.max_iterations,
            l1_tolerance: base.step_tolerance,
            method: Method::Michs,
            assign_by: AssignBy::Cost,
            views: 1,
            trials: 500,
            test_views: None,
            classes: synth.num_classes,
            tpc: synth.atoms_per_class,
            dim: synth.feature_dim,
            num_views: synth.views,
            test_images_per_view: synth.test_images_per_view,
            train_views: synth.train_views,
            subspace_dim: synth.subspace_dim,
            noise: synth.noise_std,
            coherence: synth.coherence,
            view_spread: synth.view_spread,
            jitter: synth.jitter,
            pose_strength: synth.pose_strength,
            bench_methods: vec![Method::Michs, Method::SrcL1],
            bench_views: vec![1, 3],
            bench_tpcs: vec![3, 5, 7],
            bench_max_iter: 1000,
            bench_burn_in: 100,
            out: PathBuf::from("out"),
            dict: None,
            manifest: None,
            image_width: 32,
            image_height: 32,
            timing: false,
            sample: 0,
            class: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "seed",
    "sigma2",
    "sigma_n2",
    "lambda",
    "kappa_in",
    "kappa_out",
    "max_iter",
    "burn_in",
    "thin",
    "threshold",
    "l1_penalty",
    "l1_max_iter",
    "l1_tolerance",
    "method",
    "assign_by",
    "views",
    "trials",
    "test_views",
    "classes",
    "tpc",
    "dim",
    "num_views",
    "test_images_per_view",
    "train_views",
    "subspace_dim",
    "noise",
    "coherence",
    "view_spread",
    "jitter",
    "pose_strength",
    "bench_methods",
    "bench_views",
    "bench_tpcs",
    "bench_max_iter",
    "bench_burn_in",
    "out",
    "dict",
    "manifest",
    "image_width",
    "image_height",
    "timing",
    "sample",
    "class",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::config(format!("{key} = `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::config(format!("{key} = `{other}`: expected true or false"))),
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "sigma2" => self.sigma2 = parse(key, value)?,
            "sigma_n2" => self.sigma_n2 = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "kappa_in" => self.kappa_in = parse(key, value)?,
            "kappa_out" => self.kappa_out = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "thin" => self.thin = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "l1_penalty" => self.l1_penalty = parse(key, value)?,
            "l1_max_iter" => self.l1_max_iter = parse(key, value)?,
            "l1_tolerance" => self.l1_tolerance = parse(key, value)?,
            "method" => self.method = parse(key, value)?,
            "assign_by" => self.assign_by = parse(key, value)?,
            "views" => self.views = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "test_views" => {
                self.test_views = match value.trim() {
                    "" | "all" => None,
                    v => Some(parse_list(key, v)?),
                }
            }
            "classes" => self.classes = parse(key, value)?,
            "tpc" => self.tpc = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "num_views" => self.num_views = parse(key, value)?,
            "test_images_per_view" => self.test_images_per_view = parse(key, value)?,
            "train_views" => self.train_views = parse_list(key, value)?,
            "subspace_dim" => self.subspace_dim = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "coherence" => self.coherence = parse(key, value)?,
            "view_spread" => self.view_spread = parse(key, value)?,
            "jitter" => self.jitter = parse(key, value)?,
            "pose_strength" => self.pose_strength = parse(key, value)?,
            "bench_methods" => self.bench_methods = parse_list(key, value)?,
            "bench_views" => self.bench_views = parse_list(key, value)?,
            "bench_tpcs" => self.bench_tpcs = parse_list(key, value)?,
            "bench_max_iter" => self.bench_max_iter = parse(key, value)?,
            "bench_burn_in" => self.bench_burn_in = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "dict" => self.dict = Some(PathBuf::from(value.trim())),
            "manifest" => self.manifest = Some(PathBuf::from(value.trim())),
            "image_width" => self.image_width = parse(key, value)?,
            "image_height" => self.image_height = parse(key, value)?,
            "timing" => self.timing = parse_bool(key, value)?,
            "sample" => self.sample = parse(key, value)?,
            "class" => self.class = parse(key, value)?,
            other => return Err(CliError::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text. Blank lines and `#` comments are
    /// ignored; later lines win.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        self.merge_str(&text)
    }

    pub fn prior(&self) -> PriorParams<f64> {
        PriorParams {
            sigma2: self.sigma2,
            sigma_n2: self.sigma_n2,
            lambda: self.lambda,
        }
    }

    pub fn chain(&self) -> ChainConfig {
        ChainConfig {
            max_iter: self.max_iter,
            burn_in: self.burn_in,
            thin: self.thin,
            inclusion_threshold: self.threshold,
            seed: self.seed,
            retain_sequence: false,
        }
    }

    pub fn bench_chain(&self) -> ChainConfig {
        ChainConfig {
            max_iter: self.bench_max_iter,
            burn_in: self.bench_burn_in,
            ..self.chain()
        }
    }

    pub fn baseline(&self) -> BaselineConfig {
        BaselineConfig {
            l1_penalty: self.l1_penalty,
            max_iterations: self.l1_max_iter,
            step_tolerance: self.l1_tolerance,
        }
    }

    pub fn michs(&self, chain: ChainConfig) -> MichsConfig<f64> {
        MichsConfig {
            params: self.prior(),
            kappa_in: self.kappa_in,
            kappa_out: self.kappa_out,
            chain,
            assign_by: self.assign_by,
            keep_solutions: false,
        }
    }

    pub fn method_config(&self, method: Method, chain: ChainConfig) -> MethodConfig<f64> {
        match method {
            Method::Michs => MethodConfig::Michs(self.michs(chain)),
            Method::SrcL1 => MethodConfig::SrcL1(self.baseline()),
        }
    }

    /// Synthetic generator settings; the data seed is derived from `seed`.
    pub fn synthetic(&self, tpc: usize) -> SyntheticSpec {
        SyntheticSpec {
            num_classes: self.classes,
            atoms_per_class: tpc,
            feature_dim: self.dim,
            views: self.num_views,
            test_images_per_view: self.test_images_per_view,
            train_views: self.train_views.clone(),
            subspace_dim: self.subspace_dim,
            noise_std: self.noise,
            coherence: self.coherence,
            view_spread: self.view_spread,
            jitter: self.jitter,
            pose_strength: self.pose_strength,
            seed: michs::rng::derive_seed(self.seed, &[michs::rng::domain::SYNTH]),
        }
    }

    /// Test-matrix sampling for `T = views`; the stream depends only on
    /// the seed and `T`, so every method sees the same test matrices.
    pub fn experiment(&self, views: usize) -> ExperimentSpec {
        ExperimentSpec {
            tasks: views,
            num_trials: self.trials,
            test_views: self.test_views.clone(),
            seed: michs::rng::derive_seed(
                self.seed,
                &[michs::rng::domain::SAMPLE, views as u64],
            ),
        }
    }

    /// Checks everything `command` will use before any output is written.
    pub fn validate(&self, command: Command) -> Result<()> {
        let core = |e: michs::Error| CliError::config(e.to_string());
        match command {
            Command::Synth => {
                self.synthetic(self.tpc).validate().map_err(core)?;
            }
            Command::BuildDict => {
                self.require_file("manifest", self.manifest.as_deref())?;
                self.check_image_size()?;
            }
            Command::Classify => {
                self.require_file("dict", self.dict.as_deref())?;
                self.require_file("manifest", self.manifest.as_deref())?;
                self.check_image_size()?;
                self.method_config(self.method, self.chain())
                    .validate()
                    .map_err(core)?;
                self.check_protocol(self.views)?;
            }
            Command::Benchmark => {
                if self.bench_methods.is_empty() {
                    return Err(CliError::config("bench_methods is empty"));
                }
                if self.bench_views.is_empty() {
                    return Err(CliError::config("bench_views is empty"));
                }
                if self.bench_tpcs.is_empty() {
                    return Err(CliError::config("bench_tpcs is empty"));
                }
                for &m in &self.bench_methods {
                    self.method_config(m, self.bench_chain())
                        .validate()
                        .map_err(core)?;
                }
                for &tpc in &self.bench_tpcs {
                    self.synthetic(tpc).validate().map_err(core)?;
                }
                for &t in &self.bench_views {
                    self.check_protocol(t)?;
                    let available = match &self.test_views {
                        Some(v) => v.len(),
                        None => self.num_views,
                    };
                    if t > available {
                        return Err(CliError::config(format!(
                            "bench_views contains {t} but only {available} test views exist"
                        )));
                    }
                }
            }
            Command::ChainTrace => {
                self.require_file("dict", self.dict.as_deref())?;
                self.require_file("manifest", self.manifest.as_deref())?;
                self.check_image_size()?;
                self.michs(self.chain()).validate().map_err(core)?;
            }
        }
        Ok(())
    }

    fn check_protocol(&self, views: usize) -> Result<()> {
        if views == 0 {
            return Err(CliError::config("views must be at least 1"));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials must be at least 1"));
        }
        if let Some(v) = &self.test_views {
            if v.is_empty() {
                return Err(CliError::config("test_views is empty"));
            }
        }
        Ok(())
    }

    fn check_image_size(&self) -> Result<()> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(CliError::config("image_width and image_height must be positive"));
        }
        Ok(())
    }

    fn require_file(&self, key: &str, path: Option<&Path>) -> Result<()> {
        match path {
            None => Err(CliError::config(format!("`{key}` is required"))),
            Some(p) if !p.is_file() => Err(CliError::config(format!(
                "{key}: {} does not exist",
                p.display()
            ))),
            Some(_) => Ok(()),
        }
    }
}
