//! Subcommand implementations. Each validates its config first, computes
//! everything in memory, and only then writes its files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use michs::classifier::{evaluate, sample_seed, Classifier};
use michs::data::{
    generate_synthetic, load_manifest_vectors, read_manifest, sample_test_matrices, write_manifest,
    write_matrix_csv, LabeledVector, ManifestEntry,
};
use michs::model::{ClassId, Dictionary, InclusionMatrix, ObservationMatrix};
use michs::rng::chain_seed;
use michs::sampler::{run_chain, select_support};
use michs::Method;
use ndarray::Array2;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, float, Table};

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::io("<stdout>", e))?
    };
}

fn columns_matrix(vectors: &[LabeledVector], m: usize) -> Array2<f64> {
    let mut mat = Array2::zeros((m, vectors.len()));
    for (j, v) in vectors.iter().enumerate() {
        mat.column_mut(j).assign(&ndarray::ArrayView1::from(&v.features));
    }
    mat
}

fn manifest_for(
    vectors: &[LabeledVector],
    matrix_file: &str,
    class_names: &[String],
    view_tags: &[String],
) -> Vec<ManifestEntry> {
    vectors
        .iter()
        .enumerate()
        .map(|(j, v)| ManifestEntry {
            path: format!("{matrix_file}#{j}"),
            class_name: class_names[v.class.index()].clone(),
            view_tag: view_tags[v.view].clone(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSummary {
    pub train_vectors: usize,
    pub test_vectors: usize,
    pub files: Vec<PathBuf>,
}

/// Writes `train.csv`, `test.csv` and their manifests.
pub fn synth(cfg: &RunConfig, out: &mut dyn Write) -> Result<SynthSummary> {
    cfg.validate(Command::Synth)?;
    let spec = cfg.synthetic(cfg.tpc);
    let data = generate_synthetic(&spec)?;
    let names = formats::labels("s", 1, cfg.classes);
    let tags = formats::labels("v", 0, cfg.num_views);

    formats::create_dir(&cfg.out)?;
    let mut files = Vec::new();
    for (split, vectors) in [("train", &data.train), ("test", &data.test)] {
        let matrix = cfg.out.join(format!("{split}.csv"));
        write_matrix_csv(&matrix, &columns_matrix(vectors, cfg.dim))?;
        let manifest = cfg.out.join(format!("{split}_manifest.csv"));
        write_manifest(
            &manifest,
            &manifest_for(vectors, &format!("{split}.csv"), &names, &tags),
        )?;
        files.push(matrix);
        files.push(manifest);
    }
    say!(
        out,
        "synth: {} training and {} test vectors ({} classes, dim {}) in {}",
        data.train.len(),
        data.test.len(),
        cfg.classes,
        cfg.dim,
        cfg.out.display()
    );
    Ok(SynthSummary {
        train_vectors: data.train.len(),
        test_vectors: data.test.len(),
        files,
    })
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn load_vectors(
    cfg: &RunConfig,
    manifest: &Path,
    class_names: Option<&[String]>,
) -> Result<michs::data::ManifestData> {
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(CliError::Core(michs::Error::Parse(format!(
            "{}: manifest lists no vectors",
            manifest.display()
        ))));
    }
    Ok(load_manifest_vectors(
        &entries,
        base_dir(manifest),
        class_names,
        (cfg.image_height, cfg.image_width),
    )?)
}

/// Builds a dictionary from the training manifest and writes it to
/// `<out>/dictionary.csv` plus sidecars.
pub fn build_dict(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf> {
    cfg.validate(Command::BuildDict)?;
    let manifest = cfg.manifest.as_deref().expect("validated");
    let data = load_vectors(cfg, manifest, None)?;
    let images: Vec<(&[f64], ClassId)> = data
        .vectors
        .iter()
        .map(|v| (v.features.as_slice(), v.class))
        .collect();
    let dict = Dictionary::build(&images)?;

    formats::create_dir(&cfg.out)?;
    let path = cfg.out.join("dictionary.csv");
    formats::write_dictionary(&path, &dict, &data.class_names)?;
    say!(
        out,
        "build-dict: {} atoms of dimension {} over {} classes -> {}",
        dict.n(),
        dict.m(),
        dict.num_classes(),
        path.display()
    );
    Ok(path)
}

fn check_dims(dict: &Dictionary<f64>, vectors: &[LabeledVector], manifest: &Path) -> Result<()> {
    match vectors.iter().position(|v| v.features.len() != dict.m()) {
        None => Ok(()),
        Some(i) => Err(CliError::Core(michs::Error::Parse(format!(
            "{}: entry {i} has dimension {} but the dictionary has {}",
            manifest.display(),
            vectors[i].features.len(),
            dict.m()
        )))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyReport {
    pub table: Table,
    pub accuracy: f64,
    pub path: PathBuf,
}

/// Draws `trials` test matrices of `views` columns from the test manifest
/// and classifies each; writes `<out>/classify.csv`.
pub fn classify(cfg: &RunConfig, out: &mut dyn Write) -> Result<ClassifyReport> {
    cfg.validate(Command::Classify)?;
    let (dict, names) = formats::read_dictionary(cfg.dict.as_deref().expect("validated"))?;
    let manifest = cfg.manifest.as_deref().expect("validated");
    let pool = load_vectors(cfg, manifest, Some(&names))?;
    check_dims(&dict, &pool.vectors, manifest)?;
    let tests = sample_test_matrices(&pool.vectors, &cfg.experiment(cfg.views))?;

    let classifier = Classifier::new(&dict, cfg.method_config(cfg.method, cfg.chain()))?;
    let results = tests
        .par_iter()
        .enumerate()
        .map(|(i, (obs, _))| {
            let start = Instant::now();
            let res = classifier.classify(obs, sample_seed(cfg.seed, i))?;
            Ok((res, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<michs::Result<Vec<_>>>()?;

    let c = dict.num_classes();
    let mut header = vec!["sample_id".to_string(), "true_class".into(), "predicted".into()];
    header.extend((1..=c).map(|k| format!("cost_{k}")));
    header.push("wall_ms".into());
    let mut table = Table::new(header);
    let mut correct = 0;
    for (i, ((res, ms), (_, truth))) in results.iter().zip(&tests).enumerate() {
        let mut row = vec![i.to_string(), truth.0.to_string(), res.predicted.0.to_string()];
        row.extend(res.per_class_cost.iter().map(|&v| float(v)));
        row.push(float(if cfg.timing { *ms } else { 0.0 }));
        table.push(row);
        correct += usize::from(res.predicted == *truth);
        say!(
            out,
            "sample {i}: true {} predicted {} min cost {}",
            names[truth.index()],
            names[res.predicted.index()],
            res.per_class_cost[res.predicted.index()]
        );
    }
    let accuracy = correct as f64 / tests.len() as f64;
    say!(
        out,
        "classify: {} {correct}/{} correct ({:.1}%)",
        cfg.method.name(),
        tests.len(),
        100.0 * accuracy
    );

    formats::create_dir(&cfg.out)?;
    let path = cfg.out.join("classify.csv");
    table.write(&path)?;
    Ok(ClassifyReport {
        table,
        accuracy,
        path,
    })
}

/// One (method, TPC, T) benchmark cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub tpc: usize,
    pub views: usize,
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub runtime_ms: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub cells: Vec<Cell>,
    pub runtime_ms: f64,
}

impl BenchmarkReport {
    pub fn accuracy(&self, method: Method, tpc: usize, views: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.tpc == tpc && c.views == views)
            .map(|c| c.accuracy)
    }
}

/// Runs the configured (method × TPC × T) grid on synthetic data.
pub fn run_benchmark(cfg: &RunConfig, out: &mut dyn Write) -> Result<BenchmarkReport> {
    cfg.validate(Command::Benchmark)?;
    let start = Instant::now();
    let mut cells = Vec::new();
    for &tpc in &cfg.bench_tpcs {
        let data = generate_synthetic(&cfg.synthetic(tpc))?;
        let images: Vec<(&[f64], ClassId)> = data
            .train
            .iter()
            .map(|v| (v.features.as_slice(), v.class))
            .collect();
        let dict = Dictionary::build(&images)?;
        for &views in &cfg.bench_views {
            let tests = sample_test_matrices(&data.test, &cfg.experiment(views))?;
            for &method in &cfg.bench_methods {
                let t0 = Instant::now();
                let metrics = evaluate(
                    &dict,
                    &tests,
                    &cfg.method_config(method, cfg.bench_chain()),
                    cfg.seed,
                )?;
                let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
                let correct = (0..dict.num_classes()).map(|k| metrics.confusion[k][k]).sum();
                say!(
                    out,
                    "benchmark: {:<6} tpc={tpc} T={views} accuracy {:.3} ({correct}/{}) in {:.1}s",
                    method.name(),
                    metrics.accuracy,
                    tests.len(),
                    runtime_ms / 1e3
                );
                cells.push(Cell {
                    method,
                    tpc,
                    views,
                    trials: tests.len(),
                    correct,
                    accuracy: metrics.accuracy,
                    runtime_ms,
                    confusion: metrics.confusion,
                });
            }
        }
    }
    Ok(BenchmarkReport {
        cells,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Every table the benchmark writes, keyed by file name, in write order.
pub fn benchmark_tables(cfg: &RunConfig, report: &BenchmarkReport) -> Vec<(String, Table)> {
    let mut tables = Vec::new();

    let mut cells = Table::new(["method", "tpc", "views", "trials", "correct", "accuracy"]);
    for c in &report.cells {
        cells.push(vec![
            c.method.name().into(),
            c.tpc.to_string(),
            c.views.to_string(),
            c.trials.to_string(),
            c.correct.to_string(),
            float(c.accuracy),
        ]);
    }
    tables.push(("cells.csv".to_string(), cells));

    let cell_acc = |m, tpc, t| report.accuracy(m, tpc, t).map_or(String::new(), float);
    for &tpc in &cfg.bench_tpcs {
        let mut header = vec!["method".to_string()];
        header.extend(cfg.bench_views.iter().map(|t| format!("T={t}")));
        let mut table = Table::new(header);
        for &m in &cfg.bench_methods {
            let mut row = vec![m.name().to_string()];
            row.extend(cfg.bench_views.iter().map(|&t| cell_acc(m, tpc, t)));
            table.push(row);
        }
        tables.push((format!("accuracy_views_tpc{tpc}.csv"), table));
    }
    for &t in &cfg.bench_views {
        let mut header = vec!["method".to_string()];
        header.extend(cfg.bench_tpcs.iter().map(|tpc| format!("TPC={tpc}")));
        let mut table = Table::new(header);
        for &m in &cfg.bench_methods {
            let mut row = vec![m.name().to_string()];
            row.extend(cfg.bench_tpcs.iter().map(|&tpc| cell_acc(m, tpc, t)));
            table.push(row);
        }
        tables.push((format!("accuracy_tpc_T{t}.csv"), table));
    }

    for c in &report.cells {
        let k = c.confusion.len();
        let mut header = vec!["true_class".to_string()];
        header.extend((1..=k).map(|p| format!("pred_{p}")));
        let mut table = Table::new(header);
        for (truth, row) in c.confusion.iter().enumerate() {
            let mut r = vec![(truth + 1).to_string()];
            r.extend(row.iter().map(usize::to_string));
            table.push(r);
        }
        tables.push((
            format!("confusion_{}_tpc{}_T{}.csv", c.method.name(), c.tpc, c.views),
            table,
        ));
    }

    if cfg.timing {
        let mut timing = Table::new(["method", "tpc", "views", "runtime_ms"]);
        for c in &report.cells {
            timing.push(vec![
                c.method.name().into(),
                c.tpc.to_string(),
                c.views.to_string(),
                float(c.runtime_ms),
            ]);
        }
        tables.push(("timing.csv".to_string(), timing));
    }
    tables
}

/// Runs the benchmark grid and writes its tables under `<out>`.
pub fn benchmark(cfg: &RunConfig, out: &mut dyn Write) -> Result<BenchmarkReport> {
    let report = run_benchmark(cfg, out)?;
    formats::create_dir(&cfg.out)?;
    for (name, table) in benchmark_tables(cfg, &report) {
        table.write(&cfg.out.join(name))?;
    }
    say!(
        out,
        "benchmark: {} cells in {:.1}s -> {}",
        report.cells.len(),
        report.runtime_ms / 1e3,
        cfg.out.display()
    );
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSummary {
    pub class: ClassId,
    pub samples_kept: usize,
    pub inclusion_freq: Vec<f64>,
    pub selected: Vec<bool>,
}

/// Runs one retained chain for manifest entry `sample` under the prior of
/// `class`; writes `trace.csv` and `inclusion.csv`.
pub fn chain_trace(cfg: &RunConfig, out: &mut dyn Write) -> Result<TraceSummary> {
    cfg.validate(Command::ChainTrace)?;
    let (dict, names) = formats::read_dictionary(cfg.dict.as_deref().expect("validated"))?;
    let manifest = cfg.manifest.as_deref().expect("validated");
    let pool = load_vectors(cfg, manifest, Some(&names))?;
    let entry = pool.vectors.get(cfg.sample).ok_or_else(|| {
        CliError::config(format!(
            "sample {} out of range ({} entries)",
            cfg.sample,
            pool.vectors.len()
        ))
    })?;
    check_dims(&dict, std::slice::from_ref(entry), manifest)?;
    let class = if cfg.class == 0 { entry.class } else { ClassId(cfg.class) };
    if class.0 > dict.num_classes() {
        return Err(CliError::config(format!(
            "class {} out of range (1..={})",
            class.0,
            dict.num_classes()
        )));
    }

    let obs = ObservationMatrix::from_columns(&[entry.features.as_slice()])?.unit_normalized();
    let kappa = InclusionMatrix::for_class(&dict, class, 1, cfg.kappa_in, cfg.kappa_out)?;
    let mut chain = cfg.chain().with_seed(chain_seed(cfg.seed, class.0, 0));
    chain.retain_sequence = true;
    let trace = run_chain(&dict, obs.column(0), kappa.row(0), &cfg.prior(), &chain)?;
    let selected = select_support(&trace, cfg.threshold);

    let mut seq = Table::new(["iteration", "atom_index", "gamma_value"]);
    for (iter, gamma) in trace.sequence.as_deref().unwrap_or_default() {
        for (i, &g) in gamma.iter().enumerate() {
            seq.push(vec![iter.to_string(), i.to_string(), u8::from(g).to_string()]);
        }
    }
    let mut incl = Table::new(["atom_index", "class", "inclusion_freq", "selected"]);
    for (i, (&f, &s)) in trace.inclusion_freq.iter().zip(&selected).enumerate() {
        incl.push(vec![
            i.to_string(),
            dict.class_of()[i].0.to_string(),
            float(f),
            u8::from(s).to_string(),
        ]);
    }

    formats::create_dir(&cfg.out)?;
    seq.write(&cfg.out.join("trace.csv"))?;
    incl.write(&cfg.out.join("inclusion.csv"))?;
    say!(
        out,
        "chain-trace: sample {} under class {}: {} kept samples, {} atoms selected",
        cfg.sample,
        names[class.index()],
        trace.samples_kept,
        selected.iter().filter(|&&s| s).count()
    );
    Ok(TraceSummary {
        class,
        samples_kept: trace.samples_kept,
        inclusion_freq: trace.inclusion_freq,
        selected,
    })
}
