//! On-disk formats.
//!
//! | file | columns |
//! |---|---|
//! | `dictionary.csv` | `c0..c{n-1}`, one row per feature (m rows) |
//! | `dictionary_classes.txt` | class id of each column, one per line |
//! | `dictionary_names.txt` | class name of id 1, 2, … one per line |
//! | `train.csv`, `test.csv` | `c0..`, one column per vector |
//! | `*_manifest.csv` | `path,class_name,view_tag`; `file.csv#j` is column `j` |
//! | `classify.csv` | `sample_id,true_class,predicted,cost_1..cost_C,wall_ms` |
//! | `cells.csv` | `method,tpc,views,trials,correct,accuracy` |
//! | `accuracy_views_tpc{N}.csv` | `method,T=…` |
//! | `accuracy_tpc_T{t}.csv` | `method,TPC=…` |
//! | `confusion_{method}_tpc{N}_T{t}.csv` | `true_class,pred_1..pred_C` |
//! | `timing.csv` (with `timing`) | `method,tpc,views,runtime_ms` |
//! | `trace.csv` | `iteration,atom_index,gamma_value` |
//! | `inclusion.csv` | `atom_index,class,inclusion_freq,selected` |
//!
//! Floats use Rust's shortest round-trip formatting.

use std::fs;
use std::path::{Path, PathBuf};

use michs::data::{read_matrix_csv, write_matrix_csv};
use michs::model::{ClassId, Dictionary};

use crate::error::{CliError, Result};

pub fn float(v: f64) -> String {
    format!("{v:?}")
}

/// A CSV table held in memory until it is written in one go.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(header: I) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
        Ok(())
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// `dir/dictionary.csv` → `dir/dictionary_<suffix>.txt`.
pub fn sidecar(dict_csv: &Path, suffix: &str) -> PathBuf {
    let stem = dict_csv
        .file_stem()
        .map_or_else(|| "dictionary".into(), |s| s.to_string_lossy().into_owned());
    dict_csv.with_file_name(format!("{stem}_{suffix}.txt"))
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

pub fn write_dictionary(path: &Path, dict: &Dictionary<f64>, class_names: &[String]) -> Result<()> {
    write_matrix_csv(path, &dict.atoms().to_owned())?;
    write_lines(
        &sidecar(path, "classes"),
        dict.class_of().iter().map(|c| c.0.to_string()),
    )?;
    write_lines(&sidecar(path, "names"), class_names.iter().cloned())
}

/// Reads a dictionary and its class names.
pub fn read_dictionary(path: &Path) -> Result<(Dictionary<f64>, Vec<String>)> {
    let atoms = read_matrix_csv(path)?;
    let classes = read_lines(&sidecar(path, "classes"))?
        .iter()
        .map(|l| {
            l.parse::<usize>()
                .map(ClassId)
                .map_err(|e| CliError::Core(michs::Error::Parse(format!("class id `{l}`: {e}"))))
        })
        .collect::<Result<Vec<_>>>()?;
    let names = read_lines(&sidecar(path, "names"))?;
    let dict = Dictionary::from_parts(atoms, classes)?;
    if names.len() != dict.num_classes() {
        return Err(CliError::Core(michs::Error::Parse(format!(
            "{} class names for {} classes",
            names.len(),
            dict.num_classes()
        ))));
    }
    Ok((dict, names))
}

/// Zero-padded labels that sort in numeric order.
pub fn labels(prefix: &str, first: usize, count: usize) -> Vec<String> {
    let width = (first + count).saturating_sub(1).to_string().len().max(2);
    (first..first + count).map(|i| format!("{prefix}{i:0width$}")).collect()
}
