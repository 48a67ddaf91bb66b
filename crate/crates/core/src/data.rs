//! Test data: a synthetic multi-view generator, image-directory ingestion,
//! dataset manifests and the random test-matrix protocol (one random
//! subject, `T` distinct random views).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use ndarray::{Array2, Axis};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::linalg::orthonormalize_columns;
use crate::model::{ClassId, ObservationMatrix};
use crate::rng::{domain, stream, Rng};
use crate::{Error, Result};

/// Synthetic multi-view dataset settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    /// Training vectors per class (TPC).
    pub atoms_per_class: usize,
    pub feature_dim: usize,
    /// Views per subject in the test pool.
    pub views: usize,
    /// Test-pool images per (subject, view).
    pub test_images_per_view: usize,
    /// View tags used for training; must be a subset of `0..views`.
    pub train_views: Vec<usize>,
    pub subspace_dim: usize,
    pub noise_std: f64,
    /// Principal cosine shared by every pair of class subspaces.
    pub coherence: f64,
    /// Strength of the view-specific linear distortion.
    pub view_spread: f64,
    /// Per-image latent variation (expression, illumination).
    pub jitter: f64,
    /// Norm of the view-dependent latent offset shared by all subjects.
    pub pose_strength: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_classes: 10,
            atoms_per_class: 5,
            feature_dim: 64,
            views: 7,
            test_images_per_view: 2,
            train_views: vec![0, 2, 4, 6],
            subspace_dim: 5,
            noise_std: 0.25,
            coherence: 0.3,
            view_spread: 0.5,
            jitter: 0.5,
            pose_strength: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_classes", self.num_classes),
            ("atoms_per_class", self.atoms_per_class),
            ("feature_dim", self.feature_dim),
            ("views", self.views),
            ("test_images_per_view", self.test_images_per_view),
            ("subspace_dim", self.subspace_dim),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        if self.subspace_dim > self.feature_dim {
            return Err(Error::invalid(
                "subspace_dim",
                format!(
                    "{} exceeds feature_dim {}",
                    self.subspace_dim, self.feature_dim
                ),
            ));
        }
        if self.train_views.is_empty() {
            return Err(Error::invalid("train_views", "at least one training view"));
        }
        if let Some(&v) = self.train_views.iter().find(|&&v| v >= self.views) {
            return Err(Error::invalid(
                "train_views",
                format!("view {v} outside 0..{}", self.views),
            ));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::invalid("noise_std", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.coherence) {
            return Err(Error::invalid("coherence", "must lie in [0, 1)"));
        }
        if !(self.view_spread >= 0.0) || !(self.jitter >= 0.0) || !(self.pose_strength >= 0.0) {
            return Err(Error::invalid("view_spread", "distortions must be non-negative"));
        }
        Ok(())
    }
}

/// One feature vector with its subject and view.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVector {
    pub features: Vec<f64>,
    pub class: ClassId,
    pub view: usize,
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub train: Vec<LabeledVector>,
    /// `test_images_per_view` vectors per (subject, view), subjects
    /// ascending, then views.
    pub test: Vec<LabeledVector>,
    /// Orthonormal `m × d` basis of every class subspace.
    pub bases: Vec<Array2<f64>>,
}

fn gaussian_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vec(len: usize, scale: f64, rng: &mut Rng) -> ndarray::Array1<f64> {
    (0..len)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn class_bases(spec: &SyntheticSpec, rng: &mut Rng) -> Result<Vec<Array2<f64>>> {
    let (m, d, c) = (spec.feature_dim, spec.subspace_dim, spec.num_classes);
    let shared_blocks = usize::from(spec.coherence > 0.0);
    let own = (1.0 - spec.coherence).sqrt();
    let shared = spec.coherence.sqrt();
    if (c + shared_blocks) * d <= m {
        // Mutually orthogonal blocks: mixing with a common block gives
        // orthonormal bases whose cross products are exactly `coherence·I`.
        let mut q = gaussian_matrix(m, (c + shared_blocks) * d, 1.0, rng);
        orthonormalize_columns(&mut q)?;
        let common = q.slice(ndarray::s![.., c * d..]).to_owned();
        Ok((0..c)
            .map(|k| {
                let block = q.slice(ndarray::s![.., k * d..(k + 1) * d]).to_owned();
                if shared_blocks == 1 {
                    block * own + &common * shared
                } else {
                    block
                }
            })
            .collect())
    } else {
        let mut common = gaussian_matrix(m, d, 1.0, rng);
        orthonormalize_columns(&mut common)?;
        (0..c)
            .map(|_| {
                let mut own_block = gaussian_matrix(m, d, 1.0, rng);
                orthonormalize_columns(&mut own_block)?;
                let mut b = own_block * own + &common * shared;
                orthonormalize_columns(&mut b)?;
                Ok(b)
            })
            .collect()
    }
}

/// Draws a synthetic multi-view dataset. Every subject lives in its own
/// low-dimensional subspace; a view applies a view-specific distortion to
/// the subject's latent coordinates, every image adds latent jitter and
/// ambient Gaussian noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = stream(spec.seed, &[domain::SYNTH]);
    let d = spec.subspace_dim;
    let bases = class_bases(spec, &mut rng)?;

    let mix = gaussian_matrix(d, d, 1.0 / (d as f64).sqrt(), &mut rng);
    let distortions: Vec<Array2<f64>> = (0..spec.views)
        .map(|v| {
            let s = if spec.views > 1 {
                2.0 * v as f64 / (spec.views - 1) as f64 - 1.0
            } else {
                0.0
            };
            Array2::eye(d) + &mix * (spec.view_spread * s)
        })
        .collect();
    // Pose offsets trace a half circle in latent space, so unseen views
    // sit between the training views around them.
    let mut plane = gaussian_matrix(d, 2.min(d), 1.0, &mut rng);
    orthonormalize_columns(&mut plane)?;
    let poses: Vec<ndarray::Array1<f64>> = (0..spec.views)
        .map(|v| {
            let phi = if spec.views > 1 {
                std::f64::consts::PI * v as f64 / (spec.views - 1) as f64
            } else {
                0.0
            };
            let mut p = plane.column(0).to_owned() * phi.cos();
            if d > 1 {
                p.scaled_add(phi.sin(), &plane.column(1));
            }
            p * spec.pose_strength
        })
        .collect();
    let identities: Vec<_> = (0..spec.num_classes)
        .map(|_| gaussian_vec(d, 1.0, &mut rng))
        .collect();

    let draw = |class: usize, view: usize, rng: &mut Rng| {
        let latent = distortions[view].dot(&identities[class])
            + &poses[view]
            + gaussian_vec(d, spec.jitter, rng);
        let clean = bases[class].dot(&latent);
        let noise = gaussian_vec(spec.feature_dim, spec.noise_std, rng);
        LabeledVector {
            features: (clean + noise).to_vec(),
            class: ClassId::from_index(class),
            view,
        }
    };

    let mut train = Vec::with_capacity(spec.num_classes * spec.atoms_per_class);
    for class in 0..spec.num_classes {
        for k in 0..spec.atoms_per_class {
            let view = spec.train_views[k % spec.train_views.len()];
            train.push(draw(class, view, &mut rng));
        }
    }
    let mut test = Vec::with_capacity(spec.num_classes * spec.views * spec.test_images_per_view);
    for class in 0..spec.num_classes {
        for view in 0..spec.views {
            for _ in 0..spec.test_images_per_view {
                test.push(draw(class, view, &mut rng));
            }
        }
    }
    Ok(SyntheticData { train, test, bases })
}

/// Test-matrix sampling protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// Views per test matrix (`T`).
    pub tasks: usize,
    pub num_trials: usize,
    /// Views eligible for testing; `None` means every view in the pool.
    pub test_views: Option<Vec<usize>>,
    pub seed: u64,
}

/// Draws `num_trials` test matrices: a uniformly random subject, then `T`
/// distinct views of it uniformly without replacement, then one of the
/// subject's images of each drawn view.
pub fn sample_test_matrices(
    pool: &[LabeledVector],
    spec: &ExperimentSpec,
) -> Result<Vec<(ObservationMatrix<f64>, ClassId)>> {
    if spec.tasks == 0 {
        return Err(Error::invalid("views", "T must be at least 1"));
    }
    if spec.num_trials == 0 {
        return Err(Error::invalid("trials", "at least one trial required"));
    }
    type Views<'a> = BTreeMap<usize, Vec<&'a LabeledVector>>;
    let mut by_subject: BTreeMap<ClassId, Views> = BTreeMap::new();
    for v in pool {
        let eligible = spec
            .test_views
            .as_ref()
            .is_none_or(|views| views.contains(&v.view));
        let entry = by_subject.entry(v.class).or_default();
        if eligible {
            entry.entry(v.view).or_default().push(v);
        }
    }
    if by_subject.is_empty() {
        return Err(Error::invalid("test_pool", "empty test pool"));
    }
    for (subject, views) in &by_subject {
        if views.len() < spec.tasks {
            return Err(Error::InsufficientViews {
                subject: subject.0,
                available: views.len(),
                required: spec.tasks,
            });
        }
    }
    let subjects: Vec<(ClassId, Vec<&Vec<&LabeledVector>>)> = by_subject
        .iter()
        .map(|(&c, views)| (c, views.values().collect()))
        .collect();
    let mut rng = stream(spec.seed, &[domain::SAMPLE]);
    (0..spec.num_trials)
        .map(|_| {
            let (class, views) = &subjects[rng.random_range(0..subjects.len())];
            let picks = index::sample(&mut rng, views.len(), spec.tasks);
            let cols: Vec<&[f64]> = picks
                .iter()
                .map(|i| {
                    let images = views[i];
                    images[rng.random_range(0..images.len())].features.as_slice()
                })
                .collect();
            Ok((ObservationMatrix::from_columns(&cols)?, *class))
        })
        .collect()
}

/// Labeled images read from `<root>/<class-name>/<files>`.
#[derive(Clone, Debug, Default)]
pub struct ImageSet {
    pub images: Vec<(Vec<f64>, ClassId)>,
    /// Class names in id order (`class_names[0]` is class 1).
    pub class_names: Vec<String>,
    /// Files that could not be decoded, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Decodes a PGM/PNG file into a row-major grayscale vector in `[0, 1]`,
/// bilinearly resized to `size = (height, width)`.
pub fn load_image(path: &Path, size: (u32, u32)) -> Result<Vec<f64>> {
    let (h, w) = size;
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?
        .to_luma8();
    let img = if img.dimensions() == (w, h) {
        img
    } else {
        image::imageops::resize(&img, w, h, FilterType::Triangle)
    };
    Ok(img.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect())
}

/// Reads every class directory under `root`. Class ids follow the sorted
/// directory names; unreadable files are skipped and reported.
pub fn load_image_directory(root: &Path, size: (u32, u32)) -> Result<ImageSet> {
    if size.0 == 0 || size.1 == 0 {
        return Err(Error::invalid("target_size", "dimensions must be positive"));
    }
    let mut class_dirs: Vec<(String, PathBuf)> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::invalid("images", format!("no class directories in {}", root.display())));
    }

    let mut set = ImageSet::default();
    for (idx, (name, dir)) in class_dirs.into_iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let before = set.images.len();
        for file in files {
            match load_image(&file, size) {
                Ok(v) => set.images.push((v, ClassId::from_index(idx))),
                Err(e) => {
                    log::warn!("skipping {}: {e}", file.display());
                    set.skipped.push((file, e.to_string()));
                }
            }
        }
        if set.images.len() == before {
            return Err(Error::EmptyClass(dir.display().to_string()));
        }
        set.class_names.push(name);
    }
    Ok(set)
}

/// Writes a vector in `[0, 1]` as an 8-bit binary PGM.
pub fn write_pgm(path: &Path, pixels: &[f64], size: (u32, u32)) -> Result<()> {
    let (h, w) = size;
    if pixels.len() != (h * w) as usize {
        return Err(Error::Shape(format!(
            "{} pixels for a {h}x{w} image",
            pixels.len()
        )));
    }
    let bytes: Vec<u8> = pixels
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let img = image::GrayImage::from_raw(w, h, bytes).expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Pnm)?;
    Ok(())
}

/// One row of a dataset manifest. `path` is an image file, or
/// `<matrix.csv>#<column>` for a column of a matrix file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub class_name: String,
    pub view_tag: String,
}

pub const MANIFEST_HEADER: [&str; 3] = ["path", "class_name", "view_tag"];

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MANIFEST_HEADER)?;
    for e in entries {
        w.write_record([&e.path, &e.class_name, &e.view_tag])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::Parse(format!(
            "{}: expected header {}",
            path.display(),
            MANIFEST_HEADER.join(",")
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ManifestEntry {
                path: rec[0].to_string(),
                class_name: rec[1].to_string(),
                view_tag: rec[2].to_string(),
            })
        })
        .collect()
}

/// Writes a matrix as CSV: header `c0,…,c{k-1}`, then one line per row.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..m.ncols()).map(|j| format!("c{j}")))?;
    for row in m.axis_iter(Axis(0)) {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, expected {cols}",
                path.display(),
                line + 1,
                rec.len()
            )));
        }
        for field in rec.iter() {
            values.push(field.trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("{}: row {}: {e}", path.display(), line + 1))
            })?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Shape(e.to_string()))
}

/// Vectors referenced by a manifest, labeled by sorted class name.
#[derive(Clone, Debug)]
pub struct ManifestData {
    pub vectors: Vec<LabeledVector>,
    pub class_names: Vec<String>,
    pub view_tags: Vec<String>,
}

/// Resolves every manifest entry relative to `base`. `class_names`, when
/// given, fixes the name → id mapping (e.g. to match a dictionary);
/// otherwise ids follow the sorted distinct names.
pub fn load_manifest_vectors(
    entries: &[ManifestEntry],
    base: &Path,
    class_names: Option<&[String]>,
    image_size: (u32, u32),
) -> Result<ManifestData> {
    let class_names: Vec<String> = match class_names {
        Some(names) => names.to_vec(),
        None => {
            let mut names: Vec<String> = entries.iter().map(|e| e.class_name.clone()).collect();
            names.sort();
            names.dedup();
            names
        }
    };
    let class_ids: HashMap<&str, ClassId> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), ClassId::from_index(i)))
        .collect();
    let mut view_tags: Vec<String> = entries.iter().map(|e| e.view_tag.clone()).collect();
    view_tags.sort();
    view_tags.dedup();

    let mut matrices: HashMap<PathBuf, Array2<f64>> = HashMap::new();
    let mut vectors = Vec::with_capacity(entries.len());
    for e in entries {
        let class = *class_ids
            .get(e.class_name.as_str())
            .ok_or_else(|| Error::Parse(format!("unknown class name `{}`", e.class_name)))?;
        let view = view_tags.binary_search(&e.view_tag).expect("tag collected above");
        let features = match e.path.rsplit_once('#') {
            Some((file, col)) => {
                let file = base.join(file);
                let col: usize = col
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad column reference `{}`", e.path)))?;
                if !matrices.contains_key(&file) {
                    let m = read_matrix_csv(&file)?;
                    matrices.insert(file.clone(), m);
                }
                let m = &matrices[&file];
                if col >= m.ncols() {
                    return Err(Error::Parse(format!(
                        "column {col} out of range in {}",
                        file.display()
                    )));
                }
                m.column(col).to_vec()
            }
            None => load_image(&base.join(&e.path), image_size)?,
        };
        vectors.push(LabeledVector {
            features,
            class,
            view,
        });
    }
    Ok(ManifestData {
        vectors,
        class_names,
        view_tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_shapes() {
        let spec = SyntheticSpec {
            num_classes: 2,
            atoms_per_class: 3,
            feature_dim: 20,
            views: 5,
            train_views: vec![0, 2, 4],
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        assert_eq!(data.train.len(), 6);
        assert!(data.train.iter().chain(&data.test).all(|v| v.features.len() == 20));
        // 10-per-subject test pool: two images of each of the 5 views
        assert_eq!(data.test.len(), 20);
        assert_eq!(data.test.iter().filter(|v| v.class == ClassId(2)).count(), 10);
    }

    #[test]
    fn subspace_dim_larger_than_features_rejected() {
        let spec = SyntheticSpec {
            feature_dim: 4,
            subspace_dim: 5,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn noiseless_vectors_lie_in_class_subspace() {
        let spec = SyntheticSpec {
            noise_std: 0.0,
            coherence: 0.0,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        for v in data.test.iter().chain(&data.train) {
            let b = &data.bases[v.class.index()];
            let y = ndarray::Array1::from(v.features.clone());
            let proj = b.dot(&b.t().dot(&y));
            let resid = &y - &proj;
            assert!(resid.dot(&resid).sqrt() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_classes_without_coherence() {
        let spec = SyntheticSpec {
            coherence: 0.0,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        for (i, a) in data.bases.iter().enumerate() {
            let gram = a.t().dot(a);
            assert!((&gram - &Array2::<f64>::eye(spec.subspace_dim)).iter().all(|v| v.abs() < 1e-10));
            for b in &data.bases[i + 1..] {
                assert!(a.t().dot(b).iter().all(|v| v.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn coherence_sets_principal_cosines() {
        let spec = SyntheticSpec {
            coherence: 0.3,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        let cross = data.bases[0].t().dot(&data.bases[1]);
        let expected = Array2::<f64>::eye(spec.subspace_dim) * 0.3;
        assert!((&cross - &expected).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::default();
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let c = generate_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn train_and_test_disjoint() {
        let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
        for t in &data.test {
            assert!(data.train.iter().all(|r| r.features != t.features));
        }
    }

    fn pool() -> Vec<LabeledVector> {
        let data = generate_synthetic(&SyntheticSpec {
            num_classes: 4,
            ..SyntheticSpec::default()
        })
        .unwrap();
        data.test
    }

    #[test]
    fn single_view_matrices() {
        let spec = ExperimentSpec {
            tasks: 1,
            num_trials: 20,
            test_views: None,
            seed: 2,
        };
        let mats = sample_test_matrices(&pool(), &spec).unwrap();
        assert_eq!(mats.len(), 20);
        assert!(mats.iter().all(|(m, _)| m.tasks() == 1));
    }

    #[test]
    fn exhaustive_draw_uses_every_view() {
        let pool = pool();
        let spec = ExperimentSpec {
            tasks: 7,
            num_trials: 5,
            test_views: None,
            seed: 3,
        };
        for (m, class) in sample_test_matrices(&pool, &spec).unwrap() {
            let mut views: Vec<usize> = (0..7)
                .map(|t| {
                    let col = m.column(t).to_vec();
                    let src = pool.iter().find(|v| v.features == col).expect("column from pool");
                    assert_eq!(src.class, class);
                    src.view
                })
                .collect();
            views.sort();
            assert_eq!(views, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn insufficient_views_named() {
        let spec = ExperimentSpec {
            tasks: 3,
            num_trials: 1,
            test_views: Some(vec![0, 1]),
            seed: 0,
        };
        let err = sample_test_matrices(&pool(), &spec).unwrap_err();
        assert!(matches!(err, Error::InsufficientViews { subject: 1, available: 2, required: 3 }));
    }

    #[test]
    fn subjects_drawn_uniformly() {
        let spec = ExperimentSpec {
            tasks: 1,
            num_trials: 10_000,
            test_views: None,
            seed: 5,
        };
        let mats = sample_test_matrices(&pool(), &spec).unwrap();
        for c in 1..=4 {
            let f = mats.iter().filter(|(_, k)| k.0 == c).count() as f64 / 1e4;
            assert!((f - 0.25).abs() < 0.02, "class {c}: {f}");
        }
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = ndarray::array![[0.1, -2.5e-17, 3.0], [1.0 / 3.0, 7.0, -0.0]];
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), m);
    }
}
