//! Domain types shared by every stage: the labeled dictionary, prior
//! hyperparameters, the per-task inclusion matrix and the observation / code
//! / support matrices.

use std::fmt;
use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result, Scalar};

/// One-based class label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub usize);

impl ClassId {
    /// Zero-based position of the class in per-class arrays.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        ClassId(index + 1)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Column-normalized, class-labeled dictionary. Columns are grouped by
/// class in ascending id order.
#[derive(Clone, Debug)]
pub struct Dictionary<S> {
    atoms: Array2<S>,
    class_of: Vec<ClassId>,
    class_ranges: Vec<Range<usize>>,
}

impl<S: Scalar> Dictionary<S> {
    /// Builds a dictionary from labeled feature vectors. Images are stably
    /// regrouped by class and every column is scaled to unit norm.
    pub fn build<V: AsRef<[S]>>(images: &[(V, ClassId)]) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::invalid("images", "no training images"))?;
        let m = first.0.as_ref().len();
        if m == 0 {
            return Err(Error::invalid("images", "feature dimension is zero"));
        }
        let mut num_classes = 0;
        for (index, (v, class)) in images.iter().enumerate() {
            let v = v.as_ref();
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: m,
                    found: v.len(),
                });
            }
            if class.0 == 0 {
                return Err(Error::UnknownClass(0));
            }
            if v.iter().all(|x| *x == S::zero()) {
                return Err(Error::ZeroColumn { index });
            }
            num_classes = num_classes.max(class.0);
        }

        let mut order: Vec<usize> = (0..images.len()).collect();
        order.sort_by_key(|&i| images[i].1);

        let n = images.len();
        let mut atoms = Array2::<S>::zeros((m, n));
        let mut class_of = Vec::with_capacity(n);
        for (col, &src) in order.iter().enumerate() {
            let (v, class) = &images[src];
            let v = v.as_ref();
            let norm = v.iter().map(|x| *x * *x).sum::<S>().sqrt();
            if !(norm > S::zero()) || !norm.is_finite() {
                return Err(Error::ZeroColumn { index: src });
            }
            for (r, x) in v.iter().enumerate() {
                atoms[[r, col]] = *x / norm;
            }
            class_of.push(*class);
        }
        Self::from_sorted(atoms, class_of, num_classes)
    }

    /// Wraps an existing matrix and column labeling. Columns are
    /// re-normalized; labels must already be grouped in ascending order.
    pub fn from_parts(mut atoms: Array2<S>, class_of: Vec<ClassId>) -> Result<Self> {
        if atoms.ncols() != class_of.len() {
            return Err(Error::Shape(format!(
                "{} columns but {} class labels",
                atoms.ncols(),
                class_of.len()
            )));
        }
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::invalid("atoms", "empty matrix"));
        }
        if class_of.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid(
                "class_of",
                "columns must be grouped by ascending class id",
            ));
        }
        for (index, mut col) in atoms.axis_iter_mut(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if !(norm > S::zero()) || !norm.is_finite() {
                return Err(Error::ZeroColumn { index });
            }
            col.mapv_inplace(|x| x / norm);
        }
        let num_classes = class_of.last().map_or(0, |c| c.0);
        if class_of.first().is_some_and(|c| c.0 == 0) {
            return Err(Error::UnknownClass(0));
        }
        Self::from_sorted(atoms, class_of, num_classes)
    }

    fn from_sorted(atoms: Array2<S>, class_of: Vec<ClassId>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(
                "classes",
                format!("at least 2 classes required, found {num_classes}"),
            ));
        }
        let mut class_ranges = Vec::with_capacity(num_classes);
        let mut start = 0;
        for c in 1..=num_classes {
            let end = start + class_of[start..].iter().take_while(|id| id.0 == c).count();
            if end == start {
                return Err(Error::invalid(
                    "classes",
                    format!("class {c} has no training images"),
                ));
            }
            class_ranges.push(start..end);
            start = end;
        }
        debug_assert_eq!(start, class_of.len());
        Ok(Dictionary {
            atoms,
            class_of,
            class_ranges,
        })
    }

    pub fn atoms(&self) -> ArrayView2<'_, S> {
        self.atoms.view()
    }

    pub fn atom(&self, i: usize) -> ArrayView1<'_, S> {
        self.atoms.column(i)
    }

    /// Feature dimension.
    pub fn m(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms.
    pub fn n(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_ranges.len()
    }

    pub fn class_of(&self) -> &[ClassId] {
        &self.class_of
    }

    pub fn class_ranges(&self) -> &[Range<usize>] {
        &self.class_ranges
    }

    pub fn class_range(&self, class: ClassId) -> Result<Range<usize>> {
        if class.0 == 0 || class.0 > self.num_classes() {
            return Err(Error::UnknownClass(class.0));
        }
        Ok(self.class_ranges[class.index()].clone())
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> {
        (1..=self.num_classes()).map(ClassId)
    }

    /// Largest `|‖a_i‖₂ − 1|` over all atoms.
    pub fn max_norm_deviation(&self) -> f64 {
        self.atoms
            .axis_iter(Axis(1))
            .map(|c| (c.dot(&c).sqrt().to_f64_lossy() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Array2<S> {
        self.atoms.t().dot(&self.atoms)
    }

    /// Keeps at most `per_class` leading atoms of every class.
    pub fn truncate_per_class(&self, per_class: usize) -> Result<Self> {
        let keep: Vec<usize> = self
            .class_ranges
            .iter()
            .flat_map(|r| r.start..(r.start + per_class).min(r.end))
            .collect();
        let atoms = self.atoms.select(Axis(1), &keep);
        let class_of = keep.iter().map(|&i| self.class_of[i]).collect();
        Self::from_parts(atoms, class_of)
    }
}

/// Slab and noise hyperparameters. The slab variance is `sigma2 / lambda`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PriorParams<S> {
    pub sigma2: S,
    pub sigma_n2: S,
    pub lambda: S,
}

impl<S: Scalar> PriorParams<S> {
    pub fn new(sigma2: S, sigma_n2: S, lambda: S) -> Result<Self> {
        let p = PriorParams {
            sigma2,
            sigma_n2,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma2", self.sigma2),
            ("sigma_n2", self.sigma_n2),
            ("lambda", self.lambda),
        ] {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Slab variance `σ²/λ`.
    pub fn slab_variance(&self) -> S {
        self.sigma2 / self.lambda
    }

    /// Weight `σ²/σ_n²` on the data term of the MAP objective.
    pub fn data_weight(&self) -> S {
        self.sigma2 / self.sigma_n2
    }
}

impl<S: Scalar> Default for PriorParams<S> {
    fn default() -> Self {
        PriorParams {
            sigma2: S::one(),
            sigma_n2: S::lit(0.01),
            lambda: S::one(),
        }
    }
}

pub(crate) fn check_probability<S: Scalar>(name: &'static str, p: S) -> Result<()> {
    if p > S::zero() && p < S::one() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in (0, 1), got {p}")))
    }
}

/// `T × n` matrix of per-task, per-atom inclusion probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionMatrix<S> {
    kappa: Array2<S>,
}

impl<S: Scalar> InclusionMatrix<S> {
    pub fn from_array(kappa: Array2<S>) -> Result<Self> {
        if kappa.nrows() == 0 {
            return Err(Error::invalid("kappa", "at least one task row required"));
        }
        for &k in kappa.iter() {
            check_probability("kappa", k)?;
        }
        Ok(InclusionMatrix { kappa })
    }

    /// Two-level class-indicator prior: `kappa_in` on the atoms of
    /// `target`, `kappa_out` elsewhere, replicated over `tasks` rows.
    pub fn for_class(
        dict: &Dictionary<S>,
        target: ClassId,
        tasks: usize,
        kappa_in: S,
        kappa_out: S,
    ) -> Result<Self> {
        check_probability("kappa_in", kappa_in)?;
        check_probability("kappa_out", kappa_out)?;
        if kappa_out > kappa_in {
            return Err(Error::invalid(
                "kappa_out",
                format!("must not exceed kappa_in ({kappa_out} > {kappa_in})"),
            ));
        }
        if tasks == 0 {
            return Err(Error::invalid("tasks", "at least one task required"));
        }
        let range = dict.class_range(target)?;
        let mut row = Array1::from_elem(dict.n(), kappa_out);
        row.slice_mut(ndarray::s![range]).fill(kappa_in);
        let kappa = row
            .broadcast((tasks, dict.n()))
            .expect("row broadcasts over tasks")
            .to_owned();
        Ok(InclusionMatrix { kappa })
    }

    pub fn tasks(&self) -> usize {
        self.kappa.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.kappa.ncols()
    }

    pub fn row(&self, task: usize) -> ArrayView1<'_, S> {
        self.kappa.row(task)
    }

    pub fn as_array(&self) -> ArrayView2<'_, S> {
        self.kappa.view()
    }
}

/// Penalty `ρ = σ² log(2πσ²(1−κ)² / (λκ²))` paid by each active coefficient.
/// Strictly decreasing in `κ`; negative once `κ` is large enough.
pub fn rho<S: Scalar>(params: &PriorParams<S>, kappa: S) -> Result<S> {
    params.validate()?;
    check_probability("kappa", kappa)?;
    Ok(rho_unchecked(params, kappa))
}

pub(crate) fn rho_unchecked<S: Scalar>(params: &PriorParams<S>, kappa: S) -> S {
    let two_pi = S::lit(std::f64::consts::TAU);
    let one_minus = S::one() - kappa;
    params.sigma2
        * (two_pi * params.sigma2 * one_minus * one_minus / (params.lambda * kappa * kappa)).ln()
}

/// `ρ` for every entry of a probability row.
pub fn rho_row<S: Scalar>(params: &PriorParams<S>, kappa_row: ArrayView1<S>) -> Result<Array1<S>> {
    params.validate()?;
    for &k in kappa_row {
        check_probability("kappa", k)?;
    }
    Ok(kappa_row.mapv(|k| rho_unchecked(params, k)))
}

/// `m × T` test matrix, one column per task (view).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix<S> {
    columns: Array2<S>,
}

impl<S: Scalar> ObservationMatrix<S> {
    pub fn new(columns: Array2<S>) -> Result<Self> {
        if columns.ncols() == 0 {
            return Err(Error::invalid("tasks", "at least one task required"));
        }
        if columns.nrows() == 0 {
            return Err(Error::invalid("observation", "zero-length columns"));
        }
        Ok(ObservationMatrix { columns })
    }

    pub fn from_columns<V: AsRef<[S]>>(cols: &[V]) -> Result<Self> {
        let m = cols.first().map_or(0, |c| c.as_ref().len());
        let mut columns = Array2::zeros((m, cols.len()));
        for (t, c) in cols.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != m {
                return Err(Error::DimensionMismatch {
                    index: t,
                    expected: m,
                    found: c.len(),
                });
            }
            columns.column_mut(t).assign(&ArrayView1::from(c));
        }
        Self::new(columns)
    }

    pub fn tasks(&self) -> usize {
        self.columns.ncols()
    }

    pub fn m(&self) -> usize {
        self.columns.nrows()
    }

    pub fn column(&self, t: usize) -> ArrayView1<'_, S> {
        self.columns.column(t)
    }

    pub fn as_array(&self) -> ArrayView2<'_, S> {
        self.columns.view()
    }

    pub fn check_against(&self, dict: &Dictionary<S>) -> Result<()> {
        if self.m() != dict.m() {
            return Err(Error::Shape(format!(
                "observation dimension {} does not match dictionary dimension {}",
                self.m(),
                dict.m()
            )));
        }
        Ok(())
    }

    /// Copy with every nonzero column scaled to unit norm.
    pub fn unit_normalized(&self) -> Self {
        let mut columns = self.columns.clone();
        for mut col in columns.axis_iter_mut(Axis(1)) {
            let norm = col.dot(&col).sqrt();
            if norm > S::zero() {
                col.mapv_inplace(|x| x / norm);
            }
        }
        ObservationMatrix { columns }
    }
}

/// `n × T` coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeMatrix<S> {
    pub values: Array2<S>,
}

/// `n × T` binary support; `false` is the spike (coefficient exactly zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportMatrix {
    pub flags: Array2<bool>,
}

impl SupportMatrix {
    pub fn active_count(&self) -> usize {
        self.flags.iter().filter(|&&g| g).count()
    }
}

/// Fails unless every inactive coordinate of `x` is exactly zero.
pub fn check_spike<S: Scalar>(x: ArrayView1<S>, gamma: &[bool]) -> Result<()> {
    if x.len() != gamma.len() {
        return Err(Error::Shape(format!(
            "code length {} vs support length {}",
            x.len(),
            gamma.len()
        )));
    }
    for (index, (&v, &g)) in x.iter().zip(gamma).enumerate() {
        if !g && v != S::zero() {
            return Err(Error::SpikeViolation {
                index,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(())
}
