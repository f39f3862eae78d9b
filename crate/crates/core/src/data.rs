//! Datasets, the sparse text format, class splitting, fold plans and
//! seeded synthetic data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::text;

/// A data vector stored as sorted `(index, value)` pairs.
///
/// Indices are 1-based and strictly increasing; zero values are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut last = 0u32;
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i <= last {
                return Err(Error::invalid(format!(
                    "sparse indices must be >= 1 and strictly increasing (got {i} after {last})"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid("sparse values must be finite"));
            }
            last = i;
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(Self { indices, values })
    }

    /// Builds a vector from dense coordinates; coordinate `j` becomes index `j + 1`.
    pub fn from_dense(xs: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (j, &v) in xs.iter().enumerate() {
            if v != 0.0 {
                indices.push(j as u32 + 1);
                values.push(v);
            }
        }
        Self { indices, values }
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        Self { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Largest stored index, 0 for the empty vector.
    pub fn max_index(&self) -> u32 {
        self.indices.last().copied().unwrap_or(0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            if (i as usize) <= dim {
                out[i as usize - 1] = v;
            }
        }
        out
    }
}

/// A labelled two-class dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    vectors: Vec<SparseVector>,
    labels: Vec<i8>,
    dim: usize,
    sq_norms: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, vectors: Vec<SparseVector>, labels: Vec<i8>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyInput);
        }
        if vectors.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} vectors but {} labels",
                vectors.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::invalid(format!("label {bad} is not +1 or -1")));
        }
        let dim = vectors.iter().map(|x| x.max_index() as usize).max().unwrap_or(0);
        let sq_norms = vectors.iter().map(SparseVector::norm_sq).collect();
        Ok(Self {
            name: name.into(),
            vectors,
            labels,
            dim,
            sq_norms,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &SparseVector {
        &self.vectors[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    /// Cached `‖x_i‖²`.
    pub fn sq_norm(&self, i: usize) -> f64 {
        self.sq_norms[i]
    }

    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    /// Dataset restricted to `idx`, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.name.clone(),
            idx.iter().map(|&i| self.vectors[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// The same vectors with every label negated.
    pub fn with_flipped_labels(&self) -> Dataset {
        let mut out = self.clone();
        for y in &mut out.labels {
            *y = -*y;
        }
        out
    }
}

/// Parses the sparse classification text format.
///
/// One sample per line: `<label> <idx>:<val> ...`. Lines starting with `#`
/// and blank lines are skipped.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (line, l) in text::content_lines(text) {
        let mut toks = l.split_whitespace();
        let label = toks.next().ok_or_else(|| Error::parse(line, "missing label"))?;
        labels.push(text::parse_label(label, line)?);
        vectors.push(text::parse_entries(toks, line)?);
    }
    if vectors.is_empty() {
        return Err(Error::EmptyInput);
    }
    Dataset::new("", vectors, labels)
}

/// Canonical text form, one line per sample, newline terminated.
pub fn write_dataset(ds: &Dataset) -> String {
    let mut out = String::new();
    for (x, &y) in ds.vectors.iter().zip(&ds.labels) {
        out.push_str(text::fmt_label(y));
        text::push_entries(&mut out, x);
        out.push('\n');
    }
    out
}

/// Indices of each class in dataset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSplit {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl ClassSplit {
    /// Set when one of the classes has no samples.
    pub fn warning(&self) -> Option<&'static str> {
        match (self.positives.is_empty(), self.negatives.is_empty()) {
            (true, _) => Some("no positive samples"),
            (_, true) => Some("no negative samples"),
            _ => None,
        }
    }
}

pub fn split_by_class(ds: &Dataset) -> ClassSplit {
    let (positives, negatives) = (0..ds.len()).partition(|&i| ds.labels[i] > 0);
    ClassSplit { positives, negatives }
}

/// Assignment of samples to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, test)` index lists for `fold`, both in ascending order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != fold)
    }
}

pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("cannot split {n} samples into {k} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments })
}

/// Two unit-variance Gaussian clouds centred at `±separation/2` on the
/// first axis. Samples alternate between the clouds; each label is then
/// flipped with probability `flip_rate`.
pub fn gen_synthetic(n: usize, d: usize, separation: f64, flip_rate: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || d < 1 {
        return Err(Error::invalid(format!("need n >= 2 and d >= 1, got n={n} d={d}")));
    }
    if !(0.0..=1.0).contains(&flip_rate) {
        return Err(Error::invalid(format!("flip rate {flip_rate} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut coords = vec![0.0; d];
    for i in 0..n {
        let cloud: i8 = if i % 2 == 0 { 1 } else { -1 };
        for (j, c) in coords.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *c = if j == 0 { z + f64::from(cloud) * separation / 2.0 } else { z };
        }
        let flip = rng.random::<f64>() < flip_rate;
        vectors.push(SparseVector::from_dense(&coords));
        labels.push(if flip { -cloud } else { cloud });
    }
    Dataset::new(format!("synthetic-n{n}-d{d}-s{seed}"), vectors, labels)
}
