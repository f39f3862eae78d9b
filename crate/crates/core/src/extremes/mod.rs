//! Approximate extreme points in kernel space and the representative set
//! built from them.

mod simplex;

pub use simplex::{check_point, sphere_set, sphere_sort, CheckResult, SvddModel, SURFACE_ALPHA, SVDD_TOL};

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::{split_by_class, Dataset, SparseVector};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::partition::{fls1, fls2, sls, DeriveConfig, Fls, PartitionMap};
use crate::text;
use simplex::{center_distances, check_local, svdd_local, LocalGram};

/// Reconstruction of one source vector from the representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    /// Dataset index of the reconstructed vector.
    pub index: usize,
    /// `(representative, weight)` pairs with positive weight.
    pub weights: Vec<(usize, f64)>,
    /// Squared kernel-space residual of the reconstruction.
    pub residual: f64,
}

/// Result of extracting the approximate extreme points of one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetExtremes {
    /// Dataset indices of the selected points.
    pub extremes: Vec<usize>,
    /// Mass carried by each selected point.
    pub betas: Vec<f64>,
    /// One row per subset member, in subset order. Weights refer to
    /// positions in `extremes`.
    pub rows: Vec<GammaRow>,
}

/// Per-source-vector simplex weights over the representative set.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    /// `rows[i]` lists `(representative, weight)` for dataset vector `i`.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// `residuals[i]` is the squared reconstruction residual of vector `i`.
    pub residuals: Vec<f64>,
}

/// Settings the representative set was derived with.
#[derive(Debug, Clone, PartialEq)]
pub struct RsMeta {
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub p: usize,
    pub v: usize,
    pub source_n: usize,
    pub fls: Option<Fls>,
    pub strict: Option<bool>,
}

/// Residual summary gathered during derivation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeriveStats {
    pub subsets: usize,
    pub max_residual: f64,
    /// Source vectors whose residual exceeds epsilon.
    pub rows_over_epsilon: usize,
}

impl DeriveStats {
    pub fn violation_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.rows_over_epsilon as f64 / n as f64
        }
    }
}

/// The compressed training set: representatives, labels and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeSet {
    pub vectors: Vec<SparseVector>,
    pub labels: Vec<i8>,
    pub betas: Vec<f64>,
    /// Dataset index of each representative; empty when read from a file.
    pub source_indices: Vec<usize>,
    pub meta: RsMeta,
    /// Inclusive 1-based position ranges of the fine subsets over the
    /// class-grouped reordering of the source data.
    pub subsets: Vec<(usize, usize)>,
    pub gamma: Option<GammaMatrix>,
    /// Present only on freshly derived sets.
    pub stats: Option<DeriveStats>,
}

impl RepresentativeSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn beta_sum(&self) -> f64 {
        self.betas.iter().sum()
    }

    /// Representatives as a dataset, dropping the weights.
    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new("representatives", self.vectors.clone(), self.labels.clone())
    }
}

fn derive_ae_local(subset: &[usize], gram: &LocalGram, epsilon: f64, strict: bool) -> SubsetExtremes {
    let n = subset.len();
    let all: Vec<usize> = (0..n).collect();

    // step 1: surface of the enclosing ball
    let (alphas, _, center_norm_sq) = svdd_local(gram, &all);
    let mut member = vec![false; n];
    let mut xstar: Vec<usize> = Vec::new();
    for p in 0..n {
        if alphas[p] > SURFACE_ALPHA {
            member[p] = true;
            xstar.push(p);
        }
    }

    // step 2: the rest, farthest from the centre first
    let rest: Vec<usize> = (0..n).filter(|&p| !member[p]).collect();
    let dist = center_distances(gram, &all, &alphas, center_norm_sq, &rest);
    let mut order: Vec<(f64, usize)> = dist.into_iter().zip(rest).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(subset[a.1].cmp(&subset[b.1])));

    // step 3: collect points not covered by the current candidates
    let mut psi: Vec<usize> = Vec::new();
    let mut cand = xstar.clone();
    for &(_, p) in &order {
        if !check_local(gram, p, &cand, epsilon, true).is_approx_extreme {
            psi.push(p);
            cand.push(p);
        }
    }

    // step 4: keep the members of psi the others cannot replace
    let seed = xstar.clone();
    for (k, &p) in psi.iter().enumerate() {
        let others: Vec<usize> = seed
            .iter()
            .copied()
            .chain(psi.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &q)| q))
            .collect();
        if others.is_empty() || !check_local(gram, p, &others, epsilon, true).is_approx_extreme {
            member[p] = true;
            xstar.push(p);
        }
    }

    // steps 5-6: reconstruction weights
    let mut slot: Vec<Option<usize>> = vec![None; n];
    for (t, &p) in xstar.iter().enumerate() {
        slot[p] = Some(t);
    }
    let mut rows = Vec::with_capacity(n);
    for p in 0..n {
        let row = match slot[p] {
            Some(t) => GammaRow { index: subset[p], weights: vec![(t, 1.0)], residual: 0.0 },
            None => {
                let res = check_local(gram, p, &xstar, epsilon, false);
                if strict && res.p_value > epsilon {
                    slot[p] = Some(xstar.len());
                    xstar.push(p);
                    GammaRow { index: subset[p], weights: vec![(xstar.len() - 1, 1.0)], residual: 0.0 }
                } else {
                    let weights = res.mu.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(t, &w)| (t, w)).collect();
                    GammaRow { index: subset[p], weights, residual: res.p_value }
                }
            }
        };
        rows.push(row);
    }

    // step 7
    let mut betas = vec![0.0; xstar.len()];
    for row in &rows {
        for &(t, w) in &row.weights {
            betas[t] += w;
        }
    }
    SubsetExtremes {
        extremes: xstar.iter().map(|&p| subset[p]).collect(),
        betas,
        rows,
    }
}

/// Approximate extreme points of one fine subset with their weights.
///
/// In `strict` mode every vector whose final residual exceeds `epsilon`
/// is promoted to a representative.
pub fn derive_ae(subset: &[usize], spec: &KernelSpec, ds: &Dataset, epsilon: f64, strict: bool) -> SubsetExtremes {
    assert!(!subset.is_empty(), "derive_ae needs a nonempty subset");
    let gram = LocalGram::new(subset, spec, ds);
    derive_ae_local(subset, &gram, epsilon, strict)
}

/// Class-wise partitions used by [`derive_rs`], positives first.
pub fn partition_classes(ds: &Dataset, cfg: &DeriveConfig, spec: &KernelSpec) -> Result<Vec<PartitionMap>> {
    let split = split_by_class(ds);
    let mut maps = Vec::with_capacity(2);
    for class in [&split.positives, &split.negatives] {
        if class.is_empty() {
            maps.push(PartitionMap::default());
            continue;
        }
        let coarse = match cfg.fls {
            Fls::Positional => fls1(class, cfg.p)?,
            Fls::DistanceTree => fls2(class, cfg.p, spec, ds)?,
        };
        maps.push(sls(&coarse, cfg.v, spec, ds)?);
    }
    Ok(maps)
}

/// Computes the representative set of `ds`.
///
/// Subsets are processed on `cfg.jobs` worker threads; the result does not
/// depend on the thread count.
pub fn derive_rs(ds: &Dataset, cfg: &DeriveConfig, spec: &KernelSpec) -> Result<RepresentativeSet> {
    cfg.validate()?;
    let maps = partition_classes(ds, cfg, spec)?;
    let mut tasks: Vec<&[usize]> = Vec::new();
    let mut subsets = Vec::new();
    let mut offset = 0;
    for map in &maps {
        for r in map.ranges() {
            subsets.push((offset + r.start + 1, offset + r.end));
        }
        tasks.extend(map.subsets());
        offset += map.len();
    }

    let run = |s: &&[usize]| derive_ae(s, spec, ds, cfg.epsilon, cfg.strict);
    let parts: Vec<SubsetExtremes> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    } else {
        tasks.iter().map(run).collect()
    };

    let n = ds.len();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut betas = Vec::new();
    let mut source_indices = Vec::new();
    let mut gamma = cfg.keep_gamma.then(|| GammaMatrix {
        rows: vec![Vec::new(); n],
        residuals: vec![0.0; n],
    });
    let mut stats = DeriveStats { subsets: parts.len(), max_residual: 0.0, rows_over_epsilon: 0 };
    for part in parts {
        let base = vectors.len();
        for (&i, &b) in part.extremes.iter().zip(&part.betas) {
            vectors.push(ds.vector(i).clone());
            labels.push(ds.label(i));
            betas.push(b);
            source_indices.push(i);
        }
        for row in part.rows {
            stats.max_residual = stats.max_residual.max(row.residual);
            if row.residual > cfg.epsilon {
                stats.rows_over_epsilon += 1;
            }
            if let Some(g) = gamma.as_mut() {
                g.rows[row.index] = row.weights.iter().map(|&(t, w)| (base + t, w)).collect();
                g.residuals[row.index] = row.residual;
            }
        }
    }
    Ok(RepresentativeSet {
        vectors,
        labels,
        betas,
        source_indices,
        meta: RsMeta {
            epsilon: cfg.epsilon,
            kernel: *spec,
            p: cfg.p,
            v: cfg.v,
            source_n: n,
            fls: Some(cfg.fls),
            strict: Some(cfg.strict),
        },
        subsets,
        gamma,
        stats: Some(stats),
    })
}

const RS_MAGIC: &str = "#AESVM-RS v1";

/// Text form of a representative set. The gamma matrix is not stored.
pub fn write_rs(rs: &RepresentativeSet) -> String {
    let m = &rs.meta;
    let mut out = String::new();
    out.push_str(RS_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "#kernel {}", m.kernel);
    let _ = writeln!(out, "#epsilon {}", text::fmt_real(m.epsilon));
    let _ = writeln!(out, "#P {}", m.p);
    let _ = writeln!(out, "#V {}", m.v);
    let _ = writeln!(out, "#sourceN {}", m.source_n);
    if let Some(f) = m.fls {
        let _ = writeln!(out, "#fls {}", if f == Fls::Positional { 1 } else { 2 });
    }
    if let Some(s) = m.strict {
        let _ = writeln!(out, "#strict {}", u8::from(s));
    }
    for &(a, b) in &rs.subsets {
        let _ = writeln!(out, "#subset {a} {b}");
    }
    for ((x, &y), &b) in rs.vectors.iter().zip(&rs.labels).zip(&rs.betas) {
        out.push_str(text::fmt_label(y));
        out.push(' ');
        out.push_str(&text::fmt_real(b));
        text::push_entries(&mut out, x);
        out.push('\n');
    }
    out
}

fn header_value<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(line, format!("bad value `{v}` for #{key}")))
}

/// Reads the text form written by [`write_rs`].
pub fn parse_rs(input: &str) -> Result<RepresentativeSet> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.find(|(_, l)| !l.is_empty()) {
        Some((_, RS_MAGIC)) => {}
        Some((line, _)) => return Err(Error::format(line, format!("expected `{RS_MAGIC}` header"))),
        None => return Err(Error::EmptyInput),
    }
    let (mut kernel, mut epsilon, mut p, mut v, mut source_n) = (None, None, None, None, None);
    let (mut fls, mut strict) = (None, None);
    let mut subsets = Vec::new();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut betas = Vec::new();
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        if let Some(h) = l.strip_prefix('#') {
            let (key, val) = h.split_once(char::is_whitespace).unwrap_or((h, ""));
            let val = val.trim();
            match key {
                "kernel" => kernel = Some(val.parse::<KernelSpec>().map_err(|e| Error::parse(line, e.to_string()))?),
                "epsilon" => epsilon = Some(text::parse_real(val, line)?),
                "P" => p = Some(header_value::<usize>(val, line, key)?),
                "V" => v = Some(header_value::<usize>(val, line, key)?),
                "sourceN" => source_n = Some(header_value::<usize>(val, line, key)?),
                "fls" => fls = Some(val.parse::<Fls>().map_err(|e| Error::parse(line, e.to_string()))?),
                "strict" => {
                    strict = Some(match val {
                        "0" => false,
                        "1" => true,
                        _ => return Err(Error::parse(line, format!("bad value `{val}` for #strict"))),
                    })
                }
                "subset" => {
                    let mut it = val.split_whitespace();
                    let a = header_value::<usize>(it.next().unwrap_or(""), line, key)?;
                    let b = header_value::<usize>(it.next().unwrap_or(""), line, key)?;
                    if a == 0 || b < a {
                        return Err(Error::format(line, format!("bad subset range {a}..{b}")));
                    }
                    subsets.push((a, b));
                }
                _ => {}
            }
            continue;
        }
        let mut toks = l.split_whitespace();
        let label = toks.next().ok_or_else(|| Error::parse(line, "missing label"))?;
        labels.push(text::parse_label(label, line)?);
        let beta_tok = toks.next().ok_or_else(|| Error::parse(line, "missing beta"))?;
        let beta = text::parse_real(beta_tok, line)?;
        if beta <= 0.0 {
            return Err(Error::format(line, format!("beta must be positive, got {beta_tok}")));
        }
        betas.push(beta);
        vectors.push(text::parse_entries(toks, line)?);
    }
    let missing = |k: &str| Error::format(0, format!("missing #{k} header"));
    Ok(RepresentativeSet {
        vectors,
        labels,
        betas,
        source_indices: Vec::new(),
        meta: RsMeta {
            epsilon: epsilon.ok_or_else(|| missing("epsilon"))?,
            kernel: kernel.ok_or_else(|| missing("kernel"))?,
            p: p.ok_or_else(|| missing("P"))?,
            v: v.ok_or_else(|| missing("V"))?,
            source_n: source_n.ok_or_else(|| missing("sourceN"))?,
            fls,
            strict,
        },
        subsets,
        gamma: None,
        stats: None,
    })
}
