//! Two-level segregation of one class into small subsets.
//!
//! The first level cuts a class into coarse blocks of at most `P` vectors,
//! either by position ([`fls1`]) or by recursive median splits on kernel
//! distance ([`fls2`]). The second level ([`sls`]) peels each coarse block
//! into fine subsets of at most `V` vectors that are close in kernel space.
//!
//! All rank selections use the total order `(distance, dataset index)`, so
//! every split has an exact size and the output does not depend on ties.

use std::cmp::Ordering;
use std::ops::Range;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{distance_sq_with_norms, KernelSpec};

/// Which first-level segregation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fls {
    /// Consecutive blocks by position.
    Positional,
    /// Recursive median splits on kernel distance.
    DistanceTree,
}

impl std::str::FromStr for Fls {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "fls1" => Ok(Fls::Positional),
            "2" | "fls2" => Ok(Fls::DistanceTree),
            _ => Err(Error::invalid(format!("--fls must be 1 or 2, got `{s}`"))),
        }
    }
}

/// Parameters for computing a representative set.
#[derive(Debug, Clone, PartialEq)]
pub struct DeriveConfig {
    /// Coarse subset cap.
    pub p: usize,
    /// Fine subset cap, `v < p`.
    pub v: usize,
    pub epsilon: f64,
    pub fls: Fls,
    /// Promote any vector whose final reconstruction residual exceeds
    /// `epsilon`, so every residual is bounded by `epsilon`.
    pub strict: bool,
    /// Keep the per-vector reconstruction weights in the result.
    pub keep_gamma: bool,
    /// Worker threads for the per-subset extraction; 0 or 1 runs inline.
    pub jobs: usize,
}

impl Default for DeriveConfig {
    fn default() -> Self {
        Self {
            p: 100_000,
            v: 1_000,
            epsilon: 1e-3,
            fls: Fls::DistanceTree,
            strict: false,
            keep_gamma: false,
            jobs: 1,
        }
    }
}

impl DeriveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.v == 0 || self.v >= self.p {
            return Err(Error::invalid(format!(
                "need 0 < V < P, got V={} P={}",
                self.v, self.p
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// A reordering of a class together with its subset boundaries.
///
/// `boundaries[pos]` is the 1-based position of the last member of the
/// subset holding `order[pos]`, i.e. the exclusive end of that subset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartitionMap {
    pub order: Vec<usize>,
    pub boundaries: Vec<usize>,
}

impl PartitionMap {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Position ranges of the subsets, in order.
    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.boundaries.len() {
            let end = self.boundaries[start];
            out.push(start..end);
            start = end;
        }
        out
    }

    pub fn subsets(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.ranges().into_iter().map(move |r| &self.order[r])
    }

    pub fn subset_sizes(&self) -> Vec<usize> {
        self.ranges().iter().map(|r| r.len()).collect()
    }

    /// Checks the plateau structure of `boundaries` and that `order` is a
    /// permutation of `expected` (compared as sets).
    pub fn validate(&self, expected: &[usize]) -> Result<()> {
        if self.order.len() != self.boundaries.len() {
            return Err(Error::invalid("order and boundaries differ in length"));
        }
        let mut a = self.order.clone();
        let mut b = expected.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::invalid("partition order is not a permutation of the class"));
        }
        let mut start = 0;
        while start < self.boundaries.len() {
            let end = self.boundaries[start];
            if end <= start || end > self.boundaries.len() {
                return Err(Error::invalid(format!("bad boundary {end} at position {start}")));
            }
            if self.boundaries[start..end].iter().any(|&e| e != end) {
                return Err(Error::invalid(format!("boundary plateau {start}..{end} is broken")));
            }
            start = end;
        }
        Ok(())
    }

    /// One `subset <first> <last>` line per subset, 1-based inclusive,
    /// with positions shifted by `offset`.
    pub fn subset_lines(&self, offset: usize) -> Vec<String> {
        self.ranges()
            .into_iter()
            .map(|r| format!("subset {} {}", offset + r.start + 1, offset + r.end))
            .collect()
    }
}

#[inline]
fn key_cmp(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Element of rank `rank` (0-based) under the `(key, tiebreak)` order,
/// found by median-of-medians selection in worst-case linear time.
pub fn bfprt_select(keys: &[(f64, usize)], rank: usize) -> Result<(f64, usize)> {
    if rank >= keys.len() {
        return Err(Error::invalid(format!(
            "rank {rank} out of range for {} keys",
            keys.len()
        )));
    }
    Ok(select_owned(keys.to_vec(), rank))
}

fn select_owned(mut v: Vec<(f64, usize)>, mut k: usize) -> (f64, usize) {
    loop {
        if v.len() <= 5 {
            v.sort_unstable_by(key_cmp);
            return v[k];
        }
        let medians: Vec<(f64, usize)> = v
            .chunks_mut(5)
            .map(|c| {
                c.sort_unstable_by(key_cmp);
                c[(c.len() - 1) / 2]
            })
            .collect();
        let mid = (medians.len() - 1) / 2;
        let pivot = select_owned(medians, mid);
        let mut less = Vec::with_capacity(v.len() / 2);
        let mut greater = Vec::with_capacity(v.len() / 2);
        for e in v {
            match key_cmp(&e, &pivot) {
                Ordering::Less => less.push(e),
                Ordering::Greater => greater.push(e),
                Ordering::Equal => {}
            }
        }
        match k.cmp(&less.len()) {
            Ordering::Less => v = less,
            Ordering::Equal => return pivot,
            Ordering::Greater => {
                k -= less.len() + 1;
                v = greater;
            }
        }
    }
}

/// Positional segregation into consecutive blocks of `p`.
pub fn fls1(class_indices: &[usize], p: usize) -> Result<PartitionMap> {
    if p == 0 {
        return Err(Error::invalid("P must be >= 1"));
    }
    let n = class_indices.len();
    let boundaries = (0..n).map(|pos| ((pos / p + 1) * p).min(n)).collect();
    Ok(PartitionMap {
        order: class_indices.to_vec(),
        boundaries,
    })
}

/// Splits `block` into the elements strictly below `pivot` and the rest,
/// keeping relative order, and writes them back as `[below, rest]`.
/// Returns the number of elements below.
fn stable_split(block: &mut [usize], keys: &[(f64, usize)], pivot: (f64, usize)) -> usize {
    let (below, rest): (Vec<_>, Vec<_>) = keys
        .iter()
        .map(|k| k.1)
        .zip(keys.iter())
        .partition(|(_, k)| key_cmp(k, &pivot) == Ordering::Less);
    let n_below = below.len();
    for (slot, i) in block.iter_mut().zip(below.into_iter().chain(rest).map(|(i, _)| i)) {
        *slot = i;
    }
    n_below
}

fn distances_from(anchor: usize, block: &[usize], spec: &KernelSpec, ds: &Dataset) -> Vec<(f64, usize)> {
    let a = ds.vector(anchor);
    let an = ds.sq_norm(anchor);
    block
        .iter()
        .map(|&i| (distance_sq_with_norms(spec, ds.vector(i), a, ds.sq_norm(i), an), i))
        .collect()
}

/// Kernel-distance tree segregation: each block is split at the median
/// distance from its first vector until halves fit in `p`.
pub fn fls2(class_indices: &[usize], p: usize, spec: &KernelSpec, ds: &Dataset) -> Result<PartitionMap> {
    if p == 0 {
        return Err(Error::invalid("P must be >= 1"));
    }
    let mut order = class_indices.to_vec();
    let mut boundaries = vec![0; order.len()];
    fls2_block(&mut order, &mut boundaries, 0, p, spec, ds);
    Ok(PartitionMap { order, boundaries })
}

fn fls2_block(block: &mut [usize], bounds: &mut [usize], offset: usize, p: usize, spec: &KernelSpec, ds: &Dataset) {
    let n = block.len();
    if n == 0 {
        return;
    }
    let keys = distances_from(block[0], block, spec, ds);
    let half = n / 2;
    let pivot = select_owned(keys.clone(), half);
    let n_below = stable_split(block, &keys, pivot);
    debug_assert_eq!(n_below, half);
    if n <= 2 * p {
        bounds[..half].fill(offset + half);
        bounds[half..].fill(offset + n);
    } else {
        let (b1, b2) = block.split_at_mut(half);
        let (d1, d2) = bounds.split_at_mut(half);
        fls2_block(b1, d1, offset, p, spec, ds);
        fls2_block(b2, d2, offset + half, p, spec, ds);
    }
}

/// Second-level segregation of every coarse subset of `class_map` into
/// fine subsets of at most `v` vectors.
pub fn sls(class_map: &PartitionMap, v: usize, spec: &KernelSpec, ds: &Dataset) -> Result<PartitionMap> {
    if v == 0 {
        return Err(Error::invalid("V must be >= 1"));
    }
    let mut order = Vec::with_capacity(class_map.len());
    let mut boundaries = Vec::with_capacity(class_map.len());
    for coarse in class_map.subsets() {
        peel_block(coarse, v, spec, ds, &mut order, &mut boundaries);
    }
    Ok(PartitionMap { order, boundaries })
}

fn peel_block(coarse: &[usize], v: usize, spec: &KernelSpec, ds: &Dataset, order: &mut Vec<usize>, bounds: &mut Vec<usize>) {
    let emit = |members: &[usize], order: &mut Vec<usize>, bounds: &mut Vec<usize>| {
        let end = order.len() + members.len();
        order.extend_from_slice(members);
        bounds.extend(std::iter::repeat_n(end, members.len()));
    };
    if coarse.len() <= v {
        emit(coarse, order, bounds);
        return;
    }
    // farthest from the origin in input space, lowest index on ties
    let mut pivot = coarse[0];
    for &i in coarse {
        let (a, b) = (ds.sq_norm(i), ds.sq_norm(pivot));
        if a > b || (a == b && i < pivot) {
            pivot = i;
        }
    }
    let mut rest = coarse.to_vec();
    while rest.len() > v {
        let keys = distances_from(pivot, &rest, spec, ds);
        let sel = select_owned(keys.clone(), v);
        let n_below = stable_split(&mut rest, &keys, sel);
        emit(&rest[..n_below], order, bounds);
        rest.drain(..n_below);
        pivot = sel.1;
    }
    emit(&rest, order, bounds);
}
