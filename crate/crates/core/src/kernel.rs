//! Kernel functions over sparse vectors and an LRU cache of kernel rows.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::data::SparseVector;
use crate::error::{Error, Result};
use crate::text;

/// Default cache budget, 600 MB.
pub const DEFAULT_CACHE_BYTES: usize = 600 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(-g‖x - y‖²)`
    Gaussian { g: f64 },
    /// `(1 + x·y)^degree`
    Polynomial { degree: u32 },
    Linear,
}

impl KernelSpec {
    pub fn gaussian(g: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!("gaussian width g must be positive, got {g}")));
        }
        Ok(KernelSpec::Gaussian { g })
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::invalid("polynomial degree must be >= 1"));
        }
        Ok(KernelSpec::Polynomial { degree })
    }

    /// Kernel product given the precomputed squared norms of both arguments.
    #[inline]
    pub fn eval_with_norms(&self, x: &SparseVector, y: &SparseVector, x_sq: f64, y_sq: f64) -> f64 {
        let xy = dot(x, y);
        match *self {
            KernelSpec::Linear => xy,
            KernelSpec::Polynomial { degree } => (1.0 + xy).powi(degree as i32),
            KernelSpec::Gaussian { g } => (-g * ((x_sq + y_sq) - 2.0 * xy).max(0.0)).exp(),
        }
    }

    /// `K(x, x)` from the squared norm alone.
    #[inline]
    pub fn self_product(&self, x_sq: f64) -> f64 {
        match *self {
            KernelSpec::Linear => x_sq,
            KernelSpec::Polynomial { degree } => (1.0 + x_sq).powi(degree as i32),
            KernelSpec::Gaussian { .. } => 1.0,
        }
    }
}

impl fmt::Display for KernelSpec {
    /// Space separated form used in file headers, e.g. `gaussian 0.25`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Gaussian { g } => write!(f, "gaussian {}", text::fmt_real(*g)),
            KernelSpec::Polynomial { degree } => write!(f, "polynomial {degree}"),
            KernelSpec::Linear => f.write_str("linear"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Accepts `linear`, `gaussian <g>`, `polynomial <d>`, with `:` or
    /// whitespace between kind and parameter.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(|c: char| c == ':' || c.is_whitespace()).filter(|p| !p.is_empty());
        let kind = parts.next().unwrap_or("");
        let param = parts.next();
        if parts.next().is_some() {
            return Err(Error::invalid(format!("bad kernel spec `{s}`")));
        }
        let bad = || Error::invalid(format!("bad kernel spec `{s}`"));
        match (kind, param) {
            ("linear", None) => Ok(KernelSpec::Linear),
            ("gaussian" | "rbf", Some(p)) => KernelSpec::gaussian(p.parse().map_err(|_| bad())?),
            ("polynomial" | "poly", Some(p)) => KernelSpec::polynomial(p.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

/// Sparse dot product by merge-join over the sorted indices.
pub fn dot(x: &SparseVector, y: &SparseVector) -> f64 {
    let (xi, xv) = (x.indices(), x.values());
    let (yi, yv) = (y.indices(), y.values());
    let (mut a, mut b) = (0, 0);
    let mut sum = 0.0;
    while a < xi.len() && b < yi.len() {
        match xi[a].cmp(&yi[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                sum += xv[a] * yv[b];
                a += 1;
                b += 1;
            }
        }
    }
    sum
}

pub fn kernel_product(spec: &KernelSpec, x: &SparseVector, y: &SparseVector) -> f64 {
    spec.eval_with_norms(x, y, x.norm_sq(), y.norm_sq())
}

/// Squared kernel-space distance `K(x,x) + K(y,y) - 2K(x,y)`, clamped at 0.
pub fn kernel_distance_sq(spec: &KernelSpec, x: &SparseVector, y: &SparseVector) -> f64 {
    let (xs, ys) = (x.norm_sq(), y.norm_sq());
    distance_sq_with_norms(spec, x, y, xs, ys)
}

#[inline]
pub(crate) fn distance_sq_with_norms(spec: &KernelSpec, x: &SparseVector, y: &SparseVector, xs: f64, ys: f64) -> f64 {
    let d = spec.self_product(xs) + spec.self_product(ys) - 2.0 * spec.eval_with_norms(x, y, xs, ys);
    d.max(0.0)
}

/// Row cache with least-recently-used eviction under a byte budget.
///
/// Rows are opaque `f64` slices keyed by a row index; callers decide what a
/// row means. A row larger than the whole budget is returned but not kept.
#[derive(Debug)]
pub struct KernelCache {
    capacity: usize,
    used: usize,
    tick: u64,
    rows: HashMap<usize, (Arc<[f64]>, u64)>,
    recency: BTreeMap<u64, usize>,
    hits: u64,
    misses: u64,
}

impl KernelCache {
    pub fn new(capacity_bytes: usize) -> Self {
        Self {
            capacity: capacity_bytes,
            used: 0,
            tick: 0,
            rows: HashMap::new(),
            recency: BTreeMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn used_bytes(&self) -> usize {
        self.used
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, key: usize) -> bool {
        self.rows.contains_key(&key)
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    pub fn get_or_insert_with(&mut self, key: usize, compute: impl FnOnce() -> Vec<f64>) -> Arc<[f64]> {
        self.tick += 1;
        let tick = self.tick;
        if let Some((row, stamp)) = self.rows.get_mut(&key) {
            self.hits += 1;
            self.recency.remove(stamp);
            *stamp = tick;
            self.recency.insert(tick, key);
            return row.clone();
        }
        self.misses += 1;
        let row: Arc<[f64]> = compute().into();
        let bytes = std::mem::size_of_val(&*row);
        if bytes > self.capacity {
            return row;
        }
        while self.used + bytes > self.capacity {
            let (&oldest, &victim) = self.recency.iter().next().expect("cache accounting");
            self.recency.remove(&oldest);
            if let Some((r, _)) = self.rows.remove(&victim) {
                self.used -= std::mem::size_of_val(&*r);
            }
        }
        self.used += bytes;
        self.recency.insert(tick, key);
        self.rows.insert(key, (row.clone(), tick));
        row
    }
}
