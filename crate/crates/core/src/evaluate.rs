//! Cross-validated grid search, comparison metrics, and bound diagnostics.

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{make_folds, Dataset};
use crate::error::{Error, Result};
use crate::extremes::RepresentativeSet;
use crate::kernel::KernelSpec;
use crate::partition::DeriveConfig;
use crate::solver::{objective_f1, objective_f2, objective_f3, predict, train_aesvm, train_exact, SvmModel, TrainConfig};
use crate::{extremes, text};

/// Largest dataset the dense trace diagnostic accepts by default.
pub const DENSE_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub c_primes: Vec<f64>,
    /// One entry per kernel parameter value.
    pub kernels: Vec<KernelSpec>,
    pub folds: usize,
    pub seed: u64,
    pub derive: DeriveConfig,
    /// Solver settings; `c_prime` is overridden per cell.
    pub train: TrainConfig,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

impl Default for GridSpec {
    /// C' in 2^-4..2^7 and Gaussian g in 2^-4..2^2, five folds.
    fn default() -> Self {
        Self {
            c_primes: powers_of_two(-4, 7),
            kernels: powers_of_two(-4, 2).into_iter().map(|g| KernelSpec::Gaussian { g }).collect(),
            folds: 5,
            seed: 0,
            derive: DeriveConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl GridSpec {
    /// `(c_prime, kernel)` pairs, kernel-major.
    pub fn cells(&self) -> Vec<(f64, KernelSpec)> {
        self.kernels
            .iter()
            .flat_map(|k| self.c_primes.iter().map(move |&c| (c, *k)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_primes.is_empty() || self.kernels.is_empty() {
            return Err(Error::invalid("grid axes must be nonempty"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("grid search needs at least 2 folds"));
        }
        self.derive.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Exact,
    Aesvm,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Exact => "exact",
            SolverKind::Aesvm => "aesvm",
        })
    }
}

/// One trained cell on one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRecord {
    pub c_prime: f64,
    pub kernel: KernelSpec,
    pub fold: usize,
    pub solver: SolverKind,
    /// Test accuracy in percent; NaN when training failed.
    pub accuracy: f64,
    pub train_seconds: f64,
    pub n_sv: usize,
    /// Time spent deriving the representative set this cell trained on.
    pub derive_seconds: f64,
    pub error: Option<String>,
}

/// All records of one solver over the full cell-by-fold lattice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridResult {
    pub records: Vec<GridRecord>,
}

impl GridResult {
    pub fn accuracies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.accuracy).collect()
    }

    pub fn train_seconds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.train_seconds).collect()
    }

    pub fn n_svs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.n_sv as f64).collect()
    }

    /// Derivation time counted once per `(kernel, fold)`.
    pub fn total_derive_seconds(&self) -> f64 {
        let mut seen: HashMap<(String, usize), f64> = HashMap::new();
        for r in &self.records {
            seen.insert((r.kernel.to_string(), r.fold), r.derive_seconds);
        }
        seen.values().sum()
    }
}

fn kernel_param(k: &KernelSpec) -> String {
    match *k {
        KernelSpec::Gaussian { g } => text::fmt_real(g),
        KernelSpec::Polynomial { degree } => degree.to_string(),
        KernelSpec::Linear => "0".into(),
    }
}

/// Comma-separated table with one row per record.
pub fn write_grid_csv(results: &[&GridResult]) -> String {
    let mut out = String::from("c_prime,g,fold,solver,accuracy,train_seconds,n_sv,derive_seconds\n");
    for res in results {
        for r in &res.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                text::fmt_real(r.c_prime),
                kernel_param(&r.kernel),
                r.fold,
                r.solver,
                if r.accuracy.is_nan() { "nan".into() } else { text::fmt_real(r.accuracy) },
                text::fmt_real(r.train_seconds),
                r.n_sv,
                text::fmt_real(r.derive_seconds),
            ));
        }
    }
    out
}

fn record(c_prime: f64, kernel: KernelSpec, fold: usize, solver: SolverKind, derive_seconds: f64, outcome: Result<(SvmModel, f64)>) -> GridRecord {
    let (accuracy, train_seconds, n_sv, error) = match outcome {
        Ok((m, acc)) => (100.0 * acc, m.info.train_seconds, m.n_sv(), None),
        Err(e) => (f64::NAN, 0.0, 0, Some(e.to_string())),
    };
    GridRecord { c_prime, kernel, fold, solver, accuracy, train_seconds, n_sv, derive_seconds, error }
}

fn run_block(ds: &Dataset, grid: &GridSpec, kernel: KernelSpec, fold: usize, train_idx: &[usize], test_idx: &[usize]) -> Vec<(GridRecord, GridRecord)> {
    let (train, test) = match (ds.subset(train_idx), ds.subset(test_idx)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            let msg = e.to_string();
            return grid
                .c_primes
                .iter()
                .map(|&c| {
                    let fail = |s| record(c, kernel, fold, s, 0.0, Err(Error::invalid(msg.clone())));
                    (fail(SolverKind::Exact), fail(SolverKind::Aesvm))
                })
                .collect();
        }
    };
    let start = Instant::now();
    let rs = extremes::derive_rs(&train, &grid.derive, &kernel);
    let derive_seconds = start.elapsed().as_secs_f64();
    grid.c_primes
        .iter()
        .map(|&c| {
            let cfg = TrainConfig { c_prime: c, ..grid.train.clone() };
            let exact = train_exact(&train, &kernel, &cfg).map(|m| {
                let acc = predict(&m, &test).1;
                (m, acc)
            });
            let approx = match &rs {
                Ok(rs) => train_aesvm(rs, &kernel, &cfg).map(|m| {
                    let acc = predict(&m, &test).1;
                    (m, acc)
                }),
                Err(e) => Err(Error::invalid(format!("derivation failed: {e}"))),
            };
            (
                record(c, kernel, fold, SolverKind::Exact, 0.0, exact),
                record(c, kernel, fold, SolverKind::Aesvm, derive_seconds, approx),
            )
        })
        .collect()
}

/// Trains both solvers on every cell and fold.
///
/// The representative set is derived once per `(kernel, fold)` from that
/// fold's training part and shared by all C' values. Records come back
/// kernel-major, then fold, then C', for any `jobs`.
pub fn grid_search(ds: &Dataset, grid: &GridSpec, jobs: usize) -> Result<(GridResult, GridResult)> {
    grid.validate()?;
    let plan = make_folds(ds.len(), grid.folds, grid.seed)?;
    let blocks: Vec<(KernelSpec, usize)> = grid
        .kernels
        .iter()
        .flat_map(|&k| (0..grid.folds).map(move |f| (k, f)))
        .collect();
    let run = |&(k, f): &(KernelSpec, usize)| {
        let (tr, te) = plan.split(f);
        run_block(ds, grid, k, f, &tr, &te)
    };
    let outputs: Vec<Vec<(GridRecord, GridRecord)>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| blocks.par_iter().map(run).collect())
    } else {
        blocks.iter().map(run).collect()
    };
    let mut exact = GridResult::default();
    let mut approx = GridResult::default();
    for (e, a) in outputs.into_iter().flatten() {
        exact.records.push(e);
        approx.records.push(a);
    }
    Ok((exact, approx))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::invalid(format!("need two nonempty equal-length lists, got {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// `sqrt(mean((cl - cf)²))`.
pub fn rmse(cl: &[f64], cf: &[f64]) -> Result<f64> {
    check_pair(cl, cf)?;
    let s: f64 = cl.iter().zip(cf).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((s / cl.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedups {
    pub ets: f64,
    pub ots: f64,
    pub ecs: f64,
    pub ocs: f64,
}

/// Training-time and classification-time speedups of a fast solver (F)
/// over a reference (L). `t_derive` is added to the fast side's total.
pub fn speedups(tl: &[f64], tf: &[f64], nl: &[f64], nf: &[f64], t_derive: f64) -> Result<Speedups> {
    check_pair(tl, tf)?;
    check_pair(nl, nf)?;
    let mean_ratio = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x / y).sum::<f64>() / a.len() as f64;
    let sum = |a: &[f64]| a.iter().sum::<f64>();
    Ok(Speedups {
        ets: mean_ratio(tl, tf),
        ots: sum(tl) / (sum(tf) + t_derive),
        ecs: mean_ratio(nl, nf),
        ocs: sum(nl) / sum(nf),
    })
}

/// RMSE and speedups of `fast` against `reference`, over records that
/// trained successfully on both sides.
pub fn compare(reference: &GridResult, fast: &GridResult) -> Result<(f64, Speedups)> {
    if reference.records.len() != fast.records.len() {
        return Err(Error::invalid("grid results have different shapes"));
    }
    let ok: Vec<usize> = (0..reference.records.len())
        .filter(|&i| reference.records[i].error.is_none() && fast.records[i].error.is_none())
        .collect();
    let pick = |v: Vec<f64>| ok.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let r = rmse(&pick(reference.accuracies()), &pick(fast.accuracies()))?;
    let s = speedups(
        &pick(reference.train_seconds()),
        &pick(fast.train_seconds()),
        &pick(reference.n_svs()),
        &pick(fast.n_svs()),
        fast.total_derive_seconds(),
    )?;
    Ok((r, s))
}

/// Trace of the Gram approximation error against its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceBound {
    /// `Trace(G - G̃)`.
    pub lhs: f64,
    /// `Nε + 2 Σ_t z_tᵀ Σ_i γ_t^i τ_i`.
    pub rhs: f64,
    /// Numerical rank of `G̃`.
    pub rank: usize,
    pub m: usize,
}

impl TraceBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn rank_ok(&self) -> bool {
        self.rank <= self.m
    }
}

/// Number of pivots a diagonal-pivoted Cholesky factorisation of the
/// symmetric positive semidefinite `a` (row-major, `n × n`) takes before
/// the remaining diagonal drops below `rel_tol` times the largest one.
pub fn pivoted_cholesky_rank(a: &[f64], n: usize, rel_tol: f64) -> usize {
    assert_eq!(a.len(), n * n);
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let scale = d.iter().cloned().fold(0.0, f64::max);
    if scale <= 0.0 {
        return 0;
    }
    let mut l: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let mut p = usize::MAX;
        let mut best = rel_tol * scale;
        for i in 0..n {
            if !used[i] && d[i] > best {
                best = d[i];
                p = i;
            }
        }
        if p == usize::MAX || l.len() == n {
            return l.len();
        }
        used[p] = true;
        let piv = d[p].sqrt();
        let col: Vec<f64> = (0..n)
            .map(|i| {
                if used[i] && i != p {
                    return 0.0;
                }
                let s: f64 = l.iter().map(|c| c[i] * c[p]).sum();
                (a[i * n + p] - s) / piv
            })
            .collect();
        for i in 0..n {
            if !used[i] {
                d[i] -= col[i] * col[i];
            }
        }
        l.push(col);
    }
}

/// Dense check of the Gram trace bound. Needs the gamma matrix and
/// `ds.len() <= cap`.
pub fn gram_trace_bound(ds: &Dataset, rs: &RepresentativeSet, spec: &KernelSpec, cap: usize) -> Result<TraceBound> {
    let gamma = rs.gamma.as_ref().ok_or(Error::MissingGamma)?;
    let n = ds.len();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    if gamma.rows.len() != n {
        return Err(Error::invalid("gamma rows do not match the dataset"));
    }
    let m = rs.len();
    let rep_norms: Vec<f64> = rs.vectors.iter().map(|x| x.norm_sq()).collect();
    // representative Gram and cross kernel K(x_t, x_i)
    let mut kr = vec![0.0; m * m];
    for t in 0..m {
        for s in 0..=t {
            let v = spec.eval_with_norms(&rs.vectors[t], &rs.vectors[s], rep_norms[t], rep_norms[s]);
            kr[t * m + s] = v;
            kr[s * m + t] = v;
        }
    }
    // b[i][s] = Σ_t γ_t^i K*_ts
    let b: Vec<Vec<f64>> = gamma
        .rows
        .iter()
        .map(|row| {
            let mut v = vec![0.0; m];
            for &(t, g) in row {
                for (s, x) in v.iter_mut().enumerate() {
                    *x += g * kr[t * m + s];
                }
            }
            v
        })
        .collect();

    let mut lhs = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let row = &gamma.rows[i];
        let kii = spec.eval_with_norms(ds.vector(i), ds.vector(i), ds.sq_norm(i), ds.sq_norm(i));
        let uu: f64 = row.iter().map(|&(s, g)| g * b[i][s]).sum();
        lhs += kii - uu;
        for &(t, g) in row {
            let kti = spec.eval_with_norms(&rs.vectors[t], ds.vector(i), rep_norms[t], ds.sq_norm(i));
            cross += g * (kti - b[i][t]);
        }
    }
    let rhs = n as f64 * rs.meta.epsilon + 2.0 * cross;

    let y: Vec<f64> = ds.labels().iter().map(|&v| f64::from(v)).collect();
    let mut gt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = gamma.rows[j].iter().map(|&(s, g)| g * b[i][s]).sum::<f64>() * y[i] * y[j];
            gt[i * n + j] = v;
            gt[j * n + i] = v;
        }
    }
    let rank = pivoted_cholesky_rank(&gt, n, 1e-10);
    Ok(TraceBound { lhs, rhs, rank, m })
}

/// Objective gaps between the exact and representative-set solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `C = C' N`.
    pub c: f64,
    pub epsilon: f64,
    pub kkt_tol: f64,
    pub f1_exact: f64,
    pub f2_aesvm: f64,
    pub f1_aesvm: f64,
    /// Present when the gamma matrix is available.
    pub f3_aesvm: Option<f64>,
    pub w_sq_exact: f64,
    pub w_sq_aesvm: f64,
    /// `F1(exact) - F2(aesvm)`.
    pub gap_a: f64,
    /// `C sqrt(C ε)`.
    pub bound_a: f64,
    /// `F1(aesvm) - F1(exact)`.
    pub gap_b: f64,
    /// `2 C sqrt(C ε)`.
    pub bound_b: f64,
}

impl BoundReport {
    /// Pure arithmetic on already computed objective values.
    pub fn from_objectives(f1_exact: f64, f2_aesvm: f64, f1_aesvm: f64, c_prime: f64, n: usize, epsilon: f64, kkt_tol: f64) -> Self {
        let c = c_prime * n as f64;
        let bound_a = c * (c * epsilon).sqrt();
        Self {
            c,
            epsilon,
            kkt_tol,
            f1_exact,
            f2_aesvm,
            f1_aesvm,
            f3_aesvm: None,
            w_sq_exact: f64::NAN,
            w_sq_aesvm: f64::NAN,
            gap_a: f1_exact - f2_aesvm,
            bound_a,
            gap_b: f1_aesvm - f1_exact,
            bound_b: 2.0 * bound_a,
        }
    }

    /// Solver slack added to the first gap bound.
    pub fn slack(&self) -> f64 {
        10.0 * self.kkt_tol * self.c
    }

    pub fn gap_a_ok(&self) -> bool {
        self.gap_a <= self.bound_a + self.slack()
    }

    pub fn gap_b_within(&self) -> bool {
        self.gap_b <= self.bound_b
    }

    /// `F3 <= F2` at the representative-set solution, when F3 is known.
    pub fn f3_le_f2(&self) -> Option<bool> {
        self.f3_aesvm.map(|f3| f3 <= self.f2_aesvm)
    }

    pub fn w_norms_ok(&self) -> bool {
        self.w_sq_exact <= self.c && self.w_sq_aesvm <= self.c
    }
}

/// Evaluates all objectives and assembles the report.
pub fn bound_report(ds: &Dataset, rs: &RepresentativeSet, exact: &SvmModel, aesvm: &SvmModel, c_prime: f64, kkt_tol: f64) -> BoundReport {
    let f1_exact = objective_f1(exact, ds, c_prime);
    let f2 = objective_f2(aesvm, rs, c_prime);
    let f1_aesvm = objective_f1(aesvm, ds, c_prime);
    let mut r = BoundReport::from_objectives(f1_exact, f2, f1_aesvm, c_prime, ds.len(), rs.meta.epsilon, kkt_tol);
    r.f3_aesvm = objective_f3(aesvm, ds, rs, c_prime).ok();
    r.w_sq_exact = exact.w_norm_sq();
    r.w_sq_aesvm = aesvm.w_norm_sq();
    r
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "C = {}", self.c)?;
        writeln!(f, "epsilon = {}", self.epsilon)?;
        writeln!(f, "F1(exact) = {}", self.f1_exact)?;
        writeln!(f, "F2(aesvm) = {}", self.f2_aesvm)?;
        writeln!(f, "F1(aesvm) = {}", self.f1_aesvm)?;
        match self.f3_aesvm {
            Some(v) => writeln!(f, "F3(aesvm) = {v}")?,
            None => writeln!(f, "F3(aesvm) = unavailable")?,
        }
        if let Some(ok) = self.f3_le_f2() {
            writeln!(f, "F3 <= F2: {}", yes_no(ok))?;
        }
        writeln!(f, "|w|^2 exact = {}, aesvm = {}, C = {}", self.w_sq_exact, self.w_sq_aesvm, self.c)?;
        writeln!(
            f,
            "gap_a = F1(exact) - F2(aesvm) = {} vs C*sqrt(C*eps) = {} (+ slack {}): {}",
            self.gap_a,
            self.bound_a,
            self.slack(),
            yes_no(self.gap_a_ok())
        )?;
        writeln!(
            f,
            "gap_b = F1(aesvm) - F1(exact) = {} vs 2*C*sqrt(C*eps) = {}: {} (monitored)",
            self.gap_b,
            self.bound_b,
            yes_no(self.gap_b_within())
        )
    }
}
