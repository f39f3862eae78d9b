//! Box-constrained SVM dual solver, trained models, and primal objectives.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::data::{Dataset, SparseVector};
use crate::error::{Error, Result};
use crate::extremes::RepresentativeSet;
use crate::kernel::{KernelCache, KernelSpec, DEFAULT_CACHE_BYTES};
use crate::text;

/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Penalty per sample, the `C/N` of the primal.
    pub c_prime: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub kkt_tol: f64,
    pub max_iter: usize,
    pub cache_bytes: usize,
    /// Temporarily drop variables stuck at a bound from the working set.
    pub shrinking: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c_prime: 1.0,
            kkt_tol: 1e-3,
            max_iter: 10_000_000,
            cache_bytes: DEFAULT_CACHE_BYTES,
            shrinking: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_prime > 0.0 && self.c_prime.is_finite()) {
            return Err(Error::invalid(format!("C' must be positive, got {}", self.c_prime)));
        }
        if !(self.kkt_tol > 0.0 && self.kkt_tol.is_finite()) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", self.kkt_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// `Σα - ½αᵀQα` at the returned point.
    pub objective: f64,
    /// Maximal KKT violation over all variables at exit.
    pub max_violation: f64,
    /// Set when `max_iter` stopped the solver before convergence.
    pub hit_max_iter: bool,
}

struct Problem<'a> {
    vectors: &'a [SparseVector],
    norms: Vec<f64>,
    y: Vec<f64>,
    upper: &'a [f64],
    spec: KernelSpec,
    diag: Vec<f64>,
    cache: KernelCache,
}

impl Problem<'_> {
    /// Row `i` of the kernel matrix (unsigned).
    fn row(&mut self, i: usize) -> Arc<[f64]> {
        let (vectors, norms, spec) = (self.vectors, &self.norms, &self.spec);
        self.cache.get_or_insert_with(i, || {
            let (xi, ni) = (&vectors[i], norms[i]);
            vectors
                .iter()
                .zip(norms)
                .map(|(x, &n)| spec.eval_with_norms(xi, x, ni, n))
                .collect()
        })
    }

    #[inline]
    fn in_up(&self, t: usize, a: f64) -> bool {
        if self.y[t] > 0.0 {
            a < self.upper[t]
        } else {
            a > 0.0
        }
    }

    #[inline]
    fn in_low(&self, t: usize, a: f64) -> bool {
        if self.y[t] > 0.0 {
            a > 0.0
        } else {
            a < self.upper[t]
        }
    }
}

/// `max_{I_up} -yG` and `max_{I_low} yG` over `set`, with the arg of the first.
fn extremes_of(pb: &Problem, alpha: &[f64], grad: &[f64], set: &[usize]) -> (f64, usize, f64) {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmax_idx = usize::MAX;
    let mut gmax2 = f64::NEG_INFINITY;
    for &t in set {
        let yg = pb.y[t] * grad[t];
        if pb.in_up(t, alpha[t]) && -yg > gmax {
            gmax = -yg;
            gmax_idx = t;
        }
        if pb.in_low(t, alpha[t]) && yg > gmax2 {
            gmax2 = yg;
        }
    }
    (gmax, gmax_idx, gmax2)
}

/// Maximises `Σα - ½ΣΣ α_t α_s y_t y_s K(z_t, z_s)` subject to
/// `0 ≤ α_t ≤ upper[t]` and `Σ α_t y_t = 0`.
///
/// Pairs are chosen by second-order working-set selection. The bias is
/// the average KKT offset over free variables, or the midpoint of the
/// feasible interval when none are free.
pub fn solve_weighted_smo(
    vectors: &[SparseVector],
    labels: &[i8],
    upper: &[f64],
    spec: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<DualSolution> {
    cfg.validate()?;
    let n = vectors.len();
    if labels.len() != n || upper.len() != n {
        return Err(Error::invalid("vectors, labels and bounds differ in length"));
    }
    if !labels.iter().any(|&y| y > 0) {
        return Err(Error::SingleClass("-1"));
    }
    if !labels.iter().any(|&y| y < 0) {
        return Err(Error::SingleClass("+1"));
    }
    if let Some(u) = upper.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        return Err(Error::invalid(format!("upper bounds must be positive, got {u}")));
    }
    let norms: Vec<f64> = vectors.iter().map(SparseVector::norm_sq).collect();
    let diag = vectors.iter().zip(&norms).map(|(x, &s)| spec.eval_with_norms(x, x, s, s)).collect();
    let mut pb = Problem {
        vectors,
        y: labels.iter().map(|&y| f64::from(y)).collect(),
        norms,
        upper,
        spec: *spec,
        diag,
        cache: KernelCache::new(cfg.cache_bytes),
    };

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut active: Vec<usize> = (0..n).collect();
    let shrink_every = n.clamp(1, 1000);
    let mut countdown = shrink_every;
    let mut iterations = 0;
    let mut hit_max_iter = false;

    loop {
        if cfg.shrinking {
            countdown -= 1;
            if countdown == 0 {
                countdown = shrink_every;
                let (g1, _, g2) = extremes_of(&pb, &alpha, &grad, &active);
                active.retain(|&t| !can_shrink(&pb, t, alpha[t], grad[t], g1, g2));
            }
        }
        let Some((i, j)) = select_pair(&mut pb, &alpha, &grad, &active, cfg.kkt_tol) else {
            if active.len() < n {
                reconstruct_gradient(&mut pb, &alpha, &mut grad);
                active = (0..n).collect();
                countdown = shrink_every;
                continue;
            }
            break;
        };
        if iterations >= cfg.max_iter {
            hit_max_iter = true;
            break;
        }
        iterations += 1;

        let row_i = pb.row(i);
        let row_j = pb.row(j);
        let (yi, yj) = (pb.y[i], pb.y[j]);
        let (ci, cj) = (pb.upper[i], pb.upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (pb.diag[i] + pb.diag[j] - 2.0 * row_i[j]).max(TAU);
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = ((ai - old_i) * yi, (aj - old_j) * yj);
        for &t in &active {
            grad[t] += pb.y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }

    if active.len() < n {
        reconstruct_gradient(&mut pb, &alpha, &mut grad);
    }
    let all: Vec<usize> = (0..n).collect();
    let (g1, _, g2) = extremes_of(&pb, &alpha, &grad, &all);
    let max_violation = (g1 + g2).max(0.0);
    let objective = alpha.iter().zip(&grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>() / 2.0;
    let bias = compute_bias(&pb, &alpha, &grad);
    if !objective.is_finite() || !bias.is_finite() {
        return Err(Error::Numerical("non-finite dual solution".into()));
    }
    Ok(DualSolution {
        alphas: alpha,
        bias,
        iterations,
        objective,
        max_violation,
        hit_max_iter,
    })
}

fn select_pair(pb: &mut Problem, alpha: &[f64], grad: &[f64], active: &[usize], tol: f64) -> Option<(usize, usize)> {
    let (gmax, i, gmax2) = extremes_of(pb, alpha, grad, active);
    if i == usize::MAX || gmax + gmax2 < tol {
        return None;
    }
    let row_i = pb.row(i);
    let mut best = f64::INFINITY;
    let mut j = usize::MAX;
    for &t in active {
        if !pb.in_low(t, alpha[t]) {
            continue;
        }
        let b = gmax + pb.y[t] * grad[t];
        if b > 0.0 {
            let a = (pb.diag[i] + pb.diag[t] - 2.0 * row_i[t]).max(TAU);
            let obj = -b * b / a;
            if obj < best {
                best = obj;
                j = t;
            }
        }
    }
    (j != usize::MAX).then_some((i, j))
}

fn can_shrink(pb: &Problem, t: usize, a: f64, g: f64, gmax1: f64, gmax2: f64) -> bool {
    let pos = pb.y[t] > 0.0;
    if a >= pb.upper[t] {
        if pos { -g > gmax1 } else { -g > gmax2 }
    } else if a <= 0.0 {
        if pos { g > gmax2 } else { g > gmax1 }
    } else {
        false
    }
}

fn reconstruct_gradient(pb: &mut Problem, alpha: &[f64], grad: &mut [f64]) {
    grad.iter_mut().for_each(|g| *g = -1.0);
    for s in 0..alpha.len() {
        if alpha[s] > 0.0 {
            let row = pb.row(s);
            let c = alpha[s] * pb.y[s];
            for (t, g) in grad.iter_mut().enumerate() {
                *g += pb.y[t] * c * row[t];
            }
        }
    }
}

fn compute_bias(pb: &Problem, alpha: &[f64], grad: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = pb.y[t] * grad[t];
        let pos = pb.y[t] > 0.0;
        if alpha[t] >= pb.upper[t] {
            if pos {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= 0.0 {
            if pos {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    -rho
}

/// What a model was trained on and how the solve went.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelInfo {
    /// Number of training vectors (N for exact, M for representatives).
    pub n_train: usize,
    pub c_prime: f64,
    pub kkt_tol: f64,
    pub iterations: usize,
    pub hit_max_iter: bool,
    /// Wall-clock solve time; not persisted.
    pub train_seconds: f64,
}

/// Kernel expansion `f(x) = Σ α_t y_t K(x_t, x) + b` over support vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    sv: Vec<SparseVector>,
    sv_norms: Vec<f64>,
    sv_labels: Vec<i8>,
    sv_alphas: Vec<f64>,
    bias: f64,
    kernel: KernelSpec,
    pub info: ModelInfo,
}

impl SvmModel {
    /// Builds a model, dropping any entry whose multiplier is not positive.
    pub fn new(sv: Vec<SparseVector>, sv_labels: Vec<i8>, sv_alphas: Vec<f64>, bias: f64, kernel: KernelSpec) -> Result<Self> {
        if sv.len() != sv_labels.len() || sv.len() != sv_alphas.len() {
            return Err(Error::invalid("support vectors, labels and multipliers differ in length"));
        }
        let keep: Vec<usize> = (0..sv.len()).filter(|&t| sv_alphas[t] > 0.0).collect();
        let sv: Vec<SparseVector> = keep.iter().map(|&t| sv[t].clone()).collect();
        Ok(Self {
            sv_norms: sv.iter().map(SparseVector::norm_sq).collect(),
            sv,
            sv_labels: keep.iter().map(|&t| sv_labels[t]).collect(),
            sv_alphas: keep.iter().map(|&t| sv_alphas[t]).collect(),
            bias,
            kernel,
            info: ModelInfo::default(),
        })
    }

    fn from_solution(vectors: &[SparseVector], labels: &[i8], sol: &DualSolution, kernel: KernelSpec) -> Result<Self> {
        let keep: Vec<usize> = (0..vectors.len()).filter(|&t| sol.alphas[t] > 0.0).collect();
        Self::new(
            keep.iter().map(|&t| vectors[t].clone()).collect(),
            keep.iter().map(|&t| labels[t]).collect(),
            keep.iter().map(|&t| sol.alphas[t]).collect(),
            sol.bias,
            kernel,
        )
    }

    pub fn support_vectors(&self) -> &[SparseVector] {
        &self.sv
    }

    pub fn sv_labels(&self) -> &[i8] {
        &self.sv_labels
    }

    pub fn sv_alphas(&self) -> &[f64] {
        &self.sv_alphas
    }

    pub fn n_sv(&self) -> usize {
        self.sv.len()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Copy with a different bias.
    pub fn with_bias(&self, bias: f64) -> Self {
        Self { bias, ..self.clone() }
    }

    fn expansion(&self, x: &SparseVector, x_sq: f64) -> f64 {
        let mut s = 0.0;
        for t in 0..self.sv.len() {
            let k = self.kernel.eval_with_norms(&self.sv[t], x, self.sv_norms[t], x_sq);
            s += self.sv_alphas[t] * f64::from(self.sv_labels[t]) * k;
        }
        s
    }

    /// `‖w‖² = ΣΣ α_t α_s y_t y_s K(x_t, x_s)`.
    pub fn w_norm_sq(&self) -> f64 {
        let mut total = 0.0;
        for t in 0..self.sv.len() {
            let ct = self.sv_alphas[t] * f64::from(self.sv_labels[t]);
            total += ct * self.expansion(&self.sv[t], self.sv_norms[t]);
        }
        total.max(0.0)
    }
}

pub fn decision_value(model: &SvmModel, x: &SparseVector) -> f64 {
    model.expansion(x, x.norm_sq()) + model.bias
}

/// Decision values for every vector of `ds`, in order.
pub fn decision_values(model: &SvmModel, ds: &Dataset) -> Vec<f64> {
    (0..ds.len())
        .map(|i| model.expansion(ds.vector(i), ds.sq_norm(i)) + model.bias)
        .collect()
}

/// Predicted labels (zero counts as +1) and the fraction predicted correctly.
pub fn predict(model: &SvmModel, ds: &Dataset) -> (Vec<i8>, f64) {
    let labels: Vec<i8> = decision_values(model, ds).iter().map(|&f| if f >= 0.0 { 1 } else { -1 }).collect();
    let correct = labels.iter().zip(ds.labels()).filter(|(a, b)| a == b).count();
    let acc = correct as f64 / ds.len() as f64;
    (labels, acc)
}

/// Solves with per-vector bounds `c_prime * weights[t]` and packages the
/// support vectors.
pub fn train_weighted(vectors: &[SparseVector], labels: &[i8], weights: &[f64], spec: &KernelSpec, cfg: &TrainConfig) -> Result<SvmModel> {
    let upper: Vec<f64> = weights.iter().map(|w| cfg.c_prime * w).collect();
    let start = Instant::now();
    let sol = solve_weighted_smo(vectors, labels, &upper, spec, cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let mut model = SvmModel::from_solution(vectors, labels, &sol, *spec)?;
    model.info = ModelInfo {
        n_train: vectors.len(),
        c_prime: cfg.c_prime,
        kkt_tol: cfg.kkt_tol,
        iterations: sol.iterations,
        hit_max_iter: sol.hit_max_iter,
        train_seconds: secs,
    };
    Ok(model)
}

/// Standard soft-margin SVM: every bound equals `C'`.
pub fn train_exact(ds: &Dataset, spec: &KernelSpec, cfg: &TrainConfig) -> Result<SvmModel> {
    train_weighted(ds.vectors(), ds.labels(), &vec![1.0; ds.len()], spec, cfg)
}

/// Trains on a representative set with bounds `C' β_t`. `spec` must match
/// the kernel the set was derived with.
pub fn train_aesvm(rs: &RepresentativeSet, spec: &KernelSpec, cfg: &TrainConfig) -> Result<SvmModel> {
    if *spec != rs.meta.kernel {
        return Err(Error::KernelMismatch {
            expected: spec.to_string(),
            found: rs.meta.kernel.to_string(),
        });
    }
    train_weighted(&rs.vectors, &rs.labels, &rs.betas, spec, cfg)
}

#[inline]
fn hinge(margin: f64) -> f64 {
    (1.0 - margin).max(0.0)
}

/// `½‖w‖² + C' Σ_i hinge(y_i f(x_i))` over the full dataset.
pub fn objective_f1(model: &SvmModel, ds: &Dataset, c_prime: f64) -> f64 {
    let loss: f64 = decision_values(model, ds)
        .iter()
        .zip(ds.labels())
        .map(|(&f, &y)| hinge(f64::from(y) * f))
        .sum();
    0.5 * model.w_norm_sq() + c_prime * loss
}

/// `½‖w‖² + C' Σ_t β_t hinge(y_t f(x_t))` over the representatives.
pub fn objective_f2(model: &SvmModel, rs: &RepresentativeSet, c_prime: f64) -> f64 {
    let loss: f64 = (0..rs.len())
        .map(|t| rs.betas[t] * hinge(f64::from(rs.labels[t]) * decision_value(model, &rs.vectors[t])))
        .sum();
    0.5 * model.w_norm_sq() + c_prime * loss
}

/// Like [`objective_f1`] but each source vector is replaced by its
/// reconstruction `Σ_t γ_t^i φ(x_t)` from the representatives.
pub fn objective_f3(model: &SvmModel, ds: &Dataset, rs: &RepresentativeSet, c_prime: f64) -> Result<f64> {
    let gamma = rs.gamma.as_ref().ok_or(Error::MissingGamma)?;
    if gamma.rows.len() != ds.len() {
        return Err(Error::invalid("gamma rows do not match the dataset"));
    }
    let rep_f: Vec<f64> = rs.vectors.iter().map(|x| model.expansion(x, x.norm_sq())).collect();
    let mut loss = 0.0;
    for (i, row) in gamma.rows.iter().enumerate() {
        let wu: f64 = row.iter().map(|&(t, g)| g * rep_f[t]).sum();
        loss += hinge(f64::from(ds.label(i)) * (wu + model.bias));
    }
    Ok(0.5 * model.w_norm_sq() + c_prime * loss)
}

const MODEL_MAGIC: &str = "#AESVM-MODEL v1";

pub fn write_model(model: &SvmModel) -> String {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    let i = &model.info;
    let _ = writeln!(out, "#c_prime {}", text::fmt_real(i.c_prime));
    let _ = writeln!(out, "#n_train {}", i.n_train);
    let _ = writeln!(out, "kernel {}", model.kernel);
    let _ = writeln!(out, "bias {}", text::fmt_real(model.bias));
    let _ = writeln!(out, "nsv {}", model.n_sv());
    for t in 0..model.n_sv() {
        out.push_str(text::fmt_label(model.sv_labels[t]));
        out.push(' ');
        out.push_str(&text::fmt_real(model.sv_alphas[t]));
        text::push_entries(&mut out, &model.sv[t]);
        out.push('\n');
    }
    out
}

pub fn parse_model(input: &str) -> Result<SvmModel> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, MODEL_MAGIC)) => {}
        Some((line, _)) => return Err(Error::format(line, format!("expected `{MODEL_MAGIC}` header"))),
        None => return Err(Error::EmptyInput),
    }
    let (mut kernel, mut bias, mut nsv) = (None, None, None);
    let mut info = ModelInfo::default();
    let (mut sv, mut labels, mut alphas) = (Vec::new(), Vec::new(), Vec::new());
    for (line, l) in lines {
        if let Some(h) = l.strip_prefix('#') {
            if let Some((k, v)) = h.split_once(' ') {
                match k {
                    "c_prime" => info.c_prime = text::parse_real(v.trim(), line)?,
                    "n_train" => info.n_train = v.trim().parse().map_err(|_| Error::parse(line, "bad #n_train"))?,
                    _ => {}
                }
            }
            continue;
        }
        let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match key {
            "kernel" if kernel.is_none() => {
                kernel = Some(rest.trim().parse::<KernelSpec>().map_err(|e| Error::parse(line, e.to_string()))?)
            }
            "bias" if bias.is_none() => bias = Some(text::parse_real(rest.trim(), line)?),
            "nsv" if nsv.is_none() => {
                nsv = Some(rest.trim().parse::<usize>().map_err(|_| Error::parse(line, "bad nsv"))?)
            }
            _ => {
                if kernel.is_none() || bias.is_none() || nsv.is_none() {
                    return Err(Error::format(line, "support vector before kernel/bias/nsv header"));
                }
                let mut toks = l.split_whitespace();
                labels.push(text::parse_label(toks.next().unwrap_or(""), line)?);
                let a = text::parse_real(toks.next().ok_or_else(|| Error::parse(line, "missing alpha"))?, line)?;
                if a <= 0.0 {
                    return Err(Error::format(line, "support vector multiplier must be positive"));
                }
                alphas.push(a);
                sv.push(text::parse_entries(toks, line)?);
            }
        }
    }
    let kernel = kernel.ok_or_else(|| Error::format(0, "missing kernel line"))?;
    let bias = bias.ok_or_else(|| Error::format(0, "missing bias line"))?;
    let nsv = nsv.ok_or_else(|| Error::format(0, "missing nsv line"))?;
    if nsv != sv.len() {
        return Err(Error::format(0, format!("nsv says {nsv} but {} support vectors follow", sv.len())));
    }
    let mut model = SvmModel::new(sv, labels, alphas, bias, kernel)?;
    model.info = info;
    Ok(model)
}
