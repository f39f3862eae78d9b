//! Quadratic programs over the probability simplex in kernel space:
//! the enclosing-ball dual, distance ordering, and nearest-point-in-hull.

use crate::data::Dataset;
use crate::kernel::KernelSpec;

/// Threshold separating surface multipliers from numerical zeros.
pub const SURFACE_ALPHA: f64 = 1e-8;
/// Pairwise improvement at which the enclosing-ball dual stops.
pub const SVDD_TOL: f64 = 1e-6;

/// Dense kernel matrix over a list of dataset indices.
#[derive(Debug, Clone)]
pub(crate) struct LocalGram {
    n: usize,
    k: Vec<f64>,
}

impl LocalGram {
    pub(crate) fn new(idx: &[usize], spec: &KernelSpec, ds: &Dataset) -> Self {
        let n = idx.len();
        let mut k = vec![0.0; n * n];
        for a in 0..n {
            let (xa, na) = (ds.vector(idx[a]), ds.sq_norm(idx[a]));
            k[a * n + a] = spec.eval_with_norms(xa, xa, na, na);
            for b in 0..a {
                let v = spec.eval_with_norms(xa, ds.vector(idx[b]), na, ds.sq_norm(idx[b]));
                k[a * n + b] = v;
                k[b * n + a] = v;
            }
        }
        Self { n, k }
    }

    #[inline]
    pub(crate) fn at(&self, a: usize, b: usize) -> f64 {
        self.k[a * self.n + b]
    }

    #[inline]
    pub(crate) fn row(&self, a: usize) -> &[f64] {
        &self.k[a * self.n..(a + 1) * self.n]
    }

}

/// How a simplex solve may terminate early.
#[derive(Debug, Clone, Copy)]
pub(crate) enum StopRule {
    /// Run until no pairwise exchange improves by more than the tolerance.
    Converge,
    /// Also stop once `value <= eps` or `value - gap > eps` settles the
    /// comparison against `eps`.
    Decide(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    /// Weights aligned with the candidate list.
    pub mu: Vec<f64>,
    /// `μᵀQμ - linᵀμ` at `mu`.
    pub value: f64,
}

/// Minimises `μᵀQμ - linᵀμ` over the simplex with `Q = G[cand, cand]`.
///
/// Pairwise steps move mass from the highest-gradient support member to
/// the member with the largest second-order gain, with exact line search.
pub(crate) fn simplex_min(
    gram: &LocalGram,
    cand: &[usize],
    lin: &[f64],
    mut mu: Vec<f64>,
    tol: f64,
    max_iter: usize,
    stop: StopRule,
    constant: f64,
) -> SimplexSolution {
    let m = cand.len();
    debug_assert_eq!(lin.len(), m);
    debug_assert_eq!(mu.len(), m);
    // qmu = Q μ
    let mut qmu = vec![0.0; m];
    for (s, &ms) in mu.iter().enumerate() {
        if ms > 0.0 {
            let row = gram.row(cand[s]);
            for (t, q) in qmu.iter_mut().enumerate() {
                *q += ms * row[cand[t]];
            }
        }
    }
    let mut iterations = 0usize;
    let mut gap;
    loop {
        // gradient 2Qμ - lin
        let mut dn = usize::MAX;
        let mut g_dn = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut g_dot_mu = 0.0;
        let mut value_part = 0.0;
        for t in 0..m {
            let g = 2.0 * qmu[t] - lin[t];
            g_min = g_min.min(g);
            if mu[t] > 0.0 {
                g_dot_mu += g * mu[t];
                value_part += mu[t] * (qmu[t] - lin[t]);
                if g > g_dn {
                    g_dn = g;
                    dn = t;
                }
            }
        }
        gap = (g_dot_mu - g_min).max(0.0);
        let value = value_part;
        // largest first-order improvement of any pairwise exchange
        if g_dn - g_min < tol || iterations >= max_iter {
            break;
        }
        if let StopRule::Decide(eps) = stop {
            let p = value + constant;
            if p <= eps || p - gap > eps {
                break;
            }
        }
        // second-order choice of the receiving coordinate
        let row_dn = gram.row(cand[dn]);
        let q_dd = row_dn[cand[dn]];
        let mut up = usize::MAX;
        let mut best = 0.0;
        let mut best_curv = 0.0;
        for t in 0..m {
            let g = 2.0 * qmu[t] - lin[t];
            let slope = g_dn - g;
            if slope <= 0.0 {
                continue;
            }
            let curv = gram.at(cand[t], cand[t]) + q_dd - 2.0 * row_dn[cand[t]];
            let gain = if curv > 1e-12 { slope * slope / curv } else { f64::INFINITY };
            if gain > best {
                best = gain;
                up = t;
                best_curv = curv;
            }
        }
        if up == usize::MAX {
            break;
        }
        let slope = g_dn - (2.0 * qmu[up] - lin[up]);
        let step = if best_curv > 1e-12 {
            (slope / (2.0 * best_curv)).min(mu[dn])
        } else {
            mu[dn]
        };
        if step <= 0.0 {
            break;
        }
        mu[dn] -= step;
        mu[up] += step;
        if mu[dn] < 1e-300 {
            mu[dn] = 0.0;
        }
        let row_up = gram.row(cand[up]);
        for (t, q) in qmu.iter_mut().enumerate() {
            let c = cand[t];
            *q += step * (row_up[c] - row_dn[c]);
        }
        iterations += 1;
    }
    let value = exact_value(gram, cand, lin, &mu);
    SimplexSolution { mu, value }
}

/// `μᵀQμ - linᵀμ` recomputed from the support, free of update drift.
fn exact_value(gram: &LocalGram, cand: &[usize], lin: &[f64], mu: &[f64]) -> f64 {
    let support: Vec<usize> = (0..mu.len()).filter(|&t| mu[t] > 0.0).collect();
    let mut quad = 0.0;
    let mut linear = 0.0;
    for &s in &support {
        let row = gram.row(cand[s]);
        let mut acc = 0.0;
        for &t in &support {
            acc += mu[t] * row[cand[t]];
        }
        quad += mu[s] * acc;
        linear += mu[s] * lin[s];
    }
    quad - linear
}

/// Hard-margin enclosing ball of the points in kernel space.
#[derive(Debug, Clone, PartialEq)]
pub struct SvddModel {
    /// Dataset indices the ball was fitted on.
    pub subset: Vec<usize>,
    /// Multipliers aligned with `subset`, on the simplex.
    pub alphas: Vec<f64>,
    /// Dataset indices whose multiplier exceeds the surface threshold.
    pub member_indices: Vec<usize>,
    pub radius_sq: f64,
    /// `ΣΣ α_j α_k K(x_j, x_k)`, the squared norm of the centre.
    pub center_norm_sq: f64,
}

pub(crate) fn svdd_local(gram: &LocalGram, positions: &[usize]) -> (Vec<f64>, f64, f64) {
    let m = positions.len();
    let diag: Vec<f64> = positions.iter().map(|&p| gram.at(p, p)).collect();
    if m == 1 {
        return (vec![1.0], 0.0, diag[0]);
    }
    // a vertex start keeps the multipliers sparse
    let mut mu = vec![0.0; m];
    mu[0] = 1.0;
    let sol = simplex_min(gram, positions, &diag, mu, SVDD_TOL, 10_000 * m, StopRule::Converge, 0.0);
    let center_norm_sq = sol.value + dot_slices(&sol.mu, &diag);
    let radius_sq = (-sol.value).max(0.0);
    (sol.mu, radius_sq, center_norm_sq)
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest enclosing hypersphere of `subset` in kernel space.
///
/// Solves `max Σα_i K_ii - ΣΣ α_i α_j K_ij` over the simplex to a
/// pairwise tolerance of [`SVDD_TOL`].
pub fn sphere_set(subset: &[usize], spec: &KernelSpec, ds: &Dataset) -> SvddModel {
    assert!(!subset.is_empty(), "sphere_set needs a nonempty subset");
    let gram = LocalGram::new(subset, spec, ds);
    let positions: Vec<usize> = (0..subset.len()).collect();
    let (alphas, radius_sq, center_norm_sq) = svdd_local(&gram, &positions);
    let member_indices = subset
        .iter()
        .zip(&alphas)
        .filter(|(_, &a)| a > SURFACE_ALPHA)
        .map(|(&i, _)| i)
        .collect();
    SvddModel {
        subset: subset.to_vec(),
        alphas,
        member_indices,
        radius_sq,
        center_norm_sq,
    }
}

/// Squared distances of `points` to the ball centre, all as local positions.
pub(crate) fn center_distances(gram: &LocalGram, ball: &[usize], alphas: &[f64], center_norm_sq: f64, points: &[usize]) -> Vec<f64> {
    points
        .iter()
        .map(|&p| {
            let row = gram.row(p);
            let cross: f64 = ball.iter().zip(alphas).map(|(&b, &a)| a * row[b]).sum();
            (gram.at(p, p) - 2.0 * cross + center_norm_sq).max(0.0)
        })
        .collect()
}

/// `points` ordered by descending squared distance to the centre of
/// `model`, ties by ascending dataset index.
pub fn sphere_sort(points: &[usize], model: &SvddModel, spec: &KernelSpec, ds: &Dataset) -> Vec<usize> {
    let mut all = model.subset.clone();
    all.extend_from_slice(points);
    let gram = LocalGram::new(&all, spec, ds);
    let ball: Vec<usize> = (0..model.subset.len()).collect();
    let pts: Vec<usize> = (model.subset.len()..all.len()).collect();
    let d = center_distances(&gram, &ball, &model.alphas, model.center_norm_sq, &pts);
    let mut keyed: Vec<(f64, usize)> = d.into_iter().zip(points.iter().copied()).collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Outcome of projecting one vector onto the hull of a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    /// `p_value <= epsilon`: the vector is represented by the candidates.
    pub is_approx_extreme: bool,
    /// Simplex weights aligned with the candidate list.
    pub mu: Vec<f64>,
    /// Optimised squared residual `‖φ(x) - Σ μ_t φ(x_t)‖²`.
    pub p_value: f64,
}

pub(crate) fn check_tolerance(epsilon: f64) -> f64 {
    (epsilon * 1e-2).min(1e-6)
}

/// Projection of local position `target` onto the hull of `cand`.
pub(crate) fn check_local(gram: &LocalGram, target: usize, cand: &[usize], epsilon: f64, decide_only: bool) -> CheckResult {
    let m = cand.len();
    let row = gram.row(target);
    let lin: Vec<f64> = cand.iter().map(|&c| 2.0 * row[c]).collect();
    let k_self = gram.at(target, target);
    // start at the nearest candidate
    let mut start = 0;
    let mut best = f64::INFINITY;
    for (t, &c) in cand.iter().enumerate() {
        let d = gram.at(c, c) - lin[t];
        if d < best {
            best = d;
            start = t;
        }
    }
    let mut mu = vec![0.0; m];
    mu[start] = 1.0;
    let stop = if decide_only { StopRule::Decide(epsilon) } else { StopRule::Converge };
    let sol = simplex_min(gram, cand, &lin, mu, check_tolerance(epsilon), 200 * m * m.max(1), stop, k_self);
    let p_value = (sol.value + k_self).max(0.0);
    CheckResult {
        is_approx_extreme: p_value <= epsilon,
        mu: sol.mu,
        p_value,
    }
}

/// Minimises `‖φ(x_i) - Σ μ_t φ(x_t)‖²` over the simplex on `psi`.
///
/// Stops once no pairwise exchange improves by more than `min(ε/100, 1e-6)`.
pub fn check_point(i: usize, psi: &[usize], spec: &KernelSpec, ds: &Dataset, epsilon: f64) -> CheckResult {
    assert!(!psi.is_empty(), "check_point needs a nonempty candidate set");
    let mut idx = Vec::with_capacity(psi.len() + 1);
    idx.push(i);
    idx.extend_from_slice(psi);
    let gram = LocalGram::new(&idx, spec, ds);
    let cand: Vec<usize> = (1..idx.len()).collect();
    check_local(&gram, 0, &cand, epsilon, false)
}
