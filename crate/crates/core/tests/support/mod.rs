//! Independent reference solvers used by the integration tests. Nothing
//! here calls into the library's optimisers.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(0.0, f64::max)
}

/// Euclidean projection onto `{0 <= a <= upper, y·a = 0}` by bisection on
/// the multiplier of the equality constraint.
pub fn project_box_hyperplane(v: &[f64], y: &[f64], upper: &[f64]) -> Vec<f64> {
    let h = |lam: f64| -> f64 {
        v.iter().zip(y).zip(upper).map(|((&vi, &yi), &ui)| yi * (vi - lam * yi).clamp(0.0, ui)).sum()
    };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + upper.iter().cloned().fold(0.0, f64::max) + 1.0;
    let (mut lo, mut hi) = (-span, span);
    while hi - lo > 1e-15 * span {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    v.iter().zip(y).zip(upper).map(|((&vi, &yi), &ui)| (vi - lam * yi).clamp(0.0, ui)).collect()
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Accelerated projected gradient with adaptive restart for
/// `min ½ xᵀ H x + cᵀ x` over a set given by `proj`. Stops when an
/// iteration moves the point by less than `tol` in the max norm.
pub fn accelerated_pg(h: &DMatrix<f64>, c: &[f64], x0: Vec<f64>, proj: impl Fn(&[f64]) -> Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = c.len();
    let step = 1.0 / lambda_max(h).max(1e-12);
    let f = |x: &[f64]| {
        let hx = h * nalgebra::DVector::from_column_slice(x);
        0.5 * x.iter().zip(hx.iter()).map(|(a, b)| a * b).sum::<f64>() + x.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut x = proj(&x0);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut fx = f(&x);
    for _ in 0..max_iter {
        let hz = h * nalgebra::DVector::from_column_slice(&z);
        let trial: Vec<f64> = (0..n).map(|i| z[i] - step * (hz[i] + c[i])).collect();
        let xn = proj(&trial);
        let fxn = f(&xn);
        let moved = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if fxn > fx {
            // restart momentum
            z = x.clone();
            t = 1.0;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..n).map(|i| xn[i] + (t - 1.0) / tn * (xn[i] - x[i])).collect();
        x = xn;
        fx = fxn;
        t = tn;
        if moved < tol {
            break;
        }
    }
    x
}

/// Dual SVM oracle: maximises `Σα - ½αᵀQα` with `Q_ts = y_t y_s K_ts`
/// over the box and the equality constraint. Returns `(alpha, objective)`.
pub fn svm_dual_oracle(k: &DMatrix<f64>, y: &[f64], upper: &[f64], tol: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let c = vec![-1.0; n];
    let mut a = vec![0.0; n];
    // restarted in chunks; an exactly polished point that passes the
    // optimality check at `tol` ends the run early
    for _ in 0..100 {
        a = accelerated_pg(&q, &c, a, |v| project_box_hyperplane(v, y, upper), tol, 2_000);
        if let Some(p) = polish_active_set(&q, y, upper, &a, tol) {
            a = p;
            break;
        }
    }
    let obj = svm_dual_value(&q, &a);
    (a, obj)
}

/// Refines an approximate dual solution by fixing its bound variables and
/// solving the stationarity system of the free ones exactly. Returns `None`
/// when the guessed active set fails the optimality conditions.
pub fn polish_active_set(q: &DMatrix<f64>, y: &[f64], upper: &[f64], a: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = y.len();
    let delta = 1e-7 * upper.iter().cloned().fold(0.0, f64::max);
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > delta && a[i] < upper[i] - delta).collect();
    let mut out: Vec<f64> = (0..n).map(|i| if a[i] <= delta { 0.0 } else { upper[i] }).collect();
    let f = free.len();
    // unknowns: a_F then the equality multiplier
    let mut m = DMatrix::zeros(f + 1, f + 1);
    let mut rhs = nalgebra::DVector::zeros(f + 1);
    for (r, &i) in free.iter().enumerate() {
        for (cidx, &j) in free.iter().enumerate() {
            m[(r, cidx)] = q[(i, j)];
        }
        m[(r, f)] = y[i];
        m[(f, r)] = y[i];
        rhs[r] = 1.0 - (0..n).filter(|j| !free.contains(j)).map(|j| q[(i, j)] * out[j]).sum::<f64>();
    }
    rhs[f] = -(0..n).filter(|j| !free.contains(j)).map(|j| y[j] * out[j]).sum::<f64>();
    let sol = m.svd(true, true).solve(&rhs, 1e-13).ok()?;
    for (r, &i) in free.iter().enumerate() {
        out[i] = sol[r];
    }
    let nu = sol[f];
    let scale = upper.iter().cloned().fold(1.0, f64::max);
    let tol = tol * scale;
    if free.iter().any(|&i| out[i] < -tol || out[i] > upper[i] + tol) {
        return None;
    }
    for i in 0..n {
        // reduced gradient of ½aᵀQa - Σa plus ν yᵀa
        let g = (0..n).map(|j| q[(i, j)] * out[j]).sum::<f64>() - 1.0 + nu * y[i];
        let bad = if free.contains(&i) { g.abs() > tol } else if out[i] == 0.0 { g < -tol } else { g > tol };
        if bad {
            return None;
        }
    }
    for i in 0..n {
        out[i] = out[i].clamp(0.0, upper[i]);
    }
    Some(out)
}

pub fn svm_dual_value(q: &DMatrix<f64>, a: &[f64]) -> f64 {
    let av = nalgebra::DVector::from_column_slice(a);
    av.sum() - 0.5 * (av.transpose() * q * &av)[(0, 0)]
}

/// Enclosing-ball dual `max Σα_i K_ii - αᵀKα` over the simplex.
pub fn svdd_oracle(k: &DMatrix<f64>, tol: f64) -> f64 {
    let n = k.nrows();
    let h = k * 2.0;
    let c: Vec<f64> = (0..n).map(|i| -k[(i, i)]).collect();
    let a = accelerated_pg(&h, &c, vec![1.0 / n as f64; n], project_simplex, tol, 2_000_000);
    let av = nalgebra::DVector::from_column_slice(&a);
    (0..n).map(|i| a[i] * k[(i, i)]).sum::<f64>() - (av.transpose() * k * &av)[(0, 0)]
}

/// Squared distance from `φ(x)` to the hull of the candidates, by
/// Frank–Wolfe with away steps and exact line search.
///
/// `kc` is the candidate Gram matrix, `kx[t] = K(x, x_t)`, `kxx = K(x, x)`.
pub fn hull_distance_oracle(kc: &DMatrix<f64>, kx: &[f64], kxx: f64, max_iter: usize) -> f64 {
    let m = kx.len();
    let mut mu = vec![0.0; m];
    mu[0] = 1.0;
    let value = |mu: &[f64]| {
        let v = nalgebra::DVector::from_column_slice(mu);
        kxx - 2.0 * mu.iter().zip(kx).map(|(a, b)| a * b).sum::<f64>() + (v.transpose() * kc * &v)[(0, 0)]
    };
    for _ in 0..max_iter {
        let v = nalgebra::DVector::from_column_slice(&mu);
        let kmu = kc * &v;
        let grad: Vec<f64> = (0..m).map(|t| 2.0 * kmu[t] - 2.0 * kx[t]).collect();
        let s = (0..m).min_by(|&a, &b| grad[a].total_cmp(&grad[b])).unwrap();
        let a = (0..m).filter(|&t| mu[t] > 0.0).max_by(|&a, &b| grad[a].total_cmp(&grad[b])).unwrap();
        let g_dot: f64 = grad.iter().zip(&mu).map(|(g, x)| g * x).sum();
        let fw_gap = g_dot - grad[s];
        if fw_gap < 1e-14 {
            break;
        }
        let away_gap = grad[a] - g_dot;
        // direction d as a sparse combination
        let (d, max_step): (Vec<f64>, f64) = if fw_gap >= away_gap {
            let mut d: Vec<f64> = mu.iter().map(|x| -x).collect();
            d[s] += 1.0;
            (d, 1.0)
        } else {
            let mut d = mu.clone();
            d[a] -= 1.0;
            let ma = mu[a];
            (d, if ma < 1.0 { ma / (1.0 - ma) } else { f64::INFINITY })
        };
        let dv = nalgebra::DVector::from_column_slice(&d);
        let slope: f64 = grad.iter().zip(&d).map(|(g, x)| g * x).sum();
        let curv = (dv.transpose() * kc * &dv)[(0, 0)];
        let mut step = if curv > 0.0 { -slope / (2.0 * curv) } else { max_step };
        step = step.clamp(0.0, max_step.min(1e300));
        for t in 0..m {
            mu[t] = (mu[t] + step * d[t]).max(0.0);
        }
        let s: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|x| *x /= s);
    }
    value(&mu).max(0.0)
}
