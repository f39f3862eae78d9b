//! End-to-end acceptance suite. Runs every criterion, prints one
//! PASS/FAIL line each, and exits nonzero if any fails.

// `check!` negates comparisons on purpose so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod support;

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use aesvm::data::{gen_synthetic, parse_dataset, write_dataset, Dataset, SparseVector};
use aesvm::evaluate::{bound_report, gram_trace_bound, rmse, speedups, GridSpec, DENSE_CAP};
use aesvm::extremes::{check_point, derive_rs, parse_rs, sphere_set, write_rs};
use aesvm::kernel::KernelSpec;
use aesvm::partition::{bfprt_select, DeriveConfig, Fls};
use aesvm::solver::{
    decision_values, parse_model, predict, solve_weighted_smo, train_aesvm, train_exact, write_model, TrainConfig,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Kernel evaluated from dense coordinates, independent of the library.
fn dense_kernel(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    match *spec {
        KernelSpec::Linear => dot,
        KernelSpec::Polynomial { degree } => (1.0 + dot).powi(degree as i32),
        KernelSpec::Gaussian { g } => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-g * d2).exp()
        }
    }
}

fn dense_gram(spec: &KernelSpec, pts: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(pts.len(), pts.len(), |i, j| dense_kernel(spec, &pts[i], &pts[j]))
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn random_kernel(rng: &mut ChaCha8Rng, case: usize) -> KernelSpec {
    match case % 3 {
        0 => KernelSpec::gaussian(rng.random_range(0.1..2.0)).unwrap(),
        1 => KernelSpec::polynomial(rng.random_range(1..=3)).unwrap(),
        _ => KernelSpec::Linear,
    }
}

fn dataset_of(pts: &[Vec<f64>], labels: Vec<i8>) -> Dataset {
    Dataset::new("pts", pts.iter().map(|p| SparseVector::from_dense(p)).collect(), labels).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let kkt_tol = 1e-8;
    let (mut worst_rel, mut worst_kkt, mut sign_mismatch) = (0.0f64, 0.0f64, 0usize);
    for case in 0..50 {
        let n = rng.random_range(4..=60);
        let d = rng.random_range(1..=5);
        let pts = random_points(&mut rng, n, d);
        let mut y: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        let spec = random_kernel(&mut rng, case);
        let upper: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..5.0)).collect();
        let ds = dataset_of(&pts, y.clone());
        let cfg = TrainConfig { kkt_tol, ..Default::default() };
        let sol = solve_weighted_smo(ds.vectors(), ds.labels(), &upper, &spec, &cfg).map_err(|e| e.to_string())?;

        let k = dense_gram(&spec, &pts);
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let (oracle_alpha, oracle) = support::svm_dual_oracle(&k, &yf, &upper, 1e-10);
        let q = DMatrix::from_fn(n, n, |i, j| yf[i] * yf[j] * k[(i, j)]);
        let ours = support::svm_dual_value(&q, &sol.alphas);
        check!((ours - sol.objective).abs() <= 1e-9 * ours.abs().max(1.0), "case {case}: reported objective {} vs recomputed {ours}", sol.objective);
        let rel = (ours - oracle).abs() / oracle.abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
        check!(rel <= 1e-6, "case {case}: objective {ours} vs oracle {oracle} (rel {rel:e})");

        // KKT violation from an independently computed gradient
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[(i, j)] * sol.alphas[j]).sum::<f64>() - 1.0).collect();
        let (mut up, mut low) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in 0..n {
            let a = sol.alphas[t];
            check!(a >= 0.0 && a <= upper[t], "case {case}: alpha {a} outside [0, {}]", upper[t]);
            let yg = yf[t] * grad[t];
            let in_up = if yf[t] > 0.0 { a < upper[t] } else { a > 0.0 };
            let in_low = if yf[t] > 0.0 { a > 0.0 } else { a < upper[t] };
            if in_up {
                up = up.max(-yg);
            }
            if in_low {
                low = low.max(yg);
            }
        }
        let viol = (up + low).max(0.0);
        worst_kkt = worst_kkt.max(viol);
        check!(viol <= kkt_tol, "case {case}: KKT violation {viol:e} > {kkt_tol:e}");
        let eq: f64 = sol.alphas.iter().zip(&yf).map(|(a, y)| a * y).sum();
        check!(eq.abs() <= 1e-9 * upper.iter().sum::<f64>(), "case {case}: equality residual {eq:e}");

        // decision signs on probe points against the oracle's expansion
        let probes = random_points(&mut rng, 10, d);
        let model_ds = dataset_of(&probes, vec![1; 10]);
        let m = aesvm::solver::SvmModel::new(ds.vectors().to_vec(), y.clone(), sol.alphas.clone(), sol.bias, spec).unwrap();
        let f_ours = decision_values(&m, &model_ds);
        for (p, fo) in probes.iter().zip(f_ours) {
            let fo_oracle: f64 = (0..n).map(|t| oracle_alpha[t] * yf[t] * dense_kernel(&spec, &pts[t], p)).sum::<f64>() + sol.bias;
            if fo.abs() > 1e-4 && fo.signum() != fo_oracle.signum() {
                sign_mismatch += 1;
            }
        }
    }
    check!(sign_mismatch == 0, "{sign_mismatch} probe decisions disagree in sign with the oracle");
    Ok(format!("50 problems, worst relative objective error {worst_rel:.2e}, worst KKT violation {worst_kkt:.2e} (tol {kkt_tol:e})"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_p = 0.0f64;
    for case in 0..50 {
        let m = rng.random_range(1..=10);
        let d = rng.random_range(1..=5);
        let mut pts = random_points(&mut rng, m, d);
        // a third of the targets lie inside the input-space hull
        let target: Vec<f64> = if case % 3 == 0 {
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            (0..d).map(|j| (0..m).map(|t| w[t] / s * pts[t][j]).sum()).collect()
        } else {
            (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()
        };
        pts.push(target.clone());
        let spec = random_kernel(&mut rng, case);
        let epsilon = 10f64.powf(rng.random_range(-4.0..-2.0));
        let ds = dataset_of(&pts, vec![1; m + 1]);
        let psi: Vec<usize> = (0..m).collect();
        let res = check_point(m, &psi, &spec, &ds, epsilon);

        let kc = dense_gram(&spec, &pts[..m]);
        let kx: Vec<f64> = (0..m).map(|t| dense_kernel(&spec, &target, &pts[t])).collect();
        let oracle = support::hull_distance_oracle(&kc, &kx, dense_kernel(&spec, &target, &target), 200_000);
        let err = (res.p_value - oracle).abs();
        worst_p = worst_p.max(err);
        check!(err <= 1e-6, "check_point case {case}: p {} vs oracle {oracle}", res.p_value);
        let s: f64 = res.mu.iter().sum();
        check!((s - 1.0).abs() <= 1e-9 && res.mu.iter().all(|&x| x >= 0.0), "case {case}: mu off the simplex");
        check!(res.is_approx_extreme == (res.p_value <= epsilon), "case {case}: flag disagrees with p");
    }

    let mut worst_r = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(1..=20);
        let d = rng.random_range(1..=5);
        let pts = random_points(&mut rng, n, d);
        let spec = random_kernel(&mut rng, case);
        let ds = dataset_of(&pts, vec![1; n]);
        let idx: Vec<usize> = (0..n).collect();
        let model = sphere_set(&idx, &spec, &ds);
        let oracle = support::svdd_oracle(&dense_gram(&spec, &pts), 1e-12);
        let err = (model.radius_sq - oracle).abs();
        worst_r = worst_r.max(err);
        check!(err <= 1e-6, "sphere_set case {case}: R² {} vs oracle {oracle}", model.radius_sq);
        let s: f64 = model.alphas.iter().sum();
        check!((s - 1.0).abs() <= 1e-9, "sphere_set case {case}: alphas sum to {s}");
    }

    // selection: exhaustive over small alphabets, then random arrays
    let mut exhaustive = 0usize;
    for len in 1..=8usize {
        let base: usize = if len <= 7 { 4 } else { 3 };
        for code in 0..base.pow(len as u32) {
            let keys: Vec<(f64, usize)> = (0..len).map(|p| (((code / base.pow(p as u32)) % base) as f64, p)).collect();
            let mut sorted = keys.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (r, want) in sorted.iter().enumerate() {
                let got = bfprt_select(&keys, r).map_err(|e| e.to_string())?;
                check!(got == *want, "bfprt {keys:?} rank {r}: {got:?} vs {want:?}");
                exhaustive += 1;
            }
        }
    }
    for _ in 0..1000 {
        let len = rng.random_range(1..=500);
        let keys: Vec<(f64, usize)> = (0..len).map(|p| (f64::from(rng.random_range(0..50u32)), p)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let r = rng.random_range(0..len);
        check!(bfprt_select(&keys, r).unwrap() == sorted[r], "bfprt random array of {len}, rank {r}");
    }
    Ok(format!(
        "check_point worst |Δp| {worst_p:.2e}, sphere_set worst |ΔR²| {worst_r:.2e}, {exhaustive} exhaustive selections + 1000 random"
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_mass = 0.0f64;
    let mut worst_row = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(50..=5000);
        let d = rng.random_range(1..=5);
        let ds = gen_synthetic(n, d, rng.random_range(0.0..4.0), rng.random_range(0.0..0.2), case as u64).unwrap();
        let spec = random_kernel(&mut rng, case);
        let p = rng.random_range(20..=3000);
        let cfg = DeriveConfig {
            p,
            v: rng.random_range(5..p.min(1000)),
            epsilon: [1e-2, 1e-3, 1e-4][case % 3],
            fls: if rng.random_bool(0.5) { Fls::Positional } else { Fls::DistanceTree },
            strict: rng.random_bool(0.5),
            keep_gamma: true,
            jobs: 1,
        };
        let rs = derive_rs(&ds, &cfg, &spec).map_err(|e| e.to_string())?;
        let mass = (rs.beta_sum() - n as f64).abs() / n as f64;
        worst_mass = worst_mass.max(mass);
        check!(mass <= 1e-6, "case {case}: Σβ = {} for N = {n}", rs.beta_sum());
        check!(rs.betas.iter().all(|&b| b > 0.0), "case {case}: nonpositive beta");
        let g = rs.gamma.as_ref().unwrap();
        for (i, row) in g.rows.iter().enumerate() {
            let s: f64 = row.iter().map(|r| r.1).sum();
            worst_row = worst_row.max((s - 1.0).abs());
            check!((s - 1.0).abs() <= 1e-8 && row.iter().all(|r| r.1 >= 0.0), "case {case}: row {i} off the simplex");
            check!(row.iter().all(|&(t, _)| rs.labels[t] == ds.label(i)), "case {case}: row {i} mixes classes");
        }
        // per-representative mass equals its column sum
        let mut col = vec![0.0; rs.len()];
        for row in &g.rows {
            for &(t, w) in row {
                col[t] += w;
            }
        }
        check!(col.iter().zip(&rs.betas).all(|(a, b)| (a - b).abs() <= 1e-9 * b.max(1.0)), "case {case}: β differs from Γ column sums");
        if cfg.strict {
            check!(g.residuals.iter().all(|&r| r <= cfg.epsilon), "case {case}: strict residual above epsilon");
        }
    }
    Ok(format!("20 datasets, worst |Σβ-N|/N {worst_mass:.2e}, worst |Σγ-1| {worst_row:.2e}"))
}

fn criterion_4() -> Outcome {
    let ds = gen_synthetic(5000, 2, 2.0, 0.05, 404).unwrap();
    let sub_idx: Vec<usize> = (0..ds.len()).step_by(10).collect();
    let sub = ds.subset(&sub_idx).unwrap();
    let mut lines = Vec::new();
    for &(c_prime, g, epsilon) in &[(1.0, 1.0, 1e-3), (4.0, 0.25, 1e-4)] {
        let spec = KernelSpec::gaussian(g).unwrap();
        let dcfg = DeriveConfig { epsilon, strict: true, keep_gamma: true, ..Default::default() };
        let rs = derive_rs(&ds, &dcfg, &spec).map_err(|e| e.to_string())?;
        let tcfg = TrainConfig { c_prime, ..Default::default() };
        let exact = train_exact(&ds, &spec, &tcfg).map_err(|e| e.to_string())?;
        let approx = train_aesvm(&rs, &spec, &tcfg).map_err(|e| e.to_string())?;
        let rep = bound_report(&ds, &rs, &exact, &approx, c_prime, tcfg.kkt_tol);
        let tag = format!("(C'={c_prime}, g={g}, eps={epsilon})");
        check!(rep.f3_le_f2() == Some(true), "{tag}: F3 {:?} > F2 {}", rep.f3_aesvm, rep.f2_aesvm);
        check!(rep.gap_a_ok(), "{tag}: gap_a {} exceeds {} + {}", rep.gap_a, rep.bound_a, rep.slack());
        check!(rep.w_norms_ok(), "{tag}: |w|² {} / {} above C {}", rep.w_sq_exact, rep.w_sq_aesvm, rep.c);

        let rs_sub = derive_rs(&sub, &dcfg, &spec).map_err(|e| e.to_string())?;
        let tb = gram_trace_bound(&sub, &rs_sub, &spec, DENSE_CAP).map_err(|e| e.to_string())?;
        check!(tb.holds(), "{tag}: trace {} > bound {}", tb.lhs, tb.rhs);
        check!(tb.rank_ok(), "{tag}: rank {} > M {}", tb.rank, tb.m);
        lines.push(format!(
            "{tag} M={} gap_a={:.3e}<={:.3e} F3-F2={:.3e} trace {:.3e}<={:.3e} rank {}<={}",
            rs.len(),
            rep.gap_a,
            rep.bound_a,
            rep.f3_aesvm.unwrap() - rep.f2_aesvm,
            tb.lhs,
            tb.rhs,
            tb.rank,
            tb.m
        ));
    }
    Ok(lines.join("; "))
}

fn criterion_5() -> Outcome {
    let ds = gen_synthetic(20000, 2, 3.29, 0.0, 505).unwrap();
    let m_for = |g: f64, epsilon: f64| -> Result<usize, String> {
        let cfg = DeriveConfig { epsilon, ..Default::default() };
        Ok(derive_rs(&ds, &cfg, &KernelSpec::gaussian(g).unwrap()).map_err(|e| e.to_string())?.len())
    };
    let by_g: Vec<usize> = [0.0625, 1.0, 4.0].iter().map(|&g| m_for(g, 1e-3)).collect::<Result<_, _>>()?;
    let by_eps: Vec<usize> = [1e-3, 1e-4, 1e-5].iter().map(|&e| m_for(1.0, e)).collect::<Result<_, _>>()?;
    check!(by_g.windows(2).all(|w| w[0] <= w[1]), "M over g = 1/16, 1, 4: {by_g:?}");
    check!(by_eps.windows(2).all(|w| w[0] <= w[1]), "M over eps = 1e-3, 1e-4, 1e-5: {by_eps:?}");
    Ok(format!("M over g {by_g:?}, M over eps {by_eps:?} (N = 20000)"))
}

fn quality_run(spec: KernelSpec, max_gap_pp: f64) -> Outcome {
    let train = gen_synthetic(20000, 2, 3.29, 0.0, 606).unwrap();
    let test = gen_synthetic(5000, 2, 3.29, 0.0, 607).unwrap();
    let dcfg = DeriveConfig { epsilon: 1e-3, p: 10_000, v: 1_000, ..Default::default() };
    let rs = derive_rs(&train, &dcfg, &spec).map_err(|e| e.to_string())?;
    let tcfg = TrainConfig { c_prime: 1.0, ..Default::default() };
    let exact = train_exact(&train, &spec, &tcfg).map_err(|e| e.to_string())?;
    let approx = train_aesvm(&rs, &spec, &tcfg).map_err(|e| e.to_string())?;
    let acc_exact = 100.0 * predict(&exact, &test).1;
    let acc_approx = 100.0 * predict(&approx, &test).1;
    let gap = (acc_exact - acc_approx).abs();
    let ratio = rs.len() as f64 / train.len() as f64;
    let speed = exact.info.train_seconds / approx.info.train_seconds;
    let detail = format!(
        "{spec}: exact {acc_exact:.2}% vs aesvm {acc_approx:.2}% (gap {gap:.2}pp), M/N {ratio:.3}, TL/TF {speed:.1}, SVs {} vs {}",
        exact.n_sv(),
        approx.n_sv()
    );
    check!(gap <= max_gap_pp, "accuracy gap too large: {detail}");
    check!(ratio <= 0.5, "representative set too large: {detail}");
    check!(speed > 1.0, "no training speedup: {detail}");
    check!(approx.n_sv() <= exact.n_sv(), "more support vectors: {detail}");
    Ok(detail)
}

fn criterion_6() -> Outcome {
    quality_run(KernelSpec::gaussian(1.0).unwrap(), 1.0)
}

fn criterion_7() -> Outcome {
    quality_run(KernelSpec::polynomial(2).unwrap(), 1.5)
}

fn criterion_8() -> Outcome {
    let grid = GridSpec::default();
    check!(grid.cells().len() == 84, "default grid has {} cells", grid.cells().len());
    let r = rmse(&[90.0, 80.0], &[89.0, 82.0]).unwrap();
    check!((r - 1.5811388300841898).abs() < 1e-12, "rmse example gave {r}");
    check!(rmse(&[70.0, 75.5], &[70.0, 75.5]).unwrap() == 0.0, "rmse of identical grids");
    let s = speedups(&[2.0, 4.0], &[1.0, 2.0], &[10.0, 30.0], &[5.0, 10.0], 0.0).unwrap();
    check!(s.ets == 2.0 && s.ots == 2.0, "ETS/OTS example gave {} / {}", s.ets, s.ots);
    check!(s.ecs == 2.5 && s.ocs == 40.0 / 15.0, "ECS/OCS example gave {} / {}", s.ecs, s.ocs);
    let s = speedups(&[3.0, 3.0], &[3.0, 3.0], &[4.0, 4.0], &[4.0, 4.0], 0.0).unwrap();
    check!(s.ets == 1.0 && s.ots == 1.0 && s.ecs == 1.0 && s.ocs == 1.0, "unit speedups gave {s:?}");
    let s = speedups(&[6.0, 6.0], &[2.0, 2.0], &[1.0, 1.0], &[1.0, 1.0], 4.0).unwrap();
    check!(s.ets == 3.0 && s.ots == 1.5, "derivation-time example gave {} / {}", s.ets, s.ots);
    Ok("84 cells; rmse and speedup examples exact".into())
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_aesvm")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("aesvm {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// Grid CSV without the timing columns.
fn untimed(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{},{},{},{},{}", f[0], f[1], f[2], f[3], f[4], f[6])
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let ds = gen_synthetic(3000, 3, 2.0, 0.05, 909).unwrap();
    let spec = KernelSpec::gaussian(0.5).unwrap();
    let base = DeriveConfig { p: 1000, v: 200, ..Default::default() };
    let a = write_rs(&derive_rs(&ds, &base, &spec).unwrap());
    let b = write_rs(&derive_rs(&ds, &base, &spec).unwrap());
    let c = write_rs(&derive_rs(&ds, &DeriveConfig { jobs: 4, ..base.clone() }, &spec).unwrap());
    check!(a == b && a == c, "derive_rs output changed between runs or job counts");
    let rs = parse_rs(&a).unwrap();
    check!(write_rs(&rs) == a, "representative-set file does not round-trip");

    let tcfg = TrainConfig::default();
    let m1 = train_aesvm(&rs, &spec, &tcfg).unwrap();
    let m2 = train_aesvm(&rs, &spec, &tcfg).unwrap();
    check!(write_model(&m1) == write_model(&m2), "training is not deterministic");
    let back = parse_model(&write_model(&m1)).unwrap();
    check!(write_model(&back) == write_model(&m1), "model file does not round-trip");
    let d1 = decision_values(&m1, &ds);
    let d2 = decision_values(&back, &ds);
    check!(d1.iter().zip(&d2).all(|(x, y)| x.to_bits() == y.to_bits()), "reloaded model changes decisions");
    check!(predict(&m1, &ds).0 == predict(&m2, &ds).0, "predictions differ");

    let text = write_dataset(&ds);
    let reparsed = parse_dataset(&text).unwrap();
    check!(reparsed.vectors() == ds.vectors() && reparsed.labels() == ds.labels(), "dataset does not round-trip");
    check!(write_dataset(&reparsed) == text, "dataset text is not canonical");

    // the same through the command-line tool, with different job counts
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let s = |name: &str| p(name).to_string_lossy().into_owned();
    run_cli(&["synth", "-n", "1500", "-d", "2", "--sep", "2", "--flip", "0.05", "--seed", "9", "-o", &s("d.txt")])?;
    run_cli(&["derive", "-i", &s("d.txt"), "-o", &s("rs1.txt"), "-P", "600", "-V", "150", "--jobs", "1"])?;
    run_cli(&["derive", "-i", &s("d.txt"), "-o", &s("rs2.txt"), "-P", "600", "-V", "150", "--jobs", "3"])?;
    check!(read(&p("rs1.txt")) == read(&p("rs2.txt")), "CLI derive differs across --jobs");
    for m in ["m1.txt", "m2.txt"] {
        run_cli(&["train", "-i", &s("rs1.txt"), "-o", &s(m), "-c", "2"])?;
    }
    check!(read(&p("m1.txt")) == read(&p("m2.txt")), "CLI train is not deterministic");
    for out in ["p1.txt", "p2.txt"] {
        run_cli(&["predict", "-i", &s("d.txt"), "-m", &s("m1.txt"), "-o", &s(out), "--decision"])?;
    }
    check!(read(&p("p1.txt")) == read(&p("p2.txt")), "CLI predict is not deterministic");
    for (out, jobs) in [("g1.csv", "1"), ("g2.csv", "2")] {
        run_cli(&["gridsearch", "-i", &s("d.txt"), "-o", &s(out), "--folds", "3", "--c-primes", "0.5,4", "--gs", "0.5,2", "-P", "600", "-V", "150", "--jobs", jobs])?;
    }
    check!(untimed(&read(&p("g1.csv"))) == untimed(&read(&p("g2.csv"))), "grid results differ across --jobs");
    Ok("library and CLI outputs bit-identical across runs and job counts; dataset, representative-set and model files round-trip".into())
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("solver oracle equivalence", 60, criterion_1),
        ("geometry oracle equivalence", 60, criterion_2),
        ("mass conservation", 120, criterion_3),
        ("bound suite (strict mode)", 300, criterion_4),
        ("trend reproduction", 300, criterion_5),
        ("end-to-end quality and speed", 180, criterion_6),
        ("polynomial-kernel parity", 180, criterion_7),
        ("grid protocol", 1, criterion_8),
        ("determinism and round-trips", 120, criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match result {
            Ok(Ok(d)) if secs <= *budget as f64 => (true, d),
            Ok(Ok(d)) => (false, format!("over the {budget}s budget; {d}")),
            Ok(Err(d)) => (false, d),
            Err(p) => (
                false,
                p.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()),
            ),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {}: {} - {name} [{secs:.1}s] {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
