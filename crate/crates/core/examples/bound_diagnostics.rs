//! Objective gaps between the exact and representative-set solutions and
//! the Gram-matrix trace bound, on a strict-mode derivation.
//!
//! cargo run --release --example bound_diagnostics -- [n] [c_prime] [g] [epsilon]

use aesvm::data::gen_synthetic;
use aesvm::evaluate::{bound_report, gram_trace_bound, DENSE_CAP};
use aesvm::extremes::derive_rs;
use aesvm::kernel::KernelSpec;
use aesvm::partition::DeriveConfig;
use aesvm::solver::{train_aesvm, train_exact, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(1500), |s| s.parse())?;
    let c_prime: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let g: f64 = args.get(2).map_or(Ok(1.0), |s| s.parse())?;
    let epsilon: f64 = args.get(3).map_or(Ok(1e-3), |s| s.parse())?;

    let ds = gen_synthetic(n, 2, 2.0, 0.05, 21)?;
    let spec = KernelSpec::gaussian(g)?;
    let rs = derive_rs(&ds, &DeriveConfig { epsilon, strict: true, keep_gamma: true, ..Default::default() }, &spec)?;
    let cfg = TrainConfig { c_prime, ..Default::default() };
    let exact = train_exact(&ds, &spec, &cfg)?;
    let fast = train_aesvm(&rs, &spec, &cfg)?;

    let report = bound_report(&ds, &rs, &exact, &fast, c_prime, cfg.kkt_tol);
    println!("M = {} of N = {n}", rs.len());
    print!("{report}");
    println!("first gap within bound: {}, F3 <= F2: {:?}, |w|^2 <= C: {}", report.gap_a_ok(), report.f3_le_f2(), report.w_norms_ok());

    let tb = gram_trace_bound(&ds, &rs, &spec, DENSE_CAP)?;
    println!("trace(G - G~) = {:.4e} <= {:.4e}: {}; rank {} <= M {}: {}", tb.lhs, tb.rhs, tb.holds(), tb.rank, tb.m, tb.rank_ok());
    Ok(())
}
