//! Compress a synthetic dataset into a representative set and report how
//! much mass each class keeps.
//!
//! cargo run --release --example derive_representatives -- [n] [g] [epsilon]

use std::time::Instant;

use aesvm::data::gen_synthetic;
use aesvm::extremes::derive_rs;
use aesvm::kernel::KernelSpec;
use aesvm::partition::DeriveConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(4000), |s| s.parse())?;
    let g: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let epsilon: f64 = args.get(2).map_or(Ok(1e-3), |s| s.parse())?;

    let ds = gen_synthetic(n, 2, 3.29, 0.0, 42)?;
    let cfg = DeriveConfig { epsilon, ..Default::default() };
    let spec = KernelSpec::gaussian(g)?;

    let start = Instant::now();
    let rs = derive_rs(&ds, &cfg, &spec)?;
    let secs = start.elapsed().as_secs_f64();

    let stats = rs.stats.expect("fresh derivation carries stats");
    println!("N = {n}, kernel = {spec}, epsilon = {epsilon}");
    println!("M = {} ({:.1}% of N) in {secs:.2}s over {} subsets", rs.len(), 100.0 * rs.len() as f64 / n as f64, stats.subsets);
    println!("sum of betas = {:.6}", rs.beta_sum());
    println!(
        "rows above epsilon: {:.2}%, largest residual {:.3e}",
        100.0 * stats.violation_fraction(n),
        stats.max_residual
    );
    let pos: f64 = rs.betas.iter().zip(&rs.labels).filter(|(_, &y)| y > 0).map(|(b, _)| b).sum();
    println!("positive mass {pos:.1}, negative mass {:.1}", rs.beta_sum() - pos);
    Ok(())
}
