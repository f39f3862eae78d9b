//! Train an exact SVM and an AESVM on the same synthetic problem and
//! compare accuracy, support vectors and training time.
//!
//! cargo run --release --example train_aesvm -- [n_train] [kernel]

use std::time::Instant;

use aesvm::data::gen_synthetic;
use aesvm::extremes::derive_rs;
use aesvm::kernel::KernelSpec;
use aesvm::partition::DeriveConfig;
use aesvm::solver::{predict, train_aesvm, train_exact, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(5000), |s| s.parse())?;
    let spec: KernelSpec = args.get(1).map_or(Ok(KernelSpec::Gaussian { g: 1.0 }), |s| s.parse())?;

    let train = gen_synthetic(n, 2, 3.29, 0.0, 1)?;
    let test = gen_synthetic(n / 4, 2, 3.29, 0.0, 2)?;
    let cfg = TrainConfig::default();

    let start = Instant::now();
    let rs = derive_rs(&train, &DeriveConfig { p: 10_000, ..Default::default() }, &spec)?;
    let derive_secs = start.elapsed().as_secs_f64();

    let exact = train_exact(&train, &spec, &cfg)?;
    let approx = train_aesvm(&rs, &spec, &cfg)?;
    let (_, acc_exact) = predict(&exact, &test);
    let (_, acc_approx) = predict(&approx, &test);

    println!("kernel {spec}, N = {n}, M = {} ({:.1}%)", rs.len(), 100.0 * rs.len() as f64 / n as f64);
    println!("derivation: {derive_secs:.2}s");
    println!(
        "exact : accuracy {:.2}%, {} SVs, {:.2}s",
        100.0 * acc_exact,
        exact.n_sv(),
        exact.info.train_seconds
    );
    println!(
        "aesvm : accuracy {:.2}%, {} SVs, {:.2}s",
        100.0 * acc_approx,
        approx.n_sv(),
        approx.info.train_seconds
    );
    println!("training speedup {:.1}x", exact.info.train_seconds / approx.info.train_seconds);
    Ok(())
}
