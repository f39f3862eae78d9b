//! Write and re-read the representative-set and model files, checking that
//! a reloaded model makes bit-identical decisions.
//!
//! cargo run --release --example file_formats -- [out_dir]

use std::path::PathBuf;

use aesvm::data::gen_synthetic;
use aesvm::extremes::{derive_rs, parse_rs, write_rs};
use aesvm::kernel::KernelSpec;
use aesvm::partition::DeriveConfig;
use aesvm::solver::{decision_values, parse_model, train_aesvm, write_model, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir: PathBuf = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let ds = gen_synthetic(2000, 2, 3.29, 0.0, 5)?;
    let spec = KernelSpec::gaussian(1.0)?;
    let rs = derive_rs(&ds, &DeriveConfig::default(), &spec)?;

    let rs_path = dir.join("example.rs.txt");
    std::fs::write(&rs_path, write_rs(&rs))?;
    let rs_back = parse_rs(&std::fs::read_to_string(&rs_path)?)?;
    println!("{}: {} representatives, header:", rs_path.display(), rs_back.len());
    for line in write_rs(&rs_back).lines().take_while(|l| l.starts_with('#')) {
        println!("  {line}");
    }

    let model = train_aesvm(&rs_back, &spec, &TrainConfig::default())?;
    let model_path = dir.join("example.model.txt");
    std::fs::write(&model_path, write_model(&model))?;
    let reloaded = parse_model(&std::fs::read_to_string(&model_path)?)?;
    let same = decision_values(&model, &ds)
        .iter()
        .zip(decision_values(&reloaded, &ds))
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{}: {} support vectors, decisions identical after reload: {same}", model_path.display(), reloaded.n_sv());
    Ok(())
}
