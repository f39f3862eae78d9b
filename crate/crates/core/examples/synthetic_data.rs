//! Generate a labelled two-cloud dataset, inspect its classes and folds,
//! and round-trip it through the sparse text format.
//!
//! cargo run --release --example synthetic_data -- [n] [dim] [separation] [flip]

use aesvm::data::{gen_synthetic, make_folds, parse_dataset, split_by_class, write_dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(1000), |s| s.parse())?;
    let dim: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;
    let sep: f64 = args.get(2).map_or(Ok(3.29), |s| s.parse())?;
    let flip: f64 = args.get(3).map_or(Ok(0.0), |s| s.parse())?;

    let ds = gen_synthetic(n, dim, sep, flip, 7)?;
    let classes = split_by_class(&ds);
    println!("{} vectors in {} dimensions", ds.len(), ds.dim());
    println!("+1: {}, -1: {}", classes.positives.len(), classes.negatives.len());

    let folds = make_folds(ds.len(), 5, 7)?;
    println!("fold sizes {:?}", folds.fold_sizes());
    let (train, test) = folds.split(0);
    println!("fold 0 trains on {} and tests on {}", train.len(), test.len());

    let text = write_dataset(&ds);
    let back = parse_dataset(&text)?;
    println!("text form: {} bytes, round-trip exact: {}", text.len(), back.vectors() == ds.vectors() && back.labels() == ds.labels());
    for line in text.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
