//! Split one class into subsets with both first-level schemes and the
//! second-level peeling, and run linear-time selection on its own.
//!
//! cargo run --release --example partition_subsets -- [n] [P] [V]

use aesvm::data::{gen_synthetic, split_by_class};
use aesvm::kernel::KernelSpec;
use aesvm::partition::{bfprt_select, fls1, fls2, sls};

fn summary(sizes: &[usize]) -> String {
    let min = sizes.iter().min().copied().unwrap_or(0);
    let max = sizes.iter().max().copied().unwrap_or(0);
    format!("{} subsets, sizes {min}..={max}", sizes.len())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(5000), |s| s.parse())?;
    let p: usize = args.get(1).map_or(Ok(1000), |s| s.parse())?;
    let v: usize = args.get(2).map_or(Ok(100), |s| s.parse())?;

    let ds = gen_synthetic(n, 2, 3.29, 0.0, 3)?;
    let spec = KernelSpec::gaussian(1.0)?;
    let class = split_by_class(&ds).positives;
    println!("class of {} vectors, P = {p}, V = {v}", class.len());

    let positional = fls1(&class, p)?;
    println!("positional first level: {}", summary(&positional.subset_sizes()));
    let tree = fls2(&class, p, &spec, &ds)?;
    println!("distance-tree first level: {}", summary(&tree.subset_sizes()));
    let fine = sls(&tree, v, &spec, &ds)?;
    println!("after peeling: {}", summary(&fine.subset_sizes()));
    fine.validate(&class)?;

    let keys: Vec<(f64, usize)> = [5.0, 1.0, 4.0, 1.0, 3.0, 9.0, 2.0].iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let median = bfprt_select(&keys, keys.len() / 2)?;
    println!("median of {:?} is {} at position {}", keys.iter().map(|k| k.0).collect::<Vec<_>>(), median.0, median.1);
    Ok(())
}
