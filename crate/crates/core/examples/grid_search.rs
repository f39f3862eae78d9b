//! Cross-validated grid over C' and g for both solvers, summarised by the
//! accuracy RMSE and the four speedup ratios.
//!
//! cargo run --release --example grid_search -- [n] [folds]

use aesvm::data::gen_synthetic;
use aesvm::evaluate::{compare, grid_search, write_grid_csv, GridSpec};
use aesvm::kernel::KernelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(2000), |s| s.parse())?;
    let folds: usize = args.get(1).map_or(Ok(3), |s| s.parse())?;

    let ds = gen_synthetic(n, 2, 3.29, 0.0, 11)?;
    let grid = GridSpec {
        c_primes: vec![0.25, 1.0, 4.0],
        kernels: [0.25, 1.0].iter().map(|&g| KernelSpec::gaussian(g)).collect::<Result<_, _>>()?,
        folds,
        ..Default::default()
    };
    println!("{} cells x {folds} folds on N = {n} (the default grid has {})", grid.cells().len(), GridSpec::default().cells().len());

    let (exact, fast) = grid_search(&ds, &grid, 1)?;
    let (rmse, s) = compare(&exact, &fast)?;
    println!("accuracy RMSE {rmse:.3} points");
    println!("training speedup {:.1} (with derivation {:.1})", s.ets, s.ots);
    println!("classification speedup {:.1} (overall {:.1})", s.ecs, s.ocs);

    let csv = write_grid_csv(&[&exact, &fast]);
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
