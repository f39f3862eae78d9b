//! Evaluate the three kernels, the induced feature-space distance, and the
//! behaviour of the row cache under a tight byte budget.
//!
//! cargo run --release --example kernels

use aesvm::data::SparseVector;
use aesvm::kernel::{kernel_distance_sq, kernel_product, KernelCache, KernelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = SparseVector::from_dense(&[1.0, 0.0, 2.0]);
    let z = SparseVector::new(vec![(1, 0.5), (2, -1.0)])?;
    let specs = [KernelSpec::gaussian(0.5)?, KernelSpec::polynomial(3)?, KernelSpec::Linear];
    for spec in &specs {
        println!(
            "{spec:<14} K(x,z) = {:>9.5}  K(x,x) = {:>8.4}  |phi(x)-phi(z)|^2 = {:.5}",
            kernel_product(spec, &x, &z),
            kernel_product(spec, &x, &x),
            kernel_distance_sq(spec, &x, &z)
        );
    }
    let parsed: KernelSpec = "gaussian:0.25".parse()?;
    println!("parsed kernel: {parsed}");

    // room for roughly four rows of 64 doubles
    let mut cache = KernelCache::new(4 * 64 * 8);
    for key in [0, 1, 2, 0, 3, 4, 0, 5, 1] {
        let row = cache.get_or_insert_with(key, || vec![key as f64; 64]);
        assert_eq!(row[0], key as f64);
    }
    let (hits, misses) = cache.stats();
    println!("cache: {} rows, {} of {} bytes, {hits} hits / {misses} misses", cache.len(), cache.used_bytes(), cache.capacity());
    Ok(())
}
