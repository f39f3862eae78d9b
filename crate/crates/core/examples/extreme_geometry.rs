//! Enclosing ball, surface ordering and the hull-distance test on a small
//! point cloud, then the extreme points of the whole cloud.
//!
//! cargo run --release --example extreme_geometry -- [epsilon]

use aesvm::data::{Dataset, SparseVector};
use aesvm::extremes::{check_point, derive_ae, sphere_set, sphere_sort};
use aesvm::kernel::KernelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon: f64 = std::env::args().nth(1).map_or(Ok(1e-3), |s| s.parse())?;
    // square corners, edge midpoints and a centre
    let pts = [
        [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
        [0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5],
        [0.5, 0.5],
    ];
    let ds = Dataset::new("square", pts.iter().map(|p| SparseVector::from_dense(p)).collect(), vec![1; pts.len()])?;
    let spec = KernelSpec::Linear;
    let all: Vec<usize> = (0..pts.len()).collect();

    let ball = sphere_set(&all, &spec, &ds);
    println!("radius^2 {:.4}, surface points {:?}", ball.radius_sq, ball.member_indices);
    println!("farthest-first order {:?}", sphere_sort(&all, &ball, &spec, &ds));

    let corners = [0, 1, 2, 3];
    for target in [8, 4] {
        let r = check_point(target, &corners, &spec, &ds, epsilon);
        println!("point {target}: distance^2 to hull {:.2e}, covered: {}", r.p_value, r.is_approx_extreme);
    }
    let outside = Dataset::new("far", vec![SparseVector::from_dense(&[2.0, 2.0])], vec![1])?;
    let mut both = ds.vectors().to_vec();
    both.extend_from_slice(outside.vectors());
    let ext = Dataset::new("ext", both, vec![1; pts.len() + 1])?;
    let r = check_point(pts.len(), &corners, &spec, &ext, epsilon);
    println!("point (2,2): distance^2 to hull {:.3}, covered: {}", r.p_value, r.is_approx_extreme);

    let found = derive_ae(&all, &spec, &ds, epsilon, true);
    println!("extreme points {:?} carrying mass {:?}", found.extremes, found.betas);
    Ok(())
}
