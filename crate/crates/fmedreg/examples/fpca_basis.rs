//! Functional principal components of simulated Brownian paths.
//!
//! Fits the empirical covariance eigenbasis to a sample of rough curves and
//! compares the leading eigenvalues to the classical Brownian-motion values
//! 4 / ((2j − 1)² π²), then shows projection distances between curves.
//!
//! Run with `cargo run --example fpca_basis`.

use fmedreg::fda::{distances_to, fit_fpca, SemiMetric};
use fmedreg::simulation::{generate_dataset, SimConfig};
use std::f64::consts::PI;

fn main() -> fmedreg::Result<()> {
    let cfg = SimConfig::new(400, 100, 1.0, 42, 1)?;
    let (sample, _responses) = generate_dataset(&cfg)?;

    let basis = fit_fpca(&sample, 4)?;
    println!("fitted {} components on {} curves, grid length {}", basis.q(), sample.n(), sample.grid().len());

    let total = basis.total_variance();
    println!("\n  j   eigenvalue   theory      explained");
    let mut cum = 0.0;
    for (j, &lambda) in basis.eigenvalues().iter().enumerate() {
        let jj = (j + 1) as f64;
        let theory = 4.0 / ((2.0 * jj - 1.0) * (2.0 * jj - 1.0) * PI * PI);
        cum += lambda;
        println!("  {}   {:.6}     {:.6}    {:.1}%", j + 1, lambda, theory, 100.0 * cum / total);
    }

    // Scores are quadrature inner products against the eigenfunctions.
    let scores = basis.scores(&sample.curve(0))?;
    println!("\nscores of curve 0: {:?}", scores.iter().map(|s| (s * 1e3).round() / 1e3).collect::<Vec<_>>());

    // The projection distance ignores everything outside the leading
    // components, so it is a semi-metric: far curves can project close.
    let sm = SemiMetric::Fpca(basis);
    let d = distances_to(&sample, &sm, &sample.curve(0))?;
    let mut order: Vec<usize> = (1..sample.n()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    println!("\nnearest three curves to curve 0 in projection distance:");
    for &i in order.iter().take(3) {
        println!("  curve {:3}  d = {:.4}", i, d[i]);
    }
    println!("farthest: curve {} at d = {:.4}", order[order.len() - 1], d[order[order.len() - 1]]);

    Ok(())
}
