//! Asymptotic confidence ellipsoids for the conditional median.
//!
//! Builds the plug-in ellipsoid at a query curve, prints its axes and
//! conditioning diagnostics, and tests candidate response vectors for
//! membership via the quadratic-form statistic.
//!
//! Run with `cargo run --release --example confidence_ellipsoid`.

use fmedreg::fda::SemiMetricKind;
use fmedreg::inference::{confidence_ellipsoid, ellipsoid_axes, ellipsoid_contains};
use fmedreg::kernel::KernelSpec;
use fmedreg::regression::{
    bandwidth_cv_l1_with, pairwise_for_model, quantile_h_candidates, BandwidthRule, CandidateGrid,
    FittedModel, Method,
};
use fmedreg::simulation::{generate_dataset, SimConfig};
use nalgebra::DVector;

fn main() -> fmedreg::Result<()> {
    let cfg = SimConfig::new(400, 100, 1.0, 9, 1)?;
    let (sample, responses) = generate_dataset(&cfg)?;

    // Compact kernel support is required for inference: weights, and hence
    // the plug-in variance pieces, must come from a bounded window.
    let sm = SemiMetricKind::Fpca { q: 2 }.realize(&sample)?;
    let mut model = FittedModel::new(
        sample,
        responses,
        sm,
        KernelSpec::TruncGauss,
        BandwidthRule::fixed(1.0)?,
        Method::Cmm,
    )?;
    let pairwise = pairwise_for_model(&model)?;
    let hs = quantile_h_candidates(&pairwise)?;
    let (rule, _) = bandwidth_cv_l1_with(&model, &CandidateGrid::FixedH(hs), &pairwise)?;
    model.set_bandwidth(rule);

    // The flat curve is the centre of the simulated design, so the true
    // conditional median there is the origin.
    let x = vec![0.0; 100];
    let ell = confidence_ellipsoid(&model, &x, 0.05)?;

    println!("95% confidence ellipsoid at the zero curve:");
    println!("  center   = ({:.4}, {:.4})", ell.center[0], ell.center[1]);
    println!("  radius^2 = {:.6} (chi-square quantile, 2 dof)", ell.radius2);
    let axes = ellipsoid_axes(&ell);
    println!("  semi-axes = {:.4}, {:.4}", axes[0], axes[1]);
    println!(
        "  diagnostics: ridge {:.2e}, dropped terms {}, effective n {}",
        ell.diagnostics.ridge, ell.diagnostics.dropped_terms, ell.diagnostics.effective_n
    );

    for (label, y) in [
        ("truth (0, 0)", DVector::from_row_slice(&[0.0, 0.0])),
        ("center", ell.center.clone()),
        ("far point (2, -2)", DVector::from_row_slice(&[2.0, -2.0])),
    ] {
        let (inside, stat) = ellipsoid_contains(&ell, &y)?;
        println!("  {:<18} statistic {:>10.4}  inside = {}", label, stat, inside);
    }

    // Tighter confidence (smaller alpha) means a larger region.
    for alpha in [0.01, 0.05, 0.25] {
        let e = confidence_ellipsoid(&model, &x, alpha)?;
        let a = ellipsoid_axes(&e);
        println!("  alpha {:>4.2}: major semi-axis {:.4}", alpha, a[0]);
    }

    Ok(())
}
