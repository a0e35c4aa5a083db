//! Leave-one-out bandwidth selection for functional kernel regression.
//!
//! Shows both candidate families — fixed bandwidths from distance
//! quantiles and nearest-neighbour counts — with their cross-validation
//! scores, and how the chosen rule transfers to new query curves.
//!
//! Run with `cargo run --release --example bandwidth_cv`.

use fmedreg::fda::SemiMetricKind;
use fmedreg::kernel::KernelSpec;
use fmedreg::regression::{
    bandwidth_cv_l1_with, knn_candidates, pairwise_for_model, quantile_h_candidates,
    resolved_loo_bandwidths, transfer_bandwidth, BandwidthRule, CandidateGrid, FittedModel, Method,
};
use fmedreg::simulation::{generate_dataset, SimConfig};

fn main() -> fmedreg::Result<()> {
    let cfg = SimConfig::new(150, 100, 1.0, 5, 1)?;
    let (sample, responses) = generate_dataset(&cfg)?;

    let sm = SemiMetricKind::Fpca { q: 2 }.realize(&sample)?;
    let model = FittedModel::new(
        sample.clone(),
        responses,
        sm,
        KernelSpec::Quadratic,
        BandwidthRule::fixed(1.0)?,
        Method::Cmm,
    )?;
    let pairwise = pairwise_for_model(&model)?;

    // Fixed bandwidths: fifteen log-spaced quantiles of the positive
    // pairwise distances adapt the grid to the distance scale.
    let hs = quantile_h_candidates(&pairwise)?;
    let (best_h, records) = bandwidth_cv_l1_with(&model, &CandidateGrid::FixedH(hs), &pairwise)?;
    println!("fixed-bandwidth candidates (loo L1 score, * = chosen):");
    for r in &records {
        let tag = if r.rule == best_h { " *" } else { "" };
        println!("  {:<18} score {:>9.4}  empty folds {}{}", r.rule.tag(), r.score, r.empty_folds, tag);
    }

    // Neighbour counts: k-nearest-neighbour bandwidths can never empty a
    // smoothing window, so every candidate is admissible.
    let ks = knn_candidates(model.n());
    let (best_k, records) = bandwidth_cv_l1_with(&model, &CandidateGrid::Knn(ks), &pairwise)?;
    println!("\nneighbour-count candidates (first six):");
    for r in records.iter().take(6) {
        let tag = if r.rule == best_k { " *" } else { "" };
        println!("  {:<18} score {:>9.4}{}", r.rule.tag(), r.score, tag);
    }
    println!("  ... chosen: {}", best_k.tag());

    // A chosen neighbour count resolves to a different radius at every
    // query curve; the transfer rule hands a new curve the bandwidth of
    // its nearest learning curve.
    let x = sample.curve(0);
    let resolved = best_k.resolve(&model.distances_to(&x)?)?;
    println!("\n{} resolves to h = {:.4} at curve 0", best_k.tag(), resolved);

    let mut model = model;
    model.set_bandwidth(best_k);
    let per_curve = resolved_loo_bandwidths(&model)?;
    let transferred = transfer_bandwidth(&model, &x, &per_curve)?;
    println!("transferred rule at curve 0: {}", transferred.tag());

    Ok(())
}
