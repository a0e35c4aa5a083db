//! Learn/test benchmark of the three estimators on spectrometric-style data.
//!
//! By default this runs on a bundled synthetic stand-in shaped like a
//! near-infrared spectrometry dataset (215 curves, 100 wavelengths, three
//! correlated responses). Pass two CSV paths — curves, then responses — to
//! benchmark real data in the same two-file layout instead:
//!
//! ```text
//! cargo run --release --example spectrometric_benchmark
//! cargo run --release --example spectrometric_benchmark -- curves.csv responses.csv
//! ```

use fmedreg::bench::{
    correlation_summary, evaluate, parse_dataset, split_learn_test, synthetic_standin, EvalConfig,
    ParseOptions, SplitSpec,
};
use std::path::Path;

fn main() -> fmedreg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ds = match args.as_slice() {
        [] => {
            println!("no files given; using the bundled synthetic stand-in\n");
            synthetic_standin(0)
        }
        [curves, responses] => parse_dataset(
            Path::new(curves),
            Path::new(responses),
            &ParseOptions::default(),
        )?,
        _ => {
            eprintln!("usage: spectrometric_benchmark [curves.csv responses.csv]");
            std::process::exit(2);
        }
    };

    println!(
        "{} curves on a {}-point grid, responses: {}",
        ds.n(),
        ds.sample.grid().len(),
        ds.response_names.join(", ")
    );

    // Responses of this kind are strongly collinear; print the pairwise
    // correlations before any modelling.
    let c = correlation_summary(&ds)?;
    println!("\nresponse correlations:");
    for i in 0..c.nrows() {
        for j in (i + 1)..c.ncols() {
            println!(
                "  corr({}, {}) = {:>7.3}",
                ds.response_names[i], ds.response_names[j], c[(i, j)]
            );
        }
    }

    let (learn, test) = split_learn_test(&ds, SplitSpec::FileOrder { n_learn: 160 })?;
    let report = evaluate(&learn, &test, &EvalConfig::default())?;

    println!("\nper-method test error (Euclidean norm R):");
    println!("  method  semimetric  bandwidth           mean      q25      q50      q75");
    for m in &report.methods {
        let r = m.rows.iter().find(|r| r.label == "R").expect("R row");
        println!(
            "  {:<6}  {:<10}  {:<18} {:>7.3}  {:>7.3}  {:>7.3}  {:>7.3}",
            m.method.tag(),
            m.semimetric,
            m.bandwidth.tag(),
            r.mean,
            r.q25,
            r.q50,
            r.q75
        );
    }
    for (method, err) in &report.method_failures {
        println!("  {:<6}  FAILED: {}", method.tag(), err);
    }

    println!("\nper-component mean absolute error:");
    for m in &report.methods {
        let comps: Vec<String> = m
            .rows
            .iter()
            .filter(|r| r.label != "R")
            .map(|r| format!("{} {:.3}", r.label, r.mean))
            .collect();
        println!("  {:<6}  {}", m.method.tag(), comps.join("  "));
    }

    println!(
        "\nfits run: cmm {}, vccm {}, nf {}",
        report.diagnostics.cmm_fits, report.diagnostics.vccm_fits, report.diagnostics.nf_fits
    );

    Ok(())
}
