//! Privacy of the coloring split against the even split over a handful of
//! synthetic images and seeds.
//!
//! cargo run --release --example privacy_report -- [images] [seeds]

use phc::experiment::{run_privacy_experiment, PrivacyConfig};

fn main() -> phc::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let images = args.next().unwrap_or(6);
    let seeds = args.next().unwrap_or(2) as u64;
    let cfg = PrivacyConfig {
        n_images: images,
        seeds: (1..=seeds).collect(),
        ..PrivacyConfig::default()
    };
    let cmp = run_privacy_experiment(&cfg)?;
    println!("{images} images x {seeds} seeds, {} bins", cmp.bins);
    println!(
        "{:<9} {:>8} {:>14} {:>14} {:>12} {:>12}",
        "method", "utility", "AIG x", "AIG y", "rho x", "rho y"
    );
    for m in [&cmp.baseline, &cmp.approach] {
        println!(
            "{:<9} {:>8.3} {:>7.3}±{:<6.3} {:>7.3}±{:<6.3} {:>5.3}±{:<6.3} {:>5.3}±{:<6.3}",
            m.method.to_string(),
            m.output_utility.mean,
            m.aig_x.mean,
            m.aig_x.std,
            m.aig_y.mean,
            m.aig_y.std,
            m.rho_x.mean,
            m.rho_x.std,
            m.rho_y.mean,
            m.rho_y.std
        );
    }
    println!("approach wins on every axis: {}", cmp.approach_wins());
    Ok(())
}
