//! Approach against baseline under the four user-preference presets, each on
//! its shipped scenario.

use phc::experiment::{run_allocation_experiment, PreferencePreset, PresetName};
use phc::scenario::load_scenario;

fn main() -> phc::Result<()> {
    let fmt = |o: Option<[f64; 3]>| match o {
        Some([f1, f2, f3]) => format!("({f1}, {f2:.5}, {f3:.1})"),
        None => "N/A".into(),
    };
    for name in PresetName::ALL {
        let file = format!(
            "{}/scenarios/{}.json",
            env!("CARGO_MANIFEST_DIR"),
            name.as_str().to_lowercase()
        );
        let app = load_scenario(&file)?;
        let summary = run_allocation_experiment(&app, &[PreferencePreset::new(name)], &[1, 2, 3])?.remove(0);
        let run = &summary.runs[0];
        println!(
            "{:<6} approach {:<28} baseline {:<28} {:?}",
            name.as_str(),
            fmt(run.approach.objectives()),
            fmt(run.baseline.objectives()),
            run.verdict
        );
        if run.verdict.approach_fails() {
            println!("       {}", run.explanation());
        }
    }
    Ok(())
}
