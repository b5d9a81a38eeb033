//! Pareto front of allocations for a scenario file, for both split methods.
//!
//! cargo run --release --example pareto_allocation -- [scenario.json]

use phc::allocator::allocate;
use phc::experiment::split_application;
use phc::metrics::Method;
use phc::scenario::load_scenario;

fn main() -> phc::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/normal.json").into());
    let app = load_scenario(&path)?;
    let split = split_application(&app, app.sim.seed)?;
    println!(
        "{}: {} images, {} instances, limits {:?}",
        app.name,
        app.images.len(),
        app.instances.len(),
        app.constraints
    );
    for method in [Method::Approach, Method::Baseline] {
        match allocate(&app, split.fragments(method)) {
            Ok(front) => {
                println!("{method}: {} solutions", front.len());
                for s in &front.solutions {
                    println!("  f1={} f2={:.6} f3={:.2}", s.f1, s.f2, s.f3);
                }
                if let Some(r) = front.representative() {
                    for a in &r.assignments {
                        println!("  {} -> {:?}", a.image_id, a.mapping);
                    }
                }
            }
            Err(phc::Error::Infeasible) => println!("{method}: no feasible allocation"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
