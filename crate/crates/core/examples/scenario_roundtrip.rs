//! Generates a scenario, writes it, and loads it back.

use phc::cli::generate_scenario;
use phc::scenario::{build_application, parse_scenario};

fn main() -> phc::Result<()> {
    let file = generate_scenario(2, 5, 16, 12, 0.5, 42)?;
    let text = file.to_json();
    let app = build_application(file, None)?;
    let back = parse_scenario(&text, None)?;
    for img in &back.images {
        println!(
            "{}: {}x{} grid, {} patches",
            img.image_id,
            img.grid_width,
            img.grid_height,
            img.len()
        );
        print!("{}", img.to_mask().to_text());
    }
    for n in &back.instances {
        println!("{:<9} b={:.2e} perf={} p={}", n.id, n.b, n.perf, n.p);
    }
    println!("identical after reload: {}", back.to_scenario() == app.to_scenario());
    Ok(())
}
