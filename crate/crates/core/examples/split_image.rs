//! Colors a synthetic tissue mask and splits it into independent-set
//! fragments, next to the even split with the same fragment count.
//!
//! cargo run --example split_image -- [width] [height] [seed]

use phc::scenario::{create_patches, generate_synthetic_mask, PatchSpec};
use phc::splitter::{baseline_even_split, build_graph, greedy_color_rs, split_by_color, NeighborhoodRule};

fn main() -> phc::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (w, h, seed) = (
        *args.first().unwrap_or(&32) as usize,
        *args.get(1).unwrap_or(&16) as usize,
        *args.get(2).unwrap_or(&7),
    );
    let mask = generate_synthetic_mask(w, h, 0.45, seed)?;
    let set = create_patches(&mask, PatchSpec::default(), "demo")?;

    for rule in [NeighborhoodRule::Four, NeighborhoodRule::Eight] {
        let graph = build_graph(&set, rule)?;
        let coloring = greedy_color_rs(&graph, seed);
        let fragments = split_by_color(&set, &coloring)?;
        println!(
            "{rule:?}: {} patches, max degree {}, {} colors, fragment sizes {:?}",
            set.len(),
            graph.max_degree(),
            coloring.chi,
            fragments.iter().map(|f| f.len()).collect::<Vec<_>>()
        );
        if rule == NeighborhoodRule::Four {
            let color_at: std::collections::HashMap<(u32, u32), usize> = set
                .patches
                .iter()
                .map(|p| ((p.x, p.y), coloring.color_of[&p.patch_id]))
                .collect();
            for y in 0..h as u32 {
                let row: String = (0..w as u32)
                    .map(|x| color_at.get(&(x, y)).map_or('.', |c| char::from(b'a' + *c as u8)))
                    .collect();
                println!("  {row}");
            }
        }
        let even = baseline_even_split(&set, coloring.chi, seed)?;
        println!(
            "  even split sizes {:?}",
            even.iter().map(|f| f.len()).collect::<Vec<_>>()
        );
    }
    Ok(())
}
