//! Encodes the fragments of one image and shows what leaves the trusted
//! zone versus what stays behind in the key.

use phc::encoder::{decode, encode_image, EncodeConfig};
use phc::experiment::split_approach;
use phc::scenario::{create_patches, generate_synthetic_mask, PatchSpec};
use phc::splitter::NeighborhoodRule;

fn main() -> phc::Result<()> {
    let mask = generate_synthetic_mask(40, 30, 0.4, 11)?;
    let set = create_patches(&mask, PatchSpec::default(), "slide-17")?;
    let fragments = split_approach(&set, NeighborhoodRule::Eight, 11)?;
    let cfg = EncodeConfig {
        k_dims: 2,
        noise_scale: 0.05,
        seed: 11,
    };
    for (enc, key) in encode_image(&set, &fragments, &cfg)? {
        println!(
            "{} ({} rows, {} bytes shipped)",
            enc.opaque_name,
            enc.len(),
            enc.size_bytes
        );
        for line in enc.to_csv().lines().take(3) {
            println!("    {line}");
        }
        let restored = decode(&enc, &key);
        let worst = restored
            .iter()
            .map(|&(id, x, y)| {
                let p = set.patches.iter().find(|p| p.patch_id == id).expect("known patch");
                (x - p.x as f64).abs().max((y - p.y as f64).abs())
            })
            .fold(0.0, f64::max);
        println!(
            "    key restores {} of {} fragment {}, worst deviation {worst:.3}",
            key.ids.len(),
            key.image_id,
            key.fragment_index
        );
    }
    Ok(())
}
