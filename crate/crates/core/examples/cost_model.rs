//! Busy time and price of one fragment on a few nodes.

use phc::costmodel::{cost_line, node_completion, Billing};
use phc::scenario::{CloudInstance, Patch, Simulation};
use phc::splitter::Fragment;

fn node(id: &str, b: f64, perf: f64, p: f64) -> CloudInstance {
    CloudInstance {
        id: id.into(),
        gpu: "T4".into(),
        vcpu: 8,
        ram: 32,
        sto: 256,
        b,
        loc: String::new(),
        p,
        perf,
    }
}

fn main() -> phc::Result<()> {
    let fragment = Fragment {
        image_id: "slide".into(),
        fragment_index: 0,
        patches: (0..1000u64)
            .map(|i| Patch {
                patch_id: i,
                x: i as u32,
                y: 0,
            })
            .collect(),
        size_bytes: 1000 * 224 * 224 * 3,
    };
    let sim = Simulation::default();
    let nodes = [
        node("on-prem", 5e7, 0.8, 0.0),
        node("cloud-t4", 1e8, 1.0, 1e-4),
        node("cloud-a100", 1e8, 3.5, 6e-4),
    ];
    println!(
        "{:<11} {:>9} {:>9} {:>9} {:>9} {:>11} {:>11}",
        "node", "deploy", "compute", "comm", "total", "cost/s", "cost/min"
    );
    for n in &nodes {
        let t = node_completion(&fragment, n, &sim)?;
        let per_second = cost_line(&t, n, Billing::Continuous).cost;
        let per_minute = cost_line(&t, n, Billing::PerMinute).cost;
        println!(
            "{:<11} {:>9.4} {:>9.4} {:>9.5} {:>9.4} {:>11.3e} {:>11.3e}",
            n.id, t.t_deploy, t.t_compute, t.t_comm, t.t_total, per_second, per_minute
        );
    }
    Ok(())
}
