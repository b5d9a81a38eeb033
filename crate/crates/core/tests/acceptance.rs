//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use phc::allocator::{allocate, allocate_with_pools, brute_force_front_with_pools, ParetoFront};
use phc::costmodel::{monetary_cost, node_completion, Billing};
use phc::experiment::{
    compare, evaluate_images, run_allocation_experiment, run_privacy_experiment, split_application, PreferencePreset,
    PresetName, PrivacyConfig, Verdict,
};
use phc::pareto::{dominates, pareto_filter_2d, pareto_filter_3d};
use phc::scenario::{
    build_application, create_patches, generate_synthetic_mask, load_scenario, Application, CloudInstance, Constraints,
    ImageEntry, ImageSource, Patch, PatchSpec, ScenarioFile, Simulation,
};
use phc::splitter::{build_graph, greedy_color_rs, split_by_color, AdjacencyGraph, Fragment, NeighborhoodRule};
use phc::{cli, seed};
use rand::Rng;

const GOLDEN: [&str; 4] = ["normal", "vsn", "vtb", "vst"];

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn golden(name: &str) -> Application {
    load_scenario(golden_path(name)).unwrap()
}

fn verdict(n: u32, title: &str, ok: bool, detail: String, elapsed: Duration, budget: Duration) {
    let ok_time = elapsed <= budget;
    let status = if ok && ok_time { "PASS" } else { "FAIL" };
    println!("criterion {n} [{status}] {title}: {detail} ({elapsed:.2?}, limit {budget:?})");
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(ok_time, "criterion {n} exceeded its time limit: {elapsed:?}");
}

#[test]
fn criterion_1_output_utility_is_exact() {
    let start = Instant::now();
    let mut images = 0;
    let mut worst = f64::INFINITY;
    for name in GOLDEN {
        let app = golden(name);
        let cmp = evaluate_images(&app.images, &[1, 2, 3, 4, 5], &app.sim).unwrap();
        images += app.images.len() * 5;
        for r in &cmp.per_image {
            worst = worst.min(r.report.output_utility.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "output utility",
        worst == 1.0,
        format!("minimum utility {worst} over {images} image runs"),
        elapsed,
        Duration::from_secs(images as u64),
    );
}

#[test]
fn criterion_2_privacy_trend() {
    let start = Instant::now();
    let cmp = run_privacy_experiment(&PrivacyConfig::default()).unwrap();
    let (a, b) = (&cmp.approach, &cmp.baseline);
    let detail = format!(
        "AIG x {:.3} vs {:.3}, AIG y {:.3} vs {:.3}, rho x {:.3} vs {:.3}, rho y {:.3} vs {:.3} (approach vs baseline, {} images x {} seeds)",
        a.aig_x.mean,
        b.aig_x.mean,
        a.aig_y.mean,
        b.aig_y.mean,
        a.rho_x.mean,
        b.rho_x.mean,
        a.rho_y.mean,
        b.rho_y.mean,
        cmp.images,
        cmp.seeds.len()
    );
    let ok = cmp.images >= 20 && cmp.seeds.len() >= 5 && cmp.approach_wins();
    verdict(2, "privacy trend", ok, detail, start.elapsed(), Duration::from_secs(60));
}

fn random_graph(rng: &mut impl Rng) -> AdjacencyGraph {
    let n = rng.random_range(1..60);
    let p = rng.random_range(0.0..0.5);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    AdjacencyGraph::from_edges(n, &edges)
}

fn fragments_are_independent(fragments: &[Fragment], rule: NeighborhoodRule) -> bool {
    fragments.iter().all(|f| {
        f.patches.iter().enumerate().all(|(i, a)| {
            f.patches[i + 1..]
                .iter()
                .all(|b: &Patch| !rule.adjacent((a.x, a.y), (b.x, b.y)))
        })
    })
}

#[test]
fn criterion_3_coloring_correctness() {
    let start = Instant::now();
    let mut rng = seed::rng(3);
    let mut failures = 0;
    for case in 0..1000u64 {
        let ok = if case % 2 == 0 {
            let g = random_graph(&mut rng);
            let c = greedy_color_rs(&g, case);
            c.is_proper(&g) && c.chi <= g.max_degree() + 1
        } else {
            let (w, h) = (rng.random_range(1..24), rng.random_range(1..24));
            let fraction = rng.random_range(0.05..0.95);
            let mask = generate_synthetic_mask(w, h, fraction, case).unwrap();
            if mask.tissue_count() == 0 {
                continue;
            }
            let set = create_patches(&mask, PatchSpec::default(), "img").unwrap();
            let rule = if case % 4 == 1 {
                NeighborhoodRule::Four
            } else {
                NeighborhoodRule::Eight
            };
            let g = build_graph(&set, rule).unwrap();
            let c = greedy_color_rs(&g, case);
            let frags = split_by_color(&set, &c).unwrap();
            c.is_proper(&g)
                && c.chi <= g.max_degree() + 1
                && frags.iter().map(Fragment::len).sum::<usize>() == set.len()
                && fragments_are_independent(&frags, rule)
        };
        if !ok {
            failures += 1;
        }
    }
    verdict(
        3,
        "coloring correctness",
        failures == 0,
        format!("{failures} failures in 1000 cases"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

fn oracle<const D: usize>(points: &[[f64; D]]) -> BTreeSet<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
        .collect()
}

#[test]
fn criterion_4_pareto_filters_match_oracle() {
    let start = Instant::now();
    let mut rng = seed::rng(4);
    let mut mismatches = 0;
    for trial in 0..100 {
        // Coarse grids force ties, fine values exercise the general case.
        let grid = if trial % 2 == 0 { 12.0 } else { 1e6 };
        let mut draw = || (rng.random::<f64>() * grid).floor();
        let p2: Vec<[f64; 2]> = (0..500).map(|_| [draw(), draw()]).collect();
        let p3: Vec<[f64; 3]> = (0..500).map(|_| [draw(), draw(), draw()]).collect();
        if pareto_filter_2d(&p2).into_iter().collect::<BTreeSet<_>>() != oracle(&p2) {
            mismatches += 1;
        }
        if pareto_filter_3d(&p3).into_iter().collect::<BTreeSet<_>>() != oracle(&p3) {
            mismatches += 1;
        }
    }
    verdict(
        4,
        "pareto filter exactness",
        mismatches == 0,
        format!("{mismatches} mismatching sets in 200"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

/// Recomputes every objective of every solution from its assignments.
fn front_is_sound<F: phc::costmodel::Workload>(app: &Application, fragments: &[Vec<F>], front: &ParetoFront) -> bool {
    front.solutions.iter().all(|s| {
        let mut used = BTreeSet::new();
        let mut cost = 0.0;
        let mut makespan: f64 = 0.0;
        for (img, a) in fragments.iter().zip(&s.assignments) {
            let mut timings = Vec::new();
            for (k, id) in &a.mapping {
                let node = app.instances.iter().find(|n| &n.id == id).unwrap();
                used.insert(id.clone());
                timings.push((node_completion(&img[*k], node, &app.sim).unwrap(), node));
            }
            cost += monetary_cost(&timings, Billing::Continuous);
            makespan = timings.iter().map(|(t, _)| t.t_total).fold(makespan, f64::max);
            if a.mapping.len() != img.len() {
                return false;
            }
        }
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.abs().max(1.0);
        s.is_feasible(&app.constraints) && used.len() == s.f1 && close(s.f2, cost) && close(s.f3, makespan)
    }) && front.solutions.iter().all(|a| {
        front
            .solutions
            .iter()
            .all(|b| !dominates(&b.objectives(), &a.objectives()))
    })
}

#[test]
fn criterion_5_allocator_feasibility_and_non_dominance() {
    let start = Instant::now();
    let mut checked = 0;
    let mut bad = Vec::new();
    for name in GOLDEN {
        let app = golden(name);
        let split = split_application(&app, app.sim.seed).unwrap();
        for frags in [&split.approach, &split.baseline] {
            match allocate(&app, frags) {
                Ok(front) => {
                    checked += front.len();
                    if !front_is_sound(&app, frags, &front) {
                        bad.push(name);
                    }
                }
                Err(phc::Error::Infeasible) => {}
                Err(e) => panic!("{name}: {e}"),
            }
        }
    }
    verdict(
        5,
        "allocator feasibility and non-dominance",
        bad.is_empty(),
        format!("{checked} solutions checked, unsound fronts: {bad:?}"),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

fn pool_scenario(case: u64) -> ScenarioFile {
    let mut rng = seed::rng(600 + case);
    let n_images = rng.random_range(2..=3);
    let images = (0..n_images)
        .map(|i| ImageEntry {
            id: format!("img-{i}"),
            source: ImageSource::Synthetic(phc::scenario::SyntheticSpec {
                width: rng.random_range(6..14),
                height: rng.random_range(6..14),
                tissue_fraction: rng.random_range(0.3..0.7),
                seed: rng.random(),
            }),
        })
        .collect();
    let instances = (0..4 * n_images)
        .map(|i| CloudInstance {
            id: format!("node-{i:02}"),
            gpu: "T4".into(),
            vcpu: 8,
            ram: 32,
            sto: 100,
            b: 10f64.powf(rng.random_range(6.0..8.0)),
            loc: String::new(),
            p: if rng.random_bool(0.3) {
                0.0
            } else {
                10f64.powf(rng.random_range(-5.0..-3.0))
            },
            perf: rng.random_range(0.2..3.0),
        })
        .collect();
    let (budget, time) = if case.is_multiple_of(2) { (1.0, 1e4) } else { (0.01, 2.0) };
    ScenarioFile {
        name: format!("pools-{case}"),
        patch: PatchSpec::default(),
        images,
        instances,
        constraints: Constraints::new(12, budget, time).unwrap(),
        simulation: Simulation {
            rule: NeighborhoodRule::Four,
            seed: case,
            ..Simulation::default()
        },
    }
}

fn vectors(r: phc::Result<ParetoFront>) -> Vec<[u64; 3]> {
    let mut v: Vec<[u64; 3]> = match r {
        Ok(f) => f.objective_vectors().iter().map(|o| o.map(f64::to_bits)).collect(),
        Err(phc::Error::Infeasible) => vec![],
        Err(e) => panic!("{e}"),
    };
    v.sort_unstable();
    v
}

#[test]
fn criterion_6_greedy_front_equals_brute_force() {
    let start = Instant::now();
    let mut scenarios = 0;
    let mut nonempty = 0;
    let mut mismatches = 0;
    let mut case = 0;
    while scenarios < 8 {
        let app = build_application(pool_scenario(case), None).unwrap();
        case += 1;
        let split = split_application(&app, app.sim.seed).unwrap();
        if split.approach.iter().any(|f| f.len() > 4) {
            continue;
        }
        let pools: Vec<Vec<usize>> = (0..app.images.len()).map(|i| (4 * i..4 * i + 4).collect()).collect();
        for frags in [&split.approach, &split.baseline] {
            let greedy = vectors(allocate_with_pools(&app, frags, &pools));
            let brute = vectors(brute_force_front_with_pools(&app, frags, &pools));
            nonempty += usize::from(!brute.is_empty());
            if greedy != brute {
                mismatches += 1;
            }
        }
        scenarios += 1;
    }
    verdict(
        6,
        "greedy front equals brute force on disjoint pools",
        mismatches == 0 && nonempty > 0,
        format!("{mismatches} mismatches over {scenarios} scenarios x 2 methods, {nonempty} non-empty fronts"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_7_table_shape_on_golden_files() {
    let start = Instant::now();
    let seeds = [1, 2, 3, 4, 5];
    let run = |file: &str, preset: PresetName| {
        let app = golden(file);
        run_allocation_experiment(&app, &[PreferencePreset::new(preset)], &seeds)
            .unwrap()
            .remove(0)
    };
    let normal = run("normal", PresetName::Normal);
    let vsn = run("vsn", PresetName::Vsn);
    let vtb = run("vtb", PresetName::Vtb);
    let vst = run("vst", PresetName::Vst);
    let all = |s: &phc::experiment::PresetSummary, v: Verdict| s.runs.iter().all(|r| r.verdict == v);
    let normal_ok = all(&normal, Verdict::ApproachDominatesAll);
    let vsn_ok = all(&vsn, Verdict::ApproachDominatesAll);
    let vtb_ok = all(&vtb, Verdict::OnlyApproachFeasible);
    let vst_ok = vst.runs.iter().all(|r| r.verdict.approach_fails());

    let out = tempfile::tempdir().unwrap();
    let res = cli::dispatch([
        "phc",
        "compare",
        "--scenario",
        golden_path("vst").to_str().unwrap(),
        "--presets",
        "VST",
        "--seeds",
        "1..5",
        "--no-privacy",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    let logged =
        res.exit_code == cli::EXIT_OK && res.log.iter().any(|l| l.contains("fragment size variance: approach"));

    let rep = |s: &phc::experiment::PresetSummary| {
        let r = &s.runs[0];
        format!("{:?}/{:?}", r.approach.objectives(), r.baseline.objectives())
    };
    verdict(
        7,
        "preset table shape",
        normal_ok && vsn_ok && vtb_ok && vst_ok && logged,
        format!(
            "Normal {normal_ok} {}, VSN {vsn_ok}, VTB {vtb_ok} {}, VST {vst_ok} {}, explanation logged {logged}",
            rep(&normal),
            rep(&vtb),
            rep(&vst)
        ),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_8_worked_cost_example() {
    let start = Instant::now();
    let node = CloudInstance {
        id: "n".into(),
        gpu: "T4".into(),
        vcpu: 4,
        ram: 16,
        sto: 0,
        b: 1e8,
        loc: String::new(),
        p: 1e-4,
        perf: 1.0,
    };
    let frag = Fragment {
        image_id: "img".into(),
        fragment_index: 0,
        patches: (0..1000u64)
            .map(|i| Patch {
                patch_id: i,
                x: i as u32,
                y: 0,
            })
            .collect(),
        size_bytes: 1000 * 150_528,
    };
    let sim = Simulation {
        base_throughput: 200.0,
        output_bytes_per_patch: 64,
        ..Simulation::default()
    };
    let t = node_completion(&frag, &node, &sim).unwrap();
    let cost = monetary_cost(&[(t, &node)], Billing::Continuous);
    let ok = (t.t_total - 6.50592).abs() <= 1e-9 && (cost - 6.50592e-4).abs() <= 1e-9;
    verdict(
        8,
        "cost and time arithmetic",
        ok,
        format!("t_total {} s, cost {cost:e}", t.t_total),
        start.elapsed(),
        Duration::from_millis(100),
    );
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_compare_is_deterministic() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let scenario = golden_path("normal");
    let outputs: Vec<_> = ["a", "b"]
        .iter()
        .map(|run| {
            let out = tmp.path().join(run);
            let res = cli::dispatch([
                "phc",
                "compare",
                "--scenario",
                scenario.to_str().unwrap(),
                "--presets",
                "all",
                "--seeds",
                "1..3",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(res.exit_code, cli::EXIT_OK, "{:?}", res.log);
            read_all(&out)
        })
        .collect();
    // The library path must agree with itself as well.
    let app = golden("normal");
    let twice = (0..2)
        .map(|_| {
            compare(&app, &PreferencePreset::all(), &[1, 2], false)
                .unwrap()
                .to_json()
        })
        .collect::<Vec<_>>();
    let ok = outputs[0] == outputs[1] && outputs[0].len() >= 4 && twice[0] == twice[1];
    verdict(
        9,
        "compare determinism",
        ok,
        format!("{} report files compared byte for byte", outputs[0].len()),
        start.elapsed(),
        Duration::from_secs(60),
    );
}
