//! Command-line front end.
//!
//! Exit codes: 0 success, 2 no feasible allocation, 3 invalid input or
//! usage, 4 runtime failure. `--seed` falls back to the `PHC_SEED`
//! environment variable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocator::allocate;
use crate::encoder::{encode_fragment, ColumnStats, EncodeConfig, EncodedFragment, EncodedRow, FragmentKey};
use crate::experiment::{compare, split_approach, split_baseline, MethodPrivacy, PreferencePreset, SeededReport};
use crate::metrics::{evaluate_split, Method, PrivacyReport};
use crate::scenario::{
    load_scenario, CloudInstance, ImageEntry, ImageSource, Patch, PatchSet, PatchSpec, ScenarioFile, Simulation,
    SyntheticSpec,
};
use crate::splitter::{Fragment, NeighborhoodRule};
use crate::{seed, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "phc",
    version,
    about = "Privacy-preserving image splitting and hybrid-cloud Pareto allocation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Approach,
    Baseline,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Approach => Method::Approach,
            MethodArg::Baseline => Method::Baseline,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split every image of a scenario into fragments, one CSV per fragment.
    Split {
        #[arg(long)]
        scenario: PathBuf,
        /// Adjacency rule; defaults to the scenario's.
        #[arg(long, value_enum)]
        rule: Option<NeighborhoodRule>,
        #[arg(long, value_enum, default_value = "approach")]
        method: MethodArg,
        /// Fragment count for the baseline; defaults to the approach's count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, env = "PHC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturb fragment coordinates and rename ids.
    Encode {
        #[arg(long)]
        fragments: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, env = "PHC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Trusted-zone key file; defaults to `<out>.keys.json`.
        #[arg(long)]
        keys: Option<PathBuf>,
    },
    /// Score a split with the privacy metrics.
    PrivacyEval {
        #[arg(long)]
        encoded: PathBuf,
        #[arg(long)]
        private: PathBuf,
        /// Key file written by `encode`; defaults to `<encoded>.keys.json`.
        #[arg(long)]
        keys: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Key of the simulated inference labels.
        #[arg(long, env = "PHC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pareto front of allocations for one split method.
    Allocate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "approach")]
        method: MethodArg,
        #[arg(long, env = "PHC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Approach vs baseline under user-preference presets.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// `all` or a comma-separated list of Normal, VSN, VTB, VST.
        #[arg(long, default_value = "all")]
        presets: String,
        /// `a..b` (inclusive), a comma-separated list, or one seed.
        #[arg(long, default_value = "1..5")]
        seeds: String,
        /// Skip the privacy scores of the scenario images.
        #[arg(long)]
        no_privacy: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a random synthetic scenario.
    GenScenario {
        #[arg(long, default_value_t = 3)]
        images: usize,
        #[arg(long, default_value_t = 6)]
        instances: usize,
        #[arg(long, default_value_t = 40)]
        width: usize,
        #[arg(long, default_value_t = 40)]
        height: usize,
        #[arg(long, default_value_t = 0.4)]
        tissue_fraction: f64,
        #[arg(long, env = "PHC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub log: Vec<String>,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Infeasible => EXIT_INFEASIBLE,
        Error::Io { .. } | Error::ConvergenceFailure(_) | Error::SearchSpaceTooLarge(_) => EXIT_RUNTIME,
        _ => EXIT_INVALID,
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            return CommandResult {
                exit_code: code,
                artifacts: vec![],
                log: vec![e.render().to_string()],
            };
        }
    };
    let mut ctx = Context::default();
    match run(cli.command, &mut ctx) {
        Ok(()) => CommandResult {
            exit_code: EXIT_OK,
            artifacts: ctx.artifacts,
            log: ctx.log,
        },
        Err(e) => {
            ctx.log.push(format!("error: {e}"));
            CommandResult {
                exit_code: exit_code_for(&e),
                artifacts: ctx.artifacts,
                log: ctx.log,
            }
        }
    }
}

#[derive(Default)]
struct Context {
    artifacts: Vec<PathBuf>,
    log: Vec<String>,
}

impl Context {
    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, contents).map_err(|e| Error::io(path, e))?;
        self.artifacts.push(path.to_path_buf());
        Ok(())
    }

    fn info(&mut self, line: String) {
        log::info!("{line}");
        self.log.push(line);
    }
}

/// Parses `a..b` (inclusive), `a,b,c` or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::validation("seeds", format!("cannot parse `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

const MANIFEST: &str = "manifest.json";

/// Index of a fragment directory written by `split`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentEntry {
    pub file: String,
    pub image_id: String,
    pub fragment_index: usize,
    pub bytes_per_patch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentManifest {
    pub method: Method,
    pub seed: u64,
    pub fragments: Vec<FragmentEntry>,
}

/// Index of an encoded directory; holds nothing that links back to images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedEntry {
    pub file: String,
    pub opaque_name: String,
    pub k_dims: usize,
    pub size_bytes: u64,
}

fn fragment_csv(f: &Fragment) -> String {
    let mut out = String::from("patch_id,x,y\n");
    for p in &f.patches {
        out.push_str(&format!("{},{},{}\n", p.patch_id, p.x, p.y));
    }
    out
}

fn parse_fragment_csv(text: &str, path: &Path) -> Result<Vec<Patch>> {
    let bad = |line: usize| Error::Parse(format!("{}: malformed row {line}", path.display()));
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("patch_id,x,y") {
        return Err(Error::Parse(format!(
            "{}: expected header `patch_id,x,y`",
            path.display()
        )));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.trim().split(',').collect();
            if f.len() != 3 {
                return Err(bad(i + 2));
            }
            Ok(Patch {
                patch_id: f[0].parse().map_err(|_| bad(i + 2))?,
                x: f[1].parse().map_err(|_| bad(i + 2))?,
                y: f[2].parse().map_err(|_| bad(i + 2))?,
            })
        })
        .collect()
}

fn parse_encoded_csv(text: &str, entry: &EncodedEntry, path: &Path) -> Result<EncodedFragment> {
    let bad = |line: usize| Error::Parse(format!("{}: malformed row {line}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let k = header.split(',').count().saturating_sub(1);
    if !header.starts_with("opaque_id") || k != entry.k_dims {
        return Err(Error::Parse(format!(
            "{}: unexpected header `{header}`",
            path.display()
        )));
    }
    let rows = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut f = l.trim().split(',');
            let opaque_id = f.next().ok_or_else(|| bad(i + 2))?.to_string();
            let coords = f
                .map(|c| c.parse::<f64>().map_err(|_| bad(i + 2)))
                .collect::<Result<Vec<_>>>()?;
            if coords.len() != k {
                return Err(bad(i + 2));
            }
            Ok(EncodedRow { opaque_id, coords })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedFragment {
        image_id: String::new(),
        fragment_index: 0,
        opaque_name: entry.opaque_name.clone(),
        k_dims: k,
        size_bytes: entry.size_bytes,
        rows,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Fragments of a `split` directory grouped by image, in manifest order.
fn read_fragments(dir: &Path) -> Result<(FragmentManifest, Vec<Vec<Fragment>>)> {
    let manifest: FragmentManifest = read_json(&dir.join(MANIFEST))?;
    let mut by_image: BTreeMap<String, Vec<Fragment>> = BTreeMap::new();
    let mut order = Vec::new();
    for e in &manifest.fragments {
        let path = dir.join(&e.file);
        let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
        let patches = parse_fragment_csv(&text, &path)?;
        if !by_image.contains_key(&e.image_id) {
            order.push(e.image_id.clone());
        }
        by_image.entry(e.image_id.clone()).or_default().push(Fragment {
            image_id: e.image_id.clone(),
            fragment_index: e.fragment_index,
            size_bytes: patches.len() as u64 * e.bytes_per_patch,
            patches,
        });
    }
    let groups = order
        .into_iter()
        .map(|id| {
            let mut v = by_image.remove(&id).unwrap();
            v.sort_by_key(|f| f.fragment_index);
            v
        })
        .collect();
    Ok((manifest, groups))
}

fn keys_path(explicit: Option<PathBuf>, dir: &Path) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut name = dir
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_else(|| "encoded".into());
        name.push(".keys.json");
        dir.with_file_name(name)
    })
}

fn image_stats(frags: &[Fragment]) -> ColumnStats {
    let first = &frags[0];
    let mut set = PatchSet {
        image_id: first.image_id.clone(),
        grid_width: 0,
        grid_height: 0,
        patches: frags.iter().flat_map(|f| f.patches.iter().copied()).collect(),
        spec: PatchSpec::default(),
    };
    set.patches.sort();
    ColumnStats::of_image(&set)
}

fn split_cmd(
    ctx: &mut Context,
    scenario: &Path,
    rule: Option<NeighborhoodRule>,
    method: Method,
    k: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let app = load_scenario(scenario)?;
    let rule = rule.unwrap_or(app.sim.rule);
    let mut manifest = FragmentManifest {
        method,
        seed,
        fragments: Vec::new(),
    };
    for (img_no, set) in app.images.iter().enumerate() {
        let frags = match method {
            Method::Approach => split_approach(set, rule, seed)?,
            Method::Baseline => {
                let k = match k {
                    Some(k) => k,
                    None => split_approach(set, rule, seed)?.len(),
                };
                split_baseline(set, k, seed)?
            }
        };
        ctx.info(format!(
            "{}: {} patches -> {} fragments",
            set.image_id,
            set.len(),
            frags.len()
        ));
        for f in &frags {
            let file = format!("img{img_no:03}_frag{:02}.csv", f.fragment_index);
            ctx.write(&out.join(&file), &fragment_csv(f))?;
            manifest.fragments.push(FragmentEntry {
                file,
                image_id: f.image_id.clone(),
                fragment_index: f.fragment_index,
                bytes_per_patch: set.bytes_per_patch(),
            });
        }
    }
    ctx.write(&out.join(MANIFEST), &to_json(&manifest))
}

fn encode_cmd(ctx: &mut Context, dir: &Path, cfg: EncodeConfig, out: &Path, keys: PathBuf) -> Result<()> {
    let (_, groups) = read_fragments(dir)?;
    let mut entries = Vec::new();
    let mut all_keys: Vec<FragmentKey> = Vec::new();
    for frags in &groups {
        let stats = image_stats(frags);
        for f in frags {
            let (enc, key) = encode_fragment(f, &cfg, Some(&stats))?;
            let file = format!("{}.csv", enc.opaque_name);
            ctx.write(&out.join(&file), &enc.to_csv())?;
            entries.push(EncodedEntry {
                file,
                opaque_name: enc.opaque_name.clone(),
                k_dims: enc.k_dims,
                size_bytes: enc.size_bytes,
            });
            all_keys.push(key);
        }
    }
    // The shipped index must not reveal which image a fragment came from.
    entries.sort_by(|a, b| a.opaque_name.cmp(&b.opaque_name));
    ctx.write(&out.join(MANIFEST), &to_json(&entries))?;
    ctx.write(&keys, &to_json(&all_keys))?;
    ctx.info(format!(
        "encoded {} fragments; keys in {}",
        entries.len(),
        keys.display()
    ));
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyEvalReport {
    pub method: Method,
    pub bins: usize,
    pub summary: MethodPrivacy,
    pub per_image: Vec<PrivacyReport>,
}

fn privacy_eval_cmd(
    ctx: &mut Context,
    encoded: &Path,
    private: &Path,
    keys: PathBuf,
    bins: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (manifest, groups) = read_fragments(private)?;
    let entries: Vec<EncodedEntry> = read_json(&encoded.join(MANIFEST))?;
    let keys: Vec<FragmentKey> = read_json(&keys)?;
    let key_of: BTreeMap<&str, &FragmentKey> = keys.iter().map(|k| (k.opaque_name.as_str(), k)).collect();
    let mut enc_by_origin: BTreeMap<(String, usize), EncodedFragment> = BTreeMap::new();
    for e in &entries {
        let path = encoded.join(&e.file);
        let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
        let mut frag = parse_encoded_csv(&text, e, &path)?;
        let key = key_of
            .get(e.opaque_name.as_str())
            .ok_or_else(|| Error::validation("keys", format!("no key for `{}`", e.opaque_name)))?;
        frag.image_id = key.image_id.clone();
        frag.fragment_index = key.fragment_index;
        enc_by_origin.insert((key.image_id.clone(), key.fragment_index), frag);
    }
    let label_key = seed::derive(seed, &["labels"]);
    let mut reports = Vec::new();
    for frags in &groups {
        let encoded: Vec<EncodedFragment> = frags
            .iter()
            .map(|f| {
                enc_by_origin
                    .remove(&(f.image_id.clone(), f.fragment_index))
                    .ok_or_else(|| {
                        Error::validation(
                            "encoded",
                            format!("missing encoding of {} fragment {}", f.image_id, f.fragment_index),
                        )
                    })
            })
            .collect::<Result<_>>()?;
        reports.push(evaluate_split(manifest.method, frags, &encoded, label_key, bins)?);
    }
    let seeded: Vec<SeededReport> = reports
        .iter()
        .map(|r| SeededReport {
            seed,
            report: r.clone(),
        })
        .collect();
    let summary = crate::experiment::summarize(manifest.method, &seeded);
    ctx.info(format!(
        "{}: utility {:.3}, rho x {:.4} y {:.4}, aig x {:.4} y {:.4}",
        manifest.method,
        summary.output_utility.mean,
        summary.rho_x.mean,
        summary.rho_y.mean,
        summary.aig_x.mean,
        summary.aig_y.mean
    ));
    let report = PrivacyEvalReport {
        method: manifest.method,
        bins,
        summary,
        per_image: reports,
    };
    ctx.write(out, &to_json(&report))
}

fn allocate_cmd(ctx: &mut Context, scenario: &Path, method: Method, seed: u64, out: &Path) -> Result<()> {
    let app = load_scenario(scenario)?;
    let split = crate::experiment::split_application(&app, seed)?;
    match allocate(&app, split.fragments(method)) {
        Ok(front) => {
            if let Some(r) = front.representative() {
                ctx.info(format!(
                    "{method}: {} Pareto solutions; representative f1={} f2={} f3={}",
                    front.len(),
                    r.f1,
                    r.f2,
                    r.f3
                ));
            }
            ctx.write(out, &front.to_csv())
        }
        Err(e @ (Error::Infeasible | Error::PoolTooSmall { .. })) => {
            ctx.write(out, "solution_id,f1,f2,f3,assignments_json\n")?;
            ctx.info(format!("{method}: no feasible allocation (N/A): {e}"));
            Err(Error::Infeasible)
        }
        Err(e) => Err(e),
    }
}

fn compare_cmd(
    ctx: &mut Context,
    scenario: &Path,
    presets: &str,
    seeds: &str,
    privacy: bool,
    out: &Path,
) -> Result<()> {
    let app = load_scenario(scenario)?;
    let presets = PreferencePreset::parse_list(presets)?;
    let seeds = parse_seeds(seeds)?;
    let report = compare(&app, &presets, &seeds, privacy)?;
    for p in &report.presets {
        ctx.info(format!(
            "{}: approach feasible {}/{n}, baseline feasible {}/{n}, approach dominates {}/{n}, approach fails {}/{n}",
            p.preset,
            p.approach_feasible,
            p.baseline_feasible,
            p.approach_dominates,
            p.approach_fails,
            n = p.runs.len()
        ));
        for r in p.runs.iter().filter(|r| r.verdict.approach_fails()) {
            ctx.info(format!("{} seed {}: {}", p.preset, r.seed, r.explanation()));
        }
    }
    ctx.write(&out.join("report.json"), &report.to_json())?;
    ctx.write(&out.join("allocation.csv"), &report.allocation_csv())?;
    ctx.write(&out.join("fronts.csv"), &report.fronts_csv())?;
    if let Some(csv) = report.privacy_csv() {
        ctx.write(&out.join("privacy.csv"), &csv)?;
    }
    Ok(())
}

/// Random scenario: synthetic images, a mix of free and paid instances and
/// the Normal preset's constraints.
pub fn generate_scenario(
    images: usize,
    instances: usize,
    width: usize,
    height: usize,
    tissue_fraction: f64,
    seed: u64,
) -> Result<ScenarioFile> {
    if images == 0 || instances == 0 {
        return Err(Error::validation("images", "need at least one image and one instance"));
    }
    let mut rng = seed::rng(seed::derive(seed, &["gen-scenario"]));
    const GPUS: [(&str, f64); 4] = [("T4", 1.0), ("P100", 1.4), ("V100", 2.1), ("A100", 3.6)];
    const LOCS: [&str; 4] = ["Amsterdam", "Frankfurt", "Dublin", "Virginia"];
    let free = instances.div_ceil(3);
    let insts = (0..instances)
        .map(|i| {
            let (gpu, perf) = GPUS[rng.random_range(0..GPUS.len())];
            let is_free = i < free;
            CloudInstance {
                id: format!("{}-{i:02}", if is_free { "org" } else { "cloud" }),
                gpu: gpu.to_string(),
                vcpu: [4, 8, 16][rng.random_range(0..3)],
                ram: 16_000_000_000 * rng.random_range(1..=4),
                sto: 500_000_000_000,
                b: (rng.random_range(10.0..60.0f64) * 1e6).round(),
                loc: LOCS[rng.random_range(0..LOCS.len())].to_string(),
                p: if is_free {
                    0.0
                } else {
                    (rng.random_range(1.0..8.0f64) * 1e5).round() / 1e9 * perf
                },
                perf,
            }
        })
        .collect();
    Ok(ScenarioFile {
        name: format!("generated-{seed}"),
        patch: PatchSpec::default(),
        images: (0..images)
            .map(|i| ImageEntry {
                id: format!("wsi-{i:02}"),
                source: ImageSource::Synthetic(SyntheticSpec {
                    width,
                    height,
                    tissue_fraction,
                    seed: seed::derive(seed, &["gen-image", &i.to_string()]),
                }),
            })
            .collect(),
        instances: insts,
        constraints: PreferencePreset::all()[0].constraints,
        simulation: Simulation {
            seed,
            ..Simulation::default()
        },
    })
}

fn run(cmd: Command, ctx: &mut Context) -> Result<()> {
    match cmd {
        Command::Split {
            scenario,
            rule,
            method,
            k,
            seed,
            out,
        } => split_cmd(ctx, &scenario, rule, method.into(), k, seed, &out),
        Command::Encode {
            fragments,
            k,
            noise,
            seed,
            out,
            keys,
        } => {
            let keys = keys_path(keys, &out);
            let cfg = EncodeConfig {
                k_dims: k,
                noise_scale: noise,
                seed,
            };
            encode_cmd(ctx, &fragments, cfg, &out, keys)
        }
        Command::PrivacyEval {
            encoded,
            private,
            keys,
            bins,
            seed,
            out,
        } => {
            let keys = keys_path(keys, &encoded);
            privacy_eval_cmd(ctx, &encoded, &private, keys, bins.max(1), seed, &out)
        }
        Command::Allocate {
            scenario,
            method,
            seed,
            out,
        } => allocate_cmd(ctx, &scenario, method.into(), seed, &out),
        Command::Compare {
            scenario,
            presets,
            seeds,
            no_privacy,
            out,
        } => compare_cmd(ctx, &scenario, &presets, &seeds, !no_privacy, &out),
        Command::GenScenario {
            images,
            instances,
            width,
            height,
            tissue_fraction,
            seed,
            out,
        } => {
            let file = generate_scenario(images, instances, width, height, tissue_fraction, seed)?;
            crate::scenario::build_application(file.clone(), None)?;
            ctx.write(&out, &file.to_json())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_grammar() {
        assert_eq!(parse_seeds("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("1..=2").unwrap(), vec![1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn unknown_command_is_invalid() {
        let r = dispatch(["phc", "frobnicate"]);
        assert_eq!(r.exit_code, EXIT_INVALID);
        assert_eq!(dispatch(["phc", "--help"]).exit_code, EXIT_OK);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::Infeasible), EXIT_INFEASIBLE);
        assert_eq!(exit_code_for(&Error::validation("b", "x")), EXIT_INVALID);
        assert_eq!(
            exit_code_for(&Error::io("x", std::io::Error::other("boom"))),
            EXIT_RUNTIME
        );
    }

    #[test]
    fn fragment_csv_round_trip() {
        let f = Fragment {
            image_id: "a".into(),
            fragment_index: 1,
            patches: vec![
                Patch {
                    patch_id: 3,
                    x: 1,
                    y: 2,
                },
                Patch {
                    patch_id: 9,
                    x: 4,
                    y: 0,
                },
            ],
            size_bytes: 2,
        };
        let text = fragment_csv(&f);
        assert_eq!(text, "patch_id,x,y\n3,1,2\n9,4,0\n");
        assert_eq!(parse_fragment_csv(&text, Path::new("f")).unwrap(), f.patches);
        assert!(parse_fragment_csv("id\n1", Path::new("f")).is_err());
    }
}
