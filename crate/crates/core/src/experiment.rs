//! Approach-vs-baseline comparisons.
//!
//! The approach splits each image by graph coloring; the baseline splits it
//! evenly into the same number of fragments. [`run_privacy_experiment`]
//! scores both splits with the privacy metrics and
//! [`run_allocation_experiment`] allocates both under the user-preference
//! presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocator::{allocate, ParetoFront};
use crate::encoder::{encode_image, EncodeConfig};
use crate::metrics::{evaluate_split, mean, variance, Method, PrivacyReport};
use crate::pareto::dominates;
use crate::scenario::{
    create_patches, generate_synthetic_mask, Application, Constraints, PatchSet, PatchSpec, Simulation,
};
use crate::splitter::{
    baseline_even_split, build_graph, greedy_color_rs, image_seed, split_by_color, Fragment, NeighborhoodRule,
};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PresetName {
    Normal,
    #[serde(rename = "VSN")]
    Vsn,
    #[serde(rename = "VTB")]
    Vtb,
    #[serde(rename = "VST")]
    Vst,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [PresetName::Normal, PresetName::Vsn, PresetName::Vtb, PresetName::Vst];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Normal => "Normal",
            PresetName::Vsn => "VSN",
            PresetName::Vtb => "VTB",
            PresetName::Vst => "VST",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation("presets", format!("unknown preset `{s}`")))
    }
}

/// A named user preference: node, budget and deadline limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferencePreset {
    pub name: PresetName,
    pub constraints: Constraints,
}

impl PreferencePreset {
    pub fn new(name: PresetName) -> Self {
        let (n, b, t) = match name {
            PresetName::Normal => (8, 0.1, 800.0),
            PresetName::Vsn => (5, 0.2, 1200.0),
            PresetName::Vtb => (8, 0.01, 1200.0),
            PresetName::Vst => (8, 0.2, 560.0),
        };
        Self {
            name,
            constraints: Constraints {
                max_nodes: n,
                budget: b,
                time_threshold: t,
            },
        }
    }

    pub fn all() -> Vec<Self> {
        PresetName::ALL.into_iter().map(Self::new).collect()
    }

    /// Comma-separated names or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse().map(Self::new))
            .collect()
    }
}

/// Approach split of one image: one fragment per color class.
pub fn split_approach(set: &PatchSet, rule: NeighborhoodRule, master_seed: u64) -> Result<Vec<Fragment>> {
    let graph = build_graph(set, rule)?;
    let coloring = greedy_color_rs(&graph, image_seed(master_seed, "color", &set.image_id));
    split_by_color(set, &coloring)
}

pub fn split_baseline(set: &PatchSet, k: usize, master_seed: u64) -> Result<Vec<Fragment>> {
    baseline_even_split(set, k, image_seed(master_seed, "baseline", &set.image_id))
}

/// Both splits of one image, the baseline with as many fragments as the
/// approach produced.
pub fn split_both(set: &PatchSet, rule: NeighborhoodRule, master_seed: u64) -> Result<(Vec<Fragment>, Vec<Fragment>)> {
    let approach = split_approach(set, rule, master_seed)?;
    let baseline = split_baseline(set, approach.len(), master_seed)?;
    Ok((approach, baseline))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub approach: Vec<Vec<Fragment>>,
    pub baseline: Vec<Vec<Fragment>>,
}

impl SplitOutcome {
    pub fn fragments(&self, method: Method) -> &[Vec<Fragment>] {
        match method {
            Method::Approach => &self.approach,
            Method::Baseline => &self.baseline,
        }
    }
}

pub fn split_application(app: &Application, master_seed: u64) -> Result<SplitOutcome> {
    let mut out = SplitOutcome {
        approach: Vec::with_capacity(app.images.len()),
        baseline: Vec::with_capacity(app.images.len()),
    };
    for set in &app.images {
        let (a, b) = split_both(set, app.sim.rule, master_seed)?;
        out.approach.push(a);
        out.baseline.push(b);
    }
    Ok(out)
}

/// Mean over images of the population variance of fragment patch counts.
pub fn fragment_size_variance(fragments: &[Vec<Fragment>]) -> f64 {
    let per_image: Vec<f64> = fragments
        .iter()
        .map(|frags| variance(&frags.iter().map(|f| f.len() as f64).collect::<Vec<_>>()))
        .collect();
    mean(&per_image)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            std: variance(values).sqrt(),
            n: values.len(),
        }
    }
}

/// Aggregates of one method over every image and seed. Plain fields are
/// per-image values; `*_pooled` pool every honest-fragment choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodPrivacy {
    pub method: Method,
    pub fragments: Stat,
    pub output_utility: Stat,
    pub min_output_utility: f64,
    pub aig_x: Stat,
    pub aig_y: Stat,
    pub rho_x: Stat,
    pub rho_y: Stat,
    pub rho_x_pooled: Stat,
    pub rho_y_pooled: Stat,
    pub fragment_size_variance: Stat,
}

impl MethodPrivacy {
    fn from_reports(method: Method, reports: &[&PrivacyReport]) -> Self {
        let per = |f: &dyn Fn(&PrivacyReport) -> f64| Stat::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        let pooled = |f: &dyn Fn(&PrivacyReport) -> &Vec<f64>| {
            Stat::of(&reports.iter().flat_map(|r| f(r).iter().copied()).collect::<Vec<_>>())
        };
        let utilities: Vec<f64> = reports.iter().flat_map(|r| r.output_utility.iter().copied()).collect();
        Self {
            method,
            fragments: per(&|r| r.fragments as f64),
            output_utility: Stat::of(&utilities),
            min_output_utility: utilities.iter().copied().fold(f64::INFINITY, f64::min),
            aig_x: per(&|r| r.x.aig),
            aig_y: per(&|r| r.y.aig),
            rho_x: per(&|r| r.x.mean_privacy_lb()),
            rho_y: per(&|r| r.y.mean_privacy_lb()),
            rho_x_pooled: pooled(&|r| &r.x.individual_privacy_lb),
            rho_y_pooled: pooled(&|r| &r.y.individual_privacy_lb),
            fragment_size_variance: per(&|r| r.fragment_size_variance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededReport {
    pub seed: u64,
    #[serde(flatten)]
    pub report: PrivacyReport,
}

/// Aggregates per-image reports of one method.
pub fn summarize(method: Method, reports: &[SeededReport]) -> MethodPrivacy {
    let picked: Vec<&PrivacyReport> = reports
        .iter()
        .map(|r| &r.report)
        .filter(|r| r.method == method)
        .collect();
    MethodPrivacy::from_reports(method, &picked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyComparison {
    pub seeds: Vec<u64>,
    pub images: usize,
    pub bins: usize,
    pub noise_scale: f64,
    pub k_dims: usize,
    pub baseline: MethodPrivacy,
    pub approach: MethodPrivacy,
    pub per_image: Vec<SeededReport>,
}

impl PrivacyComparison {
    pub fn method(&self, m: Method) -> &MethodPrivacy {
        match m {
            Method::Approach => &self.approach,
            Method::Baseline => &self.baseline,
        }
    }

    /// Approach gains more information and leaks no more than the
    /// baseline on both axes.
    pub fn approach_wins(&self) -> bool {
        let (a, b) = (&self.approach, &self.baseline);
        a.aig_x.mean > b.aig_x.mean
            && a.aig_y.mean > b.aig_y.mean
            && a.rho_x.mean <= b.rho_x.mean
            && a.rho_y.mean <= b.rho_y.mean
    }
}

/// Splits, encodes and scores every image both ways under every seed.
pub fn evaluate_images(images: &[PatchSet], seeds: &[u64], sim: &Simulation) -> Result<PrivacyComparison> {
    let mut per_image = Vec::new();
    for &s in seeds {
        let label_key = seed::derive(s, &["labels"]);
        for set in images {
            let (approach, baseline) = split_both(set, sim.rule, s)?;
            for (method, frags) in [(Method::Baseline, &baseline), (Method::Approach, &approach)] {
                let cfg = EncodeConfig {
                    k_dims: sim.k_dims,
                    noise_scale: sim.noise_scale,
                    seed: image_seed(s, &format!("encode-{method}"), &set.image_id),
                };
                let encoded: Vec<_> = encode_image(set, frags, &cfg)?.into_iter().map(|(e, _)| e).collect();
                let report = evaluate_split(method, frags, &encoded, label_key, sim.bins)?;
                per_image.push(SeededReport { seed: s, report });
            }
        }
    }
    Ok(PrivacyComparison {
        seeds: seeds.to_vec(),
        images: images.len(),
        bins: sim.bins,
        noise_scale: sim.noise_scale,
        k_dims: sim.k_dims,
        baseline: summarize(Method::Baseline, &per_image),
        approach: summarize(Method::Approach, &per_image),
        per_image,
    })
}

/// Synthetic image set for the privacy experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyConfig {
    pub n_images: usize,
    pub seeds: Vec<u64>,
    /// Grid edges are drawn uniformly from this inclusive range.
    pub min_edge: usize,
    pub max_edge: usize,
    pub tissue_fraction: f64,
    pub sim: Simulation,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            n_images: 20,
            seeds: (1..=5).collect(),
            min_edge: 80,
            max_edge: 140,
            tissue_fraction: 0.4,
            sim: Simulation::default(),
        }
    }
}

/// Images for one seed; sizes and masks depend on the seed.
pub fn synthetic_images(cfg: &PrivacyConfig, master_seed: u64) -> Result<Vec<PatchSet>> {
    use rand::Rng;
    if cfg.min_edge < 1 || cfg.max_edge < cfg.min_edge {
        return Err(Error::validation("max_edge", "edge range is empty"));
    }
    (0..cfg.n_images)
        .map(|i| {
            let id = format!("wsi-{i:03}");
            let mut rng = seed::rng(seed::derive(master_seed, &["synthetic-image", &id]));
            let w = rng.random_range(cfg.min_edge..=cfg.max_edge);
            let h = rng.random_range(cfg.min_edge..=cfg.max_edge);
            let mask = generate_synthetic_mask(w, h, cfg.tissue_fraction, rng.random())?;
            create_patches(&mask, PatchSpec::default(), &id)
        })
        .collect()
}

/// Privacy comparison over `n_images` synthetic images per seed.
pub fn run_privacy_experiment(cfg: &PrivacyConfig) -> Result<PrivacyComparison> {
    if cfg.n_images < 1 {
        return Err(Error::validation("n_images", "must be at least 1"));
    }
    let mut per_image = Vec::new();
    for &s in &cfg.seeds {
        let images = synthetic_images(cfg, s)?;
        per_image.extend(evaluate_images(&images, &[s], &cfg.sim)?.per_image);
    }
    Ok(PrivacyComparison {
        seeds: cfg.seeds.clone(),
        images: cfg.n_images,
        bins: cfg.sim.bins,
        noise_scale: cfg.sim.noise_scale,
        k_dims: cfg.sim.k_dims,
        baseline: summarize(Method::Baseline, &per_image),
        approach: summarize(Method::Approach, &per_image),
        per_image,
    })
}

/// Representative solution of one method, or the infeasibility flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub feasible: bool,
    pub f1: Option<usize>,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
    pub front_size: usize,
    pub fragments: usize,
    pub fragment_size_variance: f64,
    #[serde(skip)]
    pub front: Option<ParetoFront>,
}

impl MethodOutcome {
    fn new(result: Result<ParetoFront>, fragments: &[Vec<Fragment>]) -> Result<Self> {
        let front = match result {
            Ok(f) => Some(f),
            Err(Error::Infeasible) => None,
            Err(e @ Error::PoolTooSmall { .. }) => {
                log::info!("{e}");
                None
            }
            Err(e) => return Err(e),
        };
        let rep = front.as_ref().and_then(ParetoFront::representative);
        Ok(Self {
            feasible: rep.is_some(),
            f1: rep.map(|s| s.f1),
            f2: rep.map(|s| s.f2),
            f3: rep.map(|s| s.f3),
            front_size: front.as_ref().map_or(0, ParetoFront::len),
            fragments: fragments.iter().map(Vec::len).sum(),
            fragment_size_variance: fragment_size_variance(fragments),
            front,
        })
    }

    pub fn objectives(&self) -> Option<[f64; 3]> {
        Some([self.f1? as f64, self.f2?, self.f3?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Approach strictly better in every objective.
    ApproachDominatesAll,
    /// Approach Pareto-dominates.
    ApproachDominates,
    BaselineDominatesAll,
    BaselineDominates,
    Incomparable,
    OnlyApproachFeasible,
    OnlyBaselineFeasible,
    NeitherFeasible,
}

impl Verdict {
    pub fn of(approach: &MethodOutcome, baseline: &MethodOutcome) -> Self {
        match (approach.objectives(), baseline.objectives()) {
            (None, None) => Verdict::NeitherFeasible,
            (Some(_), None) => Verdict::OnlyApproachFeasible,
            (None, Some(_)) => Verdict::OnlyBaselineFeasible,
            (Some(a), Some(b)) => {
                if a.iter().zip(&b).all(|(x, y)| x < y) {
                    Verdict::ApproachDominatesAll
                } else if dominates(&a, &b) {
                    Verdict::ApproachDominates
                } else if a.iter().zip(&b).all(|(x, y)| y < x) {
                    Verdict::BaselineDominatesAll
                } else if dominates(&b, &a) {
                    Verdict::BaselineDominates
                } else {
                    Verdict::Incomparable
                }
            }
        }
    }

    pub fn approach_dominates(self) -> bool {
        matches!(self, Verdict::ApproachDominatesAll | Verdict::ApproachDominates)
    }

    /// The approach is infeasible or dominated while the baseline is
    /// feasible.
    pub fn approach_fails(self) -> bool {
        matches!(
            self,
            Verdict::OnlyBaselineFeasible | Verdict::BaselineDominates | Verdict::BaselineDominatesAll
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRun {
    pub seed: u64,
    pub approach: MethodOutcome,
    pub baseline: MethodOutcome,
    pub verdict: Verdict,
}

impl PresetRun {
    pub fn explanation(&self) -> String {
        format!(
            "fragment size variance: approach {:.1}, baseline {:.1}",
            self.approach.fragment_size_variance, self.baseline.fragment_size_variance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSummary {
    pub preset: PresetName,
    pub constraints: Constraints,
    pub runs: Vec<PresetRun>,
    pub approach_feasible: usize,
    pub baseline_feasible: usize,
    pub approach_dominates: usize,
    pub approach_fails: usize,
}

/// Allocates both splits under every preset for every seed.
pub fn run_allocation_experiment(
    app: &Application,
    presets: &[PreferencePreset],
    seeds: &[u64],
) -> Result<Vec<PresetSummary>> {
    let mut splits = Vec::with_capacity(seeds.len());
    for &s in seeds {
        splits.push(split_application(app, s)?);
    }
    let mut out = Vec::with_capacity(presets.len());
    for preset in presets {
        let constrained = app.with_constraints(preset.constraints);
        let mut runs = Vec::with_capacity(seeds.len());
        for (&s, split) in seeds.iter().zip(&splits) {
            let approach = MethodOutcome::new(allocate(&constrained, &split.approach), &split.approach)?;
            let baseline = MethodOutcome::new(allocate(&constrained, &split.baseline), &split.baseline)?;
            let verdict = Verdict::of(&approach, &baseline);
            let run = PresetRun {
                seed: s,
                approach,
                baseline,
                verdict,
            };
            if verdict.approach_fails() {
                log::info!(
                    "{} seed {s}: approach fails ({verdict:?}); {}",
                    preset.name,
                    run.explanation()
                );
            } else {
                log::debug!("{} seed {s}: {verdict:?}", preset.name);
            }
            runs.push(run);
        }
        out.push(PresetSummary {
            preset: preset.name,
            constraints: preset.constraints,
            approach_feasible: runs.iter().filter(|r| r.approach.feasible).count(),
            baseline_feasible: runs.iter().filter(|r| r.baseline.feasible).count(),
            approach_dominates: runs.iter().filter(|r| r.verdict.approach_dominates()).count(),
            approach_fails: runs.iter().filter(|r| r.verdict.approach_fails()).count(),
            runs,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub presets: Vec<PresetSummary>,
    pub privacy: Option<PrivacyComparison>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per preset, seed and method.
    pub fn allocation_csv(&self) -> String {
        let mut out =
            String::from("preset,seed,method,feasible,f1,f2,f3,front_size,fragments,fragment_size_variance,verdict\n");
        let opt = |v: Option<String>| v.unwrap_or_else(|| "N/A".into());
        for p in &self.presets {
            for r in &p.runs {
                for (m, o) in [(Method::Baseline, &r.baseline), (Method::Approach, &r.approach)] {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        p.preset,
                        r.seed,
                        m,
                        o.feasible,
                        opt(o.f1.map(|v| v.to_string())),
                        opt(o.f2.map(|v| v.to_string())),
                        opt(o.f3.map(|v| v.to_string())),
                        o.front_size,
                        o.fragments,
                        o.fragment_size_variance,
                        serde_json::to_value(r.verdict).unwrap().as_str().unwrap()
                    ));
                }
            }
        }
        out
    }

    /// Front points of every run: `preset,seed,method,solution_id,f1,f2,f3`.
    pub fn fronts_csv(&self) -> String {
        let mut out = String::from("preset,seed,method,solution_id,f1,f2,f3\n");
        for p in &self.presets {
            for r in &p.runs {
                for (m, o) in [(Method::Baseline, &r.baseline), (Method::Approach, &r.approach)] {
                    if let Some(front) = &o.front {
                        for (i, s) in front.solutions.iter().enumerate() {
                            out.push_str(&format!(
                                "{},{},{},{i},{},{},{}\n",
                                p.preset, r.seed, m, s.f1, s.f2, s.f3
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    /// Aggregate privacy table, one row per method.
    pub fn privacy_csv(&self) -> Option<String> {
        let p = self.privacy.as_ref()?;
        let mut out = String::from(
            "method,fragments,output_utility_mean,output_utility_std,rho_x_mean,rho_x_std,rho_y_mean,rho_y_std,aig_x_mean,aig_x_std,aig_y_mean,aig_y_std\n",
        );
        for m in [&p.baseline, &p.approach] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                m.method,
                m.fragments.mean,
                m.output_utility.mean,
                m.output_utility.std,
                m.rho_x.mean,
                m.rho_x.std,
                m.rho_y.mean,
                m.rho_y.std,
                m.aig_x.mean,
                m.aig_x.std,
                m.aig_y.mean,
                m.aig_y.std
            ));
        }
        Some(out)
    }
}

/// Allocation comparison plus, optionally, privacy scores of the scenario's
/// own images.
pub fn compare(
    app: &Application,
    presets: &[PreferencePreset],
    seeds: &[u64],
    with_privacy: bool,
) -> Result<ComparisonReport> {
    let presets = run_allocation_experiment(app, presets, seeds)?;
    let privacy = if with_privacy && !seeds.is_empty() {
        Some(evaluate_images(&app.images, seeds, &app.sim)?)
    } else {
        None
    };
    Ok(ComparisonReport {
        scenario: app.name.clone(),
        seeds: seeds.to_vec(),
        presets,
        privacy,
    })
}
