//! Shared data model and scenario files.
//!
//! A scenario is one JSON document with four sections:
//!
//! ```json
//! {
//!   "name": "normal",
//!   "patch": { "patch_edge": 224, "channels": 3 },
//!   "images": [
//!     { "id": "wsi-01", "synthetic": { "width": 120, "height": 90, "tissue_fraction": 0.4, "seed": 3 } },
//!     { "id": "wsi-02", "mask_file": "masks/wsi-02.txt" },
//!     { "id": "wsi-03", "mask": ["0110", "1111"] }
//!   ],
//!   "instances": [
//!     { "id": "uva-t4", "gpu": "T4", "vcpu": 8, "ram": 32000000000, "sto": 500000000000,
//!       "b": 2500000.0, "loc": "Amsterdam", "p": 0.0, "perf": 1.0 }
//!   ],
//!   "constraints": { "max_nodes": 8, "budget": 0.1, "time_threshold": 800.0 },
//!   "simulation": { "base_throughput": 200.0, "seed": 1 }
//! }
//! ```
//!
//! Every `simulation` key is optional; see [`Simulation`] for defaults. Mask
//! files are plain text: a `W H` header line followed by `H` lines of `W`
//! characters from `{0,1}`. Relative `mask_file` paths resolve against the
//! scenario file's directory.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costmodel::Billing;
use crate::splitter::NeighborhoodRule;
use crate::{seed, Error, Result};

/// Grid of tissue flags, row-major, `true` = tissue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("mask", "width and height must be positive"));
        }
        if cells.len() != width * height {
            return Err(Error::validation(
                "mask",
                format!("expected {} cells, got {}", width * height, cells.len()),
            ));
        }
        Ok(Self { width, height, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    pub fn tissue_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Parses rows of `0`/`1` characters.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().trim().len()).unwrap_or(0);
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            let row = row.as_ref().trim();
            if row.len() != width {
                return Err(Error::Parse(format!(
                    "mask row {y} has {} characters, expected {width}",
                    row.len()
                )));
            }
            for c in row.chars() {
                match c {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    other => {
                        return Err(Error::Parse(format!(
                            "mask row {y} contains invalid character {other:?}"
                        )))
                    }
                }
            }
        }
        Self::new(width, height, cells)
    }

    pub fn to_rows(&self) -> Vec<String> {
        self.cells
            .chunks(self.width)
            .map(|row| row.iter().map(|&c| if c { '1' } else { '0' }).collect())
            .collect()
    }

    /// Parses the `W H` + rows text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty mask file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad mask header {header:?}: {e}")))?;
        let [w, h] = dims[..] else {
            return Err(Error::Parse(format!("bad mask header {header:?}")));
        };
        let rows: Vec<&str> = lines.collect();
        if rows.len() != h {
            return Err(Error::Parse(format!(
                "mask header declares {h} rows, found {}",
                rows.len()
            )));
        }
        let mask = Self::from_rows(&rows)?;
        if mask.width != w {
            return Err(Error::Parse(format!(
                "mask header declares width {w}, rows have {}",
                mask.width
            )));
        }
        Ok(mask)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        for row in self.to_rows() {
            let _ = writeln!(out, "{row}");
        }
        out
    }
}

/// Generates a deterministic tissue-like mask.
///
/// Each cell gets a score equal to its normalized distance from a jittered
/// center, modulated by a low-frequency angular wobble, plus uniform per-cell
/// noise. The `round(tissue_fraction * width * height)` lowest-scoring cells
/// (at least one) become tissue, so the fraction is exact up to rounding. The
/// result is a single ragged blob with a noisy rim and a few detached specks.
pub fn generate_synthetic_mask(width: usize, height: usize, tissue_fraction: f64, seed: u64) -> Result<BinaryMask> {
    if !(tissue_fraction > 0.0 && tissue_fraction <= 1.0) {
        return Err(Error::InvalidFraction(tissue_fraction));
    }
    if width == 0 || height == 0 {
        return Err(Error::validation("mask", "width and height must be positive"));
    }
    let n = width * height;
    let target = ((tissue_fraction * n as f64).round() as usize).clamp(1, n);
    if target == n {
        return BinaryMask::new(width, height, vec![true; n]);
    }

    let mut rng = seed::rng(seed::derive(seed, &["synthetic-mask"]));
    let cx = rng.random_range(0.35..0.65) * width as f64;
    let cy = rng.random_range(0.35..0.65) * height as f64;
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let lobes = rng.random_range(2..=4) as f64;
    let wobble = 0.15;
    let noise = 0.08;

    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n);
    for y in 0..height {
        for x in 0..width {
            let dx = (x as f64 + 0.5 - cx) / width as f64;
            let dy = (y as f64 + 0.5 - cy) / height as f64;
            let r = (dx * dx + dy * dy).sqrt();
            let theta = dy.atan2(dx);
            let shaped = r * (1.0 + wobble * (lobes * theta + phase).sin());
            let s = shaped + noise * rng.random::<f64>();
            scored.push((s, y * width + x));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cells = vec![false; n];
    for &(_, idx) in &scored[..target] {
        cells[idx] = true;
    }
    BinaryMask::new(width, height, cells)
}

fn default_patch_edge() -> u32 {
    224
}

fn default_channels() -> u32 {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    #[serde(default = "default_patch_edge")]
    pub patch_edge: u32,
    #[serde(default = "default_channels")]
    pub channels: u32,
    /// Optional payload scaling in (0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression_factor: Option<f64>,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self {
            patch_edge: default_patch_edge(),
            channels: default_channels(),
            compression_factor: None,
        }
    }
}

impl PatchSpec {
    pub fn bytes_per_patch(&self) -> u64 {
        let raw = self.patch_edge as u64 * self.patch_edge as u64 * self.channels as u64;
        match self.compression_factor {
            Some(f) => (raw as f64 * f).round() as u64,
            None => raw,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.patch_edge == 0 {
            return Err(Error::validation("patch_edge", "must be at least 1"));
        }
        if self.channels == 0 {
            return Err(Error::validation("channels", "must be at least 1"));
        }
        if let Some(f) = self.compression_factor {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::validation("compression_factor", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Patch {
    pub patch_id: u64,
    pub x: u32,
    pub y: u32,
}

/// Tissue patches of one image at their grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub image_id: String,
    /// Grid dimensions of the source mask.
    pub grid_width: usize,
    pub grid_height: usize,
    pub patches: Vec<Patch>,
    pub spec: PatchSpec,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn bytes_per_patch(&self) -> u64 {
        self.spec.bytes_per_patch()
    }

    /// Rebuilds the mask the patches were cut from.
    pub fn to_mask(&self) -> BinaryMask {
        let mut cells = vec![false; self.grid_width * self.grid_height];
        for p in &self.patches {
            cells[p.y as usize * self.grid_width + p.x as usize] = true;
        }
        BinaryMask {
            width: self.grid_width,
            height: self.grid_height,
            cells,
        }
    }
}

/// One patch per tissue cell, ids assigned in row-major order.
pub fn create_patches(mask: &BinaryMask, spec: PatchSpec, image_id: &str) -> Result<PatchSet> {
    let mut patches = Vec::with_capacity(mask.tissue_count());
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                patches.push(Patch {
                    patch_id: patches.len() as u64,
                    x: x as u32,
                    y: y as u32,
                });
            }
        }
    }
    if patches.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(PatchSet {
        image_id: image_id.to_string(),
        grid_width: mask.width,
        grid_height: mask.height,
        patches,
        spec,
    })
}

/// Node tuple `(gpu, vcpu, ram, sto, b, loc, p, perf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudInstance {
    pub id: String,
    #[serde(default)]
    pub gpu: String,
    #[serde(default)]
    pub vcpu: u32,
    /// Bytes.
    #[serde(default)]
    pub ram: u64,
    /// Bytes.
    #[serde(default)]
    pub sto: u64,
    /// Bandwidth to the trusted zone, bytes per second.
    pub b: f64,
    /// Location label only; bandwidth carries any location effect.
    #[serde(default)]
    pub loc: String,
    /// Price per second, 0 for free participating-organization nodes.
    pub p: f64,
    /// Throughput multiplier relative to a Tesla T4.
    pub perf: f64,
}

impl CloudInstance {
    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::validation("id", "instance id must not be empty"));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::validation(
                "b",
                format!("instance `{}`: bandwidth must be positive", self.id),
            ));
        }
        if !(self.perf.is_finite() && self.perf > 0.0) {
            return Err(Error::validation(
                "perf",
                format!("instance `{}`: performance score must be positive", self.id),
            ));
        }
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::validation(
                "p",
                format!("instance `{}`: price must be non-negative", self.id),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    pub max_nodes: usize,
    pub budget: f64,
    /// Seconds.
    pub time_threshold: f64,
}

impl Constraints {
    pub fn new(max_nodes: usize, budget: f64, time_threshold: f64) -> Result<Self> {
        let c = Self {
            max_nodes,
            budget,
            time_threshold,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_nodes < 1 {
            return Err(Error::validation("max_nodes", "must be at least 1"));
        }
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(Error::validation("budget", "must be non-negative"));
        }
        if !(self.time_threshold.is_finite() && self.time_threshold > 0.0) {
            return Err(Error::validation("time_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// Workload, encoding and search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    /// Patches per second on a perf = 1.0 node.
    pub base_throughput: f64,
    /// Seconds.
    pub install_time: f64,
    pub output_bytes_per_patch: u64,
    /// Size of the inference service shipped with each fragment.
    pub service_bytes: u64,
    pub seed: u64,
    pub rule: NeighborhoodRule,
    pub k_dims: usize,
    pub noise_scale: f64,
    pub bins: usize,
    pub pool_cap: usize,
    pub combo_cap: u64,
    /// Per-image mapping count up to which every injective mapping is
    /// enumerated; larger pools fall back to subsets with LPT pairing.
    pub exhaustive_cap: u64,
    pub billing: Billing,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            base_throughput: 200.0,
            install_time: 0.0,
            output_bytes_per_patch: 64,
            service_bytes: 0,
            seed: 0,
            rule: NeighborhoodRule::Eight,
            k_dims: 2,
            noise_scale: 0.05,
            bins: 64,
            pool_cap: 12,
            combo_cap: 1_000_000,
            exhaustive_cap: 200_000,
            billing: Billing::Continuous,
        }
    }
}

impl Simulation {
    fn validate(&self) -> Result<()> {
        if !(self.base_throughput.is_finite() && self.base_throughput > 0.0) {
            return Err(Error::validation("base_throughput", "must be positive"));
        }
        if !(self.install_time.is_finite() && self.install_time >= 0.0) {
            return Err(Error::validation("install_time", "must be non-negative"));
        }
        if !(1..=2).contains(&self.k_dims) {
            return Err(Error::validation("k_dims", "must be 1 or 2"));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::validation("noise_scale", "must be non-negative"));
        }
        if self.bins < 1 {
            return Err(Error::validation("bins", "must be at least 1"));
        }
        if self.pool_cap < 1 {
            return Err(Error::validation("pool_cap", "must be at least 1"));
        }
        if self.combo_cap < 1 {
            return Err(Error::validation("combo_cap", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub tissue_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    /// Inline rows of `0`/`1`.
    Mask(Vec<String>),
    MaskFile(String),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    #[serde(flatten)]
    pub source: ImageSource,
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default)]
    pub patch: PatchSpec,
    pub images: Vec<ImageEntry>,
    pub instances: Vec<CloudInstance>,
    pub constraints: Constraints,
    #[serde(default)]
    pub simulation: Simulation,
}

impl ScenarioFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}

/// Validated application: images as patch sets, instances, constraints and
/// simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Application {
    pub name: String,
    pub images: Vec<PatchSet>,
    pub instances: Vec<CloudInstance>,
    pub constraints: Constraints,
    pub sim: Simulation,
}

impl Application {
    /// Serializes back to a scenario document with inline masks.
    pub fn to_scenario(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.name.clone(),
            patch: self.images.first().map(|i| i.spec).unwrap_or_default(),
            images: self
                .images
                .iter()
                .map(|img| ImageEntry {
                    id: img.image_id.clone(),
                    source: ImageSource::Mask(img.to_mask().to_rows()),
                })
                .collect(),
            instances: self.instances.clone(),
            constraints: self.constraints,
            simulation: self.sim.clone(),
        }
    }

    pub fn with_constraints(&self, constraints: Constraints) -> Self {
        Self {
            constraints,
            ..self.clone()
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Application> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path.parent())
}

pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Application> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    build_application(file, base_dir)
}

pub fn build_application(file: ScenarioFile, base_dir: Option<&Path>) -> Result<Application> {
    file.patch.validate()?;
    file.constraints.validate()?;
    file.simulation.validate()?;
    if file.images.is_empty() {
        return Err(Error::validation("images", "at least one image is required"));
    }
    if file.instances.is_empty() {
        return Err(Error::validation("instances", "at least one instance is required"));
    }
    let mut seen = BTreeSet::new();
    for inst in &file.instances {
        inst.validate()?;
        if !seen.insert(inst.id.as_str()) {
            return Err(Error::validation("id", format!("duplicate instance id `{}`", inst.id)));
        }
    }

    let mut seen = BTreeSet::new();
    let mut images = Vec::with_capacity(file.images.len());
    for entry in &file.images {
        if entry.id.is_empty() || !seen.insert(entry.id.as_str()) {
            return Err(Error::validation(
                "images.id",
                format!("image id `{}` is empty or duplicated", entry.id),
            ));
        }
        let mask = match &entry.source {
            ImageSource::Mask(rows) => BinaryMask::from_rows(rows)?,
            ImageSource::MaskFile(rel) => {
                let p = match base_dir {
                    Some(d) => d.join(rel),
                    None => rel.into(),
                };
                let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                BinaryMask::from_text(&text)?
            }
            ImageSource::Synthetic(s) => generate_synthetic_mask(s.width, s.height, s.tissue_fraction, s.seed)?,
        };
        let set = create_patches(&mask, file.patch, &entry.id).map_err(|e| match e {
            Error::EmptyMask => Error::validation("mask", format!("image `{}` contains no tissue cells", entry.id)),
            other => other,
        })?;
        images.push(set);
    }

    Ok(Application {
        name: file.name,
        images,
        instances: file.instances,
        constraints: file.constraints,
        sim: file.simulation,
    })
}
