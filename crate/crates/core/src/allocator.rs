//! Greedy Pareto-front allocation of fragments onto cloud instances.
//!
//! Each image's K fragments go to K distinct instances. Per image the
//! candidate mappings are scored by `(time, cost)` and reduced to their 2D
//! front; the per-image fronts are then combined, combinations violating the
//! node, budget or deadline constraint are dropped and the survivors are
//! reduced to their `(f1, f2, f3)` front:
//!
//! * `f1` number of distinct instances used over all images,
//! * `f2` total cost,
//! * `f3` latest image completion.
//!
//! [`brute_force_front`] enumerates every mapping instead and serves as the
//! reference on small inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::costmodel::{cost_line, node_completion, Workload};
use crate::pareto::{pareto_filter_2d, pareto_filter_3d};
use crate::scenario::{Application, CloudInstance, Constraints, Simulation};
use crate::{Error, Result};

/// Limit for [`brute_force_front`].
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Instance sets are bitmasks.
pub const MAX_INSTANCES: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAssignment {
    pub image_id: String,
    /// Fragment index to instance id.
    pub mapping: BTreeMap<usize, String>,
    /// Latest node completion for this image.
    pub time: f64,
    pub cost: f64,
    #[serde(skip)]
    instance_set: u128,
}

impl ImageAssignment {
    pub fn instance_ids(&self) -> impl Iterator<Item = &str> {
        self.mapping.values().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSolution {
    pub f1: usize,
    pub f2: f64,
    pub f3: f64,
    pub assignments: Vec<ImageAssignment>,
}

impl AllocationSolution {
    pub fn objectives(&self) -> [f64; 3] {
        [self.f1 as f64, self.f2, self.f3]
    }

    pub fn is_feasible(&self, c: &Constraints) -> bool {
        feasible(self.f1, self.f2, self.f3, c)
    }
}

fn feasible(f1: usize, f2: f64, f3: f64, c: &Constraints) -> bool {
    f1 <= c.max_nodes && f2 <= c.budget && f3 > 0.0 && f3 <= c.time_threshold
}

/// Mutually non-dominated solutions in lexicographic `(f1, f2, f3)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub solutions: Vec<AllocationSolution>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// The cheapest solution, then the fastest, then the one with fewest
    /// nodes.
    pub fn representative(&self) -> Option<&AllocationSolution> {
        self.solutions
            .iter()
            .min_by(|a, b| a.f2.total_cmp(&b.f2).then(a.f3.total_cmp(&b.f3)).then(a.f1.cmp(&b.f1)))
    }

    pub fn objective_vectors(&self) -> Vec<[f64; 3]> {
        self.solutions.iter().map(AllocationSolution::objectives).collect()
    }

    /// `solution_id,f1,f2,f3,assignments_json`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("solution_id,f1,f2,f3,assignments_json\n");
        for (i, s) in self.solutions.iter().enumerate() {
            let json = serde_json::to_string(&s.assignments).expect("assignments serialize");
            out.push_str(&format!(
                "{i},{},{},{},\"{}\"\n",
                s.f1,
                s.f2,
                s.f3,
                json.replace('"', "\"\"")
            ));
        }
        out
    }
}

/// Per-fragment, per-instance `(t_total, cost)`.
fn cost_table<F: Workload>(
    fragments: &[F],
    instances: &[&CloudInstance],
    sim: &Simulation,
) -> Result<Vec<Vec<(f64, f64)>>> {
    fragments
        .iter()
        .map(|f| {
            instances
                .iter()
                .map(|node| {
                    let t = node_completion(f, node, sim)?;
                    Ok((t.t_total, cost_line(&t, node, sim.billing).cost))
                })
                .collect()
        })
        .collect()
}

fn mapping_count(n: usize, k: usize) -> u128 {
    (0..k).map(|i| (n - i) as u128).product()
}

fn subset_count(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `visit` with every injective map from fragment index to pool
/// position, in lexicographic order.
fn for_each_injection(k: usize, n: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(pos: usize, k: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos == k {
            visit(cur);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(pos + 1, k, used, cur, visit);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(0, k, &mut vec![false; n], &mut Vec::with_capacity(k), visit);
}

fn for_each_subset(k: usize, n: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Seconds per patch on `node`, covering transfer in, compute and transfer
/// out.
fn seconds_per_patch(node: &CloudInstance, bytes_per_patch: f64, sim: &Simulation) -> f64 {
    (bytes_per_patch + sim.output_bytes_per_patch as f64) / node.b + 1.0 / (sim.base_throughput * node.perf)
}

/// Indices into `instances` that an image may use: all of them, or at most
/// `pool_cap` picked alternately from the cheapest and the fastest.
fn candidate_pool(
    allowed: &[usize],
    instances: &[CloudInstance],
    k: usize,
    bytes_pp: f64,
    sim: &Simulation,
) -> Vec<usize> {
    let cap = sim.pool_cap.max(k);
    if allowed.len() <= cap {
        return allowed.to_vec();
    }
    let speed = |i: usize| seconds_per_patch(&instances[i], bytes_pp, sim);
    let mut cheap = allowed.to_vec();
    cheap.sort_by(|&a, &b| {
        instances[a]
            .p
            .total_cmp(&instances[b].p)
            .then(speed(a).total_cmp(&speed(b)))
            .then(a.cmp(&b))
    });
    let mut fast = allowed.to_vec();
    fast.sort_by(|&a, &b| {
        speed(a)
            .total_cmp(&speed(b))
            .then(instances[a].p.total_cmp(&instances[b].p))
            .then(a.cmp(&b))
    });
    let mut pool = Vec::with_capacity(cap);
    let (mut ci, mut fi) = (cheap.into_iter(), fast.into_iter());
    while pool.len() < cap {
        for next in [ci.next(), fi.next()].into_iter().flatten() {
            if pool.len() < cap && !pool.contains(&next) {
                pool.push(next);
            }
        }
    }
    pool.sort_unstable();
    pool
}

struct Candidate {
    /// Instance index per fragment.
    nodes: Vec<usize>,
    time: f64,
    cost: f64,
}

fn evaluate(nodes: Vec<usize>, table: &[Vec<(f64, f64)>], pool: &[usize]) -> Candidate {
    let mut time = 0.0f64;
    let mut cost = 0.0;
    for (frag, &pos) in nodes.iter().enumerate() {
        let (t, c) = table[frag][pos];
        time = time.max(t);
        cost += c;
    }
    Candidate {
        nodes: nodes.into_iter().map(|p| pool[p]).collect(),
        time,
        cost,
    }
}

fn enumerate_candidates<F: Workload>(
    fragments: &[F],
    instances: &[CloudInstance],
    pool: &[usize],
    sim: &Simulation,
    exhaustive: bool,
) -> Result<Vec<Candidate>> {
    let k = fragments.len();
    let refs: Vec<&CloudInstance> = pool.iter().map(|&i| &instances[i]).collect();
    let table = cost_table(fragments, &refs, sim)?;
    let mut out = Vec::new();
    if k == 0 {
        return Ok(out);
    }
    if exhaustive {
        for_each_injection(k, pool.len(), &mut |m| out.push(evaluate(m.to_vec(), &table, pool)));
    } else {
        let bytes_pp = fragments.iter().map(|f| f.size_bytes()).sum::<u64>() as f64
            / fragments.iter().map(|f| f.patch_count()).sum::<usize>().max(1) as f64;
        let mut frag_order: Vec<usize> = (0..k).collect();
        frag_order.sort_by(|&a, &b| {
            fragments[b]
                .patch_count()
                .cmp(&fragments[a].patch_count())
                .then(a.cmp(&b))
        });
        for_each_subset(k, pool.len(), &mut |subset| {
            let mut by_speed = subset.to_vec();
            by_speed.sort_by(|&a, &b| {
                seconds_per_patch(refs[a], bytes_pp, sim)
                    .total_cmp(&seconds_per_patch(refs[b], bytes_pp, sim))
                    .then(a.cmp(&b))
            });
            let mut nodes = vec![0; k];
            for (&frag, &pos) in frag_order.iter().zip(&by_speed) {
                nodes[frag] = pos;
            }
            out.push(evaluate(nodes, &table, pool));
        });
    }
    Ok(out)
}

fn to_assignment(image_id: &str, c: &Candidate, instances: &[CloudInstance]) -> ImageAssignment {
    ImageAssignment {
        image_id: image_id.to_string(),
        mapping: c
            .nodes
            .iter()
            .enumerate()
            .map(|(f, &i)| (f, instances[i].id.clone()))
            .collect(),
        time: c.time,
        cost: c.cost,
        instance_set: c.nodes.iter().fold(0u128, |m, &i| m | (1u128 << i)),
    }
}

fn check_pool(image_id: &str, k: usize, available: usize) -> Result<()> {
    if available < k {
        return Err(Error::PoolTooSmall {
            image: image_id.to_string(),
            fragments: k,
            instances: available,
        });
    }
    if available > MAX_INSTANCES {
        return Err(Error::validation(
            "instances",
            format!("at most {MAX_INSTANCES} instances are supported"),
        ));
    }
    Ok(())
}

/// 2D `(time, cost)` front of one image's candidate mappings onto the
/// instances listed in `allowed`. Candidates that break the budget or the
/// deadline on their own are dropped first.
pub fn pf_2d_per_image<F: Workload>(
    image_id: &str,
    fragments: &[F],
    instances: &[CloudInstance],
    allowed: &[usize],
    sim: &Simulation,
    constraints: &Constraints,
) -> Result<Vec<ImageAssignment>> {
    let k = fragments.len();
    check_pool(image_id, k, allowed.len())?;
    let bytes_pp = fragments.iter().map(|f| f.size_bytes()).sum::<u64>() as f64
        / fragments.iter().map(|f| f.patch_count()).sum::<usize>().max(1) as f64;
    let pool = candidate_pool(allowed, instances, k, bytes_pp, sim);
    let exhaustive = mapping_count(pool.len(), k) <= sim.exhaustive_cap as u128;
    log::debug!(
        "image {image_id}: {k} fragments, pool {}, {} candidates ({})",
        pool.len(),
        if exhaustive {
            mapping_count(pool.len(), k)
        } else {
            subset_count(pool.len(), k)
        },
        if exhaustive { "exhaustive" } else { "subsets" }
    );
    let candidates: Vec<Candidate> = enumerate_candidates(fragments, instances, &pool, sim, exhaustive)?
        .into_iter()
        .filter(|c| c.cost <= constraints.budget && c.time <= constraints.time_threshold)
        .collect();
    let points: Vec<[f64; 2]> = candidates.iter().map(|c| [c.time, c.cost]).collect();
    Ok(pareto_filter_2d(&points)
        .into_iter()
        .map(|i| to_assignment(image_id, &candidates[i], instances))
        .collect())
}

/// Orders a front by usefulness: cheapest, fastest, best cost×time, then
/// the rest by cost×time.
fn prioritize(front: &[ImageAssignment]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(front.len());
    let by = |key: &dyn Fn(&ImageAssignment) -> (f64, f64)| {
        (0..front.len()).min_by(|&a, &b| {
            let (ka, kb) = (key(&front[a]), key(&front[b]));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
        })
    };
    let firsts = [
        by(&|a| (a.cost, a.time)),
        by(&|a| (a.time, a.cost)),
        by(&|a| (a.cost * a.time, a.time)),
    ];
    for i in firsts.into_iter().flatten() {
        if !order.contains(&i) {
            order.push(i);
        }
    }
    let mut rest: Vec<usize> = (0..front.len()).filter(|i| !order.contains(i)).collect();
    rest.sort_by(|&a, &b| {
        (front[a].cost * front[a].time)
            .total_cmp(&(front[b].cost * front[b].time))
            .then(a.cmp(&b))
    });
    order.extend(rest);
    order
}

/// Shrinks per-image fronts, longest first, until their product fits in
/// `cap`.
fn cap_fronts(fronts: &[Vec<ImageAssignment>], cap: u64) -> Vec<Vec<usize>> {
    let mut kept: Vec<Vec<usize>> = fronts.iter().map(|f| prioritize(f)).collect();
    let product = |k: &[Vec<usize>]| k.iter().map(|v| v.len() as u128).product::<u128>();
    let before = product(&kept);
    while product(&kept) > cap as u128 {
        let longest = (0..kept.len())
            .max_by_key(|&i| (kept[i].len(), usize::MAX - i))
            .unwrap();
        if kept[longest].len() <= 1 {
            break;
        }
        kept[longest].pop();
    }
    if product(&kept) < before {
        log::info!("combination space capped from {before} to {}", product(&kept));
    }
    for k in &mut kept {
        k.sort_unstable();
    }
    kept
}

/// Objective vectors of the feasible combinations, each with its position
/// in the mixed-radix enumeration of `kept` (last image fastest).
fn feasible_combos(
    fronts: &[Vec<ImageAssignment>],
    kept: &[Vec<usize>],
    constraints: &Constraints,
) -> Vec<([f64; 3], u64)> {
    let mut out = Vec::new();
    let mut digits = vec![0usize; kept.len()];
    let mut code = 0u64;
    loop {
        let mut set = 0u128;
        let mut f2 = 0.0;
        let mut f3 = 0.0f64;
        for (img, &d) in digits.iter().enumerate() {
            let a = &fronts[img][kept[img][d]];
            set |= a.instance_set;
            f2 += a.cost;
            f3 = f3.max(a.time);
        }
        let f1 = set.count_ones() as usize;
        if feasible(f1, f2, f3, constraints) {
            out.push(([f1 as f64, f2, f3], code));
        }
        code += 1;
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < kept[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn materialize(
    fronts: &[Vec<ImageAssignment>],
    kept: &[Vec<usize>],
    obj: [f64; 3],
    mut code: u64,
) -> AllocationSolution {
    let mut picks = vec![0usize; kept.len()];
    for img in (0..kept.len()).rev() {
        let radix = kept[img].len() as u64;
        picks[img] = kept[img][(code % radix) as usize];
        code /= radix;
    }
    AllocationSolution {
        f1: obj[0] as usize,
        f2: obj[1],
        f3: obj[2],
        assignments: picks
            .iter()
            .enumerate()
            .map(|(img, &i)| fronts[img][i].clone())
            .collect(),
    }
}

/// Cartesian composition of per-image choices, keeping the feasible ones.
/// Fronts larger than `combo_cap` combinations are trimmed first.
pub fn compose_and_filter(
    fronts: &[Vec<ImageAssignment>],
    constraints: &Constraints,
    combo_cap: u64,
) -> Vec<AllocationSolution> {
    if fronts.is_empty() || fronts.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let kept = cap_fronts(fronts, combo_cap);
    feasible_combos(fronts, &kept, constraints)
        .into_iter()
        .map(|(obj, code)| materialize(fronts, &kept, obj, code))
        .collect()
}

/// Composition followed by the 3D filter, keeping one solution per distinct
/// objective vector. Only front members are materialized.
fn compose_front(fronts: &[Vec<ImageAssignment>], constraints: &Constraints, combo_cap: u64) -> Result<ParetoFront> {
    if fronts.is_empty() || fronts.iter().any(Vec::is_empty) {
        return Err(Error::Infeasible);
    }
    let kept = cap_fronts(fronts, combo_cap);
    let combos = feasible_combos(fronts, &kept, constraints);
    if combos.is_empty() {
        return Err(Error::Infeasible);
    }
    let points: Vec<[f64; 3]> = combos.iter().map(|c| c.0).collect();
    let mut keep = pareto_filter_3d(&points);
    keep.dedup_by(|a, b| points[*a] == points[*b]);
    Ok(ParetoFront {
        solutions: keep
            .into_iter()
            .map(|i| materialize(fronts, &kept, combos[i].0, combos[i].1))
            .collect(),
    })
}

/// 3D front of `solutions`, one solution per distinct objective vector.
pub fn front_of(solutions: Vec<AllocationSolution>) -> ParetoFront {
    let points: Vec<[f64; 3]> = solutions.iter().map(AllocationSolution::objectives).collect();
    let mut keep = pareto_filter_3d(&points);
    keep.dedup_by(|a, b| points[*a] == points[*b]);
    let mut slots: Vec<Option<AllocationSolution>> = solutions.into_iter().map(Some).collect();
    ParetoFront {
        solutions: keep.into_iter().map(|i| slots[i].take().unwrap()).collect(),
    }
}

fn all_pools(app: &Application) -> Vec<Vec<usize>> {
    vec![(0..app.instances.len()).collect(); app.images.len()]
}

/// Greedy front where every image may use every instance.
pub fn allocate<F: Workload>(app: &Application, fragments: &[Vec<F>]) -> Result<ParetoFront> {
    allocate_with_pools(app, fragments, &all_pools(app))
}

/// Greedy front where image `i` may only use the instance indices in
/// `pools[i]`.
pub fn allocate_with_pools<F: Workload>(
    app: &Application,
    fragments: &[Vec<F>],
    pools: &[Vec<usize>],
) -> Result<ParetoFront> {
    check_shapes(app, fragments, pools)?;
    let fronts = app
        .images
        .iter()
        .zip(fragments)
        .zip(pools)
        .map(|((img, frags), pool)| {
            pf_2d_per_image(&img.image_id, frags, &app.instances, pool, &app.sim, &app.constraints)
        })
        .collect::<Result<Vec<_>>>()?;
    compose_front(&fronts, &app.constraints, app.sim.combo_cap)
}

fn check_shapes<F>(app: &Application, fragments: &[Vec<F>], pools: &[Vec<usize>]) -> Result<()> {
    if fragments.len() != app.images.len() {
        return Err(Error::LengthMismatch {
            left: app.images.len(),
            right: fragments.len(),
        });
    }
    if pools.len() != app.images.len() {
        return Err(Error::LengthMismatch {
            left: app.images.len(),
            right: pools.len(),
        });
    }
    for pool in pools {
        if let Some(&bad) = pool.iter().find(|&&i| i >= app.instances.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: app.instances.len(),
            });
        }
    }
    Ok(())
}

/// Exact front over every injective mapping of every image.
pub fn brute_force_front<F: Workload>(app: &Application, fragments: &[Vec<F>]) -> Result<ParetoFront> {
    brute_force_front_with_pools(app, fragments, &all_pools(app))
}

pub fn brute_force_front_with_pools<F: Workload>(
    app: &Application,
    fragments: &[Vec<F>],
    pools: &[Vec<usize>],
) -> Result<ParetoFront> {
    check_shapes(app, fragments, pools)?;
    let mut space: u128 = 1;
    for ((img, frags), pool) in app.images.iter().zip(fragments).zip(pools) {
        check_pool(&img.image_id, frags.len(), pool.len())?;
        space = space.saturating_mul(mapping_count(pool.len(), frags.len()));
        if space > BRUTE_FORCE_LIMIT {
            return Err(Error::SearchSpaceTooLarge(space));
        }
    }
    let per_image = app
        .images
        .iter()
        .zip(fragments)
        .zip(pools)
        .map(|((img, frags), pool)| {
            Ok(enumerate_candidates(frags, &app.instances, pool, &app.sim, true)?
                .iter()
                .map(|c| to_assignment(&img.image_id, c, &app.instances))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    compose_front(&per_image, &app.constraints, u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::dominates;
    use crate::scenario::{Patch, PatchSet, PatchSpec};
    use crate::splitter::Fragment;

    fn inst(id: &str, b: f64, perf: f64, p: f64) -> CloudInstance {
        CloudInstance {
            id: id.into(),
            gpu: String::new(),
            vcpu: 0,
            ram: 0,
            sto: 0,
            b,
            loc: String::new(),
            p,
            perf,
        }
    }

    fn frag(image: &str, idx: usize, n: usize) -> Fragment {
        Fragment {
            image_id: image.into(),
            fragment_index: idx,
            patches: (0..n as u64)
                .map(|i| Patch {
                    patch_id: i,
                    x: i as u32,
                    y: idx as u32,
                })
                .collect(),
            size_bytes: n as u64 * 150_528,
        }
    }

    fn app(images: &[&str], instances: Vec<CloudInstance>, c: Constraints) -> Application {
        Application {
            name: "t".into(),
            images: images
                .iter()
                .map(|id| PatchSet {
                    image_id: id.to_string(),
                    grid_width: 1,
                    grid_height: 1,
                    patches: vec![Patch {
                        patch_id: 0,
                        x: 0,
                        y: 0,
                    }],
                    spec: PatchSpec::default(),
                })
                .collect(),
            instances,
            constraints: c,
            sim: Simulation::default(),
        }
    }

    fn loose() -> Constraints {
        Constraints::new(100, 1e9, 1e9).unwrap()
    }

    #[test]
    fn single_fragment_two_tradeoff_instances() {
        let insts = vec![inst("free", 1e8, 0.5, 0.0), inst("paid", 1e8, 4.0, 1e-3)];
        let front = pf_2d_per_image(
            "a",
            &[frag("a", 0, 1000)],
            &insts,
            &[0, 1],
            &Simulation::default(),
            &loose(),
        )
        .unwrap();
        assert_eq!(front.len(), 2);
        let front = pf_2d_per_image(
            "a",
            &[frag("a", 0, 1000)],
            &insts,
            &[0],
            &Simulation::default(),
            &loose(),
        )
        .unwrap();
        assert_eq!(front.len(), 1);
        assert_eq!(front[0].mapping[&0], "free");
    }

    #[test]
    fn pool_too_small() {
        let insts = vec![inst("a", 1e8, 1.0, 0.0)];
        let frags = [frag("x", 0, 3), frag("x", 1, 3)];
        assert!(matches!(
            pf_2d_per_image("x", &frags, &insts, &[0], &Simulation::default(), &loose()),
            Err(Error::PoolTooSmall {
                fragments: 2,
                instances: 1,
                ..
            })
        ));
    }

    #[test]
    fn two_fragments_four_instances_matches_enumeration() {
        let insts = vec![
            inst("a", 1e8, 1.0, 0.0),
            inst("b", 5e7, 2.0, 1e-4),
            inst("c", 2e8, 0.5, 2e-4),
            inst("d", 1e8, 3.0, 5e-4),
        ];
        let frags = [frag("x", 0, 800), frag("x", 1, 300)];
        let sim = Simulation::default();
        let front = pf_2d_per_image("x", &frags, &insts, &[0, 1, 2, 3], &sim, &loose()).unwrap();

        let mut all = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let t = |f: &Fragment, n: &CloudInstance| node_completion(f, n, &sim).unwrap().t_total;
                let (t0, t1) = (t(&frags[0], &insts[i]), t(&frags[1], &insts[j]));
                all.push([t0.max(t1), t0 * insts[i].p + t1 * insts[j].p]);
            }
        }
        assert_eq!(all.len(), 12);
        let mut expect: Vec<[f64; 2]> = all
            .iter()
            .filter(|p| !all.iter().any(|q| dominates(q, *p)))
            .copied()
            .collect();
        expect.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let got: Vec<[f64; 2]> = front.iter().map(|a| [a.time, a.cost]).collect();
        assert_eq!(got.len(), expect.len());
        for (g, e) in got.iter().zip(&expect) {
            assert!((g[0] - e[0]).abs() < 1e-12 && (g[1] - e[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_free_instance() {
        let a = app(&["x"], vec![inst("free", 1e8, 1.0, 0.0)], loose());
        let front = allocate(&a, &[vec![frag("x", 0, 1000)]]).unwrap();
        assert_eq!(front.len(), 1);
        let s = &front.solutions[0];
        assert_eq!((s.f1, s.f2), (1, 0.0));
        assert!((s.f3 - 6.50592).abs() < 1e-9);
        assert_eq!(brute_force_front(&a, &[vec![frag("x", 0, 1000)]]).unwrap(), front);
    }

    #[test]
    fn budget_below_everything_is_infeasible() {
        let c = Constraints::new(8, 0.0, 1e9).unwrap();
        let a = app(&["x"], vec![inst("paid", 1e8, 1.0, 1e-3)], c);
        assert!(matches!(
            allocate(&a, &[vec![frag("x", 0, 10)]]),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn composition_matches_hand_enumeration() {
        let mk = |image: &str, inst_ids: &[usize], time: f64, cost: f64| ImageAssignment {
            image_id: image.into(),
            mapping: inst_ids.iter().enumerate().map(|(f, i)| (f, format!("n{i}"))).collect(),
            time,
            cost,
            instance_set: inst_ids.iter().fold(0, |m, &i| m | 1u128 << i),
        };
        let a = vec![mk("a", &[0], 10.0, 0.0), mk("a", &[1], 5.0, 0.05)];
        let b = vec![
            mk("b", &[0], 12.0, 0.0),
            mk("b", &[2], 6.0, 0.04),
            mk("b", &[1], 4.0, 0.08),
        ];
        let c = Constraints::new(2, 0.1, 11.0).unwrap();
        let got: Vec<(usize, f64, f64)> = compose_and_filter(&[a, b], &c, 1_000_000)
            .iter()
            .map(|s| (s.f1, s.f2, s.f3))
            .collect();
        // (a0,b0): f3 12 > 11. (a0,b1): (2, 0.04, 10). (a0,b2): (2, 0.08, 10).
        // (a1,b0): f3 12. (a1,b1): f1 2, f2 0.09, f3 6. (a1,b2): (1, 0.13) over budget.
        assert_eq!(got, vec![(2, 0.04, 10.0), (2, 0.08, 10.0), (2, 0.05 + 0.04, 6.0)]);
    }

    #[test]
    fn combo_cap_bounds_the_search() {
        let mk = |t: f64, c: f64| ImageAssignment {
            image_id: "x".into(),
            mapping: BTreeMap::new(),
            time: t,
            cost: c,
            instance_set: 1,
        };
        let front: Vec<ImageAssignment> = (0..10).map(|i| mk(10.0 - i as f64, i as f64)).collect();
        let sols = compose_and_filter(&[front.clone(), front.clone(), front], &loose(), 50);
        assert!(sols.len() <= 50 && !sols.is_empty());
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut n = 0;
        for_each_subset(3, 6, &mut |_| n += 1);
        assert_eq!(n, subset_count(6, 3));
        assert_eq!(n, 20);
        let mut m = 0;
        for_each_injection(3, 5, &mut |_| m += 1);
        assert_eq!(m as u128, mapping_count(5, 3));
    }

    #[test]
    fn representative_prefers_cost_then_time() {
        let s = |f1, f2, f3| AllocationSolution {
            f1,
            f2,
            f3,
            assignments: vec![],
        };
        let front = ParetoFront {
            solutions: vec![s(3, 0.1, 5.0), s(2, 0.0, 9.0), s(1, 0.0, 9.5)],
        };
        assert_eq!(front.representative().unwrap().f1, 2);
    }

    #[test]
    fn csv_quotes_json() {
        let a = app(&["x"], vec![inst("free", 1e8, 1.0, 0.0)], loose());
        let front = allocate(&a, &[vec![frag("x", 0, 10)]]).unwrap();
        let csv = front.to_csv();
        assert!(csv.starts_with("solution_id,f1,f2,f3,assignments_json\n0,1,0,"));
        assert!(csv.contains("\"\"image_id\"\":\"\"x\"\""));
    }
}
