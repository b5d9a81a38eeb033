//! Non-dominated filtering for minimization problems.
//!
//! `a` dominates `b` when it is no worse in every objective and strictly
//! better in at least one. Identical points do not dominate each other, so
//! duplicates survive together.
//!
//! Both filters return indices into the input, ordered lexicographically by
//! objective vector and then by index.

use std::cmp::Ordering;
use std::collections::BTreeMap;

pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

fn lex_order<const D: usize>(points: &[[f64; D]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Non-dominated subset of `(time, cost)` points by a single sweep.
pub fn pareto_filter_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let mut out = Vec::new();
    // Lowest cost seen so far and the smallest time reaching it.
    let mut best: Option<[f64; 2]> = None;
    for i in lex_order(points) {
        let [t, c] = points[i];
        let keep = match best {
            None => true,
            Some([bt, bc]) => c < bc || (c == bc && t == bt),
        };
        if keep {
            out.push(i);
        }
        if best.is_none_or(|[_, bc]| c < bc) {
            best = Some([t, c]);
        }
    }
    out
}

/// Non-dominated subset of `(f1, f2, f3)` points in `O(n log n)`.
///
/// In lexicographic order every earlier distinct point has `f1` no larger,
/// so a point is dominated exactly when some earlier distinct point has
/// `f2` and `f3` no larger. Earlier points are kept as a `(f2, f3)`
/// staircase that answers "lowest f3 with f2 at most x".
pub fn pareto_filter_3d(points: &[[f64; 3]]) -> Vec<usize> {
    let order = lex_order(points);
    let mut stairs: BTreeMap<u64, f64> = BTreeMap::new();
    let mut out = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let p = points[order[i]];
        let mut j = i + 1;
        while j < order.len() && points[order[j]] == p {
            j += 1;
        }
        let key = sort_key(p[1]);
        let dominated = stairs.range(..=key).next_back().is_some_and(|(_, &f3)| f3 <= p[2]);
        if !dominated {
            out.extend_from_slice(&order[i..j]);
            stairs.insert(key, p[2]);
            let stale: Vec<u64> = stairs
                .range(key + 1..)
                .take_while(|(_, &f3)| f3 >= p[2])
                .map(|(&k, _)| k)
                .collect();
            for k in stale {
                stairs.remove(&k);
            }
        }
        i = j;
    }
    out
}

/// Order-preserving map of a float onto `u64`.
fn sort_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}

/// Lexicographic cull for any number of objectives.
pub fn pareto_filter<const D: usize>(points: &[[f64; D]]) -> Vec<usize> {
    let mut front: Vec<usize> = Vec::new();
    for i in lex_order(points) {
        if !front.iter().any(|&f| dominates(&points[f], &points[i])) {
            front.push(i);
        }
    }
    front
}
