//! Entropy-based privacy metrics for a split image.
//!
//! All estimators are plug-in estimators over empirical frequencies, in
//! bits. Continuous values are discretized with [`quantize`] first.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::encoder::EncodedFragment;
use crate::splitter::Fragment;
use crate::{seed, Error, Result};

/// Empirical distribution over symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T: Ord> {
    pub probabilities: BTreeMap<T, f64>,
}

impl<T: Ord + Clone> DiscreteDistribution<T> {
    pub fn from_samples(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = values.len() as f64;
        let probabilities = counts(values.iter().cloned())
            .into_iter()
            .map(|(s, c)| (s, c as f64 / n))
            .collect();
        Ok(Self { probabilities })
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probabilities
            .values()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    }
}

fn counts<T: Ord>(values: impl Iterator<Item = T>) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for v in values {
        *m.entry(v).or_insert(0) += 1;
    }
    m
}

fn entropy_of_counts<'a>(counts: impl Iterator<Item = &'a usize>, n: usize) -> f64 {
    let n = n as f64;
    let h: f64 = counts
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Shannon entropy of the empirical distribution of `values`.
pub fn shannon_entropy<T: Ord>(values: &[T]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(entropy_of_counts(counts(values.iter()).values(), values.len()))
}

/// Equal-width binning over `[min, max]`. Bins are right-closed, except the
/// first which also holds the minimum.
pub fn quantize(values: &[f64], bins: usize) -> Vec<u32> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    quantize_in_range(values, lo, hi, bins)
}

/// [`quantize`] against a fixed range; values outside it are clamped.
pub fn quantize_in_range(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u32> {
    let bins = bins.max(1);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0; values.len()];
    }
    let width = (hi - lo) / bins as f64;
    values
        .iter()
        .map(|&v| {
            let b = ((v - lo) / width).ceil() as i64 - 1;
            b.clamp(0, bins as i64 - 1) as u32
        })
        .collect()
}

/// Mutual information normalized by the arithmetic mean of the marginal
/// entropies. Returns exactly 1 when the pairing is a bijection between
/// symbols (including two constant streams) and is clamped to `[0, 1]`.
pub fn normalized_mutual_information<A: Ord, B: Ord>(x: &[A], y: &[B]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len();
    let cx = counts(x.iter());
    let cy = counts(y.iter());
    let cxy = counts(x.iter().zip(y.iter()));
    if cxy.len() == cx.len() && cxy.len() == cy.len() {
        return Ok(1.0);
    }
    let hx = entropy_of_counts(cx.values(), n);
    let hy = entropy_of_counts(cy.values(), n);
    let hxy = entropy_of_counts(cxy.values(), n);
    let mean = 0.5 * (hx + hy);
    if mean <= 0.0 {
        return Ok(0.0);
    }
    Ok(((hx + hy - hxy) / mean).clamp(0.0, 1.0))
}

/// Mean over fragments of `H(Z_i) - H(S_i)`.
pub fn average_information_gain<A: Ord, B: Ord>(private: &[Vec<A>], encoded: &[Vec<B>]) -> Result<f64> {
    if private.len() != encoded.len() {
        return Err(Error::LengthMismatch {
            left: private.len(),
            right: encoded.len(),
        });
    }
    if private.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = 0.0;
    for (s, z) in private.iter().zip(encoded) {
        total += shannon_entropy(z)? - shannon_entropy(s)?;
    }
    Ok(total / private.len() as f64)
}

/// NMI between the desired and the produced outputs.
pub fn output_utility<T: Ord>(desired: &[T], estimated: &[T]) -> Result<f64> {
    normalized_mutual_information(desired, estimated)
}

/// Symbol streams seen by an adversary that controls every fragment except
/// `honest`.
///
/// The honest fragment's values are sorted; each corrupted fragment's rows
/// are sorted by value and paired with the honest stream by rank index,
/// truncated to the shorter of the two. A view symbol is the quantized
/// corrupted value combined with that row's output label.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryView {
    pub corrupted_fragment_indices: Vec<usize>,
    pub honest_symbols: Vec<u32>,
    pub view_symbols: Vec<(u32, u32)>,
}

impl AdversaryView {
    pub fn leave_one_out(private: &[Vec<f64>], outputs: &[Vec<u32>], honest: usize, bins: usize) -> Result<Self> {
        if private.len() != outputs.len() {
            return Err(Error::LengthMismatch {
                left: private.len(),
                right: outputs.len(),
            });
        }
        if honest >= private.len() {
            return Err(Error::IndexOutOfRange {
                index: honest,
                len: private.len(),
            });
        }
        if private.len() < 2 {
            return Err(Error::validation("fragments", "need at least two fragments"));
        }
        for (s, y) in private.iter().zip(outputs) {
            if s.len() != y.len() {
                return Err(Error::LengthMismatch {
                    left: s.len(),
                    right: y.len(),
                });
            }
        }
        let all = private.iter().flatten().copied();
        let lo = all.clone().fold(f64::INFINITY, f64::min);
        let hi = all.fold(f64::NEG_INFINITY, f64::max);

        let mut honest_sorted = private[honest].clone();
        honest_sorted.sort_by(f64::total_cmp);
        let honest_q = quantize_in_range(&honest_sorted, lo, hi, bins);

        let mut view = AdversaryView {
            corrupted_fragment_indices: Vec::new(),
            honest_symbols: Vec::new(),
            view_symbols: Vec::new(),
        };
        for (j, (s, y)) in private.iter().zip(outputs).enumerate() {
            if j == honest {
                continue;
            }
            view.corrupted_fragment_indices.push(j);
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
            let len = honest_q.len().min(order.len());
            let vals: Vec<f64> = order[..len].iter().map(|&r| s[r]).collect();
            let q = quantize_in_range(&vals, lo, hi, bins);
            view.honest_symbols.extend_from_slice(&honest_q[..len]);
            view.view_symbols
                .extend(q.into_iter().zip(order[..len].iter().map(|&r| y[r])));
        }
        Ok(view)
    }
}

/// Normalized mutual information between the honest fragment and the
/// adversary's view under leave-one-out corruption. Lower is more private.
pub fn individual_privacy_lower_bound(
    private: &[Vec<f64>],
    outputs: &[Vec<u32>],
    honest: usize,
    bins: usize,
) -> Result<f64> {
    let view = AdversaryView::leave_one_out(private, outputs, honest, bins)?;
    if view.honest_symbols.is_empty() {
        return Ok(0.0);
    }
    normalized_mutual_information(&view.honest_symbols, &view.view_symbols)
}

/// Number of distinct simulated inference classes.
pub const OUTPUT_CLASSES: u32 = 2;

/// Simulated inference output for one patch: a keyed pseudo-label. It only
/// depends on the patch, so splitting cannot change it.
pub fn pseudo_label(key: u64, image_id: &str, patch_id: u64) -> u32 {
    let d = seed::keyed_digest(key, &["label", image_id, &patch_id.to_string()]);
    (u32::from_le_bytes([d[0], d[1], d[2], d[3]])) % OUTPUT_CLASSES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Approach,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Approach => "approach",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMetrics {
    pub aig: f64,
    /// One entry per honest-fragment choice.
    pub individual_privacy_lb: Vec<f64>,
}

impl AxisMetrics {
    pub fn mean_privacy_lb(&self) -> f64 {
        mean(&self.individual_privacy_lb)
    }
}

/// Privacy scores of one split of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub method: Method,
    pub image_id: String,
    pub fragments: usize,
    pub bins: usize,
    pub x: AxisMetrics,
    pub y: AxisMetrics,
    pub output_utility: Vec<f64>,
    pub fragment_size_variance: f64,
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Population variance.
pub(crate) fn variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

/// Scores a split: AIG per axis from private vs encoded coordinates, the
/// leave-one-out lower bound for every honest fragment, and the output
/// utility of reassembling pseudo-labels from the fragments.
///
/// `encoded[i]` must be the encoding of `fragments[i]`.
pub fn evaluate_split(
    method: Method,
    fragments: &[Fragment],
    encoded: &[EncodedFragment],
    label_key: u64,
    bins: usize,
) -> Result<PrivacyReport> {
    if fragments.len() != encoded.len() {
        return Err(Error::LengthMismatch {
            left: fragments.len(),
            right: encoded.len(),
        });
    }
    let first = fragments.first().ok_or(Error::EmptyInput)?;
    let image_id = first.image_id.clone();

    let axis = |ax: usize| -> Result<AxisMetrics> {
        let private: Vec<Vec<f64>> = fragments
            .iter()
            .map(|f| {
                f.patches
                    .iter()
                    .map(|p| if ax == 0 { p.x as f64 } else { p.y as f64 })
                    .collect()
            })
            .collect();
        let private_sym: Vec<Vec<i64>> = private.iter().map(|v| v.iter().map(|&c| c as i64).collect()).collect();
        let col = ax.min(encoded[0].k_dims.saturating_sub(1));
        let encoded_sym: Vec<Vec<u32>> = encoded.iter().map(|e| quantize(&e.column(col), bins)).collect();
        let aig = average_information_gain(&private_sym, &encoded_sym)?;
        let outputs: Vec<Vec<u32>> = fragments
            .iter()
            .map(|f| {
                f.patches
                    .iter()
                    .map(|p| pseudo_label(label_key, &f.image_id, p.patch_id))
                    .collect()
            })
            .collect();
        let individual_privacy_lb = if fragments.len() < 2 {
            vec![1.0]
        } else {
            (0..fragments.len())
                .map(|i| individual_privacy_lower_bound(&private, &outputs, i, bins))
                .collect::<Result<_>>()?
        };
        Ok(AxisMetrics {
            aig,
            individual_privacy_lb,
        })
    };

    // Desired outputs come from running every patch in one place; estimated
    // ones are gathered per fragment and reassembled by patch id.
    let mut desired: Vec<(u64, u32)> = fragments
        .iter()
        .flat_map(|f| f.patches.iter())
        .map(|p| (p.patch_id, pseudo_label(label_key, &image_id, p.patch_id)))
        .collect();
    desired.sort_unstable();
    let mut estimated: Vec<(u64, u32)> = fragments
        .iter()
        .flat_map(|f| {
            f.patches
                .iter()
                .map(move |p| (p.patch_id, pseudo_label(label_key, &f.image_id, p.patch_id)))
        })
        .collect();
    estimated.sort_unstable();
    let y: Vec<u32> = desired.iter().map(|d| d.1).collect();
    let y_hat: Vec<u32> = estimated.iter().map(|e| e.1).collect();
    let utility = output_utility(&y, &y_hat)?;

    let sizes: Vec<f64> = fragments.iter().map(|f| f.len() as f64).collect();
    Ok(PrivacyReport {
        method,
        image_id,
        fragments: fragments.len(),
        bins,
        x: axis(0)?,
        y: axis(1)?,
        output_utility: vec![utility],
        fragment_size_variance: variance(&sizes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&["a", "a", "a"]).unwrap(), 0.0);
        assert_eq!(shannon_entropy(&["a", "b", "c", "d"]).unwrap(), 2.0);
        // p = (1/4, 1/4, 1/2): 2·(1/4)·2 + (1/2)·1
        assert!((shannon_entropy(&["a", "b", "c", "c"]).unwrap() - 1.5).abs() < 1e-12);
        assert!(matches!(shannon_entropy::<u8>(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn distribution_matches_entropy() {
        let d = DiscreteDistribution::from_samples(&[1, 2, 2, 3]).unwrap();
        assert!((d.probabilities.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(d.entropy(), shannon_entropy(&[1, 2, 2, 3]).unwrap());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(&[0.0, 0.5, 1.0], 2), vec![0, 0, 1]);
        assert_eq!(quantize(&[3.0; 5], 8), vec![0; 5]);
        assert_eq!(quantize(&[0.0, 1.0, 7.0], 1), vec![0, 0, 0]);
    }

    #[test]
    fn quantized_uniform_entropy_near_four_bits() {
        let mut rng = seed::rng(3);
        let v: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let h = shannon_entropy(&quantize(&v, 16)).unwrap();
        assert!((3.8..=4.0).contains(&h), "{h}");
    }

    #[test]
    fn nmi_examples() {
        let x = [0, 1, 2, 1, 0, 2];
        assert_eq!(normalized_mutual_information(&x, &x).unwrap(), 1.0);
        assert_eq!(normalized_mutual_information(&[5, 5], &[7, 7]).unwrap(), 1.0);
        assert_eq!(
            normalized_mutual_information(&[0, 1, 0, 1], &[3, 3, 3, 3]).unwrap(),
            0.0
        );
        assert!(matches!(
            normalized_mutual_information(&[1, 2], &[1]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));

        let mut rng = seed::rng(11);
        let x: Vec<u8> = (0..10_000).map(|i| (i % 2) as u8).collect();
        let mut y = x.clone();
        seed::shuffle(&mut y, &mut rng);
        assert!(normalized_mutual_information(&x, &y).unwrap() < 0.01);
    }

    #[test]
    fn nmi_is_symmetric_and_bounded() {
        let mut rng = seed::rng(12);
        for _ in 0..200 {
            let n = rng.random_range(1..60);
            let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..5)).collect();
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let a = normalized_mutual_information(&x, &y).unwrap();
            let b = normalized_mutual_information(&y, &x).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn aig_examples() {
        let s = vec![vec![1, 2, 3]];
        assert_eq!(average_information_gain(&s, &s).unwrap(), 0.0);
        let z = vec![vec!["a", "b", "c", "d"]];
        let s = vec![vec!["a", "b", "c", "c"]];
        assert!((average_information_gain(&s, &z).unwrap() - 0.5).abs() < 1e-12);
        assert!((average_information_gain(&z, &s).unwrap() + 0.5).abs() < 1e-12);
        assert!(average_information_gain(&s, &[z[0].clone(), z[0].clone()]).is_err());
    }

    #[test]
    fn utility_examples() {
        let y = [0, 1, 1, 0, 1];
        assert_eq!(output_utility(&y, &y).unwrap(), 1.0);
        assert_eq!(output_utility(&y, &[1; 5]).unwrap(), 0.0);
    }

    #[test]
    fn privacy_bound_full_disclosure() {
        let s: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let labels: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        let rho = individual_privacy_lower_bound(&[s.clone(), s], &[labels.clone(), labels], 0, 64).unwrap();
        assert!(rho > 0.99, "{rho}");
    }

    #[test]
    fn privacy_bound_uninformative_view() {
        // The corrupted fragment sits on one coordinate with random outputs,
        // so the view carries nothing about the honest values.
        let mut rng = seed::rng(21);
        let n = 100_000;
        let honest: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..64.0)).collect();
        let corrupted = vec![32.0; n];
        let out_h: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let out_c: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let rho = individual_privacy_lower_bound(&[honest, corrupted], &[out_h, out_c], 0, 64).unwrap();
        assert!(rho < 0.05, "{rho}");
    }

    #[test]
    fn privacy_bound_errors() {
        let s = vec![vec![1.0], vec![2.0]];
        let y = vec![vec![0], vec![1]];
        assert!(matches!(
            individual_privacy_lower_bound(&s, &y, 2, 8),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
        assert!(individual_privacy_lower_bound(&s[..1], &y[..1], 0, 8).is_err());
    }

    #[test]
    fn adversary_view_truncates_to_shorter_stream() {
        let s = vec![vec![0.0, 1.0, 2.0], vec![5.0, 4.0], vec![9.0, 8.0, 7.0, 6.0]];
        let y = vec![vec![0; 3], vec![1, 0], vec![0, 1, 0, 1]];
        let v = AdversaryView::leave_one_out(&s, &y, 0, 10).unwrap();
        assert_eq!(v.corrupted_fragment_indices, vec![1, 2]);
        assert_eq!(v.honest_symbols.len(), 2 + 3);
        // Fragment 1 sorted: 4.0 (label 0), 5.0 (label 1).
        assert_eq!(v.view_symbols[0].1, 0);
        assert_eq!(v.view_symbols[1].1, 1);
    }

    #[test]
    fn pseudo_labels_are_deterministic_and_mixed() {
        let a: Vec<u32> = (0..200).map(|p| pseudo_label(1, "img", p)).collect();
        let b: Vec<u32> = (0..200).map(|p| pseudo_label(1, "img", p)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|&l| l < OUTPUT_CLASSES));
        let ones = a.iter().filter(|&&l| l == 1).count();
        assert!((60..140).contains(&ones));
    }
}
