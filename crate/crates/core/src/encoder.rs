//! Coordinate perturbation for split fragments.
//!
//! Per fragment: optional per-record Gaussian noise, column normalization,
//! sample covariance, sorted eigendecomposition and projection onto the top
//! `k_dims` eigenvectors. Fragment and patch ids are replaced by keyed
//! digests. Everything needed to invert the transform goes into a
//! [`FragmentKey`] that stays in the trusted zone.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::scenario::PatchSet;
use crate::splitter::Fragment;
use crate::{seed, Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub centered: Matrix,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn column_stats(coords: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = coords.rows() as f64;
    let mean: Vec<f64> = (0..coords.cols())
        .map(|j| coords.column(j).iter().sum::<f64>() / n)
        .collect();
    let std = (0..coords.cols())
        .map(|j| {
            let ss: f64 = coords.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    (mean, std)
}

fn apply_normalization(coords: &Matrix, mean: &[f64], std: &[f64]) -> Matrix {
    let mut centered = coords.clone();
    for i in 0..coords.rows() {
        for j in 0..coords.cols() {
            centered[(i, j)] = (coords[(i, j)] - mean[j]) / std[j];
        }
    }
    // Remove the rounding residue so column means are zero to machine
    // precision.
    for j in 0..coords.cols() {
        let drift = centered.column(j).iter().sum::<f64>() / coords.rows() as f64;
        for i in 0..coords.rows() {
            centered[(i, j)] -= drift;
        }
    }
    centered
}

/// Column-wise z-scoring with the sample (n - 1) standard deviation, so the
/// covariance of the result has a unit diagonal.
pub fn normalize(coords: &Matrix) -> Result<Normalized> {
    if coords.rows() < 2 {
        return Err(Error::TooFewRows(coords.rows()));
    }
    let (mean, std) = column_stats(coords);
    if let Some(j) = std.iter().position(|&s| s == 0.0) {
        return Err(Error::DegenerateVariance(j));
    }
    let centered = apply_normalization(coords, &mean, &std);
    Ok(Normalized { centered, mean, std })
}

/// Like [`normalize`] but constant columns are divided by 1.
fn normalize_lenient(coords: &Matrix) -> Result<Normalized> {
    match normalize(coords) {
        Err(Error::DegenerateVariance(_)) => {
            let (mean, mut std) = column_stats(coords);
            for s in &mut std {
                if *s == 0.0 {
                    *s = 1.0;
                }
            }
            let centered = apply_normalization(coords, &mean, &std);
            Ok(Normalized { centered, mean, std })
        }
        other => other,
    }
}

/// Sample covariance `AᵀA / (n - 1)` of a centered matrix.
pub fn covariance(centered: &Matrix) -> Matrix {
    let n = centered.rows();
    assert!(n >= 2, "covariance needs at least two rows");
    let m = centered.cols();
    let mut sigma = Matrix::zeros(m, m);
    for r in 0..n {
        let row = centered.row(r);
        for i in 0..m {
            for j in i..m {
                sigma[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            let v = sigma[(i, j)] / (n - 1) as f64;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    sigma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// Matrix whose columns are the first `k` eigenvectors.
    pub fn basis(&self, k: usize) -> Matrix {
        let m = self.eigenvectors.first().map_or(0, Vec::len);
        let mut v = Matrix::zeros(m, k);
        for (c, vec) in self.eigenvectors.iter().take(k).enumerate() {
            for r in 0..m {
                v[(r, c)] = vec[r];
            }
        }
        v
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let m = self.eigenvalues.len();
        let mut out = Matrix::zeros(m, m);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..m {
                for j in 0..m {
                    out[(i, j)] += lambda * v[i] * v[j];
                }
            }
        }
        out
    }
}

const SIGN_EPS: f64 = 1e-12;

fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|c| c.abs() > SIGN_EPS) {
        if *first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

fn eig_2x2(a: f64, b: f64, d: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    if b == 0.0 {
        return (vec![a, d], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }
    let half_trace = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b);
    let l1 = half_trace + r;
    let l2 = half_trace - r;
    // Pick the better-conditioned of the two equivalent null-space forms.
    let (x, y) = if a >= d { (l1 - d, b) } else { (b, l1 - a) };
    let norm = x.hypot(y);
    let v1 = vec![x / norm, y / norm];
    let v2 = vec![-v1[1], v1[0]];
    (vec![l1, l2], vec![v1, v2])
}

const JACOBI_SWEEPS: usize = 64;

fn eig_jacobi(sigma: &Matrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = sigma.rows();
    let mut a = sigma.clone();
    let mut v = Matrix::identity(m);
    let scale = a.data.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            let values = (0..m).map(|i| a[(i, i)]).collect();
            let vectors = (0..m).map(|c| v.column(c)).collect();
            return Ok((values, vectors));
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::ConvergenceFailure(JACOBI_SWEEPS))
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending (stable
/// for ties), each eigenvector with its first non-negligible component
/// positive. 2×2 inputs use the closed form, larger ones cyclic Jacobi.
pub fn eig_sorted(sigma: &Matrix) -> Result<EigenDecomposition> {
    if sigma.rows() != sigma.cols() || sigma.rows() == 0 {
        return Err(Error::validation("sigma", "matrix must be square and non-empty"));
    }
    if sigma.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("sigma", "matrix has non-finite entries"));
    }
    let (values, vectors) = if sigma.rows() == 2 {
        eig_2x2(sigma[(0, 0)], 0.5 * (sigma[(0, 1)] + sigma[(1, 0)]), sigma[(1, 1)])
    } else if sigma.rows() == 1 {
        (vec![sigma[(0, 0)]], vec![vec![1.0]])
    } else {
        eig_jacobi(sigma)?
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let mut v = vectors[i].clone();
            canonical_sign(&mut v);
            v
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedRow {
    pub opaque_id: String,
    pub coords: Vec<f64>,
}

/// What an untrusted node receives. `image_id` and `fragment_index` stay on
/// the trusted side and are not serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFragment {
    #[serde(skip)]
    pub image_id: String,
    #[serde(skip)]
    pub fragment_index: usize,
    pub opaque_name: String,
    pub k_dims: usize,
    pub size_bytes: u64,
    /// Sorted by opaque id.
    pub rows: Vec<EncodedRow>,
}

impl EncodedFragment {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.coords[j]).collect()
    }

    /// CSV with header `opaque_id,e1[,e2]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("opaque_id");
        for j in 1..=self.k_dims {
            out.push_str(&format!(",e{j}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.opaque_id);
            for c in &r.coords {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Trusted-zone record that undoes one encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentKey {
    pub opaque_name: String,
    pub image_id: String,
    pub fragment_index: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub eigen: Option<EigenDecomposition>,
    /// `(opaque_id, patch_id)` pairs.
    pub ids: Vec<(String, u64)>,
}

/// Mean and sample std of an image's patch coordinates, used to center
/// fragments too small for their own statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ColumnStats {
    pub fn of_image(set: &PatchSet) -> Self {
        let coords = coords_of(set.patches.iter().map(|p| (p.x, p.y)));
        if coords.rows() < 2 {
            return Self {
                mean: coords.row(0).to_vec(),
                std: vec![1.0; 2],
            };
        }
        let (mean, std) = column_stats(&coords);
        let std = std.into_iter().map(|s| if s == 0.0 { 1.0 } else { s }).collect();
        Self { mean, std }
    }
}

fn coords_of(points: impl Iterator<Item = (u32, u32)>) -> Matrix {
    let rows: Vec<Vec<f64>> = points.map(|(x, y)| vec![x as f64, y as f64]).collect();
    Matrix::from_rows(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeConfig {
    pub k_dims: usize,
    /// Noise std as a multiple of each column's std.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            k_dims: 2,
            noise_scale: 0.05,
            seed: 0,
        }
    }
}

pub fn opaque_fragment_name(key: u64, image_id: &str, fragment_index: usize) -> String {
    let d = seed::keyed_digest(key, &["fragment", image_id, &fragment_index.to_string()]);
    format!("frag-{}", hex::encode(&d[..8]))
}

pub fn opaque_patch_id(key: u64, image_id: &str, patch_id: u64) -> String {
    let d = seed::keyed_digest(key, &["patch", image_id, &patch_id.to_string()]);
    hex::encode(&d[..8])
}

/// Encodes one fragment. Fragments with fewer than two rows need
/// `image_stats`; they are noised and centered by the image statistics
/// instead of their own.
pub fn encode_fragment(
    fragment: &Fragment,
    config: &EncodeConfig,
    image_stats: Option<&ColumnStats>,
) -> Result<(EncodedFragment, FragmentKey)> {
    if !(1..=2).contains(&config.k_dims) {
        return Err(Error::validation("k_dims", "must be 1 or 2"));
    }
    if !(config.noise_scale.is_finite() && config.noise_scale >= 0.0) {
        return Err(Error::validation("noise_scale", "must be non-negative"));
    }
    let n = fragment.len();
    let mut coords = coords_of(fragment.patches.iter().map(|p| (p.x, p.y)));

    let fallback = n < 2;
    let stats = if fallback {
        let s = image_stats.ok_or(Error::TooFewRows(n))?;
        (s.mean.clone(), s.std.clone())
    } else {
        let (m, s) = column_stats(&coords);
        (m, s.into_iter().map(|v| if v == 0.0 { 1.0 } else { v }).collect())
    };

    if config.noise_scale > 0.0 && n > 0 {
        let mut rng = seed::rng(seed::derive(
            config.seed,
            &["noise", &fragment.image_id, &fragment.fragment_index.to_string()],
        ));
        for i in 0..n {
            for j in 0..2 {
                let z: f64 = StandardNormal.sample(&mut rng);
                coords[(i, j)] += config.noise_scale * stats.1[j] * z;
            }
        }
    }

    let (projected, mean, std, eigen) = if fallback {
        let mut out = Matrix::zeros(n, config.k_dims);
        for i in 0..n {
            for j in 0..config.k_dims {
                out[(i, j)] = (coords[(i, j)] - stats.0[j]) / stats.1[j];
            }
        }
        (out, stats.0, stats.1, None)
    } else {
        let norm = normalize_lenient(&coords)?;
        let sigma = covariance(&norm.centered);
        let eig = eig_sorted(&sigma)?;
        let projected = norm.centered.matmul(&eig.basis(config.k_dims));
        (projected, norm.mean, norm.std, Some(eig))
    };

    let opaque_name = opaque_fragment_name(config.seed, &fragment.image_id, fragment.fragment_index);
    let mut rows: Vec<(EncodedRow, u64)> = fragment
        .patches
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                EncodedRow {
                    opaque_id: opaque_patch_id(config.seed, &fragment.image_id, p.patch_id),
                    coords: projected.row(i).to_vec(),
                },
                p.patch_id,
            )
        })
        .collect();
    rows.sort_by(|a, b| a.0.opaque_id.cmp(&b.0.opaque_id));

    let key = FragmentKey {
        opaque_name: opaque_name.clone(),
        image_id: fragment.image_id.clone(),
        fragment_index: fragment.fragment_index,
        mean,
        std,
        eigen,
        ids: rows.iter().map(|(r, id)| (r.opaque_id.clone(), *id)).collect(),
    };
    let encoded = EncodedFragment {
        image_id: fragment.image_id.clone(),
        fragment_index: fragment.fragment_index,
        opaque_name,
        k_dims: config.k_dims,
        size_bytes: fragment.size_bytes,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    };
    Ok((encoded, key))
}

/// Encodes every fragment of one image.
pub fn encode_image(
    set: &PatchSet,
    fragments: &[Fragment],
    config: &EncodeConfig,
) -> Result<Vec<(EncodedFragment, FragmentKey)>> {
    let stats = ColumnStats::of_image(set);
    fragments
        .iter()
        .map(|f| encode_fragment(f, config, Some(&stats)))
        .collect()
}

/// Maps encoded rows back to normalized (pre-projection) coordinates, then to
/// grid coordinates. Exact only for `k_dims = 2`; noise is not removed.
pub fn decode(encoded: &EncodedFragment, key: &FragmentKey) -> Vec<(u64, f64, f64)> {
    let lookup: std::collections::BTreeMap<&str, u64> = key.ids.iter().map(|(o, p)| (o.as_str(), *p)).collect();
    encoded
        .rows
        .iter()
        .map(|r| {
            let mut z = [0.0; 2];
            match &key.eigen {
                Some(eig) => {
                    for (c, v) in r.coords.iter().zip(&eig.eigenvectors) {
                        z[0] += c * v[0];
                        z[1] += c * v[1];
                    }
                }
                None => {
                    for (j, c) in r.coords.iter().enumerate() {
                        z[j] = *c;
                    }
                }
            }
            let x = z[0] * key.std[0] + key.mean[0];
            let y = z[1] * key.std[1] + key.mean[1];
            (lookup[r.opaque_id.as_str()], x, y)
        })
        .collect()
}
