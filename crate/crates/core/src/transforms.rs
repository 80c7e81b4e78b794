//! Axis transforms over an embedding space: identity, PCA and FastICA.
//!
//! Every fitted transform stores its axes as rows of `components`, expressed
//! in the original embedding space and sorted by `axis_scores` (largest
//! first). Projecting onto the top `k` axes is then a prefix of the rows.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::embedstore::EmbeddingStore;
use crate::error::{Error, Result};
use crate::rng::PortableRng;

pub const TRANSFORM_FILE: &str = "transform.json";
pub const COMPONENTS_FILE: &str = "components.f64";
pub const MEAN_FILE: &str = "mean.f64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Raw,
    Pca,
    Ica,
}

impl TransformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Raw => "raw",
            TransformKind::Pca => "pca",
            TransformKind::Ica => "ica",
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(TransformKind::Raw),
            "pca" => Ok(TransformKind::Pca),
            "ica" => Ok(TransformKind::Ica),
            other => Err(Error::InvalidArgument(format!("unknown transform kind {other:?}"))),
        }
    }
}

/// A fitted (or identity) axis transform.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisTransform {
    pub kind: TransformKind,
    /// Centering vector, length `dim`.
    pub mean: Vec<f64>,
    /// `m × dim`; row `i` is axis `i` in the original space.
    pub components: DMatrix<f64>,
    /// Ordering score per axis, non-increasing.
    pub axis_scores: Vec<f64>,
    pub fitted_on: usize,
    pub seed: Option<u64>,
    /// ICA only: whether the fixed-point iteration met `tol`.
    pub converged: Option<bool>,
    /// ICA only: iterations run.
    pub n_iter: Option<usize>,
}

/// FastICA settings. Defaults follow scikit-learn's `FastICA`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Number of independent components; `None` keeps all `dim`.
    pub n_components: Option<usize>,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-4,
            seed: 0,
            n_components: None,
        }
    }
}

impl IcaConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument("tol must be a positive real".into()));
        }
        if self.n_components == Some(0) {
            return Err(Error::InvalidArgument("n_components must be positive".into()));
        }
        Ok(())
    }
}

/// Identity transform in the original dimension order.
pub fn fit_raw(dim: usize) -> AxisTransform {
    AxisTransform {
        kind: TransformKind::Raw,
        mean: vec![0.0; dim],
        components: DMatrix::identity(dim, dim),
        axis_scores: vec![1.0; dim],
        fitted_on: 0,
        seed: None,
        converged: None,
        n_iter: None,
    }
}

fn check_input(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: x.nrows(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidArgument("input has no columns".into()));
    }
    for c in 0..x.ncols() {
        for r in 0..x.nrows() {
            if !x[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

fn centered(x: &DMatrix<f64>, mean: &[f64]) -> DMatrix<f64> {
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    xc
}

/// Flip each row so that its largest-magnitude entry is positive.
fn fix_row_signs(components: &mut DMatrix<f64>) {
    for mut row in components.row_iter_mut() {
        let mut pivot = 0.0f64;
        for v in row.iter() {
            if v.abs() > pivot.abs() {
                pivot = *v;
            }
        }
        if pivot < 0.0 {
            row.neg_mut();
        }
    }
}

/// Indices that sort `scores` descending; ties keep their original order.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn select_rows(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(order.len(), m.ncols(), |r, c| m[(order[r], c)])
}

/// PCA via the SVD of the centered data. Keeps `min(n, d)` axes scored by
/// explained-variance ratio.
pub fn fit_pca(x: &DMatrix<f64>) -> Result<AxisTransform> {
    check_input(x)?;
    let mean = column_means(x);
    let xc = centered(x, &mean);
    // nalgebra's SVD returns inaccurate singular vectors once the input has
    // an exact zero singular value (always the case for n <= d after
    // centering), so the decomposition goes through faer.
    let (n, d) = xc.shape();
    let svd = faer::Mat::<f64>::from_fn(n, d, |i, j| xc[(i, j)])
        .thin_svd()
        .map_err(|e| Error::InvalidArgument(format!("SVD did not converge: {e:?}")))?;
    let (v, s) = (svd.V(), svd.S().column_vector());
    let m = n.min(d);
    let v_t = DMatrix::from_fn(m, d, |r, c| v[(c, r)]);
    let sq: Vec<f64> = (0..m).map(|i| s[i] * s[i]).collect();
    let total: f64 = sq.iter().sum();
    let order = descending_order(&sq);
    let mut components = select_rows(&v_t, &order);
    fix_row_signs(&mut components);
    let axis_scores = order
        .iter()
        .map(|&i| if total > 0.0 { sq[i] / total } else { 0.0 })
        .collect();
    Ok(AxisTransform {
        kind: TransformKind::Pca,
        mean,
        components,
        axis_scores,
        fitted_on: x.nrows(),
        seed: None,
        converged: None,
        n_iter: None,
    })
}

/// Biased Fisher–Pearson sample skewness `m3 / m2^{3/2}`.
///
/// Returns 0 for fewer than two values or (numerically) zero variance.
pub fn skewness(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
    }
    m2 /= n;
    m3 /= n;
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m2 <= 0.0 || m2.sqrt() <= 1e-14 * scale {
        return 0.0;
    }
    m3 / (m2 * m2.sqrt())
}

/// Diagnostics of a FastICA fit beyond the public transform.
#[derive(Debug, Clone)]
pub struct IcaFit {
    pub transform: AxisTransform,
    /// Unmixing matrix in whitened space, `k × k`, rows in sorted axis order
    /// (before sign normalization).
    pub whitened_unmixing: DMatrix<f64>,
    /// Whitening matrix, `k × d`.
    pub whitening: DMatrix<f64>,
}

/// FastICA with the parallel fixed-point update and the logcosh contrast.
pub fn fit_ica(x: &DMatrix<f64>, cfg: &IcaConfig) -> Result<AxisTransform> {
    fit_ica_detailed(x, cfg).map(|f| f.transform)
}

pub fn fit_ica_detailed(x: &DMatrix<f64>, cfg: &IcaConfig) -> Result<IcaFit> {
    cfg.validate()?;
    check_input(x)?;
    let (n, d) = x.shape();
    let k = cfg.n_components.unwrap_or(d);
    if k > d {
        return Err(Error::InvalidArgument(format!(
            "n_components {k} exceeds dimension {d}"
        )));
    }
    if n < k {
        return Err(Error::TooFewRows { needed: k, got: n });
    }

    let mean = column_means(x);
    let xc = centered(x, &mean);

    // Whitening from the eigendecomposition of the sample covariance.
    let cov = (xc.transpose() * &xc) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let order = descending_order(eig.eigenvalues.as_slice());
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > top * 1e-12 && eig.eigenvalues[i] > 0.0)
        .count();
    if rank < k {
        return Err(Error::RankDeficient { rank, requested: k });
    }
    let mut whitening = DMatrix::zeros(k, d);
    for (r, &i) in order.iter().take(k).enumerate() {
        let scale = 1.0 / eig.eigenvalues[i].sqrt();
        for c in 0..d {
            whitening[(r, c)] = eig.eigenvectors[(c, i)] * scale;
        }
    }
    fix_row_signs(&mut whitening);
    let z = &xc * whitening.transpose();

    let mut rng = PortableRng::new(cfg.seed);
    let w_init = DMatrix::from_row_iterator(k, k, (0..k * k).map(|_| rng.gaussian()));
    let (w, n_iter, converged) = parallel_fixed_point(&z, w_init, cfg)?;

    let unmixing = &w * &whitening;
    let sources = &xc * unmixing.transpose();
    let mut skews: Vec<f64> = sources
        .column_iter()
        .map(|c| skewness(c.as_slice()))
        .collect();
    let mut components = unmixing;
    for (i, s) in skews.iter_mut().enumerate() {
        if *s < 0.0 {
            components.row_mut(i).neg_mut();
            *s = -*s;
        }
    }
    let order = descending_order(&skews);
    Ok(IcaFit {
        transform: AxisTransform {
            kind: TransformKind::Ica,
            mean,
            components: select_rows(&components, &order),
            axis_scores: order.iter().map(|&i| skews[i]).collect(),
            fitted_on: n,
            seed: Some(cfg.seed),
            converged: Some(converged),
            n_iter: Some(n_iter),
        },
        whitened_unmixing: select_rows(&w, &order),
        whitening,
    })
}

/// `W <- (W Wᵀ)^{-1/2} W`.
fn symmetric_decorrelation(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let floor = eig.eigenvalues.max() * 1e-14;
    if eig.eigenvalues.iter().any(|&l| !(l > floor)) {
        return Err(Error::InvalidArgument(
            "unmixing matrix became singular during decorrelation".into(),
        ));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let e = &eig.eigenvectors;
    Ok(e * DMatrix::from_diagonal(&inv_sqrt) * e.transpose() * w)
}

fn parallel_fixed_point(
    z: &DMatrix<f64>,
    w_init: DMatrix<f64>,
    cfg: &IcaConfig,
) -> Result<(DMatrix<f64>, usize, bool)> {
    let n = z.nrows() as f64;
    let mut w = symmetric_decorrelation(&w_init)?;
    for it in 1..=cfg.max_iter {
        // Projections onto the current unmixing rows: n × k.
        let mut g = z * w.transpose();
        let mut mean_dg = vec![0.0; w.nrows()];
        for (j, mut col) in g.column_iter_mut().enumerate() {
            let mut acc = 0.0;
            for v in col.iter_mut() {
                let t = v.tanh();
                *v = t;
                acc += 1.0 - t * t;
            }
            mean_dg[j] = acc / n;
        }
        let mut next = (g.transpose() * z) / n;
        for (j, mut row) in next.row_iter_mut().enumerate() {
            for (v, wv) in row.iter_mut().zip(w.row(j).iter()) {
                *v -= mean_dg[j] * wv;
            }
        }
        let next = symmetric_decorrelation(&next)?;
        let overlap = &next * w.transpose();
        let lim = (0..w.nrows())
            .map(|i| (overlap[(i, i)].abs() - 1.0).abs())
            .fold(0.0f64, f64::max);
        w = next;
        if lim < cfg.tol {
            return Ok((w, it, true));
        }
    }
    Ok((w, cfg.max_iter, false))
}

/// Number of leading axes kept for a fraction: `max(1, floor(fraction · m))`.
///
/// A 1e-9 slack absorbs representation error in products such as
/// `0.29 · 100`.
pub fn top_k_count(fraction: f64, m: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let k = (fraction * m as f64 + 1e-9).floor() as usize;
    Ok(k.clamp(1, m.max(1)))
}

/// Projected store rows, row-major, restricted to the first `width` axes.
#[derive(Debug, Clone)]
pub struct Projected {
    width: usize,
    data: Vec<f64>,
    // store row -> local row
    slots: std::collections::HashMap<usize, usize>,
}

impl Projected {
    pub fn width(&self) -> usize {
        self.width
    }

    /// Projection of store row `row`. Panics if the row was not projected.
    pub fn row(&self, row: usize) -> &[f64] {
        let s = self.slots[&row];
        &self.data[s * self.width..(s + 1) * self.width]
    }
}

impl AxisTransform {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of axes `m`.
    pub fn n_axes(&self) -> usize {
        self.components.nrows()
    }

    /// Project rows of `x` onto the top `top_fraction` of the sorted axes.
    pub fn project(&self, x: &DMatrix<f64>, top_fraction: f64) -> Result<DMatrix<f64>> {
        let k = top_k_count(top_fraction, self.n_axes())?;
        self.project_axes(x, k)
    }

    /// Project rows of `x` onto the first `k` sorted axes.
    pub fn project_axes(&self, x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        self.check_axes(k)?;
        let xc = centered(x, &self.mean);
        let basis = self.components.rows(0, k);
        Ok(xc * basis.transpose())
    }

    fn check_axes(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n_axes() {
            return Err(Error::InvalidArgument(format!(
                "axis count {k} outside 1..={}",
                self.n_axes()
            )));
        }
        Ok(())
    }

    /// Project the given store rows onto the first `k` axes.
    pub fn project_store_rows(
        &self,
        store: &EmbeddingStore,
        rows: &[usize],
        k: usize,
    ) -> Result<Projected> {
        if store.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: store.dim(),
            });
        }
        self.check_axes(k)?;
        let mut slots = std::collections::HashMap::with_capacity(rows.len());
        let mut unique = Vec::with_capacity(rows.len());
        for &r in rows {
            if let std::collections::hash_map::Entry::Vacant(e) = slots.entry(r) {
                e.insert(unique.len());
                unique.push(r);
            }
        }
        let d = self.dim();
        let mut data = vec![0.0; unique.len() * k];
        let mut centered_row = vec![0.0; d];
        for (s, &r) in unique.iter().enumerate() {
            for (c, v) in store.row(r).iter().enumerate() {
                centered_row[c] = f64::from(*v) - self.mean[c];
            }
            let out = &mut data[s * k..(s + 1) * k];
            for (a, o) in out.iter_mut().enumerate() {
                let axis = self.components.row(a);
                *o = axis
                    .iter()
                    .zip(&centered_row)
                    .map(|(w, x)| w * x)
                    .sum();
            }
        }
        Ok(Projected {
            width: k,
            data,
            slots,
        })
    }

    /// Write `transform.json`, `components.f64` and `mean.f64` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let descriptor = TransformFile {
            kind: self.kind,
            dim: self.dim(),
            m: self.n_axes(),
            seed: self.seed,
            axis_scores: self.axis_scores.clone(),
            converged: self.converged,
            n_iter: self.n_iter,
            fitted_on: self.fitted_on,
        };
        let json = serde_json::to_string_pretty(&descriptor).expect("descriptor serializes");
        let path = dir.join(TRANSFORM_FILE);
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

        let mut comp = Vec::with_capacity(self.components.len() * 8);
        for row in self.components.row_iter() {
            for v in row.iter() {
                comp.extend_from_slice(&v.to_le_bytes());
            }
        }
        let path = dir.join(COMPONENTS_FILE);
        fs::write(&path, comp).map_err(|e| Error::io(&path, e))?;
        let mean: Vec<u8> = self.mean.iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join(MEAN_FILE);
        fs::write(&path, mean).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(TRANSFORM_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let desc: TransformFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.clone(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        if desc.axis_scores.len() != desc.m {
            return Err(Error::Format {
                path,
                line: None,
                message: format!("{} axis scores for m = {}", desc.axis_scores.len(), desc.m),
            });
        }
        let comp = read_f64s(&dir.join(COMPONENTS_FILE), desc.m * desc.dim)?;
        let mean = read_f64s(&dir.join(MEAN_FILE), desc.dim)?;
        Ok(Self {
            kind: desc.kind,
            mean,
            components: DMatrix::from_row_slice(desc.m, desc.dim, &comp),
            axis_scores: desc.axis_scores,
            fitted_on: desc.fitted_on,
            seed: desc.seed,
            converged: desc.converged,
            n_iter: desc.n_iter,
        })
    }
}

fn read_f64s(path: &Path, count: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != count * 8 {
        return Err(Error::ByteLength {
            expected: count * 8,
            actual: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: None,
            message: format!("non-finite value at index {pos}"),
        });
    }
    Ok(values)
}

/// Contents of `transform.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformFile {
    pub kind: TransformKind,
    pub dim: usize,
    pub m: usize,
    pub seed: Option<u64>,
    pub axis_scores: Vec<f64>,
    pub converged: Option<bool>,
    #[serde(default)]
    pub n_iter: Option<usize>,
    #[serde(default)]
    pub fitted_on: usize,
}
