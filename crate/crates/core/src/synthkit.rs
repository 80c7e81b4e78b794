//! Synthetic fixtures with planted change axes, and brute-force oracles used
//! to cross-check the main implementations.
//!
//! Generators draw only from [`PortableRng`], so a given spec produces the
//! same store bytes on every platform.

use nalgebra::DMatrix;

use crate::embedstore::{EmbeddingStore, PairDataset, PairInstance, TemporalDataset, TemporalTarget};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, PortableRng};
use crate::transforms::{AxisTransform, TransformKind};

/// Per-axis scale of the within-pair perturbation, relative to
/// `noise_sigma`.
pub const PAIR_JITTER: f64 = 0.1;

/// Graded golds of [`gen_planted_temporal`] are spread over
/// `[0, GOLD_SPAN)`; a gold is the period shift in units of
/// `signal_strength`.
pub const GOLD_SPAN: f64 = 3.0;

/// Parameters of a planted-axis fixture.
///
/// Signal axes sit at seeded positions among the `d` dimensions. Each item
/// (pair instance or temporal target) has a base vector with scale
/// `2 · signal_strength` on signal axes and `noise_sigma` elsewhere, which
/// gives signal axes the largest marginal variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub d: usize,
    pub n_signal_axes: usize,
    pub signal_strength: f64,
    pub noise_sigma: f64,
    /// Pair instances or temporal targets.
    pub n_items: usize,
    /// Temporal fixtures only: occurrences drawn per period.
    pub occurrences_per_period: usize,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("invalid planted spec: {m}")));
        if self.d == 0 {
            return bad("d must be positive");
        }
        if self.n_signal_axes == 0 || self.n_signal_axes > self.d {
            return bad("n_signal_axes must lie in 1..=d");
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be positive");
        }
        if !(self.signal_strength > self.noise_sigma && self.signal_strength.is_finite()) {
            return bad("signal_strength must exceed noise_sigma");
        }
        if self.n_items == 0 {
            return bad("n_items must be positive");
        }
        if self.occurrences_per_period == 0 {
            return bad("occurrences_per_period must be positive");
        }
        Ok(())
    }

    /// Positions of the planted signal axes, ascending.
    pub fn signal_axes(&self) -> Vec<usize> {
        let mut rng = PortableRng::new(derive_seed(self.seed, "signal-axes"));
        rng.sample_indices(self.d, self.n_signal_axes)
    }
}

fn unit_direction(rng: &mut PortableRng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn base_vector(rng: &mut PortableRng, spec: &PlantedSpec, is_signal: &[bool]) -> Vec<f64> {
    is_signal
        .iter()
        .map(|&s| {
            let scale = if s { 2.0 * spec.signal_strength } else { spec.noise_sigma };
            scale * rng.gaussian()
        })
        .collect()
}

fn signal_mask(spec: &PlantedSpec) -> (Vec<usize>, Vec<bool>) {
    let axes = spec.signal_axes();
    let mut mask = vec![false; spec.d];
    for &a in &axes {
        mask[a] = true;
    }
    (axes, mask)
}

/// WiC-style fixture. Even-numbered instances are True pairs whose two
/// occurrences differ only by jitter; odd-numbered instances are False
/// pairs whose second occurrence is also offset by `signal_strength` along a
/// random direction inside the signal block.
pub fn gen_planted_pairs(spec: &PlantedSpec) -> Result<(EmbeddingStore, PairDataset)> {
    spec.validate()?;
    let (axes, mask) = signal_mask(spec);
    let mut rng = PortableRng::new(derive_seed(spec.seed, "pairs"));
    let jitter = PAIR_JITTER * spec.noise_sigma;
    let mut ids = Vec::with_capacity(2 * spec.n_items);
    let mut data = Vec::with_capacity(2 * spec.n_items * spec.d);
    let mut instances = Vec::with_capacity(spec.n_items);
    for i in 0..spec.n_items {
        let label = i % 2 == 0;
        let base = base_vector(&mut rng, spec, &mask);
        let mut offset = vec![0.0; spec.d];
        if !label {
            for (&a, u) in axes.iter().zip(unit_direction(&mut rng, axes.len())) {
                offset[a] = spec.signal_strength * u;
            }
        }
        for (suffix, shift) in [("a", None), ("b", Some(&offset))] {
            for (j, b) in base.iter().enumerate() {
                let o = shift.map_or(0.0, |s| s[j]);
                data.push((b + o + jitter * rng.gaussian()) as f32);
            }
            ids.push(format!("p{i}{suffix}"));
        }
        instances.push(PairInstance {
            instance_id: format!("i{i}"),
            row_a: format!("p{i}a"),
            row_b: format!("p{i}b"),
            label,
        });
    }
    Ok((EmbeddingStore::new(spec.d, ids, data)?, PairDataset::new(instances)?))
}

/// Diachronic fixture with graded golds spread evenly over
/// `[0, GOLD_SPAN)`: target golds are a seeded permutation of
/// `GOLD_SPAN · (t + u_t) / n_targets`. A target is changed (binary gold)
/// when its graded gold is at least half the span.
pub fn gen_planted_temporal(spec: &PlantedSpec) -> Result<(EmbeddingStore, TemporalDataset)> {
    spec.validate()?;
    let mut rng = PortableRng::new(derive_seed(spec.seed, "golds"));
    let mut slots: Vec<usize> = (0..spec.n_items).collect();
    rng.shuffle(&mut slots);
    let golds: Vec<f64> = slots
        .iter()
        .map(|&s| GOLD_SPAN * (s as f64 + rng.uniform()) / spec.n_items as f64)
        .collect();
    gen_planted_temporal_with_golds(spec, &golds)
}

/// As [`gen_planted_temporal`] with explicit graded golds (one per target;
/// `spec.n_items` is ignored). Period-2 occurrences of target `t` are
/// shifted by `golds[t] · signal_strength` along a random signal-block
/// direction; every occurrence carries `noise_sigma` noise on every axis.
pub fn gen_planted_temporal_with_golds(
    spec: &PlantedSpec,
    golds: &[f64],
) -> Result<(EmbeddingStore, TemporalDataset)> {
    spec.validate()?;
    if golds.is_empty() || golds.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::InvalidArgument("golds must be finite and non-negative".into()));
    }
    let (axes, mask) = signal_mask(spec);
    let mut rng = PortableRng::new(derive_seed(spec.seed, "temporal"));
    let n_occ = spec.occurrences_per_period;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut targets = Vec::with_capacity(golds.len());
    for (t, &gold) in golds.iter().enumerate() {
        let base = base_vector(&mut rng, spec, &mask);
        let mut shift = vec![0.0; spec.d];
        for (&a, u) in axes.iter().zip(unit_direction(&mut rng, axes.len())) {
            shift[a] = gold * spec.signal_strength * u;
        }
        let mut periods = [Vec::with_capacity(n_occ), Vec::with_capacity(n_occ)];
        for (p, rows) in periods.iter_mut().enumerate() {
            for o in 0..n_occ {
                for (j, b) in base.iter().enumerate() {
                    let s = if p == 1 { shift[j] } else { 0.0 };
                    data.push((b + s + spec.noise_sigma * rng.gaussian()) as f32);
                }
                let id = format!("t{t}c{}o{o}", p + 1);
                rows.push(id.clone());
                ids.push(id);
            }
        }
        let [p1, p2] = periods;
        targets.push(TemporalTarget {
            lemma: format!("w{t}"),
            period1_rows: p1,
            period2_rows: p2,
            graded_gold: Some(gold),
            binary_gold: Some(gold >= 0.5 * GOLD_SPAN),
        });
    }
    Ok((EmbeddingStore::new(spec.d, ids, data)?, TemporalDataset::new(targets)?))
}

/// Non-Gaussian source families used by [`gen_ica_mixture`], each scaled to
/// zero mean and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Exponential, skewness 2.
    Exponential,
    /// Erlang with the given integer shape `k`, skewness `2 / sqrt(k)`.
    Erlang(u32),
    Uniform,
    Laplace,
    /// ±1 with equal probability.
    Rademacher,
    /// `sqrt(2) · sin(2πU)`.
    Arcsine,
}

impl SourceKind {
    /// Population skewness.
    pub fn skewness(self) -> f64 {
        match self {
            SourceKind::Exponential => 2.0,
            SourceKind::Erlang(k) => 2.0 / f64::from(k).sqrt(),
            _ => 0.0,
        }
    }

    pub fn sample(self, rng: &mut PortableRng) -> f64 {
        match self {
            SourceKind::Exponential => rng.exponential() - 1.0,
            SourceKind::Erlang(k) => {
                let sum: f64 = (0..k).map(|_| rng.exponential()).sum();
                (sum - f64::from(k)) / f64::from(k).sqrt()
            }
            SourceKind::Uniform => (rng.uniform() - 0.5) * 12f64.sqrt(),
            SourceKind::Laplace => {
                let e = rng.exponential();
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                sign * e / 2f64.sqrt()
            }
            SourceKind::Rademacher => {
                if rng.uniform() < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            SourceKind::Arcsine => 2f64.sqrt() * (2.0 * std::f64::consts::PI * rng.uniform()).sin(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaMixture {
    pub kinds: Vec<SourceKind>,
    /// `n × k` true sources.
    pub sources: DMatrix<f64>,
    /// `k × k` mixing matrix; `observed = sources · mixingᵀ`.
    pub mixing: DMatrix<f64>,
    pub observed: DMatrix<f64>,
}

/// A mixture of `n_sources` independent sources. The first source is always
/// exponential (the most skewed); the rest are a seeded selection of
/// less-skewed families. The mixing matrix is Gaussian, redrawn until its
/// condition number is below 50.
pub fn gen_ica_mixture(n: usize, n_sources: usize, seed: u64) -> Result<IcaMixture> {
    const POOL: [SourceKind; 7] = [
        SourceKind::Erlang(2),
        SourceKind::Uniform,
        SourceKind::Laplace,
        SourceKind::Rademacher,
        SourceKind::Arcsine,
        SourceKind::Erlang(4),
        SourceKind::Erlang(9),
    ];
    if n_sources == 0 || n_sources > POOL.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "n_sources must lie in 1..={}",
            POOL.len() + 1
        )));
    }
    let mut rng = PortableRng::new(seed);
    let mut pool = POOL.to_vec();
    rng.shuffle(&mut pool);
    let mut kinds = vec![SourceKind::Exponential];
    kinds.extend(pool.into_iter().take(n_sources - 1));

    let mut sources = DMatrix::zeros(n, n_sources);
    for r in 0..n {
        for (c, kind) in kinds.iter().enumerate() {
            sources[(r, c)] = kind.sample(&mut rng);
        }
    }
    let mixing = loop {
        let m = DMatrix::from_fn(n_sources, n_sources, |_, _| rng.gaussian());
        // Squared singular values are the eigenvalues of mᵀm.
        let ev = nalgebra::SymmetricEigen::new(m.transpose() * &m).eigenvalues;
        if ev.min() > 0.0 && (ev.max() / ev.min()).sqrt() < 50.0 {
            break m;
        }
    };
    let observed = &sources * mixing.transpose();
    Ok(IcaMixture {
        kinds,
        sources,
        mixing,
        observed,
    })
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// eigenvalues and eigenvectors (as columns), unsorted.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// PCA through the covariance matrix and a Jacobi eigensolver. Keeps all
/// `d` axes, sorted by explained-variance ratio, each signed so its
/// largest-magnitude entry is positive.
pub fn oracle_pca(x: &DMatrix<f64>) -> Result<AxisTransform> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..n {
        for a in 0..d {
            let da = x[(i, a)] - mean[a];
            for b in a..d {
                cov[a][b] += da * (x[(i, b)] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[a][b] /= n as f64;
            cov[b][a] = cov[a][b];
        }
    }
    let (vals, vecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    let mut components = DMatrix::zeros(d, d);
    for (r, &i) in order.iter().enumerate() {
        let col: Vec<f64> = (0..d).map(|k| vecs[k][i]).collect();
        let pivot = col.iter().copied().fold(0.0f64, |p, v| if v.abs() > p.abs() { v } else { p });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (c, v) in col.iter().enumerate() {
            components[(r, c)] = sign * v;
        }
    }
    Ok(AxisTransform {
        kind: TransformKind::Pca,
        mean,
        components,
        axis_scores: order.iter().map(|&i| vals[i].max(0.0) / total).collect(),
        fitted_on: n,
        seed: None,
        converged: None,
        n_iter: None,
    })
}

/// Sample skewness from explicit central-moment sums.
pub fn oracle_skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.iter().all(|v| *v == x[0]) {
        return 0.0;
    }
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Spearman's rho from an explicit rank table: each value's rank is the
/// number of strictly smaller values plus half the number of equal values
/// (itself included) plus one half.
pub fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank_table = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank_table(x), rank_table(y));
    let n = x.len() as f64;
    // Average ranks always have mean (n + 1) / 2.
    let mid = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mid) * (b - mid)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mid).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mid).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

/// Largest principal angle (radians) between the row spaces of `a` and `b`,
/// both with orthonormal rows, via `sin θ_max = ‖a - (a bᵀ) b‖₂`. The norm
/// is taken from the Jacobi spectrum of `r rᵀ`.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let r = a - (a * b.transpose()) * b;
    let g = &r * r.transpose();
    let rows = (0..g.nrows())
        .map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect())
        .collect();
    let (vals, _) = jacobi_eigen(rows);
    let top = vals.into_iter().fold(0.0f64, f64::max);
    top.sqrt().clamp(0.0, 1.0).asin()
}
