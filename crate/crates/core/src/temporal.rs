//! Corpus-level (diachronic) change detection: a target's change score is the
//! mean Euclidean distance over all cross-period occurrence pairs.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedstore::{EmbeddingStore, TemporalDataset, TemporalTarget};
use crate::error::{Error, Result};
use crate::metrics::{roc_from_scores, RocResult, Scored};
pub use crate::metrics::spearman_rho;
use crate::rng::{derive_seed, PortableRng};
use crate::transforms::{top_k_count, AxisTransform, Projected, TransformKind};

/// Default per-period occurrence cap.
pub const DEFAULT_CAP: usize = 200;

/// Fractions behind the default cumulative grid (0.1% to 100% of the axes).
const GRID_FRACTIONS: [f64; 10] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeScore {
    pub score: f64,
    pub n_pairs_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeScoreEntry {
    pub lemma: String,
    pub score: f64,
    pub n_pairs_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graded_gold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_gold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeScoreTable {
    pub entries: Vec<ChangeScoreEntry>,
    pub transform_kind: TransformKind,
    pub top_fraction: f64,
    pub n_axes: usize,
}

impl ChangeScoreTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lemma,score,n_pairs_used,graded_gold,binary_gold\n");
        for e in &self.entries {
            let graded = e.graded_gold.map(|g| g.to_string()).unwrap_or_default();
            let binary = e.binary_gold.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{graded},{binary}", e.lemma, e.score, e.n_pairs_used);
        }
        out
    }

    /// Spearman correlation between scores and graded golds, over the
    /// targets that carry a graded gold.
    pub fn spearman(&self) -> Result<f64> {
        let (scores, golds): (Vec<f64>, Vec<f64>) = self
            .entries
            .iter()
            .filter_map(|e| e.graded_gold.map(|g| (e.score, g)))
            .unzip();
        if scores.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "Spearman evaluation needs at least 3 targets with graded_gold, got {}",
                scores.len()
            )));
        }
        spearman_rho(&scores, &golds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Spearman,
    Auc,
}

/// A metric evaluated on cumulatively larger prefixes of the sorted axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_counts: Vec<usize>,
    pub metric_values: Vec<f64>,
    pub metric_kind: MetricKind,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let name = match self.metric_kind {
            MetricKind::Spearman => "spearman",
            MetricKind::Auc => "auc",
        };
        let mut out = format!("axes,{name}\n");
        for (k, v) in self.axis_counts.iter().zip(&self.metric_values) {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

/// Default cumulative grid for `m` axes: 0.1% … 100% of the axes, rounded
/// to the nearest count (at least 1), de-duplicated. For `m = 1024` this is
/// `1, 2, 5, 10, 20, 51, 102, 205, 512, 1024`.
pub fn default_axis_grid(m: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = GRID_FRACTIONS
        .iter()
        .map(|f| ((f * m as f64).round() as usize).clamp(1, m.max(1)))
        .collect();
    grid.dedup();
    grid
}

fn check_grid(grid: &[usize], m: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("axis grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "axis grid must be strictly increasing, got {grid:?}"
        )));
    }
    if grid[0] == 0 || grid[grid.len() - 1] > m {
        return Err(Error::InvalidArgument(format!(
            "axis grid values must lie in 1..={m}, got {grid:?}"
        )));
    }
    Ok(())
}

/// The occurrence rows of each period actually used for `target`: all of
/// them below the cap, otherwise a uniform sample of `cap` rows drawn from a
/// stream keyed by `(seed, lemma)`.
fn occurrence_sample(
    lemma: &str,
    p1: Vec<usize>,
    p2: Vec<usize>,
    cap: Option<usize>,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let Some(cap) = cap else {
        return Ok((p1, p2));
    };
    if cap == 0 {
        return Err(Error::InvalidArgument("occurrence cap must be positive".into()));
    }
    let mut rng = PortableRng::new(derive_seed(seed, lemma));
    let mut take = |rows: Vec<usize>| {
        if rows.len() <= cap {
            rows
        } else {
            rng.sample_indices(rows.len(), cap)
                .into_iter()
                .map(|i| rows[i])
                .collect()
        }
    };
    let s1 = take(p1);
    let s2 = take(p2);
    Ok((s1, s2))
}

fn resolve_rows(store: &EmbeddingStore, target: &TemporalTarget, line: Option<usize>) -> Result<(Vec<usize>, Vec<usize>)> {
    if target.period1_rows.is_empty() || target.period2_rows.is_empty() {
        return Err(Error::EmptyPeriod {
            lemma: target.lemma.clone(),
            line,
        });
    }
    let map = |ids: &[String]| -> Result<Vec<usize>> {
        ids.iter().map(|id| store.resolve(id, line)).collect()
    };
    Ok((map(&target.period1_rows)?, map(&target.period2_rows)?))
}

/// Mean cross-period distance at each prefix length in `grid`.
fn cumulative_mean_distances(proj: &Projected, s1: &[usize], s2: &[usize], grid: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; grid.len()];
    for &u in s1 {
        let pu = proj.row(u);
        for &v in s2 {
            let pv = proj.row(v);
            let mut acc = 0.0;
            let mut start = 0;
            for (g, &end) in grid.iter().enumerate() {
                for a in start..end {
                    let diff = pu[a] - pv[a];
                    acc += diff * diff;
                }
                sums[g] += acc.sqrt();
                start = end;
            }
        }
    }
    let pairs = (s1.len() * s2.len()) as f64;
    sums.into_iter().map(|s| s / pairs).collect()
}

/// Change score of one target on the top `top_fraction` sorted axes.
pub fn change_score(
    store: &EmbeddingStore,
    target: &TemporalTarget,
    transform: &AxisTransform,
    top_fraction: f64,
    cap: Option<usize>,
    seed: u64,
) -> Result<ChangeScore> {
    let k = top_k_count(top_fraction, transform.n_axes())?;
    let (p1, p2) = resolve_rows(store, target, None)?;
    let (s1, s2) = occurrence_sample(&target.lemma, p1, p2, cap, seed)?;
    let rows: Vec<usize> = s1.iter().chain(&s2).copied().collect();
    let proj = transform.project_store_rows(store, &rows, k)?;
    Ok(ChangeScore {
        score: cumulative_mean_distances(&proj, &s1, &s2, &[k])[0],
        n_pairs_used: s1.len() * s2.len(),
    })
}

/// Per-target scores for every prefix length in `grid`; one row per target.
fn score_grid(
    store: &EmbeddingStore,
    data: &TemporalDataset,
    transform: &AxisTransform,
    grid: &[usize],
    cap: Option<usize>,
    seed: u64,
) -> Result<Vec<(Vec<f64>, usize)>> {
    let samples: Vec<(Vec<usize>, Vec<usize>)> = data
        .targets()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (p1, p2) = resolve_rows(store, t, Some(data.line_of(i)))?;
            occurrence_sample(&t.lemma, p1, p2, cap, seed)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = samples
        .iter()
        .flat_map(|(a, b)| a.iter().chain(b).copied())
        .collect();
    let widest = *grid.last().expect("grid checked non-empty");
    let proj = transform.project_store_rows(store, &rows, widest)?;
    Ok(samples
        .par_iter()
        .map(|(s1, s2)| {
            (
                cumulative_mean_distances(&proj, s1, s2, grid),
                s1.len() * s2.len(),
            )
        })
        .collect())
}

fn table_from(
    data: &TemporalDataset,
    transform: &AxisTransform,
    top_fraction: f64,
    n_axes: usize,
    scores: impl Iterator<Item = (f64, usize)>,
) -> ChangeScoreTable {
    ChangeScoreTable {
        entries: data
            .targets()
            .iter()
            .zip(scores)
            .map(|(t, (score, n_pairs_used))| ChangeScoreEntry {
                lemma: t.lemma.clone(),
                score,
                n_pairs_used,
                graded_gold: t.graded_gold,
                binary_gold: t.binary_gold,
            })
            .collect(),
        transform_kind: transform.kind,
        top_fraction,
        n_axes,
    }
}

/// Change scores for every target on the top `top_fraction` sorted axes.
pub fn change_scores(
    store: &EmbeddingStore,
    data: &TemporalDataset,
    transform: &AxisTransform,
    top_fraction: f64,
    cap: Option<usize>,
    seed: u64,
) -> Result<ChangeScoreTable> {
    let k = top_k_count(top_fraction, transform.n_axes())?;
    let rows = score_grid(store, data, transform, &[k], cap, seed)?;
    Ok(table_from(
        data,
        transform,
        top_fraction,
        k,
        rows.into_iter().map(|(s, n)| (s[0], n)),
    ))
}

/// Change scores at several fractions, sharing one projection and sample.
pub fn change_scores_at(
    store: &EmbeddingStore,
    data: &TemporalDataset,
    transform: &AxisTransform,
    fractions: &[f64],
    cap: Option<usize>,
    seed: u64,
) -> Result<Vec<ChangeScoreTable>> {
    let counts = fractions
        .iter()
        .map(|&f| top_k_count(f, transform.n_axes()))
        .collect::<Result<Vec<_>>>()?;
    let mut grid = counts.clone();
    grid.sort_unstable();
    grid.dedup();
    let rows = score_grid(store, data, transform, &grid, cap, seed)?;
    Ok(fractions
        .iter()
        .zip(&counts)
        .map(|(&f, &k)| {
            let g = grid.binary_search(&k).expect("count is on the grid");
            table_from(data, transform, f, k, rows.iter().map(|(s, n)| (s[g], *n)))
        })
        .collect())
}

/// ROC with "changed" as the positive class, scored by the change score.
/// Targets without a binary gold are skipped.
pub fn temporal_roc(table: &ChangeScoreTable) -> Result<RocResult> {
    let scores: Vec<Scored> = table
        .entries
        .iter()
        .filter_map(|e| e.binary_gold.map(|b| Scored::new(e.score, b)))
        .collect();
    roc_from_scores(&scores)
}

/// Recompute all change scores on the first `j` sorted axes for each `j` in
/// `axis_grid` and report the chosen metric against the gold labels.
pub fn cumulative_sweep(
    store: &EmbeddingStore,
    data: &TemporalDataset,
    transform: &AxisTransform,
    axis_grid: &[usize],
    cap: Option<usize>,
    seed: u64,
    metric_kind: MetricKind,
) -> Result<SweepResult> {
    check_grid(axis_grid, transform.n_axes())?;
    let rows = score_grid(store, data, transform, axis_grid, cap, seed)?;
    let metric_values = (0..axis_grid.len())
        .map(|g| {
            let table = table_from(
                data,
                transform,
                axis_grid[g] as f64 / transform.n_axes() as f64,
                axis_grid[g],
                rows.iter().map(|(s, n)| (s[g], *n)),
            );
            match metric_kind {
                MetricKind::Spearman => table.spearman(),
                MetricKind::Auc => temporal_roc(&table).map(|r| r.auc),
            }
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        axis_counts: axis_grid.to_vec(),
        metric_values,
        metric_kind,
    })
}

/// Spearman correlation against graded golds along a cumulative axis grid.
pub fn spearman_sweep(
    store: &EmbeddingStore,
    data: &TemporalDataset,
    transform: &AxisTransform,
    axis_grid: &[usize],
    cap: Option<usize>,
    seed: u64,
) -> Result<SweepResult> {
    cumulative_sweep(store, data, transform, axis_grid, cap, seed, MetricKind::Spearman)
}
