//! Pair-level (WiC-style) analysis: per-instance difference vectors on the
//! sorted axes, their heatmap, and distance-threshold ROC.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedstore::{EmbeddingStore, PairDataset};
use crate::error::Result;
use crate::metrics::{roc_from_scores, RocResult, Scored};
use crate::transforms::{top_k_count, AxisTransform};

pub const DEFAULT_DISPLAY_AXES: usize = 50;

/// Per-instance differences `proj(a) - proj(b)`, True-label rows first.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    pub instance_ids: Vec<String>,
    pub labels: Vec<bool>,
    /// Row-major, `instance_ids.len() × n_axes`.
    pub values: Vec<f64>,
    pub n_axes: usize,
    pub normalized: bool,
}

impl DiffMatrix {
    pub fn n_rows(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_axes + c]
    }

    /// Number of leading rows with a True label.
    pub fn n_true(&self) -> usize {
        self.labels.iter().take_while(|&&l| l).count()
    }

    /// Min-max scale every column to [0, 1]; constant columns become 0.
    pub fn normalize(&mut self) {
        let rows = self.n_rows();
        for c in 0..self.n_axes {
            let (lo, hi) = (0..rows).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                let v = self.get(r, c);
                (lo.min(v), hi.max(v))
            });
            let span = hi - lo;
            for r in 0..rows {
                let cell = &mut self.values[r * self.n_axes + c];
                *cell = if span > 0.0 { (*cell - lo) / span } else { 0.0 };
            }
        }
        self.normalized = true;
    }

    /// Header `instance_id,label,0,1,...` then one row per instance.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance_id,label");
        for c in 0..self.n_axes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for r in 0..self.n_rows() {
            let _ = write!(out, "{},{}", self.instance_ids[r], self.labels[r]);
            for c in 0..self.n_axes {
                let _ = write!(out, ",{}", self.get(r, c));
            }
            out.push('\n');
        }
        out
    }

    /// Self-contained grayscale heatmap: one rect per cell, a red rule
    /// between the True and False blocks. Unnormalized matrices are scaled
    /// by their global range for display.
    pub fn to_svg(&self, cell_w: f64, cell_h: f64) -> String {
        let (lo, hi) = if self.normalized {
            (0.0, 1.0)
        } else {
            self.values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let width = cell_w * self.n_axes as f64;
        let height = cell_h * self.n_rows() as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" shape-rendering="crispEdges">"#
        );
        for r in 0..self.n_rows() {
            for c in 0..self.n_axes {
                let v = ((self.get(r, c) - lo) / span).clamp(0.0, 1.0);
                let g = (v * 255.0).round() as u8;
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{cell_w}" height="{cell_h}" style="fill:rgb({g},{g},{g})"/>"#,
                    c as f64 * cell_w,
                    r as f64 * cell_h
                );
            }
        }
        let y = self.n_true() as f64 * cell_h;
        let _ = writeln!(
            out,
            r#"<line x1="0" y1="{y}" x2="{width}" y2="{y}" style="stroke:rgb(255,0,0);stroke-width:1"/>"#
        );
        out.push_str("</svg>\n");
        out
    }
}

/// Difference rows on the top `top_fraction` sorted axes, truncated to the
/// first `max_axes_displayed` columns and optionally min-max normalized.
pub fn diff_matrix(
    store: &EmbeddingStore,
    pairs: &PairDataset,
    transform: &AxisTransform,
    top_fraction: f64,
    normalize: bool,
    max_axes_displayed: usize,
) -> Result<DiffMatrix> {
    let k = top_k_count(top_fraction, transform.n_axes())?;
    let shown = k.min(max_axes_displayed.max(1));
    let resolved = pairs.resolve(store)?;
    let rows: Vec<usize> = resolved.iter().flat_map(|&(a, b)| [a, b]).collect();
    let proj = transform.project_store_rows(store, &rows, shown)?;

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    // Stable: True block first, dataset order within each block.
    order.sort_by_key(|&i| !pairs.instances()[i].label);

    let mut values = Vec::with_capacity(order.len() * shown);
    for &i in &order {
        let (a, b) = resolved[i];
        values.extend(proj.row(a).iter().zip(proj.row(b)).map(|(x, y)| x - y));
    }
    let mut m = DiffMatrix {
        instance_ids: order
            .iter()
            .map(|&i| pairs.instances()[i].instance_id.clone())
            .collect(),
        labels: order.iter().map(|&i| pairs.instances()[i].label).collect(),
        values,
        n_axes: shown,
        normalized: false,
    };
    if normalize {
        m.normalize();
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub instance_id: String,
    pub distance: f64,
    pub label: bool,
}

/// Euclidean distance between the two occurrences of every instance on the
/// top `top_fraction` sorted axes.
pub fn wic_distances(
    store: &EmbeddingStore,
    pairs: &PairDataset,
    transform: &AxisTransform,
    top_fraction: f64,
) -> Result<Vec<PairDistance>> {
    let k = top_k_count(top_fraction, transform.n_axes())?;
    wic_distances_on_axes(store, pairs, transform, k)
}

/// As [`wic_distances`] with an explicit axis count.
pub fn wic_distances_on_axes(
    store: &EmbeddingStore,
    pairs: &PairDataset,
    transform: &AxisTransform,
    k: usize,
) -> Result<Vec<PairDistance>> {
    let resolved = pairs.resolve(store)?;
    let rows: Vec<usize> = resolved.iter().flat_map(|&(a, b)| [a, b]).collect();
    let proj = transform.project_store_rows(store, &rows, k)?;
    Ok(resolved
        .par_iter()
        .zip(pairs.instances().par_iter())
        .map(|(&(a, b), inst)| PairDistance {
            instance_id: inst.instance_id.clone(),
            distance: euclidean(proj.row(a), proj.row(b)),
            label: inst.label,
        })
        .collect())
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// ROC with "same meaning" as the positive class, scored by `-distance`.
pub fn wic_roc(distances: &[PairDistance]) -> Result<RocResult> {
    let scores: Vec<Scored> = distances
        .iter()
        .map(|d| Scored::new(-d.distance, d.label))
        .collect();
    roc_from_scores(&scores)
}
