use std::path::Path;
use std::time::Instant;

use scd_axes_core::contextual::{diff_matrix, wic_distances, wic_roc};
use scd_axes_core::embedstore::{load_pairs, load_store, load_temporal, save_pairs, save_store, save_temporal};
use scd_axes_core::synthkit::{gen_planted_pairs, gen_planted_temporal, PlantedSpec};
use scd_axes_core::temporal::{
    change_scores, change_scores_at, cumulative_sweep, default_axis_grid, temporal_roc,
    ChangeScoreTable, MetricKind,
};
use scd_axes_core::transforms::{fit_ica, fit_pca, fit_raw, IcaConfig};
use scd_axes_core::{AxisTransform, TransformKind};

use crate::error::{CliError, CliResult};
use crate::report::{
    digest_file, digest_store, digest_transform, timings_path, write_json, write_text,
    FractionResult, InputDigest, RunReport, Timings, TOOL_VERSION,
};
use crate::{EvalTemporalArgs, EvalWicArgs, FitArgs, HeatmapArgs, Method, SynthArgs, SynthKind};

const HEATMAP_CELL: f64 = 8.0;

pub fn fit(a: &FitArgs) -> CliResult<()> {
    let store = load_store(&a.store)?;
    let rows: Vec<usize> = if let Some(p) = &a.pairs {
        load_pairs(p)?.referenced_rows(&store)?
    } else if let Some(t) = &a.temporal {
        load_temporal(t)?.referenced_rows(&store)?
    } else {
        (0..store.len()).collect()
    };
    let transform = match a.method {
        Method::Raw => fit_raw(store.dim()),
        Method::Pca => fit_pca(&store.matrix_of(&rows))?,
        Method::Ica => {
            let cfg = IcaConfig {
                max_iter: a.max_iter,
                tol: a.tol,
                seed: a.seed,
                n_components: a.n_components,
            };
            fit_ica(&store.matrix_of(&rows), &cfg)?
        }
    };
    transform.save(&a.out)?;
    if transform.converged == Some(false) {
        eprintln!(
            "warning: ICA stopped at max_iter={} before reaching tol={}",
            a.max_iter, a.tol
        );
    }
    println!("axis\tscore");
    for (i, s) in transform.axis_scores.iter().enumerate() {
        println!("{i}\t{s}");
    }
    Ok(())
}

fn emit_report(report: &RunReport, path: Option<&Path>, timings: &Timings) -> CliResult<()> {
    for (phase, secs) in &timings.phases {
        eprintln!("{phase}: {secs:.3}s");
    }
    match path {
        Some(p) => {
            write_json(p, report)?;
            write_json(&timings_path(p), timings)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
            Ok(())
        }
    }
}

fn budget_label(kind: TransformKind, fraction: f64) -> String {
    format!("{kind}_{fraction}")
}

pub fn eval_wic(a: &EvalWicArgs) -> CliResult<()> {
    let mut timings = Timings::default();
    let t0 = Instant::now();
    let store = load_store(&a.store)?;
    let pairs = load_pairs(&a.pairs)?;
    let transform = AxisTransform::load(&a.transform)?;
    pairs.check_against(&store)?;
    timings.record("load", t0.elapsed());

    let t1 = Instant::now();
    let raw = fit_raw(store.dim());
    let mut budgets = vec![(&raw, 1.0)];
    budgets.extend(a.fractions.iter().map(|&f| (&transform, f)));
    let mut results = Vec::with_capacity(budgets.len());
    for (t, f) in budgets {
        let roc = wic_roc(&wic_distances(&store, &pairs, t, f)?)?;
        if let Some(dir) = &a.roc_csv {
            let path = dir.join(format!("roc_{}.csv", budget_label(t.kind, f)));
            write_text(&path, &roc.to_csv())?;
        }
        results.push(FractionResult {
            transform: t.kind,
            fraction: f,
            n_axes: scd_axes_core::transforms::top_k_count(f, t.n_axes())?,
            auc: Some(roc.auc),
            spearman: None,
        });
    }
    timings.record("evaluate", t1.elapsed());

    let report = RunReport {
        tool_version: TOOL_VERSION,
        command: "eval-wic",
        inputs: vec![
            InputDigest { role: "store", sha256: digest_store(&a.store)? },
            InputDigest { role: "pairs", sha256: digest_file(&a.pairs)? },
            InputDigest { role: "transform", sha256: digest_transform(&a.transform)? },
        ],
        transform: (&transform).into(),
        n_items: pairs.len(),
        results,
        sweeps: Vec::new(),
    };
    emit_report(&report, a.report.as_deref(), &timings)
}

fn parse_cap(s: &str) -> CliResult<Option<usize>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Some(n)),
        _ => Err(CliError::Usage(format!("--cap must be a positive integer or `none`, got {s:?}"))),
    }
}

fn parse_grid(s: &str, m: usize) -> CliResult<Option<Vec<usize>>> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(Some(default_axis_grid(m))),
        "none" => Ok(None),
        list => list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad --sweep-grid entry {v:?}")))
            })
            .collect::<CliResult<Vec<_>>>()
            .map(Some),
    }
}

fn metrics_of(
    table: &ChangeScoreTable,
    graded: bool,
    binary: bool,
) -> CliResult<(Option<f64>, Option<f64>)> {
    let auc = if binary { Some(temporal_roc(table)?.auc) } else { None };
    let rho = if graded { Some(table.spearman()?) } else { None };
    Ok((auc, rho))
}

fn write_table(dir: &Path, table: &ChangeScoreTable) -> CliResult<()> {
    let stem = format!("scores_{}", budget_label(table.transform_kind, table.top_fraction));
    write_json(&dir.join(format!("{stem}.json")), table)?;
    write_text(&dir.join(format!("{stem}.csv")), &table.to_csv())
}

pub fn eval_temporal(a: &EvalTemporalArgs) -> CliResult<()> {
    let cap = parse_cap(&a.cap)?;
    let mut timings = Timings::default();
    let t0 = Instant::now();
    let store = load_store(&a.store)?;
    let data = load_temporal(&a.temporal)?;
    let transform = AxisTransform::load(&a.transform)?;
    data.check_against(&store)?;
    let grid = parse_grid(&a.sweep_grid, transform.n_axes())?;
    timings.record("load", t0.elapsed());

    let graded = data.targets().iter().any(|t| t.graded_gold.is_some());
    let binary = data.targets().iter().any(|t| t.binary_gold.is_some());

    let t1 = Instant::now();
    let raw_table = change_scores(&store, &data, &fit_raw(store.dim()), 1.0, cap, a.seed)?;
    let tables = change_scores_at(&store, &data, &transform, &a.fractions, cap, a.seed)?;
    let mut results = Vec::with_capacity(tables.len() + 1);
    for table in std::iter::once(&raw_table).chain(&tables) {
        let (auc, spearman) = metrics_of(table, graded, binary)?;
        results.push(FractionResult {
            transform: table.transform_kind,
            fraction: table.top_fraction,
            n_axes: table.n_axes,
            auc,
            spearman,
        });
        if let Some(dir) = &a.tables {
            write_table(dir, table)?;
        }
    }
    timings.record("scores", t1.elapsed());

    let t2 = Instant::now();
    let mut sweeps = Vec::new();
    if let Some(grid) = &grid {
        let kinds = [(graded, MetricKind::Spearman), (binary, MetricKind::Auc)];
        for (_, kind) in kinds.into_iter().filter(|(on, _)| *on) {
            sweeps.push(cumulative_sweep(&store, &data, &transform, grid, cap, a.seed, kind)?);
        }
    }
    if let Some(dir) = &a.tables {
        for s in &sweeps {
            let name = match s.metric_kind {
                MetricKind::Spearman => "sweep_spearman.csv",
                MetricKind::Auc => "sweep_auc.csv",
            };
            write_text(&dir.join(name), &s.to_csv())?;
        }
    }
    timings.record("sweep", t2.elapsed());

    let report = RunReport {
        tool_version: TOOL_VERSION,
        command: "eval-temporal",
        inputs: vec![
            InputDigest { role: "store", sha256: digest_store(&a.store)? },
            InputDigest { role: "temporal", sha256: digest_file(&a.temporal)? },
            InputDigest { role: "transform", sha256: digest_transform(&a.transform)? },
        ],
        transform: (&transform).into(),
        n_items: data.len(),
        results,
        sweeps,
    };
    emit_report(&report, a.report.as_deref(), &timings)
}

pub fn heatmap(a: &HeatmapArgs) -> CliResult<()> {
    let store = load_store(&a.store)?;
    let pairs = load_pairs(&a.pairs)?;
    let transform = AxisTransform::load(&a.transform)?;
    let m = diff_matrix(&store, &pairs, &transform, a.fraction, a.normalize, a.axes)?;
    if let Some(p) = &a.svg {
        write_text(p, &m.to_svg(HEATMAP_CELL, HEATMAP_CELL))?;
    }
    match &a.csv {
        Some(p) => write_text(p, &m.to_csv())?,
        None if a.svg.is_none() => print!("{}", m.to_csv()),
        None => {}
    }
    Ok(())
}

pub fn synth(a: &SynthArgs) -> CliResult<()> {
    let default_n = match a.kind {
        SynthKind::Pairs => 400,
        SynthKind::Temporal => 40,
    };
    let spec = PlantedSpec {
        d: a.d,
        n_signal_axes: a.signal_axes,
        signal_strength: a.strength,
        noise_sigma: a.sigma,
        n_items: a.n.unwrap_or(default_n),
        occurrences_per_period: a.occurrences,
        seed: a.seed,
    };
    match a.kind {
        SynthKind::Pairs => {
            let (store, pairs) = gen_planted_pairs(&spec)?;
            save_store(&store, a.out.join("store"))?;
            save_pairs(&pairs, a.out.join("pairs.jsonl"))?;
        }
        SynthKind::Temporal => {
            let (store, data) = gen_planted_temporal(&spec)?;
            save_store(&store, a.out.join("store"))?;
            save_temporal(&data, a.out.join("temporal.jsonl"))?;
        }
    }
    println!("signal axes: {:?}", spec.signal_axes());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_parsing() {
        assert_eq!(parse_cap("200").unwrap(), Some(200));
        assert_eq!(parse_cap("none").unwrap(), None);
        assert!(parse_cap("0").is_err());
        assert!(parse_cap("-3").is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("auto", 64).unwrap(), Some(vec![1, 3, 6, 13, 32, 64]));
        assert_eq!(parse_grid("none", 64).unwrap(), None);
        assert_eq!(parse_grid("1, 2,8", 64).unwrap(), Some(vec![1, 2, 8]));
        assert!(parse_grid("1,x", 64).is_err());
    }
}
