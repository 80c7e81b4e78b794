//! On-disk embedding stores and the two evaluation dataset formats.
//!
//! A store directory holds `meta.json` plus `embeddings.f32`, a headerless
//! row-major run of little-endian binary32 values. Small hand-written
//! fixtures may instead use a CSV file (`id,v0,...,v{d-1}`).
//!
//! Pair and temporal datasets are JSONL files that reference store rows by
//! occurrence id. References are resolved against a store by the evaluators,
//! or eagerly through [`PairDataset::check_against`] /
//! [`TemporalDataset::check_against`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const DATA_FILE: &str = "embeddings.f32";

/// Largest row count accepted by the CSV fallback format.
pub const CSV_MAX_ROWS: usize = 10_000;

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub dim: usize,
    pub count: usize,
    pub row_ids: Vec<String>,
    pub dtype: String,
    pub layout: String,
}

/// Row-major matrix of occurrence embeddings keyed by occurrence id.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    row_ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.row_ids == other.row_ids
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingStore {
    /// Build a validated store from row ids and a row-major payload.
    pub fn new(dim: usize, row_ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("store dim must be positive".into()));
        }
        let expected = row_ids.len() * dim;
        if data.len() != expected {
            return Err(Error::ByteLength {
                expected: expected * 4,
                actual: data.len() * 4,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        let mut index = HashMap::with_capacity(row_ids.len());
        for (i, id) in row_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            dim,
            row_ids,
            data,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    /// Raw row-major payload.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index_of(id).map(|i| self.row(i))
    }

    pub(crate) fn resolve(&self, id: &str, line: Option<usize>) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::DanglingId {
            id: id.to_string(),
            line,
        })
    }

    /// Selected rows widened to 64-bit, in the given order.
    pub fn matrix_of(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.dim, |r, c| {
            f64::from(self.data[rows[r] * self.dim + c])
        })
    }

    /// The whole store widened to 64-bit.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.matrix_of(&all)
    }

    pub fn meta(&self) -> StoreMeta {
        StoreMeta {
            dim: self.dim,
            count: self.len(),
            row_ids: self.row_ids.clone(),
            dtype: "f32le".into(),
            layout: "row-major".into(),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Load a store from a directory (`meta.json` + `embeddings.f32`) or from a
/// `.csv` file.
pub fn load_store(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    if path.is_file() {
        return load_csv(path);
    }
    let meta_path = path.join(META_FILE);
    let meta: StoreMeta = serde_json::from_str(&read_string(&meta_path)?).map_err(|e| Error::Json {
        path: meta_path.clone(),
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    if meta.dtype != "f32le" {
        return Err(format_err(&meta_path, None, format!("unsupported dtype {:?}", meta.dtype)));
    }
    if meta.layout != "row-major" {
        return Err(format_err(&meta_path, None, format!("unsupported layout {:?}", meta.layout)));
    }
    if meta.row_ids.len() != meta.count {
        return Err(format_err(
            &meta_path,
            None,
            format!("count is {} but {} row_ids are listed", meta.count, meta.row_ids.len()),
        ));
    }
    let bytes = read_bytes(&path.join(DATA_FILE))?;
    let expected = meta.count * meta.dim * 4;
    if bytes.len() != expected {
        return Err(Error::ByteLength {
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    EmbeddingStore::new(meta.dim, meta.row_ids, data)
}

/// Write a store directory. Existing files are overwritten.
pub fn save_store(store: &EmbeddingStore, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = serde_json::to_string_pretty(&store.meta()).expect("store meta serializes");
    let meta_path = dir.join(META_FILE);
    fs::write(&meta_path, meta + "\n").map_err(|e| Error::io(&meta_path, e))?;
    let mut bytes = Vec::with_capacity(store.data.len() * 4);
    for v in &store.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let data_path = dir.join(DATA_FILE);
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))
}

/// Load the CSV fallback format.
pub fn load_csv(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let text = read_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, Some(1), "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"id") || cols.len() < 2 {
        return Err(format_err(path, Some(1), "header must be id,v0,...,v{d-1}"));
    }
    for (j, c) in cols[1..].iter().enumerate() {
        if *c != format!("v{j}") {
            return Err(format_err(path, Some(1), format!("expected column v{j}, found {c:?}")));
        }
    }
    let dim = cols.len() - 1;
    let mut row_ids = Vec::new();
    let mut data = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(format_err(
                path,
                Some(lineno),
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        row_ids.push(fields[0].to_string());
        for f in &fields[1..] {
            let v: f32 = f
                .parse()
                .map_err(|_| format_err(path, Some(lineno), format!("bad float {f:?}")))?;
            data.push(v);
        }
        if row_ids.len() > CSV_MAX_ROWS {
            return Err(format_err(
                path,
                Some(lineno),
                format!("CSV stores are limited to {CSV_MAX_ROWS} rows"),
            ));
        }
    }
    EmbeddingStore::new(dim, row_ids, data)
}

/// Write the CSV fallback format. Floats use the shortest representation
/// that parses back to the same bits.
pub fn save_csv(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if store.len() > CSV_MAX_ROWS {
        return Err(Error::InvalidArgument(format!(
            "CSV stores are limited to {CSV_MAX_ROWS} rows"
        )));
    }
    if let Some(bad) = store
        .row_ids
        .iter()
        .find(|id| id.contains([',', '\n', '\r']) || id.trim() != id.as_str())
    {
        return Err(Error::InvalidArgument(format!(
            "occurrence id {bad:?} cannot be written to CSV"
        )));
    }
    let mut out = String::from("id");
    for j in 0..store.dim {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for (i, id) in store.row_ids.iter().enumerate() {
        out.push_str(id);
        for v in store.row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// One WiC-style instance: two occurrences of the same target word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInstance {
    pub instance_id: String,
    pub row_a: String,
    pub row_b: String,
    /// `true` when the target has the same meaning in both occurrences.
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    instances: Vec<PairInstance>,
    lines: Vec<usize>,
}

impl PairDataset {
    pub fn new(instances: Vec<PairInstance>) -> Result<Self> {
        let lines = (1..=instances.len()).collect();
        Self::with_lines(instances, lines)
    }

    fn with_lines(instances: Vec<PairInstance>, lines: Vec<usize>) -> Result<Self> {
        for (inst, line) in instances.iter().zip(&lines) {
            if inst.row_a == inst.row_b {
                return Err(Error::InvalidArgument(format!(
                    "instance {:?} (line {line}) pairs occurrence {:?} with itself",
                    inst.instance_id, inst.row_a
                )));
            }
        }
        Ok(Self { instances, lines })
    }

    pub fn instances(&self) -> &[PairInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Source line of instance `i` (1-based).
    pub fn line_of(&self, i: usize) -> usize {
        self.lines[i]
    }

    /// Resolve every occurrence id to a store row, as `(row_a, row_b)`.
    pub fn resolve(&self, store: &EmbeddingStore) -> Result<Vec<(usize, usize)>> {
        self.instances
            .iter()
            .zip(&self.lines)
            .map(|(inst, &line)| {
                Ok((
                    store.resolve(&inst.row_a, Some(line))?,
                    store.resolve(&inst.row_b, Some(line))?,
                ))
            })
            .collect()
    }

    pub fn check_against(&self, store: &EmbeddingStore) -> Result<()> {
        self.resolve(store).map(|_| ())
    }

    /// Sorted, de-duplicated store rows referenced by any instance.
    pub fn referenced_rows(&self, store: &EmbeddingStore) -> Result<Vec<usize>> {
        let set: BTreeSet<usize> = self
            .resolve(store)?
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect();
        Ok(set.into_iter().collect())
    }

    pub fn has_both_classes(&self) -> bool {
        self.instances.iter().any(|i| i.label) && self.instances.iter().any(|i| !i.label)
    }
}

/// One target word with its occurrences in the two corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalTarget {
    pub lemma: String,
    pub period1_rows: Vec<String>,
    pub period2_rows: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graded_gold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary_gold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDataset {
    targets: Vec<TemporalTarget>,
    lines: Vec<usize>,
}

impl TemporalDataset {
    pub fn new(targets: Vec<TemporalTarget>) -> Result<Self> {
        let lines = (1..=targets.len()).collect();
        Self::with_lines(targets, lines)
    }

    fn with_lines(targets: Vec<TemporalTarget>, lines: Vec<usize>) -> Result<Self> {
        for (t, &line) in targets.iter().zip(&lines) {
            if t.period1_rows.is_empty() || t.period2_rows.is_empty() {
                return Err(Error::EmptyPeriod {
                    lemma: t.lemma.clone(),
                    line: Some(line),
                });
            }
            let p1: HashSet<&str> = t.period1_rows.iter().map(String::as_str).collect();
            if let Some(shared) = t.period2_rows.iter().find(|id| p1.contains(id.as_str())) {
                return Err(Error::InvalidArgument(format!(
                    "target {:?} (line {line}) lists occurrence {shared:?} in both periods",
                    t.lemma
                )));
            }
            if let Some(g) = t.graded_gold {
                if !g.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "target {:?} (line {line}) has non-finite graded_gold",
                        t.lemma
                    )));
                }
            }
        }
        Ok(Self { targets, lines })
    }

    pub fn targets(&self) -> &[TemporalTarget] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn line_of(&self, i: usize) -> usize {
        self.lines[i]
    }

    /// Resolve target `i` to `(period1 rows, period2 rows)`.
    pub fn resolve_target(
        &self,
        store: &EmbeddingStore,
        i: usize,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        let t = &self.targets[i];
        let line = Some(self.lines[i]);
        let p1 = t
            .period1_rows
            .iter()
            .map(|id| store.resolve(id, line))
            .collect::<Result<_>>()?;
        let p2 = t
            .period2_rows
            .iter()
            .map(|id| store.resolve(id, line))
            .collect::<Result<_>>()?;
        Ok((p1, p2))
    }

    pub fn check_against(&self, store: &EmbeddingStore) -> Result<()> {
        (0..self.len()).try_for_each(|i| self.resolve_target(store, i).map(|_| ()))
    }

    /// Sorted, de-duplicated store rows referenced by any target.
    pub fn referenced_rows(&self, store: &EmbeddingStore) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for i in 0..self.len() {
            let (p1, p2) = self.resolve_target(store, i)?;
            set.extend(p1);
            set.extend(p2);
        }
        Ok(set.into_iter().collect())
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Vec<T>, Vec<usize>)> {
    let text = read_string(path)?;
    let mut items = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            line: Some(i + 1),
            message: e.to_string(),
        })?;
        items.push(item);
        lines.push(i + 1);
    }
    Ok((items, lines))
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("dataset rows serialize");
        out.write_all(b"\n").expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<PairDataset> {
    let path = path.as_ref();
    let (instances, lines) = read_jsonl(path)?;
    PairDataset::with_lines(instances, lines)
}

pub fn save_pairs(pairs: &PairDataset, path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(&pairs.instances, path.as_ref())
}

pub fn load_temporal(path: impl AsRef<Path>) -> Result<TemporalDataset> {
    let path = path.as_ref();
    let (targets, lines) = read_jsonl(path)?;
    TemporalDataset::with_lines(targets, lines)
}

pub fn save_temporal(data: &TemporalDataset, path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(&data.targets, path.as_ref())
}
