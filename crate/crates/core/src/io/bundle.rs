//! Bundle layout:
//!
//! ```text
//! schema.json
//! edges/<relation>.tsv     src<TAB>dst[<TAB>multiplicity]
//! features/<type>.csv      one comma-separated row per node
//! labels/<target>.tsv      node<TAB>class
//! splits.json              optional
//! ```
//!
//! Blank lines and lines starting with `#` are ignored in the text files.
//! Relations whose reverse is not listed get one on load.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};
use crate::graph::{ensure_valid, HetGraph, LabelSet, MetaPath, NodeType, NodeTypeId, Relation};
use crate::sparse::CsrMatrix;
use crate::train::Split;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaNodeType {
    pub name: String,
    pub code: char,
    pub count: usize,
    /// Zero for types without features.
    #[serde(default)]
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRelation {
    pub name: String,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub tau: f64,
    pub top_t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub format_version: u32,
    pub node_types: Vec<SchemaNodeType>,
    pub relations: Vec<SchemaRelation>,
    pub meta_paths: Vec<String>,
    pub target_type: String,
    pub num_classes: usize,
    pub defaults: Defaults,
}

/// A loaded graph with its declared meta-paths and defaults.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub graph: HetGraph,
    pub paths: Vec<MetaPath>,
    pub defaults: Defaults,
    pub splits: Option<Split>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LspiError::io(path, e))
}

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> LspiError {
    LspiError::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn schema_err(file: &Path, message: impl Into<String>) -> LspiError {
    LspiError::Schema {
        file: file.to_path_buf(),
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(file: &Path, line: usize, raw: Option<&str>, what: &str) -> Result<T> {
    let raw = raw.ok_or_else(|| parse_err(file, line, format!("missing {what}")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_err(file, line, format!("bad {what} `{raw}`")))
}

fn read_edges(file: &Path, rows: usize, cols: usize) -> Result<CsrMatrix<u64>> {
    let text = read(file)?;
    let mut triplets = Vec::new();
    for (ln, line) in data_lines(&text) {
        let mut it = line.split('\t');
        let s: usize = field(file, ln, it.next(), "source")?;
        let d: usize = field(file, ln, it.next(), "destination")?;
        let w: u64 = match it.next() {
            Some(raw) => field(file, ln, Some(raw), "multiplicity")?,
            None => 1,
        };
        if it.next().is_some() {
            return Err(parse_err(file, ln, "expected 2 or 3 tab-separated fields"));
        }
        if s >= rows || d >= cols {
            return Err(parse_err(
                file,
                ln,
                format!("edge ({s}, {d}) outside {rows} x {cols}"),
            ));
        }
        triplets.push((s, d, w));
    }
    CsrMatrix::from_triplets(rows, cols, triplets)
}

fn read_features(file: &Path, rows: usize, dim: usize) -> Result<Array2<f64>> {
    let text = read(file)?;
    let mut values = Vec::with_capacity(rows * dim);
    let mut count = 0;
    for (ln, line) in data_lines(&text) {
        let before = values.len();
        for raw in line.split(',') {
            values.push(field::<f64>(file, ln, Some(raw), "feature value")?);
        }
        if values.len() - before != dim {
            return Err(parse_err(file, ln, format!("expected {dim} values, found {}", values.len() - before)));
        }
        count += 1;
    }
    if count != rows {
        return Err(schema_err(file, format!("expected {rows} feature rows, found {count}")));
    }
    Ok(Array2::from_shape_vec((rows, dim), values).expect("row count and width checked"))
}

fn read_labels(file: &Path, rows: usize, num_classes: usize) -> Result<LabelSet> {
    let text = read(file)?;
    let mut labels = vec![None; rows];
    for (ln, line) in data_lines(&text) {
        let mut it = line.split('\t');
        let v: usize = field(file, ln, it.next(), "node")?;
        let c: usize = field(file, ln, it.next(), "class")?;
        if v >= rows {
            return Err(parse_err(file, ln, format!("node {v} outside [0, {rows})")));
        }
        if c >= num_classes {
            return Err(parse_err(file, ln, format!("class {c} outside [0, {num_classes})")));
        }
        if labels[v].replace(c).is_some() {
            return Err(parse_err(file, ln, format!("node {v} labeled twice")));
        }
    }
    LabelSet::new(labels, num_classes)
}

/// Loads and validates a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let schema_path = dir.join("schema.json");
    let schema: Schema = serde_json::from_str(&read(&schema_path)?)
        .map_err(|e| schema_err(&schema_path, e.to_string()))?;
    if schema.format_version != FORMAT_VERSION {
        return Err(LspiError::UnsupportedVersion {
            found: schema.format_version,
            supported: FORMAT_VERSION,
        });
    }
    let type_id = |name: &str| {
        schema
            .node_types
            .iter()
            .position(|t| t.name == name)
            .map(NodeTypeId)
            .ok_or_else(|| schema_err(&schema_path, format!("unknown node type `{name}`")))
    };
    let target = type_id(&schema.target_type)?;

    let node_types: Vec<NodeType> = schema
        .node_types
        .iter()
        .map(|t| NodeType {
            name: t.name.clone(),
            code: t.code,
            count: t.count,
        })
        .collect();
    let mut features = Vec::with_capacity(node_types.len());
    for t in &schema.node_types {
        features.push(if t.feature_dim > 0 {
            Some(read_features(&dir.join("features").join(format!("{}.csv", t.name)), t.count, t.feature_dim)?)
        } else {
            None
        });
    }
    let mut relations = Vec::with_capacity(schema.relations.len());
    for r in &schema.relations {
        let (src, dst) = (type_id(&r.src)?, type_id(&r.dst)?);
        let file = dir.join("edges").join(format!("{}.tsv", r.name));
        relations.push(Relation {
            name: r.name.clone(),
            src,
            dst,
            adj: read_edges(&file, node_types[src.0].count, node_types[dst.0].count)?,
        });
    }
    let target_count = node_types[target.0].count;
    let labels = read_labels(
        &dir.join("labels").join(format!("{}.tsv", schema.target_type)),
        target_count,
        schema.num_classes,
    )?;
    let mut graph = HetGraph {
        node_types,
        features,
        relations,
        labels,
        target,
    };
    graph.add_missing_reverses();
    ensure_valid(&graph)?;
    let paths = schema
        .meta_paths
        .iter()
        .map(|p| graph.parse_metapath(p))
        .collect::<Result<Vec<_>>>()?;

    let splits_path = dir.join("splits.json");
    let splits = if splits_path.exists() {
        let s: Split = serde_json::from_str(&read(&splits_path)?)
            .map_err(|e| schema_err(&splits_path, e.to_string()))?;
        s.check(&graph.labels)?;
        Some(s)
    } else {
        None
    };
    Ok(Bundle {
        graph,
        paths,
        defaults: schema.defaults,
        splits,
    })
}

fn write(path: PathBuf, text: String) -> Result<()> {
    fs::write(&path, text).map_err(|e| LspiError::io(path, e))
}

/// Writes `bundle` under `dir`. Relations that are the exact transpose of an
/// earlier one are left out, the loader recreates them.
pub fn write_bundle(bundle: &Bundle, dir: &Path) -> Result<()> {
    let g = &bundle.graph;
    for sub in ["edges", "features", "labels"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| LspiError::io(p, e))?;
    }
    let mut kept: Vec<&Relation> = Vec::new();
    for r in &g.relations {
        let is_reverse = kept
            .iter()
            .any(|k| k.src == r.dst && k.dst == r.src && k.adj.transpose() == r.adj);
        if !is_reverse {
            kept.push(r);
        }
    }
    let type_name = |id: NodeTypeId| g.node_types[id.0].name.clone();
    let schema = Schema {
        format_version: FORMAT_VERSION,
        node_types: g
            .node_types
            .iter()
            .zip(&g.features)
            .map(|(t, f)| SchemaNodeType {
                name: t.name.clone(),
                code: t.code,
                count: t.count,
                feature_dim: f.as_ref().map_or(0, |x| x.ncols()),
            })
            .collect(),
        relations: kept
            .iter()
            .map(|r| SchemaRelation {
                name: r.name.clone(),
                src: type_name(r.src),
                dst: type_name(r.dst),
            })
            .collect(),
        meta_paths: bundle.paths.iter().map(|p| p.name.clone()).collect(),
        target_type: type_name(g.target),
        num_classes: g.labels.num_classes(),
        defaults: bundle.defaults,
    };
    write(dir.join("schema.json"), serde_json::to_string_pretty(&schema)? + "\n")?;

    for r in kept {
        let mut text = String::new();
        for (s, d, w) in r.adj.iter() {
            if w == 1 {
                text.push_str(&format!("{s}\t{d}\n"));
            } else {
                text.push_str(&format!("{s}\t{d}\t{w}\n"));
            }
        }
        write(dir.join("edges").join(format!("{}.tsv", r.name)), text)?;
    }
    for (t, f) in g.node_types.iter().zip(&g.features) {
        let Some(x) = f else { continue };
        let mut text = String::new();
        for row in x.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        write(dir.join("features").join(format!("{}.csv", t.name)), text)?;
    }
    let mut text = String::new();
    for (v, c) in g.labels.labeled() {
        text.push_str(&format!("{v}\t{c}\n"));
    }
    write(dir.join("labels").join(format!("{}.tsv", type_name(g.target))), text)?;
    if let Some(s) = &bundle.splits {
        write(dir.join("splits.json"), serde_json::to_string_pretty(s)? + "\n")?;
    }
    Ok(())
}
