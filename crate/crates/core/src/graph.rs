//! Heterogeneous graph: typed node sets, per-type features, per-relation
//! sparse adjacencies and partial labels on the target type.

use std::collections::HashSet;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeTypeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct NodeType {
    pub name: String,
    /// Single-letter code used in meta-path strings such as `PAP`.
    pub code: char,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub name: String,
    pub src: NodeTypeId,
    pub dst: NodeTypeId,
    /// Edge multiplicities, shape `(count[src], count[dst])`.
    pub adj: CsrMatrix<u64>,
}

/// Partial class labels over target-type nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl LabelSet {
    pub fn new(labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(LspiError::InvalidParameter(format!(
                "num_classes must be at least 2, got {num_classes}"
            )));
        }
        if let Some((v, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(v, l)| l.filter(|&c| c >= num_classes).map(|c| (v, c)))
        {
            return Err(LspiError::InvalidParameter(format!(
                "node {v} has class {c}, outside [0, {num_classes})"
            )));
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    /// Labels every node; convenience for fully supervised data.
    pub fn dense(labels: &[usize], num_classes: usize) -> Result<Self> {
        Self::new(labels.iter().copied().map(Some).collect(), num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.labels.get(node).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(Option::is_some).collect()
    }

    pub fn labeled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(v, l)| l.map(|c| (v, c)))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for (_, c) in self.labeled() {
            counts[c] += 1;
        }
        counts
    }

    /// Keeps the labels of `kept` nodes, in the given order.
    pub fn select(&self, kept: &[usize]) -> Self {
        Self {
            labels: kept.iter().map(|&v| self.labels[v]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// A typed sequence of relations from the target type back to itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetaPath {
    pub name: String,
    pub relations: Vec<RelationId>,
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl MetaPath {
    /// Checks type chaining and that both endpoints are the target type.
    pub fn check(&self, g: &HetGraph) -> Result<()> {
        let fail = |step: usize, reason: String| LspiError::Composition {
            path: self.name.clone(),
            step,
            reason,
        };
        if self.relations.is_empty() {
            return Err(fail(0, "meta-path has no relations".into()));
        }
        let mut at = g.target;
        for (step, &rid) in self.relations.iter().enumerate() {
            let rel = g.relations.get(rid.0).ok_or_else(|| {
                fail(step, format!("unknown relation id {}", rid.0))
            })?;
            if rel.src != at {
                return Err(fail(
                    step,
                    format!(
                        "relation `{}` starts at `{}` but the chain is at `{}`",
                        rel.name,
                        g.node_types[rel.src.0].name,
                        g.node_types[at.0].name
                    ),
                ));
            }
            at = rel.dst;
        }
        if at != g.target {
            return Err(fail(
                self.relations.len() - 1,
                format!(
                    "path ends at `{}`, not the target type `{}`",
                    g.node_types[at.0].name,
                    g.node_types[g.target.0].name
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HetGraph {
    pub node_types: Vec<NodeType>,
    /// Indexed by `NodeTypeId`; types without attributes hold `None`.
    pub features: Vec<Option<Array2<f64>>>,
    pub relations: Vec<Relation>,
    pub labels: LabelSet,
    pub target: NodeTypeId,
}

/// One broken graph invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateTypeName(String),
    DuplicateTypeCode(char),
    DuplicateRelationName(String),
    UnknownEndpoint { relation: String },
    Shape {
        relation: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    MissingReverse { relation: String },
    NotHeterogeneous { types: usize, relations: usize },
    UnknownTarget,
    FeatureRows {
        node_type: String,
        expected: usize,
        actual: usize,
    },
    MissingTargetFeatures,
    LabelCount { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateTypeName(n) => write!(f, "node type name `{n}` is not unique"),
            Violation::DuplicateTypeCode(c) => write!(f, "node type code `{c}` is not unique"),
            Violation::DuplicateRelationName(n) => write!(f, "relation name `{n}` is not unique"),
            Violation::UnknownEndpoint { relation } => {
                write!(f, "relation `{relation}` references an unknown node type")
            }
            Violation::Shape {
                relation,
                expected,
                actual,
            } => write!(
                f,
                "relation `{relation}` adjacency has shape {actual:?}, expected {expected:?}"
            ),
            Violation::MissingReverse { relation } => {
                write!(f, "relation `{relation}` has no reverse relation with the transposed adjacency")
            }
            Violation::NotHeterogeneous { types, relations } => write!(
                f,
                "graph is not heterogeneous: {types} node types + {relations} relations = {} (need > 2)",
                types + relations
            ),
            Violation::UnknownTarget => write!(f, "target type is not a node type of the graph"),
            Violation::FeatureRows {
                node_type,
                expected,
                actual,
            } => write!(
                f,
                "features of `{node_type}` have {actual} rows, expected {expected}"
            ),
            Violation::MissingTargetFeatures => write!(f, "target type has no feature matrix"),
            Violation::LabelCount { expected, actual } => {
                write!(f, "label vector has {actual} entries, expected {expected}")
            }
        }
    }
}

impl HetGraph {
    pub fn target_count(&self) -> usize {
        self.node_types[self.target.0].count
    }

    pub fn target_features(&self) -> Option<&Array2<f64>> {
        self.features.get(self.target.0).and_then(Option::as_ref)
    }

    pub fn relation(&self, r: RelationId) -> Result<&Relation> {
        self.relations.get(r.0).ok_or(LspiError::UnknownRelation(r.0))
    }

    pub fn type_by_code(&self, code: char) -> Option<NodeTypeId> {
        self.node_types
            .iter()
            .position(|t| t.code == code)
            .map(NodeTypeId)
    }

    pub fn type_by_name(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types
            .iter()
            .position(|t| t.name == name)
            .map(NodeTypeId)
    }

    pub fn relation_by_name(&self, name: &str) -> Option<RelationId> {
        self.relations
            .iter()
            .position(|r| r.name == name)
            .map(RelationId)
    }

    /// Adds a transposed relation for every relation whose reverse is absent.
    /// Reverse names swap the two halves of `X-Y` names, or append `^-1`.
    pub fn add_missing_reverses(&mut self) {
        let mut added = Vec::new();
        for rel in &self.relations {
            let t = rel.adj.transpose();
            let has_reverse = self
                .relations
                .iter()
                .chain(added.iter())
                .any(|o: &Relation| o.src == rel.dst && o.dst == rel.src && o.adj == t);
            if !has_reverse {
                added.push(Relation {
                    name: reverse_name(&rel.name),
                    src: rel.dst,
                    dst: rel.src,
                    adj: t,
                });
            }
        }
        self.relations.extend(added);
    }

    /// Resolves a meta-path string of type codes (`"PAP"`) against the graph.
    /// Each hop must match exactly one relation between the two types.
    pub fn parse_metapath(&self, spec: &str) -> Result<MetaPath> {
        let codes: Vec<char> = spec.trim().chars().collect();
        let fail = |step: usize, reason: String| LspiError::Composition {
            path: spec.to_string(),
            step,
            reason,
        };
        if codes.len() < 2 {
            return Err(fail(0, "a meta-path needs at least two type codes".into()));
        }
        let mut relations = Vec::with_capacity(codes.len() - 1);
        for (step, pair) in codes.windows(2).enumerate() {
            let src = self
                .type_by_code(pair[0])
                .ok_or_else(|| fail(step, format!("unknown type code `{}`", pair[0])))?;
            let dst = self
                .type_by_code(pair[1])
                .ok_or_else(|| fail(step, format!("unknown type code `{}`", pair[1])))?;
            let matches: Vec<usize> = self
                .relations
                .iter()
                .enumerate()
                .filter(|(_, r)| r.src == src && r.dst == dst)
                .map(|(i, _)| i)
                .collect();
            match matches.as_slice() {
                [only] => relations.push(RelationId(*only)),
                [] => {
                    return Err(fail(
                        step,
                        format!("no relation from `{}` to `{}`", pair[0], pair[1]),
                    ))
                }
                _ => {
                    return Err(fail(
                        step,
                        format!("ambiguous: several relations from `{}` to `{}`", pair[0], pair[1]),
                    ))
                }
            }
        }
        let path = MetaPath {
            name: spec.trim().to_string(),
            relations,
        };
        path.check(self)?;
        Ok(path)
    }
}

fn reverse_name(name: &str) -> String {
    match name.split_once('-') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains('-') => format!("{b}-{a}"),
        _ => format!("{name}^-1"),
    }
}

/// Lists every broken invariant of `g`; empty means the graph is well formed.
pub fn validate_graph(g: &HetGraph) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut names = HashSet::new();
    let mut codes = HashSet::new();
    for t in &g.node_types {
        if !names.insert(t.name.as_str()) {
            out.push(Violation::DuplicateTypeName(t.name.clone()));
        }
        if !codes.insert(t.code) {
            out.push(Violation::DuplicateTypeCode(t.code));
        }
    }

    let mut rel_names = HashSet::new();
    for rel in &g.relations {
        if !rel_names.insert(rel.name.as_str()) {
            out.push(Violation::DuplicateRelationName(rel.name.clone()));
        }
        let (Some(src), Some(dst)) = (g.node_types.get(rel.src.0), g.node_types.get(rel.dst.0))
        else {
            out.push(Violation::UnknownEndpoint {
                relation: rel.name.clone(),
            });
            continue;
        };
        let expected = (src.count, dst.count);
        if rel.adj.shape() != expected {
            out.push(Violation::Shape {
                relation: rel.name.clone(),
                expected,
                actual: rel.adj.shape(),
            });
        }
    }

    for rel in &g.relations {
        let t = rel.adj.transpose();
        let ok = g
            .relations
            .iter()
            .any(|o| o.src == rel.dst && o.dst == rel.src && o.adj == t);
        if !ok {
            out.push(Violation::MissingReverse {
                relation: rel.name.clone(),
            });
        }
    }

    if g.node_types.len() + g.relations.len() <= 2 {
        out.push(Violation::NotHeterogeneous {
            types: g.node_types.len(),
            relations: g.relations.len(),
        });
    }

    match g.node_types.get(g.target.0) {
        None => out.push(Violation::UnknownTarget),
        Some(t) => {
            if g.target_features().is_none() {
                out.push(Violation::MissingTargetFeatures);
            }
            if g.labels.len() != t.count {
                out.push(Violation::LabelCount {
                    expected: t.count,
                    actual: g.labels.len(),
                });
            }
        }
    }

    for (t, feats) in g.node_types.iter().zip(&g.features) {
        if let Some(f) = feats {
            if f.nrows() != t.count {
                out.push(Violation::FeatureRows {
                    node_type: t.name.clone(),
                    expected: t.count,
                    actual: f.nrows(),
                });
            }
        }
    }

    out
}

/// Row sums of a relation's adjacency (out-degree with multiplicity).
pub fn relation_degree_matrix(g: &HetGraph, r: RelationId) -> Result<Vec<u64>> {
    Ok(g.relation(r)?.adj.row_sums())
}

/// Fails with all violations joined when the graph is malformed.
pub fn ensure_valid(g: &HetGraph) -> Result<()> {
    let v = validate_graph(g);
    if v.is_empty() {
        Ok(())
    } else {
        Err(LspiError::InvalidGraph(
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        ))
    }
}
