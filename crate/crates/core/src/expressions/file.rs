//! JSON constraint files.
//!
//! ```json
//! {"constraints": [
//!   {"name": "edge", "lhs": {"graph": {"n": 2, "edges": [[0, 1]]}}, "rhs": 0.5},
//!   {"lhs": {"unlabel": {"product": [{"graph": {"n": 2, "edges": [[0, 1]], "roots": [0]}}, 2]}},
//!    "rhs": 1, "tol": 1e-6}
//! ]}
//! ```
//!
//! An expression is a number, `{"graph": ...}`, `{"graph_file": path}`,
//! `{"sum": [...]}`, `{"product": [...]}` or `{"unlabel": expr}`. Graph
//! `parts` entries are part indices or names; `free` lists pairs whose
//! adjacency is summed over both states.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{Constraint, DensityExpression, GraphTerm};
use crate::error::{invalid, Error, Result};
use crate::graphs::{DecoratedGraph, Graph, GraphFile, PartitionSpec, RootedGraph};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PartRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub roots: Vec<usize>,
    #[serde(default)]
    pub parts: Option<Vec<PartRef>>,
    #[serde(default)]
    pub free: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ExprSpec {
    Number(f64),
    Graph { graph: GraphSpec },
    GraphFile { graph_file: String },
    Sum { sum: Vec<ExprSpec> },
    Product { product: Vec<ExprSpec> },
    Unlabel { unlabel: Box<ExprSpec> },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub lhs: ExprSpec,
    #[serde(default = "zero")]
    pub rhs: ExprSpec,
    #[serde(default)]
    pub tol: Option<f64>,
}

fn zero() -> ExprSpec {
    ExprSpec::Number(0.0)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Layout {
    Wrapped { constraints: Vec<ConstraintSpec> },
    Bare(Vec<ConstraintSpec>),
}

/// Parsed constraints; graph files are resolved relative to `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintFile {
    pub constraints: Vec<ConstraintSpec>,
    pub base: PathBuf,
}

pub fn parse_constraint_file(path: &Path) -> Result<ConstraintFile> {
    let text = std::fs::read_to_string(path)?;
    ConstraintFile::parse(&text, path.parent().unwrap_or(Path::new(".")))
}

fn resolve_part(p: &PartRef, partition: Option<&PartitionSpec>) -> Result<usize> {
    match p {
        PartRef::Index(i) => Ok(*i),
        PartRef::Name(name) => partition
            .and_then(|s| s.index_of(name))
            .ok_or_else(|| Error::PartitionMismatch(format!("no part named {name:?}"))),
    }
}

fn term(graph: Graph, roots: Vec<usize>, parts: Option<Vec<usize>>) -> Result<DensityExpression> {
    let rooted = RootedGraph::new(graph, roots)?;
    Ok(DensityExpression::Term(match parts {
        Some(p) => GraphTerm::decorated(DecoratedGraph::new(rooted, p)?),
        None => GraphTerm::rooted(rooted),
    }))
}

impl GraphSpec {
    fn build(&self, partition: Option<&PartitionSpec>) -> Result<DensityExpression> {
        let parts = self
            .parts
            .as_ref()
            .map(|ps| {
                ps.iter()
                    .map(|p| resolve_part(p, partition))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let norm = |(u, v): (usize, usize)| (u.min(v), u.max(v));
        for &p in &self.free {
            if self.edges.iter().any(|&e| norm(e) == norm(p)) {
                return Err(invalid(format!("free pair {p:?} is also listed as an edge")));
            }
        }
        if self.free.len() > 16 {
            return Err(invalid("at most 16 free pairs"));
        }
        let mut terms = Vec::with_capacity(1 << self.free.len());
        for mask in 0u32..(1 << self.free.len()) {
            let mut edges = self.edges.clone();
            edges.extend(
                self.free
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &p)| p),
            );
            terms.push(term(
                Graph::from_edges(self.n, &edges)?,
                self.roots.clone(),
                parts.clone(),
            )?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            DensityExpression::Sum(terms)
        })
    }
}

impl ExprSpec {
    pub fn build(&self, partition: Option<&PartitionSpec>, base: &Path) -> Result<DensityExpression> {
        let all = |xs: &[ExprSpec]| xs.iter().map(|x| x.build(partition, base)).collect::<Result<Vec<_>>>();
        match self {
            ExprSpec::Number(c) => Ok(DensityExpression::Constant(*c)),
            ExprSpec::Graph { graph } => graph.build(partition),
            ExprSpec::GraphFile { graph_file } => {
                let text = std::fs::read_to_string(base.join(graph_file))?;
                let gf = GraphFile::parse(&text)?;
                term(gf.graph, gf.roots.unwrap_or_default(), gf.parts)
            }
            ExprSpec::Sum { sum } => Ok(DensityExpression::Sum(all(sum)?)),
            ExprSpec::Product { product } => Ok(DensityExpression::Product(all(product)?)),
            ExprSpec::Unlabel { unlabel } => Ok(DensityExpression::unlabel(unlabel.build(partition, base)?)),
        }
    }
}

impl ConstraintFile {
    pub fn parse(text: &str, base: &Path) -> Result<ConstraintFile> {
        let constraints = match serde_json::from_str::<Layout>(text)? {
            Layout::Wrapped { constraints } | Layout::Bare(constraints) => constraints,
        };
        Ok(ConstraintFile {
            constraints,
            base: base.to_path_buf(),
        })
    }

    /// Constraints with their optional per-constraint tolerances.
    pub fn build(&self, partition: Option<&PartitionSpec>) -> Result<Vec<(Constraint, Option<f64>)>> {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let name = c.name.clone().unwrap_or_else(|| format!("constraint {}", i + 1));
                let lhs = c.lhs.build(partition, &self.base)?;
                let rhs = c.rhs.build(partition, &self.base)?;
                Ok((Constraint::new(name, lhs, rhs)?, c.tol))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expressions::ConstraintKind;

    #[test]
    fn parses_nested_expressions() {
        let text = r#"{"constraints": [
            {"name": "edge", "lhs": {"graph": {"n": 2, "edges": [[0, 1]]}}, "rhs": 0.5},
            {"lhs": {"unlabel": {"product": [{"graph": {"n": 2, "edges": [[0, 1]], "roots": [0]}}, 2]}}, "tol": 1e-6},
            {"lhs": {"graph": {"n": 2, "edges": [[0, 1]], "roots": [0]}}, "rhs": {"sum": [0.25, 0.25]}}
        ]}"#;
        let f = ConstraintFile::parse(text, Path::new(".")).unwrap();
        let built = f.build(None).unwrap();
        assert_eq!(built.len(), 3);
        assert_eq!(built[0].0.name, "edge");
        assert_eq!(built[0].0.kind, ConstraintKind::Ordinary);
        assert_eq!(built[1].1, Some(1e-6));
        assert_eq!(built[1].0.rhs, DensityExpression::Constant(0.0));
        assert_eq!(built[2].0.kind, ConstraintKind::Rooted);
    }

    #[test]
    fn free_pairs_expand_to_sums() {
        let text = r#"[{"lhs": {"graph": {"n": 3, "edges": [[0, 1], [0, 2]], "free": [[1, 2]]}}, "rhs": 1}]"#;
        let built = ConstraintFile::parse(text, Path::new("."))
            .unwrap()
            .build(None)
            .unwrap();
        match &built[0].0.lhs {
            DensityExpression::Sum(xs) => assert_eq!(xs.len(), 2),
            other => panic!("{other:?}"),
        }
        let clash = r#"[{"lhs": {"graph": {"n": 2, "edges": [[0, 1]], "free": [[1, 0]]}}}]"#;
        assert!(ConstraintFile::parse(clash, Path::new("."))
            .unwrap()
            .build(None)
            .is_err());
    }

    #[test]
    fn part_names_need_a_partition() {
        let text = r#"[{"lhs": {"graph": {"n": 1, "parts": ["A"]}}}]"#;
        let f = ConstraintFile::parse(text, Path::new(".")).unwrap();
        assert!(matches!(f.build(None), Err(Error::PartitionMismatch(_))));
        let spec = crate::graphon::RademacherLayout.partition_spec();
        let built = f.build(Some(&spec)).unwrap();
        assert_eq!(built[0].0.kind, ConstraintKind::Decorated);
        assert!(ConstraintFile::parse("{\"nope\": 1}", Path::new(".")).is_err());
    }
}
