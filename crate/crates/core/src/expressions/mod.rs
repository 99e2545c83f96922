//! Density expressions, constraints, and their compilation to ordinary
//! (unrooted, undecorated) form.

mod file;
mod symbolic;

use std::fmt;

use serde::Serialize;

pub use file::{parse_constraint_file, ConstraintFile, ConstraintSpec, ExprSpec, GraphSpec, PartRef};
pub use symbolic::unlabel_symbolic;

use crate::density::{engine::Problem, unlabel_stream, Budget, Estimate, Method};
use crate::error::{invalid, Error, Result};
use crate::graphon::Graphon;
use crate::graphs::{DecoratedGraph, Graph, PartitionSpec, RootedGraph, BRUTE_FORCE_CUTOFF};

/// A graph appearing in an expression: plain, rooted and/or decorated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GraphTerm {
    graph: RootedGraph,
    parts: Option<Vec<usize>>,
}

impl GraphTerm {
    pub fn plain(g: Graph) -> Self {
        GraphTerm {
            graph: RootedGraph::unrooted(g),
            parts: None,
        }
    }

    pub fn rooted(h: RootedGraph) -> Self {
        GraphTerm { graph: h, parts: None }
    }

    pub fn decorated(h: DecoratedGraph) -> Self {
        GraphTerm {
            parts: Some(h.parts().to_vec()),
            graph: h.rooted().clone(),
        }
    }

    pub fn graph(&self) -> &RootedGraph {
        &self.graph
    }

    pub fn parts(&self) -> Option<&[usize]> {
        self.parts.as_deref()
    }

    pub fn is_rooted(&self) -> bool {
        self.graph.root_count() > 0
    }

    /// Part labels of the roots in label order.
    pub fn root_parts(&self) -> Option<Vec<usize>> {
        self.parts
            .as_ref()
            .map(|p| self.graph.roots().iter().map(|&r| p[r]).collect())
    }
}

/// Expression tree over reals and graphs under sums and products.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityExpression {
    Constant(f64),
    Term(GraphTerm),
    Sum(Vec<DensityExpression>),
    Product(Vec<DensityExpression>),
    /// `⟦D⟧` of a rooted expression.
    Unlabel(Box<DensityExpression>),
}

impl DensityExpression {
    pub fn constant(c: f64) -> Self {
        DensityExpression::Constant(c)
    }

    pub fn graph(g: Graph) -> Self {
        DensityExpression::Term(GraphTerm::plain(g))
    }

    pub fn rooted(h: RootedGraph) -> Self {
        DensityExpression::Term(GraphTerm::rooted(h))
    }

    pub fn decorated(h: DecoratedGraph) -> Self {
        DensityExpression::Term(GraphTerm::decorated(h))
    }

    pub fn add(a: Self, b: Self) -> Self {
        DensityExpression::Sum(vec![a, b])
    }

    pub fn mul(a: Self, b: Self) -> Self {
        DensityExpression::Product(vec![a, b])
    }

    /// `a + (-1) * b`.
    pub fn sub(a: Self, b: Self) -> Self {
        DensityExpression::add(a, DensityExpression::mul(DensityExpression::Constant(-1.0), b))
    }

    pub fn unlabel(d: Self) -> Self {
        DensityExpression::Unlabel(Box::new(d))
    }

    /// Graph terms outside any `Unlabel`.
    pub fn visible_terms(&self) -> Vec<&GraphTerm> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a DensityExpression, out: &mut Vec<&'a GraphTerm>) {
            match e {
                DensityExpression::Term(t) => out.push(t),
                DensityExpression::Sum(xs) | DensityExpression::Product(xs) => xs.iter().for_each(|x| walk(x, out)),
                DensityExpression::Constant(_) | DensityExpression::Unlabel(_) => {}
            }
        }
        walk(self, &mut out);
        out
    }

    /// Every graph term, including those under `Unlabel`.
    pub fn all_terms(&self) -> Vec<&GraphTerm> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a DensityExpression, out: &mut Vec<&'a GraphTerm>) {
            match e {
                DensityExpression::Term(t) => out.push(t),
                DensityExpression::Sum(xs) | DensityExpression::Product(xs) => xs.iter().for_each(|x| walk(x, out)),
                DensityExpression::Unlabel(d) => walk(d, out),
                DensityExpression::Constant(_) => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for DensityExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityExpression::Constant(c) => write!(f, "{c}"),
            DensityExpression::Term(t) => {
                let g = t.graph();
                write!(f, "G{}{:?}", g.order(), g.graph().edges().collect::<Vec<_>>())?;
                if g.root_count() > 0 {
                    write!(f, "r{:?}", g.roots())?;
                }
                if let Some(p) = t.parts() {
                    write!(f, "p{p:?}")?;
                }
                Ok(())
            }
            DensityExpression::Sum(xs) | DensityExpression::Product(xs) => {
                let sep = if matches!(self, DensityExpression::Sum(_)) {
                    " + "
                } else {
                    " * "
                };
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            DensityExpression::Unlabel(d) => write!(f, "[[{d}]]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Ordinary,
    Rooted,
    Decorated,
}

/// `lhs = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub lhs: DensityExpression,
    pub rhs: DensityExpression,
    pub kind: ConstraintKind,
}

impl Constraint {
    /// Infers the kind: rooted if a rooted term appears outside `Unlabel`,
    /// else decorated if any term is decorated, else ordinary.
    pub fn new(name: impl Into<String>, lhs: DensityExpression, rhs: DensityExpression) -> Result<Self> {
        let visible: Vec<&GraphTerm> = lhs.visible_terms().into_iter().chain(rhs.visible_terms()).collect();
        let rooted = visible.iter().any(|t| t.is_rooted());
        let decorated = lhs
            .all_terms()
            .iter()
            .chain(rhs.all_terms().iter())
            .any(|t| t.parts().is_some());
        if rooted {
            let first = visible.iter().find(|t| t.is_rooted()).expect("rooted term");
            for t in &visible {
                if !crate::graphs::rooted_compatible(first.graph(), t.graph()) {
                    return Err(Error::Incompatible(
                        "sides of a rooted constraint use different root types".into(),
                    ));
                }
            }
        }
        let kind = if rooted {
            ConstraintKind::Rooted
        } else if decorated {
            ConstraintKind::Decorated
        } else {
            ConstraintKind::Ordinary
        };
        Ok(Constraint {
            name: name.into(),
            lhs,
            rhs,
            kind,
        })
    }
}

/// `⟦(D - D')(D - D')⟧ = 0` for a rooted constraint `D = D'`; other kinds are returned unchanged.
pub fn compile_rooted_constraint(c: &Constraint) -> Result<Constraint> {
    if c.kind != ConstraintKind::Rooted {
        return Ok(c.clone());
    }
    let diff = DensityExpression::sub(c.lhs.clone(), c.rhs.clone());
    Ok(Constraint {
        name: c.name.clone(),
        lhs: DensityExpression::unlabel(DensityExpression::mul(diff.clone(), diff)),
        rhs: DensityExpression::Constant(0.0),
        kind: ConstraintKind::Ordinary,
    })
}

/// The plain expression equal to the density of the unrooted decorated graph
/// `h` on every partitioned graphon with parts `spec`: the unlabeled product
/// over vertices `i` and parts `j != l_i` of `(H_i - d_j)/(d_{l_i} - d_j)`,
/// where `H_i` sums the rooted extensions of `h` by one free vertex adjacent to `i`.
pub fn compile_decorated(h: &DecoratedGraph, spec: &PartitionSpec) -> Result<DensityExpression> {
    let n = h.graph().order();
    if h.rooted().root_count() > 0 {
        return Err(invalid("compile_decorated expects an unrooted decorated graph"));
    }
    if n + 1 > BRUTE_FORCE_CUTOFF {
        return Err(Error::UnsupportedSize {
            order: n + 1,
            cutoff: BRUTE_FORCE_CUTOFF,
        });
    }
    h.check_against(spec)?;
    let d = spec.degrees();
    let mut factors = Vec::new();
    for i in 0..n {
        let h_i = extension_sum(h.graph(), i)?;
        let li = h.parts()[i];
        for (j, &dj) in d.iter().enumerate() {
            if j == li {
                continue;
            }
            let s = 1.0 / (d[li] - dj);
            factors.push(DensityExpression::Sum(vec![
                DensityExpression::mul(DensityExpression::Constant(s), h_i.clone()),
                DensityExpression::Constant(-dj * s),
            ]));
        }
    }
    if factors.is_empty() || n == 0 {
        return Ok(DensityExpression::graph(h.graph().clone()));
    }
    Ok(DensityExpression::unlabel(DensityExpression::Product(factors)))
}

/// Sum of the graphs on `n + 1` vertices rooted at `0..n`, inducing `g` on
/// the roots, whose free vertex `n` is adjacent to `i` (and to any subset of the rest).
fn extension_sum(g: &Graph, i: usize) -> Result<DensityExpression> {
    let n = g.order();
    let others: Vec<usize> = (0..n).filter(|&v| v != i).collect();
    let base: Vec<(usize, usize)> = g.edges().collect();
    let mut terms = Vec::with_capacity(1 << others.len());
    for mask in 0u32..(1 << others.len()) {
        let mut edges = base.clone();
        edges.push((i, n));
        for (b, &v) in others.iter().enumerate() {
            if mask >> b & 1 == 1 {
                edges.push((v, n));
            }
        }
        let ext = Graph::from_edges(n + 1, &edges)?;
        terms.push(DensityExpression::rooted(RootedGraph::new(ext, (0..n).collect())?));
    }
    Ok(DensityExpression::Sum(terms))
}

fn evaluate_inner(
    e: &DensityExpression,
    w: &Graphon,
    method: Option<Method>,
    budget: &Budget,
    stream: &mut u64,
) -> Result<Estimate> {
    *stream += 1;
    let my_stream = *stream;
    match e {
        DensityExpression::Constant(c) => Ok(Estimate::constant(*c)),
        DensityExpression::Term(t) => {
            if t.is_rooted() {
                return Err(Error::Incompatible(
                    "a rooted term has no value outside an unlabeling".into(),
                ));
            }
            let g = t.graph().graph();
            if g.order() > BRUTE_FORCE_CUTOFF {
                return Err(Error::UnsupportedSize {
                    order: g.order(),
                    cutoff: BRUTE_FORCE_CUTOFF,
                });
            }
            Problem::plain(g, t.parts(), w)?.run(w, method, budget, my_stream)
        }
        DensityExpression::Sum(xs) => {
            let mut acc = Estimate::constant(0.0);
            for x in xs {
                acc = acc.add(evaluate_inner(x, w, method, budget, stream)?);
            }
            Ok(acc)
        }
        DensityExpression::Product(xs) => {
            let mut acc = Estimate::constant(1.0);
            for x in xs {
                acc = acc.mul(evaluate_inner(x, w, method, budget, stream)?);
            }
            Ok(acc)
        }
        DensityExpression::Unlabel(d) => unlabel_stream(d, w, method, budget, my_stream),
    }
}

/// Value of an ordinary expression. Every graph occurrence is estimated
/// independently, and standard errors are propagated through sums and products.
pub fn evaluate_expression(
    e: &DensityExpression,
    w: &Graphon,
    method: Option<Method>,
    budget: &Budget,
) -> Result<Estimate> {
    let mut stream = 0;
    evaluate_inner(e, w, method, budget, &mut stream)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn from_residual(r: &Estimate, tol: f64) -> Verdict {
        let dev = r.value.abs();
        if dev <= tol.max(3.0 * r.stderr) {
            Verdict::Satisfied
        } else if dev > tol + 3.0 * r.stderr {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub verdict: Verdict,
    /// `lhs - rhs` (after compiling rooted constraints).
    pub residual: Estimate,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-3;

/// Evaluates `lhs - rhs` and classifies it: satisfied iff `|r| <= max(tol, 3σ)`,
/// violated iff `|r| > tol + 3σ`, inconclusive otherwise.
pub fn check_constraint(
    c: &Constraint,
    w: &Graphon,
    tol: f64,
    method: Option<Method>,
    budget: &Budget,
) -> Result<CheckResult> {
    let compiled = compile_rooted_constraint(c)?;
    let lhs = evaluate_expression(&compiled.lhs, w, method, budget)?;
    let rhs = evaluate_expression(&compiled.rhs, w, method, &budget.with_seed(budget.seed ^ 0x5EED))?;
    let residual = lhs.sub(rhs);
    Ok(CheckResult {
        verdict: Verdict::from_residual(&residual, tol),
        residual,
    })
}
