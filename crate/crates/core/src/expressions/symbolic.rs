//! Exact unlabeling by flag algebra: a rooted polynomial is expanded into a
//! linear combination of rooted graphs, products are resolved over all
//! completions of the free vertices, and each graph is then unlabeled in closed form.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graphs::{
    automorphism_count, canonical_mask, rooted_automorphism_count, Graph, RootedGraph, BRUTE_FORCE_CUTOFF,
};

use super::{DensityExpression, GraphTerm};

/// Rooted graphs with roots at `0..m`, keyed by order and canonical form.
type Combo = BTreeMap<(usize, u64), (f64, RootedGraph)>;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn key(g: &RootedGraph) -> (usize, u64) {
    (g.order(), canonical_mask(g.graph(), g.root_count()))
}

fn add_to(c: &mut Combo, coef: f64, g: RootedGraph) {
    let k = key(&g);
    c.entry(k).or_insert((0.0, g)).0 += coef;
}

fn merge(mut a: Combo, b: Combo, scale: f64) -> Combo {
    for (_, (coef, g)) in b {
        add_to(&mut a, scale * coef, g);
    }
    a
}

fn unit(h0: &Graph) -> RootedGraph {
    RootedGraph::new(h0.clone(), (0..h0.order()).collect()).expect("roots in range")
}

/// `t_{F1} t_{F2}` as a combination of rooted graphs on `m + f1 + f2` vertices.
fn flag_product(f1: &RootedGraph, f2: &RootedGraph, m: usize) -> Result<Combo> {
    let (n1, n2) = (f1.order(), f2.order());
    let (a, b) = (n1 - m, n2 - m);
    let n = m + a + b;
    if n > BRUTE_FORCE_CUTOFF {
        return Err(Error::UnsupportedSize {
            order: n,
            cutoff: BRUTE_FORCE_CUTOFF,
        });
    }
    let mut base: Vec<(usize, usize)> = f1.graph().edges().collect();
    let shift = |v: usize| if v < m { v } else { v + a };
    base.extend(
        f2.graph()
            .edges()
            .filter(|&(u, v)| u >= m || v >= m)
            .map(|(u, v)| (shift(u), shift(v))),
    );
    let cross: Vec<(usize, usize)> = (0..a).flat_map(|i| (0..b).map(move |j| (m + i, m + a + j))).collect();
    let scale = factorial(a) / rooted_automorphism_count(f1)? as f64 * factorial(b)
        / rooted_automorphism_count(f2)? as f64
        / factorial(a + b);
    let mut out = Combo::new();
    for mask in 0u64..(1 << cross.len()) {
        let mut edges = base.clone();
        edges.extend(
            cross
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &p)| p),
        );
        let g = RootedGraph::new(Graph::from_edges(n, &edges)?, (0..m).collect())?;
        let aut = rooted_automorphism_count(&g)? as f64;
        add_to(&mut out, scale * aut, g);
    }
    Ok(out)
}

fn expand(e: &DensityExpression, m: usize, h0: &Graph) -> Result<Combo> {
    match e {
        DensityExpression::Constant(c) => {
            let mut out = Combo::new();
            add_to(&mut out, *c, unit(h0));
            Ok(out)
        }
        DensityExpression::Term(t) => {
            if t.parts().is_some() {
                return Err(Error::Unsupported("symbolic unlabeling of decorated terms".into()));
            }
            let (norm, _) = t.graph().normalized();
            let mut out = Combo::new();
            add_to(&mut out, 1.0, norm);
            Ok(out)
        }
        DensityExpression::Sum(xs) => {
            let mut acc = Combo::new();
            for x in xs {
                acc = merge(acc, expand(x, m, h0)?, 1.0);
            }
            Ok(acc)
        }
        DensityExpression::Product(xs) => {
            let mut acc = Combo::new();
            add_to(&mut acc, 1.0, unit(h0));
            for x in xs {
                let rhs = expand(x, m, h0)?;
                let mut next = Combo::new();
                for (c1, g1) in acc.values() {
                    for (c2, g2) in rhs.values() {
                        if *c1 == 0.0 || *c2 == 0.0 {
                            continue;
                        }
                        next = merge(next, flag_product(g1, g2, m)?, c1 * c2);
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        DensityExpression::Unlabel(_) => Err(Error::Unsupported(
            "unlabeling nested inside a rooted expression".into(),
        )),
    }
}

/// `⟦D⟧` as a linear combination of plain graph densities.
pub fn unlabel_symbolic(d: &DensityExpression) -> Result<DensityExpression> {
    let terms = d.all_terms();
    let first: Option<&GraphTerm> = terms.first().copied();
    let m = first.map_or(0, |t| t.graph().root_count());
    let h0 = first.map(|t| t.graph().root_graph()).unwrap_or_else(|| Graph::empty(0));
    for t in &terms {
        if !crate::graphs::rooted_compatible(t.graph(), first.expect("non-empty").graph()) {
            return Err(Error::Incompatible("terms have different root types".into()));
        }
    }
    let aut_h0 = automorphism_count(&h0)? as f64;
    let mut plain: BTreeMap<(usize, u64), (f64, Graph)> = BTreeMap::new();
    for (coef, g) in expand(d, m, &h0)?.into_values() {
        let n = g.order();
        let f = n - m;
        let q = factorial(m) * factorial(f) * automorphism_count(g.graph())? as f64
            / (aut_h0 * rooted_automorphism_count(&g)? as f64 * factorial(n));
        let k = (n, canonical_mask(g.graph(), 0));
        plain.entry(k).or_insert((0.0, g.graph().clone())).0 += coef * q;
    }
    let mut out = Vec::new();
    for (coef, g) in plain.into_values() {
        if coef.abs() < 1e-15 {
            continue;
        }
        if g.order() == 0 {
            out.push(DensityExpression::Constant(coef));
        } else {
            out.push(DensityExpression::mul(
                DensityExpression::Constant(coef),
                DensityExpression::graph(g),
            ));
        }
    }
    Ok(DensityExpression::Sum(out))
}
