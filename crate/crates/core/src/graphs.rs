//! Finite simple graphs with rooted and decorated variants.
//!
//! Isomorphism and automorphism questions are answered by exhaustive
//! backtracking over vertex bijections. That is exact and fast for the small
//! graphs that appear in density constraints, so no canonical-labeling
//! dependency is needed; orders above [`BRUTE_FORCE_CUTOFF`] are rejected.

use std::collections::HashSet;
use std::fmt;

use num_rational::Ratio;

use crate::error::{invalid, Error, Result};

/// Largest order accepted by isomorphism and automorphism routines.
pub const BRUTE_FORCE_CUTOFF: usize = 8;

/// Largest order for which a graph fits a 64-bit pair mask.
const MASK_ORDER_LIMIT: usize = 11;

/// A finite simple graph on vertices `0..order`, stored as packed adjacency rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    order: usize,
    stride: usize,
    rows: Vec<u64>,
}

#[inline]
fn pair_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    hi * (hi - 1) / 2 + lo
}

impl Graph {
    pub fn empty(order: usize) -> Self {
        let stride = order.div_ceil(64).max(1);
        Graph {
            order,
            stride,
            rows: vec![0; order * stride],
        }
    }

    pub fn complete(order: usize) -> Self {
        let mut g = Graph::empty(order);
        for u in 0..order {
            for v in u + 1..order {
                g.set_edge(u, v);
            }
        }
        g
    }

    pub fn path(order: usize) -> Self {
        let mut g = Graph::empty(order);
        for v in 1..order {
            g.set_edge(v - 1, v);
        }
        g
    }

    pub fn cycle(order: usize) -> Self {
        let mut g = Graph::path(order);
        if order > 2 {
            g.set_edge(order - 1, 0);
        }
        g
    }

    /// Single edge on two vertices.
    pub fn edge() -> Self {
        Graph::complete(2)
    }

    pub fn triangle() -> Self {
        Graph::complete(3)
    }

    /// Path on three vertices with vertex 1 in the middle.
    pub fn cherry() -> Self {
        Graph::path(3)
    }

    pub fn from_edges(order: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(order);
        for &(u, v) in edges {
            if u >= order || v >= order {
                return Err(invalid(format!(
                    "edge ({u},{v}) references a vertex outside 0..{order}"
                )));
            }
            if u == v {
                return Err(invalid(format!("self-loop at vertex {u}")));
            }
            g.set_edge(u, v);
        }
        Ok(g)
    }

    pub(crate) fn set_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v && u < self.order && v < self.order);
        self.rows[u * self.stride + v / 64] |= 1 << (v % 64);
        self.rows[v * self.stride + u / 64] |= 1 << (u % 64);
    }

    /// Sets bits of row `u` from a packed word slice; used by the samplers,
    /// which fill the upper triangle first and mirror it afterwards.
    pub(crate) fn row_words_mut(&mut self, u: usize) -> &mut [u64] {
        let s = self.stride;
        &mut self.rows[u * s..(u + 1) * s]
    }

    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    /// Copies every upper-triangle bit into the lower triangle.
    pub(crate) fn symmetrize_from_upper(&mut self) {
        for u in 0..self.order {
            for v in u + 1..self.order {
                if self.rows[u * self.stride + v / 64] >> (v % 64) & 1 == 1 {
                    self.rows[v * self.stride + u / 64] |= 1 << (u % 64);
                }
            }
        }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.rows[u * self.stride + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.order)
            .flat_map(move |u| (u + 1..self.order).filter_map(move |v| self.has_edge(u, v).then_some((u, v))))
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v * self.stride..(v + 1) * self.stride]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Subgraph induced by `vertices`, relabelled `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len());
        for (i, &u) in vertices.iter().enumerate() {
            for (j, &v) in vertices.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.set_edge(i, j);
                }
            }
        }
        g
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.order);
        for u in 0..self.order {
            for v in u + 1..self.order {
                if !self.has_edge(u, v) {
                    g.set_edge(u, v);
                }
            }
        }
        g
    }

    /// Graph with vertex `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.order);
        let mut g = Graph::empty(self.order);
        for (u, v) in self.edges() {
            g.set_edge(perm[u], perm[v]);
        }
        g
    }

    pub(crate) fn from_pair_mask(order: usize, mask: u64) -> Graph {
        let mut g = Graph::empty(order);
        for v in 1..order {
            for u in 0..v {
                if mask >> pair_index(u, v) & 1 == 1 {
                    g.set_edge(u, v);
                }
            }
        }
        g
    }

    /// One representative of every isomorphism class of graphs on `order` vertices.
    pub fn isomorphism_classes(order: usize) -> Result<Vec<Graph>> {
        if order > 6 {
            return Err(Error::UnsupportedSize { order, cutoff: 6 });
        }
        let pairs = order * order.saturating_sub(1) / 2;
        let mut seen = HashSet::new();
        let mut classes = Vec::new();
        for mask in 0..(1u64 << pairs) {
            let g = Graph::from_pair_mask(order, mask);
            let key = canonical_mask(&g, 0);
            if seen.insert(key) {
                classes.push(g);
            }
        }
        Ok(classes)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<_> = self.edges().collect();
        write!(f, "Graph({}; {:?})", self.order, edges)
    }
}

/// A graph with an ordered list of distinct root vertices; root `i` carries label `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootedGraph {
    graph: Graph,
    roots: Vec<usize>,
}

impl RootedGraph {
    pub fn new(graph: Graph, roots: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; graph.order()];
        for &r in &roots {
            if r >= graph.order() {
                return Err(invalid(format!("root {r} outside 0..{}", graph.order())));
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(invalid(format!("root {r} listed twice")));
            }
        }
        Ok(RootedGraph { graph, roots })
    }

    /// A graph with no roots.
    pub fn unrooted(graph: Graph) -> Self {
        RootedGraph {
            graph,
            roots: Vec::new(),
        }
    }

    /// Edge with one root and one non-root.
    pub fn rooted_edge() -> Self {
        RootedGraph {
            graph: Graph::edge(),
            roots: vec![0],
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    pub fn order(&self) -> usize {
        self.graph.order()
    }

    pub fn non_roots(&self) -> Vec<usize> {
        (0..self.order()).filter(|v| !self.roots.contains(v)).collect()
    }

    /// The subgraph induced by the roots, vertex `i` being root `i`.
    pub fn root_graph(&self) -> Graph {
        self.graph.induced(&self.roots)
    }

    /// Equivalent rooted graph with roots at positions `0..m` (in label order)
    /// and non-roots after them in increasing original order.
    pub fn normalized(&self) -> (RootedGraph, Vec<usize>) {
        let mut order = self.roots.clone();
        order.extend(self.non_roots());
        let mut perm = vec![0; self.order()];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let graph = self.graph.relabeled(&perm);
        let roots = (0..self.roots.len()).collect();
        (RootedGraph { graph, roots }, perm)
    }
}

/// A (possibly rooted) graph whose vertices carry part labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DecoratedGraph {
    rooted: RootedGraph,
    parts: Vec<usize>,
}

impl DecoratedGraph {
    pub fn new(rooted: RootedGraph, parts: Vec<usize>) -> Result<Self> {
        if parts.len() != rooted.order() {
            return Err(invalid(format!(
                "{} part labels for {} vertices",
                parts.len(),
                rooted.order()
            )));
        }
        Ok(DecoratedGraph { rooted, parts })
    }

    pub fn unrooted(graph: Graph, parts: Vec<usize>) -> Result<Self> {
        DecoratedGraph::new(RootedGraph::unrooted(graph), parts)
    }

    pub fn rooted(&self) -> &RootedGraph {
        &self.rooted
    }

    pub fn graph(&self) -> &Graph {
        self.rooted.graph()
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Checks that every label names a part of `spec`.
    pub fn check_against(&self, spec: &PartitionSpec) -> Result<()> {
        match self.parts.iter().find(|&&p| p >= spec.len()) {
            Some(p) => Err(Error::PartitionMismatch(format!(
                "label {p} but the partition has {} parts",
                spec.len()
            ))),
            None => Ok(()),
        }
    }
}

/// Sizes and degrees of the parts of a partitioned graphon. Parts are laid
/// out left to right: part `i` occupies `[a_1 + ... + a_{i-1}, a_1 + ... + a_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec {
    sizes: Vec<f64>,
    degrees: Vec<f64>,
    names: Vec<String>,
}

impl PartitionSpec {
    pub fn new(sizes: Vec<f64>, degrees: Vec<f64>) -> Result<Self> {
        let names = (0..sizes.len()).map(|i| format!("A{}", i + 1)).collect();
        PartitionSpec::with_names(sizes, degrees, names)
    }

    pub fn with_names(sizes: Vec<f64>, degrees: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() != degrees.len() || sizes.len() != names.len() {
            return Err(invalid("partition needs equally many sizes, degrees and names"));
        }
        if let Some(a) = sizes.iter().find(|&&a| !(a > 0.0)) {
            return Err(invalid(format!("part size {a} is not positive")));
        }
        let total: f64 = sizes.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("part sizes sum to {total}, not 1")));
        }
        if let Some(d) = degrees.iter().find(|&&d| !(0.0..=1.0).contains(&d)) {
            return Err(invalid(format!("degree {d} outside [0,1]")));
        }
        for i in 0..degrees.len() {
            for j in i + 1..degrees.len() {
                if degrees[i] == degrees[j] {
                    return Err(invalid(format!("parts {i} and {j} share the degree {}", degrees[i])));
                }
            }
        }
        Ok(PartitionSpec { sizes, degrees, names })
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Interval `[lo, hi)` occupied by each part.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut lo = 0.0;
        let mut out = Vec::with_capacity(self.len());
        for (i, &a) in self.sizes.iter().enumerate() {
            let hi = if i + 1 == self.len() { 1.0 } else { lo + a };
            out.push((lo, hi));
            lo = hi;
        }
        out
    }

    pub fn interval(&self, part: usize) -> (f64, f64) {
        self.intervals()[part]
    }

    /// Index of the part containing `x`.
    pub fn part_of(&self, x: f64) -> usize {
        let ivs = self.intervals();
        ivs.iter().position(|&(_, hi)| x < hi).unwrap_or(self.len() - 1)
    }
}

/// Orders above the cutoff are rejected.
fn check_cutoff(order: usize) -> Result<()> {
    if order > BRUTE_FORCE_CUTOFF {
        Err(Error::UnsupportedSize {
            order,
            cutoff: BRUTE_FORCE_CUTOFF,
        })
    } else {
        Ok(())
    }
}

/// Backtracking search for bijections `g1 -> g2` preserving adjacency and
/// mapping `r1[i]` to `r2[i]`. Returns the number found, stopping after
/// `limit` of them.
fn count_isomorphisms(g1: &Graph, r1: &[usize], g2: &Graph, r2: &[usize], limit: u64) -> u64 {
    let n = g1.order();
    if n != g2.order() || r1.len() != r2.len() || g1.edge_count() != g2.edge_count() {
        return 0;
    }
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (&a, &b) in r1.iter().zip(r2) {
        if g1.degree(a) != g2.degree(b) {
            return 0;
        }
        image[a] = b;
        used[b] = true;
    }
    // every pair of roots must already agree
    for (i, &a) in r1.iter().enumerate() {
        for &b in &r1[i + 1..] {
            if g1.has_edge(a, b) != g2.has_edge(image[a], image[b]) {
                return 0;
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|v| !r1.contains(v)).collect();

    fn extend(
        depth: usize,
        free: &[usize],
        g1: &Graph,
        g2: &Graph,
        image: &mut [usize],
        used: &mut [bool],
        found: &mut u64,
        limit: u64,
    ) {
        if depth == free.len() {
            *found += 1;
            return;
        }
        let v = free[depth];
        for w in 0..g2.order() {
            if used[w] || g1.degree(v) != g2.degree(w) {
                continue;
            }
            let consistent = (0..g1.order())
                .filter(|&u| image[u] != usize::MAX)
                .all(|u| g1.has_edge(u, v) == g2.has_edge(image[u], w));
            if !consistent {
                continue;
            }
            image[v] = w;
            used[w] = true;
            extend(depth + 1, free, g1, g2, image, used, found, limit);
            image[v] = usize::MAX;
            used[w] = false;
            if *found >= limit {
                return;
            }
        }
    }

    let mut found = 0;
    extend(0, &free, g1, g2, &mut image, &mut used, &mut found, limit);
    found
}

/// Order of the automorphism group of `g`.
pub fn automorphism_count(g: &Graph) -> Result<u64> {
    check_cutoff(g.order())?;
    Ok(count_isomorphisms(g, &[], g, &[], u64::MAX))
}

/// Automorphisms of a rooted graph fix every root.
pub fn rooted_automorphism_count(h: &RootedGraph) -> Result<u64> {
    check_cutoff(h.order())?;
    Ok(count_isomorphisms(h.graph(), h.roots(), h.graph(), h.roots(), u64::MAX))
}

pub fn are_isomorphic(g1: &Graph, g2: &Graph) -> Result<bool> {
    check_cutoff(g1.order().max(g2.order()))?;
    Ok(count_isomorphisms(g1, &[], g2, &[], 1) > 0)
}

/// Isomorphism mapping the `i`-th root of `h1` to the `i`-th root of `h2`.
pub fn are_isomorphic_rooted(h1: &RootedGraph, h2: &RootedGraph) -> Result<bool> {
    check_cutoff(h1.order().max(h2.order()))?;
    Ok(count_isomorphisms(h1.graph(), h1.roots(), h2.graph(), h2.roots(), 1) > 0)
}

/// Two rooted graphs are compatible when their roots induce the same graph
/// under the label-preserving map.
pub fn rooted_compatible(h1: &RootedGraph, h2: &RootedGraph) -> bool {
    let (r1, r2) = (h1.roots(), h2.roots());
    r1.len() == r2.len()
        && (0..r1.len())
            .all(|i| (i + 1..r1.len()).all(|j| h1.graph().has_edge(r1[i], r1[j]) == h2.graph().has_edge(r2[i], r2[j])))
}

/// Smallest pair mask over all relabelings that keep vertices `0..fixed` in place.
pub(crate) fn canonical_mask(g: &Graph, fixed: usize) -> u64 {
    let n = g.order();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    permute_tail(&mut perm, fixed, &mut |p| {
        let mut m = 0u64;
        for (u, v) in g.edges() {
            m |= 1 << pair_index(p[u], p[v]);
        }
        best = best.min(m);
    });
    best
}

/// Visits every permutation of `perm[start..]`, leaving the prefix alone.
fn permute_tail(perm: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start + 1 >= perm.len() {
        visit(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        permute_tail(perm, start + 1, visit);
        perm.swap(start, i);
    }
}

/// Pair masks of every labeled copy of `h`.
pub(crate) fn labeled_copies(h: &Graph) -> HashSet<u64> {
    let mut perm: Vec<usize> = (0..h.order()).collect();
    let mut out = HashSet::new();
    permute_tail(&mut perm, 0, &mut |p| {
        let mut m = 0u64;
        for (u, v) in h.edges() {
            m |= 1 << pair_index(p[u], p[v]);
        }
        out.insert(m);
    });
    out
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of `|h|`-subsets of `g` inducing a copy of `h`.
pub(crate) fn count_induced_copies(h: &Graph, g: &Graph) -> Result<u128> {
    let k = h.order();
    if k > MASK_ORDER_LIMIT {
        return Err(Error::UnsupportedSize {
            order: k,
            cutoff: MASK_ORDER_LIMIT,
        });
    }
    let targets = labeled_copies(h);
    let mut count = 0u128;
    for_each_subset(g.order(), k, |s| {
        let mut m = 0u64;
        for (i, &u) in s.iter().enumerate() {
            for (j, &v) in s.iter().enumerate().skip(i + 1) {
                if g.has_edge(u, v) {
                    m |= 1 << pair_index(i, j);
                }
            }
        }
        if targets.contains(&m) {
            count += 1;
        }
    });
    Ok(count)
}

/// Probability that `|h|` uniformly chosen distinct vertices of `g` induce a copy of `h`.
pub fn induced_density_finite(h: &Graph, g: &Graph) -> Result<Ratio<u128>> {
    if h.order() > g.order() {
        return Ok(Ratio::from_integer(0));
    }
    let count = count_induced_copies(h, g)?;
    Ok(Ratio::new(count, binomial(g.order(), h.order())))
}

/// A graph read from the plain text format: a header `n m`, then `m` lines
/// `u v`, then optional `roots:` and `parts:` annotation lines.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFile {
    pub graph: Graph,
    pub roots: Option<Vec<usize>>,
    pub parts: Option<Vec<usize>>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing `n m` header"))?;
        let nums = parse_usizes(header).map_err(|m| perr(hl, &m))?;
        let [n, m] = nums[..] else {
            return Err(perr(hl, "header must be `n m`"));
        };
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = lines.next().ok_or_else(|| perr(hl, "fewer edge lines than declared"))?;
            let uv = parse_usizes(l).map_err(|m| perr(ln, &m))?;
            let [u, v] = uv[..] else {
                return Err(perr(ln, "edge line must be `u v`"));
            };
            edges.push((u, v));
        }
        let graph = Graph::from_edges(n, &edges).map_err(|e| perr(hl, &e.to_string()))?;
        let mut roots = None;
        let mut parts = None;
        for (ln, l) in lines {
            if let Some(rest) = l.strip_prefix("roots:") {
                roots = Some(parse_usizes(rest).map_err(|m| perr(ln, &m))?);
            } else if let Some(rest) = l.strip_prefix("parts:") {
                let p = parse_usizes(rest).map_err(|m| perr(ln, &m))?;
                if p.len() != n {
                    return Err(perr(ln, "one part label per vertex is required"));
                }
                parts = Some(p);
            } else {
                return Err(perr(ln, "unexpected line after the edge list"));
            }
        }
        if let Some(r) = &roots {
            RootedGraph::new(graph.clone(), r.clone()).map_err(|e| perr(0, &e.to_string()))?;
        }
        Ok(GraphFile { graph, roots, parts })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.graph.order(), self.graph.edge_count());
        for (u, v) in self.graph.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        let join = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        if let Some(r) = &self.roots {
            out.push_str(&format!("roots: {}\n", join(r)));
        }
        if let Some(p) = &self.parts {
            out.push_str(&format!("parts: {}\n", join(p)));
        }
        out
    }

    pub fn rooted(&self) -> Result<RootedGraph> {
        RootedGraph::new(self.graph.clone(), self.roots.clone().unwrap_or_default())
    }
}

fn parse_usizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| format!("`{t}` is not a vertex index")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> u64 {
        (1..=n as u64).product()
    }

    #[test]
    fn automorphism_counts_of_small_graphs() {
        assert_eq!(automorphism_count(&Graph::triangle()).unwrap(), 6);
        assert_eq!(automorphism_count(&Graph::path(3)).unwrap(), 2);
        assert_eq!(automorphism_count(&Graph::cycle(4)).unwrap(), 8);
        assert_eq!(automorphism_count(&Graph::empty(4)).unwrap(), 24);
        assert_eq!(automorphism_count(&Graph::path(4)).unwrap(), 2);
    }

    #[test]
    fn rooted_automorphisms_fix_roots() {
        let cherry_center = RootedGraph::new(Graph::cherry(), vec![1]).unwrap();
        assert_eq!(rooted_automorphism_count(&cherry_center).unwrap(), 2);
        let cherry_leaf = RootedGraph::new(Graph::cherry(), vec![0]).unwrap();
        assert_eq!(rooted_automorphism_count(&cherry_leaf).unwrap(), 1);
        let k3 = RootedGraph::new(Graph::triangle(), vec![0, 1]).unwrap();
        assert_eq!(rooted_automorphism_count(&k3).unwrap(), 1);
    }

    #[test]
    fn size_cutoff_is_enforced() {
        let big = Graph::complete(BRUTE_FORCE_CUTOFF + 1);
        assert!(matches!(automorphism_count(&big), Err(Error::UnsupportedSize { .. })));
        assert!(are_isomorphic(&big, &big).is_err());
    }

    #[test]
    fn isomorphism_examples() {
        assert!(are_isomorphic(&Graph::complete(3), &Graph::cycle(3)).unwrap());
        assert!(!are_isomorphic(&Graph::path(4), &Graph::cycle(4)).unwrap());
        let e0 = RootedGraph::new(Graph::edge(), vec![0]).unwrap();
        let e1 = RootedGraph::new(Graph::edge(), vec![1]).unwrap();
        assert!(are_isomorphic_rooted(&e0, &e1).unwrap());
        let center = RootedGraph::new(Graph::cherry(), vec![1]).unwrap();
        let leaf = RootedGraph::new(Graph::cherry(), vec![0]).unwrap();
        assert!(!are_isomorphic_rooted(&center, &leaf).unwrap());
    }

    #[test]
    fn compatibility_of_rooted_graphs() {
        let a = RootedGraph::new(Graph::cherry(), vec![0]).unwrap();
        let b = RootedGraph::rooted_edge();
        assert!(rooted_compatible(&a, &b));
        let on_edge = RootedGraph::new(Graph::triangle(), vec![0, 1]).unwrap();
        let on_non_edge = RootedGraph::new(Graph::cherry(), vec![0, 2]).unwrap();
        assert!(!rooted_compatible(&on_edge, &on_non_edge));
        assert!(rooted_compatible(&on_edge, &on_edge.clone()));
    }

    #[test]
    fn finite_density_examples() {
        let e = Graph::edge();
        assert_eq!(
            induced_density_finite(&e, &Graph::triangle()).unwrap(),
            Ratio::from_integer(1)
        );
        assert_eq!(induced_density_finite(&e, &Graph::path(3)).unwrap(), Ratio::new(2, 3));
        assert_eq!(
            induced_density_finite(&Graph::triangle(), &e).unwrap(),
            Ratio::from_integer(0)
        );
    }

    #[test]
    fn three_vertex_classes_partition_unity() {
        let classes = Graph::isomorphism_classes(3).unwrap();
        assert_eq!(classes.len(), 4);
        assert_eq!(Graph::isomorphism_classes(4).unwrap().len(), 11);
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 5)]).unwrap();
        let total: Ratio<u128> = classes.iter().map(|h| induced_density_finite(h, &g).unwrap()).sum();
        assert_eq!(total, Ratio::from_integer(1));
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut c = 0;
        for_each_subset(7, 3, |_| c += 1);
        assert_eq!(c, 35);
        let mut c = 0;
        for_each_subset(4, 4, |_| c += 1);
        assert_eq!(c, 1);
        let mut c = 0;
        for_each_subset(4, 0, |_| c += 1);
        assert_eq!(c, 1);
        assert_eq!(binomial(10, 3), 120);
    }

    #[test]
    fn text_format_round_trip() {
        let text = "3 2\n0 1\n1 2\nroots: 1\nparts: 0 2 1\n";
        let f = GraphFile::parse(text).unwrap();
        assert_eq!(f.graph, Graph::cherry());
        assert_eq!(f.roots.as_deref(), Some(&[1][..]));
        assert_eq!(f.parts.as_deref(), Some(&[0, 2, 1][..]));
        assert_eq!(GraphFile::parse(&f.to_text()).unwrap(), f);
        assert!(GraphFile::parse("2 1\n0 0\n").is_err());
        assert!(GraphFile::parse("2 2\n0 1\n").is_err());
        assert!(GraphFile::parse("3 0\nroots: 1 1\n").is_err());
    }

    #[test]
    fn partition_spec_validation() {
        assert!(PartitionSpec::new(vec![0.5, 0.5], vec![0.2, 0.2]).is_err());
        assert!(PartitionSpec::new(vec![0.5, 0.4], vec![0.2, 0.3]).is_err());
        assert!(PartitionSpec::new(vec![1.0, 0.0], vec![0.2, 0.3]).is_err());
        let p = PartitionSpec::new(vec![0.25, 0.75], vec![0.1, 0.9]).unwrap();
        assert_eq!(p.intervals(), vec![(0.0, 0.25), (0.25, 1.0)]);
        assert_eq!(p.part_of(0.3), 1);
        assert_eq!(p.part_of(1.0), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph(max: usize) -> impl Strategy<Value = Graph> {
            (1..=max).prop_flat_map(|n| {
                proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                    let mut mask = 0u64;
                    for (i, b) in bits.iter().enumerate() {
                        if *b {
                            mask |= 1 << i;
                        }
                    }
                    Graph::from_pair_mask(n, mask)
                })
            })
        }

        proptest! {
            #[test]
            fn aut_divides_factorial(g in arb_graph(7)) {
                let a = automorphism_count(&g).unwrap();
                prop_assert_eq!(factorial(g.order()) % a, 0);
            }

            #[test]
            fn isomorphism_is_invariant_under_relabeling(g in arb_graph(7), seed in any::<u64>()) {
                let n = g.order();
                let mut perm: Vec<usize> = (0..n).collect();
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    perm.swap(i, (s >> 33) as usize % (i + 1));
                }
                let h = g.relabeled(&perm);
                prop_assert!(are_isomorphic(&g, &h).unwrap());
                prop_assert!(are_isomorphic(&h, &g).unwrap());
                prop_assert_eq!(canonical_mask(&g, 0), canonical_mask(&h, 0));
            }

            #[test]
            fn finite_densities_sum_to_one(g in arb_graph(8), k in 1usize..=4) {
                prop_assume!(k <= g.order());
                let total: Ratio<u128> = Graph::isomorphism_classes(k).unwrap()
                    .iter()
                    .map(|h| induced_density_finite(h, &g).unwrap())
                    .sum();
                prop_assert_eq!(total, Ratio::from_integer(1));
            }
        }
    }
}
