//! Subgraph densities of graphons: plain, decorated and rooted densities, the
//! root measure `μ` and the unlabeling operator.
//!
//! Conventions. For a graph `H` on `n` vertices,
//! `d(H, W) = n!/|Aut H| ∫ c_H(x) dx`, where `c_H` multiplies `W` over edges
//! and `1 - W` over non-edges. A decorated graph restricts vertex `i` to its
//! part: `d(H, W) = n!/|Aut H| ∫ c_H(x) ∏ 1[x_i ∈ A_{l_i}] dx`, with `Aut H`
//! taken on the undecorated graph. A rooted graph with roots at `x` has
//! density `f!/|Aut_r H| ∫ ∏ W^{±}` over its `f` free vertices; a decorated
//! free vertex is drawn from its part, i.e. integrated against `1[y ∈ A]/|A|`.
//! Finally `⟦D⟧ = m!/|Aut H0| ∫ c_{H0}(x) 1[roots in their parts] D(x) dx`,
//! so that `E_μ[D] = ⟦D⟧ / d(H0, W)`.

pub(crate) mod engine;
pub mod mc;
pub(crate) mod quad;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expressions::{DensityExpression, GraphTerm};
use crate::graphon::Graphon;
use crate::graphs::{DecoratedGraph, Graph, RootedGraph, BRUTE_FORCE_CUTOFF};
use engine::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    Quadrature,
    ExactStep,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::Quadrature => "quadrature",
            Method::ExactStep => "exact-step",
        }
    }

    /// The least exact of two methods.
    fn combine(self, other: Method) -> Method {
        use Method::*;
        match (self, other) {
            (MonteCarlo, _) | (_, MonteCarlo) => MonteCarlo,
            (Quadrature, _) | (_, Quadrature) => Quadrature,
            _ => ExactStep,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "mc" | "monte-carlo" => Ok(Method::MonteCarlo),
            "quad" | "quadrature" => Ok(Method::Quadrature),
            "exact" | "exact-step" => Ok(Method::ExactStep),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Work allowance of a numeric evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Monte Carlo sample count.
    pub samples: u64,
    /// Uniform quadrature cells per axis, used alongside kernel breakpoints.
    pub grid: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: 1_000_000,
            grid: 1024,
            seed: 0,
        }
    }
}

impl Budget {
    pub fn with_seed(self, seed: u64) -> Budget {
        Budget { seed, ..self }
    }

    pub fn with_samples(self, samples: u64) -> Budget {
        Budget { samples, ..self }
    }
}

/// A numeric value with its standard error, work spent and method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Samples drawn or kernel evaluations made.
    pub budget: u64,
    pub method: Method,
}

impl Estimate {
    pub fn exact(value: f64, budget: u64, method: Method) -> Estimate {
        Estimate {
            value,
            stderr: 0.0,
            budget,
            method,
        }
    }

    pub fn constant(value: f64) -> Estimate {
        Estimate::exact(value, 0, Method::ExactStep)
    }

    pub fn scale(self, c: f64) -> Estimate {
        Estimate {
            value: c * self.value,
            stderr: c.abs() * self.stderr,
            ..self
        }
    }

    /// Sum of independent estimates.
    pub fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            stderr: self.stderr.hypot(o.stderr),
            budget: self.budget + o.budget,
            method: self.method.combine(o.method),
        }
    }

    pub fn sub(self, o: Estimate) -> Estimate {
        self.add(o.scale(-1.0))
    }

    /// Product of independent estimates.
    pub fn mul(self, o: Estimate) -> Estimate {
        let (a, b) = (self.value, o.value);
        let (sa, sb) = (self.stderr, o.stderr);
        let var = a * a * sb * sb + b * b * sa * sa + sa * sa * sb * sb;
        Estimate {
            value: a * b,
            stderr: var.sqrt(),
            budget: self.budget + o.budget,
            method: self.method.combine(o.method),
        }
    }

    /// Ratio by the delta method.
    pub fn div(self, o: Estimate) -> Estimate {
        let (a, b) = (self.value, o.value);
        let rel = (self.stderr / a).hypot(o.stderr / b);
        let value = a / b;
        let stderr = if a == 0.0 {
            self.stderr / b.abs()
        } else {
            (value * rel).abs()
        };
        Estimate {
            value,
            stderr,
            budget: self.budget + o.budget,
            method: self.method.combine(o.method),
        }
    }

    /// `|value - target| <= max(tol, k * stderr)`.
    pub fn agrees_with(&self, target: f64, k: f64, tol: f64) -> bool {
        (self.value - target).abs() <= tol.max(k * self.stderr)
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > BRUTE_FORCE_CUTOFF {
        Err(Error::UnsupportedSize {
            order,
            cutoff: BRUTE_FORCE_CUTOFF,
        })
    } else {
        Ok(())
    }
}

/// `d(H, W)`. `method = None` picks exact summation for piecewise constant
/// kernels, quadrature for at most two vertices, Monte Carlo otherwise.
pub fn graphon_density(h: &Graph, w: &Graphon, method: Option<Method>, budget: &Budget) -> Result<Estimate> {
    check_order(h.order())?;
    Problem::plain(h, None, w)?.run(w, method, budget, 0)
}

/// Density of an unrooted decorated graph; labels index the graphon's partition.
pub fn decorated_density(h: &DecoratedGraph, w: &Graphon, method: Option<Method>, budget: &Budget) -> Result<Estimate> {
    check_order(h.graph().order())?;
    if h.rooted().root_count() > 0 {
        return Err(Error::Unsupported(
            "rooted decorated graphs have no unconditional density; use unlabel".into(),
        ));
    }
    let spec = w
        .partition()
        .ok_or_else(|| Error::PartitionMismatch("graphon carries no partition metadata".into()))?;
    h.check_against(spec)?;
    Problem::plain(h.graph(), Some(h.parts()), w)?.run(w, method, budget, 0)
}

fn rooted_term_density(term: GraphTerm, w: &Graphon, roots: &[f64], budget: &Budget) -> Result<Estimate> {
    check_order(term.graph().order())?;
    if roots.len() != term.graph().root_count() {
        return Err(Error::InvalidParameter(format!(
            "{} root coordinates for {} roots",
            roots.len(),
            term.graph().root_count()
        )));
    }
    if let Some(x) = roots.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutOfDomain {
            what: "root coordinate",
            value: *x,
        });
    }
    let expr = DensityExpression::Term(term);
    let problem = Problem::rooted(&expr, w)?;
    if problem.c0(w, roots) == 0.0 {
        return Err(Error::DegenerateRoots);
    }
    let plan = problem.only_plan();
    let free = Problem::plan_free(plan);
    if w.is_piecewise_constant() && free <= 3 {
        let v = problem.term_exact(w, plan, roots, &w.breakpoints());
        Ok(Estimate::exact(v, 0, Method::ExactStep))
    } else if free <= 1 {
        let grid = w.quadrature_grid(budget.grid);
        let (v, n) = problem.term_quad(w, plan, roots, &w.breakpoints(), grid);
        Ok(Estimate::exact(v, n, Method::Quadrature))
    } else {
        Ok(mc::integrate(&[mc::Stratum::unit(0)], budget, 0, |_, rng| {
            problem.term_sample(w, plan, roots, rng)
        }))
    }
}

/// Density of `h` with its roots fixed at `roots` (in root-label order).
pub fn rooted_density(h: &RootedGraph, w: &Graphon, roots: &[f64], budget: &Budget) -> Result<Estimate> {
    rooted_term_density(GraphTerm::rooted(h.clone()), w, roots, budget)
}

/// Rooted density of a decorated graph; free vertices are drawn from their parts.
pub fn rooted_density_decorated(h: &DecoratedGraph, w: &Graphon, roots: &[f64], budget: &Budget) -> Result<Estimate> {
    rooted_term_density(GraphTerm::decorated(h.clone()), w, roots, budget)
}

/// A root tuple drawn from `μ` for the root type `h0` (optionally with its
/// vertices restricted to parts), by rejection against `c_{H0} <= 1`.
pub fn root_measure_sample(h0: &Graph, parts: Option<&[usize]>, w: &Graphon, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_order(h0.order())?;
    Problem::plain(h0, parts, w)?.sample_roots(w, rng)
}

/// `⟦D⟧` for a rooted expression `D`.
pub fn unlabel(d: &DensityExpression, w: &Graphon, method: Option<Method>, budget: &Budget) -> Result<Estimate> {
    unlabel_stream(d, w, method, budget, 0)
}

pub(crate) fn unlabel_stream(
    d: &DensityExpression,
    w: &Graphon,
    method: Option<Method>,
    budget: &Budget,
    stream: u64,
) -> Result<Estimate> {
    let problem = Problem::rooted(d, w)?;
    if problem.root_count() >= 2 {
        let mass = problem.root_type_only().run(w, None, budget, stream ^ 0xD0)?;
        if mass.value <= 1e-12 && mass.value <= 3.0 * mass.stderr {
            return Err(Error::ZeroMass(format!("d(H0, W) = {:.3e}", mass.value)));
        }
    }
    problem.run(w, method, budget, stream)
}

/// `d(H0, W)` for the root type of `D`, including root decorations.
pub fn root_type_density(
    d: &DensityExpression,
    w: &Graphon,
    method: Option<Method>,
    budget: &Budget,
) -> Result<Estimate> {
    Problem::rooted(d, w)?.root_type_only().run(w, method, budget, 1)
}

/// `E_μ[D]` estimated directly: `budget.samples` root tuples are drawn from
/// `μ` by rejection and `D` is evaluated at each.
pub fn mu_expectation(d: &DensityExpression, w: &Graphon, budget: &Budget) -> Result<Estimate> {
    let problem = Problem::rooted(d, w)?;
    let failed = std::sync::atomic::AtomicBool::new(false);
    let est = mc::integrate(&[mc::Stratum::unit(0)], budget, 2, |_, rng| {
        match problem.sample_roots(w, rng) {
            Ok(x) => problem.value_at(w, &x, budget, rng),
            Err(_) => {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        }
    });
    if failed.into_inner() {
        return Err(Error::ZeroMass("rejection sampling of μ did not accept".into()));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{Part, RademacherLayout};
    use rand::SeedableRng;

    fn quick() -> Budget {
        Budget {
            samples: 200_000,
            grid: 1024,
            seed: 5,
        }
    }

    #[test]
    fn edge_density_examples() {
        let c = Graphon::constant(0.5).unwrap();
        let e = graphon_density(&Graph::edge(), &c, None, &quick()).unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
        assert_eq!(e.method, Method::ExactStep);
        let h = Graphon::half();
        let q = graphon_density(&Graph::edge(), &h, Some(Method::Quadrature), &quick()).unwrap();
        assert!((q.value - 0.5).abs() < 1e-12);
        let m = graphon_density(&Graph::edge(), &h, Some(Method::MonteCarlo), &quick()).unwrap();
        assert!(m.agrees_with(0.5, 3.0, 0.0), "{m:?}");
    }

    /// `d(K3, W_Δ)` by a `2^10`-per-axis midpoint grid, counted exactly.
    fn triangle_half_oracle() -> f64 {
        let n = 1usize << 10;
        let mut count: u64 = 0;
        for i in 0..n {
            for j in 0..n {
                if i + j + 1 < n {
                    continue;
                }
                // k with k >= n-1-i and k >= n-1-j
                let lo = (n - 1 - i).max(n - 1 - j);
                count += (n - lo) as u64;
            }
        }
        count as f64 / (n as f64).powi(3)
    }

    #[test]
    fn triangle_in_half_graphon() {
        let v = triangle_half_oracle();
        assert!((v - 0.25).abs() < 2e-3);
        let e = graphon_density(&Graph::triangle(), &Graphon::half(), None, &quick()).unwrap();
        assert_eq!(e.method, Method::MonteCarlo);
        assert!((e.value - v).abs() <= 3.0 * e.stderr + 1e-3, "{e:?} vs {v}");
    }

    #[test]
    fn three_vertex_classes_sum_to_one() {
        let classes = Graph::isomorphism_classes(3).unwrap();
        for w in [Graphon::half(), Graphon::rademacher(), Graphon::constant(0.3).unwrap()] {
            let mut total = Estimate::constant(0.0);
            for h in &classes {
                total = total.add(graphon_density(h, &w, None, &quick()).unwrap());
            }
            assert!((total.value - 1.0).abs() <= 3.0 * total.stderr + 1e-9, "{total:?}");
        }
    }

    #[test]
    fn decorated_examples_on_rademacher() {
        let w = Graphon::rademacher();
        let b = quick();
        let idx = |p: Part| p.index();
        let ad = DecoratedGraph::unrooted(Graph::edge(), vec![idx(Part::A), idx(Part::D)]).unwrap();
        assert_eq!(
            decorated_density(&ad, &w, Some(Method::Quadrature), &b).unwrap().value,
            0.0
        );
        let aa = DecoratedGraph::unrooted(Graph::empty(2), vec![0, 0]).unwrap();
        let q = decorated_density(&aa, &w, Some(Method::Quadrature), &b).unwrap();
        assert!((q.value - 1.0 / 243.0).abs() < 1e-6, "{q:?}");
        let bb = DecoratedGraph::unrooted(Graph::edge(), vec![idx(Part::B), idx(Part::B)]).unwrap();
        let q = decorated_density(&bb, &w, None, &b).unwrap();
        assert!((q.value - 1.0 / 162.0).abs() < 1e-6, "{q:?}");
        let bad = DecoratedGraph::unrooted(Graph::edge(), vec![0, 9]).unwrap();
        assert!(matches!(
            decorated_density(&bad, &w, None, &b),
            Err(Error::PartitionMismatch(_))
        ));
        let no_parts = Graphon::half();
        assert!(decorated_density(&ad, &no_parts, None, &b).is_err());
    }

    #[test]
    fn rooted_edge_density() {
        let e1 = RootedGraph::rooted_edge();
        let c = Graphon::constant(0.3).unwrap();
        let v = rooted_density(&e1, &c, &[0.42], &quick()).unwrap();
        assert!((v.value - 0.3).abs() < 1e-15);
        let h = Graphon::half();
        for x in [0.1, 0.37, 0.8] {
            let v = rooted_density(&e1, &h, &[x], &quick()).unwrap();
            assert!((v.value - x).abs() < 1e-12);
        }
        let two = RootedGraph::new(Graph::edge(), vec![0, 1]).unwrap();
        assert!(matches!(
            rooted_density(&two, &h, &[0.1, 0.2], &quick()),
            Err(Error::DegenerateRoots)
        ));
    }

    #[test]
    fn nested_common_neighbourhoods_in_a() {
        // Two roots in the same dyadic block of A (a non-edge); the B
        // neighbourhood of a root at fraction u is {v : u + v <= 1}, so the
        // common neighbourhood has measure a (1 - max(u1, u2)).
        let w = Graphon::rademacher();
        let l = RademacherLayout;
        let cherry = Graph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let h = DecoratedGraph::new(
            RootedGraph::new(cherry, vec![0, 1]).unwrap(),
            vec![Part::A.index(), Part::A.index(), Part::B.index()],
        )
        .unwrap();
        for (u1, u2) in [(0.05, 0.3), (0.55, 0.7), (0.8, 0.85)] {
            let v = rooted_density_decorated(&h, &w, &[l.point(Part::A, u1), l.point(Part::A, u2)], &quick()).unwrap();
            let expect = 1.0 - f64::max(u1, u2);
            assert!((v.value - expect).abs() < 2e-3, "{u1},{u2}: {v:?}");
        }
    }

    #[test]
    fn root_measure_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = Graphon::half();
        for _ in 0..10_000 {
            let x = root_measure_sample(&Graph::edge(), None, &h, &mut rng).unwrap();
            assert!(x[0] + x[1] >= 1.0);
        }
        let x = root_measure_sample(&Graph::empty(1), None, &h, &mut rng).unwrap();
        assert_eq!(x.len(), 1);
        let zero = Graphon::constant(0.0).unwrap();
        assert!(matches!(
            root_measure_sample(&Graph::edge(), None, &zero, &mut rng),
            Err(Error::ZeroMass(_))
        ));
    }

    #[test]
    fn estimate_arithmetic() {
        let a = Estimate {
            value: 2.0,
            stderr: 0.3,
            budget: 10,
            method: Method::MonteCarlo,
        };
        let b = Estimate::constant(3.0);
        let s = a.add(b);
        assert_eq!(s.value, 5.0);
        assert_eq!(s.stderr, 0.3);
        assert_eq!(s.method, Method::MonteCarlo);
        let p = a.mul(b);
        assert_eq!(p.value, 6.0);
        assert!((p.stderr - 0.9).abs() < 1e-15);
        assert!(b.mul(b).stderr == 0.0);
        assert_eq!("quad".parse::<Method>().unwrap(), Method::Quadrature);
    }
}
