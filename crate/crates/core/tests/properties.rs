use graphonlab::density::{graphon_density, mu_expectation, root_type_density, rooted_density, unlabel};
use graphonlab::expressions::{check_constraint, evaluate_expression, Verdict};
use graphonlab::forcing::pseudorandom_constraints;
use graphonlab::graphon::MeasurePreservingMap;
use graphonlab::graphon::SectionFunction;
use graphonlab::graphs::{Graph, RootedGraph};
use graphonlab::vertexspace::{dw_distance, l1_distance};
use graphonlab::{Budget, DensityExpression, Estimate, Graphon, Method};
use proptest::prelude::*;

fn budget(seed: u64) -> Budget {
    Budget::default().with_samples(200_000).with_seed(seed)
}

fn arb_step(max_parts: usize) -> impl Strategy<Value = Graphon> {
    (1..=max_parts).prop_flat_map(|k| {
        (
            prop::collection::vec(0.2f64..1.0, k),
            prop::collection::vec(0.0f64..=1.0, k * (k + 1) / 2),
        )
            .prop_map(move |(raw, upper)| {
                let total: f64 = raw.iter().sum();
                let mut sizes: Vec<f64> = raw.iter().map(|r| r / total).collect();
                let head: f64 = sizes[..k - 1].iter().sum();
                sizes[k - 1] = 1.0 - head;
                let mut v = vec![vec![0.0; k]; k];
                let mut it = upper.into_iter();
                for i in 0..k {
                    for j in i..k {
                        let x = it.next().expect("enough values");
                        v[i][j] = x;
                        v[j][i] = x;
                    }
                }
                Graphon::step(&sizes, v).expect("valid step graphon")
            })
    })
}

fn arb_section(label: &'static str) -> impl Strategy<Value = SectionFunction> {
    (1usize..6).prop_flat_map(move |k| {
        (
            prop::collection::vec(0.01f64..0.99, k - 1),
            prop::collection::vec(0.0f64..=1.0, k),
        )
            .prop_map(move |(mut cuts, values)| {
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let bounds: Vec<f64> = std::iter::once(0.0).chain(cuts).chain(std::iter::once(1.0)).collect();
                let values = values[..bounds.len() - 1].to_vec();
                SectionFunction::step(label, bounds, values).expect("valid section")
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_step_matches_monte_carlo(w in arb_step(4), n in 2usize..=4, seed in any::<u64>()) {
        for h in Graph::isomorphism_classes(n).unwrap() {
            let exact = graphon_density(&h, &w, Some(Method::ExactStep), &budget(seed)).unwrap();
            let mc = graphon_density(&h, &w, Some(Method::MonteCarlo), &budget(seed)).unwrap();
            prop_assert_eq!(exact.stderr, 0.0);
            prop_assert!((exact.value - mc.value).abs() <= 4.0 * mc.stderr + 1e-12, "{:?} {:?} vs {:?}", h, exact, mc);
        }
    }

    #[test]
    fn class_densities_sum_to_one(w in arb_step(3), n in 1usize..=4) {
        let mut total = Estimate::constant(0.0);
        for h in Graph::isomorphism_classes(n).unwrap() {
            total = total.add(graphon_density(&h, &w, None, &budget(1)).unwrap());
        }
        prop_assert!((total.value - 1.0).abs() <= 3.0 * total.stderr + 1e-12, "{:?}", total);
    }

    #[test]
    fn l1_is_a_pseudometric(f in arb_section("f"), g in arb_section("g"), h in arb_section("h")) {
        let grid = 256;
        let d = |a: &SectionFunction, b: &SectionFunction| l1_distance(a, b, grid).unwrap().value;
        prop_assert_eq!(d(&f, &g), d(&g, &f));
        prop_assert_eq!(d(&f, &f), 0.0);
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 2.0 / grid as f64);
    }

    #[test]
    fn dw_is_bounded_by_l1(w in arb_step(3), f in arb_section("f"), g in arb_section("g")) {
        let grid = 256;
        let dw = dw_distance(&w, &f, &g, grid).unwrap().value;
        let l1 = l1_distance(&f, &g, grid).unwrap().value;
        prop_assert!(dw <= l1 + 1e-9, "{} > {}", dw, l1);
    }
}

#[test]
fn densities_are_invariant_under_measure_preserving_maps() {
    let maps = [
        MeasurePreservingMap::rotation(0.37).unwrap(),
        MeasurePreservingMap::tent(),
        MeasurePreservingMap::interval_exchange(&[0.2, 0.5, 0.3], &[2, 0, 1], &[false, true, false]).unwrap(),
    ];
    let w = Graphon::step(&[0.4, 0.6], vec![vec![0.9, 0.2], vec![0.2, 0.5]]).unwrap();
    let e1 = DensityExpression::rooted(RootedGraph::rooted_edge());
    let d = DensityExpression::mul(e1.clone(), e1);
    let base = unlabel(&d, &w, None, &budget(3)).unwrap();
    for (k, map) in maps.iter().enumerate() {
        let wp = w.apply_measure_preserving(map);
        let b = budget(10 + k as u64);
        let moved = mu_expectation(&d, &wp, &b)
            .unwrap()
            .mul(root_type_density(&d, &wp, None, &b).unwrap());
        let sigma = moved.stderr.hypot(base.stderr);
        assert!(
            (moved.value - base.value).abs() <= 3.0 * sigma,
            "{map:?}: {moved:?} vs {base:?}"
        );
        let tri = graphon_density(&Graph::triangle(), &wp, Some(Method::MonteCarlo), &b).unwrap();
        let tri0 = graphon_density(&Graph::triangle(), &w, Some(Method::ExactStep), &b).unwrap();
        assert!(
            (tri.value - tri0.value).abs() <= 3.0 * tri.stderr,
            "{map:?}: {tri:?} vs {tri0:?}"
        );
    }
}

#[test]
fn rooted_density_averaged_over_mu_is_the_unlabeled_ratio() {
    let w = Graphon::half();
    let h = RootedGraph::new(Graph::cherry(), vec![1]).unwrap();
    let d = DensityExpression::rooted(h.clone());
    // Induced cherry at its centre x: both leaves in [1-x,1] and not adjacent to each other.
    let closed = |x: f64| if x > 0.5 { (2.0 * x - 1.0).powi(2) / 2.0 } else { 0.0 };
    for (k, x) in [0.2, 0.55, 0.7, 0.9, 1.0].into_iter().enumerate() {
        let e = rooted_density(&h, &w, &[x], &budget(20 + k as u64)).unwrap();
        assert!((e.value - closed(x)).abs() <= 3.0 * e.stderr + 1e-12, "{x}: {e:?}");
    }
    let ratio = unlabel(&d, &w, None, &budget(4))
        .unwrap()
        .div(root_type_density(&d, &w, None, &budget(4)).unwrap());
    assert!((ratio.value - 1.0 / 12.0).abs() <= 3.0 * ratio.stderr, "{ratio:?}");
}

#[test]
fn degree_polynomial_on_a_two_part_step_graphon() {
    let (a, p, q, r) = (0.3, 0.8, 0.2, 0.5);
    let w = Graphon::step(&[a, 1.0 - a], vec![vec![p, q], vec![q, r]]).unwrap();
    let d = [a * p + (1.0 - a) * q, a * q + (1.0 - a) * r];
    let e1 = || DensityExpression::rooted(RootedGraph::rooted_edge());
    for j in 0..2 {
        let i = 1 - j;
        let expr = DensityExpression::unlabel(DensityExpression::sub(e1(), DensityExpression::constant(d[i])));
        let v = evaluate_expression(&expr, &w, None, &budget(5)).unwrap();
        let size = [a, 1.0 - a][j];
        let want = size * (d[j] - d[i]);
        assert!((v.value - want).abs() <= 3.0 * v.stderr + 1e-12, "{v:?} vs {want}");
    }
}

#[test]
fn pseudorandom_constraints_force_the_second_moment() {
    let w = Graphon::step(&[0.5, 0.5], vec![vec![0.3, 0.7], vec![0.7, 0.1]]).unwrap();
    let spec = w.partition().unwrap().clone();
    for c in pseudorandom_constraints(0, 1, 0.7, &spec).unwrap() {
        assert_eq!(
            check_constraint(&c, &w, 1e-9, None, &budget(6)).unwrap().verdict,
            Verdict::Satisfied
        );
    }
    // Second moment of the cross block, integrated directly.
    let n = 400;
    let mut m2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = 0.5 * (i as f64 + 0.5) / n as f64;
            let y = 0.5 + 0.5 * (j as f64 + 0.5) / n as f64;
            m2 += w.value(x, y).powi(2);
        }
    }
    m2 /= (n * n) as f64;
    assert!((m2 - 0.49).abs() < 1e-12);
}

#[test]
fn expression_arithmetic_is_linear_and_multiplicative() {
    let w = Graphon::half();
    let b = budget(8);
    let edge = DensityExpression::graph(Graph::edge());
    let cherry = DensityExpression::graph(Graph::cherry());
    let e = evaluate_expression(&edge, &w, None, &b).unwrap();
    let c = evaluate_expression(&cherry, &w, None, &b).unwrap();
    let sum = evaluate_expression(&DensityExpression::add(edge.clone(), cherry.clone()), &w, None, &b).unwrap();
    let prod = evaluate_expression(&DensityExpression::mul(edge, cherry), &w, None, &b).unwrap();
    let s = e.add(c);
    let p = e.mul(c);
    assert!((sum.value - s.value).abs() <= 3.0 * sum.stderr.hypot(s.stderr) + 1e-12);
    assert!((prod.value - p.value).abs() <= 3.0 * prod.stderr.hypot(p.stderr) + 1e-12);
}
