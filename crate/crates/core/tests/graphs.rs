use std::collections::BTreeMap;

use bvmin::fixtures::{random_series, random_space, rng, FixtureRng, SeriesShape, SpaceRecipe};
use bvmin::graphs::{enumerate_connected, feynman_amplitude, graph_sum_all, graph_sum_connected, VertexType};
use bvmin::integrate::IntegrationProblem;
use bvmin::linalg::Matrix;
use bvmin::series::{FormalSeries, Monomial};
use bvmin::space::{FormKind, Generator, Parity, SpaceSpec, SuperSpace};
use bvmin::q;
use rand::Rng;

type Canon = (Vec<VertexType>, Vec<Vec<u32>>);

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest relabeling over all vertex permutations.
fn brute_canon(types: &[VertexType], adj: &[Vec<u32>]) -> Canon {
    let n = types.len();
    permutations(n)
        .into_iter()
        .map(|p| {
            let t: Vec<VertexType> = p.iter().map(|&i| types[i]).collect();
            let a: Vec<Vec<u32>> = p.iter().map(|&i| p.iter().map(|&j| adj[i][j]).collect()).collect();
            (t, a)
        })
        .min()
        .unwrap()
}

fn is_connected(adj: &[Vec<u32>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if adj[v][w] > 0 && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn matchings(free: &mut Vec<usize>, owner: &[usize], adj: &mut Vec<Vec<u32>>, emit: &mut dyn FnMut(&[Vec<u32>])) {
    let Some(first) = free.pop() else {
        emit(adj);
        return;
    };
    for i in 0..free.len() {
        let other = free.remove(i);
        let (a, b) = (owner[first], owner[other]);
        adj[a][b] += 1;
        if a != b {
            adj[b][a] += 1;
        }
        matchings(free, owner, adj, emit);
        adj[a][b] -= 1;
        if a != b {
            adj[b][a] -= 1;
        }
        free.insert(i, other);
    }
    free.push(first);
}

fn fact(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// Isomorphism classes with `|Aut|` from orbit counting over labeled
/// half-edge matchings.
fn oracle_classes(max_weight: u32) -> BTreeMap<Canon, u64> {
    let mut types = Vec::new();
    for g in 0..=max_weight / 2 {
        for j in 0..=max_weight {
            for k in 0..=max_weight {
                let t = VertexType::new(g, j, k);
                if 2 * g + j + k >= 3 && 2 * g + j + k - 2 <= max_weight - 2 {
                    types.push(t);
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    let mut multisets: Vec<Vec<VertexType>> = vec![vec![]];
    let mut frontier = multisets.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for m in &frontier {
            let used: u32 = m.iter().map(|t| 2 * t.genus + t.half_edges + t.legs - 2).sum();
            for t in &types {
                if m.last().is_some_and(|l| t < l) {
                    continue;
                }
                if used + 2 * t.genus + t.half_edges + t.legs - 2 <= max_weight - 2 {
                    let mut m2 = m.clone();
                    m2.push(*t);
                    next.push(m2);
                }
            }
        }
        multisets.extend(next.iter().cloned());
        frontier = next;
    }
    for m in multisets.into_iter().filter(|m| !m.is_empty()) {
        let mut owner = Vec::new();
        for (v, t) in m.iter().enumerate() {
            owner.extend(std::iter::repeat_n(v, t.half_edges as usize));
        }
        if owner.len() % 2 == 1 {
            continue;
        }
        let mut counts: BTreeMap<Canon, u64> = BTreeMap::new();
        let mut free: Vec<usize> = (0..owner.len()).rev().collect();
        let mut adj = vec![vec![0u32; m.len()]; m.len()];
        matchings(&mut free, &owner, &mut adj, &mut |a| {
            if is_connected(a) {
                *counts.entry(brute_canon(&m, a)).or_default() += 1;
            }
        });
        let mut group: u64 = m.iter().map(|t| fact(t.half_edges) * fact(t.legs)).product();
        let mut mult: BTreeMap<VertexType, u32> = BTreeMap::new();
        for t in &m {
            *mult.entry(*t).or_default() += 1;
        }
        group *= mult.values().map(|&n| fact(n)).product::<u64>();
        for (c, n) in counts {
            assert_eq!(group % n, 0);
            out.insert(c, group / n);
        }
    }
    out
}

#[test]
fn enumeration_matches_matching_oracle() {
    for n in 3..=6 {
        let oracle = oracle_classes(n);
        let ours: BTreeMap<Canon, u64> = enumerate_connected(n, 1, 1)
            .into_iter()
            .map(|c| (brute_canon(&c.vertices, &c.adjacency), c.aut))
            .collect();
        let listed = enumerate_connected(n, 1, 1).len();
        assert_eq!(listed, ours.len(), "duplicate classes at weight {n}");
        assert_eq!(ours, oracle, "weight {n}");
        for c in enumerate_connected(n, 1, 1) {
            assert!(c.weight() <= n);
            let g = c.to_stable_graph();
            assert_eq!(g.components(), 1);
            assert_eq!(g.genus_and_euler().0, c.genus() as i64);
        }
    }
}

#[test]
fn missing_sectors_prune_classes() {
    let all = enumerate_connected(6, 1, 1);
    let no_legs = enumerate_connected(6, 0, 1);
    let no_edges = enumerate_connected(6, 1, 0);
    assert!(no_legs.iter().all(|c| c.legs() == 0));
    assert_eq!(no_legs.len(), all.iter().filter(|c| c.legs() == 0).count());
    assert!(no_edges.iter().all(|c| c.vertices.len() == 1 && c.edge_count() == 0));
    assert_eq!(no_edges.len(), all.iter().filter(|c| c.edge_count() == 0).count());
}

fn acyclic_pair() -> SuperSpace {
    let mut d = Matrix::zeros(2, 2);
    d[(0, 1)] = q(1);
    SuperSpace::new(SpaceSpec {
        generators: vec![Generator::new("a", Parity::Even), Generator::new("b", Parity::Odd)],
        d,
        form: Matrix::from_i64_rows(&[&[0, 1], &[1, 0]]),
        kind: FormKind::OddSymmetric,
    })
    .unwrap()
}

#[test]
fn empty_graph_and_vanishing_interaction() {
    let prob = IntegrationProblem::new(&acyclic_pair()).unwrap();
    let zero = FormalSeries::zero(prob.w_alphabet().clone(), 6);
    assert!(graph_sum_connected(&zero, &prob, 6).unwrap().is_zero());
    assert_eq!(graph_sum_all(&zero, &prob, 6).unwrap(), FormalSeries::one(prob.h_alphabet().clone(), 4));
}

#[test]
fn flowers_reproduce_interaction_when_acyclic_part_vanishes() {
    let mut r = rng(5);
    let v = random_space(
        &mut r,
        SpaceRecipe {
            harmonic_pairs: 2,
            ..Default::default()
        },
    );
    let prob = IntegrationProblem::new(&v).unwrap();
    assert_eq!(prob.l_dim, 0);
    let f = random_series(&mut r, prob.w_alphabet(), &shape(6, prob.w.space().dim()));
    let c = graph_sum_connected(&f, &prob, 6).unwrap();
    assert_eq!(c, f.with_alphabet(prob.h_alphabet().clone()));
}

#[test]
fn figure_eight_on_a_quartic_vertex() {
    let prob = IntegrationProblem::new(&acyclic_pair()).unwrap();
    let c = q(5);
    let f = FormalSeries::monomial(prob.w_alphabet().clone(), 4, c.clone(), 0, &[("a", 4)]).unwrap();
    let two_point = prob.direct_integrate(&FormalSeries::monomial(prob.w_alphabet().clone(), 4, q(1), 0, &[("a", 2)]).unwrap()).unwrap();
    let p = two_point.coeff(&Monomial(vec![]), 1);
    let classes = enumerate_connected(4, prob.h_dim, prob.l_dim);
    let eight = classes
        .iter()
        .find(|g| g.vertices == vec![VertexType::new(0, 4, 0)])
        .unwrap();
    assert_eq!(eight.aut, 8);
    assert_eq!(feynman_amplitude(eight, &f, &prob).constant_term(), q(24) * &c * &p * &p);
    let sum = graph_sum_connected(&f, &prob, 4).unwrap();
    let mut expected = FormalSeries::zero(prob.h_alphabet().clone(), 4);
    expected.add_term(Monomial(vec![]), 2, q(3) * &c * &p * &p);
    assert_eq!(sum, expected);
}

fn shape(cutoff: i32, vars: usize) -> SeriesShape {
    SeriesShape {
        cutoff,
        terms: 4,
        vars,
        min_weight: 3,
        hbar: (0, 1),
        parity: Some(Parity::Even),
    }
}

fn fixture(r: &mut FixtureRng, with_h: bool) -> SuperSpace {
    let recipe = SpaceRecipe {
        harmonic_pairs: if with_h { r.gen_range(1..=2) } else { 0 },
        acyclic_small: r.gen_range(1..=2),
        acyclic_large: r.gen_range(0..=1),
        scramble: r.gen_bool(0.7),
    };
    random_space(r, recipe)
}

#[test]
fn graph_sums_agree_with_gaussian_integration() {
    let mut checked = 0;
    for seed in 0..24u64 {
        let mut r = rng(100 + seed);
        let v = fixture(&mut r, seed % 3 != 0);
        let prob = IntegrationProblem::new(&v).unwrap();
        let cutoff = 4 + (seed % 5) as i32;
        let f = random_series(&mut r, prob.w_alphabet(), &shape(cutoff, prob.w.space().dim()));
        let z = prob.gaussian_exp_integrate(&f).unwrap();
        let all = graph_sum_all(&f, &prob, cutoff).unwrap();
        assert_eq!(all, z, "seed {seed}, cutoff {cutoff}");
        let conn = graph_sum_connected(&f, &prob, cutoff).unwrap();
        let log = z.log().unwrap().hbar_shift(1);
        assert!(conn.eq_upto(&log), "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 20);
}
