use std::collections::HashMap;

use num_traits::Zero;

use super::{enumerate_connected, factorial, GraphClass, GraphError};
use crate::integrate::IntegrationProblem;
use crate::series::{Alphabet, FormalSeries, Monomial, Var};
use crate::{q, Q};

const EXACT: i32 = i32::MAX / 4;

/// Components `f_{g,j,k}` of an integrand: `ħ^g` coefficient with `j`
/// factors from `L_s` and `k` from `ΠH`, in adapted coordinates.
struct Decorations {
    comps: HashMap<(u32, u32, u32), FormalSeries>,
}

fn decorate(f: &FormalSeries, prob: &IntegrationProblem) -> Decorations {
    let fz = prob.restrict_to_domain(&prob.to_adapted(f));
    let (h, l) = (prob.h_dim, prob.l_dim);
    let mut comps: HashMap<(u32, u32, u32), FormalSeries> = HashMap::new();
    for (key, c) in fz.terms() {
        let e = key.mono.exps();
        let k: u32 = e[..h].iter().sum();
        let j: u32 = e[h..h + l].iter().sum();
        let g = key.hbar.max(0) as u32;
        comps
            .entry((g, j, k))
            .or_insert_with(|| FormalSeries::zero(fz.alphabet().clone(), EXACT))
            .add_term(key.mono.clone(), 0, c.clone());
    }
    Decorations { comps }
}

/// Graph contributions, kept for inspection and export.
#[derive(Clone, Debug)]
pub struct GraphSummands {
    pub class: GraphClass,
    /// `F(G)` with unlabeled legs.
    pub amplitude: FormalSeries,
    /// `ħ^{g(G)} F(G) / |Aut(G)|`.
    pub contribution: FormalSeries,
}

/// `feynman_amplitude`: decorate vertices with components of `f`, contract
/// edges with the propagator, legs unlabeled.
pub fn feynman_amplitude(class: &GraphClass, f: &FormalSeries, prob: &IntegrationProblem) -> FormalSeries {
    let deco = decorate(f, prob);
    amplitude_with(&deco, class, prob)
}

fn amplitude_with(deco: &Decorations, class: &GraphClass, prob: &IntegrationProblem) -> FormalSeries {
    let legs_factor: u64 = class.vertices.iter().map(|t| factorial(t.legs)).product();
    bare_amplitude(deco, class, prob).scale(&q(legs_factor as i64))
}

/// Amplitude with labeled legs: `[Π_e D_e Π_v f_v^{(v)}]` at `L_s = 0`.
fn bare_amplitude(deco: &Decorations, class: &GraphClass, prob: &IntegrationProblem) -> FormalSeries {
    let (h, l) = (prob.h_dim, prob.l_dim);
    let n_v = class.vertices.len();
    let za = prob.adapted_alphabet();
    let h_alpha = prob.h_alphabet();
    let passive = za.len() - h - 2 * l;
    if n_v == 0 {
        return FormalSeries::one(h_alpha.clone(), EXACT);
    }

    let mut vars: Vec<Var> = za.vars()[..h].to_vec();
    for v in 0..n_v {
        for a in 0..l {
            let base = za.var(h + a);
            vars.push(Var {
                name: format!("{}@{v}", base.name),
                ..base.clone()
            });
        }
    }
    vars.extend(za.vars()[h + 2 * l..].iter().cloned());
    let copy_alpha = Alphabet::new(vars);
    let copy_idx = |v: usize, a: usize| h + v * l + a;

    let mut decorations = Vec::with_capacity(n_v);
    for (v, t) in class.vertices.iter().enumerate() {
        let Some(comp) = deco.comps.get(&(t.genus, t.half_edges, t.legs)) else {
            return FormalSeries::zero(h_alpha.clone(), EXACT);
        };
        let images: Vec<FormalSeries> = (0..za.len())
            .map(|i| {
                if i < h {
                    FormalSeries::var(copy_alpha.clone(), EXACT, i)
                } else if i < h + l {
                    FormalSeries::var(copy_alpha.clone(), EXACT, copy_idx(v, i - h))
                } else if i < h + 2 * l {
                    FormalSeries::zero(copy_alpha.clone(), EXACT)
                } else {
                    FormalSeries::var(copy_alpha.clone(), EXACT, h + n_v * l + (i - h - 2 * l))
                }
            })
            .collect();
        decorations.push(comp.substitute(&copy_alpha, &images, EXACT));
    }

    // breadth-first order keeps the set of open half-edges small
    let mut order = vec![0usize];
    let mut placed = vec![false; n_v];
    placed[0] = true;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        for w in 0..n_v {
            if !placed[w] && class.adjacency[v][w] > 0 {
                placed[w] = true;
                order.push(w);
            }
        }
        i += 1;
    }

    let prop = prob.propagator();
    let mut acc = FormalSeries::one(copy_alpha.clone(), EXACT);
    let mut done = vec![false; n_v];
    for &u in &order {
        acc = acc.mul(&decorations[u]);
        done[u] = true;
        for w in 0..n_v {
            if !done[w] {
                continue;
            }
            for _ in 0..class.adjacency[u][w] {
                let mut next = FormalSeries::zero(copy_alpha.clone(), EXACT);
                for a in 0..l {
                    let da = acc.derivative(copy_idx(u, a));
                    if da.is_zero() {
                        continue;
                    }
                    for b in 0..l {
                        if prop[(a, b)].is_zero() {
                            continue;
                        }
                        let dab = da.derivative(copy_idx(w, b));
                        next = next.add(&dab.scale(&prop[(a, b)]));
                    }
                }
                acc = next.with_cutoff(EXACT);
                if acc.is_zero() {
                    return FormalSeries::zero(h_alpha.clone(), EXACT);
                }
            }
        }
    }

    let mut out = FormalSeries::zero(h_alpha.clone(), EXACT);
    for (key, c) in acc.terms() {
        let e = key.mono.exps();
        if e[h..h + n_v * l].iter().any(|&x| x > 0) {
            continue;
        }
        let mut m: Vec<u32> = e[..h].to_vec();
        m.extend_from_slice(&e[h + n_v * l..]);
        debug_assert_eq!(m.len(), h + passive);
        out.add_term(Monomial(m), key.hbar, c.clone());
    }
    out
}

/// All connected contributions up to weight `cutoff`.
pub fn connected_summands(
    f: &FormalSeries,
    prob: &IntegrationProblem,
    cutoff: i32,
) -> Result<Vec<GraphSummands>, GraphError> {
    check_integrand(f)?;
    let deco = decorate(f, prob);
    let mut out = Vec::new();
    if cutoff < 3 {
        return Ok(out);
    }
    for class in enumerate_connected(cutoff as u32, prob.h_dim, prob.l_dim) {
        let t = class.vertices.iter().map(|t| (t.genus, t.half_edges, t.legs));
        if t.clone().any(|key| !deco.comps.contains_key(&key)) {
            continue;
        }
        let amplitude = amplitude_with(&deco, &class, prob);
        if amplitude.is_zero() {
            continue;
        }
        let contribution = amplitude
            .hbar_shift(class.genus() as i32)
            .scale(&Q::new(1.into(), (class.aut as i64).into()))
            .with_cutoff(cutoff);
        out.push(GraphSummands {
            class,
            amplitude,
            contribution,
        });
    }
    Ok(out)
}

fn check_integrand(f: &FormalSeries) -> Result<(), GraphError> {
    if let Some(t) = f.h_violation() {
        return Err(GraphError::Integration(Box::new(
            crate::integrate::IntegrationError::NotInH(t),
        )));
    }
    Ok(())
}

/// `graph_sum_connected`: `Σ_G ħ^{g(G)} F(G) / |Aut(G)|` over connected
/// stable graphs, truncated at `cutoff`. Equals `ħ log ∫ exp(f/ħ)`.
pub fn graph_sum_connected(f: &FormalSeries, prob: &IntegrationProblem, cutoff: i32) -> Result<FormalSeries, GraphError> {
    let mut sum = FormalSeries::zero(prob.h_alphabet().clone(), cutoff);
    for s in connected_summands(f, prob, cutoff)? {
        sum = sum.add(&s.contribution);
    }
    Ok(sum)
}

/// `graph_sum_all`: the sum over all stable graphs, `exp(connected / ħ)`;
/// exact up to weight `cutoff - 2`.
pub fn graph_sum_all(f: &FormalSeries, prob: &IntegrationProblem, cutoff: i32) -> Result<FormalSeries, GraphError> {
    let c = graph_sum_connected(f, prob, cutoff)?;
    c.hbar_shift(-1)
        .exp()
        .map_err(|e| GraphError::Malformed(e.to_string()))
}

