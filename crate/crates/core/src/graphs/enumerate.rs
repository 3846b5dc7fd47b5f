use std::collections::BTreeSet;

use super::{factorial, GraphClass, VertexType};

/// Stable vertex types with `2g + n - 2 <= max_weight - 2`. Internal
/// half-edges need `L_s != 0`, legs need `H != 0`.
pub fn vertex_types(max_weight: u32, h_dim: usize, l_dim: usize) -> Vec<VertexType> {
    let mut out = Vec::new();
    if max_weight < 3 {
        return out;
    }
    let budget = max_weight; // 2g + j + k <= max_weight
    for g in 0..=budget / 2 {
        for j in 0..=budget - 2 * g {
            if j > 0 && l_dim == 0 {
                continue;
            }
            for k in 0..=budget - 2 * g - j {
                if k > 0 && h_dim == 0 {
                    continue;
                }
                let t = VertexType::new(g, j, k);
                if t.is_stable() {
                    out.push(t);
                }
            }
        }
    }
    out.sort();
    out
}

/// `enumerate_connected`: one representative per isomorphism class of
/// connected stable graphs with `2 g(G) + |Leg(G)| <= max_weight`.
pub fn enumerate_connected(max_weight: u32, h_dim: usize, l_dim: usize) -> Vec<GraphClass> {
    let types = vertex_types(max_weight, h_dim, l_dim);
    let mut out = Vec::new();
    let mut profile = Vec::new();
    profiles(&types, 0, max_weight.saturating_sub(2), &mut profile, &mut |p| {
        out.extend(classes_for_profile(p));
    });
    out
}

fn profiles(
    types: &[VertexType],
    start: usize,
    budget: u32,
    current: &mut Vec<VertexType>,
    emit: &mut dyn FnMut(&[VertexType]),
) {
    if !current.is_empty() {
        emit(current);
    }
    for (i, t) in types.iter().enumerate().skip(start) {
        if t.excess() <= budget {
            current.push(*t);
            profiles(types, i, budget - t.excess(), current, emit);
            current.pop();
        }
    }
}

fn classes_for_profile(types: &[VertexType]) -> Vec<GraphClass> {
    let n = types.len();
    let total: u32 = types.iter().map(|t| t.half_edges).sum();
    if total % 2 == 1 {
        return Vec::new();
    }
    if n > 1 && (types.iter().any(|t| t.half_edges == 0) || (total / 2) < n as u32 - 1) {
        return Vec::new();
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut adj = vec![vec![0u32; n]; n];
    let mut rem: Vec<u32> = types.iter().map(|t| t.half_edges).collect();
    fill(0, 0, &mut adj, &mut rem, &mut |a| {
        if !connected(a) {
            return;
        }
        let (cert, aut_v) = canonical_form(types, a);
        if seen.insert(cert.clone()) {
            let adjacency = unflatten(n, &cert);
            let mut aut = aut_v;
            for v in 0..n {
                aut *= factorial(types[v].legs);
                aut *= (1u64 << adjacency[v][v]) * factorial(adjacency[v][v]);
                for w in (v + 1)..n {
                    aut *= factorial(adjacency[v][w]);
                }
            }
            out.push(GraphClass {
                vertices: types.to_vec(),
                adjacency,
                aut,
            });
        }
    });
    out
}

/// Fills row `v` from column `w` onwards.
fn fill(v: usize, w: usize, adj: &mut Vec<Vec<u32>>, rem: &mut Vec<u32>, emit: &mut dyn FnMut(&Vec<Vec<u32>>)) {
    let n = adj.len();
    if v == n {
        emit(adj);
        return;
    }
    if w == n {
        if rem[v] == 0 {
            fill(v + 1, v + 1, adj, rem, emit);
        }
        return;
    }
    if w == v {
        for c in 0..=rem[v] / 2 {
            adj[v][v] = c;
            rem[v] -= 2 * c;
            fill(v, w + 1, adj, rem, emit);
            rem[v] += 2 * c;
        }
        adj[v][v] = 0;
        return;
    }
    let max = rem[v].min(rem[w]);
    let range: Vec<u32> = if w == n - 1 {
        if rem[v] <= max {
            vec![rem[v]]
        } else {
            vec![]
        }
    } else {
        (0..=max).collect()
    };
    for c in range {
        adj[v][w] = c;
        adj[w][v] = c;
        rem[v] -= c;
        rem[w] -= c;
        fill(v, w + 1, adj, rem, emit);
        rem[v] += c;
        rem[w] += c;
    }
    adj[v][w] = 0;
    adj[w][v] = 0;
}

fn connected(adj: &[Vec<u32>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if !seen[w] && adj[v][w] > 0 {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn unflatten(n: usize, cert: &[u32]) -> Vec<Vec<u32>> {
    let mut adj = vec![vec![0u32; n]; n];
    let mut k = 0;
    for v in 0..n {
        for w in v..n {
            adj[v][w] = cert[k];
            adj[w][v] = cert[k];
            k += 1;
        }
    }
    adj
}

/// Lexicographically smallest upper triangle over type-preserving vertex
/// permutations, and the number of such permutations fixing the adjacency.
/// `types` must be sorted.
pub fn canonical_form(types: &[VertexType], adj: &[Vec<u32>]) -> (Vec<u32>, u64) {
    let n = types.len();
    let mut best: Option<Vec<u32>> = None;
    let mut stabilizer = 0u64;
    let original: Vec<u32> = flatten(adj, &(0..n).collect::<Vec<_>>());
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    permute(types, &mut perm, &mut used, &mut |p| {
        let cert = flatten(adj, p);
        if cert == original {
            stabilizer += 1;
        }
        if best.as_ref().is_none_or(|b| cert < *b) {
            best = Some(cert);
        }
    });
    (best.unwrap_or_default(), stabilizer)
}

fn flatten(adj: &[Vec<u32>], p: &[usize]) -> Vec<u32> {
    let n = p.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for v in 0..n {
        for w in v..n {
            out.push(adj[p[v]][p[w]]);
        }
    }
    out
}

fn permute(types: &[VertexType], perm: &mut Vec<usize>, used: &mut Vec<bool>, emit: &mut dyn FnMut(&[usize])) {
    let n = types.len();
    let v = perm.len();
    if v == n {
        emit(perm);
        return;
    }
    for u in 0..n {
        if !used[u] && types[u] == types[v] {
            used[u] = true;
            perm.push(u);
            permute(types, perm, used, emit);
            perm.pop();
            used[u] = false;
        }
    }
}
