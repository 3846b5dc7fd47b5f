//! Stable graphs and the Feynman expansion of Gaussian integrals.
//!
//! A connected class is stored as a vertex list of types `(g, j, k)` (genus,
//! internal half-edges, legs) plus a symmetric adjacency matrix whose
//! diagonal counts loops.

mod amplitude;
mod enumerate;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use amplitude::{connected_summands, feynman_amplitude, graph_sum_all, graph_sum_connected, GraphSummands};
pub use enumerate::{canonical_form, enumerate_connected, vertex_types};

#[derive(Debug, Clone, Error)]
pub enum GraphError {
    #[error("vertex {0} violates stability 2g + n >= 3")]
    Unstable(usize),
    #[error("half-edge data is inconsistent: {0}")]
    Malformed(String),
    #[error(transparent)]
    Integration(#[from] Box<crate::integrate::IntegrationError>),
}

/// Vertex decoration: genus, internal half-edges, legs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexType {
    pub genus: u32,
    pub half_edges: u32,
    pub legs: u32,
}

impl VertexType {
    pub fn new(genus: u32, half_edges: u32, legs: u32) -> Self {
        VertexType {
            genus,
            half_edges,
            legs,
        }
    }

    pub fn valence(&self) -> u32 {
        self.half_edges + self.legs
    }

    pub fn is_stable(&self) -> bool {
        2 * self.genus + self.valence() >= 3
    }

    /// Contribution `2g + n - 2` to the weight identity.
    pub fn excess(&self) -> u32 {
        2 * self.genus + self.valence() - 2
    }
}

/// A stable graph in half-edge form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableGraph {
    pub genus: Vec<u32>,
    /// `attach[h]` is the vertex of half-edge `h`.
    pub attach: Vec<usize>,
    /// Involution on half-edges: 2-cycles are edges, fixed points legs.
    pub involution: Vec<usize>,
}

impl StableGraph {
    pub fn new(genus: Vec<u32>, attach: Vec<usize>, involution: Vec<usize>) -> Result<Self, GraphError> {
        let g = StableGraph {
            genus,
            attach,
            involution,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.attach.len();
        if self.involution.len() != n {
            return Err(GraphError::Malformed("attach and involution differ in length".into()));
        }
        for h in 0..n {
            if self.attach[h] >= self.genus.len() {
                return Err(GraphError::Malformed(format!("half-edge {h} attached to a missing vertex")));
            }
            let o = self.involution[h];
            if o >= n || self.involution[o] != h {
                return Err(GraphError::Malformed(format!("involution fails at {h}")));
            }
        }
        for v in 0..self.genus.len() {
            if 2 * self.genus[v] + self.valence(v) < 3 {
                return Err(GraphError::Unstable(v));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.genus.len()
    }

    pub fn valence(&self, v: usize) -> u32 {
        self.attach.iter().filter(|&&a| a == v).count() as u32
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.attach.len())
            .filter(|&h| self.involution[h] > h)
            .map(|h| (h, self.involution[h]))
            .collect()
    }

    pub fn legs(&self) -> Vec<usize> {
        (0..self.attach.len()).filter(|&h| self.involution[h] == h).collect()
    }

    pub fn components(&self) -> usize {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (a, b) in self.edges() {
            let (ra, rb) = (find(&mut parent, self.attach[a]), find(&mut parent, self.attach[b]));
            parent[ra] = rb;
        }
        (0..n).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// `genus_and_euler`: `g(G) = |E| - |V| + components + Σ g(v)` and
    /// `χ(G) = components - g(G)`.
    pub fn genus_and_euler(&self) -> (i64, i64) {
        let c = self.components() as i64;
        let g = self.edges().len() as i64 - self.vertex_count() as i64 + c
            + self.genus.iter().map(|&x| x as i64).sum::<i64>();
        (g, c - g)
    }

    /// Vertex types and adjacency matrix (loops on the diagonal).
    pub fn to_multigraph(&self) -> (Vec<VertexType>, Vec<Vec<u32>>) {
        let n = self.vertex_count();
        let mut adj = vec![vec![0u32; n]; n];
        for (a, b) in self.edges() {
            let (v, w) = (self.attach[a], self.attach[b]);
            if v == w {
                adj[v][v] += 1;
            } else {
                adj[v][w] += 1;
                adj[w][v] += 1;
            }
        }
        let mut legs = vec![0u32; n];
        for h in self.legs() {
            legs[self.attach[h]] += 1;
        }
        let types = (0..n)
            .map(|v| {
                let j = 2 * adj[v][v] + (0..n).filter(|&w| w != v).map(|w| adj[v][w]).sum::<u32>();
                VertexType::new(self.genus[v], j, legs[v])
            })
            .collect();
        (types, adj)
    }

    /// Half-edge form of a multigraph.
    pub fn from_multigraph(types: &[VertexType], adj: &[Vec<u32>]) -> Result<Self, GraphError> {
        let n = types.len();
        let mut attach = Vec::new();
        let mut involution = Vec::new();
        let pair = |attach: &mut Vec<usize>, inv: &mut Vec<usize>, v: usize, w: usize| {
            let h = attach.len();
            attach.push(v);
            attach.push(w);
            inv.push(h + 1);
            inv.push(h);
        };
        for v in 0..n {
            for w in v..n {
                for _ in 0..adj[v][w] {
                    pair(&mut attach, &mut involution, v, w);
                }
            }
        }
        for (v, t) in types.iter().enumerate() {
            for _ in 0..t.legs {
                let h = attach.len();
                attach.push(v);
                involution.push(h);
            }
        }
        let g = Self::new(types.iter().map(|t| t.genus).collect(), attach, involution)?;
        let (t2, _) = g.to_multigraph();
        if t2 != types {
            return Err(GraphError::Malformed("adjacency does not match half-edge counts".into()));
        }
        Ok(g)
    }
}

/// One isomorphism class of connected stable graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphClass {
    pub vertices: Vec<VertexType>,
    pub adjacency: Vec<Vec<u32>>,
    /// `|Aut(G)|`, including permutations of legs.
    pub aut: u64,
}

impl GraphClass {
    pub fn edge_count(&self) -> u32 {
        let n = self.vertices.len();
        (0..n).map(|v| (v..n).map(|w| self.adjacency[v][w]).sum::<u32>()).sum()
    }

    pub fn legs(&self) -> u32 {
        self.vertices.iter().map(|t| t.legs).sum()
    }

    /// Genus of the (connected) graph.
    pub fn genus(&self) -> u32 {
        self.edge_count() + 1 + self.vertices.iter().map(|t| t.genus).sum::<u32>() - self.vertices.len() as u32
    }

    /// `2 g(G) + |Leg(G)|`.
    pub fn weight(&self) -> u32 {
        2 * self.genus() + self.legs()
    }

    /// Automorphisms that fix every leg: `|Aut| / Π k_v!`.
    pub fn aut_fixing_legs(&self) -> u64 {
        self.aut / self.vertices.iter().map(|t| factorial(t.legs)).product::<u64>()
    }

    pub fn to_stable_graph(&self) -> StableGraph {
        StableGraph::from_multigraph(&self.vertices, &self.adjacency).expect("enumerated classes are valid")
    }

    pub fn to_json(&self) -> GraphJson {
        let n = self.vertices.len();
        let mut edges = Vec::new();
        for v in 0..n {
            for w in v..n {
                for _ in 0..self.adjacency[v][w] {
                    edges.push([v, w]);
                }
            }
        }
        GraphJson {
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, t)| GraphVertexJson { genus: t.genus, id })
                .collect(),
            edges,
            legs_per_vertex: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, t)| (id.to_string(), t.legs))
                .collect(),
            aut: self.aut,
        }
    }
}

pub fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GraphVertexJson {
    pub genus: u32,
    pub id: usize,
}

/// Graph export format.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GraphJson {
    pub vertices: Vec<GraphVertexJson>,
    pub edges: Vec<[usize; 2]>,
    pub legs_per_vertex: BTreeMap<String, u32>,
    pub aut: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_and_euler_examples() {
        // genus-1 vertex with one loop
        let g = StableGraph::new(vec![1], vec![0, 0], vec![1, 0]).unwrap();
        assert_eq!(g.genus_and_euler(), (2, -1));
        // bare genus-2 vertex
        let g = StableGraph::new(vec![2], vec![], vec![]).unwrap();
        assert_eq!(g.genus_and_euler(), (2, -1));
        // genus-0 tree: two trivalent vertices joined by an edge, four legs
        let g = StableGraph::new(vec![0, 0], vec![0, 1, 0, 0, 1, 1], vec![1, 0, 2, 3, 4, 5]).unwrap();
        assert_eq!(g.genus_and_euler(), (0, 1));
        assert_eq!(g.genus_and_euler().1, 2 - 1);
    }

    #[test]
    fn instability_is_rejected() {
        assert!(matches!(StableGraph::new(vec![0], vec![0, 0], vec![0, 1]), Err(GraphError::Unstable(0))));
        assert!(matches!(
            StableGraph::new(vec![0], vec![0, 0, 0], vec![1, 1, 2]),
            Err(GraphError::Malformed(_))
        ));
    }

    #[test]
    fn multigraph_roundtrip() {
        let types = vec![VertexType::new(0, 3, 0), VertexType::new(0, 3, 0)];
        let adj = vec![vec![0, 3], vec![3, 0]];
        let g = StableGraph::from_multigraph(&types, &adj).unwrap();
        assert_eq!(g.to_multigraph(), (types, adj));
        assert_eq!(g.genus_and_euler(), (2, -1));
    }
}
