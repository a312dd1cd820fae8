//! Decorated graphs and their generalized cluster states.
//!
//! Every vertex is an X-type or Z-type qubit. The stabilizer centred at `v`
//! carries `X_v` (X-type) or `Z_v` (Z-type), an `X` on every Z-type
//! neighbour and a `Z` on every X-type neighbour. Z-type vertices are never
//! adjacent.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Pauli, PauliString};
use crate::tableau::StabilizerTableau;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexType {
    X,
    Z,
}

impl VertexType {
    /// Letter of the centre term and of the measurement basis.
    pub fn basis(self) -> Pauli {
        match self {
            VertexType::X => Pauli::X,
            VertexType::Z => Pauli::Z,
        }
    }

    /// Letter a vertex of this type receives from a neighbour's stabilizer.
    pub fn neighbour_letter(self) -> Pauli {
        match self {
            VertexType::X => Pauli::Z,
            VertexType::Z => Pauli::X,
        }
    }
}

impl fmt::Display for VertexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VertexType::X => "X",
            VertexType::Z => "Z",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) joins two Z-type vertices")]
    ZzEdge(usize, usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
}

/// Simple undirected graph with X/Z vertex labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedGraph {
    types: Vec<VertexType>,
    adj: Vec<Vec<usize>>,
}

impl TypedGraph {
    pub fn new(types: Vec<VertexType>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self {
            adj: vec![Vec::new(); types.len()],
            types,
        };
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn vertex_type(&self, v: usize) -> VertexType {
        self.types[v]
    }

    pub fn types(&self) -> &[VertexType] {
        &self.types
    }

    pub fn set_vertex_type(&mut self, v: usize, t: VertexType) -> Result<(), GraphError> {
        if t == VertexType::Z && self.adj[v].iter().any(|&w| self.types[w] == VertexType::Z) {
            let w = *self.adj[v]
                .iter()
                .find(|&&w| self.types[w] == VertexType::Z)
                .unwrap();
            return Err(GraphError::ZzEdge(v.min(w), v.max(w)));
        }
        self.types[v] = t;
        Ok(())
    }

    /// Sorted neighbour list.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn add_vertex(&mut self, t: VertexType) -> usize {
        self.types.push(t);
        self.adj.push(Vec::new());
        self.types.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        let n = self.types.len();
        for v in [a, b] {
            if v >= n {
                return Err(GraphError::VertexOutOfRange(v));
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if self.types[a] == VertexType::Z && self.types[b] == VertexType::Z {
            return Err(GraphError::ZzEdge(a.min(b), a.max(b)));
        }
        let pos = match self.adj[a].binary_search(&b) {
            Ok(_) => return Err(GraphError::DuplicateEdge(a.min(b), a.max(b))),
            Err(p) => p,
        };
        self.adj[a].insert(pos, b);
        let pos = self.adj[b].binary_search(&a).unwrap_err();
        self.adj[b].insert(pos, a);
        Ok(())
    }

    /// Removes the edge if present; returns whether it existed.
    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        match self.adj[a].binary_search(&b) {
            Ok(p) => {
                self.adj[a].remove(p);
                let q = self.adj[b].binary_search(&a).expect("adjacency is symmetric");
                self.adj[b].remove(q);
                true
            }
            Err(_) => false,
        }
    }

    /// Re-checks every invariant. Construction through the public API keeps
    /// them, so this is for tests and debugging.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (a, ns) in self.adj.iter().enumerate() {
            for w in ns.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateEdge(a.min(w[0]), a.max(w[0])));
                }
            }
            for &b in ns {
                if a == b {
                    return Err(GraphError::SelfLoop(a));
                }
                if self.types[a] == VertexType::Z && self.types[b] == VertexType::Z {
                    return Err(GraphError::ZzEdge(a.min(b), a.max(b)));
                }
            }
        }
        Ok(())
    }
}

/// The stabilizer centred at `v`, with sign +1.
pub fn cluster_stabilizer(g: &TypedGraph, v: usize) -> PauliString {
    let mut s = PauliString::single(g.len(), v, g.vertex_type(v).basis());
    for &w in g.neighbors(v) {
        s.set(w, g.vertex_type(w).neighbour_letter());
    }
    s
}

/// One stabilizer per vertex, in vertex order.
pub fn cluster_stabilizers(g: &TypedGraph) -> Result<Vec<PauliString>, GraphError> {
    g.validate()?;
    Ok((0..g.len()).map(|v| cluster_stabilizer(g, v)).collect())
}

/// Tableau of the generalized cluster state on `g`.
///
/// The generalized cluster state is the ordinary graph state with a Hadamard
/// on every Z-type vertex, so the destabilizer of `v` is the single-qubit
/// neighbour letter on `v` itself.
pub fn tableau_from_graph(g: &TypedGraph) -> Result<StabilizerTableau, GraphError> {
    let stab = cluster_stabilizers(g)?;
    let n = g.len();
    let destab = (0..n)
        .map(|v| PauliString::single(n, v, g.vertex_type(v).neighbour_letter()))
        .collect();
    Ok(StabilizerTableau::from_rows_unchecked(destab, stab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::groups_equal;
    use VertexType::{X, Z};

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    /// Z-centred five-qubit star: centre 0, X-type arms 1..=4.
    fn z_star() -> TypedGraph {
        TypedGraph::new(vec![Z, X, X, X, X], &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()
    }

    #[test]
    fn two_vertex_cluster() {
        let g = TypedGraph::new(vec![X, Z], &[(0, 1)]).unwrap();
        let s = cluster_stabilizers(&g).unwrap();
        assert_eq!(s, vec![ps("XX"), ps("ZZ")]);
    }

    #[test]
    fn z_star_stabilizers() {
        let s = cluster_stabilizers(&z_star()).unwrap();
        assert_eq!(s[0], ps("ZZZZZ"));
        assert_eq!(s[1], ps("XXIII"));
        assert_eq!(s[4], ps("XIIIX"));
        assert!(s[0].commutes(&s[1]));
    }

    #[test]
    fn zz_edges_rejected() {
        assert_eq!(
            TypedGraph::new(vec![Z, Z], &[(0, 1)]).unwrap_err(),
            GraphError::ZzEdge(0, 1)
        );
        let mut g = TypedGraph::new(vec![X, Z], &[(0, 1)]).unwrap();
        assert!(g.set_vertex_type(0, Z).is_err());
        assert_eq!(g.add_edge(0, 1), Err(GraphError::DuplicateEdge(0, 1)));
        assert_eq!(g.add_edge(1, 1), Err(GraphError::SelfLoop(1)));
    }

    #[test]
    fn empty_graphs_are_product_states() {
        let all_x = tableau_from_graph(&TypedGraph::new(vec![X; 3], &[]).unwrap()).unwrap();
        let plus = StabilizerTableau::from_generators(vec![ps("XII"), ps("IXI"), ps("IIX")]).unwrap();
        assert!(groups_equal(&all_x, &plus));
        let all_z = tableau_from_graph(&TypedGraph::new(vec![Z; 3], &[]).unwrap()).unwrap();
        assert!(groups_equal(&all_z, &StabilizerTableau::zero_state(3)));
    }

    #[test]
    fn six_ring_tableau_matches_generators() {
        // Ring with types X Z X X Z X around the cycle.
        let types = vec![X, Z, X, X, Z, X];
        let edges: Vec<_> = (0..6).map(|k| (k, (k + 1) % 6)).collect();
        let g = TypedGraph::new(types, &edges).unwrap();
        let t = tableau_from_graph(&g).unwrap();
        assert!(t.is_consistent());
        let gens = StabilizerTableau::from_generators(cluster_stabilizers(&g).unwrap()).unwrap();
        assert!(groups_equal(&t, &gens));
        assert!(groups_equal(&gens, &t));
    }

    #[test]
    fn measuring_star_centre_gives_ghz_resource() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut t = tableau_from_graph(&z_star()).unwrap();
        t.measure_pauli(&ps("ZIIII"), Some(false), &mut rng).unwrap();
        let expected = StabilizerTableau::from_generators(vec![
            ps("ZIIII"),
            ps("IXXII"),
            ps("IIXXI"),
            ps("IIIXX"),
            ps("IZZZZ"),
        ])
        .unwrap();
        assert!(groups_equal(&t, &expected));
    }
}
