//! The periodic XZZX cluster lattice.
//!
//! Positions use doubled coordinates with period `2·d` per axis. A unit cell
//! `(x, y, z)` owns six qubits at `(2x, 2y, 2z)` plus one of the offsets
//! listed by [`LocalPosition`]: three on cube edges (one odd coordinate) and
//! three on cube faces (two odd coordinates). Qubits at doubled distance one
//! are adjacent, so every edge joins an edge qubit to a face qubit and every
//! qubit has degree four. Z-type qubits are the z-edges and the xy-faces,
//! which are never adjacent.
//!
//! Checks live on two interleaved cubic lattices: primal cells centred at
//! `(2x+1, 2y+1, 2z+1)`, supported on the six surrounding face qubits, and
//! dual cells centred at `(2x, 2y, 2z)`, supported on the six surrounding
//! edge qubits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{cluster_stabilizer, TypedGraph, VertexType};
use crate::pauli::{Pauli, PauliString, SparsePauli};

pub const QUBITS_PER_CELL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocalPosition {
    XEdge,
    YEdge,
    ZEdge,
    YzFace,
    XzFace,
    XyFace,
}

impl LocalPosition {
    pub const ALL: [LocalPosition; 6] = [
        LocalPosition::XEdge,
        LocalPosition::YEdge,
        LocalPosition::ZEdge,
        LocalPosition::YzFace,
        LocalPosition::XzFace,
        LocalPosition::XyFace,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Self {
        Self::ALL[k]
    }

    /// Offset from the cell's even corner, in doubled coordinates.
    pub fn offset(self) -> [usize; 3] {
        match self {
            LocalPosition::XEdge => [1, 0, 0],
            LocalPosition::YEdge => [0, 1, 0],
            LocalPosition::ZEdge => [0, 0, 1],
            LocalPosition::YzFace => [0, 1, 1],
            LocalPosition::XzFace => [1, 0, 1],
            LocalPosition::XyFace => [1, 1, 0],
        }
    }

    fn from_parity(p: [usize; 3]) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.offset() == p)
    }

    pub fn vertex_type(self) -> VertexType {
        match self {
            LocalPosition::ZEdge | LocalPosition::XyFace => VertexType::Z,
            _ => VertexType::X,
        }
    }

    pub fn is_edge(self) -> bool {
        self.index() < 3
    }

    /// Sublattice whose checks contain this qubit.
    pub fn sublattice(self) -> Sublattice {
        if self.is_edge() {
            Sublattice::Dual
        } else {
            Sublattice::Primal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LocalPosition::XEdge => "x-edge",
            LocalPosition::YEdge => "y-edge",
            LocalPosition::ZEdge => "z-edge",
            LocalPosition::YzFace => "yz-face",
            LocalPosition::XzFace => "xz-face",
            LocalPosition::XyFace => "xy-face",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    Primal,
    Dual,
}

impl Sublattice {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Sublattice::Primal => "primal",
            Sublattice::Dual => "dual",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("axis {axis} has length {len}; periodic axes need at least 2 cells")]
    TooSmall { axis: usize, len: usize },
    #[error("open boundaries are not supported")]
    OpenBoundary,
    #[error("lattice decoration inconsistent: {0}")]
    Decoration(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeDims {
    pub dx: usize,
    pub dy: usize,
    pub dz: usize,
    pub periodic: [bool; 3],
}

impl LatticeDims {
    pub fn new(dx: usize, dy: usize, dz: usize) -> Result<Self, LatticeError> {
        let d = Self {
            dx,
            dy,
            dz,
            periodic: [true; 3],
        };
        d.validate()?;
        Ok(d)
    }

    pub fn cubic(d: usize) -> Result<Self, LatticeError> {
        Self::new(d, d, d)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.periodic.iter().any(|p| !p) {
            return Err(LatticeError::OpenBoundary);
        }
        for (axis, len) in self.lengths().into_iter().enumerate() {
            if len < 2 {
                return Err(LatticeError::TooSmall { axis, len });
            }
        }
        Ok(())
    }

    pub fn lengths(&self) -> [usize; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn n_cells(&self) -> usize {
        self.dx * self.dy * self.dz
    }
}

/// A periodic XZZX cluster lattice with its adjacency graph.
#[derive(Clone, Debug)]
pub struct XzzxLattice {
    dims: LatticeDims,
    graph: TypedGraph,
}

/// Wraps a signed doubled coordinate into `[0, period)`.
fn wrap(c: i64, period: usize) -> usize {
    c.rem_euclid(period as i64) as usize
}

/// Builds the lattice. Fails for open boundaries or axes shorter than 2.
pub fn build_lattice(dims: LatticeDims) -> Result<XzzxLattice, LatticeError> {
    dims.validate()?;
    let n = QUBITS_PER_CELL * dims.n_cells();
    let types = (0..n)
        .map(|q| LocalPosition::from_index(q % QUBITS_PER_CELL).vertex_type())
        .collect();
    let mut lat = XzzxLattice {
        dims,
        graph: TypedGraph::new(types, &[]).expect("no edges yet"),
    };
    for q in 0..n {
        if !lat.position(q).is_edge() {
            continue;
        }
        let c = lat.coords(q);
        for nb in lat.doubled_neighbours(c) {
            let f = lat.qubit_at(nb).expect("neighbour of an edge qubit is a face qubit");
            lat.graph
                .add_edge(q, f)
                .map_err(|e| LatticeError::Decoration(e.to_string()))?;
        }
    }
    Ok(lat)
}

impl XzzxLattice {
    pub fn dims(&self) -> LatticeDims {
        self.dims
    }

    pub fn graph(&self) -> &TypedGraph {
        &self.graph
    }

    pub fn n_qubits(&self) -> usize {
        self.graph.len()
    }

    /// Doubled-coordinate period along each axis.
    pub fn periods(&self) -> [usize; 3] {
        self.dims.lengths().map(|l| 2 * l)
    }

    pub fn cell_index(&self, cell: [usize; 3]) -> usize {
        let [dx, dy, _] = self.dims.lengths();
        (cell[2] * dy + cell[1]) * dx + cell[0]
    }

    pub fn cell_coords_of_index(&self, k: usize) -> [usize; 3] {
        let [dx, dy, _] = self.dims.lengths();
        [k % dx, (k / dx) % dy, k / (dx * dy)]
    }

    pub fn qubit_id(&self, cell: [usize; 3], pos: LocalPosition) -> usize {
        self.cell_index(cell) * QUBITS_PER_CELL + pos.index()
    }

    pub fn position(&self, q: usize) -> LocalPosition {
        LocalPosition::from_index(q % QUBITS_PER_CELL)
    }

    pub fn unit_cell_of(&self, q: usize) -> [usize; 3] {
        self.cell_coords_of_index(q / QUBITS_PER_CELL)
    }

    pub fn vertex_type(&self, q: usize) -> VertexType {
        self.graph.vertex_type(q)
    }

    /// Doubled coordinates of qubit `q`.
    pub fn coords(&self, q: usize) -> [usize; 3] {
        let c = self.unit_cell_of(q);
        let o = self.position(q).offset();
        [2 * c[0] + o[0], 2 * c[1] + o[1], 2 * c[2] + o[2]]
    }

    /// The qubit at (wrapped) doubled coordinates, if a qubit sits there.
    pub fn qubit_at(&self, c: [i64; 3]) -> Option<usize> {
        let p = self.periods();
        let w = [wrap(c[0], p[0]), wrap(c[1], p[1]), wrap(c[2], p[2])];
        let pos = LocalPosition::from_parity(w.map(|v| v % 2))?;
        Some(self.qubit_id(w.map(|v| v / 2), pos))
    }

    /// Doubled coordinates of the four neighbours.
    fn doubled_neighbours(&self, c: [usize; 3]) -> Vec<[i64; 3]> {
        let odd = c.map(|v| v % 2 == 1);
        let n_odd = odd.iter().filter(|&&o| o).count();
        let mut out = Vec::with_capacity(4);
        for axis in 0..3 {
            // From an edge qubit (one odd) step along an even axis; from a face
            // qubit (two odd) step along an odd axis.
            let step_ok = if n_odd == 1 { !odd[axis] } else { odd[axis] };
            if !step_ok {
                continue;
            }
            for s in [-1i64, 1] {
                let mut nb = c.map(|v| v as i64);
                nb[axis] += s;
                out.push(nb);
            }
        }
        out
    }

    /// Minimal-image doubled displacement from `a` to `b`, each component in
    /// `(-period/2, period/2]`.
    pub fn displacement(&self, a: [usize; 3], b: [usize; 3]) -> [i64; 3] {
        let p = self.periods();
        let mut d = [0i64; 3];
        for k in 0..3 {
            let per = p[k] as i64;
            let mut v = (b[k] as i64 - a[k] as i64).rem_euclid(per);
            if v > per / 2 {
                v -= per;
            }
            d[k] = v;
        }
        d
    }

    pub fn cells_per_sublattice(&self) -> usize {
        self.dims.n_cells()
    }

    /// Cells of both sublattices: primal ids first, then dual.
    pub fn n_cells(&self) -> usize {
        2 * self.dims.n_cells()
    }

    pub fn cell_id(&self, sub: Sublattice, cell: [usize; 3]) -> usize {
        sub.index() * self.dims.n_cells() + self.cell_index(cell)
    }

    pub fn cell_info(&self, id: usize) -> (Sublattice, [usize; 3]) {
        let per = self.dims.n_cells();
        let sub = if id < per {
            Sublattice::Primal
        } else {
            Sublattice::Dual
        };
        (sub, self.cell_coords_of_index(id % per))
    }

    /// Doubled coordinates of a cell centre.
    pub fn cell_center(&self, id: usize) -> [usize; 3] {
        let (sub, c) = self.cell_info(id);
        let o = match sub {
            Sublattice::Primal => 1,
            Sublattice::Dual => 0,
        };
        c.map(|v| 2 * v + o)
    }

    /// The cell whose centre sits at the (wrapped) doubled coordinates, if any.
    pub fn cell_at(&self, c: [i64; 3]) -> Option<usize> {
        let p = self.periods();
        let w = [wrap(c[0], p[0]), wrap(c[1], p[1]), wrap(c[2], p[2])];
        let par = w.map(|v| v % 2);
        let sub = match par {
            [1, 1, 1] => Sublattice::Primal,
            [0, 0, 0] => Sublattice::Dual,
            _ => return None,
        };
        Some(self.cell_id(sub, w.map(|v| v / 2)))
    }

    /// The six qubits around a cell centre, ordered `-x, +x, -y, +y, -z, +z`.
    pub fn cell_support(&self, id: usize) -> [usize; 6] {
        let c = self.cell_center(id).map(|v| v as i64);
        let mut out = [0usize; 6];
        for axis in 0..3 {
            for (k, s) in [-1i64, 1].into_iter().enumerate() {
                let mut p = c;
                p[axis] += s;
                out[2 * axis + k] = self.qubit_at(p).expect("cell faces are qubits");
            }
        }
        out
    }

    /// Letters of the cluster stabilizer centred at `q`.
    pub fn cluster_stabilizer_sparse(&self, q: usize) -> SparsePauli {
        let g = &self.graph;
        let mut terms = vec![(q as u32, g.vertex_type(q).basis())];
        terms.extend(
            g.neighbors(q)
                .iter()
                .map(|&w| (w as u32, g.vertex_type(w).neighbour_letter())),
        );
        SparsePauli::new(terms)
    }

    /// Letters of the cell stabilizer: the product of the cluster stabilizers
    /// centred on the cell's six faces.
    pub fn cell_stabilizer_sparse(&self, id: usize) -> SparsePauli {
        self.cell_support(id)
            .iter()
            .fold(SparsePauli::default(), |acc, &q| acc.mul(&self.cluster_stabilizer_sparse(q)))
    }

    /// The signed cell stabilizer on all qubits.
    pub fn cell_stabilizer(&self, id: usize) -> PauliString {
        self.cell_support(id)
            .iter()
            .fold(PauliString::identity(self.n_qubits()), |acc, &q| {
                acc.mul(&cluster_stabilizer(&self.graph, q))
            })
    }

    /// The single-qubit error that a measurement of `q` in its own basis
    /// detects: `Z` on X-type, `X` on Z-type.
    pub fn detectable_error(&self, q: usize) -> Pauli {
        self.vertex_type(q).neighbour_letter()
    }

    /// One line per qubit, then one line per edge.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let d = self.dims;
        writeln!(s, "# lattice {}x{}x{} periodic", d.dx, d.dy, d.dz).unwrap();
        writeln!(s, "# qubit id x y z position type (doubled coordinates)").unwrap();
        for q in 0..self.n_qubits() {
            let c = self.coords(q);
            writeln!(
                s,
                "qubit {q} {} {} {} {} {}",
                c[0],
                c[1],
                c[2],
                self.position(q).name(),
                self.vertex_type(q)
            )
            .unwrap();
        }
        for (a, b) in self.graph.edges() {
            writeln!(s, "edge {a} {b}").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cluster_stabilizers;

    fn lat(d: [usize; 3]) -> XzzxLattice {
        build_lattice(LatticeDims::new(d[0], d[1], d[2]).unwrap()).unwrap()
    }

    #[test]
    fn counts_on_small_lattices() {
        let l = lat([2, 2, 2]);
        assert_eq!(l.n_qubits(), 48);
        let z = (0..48).filter(|&q| l.vertex_type(q) == VertexType::Z).count();
        assert_eq!((48 - z, z), (32, 16));
        assert_eq!(l.graph().n_edges(), 12 * 8);
        let l = lat([3, 3, 4]);
        assert_eq!(l.n_qubits(), 216);
        assert!((0..216).all(|q| l.graph().degree(q) == 4));
    }

    #[test]
    fn no_zz_edges() {
        let l = lat([3, 2, 4]);
        l.graph().validate().unwrap();
        assert!(l
            .graph()
            .edges()
            .all(|(a, b)| l.vertex_type(a) == VertexType::X || l.vertex_type(b) == VertexType::X));
    }

    #[test]
    fn small_axes_rejected() {
        assert_eq!(
            LatticeDims::new(1, 3, 3).unwrap_err(),
            LatticeError::TooSmall { axis: 0, len: 1 }
        );
        let mut d = LatticeDims::cubic(3).unwrap();
        d.periodic[2] = false;
        assert_eq!(build_lattice(d).unwrap_err(), LatticeError::OpenBoundary);
    }

    #[test]
    fn coordinates_round_trip() {
        let l = lat([3, 2, 4]);
        for q in 0..l.n_qubits() {
            let c = l.coords(q).map(|v| v as i64);
            assert_eq!(l.qubit_at(c), Some(q));
        }
        for id in 0..l.n_cells() {
            let c = l.cell_center(id).map(|v| v as i64);
            assert_eq!(l.cell_at(c), Some(id));
        }
    }

    #[test]
    fn cell_stabilizers_commute_and_use_measurement_bases() {
        let l = lat([2, 2, 3]);
        let stabs = cluster_stabilizers(l.graph()).unwrap();
        for id in 0..l.n_cells() {
            let c = l.cell_stabilizer(id);
            assert!(!c.is_negative());
            assert!(stabs.iter().all(|s| s.commutes(&c)));
            let support = c.support();
            assert_eq!(support.len(), 6);
            for (q, p) in support {
                assert_eq!(p, l.vertex_type(q).basis());
                assert!(l.cell_support(id).contains(&q));
            }
            assert_eq!(l.cell_stabilizer_sparse(id).to_dense(l.n_qubits()), c);
        }
    }

    #[test]
    fn cell_stabilizers_flag_member_errors() {
        let l = lat([2, 2, 2]);
        for id in 0..l.n_cells() {
            let c = l.cell_stabilizer(id);
            for q in l.cell_support(id) {
                let e = PauliString::single(l.n_qubits(), q, l.detectable_error(q));
                assert!(!e.commutes(&c));
            }
        }
    }

    #[test]
    fn sublattice_products_are_identity() {
        let l = lat([2, 3, 2]);
        for sub in [Sublattice::Primal, Sublattice::Dual] {
            let n = l.n_qubits();
            let prod = (0..l.n_cells())
                .filter(|&id| l.cell_info(id).0 == sub)
                .fold(PauliString::identity(n), |acc, id| acc.mul(&l.cell_stabilizer(id)));
            assert!(prod.is_identity_letters());
            assert!(!prod.is_negative());
        }
    }

    #[test]
    fn dump_lists_every_qubit_and_edge() {
        let l = lat([2, 2, 2]);
        let d = l.dump();
        assert_eq!(d.lines().filter(|s| s.starts_with("qubit ")).count(), 48);
        assert_eq!(d.lines().filter(|s| s.starts_with("edge ")).count(), 96);
        assert!(d.contains("qubit 2 0 0 1 z-edge Z"));
    }
}
