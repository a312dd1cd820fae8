//! Syndrome graph: check cells as vertices, independently flippable error
//! mechanisms as edges.
//!
//! Every qubit contributes one single-qubit mechanism (`Z` on X-type, `X` on
//! Z-type) whose id equals the qubit id. Correlated mechanisms, products of
//! several single-qubit errors that flip exactly two cells between them, are
//! registered afterwards and get ids from `n_qubits` upward.
//!
//! Winding is tracked with one crossing bit per (sublattice, axis): a
//! mechanism sets the bit when its path crosses the periodic seam of that
//! axis. The parity of seam crossings along a closed cycle is its winding
//! parity.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeError, Sublattice, XzzxLattice};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    InPlaneX,
    InPlaneY,
    Vertical,
    /// In-plane with both x and y displacement.
    Diagonal,
    /// Vertical displacement combined with in-plane displacement.
    Oblique,
}

impl Orientation {
    pub fn from_displacement(d: [i32; 3]) -> Self {
        match (d[0] != 0, d[1] != 0, d[2] != 0) {
            (_, _, true) if d[0] == 0 && d[1] == 0 => Orientation::Vertical,
            (_, _, true) => Orientation::Oblique,
            (true, false, false) => Orientation::InPlaneX,
            (false, true, false) => Orientation::InPlaneY,
            _ => Orientation::Diagonal,
        }
    }

    pub fn is_in_plane(self) -> bool {
        matches!(
            self,
            Orientation::InPlaneX | Orientation::InPlaneY | Orientation::Diagonal
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::InPlaneX => "in-plane-x",
            Orientation::InPlaneY => "in-plane-y",
            Orientation::Vertical => "vertical",
            Orientation::Diagonal => "diagonal",
            Orientation::Oblique => "oblique",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    SingleQubit,
    Correlated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorMechanism {
    pub id: usize,
    pub kind: MechanismKind,
    /// Qubits carrying the detectable error, sorted.
    pub qubits: Vec<usize>,
    pub endpoints: [usize; 2],
    pub orientation: Orientation,
    /// z index of both endpoint cells when the mechanism is in-plane.
    pub plane: Option<usize>,
    pub sublattice: Sublattice,
    /// Displacement from `endpoints[0]` to `endpoints[1]` in cell units.
    pub displacement: [i32; 3],
    /// Seam-crossing bits, bit `3·sublattice + axis`.
    pub crossing: u8,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyndromeError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("error on qubit {qubit} flips {count} cells")]
    BadIncidence { qubit: usize, count: usize },
    #[error("correlated error on {0:?} does not form a path between two cells")]
    NotAPath(Vec<usize>),
    #[error("mechanism set leaves {0} defects; a cycle was required")]
    NotACycle(usize),
    #[error("mechanism id {0} out of range")]
    UnknownMechanism(usize),
}

/// Winding parities, bit `3·sublattice + axis`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Winding(pub u8);

impl Winding {
    pub fn bit(sub: Sublattice, axis: usize) -> u8 {
        1 << (3 * sub.index() + axis)
    }

    pub fn get(self, sub: Sublattice, axis: usize) -> bool {
        self.0 & Self::bit(sub, axis) != 0
    }

    pub fn is_trivial(self) -> bool {
        self.0 == 0
    }

    /// Per-axis parities of one sublattice.
    pub fn axes(self, sub: Sublattice) -> [bool; 3] {
        [0, 1, 2].map(|a| self.get(sub, a))
    }
}

impl fmt::Display for Winding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for sub in [Sublattice::Primal, Sublattice::Dual] {
            let a = self.axes(sub);
            write!(
                f,
                "{}({}{}{})",
                &sub.name()[..1],
                a[0] as u8,
                a[1] as u8,
                a[2] as u8
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyndromeGraph {
    n_qubits: usize,
    n_cells: usize,
    cell_z: Vec<u32>,
    mechanisms: Vec<ErrorMechanism>,
    ends: Vec<[u32; 2]>,
    crossing: Vec<u8>,
    correlated: HashMap<Vec<usize>, usize>,
}

/// Builds the syndrome graph. Incidence is found by testing every
/// detectable single-qubit error against every cell stabilizer.
pub fn build_syndrome_graph(lat: &XzzxLattice) -> Result<SyndromeGraph, SyndromeError> {
    let n = lat.n_qubits();
    let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); n];
    for cell in 0..lat.n_cells() {
        for &(q, letter) in lat.cell_stabilizer_sparse(cell).support() {
            let q = q as usize;
            if letter.anticommutes(lat.detectable_error(q)) {
                incidence[q].push(cell);
            }
        }
    }
    let periods = lat.periods();
    let mut mechanisms = Vec::with_capacity(n);
    for (q, cells) in incidence.into_iter().enumerate() {
        if cells.len() != 2 {
            return Err(SyndromeError::BadIncidence {
                qubit: q,
                count: cells.len(),
            });
        }
        let p = lat.coords(q);
        let d: Vec<[i64; 3]> = cells
            .iter()
            .map(|&c| lat.displacement(p, lat.cell_center(c)))
            .collect();
        let axis = (0..3).find(|&a| d[0][a] != 0).expect("cell centre differs from qubit");
        let unit = |v: [i64; 3]| (0..3).all(|k| (k == axis) == (v[k].abs() == 1) && (k == axis || v[k] == 0));
        if !(unit(d[0]) && unit(d[1]) && d[0][axis] == -d[1][axis]) {
            return Err(SyndromeError::BadIncidence { qubit: q, count: 2 });
        }
        let endpoints = if d[0][axis] < 0 {
            [cells[0], cells[1]]
        } else {
            [cells[1], cells[0]]
        };
        let sub = lat.position(q).sublattice();
        let seam = p[axis] == 0 || p[axis] + 1 == periods[axis];
        let crossing = if seam { Winding::bit(sub, axis) } else { 0 };
        let mut displacement = [0i32; 3];
        displacement[axis] = 1;
        let orientation = Orientation::from_displacement(displacement);
        let expected_vertical = lat.vertex_type(q) == crate::graph::VertexType::Z;
        if (orientation == Orientation::Vertical) != expected_vertical {
            return Err(LatticeError::Decoration(format!(
                "qubit {q} of type {} gives a {} mechanism",
                lat.vertex_type(q),
                orientation.name()
            ))
            .into());
        }
        let plane = (axis != 2).then(|| lat.cell_info(endpoints[0]).1[2]);
        mechanisms.push(ErrorMechanism {
            id: q,
            kind: MechanismKind::SingleQubit,
            qubits: vec![q],
            endpoints,
            orientation,
            plane,
            sublattice: sub,
            displacement,
            crossing,
        });
    }
    let cell_z = (0..lat.n_cells())
        .map(|c| lat.cell_info(c).1[2] as u32)
        .collect();
    let ends = mechanisms
        .iter()
        .map(|m| m.endpoints.map(|e| e as u32))
        .collect();
    let crossing = mechanisms.iter().map(|m| m.crossing).collect();
    Ok(SyndromeGraph {
        n_qubits: n,
        n_cells: lat.n_cells(),
        cell_z,
        mechanisms,
        ends,
        crossing,
        correlated: HashMap::new(),
    })
}

impl SyndromeGraph {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_mechanisms(&self) -> usize {
        self.mechanisms.len()
    }

    pub fn mechanism(&self, id: usize) -> &ErrorMechanism {
        &self.mechanisms[id]
    }

    pub fn mechanisms(&self) -> &[ErrorMechanism] {
        &self.mechanisms
    }

    /// Endpoint pairs indexed by mechanism id.
    pub fn ends(&self) -> &[[u32; 2]] {
        &self.ends
    }

    /// Crossing bits indexed by mechanism id.
    pub fn crossings(&self) -> &[u8] {
        &self.crossing
    }

    pub fn cell_plane(&self, cell: usize) -> usize {
        self.cell_z[cell] as usize
    }

    /// Registers the joint error on `qubits` as one mechanism, or returns the
    /// existing id. A single qubit maps to its own mechanism.
    pub fn register_correlated(&mut self, qubits: &[usize]) -> Result<usize, SyndromeError> {
        let mut key = qubits.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&q) = key.iter().find(|&&q| q >= self.n_qubits) {
            return Err(SyndromeError::UnknownMechanism(q));
        }
        match key.len() {
            0 => return Err(SyndromeError::NotAPath(key)),
            1 => return Ok(key[0]),
            _ => {}
        }
        if let Some(&id) = self.correlated.get(&key) {
            return Ok(id);
        }
        let parts: Vec<&ErrorMechanism> = key.iter().map(|&q| &self.mechanisms[q]).collect();
        let sub = parts[0].sublattice;
        if parts.iter().any(|m| m.sublattice != sub) {
            return Err(SyndromeError::NotAPath(key));
        }
        let mut odd: HashMap<usize, usize> = HashMap::new();
        for m in &parts {
            for e in m.endpoints {
                *odd.entry(e).or_default() += 1;
            }
        }
        let mut terminals: Vec<usize> = odd
            .iter()
            .filter(|(_, &c)| c % 2 == 1)
            .map(|(&e, _)| e)
            .collect();
        terminals.sort_unstable();
        if terminals.len() != 2 || odd.values().any(|&c| c > 2) {
            return Err(SyndromeError::NotAPath(key));
        }
        // Walk the path from the first terminal, orienting each part.
        let mut used = vec![false; parts.len()];
        let mut at = terminals[0];
        let mut displacement = [0i32; 3];
        let mut crossing = 0u8;
        for _ in 0..parts.len() {
            let Some(k) = (0..parts.len()).find(|&k| !used[k] && parts[k].endpoints.contains(&at))
            else {
                return Err(SyndromeError::NotAPath(key));
            };
            used[k] = true;
            let m = parts[k];
            let sign = if m.endpoints[0] == at { 1 } else { -1 };
            for (d, s) in displacement.iter_mut().zip(m.displacement) {
                *d += sign * s;
            }
            crossing ^= m.crossing;
            at = if m.endpoints[0] == at {
                m.endpoints[1]
            } else {
                m.endpoints[0]
            };
        }
        if at != terminals[1] {
            return Err(SyndromeError::NotAPath(key));
        }
        let orientation = Orientation::from_displacement(displacement);
        let endpoints = [terminals[0], terminals[1]];
        let plane = (displacement[2] == 0).then(|| self.cell_plane(endpoints[0]));
        let id = self.mechanisms.len();
        self.mechanisms.push(ErrorMechanism {
            id,
            kind: MechanismKind::Correlated,
            qubits: key.clone(),
            endpoints,
            orientation,
            plane,
            sublattice: sub,
            displacement,
            crossing,
        });
        self.ends.push(endpoints.map(|e| e as u32));
        self.crossing.push(crossing);
        self.correlated.insert(key, id);
        Ok(id)
    }

    /// Cells flipped an odd number of times, sorted.
    pub fn defects_from_error(&self, mechs: &[usize]) -> Vec<usize> {
        let mut flips: HashMap<usize, bool> = HashMap::new();
        for &m in mechs {
            for e in self.mechanisms[m].endpoints {
                *flips.entry(e).or_default() ^= true;
            }
        }
        let mut out: Vec<usize> = flips.into_iter().filter(|(_, f)| *f).map(|(c, _)| c).collect();
        out.sort_unstable();
        out
    }

    /// Winding parities of a cycle. Fails if `mechs` leaves defects.
    pub fn winding_parity(&self, mechs: &[usize]) -> Result<Winding, SyndromeError> {
        let defects = self.defects_from_error(mechs);
        if !defects.is_empty() {
            return Err(SyndromeError::NotACycle(defects.len()));
        }
        Ok(Winding(mechs.iter().fold(0, |acc, &m| acc ^ self.crossing[m])))
    }

    /// One line per mechanism.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# mechanism id kind qubits end0 end1 orientation plane sublattice dx dy dz"
        )
        .unwrap();
        for m in &self.mechanisms {
            let qs: Vec<String> = m.qubits.iter().map(|q| q.to_string()).collect();
            writeln!(
                s,
                "mechanism {} {} {} {} {} {} {} {} {} {} {}",
                m.id,
                match m.kind {
                    MechanismKind::SingleQubit => "single",
                    MechanismKind::Correlated => "correlated",
                },
                qs.join(","),
                m.endpoints[0],
                m.endpoints[1],
                m.orientation.name(),
                m.plane.map_or("-".to_string(), |p| p.to_string()),
                m.sublattice.name(),
                m.displacement[0],
                m.displacement[1],
                m.displacement[2]
            )
            .unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexType;
    use crate::lattice::{build_lattice, LatticeDims, LocalPosition};
    use std::collections::BTreeSet;

    fn setup(d: [usize; 3]) -> (XzzxLattice, SyndromeGraph) {
        let lat = build_lattice(LatticeDims::new(d[0], d[1], d[2]).unwrap()).unwrap();
        let sg = build_syndrome_graph(&lat).unwrap();
        (lat, sg)
    }

    #[test]
    fn single_errors_confined_by_type() {
        for d in [[2, 2, 2], [3, 4, 2], [4, 4, 4]] {
            let (lat, sg) = setup(d);
            for m in sg.mechanisms() {
                let q = m.qubits[0];
                match lat.vertex_type(q) {
                    VertexType::X => {
                        assert!(m.orientation.is_in_plane());
                        assert_eq!(sg.cell_plane(m.endpoints[0]), sg.cell_plane(m.endpoints[1]));
                    }
                    VertexType::Z => {
                        assert_eq!(m.orientation, Orientation::Vertical);
                        let (z0, z1) = (sg.cell_plane(m.endpoints[0]), sg.cell_plane(m.endpoints[1]));
                        assert_eq!((z0 + 1) % d[2], z1);
                    }
                }
            }
        }
    }

    #[test]
    fn in_plane_edges_form_square_tilings() {
        let (lat, sg) = setup([3, 4, 3]);
        let [dx, dy, dz] = lat.dims().lengths();
        for sub in [Sublattice::Primal, Sublattice::Dual] {
            for z in 0..dz {
                let mut got = BTreeSet::new();
                for m in sg.mechanisms() {
                    if m.sublattice == sub && m.plane == Some(z) {
                        let mut e = m.endpoints;
                        e.sort_unstable();
                        assert!(got.insert(e), "parallel edge");
                    }
                }
                let mut want = BTreeSet::new();
                for x in 0..dx {
                    for y in 0..dy {
                        let c = lat.cell_id(sub, [x, y, z]);
                        for nb in [[(x + 1) % dx, y, z], [x, (y + 1) % dy, z]] {
                            let mut e = [c, lat.cell_id(sub, nb)];
                            e.sort_unstable();
                            want.insert(e);
                        }
                    }
                }
                assert_eq!(got, want);
                assert_eq!(got.len(), 2 * dx * dy);
            }
        }
    }

    #[test]
    fn vertical_edges_per_layer() {
        let (_, sg) = setup([3, 2, 4]);
        let v = sg
            .mechanisms()
            .iter()
            .filter(|m| m.orientation == Orientation::Vertical)
            .count();
        assert_eq!(v, 2 * 3 * 2 * 4);
    }

    #[test]
    fn defects_and_windings() {
        let (lat, sg) = setup([3, 3, 3]);
        assert!(sg.defects_from_error(&[]).is_empty());
        let m = sg.mechanism(0);
        assert_eq!(sg.defects_from_error(&[0]), {
            let mut e = m.endpoints.to_vec();
            e.sort_unstable();
            e
        });
        // A straight line of x-edges along x.
        let line: Vec<usize> = (0..3)
            .map(|x| lat.qubit_id([x, 1, 1], LocalPosition::XEdge))
            .collect();
        let w = sg.winding_parity(&line).unwrap();
        assert_eq!(w, Winding(Winding::bit(Sublattice::Dual, 0)));
        assert!(matches!(
            sg.winding_parity(&line[..2]),
            Err(SyndromeError::NotACycle(2))
        ));
    }

    #[test]
    fn cluster_stabilizer_boundaries_are_trivial_cycles() {
        let (lat, sg) = setup([3, 3, 3]);
        for q in 0..lat.n_qubits() {
            let mechs: Vec<usize> = lat
                .cluster_stabilizer_sparse(q)
                .support()
                .iter()
                .filter(|&&(w, p)| p.anticommutes(lat.vertex_type(w as usize).basis()))
                .map(|&(w, _)| w as usize)
                .collect();
            assert_eq!(sg.winding_parity(&mechs).unwrap(), Winding(0));
        }
    }

    #[test]
    fn correlated_diagonal() {
        let (lat, mut sg) = setup([3, 3, 3]);
        let a = lat.qubit_id([1, 1, 1], LocalPosition::XzFace);
        let b = lat.qubit_id([1, 1, 1], LocalPosition::YzFace);
        let id = sg.register_correlated(&[a, b]).unwrap();
        assert_eq!(id, lat.n_qubits());
        assert_eq!(sg.register_correlated(&[b, a]).unwrap(), id);
        let m = sg.mechanism(id);
        assert_eq!(m.orientation, Orientation::Diagonal);
        assert_eq!(m.displacement[0].abs(), 1);
        assert_eq!(m.displacement[1].abs(), 1);
        assert_eq!(sg.defects_from_error(&[id]).len(), 2);
        assert_eq!(sg.defects_from_error(&[id, a, b]), Vec::<usize>::new());
        let far = lat.qubit_id([0, 0, 0], LocalPosition::XzFace);
        assert!(matches!(
            sg.register_correlated(&[a, far]),
            Err(SyndromeError::NotAPath(_))
        ));
        let dual = lat.qubit_id([1, 1, 1], LocalPosition::XEdge);
        assert!(sg.register_correlated(&[a, dual]).is_err());
    }

    #[test]
    fn dump_has_a_line_per_mechanism() {
        let (_, sg) = setup([2, 2, 2]);
        assert_eq!(sg.dump().lines().filter(|l| l.starts_with("mechanism")).count(), 48);
    }
}
