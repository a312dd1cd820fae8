//! The 4-star and 6-ring fusion layouts.
//!
//! Correction targets are never entered by hand. Each fusion class is
//! replayed once by the stabilizer oracle on a template built from a
//! `2×2×2` lattice, its corrections are stored as offsets from a reference
//! qubit, and the layout tiles them over the full lattice.
//!
//! In the 4-star layout every lattice edge hosts one fusion of two dangling
//! arms: a Z-type arm on the endpoint `i'` and an X-type arm on `j'`. On
//! X–Z edges `i'` is the X-type endpoint; on X–X edges, which all run along
//! z, `i'` is the lower endpoint.
//!
//! In the 6-ring layout every cube of the doubled lattice whose lower corner
//! is all-even (ring A) or all-odd (ring B) carries one ring. Each lattice
//! edge belongs to exactly one ring, and each qubit is the fusion of its ring
//! A copy with its ring B copy.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{TypedGraph, VertexType};
use crate::lattice::{build_lattice, LatticeDims, LocalPosition, XzzxLattice};
use crate::noise::FusionOutcome;
use crate::oracle::{
    derive_correction_targets, verify_failure_equivalence, verify_success_branches,
    CorrectionTable, FusionSite, MergeKind, OracleError,
};
use crate::pauli::{Pauli, PauliString};
use crate::syndrome::{SyndromeError, SyndromeGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    FourStar,
    SixRing,
}

impl Construction {
    pub const ALL: [Construction; 2] = [Construction::FourStar, Construction::SixRing];

    pub fn name(self) -> &'static str {
        match self {
            Construction::FourStar => "four-star",
            Construction::SixRing => "six-ring",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Construction {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "four-star" | "4-star" => Ok(Construction::FourStar),
            "six-ring" | "6-ring" => Ok(Construction::SixRing),
            _ => Err(LayoutError::UnknownConstruction(s.to_string())),
        }
    }
}

/// How a loss-induced correction spread over several qubits is erased.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelatedLoss {
    /// One mechanism flipping all affected qubits together.
    #[default]
    Joint,
    /// Each affected qubit erased as its own mechanism.
    Independent,
}

impl fmt::Display for CorrelatedLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelatedLoss::Joint => "joint",
            CorrelatedLoss::Independent => "independent",
        })
    }
}

impl FromStr for CorrelatedLoss {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(CorrelatedLoss::Joint),
            "independent" => Ok(CorrelatedLoss::Independent),
            _ => Err(LayoutError::UnknownCorrelatedLoss(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    XPair,
    ZPair,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Syndrome(#[from] SyndromeError),
    #[error("unknown construction {0:?} (expected four-star or six-ring)")]
    UnknownConstruction(String),
    #[error("unknown correlated-loss mode {0:?} (expected joint or independent)")]
    UnknownCorrelatedLoss(String),
    #[error("layout invariant violated: {0}")]
    Invariant(String),
    #[error("template derivation failed: {0}")]
    Template(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FusionGeometry {
    FourStar {
        /// `(i', j')`: the endpoints holding the Z-type and X-type arms.
        edge: (usize, usize),
        xx_target: usize,
        zz_target: usize,
    },
    SixRing {
        /// The effective qubit created by the fusion.
        qubit: usize,
        pair: PairKind,
        /// Qubits whose frames depend on the creation outcome.
        neighbour_targets: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fusion {
    pub id: usize,
    /// Index of the template class this fusion was tiled from.
    pub class: usize,
    pub geometry: FusionGeometry,
    pub corrections: CorrectionTable,
    fail: Vec<usize>,
    full_erase: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FusionLayout {
    pub construction: Construction,
    pub correlated_loss: CorrelatedLoss,
    pub fusions: Vec<Fusion>,
    qubit_fusions: Vec<Vec<usize>>,
}

/// Correction offsets relative to a reference qubit, in doubled coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
struct RelTable {
    xx: Vec<([i64; 3], Pauli)>,
    zz: Vec<([i64; 3], Pauli)>,
}

#[derive(Clone, Debug)]
pub struct Template {
    pub class: usize,
    pub description: String,
    pub graph: TypedGraph,
    pub site: FusionSite,
    pub table: CorrectionTable,
    rel: RelTable,
}

const TEMPLATE_DIMS: usize = 2;

/// The four lattice neighbours of an edge qubit, ordered by axis then sign.
fn edge_qubit_neighbours(lat: &XzzxLattice, q: usize) -> [usize; 4] {
    let c = lat.coords(q).map(|v| v as i64);
    let odd = (0..3).find(|&a| c[a] % 2 == 1).expect("edge qubit");
    let mut out = [0; 4];
    let mut k = 0;
    for axis in (0..3).filter(|&a| a != odd) {
        for s in [-1, 1] {
            let mut p = c;
            p[axis] += s;
            out[k] = lat.qubit_at(p).expect("face qubit");
            k += 1;
        }
    }
    out
}

/// `(i', j')` for the `k`-th edge of edge qubit `q`.
fn four_star_orientation(lat: &XzzxLattice, q: usize, k: usize) -> (usize, usize) {
    let f = edge_qubit_neighbours(lat, q)[k];
    match (lat.vertex_type(q), lat.vertex_type(f)) {
        (VertexType::X, VertexType::Z) => (q, f),
        (VertexType::Z, VertexType::X) => (f, q),
        (VertexType::X, VertexType::X) => {
            // X–X edges run along z; the lower endpoint holds the Z-type arm.
            let step_up = k % 2 == 1;
            if step_up {
                (q, f)
            } else {
                (f, q)
            }
        }
        (VertexType::Z, VertexType::Z) => unreachable!("no Z-Z edges"),
    }
}

/// The pre-fusion graph of a 4-star fusion on edge `(i', j')`: the lattice
/// with that edge replaced by a Z-type arm on `i'` and an X-type arm on `j'`.
pub fn four_star_fusion_graph(
    lat: &XzzxLattice,
    ip: usize,
    jp: usize,
) -> Result<(TypedGraph, FusionSite), LayoutError> {
    let mut g = lat.graph().clone();
    if !g.remove_edge(ip, jp) {
        return Err(LayoutError::Invariant(format!("{ip} and {jp} are not adjacent")));
    }
    let i = g.add_vertex(VertexType::Z);
    let j = g.add_vertex(VertexType::X);
    g.add_edge(i, ip).map_err(OracleError::from)?;
    g.add_edge(j, jp).map_err(OracleError::from)?;
    Ok((
        g,
        FusionSite {
            i,
            j,
            kind: MergeKind::DanglingPair,
        },
    ))
}

/// Whether the lattice edge `a`–`b` belongs to ring A (all-even corner).
pub fn edge_in_ring_a(lat: &XzzxLattice, a: usize, b: usize) -> bool {
    let (ca, cb) = (lat.coords(a), lat.coords(b));
    let d = lat.displacement(ca, cb);
    let axis = (0..3).find(|&k| d[k] != 0).expect("distinct qubits");
    let low = if d[axis] > 0 {
        ca[axis] as i64
    } else {
        ca[axis] as i64 - 1
    };
    low.rem_euclid(2) == 0
}

/// The pre-fusion graph of a 6-ring fusion creating qubit `q`: `q` keeps
/// its ring A edges and a new copy of the same type takes the ring B edges.
pub fn six_ring_fusion_graph(
    lat: &XzzxLattice,
    q: usize,
) -> Result<(TypedGraph, FusionSite), LayoutError> {
    let mut g = lat.graph().clone();
    let i = g.add_vertex(lat.vertex_type(q));
    for &w in lat.graph().neighbors(q) {
        if !edge_in_ring_a(lat, q, w) {
            g.remove_edge(q, w);
            g.add_edge(i, w).map_err(OracleError::from)?;
        }
    }
    if g.degree(q) != 2 || g.degree(i) != 2 {
        return Err(LayoutError::Invariant(format!(
            "qubit {q} does not split into two ring copies of degree 2"
        )));
    }
    Ok((
        g,
        FusionSite {
            i,
            j: q,
            kind: MergeKind::RingPair,
        },
    ))
}

fn relative(lat: &XzzxLattice, reference: usize, targets: &[(usize, Pauli)]) -> Result<Vec<([i64; 3], Pauli)>, LayoutError> {
    targets
        .iter()
        .map(|&(t, p)| {
            if t >= lat.n_qubits() {
                return Err(LayoutError::Template(format!("correction lands on ancilla {t}")));
            }
            Ok((lat.displacement(lat.coords(reference), lat.coords(t)), p))
        })
        .collect()
}

fn resolve(lat: &XzzxLattice, reference: usize, rel: &[([i64; 3], Pauli)]) -> Vec<(usize, Pauli)> {
    let c = lat.coords(reference).map(|v| v as i64);
    rel.iter()
        .map(|&(d, p)| {
            let q = lat
                .qubit_at([c[0] + d[0], c[1] + d[1], c[2] + d[2]])
                .expect("template offsets land on qubits");
            (q, p)
        })
        .collect()
}

fn derive_templates(construction: Construction) -> Result<Vec<Template>, LayoutError> {
    let lat = build_lattice(LatticeDims::cubic(TEMPLATE_DIMS).expect("valid dims"))
        .expect("template lattice builds");
    let mut out = Vec::new();
    match construction {
        Construction::FourStar => {
            for local in 0..3 {
                let q = lat.qubit_id([0, 0, 0], LocalPosition::from_index(local));
                for k in 0..4 {
                    let (ip, jp) = four_star_orientation(&lat, q, k);
                    let (graph, site) = four_star_fusion_graph(&lat, ip, jp)?;
                    let table = derive_correction_targets(&graph, site)?;
                    let rel = RelTable {
                        xx: relative(&lat, ip, &table.xx_targets)?,
                        zz: relative(&lat, ip, &table.zz_targets)?,
                    };
                    out.push(Template {
                        class: out.len(),
                        description: format!(
                            "{}-{} edge {}",
                            lat.position(ip).name(),
                            lat.position(jp).name(),
                            k
                        ),
                        graph,
                        site,
                        table,
                        rel,
                    });
                }
            }
        }
        Construction::SixRing => {
            for pos in LocalPosition::ALL {
                let q = lat.qubit_id([0, 0, 0], pos);
                let (graph, site) = six_ring_fusion_graph(&lat, q)?;
                let table = derive_correction_targets(&graph, site)?;
                let rel = RelTable {
                    xx: relative(&lat, q, &table.xx_targets)?,
                    zz: relative(&lat, q, &table.zz_targets)?,
                };
                out.push(Template {
                    class: out.len(),
                    description: format!("{} {}-pair", pos.name(), lat.vertex_type(q)),
                    graph,
                    site,
                    table,
                    rel,
                });
            }
        }
    }
    Ok(out)
}

/// Oracle-derived templates for every fusion class of a construction,
/// computed once per process.
pub fn templates(construction: Construction) -> Result<&'static [Template], LayoutError> {
    static FOUR: OnceLock<Result<Vec<Template>, String>> = OnceLock::new();
    static SIX: OnceLock<Result<Vec<Template>, String>> = OnceLock::new();
    let cell = match construction {
        Construction::FourStar => &FOUR,
        Construction::SixRing => &SIX,
    };
    cell.get_or_init(|| derive_templates(construction).map_err(|e| e.to_string()))
        .as_deref()
        .map_err(|e| LayoutError::Template(e.clone()))
}

/// Mechanisms erased when the Pauli `targets` is applied at random.
fn correction_mechanisms(
    lat: &XzzxLattice,
    sg: &mut SyndromeGraph,
    targets: &[(usize, Pauli)],
    split: bool,
) -> Result<Vec<usize>, LayoutError> {
    let detectable: Vec<usize> = targets
        .iter()
        .filter(|&&(q, p)| p.anticommutes(lat.vertex_type(q).basis()))
        .map(|&(q, _)| q)
        .collect();
    if detectable.is_empty() {
        return Ok(Vec::new());
    }
    if split {
        return Ok(detectable);
    }
    Ok(vec![sg.register_correlated(&detectable)?])
}

fn union(mut a: Vec<usize>, b: &[usize]) -> Vec<usize> {
    a.extend_from_slice(b);
    a.sort_unstable();
    a.dedup();
    a
}

fn check_counts(lat: &XzzxLattice, layout: &FusionLayout) -> Result<(), LayoutError> {
    let n = lat.n_qubits();
    match layout.construction {
        Construction::FourStar => {
            let mut xx = vec![0usize; n];
            let mut zz = vec![0usize; n];
            for f in &layout.fusions {
                if let FusionGeometry::FourStar {
                    xx_target,
                    zz_target,
                    ..
                } = f.geometry
                {
                    xx[xx_target] += 1;
                    zz[zz_target] += 1;
                }
            }
            if layout.fusions.len() != lat.graph().n_edges() {
                return Err(LayoutError::Invariant("one fusion per lattice edge".into()));
            }
            for q in 0..n {
                let (want_xx, want_zz) = match lat.vertex_type(q) {
                    VertexType::X => (3, 1),
                    VertexType::Z => (0, 4),
                };
                if xx[q] != want_xx || zz[q] != want_zz {
                    return Err(LayoutError::Invariant(format!(
                        "qubit {q} ({}) is xx-target of {} and zz-target of {} fusions",
                        lat.vertex_type(q),
                        xx[q],
                        zz[q]
                    )));
                }
            }
        }
        Construction::SixRing => {
            if layout.fusions.len() != n {
                return Err(LayoutError::Invariant("one fusion per effective qubit".into()));
            }
        }
    }
    Ok(())
}

/// One fusion per lattice edge, with oracle-derived corrections.
pub fn layout_4star(lat: &XzzxLattice, sg: &mut SyndromeGraph) -> Result<FusionLayout, LayoutError> {
    let tpl = templates(Construction::FourStar)?;
    let mut fusions = Vec::with_capacity(lat.graph().n_edges());
    for cell in 0..lat.cells_per_sublattice() {
        let c = lat.cell_coords_of_index(cell);
        for local in 0..3 {
            let q = lat.qubit_id(c, LocalPosition::from_index(local));
            for k in 0..4 {
                let class = 4 * local + k;
                let (ip, jp) = four_star_orientation(lat, q, k);
                let t = &tpl[class];
                let corrections = CorrectionTable {
                    xx_targets: resolve(lat, ip, &t.rel.xx),
                    zz_targets: resolve(lat, ip, &t.rel.zz),
                };
                let single = |v: &[(usize, Pauli)]| -> Result<usize, LayoutError> {
                    match v {
                        [(q, _)] => Ok(*q),
                        _ => Err(LayoutError::Invariant(format!(
                            "4-star correction on {} qubits",
                            v.len()
                        ))),
                    }
                };
                let xx_target = single(&corrections.xx_targets)?;
                let zz_target = single(&corrections.zz_targets)?;
                if lat.vertex_type(xx_target) != VertexType::X || xx_target == zz_target {
                    return Err(LayoutError::Invariant(format!(
                        "fusion on ({ip}, {jp}) has xx-target {xx_target} and zz-target {zz_target}"
                    )));
                }
                let fail = correction_mechanisms(lat, sg, &corrections.xx_targets, false)?;
                let zz_part = correction_mechanisms(lat, sg, &corrections.zz_targets, false)?;
                let full_erase = union(fail.clone(), &zz_part);
                fusions.push(Fusion {
                    id: fusions.len(),
                    class,
                    geometry: FusionGeometry::FourStar {
                        edge: (ip, jp),
                        xx_target,
                        zz_target,
                    },
                    corrections,
                    fail,
                    full_erase,
                });
            }
        }
    }
    let layout = FusionLayout::new(Construction::FourStar, CorrelatedLoss::Joint, fusions, lat.n_qubits());
    check_counts(lat, &layout)?;
    Ok(layout)
}

/// One fusion per effective qubit, joining its ring A and ring B copies.
pub fn layout_6ring(
    lat: &XzzxLattice,
    sg: &mut SyndromeGraph,
    correlated_loss: CorrelatedLoss,
) -> Result<FusionLayout, LayoutError> {
    let tpl = templates(Construction::SixRing)?;
    let split = correlated_loss == CorrelatedLoss::Independent;
    let mut fusions = Vec::with_capacity(lat.n_qubits());
    for q in 0..lat.n_qubits() {
        let class = lat.position(q).index();
        let t = &tpl[class];
        let corrections = CorrectionTable {
            xx_targets: resolve(lat, q, &t.rel.xx),
            zz_targets: resolve(lat, q, &t.rel.zz),
        };
        let own = vec![q];
        let (pair, creation, fail, full_erase) = match lat.vertex_type(q) {
            // XX creates the qubit, ZZ reads it out.
            VertexType::Z => {
                let fail = correction_mechanisms(lat, sg, &corrections.xx_targets, false)?;
                let full = union(fail.clone(), &own);
                (PairKind::ZPair, &corrections.xx_targets, fail, full)
            }
            // ZZ creates the qubit, XX reads it out.
            VertexType::X => {
                let creation = correction_mechanisms(lat, sg, &corrections.zz_targets, split)?;
                let full = union(own.clone(), &creation);
                (PairKind::XPair, &corrections.zz_targets, own, full)
            }
        };
        let neighbour_targets = creation.iter().map(|&(w, _)| w).collect();
        fusions.push(Fusion {
            id: fusions.len(),
            class,
            geometry: FusionGeometry::SixRing {
                qubit: q,
                pair,
                neighbour_targets,
            },
            corrections,
            fail,
            full_erase,
        });
    }
    let layout = FusionLayout::new(Construction::SixRing, correlated_loss, fusions, lat.n_qubits());
    check_counts(lat, &layout)?;
    Ok(layout)
}

/// Builds the layout of either construction.
pub fn build_layout(
    construction: Construction,
    lat: &XzzxLattice,
    sg: &mut SyndromeGraph,
    correlated_loss: CorrelatedLoss,
) -> Result<FusionLayout, LayoutError> {
    match construction {
        Construction::FourStar => layout_4star(lat, sg),
        Construction::SixRing => layout_6ring(lat, sg, correlated_loss),
    }
}

/// Mechanisms erased by one fusion outcome.
pub fn erasure_effects(f: &Fusion, outcome: FusionOutcome) -> &[usize] {
    match outcome {
        FusionOutcome::Success => &[],
        FusionOutcome::Fail => &f.fail,
        FusionOutcome::FullErase => &f.full_erase,
    }
}

impl FusionLayout {
    fn new(
        construction: Construction,
        correlated_loss: CorrelatedLoss,
        fusions: Vec<Fusion>,
        n_qubits: usize,
    ) -> Self {
        let mut qubit_fusions = vec![Vec::new(); n_qubits];
        for f in &fusions {
            let qs: Vec<usize> = match &f.geometry {
                FusionGeometry::FourStar { edge, .. } => vec![edge.0, edge.1],
                FusionGeometry::SixRing { qubit, .. } => vec![*qubit],
            };
            for q in qs {
                qubit_fusions[q].push(f.id);
            }
        }
        Self {
            construction,
            correlated_loss,
            fusions,
            qubit_fusions,
        }
    }

    pub fn len(&self) -> usize {
        self.fusions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fusions.is_empty()
    }

    /// Fusions touching qubit `q`.
    pub fn fusions_at(&self, q: usize) -> &[usize] {
        &self.qubit_fusions[q]
    }

    pub fn effects(&self, id: usize, outcome: FusionOutcome) -> &[usize] {
        erasure_effects(&self.fusions[id], outcome)
    }

    /// One line per fusion: id, class, hosting geometry, mechanism ids.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# {} layout, {} fusions", self.construction, self.fusions.len()).unwrap();
        let join = |v: &[usize]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        let targets = |v: &[(usize, Pauli)]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|(q, p)| format!("{p}{q}")).collect::<Vec<_>>().join(",")
            }
        };
        for f in &self.fusions {
            let geom = match &f.geometry {
                FusionGeometry::FourStar { edge, .. } => format!("edge={}-{}", edge.0, edge.1),
                FusionGeometry::SixRing { qubit, pair, .. } => format!(
                    "qubit={qubit} {}",
                    match pair {
                        PairKind::XPair => "x-pair",
                        PairKind::ZPair => "z-pair",
                    }
                ),
            };
            writeln!(
                s,
                "fusion {} class={} {} xx={} zz={} fail={} full-erase={}",
                f.id,
                f.class,
                geom,
                targets(&f.corrections.xx_targets),
                targets(&f.corrections.zz_targets),
                join(&f.fail),
                join(&f.full_erase)
            )
            .unwrap();
        }
        s
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn push(&mut self, name: impl Into<String>, result: Result<String, String>) {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {}: {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// The operator a failed fusion must have projected onto: the detectable
/// letter on every qubit of every `Fail` mechanism.
fn erasure_operator(
    lat: &XzzxLattice,
    sg: &SyndromeGraph,
    n: usize,
    mechs: &[usize],
    site: FusionSite,
) -> PauliString {
    let mut terms = Vec::new();
    for &m in mechs {
        for &q in &sg.mechanism(m).qubits {
            // The effective qubit of a ring pair is read out through copy i.
            let q = if site.kind == MergeKind::RingPair && q == site.j { site.i } else { q };
            let letter = if q < lat.n_qubits() {
                lat.detectable_error(q)
            } else {
                Pauli::Z
            };
            terms.push((q, letter));
        }
    }
    PauliString::from_sparse(n, &terms)
}

/// Replays one fusion per class on the oracle using the tiled corrections.
///
/// Checks that every success branch reproduces the merged group, that every
/// failure branch equals a success followed by the erasure measurement, and
/// that the failed state is projected onto the operator of the claimed
/// `Fail` mechanisms.
pub fn validate_layout(
    lat: &XzzxLattice,
    sg: &SyndromeGraph,
    layout: &FusionLayout,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    // The last fusion of each class sits away from the template cell.
    for f in layout.fusions.iter().rev() {
        seen.entry(f.class).or_insert(f.id);
    }
    for (&class, &id) in &seen {
        let f = &layout.fusions[id];
        let name = format!("{} class {class} (fusion {id})", layout.construction);
        let built = match &f.geometry {
            FusionGeometry::FourStar { edge, .. } => four_star_fusion_graph(lat, edge.0, edge.1),
            FusionGeometry::SixRing { qubit, .. } => six_ring_fusion_graph(lat, *qubit),
        };
        let result = built.map_err(|e| e.to_string()).and_then(|(g, site)| {
            verify_success_branches(&g, site, &f.corrections)
                .map_err(|e| format!("success replay: {e}"))?;
            let failed = verify_failure_equivalence(&g, site, &f.corrections)
                .map_err(|e| format!("failure replay: {e}"))?;
            let op = erasure_operator(lat, sg, g.len(), &f.fail, site);
            if failed.iter().any(|t| t.sign_of(&op).is_none()) {
                return Err(format!("failed state not projected onto {op}"));
            }
            Ok(format!(
                "4 success branches, 4 failure branches, projection onto {}",
                PauliString::support(&op)
                    .iter()
                    .map(|(q, p)| format!("{p}{q}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            ))
        });
        report.push(name, result);
    }
    report.push(
        format!("{} layout counts", layout.construction),
        check_counts(lat, layout)
            .map(|_| format!("{} fusions", layout.len()))
            .map_err(|e| e.to_string()),
    );
    let vertical_fail = layout
        .fusions
        .iter()
        .flat_map(|f| f.fail.iter())
        .filter(|&&m| !sg.mechanism(m).orientation.is_in_plane())
        .count();
    report.push(
        format!("{} failures stay in plane", layout.construction),
        if vertical_fail == 0 {
            Ok("no vertical mechanism in any Fail set".into())
        } else {
            Err(format!("{vertical_fail} out-of-plane Fail mechanisms"))
        },
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syndrome::{build_syndrome_graph, Orientation};

    fn setup(d: usize) -> (XzzxLattice, SyndromeGraph) {
        let lat = build_lattice(LatticeDims::cubic(d).unwrap()).unwrap();
        let sg = build_syndrome_graph(&lat).unwrap();
        (lat, sg)
    }

    #[test]
    fn four_star_templates_match_merge_rule() {
        let lat = build_lattice(LatticeDims::cubic(2).unwrap()).unwrap();
        for t in templates(Construction::FourStar).unwrap() {
            let ip = t.graph.neighbors(t.site.i)[0];
            let jp = t.graph.neighbors(t.site.j)[0];
            assert_eq!(t.table.xx_targets, vec![(ip, Pauli::Z)]);
            let want = match lat.vertex_type(jp) {
                VertexType::Z => Pauli::X,
                VertexType::X => Pauli::Z,
            };
            assert_eq!(t.table.zz_targets, vec![(jp, want)]);
        }
    }

    #[test]
    fn six_ring_templates_correct_ring_a_neighbours() {
        let lat = build_lattice(LatticeDims::cubic(2).unwrap()).unwrap();
        for t in templates(Construction::SixRing).unwrap() {
            let q = t.site.j;
            let (fix, other) = match lat.vertex_type(q) {
                VertexType::Z => (&t.table.xx_targets, &t.table.zz_targets),
                VertexType::X => (&t.table.zz_targets, &t.table.xx_targets),
            };
            assert!(other.is_empty());
            let nbrs: Vec<usize> = t.graph.neighbors(q).to_vec();
            assert_eq!(fix.len(), 2);
            for &(w, p) in fix {
                assert!(nbrs.contains(&w));
                assert_eq!(p, lat.detectable_error(w));
            }
        }
    }

    #[test]
    fn four_star_counts() {
        let (lat, mut sg) = setup(2);
        let l = layout_4star(&lat, &mut sg).unwrap();
        assert_eq!(l.len(), 96);
        assert_eq!(sg.n_mechanisms(), lat.n_qubits());
        for f in &l.fusions {
            let FusionGeometry::FourStar { edge, xx_target, zz_target } = f.geometry else {
                unreachable!()
            };
            assert_eq!((xx_target, zz_target), edge);
            assert_eq!(l.effects(f.id, FusionOutcome::Fail), &[xx_target]);
            assert_eq!(l.effects(f.id, FusionOutcome::Success), &[] as &[usize]);
        }
    }

    #[test]
    fn six_ring_counts_and_orientations() {
        let (lat, mut sg) = setup(2);
        let l = layout_6ring(&lat, &mut sg, CorrelatedLoss::Joint).unwrap();
        assert_eq!(l.len(), 48);
        let z = l
            .fusions
            .iter()
            .filter(|f| matches!(f.geometry, FusionGeometry::SixRing { pair: PairKind::ZPair, .. }))
            .count();
        assert_eq!(z, 16);
        for f in &l.fusions {
            let FusionGeometry::SixRing { qubit, pair, .. } = &f.geometry else {
                unreachable!()
            };
            let own = sg.mechanism(*qubit).orientation;
            match pair {
                PairKind::XPair => {
                    assert!(matches!(own, Orientation::InPlaneX | Orientation::InPlaneY));
                    assert_eq!(f.fail, vec![*qubit]);
                    let extra: Vec<_> = f.full_erase.iter().filter(|&&m| m != *qubit).collect();
                    assert_eq!(extra.len(), 1);
                    assert_eq!(sg.mechanism(*extra[0]).orientation, Orientation::Oblique);
                }
                PairKind::ZPair => {
                    assert_eq!(own, Orientation::Vertical);
                    assert_eq!(f.fail.len(), 1);
                    assert_eq!(sg.mechanism(f.fail[0]).orientation, Orientation::Diagonal);
                    assert!(f.full_erase.contains(qubit));
                }
            }
            assert!(f.fail.iter().all(|m| f.full_erase.contains(m)));
        }
    }

    #[test]
    fn six_ring_diagonals_share_orientation() {
        let (lat, mut sg) = setup(4);
        let l = layout_6ring(&lat, &mut sg, CorrelatedLoss::Joint).unwrap();
        let mut kinds = std::collections::BTreeSet::new();
        for f in &l.fusions {
            if let FusionGeometry::SixRing { pair: PairKind::ZPair, .. } = f.geometry {
                let d = sg.mechanism(f.fail[0]).displacement;
                kinds.insert(d[0] * d[1]);
            }
        }
        assert_eq!(kinds.len(), 1, "diagonals must all be parallel");
    }

    #[test]
    fn independent_loss_splits_creation_erasure() {
        let (lat, mut sg) = setup(2);
        let l = layout_6ring(&lat, &mut sg, CorrelatedLoss::Independent).unwrap();
        for f in &l.fusions {
            if let FusionGeometry::SixRing { pair: PairKind::XPair, .. } = f.geometry {
                assert_eq!(f.full_erase.len(), 3);
                assert!(f.full_erase.iter().all(|&m| m < lat.n_qubits()));
            }
        }
    }

    #[test]
    fn layouts_validate_on_small_lattice() {
        let (lat, mut sg) = setup(2);
        for c in Construction::ALL {
            let l = build_layout(c, &lat, &mut sg, CorrelatedLoss::Joint).unwrap();
            let r = validate_layout(&lat, &sg, &l);
            assert!(r.all_passed(), "{r}");
        }
    }

    #[test]
    fn dump_has_a_line_per_fusion() {
        let (lat, mut sg) = setup(2);
        let l = layout_6ring(&lat, &mut sg, CorrelatedLoss::Joint).unwrap();
        assert_eq!(l.dump().lines().filter(|s| s.starts_with("fusion ")).count(), 48);
    }

    #[test]
    fn construction_names_parse() {
        assert_eq!("four-star".parse::<Construction>().unwrap(), Construction::FourStar);
        assert_eq!("six-ring".parse::<Construction>().unwrap(), Construction::SixRing);
        assert!("eight-ring".parse::<Construction>().is_err());
    }
}
