//! Fusion replay on stabilizer tableaux and brute-force derivation of the
//! Pauli-frame corrections each fusion outcome requires.
//!
//! Two kinds of merge are supported. A dangling-pair fusion consumes two
//! degree-one qubits `i` (Z-type, hanging off `i'`) and `j` (hanging off
//! `j'`) and leaves an edge between `i'` and `j'`. A ring-pair fusion joins
//! two same-type qubits into one effective qubit: the creation measurement
//! (`XX` for Z-type pairs, `ZZ` for X-type pairs) merges them and the other
//! measurement reads out the effective qubit in its own basis.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{cluster_stabilizer, tableau_from_graph, GraphError, TypedGraph, VertexType};
use crate::pauli::{Pauli, PauliString};
use crate::tableau::{groups_equal, StabilizerError, StabilizerTableau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MergeKind {
    DanglingPair,
    RingPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FusionSite {
    pub i: usize,
    pub j: usize,
    pub kind: MergeKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionMode {
    Success,
    Failure,
}

/// Outcome bits of one fusion, `true` meaning eigenvalue −1. On failure
/// `m_xx` is absent and `m_zz` is recovered as `m_i ⊕ m_j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FusionRecord {
    pub m_xx: Option<bool>,
    pub m_zz: Option<bool>,
    pub m_i: Option<bool>,
    pub m_j: Option<bool>,
}

/// Conditional corrections of one fusion: each listed Pauli is applied when
/// the corresponding outcome bit is 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionTable {
    pub xx_targets: Vec<(usize, Pauli)>,
    pub zz_targets: Vec<(usize, Pauli)>,
}

impl CorrectionTable {
    pub fn xx_operator(&self, n: usize) -> PauliString {
        PauliString::from_sparse(n, &self.xx_targets)
    }

    pub fn zz_operator(&self, n: usize) -> PauliString {
        PauliString::from_sparse(n, &self.zz_targets)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
    #[error("invalid fusion: {0}")]
    InvalidFusion(String),
    #[error("no correction on the neighbourhood restores the {0} outcome")]
    NoCorrection(&'static str),
    #[error("outcome branch (m_xx={m_xx}, m_zz={m_zz}) does not reproduce the merged group")]
    BranchMismatch { m_xx: bool, m_zz: bool },
    #[error("failure branch (m_i={m_i}, m_j={m_j}) is not a success followed by the erasure measurement")]
    FailureMismatch { m_i: bool, m_j: bool },
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

fn pair_op(n: usize, i: usize, j: usize, p: Pauli) -> PauliString {
    PauliString::from_sparse(n, &[(i, p), (j, p)])
}

/// Replays a fusion of qubits `i` and `j`.
///
/// Success measures `X_i X_j` then `Z_i Z_j`; failure measures `Z_i` and
/// `Z_j`. `forced` fixes the two random outcomes in order.
pub fn apply_fusion_oracle<R: rand::Rng + ?Sized>(
    t: &mut StabilizerTableau,
    i: usize,
    j: usize,
    mode: FusionMode,
    forced: [Option<bool>; 2],
    rng: &mut R,
) -> Result<FusionRecord, StabilizerError> {
    assert_ne!(i, j, "fusion of a qubit with itself");
    let n = t.n_qubits();
    match mode {
        FusionMode::Success => {
            let xx = t.measure_pauli(&pair_op(n, i, j, Pauli::X), forced[0], rng)?;
            let zz = t.measure_pauli(&pair_op(n, i, j, Pauli::Z), forced[1], rng)?;
            Ok(FusionRecord {
                m_xx: Some(xx.outcome),
                m_zz: Some(zz.outcome),
                m_i: None,
                m_j: None,
            })
        }
        FusionMode::Failure => {
            let a = t.measure_pauli(&PauliString::single(n, i, Pauli::Z), forced[0], rng)?;
            let b = t.measure_pauli(&PauliString::single(n, j, Pauli::Z), forced[1], rng)?;
            Ok(FusionRecord {
                m_xx: None,
                m_zz: Some(a.outcome ^ b.outcome),
                m_i: Some(a.outcome),
                m_j: Some(b.outcome),
            })
        }
    }
}

fn check_site(g: &TypedGraph, site: FusionSite) -> Result<(), OracleError> {
    let FusionSite { i, j, kind } = site;
    let n = g.len();
    if i >= n || j >= n || i == j {
        return Err(OracleError::InvalidFusion(format!("bad qubit pair ({i}, {j})")));
    }
    if g.has_edge(i, j) {
        return Err(OracleError::InvalidFusion(format!("qubits {i} and {j} are adjacent")));
    }
    match kind {
        MergeKind::DanglingPair => {
            if g.degree(i) != 1 || g.degree(j) != 1 {
                return Err(OracleError::InvalidFusion("dangling qubits must have degree 1".into()));
            }
            if g.vertex_type(i) != VertexType::Z {
                return Err(OracleError::InvalidFusion("qubit i must be Z-type".into()));
            }
            let (ip, jp) = (g.neighbors(i)[0], g.neighbors(j)[0]);
            if ip == jp || g.has_edge(ip, jp) {
                return Err(OracleError::InvalidFusion(format!(
                    "attachment points {ip} and {jp} already coincide or are adjacent"
                )));
            }
            if g.vertex_type(ip) == VertexType::Z && g.vertex_type(jp) == VertexType::Z {
                return Err(OracleError::InvalidFusion("merge would create a Z-Z edge".into()));
            }
        }
        MergeKind::RingPair => {
            if g.vertex_type(i) != g.vertex_type(j) {
                return Err(OracleError::InvalidFusion("ring-pair qubits must share a type".into()));
            }
            if g.neighbors(i).iter().any(|w| g.neighbors(j).contains(w)) {
                return Err(OracleError::InvalidFusion("ring-pair neighbourhoods overlap".into()));
            }
        }
    }
    Ok(())
}

/// The graph that a successful fusion leaves on the surviving qubits.
///
/// Dangling pair: `i` and `j` are detached and `i'`–`j'` joined. Ring pair:
/// `j` inherits every edge of `i`, and `i` is left isolated.
pub fn merged_graph(g: &TypedGraph, site: FusionSite) -> Result<TypedGraph, OracleError> {
    check_site(g, site)?;
    let FusionSite { i, j, kind } = site;
    let mut m = g.clone();
    match kind {
        MergeKind::DanglingPair => {
            let (ip, jp) = (g.neighbors(i)[0], g.neighbors(j)[0]);
            m.remove_edge(i, ip);
            m.remove_edge(j, jp);
            m.add_edge(ip, jp)?;
        }
        MergeKind::RingPair => {
            for &w in g.neighbors(i) {
                m.remove_edge(i, w);
                m.add_edge(j, w)?;
            }
        }
    }
    Ok(m)
}

/// Logical operators of the effective qubit created by a ring-pair fusion,
/// as `(X̄, Z̄)`.
fn ring_logicals(n: usize, i: usize, j: usize, t: VertexType) -> (PauliString, PauliString) {
    match t {
        VertexType::Z => (
            PauliString::single(n, i, Pauli::X),
            pair_op(n, i, j, Pauli::Z),
        ),
        VertexType::X => (
            pair_op(n, i, j, Pauli::X),
            PauliString::single(n, i, Pauli::Z),
        ),
    }
}

/// Replaces the letter on `q` by the matching logical operator.
fn encode(p: &PauliString, q: usize, xbar: &PauliString, zbar: &PauliString) -> PauliString {
    let mut out = p.clone();
    out.set(q, Pauli::I);
    match p.get(q) {
        Pauli::I => out,
        Pauli::X => out.mul(xbar),
        Pauli::Z => out.mul(zbar),
        Pauli::Y => unreachable!("cluster stabilizers carry no Y"),
    }
}

/// Ring-pair creation operator for a pair of type `t`.
fn creation_op(n: usize, i: usize, j: usize, t: VertexType) -> PauliString {
    match t {
        VertexType::Z => pair_op(n, i, j, Pauli::X),
        VertexType::X => pair_op(n, i, j, Pauli::Z),
    }
}

/// Encoded merged group right after a ring-pair creation measurement with
/// outcome `m_c`, before the effective qubit is read out.
fn creation_target(
    g: &TypedGraph,
    site: FusionSite,
    m_c: bool,
) -> Result<StabilizerTableau, OracleError> {
    let merged = merged_graph(g, site)?;
    let FusionSite { i, j, .. } = site;
    let n = g.len();
    let ty = g.vertex_type(j);
    let (xbar, zbar) = ring_logicals(n, i, j, ty);
    let mut gens: Vec<PauliString> = (0..n)
        .filter(|&v| v != i)
        .map(|v| encode(&cluster_stabilizer(&merged, v), j, &xbar, &zbar))
        .collect();
    gens.push(creation_op(n, i, j, ty).with_sign(m_c));
    Ok(StabilizerTableau::from_generators(gens)?)
}

/// The stabilizer group a successful fusion with outcomes `(m_xx, m_zz)`
/// should produce once its corrections are applied.
pub fn fusion_target(
    g: &TypedGraph,
    site: FusionSite,
    m_xx: bool,
    m_zz: bool,
) -> Result<StabilizerTableau, OracleError> {
    let merged = merged_graph(g, site)?;
    let FusionSite { i, j, kind } = site;
    let n = g.len();
    match kind {
        MergeKind::DanglingPair => {
            let mut gens: Vec<PauliString> = (0..n)
                .filter(|&v| v != i && v != j)
                .map(|v| cluster_stabilizer(&merged, v))
                .collect();
            gens.push(pair_op(n, i, j, Pauli::X).with_sign(m_xx));
            gens.push(pair_op(n, i, j, Pauli::Z).with_sign(m_zz));
            Ok(StabilizerTableau::from_generators(gens)?)
        }
        MergeKind::RingPair => {
            let ty = g.vertex_type(j);
            let (xbar, zbar) = ring_logicals(n, i, j, ty);
            let (m_c, data, m_d) = match ty {
                VertexType::Z => (m_xx, zbar, m_zz),
                VertexType::X => (m_zz, xbar, m_xx),
            };
            let mut t = creation_target(g, site, m_c)?;
            t.measure_pauli(&data, Some(m_d), &mut rng())?;
            Ok(t)
        }
    }
}

fn success_state(
    g: &TypedGraph,
    site: FusionSite,
    m_xx: bool,
    m_zz: bool,
) -> Result<StabilizerTableau, OracleError> {
    let mut t = tableau_from_graph(g)?;
    apply_fusion_oracle(
        &mut t,
        site.i,
        site.j,
        FusionMode::Success,
        [Some(m_xx), Some(m_zz)],
        &mut rng(),
    )?;
    Ok(t)
}

/// Qubits adjacent to the fused pair, excluding the pair itself.
pub fn correction_neighbourhood(g: &TypedGraph, site: FusionSite) -> Vec<usize> {
    let mut nb: Vec<usize> = g
        .neighbors(site.i)
        .iter()
        .chain(g.neighbors(site.j))
        .copied()
        .filter(|&v| v != site.i && v != site.j)
        .collect();
    nb.sort_unstable();
    nb.dedup();
    nb
}

/// Minimal-weight correction restoring `target`. Any two solutions differ by
/// an element of the target group, so ties are broken canonically: fewest
/// `Y` letters, then lexicographic order.
fn search_correction(
    state: &StabilizerTableau,
    target: &StabilizerTableau,
    nbhd: &[usize],
    bit: &'static str,
) -> Result<Vec<(usize, Pauli)>, OracleError> {
    let n = state.n_qubits();
    let k = nbhd.len();
    let mut cands: Vec<Vec<(usize, Pauli)>> = (0..(1usize << (2 * k)))
        .map(|code| {
            (0..k)
                .filter_map(|s| {
                    let p = Pauli::ALL[(code >> (2 * s)) & 3];
                    (p != Pauli::I).then_some((nbhd[s], p))
                })
                .collect()
        })
        .collect();
    let key = |c: &Vec<(usize, Pauli)>| {
        let ys = c.iter().filter(|(_, p)| *p == Pauli::Y).count();
        (c.len(), ys, c.clone())
    };
    cands.sort_by_key(key);
    cands
        .into_iter()
        .find(|cand| {
            let mut t = state.clone();
            t.apply_pauli(&PauliString::from_sparse(n, cand));
            groups_equal(&t, target)
        })
        .ok_or(OracleError::NoCorrection(bit))
}

/// Finds, by exhaustive search over single-qubit Paulis on the neighbourhood
/// of the fused pair, the unique minimal correction for each outcome bit,
/// then checks all four outcome branches.
///
/// Ring-pair corrections are searched right after the creation measurement:
/// once the effective qubit has been read out, corrections on either side of
/// the pair become equivalent and the minimum is no longer unique.
pub fn derive_correction_targets(
    g: &TypedGraph,
    site: FusionSite,
) -> Result<CorrectionTable, OracleError> {
    check_site(g, site)?;
    let nbhd = correction_neighbourhood(g, site);
    let table = match site.kind {
        MergeKind::DanglingPair => {
            let base = success_state(g, site, false, false)?;
            if !groups_equal(&base, &fusion_target(g, site, false, false)?) {
                return Err(OracleError::BranchMismatch {
                    m_xx: false,
                    m_zz: false,
                });
            }
            CorrectionTable {
                xx_targets: search_correction(
                    &success_state(g, site, true, false)?,
                    &fusion_target(g, site, true, false)?,
                    &nbhd,
                    "XX",
                )?,
                zz_targets: search_correction(
                    &success_state(g, site, false, true)?,
                    &fusion_target(g, site, false, true)?,
                    &nbhd,
                    "ZZ",
                )?,
            }
        }
        MergeKind::RingPair => {
            let ty = g.vertex_type(site.j);
            let created = |m: bool| -> Result<StabilizerTableau, OracleError> {
                let mut t = tableau_from_graph(g)?;
                let c = creation_op(g.len(), site.i, site.j, ty);
                t.measure_pauli(&c, Some(m), &mut rng())?;
                Ok(t)
            };
            if !groups_equal(&created(false)?, &creation_target(g, site, false)?) {
                return Err(OracleError::BranchMismatch {
                    m_xx: false,
                    m_zz: false,
                });
            }
            let (bit, name) = match ty {
                VertexType::Z => (true, "XX"),
                VertexType::X => (false, "ZZ"),
            };
            let fix = search_correction(&created(true)?, &creation_target(g, site, true)?, &nbhd, name)?;
            if bit {
                CorrectionTable {
                    xx_targets: fix,
                    zz_targets: Vec::new(),
                }
            } else {
                CorrectionTable {
                    xx_targets: Vec::new(),
                    zz_targets: fix,
                }
            }
        }
    };
    verify_success_branches(g, site, &table)?;
    Ok(table)
}

/// All four success branches, corrected per `table`, reproduce the target.
pub fn verify_success_branches(
    g: &TypedGraph,
    site: FusionSite,
    table: &CorrectionTable,
) -> Result<(), OracleError> {
    let n = g.len();
    for (m_xx, m_zz) in [(false, false), (true, false), (false, true), (true, true)] {
        let mut t = success_state(g, site, m_xx, m_zz)?;
        if m_xx {
            t.apply_pauli(&table.xx_operator(n));
        }
        if m_zz {
            t.apply_pauli(&table.zz_operator(n));
        }
        if !groups_equal(&t, &fusion_target(g, site, m_xx, m_zz)?) {
            return Err(OracleError::BranchMismatch { m_xx, m_zz });
        }
    }
    Ok(())
}

/// Replays a failed fusion for each pair of single-qubit outcomes and checks
/// it equals a corrected success in which the lost `XX` information is
/// replaced by a measurement of the `XX` correction operator, followed by
/// `Z_i` and `Z_j`.
///
/// The recovered `m_zz = m_i ⊕ m_j` drives the `ZZ` correction as usual.
/// Returns the failure tableaux for further inspection.
pub fn verify_failure_equivalence(
    g: &TypedGraph,
    site: FusionSite,
    table: &CorrectionTable,
) -> Result<Vec<StabilizerTableau>, OracleError> {
    let n = g.len();
    let e_xx = table.xx_operator(n);
    let mut out = Vec::with_capacity(4);
    for (m_i, m_j) in [(false, false), (true, false), (false, true), (true, true)] {
        let mut f = tableau_from_graph(g)?;
        apply_fusion_oracle(
            &mut f,
            site.i,
            site.j,
            FusionMode::Failure,
            [Some(m_i), Some(m_j)],
            &mut rng(),
        )?;
        let m_zz = m_i ^ m_j;
        if m_zz {
            f.apply_pauli(&table.zz_operator(n));
        }
        // Reference: only the recovered ZZ information is kept. For an X-type
        // ring pair XX is the readout itself, so it is simply never measured.
        let mut r = match site.kind {
            MergeKind::RingPair if g.vertex_type(site.j) == VertexType::X => {
                creation_target(g, site, m_zz)?
            }
            _ => fusion_target(g, site, false, m_zz)?,
        };
        if !e_xx.is_identity_letters() {
            let Some(sign) = f.sign_of(&e_xx) else {
                return Err(OracleError::FailureMismatch { m_i, m_j });
            };
            r.measure_pauli(&e_xx, Some(sign), &mut rng())
                .map_err(|_| OracleError::FailureMismatch { m_i, m_j })?;
        }
        for (q, m) in [(site.i, m_i), (site.j, m_j)] {
            r.measure_pauli(&PauliString::single(n, q, Pauli::Z), Some(m), &mut rng())
                .map_err(|_| OracleError::FailureMismatch { m_i, m_j })?;
        }
        if !groups_equal(&f, &r) {
            return Err(OracleError::FailureMismatch { m_i, m_j });
        }
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use VertexType::{X, Z};

    /// `a - i' - i`   and   `j - j' - b`, with `i` Z-type and `j` X-type.
    fn dangling(jp_type: VertexType) -> (TypedGraph, FusionSite) {
        // 0 = a, 1 = i', 2 = i, 3 = j, 4 = j', 5 = b
        let g = TypedGraph::new(
            vec![X, X, Z, X, jp_type, X],
            &[(0, 1), (1, 2), (3, 4), (4, 5)],
        )
        .unwrap();
        (
            g,
            FusionSite {
                i: 2,
                j: 3,
                kind: MergeKind::DanglingPair,
            },
        )
    }

    #[test]
    fn x_to_z_merge_corrections() {
        let (g, site) = dangling(Z);
        let t = derive_correction_targets(&g, site).unwrap();
        assert_eq!(t.xx_targets, vec![(1, Pauli::Z)]);
        assert_eq!(t.zz_targets, vec![(4, Pauli::X)]);
        verify_failure_equivalence(&g, site, &t).unwrap();
    }

    #[test]
    fn x_to_x_merge_corrections() {
        let (g, site) = dangling(X);
        let t = derive_correction_targets(&g, site).unwrap();
        assert_eq!(t.xx_targets, vec![(1, Pauli::Z)]);
        assert_eq!(t.zz_targets, vec![(4, Pauli::Z)]);
    }

    #[test]
    fn merged_group_differs_from_input_group() {
        let (g, site) = dangling(Z);
        let before = tableau_from_graph(&g).unwrap();
        let after = fusion_target(&g, site, false, false).unwrap();
        assert!(!groups_equal(&before, &after));
    }

    #[test]
    fn failure_contains_z_on_attachment() {
        let (g, site) = dangling(Z);
        let t = derive_correction_targets(&g, site).unwrap();
        for f in verify_failure_equivalence(&g, site, &t).unwrap() {
            assert!(f.sign_of(&PauliString::single(6, 1, Pauli::Z)).is_some());
        }
    }

    /// Two paths `a - i - b` and `c - j - d` with `i`, `j` of type `t`.
    fn ring_pair(t: VertexType) -> (TypedGraph, FusionSite) {
        let other = X;
        let g = TypedGraph::new(
            vec![other, t, other, other, t, other],
            &[(0, 1), (1, 2), (3, 4), (4, 5)],
        )
        .unwrap();
        (
            g,
            FusionSite {
                i: 1,
                j: 4,
                kind: MergeKind::RingPair,
            },
        )
    }

    #[test]
    fn z_pair_corrects_neighbours_of_j() {
        let (g, site) = ring_pair(Z);
        let t = derive_correction_targets(&g, site).unwrap();
        assert_eq!(t.xx_targets, vec![(3, Pauli::Z), (5, Pauli::Z)]);
        assert!(t.zz_targets.is_empty());
        for f in verify_failure_equivalence(&g, site, &t).unwrap() {
            let zz = PauliString::from_sparse(6, &[(3, Pauli::Z), (5, Pauli::Z)]);
            assert!(f.sign_of(&zz).is_some());
        }
    }

    #[test]
    fn x_pair_creation_is_zz() {
        let (g, site) = ring_pair(X);
        let t = derive_correction_targets(&g, site).unwrap();
        assert!(t.xx_targets.is_empty());
        assert_eq!(t.zz_targets, vec![(3, Pauli::Z), (5, Pauli::Z)]);
        verify_failure_equivalence(&g, site, &t).unwrap();
    }

    #[test]
    fn invalid_sites_are_rejected() {
        let (g, mut site) = dangling(Z);
        site.i = 1;
        assert!(matches!(
            derive_correction_targets(&g, site),
            Err(OracleError::InvalidFusion(_))
        ));
    }

    #[test]
    fn failure_record_recovers_zz() {
        let g = TypedGraph::new(vec![X, X], &[]).unwrap();
        let mut t = tableau_from_graph(&g).unwrap();
        let r = apply_fusion_oracle(&mut t, 0, 1, FusionMode::Failure, [Some(true), Some(false)], &mut rng())
            .unwrap();
        assert_eq!(r.m_zz, Some(true));
        assert_eq!(r.m_xx, None);
    }
}
