//! Peeling decoder for erasures on the syndrome graph.
//!
//! The erased mechanisms form a subgraph of the syndrome graph. A spanning
//! forest of that subgraph is built with union-find, and leaves are peeled
//! off one at a time: a leaf edge joins the correction iff its pendant cell
//! is a defect. The same union-find tracks winding offsets, so a cycle that
//! wraps the torus is detected while the forest is built.

use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeDims;
use crate::syndrome::{SyndromeGraph, Winding};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("mechanism {0} is not in the syndrome graph")]
    UnknownMechanism(usize),
    #[error("cell {0} is a defect but its erased component has odd defect parity")]
    OddComponent(usize),
    #[error("defect {0} is not touched by any erased mechanism")]
    DefectOutsideErasure(usize),
    #[error("correction leaves {0} defects unmatched")]
    DefectMismatch(usize),
    #[error("mechanism {0} leaves its plane; per-plane failure counting needs in-plane erasures")]
    OutOfPlane(usize),
}

/// Which winding parities count as a logical failure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureAggregation {
    /// Both sublattices, axes whose length is at least 3.
    #[default]
    LongAxes,
    /// Both sublattices, every axis.
    AllAxes,
    /// Every (sublattice, z-plane) pair counted as its own instance, failing
    /// on odd x or y winding. Only valid when no erased mechanism leaves its
    /// plane.
    PerPlane,
}

impl FailureAggregation {
    pub fn mask(self, dims: &LatticeDims) -> u8 {
        if self == FailureAggregation::PerPlane {
            return 0b011_011;
        }
        let lengths = dims.lengths();
        let mut m = 0u8;
        for (axis, &len) in lengths.iter().enumerate() {
            if self == FailureAggregation::AllAxes || len >= 3 {
                m |= (1 << axis) | (1 << (3 + axis));
            }
        }
        m
    }
}

impl fmt::Display for FailureAggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureAggregation::LongAxes => "long-axes",
            FailureAggregation::AllAxes => "all-axes",
            FailureAggregation::PerPlane => "per-plane",
        })
    }
}

impl std::str::FromStr for FailureAggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long-axes" => Ok(FailureAggregation::LongAxes),
            "all-axes" => Ok(FailureAggregation::AllAxes),
            "per-plane" => Ok(FailureAggregation::PerPlane),
            _ => Err(format!(
                "unknown failure aggregation {s:?} (expected long-axes, all-axes or per-plane)"
            )),
        }
    }
}

/// A set of erased mechanism ids, kept in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ErasurePattern {
    ids: Vec<u32>,
    member: Vec<bool>,
}

impl ErasurePattern {
    pub fn new(n_mechanisms: usize) -> Self {
        Self {
            ids: Vec::new(),
            member: vec![false; n_mechanisms],
        }
    }

    pub fn from_ids(n_mechanisms: usize, ids: &[usize]) -> Result<Self, DecodeError> {
        let mut e = Self::new(n_mechanisms);
        for &m in ids {
            e.insert(m)?;
        }
        Ok(e)
    }

    pub fn insert(&mut self, m: usize) -> Result<(), DecodeError> {
        let slot = self
            .member
            .get_mut(m)
            .ok_or(DecodeError::UnknownMechanism(m))?;
        if !*slot {
            *slot = true;
            self.ids.push(m as u32);
        }
        Ok(())
    }

    pub fn extend(&mut self, ms: &[usize]) -> Result<(), DecodeError> {
        ms.iter().try_for_each(|&m| self.insert(m))
    }

    pub fn contains(&self, m: usize) -> bool {
        self.member.get(m).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().map(|&m| m as usize)
    }

    pub fn clear(&mut self) {
        for &m in &self.ids {
            self.member[m as usize] = false;
        }
        self.ids.clear();
    }

    fn resize(&mut self, n_mechanisms: usize) {
        if self.member.len() < n_mechanisms {
            self.member.resize(n_mechanisms, false);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub correction: Vec<usize>,
    pub residual: Winding,
    pub failure: bool,
}

/// Summary of one decoded trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub decoder_failure: bool,
    pub percolation_failure: bool,
    pub residual: Winding,
    pub spans: Winding,
    /// Planes whose residual winds, when counting per plane.
    pub failed_planes: u32,
    /// Planes holding an erased winding cycle, when counting per plane.
    pub spanned_planes: u32,
}

const OFF_PLANE: u32 = u32::MAX;

/// Plane slot `sublattice · planes + z` of every in-plane mechanism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneIndex {
    slot: Vec<u32>,
    count: usize,
}

impl PlaneIndex {
    pub fn new(sg: &SyndromeGraph) -> Self {
        let per_sub = (0..sg.n_cells()).map(|c| sg.cell_plane(c) + 1).max().unwrap_or(0);
        let slot = sg
            .mechanisms()
            .iter()
            .map(|m| {
                m.plane
                    .map_or(OFF_PLANE, |z| (m.sublattice.index() * per_sub + z) as u32)
            })
            .collect();
        Self {
            slot,
            count: 2 * per_sub,
        }
    }

    /// Number of (sublattice, plane) pairs.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn slot(&self, m: usize) -> Option<usize> {
        let s = self.slot[m];
        (s != OFF_PLANE).then_some(s as usize)
    }
}

/// Scratch buffers for one worker, reused across trials.
#[derive(Clone, Debug, Default)]
pub struct DecoderWorkspace {
    parent: Vec<u32>,
    offset: Vec<u8>,
    size: Vec<u32>,
    degree: Vec<u32>,
    edge_xor: Vec<u32>,
    defect: Vec<bool>,
    active: Vec<bool>,
    touched: Vec<u32>,
    stack: Vec<u32>,
    order: Vec<u32>,
    plane_res: Vec<u8>,
    plane_span: Vec<u8>,
    /// Shuffle the forest construction order with the trial RNG.
    pub shuffle_forest: bool,
    pub erasure: ErasurePattern,
    error: Vec<u32>,
    correction: Vec<u32>,
    record: bool,
}

impl DecoderWorkspace {
    pub fn new(sg: &SyndromeGraph) -> Self {
        let mut w = Self::default();
        w.prepare(sg);
        w
    }

    fn prepare(&mut self, sg: &SyndromeGraph) {
        let n = sg.n_cells();
        if self.parent.len() < n {
            self.parent.resize(n, 0);
            self.offset.resize(n, 0);
            self.size.resize(n, 0);
            self.degree.resize(n, 0);
            self.edge_xor.resize(n, 0);
            self.defect.resize(n, false);
            self.active.resize(n, false);
        }
        self.erasure.resize(sg.n_mechanisms());
    }

    fn touch(&mut self, c: u32) {
        let i = c as usize;
        if !self.active[i] {
            self.active[i] = true;
            self.parent[i] = c;
            self.offset[i] = 0;
            self.size[i] = 1;
            self.degree[i] = 0;
            self.edge_xor[i] = 0;
            self.defect[i] = false;
            self.touched.push(c);
        }
    }

    fn reset_cells(&mut self) {
        for &c in &self.touched {
            self.active[c as usize] = false;
        }
        self.touched.clear();
    }

    /// Root of `c` and the winding offset from `c` to it, with path
    /// compression.
    fn find(&mut self, c: u32) -> (u32, u8) {
        let mut root = c;
        let mut acc = 0u8;
        while self.parent[root as usize] != root {
            acc ^= self.offset[root as usize];
            root = self.parent[root as usize];
        }
        let mut v = c;
        let mut rem = acc;
        while self.parent[v as usize] != root && v != root {
            let next = self.parent[v as usize];
            let o = self.offset[v as usize];
            self.parent[v as usize] = root;
            self.offset[v as usize] = rem;
            rem ^= o;
            v = next;
        }
        (root, acc)
    }

    /// Builds the spanning forest over the current erasure and returns the
    /// winding parities of all erased cycles.
    fn build_forest(&mut self, sg: &SyndromeGraph, slots: &[u32]) -> u8 {
        let ends = sg.ends();
        let cross = sg.crossings();
        let mut spans = 0u8;
        for k in 0..self.order.len() {
            let e = self.order[k];
            let [a, b] = ends[e as usize];
            let c = cross[e as usize];
            let (ra, oa) = self.find(a);
            let (rb, ob) = self.find(b);
            if ra == rb {
                let par = oa ^ ob ^ c;
                spans |= par;
                if !slots.is_empty() {
                    self.plane_span[slots[e as usize] as usize] |= par;
                }
                continue;
            }
            let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
                (ra, rb)
            } else {
                (rb, ra)
            };
            self.parent[small as usize] = big;
            self.offset[small as usize] = oa ^ ob ^ c;
            self.size[big as usize] += self.size[small as usize];
            for v in [a, b] {
                self.degree[v as usize] += 1;
                self.edge_xor[v as usize] ^= e;
            }
        }
        spans
    }

    /// Peels the forest; returns the crossing parity of the correction.
    fn peel(&mut self, sg: &SyndromeGraph, slots: &[u32]) -> Result<u8, DecodeError> {
        let ends = sg.ends();
        let cross = sg.crossings();
        let mut corr = 0u8;
        self.stack.clear();
        for &c in &self.touched {
            if self.degree[c as usize] == 1 {
                self.stack.push(c);
            }
        }
        while let Some(v) = self.stack.pop() {
            let vi = v as usize;
            if self.degree[vi] != 1 {
                continue;
            }
            let e = self.edge_xor[vi];
            let [a, b] = ends[e as usize];
            let u = if a == v { b } else { a };
            let ui = u as usize;
            self.degree[vi] = 0;
            self.edge_xor[vi] = 0;
            self.degree[ui] -= 1;
            self.edge_xor[ui] ^= e;
            if self.defect[vi] {
                self.defect[vi] = false;
                self.defect[ui] ^= true;
                corr ^= cross[e as usize];
                if !slots.is_empty() {
                    self.plane_res[slots[e as usize] as usize] ^= cross[e as usize];
                }
                if self.record {
                    self.correction.push(e);
                }
            }
            if self.degree[ui] == 1 {
                self.stack.push(u);
            }
        }
        if let Some(&c) = self.touched.iter().find(|&&c| self.defect[c as usize]) {
            return Err(DecodeError::OddComponent(c as usize));
        }
        Ok(corr)
    }

    fn load_order<R: RngCore + ?Sized>(&mut self, rng: Option<&mut R>) {
        self.order.clear();
        self.order.extend_from_slice(&self.erasure.ids);
        if self.shuffle_forest {
            if let Some(rng) = rng {
                self.order.shuffle(rng);
            }
        }
    }

    /// Decodes one trial on the erasure held in `self.erasure`: samples a
    /// uniformly random error on it, peels, and compares winding parities
    /// under `mask`.
    pub fn run_trial<R: RngCore + ?Sized>(
        &mut self,
        sg: &SyndromeGraph,
        mask: u8,
        rng: &mut R,
    ) -> Result<TrialOutcome, DecodeError> {
        self.run(sg, mask, None, rng)
    }

    /// Like [`run_trial`](Self::run_trial), also counting failures of every
    /// (sublattice, plane) pair separately.
    pub fn run_trial_per_plane<R: RngCore + ?Sized>(
        &mut self,
        sg: &SyndromeGraph,
        mask: u8,
        planes: &PlaneIndex,
        rng: &mut R,
    ) -> Result<TrialOutcome, DecodeError> {
        self.run(sg, mask, Some(planes), rng)
    }

    fn run<R: RngCore + ?Sized>(
        &mut self,
        sg: &SyndromeGraph,
        mask: u8,
        planes: Option<&PlaneIndex>,
        rng: &mut R,
    ) -> Result<TrialOutcome, DecodeError> {
        self.prepare(sg);
        let slots: &[u32] = match planes {
            Some(p) => {
                if let Some(&m) = self.erasure.ids.iter().find(|&&m| p.slot[m as usize] == OFF_PLANE) {
                    return Err(DecodeError::OutOfPlane(m as usize));
                }
                self.plane_res.clear();
                self.plane_res.resize(p.count, 0);
                self.plane_span.clear();
                self.plane_span.resize(p.count, 0);
                &p.slot
            }
            None => &[],
        };
        let ends = sg.ends();
        let cross = sg.crossings();
        self.error.clear();
        self.correction.clear();
        for k in 0..self.erasure.ids.len() {
            let [a, b] = ends[self.erasure.ids[k] as usize];
            self.touch(a);
            self.touch(b);
        }
        let mut err = 0u8;
        let mut bits = 0u64;
        for (k, &m) in self.erasure.ids.iter().enumerate() {
            if k % 64 == 0 {
                bits = rng.next_u64();
            }
            if bits & 1 == 1 {
                let [a, b] = ends[m as usize];
                self.defect[a as usize] ^= true;
                self.defect[b as usize] ^= true;
                err ^= cross[m as usize];
                if !slots.is_empty() {
                    self.plane_res[slots[m as usize] as usize] ^= cross[m as usize];
                }
                if self.record {
                    self.error.push(m);
                }
            }
            bits >>= 1;
        }
        self.load_order(Some(rng));
        let spans = self.build_forest(sg, slots);
        let corr = self.peel(sg, slots);
        self.reset_cells();
        let corr = corr?;
        let residual = Winding(err ^ corr);
        let count = |v: &[u8]| v.iter().filter(|&&w| w & mask != 0).count() as u32;
        let (failed_planes, spanned_planes) = if slots.is_empty() {
            (0, 0)
        } else {
            (count(&self.plane_res), count(&self.plane_span))
        };
        Ok(TrialOutcome {
            decoder_failure: residual.0 & mask != 0,
            percolation_failure: spans & mask != 0,
            residual,
            spans: Winding(spans),
            failed_planes,
            spanned_planes,
        })
    }

    /// Like [`run_trial`](Self::run_trial), also returning the sampled error
    /// and the correction.
    pub fn run_trial_recorded<R: RngCore + ?Sized>(
        &mut self,
        sg: &SyndromeGraph,
        mask: u8,
        rng: &mut R,
    ) -> Result<(TrialOutcome, Vec<usize>, Vec<usize>), DecodeError> {
        self.record = true;
        let out = self.run_trial(sg, mask, rng);
        self.record = false;
        let out = out?;
        let err = self.error.iter().map(|&m| m as usize).collect();
        let corr = self.correction.iter().map(|&m| m as usize).collect();
        Ok((out, err, corr))
    }

    /// Peels a given defect set on the erasure held in `self.erasure`.
    pub fn decode(&mut self, sg: &SyndromeGraph, defects: &[usize]) -> Result<Vec<usize>, DecodeError> {
        self.prepare(sg);
        let ends = sg.ends();
        for k in 0..self.erasure.ids.len() {
            let [a, b] = ends[self.erasure.ids[k] as usize];
            self.touch(a);
            self.touch(b);
        }
        for &d in defects {
            if d >= sg.n_cells() || !self.active[d] {
                self.reset_cells();
                return Err(DecodeError::DefectOutsideErasure(d));
            }
            self.defect[d] ^= true;
        }
        self.load_order::<rand_chacha::ChaCha8Rng>(None);
        self.build_forest(sg, &[]);
        self.record = true;
        self.correction.clear();
        let res = self.peel(sg, &[]);
        self.record = false;
        self.reset_cells();
        res?;
        let mut out: Vec<usize> = self.correction.iter().map(|&m| m as usize).collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Winding parities of all cycles in the erasure held in `self.erasure`.
    pub fn spans(&mut self, sg: &SyndromeGraph) -> Winding {
        self.prepare(sg);
        let ends = sg.ends();
        for k in 0..self.erasure.ids.len() {
            let [a, b] = ends[self.erasure.ids[k] as usize];
            self.touch(a);
            self.touch(b);
        }
        self.load_order::<rand_chacha::ChaCha8Rng>(None);
        let s = self.build_forest(sg, &[]);
        self.reset_cells();
        Winding(s)
    }
}

/// Flips each erased mechanism independently with probability 1/2.
pub fn sample_error_on_erasure<R: RngCore + ?Sized>(e: &ErasurePattern, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::new();
    let mut bits = 0u64;
    for (k, m) in e.ids().enumerate() {
        if k % 64 == 0 {
            bits = rng.next_u64();
        }
        if bits & 1 == 1 {
            out.push(m);
        }
        bits >>= 1;
    }
    out
}

/// A correction supported on `e` whose defects equal `defects`.
pub fn peel_decode(
    sg: &SyndromeGraph,
    e: &ErasurePattern,
    defects: &[usize],
) -> Result<Vec<usize>, DecodeError> {
    let mut w = DecoderWorkspace::new(sg);
    w.erasure = e.clone();
    w.erasure.resize(sg.n_mechanisms());
    w.decode(sg, defects)
}

/// Winding parities of the cycles of the erased subgraph: bit set iff some
/// erased cycle winds an odd number of times along that axis.
pub fn spans_nontrivially(sg: &SyndromeGraph, e: &ErasurePattern) -> Winding {
    let mut w = DecoderWorkspace::new(sg);
    w.erasure = e.clone();
    w.erasure.resize(sg.n_mechanisms());
    w.spans(sg)
}

/// Winding parities of `error + correction`, masked by `mask`.
pub fn trial_failure(
    sg: &SyndromeGraph,
    error: &[usize],
    correction: &[usize],
    mask: u8,
) -> Result<DecodeResult, DecodeError> {
    let mut all: Vec<usize> = error.iter().chain(correction).copied().collect();
    if let Some(&m) = all.iter().find(|&&m| m >= sg.n_mechanisms()) {
        return Err(DecodeError::UnknownMechanism(m));
    }
    all.sort_unstable();
    let mut residual = Vec::new();
    let mut k = 0;
    while k < all.len() {
        let mut n = 1;
        while k + n < all.len() && all[k + n] == all[k] {
            n += 1;
        }
        if n % 2 == 1 {
            residual.push(all[k]);
        }
        k += n;
    }
    let w = sg
        .winding_parity(&residual)
        .map_err(|_| DecodeError::DefectMismatch(sg.defects_from_error(&residual).len()))?;
    Ok(DecodeResult {
        correction: correction.to_vec(),
        residual: w,
        failure: w.0 & mask != 0,
    })
}

/// Line-oriented record of one trial, for triage of failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialDebug {
    pub seed: u64,
    pub index: u64,
    pub erased: Vec<usize>,
    pub error: Vec<usize>,
    pub defects: Vec<usize>,
    pub correction: Vec<usize>,
    pub outcome: TrialOutcome,
}

impl fmt::Display for TrialDebug {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| {
            let mut s = String::new();
            for (k, x) in v.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                write!(s, "{x}").unwrap();
            }
            s
        };
        writeln!(f, "trial seed={} index={}", self.seed, self.index)?;
        writeln!(f, "erased {}", list(&self.erased))?;
        writeln!(f, "error {}", list(&self.error))?;
        writeln!(f, "defects {}", list(&self.defects))?;
        writeln!(f, "correction {}", list(&self.correction))?;
        write!(
            f,
            "residual {} spans {} decoder_failure {} percolation_failure {}",
            self.outcome.residual,
            self.outcome.spans,
            self.outcome.decoder_failure,
            self.outcome.percolation_failure
        )
    }
}
