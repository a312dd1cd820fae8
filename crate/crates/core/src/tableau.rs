//! Stabilizer tableau with destabilizer bookkeeping.
//!
//! Holds `n` independent commuting stabilizer generators and `n`
//! destabilizers, where destabilizer `k` anticommutes with stabilizer `k` and
//! commutes with every other row. Measuring an arbitrary Pauli product is
//! the usual Aaronson-Gottesman update generalised from single-qubit `Z` to
//! any Hermitian Pauli string.

use rand::Rng;
use thiserror::Error;

use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StabilizerError {
    #[error("expected {expected} generators on {expected} qubits, got {got}")]
    WrongGeneratorCount { expected: usize, got: usize },
    #[error("generators {0} and {1} anticommute")]
    Anticommuting(usize, usize),
    #[error("generators are linearly dependent")]
    Dependent,
    #[error("operator acts on {got} qubits, tableau has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("measurement of {op} is deterministic with outcome {actual}, forced outcome {forced} contradicts it")]
    ForcedOutcomeContradiction {
        op: String,
        actual: bool,
        forced: bool,
    },
}

/// Result of a Pauli measurement: `outcome` is `true` for eigenvalue −1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: bool,
    pub deterministic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    destab: Vec<PauliString>,
    stab: Vec<PauliString>,
}

impl StabilizerTableau {
    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Self {
        Self {
            n,
            destab: (0..n).map(|q| PauliString::single(n, q, Pauli::X)).collect(),
            stab: (0..n).map(|q| PauliString::single(n, q, Pauli::Z)).collect(),
        }
    }

    /// Assembles a tableau from rows the caller guarantees are a valid
    /// stabilizer/destabilizer pairing.
    pub(crate) fn from_rows_unchecked(destab: Vec<PauliString>, stab: Vec<PauliString>) -> Self {
        let n = stab.len();
        debug_assert_eq!(destab.len(), n);
        Self { n, destab, stab }
    }

    /// Tableau of the state stabilized by `generators` (signs included).
    ///
    /// Requires exactly `n` independent, pairwise commuting generators on `n`
    /// qubits. Destabilizers are found by solving the symplectic pairing
    /// conditions over GF(2).
    pub fn from_generators(generators: Vec<PauliString>) -> Result<Self, StabilizerError> {
        let n = generators.first().map_or(0, |g| g.n_qubits());
        if generators.len() != n {
            return Err(StabilizerError::WrongGeneratorCount {
                expected: n,
                got: generators.len(),
            });
        }
        for g in &generators {
            if g.n_qubits() != n {
                return Err(StabilizerError::LengthMismatch {
                    expected: n,
                    got: g.n_qubits(),
                });
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if !generators[a].commutes(&generators[b]) {
                    return Err(StabilizerError::Anticommuting(a, b));
                }
            }
        }
        let mut destab = solve_destabilizers(&generators)?;
        // Pairwise-commuting destabilizers: multiplying D_k by S_j toggles only
        // its commutation with D_j.
        for k in 0..n {
            for j in 0..k {
                if !destab[k].commutes(&destab[j]) {
                    let s = generators[j].clone();
                    destab[k].mul_assign_unsigned(&s);
                }
            }
        }
        for d in &mut destab {
            d.set_negative(false);
        }
        Ok(Self {
            n,
            destab,
            stab: generators,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.stab
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.destab
    }

    /// Full invariant check: pairing relations and commutation.
    pub fn is_consistent(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                self.stab[i].commutes(&self.stab[j])
                    && self.destab[i].commutes(&self.destab[j])
                    && (self.destab[i].commutes(&self.stab[j]) == (i != j))
            })
        })
    }

    fn check_len(&self, p: &PauliString) {
        assert_eq!(
            p.n_qubits(),
            self.n,
            "operator on {} qubits applied to {}-qubit tableau",
            p.n_qubits(),
            self.n
        );
    }

    /// Conjugates the state by the Pauli `p`.
    pub fn apply_pauli(&mut self, p: &PauliString) {
        self.check_len(p);
        for s in &mut self.stab {
            if !s.commutes(p) {
                let neg = !s.is_negative();
                s.set_negative(neg);
            }
        }
    }

    /// If `±p` belongs to the stabilizer group, returns `Some(negative)`
    /// giving the sign with which the group contains the letters of `p`.
    pub fn sign_of(&self, p: &PauliString) -> Option<bool> {
        self.check_len(p);
        if self.stab.iter().any(|s| !s.commutes(p)) {
            return None;
        }
        let mut acc = PauliString::identity(self.n);
        for k in 0..self.n {
            if !self.destab[k].commutes(p) {
                acc = acc.mul(&self.stab[k]);
            }
        }
        debug_assert!(acc.same_letters(p), "full-rank tableau must generate {p}");
        Some(acc.is_negative())
    }

    /// Signed membership: `p` (with its sign) is an element of the group.
    pub fn contains(&self, p: &PauliString) -> bool {
        self.sign_of(p) == Some(p.is_negative())
    }

    /// Measures the Hermitian Pauli `p`.
    ///
    /// Deterministic outcomes leave the tableau unchanged. Random outcomes use
    /// `forced` when given, else a fair coin from `rng`. A forced outcome that
    /// contradicts a deterministic one is an error.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        forced: Option<bool>,
        rng: &mut R,
    ) -> Result<Measurement, StabilizerError> {
        self.check_len(p);
        let pivot = self.stab.iter().position(|s| !s.commutes(p));
        let Some(pivot) = pivot else {
            let negative = self.sign_of(p).expect("commutes with all stabilizers");
            let outcome = negative ^ p.is_negative();
            if let Some(f) = forced {
                if f != outcome {
                    return Err(StabilizerError::ForcedOutcomeContradiction {
                        op: p.to_string(),
                        actual: outcome,
                        forced: f,
                    });
                }
            }
            return Ok(Measurement {
                outcome,
                deterministic: true,
            });
        };

        let pivot_row = self.stab[pivot].clone();
        for k in 0..self.n {
            if k != pivot && !self.stab[k].commutes(p) {
                self.stab[k] = self.stab[k].mul(&pivot_row);
            }
            if k != pivot && !self.destab[k].commutes(p) {
                self.destab[k].mul_assign_unsigned(&pivot_row);
            }
        }
        let outcome = forced.unwrap_or_else(|| rng.random::<bool>());
        let mut new_row = p.clone();
        new_row.set_negative(p.is_negative() ^ outcome);
        self.destab[pivot] = pivot_row.with_sign(false);
        self.stab[pivot] = new_row;
        Ok(Measurement {
            outcome,
            deterministic: false,
        })
    }

    /// Measures single-qubit `Z` on `q` and flips it back to `|0⟩`.
    pub fn reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) {
        let z = PauliString::single(self.n, q, Pauli::Z);
        let forced = if self.sign_of(&z).is_none() { Some(false) } else { None };
        let m = self
            .measure_pauli(&z, forced, rng)
            .expect("forcing only applied to random outcomes");
        if m.outcome {
            self.apply_pauli(&PauliString::single(self.n, q, Pauli::X));
        }
    }
}

/// Signed group equality: every generator of `a` lies in the group of `b`
/// with matching sign. Both tableaux are full rank, so inclusion of
/// generators gives equality.
pub fn groups_equal(a: &StabilizerTableau, b: &StabilizerTableau) -> bool {
    assert_eq!(a.n, b.n, "comparing tableaux on different qubit counts");
    a.stab.iter().all(|s| b.contains(s))
}

/// Solves `<D_k, S_j> = δ_kj` over GF(2) for some set of `D_k`.
#[allow(clippy::needless_range_loop)]
fn solve_destabilizers(gens: &[PauliString]) -> Result<Vec<PauliString>, StabilizerError> {
    let n = gens.len();
    // Row j of the system is the symplectic dual of S_j, so that the dot
    // product of a candidate (x|z) with row j equals <candidate, S_j>.
    let cols = 2 * n;
    let mut rows: Vec<Vec<bool>> = gens
        .iter()
        .map(|g| {
            let mut r = vec![false; cols];
            for q in 0..n {
                let (x, z) = g.get(q).bits();
                r[q] = z;
                r[n + q] = x;
            }
            r
        })
        .collect();
    // Augmented identity tracks the row combinations.
    let mut aug: Vec<Vec<bool>> = (0..n).map(|j| (0..n).map(|k| j == k).collect()).collect();
    let mut pivots = Vec::with_capacity(n);
    let mut r = 0;
    for c in 0..cols {
        if r == n {
            break;
        }
        let Some(sel) = (r..n).find(|&i| rows[i][c]) else {
            continue;
        };
        rows.swap(r, sel);
        aug.swap(r, sel);
        for i in 0..n {
            if i != r && rows[i][c] {
                let (src, src_aug) = (rows[r].clone(), aug[r].clone());
                for (a, b) in rows[i].iter_mut().zip(src) {
                    *a ^= b;
                }
                for (a, b) in aug[i].iter_mut().zip(src_aug) {
                    *a ^= b;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if r < n {
        return Err(StabilizerError::Dependent);
    }
    // Reduced system: rows[i] has a single pivot column pivots[i] among the
    // pivot columns; free columns set to zero. For target e_k the solution
    // vector is sum_i aug[i][k] * e_{pivots[i]}.
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut d = PauliString::identity(n);
        for i in 0..n {
            if aug[i][k] {
                let c = pivots[i];
                let (q, is_x) = if c < n { (c, true) } else { (c - n, false) };
                let cur = d.get(q);
                let add = if is_x { Pauli::X } else { Pauli::Z };
                d.set(q, cur.mul_letter(add));
            }
        }
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn measuring_z_on_zero_is_deterministic() {
        let mut t = StabilizerTableau::zero_state(2);
        let before = t.clone();
        let m = t.measure_pauli(&ps("ZI"), None, &mut rng()).unwrap();
        assert_eq!(m, Measurement { outcome: false, deterministic: true });
        assert_eq!(t, before);
    }

    #[test]
    fn forced_x_measurement_on_zero() {
        let mut t = StabilizerTableau::zero_state(1);
        let m = t.measure_pauli(&ps("X"), Some(false), &mut rng()).unwrap();
        assert!(!m.deterministic);
        assert!(t.contains(&ps("X")));
        assert!(!t.contains(&ps("-X")));
        assert!(t.is_consistent());
    }

    #[test]
    fn contradicting_forced_outcome_is_rejected() {
        let mut t = StabilizerTableau::zero_state(1);
        let err = t.measure_pauli(&ps("Z"), Some(true), &mut rng()).unwrap_err();
        assert!(matches!(err, StabilizerError::ForcedOutcomeContradiction { .. }));
    }

    #[test]
    fn bell_pair_second_measurement_deterministic() {
        let mut t = StabilizerTableau::zero_state(2);
        let m1 = t.measure_pauli(&ps("XX"), Some(true), &mut rng()).unwrap();
        assert!(!m1.deterministic);
        // ZZ was already +1 on |00⟩ and commutes with XX.
        let m2 = t.measure_pauli(&ps("ZZ"), None, &mut rng()).unwrap();
        assert_eq!(m2, Measurement { outcome: false, deterministic: true });
        assert!(t.contains(&ps("-XX")));
        assert!(t.contains(&ps("YY")));
    }

    #[test]
    fn from_generators_accepts_row_products() {
        let a = StabilizerTableau::from_generators(vec![ps("XX"), ps("ZZ")]).unwrap();
        let b = StabilizerTableau::from_generators(vec![ps("-YY"), ps("ZZ")]).unwrap();
        assert!(a.is_consistent() && b.is_consistent());
        assert!(groups_equal(&a, &b));
        let c = StabilizerTableau::from_generators(vec![ps("-XX"), ps("ZZ")]).unwrap();
        assert!(!groups_equal(&a, &c));
    }

    #[test]
    fn from_generators_rejects_bad_input() {
        assert_eq!(
            StabilizerTableau::from_generators(vec![ps("XI"), ps("ZI")]).unwrap_err(),
            StabilizerError::Anticommuting(0, 1)
        );
        assert_eq!(
            StabilizerTableau::from_generators(vec![ps("ZZ"), ps("-ZZ")]).unwrap_err(),
            StabilizerError::Dependent
        );
        assert!(matches!(
            StabilizerTableau::from_generators(vec![ps("ZZ")]),
            Err(StabilizerError::WrongGeneratorCount { .. })
        ));
    }

    #[test]
    fn reset_returns_qubit_to_zero() {
        let mut t = StabilizerTableau::from_generators(vec![ps("XX"), ps("-ZZ")]).unwrap();
        t.reset(0, &mut rng());
        t.reset(1, &mut rng());
        assert!(groups_equal(&t, &StabilizerTableau::zero_state(2)));
    }

    #[test]
    fn measuring_group_member_with_sign() {
        let t = StabilizerTableau::from_generators(vec![ps("-XX"), ps("ZZ")]).unwrap();
        let mut u = t.clone();
        let m = u.measure_pauli(&ps("XX"), None, &mut rng()).unwrap();
        assert_eq!(m, Measurement { outcome: true, deterministic: true });
        assert_eq!(t.sign_of(&ps("YY")), Some(false));
    }
}
