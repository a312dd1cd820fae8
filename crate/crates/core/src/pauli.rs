//! Binary-symplectic Pauli operators.
//!
//! A [`PauliString`] stores one X bit and one Z bit per qubit plus a real
//! sign. `Y` is the letter with both bits set, read as the Hermitian operator
//! `Y = iXZ`. Only real phases are representable; multiplying two
//! anticommuting strings is a contract violation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    #[inline]
    pub fn anticommutes(self, other: Pauli) -> bool {
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        (x1 & z2) ^ (z1 & x2)
    }

    /// Product ignoring phase.
    #[inline]
    pub fn mul_letter(self, other: Pauli) -> Pauli {
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        Pauli::from_bits(x1 ^ x2, z1 ^ z2)
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliParseError {
    #[error("invalid Pauli letter {0:?}")]
    BadLetter(char),
    #[error("empty Pauli string")]
    Empty,
}

/// Signed Pauli operator on `n` qubits in symplectic form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self {
            n,
            x: vec![0; w],
            z: vec![0; w],
            negative: false,
        }
    }

    /// `p` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(q, p);
        s
    }

    /// Builds a string from `(qubit, letter)` pairs. Repeated qubits multiply
    /// letters without tracking phase, so callers pass each qubit once.
    pub fn from_sparse(n: usize, support: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n);
        for &(q, p) in support {
            let cur = s.get(q);
            s.set(q, cur.mul_letter(p));
        }
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.negative = negative;
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    pub fn with_sign(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    #[inline]
    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (w, b) = (q / 64, q % 64);
        let (px, pz) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((px as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((pz as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn is_identity_letters(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Non-identity letters in ascending qubit order.
    pub fn support(&self) -> Vec<(usize, Pauli)> {
        (0..self.n)
            .map(|q| (q, self.get(q)))
            .filter(|&(_, p)| p != Pauli::I)
            .collect()
    }

    /// True iff the symplectic inner product vanishes.
    ///
    /// Panics if the strings act on different numbers of qubits.
    pub fn commutes(&self, other: &PauliString) -> bool {
        assert_eq!(
            self.n, other.n,
            "commutation check between {}- and {}-qubit strings",
            self.n, other.n
        );
        let mut acc = 0u32;
        for w in 0..self.x.len() {
            acc ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        acc == 0
    }

    /// Letters equal, sign ignored.
    pub fn same_letters(&self, other: &PauliString) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    /// Power of `i` picked up when forming `self * other` from the letters.
    fn product_phase(&self, other: &PauliString) -> u32 {
        let mut plus = 0i64;
        let mut minus = 0i64;
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            let p = (y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2);
            let m = (y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2);
            plus += p.count_ones() as i64;
            minus += m.count_ones() as i64;
        }
        (plus - minus).rem_euclid(4) as u32
    }

    /// Signed product `self * other`.
    ///
    /// Panics if the factors anticommute (the product would carry an
    /// imaginary phase) or act on different numbers of qubits.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n, "product of strings of different length");
        let mut exp = self.product_phase(other);
        exp += 2 * (self.negative as u32 + other.negative as u32);
        assert!(
            exp.is_multiple_of(2),
            "product of anticommuting Pauli strings has imaginary phase"
        );
        PauliString {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            negative: exp % 4 == 2,
        }
    }

    /// In-place letter product with no phase bookkeeping. Used for
    /// destabilizer rows whose signs carry no meaning.
    pub(crate) fn mul_assign_unsigned(&mut self, other: &PauliString) {
        for w in 0..self.x.len() {
            self.x[w] ^= other.x[w];
            self.z[w] ^= other.z[w];
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = PauliParseError;

    /// Parses `[+|-]LETTERS`, e.g. `"-XZZI"`. `_` is accepted for identity.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if body.is_empty() {
            return Err(PauliParseError::Empty);
        }
        let mut out = PauliString::identity(body.chars().count());
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(PauliParseError::BadLetter(other)),
            };
            out.set(q, p);
        }
        out.negative = negative;
        Ok(out)
    }
}

/// Sorted sparse Pauli operator on lattice-sized registers, sign dropped.
///
/// Lattice-scale operators (cell stabilizers, correction targets) touch a
/// handful of qubits out of tens of thousands, so they are kept as sorted
/// `(qubit, letter)` lists.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SparsePauli(Vec<(u32, Pauli)>);

impl SparsePauli {
    pub fn new(mut support: Vec<(u32, Pauli)>) -> Self {
        support.sort_unstable_by_key(|&(q, _)| q);
        let mut out: Vec<(u32, Pauli)> = Vec::with_capacity(support.len());
        for (q, p) in support {
            match out.last_mut() {
                Some((lq, lp)) if *lq == q => *lp = lp.mul_letter(p),
                _ => out.push((q, p)),
            }
        }
        out.retain(|&(_, p)| p != Pauli::I);
        Self(out)
    }

    pub fn single(q: u32, p: Pauli) -> Self {
        Self::new(vec![(q, p)])
    }

    pub fn support(&self) -> &[(u32, Pauli)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, q: u32) -> Pauli {
        self.0
            .binary_search_by_key(&q, |&(k, _)| k)
            .map(|i| self.0[i].1)
            .unwrap_or(Pauli::I)
    }

    /// Letter-wise product (phase dropped).
    pub fn mul(&self, other: &SparsePauli) -> SparsePauli {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SparsePauli::new(v)
    }

    pub fn commutes(&self, other: &SparsePauli) -> bool {
        let (mut i, mut j, mut acc) = (0, 0, false);
        while i < self.0.len() && j < other.0.len() {
            let (qa, pa) = self.0[i];
            let (qb, pb) = other.0[j];
            match qa.cmp(&qb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc ^= pa.anticommutes(pb);
                    i += 1;
                    j += 1;
                }
            }
        }
        !acc
    }

    pub fn to_dense(&self, n: usize) -> PauliString {
        let support: Vec<(usize, Pauli)> = self.0.iter().map(|&(q, p)| (q as usize, p)).collect();
        PauliString::from_sparse(n, &support)
    }
}

impl fmt::Display for SparsePauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        for (k, (q, p)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p}{q}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn commutation_examples() {
        assert!(ps("XX").commutes(&ps("ZZ")));
        assert!(!ps("XI").commutes(&ps("ZI")));
        assert!(ps("XI").commutes(&ps("IZ")));
        assert!(!ps("Y").commutes(&ps("Z")));
    }

    #[test]
    #[should_panic(expected = "commutation check")]
    fn commutation_length_mismatch_panics() {
        ps("XX").commutes(&ps("Z"));
    }

    #[test]
    fn products_track_sign() {
        // XZ = -iY, ZX = iY; (X⊗X)(Z⊗Z) = (XZ)⊗(XZ) = -Y⊗Y
        assert_eq!(ps("XX").mul(&ps("ZZ")), ps("-YY"));
        assert_eq!(ps("ZZ").mul(&ps("XX")), ps("-YY"));
        assert_eq!(ps("YY").mul(&ps("XX")), ps("-ZZ"));
        assert_eq!(ps("-XI").mul(&ps("XZ")), ps("-IZ"));
        assert_eq!(ps("YI").mul(&ps("YI")), ps("II"));
    }

    #[test]
    #[should_panic(expected = "imaginary phase")]
    fn anticommuting_product_panics() {
        ps("X").mul(&ps("Z"));
    }

    #[test]
    fn multiword_strings() {
        let mut a = PauliString::identity(130);
        a.set(0, Pauli::X);
        a.set(129, Pauli::Z);
        let b = PauliString::single(130, 129, Pauli::X);
        assert!(!a.commutes(&b));
        assert_eq!(a.weight(), 2);
        assert_eq!(a.support(), vec![(0, Pauli::X), (129, Pauli::Z)]);
    }

    #[test]
    fn parse_and_display_roundtrip() {
        let p = ps("-XIZY");
        assert_eq!(p.to_string(), "-XIZY");
        assert_eq!("Q".parse::<PauliString>(), Err(PauliParseError::BadLetter('Q')));
    }

    #[test]
    fn sparse_products_cancel() {
        let a = SparsePauli::new(vec![(3, Pauli::Z), (1, Pauli::X)]);
        let b = SparsePauli::new(vec![(3, Pauli::Z), (7, Pauli::Z)]);
        assert_eq!(a.mul(&b).support(), &[(1, Pauli::X), (7, Pauli::Z)]);
        assert!(!a.commutes(&SparsePauli::single(1, Pauli::Z)));
        assert!(a.commutes(&b));
        assert_eq!(a.to_dense(4).to_string(), "+IXIZ");
    }
}
