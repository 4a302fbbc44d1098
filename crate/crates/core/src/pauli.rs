//! Pauli strings in symplectic form.
//!
//! A string on `n` qubits is stored as two bit masks: bit `q` of `x` marks an
//! X component on qubit `q`, bit `q` of `z` a Z component. A site with both
//! bits set is a literal `Y` (not `XZ`), so the string itself is Hermitian and
//! carries no phase. Products pick up a [`Phase`] that is returned separately.
//!
//! Qubit `q` maps to bit `q` of a single little-endian `u64`, which caps the
//! width at [`MAX_QUBITS`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 64;

/// Single-site Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
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

/// A power of `i`, stored as the exponent mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    /// `Some(+1)` or `Some(-1)` for real phases, `None` for `±i`.
    pub fn real_sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl std::ops::MulAssign for Phase {
    fn mul_assign(&mut self, rhs: Phase) {
        *self = *self * rhs;
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// Tensor product of single-qubit Paulis, phase-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

fn width_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::param(format!(
            "Pauli string width must be in 1..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        Ok(Self {
            n_qubits,
            x: 0,
            z: 0,
        })
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        check_width(n_qubits)?;
        let mask = width_mask(n_qubits);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::param(format!(
                "mask bits set beyond width {n_qubits}"
            )));
        }
        Ok(Self { n_qubits, x, z })
    }

    /// A single non-identity site.
    pub fn single(n_qubits: usize, qubit: usize, op: Pauli) -> Result<Self> {
        check_width(n_qubits)?;
        if qubit >= n_qubits {
            return Err(Error::param(format!(
                "qubit {qubit} out of range for width {n_qubits}"
            )));
        }
        let (x, z) = op.bits();
        Ok(Self {
            n_qubits,
            x: (x as u64) << qubit,
            z: (z as u64) << qubit,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Number of `Y` sites.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Number of `Z` sites (Z component without X).
    pub fn z_count(&self) -> u32 {
        (self.z & !self.x).count_ones()
    }

    /// Non-identity sites in ascending order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        let mut bits = self.x | self.z;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let q = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(q)
            }
        })
    }

    fn check_same_width(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Operator product `self · other = phase · result`.
    pub fn multiply(&self, other: &Self) -> Result<(PauliString, Phase)> {
        self.check_same_width(other)?;
        // With P = i^{x·z} X^x Z^z, moving Z^{z_a} past X^{x_b} costs (-1)^{z_a·x_b}.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.y_count() as i64 + other.y_count() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        let product = PauliString {
            n_qubits: self.n_qubits,
            x,
            z,
        };
        Ok((product, Phase::from_exponent(k.rem_euclid(4) as u32)))
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_same_width(other)?;
        let sym = (self.x & other.z) ^ (self.z & other.x);
        Ok(sym.count_ones() % 2 == 0)
    }

    /// Copy of this string on a wider register, shifted up by `offset` sites.
    pub fn embed(&self, offset: usize, n_qubits: usize) -> Result<Self> {
        if offset + self.n_qubits > n_qubits {
            return Err(Error::Dimension {
                expected: n_qubits,
                found: offset + self.n_qubits,
            });
        }
        Self::from_masks(n_qubits, self.x << offset, self.z << offset)
    }

    /// Action on a computational basis state: `P|b> = phase · |b ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (u64, Phase) {
        let sign = 2 * (self.z & b).count_ones();
        (b ^ self.x, Phase::from_exponent(self.y_count() + sign))
    }
}

impl Ord for PauliString {
    /// Lexicographic on the rendered text: sites from qubit 0 with `I < X < Y < Z`.
    fn cmp(&self, other: &Self) -> Ordering {
        let shared = self.n_qubits.min(other.n_qubits);
        for q in 0..shared {
            match self.get(q).cmp(&other.get(q)) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.n_qubits.cmp(&other.n_qubits)
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        check_width(chars.len())?;
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in chars.iter().enumerate() {
            let op = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::Parse(format!(
                        "invalid Pauli character {other:?} in {s:?}"
                    )))
                }
            };
            let (bx, bz) = op.bits();
            x |= (bx as u64) << q;
            z |= (bz as u64) << q;
        }
        Ok(PauliString {
            n_qubits: chars.len(),
            x,
            z,
        })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    /// Explicit Kronecker-product matrix, qubit 0 as the least significant bit.
    fn dense(ps: &PauliString) -> Vec<Vec<Complex64>> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let single = |op: Pauli| -> [[Complex64; 2]; 2] {
            match op {
                Pauli::I => [[one, zero], [zero, one]],
                Pauli::X => [[zero, one], [one, zero]],
                Pauli::Y => [[zero, -i], [i, zero]],
                Pauli::Z => [[one, zero], [zero, -one]],
            }
        };
        let mut m = vec![vec![one]];
        // Build from the highest qubit down so qubit 0 ends up least significant.
        for q in (0..ps.n_qubits()).rev() {
            let s = single(ps.get(q));
            let d = m.len();
            let mut next = vec![vec![zero; 2 * d]; 2 * d];
            for r in 0..d {
                for c in 0..d {
                    for a in 0..2 {
                        for b in 0..2 {
                            next[r * 2 + a][c * 2 + b] = m[r][c] * s[a][b];
                        }
                    }
                }
            }
            m = next;
        }
        m
    }

    fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = a.len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for r in 0..n {
            for k in 0..n {
                for c in 0..n {
                    out[r][c] += a[r][k] * b[k][c];
                }
            }
        }
        out
    }

    fn scaled(m: &[Vec<Complex64>], s: Complex64) -> Vec<Vec<Complex64>> {
        m.iter().map(|row| row.iter().map(|v| v * s).collect()).collect()
    }

    fn close(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> bool {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn single_qubit_table() {
        assert_eq!(p("X").multiply(&p("Y")).unwrap(), (p("Z"), Phase::I));
        assert_eq!(p("Y").multiply(&p("X")).unwrap(), (p("Z"), Phase::MINUS_I));
        assert_eq!(p("Y").multiply(&p("Z")).unwrap(), (p("X"), Phase::I));
        assert_eq!(p("Z").multiply(&p("X")).unwrap(), (p("Y"), Phase::I));
        assert_eq!(p("X").multiply(&p("X")).unwrap(), (p("I"), Phase::ONE));
        assert_eq!(p("XI").multiply(&p("IY")).unwrap(), (p("XY"), Phase::ONE));
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        assert!(p("II").commutes(&p("YZ")).unwrap());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(p("III").weight(), 0);
        assert_eq!(p("XYI").weight(), 2);
        assert_eq!(p("ZIYX").support().collect::<Vec<_>>(), vec![0, 2, 3]);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        assert!(matches!(
            p("XX").multiply(&p("X")),
            Err(Error::Dimension { .. })
        ));
        assert!(p("XX").commutes(&p("X")).is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("XQZ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert!(PauliString::from_masks(2, 0b100, 0).is_err());
    }

    #[test]
    fn text_round_trip_and_order() {
        let s = p("XYIZ");
        assert_eq!(s.to_string(), "XYIZ");
        assert_eq!(s.get(0), Pauli::X);
        assert_eq!(s.get(3), Pauli::Z);
        let mut v = vec![p("ZI"), p("IX"), p("XZ"), p("II"), p("YI")];
        v.sort();
        let text: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        assert_eq!(text, ["II", "IX", "XZ", "YI", "ZI"]);
    }

    #[test]
    fn basis_action_matches_dense() {
        for s in ["XYZ", "YYI", "ZIX", "IYZ"] {
            let ps = p(s);
            let m = dense(&ps);
            for b in 0..8u64 {
                let (r, ph) = ps.apply_to_basis(b);
                assert!((m[r as usize][b as usize] - ph.to_complex()).norm() < 1e-12);
            }
        }
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        let mask = (1u64 << n) - 1;
        (any::<u64>(), any::<u64>())
            .prop_map(move |(x, z)| PauliString::from_masks(n, x & mask, z & mask).unwrap())
    }

    proptest! {
        #[test]
        fn multiply_matches_dense_oracle(n in 1usize..=3, seed in any::<u64>()) {
            let mask = (1u64 << n) - 1;
            let a = PauliString::from_masks(n, seed & mask, (seed >> 8) & mask).unwrap();
            let b = PauliString::from_masks(n, (seed >> 16) & mask, (seed >> 24) & mask).unwrap();
            let (c, ph) = a.multiply(&b).unwrap();
            let lhs = matmul(&dense(&a), &dense(&b));
            let rhs = scaled(&dense(&c), ph.to_complex());
            prop_assert!(close(&lhs, &rhs));
            let ab = matmul(&dense(&a), &dense(&b));
            let ba = matmul(&dense(&b), &dense(&a));
            prop_assert_eq!(a.commutes(&b).unwrap(), close(&ab, &ba));
        }

        #[test]
        fn multiply_is_associative(a in arb_pauli(7), b in arb_pauli(7), c in arb_pauli(7)) {
            let (ab, p1) = a.multiply(&b).unwrap();
            let (abc, p2) = ab.multiply(&c).unwrap();
            let (bc, q1) = b.multiply(&c).unwrap();
            let (abc2, q2) = a.multiply(&bc).unwrap();
            prop_assert_eq!(abc, abc2);
            prop_assert_eq!(p1 * p2, q1 * q2);
        }

        #[test]
        fn self_product_is_identity(a in arb_pauli(12)) {
            let (sq, ph) = a.multiply(&a).unwrap();
            prop_assert!(sq.is_identity());
            prop_assert_eq!(ph, Phase::ONE);
        }

        #[test]
        fn commutes_iff_products_agree(a in arb_pauli(9), b in arb_pauli(9)) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            prop_assert_eq!(a.commutes(&b).unwrap(), ab == ba);
        }

        #[test]
        fn text_round_trip(a in arb_pauli(11)) {
            prop_assert_eq!(a.to_string().parse::<PauliString>().unwrap(), a);
        }
    }
}
