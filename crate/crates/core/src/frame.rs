//! Clifford-frame execution for circuits whose only non-Clifford gate is `Rz`.
//!
//! The state is kept as `C|φ>` with `C` the Clifford prefix. `C` is carried
//! as the conjugation map `P -> C† P C`, so `φ` only ever sees Pauli
//! rotations (from `Rz`) and Pauli kicks (from noise).

use crate::circuit::Gate;
use crate::error::Result;
use crate::pauli::PauliString;
use crate::simulate::StateVector;

/// `i^e · P(x, z)`; sites with `x = z = 1` are `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Signed {
    pub x: u64,
    pub z: u64,
    pub e: u8,
}

impl Signed {
    fn label(x: u64, z: u64) -> Self {
        Self { x, z, e: 0 }
    }

    fn mul(self, o: Signed) -> Signed {
        let x = self.x ^ o.x;
        let z = self.z ^ o.z;
        let k = (self.x & self.z).count_ones() as i64 + (o.x & o.z).count_ones() as i64
            + 2 * (self.z & o.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        Signed {
            x,
            z,
            e: (self.e as i64 + o.e as i64 + k).rem_euclid(4) as u8,
        }
    }

    fn flip(&mut self) {
        self.e = (self.e + 2) % 4;
    }

    /// `+1` or `-1`; Clifford images of Hermitian Paulis stay Hermitian.
    pub fn sign(&self) -> f64 {
        debug_assert!(self.e % 2 == 0, "non-Hermitian image {self:?}");
        if self.e == 2 {
            -1.0
        } else {
            1.0
        }
    }
}

fn bit(m: u64, q: usize) -> bool {
    (m >> q) & 1 == 1
}

fn set(m: &mut u64, q: usize, v: bool) {
    *m = (*m & !(1 << q)) | ((v as u64) << q);
}

pub(crate) fn is_clifford(g: &Gate) -> bool {
    !matches!(g, Gate::Rz(..) | Gate::Measure(..))
}

/// `g† P g` for a Clifford gate; other gates leave `p` unchanged.
pub(crate) fn conjugate(g: &Gate, mut p: Signed) -> Signed {
    match *g {
        Gate::H(q) => {
            let (x, z) = (bit(p.x, q), bit(p.z, q));
            if x && z {
                p.flip();
            }
            set(&mut p.x, q, z);
            set(&mut p.z, q, x);
        }
        Gate::S(q) => {
            let (x, z) = (bit(p.x, q), bit(p.z, q));
            if x && !z {
                p.flip();
            }
            set(&mut p.z, q, z ^ x);
        }
        Gate::Sdg(q) => {
            let (x, z) = (bit(p.x, q), bit(p.z, q));
            if x && z {
                p.flip();
            }
            set(&mut p.z, q, z ^ x);
        }
        Gate::X(q) => {
            if bit(p.z, q) {
                p.flip();
            }
        }
        Gate::Cx(c, t) => {
            let (xc, zc, xt, zt) = (bit(p.x, c), bit(p.z, c), bit(p.x, t), bit(p.z, t));
            if xc && zt && (xt == zc) {
                p.flip();
            }
            set(&mut p.x, t, xt ^ xc);
            set(&mut p.z, c, zc ^ zt);
        }
        Gate::Cz(a, b) => {
            let (xa, za, xb, zb) = (bit(p.x, a), bit(p.z, a), bit(p.x, b), bit(p.z, b));
            if xa && xb && (za != zb) {
                p.flip();
            }
            set(&mut p.z, a, za ^ xb);
            set(&mut p.z, b, zb ^ xa);
        }
        Gate::Swap(a, b) => {
            let (xa, za, xb, zb) = (bit(p.x, a), bit(p.z, a), bit(p.x, b), bit(p.z, b));
            set(&mut p.x, a, xb);
            set(&mut p.x, b, xa);
            set(&mut p.z, a, zb);
            set(&mut p.z, b, za);
        }
        Gate::Rz(..) | Gate::Measure(..) => {}
    }
    p
}

/// The map `P -> C† P C`, stored as images of `X_q` and `Z_q`.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    xs: Vec<Signed>,
    zs: Vec<Signed>,
}

impl Frame {
    pub fn identity(n: usize) -> Self {
        Self {
            xs: (0..n).map(|q| Signed::label(1 << q, 0)).collect(),
            zs: (0..n).map(|q| Signed::label(0, 1 << q)).collect(),
        }
    }

    pub fn map(&self, p: Signed) -> Signed {
        // P(x, z) = i^{#Y} Π X^x Z^z, X before Z on each site
        let mut acc = Signed {
            x: 0,
            z: 0,
            e: ((p.e as u32 + (p.x & p.z).count_ones()) % 4) as u8,
        };
        let mut bits = p.x | p.z;
        while bits != 0 {
            let q = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if bit(p.x, q) {
                acc = acc.mul(self.xs[q]);
            }
            if bit(p.z, q) {
                acc = acc.mul(self.zs[q]);
            }
        }
        acc
    }

    /// Appends a Clifford gate to the prefix.
    pub fn push(&mut self, g: &Gate) {
        let (a, b) = g.qubits();
        let update = |q: usize, f: &mut Self| {
            let x = f.map(conjugate(g, Signed::label(1 << q, 0)));
            let z = f.map(conjugate(g, Signed::label(0, 1 << q)));
            (x, z)
        };
        let ua = update(a, self);
        let ub = b.map(|b| (b, update(b, self)));
        (self.xs[a], self.zs[a]) = ua;
        if let Some((b, (x, z))) = ub {
            self.xs[b] = x;
            self.zs[b] = z;
        }
    }
}

/// Frame snapshots are kept every this many gates.
const SNAPSHOT_EVERY: usize = 64;

/// A measurement-free gate list compiled against the Clifford frame.
pub(crate) struct FramedCircuit<'a> {
    n: usize,
    gates: &'a [Gate],
    /// `(gate index, generator, angle)` for `exp(-i angle P)` on `φ`.
    rotations: Vec<(usize, PauliString, f64)>,
    /// `snapshots[s]` is the frame before gate `s * SNAPSHOT_EVERY`.
    snapshots: Vec<Frame>,
    /// Image of the measured `Z` after the last gate.
    observable: Signed,
}

impl<'a> FramedCircuit<'a> {
    pub fn build(gates: &'a [Gate], n: usize, measured: usize) -> Result<Self> {
        let mut frame = Frame::identity(n);
        let mut rotations = Vec::new();
        let mut snapshots = Vec::with_capacity(gates.len() / SNAPSHOT_EVERY + 1);
        for (i, g) in gates.iter().enumerate() {
            if i % SNAPSHOT_EVERY == 0 {
                snapshots.push(frame.clone());
            }
            match *g {
                Gate::Rz(q, theta) => {
                    let img = frame.map(Signed::label(0, 1 << q));
                    rotations.push((i, PauliString::from_masks(n, img.x, img.z)?, img.sign() * theta / 2.0));
                }
                _ => frame.push(g),
            }
        }
        if gates.len() % SNAPSHOT_EVERY == 0 {
            snapshots.push(frame.clone());
        }
        let observable = frame.map(Signed::label(0, 1 << measured));
        Ok(Self {
            n,
            gates,
            rotations,
            snapshots,
            observable,
        })
    }

    pub fn rotations(&self) -> &[(usize, PauliString, f64)] {
        &self.rotations
    }

    /// Number of rotations at gate indices `<= gate`.
    pub fn rotations_through(&self, gate: usize) -> usize {
        self.rotations.partition_point(|r| r.0 <= gate)
    }

    /// `C† E C` for a kick `E` inserted after gate `after`, phase dropped.
    pub fn kick(&self, after: usize, e: &PauliString) -> Result<PauliString> {
        let s = (after + 1) / SNAPSHOT_EVERY;
        let mut p = Signed::label(e.x_mask(), e.z_mask());
        for g in self.gates[s * SNAPSHOT_EVERY..=after].iter().rev() {
            if is_clifford(g) {
                p = conjugate(g, p);
            }
        }
        let img = self.snapshots[s].map(p);
        PauliString::from_masks(self.n, img.x, img.z)
    }

    /// `<C† Z C>` on `φ`.
    pub fn measure(&self, phi: &StateVector) -> Result<f64> {
        let p = PauliString::from_masks(self.n, self.observable.x, self.observable.z)?;
        Ok(self.observable.sign() * phi.expectation_pauli(&p)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random_gate<R: Rng>(n: usize, rng: &mut R) -> Gate {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        match rng.random_range(0..8) {
            0 => Gate::H(a),
            1 => Gate::S(a),
            2 => Gate::Sdg(a),
            3 => Gate::X(a),
            4 => Gate::Cx(a, b),
            5 => Gate::Cz(a, b),
            6 => Gate::Swap(a, b),
            _ => Gate::Rz(a, rng.random_range(-3.0..3.0)),
        }
    }

    fn all_paulis(n: usize) -> impl Iterator<Item = Signed> {
        (0..1u64 << n).flat_map(move |x| (0..1u64 << n).map(move |z| Signed::label(x, z)))
    }

    #[test]
    fn conjugation_matches_matrices() {
        // g† P g |ψ> against the gate path on random states
        let n = 3;
        let mut rng = stream_rng(11, 0);
        let gates = [
            Gate::H(1),
            Gate::S(0),
            Gate::Sdg(2),
            Gate::X(1),
            Gate::Cx(0, 2),
            Gate::Cx(2, 1),
            Gate::Cz(1, 2),
            Gate::Swap(0, 2),
        ];
        for g in &gates {
            let inv = g.inverse().unwrap();
            for p in all_paulis(n) {
                let psi = StateVector::random(n, &mut rng).unwrap();
                let mut a = psi.clone();
                a.apply_gate(g).unwrap();
                a.apply_pauli(&PauliString::from_masks(n, p.x, p.z).unwrap()).unwrap();
                a.apply_gate(&inv).unwrap();
                let c = conjugate(g, p);
                let mut b = psi;
                b.apply_pauli(&PauliString::from_masks(n, c.x, c.z).unwrap()).unwrap();
                let sign = c.sign();
                let err = a
                    .amplitudes()
                    .iter()
                    .zip(b.amplitudes())
                    .map(|(u, v)| (u - v * sign).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-12, "{g:?} on {p:?}");
            }
        }
    }

    #[test]
    fn framed_execution_matches_gate_path() {
        let n = 4;
        let mut rng = stream_rng(12, 0);
        for _ in 0..20 {
            let gates: Vec<Gate> = (0..150).map(|_| random_gate(n, &mut rng)).collect();
            let kicks: Vec<(usize, PauliString)> = {
                let mut k: Vec<_> = (0..4)
                    .map(|_| {
                        let x = rng.random_range(0..16u64);
                        let z = rng.random_range(0..16u64);
                        (rng.random_range(0..gates.len()), PauliString::from_masks(n, x, z).unwrap())
                    })
                    .collect();
                k.sort_by_key(|k| k.0);
                k
            };
            let mut direct = StateVector::zero(n).unwrap();
            let mut next = 0;
            for (i, g) in gates.iter().enumerate() {
                direct.apply_gate(g).unwrap();
                while next < kicks.len() && kicks[next].0 == i {
                    direct.apply_pauli(&kicks[next].1).unwrap();
                    next += 1;
                }
            }
            let fc = FramedCircuit::build(&gates, n, 2).unwrap();
            let mut phi = StateVector::zero(n).unwrap();
            let (mut ri, mut ki) = (0, 0);
            while ri < fc.rotations().len() || ki < kicks.len() {
                let gr = fc.rotations().get(ri).map_or(usize::MAX, |r| r.0);
                let gk = kicks.get(ki).map_or(usize::MAX, |k| k.0);
                if gr <= gk {
                    let (_, p, th) = &fc.rotations()[ri];
                    phi.apply_pauli_rotation(p, *th).unwrap();
                    ri += 1;
                } else {
                    phi.apply_pauli(&fc.kick(gk, &kicks[ki].1).unwrap()).unwrap();
                    ki += 1;
                }
            }
            let want = direct.expectation_z(2).unwrap();
            assert!((fc.measure(&phi).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_map_is_multiplicative() {
        let n = 3;
        let mut rng = stream_rng(13, 0);
        let mut f = Frame::identity(n);
        for _ in 0..40 {
            let g = random_gate(n, &mut rng);
            if is_clifford(&g) {
                f.push(&g);
            }
        }
        for p in all_paulis(n) {
            for q in all_paulis(n) {
                assert_eq!(f.map(p.mul(q)), f.map(p).mul(f.map(q)));
            }
        }
    }
}
