//! Statevector engine.
//!
//! Basis index `b` stores qubit 0 in its least significant bit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::frame::FramedCircuit;
use crate::hamiltonian::Hamiltonian;
use crate::pauli::PauliString;
use crate::rng::derive_seed;
use crate::stats;

/// Widest register accepted by [`StateVector::zero`].
pub const MAX_STATE_QUBITS: usize = 24;
/// Widest Hamiltonian handled by dense diagonalization.
pub const EXACT_MAX_QUBITS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_STATE_QUBITS {
            return Err(Error::ResourceCeiling(format!(
                "statevector width must be in 1..={MAX_STATE_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes `amps`; the length must be `2^n_qubits`.
    pub fn from_amplitudes(n_qubits: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::Dimension {
                expected: 1 << n_qubits,
                found: amps.len(),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::param("state has zero or non-finite norm"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_qubits, amps })
    }

    /// Haar-ish random state from Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        let amps = (0..1usize << n_qubits)
            .map(|_| {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        stats::compensated_sum(self.amps.iter().map(|a| a.norm_sqr())).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_width(other.n_qubits)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest amplitude difference.
    pub fn distance_inf(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance `‖self - other‖`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn check_width(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: n,
            });
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::param(format!(
                "qubit {q} out of range for width {}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    #[inline]
    fn for_each_pair(&mut self, q: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let step = 1usize << q;
        for block in self.amps.chunks_exact_mut(2 * step) {
            let (lo, hi) = block.split_at_mut(step);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                f(a, b);
            }
        }
    }

    /// Applies a unitary gate in place. Measurements are rejected.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let (a, b) = gate.qubits();
        self.check_qubit(a)?;
        if let Some(b) = b {
            self.check_qubit(b)?;
            if a == b {
                return Err(Error::InvalidCircuit(format!("{gate:?} repeats an operand")));
            }
        }
        match *gate {
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.for_each_pair(q, |x, y| {
                    let (u, v) = (*x, *y);
                    *x = (u + v) * s;
                    *y = (u - v) * s;
                });
            }
            Gate::X(q) => self.for_each_pair(q, std::mem::swap),
            Gate::S(q) => self.for_each_pair(q, |_, y| *y *= I),
            Gate::Sdg(q) => self.for_each_pair(q, |_, y| *y *= -I),
            Gate::Rz(q, theta) => {
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = Complex64::from_polar(1.0, theta / 2.0);
                self.for_each_pair(q, |x, y| {
                    *x *= lo;
                    *y *= hi;
                });
            }
            Gate::Cx(c, t) => {
                let (cm, tm) = (1usize << c, 1usize << t);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
            Gate::Cz(p, q) => {
                let m = (1usize << p) | (1usize << q);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Swap(p, q) => {
                let (pm, qm) = (1usize << p, 1usize << q);
                for i in 0..self.amps.len() {
                    if i & pm != 0 && i & qm == 0 {
                        self.amps.swap(i, i ^ pm ^ qm);
                    }
                }
            }
            Gate::Measure(..) => {
                return Err(Error::InvalidCircuit(
                    "measurement cannot be applied as a unitary".into(),
                ))
            }
        }
        Ok(())
    }

    /// Applies every gate of a measurement-free circuit.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        self.check_width(circuit.n_qubits())?;
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// `ψ ← Pψ`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_width(p.n_qubits())?;
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let base = I.powu(p.y_count());
        if x == 0 {
            for (b, amp) in self.amps.iter_mut().enumerate() {
                if (z & b).count_ones() % 2 == 1 {
                    *amp = -*amp;
                }
            }
            return Ok(());
        }
        let hb = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for b in 0..self.amps.len() {
            if b & hb != 0 {
                continue;
            }
            let b2 = b ^ x;
            let s_b = if (z & b).count_ones() % 2 == 1 { -base } else { base };
            let s_b2 = if (z & b2).count_ones() % 2 == 1 { -base } else { base };
            let (u, v) = (self.amps[b], self.amps[b2]);
            self.amps[b] = s_b2 * v;
            self.amps[b2] = s_b * u;
        }
        Ok(())
    }

    /// `ψ ← exp(-iθP) ψ = cos θ ψ - i sin θ Pψ`, in one pass.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check_width(p.n_qubits())?;
        let (s, c) = theta.sin_cos();
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        if x == 0 {
            let even = Complex64::new(c, -s);
            let odd = Complex64::new(c, s);
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= if (z & b).count_ones() % 2 == 0 { even } else { odd };
            }
            return Ok(());
        }
        // -i sin θ · i^y is purely real or purely imaginary
        let f = Complex64::new(0.0, -s) * I.powu(p.y_count());
        if p.y_count() % 2 == 1 {
            let r = f.re;
            self.rotate_pairs(x, z, c, |v| v * r);
        } else {
            let a = f.im;
            self.rotate_pairs(x, z, c, |v| Complex64::new(-a * v.im, a * v.re));
        }
        Ok(())
    }

    /// Pair update for `cos θ - i sin θ P` with `x != 0`; `mul_f(v) = f v`.
    #[inline]
    fn rotate_pairs(&mut self, x: usize, z: usize, c: f64, mul_f: impl Fn(Complex64) -> Complex64) {
        // x's top bit k splits each block of 2^{k+1} amplitudes into halves;
        // b in the low half pairs with b ^ x in the high half.
        let k = (usize::BITS - 1 - x.leading_zeros()) as usize;
        let x_low = x & ((1 << k) - 1);
        let flip_x = (z & x).count_ones() % 2 == 1;
        let mut low = vec![false; 1 << k];
        for j in 0..k {
            let zj = (z >> j) & 1 == 1;
            for l in 0..1usize << j {
                low[l | (1 << j)] = low[l] != zj;
            }
        }
        for (i, block) in self.amps.chunks_exact_mut(2 << k).enumerate() {
            let odd_high = (z & (i << (k + 1))).count_ones() % 2 == 1;
            let (lo, hi) = block.split_at_mut(1 << k);
            for (l, &odd_low) in low.iter().enumerate() {
                // P|b2> = f_b2 |b>, P|b> = f_b |b2>
                let odd = odd_high != odd_low;
                let (u, v) = (lo[l], hi[l ^ x_low]);
                let (fu, fv) = (mul_f(u), mul_f(v));
                lo[l] = u * c + if odd != flip_x { -fv } else { fv };
                hi[l ^ x_low] = v * c + if odd { -fu } else { fu };
            }
        }
    }

    /// `Σ_b |ψ_b|² (-1)^{b_q}`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let m = 1usize << qubit;
        Ok(stats::compensated_sum(self.amps.iter().enumerate().map(|(b, a)| {
            if b & m == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })))
    }

    /// `<ψ|P|ψ>`, real since `P` is Hermitian.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        self.check_width(p.n_qubits())?;
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let base = I.powu(p.y_count());
        Ok(stats::compensated_sum(self.amps.iter().enumerate().map(|(b, a)| {
            // (Pψ)_b = i^y (-1)^{z·(b^x)} ψ_{b^x}
            let b2 = b ^ x;
            let s = if (z & b2).count_ones() % 2 == 1 { -base } else { base };
            (a.conj() * s * self.amps[b2]).re
        })))
    }

    /// `<ψ|H|ψ>`.
    pub fn energy(&self, h: &Hamiltonian) -> Result<f64> {
        self.check_width(h.n_qubits())?;
        let mut e = 0.0;
        for t in h.terms() {
            let mut phi = self.clone();
            phi.apply_pauli(&t.pauli)?;
            e += t.coeff * self.inner(&phi)?.re;
        }
        Ok(e)
    }
}

/// `exp(-iHt)` through a cached Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    n_qubits: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl ExactPropagator {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        if h.n_qubits() > EXACT_MAX_QUBITS {
            return Err(Error::ResourceCeiling(format!(
                "exact evolution is limited to {EXACT_MAX_QUBITS} qubits, got {}",
                h.n_qubits()
            )));
        }
        let n = h.n_qubits();
        let dense = h.to_dense()?;
        let dim = dense.nrows();
        // Z-parity sectors are diagonalized separately when every term keeps them.
        let parity = PauliString::from_masks(n, 0, (dim as u64) - 1)?;
        let sectors: Vec<Vec<usize>> = if h.terms().iter().all(|t| t.pauli.commutes(&parity).unwrap_or(false)) {
            (0..2u32)
                .map(|odd| (0..dim).filter(|b| b.count_ones() % 2 == odd).collect())
                .collect()
        } else {
            vec![(0..dim).collect()]
        };
        let mut eigenvalues = DVector::zeros(dim);
        let mut eigenvectors = DMatrix::zeros(dim, dim);
        let mut col = 0;
        for idx in &sectors {
            let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| dense[(idx[i], idx[j])]);
            let eig = SymmetricEigen::new(block);
            for k in 0..idx.len() {
                eigenvalues[col] = eig.eigenvalues[k];
                for (i, &row) in idx.iter().enumerate() {
                    eigenvectors[(row, col)] = eig.eigenvectors[(i, k)];
                }
                col += 1;
            }
        }
        Ok(Self {
            n_qubits: n,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        state.check_width(self.n_qubits)?;
        let psi = DVector::from_column_slice(&state.amps);
        let mut coeffs = self.eigenvectors.ad_mul(&psi);
        for (c, &lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -lambda * t);
        }
        let out = &self.eigenvectors * coeffs;
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out.as_slice().to_vec(),
        })
    }
}

/// `exp(-iHt) ψ` by dense diagonalization.
pub fn exact_evolve(h: &Hamiltonian, t: f64, state: &StateVector) -> Result<StateVector> {
    ExactPropagator::new(h)?.evolve(state, t)
}

/// Estimate of `<Z_q>` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Samples `shots` Z-basis outcomes of `qubit`, flipping each with
/// probability `p_readout`, and returns the ±1 mean with its binomial
/// standard error. `shots == 0` returns the exact expectation of the
/// recorded outcome, `(1 - 2 p_readout) <Z>`, with zero error.
pub fn sample_shots<R: Rng + ?Sized>(
    state: &StateVector,
    qubit: usize,
    shots: usize,
    p_readout: f64,
    rng: &mut R,
) -> Result<Estimate> {
    check_probability(p_readout, "p_readout")?;
    let z = state.expectation_z(qubit)?;
    Ok(sample_from_expectation(z, shots, p_readout, rng))
}

/// Shot-sampled estimate of a ±1 observable with mean `z`; `shots == 0`
/// returns the readout-attenuated mean exactly.
pub fn sample_from_expectation<R: Rng + ?Sized>(z: f64, shots: usize, p_readout: f64, rng: &mut R) -> Estimate {
    if shots == 0 {
        return Estimate {
            value: (1.0 - 2.0 * p_readout) * z,
            stderr: 0.0,
        };
    }
    let p_zero = ((1.0 + z) / 2.0).clamp(0.0, 1.0);
    let mut total: i64 = 0;
    for _ in 0..shots {
        let mut zero = rng.random::<f64>() < p_zero;
        if p_readout > 0.0 && rng.random::<f64>() < p_readout {
            zero = !zero;
        }
        total += if zero { 1 } else { -1 };
    }
    let m = total as f64 / shots as f64;
    Estimate {
        value: m,
        stderr: ((1.0 - m * m).max(0.0) / shots as f64).sqrt(),
    }
}

/// Median error rates of the reference superconducting device.
pub mod device {
    /// Median CZ error.
    pub const P2: f64 = 1.359e-3;
    /// Median SX error.
    pub const P1: f64 = 1.851e-4;
    /// Median readout error.
    pub const P_READOUT: f64 = 4.761e-3;
    /// Median T1 in microseconds; recorded, not modelled.
    pub const T1_US: f64 = 337.11;
    /// Median T2 in microseconds; recorded, not modelled.
    pub const T2_US: f64 = 159.69;
}

/// Stochastic Pauli noise: depolarizing kicks after gates and symmetric
/// readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p_readout: f64,
    pub single_qubit: bool,
    pub two_qubit: bool,
    pub readout: bool,
    /// Number of two-qubit channel applications charged to one SWAP.
    pub swap_weight: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p1: device::P1,
            p2: device::P2,
            p_readout: device::P_READOUT,
            single_qubit: true,
            two_qubit: true,
            readout: true,
            swap_weight: 3,
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("{what} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            p_readout: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(self.p1, "p1")?;
        check_probability(self.p2, "p2")?;
        check_probability(self.p_readout, "p_readout")
    }

    pub fn effective_p1(&self) -> f64 {
        if self.single_qubit { self.p1 } else { 0.0 }
    }

    pub fn effective_p2(&self) -> f64 {
        if self.two_qubit { self.p2 } else { 0.0 }
    }

    pub fn effective_readout(&self) -> f64 {
        if self.readout { self.p_readout } else { 0.0 }
    }
}

/// A Pauli kick inserted after gate `after`.
#[derive(Debug, Clone, Copy)]
struct Kick {
    after: usize,
    pauli: PauliString,
}

fn single_pauli(n: usize, q: usize, k: u32) -> PauliString {
    // k in 1..=3 -> X, Y, Z
    let (x, z) = match k {
        1 => (1u64, 0u64),
        2 => (1, 1),
        _ => (0, 1),
    };
    PauliString::from_masks(n, x << q, z << q).expect("qubit in range")
}

fn two_pauli(n: usize, a: usize, b: usize, k: u32) -> PauliString {
    // k in 1..=15: low two bits on `a`, high two bits on `b`
    let bits = |v: u32| match v {
        0 => (0u64, 0u64),
        1 => (1, 0),
        2 => (1, 1),
        _ => (0, 1),
    };
    let (xa, za) = bits(k & 3);
    let (xb, zb) = bits(k >> 2);
    PauliString::from_masks(n, (xa << a) | (xb << b), (za << a) | (zb << b)).expect("qubit in range")
}

fn sample_kicks<R: Rng + ?Sized>(gates: &[Gate], n: usize, noise: &NoiseModel, rng: &mut R) -> Vec<Kick> {
    let p1 = noise.effective_p1();
    let p2 = noise.effective_p2();
    let mut kicks = Vec::new();
    for (i, g) in gates.iter().enumerate() {
        match g.qubits() {
            (_, None) if g.is_measurement() => {}
            (q, None) => {
                if p1 > 0.0 && rng.random::<f64>() < p1 {
                    kicks.push(Kick {
                        after: i,
                        pauli: single_pauli(n, q, rng.random_range(1..=3)),
                    });
                }
            }
            (a, Some(b)) => {
                let reps = if matches!(g, Gate::Swap(..)) { noise.swap_weight.max(1) } else { 1 };
                for _ in 0..reps {
                    if p2 > 0.0 && rng.random::<f64>() < p2 {
                        kicks.push(Kick {
                            after: i,
                            pauli: two_pauli(n, a, b, rng.random_range(1..=15)),
                        });
                    }
                }
            }
        }
    }
    kicks
}

/// Trajectory engine: the circuit runs in its Clifford frame, and ideal
/// frame states are cached every `every` rotations so a trajectory resumes
/// from the last clean checkpoint before its first kick.
struct Trajectories<'a> {
    framed: FramedCircuit<'a>,
    every: usize,
    states: Vec<StateVector>,
    /// Noiseless value from the plain gate path.
    final_z: f64,
}

impl<'a> Trajectories<'a> {
    fn build(gates: &'a [Gate], n: usize, measured: usize) -> Result<Self> {
        let mut state = StateVector::zero(n)?;
        for g in gates {
            state.apply_gate(g)?;
        }
        let final_z = state.expectation_z(measured)?;

        let framed = FramedCircuit::build(gates, n, measured)?;
        let rotations = framed.rotations();
        // Keep total checkpoint memory near 32 MiB.
        let bytes_per_state = (16usize << n).max(1);
        let max_states = ((32usize << 20) / bytes_per_state).clamp(1, 256);
        let every = rotations.len().div_ceil(max_states).max(1);
        let mut phi = StateVector::zero(n)?;
        let mut states = Vec::with_capacity(rotations.len() / every + 1);
        for (i, (_, p, theta)) in rotations.iter().enumerate() {
            if i % every == 0 {
                states.push(phi.clone());
            }
            phi.apply_pauli_rotation(p, *theta)?;
        }
        if states.is_empty() {
            states.push(phi);
        }
        Ok(Self {
            framed,
            every,
            states,
            final_z,
        })
    }

    fn run(&self, kicks: &[Kick]) -> Result<f64> {
        let Some(first) = kicks.first() else {
            return Ok(self.final_z);
        };
        let rotations = self.framed.rotations();
        let idx = (self.framed.rotations_through(first.after) / self.every).min(self.states.len() - 1);
        let mut phi = self.states[idx].clone();
        let mut r = idx * self.every;
        for k in kicks {
            while r < rotations.len() && rotations[r].0 <= k.after {
                phi.apply_pauli_rotation(&rotations[r].1, rotations[r].2)?;
                r += 1;
            }
            phi.apply_pauli(&self.framed.kick(k.after, &k.pauli)?)?;
        }
        for (_, p, theta) in &rotations[r..] {
            phi.apply_pauli_rotation(p, *theta)?;
        }
        self.framed.measure(&phi)
    }
}

/// Runs a circuit ending in one `Z` measurement under stochastic Pauli
/// noise, starting from `|0…0>`. Each trajectory contributes either the
/// analytically readout-biased expectation (`shots_per_traj == 0`) or a
/// sampled shot mean. Returns the trajectory mean and its standard error.
pub fn noisy_run<R: Rng + ?Sized>(
    circuit: &Circuit,
    noise: &NoiseModel,
    trajectories: usize,
    shots_per_traj: usize,
    rng: &mut R,
) -> Result<Estimate> {
    noise.validate()?;
    if trajectories == 0 {
        return Err(Error::param("at least one trajectory is required"));
    }
    let gates = circuit.gates();
    let Some((Gate::Measure(measured, _), body)) = gates.split_last() else {
        return Err(Error::InvalidCircuit(
            "noisy_run needs a circuit ending in a measurement".into(),
        ));
    };
    let measured = *measured;
    if body.iter().any(|g| g.is_measurement()) {
        return Err(Error::InvalidCircuit(
            "only a single terminal measurement is supported".into(),
        ));
    }
    let n = circuit.n_qubits();
    let engine = Trajectories::build(body, n, measured)?;
    let base: u64 = rng.random();
    let p_readout = noise.effective_readout();

    let values = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut trng = crate::rng::stream_rng(derive_seed(base, k as u64), crate::rng::stream::NOISE);
            let kicks = sample_kicks(body, n, noise, &mut trng);
            let z = engine.run(&kicks)?;
            Ok(sample_from_expectation(z, shots_per_traj, p_readout, &mut trng).value)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(Estimate {
        value: stats::mean(&values),
        stderr: stats::sem(&values),
    })
}
