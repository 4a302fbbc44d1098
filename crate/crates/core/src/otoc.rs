//! Out-of-time-ordered correlators `C(t) = <W(t)† V† W(t) V>`.
//!
//! Three routes are provided: the direct statevector oracle (exact or
//! Trotterized evolution), the interferometric circuit simulated exactly,
//! and the same circuit under stochastic Pauli noise. The renormalized
//! estimate divides a noisy `C_{V,W}` by the companion `C_{V,1}` run.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{interferometric_circuit, trotter_rotations, Circuit, Gate, TermOrder, CONTROL_QUBIT};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::pauli::{Pauli, PauliString};
use crate::simulate::{noisy_run, sample_shots, ExactPropagator, NoiseModel, StateVector};
use crate::transpile::{route, CouplingGraph};

/// Instability cutoff on `|C_{V,1}|` below which renormalization is withheld.
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OtocMode {
    DirectExact,
    DirectTrotter,
    InterferometricIdeal,
    InterferometricNoisy,
}

impl OtocMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OtocMode::DirectExact => "direct-exact",
            OtocMode::DirectTrotter => "direct-trotter",
            OtocMode::InterferometricIdeal => "interferometric-ideal",
            OtocMode::InterferometricNoisy => "interferometric-noisy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtocPoint {
    pub t: f64,
    pub re_c: f64,
    pub stderr: f64,
    pub mode: OtocMode,
    #[serde(default)]
    pub renormalized: Option<f64>,
    #[serde(default)]
    pub c_v1: Option<f64>,
}

/// Time-evolution backend for the direct oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evolution {
    Exact,
    Trotter { steps: usize },
}

/// Single-site `Z` on system qubit `q`.
pub fn z_on(n_qubits: usize, q: usize) -> Result<PauliString> {
    PauliString::single(n_qubits, q, Pauli::Z)
}

/// Forward and backward application of `U(t)`.
enum Propagator {
    Exact { prop: ExactPropagator, t: f64 },
    Trotter { rotations: Vec<(PauliString, f64)>, steps: usize },
}

impl Propagator {
    fn new(h: &Hamiltonian, t: f64, evolution: Evolution, order: TermOrder) -> Result<Self> {
        match evolution {
            Evolution::Exact => Ok(Propagator::Exact {
                prop: ExactPropagator::new(h)?,
                t,
            }),
            Evolution::Trotter { steps } => {
                if steps == 0 {
                    return Err(Error::param("Trotter evolution needs at least one step"));
                }
                Ok(Propagator::Trotter {
                    rotations: trotter_rotations(h, t / steps as f64, order)?,
                    steps,
                })
            }
        }
    }

    fn forward(&self, psi: &mut StateVector) -> Result<()> {
        match self {
            Propagator::Exact { prop, t } => *psi = prop.evolve(psi, *t)?,
            Propagator::Trotter { rotations, steps } => {
                for _ in 0..*steps {
                    apply_step(psi, rotations)?;
                }
            }
        }
        Ok(())
    }

    fn backward(&self, psi: &mut StateVector) -> Result<()> {
        match self {
            Propagator::Exact { prop, t } => *psi = prop.evolve(psi, -*t)?,
            Propagator::Trotter { rotations, steps } => {
                for _ in 0..*steps {
                    apply_step_inverse(psi, rotations)?;
                }
            }
        }
        Ok(())
    }
}

fn apply_step(psi: &mut StateVector, rotations: &[(PauliString, f64)]) -> Result<()> {
    for (p, theta) in rotations {
        psi.apply_pauli_rotation(p, *theta)?;
    }
    Ok(())
}

fn apply_step_inverse(psi: &mut StateVector, rotations: &[(PauliString, f64)]) -> Result<()> {
    for (p, theta) in rotations.iter().rev() {
        psi.apply_pauli_rotation(p, -*theta)?;
    }
    Ok(())
}

fn check_operands(h: &Hamiltonian, v: &PauliString, w: &PauliString, psi0: &StateVector) -> Result<()> {
    for n in [v.n_qubits(), w.n_qubits(), psi0.n_qubits()] {
        if n != h.n_qubits() {
            return Err(Error::Dimension {
                expected: h.n_qubits(),
                found: n,
            });
        }
    }
    Ok(())
}

/// `C(t) = <b|a>` with `|a> = U†WU V|ψ0>` and `|b> = V U†WU |ψ0>`.
pub fn otoc_direct(
    h: &Hamiltonian,
    t: f64,
    v: &PauliString,
    w: &PauliString,
    psi0: &StateVector,
    evolution: Evolution,
    order: TermOrder,
) -> Result<Complex64> {
    check_operands(h, v, w, psi0)?;
    let u = Propagator::new(h, t, evolution, order)?;

    let mut a = psi0.clone();
    a.apply_pauli(v)?;
    u.forward(&mut a)?;
    a.apply_pauli(w)?;
    u.backward(&mut a)?;

    let mut b = psi0.clone();
    u.forward(&mut b)?;
    b.apply_pauli(w)?;
    u.backward(&mut b)?;
    b.apply_pauli(v)?;

    b.inner(&a)
}

/// Trotterized `C(k·dt)` for every `k` in `steps` (strictly increasing),
/// reusing forward evolution between grid points.
pub fn otoc_trotter_series(
    h: &Hamiltonian,
    v: &PauliString,
    w: &PauliString,
    psi0: &StateVector,
    dt: f64,
    steps: &[usize],
    order: TermOrder,
) -> Result<Vec<Complex64>> {
    check_operands(h, v, w, psi0)?;
    if steps.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::param("step counts must be strictly increasing"));
    }
    let rotations = trotter_rotations(h, dt, order)?;
    let mut fa = psi0.clone();
    fa.apply_pauli(v)?;
    let mut fb = psi0.clone();
    let mut done = 0usize;
    let mut out = Vec::with_capacity(steps.len());
    for &k in steps {
        while done < k {
            apply_step(&mut fa, &rotations)?;
            apply_step(&mut fb, &rotations)?;
            done += 1;
        }
        let mut a = fa.clone();
        a.apply_pauli(w)?;
        let mut b = fb.clone();
        b.apply_pauli(w)?;
        for _ in 0..k {
            apply_step_inverse(&mut a, &rotations)?;
            apply_step_inverse(&mut b, &rotations)?;
        }
        b.apply_pauli(v)?;
        out.push(b.inner(&a)?);
    }
    Ok(out)
}

/// Exact `C(t)` at each of `times`, sharing one eigendecomposition.
pub fn otoc_exact_series(
    h: &Hamiltonian,
    v: &PauliString,
    w: &PauliString,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    check_operands(h, v, w, psi0)?;
    let prop = ExactPropagator::new(h)?;
    let mut vpsi = psi0.clone();
    vpsi.apply_pauli(v)?;
    times
        .iter()
        .map(|&t| {
            let mut a = prop.evolve(&vpsi, t)?;
            a.apply_pauli(w)?;
            let a = prop.evolve(&a, -t)?;
            let mut b = prop.evolve(psi0, t)?;
            b.apply_pauli(w)?;
            let mut b = prop.evolve(&b, -t)?;
            b.apply_pauli(v)?;
            b.inner(&a)
        })
        .collect()
}

/// How the interferometric circuit is executed.
#[derive(Debug, Clone, Default)]
pub struct InterferometricRun {
    /// `None` runs the ideal circuit.
    pub noise: Option<NoiseModel>,
    /// 0 selects exact expectations; otherwise shots per estimate
    /// (per trajectory when noisy).
    pub shots: usize,
    pub trajectories: usize,
    pub order: TermOrder,
    /// Route onto this graph before noisy execution.
    pub topology: Option<CouplingGraph>,
}

/// Ideal `<Z_c>` of a circuit whose last gate measures the control.
fn ideal_control_expectation(c: &Circuit) -> Result<StateVector> {
    let mut psi = StateVector::zero(c.n_qubits())?;
    for g in c.gates() {
        if !g.is_measurement() {
            psi.apply_gate(g)?;
        }
    }
    Ok(psi)
}

/// Executes the interferometric circuit and returns `Re C(t)`.
pub fn otoc_interferometric<R: Rng + ?Sized>(
    h: &Hamiltonian,
    t: f64,
    steps: usize,
    v: &PauliString,
    w: &PauliString,
    run: &InterferometricRun,
    rng: &mut R,
) -> Result<OtocPoint> {
    let circuit = interferometric_circuit(h, t, steps, v, w, run.order)?;
    match &run.noise {
        None => {
            let psi = ideal_control_expectation(&circuit)?;
            let est = sample_shots(&psi, CONTROL_QUBIT, run.shots, 0.0, rng)?;
            Ok(OtocPoint {
                t,
                re_c: est.value,
                stderr: est.stderr,
                mode: OtocMode::InterferometricIdeal,
                renormalized: None,
                c_v1: None,
            })
        }
        Some(noise) => {
            let physical = match &run.topology {
                Some(g) => route(&circuit, g, None)?.circuit,
                None => circuit,
            };
            debug_assert!(matches!(physical.gates().last(), Some(Gate::Measure(..))));
            let est = noisy_run(&physical, noise, run.trajectories.max(1), run.shots, rng)?;
            Ok(OtocPoint {
                t,
                re_c: est.value,
                stderr: est.stderr,
                mode: OtocMode::InterferometricNoisy,
                renormalized: None,
                c_v1: None,
            })
        }
    }
}

/// Outcome of dividing by the `C_{V,1}` companion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Renormalized {
    Stable(f64),
    /// `|C_{V,1}|` fell below the cutoff; no value is reported.
    Unstable { c_v1: f64 },
}

impl Renormalized {
    pub fn value(self) -> Option<f64> {
        match self {
            Renormalized::Stable(v) => Some(v),
            Renormalized::Unstable { .. } => None,
        }
    }

    pub fn is_unstable(self) -> bool {
        matches!(self, Renormalized::Unstable { .. })
    }
}

/// `c_vw / c_v1`, withheld when `|c_v1| < epsilon`.
pub fn renormalize(c_vw: f64, c_v1: f64, epsilon: f64) -> Renormalized {
    if c_v1.abs() < epsilon || !c_v1.is_finite() {
        Renormalized::Unstable { c_v1 }
    } else {
        Renormalized::Stable(c_vw / c_v1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_full_bosonic, build_sparse_bosonic};
    use crate::rng::stream_rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn renormalize_examples() {
        assert_eq!(renormalize(0.5, 1.0, DEFAULT_EPSILON), Renormalized::Stable(0.5));
        let r = renormalize(0.3, 0.6, DEFAULT_EPSILON).value().unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert!(renormalize(0.01, 0.02, 0.05).is_unstable());
        assert_eq!(renormalize(0.01, 0.02, 0.05).value(), None);
    }

    #[test]
    fn renormalize_undoes_common_attenuation() {
        for f in [0.9, 0.5, 0.2, 0.07] {
            for ideal in [-0.8, 0.1, 0.6, 1.0] {
                let r = renormalize(f * ideal, f * 1.0, DEFAULT_EPSILON).value().unwrap();
                assert!((r - ideal).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commuting_at_time_zero() {
        let h = build_full_bosonic(8, 1.0, 1).unwrap();
        let psi = StateVector::zero(4).unwrap();
        let (v, w) = (p("ZIII"), p("IZII"));
        for ev in [Evolution::Exact, Evolution::Trotter { steps: 3 }] {
            let c = otoc_direct(&h, 0.0, &v, &w, &psi, ev, TermOrder::Lexicographic).unwrap();
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_w_gives_one() {
        let h = build_sparse_bosonic(8, 2.0, 1.0, 3).unwrap();
        let psi = StateVector::zero(4).unwrap();
        let (v, w) = (p("ZIII"), p("IIII"));
        for t in [0.2, 0.9, 2.5] {
            for ev in [Evolution::Exact, Evolution::Trotter { steps: 4 }] {
                let c = otoc_direct(&h, t, &v, &w, &psi, ev, TermOrder::Lexicographic).unwrap();
                assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn series_matches_pointwise() {
        let h = build_sparse_bosonic(10, 2.0, 1.0, 17).unwrap();
        let psi = StateVector::zero(5).unwrap();
        let (v, w) = (z_on(5, 0).unwrap(), z_on(5, 1).unwrap());
        let dt = 0.1;
        let steps = [1, 2, 5, 7];
        let series = otoc_trotter_series(&h, &v, &w, &psi, dt, &steps, TermOrder::Lexicographic).unwrap();
        for (&k, c) in steps.iter().zip(&series) {
            let direct = otoc_direct(
                &h,
                k as f64 * dt,
                &v,
                &w,
                &psi,
                Evolution::Trotter { steps: k },
                TermOrder::Lexicographic,
            )
            .unwrap();
            assert!((direct - c).norm() < 1e-12);
        }
        assert!(otoc_trotter_series(&h, &v, &w, &psi, dt, &[2, 2], TermOrder::Lexicographic).is_err());
    }

    #[test]
    fn exact_series_matches_pointwise() {
        let h = build_full_bosonic(8, 1.0, 6).unwrap();
        let psi = StateVector::zero(4).unwrap();
        let (v, w) = (p("ZIII"), p("IZII"));
        let times = [0.0, 0.3, 1.1];
        let series = otoc_exact_series(&h, &v, &w, &psi, &times).unwrap();
        for (&t, c) in times.iter().zip(&series) {
            let d = otoc_direct(&h, t, &v, &w, &psi, Evolution::Exact, TermOrder::Lexicographic).unwrap();
            assert!((d - c).norm() < 1e-12);
        }
    }

    #[test]
    fn interferometer_matches_direct() {
        let mut rng = stream_rng(1, 0);
        for seed in 0..4 {
            let h = build_sparse_bosonic(8, 1.0, 1.0, seed).unwrap();
            let psi = StateVector::zero(4).unwrap();
            let (v, w) = (p("ZIII"), p("IZII"));
            for (t, steps) in [(0.1, 1), (0.5, 5), (1.0, 3)] {
                let direct = otoc_direct(
                    &h,
                    t,
                    &v,
                    &w,
                    &psi,
                    Evolution::Trotter { steps },
                    TermOrder::Lexicographic,
                )
                .unwrap();
                let run = InterferometricRun::default();
                let pt = otoc_interferometric(&h, t, steps, &v, &w, &run, &mut rng).unwrap();
                assert!((pt.re_c - direct.re).abs() < 1e-10);
                assert_eq!(pt.mode, OtocMode::InterferometricIdeal);
            }
        }
    }

    /// Complex conjugate of `h` in the computational basis.
    fn conjugate(h: &Hamiltonian) -> Hamiltonian {
        let terms = h
            .terms()
            .iter()
            .map(|t| (t.pauli, if t.pauli.y_count() % 2 == 1 { -t.coeff } else { t.coeff }))
            .collect();
        Hamiltonian::custom(h.n_qubits(), terms).unwrap()
    }

    #[test]
    fn time_reversal_conjugates() {
        let psi = StateVector::zero(4).unwrap();
        let (v, w) = (p("ZIII"), p("IZII"));
        let exact = |h: &Hamiltonian, t: f64| {
            otoc_direct(h, t, &v, &w, &psi, Evolution::Exact, TermOrder::Lexicographic).unwrap()
        };
        // real symmetric H
        let real = Hamiltonian::custom(
            4,
            vec![(p("XXZI"), 0.7), (p("ZYYX"), -0.4), (p("IXIZ"), 0.3), (p("YIYZ"), 0.9), (p("ZZXI"), 0.2)],
        )
        .unwrap();
        for t in [0.4, 1.3] {
            assert!((exact(&real, t) - exact(&real, -t).conj()).norm() < 1e-10);
        }
        // in general C_H(-t) = conj(C_{H*}(t))
        let h = build_full_bosonic(8, 1.0, 2).unwrap();
        let hc = conjugate(&h);
        for t in [0.4, 1.3] {
            let fwd = exact(&h, t);
            assert!((exact(&hc, -t) - fwd.conj()).norm() < 1e-10);
            assert!(fwd.norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn noiseless_noisy_mode_equals_ideal() {
        let h = build_sparse_bosonic(8, 1.0, 1.0, 9).unwrap();
        let (v, w) = (p("ZIII"), p("IZII"));
        let mut rng = stream_rng(2, 0);
        let ideal = otoc_interferometric(&h, 0.3, 3, &v, &w, &InterferometricRun::default(), &mut rng).unwrap();
        let run = InterferometricRun {
            noise: Some(NoiseModel::noiseless()),
            trajectories: 8,
            ..Default::default()
        };
        let noisy = otoc_interferometric(&h, 0.3, 3, &v, &w, &run, &mut rng).unwrap();
        assert_eq!(noisy.re_c, ideal.re_c);
        let routed = InterferometricRun {
            topology: Some(CouplingGraph::linear(5).unwrap()),
            ..run
        };
        let noisy = otoc_interferometric(&h, 0.3, 3, &v, &w, &routed, &mut rng).unwrap();
        assert!((noisy.re_c - ideal.re_c).abs() < 1e-12);
    }

    #[test]
    fn shot_sampling_is_unbiased() {
        let h = build_sparse_bosonic(8, 2.0, 1.0, 4).unwrap();
        let (v, w) = (p("ZIII"), p("IZII"));
        let mut rng = stream_rng(3, 0);
        let exact = otoc_interferometric(&h, 0.6, 6, &v, &w, &InterferometricRun::default(), &mut rng).unwrap();
        let run = InterferometricRun {
            shots: 4096,
            ..Default::default()
        };
        let shot = otoc_interferometric(&h, 0.6, 6, &v, &w, &run, &mut rng).unwrap();
        assert!(shot.stderr > 0.0);
        assert!((shot.re_c - exact.re_c).abs() < 5.0 * shot.stderr.max(1e-3));
    }
}
