use num_complex::Complex64;
use proptest::prelude::*;

use syk_otoc::circuit::{interferometric_circuit, pauli_exponential, trotter_rotations, trotter_step, TermOrder};
use syk_otoc::ensemble::{depth_survey, run_ensemble, ExperimentConfig, RunMode, TimeGrid};
use syk_otoc::hamiltonian::{
    boson_operator, build_full_bosonic, build_sparse_bosonic, index_tuples, term_from_indices, Hamiltonian,
};
use syk_otoc::otoc::{otoc_direct, otoc_interferometric, z_on, Evolution, InterferometricRun};
use syk_otoc::pauli::PauliString;
use syk_otoc::rng::stream_rng;
use syk_otoc::simulate::{exact_evolve, noisy_run, NoiseModel, StateVector};
use syk_otoc::stats::{mean, sem};
use syk_otoc::transpile::Topology;

/// Number of `(2a-1, 2a)` pairs inside a sorted 1-based index tuple.
fn same_site_pairs(t: [usize; 4]) -> u32 {
    let mut eta = 0;
    for a in 0..3 {
        if t[a] % 2 == 1 && t[a + 1] == t[a] + 1 {
            eta += 1;
        }
    }
    eta
}

#[test]
fn construction_phases_are_real_from_operator_products() {
    for n in [6usize, 8, 10, 12] {
        for t in index_tuples(n) {
            let ops: Vec<PauliString> = t.iter().map(|&m| boson_operator(m, n).unwrap()).collect();
            let (mut acc, mut phase) = (ops[0], syk_otoc::pauli::Phase::ONE);
            for op in &ops[1..] {
                let (next, ph) = acc.multiply(op).unwrap();
                acc = next;
                phase *= ph;
            }
            let eta = same_site_pairs(t);
            let total = (eta + phase.exponent() as u32) % 4;
            assert!(total == 0 || total == 2, "{t:?}");
            let indexed = term_from_indices(t[0], t[1], t[2], t[3], n).unwrap();
            assert_eq!(indexed.pauli, acc);
            assert_eq!(indexed.eta, eta);
            assert!(indexed.bosonic_factor().is_real());
            assert!(acc.weight() <= 4);
        }
    }
}

#[test]
fn sparse_counts_at_n12() {
    let counts: Vec<f64> = (0..2000u64)
        .map(|s| build_sparse_bosonic(12, 1.0, 1.0, s).unwrap().meta().generated_terms as f64)
        .collect();
    let (m, e) = (mean(&counts), sem(&counts));
    assert!((m - 12.0).abs() < 4.0 * e, "mean {m} sem {e}");
}

#[test]
fn trotter_local_error_is_second_order() {
    let h = build_full_bosonic(8, 1.0, 3).unwrap();
    let mut rng = stream_rng(4, 0);
    let psi = StateVector::random(4, &mut rng).unwrap();
    let mut consts = Vec::new();
    for dt in [0.1, 0.05, 0.025, 0.0125] {
        let mut a = psi.clone();
        a.apply_circuit(&trotter_step(&h, dt, TermOrder::Lexicographic).unwrap())
            .unwrap();
        let b = exact_evolve(&h, dt, &psi).unwrap();
        consts.push(a.distance(&b) / (dt * dt));
    }
    for w in consts.windows(2) {
        let r = w[1] / w[0];
        assert!((0.8..1.25).contains(&r), "{consts:?}");
    }
}

#[test]
fn noiseless_trajectories_reproduce_ideal_bits() {
    let h = build_sparse_bosonic(8, 2.0, 1.0, 5).unwrap();
    let (v, w) = (z_on(4, 0).unwrap(), z_on(4, 2).unwrap());
    let c = interferometric_circuit(&h, 0.4, 4, &v, &w, TermOrder::Lexicographic).unwrap();
    let mut psi = StateVector::zero(5).unwrap();
    for g in &c.gates()[..c.len() - 1] {
        psi.apply_gate(g).unwrap();
    }
    let mut rng = stream_rng(1, 1);
    let e = noisy_run(&c, &NoiseModel::noiseless(), 5, 0, &mut rng).unwrap();
    assert_eq!(e.value, psi.expectation_z(0).unwrap());
    assert_eq!(e.stderr, 0.0);
}

#[test]
fn ensemble_and_depth_outputs_are_deterministic() {
    let cfg = ExperimentConfig {
        ensemble_size: 5,
        master_seed: 77,
        mode: RunMode::Shots,
        shots: 256,
        companion: true,
        time_grid: TimeGrid::Uniform { dt: 0.1, steps_max: 3 },
        topology: Topology::HeavyHexPatch,
        ..Default::default()
    };
    assert_eq!(run_ensemble(&cfg).unwrap(), run_ensemble(&cfg).unwrap());
    assert_eq!(depth_survey(&cfg, &[1, 2]).unwrap(), depth_survey(&cfg, &[1, 2]).unwrap());
}

fn small_hamiltonian(terms: &[(u64, u64, f64)], n: usize) -> Hamiltonian {
    let mask = (1u64 << n) - 1;
    let list = terms
        .iter()
        .map(|&(x, z, c)| (PauliString::from_masks(n, x & mask, z & mask).unwrap(), c))
        .filter(|(p, _)| !p.is_identity())
        .collect();
    Hamiltonian::custom(n, list).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gate_and_rotation_paths_agree(
        terms in prop::collection::vec((any::<u64>(), any::<u64>(), -2.0f64..2.0), 1..8),
        n in 2usize..6,
        seed in any::<u64>(),
    ) {
        let h = small_hamiltonian(&terms, n);
        let rot = trotter_rotations(&h, 1.0, TermOrder::GenerationOrder).unwrap();
        let mut rng = stream_rng(seed, 0);
        let psi = StateVector::random(n, &mut rng).unwrap();
        let (mut a, mut b) = (psi.clone(), psi);
        for (p, th) in &rot {
            a.apply_circuit(&pauli_exponential(p, *th)).unwrap();
            b.apply_pauli_rotation(p, *th).unwrap();
        }
        prop_assert!(a.distance_inf(&b) < 1e-12);
        prop_assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn otoc_is_bounded_and_companion_is_one(
        terms in prop::collection::vec((any::<u64>(), any::<u64>(), -2.0f64..2.0), 1..10),
        t in 0.0f64..3.0,
        steps in 1usize..5,
    ) {
        let n = 4;
        let h = small_hamiltonian(&terms, n);
        let psi = StateVector::zero(n).unwrap();
        let (v, w) = (z_on(n, 0).unwrap(), z_on(n, 1).unwrap());
        let one = PauliString::identity(n).unwrap();
        for ev in [Evolution::Exact, Evolution::Trotter { steps }] {
            let c = otoc_direct(&h, t, &v, &w, &psi, ev, TermOrder::Lexicographic).unwrap();
            prop_assert!(c.norm() <= 1.0 + 1e-10);
            let c1 = otoc_direct(&h, t, &v, &one, &psi, ev, TermOrder::Lexicographic).unwrap();
            prop_assert!((c1 - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
        let mut rng = stream_rng(0, 0);
        let pt = otoc_interferometric(&h, t, steps, &v, &w, &InterferometricRun::default(), &mut rng).unwrap();
        prop_assert!(pt.re_c.abs() <= 1.0 + 1e-10);
    }

    #[test]
    fn direct_and_interferometric_agree(seed in any::<u64>(), kappa in 0.2f64..3.0, t in 0.0f64..1.5) {
        let h = build_sparse_bosonic(8, kappa, 1.0, seed).unwrap();
        let steps = 1 + (seed % 4) as usize;
        let (v, w) = (z_on(4, 0).unwrap(), z_on(4, 3).unwrap());
        let psi = StateVector::zero(4).unwrap();
        let direct = otoc_direct(&h, t, &v, &w, &psi, Evolution::Trotter { steps }, TermOrder::Lexicographic).unwrap();
        let mut rng = stream_rng(seed, 9);
        let pt = otoc_interferometric(&h, t, steps, &v, &w, &InterferometricRun::default(), &mut rng).unwrap();
        prop_assert!((pt.re_c - direct.re).abs() < 1e-10);
    }
}
