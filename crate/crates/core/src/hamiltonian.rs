//! SYK Hamiltonians as real-weighted Pauli sums.
//!
//! Bosons are realized on `N/2` qubits: boson `2a-1` is `X` on qubit `a-1`
//! and boson `2a` is `Y` on qubit `a-1` (1-based boson indices, 0-based
//! qubits). A four-boson product therefore has weight at most four; a pair of
//! bosons sharing a qubit collapses to `i·Z`, and the `i^eta` prefactor with
//! `eta` the number of such `Z` sites makes every term Hermitian.
//!
//! Majoranas for the fermionic model use the Jordan-Wigner strings
//! `Z…Z X I…` / `Z…Z Y I…`.
//!
//! Couplings `J_ijkl` are drawn from the unit normal distribution in
//! lexicographic tuple order and scaled by `sqrt(6/N^3)` (or
//! `sqrt(6/(p N^3))` when sparsified), giving each coefficient variance
//! `6 J^2 / N^3`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, Phase};
use crate::rng::{stream, stream_rng};

/// Largest boson/fermion count accepted by the builders (13 system qubits).
pub const MAX_N: usize = 26;
/// Largest width for which [`Hamiltonian::to_dense`] will allocate.
pub const DENSE_MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    BosonicFull,
    BosonicSparse,
    FermionicFull,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::BosonicFull => "bosonic-full",
            Model::BosonicSparse => "bosonic-sparse",
            Model::FermionicFull => "fermionic-full",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bosonic-full" => Ok(Model::BosonicFull),
            "bosonic-sparse" => Ok(Model::BosonicSparse),
            "fermionic-full" => Ok(Model::FermionicFull),
            other => Err(Error::Parse(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianMeta {
    pub model: Model,
    /// Boson (or Majorana) count.
    pub n: usize,
    pub n_qubits: usize,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    /// Coupling scale `J`.
    pub coupling: f64,
    pub seed: u64,
    /// Four-index tuples that produced a term, counted before merging.
    pub generated_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub pauli: PauliString,
    pub coeff: f64,
}

/// Weighted Pauli sum. Terms are held in generation order; serialization and
/// [`Hamiltonian::sorted_terms`] use lexicographic string order.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<Term>,
    meta: HamiltonianMeta,
}

/// Product of four boson (or Majorana) operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexedTerm {
    pub pauli: PauliString,
    /// Phase accumulated while multiplying the four operators.
    pub phase: Phase,
    /// Number of `Z` sites in the product string.
    pub eta: u32,
}

impl IndexedTerm {
    /// The phase multiplying the string in the Hamiltonian term
    /// (`i^eta · phase` for bosons).
    pub fn bosonic_factor(&self) -> Phase {
        Phase::from_exponent(self.eta) * self.phase
    }
}

/// Which four-index tuples survived sparsification, indexed by lexicographic
/// tuple rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    included: Vec<bool>,
}

impl SparsityPattern {
    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn included_count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([usize; 4], bool)> + '_ {
        index_tuples(self.n).zip(self.included.iter().copied())
    }

    pub fn get(&self, tuple: [usize; 4]) -> Option<bool> {
        self.iter().find(|(t, _)| *t == tuple).map(|(_, b)| b)
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// All `1 <= i < j < k < l <= n` in lexicographic order.
pub fn index_tuples(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (1..=n).flat_map(move |i| {
        (i + 1..=n).flat_map(move |j| {
            (j + 1..=n).flat_map(move |k| (k + 1..=n).map(move |l| [i, j, k, l]))
        })
    })
}

/// Sparsification probability `p = kappa · N / C(N,4)`.
pub fn sparsity_probability(n: usize, kappa: f64) -> Result<f64> {
    if n < 4 {
        return Err(Error::param(format!("N must be at least 4, got {n}")));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::param(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    let p = kappa * n as f64 / binomial(n, 4) as f64;
    if p > 1.0 {
        return Err(Error::param(format!(
            "kappa = {kappa} gives p = {p:.6} > 1 at N = {n}"
        )));
    }
    Ok(p)
}

fn bosonic_width(n: usize) -> usize {
    n.div_ceil(2)
}

fn check_index(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::param(format!("operator index {m} outside 1..={n}")));
    }
    Ok(())
}

/// Spin realization of boson `m` (1-based) among `n`.
pub fn boson_operator(m: usize, n: usize) -> Result<PauliString> {
    check_index(m, n)?;
    let qubit = (m - 1) / 2;
    let op = if m % 2 == 1 { Pauli::X } else { Pauli::Y };
    PauliString::single(bosonic_width(n), qubit, op)
}

/// Jordan-Wigner realization of Majorana `m` (1-based) among `n`.
pub fn majorana_operator(m: usize, n: usize) -> Result<PauliString> {
    check_index(m, n)?;
    let qubit = (m - 1) / 2;
    let width = bosonic_width(n);
    let tail = (1u64 << qubit) - 1;
    let (x, z) = if m % 2 == 1 {
        (1u64 << qubit, tail)
    } else {
        (1u64 << qubit, tail | (1u64 << qubit))
    };
    PauliString::from_masks(width, x, z)
}

fn check_tuple(idx: [usize; 4], n: usize) -> Result<()> {
    let [i, j, k, l] = idx;
    if !(1 <= i && i < j && j < k && k < l && l <= n) {
        return Err(Error::param(format!(
            "indices must satisfy 1 <= i < j < k < l <= {n}, got {idx:?}"
        )));
    }
    Ok(())
}

fn product_of(
    idx: [usize; 4],
    n: usize,
    op: fn(usize, usize) -> Result<PauliString>,
) -> Result<IndexedTerm> {
    check_tuple(idx, n)?;
    let mut acc = op(idx[0], n)?;
    let mut phase = Phase::ONE;
    for &m in &idx[1..] {
        let (next, ph) = acc.multiply(&op(m, n)?)?;
        acc = next;
        phase *= ph;
    }
    Ok(IndexedTerm {
        pauli: acc,
        phase,
        eta: acc.z_count(),
    })
}

/// `phi_i phi_j phi_k phi_l` for 1-based boson indices.
pub fn term_from_indices(i: usize, j: usize, k: usize, l: usize, n: usize) -> Result<IndexedTerm> {
    product_of([i, j, k, l], n, boson_operator)
}

/// `psi_i psi_j psi_k psi_l` for 1-based Majorana indices.
pub fn fermionic_term_from_indices(
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    n: usize,
) -> Result<IndexedTerm> {
    product_of([i, j, k, l], n, majorana_operator)
}

fn check_even_n(n: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::param(format!("N must be even, got {n}")));
    }
    if !(4..=MAX_N).contains(&n) {
        return Err(Error::param(format!("N must lie in 4..={MAX_N}, got {n}")));
    }
    Ok(())
}

fn check_coupling(coupling: f64) -> Result<()> {
    if !coupling.is_finite() {
        return Err(Error::param("coupling J must be finite"));
    }
    Ok(())
}

fn real_sign(phase: Phase, idx: [usize; 4]) -> Result<f64> {
    phase
        .real_sign()
        .map(f64::from)
        .ok_or_else(|| Error::param(format!("non-real term phase {phase} for tuple {idx:?}")))
}

/// Merges duplicate strings by coefficient addition, keeping first-occurrence order.
fn merge_terms(raw: Vec<Term>) -> Vec<Term> {
    let mut slot: HashMap<PauliString, usize> = HashMap::with_capacity(raw.len());
    let mut out: Vec<Term> = Vec::with_capacity(raw.len());
    for t in raw {
        match slot.get(&t.pauli) {
            Some(&i) => out[i].coeff += t.coeff,
            None => {
                slot.insert(t.pauli, out.len());
                out.push(t);
            }
        }
    }
    out
}

/// Full bosonic SYK with `C(N,4)` terms.
pub fn build_full_bosonic(n: usize, coupling: f64, seed: u64) -> Result<Hamiltonian> {
    check_even_n(n)?;
    check_coupling(coupling)?;
    let mut rng = stream_rng(seed, stream::HAMILTONIAN);
    let scale = (6.0 / (n as f64).powi(3)).sqrt() * coupling;
    let mut raw = Vec::with_capacity(binomial(n, 4) as usize);
    for idx in index_tuples(n) {
        let g: f64 = rng.sample(StandardNormal);
        let t = product_of(idx, n, boson_operator)?;
        let sign = real_sign(t.bosonic_factor(), idx)?;
        raw.push(Term {
            pauli: t.pauli,
            coeff: scale * g * sign,
        });
    }
    let generated = raw.len();
    Ok(Hamiltonian {
        n_qubits: n / 2,
        terms: merge_terms(raw),
        meta: HamiltonianMeta {
            model: Model::BosonicFull,
            n,
            n_qubits: n / 2,
            kappa: None,
            p: None,
            coupling,
            seed,
            generated_terms: generated,
        },
    })
}

/// Sparsified bosonic SYK together with the inclusion mask that produced it.
pub fn build_sparse_bosonic_with_pattern(
    n: usize,
    kappa: f64,
    coupling: f64,
    seed: u64,
) -> Result<(Hamiltonian, SparsityPattern)> {
    check_even_n(n)?;
    check_coupling(coupling)?;
    let p = sparsity_probability(n, kappa)?;
    let mut rng = stream_rng(seed, stream::HAMILTONIAN);
    let scale = if p > 0.0 {
        (6.0 / (p * (n as f64).powi(3))).sqrt() * coupling
    } else {
        0.0
    };
    let mut raw = Vec::new();
    let mut included = Vec::with_capacity(binomial(n, 4) as usize);
    for idx in index_tuples(n) {
        // Both draws happen for every tuple so the stream position never
        // depends on earlier inclusion outcomes.
        let u: f64 = rng.random();
        let g: f64 = rng.sample(StandardNormal);
        let keep = u < p;
        included.push(keep);
        if keep {
            let t = product_of(idx, n, boson_operator)?;
            let sign = real_sign(t.bosonic_factor(), idx)?;
            raw.push(Term {
                pauli: t.pauli,
                coeff: scale * g * sign,
            });
        }
    }
    let generated = raw.len();
    let h = Hamiltonian {
        n_qubits: n / 2,
        terms: merge_terms(raw),
        meta: HamiltonianMeta {
            model: Model::BosonicSparse,
            n,
            n_qubits: n / 2,
            kappa: Some(kappa),
            p: Some(p),
            coupling,
            seed,
            generated_terms: generated,
        },
    };
    Ok((h, SparsityPattern { n, included }))
}

pub fn build_sparse_bosonic(n: usize, kappa: f64, coupling: f64, seed: u64) -> Result<Hamiltonian> {
    build_sparse_bosonic_with_pattern(n, kappa, coupling, seed).map(|(h, _)| h)
}

/// Full fermionic SYK through Jordan-Wigner.
pub fn build_full_fermionic(n: usize, coupling: f64, seed: u64) -> Result<Hamiltonian> {
    check_even_n(n)?;
    check_coupling(coupling)?;
    let mut rng = stream_rng(seed, stream::HAMILTONIAN);
    let scale = (6.0 / (n as f64).powi(3)).sqrt() * coupling;
    let mut raw = Vec::with_capacity(binomial(n, 4) as usize);
    for idx in index_tuples(n) {
        let g: f64 = rng.sample(StandardNormal);
        let t = product_of(idx, n, majorana_operator)?;
        let sign = real_sign(t.phase, idx)?;
        raw.push(Term {
            pauli: t.pauli,
            coeff: scale * g * sign,
        });
    }
    let generated = raw.len();
    Ok(Hamiltonian {
        n_qubits: n / 2,
        terms: merge_terms(raw),
        meta: HamiltonianMeta {
            model: Model::FermionicFull,
            n,
            n_qubits: n / 2,
            kappa: None,
            p: None,
            coupling,
            seed,
            generated_terms: generated,
        },
    })
}

/// Dispatches on `model`; `kappa` is required for the sparse model only.
pub fn build(model: Model, n: usize, kappa: Option<f64>, coupling: f64, seed: u64) -> Result<Hamiltonian> {
    match model {
        Model::BosonicFull => build_full_bosonic(n, coupling, seed),
        Model::FermionicFull => build_full_fermionic(n, coupling, seed),
        Model::BosonicSparse => {
            let kappa = kappa.ok_or_else(|| Error::param("bosonic-sparse requires kappa"))?;
            build_sparse_bosonic(n, kappa, coupling, seed)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HamiltonianJson {
    meta: HamiltonianMeta,
    terms: Vec<Term>,
}

impl Hamiltonian {
    /// Hamiltonian from explicit terms; duplicates are merged.
    pub fn from_terms(n_qubits: usize, terms: Vec<Term>, meta: HamiltonianMeta) -> Result<Self> {
        for t in &terms {
            if t.pauli.n_qubits() != n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    found: t.pauli.n_qubits(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(Error::param(format!("non-finite coefficient on {}", t.pauli)));
            }
        }
        Ok(Self {
            n_qubits,
            terms: merge_terms(terms),
            meta,
        })
    }

    /// Ad hoc Hamiltonian for tests and examples, with placeholder metadata.
    pub fn custom(n_qubits: usize, terms: Vec<(PauliString, f64)>) -> Result<Self> {
        let generated = terms.len();
        let meta = HamiltonianMeta {
            model: Model::BosonicFull,
            n: 2 * n_qubits,
            n_qubits,
            kappa: None,
            p: None,
            coupling: 1.0,
            seed: 0,
            generated_terms: generated,
        };
        let terms = terms
            .into_iter()
            .map(|(pauli, coeff)| Term { pauli, coeff })
            .collect();
        Self::from_terms(n_qubits, terms, meta)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Terms in generation order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn meta(&self) -> &HamiltonianMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sorted_terms(&self) -> Vec<Term> {
        let mut v = self.terms.clone();
        v.sort_by(|a, b| a.pauli.cmp(&b.pauli));
        v
    }

    pub fn max_weight(&self) -> usize {
        self.terms.iter().map(|t| t.pauli.weight()).max().unwrap_or(0)
    }

    /// Dense matrix with qubit 0 as the least significant index bit.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_MAX_QUBITS {
            return Err(Error::ResourceCeiling(format!(
                "dense Hamiltonian limited to {DENSE_MAX_QUBITS} qubits, got {}",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            for col in 0..dim as u64 {
                let (row, ph) = t.pauli.apply_to_basis(col);
                m[(row as usize, col as usize)] += ph.to_complex() * t.coeff;
            }
        }
        Ok(m)
    }

    /// JSON document with terms in lexicographic order.
    pub fn to_json(&self) -> Result<String> {
        let doc = HamiltonianJson {
            meta: self.meta.clone(),
            terms: self.sorted_terms(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: HamiltonianJson = serde_json::from_str(s)?;
        let n = doc.meta.n_qubits;
        Self::from_terms(n, doc.terms, doc.meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn boson_operator_placement() {
        assert_eq!(boson_operator(1, 8).unwrap(), p("XIII"));
        assert_eq!(boson_operator(2, 8).unwrap(), p("YIII"));
        assert_eq!(boson_operator(5, 8).unwrap(), p("IIXI"));
        assert_eq!(boson_operator(8, 8).unwrap(), p("IIIY"));
        assert!(boson_operator(0, 8).is_err());
        assert!(boson_operator(9, 8).is_err());
    }

    #[test]
    fn majorana_tails() {
        assert_eq!(majorana_operator(1, 8).unwrap(), p("XIII"));
        assert_eq!(majorana_operator(4, 8).unwrap(), p("ZYII"));
        assert_eq!(majorana_operator(7, 8).unwrap(), p("ZZZX"));
    }

    #[test]
    fn bosonic_term_examples() {
        let t = term_from_indices(1, 2, 3, 4, 8).unwrap();
        assert_eq!(t.pauli, p("ZZII"));
        assert_eq!(t.phase, Phase::MINUS_ONE);
        assert_eq!(t.eta, 2);
        assert_eq!(t.bosonic_factor(), Phase::ONE);

        let t = term_from_indices(1, 3, 5, 7, 8).unwrap();
        assert_eq!(t.pauli, p("XXXX"));
        assert_eq!(t.phase, Phase::ONE);
        assert_eq!(t.eta, 0);

        let t = term_from_indices(1, 2, 3, 5, 8).unwrap();
        assert_eq!(t.pauli, p("ZXXI"));
        assert_eq!(t.eta, 1);
        assert!(t.bosonic_factor().is_real());
        assert_eq!(t.bosonic_factor(), Phase::MINUS_ONE);

        assert!(term_from_indices(2, 1, 3, 4, 8).is_err());
        assert!(term_from_indices(1, 2, 3, 9, 8).is_err());
    }

    #[test]
    fn fermionic_adjacent_pairs_cancel_tails() {
        let t = fermionic_term_from_indices(1, 2, 3, 4, 8).unwrap();
        assert_eq!(t.pauli.weight(), 2);
        assert_eq!(t.pauli, p("ZZII"));
        assert!(t.phase.is_real());
    }

    #[test]
    fn fermionic_far_indices_have_long_tails() {
        // Majoranas 1, 4, 9, 12 sit on qubits 0, 1, 4, 5 of a 6-qubit register.
        let t = fermionic_term_from_indices(1, 4, 9, 12, 12).unwrap();
        assert_eq!(t.pauli.weight(), 4);
        let t = fermionic_term_from_indices(1, 3, 10, 12, 12).unwrap();
        // psi_1 psi_3 spans qubits 0..=1, psi_10 psi_12 spans 4..=5
        assert_eq!(t.pauli.weight(), 4);
        let t = fermionic_term_from_indices(1, 2, 3, 12, 12).unwrap();
        // psi_3 psi_12 carries a Z tail from qubit 1 to qubit 5
        assert_eq!(t.pauli.weight(), 6);
        let max = build_full_fermionic(12, 1.0, 3).unwrap().max_weight();
        assert_eq!(max, 6);
    }

    #[test]
    fn full_counts_and_widths() {
        let h = build_full_bosonic(8, 1.0, 11).unwrap();
        assert_eq!(h.meta().generated_terms, 70);
        assert_eq!(h.len(), 70);
        assert_eq!(h.n_qubits(), 4);
        assert!(h.max_weight() <= 4);
        assert_eq!(build_full_bosonic(6, 1.0, 1).unwrap().n_qubits(), 3);
        assert_eq!(build_full_fermionic(8, 1.0, 1).unwrap().meta().generated_terms, 70);
    }

    #[test]
    fn odd_or_out_of_range_n_rejected() {
        assert!(build_full_bosonic(7, 1.0, 0).is_err());
        assert!(build_full_bosonic(2, 1.0, 0).is_err());
        assert!(build_full_bosonic(28, 1.0, 0).is_err());
        assert!(build_full_fermionic(9, 1.0, 0).is_err());
    }

    #[test]
    fn sparsity_probability_values() {
        let p8 = sparsity_probability(8, 1.0).unwrap();
        assert!((p8 - 8.0 / 70.0).abs() < 1e-15);
        assert!((sparsity_probability(20, 1.0).unwrap() * binomial(20, 4) as f64 - 20.0).abs() < 1e-9);
        // kappa = 5 at N = 6 gives p = 30/15 > 1
        assert!(sparsity_probability(6, 5.0).is_err());
        assert!(build_sparse_bosonic(6, 5.0, 1.0, 0).is_err());
    }

    #[test]
    fn zero_kappa_gives_empty_hamiltonian() {
        let h = build_sparse_bosonic(8, 0.0, 1.0, 5).unwrap();
        assert!(h.is_empty());
        assert_eq!(h.meta().p, Some(0.0));
    }

    #[test]
    fn sparse_pattern_matches_terms() {
        let (h, pat) = build_sparse_bosonic_with_pattern(10, 2.0, 1.0, 99).unwrap();
        assert_eq!(pat.len(), 210);
        assert_eq!(pat.included_count(), h.meta().generated_terms);
        for (idx, keep) in pat.iter() {
            let t = term_from_indices(idx[0], idx[1], idx[2], idx[3], 10).unwrap();
            let present = h.terms().iter().any(|x| x.pauli == t.pauli);
            assert_eq!(keep, present, "{idx:?}");
        }
        assert!(pat.get([1, 2, 3, 4]).is_some());
    }

    #[test]
    fn sparse_coefficient_variance() {
        // Kept couplings have variance 6 J^2 / (p N^3); pool many realizations.
        let n = 8;
        let p = sparsity_probability(n, 2.0).unwrap();
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for seed in 0..400 {
            let h = build_sparse_bosonic(n, 2.0, 1.0, seed).unwrap();
            sum_sq += h.terms().iter().map(|t| t.coeff * t.coeff).sum::<f64>();
            count += h.len();
        }
        let expected = 6.0 / (p * 512.0);
        let var = sum_sq / count as f64;
        assert!((var / expected - 1.0).abs() < 0.1, "{var} vs {expected}");
    }

    #[test]
    fn reproducible() {
        let a = build_sparse_bosonic(12, 1.0, 1.0, 123).unwrap();
        let b = build_sparse_bosonic(12, 1.0, 1.0, 123).unwrap();
        assert_eq!(a, b);
        let c = build_sparse_bosonic(12, 1.0, 1.0, 124).unwrap();
        assert_ne!(a.terms(), c.terms());
    }

    #[test]
    fn dense_is_hermitian() {
        for seed in 0..5 {
            let h = build_full_bosonic(8, 1.0, seed).unwrap();
            let m = h.to_dense().unwrap();
            let diff = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
            let f = build_full_fermionic(8, 1.0, seed).unwrap().to_dense().unwrap();
            assert!((&f - f.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        }
    }

    #[test]
    fn duplicates_merge() {
        let h = Hamiltonian::custom(2, vec![(p("ZZ"), 0.5), (p("XI"), 1.0), (p("ZZ"), 0.25)]).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.terms()[0].coeff, 0.75);
        assert_eq!(h.meta().generated_terms, 3);
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let h = build_sparse_bosonic(10, 2.0, 1.0, 8).unwrap();
        let s = h.to_json().unwrap();
        let back = Hamiltonian::from_json(&s).unwrap();
        assert_eq!(back.sorted_terms(), h.sorted_terms());
        assert_eq!(back.meta(), h.meta());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let names: Vec<&str> = v["terms"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t["pauli"].as_str().unwrap())
            .collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
}
