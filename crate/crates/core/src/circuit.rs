//! Gate-level circuits: Pauli-exponential synthesis, first-order Trotter
//! steps and the ancilla-controlled OTOC interferometer.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Term};
use crate::pauli::{Pauli, PauliString};
use crate::rng::{stream, stream_rng};

/// Gate set. Angles are in radians; `Rz(θ) = exp(-iθZ/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    H(usize),
    X(usize),
    S(usize),
    Sdg(usize),
    Rz(usize, f64),
    /// `(control, target)`
    Cx(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    /// `(qubit, classical register)`
    Measure(usize, usize),
}

impl Gate {
    /// Operand qubits; the second entry is `None` for one-qubit gates.
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::S(q) | Gate::Sdg(q) | Gate::Rz(q, _) => (q, None),
            Gate::Measure(q, _) => (q, None),
            Gate::Cx(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => (a, Some(b)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().1.is_some()
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::Measure(..))
    }

    /// `None` for measurements.
    pub fn inverse(&self) -> Option<Gate> {
        Some(match *self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            Gate::Measure(..) => return None,
            g => g,
        })
    }

    /// Same gate with every operand passed through `f`.
    pub fn map_qubits(&self, mut f: impl FnMut(usize) -> usize) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(f(q)),
            Gate::X(q) => Gate::X(f(q)),
            Gate::S(q) => Gate::S(f(q)),
            Gate::Sdg(q) => Gate::Sdg(f(q)),
            Gate::Rz(q, t) => Gate::Rz(f(q), t),
            Gate::Cx(a, b) => Gate::Cx(f(a), f(b)),
            Gate::Cz(a, b) => Gate::Cz(f(a), f(b)),
            Gate::Swap(a, b) => Gate::Swap(f(a), f(b)),
            Gate::Measure(q, r) => Gate::Measure(f(q), r),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "Sdg",
            Gate::Rz(..) => "Rz",
            Gate::Cx(..) => "CX",
            Gate::Cz(..) => "CZ",
            Gate::Swap(..) => "SWAP",
            Gate::Measure(..) => "M",
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let (a, b) = self.qubits();
        if a >= n_qubits || b.is_some_and(|b| b >= n_qubits) {
            return Err(Error::InvalidCircuit(format!(
                "{self:?} addresses a qubit outside width {n_qubits}"
            )));
        }
        if b == Some(a) {
            return Err(Error::InvalidCircuit(format!("{self:?} repeats an operand")));
        }
        if let Gate::Rz(_, t) = self {
            if !t.is_finite() {
                return Err(Error::InvalidCircuit("non-finite rotation angle".into()));
            }
        }
        Ok(())
    }
}

/// Named half-open range `[start, end)` of gate indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpan {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    labels: Vec<LabelSpan>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Validates every gate against the width.
    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn labels(&self) -> &[LabelSpan] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub(crate) fn set_labels(&mut self, labels: Vec<LabelSpan>) {
        self.labels = labels;
    }

    /// Drops trailing measurements; label spans are clipped to the new length.
    pub fn truncate_measurements(&mut self) {
        while matches!(self.gates.last(), Some(g) if g.is_measurement()) {
            self.gates.pop();
        }
        let len = self.gates.len();
        for s in &mut self.labels {
            s.start = s.start.min(len);
            s.end = s.end.min(len);
        }
    }

    /// Appends `other`'s gates as one labelled span (`other`'s own labels are dropped).
    pub fn append_labelled(&mut self, name: impl Into<String>, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let start = self.gates.len();
        self.gates.extend_from_slice(&other.gates);
        self.labels.push(LabelSpan {
            name: name.into(),
            start,
            end: self.gates.len(),
        });
        Ok(())
    }

    /// Pushes `gates` as one labelled span.
    pub fn extend_labelled(&mut self, name: impl Into<String>, gates: &[Gate]) -> Result<()> {
        let start = self.gates.len();
        for &g in gates {
            self.push(g)?;
        }
        self.labels.push(LabelSpan {
            name: name.into(),
            start,
            end: self.gates.len(),
        });
        Ok(())
    }

    /// Reversed circuit of inverse gates; label spans are mirrored and
    /// suffixed with `_inv`.
    pub fn inverse(&self) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                g.inverse()
                    .ok_or_else(|| Error::InvalidCircuit("cannot invert a measurement".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let len = self.gates.len();
        let labels = self
            .labels
            .iter()
            .rev()
            .map(|s| LabelSpan {
                name: format!("{}_inv", s.name),
                start: len - s.end,
                end: len - s.start,
            })
            .collect();
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
            labels,
        })
    }

    /// Copy on a wider register with every qubit shifted up by `offset`.
    pub fn embed(&self, offset: usize, n_qubits: usize) -> Result<Circuit> {
        if offset + self.n_qubits > n_qubits {
            return Err(Error::Dimension {
                expected: n_qubits,
                found: offset + self.n_qubits,
            });
        }
        Ok(Circuit {
            n_qubits,
            gates: self.gates.iter().map(|g| g.map_qubits(|q| q + offset)).collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// True when label spans are contiguous, ordered and cover every gate.
    pub fn labels_partition(&self) -> bool {
        let mut cursor = 0;
        for s in &self.labels {
            if s.start != cursor || s.end < s.start {
                return false;
            }
            cursor = s.end;
        }
        cursor == self.gates.len()
    }

    /// Measurements, if any, form a suffix of the gate list.
    pub fn measurements_at_tail(&self) -> bool {
        let first = self.gates.iter().position(|g| g.is_measurement());
        match first {
            None => true,
            Some(i) => self.gates[i..].iter().all(|g| g.is_measurement()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Column-per-gate text drawing for small debugging circuits.
    pub fn draw(&self) -> Result<String> {
        if self.n_qubits > 6 {
            return Err(Error::ResourceCeiling(
                "text drawing is limited to 6 qubits".into(),
            ));
        }
        let mut rows: Vec<String> = (0..self.n_qubits).map(|q| format!("q{q}: ")).collect();
        for g in &self.gates {
            let cells: Vec<String> = (0..self.n_qubits)
                .map(|q| {
                    let (a, b) = g.qubits();
                    match (*g, q == a, Some(q) == b) {
                        (Gate::Cx(..), true, _) | (Gate::Cz(..), true, _) => "●".to_string(),
                        (Gate::Cx(..), _, true) => "⊕".to_string(),
                        (Gate::Cz(..), _, true) => "●".to_string(),
                        (Gate::Swap(..), true, _) | (Gate::Swap(..), _, true) => "x".to_string(),
                        (Gate::Rz(_, t), true, _) => format!("Rz({t:.3})"),
                        (_, true, _) => g.name().to_string(),
                        _ => String::new(),
                    }
                })
                .collect();
            let w = cells.iter().map(|c| c.chars().count()).max().unwrap_or(1).max(1);
            for (row, cell) in rows.iter_mut().zip(cells) {
                let pad = w - cell.chars().count();
                let fill = if cell.is_empty() { "─".repeat(w) } else { cell + &"─".repeat(pad) };
                let _ = write!(row, "─{fill}─");
            }
        }
        Ok(rows.join("\n"))
    }
}

/// Ordering of Hamiltonian terms inside one Trotter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TermOrder {
    #[default]
    Lexicographic,
    GenerationOrder,
    SeededShuffle { seed: u64 },
}

pub fn ordered_terms(h: &Hamiltonian, order: TermOrder) -> Vec<Term> {
    match order {
        TermOrder::Lexicographic => h.sorted_terms(),
        TermOrder::GenerationOrder => h.terms().to_vec(),
        TermOrder::SeededShuffle { seed } => {
            let mut v = h.sorted_terms();
            v.shuffle(&mut stream_rng(seed, stream::SHUFFLE));
            v
        }
    }
}

/// Rotations `exp(-i θ_k P_k)` of one first-order Trotter step, in application order.
pub fn trotter_rotations(h: &Hamiltonian, dt: f64, order: TermOrder) -> Result<Vec<(PauliString, f64)>> {
    if !dt.is_finite() {
        return Err(Error::param("Trotter step dt must be finite"));
    }
    Ok(ordered_terms(h, order)
        .into_iter()
        .map(|t| (t.pauli, t.coeff * dt))
        .collect())
}

/// `exp(-iθP)` up to global phase: basis change, CX ladder onto the highest
/// involved qubit, `Rz(2θ)`, then the mirror image.
pub fn pauli_exponential(term: &PauliString, theta: f64) -> Circuit {
    let mut c = Circuit::new(term.n_qubits());
    let support: Vec<usize> = term.support().collect();
    let Some(&top) = support.last() else {
        return c;
    };
    for &q in &support {
        match term.get(q) {
            Pauli::X => c.push_unchecked(Gate::H(q)),
            Pauli::Y => {
                c.push_unchecked(Gate::Sdg(q));
                c.push_unchecked(Gate::H(q));
            }
            _ => {}
        }
    }
    for w in support.windows(2) {
        c.push_unchecked(Gate::Cx(w[0], w[1]));
    }
    c.push_unchecked(Gate::Rz(top, 2.0 * theta));
    for w in support.windows(2).rev() {
        c.push_unchecked(Gate::Cx(w[0], w[1]));
    }
    for &q in support.iter().rev() {
        match term.get(q) {
            Pauli::X => c.push_unchecked(Gate::H(q)),
            Pauli::Y => {
                c.push_unchecked(Gate::H(q));
                c.push_unchecked(Gate::S(q));
            }
            _ => {}
        }
    }
    c
}

/// One first-order Trotter step `Π_k exp(-i c_k dt P_k)`.
pub fn trotter_step(h: &Hamiltonian, dt: f64, order: TermOrder) -> Result<Circuit> {
    let mut c = Circuit::new(h.n_qubits());
    for (p, theta) in trotter_rotations(h, dt, order)? {
        c.gates.extend(pauli_exponential(&p, theta).gates);
    }
    Ok(c)
}

/// Controlled version of `Z` on `target`.
pub fn controlled_pauli_z(control: usize, target: usize) -> Vec<Gate> {
    vec![Gate::Cz(control, target)]
}

/// Qubit of the interferometer's control ancilla; system qubit `q` sits at `q + 1`.
pub const CONTROL_QUBIT: usize = 0;

fn single_z_site(p: &PauliString, what: &str) -> Result<usize> {
    let sites: Vec<usize> = p.support().collect();
    match sites.as_slice() {
        [q] if p.get(*q) == Pauli::Z => Ok(*q),
        _ => Err(Error::UnsupportedOperator(format!(
            "{what} must be a single-site Pauli Z, got {p}"
        ))),
    }
}

/// The interferometric OTOC circuit on `h.n_qubits() + 1` qubits:
///
/// `H_c · CV · U(t) · W · U(t)† · X_c · CV · H_c · M_c`
///
/// with `U(t)` as `steps` first-order Trotter steps of size `t / steps`.
/// `V` must be a single-site `Z`; `W` a single-site `Z` or the identity.
/// The measured `<Z_c>` equals `Re C(t)`.
pub fn interferometric_circuit(
    h: &Hamiltonian,
    t: f64,
    steps: usize,
    v: &PauliString,
    w: &PauliString,
    order: TermOrder,
) -> Result<Circuit> {
    let n = h.n_qubits();
    if v.n_qubits() != n || w.n_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: if v.n_qubits() != n { v.n_qubits() } else { w.n_qubits() },
        });
    }
    if steps == 0 {
        return Err(Error::param("interferometric circuit needs at least one Trotter step"));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::param(format!("time must be finite and >= 0, got {t}")));
    }
    let v_site = single_z_site(v, "V")? + 1;
    let w_site = if w.is_identity() {
        None
    } else {
        Some(single_z_site(w, "W")? + 1)
    };
    let width = n + 1;
    let step = trotter_step(h, t / steps as f64, order)?.embed(1, width)?;
    let step_inv = step.inverse()?;

    let mut c = Circuit::new(width);
    let mut prep = vec![Gate::H(CONTROL_QUBIT)];
    prep.extend(controlled_pauli_z(CONTROL_QUBIT, v_site));
    c.extend_labelled("prep", &prep)?;
    for k in 1..=steps {
        c.append_labelled(format!("trotter_step[{k}]"), &step)?;
    }
    // Rz(π) = -iZ; the phase enters both interferometer branches and cancels.
    let w_span: Vec<Gate> = match w_site {
        Some(q) => vec![Gate::Rz(q, std::f64::consts::PI)],
        None => Vec::new(),
    };
    c.extend_labelled("W", &w_span)?;
    for k in (1..=steps).rev() {
        c.append_labelled(format!("trotter_step_inv[{k}]"), &step_inv)?;
    }
    let mut readout = vec![Gate::X(CONTROL_QUBIT)];
    readout.extend(controlled_pauli_z(CONTROL_QUBIT, v_site));
    readout.push(Gate::H(CONTROL_QUBIT));
    readout.push(Gate::Measure(CONTROL_QUBIT, 0));
    c.extend_labelled("readout", &readout)?;
    Ok(c)
}
