//! Seeded ensembles over Hamiltonian realizations: OTOC time series,
//! depth surveys and time rescaling.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{interferometric_circuit, TermOrder};
use crate::error::{Error, Result};
use crate::hamiltonian::{build, sparsity_probability, Hamiltonian, Model};
use crate::otoc::{
    otoc_direct, otoc_exact_series, otoc_interferometric, otoc_trotter_series, renormalize, z_on, Evolution,
    InterferometricRun, OtocMode, OtocPoint, Renormalized, DEFAULT_EPSILON,
};
use crate::pauli::PauliString;
use crate::rng::{realization_seed, stream, stream_rng};
use crate::simulate::{sample_from_expectation, NoiseModel, StateVector, EXACT_MAX_QUBITS, MAX_STATE_QUBITS};
use crate::stats::{compensated_sum, mean, sem};
use crate::transpile::{
    cancel_adjacent_inverses, route, route_with_layout_search, two_qubit_depth, CouplingGraph, DepthRow, Topology,
    DEFAULT_SWAP_WEIGHT,
};

/// Version string echoed into every output.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Sample times in units of `1/J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeGrid {
    /// `Jt = k·dt` for `k = 1..=steps_max`, evolved with `k` Trotter steps.
    Uniform { dt: f64, steps_max: usize },
    /// Arbitrary increasing `Jt` values; each uses `max(1, round(Jt/dt))` steps.
    Explicit { times: Vec<f64>, dt: f64 },
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::Uniform { dt: 0.1, steps_max: 12 }
    }
}

impl TimeGrid {
    /// `(Jt, trotter steps)` pairs in grid order.
    pub fn points(&self) -> Result<Vec<(f64, usize)>> {
        match self {
            TimeGrid::Uniform { dt, steps_max } => {
                check_dt(*dt)?;
                if *steps_max == 0 {
                    return Err(Error::param("time grid needs at least one point"));
                }
                Ok((1..=*steps_max).map(|k| (k as f64 * dt, k)).collect())
            }
            TimeGrid::Explicit { times, dt } => {
                check_dt(*dt)?;
                if times.is_empty() {
                    return Err(Error::param("time grid needs at least one point"));
                }
                if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    return Err(Error::param("grid times must be finite and >= 0"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::param("grid times must be strictly increasing"));
                }
                Ok(times
                    .iter()
                    .map(|&t| (t, ((t / dt).round() as usize).max(1)))
                    .collect())
            }
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::param(format!("dt must be finite and > 0, got {dt}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionKind {
    #[default]
    Trotter,
    Exact,
}

/// Which estimator produces each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Exact expectations.
    #[default]
    Ideal,
    /// Exact expectations resampled with `shots` binomial shots.
    Shots,
    /// Interferometric circuit under the noise model.
    Noisy,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Ideal => "ideal",
            RunMode::Shots => "shots",
            RunMode::Noisy => "noisy",
        }
    }
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(RunMode::Ideal),
            "shots" => Ok(RunMode::Shots),
            "noisy" => Ok(RunMode::Noisy),
            _ => Err(Error::Parse(format!("unknown mode `{s}`"))),
        }
    }
}

/// Sweep axes for depth tables; empty lists fall back to the base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthSettings {
    pub steps: Vec<usize>,
    pub models: Vec<Model>,
    #[serde(rename = "N")]
    pub n_values: Vec<usize>,
    pub kappas: Vec<f64>,
    /// Random initial layouts tried besides the identity.
    pub layout_trials: usize,
    pub cancel_inverse_pairs: bool,
}

impl Default for DepthSettings {
    fn default() -> Self {
        Self {
            steps: vec![1],
            models: Vec::new(),
            n_values: Vec::new(),
            kappas: Vec::new(),
            layout_trials: 0,
            cancel_inverse_pairs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(rename = "N")]
    pub n: usize,
    /// Sparsity parameter; only for `bosonic-sparse`.
    pub kappa: Option<f64>,
    #[serde(rename = "J")]
    pub coupling: f64,
    pub time_grid: TimeGrid,
    pub evolution: EvolutionKind,
    pub mode: RunMode,
    pub ensemble_size: usize,
    pub master_seed: u64,
    /// Shots per estimate (per trajectory in noisy mode); 0 = exact.
    pub shots: usize,
    pub noise: NoiseModel,
    pub trajectories: usize,
    pub topology: Topology,
    pub swap_weight: usize,
    pub rescale_time: bool,
    pub term_order: TermOrder,
    /// System qubit carrying `V = Z`.
    pub v_qubit: usize,
    /// System qubit carrying `W = Z`.
    pub w_qubit: usize,
    /// Also run `W = 1` and report the renormalized ratio.
    pub companion: bool,
    pub epsilon: f64,
    pub depth: DepthSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::BosonicSparse,
            n: 8,
            kappa: Some(1.0),
            coupling: 1.0,
            time_grid: TimeGrid::default(),
            evolution: EvolutionKind::Trotter,
            mode: RunMode::Ideal,
            ensemble_size: 25,
            master_seed: 0,
            shots: 0,
            noise: NoiseModel::default(),
            trajectories: 1000,
            topology: Topology::Full,
            swap_weight: DEFAULT_SWAP_WEIGHT,
            rescale_time: false,
            term_order: TermOrder::Lexicographic,
            v_qubit: 0,
            w_qubit: 1,
            companion: false,
            epsilon: DEFAULT_EPSILON,
            depth: DepthSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn n_qubits(&self) -> usize {
        self.n.div_ceil(2)
    }

    /// Sparsification probability, or 1 for the full models.
    pub fn probability(&self) -> Result<f64> {
        match self.model {
            Model::BosonicSparse => sparsity_probability(self.n, self.kappa_required()?),
            _ => Ok(1.0),
        }
    }

    fn kappa_required(&self) -> Result<f64> {
        self.kappa
            .ok_or_else(|| Error::param("bosonic-sparse requires kappa"))
    }

    /// Checks every field that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        if self.n % 2 != 0 || !(4..=crate::hamiltonian::MAX_N).contains(&self.n) {
            return Err(Error::param(format!(
                "N must be even and in 4..={}, got {}",
                crate::hamiltonian::MAX_N,
                self.n
            )));
        }
        match (self.model, self.kappa) {
            (Model::BosonicSparse, _) => {
                self.probability()?;
            }
            (_, Some(_)) => {
                return Err(Error::param(format!("kappa does not apply to {}", self.model)));
            }
            _ => {}
        }
        if !self.coupling.is_finite() {
            return Err(Error::param("J must be finite"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::param("ensemble_size must be at least 1"));
        }
        self.time_grid.points()?;
        let nq = self.n_qubits();
        if self.v_qubit >= nq || self.w_qubit >= nq || self.v_qubit == self.w_qubit {
            return Err(Error::param(format!(
                "v_qubit and w_qubit must be distinct and below {nq}"
            )));
        }
        if self.swap_weight == 0 {
            return Err(Error::param("swap_weight must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon must be finite and >= 0"));
        }
        self.noise.validate()?;
        match self.mode {
            RunMode::Shots if self.shots == 0 => {
                return Err(Error::param("shots mode needs shots > 0"));
            }
            RunMode::Noisy if self.trajectories == 0 => {
                return Err(Error::param("noisy mode needs trajectories > 0"));
            }
            _ => {}
        }
        if self.mode != RunMode::Noisy && self.evolution == EvolutionKind::Exact && nq > EXACT_MAX_QUBITS {
            return Err(Error::ResourceCeiling(format!(
                "exact evolution is limited to {EXACT_MAX_QUBITS} qubits, N = {} needs {nq}",
                self.n
            )));
        }
        if self.mode == RunMode::Noisy && self.evolution == EvolutionKind::Exact {
            return Err(Error::param("noisy mode runs Trotter circuits; set evolution = \"trotter\""));
        }
        if nq + 1 > MAX_STATE_QUBITS {
            return Err(Error::ResourceCeiling(format!(
                "{} qubits exceed the statevector limit of {MAX_STATE_QUBITS}",
                nq + 1
            )));
        }
        for &s in &self.depth.steps {
            if s == 0 {
                return Err(Error::param("depth steps must be positive"));
            }
        }
        Ok(())
    }

    /// Seeds of every realization, in index order.
    pub fn realization_seeds(&self) -> Vec<u64> {
        (0..self.ensemble_size)
            .map(|i| realization_seed(self.master_seed, i))
            .collect()
    }

    fn build_hamiltonian(&self, seed: u64) -> Result<Hamiltonian> {
        build(self.model, self.n, self.kappa, self.coupling, seed)
    }

    fn operators(&self) -> Result<(PauliString, PauliString)> {
        let nq = self.n_qubits();
        Ok((z_on(nq, self.v_qubit)?, z_on(nq, self.w_qubit)?))
    }
}

/// All grid points of one Hamiltonian realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSeries {
    pub index: usize,
    pub seed: u64,
    pub n_terms: usize,
    pub points: Vec<OtocPoint>,
}

/// Ensemble statistics at one grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPoint {
    pub t: f64,
    pub re_c_mean: f64,
    /// Standard error over realizations.
    pub sem: f64,
    pub n_realizations: usize,
    /// Shot and trajectory error of the mean, `sqrt(sum stderr_i^2) / n`.
    pub shot_stderr: f64,
    pub c_v1_mean: Option<f64>,
    /// `re_c_mean / c_v1_mean`, absent when unstable or not configured.
    pub renormalized: Option<f64>,
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub realization_seeds: Vec<u64>,
    pub mode: OtocMode,
    /// Factor applied to every time; 1 unless rescaled.
    pub time_scale: f64,
    /// Probability used for the last rescale.
    pub rescale_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtocSeries {
    pub meta: SeriesMeta,
    pub realizations: Vec<RealizationSeries>,
    pub mean: Vec<MeanPoint>,
}

fn point(t: f64, est: (f64, f64), mode: OtocMode, c_v1: Option<f64>, eps: f64) -> OtocPoint {
    OtocPoint {
        t,
        re_c: est.0,
        stderr: est.1,
        mode,
        renormalized: c_v1.and_then(|c| renormalize(est.0, c, eps).value()),
        c_v1,
    }
}

/// Exact or Trotterized `C(t)` over the grid for one Hamiltonian.
fn ideal_values(
    cfg: &ExperimentConfig,
    h: &Hamiltonian,
    v: &PauliString,
    w: &PauliString,
    grid: &[(f64, usize)],
) -> Result<Vec<Complex64>> {
    let psi = StateVector::zero(h.n_qubits())?;
    let scale = 1.0 / cfg.coupling.abs().max(f64::MIN_POSITIVE);
    match (cfg.evolution, &cfg.time_grid) {
        (EvolutionKind::Exact, _) => {
            let times: Vec<f64> = grid.iter().map(|(t, _)| t * scale).collect();
            otoc_exact_series(h, v, w, &psi, &times)
        }
        (EvolutionKind::Trotter, TimeGrid::Uniform { dt, .. }) => {
            let steps: Vec<usize> = grid.iter().map(|&(_, k)| k).collect();
            otoc_trotter_series(h, v, w, &psi, dt * scale, &steps, cfg.term_order)
        }
        (EvolutionKind::Trotter, TimeGrid::Explicit { .. }) => grid
            .iter()
            .map(|&(t, k)| otoc_direct(h, t * scale, v, w, &psi, Evolution::Trotter { steps: k }, cfg.term_order))
            .collect(),
    }
}

/// Runs every grid point of realization `index`.
pub fn run_realization(cfg: &ExperimentConfig, index: usize) -> Result<RealizationSeries> {
    let seed = realization_seed(cfg.master_seed, index);
    let h = cfg.build_hamiltonian(seed)?;
    let (v, w) = cfg.operators()?;
    let identity = PauliString::identity(cfg.n_qubits())?;
    let grid = cfg.time_grid.points()?;
    let eps = cfg.epsilon;

    let points = match cfg.mode {
        RunMode::Ideal | RunMode::Shots => {
            let vals = ideal_values(cfg, &h, &v, &w, &grid)?;
            let c_v1 = if cfg.companion {
                Some(ideal_values(cfg, &h, &v, &identity, &grid)?)
            } else {
                None
            };
            let mut rng = stream_rng(seed, stream::SHOTS);
            let mut out = Vec::with_capacity(grid.len());
            for (i, &(t, _)) in grid.iter().enumerate() {
                let (est, comp, mode) = if cfg.mode == RunMode::Shots {
                    let e = sample_from_expectation(vals[i].re, cfg.shots, 0.0, &mut rng);
                    let c = c_v1
                        .as_ref()
                        .map(|c| sample_from_expectation(c[i].re, cfg.shots, 0.0, &mut rng).value);
                    ((e.value, e.stderr), c, OtocMode::InterferometricIdeal)
                } else {
                    let mode = match cfg.evolution {
                        EvolutionKind::Exact => OtocMode::DirectExact,
                        EvolutionKind::Trotter => OtocMode::DirectTrotter,
                    };
                    ((vals[i].re, 0.0), c_v1.as_ref().map(|c| c[i].re), mode)
                };
                out.push(point(t, est, mode, comp, eps));
            }
            out
        }
        RunMode::Noisy => {
            let topology = match cfg.topology {
                Topology::Full => None,
                kind => Some(CouplingGraph::build(kind, cfg.n_qubits() + 1)?),
            };
            let run = InterferometricRun {
                noise: Some(NoiseModel {
                    swap_weight: cfg.swap_weight,
                    ..cfg.noise
                }),
                shots: cfg.shots,
                trajectories: cfg.trajectories,
                order: cfg.term_order,
                topology,
            };
            let scale = 1.0 / cfg.coupling.abs().max(f64::MIN_POSITIVE);
            let mut rng = stream_rng(seed, stream::NOISE);
            let mut out = Vec::with_capacity(grid.len());
            for &(t, k) in &grid {
                let p = otoc_interferometric(&h, t * scale, k, &v, &w, &run, &mut rng)?;
                let comp = if cfg.companion {
                    Some(otoc_interferometric(&h, t * scale, k, &v, &identity, &run, &mut rng)?.re_c)
                } else {
                    None
                };
                out.push(point(t, (p.re_c, p.stderr), p.mode, comp, eps));
            }
            out
        }
    };
    Ok(RealizationSeries {
        index,
        seed,
        n_terms: h.len(),
        points,
    })
}

/// Mean, SEM and renormalization per grid point. Realizations are sorted
/// by index first so the result does not depend on completion order.
pub fn aggregate(realizations: &[RealizationSeries], epsilon: f64) -> Result<Vec<MeanPoint>> {
    let mut sorted: Vec<&RealizationSeries> = realizations.iter().collect();
    sorted.sort_by_key(|r| r.index);
    let Some(first) = sorted.first() else {
        return Ok(Vec::new());
    };
    let len = first.points.len();
    if sorted.iter().any(|r| r.points.len() != len) {
        return Err(Error::param("realizations disagree on the time grid"));
    }
    let n = sorted.len();
    (0..len)
        .map(|i| {
            let t = first.points[i].t;
            if sorted.iter().any(|r| r.points[i].t != t) {
                return Err(Error::param("realizations disagree on the time grid"));
            }
            let vals: Vec<f64> = sorted.iter().map(|r| r.points[i].re_c).collect();
            let se2 = compensated_sum(sorted.iter().map(|r| r.points[i].stderr.powi(2)));
            let comps: Option<Vec<f64>> = sorted.iter().map(|r| r.points[i].c_v1).collect();
            let re_c_mean = mean(&vals);
            let c_v1_mean = comps.as_deref().map(mean);
            let renorm = c_v1_mean.map(|c| renormalize(re_c_mean, c, epsilon));
            Ok(MeanPoint {
                t,
                re_c_mean,
                sem: sem(&vals),
                n_realizations: n,
                shot_stderr: se2.sqrt() / n as f64,
                c_v1_mean,
                renormalized: renorm.and_then(Renormalized::value),
                unstable: renorm.is_some_and(Renormalized::is_unstable),
            })
        })
        .collect()
}

/// Runs the whole ensemble (realizations in parallel) and aggregates.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<OtocSeries> {
    cfg.validate()?;
    let realizations = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|i| run_realization(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mean = aggregate(&realizations, cfg.epsilon)?;
    let mode = realizations[0].points[0].mode;
    let series = OtocSeries {
        meta: SeriesMeta {
            config: cfg.clone(),
            code_version: CODE_VERSION.to_string(),
            realization_seeds: cfg.realization_seeds(),
            mode,
            time_scale: 1.0,
            rescale_p: None,
        },
        realizations,
        mean,
    };
    if cfg.rescale_time {
        let p = cfg.probability()?;
        if p == 0.0 {
            return Err(Error::param("cannot rescale time with p = 0"));
        }
        return rescale_time_axis(series, p);
    }
    Ok(series)
}

/// Replaces every `t` with `t / sqrt(p)`; values are untouched.
pub fn rescale_time_axis(mut series: OtocSeries, p: f64) -> Result<OtocSeries> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(format!("rescale probability must lie in (0, 1], got {p}")));
    }
    let factor = 1.0 / p.sqrt();
    for r in &mut series.realizations {
        for pt in &mut r.points {
            pt.t *= factor;
        }
    }
    for m in &mut series.mean {
        m.t *= factor;
    }
    series.meta.time_scale *= factor;
    series.meta.rescale_p = Some(p);
    Ok(series)
}

/// Per-time mean of `re_c` over the realizations with the given positions.
pub fn subset_mean(series: &OtocSeries, members: &[usize]) -> Vec<f64> {
    let len = series.mean.len();
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = members
                .iter()
                .map(|&m| series.realizations[m].points[i].re_c)
                .collect();
            mean(&vals)
        })
        .collect()
}

/// Largest `max_t |mean_block(t) - mean_all(t)|` over consecutive disjoint
/// blocks of `block` realizations.
pub fn block_deviation(series: &OtocSeries, block: usize) -> Result<f64> {
    let n = series.realizations.len();
    if block == 0 || block > n {
        return Err(Error::param(format!("block size {block} invalid for {n} realizations")));
    }
    let all: Vec<usize> = (0..n).collect();
    let full = subset_mean(series, &all);
    let mut worst = 0.0f64;
    for start in (0..=n - block).step_by(block) {
        let members: Vec<usize> = (start..start + block).collect();
        let part = subset_mean(series, &members);
        for (a, b) in part.iter().zip(&full) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Ensemble CSV: `t, re_c_mean, sem, n_realizations, mode`, plus
/// `shot_stderr` outside ideal mode and `c_v1_mean, renormalized, unstable`
/// when the companion run is configured.
pub fn write_series_csv<W: Write>(series: &OtocSeries, out: W) -> Result<()> {
    let cfg = &series.meta.config;
    let with_shots = cfg.mode != RunMode::Ideal;
    let with_renorm = cfg.companion;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t", "re_c_mean", "sem", "n_realizations", "mode"];
    if with_shots {
        header.push("shot_stderr");
    }
    if with_renorm {
        header.extend(["c_v1_mean", "renormalized", "unstable"]);
    }
    w.write_record(&header)?;
    for m in &series.mean {
        let mut row = vec![
            m.t.to_string(),
            m.re_c_mean.to_string(),
            m.sem.to_string(),
            m.n_realizations.to_string(),
            series.meta.mode.as_str().to_string(),
        ];
        if with_shots {
            row.push(m.shot_stderr.to_string());
        }
        if with_renorm {
            row.push(fmt_opt(m.c_v1_mean));
            row.push(fmt_opt(m.renormalized));
            row.push(m.unstable.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (realization, time): `index, seed, t, re_c, stderr, c_v1`.
pub fn write_realizations_csv<W: Write>(series: &OtocSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "seed", "t", "re_c", "stderr", "c_v1"])?;
    for r in &series.realizations {
        for p in &r.points {
            w.write_record([
                r.index.to_string(),
                r.seed.to_string(),
                p.t.to_string(),
                p.re_c.to_string(),
                p.stderr.to_string(),
                fmt_opt(p.c_v1),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Ensemble average of the depth rows sharing (model, N, kappa, step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthAggregate {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub kappa: Option<f64>,
    pub step: usize,
    pub depth_mean: f64,
    pub depth_sem: f64,
    pub count_mean: f64,
    pub swaps_mean: f64,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DepthTable {
    pub rows: Vec<DepthRow>,
    pub aggregates: Vec<DepthAggregate>,
}

/// Routed two-qubit depth of the interferometric circuit for every
/// realization and step count of one configuration.
///
/// The circuit includes the ancilla's controlled-`V` gates, so an empty
/// Hamiltonian still reports their depth.
pub fn depth_survey(cfg: &ExperimentConfig, steps: &[usize]) -> Result<DepthTable> {
    cfg.validate()?;
    if steps.is_empty() || steps.contains(&0) {
        return Err(Error::param("depth survey needs positive step counts"));
    }
    let (v, w) = cfg.operators()?;
    let graph = CouplingGraph::build(cfg.topology, cfg.n_qubits() + 1)?;
    let dt = match &cfg.time_grid {
        TimeGrid::Uniform { dt, .. } | TimeGrid::Explicit { dt, .. } => *dt,
    };
    let per_realization = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|i| -> Result<Vec<DepthRow>> {
            let seed = realization_seed(cfg.master_seed, i);
            let h = cfg.build_hamiltonian(seed)?;
            steps
                .iter()
                .map(|&k| {
                    let mut c = interferometric_circuit(&h, k as f64 * dt, k, &v, &w, cfg.term_order)?;
                    if cfg.depth.cancel_inverse_pairs {
                        c = cancel_adjacent_inverses(&c);
                    }
                    let routed = if cfg.depth.layout_trials > 0 {
                        route_with_layout_search(&c, &graph, cfg.depth.layout_trials, seed, cfg.swap_weight)?
                    } else {
                        route(&c, &graph, None)?
                    };
                    let rep = two_qubit_depth(&routed.circuit, cfg.swap_weight)?;
                    Ok(DepthRow {
                        model: cfg.model.to_string(),
                        n: cfg.n,
                        kappa: cfg.kappa,
                        step: k,
                        depth: rep.two_qubit_depth,
                        count: rep.two_qubit_count,
                        swaps: rep.swap_count,
                        seed,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cfg.ensemble_size * steps.len());
    for k in 0..steps.len() {
        rows.extend(per_realization.iter().map(|r| r[k].clone()));
    }
    let aggregates = steps
        .iter()
        .enumerate()
        .map(|(k, &step)| {
            let pick = |f: fn(&DepthRow) -> usize| -> Vec<f64> {
                per_realization.iter().map(|r| f(&r[k]) as f64).collect()
            };
            let depths = pick(|r| r.depth);
            DepthAggregate {
                model: cfg.model.to_string(),
                n: cfg.n,
                kappa: cfg.kappa,
                step,
                depth_mean: mean(&depths),
                depth_sem: sem(&depths),
                count_mean: mean(&pick(|r| r.count)),
                swaps_mean: mean(&pick(|r| r.swaps)),
                n_realizations: cfg.ensemble_size,
            }
        })
        .collect();
    Ok(DepthTable { rows, aggregates })
}

/// Expands the sweep axes of `cfg.depth` into individual configurations,
/// in (model, N, kappa) order. Full models ignore the kappa axis.
pub fn sweep_configs(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let models = if cfg.depth.models.is_empty() {
        vec![cfg.model]
    } else {
        cfg.depth.models.clone()
    };
    let ns = if cfg.depth.n_values.is_empty() {
        vec![cfg.n]
    } else {
        cfg.depth.n_values.clone()
    };
    let kappas: Vec<Option<f64>> = if cfg.depth.kappas.is_empty() {
        vec![cfg.kappa]
    } else {
        cfg.depth.kappas.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for &model in &models {
        for &n in &ns {
            let ks: Vec<Option<f64>> = if model == Model::BosonicSparse {
                kappas.clone()
            } else {
                vec![None]
            };
            for kappa in ks {
                out.push(ExperimentConfig {
                    model,
                    n,
                    kappa,
                    ..cfg.clone()
                });
            }
        }
    }
    out
}

/// [`depth_survey`] over every configuration of the sweep.
pub fn depth_sweep(cfg: &ExperimentConfig) -> Result<DepthTable> {
    let mut table = DepthTable::default();
    for c in sweep_configs(cfg) {
        let t = depth_survey(&c, &cfg.depth.steps)?;
        table.rows.extend(t.rows);
        table.aggregates.extend(t.aggregates);
    }
    Ok(table)
}

/// Per-realization rows: `model, N, kappa, step, depth, count, swaps, seed`.
pub fn write_depth_rows_csv<W: Write>(table: &DepthTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "N", "kappa", "step", "depth", "count", "swaps", "seed"])?;
    for r in &table.rows {
        w.write_record([
            r.model.clone(),
            r.n.to_string(),
            fmt_opt(r.kappa),
            r.step.to_string(),
            r.depth.to_string(),
            r.count.to_string(),
            r.swaps.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Averaged rows, one per (model, N, kappa, step).
pub fn write_depth_summary_csv<W: Write>(table: &DepthTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "N",
        "kappa",
        "step",
        "depth_mean",
        "depth_sem",
        "count_mean",
        "swaps_mean",
        "n_realizations",
    ])?;
    for a in &table.aggregates {
        w.write_record([
            a.model.clone(),
            a.n.to_string(),
            fmt_opt(a.kappa),
            a.step.to_string(),
            a.depth_mean.to_string(),
            a.depth_sem.to_string(),
            a.count_mean.to_string(),
            a.swaps_mean.to_string(),
            a.n_realizations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
