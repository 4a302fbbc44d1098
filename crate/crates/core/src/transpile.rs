//! Connectivity-constrained routing and two-qubit depth accounting.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, LabelSpan};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

/// Default number of layers charged to one SWAP (three CX).
pub const DEFAULT_SWAP_WEIGHT: usize = 3;

/// Row length of the generated heavy-hex lattice before patch selection.
const HEAVY_HEX_ROW: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Full,
    Linear,
    Ring,
    HeavyHexPatch,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Full => "full",
            Topology::Linear => "linear",
            Topology::Ring => "ring",
            Topology::HeavyHexPatch => "heavy-hex-patch",
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Topology::Full),
            "linear" => Ok(Topology::Linear),
            "ring" => Ok(Topology::Ring),
            "heavy-hex-patch" => Ok(Topology::HeavyHexPatch),
            _ => Err(Error::Parse(format!("unknown topology `{s}`"))),
        }
    }
}

/// Undirected coupling map with all-pairs BFS distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    kind: Topology,
    n_physical: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    dist: Vec<Vec<usize>>,
}

impl CouplingGraph {
    /// Builds a graph from an edge list; rejects bad indices and disconnected graphs.
    pub fn from_edges(kind: Topology, n_physical: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_physical == 0 {
            return Err(Error::param("coupling graph needs at least one qubit"));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_physical || b >= n_physical || a == b {
                return Err(Error::param(format!("invalid edge ({a}, {b}) for {n_physical} qubits")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut adjacency = vec![Vec::new(); n_physical];
        for &(a, b) in &norm {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        let dist = (0..n_physical).map(|s| bfs(&adjacency, s)).collect::<Vec<_>>();
        if dist[0].iter().any(|&d| d == usize::MAX) {
            return Err(Error::DisconnectedGraph);
        }
        Ok(Self {
            kind,
            n_physical,
            edges: norm,
            adjacency,
            dist,
        })
    }

    pub fn full(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self::from_edges(Topology::Full, n, &edges)
    }

    pub fn linear(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|a| (a - 1, a)).collect();
        Self::from_edges(Topology::Linear, n, &edges)
    }

    pub fn ring(n: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n).map(|a| (a - 1, a)).collect();
        if n > 2 {
            edges.push((0, n - 1));
        }
        Self::from_edges(Topology::Ring, n, &edges)
    }

    /// Connected patch of exactly `n` qubits cut from a heavy-hex lattice.
    ///
    /// The lattice has rows of `HEAVY_HEX_ROW` qubits joined by bridge
    /// qubits at columns `0 mod 4` below even rows and `2 mod 4` below odd
    /// rows. The patch is the first `n` vertices of a breadth-first search
    /// from the top-left corner, visiting neighbours in ascending index
    /// order, relabelled in visit order.
    pub fn heavy_hex_patch(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("coupling graph needs at least one qubit"));
        }
        let mut rows = 1;
        loop {
            let (count, adj) = heavy_hex_lattice(rows);
            if count >= n {
                let order = bfs_order(&adj, 0, n);
                let mut relabel = vec![usize::MAX; count];
                for (new, &old) in order.iter().enumerate() {
                    relabel[old] = new;
                }
                let mut edges = Vec::new();
                for (a, nb) in adj.iter().enumerate() {
                    for &b in nb {
                        if a < b && relabel[a] != usize::MAX && relabel[b] != usize::MAX {
                            edges.push((relabel[a], relabel[b]));
                        }
                    }
                }
                return Self::from_edges(Topology::HeavyHexPatch, n, &edges);
            }
            rows += 1;
        }
    }

    pub fn build(kind: Topology, n: usize) -> Result<Self> {
        match kind {
            Topology::Full => Self::full(n),
            Topology::Linear => Self::linear(n),
            Topology::Ring => Self::ring(n),
            Topology::HeavyHexPatch => Self::heavy_hex_patch(n),
        }
    }

    pub fn kind(&self) -> Topology {
        self.kind
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbours(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.dist[a][b]
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.dist[a][b] == 1
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn bfs_order(adjacency: &[Vec<usize>], source: usize, limit: usize) -> Vec<usize> {
    let mut seen = vec![false; adjacency.len()];
    seen[source] = true;
    let mut order = vec![source];
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if order.len() == limit {
                return order;
            }
            if !seen[v] {
                seen[v] = true;
                order.push(v);
                queue.push_back(v);
            }
        }
    }
    order.truncate(limit);
    order
}

/// Heavy-hex lattice with `rows` rows; returns (vertex count, sorted adjacency).
fn heavy_hex_lattice(rows: usize) -> (usize, Vec<Vec<usize>>) {
    let l = HEAVY_HEX_ROW;
    let mut edges = Vec::new();
    let mut next = 0usize;
    let mut row_start = Vec::with_capacity(rows);
    for r in 0..rows {
        row_start.push(next);
        for c in 1..l {
            edges.push((next + c - 1, next + c));
        }
        next += l;
        if r + 1 < rows {
            let offset = if r % 2 == 0 { 0 } else { 2 };
            let bridges: Vec<usize> = (0..l).filter(|c| c % 4 == offset).collect();
            let below = next + bridges.len();
            for (i, &c) in bridges.iter().enumerate() {
                let bridge = next + i;
                edges.push((row_start[r] + c, bridge));
                edges.push((bridge, below + c));
            }
            next += bridges.len();
        }
    }
    let mut adj = vec![Vec::new(); next];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for nb in &mut adj {
        nb.sort_unstable();
    }
    (next, adj)
}

/// Output of [`route`]: a physical circuit plus the layouts bracketing it.
///
/// `initial_layout[l]` is the physical home of logical qubit `l` before the
/// circuit and `final_layout[l]` after it.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    pub circuit: Circuit,
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
    pub swap_count: usize,
}

fn check_layout(layout: &[usize], n_logical: usize, n_physical: usize) -> Result<()> {
    if layout.len() != n_logical {
        return Err(Error::Dimension {
            expected: n_logical,
            found: layout.len(),
        });
    }
    let mut used = vec![false; n_physical];
    for &p in layout {
        if p >= n_physical || used[p] {
            return Err(Error::param(format!("layout {layout:?} is not injective into {n_physical} qubits")));
        }
        used[p] = true;
    }
    Ok(())
}

/// Greedy SWAP insertion.
///
/// For each two-qubit gate whose operands are not adjacent, the operand on
/// the higher physical index walks toward the other along a shortest path,
/// stepping to its lowest-index neighbour that reduces the distance, until
/// the two are adjacent. No lookahead. SWAPs inserted for a gate fall in
/// the same label span as the gate.
pub fn route(c: &Circuit, g: &CouplingGraph, initial_layout: Option<&[usize]>) -> Result<RoutedCircuit> {
    let n = c.n_qubits();
    if n > g.n_physical() {
        return Err(Error::Dimension {
            expected: g.n_physical(),
            found: n,
        });
    }
    let l2p: Vec<usize> = match initial_layout {
        Some(l) => {
            check_layout(l, n, g.n_physical())?;
            l.to_vec()
        }
        None => (0..n).collect(),
    };
    let mut p2l = vec![usize::MAX; g.n_physical()];
    for (l, &p) in l2p.iter().enumerate() {
        p2l[p] = l;
    }
    let mut l2p_cur = l2p.clone();
    let mut out = Circuit::new(g.n_physical());
    let mut index_map = Vec::with_capacity(c.len() + 1);
    let mut swap_count = 0usize;

    for gate in c.gates() {
        index_map.push(out.len());
        if let (a, Some(b)) = gate.qubits() {
            loop {
                let (pa, pb) = (l2p_cur[a], l2p_cur[b]);
                let d = g.distance(pa, pb);
                if d <= 1 {
                    break;
                }
                let (mover, anchor) = if pa > pb { (pa, pb) } else { (pb, pa) };
                let hop = *g
                    .neighbours(mover)
                    .iter()
                    .find(|&&h| g.distance(h, anchor) + 1 == d)
                    .expect("connected graph has a shortest-path neighbour");
                out.push_unchecked(Gate::Swap(mover, hop));
                swap_count += 1;
                let (lm, lh) = (p2l[mover], p2l[hop]);
                p2l[mover] = lh;
                p2l[hop] = lm;
                if lm != usize::MAX {
                    l2p_cur[lm] = hop;
                }
                if lh != usize::MAX {
                    l2p_cur[lh] = mover;
                }
            }
        }
        out.push_unchecked(gate.map_qubits(|q| l2p_cur[q]));
    }
    index_map.push(out.len());

    let labels: Vec<LabelSpan> = c
        .labels()
        .iter()
        .map(|s| LabelSpan {
            name: s.name.clone(),
            start: index_map[s.start],
            end: index_map[s.end],
        })
        .collect();
    out.set_labels(labels);

    Ok(RoutedCircuit {
        circuit: out,
        initial_layout: l2p,
        final_layout: l2p_cur,
        swap_count,
    })
}

/// Routes with the identity layout and `trials` seeded random layouts,
/// keeping the one with the smallest two-qubit depth (earliest on ties).
pub fn route_with_layout_search(
    c: &Circuit,
    g: &CouplingGraph,
    trials: usize,
    seed: u64,
    swap_weight: usize,
) -> Result<RoutedCircuit> {
    let mut best = route(c, g, None)?;
    let mut best_depth = two_qubit_depth(&best.circuit, swap_weight)?.two_qubit_depth;
    let mut rng = stream_rng(seed, stream::LAYOUT);
    let mut physical: Vec<usize> = (0..g.n_physical()).collect();
    for _ in 0..trials {
        physical.shuffle(&mut rng);
        let layout = &physical[..c.n_qubits()];
        let cand = route(c, g, Some(layout))?;
        let d = two_qubit_depth(&cand.circuit, swap_weight)?.two_qubit_depth;
        if d < best_depth {
            best = cand;
            best_depth = d;
        }
    }
    Ok(best)
}

/// Two-qubit depth metrics of a circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthReport {
    pub two_qubit_depth: usize,
    /// Two-qubit gate count with each SWAP charged `swap_weight` gates.
    pub two_qubit_count: usize,
    pub swap_count: usize,
    pub per_label_depth: BTreeMap<String, usize>,
}

fn depth_of(gates: &[Gate], n_qubits: usize, swap_weight: usize) -> (usize, usize, usize) {
    let mut level = vec![0usize; n_qubits];
    let mut depth = 0;
    let mut count = 0;
    let mut swaps = 0;
    for g in gates {
        if let (a, Some(b)) = g.qubits() {
            let w = if matches!(g, Gate::Swap(..)) {
                swaps += 1;
                swap_weight
            } else {
                1
            };
            count += w;
            let l = level[a].max(level[b]) + w;
            level[a] = l;
            level[b] = l;
            depth = depth.max(l);
        }
    }
    (depth, count, swaps)
}

/// Longest chain of two-qubit gates through shared qubits, each SWAP
/// counting `swap_weight` layers; single-qubit gates and measurements are free.
pub fn two_qubit_depth(c: &Circuit, swap_weight: usize) -> Result<DepthReport> {
    if swap_weight == 0 {
        return Err(Error::param("swap_weight must be positive"));
    }
    let (depth, count, swaps) = depth_of(c.gates(), c.n_qubits(), swap_weight);
    let mut per_label_depth = BTreeMap::new();
    for s in c.labels() {
        let (d, _, _) = depth_of(&c.gates()[s.start..s.end], c.n_qubits(), swap_weight);
        per_label_depth.insert(s.name.clone(), d);
    }
    Ok(DepthReport {
        two_qubit_depth: depth,
        two_qubit_count: count,
        swap_count: swaps,
        per_label_depth,
    })
}

fn cancels(prev: &Gate, next: &Gate) -> bool {
    match (prev, next) {
        (Gate::Cz(a, b), Gate::Cz(c, d)) | (Gate::Swap(a, b), Gate::Swap(c, d)) => {
            (a, b) == (c, d) || (a, b) == (d, c)
        }
        _ => prev.inverse().as_ref() == Some(next),
    }
}

/// Removes pairs of mutually inverse gates that are adjacent on every wire
/// they touch, repeatedly. Label spans shrink accordingly.
pub fn cancel_adjacent_inverses(c: &Circuit) -> Circuit {
    let gates = c.gates();
    let mut kept = vec![true; gates.len()];
    let mut wire: Vec<Vec<usize>> = vec![Vec::new(); c.n_qubits()];
    for (i, g) in gates.iter().enumerate() {
        let (a, b) = g.qubits();
        let top_a = wire[a].last().copied();
        let matched = match (top_a, b) {
            (Some(j), None) => cancels(&gates[j], g),
            (Some(j), Some(b)) => wire[b].last() == Some(&j) && cancels(&gates[j], g),
            (None, _) => false,
        };
        if matched {
            let j = top_a.unwrap();
            kept[j] = false;
            kept[i] = false;
            wire[a].pop();
            if let Some(b) = b {
                wire[b].pop();
            }
        } else {
            wire[a].push(i);
            if let Some(b) = b {
                wire[b].push(i);
            }
        }
    }
    let mut prefix = Vec::with_capacity(gates.len() + 1);
    prefix.push(0usize);
    let mut out = Circuit::new(c.n_qubits());
    for (g, &k) in gates.iter().zip(&kept) {
        if k {
            out.push_unchecked(*g);
        }
        prefix.push(out.len());
    }
    out.set_labels(
        c.labels()
            .iter()
            .map(|s| LabelSpan {
                name: s.name.clone(),
                start: prefix[s.start],
                end: prefix[s.end],
            })
            .collect(),
    );
    out
}

/// One row of a depth table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub kappa: Option<f64>,
    pub step: usize,
    pub depth: usize,
    pub count: usize,
    pub swaps: usize,
    pub seed: u64,
}
