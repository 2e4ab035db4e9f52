//! Lowering to the hardware basis {X, SX, RZ, CX} under a coupling map.
//!
//! Pipeline: two-qubit decomposition, greedy shortest-path routing, SWAP
//! expansion, one-qubit ZSX decomposition, barrier-fenced peephole, barrier
//! stripping. Every stage is a pure function of its input.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::circuit::{Circuit, GateKind, Instruction};
use crate::error::TranspileError;
use crate::statevector::gate_matrix;

/// Angles closer than this to 0 (mod 2π) are treated as zero.
pub const ANGLE_EPS: f64 = 1e-12;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

fn is_zero_angle(theta: f64) -> bool {
    wrap_angle(theta).abs() < ANGLE_EPS
}

/// Undirected connectivity graph over physical qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMap {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl CouplingMap {
    pub fn new(
        n_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TranspileError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= n_qubits || b >= n_qubits {
                return Err(TranspileError::BadEdge(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); n_qubits];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(CouplingMap {
            n_qubits,
            edges: set,
            adjacency,
        })
    }

    pub fn all_to_all(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        CouplingMap::new(n, edges).expect("complete graph edges are valid")
    }

    pub fn linear(n: usize) -> Self {
        CouplingMap::new(n, (1..n).map(|i| (i - 1, i))).expect("chain edges are valid")
    }

    pub fn from_preset(preset: CouplingPreset, n: usize) -> Self {
        match preset {
            CouplingPreset::Linear => CouplingMap::linear(n),
            CouplingPreset::AllToAll => CouplingMap::all_to_all(n),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// BFS shortest path, ties broken toward lower-numbered neighbours.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.n_qubits];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &v in &self.adjacency[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// Named coupling presets accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingPreset {
    #[default]
    Linear,
    AllToAll,
}

impl fmt::Display for CouplingPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingPreset::Linear => "linear",
            CouplingPreset::AllToAll => "all_to_all",
        })
    }
}

impl FromStr for CouplingPreset {
    type Err = TranspileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(CouplingPreset::Linear),
            "all_to_all" => Ok(CouplingPreset::AllToAll),
            other => Err(TranspileError::UnknownPreset(other.to_string())),
        }
    }
}

/// ZYZ Euler angles `(theta, phi, lambda)` with U ∝ RZ(phi)·RY(theta)·RZ(lambda).
fn zyz_angles(u: &crate::statevector::Matrix2) -> (f64, f64, f64) {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let scale = det.sqrt();
    let m00 = u[0][0] / scale;
    let m10 = u[1][0] / scale;
    let m11 = u[1][1] / scale;
    let theta = 2.0 * m10.norm().atan2(m00.norm());
    let sum = 2.0 * m11.arg();
    let diff = 2.0 * m10.arg();
    (theta, (sum + diff) / 2.0, (sum - diff) / 2.0)
}

fn push_rz(out: &mut Vec<Instruction>, q: usize, theta: f64) {
    let t = wrap_angle(theta);
    if t.abs() >= ANGLE_EPS {
        out.push(Instruction::rot(GateKind::RZ, q, t));
    }
}

/// Lowers a one-qubit gate to the RZ–SX–RZ–SX–RZ pattern (zero RZ omitted).
/// X, SX and RZ pass through unchanged.
pub fn decompose_1q(inst: &Instruction) -> Result<Vec<Instruction>, TranspileError> {
    if inst.kind.arity() != Some(1) {
        return Err(TranspileError::NotOneQubit(inst.kind));
    }
    if matches!(inst.kind, GateKind::X | GateKind::SX | GateKind::RZ) {
        return Ok(vec![inst.clone()]);
    }
    let q = inst.qubits[0];
    let u = gate_matrix(inst.kind, &inst.params).expect("one-qubit gates have a matrix");
    let (theta, phi, lambda) = zyz_angles(&u);
    let mut out = Vec::with_capacity(5);
    if theta.abs() < ANGLE_EPS {
        push_rz(&mut out, q, phi + lambda);
    } else if (theta - FRAC_PI_2).abs() < ANGLE_EPS {
        push_rz(&mut out, q, lambda - FRAC_PI_2);
        out.push(Instruction::one(GateKind::SX, q));
        push_rz(&mut out, q, phi + FRAC_PI_2);
    } else {
        push_rz(&mut out, q, lambda);
        out.push(Instruction::one(GateKind::SX, q));
        push_rz(&mut out, q, theta + PI);
        out.push(Instruction::one(GateKind::SX, q));
        push_rz(&mut out, q, phi + PI);
    }
    Ok(out)
}

/// Lowers a two-qubit gate to CX plus one-qubit rotations.
pub fn decompose_2q(inst: &Instruction) -> Result<Vec<Instruction>, TranspileError> {
    let (c, t) = match inst.qubits.as_slice() {
        &[c, t] => (c, t),
        _ => return Err(TranspileError::Unsupported2q(inst.kind)),
    };
    let cx = Instruction::two(GateKind::CX, c, t);
    let half = inst.params.first().map(|&p| p / 2.0).unwrap_or(0.0);
    Ok(match inst.kind {
        GateKind::CX => vec![cx],
        GateKind::SWAP => vec![cx.clone(), Instruction::two(GateKind::CX, t, c), cx],
        GateKind::CRZ | GateKind::CRY => {
            let rot = if inst.kind == GateKind::CRZ {
                GateKind::RZ
            } else {
                GateKind::RY
            };
            vec![
                Instruction::rot(rot, t, half),
                cx.clone(),
                Instruction::rot(rot, t, -half),
                cx,
            ]
        }
        GateKind::CRX => vec![
            Instruction::rot(GateKind::RZ, t, FRAC_PI_2),
            Instruction::rot(GateKind::RY, t, half),
            cx.clone(),
            Instruction::rot(GateKind::RY, t, -half),
            cx,
            Instruction::rot(GateKind::RZ, t, -FRAC_PI_2),
        ],
        other => return Err(TranspileError::Unsupported2q(other)),
    })
}

/// Applies [`decompose_2q`] to every multi-qubit gate (barriers kept).
fn lower_2q(c: &Circuit) -> Result<Circuit, TranspileError> {
    let mut out = Vec::with_capacity(c.len());
    for inst in c.instructions() {
        if inst.kind.arity() == Some(2) {
            out.extend(decompose_2q(inst)?);
        } else {
            out.push(inst.clone());
        }
    }
    Ok(c.with_instructions(out))
}

/// Routed circuit plus where each logical qubit ended up.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub circuit: Circuit,
    /// `final_layout[logical] = physical`.
    pub final_layout: Vec<usize>,
    pub swap_count: usize,
}

/// Greedy routing from the trivial layout: a non-adjacent CX walks its
/// control along a shortest path with SWAPs until it neighbours the target.
pub fn route(c: &Circuit, map: &CouplingMap) -> Result<Routed, TranspileError> {
    let n = c.n_qubits();
    if map.n_qubits() != n {
        return Err(TranspileError::MapTooSmall {
            map: map.n_qubits(),
            circuit: n,
        });
    }
    let mut l2p: Vec<usize> = (0..n).collect();
    let mut p2l: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(c.len());
    let mut swap_count = 0;
    for inst in c.instructions() {
        match inst.kind {
            GateKind::CX => {
                let (a, b) = (inst.qubits[0], inst.qubits[1]);
                let (pa, pb) = (l2p[a], l2p[b]);
                if !map.contains(pa, pb) {
                    let path = map
                        .shortest_path(pa, pb)
                        .ok_or(TranspileError::Unroutable(a, b))?;
                    for w in path.windows(2).take(path.len() - 2) {
                        let (u, v) = (w[0], w[1]);
                        out.push(Instruction::two(GateKind::SWAP, u, v));
                        swap_count += 1;
                        let (lu, lv) = (p2l[u], p2l[v]);
                        p2l.swap(u, v);
                        l2p[lu] = v;
                        l2p[lv] = u;
                    }
                }
                out.push(Instruction::two(GateKind::CX, l2p[a], l2p[b]));
            }
            k if k.arity() == Some(2) => return Err(TranspileError::NotLowered(k)),
            _ => {
                let mut mapped = inst.clone();
                for q in &mut mapped.qubits {
                    *q = l2p[*q];
                }
                out.push(mapped);
            }
        }
    }
    Ok(Routed {
        circuit: c.with_instructions(out),
        final_layout: l2p,
        swap_count,
    })
}

/// Local cancellations that never cross a barrier: RZ merging, zero-RZ
/// removal, CX·CX and X·X cancellation. Runs to a fixed point.
pub fn peephole(c: &Circuit) -> Circuit {
    let mut current = c.instructions().to_vec();
    loop {
        let next = peephole_pass(c.n_qubits(), &current);
        if next.len() == current.len() {
            return c.with_instructions(next);
        }
        current = next;
    }
}

fn peephole_pass(n: usize, input: &[Instruction]) -> Vec<Instruction> {
    let mut out: Vec<Option<Instruction>> = Vec::with_capacity(input.len());
    // per-qubit stack of live indices into `out`
    let mut wires: Vec<Vec<usize>> = vec![Vec::new(); n];
    let top = |wires: &Vec<Vec<usize>>, q: usize| wires[q].last().copied();

    for inst in input {
        match inst.kind {
            GateKind::RZ => {
                let q = inst.qubits[0];
                if let Some(i) = top(&wires, q) {
                    if let Some(prev) = out[i].as_mut().filter(|p| p.kind == GateKind::RZ) {
                        let merged = wrap_angle(prev.params[0] + inst.params[0]);
                        if merged.abs() < ANGLE_EPS {
                            out[i] = None;
                            wires[q].pop();
                        } else {
                            prev.params[0] = merged;
                        }
                        continue;
                    }
                }
                if is_zero_angle(inst.params[0]) {
                    continue;
                }
            }
            GateKind::X => {
                let q = inst.qubits[0];
                if let Some(i) = top(&wires, q) {
                    if out[i].as_ref().is_some_and(|p| p.kind == GateKind::X) {
                        out[i] = None;
                        wires[q].pop();
                        continue;
                    }
                }
            }
            GateKind::CX => {
                let (a, b) = (inst.qubits[0], inst.qubits[1]);
                if let (Some(i), Some(j)) = (top(&wires, a), top(&wires, b)) {
                    if i == j && out[i].as_ref().is_some_and(|p| p == inst) {
                        out[i] = None;
                        wires[a].pop();
                        wires[b].pop();
                        continue;
                    }
                }
            }
            _ => {}
        }
        let idx = out.len();
        for &q in &inst.qubits {
            wires[q].push(idx);
        }
        out.push(Some(inst.clone()));
    }
    out.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranspileStats {
    pub depth_before: usize,
    pub depth_after: usize,
    pub swap_count: usize,
    pub gates_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranspileResult {
    pub circuit: Circuit,
    pub final_layout: Vec<usize>,
    pub stats: TranspileStats,
}

/// Full lowering pipeline. Output is basis-only, barrier-free and respects `map`.
pub fn transpile(c: &Circuit, map: &CouplingMap) -> Result<TranspileResult, TranspileError> {
    let lowered = lower_2q(c)?;
    let routed = route(&lowered, map)?;
    let expanded = lower_2q(&routed.circuit)?;
    let mut basis = Vec::with_capacity(expanded.len() * 2);
    for inst in expanded.instructions() {
        if inst.kind.arity() == Some(1) {
            basis.extend(decompose_1q(inst)?);
        } else {
            basis.push(inst.clone());
        }
    }
    let optimized = peephole(&expanded.with_instructions(basis));
    let circuit = optimized.without_barriers();
    let stats = TranspileStats {
        depth_before: c.depth(),
        depth_after: circuit.depth(),
        swap_count: routed.swap_count,
        gates_after: circuit.len(),
    };
    Ok(TranspileResult {
        circuit,
        final_layout: routed.final_layout,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{equivalent_up_to_global_phase, EquivalenceOptions};

    fn single(inst: Instruction) -> Circuit {
        let mut c = Circuit::new(inst.qubits.iter().max().unwrap() + 1);
        c.push(inst).unwrap();
        c
    }

    fn from_list(n: usize, insts: Vec<Instruction>) -> Circuit {
        Circuit::from_instructions(n, insts).unwrap()
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.5), 0.5);
    }

    #[test]
    fn one_qubit_passthrough() {
        let rz = Instruction::rot(GateKind::RZ, 0, 1.3);
        assert_eq!(decompose_1q(&rz).unwrap(), vec![rz.clone()]);
        let x = Instruction::one(GateKind::X, 0);
        assert_eq!(decompose_1q(&x).unwrap(), vec![x]);
        assert!(decompose_1q(&Instruction::two(GateKind::CX, 0, 1)).is_err());
    }

    #[test]
    fn one_qubit_decompositions_are_equivalent() {
        let opts = EquivalenceOptions::default();
        let mut cases = vec![Instruction::one(GateKind::H, 0)];
        for &t in &[0.0, 1e-3, 0.7, FRAC_PI_2, PI, -2.1, 4.0, 2.0 * PI] {
            for k in [GateKind::RX, GateKind::RY] {
                cases.push(Instruction::rot(k, 0, t));
            }
        }
        for inst in cases {
            let out = decompose_1q(&inst).unwrap();
            assert!(out.len() <= 5);
            assert!(out
                .iter()
                .all(|i| i.kind.is_basis() && i.kind != GateKind::CX));
            assert!(
                equivalent_up_to_global_phase(&single(inst.clone()), &from_list(1, out), &opts)
                    .unwrap(),
                "{inst:?}"
            );
        }
        let h = decompose_1q(&Instruction::one(GateKind::H, 0)).unwrap();
        let kinds: Vec<GateKind> = h.iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![GateKind::RZ, GateKind::SX, GateKind::RZ]);
        assert!(decompose_1q(&Instruction::rot(GateKind::RX, 0, 0.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn two_qubit_decompositions_are_equivalent() {
        let opts = EquivalenceOptions::default();
        for kind in [GateKind::CRX, GateKind::CRY, GateKind::CRZ] {
            for &t in &[0.0, 1.1, -2.5] {
                for (c, tq) in [(0, 1), (1, 0)] {
                    let inst = Instruction::new(kind, vec![c, tq], vec![t]);
                    let out = decompose_2q(&inst).unwrap();
                    assert_eq!(out.iter().filter(|i| i.kind == GateKind::CX).count(), 2);
                    assert!(equivalent_up_to_global_phase(
                        &single(inst.clone()),
                        &from_list(2, out),
                        &opts
                    )
                    .unwrap());
                }
            }
        }
        let swap = Instruction::two(GateKind::SWAP, 0, 1);
        let out = decompose_2q(&swap).unwrap();
        assert_eq!(out.len(), 3);
        assert!(equivalent_up_to_global_phase(&single(swap), &from_list(2, out), &opts).unwrap());
        let cx = Instruction::two(GateKind::CX, 1, 0);
        assert_eq!(decompose_2q(&cx).unwrap(), vec![cx]);
        assert!(decompose_2q(&Instruction::one(GateKind::H, 0)).is_err());
    }

    #[test]
    fn route_all_to_all_is_trivial() {
        let mut c = Circuit::new(4);
        c.cx(0, 3).cx(2, 1).h(3);
        let r = route(&c, &CouplingMap::all_to_all(4)).unwrap();
        assert_eq!(r.swap_count, 0);
        assert_eq!(r.final_layout, vec![0, 1, 2, 3]);
        assert_eq!(r.circuit, c);
    }

    #[test]
    fn route_linear_inserts_swaps() {
        let mut c = Circuit::new(3);
        c.cx(0, 2);
        let map = CouplingMap::linear(3);
        let r = route(&c, &map).unwrap();
        assert!(r.swap_count >= 1);
        for inst in r.circuit.instructions() {
            assert!(map.contains(inst.qubits[0], inst.qubits[1]));
        }
        let opts = EquivalenceOptions::default().with_permutation(r.final_layout.clone());
        assert!(equivalent_up_to_global_phase(&c, &r.circuit, &opts).unwrap());
    }

    #[test]
    fn route_disconnected_names_pair() {
        let map = CouplingMap::new(4, [(0, 1), (2, 3)]).unwrap();
        let mut c = Circuit::new(4);
        c.cx(0, 1).cx(1, 3);
        assert_eq!(route(&c, &map), Err(TranspileError::Unroutable(1, 3)));
        let mut c = Circuit::new(4);
        c.h(0)
            .push(Instruction::new(GateKind::CRZ, vec![0, 1], vec![0.2]))
            .unwrap();
        assert!(matches!(
            route(&c, &map),
            Err(TranspileError::NotLowered(GateKind::CRZ))
        ));
    }

    #[test]
    fn peephole_rules() {
        let mut c = Circuit::new(1);
        c.rz(0, 1.0).rz(0, 2.0);
        let p = peephole(&c);
        assert_eq!(p.len(), 1);
        assert!((p.instructions()[0].params[0] - 3.0).abs() < 1e-15);

        let mut c = Circuit::new(2);
        c.cx(0, 1).cx(0, 1);
        assert!(peephole(&c).is_empty());

        let mut c = Circuit::new(2);
        c.cx(0, 1).cx(1, 0);
        assert_eq!(peephole(&c).len(), 2);

        let mut c = Circuit::new(1);
        c.rz(0, 1.0).barrier_all().rz(0, 2.0);
        assert_eq!(peephole(&c), c);

        let mut c = Circuit::new(1);
        c.x(0).rz(0, 0.4).rz(0, -0.4).x(0).rz(0, TAU);
        assert!(peephole(&c).is_empty());

        let mut c = Circuit::new(2);
        c.cx(0, 1).x(1).cx(0, 1);
        assert_eq!(peephole(&c).len(), 3);
    }

    #[test]
    fn barrier_blocks_every_rule() {
        let mut xx = Circuit::new(2);
        xx.x(0).barrier_all().x(0);
        assert_eq!(peephole(&xx).len(), 3);
        let mut cc = Circuit::new(2);
        cc.cx(0, 1).barrier_all().cx(0, 1);
        assert_eq!(peephole(&cc).len(), 3);
    }

    #[test]
    fn crz_zero_transpiles_to_identity() {
        let inst = Instruction::new(GateKind::CRZ, vec![0, 1], vec![0.0]);
        let out = decompose_2q(&inst).unwrap();
        let c = from_list(2, out);
        let opts = EquivalenceOptions::default();
        assert!(equivalent_up_to_global_phase(&c, &Circuit::new(2), &opts).unwrap());
        let t = transpile(&c, &CouplingMap::all_to_all(2)).unwrap();
        assert!(t.circuit.is_empty());
    }

    #[test]
    fn transpile_examples() {
        let enc = crate::encoding::basis_encode(&[1, 0, 1]).unwrap();
        let t = transpile(&enc, &CouplingMap::all_to_all(3)).unwrap();
        assert_eq!(
            t.circuit.instructions(),
            &[
                Instruction::one(GateKind::X, 0),
                Instruction::one(GateKind::X, 2)
            ]
        );
        assert_eq!(t.circuit.depth(), 1);

        let theta = [0.3, 2.2, 4.4];
        let enc = crate::encoding::angle_encode(&theta, crate::encoding::Axis::Z).unwrap();
        for map in [CouplingMap::linear(3), CouplingMap::all_to_all(3)] {
            let t = transpile(&enc, &map).unwrap();
            assert_eq!(t.circuit.instructions(), enc.instructions());
        }

        let enc = crate::encoding::angle_encode(&theta, crate::encoding::Axis::Y).unwrap();
        let t = transpile(&enc, &CouplingMap::all_to_all(3)).unwrap();
        assert!(t.circuit.instructions().iter().all(|i| i.kind.is_basis()));
        assert_eq!(t.circuit.gate_counts().get(GateKind::SX), 6);
        let opts = EquivalenceOptions::default();
        assert!(equivalent_up_to_global_phase(&enc, &t.circuit, &opts).unwrap());
    }

    #[test]
    fn preset_names() {
        assert_eq!(
            "linear".parse::<CouplingPreset>().unwrap(),
            CouplingPreset::Linear
        );
        assert_eq!(
            "all_to_all".parse::<CouplingPreset>().unwrap(),
            CouplingPreset::AllToAll
        );
        assert!("ring".parse::<CouplingPreset>().is_err());
        assert_eq!(CouplingMap::linear(4).edges().count(), 3);
        assert_eq!(CouplingMap::all_to_all(4).edges().count(), 6);
        assert!(CouplingMap::new(2, [(0, 2)]).is_err());
    }
}
