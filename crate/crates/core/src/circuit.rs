//! Two-site gate-level lowering of bipartite schedules and long-distance
//! CNOT accounting.
//!
//! Party A holds the position register `p1` (binary, least significant bit
//! first), two ancillae `a1`, `a3` and the coin qubit `c1`; party B holds
//! `p2`, `a2`, `a4` and `c2`. A coin at level `k` is lowered as
//!
//! 1. mark `p1 == k` on `a1` and `p2 == k` on `a2`;
//! 2. for every edge block at `(k, y)`: mark `p2 == y` on `a4`, apply the
//!    block to `c1 c2` controlled on `a1 a4`, unmark;
//! 3. the corner block controlled on `a1 a2`;
//! 4. for every edge block at `(x, k)`: mark `p1 == x` on `a3`, apply the
//!    block controlled on `a3 a2`, unmark;
//! 5. unmark `a2`, then `a1`.
//!
//! Marking is a site-local multi-controlled X, so every cross-site gate is a
//! controlled 4x4 block. Those are not decomposed further; each one is
//! charged a fixed number of CNOTs ([`CostModel`]). The shift is a pair of
//! site-local coin-controlled increments mod `d` and costs nothing.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::WalkState;
use crate::unitary::UnitaryBlock;
use crate::walk::{CoinBlocks, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Site {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Qubit {
    pub label: String,
    pub site: Site,
}

/// Wire indices of the two-site register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dimension: usize,
    pub p1: Vec<usize>,
    pub a1: usize,
    pub a3: usize,
    pub c1: usize,
    pub p2: Vec<usize>,
    pub a2: usize,
    pub a4: usize,
    pub c2: usize,
}

impl Layout {
    pub fn new(dimension: usize) -> Self {
        let bits = position_bits(dimension);
        let p1: Vec<usize> = (0..bits).collect();
        let p2: Vec<usize> = (bits + 3..2 * bits + 3).collect();
        Self {
            dimension,
            p1,
            a1: bits,
            a3: bits + 1,
            c1: bits + 2,
            p2,
            a2: 2 * bits + 3,
            a4: 2 * bits + 4,
            c2: 2 * bits + 5,
        }
    }

    pub fn qubit_count(&self) -> usize {
        2 * (self.p1.len() + 3)
    }

    pub fn ancillae(&self) -> [usize; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    pub fn site(&self, qubit: usize) -> Site {
        if qubit <= self.c1 {
            Site::A
        } else {
            Site::B
        }
    }

    pub fn qubits(&self) -> Vec<Qubit> {
        let mut labels = vec![String::new(); self.qubit_count()];
        for (i, &q) in self.p1.iter().enumerate() {
            labels[q] = format!("p1[{i}]");
        }
        for (i, &q) in self.p2.iter().enumerate() {
            labels[q] = format!("p2[{i}]");
        }
        for (q, name) in [(self.a1, "a1"), (self.a2, "a2"), (self.a3, "a3"), (self.a4, "a4"), (self.c1, "c1"), (self.c2, "c2")] {
            labels[q] = name.to_string();
        }
        labels
            .into_iter()
            .enumerate()
            .map(|(q, label)| Qubit { label, site: self.site(q) })
            .collect()
    }

    /// Dense basis index of `|p1 = x, p2 = y, c1 c2 = coin>` with clean ancillae.
    pub fn basis_index(&self, x: usize, y: usize, coin: usize) -> usize {
        let mut i = 0;
        for (b, &q) in self.p1.iter().enumerate() {
            i |= ((x >> b) & 1) << q;
        }
        for (b, &q) in self.p2.iter().enumerate() {
            i |= ((y >> b) & 1) << q;
        }
        i | ((coin & 1) << self.c1) | (((coin >> 1) & 1) << self.c2)
    }
}

/// `ceil(log2 d)`, at least one bit.
pub fn position_bits(dimension: usize) -> usize {
    (usize::BITS - dimension.saturating_sub(1).leading_zeros()).max(1) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Gate {
    /// X on `target` when every `(qubit, value)` control matches.
    LocalToffoli { controls: Vec<(usize, bool)>, target: usize },
    /// `register += 1 (mod modulus)` when `control` is set; values at or
    /// above the modulus are left alone.
    LocalIncrement { register: Vec<usize>, control: usize, modulus: usize },
    /// `matrix` on `targets` (first target is the low coin bit) when every
    /// control is set.
    UcgNode {
        controls: Vec<usize>,
        targets: [usize; 2],
        position: Vec<usize>,
        matrix: UnitaryBlock,
    },
    CrossCnot { control: usize, target: usize },
}

impl Gate {
    pub fn operands(&self) -> Vec<usize> {
        match self {
            Gate::LocalToffoli { controls, target } => controls.iter().map(|c| c.0).chain([*target]).collect(),
            Gate::LocalIncrement { register, control, .. } => register.iter().copied().chain([*control]).collect(),
            Gate::UcgNode { controls, targets, .. } => controls.iter().chain(targets).copied().collect(),
            Gate::CrossCnot { control, target } => vec![*control, *target],
        }
    }

    pub fn is_local(&self) -> bool {
        matches!(self, Gate::LocalToffoli { .. } | Gate::LocalIncrement { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Coin,
    Shift,
}

/// A contiguous run of gates lowered from one coin or one shift of schedule
/// step `step` (the trailing coin has `step = steps.len()`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub step: usize,
    pub kind: SegmentKind,
    pub level: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitIR {
    pub dimension: usize,
    pub qubits: Vec<Qubit>,
    pub gates: Vec<Gate>,
    pub segments: Vec<Segment>,
    #[serde(skip)]
    pub layout: Layout,
}

impl CircuitIR {
    /// Checks that local gates stay on one site and cross-site CNOTs span two.
    pub fn check_locality(&self) -> Result<()> {
        for (i, g) in self.gates.iter().enumerate() {
            let spans = self.crosses(g);
            let ok = match g {
                Gate::LocalToffoli { .. } | Gate::LocalIncrement { .. } => !spans,
                Gate::CrossCnot { .. } => spans,
                Gate::UcgNode { .. } => true,
            };
            if !ok {
                return Err(Error::InvalidSchedule(format!("gate {i} violates site locality: {g:?}")));
            }
        }
        Ok(())
    }

    fn crosses(&self, g: &Gate) -> bool {
        let ops = g.operands();
        ops.iter().any(|&q| self.layout.site(q) != self.layout.site(ops[0]))
    }
}

fn mark(register: &[usize], value: usize, target: usize) -> Gate {
    Gate::LocalToffoli {
        controls: register.iter().enumerate().map(|(b, &q)| (q, (value >> b) & 1 == 1)).collect(),
        target,
    }
}

/// Lowers the level-`k` coin. Empty when every block is the identity.
pub fn lower_coin_step(layout: &Layout, k: usize, blocks: &CoinBlocks) -> Result<Vec<Gate>> {
    let mut row = Vec::new();
    let mut column = Vec::new();
    let mut corner = None;
    for (pos, block) in blocks {
        if block.is_identity() {
            continue;
        }
        match *pos.coords() {
            [x, y] if x == k && y == k => corner = Some(block),
            [x, y] if x == k => row.push((y, block)),
            [x, y] if y == k => column.push((x, block)),
            [_, _] => {
                return Err(Error::NonFrontierBlock {
                    level: k,
                    position: pos.coords().to_vec(),
                })
            }
            _ => return Err(Error::NotBipartite(pos.party_count())),
        }
    }
    if row.is_empty() && column.is_empty() && corner.is_none() {
        return Ok(Vec::new());
    }
    let Layout { a1, a2, a3, a4, c1, c2, .. } = *layout;
    let node = |controls: Vec<usize>, position: Vec<usize>, block: &UnitaryBlock| Gate::UcgNode {
        controls,
        targets: [c1, c2],
        position,
        matrix: block.clone(),
    };
    let mut gates = vec![mark(&layout.p1, k, a1), mark(&layout.p2, k, a2)];
    for (y, block) in row {
        gates.push(mark(&layout.p2, y, a4));
        gates.push(node(vec![a1, a4], vec![k, y], block));
        gates.push(mark(&layout.p2, y, a4));
    }
    if let Some(block) = corner {
        gates.push(node(vec![a1, a2], vec![k, k], block));
    }
    for (x, block) in column {
        gates.push(mark(&layout.p1, x, a3));
        gates.push(node(vec![a3, a2], vec![x, k], block));
        gates.push(mark(&layout.p1, x, a3));
    }
    gates.push(mark(&layout.p2, k, a2));
    gates.push(mark(&layout.p1, k, a1));
    Ok(gates)
}

/// One application of the conditional shift: `c1` increments `p1`, `c2`
/// increments `p2`, both mod `d`.
pub fn lower_shift(layout: &Layout) -> Vec<Gate> {
    vec![
        Gate::LocalIncrement {
            register: layout.p1.clone(),
            control: layout.c1,
            modulus: layout.dimension,
        },
        Gate::LocalIncrement {
            register: layout.p2.clone(),
            control: layout.c2,
            modulus: layout.dimension,
        },
    ]
}

/// Lowers a bipartite schedule. Step `i`'s coin is treated as level `i`, the
/// trailing coin as level `steps.len()`.
pub fn lower(schedule: &Schedule) -> Result<CircuitIR> {
    if schedule.party_count != 2 {
        return Err(Error::NotBipartite(schedule.party_count));
    }
    let layout = Layout::new(schedule.dimension);
    let mut gates = Vec::new();
    let mut segments = Vec::new();
    let mut push = |gates: &mut Vec<Gate>, fragment: Vec<Gate>, step, kind, level| {
        let start = gates.len();
        gates.extend(fragment);
        segments.push(Segment {
            step,
            kind,
            level,
            start,
            end: gates.len(),
        });
    };
    for (i, step) in schedule.steps.iter().enumerate() {
        push(&mut gates, lower_coin_step(&layout, i, &step.blocks)?, i, SegmentKind::Coin, i);
        let shift: Vec<Gate> = (0..step.shift_power).flat_map(|_| lower_shift(&layout)).collect();
        push(&mut gates, shift, i, SegmentKind::Shift, i);
    }
    let last = schedule.steps.len();
    push(&mut gates, lower_coin_step(&layout, last, &schedule.final_coin)?, last, SegmentKind::Coin, last);
    Ok(CircuitIR {
        dimension: schedule.dimension,
        qubits: layout.qubits(),
        gates,
        segments,
        layout,
    })
}

/// CNOTs charged per cross-site gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CostModel {
    /// Charge for one controlled 4x4 block whose operands span both sites.
    pub cnots_per_cross_block: usize,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { cnots_per_cross_block: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepCost {
    pub step: usize,
    pub cross_blocks: usize,
    pub long_distance_cnots: usize,
    pub local_gates: usize,
}

/// Symbolic size and depth of the state-preparation circuit obtained by
/// running the stepwise walk on `n` qubits split into two halves: `D`
/// coin operators, each a position-controlled gate of size `D` and depth
/// `D / n`, and `D` shifts, each a pair of adders of size `n` and depth
/// `log2 n`, with `D = 2^ceil(n/2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QspEstimate {
    pub qubits: usize,
    pub coin_operators: f64,
    pub shift_operators: f64,
    pub ucg_size: f64,
    pub ucg_depth: f64,
    pub adder_size: f64,
    pub adder_depth: f64,
    pub size: f64,
    pub depth: f64,
    pub size_formula: String,
    pub depth_formula: String,
}

impl QspEstimate {
    pub fn for_qubits(n: usize) -> Self {
        let n = n.max(2);
        let big_d = 2f64.powi(n.div_ceil(2) as i32);
        let nf = n as f64;
        let (ucg_size, ucg_depth) = (big_d, big_d / nf);
        let (adder_size, adder_depth) = (nf, nf.log2());
        Self {
            qubits: n,
            coin_operators: big_d,
            shift_operators: big_d,
            ucg_size,
            ucg_depth,
            adder_size,
            adder_depth,
            size: big_d * ucg_size + big_d * adder_size,
            depth: big_d * ucg_depth + big_d * adder_depth,
            size_formula: "D*D + D*n, D = 2^ceil(n/2)".into(),
            depth_formula: "D*D/n + D*log2(n), D = 2^ceil(n/2)".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub dimension: usize,
    pub model: CostModel,
    pub long_distance_cnots: usize,
    pub local_gates: usize,
    pub steps: Vec<StepCost>,
    pub qsp: QspEstimate,
}

impl CostReport {
    pub fn cross_blocks(&self) -> usize {
        self.steps.iter().map(|s| s.cross_blocks).sum()
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>12} {:>14} {:>12}", "step", "cross blocks", "long-distance", "local gates")?;
        for s in &self.steps {
            writeln!(f, "{:>6} {:>12} {:>14} {:>12}", s.step, s.cross_blocks, s.long_distance_cnots, s.local_gates)?;
        }
        writeln!(f, "{:>6} {:>12} {:>14} {:>12}", "total", self.cross_blocks(), self.long_distance_cnots, self.local_gates)?;
        writeln!(f, "d = {}, {} CNOTs per cross-site block", self.dimension, self.model.cnots_per_cross_block)?;
        write!(
            f,
            "state preparation on n = {} qubits: size ~ {} ({}), depth ~ {:.1} ({})",
            self.qsp.qubits, self.qsp.size, self.qsp.size_formula, self.qsp.depth, self.qsp.depth_formula
        )
    }
}

pub fn cost(schedule: &Schedule) -> Result<CostReport> {
    cost_with(schedule, CostModel::default())
}

pub fn cost_with(schedule: &Schedule, model: CostModel) -> Result<CostReport> {
    let ir = lower(schedule)?;
    Ok(cost_of_circuit(&ir, model))
}

pub fn cost_of_circuit(ir: &CircuitIR, model: CostModel) -> CostReport {
    let step_count = ir.segments.iter().map(|s| s.step + 1).max().unwrap_or(0);
    let mut steps: Vec<StepCost> = (0..step_count)
        .map(|step| StepCost {
            step,
            cross_blocks: 0,
            long_distance_cnots: 0,
            local_gates: 0,
        })
        .collect();
    for seg in &ir.segments {
        let entry = &mut steps[seg.step];
        for g in &ir.gates[seg.start..seg.end] {
            match g {
                Gate::UcgNode { .. } if ir.crosses(g) => {
                    entry.cross_blocks += 1;
                    entry.long_distance_cnots += model.cnots_per_cross_block;
                }
                Gate::CrossCnot { .. } => entry.long_distance_cnots += 1,
                _ => entry.local_gates += 1,
            }
        }
    }
    CostReport {
        dimension: ir.dimension,
        model,
        long_distance_cnots: steps.iter().map(|s| s.long_distance_cnots).sum(),
        local_gates: steps.iter().map(|s| s.local_gates).sum(),
        steps,
        qsp: QspEstimate::for_qubits(2 * position_bits(ir.dimension)),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest register the dense replay accepts.
pub const MAX_REPLAY_QUBITS: usize = 20;

fn bit(i: usize, q: usize) -> bool {
    (i >> q) & 1 == 1
}

fn apply_gate(state: &mut [Complex64], g: &Gate) {
    let n = state.len();
    match g {
        Gate::LocalToffoli { controls, target } => {
            for i in 0..n {
                if !bit(i, *target) && controls.iter().all(|&(q, v)| bit(i, q) == v) {
                    state.swap(i, i | (1 << target));
                }
            }
        }
        Gate::CrossCnot { control, target } => {
            for i in 0..n {
                if bit(i, *control) && !bit(i, *target) {
                    state.swap(i, i | (1 << target));
                }
            }
        }
        Gate::LocalIncrement { register, control, modulus } => {
            let mut out = state.to_vec();
            for (i, &a) in state.iter().enumerate() {
                if !bit(i, *control) {
                    continue;
                }
                let v = register.iter().enumerate().fold(0, |v, (b, &q)| v | (usize::from(bit(i, q)) << b));
                if v >= *modulus {
                    continue;
                }
                let w = (v + 1) % modulus;
                let j = register
                    .iter()
                    .enumerate()
                    .fold(i, |j, (b, &q)| (j & !(1 << q)) | (((w >> b) & 1) << q));
                out[j] = a;
            }
            state.copy_from_slice(&out);
        }
        Gate::UcgNode {
            controls,
            targets: [t0, t1],
            matrix,
            ..
        } => {
            for base in 0..n {
                if bit(base, *t0) || bit(base, *t1) || !controls.iter().all(|&q| bit(base, q)) {
                    continue;
                }
                let idx = [base, base | (1 << t0), base | (1 << t1), base | (1 << t0) | (1 << t1)];
                let mut v: Vec<Complex64> = idx.iter().map(|&i| state[i]).collect();
                matrix.apply(&mut v);
                for (&i, a) in idx.iter().zip(v) {
                    state[i] = a;
                }
            }
        }
    }
}

/// Result of simulating a lowered circuit from the all-zero register.
#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub state: Vec<Complex64>,
    /// Probability of any ancilla being `|1>` after each coin segment.
    pub ancilla_residuals: Vec<f64>,
}

pub fn replay(ir: &CircuitIR) -> Result<Replay> {
    let nq = ir.layout.qubit_count();
    if nq > MAX_REPLAY_QUBITS {
        return Err(Error::DimensionMismatch(format!(
            "dense replay of {nq} qubits exceeds the {MAX_REPLAY_QUBITS}-qubit limit"
        )));
    }
    let mut state = vec![Complex64::new(0.0, 0.0); 1 << nq];
    state[0] = Complex64::new(1.0, 0.0);
    let ancilla_mask = ir.layout.ancillae().iter().fold(0, |m, &q| m | (1 << q));
    let mut ancilla_residuals = Vec::new();
    for seg in &ir.segments {
        for g in &ir.gates[seg.start..seg.end] {
            apply_gate(&mut state, g);
        }
        if seg.kind == SegmentKind::Coin {
            let dirty = state
                .iter()
                .enumerate()
                .filter(|(i, _)| i & ancilla_mask != 0)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            ancilla_residuals.push(dirty);
        }
    }
    Ok(Replay { state, ancilla_residuals })
}

/// Embeds a bipartite walk state in the dense register with clean ancillae.
pub fn encode(layout: &Layout, walk: &WalkState) -> Result<Vec<Complex64>> {
    if walk.party_count() != 2 {
        return Err(Error::NotBipartite(walk.party_count()));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); 1 << layout.qubit_count()];
    for (pos, coin, a) in walk.iter() {
        let [x, y] = *pos.coords() else { unreachable!() };
        out[layout.basis_index(x, y, coin.index())] = a;
    }
    Ok(out)
}
