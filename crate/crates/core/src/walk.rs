//! Coin and shift operators, schedules, and the sparse walk engine.
//!
//! A [`Schedule`] is the executable form of an engineered walk: each
//! [`CoinStep`] applies its position-dependent coin and then the conditional
//! shift `S^t`. A trailing coin (`final_coin`) is applied after the last shift;
//! it is the coin part of the last walk step, whose shift acts trivially once
//! every coin is back in `|0^c>`.
//!
//! A [`SplitSchedule`] keeps the two halves of every coin apart (the restoring
//! permutation and the forking block) so the engine can check that the coin
//! register is collapsed between steps. [`SplitSchedule::fuse`] multiplies the
//! halves into the single-block form.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Position, WalkState};
use crate::unitary::{UnitaryBlock, INVARIANT_TOL};

/// Position-dependent coin: absent positions carry the identity.
pub type CoinBlocks = BTreeMap<Position, UnitaryBlock>;

/// One time step: a coin followed by `shift_power` applications of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinStep {
    pub blocks: CoinBlocks,
    pub shift_power: usize,
}

impl CoinStep {
    pub fn new(blocks: CoinBlocks, shift_power: usize) -> Self {
        Self { blocks, shift_power }
    }

    pub fn shift_only(shift_power: usize) -> Self {
        Self::new(CoinBlocks::new(), shift_power)
    }

    /// Number of stored blocks that differ from the identity.
    pub fn non_identity_count(&self) -> usize {
        count_non_identity(&self.blocks)
    }
}

pub(crate) fn count_non_identity(blocks: &CoinBlocks) -> usize {
    blocks.values().filter(|b| !b.is_identity()).count()
}

/// A complete engineered walk for `c` parties of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub party_count: usize,
    pub dimension: usize,
    pub steps: Vec<CoinStep>,
    pub final_coin: CoinBlocks,
}

impl Schedule {
    pub fn new(party_count: usize, dimension: usize) -> Self {
        Self {
            party_count,
            dimension,
            steps: Vec::new(),
            final_coin: CoinBlocks::new(),
        }
    }

    pub fn coin_dim(&self) -> usize {
        1 << self.party_count
    }

    /// Total number of shift applications.
    pub fn total_shift(&self) -> usize {
        self.steps.iter().map(|s| s.shift_power).sum()
    }

    /// Non-identity blocks over all steps and the trailing coin.
    pub fn non_identity_blocks(&self) -> usize {
        self.steps.iter().map(CoinStep::non_identity_count).sum::<usize>() + count_non_identity(&self.final_coin)
    }

    /// Steps whose coin is not the identity everywhere.
    pub fn non_identity_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.non_identity_count() > 0).count()
    }

    /// Every stored block, tagged with its step index (`steps.len()` for the
    /// trailing coin).
    pub fn blocks(&self) -> impl Iterator<Item = (usize, &Position, &UnitaryBlock)> {
        self.steps
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.blocks.iter().map(move |(p, b)| (k, p, b)))
            .chain(self.final_coin.iter().map(move |(p, b)| (self.steps.len(), p, b)))
    }

    /// Checks shapes, grid bounds and shift powers.
    pub fn validate(&self) -> Result<()> {
        if self.party_count == 0 || self.dimension == 0 {
            return Err(Error::InvalidSchedule("c and d must be positive".into()));
        }
        for (k, step) in self.steps.iter().enumerate() {
            if step.shift_power == 0 {
                return Err(Error::InvalidSchedule(format!("step {k} has shift_power 0")));
            }
        }
        for (k, pos, block) in self.blocks() {
            if block.dim() != self.coin_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "step {k}: {}x{} block for a {}-dimensional coin",
                    block.dim(),
                    block.dim(),
                    self.coin_dim()
                )));
            }
            if pos.party_count() != self.party_count || pos.coords().iter().any(|&x| x >= self.dimension) {
                return Err(Error::InvalidSchedule(format!(
                    "step {k}: block position {:?} outside [0, {})^{}",
                    pos.coords(),
                    self.dimension,
                    self.party_count
                )));
            }
        }
        Ok(())
    }
}

/// One step kept as its two coin halves: `restore` acts first and returns
/// arriving coins to `|0^c>`, then `fork` splits amplitude into directions.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitStep {
    pub restore: CoinBlocks,
    pub fork: CoinBlocks,
    pub shift_power: usize,
}

/// Unfused schedule; see the module docs.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSchedule {
    pub party_count: usize,
    pub dimension: usize,
    pub steps: Vec<SplitStep>,
    pub final_restore: CoinBlocks,
}

impl SplitSchedule {
    /// Multiplies `fork * restore` position by position.
    pub fn fuse(&self) -> Schedule {
        let steps = self
            .steps
            .iter()
            .map(|s| CoinStep::new(fuse_blocks(&s.fork, &s.restore), s.shift_power))
            .collect();
        Schedule {
            party_count: self.party_count,
            dimension: self.dimension,
            steps,
            final_coin: self
                .final_restore
                .iter()
                .filter(|(_, b)| !b.is_identity())
                .map(|(p, b)| (p.clone(), b.clone()))
                .collect(),
        }
    }
}

/// `later * earlier` at every position either map touches; identities dropped.
pub fn fuse_blocks(later: &CoinBlocks, earlier: &CoinBlocks) -> CoinBlocks {
    let mut out = CoinBlocks::new();
    for pos in later.keys().chain(earlier.keys()) {
        if out.contains_key(pos) {
            continue;
        }
        let block = match (later.get(pos), earlier.get(pos)) {
            (Some(a), Some(b)) => a.matmul(b),
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => unreachable!(),
        };
        if !block.is_identity() {
            out.insert(pos.clone(), block);
        }
    }
    out
}

/// Applies a position-dependent coin.
pub fn apply_coin(state: &WalkState, blocks: &CoinBlocks) -> Result<WalkState> {
    let mut next = state.clone();
    apply_coin_in_place(&mut next, blocks)?;
    Ok(next)
}

fn apply_coin_in_place(state: &mut WalkState, blocks: &CoinBlocks) -> Result<()> {
    let d = state.dimension();
    let coin_dim = state.coin_dim();
    for (pos, block) in blocks {
        if block.dim() != coin_dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} block on a {coin_dim}-dimensional coin",
                block.dim(),
                block.dim()
            )));
        }
        if pos.party_count() != state.party_count() || pos.coords().iter().any(|&x| x >= d) {
            continue;
        }
        if let Some(v) = state.amps.get_mut(&pos.linear(d)) {
            block.apply(v);
        }
    }
    Ok(())
}

/// Applies `S^power`: every amplitude at `(x, z)` moves to `(x + power*z, z)`.
pub fn apply_shift(state: &WalkState, power: usize) -> Result<WalkState> {
    let c = state.party_count();
    let d = state.dimension();
    let coin_dim = state.coin_dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut amps: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    for (&lin, v) in &state.amps {
        let pos = Position::from_linear(lin, c, d);
        for (coin, &a) in v.iter().enumerate() {
            if a == zero {
                continue;
            }
            let dest = pos.shifted(coin, power);
            if dest.coords().iter().any(|&x| x >= d) {
                return Err(Error::OutOfGrid {
                    position: pos.coords().to_vec(),
                    coin,
                    d,
                });
            }
            amps.entry(dest.linear(d)).or_insert_with(|| vec![zero; coin_dim])[coin] += a;
        }
    }
    Ok(WalkState::from_parts(c, d, amps))
}

/// Runs a schedule from `|0^c> ⊗ |0^c>`.
pub fn run(schedule: &Schedule) -> Result<WalkState> {
    let mut state = WalkState::origin(schedule.party_count, schedule.dimension);
    for step in &schedule.steps {
        apply_coin_in_place(&mut state, &step.blocks)?;
        state = apply_shift(&state, step.shift_power)?;
    }
    apply_coin_in_place(&mut state, &schedule.final_coin)?;
    Ok(state)
}

/// Runs an unfused schedule, checking after every restoring coin that all
/// amplitude sits in the coin state `|0^c>`.
pub fn run_split(schedule: &SplitSchedule) -> Result<WalkState> {
    let mut state = WalkState::origin(schedule.party_count, schedule.dimension);
    for (i, step) in schedule.steps.iter().enumerate() {
        apply_coin_in_place(&mut state, &step.restore)?;
        check_collapsed(&state, i)?;
        apply_coin_in_place(&mut state, &step.fork)?;
        state = apply_shift(&state, step.shift_power)?;
    }
    apply_coin_in_place(&mut state, &schedule.final_restore)?;
    check_collapsed(&state, schedule.steps.len())?;
    Ok(state)
}

fn check_collapsed(state: &WalkState, step: usize) -> Result<()> {
    let residual = state.coin_residual();
    if residual > INVARIANT_TOL {
        return Err(Error::CoinNotCollapsed { step, residual });
    }
    Ok(())
}

/// Diagnostics recorded after each step of [`trace`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub step: usize,
    pub norm: f64,
    /// See [`WalkState::coin_spread`]; zero when each position carries a single
    /// coin basis state.
    pub coin_spread: f64,
}

/// Runs a schedule and records per-step norm and coin-collapse diagnostics.
/// The last entry (index `steps.len()`) is taken after the trailing coin and
/// reports the mass outside `|0^c>` as its spread.
pub fn trace(schedule: &Schedule) -> Result<(WalkState, Vec<StepTrace>)> {
    let mut state = WalkState::origin(schedule.party_count, schedule.dimension);
    let mut log = Vec::with_capacity(schedule.steps.len() + 1);
    for (i, step) in schedule.steps.iter().enumerate() {
        apply_coin_in_place(&mut state, &step.blocks)?;
        state = apply_shift(&state, step.shift_power)?;
        log.push(StepTrace {
            step: i,
            norm: state.norm(),
            coin_spread: state.coin_spread(),
        });
    }
    apply_coin_in_place(&mut state, &schedule.final_coin)?;
    log.push(StepTrace {
        step: schedule.steps.len(),
        norm: state.norm(),
        coin_spread: state.coin_residual(),
    });
    Ok((state, log))
}
