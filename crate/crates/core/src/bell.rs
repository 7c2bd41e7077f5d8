//! Closed-form coin schedules for the generalized Bell states
//! `|phi_{n,m}> = d^{-1/2} sum_j e^{2 pi i j n / d} |j> ⊗ |(j + m) mod d>`.
//!
//! Every intermediate amplitude of the stepwise construction is known in
//! closed form for these states, so each forking block is one of a handful of
//! fixed shapes: a phased identity where an entry of the target is settled, a
//! single Pauli-X where amplitude is handed one site along an edge, and the
//! corner block `D^(k)`. None of this touches the general synthesis code; it
//! is an independent route that must agree with it.
//!
//! The tabulated blocks carry no phase on amplitude that moves during the
//! last forking step, so entries that first appear on the outer layer
//! `x = d - 1` or `y = d - 1` would lose their phase `e^{2 pi i x n / d}` when
//! `n != 0`. [`bell_coins`] puts the destination phase on every moving
//! component of that last step; [`bell_coins_literal`] keeps the table as is.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Position, TargetState};
use crate::stepwise::build_c2_blocks;
use crate::unitary::{complete_from_first_column, UnitaryBlock};
use crate::walk::{CoinBlocks, Schedule, SplitSchedule, SplitStep};

/// Dimension, phase index and shift index, with `n` and `m` reduced mod `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BellParams {
    d: usize,
    n: usize,
    m: usize,
}

impl BellParams {
    pub fn new(d: usize, n: i64, m: i64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidState(format!("Bell states need d >= 2, got {d}")));
        }
        let di = d as i64;
        Ok(Self {
            d,
            n: n.rem_euclid(di) as usize,
            m: m.rem_euclid(di) as usize,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `e^{2 pi i j n / d}`.
    pub fn phase(&self, j: usize) -> Complex64 {
        let turns = ((j * self.n) % self.d) as f64 / self.d as f64;
        Complex64::from_polar(1.0, TAU * turns)
    }
}

pub fn bell_target(params: BellParams) -> TargetState {
    let d = params.d;
    let norm = 1.0 / (d as f64).sqrt();
    TargetState::from_sparse(2, d, (0..d).map(|j| (vec![j, (j + params.m) % d], params.phase(j) * norm)))
        .expect("Bell amplitudes are normalized")
}

/// `delta(z) = 1` for `z >= 0`, else 0.
pub fn delta(z: i64) -> usize {
    usize::from(z >= 0)
}

/// `u(z) = z * delta(z)`.
pub fn ramp(z: i64) -> usize {
    if z >= 0 {
        z as usize
    } else {
        0
    }
}

/// `sigma_m(k) = u(d - m - k) + u(m - k)`: how many target entries lie in the
/// square `[k, d)^2`.
pub fn sigma(m: usize, k: usize, d: usize) -> usize {
    let (m, k, d) = (m as i64, k as i64, d as i64);
    ramp(d - m - k) + ramp(m - k)
}

/// Intermediate amplitude `alpha^(k)_{x,y}` of the stepwise construction,
/// straight from the case table.
pub fn bell_alpha(params: BellParams, k: usize, x: usize, y: usize) -> Result<Complex64> {
    let BellParams { d, n: _, m } = params;
    if k >= d || x > k || y > k {
        return Err(Error::IndexOutOfRange(format!("(k, x, y) = ({k}, {x}, {y}) for d = {d}")));
    }
    let on_diagonal = y == (x + m) % d;
    if k == d - 1 || (x < k && y < k) {
        let inv = 1.0 / (d as f64).sqrt();
        return Ok(if on_diagonal { params.phase(x) * inv } else { Complex64::new(0.0, 0.0) });
    }
    let (ki, mi, di) = (k as i64, m as i64, d as i64);
    let inv = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let value = match (x == k, y == k) {
        (true, false) => {
            let y = y as i64;
            if ki + mi - di <= y && y < mi.min(ki) {
                inv
            } else {
                zero
            }
        }
        (false, true) => {
            let x = x as i64;
            if ki - mi <= x && x < (di - mi).min(ki) {
                inv
            } else {
                zero
            }
        }
        _ => Complex64::new((sigma(m, k, d) as f64 / d as f64).sqrt(), 0.0),
    };
    Ok(value)
}

/// First column of the corner block `D^(k)`, or `None` when the corner is
/// empty (`sigma_m(k) = 0`).
pub fn d_column(params: BellParams, k: usize) -> Option<Vec<Complex64>> {
    let BellParams { d, n: _, m } = params;
    let zero = Complex64::new(0.0, 0.0);
    let mut col = vec![zero; 4];
    if m == 0 {
        let rest = (d - k) as f64;
        col[0] = params.phase(k) * (1.0 / rest).sqrt();
        col[3] = Complex64::new((1.0 - 1.0 / rest).sqrt(), 0.0);
        return Some(col);
    }
    let s = sigma(m, k, d);
    if s == 0 {
        return None;
    }
    let (ki, mi, di) = (k as i64, m as i64, d as i64);
    let s = s as f64;
    col[1] = Complex64::new((delta(mi - ki - 1) as f64 / s).sqrt(), 0.0);
    col[2] = Complex64::new((delta(di - mi - ki - 1) as f64 / s).sqrt(), 0.0);
    col[3] = Complex64::new((sigma(m, k + 1, d) as f64 / s).sqrt(), 0.0);
    Some(col)
}

/// Tabulated forking coin at step `k`. With `phase_last` set, the last
/// forking step (`k = d - 2`) multiplies every moving component by the phase
/// of the entry it lands on.
fn fork_blocks(params: BellParams, k: usize, phase_last: bool) -> Result<CoinBlocks> {
    let BellParams { d, n: _, m } = params;
    let (ki, mi, di) = (k as i64, m as i64, d as i64);
    let last = phase_last && k + 2 == d;
    let mut blocks = CoinBlocks::new();
    let mut put = |pos: Position, block: UnitaryBlock| {
        if !block.is_identity() {
            blocks.insert(pos, block);
        }
    };

    // x = k edge
    let lo = ki + mi - di;
    if lo >= 0 {
        put(Position::from([k, lo as usize]), UnitaryBlock::phased_identity(4, params.phase(k)));
    }
    for y in (lo + 1).max(0)..mi.min(ki) {
        let phase = if last { params.phase(k + 1) } else { Complex64::new(1.0, 0.0) };
        let block = UnitaryBlock::phased_identity(4, phase).matmul(&UnitaryBlock::xor_permutation(4, 1));
        put(Position::from([k, y as usize]), block);
    }

    // y = k edge; for m = 0 the stay point is the corner, handled by D^(k)
    if m != 0 && ki - mi >= 0 {
        put(Position::from([k - m, k]), UnitaryBlock::phased_identity(4, params.phase(k - m)));
    }
    for x in (ki - mi + 1).max(0)..(di - mi).min(ki) {
        let phase = if last { params.phase(x as usize) } else { Complex64::new(1.0, 0.0) };
        let block = UnitaryBlock::phased_identity(4, phase).matmul(&UnitaryBlock::xor_permutation(4, 2));
        put(Position::from([x as usize, k]), block);
    }

    if let Some(mut col) = d_column(params, k) {
        if last {
            for (z, a) in col.iter_mut().enumerate().skip(1) {
                *a *= params.phase(k + (z & 1));
            }
        }
        put(Position::from([k, k]), complete_from_first_column(col)?);
    }
    Ok(blocks)
}

/// Tabulated forking coin `C_1^(k)` exactly as listed, without the
/// last-step phase correction.
pub fn bell_forks(params: BellParams, k: usize) -> Result<CoinBlocks> {
    if k + 1 >= params.d {
        return Err(Error::IndexOutOfRange(format!("forking step {k} for d = {}", params.d)));
    }
    fork_blocks(params, k, false)
}

fn split_schedule(params: BellParams, phase_last: bool) -> Result<SplitSchedule> {
    let d = params.d;
    let steps = (0..d - 1)
        .map(|k| {
            Ok(SplitStep {
                restore: build_c2_blocks(2, k),
                fork: fork_blocks(params, k, phase_last)?,
                shift_power: 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitSchedule {
        party_count: 2,
        dimension: d,
        steps,
        final_restore: build_c2_blocks(2, d - 1),
    })
}

/// Unfused closed-form schedule, with the last-step phase correction.
pub fn bell_coins_split(params: BellParams) -> Result<SplitSchedule> {
    split_schedule(params, true)
}

/// Closed-form schedule preparing `|phi_{n,m}> ⊗ |00>`.
pub fn bell_coins(params: BellParams) -> Result<Schedule> {
    Ok(bell_coins_split(params)?.fuse())
}

/// The table without the phase correction; exact only when no entry on the
/// outer layer carries a phase (for example `n = 0`).
pub fn bell_coins_literal(params: BellParams) -> Result<Schedule> {
    Ok(split_schedule(params, false)?.fuse())
}
