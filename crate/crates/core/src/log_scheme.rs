//! Logarithmic synthesis for bipartite targets with `d` a power of two.
//!
//! The first step sends the walker in one coin flip and one long shift of
//! `d/2` to the four quadrant origins, weighting each by the probability mass
//! `gamma_ab` of its quadrant. Every quadrant is then an independent target of
//! dimension `d/2`, synthesized recursively; their schedules run in parallel,
//! each block placed by which quadrant its position falls in. The result has
//! `log2 d` steps with shift powers `d/2, d/4, ..., 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Position, TargetState};
use crate::stepwise::{synthesize_scheme1_split, ZERO_AMPLITUDE};
use crate::unitary::{complete_from_first_column, UnitaryBlock};
use crate::walk::{CoinBlocks, Schedule, SplitSchedule, SplitStep};

/// A target of dimension `2h` cut into its four `h x h` quadrants.
///
/// Index `a + 2b` addresses quadrant `(a, b)`: `a` selects the upper half
/// along x, `b` along y, matching the coin index of the direction that reaches
/// it.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadrantSplit {
    pub gammas: [f64; 4],
    pub substates: [TargetState; 4],
}

impl QuadrantSplit {
    pub fn gamma(&self, a: usize, b: usize) -> f64 {
        self.gammas[a + 2 * b]
    }

    pub fn substate(&self, a: usize, b: usize) -> &TargetState {
        &self.substates[a + 2 * b]
    }

    /// Whether quadrant `q` carries any amplitude.
    pub fn is_populated(&self, q: usize) -> bool {
        self.gammas[q].sqrt() > ZERO_AMPLITUDE
    }
}

fn check_shape(target: &TargetState) -> Result<()> {
    if target.party_count() != 2 {
        return Err(Error::NotBipartite(target.party_count()));
    }
    if !target.dimension().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(target.dimension()));
    }
    Ok(())
}

/// Quadrant masses and renormalized quadrant states. Empty quadrants get the
/// placeholder `|0,0>`.
pub fn quadrant_split(target: &TargetState) -> Result<QuadrantSplit> {
    check_shape(target)?;
    let d = target.dimension();
    if d < 2 {
        return Err(Error::IndexOutOfRange("cannot split a dimension-1 target".into()));
    }
    let h = d / 2;
    let mut gammas = [0.0; 4];
    let mut subs = Vec::with_capacity(4);
    for (q, slot) in gammas.iter_mut().enumerate() {
        let (ox, oy) = ((q & 1) * h, (q >> 1) * h);
        let amps: Vec<Complex64> = (0..h * h)
            .map(|i| target.get(&[ox + i % h, oy + i / h]))
            .collect();
        let gamma: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        *slot = gamma;
        let sub = if gamma.sqrt() > ZERO_AMPLITUDE {
            TargetState::normalized(2, h, amps)?
        } else {
            TargetState::basis(2, h, &[0, 0])?
        };
        subs.push(sub);
    }
    let substates: [TargetState; 4] = subs.try_into().expect("four quadrants");
    Ok(QuadrantSplit { gammas, substates })
}

fn offset_blocks(blocks: &CoinBlocks, dx: usize, dy: usize, into: &mut CoinBlocks) {
    for (pos, b) in blocks {
        let c = pos.coords();
        into.insert(Position::from([c[0] + dx, c[1] + dy]), b.clone());
    }
}

fn synthesize_rec(target: &TargetState) -> Result<SplitSchedule> {
    let d = target.dimension();
    if d <= 2 {
        return synthesize_scheme1_split(target);
    }
    let h = d / 2;
    let split = quadrant_split(target)?;

    let column: Vec<Complex64> = split.gammas.iter().map(|g| Complex64::new(g.sqrt(), 0.0)).collect();
    let coarse = complete_from_first_column(column)?;
    let mut fork = CoinBlocks::new();
    if !coarse.is_identity() {
        fork.insert(Position::from([0, 0]), coarse);
    }
    let mut steps = vec![SplitStep {
        restore: CoinBlocks::new(),
        fork,
        shift_power: h,
    }];

    let subs: Vec<Option<SplitSchedule>> = (0..4)
        .map(|q| {
            split
                .is_populated(q)
                .then(|| synthesize_rec(&split.substates[q]))
                .transpose()
        })
        .collect::<Result<_>>()?;
    let depth = h.trailing_zeros() as usize;

    for j in 0..depth {
        let mut restore = CoinBlocks::new();
        let mut fork = CoinBlocks::new();
        if j == 0 {
            for q in 1..4 {
                restore.insert(Position::from([(q & 1) * h, (q >> 1) * h]), UnitaryBlock::xor_permutation(4, q));
            }
        }
        for (q, sub) in subs.iter().enumerate() {
            if let Some(sub) = sub {
                let (dx, dy) = ((q & 1) * h, (q >> 1) * h);
                offset_blocks(&sub.steps[j].restore, dx, dy, &mut restore);
                offset_blocks(&sub.steps[j].fork, dx, dy, &mut fork);
            }
        }
        steps.push(SplitStep {
            restore,
            fork,
            shift_power: h >> (j + 1),
        });
    }

    let mut final_restore = CoinBlocks::new();
    for (q, sub) in subs.iter().enumerate() {
        if let Some(sub) = sub {
            offset_blocks(&sub.final_restore, (q & 1) * h, (q >> 1) * h, &mut final_restore);
        }
    }
    Ok(SplitSchedule {
        party_count: 2,
        dimension: d,
        steps,
        final_restore,
    })
}

/// Unfused logarithmic schedule.
pub fn synthesize_scheme2_split(target: &TargetState) -> Result<SplitSchedule> {
    check_shape(target)?;
    synthesize_rec(target)
}

/// Logarithmic schedule: `log2 d` steps, shift powers summing to `d - 1`.
pub fn synthesize_scheme2(target: &TargetState) -> Result<Schedule> {
    Ok(synthesize_scheme2_split(target)?.fuse())
}
