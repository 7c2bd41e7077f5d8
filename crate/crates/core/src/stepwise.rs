//! Stepwise synthesis: a `d`-step walk that grows the prepared region one
//! lattice layer per step.
//!
//! The intermediate state after step `k` is supported on `[0, k]^c` with the
//! coin in `|0^c>`. Interior amplitudes (every coordinate `< k`) already equal
//! the target; a frontier amplitude (some coordinate `= k`) holds the
//! root-sum-square of everything it still has to spread into, which is the
//! cylinder `x + V_x` one layer out. Each step forks frontier amplitude along
//! the cylinder directions, shifts, and then a permutation restores every
//! arriving coin to `|0^c>`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{linear_index, Position, TargetState};
use crate::unitary::{complete_from_first_column, UnitaryBlock, INPUT_TOL};
use crate::walk::{CoinBlocks, Schedule, SplitSchedule, SplitStep};

/// Denominators at or below this are treated as zero amplitude.
pub(crate) const ZERO_AMPLITUDE: f64 = 1e-150;

/// The amplitudes `alpha^(k)` of the intermediate state after step `k`, on
/// the box `[0, k]^c`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntermediateAmplitudes {
    level: usize,
    party_count: usize,
    table: Vec<Complex64>,
}

impl IntermediateAmplitudes {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    /// Side length of the table, `k + 1`.
    pub fn side(&self) -> usize {
        self.level + 1
    }

    /// Amplitude at `coords`; zero outside the box.
    pub fn get(&self, coords: &[usize]) -> Complex64 {
        if coords.iter().any(|&x| x > self.level) {
            return Complex64::new(0.0, 0.0);
        }
        self.table[linear_index(coords, self.side())]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Position, Complex64)> + '_ {
        self.table
            .iter()
            .enumerate()
            .map(|(i, a)| (Position::from_linear(i, self.party_count, self.side()), *a))
    }

    pub fn norm(&self) -> f64 {
        self.table.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// The direction set `V_x = {z : z_j = 0 whenever x_j < k}` of a frontier
/// point at level `k`, encoded as bit masks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    base: Position,
    level: usize,
}

impl Cylinder {
    pub fn new(base: Position, level: usize) -> Result<Self> {
        if base.mask_at_level(level) == 0 || base.coords().iter().any(|&x| x > level) {
            return Err(Error::IndexOutOfRange(format!(
                "{:?} is not on the level-{level} frontier",
                base.coords()
            )));
        }
        Ok(Self { base, level })
    }

    pub fn base(&self) -> &Position {
        &self.base
    }

    /// Bit mask of the coordinates sitting at the frontier level.
    pub fn support(&self) -> usize {
        self.base.mask_at_level(self.level)
    }

    /// All members, `2^(#coordinates equal to k)` of them, ascending.
    pub fn members(&self) -> Vec<usize> {
        let mut out = submasks(self.support());
        out.sort_unstable();
        out
    }
}

fn submasks(mask: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(1 << mask.count_ones());
    let mut z = mask;
    loop {
        out.push(z);
        if z == 0 {
            break;
        }
        z = (z - 1) & mask;
    }
    out
}

/// Points of `[0, k]^c` with at least one coordinate equal to `k`.
pub fn frontier(party_count: usize, level: usize) -> Vec<Position> {
    let mut out = Vec::new();
    let mut coords = vec![0usize; party_count];
    fn rec(j: usize, level: usize, on_frontier: bool, coords: &mut Vec<usize>, out: &mut Vec<Position>) {
        if j == coords.len() {
            if on_frontier {
                out.push(Position::new(coords.clone()));
            }
            return;
        }
        for x in 0..=level {
            coords[j] = x;
            rec(j + 1, level, on_frontier || x == level, coords, out);
        }
    }
    rec(0, level, false, &mut coords, &mut out);
    out
}

/// Frontier values of every level below `d - 1`, computed from the top down.
struct Cascade<'a> {
    target: &'a TargetState,
    levels: Vec<HashMap<Position, f64>>,
}

impl<'a> Cascade<'a> {
    fn new(target: &'a TargetState) -> Self {
        let d = target.dimension();
        let c = target.party_count();
        let top = d.saturating_sub(1);
        let mut cascade = Self {
            target,
            levels: vec![HashMap::new(); top],
        };
        for k in (0..top).rev() {
            let values: HashMap<Position, f64> = frontier(c, k)
                .into_iter()
                .map(|pos| {
                    let mass: f64 = submasks(pos.mask_at_level(k))
                        .into_iter()
                        .map(|z| cascade.value(k + 1, &pos.shifted(z, 1)).norm_sqr())
                        .sum();
                    (pos, mass.sqrt())
                })
                .collect();
            cascade.levels[k] = values;
        }
        cascade
    }

    fn top(&self) -> usize {
        self.levels.len()
    }

    /// `alpha^(k)_x` for `x` in `[0, k]^c`.
    fn value(&self, k: usize, pos: &Position) -> Complex64 {
        if k >= self.top() || pos.coords().iter().all(|&x| x < k) {
            self.target.at(pos)
        } else {
            Complex64::new(self.levels[k][pos], 0.0)
        }
    }

    fn table(&self, k: usize) -> IntermediateAmplitudes {
        let c = self.target.party_count();
        let side = k + 1;
        let table = (0..side.pow(c as u32))
            .map(|i| self.value(k, &Position::from_linear(i, c, side)))
            .collect();
        IntermediateAmplitudes {
            level: k,
            party_count: c,
            table,
        }
    }
}

/// `alpha^(k)` by backward recursion from `alpha^(d-1) = alpha`.
pub fn alpha_recurrence(target: &TargetState, k: usize) -> Result<IntermediateAmplitudes> {
    if k >= target.dimension() {
        return Err(Error::IndexOutOfRange(format!(
            "level {k} for d = {}",
            target.dimension()
        )));
    }
    Ok(Cascade::new(target).table(k))
}

/// Every `alpha^(k)`, `k = 0..d`.
pub fn alpha_tables(target: &TargetState) -> Vec<IntermediateAmplitudes> {
    let cascade = Cascade::new(target);
    (0..target.dimension()).map(|k| cascade.table(k)).collect()
}

/// Bipartite `alpha^(k)_{x,y}` written directly in terms of the target:
/// interior entries verbatim, edge entries as tail sums along the edge
/// direction, the corner as the sum over the remaining square.
///
/// At the top level `k = d - 1` the intermediate state is the target itself,
/// so its amplitudes (phases included) are returned.
pub fn alpha_closed_form(target: &TargetState, k: usize, x: usize, y: usize) -> Result<Complex64> {
    if target.party_count() != 2 {
        return Err(Error::NotBipartite(target.party_count()));
    }
    let d = target.dimension();
    if k >= d || x > k || y > k {
        return Err(Error::IndexOutOfRange(format!("(k, x, y) = ({k}, {x}, {y}) for d = {d}")));
    }
    if k == d - 1 || (x < k && y < k) {
        return Ok(target.get(&[x, y]));
    }
    let mass: f64 = match (x == k, y == k) {
        (true, false) => (k..d).map(|z| target.get(&[z, y]).norm_sqr()).sum(),
        (false, true) => (k..d).map(|w| target.get(&[x, w]).norm_sqr()).sum(),
        _ => (k..d)
            .flat_map(|z| (k..d).map(move |w| (z, w)))
            .map(|(z, w)| target.get(&[z, w]).norm_sqr())
            .sum(),
    };
    Ok(Complex64::new(mass.sqrt(), 0.0))
}

/// The forking block at a frontier point: its first column sends `|0^c>` to
/// `sum_z alpha^(k+1)_{x+z} |z> / alpha^(k)_x` over the cylinder. `None` means
/// the identity (zero amplitude, or nothing to fork).
fn fork_block<F>(party_count: usize, level: usize, pos: &Position, denom: Complex64, next: F) -> Result<Option<UnitaryBlock>>
where
    F: Fn(&Position) -> Complex64,
{
    if denom.norm() <= ZERO_AMPLITUDE {
        return Ok(None);
    }
    let coin_dim = 1 << party_count;
    let mut column = vec![Complex64::new(0.0, 0.0); coin_dim];
    for z in submasks(pos.mask_at_level(level)) {
        column[z] = next(&pos.shifted(z, 1)) / denom;
    }
    let norm = column.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > INPUT_TOL {
        return Err(Error::InconsistentAmplitudes {
            position: pos.coords().to_vec(),
            norm,
        });
    }
    let block = complete_from_first_column(column)?;
    Ok((!block.is_identity()).then_some(block))
}

/// Forking coin `C_1^(k)` from consecutive intermediate tables. Only frontier
/// points of level `k` can carry non-identity blocks.
pub fn build_c1_blocks(current: &IntermediateAmplitudes, next: &IntermediateAmplitudes) -> Result<CoinBlocks> {
    let k = current.level();
    let c = current.party_count();
    if next.level() != k + 1 || next.party_count() != c {
        return Err(Error::DimensionMismatch(format!(
            "tables at levels {k} and {} (c = {c}, {})",
            next.level(),
            next.party_count()
        )));
    }
    let mut blocks = CoinBlocks::new();
    for pos in frontier(c, k) {
        let denom = current.get(pos.coords());
        if let Some(b) = fork_block(c, k, &pos, denom, |p| next.get(p.coords()))? {
            blocks.insert(pos, b);
        }
    }
    Ok(blocks)
}

/// Restoring coin `C_2^(k)`: at each level-`k` frontier point the coin that
/// arrived there (one bit per coordinate equal to `k`) is mapped back to
/// `|0^c>` by the corresponding Pauli-X string. Level 0 has nothing to restore.
pub fn build_c2_blocks(party_count: usize, level: usize) -> CoinBlocks {
    if level == 0 {
        return CoinBlocks::new();
    }
    frontier(party_count, level)
        .into_iter()
        .map(|pos| {
            let mask = pos.mask_at_level(level);
            (pos, UnitaryBlock::xor_permutation(1 << party_count, mask))
        })
        .collect()
}

/// Unfused stepwise schedule: step `k` restores level `k`, forks level `k`,
/// and shifts once; the trailing restore handles level `d - 1`.
pub fn synthesize_scheme1_split(target: &TargetState) -> Result<SplitSchedule> {
    let c = target.party_count();
    let d = target.dimension();
    let cascade = Cascade::new(target);
    let mut steps = Vec::with_capacity(d.saturating_sub(1));
    for k in 0..d.saturating_sub(1) {
        let mut fork = CoinBlocks::new();
        for pos in frontier(c, k) {
            let denom = cascade.value(k, &pos);
            if let Some(b) = fork_block(c, k, &pos, denom, |p| cascade.value(k + 1, p))? {
                fork.insert(pos, b);
            }
        }
        steps.push(SplitStep {
            restore: build_c2_blocks(c, k),
            fork,
            shift_power: 1,
        });
    }
    Ok(SplitSchedule {
        party_count: c,
        dimension: d,
        steps,
        final_restore: build_c2_blocks(c, d.saturating_sub(1)),
    })
}

/// Stepwise schedule with each step's restore and fork fused into one coin.
pub fn synthesize_scheme1(target: &TargetState) -> Result<Schedule> {
    Ok(synthesize_scheme1_split(target)?.fuse())
}

/// Number of non-identity forking blocks at each step.
pub fn fork_counts(split: &SplitSchedule) -> Vec<usize> {
    split
        .steps
        .iter()
        .map(|s| s.fork.values().filter(|b| !b.is_identity()).count())
        .collect()
}

/// Groups blocks of a split schedule by `(step, position)` for inspection.
pub fn fork_table(split: &SplitSchedule) -> BTreeMap<(usize, Position), UnitaryBlock> {
    split
        .steps
        .iter()
        .enumerate()
        .flat_map(|(k, s)| s.fork.iter().map(move |(p, b)| ((k, p.clone()), b.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::target_fidelity;
    use crate::walk::{run, run_split};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> TargetState {
        TargetState::from_sparse(2, 2, [(vec![0, 0], c(FRAC_1_SQRT_2)), (vec![1, 1], c(FRAC_1_SQRT_2))]).unwrap()
    }

    fn uniform(d: usize) -> TargetState {
        TargetState::normalized(2, d, vec![c(1.0); d * d]).unwrap()
    }

    #[test]
    fn bell_base_level_has_unit_amplitude() {
        let a0 = alpha_recurrence(&bell(), 0).unwrap();
        assert!((a0.get(&[0, 0]) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn top_level_is_the_target() {
        let t = uniform(2);
        let a1 = alpha_recurrence(&t, 1).unwrap();
        for (pos, a) in a1.iter() {
            assert_eq!(a, t.at(&pos));
        }
    }

    #[test]
    fn uniform_four_level_two() {
        let a2 = alpha_recurrence(&uniform(4), 2).unwrap();
        let quarter = 0.25;
        for x in 0..2 {
            for y in 0..2 {
                assert!((a2.get(&[x, y]) - c(quarter)).norm() < 1e-15);
            }
        }
        for y in 0..2 {
            assert!((a2.get(&[2, y]) - c(2f64.sqrt() / 4.0)).norm() < 1e-15);
            assert!((a2.get(&[y, 2]) - c(2f64.sqrt() / 4.0)).norm() < 1e-15);
        }
        assert!((a2.get(&[2, 2]) - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn closed_form_cases() {
        let t = bell();
        assert!((alpha_closed_form(&t, 1, 1, 1).unwrap() - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(matches!(alpha_closed_form(&t, 1, 2, 0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(alpha_closed_form(&t, 0, 1, 0), Err(Error::IndexOutOfRange(_))));
        let t3 = TargetState::basis(3, 2, &[0, 0, 0]).unwrap();
        assert!(matches!(alpha_closed_form(&t3, 0, 0, 0), Err(Error::NotBipartite(3))));
    }

    #[test]
    fn cylinder_members() {
        let cyl = Cylinder::new(Position::from([2, 1, 2]), 2).unwrap();
        assert_eq!(cyl.members(), vec![0b000, 0b001, 0b100, 0b101]);
        assert!(Cylinder::new(Position::from([1, 1]), 2).is_err());
        for k in 0..4 {
            for pos in frontier(3, k) {
                let n = pos.mask_at_level(k).count_ones();
                assert_eq!(Cylinder::new(pos, k).unwrap().members().len(), 1 << n);
            }
        }
    }

    #[test]
    fn frontier_sizes() {
        for c in 1..4 {
            for k in 0..6usize {
                assert_eq!(frontier(c, k).len(), (k + 1).pow(c as u32) - k.pow(c as u32));
            }
        }
    }

    #[test]
    fn bell_fork_column() {
        let tables = alpha_tables(&bell());
        let c1 = build_c1_blocks(&tables[0], &tables[1]).unwrap();
        let block = &c1[&Position::from([0, 0])];
        let h = c(FRAC_1_SQRT_2);
        assert_eq!(block.column(0), vec![h, c(0.0), c(0.0), h]);
    }

    #[test]
    fn uniform_four_edge_fork_column() {
        let tables = alpha_tables(&uniform(4));
        let c1 = build_c1_blocks(&tables[2], &tables[3]).unwrap();
        let col = c1[&Position::from([2, 0])].column(0);
        let expected = [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0];
        for (a, e) in col.iter().zip(expected) {
            assert!((a - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_frontier_amplitude_gives_identity() {
        // (0,0) and (2,2) only: the whole (1,0)/(0,1) edge at level 1 is empty.
        let t = TargetState::from_sparse(2, 3, [(vec![0, 0], c(FRAC_1_SQRT_2)), (vec![2, 2], c(FRAC_1_SQRT_2))]).unwrap();
        let tables = alpha_tables(&t);
        assert_eq!(tables[1].get(&[1, 0]), c(0.0));
        let c1 = build_c1_blocks(&tables[1], &tables[2]).unwrap();
        assert!(!c1.contains_key(&Position::from([1, 0])));
        assert!(!c1.contains_key(&Position::from([0, 1])));
        assert!(c1.contains_key(&Position::from([1, 1])));
    }

    #[test]
    fn restore_blocks_match_arrival_direction() {
        let c2 = build_c2_blocks(2, 1);
        assert_eq!(c2[&Position::from([1, 0])], UnitaryBlock::xor_permutation(4, 1));
        assert_eq!(c2[&Position::from([0, 1])], UnitaryBlock::xor_permutation(4, 2));
        assert!(!c2.contains_key(&Position::from([0, 0])));

        let corner = &build_c2_blocks(2, 2)[&Position::from([2, 2])];
        let one = c(1.0);
        let zero = c(0.0);
        assert_eq!(corner.column(3), vec![one, zero, zero, zero]);
        assert_eq!(corner.column(1), vec![zero, zero, one, zero]);
        assert_eq!(corner.unitarity_error(), 0.0);
        assert!(build_c2_blocks(2, 0).is_empty());
    }

    #[test]
    fn trivial_dimension_gives_empty_schedule() {
        let t = TargetState::basis(2, 1, &[0, 0]).unwrap();
        let s = synthesize_scheme1(&t).unwrap();
        assert!(s.steps.is_empty());
        assert!(s.final_coin.is_empty());
    }

    #[test]
    fn bell_schedule_has_one_step() {
        let s = synthesize_scheme1(&bell()).unwrap();
        assert_eq!(s.steps.len(), 1);
        assert_eq!(s.total_shift(), 1);
        let f = target_fidelity(&run(&s).unwrap(), &bell()).unwrap();
        assert!(f >= 1.0 - 1e-12);
    }

    #[test]
    fn basis_targets_use_permutations_only() {
        for coords in [[0, 0], [3, 1], [2, 3], [3, 3]] {
            let t = TargetState::basis(2, 4, &coords).unwrap();
            let split = synthesize_scheme1_split(&t).unwrap();
            for block in split.steps.iter().flat_map(|s| s.fork.values()) {
                let entries: Vec<f64> = block.rows().flatten().map(|z| z.norm()).collect();
                assert!(entries.iter().all(|&a| a == 0.0 || a == 1.0), "{block:?}");
            }
            let f = target_fidelity(&run(&split.fuse()).unwrap(), &t).unwrap();
            assert!(f >= 1.0 - 1e-12, "{coords:?}: {f}");
        }
    }

    #[test]
    fn construction_is_exact_not_just_up_to_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = TargetState::random(2, 5, &mut rng);
        let out = run(&synthesize_scheme1(&t).unwrap()).unwrap();
        let diff = out
            .to_dense()
            .iter()
            .zip(t.to_walk_state().to_dense())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn split_and_fused_runs_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (c, d) in [(2, 6), (3, 4), (1, 7)] {
            let t = TargetState::random(c, d, &mut rng);
            let split = synthesize_scheme1_split(&t).unwrap();
            let a = run_split(&split).unwrap();
            let b = run(&split.fuse()).unwrap();
            let diff = a.to_dense().iter().zip(b.to_dense()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14);
        }
    }

    #[test]
    fn block_counts_follow_frontier_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (c, d) in [(2usize, 9usize), (3, 5)] {
            let t = TargetState::random(c, d, &mut rng);
            let split = synthesize_scheme1_split(&t).unwrap();
            for (k, n) in fork_counts(&split).into_iter().enumerate() {
                assert!(n <= (k + 1).pow(c as u32) - k.pow(c as u32));
            }
            assert!(split.fuse().non_identity_blocks() <= d.pow(c as u32));
        }
    }
}
