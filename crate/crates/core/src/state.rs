//! Lattice positions, coin labels, walk states and target states.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::unitary::{INPUT_TOL, INVARIANT_TOL};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A lattice point `x` with non-negative coordinates, one per party.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn new(coords: Vec<usize>) -> Self {
        Self(coords)
    }

    pub fn origin(party_count: usize) -> Self {
        Self(vec![0; party_count])
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn party_count(&self) -> usize {
        self.0.len()
    }

    /// Largest coordinate; the level at which this point sits on the frontier.
    pub fn level(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Bit mask of coordinates equal to `k`.
    pub fn mask_at_level(&self, k: usize) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == k)
            .fold(0, |m, (j, _)| m | (1 << j))
    }

    /// `self + t * coin`, where `coin` is a bit mask over the parties.
    pub fn shifted(&self, coin: usize, t: usize) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(j, &x)| x + t * ((coin >> j) & 1))
                .collect(),
        )
    }

    pub(crate) fn linear(&self, d: usize) -> usize {
        linear_index(&self.0, d)
    }

    pub(crate) fn from_linear(mut lin: usize, party_count: usize, d: usize) -> Self {
        let mut coords = Vec::with_capacity(party_count);
        for _ in 0..party_count {
            coords.push(lin % d);
            lin /= d;
        }
        Self(coords)
    }
}

impl<const N: usize> From<[usize; N]> for Position {
    fn from(coords: [usize; N]) -> Self {
        Self(coords.to_vec())
    }
}

pub(crate) fn linear_index(coords: &[usize], d: usize) -> usize {
    coords.iter().rev().fold(0, |acc, &x| acc * d + x)
}

/// A coin basis label `|b_0 b_1 ... b_{c-1}>`; bit `j` says whether party
/// `j` steps forward under the shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoinIndex(usize);

impl CoinIndex {
    /// `|00>`: stay.
    pub const STAY: CoinIndex = CoinIndex(0);
    /// `|10>`: step along the first axis.
    pub const RIGHT: CoinIndex = CoinIndex(1);
    /// `|01>`: step along the second axis.
    pub const UP: CoinIndex = CoinIndex(2);
    /// `|11>`: diagonal step.
    pub const DIAG: CoinIndex = CoinIndex(3);

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut idx = 0;
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => idx |= 1 << j,
                other => {
                    return Err(Error::InvalidState(format!("coin bit {other} is not 0 or 1")));
                }
            }
        }
        Ok(Self(idx))
    }

    pub fn from_index(index: usize) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn bits(self, party_count: usize) -> Vec<u8> {
        (0..party_count).map(|j| ((self.0 >> j) & 1) as u8).collect()
    }
}

/// The normalized ket to be engineered: a dense rank-`c` tensor with every
/// axis of size `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    party_count: usize,
    dimension: usize,
    amplitudes: Vec<Complex64>,
}

impl TargetState {
    /// Validates the shape and the norm (within the input tolerance).
    pub fn new(party_count: usize, dimension: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if party_count == 0 || dimension == 0 {
            return Err(Error::InvalidState("party count and dimension must be positive".into()));
        }
        let expected = dimension
            .checked_pow(party_count as u32)
            .ok_or_else(|| Error::InvalidState("d^c overflows".into()))?;
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} amplitudes for c={party_count}, d={dimension}, got {}",
                amplitudes.len()
            )));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr.sqrt() - 1.0).abs() > INPUT_TOL {
            return Err(Error::InvalidState(format!("target norm is {}, expected 1", norm_sqr.sqrt())));
        }
        Ok(Self {
            party_count,
            dimension,
            amplitudes,
        })
    }

    /// Builds a target from `(coords, amplitude)` pairs; omitted entries are zero.
    pub fn from_sparse<I>(party_count: usize, dimension: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Complex64)>,
    {
        let len = dimension
            .checked_pow(party_count as u32)
            .ok_or_else(|| Error::InvalidState("d^c overflows".into()))?;
        let mut amplitudes = vec![ZERO; len];
        for (coords, a) in entries {
            if coords.len() != party_count || coords.iter().any(|&x| x >= dimension) {
                return Err(Error::IndexOutOfRange(format!(
                    "index {coords:?} for c={party_count}, d={dimension}"
                )));
            }
            amplitudes[linear_index(&coords, dimension)] += a;
        }
        Self::new(party_count, dimension, amplitudes)
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(party_count: usize, dimension: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Self::new(party_count, dimension, amplitudes)
    }

    /// The computational basis state `|coords>`.
    pub fn basis(party_count: usize, dimension: usize, coords: &[usize]) -> Result<Self> {
        Self::from_sparse(party_count, dimension, [(coords.to_vec(), Complex64::new(1.0, 0.0))])
    }

    /// Independent complex standard-normal amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(party_count: usize, dimension: usize, rng: &mut R) -> Self {
        let len = dimension.pow(party_count as u32);
        let amplitudes = (0..len)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(party_count, dimension, amplitudes).expect("gaussian draw is non-zero")
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, coords: &[usize]) -> Complex64 {
        self.amplitudes[linear_index(coords, self.dimension)]
    }

    pub fn at(&self, pos: &Position) -> Complex64 {
        self.get(pos.coords())
    }

    /// Amplitudes in linear order (party 0 varies fastest).
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Iterates `(position, amplitude)` over every grid point.
    pub fn iter(&self) -> impl Iterator<Item = (Position, Complex64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (Position::from_linear(i, self.party_count, self.dimension), *a))
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self ⊗ |0^c>` as a walk state.
    pub fn to_walk_state(&self) -> WalkState {
        let coin_dim = 1 << self.party_count;
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(i, a)| {
                let mut v = vec![ZERO; coin_dim];
                v[0] = *a;
                (i, v)
            })
            .collect();
        WalkState {
            party_count: self.party_count,
            dimension: self.dimension,
            amps,
        }
    }
}

/// A walker state in `H_P ⊗ H_C`, stored sparsely by position with a dense
/// `2^c` coin vector per populated position.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    party_count: usize,
    dimension: usize,
    pub(crate) amps: BTreeMap<usize, Vec<Complex64>>,
}

impl WalkState {
    /// `|0^c> ⊗ |0^c>`.
    pub fn origin(party_count: usize, dimension: usize) -> Self {
        let mut v = vec![ZERO; 1 << party_count];
        v[0] = Complex64::new(1.0, 0.0);
        let mut amps = BTreeMap::new();
        amps.insert(0, v);
        Self {
            party_count,
            dimension,
            amps,
        }
    }

    /// Builds a state from explicit `(position, coin, amplitude)` entries,
    /// validating grid bounds and normalization.
    pub fn from_entries<I>(party_count: usize, dimension: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Position, CoinIndex, Complex64)>,
    {
        let coin_dim = 1 << party_count;
        let mut amps: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for (pos, coin, a) in entries {
            if pos.party_count() != party_count || pos.coords().iter().any(|&x| x >= dimension) {
                return Err(Error::IndexOutOfRange(format!("position {:?}", pos.coords())));
            }
            if coin.index() >= coin_dim {
                return Err(Error::IndexOutOfRange(format!("coin {}", coin.index())));
            }
            amps.entry(pos.linear(dimension)).or_insert_with(|| vec![ZERO; coin_dim])[coin.index()] += a;
        }
        let state = Self {
            party_count,
            dimension,
            amps,
        };
        let n = state.norm();
        if (n - 1.0).abs() > INPUT_TOL {
            return Err(Error::InvalidState(format!("walk state norm is {n}, expected 1")));
        }
        Ok(state)
    }

    pub(crate) fn from_parts(party_count: usize, dimension: usize, amps: BTreeMap<usize, Vec<Complex64>>) -> Self {
        Self {
            party_count,
            dimension,
            amps,
        }
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn coin_dim(&self) -> usize {
        1 << self.party_count
    }

    pub fn amplitude(&self, pos: &Position, coin: CoinIndex) -> Complex64 {
        self.amps
            .get(&pos.linear(self.dimension))
            .map_or(ZERO, |v| v[coin.index()])
    }

    /// The coin vector at `pos`, if that position is populated.
    pub fn coin_vector(&self, pos: &Position) -> Option<&[Complex64]> {
        self.amps.get(&pos.linear(self.dimension)).map(Vec::as_slice)
    }

    /// Non-zero `(position, coin, amplitude)` entries in position order.
    pub fn iter(&self) -> impl Iterator<Item = (Position, CoinIndex, Complex64)> + '_ {
        self.amps.iter().flat_map(move |(&lin, v)| {
            let pos = Position::from_linear(lin, self.party_count, self.dimension);
            v.iter()
                .enumerate()
                .filter(|(_, a)| **a != ZERO)
                .map(move |(coin, a)| (pos.clone(), CoinIndex(coin), *a))
        })
    }

    /// Populated positions.
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        self.amps
            .keys()
            .map(move |&lin| Position::from_linear(lin, self.party_count, self.dimension))
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .values()
            .flat_map(|v| v.iter())
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Total probability outside the coin state `|0^c>`.
    pub fn coin_residual(&self) -> f64 {
        self.amps
            .values()
            .flat_map(|v| v.iter().skip(1))
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Largest probability at any position that is not carried by that
    /// position's dominant coin basis state. Zero when every position holds a
    /// single coin basis state.
    pub fn coin_spread(&self) -> f64 {
        self.amps
            .values()
            .map(|v| {
                let total: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                let top = v.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
                total - top
            })
            .fold(0.0, f64::max)
    }

    /// Dense vector indexed by `linear_position * 2^c + coin`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let coin_dim = self.coin_dim();
        let mut out = vec![ZERO; self.dimension.pow(self.party_count as u32) * coin_dim];
        for (&lin, v) in &self.amps {
            out[lin * coin_dim..(lin + 1) * coin_dim].copy_from_slice(v);
        }
        out
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &WalkState) -> Result<Complex64> {
        self.check_compatible(other)?;
        let mut acc = ZERO;
        for (lin, a) in &self.amps {
            if let Some(b) = other.amps.get(lin) {
                acc += a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
            }
        }
        Ok(acc)
    }

    fn check_compatible(&self, other: &WalkState) -> Result<()> {
        if self.party_count != other.party_count || self.dimension != other.dimension {
            return Err(Error::DimensionMismatch(format!(
                "(c={}, d={}) vs (c={}, d={})",
                self.party_count, self.dimension, other.party_count, other.dimension
            )));
        }
        Ok(())
    }

    /// Whether the norm is 1 to within the invariant tolerance.
    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= INVARIANT_TOL
    }
}

/// `|<a|b>|^2`, insensitive to global phase.
pub fn fidelity(a: &WalkState, b: &WalkState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Fidelity of a walk state against `target ⊗ |0^c>`.
pub fn target_fidelity(state: &WalkState, target: &TargetState) -> Result<f64> {
    if state.party_count() != target.party_count() || state.dimension() != target.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "state (c={}, d={}) vs target (c={}, d={})",
            state.party_count(),
            state.dimension(),
            target.party_count(),
            target.dimension()
        )));
    }
    let mut acc = ZERO;
    for (&lin, v) in &state.amps {
        acc += v[0].conj() * target.amplitudes[lin];
    }
    Ok(acc.norm_sqr().min(1.0))
}
