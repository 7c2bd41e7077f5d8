//! Dense coin blocks and unitary completion.
//!
//! A coin block acts on the `2^c`-dimensional coin register. Basis index `i`
//! encodes the coin bit vector with party `j` on bit `j`, so for two parties
//! index 0 is `|00>`, 1 is `|10>` (step along x), 2 is `|01>` (step along y)
//! and 3 is `|11>` (diagonal).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for invariant checks on emitted blocks and states.
pub const INVARIANT_TOL: f64 = 1e-12;
/// Tolerance for validating user-supplied data.
pub const INPUT_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A square unitary acting on the coin register, stored row-major.
#[derive(Clone, PartialEq)]
pub struct UnitaryBlock {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for UnitaryBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "UnitaryBlock({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl UnitaryBlock {
    /// Builds a block from row-major entries, rejecting anything that is not
    /// unitary to within [`INPUT_TOL`].
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} block, got {}",
                dim * dim,
                data.len()
            )));
        }
        let block = Self { dim, data };
        let deviation = block.unitarity_error();
        if deviation > INPUT_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(block)
    }

    pub fn identity(dim: usize) -> Self {
        Self::phased_identity(dim, ONE)
    }

    /// `phase * I`.
    pub fn phased_identity(dim: usize, phase: Complex64) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = phase;
        }
        Self { dim, data }
    }

    /// The permutation `|z> -> |z xor mask>`, i.e. Pauli X on every coin
    /// qubit selected by `mask`.
    pub fn xor_permutation(dim: usize, mask: usize) -> Self {
        assert!(mask < dim, "mask {mask} outside a {dim}-dimensional coin");
        let mut data = vec![ZERO; dim * dim];
        for z in 0..dim {
            data[(z ^ mask) * dim + z] = ONE;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim)
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.get(r, c).conj();
            }
        }
        Self { dim: n, data }
    }

    /// Matrix product `self * rhs`: `rhs` acts first.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "block dimensions differ");
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * rhs.get(k, c);
                }
            }
        }
        Self { dim: n, data }
    }

    /// Applies the block to a coin vector in place.
    pub fn apply(&self, coin: &mut [Complex64]) {
        assert_eq!(coin.len(), self.dim);
        let input = coin.to_vec();
        for (r, out) in coin.iter_mut().enumerate() {
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            *out = row
                .iter()
                .zip(&input)
                .filter(|(_, v)| **v != ZERO)
                .map(|(a, v)| a * v)
                .sum();
        }
    }

    /// `max |(U^dag U - I)_{ij}|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Exact comparison against the identity.
    pub fn is_identity(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| self.get(r, c) == if r == c { ONE } else { ZERO }))
    }

    /// Largest entrywise distance to another block of the same size.
    pub fn max_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Completes a partial set of orthonormal columns to a full unitary.
///
/// Free columns are produced by Gram-Schmidt over the canonical basis in index
/// order, skipping basis vectors whose residual against the current span is
/// below [`INPUT_TOL`], and are assigned to the free column slots in ascending
/// order. Prescribed columns are copied verbatim.
pub fn complete_unitary(dim: usize, prescribed: &BTreeMap<usize, Vec<Complex64>>) -> Result<UnitaryBlock> {
    for (&idx, col) in prescribed {
        if idx >= dim {
            return Err(Error::IndexOutOfRange(format!("column {idx} in a {dim}x{dim} block")));
        }
        if col.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "column {idx} has length {}, expected {dim}",
                col.len()
            )));
        }
    }
    let cols: Vec<(usize, &Vec<Complex64>)> = prescribed.iter().map(|(i, c)| (*i, c)).collect();
    for (a, &(i, ci)) in cols.iter().enumerate() {
        for &(j, cj) in &cols[a..] {
            let ip = inner(ci, cj);
            let expected = if i == j { ONE } else { ZERO };
            if (ip - expected).norm() > INPUT_TOL {
                return Err(Error::NonOrthonormalInput {
                    first: i,
                    second: j,
                    inner: ip.norm(),
                });
            }
        }
    }

    let mut basis: Vec<Vec<Complex64>> = prescribed.values().cloned().collect();
    let mut generated = Vec::with_capacity(dim - basis.len());
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![ZERO; dim];
        v[e] = ONE;
        // Two passes of classical Gram-Schmidt keep the result orthogonal to
        // machine precision even when the first residual is small.
        for _ in 0..2 {
            for u in &basis {
                let p = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let r = norm(&v);
        if r <= INPUT_TOL {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= r);
        basis.push(v.clone());
        generated.push(v);
    }
    debug_assert_eq!(basis.len(), dim);

    let mut data = vec![ZERO; dim * dim];
    let mut fresh = generated.into_iter();
    for c in 0..dim {
        let col = match prescribed.get(&c) {
            Some(col) => col.clone(),
            None => fresh.next().expect("completion produced too few columns"),
        };
        for (r, z) in col.into_iter().enumerate() {
            data[r * dim + c] = z;
        }
    }
    Ok(UnitaryBlock { dim, data })
}

/// Convenience wrapper: complete a unitary whose column 0 is `first`.
pub fn complete_from_first_column(first: Vec<Complex64>) -> Result<UnitaryBlock> {
    let dim = first.len();
    let mut prescribed = BTreeMap::new();
    prescribed.insert(0, first);
    complete_unitary(dim, &prescribed)
}
