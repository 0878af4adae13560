//! Dense linear algebra over `Z/p^N` and over `Q`.
//!
//! Smith normal form over the local ring `Z/p^N` needs no gcd steps: the
//! entry of minimal valuation divides every other entry, so one pivot per
//! step clears its row and column.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::series::{inverse_mod, residue_valuation};
use crate::error::{Error, Result};
use crate::padic::Prime;

/// Dense row-major matrix with entries in `[0, p^N)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModMatrix {
    p: Prime,
    precision: u32,
    modulus: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ModMatrix {
    pub fn zeros(p: Prime, precision: u32, rows: usize, cols: usize) -> Result<Self> {
        let modulus = p
            .checked_pow(precision)
            .filter(|&m| m <= crate::algebra::MAX_MODULUS)
            .ok_or_else(|| Error::InvalidContext(format!("{p}^{precision} exceeds 2^31")))?;
        Ok(ModMatrix { p, precision, modulus, rows, cols, data: vec![0; rows * cols] })
    }

    /// Builds a matrix from signed integer rows, reducing each entry.
    pub fn from_rows(p: Prime, precision: u32, cols: usize, rows: &[Vec<i128>]) -> Result<Self> {
        let mut m = Self::zeros(p, precision, rows.len(), cols)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidConfig {
                    field: "matrix".into(),
                    reason: format!("row {i} has {} entries, expected {cols}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v.rem_euclid(m.modulus as i128) as u64);
            }
        }
        Ok(m)
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        debug_assert!(v < self.modulus);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Appends a row; `row` must already be reduced.
    pub fn push_row(&mut self, row: &[u64]) {
        assert_eq!(row.len(), self.cols, "row length");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Stacks the rows of `other` below `self`.
    pub fn stack(&self, other: &ModMatrix) -> ModMatrix {
        assert_eq!(self.cols, other.cols, "column count");
        assert_eq!(self.modulus, other.modulus, "modulus");
        let mut out = self.clone();
        out.data.extend_from_slice(&other.data);
        out.rows += other.rows;
        out
    }

    pub fn transpose(&self) -> ModMatrix {
        let mut out = ModMatrix { data: vec![0; self.data.len()], rows: self.cols, cols: self.rows, ..*self };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn mul(&self, other: &ModMatrix) -> ModMatrix {
        assert_eq!(self.cols, other.rows, "inner dimension");
        let m = self.modulus;
        let mut out = ModMatrix { data: vec![0; self.rows * other.cols], rows: self.rows, cols: other.cols, ..*self };
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(i, t);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = (out.data[idx] + a * other.get(t, j)) % m;
                }
            }
        }
        out
    }

    fn valuation(&self, v: u64) -> u32 {
        residue_valuation(v, self.p.get(), self.precision)
    }

    /// Row echelon form by row operations only; returns the nonzero rows.
    ///
    /// The rows span the same submodule of `(Z/p^N)^cols` as the input and
    /// there are at most `cols` of them.
    pub fn echelon_span(&self) -> ModMatrix {
        let m = self.modulus;
        let mut work: Vec<Vec<u64>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        work.retain(|r| r.iter().any(|&x| x != 0));
        let mut out = ModMatrix { data: Vec::new(), rows: 0, ..*self };
        for col in 0..self.cols {
            if work.is_empty() {
                break;
            }
            let Some((best, v)) = work
                .iter()
                .enumerate()
                .filter(|(_, r)| r[col] != 0)
                .map(|(i, r)| (i, self.valuation(r[col])))
                .min_by_key(|&(i, v)| (v, i))
            else {
                continue;
            };
            let mut pivot = work.swap_remove(best);
            let pv = self.p.get().pow(v);
            let unit = inverse_mod(pivot[col] / pv, m);
            for x in pivot.iter_mut() {
                *x = *x * unit % m;
            }
            for r in work.iter_mut() {
                if r[col] == 0 {
                    continue;
                }
                let c = r[col] / pv;
                for (x, &y) in r.iter_mut().zip(&pivot) {
                    *x = (*x + m - c * y % m) % m;
                }
            }
            work.retain(|r| r.iter().any(|&x| x != 0));
            out.push_row(&pivot);
        }
        out
    }
}

impl fmt::Display for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Isomorphism type of a finitely generated `Z/p^N`-module.
///
/// Represents `⊕ Z/p^{e_i} ⊕ (Z/p^N)^free_rank`. At precision `N` a divisor
/// `p^N` and a free summand cannot be told apart, so both count as free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianShape {
    pub torsion_exponents: Vec<u32>,
    pub free_rank: usize,
    pub precision: u32,
}

impl AbelianShape {
    pub fn trivial(precision: u32) -> Self {
        AbelianShape { torsion_exponents: Vec::new(), free_rank: 0, precision }
    }

    /// `log_p` of the torsion subgroup order.
    pub fn log_torsion(&self) -> u64 {
        self.torsion_exponents.iter().map(|&e| e as u64).sum()
    }

    /// `log_p` of the order of the whole module at precision `N`.
    pub fn log_order(&self) -> u64 {
        self.log_torsion() + self.free_rank as u64 * self.precision as u64
    }

    /// `N` minus the largest torsion exponent (`N` if there is no torsion).
    pub fn precision_margin(&self) -> u32 {
        self.precision - self.torsion_exponents.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.torsion_exponents.is_empty() && self.free_rank == 0
    }
}

impl fmt::Display for AbelianShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.torsion_exponents.iter().map(|e| format!("Z/p^{e}")).collect();
        if self.free_rank > 0 {
            parts.push(format!("(Z/p^{})^{}", self.precision, self.free_rank));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Smith normal form of the cokernel of `matrix` (rows are relations).
///
/// Pivot: the entry of minimal valuation in the remaining block, lowest
/// (row, column) on ties. Returns the module `(Z/p^N)^cols / rowspan`.
pub fn snf(matrix: &ModMatrix) -> AbelianShape {
    let m = matrix.modulus;
    let p = matrix.p.get();
    let n_prec = matrix.precision;
    let cols = matrix.cols;
    let mut rows: Vec<Vec<u64>> =
        (0..matrix.rows).map(|i| matrix.row(i).to_vec()).filter(|r| r.iter().any(|&x| x != 0)).collect();
    let mut live_cols: Vec<usize> = (0..cols).collect();
    let mut exponents = Vec::new();
    while !rows.is_empty() && !live_cols.is_empty() {
        let mut best: Option<(u32, usize, usize)> = None;
        'search: for (i, r) in rows.iter().enumerate() {
            for (jj, &j) in live_cols.iter().enumerate() {
                if r[j] == 0 {
                    continue;
                }
                let v = residue_valuation(r[j], p, n_prec);
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, jj));
                    if v == 0 {
                        break 'search;
                    }
                }
            }
        }
        let Some((v, pi, pjj)) = best else { break };
        let pivot_col = live_cols.remove(pjj);
        let pivot = rows.swap_remove(pi);
        let pv = p.pow(v);
        let unit = inverse_mod(pivot[pivot_col] / pv, m);
        // normalized pivot row, restricted to the columns still in play
        let scaled: Vec<(usize, u64)> =
            live_cols.iter().map(|&j| (j, pivot[j] * unit % m)).filter(|&(_, x)| x != 0).collect();
        let mut emptied = false;
        for r in rows.iter_mut() {
            let a = r[pivot_col];
            if a == 0 {
                continue;
            }
            let c = a / pv;
            r[pivot_col] = 0;
            let mut nonzero = false;
            for &(j, y) in &scaled {
                r[j] = (r[j] + m - c * y % m) % m;
                nonzero |= r[j] != 0;
            }
            // entries outside the pivot row's support are untouched
            if !nonzero && scaled.len() < live_cols.len() {
                nonzero = live_cols.iter().any(|&j| r[j] != 0);
            }
            if !nonzero {
                r.clear();
                emptied = true;
            }
        }
        if emptied {
            rows.retain(|r| !r.is_empty());
        }
        exponents.push(v);
    }
    let free_rank = live_cols.len();
    exponents.retain(|&e| e > 0);
    exponents.sort_unstable();
    AbelianShape { torsion_exponents: exponents, free_rank, precision: n_prec }
}

/// Solves the square system `a x = b` over `Q`; `None` if singular.
pub fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == n, "square system");
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(piv, col);
        b.swap(piv, col);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            let (pivot_row, row) = if r < col {
                let (lo, hi) = a.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = a.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            for (x, y) in row.iter_mut().zip(pivot_row) {
                *x = &*x - &f * y;
            }
            b[r] = &b[r] - &f * &b[col];
        }
    }
    Some(b)
}

pub fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// The integer value of `x`, if it is one.
pub fn as_integer(x: &BigRational) -> Option<BigInt> {
    x.is_integer().then(|| x.to_integer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    #[test]
    fn snf_examples() {
        let m = ModMatrix::from_rows(p3(), 5, 2, &[vec![3, 0], vec![0, 27]]).unwrap();
        let s = snf(&m);
        assert_eq!(s.torsion_exponents, vec![1, 3]);
        assert_eq!(s.free_rank, 0);
        assert_eq!(s.precision_margin(), 2);

        let z = ModMatrix::from_rows(p3(), 4, 1, &[vec![0]]).unwrap();
        assert_eq!(snf(&z), AbelianShape { torsion_exponents: vec![], free_rank: 1, precision: 4 });

        // p^N is zero at precision N
        let full = ModMatrix::from_rows(p3(), 3, 1, &[vec![27]]).unwrap();
        assert_eq!(snf(&full).free_rank, 1);

        let unit = ModMatrix::from_rows(p3(), 3, 2, &[vec![1, 3], vec![2, 9]]).unwrap();
        // det = 9 - 6 = 3
        assert_eq!(snf(&unit).torsion_exponents, vec![1]);
    }

    #[test]
    fn shape_display() {
        let s = AbelianShape { torsion_exponents: vec![1, 2], free_rank: 3, precision: 6 };
        assert_eq!(s.to_string(), "Z/p^1 + Z/p^2 + (Z/p^6)^3");
        assert_eq!(AbelianShape::trivial(6).to_string(), "0");
    }

    /// Cokernel order by enumerating the row span over `Z/3^k`.
    fn brute_force_log_order(m: &ModMatrix) -> u64 {
        use std::collections::HashSet;
        let modulus = m.modulus();
        let mut span: HashSet<Vec<u64>> = HashSet::new();
        span.insert(vec![0; m.cols()]);
        let mut frontier: Vec<Vec<u64>> = span.iter().cloned().collect();
        while let Some(v) = frontier.pop() {
            for i in 0..m.rows() {
                let w: Vec<u64> = v.iter().zip(m.row(i)).map(|(a, b)| (a + b) % modulus).collect();
                if span.insert(w.clone()) {
                    frontier.push(w);
                }
            }
        }
        let total = (m.cols() as u64) * m.precision() as u64;
        let mut size = span.len() as u64;
        let mut log = 0;
        while size > 1 {
            size /= 3;
            log += 1;
        }
        total - log
    }

    #[test]
    fn snf_matches_span_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let rows = rng.random_range(1..4);
            let cols = rng.random_range(1..4);
            let prec = rng.random_range(2..4);
            let data: Vec<Vec<i128>> = (0..rows)
                .map(|_| (0..cols).map(|_| if rng.random_bool(0.5) { 3 * rng.random_range(0..9) } else { rng.random_range(0..27) }).collect())
                .collect();
            let m = ModMatrix::from_rows(p3(), prec, cols, &data).unwrap();
            assert_eq!(snf(&m).log_order(), brute_force_log_order(&m), "{m}");
        }
    }

    fn arb_matrix() -> impl Strategy<Value = ModMatrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0i128..729, c), r)
                .prop_map(move |rows| ModMatrix::from_rows(Prime::new(3).unwrap(), 6, c, &rows).unwrap())
        })
    }

    fn permuted(m: &ModMatrix, seed: u64) -> ModMatrix {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ri: Vec<usize> = (0..m.rows()).collect();
        let mut ci: Vec<usize> = (0..m.cols()).collect();
        ri.shuffle(&mut rng);
        ci.shuffle(&mut rng);
        let mut out = ModMatrix::zeros(m.prime(), m.precision(), m.rows(), m.cols()).unwrap();
        for (i, &si) in ri.iter().enumerate() {
            for (j, &sj) in ci.iter().enumerate() {
                out.set(i, j, m.get(si, sj));
            }
        }
        out
    }

    /// Random unimodular matrix: product of elementary matrices.
    fn unimodular(n: usize, seed: u64) -> ModMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = ModMatrix::zeros(p3(), 6, n, n).unwrap();
        for i in 0..n {
            u.set(i, i, 1);
        }
        for _ in 0..3 * n {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i == j {
                continue;
            }
            let c = rng.random_range(0..729u64);
            let mut e = ModMatrix::zeros(p3(), 6, n, n).unwrap();
            for k in 0..n {
                e.set(k, k, 1);
            }
            e.set(i, j, c);
            u = e.mul(&u);
        }
        u
    }

    proptest! {
        #[test]
        fn snf_invariant_under_permutation(m in arb_matrix(), seed in any::<u64>()) {
            prop_assert_eq!(snf(&m), snf(&permuted(&m, seed)));
        }

        #[test]
        fn snf_invariant_under_unimodular_rows(m in arb_matrix(), seed in any::<u64>()) {
            let u = unimodular(m.rows(), seed);
            prop_assert_eq!(snf(&m), snf(&u.mul(&m)));
        }

        #[test]
        fn echelon_span_preserves_span(m in arb_matrix()) {
            let e = m.echelon_span();
            prop_assert!(e.rows() <= m.cols());
            prop_assert_eq!(snf(&e), snf(&m));
            prop_assert_eq!(snf(&e.stack(&m)), snf(&m));
        }
    }

    #[test]
    fn rational_solve() {
        let a = vec![vec![rational(2), rational(1)], vec![rational(1), rational(3)]];
        let b = vec![rational(5), rational(10)];
        assert_eq!(solve_rational(a, b).unwrap(), vec![rational(1), rational(3)]);
        let sing = vec![vec![rational(1), rational(2)], vec![rational(2), rational(4)]];
        assert!(solve_rational(sing, vec![rational(1), rational(2)]).is_none());
    }
}
