//! Characteristic elements of square presentations over `Λ_1`.
//!
//! The determinant is computed by fraction-free (Bareiss) elimination on the
//! integer lifts of the entries, so every intermediate division is exact in
//! `Z[T]`. Reducing the integer determinant modulo `p^N` gives the
//! determinant over `(Z/p^N)[T]`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::series::{PrecisionContext, SeriesElement};
use crate::error::{Error, Result};
use crate::padic::Prime;

/// Largest matrix accepted by [`char_poly`].
pub const MAX_CHAR_POLY_SIZE: usize = 12;

/// Dense integer polynomial, lowest degree first, no trailing zeros.
pub type IntPoly = Vec<BigInt>;

fn trim(p: &mut IntPoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

pub fn int_poly_mul(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn int_poly_sub(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let mut out = vec![BigInt::zero(); a.len().max(b.len())];
    for (i, slot) in out.iter_mut().enumerate() {
        if let Some(x) = a.get(i) {
            *slot += x;
        }
        if let Some(y) = b.get(i) {
            *slot -= y;
        }
    }
    trim(&mut out);
    out
}

/// Exact quotient `a / b` in `Z[T]`; panics if `b` does not divide `a`.
fn int_poly_div_exact(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    assert!(!b.is_empty(), "division by zero polynomial");
    let mut r: IntPoly = a.to_vec();
    trim(&mut r);
    if r.is_empty() {
        return r;
    }
    let db = b.len() - 1;
    let lead = b.last().unwrap();
    let mut q = vec![BigInt::zero(); r.len().saturating_sub(db).max(1)];
    while r.len() > db {
        let k = r.len() - 1 - db;
        let (c, rem) = r.last().unwrap().div_rem(lead);
        assert!(rem.is_zero(), "inexact Bareiss division");
        for (i, bi) in b.iter().enumerate() {
            r[k + i] -= &c * bi;
        }
        q[k] = c;
        trim(&mut r);
    }
    assert!(r.is_empty(), "inexact Bareiss division");
    trim(&mut q);
    q
}

fn ord(c: &BigInt, p: &BigInt) -> u64 {
    let mut c = c.abs();
    let mut v = 0;
    while (&c % p).is_zero() {
        c /= p;
        v += 1;
    }
    v
}

/// Pivot key: (content valuation, degree).
fn pivot_key(f: &IntPoly, p: &BigInt) -> (u64, usize) {
    let v = f.iter().filter(|c| !c.is_zero()).map(|c| ord(c, p)).min().unwrap_or(u64::MAX);
    (v, f.len())
}

/// Determinant over `Z[T]` by Bareiss elimination.
pub fn int_poly_determinant(mut a: Vec<Vec<IntPoly>>, p: Prime) -> IntPoly {
    let k = a.len();
    if k == 0 {
        return vec![BigInt::one()];
    }
    let pb = BigInt::from(p.get());
    let mut prev: IntPoly = vec![BigInt::one()];
    let mut negate = false;
    for col in 0..k {
        // minimal (valuation, degree), lowest row on ties
        let pivot_row = (col..k)
            .filter(|&r| !a[r][col].is_empty())
            .min_by_key(|&r| (pivot_key(&a[r][col], &pb), r));
        let Some(pr) = pivot_row else {
            return Vec::new();
        };
        if pr != col {
            a.swap(pr, col);
            negate = !negate;
        }
        for r in col + 1..k {
            for c in col + 1..k {
                let t = int_poly_sub(
                    &int_poly_mul(&a[col][col], &a[r][c]),
                    &int_poly_mul(&a[r][col], &a[col][c]),
                );
                a[r][c] = int_poly_div_exact(&t, &prev);
            }
            a[r][col] = Vec::new();
        }
        prev = a[col][col].clone();
    }
    let mut det = a[k - 1][k - 1].clone();
    if negate {
        det.iter_mut().for_each(|c| *c = -&*c);
    }
    det
}

/// Integer lift of a univariate element: coefficients in `[0, p^N)`.
pub fn lift_univariate(f: &SeriesElement) -> IntPoly {
    let mut out: IntPoly = f.to_univariate().into_iter().map(BigInt::from).collect();
    trim(&mut out);
    out
}

fn check_square(m: &[Vec<SeriesElement>]) -> Result<(usize, PrecisionContext)> {
    let k = m.len();
    let ctx = match m.first().and_then(|row| row.first()) {
        Some(e) => *e.context(),
        None => return Err(Error::NotSquare { rows: k, cols: 0 }),
    };
    for row in m {
        if row.len() != k {
            return Err(Error::NotSquare { rows: k, cols: row.len() });
        }
        for e in row {
            if *e.context() != ctx {
                return Err(Error::ContextMismatch);
            }
        }
    }
    if ctx.vars() != 1 {
        return Err(Error::HypothesisViolated(format!(
            "characteristic element needs d = 1, got d = {}",
            ctx.vars()
        )));
    }
    if k > MAX_CHAR_POLY_SIZE {
        return Err(Error::DimensionOverflow { dim: k, bound: MAX_CHAR_POLY_SIZE });
    }
    Ok((k, ctx))
}

/// Determinant of a square matrix over `Λ_1`, reduced modulo `p^N`.
///
/// A nonzero result certifies that the cokernel is `Λ`-torsion with
/// characteristic ideal generated by the determinant.
pub fn char_poly(matrix: &[Vec<SeriesElement>]) -> Result<SeriesElement> {
    let (_, ctx) = check_square(matrix)?;
    let lifted: Vec<Vec<IntPoly>> =
        matrix.iter().map(|row| row.iter().map(lift_univariate).collect()).collect();
    let det = int_poly_determinant(lifted, ctx.prime());
    let coeffs: Vec<u64> = det.iter().map(|c| ctx.reduce_big(c)).collect();
    let det = SeriesElement::from_univariate(ctx, &coeffs);
    let truncated = det.truncated();
    if truncated.is_zero() {
        return Err(Error::PrecisionExhausted(format!(
            "determinant vanishes modulo ({}^{}, T^{})",
            ctx.prime(),
            ctx.precision(),
            ctx.degree_bound() + 1
        )));
    }
    if let Some(deg) = det.degree_in(0) {
        if deg > ctx.degree_bound() {
            return Err(Error::DegreeOverflow { degree: deg, bound: ctx.degree_bound() });
        }
    }
    Ok(det)
}

/// Matrix product over `Λ_1` (exact polynomial arithmetic).
pub fn matrix_product(a: &[Vec<SeriesElement>], b: &[Vec<SeriesElement>]) -> Vec<Vec<SeriesElement>> {
    let ctx = *a[0][0].context();
    let inner = b.len();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| {
                    let mut acc = SeriesElement::zero(ctx);
                    for t in 0..inner {
                        acc = &acc + &row[t].checked_mul_exact(&b[t][j]).expect("same context");
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_element;
    use proptest::prelude::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(Prime::new(3).unwrap(), 8, 1, 40).unwrap()
    }

    fn mat(rows: &[&[&str]]) -> Vec<Vec<SeriesElement>> {
        rows.iter()
            .map(|r| r.iter().map(|s| parse_element(ctx(), s).unwrap()).collect())
            .collect()
    }

    #[test]
    fn determinant_examples() {
        let c = ctx();
        assert_eq!(char_poly(&mat(&[&["p^2", "0"], &["0", "T - p"]])).unwrap(), parse_element(c, "p^2*(T - p)").unwrap());
        assert_eq!(char_poly(&mat(&[&["T", "p"], &["p", "T"]])).unwrap(), parse_element(c, "T^2 - p^2").unwrap());
        assert_eq!(char_poly(&mat(&[&["1", "0"], &["0", "1"]])).unwrap(), SeriesElement::one(c));
    }

    #[test]
    fn pivoting_through_zero_leading_entry() {
        let c = ctx();
        let m = mat(&[&["0", "T", "1"], &["1", "0", "p"], &["T", "1", "0"]]);
        // expansion along the first row: -T*(0 - p*T) + 1*(1 - 0) = p*T^2 + 1
        assert_eq!(char_poly(&m).unwrap(), parse_element(c, "p*T^2 + 1").unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(char_poly(&mat(&[&["T", "T"], &["T", "T"]])), Err(Error::PrecisionExhausted(_))));
        assert!(matches!(char_poly(&mat(&[&["p^8"]])), Err(Error::PrecisionExhausted(_))));
        assert!(matches!(char_poly(&mat(&[&["T", "1"]])), Err(Error::NotSquare { rows: 1, cols: 2 })));
    }

    fn laplace(m: &[Vec<IntPoly>]) -> IntPoly {
        if m.len() == 1 {
            return m[0][0].clone();
        }
        let mut acc: IntPoly = Vec::new();
        for j in 0..m.len() {
            let minor: Vec<Vec<IntPoly>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, e)| e.clone()).collect())
                .collect();
            let term = int_poly_mul(&m[0][j], &laplace(&minor));
            acc = if j % 2 == 0 {
                let neg: IntPoly = term.iter().map(|c| -c).collect();
                int_poly_sub(&acc, &neg)
            } else {
                int_poly_sub(&acc, &term)
            };
        }
        acc
    }

    fn arb_matrix(k: usize) -> impl Strategy<Value = Vec<Vec<SeriesElement>>> {
        proptest::collection::vec(proptest::collection::vec(0u64..50, 1..4), k * k).prop_map(move |flat| {
            flat.chunks(k)
                .map(|row| row.iter().map(|v| SeriesElement::from_univariate(ctx(), v)).collect())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn bareiss_matches_cofactor_expansion(m in arb_matrix(3)) {
            let lifted: Vec<Vec<IntPoly>> = m.iter().map(|r| r.iter().map(lift_univariate).collect()).collect();
            prop_assert_eq!(int_poly_determinant(lifted.clone(), Prime::new(3).unwrap()), laplace(&lifted));
        }

        #[test]
        fn determinant_is_multiplicative(a in arb_matrix(2), b in arb_matrix(2)) {
            let ab = matrix_product(&a, &b);
            match (char_poly(&a), char_poly(&b), char_poly(&ab)) {
                (Ok(da), Ok(db), Ok(dab)) => prop_assert_eq!(da.checked_mul_exact(&db).unwrap(), dab),
                (Ok(da), Ok(db), Err(_)) => prop_assert!(da.checked_mul_exact(&db).unwrap().truncated().is_zero()),
                _ => {}
            }
        }
    }
}
