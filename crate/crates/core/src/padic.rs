//! p-adic valuations of integers and the closed forms for valuations of
//! `b^{p^n} - 1` and of finite-field cohomology orders `ord_p(q^j - 1)`.
//!
//! Everything here is exact big-integer arithmetic.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Default largest `n` for which [`valuation_tower_checked`] exponentiates.
pub const DEFAULT_CHECK_BOUND: u32 = 6;

/// A rational prime, verified at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    /// Like [`Prime::new`] but additionally rejects `p = 2`.
    pub fn odd(p: u64) -> Result<Self> {
        Prime::new(p)?.require_odd()
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn is_odd(self) -> bool {
        self.0 != 2
    }

    pub fn require_odd(self) -> Result<Self> {
        if self.is_odd() {
            Ok(self)
        } else {
            Err(Error::OddPrimeRequired(self.0))
        }
    }

    /// `p^e` as a `u64`, `None` on overflow.
    pub fn checked_pow(self, e: u32) -> Option<u64> {
        self.0.checked_pow(e)
    }

    pub fn big(self) -> BigUint {
        BigUint::from(self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `ord_p` of an integer, with `+inf` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Splits `q = ℓ^f` with `ℓ` prime and `f ≥ 1`.
pub fn prime_power_parts(q: u64) -> Option<(Prime, u32)> {
    if q < 2 {
        return None;
    }
    let mut m = q;
    let mut ell = None;
    let mut d = 2u64;
    while d.saturating_mul(d) <= m {
        if m % d == 0 {
            ell = Some(d);
            break;
        }
        d += 1;
    }
    let ell = ell.unwrap_or(m);
    let mut f = 0;
    while m % ell == 0 {
        m /= ell;
        f += 1;
    }
    (m == 1).then(|| (Prime(ell), f))
}

/// Largest `e` with `p^e | x`.
pub fn ord_p(x: i128, p: Prime) -> Result<u32> {
    if x == 0 {
        return Err(Error::ZeroInput);
    }
    let p = p.0 as u128;
    let mut x = x.unsigned_abs();
    let mut e = 0;
    while x % p == 0 {
        x /= p;
        e += 1;
    }
    Ok(e)
}

/// [`ord_p`] for arbitrary-size integers.
pub fn ord_p_big(x: &BigInt, p: Prime) -> Result<u32> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    Ok(ord_p_biguint(x.magnitude(), p))
}

fn ord_p_biguint(x: &BigUint, p: Prime) -> u32 {
    debug_assert!(!x.is_zero());
    let pb = p.big();
    let mut x = x.clone();
    let mut e = 0;
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return e;
        }
        x = q;
        e += 1;
    }
}

/// Total valuation, `Infinite` for zero.
pub fn valuation(x: &BigInt, p: Prime) -> Valuation {
    match ord_p_big(x, p) {
        Ok(v) => Valuation::Finite(v),
        Err(_) => Valuation::Infinite,
    }
}

/// `ord_p(b^{p^n} - 1) = ord_p(b - 1) + n` for odd `p` and `p | b - 1`.
///
/// Returns the closed form; see [`valuation_tower_checked`] for the variant
/// that also exponentiates.
pub fn valuation_tower(b: impl Into<BigUint>, p: Prime, n: u32) -> Result<u32> {
    let b = b.into();
    tower_base_valuation(&b, p).map(|a| a + n)
}

fn tower_base_valuation(b: &BigUint, p: Prime) -> Result<u32> {
    p.require_odd()?;
    if *b < BigUint::from(2u32) {
        return Err(Error::HypothesisViolated(format!("b = {b} must be at least 2")));
    }
    let a = ord_p_biguint(&(b - 1u32), p);
    if a == 0 {
        return Err(Error::HypothesisViolated(format!(
            "ord_{p}(b - 1) = 0 for b = {b}"
        )));
    }
    Ok(a)
}

/// `ord_p(b^{p^n} - 1)` by exact exponentiation.
pub fn valuation_tower_direct(b: &BigUint, p: Prime, n: u32) -> u32 {
    let mut x = b.clone();
    for _ in 0..n {
        x = x.pow(p.0 as u32);
    }
    ord_p_biguint(&(x - 1u32), p)
}

/// [`valuation_tower`], additionally checking the closed form against exact
/// exponentiation whenever `n <= check_bound`.
pub fn valuation_tower_checked(
    b: impl Into<BigUint>,
    p: Prime,
    n: u32,
    check_bound: u32,
) -> Result<u32> {
    let b = b.into();
    let closed = tower_base_valuation(&b, p)? + n;
    if n <= check_bound {
        let direct = valuation_tower_direct(&b, p, n);
        if direct != closed {
            return Err(Error::HypothesisViolated(format!(
                "closed form {closed} disagrees with ord_{p}({b}^({p}^{n}) - 1) = {direct}"
            )));
        }
    }
    Ok(closed)
}

fn check_residue_field(q: u64, i: u32, p: Prime) -> Result<()> {
    if i < 2 {
        return Err(Error::HypothesisViolated(format!("twist i = {i} must be at least 2")));
    }
    if prime_power_parts(q).is_none() {
        return Err(Error::NotPrimePower(q));
    }
    if q % p.0 == 0 {
        return Err(Error::ResidueCharacteristicP { q, p: p.0 });
    }
    Ok(())
}

/// `log_p |H^1(k, Z_p(i-1))| = ord_p(q^{i-1} - 1)` for a finite field of
/// order `q` prime to `p`.
pub fn h1_local_order(q: u64, i: u32, p: Prime) -> Result<u32> {
    check_residue_field(q, i, p)?;
    let x = BigUint::from(q).pow(i - 1) - 1u32;
    // q >= 2 and i >= 2, so x >= 1.
    Ok(ord_p_biguint(&x, p))
}

/// Same as [`h1_local_order`] over the degree-`p^n` extension of the residue
/// field: `ord_p(q^{(i-1)p^n} - 1)`.
pub fn h1_local_order_tower(q: u64, i: u32, p: Prime, n: u32) -> Result<u32> {
    p.require_odd()?;
    let a = h1_local_order(q, i, p)?;
    if a == 0 {
        // p odd and p ∤ q^{i-1} - 1: the multiplicative order of q^{i-1}
        // mod p is prime to p, so raising to p^n never reaches 1 mod p.
        return Ok(0);
    }
    valuation_tower(BigUint::from(q).pow(i - 1), p, n)
}

/// Exponent of `p` in a single cyclic-factor order, or `None` if the order is
/// not a power of `p` (including 1).
pub fn p_power_exponent(order: u64, p: Prime) -> Option<u32> {
    if order < 2 {
        return None;
    }
    match prime_power_parts(order) {
        Some((ell, f)) if ell == p => Some(f),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: u64) -> Prime {
        Prime::new(x).unwrap()
    }

    #[test]
    fn ord_examples() {
        assert_eq!(ord_p(63, p(3)), Ok(2));
        assert_eq!(ord_p(1, p(5)), Ok(0));
        assert_eq!(ord_p(-250, p(5)), Ok(3));
        assert_eq!(ord_p(0, p(5)), Err(Error::ZeroInput));
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(3215031751));
        assert_eq!(Prime::new(9), Err(Error::NotPrime(9)));
        assert_eq!(Prime::odd(2), Err(Error::OddPrimeRequired(2)));
    }

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power_parts(49), Some((p(7), 2)));
        assert_eq!(prime_power_parts(2), Some((p(2), 1)));
        assert_eq!(prime_power_parts(12), None);
        assert_eq!(prime_power_parts(1), None);
        assert_eq!(p_power_exponent(9, p(3)), Some(2));
        assert_eq!(p_power_exponent(37, p(3)), None);
    }

    #[test]
    fn valuation_tower_examples() {
        assert_eq!(valuation_tower_checked(4u32, p(3), 1, 6), Ok(2));
        assert_eq!(valuation_tower(4u32, p(3), 0), Ok(1));
        // ord_5(6^125 - 1), with 6^125 computed exactly.
        assert_eq!(valuation_tower_direct(&BigUint::from(6u32), p(5), 3), 4);
        assert_eq!(valuation_tower_checked(6u32, p(5), 3, 6), Ok(4));
        // closed form beyond the checked bound
        assert_eq!(valuation_tower_checked(6u32, p(5), 40, 6), Ok(41));
    }

    #[test]
    fn valuation_tower_errors() {
        assert!(matches!(valuation_tower(5u32, p(3), 1), Err(Error::HypothesisViolated(_))));
        assert_eq!(valuation_tower(3u32, p(2), 1), Err(Error::OddPrimeRequired(2)));
    }

    #[test]
    fn h1_examples() {
        assert_eq!(h1_local_order(4, 2, p(3)), Ok(1));
        assert_eq!(h1_local_order(2, 4, p(7)), Ok(1));
        assert_eq!(h1_local_order(5, 2, p(3)), Ok(0));
        assert_eq!(h1_local_order(9, 2, p(3)), Err(Error::ResidueCharacteristicP { q: 9, p: 3 }));
        assert_eq!(h1_local_order(6, 2, p(5)), Err(Error::NotPrimePower(6)));
        assert_eq!(h1_local_order_tower(4, 2, p(3), 2), Ok(3));
        assert_eq!(h1_local_order_tower(5, 2, p(3), 5), Ok(0));
        assert_eq!(h1_local_order_tower(4, 2, p(3), 0), Ok(1));
    }

    #[test]
    fn h1_tower_matches_direct_exponentiation() {
        for q in [2u64, 4, 5, 7, 8, 11, 13, 16, 25] {
            for i in 2..5 {
                for n in 0..4 {
                    let pr = p(3);
                    if q % 3 == 0 {
                        continue;
                    }
                    let x = BigUint::from(q).pow((i - 1) * 3u32.pow(n)) - 1u32;
                    assert_eq!(
                        h1_local_order_tower(q, i, pr, n).unwrap(),
                        ord_p_biguint(&x, pr),
                        "q={q} i={i} n={n}"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn ord_is_additive(x in 1i64..1_000_000, y in 1i64..1_000_000, pi in 0usize..4) {
            let pr = p([2, 3, 5, 7][pi]);
            let xy = x as i128 * y as i128;
            prop_assert_eq!(ord_p(xy, pr).unwrap(), ord_p(x as i128, pr).unwrap() + ord_p(y as i128, pr).unwrap());
        }

        #[test]
        fn ord_of_sum_is_ultrametric(x in 1i64..1_000_000, y in 1i64..1_000_000, pi in 0usize..4) {
            let pr = p([2, 3, 5, 7][pi]);
            let (vx, vy) = (ord_p(x as i128, pr).unwrap(), ord_p(y as i128, pr).unwrap());
            let vs = ord_p(x as i128 + y as i128, pr).unwrap();
            prop_assert!(vs >= vx.min(vy));
            if vx != vy {
                prop_assert_eq!(vs, vx.min(vy));
            }
        }

        #[test]
        fn tower_closed_form_for_a_equal_one(m in 1u64..200, pi in 0usize..3, n in 0u32..5) {
            let pv = [3u64, 5, 7][pi];
            let pr = p(pv);
            // b ≡ 1 mod p, b ≢ 1 mod p^2
            let b = 1 + pv * (m * pv + 1 + m % (pv - 1));
            prop_assume!((b - 1) % (pv * pv) != 0);
            prop_assert_eq!(valuation_tower_checked(b, pr, n, 6).unwrap(), 1 + n);
        }

        #[test]
        fn h1_tower_steps_by_one_once_positive(q in 2u64..500, i in 2u32..5) {
            let pr = p(5);
            prop_assume!(prime_power_parts(q).is_some() && q % 5 != 0);
            let vals: Vec<u32> = (0..6).map(|n| h1_local_order_tower(q, i, pr, n).unwrap()).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] >= w[0]);
                if w[0] > 0 {
                    prop_assert_eq!(w[1], w[0] + 1);
                } else {
                    prop_assert_eq!(w[1], 0);
                }
            }
        }
    }
}
