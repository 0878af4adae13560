use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{Prime, Valuation};

/// Largest modulus we accept; keeps every product of two residues in a `u64`.
pub const MAX_MODULUS: u64 = 1 << 31;

/// Working precision for the truncated Iwasawa algebra
/// `(Z/p^N)[[T_1, ..., T_d]] / (T_j^{D+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    p: Prime,
    precision: u32,
    vars: usize,
    degree_bound: usize,
    modulus: u64,
}

impl PrecisionContext {
    pub fn new(p: Prime, precision: u32, vars: usize, degree_bound: usize) -> Result<Self> {
        p.require_odd()?;
        if precision < 2 {
            return Err(Error::InvalidContext(format!("N = {precision} must be at least 2")));
        }
        if vars < 1 {
            return Err(Error::InvalidContext("d must be at least 1".into()));
        }
        if degree_bound < 1 {
            return Err(Error::InvalidContext("D must be at least 1".into()));
        }
        let modulus = p
            .checked_pow(precision)
            .filter(|&m| m <= MAX_MODULUS)
            .ok_or_else(|| {
                Error::InvalidContext(format!("{p}^{precision} exceeds 2^31"))
            })?;
        Ok(PrecisionContext { p, precision, vars, degree_bound, modulus })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// `p^N`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The same ring in a different number of variables.
    pub fn with_vars(&self, vars: usize) -> Result<Self> {
        PrecisionContext::new(self.p, self.precision, vars, self.degree_bound)
    }

    pub fn reduce_i128(&self, c: i128) -> u64 {
        c.rem_euclid(self.modulus as i128) as u64
    }

    pub fn reduce_big(&self, c: &BigInt) -> u64 {
        c.mod_floor(&BigInt::from(self.modulus)).to_u64().expect("residue fits")
    }

    pub fn reduce_biguint(&self, c: &BigUint) -> u64 {
        (c % self.modulus).to_u64().expect("residue fits")
    }

    /// `ord_p` of a residue, `N` for zero.
    pub fn residue_valuation(&self, c: u64) -> u32 {
        residue_valuation(c, self.p.get(), self.precision)
    }

    /// Residue as the representative in `(-p^N/2, p^N/2]`.
    pub fn symmetric(&self, c: u64) -> i64 {
        if c > self.modulus / 2 {
            c as i64 - self.modulus as i64
        } else {
            c as i64
        }
    }
}

pub(crate) fn residue_valuation(mut c: u64, p: u64, precision: u32) -> u32 {
    if c == 0 {
        return precision;
    }
    let mut v = 0;
    while c % p == 0 {
        c /= p;
        v += 1;
    }
    v
}

/// Inverse of a unit modulo `m`.
pub(crate) fn inverse_mod(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "{a} is not a unit mod {m}");
    old_s.rem_euclid(m as i128) as u64
}

/// Exponent vector of a monomial `T_1^{e_1} ... T_d^{e_d}`.
pub type Exponents = Vec<u32>;

/// A truncated element of the Iwasawa algebra: a sparse polynomial over
/// `Z/p^N` in the context's `d` variables. No stored coefficient is zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SeriesElement {
    ctx: PrecisionContext,
    terms: BTreeMap<Exponents, u64>,
}

impl SeriesElement {
    pub fn zero(ctx: PrecisionContext) -> Self {
        SeriesElement { ctx, terms: BTreeMap::new() }
    }

    pub fn constant(ctx: PrecisionContext, c: i128) -> Self {
        Self::monomial(ctx, vec![0; ctx.vars], c)
    }

    pub fn one(ctx: PrecisionContext) -> Self {
        Self::constant(ctx, 1)
    }

    /// The variable `T_j` (0-based).
    pub fn variable(ctx: PrecisionContext, j: usize) -> Self {
        assert!(j < ctx.vars, "variable index {j} out of range");
        let mut e = vec![0; ctx.vars];
        e[j] = 1;
        Self::monomial(ctx, e, 1)
    }

    pub fn monomial(ctx: PrecisionContext, exponents: Exponents, c: i128) -> Self {
        assert_eq!(exponents.len(), ctx.vars);
        let mut s = Self::zero(ctx);
        s.add_term(exponents, ctx.reduce_i128(c));
        s
    }

    pub fn from_terms<I>(ctx: PrecisionContext, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponents, i128)>,
    {
        let mut s = Self::zero(ctx);
        for (e, c) in terms {
            assert_eq!(e.len(), ctx.vars);
            s.add_term(e, ctx.reduce_i128(c));
        }
        s
    }

    /// Univariate element from coefficients `c_0 + c_1 T + ...` (residues).
    pub fn from_univariate(ctx: PrecisionContext, coeffs: &[u64]) -> Self {
        assert_eq!(ctx.vars, 1);
        let mut s = Self::zero(ctx);
        for (i, &c) in coeffs.iter().enumerate() {
            s.add_term(vec![i as u32], c % ctx.modulus);
        }
        s
    }

    pub(crate) fn add_term(&mut self, e: Exponents, c: u64) {
        if c == 0 {
            return;
        }
        let m = self.ctx.modulus;
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                slot.insert(c % m);
            }
            Entry::Occupied(mut slot) => {
                let sum = (*slot.get() + c) % m;
                if sum == 0 {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, u64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> u64 {
        self.terms.get(e).copied().unwrap_or(0)
    }

    /// Degree in `T_j`, `None` for zero.
    pub fn degree_in(&self, j: usize) -> Option<usize> {
        self.terms.keys().map(|e| e[j] as usize).max()
    }

    pub fn max_degree(&self) -> Option<usize> {
        (0..self.ctx.vars).filter_map(|j| self.degree_in(j)).max()
    }

    /// Smallest `ord_p` among the coefficients.
    pub fn content_valuation(&self) -> Valuation {
        self.terms
            .values()
            .map(|&c| self.ctx.residue_valuation(c))
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite)
    }

    pub fn check_same_context(&self, other: &Self) -> Result<()> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same_context(other)?;
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg_ref())
    }

    fn neg_ref(&self) -> Self {
        let m = self.ctx.modulus;
        SeriesElement {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(e, &c)| (e.clone(), m - c)).collect(),
        }
    }

    pub fn scale(&self, c: i128) -> Self {
        let c = self.ctx.reduce_i128(c);
        let m = self.ctx.modulus;
        let terms = self
            .terms
            .iter()
            .map(|(e, &v)| (e.clone(), v * c % m))
            .filter(|(_, v)| *v != 0)
            .collect();
        SeriesElement { ctx: self.ctx, terms }
    }

    fn product(&self, other: &Self, truncate: Option<usize>) -> Self {
        let m = self.ctx.modulus;
        let mut acc: BTreeMap<Exponents, u64> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                if let Some(bound) = truncate {
                    if e.iter().any(|&x| x as usize > bound) {
                        continue;
                    }
                }
                let slot = acc.entry(e).or_insert(0);
                *slot = (*slot + ca * cb % m) % m;
            }
        }
        acc.retain(|_, v| *v != 0);
        SeriesElement { ctx: self.ctx, terms: acc }
    }

    /// Power-series product: terms of degree above `D` in any variable are
    /// discarded.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_context(other)?;
        Ok(self.product(other, Some(self.ctx.degree_bound)))
    }

    /// Polynomial product without degree truncation.
    pub fn checked_mul_exact(&self, other: &Self) -> Result<Self> {
        self.check_same_context(other)?;
        Ok(self.product(other, None))
    }

    pub fn pow_exact(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.ctx);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&base, None);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base, None);
            }
        }
        acc
    }

    /// Truncates to degree `<= D` in every variable.
    pub fn truncated(&self) -> Self {
        let bound = self.ctx.degree_bound as u32;
        SeriesElement {
            ctx: self.ctx,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().all(|&x| x <= bound))
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
        }
    }

    /// Dense univariate coefficients `[c_0, ..., c_deg]`.
    pub fn to_univariate(&self) -> Vec<u64> {
        assert_eq!(self.ctx.vars, 1, "univariate view of a {}-variable element", self.ctx.vars);
        let Some(deg) = self.degree_in(0) else {
            return Vec::new();
        };
        let mut out = vec![0; deg + 1];
        for (e, &c) in &self.terms {
            out[e[0] as usize] = c;
        }
        out
    }

    /// `f(g(T))` for univariate `f` and `g`, exact.
    pub fn compose_univariate(&self, inner: &Self) -> Result<Self> {
        self.check_same_context(inner)?;
        let coeffs = self.to_univariate();
        let mut acc = Self::zero(self.ctx);
        for &c in coeffs.iter().rev() {
            acc = acc.product(inner, None);
            acc.add_term(vec![0], c);
        }
        Ok(acc)
    }

    /// Reinterprets the coefficients in another context with the same
    /// number of variables, reducing modulo the new `p^N`.
    pub fn recontext(&self, ctx: PrecisionContext) -> Self {
        assert_eq!(ctx.vars, self.ctx.vars);
        let mut s = SeriesElement::zero(ctx);
        for (e, &c) in &self.terms {
            s.add_term(e.clone(), c % ctx.modulus);
        }
        s
    }
}

fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::from(1u32);
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

/// `ω_n(T_j) = (1 + T_j)^{p^n} - 1`, without the degree-bound check.
pub fn omega_exact(ctx: PrecisionContext, n: u32, j: usize) -> SeriesElement {
    assert!(j < ctx.vars);
    let pn = ctx.p.get().pow(n);
    let mut s = SeriesElement::zero(ctx);
    for (k, c) in binomial_row(pn).iter().enumerate().skip(1) {
        let mut e = vec![0; ctx.vars];
        e[j] = k as u32;
        s.add_term(e, ctx.reduce_biguint(c));
    }
    s
}

/// `ω_n(T_j) = (1 + T_j)^{p^n} - 1`, monic of degree `p^n` in `T_j`.
pub fn omega(ctx: PrecisionContext, n: u32, j: usize) -> Result<SeriesElement> {
    let degree = ctx
        .p
        .checked_pow(n)
        .map(|d| d as usize)
        .unwrap_or(usize::MAX);
    if degree > ctx.degree_bound {
        return Err(Error::DegreeOverflow { degree, bound: ctx.degree_bound });
    }
    Ok(omega_exact(ctx, n, j))
}

/// Integer coefficients of `(1 + T)^{p^n} - 1`.
pub fn omega_integer(p: Prime, n: u32) -> Vec<BigInt> {
    let mut row: Vec<BigInt> = binomial_row(p.get().pow(n)).into_iter().map(BigInt::from).collect();
    row[0] = BigInt::zero();
    row
}

impl Add for &SeriesElement {
    type Output = SeriesElement;
    fn add(self, rhs: Self) -> SeriesElement {
        self.checked_add(rhs).expect("context mismatch")
    }
}

impl Sub for &SeriesElement {
    type Output = SeriesElement;
    fn sub(self, rhs: Self) -> SeriesElement {
        self.checked_sub(rhs).expect("context mismatch")
    }
}

impl Mul for &SeriesElement {
    type Output = SeriesElement;
    fn mul(self, rhs: Self) -> SeriesElement {
        self.checked_mul(rhs).expect("context mismatch")
    }
}

impl Neg for &SeriesElement {
    type Output = SeriesElement;
    fn neg(self) -> SeriesElement {
        self.neg_ref()
    }
}

fn var_name(ctx: &PrecisionContext, j: usize) -> String {
    if ctx.vars == 1 {
        "T".to_string()
    } else {
        format!("T{}", j + 1)
    }
}

impl fmt::Display for SeriesElement {
    /// Highest multidegree first, coefficients as symmetric residues.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (e, &c) in self.terms.iter().rev() {
            let c = self.ctx.symmetric(c);
            let (sign, mag) = if c < 0 { ("-", -c) } else { ("+", c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            for (j, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => factors.push(var_name(&self.ctx, j)),
                    _ => factors.push(format!("{}^{x}", var_name(&self.ctx, j))),
                }
            }
            if factors.is_empty() || mag != 1 {
                factors.insert(0, mag.to_string());
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for SeriesElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SeriesElement({self} mod {}^{})", self.ctx.p, self.ctx.precision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(p: u64, n: u32, d: usize, deg: usize) -> PrecisionContext {
        PrecisionContext::new(Prime::new(p).unwrap(), n, d, deg).unwrap()
    }

    fn t(c: PrecisionContext) -> SeriesElement {
        SeriesElement::variable(c, 0)
    }

    #[test]
    fn context_validation() {
        let p3 = Prime::new(3).unwrap();
        assert!(PrecisionContext::new(p3, 1, 1, 4).is_err());
        assert!(PrecisionContext::new(p3, 2, 0, 4).is_err());
        assert!(PrecisionContext::new(p3, 2, 1, 0).is_err());
        assert!(PrecisionContext::new(p3, 40, 1, 4).is_err());
        assert_eq!(PrecisionContext::new(Prime::new(2).unwrap(), 4, 1, 4), Err(Error::OddPrimeRequired(2)));
        assert_eq!(ctx(3, 12, 1, 8).modulus(), 531441);
    }

    #[test]
    fn omega_examples() {
        let c = ctx(3, 6, 1, 30);
        assert_eq!(omega(c, 0, 0).unwrap(), t(c));
        let w1 = omega(c, 1, 0).unwrap();
        let expected = SeriesElement::from_univariate(c, &[0, 3, 3, 1]);
        assert_eq!(w1, expected);
        assert_eq!(w1.to_string(), "T^3 + 3*T^2 + 3*T");
        for n in 0..4 {
            assert_eq!(omega(c, n, 0).unwrap().degree_in(0), Some(3usize.pow(n)));
        }
        assert_eq!(omega(c, 4, 0), Err(Error::DegreeOverflow { degree: 81, bound: 30 }));
    }

    #[test]
    fn omega_composition() {
        let c = ctx(3, 8, 1, 100);
        let w1 = omega_exact(c, 1, 0);
        for n in 0..4 {
            let next = omega_exact(c, n + 1, 0);
            let wn = omega_exact(c, n, 0);
            assert_eq!(w1.compose_univariate(&wn).unwrap(), next);
            assert_eq!(wn.compose_univariate(&w1).unwrap(), next);
        }
    }

    #[test]
    fn arithmetic_examples() {
        let c = ctx(3, 2, 1, 8);
        let one = SeriesElement::one(c);
        let x = t(c);
        assert_eq!(&x + &SeriesElement::zero(c), x);
        let a = &one + &x;
        assert_eq!(&a * &a, SeriesElement::from_univariate(c, &[1, 2, 1]));
        // p^{N-1} T * p T = p^N T^2 = 0
        assert!((&x.scale(3) * &x.scale(3)).is_zero());
        let other = ctx(3, 3, 1, 8);
        assert_eq!(x.checked_add(&t(other)), Err(Error::ContextMismatch));
        assert_eq!(x.checked_mul(&t(other)), Err(Error::ContextMismatch));
    }

    #[test]
    fn truncation_contract() {
        let c = ctx(5, 3, 1, 3);
        let x2 = SeriesElement::monomial(c, vec![2], 1);
        assert!((&x2 * &x2).is_zero());
        assert_eq!(x2.checked_mul_exact(&x2).unwrap().degree_in(0), Some(4));
    }

    #[test]
    fn display_multivariate() {
        let c = ctx(3, 4, 2, 8);
        let f = SeriesElement::from_terms(c, [(vec![1, 0], 1), (vec![0, 0], -3), (vec![2, 1], 2)]);
        assert_eq!(f.to_string(), "2*T1^2*T2 + T1 - 3");
    }

    fn arb_poly(c: PrecisionContext) -> impl Strategy<Value = SeriesElement> {
        proptest::collection::vec(0u64..c.modulus(), 1..6)
            .prop_map(move |v| SeriesElement::from_univariate(c, &v))
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(
            a in arb_poly(ctx(5, 4, 1, 6)),
            b in arb_poly(ctx(5, 4, 1, 6)),
            cc in arb_poly(ctx(5, 4, 1, 6)),
        ) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &cc, &a * &(&b * &cc));
            prop_assert_eq!(&a * &(&b + &cc), &(&a * &b) + &(&a * &cc));
        }
    }
}
