//! Weierstrass preparation and division in one variable.
//!
//! Preparation factors `f = p^μ · g · u` with `g` distinguished of degree `λ`
//! and `u` a unit. The factorization is computed by Hensel lifting the
//! coprime splitting `f/p^μ ≡ T^λ · ū (mod p)`; since elements are
//! polynomials, no power-series truncation enters and the result is exact
//! modulo `p^{N-μ}`.

use super::series::{inverse_mod, PrecisionContext, SeriesElement};
use crate::error::{Error, Result};
use crate::padic::Valuation;

/// `f = p^mu · distinguished · unit`, valid modulo `p^precision` where
/// `precision = N - mu`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassForm {
    pub mu: u32,
    pub lambda: usize,
    pub distinguished: SeriesElement,
    pub unit: SeriesElement,
    /// Effective coefficient precision `N - mu` of `distinguished` and `unit`.
    pub precision: u32,
}

impl WeierstrassForm {
    /// `p^mu · distinguished · unit`, reduced modulo `p^N`.
    pub fn recombine(&self) -> SeriesElement {
        let ctx = *self.distinguished.context();
        let scale = ctx.prime().get().pow(self.mu.min(ctx.precision())) as i128;
        self.distinguished
            .checked_mul_exact(&self.unit)
            .expect("same context")
            .scale(scale)
    }
}

fn require_univariate(f: &SeriesElement) -> Result<()> {
    if f.context().vars() != 1 {
        return Err(Error::HypothesisViolated(format!(
            "Weierstrass theory needs d = 1, got d = {}",
            f.context().vars()
        )));
    }
    Ok(())
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_mul(a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y % m) % m;
        }
    }
    trim(&mut out);
    out
}

fn poly_sub(a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, slot) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *slot = (x + m - y % m) % m;
    }
    trim(&mut out);
    out
}

/// Inverse of `u` modulo `(m, T^len)`; `u(0)` must be a unit.
fn series_inverse(u: &[u64], len: usize, m: u64) -> Vec<u64> {
    let inv0 = inverse_mod(u[0] % m, m);
    let mut inv = vec![0u64; len];
    if len == 0 {
        return inv;
    }
    inv[0] = inv0;
    for k in 1..len {
        let mut s = 0u64;
        for i in 1..=k.min(u.len() - 1) {
            s = (s + u[i] * inv[k - i] % m) % m;
        }
        inv[k] = (m - s) % m * inv0 % m;
    }
    inv
}

/// Weierstrass preparation with the default guard of 1.
pub fn weierstrass_prepare(f: &SeriesElement) -> Result<WeierstrassForm> {
    weierstrass_prepare_with_guard(f, 1)
}

/// Factors `f = p^μ · g · u`. Requires `μ < N - guard`.
pub fn weierstrass_prepare_with_guard(f: &SeriesElement, guard: u32) -> Result<WeierstrassForm> {
    require_univariate(f)?;
    let ctx: PrecisionContext = *f.context();
    let n = ctx.precision();
    let p = ctx.prime().get();
    let mu = match f.content_valuation() {
        Valuation::Infinite => {
            return Err(Error::PrecisionExhausted("element is zero modulo p^N".into()))
        }
        Valuation::Finite(mu) => mu,
    };
    if mu + guard >= n {
        return Err(Error::PrecisionExhausted(format!(
            "content p^{mu} leaves fewer than {guard} digits of precision at N = {n}"
        )));
    }
    let precision = n - mu;
    let m = p.pow(precision);
    let pmu = p.pow(mu);
    let a: Vec<u64> = f.to_univariate().iter().map(|&c| (c / pmu) % m).collect();
    let lambda = a
        .iter()
        .position(|&c| c % p != 0)
        .expect("content valuation guarantees a unit coefficient");

    // g ≡ T^λ, u ≡ ū (mod p), lifted one p-adic digit per step.
    let mut g = vec![0u64; lambda + 1];
    g[lambda] = 1;
    let mut u: Vec<u64> = a[lambda..].to_vec();
    let u_bar: Vec<u64> = u.iter().map(|&c| c % p).collect();
    let u_bar_inv = series_inverse(&u_bar, lambda, p);
    let mut pk = 1u64;
    for _ in 1..precision {
        pk *= p;
        let err = poly_sub(&a, &poly_mul(&g, &u, m), m);
        if err.is_empty() {
            break;
        }
        debug_assert!(err.iter().all(|&c| c % pk == 0));
        let e: Vec<u64> = err.iter().map(|&c| (c / pk) % p).collect();
        // δg = e · ū^{-1} mod T^λ, δu = (e - δg·ū) / T^λ, both over F_p.
        let mut dg = poly_mul(&e, &u_bar_inv, p);
        dg.truncate(lambda);
        let rest = poly_sub(&e, &poly_mul(&dg, &u_bar, p), p);
        debug_assert!(rest.iter().take(lambda).all(|&c| c == 0));
        let du: Vec<u64> = rest.iter().skip(lambda).copied().collect();
        for (i, &c) in dg.iter().enumerate() {
            g[i] = (g[i] + pk * c) % m;
        }
        if u.len() < du.len() {
            u.resize(du.len(), 0);
        }
        for (i, &c) in du.iter().enumerate() {
            u[i] = (u[i] + pk * c) % m;
        }
    }
    debug_assert!(poly_sub(&a, &poly_mul(&g, &u, m), m).is_empty());
    Ok(WeierstrassForm {
        mu,
        lambda,
        distinguished: SeriesElement::from_univariate(ctx, &g),
        unit: SeriesElement::from_univariate(ctx, &u),
        precision,
    })
}

/// True if `g` is monic with every lower coefficient divisible by `p`.
pub fn is_distinguished(g: &SeriesElement) -> bool {
    if g.context().vars() != 1 {
        return false;
    }
    let c = g.to_univariate();
    let p = g.context().prime().get();
    match c.split_last() {
        Some((&lead, lower)) => lead == 1 && lower.iter().all(|&x| x % p == 0),
        None => false,
    }
}

/// `f = q·g + r` with `deg r < deg g`, for a distinguished `g`.
pub fn weierstrass_divide(
    f: &SeriesElement,
    g: &SeriesElement,
) -> Result<(SeriesElement, SeriesElement)> {
    require_univariate(f)?;
    f.check_same_context(g)?;
    let ctx = *f.context();
    if !is_distinguished(g) {
        return Err(Error::HypothesisViolated(format!("divisor {g} is not distinguished")));
    }
    let gc = g.to_univariate();
    let deg_g = gc.len() - 1;
    if deg_g > ctx.degree_bound() {
        return Err(Error::DegreeOverflow { degree: deg_g, bound: ctx.degree_bound() });
    }
    let m = ctx.modulus();
    let mut r = f.to_univariate();
    let mut q = vec![0u64; r.len().saturating_sub(deg_g).max(1)];
    while r.len() > deg_g {
        let k = r.len() - 1 - deg_g;
        let c = r[r.len() - 1];
        q[k] = c;
        for (i, &gi) in gc.iter().enumerate() {
            r[k + i] = (r[k + i] + m - gi * c % m) % m;
        }
        trim(&mut r);
    }
    Ok((SeriesElement::from_univariate(ctx, &q), SeriesElement::from_univariate(ctx, &r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_element;
    use crate::algebra::series::omega_exact;
    use crate::padic::Prime;
    use proptest::prelude::*;

    fn ctx(p: u64, n: u32) -> PrecisionContext {
        PrecisionContext::new(Prime::new(p).unwrap(), n, 1, 60).unwrap()
    }

    #[test]
    fn already_distinguished() {
        let c = ctx(3, 8);
        let f = parse_element(c, "T^2 + p*T + p").unwrap();
        let w = weierstrass_prepare(&f).unwrap();
        assert_eq!((w.mu, w.lambda), (0, 2));
        assert_eq!(w.distinguished, f);
        assert_eq!(w.unit, SeriesElement::one(c));
    }

    #[test]
    fn scalar_content() {
        let c = ctx(3, 8);
        let f = parse_element(c, "p^2*(T + p)").unwrap();
        let w = weierstrass_prepare(&f).unwrap();
        assert_eq!((w.mu, w.lambda, w.precision), (2, 1, 6));
        assert_eq!(w.recombine(), f);
    }

    #[test]
    fn product_of_distinguished_factors() {
        // (T - 5)(T^2 + 5) = T^3 - 5T^2 + 5T - 25, lower coefficients all divisible by 5.
        let c = ctx(5, 6);
        let f = parse_element(c, "(T - p)*(T^2 + p)").unwrap();
        assert!(is_distinguished(&f));
        let w = weierstrass_prepare(&f).unwrap();
        assert_eq!((w.mu, w.lambda), (0, 3));
        assert_eq!(w.distinguished, f);
    }

    #[test]
    fn unit_factor_is_split_off() {
        let c = ctx(3, 10);
        // unit factor with a unit constant term
        let g = parse_element(c, "T^2 + 3*T + 3").unwrap();
        let u = parse_element(c, "1 + T + 3*T^2").unwrap();
        let f = g.checked_mul_exact(&u).unwrap();
        let w = weierstrass_prepare(&f).unwrap();
        assert_eq!(w.lambda, 2);
        assert_eq!(w.distinguished, g);
        assert_eq!(w.unit, u);
    }

    #[test]
    fn zero_and_saturated_content_fail() {
        let c = ctx(3, 4);
        assert!(matches!(weierstrass_prepare(&SeriesElement::zero(c)), Err(Error::PrecisionExhausted(_))));
        let f = parse_element(c, "p^3*T").unwrap();
        assert!(matches!(weierstrass_prepare(&f), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn division_examples() {
        let c = ctx(3, 6);
        let w1 = omega_exact(c, 1, 0);
        let (q, r) = weierstrass_divide(&w1, &w1).unwrap();
        assert_eq!(q, SeriesElement::one(c));
        assert!(r.is_zero());
        let t = SeriesElement::variable(c, 0);
        let (q, r) = weierstrass_divide(&t, &t).unwrap();
        assert_eq!(q, SeriesElement::one(c));
        assert!(r.is_zero());
        let t3 = parse_element(c, "T^3").unwrap();
        let (q, r) = weierstrass_divide(&t3, &w1).unwrap();
        assert_eq!(q, SeriesElement::one(c));
        assert_eq!(r, parse_element(c, "-3*T^2 - 3*T").unwrap());
        let not_dist = parse_element(c, "T^2 + T").unwrap();
        assert!(weierstrass_divide(&t3, &not_dist).is_err());
    }

    fn arb_poly(c: PrecisionContext) -> impl Strategy<Value = SeriesElement> {
        proptest::collection::vec(0u64..c.modulus(), 1..8)
            .prop_map(move |v| SeriesElement::from_univariate(c, &v))
    }

    proptest! {
        #[test]
        fn preparation_recombines(f in arb_poly(ctx(3, 7)), shift in 0u32..3) {
            let f = f.scale(3i128.pow(shift));
            prop_assume!(!f.is_zero());
            match weierstrass_prepare(&f) {
                Ok(w) => {
                    prop_assert!(is_distinguished(&w.distinguished));
                    prop_assert_eq!(w.distinguished.degree_in(0), Some(w.lambda));
                    prop_assert!(w.unit.coeff(&[0]) % 3 != 0);
                    prop_assert_eq!(w.recombine(), f);
                }
                Err(Error::PrecisionExhausted(_)) => {}
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn division_reconstructs_and_is_unique(f1 in arb_poly(ctx(5, 5)), f2 in arb_poly(ctx(5, 5)), n in 0u32..2) {
            let c = ctx(5, 5);
            let g = omega_exact(c, n, 0);
            let (q1, r1) = weierstrass_divide(&f1, &g).unwrap();
            let (q2, r2) = weierstrass_divide(&f2, &g).unwrap();
            let lambda = g.degree_in(0).unwrap();
            prop_assert!(r1.degree_in(0).map_or(true, |d| d < lambda));
            prop_assert_eq!(&q1.checked_mul_exact(&g).unwrap() + &r1, f1.clone());
            // remainder of the sum equals the sum of remainders
            let (qs, rs) = weierstrass_divide(&(&f1 + &f2), &g).unwrap();
            prop_assert_eq!(rs, &r1 + &r2);
            prop_assert_eq!(qs, &q1 + &q2);
        }
    }
}
