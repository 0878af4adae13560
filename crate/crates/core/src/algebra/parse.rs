//! Text syntax for elements of the Iwasawa algebra.
//!
//! ```text
//! expr   := ['+' | '-'] term (('+' | '-') term)*
//! term   := power ('*' power)*
//! power  := atom ['^' uint]
//! atom   := uint | 'p' | 'T' | 'T' uint | '(' expr ')'
//! ```
//!
//! `p` is the context prime. `T` names the single variable when `d = 1`;
//! `T1 .. Td` are always accepted. Whitespace is insignificant.
//! Products are exact (no truncation at `D`).

use num_bigint::BigUint;

use super::series::{PrecisionContext, SeriesElement};
use crate::error::{Error, Result};

struct Parser<'a> {
    ctx: PrecisionContext,
    src: &'a [u8],
    pos: usize,
}

pub fn parse_element(ctx: PrecisionContext, text: &str) -> Result<SeriesElement> {
    let mut parser = Parser { ctx, src: text.as_bytes(), pos: 0 };
    let value = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(value)
}

impl<'a> Parser<'a> {
    fn error(&self, what: &str) -> Error {
        Error::parse(0, format!("{what} at column {} of `{}`", self.pos + 1, String::from_utf8_lossy(self.src)))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn uint(&mut self) -> Result<BigUint> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("digits parse"))
    }

    fn small_uint(&mut self) -> Result<u32> {
        let v = self.uint()?;
        u32::try_from(&v).map_err(|_| self.error("exponent too large"))
    }

    fn expr(&mut self) -> Result<SeriesElement> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -&self.term()?
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<SeriesElement> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.power()?;
            acc = acc.checked_mul_exact(&rhs)?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<SeriesElement> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.small_uint()?;
            return Ok(base.pow_exact(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<SeriesElement> {
        let ctx = self.ctx;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'p') => {
                self.pos += 1;
                Ok(SeriesElement::constant(ctx, ctx.prime().get() as i128))
            }
            Some(b'T') => {
                self.pos += 1;
                let indexed = self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit());
                let j = if indexed {
                    let idx = self.small_uint()? as usize;
                    if idx == 0 || idx > ctx.vars() {
                        return Err(self.error(&format!("variable T{idx} outside T1..T{}", ctx.vars())));
                    }
                    idx - 1
                } else if ctx.vars() == 1 {
                    0
                } else {
                    return Err(self.error("bare `T` is ambiguous with several variables"));
                };
                Ok(SeriesElement::variable(ctx, j))
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.uint()?;
                let r = ctx.reduce_biguint(&v);
                Ok(SeriesElement::constant(ctx, r as i128))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::series::omega_exact;
    use crate::padic::Prime;
    use proptest::prelude::*;

    fn ctx(d: usize) -> PrecisionContext {
        PrecisionContext::new(Prime::new(3).unwrap(), 6, d, 40).unwrap()
    }

    #[test]
    fn parses_basic_forms() {
        let c = ctx(1);
        assert_eq!(parse_element(c, "T - p").unwrap(), SeriesElement::from_terms(c, [(vec![1], 1), (vec![0], -3)]));
        assert_eq!(parse_element(c, "(1+T)^9 - 1").unwrap(), omega_exact(c, 2, 0));
        assert_eq!(parse_element(c, "-T^2 + 2*p^2*T").unwrap().to_string(), "-T^2 + 18*T");
        assert!(parse_element(c, "0").unwrap().is_zero());
        let c2 = ctx(2);
        let f = parse_element(c2, "T1 - p + T2^2*T1").unwrap();
        assert_eq!(f.to_string(), "T1*T2^2 + T1 - 3");
    }

    #[test]
    fn rejects_malformed_input() {
        let c = ctx(1);
        for bad in ["T +", "3T", "(T", "T3", "x", "T^", ""] {
            assert!(matches!(parse_element(c, bad), Err(Error::Parse { .. })), "{bad}");
        }
        assert!(parse_element(ctx(2), "T").is_err());
    }

    proptest! {
        #[test]
        fn display_round_trips(coeffs in proptest::collection::vec(0u64..729, 1..7)) {
            let c = ctx(1);
            let f = SeriesElement::from_univariate(c, &coeffs);
            prop_assert_eq!(parse_element(c, &f.to_string()).unwrap(), f);
        }
    }
}
