//! Truncated arithmetic in `(Z/p^N)[[T_1, .., T_d]]` and one-variable
//! Weierstrass theory.

pub mod determinant;
pub mod parse;
pub mod series;
pub mod weierstrass;

pub use determinant::{char_poly, MAX_CHAR_POLY_SIZE};
pub use parse::parse_element;
pub use series::{omega, omega_exact, omega_integer, Exponents, PrecisionContext, SeriesElement, MAX_MODULUS};
pub use weierstrass::{is_distinguished, weierstrass_divide, weierstrass_prepare, weierstrass_prepare_with_guard, WeierstrassForm};
