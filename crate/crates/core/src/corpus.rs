//! Fixed module corpora shared by the self-test and the acceptance suite.

use crate::algebra::{parse_element, PrecisionContext};
use crate::error::Result;
use crate::padic::Prime;
use crate::tower::ModulePresentation;

/// Square torsion presentations over `Λ_1` with finite coinvariants at every
/// level, written as rows of polynomial strings.
pub const D1_TORSION: &[(&str, &[&[&str]])] = &[
    ("p", &[&["p"]]),
    ("p^2", &[&["p^2"]]),
    ("T-p", &[&["T - p"]]),
    ("T-p^2", &[&["T - p^2"]]),
    ("T-2p", &[&["T - 2*p"]]),
    ("T+p", &[&["T + p"]]),
    ("p(T-p)", &[&["p*(T - p)"]]),
    ("p^2(T-p)", &[&["p^2*(T - p)"]]),
    ("(T-p)(T-p^2)", &[&["(T - p)*(T - p^2)"]]),
    ("(T-p)^2", &[&["(T - p)^2"]]),
    ("unit(T-p)", &[&["(1 + T)*(T - p)"]]),
    ("unit*p", &[&["(2 + T)*p"]]),
    ("T^2-p^3", &[&["T^2 - p^3"]]),
    ("(T-p)(T+2p)p", &[&["p*(T - p)*(T + 2*p)"]]),
    ("[[T,p],[p,T]]", &[&["T", "p"], &["p", "T"]]),
    ("diag(p,T-p)", &[&["p", "0"], &["0", "T - p"]]),
    ("jordan(T-p)", &[&["T - p", "1"], &["0", "T - p"]]),
    ("[[p,T],[0,p]]", &[&["p", "T"], &["0", "p"]]),
    ("[[T-p,p],[p^2,T+p]]", &[&["T - p", "p"], &["p^2", "T + p"]]),
    ("diag(p,p,T-p^2)", &[&["p", "0", "0"], &["0", "p", "0"], &["0", "0", "T - p^2"]]),
    ("tri3", &[&["T - p", "1", "0"], &["0", "p", "T"], &["0", "0", "T + p"]]),
    ("[[T,p^2],[1,T]]", &[&["T", "p^2"], &["1", "T"]]),
    ("T^2-p", &[&["T^2 - p"]]),
    ("T^3-p", &[&["T^3 - p"]]),
    ("p(T^3-p^2)", &[&["p*(T^3 - p^2)"]]),
];

pub const CORPUS_PRECISION: u32 = 12;
pub const CORPUS_DEGREE_BOUND: usize = 40;

pub fn d1_context(p: Prime) -> Result<PrecisionContext> {
    PrecisionContext::new(p, CORPUS_PRECISION, 1, CORPUS_DEGREE_BOUND)
}

pub fn build(ctx: PrecisionContext, rows: &[&[&str]]) -> Result<ModulePresentation> {
    let relations = rows
        .iter()
        .map(|row| row.iter().map(|s| parse_element(ctx, s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    ModulePresentation::new(ctx, rows.len(), relations)
}

/// The [`D1_TORSION`] corpus built over `p`.
pub fn d1_torsion_corpus(p: Prime) -> Result<Vec<(&'static str, ModulePresentation)>> {
    let ctx = d1_context(p)?;
    D1_TORSION.iter().map(|&(label, rows)| Ok((label, build(ctx, rows)?))).collect()
}
