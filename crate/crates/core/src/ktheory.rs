//! Bookkeeping for even K-groups of rings of integers in p-adic Lie towers.
//!
//! Nothing here computes a K-group. Orders come in as tables, and the growth
//! laws are evaluated from invariants supplied by the caller. Every report
//! carries the identification of `K_{2i-2}(O_F)[p^∞]` with `H^2` as an
//! explicit assumption.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::invariants::InvariantReport;
use crate::padic::{h1_local_order, p_power_exponent, prime_power_parts, Prime};

pub const H2_IDENTIFICATION: &str =
    "K_{2i-2}(O_F)[p^inf] is identified with H^2(G_{S_p}(F), Z_p(i)) (p odd, i >= 2)";

/// Order of `K_{2i-2}(O_F)` as a list of cyclic factor orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KGroupRecord {
    pub field_label: String,
    pub i: u32,
    decomposition: Vec<u64>,
    pub source: String,
}

impl KGroupRecord {
    pub fn new(field_label: impl Into<String>, i: u32, decomposition: Vec<u64>, source: impl Into<String>) -> Result<Self> {
        if i < 2 {
            return Err(Error::InvalidConfig { field: "i".into(), reason: format!("twist must be >= 2, got {i}") });
        }
        if let Some(&bad) = decomposition.iter().find(|&&q| prime_power_parts(q).is_none()) {
            return Err(Error::NotPrimePower(bad));
        }
        let mut decomposition = decomposition;
        decomposition.sort_unstable();
        Ok(KGroupRecord { field_label: field_label.into(), i, decomposition, source: source.into() })
    }

    pub fn decomposition(&self) -> &[u64] {
        &self.decomposition
    }

    /// `log_p` of the order of the p-primary part.
    pub fn p_part_log(&self, p: Prime) -> u32 {
        self.decomposition.iter().filter_map(|&q| p_power_exponent(q, p)).sum()
    }
}

/// `K_2` of the ring of integers of `Q(√-4683)`.
pub fn browkin_gangl_record() -> KGroupRecord {
    KGroupRecord::new("Q(sqrt(-4683))", 2, vec![2, 2, 3, 37], "Browkin-Gangl tame kernel tables")
        .expect("stored record is valid")
}

/// `log_p |H^2(G_{S_p}(F), Z_p(i))|`, read off the K-group p-part.
pub fn k_even_order_to_h2(record: &KGroupRecord, p: Prime) -> u32 {
    record.p_part_log(p)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalPrimeDatum {
    pub label: String,
    /// Residue field cardinality.
    pub q: u64,
    pub ramified: bool,
}

impl LocalPrimeDatum {
    pub fn new(label: impl Into<String>, q: u64, ramified: bool) -> Result<Self> {
        if prime_power_parts(q).is_none() {
            return Err(Error::NotPrimePower(q));
        }
        Ok(LocalPrimeDatum { label: label.into(), q, ramified })
    }
}

/// `log_p |H^2(O_{F,S})|` from `log_p |H^2(O_{F,S_p})|` and the primes of `S - S_p`.
pub fn change_of_s_order(log_h2_sp: u64, locals: &[LocalPrimeDatum], i: u32, p: Prime) -> Result<u64> {
    let mut total = log_h2_sp;
    for v in locals {
        total += h1_local_order(v.q, i, p)? as u64;
    }
    Ok(total)
}

/// `dim_{F_p} H^2(G_{S_p}(F), μ_p^{⊗i}) = dim Cl_{S_p}(F)[p] + |S_p| - 1`.
pub fn mod_p_h2_dimension(cl_sp_p_rank: u64, s_p_count: u64) -> Result<u64> {
    if s_p_count == 0 {
        return Err(Error::InvalidConfig { field: "s_p_count".into(), reason: "at least one prime lies above p".into() });
    }
    Ok(cl_sp_p_rank + s_p_count - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionKind {
    Zp,
    Zpd(u32),
    /// Uniform pro-p group, unramified outside a finite set.
    Uniform(u32),
    /// `H ⋊ Z_p` with `H` of dimension `d - 1`.
    Semidirect(u32),
}

impl ExtensionKind {
    pub fn dimension(self) -> u32 {
        match self {
            ExtensionKind::Zp => 1,
            ExtensionKind::Zpd(d) | ExtensionKind::Uniform(d) | ExtensionKind::Semidirect(d) => d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExtensionKind::Zp => "zp",
            ExtensionKind::Zpd(_) => "zpd",
            ExtensionKind::Uniform(_) => "uniform",
            ExtensionKind::Semidirect(_) => "semidirect",
        }
    }

    pub fn from_parts(name: &str, d: Option<u32>) -> Result<Self> {
        let need_d = || {
            d.ok_or_else(|| Error::InvalidConfig { field: "d".into(), reason: format!("kind `{name}` needs a dimension") })
        };
        match name {
            "zp" => match d {
                None | Some(1) => Ok(ExtensionKind::Zp),
                Some(d) => Err(Error::InvalidConfig { field: "d".into(), reason: format!("kind `zp` has d = 1, got {d}") }),
            },
            "zpd" => Ok(ExtensionKind::Zpd(need_d()?)),
            "uniform" => Ok(ExtensionKind::Uniform(need_d()?)),
            "semidirect" => Ok(ExtensionKind::Semidirect(need_d()?)),
            _ => Err(Error::InvalidConfig {
                field: "kind".into(),
                reason: format!("unknown kind `{name}`; expected zp, zpd, uniform or semidirect"),
            }),
        }
    }
}

impl fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtensionKind::Zp => f.write_str("zp"),
            k => write!(f, "{}({})", k.name(), k.dimension()),
        }
    }
}

/// Hypotheses the caller vouches for; none of them can be checked here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    /// `G/H ≅ Z_p`.
    QuotientIsZp,
    /// `H ≅ Z_p^{d-1}`.
    NormalSubgroupIsZpd,
    /// Decomposition groups at ramified primes outside p have dimension 2.
    DecompositionDimensionTwo,
    /// The Iwasawa cohomology is finitely generated over `Z_p[[H]]`.
    FinitelyGeneratedOverH,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 4] = [
        Hypothesis::QuotientIsZp,
        Hypothesis::NormalSubgroupIsZpd,
        Hypothesis::DecompositionDimensionTwo,
        Hypothesis::FinitelyGeneratedOverH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::QuotientIsZp => "quotient-is-zp",
            Hypothesis::NormalSubgroupIsZpd => "h-is-zp-d-minus-1",
            Hypothesis::DecompositionDimensionTwo => "decomposition-dim-2",
            Hypothesis::FinitelyGeneratedOverH => "fg-over-h",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            Hypothesis::QuotientIsZp => "G/H is isomorphic to Z_p",
            Hypothesis::NormalSubgroupIsZpd => "H is isomorphic to Z_p^{d-1}",
            Hypothesis::DecompositionDimensionTwo => {
                "every ramified prime outside p has a decomposition group of dimension 2"
            }
            Hypothesis::FinitelyGeneratedOverH => "H^2_Iw is finitely generated over Z_p[[H]]",
        }
    }
}

impl FromStr for Hypothesis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Hypothesis::ALL.into_iter().find(|h| h.name() == s).ok_or_else(|| Error::InvalidConfig {
            field: "asserted".into(),
            reason: format!("unknown hypothesis `{s}`"),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionDescriptor {
    pub kind: ExtensionKind,
    /// Ramified primes not above p.
    pub ramified_primes: Vec<LocalPrimeDatum>,
    pub asserted: Vec<Hypothesis>,
    pub notes: String,
}

impl ExtensionDescriptor {
    pub fn new(
        kind: ExtensionKind,
        ramified_primes: Vec<LocalPrimeDatum>,
        asserted: Vec<Hypothesis>,
        notes: impl Into<String>,
    ) -> Result<Self> {
        match kind {
            ExtensionKind::Semidirect(d) if d < 2 => {
                return Err(Error::InvalidConfig { field: "d".into(), reason: format!("semidirect needs d >= 2, got {d}") })
            }
            ExtensionKind::Zpd(0) | ExtensionKind::Uniform(0) => {
                return Err(Error::InvalidConfig { field: "d".into(), reason: "dimension must be positive".into() })
            }
            _ => {}
        }
        // Z_p^d-extensions are unramified outside p.
        if matches!(kind, ExtensionKind::Zp | ExtensionKind::Zpd(_)) && !ramified_primes.is_empty() {
            return Err(Error::InvalidConfig {
                field: "ramified".into(),
                reason: format!("a {kind} extension is unramified outside p; the list must be empty"),
            });
        }
        let mut asserted = asserted;
        asserted.sort_unstable();
        asserted.dedup();
        Ok(ExtensionDescriptor { kind, ramified_primes, asserted, notes: notes.into() })
    }

    pub fn unramified_outside_p(kind: ExtensionKind) -> Result<Self> {
        Self::new(kind, Vec::new(), Vec::new(), "")
    }

    pub fn asserts(&self, h: Hypothesis) -> bool {
        self.asserted.contains(&h)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub description: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub field_label: String,
    pub p: u64,
    pub i: u32,
    pub kind: ExtensionKind,
    pub certified: bool,
    pub conditions: Vec<Condition>,
    pub assumptions: Vec<String>,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "field\t{}", self.field_label)?;
        writeln!(f, "p\t{}", self.p)?;
        writeln!(f, "i\t{}", self.i)?;
        writeln!(f, "extension\t{}", self.kind)?;
        for c in &self.conditions {
            writeln!(f, "condition\t{}\t{}", if c.holds { "ok" } else { "FAILED" }, c.description)?;
        }
        for a in &self.assumptions {
            writeln!(f, "assumption\t{a}")?;
        }
        writeln!(f, "result\t{}", if self.certified { "Certified" } else { "NotCertified" })
    }
}

/// Certifies `K_{2i-2}(O_L)[p] = 0` for every finite layer `L` of the tower.
pub fn vanishing_propagation(record: &KGroupRecord, ext: &ExtensionDescriptor, p: Prime) -> Certificate {
    let i = record.i;
    let mut conditions = Vec::new();
    conditions.push(Condition { description: format!("p = {} is odd", p.get()), holds: p.is_odd() });
    let log = record.p_part_log(p);
    conditions.push(Condition {
        description: format!("K_{}(O_F)[p] = 0 (p-part of order has log_p {log})", 2 * i - 2),
        holds: log == 0,
    });
    for v in ext.ramified_primes.iter().filter(|v| v.ramified) {
        let (description, holds) = match h1_local_order(v.q, i, p) {
            Ok(0) => (format!("{}: |k_v|^{}-1 = {}^{}-1 is prime to p", v.label, i - 1, v.q, i - 1), true),
            Ok(e) => (format!("{}: ord_p({}^{}-1) = {e} > 0", v.label, v.q, i - 1), false),
            Err(e) => (format!("{}: {e}", v.label), false),
        };
        conditions.push(Condition { description, holds });
    }
    Certificate {
        field_label: record.field_label.clone(),
        p: p.get(),
        i,
        kind: ext.kind,
        certified: conditions.iter().all(|c| c.holds),
        conditions,
        assumptions: vec![H2_IDENTIFICATION.to_string()],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorsionType {
    /// `[p^∞]`
    Full,
    /// `[p^n]` at level `n`
    Level,
}

impl fmt::Display for TorsionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TorsionType::Full => "p^inf",
            TorsionType::Level => "p^n",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthLaw {
    ZpGrowth,
    ZpdGrowth,
    UniformMu,
    UniformRankBound,
    SemidirectRank,
}

impl GrowthLaw {
    pub fn tag(self) -> &'static str {
        match self {
            GrowthLaw::ZpGrowth => "zp-growth",
            GrowthLaw::ZpdGrowth => "zpd-growth",
            GrowthLaw::UniformMu => "uniform-mu-growth",
            GrowthLaw::UniformRankBound => "uniform-rank-bound/UPPER_BOUND",
            GrowthLaw::SemidirectRank => "semidirect-rank-growth",
        }
    }

    pub fn is_upper_bound(self) -> bool {
        self == GrowthLaw::UniformRankBound
    }

    pub fn o_class(self) -> &'static str {
        match self {
            GrowthLaw::ZpGrowth => "O(1)",
            GrowthLaw::ZpdGrowth | GrowthLaw::SemidirectRank => "O(p^{(d-1)n})",
            GrowthLaw::UniformMu => "O(np^{(d-1)n})",
            GrowthLaw::UniformRankBound => "O(np^{(d-2)n})",
        }
    }

    pub fn torsion(self) -> TorsionType {
        match self {
            GrowthLaw::UniformMu | GrowthLaw::UniformRankBound => TorsionType::Level,
            _ => TorsionType::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionRow {
    pub n: u32,
    /// Predicted `log_p` of the torsion subgroup, without the O-term.
    pub main_term: BigInt,
    pub law: GrowthLaw,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerPrediction {
    pub kind: ExtensionKind,
    pub p: u64,
    pub i: u32,
    pub rows: Vec<PredictionRow>,
    pub assumptions: Vec<String>,
}

fn slot<T: Copy>(v: Option<T>, name: &str, kind: ExtensionKind) -> Result<T> {
    v.ok_or_else(|| Error::MissingInvariant(format!("{name} (needed for {kind})")))
}

/// Main terms of the growth law for `ext` at each `n` in `levels`.
pub fn predict_growth(
    inv: &InvariantReport,
    ext: &ExtensionDescriptor,
    p: Prime,
    i: u32,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<TowerPrediction> {
    p.require_odd()?;
    if i < 2 {
        return Err(Error::InvalidConfig { field: "i".into(), reason: format!("twist must be >= 2, got {i}") });
    }
    if inv.p != p.get() {
        return Err(Error::InvalidConfig {
            field: "p".into(),
            reason: format!("invariants were computed for p = {}, prediction asked for p = {}", inv.p, p.get()),
        });
    }
    let kind = ext.kind;
    let d = kind.dimension();
    if inv.d != d {
        return Err(Error::InvalidConfig {
            field: "d".into(),
            reason: format!("invariants have d = {}, extension {kind} has d = {d}", inv.d),
        });
    }
    let pb = BigInt::from(p.get());
    let mut assumptions = vec![H2_IDENTIFICATION.to_string()];
    let mut laws: Vec<(GrowthLaw, Box<dyn Fn(u32) -> BigInt>)> = Vec::new();

    match kind {
        ExtensionKind::Zp => {
            let mu = slot(inv.mu, "mu", kind)?;
            let lambda = slot(inv.lambda, "lambda", kind)?;
            let pb = pb.clone();
            laws.push((GrowthLaw::ZpGrowth, Box::new(move |n| mu * pb.pow(n) + BigInt::from(lambda) * n)));
        }
        ExtensionKind::Zpd(_) => {
            let mu = slot(inv.mu, "mu", kind)?;
            let l0 = slot(inv.l0, "l0", kind)?;
            let pb = pb.clone();
            laws.push((
                GrowthLaw::ZpdGrowth,
                Box::new(move |n| mu * pb.pow(d * n) + BigInt::from(l0) * n * pb.pow((d - 1) * n)),
            ));
        }
        ExtensionKind::Uniform(_) => {
            let mu = slot(inv.mu, "mu", kind)?;
            let pb2 = pb.clone();
            laws.push((GrowthLaw::UniformMu, Box::new(move |n| mu * pb2.pow(d * n))));
            let needed =
                [Hypothesis::QuotientIsZp, Hypothesis::DecompositionDimensionTwo, Hypothesis::FinitelyGeneratedOverH];
            match (inv.rank_over_h, inv.mu_h) {
                (Some(rho), Some(mu_h)) if d >= 2 && needed.iter().all(|&h| ext.asserts(h)) => {
                    let pb = pb.clone();
                    laws.push((
                        GrowthLaw::UniformRankBound,
                        Box::new(move |n| (BigInt::from(rho) * n + mu_h) * pb.pow((d - 1) * n)),
                    ));
                    assumptions.extend(needed.iter().map(|h| format!("asserted, unchecked: {}", h.statement())));
                }
                (Some(_), Some(_)) => assumptions.push(format!(
                    "rank upper bound omitted: needs d >= 2 and asserted {}",
                    needed.map(|h| h.name()).join(", ")
                )),
                _ => {}
            }
        }
        ExtensionKind::Semidirect(_) => {
            let needed =
                [Hypothesis::NormalSubgroupIsZpd, Hypothesis::DecompositionDimensionTwo, Hypothesis::FinitelyGeneratedOverH];
            if let Some(h) = needed.iter().find(|&&h| !ext.asserts(h)) {
                return Err(Error::HypothesisViolated(format!("semidirect growth needs asserted `{}`", h.name())));
            }
            let rho = slot(inv.rank_over_h, "rank_over_h", kind)?;
            let pb = pb.clone();
            laws.push((GrowthLaw::SemidirectRank, Box::new(move |n| BigInt::from(rho) * n * pb.pow((d - 1) * n))));
            assumptions.extend(needed.iter().map(|h| format!("asserted, unchecked: {}", h.statement())));
        }
    }

    let mut rows = Vec::new();
    for (law, f) in &laws {
        for n in levels.clone() {
            rows.push(PredictionRow { n, main_term: f(n), law: *law });
        }
    }
    rows.sort_by_key(|r| r.n);
    Ok(TowerPrediction { kind, p: p.get(), i, rows, assumptions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::Method;
    use proptest::prelude::*;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn report(p: u64, d: u32) -> InvariantReport {
        InvariantReport::empty(p, d, Method::Fitted)
    }

    #[test]
    fn record_validation() {
        assert!(matches!(KGroupRecord::new("F", 2, vec![2, 6], ""), Err(Error::NotPrimePower(6))));
        assert!(KGroupRecord::new("F", 1, vec![2], "").is_err());
        assert!(matches!(KGroupRecord::new("F", 2, vec![1], ""), Err(Error::NotPrimePower(1))));
        let r = browkin_gangl_record();
        assert_eq!(r.decomposition(), &[2, 2, 3, 37]);
    }

    #[test]
    fn h2_from_k_group() {
        let r = browkin_gangl_record();
        assert_eq!(k_even_order_to_h2(&r, pr(3)), 1);
        assert_eq!(k_even_order_to_h2(&r, pr(5)), 0);
        assert_eq!(k_even_order_to_h2(&r, pr(37)), 1);
        let empty = KGroupRecord::new("F", 3, vec![], "").unwrap();
        assert_eq!(k_even_order_to_h2(&empty, pr(7)), 0);
        let big = KGroupRecord::new("F", 2, vec![9, 27, 3, 4], "").unwrap();
        assert_eq!(k_even_order_to_h2(&big, pr(3)), 6);
    }

    #[test]
    fn change_of_s_examples() {
        let v = |q| LocalPrimeDatum::new(format!("q{q}"), q, false).unwrap();
        assert_eq!(change_of_s_order(1, &[v(4)], 2, pr(3)).unwrap(), 2);
        assert_eq!(change_of_s_order(0, &[], 2, pr(3)).unwrap(), 0);
        // ord_3(5 - 1) = 0 but ord_3(7 - 1) = 1
        assert_eq!(change_of_s_order(2, &[v(5), v(7)], 2, pr(3)).unwrap(), 3);
        assert_eq!(change_of_s_order(2, &[v(5), v(11)], 2, pr(3)).unwrap(), 2);
        assert!(matches!(change_of_s_order(0, &[v(9)], 2, pr(3)), Err(Error::ResidueCharacteristicP { q: 9, p: 3 })));
    }

    #[test]
    fn mod_p_h2_examples() {
        assert_eq!(mod_p_h2_dimension(0, 1).unwrap(), 0);
        assert_eq!(mod_p_h2_dimension(2, 3).unwrap(), 4);
        assert_eq!(mod_p_h2_dimension(5, 1).unwrap(), 5);
        assert!(mod_p_h2_dimension(1, 0).is_err());
    }

    #[test]
    fn vanishing_examples() {
        let r = browkin_gangl_record();
        let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zpd(2)).unwrap();
        for p in [5, 7, 11] {
            assert!(vanishing_propagation(&r, &ext, pr(p)).certified, "p = {p}");
        }
        for p in [3, 37] {
            let c = vanishing_propagation(&r, &ext, pr(p));
            assert!(!c.certified);
            assert!(!c.conditions[1].holds);
        }
        // p-part trivial but a ramified prime with 5 | 11 - 1
        let ext = ExtensionDescriptor::new(
            ExtensionKind::Uniform(2),
            vec![LocalPrimeDatum::new("v11", 11, true).unwrap()],
            vec![],
            "",
        )
        .unwrap();
        let c = vanishing_propagation(&r, &ext, pr(5));
        assert!(!c.certified);
        assert!(c.conditions[1].holds && !c.conditions[2].holds);
        assert!(c.to_string().ends_with("result\tNotCertified\n"));
        assert!(vanishing_propagation(&r, &ext, pr(7)).certified);
    }

    #[test]
    fn descriptor_constraints() {
        assert!(ExtensionDescriptor::unramified_outside_p(ExtensionKind::Semidirect(1)).is_err());
        let v = LocalPrimeDatum::new("v", 4, true).unwrap();
        assert!(ExtensionDescriptor::new(ExtensionKind::Zpd(2), vec![v.clone()], vec![], "").is_err());
        assert!(ExtensionDescriptor::new(ExtensionKind::Zp, vec![v.clone()], vec![], "").is_err());
        assert!(ExtensionDescriptor::new(ExtensionKind::Semidirect(2), vec![v], vec![], "").is_ok());
        assert_eq!(ExtensionKind::from_parts("zpd", Some(3)).unwrap(), ExtensionKind::Zpd(3));
        assert!(ExtensionKind::from_parts("zp", Some(2)).is_err());
        assert!(ExtensionKind::from_parts("uniform", None).is_err());
    }

    fn mains(t: &TowerPrediction) -> Vec<BigInt> {
        t.rows.iter().map(|r| r.main_term.clone()).collect()
    }

    #[test]
    fn predict_zp() {
        let mut inv = report(3, 1);
        inv.mu = Some(2);
        inv.lambda = Some(1);
        let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zp).unwrap();
        let t = predict_growth(&inv, &ext, pr(3), 2, 0..=4).unwrap();
        assert_eq!(mains(&t), [2, 7, 20, 57, 166].map(BigInt::from).to_vec());
        assert!(t.rows.iter().all(|r| r.law.torsion() == TorsionType::Full && r.law.o_class() == "O(1)"));
        inv.lambda = None;
        assert!(matches!(predict_growth(&inv, &ext, pr(3), 2, 0..=4), Err(Error::MissingInvariant(_))));
    }

    #[test]
    fn predict_zpd() {
        let mut inv = report(3, 2);
        inv.mu = Some(0);
        inv.l0 = Some(1);
        let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zpd(2)).unwrap();
        let t = predict_growth(&inv, &ext, pr(3), 2, 2..=2).unwrap();
        assert_eq!(mains(&t), vec![BigInt::from(18)]);
        assert_eq!(t.rows[0].law.o_class(), "O(p^{(d-1)n})");
    }

    #[test]
    fn predict_uniform_and_bound() {
        let mut inv = report(3, 2);
        inv.mu = Some(1);
        let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Uniform(2)).unwrap();
        let t = predict_growth(&inv, &ext, pr(3), 2, 0..=2).unwrap();
        assert_eq!(mains(&t), [1, 9, 81].map(BigInt::from).to_vec());
        assert!(t.rows.iter().all(|r| r.law.torsion() == TorsionType::Level));

        inv.rank_over_h = Some(2);
        inv.mu_h = Some(1);
        let t = predict_growth(&inv, &ext, pr(3), 2, 0..=2).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.assumptions.iter().any(|a| a.contains("omitted")));

        let ext = ExtensionDescriptor::new(
            ExtensionKind::Uniform(2),
            vec![],
            vec![Hypothesis::QuotientIsZp, Hypothesis::DecompositionDimensionTwo, Hypothesis::FinitelyGeneratedOverH],
            "",
        )
        .unwrap();
        let t = predict_growth(&inv, &ext, pr(3), 2, 0..=2).unwrap();
        let bound: Vec<BigInt> = t.rows.iter().filter(|r| r.law.is_upper_bound()).map(|r| r.main_term.clone()).collect();
        // (2n + 1)·3^n
        assert_eq!(bound, [1, 9, 45].map(BigInt::from).to_vec());
    }

    #[test]
    fn predict_semidirect() {
        let mut inv = report(3, 2);
        inv.rank_over_h = Some(1);
        let bare = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Semidirect(2)).unwrap();
        assert!(matches!(predict_growth(&inv, &bare, pr(3), 2, 0..=3), Err(Error::HypothesisViolated(_))));
        let ext = ExtensionDescriptor::new(
            ExtensionKind::Semidirect(2),
            vec![],
            vec![
                Hypothesis::NormalSubgroupIsZpd,
                Hypothesis::DecompositionDimensionTwo,
                Hypothesis::FinitelyGeneratedOverH,
            ],
            "",
        )
        .unwrap();
        let t = predict_growth(&inv, &ext, pr(3), 2, 0..=3).unwrap();
        assert_eq!(mains(&t), [0, 3, 18, 81].map(BigInt::from).to_vec());
        assert!(t.rows.iter().all(|r| r.law.torsion() == TorsionType::Full));
        assert_eq!(t.assumptions.len(), 4);
    }

    #[test]
    fn predict_rejects_mismatched_report() {
        let mut inv = report(5, 1);
        inv.mu = Some(0);
        inv.lambda = Some(0);
        let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zp).unwrap();
        assert!(predict_growth(&inv, &ext, pr(3), 2, 0..=1).is_err());
        let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zpd(2)).unwrap();
        assert!(predict_growth(&inv, &ext, pr(5), 2, 0..=1).is_err());
    }

    proptest! {
        #[test]
        fn change_of_s_is_monotone(base in 0u64..5, qs in proptest::collection::vec(prop::sample::select(vec![2u64, 4, 5, 7, 8, 13, 16, 19, 25, 31]), 0..6), i in 2u32..5) {
            let p = pr(3);
            let locals: Vec<LocalPrimeDatum> = qs.iter().map(|&q| LocalPrimeDatum::new("v", q, true).unwrap()).collect();
            let mut prev = change_of_s_order(base, &[], i, p).unwrap();
            for k in 1..=locals.len() {
                let next = change_of_s_order(base, &locals[..k], i, p).unwrap();
                prop_assert!(next >= prev);
                prev = next;
            }
        }

        #[test]
        fn certified_implies_trivial_p_part(entries in proptest::collection::vec(prop::sample::select(vec![2u64, 3, 4, 5, 7, 9, 11, 25, 37]), 0..6), p in prop::sample::select(vec![3u64, 5, 7, 11, 37])) {
            let r = KGroupRecord::new("F", 2, entries, "").unwrap();
            let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zpd(2)).unwrap();
            if vanishing_propagation(&r, &ext, pr(p)).certified {
                prop_assert_eq!(k_even_order_to_h2(&r, pr(p)), 0);
            }
        }

        #[test]
        fn zp_main_minus_lambda_n_is_mu_p_n(mu in 0u64..5, lambda in 0u64..9) {
            let mut inv = report(3, 1);
            inv.mu = Some(mu);
            inv.lambda = Some(lambda);
            let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zp).unwrap();
            let t = predict_growth(&inv, &ext, pr(3), 2, 0..=8).unwrap();
            for r in &t.rows {
                prop_assert_eq!(&r.main_term - BigInt::from(lambda * r.n as u64), BigInt::from(mu * 3u64.pow(r.n)));
            }
        }
    }
}
