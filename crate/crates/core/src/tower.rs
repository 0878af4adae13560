//! Finitely presented `Λ_d`-modules and their coinvariant towers.
//!
//! `M_{G_n} = M / (ω_n(T_1), .., ω_n(T_d)) M` is a finite free-or-torsion
//! `Z/p^N`-module. Because every `ω_n(T_j)` is monic, reducing monomials
//! modulo the ideal is plain Euclidean division in each variable, and
//! `Λ_d / (ω_n(T_j))_j` has the monomial basis `∏ T_j^{a_j}`, `a_j < p^n`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::determinant::lift_univariate;
use crate::algebra::series::{omega_integer, PrecisionContext, SeriesElement};
use crate::error::{Error, Result};
use crate::linalg::{snf, AbelianShape, ModMatrix};
use crate::padic::ord_p_big;
use crate::par::{self, Execution};

/// Default bound on `k * p^{dn}`, the basis size of `M_{G_n}`.
pub const MAX_DIMENSION: usize = 20_000;
pub const MAX_GENERATORS: usize = 64;
pub const MAX_RELATIONS: usize = 512;
/// Default precision guard: levels with `N - max exponent < guard` are flagged.
pub const DEFAULT_GUARD: u32 = 2;

/// `M = Λ_d^k / ⟨rows of R⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModulePresentation {
    ctx: PrecisionContext,
    generators: usize,
    relations: Vec<Vec<SeriesElement>>,
}

impl ModulePresentation {
    pub fn new(ctx: PrecisionContext, generators: usize, relations: Vec<Vec<SeriesElement>>) -> Result<Self> {
        if generators == 0 || generators > MAX_GENERATORS {
            return Err(Error::DimensionOverflow { dim: generators, bound: MAX_GENERATORS });
        }
        if relations.len() > MAX_RELATIONS {
            return Err(Error::DimensionOverflow { dim: relations.len(), bound: MAX_RELATIONS });
        }
        for (i, r) in relations.iter().enumerate() {
            if r.len() != generators {
                return Err(Error::InvalidConfig {
                    field: format!("relations[{i}]"),
                    reason: format!("has {} entries, expected {generators}", r.len()),
                });
            }
            if r.iter().any(|e| *e.context() != ctx) {
                return Err(Error::ContextMismatch);
            }
        }
        Ok(ModulePresentation { ctx, generators, relations })
    }

    /// `Λ_d^k` with no relations.
    pub fn free(ctx: PrecisionContext, generators: usize) -> Result<Self> {
        Self::new(ctx, generators, Vec::new())
    }

    /// `Λ_d / (f)`.
    pub fn cyclic(f: SeriesElement) -> Self {
        let ctx = *f.context();
        ModulePresentation { ctx, generators: 1, relations: vec![vec![f]] }
    }

    /// Diagonal presentation `⊕ Λ_d / (f_i)`.
    pub fn diagonal(ctx: PrecisionContext, entries: Vec<SeriesElement>) -> Result<Self> {
        let k = entries.len();
        let rows = entries
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let mut row = vec![SeriesElement::zero(ctx); k];
                row[i] = f;
                row
            })
            .collect();
        Self::new(ctx, k, rows)
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn relations(&self) -> &[Vec<SeriesElement>] {
        &self.relations
    }

    pub fn is_square(&self) -> bool {
        self.relations.len() == self.generators
    }

    /// Direct sum of two presentations over the same context.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        let k = self.generators + other.generators;
        let zero = SeriesElement::zero(self.ctx);
        let mut rows = Vec::with_capacity(self.relations.len() + other.relations.len());
        for r in &self.relations {
            let mut row = r.clone();
            row.resize(k, zero.clone());
            rows.push(row);
        }
        for r in &other.relations {
            let mut row = vec![zero.clone(); self.generators];
            row.extend(r.iter().cloned());
            rows.push(row);
        }
        Self::new(self.ctx, k, rows)
    }

    /// `M / p^s M`.
    pub fn mod_p_power(&self, s: u32) -> Result<Self> {
        let scalar = match self.ctx.prime().checked_pow(s) {
            Some(v) if v < self.ctx.modulus() => SeriesElement::constant(self.ctx, v as i128),
            _ => SeriesElement::zero(self.ctx),
        };
        let mut rows = self.relations.clone();
        if !scalar.is_zero() {
            for i in 0..self.generators {
                let mut row = vec![SeriesElement::zero(self.ctx); self.generators];
                row[i] = scalar.clone();
                rows.push(row);
            }
        }
        Self::new(self.ctx, self.generators, rows)
    }
}

/// Sparse vector over `Z/p^N`.
type Sparse = Vec<(usize, u64)>;

/// `red[e] = T^e mod ω_n(T)` on the basis `1, T, .., T^{L-1}`.
fn reduction_table(ctx: &PrecisionContext, n: u32, max_exponent: usize) -> Vec<Sparse> {
    let m = ctx.modulus();
    let len = ctx.prime().get().pow(n) as usize;
    // T^L = -(ω_n - T^L)
    let tail: Vec<u64> =
        omega_integer(ctx.prime(), n)[..len].iter().map(|c| (m - ctx.reduce_big(c)) % m).collect();
    let mut table: Vec<Sparse> = Vec::with_capacity(max_exponent + 1);
    let mut dense = vec![0u64; len];
    for e in 0..=max_exponent {
        if e < len {
            table.push(vec![(e, 1)]);
            if e + 1 == len {
                dense = vec![0; len];
                dense[len - 1] = 1;
            }
            continue;
        }
        // multiply the previous reduction by T
        let top = dense[len - 1];
        for i in (1..len).rev() {
            dense[i] = dense[i - 1];
        }
        dense[0] = 0;
        if top != 0 {
            for (slot, &t) in dense.iter_mut().zip(&tail) {
                *slot = (*slot + top * t) % m;
            }
        }
        table.push(dense.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)).collect());
    }
    table
}

/// Adds `c * ⊗_j table[e_j]` into `out` at `offset` (index `Σ b_j L^j`).
fn add_tensor(out: &mut [u64], offset: usize, len: usize, factors: &[&Sparse], c: u64, m: u64) {
    let mut cur: Vec<(usize, u64)> = vec![(0, c)];
    let mut stride = 1;
    for f in factors {
        let mut next = Vec::with_capacity(cur.len() * f.len());
        for &(b, v) in f.iter() {
            for &(t, w) in &cur {
                next.push((t + b * stride, w * v % m));
            }
        }
        cur = next;
        stride *= len;
    }
    for (idx, v) in cur {
        let slot = &mut out[offset + idx];
        *slot = (*slot + v) % m;
    }
}

fn level_length(ctx: &PrecisionContext, n: u32) -> Result<usize> {
    ctx.prime()
        .checked_pow(n)
        .map(|l| l as usize)
        .filter(|&l| l <= MAX_DIMENSION)
        .ok_or(Error::DimensionOverflow { dim: usize::MAX, bound: MAX_DIMENSION })
}

fn all_indices(len: usize, vars: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = len.pow(vars as u32);
    (0..total).map(move |mut x| {
        (0..vars)
            .map(|_| {
                let a = x % len;
                x /= len;
                a
            })
            .collect()
    })
}

/// Relation matrix of `M / (ω_n(T_1), .., ω_n(T_d))` over `Z/p^N`, optionally
/// with `p^s` times every basis vector added.
fn coinvariant_matrix(m: &ModulePresentation, n: u32, scalar: Option<u32>, bound: usize) -> Result<ModMatrix> {
    let ctx = m.ctx;
    let d = ctx.vars();
    let len = level_length(&ctx, n)?;
    let block = len.checked_pow(d as u32).unwrap_or(usize::MAX);
    let cols = block.saturating_mul(m.generators);
    if cols > bound {
        return Err(Error::DimensionOverflow { dim: cols, bound });
    }
    let modulus = ctx.modulus();
    let max_deg = m
        .relations
        .iter()
        .flatten()
        .filter_map(|e| e.max_degree())
        .max()
        .unwrap_or(0);
    let table = reduction_table(&ctx, n, len - 1 + max_deg);
    let mut out = ModMatrix::zeros(ctx.prime(), ctx.precision(), 0, cols)?;
    let mut row = vec![0u64; cols];
    for rel in &m.relations {
        for a in all_indices(len, d) {
            row.iter_mut().for_each(|x| *x = 0);
            for (i, entry) in rel.iter().enumerate() {
                for (e, c) in entry.terms() {
                    let factors: Vec<&Sparse> =
                        e.iter().zip(&a).map(|(&ej, &aj)| &table[ej as usize + aj]).collect();
                    add_tensor(&mut row, i * block, len, &factors, c, modulus);
                }
            }
            if row.iter().any(|&x| x != 0) {
                out.push_row(&row);
            }
        }
    }
    if let Some(s) = scalar {
        if let Some(ps) = ctx.prime().checked_pow(s).filter(|&v| v < modulus) {
            for b in 0..cols {
                row.iter_mut().for_each(|x| *x = 0);
                row[b] = ps;
                out.push_row(&row);
            }
        }
    }
    Ok(out)
}

/// Shape of `M_{G_n}` as a `Z/p^N`-module.
pub fn coinvariants(m: &ModulePresentation, n: u32) -> Result<AbelianShape> {
    coinvariants_bounded(m, n, MAX_DIMENSION)
}

pub fn coinvariants_bounded(m: &ModulePresentation, n: u32, bound: usize) -> Result<AbelianShape> {
    Ok(snf(&coinvariant_matrix(m, n, None, bound)?))
}

/// Shape of `M_{G_n} / p^n`.
pub fn coinvariants_mod_pn(m: &ModulePresentation, n: u32) -> Result<AbelianShape> {
    Ok(snf(&coinvariant_matrix(m, n, Some(n), MAX_DIMENSION)?))
}

/// `M / (ω_n(T_j) : j ∈ vars) M` as a module over the remaining variables.
///
/// Generator `(i, a)` of the result is `T^a e_i` for `a` a multi-index in
/// the reduced variables, numbered `i * L^|vars| + Σ a_t L^t`.
pub fn partial_coinvariants(m: &ModulePresentation, vars: &[usize], n: u32) -> Result<ModulePresentation> {
    let ctx = m.ctx;
    let d = ctx.vars();
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() >= d || sorted.iter().any(|&j| j >= d) {
        return Err(Error::InvalidConfig {
            field: "vars".into(),
            reason: format!("need a proper nonempty subset of 0..{d}, got {vars:?}"),
        });
    }
    let rest: Vec<usize> = (0..d).filter(|j| !sorted.contains(j)).collect();
    let out_ctx = ctx.with_vars(rest.len())?;
    let len = level_length(&ctx, n)?;
    let block = len.pow(sorted.len() as u32);
    let k = m.generators * block;
    if k > MAX_GENERATORS {
        return Err(Error::DimensionOverflow { dim: k, bound: MAX_GENERATORS });
    }
    let max_deg = m.relations.iter().flatten().filter_map(|e| e.max_degree()).max().unwrap_or(0);
    let table = reduction_table(&ctx, n, len - 1 + max_deg);
    let modulus = ctx.modulus();
    let mut relations = Vec::new();
    for rel in &m.relations {
        for a in all_indices(len, sorted.len()) {
            let mut row = vec![SeriesElement::zero(out_ctx); k];
            for (i, entry) in rel.iter().enumerate() {
                for (e, c) in entry.terms() {
                    let factors: Vec<&Sparse> =
                        sorted.iter().zip(&a).map(|(&j, &aj)| &table[e[j] as usize + aj]).collect();
                    let mut coeffs = vec![0u64; block];
                    add_tensor(&mut coeffs, 0, len, &factors, c, modulus);
                    let rest_exp: Vec<u32> = rest.iter().map(|&j| e[j]).collect();
                    for (b, &v) in coeffs.iter().enumerate() {
                        if v != 0 {
                            let mono = SeriesElement::monomial(out_ctx, rest_exp.clone(), v as i128);
                            row[i * block + b] = &row[i * block + b] + &mono;
                        }
                    }
                }
            }
            if row.iter().any(|e| !e.is_zero()) {
                relations.push(row);
            }
        }
    }
    ModulePresentation::new(out_ctx, k, relations)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TowerFlag {
    /// `N - max torsion exponent` fell below the guard.
    PrecisionMargin(u32),
    /// The level could not be computed.
    Failed(String),
}

impl fmt::Display for TowerFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TowerFlag::PrecisionMargin(m) => write!(f, "margin={m}"),
            TowerFlag::Failed(why) => write!(f, "failed:{}", why.replace(['\t', '\n', ','], " ")),
        }
    }
}

impl FromStr for TowerFlag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(m) = s.strip_prefix("margin=") {
            return m.parse().map(TowerFlag::PrecisionMargin).map_err(|_| Error::parse(0, format!("bad flag `{s}`")));
        }
        if let Some(why) = s.strip_prefix("failed:") {
            return Ok(TowerFlag::Failed(why.to_string()));
        }
        Err(Error::parse(0, format!("unknown flag `{s}`")))
    }
}

/// One level of a tower.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TowerDatum {
    pub n: u32,
    pub log_torsion: u64,
    pub zp_rank: u64,
    pub flags: Vec<TowerFlag>,
}

impl TowerDatum {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }

    fn from_shape(n: u32, shape: &AbelianShape, guard: u32) -> Self {
        let margin = shape.precision_margin();
        let flags = if margin < guard { vec![TowerFlag::PrecisionMargin(margin)] } else { Vec::new() };
        TowerDatum { n, log_torsion: shape.log_torsion(), zp_rank: shape.free_rank as u64, flags }
    }

    fn failed(n: u32, e: &Error) -> Self {
        TowerDatum { n, log_torsion: 0, zp_rank: 0, flags: vec![TowerFlag::Failed(e.to_string())] }
    }
}

/// What each tower level measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TowerKind {
    /// `log_p |M_{G_n}[p^∞]|` and `rank_{Z_p} M_{G_n}`.
    Coinvariants,
    /// `log_p |M_{G_n} / p^n|`, stored in `log_torsion`.
    ModPn,
}

#[derive(Clone, Copy, Debug)]
pub struct TowerOptions {
    pub guard: u32,
    pub dimension_bound: usize,
    pub execution: Execution,
    pub kind: TowerKind,
}

impl Default for TowerOptions {
    fn default() -> Self {
        TowerOptions {
            guard: DEFAULT_GUARD,
            dimension_bound: MAX_DIMENSION,
            execution: Execution::default(),
            kind: TowerKind::Coinvariants,
        }
    }
}

/// `k · p^{dn}`, the Z/p^N-dimension of the level-`n` coinvariant matrix.
pub fn level_dimension(m: &ModulePresentation, n: u32) -> Option<usize> {
    let ctx = m.context();
    let e = (ctx.vars() as u32).checked_mul(n)?;
    let per = ctx.prime().checked_pow(e)?;
    usize::try_from(per).ok()?.checked_mul(m.generators())
}

/// Rejects a tower whose top level would exceed `bound`.
pub fn check_tower_size(m: &ModulePresentation, n_max: u32, bound: usize) -> Result<()> {
    match level_dimension(m, n_max) {
        Some(dim) if dim <= bound => Ok(()),
        Some(dim) => Err(Error::DimensionOverflow { dim, bound }),
        None => Err(Error::DimensionOverflow { dim: usize::MAX, bound }),
    }
}

/// Coinvariants at levels `0..=n_max`; failures become flags.
pub fn tower(m: &ModulePresentation, n_max: u32) -> Vec<TowerDatum> {
    tower_with(m, n_max, &TowerOptions::default())
}

pub fn tower_mod_pn(m: &ModulePresentation, n_max: u32) -> Vec<TowerDatum> {
    tower_with(m, n_max, &TowerOptions { kind: TowerKind::ModPn, ..TowerOptions::default() })
}

pub fn tower_with(m: &ModulePresentation, n_max: u32, opts: &TowerOptions) -> Vec<TowerDatum> {
    let levels: Vec<u32> = (0..=n_max).collect();
    par::map(opts.execution, levels, |n| {
        let scalar = match opts.kind {
            TowerKind::Coinvariants => None,
            TowerKind::ModPn => Some(n),
        };
        match coinvariant_matrix(m, n, scalar, opts.dimension_bound) {
            Ok(matrix) => {
                let shape = snf(&matrix);
                let mut datum = TowerDatum::from_shape(n, &shape, opts.guard);
                if opts.kind == TowerKind::ModPn {
                    datum.log_torsion = shape.log_order();
                    datum.zp_rank = 0;
                }
                datum
            }
            Err(e) => TowerDatum::failed(n, &e),
        }
    })
}

pub const TOWER_TSV_HEADER: &str = "n\tlog_torsion\tzp_rank\tflags";

pub fn tower_to_tsv(data: &[TowerDatum]) -> String {
    let mut out = String::from(TOWER_TSV_HEADER);
    out.push('\n');
    for d in data {
        let flags = if d.flags.is_empty() {
            "-".to_string()
        } else {
            d.flags.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",")
        };
        out.push_str(&format!("{}\t{}\t{}\t{}\n", d.n, d.log_torsion, d.zp_rank, flags));
    }
    out
}

pub fn tower_from_tsv(text: &str) -> Result<Vec<TowerDatum>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    let expected: Vec<&str> = TOWER_TSV_HEADER.split('\t').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(1, format!("expected header `{}`", TOWER_TSV_HEADER.replace('\t', " "))));
    }
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
        let field = |i: usize| record.get(i).ok_or_else(|| Error::parse(line, "missing column"));
        let num = |i: usize| -> Result<u64> {
            field(i)?.trim().parse().map_err(|_| Error::parse(line, format!("column {} is not a number", expected[i])))
        };
        let flags_text = field(3)?.trim();
        let flags = if flags_text == "-" || flags_text.is_empty() {
            Vec::new()
        } else {
            flags_text
                .split(',')
                .map(|f| f.parse().map_err(|e: Error| Error::parse(line, e.to_string())))
                .collect::<Result<_>>()?
        };
        out.push(TowerDatum { n: num(0)? as u32, log_torsion: num(1)?, zp_rank: num(2)?, flags });
    }
    Ok(out)
}

type RatPoly = Vec<BigRational>;

fn rat_trim(p: &mut RatPoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn rat_rem(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lead = b.last().expect("nonzero divisor");
    while r.len() > db {
        let k = r.len() - 1 - db;
        let c = r.last().unwrap() / lead;
        for (i, bi) in b.iter().enumerate() {
            r[k + i] -= &c * bi;
        }
        r.pop();
        rat_trim(&mut r);
    }
    r
}

/// Exact resultant over `Q` by the Euclidean recursion
/// `Res(A, B) = (-1)^{ab} lc(B)^{a - r} Res(B, A mod B)`.
fn resultant(a: &RatPoly, b: &RatPoly) -> BigRational {
    if a.is_empty() || b.is_empty() {
        return BigRational::zero();
    }
    let (da, db) = (a.len() - 1, b.len() - 1);
    if db == 0 {
        return num_traits::pow(b[0].clone(), da);
    }
    if da == 0 {
        return num_traits::pow(a[0].clone(), db);
    }
    let r = rat_rem(a, b);
    if r.is_empty() {
        return BigRational::zero();
    }
    let dr = r.len() - 1;
    let sign = if (da * db) % 2 == 1 { -BigRational::one() } else { BigRational::one() };
    sign * num_traits::pow(b[db].clone(), da - dr) * resultant(b, &r)
}

pub fn integer_resultant(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let conv = |p: &[BigInt]| -> RatPoly {
        let mut v: RatPoly = p.iter().cloned().map(BigRational::from_integer).collect();
        rat_trim(&mut v);
        v
    };
    let res = resultant(&conv(a), &conv(b));
    assert!(res.is_integer(), "resultant of integer polynomials is an integer");
    res.to_integer()
}

/// `ord_p Res(f, ω_n)` on the canonical integer lift of `f`.
///
/// When finite this is `log_p |Λ_1 / (f, ω_n)|`. A lift sharing a root with
/// `ω_n` has resultant zero and yields `PrecisionExhausted`.
pub fn torsion_size_resultant_oracle(f: &SeriesElement, n: u32) -> Result<u64> {
    let ctx = f.context();
    if ctx.vars() != 1 {
        return Err(Error::HypothesisViolated("resultant oracle needs d = 1".into()));
    }
    if f.is_zero() {
        return Err(Error::ZeroInput);
    }
    let res = integer_resultant(&lift_univariate(f), &omega_integer(ctx.prime(), n));
    match ord_p_big(&res, ctx.prime()) {
        Ok(v) => Ok(v as u64),
        Err(_) => Err(Error::PrecisionExhausted(format!("Res(f, ω_{n}) = 0: f shares a factor with ω_{n}"))),
    }
}
