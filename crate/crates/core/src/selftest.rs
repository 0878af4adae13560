//! The oracle suite behind `iwk selftest`.
//!
//! Each property pairs two independent computations. Randomized properties
//! draw from a ChaCha stream keyed by the seed and the property name, and the
//! report is sorted by name, so runs are byte-identical for a fixed config.

use std::fmt;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{char_poly, parse_element, PrecisionContext, SeriesElement};
use crate::corpus::d1_torsion_corpus;
use crate::group_ring::{
    augmentation_quotients, group_corpus, quotient_coinvariant_check, valid_quotient_pairs, FiniteGroup,
    GroupRingModule,
};
use crate::invariants::{
    cuoco_monsky_hypothesis_check, exact_invariants_d1, fit_growth, mu_of_mod_pn, mu_positivity_equiv, GrowthModel,
    ModelFamily, DEFAULT_BURN_IN,
};
use crate::ktheory::{
    browkin_gangl_record, change_of_s_order, mod_p_h2_dimension, vanishing_propagation, ExtensionDescriptor,
    ExtensionKind, LocalPrimeDatum,
};
use crate::padic::{h1_local_order, valuation_tower, valuation_tower_direct, Prime};
use crate::par::{self, Execution};
use crate::tower::{
    check_tower_size, coinvariants, partial_coinvariants, torsion_size_resultant_oracle, tower_with, ModulePresentation,
    TowerOptions, MAX_DIMENSION,
};

pub const DEFAULT_SEED: u64 = 0x1a5a_2024;
/// Largest group order used by the self-test; the acceptance suite goes to 81.
pub const SELFTEST_GROUP_ORDER: usize = 27;

#[derive(Clone, Copy, Debug)]
pub struct SelftestConfig {
    pub p: Prime,
    pub seed: u64,
    pub guard: u32,
    pub max_group_order: usize,
    pub execution: Execution,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            p: Prime::new(3).expect("3 is prime"),
            seed: DEFAULT_SEED,
            guard: crate::tower::DEFAULT_GUARD,
            max_group_order: SELFTEST_GROUP_ORDER,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub status: Status,
    /// Number of individual comparisons made.
    pub checked: usize,
    pub detail: String,
}

struct Tally {
    name: &'static str,
    checked: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, checked: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) -> PropertyResult {
        let (status, detail) = match self.failures.len() {
            0 => (Status::Pass, "ok".to_string()),
            n => {
                let mut d = format!("{n} of {} failed; first: {}", self.checked, self.failures[0]);
                d = d.replace(['\t', '\n'], " ");
                (Status::Fail, d)
            }
        };
        PropertyResult { name: self.name, status, checked: self.checked, detail }
    }
}

fn skip(name: &'static str, why: impl Into<String>) -> PropertyResult {
    PropertyResult { name, status: Status::Skip, checked: 0, detail: why.into() }
}

fn rng_for(cfg: &SelftestConfig, name: &str) -> ChaCha8Rng {
    // FNV-1a keeps each property's stream independent of suite order.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(cfg.seed ^ h)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelftestReport {
    pub p: u64,
    pub seed: u64,
    pub guard: u32,
    pub results: Vec<PropertyResult>,
}

impl SelftestReport {
    pub fn count(&self, s: Status) -> usize {
        self.results.iter().filter(|r| r.status == s).count()
    }

    /// 0 when every property passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.count(Status::Pass) == self.results.len() {
            0
        } else {
            2
        }
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# selftest p={} seed={} guard={}", self.p, self.seed, self.guard)?;
        writeln!(f, "status\tproperty\tchecked\tdetail")?;
        for r in &self.results {
            writeln!(f, "{}\t{}\t{}\t{}", r.status, r.name, r.checked, r.detail)?;
        }
        writeln!(
            f,
            "# total={} pass={} fail={} skip={}",
            self.results.len(),
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Skip)
        )
    }
}

type Property = fn(&SelftestConfig) -> PropertyResult;

const PROPERTIES: &[Property] = &[
    valuation_tower_property,
    resultant_vs_snf,
    exact_vs_fitted,
    structure_theorem,
    mu_and_rank,
    mu_positivity,
    cuoco_monsky_instance,
    harris_degenerate,
    precision_flags,
    augmentation_inclusion,
    augmentation_normal_equality,
    quotient_direct_reversed,
    quotient_iterated,
    formula_evaluators,
    browkin_gangl,
];

pub fn run_selftest(cfg: &SelftestConfig) -> SelftestReport {
    let mut results = par::map(cfg.execution, PROPERTIES.to_vec(), |prop| prop(cfg));
    results.sort_by(|a, b| a.name.cmp(b.name));
    SelftestReport { p: cfg.p.get(), seed: cfg.seed, guard: cfg.guard, results }
}

fn tower_opts(cfg: &SelftestConfig) -> TowerOptions {
    TowerOptions { guard: cfg.guard, execution: Execution::Sequential, ..TowerOptions::default() }
}

/// Largest `n <= want` whose level fits the dimension bound.
fn fitting_level(m: &ModulePresentation, want: u32) -> u32 {
    (0..=want).rev().find(|&n| check_tower_size(m, n, MAX_DIMENSION).is_ok()).unwrap_or(0)
}

fn valuation_tower_property(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("valuation-tower");
    let mut rng = rng_for(cfg, t.name);
    for p in [3u64, 5, 7] {
        let prime = Prime::new(p).unwrap();
        for _ in 0..50 {
            let b = BigUint::from(1 + p * rng.random_range(1..1000u64));
            let n = rng.random_range(0..=6u32);
            let closed = valuation_tower(b.clone(), prime, n);
            let direct = valuation_tower_direct(&b, prime, n);
            t.check(closed.as_ref().ok() == Some(&direct), || format!("p={p} b={b} n={n}: {closed:?} vs {direct}"));
        }
    }
    t.finish()
}

fn resultant_vs_snf(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("resultant-vs-snf");
    let Ok(corpus) = d1_torsion_corpus(cfg.p) else {
        return skip(t.name, "corpus does not build over this p");
    };
    for (label, m) in corpus {
        let Ok(f) = char_poly(m.relations()) else { continue };
        for n in 0..=fitting_level(&m, 4) {
            if let (Ok(shape), Ok(res)) = (coinvariants(&m, n), torsion_size_resultant_oracle(&f, n)) {
                if shape.free_rank == 0 {
                    t.check(shape.log_torsion() == res, || format!("{label} n={n}: snf {} vs res {res}", shape.log_torsion()));
                }
            }
        }
    }
    t.finish()
}

fn exact_vs_fitted(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("exact-vs-fitted");
    let Ok(corpus) = d1_torsion_corpus(cfg.p) else {
        return skip(t.name, "corpus does not build over this p");
    };
    let model = GrowthModel::new(ModelFamily::IwasawaD1, cfg.p, 1).unwrap();
    for (label, m) in corpus {
        let Ok(exact) = exact_invariants_d1(&m) else { continue };
        let data = tower_with(&m, fitting_level(&m, 5), &tower_opts(cfg));
        match fit_growth(&data, &model, DEFAULT_BURN_IN) {
            Ok(fit) => t.check((fit.mu, fit.lambda) == (exact.mu, exact.lambda), || {
                format!("{label}: fit ({:?},{:?}) exact ({:?},{:?})", fit.mu, fit.lambda, exact.mu, exact.lambda)
            }),
            Err(e) => t.check(false, || format!("{label}: {e}")),
        }
    }
    t.finish()
}

fn structure_theorem(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("structure-theorem");
    let mut rng = rng_for(cfg, t.name);
    let ctx = PrecisionContext::new(cfg.p, 12, 1, 40).unwrap();
    for _ in 0..8 {
        let alphas: Vec<u32> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..=4)).collect();
        let r = rng.random_range(0..3usize);
        let mut entries: Vec<SeriesElement> = alphas.iter().map(|&a| SeriesElement::constant(ctx, cfg.p.get().pow(a) as i128)).collect();
        entries.extend((0..r).map(|_| SeriesElement::zero(ctx)));
        if entries.is_empty() {
            continue;
        }
        let m = ModulePresentation::diagonal(ctx, entries).unwrap();
        for n in 0..=fitting_level(&m, 3) {
            let shape = coinvariants(&m, n).unwrap();
            let pn = cfg.p.get().pow(n);
            let want = (pn * alphas.iter().map(|&a| a as u64).sum::<u64>(), r as u64 * pn);
            t.check((shape.log_torsion(), shape.free_rank as u64) == want, || {
                format!("alphas={alphas:?} r={r} n={n}: {shape}")
            });
        }
    }
    t.finish()
}

fn mu_and_rank(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("mu-and-rank");
    let mut rng = rng_for(cfg, t.name);
    let ctx = PrecisionContext::new(cfg.p, 12, 1, 40).unwrap();
    let model = GrowthModel::new(ModelFamily::IwasawaD1, cfg.p, 1).unwrap();
    for _ in 0..10 {
        let alphas: Vec<u64> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..=5)).collect();
        let r = rng.random_range(0..=2u64);
        let mut entries: Vec<SeriesElement> =
            alphas.iter().map(|&a| SeriesElement::constant(ctx, cfg.p.get().pow(a as u32) as i128)).collect();
        entries.extend((0..r).map(|_| SeriesElement::zero(ctx)));
        if entries.is_empty() {
            continue;
        }
        let m = ModulePresentation::diagonal(ctx, entries).unwrap();
        for n in 1..=4u32 {
            let quotient = m.mod_p_power(n).unwrap();
            let data = tower_with(&quotient, fitting_level(&quotient, 4), &tower_opts(cfg));
            let measured = fit_growth(&data, &model, DEFAULT_BURN_IN).ok().and_then(|f| f.mu);
            let formula = mu_of_mod_pn(&alphas, r, n as u64);
            t.check(measured == Some(formula), || format!("alphas={alphas:?} r={r} n={n}: {measured:?} vs {formula}"));
        }
    }
    t.finish()
}

/// A random distinguished polynomial of degree 1..=3.
fn random_distinguished(rng: &mut ChaCha8Rng, p: u64) -> String {
    let deg = rng.random_range(1..=3);
    let mut terms = vec![format!("T^{deg}")];
    for e in 0..deg {
        let c = rng.random_range(0..3u64) * p;
        let c = if e == 0 && c == 0 { p } else { c };
        if c != 0 {
            terms.push(format!("{c}*T^{e}"));
        }
    }
    terms.join(" + ")
}

fn mu_positivity(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("mu-positivity");
    let mut rng = rng_for(cfg, t.name);
    let ctx = PrecisionContext::new(cfg.p, 12, 1, 40).unwrap();
    for _ in 0..12 {
        let mu = rng.random_range(0..=2u32);
        let f = random_distinguished(&mut rng, cfg.p.get());
        let text = format!("p^{mu}*({f})");
        let m = ModulePresentation::cyclic(parse_element(ctx, &text).unwrap());
        match mu_positivity_equiv(&m) {
            Ok(r) => t.check(r.mu_positive == r.mu_mod_p_positive && r.mu == mu as u64, || {
                format!("{text}: mu={} mu(M/p)={}", r.mu, r.mu_mod_p)
            }),
            Err(e) => t.check(false, || format!("{text}: {e}")),
        }
    }
    t.finish()
}

fn cuoco_monsky_instance(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("cuoco-monsky-instance");
    let p = cfg.p.get();
    let ctx = PrecisionContext::new(cfg.p, 12, 2, 40).unwrap();
    let m = ModulePresentation::cyclic(parse_element(ctx, "T1 - p").unwrap());
    if check_tower_size(&m, 3, MAX_DIMENSION).is_err() {
        return skip(t.name, format!("level 3 exceeds the dimension bound for p = {p}"));
    }
    let data = tower_with(&m, 3, &tower_opts(cfg));
    for d in &data {
        let want = (d.n as u64 + 1) * p.pow(d.n);
        t.check(d.log_torsion == want, || format!("n={}: {} vs {want}", d.n, d.log_torsion));
    }
    let model = GrowthModel::new(ModelFamily::CuocoMonsky, cfg.p, 2).unwrap();
    match fit_growth(&data, &model, DEFAULT_BURN_IN) {
        Ok(r) => t.check((r.mu, r.l0) == (Some(0), Some(1)), || format!("fit mu={:?} l0={:?}", r.mu, r.l0)),
        Err(e) => t.check(false, || e.to_string()),
    }
    t.check(cuoco_monsky_hypothesis_check(&data, cfg.p, 2, DEFAULT_BURN_IN).holds, || "hypothesis rejected".into());
    let counter = ModulePresentation::cyclic(parse_element(ctx, "T1").unwrap());
    let data = tower_with(&counter, 3, &tower_opts(cfg));
    t.check(!cuoco_monsky_hypothesis_check(&data, cfg.p, 2, DEFAULT_BURN_IN).holds, || "Λ/(T1) accepted".into());
    t.finish()
}

fn harris_degenerate(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("harris-degenerate");
    let ctx = PrecisionContext::new(cfg.p, 8, 2, 40).unwrap();
    for s in 1..=2usize {
        let m = ModulePresentation::free(ctx, s).unwrap();
        for n in 0..=2u32 {
            let rank = partial_coinvariants(&m, &[0], n).and_then(|q| coinvariants(&q, 0)).map(|a| a.free_rank);
            let want = s * cfg.p.get().pow(n) as usize;
            t.check(rank.as_ref().ok() == Some(&want), || format!("s={s} n={n}: {rank:?} vs {want}"));
        }
    }
    t.finish()
}

fn precision_flags(cfg: &SelftestConfig) -> PropertyResult {
    let name = "precision-flags";
    if cfg.guard == 0 {
        return skip(name, "guard = 0 disables precision flagging");
    }
    let mut t = Tally::new(name);
    let precision = 12;
    let ctx = PrecisionContext::new(cfg.p, precision, 1, 40).unwrap();
    let opts = tower_opts(cfg);
    for e in 1..precision {
        let m = ModulePresentation::cyclic(parse_element(ctx, &format!("p^{e}")).unwrap());
        let level = &tower_with(&m, 0, &opts)[0];
        let expect_flag = precision - e < cfg.guard;
        t.check(level.is_clean() != expect_flag, || format!("p^{e}: flags {:?}", level.flags));
    }
    t.finish()
}

fn group_modules(cfg: &SelftestConfig) -> Option<Vec<GroupRingModule>> {
    if cfg.p.get() != 3 {
        return None;
    }
    Some(
        group_corpus()
            .into_iter()
            .filter(|g| g.order() <= cfg.max_group_order)
            .map(|g| GroupRingModule::regular(g, cfg.p, 2).unwrap())
            .collect(),
    )
}

fn group_label(g: &FiniteGroup) -> String {
    g.name().to_string()
}

fn augmentation_inclusion(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("augmentation-inclusion");
    let Some(modules) = group_modules(cfg) else {
        return skip(t.name, "group corpus consists of 3-groups");
    };
    for m in &modules {
        for u in m.group().subgroups() {
            let r = augmentation_quotients(m, &u).unwrap();
            t.check(r.contained, || format!("{} |U|={}", group_label(m.group()), u.order()));
        }
    }
    t.finish()
}

fn augmentation_normal_equality(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("augmentation-normal-equality");
    let Some(modules) = group_modules(cfg) else {
        return skip(t.name, "group corpus consists of 3-groups");
    };
    for m in &modules {
        for u in m.group().subgroups().into_iter().filter(|u| m.group().is_normal(u)) {
            let r = augmentation_quotients(m, &u).unwrap();
            t.check(r.log_i_u_quotient == r.log_m_u_quotient && !r.inclusion_strict, || {
                format!("{} |U|={}", group_label(m.group()), u.order())
            });
        }
    }
    t.finish()
}

fn quotient_shapes(
    cfg: &SelftestConfig,
    name: &'static str,
    agree: fn(&crate::group_ring::QuotientCoinvariantReport) -> bool,
) -> PropertyResult {
    let mut t = Tally::new(name);
    let Some(modules) = group_modules(cfg) else {
        return skip(name, "group corpus consists of 3-groups");
    };
    for m in &modules {
        for (h, gamma, mh, ng) in valid_quotient_pairs(m.group(), cfg.p.get()) {
            let r = quotient_coinvariant_check(m, &h, &gamma, mh, ng).unwrap();
            t.check(agree(&r), || {
                format!(
                    "{} |H|={} |Γ|={} m={mh} n={ng} G_mn normal={}: iterated {} direct {} reversed {}",
                    group_label(m.group()),
                    h.order(),
                    gamma.order(),
                    r.g_mn_normal,
                    r.iterated,
                    r.direct,
                    r.reversed
                )
            });
        }
    }
    t.finish()
}

fn quotient_direct_reversed(cfg: &SelftestConfig) -> PropertyResult {
    quotient_shapes(cfg, "quotient-coinvariants-direct-reversed", |r| r.direct == r.reversed)
}

/// `(M_{H_m})_{Γ_n} = M/M(G_{m,n})`. Fails when `G_{m,n}` is not normal.
fn quotient_iterated(cfg: &SelftestConfig) -> PropertyResult {
    quotient_shapes(cfg, "quotient-coinvariants-iterated", |r| r.iterated == r.direct)
}

/// `ord_p(x)` by testing `x ≡ 0 mod p^e` for growing `e` with modular powers.
fn ord_by_modpow(q: u64, k: u32, p: u64) -> u32 {
    let mut e = 1;
    loop {
        let m = BigUint::from(p).pow(e);
        if BigUint::from(q).modpow(&BigUint::from(k), &m) != BigUint::from(1u32) % &m {
            return e - 1;
        }
        e += 1;
    }
}

fn formula_evaluators(cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("formula-evaluators");
    let mut rng = rng_for(cfg, t.name);
    let p = cfg.p;
    let residue_fields: Vec<u64> = [2u64, 4, 5, 7, 8, 11, 13, 16, 17, 19, 23, 25, 29, 31, 37, 41, 43, 49, 73, 109]
        .into_iter()
        .filter(|q| q % p.get() != 0)
        .collect();
    for _ in 0..100 {
        let i = rng.random_range(2..=6u32);
        let q = residue_fields[rng.random_range(0..residue_fields.len())];
        let h1 = h1_local_order(q, i, p);
        let direct = ord_by_modpow(q, i - 1, p.get());
        t.check(h1.as_ref().ok() == Some(&direct), || format!("h1 q={q} i={i}: {h1:?} vs {direct}"));

        let base = rng.random_range(0..10u64);
        let locals: Vec<LocalPrimeDatum> = (0..rng.random_range(0..4))
            .map(|k| LocalPrimeDatum::new(format!("v{k}"), residue_fields[rng.random_range(0..residue_fields.len())], true).unwrap())
            .collect();
        let total = change_of_s_order(base, &locals, i, p);
        let direct: u64 = base + locals.iter().map(|v| ord_by_modpow(v.q, i - 1, p.get()) as u64).sum::<u64>();
        t.check(total.as_ref().ok() == Some(&direct), || format!("change of S: {total:?} vs {direct}"));

        let cl = rng.random_range(0..20u64);
        let sp = rng.random_range(1..6u64);
        let dim = mod_p_h2_dimension(cl, sp);
        t.check(dim.as_ref().ok() == Some(&(cl + sp - 1)), || format!("mod p H2 ({cl},{sp}): {dim:?}"));
    }
    t.finish()
}

fn browkin_gangl(_cfg: &SelftestConfig) -> PropertyResult {
    let mut t = Tally::new("browkin-gangl-vanishing");
    let record = browkin_gangl_record();
    let ext = ExtensionDescriptor::unramified_outside_p(ExtensionKind::Zpd(2)).unwrap();
    for (p, want) in [(3, false), (5, true), (7, true), (11, true), (37, false)] {
        let c = vanishing_propagation(&record, &ext, Prime::new(p).unwrap());
        t.check(c.certified == want, || format!("p={p}: certified={}", c.certified));
    }
    t.finish()
}
