//! μ, λ, l₀ and rank invariants: exact for `d = 1`, fitted otherwise.
//!
//! Fits are exact rational solves on the highest clean levels, never least
//! squares. Each growth law has integral main coefficients plus one bounded
//! O-term whose leading coefficient is solved for as a nuisance constant.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::algebra::determinant::char_poly;
use crate::algebra::weierstrass::weierstrass_prepare;
use crate::error::{Error, Result};
use crate::linalg::{rational, solve_rational};
use crate::padic::Prime;
use crate::tower::{tower, ModulePresentation, TowerDatum};

pub const DEFAULT_BURN_IN: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelFamily {
    IwasawaD1,
    CuocoMonsky,
    LiangLim,
    PerbetModPn,
    SemidirectRank,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::IwasawaD1,
        ModelFamily::CuocoMonsky,
        ModelFamily::LiangLim,
        ModelFamily::PerbetModPn,
        ModelFamily::SemidirectRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::IwasawaD1 => "iwasawa-d1",
            ModelFamily::CuocoMonsky => "cuoco-monsky",
            ModelFamily::LiangLim => "liang-lim",
            ModelFamily::PerbetModPn => "perbet-mod-pn",
            ModelFamily::SemidirectRank => "semidirect-rank",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::InvalidConfig {
            field: "model".into(),
            reason: format!(
                "unknown model `{s}`; expected one of {}",
                ModelFamily::ALL.map(|m| m.name()).join(", ")
            ),
        })
    }
}

/// Invariant slot filled by a fitted main coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Mu,
    Lambda,
    L0,
    Rank,
    RankOverH,
}

impl Slot {
    fn name(self) -> &'static str {
        match self {
            Slot::Mu => "mu",
            Slot::Lambda => "lambda",
            Slot::L0 => "l0",
            Slot::Rank => "rank",
            Slot::RankOverH => "rank_over_h",
        }
    }

    fn signed(self) -> bool {
        self == Slot::L0
    }
}

/// A growth law `Σ coeff_k · basis_k(n) + O(scale(n))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrowthModel {
    pub family: ModelFamily,
    pub p: Prime,
    pub d: u32,
}

impl GrowthModel {
    pub fn new(family: ModelFamily, p: Prime, d: u32) -> Result<Self> {
        p.require_odd()?;
        let ok = match family {
            ModelFamily::IwasawaD1 => d == 1,
            ModelFamily::SemidirectRank => d >= 2,
            _ => d >= 1,
        };
        if !ok {
            return Err(Error::InvalidConfig { field: "d".into(), reason: format!("{family} does not apply to d = {d}") });
        }
        Ok(GrowthModel { family, p, d })
    }

    fn pw(&self, e: u64) -> BigInt {
        BigInt::from(self.p.get()).pow(e as u32)
    }

    fn main_slots(&self) -> &'static [Slot] {
        match self.family {
            ModelFamily::IwasawaD1 => &[Slot::Mu, Slot::Lambda],
            ModelFamily::CuocoMonsky => &[Slot::Mu, Slot::L0],
            ModelFamily::LiangLim => &[Slot::Mu],
            ModelFamily::PerbetModPn => &[Slot::Rank, Slot::Mu],
            ModelFamily::SemidirectRank => &[Slot::RankOverH],
        }
    }

    /// Main-term basis at level `n`, in slot order.
    fn main_basis(&self, n: u32) -> Vec<BigInt> {
        let (n64, d) = (n as u64, self.d as u64);
        let nb = BigInt::from(n);
        match self.family {
            ModelFamily::IwasawaD1 => vec![self.pw(n64), nb],
            ModelFamily::CuocoMonsky => vec![self.pw(d * n64), nb * self.pw((d - 1) * n64)],
            ModelFamily::LiangLim => vec![self.pw(d * n64)],
            ModelFamily::PerbetModPn => vec![nb * self.pw(d * n64), self.pw(d * n64)],
            ModelFamily::SemidirectRank => vec![nb * self.pw((d - 1) * n64)],
        }
    }

    /// Growth of the O-term; also the nuisance basis function.
    fn scale(&self, n: u32) -> BigInt {
        let (n64, d) = (n as u64, self.d as u64);
        match self.family {
            ModelFamily::IwasawaD1 => BigInt::from(1),
            ModelFamily::CuocoMonsky | ModelFamily::SemidirectRank => self.pw((d - 1) * n64),
            ModelFamily::LiangLim | ModelFamily::PerbetModPn => BigInt::from(n) * self.pw((d - 1) * n64),
        }
    }

    pub fn o_class(&self) -> &'static str {
        match self.family {
            ModelFamily::IwasawaD1 => "O(1)",
            ModelFamily::CuocoMonsky | ModelFamily::SemidirectRank => "O(p^{(d-1)n})",
            ModelFamily::LiangLim | ModelFamily::PerbetModPn => "O(np^{(d-1)n})",
        }
    }

    fn unknowns(&self) -> usize {
        self.main_slots().len() + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Fitted,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Fitted => "fitted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub n: u32,
    /// Data minus main terms.
    pub value: BigInt,
    /// `value / scale(n)`.
    pub scaled: BigRational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The last scaled residual does not exceed the window bound.
    WindowConsistent,
    Inconsistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::WindowConsistent => "window-consistent",
            Verdict::Inconsistent => "inconsistent",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantReport {
    pub p: u64,
    pub d: u32,
    pub method: Method,
    pub model: Option<ModelFamily>,
    pub mu: Option<u64>,
    pub lambda: Option<u64>,
    pub l0: Option<i64>,
    /// Coefficient of `n p^{dn}` in the mod-`p^n` law.
    pub rank: Option<u64>,
    pub rank_over_h: Option<u64>,
    pub mu_h: Option<u64>,
    pub residuals: Vec<Residual>,
    /// Largest `|scaled residual|` on the window past burn-in.
    pub window_constant: Option<BigRational>,
    pub verdict: Option<Verdict>,
}

impl InvariantReport {
    pub fn empty(p: u64, d: u32, method: Method) -> Self {
        InvariantReport {
            p,
            d,
            method,
            model: None,
            mu: None,
            lambda: None,
            l0: None,
            rank: None,
            rank_over_h: None,
            mu_h: None,
            residuals: Vec::new(),
            window_constant: None,
            verdict: None,
        }
    }
}

/// μ and λ from the characteristic element of a square `d = 1` presentation.
pub fn exact_invariants_d1(m: &ModulePresentation) -> Result<InvariantReport> {
    let ctx = m.context();
    if ctx.vars() != 1 {
        return Err(Error::HypothesisViolated(format!("exact invariants need d = 1, got d = {}", ctx.vars())));
    }
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.relations().len(), cols: m.generators() });
    }
    let det = char_poly(m.relations())?;
    let form = weierstrass_prepare(&det)?;
    let mut report = InvariantReport::empty(ctx.prime().get(), 1, Method::Exact);
    report.mu = Some(form.mu as u64);
    report.lambda = Some(form.lambda as u64);
    Ok(report)
}

/// `n · r + Σ min(n, α_i)`: the μ-invariant of `M / p^n`.
pub fn mu_of_mod_pn(alphas: &[u64], r: u64, n: u64) -> u64 {
    n * r + alphas.iter().map(|&a| a.min(n)).sum::<u64>()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuPositivity {
    pub mu_positive: bool,
    pub mu_mod_p_positive: bool,
    pub mu: u64,
    pub mu_mod_p: u64,
}

/// Levels used for the `M/p` tower in [`mu_positivity_equiv`].
pub const MOD_P_LEVELS: u32 = 4;

/// Compares `μ(M) > 0` (exact) with `μ(M/p) > 0` (fitted on the tower of `M/p`).
pub fn mu_positivity_equiv(m: &ModulePresentation) -> Result<MuPositivity> {
    let exact = exact_invariants_d1(m)?;
    let mod_p = m.mod_p_power(1)?;
    let data = tower(&mod_p, MOD_P_LEVELS);
    let model = GrowthModel::new(ModelFamily::IwasawaD1, m.context().prime(), 1)?;
    let fit = fit_growth(&data, &model, DEFAULT_BURN_IN)?;
    let mu = exact.mu.expect("exact report has mu");
    let mu_mod_p = fit.mu.expect("iwasawa fit has mu");
    Ok(MuPositivity { mu_positive: mu > 0, mu_mod_p_positive: mu_mod_p > 0, mu, mu_mod_p })
}

fn to_rational(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

/// Whether the last value is not a new maximum: `|v_last| <= max(1, max |v_earlier|)`.
fn tail_not_growing(values: &[BigRational]) -> bool {
    let Some((last, earlier)) = values.split_last() else {
        return true;
    };
    let bound = earlier.iter().map(|v| v.abs()).fold(rational(1), |a, b| if b > a { b } else { a });
    last.abs() <= bound
}

fn usable(data: &[TowerDatum], burn_in: u32) -> Vec<&TowerDatum> {
    let mut pts: Vec<&TowerDatum> = data.iter().filter(|d| d.is_clean() && d.n >= burn_in).collect();
    pts.sort_by_key(|d| d.n);
    pts.dedup_by_key(|d| d.n);
    pts
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisCheck {
    pub holds: bool,
    /// Largest `zp_rank_n / p^{(d-2)n}` seen.
    pub bound: BigRational,
}

/// Heuristic check of `rank_{Z_p}(M_{G_n}) = O(p^{(d-2)n})` on the window.
pub fn cuoco_monsky_hypothesis_check(data: &[TowerDatum], p: Prime, d: u32, burn_in: u32) -> HypothesisCheck {
    let ratios: Vec<BigRational> = usable(data, burn_in)
        .iter()
        .map(|t| {
            let scale = BigInt::from(p.get()).pow((d.saturating_sub(2) * t.n) as u32);
            BigRational::new(BigInt::from(t.zp_rank), scale)
        })
        .collect();
    let bound = ratios.iter().cloned().max().unwrap_or_else(BigRational::zero);
    HypothesisCheck { holds: tail_not_growing(&ratios), bound }
}

/// Fits `model` to the clean levels `n >= burn_in` of `data`.
pub fn fit_growth(data: &[TowerDatum], model: &GrowthModel, burn_in: u32) -> Result<InvariantReport> {
    let pts = usable(data, burn_in);
    let need = model.unknowns();
    if pts.len() < need.max(3) {
        return Err(Error::InsufficientData { have: pts.len(), need: need.max(3) });
    }
    match model.family {
        ModelFamily::CuocoMonsky if model.d >= 2 => {
            let check = cuoco_monsky_hypothesis_check(data, model.p, model.d, burn_in);
            if !check.holds {
                return Err(Error::HypothesisViolated(format!(
                    "rank_Zp(M_Gn) is not O(p^((d-2)n)) on the window (ratio reaches {})",
                    check.bound
                )));
            }
        }
        ModelFamily::SemidirectRank => {
            if let Some(t) = pts.iter().find(|t| t.zp_rank != 0) {
                return Err(Error::HypothesisViolated(format!(
                    "coinvariants are not finite at n = {} (zp_rank {})",
                    t.n, t.zp_rank
                )));
            }
        }
        _ => {}
    }

    let top = &pts[pts.len() - need..];
    let rows: Vec<Vec<BigRational>> = top
        .iter()
        .map(|t| {
            let mut row: Vec<BigRational> = model.main_basis(t.n).iter().map(to_rational).collect();
            row.push(to_rational(&model.scale(t.n)));
            row
        })
        .collect();
    let rhs: Vec<BigRational> = top.iter().map(|t| to_rational(&BigInt::from(t.log_torsion))).collect();
    let solution = solve_rational(rows, rhs).ok_or_else(|| {
        Error::InsufficientData { have: pts.len(), need: need + 1 }
    })?;

    let mut report = InvariantReport::empty(model.p.get(), model.d, Method::Fitted);
    report.model = Some(model.family);
    let mut coeffs = Vec::new();
    for (slot, value) in model.main_slots().iter().zip(&solution) {
        if !value.is_integer() || (!slot.signed() && value.is_negative()) {
            return Err(Error::NonIntegralCoefficient { name: slot.name().into(), value: value.to_string() });
        }
        let v = value.to_integer();
        match slot {
            Slot::Mu => report.mu = v.to_u64(),
            Slot::Lambda => report.lambda = v.to_u64(),
            Slot::L0 => report.l0 = v.to_i64(),
            Slot::Rank => report.rank = v.to_u64(),
            Slot::RankOverH => report.rank_over_h = v.to_u64(),
        }
        coeffs.push(v);
    }

    let all_clean: Vec<&TowerDatum> = {
        let mut v: Vec<&TowerDatum> = data.iter().filter(|d| d.is_clean()).collect();
        v.sort_by_key(|d| d.n);
        v
    };
    for t in all_clean {
        let main: BigInt = model.main_basis(t.n).iter().zip(&coeffs).map(|(b, c)| b * c).sum();
        let value = BigInt::from(t.log_torsion) - main;
        let scale = model.scale(t.n);
        let scaled = if scale.is_zero() { to_rational(&value) } else { BigRational::new(value.clone(), scale) };
        report.residuals.push(Residual { n: t.n, value, scaled });
    }
    let window: Vec<BigRational> =
        report.residuals.iter().filter(|r| r.n >= burn_in).map(|r| r.scaled.clone()).collect();
    report.window_constant = window.iter().map(|v| v.abs()).max();
    report.verdict = Some(if tail_not_growing(&window) { Verdict::WindowConsistent } else { Verdict::Inconsistent });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_element;
    use crate::algebra::series::PrecisionContext;
    use crate::tower::{tower_mod_pn, TowerFlag};

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    fn ctx(d: usize) -> PrecisionContext {
        PrecisionContext::new(p3(), 12, d, 300).unwrap()
    }

    fn cyclic(d: usize, f: &str) -> ModulePresentation {
        ModulePresentation::cyclic(parse_element(ctx(d), f).unwrap())
    }

    fn iwasawa() -> GrowthModel {
        GrowthModel::new(ModelFamily::IwasawaD1, p3(), 1).unwrap()
    }

    #[test]
    fn exact_examples() {
        let r = exact_invariants_d1(&cyclic(1, "p^2*(T - p)")).unwrap();
        assert_eq!((r.mu, r.lambda), (Some(2), Some(1)));
        let r = exact_invariants_d1(&cyclic(1, "(1+T)^3 - 1")).unwrap();
        assert_eq!((r.mu, r.lambda), (Some(0), Some(3)));
        let c = ctx(1);
        let m = ModulePresentation::new(
            c,
            2,
            vec![
                vec![parse_element(c, "T").unwrap(), parse_element(c, "p").unwrap()],
                vec![parse_element(c, "p").unwrap(), parse_element(c, "T").unwrap()],
            ],
        )
        .unwrap();
        let r = exact_invariants_d1(&m).unwrap();
        assert_eq!((r.mu, r.lambda, r.method), (Some(0), Some(2), Method::Exact));
    }

    #[test]
    fn exact_rejects_non_square() {
        let c = ctx(1);
        let m = ModulePresentation::new(c, 2, vec![vec![parse_element(c, "T").unwrap(), parse_element(c, "p").unwrap()]]).unwrap();
        assert!(matches!(exact_invariants_d1(&m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn mu_of_mod_pn_examples() {
        assert_eq!(mu_of_mod_pn(&[2, 3], 0, 1), 2);
        assert_eq!(mu_of_mod_pn(&[2, 3], 1, 5), 10);
        assert_eq!(mu_of_mod_pn(&[], 0, 7), 0);
    }

    #[test]
    fn fit_examples() {
        let r = fit_growth(&tower(&cyclic(1, "p^2"), 5), &iwasawa(), 1).unwrap();
        assert_eq!((r.mu, r.lambda), (Some(2), Some(0)));
        assert!(r.residuals.iter().all(|x| x.value.is_zero()));
        assert_eq!(r.verdict, Some(Verdict::WindowConsistent));

        let r = fit_growth(&tower(&cyclic(1, "T - p"), 5), &iwasawa(), 1).unwrap();
        assert_eq!((r.mu, r.lambda), (Some(0), Some(1)));
        assert!(r.residuals.iter().all(|x| x.value == BigInt::from(1)));
        assert_eq!(r.window_constant, Some(rational(1)));

        let data = tower(&cyclic(2, "T1 - p"), 3);
        let logs: Vec<u64> = data.iter().map(|d| d.log_torsion).collect();
        assert_eq!(logs, vec![1, 6, 27, 108]);
        let cm = GrowthModel::new(ModelFamily::CuocoMonsky, p3(), 2).unwrap();
        let r = fit_growth(&data, &cm, 1).unwrap();
        assert_eq!((r.mu, r.l0), (Some(0), Some(1)));
        assert!(r.residuals.iter().all(|x| x.scaled <= rational(1)));
    }

    #[test]
    fn fit_needs_three_clean_points() {
        let mut data = tower(&cyclic(1, "T - p"), 3);
        assert!(matches!(fit_growth(&data[..3], &iwasawa(), 1), Err(Error::InsufficientData { have: 2, need: 3 })));
        data[2].flags.push(TowerFlag::PrecisionMargin(1));
        assert!(matches!(fit_growth(&data, &iwasawa(), 1), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn non_integral_fit_is_reported() {
        let data: Vec<TowerDatum> = [0u64, 1, 3, 6, 10]
            .iter()
            .enumerate()
            .map(|(n, &v)| TowerDatum { n: n as u32, log_torsion: v, zp_rank: 0, flags: vec![] })
            .collect();
        // n(n+1)/2 has no integral (μ, λ) solution on the top three points
        assert!(matches!(fit_growth(&data, &iwasawa(), 1), Err(Error::NonIntegralCoefficient { .. })));
    }

    #[test]
    fn cuoco_monsky_hypothesis() {
        let ok = tower(&cyclic(2, "T1 - p"), 3);
        assert!(cuoco_monsky_hypothesis_check(&ok, p3(), 2, 1).holds);
        let bad = tower(&cyclic(2, "T1"), 3);
        let ranks: Vec<u64> = bad.iter().map(|d| d.zp_rank).collect();
        assert_eq!(ranks, vec![1, 3, 9, 27]);
        let check = cuoco_monsky_hypothesis_check(&bad, p3(), 2, 1);
        assert!(!check.holds);
        assert_eq!(check.bound, rational(27));
        let cm = GrowthModel::new(ModelFamily::CuocoMonsky, p3(), 2).unwrap();
        assert!(matches!(fit_growth(&bad, &cm, 1), Err(Error::HypothesisViolated(_))));
        // finite coinvariants in d = 1
        assert!(cuoco_monsky_hypothesis_check(&tower(&cyclic(1, "T - p"), 3), p3(), 1, 1).holds);
    }

    #[test]
    fn mu_positivity() {
        let r = mu_positivity_equiv(&cyclic(1, "p*(T^2 + p*T + p)")).unwrap();
        assert!(r.mu_positive && r.mu_mod_p_positive);
        let r = mu_positivity_equiv(&cyclic(1, "T^2 + p*T + p")).unwrap();
        assert!(!r.mu_positive && !r.mu_mod_p_positive);
    }

    #[test]
    fn mu_is_additive_on_direct_sums() {
        let a = cyclic(1, "p*(T - p)");
        let b = cyclic(1, "p^2");
        let sum = a.direct_sum(&b).unwrap();
        let fit = |m: &ModulePresentation| fit_growth(&tower(m, 5), &iwasawa(), 1).unwrap().mu.unwrap();
        assert_eq!(fit(&sum), fit(&a) + fit(&b));
    }

    #[test]
    fn perbet_on_free_plus_mu() {
        let c = ctx(1);
        let m = ModulePresentation::free(c, 2).unwrap().direct_sum(&cyclic(1, "p")).unwrap();
        let model = GrowthModel::new(ModelFamily::PerbetModPn, p3(), 1).unwrap();
        let r = fit_growth(&tower_mod_pn(&m, 4), &model, 1).unwrap();
        assert_eq!((r.rank, r.mu), (Some(2), Some(1)));
    }

    #[test]
    fn semidirect_rank_needs_finite_coinvariants() {
        let model = GrowthModel::new(ModelFamily::SemidirectRank, p3(), 2).unwrap();
        let data = tower(&cyclic(2, "T1"), 3);
        assert!(matches!(fit_growth(&data, &model, 1), Err(Error::HypothesisViolated(_))));
        // (n+1) p^n = 1·n p^n + 1·p^n
        let r = fit_growth(&tower(&cyclic(2, "T1 - p"), 3), &model, 1).unwrap();
        assert_eq!(r.rank_over_h, Some(1));
    }

    #[test]
    fn model_names_round_trip() {
        for m in ModelFamily::ALL {
            assert_eq!(m.name().parse::<ModelFamily>().unwrap(), m);
        }
        assert!("gauss".parse::<ModelFamily>().is_err());
        assert!(GrowthModel::new(ModelFamily::IwasawaD1, p3(), 2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn mu_of_mod_pn_is_monotone_with_slope_r(
            alphas in proptest::collection::vec(1u64..8, 0..5),
            r in 0u64..4,
        ) {
            let top = alphas.iter().copied().max().unwrap_or(0);
            let vals: Vec<u64> = (1..=top + 3).map(|n| mu_of_mod_pn(&alphas, r, n)).collect();
            for w in vals.windows(2) {
                proptest::prop_assert!(w[1] >= w[0]);
            }
            for n in top..top + 2 {
                let slope = mu_of_mod_pn(&alphas, r, n + 1) - mu_of_mod_pn(&alphas, r, n);
                proptest::prop_assert_eq!(slope, r);
            }
        }
    }
}
