//! Modules over `(Z/p^N)[G]` for explicit finite p-groups `G`.
//!
//! Everything is brute force: a module `M = R^k / W` is stored through the
//! `Z/p^N`-span of its relations inside `R^k = (Z/p^N)^{k|G|}`, and every
//! quotient is measured by Smith normal form of stacked spans.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{snf, AbelianShape, ModMatrix};
use crate::padic::Prime;

pub const MAX_GROUP_ORDER: usize = 81;

/// A finite group given by its multiplication table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

/// A subgroup, as a sorted list of element indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subgroup {
    elements: Vec<usize>,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn contains(&self, g: usize) -> bool {
        self.elements.binary_search(&g).is_ok()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }
}

impl FiniteGroup {
    /// Validates identity, inverses and associativity (exhaustively).
    pub fn from_table(name: impl Into<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if n > MAX_GROUP_ORDER {
            return Err(Error::GroupTooLarge { order: n, bound: MAX_GROUP_ORDER });
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::InvalidGroup("table is not n x n over 0..n".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::InvalidGroup("no identity".into()))?;
        let mut inverse = vec![0; n];
        for g in 0..n {
            inverse[g] = (0..n)
                .find(|&h| table[g][h] == identity)
                .filter(|&h| table[h][g] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {g} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                let ab = table[a][b];
                for c in 0..n {
                    if table[ab][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroup(format!("({a}*{b})*{c} != {a}*({b}*{c})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { name: name.into(), table, inverse, identity })
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(format!("C{n}"), table)
    }

    /// `Z/n ⋊ Z/m` with `y x y^{-1} = x^r`; element `x^a y^b` has index `a + n b`.
    pub fn semidirect(n: usize, m: usize, r: usize) -> Result<Self> {
        let mut rp = 1usize;
        for _ in 0..m {
            rp = rp * r % n;
        }
        if rp != 1 % n {
            return Err(Error::InvalidGroup(format!("{r}^{m} is not 1 mod {n}")));
        }
        let pow_r: Vec<usize> = (0..m).scan(1usize, |acc, _| {
            let cur = *acc;
            *acc = *acc * r % n;
            Some(cur)
        }).collect();
        let mut table = vec![vec![0; n * m]; n * m];
        for (i, row) in table.iter_mut().enumerate() {
            let (a, b) = (i % n, i / n);
            for (j, slot) in row.iter_mut().enumerate() {
                let (c, d) = (j % n, j / n);
                // x^a y^b x^c y^d = x^{a + r^b c} y^{b + d}
                *slot = (a + pow_r[b] * c) % n + n * ((b + d) % m);
            }
        }
        Self::from_table(format!("C{n}:C{m}(r={r})"), table)
    }

    /// Upper unitriangular 3x3 matrices over `F_p`.
    pub fn heisenberg(p: usize) -> Result<Self> {
        let idx = |a: usize, b: usize, c: usize| a + p * b + p * p * c;
        let n = p * p * p;
        let mut table = vec![vec![0; n]; n];
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for a2 in 0..p {
                        for b2 in 0..p {
                            for c2 in 0..p {
                                table[idx(a, b, c)][idx(a2, b2, c2)] =
                                    idx((a + a2) % p, (b + b2) % p, (c + c2 + a * b2) % p);
                            }
                        }
                    }
                }
            }
        }
        Self::from_table(format!("Heis({p})"), table)
    }

    /// `G × H`; element `(g, h)` has index `g + |G| h`.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Result<Self> {
        let (na, nb) = (a.order(), b.order());
        if na * nb > MAX_GROUP_ORDER {
            return Err(Error::GroupTooLarge { order: na * nb, bound: MAX_GROUP_ORDER });
        }
        let mut table = vec![vec![0; na * nb]; na * nb];
        for (i, row) in table.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = a.table[i % na][j % na] + na * b.table[i / na][j / na];
            }
        }
        Self::from_table(format!("{}x{}", a.name, b.name), table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn pow(&self, g: usize, e: u64) -> usize {
        (0..e).fold(self.identity, |acc, _| self.mul(acc, g))
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order()).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup { elements: (0..self.order()).collect() }
    }

    pub fn trivial(&self) -> Subgroup {
        Subgroup { elements: vec![self.identity] }
    }

    /// Subgroup generated by `gens`.
    pub fn closure(&self, gens: &[usize]) -> Subgroup {
        let mut seen = vec![false; self.order()];
        seen[self.identity] = true;
        let mut elements = vec![self.identity];
        let mut i = 0;
        while i < elements.len() {
            let x = elements[i];
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    elements.push(y);
                }
            }
            i += 1;
        }
        elements.sort_unstable();
        Subgroup { elements }
    }

    /// A small generating set, chosen greedily in index order.
    pub fn generators(&self, u: &Subgroup) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = self.trivial();
        for &g in &u.elements {
            if !span.contains(g) {
                gens.push(g);
                span = self.closure(&gens);
            }
        }
        gens
    }

    /// All subgroups, sorted by (order, elements).
    pub fn subgroups(&self) -> Vec<Subgroup> {
        let mut found: BTreeSet<Subgroup> = BTreeSet::new();
        let mut frontier = vec![self.trivial()];
        found.insert(self.trivial());
        while let Some(s) = frontier.pop() {
            let gens = self.generators(&s);
            for g in 0..self.order() {
                if s.contains(g) {
                    continue;
                }
                let mut ext = gens.clone();
                ext.push(g);
                let t = self.closure(&ext);
                if found.insert(t.clone()) {
                    frontier.push(t);
                }
            }
        }
        let mut out: Vec<Subgroup> = found.into_iter().collect();
        out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.cmp(b)));
        out
    }

    pub fn is_normal(&self, u: &Subgroup) -> bool {
        (0..self.order()).all(|g| u.elements.iter().all(|&x| u.contains(self.mul(self.mul(g, x), self.inv(g)))))
    }

    /// `⟨s^e : s ∈ u⟩`.
    pub fn power_subgroup(&self, u: &Subgroup, e: u64) -> Subgroup {
        let powers: Vec<usize> = u.elements.iter().map(|&s| self.pow(s, e)).collect();
        self.closure(&powers)
    }

    pub fn intersection(&self, a: &Subgroup, b: &Subgroup) -> Subgroup {
        Subgroup { elements: a.elements.iter().copied().filter(|&x| b.contains(x)).collect() }
    }
}

impl fmt::Display for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (order {})", self.name, self.order())
    }
}

/// The fixed test corpus of 3-groups of order at most 81.
pub fn group_corpus() -> Vec<FiniteGroup> {
    let c3 = FiniteGroup::cyclic(3).unwrap();
    let c9 = FiniteGroup::cyclic(9).unwrap();
    vec![
        c3.clone(),
        c9.clone(),
        FiniteGroup::cyclic(27).unwrap(),
        FiniteGroup::direct_product(&c3, &c3).unwrap(),
        FiniteGroup::direct_product(&c3, &c9).unwrap(),
        FiniteGroup::direct_product(&c9, &c9).unwrap(),
        FiniteGroup::direct_product(&FiniteGroup::direct_product(&c3, &c3).unwrap(), &c3).unwrap(),
        FiniteGroup::heisenberg(3).unwrap(),
        FiniteGroup::semidirect(9, 3, 4).unwrap(),
        FiniteGroup::semidirect(27, 3, 10).unwrap(),
        FiniteGroup::semidirect(9, 9, 4).unwrap(),
        FiniteGroup::direct_product(&FiniteGroup::heisenberg(3).unwrap(), &c3).unwrap(),
    ]
}

/// `M = (Z/p^N)[G]^k / W`, with `W` generated as an `R`-module by `relations`.
///
/// Vectors in `R^k` use coordinate `i |G| + g` for the basis element `g e_i`.
#[derive(Clone, Debug)]
pub struct GroupRingModule {
    group: FiniteGroup,
    p: Prime,
    precision: u32,
    rank: usize,
    relations: Vec<Vec<i128>>,
}

impl GroupRingModule {
    pub fn new(group: FiniteGroup, p: Prime, precision: u32, rank: usize, relations: Vec<Vec<i128>>) -> Result<Self> {
        let dim = rank * group.order();
        if let Some(bad) = relations.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidConfig {
                field: format!("relations[{bad}]"),
                reason: format!("expected {dim} coordinates"),
            });
        }
        ModMatrix::zeros(p, precision, 0, dim)?;
        Ok(GroupRingModule { group, p, precision, rank, relations })
    }

    /// The free module `(Z/p^N)[G]`.
    pub fn regular(group: FiniteGroup, p: Prime, precision: u32) -> Result<Self> {
        Self::new(group, p, precision, 1, Vec::new())
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    fn dim(&self) -> usize {
        self.rank * self.group.order()
    }

    fn empty(&self) -> ModMatrix {
        ModMatrix::zeros(self.p, self.precision, 0, self.dim()).expect("validated modulus")
    }

    /// `h · v` for the left regular action.
    fn act(&self, h: usize, v: &[u64]) -> Vec<u64> {
        let n = self.group.order();
        let mut out = vec![0; v.len()];
        for i in 0..self.rank {
            for g in 0..n {
                out[i * n + self.group.mul(h, g)] = v[i * n + g];
            }
        }
        out
    }

    /// `(u - 1) g e_i`.
    fn augmentation_vector(&self, u: usize, g: usize, i: usize) -> Vec<u64> {
        let n = self.group.order();
        let m = self.empty().modulus();
        let mut v = vec![0; self.dim()];
        let ug = self.group.mul(u, g);
        if ug != g {
            v[i * n + ug] = 1;
            v[i * n + g] = m - 1;
        }
        v
    }

    fn span_of(&self, rows: impl Iterator<Item = Vec<u64>>) -> ModMatrix {
        // echelon in batches to keep the working matrix small
        let batch = 4 * self.dim().max(1);
        let mut acc = self.empty();
        let mut pending = self.empty();
        for r in rows {
            if r.iter().any(|&x| x != 0) {
                pending.push_row(&r);
            }
            if pending.rows() >= batch {
                acc = acc.stack(&pending).echelon_span();
                pending = self.empty();
            }
        }
        acc.stack(&pending).echelon_span()
    }

    /// Smallest `R`-submodule containing the rows of `s`.
    fn g_closure(&self, s: ModMatrix) -> ModMatrix {
        let gens = self.group.generators(&self.group.whole());
        let mut cur = s.echelon_span();
        loop {
            let moved: Vec<Vec<u64>> = (0..cur.rows())
                .flat_map(|r| gens.iter().map(move |&g| (g, r)))
                .map(|(g, r)| self.act(g, cur.row(r)))
                .collect();
            let next = self.span_of((0..cur.rows()).map(|r| cur.row(r).to_vec()).chain(moved));
            if snf(&next) == snf(&cur) {
                return next;
            }
            cur = next;
        }
    }

    /// `Z/p^N`-span of `W`: all `h · r`.
    pub fn relation_span(&self) -> ModMatrix {
        let m = self.empty().modulus();
        let reduced: Vec<Vec<u64>> =
            self.relations.iter().map(|r| r.iter().map(|&x| x.rem_euclid(m as i128) as u64).collect()).collect();
        let n = self.group.order();
        self.span_of((0..n).flat_map(|h| reduced.iter().map(move |r| (h, r))).map(|(h, r)| self.act(h, r)))
    }

    /// Lift of `I_U M`: the span of `(u - 1) g e_i` over all `u ∈ U`.
    pub fn augmentation_span(&self, u: &Subgroup) -> ModMatrix {
        let n = self.group.order();
        let rows = u.elements().iter().flat_map(|&x| {
            (0..self.rank).flat_map(move |i| (0..n).map(move |g| self.augmentation_vector(x, g, i)))
        });
        self.span_of(rows.collect::<Vec<_>>().into_iter())
    }

    /// Lift of `M(U)`: the `R`-submodule generated by `(s - 1) g e_i` for
    /// `s` in a generating set of `U`.
    pub fn submodule_span(&self, u: &Subgroup) -> ModMatrix {
        let n = self.group.order();
        let gens = self.group.generators(u);
        let rows: Vec<Vec<u64>> = gens
            .iter()
            .flat_map(|&s| (0..self.rank).flat_map(move |i| (0..n).map(move |g| (s, g, i))))
            .map(|(s, g, i)| self.augmentation_vector(s, g, i))
            .collect();
        self.g_closure(self.span_of(rows.into_iter()))
    }

    /// `R^k / (W + Σ spans)`.
    pub fn quotient_shape(&self, spans: &[&ModMatrix]) -> AbelianShape {
        let mut all = self.relation_span();
        for s in spans {
            all = all.stack(s);
        }
        snf(&all)
    }

    /// Shape of `M` itself.
    pub fn shape(&self) -> AbelianShape {
        self.quotient_shape(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentationReport {
    /// `log_p |M / I_U M|`.
    pub log_i_u_quotient: u64,
    /// `log_p |M / M(U)|`.
    pub log_m_u_quotient: u64,
    /// `I_U M ⊆ M(U)`.
    pub contained: bool,
    pub inclusion_strict: bool,
    pub normal: bool,
}

pub fn augmentation_quotients(m: &GroupRingModule, u: &Subgroup) -> Result<AugmentationReport> {
    if m.group.order() > MAX_GROUP_ORDER {
        return Err(Error::GroupTooLarge { order: m.group.order(), bound: MAX_GROUP_ORDER });
    }
    let i_u = m.augmentation_span(u);
    let m_u = m.submodule_span(u);
    let qi = m.quotient_shape(&[&i_u]);
    let qm = m.quotient_shape(&[&m_u]);
    let both = m.quotient_shape(&[&i_u, &m_u]);
    let contained = both == qm;
    Ok(AugmentationReport {
        log_i_u_quotient: qi.log_order(),
        log_m_u_quotient: qm.log_order(),
        contained,
        inclusion_strict: contained && qi != qm,
        normal: m.group.is_normal(u),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientCoinvariantReport {
    pub h_m: Subgroup,
    pub gamma_n: Subgroup,
    /// `(M_{H_m})_{Γ_n}`.
    pub iterated: AbelianShape,
    /// `M / M(G_{m,n})`.
    pub direct: AbelianShape,
    /// `(M / M(Γ_n))_{H_m}`.
    pub reversed: AbelianShape,
    /// Whether `G_{m,n} = H_m Γ_n` is normal in `G`.
    pub g_mn_normal: bool,
}

impl QuotientCoinvariantReport {
    pub fn all_equal(&self) -> bool {
        self.iterated == self.direct && self.direct == self.reversed
    }
}

/// Computes the three quotient-coinvariants for `H_m = ⟨h^{p^m}⟩`,
/// `Γ_n = ⟨γ^{p^n}⟩`.
pub fn quotient_coinvariant_check(
    m: &GroupRingModule,
    h: &Subgroup,
    gamma: &Subgroup,
    level_h: u32,
    level_gamma: u32,
) -> Result<QuotientCoinvariantReport> {
    let g = &m.group;
    if !g.is_normal(h) {
        return Err(Error::HypothesisViolated("H is not normal in G".into()));
    }
    if !g.intersection(h, gamma).is_trivial() {
        return Err(Error::HypothesisViolated("H ∩ Γ is not trivial".into()));
    }
    if h.order() * gamma.order() != g.order() {
        return Err(Error::HypothesisViolated("G is not H·Γ".into()));
    }
    let p = m.p.get();
    let h_m = g.power_subgroup(h, p.pow(level_h));
    let gamma_n = g.power_subgroup(gamma, p.pow(level_gamma));
    let mut gens = h_m.elements().to_vec();
    gens.extend_from_slice(gamma_n.elements());
    let g_mn = g.closure(&gens);

    let m_h = m.submodule_span(&h_m);
    let i_h = m.augmentation_span(&h_m);
    let i_gamma = m.augmentation_span(&gamma_n);
    let m_gamma = m.submodule_span(&gamma_n);
    let m_g = m.submodule_span(&g_mn);
    Ok(QuotientCoinvariantReport {
        iterated: m.quotient_shape(&[&m_h, &i_gamma]),
        direct: m.quotient_shape(&[&m_g]),
        reversed: m.quotient_shape(&[&m_gamma, &i_h]),
        g_mn_normal: g.is_normal(&g_mn),
        h_m,
        gamma_n,
    })
}

/// Every `(H, Γ, m, n)` meeting the hypotheses, one per distinct `(H_m, Γ_n)`.
pub fn valid_quotient_pairs(g: &FiniteGroup, p: u64) -> Vec<(Subgroup, Subgroup, u32, u32)> {
    let subs = g.subgroups();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for h in subs.iter().filter(|h| g.is_normal(h)) {
        for gamma in subs.iter() {
            if h.order() * gamma.order() != g.order() || !g.intersection(h, gamma).is_trivial() {
                continue;
            }
            let levels = |s: &Subgroup| {
                let mut e = 0;
                while !g.power_subgroup(s, p.pow(e)).is_trivial() {
                    e += 1;
                }
                e
            };
            for mh in 0..=levels(h) {
                for ng in 0..=levels(gamma) {
                    let key = (g.power_subgroup(h, p.pow(mh)), g.power_subgroup(gamma, p.pow(ng)));
                    if seen.insert(key) {
                        out.push((h.clone(), gamma.clone(), mh, ng));
                    }
                }
            }
        }
    }
    out
}
