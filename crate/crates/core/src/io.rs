//! Text formats: module presentations and extension descriptors (TOML),
//! invariant records (flat `key=value`), K-group tables and predictions (TSV).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use crate::algebra::{parse_element, PrecisionContext};
use crate::error::{Error, Result};
use crate::invariants::{InvariantReport, Method, ModelFamily, Residual, Verdict};
use crate::ktheory::{ExtensionDescriptor, ExtensionKind, Hypothesis, KGroupRecord, LocalPrimeDatum, TowerPrediction};
use crate::padic::Prime;
use crate::tower::ModulePresentation;

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
    Error::parse(line, e.message().to_string())
}

fn conflict(field: &str, file: impl std::fmt::Display, flag: impl std::fmt::Display) -> Error {
    Error::InvalidConfig { field: field.into(), reason: format!("file says {file}, command line says {flag}") }
}

/// Context fields given on the command line; they fill gaps in a module file
/// and must agree with it otherwise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContextOverrides {
    pub p: Option<u64>,
    pub precision: Option<u32>,
    pub vars: Option<usize>,
    pub degree_bound: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleFile {
    p: Option<u64>,
    #[serde(rename = "N")]
    precision: Option<u32>,
    d: Option<usize>,
    #[serde(rename = "D")]
    degree_bound: Option<usize>,
    generators: usize,
    #[serde(default)]
    relations: Vec<Vec<String>>,
}

fn merge<T: Copy + PartialEq + std::fmt::Display>(field: &str, file: Option<T>, flag: Option<T>) -> Result<T> {
    match (file, flag) {
        (Some(a), Some(b)) if a != b => Err(conflict(field, a, b)),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::InvalidConfig { field: field.into(), reason: "not given in file or flags".into() }),
    }
}

/// Reads a module presentation.
///
/// ```text
/// # Λ/(T - p)
/// p = 3
/// N = 12
/// d = 1
/// D = 40
/// generators = 1
/// relations = [["T - p"]]
/// ```
pub fn parse_module(text: &str, overrides: &ContextOverrides) -> Result<ModulePresentation> {
    let file: ModuleFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let p = merge("p", file.p, overrides.p)?;
    let prime = Prime::new(p)
        .and_then(Prime::require_odd)
        .map_err(|e| Error::InvalidConfig { field: "p".into(), reason: e.to_string() })?;
    let ctx = PrecisionContext::new(
        prime,
        merge("N", file.precision, overrides.precision)?,
        merge("d", file.d, overrides.vars)?,
        merge("D", file.degree_bound, overrides.degree_bound)?,
    )?;
    let mut relations = Vec::with_capacity(file.relations.len());
    for (r, row) in file.relations.iter().enumerate() {
        if row.len() != file.generators {
            return Err(Error::InvalidConfig {
                field: format!("relations[{r}]"),
                reason: format!("has {} entries, expected {}", row.len(), file.generators),
            });
        }
        let mut parsed = Vec::with_capacity(row.len());
        for (c, entry) in row.iter().enumerate() {
            let f = parse_element(ctx, entry)
                .map_err(|e| Error::InvalidConfig { field: format!("relations[{r}][{c}]"), reason: e.to_string() })?;
            parsed.push(f);
        }
        relations.push(parsed);
    }
    ModulePresentation::new(ctx, file.generators, relations)
}

/// Inverse of [`parse_module`].
pub fn module_to_toml(m: &ModulePresentation) -> String {
    let ctx = m.context();
    let mut out = format!(
        "p = {}\nN = {}\nd = {}\nD = {}\ngenerators = {}\nrelations = [\n",
        ctx.prime().get(),
        ctx.precision(),
        ctx.vars(),
        ctx.degree_bound(),
        m.generators()
    );
    for row in m.relations() {
        let entries: Vec<String> = row.iter().map(|f| format!("\"{f}\"")).collect();
        let _ = writeln!(out, "  [{}],", entries.join(", "));
    }
    out.push_str("]\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RamifiedEntry {
    label: String,
    q: u64,
    #[serde(default = "yes")]
    ramified: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorFile {
    kind: String,
    d: Option<u32>,
    #[serde(default)]
    asserted: Vec<String>,
    #[serde(default)]
    notes: String,
    #[serde(default)]
    ramified: Vec<RamifiedEntry>,
}

/// Reads an extension descriptor.
///
/// ```text
/// kind = "semidirect"
/// d = 2
/// asserted = ["h-is-zp-d-minus-1", "decomposition-dim-2", "fg-over-h"]
///
/// [[ramified]]
/// label = "v11"
/// q = 11
/// ```
pub fn parse_descriptor(text: &str) -> Result<ExtensionDescriptor> {
    let file: DescriptorFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let kind = ExtensionKind::from_parts(&file.kind, file.d)?;
    let asserted = file.asserted.iter().map(|s| s.parse::<Hypothesis>()).collect::<Result<Vec<_>>>()?;
    let ramified = file
        .ramified
        .into_iter()
        .map(|r| {
            LocalPrimeDatum::new(r.label, r.q, r.ramified)
                .map_err(|e| Error::InvalidConfig { field: "ramified.q".into(), reason: e.to_string() })
        })
        .collect::<Result<Vec<_>>>()?;
    ExtensionDescriptor::new(kind, ramified, asserted, file.notes)
}

/// Writes the flat `key=value` form of a report.
pub fn report_to_record(r: &InvariantReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("p", &r.p);
    kv("d", &r.d);
    kv("method", &r.method);
    if let Some(m) = r.model {
        kv("model", &m);
    }
    if let Some(v) = r.mu {
        kv("mu", &v);
    }
    if let Some(v) = r.lambda {
        kv("lambda", &v);
    }
    if let Some(v) = r.l0 {
        kv("l0", &v);
    }
    if let Some(v) = r.rank {
        kv("rank", &v);
    }
    if let Some(v) = r.rank_over_h {
        kv("rank_over_h", &v);
    }
    if let Some(v) = r.mu_h {
        kv("mu_h", &v);
    }
    if let Some(v) = &r.window_constant {
        kv("window_constant", v);
    }
    if let Some(v) = r.verdict {
        kv("verdict", &v);
    }
    for res in &r.residuals {
        kv(&format!("residual.{}", res.n), &res.value);
        kv(&format!("scaled.{}", res.n), &res.scaled);
    }
    out
}

pub fn report_from_record(text: &str) -> Result<InvariantReport> {
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(idx + 1, format!("expected key=value, got `{line}`")))?;
        if fields.insert(k.trim().to_string(), (idx + 1, v.trim().to_string())).is_some() {
            return Err(Error::parse(idx + 1, format!("duplicate key `{}`", k.trim())));
        }
    }
    fn get<T: std::str::FromStr>(fields: &mut BTreeMap<String, (usize, String)>, key: &str) -> Result<Option<T>> {
        match fields.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::parse(line, format!("bad value for `{key}`: `{v}`"))),
        }
    }
    let p: u64 = get(&mut fields, "p")?.ok_or_else(|| Error::MissingInvariant("p".into()))?;
    let d: u32 = get(&mut fields, "d")?.ok_or_else(|| Error::MissingInvariant("d".into()))?;
    let method = match fields.remove("method") {
        Some((_, m)) if m == "exact" => Method::Exact,
        Some((_, m)) if m == "fitted" => Method::Fitted,
        Some((line, m)) => return Err(Error::parse(line, format!("bad method `{m}`"))),
        None => Method::Fitted,
    };
    let mut r = InvariantReport::empty(p, d, method);
    r.model = match fields.remove("model") {
        Some((_, m)) => Some(m.parse::<ModelFamily>()?),
        None => None,
    };
    r.mu = get(&mut fields, "mu")?;
    r.lambda = get(&mut fields, "lambda")?;
    r.l0 = get(&mut fields, "l0")?;
    r.rank = get(&mut fields, "rank")?;
    r.rank_over_h = get(&mut fields, "rank_over_h")?;
    r.mu_h = get(&mut fields, "mu_h")?;
    r.window_constant = get::<BigRational>(&mut fields, "window_constant")?;
    r.verdict = match fields.remove("verdict") {
        Some((_, v)) if v == "window-consistent" => Some(Verdict::WindowConsistent),
        Some((_, v)) if v == "inconsistent" => Some(Verdict::Inconsistent),
        Some((line, v)) => return Err(Error::parse(line, format!("bad verdict `{v}`"))),
        None => None,
    };
    let mut residuals: BTreeMap<u32, (Option<BigInt>, Option<BigRational>)> = BTreeMap::new();
    for (key, (line, v)) in std::mem::take(&mut fields) {
        let bad = || Error::parse(line, format!("unknown key `{key}`"));
        let (kind, n) = key.split_once('.').ok_or_else(bad)?;
        let n: u32 = n.parse().map_err(|_| bad())?;
        let slot = residuals.entry(n).or_default();
        let bad_value = || Error::parse(line, format!("bad value for `{key}`: `{v}`"));
        match kind {
            "residual" => slot.0 = Some(v.parse().map_err(|_| bad_value())?),
            "scaled" => slot.1 = Some(v.parse().map_err(|_| bad_value())?),
            _ => return Err(bad()),
        }
    }
    for (n, pair) in residuals {
        match pair {
            (Some(value), Some(scaled)) => r.residuals.push(Residual { n, value, scaled }),
            _ => return Err(Error::parse(0, format!("residual.{n} and scaled.{n} must both be present"))),
        }
    }
    Ok(r)
}

pub const KTABLE_HEADER: [&str; 4] = ["field_label", "i", "decomposition", "source"];

/// Reads a K-group table. Decompositions are comma lists of cyclic orders;
/// `-` or an empty cell means the trivial group.
pub fn parse_ktable(text: &str) -> Result<Vec<KGroupRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != KTABLE_HEADER {
        return Err(Error::parse(1, format!("expected header `{}`", KTABLE_HEADER.join("\t"))));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let i: u32 = row[1].trim().parse().map_err(|_| Error::parse(line, format!("bad twist `{}`", &row[1])))?;
        let cell = row[2].trim();
        let decomposition = if cell.is_empty() || cell == "-" {
            Vec::new()
        } else {
            cell.split(',')
                .map(|s| s.trim().parse::<u64>().map_err(|_| Error::parse(line, format!("bad order `{s}`"))))
                .collect::<Result<Vec<_>>>()?
        };
        let record = KGroupRecord::new(row[0].trim(), i, decomposition, row[3].trim()).map_err(|e| Error::parse(line, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn ktable_to_tsv(records: &[KGroupRecord]) -> String {
    let mut out = KTABLE_HEADER.join("\t");
    out.push('\n');
    for r in records {
        let dec = if r.decomposition().is_empty() {
            "-".to_string()
        } else {
            r.decomposition().iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.field_label, r.i, dec, r.source);
    }
    out
}

pub const PREDICTION_TSV_HEADER: &str = "n\tmain_term\to_class\ttorsion_type\ttheorem_tag";

pub fn prediction_to_tsv(t: &TowerPrediction) -> String {
    let mut out = String::from(PREDICTION_TSV_HEADER);
    out.push('\n');
    for r in &t.rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.n, r.main_term, r.law.o_class(), r.law.torsion(), r.law.tag());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{fit_growth, GrowthModel};
    use crate::ktheory::browkin_gangl_record;
    use crate::tower::tower;

    const CYCLIC: &str = "# Λ/(T - p)\np = 3\nN = 12\nd = 1\nD = 40\ngenerators = 1\nrelations = [[\"T - p\"]]\n";

    #[test]
    fn module_file_round_trip() {
        let m = parse_module(CYCLIC, &ContextOverrides::default()).unwrap();
        let logs: Vec<u64> = tower(&m, 3).iter().map(|d| d.log_torsion).collect();
        assert_eq!(logs, vec![1, 2, 3, 4]);
        let again = parse_module(&module_to_toml(&m), &ContextOverrides::default()).unwrap();
        assert_eq!(again.relations(), m.relations());
    }

    #[test]
    fn module_file_errors_name_the_field() {
        let text = "p = 3\nN = 12\nd = 1\nD = 40\ngenerators = 2\nrelations = [[\"T\"]]\n";
        match parse_module(text, &ContextOverrides::default()) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "relations[0]"),
            other => panic!("{other:?}"),
        }
        let text = "p = 3\nN = 12\nd = 1\nD = 40\ngenerators = 1\nrelations = [[\"T +* 1\"]]\n";
        assert!(matches!(parse_module(text, &ContextOverrides::default()), Err(Error::InvalidConfig { field, .. }) if field == "relations[0][0]"));
        let text = "N = 12\nd = 1\nD = 40\ngenerators = 1\n";
        assert!(matches!(parse_module(text, &ContextOverrides::default()), Err(Error::InvalidConfig { field, .. }) if field == "p"));
        let with_p = ContextOverrides { p: Some(5), ..Default::default() };
        assert_eq!(parse_module(text, &with_p).unwrap().context().prime().get(), 5);
        assert!(matches!(parse_module(CYCLIC, &with_p), Err(Error::InvalidConfig { field, .. }) if field == "p"));
        assert!(matches!(parse_module("p = 3\nbogus = 1\n", &ContextOverrides::default()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn free_module_file() {
        let m = parse_module("p = 3\nN = 8\nd = 2\nD = 20\ngenerators = 2\n", &ContextOverrides::default()).unwrap();
        let t = tower(&m, 1);
        assert_eq!(t[1].zp_rank, 18);
        assert_eq!(t[1].log_torsion, 0);
    }

    #[test]
    fn record_round_trip() {
        let m = parse_module(CYCLIC, &ContextOverrides::default()).unwrap();
        let model = GrowthModel::new(ModelFamily::IwasawaD1, m.context().prime(), 1).unwrap();
        let r = fit_growth(&tower(&m, 5), &model, 1).unwrap();
        let text = report_to_record(&r);
        assert!(text.contains("verdict=window-consistent\n"));
        assert_eq!(report_from_record(&text).unwrap(), r);
        assert!(report_from_record("p=3\nd=1\nmu=two\n").is_err());
        assert!(report_from_record("p=3\nd=1\ncolour=red\n").is_err());
        assert!(report_from_record("d=1\n").is_err());
        let hand = report_from_record("# by hand\np=3\nd=1\nmu=2\nlambda=1\n").unwrap();
        assert_eq!((hand.mu, hand.lambda, hand.method), (Some(2), Some(1), Method::Fitted));
    }

    #[test]
    fn descriptor_file() {
        let text = "kind = \"uniform\"\nd = 2\nasserted = [\"fg-over-h\"]\n\n[[ramified]]\nlabel = \"v11\"\nq = 11\n";
        let ext = parse_descriptor(text).unwrap();
        assert_eq!(ext.kind, ExtensionKind::Uniform(2));
        assert!(ext.ramified_primes[0].ramified);
        assert!(ext.asserts(Hypothesis::FinitelyGeneratedOverH));
        assert!(parse_descriptor("kind = \"zpd\"\nd = 2\n[[ramified]]\nlabel = \"v\"\nq = 4\n").is_err());
        assert!(parse_descriptor("kind = \"semidirect\"\nd = 1\n").is_err());
        assert!(parse_descriptor("kind = \"zp\"\nasserted = [\"nope\"]\n").is_err());
    }

    #[test]
    fn ktable_round_trip() {
        let records = vec![browkin_gangl_record(), KGroupRecord::new("Q", 2, vec![], "trivial").unwrap()];
        let text = ktable_to_tsv(&records);
        assert_eq!(parse_ktable(&text).unwrap(), records);
        let bad = "field_label\ti\tdecomposition\tsource\nF\t2\t2,6\tx\n";
        assert!(matches!(parse_ktable(bad), Err(Error::Parse { line: 2, .. })));
        assert!(parse_ktable("label\ti\n").is_err());
    }
}
