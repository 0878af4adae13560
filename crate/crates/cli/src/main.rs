use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iwasawa_k::invariants::{exact_invariants_d1, fit_growth, GrowthModel, ModelFamily, Verdict, DEFAULT_BURN_IN};
use iwasawa_k::io::{
    parse_descriptor, parse_ktable, parse_module, prediction_to_tsv, report_from_record, report_to_record,
    ContextOverrides,
};
use iwasawa_k::ktheory::{browkin_gangl_record, predict_growth, vanishing_propagation};
use iwasawa_k::padic::Prime;
use iwasawa_k::selftest::{run_selftest, SelftestConfig, DEFAULT_SEED, SELFTEST_GROUP_ORDER};
use iwasawa_k::tower::{
    check_tower_size, tower_from_tsv, tower_to_tsv, tower_with, TowerKind, TowerOptions, DEFAULT_GUARD, MAX_DIMENSION,
};
use iwasawa_k::Error;

/// Largest level accepted by `--n-max`.
const MAX_LEVEL: u32 = 16;

#[derive(Parser)]
#[command(name = "iwk", version, about = "Coinvariant towers, Iwasawa invariants and K-group growth bookkeeping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coinvariant tower of a module presentation, as TSV.
    Tower(TowerArgs),
    /// Fit a growth model to a tower TSV.
    Fit(FitArgs),
    /// Evaluate the growth law of an extension from an invariant record.
    Predict(PredictArgs),
    /// Certify vanishing of K_{2i-2}[p] up a tower.
    Vanishing(VanishingArgs),
    /// Exact mu and lambda of a square d = 1 presentation.
    Invariants(InvariantsArgs),
    /// Run the oracle suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct ContextArgs {
    #[arg(long)]
    p: Option<u64>,
    /// Coefficient precision: work modulo p^N.
    #[arg(long = "N")]
    precision: Option<u32>,
    /// Number of variables.
    #[arg(long)]
    d: Option<usize>,
    /// Truncation degree per variable.
    #[arg(long = "D")]
    degree_bound: Option<usize>,
}

impl ContextArgs {
    fn overrides(&self) -> ContextOverrides {
        ContextOverrides { p: self.p, precision: self.precision, vars: self.d, degree_bound: self.degree_bound }
    }
}

#[derive(Args)]
struct OutArg {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TowerArgs {
    module: PathBuf,
    #[command(flatten)]
    ctx: ContextArgs,
    #[arg(long, default_value_t = 4)]
    n_max: u32,
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: u32,
    /// Record log_p |M_{G_n} / p^n| instead of the torsion of M_{G_n}.
    #[arg(long)]
    mod_pn: bool,
    #[arg(long, default_value_t = MAX_DIMENSION)]
    max_dim: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct FitArgs {
    tower: PathBuf,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[arg(long, default_value = "iwasawa-d1")]
    model: String,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: u32,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PredictArgs {
    record: PathBuf,
    descriptor: PathBuf,
    /// Defaults to the prime in the record.
    #[arg(long)]
    p: Option<u64>,
    #[arg(long, default_value_t = 2)]
    i: u32,
    #[arg(long, default_value_t = 0)]
    n_min: u32,
    #[arg(long, default_value_t = 4)]
    n_max: u32,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct VanishingArgs {
    descriptor: PathBuf,
    #[arg(long)]
    field: String,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 2)]
    i: u32,
    /// K-group table; the built-in table has K_2 of Q(sqrt(-4683)).
    #[arg(long)]
    ktable: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct InvariantsArgs {
    module: PathBuf,
    #[command(flatten)]
    ctx: ContextArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 3)]
    p: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: u32,
    #[arg(long, default_value_t = SELFTEST_GROUP_ORDER)]
    max_group_order: usize,
    /// Run properties one after another.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    out: OutArg,
}

/// Exit codes: 0 ok, 1 input error, 2 flagged or partial, 3 model misfit, 4 not certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Ok = 0,
    Flagged = 2,
    Misfit = 3,
    NotCertified = 4,
}

enum Failure {
    Input(Error),
    Misfit(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<Outcome, Failure>;

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(out: &OutArg, text: &str) -> Result<(), Error> {
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { field: field.into(), reason: reason.into() }
}

fn odd_prime(field: &str, p: u64) -> Result<Prime, Error> {
    Prime::new(p).and_then(Prime::require_odd).map_err(|e| invalid(field, e.to_string()))
}

fn cmd_tower(a: &TowerArgs) -> CmdResult {
    if a.n_max > MAX_LEVEL {
        return Err(invalid("n-max", format!("at most {MAX_LEVEL}")).into());
    }
    let m = parse_module(&read(&a.module)?, &a.ctx.overrides())?;
    if a.guard > m.context().precision() {
        return Err(invalid("guard", format!("exceeds N = {}", m.context().precision())).into());
    }
    check_tower_size(&m, a.n_max, a.max_dim)?;
    let opts = TowerOptions {
        guard: a.guard,
        dimension_bound: a.max_dim,
        kind: if a.mod_pn { TowerKind::ModPn } else { TowerKind::Coinvariants },
        ..TowerOptions::default()
    };
    let data = tower_with(&m, a.n_max, &opts);
    emit(&a.out, &tower_to_tsv(&data))?;
    Ok(if data.iter().all(|d| d.is_clean()) { Outcome::Ok } else { Outcome::Flagged })
}

fn cmd_fit(a: &FitArgs) -> CmdResult {
    let data = tower_from_tsv(&read(&a.tower)?)?;
    let family: ModelFamily = a.model.parse()?;
    let model = GrowthModel::new(family, odd_prime("p", a.p)?, a.d)?;
    let report = fit_growth(&data, &model, a.burn_in).map_err(|e| match e {
        Error::NonIntegralCoefficient { .. } | Error::HypothesisViolated(_) => Failure::Misfit(e),
        e => Failure::Input(e),
    })?;
    emit(&a.out, &report_to_record(&report))?;
    Ok(if report.verdict == Some(Verdict::Inconsistent) { Outcome::Misfit } else { Outcome::Ok })
}

fn cmd_predict(a: &PredictArgs) -> CmdResult {
    let inv = report_from_record(&read(&a.record)?)?;
    let ext = parse_descriptor(&read(&a.descriptor)?)?;
    let p = odd_prime("p", a.p.unwrap_or(inv.p))?;
    if a.n_min > a.n_max || a.n_max > 64 {
        return Err(invalid("n-max", "need n-min <= n-max <= 64").into());
    }
    let prediction = predict_growth(&inv, &ext, p, a.i, a.n_min..=a.n_max)?;
    for note in &prediction.assumptions {
        eprintln!("# assumption: {note}");
    }
    emit(&a.out, &prediction_to_tsv(&prediction))?;
    Ok(Outcome::Ok)
}

fn cmd_vanishing(a: &VanishingArgs) -> CmdResult {
    let records = match &a.ktable {
        Some(path) => parse_ktable(&read(path)?)?,
        None => vec![browkin_gangl_record()],
    };
    let record = records
        .iter()
        .find(|r| r.field_label == a.field && r.i == a.i)
        .ok_or_else(|| invalid("field", format!("no record for `{}` with i = {}", a.field, a.i)))?;
    let ext = parse_descriptor(&read(&a.descriptor)?)?;
    let p = Prime::new(a.p).map_err(|e| invalid("p", e.to_string()))?;
    let cert = vanishing_propagation(record, &ext, p);
    emit(&a.out, &cert.to_string())?;
    Ok(if cert.certified { Outcome::Ok } else { Outcome::NotCertified })
}

fn cmd_invariants(a: &InvariantsArgs) -> CmdResult {
    let m = parse_module(&read(&a.module)?, &a.ctx.overrides())?;
    let report = exact_invariants_d1(&m)?;
    emit(&a.out, &report_to_record(&report))?;
    Ok(Outcome::Ok)
}

fn cmd_selftest(a: &SelftestArgs) -> CmdResult {
    let cfg = SelftestConfig {
        p: odd_prime("p", a.p)?,
        seed: a.seed,
        guard: a.guard,
        max_group_order: a.max_group_order,
        execution: if a.sequential { iwasawa_k::par::Execution::Sequential } else { Default::default() },
    };
    let report = run_selftest(&cfg);
    emit(&a.out, &report.to_string())?;
    Ok(if report.exit_code() == 0 { Outcome::Ok } else { Outcome::Flagged })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Tower(a) => cmd_tower(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Vanishing(a) => cmd_vanishing(a),
        Command::Invariants(a) => cmd_invariants(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome as u8),
        Err(Failure::Input(e)) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(1)
        }
        Err(Failure::Misfit(e)) => {
            eprintln!("misfit[{}]: {e}", e.kind());
            ExitCode::from(Outcome::Misfit as u8)
        }
    }
}
