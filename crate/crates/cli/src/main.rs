//! `bdcalc`: command-line front end. Every verb reads its arguments as
//! `--key value` pairs (values are JSON where they parse) and/or a `--json`
//! document, and writes one JSON value to stdout.
//!
//! Exit codes: 0 success, 1 invalid input (an `{"error": ...}` object is
//! printed), 2 a verification suite found a counterexample.

mod args;
mod dispatch;

use std::process::ExitCode;

use bdcalc::verify::{verify_suite, Scale, SUITES};
use clap::Parser;
use serde_json::{json, Value};

use args::Globals;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(bdcalc::Error),
    Json(serde_json::Error),
}

impl From<bdcalc::Error> for CliError {
    fn from(e: bdcalc::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        use bdcalc::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Json(_) => "json",
            CliError::Core(e) => match e {
                E::Chain(_) => "chain",
                E::NotADivisor { .. } => "not-a-divisor",
                E::ChainMismatch(..) => "chain-mismatch",
                E::AmbientMismatch => "ambient-mismatch",
                E::PeriodNotInS { .. } => "period-not-in-s",
                E::NonzeroMean => "nonzero-mean",
                E::CharacterFixesShift { .. } => "character-fixes-shift",
                E::NoAdmissibleCharacter(_) => "no-admissible-character",
                E::NotAProjection(_) => "not-a-projection",
                E::NonzeroTau(_) => "nonzero-tau",
                E::NoWitness { .. } => "no-witness",
                E::Invalid(_) => "invalid",
                E::Parse(_) => "parse",
                #[allow(unreachable_patterns)]
                _ => "error",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Json(e) => e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bdcalc",
    version,
    about = "Exact computations in Bunce-Deddens algebras",
    after_help = "Groups and verbs:\n  sn      product divides gcd chain\n  zs      embed from-residue residue arith shift\n  cyclo   root arith is-zero eval\n  fn      character evaluate pullback haar decompose\n  bd      mul adjoint delta rho fourier symbol norm trace spectrum\n  der     apply component cocycle decompose recover pickchar nonsmooth\n  k       kappa k0 homobs phi r taurho coboundary psi digitphi\n  homalg  snf ext\n  verify  all mnorm covariance cocycle covariant-roundtrip charpick\n          consistency kernel-image rho-onto k0 ext\n\nExample: bdcalc der pickchar --n 2 --S '[[2,\"inf\"],[3,\"inf\"]]'"
)]
struct Cli {
    /// RNG seed for verification suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Default sample grid for norm and spectrum.
    #[arg(long)]
    grid: Option<u64>,
    /// Default divisor-chain depth.
    #[arg(long)]
    depth: Option<u64>,
    /// Verification scale: small or full.
    #[arg(long)]
    scale: Option<String>,
    /// Output format: pretty or compact.
    #[arg(long)]
    format: Option<String>,
    /// Read arguments from a JSON object file (`-` for stdin).
    #[arg(long)]
    json: Option<String>,
    group: String,
    verb: String,
    /// Verb arguments, `--key value` or `--key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

struct Outcome {
    value: Value,
    code: u8,
}

fn scale_of(g: &Globals) -> Result<Scale, CliError> {
    match g.scale.as_deref() {
        None | Some("full") => Ok(Scale::Full),
        Some("small") => Ok(Scale::Small),
        Some(other) => Err(CliError::Usage(format!("unknown scale {other:?}; expected small or full"))),
    }
}

fn execute(cli: Cli, g: &mut Globals) -> Result<Outcome, CliError> {
    let inline = args::split(&cli.rest, g)?;
    if let Some(f) = g.format.as_deref() {
        if f != "pretty" && f != "compact" {
            return Err(CliError::Usage(format!("unknown format {f:?}; expected pretty or compact")));
        }
    }
    let doc = args::document(g.json.as_deref(), inline)?;
    if cli.group == "verify" {
        if doc.as_object().is_some_and(|m| !m.is_empty()) {
            return Err(CliError::Usage("verify takes only --seed and --scale".into()));
        }
        if cli.verb != "all" && !SUITES.contains(&cli.verb.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown suite {:?}; expected all or one of: {}",
                cli.verb,
                SUITES.join(", ")
            )));
        }
        let report = verify_suite(&cli.verb, g.seed.unwrap_or(0), scale_of(g)?)?;
        eprintln!("{}: {:.3}s", report.suite, report.duration.as_secs_f64());
        let code = if report.passed() { 0 } else { 2 };
        return Ok(Outcome { value: serde_json::to_value(&report)?, code });
    }
    let value = dispatch::run(&cli.group, &cli.verb, &doc, g)?;
    Ok(Outcome { value, code: 0 })
}

fn render(value: &Value, g: &Globals) -> String {
    match g.format.as_deref() {
        Some("compact") => value.to_string(),
        _ => serde_json::to_string_pretty(value).expect("JSON values always serialize"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut g = Globals {
        seed: cli.seed,
        grid: cli.grid,
        depth: cli.depth,
        scale: cli.scale.clone(),
        format: cli.format.clone(),
        json: cli.json.clone(),
    };
    match execute(cli, &mut g) {
        Ok(out) => {
            println!("{}", render(&out.value, &g));
            ExitCode::from(out.code)
        }
        Err(e) => {
            let body = json!({"error": {"kind": e.kind(), "message": e.message()}});
            println!("{}", render(&body, &g));
            ExitCode::from(1)
        }
    }
}
