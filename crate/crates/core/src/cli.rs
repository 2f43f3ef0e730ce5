//! Command-line front end.
//!
//! Exit codes: 0 success, 1 tolerance breach, 2 bad input (schema,
//! validation, unknown case, I/O), 3 numerical infeasibility.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::harness::{basket_skewness, run_identity_suite, run_table, Oracle, TableSpec};
use crate::market_model::schema::{InstrumentFile, Priceable};
use crate::mc_oracle::{mc_asian_basket, mc_price, McConfig};
use crate::proxy::{self, Prepared, ProxyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SPREADKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spreadkit", version, about = "Closed-form Asian basket spread option pricing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price an instrument file.
    Price(PriceArgs),
    /// Replay bundled reference tables.
    Tables(TablesArgs),
    /// Check the expectation identities against Monte Carlo.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    All,
}

impl OrderArg {
    fn max_order(self) -> usize {
        match self {
            OrderArg::Zero => 0,
            OrderArg::One => 1,
            OrderArg::Two => 2,
            OrderArg::Three | OrderArg::All => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProxyArg {
    Geometric,
    Levy,
}

impl From<ProxyArg> for ProxyKind {
    fn from(p: ProxyArg) -> Self {
        match p {
            ProxyArg::Geometric => ProxyKind::Geometric,
            ProxyArg::Levy => ProxyKind::Levy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Paper,
    Mc,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Number of Monte Carlo paths.
    #[arg(long, default_value_t = 4_000_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of batches used for the standard error.
    #[arg(long, default_value_t = 1000)]
    pub batches: usize,
    #[arg(long)]
    pub no_antithetic: bool,
    /// Disable the basket-value control variate.
    #[arg(long)]
    pub no_control_variate: bool,
}

impl McArgs {
    fn config(&self) -> McConfig {
        McConfig {
            paths: self.paths,
            seed: self.seed,
            antithetic: !self.no_antithetic,
            batches: self.batches,
            control_variate: !self.no_control_variate,
        }
    }
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub order: OrderArg,
    #[arg(long, value_enum, default_value = "geometric")]
    pub proxy: ProxyArg,
    /// Also run the Monte Carlo oracle.
    #[arg(long)]
    pub mc: bool,
    #[command(flatten)]
    pub mc_args: McArgs,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    pub case: Option<String>,
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value = "paper")]
    pub oracle: OracleArg,
    /// Directory for per-table CSV and JSON reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub mc_args: McArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run the identity suite (the only suite at present).
    #[arg(long)]
    pub identities: bool,
    /// Seeds the random instances and the simulation.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 4_000_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 3)]
    pub instances: u64,
    #[arg(long, default_value_t = 1000)]
    pub batches: usize,
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::LevyInfeasible { .. } | Error::Domain(_) | Error::Factorization { .. } => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Price(a) => price(a),
        Command::Tables(a) => tables(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok((value, code)) => {
            let text = serde_json::to_string_pretty(&value).expect("json output");
            let _ = writeln!(out, "{text}");
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn read_instrument(path: &Path) -> Result<InstrumentFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    InstrumentFile::from_json(&text)
}

fn price(args: &PriceArgs) -> Result<(Value, i32)> {
    let file = read_instrument(&args.input)?;
    let priceable = file.to_priceable()?;
    let basket = priceable.reduced()?;
    let kind = ProxyKind::from(args.proxy);
    let max_order = args.order.max_order();
    let prices = crate::price_reduced(&basket, kind, max_order)?;

    let mut vg = serde_json::Map::new();
    for (k, v) in prices.vg.iter().enumerate() {
        if args.order == OrderArg::All || k == max_order {
            vg.insert(format!("vg{k}"), json!(v));
        }
    }
    let diagnostics = match proxy::build_inputs(&basket.folded()?, kind)? {
        Prepared::Expansion(e) => json!({
            "a_p": e.a_p,
            "a_n": e.a_n,
            "kappa_star": e.kappa_star,
            "nu2": e.nu2,
            "deterministic_ratio": e.is_deterministic_ratio(),
            "skewness": basket_skewness(&basket).ok(),
        }),
        Prepared::Exact(_) => json!({ "exact": true, "skewness": basket_skewness(&basket).ok() }),
    };
    let mut output = json!({
        "proxy": kind.to_string(),
        "prices": vg,
        "breakdown": prices.breakdown,
        "diagnostics": diagnostics,
    });
    if args.mc {
        let config = args.mc_args.config();
        let mc = match &priceable {
            Priceable::Basket { .. } => mc_price(&basket, &config)?,
            Priceable::Asian { spec, model } => mc_asian_basket(spec, model, &config)?,
        };
        let last = prices.last();
        output["mc"] = json!({
            "price": mc.price,
            "std_error": mc.std_error,
            "paths": mc.paths_used,
            "seed": config.seed,
            "diff": last - mc.price,
            "within_3se": mc.within(last, 3.0),
        });
    }
    Ok((output, EXIT_OK))
}

fn tables(args: &TablesArgs) -> Result<(Value, i32)> {
    let specs = match &args.case {
        Some(id) => vec![TableSpec::bundled(id)?],
        None => TableSpec::all_bundled()?,
    };
    let oracle = match args.oracle {
        OracleArg::Paper => Oracle::Paper,
        OracleArg::Mc => Oracle::InternalMc(args.mc_args.config()),
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
    }
    let mut summary = Vec::new();
    let mut all_passed = true;
    for spec in &specs {
        let report = run_table(spec, &oracle)?;
        if let Some(dir) = &args.out {
            let stem = format!("{}_{}", report.id, report.oracle);
            fs::write(dir.join(format!("{stem}.csv")), report.to_csv())?;
            fs::write(dir.join(format!("{stem}.json")), report.to_json() + "\n")?;
        }
        all_passed &= report.passed;
        summary.push(json!({
            "id": report.id,
            "oracle": report.oracle,
            "passed": report.passed,
            "rmse": report.stats.iter().map(|s| s.rmse).collect::<Vec<_>>(),
            "mae": report.stats.iter().map(|s| s.mae).collect::<Vec<_>>(),
            "failed_checks": report.failed_checks().collect::<Vec<_>>(),
        }));
    }
    let code = if all_passed { EXIT_OK } else { EXIT_TOLERANCE };
    Ok((json!({ "tables": summary, "passed": all_passed }), code))
}

fn validate(args: &ValidateArgs) -> Result<(Value, i32)> {
    let config = McConfig { paths: args.paths, seed: args.seed, batches: args.batches, ..McConfig::default() };
    let seeds: Vec<u64> = (0..args.instances).map(|i| args.seed.wrapping_add(i)).collect();
    let report = run_identity_suite(&seeds, &config)?;
    let code = if report.all_passed() { EXIT_OK } else { EXIT_TOLERANCE };
    Ok((serde_json::to_value(&report)?, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_case_exits_2() {
        let (code, _, err) = run_str(&["spreadkit", "tables", "--case", "nonexistent"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("nonexistent"));
    }

    #[test]
    fn missing_subcommand_exits_2() {
        assert_eq!(run_str(&["spreadkit"]).0, EXIT_INPUT);
        assert_eq!(run_str(&["spreadkit", "tables"]).0, EXIT_INPUT);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_str(&["spreadkit", "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("price"));
    }

    #[test]
    fn table_case_summary() {
        let (code, out, _) = run_str(&["spreadkit", "tables", "--case", "deelstra2"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["passed"], json!(true));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::LevyInfeasible { leg: "positive" }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Schema("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::UnknownCase("x".into())), EXIT_INPUT);
    }
}
