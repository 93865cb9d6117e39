//! Command-line front end.
//!
//! Exit codes: `0` success, `2` bad input, `3` search stopped by its node
//! limit, `4` instance too large for the requested command.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::{self, best_symmetric, dominance_relation, exhaustive_search, Dominance};
use crate::casestudy::{default_delta, CaseStudyConfig, Family};
use crate::credmodel::{cumulative_top_k, enumerate_viable, FaultModel};
use crate::execsim::success_equivalence_sweep;
use crate::mechanism::{PartialTruthTable, MAX_PROFILE_N};
use crate::search::{scenario_based_search, SearchParams, SearchResult};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NODE_LIMIT: i32 = 3;
pub const EXIT_TOO_LARGE: i32 = 4;

/// Largest credential count a case-study sweep will search.
pub const MAX_SWEEP_N: usize = 12;

/// Header of the results CSV.
pub const RESULTS_HEADER: &str = "n,algorithm,failure_probability,mechanism";

#[derive(Debug, Parser)]
#[command(name = "credmech", version, about = "Design near-optimal authentication mechanisms from credential fault probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Hetero,
    Fig1b,
    Wallet,
    Questions,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Hetero => Family::Hetero,
            FamilyArg::Fig1b => Family::Fig1b,
            FamilyArg::Wallet => Family::Wallet,
            FamilyArg::Questions => Family::Questions,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a near-optimal mechanism.
    Search {
        #[arg(long)]
        model: PathBuf,
        /// Optimality margin; defaults to 1e-5 up to 9 credentials, 1e-6 above.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Keep zero-probability scenarios in the search list.
        #[arg(long)]
        keep_zero: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Also write the mechanism in text format to this file.
        #[arg(long)]
        mechanism_out: Option<PathBuf>,
    },
    /// Best mechanism by enumerating every monotone function (n <= 5).
    Exhaustive {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// List viable scenarios by descending probability.
    Scenarios {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Sweep a case-study family over credential counts.
    Casestudy {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0)]
        n_weak: usize,
        #[arg(long, default_value_t = 1)]
        min_regular: usize,
        #[arg(long, default_value_t = 4)]
        max_regular: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Wall-clock budget for the whole sweep, in seconds.
        #[arg(long)]
        budget_secs: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the fault model of a case-study family as CSV.
    Model {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n_regular: usize,
        #[arg(long, default_value_t = 0)]
        n_weak: usize,
    },
    /// Check simulated executions against the profile of every monotone function (n <= 3).
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        horizon: u32,
    },
    /// Evaluate a mechanism file against a fault model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn too_large(message: impl Into<String>) -> Self {
        Self { code: EXIT_TOO_LARGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CredentialCount { .. } | Error::OutOfBounds(_) => Self::too_large(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn read_model(path: &Path) -> Result<FaultModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    FaultModel::from_csv_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_mechanism(path: &Path) -> Result<PartialTruthTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    PartialTruthTable::from_text(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn mechanism_string(table: &PartialTruthTable) -> Result<String, CliError> {
    Ok(table
        .minimal_true_vectors()?
        .iter()
        .map(|v| v.to_bitstring(table.n()))
        .collect::<Vec<_>>()
        .join(","))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Search { model, delta, node_limit, keep_zero, format, mechanism_out } => {
            let model = read_model(&model)?;
            let mut params = SearchParams::new(delta.unwrap_or_else(|| default_delta(model.n())))?;
            params.drop_zero = !keep_zero;
            if let Some(limit) = node_limit {
                params = params.with_node_limit(limit)?;
            }
            let result = scenario_based_search(&model, &params)?;
            write_search(out, &result, format)?;
            if let Some(path) = mechanism_out {
                fs::write(path, result.best_table.to_text()?)?;
            }
            if !result.certified {
                return Err(CliError {
                    code: EXIT_NODE_LIMIT,
                    message: format!(
                        "node limit reached after {} nodes; result is not certified",
                        result.stats.nodes_visited
                    ),
                });
            }
            Ok(())
        }
        Command::Exhaustive { model, format } => {
            let model = read_model(&model)?;
            if model.n() > baselines::MAX_CATALOG_N {
                return Err(CliError::too_large(format!(
                    "exhaustive search supports n <= {}, got {}",
                    baselines::MAX_CATALOG_N,
                    model.n()
                )));
            }
            let (table, p) = exhaustive_search(&model)?;
            write_mechanism(out, "exhaustive", &table, p, None, format)
        }
        Command::Scenarios { model, top_k } => {
            let model = read_model(&model)?;
            write_scenarios(out, &model, top_k)
        }
        Command::Casestudy { family, n_weak, min_regular, max_regular, delta, node_limit, budget_secs, out: path } => {
            let budget = budget_secs.map(Duration::from_secs_f64);
            let rows = run_casestudy(family.into(), n_weak, min_regular..=max_regular, delta, node_limit, budget, err)?;
            let csv = results_csv(&rows)?;
            match path {
                Some(path) => fs::write(path, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
            Ok(())
        }
        Command::Model { family, n_regular, n_weak } => {
            let cfg = CaseStudyConfig::new(family.into(), n_regular, n_weak)?;
            out.write_all(cfg.model()?.to_csv().as_bytes())?;
            Ok(())
        }
        Command::Simulate { n, horizon } => {
            if n == 0 || n > 3 {
                return Err(CliError::too_large(format!("simulation sweep supports 1 <= n <= 3, got {n}")));
            }
            let report = success_equivalence_sweep(n, horizon)?;
            writeln!(
                out,
                "n={} horizon={horizon} functions={} scenarios={} mismatches={}",
                report.n,
                report.functions,
                report.scenarios,
                report.mismatches.len()
            )?;
            for (rows, s) in &report.mismatches {
                writeln!(out, "mismatch f={rows} scenario={s}")?;
            }
            writeln!(out, "{}", if report.passed() { "PASS" } else { "FAIL" })?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError { code: 1, message: "simulation disagrees with the profile".into() })
            }
        }
        Command::Evaluate { model, mechanism, format } => {
            let model = read_model(&model)?;
            let table = read_mechanism(&mechanism)?;
            if table.n() != model.n() {
                return Err(CliError::input(format!(
                    "mechanism has {} credentials, model has {}",
                    table.n(),
                    model.n()
                )));
            }
            let list = enumerate_viable(&model, true)?;
            let p = table.success_probability(&model, &list)?;
            let (k, sym) = best_symmetric(&model)?;
            let relation = if model.n() <= MAX_PROFILE_N {
                let threshold = PartialTruthTable::threshold(model.n(), k)?;
                Some(dominance_relation(&table, &threshold)?)
            } else {
                None
            };
            write_mechanism(out, "evaluate", &table, p, Some(SymmetricComparison { k, probability: sym, relation }), format)
        }
    }
}

struct SymmetricComparison {
    k: u32,
    probability: f64,
    relation: Option<Dominance>,
}

fn relation_name(d: Option<Dominance>) -> &'static str {
    match d {
        Some(Dominance::Equivalent) => "equivalent",
        Some(Dominance::FirstStrict) => "mechanism_dominates",
        Some(Dominance::SecondStrict) => "symmetric_dominates",
        Some(Dominance::Incomparable) => "incomparable",
        None => "not_computed",
    }
}

fn write_search(out: &mut dyn Write, r: &SearchResult, format: OutputFormat) -> Result<(), CliError> {
    let n = r.best_table.n();
    let mechanism = mechanism_string(&r.best_table)?;
    match format {
        OutputFormat::Text => {
            writeln!(out, "n={n}")?;
            writeln!(out, "mechanism: {mechanism}")?;
            writeln!(out, "success_probability: {}", r.success_probability)?;
            writeln!(out, "failure_probability: {}", r.failure_probability())?;
            writeln!(out, "delta: {}", r.params.delta)?;
            writeln!(out, "certified: {}", r.certified)?;
            let s = &r.stats;
            writeln!(
                out,
                "stats: scenarios={} nodes_visited={} branches_pruned={} completions_evaluated={} best_updates={} max_depth={} elapsed_secs={:.6}",
                s.scenarios,
                s.nodes_visited,
                s.branches_pruned,
                s.completions_evaluated,
                s.best_updates,
                s.max_depth,
                s.elapsed.as_secs_f64()
            )?;
        }
        OutputFormat::Json => {
            let value = json!({
                "n": n,
                "minimal_true_vectors": bitstrings(&r.best_table)?,
                "success_probability": r.success_probability,
                "failure_probability": r.failure_probability(),
                "delta": r.params.delta,
                "certified": r.certified,
                "stats": r.stats,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&value).map_err(|e| CliError::input(e.to_string()))?)?;
        }
        OutputFormat::Csv => {
            let row = ResultRow {
                n,
                algorithm: "search".into(),
                failure_probability: r.failure_probability(),
                mechanism,
            };
            out.write_all(results_csv(&[row])?.as_bytes())?;
        }
    }
    Ok(())
}

fn bitstrings(table: &PartialTruthTable) -> Result<Vec<String>, CliError> {
    Ok(table.minimal_true_vectors()?.iter().map(|v| v.to_bitstring(table.n())).collect())
}

fn write_mechanism(
    out: &mut dyn Write,
    algorithm: &str,
    table: &PartialTruthTable,
    success: f64,
    symmetric: Option<SymmetricComparison>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let n = table.n();
    let mechanism = mechanism_string(table)?;
    match format {
        OutputFormat::Text => {
            writeln!(out, "n={n}")?;
            writeln!(out, "mechanism: {mechanism}")?;
            writeln!(out, "success_probability: {success}")?;
            writeln!(out, "failure_probability: {}", 1.0 - success)?;
            if let Some(sym) = &symmetric {
                writeln!(out, "best_symmetric: {}-of-{n} success_probability={}", sym.k, sym.probability)?;
                writeln!(out, "relation_to_symmetric: {}", relation_name(sym.relation))?;
            }
        }
        OutputFormat::Json => {
            let mut value = json!({
                "n": n,
                "minimal_true_vectors": bitstrings(table)?,
                "success_probability": success,
                "failure_probability": 1.0 - success,
            });
            if let Some(sym) = &symmetric {
                value["best_symmetric"] = json!({
                    "k": sym.k,
                    "success_probability": sym.probability,
                    "relation": relation_name(sym.relation),
                });
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&value).map_err(|e| CliError::input(e.to_string()))?)?;
        }
        OutputFormat::Csv => {
            let row = ResultRow { n, algorithm: algorithm.into(), failure_probability: 1.0 - success, mechanism };
            out.write_all(results_csv(&[row])?.as_bytes())?;
        }
    }
    Ok(())
}

/// One row of the scenario listing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub rank: usize,
    pub user: String,
    pub attacker: String,
    pub probability: f64,
    pub cumulative: f64,
}

/// Counts reported in the scenario listing's leading comment line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioCounts {
    pub n: usize,
    pub total: u64,
    pub viable: u64,
    pub positive: u64,
}

fn write_scenarios(out: &mut dyn Write, model: &FaultModel, top_k: Option<usize>) -> Result<(), CliError> {
    let n = model.n();
    let list = enumerate_viable(model, true)?;
    let counts = ScenarioCounts {
        n,
        total: 4u64.pow(n as u32),
        viable: 4u64.pow(n as u32) - 3u64.pow(n as u32),
        positive: list.len() as u64,
    };
    writeln!(
        out,
        "# n={} total={} viable={} positive={}",
        counts.n, counts.total, counts.viable, counts.positive
    )?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut cumulative = 0.0;
    let take = top_k.unwrap_or(list.len());
    for (rank, (s, p)) in list.iter().take(take).enumerate() {
        cumulative += p;
        wtr.serialize(ScenarioRow {
            rank: rank + 1,
            user: s.user.to_bitstring(n),
            attacker: s.attacker.to_bitstring(n),
            probability: *p,
            cumulative,
        })
        .map_err(|e| CliError::input(e.to_string()))?;
    }
    if take == 0 || list.is_empty() {
        writeln!(out, "rank,user,attacker,probability,cumulative")?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    out.write_all(&bytes)?;
    // the running sum must agree with the library's cumulative mass
    debug_assert!((cumulative - cumulative_top_k(&list, take)).abs() < 1e-12);
    Ok(())
}

/// Parses the output of the `scenarios` command.
pub fn parse_scenarios_csv(text: &str) -> Result<(ScenarioCounts, Vec<ScenarioRow>), Error> {
    let header = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| Error::Parse("missing counts line".into()))?;
    let mut counts = ScenarioCounts { n: 0, total: 0, viable: 0, positive: 0 };
    for field in header.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse(format!("bad field `{field}`")))?;
        let value: u64 = value.parse().map_err(|_| Error::Parse(format!("bad count `{field}`")))?;
        match key {
            "n" => counts.n = value as usize,
            "total" => counts.total = value,
            "viable" => counts.viable = value,
            "positive" => counts.positive = value,
            _ => return Err(Error::Parse(format!("unknown field `{key}`"))),
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = rdr
        .deserialize()
        .collect::<Result<Vec<ScenarioRow>, _>>()
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok((counts, rows))
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub algorithm: String,
    pub failure_probability: f64,
    pub mechanism: String,
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row).map_err(|e| CliError::input(e.to_string()))?;
    }
    let body = wtr.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    Ok(format!("{RESULTS_HEADER}\n{}", String::from_utf8_lossy(&body)))
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, Error> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != RESULTS_HEADER {
        return Err(Error::Parse("unexpected results header".into()));
    }
    rdr.deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .map_err(|e| Error::Parse(e.to_string()))
}

/// Runs one family over a range of regular-credential counts.
///
/// Each point reports the search optimum, the best symmetric threshold, the
/// exhaustive optimum when `n <= 5`, and for the wallet and question families
/// the structured reference mechanism plus the search optimum over the
/// regular credentials alone.
pub fn run_casestudy(
    family: Family,
    n_weak: usize,
    regular: std::ops::RangeInclusive<usize>,
    delta: Option<f64>,
    node_limit: Option<u64>,
    budget: Option<Duration>,
    warn: &mut dyn Write,
) -> Result<Vec<ResultRow>, CliError> {
    let started = Instant::now();
    let mut rows = Vec::new();
    for n_regular in regular {
        let cfg = CaseStudyConfig::new(family, n_regular, n_weak)?;
        let n = cfg.n();
        if n > MAX_SWEEP_N {
            writeln!(warn, "warning: skipping n={n}: sweeps are capped at {MAX_SWEEP_N} credentials")?;
            continue;
        }
        if budget.is_some_and(|b| started.elapsed() > b) {
            writeln!(warn, "warning: skipping n={n}: time budget exhausted")?;
            continue;
        }
        let model = cfg.model()?;
        let params = make_params(delta.unwrap_or_else(|| default_delta(n)), node_limit)?;
        let result = scenario_based_search(&model, &params)?;
        if !result.certified {
            writeln!(warn, "warning: n={n}: node limit reached, search row is not certified")?;
        }
        rows.push(ResultRow {
            n,
            algorithm: "search".into(),
            failure_probability: result.failure_probability(),
            mechanism: mechanism_string(&result.best_table)?,
        });

        let (k, sym) = best_symmetric(&model)?;
        rows.push(ResultRow {
            n,
            algorithm: "symmetric".into(),
            failure_probability: 1.0 - sym,
            mechanism: format!("{k}-of-{n}"),
        });

        if n <= baselines::MAX_CATALOG_N {
            let (table, p) = exhaustive_search(&model)?;
            rows.push(ResultRow {
                n,
                algorithm: "exhaustive".into(),
                failure_probability: 1.0 - p,
                mechanism: mechanism_string(&table)?,
            });
        }

        if let Some(reference) = cfg.reference_table()? {
            let list = enumerate_viable(&model, true)?;
            rows.push(ResultRow {
                n,
                algorithm: "reference".into(),
                failure_probability: 1.0 - reference.success_probability(&model, &list)?,
                mechanism: mechanism_string(&reference)?,
            });
            if n_weak > 0 {
                let regular_only = CaseStudyConfig::new(family, n_regular, 0)?.model()?;
                let base = scenario_based_search(&regular_only, &params)?;
                rows.push(ResultRow {
                    n,
                    algorithm: "regular_only".into(),
                    failure_probability: base.failure_probability(),
                    mechanism: mechanism_string(&base.best_table)?,
                });
            }
        }
    }
    Ok(rows)
}

fn make_params(delta: f64, node_limit: Option<u64>) -> Result<SearchParams, Error> {
    let params = SearchParams::new(delta)?;
    match node_limit {
        Some(limit) => params.with_node_limit(limit),
        None => Ok(params),
    }
}
