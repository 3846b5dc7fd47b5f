//! Batch front end: one JSON document in, one report out.
//!
//! Input shape: `{"space": {...}, "m": {"cutoff": N, "terms": [...]}}`, with
//! `m` written in the coordinates of `ΠV` (the generator names of the space).
//! Input terms are read as exact; `--cutoff` truncates them.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::bv::BVContext;
use crate::graphs::connected_summands;
use crate::integrate::IntegrationProblem;
use crate::series::json::SeriesJson;
use crate::series::FormalSeries;
use crate::space::{Parity, SpaceJson, SuperSpace};
use crate::transfer::{check_master, rho_series, Strategy, TransferError};

#[derive(Parser, Debug)]
#[command(name = "bvmin", version, about = "Minimal models of quantum L-infinity algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the space, h-membership and the master equation.
    Validate(JobArgs),
    /// Transfer the structure to homology.
    MinimalModel(JobArgs),
    /// List connected stable graph contributions to the minimal model.
    GraphExpand(JobArgs),
}

#[derive(Args, Debug, Clone)]
pub struct JobArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Weight cutoff; defaults to the cutoff recorded in the input.
    #[arg(long)]
    pub cutoff: Option<i32>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Wick)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Wick,
    Direct,
    Graphs,
    All,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Wick => Strategy::Wick,
            StrategyArg::Direct => Strategy::Direct,
            StrategyArg::Graphs => Strategy::Graphs,
            StrategyArg::All => Strategy::All,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Pretty,
}

/// Failure classes, mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<TransferError> for CliError {
    fn from(e: TransferError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Deserialize)]
struct InputDoc {
    space: SpaceJson,
    #[serde(default)]
    m: Option<SeriesJson>,
}

/// A finished job: the document to emit and whether every check passed.
pub struct Outcome {
    pub json: Value,
    pub pretty: String,
    pub ok: bool,
}

struct Loaded {
    space: Result<SuperSpace, String>,
    doc_m: Option<SeriesJson>,
}

fn load(args: &JobArgs) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.input.display())))?;
    let doc: InputDoc =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    if let Some(n) = args.cutoff {
        if n < 3 {
            return Err(CliError::Input(format!("cutoff must be at least 3, got {n}")));
        }
    }
    let space = doc
        .space
        .into_spec()
        .map_err(|e| format!("Parse: {e}"))
        .and_then(|spec| SuperSpace::new(spec).map_err(|e| e.to_string()));
    Ok(Loaded { space, doc_m: doc.m })
}

fn read_m(doc_m: &Option<SeriesJson>, ctx: &BVContext, cutoff: Option<i32>) -> Result<FormalSeries, CliError> {
    let m = match doc_m {
        Some(j) => j
            .to_series(ctx.alphabet())
            .map_err(|e| CliError::Input(format!("m: {e}")))?,
        None => FormalSeries::zero(ctx.alphabet().clone(), cutoff.unwrap_or(3)),
    };
    Ok(match cutoff {
        Some(n) => m.with_cutoff(n),
        None => m,
    })
}

fn series_json(s: &FormalSeries) -> Value {
    serde_json::to_value(SeriesJson::from_series(s)).expect("series serialize")
}

fn check(name: &str, pass: bool, detail: Option<String>) -> Value {
    json!({ "check": name, "pass": pass, "detail": detail })
}

fn validate(args: &JobArgs) -> Result<Outcome, CliError> {
    let loaded = load(args)?;
    let mut checks = Vec::new();
    let mut pretty = String::new();
    let mut push = |name: &str, pass: bool, detail: Option<String>| {
        pretty.push_str(&format!(
            "{} {name}{}\n",
            if pass { "PASS" } else { "FAIL" },
            detail.as_ref().map(|d| format!(": {d}")).unwrap_or_default()
        ));
        checks.push(check(name, pass, detail));
        pass
    };
    let mut ok = true;
    match &loaded.space {
        Err(e) => {
            ok &= push("space", false, Some(e.clone()));
        }
        Ok(space) => {
            ok &= push("space", true, None);
            let ctx = space
                .parity_reverse()
                .map_err(|e| CliError::Validation(e.to_string()))
                .and_then(|w| BVContext::new(&w).map_err(|e| CliError::Validation(e.to_string())));
            match ctx {
                Err(e) => ok &= push("bv", false, Some(format!("{e:?}"))),
                Ok(ctx) => {
                    let m = read_m(&loaded.doc_m, &ctx, args.cutoff)?;
                    let hv = m.h_violation();
                    ok &= push("h_membership", hv.is_none(), hv);
                    let even = m.is_zero() || m.homogeneous_parity() == Some(Parity::Even);
                    ok &= push("even", even, (!even).then(|| "m is not even".to_string()));
                    if ok {
                        let r = ctx.qme_residual(&m).map_err(|e| CliError::Validation(e.to_string()))?;
                        ok &= push("qme", r.is_zero(), r.first_term());
                    }
                }
            }
        }
    }
    Ok(Outcome {
        json: json!({ "command": "validate", "valid": ok, "checks": checks }),
        pretty,
        ok,
    })
}

fn problem(args: &JobArgs) -> Result<(IntegrationProblem, FormalSeries), CliError> {
    let loaded = load(args)?;
    let space = loaded.space.map_err(CliError::Validation)?;
    let prob = IntegrationProblem::new(&space).map_err(|e| CliError::Validation(e.to_string()))?;
    let m = read_m(&loaded.doc_m, &prob.w, args.cutoff)?;
    Ok((prob, m))
}

fn minimal_model(args: &JobArgs) -> Result<Outcome, CliError> {
    let (prob, m) = problem(args)?;
    check_master(&prob.w, &m)?;
    let strategy: Strategy = args.strategy.into();
    let report = rho_series(&m, &prob, strategy)?;
    let residual = prob
        .h
        .qme_residual(&report.m)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let agree = report.strategies_agree();
    let strategies: Vec<String> = report.results.iter().map(|(s, _)| s.to_string()).collect();
    let json = json!({
        "command": "minimal-model",
        "strategy": strategy.to_string(),
        "cutoff": m.cutoff(),
        "space": serde_json::to_value(SpaceJson::from(&prob.sdr.h)).expect("space serialize"),
        "m": series_json(&report.m),
        "verification": {
            "qme_residual_zero": residual.is_zero(),
            "qme_residual_leading": residual.first_term(),
            "strategies": strategies,
            "strategies_agree": agree,
        },
    });
    let mut pretty = format!(
        "minimal model on H(V) = {:?}, cutoff {}\n",
        prob.h_alphabet().names(),
        m.cutoff()
    );
    pretty.push_str(&format!("m' = {}\n", report.m.pretty()));
    pretty.push_str(&format!("qme residual zero: {}\n", residual.is_zero()));
    if strategy == Strategy::All {
        pretty.push_str(&format!("strategies agree: {agree}\n"));
    }
    Ok(Outcome {
        json,
        pretty,
        ok: residual.is_zero() && agree,
    })
}

fn graph_expand(args: &JobArgs) -> Result<Outcome, CliError> {
    let (prob, m) = problem(args)?;
    let rows = connected_summands(&m, &prob, m.cutoff()).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut sum = FormalSeries::zero(prob.h_alphabet().clone(), m.cutoff());
    let mut table = Vec::new();
    let mut pretty = String::from("genus  euler  |Aut|  vertices (g,edges,legs)  contribution\n");
    for row in &rows {
        let (g, chi) = row.class.to_stable_graph().genus_and_euler();
        sum = sum.add(&row.contribution);
        let verts: Vec<String> = row
            .class
            .vertices
            .iter()
            .map(|t| format!("({},{},{})", t.genus, t.half_edges, t.legs))
            .collect();
        pretty.push_str(&format!(
            "{g:>5}  {chi:>5}  {:>5}  {:<24} {}\n",
            row.class.aut,
            verts.join(""),
            row.contribution.pretty()
        ));
        table.push(json!({
            "graph": serde_json::to_value(row.class.to_json()).expect("graph serialize"),
            "genus": g,
            "euler": chi,
            "aut": row.class.aut,
            "amplitude": series_json(&row.amplitude),
            "contribution": series_json(&row.contribution),
        }));
    }
    pretty.push_str(&format!("sum = {}\n", sum.pretty()));
    Ok(Outcome {
        json: json!({
            "command": "graph-expand",
            "cutoff": m.cutoff(),
            "rows": table,
            "sum": series_json(&sum),
        }),
        pretty,
        ok: true,
    })
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<(Outcome, &JobArgs), CliError> {
    let (out, args) = match &cli.command {
        Command::Validate(a) => (validate(a)?, a),
        Command::MinimalModel(a) => (minimal_model(a)?, a),
        Command::GraphExpand(a) => (graph_expand(a)?, a),
    };
    Ok((out, args))
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli).and_then(|(out, args)| {
        let text = match args.format {
            Format::Json => serde_json::to_string_pretty(&out.json).expect("json") + "\n",
            Format::Pretty => out.pretty.clone(),
        };
        emit(&text, &args.output)?;
        Ok(out.ok)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let msg = match &e {
                CliError::Validation(m) | CliError::Input(m) => m,
            };
            eprintln!("error: {msg}");
            e.exit_code()
        }
    }
}
