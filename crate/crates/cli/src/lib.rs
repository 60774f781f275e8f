//! Command-line front end: run single scenarios, reproduce benchmark tables,
//! list the catalog and replay earlier runs.

pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use impatient_core::experiments::{run_replications, table_rows, KpiSummary, ReportRow};
use impatient_core::{builtin_names, builtin_scenario, compare_report, BenchTable, EventRecord, ScenarioConfig};

pub const OUT_DIR_ENV: &str = "IMPATIENT_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl CliError {
    /// 2 configuration, 3 I/O, 4 replay mismatch.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } => 3,
            Self::Replay(_) => 4,
        }
    }
}

impl From<impatient_core::Error> for CliError {
    fn from(e: impatient_core::Error) -> Self {
        Self::Config(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "impatient", version, about = "Risk-based balking and reneging experiments for edge offloading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its KPIs.
    Run(RunArgs),
    /// Reproduce a benchmark table (table2, table3 or table4).
    Bench(BenchArgs),
    /// Print every built-in scenario name.
    ListScenarios,
    /// Re-run the scenario stored in an output directory and compare KPIs.
    Replay { dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; defaults to the scenario's own.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<u32>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    pub format: Vec<Format>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scenario", "config"]))]
pub struct RunArgs {
    /// Catalog entry, e.g. `poisson-low/R10`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write every simulation event as NDJSON.
    #[arg(long)]
    pub debug_events: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub table: String,
    #[command(flatten)]
    pub common: Common,
}

pub fn main_with(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::ListScenarios => {
            for n in builtin_names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Replay { dir } => cmd_replay(&dir),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn apply(mut cfg: ScenarioConfig, common: &Common) -> Result<ScenarioConfig> {
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = common.replications {
        cfg.replications = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_scenario(args: &RunArgs) -> Result<ScenarioConfig> {
    let cfg = match (&args.scenario, &args.config) {
        (Some(name), None) => builtin_scenario(name)?,
        (None, Some(path)) => serde_json::from_str(&read(path)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        _ => return Err(CliError::Config("give exactly one of --scenario or --config".into())),
    };
    apply(cfg, &args.common)
}

fn split_name(name: &str) -> (String, String) {
    match name.split_once('/') {
        Some((g, m)) => (g.to_string(), m.to_string()),
        None => (String::new(), name.to_string()),
    }
}

fn ecdf_csv(ecdf: &[(f64, f64)]) -> String {
    let mut s = String::from("utility,cum_fraction\n");
    for (u, f) in ecdf {
        s.push_str(&format!("{u},{f}\n"));
    }
    s
}

/// KPI fields printed on standard output, without the ECDF.
#[derive(Serialize)]
struct KpiLine<'a> {
    scenario: &'a str,
    master_seed: u64,
    replications: usize,
    task_count: usize,
    admission_rate: Option<f64>,
    avg_utility: Option<f64>,
    median_utility: Option<f64>,
    mec_served_count: usize,
    balk_count: usize,
    renege_count: usize,
    preempt_count: usize,
    mean_observations_per_task: Option<f64>,
}

impl<'a> KpiLine<'a> {
    fn new(cfg: &'a ScenarioConfig, k: &KpiSummary) -> Self {
        Self {
            scenario: &cfg.name,
            master_seed: cfg.master_seed,
            replications: k.replications,
            task_count: k.task_count,
            admission_rate: k.admission_rate,
            avg_utility: k.avg_utility,
            median_utility: k.median_utility,
            mec_served_count: k.mec_served_count,
            balk_count: k.balk_count,
            renege_count: k.renege_count,
            preempt_count: k.preempt_count,
            mean_observations_per_task: k.mean_observations_per_task,
        }
    }
}

#[derive(Serialize)]
struct EventLine<'a> {
    replication: usize,
    #[serde(flatten)]
    event: &'a EventRecord,
}

fn kpi_json(k: &KpiSummary) -> String {
    serde_json::to_string_pretty(k).expect("kpi serialises") + "\n"
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = load_scenario(args)?;
    let outputs = run_replications(&cfg)?;
    let kpi = KpiSummary::from_replications(&outputs);
    let dir = &args.common.out;
    create_dir(dir)?;
    let formats = &args.common.format;
    write(&dir.join("scenario.json"), serde_json::to_string_pretty(&cfg).expect("config serialises") + "\n")?;
    if formats.contains(&Format::Json) {
        write(&dir.join("kpi.json"), kpi_json(&kpi))?;
    }
    if formats.contains(&Format::Csv) {
        let (group, method) = split_name(&cfg.name);
        let report = compare_report(vec![ReportRow { group, method, summary: kpi.clone() }]);
        write(&dir.join("report.csv"), report.to_csv())?;
        write(&dir.join("ecdf.csv"), ecdf_csv(&kpi.ecdf))?;
    }
    if formats.contains(&Format::Svg) {
        let label = if cfg.name.is_empty() { "scenario" } else { &cfg.name };
        write(&dir.join("ecdf.svg"), plot::ecdf_svg(label, &[(label, &kpi.ecdf)]))?;
    }
    if args.debug_events {
        let mut s = String::new();
        for (replication, out) in outputs.iter().enumerate() {
            for event in &out.events {
                s.push_str(&serde_json::to_string(&EventLine { replication, event }).expect("event serialises"));
                s.push('\n');
            }
        }
        write(&dir.join("events.ndjson"), s)?;
    }
    println!("{}", serde_json::to_string(&KpiLine::new(&cfg, &kpi)).expect("kpi serialises"));
    Ok(())
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let table: BenchTable = args.table.parse()?;
    let rows = table_rows(table);
    let configs = rows
        .iter()
        .map(|r| apply(builtin_scenario(&r.scenario)?, &args.common))
        .collect::<Result<Vec<_>>>()?;
    let summaries = configs
        .par_iter()
        .map(|c| Ok(KpiSummary::from_replications(&run_replications(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = compare_report(
        rows.iter()
            .zip(summaries)
            .map(|(r, summary)| ReportRow { group: r.group.clone(), method: r.method.clone(), summary })
            .collect(),
    );

    let dir = &args.common.out;
    create_dir(dir)?;
    let formats = &args.common.format;
    let stem = table.name();
    write(&dir.join("report.txt"), report.to_table())?;
    if formats.contains(&Format::Csv) {
        write(&dir.join("report.csv"), report.to_csv())?;
        let ecdf_dir = dir.join("ecdf");
        create_dir(&ecdf_dir)?;
        for r in &report.rows {
            let name = format!("{}__{}.csv", file_stem(&r.group), file_stem(&r.method));
            write(&ecdf_dir.join(name), ecdf_csv(&r.summary.ecdf))?;
        }
    }
    if formats.contains(&Format::Json) {
        write(&dir.join("report.json"), report.to_json() + "\n")?;
    }
    if formats.contains(&Format::Svg) {
        let mut groups: Vec<&str> = report.rows.iter().map(|r| r.group.as_str()).collect();
        groups.dedup();
        for g in groups {
            let series: Vec<(&str, &[(f64, f64)])> = report
                .rows
                .iter()
                .filter(|r| r.group == g)
                .map(|r| (r.method.as_str(), r.summary.ecdf.as_slice()))
                .collect();
            write(&dir.join(format!("{stem}_{}.svg", file_stem(g))), plot::ecdf_svg(g, &series))?;
        }
    }
    print!("{}", report.to_table());
    Ok(())
}

pub fn cmd_replay(dir: &Path) -> Result<()> {
    let cfg: ScenarioConfig = serde_json::from_str(&read(&dir.join("scenario.json"))?)
        .map_err(|e| CliError::Config(format!("scenario.json: {e}")))?;
    cfg.validate()?;
    let expected = read(&dir.join("kpi.json"))?;
    let kpi = KpiSummary::from_replications(&run_replications(&cfg)?);
    if kpi_json(&kpi) != expected {
        return Err(CliError::Replay(format!("KPIs of `{}` differ from {}", cfg.name, dir.join("kpi.json").display())));
    }
    println!("{}", serde_json::to_string(&KpiLine::new(&cfg, &kpi)).expect("kpi serialises"));
    Ok(())
}
