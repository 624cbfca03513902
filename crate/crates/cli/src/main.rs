//! `astar`: adjusted significance levels for adaptive Phase 2/3 designs.

mod grid;
mod table;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use astar_core::alpha::{solve_alpha_star, type_one_error, AlphaStarResult};
use astar_core::oracle::{simulate_power, simulate_type_one, EffectSpec, McConfig};
use astar_core::trial::{info_from_events, stage2_nominal_p, stage_decompose, DesignParams, StrategyKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use grid::{linspace, Strategies, Values};
use table::{Cell, Table};

/// |z| beyond which a simulated rate is inconsistent with its target.
const Z_LIMIT: f64 = 3.5;

#[derive(Parser)]
#[command(
    name = "astar",
    version,
    about = "Adjusted one-sided significance levels for adaptive Phase 2/3 designs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format (default csv; verify defaults to json).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for α* at one point or over a grid of points.
    Solve(DesignArgs),
    /// Type I error when testing at a given α*.
    Error {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, allow_hyphen_values = true)]
        astar: Values,
    },
    /// Stage decomposition and nominal Stage 2 p-values.
    Table1(Table1Args),
    /// α* against w for each strategy and threshold.
    Figure1(DesignArgs),
    /// α* against the threshold c for several w and t.
    Figure2(DesignArgs),
    /// Compare the analytic Type I error with simulation.
    Verify {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Level to test at; defaults to the solved α*.
        #[arg(long)]
        astar: Option<Values>,
    },
    /// Simulated rejection rate under mean shifts given in z units.
    Power {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        astar: Option<Values>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu11: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu12: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu2: f64,
    },
}

/// Design flags. Numeric flags take `x`, `x,y,z` or `start:stop:step`.
#[derive(Args, Clone)]
struct DesignArgs {
    #[arg(long)]
    alpha: Option<Values>,
    /// conservative, neutral, aggressive (comma list or `all`).
    #[arg(long)]
    strategy: Option<Strategies>,
    /// Threshold on the log hazard ratio scale.
    #[arg(long, visible_alias = "c-grid", conflicts_with = "c_hr", allow_hyphen_values = true)]
    c: Option<Values>,
    /// Threshold as a hazard ratio; its natural log is used.
    #[arg(long = "c-hr", visible_alias = "c-hr-grid")]
    c_hr: Option<Values>,
    #[arg(long, visible_alias = "t-grid")]
    t: Option<Values>,
    #[arg(long, visible_alias = "w-grid")]
    w: Option<Values>,
    /// Total events; information is events / 4.
    #[arg(long, default_value_t = 510.0)]
    events: f64,
    /// Statistical information, overriding --events.
    #[arg(long)]
    info: Option<f64>,
}

#[derive(Args, Clone)]
struct McArgs {
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
}

#[derive(Args, Clone)]
struct Table1Args {
    #[arg(long, default_value_t = 0.84)]
    hr_overall: f64,
    #[arg(long, default_value_t = 0.3)]
    t: f64,
    #[arg(long, default_value_t = 510.0)]
    events: f64,
    /// Stage 1 minus Stage 2 log-effect differences.
    #[arg(long, allow_hyphen_values = true)]
    diff: Option<Values>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    NoConvergence(String),
    VerifyFailed(usize),
    Io(io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid parameters: {m}"),
            CliError::NoConvergence(m) => write!(f, "{m}"),
            CliError::VerifyFailed(n) => write!(f, "verification failed for {n} parameter set(s)"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<astar_core::Error> for CliError {
    fn from(e: astar_core::Error) -> Self {
        match e {
            astar_core::Error::NoConvergence { .. } => CliError::NoConvergence(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

/// Fallbacks for flags the user left out; `None` means the flag is required.
struct Defaults {
    strategies: Vec<StrategyKind>,
    c: Option<Vec<f64>>,
    t: Vec<f64>,
    w: Option<Vec<f64>>,
}

impl Defaults {
    fn point() -> Self {
        Self {
            strategies: vec![StrategyKind::Neutral],
            c: None,
            t: vec![0.3],
            w: None,
        }
    }
}

/// Fully resolved design grid.
struct Design {
    alpha: Vec<f64>,
    strategies: Vec<StrategyKind>,
    c: Vec<f64>,
    t: Vec<f64>,
    w: Vec<f64>,
    info: f64,
}

impl DesignArgs {
    fn resolve(&self, d: Defaults) -> Result<Design, CliError> {
        let c = match (&self.c, &self.c_hr) {
            (Some(c), _) => c.0.clone(),
            (None, Some(hr)) => {
                if let Some(&bad) = hr.0.iter().find(|&&x| x <= 0.0) {
                    return Err(CliError::Invalid(format!("--c-hr must be positive, got {bad}")));
                }
                hr.map(f64::ln)
            }
            (None, None) => {
                d.c.ok_or_else(|| CliError::Invalid("one of --c or --c-hr is required".into()))?
            }
        };
        let w = match &self.w {
            Some(w) => w.0.clone(),
            None => d.w.ok_or_else(|| CliError::Invalid("--w is required".into()))?,
        };
        let info = match self.info {
            Some(i) => i,
            None => info_from_events(self.events)?,
        };
        Ok(Design {
            alpha: self.alpha.as_ref().map_or(vec![0.025], |a| a.0.clone()),
            strategies: self.strategy.as_ref().map_or(d.strategies, |s| s.0.clone()),
            c,
            t: self.t.as_ref().map_or(d.t, |t| t.0.clone()),
            w,
            info,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    alpha: f64,
    strategy: StrategyKind,
    c: f64,
    t: f64,
    w: f64,
}

impl Point {
    fn params(&self, info: f64) -> Result<DesignParams, CliError> {
        Ok(DesignParams::new(
            self.alpha,
            self.strategy,
            self.c,
            self.t,
            info,
            self.w,
        )?)
    }
}

impl Design {
    /// Grid points with `alpha` outermost, then strategy, c, t, w.
    fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &alpha in &self.alpha {
            for &strategy in &self.strategies {
                for &c in &self.c {
                    for &t in &self.t {
                        for &w in &self.w {
                            out.push(Point {
                                alpha,
                                strategy,
                                c,
                                t,
                                w,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn single<T: Copy>(values: &[T], flag: &str) -> Result<T, CliError> {
        match values {
            [v] => Ok(*v),
            _ => Err(CliError::Invalid(format!(
                "{flag} takes a single value for this command"
            ))),
        }
    }
}

/// Solves every point concurrently; results keep the input order.
fn solve_all(points: &[Point], info: f64) -> Result<Vec<AlphaStarResult>, CliError> {
    let results = points
        .par_iter()
        .map(|p| Ok(solve_alpha_star(&p.params(info)?)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let clamped: BTreeSet<String> = points
        .iter()
        .zip(&results)
        .filter(|(_, r)| r.clamped_w)
        .map(|(p, _)| p.w.to_string())
        .collect();
    for w in clamped {
        eprintln!("warning: w = {w} is below 0.5 and is treated as 0.5");
    }
    Ok(results)
}

fn cmd_solve(args: &DesignArgs) -> Result<Table, CliError> {
    let design = args.resolve(Defaults::point())?;
    let points = design.points();
    let start = Instant::now();
    let results = solve_all(&points, design.info)?;
    let mut table = Table::new(&[
        "strategy",
        "c",
        "t",
        "info",
        "w",
        "alpha",
        "alpha_star",
        "achieved_type1",
    ]);
    for (p, r) in points.iter().zip(&results) {
        table.push(vec![
            Cell::Text(p.strategy.to_string()),
            Cell::Num(p.c),
            Cell::Num(p.t),
            Cell::Num(design.info),
            Cell::Num(p.w),
            Cell::Num(p.alpha),
            Cell::Num(r.alpha_star),
            Cell::Num(r.achieved_type1),
        ]);
    }
    if let [r] = results[..] {
        eprintln!("alpha_star = {:.4}", r.alpha_star);
        eprintln!(
            "iterations = {}, achieved type I error = {:.6}, bracket = {:.1e}",
            r.iterations, r.achieved_type1, r.bracket
        );
        if r.capped {
            eprintln!("note: the unadjusted level already controls the error; alpha_star = alpha");
        }
    } else {
        eprintln!(
            "solved {} points in {:.2}s",
            results.len(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(table)
}

fn cmd_error(args: &DesignArgs, astar: &Values) -> Result<Table, CliError> {
    let design = args.resolve(Defaults::point())?;
    let mut jobs = Vec::new();
    for p in design.points() {
        for &a in &astar.0 {
            jobs.push((p, a));
        }
    }
    let errors = jobs
        .par_iter()
        .map(|(p, a)| Ok(type_one_error(&p.params(design.info)?, *a)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(&["strategy", "c", "t", "info", "w", "alpha_star", "type1_error"]);
    for ((p, a), e) in jobs.iter().zip(errors) {
        table.push(vec![
            Cell::Text(p.strategy.to_string()),
            Cell::Num(p.c),
            Cell::Num(p.t),
            Cell::Num(design.info),
            Cell::Num(p.w),
            Cell::Num(*a),
            Cell::Num(e),
        ]);
    }
    Ok(table)
}

fn cmd_figure1(args: &DesignArgs) -> Result<Table, CliError> {
    let design = args.resolve(Defaults {
        strategies: StrategyKind::ALL.to_vec(),
        c: Some(vec![1.1f64.ln(), 1.2f64.ln()]),
        t: vec![0.3],
        w: Some(grid::range(0.5, 1.0, 0.025).expect("static grid")),
    })?;
    let alpha = Design::single(&design.alpha, "--alpha")?;
    let t = Design::single(&design.t, "--t")?;
    let mut points = Vec::new();
    for &strategy in &design.strategies {
        for &c in &design.c {
            for &w in &design.w {
                points.push(Point {
                    alpha,
                    strategy,
                    c,
                    t,
                    w,
                });
            }
        }
    }
    let results = solve_all(&points, design.info)?;
    let mut table = Table::new(&["strategy", "c", "w", "alpha_star"]);
    for (p, r) in points.iter().zip(&results) {
        table.push(vec![
            Cell::Text(p.strategy.to_string()),
            Cell::Num(p.c),
            Cell::Num(p.w),
            Cell::Num(r.alpha_star),
        ]);
    }
    eprintln!("solved {} points", results.len());
    Ok(table)
}

fn cmd_figure2(args: &DesignArgs) -> Result<Table, CliError> {
    let design = args.resolve(Defaults {
        strategies: vec![StrategyKind::Neutral],
        c: Some(linspace(0.0, 1.3f64.ln(), 25)),
        t: vec![0.2, 0.3, 0.4],
        w: Some(vec![0.5, 1.0]),
    })?;
    let alpha = Design::single(&design.alpha, "--alpha")?;
    let strategy = Design::single(&design.strategies, "--strategy")?;
    let mut points = Vec::new();
    for &w in &design.w {
        for &t in &design.t {
            for &c in &design.c {
                points.push(Point {
                    alpha,
                    strategy,
                    c,
                    t,
                    w,
                });
            }
        }
    }
    let results = solve_all(&points, design.info)?;
    let mut table = Table::new(&["w", "t", "c", "alpha_star"]);
    for (p, r) in points.iter().zip(&results) {
        table.push(vec![
            Cell::Num(p.w),
            Cell::Num(p.t),
            Cell::Num(p.c),
            Cell::Num(r.alpha_star),
        ]);
    }
    eprintln!("solved {} points", results.len());
    Ok(table)
}

fn cmd_table1(args: &Table1Args) -> Result<Table, CliError> {
    let diffs = args.diff.as_ref().map_or_else(
        || vec![-1.2f64.ln(), -1.1f64.ln(), 1.1f64.ln(), 1.2f64.ln()],
        |d| d.0.clone(),
    );
    if args.events.is_nan() || args.events <= 0.0 {
        return Err(CliError::Invalid(format!(
            "--events must be positive, got {}",
            args.events
        )));
    }
    // Stage 2 carries the last (1 − t) share of the events.
    let stage2_events = (1.0 - args.t) * args.events;
    let mut table = Table::new(&["hr_overall", "hr_stage1", "hr_stage2", "diff", "nominal_p_stage2"]);
    for diff in diffs {
        let s = stage_decompose(args.hr_overall, args.t, diff)?;
        let p = stage2_nominal_p(s.hr_stage2, stage2_events)?;
        table.push(vec![
            Cell::Num(s.hr_overall),
            Cell::Num(s.hr_stage1),
            Cell::Num(s.hr_stage2),
            Cell::Num(s.diff),
            Cell::Num(p),
        ]);
    }
    Ok(table)
}

/// Points paired with the level to test at: either every requested α* or
/// the solved one.
fn levels(design: &Design, astar: Option<&Values>) -> Result<Vec<(Point, f64)>, CliError> {
    let points = design.points();
    Ok(match astar {
        Some(a) => points.iter().flat_map(|&p| a.0.iter().map(move |&x| (p, x))).collect(),
        None => {
            let solved = solve_all(&points, design.info)?;
            points.into_iter().zip(solved).map(|(p, r)| (p, r.alpha_star)).collect()
        }
    })
}

fn mc_config(mc: &McArgs, k: usize) -> Result<McConfig, CliError> {
    // Each parameter set gets its own seed so their estimates are independent.
    Ok(McConfig::new(mc.reps, mc.seed.wrapping_add(k as u64))?)
}

fn cmd_verify(args: &DesignArgs, mc: &McArgs, astar: Option<&Values>) -> Result<(Table, usize), CliError> {
    let design = args.resolve(Defaults::point())?;
    let jobs = levels(&design, astar)?;
    let mut table = Table::new(&[
        "strategy",
        "c",
        "t",
        "info",
        "w",
        "alpha_star",
        "analytic",
        "mc_estimate",
        "mc_se",
        "z_discrepancy",
        "z_level",
        "pass",
    ]);
    let mut failures = 0;
    for (k, (p, a)) in jobs.iter().enumerate() {
        let params = p.params(design.info)?;
        let analytic = type_one_error(&params, *a)?;
        let est = simulate_type_one(&params, *a, &mc_config(mc, k)?)?;
        let z = est.z_score(analytic);
        // The simulated error must also not exceed the nominal level.
        let z_level = -est.z_score(p.alpha);
        let pass = z.abs() <= Z_LIMIT && z_level <= Z_LIMIT;
        failures += usize::from(!pass);
        eprintln!(
            "{} c={:.4} t={} w={}: analytic {analytic:.5}, simulated {:.5} ± {:.5}, z {z:.2}, level z {z_level:.2}",
            p.strategy, p.c, p.t, p.w, est.estimate, est.std_error
        );
        table.push(vec![
            Cell::Text(p.strategy.to_string()),
            Cell::Num(p.c),
            Cell::Num(p.t),
            Cell::Num(design.info),
            Cell::Num(p.w),
            Cell::Num(*a),
            Cell::Num(analytic),
            Cell::Num(est.estimate),
            Cell::Num(est.std_error),
            Cell::Num(z),
            Cell::Num(z_level),
            Cell::Flag(pass),
        ]);
    }
    Ok((table, failures))
}

fn cmd_power(args: &DesignArgs, mc: &McArgs, astar: Option<&Values>, effects: EffectSpec) -> Result<Table, CliError> {
    let design = args.resolve(Defaults::point())?;
    let jobs = levels(&design, astar)?;
    let mut table = Table::new(&[
        "strategy",
        "c",
        "t",
        "info",
        "w",
        "alpha_star",
        "mu11",
        "mu12",
        "mu2",
        "power",
        "mc_se",
    ]);
    for (k, (p, a)) in jobs.iter().enumerate() {
        let est = simulate_power(&p.params(design.info)?, *a, &effects, &mc_config(mc, k)?)?;
        table.push(vec![
            Cell::Text(p.strategy.to_string()),
            Cell::Num(p.c),
            Cell::Num(p.t),
            Cell::Num(design.info),
            Cell::Num(p.w),
            Cell::Num(*a),
            Cell::Num(effects.mu11),
            Cell::Num(effects.mu12),
            Cell::Num(effects.mu2),
            Cell::Num(est.estimate),
            Cell::Num(est.std_error),
        ]);
    }
    Ok(table)
}

fn emit(table: &Table, format: Format, out: Option<&PathBuf>, report: Option<(&McArgs, bool)>) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match format {
        Format::Csv => table.write_csv(&mut sink)?,
        Format::Json => {
            let value = match report {
                Some((mc, pass)) => serde_json::json!({
                    "replicates": mc.reps,
                    "seed": mc.seed,
                    "z_limit": Z_LIMIT,
                    "pass": pass,
                    "rows": table.to_json(),
                }),
                None => table.to_json(),
            };
            serde_json::to_writer_pretty(&mut sink, &value).map_err(io::Error::from)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let format = cli.format.unwrap_or(Format::Csv);
    let out = cli.out.as_ref();
    match &cli.command {
        Command::Solve(a) => emit(&cmd_solve(a)?, format, out, None),
        Command::Error { design, astar } => emit(&cmd_error(design, astar)?, format, out, None),
        Command::Table1(a) => emit(&cmd_table1(a)?, format, out, None),
        Command::Figure1(a) => emit(&cmd_figure1(a)?, format, out, None),
        Command::Figure2(a) => emit(&cmd_figure2(a)?, format, out, None),
        Command::Verify { design, mc, astar } => {
            let (table, failures) = cmd_verify(design, mc, astar.as_ref())?;
            emit(
                &table,
                cli.format.unwrap_or(Format::Json),
                out,
                Some((mc, failures == 0)),
            )?;
            match failures {
                0 => Ok(()),
                n => Err(CliError::VerifyFailed(n)),
            }
        }
        Command::Power {
            design,
            mc,
            astar,
            mu11,
            mu12,
            mu2,
        } => {
            let effects = EffectSpec {
                mu11: *mu11,
                mu12: *mu12,
                mu2: *mu2,
            };
            emit(&cmd_power(design, mc, astar.as_ref(), effects)?, format, out, None)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on malformed flags.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
