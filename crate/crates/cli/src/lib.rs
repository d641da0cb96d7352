//! Batch front end: fit, simulate, covariance, statistics and residual
//! commands over config and pattern files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use gibbspl::config::RunConfig;
use gibbspl::inference::{assess, fit_contrast, gnz_residual_with, Assessment, FitResult, TestFunction};
use gibbspl::models::ModelSpec;
use gibbspl::patterns::{read_pattern, write_pattern, Mark, PointPattern};
use gibbspl::pseudolikelihood::Contrast;
use gibbspl::quadrature::build_quadrature;
use gibbspl::simulate::{simulate_mh, ChainStats};
use gibbspl::{Error, Result};
use serde::Serialize;

/// Exit status for successful runs.
pub const EXIT_OK: i32 = 0;
/// Exit status for input, configuration and infeasibility errors.
pub const EXIT_INPUT: i32 = 1;
/// Exit status when the solver did not converge; output is still written.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gibbspl", version, about = "Pseudolikelihood fitting and simulation of marked Gibbs point processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; all cores by default. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum pseudolikelihood fit with sandwich covariance.
    Fit(FitArgs),
    /// Metropolis-Hastings simulation; writes a pattern CSV and a JSON manifest.
    Simulate(SimArgs),
    /// Covariance analysis at a fixed parameter.
    Vcov(AtArgs),
    /// Global and per-point local sufficient statistics.
    Stats(StatsArgs),
    /// GNZ residuals at a fixed parameter.
    Gnz(AtArgs),
}

/// Quadrature grid as `<nx>x<ny>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid(pub usize, pub usize);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("grid '{s}' is not of the form <nx>x<ny>"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("invalid grid size '{v}'"));
        Ok(Grid(parse(a)?, parse(b)?))
    }
}

#[derive(Debug, Args)]
pub struct Io {
    /// Run config (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub model: PathBuf,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    /// Pattern CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Dependence range of the block covariance.
    #[arg(long)]
    pub dvee: Option<f64>,
    /// Block side of the score covariance.
    #[arg(long)]
    pub cell: Option<f64>,
    #[arg(long)]
    pub grid: Option<Grid>,
    /// Gauss-Legendre nodes for continuous marks.
    #[arg(long)]
    pub mark_nodes: Option<usize>,
    /// Confidence level of the intervals.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub flags: FitFlags,
}

#[derive(Debug, Args)]
pub struct AtArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub flags: FitFlags,
    /// Earlier fit output whose estimate is used instead of the config theta.
    #[arg(long)]
    pub fit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long)]
    pub data: PathBuf,
    /// Also report each point's local statistic against the rest.
    #[arg(long)]
    pub local: bool,
}

/// Input echo stored with every output.
#[derive(Debug, Serialize)]
struct Echo<'a> {
    command: &'static str,
    config_path: &'a Path,
    data: Option<&'a Path>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    #[serde(flatten)]
    result: &'a FitResult<f64>,
    config: Echo<'a>,
}

#[derive(Serialize)]
struct AssessOutput<'a> {
    #[serde(flatten)]
    assessment: &'a Assessment<f64>,
    std_errors: Option<Vec<f64>>,
    config: Echo<'a>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    pattern: &'a Path,
    points: usize,
    acceptance: Rates,
    counts: ChainStats,
    config: Echo<'a>,
}

#[derive(Serialize)]
struct Rates {
    birth: f64,
    death: f64,
    #[serde(rename = "move")]
    shift: f64,
}

#[derive(Serialize)]
struct LocalRow {
    x: f64,
    y: f64,
    mark: Mark<f64>,
    values: Vec<f64>,
    hard_core: bool,
}

#[derive(Serialize)]
struct StatsOutput<'a> {
    family: &'static str,
    names: Vec<String>,
    points: usize,
    global: Vec<f64>,
    local: Option<Vec<LocalRow>>,
    config: Echo<'a>,
}

#[derive(Serialize)]
struct Residual {
    name: String,
    residual: f64,
    per_area: f64,
}

#[derive(Serialize)]
struct GnzOutput<'a> {
    theta: Vec<f64>,
    area: f64,
    points: usize,
    raw: Residual,
    statistics: Vec<Residual>,
    config: Echo<'a>,
}

fn load_config(path: &Path) -> Result<RunConfig> {
    if !path.exists() {
        return Err(Error::InvalidInput(format!("config file {} does not exist", path.display())));
    }
    RunConfig::from_path(path)
}

fn load_pattern(path: &Path, model: &ModelSpec<f64>, cfg: &RunConfig) -> Result<PointPattern<f64>> {
    let file = File::open(path).map_err(|e| Error::InvalidInput(format!("cannot open data file {}: {e}", path.display())))?;
    read_pattern(BufReader::new(file), model.mark_space(), cfg.window()?)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn apply_flags(cfg: &mut RunConfig, f: &FitFlags) {
    let fit = &mut cfg.fit;
    fit.dvee = f.dvee.or(fit.dvee);
    fit.cell = f.cell.or(fit.cell);
    fit.grid = f.grid.map(|g| [g.0, g.1]).or(fit.grid);
    fit.mark_nodes = f.mark_nodes.or(fit.mark_nodes);
    fit.level = f.level.or(fit.level);
}

fn write_json<S: Serialize>(out: Option<&Path>, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    match out {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display())))?;
            writeln!(f, "{text}")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Contrast for the fit plan of `cfg` on the data at `data`.
fn prepare(cfg: &RunConfig, data: &Path) -> Result<(gibbspl::config::FitPlan, Contrast<f64>)> {
    let plan = cfg.fit_plan()?;
    let pattern = load_pattern(data, &plan.model, cfg)?;
    let quad = build_quadrature(&plan.fit_window, &plan.model.mark_space(), plan.grid.0, plan.grid.1, plan.mark_nodes)?;
    let contrast = Contrast::new(&plan.model, &pattern, &plan.fit_window, &quad)?;
    Ok((plan, contrast))
}

fn cmd_fit(args: &FitArgs) -> Result<i32> {
    let mut cfg = load_config(&args.io.model)?;
    apply_flags(&mut cfg, &args.flags);
    let (plan, contrast) = prepare(&cfg, &args.flags.data)?;
    let result = fit_contrast(&plan.model, &contrast, plan.cell, plan.dvee, &plan.options)?;
    let echo = Echo { command: "fit", config_path: &args.io.model, data: Some(&args.flags.data), config: &cfg };
    write_json(args.io.out.as_deref(), &FitOutput { result: &result, config: echo })?;
    if result.solver.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "warning: solver did not converge after {} iterations (gradient norm {:e})",
            result.solver.iterations, result.solver.gradient_norm
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Parameter from an earlier fit output, or from the config.
fn theta_at(args: &AtArgs, cfg: &RunConfig) -> Result<Vec<f64>> {
    match &args.fit {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", p.display())))?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
            serde_json::from_value(v["theta_hat"].clone())
                .map_err(|e| Error::InvalidInput(format!("{}: no usable theta_hat ({e})", p.display())))
        }
        None => cfg.theta(),
    }
}

fn cmd_vcov(args: &AtArgs) -> Result<i32> {
    let mut cfg = load_config(&args.io.model)?;
    apply_flags(&mut cfg, &args.flags);
    let theta = theta_at(args, &cfg)?;
    let (plan, contrast) = prepare(&cfg, &args.flags.data)?;
    let a = assess(&plan.model, &contrast, &theta, plan.cell, plan.dvee, plan.options.level, &[])?;
    let std_errors = a.vcov.as_ref().map(|v| (0..v.len()).map(|j| v[j][j].max(0.0).sqrt()).collect());
    let echo = Echo { command: "vcov", config_path: &args.io.model, data: Some(&args.flags.data), config: &cfg };
    write_json(args.io.out.as_deref(), &AssessOutput { assessment: &a, std_errors, config: echo })?;
    Ok(EXIT_OK)
}

fn cmd_gnz(args: &AtArgs) -> Result<i32> {
    let mut cfg = load_config(&args.io.model)?;
    apply_flags(&mut cfg, &args.flags);
    let theta = theta_at(args, &cfg)?;
    let (plan, contrast) = prepare(&cfg, &args.flags.data)?;
    if theta.len() != plan.model.dim() {
        return Err(Error::Dimension { expected: plan.model.dim(), got: theta.len() });
    }
    let area = contrast.fit_window().area();
    let residual = |name: String, h| -> Result<Residual> {
        let r = gnz_residual_with(&contrast, &theta, h)?;
        Ok(Residual { name, residual: r, per_area: r / area })
    };
    let raw = residual("raw".into(), TestFunction::Raw)?;
    let statistics = plan
        .model
        .component_names()
        .into_iter()
        .enumerate()
        .map(|(j, n)| residual(n, TestFunction::Statistic(j)))
        .collect::<Result<Vec<_>>>()?;
    let echo = Echo { command: "gnz", config_path: &args.io.model, data: Some(&args.flags.data), config: &cfg };
    let out = GnzOutput { theta, area, points: contrast.data_len(), raw, statistics, config: echo };
    write_json(args.io.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

fn cmd_stats(args: &StatsArgs) -> Result<i32> {
    let cfg = load_config(&args.io.model)?;
    let model = cfg.model.build()?;
    let pattern = load_pattern(&args.data, &model, &cfg)?;
    let global = model.global_statistics(&pattern)?;
    let local = args.local.then(|| {
        let pts = pattern.points();
        (0..pts.len())
            .map(|i| {
                let others: Vec<_> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| *p).collect();
                let l = model.local_from_neighbours(&pts[i], &others);
                LocalRow { x: pts[i].x, y: pts[i].y, mark: pts[i].mark, values: l.values, hard_core: l.hard_core }
            })
            .collect()
    });
    let echo = Echo { command: "stats", config_path: &args.io.model, data: Some(&args.data), config: &cfg };
    let out = StatsOutput {
        family: model.family(),
        names: model.component_names(),
        points: pattern.len(),
        global,
        local,
        config: echo,
    };
    write_json(args.io.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

/// Manifest path next to the pattern: `name.csv` gives `name.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn cmd_simulate(args: &SimArgs) -> Result<i32> {
    let mut cfg = load_config(&args.io.model)?;
    cfg.simulate.seed = args.seed.or(cfg.simulate.seed);
    let sim = cfg.sim_config()?;
    let out = args
        .io
        .out
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("simulate needs --out for the pattern CSV".into()))?;
    let run = simulate_mh(&sim)?;
    let file = File::create(out).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", out.display())))?;
    let mut w = BufWriter::new(file);
    write_pattern(&run.pattern, &mut w)?;
    w.flush()?;
    let s = run.stats;
    let manifest = Manifest {
        pattern: out,
        points: run.pattern.len(),
        acceptance: Rates { birth: s.birth.rate(), death: s.death.rate(), shift: s.shift.rate() },
        counts: s,
        config: Echo { command: "simulate", config_path: &args.io.model, data: None, config: &cfg },
    };
    write_json(Some(&manifest_path(out)), &manifest)?;
    Ok(EXIT_OK)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return EXIT_INPUT;
        }
    }
    let status = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Vcov(a) => cmd_vcov(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Gnz(a) => cmd_gnz(a),
    };
    match status {
        Ok(code) => code,
        Err(e @ (Error::IllConditioned { .. } | Error::Numeric { .. })) => {
            eprintln!("error: {e}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
