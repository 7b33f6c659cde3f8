//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 audit failure, 3 estimator returned bottom.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use upriv::applications::{
    private_triangle_density_with, sample_multinomial, sample_rgg, uniformity_test, uniformity_test_boosted,
    GeometricGraph, PerturbedUniform, TriangleConfig, UniformityConfig,
};
use upriv::dp::{NoiseLaw, PrivacyBudget};
use upriv::rng::{seeded, substream};
use upriv::ustat::{all_tuples, evaluate_ustat, local_projection, Dataset};
use upriv::{EstimateReport, Outcome};

use crate::audit::{noise_gof, smoothness_audit, AuditKernel};
use crate::catalog::{parse_categorical, Knobs, Method, Sample, Workload};
use crate::config::splice_config;
use crate::experiment::{run_experiment, Cell, ExperimentSpec};
use crate::fixture::{adversarial_fixture, equality_kernel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_BOTTOM: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "upriv", version, about = "Differentially private U-statistics", args_override_self = true)]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Privacy parameter of the estimator.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub eps: f64,
    /// Failure probability for boosting and concentration radii.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,
    /// Write results here (CSV for `simulate`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key = value` file with defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Multiplier on `S / eps` in smooth-sensitivity releases.
    #[arg(long, global = true, default_value_t = upriv::dp::SMOOTH_NOISE_MULTIPLIER)]
    pub noise_multiplier: f64,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Private estimate from a data file.
    Estimate(EstimateArgs),
    /// Monte Carlo grid written as CSV.
    Simulate(SimulateArgs),
    /// Private test of approximate uniformity.
    UniformityTest(UniformityArgs),
    /// Private triangle density of a graph.
    RggTriangles(RggArgs),
    /// Exhaustive smoothness check of the Hájek smooth bound.
    AuditSmoothness(AuditArgs),
    /// Goodness of fit of a noise sampler.
    AuditNoise(NoiseArgs),
    /// Write the adversarial dataset pair and check its gap.
    FixtureAdversarial(FixtureArgs),
}

const SUBCOMMANDS: &[&str] = &[
    "estimate",
    "simulate",
    "uniformity-test",
    "rgg-triangles",
    "audit-smoothness",
    "audit-noise",
    "fixture-adversarial",
];

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, default_value = "all")]
    pub method: Method,
    /// identity, mean, constant[:v] or collision.
    #[arg(long, default_value = "mean")]
    pub kernel: String,
    /// One value per line (reals, or labels for `collision`).
    #[arg(long)]
    pub data: PathBuf,
    /// A priori bound on |theta|.
    #[arg(long, default_value_t = 10.0)]
    pub r: f64,
    #[arg(long)]
    pub subsets: Option<usize>,
    /// Median of chunk estimates at confidence 1 - alpha.
    #[arg(long)]
    pub boost: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "all")]
    pub method: Method,
    #[arg(long, default_value = "mean")]
    pub kernel: String,
    /// gaussian:MU, uniform:M, alternating:M:S or perturbed:A1,A2,...
    #[arg(long, default_value = "gaussian:0.5")]
    pub dist: String,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub subsets: Option<usize>,
    #[arg(long)]
    pub boost: bool,
    #[arg(long, default_value_t = 10.0)]
    pub r: f64,
    /// Add a wall-time column (rows are then no longer reproducible).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Args)]
pub struct UniformityArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub delta: f64,
    /// One label in 1..=m per line.
    #[arg(long, conflicts_with = "simulate")]
    pub data: Option<PathBuf>,
    /// uniform, alternating:S or A1,A2,...
    #[arg(long)]
    pub simulate: Option<String>,
    /// Sample size for --simulate.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long)]
    pub boost: bool,
}

#[derive(Debug, Args)]
pub struct RggArgs {
    /// Edge list, one `i j` pair per line, 1-based.
    #[arg(long, conflicts_with = "simulate")]
    pub graph: Option<PathBuf>,
    /// `n,r`: sample a random geometric graph.
    #[arg(long)]
    pub simulate: Option<String>,
    /// Scale numerator for the private edge density, `scale / (n eps)`.
    #[arg(long, default_value_t = 2.0)]
    pub nu_scale: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// equality or constant.
    #[arg(long, default_value = "equality")]
    pub kernel: String,
    /// Halve the smooth bound (negative control; should fail).
    #[arg(long)]
    pub halve: bool,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// laplace or quartic.
    #[arg(long, default_value = "laplace")]
    pub law: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: usize,
    /// Scale of the reference CDF; anything but 1 should fail.
    #[arg(long, default_value_t = 1.0)]
    pub reference_scale: f64,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run(argv: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let argv = match splice_config(argv, SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let cmd = Cli::command().args_override_self(true);
    let cmd = propagate_override(cmd);
    let cli = match cmd.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
            } else {
                let _ = write!(stdout, "{}", e.render());
            }
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .try_init();
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn propagate_override(cmd: clap::Command) -> clap::Command {
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    names.into_iter().fold(cmd, |c, name| c.mut_subcommand(name, |s| s.args_override_self(true)))
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Estimate(a) => estimate(cli, a, out, err),
        Command::Simulate(a) => simulate(cli, a, out, err),
        Command::UniformityTest(a) => uniformity(cli, a, out, err),
        Command::RggTriangles(a) => triangles(cli, a, out, err),
        Command::AuditSmoothness(a) => audit_smoothness(cli, a, out),
        Command::AuditNoise(a) => audit_noise(cli, a, out),
        Command::FixtureAdversarial(a) => fixture(cli, a, out),
    }
}

fn write_report(out: &mut dyn Write, rep: &EstimateReport<f64>) -> Result<()> {
    writeln!(out, "estimate     {}", rep.estimate)?;
    writeln!(out, "radius       {}", rep.radius)?;
    writeln!(out, "noise scale  {}", rep.noise_scale)?;
    if let Some(l) = rep.diagnostics.l_statistic {
        writeln!(out, "L            {l}")?;
    }
    if let Some(b) = rep.diagnostics.bad_count {
        writeln!(out, "bad indices  {b}")?;
    }
    if let Some(t) = rep.diagnostics.iterations {
        writeln!(out, "iterations   {t}")?;
    }
    Ok(())
}

fn finish(
    outcome: Outcome<EstimateReport<f64>>,
    budget: &PrivacyBudget,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    write!(err, "{budget}")?;
    match outcome {
        Outcome::Value(rep) => {
            write_report(out, &rep)?;
            Ok(EXIT_OK)
        }
        Outcome::Bottom(reason) => {
            writeln!(out, "bottom: {reason}")?;
            Ok(EXIT_BOTTOM)
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn estimate(cli: &Cli, a: &EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let text = read(&a.data)?;
    // The distribution only fixes the data type here; its mean is unused.
    let (workload, sample) = if a.kernel == "collision" {
        (Workload::parse("collision", "uniform:2")?, Sample::Label(Dataset::parse_lines(&text)?))
    } else {
        (Workload::parse(&a.kernel, "gaussian")?, Sample::Real(Dataset::parse_lines(&text)?))
    };
    let knobs =
        Knobs { eps: cli.eps, alpha: cli.alpha, r: a.r, subsets: a.subsets, noise_multiplier: cli.noise_multiplier };
    let mut budget = PrivacyBudget::new(cli.eps)?;
    let mut rng = seeded(cli.seed);
    let outcome = workload.estimate(a.method, &sample, &knobs, a.boost, &mut budget, &mut rng)?;
    if let (Some(path), Outcome::Value(rep)) = (&cli.out, &outcome) {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["estimate", "radius", "noise_scale", "epsilon"])?;
        w.write_record([rep.estimate, rep.radius, rep.noise_scale, rep.epsilon].map(|v| v.to_string()))?;
        w.flush()?;
    }
    finish(outcome, &budget, out, err)
}

fn simulate(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let grid = a.n.iter().map(|&n| Cell { n, eps: cli.eps, alpha: cli.alpha, subsets: a.subsets }).collect();
    let mut spec = ExperimentSpec::new(a.method, &a.kernel, &a.dist, grid, a.trials, cli.seed);
    spec.boost = a.boost;
    spec.r = a.r;
    spec.noise_multiplier = cli.noise_multiplier;
    spec.wall_time = a.wall_time;
    let rows = match &cli.out {
        Some(path) => {
            run_experiment(&spec, fs::File::create(path).with_context(|| format!("creating {}", path.display()))?)?
        }
        None => run_experiment(&spec, &mut *out)?,
    };
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let spent = rows.iter().map(|r| r.epsilon_spent).fold(0.0, f64::max);
    writeln!(
        err,
        "{} rows, {failed} without an estimate; each trial spent at most {spent} of eps = {}",
        rows.len(),
        cli.eps
    )?;
    Ok(EXIT_OK)
}

fn parse_a_spec(spec: &str, m: usize) -> Result<PerturbedUniform> {
    if spec == "uniform" {
        return Ok(PerturbedUniform::uniform(m));
    }
    if let Some(s) = spec.strip_prefix("alternating:") {
        return Ok(PerturbedUniform::alternating(m, s.parse()?)?);
    }
    let dist = parse_categorical("perturbed", spec)?;
    if dist.m() != m {
        bail!("{} perturbations given for m = {m}", dist.m());
    }
    Ok(dist)
}

fn uniformity(cli: &Cli, a: &UniformityArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let data: Dataset<u32> = match (&a.data, &a.simulate) {
        (Some(p), _) => Dataset::parse_lines(&read(p)?)?,
        (None, Some(spec)) => sample_multinomial(&parse_a_spec(spec, a.m)?, a.n, &mut substream(cli.seed, 1, 0)),
        (None, None) => bail!("give --data or --simulate"),
    };
    let cfg = UniformityConfig { noise_multiplier: cli.noise_multiplier, ..Default::default() };
    let mut budget = PrivacyBudget::new(cli.eps)?;
    let decision = if a.boost {
        uniformity_test_boosted::<f64>(&data, a.m, a.delta, cli.eps, cli.alpha, &cfg, cli.seed, &mut budget)?
    } else {
        uniformity_test::<f64, _>(&data, a.m, a.delta, cli.eps, &cfg, &mut budget, &mut substream(cli.seed, 2, 0))?
    };
    write!(err, "{budget}")?;
    match decision {
        Outcome::Value(d) => {
            writeln!(out, "{}", if d.reject { "reject" } else { "accept" })?;
            writeln!(out, "statistic    {}", d.statistic)?;
            writeln!(out, "threshold    {}", d.threshold)?;
            Ok(EXIT_OK)
        }
        Outcome::Bottom(reason) => {
            writeln!(out, "bottom: {reason}")?;
            Ok(EXIT_BOTTOM)
        }
    }
}

fn triangles(cli: &Cli, a: &RggArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let g = match (&a.graph, &a.simulate) {
        (Some(p), _) => GeometricGraph::parse_edge_lines(&read(p)?, None)?,
        (None, Some(spec)) => {
            let (n, r) = spec.split_once(',').context("--simulate takes n,r")?;
            sample_rgg(n.trim().parse()?, r.trim().parse()?, &mut substream(cli.seed, 1, 0))?
        }
        (None, None) => bail!("give --graph or --simulate"),
    };
    let cfg = TriangleConfig { nu_scale: a.nu_scale, noise_multiplier: cli.noise_multiplier, ..Default::default() };
    let mut budget = PrivacyBudget::new(2.0 * cli.eps)?;
    let res = private_triangle_density_with::<f64, _>(&g, cli.eps, &cfg, &mut budget, &mut substream(cli.seed, 2, 0))?;
    writeln!(out, "private edge density {}", res.nu)?;
    finish(res.result, &budget, out, err)
}

fn audit_smoothness(cli: &Cli, a: &AuditArgs, out: &mut dyn Write) -> Result<i32> {
    let kernel = match a.kernel.as_str() {
        "equality" => AuditKernel::Equality,
        "constant" => AuditKernel::Constant,
        k => bail!("unknown audit kernel {k:?} (equality, constant)"),
    };
    if !(2..=12).contains(&a.n) {
        bail!("audit size must lie in 2..=12");
    }
    match smoothness_audit(a.n, cli.eps, a.xi, a.c, kernel, a.halve) {
        Ok(r) => {
            writeln!(out, "pass: {} datasets, {} adjacent pairs", r.datasets, r.pairs)?;
            writeln!(out, "worst sensitivity margin {}", r.sensitivity_margin)?;
            writeln!(out, "worst smoothness margin  {}", r.smoothness_margin)?;
            Ok(EXIT_OK)
        }
        Err(f) => {
            writeln!(out, "fail: {f}")?;
            Ok(EXIT_AUDIT)
        }
    }
}

fn audit_noise(cli: &Cli, a: &NoiseArgs, out: &mut dyn Write) -> Result<i32> {
    let law = match a.law.as_str() {
        "laplace" => NoiseLaw::Laplace,
        "quartic" => NoiseLaw::QuarticTail,
        l => bail!("unknown noise law {l:?} (laplace, quartic)"),
    };
    let r = noise_gof(law, a.draws, cli.seed, a.reference_scale);
    writeln!(
        out,
        "{} draws, max CDF gap {:.6}, threshold {:.6}: {}",
        r.draws,
        r.gap,
        r.threshold,
        if r.pass { "pass" } else { "fail" }
    )?;
    Ok(if r.pass { EXIT_OK } else { EXIT_AUDIT })
}

fn fixture(cli: &Cli, a: &FixtureArgs, out: &mut dyn Write) -> Result<i32> {
    let f = adversarial_fixture(a.n, a.k, cli.eps);
    let h = equality_kernel(a.k);
    let fam = all_tuples(a.n, a.k)?;
    let mut worst: f64 = 0.0;
    for d in [&f.d0, &f.d1] {
        let u: f64 = evaluate_ustat(&h, d, &fam)?;
        for i in 0..a.n {
            let p: f64 = local_projection(&h, d, &fam, i)?;
            worst = worst.max((p - u).abs());
        }
    }
    let u0: f64 = evaluate_ustat(&h, &f.d0, &fam)?;
    let u1: f64 = evaluate_ustat(&h, &f.d1, &fam)?;
    writeln!(out, "ones in D0 {}, extra ones in D1 {}", f.b, f.extra)?;
    writeln!(out, "gap {} (closed form {}), required {}", u1 - u0, f.gap(), f.required_gap())?;
    writeln!(out, "largest projection deviation {worst}, xi {}", f.xi())?;
    if let Some(prefix) = &cli.out {
        let p0 = prefix.with_extension("d0");
        let p1 = prefix.with_extension("d1");
        fs::write(&p0, f.d0.to_lines())?;
        fs::write(&p1, f.d1.to_lines())?;
        writeln!(out, "wrote {} and {}", p0.display(), p1.display())?;
    }
    let ok = u1 - u0 >= f.required_gap() && worst <= f.xi() + 1e-12;
    Ok(if ok { EXIT_OK } else { EXIT_AUDIT })
}
