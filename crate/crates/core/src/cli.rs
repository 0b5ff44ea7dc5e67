//! `smkl` command line.
//!
//! Every subcommand reads a TOML [`RunConfig`], writes its artifacts into the
//! output directory and prints the primary artifact on stdout. Failures are
//! reported as one JSON object on stderr:
//!
//! ```json
//! {"error": "ConfigInvalid", "module": "cli", "message": "...", "exit_code": 2}
//! ```

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asymptotics::{sandwich_oracle, sandwich_plugin, Provenance, SandwichReport};
use crate::config::RunConfig;
use crate::empirical::EmpiricalMeasures;
use crate::error::{Error, Result};
use crate::estimators::{fit, EstimateReport};
use crate::experiments::{run_mc, Scenario};
use crate::json;
use crate::kernels::Target;
use crate::oracle::{kl_projection, PopulationLaw};
use crate::simulator::{simulate, Regime, RegimeKind, RenewalPath, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "smkl", version, about = "Semi-Markov likelihood fitting, KL projections and sandwich covariances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path from `[kernels]` under `[scenario]`.
    Simulate(CommonArgs),
    /// Fit `[family]` to `[data]`, or to a path simulated from `[kernels]`.
    Fit(CommonArgs),
    /// KL projection of `[kernels]` onto `[family]`.
    Oracle(CommonArgs),
    /// Sandwich covariance, exact or plug-in per `[sandwich]`.
    Sandwich(CommonArgs),
    /// Monte Carlo replications of `[scenario]`.
    Experiment(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides `scenario.seed`.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Overrides `output.directory`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides `scenario.replications`.
    #[arg(long, value_name = "M")]
    pub reps: Option<usize>,
    /// Format of what is printed on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    module: &'a str,
    message: String,
    exit_code: i32,
}

#[derive(Serialize)]
struct SimulationSummary {
    regime: Regime,
    seed: u64,
    n_obs: usize,
    final_time: f64,
    /// Relative to the output directory.
    path: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}

fn report_error(e: &Error) {
    let report = ErrorReport { error: e.kind(), module: e.module(), message: e.to_string(), exit_code: e.exit_code() };
    let text = json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\": \"{}\"}}\n", e.kind()));
    let _ = std::io::stderr().write_all(text.as_bytes());
}

/// Runs one command and returns what it prints.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Simulate(a) => cmd_simulate(&Context::load(a)?),
        Command::Fit(a) => cmd_fit(&Context::load(a)?),
        Command::Oracle(a) => cmd_oracle(&Context::load(a)?),
        Command::Sandwich(a) => cmd_sandwich(&Context::load(a)?),
        Command::Experiment(a) => cmd_experiment(&Context::load(a)?),
    }
}

/// A loaded config with the command-line overrides applied.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub format: Format,
}

impl Context {
    pub fn load(args: &CommonArgs) -> Result<Self> {
        let mut config = RunConfig::load(&args.config).map_err(|e| match e {
            Error::Io(io) => Error::ConfigInvalid(format!("{}: {io}", args.config.display())),
            other => other,
        })?;
        if let Some(s) = config.scenario.as_mut() {
            if let Some(seed) = args.seed {
                s.seed = seed;
            }
            if let Some(m) = args.reps {
                s.replications = Some(m);
            }
        }
        let out = args
            .out
            .clone()
            .or_else(|| config.output.as_ref().and_then(|o| o.directory.clone()))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, out, format: args.format })
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let p = self.out.join(name);
        fs::write(&p, contents)?;
        Ok(p)
    }

    fn sim_config(&self) -> Result<SimConfig> {
        let s = self.config.scenario()?;
        s.regime.validate()?;
        Ok(SimConfig { regime: s.regime, seed: s.seed, initial: s.initial })
    }

    fn simulate(&self) -> Result<RenewalPath> {
        let k = self.config.kernels()?;
        simulate(&k.chain()?, &k.sojourn_kernel()?, &self.sim_config()?)
    }

    /// Observed path from `[data]`, otherwise a path simulated from `[kernels]`.
    fn observations(&self) -> Result<EmpiricalMeasures> {
        match &self.config.data {
            Some(d) => {
                let file = fs::File::open(&d.path)
                    .map_err(|e| Error::ConfigInvalid(format!("data.path {}: {e}", d.path.display())))?;
                let path = RenewalPath::read_csv(file, d.regime)?;
                let size = match (d.size, &self.config.kernels) {
                    (Some(s), _) => s,
                    (None, Some(k)) => k.q.len(),
                    (None, None) => path.states().iter().max().map_or(0, |m| m + 1),
                };
                EmpiricalMeasures::build(&path, size)
            }
            None => {
                let size = self.config.kernels()?.q.len();
                EmpiricalMeasures::build(&self.simulate()?, size)
            }
        }
    }

    fn target(&self) -> Result<Target> {
        self.config.family()?.build()
    }

    fn law(&self) -> Result<PopulationLaw> {
        let k = self.config.kernels()?;
        PopulationLaw::new(k.chain()?, k.sojourn_kernel()?)
    }

    fn regime_kind(&self) -> RegimeKind {
        self.config.scenario.as_ref().map_or(RegimeKind::Horizon, |s| s.regime.kind())
    }
}

fn vector_csv(name: &str, v: &nalgebra::DVector<f64>) -> String {
    let mut s = format!("coordinate,{name}\n");
    for (k, x) in v.iter().enumerate() {
        s.push_str(&format!("{k},{x:.16e}\n"));
    }
    s
}

fn matrix_csv(m: &nalgebra::DMatrix<f64>) -> String {
    let mut s = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn cmd_simulate(ctx: &Context) -> Result<String> {
    let cfg = ctx.sim_config()?;
    let path = ctx.simulate()?;
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    ctx.write("path.csv", &csv)?;
    let summary = SimulationSummary {
        regime: cfg.regime,
        seed: cfg.seed,
        n_obs: path.n_obs(),
        final_time: path.times().last().copied().unwrap_or(0.0),
        path: PathBuf::from("path.csv"),
    };
    let text = json::to_string(&summary)?;
    ctx.write("simulation.json", text.as_bytes())?;
    Ok(match ctx.format {
        Format::Json => text,
        Format::Csv => String::from_utf8(csv).expect("csv writer emits UTF-8"),
    })
}

pub fn cmd_fit(ctx: &Context) -> Result<String> {
    let emp = ctx.observations()?;
    let report: EstimateReport = fit(&emp, &ctx.target()?, None)?;
    let text = json::to_string(&report)?;
    ctx.write("estimate.json", text.as_bytes())?;
    Ok(match ctx.format {
        Format::Json => text,
        Format::Csv => vector_csv("theta_hat", &report.theta_hat),
    })
}

pub fn cmd_oracle(ctx: &Context) -> Result<String> {
    let kl = kl_projection(&ctx.law()?, &ctx.target()?)?;
    let text = json::to_string(&kl)?;
    ctx.write("kl.json", text.as_bytes())?;
    Ok(match ctx.format {
        Format::Json => text,
        Format::Csv => vector_csv("k_star", &kl.k_star),
    })
}

pub fn cmd_sandwich(ctx: &Context) -> Result<String> {
    let target = ctx.target()?;
    let provenance = ctx.config.sandwich.as_ref().map_or(Provenance::Oracle, |s| s.provenance);
    let report: SandwichReport = match provenance {
        Provenance::Oracle => {
            let law = ctx.law()?;
            let kl = kl_projection(&law, &target)?;
            sandwich_oracle(&law, &target, &kl.k_star, ctx.regime_kind())?
        }
        Provenance::Plugin => {
            let emp = ctx.observations()?;
            let est = fit(&emp, &target, None)?;
            sandwich_plugin(&emp, &target, &est.theta_hat)?
        }
    };
    let text = json::to_string(&report)?;
    ctx.write("sandwich.json", text.as_bytes())?;
    Ok(match ctx.format {
        Format::Json => text,
        Format::Csv => matrix_csv(&report.covariance),
    })
}

pub fn cmd_experiment(ctx: &Context) -> Result<String> {
    let k = ctx.config.kernels()?;
    let s = ctx.config.scenario()?;
    let replications = s
        .replications
        .ok_or_else(|| Error::ConfigInvalid("scenario.replications is required for experiment".into()))?;
    let scenario = Scenario {
        q: k.chain()?,
        r: k.sojourn_kernel()?,
        target: ctx.target()?,
        regime: s.regime,
        replications,
        base_seed: s.seed,
    };
    let mc = run_mc(&scenario)?;
    let text = json::to_string(&mc.report)?;
    ctx.write("mc_report.json", text.as_bytes())?;
    ctx.write("sandwich.json", json::to_string(&mc.sandwich)?.as_bytes())?;
    let mut csv = Vec::new();
    mc.write_csv(&mut csv)?;
    ctx.write("replications.csv", &csv)?;
    Ok(match ctx.format {
        Format::Json => text,
        Format::Csv => String::from_utf8(csv).expect("csv writer emits UTF-8"),
    })
}

/// Parses a config file without running anything.
pub fn validate_config(path: &Path) -> Result<RunConfig> {
    let cfg = RunConfig::load(path)?;
    if let Some(f) = &cfg.family {
        f.build()?;
    }
    if let Some(k) = &cfg.kernels {
        k.chain()?;
        k.sojourn_kernel()?;
    }
    if let Some(s) = &cfg.scenario {
        s.regime.validate()?;
    }
    Ok(cfg)
}
