//! `fieldsup` command line: evaluate tail formulas, estimate constants, run
//! validation scenarios and dump simulated paths.
//!
//! Every run is described by a [`RunConfig`] assembled from an optional JSON
//! config file and command-line flags (flags win). The JSON output embeds that
//! config next to the result so a run can be repeated exactly.

pub mod commands;
pub mod config;
pub mod render;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Failure, RunRecord, RunResult};
pub use config::{Command, ConfigFile, Format, RunConfig};

/// Environment variable giving the default number of worker threads.
pub const THREADS_ENV: &str = "FIELDSUP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fieldsup", version, about = "Suprema of Gaussian fields: tail formulas, constants, simulation")]
pub struct Cli {
    /// JSON run config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: $FIELDSUP_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Extra parameter, `key=value`; repeatable.
    #[arg(long = "param", short = 'p', global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Evaluate a tail formula.
    Tail(TailArgs),
    /// Look up or estimate a Pickands-type constant.
    Constant(ConstantArgs),
    /// Simulate a scenario and compare with its formula.
    Validate(ValidateArgs),
    /// Write simulated paths or Shepp fields.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Default)]
pub struct TailArgs {
    /// theorem (default), shepp-stationary, shepp-bb, shepp-fbm, maxloss, span, bb-span, fbm-span.
    #[arg(long)]
    pub formula: Option<String>,
    /// `α₁=…,α₂=…,β=…,b=…,a₁=…,a₂=…,a₃=…,S=…`.
    #[arg(long)]
    pub case_params: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Length of an interior maximizing segment.
    #[arg(long)]
    pub interior: Option<String>,
    #[arg(long)]
    pub registry: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ConstantArgs {
    /// pickands, piterbarg, piterbarg-two-sided, generalized, generalized-two-sided.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    /// slepian or fbm-shepp limit field.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    /// Add the result to this registry file.
    #[arg(long)]
    pub save_to: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated thresholds.
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub registry: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SimulateArgs {
    /// fbm, brownian-bridge, slepian, ornstein-uhlenbeck, damped-cosine.
    #[arg(long)]
    pub process: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub paths: Option<String>,
    /// `shepp` for the incremental field.
    #[arg(long)]
    pub field: Option<String>,
}

fn sub_params(sub: &Sub) -> Result<(Command, Vec<(String, String)>), String> {
    let mut kv: Vec<(&str, &Option<String>)> = Vec::new();
    let mut extra = Vec::new();
    let command = match sub {
        Sub::Tail(a) => {
            kv.extend([("formula", &a.formula), ("u", &a.u), ("interior", &a.interior), ("registry", &a.registry)]);
            if let Some(cp) = &a.case_params {
                extra = config::split_pairs(cp)?;
            }
            Command::Tail
        }
        Sub::Constant(a) => {
            kv.extend([
                ("kind", &a.kind),
                ("alpha", &a.alpha),
                ("b", &a.b),
                ("preset", &a.preset),
                ("reps", &a.reps),
                ("dt", &a.dt),
                ("save_to", &a.save_to),
            ]);
            Command::Constant
        }
        Sub::Validate(a) => {
            kv.extend([
                ("scenario", &a.scenario),
                ("u", &a.u),
                ("reps", &a.reps),
                ("dt", &a.dt),
                ("alpha", &a.alpha),
                ("model", &a.model),
                ("registry", &a.registry),
            ]);
            Command::Validate
        }
        Sub::Simulate(a) => {
            kv.extend([
                ("process", &a.process),
                ("alpha", &a.alpha),
                ("dt", &a.dt),
                ("paths", &a.paths),
                ("field", &a.field),
            ]);
            Command::Simulate
        }
    };
    let mut out: Vec<(String, String)> =
        kv.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect();
    out.extend(extra);
    Ok((command, out))
}

/// Merges the config file and the flags into one [`RunConfig`].
pub fn resolve(cli: &Cli) -> Result<RunConfig, Vec<String>> {
    let file = match &cli.config {
        None => ConfigFile::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| vec![format!("config {}: {e}", path.display())])?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| vec![format!("config {}: {e}", path.display())])?
        }
    };
    let mut parameters: BTreeMap<String, String> = file.parameters()?;
    let mut command = file.command;
    if let Some(sub) = &cli.command {
        let (c, kv) = sub_params(sub).map_err(|e| vec![e])?;
        if command.is_some_and(|fc| fc != c) {
            // A different command on the command line discards the file's parameters.
            parameters.clear();
        }
        command = Some(c);
        parameters.extend(kv);
    }
    let mut errors = Vec::new();
    for raw in &cli.params {
        match raw.split_once('=') {
            Some((k, v)) => {
                parameters.insert(config::normalize_key(k), v.trim().to_string());
            }
            None => errors.push(format!("--param expects key=value, got `{raw}`")),
        }
    }
    let Some(command) = command else {
        errors.push("no command given (tail, constant, validate or simulate)".into());
        return Err(errors);
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(RunConfig {
        command,
        parameters,
        output: cli.format.or(file.output).unwrap_or_default(),
        seed: cli.seed.or(file.seed).unwrap_or(0),
        output_path: cli.output.clone().or(file.output_path),
    })
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, String> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| format!("{THREADS_ENV}=`{v}` is not a count")),
        Err(_) => Ok(None),
    }
}

/// Runs one invocation and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(errors) => return report(&Failure::Invalid(errors)),
    };
    match thread_count(&cli) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("thread pool already configured: {e}");
            }
        }
        Ok(None) => {}
        Err(e) => return report(&Failure::Invalid(vec![e])),
    }
    let result = match execute(&cfg) {
        Ok(r) => r,
        Err(f) => return report(&f),
    };
    let record = RunRecord { config: cfg.clone(), result };
    let text = match render::render(&record, cfg.output) {
        Ok(t) => t,
        Err(e) => return report(&Failure::Runtime(e)),
    };
    let written = match &cfg.output_path {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    match written {
        Ok(()) => 0,
        Err(e) => report(&Failure::Runtime(e)),
    }
}

fn report(f: &Failure) -> i32 {
    match f {
        Failure::Invalid(errors) => {
            for e in errors {
                eprintln!("error: {e}");
            }
        }
        Failure::MissingConstant(name) => {
            eprintln!("error: missing constant {name}");
            eprintln!("hint: estimate it with `fieldsup constant ... --save-to FILE` and pass `--registry FILE`");
        }
        Failure::Runtime(msg) => eprintln!("error: {msg}"),
    }
    f.exit_code()
}
