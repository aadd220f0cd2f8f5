use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use algograph::cost::trace_costs;
use algograph::harness::{
    self, evaluate_trial, execute_sweep, predict, summarize, BackendSpec, SweepConfig, SweepOptions,
};
use algograph::seed::trial_seed;
use algograph::tasks::{generate_instance, Instance};
use algograph::Error;

#[derive(Parser)]
#[command(name = "algograph", version, about = "Run, sweep and predict LLM-based parallel decomposition algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the answer with its cost report.
    Run {
        config: PathBuf,
        /// Solve a dumped instance file instead of generating one.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full grid and write the sweep CSV plus a summary CSV.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write closed-form cost and latency predictions for the grid.
    Predict {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a config file and report the grid size.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Output path; defaults to the config's `output`, else standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the backend: mock:<profile> or http:<url>.
    #[arg(long)]
    backend: Option<String>,
    /// Write every generated instance into this directory.
    #[arg(long)]
    dump_instances: Option<PathBuf>,
    /// Maximum number of trials run concurrently.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self, path: &Path) -> Result<SweepConfig, Error> {
        let mut config = SweepConfig::load(path)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(spec) = &self.backend {
            let mut spec: BackendSpec = spec.parse()?;
            // keep the configured model when only the URL changes
            if let (BackendSpec::Http { model, .. }, BackendSpec::Http { model: old, .. }) = (&mut spec, &config.backend) {
                model.clone_from(old);
            }
            config.backend = spec;
        }
        if let Some(w) = self.workers {
            config.workers = Some(w);
        }
        config.validate()?;
        Ok(config)
    }

    fn out_path(&self, config: &SweepConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| config.output.clone())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_backend() => 3,
        Error::TooManyFailures { .. } => 4,
        Error::InvalidConfiguration(_) | Error::Config { .. } | Error::MalformedInstance(_) => 2,
        _ => 1,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Validate { config, common } => {
            let c = common.load(&config)?;
            let points = c.grid().len();
            println!(
                "ok: {} {} with {points} grid points x {} trials = {} runs",
                c.task,
                c.mode.name(),
                c.trials,
                points * c.trials
            );
        }
        Command::Predict { config, common } => {
            let c = common.load(&config)?;
            let p = predict(&c)?;
            match common.out_path(&c) {
                Some(path) => p.write_csv_file(&path)?,
                None => p.write_csv(std::io::stdout().lock())?,
            }
        }
        Command::Sweep { config, common } => {
            let c = common.load(&config)?;
            let backend = c.make_backend()?;
            let options = SweepOptions {
                dump_instances: common.dump_instances.clone(),
            };
            let result = execute_sweep(&c, backend.as_ref(), &options)?;
            let summary = summarize(&result);
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            match common.out_path(&c) {
                Some(path) => {
                    result.write_csv_file(&path)?;
                    summary.write_csv_file(&harness::summary_path(&path))?;
                }
                None => result.write_csv(std::io::stdout().lock())?,
            }
            if result.failures() > 0 {
                eprintln!("{} of {} trials failed", result.failures(), result.rows.len());
            }
            result.check_failures()?;
        }
        Command::Run { config, replay, common } => {
            let c = common.load(&config)?;
            let (n, m) = c.grid()[0];
            let instance = match &replay {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    Instance::parse(&text)?
                }
                None => generate_instance(c.task, n, trial_seed(c.seed, n, m, 0), &c.instance_options())?,
            };
            if instance.task() != c.task {
                return Err(Error::InvalidConfiguration(format!(
                    "instance is a {} instance but the config runs {}",
                    instance.task(),
                    c.task
                )));
            }
            if let Some(dir) = &common.dump_instances {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                let path = dir.join(harness::sweep::instance_file_name(c.task, instance.n(), m, 0));
                std::fs::write(&path, instance.to_file_string()).map_err(|e| Error::Io { path, source: e })?;
            }
            let backend = c.make_backend()?;
            let outcome = evaluate_trial(&instance, m, backend.as_ref(), c.merge_mode, instance.seed())?;
            let report = trace_costs(&outcome.trace, &c.cost.model());
            let mut text = format!(
                "task: {}\nn: {}\nm: {}\nk: {}\nanswer: {}\n",
                c.task,
                instance.n(),
                outcome.plan.m,
                outcome.plan.k,
                outcome.answer
            );
            for (name, value) in c.task.metric_columns().iter().zip(&outcome.metrics) {
                text.push_str(&format!("{name}: {value}\n"));
            }
            text.push_str(&format!(
                "prefill_tokens_total: {}\ndecode_tokens_total: {}\ncall_count: {}\n\
                 latency_sequential: {}\nlatency_p{}: {}\nlatency_inf: {}\n",
                report.prefill_tokens_total,
                report.decode_tokens_total,
                report.call_count,
                report.latency_sequential,
                c.cost.p,
                report.latency_parallel_p,
                report.latency_parallel_inf
            ));
            match common.out_path(&c) {
                Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
