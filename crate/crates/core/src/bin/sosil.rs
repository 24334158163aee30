use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sosil::experiment::{
    fmt_f64, load_certificate, resolve, run_experiment, Algorithm, ExperimentConfig,
    ExperimentKind, OUTPUT_DIR_ENV,
};
use sosil::sos::GramConstraintSet;
use sosil::verify::check_certificate;

#[derive(Parser)]
#[command(
    name = "sosil",
    version,
    about = "Imitation learning of certified polynomial controllers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seed sweep and write loss traces, certificates and plot data.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Worker threads for concurrent runs (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print the compiled Gram-matrix equalities for an experiment.
    Dump {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Re-verify a certificate file on its recorded grid.
    Check {
        #[command(flatten)]
        config: ConfigArgs,
        certificate: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file of `key = value` lines; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// nonlinear_system (exp1), nonlinear_control (exp2) or custom.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Comma list or half-open ranges, e.g. `0..10`.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma list of dataset sizes.
    #[arg(long)]
    n_samples: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> sosil::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
        }
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                sosil::Error::InvalidConfig(format!("expected key=value, got '{kv}'"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(e) = self.experiment {
            cfg.experiment = e;
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
        }
        if let Some(s) = &self.seeds {
            cfg.set("seeds", s)?;
        }
        if let Some(n) = &self.n_samples {
            cfg.set("n_samples", n)?;
        }
        cfg.iterations = self.iterations.or(cfg.iterations);
        cfg.rho = self.rho.or(cfg.rho);
        cfg.alpha = self.alpha.or(cfg.alpha);
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> sosil::Result<ExitCode> {
    match cli.command {
        Command::Run { config, jobs } => {
            let cfg = config.load()?;
            let report = run_experiment(&cfg, jobs)?;
            let alg = report.config.algorithm;
            for r in &report.runs {
                println!(
                    "{:<28} loss {:>24} certified {:>24} certificate {:<4} {}",
                    r.name(alg),
                    fmt_f64(r.final_loss()),
                    fmt_f64(r.final_certified_loss()),
                    if r.certificate_passed() {
                        "pass"
                    } else {
                        "fail"
                    },
                    r.error.as_deref().unwrap_or("")
                );
            }
            println!(
                "{} runs, {} failed, artifacts in {}",
                report.runs.len(),
                report.failed(),
                report.output_dir.display()
            );
            Ok(if report.failed() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Dump { config } => {
            let (resolved, b) = resolve(&config.load()?)?;
            let gcs = GramConstraintSet::compile(&b.sys, resolved.d_f, resolved.d_p, resolved.eps)?;
            print!("{}", gcs.dump());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            config,
            certificate,
        } => {
            let (_, b) = resolve(&config.load()?)?;
            let stored = load_certificate(&certificate, &b.sys)?;
            let report = check_certificate(&b.sys, &stored.cert, &stored.grid)?;
            println!("points    {}", report.points);
            println!("min eig P {}", fmt_f64(report.min_eig_p));
            println!("max eig S {}", fmt_f64(report.max_eig_s));
            println!("global    {}", report.global);
            println!("recorded  {}", if stored.pass { "pass" } else { "fail" });
            println!("verdict   {}", if report.pass { "pass" } else { "fail" });
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
