use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use narrametric::benchmark::{run_benchmark, RunOptions};
use narrametric::config::Config;
use narrametric::corpus::load_corpus;
use narrametric::perturb::perturbation_report;
use narrametric::report::{emit_reports, emit_stats, friedman_md, nemenyi_md, run_stats};
use narrametric::scoring::{
    BigramCacheProvider, CachedProvider, HttpProvider, LogprobProvider, ScriptFile, ScriptedProvider,
    API_KEY_ENV, ENDPOINT_ENV,
};
use narrametric::stats::table::load_matrices;
use narrametric::{fit_decay, Error};

#[derive(Parser)]
#[command(name = "narrametric", version, about = "Narrativity metrics for model explanations")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a single text and print every metric as JSON.
    Score {
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        text: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
        #[command(flatten)]
        shuffle: ShuffleArgs,
    },
    /// Evaluate a JSON-Lines corpus and write reports.
    Benchmark {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_inflight: Option<usize>,
        #[command(flatten)]
        provider: ProviderArgs,
        #[command(flatten)]
        shuffle: ShuffleArgs,
    },
    /// Shuffled, reversed and leave-one-out perplexity deltas for one text.
    Perturb {
        #[arg(long)]
        file: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Friedman and Nemenyi tests over a results CSV (long or wide form).
    Stats {
        #[arg(long)]
        results: PathBuf,
        /// Write friedman/nemenyi CSV and Markdown here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        no_tie_correction: bool,
    },
    /// Fit the decay curve to a comma-separated perplexity trajectory.
    Fit {
        #[arg(long)]
        trajectory: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Http,
    Scripted,
    Mock,
}

#[derive(Args)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "http")]
    provider: ProviderKind,
    /// Sidecar base URL.
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
    #[arg(long, env = API_KEY_ENV, hide_env_values = true)]
    api_key: Option<String>,
    /// Script file for the scripted provider.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Bypass the score cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct ShuffleArgs {
    #[arg(long)]
    shuffles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use one shuffled order instead of the mean over several.
    #[arg(long)]
    single_shuffle: bool,
}

impl ShuffleArgs {
    fn apply(&self, config: &mut Config) {
        if let Some(k) = self.shuffles {
            config.shuffles = k;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.single_shuffle |= self.single_shuffle;
    }
}

fn build_provider(args: &ProviderArgs, config: &Config) -> narrametric::Result<Box<dyn LogprobProvider>> {
    Ok(match args.provider {
        ProviderKind::Mock => Box::new(BigramCacheProvider::default()),
        ProviderKind::Scripted => {
            let path = args
                .script
                .as_deref()
                .ok_or_else(|| Error::Input("--provider scripted needs --script".into()))?;
            let src = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
            let file: ScriptFile = serde_json::from_str(&src)?;
            Box::new(ScriptedProvider::from_script(file)?)
        }
        ProviderKind::Http => {
            let endpoint = args
                .endpoint
                .clone()
                .or_else(|| config.endpoint.clone())
                .ok_or_else(|| Error::Input(format!("no endpoint: pass --endpoint or set {ENDPOINT_ENV}")))?;
            let http = HttpProvider::new(&endpoint)?.with_api_key(args.api_key.clone());
            Box::new(
                CachedProvider::new(http)
                    .with_dir(&config.cache_dir)
                    .enabled(config.cache && !args.no_cache),
            )
        }
    })
}

fn read_text(text: Option<String>, file: Option<PathBuf>) -> narrametric::Result<String> {
    match (text, file) {
        (Some(t), _) => Ok(t),
        (None, Some(p)) => std::fs::read_to_string(&p).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        (None, None) => Err(Error::Input("pass --text or --file".into())),
    }
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> narrametric::Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Input(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> narrametric::Result<()> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn perturb_csv(path: &Path, r: &narrametric::perturb::PerturbationReport) -> narrametric::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["perturbation", "index", "ppl", "delta"])?;
    w.write_record(["original", "", &r.original_ppl.to_string(), "0"])?;
    w.write_record(["shuffled", "", &r.shuffled_ppl.to_string(), &r.nominal_deltas.shuffled.to_string()])?;
    w.write_record(["reversed", "", &r.reversed_ppl.to_string(), &r.nominal_deltas.reversed.to_string()])?;
    for (i, (p, d)) in r.loo_ppls.iter().zip(&r.nominal_deltas.loo).enumerate() {
        w.write_record(["leave_one_out", &i.to_string(), &p.to_string(), &d.to_string()])?;
    }
    w.flush().map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn run(cli: Cli) -> narrametric::Result<()> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Score {
            text,
            file,
            provider,
            shuffle,
        } => {
            shuffle.apply(&mut config);
            let text = read_text(text, file)?;
            let provider = build_provider(&provider, &config)?;
            let evaluation = config.evaluator()?.evaluate(&text, provider.as_ref())?;
            print_json(&evaluation)
        }
        Command::Benchmark {
            corpus,
            out,
            max_inflight,
            provider,
            shuffle,
        } => {
            shuffle.apply(&mut config);
            if let Some(n) = max_inflight {
                config.max_inflight = n;
            }
            let records = load_corpus(&corpus)?;
            let provider = build_provider(&provider, &config)?;
            let options = RunOptions {
                max_inflight: config.max_inflight,
                failure_threshold: config.failure_threshold,
            };
            let result = run_benchmark(&records, provider.as_ref(), &config.evaluator()?, &options)?;
            for path in emit_reports(&result, &config.stats, &out)? {
                log::info!("wrote {}", path.display());
            }
            if result.failed() > 0 {
                eprintln!("{} of {} records failed", result.failed(), records.len());
            }
            Ok(())
        }
        Command::Perturb {
            file,
            csv,
            seed,
            provider,
        } => {
            let text = read_text(None, Some(file))?;
            let provider = build_provider(&provider, &config)?;
            let evaluator = config.evaluator()?;
            let sentences = evaluator.segmenter.split(&text);
            let report = perturbation_report(&sentences, provider.as_ref(), seed.unwrap_or(config.seed))?;
            if let Some(path) = csv {
                perturb_csv(&path, &report)?;
            }
            print_json(&report)
        }
        Command::Stats {
            results,
            out,
            alpha,
            no_tie_correction,
        } => {
            if let Some(a) = alpha {
                config.stats.alpha = a;
            }
            if no_tie_correction {
                config.stats.tie_correction = false;
            }
            let matrices = load_matrices(&results)?;
            match out {
                Some(dir) => {
                    for path in emit_stats(&matrices, &config.stats, &dir)? {
                        log::info!("wrote {}", path.display());
                    }
                }
                None => {
                    let outcomes = run_stats(&matrices, &config.stats);
                    emit(&friedman_md(&outcomes, config.stats.alpha))?;
                    emit(&nemenyi_md(&outcomes, config.stats.alpha))?;
                }
            }
            Ok(())
        }
        Command::Fit { trajectory } => {
            let values = trajectory
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::Input(format!("trajectory: {e}")))?;
            match fit_decay(&values) {
                Ok(fit) => print_json(&fit),
                Err(u) => Err(Error::Input(format!("fit undefined: {u}"))),
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::PartialFailure { .. } => 3,
        e if e.is_provider() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
