use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use riskcore::experiment::{cmd_ablate, cmd_importance, cmd_pca, cmd_run, cmd_synth};
use riskcore::protocol::{ExperimentConfig, ModelKind};
use riskcore::report::check_outputs;
use riskcore::{Error, Result};

#[derive(Parser)]
#[command(name = "riskcore", version, about = "Cancer risk prediction experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Repeated evaluation of every selected model.
    Run(Opts),
    /// Factor scores from network weights and regression coefficients.
    Importance(Opts),
    /// Retrain the network on the top fractions of factors.
    Ablate(Opts),
    /// Two-component projections of each network layer.
    Pca(Opts),
    /// Write the configured synthetic dataset.
    Synth(Opts),
    /// Verify the digests recorded in the output directory's manifests.
    Check(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of baseline,lr,knn,svm,dt,adaboost,dnn.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated factor fractions in (0, 1].
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
}

impl Opts {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.repeats {
            cfg.repeats = r;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(m) = &self.models {
            cfg.models = m.iter().map(|s| s.parse()).collect::<Result<Vec<ModelKind>>>()?;
        }
        if let Some(f) = &self.fractions {
            cfg.fractions = f.clone();
        }
        Ok(cfg)
    }
}

fn execute(verb: Verb) -> Result<()> {
    match verb {
        Verb::Run(o) => {
            let cfg = o.resolve()?;
            let out = cmd_run(&cfg)?;
            print!("{}", riskcore::report::table_csv(&out.models, &out.aggregates)?);
        }
        Verb::Importance(o) => {
            let report = cmd_importance(&o.resolve()?)?;
            for (name, s) in [("dnn", &report.dnn), ("lr", &report.lr)] {
                if let Some(s) = s {
                    println!("{name} top {}: {}", s.top.len(), s.top.join("; "));
                }
            }
        }
        Verb::Ablate(o) => {
            let result = cmd_ablate(&o.resolve()?)?;
            for f in &result.fractions {
                let s = &f.summary;
                println!(
                    "fraction {:.2} (k = {}): sensitivity {:?}, fpr {:?}, auc {:?}",
                    f.fraction, f.k, s.sensitivity.mean, s.fpr.mean, s.auc.mean
                );
            }
        }
        Verb::Pca(o) => {
            let summary = cmd_pca(&o.resolve()?)?;
            for l in &summary.layers {
                let flag = if l.degenerate { " (degenerate)" } else { "" };
                println!("{}: probe accuracy {:.4}{flag}", l.layer, l.probe_accuracy);
            }
        }
        Verb::Synth(o) => {
            let cfg = o.resolve()?;
            let truth = cmd_synth(&cfg)?;
            println!("wrote {} (informative dims {:?})", cfg.out.display(), truth.informative_dims);
        }
        Verb::Check(o) => {
            let cfg = o.resolve()?;
            let report = check_outputs(&cfg.out)?;
            println!("{} files verified across {} manifests", report.verified, report.manifests);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RISKCORE_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            let code: Error = e;
            ExitCode::from(code.exit_code() as u8)
        }
    }
}
