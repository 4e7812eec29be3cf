use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hydrofeat::aggregate;
use hydrofeat_cli::output::{self, read_features};
use hydrofeat_cli::pipeline::{analyze, extract_features, SliceFailure};
use hydrofeat_cli::{ingest, CliError, DatasetManifest, Result, RunConfig};

/// Multi-resolution feature extraction and forest-proximity clustering of
/// daily hydroclimatic series.
#[derive(Parser)]
#[command(name = "hydrofeat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute features.csv from a manifest.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Cluster an existing features.csv.
    Cluster {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Feature extraction followed by clustering.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a manifest and its data files without computing anything.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    /// Number of clusters for clusters.csv.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            RunConfig::parse(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = load_config(self.config.as_deref())?;
        let overrides = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("n_trees", self.n_trees.map(|v| v.to_string())),
            ("mtry", self.mtry.map(|v| v.to_string())),
            ("k_fixed", self.k.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                c.set(key, &v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }
}

fn report(failures: &[SliceFailure]) -> ExitCode {
    for f in failures {
        eprintln!("slice {} {} failed at {}: {}", f.series_type, f.resolution, f.stage, f.message);
    }
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn features_stage(manifest: &Path, config: &RunConfig) -> Result<hydrofeat_cli::FeatureStage> {
    let manifest = DatasetManifest::read(manifest)?;
    let series = ingest(&manifest)?;
    extract_features(&series, config)
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Features { manifest, common } => {
            let config = common.config()?;
            let out = common.out_dir()?;
            let stage = features_stage(&manifest, &config)?;
            output::write_features(out, &stage.matrix)?;
            output::write_metadata(out, &config, &stage.failures, &[])?;
            Ok(report(&stage.failures))
        }
        Command::Cluster { features, common } => {
            let config = common.config()?;
            let out = common.out_dir()?;
            let matrix = read_features(&features)?;
            let analysis = analyze(&matrix, &config)?;
            output::write_analysis(out, &analysis)?;
            output::write_metadata(out, &config, &analysis.failures, &output::analysis_notes(&analysis))?;
            Ok(report(&analysis.failures))
        }
        Command::Run { manifest, common } => {
            let config = common.config()?;
            let out = common.out_dir()?;
            let stage = features_stage(&manifest, &config)?;
            let analysis = analyze(&stage.matrix, &config)?;
            output::write_features(out, &stage.matrix)?;
            output::write_analysis(out, &analysis)?;
            let mut failures = stage.failures;
            failures.extend(analysis.failures.iter().cloned());
            output::write_metadata(out, &config, &failures, &output::analysis_notes(&analysis))?;
            Ok(report(&failures))
        }
        Command::Validate { manifest, config } => {
            let config = load_config(config.as_deref())?;
            let manifest = DatasetManifest::read(&manifest)?;
            let series = ingest(&manifest)?;
            let mut problems = 0;
            for ((loc, t), s) in &series {
                for spec in config.resolutions_for(t) {
                    let needed = (2 * spec.frequency).max(13);
                    match aggregate(s, &spec) {
                        Ok(a) if a.len() >= needed => {}
                        Ok(a) => {
                            problems += 1;
                            eprintln!("{loc} {t} {}: {} values, features need {needed}", spec.name, a.len());
                        }
                        Err(e) => {
                            problems += 1;
                            eprintln!("{loc} {t} {}: {e}", spec.name);
                        }
                    }
                }
            }
            println!("{} series in manifest, {problems} problem(s)", series.len());
            Ok(if problems == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
