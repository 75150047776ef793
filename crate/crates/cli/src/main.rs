use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use tempfile::NamedTempFile;

use spamcorr::ann::TrainConfig;
use spamcorr::baselines::BaselineConfig;
use spamcorr::correlate::{
    correlation_matrix, group_features, reduce_matrix, CorrelationMatrix, Grouping,
};
use spamcorr::eval::{self, CompareConfig};
use spamcorr::pipeline::{self, FitOptions, ModelFile, ModelKind, SplitSpec};
use spamcorr::{extract_matrix, load_corpus, synth, Corpus, Feature, FeatureMatrix};

#[derive(Parser, Debug)]
#[command(
    name = "spamcorr",
    version,
    about = "Tweet spam classification pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled synthetic corpus
    Synth {
        #[arg(long)]
        spam: usize,
        #[arg(long)]
        ham: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the per-tweet feature matrix as CSV
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the feature correlation matrix and a threshold grouping
    Correlate {
        /// Corpus (.jsonl) or feature CSV
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        groups_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
    },
    /// Fit one classifier and save it as a model file
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "ann")]
        kind: ModelKind,
        #[command(flatten)]
        grouping: GroupingArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Compare all models, or score a saved model on its held-out rows
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Report JSON
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grouping: GroupingArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Label every tweet of a corpus with a saved model
    Predict {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Predictions CSV; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GroupingArgs {
    /// Grouping JSON; the built-in 11-group default when neither this nor
    /// --threshold is given
    #[arg(long, conflicts_with = "threshold")]
    groups: Option<PathBuf>,
    /// Derive the grouping from the input by merging |r| >= threshold
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct HyperArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

impl HyperArgs {
    fn configs(&self, seed: u64) -> (TrainConfig, BaselineConfig) {
        let mut ann = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        ann.epochs = self.epochs.unwrap_or(ann.epochs);
        ann.learning_rate = self.lr.unwrap_or(ann.learning_rate);
        ann.hidden_dim = self.hidden.unwrap_or(ann.hidden_dim);
        let mut baselines = BaselineConfig::default();
        baselines.k = self.k.unwrap_or(baselines.k);
        (ann, baselines)
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] spamcorr::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        source: spamcorr::Error,
    },
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn data_err<E: Into<spamcorr::Error>>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Data {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Writes through a temp file in the destination directory, renamed into
/// place only once `fill` succeeds.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut File) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(path))?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |f| f.write_all(text.as_bytes()).map_err(io_err(path)))
}

fn is_corpus(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl" | "json")
    )
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path).map_err(|e| CliError::Core(e.into()))
}

/// Feature rows from a corpus or a feature CSV, plus the account count when
/// known.
fn load_matrix(path: &Path) -> Result<(FeatureMatrix, Option<usize>)> {
    if is_corpus(path) {
        let corpus = read_corpus(path)?;
        let matrix = extract_matrix(&corpus).map_err(data_err(path))?;
        Ok((matrix, Some(corpus.len())))
    } else {
        let file = File::open(path).map_err(io_err(path))?;
        let matrix = FeatureMatrix::read_csv(BufReader::new(file)).map_err(data_err(path))?;
        Ok((matrix, None))
    }
}

fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ModelFile::from_json(&text).map_err(data_err(path))
}

fn resolve_grouping(args: &GroupingArgs, matrix: &FeatureMatrix) -> Result<Grouping> {
    if let Some(path) = &args.groups {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        return Grouping::from_json(&text).map_err(data_err(path));
    }
    match args.threshold {
        Some(t) => Ok(group_features(
            &correlation_matrix(matrix).map_err(spamcorr::Error::from)?,
            t,
        )),
        None => Ok(Grouping::default_config()),
    }
}

fn feature_names() -> Vec<&'static str> {
    Feature::ALL.iter().map(|f| f.name()).collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            spam,
            ham,
            seed,
            out,
        } => {
            if spam + ham == 0 {
                return Err(CliError::Core(
                    spamcorr::corpus::CorpusError::EmptyCorpus.into(),
                ));
            }
            let corpus = synth::generate_corpus(spam, ham, seed);
            write_atomic(&out, |f| {
                corpus
                    .write_jsonl(io::BufWriter::new(f))
                    .map_err(io_err(&out))
            })?;
            println!("{} accounts -> {}", corpus.len(), out.display());
        }
        Command::Extract { input, out } => {
            let corpus = read_corpus(&input)?;
            let matrix = extract_matrix(&corpus).map_err(data_err(&input))?;
            write_atomic(&out, |f| {
                matrix
                    .write_csv(io::BufWriter::new(f))
                    .map_err(|e| CliError::Core(e.into()))
            })?;
            println!("{} rows -> {}", matrix.len(), out.display());
        }
        Command::Correlate {
            input,
            out,
            groups_out,
            threshold,
        } => {
            let (matrix, _) = load_matrix(&input)?;
            let cm: CorrelationMatrix = correlation_matrix(&matrix).map_err(data_err(&input))?;
            write_text(&out, &cm.to_csv(&feature_names()))?;
            let flagged: Vec<&str> = Feature::ALL
                .iter()
                .filter(|f| cm.is_flagged(f.index()))
                .map(|f| f.name())
                .collect();
            if !flagged.is_empty() {
                eprintln!("zero-variance features: {}", flagged.join(", "));
            }
            let grouping = group_features(&cm, threshold);
            println!("{} groups at threshold {threshold}", grouping.len());
            if let Some(path) = groups_out {
                write_text(&path, &grouping.to_json())?;
            }
        }
        Command::Train {
            input,
            out,
            kind,
            grouping,
            split,
            hyper,
        } => {
            let (matrix, _) = load_matrix(&input)?;
            let grouping = resolve_grouping(&grouping, &matrix)?;
            let (ann, baselines) = hyper.configs(split.seed);
            let file = pipeline::fit_model_file(
                &matrix,
                &grouping,
                &FitOptions {
                    kind,
                    split: SplitSpec {
                        seed: split.seed,
                        train_frac: split.train_frac,
                    },
                    ann: &ann,
                    baselines: &baselines,
                },
            )?;
            write_text(&out, &file.to_json())?;
            println!(
                "{} on {} inputs -> {}",
                kind.display_name(),
                grouping.len(),
                out.display()
            );
        }
        Command::Evaluate {
            input,
            model,
            out,
            grouping,
            split,
            hyper,
        } => {
            let model = model.map(|p| load_model(&p)).transpose()?;
            let (matrix, accounts) = load_matrix(&input)?;
            let report = match model {
                Some(file) => eval::evaluate_model_file(&file, &matrix, accounts)?,
                None => {
                    let grouping = resolve_grouping(&grouping, &matrix)?;
                    let (ann, baselines) = hyper.configs(split.seed);
                    let config = CompareConfig {
                        train_frac: split.train_frac,
                        ann,
                        baselines,
                    };
                    eval::compare_matrix(&matrix, accounts, &grouping, &config, split.seed)?
                }
            };
            print!("{}", report.render());
            if let Some(path) = out {
                write_text(&path, &report.to_json())?;
            }
        }
        Command::Predict { input, model, out } => {
            let file = load_model(&model)?;
            let grouping = file.grouping().map_err(data_err(&model))?;
            let corpus = read_corpus(&input)?;
            let matrix = extract_matrix(&corpus).map_err(data_err(&input))?;
            let inputs =
                reduce_matrix(&matrix, &grouping, &file.scaler).map_err(data_err(&model))?;
            let outputs = file.predict_batch(&inputs)?;
            let mut lines = String::from("user_id,tweet,label,probability\n");
            for (origin, p) in matrix.origins().iter().zip(&outputs) {
                let user = &corpus.accounts()[origin.account].user_id;
                let prob = p.probability.map_or(String::new(), |x| format!("{x:.6}"));
                lines.push_str(&format!(
                    "{},{},{},{prob}\n",
                    csv_field(user),
                    origin.tweet,
                    p.label
                ));
            }
            match out {
                Some(path) => write_text(&path, &lines)?,
                None => io::stdout()
                    .write_all(lines.as_bytes())
                    .map_err(io_err(Path::new("<stdout>")))?,
            }
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
