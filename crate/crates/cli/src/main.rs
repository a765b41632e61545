//! `interview`: command-line front end for the interview analysis toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use interview_core::aggregation::DistanceMetric;
use interview_core::config::{Settings, Tunables};
use interview_core::corpus::{load_manifest, validate_dataset, Severity};
use interview_core::features::{FeatureMatrix, Modality};
use interview_core::pipeline::{self, InStage, Stage, StageError};
use interview_core::regression::ModelKind;
use interview_core::synthesis::{synth_corpus, SynthConfig};
use interview_core::{Error, TraitId};

#[derive(Parser)]
#[command(
    name = "interview",
    version,
    about = "Multimodal interview feature extraction, rating aggregation and trait regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted trait models
    Synth(SynthArgs),
    /// Check a corpus and print every finding
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Write the feature matrix, its modality sidecar and the imputation summary
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: TunableArgs,
    },
    /// Aggregate crowd ratings into consensus scores and agreement reports
    Aggregate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: TunableArgs,
    },
    /// Train one model per trait and kind on every interview
    Train {
        #[command(flatten)]
        inputs: MatrixInputs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: TunableArgs,
    },
    /// Run the random-split trials and the modality ablation
    Evaluate {
        #[command(flatten)]
        inputs: MatrixInputs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: TunableArgs,
    },
    /// Modality shares and recommendations from a trials file
    Report {
        /// Trials file written by `evaluate`
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: TunableArgs,
    },
    /// Every stage from manifest to report bundle
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: TunableArgs,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the corpus
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    interviews: usize,
    #[arg(long, default_value_t = 9)]
    raters: usize,
    /// Latent-score noise on the standardized scale
    #[arg(long, default_value_t = 0.1)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MatrixInputs {
    /// Feature CSV written by `extract`
    #[arg(long)]
    features: PathBuf,
    /// Consensus CSV written by `aggregate`
    #[arg(long)]
    consensus: PathBuf,
}

#[derive(Args, Default)]
struct TunableArgs {
    /// TOML file with a [tunables] table; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, help = "maximum EM sweeps per trait")]
    em_max_iterations: Option<usize>,
    #[arg(
        long,
        help = "EM convergence threshold on the largest consensus change"
    )]
    em_tol: Option<f64>,
    #[arg(long, help = "lower bound on a rater's residual variance")]
    variance_floor: Option<f64>,
    #[arg(long, help = "Krippendorff distance metric (interval or ordinal)")]
    agreement_metric: Option<DistanceMetric>,
    #[arg(long, help = "shortest unvoiced run counted as a pause, in seconds")]
    pause_threshold: Option<f64>,
    #[arg(long, help = "weight answers by duration when averaging prosody")]
    duration_weighted: Option<bool>,
    #[arg(long, help = "category lexicon file")]
    lexicon: Option<PathBuf>,
    #[arg(long, help = "filler word list")]
    fillers: Option<PathBuf>,
    #[arg(long, help = "stop word list applied before topic modelling")]
    stopwords: Option<PathBuf>,
    #[arg(long, help = "landmark pair configuration (JSON)")]
    landmarks: Option<PathBuf>,
    #[arg(
        long,
        help = "smallest head swing counted toward a nod or shake, in radians"
    )]
    nod_amplitude: Option<f64>,
    #[arg(long, help = "nod and shake window, in seconds")]
    gesture_window: Option<f64>,
    #[arg(long, help = "number of topics")]
    lda_topics: Option<usize>,
    #[arg(long, help = "document-topic prior (default 50 / topics)")]
    lda_alpha: Option<f64>,
    #[arg(long, help = "topic-word prior")]
    lda_beta: Option<f64>,
    #[arg(long, help = "Gibbs sweeps when fitting topics")]
    lda_iterations: Option<usize>,
    #[arg(long, help = "Gibbs sweeps when inferring topic proportions")]
    lda_infer_iterations: Option<usize>,
    #[arg(long, help = "SVR box constraint C")]
    svr_c: Option<f64>,
    #[arg(long, help = "SVR insensitive-zone half-width")]
    svr_epsilon: Option<f64>,
    #[arg(long, help = "SVR relative duality-gap tolerance")]
    svr_tol: Option<f64>,
    #[arg(long, help = "fixed Lasso penalty (cross-validated when unset)")]
    lasso_alpha: Option<f64>,
    #[arg(long, help = "cross-validation folds for the Lasso penalty")]
    cv_folds: Option<usize>,
    #[arg(
        long,
        allow_hyphen_values = true,
        help = "smallest penalty exponent k in the 2^k grid"
    )]
    alpha_grid_min: Option<i32>,
    #[arg(
        long,
        allow_hyphen_values = true,
        help = "largest penalty exponent k in the 2^k grid"
    )]
    alpha_grid_max: Option<i32>,
    #[arg(long, help = "random train/test splits")]
    trials: Option<usize>,
    #[arg(long, help = "share of interviews used for training in each split")]
    train_fraction: Option<f64>,
    #[arg(
        long,
        help = "features kept per model for modality shares and recommendations"
    )]
    top_k: Option<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        help = "traits to model, comma separated (default: all sixteen)"
    )]
    traits: Option<Vec<TraitId>>,
    #[arg(
        long,
        value_delimiter = ',',
        help = "model kinds to train, comma separated (svr, lasso)"
    )]
    models: Option<Vec<ModelKind>>,
    #[arg(long, help = "splits per modality subset in the ablation (0 skips it)")]
    ablation_trials: Option<usize>,
    #[arg(long, help = "master seed for every random stream")]
    seed: Option<u64>,
    #[arg(long, help = "worker threads (default: all cores)")]
    jobs: Option<usize>,
}

impl TunableArgs {
    fn flags(&self) -> Tunables {
        Tunables {
            em_max_iterations: self.em_max_iterations,
            em_tol: self.em_tol,
            variance_floor: self.variance_floor,
            agreement_metric: self.agreement_metric,
            pause_threshold: self.pause_threshold,
            duration_weighted: self.duration_weighted,
            lexicon: self.lexicon.clone(),
            fillers: self.fillers.clone(),
            stopwords: self.stopwords.clone(),
            landmarks: self.landmarks.clone(),
            nod_amplitude: self.nod_amplitude,
            gesture_window: self.gesture_window,
            lda_topics: self.lda_topics,
            lda_alpha: self.lda_alpha,
            lda_beta: self.lda_beta,
            lda_iterations: self.lda_iterations,
            lda_infer_iterations: self.lda_infer_iterations,
            svr_c: self.svr_c,
            svr_epsilon: self.svr_epsilon,
            svr_tol: self.svr_tol,
            lasso_alpha: self.lasso_alpha,
            cv_folds: self.cv_folds,
            alpha_grid_min: self.alpha_grid_min,
            alpha_grid_max: self.alpha_grid_max,
            trials: self.trials,
            train_fraction: self.train_fraction,
            top_k: self.top_k,
            traits: self.traits.clone(),
            models: self.models.clone(),
            ablation_trials: self.ablation_trials,
            seed: self.seed,
            jobs: self.jobs,
        }
    }

    /// Flags over the config file over defaults; also sizes the worker pool.
    fn settings(&self) -> Result<Settings, Error> {
        let file = match &self.config {
            Some(p) => Tunables::load(p)?,
            None => Tunables::default(),
        };
        let settings = Settings::resolve(&self.flags().overlay(file))?;
        if let Some(n) = settings.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
        }
        Ok(settings)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Range(_)
        | Error::EmptyTranscript
        | Error::Validation(_) => 2,
        Error::Dimension(_)
        | Error::Aggregation(_)
        | Error::Degenerate(_)
        | Error::NonFinite(_)
        | Error::NotOrthonormal(_) => 3,
    }
}

enum Failure {
    Plain(Error),
    Staged(StageError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Plain(e)
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Staged(e)
    }
}

fn load_matrix_inputs(
    inputs: &MatrixInputs,
) -> Result<(FeatureMatrix, interview_core::aggregation::GroundTruth), Error> {
    Ok((
        FeatureMatrix::read_csv(&inputs.features)?,
        pipeline::read_consensus_csv(&inputs.consensus)?,
    ))
}

fn print_census(x: &FeatureMatrix) {
    let counts: Vec<String> = Modality::ALL
        .iter()
        .map(|m| format!("{m} {}", x.modalities().iter().filter(|v| *v == m).count()))
        .collect();
    eprintln!(
        "{} interviews, {} features ({})",
        x.n_rows(),
        x.n_cols(),
        counts.join(", ")
    );
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Synth(a) => {
            let cfg = SynthConfig {
                n_interviews: a.interviews,
                noise_sd: a.noise_sd,
                seed: a.seed,
                ..SynthConfig::default()
            }
            .with_raters(a.raters);
            let manifest = synth_corpus(&cfg, &a.out)?;
            eprintln!("wrote {}", manifest.display());
        }
        Command::Validate { manifest } => {
            let ds = load_manifest(&manifest)?;
            let report = validate_dataset(&ds);
            for f in &report.findings {
                eprintln!("{f}");
            }
            let warnings = report
                .findings
                .iter()
                .filter(|f| f.severity == Severity::Warn)
                .count();
            eprintln!(
                "{} interviews: {} errors, {warnings} warnings",
                ds.interview_count(),
                report.error_count()
            );
            if report.has_errors() {
                return Err(Error::Validation(report.error_count()).into());
            }
        }
        Command::Extract {
            manifest,
            out,
            tunables,
        } => {
            let settings = tunables.settings()?;
            let ds = pipeline::load(&manifest)?;
            pipeline::validate(&ds)?;
            let ex = pipeline::extract(&ds, &settings)?;
            pipeline::write_extraction(&out, &ex).in_stage(Stage::Extract)?;
            print_census(&ex.matrix);
            let imputed: Vec<_> = ex.imputed_columns().collect();
            if imputed.is_empty() {
                eprintln!("no values imputed");
            } else {
                eprintln!("{} columns imputed:", imputed.len());
                for r in imputed {
                    eprintln!(
                        "  {} ({}): {} missing, filled with {}",
                        r.column, r.modality, r.missing, r.fill_value
                    );
                }
            }
        }
        Command::Aggregate {
            manifest,
            out,
            tunables,
        } => {
            let settings = tunables.settings()?;
            let mut ds = pipeline::load(&manifest)?;
            let agg = pipeline::aggregate(&mut ds, &settings)?;
            pipeline::write_aggregation(&out, &agg).in_stage(Stage::Aggregate)?;
            for (t, c) in &agg.truth.traits {
                if !c.converged {
                    eprintln!(
                        "{t}: EM stopped after {} sweeps without converging",
                        c.iterations_run
                    );
                }
            }
            for (t, why) in &agg.truth.failures {
                eprintln!("{t}: not aggregated ({why})");
            }
        }
        Command::Train {
            inputs,
            out,
            tunables,
        } => {
            let settings = tunables.settings()?;
            let (x, truth) = load_matrix_inputs(&inputs).in_stage(Stage::Load)?;
            let models = pipeline::train_models(&x, &truth, &settings)?;
            pipeline::write_models(&out, &models).in_stage(Stage::Train)?;
            eprintln!("wrote {} models", models.len());
        }
        Command::Evaluate {
            inputs,
            out,
            tunables,
        } => {
            let settings = tunables.settings()?;
            let (x, truth) = load_matrix_inputs(&inputs).in_stage(Stage::Load)?;
            let ev = pipeline::evaluate(&x, &truth, &settings)?;
            pipeline::write_evaluation(&out, &ev).in_stage(Stage::Evaluate)?;
            print_scores(
                ev.report
                    .summaries
                    .iter()
                    .map(|s| (s.trait_id, s.kind, s.mean_r)),
            );
        }
        Command::Report {
            input,
            out,
            tunables,
        } => {
            let settings = tunables.settings()?;
            let report = pipeline::read_trials_json(&input).in_stage(Stage::Load)?;
            pipeline::write_report(&out, &report, settings.protocol.top_k)
                .in_stage(Stage::Report)?;
        }
        Command::Pipeline {
            manifest,
            out,
            tunables,
        } => {
            let settings = tunables.settings()?;
            let summary = pipeline::run_pipeline(&manifest, &out, &settings)?;
            eprintln!(
                "{} interviews, {} features",
                summary.interviews, summary.features
            );
            print_scores(summary.mean_r.iter().map(|(&(t, k), r)| (t, k, *r)));
        }
    }
    Ok(())
}

fn print_scores(rows: impl Iterator<Item = (TraitId, ModelKind, Option<f64>)>) {
    for (t, k, r) in rows {
        match r {
            Some(r) => eprintln!("{t:<16} {k:<6} mean r {r:.3}"),
            None => eprintln!("{t:<16} {k:<6} mean r n/a"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Plain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Staged(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e.source))
        }
    }
}
