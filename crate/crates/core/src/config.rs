//! Run settings: every tunable can come from a command-line flag, from the
//! `[tunables]` table of a TOML file, or from its default, in that order of
//! precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregationConfig, DistanceMetric};
use crate::error::{Error, Result};
use crate::evaluation::TrialProtocol;
use crate::facial::LandmarkConfig;
use crate::features::ExtractionConfig;
use crate::lexical::{CategoryLexicon, WordSet};
use crate::regression::{ModelKind, TrainConfig};
use crate::seed::sub_seed;
use crate::traits::TraitId;

macro_rules! tunables {
    ($($name:ident: $ty:ty => $help:literal),* $(,)?) => {
        /// Unresolved tunables; `None` defers to the next source.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Tunables {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$ty>,
            )*
        }

        /// Name and description of every tunable, in declaration order.
        pub const TUNABLES: &[(&str, &str)] = &[$((stringify!($name), $help)),*];

        impl Tunables {
            /// Fields set here win; the rest come from `lower`.
            pub fn overlay(self, lower: Tunables) -> Tunables {
                Tunables { $($name: self.$name.or(lower.$name),)* }
            }
        }
    };
}

tunables! {
    em_max_iterations: usize => "maximum EM sweeps per trait",
    em_tol: f64 => "EM convergence threshold on the largest consensus change",
    variance_floor: f64 => "lower bound on a rater's residual variance",
    agreement_metric: DistanceMetric => "Krippendorff distance metric (interval or ordinal)",
    pause_threshold: f64 => "shortest unvoiced run counted as a pause, in seconds",
    duration_weighted: bool => "weight answers by duration when averaging prosody",
    lexicon: PathBuf => "category lexicon file",
    fillers: PathBuf => "filler word list",
    stopwords: PathBuf => "stop word list applied before topic modelling",
    landmarks: PathBuf => "landmark pair configuration (JSON)",
    nod_amplitude: f64 => "smallest head swing counted toward a nod or shake, in radians",
    gesture_window: f64 => "nod and shake window, in seconds",
    lda_topics: usize => "number of topics",
    lda_alpha: f64 => "document-topic prior (default 50 / topics)",
    lda_beta: f64 => "topic-word prior",
    lda_iterations: usize => "Gibbs sweeps when fitting topics",
    lda_infer_iterations: usize => "Gibbs sweeps when inferring topic proportions",
    svr_c: f64 => "SVR box constraint C",
    svr_epsilon: f64 => "SVR insensitive-zone half-width",
    svr_tol: f64 => "SVR relative duality-gap tolerance",
    lasso_alpha: f64 => "fixed Lasso penalty (cross-validated when unset)",
    cv_folds: usize => "cross-validation folds for the Lasso penalty",
    alpha_grid_min: i32 => "smallest penalty exponent k in the 2^k grid",
    alpha_grid_max: i32 => "largest penalty exponent k in the 2^k grid",
    trials: usize => "random train/test splits",
    train_fraction: f64 => "share of interviews used for training in each split",
    top_k: usize => "features kept per model for modality shares and recommendations",
    traits: Vec<TraitId> => "traits to model (default: all sixteen)",
    models: Vec<ModelKind> => "model kinds to train (svr, lasso)",
    ablation_trials: usize => "splits per modality subset in the ablation (0 skips it)",
    seed: u64 => "master seed for every random stream",
    jobs: usize => "worker threads (default: all cores)",
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    tunables: Tunables,
}

impl Tunables {
    pub fn parse_toml(text: &str, source: &str) -> Result<Self> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| Error::parse(source, e.message()))?;
        Ok(f.tunables)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            tunables: &'a Tunables,
        }
        toml::to_string(&Out { tunables: self }).expect("tunables serialize")
    }
}

/// Fully resolved settings for a run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub extraction: ExtractionConfig,
    pub aggregation: AggregationConfig,
    pub metric: DistanceMetric,
    pub train: TrainConfig,
    pub protocol: TrialProtocol,
    pub ablation_trials: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings::resolve(&Tunables::default()).expect("defaults are valid")
    }
}

impl Settings {
    pub fn resolve(t: &Tunables) -> Result<Self> {
        let seed = t.seed.unwrap_or(0);

        let mut extraction = ExtractionConfig::default();
        if let Some(p) = &t.lexicon {
            extraction.lexicon = CategoryLexicon::load(p)?;
        }
        if let Some(p) = &t.fillers {
            extraction.fillers = WordSet::load(p)?;
        }
        if let Some(p) = &t.stopwords {
            extraction.stopwords = WordSet::load(p)?;
        }
        if let Some(p) = &t.landmarks {
            extraction.facial.landmarks = LandmarkConfig::load(p)?;
        }
        let g = &mut extraction.facial.gestures;
        g.amplitude_rad = t.nod_amplitude.unwrap_or(g.amplitude_rad);
        g.window_s = t.gesture_window.unwrap_or(g.window_s);
        if !(g.amplitude_rad > 0.0) || !(g.window_s > 0.0) {
            return Err(Error::Config(
                "gesture amplitude and window must be positive".into(),
            ));
        }
        let p = &mut extraction.prosody;
        p.pause_threshold_s = t.pause_threshold.unwrap_or(p.pause_threshold_s);
        p.duration_weighted = t.duration_weighted.unwrap_or(p.duration_weighted);
        p.validate()?;
        let l = &mut extraction.lda;
        l.topics = t.lda_topics.unwrap_or(l.topics);
        l.alpha = t.lda_alpha.or(l.alpha);
        l.beta = t.lda_beta.unwrap_or(l.beta);
        l.iterations = t.lda_iterations.unwrap_or(l.iterations);
        l.infer_iterations = t.lda_infer_iterations.unwrap_or(l.infer_iterations);
        l.seed = sub_seed(seed, "gibbs");
        if l.topics < 1
            || l.iterations < 1
            || !(l.beta > 0.0)
            || l.alpha.is_some_and(|a| !(a > 0.0))
        {
            return Err(Error::Config(
                "topic model needs positive topics, iterations and priors".into(),
            ));
        }

        let mut aggregation = AggregationConfig::default();
        aggregation.max_iterations = t.em_max_iterations.unwrap_or(aggregation.max_iterations);
        aggregation.convergence_tol = t.em_tol.unwrap_or(aggregation.convergence_tol);
        aggregation.variance_floor = t.variance_floor.unwrap_or(aggregation.variance_floor);
        aggregation.validate()?;

        let mut train = TrainConfig::default();
        train.svr.c = t.svr_c.unwrap_or(train.svr.c);
        train.svr.epsilon = t.svr_epsilon.unwrap_or(train.svr.epsilon);
        train.svr.tol = t.svr_tol.unwrap_or(train.svr.tol);
        train.svr.validate()?;
        train.lasso.alpha = t.lasso_alpha.or(train.lasso.alpha);
        train.lasso.cv_folds = t.cv_folds.unwrap_or(train.lasso.cv_folds);
        train.lasso.grid_exponents = (
            t.alpha_grid_min.unwrap_or(train.lasso.grid_exponents.0),
            t.alpha_grid_max.unwrap_or(train.lasso.grid_exponents.1),
        );
        train.lasso.validate()?;

        let mut protocol = TrialProtocol {
            seed,
            ..TrialProtocol::default()
        };
        protocol.n_trials = t.trials.unwrap_or(protocol.n_trials);
        protocol.train_fraction = t.train_fraction.unwrap_or(protocol.train_fraction);
        protocol.top_k = t.top_k.unwrap_or(protocol.top_k);
        if let Some(v) = &t.traits {
            protocol.traits = v.clone();
        }
        if let Some(v) = &t.models {
            protocol.kinds = v.clone();
        }
        protocol.validate()?;

        if t.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(Settings {
            extraction,
            aggregation,
            metric: t.agreement_metric.unwrap_or_default(),
            train,
            ablation_trials: t.ablation_trials.unwrap_or(protocol.n_trials),
            protocol,
            seed,
            jobs: t.jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file = Tunables::parse_toml("[tunables]\nsvr_c = 4.0\ntrials = 7\n", "test").unwrap();
        let flags = Tunables {
            svr_c: Some(2.0),
            ..Tunables::default()
        };
        let s = Settings::resolve(&flags.overlay(file)).unwrap();
        assert_eq!(s.train.svr.c, 2.0);
        assert_eq!(s.protocol.n_trials, 7);
        assert_eq!(s.train.svr.epsilon, 0.1);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(Tunables::parse_toml("[tunables]\nbogus = 1\n", "t").is_err());
        let t = Tunables::parse_toml("[tunables]\ntrain_fraction = 1.5\n", "t").unwrap();
        assert!(matches!(Settings::resolve(&t), Err(Error::Config(_))));
    }

    #[test]
    fn lists_and_enums_parse() {
        let t = Tunables::parse_toml(
            "[tunables]\ntraits = [\"Engagement\", \"Calm\"]\nmodels = [\"lasso\"]\nagreement_metric = \"ordinal\"\n",
            "t",
        )
        .unwrap();
        let s = Settings::resolve(&t).unwrap();
        assert_eq!(s.protocol.traits, vec![TraitId::Engagement, TraitId::Calm]);
        assert_eq!(s.protocol.kinds, vec![ModelKind::Lasso]);
        assert_eq!(s.metric, DistanceMetric::Ordinal);
    }

    #[test]
    fn round_trip_through_toml() {
        let t = Tunables {
            lda_topics: Some(5),
            traits: Some(vec![TraitId::Smile]),
            ..Tunables::default()
        };
        assert_eq!(Tunables::parse_toml(&t.to_toml(), "t").unwrap(), t);
    }

    #[test]
    fn seed_feeds_named_streams() {
        let s = Settings::resolve(&Tunables {
            seed: Some(3),
            ..Tunables::default()
        })
        .unwrap();
        assert_eq!(s.protocol.seed, 3);
        assert_eq!(s.extraction.lda.seed, sub_seed(3, "gibbs"));
    }
}
