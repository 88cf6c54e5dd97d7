//! Run configuration: defaults, then the TOML file, then the output-dir
//! environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use cochange::branches::{
    DEFAULT_HORIZON, DEFAULT_MANY_CAUSES, DEFAULT_MIN_ADDED_COCHANGES,
    DEFAULT_SAMPLE_SIZE,
};
use cochange::recommend::{Collector, RecommenderConfig};
use cochange::{BranchHandlingStrategy as S, Rational};
use serde::{Deserialize, Serialize};

use crate::UsageError;

pub const OUTPUT_DIR_ENV: &str = "COCHANGE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "cochange-out";

/// Bundles of settings that belong together. Mixing a collector or fairness
/// setting from the other profile requires `--unsafe-override`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Full vs first-parent without merges, sequential collection, lists
    /// cut to equal length.
    NoMerge,
    /// Full vs first-parent with merges, per-file collection, no cut.
    Merge,
}

impl Profile {
    pub fn pair(self) -> (S, S) {
        match self {
            Profile::NoMerge => (S::Full, S::FirstParentNoMerge),
            Profile::Merge => (S::Full, S::FirstParentMerge),
        }
    }

    pub fn collector(self) -> Collector {
        match self {
            Profile::NoMerge => Collector::Sequential,
            Profile::Merge => Collector::PerFileSlice,
        }
    }

    pub fn fairness(self) -> bool {
        self == Profile::NoMerge
    }

    pub fn for_pair(pair: (S, S)) -> Option<Profile> {
        [Profile::NoMerge, Profile::Merge]
            .into_iter()
            .find(|p| p.pair() == pair)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommenderFile {
    pub minsup: Option<String>,
    pub minconf: Option<String>,
    pub max_changeset_size: Option<usize>,
    pub max_commits: Option<usize>,
    pub max_rules: Option<usize>,
    pub collector: Option<Collector>,
}

/// The TOML file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub profile: Option<Profile>,
    pub fairness: Option<bool>,
    pub unsafe_override: Option<bool>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub cap: Option<usize>,
    pub min_added_cochanges: Option<usize>,
    pub sample_size: Option<usize>,
    pub many_causes: Option<usize>,
    pub bins: Option<usize>,
    pub recommender: Option<RecommenderFile>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| {
            UsageError(format!("config {}: {}", path.display(), e.message())).into()
        })
    }
}

/// Effective settings of one run, echoed into the metadata file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub recommender: RecommenderConfig,
    pub profile: Profile,
    pub strategies: (S, S),
    pub fairness: bool,
    pub unsafe_override: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub horizon: usize,
    pub cap: Option<usize>,
    pub min_added_cochanges: usize,
    pub sample_size: usize,
    pub many_causes: usize,
    pub bins: usize,
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default)]
pub struct Overrides {
    pub pair: Option<(S, S)>,
    pub fairness: Option<bool>,
    pub collector: Option<Collector>,
    pub unsafe_override: bool,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub cap: Option<usize>,
    pub min_added_cochanges: Option<usize>,
    pub sample_size: Option<usize>,
    pub many_causes: Option<usize>,
    pub bins: Option<usize>,
}

fn parse_rational(field: &str, text: &str) -> anyhow::Result<Rational> {
    let r = if let Ok(r) = text.parse::<Rational>() {
        r
    } else {
        // plain decimals such as 0.1
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        let digits = format!("{int}{frac}");
        let num: i64 = digits
            .parse()
            .map_err(|_| UsageError(format!("{field}: {text:?} is not a number")))?;
        let den = 10i64
            .checked_pow(frac.len() as u32)
            .ok_or_else(|| UsageError(format!("{field}: too many decimals")))?;
        Rational::new(num, den)
    };
    Ok(r)
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, env_dir: Option<PathBuf>, flags: Overrides) -> anyhow::Result<Self> {
        let pair = match (flags.pair, file.profile) {
            (Some(p), _) => p,
            (None, Some(profile)) => profile.pair(),
            (None, None) => Profile::NoMerge.pair(),
        };
        let profile = Profile::for_pair(pair).ok_or_else(|| {
            UsageError(format!(
                "unsupported pair {},{} (expected full,fp-no-merge or full,fp-merge)",
                pair.0.name(),
                pair.1.name()
            ))
        })?;
        if flags.pair.is_some() && file.profile.is_some_and(|p| p != profile) {
            return Err(UsageError("--pair contradicts the profile in the config file".into()).into());
        }
        let unsafe_override = flags.unsafe_override || file.unsafe_override.unwrap_or(false);

        let mut recommender = RecommenderConfig::default().with_collector(profile.collector());
        let rf = file.recommender.unwrap_or_default();
        if let Some(s) = rf.minsup {
            recommender.minsup = parse_rational("minsup", &s)?;
        }
        if let Some(s) = rf.minconf {
            recommender.minconf = parse_rational("minconf", &s)?;
        }
        recommender.max_changeset_size = rf.max_changeset_size.unwrap_or(recommender.max_changeset_size);
        recommender.max_commits = rf.max_commits.unwrap_or(recommender.max_commits);
        recommender.max_rules = rf.max_rules.unwrap_or(recommender.max_rules);
        let collector = flags.collector.or(rf.collector).unwrap_or(profile.collector());
        let fairness = flags.fairness.or(file.fairness).unwrap_or(profile.fairness());
        if !unsafe_override && (collector != profile.collector() || fairness != profile.fairness()) {
            return Err(UsageError(format!(
                "collector/fairness settings do not match the {} profile; pass --unsafe-override to mix them",
                match profile {
                    Profile::NoMerge => "no-merge",
                    Profile::Merge => "merge",
                }
            ))
            .into());
        }
        recommender.collector = collector;
        recommender
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;

        Ok(RunConfig {
            recommender,
            profile,
            strategies: pair,
            fairness,
            unsafe_override,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            output_dir: flags
                .output_dir
                .or(env_dir)
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            horizon: flags.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON),
            cap: flags.cap.or(file.cap),
            min_added_cochanges: flags
                .min_added_cochanges
                .or(file.min_added_cochanges)
                .unwrap_or(DEFAULT_MIN_ADDED_COCHANGES),
            sample_size: flags.sample_size.or(file.sample_size).unwrap_or(DEFAULT_SAMPLE_SIZE),
            many_causes: flags.many_causes.or(file.many_causes).unwrap_or(DEFAULT_MANY_CAUSES),
            bins: flags.bins.or(file.bins).unwrap_or(4),
        })
    }
}
