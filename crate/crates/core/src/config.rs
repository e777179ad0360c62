//! Flat key-value run configuration.
//!
//! The file format is line oriented: `key = value` pairs, `#` comments, and
//! at most one `include <path>` directive (resolved relative to the file,
//! processed before the file's own keys so local values win). Unknown keys
//! are rejected up front; every field has a default so an empty file is a
//! valid configuration.
//!
//! Keys and defaults:
//!
//! ```text
//! profile                      -        (small | large; preset applied before search.* keys)
//! search.population_size      5
//! search.max_iterations       3
//! search.stagnation_threshold 2
//! search.tournament_size      2
//! search.selection_count      population_size / 2, at least 1
//! search.mutation_split       0.5
//! search.max_path_length      3
//! search.init_length_cap      min(3, max_path_length)
//! search.seed                 0
//! oracle.kind                 synthetic   (tabular | synthetic | chat)
//! oracle.tabular.instance     -           (instance file path)
//! oracle.synthetic.strategies 4
//! oracle.synthetic.a          2
//! oracle.synthetic.q          0.5         (single value or comma list, one per level)
//! oracle.synthetic.eta        1
//! oracle.synthetic.noise_prob 0.0
//! oracle.synthetic.seed       derived from search.seed unless set
//! oracle.chat.url             -
//! oracle.chat.model           -
//! oracle.chat.auth_token      -
//! oracle.chat.auth_env        -           (environment variable holding the token)
//! oracle.chat.temperature     0.7
//! oracle.chat.templates_dir   templates
//! oracle.chat.strategies      roleplay,reframe,escalate,recall
//! oracle.chat.max_parallel    4
//! budget.max_queries          50
//! campaign.behaviors          -           (behavior CSV path)
//! campaign.workers            1
//! output.dir                  out
//! ```

use std::collections::BTreeMap;
use std::path::{Path as FsPath, PathBuf};

use thiserror::Error;

use crate::graph::StrategySet;
use crate::harness::OracleProvider;
use crate::hash::hash_bytes;
use crate::oracle::{
    ChatEndpointConfig, ChatOracle, Oracle, PromptTemplates, SyntheticOracle,
    SyntheticOracleConfig,
};
use crate::search::SearchConfig;
use crate::trace::OracleSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("config error: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Tabular,
    Synthetic,
    Chat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfigFile {
    pub search: SearchConfig,
    pub oracle_kind: OracleKind,
    pub tabular_instance: Option<PathBuf>,
    pub synthetic_strategies: u32,
    pub synthetic_threshold: u32,
    pub synthetic_q: Vec<f64>,
    pub synthetic_eta: u32,
    pub synthetic_noise: f64,
    pub synthetic_seed: Option<u64>,
    pub chat_url: Option<String>,
    pub chat_model: Option<String>,
    pub chat_auth_token: Option<String>,
    pub chat_auth_env: Option<String>,
    pub chat_temperature: f64,
    pub chat_templates_dir: PathBuf,
    pub chat_strategies: Vec<String>,
    pub chat_max_parallel: usize,
    pub budget_max_queries: u64,
    pub campaign_behaviors: Option<PathBuf>,
    pub campaign_workers: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        Self {
            search: SearchConfig::small(0),
            oracle_kind: OracleKind::Synthetic,
            tabular_instance: None,
            synthetic_strategies: 4,
            synthetic_threshold: 2,
            synthetic_q: vec![0.5],
            synthetic_eta: 1,
            synthetic_noise: 0.0,
            synthetic_seed: None,
            chat_url: None,
            chat_model: None,
            chat_auth_token: None,
            chat_auth_env: None,
            chat_temperature: 0.7,
            chat_templates_dir: PathBuf::from("templates"),
            chat_strategies: vec![
                "roleplay".into(),
                "reframe".into(),
                "escalate".into(),
                "recall".into(),
            ],
            chat_max_parallel: 4,
            budget_max_queries: 50,
            campaign_behaviors: None,
            campaign_workers: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Reads raw `key = value` pairs, following at most one include per file.
fn read_pairs(
    path: &FsPath,
    depth: usize,
    out: &mut Vec<(String, String)>,
) -> Result<(), ConfigError> {
    if depth > 8 {
        return Err(ConfigError::Invalid(format!(
            "include chain too deep at {}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut included = false;
    let mut local = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(target) = line.strip_prefix("include ") {
            if included {
                return Err(ConfigError::Syntax {
                    path: display,
                    line: lineno + 1,
                    msg: "only one include directive is allowed per file".into(),
                });
            }
            included = true;
            let base = path.parent().unwrap_or(FsPath::new("."));
            read_pairs(&base.join(target.trim()), depth + 1, out)?;
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                path: display,
                line: lineno + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        local.push((key.trim().to_string(), value.trim().to_string()));
    }
    out.extend(local);
    Ok(())
}

impl RunConfigFile {
    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        read_pairs(path.as_ref(), 0, &mut pairs)?;
        Self::from_pairs(pairs)
    }

    fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self, ConfigError> {
        // Later assignments win, and the profile preset is applied before any
        // explicit search.* key no matter where it appears in the file.
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        let mut profile = None;
        let mut search_keys: Vec<(String, String)> = Vec::new();
        for (key, value) in pairs {
            if key == "profile" {
                profile = Some(value);
            } else if key.starts_with("search.") {
                search_keys.retain(|(k, _)| *k != key);
                search_keys.push((key, value));
            } else {
                map.insert(key, value);
            }
        }

        let mut config = Self::default();
        if let Some(profile) = &profile {
            config.search = match profile.as_str() {
                "small" => SearchConfig::small(0),
                "large" => SearchConfig::large(0),
                other => {
                    return Err(ConfigError::BadValue {
                        key: "profile".into(),
                        msg: format!("unknown profile `{other}` (small | large)"),
                    })
                }
            };
        }

        let parse = |key: &str, value: &str| -> Result<u64, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                msg: format!("expected integer, got `{value}`"),
            })
        };
        let parse_f = |key: &str, value: &str| -> Result<f64, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                msg: format!("expected number, got `{value}`"),
            })
        };

        let mut selection_explicit = false;
        let mut init_cap_explicit = false;
        for (key, value) in &search_keys {
            match key.as_str() {
                "search.population_size" => {
                    config.search.population_size = parse(key, value)? as usize
                }
                "search.max_iterations" => config.search.max_iterations = parse(key, value)? as u32,
                "search.stagnation_threshold" => {
                    config.search.stagnation_threshold = parse(key, value)? as u32
                }
                "search.tournament_size" => {
                    config.search.tournament_size = parse(key, value)? as usize
                }
                "search.selection_count" => {
                    config.search.selection_count = parse(key, value)? as usize;
                    selection_explicit = true;
                }
                "search.mutation_split" => config.search.mutation_split = parse_f(key, value)?,
                "search.max_path_length" => {
                    config.search.max_path_length = parse(key, value)? as usize
                }
                "search.init_length_cap" => {
                    config.search.init_length_cap = parse(key, value)? as usize;
                    init_cap_explicit = true;
                }
                "search.seed" => config.search.rng_seed = parse(key, value)?,
                other => return Err(ConfigError::UnknownKey(other.into())),
            }
        }
        // Re-derive dependent defaults for keys the file left implicit.
        if !selection_explicit {
            config.search.selection_count = (config.search.population_size / 2).max(1);
        }
        if !init_cap_explicit {
            config.search.init_length_cap = config.search.max_path_length.min(3);
        }

        for (key, value) in &map {
            match key.as_str() {
                "oracle.kind" => {
                    config.oracle_kind = match value.as_str() {
                        "tabular" => OracleKind::Tabular,
                        "synthetic" => OracleKind::Synthetic,
                        "chat" => OracleKind::Chat,
                        other => {
                            return Err(ConfigError::BadValue {
                                key: key.clone(),
                                msg: format!("unknown oracle kind `{other}`"),
                            })
                        }
                    }
                }
                "oracle.tabular.instance" => config.tabular_instance = Some(PathBuf::from(value)),
                "oracle.synthetic.strategies" => {
                    config.synthetic_strategies = parse(key, value)? as u32
                }
                "oracle.synthetic.a" => config.synthetic_threshold = parse(key, value)? as u32,
                "oracle.synthetic.q" => {
                    config.synthetic_q = value
                        .split(',')
                        .map(|v| parse_f(key, v.trim()))
                        .collect::<Result<_, _>>()?
                }
                "oracle.synthetic.eta" => config.synthetic_eta = parse(key, value)? as u32,
                "oracle.synthetic.noise_prob" => config.synthetic_noise = parse_f(key, value)?,
                "oracle.synthetic.seed" => config.synthetic_seed = Some(parse(key, value)?),
                "oracle.chat.url" => config.chat_url = Some(value.clone()),
                "oracle.chat.model" => config.chat_model = Some(value.clone()),
                "oracle.chat.auth_token" => config.chat_auth_token = Some(value.clone()),
                "oracle.chat.auth_env" => config.chat_auth_env = Some(value.clone()),
                "oracle.chat.temperature" => config.chat_temperature = parse_f(key, value)?,
                "oracle.chat.templates_dir" => {
                    config.chat_templates_dir = PathBuf::from(value)
                }
                "oracle.chat.strategies" => {
                    config.chat_strategies =
                        value.split(',').map(|s| s.trim().to_string()).collect()
                }
                "oracle.chat.max_parallel" => {
                    config.chat_max_parallel = parse(key, value)? as usize
                }
                "budget.max_queries" => config.budget_max_queries = parse(key, value)?,
                "campaign.behaviors" => config.campaign_behaviors = Some(PathBuf::from(value)),
                "campaign.workers" => config.campaign_workers = parse(key, value)? as usize,
                "output.dir" => config.output_dir = PathBuf::from(value),
                other => return Err(ConfigError::UnknownKey(other.into())),
            }
        }

        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.search
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.budget_max_queries == 0 {
            return Err(ConfigError::Invalid("budget.max_queries must be >= 1".into()));
        }
        self.synthetic_template(0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.oracle_kind == OracleKind::Tabular && self.tabular_instance.is_none() {
            return Err(ConfigError::Invalid(
                "oracle.kind = tabular requires oracle.tabular.instance".into(),
            ));
        }
        if self.oracle_kind == OracleKind::Chat {
            if self.chat_url.is_none() || self.chat_model.is_none() {
                return Err(ConfigError::Invalid(
                    "oracle.kind = chat requires oracle.chat.url and oracle.chat.model".into(),
                ));
            }
            if self.chat_strategies.is_empty() {
                return Err(ConfigError::Invalid(
                    "oracle.chat.strategies must name at least one strategy".into(),
                ));
            }
        }
        Ok(())
    }

    /// Synthetic config with the single-q shorthand broadcast to all levels.
    pub fn synthetic_template(&self, seed: u64) -> SyntheticOracleConfig {
        let q = if self.synthetic_q.len() == 1 {
            vec![self.synthetic_q[0]; self.synthetic_threshold as usize]
        } else {
            self.synthetic_q.clone()
        };
        SyntheticOracleConfig {
            seed,
            per_level_success_prob: q,
            step_increment: self.synthetic_eta,
            threshold: self.synthetic_threshold,
            noise_prob: self.synthetic_noise,
        }
    }

    fn chat_endpoint(&self) -> ChatEndpointConfig {
        let mut endpoint = ChatEndpointConfig::new(
            self.chat_url.clone().unwrap_or_default(),
            self.chat_model.clone().unwrap_or_default(),
        );
        endpoint.auth_token = self.chat_auth_token.clone();
        endpoint.auth_token_env = self.chat_auth_env.clone();
        endpoint.temperature = self.chat_temperature;
        endpoint.max_parallel = self.chat_max_parallel;
        endpoint
    }

    fn synthetic_seed(&self) -> u64 {
        self.synthetic_seed
            .unwrap_or_else(|| hash_bytes(self.search.rng_seed, b"oracle"))
    }

    /// Oracle, strategy set and provenance for a single `run`.
    pub fn build_run_oracle(
        &self,
    ) -> Result<(Box<dyn Oracle>, StrategySet, OracleSpec), ConfigError> {
        let build = |e: crate::oracle::OracleError| ConfigError::Invalid(e.to_string());
        match self.oracle_kind {
            OracleKind::Tabular => {
                let path = self.tabular_instance.as_ref().expect("validated");
                let instance = crate::graph::Instance::load(path)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let set = instance.strategy_set();
                let oracle = crate::oracle::TabularOracle::new(&instance).map_err(build)?;
                Ok((
                    Box::new(oracle),
                    set,
                    OracleSpec::Tabular {
                        instance: path.display().to_string(),
                    },
                ))
            }
            OracleKind::Synthetic => {
                let template = self.synthetic_template(self.synthetic_seed());
                let oracle = SyntheticOracle::new(template.clone()).map_err(build)?;
                Ok((
                    Box::new(oracle),
                    StrategySet::with_count(self.synthetic_strategies),
                    OracleSpec::Synthetic { config: template },
                ))
            }
            OracleKind::Chat => {
                let endpoint = self.chat_endpoint();
                let templates =
                    PromptTemplates::load_dir(&self.chat_templates_dir).map_err(build)?;
                let set = StrategySet::new(
                    self.chat_strategies
                        .iter()
                        .enumerate()
                        .map(|(i, label)| crate::graph::StrategyId {
                            index: i as u32,
                            label: label.clone(),
                            category: String::new(),
                        })
                        .collect(),
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let spec = OracleSpec::Chat {
                    url: endpoint.url.clone(),
                    model: endpoint.model.clone(),
                };
                let oracle = ChatOracle::new(endpoint, templates, set.clone(), "").map_err(build)?;
                Ok((Box::new(oracle), set, spec))
            }
        }
    }

    /// Provider for campaigns; `behavior_base` anchors relative instance
    /// references (normally the behavior file's directory).
    pub fn campaign_provider(&self, behavior_base: &FsPath) -> Result<OracleProvider, ConfigError> {
        Ok(match self.oracle_kind {
            OracleKind::Tabular => OracleProvider::Tabular {
                base_dir: behavior_base.to_path_buf(),
            },
            OracleKind::Synthetic => OracleProvider::Synthetic {
                template: self.synthetic_template(0),
                strategy_count: self.synthetic_strategies,
            },
            OracleKind::Chat => OracleProvider::Chat {
                endpoint: self.chat_endpoint(),
                templates_dir: self.chat_templates_dir.clone(),
                strategy_labels: self.chat_strategies.clone(),
            },
        })
    }
}
