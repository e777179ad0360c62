//! Campaign runner and metrics: one independent seeded search per behavior,
//! success-rate and query-cost aggregation with per-category breakdowns, and
//! the statistical experiment suites.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::random_search;
use crate::graph::{Instance, StrategySet};
use crate::hash::{hash_bytes, hash_words};
use crate::oracle::{
    ChatEndpointConfig, ChatOracle, Oracle, OracleBudget, PromptTemplates, SyntheticOracle,
    SyntheticOracleConfig, TabularOracle,
};
use crate::search::{run_search, SearchConfig};
use crate::stats::{self, Z_99};
use crate::trace::SearchStatus;

const ORACLE_SEED_SALT: u64 = 0x6f7261636c65; // "oracle"

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("behavior file: {0}")]
    BehaviorFile(String),
    #[error("behavior `{id}`: {msg}")]
    BadBehavior { id: String, msg: String },
    #[error("only {successes} of {seeds} seeds succeeded within 10x the bound; configuration looks wrong")]
    InsufficientSuccesses { successes: usize, seeds: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Search(#[from] crate::search::SearchError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// One behavior under test. Tabular and synthetic campaigns reference an
/// instance (a file path, or an opaque tag for synthetic worlds); chat
/// campaigns carry the goal text instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub id: String,
    pub category: String,
    pub goal: Option<String>,
    pub instance_ref: Option<String>,
}

/// Reads the `id,category,goal,instance_ref` CSV. Empty cells mean absent.
pub fn load_behaviors_csv(
    path: impl AsRef<std::path::Path>,
) -> Result<Vec<BehaviorRecord>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let expected = ["id", "category", "goal", "instance_ref"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(HarnessError::BehaviorFile(format!(
            "expected header `id,category,goal,instance_ref`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut behaviors = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let optional = |i: usize| {
            let v = field(i);
            (!v.is_empty()).then_some(v)
        };
        behaviors.push(BehaviorRecord {
            id: field(0),
            category: field(1),
            goal: optional(2),
            instance_ref: optional(3),
        });
    }
    Ok(behaviors)
}

/// Produces the oracle (and the matching strategy set) for one behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleProvider {
    /// Behaviors reference instance files, resolved against `base_dir`.
    Tabular { base_dir: PathBuf },
    /// Every behavior gets its own world: the template config with a seed
    /// derived from the campaign seed and the behavior id.
    Synthetic {
        template: SyntheticOracleConfig,
        strategy_count: u32,
    },
    /// Behaviors carry goals; the endpoint and templates are shared.
    Chat {
        endpoint: ChatEndpointConfig,
        templates_dir: PathBuf,
        strategy_labels: Vec<String>,
    },
}

impl OracleProvider {
    fn validate_behavior(&self, behavior: &BehaviorRecord) -> Result<(), HarnessError> {
        let want_goal = matches!(self, OracleProvider::Chat { .. });
        let bad = |msg: &str| {
            Err(HarnessError::BadBehavior {
                id: behavior.id.clone(),
                msg: msg.into(),
            })
        };
        match (want_goal, &behavior.goal, &behavior.instance_ref) {
            (true, Some(_), None) => Ok(()),
            (false, None, Some(_)) => Ok(()),
            (true, _, _) => bad("chat campaigns need `goal` set and `instance_ref` empty"),
            (false, _, _) => bad("this campaign needs `instance_ref` set and `goal` empty"),
        }
    }

    fn make(
        &self,
        behavior: &BehaviorRecord,
        oracle_seed: u64,
    ) -> Result<(Box<dyn Oracle>, StrategySet), HarnessError> {
        match self {
            OracleProvider::Tabular { base_dir } => {
                let rel = behavior.instance_ref.as_deref().expect("validated");
                let instance = Instance::load(base_dir.join(rel))?;
                let set = instance.strategy_set();
                Ok((Box::new(TabularOracle::new(&instance)?), set))
            }
            OracleProvider::Synthetic {
                template,
                strategy_count,
            } => {
                let oracle =
                    SyntheticOracle::new(template.clone().with_seed(oracle_seed))?;
                Ok((Box::new(oracle), StrategySet::with_count(*strategy_count)))
            }
            OracleProvider::Chat {
                endpoint,
                templates_dir,
                strategy_labels,
            } => {
                let set = StrategySet::new(
                    strategy_labels
                        .iter()
                        .enumerate()
                        .map(|(i, label)| crate::graph::StrategyId {
                            index: i as u32,
                            label: label.clone(),
                            category: String::new(),
                        })
                        .collect(),
                )?;
                let templates = PromptTemplates::load_dir(templates_dir)?;
                let goal = behavior.goal.clone().expect("validated");
                let oracle = ChatOracle::new(endpoint.clone(), templates, set.clone(), goal)?;
                Ok((Box::new(oracle), set))
            }
        }
    }
}

/// Which searcher a campaign drives. The random method exists so the colony
/// can be compared against a budget-matched control on identical worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignMethod {
    Colony,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub campaign_seed: u64,
    pub budget_per_behavior: u64,
    pub workers: usize,
    pub method: CampaignMethod,
}

impl CampaignConfig {
    pub fn new(campaign_seed: u64, budget_per_behavior: u64) -> Self {
        Self {
            campaign_seed,
            budget_per_behavior,
            workers: 1,
            method: CampaignMethod::Colony,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRow {
    pub id: String,
    pub category: String,
    pub status: SearchStatus,
    pub queries: u64,
    pub winning_path_length: Option<usize>,
    pub iterations: u32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAggregate {
    pub category: String,
    pub behaviors: usize,
    pub successes: usize,
    pub asr: f64,
    pub avg_queries_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub campaign_seed: u64,
    pub config_fingerprint: String,
    pub rows: Vec<BehaviorRow>,
    /// Successes over all behaviors; absent for an empty campaign.
    pub asr: Option<f64>,
    /// Mean queries over successful behaviors only.
    pub avg_queries_success: Option<f64>,
    /// Everything spent, successful or not.
    pub total_queries: u64,
    pub per_category: Vec<CategoryAggregate>,
}

/// Seed for one behavior's search, derived so that subsetting the behavior
/// list never shifts any other behavior's outcome.
pub fn behavior_seed(campaign_seed: u64, behavior_id: &str) -> u64 {
    hash_bytes(campaign_seed, behavior_id.as_bytes())
}

fn fingerprint(
    search: &SearchConfig,
    provider: &OracleProvider,
    campaign: &CampaignConfig,
) -> String {
    let blob = serde_json::to_string(&(search, provider, campaign.campaign_seed, campaign.budget_per_behavior, campaign.method))
        .expect("config serializes");
    format!("{:016x}", hash_bytes(0, blob.as_bytes()))
}

fn run_one_behavior(
    behavior: &BehaviorRecord,
    search: &SearchConfig,
    provider: &OracleProvider,
    campaign: &CampaignConfig,
) -> BehaviorRow {
    let row_error = |msg: String| BehaviorRow {
        id: behavior.id.clone(),
        category: behavior.category.clone(),
        status: SearchStatus::IterationsExhausted,
        queries: 0,
        winning_path_length: None,
        iterations: 0,
        error: Some(msg),
    };
    if let Err(e) = provider.validate_behavior(behavior) {
        return row_error(e.to_string());
    }
    let seed = behavior_seed(campaign.campaign_seed, &behavior.id);
    let oracle_seed = hash_words(campaign.campaign_seed ^ ORACLE_SEED_SALT, [seed]);
    let (oracle, set) = match provider.make(behavior, oracle_seed) {
        Ok(pair) => pair,
        Err(e) => return row_error(e.to_string()),
    };
    let budget = OracleBudget::new(campaign.budget_per_behavior);
    match campaign.method {
        CampaignMethod::Colony => {
            match run_search(&search.clone().with_seed(seed), &set, oracle.as_ref(), &budget) {
                Ok(trace) => BehaviorRow {
                    id: behavior.id.clone(),
                    category: behavior.category.clone(),
                    status: trace.summary.status,
                    queries: trace.summary.total_queries,
                    winning_path_length: trace.summary.winning_path.map(|p| p.len()),
                    iterations: trace.summary.iterations_run,
                    error: None,
                },
                Err(e) => row_error(e.to_string()),
            }
        }
        CampaignMethod::Random => {
            // Same stream seed as the colony engine: both methods draw
            // identical initial paths, so paired comparisons cancel the
            // shared head and measure only how the methods spend the tail.
            use rand_chacha::rand_core::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let result = random_search(
                &set,
                oracle.as_ref(),
                &budget,
                search.max_path_length,
                &mut rng,
            );
            BehaviorRow {
                id: behavior.id.clone(),
                category: behavior.category.clone(),
                status: result.status,
                queries: result.queries_used,
                winning_path_length: result.path.map(|p| p.len()),
                iterations: 0,
                error: None,
            }
        }
    }
}

/// Runs one independent seeded search per behavior and assembles the report.
/// Per-behavior failures become rows, never a campaign abort. Rows are
/// ordered by behavior id regardless of completion order.
pub fn run_campaign(
    behaviors: &[BehaviorRecord],
    search: &SearchConfig,
    provider: &OracleProvider,
    campaign: &CampaignConfig,
) -> CampaignReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(campaign.workers.max(1))
        .build()
        .expect("worker pool");
    let mut rows: Vec<BehaviorRow> = pool.install(|| {
        behaviors
            .par_iter()
            .map(|b| run_one_behavior(b, search, provider, campaign))
            .collect()
    });
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    assemble_report(rows, search, provider, campaign)
}

fn assemble_report(
    rows: Vec<BehaviorRow>,
    search: &SearchConfig,
    provider: &OracleProvider,
    campaign: &CampaignConfig,
) -> CampaignReport {
    let successes: Vec<&BehaviorRow> = rows
        .iter()
        .filter(|r| r.status == SearchStatus::Success)
        .collect();
    let asr = (!rows.is_empty()).then(|| successes.len() as f64 / rows.len() as f64);
    let avg_queries_success = (!successes.is_empty())
        .then(|| successes.iter().map(|r| r.queries as f64).sum::<f64>() / successes.len() as f64);
    let total_queries = rows.iter().map(|r| r.queries).sum();
    let per_category = aggregate_by_category(&rows);
    CampaignReport {
        campaign_seed: campaign.campaign_seed,
        config_fingerprint: fingerprint(search, provider, campaign),
        rows,
        asr,
        avg_queries_success,
        total_queries,
        per_category,
    }
}

/// Per-category success rates and query costs, sorted by success rate
/// descending (category name breaks ties).
pub fn aggregate_by_category(rows: &[BehaviorRow]) -> Vec<CategoryAggregate> {
    let mut categories: Vec<String> = rows.iter().map(|r| r.category.clone()).collect();
    categories.sort();
    categories.dedup();
    let mut aggregates: Vec<CategoryAggregate> = categories
        .into_iter()
        .map(|category| {
            let members: Vec<&BehaviorRow> =
                rows.iter().filter(|r| r.category == category).collect();
            let successes: Vec<&&BehaviorRow> = members
                .iter()
                .filter(|r| r.status == SearchStatus::Success)
                .collect();
            CategoryAggregate {
                category,
                behaviors: members.len(),
                successes: successes.len(),
                asr: successes.len() as f64 / members.len() as f64,
                avg_queries_success: (!successes.is_empty()).then(|| {
                    successes.iter().map(|r| r.queries as f64).sum::<f64>()
                        / successes.len() as f64
                }),
            }
        })
        .collect();
    aggregates.sort_by(|a, b| {
        b.asr
            .partial_cmp(&a.asr)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.category.cmp(&b.category))
    });
    aggregates
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One JSON object per behavior row.
pub fn rows_to_jsonl(report: &CampaignReport) -> String {
    let mut out = String::new();
    for row in &report.rows {
        out.push_str(&serde_json::to_string(row).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// Aggregates CSV: per-category rows in report order plus a final overall row.
pub fn aggregates_to_csv(report: &CampaignReport) -> String {
    let mut out = String::from("category,behaviors,successes,asr,avg_queries_success\n");
    for c in &report.per_category {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            c.category,
            c.behaviors,
            c.successes,
            c.asr,
            fmt_opt(c.avg_queries_success)
        ));
    }
    out.push_str(&format!(
        "overall,{},{},{},{}\n",
        report.rows.len(),
        report
            .rows
            .iter()
            .filter(|r| r.status == SearchStatus::Success)
            .count(),
        fmt_opt(report.asr),
        fmt_opt(report.avg_queries_success)
    ));
    out
}

/// Radar/bar source data: `(category, asr)` and `(category, avg queries)`.
pub fn plot_data_csvs(report: &CampaignReport) -> (String, String) {
    let mut asr = String::from("category,asr\n");
    let mut queries = String::from("category,avg_queries_success\n");
    for c in &report.per_category {
        asr.push_str(&format!("{},{:.6}\n", c.category, c.asr));
        queries.push_str(&format!(
            "{},{}\n",
            c.category,
            fmt_opt(c.avg_queries_success)
        ));
    }
    (asr, queries)
}

// ---------------------------------------------------------------------------
// Statistical experiment suites
// ---------------------------------------------------------------------------

/// Parameters of the hitting-time experiment: how many seeded runs to
/// average and which synthetic chain to run them on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeParams {
    pub n_seeds: usize,
    pub seed: u64,
    pub population_size: usize,
    pub strategy_count: u32,
    pub q: f64,
    pub eta: u32,
    pub threshold: u32,
}

impl HittingTimeParams {
    /// The configuration the convergence check runs at by default.
    pub fn reference(n_seeds: usize) -> Self {
        Self {
            n_seeds,
            seed: 0x4869_7454,
            population_size: 5,
            strategy_count: 4,
            q: 0.5,
            eta: 1,
            threshold: 2,
        }
    }

    /// Expected-rounds bound: sum over levels below the threshold of
    /// `1 / (eta * q)`.
    pub fn bound(&self) -> f64 {
        (0..self.threshold)
            .map(|_| 1.0 / (self.eta as f64 * self.q))
            .sum()
    }

    fn search_config(&self, population: usize) -> SearchConfig {
        let rounds = (10.0 * self.bound()).ceil() as u32;
        let max_len = (self.threshold.div_ceil(self.eta) as usize).max(3);
        SearchConfig {
            population_size: population,
            max_iterations: rounds.max(1),
            stagnation_threshold: 2,
            tournament_size: 2.min(population),
            selection_count: (population / 2).max(1),
            mutation_split: 0.5,
            max_path_length: max_len,
            init_length_cap: max_len.min(3),
            rng_seed: 0,
        }
    }

    fn oracle_config(&self, seed: u64) -> SyntheticOracleConfig {
        SyntheticOracleConfig::uniform(seed, self.q, self.eta, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub n_seeds: usize,
    pub successes: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci99_upper: f64,
    pub bound: f64,
    pub pass: bool,
}

fn hitting_iterations(
    params: &HittingTimeParams,
    population: usize,
) -> Result<Vec<Option<f64>>, HarnessError> {
    let set = StrategySet::with_count(params.strategy_count);
    let config = params.search_config(population);
    (0..params.n_seeds as u64)
        .map(|k| {
            let search_seed = hash_words(params.seed, [k, 1]);
            let oracle_seed = hash_words(params.seed ^ ORACLE_SEED_SALT, [k, 2]);
            let oracle = SyntheticOracle::new(params.oracle_config(oracle_seed))?;
            let budget = OracleBudget::new(u64::MAX / 2);
            let trace = run_search(&config.clone().with_seed(search_seed), &set, &oracle, &budget)?;
            Ok(match trace.summary.status {
                SearchStatus::Success => Some(trace.summary.iterations_run as f64),
                _ => None,
            })
        })
        .collect()
}

/// Measures the empirical mean round at which the colony first hits the
/// success level and compares its one-sided 99% confidence bound against the
/// theoretical expectation.
pub fn hitting_time_experiment(params: &HittingTimeParams) -> Result<StatReport, HarnessError> {
    let outcomes = hitting_iterations(params, params.population_size)?;
    let hits: Vec<f64> = outcomes.iter().copied().flatten().collect();
    if (hits.len() as f64) < 0.9 * params.n_seeds as f64 {
        return Err(HarnessError::InsufficientSuccesses {
            successes: hits.len(),
            seeds: params.n_seeds,
        });
    }
    let bound = params.bound();
    let ci99_upper = stats::upper_confidence_bound(&hits, Z_99);
    Ok(StatReport {
        n_seeds: params.n_seeds,
        successes: hits.len(),
        mean: stats::mean(&hits),
        sd: stats::sample_sd(&hits),
        ci99_upper,
        bound,
        pass: ci99_upper <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub pairs: usize,
    pub mean_large: f64,
    pub mean_small: f64,
    pub mean_diff: f64,
    pub t_statistic: f64,
    pub pass: bool,
}

/// Paired comparison of hitting rounds for a large population against a
/// small one on identical worlds; passes when the large population is
/// strictly faster at 99% one-sided confidence.
pub fn population_benefit_experiment(
    params: &HittingTimeParams,
    large_population: usize,
    small_population: usize,
) -> Result<PairedReport, HarnessError> {
    let large = hitting_iterations(params, large_population)?;
    let small = hitting_iterations(params, small_population)?;
    let mut pairs_large = Vec::new();
    let mut pairs_small = Vec::new();
    for (l, s) in large.iter().zip(&small) {
        if let (Some(l), Some(s)) = (l, s) {
            pairs_large.push(*l);
            pairs_small.push(*s);
        }
    }
    if (pairs_large.len() as f64) < 0.9 * params.n_seeds as f64 {
        return Err(HarnessError::InsufficientSuccesses {
            successes: pairs_large.len(),
            seeds: params.n_seeds,
        });
    }
    let (mean_diff, t, pass) = stats::paired_less_than(&pairs_large, &pairs_small, Z_99);
    Ok(PairedReport {
        pairs: pairs_large.len(),
        mean_large: stats::mean(&pairs_large),
        mean_small: stats::mean(&pairs_small),
        mean_diff,
        t_statistic: t,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub q: f64,
    pub band: f64,
    /// `(trials, advance frequency)` per starting level.
    pub per_level: Vec<(u64, f64)>,
    pub pass: bool,
}

/// Verifies that the synthetic oracle's per-step advance frequency matches
/// its configured probability at every level, within the stated band.
pub fn oracle_marginal_check(
    q: f64,
    threshold: u32,
    n_seeds: u64,
    band: f64,
) -> Result<MarginalReport, HarnessError> {
    let probe = crate::graph::Path::new(vec![0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
    let mut advances = vec![0u64; threshold as usize];
    let mut trials = vec![0u64; threshold as usize];
    for seed in 0..n_seeds {
        let oracle = SyntheticOracle::new(SyntheticOracleConfig::uniform(seed, q, 1, threshold))?;
        let budget = OracleBudget::new(u64::MAX / 2);
        // Walk the probe path turn by turn through prefix evaluations; the
        // keyed randomness makes each prefix's outcome stable, so the level
        // after t turns is readable off the record cues.
        let mut level = 0u32;
        for t in 1..=probe.len() {
            if level >= threshold {
                break;
            }
            let record = oracle.evaluate(&probe.prefix(t), t - 1, None, &budget)?;
            let next = if record.level.is_target() {
                threshold
            } else {
                record
                    .cue
                    .as_ref()
                    .and_then(|c| c.0.strip_prefix("progress:"))
                    .and_then(|s| s.parse::<u32>().ok())
                    .unwrap_or(level)
            };
            trials[level as usize] += 1;
            if next > level {
                advances[level as usize] += 1;
            }
            level = next;
        }
    }
    let per_level: Vec<(u64, f64)> = trials
        .iter()
        .zip(&advances)
        .map(|(&t, &a)| (t, if t == 0 { 0.0 } else { a as f64 / t as f64 }))
        .collect();
    let pass = per_level
        .iter()
        .all(|&(t, freq)| t > 0 && (freq - q).abs() <= band);
    Ok(MarginalReport {
        q,
        band,
        per_level,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_provider(q: f64, a: u32) -> OracleProvider {
        OracleProvider::Synthetic {
            template: SyntheticOracleConfig::uniform(0, q, 1, a),
            strategy_count: 4,
        }
    }

    fn behaviors(n: usize) -> Vec<BehaviorRecord> {
        (0..n)
            .map(|i| BehaviorRecord {
                id: format!("b{i:03}"),
                category: format!("cat{}", i % 3),
                goal: None,
                instance_ref: Some("synthetic".into()),
            })
            .collect()
    }

    #[test]
    fn asr_is_success_ratio() {
        let rows: Vec<BehaviorRow> = (0..10)
            .map(|i| BehaviorRow {
                id: format!("b{i}"),
                category: "c".into(),
                status: if i < 7 {
                    SearchStatus::Success
                } else {
                    SearchStatus::IterationsExhausted
                },
                queries: 5,
                winning_path_length: (i < 7).then_some(2),
                iterations: 1,
                error: None,
            })
            .collect();
        let report = assemble_report(
            rows,
            &SearchConfig::small(0),
            &synthetic_provider(0.5, 2),
            &CampaignConfig::new(0, 50),
        );
        assert_eq!(report.asr, Some(0.7));
    }

    #[test]
    fn empty_campaign_has_undefined_aggregates() {
        let report = run_campaign(
            &[],
            &SearchConfig::small(0),
            &synthetic_provider(0.5, 2),
            &CampaignConfig::new(0, 50),
        );
        assert!(report.rows.is_empty());
        assert_eq!(report.asr, None);
        assert_eq!(report.avg_queries_success, None);
    }

    #[test]
    fn behavior_rows_are_independent_of_subsetting() {
        let all = behaviors(10);
        let provider = synthetic_provider(0.6, 2);
        let config = SearchConfig::small(0);
        let campaign = CampaignConfig::new(42, 50);
        let full = run_campaign(&all, &config, &provider, &campaign);
        let subset: Vec<BehaviorRecord> = all
            .iter()
            .filter(|b| b.id != "b003" && b.id != "b007")
            .cloned()
            .collect();
        let partial = run_campaign(&subset, &config, &provider, &campaign);
        for row in &partial.rows {
            let original = full.rows.iter().find(|r| r.id == row.id).unwrap();
            assert_eq!(row, original);
        }
    }

    #[test]
    fn campaign_is_deterministic_across_workers() {
        let all = behaviors(8);
        let provider = synthetic_provider(0.6, 2);
        let config = SearchConfig::small(0);
        let mut serial = CampaignConfig::new(7, 50);
        serial.workers = 1;
        let mut parallel = CampaignConfig::new(7, 50);
        parallel.workers = 4;
        assert_eq!(
            run_campaign(&all, &config, &provider, &serial),
            run_campaign(&all, &config, &provider, &parallel)
        );
    }

    #[test]
    fn overall_asr_is_weighted_category_mean() {
        let all = behaviors(12);
        let provider = synthetic_provider(0.5, 2);
        let report = run_campaign(
            &all,
            &SearchConfig::small(0),
            &provider,
            &CampaignConfig::new(3, 40),
        );
        let weighted: f64 = report
            .per_category
            .iter()
            .map(|c| c.asr * c.behaviors as f64)
            .sum::<f64>()
            / report.rows.len() as f64;
        assert!((report.asr.unwrap() - weighted).abs() < 1e-12);
    }

    #[test]
    fn aggregates_partition_extremes() {
        let rows = vec![
            BehaviorRow {
                id: "a".into(),
                category: "wins".into(),
                status: SearchStatus::Success,
                queries: 4,
                winning_path_length: Some(2),
                iterations: 1,
                error: None,
            },
            BehaviorRow {
                id: "b".into(),
                category: "loses".into(),
                status: SearchStatus::IterationsExhausted,
                queries: 9,
                winning_path_length: None,
                iterations: 3,
                error: None,
            },
        ];
        let aggregates = aggregate_by_category(&rows);
        assert_eq!(aggregates.len(), 2);
        assert_eq!(aggregates[0].category, "wins");
        assert_eq!(aggregates[0].asr, 1.0);
        assert_eq!(aggregates[1].category, "loses");
        assert_eq!(aggregates[1].asr, 0.0);
        assert_eq!(aggregates[1].avg_queries_success, None);
    }

    #[test]
    fn single_category_table_equals_overall() {
        let all: Vec<BehaviorRecord> = behaviors(6)
            .into_iter()
            .map(|mut b| {
                b.category = "only".into();
                b
            })
            .collect();
        let report = run_campaign(
            &all,
            &SearchConfig::small(0),
            &synthetic_provider(0.7, 2),
            &CampaignConfig::new(1, 50),
        );
        assert_eq!(report.per_category.len(), 1);
        assert_eq!(Some(report.per_category[0].asr), report.asr);
        assert_eq!(
            report.per_category[0].avg_queries_success,
            report.avg_queries_success
        );
    }

    #[test]
    fn mismatched_behavior_shape_becomes_error_row() {
        let bad = vec![BehaviorRecord {
            id: "x".into(),
            category: "c".into(),
            goal: Some("a goal".into()),
            instance_ref: Some("also-a-ref".into()),
        }];
        let report = run_campaign(
            &bad,
            &SearchConfig::small(0),
            &synthetic_provider(0.5, 2),
            &CampaignConfig::new(0, 50),
        );
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].error.is_some());
        assert_eq!(report.asr, Some(0.0));
    }

    #[test]
    fn certain_chain_hits_bound_trivially() {
        let mut params = HittingTimeParams::reference(50);
        params.q = 1.0;
        params.threshold = 3;
        let report = hitting_time_experiment(&params).unwrap();
        assert!(report.pass);
        assert!(report.mean <= 3.0);
    }

    #[test]
    fn csv_round_trip_via_tempfile() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("behaviors.csv");
        std::fs::write(
            &path,
            "id,category,goal,instance_ref\nb1,phishing,,inst-1.oracle\nb2,malware,,inst-2.oracle\n",
        )
        .unwrap();
        let behaviors = load_behaviors_csv(&path).unwrap();
        assert_eq!(behaviors.len(), 2);
        assert_eq!(behaviors[0].id, "b1");
        assert_eq!(behaviors[0].goal, None);
        assert_eq!(behaviors[0].instance_ref.as_deref(), Some("inst-1.oracle"));
    }

    #[test]
    fn csv_header_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("behaviors.csv");
        std::fs::write(&path, "name,category\nb1,c\n").unwrap();
        assert!(matches!(
            load_behaviors_csv(&path),
            Err(HarnessError::BehaviorFile(_))
        ));
    }

    #[test]
    fn marginal_check_reference_band() {
        let report = oracle_marginal_check(0.5, 2, 2_000, 0.05).unwrap();
        assert!(report.pass, "{report:?}");
    }
}
