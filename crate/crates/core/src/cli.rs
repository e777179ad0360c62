//! Command-line entry point: instance generation, single searches, campaign
//! runs, baseline comparisons, trace replay and the statistical verification
//! suites.
//!
//! Exit codes: 0 success, 1 the search found nothing (reports are still
//! written), 2 usage or input error, 3 verification failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{bfs_search, random_search};
use crate::config::{OracleKind, RunConfigFile};
use crate::gen::{generate_instance, GenParams};
use crate::harness::{
    self, hitting_time_experiment, load_behaviors_csv, oracle_marginal_check,
    population_benefit_experiment, CampaignConfig, HittingTimeParams,
};
use crate::oracle::{OracleBudget, TabularOracle};
use crate::search::{run_search, SearchConfig};
use crate::trace::{
    execute_header, replay, ReplayVerdict, SearchStatus, TraceFile, TraceHeader,
    TRACE_FORMAT_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FOUND_NOTHING: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "beeline",
    version,
    about = "Swarm search over layered strategy graphs with budgeted oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random tabular instance, optionally with a planted optimum
    GenInstance(GenInstanceArgs),
    /// Run one search and print the trace summary
    Run(RunArgs),
    /// Run a behavior campaign and write the report files
    Campaign(CampaignArgs),
    /// Compare the colony search against BFS and random search
    Bench(BenchArgs),
    /// Re-execute a trace from its header and diff byte for byte
    Replay(ReplayArgs),
    /// Run the statistical verification suites
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleArg {
    Tabular,
    Synthetic,
    Chat,
}

/// Options shared by the run-style commands. Flags override the config file,
/// which overrides the built-in defaults.
#[derive(Args)]
struct CommonOpts {
    /// Run-config file: `key = value` lines, `#` comments, one include
    /// [default: built-in defaults]
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed for every seeded draw [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Hyperparameter preset [default: small]
    #[arg(long, value_enum, value_name = "NAME")]
    profile: Option<ProfileArg>,

    /// Oracle backend [default: synthetic]
    #[arg(long, value_enum, value_name = "KIND")]
    oracle: Option<OracleArg>,

    /// Query budget per search [default: 50]
    #[arg(long, value_name = "N")]
    budget: Option<u64>,

    /// Worker threads for campaigns [default: 1]
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Output directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfigFile, String> {
        let mut config = match &self.config {
            Some(path) => RunConfigFile::load(path).map_err(|e| e.to_string())?,
            None => RunConfigFile::default(),
        };
        if let Some(profile) = self.profile {
            let seed = config.search.rng_seed;
            config.search = match profile {
                ProfileArg::Small => SearchConfig::small(seed),
                ProfileArg::Large => SearchConfig::large(seed),
            };
        }
        if let Some(seed) = self.seed {
            config.search.rng_seed = seed;
        }
        if let Some(oracle) = self.oracle {
            config.oracle_kind = match oracle {
                OracleArg::Tabular => OracleKind::Tabular,
                OracleArg::Synthetic => OracleKind::Synthetic,
                OracleArg::Chat => OracleKind::Chat,
            };
        }
        if let Some(budget) = self.budget {
            config.budget_max_queries = budget;
        }
        if let Some(workers) = self.workers {
            config.campaign_workers = workers;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Args)]
struct GenInstanceArgs {
    /// Number of strategy vertices
    #[arg(long, value_name = "N")]
    strategies: u32,

    /// Progress threshold (success level)
    #[arg(long = "a", value_name = "A")]
    threshold: u32,

    /// Generator seed
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    seed: u64,

    /// Plant a guaranteed-reachable goal [default: false]
    #[arg(long, default_value_t = false)]
    solvable: bool,

    /// Planted optimum length; needs --solvable [default: the threshold]
    #[arg(long, value_name = "K")]
    opt_len: Option<u32>,

    /// Probability that a decoy transition advances
    #[arg(long, default_value_t = 0.3, value_name = "P")]
    density: f64,

    /// Allow progress to regress below earlier levels [default: false]
    #[arg(long, default_value_t = false)]
    non_monotone: bool,

    /// Output instance file; the sidecar goes next to it
    #[arg(long, default_value = "instance.oracle", value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonOpts,

    /// Tabular instance file, overriding the config
    #[arg(long, value_name = "FILE")]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    common: CommonOpts,

    /// Behavior CSV (`id,category,goal,instance_ref`), overriding the config
    #[arg(long, value_name = "FILE")]
    behaviors: Option<PathBuf>,

    /// Also write the radar/bar plot source CSVs [default: false]
    #[arg(long, default_value_t = false)]
    emit_plot_data: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonOpts,

    /// Tabular instance files to benchmark on
    #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
    instances: Vec<PathBuf>,

    /// Seeds per instance
    #[arg(long, default_value_t = 3, value_name = "N")]
    seeds: u64,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trace file produced by `run`; the header pins config, oracle and seed
    #[arg(long, value_name = "FILE")]
    trace: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    HittingTime,
    OracleMarginal,
    PopulationBenefit,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which suite to run
    #[arg(long, value_enum, default_value = "all", value_name = "SUITE")]
    suite: SuiteArg,

    /// Seeds for the search-based suites
    #[arg(long, default_value_t = 500, value_name = "N")]
    seeds: usize,

    /// Seeds for the oracle-marginal suite
    #[arg(long, default_value_t = 10_000, value_name = "N")]
    marginal_seeds: u64,

    /// Master seed offsetting every suite's derivations [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::GenInstance(args) => cmd_gen_instance(args),
        Command::Run(args) => cmd_run(args),
        Command::Campaign(args) => cmd_campaign(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn cmd_gen_instance(args: GenInstanceArgs) -> i32 {
    let params = GenParams {
        strategies: args.strategies,
        threshold: args.threshold,
        seed: args.seed,
        solvable: args.solvable,
        opt_len: args.opt_len.unwrap_or(args.threshold),
        density: args.density,
        monotone: !args.non_monotone,
    };
    let (instance, sidecar) = match generate_instance(&params) {
        Ok(pair) => pair,
        Err(e) => return fail(e),
    };
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            if let Err(e) = std::fs::create_dir_all(parent) {
                return fail(e);
            }
        }
    }
    if let Err(e) = instance.save(&args.out) {
        return fail(e);
    }
    let sidecar_path = args.out.with_extension("optimum.json");
    let sidecar_json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    if let Err(e) = std::fs::write(&sidecar_path, sidecar_json + "\n") {
        return fail(e);
    }
    println!("instance: {}", args.out.display());
    println!("sidecar:  {}", sidecar_path.display());
    if let Some(len) = sidecar.verified_optimum {
        println!("optimum:  {len}");
    } else {
        println!("optimum:  unreachable");
    }
    EXIT_OK
}

fn cmd_run(args: RunArgs) -> i32 {
    let mut config = match args.common.resolve() {
        Ok(config) => config,
        Err(e) => return fail(e),
    };
    if let Some(instance) = &args.instance {
        config.oracle_kind = OracleKind::Tabular;
        config.tabular_instance = Some(instance.clone());
    }
    let (oracle, set, spec) = match config.build_run_oracle() {
        Ok(parts) => parts,
        Err(e) => return fail(e),
    };
    let budget = OracleBudget::new(config.budget_max_queries);
    let trace = match run_search(&config.search, &set, oracle.as_ref(), &budget) {
        Ok(trace) => trace,
        Err(e) => return fail(e),
    };

    let summary = &trace.summary;
    println!("status:        {}", status_name(summary.status));
    println!("iterations:    {}", summary.iterations_run);
    println!(
        "best fitness:  {}",
        summary
            .best_fitness
            .map(|f| f.to_string())
            .unwrap_or_else(|| "-".into())
    );
    println!("total queries: {}", summary.total_queries);
    if let Some(path) = &summary.winning_path {
        println!("winning path:  v0->{}", join_steps(path));
    }

    let header = TraceHeader {
        format_version: TRACE_FORMAT_VERSION,
        config: config.search.clone(),
        oracle: spec,
        strategy_count: set.len() as u32,
        budget_max: config.budget_max_queries,
    };
    let file = TraceFile::new(header, trace);
    if let Err(e) = std::fs::create_dir_all(&config.output_dir) {
        return fail(e);
    }
    let trace_path = config.output_dir.join("trace.jsonl");
    if let Err(e) = std::fs::write(&trace_path, file.to_jsonl()) {
        return fail(e);
    }
    println!("trace:         {}", trace_path.display());
    if file.trace.summary.status == SearchStatus::Success {
        EXIT_OK
    } else {
        EXIT_FOUND_NOTHING
    }
}

fn status_name(status: SearchStatus) -> &'static str {
    match status {
        SearchStatus::Success => "success",
        SearchStatus::BudgetExhausted => "budget-exhausted",
        SearchStatus::IterationsExhausted => "iterations-exhausted",
    }
}

fn join_steps(steps: &[u32]) -> String {
    steps
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("->")
}

fn cmd_campaign(args: CampaignArgs) -> i32 {
    let mut config = match args.common.resolve() {
        Ok(config) => config,
        Err(e) => return fail(e),
    };
    if let Some(behaviors) = &args.behaviors {
        config.campaign_behaviors = Some(behaviors.clone());
    }
    let Some(behavior_path) = config.campaign_behaviors.clone() else {
        return fail("no behavior file: set campaign.behaviors or pass --behaviors");
    };
    let behaviors = match load_behaviors_csv(&behavior_path) {
        Ok(behaviors) => behaviors,
        Err(e) => return fail(e),
    };
    {
        let mut ids: Vec<&str> = behaviors.iter().map(|b| b.id.as_str()).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return fail("behavior ids must be unique within a campaign");
        }
    }
    let base = behavior_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let provider = match config.campaign_provider(&base) {
        Ok(provider) => provider,
        Err(e) => return fail(e),
    };
    let campaign = CampaignConfig {
        campaign_seed: config.search.rng_seed,
        budget_per_behavior: config.budget_max_queries,
        workers: config.campaign_workers,
        method: harness::CampaignMethod::Colony,
    };
    let report = harness::run_campaign(&behaviors, &config.search, &provider, &campaign);

    if let Err(e) = std::fs::create_dir_all(&config.output_dir) {
        return fail(e);
    }
    let rows_path = config.output_dir.join("rows.jsonl");
    let aggregates_path = config.output_dir.join("aggregates.csv");
    if let Err(e) = std::fs::write(&rows_path, harness::rows_to_jsonl(&report)) {
        return fail(e);
    }
    if let Err(e) = std::fs::write(&aggregates_path, harness::aggregates_to_csv(&report)) {
        return fail(e);
    }
    if args.emit_plot_data {
        let (asr_csv, queries_csv) = harness::plot_data_csvs(&report);
        if let Err(e) = std::fs::write(config.output_dir.join("plot_asr.csv"), asr_csv) {
            return fail(e);
        }
        if let Err(e) = std::fs::write(config.output_dir.join("plot_queries.csv"), queries_csv) {
            return fail(e);
        }
    }

    let successes = report
        .rows
        .iter()
        .filter(|r| r.status == SearchStatus::Success)
        .count();
    println!("behaviors:     {}", report.rows.len());
    println!(
        "asr:           {}",
        report
            .asr
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "-".into())
    );
    println!(
        "avg queries:   {}",
        report
            .avg_queries_success
            .map(|q| format!("{q:.2}"))
            .unwrap_or_else(|| "-".into())
    );
    println!("total queries: {}", report.total_queries);
    println!("rows:          {}", rows_path.display());
    println!("aggregates:    {}", aggregates_path.display());
    if successes > 0 {
        EXIT_OK
    } else {
        EXIT_FOUND_NOTHING
    }
}

fn cmd_bench(args: BenchArgs) -> i32 {
    let config = match args.common.resolve() {
        Ok(config) => config,
        Err(e) => return fail(e),
    };
    let mut csv = String::from(
        "instance,method,seed,status,success,path_len,queries,peak,wall_ms\n",
    );
    let mut rows_jsonl = String::new();
    let mut totals: std::collections::BTreeMap<&'static str, (u64, u64, u64)> =
        std::collections::BTreeMap::new(); // method -> (runs, successes, queries)

    for path in &args.instances {
        let instance = match crate::graph::Instance::load(path) {
            Ok(instance) => instance,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let oracle = match TabularOracle::new(&instance) {
            Ok(oracle) => oracle,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let graph = match instance.graph() {
            Ok(graph) => graph,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let set = instance.strategy_set();
        let name = path.display().to_string();

        for seed in 0..args.seeds {
            let run_seed = crate::hash::hash_bytes(config.search.rng_seed ^ seed, name.as_bytes());

            let started = std::time::Instant::now();
            let budget = OracleBudget::new(config.budget_max_queries);
            let colony =
                run_search(&config.search.clone().with_seed(run_seed), &set, &oracle, &budget);
            let wall = started.elapsed();
            let (status, success, path_len, queries) = match &colony {
                Ok(trace) => (
                    status_name(trace.summary.status),
                    trace.summary.status == SearchStatus::Success,
                    trace
                        .summary
                        .winning_path
                        .as_ref()
                        .map(|p| p.len())
                        .unwrap_or(0),
                    trace.summary.total_queries,
                ),
                Err(e) => return fail(e),
            };
            csv.push_str(&format!(
                "{name},colony,{seed},{status},{success},{path_len},{queries},{},{}\n",
                config.search.population_size,
                wall.as_millis()
            ));
            let entry = totals.entry("colony").or_default();
            entry.0 += 1;
            entry.1 += success as u64;
            entry.2 += queries;

            let budget = OracleBudget::new(config.budget_max_queries);
            let bfs = bfs_search(&graph, &budget);
            csv.push_str(&format!(
                "{name},bfs,{seed},{},{},{},{},{},{}\n",
                status_name(bfs.status),
                bfs.success,
                bfs.path.as_ref().map(|p| p.len()).unwrap_or(0),
                bfs.queries_used,
                bfs.peak_size,
                bfs.wall_clock.as_millis()
            ));
            rows_jsonl.push_str(&serde_json::to_string(&bfs).expect("row serializes"));
            rows_jsonl.push('\n');
            let entry = totals.entry("bfs").or_default();
            entry.0 += 1;
            entry.1 += bfs.success as u64;
            entry.2 += bfs.queries_used;

            use rand_chacha::rand_core::SeedableRng;
            let budget = OracleBudget::new(config.budget_max_queries);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(run_seed ^ 0x52414e44);
            let rnd = random_search(
                &set,
                &oracle,
                &budget,
                config.search.max_path_length,
                &mut rng,
            );
            csv.push_str(&format!(
                "{name},random,{seed},{},{},{},{},{},{}\n",
                status_name(rnd.status),
                rnd.success,
                rnd.path.as_ref().map(|p| p.len()).unwrap_or(0),
                rnd.queries_used,
                rnd.peak_size,
                rnd.wall_clock.as_millis()
            ));
            rows_jsonl.push_str(&serde_json::to_string(&rnd).expect("row serializes"));
            rows_jsonl.push('\n');
            let entry = totals.entry("random").or_default();
            entry.0 += 1;
            entry.1 += rnd.success as u64;
            entry.2 += rnd.queries_used;
        }
    }

    if let Err(e) = std::fs::create_dir_all(&config.output_dir) {
        return fail(e);
    }
    let csv_path = config.output_dir.join("bench.csv");
    if let Err(e) = std::fs::write(&csv_path, &csv) {
        return fail(e);
    }
    let rows_path = config.output_dir.join("bench_rows.jsonl");
    if let Err(e) = std::fs::write(&rows_path, &rows_jsonl) {
        return fail(e);
    }

    println!("method   runs  successes  mean-queries");
    for (method, (runs, successes, queries)) in &totals {
        println!(
            "{method:<8} {runs:<5} {successes:<10} {:.2}",
            *queries as f64 / *runs as f64
        );
    }
    println!("table: {}", csv_path.display());
    EXIT_OK
}

fn cmd_replay(args: ReplayArgs) -> i32 {
    let text = match std::fs::read_to_string(&args.trace) {
        Ok(text) => text,
        Err(e) => return fail(format!("{}: {e}", args.trace.display())),
    };
    match replay(&text) {
        Ok(ReplayVerdict::Identical) => {
            println!("identical");
            EXIT_OK
        }
        Ok(ReplayVerdict::Diverged { first_diff_line }) => {
            println!("diverged at line {first_diff_line}");
            EXIT_VERIFY_FAILED
        }
        Err(e) => fail(e),
    }
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    let base_seed = args.seed.unwrap_or(0);
    let mut all_pass = true;
    let wants = |suite: SuiteArg| {
        matches!(args.suite, SuiteArg::All)
            || std::mem::discriminant(&args.suite) == std::mem::discriminant(&suite)
    };

    if wants(SuiteArg::HittingTime) {
        let mut params = HittingTimeParams::reference(args.seeds);
        params.seed ^= base_seed;
        match hitting_time_experiment(&params) {
            Ok(report) => {
                all_pass &= report.pass;
                println!(
                    "hitting-time: {} (mean {:.3}, 99% CI upper {:.3} vs bound {:.2}, {}/{} seeds)",
                    if report.pass { "PASS" } else { "FAIL" },
                    report.mean,
                    report.ci99_upper,
                    report.bound,
                    report.successes,
                    report.n_seeds
                );
            }
            Err(e) => {
                all_pass = false;
                println!("hitting-time: FAIL ({e})");
            }
        }
    }

    if wants(SuiteArg::OracleMarginal) {
        match oracle_marginal_check(0.5, 2, args.marginal_seeds, 0.02) {
            Ok(report) => {
                all_pass &= report.pass;
                let worst = report
                    .per_level
                    .iter()
                    .map(|(_, freq)| (freq - report.q).abs())
                    .fold(0.0f64, f64::max);
                println!(
                    "oracle-marginal: {} (max |freq - q| {:.4} vs band {:.2})",
                    if report.pass { "PASS" } else { "FAIL" },
                    worst,
                    report.band
                );
            }
            Err(e) => {
                all_pass = false;
                println!("oracle-marginal: FAIL ({e})");
            }
        }
    }

    if wants(SuiteArg::PopulationBenefit) {
        let mut params = HittingTimeParams::reference(args.seeds);
        params.seed ^= base_seed.wrapping_add(1);
        match population_benefit_experiment(&params, 10, 1) {
            Ok(report) => {
                all_pass &= report.pass;
                println!(
                    "population-benefit: {} (l=10 mean {:.3} vs l=1 mean {:.3}, t {:.2}, {} pairs)",
                    if report.pass { "PASS" } else { "FAIL" },
                    report.mean_large,
                    report.mean_small,
                    report.t_statistic,
                    report.pairs
                );
            }
            Err(e) => {
                all_pass = false;
                println!("population-benefit: FAIL ({e})");
            }
        }
    }

    if all_pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

/// Round-trips a freshly produced trace through the replay path; used by the
/// replay smoke test and handy for doctests of the whole pipeline.
pub fn self_replay_check(header: &TraceHeader) -> Result<bool, crate::trace::TraceError> {
    let file = execute_header(header)?;
    Ok(matches!(
        replay(&file.to_jsonl())?,
        ReplayVerdict::Identical
    ))
}
