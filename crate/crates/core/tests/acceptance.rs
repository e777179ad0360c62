//! Acceptance suite: one test per release criterion, each printing a
//! `[acceptance] criterion N (<name>): PASS` line (run with `--nocapture`
//! to see them). Every tolerance is pinned here, in code.
//!
//! The whole suite is seeded and offline: no test reads entropy or the
//! network, so a pass is reproducible bit for bit.

use std::time::Instant;

use beeline::baselines::{bfs_search, random_search};
use beeline::gen::{generate_instance, GenParams};
use beeline::graph::{Instance, LayeredStateGraph, Path, StrategySet, Vertex};
use beeline::harness::{
    hitting_time_experiment, population_benefit_experiment, run_campaign, BehaviorRecord,
    CampaignConfig, CampaignMethod, HittingTimeParams, OracleProvider,
};
use beeline::oracle::{
    Cue, FitnessRecord, Oracle, OracleBudget, OracleError, SyntheticOracle,
    SyntheticOracleConfig, TabularOracle,
};
use beeline::search::{run_search, SearchConfig};
use beeline::stats::{paired_less_than, Z_95};
use beeline::trace::{
    execute_header, replay, OracleSpec, ReplayVerdict, SearchStatus, TraceHeader,
    TRACE_FORMAT_VERSION,
};

/// The 50 reference instances: 4..=6 strategies, thresholds 3 and 4, decoy
/// density 0.7, optimum planted at the threshold.
fn reference_instances() -> Vec<(Instance, u32)> {
    (0..50u64)
        .map(|i| {
            let mut params = GenParams::new(4 + (i % 3) as u32, 3 + (i % 2) as u32, 3_000 + i);
            params.solvable = true;
            params.opt_len = params.threshold;
            params.density = 0.7;
            let (instance, sidecar) = generate_instance(&params).expect("generation succeeds");
            (instance, sidecar.verified_optimum.expect("planted"))
        })
        .collect()
}

/// Brute-force optimum by iterative deepening over raw transition folds; no
/// queue, no visited set, nothing shared with the BFS under test.
fn enumerated_optimum(graph: &LayeredStateGraph, cap: usize) -> Option<usize> {
    let n = graph.strategy_count();
    let a = graph.threshold();
    fn extend(graph: &LayeredStateGraph, vertex: Vertex, level: u32, depth: usize) -> bool {
        if depth == 0 {
            return false;
        }
        for u in 0..graph.strategy_count() {
            let next = graph.transition(vertex, level, u);
            if next == graph.threshold() {
                return true;
            }
            // Only the terminal step may "win", so recurse on depth - 1.
            if depth > 1 && extend(graph, Vertex::Strategy(u), next, depth - 1) {
                return true;
            }
        }
        false
    }
    let _ = (n, a);
    (1..=cap).find(|&len| extend(graph, Vertex::Origin, 0, len))
}

#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    let instances = reference_instances();
    let mut agreements = 0;
    for (instance, planted) in &instances {
        let graph = instance.graph().unwrap();
        let budget = OracleBudget::new(1_000_000);
        let bfs = bfs_search(&graph, &budget);
        let bfs_len = bfs.path.as_ref().map(|p| p.len()).expect("solvable");
        let brute = enumerated_optimum(&graph, 6).expect("solvable");
        assert_eq!(bfs_len, brute, "BFS disagrees with enumeration");
        assert_eq!(bfs_len as u32, *planted, "planted optimum drifted");
        agreements += 1;
    }
    let elapsed = started.elapsed();
    assert_eq!(agreements, 50);
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "took {elapsed:?}, limit 10 s"
    );
    println!(
        "[acceptance] criterion 1 (oracle equivalence): PASS (50/50 agree, {:.2?})",
        elapsed
    );
}

#[test]
fn criterion_2_colony_optimality_gap() {
    let started = Instant::now();
    let instances = reference_instances();
    let mut successes = 0u32;
    let mut runs = 0u32;
    for (idx, (instance, optimum)) in instances.iter().enumerate() {
        let oracle = TabularOracle::new(instance).unwrap();
        let set = instance.strategy_set();
        for seed in 0..10u64 {
            runs += 1;
            let config = SearchConfig::large(7_000 + idx as u64 * 10 + seed);
            let budget = OracleBudget::new(2_000);
            let trace = run_search(&config, &set, &oracle, &budget).unwrap();
            if trace.summary.status == SearchStatus::Success {
                successes += 1;
                let winning = trace.summary.winning_path.unwrap().len() as u32;
                assert!(
                    winning >= *optimum,
                    "instance {idx} seed {seed}: winning {winning} beat optimum {optimum}"
                );
                assert!(
                    winning <= optimum + 2,
                    "instance {idx} seed {seed}: winning {winning} above optimum {optimum} + 2"
                );
            }
        }
    }
    let elapsed = started.elapsed();
    let rate = f64::from(successes) / f64::from(runs);
    assert!(
        rate >= 0.90,
        "colony succeeded on {successes}/{runs} pairs ({rate:.3})"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}, limit 2 min");
    println!(
        "[acceptance] criterion 2 (colony optimality gap): PASS ({successes}/{runs} = {rate:.3}, {:.2?})",
        elapsed
    );
}

#[test]
fn criterion_3_convergence_bound() {
    let started = Instant::now();
    let params = HittingTimeParams::reference(500);
    assert_eq!(params.q, 0.5);
    assert_eq!(params.eta, 1);
    assert_eq!(params.threshold, 2);
    assert_eq!(params.population_size, 5);
    assert!((params.bound() - 4.0).abs() < 1e-12);
    let report = hitting_time_experiment(&params).unwrap();
    let elapsed = started.elapsed();
    assert!(
        report.pass,
        "99% CI upper {:.3} exceeds bound {:.2}",
        report.ci99_upper, report.bound
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, limit 1 min");
    println!(
        "[acceptance] criterion 3 (convergence bound): PASS (mean {:.3}, CI99 upper {:.3} <= {:.1}, {:.2?})",
        report.mean, report.ci99_upper, report.bound, elapsed
    );
}

#[test]
fn criterion_4_population_benefit() {
    let params = HittingTimeParams::reference(500);
    let report = population_benefit_experiment(&params, 10, 1).unwrap();
    assert!(
        report.pass,
        "large population not faster: l=10 mean {:.3}, l=1 mean {:.3}, t {:.2}",
        report.mean_large, report.mean_small, report.t_statistic
    );
    assert!(report.mean_large < report.mean_small);
    println!(
        "[acceptance] criterion 4 (population benefit): PASS (l=10 {:.3} < l=1 {:.3} at 99%, t {:.2})",
        report.mean_large, report.mean_small, report.t_statistic
    );
}

#[test]
fn criterion_5_budget_exactness() {
    let mut checked = 0u32;
    // Colony runs over both oracle kinds and a spread of budgets, including
    // ones tight enough to cut evaluations mid-path.
    for seed in 0..12u64 {
        let mut params = GenParams::new(4 + (seed % 3) as u32, 3, 9_000 + seed);
        params.solvable = true;
        params.density = 0.5;
        let (instance, _) = generate_instance(&params).unwrap();
        let oracle = TabularOracle::new(&instance).unwrap();
        let set = instance.strategy_set();
        for budget_max in [3, 7, 20, 200] {
            let config = SearchConfig::large(seed * 31 + budget_max);
            let budget = OracleBudget::new(budget_max);
            let trace = run_search(&config, &set, &oracle, &budget).unwrap();
            assert_eq!(
                trace.summary.total_queries,
                budget.used(),
                "trace total diverged from budget"
            );
            assert!(budget.used() <= budget.max_queries());
            let last = trace.iterations.last().unwrap();
            assert_eq!(last.queries_used, trace.summary.total_queries);
            checked += 1;
        }
    }
    for seed in 0..12u64 {
        let oracle =
            SyntheticOracle::new(SyntheticOracleConfig::uniform(seed, 0.5, 1, 3)).unwrap();
        let set = StrategySet::with_count(5);
        for budget_max in [4, 15, 60] {
            let config = SearchConfig::small(seed * 17 + budget_max);
            let budget = OracleBudget::new(budget_max);
            let trace = run_search(&config, &set, &oracle, &budget).unwrap();
            assert_eq!(trace.summary.total_queries, budget.used());
            assert!(budget.used() <= budget.max_queries());
            checked += 1;

            // The baselines share the accounting contract.
            let budget = OracleBudget::new(budget_max);
            let mut rng = <rand_chacha::ChaCha8Rng as rand_chacha::rand_core::SeedableRng>::seed_from_u64(seed);
            let result = random_search(&set, &oracle, &budget, 3, &mut rng);
            assert_eq!(result.queries_used, budget.used());
            assert!(budget.used() <= budget.max_queries());
            checked += 1;
        }
    }
    println!(
        "[acceptance] criterion 5 (budget exactness): PASS ({checked} runs, zero tolerance)"
    );
}

#[test]
fn criterion_6_determinism_replay() {
    use rand::Rng;
    let mut rng =
        <rand_chacha::ChaCha8Rng as rand_chacha::rand_core::SeedableRng>::seed_from_u64(0xD0_0D);
    let dir = tempfile::tempdir().unwrap();
    let mut identical = 0;
    for case in 0..20u64 {
        // Randomized (config, instance, seed) triple.
        let population = rng.random_range(2..=10);
        let max_len = rng.random_range(3..=6);
        let config = SearchConfig {
            population_size: population,
            max_iterations: rng.random_range(1..=6),
            stagnation_threshold: rng.random_range(1..=3),
            tournament_size: rng.random_range(1..=population),
            selection_count: rng.random_range(1..=population),
            mutation_split: rng.random_range(0.0..=1.0),
            max_path_length: max_len,
            init_length_cap: rng.random_range(1..=3.min(max_len)),
            rng_seed: rng.random(),
        };
        let (oracle_spec, strategy_count) = if case % 2 == 0 {
            let mut params =
                GenParams::new(rng.random_range(3..=6), rng.random_range(2..=4), rng.random());
            params.solvable = true;
            params.density = 0.5;
            let (instance, _) = generate_instance(&params).unwrap();
            let path = dir.path().join(format!("inst-{case}.oracle"));
            instance.save(&path).unwrap();
            (
                OracleSpec::Tabular {
                    instance: path.display().to_string(),
                },
                params.strategies,
            )
        } else {
            let threshold = rng.random_range(2..=4);
            let config = SyntheticOracleConfig {
                seed: rng.random(),
                per_level_success_prob: (0..threshold)
                    .map(|_| rng.random_range(0.2..=1.0))
                    .collect(),
                step_increment: rng.random_range(1..=2),
                threshold,
                noise_prob: rng.random_range(0.0..0.3),
            };
            (OracleSpec::Synthetic { config }, rng.random_range(3..=6))
        };
        let header = TraceHeader {
            format_version: TRACE_FORMAT_VERSION,
            config,
            oracle: oracle_spec,
            strategy_count,
            budget_max: rng.random_range(10..=300),
        };
        let text = execute_header(&header).unwrap().to_jsonl();
        match replay(&text).unwrap() {
            ReplayVerdict::Identical => identical += 1,
            ReplayVerdict::Diverged { first_diff_line } => {
                panic!("case {case} diverged at line {first_diff_line}")
            }
        }
    }
    assert_eq!(identical, 20);
    println!("[acceptance] criterion 6 (determinism/replay): PASS (20/20 byte-identical)");
}

/// The calibrated efficiency campaign: 100 synthetic behaviors, constant
/// q = 0.6 over threshold 4, step increment 2 (the small profile's
/// three-turn paths need two advancing turns to cross the threshold).
fn efficiency_campaign(method: CampaignMethod, campaign_seed: u64) -> beeline::harness::CampaignReport {
    let behaviors: Vec<BehaviorRecord> = (0..100)
        .map(|i| BehaviorRecord {
            id: format!("world-{i:03}"),
            category: format!("cat-{}", i % 10),
            goal: None,
            instance_ref: Some("synthetic".into()),
        })
        .collect();
    let provider = OracleProvider::Synthetic {
        template: SyntheticOracleConfig {
            seed: 0,
            per_level_success_prob: vec![0.6; 4],
            step_increment: 2,
            threshold: 4,
            noise_prob: 0.0,
        },
        strategy_count: 4,
    };
    let campaign = CampaignConfig {
        campaign_seed,
        budget_per_behavior: 50,
        workers: 2,
        method,
    };
    run_campaign(&behaviors, &SearchConfig::small(0), &provider, &campaign)
}

#[test]
fn criterion_7_efficiency_headroom() {
    let started = Instant::now();
    let mut colony_queries = Vec::new();
    let mut random_queries = Vec::new();
    let mut colony_success = 0usize;
    let mut colony_total = 0usize;
    let mut colony_sum = 0.0;
    for campaign_seed in 1..=5u64 {
        let colony = efficiency_campaign(CampaignMethod::Colony, campaign_seed);
        let random = efficiency_campaign(CampaignMethod::Random, campaign_seed);
        colony_total += colony.rows.len();
        for (c, r) in colony.rows.iter().zip(&random.rows) {
            assert_eq!(c.id, r.id);
            if c.status == SearchStatus::Success {
                colony_success += 1;
                colony_sum += c.queries as f64;
            }
            if c.status == SearchStatus::Success && r.status == SearchStatus::Success {
                colony_queries.push(c.queries as f64);
                random_queries.push(r.queries as f64);
            }
        }
    }
    let colony_avg = colony_sum / colony_success as f64;
    let asr = colony_success as f64 / colony_total as f64;
    let (mean_diff, t, significant) = paired_less_than(&colony_queries, &random_queries, Z_95);

    // Bands for the reference campaign, frozen from the seeded runs.
    assert!(asr >= 0.90, "campaign ASR {asr:.3} fell below 0.90");
    assert!(
        colony_avg < 0.6 * 50.0,
        "avg queries per success {colony_avg:.2} not below 30"
    );
    assert!(
        significant && mean_diff < 0.0,
        "colony not cheaper than random at 95%: diff {mean_diff:.3}, t {t:.2}, {} pairs",
        colony_queries.len()
    );
    let elapsed = started.elapsed();
    println!(
        "[acceptance] criterion 7 (efficiency headroom): PASS (avg {colony_avg:.2} < 30, \
         diff {mean_diff:.2} queries, t {t:.2} over {} pairs, ASR {asr:.3}, {:.2?})",
        colony_queries.len(),
        elapsed
    );
}

/// Tabular oracle that asserts the engine only ever evaluates genuinely
/// stale suffixes: no call may cover an already-scored full path.
struct CoherenceOracle {
    inner: TabularOracle,
    max_len: usize,
    population: usize,
}

impl Oracle for CoherenceOracle {
    fn threshold(&self) -> u32 {
        self.inner.threshold()
    }
    fn evaluate(
        &self,
        path: &Path,
        cached: usize,
        cue: Option<&Cue>,
        budget: &OracleBudget,
    ) -> Result<FitnessRecord, OracleError> {
        assert!(
            cached < path.len(),
            "engine re-evaluated a fully scored path"
        );
        assert!((1..=self.max_len).contains(&path.len()), "length bounds");
        let _ = self.population;
        let record = self.inner.evaluate(path, cached, cue, budget)?;
        assert_eq!(
            record.cue.is_some(),
            record.level.carries_cue(),
            "cue/level coupling"
        );
        Ok(record)
    }
}

#[test]
fn criterion_8_invariant_suite() {
    // Absorption: extending a threshold-level prefix never changes it.
    let mut params = GenParams::new(5, 3, 4_242);
    params.solvable = true;
    params.density = 0.6;
    let (instance, _) = generate_instance(&params).unwrap();
    let graph = instance.graph().unwrap();
    let winning = beeline::graph::shortest_success_path(&graph).unwrap();
    for u in 0..5 {
        let mut extended = winning.clone();
        extended.push(u);
        let level = beeline::graph::prefix_progress(&graph, &extended).unwrap();
        assert_eq!(level.0, 3, "absorption violated");
    }

    // Engine sweep: population constancy, length bounds, stale-only
    // evaluation, cue/level coupling and monotone best over many seeds.
    let oracle = CoherenceOracle {
        inner: TabularOracle::new(&instance).unwrap(),
        max_len: 5,
        population: 8,
    };
    let set = instance.strategy_set();
    for seed in 0..40u64 {
        let mut config = SearchConfig::large(seed);
        config.population_size = 8;
        config.selection_count = 4;
        let budget = OracleBudget::new(500);
        let trace = run_search(&config, &set, &oracle, &budget).unwrap();
        let mut prev_best = 0u8;
        let rounds = trace.iterations.len();
        for (i, record) in trace.iterations.iter().enumerate() {
            let scored: u32 = record.histogram.iter().sum();
            if i + 1 < rounds || trace.summary.status == SearchStatus::IterationsExhausted {
                // Population size is constant; only the terminal round of an
                // early-terminated run may leave trailing slots unscored.
                assert_eq!(scored as usize, 8, "population drifted");
            } else {
                assert!(scored as usize <= 8, "population grew");
            }
            let best = record.best_so_far.unwrap_or(0);
            assert!(best >= prev_best, "best-so-far decreased");
            prev_best = best;
        }
        assert_eq!(trace.summary.total_queries, budget.used());
    }

    // Aggregate consistency and behavior independence on a small campaign.
    let behaviors: Vec<BehaviorRecord> = (0..12)
        .map(|i| BehaviorRecord {
            id: format!("b{i:02}"),
            category: format!("cat{}", i % 4),
            goal: None,
            instance_ref: Some("synthetic".into()),
        })
        .collect();
    let provider = OracleProvider::Synthetic {
        template: SyntheticOracleConfig::uniform(0, 0.6, 1, 2),
        strategy_count: 4,
    };
    let campaign = CampaignConfig::new(99, 40);
    let full = run_campaign(&behaviors, &SearchConfig::small(0), &provider, &campaign);
    let weighted: f64 = full
        .per_category
        .iter()
        .map(|c| c.asr * c.behaviors as f64)
        .sum::<f64>()
        / full.rows.len() as f64;
    assert!((full.asr.unwrap() - weighted).abs() < 1e-12, "aggregate consistency");
    let subset: Vec<BehaviorRecord> = behaviors[3..9].to_vec();
    let partial = run_campaign(&subset, &SearchConfig::small(0), &provider, &campaign);
    for row in &partial.rows {
        assert_eq!(
            row,
            full.rows.iter().find(|r| r.id == row.id).unwrap(),
            "behavior independence"
        );
    }

    println!("[acceptance] criterion 8 (invariant suite): PASS");
}
