//! Golden-file test: the committed campaign fixture must reproduce its
//! report artifacts byte for byte. Any drift in seeding, aggregation order
//! or number formatting shows up here first.

use std::path::PathBuf;

use beeline::harness::{
    aggregates_to_csv, load_behaviors_csv, plot_data_csvs, rows_to_jsonl, run_campaign,
    CampaignConfig, OracleProvider,
};
use beeline::search::SearchConfig;

fn fixture_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/campaign"))
}

fn reference_report() -> beeline::harness::CampaignReport {
    let dir = fixture_dir();
    let behaviors = load_behaviors_csv(dir.join("behaviors.csv")).unwrap();
    let provider = OracleProvider::Tabular { base_dir: dir };
    let mut campaign = CampaignConfig::new(2024, 60);
    campaign.workers = 2;
    run_campaign(&behaviors, &SearchConfig::small(0), &provider, &campaign)
}

#[test]
fn aggregates_csv_matches_golden() {
    let report = reference_report();
    let golden =
        std::fs::read_to_string(fixture_dir().join("golden_aggregates.csv")).unwrap();
    assert_eq!(aggregates_to_csv(&report), golden);
}

#[test]
fn rows_jsonl_matches_golden() {
    let report = reference_report();
    let golden = std::fs::read_to_string(fixture_dir().join("golden_rows.jsonl")).unwrap();
    assert_eq!(rows_to_jsonl(&report), golden);
}

#[test]
fn plot_data_matches_golden() {
    let report = reference_report();
    let (asr, queries) = plot_data_csvs(&report);
    let golden_asr =
        std::fs::read_to_string(fixture_dir().join("golden_plot_asr.csv")).unwrap();
    let golden_queries =
        std::fs::read_to_string(fixture_dir().join("golden_plot_queries.csv")).unwrap();
    assert_eq!(asr, golden_asr);
    assert_eq!(queries, golden_queries);
}

#[test]
fn report_is_reproducible() {
    assert_eq!(reference_report(), reference_report());
}
