//! Drives the `aif` binary and the validator against copies of the bundled fixture.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aif_cli::config::LoadedConfig;
use aif_cli::validate::validate_inputs;
use aif_core::analytics::read_monthly_csv;
use aif_core::expansion::ExpansionResult;
use aif_core::index::{read_index_csv, Frequency, IndicatorHierarchy};
use tempfile::TempDir;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini")
}

/// Copies the fixture inputs (not its outputs) into a fresh directory.
fn fixture_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture_dir()).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
        }
    }
    dir
}

fn aif(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aif"))
        .args(args)
        .arg("--config")
        .arg(dir.join("config.json"))
        .env("AIF_LOG", "error")
        .output()
        .unwrap()
}

fn edit(path: &Path, from: &str, to: &str) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from:?} not in {}", path.display());
    fs::write(path, text.replacen(from, to, 1)).unwrap();
}

#[test]
fn fixture_inputs_validate_cleanly() {
    let cfg = LoadedConfig::load(&fixture_dir().join("config.json")).unwrap();
    assert_eq!(validate_inputs(&cfg), vec![]);
}

#[test]
fn unknown_polarity_is_one_located_diagnostic() {
    let dir = fixture_copy();
    edit(&dir.path().join("hierarchy.csv"), "贷款,positive", "贷款,bidirectional");
    let cfg = LoadedConfig::load(&dir.path().join("config.json")).unwrap();
    let diags = validate_inputs(&cfg);
    assert_eq!(diags.len(), 1, "{diags:?}");
    let d = &diags[0];
    assert!(d.file.ends_with("hierarchy.csv"), "{d}");
    assert_eq!(d.row, Some(8));
    assert_eq!(d.column.as_deref(), Some("polarity"));
    assert!(d.message.contains("bidirectional"));

    // `all` validates every input before running anything
    let out = aif(dir.path(), &["all"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("out").exists());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("hierarchy.csv:row 8:column polarity"), "{stderr}");
}

#[test]
fn duplicate_entry_across_secondaries_is_one_diagnostic() {
    let dir = fixture_copy();
    edit(&dir.path().join("hierarchy.csv"), "外商投资,外商投资,外资,positive", "外商投资,外商投资,铁路,positive");
    let cfg = LoadedConfig::load(&dir.path().join("config.json")).unwrap();
    let diags = validate_inputs(&cfg);
    assert_eq!(diags.len(), 1, "{diags:?}");
    assert!(diags[0].message.contains("铁路"), "{}", diags[0]);
}

#[test]
fn decreasing_panel_dates_are_reported() {
    let dir = fixture_copy();
    let panel = dir.path().join("panel.csv");
    let text = fs::read_to_string(&panel).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    // national/基建 on day 2 moved before day 1
    let day2 = lines.iter().position(|l| l.starts_with("2020-06-02,基建,national")).unwrap();
    let row = lines.remove(day2);
    lines.insert(1, row);
    fs::write(&panel, lines.join("\n") + "\n").unwrap();
    let cfg = LoadedConfig::load(&dir.path().join("config.json")).unwrap();
    let diags = validate_inputs(&cfg);
    assert!(!diags.is_empty());
    assert!(diags.iter().all(|d| d.file.ends_with("panel.csv")), "{diags:?}");
}

#[test]
fn stage_without_its_inputs_exits_with_dependency_code() {
    let dir = fixture_copy();
    let out = aif(dir.path(), &["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("expand"), "{stderr}");
    assert!(!dir.path().join("out/analysis.json").exists());
}

#[test]
fn usage_errors_do_not_use_the_dependency_code() {
    let dir = fixture_copy();
    let out = aif(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn knob_out_of_range_is_a_schema_error() {
    let dir = fixture_copy();
    edit(&dir.path().join("config.json"), "\"top_k\": 50", "\"top_k\": 0");
    let out = aif(dir.path(), &["pretrain"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("knobs.top_k"));
}

#[test]
fn pipeline_outputs_reparse_and_reruns_match() {
    let dir = fixture_copy();
    let out = aif(dir.path(), &["all"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    let read = |name: &str| fs::read(o.join(name)).unwrap();

    for (name, freq) in [
        ("index_daily.csv", Frequency::Daily),
        ("index_monthly.csv", Frequency::Monthly),
        ("index_annual.csv", Frequency::Annual),
        ("dimension_monthly.csv", Frequency::Monthly),
        ("dimension_annual.csv", Frequency::Annual),
        ("region_annual.csv", Frequency::Annual),
    ] {
        let series = read_index_csv(read(name).as_slice(), freq).unwrap();
        let mut again = Vec::new();
        let cols: Vec<(String, &_)> = series.iter().map(|(n, s)| (n.clone(), s)).collect();
        aif_core::index::write_index_csv(&mut again, &cols).unwrap();
        assert_eq!(again, read(name), "{name} does not round-trip");
    }
    let expansion = ExpansionResult::read_csv(read("expansion.csv").as_slice()).unwrap();
    let hierarchy = IndicatorHierarchy::read_csv(read("expanded_hierarchy.csv").as_slice()).unwrap();
    assert_eq!(expansion.rows.len(), hierarchy.entry_names().len());
    let plot = fs::read_to_string(o.join("plot_index_vs_investment.csv")).unwrap();
    assert!(plot.starts_with("month,index,investment\n"));
    let investment = read_monthly_csv(fs::read(dir.path().join("investment.csv")).unwrap().as_slice()).unwrap();
    assert!(plot.lines().count() > investment.len());
    let report: serde_json::Value = serde_json::from_slice(&read("report.json")).unwrap();
    assert!(report["regression"]["after_expansion"]["r_squared"].is_f64());

    // A single stage rerun reproduces its own outputs byte for byte.
    let before = read("index_monthly.csv");
    let rerun = aif(dir.path(), &["build-index"]);
    assert!(rerun.status.success());
    assert_eq!(before, read("index_monthly.csv"));

    // Another seed changes the encoder but keeps the manifest consistent.
    let other = aif(dir.path(), &["pretrain", "--seed", "7"]);
    assert!(other.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&read("manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 7);
}
