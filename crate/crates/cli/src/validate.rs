use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use aif_core::index::{parse_date, GapPolicy, Polarity, YearMonth};

use crate::config::LoadedConfig;
use crate::error::Diagnostic;
use crate::Stage;

/// Cap on diagnostics reported per file.
const MAX_PER_FILE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Input {
    Corpus,
    Lexicon,
    Stopwords,
    Finetune,
    Hierarchy,
    Panel,
    Investment,
    Availability,
    Exclusions,
}

fn inputs_for(stage: Stage) -> &'static [Input] {
    use Input::*;
    match stage {
        Stage::Pretrain => &[Corpus, Lexicon],
        Stage::Finetune => &[Finetune],
        Stage::Expand => &[Corpus, Lexicon, Stopwords, Hierarchy, Availability, Exclusions],
        Stage::BuildIndex => &[Panel],
        Stage::Analyze => &[Panel, Investment, Hierarchy],
        Stage::Report => &[Investment],
        Stage::All => &[Corpus, Lexicon, Stopwords, Finetune, Hierarchy, Panel, Investment, Availability, Exclusions],
    }
}

/// Checks every input the whole pipeline reads. An empty list means valid.
pub fn validate_inputs(cfg: &LoadedConfig) -> Vec<Diagnostic> {
    validate_for(cfg, Stage::All)
}

/// Checks the config knobs and the inputs `stage` reads.
pub fn validate_for(cfg: &LoadedConfig, stage: Stage) -> Vec<Diagnostic> {
    let mut out = cfg.config.check_knobs(&cfg.path);
    let p = &cfg.config.paths;
    for input in inputs_for(stage) {
        match input {
            Input::Corpus => out.extend(check_text(&cfg.resolve(&p.corpus), true)),
            Input::Lexicon => out.extend(check_text(&cfg.resolve(&p.lexicon), true)),
            Input::Stopwords => out.extend(check_text(&cfg.resolve(&p.stopwords), false)),
            Input::Availability => out.extend(check_text(&cfg.resolve(&p.availability), false)),
            Input::Exclusions => out.extend(check_text(&cfg.resolve(&p.exclusions), false)),
            Input::Finetune => out.extend(check_finetune(&cfg.resolve(&p.finetune))),
            Input::Hierarchy => out.extend(check_hierarchy(&cfg.resolve(&p.hierarchy))),
            Input::Investment => out.extend(check_investment(&cfg.resolve(&p.investment))),
            Input::Panel => {
                if p.panel.is_empty() {
                    out.push(Diagnostic::new(&cfg.path, None, Some("paths.panel"), "no panel files listed"));
                }
                let mut regions = BTreeSet::new();
                for file in &p.panel {
                    out.extend(check_panel(&cfg.resolve(file), cfg.config.knobs.gap_policy, &mut regions));
                }
                let national = &cfg.config.knobs.national_region;
                if !p.panel.is_empty() && !regions.is_empty() && !regions.contains(national) {
                    out.push(Diagnostic::new(
                        &cfg.resolve(&p.panel[0]),
                        None,
                        Some("region"),
                        format!("no rows for the national region {national:?}"),
                    ));
                }
            }
        }
    }
    out
}

fn read(path: &Path) -> Result<String, Diagnostic> {
    std::fs::read(path)
        .map_err(|e| Diagnostic::new(path, None, None, format!("cannot read: {e}")))
        .and_then(|b| String::from_utf8(b).map_err(|e| Diagnostic::new(path, None, None, format!("not UTF-8: {e}"))))
}

fn check_text(path: &Path, non_empty: bool) -> Vec<Diagnostic> {
    match read(path) {
        Err(d) => vec![d],
        Ok(text) if non_empty && text.trim().is_empty() => vec![Diagnostic::new(path, None, None, "file is empty")],
        Ok(_) => Vec::new(),
    }
}

struct Collector<'a> {
    path: &'a Path,
    out: Vec<Diagnostic>,
}

impl<'a> Collector<'a> {
    fn new(path: &'a Path) -> Self {
        Collector { path, out: Vec::new() }
    }

    fn push(&mut self, row: Option<usize>, column: Option<&str>, message: impl Into<String>) {
        if self.out.len() < MAX_PER_FILE {
            self.out.push(Diagnostic::new(self.path, row, column, message));
        }
    }
}

fn csv_records(text: &str, expected: &[&str], c: &mut Collector<'_>) -> Vec<(usize, csv::StringRecord)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    match rdr.headers() {
        Ok(h) => {
            let got: Vec<&str> = h.iter().map(str::trim).collect();
            if got != expected {
                c.push(Some(1), None, format!("expected header {expected:?}, found {got:?}"));
                return Vec::new();
            }
        }
        Err(e) => {
            c.push(Some(1), None, e.to_string());
            return Vec::new();
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        match rec {
            Ok(r) if r.len() == expected.len() => rows.push((row, r)),
            Ok(r) => c.push(Some(row), None, format!("expected {} fields, found {}", expected.len(), r.len())),
            Err(e) => c.push(Some(row), None, e.to_string()),
        }
    }
    rows
}

fn check_finetune(path: &Path) -> Vec<Diagnostic> {
    let text = match read(path) {
        Ok(t) => t,
        Err(d) => return vec![d],
    };
    let mut c = Collector::new(path);
    let mut labels = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() || (i == 0 && line.split('\t').next().map(str::trim) == Some("tag")) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            c.push(Some(row), None, format!("expected 3 tab-separated fields, found {}", fields.len()));
            continue;
        }
        match fields[0].trim() {
            t @ ("0" | "1") => {
                labels.insert(t.to_string());
            }
            other => c.push(Some(row), Some("tag"), format!("tag must be 0 or 1, got {other:?}")),
        }
        if fields[1].trim().is_empty() {
            c.push(Some(row), Some("word"), "empty word");
        }
    }
    if labels.len() < 2 && c.out.is_empty() {
        c.push(None, Some("tag"), "both labels 0 and 1 are required");
    }
    c.out
}

fn check_hierarchy(path: &Path) -> Vec<Diagnostic> {
    let text = match read(path) {
        Ok(t) => t,
        Err(d) => return vec![d],
    };
    let mut c = Collector::new(path);
    let rows = csv_records(&text, &["primary", "secondary", "entry", "polarity"], &mut c);
    let mut entries: BTreeMap<String, usize> = BTreeMap::new();
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for (row, rec) in &rows {
        for (j, name) in ["primary", "secondary", "entry"].iter().enumerate() {
            if rec[j].trim().is_empty() {
                c.push(Some(*row), Some(name), "empty field");
            }
        }
        if rec[3].trim().parse::<Polarity>().is_err() {
            c.push(Some(*row), Some("polarity"), format!("unknown polarity {:?} (expected positive, negative or two_way)", rec[3].trim()));
        }
        let entry = rec[2].trim().to_string();
        if let Some(first) = entries.get(&entry) {
            c.push(Some(*row), Some("entry"), format!("entry {entry:?} already defined on row {first}"));
        } else {
            entries.insert(entry, *row);
        }
        let (primary, secondary) = (rec[0].trim().to_string(), rec[1].trim().to_string());
        match owner.get(&secondary) {
            Some(p) if *p != primary => {
                c.push(Some(*row), Some("secondary"), format!("secondary {secondary:?} already belongs to primary {p:?}"))
            }
            _ => {
                owner.insert(secondary, primary);
            }
        }
    }
    if rows.is_empty() && c.out.is_empty() {
        c.push(None, None, "no indicator rows");
    }
    c.out
}

fn check_panel(path: &Path, policy: GapPolicy, regions: &mut BTreeSet<String>) -> Vec<Diagnostic> {
    let text = match read(path) {
        Ok(t) => t,
        Err(d) => return vec![d],
    };
    let mut c = Collector::new(path);
    let rows = csv_records(&text, &["date", "keyword", "region", "value"], &mut c);
    let mut last: BTreeMap<(String, String), chrono::NaiveDate> = BTreeMap::new();
    for (row, rec) in &rows {
        let (keyword, region) = (rec[1].trim().to_string(), rec[2].trim().to_string());
        if keyword.is_empty() {
            c.push(Some(*row), Some("keyword"), "empty keyword");
        }
        if region.is_empty() {
            c.push(Some(*row), Some("region"), "empty region");
        }
        regions.insert(region.clone());
        match rec[3].trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => {}
            _ => c.push(Some(*row), Some("value"), format!("expected a non-negative number, got {:?}", &rec[3])),
        }
        let date = match parse_date(&rec[0]) {
            Ok(d) => d,
            Err(e) => {
                c.push(Some(*row), Some("date"), e.to_string());
                continue;
            }
        };
        if let Some(prev) = last.insert((region.clone(), keyword.clone()), date) {
            if date <= prev {
                c.push(Some(*row), Some("date"), format!("{region}/{keyword}: {date} is not after {prev}"));
                continue;
            }
            let missing = (date - prev).num_days() as usize - 1;
            let allowed = match policy {
                GapPolicy::Reject => 0,
                GapPolicy::Interpolate { max_gap_days } => max_gap_days,
            };
            if missing > allowed {
                c.push(
                    Some(*row),
                    Some("date"),
                    format!("{region}/{keyword}: {missing} missing day(s) before {date} (gap policy allows {allowed})"),
                );
            }
        }
    }
    if rows.is_empty() && c.out.is_empty() {
        c.push(None, None, "no data rows");
    }
    c.out
}

fn check_investment(path: &Path) -> Vec<Diagnostic> {
    let text = match read(path) {
        Ok(t) => t,
        Err(d) => return vec![d],
    };
    let mut c = Collector::new(path);
    let rows = csv_records(&text, &["month", "value"], &mut c);
    let mut prev: Option<YearMonth> = None;
    for (row, rec) in &rows {
        match rec[0].parse::<YearMonth>() {
            Ok(m) => {
                if prev.is_some_and(|p| m <= p) {
                    c.push(Some(*row), Some("month"), format!("{m} is not after {}", prev.unwrap()));
                }
                prev = Some(m);
            }
            Err(e) => c.push(Some(*row), Some("month"), e.to_string()),
        }
        if !rec[1].trim().parse::<f64>().is_ok_and(f64::is_finite) {
            c.push(Some(*row), Some("value"), format!("not a finite number: {:?}", &rec[1]));
        }
    }
    if rows.is_empty() && c.out.is_empty() {
        c.push(None, None, "no data rows");
    }
    c.out
}
