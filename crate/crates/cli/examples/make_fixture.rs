//! Regenerates the miniature fixture under `fixtures/mini`.
//!
//! ```text
//! cargo run -p aif-cli --example make_fixture -- fixtures/mini
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (primary, secondary, entry, polarity, panel sensitivity to activity)
const SEEDS: &[(&str, &str, &str, &str, f64)] = &[
    ("政府投资", "基建投资", "基建", "positive", 0.9),
    ("政府投资", "基建投资", "铁路", "positive", 0.7),
    ("政府影响投资", "国企投资", "国企", "positive", 0.6),
    ("民间投资", "房地产投资", "房价", "two_way", 0.5),
    ("民间投资", "非房地产投资", "民营企业", "positive", 0.8),
    ("外商投资", "外商投资", "外资", "positive", 0.5),
    ("投资环境", "经济方面", "贷款", "positive", 0.7),
    ("投资环境", "经济方面", "利率", "negative", -0.6),
];

/// Panel keywords that are not seeds: (word, sensitivity, first observed day).
const EXTRA: &[(&str, f64, Option<&str>)] = &[("公路", 0.8, None), ("厂房", 0.6, Some("2020-10-01"))];

const FILLER: &[&str] = &[
    "项目", "建设", "投资", "增长", "政策", "市场", "企业", "资金", "城市", "发展", "经济", "工程", "开工", "规划", "需求",
    "融资", "银行", "地方", "产业", "制造业",
];

/// Distinct sentences in the corpus.
const POOL_SIZE: usize = 20;

const STOPWORDS: &[&str] = &["的", "了", "和", "在", "是", "也"];

const TEMPLATES: &[&str] = &[
    "{a}和{b}带动{c}的{d}。",
    "今年{a}{b}保持{c}。",
    "{a}是{b}的重要{c}。",
    "地方加快{a}和{b}{c}。",
    "{a}{b}在{c}中稳步{d}。",
    "{a}的{b}也推动了{c}。",
];

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 6, 1).unwrap()
}

/// Latent investment activity on day offset `t` (may be negative).
fn activity(t: i64) -> f64 {
    let x = t as f64;
    let cycle = (x / 365.0 * std::f64::consts::TAU * 1.4).sin();
    let trend = 0.4 * (x / 730.0);
    let shock = if (420..480).contains(&t) { -0.8 } else { 0.0 };
    cycle + trend + shock
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap_or_else(|e| panic!("writing {name}: {e}"));
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/mini".into()));
    fs::create_dir_all(&dir).expect("create fixture dir");
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);

    let keywords: Vec<&str> = SEEDS.iter().map(|s| s.2).chain(EXTRA.iter().map(|e| e.0)).collect();
    let mut lexicon: Vec<&str> = keywords.iter().chain(FILLER).copied().collect();
    lexicon.sort();
    write(&dir, "lexicon.txt", &(lexicon.join("\n") + "\n"));
    write(&dir, "stopwords.txt", &(STOPWORDS.join("\n") + "\n"));
    write(&dir, "availability.txt", &(keywords.join("\n") + "\n"));
    write(&dir, "exclusions.txt", "# words removed by hand review\n发展\n");

    let mut hierarchy = String::from("primary,secondary,entry,polarity\n");
    for (p, s, e, pol, _) in SEEDS {
        writeln!(hierarchy, "{p},{s},{e},{pol}").unwrap();
    }
    write(&dir, "hierarchy.csv", &hierarchy);

    // 20 documents of 10 sentences drawn in cyclic order from a small pool, so
    // the toy encoder can learn both masked words and sentence order quickly.
    let words: Vec<&str> = keywords.iter().chain(FILLER).copied().collect();
    let mut pool = Vec::new();
    for i in 0..POOL_SIZE {
        let mut s = TEMPLATES[i % TEMPLATES.len()].to_string();
        let mut used = Vec::new();
        for slot in ["{a}", "{b}", "{c}", "{d}"] {
            if s.contains(slot) {
                let w = words[(i * 4 + used.len()) * 7 % words.len()];
                s = s.replacen(slot, w, 1);
                used.push(w);
            }
        }
        pool.push((s, used));
    }
    let mut corpus = String::new();
    let mut sentences = Vec::new();
    for d in 0..20 {
        for j in 0..10 {
            let (s, used) = &pool[(d * 3 + j) % POOL_SIZE];
            corpus.push_str(s);
            sentences.push((s.clone(), used.clone()));
        }
        corpus.push('\n');
    }
    write(&dir, "corpus.txt", &corpus);

    let mut finetune = String::from("tag\tword\ttext\n");
    for (i, (text, used)) in sentences.iter().enumerate().take(120) {
        if i % 2 == 0 {
            let w = used.choose(&mut rng).unwrap();
            writeln!(finetune, "1\t{w}\t{text}").unwrap();
        } else {
            let absent: Vec<&&str> = words.iter().filter(|w| !text.contains(**w)).collect();
            let w = absent.choose(&mut rng).unwrap();
            writeln!(finetune, "0\t{w}\t{text}").unwrap();
        }
    }
    write(&dir, "finetune.tsv", &finetune);

    let sensitivity: Vec<(&str, f64, Option<NaiveDate>)> = SEEDS
        .iter()
        .map(|s| (s.2, s.4, None))
        .chain(EXTRA.iter().map(|e| (e.0, e.1, e.2.map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").unwrap()))))
        .collect();
    let regions = [("national", 1.0), ("north", 0.55), ("south", 0.4)];
    let mut panel = String::from("date,keyword,region,value\n");
    for t in 0..730i64 {
        let date = start() + chrono::Duration::days(t);
        let weekly = if date.weekday().number_from_monday() >= 6 { 0.85 } else { 1.0 };
        for (region, scale) in regions {
            for (j, (word, s, first)) in sensitivity.iter().enumerate() {
                if first.is_some_and(|f| date < f) {
                    continue;
                }
                let a = activity(t - 20);
                let signal = if *word == "房价" { 1.0 - 0.4 * a.abs() } else { 1.0 + 0.35 * s * a };
                let base = 400.0 + 90.0 * j as f64;
                let noise = rng.random_range(0.9..1.1);
                let v = (base * scale * signal * weekly * noise).max(0.0).round();
                writeln!(panel, "{},{word},{region},{v}", date.format("%Y-%m-%d")).unwrap();
            }
        }
    }
    write(&dir, "panel.csv", &panel);

    // Monthly investment lagging activity by about two months; no January rows
    // because January is only published together with February.
    let mut investment = String::from("month,value\n");
    let mut month = start().with_day(1).unwrap();
    while month < start() + chrono::Duration::days(730) {
        if month.month() != 1 {
            let t0 = (month - start()).num_days() - 61;
            let mean = (0..28).map(|d| activity(t0 + d)).sum::<f64>() / 28.0;
            let v = 5000.0 + 1500.0 * mean + rng.random_range(-150.0..150.0);
            writeln!(investment, "{},{:.1}", month.format("%Y-%m"), v).unwrap();
        }
        month = month.checked_add_months(chrono::Months::new(1)).unwrap();
    }
    write(&dir, "investment.csv", &investment);
    println!("fixture written to {}", dir.display());
}
