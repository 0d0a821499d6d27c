use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aif_core::analytics::{
    group_factor_scores, lag_correlation, ols_regress, read_monthly_csv, screen_indicators, FactorScores, LagProfile,
    RegressionReport, ScreeningReport,
};
use aif_core::corpus::{
    build_candidates, read_documents, read_finetune_tsv, read_word_list, Lexicon, MaskSettings, PretrainCorpus,
    PretrainOptions, SentenceSplitter, Vocab,
};
use aif_core::encoder::{
    embed_word, fine_tune, read_checkpoint, train, write_checkpoint, write_loss_log, AdamSettings, Encoder,
    EncoderConfig, EncoderParameters, FineTuneSettings, TrainSettings,
};
use aif_core::expansion::{expand_hierarchy, rank_candidates, ExpansionOptions, WordVector};
use aif_core::index::{
    aggregate, composite_index, dimension_index, entropy_weights, normalize, read_index_csv, read_panel_csv,
    region_indices, write_index_csv, Frequency, IndexSeries, IndicatorHierarchy, Polarity, SeriesPanel, YearMonth,
};
use serde::{Deserialize, Serialize};

use crate::config::LoadedConfig;
use crate::error::{CliError, Diagnostic};
use crate::manifest::{sha256_hex, write_atomic, RunManifest, StageRecord};
use crate::validate::validate_for;
use crate::Stage;

pub const VOCAB: &str = "vocab.txt";
pub const PRETRAINED: &str = "encoder_pretrained.aifx";
pub const PRETRAIN_LOSS: &str = "pretrain_loss.csv";
pub const FINETUNED: &str = "encoder_finetuned.aifx";
pub const FINETUNE_ACCURACY: &str = "finetune_accuracy.csv";
pub const RANKINGS: &str = "rankings.csv";
pub const EXPANSION: &str = "expansion.csv";
pub const EXPANDED_HIERARCHY: &str = "expanded_hierarchy.csv";
pub const INDEX_DAILY: &str = "index_daily.csv";
pub const INDEX_MONTHLY: &str = "index_monthly.csv";
pub const INDEX_ANNUAL: &str = "index_annual.csv";
pub const DIMENSION_MONTHLY: &str = "dimension_monthly.csv";
pub const DIMENSION_ANNUAL: &str = "dimension_annual.csv";
pub const REGION_ANNUAL: &str = "region_annual.csv";
pub const WEIGHTS: &str = "weights.csv";
pub const ANALYSIS: &str = "analysis.json";
pub const SCREENING: &str = "screening.csv";
pub const FACTOR_SCORES: &str = "factor_scores.csv";
pub const LAG_PROFILE: &str = "lag_profile.csv";
pub const REPORT: &str = "report.json";
pub const PLOT_INDEX: &str = "plot_index_vs_investment.csv";

/// Stage that writes `artifact`.
fn producer(artifact: &str) -> &'static str {
    match artifact {
        VOCAB | PRETRAINED | PRETRAIN_LOSS => "pretrain",
        FINETUNED | FINETUNE_ACCURACY => "finetune",
        RANKINGS | EXPANSION | EXPANDED_HIERARCHY => "expand",
        ANALYSIS | SCREENING | FACTOR_SCORES | LAG_PROFILE => "analyze",
        REPORT | PLOT_INDEX => "report",
        _ => "build-index",
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Runs one stage (or the whole pipeline) and updates the manifest.
pub fn run(stage: Stage, opts: &RunOptions) -> Result<(), CliError> {
    let cfg = LoadedConfig::load(&opts.config)?;
    let seed = opts.seed.unwrap_or(cfg.config.rng_seed);
    let out = opts.out.clone().unwrap_or_else(|| cfg.output_dir());
    let diagnostics = validate_for(&cfg, stage);
    if !diagnostics.is_empty() {
        return Err(CliError::Schema(diagnostics));
    }
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;
    let config_hash = sha256_hex(&cfg.raw);
    let mut manifest = RunManifest::load_or_new(&out, &config_hash, seed);
    let stages: Vec<Stage> = if stage == Stage::All { Stage::PIPELINE.to_vec() } else { vec![stage] };
    for s in stages {
        let started = Instant::now();
        let mut ctx = StageContext { cfg: &cfg, out: &out, seed, inputs: BTreeMap::new(), outputs: Vec::new() };
        match s {
            Stage::Pretrain => pretrain(&mut ctx)?,
            Stage::Finetune => finetune(&mut ctx)?,
            Stage::Expand => expand(&mut ctx)?,
            Stage::BuildIndex => build_index(&mut ctx)?,
            Stage::Analyze => analyze(&mut ctx)?,
            Stage::Report => report(&mut ctx)?,
            Stage::All => unreachable!("expanded above"),
        }
        let record = ctx.commit(started.elapsed().as_secs_f64())?;
        log::info!("{s}: wrote {} artifact(s) in {:.2}s", record.outputs.len(), record.seconds);
        manifest.stages.insert(s.name().to_string(), record);
        manifest.save(&out)?;
    }
    Ok(())
}

struct StageContext<'a> {
    cfg: &'a LoadedConfig,
    out: &'a Path,
    seed: u64,
    inputs: BTreeMap<String, String>,
    outputs: Vec<(&'static str, Vec<u8>)>,
}

impl StageContext<'_> {
    /// Reads a configured input file and records its digest.
    fn input(&mut self, configured: &Path) -> Result<(PathBuf, Vec<u8>), CliError> {
        let path = self.cfg.resolve(configured);
        let bytes = std::fs::read(&path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        self.inputs.insert(configured.display().to_string(), sha256_hex(&bytes));
        Ok((path, bytes))
    }

    /// Reads an artifact of an earlier stage.
    fn artifact(&mut self, name: &'static str) -> Result<(PathBuf, Vec<u8>), CliError> {
        let path = self.out.join(name);
        match std::fs::read(&path) {
            Ok(bytes) => {
                self.inputs.insert(format!("artifact:{name}"), sha256_hex(&bytes));
                Ok((path, bytes))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(CliError::Dependency { stage: producer(name), artifact: name.to_string() })
            }
            Err(e) => Err(CliError::Io(format!("reading {}: {e}", path.display()))),
        }
    }

    fn emit(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.outputs.push((name, bytes));
    }

    /// Writes every staged output atomically, only after the stage succeeded.
    fn commit(self, seconds: f64) -> Result<StageRecord, CliError> {
        let mut outputs = BTreeMap::new();
        for (name, bytes) in &self.outputs {
            write_atomic(&self.out.join(name), bytes)?;
            outputs.insert(name.to_string(), sha256_hex(bytes));
        }
        Ok(StageRecord { inputs: self.inputs, outputs, seconds })
    }

    fn documents(&mut self) -> Result<Vec<String>, CliError> {
        let (path, bytes) = self.input(&self.cfg.config.paths.corpus.clone())?;
        read_documents(bytes.as_slice()).map_err(|e| CliError::from_corpus(&path, e))
    }

    fn word_list(&mut self, configured: PathBuf) -> Result<BTreeSet<String>, CliError> {
        let (path, bytes) = self.input(&configured)?;
        read_word_list(bytes.as_slice()).map_err(|e| CliError::from_corpus(&path, e))
    }

    fn lexicon(&mut self) -> Result<Lexicon, CliError> {
        let configured = self.cfg.config.paths.lexicon.clone();
        let words = self.word_list(configured.clone())?;
        Lexicon::new(words).map_err(|e| CliError::from_corpus(&self.cfg.resolve(&configured), e))
    }

    fn hierarchy(&mut self) -> Result<IndicatorHierarchy, CliError> {
        let (path, bytes) = self.input(&self.cfg.config.paths.hierarchy.clone())?;
        IndicatorHierarchy::read_csv(bytes.as_slice()).map_err(|e| CliError::from_index(&path, e))
    }

    fn expanded_hierarchy(&mut self) -> Result<IndicatorHierarchy, CliError> {
        let (path, bytes) = self.artifact(EXPANDED_HIERARCHY)?;
        IndicatorHierarchy::read_csv(bytes.as_slice()).map_err(|e| CliError::from_index(&path, e))
    }

    fn vocab(&mut self) -> Result<Vocab, CliError> {
        let (path, bytes) = self.artifact(VOCAB)?;
        let text = String::from_utf8(bytes).map_err(|e| CliError::schema(&path, None, e.to_string()))?;
        Vocab::from_tokens(text.lines().map(str::to_string)).map_err(|e| CliError::from_corpus(&path, e))
    }

    fn checkpoint(&mut self, name: &'static str) -> Result<(EncoderConfig, EncoderParameters), CliError> {
        let (_, bytes) = self.artifact(name)?;
        Ok(read_checkpoint(bytes.as_slice())?)
    }

    /// All configured panels keyed by region.
    fn panels(&mut self) -> Result<BTreeMap<String, SeriesPanel>, CliError> {
        let mut all = BTreeMap::new();
        for configured in self.cfg.config.paths.panel.clone() {
            let (path, bytes) = self.input(&configured)?;
            let panels = read_panel_csv(bytes.as_slice(), self.cfg.config.knobs.gap_policy)
                .map_err(|e| CliError::from_index(&path, e))?;
            for (region, panel) in panels {
                if all.insert(region.clone(), panel).is_some() {
                    return Err(CliError::schema(&path, None, format!("region {region:?} appears in more than one panel file")));
                }
            }
        }
        Ok(all)
    }

    fn investment(&mut self) -> Result<BTreeMap<YearMonth, f64>, CliError> {
        let (path, bytes) = self.input(&self.cfg.config.paths.investment.clone())?;
        read_monthly_csv(bytes.as_slice()).map_err(|e| CliError::from_analytics(&path, e))
    }

    fn adam(&self, learning_rate: f64) -> AdamSettings {
        AdamSettings { learning_rate, ..AdamSettings::default() }
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).and_then(|_| fill(&mut w)).and_then(|_| w.flush().map_err(csv::Error::from)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn columns(v: &[(String, IndexSeries)]) -> Vec<(String, &IndexSeries)> {
    v.iter().map(|(n, s)| (n.clone(), s)).collect()
}

fn index_csv(columns: &[(String, &IndexSeries)]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_index_csv(&mut buf, columns).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(buf)
}

fn pretrain(ctx: &mut StageContext<'_>) -> Result<(), CliError> {
    let docs = ctx.documents()?;
    let lexicon = ctx.lexicon()?;
    let vocab = Vocab::from_texts(docs.iter().map(String::as_str).chain(lexicon.words()));
    let corpus_path = ctx.cfg.resolve(&ctx.cfg.config.paths.corpus);
    let corpus = PretrainCorpus::new(&docs, &lexicon, &vocab, &SentenceSplitter::default())
        .map_err(|e| CliError::from_corpus(&corpus_path, e))?;
    let c = &ctx.cfg.config;
    let config = EncoderConfig {
        num_layers: c.encoder.num_layers,
        num_heads: c.encoder.num_heads,
        d_model: c.encoder.d_model,
        d_ff: c.encoder.d_ff,
        vocab_size: vocab.len(),
        max_seq_len: c.encoder.max_seq_len,
        rng_seed: ctx.seed,
    };
    let settings = TrainSettings {
        steps: c.pretrain.steps,
        batch_size: c.pretrain.batch_size,
        optimizer: ctx.adam(c.pretrain.learning_rate),
        data: PretrainOptions {
            max_seq_len: c.encoder.max_seq_len,
            mask: MaskSettings::with_rate(c.knobs.mask_rate),
            ..PretrainOptions::default()
        },
    };
    log::info!("pretrain: {} sentences, vocabulary {}, {} steps", corpus.num_sentences(), vocab.len(), settings.steps);
    let outcome = train(&corpus, &config, &settings)?;
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        log::info!("pretrain: loss {:.4} -> {:.4}", first.total, last.total);
    }

    let mut vocab_txt = vocab.ordinary_tokens().join("\n");
    vocab_txt.push('\n');
    ctx.emit(VOCAB, vocab_txt.into_bytes());
    let mut ckpt = Vec::new();
    write_checkpoint(&mut ckpt, &config, &outcome.params)?;
    ctx.emit(PRETRAINED, ckpt);
    let mut loss = Vec::new();
    write_loss_log(&mut loss, &outcome.log)?;
    ctx.emit(PRETRAIN_LOSS, loss);
    Ok(())
}

fn finetune(ctx: &mut StageContext<'_>) -> Result<(), CliError> {
    let vocab = ctx.vocab()?;
    let (config, params) = ctx.checkpoint(PRETRAINED)?;
    let (path, bytes) = ctx.input(&ctx.cfg.config.paths.finetune.clone())?;
    let examples = read_finetune_tsv(bytes.as_slice()).map_err(|e| CliError::from_corpus(&path, e))?;
    let f = &ctx.cfg.config.finetune;
    let settings = FineTuneSettings {
        batch_size: f.batch_size,
        epochs: f.epochs,
        validation_fraction: f.validation_fraction,
        optimizer: ctx.adam(f.learning_rate),
        rng_seed: ctx.seed,
    };
    let encoder = Encoder::new(config)?;
    let outcome = fine_tune(&encoder, &params, &examples, &vocab, &settings)?;
    if let Some(best) = outcome.best_epoch {
        log::info!("finetune: best validation accuracy {:.3} at epoch {best}", outcome.history[best - 1].validation_accuracy);
    }
    let mut ckpt = Vec::new();
    write_checkpoint(&mut ckpt, &config, &outcome.params)?;
    ctx.emit(FINETUNED, ckpt);
    let acc = csv_bytes(&["epoch", "train_loss", "train_accuracy", "validation_accuracy", "selected"], |w| {
        for r in &outcome.history {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.train_accuracy.to_string(),
                r.validation_accuracy.to_string(),
                (Some(r.epoch) == outcome.best_epoch).to_string(),
            ])?;
        }
        Ok(())
    })?;
    ctx.emit(FINETUNE_ACCURACY, acc);
    Ok(())
}

fn expand(ctx: &mut StageContext<'_>) -> Result<(), CliError> {
    let vocab = ctx.vocab()?;
    let (config, params) = ctx.checkpoint(FINETUNED)?;
    let docs = ctx.documents()?;
    let lexicon = ctx.lexicon()?;
    let paths = ctx.cfg.config.paths.clone();
    let stopwords = ctx.word_list(paths.stopwords)?;
    let hierarchy = ctx.hierarchy()?;
    let availability = ctx.word_list(paths.availability)?;
    let exclusions = ctx.word_list(paths.exclusions)?;

    let seeds: BTreeSet<String> = hierarchy.entry_names().into_iter().collect();
    let candidates = build_candidates(&docs, &lexicon, &stopwords, &seeds)
        .map_err(|e| CliError::from_corpus(&ctx.cfg.resolve(&paths.corpus), e))?;
    let encoder = Encoder::new(config)?;
    let mut vectors: BTreeMap<String, WordVector> = BTreeMap::new();
    for word in candidates.iter().chain(&seeds) {
        vectors.insert(word.clone(), embed_word(&encoder, &params, &vocab, word)?);
    }
    let candidate_vectors: BTreeMap<String, WordVector> =
        candidates.iter().map(|w| (w.clone(), vectors[w].clone())).collect();
    let mut rankings = BTreeMap::new();
    for s in hierarchy.secondaries() {
        let seed_vectors: Vec<WordVector> = s.entries.iter().map(|e| vectors[&e.name].clone()).collect();
        rankings.insert(s.name.clone(), rank_candidates(&s.name, &seed_vectors, &candidate_vectors)?);
    }
    let polarity_overrides = ctx
        .cfg
        .config
        .polarity_overrides
        .iter()
        .map(|(w, p)| Ok((w.clone(), p.parse::<Polarity>()?)))
        .collect::<Result<BTreeMap<_, _>, aif_core::index::IndexError>>()
        .map_err(|e| CliError::schema(&ctx.cfg.path, None, e.to_string()))?;
    let options = ExpansionOptions { top_k: ctx.cfg.config.knobs.top_k, polarity_overrides, ..ExpansionOptions::default() };
    let (expanded, result) = expand_hierarchy(&hierarchy, &rankings, &availability, &exclusions, &options)?;
    log::info!(
        "expand: {} candidates, {} seed entries -> {} entries",
        candidates.len(),
        seeds.len(),
        expanded.entry_names().len()
    );

    let ranking_csv = csv_bytes(&["secondary_indicator", "word", "score", "rank"], |w| {
        for r in rankings.values() {
            for (i, c) in r.entries.iter().enumerate() {
                w.write_record([r.secondary.clone(), c.word.clone(), c.score.to_string(), (i + 1).to_string()])?;
            }
        }
        Ok(())
    })?;
    ctx.emit(RANKINGS, ranking_csv);
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    ctx.emit(EXPANSION, buf);
    let mut buf = Vec::new();
    expanded.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    ctx.emit(EXPANDED_HIERARCHY, buf);
    Ok(())
}

/// National panel restricted to the hierarchy's entries, in hierarchy order.
fn national_panel(
    ctx: &StageContext<'_>,
    panels: &BTreeMap<String, SeriesPanel>,
    entries: &[String],
) -> Result<SeriesPanel, CliError> {
    let national = &ctx.cfg.config.knobs.national_region;
    let first_panel = ctx.cfg.resolve(&ctx.cfg.config.paths.panel[0]);
    let panel = panels
        .get(national)
        .ok_or_else(|| CliError::schema(&first_panel, None, format!("no rows for the national region {national:?}")))?;
    panel.select(entries).map_err(|e| {
        CliError::Schema(vec![Diagnostic::new(&first_panel, None, Some("keyword"), format!("region {national}: {e}"))])
    })
}

fn build_index(ctx: &mut StageContext<'_>) -> Result<(), CliError> {
    let hierarchy = ctx.expanded_hierarchy()?;
    let panels = ctx.panels()?;
    let entries = hierarchy.entry_names();
    let national = national_panel(ctx, &panels, &entries)?;
    let normalized = normalize(&national, &hierarchy.polarities()).map_err(|e| CliError::Numeric(e.to_string()))?;
    let weights =
        entropy_weights(normalized.panel.values.view(), &entries).map_err(|e| CliError::Numeric(e.to_string()))?;
    let numeric = |e: aif_core::index::IndexError| CliError::Numeric(e.to_string());

    let daily = composite_index(&normalized.panel, &weights).map_err(numeric)?;
    let monthly = aggregate(&daily, Frequency::Monthly).map_err(numeric)?;
    let annual = aggregate(&daily, Frequency::Annual).map_err(numeric)?;
    ctx.emit(INDEX_DAILY, index_csv(&[("index".into(), &daily)])?);
    ctx.emit(INDEX_MONTHLY, index_csv(&[("index".into(), &monthly)])?);
    ctx.emit(INDEX_ANNUAL, index_csv(&[("index".into(), &annual)])?);

    let mut dim_monthly = Vec::new();
    let mut dim_annual = Vec::new();
    for primary in hierarchy.primary_names() {
        let d = dimension_index(&normalized.panel, &hierarchy, &primary, &weights).map_err(numeric)?;
        dim_monthly.push((primary.clone(), aggregate(&d, Frequency::Monthly).map_err(numeric)?));
        dim_annual.push((primary, aggregate(&d, Frequency::Annual).map_err(numeric)?));
    }
    ctx.emit(DIMENSION_MONTHLY, index_csv(&columns(&dim_monthly))?);
    ctx.emit(DIMENSION_ANNUAL, index_csv(&columns(&dim_annual))?);

    let first_panel = ctx.cfg.resolve(&ctx.cfg.config.paths.panel[0]);
    let mut regional = BTreeMap::new();
    for (region, panel) in &panels {
        let sel = panel.select(&entries).map_err(|e| {
            CliError::Schema(vec![Diagnostic::new(&first_panel, None, Some("keyword"), format!("region {region}: {e}"))])
        })?;
        regional.insert(region.clone(), sel);
    }
    let regions = region_indices(&regional, &weights, &normalized.stats).map_err(numeric)?;
    // Regions can cover different years; only years every region covers are tabulated.
    let common: BTreeSet<_> = regions
        .values()
        .map(|s| s.periods().into_iter().collect::<BTreeSet<_>>())
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap_or_default();
    let trimmed: Vec<(String, IndexSeries)> = regions
        .into_iter()
        .map(|(r, s)| {
            let points = s.points.into_iter().filter(|p| common.contains(&p.period)).collect();
            (r, IndexSeries { frequency: s.frequency, points })
        })
        .collect();
    ctx.emit(REGION_ANNUAL, index_csv(&columns(&trimmed))?);

    let weights_csv = csv_bytes(
        &["indicator", "primary", "secondary", "polarity", "provenance", "weight", "min", "max", "median"],
        |w| {
            for ((p, s, e), (weight, stats)) in hierarchy.iter().zip(weights.weights.iter().zip(&normalized.stats)) {
                w.write_record([
                    e.name.clone(),
                    p.name.clone(),
                    s.name.clone(),
                    e.polarity.to_string(),
                    e.provenance.to_string(),
                    weight.to_string(),
                    stats.min.to_string(),
                    stats.max.to_string(),
                    stats.median.to_string(),
                ])?;
            }
            Ok(())
        },
    )?;
    ctx.emit(WEIGHTS, weights_csv);
    log::info!("build-index: {} indicators, {} months, {} regions", entries.len(), monthly.len(), regional.len());
    Ok(())
}

/// Everything the analyze stage computes, as written to `analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub screening: ScreeningReport,
    pub factors_before: FactorScores,
    pub factors_after: FactorScores,
    pub regression_before: RegressionReport,
    pub regression_after: RegressionReport,
    pub lag_profile: LagProfile,
}

/// Regresses `target` on the factor scores over the months both cover.
fn regress_on_factors(
    factors: &FactorScores,
    target: &BTreeMap<YearMonth, f64>,
) -> Result<RegressionReport, aif_core::analytics::AnalyticsError> {
    let rows: Vec<usize> = (0..factors.months.len()).filter(|&i| target.contains_key(&factors.months[i])).collect();
    let y: Vec<f64> = rows.iter().map(|&i| target[&factors.months[i]]).collect();
    let x: Vec<Vec<f64>> = factors.groups.iter().map(|g| rows.iter().map(|&i| g.scores[i]).collect()).collect();
    ols_regress(&y, &x)
}

fn analyze(ctx: &mut StageContext<'_>) -> Result<(), CliError> {
    let expanded = ctx.expanded_hierarchy()?;
    let (index_path, index_bytes) = ctx.artifact(INDEX_MONTHLY)?;
    let seeds = ctx.hierarchy()?;
    let panels = ctx.panels()?;
    let investment = ctx.investment()?;
    let investment_path = ctx.cfg.resolve(&ctx.cfg.config.paths.investment);
    let analytics_err = |e| CliError::from_analytics(&investment_path, e);

    let index_monthly = read_index_csv(index_bytes.as_slice(), Frequency::Monthly)
        .map_err(|e| CliError::from_index(&index_path, e))?
        .into_iter()
        .next()
        .and_then(|(_, s)| s.monthly_map())
        .ok_or_else(|| CliError::schema(&index_path, None, "no monthly index column"))?;

    let entries = expanded.entry_names();
    let national = national_panel(ctx, &panels, &entries)?;
    let span = (national.dates[0], *national.dates.last().expect("validated non-empty"));
    let knobs = &ctx.cfg.config.knobs;
    let screening = screen_indicators(&national, &investment, knobs.screen_threshold, span).map_err(analytics_err)?;
    let kept: Vec<String> = screening.kept_indicators();
    log::info!("analyze: {} of {} indicators kept by screening", kept.len(), entries.len());

    let normalized = normalize(&national, &expanded.polarities()).map_err(|e| CliError::Numeric(e.to_string()))?;
    let kept_panel = normalized.panel.select(&kept).map_err(|e| CliError::Numeric(e.to_string()))?;
    let factors_after = group_factor_scores(&kept_panel, &expanded).map_err(analytics_err)?;
    let factors_before = group_factor_scores(&kept_panel, &seeds).map_err(analytics_err)?;
    let regression_after = regress_on_factors(&factors_after, &investment).map_err(analytics_err)?;
    let regression_before = regress_on_factors(&factors_before, &investment).map_err(analytics_err)?;
    let lag_profile = lag_correlation(&index_monthly, &investment, knobs.max_lag, knobs.jan_adjust).map_err(analytics_err)?;
    log::info!(
        "analyze: R^2 {:.3} -> {:.3}, best lag {} month(s)",
        regression_before.r_squared,
        regression_after.r_squared,
        lag_profile.best_lag
    );

    let screening_csv = csv_bytes(&["indicator", "r", "kept", "reason"], |w| {
        for r in &screening.rows {
            let reason = serde_json::to_value(r.reason).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            w.write_record([r.indicator.clone(), r.r.map(|v| v.to_string()).unwrap_or_default(), r.kept.to_string(), reason])?;
        }
        Ok(())
    })?;
    let mut header = vec!["month".to_string()];
    header.extend(factors_before.groups.iter().map(|g| format!("before:{}", g.primary)));
    header.extend(factors_after.groups.iter().map(|g| format!("after:{}", g.primary)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let factor_csv = csv_bytes(&header_refs, |w| {
        for (i, m) in factors_after.months.iter().enumerate() {
            let mut rec = vec![m.to_string()];
            rec.extend(factors_before.groups.iter().chain(&factors_after.groups).map(|g| g.scores[i].to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    let lag_csv = csv_bytes(&["lag", "r", "pairs"], |w| {
        for p in &lag_profile.lags {
            w.write_record([p.lag.to_string(), p.r.to_string(), p.pairs.to_string()])?;
        }
        Ok(())
    })?;
    let report = AnalysisReport { screening, factors_before, factors_after, regression_before, regression_after, lag_profile };
    ctx.emit(ANALYSIS, json_bytes(&report)?);
    ctx.emit(SCREENING, screening_csv);
    ctx.emit(FACTOR_SCORES, factor_csv);
    ctx.emit(LAG_PROFILE, lag_csv);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct PeriodValue {
    period: String,
    value: f64,
    partial: bool,
}

fn period_values(s: &IndexSeries) -> Vec<PeriodValue> {
    s.points.iter().map(|p| PeriodValue { period: p.period.to_string(), value: p.value, partial: p.partial }).collect()
}

fn named_series(
    ctx: &mut StageContext<'_>,
    name: &'static str,
    frequency: Frequency,
) -> Result<Vec<(String, IndexSeries)>, CliError> {
    let (path, bytes) = ctx.artifact(name)?;
    read_index_csv(bytes.as_slice(), frequency).map_err(|e| CliError::from_index(&path, e))
}

fn report(ctx: &mut StageContext<'_>) -> Result<(), CliError> {
    let (analysis_path, bytes) = ctx.artifact(ANALYSIS)?;
    let analysis: AnalysisReport =
        serde_json::from_slice(&bytes).map_err(|e| CliError::schema(&analysis_path, Some(e.line()), e.to_string()))?;
    let monthly = named_series(ctx, INDEX_MONTHLY, Frequency::Monthly)?;
    let annual = named_series(ctx, INDEX_ANNUAL, Frequency::Annual)?;
    let dimensions = named_series(ctx, DIMENSION_ANNUAL, Frequency::Annual)?;
    let regions = named_series(ctx, REGION_ANNUAL, Frequency::Annual)?;
    let investment = ctx.investment()?;

    let summary = serde_json::json!({
        "annual_index": period_values(&annual[0].1),
        "dimensions_annual": dimensions.iter().map(|(n, s)| (n.clone(), period_values(s))).collect::<BTreeMap<_, _>>(),
        "regions_annual": regions.iter().map(|(n, s)| (n.clone(), period_values(s))).collect::<BTreeMap<_, _>>(),
        "screening": {
            "indicators": analysis.screening.rows.len(),
            "kept": analysis.screening.kept_indicators().len(),
            "threshold": analysis.screening.threshold,
        },
        "regression": {
            "before_expansion": &analysis.regression_before,
            "after_expansion": &analysis.regression_after,
        },
        "lag_profile": &analysis.lag_profile,
    });
    ctx.emit(REPORT, json_bytes(&summary)?);

    let plot = csv_bytes(&["month", "index", "investment"], |w| {
        for p in &monthly[0].1.points {
            let month = p.period.to_string();
            let inv = match p.period {
                aif_core::index::Period::Month(m) => investment.get(&m).map(|v| v.to_string()).unwrap_or_default(),
                _ => String::new(),
            };
            w.write_record([month, p.value.to_string(), inv])?;
        }
        Ok(())
    })?;
    ctx.emit(PLOT_INDEX, plot);
    Ok(())
}
