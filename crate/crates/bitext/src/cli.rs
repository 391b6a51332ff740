//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use bitext_core::corpus::ingest;
use bitext_core::embedding::EmbeddingMatrix;
use bitext_core::eval::{analysis_report, stratified_sample, AnalysisTable};
use bitext_core::ivf::{default_probes, IndexParams, DEFAULT_SUBSPACES};
use bitext_core::kmeans::DEFAULT_ITERATIONS;
use bitext_core::lang::{LanguageCode, LanguageSet, DEFAULT_LANGUAGES};
use bitext_core::langid::NgramDetector;
use bitext_core::mine::{
    mine_comparable, mine_docpair, mine_monolingual, BucketedSide, MiningMode, RetrievalParams, ThresholdPolicy,
};
use bitext_core::refine::{decontaminate, pivot_extract, refine_pairs, FilterConfig, MinedPair};
use bitext_core::stats::{CorpusStats, PairCounts};
use clap::{Args, Parser, Subcommand};

use crate::client::{ClientConfig, EmbedClient};
use crate::config::RunConfig;
use crate::error::{BitextError, Result};
use crate::formats::{self, annotation, docs, heldout, pairs, semb, sentences, sivf};
use crate::pipeline::{bucket_kind, build_segmenter, embeddings_for, run_pipeline, Stage, StagePlan};

#[derive(Debug, Parser)]
#[command(name = "bitext", version, about = "Mine parallel sentences from comparable and monolingual corpora")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment JSONL documents into a sentence TSV.
    Ingest(IngestArgs),
    /// Validate and normalize an SEMB file against a sentence TSV.
    EmbedImport(EmbedImportArgs),
    /// Embed a sentence TSV through an HTTP provider.
    EmbedFetch(EmbedFetchArgs),
    /// Train an IVF-PQ index over an SEMB file.
    IndexBuild(IndexBuildArgs),
    /// Approximate nearest neighbours for every row of an SEMB file.
    IndexQuery(IndexQueryArgs),
    /// Align sentences within month buckets.
    MineComparable(MineArgs),
    /// Align sentences within document pairs.
    MineDocpair(MineArgs),
    /// Align target sentences against an indexed source pool.
    MineMono(MineMonoArgs),
    /// Length, language and duplicate filters.
    Refine(RefineArgs),
    /// Join two English-centric pair files on their English side.
    Pivot(PivotArgs),
    /// Drop pairs overlapping held-out evaluation sets.
    Decontaminate(DecontaminateArgs),
    /// Draw a stratified sample for human annotation.
    SampleAnnotation(SampleArgs),
    /// Summarize STS annotations against a sample key.
    Analyze(AnalyzeArgs),
    /// Existing vs mined pair counts per language pair.
    Stats(StatsArgs),
    /// Run the staged pipeline from a TOML config.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub docs: PathBuf,
    /// Keep only sentences in this language.
    #[arg(long)]
    pub lang: String,
    #[arg(long, value_parser = parse_mode)]
    pub mode: MiningMode,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory of `<lang>.txt` non-breaking prefix lists.
    #[arg(long)]
    pub prefixes_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub languages: Option<Vec<String>>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedImportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmbedFetchArgs {
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 5)]
    pub max_attempts: u32,
    #[arg(long, default_value_t = 1)]
    pub concurrency: usize,
    #[arg(long, default_value_t = bitext_core::embedding::DEFAULT_DIM)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct IndexBuildArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SUBSPACES)]
    pub subspaces: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long)]
    pub train_sample: Option<usize>,
    /// Quantize raw vectors instead of residuals.
    #[arg(long)]
    pub no_residual: bool,
}

#[derive(Debug, Args)]
pub struct IndexQueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// TSV of `query_id rank sent_id approx_score`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub src_sentences: PathBuf,
    #[arg(long)]
    pub tgt_sentences: PathBuf,
    #[arg(long)]
    pub src_embeddings: PathBuf,
    #[arg(long)]
    pub tgt_embeddings: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub near_misses: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineMonoArgs {
    #[command(flatten)]
    pub common: MineArgs,
    /// Index over the source embeddings.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct PairFile {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub src_lang: String,
    #[arg(long)]
    pub tgt_lang: String,
}

impl PairFile {
    fn load(&self) -> Result<Vec<MinedPair>> {
        load_pairs(&self.pairs, &self.src_lang, &self.tgt_lang)
    }
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub input: PairFile,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub min_en_words: usize,
    #[arg(long)]
    pub no_langid: bool,
    /// Fail when no language detector covers a side.
    #[arg(long)]
    pub langid_hard_fail: bool,
    #[arg(long)]
    pub no_dedup: bool,
    /// Also decontaminate against this directory of held-out sets.
    #[arg(long)]
    pub heldout_dir: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PivotArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub a_src_lang: String,
    #[arg(long)]
    pub a_tgt_lang: String,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub b_src_lang: String,
    #[arg(long)]
    pub b_tgt_lang: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecontaminateArgs {
    #[command(flatten)]
    pub input: PairFile,
    #[arg(long)]
    pub heldout_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub input: PairFile,
    /// Near misses to draw the reject band from.
    #[arg(long)]
    pub near_misses: Option<PathBuf>,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = 100)]
    pub n_per_band: usize,
    #[arg(long)]
    pub export: PathBuf,
    #[arg(long)]
    pub key: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// CSV of `pair,existing` counts.
    #[arg(long)]
    pub existing: PathBuf,
    /// Mined pair files as `PAIR=PATH`, counted by line.
    #[arg(long = "mined", value_parser = parse_assignment)]
    pub mined: Vec<(String, PathBuf)>,
    /// CSV of `pair,mined` counts, added to any `--mined` files.
    #[arg(long)]
    pub mined_counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_stage)]
    pub from: Option<Stage>,
    #[arg(long, value_parser = parse_stage)]
    pub to: Option<Stage>,
    /// Rerun stages whose manifests are current.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<MiningMode, String> {
    s.parse()
}

fn parse_stage(s: &str) -> std::result::Result<Stage, String> {
    s.parse().map_err(|e: BitextError| e.to_string())
}

fn parse_assignment(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected PAIR=PATH, got {s:?}"))?;
    Ok((k.to_string(), PathBuf::from(v)))
}

fn lang(tag: &str) -> Result<LanguageCode> {
    LanguageCode::new(tag).map_err(|e| BitextError::config(e.to_string()))
}

fn load_pairs(path: &Path, src: &str, tgt: &str) -> Result<Vec<MinedPair>> {
    let source = path.file_stem().and_then(|s| s.to_str()).unwrap_or("pairs").to_string();
    pairs::read_mined(path, &lang(src)?, &lang(tgt)?, &source)
}

fn write_report<T: serde::Serialize>(path: Option<&PathBuf>, value: &T) -> Result<()> {
    match path {
        Some(p) => formats::write_json(p, value),
        None => Ok(()),
    }
}

fn check_threshold(t: f64) -> Result<f64> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(BitextError::config(format!("threshold {t} outside (0, 1)")))
    }
}

fn read_counts(path: &Path) -> Result<Vec<(String, u64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(formats::open(path)?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| BitextError::format(path, e.to_string()))?;
        let bad = || BitextError::format(path, format!("row {}: expected pair,count", i + 1));
        let (Some(pair), Some(n)) = (rec.get(0), rec.get(1)) else {
            return Err(bad());
        };
        match n.parse::<u64>() {
            Ok(n) => out.push((pair.to_string(), n)),
            // Tolerate a header row.
            Err(_) if i == 0 => continue,
            Err(_) => return Err(bad()),
        }
    }
    Ok(out)
}

fn count_lines(path: &Path) -> Result<u64> {
    Ok(formats::read_lines(path)?.iter().filter(|l| !l.is_empty()).count() as u64)
}

fn fmt_opt(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.prec$}"))
}

fn print_table(out: &mut impl Write, name: &str, t: &AnalysisTable) -> std::io::Result<()> {
    writeln!(out, "[{name}]")?;
    writeln!(out, "band\tsamples\tmean_sts\tmedian_sts\taccuracy")?;
    for (band, s) in &t.bands {
        writeln!(
            out,
            "{band}\t{}\t{}\t{}\t{}",
            s.samples,
            fmt_opt(s.mean_sts, 2),
            fmt_opt(s.median_sts, 1),
            fmt_opt(s.accuracy, 3)
        )?;
    }
    let a = &t.all_accept;
    writeln!(
        out,
        "all_accept\t{}\t{}\t{}\t{}",
        a.pooled.samples,
        fmt_opt(a.pooled.mean_sts, 2),
        fmt_opt(a.pooled.median_sts, 1),
        fmt_opt(a.pooled.accuracy, 3)
    )?;
    writeln!(
        out,
        "all_accept (equal weight)\t-\t{}\t-\t{}",
        fmt_opt(a.equal_weight_mean_sts, 2),
        fmt_opt(a.equal_weight_accuracy, 3)
    )?;
    writeln!(
        out,
        "spearman las~sts {}  las~length {}  sts~length {}  agreement {} (n={})",
        fmt_opt(t.spearman_las_sts, 3),
        fmt_opt(t.spearman_las_length, 3),
        fmt_opt(t.spearman_sts_length, 3),
        fmt_opt(t.agreement_within_1, 3),
        t.multiply_annotated
    )
}

fn mine_inputs(a: &MineArgs) -> Result<(Vec<bitext_core::corpus::SentenceRecord>, Vec<bitext_core::corpus::SentenceRecord>, EmbeddingMatrix, EmbeddingMatrix)> {
    let src = sentences::read_sentences(&a.src_sentences)?;
    let tgt = sentences::read_sentences(&a.tgt_sentences)?;
    let src_m = embeddings_for(&a.src_embeddings, &src, None)?;
    let tgt_m = embeddings_for(&a.tgt_embeddings, &tgt, Some(src_m.dim()))?;
    Ok((src, tgt, src_m, tgt_m))
}

fn finish_mining(a: &MineArgs, src: &[bitext_core::corpus::SentenceRecord], tgt: &[bitext_core::corpus::SentenceRecord], outcome: &bitext_core::mine::MiningOutcome) -> Result<()> {
    pairs::write_pairs(&a.out, &pairs::candidate_rows(&outcome.pairs, src, tgt)?)?;
    if let Some(p) = &a.near_misses {
        pairs::write_pairs(p, &pairs::candidate_rows(&outcome.near_misses, src, tgt)?)?;
    }
    write_report(a.report.as_ref(), &outcome.report)?;
    log::info!(
        "{} pairs, {} near misses from {} targets",
        outcome.pairs.len(),
        outcome.near_misses.len(),
        outcome.report.targets
    );
    Ok(())
}

fn policy(mode: MiningMode, threshold: Option<f64>) -> Result<ThresholdPolicy> {
    let mut p = ThresholdPolicy::default();
    if let Some(t) = threshold {
        let t = check_threshold(t)?;
        match mode {
            MiningMode::Comparable => p.comparable = t,
            MiningMode::Docpair => p.docpair = t,
            MiningMode::Monolingual => p.monolingual = t,
        }
    }
    Ok(p)
}

fn mine_bucketed(a: &MineArgs, mode: MiningMode) -> Result<()> {
    let (src, tgt, src_m, tgt_m) = mine_inputs(a)?;
    let s = BucketedSide::from_records(&src, &src_m)?;
    let t = BucketedSide::from_records(&tgt, &tgt_m)?;
    let p = policy(mode, a.threshold)?;
    let outcome = if mode == MiningMode::Comparable {
        mine_comparable(&s, &t, &p)
    } else {
        mine_docpair(&s, &t, &p)
    };
    finish_mining(a, &src, &tgt, &outcome)
}

/// Executes a parsed command.
pub fn execute(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Ingest(a) => {
            let langs = match &a.languages {
                Some(l) => LanguageSet::new(l.iter().map(String::as_str)),
                None => LanguageSet::new(DEFAULT_LANGUAGES),
            }
            .map_err(|e| BitextError::config(e.to_string()))?;
            let keep = lang(&a.lang)?;
            let seg = build_segmenter(a.prefixes_dir.as_deref())?;
            let docs = docs::read_documents(&a.docs)?;
            let (mut records, report) = ingest(&docs, bucket_kind(a.mode), &langs, &seg);
            records.retain(|r| r.lang == keep);
            sentences::write_sentences(&a.out, &records)?;
            write_report(a.report.as_ref(), &report)?;
            log::info!("{} sentences, {} document errors", records.len(), report.errors.len());
        }
        Command::EmbedImport(a) => {
            let records = sentences::read_sentences(&a.sentences)?;
            let m = embeddings_for(&a.input, &records, a.dim)?;
            semb::write_semb(&a.out, &m)?;
            log::info!("{} vectors of dimension {}", m.len(), m.dim());
        }
        Command::EmbedFetch(a) => {
            let client = EmbedClient::new(ClientConfig {
                endpoint: a.endpoint,
                batch_size: a.batch_size,
                max_attempts: a.max_attempts,
                concurrency: a.concurrency,
                ..ClientConfig::default()
            })?;
            let records = sentences::read_sentences(&a.sentences)?;
            let (m, fixed) = client.fetch_embeddings(&records, a.dim)?;
            semb::write_semb(&a.out, &m)?;
            log::info!("{} vectors, {fixed} renormalized", m.len());
        }
        Command::IndexBuild(a) => {
            let (m, _) = semb::read_semb(&a.embeddings)?;
            let params = IndexParams {
                clusters: a.clusters,
                subspaces: a.subspaces,
                residual: !a.no_residual,
                iterations: a.iterations,
                seed,
                train_sample: a.train_sample,
            };
            let mut index = bitext_core::ivf::IvfPqIndex::train(&m, &params)?;
            index.add(&m)?;
            sivf::write_index(&a.out, &index)?;
            log::info!("{} vectors in {} lists", index.len(), index.clusters());
        }
        Command::IndexQuery(a) => {
            let index = sivf::read_index(&a.index)?;
            let (q, _) = semb::read_semb(&a.queries)?;
            let p = a.probes.unwrap_or_else(|| default_probes(index.clusters()));
            let mut w = formats::create(&a.out)?;
            for (qid, v) in q.rows() {
                for (rank, hit) in index.search(v, p, a.k)?.iter().enumerate() {
                    writeln!(w, "{qid}\t{rank}\t{}\t{}", hit.sent_id, hit.approx_score)
                        .map_err(|e| BitextError::io(&a.out, e))?;
                }
            }
            formats::finish(&a.out, w)?;
        }
        Command::MineComparable(a) => mine_bucketed(&a, MiningMode::Comparable)?,
        Command::MineDocpair(a) => mine_bucketed(&a, MiningMode::Docpair)?,
        Command::MineMono(a) => {
            let (src, tgt, src_m, tgt_m) = mine_inputs(&a.common)?;
            let index = sivf::read_index(&a.index)?;
            let params = RetrievalParams {
                probes: a.probes.unwrap_or_else(|| default_probes(index.clusters())),
                top_k: a.top_k,
            };
            let p = policy(MiningMode::Monolingual, a.common.threshold)?;
            let outcome = mine_monolingual(&tgt_m, &index, &src_m, &p, params)?;
            finish_mining(&a.common, &src, &tgt, &outcome)?;
        }
        Command::Refine(a) => {
            let cfg = FilterConfig {
                min_en_words: a.min_en_words,
                langid_enabled: !a.no_langid,
                langid_hard_fail: a.langid_hard_fail,
                dedup_enabled: !a.no_dedup,
                rng_seed: seed,
            };
            cfg.validate().map_err(|e| BitextError::config(e.to_string()))?;
            let detector = NgramDetector::builtin();
            let (kept, mut report) = refine_pairs(a.input.load()?, &cfg, Some(&detector))?;
            let kept = match &a.heldout_dir {
                Some(dir) => {
                    let (kept, dr) = decontaminate(kept, &heldout::read_heldout_dir(dir)?);
                    report.filters_applied.push("decontaminate".into());
                    log::info!("decontamination removed {}", dr.removed);
                    kept
                }
                None => kept,
            };
            pairs::write_mined(&a.out, &kept)?;
            write_report(a.report.as_ref(), &report)?;
            log::info!("{} of {} pairs kept", kept.len(), report.input);
        }
        Command::Pivot(a) => {
            let pa = load_pairs(&a.a, &a.a_src_lang, &a.a_tgt_lang)?;
            let pb = load_pairs(&a.b, &a.b_src_lang, &a.b_tgt_lang)?;
            let joined = pivot_extract(&pa, &pb, seed);
            pairs::write_pivot(&a.out, &joined)?;
            log::info!("{} pivot pairs", joined.len());
        }
        Command::Decontaminate(a) => {
            let held = heldout::read_heldout_dir(&a.heldout_dir)?;
            let (kept, report) = decontaminate(a.input.load()?, &held);
            pairs::write_mined(&a.out, &kept)?;
            write_report(a.report.as_ref(), &report)?;
            log::info!("removed {} of {}", report.removed, report.checked);
        }
        Command::SampleAnnotation(a) => {
            let threshold = check_threshold(a.threshold)?;
            if a.n_per_band == 0 {
                return Err(BitextError::config("n_per_band must be at least 1"));
            }
            let mut pool = a.input.load()?;
            if let Some(p) = &a.near_misses {
                pool.extend(load_pairs(p, &a.input.src_lang, &a.input.tgt_lang)?);
            }
            let (samples, report) = stratified_sample(&pool, threshold, a.n_per_band, seed);
            for w in &report.warnings {
                log::warn!("{w}");
            }
            annotation::write_export(&a.export, &samples)?;
            annotation::write_key(&a.key, &samples)?;
        }
        Command::Analyze(a) => {
            let keys = annotation::read_key(&a.key)?;
            let anns = annotation::read_annotations(&a.annotations)?;
            let report = analysis_report(&keys, &anns);
            if !report.unannotated_samples.is_empty() {
                log::warn!("{} samples have no annotation", report.unannotated_samples.len());
            }
            if report.unknown_annotations > 0 {
                log::warn!("{} annotations reference unknown samples", report.unknown_annotations);
            }
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let io = |e| BitextError::io(Path::new("<stdout>"), e);
            print_table(&mut out, "overall", &report.overall).map_err(io)?;
            for (l, t) in &report.per_language {
                print_table(&mut out, l, t).map_err(io)?;
            }
            write_report(a.out.as_ref(), &report)?;
        }
        Command::Stats(a) => {
            let mut stats = CorpusStats::default();
            for (pair, n) in read_counts(&a.existing)? {
                stats.insert(&pair, PairCounts { existing: n, mined: 0 });
            }
            if let Some(p) = &a.mined_counts {
                for (pair, n) in read_counts(p)? {
                    stats.insert(&pair, PairCounts { existing: 0, mined: n });
                }
            }
            for (pair, path) in &a.mined {
                stats.insert(pair, PairCounts { existing: 0, mined: count_lines(path)? });
            }
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let io = |e| BitextError::io(Path::new("<stdout>"), e);
            writeln!(out, "pair\texisting\tmined\ttotal\tfactor").map_err(io)?;
            for row in stats.rows() {
                writeln!(out, "{}", row.join("\t")).map_err(io)?;
            }
        }
        Command::Run(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(w) = a.workers {
                cfg.workers = w;
            }
            if let Some(d) = a.out_dir {
                cfg.out_dir = d;
            }
            let plan = StagePlan {
                from: a.from.unwrap_or(Stage::Ingest),
                to: a.to.unwrap_or(Stage::Sample),
                force: a.force,
            };
            let summary = run_pipeline(&cfg, plan)?;
            for s in &summary.stages {
                log::info!("{}: {:?} {:?}", s.stage, s.status, s.counts);
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 for usage and configuration errors, 2 when processing
/// fails.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            e.exit_code()
        }
    }
}
