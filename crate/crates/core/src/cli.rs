//! Command-line front end. Every run ends by printing a JSON manifest (command,
//! seeds, config, version) to stderr. Exit codes: 0 success, 1 usage error,
//! 2 data error, 3 model error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::aspect_model::{
    evaluate_aspect_model, train_aspect_model, AspectModelError, AspectSentimentModel, LabeledComment, TrainConfigAspect,
};
use crate::corpus::{
    annotator_labels, build_corpus, corpus_stats, export_annotation_batch, import_annotations, load_corpus, partition,
    write_annotation_batches, write_snapshot, AnnotationFile, Corpus, CorpusError, CorpusFormat, Paper, ReviewPair,
    SplitSpec, SplitUnit, Stratify,
};
use crate::disagreement::{
    evaluate_disagreement, load_nli_pretrained, train_disagreement, DisagreementError, DisagreementModel, LabeledPair,
    TrainConfigPair,
};
use crate::llm_baseline::{evaluate_llm, LlmClient, LlmClientConfig, LlmError, PromptTemplate};
use crate::metrics::{average_pairwise_kappa, error_report, evaluate_end_to_end, ErrorReportConfig, MetricsError};
use crate::pipeline::{render_html, render_text, Detector, PaperReport, PipelineError, ReportManifest, Thresholds};
use crate::sdap::{CommentLabeler, GoldLabels, LabelSource, SdapError};

const ASPECT_SUBDIR: &str = "aspect";
const DISAGREE_SUBDIR: &str = "disagree";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Model(m) => m,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AspectModelError> for CliError {
    fn from(e: AspectModelError) -> Self {
        use AspectModelError::*;
        match e {
            InvalidConfig(_) => CliError::Usage(e.to_string()),
            EmptyAfterTokenization | EmptyTrainingSet | EmptyEvaluationSet => CliError::Data(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<DisagreementError> for CliError {
    fn from(e: DisagreementError) -> Self {
        use DisagreementError::*;
        match e {
            InvalidConfig(_) => CliError::Usage(e.to_string()),
            EmptyText => CliError::Data(e.to_string()),
            EmptyTrainingSet | EmptyEvaluationSet => {
                CliError::Data(format!("{e} (comment pairs need gold labels; see `revcon annotate`)"))
            }
            SingleClassTrainingSet(_) => CliError::Data(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::MissingPlaceholder(_) | LlmError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            LlmError::Empty => CliError::Data(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<SdapError> for CliError {
    fn from(e: SdapError) -> Self {
        match e {
            SdapError::MissingLabels(_) => CliError::Data(e.to_string()),
            SdapError::Labeler { .. } => CliError::Model(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Labeling(inner) => inner.into(),
            MetricsError::Classifier(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Labeling { source: SdapError::Labeler { .. }, .. } | PipelineError::Classification { .. } => {
                CliError::Model(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "revcon", version, about = "Find contradictions between peer reviews of the same paper")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Corpus: a `.jsonl` file, a directory of review text files, or a JSON snapshot.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// JSON config whose keys match the relevant config type.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the train/validation/test split.
    #[arg(long, default_value_t = 42)]
    split_seed: u64,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; HTML and text apply to reports.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Html,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a corpus, derive pairs, weak labels and comment pairs, and save a snapshot.
    Ingest(Common),
    /// Corpus statistics per venue and aspect.
    Stats(Common),
    /// Review pairs with their weak labels.
    Pairs {
        #[command(flatten)]
        common: Common,
        /// Restrict to one paper id.
        #[arg(long)]
        paper: Option<String>,
    },
    /// Export comment pairs for labeling and import the labeled batches.
    #[command(subcommand)]
    Annotate(AnnotateCommand),
    /// Train a model from the corpus training split.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Score a model on the held-out test split.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Contradiction findings for one paper or two review files.
    Detect(DetectArgs),
    /// Like `detect` but renders HTML by default; `--from` re-renders a saved JSON report.
    Report {
        #[command(flatten)]
        detect: DetectArgs,
        /// Saved JSON report to render instead of running detection.
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum AnnotateCommand {
    /// Write comment pairs into CSV annotation batches under `--out`.
    Export {
        #[command(flatten)]
        common: Common,
        /// Comment pairs per CSV file.
        #[arg(long, default_value_t = 100)]
        batch_size: usize,
        /// Balance batches over gold labels or over single versus multi-aspect pairs.
        #[arg(long, value_enum, default_value_t = StratifyArg::None)]
        stratify: StratifyArg,
        /// Only export comment pairs without a gold label.
        #[arg(long)]
        unlabeled_only: bool,
    },
    /// Apply annotation batches and save the labeled snapshot to `--out`.
    Import {
        #[command(flatten)]
        common: Common,
        /// Annotated CSV batches.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StratifyArg {
    None,
    Gold,
    Aspects,
}

#[derive(Debug, Subcommand)]
enum TrainCommand {
    /// Train the aspect model; saves to `<checkpoint>/aspect`.
    Aspect(ModelArgs),
    /// Train the contradiction classifier; saves to `<checkpoint>/disagree`.
    Disagree(ModelArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint root holding the `aspect` and `disagree` model directories.
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Debug, Subcommand)]
enum EvaluateCommand {
    /// Aspect detection and sentiment metrics on test comments.
    Aspect(ModelArgs),
    /// Contradiction classifier metrics on test comment pairs.
    Disagree {
        #[command(flatten)]
        model: ModelArgs,
        /// Treat the checkpoint as a three-way NLI model with this backbone id.
        #[arg(long)]
        nli: Option<String>,
    },
    /// Both stages on the test pairs, with an error report.
    E2e {
        #[command(flatten)]
        model: ModelArgs,
        /// Use gold aspect labels instead of the aspect model.
        #[arg(long)]
        gold_labels: bool,
    },
    /// Zero-shot chat model on the test comment pairs; `--config` holds the client config.
    Llm {
        #[command(flatten)]
        common: Common,
        /// JSON prompt template `{"text": ..., "version": ...}`.
        #[arg(long)]
        template: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint root holding the `aspect` and `disagree` model directories.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Paper id in the corpus.
    #[arg(long)]
    paper: Option<String>,
    /// Two review text files to compare instead of a corpus paper.
    #[arg(long, num_args = 2, value_names = ["REVIEW_A", "REVIEW_B"])]
    reviews: Option<Vec<PathBuf>>,
    /// Use the corpus aspect labels instead of the aspect model.
    #[arg(long)]
    gold_labels: bool,
    /// Average the classifier over both comment orders.
    #[arg(long)]
    symmetrize: bool,
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut manifest = json!({
        "tool": "revcon",
        "version": env!("CARGO_PKG_VERSION"),
        "started_at": Utc::now().to_rfc3339(),
    });
    let result = dispatch(cli.command, &mut manifest);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    };
    manifest["exit_code"] = json!(code);
    eprintln!("{manifest}");
    code
}

fn dispatch(command: Command, manifest: &mut Value) -> Result<(), CliError> {
    match command {
        Command::Ingest(c) => {
            record(manifest, "ingest", &c, Value::Null);
            let raw = load_corpus(corpus_path(&c)?, CorpusFormat::detect(corpus_path(&c)?))?;
            let (corpus, summary) = build_corpus(&raw)?;
            let out = c.out.as_ref().ok_or_else(|| CliError::Usage("ingest needs --out".into()))?;
            write_snapshot(&corpus, out)?;
            emit(&None, &to_json(&summary)?)
        }
        Command::Stats(c) => {
            record(manifest, "stats", &c, Value::Null);
            let stats = corpus_stats(&load(&c)?);
            match c.format {
                Format::Text => emit(&c.out, &stats.render_text()),
                _ => emit(&c.out, &to_json(&stats)?),
            }
        }
        Command::Pairs { common, paper } => {
            record(manifest, "pairs", &common, Value::Null);
            let corpus = load(&common)?;
            if let Some(id) = &paper {
                find_paper(&corpus, id)?;
            }
            let pairs: Vec<&ReviewPair> = corpus
                .pairs
                .iter()
                .filter(|p| paper.as_ref().is_none_or(|id| &p.paper_id == id))
                .collect();
            emit(&common.out, &to_json(&pairs)?)
        }
        Command::Annotate(AnnotateCommand::Export { common, batch_size, stratify, unlabeled_only }) => {
            record(manifest, "annotate export", &common, Value::Null);
            let corpus = load(&common)?;
            let rpcs: Vec<_> = corpus
                .rpcs
                .iter()
                .filter(|r| !unlabeled_only || r.gold_label.is_none())
                .cloned()
                .collect();
            let stratify = match stratify {
                StratifyArg::None => Stratify::None,
                StratifyArg::Gold => Stratify::GoldLabel,
                StratifyArg::Aspects => Stratify::AspectCount,
            };
            let seed = common.seed.unwrap_or(42);
            let files = export_annotation_batch(&corpus, &rpcs, batch_size, seed, stratify)?;
            let dir = common.out.as_ref().ok_or_else(|| CliError::Usage("annotate export needs --out DIR".into()))?;
            let written = write_annotation_batches(&files, dir)?;
            emit(&None, &to_json(&written)?)
        }
        Command::Annotate(AnnotateCommand::Import { common, files }) => {
            record(manifest, "annotate import", &common, Value::Null);
            let corpus = load(&common)?;
            let files = files
                .iter()
                .map(|p| AnnotationFile::read(p))
                .collect::<Result<Vec<_>, _>>()?;
            let labeled = import_annotations(&corpus, &files)?;
            let kappa = average_pairwise_kappa(&annotator_labels(&files)?);
            let out = common.out.as_ref().ok_or_else(|| CliError::Usage("annotate import needs --out".into()))?;
            write_snapshot(&labeled, out)?;
            let labeled_count = labeled.rpcs.iter().filter(|r| r.gold_label.is_some()).count();
            emit(&None, &to_json(&json!({"labeled_rpcs": labeled_count, "mean_pairwise_kappa": kappa}))?)
        }
        Command::Train(TrainCommand::Aspect(args)) => {
            let mut config: TrainConfigAspect = read_config(&args.common)?;
            if let Some(seed) = args.common.seed {
                config.seed = seed;
            }
            record(manifest, "train aspect", &args.common, serde_json::to_value(&config).unwrap_or_default());
            let corpus = load(&args.common)?;
            let split = comment_split(&corpus, args.common.split_seed)?;
            let (model, report) = train_aspect_model(&split.train, &split.validation, &config)?;
            let dir = args.checkpoint.join(ASPECT_SUBDIR);
            model.save(&dir)?;
            manifest["checkpoint"] = json!(dir);
            emit(&args.common.out, &to_json(&report)?)
        }
        Command::Train(TrainCommand::Disagree(args)) => {
            let mut config: TrainConfigPair = read_config(&args.common)?;
            if let Some(seed) = args.common.seed {
                config.seed = seed;
            }
            record(manifest, "train disagree", &args.common, serde_json::to_value(&config).unwrap_or_default());
            let corpus = load(&args.common)?;
            let split = pair_split(&corpus, args.common.split_seed)?;
            let train = split.labeled_pairs(&corpus, Part::Train)?;
            let validation = split.labeled_pairs(&corpus, Part::Validation)?;
            let (model, report) = train_disagreement(&train, &validation, &config)?;
            let dir = args.checkpoint.join(DISAGREE_SUBDIR);
            model.save(&dir)?;
            manifest["checkpoint"] = json!(dir);
            emit(&args.common.out, &to_json(&report)?)
        }
        Command::Evaluate(EvaluateCommand::Aspect(args)) => {
            record(manifest, "evaluate aspect", &args.common, Value::Null);
            let corpus = load(&args.common)?;
            let model = AspectSentimentModel::load(&model_dir(&args.checkpoint, ASPECT_SUBDIR))?;
            let split = comment_split(&corpus, args.common.split_seed)?;
            emit(&args.common.out, &to_json(&evaluate_aspect_model(&model, &split.test)?)?)
        }
        Command::Evaluate(EvaluateCommand::Disagree { model: args, nli }) => {
            record(manifest, "evaluate disagree", &args.common, json!({ "nli": nli }));
            let corpus = load(&args.common)?;
            let dir = model_dir(&args.checkpoint, DISAGREE_SUBDIR);
            let model = match &nli {
                Some(backbone) => load_nli_pretrained(backbone, &dir)?,
                None => DisagreementModel::load(&dir)?,
            };
            let test = pair_split(&corpus, args.common.split_seed)?.labeled_pairs(&corpus, Part::Test)?;
            let report = evaluate_disagreement(&model, &test)?;
            match args.common.format {
                Format::Text => emit(&args.common.out, &report.render_table(nli.as_deref().unwrap_or("trained"))),
                _ => emit(&args.common.out, &to_json(&report)?),
            }
        }
        Command::Evaluate(EvaluateCommand::E2e { model: args, gold_labels }) => {
            record(manifest, "evaluate e2e", &args.common, json!({ "gold_labels": gold_labels }));
            let corpus = load(&args.common)?;
            let aspect = (!gold_labels)
                .then(|| AspectSentimentModel::load(&model_dir(&args.checkpoint, ASPECT_SUBDIR)))
                .transpose()?;
            let classifier = DisagreementModel::load(&model_dir(&args.checkpoint, DISAGREE_SUBDIR))?;
            let labeler: &dyn CommentLabeler = match &aspect {
                Some(m) => m,
                None => &GoldLabels,
            };
            let split = pair_split(&corpus, args.common.split_seed)?;
            let test_pairs: Vec<ReviewPair> = corpus
                .pairs
                .iter()
                .filter(|p| split.test.contains(&p.pair_id))
                .cloned()
                .collect();
            let report = evaluate_end_to_end(&corpus, &test_pairs, labeler, &classifier)?;
            let errors = error_report(&report, &ErrorReportConfig::default());
            emit(&args.common.out, &to_json(&json!({"report": report, "errors": errors}))?)
        }
        Command::Evaluate(EvaluateCommand::Llm { common, template }) => {
            let config: LlmClientConfig = read_config(&common)?;
            let template = match &template {
                Some(path) => read_json::<PromptTemplate>(path).map_err(CliError::Usage)?,
                None => PromptTemplate::default(),
            };
            template.validate()?;
            record(manifest, "evaluate llm", &common, json!({"client": config, "template_version": template.version}));
            let corpus = load(&common)?;
            let test = pair_split(&corpus, common.split_seed)?.labeled_pairs(&corpus, Part::Test)?;
            let client = LlmClient::http(config)?;
            let evaluation = evaluate_llm(&client, &template, &test)?;
            emit(&common.out, &to_json(&evaluation)?)
        }
        Command::Detect(args) => {
            record(manifest, "detect", &args.common, json!({"paper": args.paper}));
            detect(&args, manifest, args.common.format)
        }
        Command::Report { detect: args, from } => {
            record(manifest, "report", &args.common, json!({"paper": args.paper}));
            let format = if args.common.format == Format::Json { Format::Html } else { args.common.format };
            match from {
                Some(path) => {
                    let report: PaperReport = read_json(&path).map_err(CliError::Data)?;
                    let paper = args
                        .common
                        .corpus
                        .as_ref()
                        .map(|_| load(&args.common))
                        .transpose()?
                        .and_then(|c| c.paper(&report.paper_id).cloned());
                    emit(&args.common.out, &render(&report, paper.as_ref(), format)?)
                }
                None => detect(&args, manifest, format),
            }
        }
    }
}

fn record(manifest: &mut Value, command: &str, common: &Common, extra: Value) {
    manifest["command"] = json!(command);
    manifest["corpus"] = json!(common.corpus);
    manifest["config_file"] = json!(common.config);
    manifest["seed"] = json!(common.seed);
    manifest["split_seed"] = json!(common.split_seed);
    if !extra.is_null() {
        manifest["settings"] = extra;
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
            }
            fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// The config file if given, otherwise defaults. Unknown keys are a usage error.
fn read_config<T: DeserializeOwned + Default>(common: &Common) -> Result<T, CliError> {
    match &common.config {
        Some(path) => read_json(path).map_err(CliError::Usage),
        None => Ok(T::default()),
    }
}

fn corpus_path(common: &Common) -> Result<&Path, CliError> {
    common
        .corpus
        .as_deref()
        .ok_or_else(|| CliError::Usage("--corpus is required".into()))
}

/// Loads a corpus and derives pairs and comment pairs when the source has none.
fn load(common: &Common) -> Result<Corpus, CliError> {
    let path = corpus_path(common)?;
    if !path.exists() {
        return Err(CliError::Data(format!("corpus not found: {}", path.display())));
    }
    let corpus = load_corpus(path, CorpusFormat::detect(path))?;
    if corpus.pairs.is_empty() {
        Ok(build_corpus(&corpus)?.0)
    } else {
        Ok(corpus)
    }
}

fn find_paper<'c>(corpus: &'c Corpus, paper_id: &str) -> Result<&'c Paper, CliError> {
    corpus
        .paper(paper_id)
        .ok_or_else(|| CliError::Data(format!("paper not found: {paper_id}")))
}

/// `<root>/<sub>` when it holds a checkpoint, otherwise `root` itself.
fn model_dir(root: &Path, sub: &str) -> PathBuf {
    let nested = root.join(sub);
    if nested.join("manifest.json").exists() {
        nested
    } else {
        root.to_path_buf()
    }
}

#[derive(Clone, Copy)]
enum Part {
    Train,
    Validation,
    Test,
}

/// Pair ids per part. Both the classifier and the end-to-end evaluation use this
/// split so test pairs never contribute training comment pairs.
struct PairSplit {
    train: BTreeSet<String>,
    validation: BTreeSet<String>,
    test: BTreeSet<String>,
}

impl PairSplit {
    fn labeled_pairs(&self, corpus: &Corpus, part: Part) -> Result<Vec<LabeledPair>, CliError> {
        let ids = match part {
            Part::Train => &self.train,
            Part::Validation => &self.validation,
            Part::Test => &self.test,
        };
        let rpcs: Vec<_> = corpus.rpcs.iter().filter(|r| ids.contains(&r.pair_id)).cloned().collect();
        Ok(LabeledPair::from_rpcs(corpus, &rpcs)?)
    }
}

fn pair_split(corpus: &Corpus, seed: u64) -> Result<PairSplit, CliError> {
    let ids: Vec<String> = corpus
        .pairs
        .iter()
        .filter(|p| p.weak_label.is_some())
        .map(|p| p.pair_id.clone())
        .collect();
    if ids.is_empty() {
        return Err(CliError::Data("corpus has no weakly labeled review pairs".into()));
    }
    let spec = SplitSpec { seed, unit: SplitUnit::Pair, ..SplitSpec::default() };
    let split = partition(ids, |id| id.clone(), &spec)?;
    Ok(PairSplit {
        train: split.train.into_iter().collect(),
        validation: split.validation.into_iter().collect(),
        test: split.test.into_iter().collect(),
    })
}

/// Comments of gold-labeled reviews, split by review.
fn comment_split(corpus: &Corpus, seed: u64) -> Result<crate::corpus::Split<LabeledComment>, CliError> {
    let comments: Vec<(String, LabeledComment)> = corpus
        .reviews()
        .filter(|r| !r.unlabeled && r.has_labeled_comments())
        .flat_map(|r| {
            r.comments.iter().map(move |c| {
                (r.review_id.clone(), LabeledComment { text: c.text.clone(), labels: c.labels.clone() })
            })
        })
        .collect();
    if comments.is_empty() {
        return Err(CliError::Data("corpus has no aspect-labeled reviews".into()));
    }
    let spec = SplitSpec { seed, ..SplitSpec::default() };
    let split = partition(comments, |(review, _)| review.clone(), &spec)?;
    let strip = |v: Vec<(String, LabeledComment)>| v.into_iter().map(|(_, c)| c).collect();
    Ok(crate::corpus::Split {
        train: strip(split.train),
        validation: strip(split.validation),
        test: strip(split.test),
    })
}

fn render(report: &PaperReport, paper: Option<&Paper>, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Html => Ok(render_html(report, paper)),
        Format::Text => Ok(render_text(report)),
    }
}

fn detect(args: &DetectArgs, manifest: &mut Value, format: Format) -> Result<(), CliError> {
    let corpus = match (&args.paper, &args.reviews) {
        (Some(_), Some(_)) => return Err(CliError::Usage("use either --paper or --reviews".into())),
        (None, None) => return Err(CliError::Usage("--paper or --reviews is required".into())),
        (Some(_), None) => Some(load(&args.common)?),
        (None, Some(_)) => None,
    };
    let paper = match (&corpus, &args.paper) {
        (Some(c), Some(id)) => Some(find_paper(c, id)?),
        _ => None,
    };
    let checkpoint = args
        .checkpoint
        .as_ref()
        .ok_or_else(|| CliError::Usage("--checkpoint is required".into()))?;
    let disagree_dir = model_dir(checkpoint, DISAGREE_SUBDIR);
    let mut classifier = DisagreementModel::load(&disagree_dir)?;
    classifier.symmetrize = args.symmetrize;
    let (aspect, aspect_dir) = if args.gold_labels {
        (None, None)
    } else {
        let dir = model_dir(checkpoint, ASPECT_SUBDIR);
        (Some(AspectSentimentModel::load(&dir)?), Some(dir))
    };
    let labeler: &dyn CommentLabeler = match &aspect {
        Some(m) => m,
        None => &GoldLabels,
    };
    let mut report_manifest = ReportManifest::new(
        Thresholds { aspect: aspect.as_ref().map(|m| m.threshold()), decision: classifier.threshold() },
        if aspect.is_some() { LabelSource::Predicted } else { LabelSource::Gold },
        classifier.symmetrize,
    );
    report_manifest.aspect_checkpoint = aspect_dir.map(|d| d.display().to_string());
    report_manifest.disagreement_checkpoint = Some(disagree_dir.display().to_string());
    manifest["report_manifest"] = serde_json::to_value(&report_manifest).unwrap_or_default();
    let detector = Detector::new(labeler, &classifier, report_manifest);
    match (paper, &args.reviews) {
        (Some(paper), _) => {
            let report = detector.detect(paper)?;
            emit(&args.common.out, &render(&report, Some(paper), format)?)
        }
        (None, Some(files)) => {
            let read = |p: &PathBuf| fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())));
            let findings = detector.detect_pair(&read(&files[0])?, &read(&files[1])?)?;
            emit(&args.common.out, &to_json(&findings)?)
        }
        (None, None) => unreachable!("checked above"),
    }
}
