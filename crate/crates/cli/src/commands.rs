//! The five subcommands.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use topicstream_core::background::{build_ngram_model, read_corpus, AnchorModel, BackgroundModels, BuildReport, RefCorpusModel};
use topicstream_core::embeddings::EmbeddingTable;
use topicstream_core::evaluation::{evaluate_run, Criterion, EntropyKernel, EvalError, GoldenStandard, ParamGrid, tune_parameter, DEFAULT_MATCH_THRESHOLD, RunMetrics, WindowOutput};
use topicstream_core::preprocess::{CompoundLexicon, Preprocessor, StopwordList};
use topicstream_core::runner::{embedding_silhouette, read_topics, run_detector, write_topics, Detector, MethodConfig, Resources, RunError, RunHeader, WindowRecord};
use topicstream_core::stream::{ingest_posts, window_stream, Post, WindowBatch, WindowSpec};
use topicstream_core::synth::{synthesize, SynthFiles, SynthSpec};

use crate::config::{KeyValues, RunConfig, PARAM_PREFIX};
use crate::CliError;

fn run_error(e: RunError) -> CliError {
    match e {
        RunError::UnknownMethod(_) | RunError::UnknownParam { .. } | RunError::InvalidParam { .. } | RunError::MissingResource { .. } => CliError::Usage(e.to_string()),
        RunError::Hybrid(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.into()),
    }
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Range { .. } | EvalError::Grid(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.into()),
    }
}

pub struct BuildArgs {
    pub corpus: Vec<PathBuf>,
    pub reference: Vec<PathBuf>,
    pub anchors: Option<PathBuf>,
    pub n_max: usize,
    pub out: PathBuf,
}

/// Builds and saves the background stores, returning their sizes.
pub fn build_bk(args: &BuildArgs) -> Result<BuildReport, CliError> {
    let docs = read_corpus(&args.corpus).context("reading the corpus")?;
    let ngrams = build_ngram_model(&docs, args.n_max).map_err(|e| CliError::Data(e.into()))?;
    let reference = if args.reference.is_empty() {
        RefCorpusModel::from_unigrams(&ngrams)
    } else {
        let docs = read_corpus(&args.reference).context("reading the reference corpus")?;
        let mut counts = std::collections::BTreeMap::<String, u64>::new();
        for w in docs.into_iter().flatten() {
            *counts.entry(w).or_insert(0) += 1;
        }
        RefCorpusModel::from_counts(counts)
    };
    let anchors = match &args.anchors {
        Some(path) if path.exists() => AnchorModel::load_tsv(path).map_err(|e| CliError::Data(e.into()))?,
        Some(path) => {
            log::warn!("{}: not found; building without anchor texts", path.display());
            AnchorModel::default()
        }
        None => {
            log::warn!("no anchor file given; building without anchor texts");
            AnchorModel::default()
        }
    };
    let models = BackgroundModels { ngrams, anchors, reference };
    models.save(&args.out).map_err(|e| CliError::Data(e.into()))?;
    Ok(models.report())
}

/// Models and windows shared by detect and sweep.
pub struct Prepared {
    pub resources: Resources,
    pub batches: Vec<WindowBatch>,
}

pub fn prepare(cfg: &RunConfig, need_embeddings: bool) -> Result<Prepared, CliError> {
    cfg.check_resources(need_embeddings)?;
    let mut resources = Resources::default();
    if cfg.method.needs_background() {
        let dir = cfg.models.as_ref().expect("checked");
        resources.background = Some(BackgroundModels::load(dir).with_context(|| format!("loading models from {}", dir.display()))?);
    }
    if cfg.method.needs_embeddings() || need_embeddings {
        let path = cfg.embeddings.as_ref().expect("checked");
        resources.embeddings = Some(EmbeddingTable::load(path, cfg.embedding_source).with_context(|| format!("loading embeddings from {}", path.display()))?);
    }
    if let Some(path) = &cfg.lexicon {
        resources.compounds = Some(CompoundLexicon::load(path).with_context(|| format!("reading {}", path.display()))?);
    }
    let stopwords = match &cfg.stopwords {
        Some(path) => StopwordList::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => StopwordList::default(),
    };
    let mut posts = ingest_posts(&cfg.posts).map_err(|e| CliError::Data(e.into()))?.posts;
    Preprocessor::new(cfg.script.clone(), stopwords).apply(&mut posts);
    let batches = window_stream(posts, WindowSpec { duration: cfg.window }).map_err(|e| CliError::Data(e.into()))?;
    Ok(Prepared { resources, batches })
}

pub fn detect(cfg: &RunConfig) -> Result<(PathBuf, Vec<WindowRecord>), CliError> {
    let out = cfg.out.clone().ok_or_else(|| CliError::Usage("no output file given (out = ... or --out)".into()))?;
    let params = cfg.numeric_params()?;
    let mut mc = MethodConfig::with_params(cfg.method, &params).map_err(run_error)?;
    mc.set_seed(cfg.seed);
    let prepared = prepare(cfg, false)?;
    let mut detector = Detector::new(cfg.method, mc, &prepared.resources).map_err(run_error)?;
    let records = run_detector(&mut detector, &prepared.batches).map_err(run_error)?;
    let header = RunHeader::new(cfg.method, cfg.window, cfg.seed, &params);
    write_topics(&out, &header, &records).map_err(run_error)?;
    Ok((out, records))
}

/// Classes carried by the posts inside each `[start, end)` span.
fn present_classes(spans: impl Iterator<Item = (i64, i64)>, posts: &[Post], golden: &GoldenStandard) -> Vec<BTreeSet<String>> {
    spans
        .map(|(start, end)| golden.classes_among(posts.iter().filter(|p| start <= p.timestamp && p.timestamp < end).map(|p| &p.id)))
        .collect()
}

fn score_records(records: &[WindowRecord], present: Option<&[BTreeSet<String>]>, golden: &GoldenStandard, threshold: f64) -> Result<RunMetrics, EvalError> {
    let outputs: Vec<WindowOutput> = records
        .iter()
        .enumerate()
        .map(|(i, r)| WindowOutput {
            window: r.window,
            topics: &r.topics,
            present: present.map(|p| &p[i]),
        })
        .collect();
    evaluate_run(&outputs, golden, threshold, &EntropyKernel)
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub threshold: f64,
    #[serde(flatten)]
    pub metrics: RunMetrics,
}

pub fn eval(topics: &Path, golden: &Path, catalog: &Path, posts: Option<&Path>, threshold: f64) -> Result<EvalReport, CliError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Usage(format!("threshold must be in [0, 1], got {threshold}")));
    }
    let (header, records) = read_topics(topics).map_err(run_error)?;
    let golden = GoldenStandard::load(golden, catalog).map_err(eval_error)?;
    let present = match posts {
        Some(path) => Some(present_classes(records.iter().map(|r| (r.start, r.end)), &ingest_posts(path).map_err(|e| CliError::Data(e.into()))?.posts, &golden)),
        None => None,
    };
    let metrics = score_records(&records, present.as_deref(), &golden, threshold).map_err(eval_error)?;
    if metrics.unlabeled > 0 {
        log::warn!("{} topic memberships refer to posts missing from the golden standard", metrics.unlabeled);
    }
    Ok(EvalReport {
        method: header.method,
        threshold,
        metrics,
    })
}

pub struct SweepOutcome {
    pub csv: String,
    pub best: Option<(Vec<(String, f64)>, f64)>,
}

pub fn sweep(cfg: &RunConfig) -> Result<SweepOutcome, CliError> {
    if cfg.params.is_empty() {
        return Err(CliError::Usage("nothing to sweep: give at least one param.NAME = RANGE".into()));
    }
    let criterion = match cfg.criterion {
        Some(c) => c,
        None if cfg.golden.is_some() => Criterion::MeanFs,
        None => Criterion::Silhouette,
    };
    let golden = match criterion {
        Criterion::MeanFs => {
            let (Some(g), Some(c)) = (&cfg.golden, &cfg.catalog) else {
                return Err(CliError::Usage("mean-fs needs golden = FILE and catalog = FILE".into()));
            };
            Some(GoldenStandard::load(g, c).map_err(eval_error)?)
        }
        Criterion::Silhouette => None,
    };
    let grid = ParamGrid::parse(&cfg.params).map_err(eval_error)?;
    let settings = grid.combinations().map_err(eval_error)?;
    // reject unknown parameter names before any run
    MethodConfig::with_params(cfg.method, &settings[0]).map_err(run_error)?;
    let prepared = prepare(cfg, criterion == Criterion::Silhouette)?;
    let posts: Vec<Post> = prepared.batches.iter().flat_map(|b| b.posts.iter().cloned()).collect();
    let records_of = |params: &Vec<(String, f64)>| -> Result<Vec<WindowRecord>, RunError> {
        let mut mc = MethodConfig::with_params(cfg.method, params)?;
        mc.set_seed(cfg.seed);
        let mut detector = Detector::new(cfg.method, mc, &prepared.resources)?;
        run_detector(&mut detector, &prepared.batches)
    };
    let present = golden.as_ref().map(|g| present_classes(prepared.batches.iter().map(|b| (b.start, b.end)), &posts, g));
    let result = tune_parameter(&settings, criterion, |params| -> anyhow::Result<f64> {
        let records = records_of(params)?;
        match criterion {
            Criterion::MeanFs => {
                let m = score_records(&records, present.as_deref(), golden.as_ref().expect("loaded"), DEFAULT_MATCH_THRESHOLD)?;
                m.fs.map(|f| f.mean_fs).ok_or_else(|| anyhow::anyhow!("no labelled post was assigned to a topic"))
            }
            Criterion::Silhouette => {
                let table = prepared.resources.embeddings.as_ref().expect("loaded");
                embedding_silhouette(&records, &prepared.batches, table, cfg.metric).ok_or_else(|| anyhow::anyhow!("no window has two topics"))
            }
        }
    })
    .map_err(eval_error)?;
    Ok(SweepOutcome {
        csv: result.to_csv(),
        best: result.best,
    })
}

/// The sweep's input configuration with the winning values filled in.
pub fn best_config(kv: &KeyValues, best: &[(String, f64)]) -> String {
    let mut kv = kv.clone();
    for (name, value) in best {
        kv.set(&format!("{PARAM_PREFIX}{name}"), &value.to_string(), None);
    }
    kv.to_text()
}

/// Writes the generated stream and a ready-to-use run configuration.
pub fn synth(spec: &SynthSpec, out: &Path) -> Result<SynthFiles, CliError> {
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = synthesize(spec).map_err(|e| CliError::Data(e.into()))?;
    let files = corpus.write(out).map_err(|e| CliError::Data(e.into()))?;
    let conf = format!(
        "# synthetic stream: {} topics, {} posts per topic per window, {} windows, noise {}\n\
         posts = posts.jsonl\ngolden = golden.jsonl\ncatalog = catalog.jsonl\nembeddings = embeddings.vec\nmodels = models\n\
         script = latin\nwindow = {}\nseed = {}\n",
        spec.topics, spec.posts_per_topic, spec.windows, spec.noise_rate, spec.window_seconds, spec.seed
    );
    let path = out.join("run.conf");
    fs::write(&path, conf).with_context(|| format!("writing {}", path.display()))?;
    Ok(files)
}
