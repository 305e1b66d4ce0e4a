//! Running one detector over a windowed stream, and the topics file that
//! records the result: a header line, then one line per window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::background::BackgroundModels;
use crate::cl_methods::{cl_detect, ClError, ClPipelineConfig, ClusterCount, ClusterKind};
use crate::clustering::{silhouette, Metric};
use crate::embeddings::{embed_document, EmbeddingTable, OovPolicy};
use crate::fp::{tscv_detect, DsfgConfig, DsfgDetector, TscvConfig, UfptConfig, UfptDetector};
use crate::hybrid::{catt_detect, sgjp_detect, BackgroundPhrases, CattConfig, FhknConfig, FhknDetector, HybridError, SgjpConfig};
use crate::preprocess::{compound_title, CompoundLexicon};
use crate::stream::WindowBatch;
use crate::topic::{sort_topics, Topic};

pub const TOPICS_FORMAT: &str = "topicstream-topics";
pub const TOPICS_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("{method} has no parameter {name:?}")]
    UnknownParam { method: Method, name: String },
    #[error("parameter {name} = {value}: {msg}")]
    InvalidParam { name: String, value: f64, msg: String },
    #[error("{method} needs {resource}")]
    MissingResource { method: Method, resource: &'static str },
    #[error("window {window}: {source}")]
    Cl { window: usize, source: ClError },
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

/// The ten detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Tscv,
    Dsfg,
    Ufpt,
    Wvop,
    Ftop,
    Glcm,
    Glgk,
    Sgjp,
    Catt,
    Fhkn,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Tscv,
        Method::Dsfg,
        Method::Ufpt,
        Method::Wvop,
        Method::Ftop,
        Method::Glcm,
        Method::Glgk,
        Method::Sgjp,
        Method::Catt,
        Method::Fhkn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tscv => "TSCV",
            Method::Dsfg => "DSFG",
            Method::Ufpt => "UFPT",
            Method::Wvop => "WVOP",
            Method::Ftop => "FTOP",
            Method::Glcm => "GLCM",
            Method::Glgk => "GLGK",
            Method::Sgjp => "SGJP",
            Method::Catt => "CATT",
            Method::Fhkn => "FHKN",
        }
    }

    /// TSCV reads the reference corpus, SGJP the n-gram and anchor stores.
    pub fn needs_background(self) -> bool {
        matches!(self, Method::Tscv | Method::Sgjp)
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, Method::Wvop | Method::Ftop | Method::Glcm | Method::Glgk)
    }

    /// Tunable parameters, as accepted by [`MethodConfig::set`].
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Method::Tscv => &["k", "b", "c"],
            Method::Dsfg => &["history"],
            Method::Ufpt => &["min_util_fraction", "max_pattern_len"],
            Method::Wvop | Method::Ftop => &["min_pts", "xi", "title_words"],
            Method::Glcm => &["clusters", "c_min", "c_max", "m", "epsilon", "title_words"],
            Method::Glgk => &["clusters", "c_min", "c_max", "m", "epsilon", "rho", "title_words"],
            Method::Sgjp => &["h", "threshold", "k", "k_min"],
            Method::Catt => &["damp", "rate"],
            Method::Fhkn => &["min_support_rate", "max_pattern_len", "top_k", "knn_k", "tau", "min_split_modularity", "title_words"],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RunError::UnknownMethod(s.to_string()))
    }
}

/// Parameters of one method.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodConfig {
    Tscv(TscvConfig),
    Dsfg(DsfgConfig),
    Ufpt(UfptConfig),
    Cl(ClPipelineConfig),
    Sgjp(SgjpConfig),
    Catt(CattConfig),
    Fhkn(FhknConfig),
}

fn count(name: &str, value: f64, min: usize) -> Result<usize, RunError> {
    if value.fract() != 0.0 || value < min as f64 || value > u32::MAX as f64 {
        return Err(RunError::InvalidParam {
            name: name.into(),
            value,
            msg: format!("expected a whole number >= {min}"),
        });
    }
    Ok(value as usize)
}

fn positive(name: &str, value: f64) -> Result<f64, RunError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(RunError::InvalidParam {
            name: name.into(),
            value,
            msg: "expected a positive number".into(),
        });
    }
    Ok(value)
}

impl MethodConfig {
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::Tscv => MethodConfig::Tscv(TscvConfig::default()),
            Method::Dsfg => MethodConfig::Dsfg(DsfgConfig::default()),
            Method::Ufpt => MethodConfig::Ufpt(UfptConfig::default()),
            Method::Wvop => MethodConfig::Cl(ClPipelineConfig::wvop()),
            Method::Ftop => MethodConfig::Cl(ClPipelineConfig::ftop()),
            Method::Glcm => MethodConfig::Cl(ClPipelineConfig::glcm()),
            Method::Glgk => MethodConfig::Cl(ClPipelineConfig::glgk()),
            Method::Sgjp => MethodConfig::Sgjp(SgjpConfig::default()),
            Method::Catt => MethodConfig::Catt(CattConfig::default()),
            Method::Fhkn => MethodConfig::Fhkn(FhknConfig::default()),
        }
    }

    /// Defaults with the given overrides applied in order.
    pub fn with_params(method: Method, params: &[(String, f64)]) -> Result<Self, RunError> {
        let mut cfg = MethodConfig::default_for(method);
        for (name, value) in params {
            cfg.set(method, name, *value)?;
        }
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let MethodConfig::Cl(c) = self {
            c.seed = seed;
        }
    }

    /// Sets one named parameter. `method` is needed to tell the embedding
    /// methods apart, which share one configuration type.
    pub fn set(&mut self, method: Method, name: &str, value: f64) -> Result<(), RunError> {
        if !method.param_names().contains(&name) {
            return Err(RunError::UnknownParam { method, name: name.into() });
        }
        match self {
            MethodConfig::Tscv(c) => match name {
                "k" => c.k = count(name, value, 1)?,
                "b" => c.b = value,
                _ => c.c = positive(name, value)?,
            },
            MethodConfig::Dsfg(c) => c.history_len = count(name, value, 1)?,
            MethodConfig::Ufpt(c) => match name {
                "min_util_fraction" => c.min_util_fraction = positive(name, value)?,
                // 0 lifts the cap
                _ => c.max_pattern_len = Some(count(name, value, 0)?).filter(|&n| n > 0),
            },
            MethodConfig::Cl(c) => set_cl(c, name, value)?,
            MethodConfig::Sgjp(c) => match name {
                "h" => c.h = count(name, value, 1)?,
                "threshold" => c.threshold = count(name, value, 1)?,
                "k" => c.k = count(name, value, 1)?,
                _ => c.k_min = count(name, value, 1)?,
            },
            MethodConfig::Catt(c) => {
                match name {
                    "damp" => c.delta = value,
                    _ => c.rate = value,
                }
                c.validate()?;
            }
            MethodConfig::Fhkn(c) => match name {
                "min_support_rate" => c.min_support_rate = positive(name, value)?,
                "max_pattern_len" => c.max_pattern_len = count(name, value, 2)?,
                "top_k" => c.top_k = count(name, value, 1)?,
                "knn_k" => c.knn_k = count(name, value, 1)?,
                "tau" => c.tau = value,
                "min_split_modularity" => c.min_split_modularity = value,
                _ => c.title_words = count(name, value, 1)?,
            },
        }
        Ok(())
    }
}

fn set_cl(c: &mut ClPipelineConfig, name: &str, value: f64) -> Result<(), RunError> {
    let range = |kind: &ClusterKind| match kind {
        ClusterKind::CMeans { count } | ClusterKind::GustafsonKessel { count, .. } => match count {
            ClusterCount::BySilhouette { min, max } => (*min, *max),
            ClusterCount::Fixed(n) => (*n, *n),
        },
        ClusterKind::Optics { .. } => (0, 0),
    };
    let set_count = |kind: &mut ClusterKind, new: ClusterCount| match kind {
        ClusterKind::CMeans { count } | ClusterKind::GustafsonKessel { count, .. } => *count = new,
        ClusterKind::Optics { .. } => {}
    };
    match (name, &mut c.kind) {
        ("min_pts", ClusterKind::Optics { min_pts, .. }) => *min_pts = count(name, value, 2)?,
        ("xi", ClusterKind::Optics { xi, .. }) => {
            if !(value > 0.0 && value < 1.0) {
                return Err(RunError::InvalidParam {
                    name: name.into(),
                    value,
                    msg: "expected a value in (0, 1)".into(),
                });
            }
            *xi = value;
        }
        ("rho", ClusterKind::GustafsonKessel { rho, .. }) => *rho = positive(name, value)?,
        ("clusters", kind) => {
            // 0 chooses the count by silhouette
            let n = count(name, value, 0)?;
            let new = if n == 0 { ClusterCount::default() } else { ClusterCount::Fixed(n) };
            set_count(kind, new);
        }
        ("c_min", kind) => {
            let (_, max) = range(kind);
            set_count(kind, ClusterCount::BySilhouette { min: count(name, value, 2)?, max: max.max(2) });
        }
        ("c_max", kind) => {
            let (min, _) = range(kind);
            set_count(kind, ClusterCount::BySilhouette { min: min.max(2), max: count(name, value, 2)? });
        }
        ("m", _) => {
            if !(value > 1.0 && value.is_finite()) {
                return Err(RunError::InvalidParam {
                    name: name.into(),
                    value,
                    msg: "fuzzifier must exceed 1".into(),
                });
            }
            c.m = value;
        }
        ("epsilon", _) => c.epsilon = positive(name, value)?,
        _ => c.title_words = count(name, value, 1)?,
    }
    Ok(())
}

/// Models a run may draw on; which ones are required depends on the method.
#[derive(Debug, Default)]
pub struct Resources {
    pub background: Option<BackgroundModels>,
    pub embeddings: Option<EmbeddingTable>,
    /// Known compounds, used to join adjacent title words.
    pub compounds: Option<CompoundLexicon>,
}

enum State {
    Tscv(TscvConfig),
    Dsfg(DsfgDetector),
    Ufpt(UfptDetector),
    Cl(ClPipelineConfig),
    Sgjp(SgjpConfig),
    Catt(CattConfig),
    Fhkn(FhknDetector),
}

/// One method bound to its resources, carrying state across windows.
pub struct Detector<'a> {
    pub method: Method,
    state: State,
    resources: &'a Resources,
}

impl<'a> Detector<'a> {
    /// Fails before any window is processed if a required model is missing.
    pub fn new(method: Method, config: MethodConfig, resources: &'a Resources) -> Result<Self, RunError> {
        if method.needs_background() && resources.background.is_none() {
            return Err(RunError::MissingResource {
                method,
                resource: "a background model directory",
            });
        }
        if method.needs_embeddings() && resources.embeddings.is_none() {
            return Err(RunError::MissingResource {
                method,
                resource: "an embedding table",
            });
        }
        let state = match (method, config) {
            (Method::Tscv, MethodConfig::Tscv(c)) => State::Tscv(c),
            (Method::Dsfg, MethodConfig::Dsfg(c)) => State::Dsfg(DsfgDetector::new(c)),
            (Method::Ufpt, MethodConfig::Ufpt(c)) => State::Ufpt(UfptDetector::new(c)),
            (Method::Wvop | Method::Ftop | Method::Glcm | Method::Glgk, MethodConfig::Cl(c)) => State::Cl(c),
            (Method::Sgjp, MethodConfig::Sgjp(c)) => State::Sgjp(c),
            (Method::Catt, MethodConfig::Catt(c)) => {
                c.validate()?;
                State::Catt(c)
            }
            (Method::Fhkn, MethodConfig::Fhkn(c)) => State::Fhkn(FhknDetector::new(c)),
            (method, config) => panic!("{method} given a configuration of another method: {config:?}"),
        };
        Ok(Detector { method, state, resources })
    }

    /// Topics of one window, in output order.
    pub fn detect(&mut self, batch: &WindowBatch) -> Result<Vec<Topic>, RunError> {
        let bg = self.resources.background.as_ref();
        let mut topics = match &mut self.state {
            State::Tscv(c) => tscv_detect(batch, &bg.expect("checked in new").reference, c),
            State::Dsfg(d) => d.detect(batch),
            State::Ufpt(d) => d.detect(batch),
            State::Cl(c) => {
                let table = self.resources.embeddings.as_ref().expect("checked in new");
                match cl_detect(batch, table, c, None) {
                    Ok(t) => t,
                    // a window where no post has a vector has no topics
                    Err(ClError::Unembeddable(n)) => {
                        log::warn!("window {}: none of {n} posts could be embedded", batch.index);
                        Vec::new()
                    }
                    Err(source) => return Err(RunError::Cl { window: batch.index, source }),
                }
            }
            State::Sgjp(c) => {
                let bg = bg.expect("checked in new");
                let model = BackgroundPhrases {
                    ngrams: &bg.ngrams,
                    anchors: &bg.anchors,
                };
                sgjp_detect(batch, c, &model)
            }
            State::Catt(c) => catt_detect(batch, c)?,
            State::Fhkn(d) => d.detect(batch),
        };
        if let Some(lex) = &self.resources.compounds {
            for t in &mut topics {
                t.keywords = compound_title(&t.keywords, lex);
            }
        }
        sort_topics(&mut topics);
        Ok(topics)
    }
}

/// First line of a topics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub format: String,
    pub version: u32,
    pub method: String,
    pub window_seconds: i64,
    pub seed: u64,
    /// Parameters that differ from the method's defaults.
    pub params: BTreeMap<String, f64>,
}

impl RunHeader {
    pub fn new(method: Method, window_seconds: i64, seed: u64, params: &[(String, f64)]) -> Self {
        RunHeader {
            format: TOPICS_FORMAT.into(),
            version: TOPICS_VERSION,
            method: method.name().into(),
            window_seconds,
            seed,
            params: params.iter().cloned().collect(),
        }
    }
}

/// Topics found in one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window: usize,
    pub method: String,
    pub start: i64,
    pub end: i64,
    pub topics: Vec<Topic>,
}

/// Runs the detector over every window in order.
pub fn run_detector(detector: &mut Detector<'_>, batches: &[WindowBatch]) -> Result<Vec<WindowRecord>, RunError> {
    batches
        .iter()
        .map(|b| {
            let topics = detector.detect(b)?;
            log::debug!("{} window {}: {} posts, {} topics", detector.method, b.index, b.len(), topics.len());
            Ok(WindowRecord {
                window: b.index,
                method: detector.method.name().into(),
                start: b.start,
                end: b.end,
                topics,
            })
        })
        .collect()
}

pub fn write_topics(path: &Path, header: &RunHeader, records: &[WindowRecord]) -> Result<(), RunError> {
    let io_err = |source| RunError::Io { path: path.to_path_buf(), source };
    let mut out = io::BufWriter::new(File::create(path).map_err(io_err)?);
    serde_json::to_writer(&mut out, header).expect("header serializes");
    out.write_all(b"\n").map_err(io_err)?;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| RunError::Io {
            path: path.to_path_buf(),
            source: io::Error::other(e),
        })?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_topics(path: &Path) -> Result<(RunHeader, Vec<WindowRecord>), RunError> {
    let io_err = |source| RunError::Io { path: path.to_path_buf(), source };
    let parse_err = |line: usize, msg: String| RunError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut header: Option<RunHeader> = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let h: RunHeader = serde_json::from_str(&line).map_err(|e| parse_err(i + 1, format!("header: {e}")))?;
            if h.format != TOPICS_FORMAT || h.version != TOPICS_VERSION {
                return Err(parse_err(i + 1, format!("unsupported format {} v{}", h.format, h.version)));
            }
            header = Some(h);
        } else {
            records.push(serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?);
        }
    }
    let header = header.ok_or_else(|| parse_err(1, "missing header".into()))?;
    Ok((header, records))
}

/// Mean silhouette of the detected partition in embedding space. Each post
/// takes the first (highest-ranked) topic that lists it; posts without a
/// topic or a vector are left out. Windows are weighted by the number of
/// posts scored; windows with fewer than two topics do not count. `None`
/// when no window qualifies.
pub fn embedding_silhouette(records: &[WindowRecord], batches: &[WindowBatch], table: &EmbeddingTable, metric: Metric) -> Option<f64> {
    let mut total = 0.0;
    let mut weight = 0usize;
    for (record, batch) in records.iter().zip(batches) {
        let mut first: BTreeMap<&str, usize> = BTreeMap::new();
        for (j, t) in record.topics.iter().enumerate() {
            for id in &t.post_ids {
                first.entry(id.as_str()).or_insert(j);
            }
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for post in &batch.posts {
            let Some(&label) = first.get(post.id.as_str()) else { continue };
            if let Ok(v) = embed_document(post.words(), table, OovPolicy::Skip) {
                points.push(v.vector);
                labels.push(label);
            }
        }
        if labels.iter().collect::<BTreeSet<_>>().len() < 2 {
            continue;
        }
        if let Ok(s) = silhouette(&points, &labels, metric) {
            total += s * points.len() as f64;
            weight += points.len();
        }
    }
    (weight > 0).then(|| total / weight as f64)
}
