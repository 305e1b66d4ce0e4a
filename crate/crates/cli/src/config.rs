//! Run configuration: a `key = value` text file, with command-line
//! overrides layered on top.
//!
//! ```text
//! # lines starting with '#' are comments
//! method = CATT
//! posts = posts.jsonl
//! window = 3600
//! param.damp = 0.5
//! ```
//!
//! Relative paths in a file are taken relative to that file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use topicstream_core::embeddings::EmbeddingSource;
use topicstream_core::evaluation::Criterion;
use topicstream_core::preprocess::TargetScript;
use topicstream_core::runner::Method;

use crate::CliError;

const PATH_KEYS: &[&str] = &["posts", "models", "embeddings", "stopwords", "lexicon", "golden", "catalog", "out"];
const VALUE_KEYS: &[&str] = &["method", "window", "embedding_source", "script", "seed", "criterion", "metric", "threshold"];
pub const PARAM_PREFIX: &str = "param.";

/// Raw entries in the order they were given; later entries override
/// earlier ones, except that a file may not repeat a key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    /// Parameter names in first-seen order, which fixes sweep column order.
    param_order: Vec<String>,
}

fn check_key(key: &str) -> Result<(), String> {
    if let Some(p) = key.strip_prefix(PARAM_PREFIX) {
        if p.is_empty() {
            return Err("empty parameter name".into());
        }
        return Ok(());
    }
    if PATH_KEYS.contains(&key) || VALUE_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown key {key:?}"))
    }
}

impl KeyValues {
    pub fn parse(text: &str, base: Option<&Path>, origin: &str) -> Result<Self, CliError> {
        let mut kv = KeyValues::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let usage = |msg: String| CliError::Usage(format!("{origin}:{}: {msg}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| usage("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            check_key(key).map_err(usage)?;
            if let Some(first) = seen.insert(key.to_string(), i + 1) {
                return Err(usage(format!("{key} already set on line {first}")));
            }
            kv.set(key, value, base);
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty());
        KeyValues::parse(&text, base, &path.display().to_string())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, item: &str) -> Result<(), CliError> {
        let (key, value) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("--set {item:?}: expected key=value")))?;
        let key = key.trim();
        check_key(key).map_err(|m| CliError::Usage(format!("--set: {m}")))?;
        self.set(key, value.trim(), None);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) {
        let value = match base {
            Some(dir) if PATH_KEYS.contains(&key) && Path::new(value).is_relative() => dir.join(value).to_string_lossy().into_owned(),
            _ => value.to_string(),
        };
        if let Some(p) = key.strip_prefix(PARAM_PREFIX) {
            if !self.param_order.iter().any(|q| q == p) {
                self.param_order.push(p.to_string());
            }
        }
        self.entries.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    /// `param.*` entries, without the prefix.
    pub fn params(&self) -> Vec<(String, String)> {
        self.param_order.iter().map(|p| (p.clone(), self.entries[&format!("{PARAM_PREFIX}{p}")].clone())).collect()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Usage(format!("{key} = {v:?} is not valid"))))
            .transpose()
    }

    /// Writes the entries back in file form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            if !k.starts_with(PARAM_PREFIX) {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        for (p, v) in self.params() {
            out.push_str(&format!("{PARAM_PREFIX}{p} = {v}\n"));
        }
        out
    }
}

/// Everything a detect or sweep run needs, validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub window: i64,
    pub posts: PathBuf,
    pub models: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embedding_source: EmbeddingSource,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub script: TargetScript,
    pub seed: u64,
    pub params: Vec<(String, String)>,
    pub golden: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub criterion: Option<Criterion>,
    pub metric: topicstream_core::clustering::Metric,
    pub out: Option<PathBuf>,
}

fn default_source(method: Method) -> EmbeddingSource {
    match method {
        Method::Wvop => EmbeddingSource::Word2Vec,
        Method::Ftop => EmbeddingSource::FastText,
        Method::Glcm | Method::Glgk => EmbeddingSource::Glove,
        _ => EmbeddingSource::Other,
    }
}

impl RunConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, CliError> {
        let method: Method = kv
            .get("method")
            .ok_or_else(|| CliError::Usage("no method given (method = ... or --method)".into()))?
            .parse()
            .map_err(|e: topicstream_core::runner::RunError| CliError::Usage(e.to_string()))?;
        let posts = kv.path("posts").ok_or_else(|| CliError::Usage("no posts file given (posts = ... or --posts)".into()))?;
        let window = kv.parsed::<i64>("window")?.unwrap_or(3600);
        if window <= 0 {
            return Err(CliError::Usage(format!("window must be positive, got {window}")));
        }
        let embedding_source = match kv.get("embedding_source") {
            None => default_source(method),
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "word2vec" => EmbeddingSource::Word2Vec,
                "fasttext" => EmbeddingSource::FastText,
                "glove" => EmbeddingSource::Glove,
                "other" => EmbeddingSource::Other,
                _ => return Err(CliError::Usage(format!("unknown embedding_source {s:?}"))),
            },
        };
        let script = match kv.get("script") {
            None => TargetScript::default(),
            Some(s) => TargetScript::parse(s).ok_or_else(|| CliError::Usage(format!("unknown script {s:?} (arabic, persian or latin)")))?,
        };
        let criterion = kv
            .get("criterion")
            .map(|c| Criterion::parse(c).ok_or_else(|| CliError::Usage(format!("unknown criterion {c:?} (silhouette or mean-fs)"))))
            .transpose()?;
        let metric = match kv.get("metric") {
            None => topicstream_core::clustering::Metric::Cosine,
            Some(m) => topicstream_core::clustering::Metric::parse(m).ok_or_else(|| CliError::Usage(format!("unknown metric {m:?}")))?,
        };
        Ok(RunConfig {
            method,
            window,
            posts,
            models: kv.path("models"),
            embeddings: kv.path("embeddings"),
            embedding_source,
            stopwords: kv.path("stopwords"),
            lexicon: kv.path("lexicon"),
            script,
            seed: kv.parsed::<u64>("seed")?.unwrap_or(topicstream_core::clustering::DEFAULT_SEED),
            params: kv.params(),
            golden: kv.path("golden"),
            catalog: kv.path("catalog"),
            criterion,
            metric,
            out: kv.path("out"),
        })
    }

    /// Parameters as numbers, for a single run.
    pub fn numeric_params(&self) -> Result<Vec<(String, f64)>, CliError> {
        self.params
            .iter()
            .map(|(k, v)| {
                v.parse::<f64>()
                    .map(|x| (k.clone(), x))
                    .map_err(|_| CliError::Usage(format!("param.{k} = {v:?} is not a number (ranges are for sweep)")))
            })
            .collect()
    }

    /// Fails before any data is read when the method's models are not
    /// configured.
    pub fn check_resources(&self, need_embeddings: bool) -> Result<(), CliError> {
        if self.method.needs_background() && self.models.is_none() {
            return Err(CliError::Usage(format!("{} needs a background model directory (models = DIR, --models or TOPICSTREAM_MODEL_DIR)", self.method)));
        }
        if (self.method.needs_embeddings() || need_embeddings) && self.embeddings.is_none() {
            return Err(CliError::Usage(format!("{} needs an embedding table (embeddings = FILE or --embeddings)", self.method)));
        }
        Ok(())
    }
}
