//! Parameter ranges and the exhaustive sweep that picks the best setting.
//!
//! Range syntax: `start:step:stop`, `start:stop` (step 1) or a single
//! value; `&` joins several ranges. A `%` suffix scales by 1/100 (the step
//! is read in the same unit). A bound may name an earlier parameter with an
//! offset, as in `5:5:k-5`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
enum Bound {
    Number(f64),
    Param { name: String, offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Span {
    start: Bound,
    step: f64,
    stop: Bound,
    percent: bool,
}

/// A parsed range expression; bounds may depend on other parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeExpr {
    text: String,
    spans: Vec<Span>,
}

pub fn parse_range(input: &str) -> Result<RangeExpr, EvalError> {
    let err = |pos: usize, msg: &str| EvalError::Range {
        input: input.to_string(),
        pos,
        msg: msg.to_string(),
    };
    let mut spans = Vec::new();
    let mut offset = 0;
    for part in input.split('&') {
        let mut fields: Vec<(usize, &str)> = Vec::new();
        let mut pos = offset;
        for f in part.split(':') {
            fields.push((pos, f));
            pos += f.len() + 1;
        }
        let mut percent = None;
        let mut parse_field = |(pos, raw): (usize, &str)| -> Result<Bound, EvalError> {
            let lead = raw.len() - raw.trim_start().len();
            let text = raw.trim();
            if text.is_empty() {
                return Err(err(pos + lead, "empty value"));
            }
            let (text, pct) = match text.strip_suffix('%') {
                Some(t) => (t, true),
                None => (text, false),
            };
            if pct {
                percent = Some(true);
            }
            if text.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                let split = text.find(['+', '-']).unwrap_or(text.len());
                let (name, rest) = text.split_at(split);
                let offset = if rest.is_empty() {
                    0.0
                } else {
                    rest.parse::<f64>().map_err(|_| err(pos + lead + split, "bad offset"))?
                };
                return Ok(Bound::Param { name: name.to_string(), offset });
            }
            text.parse::<f64>().map(Bound::Number).map_err(|_| err(pos + lead, "not a number"))
        };
        let span = match fields.len() {
            1 => {
                let b = parse_field(fields[0])?;
                Span {
                    start: b.clone(),
                    step: 1.0,
                    stop: b,
                    percent: false,
                }
            }
            2 => Span {
                start: parse_field(fields[0])?,
                step: 1.0,
                stop: parse_field(fields[1])?,
                percent: false,
            },
            3 => {
                let start = parse_field(fields[0])?;
                let step = match parse_field(fields[1])? {
                    Bound::Number(s) if s > 0.0 => s,
                    _ => return Err(err(fields[1].0, "step must be a positive number")),
                };
                Span {
                    start,
                    step,
                    stop: parse_field(fields[2])?,
                    percent: false,
                }
            }
            _ => return Err(err(fields[3].0, "at most start:step:stop")),
        };
        spans.push(Span {
            percent: percent.unwrap_or(false),
            ..span
        });
        offset += part.len() + 1;
    }
    Ok(RangeExpr {
        text: input.to_string(),
        spans,
    })
}

fn round(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

impl RangeExpr {
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Concrete values, first occurrence order, duplicates dropped.
    /// `known` supplies the values of parameters named in bounds.
    pub fn values(&self, known: &[(String, f64)]) -> Result<Vec<f64>, EvalError> {
        let resolve = |b: &Bound| -> Result<f64, EvalError> {
            match b {
                Bound::Number(v) => Ok(*v),
                Bound::Param { name, offset } => known
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v + offset)
                    .ok_or_else(|| EvalError::Grid(format!("range {:?} refers to {name}, which is not set before it", self.text))),
            }
        };
        let mut out: Vec<f64> = Vec::new();
        for s in &self.spans {
            let (a, b) = (resolve(&s.start)?, resolve(&s.stop)?);
            if b < a {
                continue;
            }
            let n = ((b - a) / s.step + 1e-9).floor() as usize + 1;
            for i in 0..n {
                let mut v = round(a + i as f64 * s.step);
                if s.percent {
                    v = round(v / 100.0);
                }
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        Ok(out)
    }
}

/// One setting: parameter names with values, in declaration order.
pub type Params = Vec<(String, f64)>;

/// Named ranges whose cross product is swept. Later ranges may refer to
/// earlier parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamGrid {
    pub params: Vec<(String, RangeExpr)>,
}

impl ParamGrid {
    pub fn parse<S: AsRef<str>>(specs: &[(S, S)]) -> Result<Self, EvalError> {
        let params = specs.iter().map(|(n, r)| Ok((n.as_ref().to_string(), parse_range(r.as_ref())?))).collect::<Result<_, EvalError>>()?;
        Ok(ParamGrid { params })
    }

    /// Every combination, in lexicographic order of the value tuples as
    /// long as each range is ascending.
    pub fn combinations(&self) -> Result<Vec<Params>, EvalError> {
        let mut partial: Vec<Params> = vec![Vec::new()];
        for (name, range) in &self.params {
            let mut next = Vec::new();
            for p in &partial {
                for v in range.values(p)? {
                    let mut q = p.clone();
                    q.push((name.clone(), v));
                    next.push(q);
                }
            }
            partial = next;
        }
        if self.params.is_empty() {
            partial.clear();
        }
        Ok(partial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Higher is better.
    Silhouette,
    /// Lower is better.
    MeanFs,
}

impl Criterion {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "silhouette" => Some(Criterion::Silhouette),
            "meanfs" | "mean_fs" | "mean-fs" => Some(Criterion::MeanFs),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Silhouette => "silhouette",
            Criterion::MeanFs => "meanfs",
        }
    }

    /// True when `a` beats `b`.
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Criterion::Silhouette => a > b,
            Criterion::MeanFs => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub criterion: Criterion,
    /// Every setting with its score; `None` marks a failed run.
    pub rows: Vec<(Params, Option<f64>)>,
    pub best: Option<(Params, f64)>,
}

impl TuneResult {
    /// `param...,criterion,value` with one line per setting; failed runs
    /// leave the value empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some((first, _)) = self.rows.first() {
            for (name, _) in first {
                out.push_str(name);
                out.push(',');
            }
        }
        out.push_str("criterion,value\n");
        for (params, score) in &self.rows {
            for (_, v) in params {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(self.criterion.name());
            out.push(',');
            if let Some(s) = score {
                out.push_str(&s.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn tuple_cmp(a: &Params, b: &Params) -> std::cmp::Ordering {
    a.iter().map(|p| p.1).zip(b.iter().map(|p| p.1)).map(|(x, y)| x.total_cmp(&y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

/// Scores every setting (in parallel) and keeps the best one. Ties go to
/// the lexicographically smallest value tuple. Failed or non-finite runs
/// are recorded as missing, excluded and logged.
pub fn tune_parameter<F, E>(settings: &[Params], criterion: Criterion, evaluate: F) -> Result<TuneResult, EvalError>
where
    F: Fn(&Params) -> Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    if settings.is_empty() {
        return Err(EvalError::Grid("no parameter values to try".into()));
    }
    let scores: Vec<Option<f64>> = settings
        .par_iter()
        .map(|p| match evaluate(p) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                log::warn!("{p:?}: score {v} ignored");
                None
            }
            Err(e) => {
                log::warn!("{p:?}: run failed: {e}");
                None
            }
        })
        .collect();
    let mut best: Option<(&Params, f64)> = None;
    for (p, s) in settings.iter().zip(&scores) {
        let Some(s) = *s else { continue };
        let replace = match best {
            None => true,
            Some((bp, bs)) => criterion.better(s, bs) || (s == bs && tuple_cmp(p, bp).is_lt()),
        };
        if replace {
            best = Some((p, s));
        }
    }
    Ok(TuneResult {
        criterion,
        rows: settings.iter().cloned().zip(scores).collect(),
        best: best.map(|(p, s)| (p.clone(), s)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(s: &str) -> Vec<f64> {
        parse_range(s).unwrap().values(&[]).unwrap()
    }

    #[test]
    fn table_ranges() {
        let k = vals("20:10:90&100:50:300");
        assert_eq!(k.len(), 13);
        assert_eq!(k[..8], [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0]);
        assert_eq!(k[8..], [100.0, 150.0, 200.0, 250.0, 300.0]);
        assert_eq!(vals("2:30"), (2..=30).map(f64::from).collect::<Vec<_>>());
        let damp = vals("0.1:0.1:1");
        assert_eq!(damp.len(), 10);
        assert_eq!(damp[2], 0.3);
        assert_eq!(damp[9], 1.0);
        let rate = vals("5%:5:50%");
        assert_eq!(rate.len(), 10);
        assert_eq!((rate[0], rate[9]), (0.05, 0.5));
        assert_eq!(vals("1:6").len(), 6);
        assert_eq!(vals("7"), [7.0]);
    }

    #[test]
    fn dependent_bounds() {
        let grid = ParamGrid::parse(&[("k", "10:10:30"), ("k_min", "5:5:k-5")]).unwrap();
        let combos = grid.combinations().unwrap();
        let pairs: Vec<(f64, f64)> = combos.iter().map(|p| (p[0].1, p[1].1)).collect();
        assert_eq!(pairs, [(10.0, 5.0), (20.0, 5.0), (20.0, 10.0), (20.0, 15.0), (30.0, 5.0), (30.0, 10.0), (30.0, 15.0), (30.0, 20.0), (30.0, 25.0)]);
        let bad = ParamGrid::parse(&[("k_min", "5:5:k-5"), ("k", "10:10:30")]).unwrap();
        assert!(matches!(bad.combinations(), Err(EvalError::Grid(_))));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        for (input, pos) in [("2:3x", 2), ("1:2:3:4", 6), ("1:0:5", 2), ("1:2&", 4), ("5:5:k-z", 5)] {
            match parse_range(input) {
                Err(EvalError::Range { pos: p, .. }) => assert_eq!(p, pos, "{input}"),
                other => panic!("{input}: {other:?}"),
            }
        }
    }

    fn settings(values: &[f64]) -> Vec<Params> {
        values.iter().map(|&v| vec![("p".to_string(), v)]).collect()
    }

    #[test]
    fn argmax_and_ties() {
        let scores = [0.1, 0.9, 0.4];
        let r = tune_parameter(&settings(&[2.0, 3.0, 4.0]), Criterion::Silhouette, |p| Ok::<_, String>(scores[p[0].1 as usize - 2])).unwrap();
        assert_eq!(r.best.unwrap().0[0].1, 3.0);
        // the larger value comes first, the tie still goes to the smaller
        let r = tune_parameter(&settings(&[3.0, 2.0]), Criterion::Silhouette, |_| Ok::<_, String>(0.9)).unwrap();
        assert_eq!(r.best.unwrap().0[0].1, 2.0);
        let r = tune_parameter(&settings(&[2.0, 3.0, 4.0]), Criterion::MeanFs, |p| Ok::<_, String>(scores[p[0].1 as usize - 2])).unwrap();
        assert_eq!(r.best.unwrap().0[0].1, 2.0);
    }

    #[test]
    fn failures_are_recorded_and_skipped() {
        let r = tune_parameter(&settings(&[1.0, 2.0, 3.0]), Criterion::Silhouette, |p| if p[0].1 == 2.0 { Err("boom") } else { Ok(p[0].1) }).unwrap();
        assert_eq!(r.rows[1].1, None);
        assert_eq!(r.best.as_ref().unwrap().1, 3.0);
        assert_eq!(r.to_csv(), "p,criterion,value\n1,silhouette,1\n2,silhouette,\n3,silhouette,3\n");
        let none = tune_parameter(&settings(&[1.0]), Criterion::Silhouette, |_| Err::<f64, _>("x")).unwrap();
        assert!(none.best.is_none());
    }
}
