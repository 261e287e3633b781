//! Report types and their two encodings.
//!
//! CSV tables have fixed headers. The structured format is line-oriented text:
//!
//! ```text
//! schema = "specgap.report.v1"
//! kind = "zeta"
//! items[0].degree = 1
//! items[0].log_determinant = 8.7062...e0
//! items[0].notes = []
//! ```
//!
//! Keys are paths (`.field`, `[index]`). Values are integers, floats (always with an
//! exponent, or `inf`/`-inf`/`NaN`), quoted strings, `true`/`false`, `~` (none),
//! `[]` and `{}` (empty sequence and map).

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_value::Value;
use specgap_core::bloch::DegreeSummary;
use specgap_core::lab::ConvergenceReport;
use specgap_core::spectral::BetaEstimate;
use specgap_core::zeta::ZetaReport;

use crate::config::Format;
use crate::CliError;

pub const SCHEMA: &str = "specgap.report.v1";

pub const THETA_HEADER: [&str; 4] = ["t", "theta_comb", "theta_ref", "abs_error"];
pub const SPECTRUM_HEADER: [&str; 4] = ["degree", "lambda0", "kernel_dim", "kappa0"];
pub const ZETA_HEADER: [&str; 4] = ["degree", "zeta0", "zeta_prime0", "log_det"];
pub const CONVERGENCE_HEADER: [&str; 6] = ["level", "mesh", "metric_name", "value", "error", "order"];
pub const BETA_HEADER: [&str; 9] = [
    "degree",
    "beta",
    "beta_bar",
    "slope",
    "window_min",
    "window_max",
    "residual",
    "lambda0",
    "n_points",
];

/// 17 significant digits; negative zero is written as zero.
pub fn fmt_num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub t: f64,
    pub theta_comb: f64,
    pub theta_ref: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBeta {
    pub degree: usize,
    pub estimate: BetaEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McKeanSinger {
    pub t: f64,
    pub value: f64,
}

/// Everything one command produced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub geometry: String,
    pub spectrum: Vec<DegreeSummary>,
    pub theta: Vec<ThetaRow>,
    pub zeta: Vec<ZetaReport>,
    pub beta: Vec<DegreeBeta>,
    pub convergence: Option<ConvergenceReport>,
    pub mckean_singer: Vec<McKeanSinger>,
    pub log_torsion: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Convergence(ConvergenceReport),
    Zeta(Vec<ZetaReport>),
    Beta(Vec<DegreeBeta>),
    Theta(Vec<ThetaRow>),
    Spectrum(Vec<DegreeSummary>),
    Run(RunReport),
}

#[derive(Serialize, Deserialize)]
struct Items<T> {
    items: Vec<T>,
}

impl Report {
    pub fn kind(&self) -> &'static str {
        match self {
            Report::Convergence(_) => "convergence",
            Report::Zeta(_) => "zeta",
            Report::Beta(_) => "beta",
            Report::Theta(_) => "theta",
            Report::Spectrum(_) => "spectrum",
            Report::Run(_) => "run",
        }
    }
}

pub fn serialize_report(report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => csv_table(report),
        Format::Structured => {
            let kind = report.kind();
            let text = match report {
                Report::Convergence(r) => to_structured(kind, r),
                Report::Zeta(r) => to_structured(kind, &Items { items: r.clone() }),
                Report::Beta(r) => to_structured(kind, &Items { items: r.clone() }),
                Report::Theta(r) => to_structured(kind, &Items { items: r.clone() }),
                Report::Spectrum(r) => to_structured(kind, &Items { items: r.clone() }),
                Report::Run(r) => to_structured(kind, r),
            }?;
            Ok(text.into_bytes())
        }
    }
}

pub fn parse_report(text: &str) -> Result<Report, CliError> {
    let (kind, value) = parse_structured(text)?;
    fn items<T: DeserializeOwned>(v: Value) -> Result<Vec<T>, CliError> {
        Ok(from_value::<Items<T>>(v)?.items)
    }
    Ok(match kind.as_str() {
        "convergence" => Report::Convergence(from_value(value)?),
        "zeta" => Report::Zeta(items(value)?),
        "beta" => Report::Beta(items(value)?),
        "theta" => Report::Theta(items(value)?),
        "spectrum" => Report::Spectrum(items(value)?),
        "run" => Report::Run(from_value(value)?),
        other => return Err(CliError::Parse(format!("unknown report kind '{other}'"))),
    })
}

fn csv_table(report: &Report) -> Result<Vec<u8>, CliError> {
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match report {
        Report::Theta(rows) => (
            THETA_HEADER.to_vec(),
            rows.iter()
                .map(|r| {
                    vec![
                        fmt_num(r.t),
                        fmt_num(r.theta_comb),
                        fmt_num(r.theta_ref),
                        fmt_num(r.abs_error),
                    ]
                })
                .collect(),
        ),
        Report::Spectrum(rows) => (
            SPECTRUM_HEADER.to_vec(),
            rows.iter()
                .map(|r| {
                    vec![
                        r.degree.to_string(),
                        fmt_num(r.lambda0),
                        fmt_num(r.kernel_dim),
                        opt(r.kappa0),
                    ]
                })
                .collect(),
        ),
        Report::Zeta(rows) => (
            ZETA_HEADER.to_vec(),
            rows.iter()
                .map(|r| {
                    vec![
                        r.degree.to_string(),
                        fmt_num(r.zeta_at_0),
                        fmt_num(r.zeta_prime_at_0),
                        fmt_num(r.log_determinant),
                    ]
                })
                .collect(),
        ),
        Report::Convergence(r) => (
            CONVERGENCE_HEADER.to_vec(),
            r.rows
                .iter()
                .map(|row| {
                    vec![
                        row.level.to_string(),
                        fmt_num(row.mesh),
                        row.metric.clone(),
                        fmt_num(row.value),
                        fmt_num(row.error),
                        opt(row.order),
                    ]
                })
                .collect(),
        ),
        Report::Beta(rows) => (
            BETA_HEADER.to_vec(),
            rows.iter()
                .map(|r| {
                    let e = &r.estimate;
                    vec![
                        r.degree.to_string(),
                        fmt_num(e.beta),
                        fmt_num(e.beta_bar),
                        fmt_num(e.slope),
                        fmt_num(e.window_min),
                        fmt_num(e.window_max),
                        fmt_num(e.residual),
                        fmt_num(e.lambda0),
                        e.n_points.to_string(),
                    ]
                })
                .collect(),
        ),
        Report::Run(_) => return Err(CliError::Config("a run report has no single CSV table".into())),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Parse(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Parse(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Parse(e.to_string()))
}

fn from_value<T: DeserializeOwned>(v: Value) -> Result<T, CliError> {
    v.deserialize_into().map_err(|e| CliError::Parse(e.to_string()))
}

pub fn to_structured<T: Serialize>(kind: &str, report: &T) -> Result<String, CliError> {
    let value = serde_value::to_value(report).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut out = format!("schema = {}\nkind = {}\n", quote(SCHEMA), quote(kind));
    flatten("", &value, &mut out)?;
    Ok(out)
}

/// Returns the report kind and its value tree.
pub fn parse_structured(text: &str) -> Result<(String, Value), CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = |name: &str| -> Result<String, CliError> {
        let line = lines.next().ok_or_else(|| CliError::Parse(format!("missing {name}")))?;
        match line.split_once(" = ") {
            Some((k, v)) if k == name => match parse_scalar(v)? {
                Value::String(s) => Ok(s),
                _ => Err(CliError::Parse(format!("{name} must be a string"))),
            },
            _ => Err(CliError::Parse(format!("expected {name} line, got '{line}'"))),
        }
    };
    let schema = header("schema")?;
    if schema != SCHEMA {
        return Err(CliError::Parse(format!("unsupported schema '{schema}'")));
    }
    let kind = header("kind")?;
    let mut root = Node::Map(Vec::new());
    for line in lines {
        let (key, v) = line
            .split_once(" = ")
            .ok_or_else(|| CliError::Parse(format!("malformed line '{line}'")))?;
        root.insert(&parse_path(key)?, parse_scalar(v)?)?;
    }
    Ok((kind, root.into_value()))
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unquote(s: &str) -> Result<String, CliError> {
    let inner = s
        .strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .ok_or_else(|| CliError::Parse(format!("bad string {s}")))?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('"') => out.push('"'),
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            other => return Err(CliError::Parse(format!("bad escape {other:?} in {s}"))),
        }
    }
    Ok(out)
}

fn flatten(path: &str, v: &Value, out: &mut String) -> Result<(), CliError> {
    let mut line = |s: String| {
        out.push_str(path);
        out.push_str(" = ");
        out.push_str(&s);
        out.push('\n');
    };
    match v {
        Value::Bool(b) => line(b.to_string()),
        Value::U8(x) => line(x.to_string()),
        Value::U16(x) => line(x.to_string()),
        Value::U32(x) => line(x.to_string()),
        Value::U64(x) => line(x.to_string()),
        Value::I8(x) => line(x.to_string()),
        Value::I16(x) => line(x.to_string()),
        Value::I32(x) => line(x.to_string()),
        Value::I64(x) => line(x.to_string()),
        Value::F32(x) => line(fmt_num(*x as f64)),
        Value::F64(x) => line(fmt_num(*x)),
        Value::Char(c) => line(quote(&c.to_string())),
        Value::String(s) => line(quote(s)),
        Value::Unit | Value::Option(None) => line("~".into()),
        Value::Option(Some(inner)) | Value::Newtype(inner) => flatten(path, inner, out)?,
        Value::Seq(items) if items.is_empty() => line("[]".into()),
        Value::Seq(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{path}[{i}]"), item, out)?;
            }
        }
        Value::Map(m) if m.is_empty() => line("{}".into()),
        Value::Map(m) => {
            for (k, item) in m {
                let Value::String(k) = k else {
                    return Err(CliError::Parse("only string map keys are supported".into()));
                };
                if k.is_empty() || k.contains(['.', '[', ']', ' ', '=']) {
                    return Err(CliError::Parse(format!("unsupported key '{k}'")));
                }
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten(&p, item, out)?;
            }
        }
        Value::Bytes(_) => return Err(CliError::Parse("byte strings are not supported".into())),
    }
    Ok(())
}

fn parse_scalar(v: &str) -> Result<Value, CliError> {
    let bad = || CliError::Parse(format!("bad value '{v}'"));
    Ok(match v {
        "~" => Value::Option(None),
        "[]" => Value::Seq(Vec::new()),
        "{}" => Value::Map(BTreeMap::new()),
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "inf" => Value::F64(f64::INFINITY),
        "-inf" => Value::F64(f64::NEG_INFINITY),
        "NaN" => Value::F64(f64::NAN),
        s if s.starts_with('"') => Value::String(unquote(s)?),
        s if s.contains(['e', 'E', '.']) => Value::F64(s.parse().map_err(|_| bad())?),
        s if s.starts_with('-') => Value::I64(s.parse().map_err(|_| bad())?),
        s => Value::U64(s.parse().map_err(|_| bad())?),
    })
}

enum Seg {
    Key(String),
    Index(usize),
}

fn parse_path(key: &str) -> Result<Vec<Seg>, CliError> {
    let bad = || CliError::Parse(format!("bad key '{key}'"));
    let mut segs = Vec::new();
    for part in key.split('.') {
        let (name, mut rest) = part.split_once('[').map(|(a, b)| (a, Some(b))).unwrap_or((part, None));
        if !name.is_empty() {
            segs.push(Seg::Key(name.to_string()));
        } else if segs.is_empty() && rest.is_none() {
            return Err(bad());
        }
        while let Some(r) = rest {
            let (idx, tail) = r.split_once(']').ok_or_else(bad)?;
            segs.push(Seg::Index(idx.parse().map_err(|_| bad())?));
            rest = match tail {
                "" => None,
                t => Some(t.strip_prefix('[').ok_or_else(bad)?),
            };
        }
    }
    Ok(segs)
}

enum Node {
    Leaf(Value),
    Map(Vec<(String, Node)>),
    Seq(Vec<Node>),
}

impl Node {
    fn insert(&mut self, path: &[Seg], value: Value) -> Result<(), CliError> {
        let Some((head, rest)) = path.split_first() else {
            return Err(CliError::Parse("empty key".into()));
        };
        let fresh = |rest: &[Seg]| match rest.first() {
            Some(Seg::Index(_)) => Node::Seq(Vec::new()),
            _ => Node::Map(Vec::new()),
        };
        let child = match (self, head) {
            (Node::Map(entries), Seg::Key(k)) => {
                if let Some(pos) = entries.iter().position(|(name, _)| name == k) {
                    &mut entries[pos].1
                } else {
                    entries.push((k.clone(), fresh(rest)));
                    &mut entries.last_mut().unwrap().1
                }
            }
            (Node::Seq(items), Seg::Index(i)) => {
                if *i == items.len() {
                    items.push(fresh(rest));
                } else if *i > items.len() {
                    return Err(CliError::Parse(format!("index {i} out of order")));
                }
                &mut items[*i]
            }
            _ => return Err(CliError::Parse("key shape conflicts with an earlier line".into())),
        };
        if rest.is_empty() {
            if !matches!(child, Node::Map(m) if m.is_empty()) && !matches!(child, Node::Seq(s) if s.is_empty()) {
                return Err(CliError::Parse("duplicate key".into()));
            }
            *child = Node::Leaf(value);
            Ok(())
        } else {
            child.insert(rest, value)
        }
    }

    fn into_value(self) -> Value {
        match self {
            Node::Leaf(v) => v,
            Node::Map(entries) => Value::Map(
                entries
                    .into_iter()
                    .map(|(k, v)| (Value::String(k), v.into_value()))
                    .collect(),
            ),
            Node::Seq(items) => Value::Seq(items.into_iter().map(Node::into_value).collect()),
        }
    }
}
