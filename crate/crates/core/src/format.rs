//! JSONL instance files.
//!
//! Line 1 is a header object with `kind`, `n`, `k` and the problem data;
//! every following line is one online step. Covering-style steps
//! (`covering`, `setcover`, `caching`) carry `constraint: [[i, a]..]` and
//! `suggestions: [[[i, v]..] × k]`. Box-style steps (`box`, `facloc`) carry
//! `constraint`, `d: [[i, d]..]` and `suggestions: [{y, x} × k]`.
//!
//! Output is canonical: keys sorted, floats in `{:.16e}` (17 significant
//! digits, exact round trip), integers as integers, one object per line.

use std::fmt::Write as _;

use serde_json::{json, Map, Number, Value};
use thiserror::Error;

use crate::adapters::caching::CacheModel;
use crate::adapters::facility::FacilityInstance;
use crate::adapters::setcover::{setcover_to_constraint, SetCoverInstance};
use crate::adapters::AdapterError;
use crate::box_engine::BoxSuggestion;
use crate::model::{Assignment, ModelError, SparseConstraint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: {source}")]
    Model { line: usize, source: ModelError },
    #[error("line {line}: {source}")]
    Adapter { line: usize, source: AdapterError },
    #[error("non-finite number in output")]
    NonFinite,
}

fn schema(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Covering,
    Box,
    SetCover,
    Caching,
    Facility,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Covering => "covering",
            Kind::Box => "box",
            Kind::SetCover => "setcover",
            Kind::Caching => "caching",
            Kind::Facility => "facloc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Kind::Covering, Kind::Box, Kind::SetCover, Kind::Caching, Kind::Facility]
            .into_iter()
            .find(|k| k.name() == s)
    }

    /// Whether steps use the box-constrained engine.
    pub fn is_box(self) -> bool {
        matches!(self, Kind::Box | Kind::Facility)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachingData {
    pub weights: Vec<f64>,
    pub h: usize,
    pub trace: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Covering { costs: Vec<f64> },
    Box { costs: Vec<f64> },
    SetCover(SetCoverInstance),
    Caching(CachingData),
    Facility(FacilityInstance),
}

impl Problem {
    pub fn kind(&self) -> Kind {
        match self {
            Problem::Covering { .. } => Kind::Covering,
            Problem::Box { .. } => Kind::Box,
            Problem::SetCover(_) => Kind::SetCover,
            Problem::Caching(_) => Kind::Caching,
            Problem::Facility(_) => Kind::Facility,
        }
    }

    /// Engine costs: `c_i` for covering-style kinds, opening costs for box kinds.
    pub fn costs(&self) -> Vec<f64> {
        match self {
            Problem::Covering { costs } | Problem::Box { costs } => costs.clone(),
            Problem::SetCover(inst) => inst.weights().to_vec(),
            Problem::Caching(c) => c.trace.iter().map(|&p| c.weights[p]).collect(),
            Problem::Facility(inst) => inst.opening().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Problem::Covering { costs } | Problem::Box { costs } => costs.len(),
            Problem::SetCover(inst) => inst.set_count(),
            Problem::Caching(c) => c.trace.len(),
            Problem::Facility(inst) => inst.facility_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringStep {
    pub constraint: SparseConstraint,
    pub suggestions: Vec<Assignment>,
    /// Arriving element (set cover) or request position (caching).
    pub tag: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStepData {
    pub constraint: SparseConstraint,
    pub d: Vec<(usize, f64)>,
    pub suggestions: Vec<BoxSuggestion>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Steps {
    Covering(Vec<CoveringStep>),
    Box(Vec<BoxStepData>),
}

impl Steps {
    pub fn len(&self) -> usize {
        match self {
            Steps::Covering(s) => s.len(),
            Steps::Box(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub k: usize,
    pub problem: Problem,
    pub steps: Steps,
}

// ---------------------------------------------------------------- writing

fn num(v: f64) -> Result<Value, FormatError> {
    Number::from_f64(v).map(Value::Number).ok_or(FormatError::NonFinite)
}

fn floats(v: &[f64]) -> Result<Value, FormatError> {
    v.iter().map(|&x| num(x)).collect::<Result<Vec<_>, _>>().map(Value::Array)
}

fn pairs(v: &[(usize, f64)]) -> Result<Value, FormatError> {
    v.iter()
        .map(|&(i, x)| Ok(json!([i, num(x)?])))
        .collect::<Result<Vec<_>, _>>()
        .map(Value::Array)
}

/// Serializes `value` with sorted keys and fixed float formatting.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                write!(out, "{i}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                write!(out, "{:.16e}", n.as_f64().expect("finite number")).unwrap();
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (p, item) in items.iter().enumerate() {
                if p > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (p, key) in keys.into_iter().enumerate() {
                if p > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_value(out, &map[key]);
            }
            out.push('}');
        }
    }
}

fn header_value(file: &InstanceFile) -> Result<Value, FormatError> {
    let mut h = Map::new();
    h.insert("kind".into(), file.problem.kind().name().into());
    h.insert("n".into(), file.problem.n().into());
    h.insert("k".into(), file.k.into());
    match &file.problem {
        Problem::Covering { costs } | Problem::Box { costs } => {
            h.insert("costs".into(), floats(costs)?);
        }
        Problem::SetCover(inst) => {
            h.insert("costs".into(), floats(inst.weights())?);
            h.insert("elements".into(), inst.element_count().into());
            h.insert("element_bound".into(), inst.element_bound().into());
            h.insert("sets".into(), json!(inst.sets()));
        }
        Problem::Caching(c) => {
            h.insert("costs".into(), floats(&file.problem.costs())?);
            h.insert("weights".into(), floats(&c.weights)?);
            h.insert("h".into(), c.h.into());
            h.insert("trace".into(), json!(c.trace));
        }
        Problem::Facility(inst) => {
            h.insert("costs".into(), floats(inst.opening())?);
            h.insert(
                "distances".into(),
                Value::Array(
                    inst.distances()
                        .iter()
                        .map(|r| floats(r))
                        .collect::<Result<_, _>>()?,
                ),
            );
            h.insert("facilities".into(), json!(inst.facilities()));
            h.insert("clients".into(), json!(inst.clients()));
        }
    }
    Ok(Value::Object(h))
}

/// Canonical JSONL text of an instance, newline-terminated.
pub fn write_instance(file: &InstanceFile) -> Result<String, FormatError> {
    let mut out = canonical_json(&header_value(file)?);
    out.push('\n');
    let tag_key = match file.problem.kind() {
        Kind::SetCover => Some("element"),
        Kind::Caching => Some("request"),
        _ => None,
    };
    match &file.steps {
        Steps::Covering(steps) => {
            for s in steps {
                let mut m = Map::new();
                m.insert("constraint".into(), pairs(s.constraint.coeffs())?);
                m.insert(
                    "suggestions".into(),
                    Value::Array(
                        s.suggestions
                            .iter()
                            .map(|a| pairs(a.entries()))
                            .collect::<Result<_, _>>()?,
                    ),
                );
                if let (Some(key), Some(tag)) = (tag_key, s.tag) {
                    m.insert(key.into(), tag.into());
                }
                out.push_str(&canonical_json(&Value::Object(m)));
                out.push('\n');
            }
        }
        Steps::Box(steps) => {
            for s in steps {
                let suggestions = s
                    .suggestions
                    .iter()
                    .map(|b| Ok(json!({"y": pairs(b.y.entries())?, "x": pairs(b.x.entries())?})))
                    .collect::<Result<Vec<_>, FormatError>>()?;
                let v = json!({
                    "constraint": pairs(s.constraint.coeffs())?,
                    "d": pairs(&s.d)?,
                    "suggestions": suggestions,
                });
                out.push_str(&canonical_json(&v));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- reading

struct Fields<'a> {
    line: usize,
    map: &'a Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<&'a Value, FormatError> {
        self.map
            .get(key)
            .ok_or_else(|| schema(self.line, format!("missing field `{key}`")))
    }

    fn opt(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn usize(&self, key: &str) -> Result<usize, FormatError> {
        as_usize(self.line, self.get(key)?, key)
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>, FormatError> {
        as_floats(self.line, self.get(key)?, key)
    }

    fn usizes(&self, key: &str) -> Result<Vec<usize>, FormatError> {
        as_array(self.line, self.get(key)?, key)?
            .iter()
            .map(|v| as_usize(self.line, v, key))
            .collect()
    }
}

fn as_array<'a>(line: usize, v: &'a Value, what: &str) -> Result<&'a Vec<Value>, FormatError> {
    v.as_array()
        .ok_or_else(|| schema(line, format!("`{what}` must be an array")))
}

fn as_usize(line: usize, v: &Value, what: &str) -> Result<usize, FormatError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(line, format!("`{what}` must be a non-negative integer")))
}

fn as_f64(line: usize, v: &Value, what: &str) -> Result<f64, FormatError> {
    v.as_f64()
        .ok_or_else(|| schema(line, format!("`{what}` must be a number")))
}

fn as_floats(line: usize, v: &Value, what: &str) -> Result<Vec<f64>, FormatError> {
    as_array(line, v, what)?
        .iter()
        .map(|x| as_f64(line, x, what))
        .collect()
}

fn as_pairs(line: usize, v: &Value, what: &str) -> Result<Vec<(usize, f64)>, FormatError> {
    as_array(line, v, what)?
        .iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([i, x]) => Ok((as_usize(line, i, what)?, as_f64(line, x, what)?)),
            _ => Err(schema(line, format!("`{what}` entries must be [index, value] pairs"))),
        })
        .collect()
}

fn assignment(line: usize, v: &Value, what: &str, n: usize) -> Result<Assignment, FormatError> {
    let entries = as_pairs(line, v, what)?;
    if let Some(&(index, _)) = entries.iter().find(|e| e.0 >= n) {
        return Err(FormatError::Model {
            line,
            source: ModelError::IndexOutOfRange { index, n },
        });
    }
    Assignment::new(entries).map_err(|source| FormatError::Model { line, source })
}

fn parse_header(line: usize, v: &Value) -> Result<(usize, Problem), FormatError> {
    let map = v
        .as_object()
        .ok_or_else(|| schema(line, "header must be an object"))?;
    let f = Fields { line, map };
    let kind_name = f
        .get("kind")?
        .as_str()
        .ok_or_else(|| schema(line, "`kind` must be a string"))?;
    let kind = Kind::parse(kind_name)
        .ok_or_else(|| schema(line, format!("unknown kind `{kind_name}`")))?;
    let n = f.usize("n")?;
    let k = f.usize("k")?;
    if k == 0 {
        return Err(schema(line, "`k` must be at least 1"));
    }
    let adapter = |source| FormatError::Adapter { line, source };
    let problem = match kind {
        Kind::Covering => Problem::Covering {
            costs: f.floats("costs")?,
        },
        Kind::Box => Problem::Box {
            costs: f.floats("costs")?,
        },
        Kind::SetCover => {
            let sets: Vec<Vec<usize>> = as_array(line, f.get("sets")?, "sets")?
                .iter()
                .map(|s| {
                    as_array(line, s, "sets")?
                        .iter()
                        .map(|u| as_usize(line, u, "sets"))
                        .collect()
                })
                .collect::<Result<_, _>>()?;
            let bound = f.opt("element_bound").map(|v| as_usize(line, v, "element_bound")).transpose()?;
            // arrivals are re-read from the step lines
            Problem::SetCover(
                SetCoverInstance::from_sets(f.floats("costs")?, &sets, f.usize("elements")?, Vec::new(), bound)
                    .map_err(adapter)?,
            )
        }
        Kind::Caching => {
            let data = CachingData {
                weights: f.floats("weights")?,
                h: f.usize("h")?,
                trace: f.usizes("trace")?,
            };
            CacheModel::new(data.weights.clone(), data.h, data.trace.len()).map_err(adapter)?;
            if let Some(&page) = data.trace.iter().find(|&&p| p >= data.weights.len()) {
                return Err(adapter(AdapterError::UnknownPage {
                    page,
                    pages: data.weights.len(),
                }));
            }
            let problem = Problem::Caching(data);
            if let Some(costs) = f.opt("costs") {
                if as_floats(line, costs, "costs")? != problem.costs() {
                    return Err(schema(line, "`costs` must equal the weights of the requested pages"));
                }
            }
            problem
        }
        Kind::Facility => {
            let distances = as_array(line, f.get("distances")?, "distances")?
                .iter()
                .map(|r| as_floats(line, r, "distances"))
                .collect::<Result<_, _>>()?;
            Problem::Facility(
                FacilityInstance::new(distances, f.usizes("facilities")?, f.floats("costs")?, f.usizes("clients")?)
                    .map_err(adapter)?,
            )
        }
    };
    if problem.n() != n {
        return Err(schema(line, format!("`n` is {n} but the problem data has {} variables", problem.n())));
    }
    Ok((k, problem))
}

/// Parses and validates a JSONL instance.
pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(p, l)| (p + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, htext) = lines.next().ok_or_else(|| schema(1, "missing header line"))?;
    let parse = |line: usize, t: &str| -> Result<Value, FormatError> {
        serde_json::from_str(t).map_err(|e| FormatError::Json {
            line,
            message: e.to_string(),
        })
    };
    let (k, mut problem) = parse_header(hline, &parse(hline, htext)?)?;
    let n = problem.n();
    let kind = problem.kind();

    let mut covering = Vec::new();
    let mut boxed = Vec::new();
    let mut cache = match &problem {
        Problem::Caching(c) => Some((CacheModel::new(c.weights.clone(), c.h, c.trace.len()).expect("validated"), 0usize)),
        _ => None,
    };
    let mut arrivals = Vec::new();

    for (index, (line, t)) in lines.enumerate() {
        let v = parse(line, t)?;
        let map = v
            .as_object()
            .ok_or_else(|| schema(line, "step must be an object"))?;
        let f = Fields { line, map };
        let rhs = f.opt("rhs").map(|r| as_f64(line, r, "rhs")).transpose()?.unwrap_or(1.0);
        let coeffs = as_pairs(line, f.get("constraint")?, "constraint")?;
        let model = |source| FormatError::Model { line, source };
        let raw_suggestions = as_array(line, f.get("suggestions")?, "suggestions")?;
        if raw_suggestions.len() != k {
            return Err(schema(line, format!("expected {k} suggestions, found {}", raw_suggestions.len())));
        }

        let (step, tag) = match (&problem, &mut cache) {
            (Problem::SetCover(inst), _) => {
                let element = f.usize("element")?;
                let m = inst.element_count();
                if element >= m {
                    return Err(FormatError::Adapter {
                        line,
                        source: AdapterError::UnknownElement { element, m },
                    });
                }
                arrivals.push(element);
                (index, Some(element))
            }
            (Problem::Caching(c), Some((cm, next))) => {
                let request = f.usize("request")?;
                if request < *next || request >= c.trace.len() {
                    return Err(schema(line, format!("request {request} is out of order or past the trace")));
                }
                // advance the model through silent requests up to this one
                let mut emitted = None;
                while *next <= request {
                    emitted = cm.request(c.trace[*next]).map_err(|source| FormatError::Adapter { line, source })?;
                    *next += 1;
                    if emitted.is_some() && *next <= request {
                        return Err(schema(line, format!("request {} emits a row that is missing from the file", *next - 1)));
                    }
                }
                let Some(expected) = emitted else {
                    return Err(schema(line, format!("request {request} emits no row")));
                };
                let given = SparseConstraint::from_raw(request, coeffs.clone(), rhs, n).map_err(model)?;
                if given != expected {
                    return Err(schema(line, format!("row for request {request} does not match the cache model")));
                }
                (request, Some(request))
            }
            _ => (index, None),
        };
        let constraint = SparseConstraint::from_raw(step, coeffs, rhs, n).map_err(model)?;
        if let Problem::SetCover(inst) = &problem {
            let expected = setcover_to_constraint(inst, tag.expect("element"), step)
                .map_err(|source| FormatError::Adapter { line, source })?;
            if constraint != expected {
                return Err(schema(line, "set-cover row does not match the element's containing sets"));
            }
        }

        if kind.is_box() {
            let d = as_pairs(line, f.get("d")?, "d")?;
            if let Problem::Facility(inst) = &problem {
                if index >= inst.clients().len() {
                    return Err(schema(line, "more steps than clients"));
                }
                let expected: Vec<(usize, f64)> = (0..n).map(|i| (i, inst.distance(index, i))).collect();
                let all_ones = constraint.coeffs().iter().all(|&(_, a)| a == 1.0) && constraint.nonzeros() == n;
                if d != expected || !all_ones {
                    return Err(schema(line, "facility step does not match the client's distances"));
                }
            }
            let suggestions = raw_suggestions
                .iter()
                .map(|s| {
                    let m = s
                        .as_object()
                        .ok_or_else(|| schema(line, "box suggestions must be {y, x} objects"))?;
                    let f = Fields { line, map: m };
                    Ok(BoxSuggestion {
                        y: assignment(line, f.get("y")?, "y", n)?,
                        x: assignment(line, f.get("x")?, "x", n)?,
                    })
                })
                .collect::<Result<_, FormatError>>()?;
            boxed.push(BoxStepData {
                constraint,
                d,
                suggestions,
            });
        } else {
            let suggestions = raw_suggestions
                .iter()
                .map(|s| assignment(line, s, "suggestions", n))
                .collect::<Result<_, _>>()?;
            covering.push(CoveringStep {
                constraint,
                suggestions,
                tag,
            });
        }
    }

    if let (Problem::Caching(c), Some((cm, next))) = (&problem, &mut cache) {
        while *next < c.trace.len() {
            let emitted = cm
                .request(c.trace[*next])
                .map_err(|source| FormatError::Adapter { line: hline, source })?;
            if emitted.is_some() {
                return Err(schema(hline, format!("request {} emits a row that is missing from the file", *next)));
            }
            *next += 1;
        }
    }
    if let Problem::SetCover(inst) = &mut problem {
        let weights = inst.weights().to_vec();
        let membership = inst.membership().to_vec();
        let bound = Some(inst.element_bound());
        *inst = SetCoverInstance::new(weights, membership, arrivals, bound)
            .map_err(|source| FormatError::Adapter { line: hline, source })?;
    }
    let steps = if kind.is_box() {
        Steps::Box(boxed)
    } else {
        Steps::Covering(covering)
    };
    Ok(InstanceFile { k, problem, steps })
}
