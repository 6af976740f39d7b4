//! Questionnaire schemas, response encoding and min-max scaling.
//!
//! A schema is an ordered list of questions. Each question contributes a
//! fixed number of dimensions to the risk vector:
//!
//! * single choice: one scalar holding the 0-based option index,
//! * multiple choice: one 0/1 indicator per option,
//! * fill-in: the number as written.
//!
//! The concatenation of all question blocks, in schema order, is the raw
//! risk vector. [`fit_scaling`] and [`apply_scaling`] then map each
//! dimension onto `[0, 1]`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const REFERENCE_SCHEMA: &str = include_str!("../schemas/reference.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuestionKind {
    SingleChoice { options: usize },
    MultiChoice { options: usize },
    FillIn,
}

impl QuestionKind {
    /// Number of risk-vector dimensions the question occupies.
    pub fn width(&self) -> usize {
        match *self {
            QuestionKind::SingleChoice { .. } | QuestionKind::FillIn => 1,
            QuestionKind::MultiChoice { options } => options,
        }
    }
}

/// On-disk form of a question, one element of the schema JSON array.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionRecord {
    id: String,
    name: String,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    option_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    SingleChoice,
    MultiChoice,
    FillIn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionSpec {
    pub id: String,
    pub name: String,
    pub kind: QuestionKind,
    /// Optional option labels, used for multi-choice factor names.
    pub option_names: Option<Vec<String>>,
}

impl QuestionSpec {
    pub fn single(id: &str, name: &str, options: usize) -> Self {
        Self::new(id, name, QuestionKind::SingleChoice { options })
    }

    pub fn multi(id: &str, name: &str, options: usize) -> Self {
        Self::new(id, name, QuestionKind::MultiChoice { options })
    }

    pub fn fill_in(id: &str, name: &str) -> Self {
        Self::new(id, name, QuestionKind::FillIn)
    }

    fn new(id: &str, name: &str, kind: QuestionKind) -> Self {
        QuestionSpec {
            id: id.to_string(),
            name: name.to_string(),
            kind,
            option_names: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionnaireSchema {
    questions: Vec<QuestionSpec>,
    factor_names: Vec<String>,
}

impl QuestionnaireSchema {
    pub fn new(questions: Vec<QuestionSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for q in &questions {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate question id {}", q.id)));
            }
            match q.kind {
                QuestionKind::SingleChoice { options } | QuestionKind::MultiChoice { options }
                    if options < 2 =>
                {
                    return Err(Error::InvalidSchema(format!(
                        "question {} needs at least 2 options, has {options}",
                        q.id
                    )));
                }
                _ => {}
            }
            if let (Some(names), QuestionKind::MultiChoice { options }) = (&q.option_names, q.kind)
            {
                if names.len() != options {
                    return Err(Error::InvalidSchema(format!(
                        "question {} lists {} option names for {options} options",
                        q.id,
                        names.len()
                    )));
                }
            }
        }
        let mut factor_names = Vec::new();
        for q in &questions {
            match q.kind {
                QuestionKind::MultiChoice { options } => {
                    for k in 0..options {
                        let label = q
                            .option_names
                            .as_ref()
                            .map(|n| n[k].clone())
                            .unwrap_or_else(|| format!("option {k}"));
                        factor_names.push(format!("{}: {} [{}]", q.id, q.name, label));
                    }
                }
                _ => factor_names.push(format!("{}: {}", q.id, q.name)),
            }
        }
        Ok(QuestionnaireSchema {
            questions,
            factor_names,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<QuestionRecord> = serde_json::from_str(text)?;
        let questions = records
            .into_iter()
            .map(|r| {
                let kind = match (r.kind, r.option_count) {
                    (KindTag::SingleChoice, Some(n)) => QuestionKind::SingleChoice { options: n },
                    (KindTag::MultiChoice, Some(n)) => QuestionKind::MultiChoice { options: n },
                    (KindTag::FillIn, None) => QuestionKind::FillIn,
                    (KindTag::FillIn, Some(_)) => {
                        return Err(Error::InvalidSchema(format!(
                            "fill-in question {} must not set option_count",
                            r.id
                        )))
                    }
                    (_, None) => {
                        return Err(Error::InvalidSchema(format!(
                            "choice question {} is missing option_count",
                            r.id
                        )))
                    }
                };
                Ok(QuestionSpec {
                    id: r.id,
                    name: r.name,
                    kind,
                    option_names: r.options,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(questions)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<QuestionRecord> = self
            .questions
            .iter()
            .map(|q| {
                let (kind, option_count) = match q.kind {
                    QuestionKind::SingleChoice { options } => (KindTag::SingleChoice, Some(options)),
                    QuestionKind::MultiChoice { options } => (KindTag::MultiChoice, Some(options)),
                    QuestionKind::FillIn => (KindTag::FillIn, None),
                };
                QuestionRecord {
                    id: q.id.clone(),
                    name: q.name.clone(),
                    kind,
                    option_count,
                    options: q.option_names.clone(),
                }
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("schema records serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The 84-dimension reference layout bundled with the crate
    /// (`schemas/reference.json`).
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_SCHEMA).expect("bundled reference schema is valid")
    }

    pub fn questions(&self) -> &[QuestionSpec] {
        &self.questions
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    /// Start offset of every question block in the risk vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.questions.len());
        let mut at = 0;
        for q in &self.questions {
            offsets.push(at);
            at += q.kind.width();
        }
        offsets
    }
}

pub fn vector_dimension(schema: &QuestionnaireSchema) -> usize {
    schema.questions.iter().map(|q| q.kind.width()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Answer {
    Single(usize),
    Multi(Vec<usize>),
    FillIn(f64),
}

/// One participant's answers, in schema order.
pub type RawResponse = Vec<Answer>;

pub fn encode_response(schema: &QuestionnaireSchema, response: &[Answer]) -> Result<Vec<f64>> {
    if response.len() != schema.questions.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} answers for {} questions",
            response.len(),
            schema.questions.len()
        )));
    }
    let mut out = Vec::with_capacity(vector_dimension(schema));
    for (q, a) in schema.questions.iter().zip(response) {
        match (q.kind, a) {
            (QuestionKind::SingleChoice { options }, Answer::Single(k)) => {
                if *k >= options {
                    return Err(Error::IndexOutOfRange {
                        question: q.id.clone(),
                        index: *k,
                        options,
                    });
                }
                out.push(*k as f64);
            }
            (QuestionKind::MultiChoice { options }, Answer::Multi(set)) => {
                let start = out.len();
                out.resize(start + options, 0.0);
                for &k in set {
                    if k >= options {
                        return Err(Error::IndexOutOfRange {
                            question: q.id.clone(),
                            index: k,
                            options,
                        });
                    }
                    if out[start + k] != 0.0 {
                        return Err(Error::DuplicateChoice {
                            question: q.id.clone(),
                            index: k,
                        });
                    }
                    out[start + k] = 1.0;
                }
            }
            (QuestionKind::FillIn, Answer::FillIn(v)) => {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue(format!("answer to {}", q.id)));
                }
                out.push(*v);
            }
            (kind, answer) => {
                return Err(Error::ShapeMismatch(format!(
                    "question {} is {kind:?} but was answered with {answer:?}",
                    q.id
                )))
            }
        }
    }
    Ok(out)
}

/// Inverse of [`encode_response`] on a raw (unscaled) vector.
pub fn decode_response(schema: &QuestionnaireSchema, vector: &[f64]) -> Result<RawResponse> {
    let n = vector_dimension(schema);
    if vector.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: vector.len(),
        });
    }
    let mut at = 0;
    let mut out = Vec::with_capacity(schema.questions.len());
    for q in &schema.questions {
        let w = q.kind.width();
        let block = &vector[at..at + w];
        at += w;
        out.push(match q.kind {
            QuestionKind::SingleChoice { options } => {
                let v = block[0];
                if v < 0.0 || v.fract() != 0.0 || v as usize >= options {
                    return Err(Error::ShapeMismatch(format!(
                        "{v} is not an option index of {}",
                        q.id
                    )));
                }
                Answer::Single(v as usize)
            }
            QuestionKind::MultiChoice { .. } => Answer::Multi(
                block
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(k, _)| k)
                    .collect(),
            ),
            QuestionKind::FillIn => Answer::FillIn(block[0]),
        });
    }
    Ok(out)
}

/// Orientation of the min-max map.
///
/// `Inverted` is `(max - x) / (max - min)`: the column minimum maps to 1 and the
/// maximum to 0. `Standard` is the usual `(x - min) / (max - min)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingOrientation {
    #[default]
    Inverted,
    Standard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub max: Vec<f64>,
    pub min: Vec<f64>,
    /// Columns whose max equals their min. They scale to 0.
    pub constant: Vec<bool>,
}

impl ScalingParams {
    pub fn dimension(&self) -> usize {
        self.max.len()
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.constant
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn fit_scaling(matrix: &Matrix) -> Result<ScalingParams> {
    if matrix.rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if !matrix.is_finite() {
        return Err(Error::NonFiniteValue("scaling input".into()));
    }
    let mut max = matrix.row(0).to_vec();
    let mut min = max.clone();
    for r in matrix.iter_rows().skip(1) {
        for (j, &v) in r.iter().enumerate() {
            max[j] = max[j].max(v);
            min[j] = min[j].min(v);
        }
    }
    let constant = max.iter().zip(&min).map(|(a, b)| a == b).collect();
    Ok(ScalingParams { max, min, constant })
}

pub fn apply_scaling(
    params: &ScalingParams,
    matrix: &Matrix,
    orientation: ScalingOrientation,
) -> Result<Matrix> {
    if matrix.cols() != params.dimension() {
        return Err(Error::DimensionMismatch {
            expected: params.dimension(),
            actual: matrix.cols(),
        });
    }
    let mut out = matrix.clone();
    for r in 0..out.rows() {
        for (j, v) in out.row_mut(r).iter_mut().enumerate() {
            *v = if params.constant[j] {
                0.0
            } else {
                let range = params.max[j] - params.min[j];
                let s = match orientation {
                    ScalingOrientation::Inverted => (params.max[j] - *v) / range,
                    ScalingOrientation::Standard => (*v - params.min[j]) / range,
                };
                s.clamp(0.0, 1.0)
            };
        }
    }
    Ok(out)
}
