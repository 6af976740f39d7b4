//! Labeled datasets, random splitting, undersampling and the synthetic
//! questionnaire generator.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigmoid, Matrix};
use crate::schema::{encode_response, Answer, QuestionKind, QuestionnaireSchema};

pub const LABEL_COLUMN: &str = "label";
pub const SUSPECTED_COLUMN: &str = "suspected";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<u8>,
    suspected: Option<Vec<u8>>,
    factor_names: Vec<String>,
}

fn check_binary(values: &[u8]) -> Result<()> {
    match values.iter().find(|&&v| v > 1) {
        Some(&v) => Err(Error::NonBinary(v)),
        None => Ok(()),
    }
}

impl LabeledDataset {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        suspected: Option<Vec<u8>>,
        factor_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: labels.len(),
            });
        }
        if let Some(s) = &suspected {
            if s.len() != labels.len() {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: s.len(),
                });
            }
            check_binary(s)?;
        }
        if factor_names.len() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: features.cols(),
                actual: factor_names.len(),
            });
        }
        check_binary(&labels)?;
        Ok(LabeledDataset {
            features,
            labels,
            suspected,
            factor_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn suspected(&self) -> Option<&[u8]> {
        self.suspected.as_deref()
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Same labels, replaced feature matrix (e.g. after scaling).
    pub fn with_features(&self, features: Matrix) -> Result<Self> {
        Self::new(
            features,
            self.labels.clone(),
            self.suspected.clone(),
            self.factor_names.clone(),
        )
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        LabeledDataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            suspected: self
                .suspected
                .as_ref()
                .map(|s| idx.iter().map(|&i| s[i]).collect()),
            factor_names: self.factor_names.clone(),
        }
    }

    /// Keeps only the given feature columns, in the given order.
    pub fn project_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.dimension()) {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: bad,
            });
        }
        Ok(LabeledDataset {
            features: self.features.select_cols(cols),
            labels: self.labels.clone(),
            suspected: self.suspected.clone(),
            factor_names: cols.iter().map(|&c| self.factor_names[c].clone()).collect(),
        })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_at = headers
            .iter()
            .position(|h| h == LABEL_COLUMN)
            .ok_or_else(|| Error::Data(format!("no `{LABEL_COLUMN}` column")))?;
        let suspected_at = headers.iter().position(|h| h == SUSPECTED_COLUMN);
        let feature_cols: Vec<usize> = (0..headers.len())
            .filter(|&i| i != label_at && Some(i) != suspected_at)
            .collect();
        let factor_names = feature_cols.iter().map(|&i| headers[i].to_string()).collect();

        let parse_flag = |s: &str, line: usize| -> Result<u8> {
            match s.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::Data(format!("line {line}: `{other}` is not 0/1"))),
            }
        };
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut suspected = suspected_at.map(|_| Vec::new());
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = i + 2;
            for &c in &feature_cols {
                let v: f64 = record[c].trim().parse().map_err(|_| {
                    Error::Data(format!("line {line}: `{}` is not a number", &record[c]))
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue(format!("line {line}")));
                }
                data.push(v);
            }
            labels.push(parse_flag(&record[label_at], line)?);
            if let (Some(at), Some(s)) = (suspected_at, suspected.as_mut()) {
                s.push(parse_flag(&record[at], line)?);
            }
        }
        let features = Matrix::from_vec(labels.len(), feature_cols.len(), data)?;
        Self::new(features, labels, suspected, factor_names)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.factor_names.iter().map(String::as_str).collect();
        header.push(LABEL_COLUMN);
        if self.suspected.is_some() {
            header.push(SUSPECTED_COLUMN);
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (i, row) in self.features.iter_rows().enumerate() {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(self.labels[i].to_string());
            if let Some(s) = &self.suspected {
                record.push(s[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each class separately so both sides keep the class ratio.
    #[serde(default)]
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
            stratified: false,
        }
    }
}

/// Random partition into (train, test). Train receives
/// `floor(train_fraction * n)` rows; rows keep their original relative order.
pub fn split(data: &LabeledDataset, cfg: &SplitConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction {} outside (0, 1)",
            cfg.train_fraction
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut rng = seeded_rng(cfg.seed);
    let (mut train, mut test) = if cfg.stratified {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in [0u8, 1] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| data.labels[i] == class).collect();
            idx.shuffle(&mut rng);
            let k = (cfg.train_fraction * idx.len() as f64).floor() as usize;
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
        (train, test)
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let k = (cfg.train_fraction * n as f64).floor() as usize;
        let test = idx.split_off(k);
        (idx, test)
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit {
            train: train.len(),
            test: test.len(),
        });
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

/// Keeps every row of the minority class and an equally sized uniform random
/// subset of the majority class.
pub fn undersample(train: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| train.labels[i] == 1);
    if pos.is_empty() {
        return Err(Error::MissingClass(1));
    }
    if neg.is_empty() {
        return Err(Error::MissingClass(0));
    }
    let mut rng = seeded_rng(seed);
    let (keep, mut majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    majority.shuffle(&mut rng);
    majority.truncate(keep.len());
    let mut rows = keep;
    rows.extend(majority);
    rows.sort_unstable();
    Ok(train.select_rows(&rows))
}

/// Per-column sample standard deviation (n - 1 denominator).
pub fn column_stddev(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let means = m.column_means();
    let mut ss = vec![0.0; m.cols()];
    for r in m.iter_rows() {
        for ((s, v), mu) in ss.iter_mut().zip(r).zip(&means) {
            *s += (v - mu) * (v - mu);
        }
    }
    Ok(ss.into_iter().map(|s| (s / (n - 1) as f64).sqrt()).collect())
}

pub fn feature_stddev(data: &LabeledDataset) -> Result<Vec<f64>> {
    column_stddev(&data.features)
}

/// How the synthetic `suspected` flag is derived.
///
/// A row is flagged when the partial risk from the first `dims` informative
/// dimensions, plus Gaussian noise, exceeds `threshold`. Using only a few
/// dimensions mimics an expert screening on a handful of obvious factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuspectedConfig {
    pub dims: usize,
    pub noise_sd: f64,
    /// Defaults to 0.75 × the sum of the positive coefficients used.
    pub threshold: Option<f64>,
}

impl Default for SuspectedConfig {
    fn default() -> Self {
        SuspectedConfig {
            dims: 2,
            noise_sd: 1.0,
            threshold: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub schema: QuestionnaireSchema,
    pub n_samples: usize,
    pub informative_dims: Vec<usize>,
    pub true_coefficients: Vec<f64>,
    pub intercept: f64,
    pub seed: u64,
    /// Fill-in answers are drawn uniformly from this range.
    pub fill_in_range: (f64, f64),
    pub suspected: SuspectedConfig,
}

impl SyntheticConfig {
    pub fn new(schema: QuestionnaireSchema, n_samples: usize, seed: u64) -> Self {
        SyntheticConfig {
            schema,
            n_samples,
            informative_dims: Vec::new(),
            true_coefficients: Vec::new(),
            intercept: 0.0,
            seed,
            fill_in_range: (0.0, 100.0),
            suspected: SuspectedConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = crate::schema::vector_dimension(&self.schema);
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_samples < 2 {
            return bad(format!("n_samples = {} (need ≥ 2)", self.n_samples));
        }
        if self.informative_dims.len() != self.true_coefficients.len() {
            return bad("informative_dims and true_coefficients differ in length".into());
        }
        if let Some(d) = self.informative_dims.iter().find(|&&d| d >= n) {
            return bad(format!("informative dim {d} outside [0, {n})"));
        }
        let mut sorted = self.informative_dims.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.informative_dims.len() {
            return bad("informative_dims contains duplicates".into());
        }
        let (lo, hi) = self.fill_in_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("fill_in_range ({lo}, {hi}) is empty"));
        }
        let sd = self.suspected.noise_sd;
        if sd.is_nan() || sd <= 0.0 {
            return bad("suspected noise_sd must be positive".into());
        }
        if self.true_coefficients.iter().any(|c| !c.is_finite()) || !self.intercept.is_finite() {
            return bad("coefficients must be finite".into());
        }
        Ok(())
    }

    fn suspected_threshold(&self) -> f64 {
        self.suspected.threshold.unwrap_or_else(|| {
            0.75 * self
                .true_coefficients
                .iter()
                .take(self.suspected.dims)
                .map(|c| c.max(0.0))
                .sum::<f64>()
        })
    }
}

/// Planted ground truth, written next to a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub informative_dims: Vec<usize>,
    pub true_coefficients: Vec<f64>,
    pub intercept: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: LabeledDataset,
    pub truth: SyntheticTruth,
    /// True logit of every row.
    pub risk: Vec<f64>,
    /// Partial risk minus threshold for the suspected flag (before noise).
    pub suspect_margin: Vec<f64>,
    pub suspected_noise_sd: f64,
}

/// Position of each raw dimension within its known answer range, in [0, 1].
fn unit_values(schema: &QuestionnaireSchema, raw: &[f64], fill_in_range: (f64, f64)) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut at = 0;
    for q in schema.questions() {
        match q.kind {
            QuestionKind::SingleChoice { options } => {
                out.push(raw[at] / (options - 1) as f64);
                at += 1;
            }
            QuestionKind::MultiChoice { options } => {
                out.extend_from_slice(&raw[at..at + options]);
                at += options;
            }
            QuestionKind::FillIn => {
                let (lo, hi) = fill_in_range;
                out.push((raw[at] - lo) / (hi - lo));
                at += 1;
            }
        }
    }
    out
}

/// Samples questionnaire answers uniformly per question kind and draws each
/// label from `Bernoulli(sigmoid(intercept + Σ c_k · u_k))`, where `u_k` is
/// the informative dimension's position within its known answer range.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let noise = Normal::new(0.0, cfg.suspected.noise_sd)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let threshold = cfg.suspected_threshold();
    let n_dim = crate::schema::vector_dimension(&cfg.schema);
    let (lo, hi) = cfg.fill_in_range;

    let mut data = Vec::with_capacity(cfg.n_samples * n_dim);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    let mut suspected = Vec::with_capacity(cfg.n_samples);
    let mut risk = Vec::with_capacity(cfg.n_samples);
    let mut suspect_margin = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let response: Vec<Answer> = cfg
            .schema
            .questions()
            .iter()
            .map(|q| match q.kind {
                QuestionKind::SingleChoice { options } => Answer::Single(rng.random_range(0..options)),
                QuestionKind::MultiChoice { options } => {
                    Answer::Multi((0..options).filter(|_| rng.random::<bool>()).collect())
                }
                QuestionKind::FillIn => Answer::FillIn(rng.random_range(lo..hi)),
            })
            .collect();
        let raw = encode_response(&cfg.schema, &response)?;
        let unit = unit_values(&cfg.schema, &raw, cfg.fill_in_range);
        let contributions: Vec<f64> = cfg
            .informative_dims
            .iter()
            .zip(&cfg.true_coefficients)
            .map(|(&d, c)| c * unit[d])
            .collect();
        let logit = cfg.intercept + contributions.iter().sum::<f64>();
        let label = u8::from(rng.random::<f64>() < sigmoid(logit));
        let margin =
            contributions.iter().take(cfg.suspected.dims).sum::<f64>() - threshold;
        let flagged = u8::from(margin + noise.sample(&mut rng) > 0.0);

        data.extend_from_slice(&raw);
        labels.push(label);
        suspected.push(flagged);
        risk.push(logit);
        suspect_margin.push(margin);
    }
    let features = Matrix::from_vec(cfg.n_samples, n_dim, data)?;
    let dataset = LabeledDataset::new(
        features,
        labels,
        Some(suspected),
        cfg.schema.factor_names().to_vec(),
    )?;
    Ok(SyntheticData {
        dataset,
        truth: SyntheticTruth {
            informative_dims: cfg.informative_dims.clone(),
            true_coefficients: cfg.true_coefficients.clone(),
            intercept: cfg.intercept,
            seed: cfg.seed,
        },
        risk,
        suspect_margin,
        suspected_noise_sd: cfg.suspected.noise_sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, positives: usize) -> LabeledDataset {
        let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let labels = (0..n).map(|i| u8::from(i < positives)).collect();
        LabeledDataset::new(features, labels, None, vec!["x".into()]).unwrap()
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let d = toy(10, 3);
        let (tr, te) = split(&d, &SplitConfig { seed: 1, ..Default::default() }).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let big = toy(55891, 184);
        let (tr, te) = split(&big, &SplitConfig { seed: 7, ..Default::default() }).unwrap();
        assert_eq!((tr.len(), te.len()), (44712, 11179));
    }

    #[test]
    fn split_is_deterministic_and_exact() {
        let d = toy(50, 10);
        let cfg = SplitConfig { seed: 42, ..Default::default() };
        let (a, b) = split(&d, &cfg).unwrap();
        let (a2, b2) = split(&d, &cfg).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        let mut all: Vec<f64> = a.features().column(0);
        all.extend(b.features().column(0));
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..50).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_degenerate_input() {
        let d = toy(2, 1);
        let cfg = SplitConfig { train_fraction: 0.4, seed: 0, stratified: false };
        assert!(matches!(split(&d, &cfg), Err(Error::DegenerateSplit { .. })));
        assert!(matches!(
            split(&toy(1, 1), &SplitConfig::default()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn stratified_split_keeps_ratio() {
        let d = toy(100, 20);
        let cfg = SplitConfig { stratified: true, seed: 3, ..Default::default() };
        let (tr, te) = split(&d, &cfg).unwrap();
        assert_eq!(tr.positives(), 16);
        assert_eq!(te.positives(), 4);
    }

    #[test]
    fn undersample_balances_and_keeps_positives() {
        let d = toy(1000, 184);
        let b = undersample(&d, 9).unwrap();
        assert_eq!(b.positives(), 184);
        assert_eq!(b.negatives(), 184);
        let balanced = toy(20, 10);
        assert_eq!(undersample(&balanced, 1).unwrap().len(), 20);
        assert!(matches!(undersample(&toy(5, 0), 0), Err(Error::MissingClass(1))));
        assert!(matches!(undersample(&toy(5, 5), 0), Err(Error::MissingClass(0))));
    }

    #[test]
    fn stddev_uses_sample_denominator() {
        let m = Matrix::from_rows(&[[0.0, 5.0, 2.0], [1.0, 5.0, 4.0], [0.0, 5.0, 6.0]]).unwrap();
        let s = column_stddev(&m).unwrap();
        assert!((s[0] - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
        assert!((s[2] - 2.0).abs() < 1e-15);
        let two = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!((column_stddev(&two).unwrap()[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(column_stddev(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = toy(5, 2);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = LabeledDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn csv_rejects_bad_labels() {
        let text = "x,label\n1.0,2\n";
        assert!(LabeledDataset::read_csv(text.as_bytes()).is_err());
        let no_label = "x,y\n1,2\n";
        assert!(LabeledDataset::read_csv(no_label.as_bytes()).is_err());
    }

    #[test]
    fn null_generator_is_balanced() {
        let cfg = SyntheticConfig::new(QuestionnaireSchema::reference(), 10_000, 11);
        let d = generate_synthetic(&cfg).unwrap().dataset;
        let rate = d.positives() as f64 / d.len() as f64;
        assert!((0.45..=0.55).contains(&rate), "rate {rate}");
        assert_eq!(d.dimension(), 84);
    }

    #[test]
    fn generator_is_deterministic() {
        let mut cfg = SyntheticConfig::new(QuestionnaireSchema::reference(), 200, 5);
        cfg.informative_dims = vec![1, 10];
        cfg.true_coefficients = vec![3.0, -2.0];
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn generator_rejects_bad_config() {
        let mut cfg = SyntheticConfig::new(QuestionnaireSchema::reference(), 100, 0);
        cfg.informative_dims = vec![84];
        cfg.true_coefficients = vec![1.0];
        assert!(matches!(generate_synthetic(&cfg), Err(Error::InvalidConfig(_))));
        cfg.informative_dims = vec![3];
        cfg.n_samples = 1;
        assert!(generate_synthetic(&cfg).is_err());
    }
}
