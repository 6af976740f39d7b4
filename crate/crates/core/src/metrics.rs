//! Confusion-matrix rates, ROC/AUC, repeated-run aggregation and Welch's
//! t-test.
//!
//! Ratios whose denominator is zero are reported as `None`, never as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionCounts> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            (y, p) => return Err(Error::NonBinary(if y > 1 { y } else { p })),
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub counts: ConfusionCounts,
    pub sensitivity: Option<f64>,
    pub fpr: Option<f64>,
    pub specificity: Option<f64>,
    pub fnr: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roc_points: Vec<(f64, f64)>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// All threshold metrics of a confusion matrix; AUC is left empty.
pub fn derive(c: &ConfusionCounts) -> RunMetrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let sensitivity = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    RunMetrics {
        counts: *c,
        sensitivity,
        fpr: ratio(c.fp, c.fp + c.tn),
        specificity: ratio(c.tn, c.fp + c.tn),
        fnr: ratio(c.fn_, c.tp + c.fn_),
        precision,
        f1,
        accuracy: ratio(c.tp + c.tn, c.total()),
        auc: None,
        roc_points: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    /// (fpr, tpr) pairs from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
}

/// ROC by sweeping the distinct scores from high to low; AUC by the
/// trapezoid rule. Tied scores move both coordinates at once, which counts
/// each tied positive/negative pair as one half.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue("scores".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 {
        return Err(Error::MissingClass(1));
    }
    if neg == 0 {
        return Err(Error::MissingClass(0));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    // twice the area, in units of one positive × one negative
    let mut area2: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area2 += ((fp - fp0) * (tp + tp0)) as u128;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        auc: area2 as f64 / (2.0 * pos as f64 * neg as f64),
        points,
    })
}

/// Threshold metrics at 0.5 plus, when `with_auc`, ROC and AUC of the scores.
pub fn evaluate_scores(labels: &[u8], scores: &[f64], with_auc: bool) -> Result<RunMetrics> {
    let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    let mut m = derive(&confusion(labels, &preds)?);
    if with_auc {
        let roc = roc_auc(labels, scores)?;
        m.auc = Some(roc.auc);
        m.roc_points = roc.points;
    }
    Ok(m)
}

/// Scores the expert `suspected` flag against the diagnosis labels.
pub fn evaluate_baseline(labels: &[u8], suspected: Option<&[u8]>) -> Result<RunMetrics> {
    let s = suspected.ok_or(Error::MissingSuspectedColumn)?;
    Ok(derive(&confusion(labels, s)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sensitivity,
    Fpr,
    Specificity,
    Fnr,
    Precision,
    F1,
    Accuracy,
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Sensitivity,
        Metric::Fpr,
        Metric::Specificity,
        Metric::Fnr,
        Metric::Precision,
        Metric::F1,
        Metric::Accuracy,
        Metric::Auc,
    ];

    /// The columns of the summary table, in order.
    pub const TABLE: [Metric; 6] = [
        Metric::Sensitivity,
        Metric::Fpr,
        Metric::Specificity,
        Metric::Fnr,
        Metric::Accuracy,
        Metric::Auc,
    ];

    pub fn of(self, m: &RunMetrics) -> Option<f64> {
        match self {
            Metric::Sensitivity => m.sensitivity,
            Metric::Fpr => m.fpr,
            Metric::Specificity => m.specificity,
            Metric::Fnr => m.fnr,
            Metric::Precision => m.precision,
            Metric::F1 => m.f1,
            Metric::Accuracy => m.accuracy,
            Metric::Auc => m.auc,
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Metric::Sensitivity => "Sensitivity",
            Metric::Fpr => "FPR",
            Metric::Specificity => "Specificity",
            Metric::Fnr => "FNR",
            Metric::Precision => "Precision",
            Metric::F1 => "F1",
            Metric::Accuracy => "Accuracy",
            Metric::Auc => "AUC",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::Sensitivity => "sensitivity",
            Metric::Fpr => "fpr",
            Metric::Specificity => "specificity",
            Metric::Fnr => "fnr",
            Metric::Precision => "precision",
            Metric::F1 => "f1",
            Metric::Accuracy => "accuracy",
            Metric::Auc => "auc",
        }
    }

    /// Rates print as percentages with two decimals, AUC as a fraction with three.
    pub fn format(self, v: f64) -> String {
        match self {
            Metric::Auc => format!("{v:.3}"),
            _ => format!("{:.2}", v * 100.0),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two defined runs.
    pub std: Option<f64>,
    /// Runs where the metric was defined.
    pub defined: usize,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        // shifted by the first value so identical runs give an exact mean
        let mean = values
            .first()
            .map(|&v0| v0 + values.iter().map(|v| v - v0).sum::<f64>() / n as f64);
        let std = mean.filter(|_| n >= 2).map(|mu| {
            (values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        MetricSummary { mean, std, defined: n }
    }

    /// Table cell: `mean (std)`, `mean` alone with one run, `None` when the
    /// metric was never defined.
    pub fn cell(&self, metric: Metric) -> String {
        match (self.mean, self.std) {
            (Some(m), Some(s)) => format!("{} ({})", metric.format(m), metric.format(s)),
            (Some(m), None) => metric.format(m),
            (None, _) => "None".to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub sensitivity: MetricSummary,
    pub fpr: MetricSummary,
    pub specificity: MetricSummary,
    pub fnr: MetricSummary,
    pub precision: MetricSummary,
    pub f1: MetricSummary,
    pub accuracy: MetricSummary,
    pub auc: MetricSummary,
}

impl AggregateReport {
    pub fn get(&self, metric: Metric) -> &MetricSummary {
        match metric {
            Metric::Sensitivity => &self.sensitivity,
            Metric::Fpr => &self.fpr,
            Metric::Specificity => &self.specificity,
            Metric::Fnr => &self.fnr,
            Metric::Precision => &self.precision,
            Metric::F1 => &self.f1,
            Metric::Accuracy => &self.accuracy,
            Metric::Auc => &self.auc,
        }
    }

    fn get_mut(&mut self, metric: Metric) -> &mut MetricSummary {
        match metric {
            Metric::Sensitivity => &mut self.sensitivity,
            Metric::Fpr => &mut self.fpr,
            Metric::Specificity => &mut self.specificity,
            Metric::Fnr => &mut self.fnr,
            Metric::Precision => &mut self.precision,
            Metric::F1 => &mut self.f1,
            Metric::Accuracy => &mut self.accuracy,
            Metric::Auc => &mut self.auc,
        }
    }
}

/// Defined values of one metric across runs.
pub fn metric_values(runs: &[RunMetrics], metric: Metric) -> Vec<f64> {
    runs.iter().filter_map(|r| metric.of(r)).collect()
}

pub fn aggregate(runs: &[RunMetrics]) -> AggregateReport {
    let mut report = AggregateReport {
        runs: runs.len(),
        ..Default::default()
    };
    for metric in Metric::ALL {
        *report.get_mut(metric) = MetricSummary::from_values(&metric_values(runs, metric));
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Two-sided Welch t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return Err(Error::DegenerateSamples);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    Ok(WelchTest {
        t,
        df,
        p_value: student_t_two_sided(t, df),
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom, via
/// `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, n = 9); relative error near 1e-15.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
