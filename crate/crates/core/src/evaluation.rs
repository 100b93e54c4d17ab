//! Average scores, skill scores, level calibration, Murphy curves and
//! functional-ratio tables over prediction/observation pairs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_mean, pairwise_sum, Scalar};
use crate::scoring::{cap_pos, elementary_score, ElementaryKind, ScoreParams};

/// Aligned predictions and observations.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet<T> {
    predictions: Vec<T>,
    observations: Vec<T>,
    ids: Vec<usize>,
    pub label: Option<String>,
}

impl<T: Scalar> PredictionSet<T> {
    pub fn new(predictions: Vec<T>, observations: Vec<T>) -> Result<Self> {
        let ids = (0..predictions.len()).collect();
        Self::with_ids(predictions, observations, ids)
    }

    pub fn with_ids(predictions: Vec<T>, observations: Vec<T>, ids: Vec<usize>) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::Empty("prediction set"));
        }
        if predictions.len() != observations.len() {
            return Err(Error::DimensionMismatch { expected: predictions.len(), got: observations.len() });
        }
        if ids.len() != predictions.len() {
            return Err(Error::DimensionMismatch { expected: predictions.len(), got: ids.len() });
        }
        if predictions.iter().chain(&observations).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction set"));
        }
        Ok(PredictionSet { predictions, observations, ids, label: None })
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn predictions(&self) -> &[T] {
        &self.predictions
    }

    pub fn observations(&self) -> &[T] {
        &self.observations
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    fn pairs(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.predictions.iter().copied().zip(self.observations.iter().copied())
    }

    /// Reads `id,prediction,observation` (the `id` column is optional).
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (pi, oi) = (col("prediction")?, col("observation")?);
        let id_col = col("id").ok();
        let (mut preds, mut obs, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<T> {
                let text = rec.get(i).unwrap_or("").trim();
                text.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::invalid(format!("row {}: cannot parse {text:?}", line + 1)))
            };
            preds.push(num(pi)?);
            obs.push(num(oi)?);
            ids.push(id_col.and_then(|i| rec.get(i)?.trim().parse().ok()).unwrap_or(line));
        }
        Self::with_ids(preds, obs, ids)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "prediction", "observation"])?;
        for ((id, x), y) in self.ids.iter().zip(&self.predictions).zip(&self.observations) {
            w.write_record([id.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Average Huber quantile score over the set (pairwise summation).
pub fn mean_score<T: Scalar>(ps: &PredictionSet<T>, p: &ScoreParams<T>) -> Result<T> {
    let scores: Vec<T> = ps.pairs().map(|(x, y)| p.score(x, y)).collect();
    pairwise_mean(&scores).ok_or(Error::Empty("prediction set"))
}

/// `1 - method_mean / ref_mean`; both means zero gives 0.
pub fn skill_score<T: Scalar>(method_mean: T, ref_mean: T) -> Result<T> {
    if method_mean < T::zero() || ref_mean < T::zero() || method_mean.is_nan() || ref_mean.is_nan() {
        return Err(Error::invalid("average scores must be nonnegative"));
    }
    if ref_mean == T::zero() {
        return if method_mean == T::zero() {
            Ok(T::zero())
        } else {
            Err(Error::ZeroDenominator("skill score with a perfect reference"))
        };
    }
    Ok(T::one() - method_mean / ref_mean)
}

/// Pooled sample level of a set of Huber quantile predictions:
/// `sum cap(x - y, b) / (sum cap(y - x, a) + sum cap(x - y, b))`.
pub fn huber_level_estimate<T: Scalar>(ps: &PredictionSet<T>, a: T, b: T) -> Result<T> {
    if a.is_nan() || b.is_nan() || a < T::zero() || b < T::zero() {
        return Err(Error::invalid("caps must be nonnegative"));
    }
    let over: Vec<T> = ps.pairs().map(|(x, y)| cap_pos(x - y, b)).collect();
    let under: Vec<T> = ps.pairs().map(|(x, y)| cap_pos(y - x, a)).collect();
    let (over, under) = (pairwise_sum(&over), pairwise_sum(&under));
    let denom = over + under;
    if denom == T::zero() {
        return Err(Error::ZeroDenominator("level estimate: no capped deviations"));
    }
    Ok(over / denom)
}

/// Fraction of pairs with `y <= x`.
pub fn coverage_frequency<T: Scalar>(ps: &PredictionSet<T>) -> T {
    let hits = ps.pairs().filter(|(x, y)| y <= x).count();
    T::from_usize(hits).unwrap() / T::from_usize(ps.len()).unwrap()
}

/// Mean Huber elementary score at every threshold, in grid order.
pub fn murphy_curve<T: Scalar>(ps: &PredictionSet<T>, p: &ScoreParams<T>, thetas: &[T]) -> Vec<(T, T)> {
    let mut buf = Vec::with_capacity(ps.len());
    thetas
        .iter()
        .map(|&theta| {
            buf.clear();
            buf.extend(ps.pairs().map(|(x, y)| elementary_score(ElementaryKind::Huber, x, y, theta, p)));
            (theta, pairwise_mean(&buf).unwrap_or_else(T::zero))
        })
        .collect()
}

pub const DEFAULT_THETA_NODES: usize = 513;

/// Equispaced thresholds over the data range padded by 5% on each side.
pub fn default_theta_grid<T: Scalar>(ps: &PredictionSet<T>, nodes: usize) -> Vec<T> {
    let (lo, hi) = ps
        .pairs()
        .flat_map(|(x, y)| [x, y])
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let pad = (hi - lo) * T::lit(0.05);
    linspace(lo - pad, hi + pad, nodes)
}

pub fn linspace<T: Scalar>(lo: T, hi: T, nodes: usize) -> Vec<T> {
    match nodes {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize(nodes - 1).unwrap();
            (0..nodes).map(|i| if i + 1 == nodes { hi } else { lo + step * T::from_usize(i).unwrap() }).collect()
        }
    }
}

pub fn write_murphy_csv<T: Scalar, W: Write>(curve: &[(T, T)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "mean_elementary_score"])?;
    for (theta, s) in curve {
        w.write_record([theta.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean ratio of Huber quantile predictions to a reference functional, per cap pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RatioTable<T> {
    pub a_grid: Vec<T>,
    pub b_grid: Vec<T>,
    /// `ratios[i][j]` for `a_grid[i]`, `b_grid[j]`.
    pub ratios: Vec<Vec<T>>,
    /// Rows skipped because the reference prediction was zero.
    pub excluded: usize,
}

/// Builds a ratio table. `huber(a, b)` yields Huber quantile predictions
/// aligned with `reference`; rows with a zero reference are excluded.
pub fn functional_ratio_table<T: Scalar, F>(a_grid: &[T], b_grid: &[T], reference: &[T], mut huber: F) -> Result<RatioTable<T>>
where
    F: FnMut(T, T) -> Result<Vec<T>>,
{
    let keep: Vec<usize> = (0..reference.len()).filter(|&i| reference[i] != T::zero()).collect();
    if keep.is_empty() {
        return Err(Error::ZeroDenominator("every reference prediction is zero"));
    }
    let mut ratios = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let mut row = Vec::with_capacity(b_grid.len());
        for &b in b_grid {
            let h = huber(a, b)?;
            if h.len() != reference.len() {
                return Err(Error::DimensionMismatch { expected: reference.len(), got: h.len() });
            }
            let r: Vec<T> = keep.iter().map(|&i| h[i] / reference[i]).collect();
            row.push(pairwise_mean(&r).unwrap());
        }
        ratios.push(row);
    }
    Ok(RatioTable { a_grid: a_grid.to_vec(), b_grid: b_grid.to_vec(), ratios, excluded: reference.len() - keep.len() })
}

impl<T: Scalar> RatioTable<T> {
    /// `a,b,ratio` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "ratio"])?;
        for (a, row) in self.a_grid.iter().zip(&self.ratios) {
            for (b, r) in self.b_grid.iter().zip(row) {
                w.write_record([a.to_string(), b.to_string(), r.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-method summary inside an [`EvaluationReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MethodSummary<T> {
    pub method: String,
    pub n: usize,
    pub mean_score: T,
    /// Skill against the report's reference method.
    pub skill: T,
    /// Pooled level estimate; `None` when every prediction is exact.
    pub level_estimate: Option<T>,
    pub coverage: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvaluationReport<T> {
    pub params: ScoreParams<T>,
    pub reference: String,
    /// How the level estimate combines rows.
    pub level_pooling: String,
    pub methods: Vec<MethodSummary<T>>,
}

/// Scores every labeled set and computes skill against the set labeled `reference`.
pub fn evaluate<T: Scalar>(sets: &[PredictionSet<T>], reference: &str, p: &ScoreParams<T>) -> Result<EvaluationReport<T>> {
    let label = |s: &PredictionSet<T>, i: usize| s.label.clone().unwrap_or_else(|| format!("method{}", i + 1));
    let means = sets.iter().map(|s| mean_score(s, p)).collect::<Result<Vec<T>>>()?;
    let ref_idx = (0..sets.len())
        .find(|&i| label(&sets[i], i) == reference)
        .ok_or_else(|| Error::invalid(format!("reference method {reference:?} not among the prediction sets")))?;
    let mut methods = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let level = match huber_level_estimate(s, p.a(), p.b()) {
            Ok(v) => Some(v),
            Err(Error::ZeroDenominator(_)) => None,
            Err(e) => return Err(e),
        };
        methods.push(MethodSummary {
            method: label(s, i),
            n: s.len(),
            mean_score: means[i],
            skill: skill_score(means[i], means[ref_idx])?,
            level_estimate: level,
            coverage: coverage_frequency(s),
        });
    }
    Ok(EvaluationReport { params: *p, reference: reference.to_string(), level_pooling: "pooled-sums".into(), methods })
}

impl<T: Scalar> EvaluationReport<T> {
    /// One row per metric and method: `metric,method,reference,tau,a,b,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "method", "reference", "tau", "a", "b", "value"])?;
        let (tau, a, b) = (self.params.tau().to_string(), self.params.a().to_string(), self.params.b().to_string());
        for m in &self.methods {
            let level = m.level_estimate.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
            for (metric, reference, value) in [
                ("mean_score", "", m.mean_score.to_string()),
                ("skill", self.reference.as_str(), m.skill.to_string()),
                ("level_estimate", "", level),
                ("coverage", "", m.coverage.to_string()),
            ] {
                w.write_record([metric, &m.method, reference, &tau, &a, &b, &value])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
