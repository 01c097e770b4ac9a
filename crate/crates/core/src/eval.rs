//! Rates, ROC sweeps, cover diagnostics and step timing.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::config::OmtConfig;
use crate::error::{OmtError, Result};
use crate::features::{squared_distance, FeatureVector};
use crate::inference::Prediction;
use crate::par::Execution;
use crate::quantizer::{CoverState, StepOutcome};
use crate::recognizer::{NnRecognizer, OmtRecognizer};
use crate::streams::LabeledStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
}

/// True and false positive rates of binary predictions.
pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<Rates> {
    if predictions.len() != labels.len() {
        return Err(OmtError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let (mut tp, mut fp, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        if l {
            pos += 1;
            tp += usize::from(p);
        } else {
            neg += 1;
            fp += usize::from(p);
        }
    }
    if pos == 0 {
        return Err(OmtError::UndefinedRate("no positive labels: TPR is undefined"));
    }
    if neg == 0 {
        return Err(OmtError::UndefinedRate("no negative labels: FPR is undefined"));
    }
    Ok(Rates {
        tpr: tp as f64 / pos as f64,
        fpr: fp as f64 / neg as f64,
    })
}

/// Unweighted mean of per-stream rates.
pub fn macro_average(rates: &[Rates]) -> Option<Rates> {
    if rates.is_empty() {
        return None;
    }
    let n = rates.len() as f64;
    Some(Rates {
        tpr: rates.iter().map(|r| r.tpr).sum::<f64>() / n,
        fpr: rates.iter().map(|r| r.fpr).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// How a score is turned into a decision at threshold `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Positive iff `score > theta` (absorption scores).
    Above,
    /// Positive iff `score <= theta` (distances).
    AtMost,
}

/// Operating points sorted by FPR (then TPR), with the trapezoid area under
/// the polyline `(0,0) -> points -> (1,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    auc: f64,
}

impl RocCurve {
    pub fn from_points(mut points: Vec<RocPoint>) -> Self {
        points.sort_by(|a, b| {
            a.fpr
                .total_cmp(&b.fpr)
                .then(a.tpr.total_cmp(&b.tpr))
                .then(a.threshold.total_cmp(&b.threshold))
        });
        let mut auc = 0.0;
        let mut prev = (0.0, 0.0);
        for p in points.iter().map(|p| (p.fpr, p.tpr)).chain([(1.0, 1.0)]) {
            auc += (p.0 - prev.0) * (p.1 + prev.1) / 2.0;
            prev = p;
        }
        RocCurve { points, auc }
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn auc(&self) -> f64 {
        self.auc
    }

    fn polyline(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once((0.0, 0.0))
            .chain(self.points.iter().map(|p| (p.fpr, p.tpr)))
            .chain([(1.0, 1.0)])
    }

    /// Best TPR reachable at exactly `fpr`, interpolating linearly between
    /// neighboring operating points.
    pub fn tpr_at_fpr(&self, fpr: f64) -> f64 {
        let line: Vec<(f64, f64)> = self.polyline().collect();
        let mut best: f64 = 0.0;
        for w in line.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x0 <= fpr && fpr <= x1 {
                let y = if x1 == x0 {
                    y0.max(y1)
                } else {
                    y0 + (y1 - y0) * (fpr - x0) / (x1 - x0)
                };
                best = best.max(y);
            }
        }
        best
    }

    /// The operating point with the smallest nonzero FPR (highest TPR among
    /// ties).
    pub fn min_nonzero_fpr_point(&self) -> Option<RocPoint> {
        let min = self
            .points
            .iter()
            .filter(|p| p.fpr > 0.0)
            .map(|p| p.fpr)
            .fold(f64::INFINITY, f64::min);
        self.points
            .iter()
            .filter(|p| p.fpr == min)
            .max_by(|a, b| a.tpr.total_cmp(&b.tpr))
            .copied()
    }

    pub fn max_tpr(&self) -> f64 {
        self.points.iter().map(|p| p.tpr).fold(0.0, f64::max)
    }

    pub fn max_fpr(&self) -> f64 {
        self.points.iter().map(|p| p.fpr).fold(0.0, f64::max)
    }

    /// `threshold,fpr,tpr` rows in curve order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "threshold,fpr,tpr")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> RocSummary {
        let low = self.min_nonzero_fpr_point();
        RocSummary {
            auc: self.auc,
            tpr_at_fpr_0_01: self.tpr_at_fpr(0.01),
            min_nonzero_fpr: low.map(|p| p.fpr),
            tpr_at_min_nonzero_fpr: low.map(|p| p.tpr),
            max_tpr: self.max_tpr(),
            max_fpr: self.max_fpr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocSummary {
    pub auc: f64,
    pub tpr_at_fpr_0_01: f64,
    pub min_nonzero_fpr: Option<f64>,
    pub tpr_at_min_nonzero_fpr: Option<f64>,
    pub max_tpr: f64,
    pub max_fpr: f64,
}

/// Exact empirical ROC of `scores` at the supplied thresholds plus every
/// distinct finite observed score.
pub fn roc_from_scores(
    scores: &[f64],
    truth: &[bool],
    thresholds: &[f64],
    decision: Decision,
    exec: Execution,
) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(OmtError::LengthMismatch {
            predictions: scores.len(),
            labels: truth.len(),
        });
    }
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (&s, &t) in scores.iter().zip(truth) {
        if s.is_nan() {
            return Err(OmtError::UndefinedRate("score is NaN"));
        }
        if t {
            pos.push(s)
        } else {
            neg.push(s)
        }
    }
    if pos.is_empty() {
        return Err(OmtError::UndefinedRate("no positive labels: TPR is undefined"));
    }
    if neg.is_empty() {
        return Err(OmtError::UndefinedRate("no negative labels: FPR is undefined"));
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);

    let mut grid: Vec<f64> = thresholds
        .iter()
        .copied()
        .chain(scores.iter().copied().filter(|s| s.is_finite()))
        .filter(|s| !s.is_nan())
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let rate = |sorted: &[f64], theta: f64| -> f64 {
        let at_most = sorted.partition_point(|&s| s <= theta);
        let fired = match decision {
            Decision::Above => sorted.len() - at_most,
            Decision::AtMost => at_most,
        };
        fired as f64 / sorted.len() as f64
    };
    let points = exec.map(&grid, |&theta| RocPoint {
        threshold: theta,
        tpr: rate(&pos, theta),
        fpr: rate(&neg, theta),
    });
    Ok(RocCurve::from_points(points))
}

/// Everything recorded about one replayed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub t: u64,
    pub label: i64,
    pub prediction: Prediction,
    /// Stream index of the nearest representative used for the decision.
    pub nearest_stream_index: Option<u64>,
    pub cover_size: usize,
    pub cover_radius: f64,
}

/// Runs a fresh recognizer over the whole stream.
pub fn replay_omt(stream: &LabeledStream, cfg: &OmtConfig) -> Result<Vec<StepTrace>> {
    let mut rec = OmtRecognizer::new(cfg.clone())?;
    stream
        .records
        .iter()
        .map(|r| {
            let prediction = rec.process_step(&r.vector)?;
            let cover = rec.cover();
            Ok(StepTrace {
                t: r.t,
                label: r.label,
                prediction,
                nearest_stream_index: prediction
                    .nearest_index
                    .map(|i| cover.representatives()[i].stream_index),
                cover_size: cover.len(),
                cover_radius: cover.radius(),
            })
        })
        .collect()
}

/// Writes `t,label,gated,nearest_rep,score,prediction` rows.
pub fn write_predictions_csv<W: Write>(trace: &[StepTrace], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,label,gated,nearest_rep,score,prediction")?;
    for s in trace {
        let p = &s.prediction;
        write!(out, "{},{},{},", s.t, s.label, u8::from(p.gated))?;
        if let Some(i) = s.nearest_stream_index {
            write!(out, "{i}")?;
        }
        write!(out, ",")?;
        if let Some(f) = p.score {
            write!(out, "{f}")?;
        }
        writeln!(out, ",{}", p.label())?;
    }
    Ok(())
}

/// ROC of the recognizer over the threshold `epsilon`.
///
/// Quantization does not depend on `epsilon`, so one replay yields the
/// scores for every threshold; the decision at each threshold is identical to
/// a fresh replay with that `epsilon`.
pub fn roc_sweep_omt(
    stream: &LabeledStream,
    cfg: &OmtConfig,
    thresholds: &[f64],
    exec: Execution,
) -> Result<RocCurve> {
    let scores = omt_scores(stream, cfg)?;
    roc_from_scores(&scores, &stream.truth(), thresholds, Decision::Above, exec)
}

/// Ranking scores of a full replay; ungated points score `-inf`.
pub fn omt_scores(stream: &LabeledStream, cfg: &OmtConfig) -> Result<Vec<f64>> {
    Ok(replay_omt(stream, cfg)?
        .iter()
        .map(|s| s.prediction.ranking_score())
        .collect())
}

/// Distance of every record to its closest labeled example.
pub fn nn_scores(stream: &LabeledStream, anchors: &[FeatureVector]) -> Result<Vec<f64>> {
    let nn = NnRecognizer::new(anchors.to_vec(), 0.0)?;
    stream.vectors().map(|x| nn.nn_score(x)).collect()
}

/// ROC of the nearest-neighbor baseline over the radius `R`.
pub fn roc_sweep_nn(
    stream: &LabeledStream,
    anchors: &[FeatureVector],
    radii: &[f64],
    exec: Execution,
) -> Result<RocCurve> {
    let scores = nn_scores(stream, anchors)?;
    roc_from_scores(&scores, &stream.truth(), radii, Decision::AtMost, exec)
}

/// Largest distance from a gated history point to its closest representative.
pub fn cover_error(history: &[FeatureVector], cover: &CoverState) -> Result<f64> {
    if history.is_empty() {
        return Ok(0.0);
    }
    if cover.is_empty() {
        return Err(OmtError::EmptyCover);
    }
    let mut worst: f64 = 0.0;
    for x in history {
        worst = worst.max(cover.nearest_representative(x)?.1);
    }
    Ok(worst)
}

/// Incremental version of [`cover_error`] for long streams.
///
/// Keeps every gated point with its squared distance to the nearest current
/// representative. Plain insertions update each point against the new member
/// only; a radius doubling triggers a full recomputation.
#[derive(Debug, Clone, Default)]
pub struct CoverTracker {
    history: Vec<FeatureVector>,
    nearest_sq: Vec<f64>,
}

impl CoverTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn history(&self) -> &[FeatureVector] {
        &self.history
    }

    /// Records `x` after `cover.quantize_step` returned `outcome` for it.
    pub fn observe(&mut self, x: &FeatureVector, outcome: StepOutcome, cover: &CoverState) {
        match outcome {
            StepOutcome::Ungated => return,
            StepOutcome::Inserted { doublings: 0 } => {
                let newest = &cover.representatives()[cover.len() - 1].vector;
                for (h, d) in self.history.iter().zip(self.nearest_sq.iter_mut()) {
                    *d = d.min(squared_distance(h, newest));
                }
            }
            StepOutcome::Inserted { .. } => {
                for (h, d) in self.history.iter().zip(self.nearest_sq.iter_mut()) {
                    *d = nearest_sq(cover, h);
                }
            }
            StepOutcome::Covered => {}
        }
        self.nearest_sq.push(nearest_sq(cover, x));
        self.history.push(x.clone());
    }

    /// Current cover error.
    pub fn d_max(&self) -> f64 {
        self.nearest_sq.iter().copied().fold(0.0, f64::max).sqrt()
    }
}

fn nearest_sq(cover: &CoverState, x: &[f64]) -> f64 {
    cover
        .representatives()
        .iter()
        .map(|r| squared_distance(&r.vector, x))
        .fold(f64::INFINITY, f64::min)
}

/// One row of the per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepTiming {
    pub t: u64,
    pub micros: f64,
    pub cover_size: usize,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingSummary {
    /// Mean step time over steps `[1000, 3000)`, microseconds.
    pub early_mean_micros: f64,
    /// Mean step time over the last 10% of steps, microseconds.
    pub late_mean_micros: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub steps: Vec<StepTiming>,
    pub summary: Option<TimingSummary>,
}

pub const TIMING_MIN_STEPS: usize = 4000;

impl TimingReport {
    pub fn from_steps(steps: Vec<StepTiming>) -> Self {
        let n = steps.len();
        let summary = (n >= TIMING_MIN_STEPS).then(|| {
            let mean = |s: &[StepTiming]| s.iter().map(|x| x.micros).sum::<f64>() / s.len() as f64;
            let early = mean(&steps[1000..3000]);
            let late = mean(&steps[n - n / 10..]);
            TimingSummary {
                early_mean_micros: early,
                late_mean_micros: late,
                ratio: late / early,
            }
        });
        TimingReport { steps, summary }
    }

    /// One JSON object per step: `{t, micros, cover_size, r}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut out, s)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Times every `process_step` of a fresh recognizer over the stream.
pub fn bench_step_time(stream: &LabeledStream, cfg: &OmtConfig) -> Result<TimingReport> {
    let mut rec = OmtRecognizer::new(cfg.clone())?;
    let mut steps = Vec::with_capacity(stream.len());
    for r in &stream.records {
        let start = Instant::now();
        rec.process_step(&r.vector)?;
        let elapsed = start.elapsed();
        steps.push(StepTiming {
            t: r.t,
            micros: elapsed.as_nanos() as f64 / 1000.0,
            cover_size: rec.cover().len(),
            r: rec.cover().radius(),
        });
    }
    Ok(TimingReport::from_steps(steps))
}
