use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use omt_core::streams::read_stream;
use omt_core::eval::{
    nn_scores, roc_from_scores, write_predictions_csv, Decision, RocSummary, StepTiming,
    StepTrace, TimingReport,
};
use omt_core::{
    bench_step_time, confusion, ingest, roc_sweep_omt, synth_stream, Execution, FeatureVector,
    LabeledStream, OmtConfig, OmtError, OmtRecognizer, Rates, RocCurve, StreamFormat,
};
use serde_json::{json, Value};

use crate::args::{Axis, BenchArgs, RocNnArgs, RunArgs, StreamArgs, SweepArgs, SynthArgs};
use crate::output::write_atomic;
use crate::CliError;

/// Threshold grid used when a command reports a full OMT ROC. The leading
/// value lies below every score so the gate operating point is included.
fn score_grid() -> Vec<f64> {
    std::iter::once(-1.0)
        .chain((0..=100).map(|i| i as f64 / 100.0))
        .collect()
}

fn radius_grid() -> Vec<f64> {
    (0..=200).map(|i| i as f64 / 100.0).collect()
}

pub fn execution(jobs: Option<usize>) -> Result<Execution, CliError> {
    match jobs {
        None => Ok(Execution::Parallel),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
    }
}

fn load(stream: &StreamArgs) -> Result<LabeledStream, CliError> {
    Ok(ingest(&stream.stream, stream.format())?)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)
    })?;
    Ok(())
}

/// Rates, or `None` when a class is missing from the stream.
fn rates(predictions: &[bool], truth: &[bool]) -> Result<Option<Rates>, CliError> {
    match confusion(predictions, truth) {
        Ok(r) => Ok(Some(r)),
        Err(OmtError::UndefinedRate(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn roc(scores: &[f64], truth: &[bool], grid: &[f64], decision: Decision) -> Result<Option<RocCurve>, CliError> {
    match roc_from_scores(scores, truth, grid, decision, Execution::Sequential) {
        Ok(c) => Ok(Some(c)),
        Err(OmtError::UndefinedRate(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let spec = a.spec();
    spec.validate()?;
    let stream = synth_stream(&spec)?;
    let format = a
        .format
        .map(StreamFormat::from)
        .unwrap_or_else(|| StreamFormat::from_path(&a.out));
    write_atomic(&a.out, |w| stream.write(format, w))?;
    Ok(())
}

struct Replay {
    trace: Vec<StepTrace>,
    timing: TimingReport,
    recognizer: OmtRecognizer,
}

fn replay(stream: &LabeledStream, mut rec: OmtRecognizer) -> Result<Replay, CliError> {
    let mut trace = Vec::with_capacity(stream.len());
    let mut steps = Vec::with_capacity(stream.len());
    for r in &stream.records {
        let start = Instant::now();
        let prediction = rec.process_step(&r.vector)?;
        let micros = start.elapsed().as_nanos() as f64 / 1000.0;
        let cover = rec.cover();
        trace.push(StepTrace {
            t: r.t,
            label: r.label,
            prediction,
            nearest_stream_index: prediction
                .nearest_index
                .map(|i| cover.representatives()[i].stream_index),
            cover_size: cover.len(),
            cover_radius: cover.radius(),
        });
        steps.push(StepTiming {
            t: r.t,
            micros,
            cover_size: cover.len(),
            r: cover.radius(),
        });
    }
    Ok(Replay {
        trace,
        timing: TimingReport::from_steps(steps),
        recognizer: rec,
    })
}

/// Everything reported about one replay at one configuration.
struct Evaluation {
    rates: Option<Rates>,
    roc: Option<RocCurve>,
    cover_size: usize,
    r: f64,
    mean_step_micros: f64,
}

fn evaluate(stream: &LabeledStream, replay: &Replay) -> Result<Evaluation, CliError> {
    let truth = stream.truth();
    let scores: Vec<f64> = replay.trace.iter().map(|s| s.prediction.ranking_score()).collect();
    let predictions: Vec<bool> = replay.trace.iter().map(|s| s.prediction.positive).collect();
    let steps = &replay.timing.steps;
    Ok(Evaluation {
        rates: rates(&predictions, &truth)?,
        roc: roc(&scores, &truth, &score_grid(), Decision::Above)?,
        cover_size: replay.recognizer.cover().len(),
        r: replay.recognizer.cover().radius(),
        mean_step_micros: if steps.is_empty() {
            0.0
        } else {
            steps.iter().map(|s| s.micros).sum::<f64>() / steps.len() as f64
        },
    })
}

fn roc_json(roc: &Option<RocCurve>) -> Value {
    json!(roc.as_ref().map(RocCurve::summary))
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    // a resumed session keeps the scale fitted when it started
    let (stream, rec) = match &a.resume {
        Some(p) => {
            let rec = OmtRecognizer::load_snapshot(BufReader::new(File::open(p)?))?;
            let raw = read_stream(File::open(&a.stream.stream)?, a.stream.format())?;
            (raw.rescaled(rec.input_scale())?, rec)
        }
        None => {
            let stream = load(&a.stream)?;
            let rec = OmtRecognizer::new(a.model.config(stream.anchor.clone()))?
                .with_input_scale(stream.scale);
            (stream, rec)
        }
    };
    let epsilon = rec.config().epsilon;
    let replay = replay(&stream, rec)?;
    let eval = evaluate(&stream, &replay)?;

    if let Some(p) = &a.out {
        write_atomic(p, |w| write_predictions_csv(&replay.trace, w))?;
    }
    if let Some(p) = &a.diagnostics {
        write_atomic(p, |w| replay.timing.write_jsonl(w))?;
    }
    if let Some(p) = &a.cover_dump {
        write_atomic(p, |w| replay.recognizer.cover().write_csv(w))?;
    }
    if let Some(p) = &a.snapshot_out {
        write_atomic(p, |w| replay.recognizer.save_snapshot(w))?;
    }
    let cover = replay.recognizer.cover();
    let summary = json!({
        "steps": replay.trace.len(),
        "gated": replay.trace.iter().filter(|s| s.prediction.gated).count(),
        "positives": replay.trace.iter().filter(|s| s.prediction.positive).count(),
        "epsilon": epsilon,
        "tpr": eval.rates.map(|r| r.tpr),
        "fpr": eval.rates.map(|r| r.fpr),
        "cover_size": cover.len(),
        "cover_radius": cover.radius(),
        "doublings": cover.doubling_count(),
        "scale_max_norm": stream.scale.max_norm(),
        "roc": roc_json(&eval.roc),
        "timing": replay.timing.summary,
    });
    if let Some(p) = &a.summary {
        write_json(p, &summary)?;
    }
    print_json(&summary);
    Ok(())
}

struct SweepRow {
    value: f64,
    eval: Evaluation,
}

pub fn sweep(a: &SweepArgs, exec: Execution) -> Result<(), CliError> {
    if a.grid.is_empty() {
        return Err(CliError::Usage("--grid needs at least one value".into()));
    }
    let stream = load(&a.stream)?;
    let base = a.model.config(stream.anchor.clone());
    base.validate()?;

    if a.axis == Axis::Epsilon {
        let curve = roc_sweep_omt(&stream, &base, &a.grid, exec)?;
        write_atomic(&a.out, |w| curve.write_csv(w))?;
        print_json(&json!({ "axis": "epsilon", "roc": curve.summary() }));
        return Ok(());
    }

    let configs: Vec<(f64, OmtConfig)> = a
        .grid
        .iter()
        .map(|&v| {
            let cfg = match a.axis {
                Axis::Radius => base.clone().with_radius(v),
                _ => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(CliError::Usage(format!("k must be a positive integer, got {v}")));
                    }
                    base.clone().with_max_representatives(v as usize)
                }
            };
            cfg.validate()?;
            Ok((v, cfg))
        })
        .collect::<Result<_, CliError>>()?;
    let rows = exec.try_map(&configs, |(value, cfg)| {
        let r = replay(&stream, OmtRecognizer::new(cfg.clone())?)?;
        Ok::<_, CliError>(SweepRow {
            value: *value,
            eval: evaluate(&stream, &r)?,
        })
    })?;

    let axis = if a.axis == Axis::Radius { "radius" } else { "k" };
    write_atomic(&a.out, |w| {
        writeln!(
            w,
            "{axis},tpr,fpr,auc,tpr_at_fpr_0.01,max_tpr,max_fpr,cover_size,r,mean_step_micros"
        )?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &rows {
            let e = &row.eval;
            let s: Option<RocSummary> = e.roc.as_ref().map(RocCurve::summary);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                row.value,
                opt(e.rates.map(|r| r.tpr)),
                opt(e.rates.map(|r| r.fpr)),
                opt(s.map(|s| s.auc)),
                opt(s.map(|s| s.tpr_at_fpr_0_01)),
                opt(s.map(|s| s.max_tpr)),
                opt(s.map(|s| s.max_fpr)),
                e.cover_size,
                e.r,
                e.mean_step_micros
            )?;
        }
        Ok(())
    })?;
    if let Some(p) = &a.roc_out {
        write_atomic(p, |w| {
            writeln!(w, "{axis},threshold,fpr,tpr")?;
            for row in &rows {
                for pt in row.eval.roc.iter().flat_map(|c| c.points()) {
                    writeln!(w, "{},{},{},{}", row.value, pt.threshold, pt.fpr, pt.tpr)?;
                }
            }
            Ok(())
        })?;
    }
    let summary: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut v = json!({
                "tpr": row.eval.rates.map(|r| r.tpr),
                "fpr": row.eval.rates.map(|r| r.fpr),
                "roc": roc_json(&row.eval.roc),
                "cover_size": row.eval.cover_size,
                "r": row.eval.r,
                "mean_step_micros": row.eval.mean_step_micros,
            });
            v[axis] = match a.axis {
                Axis::K => json!(row.value as usize),
                _ => json!(row.value),
            };
            v
        })
        .collect();
    print_json(&json!({ "axis": axis, "rows": summary }));
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let stream = load(&a.stream)?;
    let cfg = a.model.config(stream.anchor.clone());
    let report = bench_step_time(&stream, &cfg)?;
    if let Some(p) = &a.out {
        write_atomic(p, |w| report.write_jsonl(w))?;
    }
    let last = report.steps.last();
    print_json(&json!({
        "steps": report.steps.len(),
        "cover_size": last.map(|s| s.cover_size),
        "r": last.map(|s| s.r),
        "timing": report.summary,
    }));
    Ok(())
}

/// Reads one comma-separated vector per nonblank line.
fn read_anchors(path: &Path) -> Result<Vec<FeatureVector>, CliError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| OmtError::Parse {
                line: i + 1,
                message: format!("anchors: {e}"),
            })?;
        out.push(FeatureVector::new(values)?);
    }
    Ok(out)
}

pub fn roc_nn(a: &RocNnArgs, exec: Execution) -> Result<(), CliError> {
    let stream = load(&a.stream)?;
    let mut anchors = vec![stream.anchor.clone()];
    if let Some(p) = &a.anchors {
        for x in read_anchors(p)? {
            if x.dim() != stream.dim() {
                return Err(OmtError::DimensionMismatch {
                    expected: stream.dim(),
                    found: x.dim(),
                }
                .into());
            }
            anchors.push(stream.scale.apply(&x));
        }
    }
    let grid = if a.grid.is_empty() { radius_grid() } else { a.grid.clone() };
    let scores = nn_scores(&stream, &anchors)?;
    let curve = roc_from_scores(&scores, &stream.truth(), &grid, Decision::AtMost, exec)?;
    write_atomic(&a.out, |w| curve.write_csv(w))?;
    print_json(&json!({ "anchors": anchors.len(), "roc": curve.summary() }));
    Ok(())
}
