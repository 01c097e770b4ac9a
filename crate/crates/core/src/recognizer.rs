//! Streaming recognizers: the manifold-tracking pipeline and the
//! nearest-neighbor baseline.

use std::io::{BufRead, Write};

use crate::config::OmtConfig;
use crate::error::{OmtError, Result};
use crate::features::{squared_distance, FeatureVector, NormScale};
use crate::inference::{infer_identity, Prediction};
use crate::quantizer::{CoverState, Representative, StepOutcome};

/// Decision and ranking score for one observation. Higher scores are more
/// positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub positive: bool,
    pub score: f64,
}

/// Uniform interface for classifiers that see one observation at a time.
pub trait StreamingClassifier {
    fn observe(&mut self, x: &FeatureVector) -> Result<Verdict>;
}

/// Quantize-then-infer recognizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OmtRecognizer {
    cfg: OmtConfig,
    cover: CoverState,
    step_count: u64,
    input_scale: NormScale,
}

impl OmtRecognizer {
    pub fn new(cfg: OmtConfig) -> Result<Self> {
        cfg.validate()?;
        let cover = CoverState::new(cfg.initial_cover_radius);
        Ok(OmtRecognizer {
            cfg,
            cover,
            step_count: 0,
            input_scale: NormScale::identity(),
        })
    }

    /// Records the normalization the session's inputs were scaled with, so a
    /// resumed session can apply the same scale to later arrivals.
    pub fn with_input_scale(mut self, scale: NormScale) -> Self {
        self.input_scale = scale;
        self
    }

    pub fn input_scale(&self) -> NormScale {
        self.input_scale
    }

    pub fn config(&self) -> &OmtConfig {
        &self.cfg
    }

    pub fn cover(&self) -> &CoverState {
        &self.cover
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Updates the cover with `x`, then classifies `x` against the updated
    /// cover.
    pub fn process_step(&mut self, x: &FeatureVector) -> Result<Prediction> {
        self.process_step_detailed(x).map(|(p, _)| p)
    }

    pub fn process_step_detailed(&mut self, x: &FeatureVector) -> Result<(Prediction, StepOutcome)> {
        let outcome = self.cover.quantize_step(self.step_count, x, &self.cfg)?;
        self.step_count += 1;
        let prediction = if outcome.is_gated() {
            infer_identity(&self.cover, x, &self.cfg)?
        } else {
            Prediction::ungated()
        };
        Ok((prediction, outcome))
    }

    /// Writes a restartable snapshot: config, counters, anchor and cover.
    ///
    /// Floats are written in shortest round-trip form, so a reload is exact.
    pub fn save_snapshot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let c = &self.cfg;
        writeln!(out, "{SNAPSHOT_MAGIC},{SNAPSHOT_VERSION}")?;
        writeln!(out, "radius,{}", c.radius)?;
        writeln!(out, "k,{}", c.max_representatives)?;
        writeln!(out, "r0,{}", c.initial_cover_radius)?;
        writeln!(out, "sigma,{}", c.sigma)?;
        writeln!(out, "gamma,{}", c.gamma)?;
        writeln!(out, "epsilon,{}", c.epsilon)?;
        writeln!(out, "doublings,{}", self.cover.doubling_count())?;
        writeln!(out, "steps,{}", self.step_count)?;
        writeln!(out, "input_scale,{}", self.input_scale.max_norm())?;
        write!(out, "anchor")?;
        for v in c.anchor.iter() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
        for rep in self.cover.representatives() {
            write!(out, "rep,{}", rep.stream_index)?;
            for v in rep.vector.iter() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn load_snapshot<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| OmtError::parse(1, "empty snapshot"))?;
        let header = header?;
        let expected = format!("{SNAPSHOT_MAGIC},{SNAPSHOT_VERSION}");
        if header.trim() != expected {
            return Err(OmtError::parse(
                1,
                format!("unsupported snapshot header {header:?}, expected {expected:?}"),
            ));
        }

        let mut scalars = std::collections::HashMap::new();
        let mut anchor = None;
        let mut reps = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let key = fields.next().unwrap_or_default();
            match key {
                "anchor" => anchor = Some(parse_vector(fields, line_no)?),
                "rep" => {
                    let idx = fields
                        .next()
                        .ok_or_else(|| OmtError::parse(line_no, "missing stream index"))?;
                    let stream_index = idx
                        .parse::<u64>()
                        .map_err(|e| OmtError::parse(line_no, format!("bad stream index: {e}")))?;
                    reps.push(Representative {
                        stream_index,
                        vector: parse_vector(fields, line_no)?,
                    });
                }
                "radius" | "k" | "r0" | "sigma" | "gamma" | "epsilon" | "doublings" | "steps"
                | "input_scale" => {
                    let value = fields
                        .next()
                        .ok_or_else(|| OmtError::parse(line_no, format!("missing value for {key}")))?;
                    scalars.insert(key.to_string(), (line_no, value.to_string()));
                }
                other => {
                    return Err(OmtError::parse(line_no, format!("unknown snapshot key {other:?}")))
                }
            }
        }

        let anchor = anchor.ok_or(OmtError::MissingAnchor)?;
        let get = |key: &str| -> Result<&(usize, String)> {
            scalars
                .get(key)
                .ok_or_else(|| OmtError::parse(0, format!("snapshot is missing {key}")))
        };
        let float = |key: &str| -> Result<f64> {
            let (line, v) = get(key)?;
            v.parse::<f64>()
                .map_err(|e| OmtError::parse(*line, format!("bad {key}: {e}")))
        };
        let int = |key: &str| -> Result<u64> {
            let (line, v) = get(key)?;
            v.parse::<u64>()
                .map_err(|e| OmtError::parse(*line, format!("bad {key}: {e}")))
        };

        let cfg = OmtConfig {
            radius: float("radius")?,
            max_representatives: int("k")? as usize,
            initial_cover_radius: float("r0")?,
            sigma: float("sigma")?,
            gamma: float("gamma")?,
            epsilon: float("epsilon")?,
            anchor,
        };
        cfg.validate()?;
        for rep in &reps {
            rep.vector.ensure_dim(cfg.dim())?;
        }
        if reps.len() > cfg.max_representatives {
            return Err(OmtError::InvalidConfig(format!(
                "snapshot holds {} representatives but k = {}",
                reps.len(),
                cfg.max_representatives
            )));
        }
        let doublings = u32::try_from(int("doublings")?)
            .map_err(|_| OmtError::InvalidConfig("doubling count out of range".into()))?;
        let cover = CoverState::from_parts(reps, cfg.initial_cover_radius, doublings)?;
        let input_scale = match scalars.contains_key("input_scale") {
            true => NormScale::from_max_norm(float("input_scale")?)?,
            false => NormScale::identity(),
        };
        Ok(OmtRecognizer {
            cfg,
            cover,
            step_count: int("steps")?,
            input_scale,
        })
    }
}

const SNAPSHOT_MAGIC: &str = "omt-snapshot";
const SNAPSHOT_VERSION: u32 = 1;

fn parse_vector<'a>(fields: impl Iterator<Item = &'a str>, line: usize) -> Result<FeatureVector> {
    let values = fields
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| OmtError::parse(line, format!("bad number {f:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(values)
}

impl StreamingClassifier for OmtRecognizer {
    fn observe(&mut self, x: &FeatureVector) -> Result<Verdict> {
        let p = self.process_step(x)?;
        Ok(Verdict {
            positive: p.positive,
            score: p.ranking_score(),
        })
    }
}

/// Nearest-neighbor baseline: positive iff some labeled example lies within
/// `radius` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct NnRecognizer {
    anchors: Vec<FeatureVector>,
    radius: f64,
}

impl NnRecognizer {
    pub fn new(anchors: Vec<FeatureVector>, radius: f64) -> Result<Self> {
        let first = anchors
            .first()
            .ok_or_else(|| OmtError::InvalidConfig("need at least one labeled example".into()))?;
        for a in &anchors[1..] {
            a.ensure_dim(first.dim())?;
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(OmtError::InvalidConfig(format!(
                "radius must be nonnegative, got {radius}"
            )));
        }
        Ok(NnRecognizer { anchors, radius })
    }

    pub fn anchors(&self) -> &[FeatureVector] {
        &self.anchors
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance to the closest labeled example.
    pub fn nn_score(&self, x: &FeatureVector) -> Result<f64> {
        x.ensure_dim(self.anchors[0].dim())?;
        Ok(self
            .anchors
            .iter()
            .map(|a| squared_distance(a, x))
            .fold(f64::INFINITY, f64::min)
            .sqrt())
    }

    pub fn nn_classify(&self, x: &FeatureVector) -> Result<bool> {
        Ok(self.nn_score(x)? <= self.radius)
    }
}

impl StreamingClassifier for NnRecognizer {
    fn observe(&mut self, x: &FeatureVector) -> Result<Verdict> {
        let d = self.nn_score(x)?;
        Ok(Verdict {
            positive: d <= self.radius,
            score: -d,
        })
    }
}
