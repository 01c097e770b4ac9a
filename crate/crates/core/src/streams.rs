//! Labeled stream files and a seeded synthetic stream generator.
//!
//! File formats:
//!
//! * CSV with header `t,label,f0,f1,...`. The anchor row has `t = -1` and
//!   `label = 1`; every other row has a nonnegative, strictly increasing `t`.
//! * JSONL with one object `{"t": .., "label": .., "x": [..]}` per line,
//!   anchor again at `t = -1`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{OmtError, Result};
use crate::features::{normalize_dataset, FeatureVector, NormScale};

pub const ANCHOR_T: i64 = -1;
pub const TARGET_LABEL: i64 = 1;
pub const DISTRACTOR_LABEL: i64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamRecord {
    pub t: u64,
    pub vector: FeatureVector,
    /// Identity of the source. Only evaluation looks at it.
    pub label: i64,
}

/// An anchor plus the unlabeled observations that follow it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub anchor: FeatureVector,
    pub anchor_label: i64,
    pub records: Vec<StreamRecord>,
    /// Scale already applied to `anchor` and `records`.
    pub scale: NormScale,
}

impl LabeledStream {
    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Ground truth: a record is positive when it shares the anchor's label.
    pub fn truth(&self) -> Vec<bool> {
        self.records
            .iter()
            .map(|r| r.label == self.anchor_label)
            .collect()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &FeatureVector> {
        self.records.iter().map(|r| &r.vector)
    }

    /// Rescales anchor and records so the largest norm among them is one.
    /// The composed scale is recorded.
    pub fn normalized(self) -> Result<Self> {
        let mut all = Vec::with_capacity(self.records.len() + 1);
        all.push(self.anchor);
        all.extend(self.records.iter().map(|r| r.vector.clone()));
        let (mut scaled, scale) = normalize_dataset(&all)?;
        let records = self
            .records
            .into_iter()
            .zip(scaled.drain(1..))
            .map(|(r, vector)| StreamRecord { vector, ..r })
            .collect();
        let anchor = scaled.pop().expect("anchor survives normalization");
        Ok(LabeledStream {
            anchor,
            anchor_label: self.anchor_label,
            records,
            scale: NormScale::from_max_norm(self.scale.max_norm() * scale.max_norm())?,
        })
    }

    /// Applies an already fitted scale instead of fitting a new one, as for
    /// arrivals after the session's scale was fixed.
    pub fn rescaled(self, scale: NormScale) -> Result<Self> {
        Ok(LabeledStream {
            anchor: scale.apply(&self.anchor),
            anchor_label: self.anchor_label,
            records: self
                .records
                .into_iter()
                .map(|r| StreamRecord {
                    vector: scale.apply(&r.vector),
                    ..r
                })
                .collect(),
            scale: NormScale::from_max_norm(self.scale.max_norm() * scale.max_norm())?,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t,label")?;
        for j in 0..self.dim() {
            write!(out, ",f{j}")?;
        }
        writeln!(out)?;
        write_csv_row(&mut out, ANCHOR_T, self.anchor_label, &self.anchor)?;
        for r in &self.records {
            write_csv_row(&mut out, r.t as i64, r.label, &r.vector)?;
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = |t: i64, label: i64, x: &FeatureVector| -> std::io::Result<()> {
            let row = JsonRow {
                t,
                label,
                x: x.to_vec(),
            };
            serde_json::to_writer(&mut out, &row)?;
            writeln!(out)
        };
        line(ANCHOR_T, self.anchor_label, &self.anchor)?;
        for r in &self.records {
            line(r.t as i64, r.label, &r.vector)?;
        }
        Ok(())
    }

    pub fn write(&self, format: StreamFormat, out: impl Write) -> std::io::Result<()> {
        match format {
            StreamFormat::Csv => self.write_csv(out),
            StreamFormat::Jsonl => self.write_jsonl(out),
        }
    }
}

fn write_csv_row<W: Write>(out: &mut W, t: i64, label: i64, x: &FeatureVector) -> std::io::Result<()> {
    write!(out, "{t},{label}")?;
    for v in x.iter() {
        write!(out, ",{v}")?;
    }
    writeln!(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Csv,
    Jsonl,
}

impl StreamFormat {
    /// Picks the format from the file extension; anything but `.jsonl` /
    /// `.json` / `.ndjson` is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "ndjson") => StreamFormat::Jsonl,
            _ => StreamFormat::Csv,
        }
    }
}

impl std::str::FromStr for StreamFormat {
    type Err = OmtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(StreamFormat::Csv),
            "jsonl" => Ok(StreamFormat::Jsonl),
            other => Err(OmtError::InvalidConfig(format!(
                "unknown stream format {other:?} (expected csv or jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    t: i64,
    label: i64,
    x: Vec<f64>,
}

/// Collects rows into a stream, enforcing one anchor, equal dimensions and
/// increasing `t`.
struct StreamBuilder {
    anchor: Option<(FeatureVector, i64)>,
    records: Vec<StreamRecord>,
    dim: Option<usize>,
}

impl StreamBuilder {
    fn new() -> Self {
        StreamBuilder {
            anchor: None,
            records: Vec::new(),
            dim: None,
        }
    }

    fn push(&mut self, line: usize, t: i64, label: i64, values: Vec<f64>) -> Result<()> {
        let vector = FeatureVector::new(values).map_err(|e| OmtError::parse(line, e.to_string()))?;
        match self.dim {
            Some(d) if d != vector.dim() => {
                return Err(OmtError::parse(
                    line,
                    format!("expected {d} features, found {}", vector.dim()),
                ))
            }
            _ => self.dim = Some(vector.dim()),
        }
        if t == ANCHOR_T {
            if self.anchor.is_some() {
                return Err(OmtError::parse(line, "second anchor row"));
            }
            self.anchor = Some((vector, label));
            return Ok(());
        }
        let t = u64::try_from(t).map_err(|_| OmtError::parse(line, format!("invalid t = {t}")))?;
        if let Some(prev) = self.records.last() {
            if t <= prev.t {
                return Err(OmtError::parse(
                    line,
                    format!("t = {t} does not increase (previous {})", prev.t),
                ));
            }
        }
        self.records.push(StreamRecord { t, vector, label });
        Ok(())
    }

    fn finish(self) -> Result<LabeledStream> {
        let (anchor, anchor_label) = self.anchor.ok_or(OmtError::MissingAnchor)?;
        Ok(LabeledStream {
            anchor,
            anchor_label,
            records: self.records,
            scale: NormScale::identity(),
        })
    }
}

/// Parses a CSV stream without rescaling it.
pub fn read_csv<R: Read>(input: R) -> Result<LabeledStream> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| OmtError::parse(1, e.to_string()))?
        .clone();
    if headers.len() < 3 || &headers[0] != "t" || &headers[1] != "label" {
        return Err(OmtError::parse(
            1,
            "header must be t,label,f0,f1,... with at least one feature column",
        ));
    }
    let mut builder = StreamBuilder::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            OmtError::parse(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != headers.len() {
            return Err(OmtError::parse(
                line,
                format!("expected {} fields, found {}", headers.len(), row.len()),
            ));
        }
        let int = |i: usize, name: &str| -> Result<i64> {
            row[i]
                .parse::<i64>()
                .map_err(|_| OmtError::parse(line, format!("{name} is not an integer: {:?}", &row[i])))
        };
        let t = int(0, "t")?;
        let label = int(1, "label")?;
        let values = row
            .iter()
            .skip(2)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| OmtError::parse(line, format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        builder.push(line, t, label, values)?;
    }
    builder.finish()
}

/// Parses a JSONL stream without rescaling it.
pub fn read_jsonl<R: Read>(input: R) -> Result<LabeledStream> {
    let mut builder = StreamBuilder::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow =
            serde_json::from_str(&line).map_err(|e| OmtError::parse(line_no, e.to_string()))?;
        builder.push(line_no, row.t, row.label, row.x)?;
    }
    builder.finish()
}

pub fn read_stream<R: Read>(input: R, format: StreamFormat) -> Result<LabeledStream> {
    match format {
        StreamFormat::Csv => read_csv(input),
        StreamFormat::Jsonl => read_jsonl(input),
    }
}

/// Reads a stream file and rescales it to unit maximum norm.
pub fn ingest(path: &Path, format: StreamFormat) -> Result<LabeledStream> {
    read_stream(File::open(path)?, format)?.normalized()
}

/// Parameters of the synthetic evaluation stream.
///
/// The target is a smooth bounded walk in a low-dimensional latent disc,
/// embedded isometrically into `dim` dimensions. Distractors come from
/// `distractor_clusters` flat patches placed at random distances from the
/// target's starting point. With `interleave`, one distractor follows every
/// target frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub dim: usize,
    /// Number of target frames.
    pub n_steps: usize,
    pub latent_dim: usize,
    /// Norm of the latent origin (the walk's start point) in ambient space.
    pub start_offset: f64,
    /// Radius of the latent ball the target walk is confined to.
    pub manifold_radius: f64,
    /// Typical latent step length per frame.
    pub drift: f64,
    /// Velocity persistence in `[0, 1)`; higher gives smoother paths.
    pub smoothness: f64,
    /// Expected norm of the isotropic per-frame noise.
    pub noise: f64,
    pub distractor_clusters: usize,
    /// Radius of each distractor patch.
    pub distractor_spread: f64,
    /// Range of distances between distractor patch centers and the start point.
    pub distractor_min_distance: f64,
    pub distractor_max_distance: f64,
    pub interleave: bool,
    /// When nonzero, the target's latent path repeats with this period
    /// (fresh noise on every pass), so its cover eventually stops growing.
    pub loop_period: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            dim: 32,
            n_steps: 2000,
            latent_dim: 2,
            start_offset: 0.0,
            manifold_radius: 0.2,
            drift: 0.02,
            smoothness: 0.8,
            noise: 0.005,
            distractor_clusters: 42,
            distractor_spread: 0.1,
            distractor_min_distance: 0.1,
            distractor_max_distance: 0.9,
            interleave: true,
            loop_period: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OmtError::InvalidConfig(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.latent_dim == 0 || self.latent_dim > self.dim {
            return bad(format!(
                "latent_dim must lie in 1..={}, got {}",
                self.dim, self.latent_dim
            ));
        }
        let magnitudes = [
            ("start_offset", self.start_offset),
            ("manifold_radius", self.manifold_radius),
            ("drift", self.drift),
            ("noise", self.noise),
            ("distractor_spread", self.distractor_spread),
            ("distractor_min_distance", self.distractor_min_distance),
            ("distractor_max_distance", self.distractor_max_distance),
        ];
        for (name, v) in magnitudes {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.smoothness) {
            return bad(format!("smoothness must lie in [0, 1), got {}", self.smoothness));
        }
        if self.distractor_min_distance > self.distractor_max_distance {
            return bad("distractor_min_distance exceeds distractor_max_distance".into());
        }
        if self.interleave && self.distractor_clusters == 0 {
            return bad("interleaving needs at least one distractor cluster".into());
        }
        if self.interleave && self.dim < 2 {
            return bad("distractor patches need dim >= 2".into());
        }
        Ok(())
    }
}

struct Embedding {
    origin: Vec<f64>,
    // columns of an orthonormal basis
    basis: Vec<Vec<f64>>,
}

impl Embedding {
    fn map(&self, latent: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (coef, col) in latent.iter().zip(&self.basis) {
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi += coef * ci;
            }
        }
        x
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let len = norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Gram-Schmidt on Gaussian columns.
fn orthonormal_basis(rng: &mut ChaCha8Rng, dim: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v = gaussian_vec(rng, dim);
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let len = norm(&v);
        if len > 1e-9 {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    basis
}

fn add_noise(rng: &mut ChaCha8Rng, x: &mut [f64], noise: f64) {
    if noise > 0.0 {
        let per_coord = noise / (x.len() as f64).sqrt();
        for xi in x.iter_mut() {
            *xi += per_coord * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Uniform sample from the disc of the given radius in `latent_dim` dims.
fn uniform_in_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    let dir = unit_vector(rng, n);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|d| d * r).collect()
}

fn distractor_frame(rng: &mut ChaCha8Rng, clusters: &[Embedding], spec: &SynthSpec) -> Vec<f64> {
    let c = &clusters[rng.random_range(0..clusters.len())];
    let u = uniform_in_ball(rng, 2, spec.distractor_spread);
    let mut x = c.map(&u);
    add_noise(rng, &mut x, spec.noise);
    x
}

/// Generates a labeled stream, deterministic in `spec.seed`.
///
/// The output is normalized to unit maximum norm.
pub fn synth_stream(spec: &SynthSpec) -> Result<LabeledStream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.latent_dim;

    let start_dir = unit_vector(&mut rng, spec.dim);
    let target = Embedding {
        origin: start_dir.iter().map(|d| d * spec.start_offset).collect(),
        basis: orthonormal_basis(&mut rng, spec.dim, m),
    };

    let clusters: Vec<Embedding> = if spec.interleave {
        (0..spec.distractor_clusters)
            .map(|_| {
                let dir = unit_vector(&mut rng, spec.dim);
                let dist = spec.distractor_min_distance
                    + (spec.distractor_max_distance - spec.distractor_min_distance)
                        * rng.random::<f64>();
                let origin = target
                    .origin
                    .iter()
                    .zip(&dir)
                    .map(|(o, d)| o + dist * d)
                    .collect();
                Embedding {
                    origin,
                    basis: orthonormal_basis(&mut rng, spec.dim, 2),
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut anchor = target.map(&vec![0.0; m]);
    add_noise(&mut rng, &mut anchor, spec.noise);

    let mut z = vec![0.0; m];
    let mut v: Vec<f64> = unit_vector(&mut rng, m)
        .into_iter()
        .map(|c| c * spec.drift)
        .collect();
    let kick = (1.0 - spec.smoothness * spec.smoothness).sqrt() * spec.drift / (m as f64).sqrt();

    let per_step = if spec.interleave { 2 } else { 1 };
    let mut records = Vec::with_capacity(spec.n_steps * per_step);
    let mut t = 0u64;
    let mut push = |vector: Vec<f64>, label: i64| -> Result<()> {
        records.push(StreamRecord {
            t,
            vector: FeatureVector::new(vector)?,
            label,
        });
        t += 1;
        Ok(())
    };

    let mut path: Vec<Vec<f64>> = Vec::with_capacity(spec.loop_period);
    for step in 0..spec.n_steps {
        if spec.loop_period > 0 && step >= spec.loop_period {
            let mut x = target.map(&path[step % spec.loop_period]);
            add_noise(&mut rng, &mut x, spec.noise);
            push(x, TARGET_LABEL)?;
            if spec.interleave {
                push(distractor_frame(&mut rng, &clusters, spec), DISTRACTOR_LABEL)?;
            }
            continue;
        }
        let g = gaussian_vec(&mut rng, m);
        for (vi, gi) in v.iter_mut().zip(&g) {
            *vi = spec.smoothness * *vi + kick * gi;
        }
        let mut next: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + b).collect();
        if norm(&next) > spec.manifold_radius {
            v.iter_mut().for_each(|vi| *vi = -*vi);
            next = z.iter().zip(&v).map(|(a, b)| a + b).collect();
            let len = norm(&next);
            if len > spec.manifold_radius {
                next.iter_mut().for_each(|c| *c *= spec.manifold_radius / len);
            }
        }
        z = next;
        if spec.loop_period > 0 {
            path.push(z.clone());
        }
        let mut x = target.map(&z);
        add_noise(&mut rng, &mut x, spec.noise);
        push(x, TARGET_LABEL)?;

        if spec.interleave {
            push(distractor_frame(&mut rng, &clusters, spec), DISTRACTOR_LABEL)?;
        }
    }

    LabeledStream {
        anchor: FeatureVector::new(anchor)?,
        anchor_label: TARGET_LABEL,
        records,
        scale: NormScale::identity(),
    }
    .normalized()
}
