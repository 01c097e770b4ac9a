//! Online k-center clustering with radius doubling.
//!
//! The cover keeps at most `k` stream points (never centroids) that are
//! pairwise farther apart than the cover radius `r`. When a new point would
//! push the cover past `k` members, `r` is doubled and the members are
//! greedily thinned until the budget holds again. Every gated point seen so
//! far stays within `2r` of some member.

use std::io::Write;

use crate::config::OmtConfig;
use crate::error::{OmtError, Result};
use crate::features::{squared_distance, FeatureVector};

/// A stream point retained by the cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    pub stream_index: u64,
    pub vector: FeatureVector,
}

/// What a single quantization step did to the cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// The point lies outside the generalization radius and was ignored.
    Ungated,
    /// The point is within `r` of an existing representative.
    Covered,
    /// The point became a representative; `doublings` counts how many times
    /// the radius doubled to make room for it.
    Inserted { doublings: u32 },
}

impl StepOutcome {
    pub fn is_gated(&self) -> bool {
        !matches!(self, StepOutcome::Ungated)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverState {
    representatives: Vec<Representative>,
    initial_radius: f64,
    doublings: u32,
}

impl CoverState {
    pub fn new(initial_radius: f64) -> Self {
        CoverState {
            representatives: Vec::new(),
            initial_radius,
            doublings: 0,
        }
    }

    /// Rebuilds a cover from saved parts, checking the separation invariant.
    pub fn from_parts(
        representatives: Vec<Representative>,
        initial_radius: f64,
        doublings: u32,
    ) -> Result<Self> {
        if !(initial_radius > 0.0 && initial_radius.is_finite()) {
            return Err(OmtError::InvalidConfig(format!(
                "r0 must be positive, got {initial_radius}"
            )));
        }
        let state = CoverState {
            representatives,
            initial_radius,
            doublings,
        };
        if let Some(first) = state.representatives.first() {
            let dim = first.vector.dim();
            for rep in &state.representatives {
                rep.vector.ensure_dim(dim)?;
            }
        }
        let r2 = state.radius() * state.radius();
        for (i, a) in state.representatives.iter().enumerate() {
            for b in &state.representatives[..i] {
                if squared_distance(&a.vector, &b.vector) <= r2 {
                    return Err(OmtError::InvalidConfig(format!(
                        "representatives {} and {} are within the cover radius",
                        b.stream_index, a.stream_index
                    )));
                }
            }
        }
        Ok(state)
    }

    pub fn representatives(&self) -> &[Representative] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Current cover radius, `r0 * 2^doublings`.
    pub fn radius(&self) -> f64 {
        self.initial_radius * 2f64.powi(self.doublings as i32)
    }

    pub fn initial_radius(&self) -> f64 {
        self.initial_radius
    }

    pub fn doubling_count(&self) -> u32 {
        self.doublings
    }

    /// Feeds one stream point through the gate and the cover update.
    pub fn quantize_step(
        &mut self,
        stream_index: u64,
        x: &FeatureVector,
        cfg: &OmtConfig,
    ) -> Result<StepOutcome> {
        x.ensure_dim(cfg.dim())?;
        let gate = cfg.radius * cfg.radius;
        if squared_distance(x, &cfg.anchor) > gate {
            return Ok(StepOutcome::Ungated);
        }
        let r = self.radius();
        let r2 = r * r;
        if self
            .representatives
            .iter()
            .any(|rep| squared_distance(&rep.vector, x) <= r2)
        {
            return Ok(StepOutcome::Covered);
        }
        self.representatives.push(Representative {
            stream_index,
            vector: x.clone(),
        });
        let mut doublings = 0;
        while self.representatives.len() > cfg.max_representatives {
            self.doublings += 1;
            doublings += 1;
            self.representatives = greedy_repartition(&self.representatives, self.radius());
        }
        Ok(StepOutcome::Inserted { doublings })
    }

    /// Index and distance of the closest representative. Ties go to the
    /// earliest inserted one.
    pub fn nearest_representative(&self, x: &FeatureVector) -> Result<(usize, f64)> {
        let first = self.representatives.first().ok_or(OmtError::EmptyCover)?;
        x.ensure_dim(first.vector.dim())?;
        let mut best = (0, f64::INFINITY);
        for (i, rep) in self.representatives.iter().enumerate() {
            let d2 = squared_distance(&rep.vector, x);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        Ok((best.0, best.1.sqrt()))
    }

    /// Writes `stream_index,x0,x1,...` per representative, insertion order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.representatives.first().map_or(0, |r| r.vector.dim());
        write!(out, "stream_index")?;
        for j in 0..dim {
            write!(out, ",x{j}")?;
        }
        writeln!(out)?;
        for rep in &self.representatives {
            write!(out, "{}", rep.stream_index)?;
            for v in rep.vector.iter() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Greedy thinning: scan in order and keep every representative farther than
/// `r` from all those already kept.
///
/// The result covers the input within `r` and is pairwise separated by more
/// than `r`.
pub fn greedy_repartition(reps: &[Representative], r: f64) -> Vec<Representative> {
    let r2 = r * r;
    let mut kept: Vec<Representative> = Vec::with_capacity(reps.len());
    for rep in reps {
        if kept
            .iter()
            .all(|k| squared_distance(&k.vector, &rep.vector) > r2)
        {
            kept.push(rep.clone());
        }
    }
    kept
}
