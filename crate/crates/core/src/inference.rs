//! Identity inference by absorbing random walks.
//!
//! The representatives and the labeled anchor form a complete graph with
//! Gaussian edge weights. A walk started at a representative moves to a
//! neighbor with probability proportional to the edge weight, and is absorbed
//! either at the anchor or at an implicit sink joined to every representative
//! by an edge of weight `gamma`. The probability of reaching the anchor first
//! solves `(L_uu + gamma I) f = W_ul`.

use crate::config::OmtConfig;
use crate::error::{OmtError, Result};
use crate::features::{gaussian_weight_sq, squared_distance, FeatureVector};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::quantizer::CoverState;

/// Similarity graph over the representatives plus the anchor.
///
/// The anchor is the last vertex. The diagonal of `weights` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    weights: DenseMatrix,
    degrees: Vec<f64>,
}

impl SimilarityGraph {
    /// Builds the graph from representatives and anchor with heat parameter
    /// `sigma`.
    pub fn build(cover: &CoverState, anchor: &FeatureVector, sigma: f64) -> Result<Self> {
        if cover.is_empty() {
            return Err(OmtError::EmptyCover);
        }
        let mut points: Vec<&[f64]> = cover
            .representatives()
            .iter()
            .map(|r| r.vector.as_slice())
            .collect();
        for p in &points {
            if p.len() != anchor.dim() {
                return Err(OmtError::DimensionMismatch {
                    expected: anchor.dim(),
                    found: p.len(),
                });
            }
        }
        points.push(anchor.as_slice());
        Ok(Self::from_points(&points, sigma))
    }

    fn from_points(points: &[&[f64]], sigma: f64) -> Self {
        let n = points.len();
        let mut weights = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..i {
                let w = gaussian_weight_sq(squared_distance(points[i], points[j]), sigma);
                weights.set(i, j, w);
                weights.set(j, i, w);
            }
        }
        Self::with_weights(weights)
    }

    /// Wraps an explicit weight matrix; the last vertex is the anchor.
    ///
    /// The matrix must be symmetric, nonnegative, finite and have at least two
    /// vertices. The diagonal is cleared.
    pub fn from_weights(mut weights: DenseMatrix) -> Result<Self> {
        let n = weights.size();
        if n < 2 {
            return Err(OmtError::InvalidConfig(
                "a similarity graph needs at least one unlabeled vertex and the anchor".into(),
            ));
        }
        for i in 0..n {
            weights.set(i, i, 0.0);
            for j in 0..n {
                let w = weights.get(i, j);
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(OmtError::InvalidConfig(format!(
                        "edge weight ({i}, {j}) = {w} is not a finite nonnegative number"
                    )));
                }
            }
        }
        if !weights.is_symmetric() {
            return Err(OmtError::InvalidConfig("weight matrix is not symmetric".into()));
        }
        Ok(Self::with_weights(weights))
    }

    fn with_weights(weights: DenseMatrix) -> Self {
        let degrees = (0..weights.size())
            .map(|i| weights.row(i).iter().sum())
            .collect();
        SimilarityGraph { weights, degrees }
    }

    /// Number of vertices, representatives plus the anchor.
    pub fn size(&self) -> usize {
        self.weights.size()
    }

    pub fn labeled_index(&self) -> usize {
        self.size() - 1
    }

    pub fn unlabeled_count(&self) -> usize {
        self.size() - 1
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Combinatorial Laplacian `D - W`.
    pub fn laplacian(&self) -> DenseMatrix {
        let n = self.size();
        let mut l = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j {
                    self.degrees[i]
                } else {
                    -self.weights.get(i, j)
                };
                l.set(i, j, v);
            }
        }
        l
    }
}

/// Probability, per representative, that the walk reaches the anchor before
/// the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionScores(Vec<f64>);

impl AbsorptionScores {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.0.get(i).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Solves `(L_uu + gamma I) f = W_ul` by Cholesky.
///
/// With `gamma = 0` and every vertex connected to the anchor the result is
/// all ones; a component cut off from the anchor makes the system singular.
pub fn harmonic_with_sink(graph: &SimilarityGraph, gamma: f64) -> Result<AbsorptionScores> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(OmtError::InvalidConfig(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    let u = graph.unlabeled_count();
    let l = graph.labeled_index();
    let w = graph.weights();
    let mut system = DenseMatrix::zeros(u);
    for i in 0..u {
        for j in 0..i {
            let v = -w.get(i, j);
            system.set(i, j, v);
            system.set(j, i, v);
        }
        system.set(i, i, graph.degrees()[i] + gamma);
    }
    let rhs: Vec<f64> = (0..u).map(|i| w.get(i, l)).collect();
    let f = Cholesky::factor(&system)?.solve(&rhs)?;
    // absorption probabilities; only round-off can leave the unit interval
    Ok(AbsorptionScores(
        f.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    ))
}

/// Per-step output of the recognizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Whether the point fell inside the generalization radius.
    pub gated: bool,
    /// Closest representative, if the point was gated and the cover is not empty.
    pub nearest_index: Option<usize>,
    /// Absorption score used for the decision.
    pub score: Option<f64>,
    pub positive: bool,
}

impl Prediction {
    pub fn ungated() -> Self {
        Prediction {
            gated: false,
            nearest_index: None,
            score: None,
            positive: false,
        }
    }

    /// 0 or 1.
    pub fn label(&self) -> u8 {
        u8::from(self.positive)
    }

    /// Score used for ranking; ungated points rank below everything.
    pub fn ranking_score(&self) -> f64 {
        self.score.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Classifies `x` against the current cover. The cover is not modified.
///
/// A gated query against an empty cover treats `x` itself as the only
/// unlabeled vertex.
pub fn infer_identity(cover: &CoverState, x: &FeatureVector, cfg: &OmtConfig) -> Result<Prediction> {
    x.ensure_dim(cfg.dim())?;
    let d2 = squared_distance(x, &cfg.anchor);
    if d2 > cfg.radius * cfg.radius {
        return Ok(Prediction::ungated());
    }
    let (nearest_index, score) = if cover.is_empty() {
        let w = gaussian_weight_sq(d2, cfg.sigma);
        if w + cfg.gamma == 0.0 {
            return Err(OmtError::Singular {
                index: 0,
                pivot: 0.0,
            });
        }
        (None, w / (w + cfg.gamma))
    } else {
        let graph = SimilarityGraph::build(cover, &cfg.anchor, cfg.sigma)?;
        let scores = harmonic_with_sink(&graph, cfg.gamma)?;
        let (j, _) = cover.nearest_representative(x)?;
        (Some(j), scores.as_slice()[j])
    };
    Ok(Prediction {
        gated: true,
        nearest_index,
        score: Some(score),
        positive: score > cfg.epsilon,
    })
}
